//! Minimal ordered JSON object writer.
//!
//! Summaries need numbers at exactly four decimal places, which a generic
//! serializer will not produce, so objects are assembled field by field.

use crate::fmt4;

#[derive(Debug, Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, key: &str, value: impl Into<String>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn str(self, key: &str, value: &str) -> Self {
        self.raw(key, quote(value))
    }

    pub fn int(self, key: &str, value: impl Into<u64>) -> Self {
        self.raw(key, value.into().to_string())
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        self.raw(key, fmt4(value))
    }

    pub fn opt_num(self, key: &str, value: Option<f64>) -> Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.raw(key, "null"),
        }
    }

    pub fn obj(self, key: &str, value: JsonObject) -> Self {
        self.raw(key, value.render(""))
    }

    /// Renders with two-space indentation; `indent` is the current prefix.
    pub fn render(&self, indent: &str) -> String {
        if self.fields.is_empty() {
            return "{}".to_string();
        }
        let inner = format!("{indent}  ");
        let body: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| {
                // nested objects were rendered at the top level; re-indent
                let v = v.replace('\n', &format!("\n{inner}"));
                format!("{inner}{}: {v}", quote(k))
            })
            .collect();
        format!("{{\n{}\n{indent}}}", body.join(",\n"))
    }
}

pub fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn array(items: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_rendering_is_valid_json() {
        let o = JsonObject::new()
            .str("name", "a\"b")
            .num("x", 0.22598)
            .opt_num("y", None)
            .obj("inner", JsonObject::new().int("n", 3u32).raw("list", array(["1".into(), "2".into()])));
        let text = o.render("");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["name"], "a\"b");
        assert_eq!(v["inner"]["n"], 3);
        assert!(text.contains("\"x\": 0.2260"));
    }
}
