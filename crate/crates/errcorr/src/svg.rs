//! Heatmap of pairwise z-scores as a standalone SVG.
//!
//! Rows and columns follow the order passed in (normally the dendrogram
//! leaf order). Colours ramp linearly from the smallest to the largest
//! z present; missing pairs are grey and the diagonal is left blank.

use std::fmt::Write as _;

use errcorr_core::pairstats::ZScores;

use crate::fmt4;

const CELL: usize = 16;
const CHAR_W: usize = 7;
const LOW: [f64; 3] = [247.0, 251.0, 255.0];
const HIGH: [f64; 3] = [8.0, 48.0, 107.0];
const NA_FILL: &str = "#cccccc";
const LEGEND_STEPS: usize = 50;
const LEGEND_TICKS: usize = 5;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c: Vec<u8> = LOW
        .iter()
        .zip(HIGH)
        .map(|(lo, hi)| (lo + (hi - lo) * t).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Renders the heatmap with rows and columns in `order`.
pub fn heatmap_svg(z: &ZScores, order: &[usize]) -> String {
    let labels = z.labels();
    let n = order.len();
    let present: Vec<f64> = (0..labels.len())
        .flat_map(|i| (i + 1..labels.len()).filter_map(move |j| z.get(i, j)))
        .collect();
    let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if present.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };

    let label_w = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0) * CHAR_W + 10;
    let grid = n * CELL;
    let legend_x = label_w + grid + 20;
    let legend_h = grid.max(100);
    let width = legend_x + 20 + 90;
    let height = label_w + legend_h + 10;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>");

    for (r, &i) in order.iter().enumerate() {
        let y = label_w + r * CELL + CELL - 4;
        let _ = writeln!(
            s,
            "<text class=\"row-label\" x=\"{}\" y=\"{y}\" text-anchor=\"end\">{}</text>",
            label_w - 4,
            escape(&labels[i])
        );
    }
    for (c, &j) in order.iter().enumerate() {
        let x = label_w + c * CELL + CELL - 4;
        let y = label_w - 4;
        let _ = writeln!(
            s,
            "<text class=\"col-label\" x=\"{x}\" y=\"{y}\" transform=\"rotate(-90 {x} {y})\">{}</text>",
            escape(&labels[j])
        );
    }
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            if i == j {
                continue;
            }
            let (x, y) = (label_w + c * CELL, label_w + r * CELL);
            let (fill, value) = match z.get(i, j) {
                Some(v) => (ramp(scale(v)), fmt4(v)),
                None => (NA_FILL.to_string(), "NA".to_string()),
            };
            let _ = writeln!(
                s,
                "<rect class=\"cell\" data-row=\"{}\" data-col=\"{}\" x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\"><title>{} / {}: {value}</title></rect>",
                escape(&labels[i]),
                escape(&labels[j]),
                escape(&labels[i]),
                escape(&labels[j]),
            );
        }
    }

    // legend: high at the top
    let top = label_w;
    for step in 0..LEGEND_STEPS {
        let y0 = top + step * legend_h / LEGEND_STEPS;
        let y1 = top + (step + 1) * legend_h / LEGEND_STEPS;
        let t = 1.0 - (step as f64 + 0.5) / LEGEND_STEPS as f64;
        let _ = writeln!(
            s,
            "<rect class=\"legend\" x=\"{legend_x}\" y=\"{y0}\" width=\"20\" height=\"{}\" fill=\"{}\"/>",
            y1 - y0,
            ramp(t)
        );
    }
    for tick in 0..LEGEND_TICKS {
        let frac = tick as f64 / (LEGEND_TICKS - 1) as f64;
        let value = lo + (hi - lo) * frac;
        let y = top + ((1.0 - frac) * legend_h as f64).round() as usize;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#000000\"/><text class=\"tick\" x=\"{}\" y=\"{}\">{}</text>",
            legend_x + 20,
            legend_x + 24,
            legend_x + 26,
            y + 4,
            fmt4(value)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Row labels in the order they appear in a heatmap produced above.
pub fn row_labels(svg: &str) -> Vec<String> {
    svg.lines()
        .filter_map(|l| l.strip_prefix("<text class=\"row-label\""))
        .filter_map(|l| {
            let start = l.find('>')? + 1;
            let end = l.rfind("</text>")?;
            Some(unescape(&l[start..end]))
        })
        .collect()
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}
