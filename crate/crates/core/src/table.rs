//! Response records and the dense model × question answer matrix.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// What a model answered on one question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selection {
    /// An option index in `[0, k)`.
    Chosen(u32),
    /// A recorded non-answer (unparseable or empty model output).
    Abstain,
}

impl Selection {
    pub fn chosen(self) -> Option<u32> {
        match self {
            Selection::Chosen(o) => Some(o),
            Selection::Abstain => None,
        }
    }
}

impl From<Option<u32>> for Selection {
    fn from(value: Option<u32>) -> Self {
        value.map_or(Selection::Abstain, Selection::Chosen)
    }
}

/// One cell of an [`EvalTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Cell {
    /// No record exists for this (model, question).
    #[default]
    Missing,
    Abstain,
    Chosen(u32),
}

impl Cell {
    pub fn chosen(self) -> Option<u32> {
        match self {
            Cell::Chosen(o) => Some(o),
            _ => None,
        }
    }
}

impl From<Selection> for Cell {
    fn from(s: Selection) -> Self {
        match s {
            Selection::Chosen(o) => Cell::Chosen(o),
            Selection::Abstain => Cell::Abstain,
        }
    }
}

/// One model's answer to one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseRecord {
    pub model: String,
    pub question: String,
    /// Number of options offered.
    pub k: u32,
    pub selected: Selection,
    pub correct: u32,
}

impl ResponseRecord {
    pub fn new(
        model: impl Into<String>,
        question: impl Into<String>,
        k: u32,
        selected: impl Into<Selection>,
        correct: u32,
    ) -> Self {
        ResponseRecord {
            model: model.into(),
            question: question.into(),
            k,
            selected: selected.into(),
            correct,
        }
    }

    /// Checks the per-record field ranges.
    pub fn check(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidRecord(alloc::format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.correct >= self.k {
            return Err(Error::InvalidRecord(alloc::format!(
                "correct = {} is out of range for k = {}",
                self.correct, self.k
            )));
        }
        if let Selection::Chosen(o) = self.selected {
            if o >= self.k {
                return Err(Error::InvalidRecord(alloc::format!(
                    "selected = {} is out of range for k = {}",
                    o, self.k
                )));
            }
        }
        Ok(())
    }
}

/// A question with its option count and answer key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub k: u32,
    pub correct: u32,
}

/// Dense model × question answer matrix.
///
/// Models and questions are ordered by first appearance. The table also
/// remembers the order in which cells were inserted so that writing it back
/// out reproduces the same model and question orderings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalTable {
    models: Vec<String>,
    questions: Vec<Question>,
    // row-major, models.len() × questions.len()
    cells: Vec<Cell>,
    insertion: Vec<(u32, u32)>,
    model_index: BTreeMap<String, usize>,
    question_index: BTreeMap<String, usize>,
}

impl EvalTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a table from records, in order.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = ResponseRecord>,
    {
        let mut builder = TableBuilder::new();
        for r in records {
            builder.push(r)?;
        }
        Ok(builder.finish())
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn model_index(&self, model: &str) -> Option<usize> {
        self.model_index.get(model).copied()
    }

    pub fn question_index(&self, question: &str) -> Option<usize> {
        self.question_index.get(question).copied()
    }

    pub fn cell(&self, model: usize, question: usize) -> Cell {
        self.cells[model * self.questions.len() + question]
    }

    /// The answers of one model, in question order.
    pub fn row(&self, model: usize) -> &[Cell] {
        let n = self.questions.len();
        &self.cells[model * n..(model + 1) * n]
    }

    /// Number of non-missing cells.
    pub fn n_records(&self) -> usize {
        self.insertion.len()
    }

    /// Present cells as records, in insertion order.
    pub fn records(&self) -> impl Iterator<Item = ResponseRecord> + '_ {
        self.insertion.iter().map(move |&(m, q)| {
            let (m, q) = (m as usize, q as usize);
            let question = &self.questions[q];
            let selected = match self.cell(m, q) {
                Cell::Chosen(o) => Selection::Chosen(o),
                Cell::Abstain => Selection::Abstain,
                Cell::Missing => unreachable!("insertion log points at a missing cell"),
            };
            ResponseRecord {
                model: self.models[m].clone(),
                question: question.id.clone(),
                k: question.k,
                selected,
                correct: question.correct,
            }
        })
    }

    /// Summarises the table without modifying it.
    pub fn validate(&self) -> ValidationReport {
        let mut k_histogram = BTreeMap::new();
        for q in &self.questions {
            *k_histogram.entry(q.k).or_insert(0usize) += 1;
        }
        let abstain_count = self.cells.iter().filter(|c| **c == Cell::Abstain).count();
        let missing_count = self.cells.iter().filter(|c| **c == Cell::Missing).count();
        ValidationReport {
            models: self.models.clone(),
            n_questions: self.questions.len(),
            k_histogram,
            answered_count: self.cells.len() - abstain_count - missing_count,
            abstain_count,
            missing_count,
        }
    }
}

/// Incremental, validating constructor for [`EvalTable`].
#[derive(Debug, Default)]
pub struct TableBuilder {
    models: Vec<String>,
    questions: Vec<Question>,
    model_index: BTreeMap<String, usize>,
    question_index: BTreeMap<String, usize>,
    entries: BTreeMap<(u32, u32), Selection>,
    insertion: Vec<(u32, u32)>,
}

impl TableBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one record. On error the builder is left unchanged.
    pub fn push(&mut self, record: ResponseRecord) -> Result<()> {
        record.check()?;
        let q = match self.question_index.get(&record.question) {
            Some(&q) => {
                let seen = &self.questions[q];
                if seen.k != record.k || seen.correct != record.correct {
                    return Err(Error::ConflictingKey {
                        question: record.question,
                        k_seen: seen.k,
                        correct_seen: seen.correct,
                        k: record.k,
                        correct: record.correct,
                    });
                }
                Some(q)
            }
            None => None,
        };
        let m = self.model_index.get(&record.model).copied();
        if let (Some(m), Some(q)) = (m, q) {
            if self.entries.contains_key(&(m as u32, q as u32)) {
                return Err(Error::DuplicateCell {
                    model: record.model,
                    question: record.question,
                });
            }
        }
        let m = m.unwrap_or_else(|| {
            self.models.push(record.model.clone());
            self.model_index.insert(record.model, self.models.len() - 1);
            self.models.len() - 1
        });
        let q = q.unwrap_or_else(|| {
            self.questions.push(Question {
                id: record.question.clone(),
                k: record.k,
                correct: record.correct,
            });
            self.question_index
                .insert(record.question, self.questions.len() - 1);
            self.questions.len() - 1
        });
        let key = (m as u32, q as u32);
        self.entries.insert(key, record.selected);
        self.insertion.push(key);
        Ok(())
    }

    pub fn finish(self) -> EvalTable {
        let n_q = self.questions.len();
        let mut cells = alloc::vec![Cell::Missing; self.models.len() * n_q];
        for (&(m, q), &sel) in &self.entries {
            cells[m as usize * n_q + q as usize] = sel.into();
        }
        EvalTable {
            models: self.models,
            questions: self.questions,
            cells,
            insertion: self.insertion,
            model_index: self.model_index,
            question_index: self.question_index,
        }
    }
}

/// Read-only summary of an [`EvalTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub models: Vec<String>,
    pub n_questions: usize,
    /// Number of questions per option count.
    pub k_histogram: BTreeMap<u32, usize>,
    pub answered_count: usize,
    pub abstain_count: usize,
    pub missing_count: usize,
}
