use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("question `{question}` has conflicting k/correct: ({k_seen}, {correct_seen}) vs ({k}, {correct})")]
    ConflictingKey {
        question: String,
        k_seen: u32,
        correct_seen: u32,
        k: u32,
        correct: u32,
    },
    #[error("duplicate cell for model `{model}`, question `{question}`")]
    DuplicateCell { model: String, question: String },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid option count k = {0}")]
    InvalidK(u64),
    #[error("models `{0}` and `{1}` share no common errors")]
    NoCommonErrors(String, String),
    #[error("null variance is zero for models `{0}` and `{1}` (every common error has k = 2)")]
    DegenerateVariance(String, String),
    #[error("need at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("need at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("no z-score for pair (`{0}`, `{1}`)")]
    MissingPair(String, String),
    #[error("invalid count: {0}")]
    InvalidCount(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("input is empty")]
    EmptyInput,
    #[error("trials for problem `{problem}` disagree on k ({expected} vs {found})")]
    InconsistentK {
        problem: String,
        expected: u32,
        found: u32,
    },
    #[error("histogram has no counts")]
    EmptyHistogram,
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(&'static str),
    #[error("invalid dendrogram: {0}")]
    InvalidDendrogram(&'static str),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(&'static str),
}
