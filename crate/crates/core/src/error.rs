use thiserror::Error;

/// Errors raised anywhere in the training and inference pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("row {row}: expected {expected} cells, found {found}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, attribute `{attribute}`: label `{label}` is not in the declared set")]
    UnknownLabel {
        row: usize,
        attribute: String,
        label: String,
    },

    #[error("row {row}, attribute `{attribute}`: `{text}` is not a number")]
    NotNumeric {
        row: usize,
        attribute: String,
        text: String,
    },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("attribute `{0}` is entirely missing")]
    AllMissing(String),

    #[error("decision attribute has missing values (row {0})")]
    MissingDecision(usize),

    #[error("attribute `{0}` is not numeric")]
    NotNumericAttribute(String),

    #[error("attribute `{0}` is not discrete")]
    NotDiscrete(String),

    #[error("object id {0} does not belong to the table")]
    ForeignObject(usize),

    #[error("split fraction {0} is outside (0, 1)")]
    BadFraction(f64),

    #[error("empty table")]
    EmptyTable,

    #[error(
        "exhaustive reduct search over {attributes} attributes exceeds the bound of {bound}; use greedy search"
    )]
    ExhaustiveBound { attributes: usize, bound: usize },

    #[error("rule {rule}: {message}")]
    Rule { rule: usize, message: String },

    #[error("rule selection undefined: evaluation table has a constant decision")]
    ConstantDecision,

    #[error("attribute `{attribute}`: spread {spread} must be positive")]
    Spread { attribute: String, spread: f64 },

    #[error("rule {0} has zero support")]
    ZeroSupport(usize),

    #[error("rule list is empty")]
    NoRules,

    #[error("attribute `{attribute}`: {message}")]
    Input { attribute: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),

    #[error("artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
