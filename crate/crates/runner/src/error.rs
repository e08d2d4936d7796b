use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("line {0}: expected `section.key = value`")]
    Syntax(usize),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("unknown case id `{0}`")]
    UnknownCase(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    MalformedValue { key: String, value: String, reason: String },
    #[error("cannot write reports to {path}: {source}")]
    Unwritable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dzk_core::DzkError),
}

pub type Result<T> = std::result::Result<T, RunnerError>;
