use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No observation falls inside the kernel window around `t`.
    #[error("no observations within bandwidth {bandwidth} of t = {t}")]
    NoSupport { t: f64, bandwidth: f64 },

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    /// A graph invariant was violated (e.g. an unreachable node).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("curve {id}: {source}")]
    Curve {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_curve(self, id: &str) -> Self {
        Error::Curve {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
