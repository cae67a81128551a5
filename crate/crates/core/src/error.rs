use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parity error: chirality needs an even dimension, got {0}")]
    Parity(usize),

    #[error("ambiguous rank: singular values {values:?} lie within a factor 10 of threshold {threshold:e}")]
    GapAmbiguity { threshold: f64, values: Vec<f64> },

    #[error("operator is not self-adjoint (residual {residual:e})")]
    Symmetry { residual: f64 },

    #[error("heat trace has imaginary part {imag:e}; the endomorphism is wrongly built")]
    Convention { imag: f64 },

    #[error("diagram error: {0}")]
    Diagram(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("lift inconsistency: {0}")]
    LiftInconsistency(String),

    #[error("splitting inconsistency: D leaks out of the opposite eigenspace (residual {residual:e})")]
    SplittingConsistency { residual: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("transfer operator overflow: exponent {exponent:.1} too large; shorten the interval or rescale D_Y")]
    Scaling { exponent: f64 },

    #[error("invalid boundary problem: {0}")]
    InvalidProblem(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap with a pipeline stage label.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
