use thiserror::Error;

/// Errors produced by jet arithmetic, constructions and measurements.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("base point mismatch: {0}")]
    BaseMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation not supported in exact-rational mode: {0}")]
    ExactModeUnsupported(&'static str),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("division by zero in scalar arithmetic")]
    DivisionByZero,

    #[error("jacobian singular at the requested point")]
    SingularJacobian,

    #[error("injectivity certificate failed: min(1 + d phi/dx_m) = {min}")]
    Injectivity { min: f64 },

    #[error("tiling constraint violated: {0}")]
    Tiling(String),

    #[error("support margin violated: {0}")]
    SupportMargin(String),

    #[error("angle {angle} exceeds the admissible bound {bound}")]
    AngleTooLarge { angle: f64, bound: f64 },

    #[error("gluing residual {residual} above tolerance {tol}")]
    GluingResidual { residual: f64, tol: f64 },

    #[error("root solve failed to converge: {0}")]
    RootSolve(String),

    #[error("grid resolution below the declared minimum: {0}")]
    GridTooCoarse(String),

    #[error("hyperplane field variation too large on cube {cube:?}: {angle} >= {bound}")]
    FieldVariation {
        cube: Vec<i64>,
        angle: f64,
        bound: f64,
    },

    #[error("recursion depth exceeded in order reduction")]
    RecursionDepth,

    #[error("problem size beyond the supported desk scale: {0}")]
    DeskScale(String),

    #[error("stage {stage} of the induction failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
