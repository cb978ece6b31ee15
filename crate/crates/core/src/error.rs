use thiserror::Error;

/// Pipeline stage a failure originated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Map,
    Pushforward,
    Cauchy,
    Potential,
    BoundaryTransfer,
    Harmonic,
    Conjugate,
    Compose,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Map => "mu-conformal map",
            Stage::Pushforward => "source pushforward",
            Stage::Cauchy => "cauchy transform",
            Stage::Potential => "logarithmic potential",
            Stage::BoundaryTransfer => "boundary transfer",
            Stage::Harmonic => "harmonic dirichlet solve",
            Stage::Conjugate => "harmonic conjugate",
            Stage::Compose => "composition",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("ellipticity bound violated: |mu| = {modulus} >= 1 at ({x}, {y})")]
    Ellipticity { x: f64, y: f64, modulus: f64 },

    #[error("{operator}: support reaches within {distance} of the box edge (margin {margin} required)")]
    Margin {
        operator: &'static str,
        distance: f64,
        margin: f64,
    },

    #[error("fixed-point iteration is not a contraction (k_max = {k_max})")]
    NonContraction { k_max: f64 },

    #[error("iteration cap of {iterations} reached (last change {last_change:e})")]
    IterationCap { iterations: usize, last_change: f64 },

    #[error("point ({re}, {im}) lies outside the numerical image")]
    OutsideImage { re: f64, im: f64 },

    #[error("newton inversion did not converge (residual {residual:e})")]
    NewtonFailure { residual: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid matrix field: {0}")]
    InvalidMatrix(String),

    #[error("loop residual {residual:e} exceeds tolerance {tolerance:e}")]
    LoopResidual { residual: f64, tolerance: f64 },

    #[error("criterion evaluation failed: {0}")]
    Criterion(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_stage(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn config(message: impl Into<String>) -> Error {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
