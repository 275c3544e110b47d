use qmetric::charts::ChartError;
use qmetric::curvature::CurvatureError;
use qmetric::dsl::DefinitionError;
use qmetric::metric::MetricError;
use qmetric::states::StateError;
use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }
}

trait Numerical {
    fn is_numerical(&self) -> bool;
}

impl Numerical for StateError {
    fn is_numerical(&self) -> bool {
        matches!(self, StateError::Eval(_) | StateError::ZeroNorm)
    }
}

impl Numerical for ChartError {
    fn is_numerical(&self) -> bool {
        matches!(
            self,
            ChartError::Eval(_)
                | ChartError::NotSymmetric { .. }
                | ChartError::NonFinite
                | ChartError::RankDeficient { .. }
                | ChartError::NonReal { .. }
        )
    }
}

impl Numerical for MetricError {
    fn is_numerical(&self) -> bool {
        match self {
            MetricError::State(e) => e.is_numerical(),
            MetricError::Chart(e) => e.is_numerical(),
            MetricError::ZeroNorm | MetricError::NonFinite { .. } | MetricError::NotDiagonal { .. } => true,
            MetricError::BadSpeed(_) | MetricError::Dimension { .. } | MetricError::BadPair { .. } => false,
        }
    }
}

impl Numerical for CurvatureError {
    fn is_numerical(&self) -> bool {
        match self {
            CurvatureError::Chart(e) => e.is_numerical(),
            CurvatureError::Metric(e) => e.is_numerical(),
            CurvatureError::Singular { .. } => true,
            _ => false,
        }
    }
}

fn classify<E: Numerical + std::fmt::Display>(e: E) -> CliError {
    if e.is_numerical() {
        CliError::Numerical(e.to_string())
    } else {
        CliError::Config(e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        classify(e)
    }
}

impl From<ChartError> for CliError {
    fn from(e: ChartError) -> Self {
        classify(e)
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        classify(e)
    }
}

impl From<CurvatureError> for CliError {
    fn from(e: CurvatureError) -> Self {
        classify(e)
    }
}

impl From<DefinitionError> for CliError {
    fn from(e: DefinitionError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<qmetric::DomainError> for CliError {
    fn from(e: qmetric::DomainError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<qmetric::diff::SchemeError> for CliError {
    fn from(e: qmetric::diff::SchemeError) -> Self {
        CliError::Config(e.to_string())
    }
}
