use thiserror::Error;

/// Named subsets of the plane sections x = 0 and y = 0 where some harmonic is singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SingularSet {
    K1,
    L1,
    M1,
    K2,
    L2,
    M2,
}

impl std::fmt::Display for SingularSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SingularSet::K1 => "K1",
            SingularSet::L1 => "L1",
            SingularSet::M1 => "M1",
            SingularSet::K2 => "K2",
            SingularSet::L2 => "L2",
            SingularSet::M2 => "M2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("coordinates are not interlaced: {0}")]
    NotInterlaced(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),
    #[error("evaluation at singular point s = {0}")]
    SingularPoint(f64),
    #[error("s = {s} lies outside the trust radius {radius} of the series at a{center}")]
    OutOfTrustRadius { center: usize, s: f64, radius: f64 },
    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),
    #[error("states at different abscissae ({0} vs {1})")]
    MismatchedAbscissae(f64, f64),
    #[error("degenerate connection: a = {a}, b = {b}")]
    DegenerateConnection { a: f64, b: f64 },
    #[error("recurrence breakdown at order {0}")]
    RecurrenceBreakdown(usize),
    #[error("zero count unresolved after {0} nodes")]
    UnresolvedZeros(usize),
    #[error("no eigenvalue found: {0}")]
    NotFound(String),
    #[error("zero counts {found:?} differ from target {target:?}")]
    WrongZeroCount {
        target: [usize; 2],
        found: [usize; 2],
    },
    #[error("middle solution is doubly Frobenius (mismatch {0:e})")]
    DegenerateMiddle(f64),
    #[error("point lies on the singular set {0}")]
    SingularSurface(SingularSet),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("normalization integral is not positive: {0}")]
    NormalizationNonPositive(f64),
    #[error("no expansion case applies")]
    InapplicableCase,
    #[error("missing catalog record {0}")]
    MissingRecord(String),
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("{key}: {source}")]
    AtRecord { key: String, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of an iterative solver, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        if let Error::AtRecord { source, .. } = self {
            return source.is_solver_failure();
        }
        matches!(
            self,
            Error::StepUnderflow(_)
                | Error::DegenerateConnection { .. }
                | Error::RecurrenceBreakdown(_)
                | Error::UnresolvedZeros(_)
                | Error::NotFound(_)
                | Error::WrongZeroCount { .. }
                | Error::DegenerateMiddle(_)
                | Error::Quadrature(_)
                | Error::NormalizationNonPositive(_)
        )
    }
}

impl Error {
    pub fn at_record(self, key: impl std::fmt::Display) -> Error {
        Error::AtRecord {
            key: key.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
