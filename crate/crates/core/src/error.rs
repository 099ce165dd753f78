use thiserror::Error;

/// Errors across graph construction, sampling, analysis and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {index} endpoint out of range: ({from}, {to}) on {n} vertices")]
    EdgeOutOfRange {
        index: usize,
        from: u32,
        to: u32,
        n: usize,
    },

    #[error("degree sums differ: sum(in) = {in_sum}, sum(out) = {out_sum}")]
    DegreeSumMismatch { in_sum: u64, out_sum: u64 },

    #[error("vertex {vertex} has out-degree {degree}, expected 2")]
    OutDegreeNotTwo { vertex: usize, degree: usize },

    #[error("population size must be at least 1")]
    EmptyPopulation,

    #[error("vertex {vertex} out of range on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("root vertex {0} lies in the forbidden set")]
    ForbiddenRoot(usize),

    #[error("pgf argument {0} outside [0, 1]")]
    PgfArgOutOfRange(f64),

    #[error("no root in (0,1): offspring mean {mean}, pmf[0] = {p0}")]
    NoInteriorFixedPoint { mean: f64, p0: f64 },

    #[error("constant undefined at x_star = {0}: requires 1/2 < x_star < 1")]
    SingularFixedPoint(f64),

    #[error("path-length bound needs n >= 3, got {0}")]
    PathBoundDomain(usize),

    #[error("invalid offspring pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),

    #[error("cyclical walk mode requires a graph")]
    MissingGraph,

    #[error("no convergence after {iters} iterations, last residual {residual:.3e}")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("duplicate report key: claim {claim}, n = {n}")]
    DuplicateReportKey { claim: String, n: usize },

    #[error("edge list format: {0}")]
    Format(String),

    #[error("edge count mismatch: header declares {expected}, found {found}")]
    EdgeCountMismatch { expected: usize, found: usize },

    #[error("claim {claim}, n = {n}, replicate {replicate}: {source}")]
    Context {
        claim: String,
        n: usize,
        replicate: u64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps a module error with the (claim, n, replicate) that hit it.
    pub fn in_context(self, claim: &str, n: usize, replicate: u64) -> Self {
        Error::Context {
            claim: claim.to_owned(),
            n,
            replicate,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
