use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Malformed` is reserved for structurally bad input (ragged matrices,
/// non-positive entries, missing anchors) and is distinct from a semantic
/// rejection, which is reported as data (see [`crate::verify::CoverageReport`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("removal count {requested} exceeds the maximum {max} for n={n}, d={d}")]
    BoundExceeded {
        requested: usize,
        max: usize,
        n: usize,
        d: usize,
    },

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("plan is stale: {0}")]
    PlanStale(String),

    #[error("no consistent extension: {0}")]
    InfeasibleExtension(String),

    #[error("graph is not Eulerian: balanced={balanced}, strongly connected={strongly_connected}")]
    NotEulerian {
        balanced: bool,
        strongly_connected: bool,
    },

    #[error("post-removal check failed: balanced={balanced}, strongly connected={strongly_connected}, exact cover={exact_cover}: {detail}")]
    RemovalCheck {
        balanced: bool,
        strongly_connected: bool,
        exact_cover: bool,
        detail: String,
    },

    #[error("internal consistency violation: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
