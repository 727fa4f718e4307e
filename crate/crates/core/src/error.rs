use thiserror::Error;

use crate::group::Group;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch: {left} vs {right}")]
    GroupMismatch { left: Group, right: Group },

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("Hausdorff distance of an empty point set")]
    EmptySet,

    #[error("point {coords:?} is not an entry of the user table")]
    TableLookup { coords: Vec<f64> },

    #[error("base metric {metric} is not defined on {group}")]
    MetricGroup { metric: &'static str, group: Group },

    #[error(
        "translate of grid point {point} (coords {coords:?}) by generator {generator} leaves the \
         padded window; enlarge the padding"
    )]
    Truncation {
        point: usize,
        coords: Vec<f64>,
        generator: usize,
    },

    #[error("point {coords:?} lies outside the sampled window")]
    OutOfWindow { coords: Vec<f64> },

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("generator set has no isotropy certificate; run check_isotropy_trivial first")]
    MissingCertificate,

    #[error("isotropy subgroup is nontrivial: generator {witness} permutes the set")]
    NontrivialIsotropy { witness: usize },

    #[error("basis is not bracket generating: closure has dimension {dimension} of {expected}")]
    NotBracketGenerating { dimension: usize, expected: usize },

    #[error("the [-2,2]-scaled basis box leaves the injectivity window of exp on {group}")]
    InjectivityWindow { group: Group },

    #[error("fields are sampled on different grids")]
    GridMismatch,

    #[error(
        "iterate {iteration} decreased at core pair ({i}, {j}): {before} -> {after} \
         (slack {slack})"
    )]
    Monotonicity {
        iteration: usize,
        i: usize,
        j: usize,
        before: f64,
        after: f64,
        slack: f64,
    },

    #[error("word cloud exceeded the cap of {cap} points at depth {depth}")]
    CloudTooLarge { cap: usize, depth: usize },

    #[error(
        "right-invariant envelope is infinite: difference quotients blow up along basis \
         direction {direction}"
    )]
    EnvelopeInfinite { direction: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
