use std::path::PathBuf;

use thiserror::Error;

use crate::index::TrailEntry;

/// Every failure the engines can report.
///
/// Variants carry enough context (node indices, patch ids, trails) to
/// reproduce the failing instance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H*| = {asymmetry:.3e} exceeds {tolerance:.1e}")]
    SymmetryViolation { asymmetry: f64, tolerance: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("function undefined at eigenvalue {eigenvalue}")]
    DomainViolation { eigenvalue: f64 },

    #[error("eigenvalue {eigenvalue} lies within {tolerance:.1e} of the interval endpoint {endpoint}")]
    IllConditionedCut { eigenvalue: f64, endpoint: f64, tolerance: f64 },

    #[error("decomposition failed to converge: {0}")]
    Convergence(String),

    #[error("unknown family: {0}")]
    UnknownFamily(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid family: {0}")]
    Family(String),

    #[error("cover bound violated on patch {patch}: {reason}")]
    CoverViolation { patch: usize, reason: String },

    #[error("rescaling factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("smoothing too coarse: relative perturbation {measured:.3} at node {node} leaves the 1/2 ball, use a smaller width")]
    SmoothingTooCoarse { node: usize, measured: f64 },

    #[error("boundary kind {boundary} does not match grid kind {grid}")]
    BoundaryMismatch { boundary: String, grid: String },

    #[error("ends are not constant (node {node}); run make_constant_ends first")]
    NonConstantEnds { node: usize },

    #[error("local model operator on patch {patch} is numerically singular")]
    InvertibilityFailure { patch: usize },

    #[error("endpoint {node} is not invertible: min singular value {sigma:.3e}")]
    EndpointNotInvertible { node: usize, sigma: f64 },

    #[error("segment refinement exceeded depth {depth} near segment {segment}")]
    ResolutionFailure { segment: usize, depth: usize },

    #[error("ambiguous kernel: best singular-value gap ratio {best_ratio:.3e} below {required:.0}; refine the grid or lengthen the ends")]
    AmbiguousKernel { best_ratio: f64, required: f64 },

    #[error("ambiguous localization: near-null vector has interior weight {weight:.3}")]
    AmbiguousLocalization { weight: f64 },

    #[error("index did not stabilize along the ladder: {trail:?}")]
    NonConvergence { trail: Vec<TrailEntry> },

    #[error("ladder must have decreasing spacing and increasing cylinder length")]
    LadderOrder,

    #[error("not a grading: {0}")]
    NotAGrading(String),

    #[error("relative index precondition: {0}")]
    CollarMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax { line: usize, column: usize, message: String },

    #[error("config error at `{key}`: {message}")]
    ConfigSemantic { key: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
