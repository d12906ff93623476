//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Every failure mode of the crate. Validation errors name the violated
/// condition and the offending indices so reports can be acted on.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    // -- metric spaces ------------------------------------------------------
    /// Two points carry the same label.
    DuplicateLabel { label: String },
    /// Labels are I/O keys: they must be nonempty and free of separator
    /// characters (commas, newlines; semicolons for universe elements).
    InvalidLabel { label: String, reason: &'static str },
    /// Distance matrix is not square or does not match the label count.
    MatrixShape {
        points: usize,
        rows: usize,
        row: usize,
        cols: usize,
    },
    /// dist[i][i] must be exactly zero.
    DiagonalNotZero { i: usize, value: f64 },
    /// dist[i][j] must be finite and strictly positive for i != j.
    DistanceNotPositive { i: usize, j: usize, value: f64 },
    /// dist[i][j] and dist[j][i] differ beyond tolerance.
    NotSymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    /// dist[i][k] exceeds dist[i][j] + dist[j][k] beyond tolerance.
    TriangleInequality {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        via: f64,
    },
    /// Operation needs more points than the space provides.
    TooFewPoints { needed: usize, got: usize },
    /// Power-set construction beyond the enumerable universe cap.
    UniverseTooLarge { size: usize, max: usize },

    // -- databases ----------------------------------------------------------
    /// A database must have at least one row.
    EmptyDatabase,
    /// Row index does not name a point of the space.
    PointOutOfRange { index: usize, points: usize },
    /// Databases of different length cannot be compared.
    LengthMismatch { left: usize, right: usize },
    /// Value indexed against a space of a different size.
    SpaceMismatch { expected: usize, got: usize },

    // -- privacy parameters -------------------------------------------------
    /// epsilon must be a finite nonnegative real.
    InvalidEpsilon { value: f64 },
    /// delta must lie in [0, 1].
    InvalidDelta { value: f64 },

    // -- kernels and mechanisms ----------------------------------------------
    /// Kernel entry outside [0, 1] (or not finite).
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },
    /// Kernel row does not sum to one within tolerance.
    RowSumNotOne { row: usize, sum: f64 },
    /// Randomized response needs 0 < p and 1 - p*m > p.
    InfeasibleFlipProbability { p: f64, m: usize },
    /// No finite noise scale exists at epsilon = 0, delta = 0.
    NoFiniteScale,
    /// delta = 1 makes every mechanism private; calibration is meaningless.
    DeltaDegenerate,
    /// Scale parameters must be finite and strictly positive.
    InvalidScale { value: f64 },
    /// Interval endpoints must satisfy lo <= hi and not be NaN.
    InvalidInterval { lo: f64, hi: f64 },
    /// Interval [lo, hi] of a bounded data domain must satisfy lo < hi, finite.
    InvalidBounds { lo: f64, hi: f64 },

    // -- queries --------------------------------------------------------------
    /// Label not present in the space it was resolved against.
    LabelNotFound { label: String },
    /// Extensional query table lacks an entry for a reachable tuple.
    QueryTableIncomplete { tuple: String },
    /// Query produced a response outside the response kernel's input space.
    ResponseNotInKernel { response: String },

    // -- capacity guards --------------------------------------------------------
    /// An enumeration would exceed its guard; `hint` names the fallback.
    CapacityExceeded {
        what: &'static str,
        limit: u128,
        actual: u128,
        hint: &'static str,
    },

    // -- rectangle decomposition --------------------------------------------
    /// Decomposition input was empty.
    NoRectangles,
    /// A rectangle side was the empty set.
    EmptyRectangleSide { index: usize, side: &'static str },
    /// More rectangle pairs than the 2^p index-subset enumeration allows.
    TooManyRectangles { count: usize, max: usize },

    // -- accuracy -------------------------------------------------------------
    /// Diameter must be finite and strictly positive.
    InvalidDiameter { value: f64 },
    /// Minimum distance kappa must be finite and strictly positive.
    InvalidKappa { value: f64 },
    /// The tightness check requires the discrete metric.
    NotDiscreteMetric { i: usize, j: usize, value: f64 },

    // -- functional data -------------------------------------------------------
    /// Sampling grid must contain at least one time point.
    EmptyGrid,
    /// Grid times must be strictly increasing.
    GridNotIncreasing { index: usize },
    /// Grid times must lie in [0, 1].
    GridOutOfUnit { index: usize, value: f64 },
    /// Record length does not match the grid size.
    WrongValueCount { expected: usize, got: usize },
    /// Record values must be finite.
    NonFiniteValue { index: usize, value: f64 },
    /// Projection index set must be nonempty.
    EmptyIndices,
    /// Projection indices are 1-based and bounded by the grid size.
    IndexOutOfRange { index: usize, len: usize },
    /// Projection indices must be strictly increasing.
    IndicesNotIncreasing { position: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateLabel { label } => write!(f, "duplicate label {label:?}"),
            Self::InvalidLabel { label, reason } => {
                write!(f, "invalid label {label:?}: {reason}")
            }
            Self::MatrixShape { points, rows, row, cols } => write!(
                f,
                "distance matrix must be {points}x{points}: got {rows} rows, row {row} has {cols} entries"
            ),
            Self::DiagonalNotZero { i, value } => {
                write!(f, "identity of indiscernibles violated: dist[{i}][{i}] = {value}, expected 0")
            }
            Self::DistanceNotPositive { i, j, value } => write!(
                f,
                "identity of indiscernibles violated: dist[{i}][{j}] = {value} must be finite and > 0"
            ),
            Self::NotSymmetric { i, j, forward, backward } => write!(
                f,
                "symmetry violated: dist[{i}][{j}] = {forward} but dist[{j}][{i}] = {backward}"
            ),
            Self::TriangleInequality { i, j, k, direct, via } => write!(
                f,
                "triangle inequality violated: dist[{i}][{k}] = {direct} > dist[{i}][{j}] + dist[{j}][{k}] = {via}"
            ),
            Self::TooFewPoints { needed, got } => {
                write!(f, "need at least {needed} points, got {got}")
            }
            Self::UniverseTooLarge { size, max } => write!(
                f,
                "universe of {size} elements exceeds the power-set cap of {max} (2^{max} points)"
            ),
            Self::EmptyDatabase => write!(f, "database must have at least one row"),
            Self::PointOutOfRange { index, points } => {
                write!(f, "row references point {index}, but the space has {points} points")
            }
            Self::LengthMismatch { left, right } => {
                write!(f, "databases have different lengths: {left} vs {right}")
            }
            Self::SpaceMismatch { expected, got } => {
                write!(f, "space mismatch: expected {expected} points, got {got}")
            }
            Self::InvalidEpsilon { value } => {
                write!(f, "epsilon must be a finite nonnegative real, got {value}")
            }
            Self::InvalidDelta { value } => write!(f, "delta must lie in [0, 1], got {value}"),
            Self::ProbabilityOutOfRange { row, col, value } => {
                write!(f, "probs[{row}][{col}] = {value} is not a probability in [0, 1]")
            }
            Self::RowSumNotOne { row, sum } => {
                write!(f, "kernel row {row} sums to {sum}, expected 1 within tolerance")
            }
            Self::InfeasibleFlipProbability { p, m } => write!(
                f,
                "flip probability p = {p} infeasible for m = {m}: need 0 < p and 1 - p*m > p"
            ),
            Self::NoFiniteScale => {
                write!(f, "no finite noise scale satisfies epsilon = 0 with delta = 0")
            }
            Self::DeltaDegenerate => write!(
                f,
                "delta = 1 makes any mechanism differentially private; calibration is meaningless"
            ),
            Self::InvalidScale { value } => {
                write!(f, "scale must be finite and strictly positive, got {value}")
            }
            Self::InvalidInterval { lo, hi } => {
                write!(f, "invalid interval [{lo}, {hi}]: endpoints must satisfy lo <= hi")
            }
            Self::InvalidBounds { lo, hi } => {
                write!(f, "invalid bounds [{lo}, {hi}]: need finite lo < hi")
            }
            Self::LabelNotFound { label } => write!(f, "label {label:?} not found in the space"),
            Self::QueryTableIncomplete { tuple } => {
                write!(f, "query table has no entry for tuple ({tuple})")
            }
            Self::ResponseNotInKernel { response } => write!(
                f,
                "query response {response:?} is not a point of the response kernel's input space"
            ),
            Self::CapacityExceeded { what, limit, actual, hint } => {
                write!(f, "{what} = {actual} exceeds the enumeration cap {limit}; {hint}")
            }
            Self::NoRectangles => write!(f, "rectangle decomposition needs at least one pair"),
            Self::EmptyRectangleSide { index, side } => {
                write!(f, "rectangle pair {index} has an empty {side} side")
            }
            Self::TooManyRectangles { count, max } => {
                write!(f, "{count} rectangle pairs exceed the cap of {max}")
            }
            Self::InvalidDiameter { value } => {
                write!(f, "diameter must be finite and strictly positive, got {value}")
            }
            Self::InvalidKappa { value } => {
                write!(f, "kappa must be finite and strictly positive, got {value}")
            }
            Self::NotDiscreteMetric { i, j, value } => write!(
                f,
                "tightness check requires the discrete metric: dist[{i}][{j}] = {value}, expected 1"
            ),
            Self::EmptyGrid => write!(f, "grid must contain at least one time point"),
            Self::GridNotIncreasing { index } => {
                write!(f, "grid times must be strictly increasing at position {index}")
            }
            Self::GridOutOfUnit { index, value } => {
                write!(f, "grid time t[{index}] = {value} outside [0, 1]")
            }
            Self::WrongValueCount { expected, got } => {
                write!(f, "record has {got} values, grid expects {expected}")
            }
            Self::NonFiniteValue { index, value } => {
                write!(f, "record value at position {index} is not finite: {value}")
            }
            Self::EmptyIndices => write!(f, "projection index set must be nonempty"),
            Self::IndexOutOfRange { index, len } => {
                write!(f, "projection index {index} outside 1..={len}")
            }
            Self::IndicesNotIncreasing { position } => {
                write!(f, "projection indices must be strictly increasing at position {position}")
            }
        }
    }
}

impl core::error::Error for Error {}
