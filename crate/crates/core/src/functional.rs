//! Grid-sampled functional data and its Laplace sanitiser.
//!
//! Time-course records (sensor readings, consumption traces) are handled on
//! a fixed grid t_1 < ... < t_k in [0,1] with values clipped to a bounded
//! interval on ingestion. One record is one database row, so a whole-record
//! change can move every coordinate at once: the noise scale is calibrated
//! to the L1 record diameter k·(hi - lo), applying the Laplace triangle
//! -inequality argument coordinate by coordinate. Sanitised outputs are not
//! clipped; re-clipping would invalidate the additive-noise density bound.
//!
//! Privacy of the released function is certified through its
//! finite-dimensional projections: if every projection of the mechanism is
//! (ε,δ)-DP, so is the function-valued mechanism, the cylinder sets of the
//! projections being sufficient for the full Borel structure.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{laplace_scale, PrivacyParams};
use crate::rng::stream;

/// Tolerance on the log-domain certification comparison, matching the
/// verifier's tolerance on the DP inequality.
pub const CERTIFY_TOLERANCE: f64 = 1e-9;

/// A sampling grid t_1 < ... < t_k in [0,1] with per-sample value bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionSpace {
    grid: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl GridFunctionSpace {
    pub fn new(grid: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for (i, &t) in grid.iter().enumerate() {
            if !(t.is_finite() && (0.0..=1.0).contains(&t)) {
                return Err(Error::GridOutOfUnit { index: i, value: t });
            }
            if i > 0 && t <= grid[i - 1] {
                return Err(Error::GridNotIncreasing { index: i });
            }
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidBounds { lo, hi });
        }
        Ok(Self { grid, lo, hi })
    }

    /// A uniform grid of k points spanning [0,1] (a single point sits at 0).
    pub fn uniform(k: usize, lo: f64, hi: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyGrid);
        }
        let grid = if k == 1 {
            alloc::vec![0.0]
        } else {
            (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
        };
        Self::new(grid, lo, hi)
    }

    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Per-sample value range hi - lo.
    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Validates a record against the grid, clipping values into [lo, hi].
    pub fn ingest(&self, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != self.grid.len() {
            return Err(Error::WrongValueCount {
                expected: self.grid.len(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index: i, value: v });
            }
        }
        let clipped = values
            .into_iter()
            .map(|v| v.clamp(self.lo, self.hi))
            .collect();
        Ok(GridFunction { values: clipped })
    }

    /// Sup metric: max_j |f(t_j) - g(t_j)|.
    pub fn sup_distance(&self, f: &GridFunction, g: &GridFunction) -> f64 {
        f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    /// L1 record distance: Σ_j |f(t_j) - g(t_j)|.
    pub fn l1_distance(&self, f: &GridFunction, g: &GridFunction) -> f64 {
        f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| libm::fabs(a - b))
            .sum()
    }
}

/// One record: k sampled values, within the space's bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The sub-vector of samples at the chosen times. Indices are 1-based
/// (matching the t_1..t_k numbering), nonempty, strictly increasing.
pub fn project(f: &GridFunction, indices: &[usize]) -> Result<Vec<f64>> {
    validate_indices(indices, f.values.len())?;
    Ok(indices.iter().map(|&i| f.values[i - 1]).collect())
}

fn validate_indices(indices: &[usize], k: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::EmptyIndices);
    }
    for (pos, &i) in indices.iter().enumerate() {
        if i < 1 || i > k {
            return Err(Error::IndexOutOfRange { index: i, len: k });
        }
        if pos > 0 && i <= indices[pos - 1] {
            return Err(Error::IndicesNotIncreasing { position: pos });
        }
    }
    Ok(())
}

/// The minimal per-coordinate Laplace scale for whole-record (ε,δ)-DP:
/// b = k·(hi - lo) / (ε - log(1-δ)), the one-row calibration applied with
/// the L1 record diameter k·(hi - lo). At k = 1 this is exactly the scalar
/// calibration.
pub fn functional_laplace_scale(space: &GridFunctionSpace, params: &PrivacyParams) -> Result<f64> {
    laplace_scale(space.k() as f64 * space.span(), params)
}

/// Releases f(t_j) + Laplace(0, b) independently per grid point, reading
/// the derived stream `(seed, j)` for coordinate j (0-based). The output is
/// deliberately unclipped.
pub fn sanitize_function(f: &GridFunction, b: f64, seed: u64) -> Result<Vec<f64>> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidScale { value: b });
    }
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(j, v)| v + stream(seed, j as u64).next_laplace(b))
        .collect())
}

/// Certificate for one finite-dimensional projection of the per-coordinate
/// Laplace sanitiser.
///
/// `worst_case_ratio` and `threshold` can be infinite (JSON renders them as
/// null; parsing maps null back to infinity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCertificate {
    pub indices: Vec<usize>,
    pub k: usize,
    pub scale: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Worst-case density ratio of the projected mechanism over record
    /// pairs: exp(|indices|·(hi - lo) / b).
    #[serde(deserialize_with = "null_as_infinity")]
    pub worst_case_ratio: f64,
    /// The ratio budget e^ε / (1 - δ); infinite at δ = 1.
    #[serde(deserialize_with = "null_as_infinity")]
    pub threshold: f64,
    pub certified: bool,
}

fn null_as_infinity<'de, D>(deserializer: D) -> core::result::Result<f64, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::Deserialize as _;
    Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::INFINITY))
}

/// Analytic density-ratio certification of the projection onto `indices`:
/// the projected densities at any two records differ by at most
/// exp(Σ_{j∈indices} |f(t_j) - g(t_j)| / b) ≤ exp(|indices|·(hi-lo)/b), and
/// the projection is (ε,δ)-DP whenever that bound is at most e^ε/(1-δ).
/// The comparison runs in the log domain with [`CERTIFY_TOLERANCE`] slack.
pub fn certify_projection_dp(
    space: &GridFunctionSpace,
    b: f64,
    params: &PrivacyParams,
    indices: &[usize],
) -> Result<ProjectionCertificate> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidScale { value: b });
    }
    validate_indices(indices, space.k())?;
    let exponent = indices.len() as f64 * space.span() / b;
    let (budget, threshold) = if params.delta() >= 1.0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let budget = params.epsilon() - libm::log1p(-params.delta());
        (budget, libm::exp(params.epsilon()) / (1.0 - params.delta()))
    };
    Ok(ProjectionCertificate {
        indices: indices.to_vec(),
        k: space.k(),
        scale: b,
        epsilon: params.epsilon(),
        delta: params.delta(),
        worst_case_ratio: libm::exp(exponent),
        threshold,
        certified: exponent <= budget + CERTIFY_TOLERANCE,
    })
}
