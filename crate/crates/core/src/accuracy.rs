//! Maximal expected error of a mechanism and the privacy-accuracy lower
//! bounds it can never beat.
//!
//! The error of a one-row kernel at input d is E[ρ(X_d, d)], computed
//! exactly from the kernel's row (no sampling), and the maximal expected
//! error takes the max over inputs d ∈ D. Two lower bounds apply to every
//! (ε,δ)-DP kernel with δ < 1: one from the diameter of the data space, one
//! from its minimum distance κ and point count; randomized response at its
//! calibrated flip probability meets the finite bound exactly under the
//! discrete metric.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{rr_min_p, FiniteKernel, PrivacyParams};
use crate::space::FiniteMetricSpace;
use crate::verifier::{check_dp_1d_exhaustive, VerificationReport};

/// Tolerance on "the bound is met exactly".
pub const TIGHTNESS_TOLERANCE: f64 = 1e-12;

/// Expected error of one input point, in units of the metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub label: String,
    pub expected_error: f64,
}

/// Exact error profile of a kernel together with both lower bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub per_point: Vec<PointError>,
    /// Maximal expected error over inputs.
    pub max_error: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Diameter, minimum distance and m = |D| - 1 of the input point set,
    /// measured inside the supplied metric space.
    pub diam: f64,
    pub kappa: f64,
    pub m: usize,
    pub bound_general: f64,
    pub bound_finite: f64,
    /// max_error meets bound_finite within [`TIGHTNESS_TOLERANCE`].
    pub tight: bool,
    /// Both bounds are vacuous (zero) because δ = 1.
    pub vacuous_bounds: bool,
}

/// Computes the exact expected error of `kernel` under `metric`, a space
/// whose labels must contain every input and output label of the kernel
/// (the embedding D ⊆ U). The bounds use the diameter/κ of the embedded
/// input set, with (ε, δ) taken from `params`.
pub fn expected_error(
    kernel: &FiniteKernel,
    metric: &FiniteMetricSpace,
    params: &PrivacyParams,
) -> Result<ErrorReport> {
    let embed = |label: &str| -> Result<usize> {
        metric.index_of(label).ok_or_else(|| Error::LabelNotFound {
            label: label.into(),
        })
    };
    let input_idx: Vec<usize> = kernel
        .input_space()
        .labels()
        .iter()
        .map(|l| embed(l))
        .collect::<Result<_>>()?;
    let output_idx: Vec<usize> = kernel
        .output_space()
        .labels()
        .iter()
        .map(|l| embed(l))
        .collect::<Result<_>>()?;

    let mut per_point = Vec::with_capacity(input_idx.len());
    let mut max_error = 0.0f64;
    for (d, &d_in_metric) in input_idx.iter().enumerate() {
        let row = kernel.row(d);
        let mut err = 0.0;
        for (y, &y_in_metric) in output_idx.iter().enumerate() {
            err += row[y] * metric.dist(y_in_metric, d_in_metric);
        }
        if err > max_error {
            max_error = err;
        }
        per_point.push(PointError {
            label: String::from(kernel.input_space().label(d)),
            expected_error: err,
        });
    }

    // diam and κ of the input set D, not of the ambient space U.
    if input_idx.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: input_idx.len(),
        });
    }
    let mut diam = f64::NEG_INFINITY;
    let mut kappa = f64::INFINITY;
    for (i, &a) in input_idx.iter().enumerate() {
        for &b in &input_idx[(i + 1)..] {
            let d = metric.dist(a, b);
            diam = diam.max(d);
            kappa = kappa.min(d);
        }
    }
    let m = input_idx.len() - 1;

    Ok(ErrorReport {
        per_point,
        max_error,
        epsilon: params.epsilon(),
        delta: params.delta(),
        diam,
        kappa,
        m,
        bound_general: lower_bound_general(diam, params)?,
        bound_finite: lower_bound_finite(kappa, m, params)?,
        tight: false, // placeholder, set below
        vacuous_bounds: params.delta() >= 1.0,
    }
    .with_tightness())
}

impl ErrorReport {
    fn with_tightness(mut self) -> Self {
        self.tight = libm::fabs(self.max_error - self.bound_finite) <= TIGHTNESS_TOLERANCE;
        self
    }
}

/// Lower bound on the maximal expected error of any (ε,δ)-DP kernel over a
/// space of diameter `diam`: (1-δ)·diam / (2·(1+e^ε)). Returns 0 (vacuous)
/// at δ = 1.
pub fn lower_bound_general(diam: f64, params: &PrivacyParams) -> Result<f64> {
    if !(diam.is_finite() && diam > 0.0) {
        return Err(Error::InvalidDiameter { value: diam });
    }
    if params.delta() >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - params.delta()) * diam / (2.0 * (1.0 + params.exp_epsilon())))
}

/// Lower bound for finite spaces with |D| = m + 1 and minimum distance κ:
/// (1-δ)·κ·m / (m + e^ε). Returns 0 (vacuous) at δ = 1.
pub fn lower_bound_finite(kappa: f64, m: usize, params: &PrivacyParams) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidKappa { value: kappa });
    }
    if m < 1 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: m + 1,
        });
    }
    if params.delta() >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - params.delta()) * kappa * m as f64 / (m as f64 + params.exp_epsilon()))
}

/// Outcome of the tightness check: randomized response at its calibrated
/// flip probability meets the finite lower bound under the discrete metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub m: usize,
    pub p: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub max_error: f64,
    pub bound_finite: f64,
    pub tight: bool,
    pub dp: VerificationReport,
}

/// Builds randomized response with p = rr_min_p over a discrete space,
/// computes its maximal expected error, and checks both that the error
/// meets `lower_bound_finite` within [`TIGHTNESS_TOLERANCE`] and that the
/// kernel passes the exhaustive DP check.
pub fn check_tightness(
    space: &FiniteMetricSpace,
    params: &PrivacyParams,
    tolerance: f64,
) -> Result<TightnessReport> {
    let n = space.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && space.dist(i, j) != 1.0 {
                return Err(Error::NotDiscreteMetric {
                    i,
                    j,
                    value: space.dist(i, j),
                });
            }
        }
    }
    if params.delta() >= 1.0 {
        return Err(Error::DeltaDegenerate);
    }
    let m = n - 1;
    let p = rr_min_p(m, params)?;
    // The calibrated p sits exactly on the boundary 1 - p·m = p when ε = 0
    // and δ = 0, so the closed (non-strict) constructor is required.
    let kernel = FiniteKernel::randomized_response_closed(space.clone(), p)?;
    let report = expected_error(&kernel, space, params)?;
    let dp = check_dp_1d_exhaustive(&kernel, params, tolerance)?;
    Ok(TightnessReport {
        m,
        p,
        epsilon: params.epsilon(),
        delta: params.delta(),
        max_error: report.max_error,
        bound_finite: report.bound_finite,
        tight: report.tight,
        dp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::DEFAULT_TOLERANCE;
    use alloc::string::ToString;
    use alloc::vec;

    fn discrete(n: usize) -> FiniteMetricSpace {
        let labels: Vec<_> = (0..n).map(|i| alloc::format!("p{i}")).collect();
        FiniteMetricSpace::discrete(labels).unwrap()
    }

    fn params(epsilon: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(epsilon, delta).unwrap()
    }

    #[test]
    fn identity_kernel_has_zero_error() {
        let s = discrete(3);
        let k = FiniteKernel::identity(s.clone());
        let report = expected_error(&k, &s, &params(1.0, 0.0)).unwrap();
        assert_eq!(report.max_error, 0.0);
        assert!(report.per_point.iter().all(|p| p.expected_error == 0.0));
    }

    #[test]
    fn rr_error_is_mp_under_discrete_metric() {
        // m = 3, p = 0.2: E[ρ(X_d, d)] = Σ_{d'≠d} p = m·p = 0.6.
        let s = discrete(4);
        let k = FiniteKernel::randomized_response(s.clone(), 0.2).unwrap();
        let report = expected_error(&k, &s, &params(2.0f64.ln(), 0.0)).unwrap();
        assert!((report.max_error - 0.6).abs() < 1e-15);
        assert!(report.tight);
    }

    #[test]
    fn rr_error_scales_with_the_metric() {
        // Two points at distance 7, p = 0.25: error = 0.25·7 = 1.75.
        let s = FiniteMetricSpace::new(
            vec!["a".to_string(), "b".to_string()],
            vec![vec![0.0, 7.0], vec![7.0, 0.0]],
        )
        .unwrap();
        let k = FiniteKernel::randomized_response(s.clone(), 0.25).unwrap();
        let report = expected_error(&k, &s, &params(1.0, 0.0)).unwrap();
        assert_eq!(report.max_error, 1.75);
        assert_eq!(report.diam, 7.0);
        assert_eq!(report.kappa, 7.0);
    }

    #[test]
    fn embedding_mismatch_errors() {
        let s2 = discrete(2);
        let other = FiniteMetricSpace::discrete(vec!["x".to_string(), "y".to_string()]).unwrap();
        let k = FiniteKernel::identity(s2);
        assert!(matches!(
            expected_error(&k, &other, &params(1.0, 0.0)),
            Err(Error::LabelNotFound { .. })
        ));
    }

    #[test]
    fn kernel_into_larger_metric_space() {
        // D = {a, b} released into U = {a, b, c}; bounds use diam/κ of D.
        let d = FiniteMetricSpace::discrete(vec!["a".to_string(), "b".to_string()]).unwrap();
        let u = FiniteMetricSpace::new(
            vec!["a".to_string(), "b".to_string(), "c".to_string()],
            vec![
                vec![0.0, 2.0, 1.0],
                vec![2.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        let k = FiniteKernel::new(
            d,
            Some(u.clone()),
            vec![vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25]],
        )
        .unwrap();
        let report = expected_error(&k, &u, &params(1.0, 0.0)).unwrap();
        // E at a: 0.25·2 + 0.25·1 = 0.75, symmetric at b.
        assert!((report.max_error - 0.75).abs() < 1e-15);
        assert_eq!(report.m, 1);
        assert_eq!(report.diam, 2.0);
        assert_eq!(report.kappa, 2.0);
    }

    #[test]
    fn bound_general_examples() {
        assert_eq!(lower_bound_general(1.0, &params(0.0, 0.0)).unwrap(), 0.25);
        assert_eq!(lower_bound_general(1.0, &params(3.0, 1.0)).unwrap(), 0.0);
        let b = lower_bound_general(2.0, &params(3.0f64.ln(), 0.0)).unwrap();
        assert!((b - 0.25).abs() < 1e-15);
        assert!(matches!(
            lower_bound_general(0.0, &params(1.0, 0.0)),
            Err(Error::InvalidDiameter { .. })
        ));
    }

    #[test]
    fn bound_finite_examples() {
        let b = lower_bound_finite(1.0, 3, &params(2.0f64.ln(), 0.0)).unwrap();
        assert!((b - 0.6).abs() < 1e-15);
        assert_eq!(lower_bound_finite(1.0, 1, &params(0.0, 0.0)).unwrap(), 0.5);
        assert_eq!(lower_bound_finite(2.5, 9, &params(1.0, 1.0)).unwrap(), 0.0);
        assert!(matches!(
            lower_bound_finite(0.0, 3, &params(1.0, 0.0)),
            Err(Error::InvalidKappa { .. })
        ));
        assert!(matches!(
            lower_bound_finite(1.0, 0, &params(1.0, 0.0)),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn tightness_examples() {
        // m = 3, ε = ln 2, δ = 0: error = bound = 0.6.
        let r =
            check_tightness(&discrete(4), &params(2.0f64.ln(), 0.0), DEFAULT_TOLERANCE).unwrap();
        assert!((r.max_error - 0.6).abs() < 1e-12);
        assert!(r.tight);
        assert!(r.dp.passed);

        // m = 1, ε = 0, δ = 0: the uniform kernel, error = bound = 0.5.
        let r = check_tightness(&discrete(2), &params(0.0, 0.0), DEFAULT_TOLERANCE).unwrap();
        assert!((r.max_error - 0.5).abs() < 1e-12);
        assert!((r.p - 0.5).abs() < 1e-15);
        assert!(r.tight);
        assert!(r.dp.passed);

        // m = 3, ε = ln 2, δ = 0.5: p = 0.1, error = bound = 0.3.
        let r =
            check_tightness(&discrete(4), &params(2.0f64.ln(), 0.5), DEFAULT_TOLERANCE).unwrap();
        assert!((r.max_error - 0.3).abs() < 1e-12);
        assert!((r.p - 0.1).abs() < 1e-15);
        assert!(r.tight);
        assert!(r.dp.passed);
    }

    #[test]
    fn tightness_requires_discrete_metric() {
        let s = FiniteMetricSpace::new(
            vec!["a".to_string(), "b".to_string()],
            vec![vec![0.0, 2.0], vec![2.0, 0.0]],
        )
        .unwrap();
        assert!(matches!(
            check_tightness(&s, &params(1.0, 0.0), DEFAULT_TOLERANCE),
            Err(Error::NotDiscreteMetric { .. })
        ));
        assert!(matches!(
            check_tightness(&discrete(3), &params(1.0, 1.0), DEFAULT_TOLERANCE),
            Err(Error::DeltaDegenerate)
        ));
    }

    #[test]
    fn vacuous_bounds_flagged_at_delta_one() {
        let s = discrete(3);
        let k = FiniteKernel::uniform(s.clone());
        let report = expected_error(&k, &s, &params(0.0, 1.0)).unwrap();
        assert!(report.vacuous_bounds);
        assert_eq!(report.bound_general, 0.0);
        assert_eq!(report.bound_finite, 0.0);
    }
}
