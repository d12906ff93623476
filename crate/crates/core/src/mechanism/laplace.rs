//! The calibrated Laplace mechanism on a bounded real interval.
//!
//! The mechanism is handled analytically: its privacy is continuous-output,
//! so no finite kernel is fabricated for it (discretising would change the
//! guarantee). What the rest of the crate needs are the minimal scale and
//! the closed-form probability that a Laplace law assigns to an interval.

use crate::error::{Error, Result};
use crate::mechanism::PrivacyParams;
use crate::rng::stream;

/// The minimal noise scale b = diam / (ε - log(1 - δ)) for which adding
/// Laplace(0, b) noise to each element of a database drawn from a set of
/// diameter `diam` is (ε,δ)-differentially private.
///
/// ε = 0 with δ = 0 admits no finite scale; δ = 1 makes calibration
/// meaningless (any mechanism is private) and is rejected.
pub fn laplace_scale(diam: f64, params: &PrivacyParams) -> Result<f64> {
    if !(diam.is_finite() && diam > 0.0) {
        return Err(Error::InvalidDiameter { value: diam });
    }
    if params.delta() >= 1.0 {
        return Err(Error::DeltaDegenerate);
    }
    // -log(1-δ) via log1p for accuracy at small δ.
    let denom = params.epsilon() - libm::log1p(-params.delta());
    if denom <= 0.0 {
        return Err(Error::NoFiniteScale);
    }
    Ok(diam / denom)
}

/// Exact probability mass the Laplace(center, b) law assigns to
/// [lo, hi], via the piecewise-exponential CDF. Infinite endpoints are
/// allowed.
pub fn laplace_event_prob(center: f64, b: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidScale { value: b });
    }
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let p = laplace_cdf(center, b, hi) - laplace_cdf(center, b, lo);
    Ok(p.clamp(0.0, 1.0))
}

fn laplace_cdf(center: f64, b: f64, x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let z = (x - center) / b;
    if z < 0.0 {
        0.5 * libm::exp(z)
    } else {
        1.0 - 0.5 * libm::exp(-z)
    }
}

/// Laplace sanitisation of a bounded real data interval [lo, hi]: each true
/// value d is released as d + Laplace(0, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceMechanism {
    lo: f64,
    hi: f64,
    b: f64,
}

impl LaplaceMechanism {
    pub fn new(lo: f64, hi: f64, b: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidBounds { lo, hi });
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidScale { value: b });
        }
        Ok(Self { lo, hi, b })
    }

    /// Builds the mechanism with the minimal scale for (ε,δ), taking
    /// diam = hi - lo.
    pub fn calibrate(lo: f64, hi: f64, params: &PrivacyParams) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidBounds { lo, hi });
        }
        let b = laplace_scale(hi - lo, params)?;
        Self::new(lo, hi, b)
    }

    pub fn scale(&self) -> f64 {
        self.b
    }

    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Probability that the release of true value `center` lands in
    /// [lo_a, hi_a].
    pub fn event_prob(&self, center: f64, lo_a: f64, hi_a: f64) -> Result<f64> {
        laplace_event_prob(center, self.b, lo_a, hi_a)
    }

    /// Releases `d + Laplace(0, b)`, reading stream 0 of `seed`.
    pub fn sample(&self, d: f64, seed: u64) -> f64 {
        d + stream(seed, 0).next_laplace(self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_examples() {
        // diam = 1, ε = 1, δ = 0: the denominator reduces to ε.
        let b = laplace_scale(1.0, &PrivacyParams::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(b, 1.0);

        // diam = 2, ε = 1, δ = 0.5: b = 2/(1 + ln 2).
        let b = laplace_scale(2.0, &PrivacyParams::new(1.0, 0.5).unwrap()).unwrap();
        assert!((b - 1.1812322182992825).abs() < 1e-15, "b = {b}");

        assert!(matches!(
            laplace_scale(1.0, &PrivacyParams::new(0.0, 0.0).unwrap()),
            Err(Error::NoFiniteScale)
        ));
        assert!(matches!(
            laplace_scale(1.0, &PrivacyParams::new(1.0, 1.0).unwrap()),
            Err(Error::DeltaDegenerate)
        ));
        assert!(matches!(
            laplace_scale(0.0, &PrivacyParams::new(1.0, 0.0).unwrap()),
            Err(Error::InvalidDiameter { .. })
        ));
    }

    #[test]
    fn event_prob_examples() {
        let half = laplace_event_prob(0.0, 1.0, f64::NEG_INFINITY, 0.0).unwrap();
        assert_eq!(half, 0.5);
        let all = laplace_event_prob(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(all, 1.0);
        // [0, ln 2]: 0.5·(1 - e^{-ln 2}) = 0.25.
        let q = laplace_event_prob(0.0, 1.0, 0.0, 2.0f64.ln()).unwrap();
        assert!((q - 0.25).abs() < 1e-15, "q = {q}");
    }

    #[test]
    fn event_prob_validation() {
        assert!(matches!(
            laplace_event_prob(0.0, 0.0, 0.0, 1.0),
            Err(Error::InvalidScale { .. })
        ));
        assert!(matches!(
            laplace_event_prob(0.0, 1.0, 1.0, 0.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            laplace_event_prob(0.0, 1.0, f64::NAN, 0.0),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn cdf_is_monotone_and_symmetric() {
        let mut last = 0.0;
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            let p = laplace_event_prob(0.0, 1.0, f64::NEG_INFINITY, x).unwrap();
            assert!(p >= last);
            last = p;
            // F(x) + F(-x) = 1 by symmetry of the density.
            let q = laplace_event_prob(0.0, 1.0, f64::NEG_INFINITY, -x).unwrap();
            assert!((p + q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mechanism_construction_and_sampling() {
        let mech =
            LaplaceMechanism::calibrate(0.0, 2.0, &PrivacyParams::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(mech.scale(), 2.0);
        assert_eq!(mech.diam(), 2.0);
        assert_eq!(mech.sample(1.0, 7), mech.sample(1.0, 7));

        assert!(matches!(
            LaplaceMechanism::new(1.0, 1.0, 1.0),
            Err(Error::InvalidBounds { .. })
        ));
        assert!(matches!(
            LaplaceMechanism::new(0.0, 1.0, -1.0),
            Err(Error::InvalidScale { .. })
        ));
    }
}
