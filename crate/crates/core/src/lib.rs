//! Differentially private sanitisation over finite metric spaces.
//!
//! This crate builds, calibrates and verifies (ε,δ)-differentially-private
//! sanitisation mechanisms whose data live in an arbitrary finite metric
//! space: categorical labels, subsets of a universe under symmetric
//! difference, bounded reals under Laplace noise, or grid-sampled functions.
//!
//! A mechanism is represented by its law directly: a [`FiniteKernel`] maps
//! each input point to a probability distribution over a finite output
//! space, and a [`ProductMechanism`] applies one kernel independently to
//! every row of a database. Verification is exact rather than statistical:
//! the [`verifier`] module enumerates every ordered pair of inputs and
//! every output event, so a passing report is a proof at the stated
//! tolerance, and a failing report carries a concrete witness event.
//!
//! The crate is `no_std` (alloc required); all file formats, CSV ingestion
//! and the command-line front end live in the companion `metricdp-cli`
//! crate.
//!
//! ```
//! use metricdp_core::verifier::{check_dp_1d_exhaustive, DEFAULT_TOLERANCE};
//! use metricdp_core::{FiniteKernel, FiniteMetricSpace, PrivacyParams};
//!
//! // Randomized response at its calibrated boundary is (ln 2, 0)-DP.
//! let space = FiniteMetricSpace::discrete(vec!["yes".into(), "no".into()])?;
//! let kernel = FiniteKernel::randomized_response(space, 1.0 / 3.0)?;
//! let params = PrivacyParams::new(std::f64::consts::LN_2, 0.0)?;
//! let report = check_dp_1d_exhaustive(&kernel, &params, DEFAULT_TOLERANCE)?;
//! assert!(report.passed);
//! # Ok::<(), metricdp_core::Error>(())
//! ```

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod accuracy;
pub mod error;
pub mod functional;
pub mod mechanism;
pub mod rng;
pub mod space;
pub mod verifier;

pub use error::{Error, Result};
pub use mechanism::{
    laplace_event_prob, laplace_scale, rr_min_p, FiniteKernel, FiniteQuery, LaplaceMechanism,
    OutputPerturbation, PrivacyParams, ProductMechanism, QueryDistribution,
};
pub use space::{Database, FiniteMetricSpace, SpaceStats};
pub use verifier::{VerificationReport, Witness, DEFAULT_TOLERANCE};
