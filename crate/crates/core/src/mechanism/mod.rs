//! Mechanism construction: finite stochastic kernels, the randomized
//! response family, product sanitisers over databases, and sampling.
//!
//! A [`FiniteKernel`] is the law of a one-row mechanism: row `d` of its
//! probability matrix is the distribution of the sanitised value when the
//! true value is point `d`. A [`ProductMechanism`] applies the kernel
//! independently to every row of a database, which is exactly the
//! construction whose n-row privacy is equivalent to the kernel's one-row
//! privacy.

mod laplace;
mod query;

pub use laplace::{laplace_event_prob, laplace_scale, LaplaceMechanism};
pub use query::{
    FiniteQuery, MonteCarloDistribution, OutputPerturbation, QueryDistribution, QueryKind,
};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::space::{Database, FiniteMetricSpace};

/// Tolerance on each kernel row summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Cap on |U|^n for exact pushforward and product-law enumeration.
pub const LAW_CAPACITY: u128 = 10_000_000;

/// The privacy parameter pair (ε, δ) with ε ≥ 0 and δ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidEpsilon { value: epsilon });
        }
        if !(delta.is_finite() && (0.0..=1.0).contains(&delta)) {
            return Err(Error::InvalidDelta { value: delta });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// e^ε, the multiplicative budget of the DP inequality.
    pub fn exp_epsilon(&self) -> f64 {
        libm::exp(self.epsilon)
    }
}

/// A one-row mechanism over finite spaces: `probs[d][y]` is the probability
/// that input point `d` is released as output point `y`.
///
/// The input space D and output space U may differ; by default U = D.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel {
    input_space: FiniteMetricSpace,
    output_space: FiniteMetricSpace,
    /// Row-major |D| x |U|, each row a probability distribution.
    probs: Vec<f64>,
}

impl FiniteKernel {
    /// Builds a kernel from explicit rows, validating that every entry is a
    /// probability and every row sums to one within [`ROW_SUM_TOLERANCE`].
    pub fn new(
        input_space: FiniteMetricSpace,
        output_space: Option<FiniteMetricSpace>,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let output_space = output_space.unwrap_or_else(|| input_space.clone());
        let rows = input_space.len();
        let cols = output_space.len();
        if probs.len() != rows {
            return Err(Error::MatrixShape {
                points: rows,
                rows: probs.len(),
                row: 0,
                cols,
            });
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for (r, row) in probs.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::MatrixShape {
                    points: rows,
                    rows: probs.len(),
                    row: r,
                    cols: row.len(),
                });
            }
            let mut sum = 0.0;
            for (c, &p) in row.iter().enumerate() {
                if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                    return Err(Error::ProbabilityOutOfRange {
                        row: r,
                        col: c,
                        value: p,
                    });
                }
                sum += p;
            }
            if libm::fabs(sum - 1.0) > ROW_SUM_TOLERANCE {
                return Err(Error::RowSumNotOne { row: r, sum });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            input_space,
            output_space,
            probs: flat,
        })
    }

    /// The deterministic kernel releasing every point unchanged.
    pub fn identity(space: FiniteMetricSpace) -> Self {
        let n = space.len();
        let mut flat = alloc::vec![0.0; n * n];
        for i in 0..n {
            flat[i * n + i] = 1.0;
        }
        Self {
            input_space: space.clone(),
            output_space: space,
            probs: flat,
        }
    }

    /// The kernel releasing a uniform point regardless of the input.
    pub fn uniform(space: FiniteMetricSpace) -> Self {
        let n = space.len();
        let flat = alloc::vec![1.0 / n as f64; n * n];
        Self {
            input_space: space.clone(),
            output_space: space,
            probs: flat,
        }
    }

    /// Randomized response over `space` with |D| = m + 1: the true value is
    /// kept with probability 1 - p·m and every other point is released with
    /// probability p. Requires 0 < p and, strictly, 1 - p·m > p.
    pub fn randomized_response(space: FiniteMetricSpace, p: f64) -> Result<Self> {
        let n = space.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        let m = n - 1;
        if !(p.is_finite() && p > 0.0) || 1.0 - p * m as f64 <= p {
            return Err(Error::InfeasibleFlipProbability { p, m });
        }
        Ok(Self::rr_rows(space, p))
    }

    /// Randomized-response rows without the strict 1 - p·m > p assumption,
    /// admitting the boundary p = 1/(m+1) (the uniform kernel). Used where
    /// calibration lands exactly on the boundary, e.g. ε = 0, δ = 0.
    pub(crate) fn randomized_response_closed(space: FiniteMetricSpace, p: f64) -> Result<Self> {
        let n = space.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        let m = n - 1;
        if !(p.is_finite() && p > 0.0) || 1.0 - p * (m as f64) < p {
            return Err(Error::InfeasibleFlipProbability { p, m });
        }
        Ok(Self::rr_rows(space, p))
    }

    fn rr_rows(space: FiniteMetricSpace, p: f64) -> Self {
        let n = space.len();
        let keep = 1.0 - p * (n - 1) as f64;
        let mut flat = alloc::vec![p; n * n];
        for i in 0..n {
            flat[i * n + i] = keep;
        }
        Self {
            input_space: space.clone(),
            output_space: space,
            probs: flat,
        }
    }

    pub fn input_space(&self) -> &FiniteMetricSpace {
        &self.input_space
    }

    pub fn output_space(&self) -> &FiniteMetricSpace {
        &self.output_space
    }

    /// The distribution of outputs for input point `d`.
    pub fn row(&self, d: usize) -> &[f64] {
        let cols = self.output_space.len();
        &self.probs[d * cols..(d + 1) * cols]
    }

    pub fn prob(&self, d: usize, y: usize) -> f64 {
        self.probs[d * self.output_space.len() + y]
    }
}

/// Calibration of randomized response: the smallest flip probability
/// p = (1 - δ)/(m + e^ε) for which the kernel satisfies the one-row DP
/// condition 1 - p·m ≤ e^ε·p + δ, with equality.
pub fn rr_min_p(m: usize, params: &PrivacyParams) -> Result<f64> {
    if m < 1 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: m + 1,
        });
    }
    Ok((1.0 - params.delta()) / (m as f64 + params.exp_epsilon()))
}

/// n independent copies of a base kernel acting row-wise on a database:
/// the law at database d assigns probability Π_i probs[d_i][u_i] to the
/// output tuple (u_1, ..., u_n).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMechanism {
    base: FiniteKernel,
    n: usize,
}

impl ProductMechanism {
    pub fn new(base: FiniteKernel, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::EmptyDatabase);
        }
        Ok(Self { base, n })
    }

    pub fn base(&self) -> &FiniteKernel {
        &self.base
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    /// |U|^n, the number of output tuples, if it stays representable.
    pub fn outcome_count(&self) -> u128 {
        let u = self.base.output_space.len() as u128;
        let mut total: u128 = 1;
        for _ in 0..self.n {
            total = total.saturating_mul(u);
        }
        total
    }

    fn check_database(&self, db: &Database) -> Result<()> {
        if db.space_points() != self.base.input_space.len() {
            return Err(Error::SpaceMismatch {
                expected: self.base.input_space.len(),
                got: db.space_points(),
            });
        }
        if db.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: db.len(),
            });
        }
        Ok(())
    }

    /// The exact law over output tuples for database `db`, indexed with the
    /// first row most significant: tuple (u_1, ..., u_n) sits at index
    /// ((u_1·|U| + u_2)·|U| + ...) + u_n.
    pub fn law(&self, db: &Database) -> Result<Vec<f64>> {
        self.check_database(db)?;
        let outcomes = self.outcome_count();
        if outcomes > LAW_CAPACITY {
            return Err(Error::CapacityExceeded {
                what: "|U|^n output tuples",
                limit: LAW_CAPACITY,
                actual: outcomes,
                hint: "use sampling (Monte Carlo) instead of the exact law",
            });
        }
        let u = self.base.output_space.len();
        let mut law = alloc::vec![1.0; 1];
        // Extend one coordinate at a time; row i scales every prefix.
        for &d in db.rows() {
            let row = self.base.row(d);
            let mut next = Vec::with_capacity(law.len() * u);
            for &prefix in &law {
                for &p in row.iter().take(u) {
                    next.push(prefix * p);
                }
            }
            law = next;
        }
        Ok(law)
    }

    /// The marginal law of coordinate `i` at database `db`: the base row of
    /// the i-th true value.
    pub fn marginal(&self, db: &Database, i: usize) -> Result<&[f64]> {
        self.check_database(db)?;
        if i >= self.n {
            return Err(Error::PointOutOfRange {
                index: i,
                points: self.n,
            });
        }
        Ok(self.base.row(db.rows()[i]))
    }

    /// Draws a sanitised database over U, row-independently. Row `i` reads
    /// from the derived stream `(seed, i)`, so the result is reproducible
    /// independent of iteration order.
    pub fn sample(&self, db: &Database, seed: u64) -> Result<Database> {
        self.check_database(db)?;
        let mut rows = Vec::with_capacity(db.len());
        for (i, &d) in db.rows().iter().enumerate() {
            let mut g = stream(seed, i as u64);
            rows.push(draw_categorical(self.base.row(d), g.next_f64()));
        }
        Database::new(rows, &self.base.output_space)
    }
}

/// Maps a uniform draw to a category by cumulative probability. Rounding
/// shortfall in the final partial sum falls into the last category.
fn draw_categorical(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (idx, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    row.len() - 1
}
