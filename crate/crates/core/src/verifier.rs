//! Exact (ε,δ)-DP verification by event enumeration.
//!
//! The DP inequality P(X_d ∈ A) ≤ e^ε·P(X_d' ∈ A) + δ quantifies over every
//! ordered pair of neighbouring inputs and every output event A. Over finite
//! spaces both quantifiers are enumerable, so the checks here are decision
//! procedures, not statistical audits: a failing report carries the witness
//! pair and event, a passing one reports the largest violation found.
//!
//! Events are enumerated as bitmasks over output indices in increasing
//! numeric order, and the reported witness is the first maximal violator in
//! that order (pairs iterate lexicographically, both directions), so reports
//! are deterministic and reproducible.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{FiniteKernel, FiniteQuery, PrivacyParams, ProductMechanism};
use crate::space::Database;

/// Default slack allowed on the DP inequality, so that exact ties (e.g. a
/// randomized-response kernel at its calibrated boundary) pass cleanly
/// through float row-sum noise.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Cap on |U| for one-row exhaustive checking (2^|U| events per pair).
pub const MAX_EXHAUSTIVE_OUTPUTS: usize = 24;

/// Cap on |U|^n for product-space brute force (2^(|U|^n) events per pair).
pub const MAX_BRUTEFORCE_OUTCOMES: u128 = 20;

/// Cap on the response-support size for query-pushforward checking.
pub const MAX_QUERY_SUPPORT: usize = 20;

/// Cap on rectangle pairs in the decomposition (2^p index subsets).
pub const MAX_RECTANGLE_PAIRS: usize = 16;

/// The witness of a DP violation: a pair of neighbouring inputs, the event
/// achieving the maximal violation, and both sides of the inequality
/// (`rhs` includes the +δ term).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub d: Vec<String>,
    pub d_prime: Vec<String>,
    /// Output indices of the event, ascending. For product checks these
    /// index output tuples (first row most significant); for query checks
    /// they index the sorted response support.
    pub event: Vec<usize>,
    pub event_labels: Vec<String>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub witness: Option<Witness>,
    /// max over all pairs and events of P(X_d ∈ A) - e^ε·P(X_d' ∈ A) - δ.
    pub max_violation: f64,
    /// Ordered pairs checked (both directions counted).
    pub pairs_checked: u64,
    pub events_checked: u64,
}

/// Subset masses of a probability vector in O(1) per event: the mass of a
/// bitmask splits into a low-bits and a high-bits table lookup.
struct EventMass {
    low: Vec<f64>,
    high: Vec<f64>,
    low_bits: u32,
}

impl EventMass {
    fn new(p: &[f64]) -> Self {
        let k = p.len() as u32;
        let low_bits = k.min(16);
        Self {
            low: Self::table(p, 0, low_bits),
            high: Self::table(p, low_bits as usize, k - low_bits),
            low_bits,
        }
    }

    fn table(p: &[f64], offset: usize, bits: u32) -> Vec<f64> {
        let size = 1usize << bits;
        let mut t = alloc::vec![0.0; size];
        for mask in 1..size {
            let lsb = mask & mask.wrapping_neg();
            t[mask] = t[mask ^ lsb] + p[offset + lsb.trailing_zeros() as usize];
        }
        t
    }

    #[inline]
    fn mass(&self, mask: u64) -> f64 {
        let low = (mask & ((1u64 << self.low_bits) - 1)) as usize;
        let high = (mask >> self.low_bits) as usize;
        self.low[low] + self.high[high]
    }
}

/// Largest violation over all 2^k events for one ordered pair of laws, with
/// the first mask attaining it. Returns (violation, mask, lhs, rhs).
fn scan_pair(
    p: &EventMass,
    q: &EventMass,
    k: u32,
    exp_eps: f64,
    delta: f64,
) -> (f64, u64, f64, f64) {
    let mut best = f64::NEG_INFINITY;
    let (mut best_mask, mut best_lhs, mut best_rhs) = (0u64, 0.0, 0.0);
    for mask in 0..(1u64 << k) {
        let lhs = p.mass(mask);
        let qm = q.mass(mask);
        // e^ε may overflow to infinity; inf·0 would poison the comparison.
        let rhs = if qm == 0.0 {
            delta
        } else {
            exp_eps * qm + delta
        };
        let violation = lhs - rhs;
        if violation > best {
            best = violation;
            best_mask = mask;
            best_lhs = lhs;
            best_rhs = rhs;
        }
    }
    (best, best_mask, best_lhs, best_rhs)
}

fn mask_indices(mask: u64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = mask;
    while m != 0 {
        let lsb = m & m.wrapping_neg();
        out.push(lsb.trailing_zeros() as usize);
        m ^= lsb;
    }
    out
}

/// With no pairs to check (a single-point input space) the DP condition is
/// vacuous and the violation is zero.
fn finish_report(
    best: f64,
    witness: Option<Witness>,
    tolerance: f64,
    pairs: u64,
    events: u64,
) -> VerificationReport {
    let max_violation = if pairs == 0 { 0.0 } else { best };
    let passed = max_violation <= tolerance;
    VerificationReport {
        passed,
        witness: if passed { None } else { witness },
        max_violation,
        pairs_checked: pairs,
        events_checked: events,
    }
}

/// Decides (ε,δ)-DP for a one-row kernel by checking the DP inequality for
/// every ordered pair of distinct inputs and every subset of the output
/// space. Cost is O(|D|²·2^|U|); inputs beyond [`MAX_EXHAUSTIVE_OUTPUTS`]
/// are rejected.
pub fn check_dp_1d_exhaustive(
    kernel: &FiniteKernel,
    params: &PrivacyParams,
    tolerance: f64,
) -> Result<VerificationReport> {
    let u = kernel.output_space().len();
    if u > MAX_EXHAUSTIVE_OUTPUTS {
        return Err(Error::CapacityExceeded {
            what: "output points for event enumeration",
            limit: MAX_EXHAUSTIVE_OUTPUTS as u128,
            actual: u as u128,
            hint: "use delta_slack_closed_form, which needs no event enumeration",
        });
    }
    let d_count = kernel.input_space().len();
    let masses: Vec<EventMass> = (0..d_count)
        .map(|d| EventMass::new(kernel.row(d)))
        .collect();

    let exp_eps = params.exp_epsilon();
    let mut best = f64::NEG_INFINITY;
    let mut witness: Option<Witness> = None;
    let mut pairs = 0u64;
    let mut events = 0u64;
    for i in 0..d_count {
        for j in 0..d_count {
            if i == j {
                continue;
            }
            pairs += 1;
            events += 1u64 << u;
            let (v, mask, lhs, rhs) =
                scan_pair(&masses[i], &masses[j], u as u32, exp_eps, params.delta());
            if v > best {
                best = v;
                let event = mask_indices(mask);
                let event_labels = event
                    .iter()
                    .map(|&y| String::from(kernel.output_space().label(y)))
                    .collect();
                witness = Some(Witness {
                    d: alloc::vec![String::from(kernel.input_space().label(i))],
                    d_prime: alloc::vec![String::from(kernel.input_space().label(j))],
                    event,
                    event_labels,
                    lhs,
                    rhs,
                });
            }
        }
    }
    Ok(finish_report(best, witness, tolerance, pairs, events))
}

/// The minimal δ for which a kernel is (ε,δ)-DP, in closed form: the
/// maximising event for a pair (d, d') collects exactly the outputs where
/// probs[d][y] > e^ε·probs[d'][y], so the slack is the positive part sum
/// max over ordered pairs of Σ_y max(0, probs[d][y] - e^ε·probs[d'][y]),
/// clamped to [0, 1]. Needs no event enumeration, so it has no size cap;
/// its maximality over events is validated against the exhaustive check.
pub fn delta_slack_closed_form(kernel: &FiniteKernel, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon { value: epsilon });
    }
    let exp_eps = libm::exp(epsilon);
    let d_count = kernel.input_space().len();
    let u = kernel.output_space().len();
    let mut worst = 0.0f64;
    for i in 0..d_count {
        for j in 0..d_count {
            if i == j {
                continue;
            }
            let (p, q) = (kernel.row(i), kernel.row(j));
            let mut slack = 0.0;
            for y in 0..u {
                let gap = if q[y] == 0.0 {
                    p[y]
                } else {
                    p[y] - exp_eps * q[y]
                };
                if gap > 0.0 {
                    slack += gap;
                }
            }
            if slack > worst {
                worst = slack;
            }
        }
    }
    Ok(worst.clamp(0.0, 1.0))
}

/// The smallest ε at which the kernel is (ε,0)-DP: the maximal log-ratio
/// ln(probs[d][y] / probs[d'][y]) over ordered pairs and outputs.
/// Infinite when some output is reachable from d but not from d'.
pub fn pure_dp_epsilon(kernel: &FiniteKernel) -> f64 {
    let d_count = kernel.input_space().len();
    let u = kernel.output_space().len();
    let mut worst_ratio = 1.0f64;
    for i in 0..d_count {
        for j in 0..d_count {
            if i == j {
                continue;
            }
            let (p, q) = (kernel.row(i), kernel.row(j));
            for y in 0..u {
                if p[y] > 0.0 {
                    if q[y] == 0.0 {
                        return f64::INFINITY;
                    }
                    let ratio = p[y] / q[y];
                    if ratio > worst_ratio {
                        worst_ratio = ratio;
                    }
                }
            }
        }
    }
    libm::log(worst_ratio)
}

/// Decides (ε,δ)-DP for a product mechanism the hard way: every pair of
/// neighbouring databases in D^n and every subset of U^n. This is the
/// independent oracle for the equivalence with the one-row check; the
/// guard [`MAX_BRUTEFORCE_OUTCOMES`] keeps 2^(|U|^n) enumerable.
pub fn check_dp_product_bruteforce(
    mech: &ProductMechanism,
    params: &PrivacyParams,
    tolerance: f64,
) -> Result<VerificationReport> {
    let outcomes = mech.outcome_count();
    if outcomes > MAX_BRUTEFORCE_OUTCOMES {
        return Err(Error::CapacityExceeded {
            what: "|U|^n output tuples for event enumeration",
            limit: MAX_BRUTEFORCE_OUTCOMES,
            actual: outcomes,
            hint: "check the base kernel with check_dp_1d_exhaustive; product DP is equivalent",
        });
    }
    let k = outcomes as u32;
    let base = mech.base();
    let d_count = base.input_space().len();
    let n = mech.rows();
    let exp_eps = params.exp_epsilon();

    let mut best = f64::NEG_INFINITY;
    let mut witness: Option<Witness> = None;
    let mut pairs = 0u64;
    let mut events = 0u64;

    // Enumerate base databases in lexicographic order; for each position
    // and each larger replacement, the two orientations of the neighbour
    // pair are checked explicitly.
    let mut rows = alloc::vec![0usize; n];
    loop {
        let db = Database::new(rows.clone(), base.input_space())?;
        let law_db = EventMass::new(&mech.law(&db)?);
        for pos in 0..n {
            for alt in (rows[pos] + 1)..d_count {
                let mut other_rows = rows.clone();
                other_rows[pos] = alt;
                let other = Database::new(other_rows, base.input_space())?;
                let law_other = EventMass::new(&mech.law(&other)?);
                for (a, b, ma, mb) in [
                    (&db, &other, &law_db, &law_other),
                    (&other, &db, &law_other, &law_db),
                ] {
                    pairs += 1;
                    events += 1u64 << k;
                    let (v, mask, lhs, rhs) = scan_pair(ma, mb, k, exp_eps, params.delta());
                    if v > best {
                        best = v;
                        let event = mask_indices(mask);
                        let event_labels = event.iter().map(|&t| tuple_label(t, base, n)).collect();
                        witness = Some(Witness {
                            d: a.label_vec(base.input_space())?,
                            d_prime: b.label_vec(base.input_space())?,
                            event,
                            event_labels,
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        if !advance(&mut rows, d_count) {
            break;
        }
    }
    Ok(finish_report(best, witness, tolerance, pairs, events))
}

/// Label of output tuple index `t` (first row most significant).
fn tuple_label(t: usize, base: &FiniteKernel, n: usize) -> String {
    let u = base.output_space().len();
    let mut coords = alloc::vec![0usize; n];
    let mut rest = t;
    for slot in coords.iter_mut().rev() {
        *slot = rest % u;
        rest /= u;
    }
    let labels: Vec<&str> = coords
        .iter()
        .map(|&c| base.output_space().label(c))
        .collect();
    labels.join(",")
}

/// Advances a mixed-radix counter; false when it wraps to all zeros.
fn advance(rows: &mut [usize], radix: usize) -> bool {
    for slot in rows.iter_mut().rev() {
        *slot += 1;
        if *slot < radix {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Decides (ε,δ)-DP of the query response Q ∘ X_d for every neighbouring
/// pair of databases, by enumerating events over the pushforward laws'
/// joint response support. When the identity-query (product) check passes,
/// this must pass for every query.
pub fn check_query_dp(
    mech: &ProductMechanism,
    query: &FiniteQuery,
    params: &PrivacyParams,
    tolerance: f64,
) -> Result<VerificationReport> {
    let base = mech.base();
    let d_count = base.input_space().len();
    let n = mech.rows();
    let exp_eps = params.exp_epsilon();

    let mut best = f64::NEG_INFINITY;
    let mut witness: Option<Witness> = None;
    let mut pairs = 0u64;
    let mut events = 0u64;

    let mut rows = alloc::vec![0usize; n];
    loop {
        let db = Database::new(rows.clone(), base.input_space())?;
        let pf_db = mech.pushforward(&db, query)?;
        for pos in 0..n {
            for alt in (rows[pos] + 1)..d_count {
                let mut other_rows = rows.clone();
                other_rows[pos] = alt;
                let other = Database::new(other_rows, base.input_space())?;
                let pf_other = mech.pushforward(&other, query)?;

                // Align both laws on the sorted union of their supports.
                let support: BTreeSet<&String> = pf_db
                    .entries
                    .iter()
                    .map(|(r, _)| r)
                    .chain(pf_other.entries.iter().map(|(r, _)| r))
                    .collect();
                let support: Vec<&String> = support.into_iter().collect();
                if support.len() > MAX_QUERY_SUPPORT {
                    return Err(Error::CapacityExceeded {
                        what: "response support for event enumeration",
                        limit: MAX_QUERY_SUPPORT as u128,
                        actual: support.len() as u128,
                        hint:
                            "verify the identity query instead; sanitised DP transfers to any query",
                    });
                }
                let k = support.len() as u32;
                let p: Vec<f64> = support.iter().map(|r| pf_db.prob(r)).collect();
                let q: Vec<f64> = support.iter().map(|r| pf_other.prob(r)).collect();
                let (mp, mq) = (EventMass::new(&p), EventMass::new(&q));

                for (a, b, ma, mb) in [(&db, &other, &mp, &mq), (&other, &db, &mq, &mp)] {
                    pairs += 1;
                    events += 1u64 << k;
                    let (v, mask, lhs, rhs) = scan_pair(ma, mb, k, exp_eps, params.delta());
                    if v > best {
                        best = v;
                        let event = mask_indices(mask);
                        let event_labels = event.iter().map(|&y| support[y].clone()).collect();
                        witness = Some(Witness {
                            d: a.label_vec(base.input_space())?,
                            d_prime: b.label_vec(base.input_space())?,
                            event,
                            event_labels,
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        if !advance(&mut rows, d_count) {
            break;
        }
    }
    Ok(finish_report(best, witness, tolerance, pairs, events))
}

/// One part Ã_I × B̃_I of a rectangle decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectanglePart<T: Ord> {
    pub a: BTreeSet<T>,
    pub b: BTreeSet<T>,
}

/// A union of rectangles rewritten with pairwise-disjoint second factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectangleDecomposition<T: Ord> {
    pub parts: Vec<RectanglePart<T>>,
}

/// Rewrites ∪_i (A_i × B_i) as ∪_I (Ã_I × B̃_I) over nonempty index sets
/// I ⊆ {1..p}, with Ã_I = ∪_{i∈I} A_i and B̃_I = ∩_{i∈I} B_i \ ∪_{i∉I} B_i.
/// The B̃_I are pairwise disjoint, the union is unchanged, and parts with
/// empty B̃_I are dropped. Parts are ordered by ascending index-set bitmask.
pub fn decompose_rectangles<T: Ord + Clone>(
    pairs: &[(BTreeSet<T>, BTreeSet<T>)],
) -> Result<RectangleDecomposition<T>> {
    let p = pairs.len();
    if p == 0 {
        return Err(Error::NoRectangles);
    }
    if p > MAX_RECTANGLE_PAIRS {
        return Err(Error::TooManyRectangles {
            count: p,
            max: MAX_RECTANGLE_PAIRS,
        });
    }
    for (index, (a, b)) in pairs.iter().enumerate() {
        if a.is_empty() {
            return Err(Error::EmptyRectangleSide { index, side: "A" });
        }
        if b.is_empty() {
            return Err(Error::EmptyRectangleSide { index, side: "B" });
        }
    }
    let mut parts = Vec::new();
    for mask in 1usize..(1 << p) {
        let mut b_part: Option<BTreeSet<T>> = None;
        for (i, (_, b)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                b_part = Some(match b_part {
                    None => b.clone(),
                    Some(acc) => acc.intersection(b).cloned().collect(),
                });
            }
        }
        let mut b_part = b_part.unwrap_or_default();
        for (i, (_, b)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 0 {
                b_part = b_part.difference(b).cloned().collect();
            }
        }
        if b_part.is_empty() {
            continue;
        }
        let mut a_part = BTreeSet::new();
        for (i, (a, _)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                a_part.extend(a.iter().cloned());
            }
        }
        parts.push(RectanglePart {
            a: a_part,
            b: b_part,
        });
    }
    Ok(RectangleDecomposition { parts })
}
