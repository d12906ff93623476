//! Queries over sanitised databases and their pushforward laws.
//!
//! A sanitised release answers every query by applying it to the one
//! sanitised database: the response law is the pushforward Q ∘ X_d. For
//! finite output spaces the pushforward is computed exactly by enumerating
//! every output tuple and summing product probabilities over each fiber
//! Q^{-1}(r); past the capacity guard a seeded Monte Carlo estimate with
//! reported standard error stands in.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{FiniteKernel, ProductMechanism, LAW_CAPACITY};
use crate::rng::stream;
use crate::space::{Database, FiniteMetricSpace};

/// What a query computes from an output tuple.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryKind {
    /// The tuple itself, rendered as comma-joined labels.
    Identity,
    /// How many rows equal one fixed output point.
    Count { point: usize },
    /// The most frequent output point; ties break to the smallest index.
    Mode,
    /// Per-point occurrence counts, rendered comma-joined in point order.
    Histogram,
    /// The same response for every tuple.
    Constant { value: String },
    /// An extensional lookup from tuples to responses, keyed by row indices.
    Table { map: BTreeMap<Vec<usize>, String> },
}

/// A total function from output tuples U^n to a finite response space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteQuery {
    name: String,
    kind: QueryKind,
}

impl FiniteQuery {
    pub fn identity() -> Self {
        Self {
            name: "identity".to_string(),
            kind: QueryKind::Identity,
        }
    }

    /// Counts occurrences of `label` (resolved in `space`, the output space
    /// the query will be evaluated over).
    pub fn count(space: &FiniteMetricSpace, label: &str) -> Result<Self> {
        let point = space.index_of(label).ok_or_else(|| Error::LabelNotFound {
            label: label.to_string(),
        })?;
        Ok(Self {
            name: alloc::format!("count:{label}"),
            kind: QueryKind::Count { point },
        })
    }

    pub fn mode() -> Self {
        Self {
            name: "mode".to_string(),
            kind: QueryKind::Mode,
        }
    }

    pub fn histogram() -> Self {
        Self {
            name: "histogram".to_string(),
            kind: QueryKind::Histogram,
        }
    }

    pub fn constant(value: &str) -> Self {
        Self {
            name: alloc::format!("constant:{value}"),
            kind: QueryKind::Constant {
                value: value.to_string(),
            },
        }
    }

    pub fn table(name: &str, map: BTreeMap<Vec<usize>, String>) -> Self {
        Self {
            name: name.to_string(),
            kind: QueryKind::Table { map },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &QueryKind {
        &self.kind
    }

    /// Evaluates the query on one tuple of point indices into `space`.
    pub fn eval(&self, rows: &[usize], space: &FiniteMetricSpace) -> Result<String> {
        match &self.kind {
            QueryKind::Identity => {
                let labels: Vec<&str> = rows.iter().map(|&r| space.label(r)).collect();
                Ok(labels.join(","))
            }
            QueryKind::Count { point } => {
                Ok(rows.iter().filter(|&&r| r == *point).count().to_string())
            }
            QueryKind::Mode => {
                let mut counts = alloc::vec![0usize; space.len()];
                for &r in rows {
                    counts[r] += 1;
                }
                let best = counts
                    .iter()
                    .enumerate()
                    .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                Ok(space.label(best).to_string())
            }
            QueryKind::Histogram => {
                let mut counts = alloc::vec![0usize; space.len()];
                for &r in rows {
                    counts[r] += 1;
                }
                let rendered: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                Ok(rendered.join(","))
            }
            QueryKind::Constant { value } => Ok(value.clone()),
            QueryKind::Table { map } => map.get(rows).cloned().ok_or_else(|| {
                let labels: Vec<&str> = rows.iter().map(|&r| space.label(r)).collect();
                Error::QueryTableIncomplete {
                    tuple: labels.join(","),
                }
            }),
        }
    }
}

/// An exact response law: every reachable response paired with its
/// probability, sorted by response key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryDistribution {
    pub entries: Vec<(String, f64)>,
}

impl QueryDistribution {
    pub fn prob(&self, response: &str) -> f64 {
        self.entries
            .iter()
            .find(|(r, _)| r == response)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// A Monte Carlo response-law estimate with per-response standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloDistribution {
    pub samples: u64,
    pub seed: u64,
    /// (response, empirical frequency, binomial standard error).
    pub entries: Vec<(String, f64, f64)>,
}

impl ProductMechanism {
    /// The exact law of Q(X_d): enumerates every output tuple (guarded by
    /// [`LAW_CAPACITY`]) and accumulates product probabilities per fiber.
    pub fn pushforward(&self, db: &Database, query: &FiniteQuery) -> Result<QueryDistribution> {
        let outcomes = self.outcome_count();
        if outcomes > LAW_CAPACITY {
            return Err(Error::CapacityExceeded {
                what: "|U|^n output tuples",
                limit: LAW_CAPACITY,
                actual: outcomes,
                hint: "use pushforward_monte_carlo for a sample-based estimate",
            });
        }
        let law = self.law(db)?;
        let space = self.base().output_space();
        let u = space.len();
        let n = self.rows();
        let mut fibers: BTreeMap<String, f64> = BTreeMap::new();
        let mut tuple = alloc::vec![0usize; n];
        for &p in &law {
            let response = query.eval(&tuple, space)?;
            *fibers.entry(response).or_insert(0.0) += p;
            // Advance the mixed-radix counter, last coordinate fastest.
            for slot in tuple.iter_mut().rev() {
                *slot += 1;
                if *slot < u {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(QueryDistribution {
            entries: fibers.into_iter().collect(),
        })
    }

    /// Estimates the law of Q(X_d) from `samples` independent sanitised
    /// releases. Draw `i` uses the database sample seeded by stream
    /// `(seed, i)`. Standard errors are binomial: sqrt(f(1-f)/samples).
    pub fn pushforward_monte_carlo(
        &self,
        db: &Database,
        query: &FiniteQuery,
        samples: u64,
        seed: u64,
    ) -> Result<MonteCarloDistribution> {
        if samples == 0 {
            return Err(Error::EmptyDatabase);
        }
        let space = self.base().output_space();
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for i in 0..samples {
            let draw_seed = stream(seed, i).next_u64();
            let released = self.sample(db, draw_seed)?;
            let response = query.eval(released.rows(), space)?;
            *counts.entry(response).or_insert(0) += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(r, c)| {
                let f = c as f64 / samples as f64;
                let se = libm::sqrt(f * (1.0 - f) / samples as f64);
                (r, f, se)
            })
            .collect();
        Ok(MonteCarloDistribution {
            samples,
            seed,
            entries,
        })
    }
}

/// Output perturbation: the query is answered from the true database and
/// the answer itself is randomized, X_{Q,d} = X_{Q(d)}. Provided so the
/// contrast with sanitised release is executable; unlike sanitisation, per
/// -query noise admits averaging attacks under repeated queries.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPerturbation {
    query: FiniteQuery,
    response_kernel: FiniteKernel,
}

impl OutputPerturbation {
    pub fn new(query: FiniteQuery, response_kernel: FiniteKernel) -> Self {
        Self {
            query,
            response_kernel,
        }
    }

    pub fn query(&self) -> &FiniteQuery {
        &self.query
    }

    pub fn response_kernel(&self) -> &FiniteKernel {
        &self.response_kernel
    }

    /// The response law for database `db` (rows indexed into `data_space`):
    /// the response-kernel row at Q(db). Errors if the query's answer is
    /// not a point of the response kernel's input space.
    pub fn law(&self, db: &Database, data_space: &FiniteMetricSpace) -> Result<QueryDistribution> {
        if db.space_points() != data_space.len() {
            return Err(Error::SpaceMismatch {
                expected: db.space_points(),
                got: data_space.len(),
            });
        }
        let response = self.query.eval(db.rows(), data_space)?;
        let idx = self
            .response_kernel
            .input_space()
            .index_of(&response)
            .ok_or(Error::ResponseNotInKernel { response })?;
        let row = self.response_kernel.row(idx);
        let out = self.response_kernel.output_space();
        let entries: BTreeMap<String, f64> = row
            .iter()
            .enumerate()
            .map(|(y, &p)| (out.label(y).to_string(), p))
            .collect();
        Ok(QueryDistribution {
            entries: entries.into_iter().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::PrivacyParams;
    use alloc::vec;

    fn space(labels: &[&str]) -> FiniteMetricSpace {
        FiniteMetricSpace::discrete(labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn two_point_base() -> FiniteKernel {
        FiniteKernel::new(
            space(&["a", "b"]),
            None,
            vec![vec![0.75, 0.25], vec![0.25, 0.75]],
        )
        .unwrap()
    }

    #[test]
    fn identity_pushforward_at_n1_is_the_kernel_row() {
        let base = two_point_base();
        let s = base.input_space().clone();
        let mech = ProductMechanism::new(base, 1).unwrap();
        let db = Database::new(vec![0], &s).unwrap();
        let pf = mech.pushforward(&db, &FiniteQuery::identity()).unwrap();
        assert_eq!(pf.prob("a"), 0.75);
        assert_eq!(pf.prob("b"), 0.25);
    }

    #[test]
    fn count_pushforward_enumerates_four_outcomes() {
        let base = two_point_base();
        let s = base.input_space().clone();
        let mech = ProductMechanism::new(base, 2).unwrap();
        let db = Database::new(vec![0, 0], &s).unwrap();
        let q = FiniteQuery::count(&s, "a").unwrap();
        let pf = mech.pushforward(&db, &q).unwrap();
        assert_eq!(pf.prob("2"), 0.5625);
        assert_eq!(pf.prob("1"), 0.375);
        assert_eq!(pf.prob("0"), 0.0625);
        assert!((pf.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_query_is_a_point_mass() {
        let base = two_point_base();
        let s = base.input_space().clone();
        let mech = ProductMechanism::new(base, 2).unwrap();
        for rows in [vec![0, 0], vec![0, 1], vec![1, 1]] {
            let db = Database::new(rows, &s).unwrap();
            let pf = mech.pushforward(&db, &FiniteQuery::constant("c")).unwrap();
            assert_eq!(pf.entries, vec![("c".to_string(), 1.0)]);
        }
    }

    #[test]
    fn mode_breaks_ties_to_smallest_index() {
        let s = space(&["a", "b"]);
        let q = FiniteQuery::mode();
        assert_eq!(q.eval(&[0, 1], &s).unwrap(), "a");
        assert_eq!(q.eval(&[1, 1, 0], &s).unwrap(), "b");
    }

    #[test]
    fn histogram_renders_counts_in_point_order() {
        let s = space(&["a", "b", "c"]);
        let q = FiniteQuery::histogram();
        assert_eq!(q.eval(&[2, 0, 2], &s).unwrap(), "1,0,2");
    }

    #[test]
    fn table_query_must_be_total() {
        let s = space(&["a", "b"]);
        let mut map = BTreeMap::new();
        map.insert(vec![0], "x".to_string());
        let q = FiniteQuery::table("partial", map);
        assert_eq!(q.eval(&[0], &s).unwrap(), "x");
        assert!(matches!(
            q.eval(&[1], &s),
            Err(Error::QueryTableIncomplete { .. })
        ));
    }

    #[test]
    fn count_unknown_label_errors() {
        let s = space(&["a", "b"]);
        assert!(matches!(
            FiniteQuery::count(&s, "z"),
            Err(Error::LabelNotFound { .. })
        ));
    }

    #[test]
    fn monte_carlo_tracks_exact_law() {
        let base = two_point_base();
        let s = base.input_space().clone();
        let mech = ProductMechanism::new(base, 2).unwrap();
        let db = Database::new(vec![0, 0], &s).unwrap();
        let q = FiniteQuery::count(&s, "a").unwrap();
        let exact = mech.pushforward(&db, &q).unwrap();
        let mc = mech.pushforward_monte_carlo(&db, &q, 20_000, 5).unwrap();
        for (response, freq, se) in &mc.entries {
            let p = exact.prob(response);
            assert!(
                (freq - p).abs() < 4.0 * se + 1e-3,
                "{response}: {freq} vs {p}"
            );
        }
    }

    #[test]
    fn pushforward_capacity_guard() {
        let labels: Vec<String> = (0..10).map(|i| alloc::format!("x{i}")).collect();
        let s = FiniteMetricSpace::discrete(labels).unwrap();
        let mech = ProductMechanism::new(FiniteKernel::uniform(s.clone()), 8).unwrap();
        let db = Database::new(vec![0; 8], &s).unwrap();
        // 10^8 tuples exceed the 10^7 cap.
        let err = mech.pushforward(&db, &FiniteQuery::identity()).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { .. }));
    }

    #[test]
    fn output_perturbation_identity_kernel_answers_exactly() {
        let s = space(&["a", "b"]);
        let responses = space(&["0", "1", "2"]);
        let q = FiniteQuery::count(&s, "a").unwrap();
        let pert = OutputPerturbation::new(q, FiniteKernel::identity(responses));
        let db = Database::new(vec![0, 0], &s).unwrap();
        let law = pert.law(&db, &s).unwrap();
        assert_eq!(law.prob("2"), 1.0);
    }

    #[test]
    fn output_perturbation_uniform_kernel_ignores_the_database() {
        let s = space(&["a", "b"]);
        let responses = space(&["0", "1", "2"]);
        let q = FiniteQuery::count(&s, "a").unwrap();
        let pert = OutputPerturbation::new(q, FiniteKernel::uniform(responses));
        let db1 = Database::new(vec![0, 0], &s).unwrap();
        let db2 = Database::new(vec![1, 1], &s).unwrap();
        assert_eq!(pert.law(&db1, &s).unwrap(), pert.law(&db2, &s).unwrap());
    }

    #[test]
    fn output_perturbation_rr_kernel_is_a_row_lookup() {
        let s = space(&["a", "b"]);
        let responses = space(&["0", "1", "2"]);
        let rr = FiniteKernel::randomized_response(responses, 0.2).unwrap();
        let q = FiniteQuery::count(&s, "a").unwrap();
        let pert = OutputPerturbation::new(q, rr.clone());
        let db = Database::new(vec![0, 1], &s).unwrap(); // count = 1
        let law = pert.law(&db, &s).unwrap();
        assert_eq!(law.prob("1"), 0.6);
        assert_eq!(law.prob("0"), 0.2);
        assert_eq!(law.prob("2"), 0.2);
    }

    #[test]
    fn output_perturbation_range_mismatch() {
        let s = space(&["a", "b"]);
        // Response space lacks "2", reachable when both rows are "a".
        let responses = space(&["0", "1"]);
        let q = FiniteQuery::count(&s, "a").unwrap();
        let pert = OutputPerturbation::new(q, FiniteKernel::identity(responses));
        let db = Database::new(vec![0, 0], &s).unwrap();
        assert!(matches!(
            pert.law(&db, &s),
            Err(Error::ResponseNotInKernel { .. })
        ));
    }

    #[test]
    fn params_accessors() {
        let p = PrivacyParams::new(1.0, 0.25).unwrap();
        assert_eq!(p.epsilon(), 1.0);
        assert_eq!(p.delta(), 0.25);
    }
}
