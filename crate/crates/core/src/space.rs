//! Finite metric spaces, databases over them, and the Hamming neighbour
//! relation.
//!
//! A space is a labelled point set with a validated distance function. Two
//! constructions are built in: the discrete metric on an arbitrary label
//! set and the symmetric-difference metric on the power set of a universe.
//! Databases index points by position; labels exist for I/O only.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when validating symmetry and the triangle inequality on
/// human-authored matrices. The zero diagonal is checked exactly.
pub const AXIOM_TOLERANCE: f64 = 1e-12;

/// Largest universe for which the power set is enumerated (2^16 points).
pub const MAX_POWERSET_UNIVERSE: usize = 16;

/// How point-to-point distances are evaluated.
///
/// Power-set spaces index points by subset bitmask and compute the
/// symmetric-difference distance from popcounts; materialising the dense
/// matrix at the 2^16-point cap would take tens of gigabytes.
#[derive(Debug, Clone, PartialEq)]
enum Distances {
    /// Row-major dense matrix, side = number of points.
    Dense(Vec<f64>),
    /// Point `i` is the subset of `universe` with bitmask `i`.
    SymmetricDifference { universe: Vec<String> },
}

/// A finite metric space: labelled points plus a distance function
/// satisfying the three metric axioms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    distances: Distances,
}

impl FiniteMetricSpace {
    /// Builds a space from an explicit distance matrix, validating all
    /// three metric axioms. The diagonal must be exactly zero; symmetry and
    /// the triangle inequality may deviate by [`AXIOM_TOLERANCE`].
    #[allow(clippy::needless_range_loop)] // axiom errors name indices
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        check_unique(&labels)?;
        check_label_text(&labels, false)?;
        if dist.len() != n {
            return Err(Error::MatrixShape {
                points: n,
                rows: dist.len(),
                row: 0,
                cols: n,
            });
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MatrixShape {
                    points: n,
                    rows: dist.len(),
                    row: i,
                    cols: row.len(),
                });
            }
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::DiagonalNotZero {
                    i,
                    value: dist[i][i],
                });
            }
            for j in 0..n {
                if i != j && !(dist[i][j].is_finite() && dist[i][j] > 0.0) {
                    return Err(Error::DistanceNotPositive {
                        i,
                        j,
                        value: dist[i][j],
                    });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if libm::fabs(dist[i][j] - dist[j][i]) > AXIOM_TOLERANCE {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        forward: dist[i][j],
                        backward: dist[j][i],
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let via = dist[i][j] + dist[j][k];
                    if dist[i][k] > via + AXIOM_TOLERANCE {
                        return Err(Error::TriangleInequality {
                            i,
                            j,
                            k,
                            direct: dist[i][k],
                            via,
                        });
                    }
                }
            }
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in &dist {
            flat.extend_from_slice(row);
        }
        Ok(Self {
            labels,
            distances: Distances::Dense(flat),
        })
    }

    /// The discrete metric: distance 1 between any two distinct points.
    pub fn discrete(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        check_unique(&labels)?;
        check_label_text(&labels, false)?;
        let mut flat = alloc::vec![1.0; n * n];
        for i in 0..n {
            flat[i * n + i] = 0.0;
        }
        Ok(Self {
            labels,
            distances: Distances::Dense(flat),
        })
    }

    /// The power set of `universe` under the symmetric-difference metric
    /// ρ(A, B) = |(A ∪ B) \ (A ∩ B)|. Point `i` is the subset whose bitmask
    /// is `i`; its label joins the member elements with `;` (the empty set
    /// has the empty label). Entries of a database over this space may have
    /// different cardinalities.
    pub fn symmetric_difference(universe: Vec<String>) -> Result<Self> {
        if universe.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        if universe.len() > MAX_POWERSET_UNIVERSE {
            return Err(Error::UniverseTooLarge {
                size: universe.len(),
                max: MAX_POWERSET_UNIVERSE,
            });
        }
        check_unique(&universe)?;
        check_label_text(&universe, true)?;
        let bits = universe.len();
        let mut labels = Vec::with_capacity(1 << bits);
        for mask in 0usize..(1 << bits) {
            let mut label = String::new();
            for (b, element) in universe.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    if !label.is_empty() {
                        label.push(';');
                    }
                    label.push_str(element);
                }
            }
            labels.push(label);
        }
        Ok(Self {
            labels,
            distances: Distances::SymmetricDifference { universe },
        })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distance between points `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.distances {
            Distances::Dense(flat) => flat[i * self.labels.len() + j],
            Distances::SymmetricDifference { .. } => (i ^ j).count_ones() as f64,
        }
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of the point with the given label, if any.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// For power-set spaces, the ordered universe whose bit `b` corresponds
    /// to element `b` of every point's bitmask index.
    pub fn powerset_universe(&self) -> Option<&[String]> {
        match &self.distances {
            Distances::SymmetricDifference { universe } => Some(universe),
            Distances::Dense(_) => None,
        }
    }

    /// Diameter, minimum positive distance, and m = |D| - 1.
    ///
    /// Errors on single-point spaces, where κ is undefined.
    pub fn stats(&self) -> Result<SpaceStats> {
        let n = self.labels.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        match &self.distances {
            // Extremes of the symmetric-difference metric are attained at
            // (∅, universe) and at any singleton flip.
            Distances::SymmetricDifference { universe } => Ok(SpaceStats {
                diam: universe.len() as f64,
                kappa: 1.0,
                m: n - 1,
            }),
            Distances::Dense(_) => {
                let mut diam = f64::NEG_INFINITY;
                let mut kappa = f64::INFINITY;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let d = self.dist(i, j);
                        if d > diam {
                            diam = d;
                        }
                        if d < kappa {
                            kappa = d;
                        }
                    }
                }
                Ok(SpaceStats {
                    diam,
                    kappa,
                    m: n - 1,
                })
            }
        }
    }
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for label in labels {
        if !seen.insert(label) {
            return Err(Error::DuplicateLabel {
                label: label.clone(),
            });
        }
    }
    Ok(())
}

/// Labels key CSV rows and tuple renderings, so separator characters in
/// them would make those encodings ambiguous.
fn check_label_text(labels: &[String], forbid_semicolon: bool) -> Result<()> {
    for label in labels {
        if label.is_empty() {
            return Err(Error::InvalidLabel {
                label: label.clone(),
                reason: "label is empty",
            });
        }
        if label.contains(',') || label.contains('\n') || label.contains('\r') {
            return Err(Error::InvalidLabel {
                label: label.clone(),
                reason: "labels must not contain commas or newlines",
            });
        }
        if forbid_semicolon && label.contains(';') {
            return Err(Error::InvalidLabel {
                label: label.clone(),
                reason: "universe elements must not contain semicolons",
            });
        }
    }
    Ok(())
}

/// Summary statistics of a space: its diameter, the minimum positive
/// pairwise distance κ, and m = |D| - 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceStats {
    pub diam: f64,
    pub kappa: f64,
    pub m: usize,
}

/// A database: an ordered list of point indices into a fixed space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    rows: Vec<usize>,
    points: usize,
}

impl Database {
    /// Validates every row index against the space. Databases are nonempty.
    pub fn new(rows: Vec<usize>, space: &FiniteMetricSpace) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        let points = space.len();
        for &row in &rows {
            if row >= points {
                return Err(Error::PointOutOfRange { index: row, points });
            }
        }
        Ok(Self { rows, points })
    }

    /// Number of rows n.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Size of the space the rows index into.
    pub fn space_points(&self) -> usize {
        self.points
    }

    /// Row labels resolved against `space` (which must match in size).
    pub fn label_vec(&self, space: &FiniteMetricSpace) -> Result<Vec<String>> {
        if space.len() != self.points {
            return Err(Error::SpaceMismatch {
                expected: self.points,
                got: space.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|&r| String::from(space.label(r)))
            .collect())
    }

    /// Hamming distance: the number of positions where the rows differ.
    /// Two databases are neighbours exactly when this is 1.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.rows.len() != other.rows.len() {
            return Err(Error::LengthMismatch {
                left: self.rows.len(),
                right: other.rows.len(),
            });
        }
        if self.points != other.points {
            return Err(Error::SpaceMismatch {
                expected: self.points,
                got: other.points,
            });
        }
        Ok(self
            .rows
            .iter()
            .zip(&other.rows)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// True when the two databases differ in exactly one row.
    pub fn is_neighbor(&self, other: &Self) -> Result<bool> {
        Ok(self.hamming(other)? == 1)
    }
}
