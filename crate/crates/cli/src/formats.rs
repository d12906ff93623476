//! On-disk formats: JSON specs for spaces, kernels and queries; CSV for
//! databases and functional records.
//!
//! Spec files may reference other spec files by path (resolved relative to
//! the referencing file's directory) or inline the object directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use metricdp_core::mechanism::{FiniteKernel, FiniteQuery};
use metricdp_core::space::{Database, FiniteMetricSpace};

/// A metric-space spec: an explicit matrix or a named construction.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Tagged(TaggedSpace),
    Explicit {
        labels: Vec<String>,
        dist: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaggedSpace {
    Discrete { labels: Vec<String> },
    Powerset { universe: Vec<String> },
}

impl SpaceSpec {
    pub fn build(self) -> Result<FiniteMetricSpace> {
        let space = match self {
            SpaceSpec::Tagged(TaggedSpace::Discrete { labels }) => {
                FiniteMetricSpace::discrete(labels)
            }
            SpaceSpec::Tagged(TaggedSpace::Powerset { universe }) => {
                FiniteMetricSpace::symmetric_difference(universe)
            }
            SpaceSpec::Explicit { labels, dist } => FiniteMetricSpace::new(labels, dist),
        }?;
        Ok(space)
    }
}

/// Inline space spec or a path to one.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Path(String),
    Inline(SpaceSpec),
}

impl SpaceRef {
    fn build(self, base_dir: &Path) -> Result<FiniteMetricSpace> {
        match self {
            SpaceRef::Path(path) => load_space(&base_dir.join(path)),
            SpaceRef::Inline(spec) => spec.build(),
        }
    }
}

pub fn load_space(path: &Path) -> Result<FiniteMetricSpace> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read space spec {}", path.display()))?;
    let spec: SpaceSpec = serde_json::from_str(&text)
        .with_context(|| format!("malformed space spec {}", path.display()))?;
    spec.build()
        .with_context(|| format!("invalid space spec {}", path.display()))
}

/// A kernel spec: explicit row-stochastic matrix or a named construction.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Tagged(TaggedKernel),
    Explicit {
        input_space: SpaceRef,
        #[serde(default)]
        output_space: Option<SpaceRef>,
        probs: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaggedKernel {
    Rr { space: SpaceRef, p: f64 },
}

impl KernelSpec {
    pub fn build(self, base_dir: &Path) -> Result<FiniteKernel> {
        let kernel = match self {
            KernelSpec::Tagged(TaggedKernel::Rr { space, p }) => {
                FiniteKernel::randomized_response(space.build(base_dir)?, p)
            }
            KernelSpec::Explicit {
                input_space,
                output_space,
                probs,
            } => {
                let input = input_space.build(base_dir)?;
                let output = output_space.map(|s| s.build(base_dir)).transpose()?;
                FiniteKernel::new(input, output, probs)
            }
        }?;
        Ok(kernel)
    }
}

pub fn load_kernel(path: &Path) -> Result<FiniteKernel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read kernel spec {}", path.display()))?;
    let spec: KernelSpec = serde_json::from_str(&text)
        .with_context(|| format!("malformed kernel spec {}", path.display()))?;
    let base_dir = path.parent().map(PathBuf::from).unwrap_or_default();
    spec.build(&base_dir)
        .with_context(|| format!("invalid kernel spec {}", path.display()))
}

/// A query spec. Extensional tables key tuples by comma-joined labels.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuerySpec {
    Identity,
    Count { label: String },
    Mode,
    Histogram,
    Constant { value: String },
    Table { map: BTreeMap<String, String> },
}

impl QuerySpec {
    /// Resolves labels against the output space the query will act on.
    pub fn build(self, space: &FiniteMetricSpace) -> Result<FiniteQuery> {
        Ok(match self {
            QuerySpec::Identity => FiniteQuery::identity(),
            QuerySpec::Count { label } => FiniteQuery::count(space, &label)?,
            QuerySpec::Mode => FiniteQuery::mode(),
            QuerySpec::Histogram => FiniteQuery::histogram(),
            QuerySpec::Constant { value } => FiniteQuery::constant(&value),
            QuerySpec::Table { map } => {
                let mut resolved = BTreeMap::new();
                for (tuple, response) in map {
                    let mut rows = Vec::new();
                    for label in tuple.split(',') {
                        let index = space.index_of(label).with_context(|| {
                            format!("table key {tuple:?}: unknown label {label:?}")
                        })?;
                        rows.push(index);
                    }
                    resolved.insert(rows, response);
                }
                FiniteQuery::table("table", resolved)
            }
        })
    }
}

pub fn load_query(path: &Path, space: &FiniteMetricSpace) -> Result<FiniteQuery> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read query spec {}", path.display()))?;
    let spec: QuerySpec = serde_json::from_str(&text)
        .with_context(|| format!("malformed query spec {}", path.display()))?;
    spec.build(space)
        .with_context(|| format!("invalid query spec {}", path.display()))
}

/// Parses a database CSV: one row per record, a single column of labels.
/// Over a power-set space a field is a semicolon-separated element list
/// (empty field = the empty set).
pub fn parse_database(text: &str, space: &FiniteMetricSpace) -> Result<Database> {
    let mut rows = Vec::new();
    if let Some(universe) = space.powerset_universe() {
        for (lineno, line) in text.lines().enumerate() {
            let field = line.trim();
            let mut mask = 0usize;
            if !field.is_empty() {
                for element in field.split(';') {
                    let bit = universe
                        .iter()
                        .position(|u| u == element)
                        .with_context(|| {
                            format!("line {}: unknown universe element {element:?}", lineno + 1)
                        })?;
                    mask |= 1 << bit;
                }
            }
            rows.push(mask);
        }
    } else {
        for (lineno, line) in text.lines().enumerate() {
            let label = line.trim();
            let index = space
                .index_of(label)
                .with_context(|| format!("line {}: unknown label {label:?}", lineno + 1))?;
            rows.push(index);
        }
    }
    Ok(Database::new(rows, space)?)
}

pub fn load_database(path: &Path, space: &FiniteMetricSpace) -> Result<Database> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read database {}", path.display()))?;
    parse_database(&text, space).with_context(|| format!("invalid database {}", path.display()))
}

/// Renders a database back to CSV label rows.
pub fn render_database(db: &Database, space: &FiniteMetricSpace) -> Result<String> {
    let labels = db.label_vec(space)?;
    let mut out = labels.join("\n");
    out.push('\n');
    Ok(out)
}

/// A functional database: grid times in the first CSV row, one record of k
/// values per following row.
#[derive(Debug, Clone)]
pub struct FunctionalData {
    pub grid: Vec<f64>,
    pub records: Vec<Vec<f64>>,
}

pub fn parse_functional(text: &str) -> Result<FunctionalData> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().context("functional CSV is empty")?;
    let grid = parse_float_row(header, 1)?;
    let mut records = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_float_row(line, lineno + 1)?;
        if record.len() != grid.len() {
            bail!(
                "line {}: record has {} values, grid has {}",
                lineno + 1,
                record.len(),
                grid.len()
            );
        }
        records.push(record);
    }
    if records.is_empty() {
        bail!("functional CSV has no records");
    }
    Ok(FunctionalData { grid, records })
}

fn parse_float_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .enumerate()
        .map(|(field, raw)| {
            raw.trim().parse::<f64>().with_context(|| {
                format!("line {lineno}, field {}: not a number: {raw:?}", field + 1)
            })
        })
        .collect()
}

pub fn load_functional(path: &Path) -> Result<FunctionalData> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read functional database {}", path.display()))?;
    parse_functional(&text)
        .with_context(|| format!("invalid functional database {}", path.display()))
}

/// Renders a functional database (grid header plus one row per record).
pub fn render_functional(grid: &[f64], records: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let row = |values: &[f64]| {
        values
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&row(grid));
    out.push('\n');
    for record in records {
        out.push_str(&row(record));
        out.push('\n');
    }
    out
}

/// Rectangle-pair input for the decomposition: `{"pairs": [{"a": [...], "b": [...]}]}`.
#[derive(Debug, Deserialize)]
pub struct RectanglePairsFile {
    pub pairs: Vec<RectanglePairSpec>,
}

#[derive(Debug, Deserialize)]
pub struct RectanglePairSpec {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

pub fn load_rectangle_pairs(
    path: &Path,
) -> Result<
    Vec<(
        std::collections::BTreeSet<String>,
        std::collections::BTreeSet<String>,
    )>,
> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read rectangle pairs {}", path.display()))?;
    let file: RectanglePairsFile = serde_json::from_str(&text)
        .with_context(|| format!("malformed rectangle pairs {}", path.display()))?;
    Ok(file
        .pairs
        .into_iter()
        .map(|p| (p.a.into_iter().collect(), p.b.into_iter().collect()))
        .collect())
}
