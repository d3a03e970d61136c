//! Configuration files: TOML documents with one `[[scenario]]` table per
//! problem instance. Weight families are declared by name with their
//! parameters inline, or point at a sample table file; atoms, windows,
//! tolerances, and the reduction policy ride along. Loading applies
//! command-line overrides (grid refinement, window sweeps) before any
//! measure is built, so family weights re-evaluate exactly on the final
//! grid.

use crate::acsets::{parse_set, FrequencySet, ReductionPolicy};
use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec, C64};
use crate::linalg::CMat;
use crate::measures::{Atom, AtomicMeasure, MatrixWeight, SpectralMeasure};
use crate::scenario::Scenario;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Command-line adjustments applied while loading.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    /// Replace the grid length of integer/lattice groups.
    pub grid: Option<usize>,
    /// Replace both window lists (ascending radii).
    pub windows: Option<Vec<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigToml {
    #[serde(default)]
    scenario: Vec<ScenarioToml>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioToml {
    label: String,
    group: GroupToml,
    weight: WeightToml,
    #[serde(default)]
    atoms: Vec<AtomToml>,
    set: String,
    s: FreqToml,
    #[serde(default = "default_k")]
    k: usize,
    alpha: f64,
    primal_windows: Vec<i64>,
    #[serde(default)]
    dual_windows: Vec<i64>,
    #[serde(default)]
    reduction: Option<String>,
    #[serde(default)]
    rank_rel_tol: Option<f64>,
    #[serde(default)]
    solver_tol: Option<f64>,
    #[serde(default)]
    solver_max_iter: Option<usize>,
}

fn default_k() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum GroupToml {
    Integer { grid: usize },
    Cyclic { order: usize },
    Lattice2 { grid: usize },
}

#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum FreqToml {
    Int(i64),
    Pair([i64; 2]),
}

impl From<FreqToml> for Frequency {
    fn from(f: FreqToml) -> Frequency {
        match f {
            FreqToml::Int(v) => Frequency::Int(v),
            FreqToml::Pair([a, b]) => Frequency::Pair(a, b),
        }
    }
}

#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum ComplexToml {
    Re(f64),
    Pair([f64; 2]),
}

impl From<ComplexToml> for C64 {
    fn from(c: ComplexToml) -> C64 {
        match c {
            ComplexToml::Re(re) => C64::new(re, 0.0),
            ComplexToml::Pair([re, im]) => C64::new(re, im),
        }
    }
}

/// A matrix literal: a bare number (1x1) or rows of complex entries.
#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum MatrixToml {
    Scalar(f64),
    Rows(Vec<Vec<ComplexToml>>),
}

impl MatrixToml {
    fn build(&self, context: &str) -> Result<CMat> {
        match self {
            MatrixToml::Scalar(v) => Ok(CMat::from_element(1, 1, C64::new(*v, 0.0))),
            MatrixToml::Rows(rows) => {
                let q = rows.len();
                if q == 0 || rows.iter().any(|r| r.len() != q) {
                    return Err(Error::Config(format!(
                        "{context}: matrix rows must be square and nonempty"
                    )));
                }
                let mut m = CMat::zeros(q, q);
                for (i, row) in rows.iter().enumerate() {
                    for (j, &e) in row.iter().enumerate() {
                        m[(i, j)] = e.into();
                    }
                }
                Ok(m)
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomToml {
    node: usize,
    mass: MatrixToml,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermToml {
    freq: FreqToml,
    matrix: MatrixToml,
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
enum WeightToml {
    Constant {
        matrix: MatrixToml,
    },
    ModulusSquared {
        coefficients: Vec<(FreqToml, ComplexToml)>,
    },
    Piecewise {
        segments: Vec<[f64; 2]>,
    },
    MatrixPoly {
        terms: Vec<TermToml>,
    },
    Samples {
        file: PathBuf,
    },
}

impl WeightToml {
    fn build(&self, g: GroupSpec, base_dir: &Path, label: &str) -> Result<MatrixWeight> {
        match self {
            WeightToml::Constant { matrix } => {
                MatrixWeight::constant(g, matrix.build(&format!("scenario '{label}' weight"))?)
            }
            WeightToml::ModulusSquared { coefficients } => MatrixWeight::modulus_squared(
                g,
                coefficients
                    .iter()
                    .map(|&(f, c)| (f.into(), c.into()))
                    .collect(),
            ),
            WeightToml::Piecewise { segments } => {
                MatrixWeight::piecewise(g, segments.iter().map(|&[u, v]| (u, v)).collect())
            }
            WeightToml::MatrixPoly { terms } => {
                let coeffs: Result<Vec<(Frequency, CMat)>> = terms
                    .iter()
                    .map(|t| {
                        Ok((
                            t.freq.into(),
                            t.matrix
                                .build(&format!("scenario '{label}' matrix-poly term"))?,
                        ))
                    })
                    .collect();
                MatrixWeight::matrix_poly(g, coeffs?)
            }
            WeightToml::Samples { file } => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                let samples = read_sample_table(&path, g)?;
                MatrixWeight::from_samples(g, samples)
            }
        }
    }
}

/// Parse a sample table: one line per grid node — the node index followed by
/// `q^2` complex entries in row-major order, each entry a `re im` float
/// pair. Blank lines and `#` comments are skipped; every node must appear
/// exactly once.
pub fn read_sample_table(path: &Path, g: GroupSpec) -> Result<Vec<CMat>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read sample table {}: {e}", path.display())))?;
    let n = g.grid_len();
    let mut rows: Vec<Option<CMat>> = vec![None; n];
    let mut q: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let idx: usize = toks
            .next()
            .unwrap()
            .parse()
            .map_err(|_| table_err(path, lineno, "node index must be an integer"))?;
        if idx >= n {
            return Err(table_err(
                path,
                lineno,
                &format!("node index {idx} out of range (grid {n})"),
            ));
        }
        let values: Vec<f64> = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| table_err(path, lineno, "entries must be floats"))?;
        if !values.len().is_multiple_of(2) {
            return Err(table_err(path, lineno, "entries must come in re/im pairs"));
        }
        let entries = values.len() / 2;
        let side = (entries as f64).sqrt().round() as usize;
        if side * side != entries || side == 0 {
            return Err(table_err(
                path,
                lineno,
                &format!("{entries} entries do not form a square matrix"),
            ));
        }
        match q {
            None => q = Some(side),
            Some(prev) if prev != side => {
                return Err(table_err(
                    path,
                    lineno,
                    &format!("matrix size changed from {prev} to {side}"),
                ));
            }
            _ => {}
        }
        let mut m = CMat::zeros(side, side);
        for (e, chunk) in values.chunks_exact(2).enumerate() {
            m[(e / side, e % side)] = C64::new(chunk[0], chunk[1]);
        }
        if rows[idx].replace(m).is_some() {
            return Err(table_err(
                path,
                lineno,
                &format!("duplicate node index {idx}"),
            ));
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(idx, r)| {
            r.ok_or_else(|| {
                Error::Config(format!(
                    "sample table {}: node {idx} missing",
                    path.display()
                ))
            })
        })
        .collect()
}

fn table_err(path: &Path, lineno: usize, msg: &str) -> Error {
    Error::Config(format!(
        "sample table {} line {}: {msg}",
        path.display(),
        lineno + 1
    ))
}

fn parse_reduction(text: Option<&str>, label: &str) -> Result<ReductionPolicy> {
    match text {
        None | Some("auto") => Ok(ReductionPolicy::Auto),
        Some("force-ac") => Ok(ReductionPolicy::ForceAc),
        Some("force-full") => Ok(ReductionPolicy::ForceFull),
        Some(other) => Err(Error::Config(format!(
            "scenario '{label}': unknown reduction policy '{other}' (use auto, force-ac, force-full)"
        ))),
    }
}

impl ScenarioToml {
    fn build(&self, base_dir: &Path, overrides: &Overrides) -> Result<Scenario> {
        let group = match self.group {
            GroupToml::Integer { grid } => GroupSpec::integer(overrides.grid.unwrap_or(grid))?,
            GroupToml::Cyclic { order } => GroupSpec::cyclic(order)?,
            GroupToml::Lattice2 { grid } => GroupSpec::lattice2(overrides.grid.unwrap_or(grid))?,
        };
        let weight = self.weight.build(group, base_dir, &self.label)?;
        let q = weight.q();
        let atoms: Result<Vec<Atom>> = self
            .atoms
            .iter()
            .map(|a| {
                let mass = a.mass.build(&format!("scenario '{}' atom", self.label))?;
                Ok(Atom { node: a.node, mass })
            })
            .collect();
        let singular = AtomicMeasure::new(group, q, atoms?)?;
        let measure = SpectralMeasure::new(weight, singular)?;
        let set: FrequencySet = parse_set(&self.set)?;
        if self.k == 0 {
            return Err(Error::Config(format!(
                "scenario '{}': k is one-based (k = 1 is the first coordinate)",
                self.label
            )));
        }
        let mut sc = Scenario::new(
            self.label.clone(),
            group,
            measure,
            set,
            Frequency::from(self.s),
            self.k - 1,
            self.alpha,
            overrides
                .windows
                .clone()
                .unwrap_or_else(|| self.primal_windows.clone()),
            overrides
                .windows
                .clone()
                .unwrap_or_else(|| self.dual_windows.clone()),
        );
        sc.reduction = parse_reduction(self.reduction.as_deref(), &self.label)?;
        if let Some(t) = self.rank_rel_tol {
            sc.rank_rel_tol = t;
        }
        if let Some(t) = self.solver_tol {
            sc.primal_opts.tol = t;
            sc.dual_opts.tol = t;
        }
        if let Some(it) = self.solver_max_iter {
            sc.primal_opts.max_iter = it;
            sc.dual_opts.max_iter = it;
        }
        Ok(sc)
    }
}

/// Load scenarios from a TOML config file, applying overrides before any
/// measure is constructed.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let parsed: ConfigToml = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
    if parsed.scenario.is_empty() {
        return Err(Error::Config(format!(
            "config {}: no [[scenario]] tables",
            path.display()
        )));
    }
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    parsed
        .scenario
        .iter()
        .map(|sc| sc.build(base_dir, overrides))
        .collect()
}
