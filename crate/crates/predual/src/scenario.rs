//! Scenario orchestration: validate one problem instance, reduce its
//! measure, run the primal and dual solvers across their window lists, and
//! assemble a deterministic report with the best sandwich and any applicable
//! closed-form reference values.

use crate::acsets::{reduce_measure, FrequencySet, ReductionPolicy, ReductionReport};
use crate::dual::{
    dual_maximize_matrix, dual_maximize_scalar, gap_report, DualCertificate, DualOptions, GapReport,
};
use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec};
use crate::laspace::Exponents;
use crate::measures::{MatrixWeight, SpectralMeasure};
use crate::primal::{primal_l2, primal_lalpha, PrimalOptions};
use serde::Serialize;

/// Stable schema identifier written into every report document.
pub const SCHEMA_VERSION: u32 = 1;

/// Reference grid size for high-resolution closed-form evaluations.
const REFERENCE_GRID: usize = 65_536;
/// Reference grid side for two-dimensional groups.
const REFERENCE_GRID_2D: usize = 256;

/// One fully specified problem instance.
#[derive(Clone, Debug)]
pub struct Scenario {
    /// Human-readable name, echoed in reports.
    pub label: String,
    /// The group and its quadrature grid.
    pub group: GroupSpec,
    /// The spectral measure.
    pub measure: SpectralMeasure,
    /// The prediction set `S`.
    pub set: FrequencySet,
    /// Target frequency (must lie in `S`).
    pub s: Frequency,
    /// Target coordinate, zero-based (`< q`).
    pub k: usize,
    /// Norm exponent in `(1, inf)`.
    pub alpha: f64,
    /// Ascending primal window radii.
    pub primal_windows: Vec<i64>,
    /// Ascending dual window radii (may be empty).
    pub dual_windows: Vec<i64>,
    /// Singular-part reduction policy.
    pub reduction: ReductionPolicy,
    /// Primal solver tuning.
    pub primal_opts: PrimalOptions,
    /// Dual solver tuning.
    pub dual_opts: DualOptions,
    /// Relative rank cutoff for carrier/range decisions.
    pub rank_rel_tol: f64,
}

impl Scenario {
    /// A scenario with default tolerances and auto reduction.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        group: GroupSpec,
        measure: SpectralMeasure,
        set: FrequencySet,
        s: Frequency,
        k: usize,
        alpha: f64,
        primal_windows: Vec<i64>,
        dual_windows: Vec<i64>,
    ) -> Self {
        Scenario {
            label: label.into(),
            group,
            measure,
            set,
            s,
            k,
            alpha,
            primal_windows,
            dual_windows,
            reduction: ReductionPolicy::default(),
            primal_opts: PrimalOptions::default(),
            dual_opts: DualOptions::default(),
            rank_rel_tol: 1e-12,
        }
    }

    /// Check every invariant that must hold before solving.
    pub fn validate(&self) -> Result<()> {
        Exponents::new(self.alpha)?;
        if self.measure.group() != self.group {
            return Err(Error::Invalid(format!(
                "scenario '{}': measure grid does not match the group",
                self.label
            )));
        }
        let q = self.measure.q();
        if q > 1 && (self.alpha - 2.0).abs() > 1e-14 {
            return Err(Error::Unsupported(format!(
                "scenario '{}': matrix measures (q = {q}) are supported for alpha = 2 only",
                self.label
            )));
        }
        if self.k >= q {
            return Err(Error::Invalid(format!(
                "scenario '{}': coordinate k = {} out of range for q = {q}",
                self.label, self.k
            )));
        }
        self.set.validate(&self.group)?;
        self.group.check_member(self.s)?;
        let s = self.group.canonical(self.s);
        if !self.set.contains(s, &self.group) {
            return Err(Error::FrequencyMismatch { freq: s });
        }
        if self.primal_windows.is_empty() {
            return Err(Error::Invalid(format!(
                "scenario '{}': at least one primal window is required",
                self.label
            )));
        }
        for list in [&self.primal_windows, &self.dual_windows] {
            for pair in list.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::Invalid(format!(
                        "scenario '{}': windows must be strictly ascending",
                        self.label
                    )));
                }
            }
            if list.first().is_some_and(|&f| f < 0) {
                return Err(Error::Invalid(format!(
                    "scenario '{}': windows must be nonnegative",
                    self.label
                )));
            }
        }
        if let Some(band) = self.group.band_limit() {
            let s_mag = match s {
                Frequency::Int(v) => v.abs(),
                Frequency::Pair(a, b) => a.abs().max(b.abs()),
            };
            for &f in self.primal_windows.iter().chain(self.dual_windows.iter()) {
                if 2 * f > band || s_mag + f > band {
                    return Err(Error::BandViolation {
                        freq: Frequency::Int(f),
                        band,
                    });
                }
            }
        }
        Ok(())
    }

    /// Validate, reduce, solve, and assemble the report.
    pub fn run(&self) -> Result<ScenarioReport> {
        self.validate()?;
        let start = std::time::Instant::now();
        let q = self.measure.q();
        let s = self.group.canonical(self.s);
        let (reduced, reduction) =
            reduce_measure(&self.measure, &self.set, &self.group, self.reduction);

        let mut primal = Vec::with_capacity(self.primal_windows.len());
        for &f in &self.primal_windows {
            let r = if (self.alpha - 2.0).abs() <= 1e-14 {
                primal_l2(
                    &reduced,
                    &self.set,
                    s,
                    self.k,
                    f,
                    &self.group,
                    self.rank_rel_tol,
                )?
            } else {
                primal_lalpha(
                    &reduced,
                    &self.set,
                    s,
                    self.k,
                    self.alpha,
                    f,
                    &self.group,
                    &self.primal_opts,
                    self.rank_rel_tol,
                )?
            };
            primal.push(WindowBound {
                window: f,
                bound: r.bound,
                iterations: r.iterations,
                converged: r.converged,
            });
        }

        let e = Exponents::new(self.alpha)?;
        let mut dual = Vec::with_capacity(self.dual_windows.len());
        for &h in &self.dual_windows {
            let cert = if q == 1 {
                dual_maximize_scalar(
                    &reduced.ac,
                    &self.set,
                    s,
                    &e,
                    h,
                    &self.group,
                    &self.dual_opts,
                    self.rank_rel_tol,
                )?
            } else {
                dual_maximize_matrix(
                    &reduced.ac,
                    &self.set,
                    s,
                    self.k,
                    h,
                    &self.group,
                    self.rank_rel_tol,
                )?
            };
            dual.push(cert);
        }

        let upper = primal.iter().map(|b| b.bound).fold(f64::INFINITY, f64::min);
        let lower = dual.iter().map(|c| c.bound).fold(0.0, f64::max);
        let sandwich = gap_report(upper, lower)?;
        let references = self.references(&reduced, s)?;

        Ok(ScenarioReport {
            label: self.label.clone(),
            group: self.group,
            set: self.set.clone(),
            s,
            k: self.k + 1,
            alpha: self.alpha,
            reduction,
            primal,
            dual,
            sandwich,
            references,
            timing_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Closed-form reference values for recognized patterns, evaluated at
    /// high resolution when the weight family permits. Only emitted when the
    /// reduced measure carries no atoms (the formulas address the
    /// absolutely continuous problem).
    fn references(&self, reduced: &SpectralMeasure, s: Frequency) -> Result<Vec<ReferenceValue>> {
        let mut out = Vec::new();
        if !reduced.singular.is_empty() {
            return Ok(out);
        }
        let w = self.reference_weight(&reduced.ac);
        let q = reduced.q();
        let e = Exponents::new(self.alpha)?;

        let is_singleton = matches!(
            &self.set,
            FrequencySet::Explicit(v) if v.len() == 1 && self.group.canonical(v[0]) == s
        );
        if is_singleton {
            if q == 1 {
                let v = w.scalar_pinv_power(e.beta, self.rank_rel_tol)?;
                let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
                if mean > 0.0 {
                    out.push(ReferenceValue {
                        name: "singleton-infimum".into(),
                        value: mean.powf(-1.0 / e.conjugate),
                    });
                }
            } else if w.deficient_nodes(self.rank_rel_tol)?.is_empty() {
                // The matrix closed form presumes full-rank samples; a
                // deficient node opens kernel directions that invalidate it.
                let pinvs = w.pinv_samples(self.rank_rel_tol)?;
                let n = pinvs.len();
                let mut mean = crate::linalg::CMat::zeros(q, q);
                for p in &pinvs {
                    mean += p;
                }
                mean /= crate::groups::C64::new(n as f64, 0.0);
                let back = crate::linalg::pseudo_inverse(&mean, self.rank_rel_tol)?;
                let val = back[(self.k, self.k)].re.max(0.0).sqrt();
                out.push(ReferenceValue {
                    name: "singleton-infimum".into(),
                    value: val,
                });
            }
        }

        let szego_match = q == 1
            && (self.alpha - 2.0).abs() <= 1e-14
            && matches!(
                (&self.set, s),
                (FrequencySet::HalfLine { bound, .. }, Frequency::Int(v)) if *bound == v
            );
        if szego_match {
            let n = w.group().grid_len();
            let mut log_sum = 0.0f64;
            let mut positive = true;
            for j in 0..n {
                let wj = w.scalar_at(j);
                if wj <= 0.0 {
                    positive = false;
                    break;
                }
                log_sum += wj.ln();
            }
            let value = if positive {
                (0.5 * log_sum / n as f64).exp()
            } else {
                0.0
            };
            out.push(ReferenceValue {
                name: "szego-infimum".into(),
                value,
            });
        }
        Ok(out)
    }

    /// The weight at reference resolution: re-evaluate the family on a finer
    /// grid when possible, otherwise use the native samples.
    fn reference_weight(&self, w: &MatrixWeight) -> MatrixWeight {
        let target = match self.group {
            GroupSpec::Integer { grid } if grid < REFERENCE_GRID => {
                GroupSpec::integer(REFERENCE_GRID).ok()
            }
            GroupSpec::Lattice2 { grid } if grid < REFERENCE_GRID_2D => {
                GroupSpec::lattice2(REFERENCE_GRID_2D).ok()
            }
            _ => None,
        };
        target
            .and_then(|t| w.resample(t))
            .unwrap_or_else(|| w.clone())
    }
}

/// One primal solve result inside a report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WindowBound {
    /// Window radius.
    pub window: i64,
    /// Upper bound achieved.
    pub bound: f64,
    /// Solver iterations (0 for direct solves).
    pub iterations: usize,
    /// Whether the solver reported convergence.
    pub converged: bool,
}

/// A recognized closed-form comparison value.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceValue {
    /// Formula name.
    pub name: String,
    /// Its high-resolution numeric value.
    pub value: f64,
}

/// Everything computed for one scenario. Serializes deterministically;
/// timings are excluded from the canonical form.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    /// Scenario label.
    pub label: String,
    /// Group and grid.
    pub group: GroupSpec,
    /// The prediction set expression.
    pub set: FrequencySet,
    /// Canonical target frequency.
    pub s: Frequency,
    /// Target coordinate, one-based as in configuration files.
    pub k: usize,
    /// Norm exponent.
    pub alpha: f64,
    /// Reduction decision and AC classification.
    pub reduction: ReductionReport,
    /// Per-window primal upper bounds.
    pub primal: Vec<WindowBound>,
    /// Per-window dual certificates with their certified bounds.
    pub dual: Vec<DualCertificate>,
    /// Best sandwich.
    pub sandwich: GapReport,
    /// Applicable closed-form references.
    pub references: Vec<ReferenceValue>,
    /// Wall-clock milliseconds for this scenario (not serialized).
    #[serde(skip)]
    pub timing_ms: f64,
}

/// A whole report document: schema header plus scenario reports in
/// configuration order.
#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    /// Schema version of this document.
    pub schema_version: u32,
    /// Tool mode that produced it.
    pub mode: String,
    /// Scenario results in configuration order.
    pub scenarios: Vec<ScenarioReport>,
}

impl ReportDocument {
    /// Assemble a document in configuration order.
    pub fn new(mode: impl Into<String>, scenarios: Vec<ScenarioReport>) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            mode: mode.into(),
            scenarios,
        }
    }

    /// The canonical byte-stable JSON form.
    pub fn to_canonical_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("report serialization failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }
}

/// Oracle counterpart of a scenario report: the independent reference
/// distance for the same windowed problem.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    /// Scenario label.
    pub label: String,
    /// Window radius the oracle solved at (the widest primal window).
    pub window: i64,
    /// The oracle's distance.
    pub distance: f64,
}

/// Run the brute-force oracle on a scenario (its widest primal window).
pub fn run_oracle(sc: &Scenario, opts: &crate::oracle::OracleOptions) -> Result<OracleReport> {
    sc.validate()?;
    let s = sc.group.canonical(sc.s);
    let (reduced, _) = reduce_measure(&sc.measure, &sc.set, &sc.group, sc.reduction);
    let window = *sc.primal_windows.last().expect("validated nonempty");
    let distance = crate::oracle::oracle_distance(
        &reduced, &sc.set, s, sc.k, sc.alpha, window, &sc.group, opts,
    )?;
    Ok(OracleReport {
        label: sc.label.clone(),
        window,
        distance,
    })
}

/// Oracle report document.
#[derive(Clone, Debug, Serialize)]
pub struct OracleDocument {
    /// Schema version of this document.
    pub schema_version: u32,
    /// Always "oracle".
    pub mode: String,
    /// Oracle results in configuration order.
    pub oracle: Vec<OracleReport>,
}

impl OracleDocument {
    /// Assemble an oracle document.
    pub fn new(oracle: Vec<OracleReport>) -> Self {
        OracleDocument {
            schema_version: SCHEMA_VERSION,
            mode: "oracle".into(),
            oracle,
        }
    }

    /// The canonical byte-stable JSON form.
    pub fn to_canonical_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("report serialization failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }
}
