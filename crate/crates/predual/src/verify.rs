//! Built-in reference suite: nine deterministic acceptance checks covering
//! closed forms, strong duality on finite groups, the singular-part
//! reduction, and the structural inequalities the solvers must never
//! violate. Each criterion runs in isolation and reports pass/fail with a
//! numeric detail line; the CLI `verify` subcommand and the acceptance test
//! both drive this module.

use crate::acsets::{AcRule, AcStatus, FrequencySet, HalfDir, ReductionAction, ReductionPolicy};
use crate::dual::{density_check, dual_maximize_scalar, DensityVerdict, DualOptions};
use crate::error::Result;
use crate::groups::{Frequency, GroupSpec, C64};
use crate::laspace::Exponents;
use crate::linalg::{pseudo_inverse, CMat, CVec};
use crate::measures::{Atom, AtomicMeasure, MatrixWeight, SpectralMeasure};
use crate::oracle::{oracle_distance, OracleOptions};
use crate::primal::{primal_l2, primal_lalpha, PrimalOptions};
use crate::scenario::Scenario;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct CriterionResult {
    /// Criterion number (1-based).
    pub id: usize,
    /// Short name.
    pub name: &'static str,
    /// Whether it passed.
    pub passed: bool,
    /// Numeric evidence (worst deviations, bounds, rules).
    pub detail: String,
}

/// Number of criteria in the suite.
pub const CRITERIA: usize = 9;

/// Run one criterion by number (1-based).
pub fn run_criterion(id: usize) -> CriterionResult {
    let (name, outcome): (&'static str, Result<(bool, String)>) = match id {
        1 => ("identity scenarios", criterion_identity()),
        2 => ("kolmogorov singleton", criterion_kolmogorov()),
        3 => ("general-alpha singleton", criterion_general_alpha()),
        4 => ("szego scenario", criterion_szego()),
        5 => ("singular-part invariance", criterion_singular_invariance()),
        6 => ("finite-group strong duality", criterion_finite_duality()),
        7 => ("matrix case", criterion_matrix()),
        8 => ("invariant suites", criterion_invariants()),
        9 => ("density criterion", criterion_density()),
        _ => {
            return CriterionResult {
                id,
                name: "unknown",
                passed: false,
                detail: format!("no criterion {id}; valid ids are 1..={CRITERIA}"),
            };
        }
    };
    match outcome {
        Ok((passed, detail)) => CriterionResult {
            id,
            name,
            passed,
            detail,
        },
        Err(e) => CriterionResult {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Run the whole suite in order.
pub fn run_all() -> Vec<CriterionResult> {
    (1..=CRITERIA).map(run_criterion).collect()
}

fn ma1(g: GroupSpec, a: f64) -> Result<MatrixWeight> {
    MatrixWeight::modulus_squared(
        g,
        vec![
            (Frequency::Int(0), C64::new(1.0, 0.0)),
            (Frequency::Int(1), C64::new(-a, 0.0)),
        ],
    )
}

fn singleton_zero() -> FrequencySet {
    FrequencySet::explicit(vec![Frequency::Int(0)])
}

/// Criterion 1: w = 1, S = {0}: d = 1 exactly for alpha in {1.5, 2, 3}.
fn criterion_identity() -> Result<(bool, String)> {
    let g = GroupSpec::integer(256)?;
    let m = SpectralMeasure::absolutely_continuous(MatrixWeight::scalar_constant(g, 1.0)?);
    let mut worst = 0.0f64;
    for alpha in [1.5, 2.0, 3.0] {
        let mut sc = Scenario::new(
            format!("identity-{alpha}"),
            g,
            m.clone(),
            singleton_zero(),
            Frequency::Int(0),
            0,
            alpha,
            vec![4],
            vec![0],
        );
        sc.dual_opts = DualOptions::default();
        let report = sc.run()?;
        worst = worst
            .max((report.sandwich.upper - 1.0).abs())
            .max((report.sandwich.lower - 1.0).abs())
            .max(report.sandwich.gap.abs());
    }
    Ok((
        worst <= 1e-9,
        format!("worst deviation from 1: {worst:.3e} (tol 1e-9)"),
    ))
}

/// Criterion 2: Kolmogorov singleton at N = 4096, F = 64; the window-zero
/// dual certificate already achieves sqrt(0.75).
fn criterion_kolmogorov() -> Result<(bool, String)> {
    let g = GroupSpec::integer(4096)?;
    let w = ma1(g, 0.5)?;
    let m = SpectralMeasure::absolutely_continuous(w);
    let sc = Scenario::new(
        "kolmogorov",
        g,
        m,
        singleton_zero(),
        Frequency::Int(0),
        0,
        2.0,
        vec![64],
        vec![0],
    );
    let report = sc.run()?;
    let expect = 0.75f64.sqrt();
    let dev_up = (report.sandwich.upper - expect).abs();
    let dev_lo = (report.sandwich.lower - expect).abs();
    let pass = dev_up <= 1e-6 && dev_lo <= 1e-6;
    Ok((
        pass,
        format!("upper dev {dev_up:.3e}, window-0 dual dev {dev_lo:.3e} (tol 1e-6)"),
    ))
}

/// Criterion 3: alpha = 3 singleton against the high-resolution quadrature
/// of the closed-form integral.
fn criterion_general_alpha() -> Result<(bool, String)> {
    let g = GroupSpec::integer(4096)?;
    let w = ma1(g, 0.5)?;
    let m = SpectralMeasure::absolutely_continuous(w);
    let mut sc = Scenario::new(
        "singleton-alpha3",
        g,
        m,
        singleton_zero(),
        Frequency::Int(0),
        0,
        3.0,
        vec![64],
        vec![0],
    );
    sc.primal_opts = PrimalOptions {
        tol: 1e-13,
        max_iter: 800,
        ..Default::default()
    };
    let report = sc.run()?;
    let reference = report
        .references
        .iter()
        .find(|r| r.name == "singleton-infimum")
        .map(|r| r.value)
        .ok_or_else(|| crate::error::Error::Invalid("missing reference".into()))?;
    let dev_up = (report.sandwich.upper - reference).abs();
    let dev_lo = (report.sandwich.lower - reference).abs();
    let pass = dev_up <= 1e-5 && dev_lo <= 1e-5;
    Ok((
        pass,
        format!(
            "reference {reference:.9}, upper dev {dev_up:.3e}, lower dev {dev_lo:.3e} (tol 1e-5)"
        ),
    ))
}

/// Criterion 4: Szego scenario sandwich around 1.0 with relative width
/// <= 1e-3 at F = H = 128, N = 4096.
fn criterion_szego() -> Result<(bool, String)> {
    let g = GroupSpec::integer(4096)?;
    let w = ma1(g, 0.5)?;
    let m = SpectralMeasure::absolutely_continuous(w);
    let sc = Scenario::new(
        "szego",
        g,
        m,
        FrequencySet::HalfLine {
            dir: HalfDir::Le,
            bound: 0,
        },
        Frequency::Int(0),
        0,
        2.0,
        vec![128],
        vec![128],
    );
    let report = sc.run()?;
    let contains = report.sandwich.lower <= 1.0 + 1e-9 && report.sandwich.upper >= 1.0 - 1e-9;
    let pass = contains && report.sandwich.rel_gap <= 1e-3;
    Ok((
        pass,
        format!(
            "sandwich [{:.9}, {:.9}], rel width {:.3e} (tol 1e-3)",
            report.sandwich.lower, report.sandwich.upper, report.sandwich.rel_gap
        ),
    ))
}

/// Criterion 5: adding an atom changes nothing once the reduction drops it;
/// the full-measure primal agrees within 5e-3 at F = 256 and the
/// discrepancy shrinks monotonically in F.
fn criterion_singular_invariance() -> Result<(bool, String)> {
    let g = GroupSpec::integer(4096)?;
    let w = ma1(g, 0.5)?;
    let s_set = FrequencySet::HalfLine {
        dir: HalfDir::Le,
        bound: 0,
    };
    let atoms = AtomicMeasure::new(
        g,
        1,
        vec![Atom {
            node: 17,
            mass: CMat::from_element(1, 1, C64::new(0.7, 0.0)),
        }],
    )?;
    let full = SpectralMeasure::new(w.clone(), atoms)?;

    // The automatic reduction must fire with the Riesz half-line rule.
    let (reduced, rep) = crate::acsets::reduce_measure(&full, &s_set, &g, ReductionPolicy::Auto);
    let rule_ok = matches!(
        &rep.complement_status,
        AcStatus::ProvenAc {
            rule: AcRule::RieszHalfLine
        }
    ) && matches!(rep.action, ReductionAction::DroppedSingular { atoms: 1 });
    if !rule_ok {
        return Ok((
            false,
            format!("reduction did not fire as expected: {rep:?}"),
        ));
    }

    let mut discrepancies = Vec::new();
    for f in [64i64, 128, 256] {
        let d_red = primal_l2(&reduced, &s_set, Frequency::Int(0), 0, f, &g, 1e-12)?.bound;
        let d_full = primal_l2(&full, &s_set, Frequency::Int(0), 0, f, &g, 1e-12)?.bound;
        discrepancies.push((d_full - d_red).abs());
    }
    let monotone = discrepancies[0] > discrepancies[1] && discrepancies[1] > discrepancies[2];
    let close = discrepancies[2] <= 5e-3;
    Ok((monotone && close, format!(
        "discrepancies over F=(64,128,256): {:.3e}, {:.3e}, {:.3e} (final tol 5e-3, monotone {monotone})",
        discrepancies[0], discrepancies[1], discrepancies[2]
    )))
}

/// Random positive scalar weight samples on a cyclic group.
fn random_cyclic_weight(rng: &mut ChaCha8Rng, g: GroupSpec, n: usize) -> Result<MatrixWeight> {
    let samples: Vec<CMat> = (0..n)
        .map(|_| CMat::from_element(1, 1, C64::new(rng.gen_range(0.2..2.0), 0.0)))
        .collect();
    MatrixWeight::from_samples(g, samples)
}

/// Random subset of Z_n containing a random target s.
fn random_set(rng: &mut ChaCha8Rng, n: usize) -> (FrequencySet, Frequency) {
    loop {
        let members: Vec<Frequency> = (0..n as i64)
            .filter(|_| rng.gen_bool(0.5))
            .map(Frequency::Int)
            .collect();
        if members.is_empty() {
            continue;
        }
        let s = members[rng.gen_range(0..members.len())];
        return (FrequencySet::explicit(members), s);
    }
}

/// Criterion 6: 20 random cyclic scenarios; primal, dual and oracle agree.
fn criterion_finite_duality() -> Result<(bool, String)> {
    let n = 8usize;
    let g = GroupSpec::cyclic(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst2 = 0.0f64;
    let mut worst_general = 0.0f64;
    let popts = PrimalOptions {
        tol: 1e-14,
        max_iter: 4000,
        ..Default::default()
    };
    let dopts = DualOptions {
        tol: 1e-14,
        max_iter: 4000,
        ..Default::default()
    };
    for _ in 0..20 {
        let w = random_cyclic_weight(&mut rng, g, n)?;
        let (s_set, s) = random_set(&mut rng, n);
        let m = SpectralMeasure::absolutely_continuous(w.clone());

        for alpha in [2.0, 1.5, 3.0] {
            let primal = if alpha == 2.0 {
                primal_l2(&m, &s_set, s, 0, n as i64, &g, 1e-12)?.bound
            } else {
                primal_lalpha(&m, &s_set, s, 0, alpha, n as i64, &g, &popts, 1e-12)?.bound
            };
            let exps = Exponents::new(alpha)?;
            let dual =
                dual_maximize_scalar(&w, &s_set, s, &exps, n as i64, &g, &dopts, 1e-12)?.bound;
            let oracle = oracle_distance(
                &m,
                &s_set,
                s,
                0,
                alpha,
                n as i64,
                &g,
                &OracleOptions::default(),
            )?;
            let dev = (primal - dual)
                .abs()
                .max((primal - oracle).abs())
                .max((dual - oracle).abs());
            if alpha == 2.0 {
                worst2 = worst2.max(dev);
            } else {
                worst_general = worst_general.max(dev);
            }
        }
    }
    let pass = worst2 <= 1e-8 && worst_general <= 1e-5;
    Ok((pass, format!(
        "worst three-way deviation: alpha=2 {worst2:.3e} (tol 1e-8), alpha in {{1.5,3}} {worst_general:.3e} (tol 1e-5)"
    )))
}

/// Random PSD matrix of the given rank.
fn random_psd(rng: &mut ChaCha8Rng, q: usize, rank: usize) -> CMat {
    let mut acc = CMat::zeros(q, q);
    for _ in 0..rank {
        let v = CVec::from_fn(q, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        acc += &v * v.adjoint();
    }
    acc
}

/// Criterion 7: matrix case on Cyclic(6) with a rank-deficient node;
/// three-way agreement plus the singleton closed form.
fn criterion_matrix() -> Result<(bool, String)> {
    let n = 6usize;
    let q = 2usize;
    let g = GroupSpec::cyclic(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut samples: Vec<CMat> = (0..n - 1).map(|_| random_psd(&mut rng, q, q)).collect();
    samples.push(random_psd(&mut rng, q, 1)); // rank-deficient node
    let w = MatrixWeight::from_samples(g, samples)?;
    let m = SpectralMeasure::absolutely_continuous(w.clone());

    let mut worst = 0.0f64;
    for _trial in 0..4 {
        let (s_set, s) = random_set(&mut rng, n);
        for k in 0..q {
            let primal = primal_l2(&m, &s_set, s, k, n as i64, &g, 1e-12)?.bound;
            let dual =
                crate::dual::dual_maximize_matrix(&w, &s_set, s, k, n as i64, &g, 1e-12)?.bound;
            let oracle = oracle_distance(
                &m,
                &s_set,
                s,
                k,
                2.0,
                n as i64,
                &g,
                &OracleOptions::default(),
            )?;
            let dev = (primal - dual)
                .abs()
                .max((primal - oracle).abs())
                .max((dual - oracle).abs());
            worst = worst.max(dev);
        }
    }

    // Singleton closed form d = [e_k^* (mean W^+)^+ e_k]^{1/2}. The formula
    // presumes the dual certificate is unconstrained by pointwise ranges, so
    // it holds for ensembles with full-rank samples; a deficient node opens
    // kernel directions that lower the true distance below it (the
    // three-way agreement above covers that regime).
    let full: Vec<CMat> = (0..n)
        .map(|_| random_psd(&mut rng, q, q) + CMat::identity(q, q) * C64::new(0.05, 0.0))
        .collect();
    let wf = MatrixWeight::from_samples(g, full)?;
    let mf = SpectralMeasure::absolutely_continuous(wf.clone());
    let pinvs = wf.pinv_samples(1e-12)?;
    let mut mean = CMat::zeros(q, q);
    for p in &pinvs {
        mean += p;
    }
    mean /= C64::new(n as f64, 0.0);
    let back = pseudo_inverse(&mean, 1e-12)?;
    let mut worst_closed = 0.0f64;
    for k in 0..q {
        let reference = back[(k, k)].re.max(0.0).sqrt();
        let primal = primal_l2(
            &mf,
            &singleton_zero(),
            Frequency::Int(0),
            k,
            n as i64,
            &g,
            1e-12,
        )?
        .bound;
        worst_closed = worst_closed.max((primal - reference).abs());
    }
    let pass = worst <= 1e-8 && worst_closed <= 1e-8;
    Ok((pass, format!(
        "worst three-way deviation {worst:.3e}, singleton closed-form deviation {worst_closed:.3e} (tol 1e-8)"
    )))
}

/// Criterion 8: invariant suites — weak duality, window monotonicity,
/// Penrose identities, the isometry identity, and the Hoelder bound.
fn criterion_invariants() -> Result<(bool, String)> {
    let mut failures: Vec<String> = Vec::new();

    // Weak duality plus window monotonicity on a Szego-style scenario.
    let g = GroupSpec::integer(1024)?;
    let w = ma1(g, 0.5)?;
    let m = SpectralMeasure::absolutely_continuous(w.clone());
    let s_set = FrequencySet::HalfLine {
        dir: HalfDir::Le,
        bound: 0,
    };
    let e2 = Exponents::new(2.0)?;
    let mut last_primal = f64::INFINITY;
    let mut last_dual = 0.0f64;
    for f in [8i64, 32, 128] {
        let p = primal_l2(&m, &s_set, Frequency::Int(0), 0, f, &g, 1e-12)?.bound;
        let d = dual_maximize_scalar(
            &w,
            &s_set,
            Frequency::Int(0),
            &e2,
            f,
            &g,
            &DualOptions::default(),
            1e-12,
        )?
        .bound;
        if d > p + 1e-9 {
            failures.push(format!("weak duality violated at F={f}: {d} > {p}"));
        }
        if p > last_primal + 1e-9 {
            failures.push(format!("primal not nonincreasing at F={f}"));
        }
        if d < last_dual - 1e-9 {
            failures.push(format!("dual not nondecreasing at F={f}"));
        }
        last_primal = p;
        last_dual = d;
    }

    // Penrose identities for random Hermitian PSD matrices, q in {1,2,3}.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_penrose = 0.0f64;
    for q in 1..=3usize {
        for _ in 0..20 {
            let a = random_psd(&mut rng, q, q.max(1));
            let x = pseudo_inverse(&a, 1e-12)?;
            let axa = &a * &x * &a;
            let xax = &x * &a * &x;
            let ax = &a * &x;
            let xa = &x * &a;
            let scale = crate::linalg::max_abs(&a).max(1.0);
            worst_penrose = worst_penrose
                .max(crate::linalg::max_abs(&(&axa - &a)) / scale)
                .max(crate::linalg::max_abs(&(&xax - &x)))
                .max(crate::linalg::max_abs(&(&ax - ax.adjoint())))
                .max(crate::linalg::max_abs(&(&xa - xa.adjoint())));
        }
    }
    if worst_penrose > 1e-10 {
        failures.push(format!("Penrose identities off by {worst_penrose:.3e}"));
    }

    // Isometry: integral |g w|^{alpha'} (w+)^beta = integral |g|^{alpha'} w,
    // on a weight with dead nodes.
    let pi = std::f64::consts::PI;
    let gw = GroupSpec::integer(128)?;
    let wz = MatrixWeight::piecewise(gw, vec![(-1.0, 0.0), (2.0, 1.3), (pi, 0.6)])?;
    let mut worst_iso = 0.0f64;
    for alpha in [1.5, 2.0, 3.0] {
        let e = Exponents::new(alpha)?;
        let v = wz.scalar_pinv_power(e.beta, 1e-12)?;
        for _ in 0..10 {
            let gs: Vec<C64> = (0..128)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for (j, gj) in gs.iter().enumerate() {
                let wj = wz.scalar_at(j);
                lhs += (gj * wj).norm().powf(e.conjugate) * v[j];
                rhs += gj.norm().powf(e.conjugate) * wj;
            }
            worst_iso = worst_iso.max((lhs - rhs).abs() / rhs.max(1.0));
        }
    }
    if worst_iso > 1e-9 {
        failures.push(format!("isometry identity off by {worst_iso:.3e}"));
    }

    // Hoelder: |integral conj(h) f dlambda| <= |f|_{alpha,w} |h|_{alpha',(w+)^beta}
    // for h supported on the carrier.
    let mut worst_hoelder: f64 = 0.0;
    let cutoff = wz.carrier_cutoff(1e-12);
    for alpha in [1.5, 2.0, 3.0] {
        let e = Exponents::new(alpha)?;
        let v = wz.scalar_pinv_power(e.beta, 1e-12)?;
        for _ in 0..34 {
            let fs: Vec<C64> = (0..128)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let hs: Vec<C64> = (0..128)
                .map(|j| {
                    if wz.scalar_at(j) <= cutoff {
                        C64::new(0.0, 0.0)
                    } else {
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    }
                })
                .collect();
            let mut pairing = C64::new(0.0, 0.0);
            let mut f_norm = 0.0;
            let mut h_norm = 0.0;
            for j in 0..128 {
                pairing += hs[j].conj() * fs[j] / C64::new(128.0, 0.0);
                f_norm += fs[j].norm().powf(alpha) * wz.scalar_at(j) / 128.0;
                h_norm += hs[j].norm().powf(e.conjugate) * v[j] / 128.0;
            }
            let bound = f_norm.powf(1.0 / alpha) * h_norm.powf(1.0 / e.conjugate);
            worst_hoelder = worst_hoelder.max(pairing.norm() - bound);
        }
    }
    if worst_hoelder > 1e-9 {
        failures.push(format!("Hoelder bound violated by {worst_hoelder:.3e}"));
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!(
            "weak duality + monotonicity hold; Penrose {worst_penrose:.3e}, isometry {worst_iso:.3e}, Hoelder slack {worst_hoelder:.3e}"
        )
    } else {
        failures.join("; ")
    };
    Ok((pass, detail))
}

/// Criterion 9: the density check finds the w = 1, S = {0} witness with
/// bound 1 (matching criterion 1).
fn criterion_density() -> Result<(bool, String)> {
    let g = GroupSpec::integer(64)?;
    let w = MatrixWeight::scalar_constant(g, 1.0)?;
    let e = Exponents::new(2.0)?;
    let report = density_check(
        &w,
        &singleton_zero(),
        &e,
        4,
        &g,
        &DualOptions::default(),
        1e-12,
    )?;
    match report.verdict {
        DensityVerdict::NotDense { s, bound, .. } => {
            let dev = (bound - 1.0).abs();
            let pass = s == Frequency::Int(0) && dev <= 1e-9;
            Ok((
                pass,
                format!("witness at s = {s} with bound {bound:.12} (dev {dev:.3e})"),
            ))
        }
        DensityVerdict::Inconclusive { searched } => {
            Ok((false, format!("no witness found over {searched} targets")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_criteria_pass() {
        let results = run_all();
        for r in &results {
            assert!(
                r.passed,
                "criterion {} ({}) failed: {}",
                r.id, r.name, r.detail
            );
        }
        assert_eq!(results.len(), CRITERIA);
    }

    #[test]
    fn unknown_criterion_reports_cleanly() {
        let r = run_criterion(42);
        assert!(!r.passed);
        assert!(r.detail.contains("valid ids"));
    }
}
