//! Primal upper bounds: distance from `chi_s e_k` to the truncated
//! approximation space `T_F(G \ S)`.
//!
//! Truncation to a window `F` shrinks the candidate space, so every value
//! computed here is an upper bound for the full distance, and the bounds are
//! non-increasing in `F`. The `alpha = 2` case is an exact orthogonal
//! projection through the Gram matrix; general scalar `alpha` runs damped
//! iteratively-reweighted least squares on the grid objective, which equals
//! the discretized `L^alpha(M)` norm exactly, atoms included.

use crate::acsets::FrequencySet;
use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec, C64};
use crate::laspace::{self, Exponents, TrigPolynomial};
use crate::linalg::{solve_psd, CMat, CVec};
use crate::measures::SpectralMeasure;
use std::collections::{BTreeMap, BTreeSet};

/// Clip floor for slightly negative squared distances from cancellation.
const DISTANCE_CLIP: f64 = 1e-9;

/// Tuning for the iteratively-reweighted solver.
#[derive(Clone, Copy, Debug)]
pub struct PrimalOptions {
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Residual magnitudes are clamped below by this before reweighting.
    pub residual_floor: f64,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        PrimalOptions {
            tol: 1e-11,
            max_iter: 400,
            residual_floor: 1e-12,
        }
    }
}

/// A primal solve: an upper bound together with its witness polynomial.
#[derive(Clone, Debug)]
pub struct PrimalResult {
    /// Upper bound `d_F` on the distance.
    pub bound: f64,
    /// The truncated minimizer `t*` achieving the bound.
    pub minimizer: TrigPolynomial,
    /// Window radius used.
    pub window: i64,
    /// Iterations spent (0 for the direct `alpha = 2` solve).
    pub iterations: usize,
    /// Relative objective decrease of the final accepted step.
    pub final_step: f64,
    /// Whether the iteration reached its tolerance (always true for direct).
    pub converged: bool,
}

fn validate_target(
    m: &SpectralMeasure,
    s_set: &FrequencySet,
    s: Frequency,
    k: usize,
    g: &GroupSpec,
) -> Result<()> {
    g.check_member(s)?;
    if !s_set.contains(s, g) {
        return Err(Error::Invalid(format!(
            "target frequency {s} is not a member of the prediction set"
        )));
    }
    if k >= m.q() {
        return Err(Error::Invalid(format!(
            "coordinate k={k} out of range for q={}",
            m.q()
        )));
    }
    Ok(())
}

/// Exact `alpha = 2` projection: `d_F^2 = ||psi||^2 - b* G^+ b` with `G` the
/// Gram matrix of the windowed basis of `T(G \ S)` and `b` its correlation
/// with the target `psi = chi_s e_k`.
pub fn primal_l2(
    m: &SpectralMeasure,
    s_set: &FrequencySet,
    s: Frequency,
    k: usize,
    window: i64,
    g: &GroupSpec,
    rel_tol: f64,
) -> Result<PrimalResult> {
    validate_target(m, s_set, s, k, g)?;
    let s = g.canonical(s);
    let q = m.q();
    let complement = FrequencySet::Complement(Box::new(s_set.clone()));
    let basis = complement.window(g, window);
    let psi_sq = laspace::measure_transform(m, g.zero(), g)?[(k, k)].re;

    if basis.is_empty() {
        return Ok(PrimalResult {
            bound: psi_sq.max(0.0).sqrt(),
            minimizer: TrigPolynomial::zero(q),
            window,
            iterations: 0,
            final_step: 0.0,
            converged: true,
        });
    }

    let gram = laspace::gram_matrix(&basis, m, g)?;
    let mut b = CVec::zeros(basis.len() * q);
    for (row, &y) in basis.iter().enumerate() {
        let block = laspace::measure_transform(m, g.sub(s, y), g)?;
        for i in 0..q {
            b[row * q + i] = block[(i, k)];
        }
    }
    let c = solve_psd(&gram, &b, rel_tol)?;
    let mut dist_sq = psi_sq - b.dotc(&c).re;
    if dist_sq < 0.0 {
        if dist_sq < -DISTANCE_CLIP {
            return Err(Error::Numerical(format!(
                "projection produced squared distance {dist_sq:.3e}"
            )));
        }
        dist_sq = 0.0;
    }
    let mut minimizer = TrigPolynomial::zero(q);
    for (row, &y) in basis.iter().enumerate() {
        let mut u = CVec::zeros(q);
        for i in 0..q {
            u[i] = c[row * q + i];
        }
        minimizer.add_term(y, u)?;
    }
    Ok(PrimalResult {
        bound: dist_sq.sqrt(),
        minimizer,
        window,
        iterations: 0,
        final_step: 0.0,
        converged: true,
    })
}

/// Effective quadrature nodes: every grid node with its Haar weight, plus
/// one extra entry per atom (atoms sit on grid nodes).
fn effective_nodes(m: &SpectralMeasure, g: &GroupSpec) -> Vec<(usize, f64)> {
    let n = g.grid_len();
    let mut nodes: Vec<(usize, f64)> = (0..n).map(|j| (j, m.ac.scalar_at(j) / n as f64)).collect();
    for a in m.singular.atoms() {
        nodes.push((a.node, a.mass[(0, 0)].re));
    }
    nodes
}

/// `sum over nodes of rho * <gamma_node, z>` for each requested lag `z`.
fn weighted_lags(
    nodes: &[(usize, f64)],
    omega: &[f64],
    zs: &BTreeSet<Frequency>,
    g: &GroupSpec,
) -> BTreeMap<Frequency, C64> {
    let mut out = BTreeMap::new();
    for &z in zs {
        let mut acc = C64::new(0.0, 0.0);
        for (idx, &(node, _)) in nodes.iter().enumerate() {
            if omega[idx] != 0.0 {
                acc += g.character(z, node) * omega[idx];
            }
        }
        out.insert(z, acc);
    }
    out
}

/// Scalar damped IRLS for general `alpha`: minimizes the discretized
/// objective `sum rho |psi - t|^alpha` over coefficients supported on the
/// windowed basis, with residual-clamped reweighting and backtracking.
#[allow(clippy::too_many_arguments)]
pub fn primal_lalpha(
    m: &SpectralMeasure,
    s_set: &FrequencySet,
    s: Frequency,
    k: usize,
    alpha: f64,
    window: i64,
    g: &GroupSpec,
    opts: &PrimalOptions,
    rel_tol: f64,
) -> Result<PrimalResult> {
    Exponents::new(alpha)?;
    validate_target(m, s_set, s, k, g)?;
    if m.q() != 1 {
        return Err(Error::Unsupported(
            "general-alpha primal solves require a scalar measure (q = 1); \
             matrix measures are implemented for alpha = 2 only"
                .into(),
        ));
    }
    let s = g.canonical(s);
    let complement = FrequencySet::Complement(Box::new(s_set.clone()));
    let basis = complement.window(g, window);
    let nodes = effective_nodes(m, g);

    if basis.is_empty() {
        let psi = TrigPolynomial::character_basis(s, 0, 1)?;
        let bound = laspace::lalpha_norm(&psi, m, alpha, g)?;
        return Ok(PrimalResult {
            bound,
            minimizer: TrigPolynomial::zero(1),
            window,
            iterations: 0,
            final_step: 0.0,
            converged: true,
        });
    }

    // Character tables at the effective nodes: psi and the basis columns.
    let nn = nodes.len();
    let nb = basis.len();
    let psi: Vec<C64> = nodes.iter().map(|&(j, _)| g.character(s, j)).collect();
    let phi: Vec<Vec<C64>> = basis
        .iter()
        .map(|&x| nodes.iter().map(|&(j, _)| g.character(x, j)).collect())
        .collect();

    // Lags needed by the weighted normal equations.
    let mut zs = BTreeSet::new();
    for &x in &basis {
        for &y in &basis {
            zs.insert(g.sub(x, y));
        }
        zs.insert(g.sub(s, x));
    }

    let residual = |c: &CVec| -> Vec<C64> {
        (0..nn)
            .map(|idx| {
                let mut r = psi[idx];
                for mcol in 0..nb {
                    r -= phi[mcol][idx] * c[mcol];
                }
                r
            })
            .collect()
    };
    let objective = |r: &[C64]| -> f64 {
        let mut acc = 0.0;
        for (idx, &(_, rho)) in nodes.iter().enumerate() {
            acc += rho * r[idx].norm().powf(alpha);
        }
        acc
    };
    let weighted_solve = |omega: &[f64]| -> Result<CVec> {
        let lags = weighted_lags(&nodes, omega, &zs, g);
        let mut q = CMat::zeros(nb, nb);
        for (row, &y) in basis.iter().enumerate() {
            for (col, &x) in basis.iter().enumerate() {
                q[(row, col)] = lags[&g.sub(x, y)];
            }
        }
        let q = (&q + q.adjoint()) * C64::new(0.5, 0.0);
        let mut rhs = CVec::zeros(nb);
        for (row, &x) in basis.iter().enumerate() {
            rhs[row] = lags[&g.sub(s, x)];
        }
        solve_psd(&q, &rhs, rel_tol)
    };

    // Initialize from the alpha = 2 solution (unit reweighting).
    let rho_only: Vec<f64> = nodes.iter().map(|&(_, rho)| rho).collect();
    let mut c = weighted_solve(&rho_only)?;
    let mut r = residual(&c);
    let mut f_cur = objective(&r);
    let mut iterations = 0usize;
    let mut final_step = 0.0f64;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        // Majorization weights rho * clamp(|r|)^{alpha-2}.
        let omega: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(idx, &(_, rho))| rho * r[idx].norm().max(opts.residual_floor).powf(alpha - 2.0))
            .collect();
        let c_target = weighted_solve(&omega)?;
        let delta = &c_target - &c;
        // Backtracking line search along the IRLS direction.
        let phi_delta: Vec<C64> = (0..nn)
            .map(|idx| {
                let mut v = C64::new(0.0, 0.0);
                for mcol in 0..nb {
                    v += phi[mcol][idx] * delta[mcol];
                }
                v
            })
            .collect();
        // Directional derivative of the objective along the IRLS direction;
        // requiring Armijo decrease against it rejects float-noise descents.
        let mut slope = 0.0f64;
        for (idx, &(_, rho)) in nodes.iter().enumerate() {
            let rn = r[idx].norm().max(opts.residual_floor);
            slope -= alpha * rho * rn.powf(alpha - 2.0) * (r[idx].conj() * phi_delta[idx]).re;
        }
        if slope >= 0.0 {
            converged = true;
            break;
        }
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let r_try: Vec<C64> = (0..nn).map(|idx| r[idx] - phi_delta[idx] * step).collect();
            let f_try = objective(&r_try);
            if f_try <= f_cur + 1e-4 * step * slope {
                let rel = (f_cur - f_try) / f_cur.max(1e-300);
                c += delta * C64::new(step, 0.0);
                r = r_try;
                f_cur = f_try;
                final_step = rel;
                accepted = true;
                if rel < opts.tol {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent even with a tiny step: at numerical optimum.
            converged = true;
            final_step = 0.0;
            break;
        }
        if converged {
            break;
        }
    }

    if !f_cur.is_finite() {
        return Err(Error::Numerical("IRLS objective diverged".into()));
    }
    let mut minimizer = TrigPolynomial::zero(1);
    for (mcol, &x) in basis.iter().enumerate() {
        minimizer.add_term(x, CVec::from_vec(vec![c[mcol]]))?;
    }
    Ok(PrimalResult {
        bound: f_cur.max(0.0).powf(1.0 / alpha),
        minimizer,
        window,
        iterations,
        final_step,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acsets::HalfDir;
    use crate::measures::{Atom, AtomicMeasure, MatrixWeight};

    fn ma1(g: GroupSpec, a: f64) -> MatrixWeight {
        MatrixWeight::modulus_squared(
            g,
            vec![
                (Frequency::Int(0), C64::new(1.0, 0.0)),
                (Frequency::Int(1), C64::new(-a, 0.0)),
            ],
        )
        .unwrap()
    }

    fn singleton_zero() -> FrequencySet {
        FrequencySet::explicit(vec![Frequency::Int(0)])
    }

    #[test]
    fn unit_weight_singleton_distance_is_one() {
        let g = GroupSpec::integer(256).unwrap();
        let m =
            SpectralMeasure::absolutely_continuous(MatrixWeight::scalar_constant(g, 1.0).unwrap());
        let r = primal_l2(&m, &singleton_zero(), Frequency::Int(0), 0, 16, &g, 1e-12).unwrap();
        assert!((r.bound - 1.0).abs() < 1e-12);
        // The minimizer is zero: characters are orthonormal under w = 1.
        assert!(r.minimizer.is_zero() || r.minimizer.support().len() <= 32);
    }

    #[test]
    fn kolmogorov_singleton_ma1() {
        // d = [integral 1/w]^{-1/2} = sqrt(1 - a^2) for w = |1 - a chi_1|^2.
        let g = GroupSpec::integer(1024).unwrap();
        let m = SpectralMeasure::absolutely_continuous(ma1(g, 0.5));
        let r = primal_l2(&m, &singleton_zero(), Frequency::Int(0), 0, 64, &g, 1e-12).unwrap();
        assert!((r.bound - 0.75f64.sqrt()).abs() < 1e-9, "bound {}", r.bound);
    }

    #[test]
    fn szego_half_line_ma1() {
        // One-step prediction error of the MA(1) weight is exactly 1.
        let g = GroupSpec::integer(1024).unwrap();
        let m = SpectralMeasure::absolutely_continuous(ma1(g, 0.5));
        let s = FrequencySet::HalfLine {
            dir: HalfDir::Le,
            bound: 0,
        };
        let r = primal_l2(&m, &s, Frequency::Int(0), 0, 48, &g, 1e-12).unwrap();
        assert!((r.bound - 1.0).abs() < 1e-12, "bound {}", r.bound);
        // Upper bounds do not increase with the window.
        let r2 = primal_l2(&m, &s, Frequency::Int(0), 0, 96, &g, 1e-12).unwrap();
        assert!(r2.bound <= r.bound + 1e-12);
    }

    #[test]
    fn irls_matches_direct_solve_at_alpha_two() {
        let g = GroupSpec::cyclic(12).unwrap();
        let m = SpectralMeasure::absolutely_continuous(ma1(g, 0.4));
        let s_set = singleton_zero();
        let exact = primal_l2(&m, &s_set, Frequency::Int(0), 0, 0, &g, 1e-12).unwrap();
        let irls = primal_lalpha(
            &m,
            &s_set,
            Frequency::Int(0),
            0,
            2.0,
            0,
            &g,
            &PrimalOptions::default(),
            1e-12,
        )
        .unwrap();
        assert!((exact.bound - irls.bound).abs() < 1e-9);
    }

    #[test]
    fn atoms_raise_the_distance() {
        // An atom off the prediction set's reach adds mass the approximation
        // cannot remove, so the distance grows.
        let g = GroupSpec::integer(256).unwrap();
        let w = ma1(g, 0.5);
        let plain = SpectralMeasure::absolutely_continuous(w.clone());
        let atoms = AtomicMeasure::new(
            g,
            1,
            vec![Atom {
                node: 17,
                mass: CMat::from_element(1, 1, C64::new(0.7, 0.0)),
            }],
        )
        .unwrap();
        let heavy = SpectralMeasure::new(w, atoms).unwrap();
        let s = FrequencySet::HalfLine {
            dir: HalfDir::Le,
            bound: 0,
        };
        let a = primal_l2(&plain, &s, Frequency::Int(0), 0, 32, &g, 1e-12).unwrap();
        let b = primal_l2(&heavy, &s, Frequency::Int(0), 0, 32, &g, 1e-12).unwrap();
        assert!(b.bound > a.bound + 1e-3, "{} vs {}", b.bound, a.bound);
    }

    #[test]
    fn general_alpha_singleton_formula() {
        // d = [integral (w+)^beta]^{-1/alpha'} for S = {0}; check alpha = 3
        // against direct quadrature of the reference integral.
        let g = GroupSpec::integer(2048).unwrap();
        let w = ma1(g, 0.5);
        let m = SpectralMeasure::absolutely_continuous(w.clone());
        let e = Exponents::new(3.0).unwrap();
        let v = w.scalar_pinv_power(e.beta, 1e-12).unwrap();
        let integral: f64 = v.iter().sum::<f64>() / v.len() as f64;
        let reference = integral.powf(-1.0 / e.conjugate);
        let opts = PrimalOptions {
            tol: 1e-13,
            max_iter: 600,
            ..Default::default()
        };
        let r = primal_lalpha(
            &m,
            &singleton_zero(),
            Frequency::Int(0),
            0,
            3.0,
            48,
            &g,
            &opts,
            1e-12,
        )
        .unwrap();
        assert!(
            (r.bound - reference).abs() < 2e-6,
            "bound {} reference {reference}",
            r.bound
        );
        // Primal truncation stays above the true infimum.
        assert!(r.bound >= reference - 1e-9);
    }

    #[test]
    fn rejects_target_outside_set() {
        let g = GroupSpec::integer(64).unwrap();
        let m =
            SpectralMeasure::absolutely_continuous(MatrixWeight::scalar_constant(g, 1.0).unwrap());
        assert!(matches!(
            primal_l2(&m, &singleton_zero(), Frequency::Int(3), 0, 8, &g, 1e-12),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn matrix_measures_need_alpha_two() {
        let g = GroupSpec::cyclic(6).unwrap();
        let m = SpectralMeasure::absolutely_continuous(
            MatrixWeight::constant(g, CMat::identity(2, 2)).unwrap(),
        );
        assert!(matches!(
            primal_lalpha(
                &m,
                &singleton_zero(),
                Frequency::Int(0),
                0,
                3.0,
                0,
                &g,
                &PrimalOptions::default(),
                1e-12,
            ),
            Err(Error::Unsupported(_))
        ));
    }
}
