//! Independent reference solver used to cross-check the main pipeline.
//!
//! Everything here is deliberately built differently from the production
//! path: Gram systems are assembled by direct summation over points instead
//! of lag transforms, linear solves go through an SVD pseudo-inverse instead
//! of Cholesky/eigen routines, general exponents are minimized by a smoothed
//! accelerated gradient method (epsilon-continuation FISTA) instead of IRLS,
//! and the distance is read off the pointwise residual rather than the
//! solver's internal objective. Agreement between the two paths is evidence
//! against shared bugs; the price is a hard size cap.

use crate::acsets::FrequencySet;
use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec, C64};
use crate::measures::SpectralMeasure;
use nalgebra::linalg::SVD;

/// Largest coefficient-space dimension the oracle accepts.
pub const ORACLE_SIZE_CAP: usize = 64;

/// Tuning for the smoothed gradient path.
#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    /// Per-stage relative decrease below which the stage stops.
    pub tol: f64,
    /// Iteration cap per continuation stage.
    pub max_iter: usize,
    /// Initial smoothing parameter.
    pub eps_start: f64,
    /// Final smoothing parameter.
    pub eps_end: f64,
    /// Multiplicative decrease between stages.
    pub eps_factor: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-13,
            max_iter: 4000,
            eps_start: 1e-4,
            eps_end: 1e-16,
            eps_factor: 1e-2,
        }
    }
}

type CMat = nalgebra::DMatrix<C64>;
type CVec = nalgebra::DVector<C64>;

/// Quadrature points of the discretized measure: grid nodes carrying
/// `W_j / N` plus atoms carrying their mass matrices.
fn effective_points(m: &SpectralMeasure, g: &GroupSpec) -> Vec<(usize, CMat)> {
    let n = g.grid_len();
    let scale = C64::new(1.0 / n as f64, 0.0);
    let mut pts: Vec<(usize, CMat)> = (0..n).map(|j| (j, m.ac.at(j) * scale)).collect();
    for atom in m.singular.atoms() {
        pts.push((atom.node, atom.mass.clone()));
    }
    pts
}

fn basis_or_cap(
    s_set: &FrequencySet,
    s: Frequency,
    k: usize,
    window: i64,
    g: &GroupSpec,
    q: usize,
) -> Result<(Vec<Frequency>, Frequency)> {
    g.check_member(s)?;
    let s = g.canonical(s);
    if !s_set.contains(s, g) {
        return Err(Error::FrequencyMismatch { freq: s });
    }
    if k >= q {
        return Err(Error::Invalid(format!(
            "coordinate k={k} out of range for q={q}"
        )));
    }
    let complement = FrequencySet::Complement(Box::new(s_set.clone()));
    let basis = complement.window(g, window);
    let dim = basis.len() * q;
    if dim > ORACLE_SIZE_CAP {
        return Err(Error::SizeCap {
            cap: ORACLE_SIZE_CAP,
            got: dim,
        });
    }
    if let Some(band) = g.band_limit() {
        for &x in basis.iter().chain(std::iter::once(&s)) {
            if !g.in_band(x) {
                return Err(Error::BandViolation { freq: x, band });
            }
        }
    }
    Ok((basis, s))
}

/// Pointwise residual `r_p = psi_p e_k - sum_x phi_x(p) c_x` at one point.
fn residual_at(
    node: usize,
    s: Frequency,
    k: usize,
    basis: &[Frequency],
    c: &CVec,
    q: usize,
    g: &GroupSpec,
) -> CVec {
    let mut r = CVec::zeros(q);
    r[k] = g.character(s, node);
    for (xi, &x) in basis.iter().enumerate() {
        let px = g.character(x, node);
        for i in 0..q {
            r[i] -= px * c[xi * q + i];
        }
    }
    r
}

/// Exact weighted least squares by direct assembly and SVD pseudo-inverse.
fn solve_l2(
    pts: &[(usize, CMat)],
    basis: &[Frequency],
    s: Frequency,
    k: usize,
    q: usize,
    g: &GroupSpec,
) -> Result<CVec> {
    let dim = basis.len() * q;
    let mut gram = CMat::zeros(dim, dim);
    let mut rhs = CVec::zeros(dim);
    for (node, mass) in pts {
        let phis: Vec<C64> = basis.iter().map(|&x| g.character(x, *node)).collect();
        let ps = g.character(s, *node);
        for (yi, &py) in phis.iter().enumerate() {
            for (xi, &px) in phis.iter().enumerate() {
                let scalar = py.conj() * px;
                for i in 0..q {
                    for l in 0..q {
                        gram[(yi * q + i, xi * q + l)] += scalar * mass[(i, l)];
                    }
                }
            }
            for i in 0..q {
                rhs[yi * q + i] += py.conj() * ps * mass[(i, k)];
            }
        }
    }
    if dim == 0 {
        return Ok(CVec::zeros(0));
    }
    let svd = SVD::new(gram, true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let pinv = svd
        .pseudo_inverse(1e-12 * smax.max(1e-300))
        .map_err(|e| Error::Numerical(format!("oracle SVD failed: {e}")))?;
    Ok(pinv * rhs)
}

/// The exact (unsmoothed) discrete objective `sum_p r_p^* M_p r_p`-style
/// value for general alpha, from the pointwise residual.
#[allow(clippy::too_many_arguments)]
fn pointwise_objective(
    pts: &[(usize, CMat)],
    basis: &[Frequency],
    s: Frequency,
    k: usize,
    c: &CVec,
    alpha: f64,
    q: usize,
    g: &GroupSpec,
) -> f64 {
    let mut acc = 0.0;
    for (node, mass) in pts {
        let r = residual_at(*node, s, k, basis, c, q, g);
        if q == 1 {
            acc += mass[(0, 0)].re * r[0].norm().powf(alpha);
        } else {
            let mut e = C64::new(0.0, 0.0);
            for i in 0..q {
                for l in 0..q {
                    e += r[i].conj() * mass[(i, l)] * r[l];
                }
            }
            acc += e.re.max(0.0).powf(alpha / 2.0);
        }
    }
    acc
}

/// Smoothed scalar objective `sum_p rho_p (|r_p|^2 + eps)^{alpha/2}`.
fn smoothed_objective(rho: &[f64], r: &[C64], alpha: f64, eps: f64) -> f64 {
    let mut acc = 0.0;
    for (p, &rp) in rho.iter().enumerate() {
        acc += rp * (r[p].norm_sqr() + eps).powf(alpha / 2.0);
    }
    acc
}

/// Wirtinger gradient `G_x = dJ/d conj(c_x)` of the smoothed objective.
fn smoothed_gradient(rho: &[f64], r: &[C64], phi: &[Vec<C64>], alpha: f64, eps: f64) -> CVec {
    let nb = phi.len();
    let mut grad = CVec::zeros(nb);
    for (p, &rp) in rho.iter().enumerate() {
        let scale = rp * (alpha / 2.0) * (r[p].norm_sqr() + eps).powf(alpha / 2.0 - 1.0);
        for x in 0..nb {
            grad[x] -= phi[x][p].conj() * r[p] * scale;
        }
    }
    grad
}

/// FISTA with backtracking and function restarts on one smoothing stage.
#[allow(clippy::too_many_arguments)]
fn fista_stage(
    rho: &[f64],
    psi: &[C64],
    phi: &[Vec<C64>],
    c0: CVec,
    alpha: f64,
    eps: f64,
    opts: &OracleOptions,
    lip: &mut f64,
) -> CVec {
    let npts = rho.len();
    let residual = |c: &CVec| -> Vec<C64> {
        (0..npts)
            .map(|p| {
                let mut r = psi[p];
                for (x, col) in phi.iter().enumerate() {
                    r -= col[p] * c[x];
                }
                r
            })
            .collect()
    };
    let mut c = c0.clone();
    let mut c_prev = c0;
    let mut y = c.clone();
    let mut t = 1.0f64;
    let mut f_prev = f64::INFINITY;
    let mut small = 0usize;
    for _ in 0..opts.max_iter {
        let ry = residual(&y);
        let fy = smoothed_objective(rho, &ry, alpha, eps);
        let grad = smoothed_gradient(rho, &ry, phi, alpha, eps);
        let gnorm2: f64 = grad.iter().map(|z| z.norm_sqr()).sum();
        if gnorm2 < 1e-300 {
            break;
        }
        // Backtrack the Lipschitz estimate: the real-parameter step is
        // y - (2/L) G, and the majorization test is
        // J(c+) <= J(y) - 2 |G|^2 / L.
        let mut l = (*lip).max(1e-12);
        let mut c_new = CVec::zeros(0);
        let mut f_new = 0.0;
        for _ in 0..80 {
            let cand = &y - &grad * C64::new(2.0 / l, 0.0);
            let f_cand = smoothed_objective(rho, &residual(&cand), alpha, eps);
            if f_cand <= fy - 2.0 * gnorm2 / l + 1e-300 {
                c_new = cand;
                f_new = f_cand;
                break;
            }
            l *= 2.0;
        }
        if c_new.is_empty() {
            break;
        }
        *lip = l * 0.9; // let the estimate drift back down
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_new > f_prev {
            // Function restart: drop momentum.
            y = c.clone();
            t = 1.0;
            f_prev = f_new.min(f_prev);
            continue;
        }
        let momentum = C64::new((t - 1.0) / t_next, 0.0);
        y = &c_new + (&c_new - &c_prev) * momentum;
        c_prev = c;
        c = c_new;
        t = t_next;
        let rel = if f_prev.is_finite() {
            (f_prev - f_new).abs() / f_prev.abs().max(1e-300)
        } else {
            1.0
        };
        f_prev = f_new;
        if rel < opts.tol {
            small += 1;
            if small >= 10 {
                break;
            }
        } else {
            small = 0;
        }
    }
    c
}

/// Reference distance for the windowed problem, computed independently of
/// the production solvers. Matrix measures require `alpha = 2`; the
/// coefficient dimension is capped at `ORACLE_SIZE_CAP`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_distance(
    m: &SpectralMeasure,
    s_set: &FrequencySet,
    s: Frequency,
    k: usize,
    alpha: f64,
    window: i64,
    g: &GroupSpec,
    opts: &OracleOptions,
) -> Result<f64> {
    if alpha <= 1.0 || !alpha.is_finite() {
        return Err(Error::Invalid(format!(
            "alpha must lie in (1, inf), got {alpha}"
        )));
    }
    let q = m.q();
    if q > 1 && (alpha - 2.0).abs() > 1e-14 {
        return Err(Error::Unsupported(
            "oracle matrix solves require alpha = 2".into(),
        ));
    }
    if m.group() != *g {
        return Err(Error::Invalid(
            "measure grid does not match the group".into(),
        ));
    }
    let (basis, s) = basis_or_cap(s_set, s, k, window, g, q)?;
    let pts = effective_points(m, g);

    let c2 = solve_l2(&pts, &basis, s, k, q, g)?;
    if (alpha - 2.0).abs() <= 1e-14 {
        return Ok(pointwise_objective(&pts, &basis, s, k, &c2, 2.0, q, g)
            .max(0.0)
            .sqrt());
    }

    // Scalar general alpha: epsilon-continuation FISTA from the L2 start.
    let rho: Vec<f64> = pts.iter().map(|(_, mass)| mass[(0, 0)].re).collect();
    let psi: Vec<C64> = pts.iter().map(|&(node, _)| g.character(s, node)).collect();
    let phi: Vec<Vec<C64>> = basis
        .iter()
        .map(|&x| pts.iter().map(|&(node, _)| g.character(x, node)).collect())
        .collect();
    let mut c = c2;
    let mut lip = 1.0f64;
    let mut eps = opts.eps_start;
    loop {
        c = fista_stage(&rho, &psi, &phi, c, alpha, eps, opts, &mut lip);
        if eps <= opts.eps_end {
            break;
        }
        eps = (eps * opts.eps_factor).max(opts.eps_end);
    }
    Ok(pointwise_objective(&pts, &basis, s, k, &c, alpha, q, g)
        .max(0.0)
        .powf(1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::Frequency;
    use crate::measures::{Atom, AtomicMeasure, MatrixWeight};
    use crate::primal::{primal_l2, primal_lalpha, PrimalOptions};

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
    fn cyclic_kolmogorov_matches_discrete_formula() {
        // On a finite group the discrete problem is the whole problem:
        // d = [mean(1/w)]^{-1/2} with the mean over the group's nodes.
        let g = GroupSpec::cyclic(8).unwrap();
        let w = ma1(g, 0.5);
        let mean_inv: f64 = (0..8).map(|j| 1.0 / w.scalar_at(j)).sum::<f64>() / 8.0;
        let reference = mean_inv.powf(-0.5);
        let m = SpectralMeasure::absolutely_continuous(w);
        let d = oracle_distance(
            &m,
            &singleton_zero(),
            Frequency::Int(0),
            0,
            2.0,
            8,
            &g,
            &OracleOptions::default(),
        )
        .unwrap();
        assert!((d - reference).abs() < 1e-12, "{d} vs {reference}");
    }

    #[test]
    fn matrix_constant_weight_distance() {
        // Constant W: characters are orthogonal, so the distance from
        // chi_0 e_k is just its norm [W_kk]^{1/2}.
        let g = GroupSpec::cyclic(6).unwrap();
        let w = MatrixWeight::constant(
            g,
            CMat::from_diagonal(&CVec::from_vec(vec![
                C64::new(4.0, 0.0),
                C64::new(1.0, 0.0),
            ])),
        )
        .unwrap();
        let m = SpectralMeasure::absolutely_continuous(w);
        for (k, expect) in [(0usize, 2.0f64), (1, 1.0)] {
            let d = oracle_distance(
                &m,
                &singleton_zero(),
                Frequency::Int(0),
                k,
                2.0,
                6,
                &g,
                &OracleOptions::default(),
            )
            .unwrap();
            assert!((d - expect).abs() < 1e-12, "k={k}: {d} vs {expect}");
        }
    }

    #[test]
    fn fista_agrees_with_irls() {
        let g = GroupSpec::cyclic(8).unwrap();
        let w = ma1(g, 0.4);
        let m = SpectralMeasure::absolutely_continuous(w);
        let s_set = singleton_zero();
        for alpha in [1.5, 3.0] {
            let d_oracle = oracle_distance(
                &m,
                &s_set,
                Frequency::Int(0),
                0,
                alpha,
                8,
                &g,
                &OracleOptions::default(),
            )
            .unwrap();
            let opts = PrimalOptions {
                tol: 1e-14,
                max_iter: 2000,
                ..Default::default()
            };
            let d_irls =
                primal_lalpha(&m, &s_set, Frequency::Int(0), 0, alpha, 8, &g, &opts, 1e-12)
                    .unwrap()
                    .bound;
            assert!(
                (d_oracle - d_irls).abs() < 1e-6,
                "alpha={alpha}: oracle {d_oracle} vs irls {d_irls}"
            );
        }
    }

    #[test]
    fn atoms_agree_with_production_l2() {
        // Same discrete problem, two independent solvers.
        let g = GroupSpec::integer(64).unwrap();
        let w = ma1(g, 0.3);
        let atoms = AtomicMeasure::new(
            g,
            1,
            vec![Atom {
                node: 5,
                mass: CMat::from_element(1, 1, C64::new(0.4, 0.0)),
            }],
        )
        .unwrap();
        let m = SpectralMeasure::new(w, atoms).unwrap();
        let s_set = singleton_zero();
        let d_oracle = oracle_distance(
            &m,
            &s_set,
            Frequency::Int(0),
            0,
            2.0,
            10,
            &g,
            &OracleOptions::default(),
        )
        .unwrap();
        let d_prod = primal_l2(&m, &s_set, Frequency::Int(0), 0, 10, &g, 1e-12)
            .unwrap()
            .bound;
        assert!((d_oracle - d_prod).abs() < 1e-9, "{d_oracle} vs {d_prod}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = GroupSpec::cyclic(8).unwrap();
        let w = ma1(g, 0.4);
        let alpha = 1.5;
        let eps = 1e-4;
        let basis = [Frequency::Int(1), Frequency::Int(2)];
        let rho: Vec<f64> = (0..8).map(|j| w.scalar_at(j) / 8.0).collect();
        let psi: Vec<C64> = (0..8).map(|j| g.character(Frequency::Int(0), j)).collect();
        let phi: Vec<Vec<C64>> = basis
            .iter()
            .map(|&x| (0..8).map(|j| g.character(x, j)).collect())
            .collect();
        let resid = |c: &CVec| -> Vec<C64> {
            (0..8)
                .map(|p| {
                    let mut r = psi[p];
                    for (x, col) in phi.iter().enumerate() {
                        r -= col[p] * c[x];
                    }
                    r
                })
                .collect()
        };
        let c = CVec::from_vec(vec![C64::new(0.3, -0.2), C64::new(-0.1, 0.45)]);
        let grad = smoothed_gradient(&rho, &resid(&c), &phi, alpha, eps);
        let h = 1e-6;
        for x in 0..2 {
            for (re_dir, expect) in [(true, 2.0 * grad[x].re), (false, 2.0 * grad[x].im)] {
                let mut cp = c.clone();
                let mut cm = c.clone();
                let delta = if re_dir {
                    C64::new(h, 0.0)
                } else {
                    C64::new(0.0, h)
                };
                cp[x] += delta;
                cm[x] -= delta;
                let fp = smoothed_objective(&rho, &resid(&cp), alpha, eps);
                let fm = smoothed_objective(&rho, &resid(&cm), alpha, eps);
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (fd - expect).abs() < 1e-6 * (1.0 + expect.abs()),
                    "x={x} re={re_dir}: fd {fd} vs analytic {expect}"
                );
            }
        }
    }

    #[test]
    fn size_cap_is_enforced() {
        let g = GroupSpec::integer(256).unwrap();
        let w = ma1(g, 0.3);
        let m = SpectralMeasure::absolutely_continuous(w);
        let err = oracle_distance(
            &m,
            &singleton_zero(),
            Frequency::Int(0),
            0,
            2.0,
            64,
            &g,
            &OracleOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SizeCap { cap: 64, .. }));
    }
}
