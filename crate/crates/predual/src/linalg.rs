//! Dense Hermitian linear algebra on complex matrices.
//!
//! Everything here goes through Hermitian eigendecompositions (or Cholesky
//! where positive definiteness holds), with rank decisions made relative to
//! the largest eigenvalue. These helpers back the Moore-Penrose inverse,
//! carrier projections, fractional matrix powers, and the equality-constrained
//! quadratic minimizations used by the dual solvers.

use crate::error::{Error, Result};
use crate::groups::C64;
use nalgebra::{DMatrix, DVector};

/// Complex dense matrix.
pub type CMat = DMatrix<C64>;
/// Complex dense (column) vector.
pub type CVec = DVector<C64>;

/// Relative eigenvalue cutoff below which a direction counts as null.
pub const RANK_REL_TOL: f64 = 1e-12;
/// Relative asymmetry tolerated before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative negativity tolerated (then clipped) in positive semidefinite input.
pub const PSD_NEG_TOL: f64 = 1e-10;

/// Largest entry magnitude, used to scale relative tolerances.
pub fn max_abs(h: &CMat) -> f64 {
    h.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Errors unless `h` is square and Hermitian within `HERMITIAN_TOL`
/// (relative to its largest entry, with an absolute floor of 1).
pub fn check_hermitian(h: &CMat) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Invalid(format!(
            "expected square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = max_abs(h).max(1.0);
    let mut defect = 0.0f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            defect,
            tol: HERMITIAN_TOL * scale,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` paired with `values[i]`.
    pub vectors: CMat,
}

impl HermitianEigen {
    /// Decompose `(h + h*)/2`. The caller is responsible for `h` being
    /// Hermitian up to rounding; symmetrizing first keeps nalgebra honest.
    pub fn new(h: &CMat) -> Result<Self> {
        check_hermitian(h)?;
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let n = h.nrows();
        let mut vectors = CMat::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        Ok(HermitianEigen { values, vectors })
    }

    /// Largest |eigenvalue|.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Rebuild `V f(Lambda) V*` from a function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            let fi = f(self.values[i]);
            if fi != 0.0 {
                let v = self.vectors.column(i);
                // out += fi * v v*
                for r in 0..n {
                    for c in 0..n {
                        out[(r, c)] += C64::new(fi, 0.0) * v[r] * v[c].conj();
                    }
                }
            }
        }
        out
    }
}

/// Errors unless `h` is Hermitian PSD within `PSD_NEG_TOL` relative
/// negativity; returns the matrix with any small negative part clipped off.
pub fn validate_psd(h: &CMat) -> Result<CMat> {
    let eig = HermitianEigen::new(h)?;
    let scale = eig.spectral_radius();
    let min_eig = eig.values.first().copied().unwrap_or(0.0);
    if min_eig < -PSD_NEG_TOL * scale.max(1e-300) {
        return Err(Error::NotPsd { min_eig, scale });
    }
    if min_eig >= 0.0 {
        return Ok((h + h.adjoint()) * C64::new(0.5, 0.0));
    }
    Ok(eig.apply(|v| v.max(0.0)))
}

/// Moore-Penrose inverse of a Hermitian matrix: eigenvalues of magnitude
/// `> rel_tol * max|eigenvalue|` are inverted, the rest sent to zero.
pub fn pseudo_inverse(h: &CMat, rel_tol: f64) -> Result<CMat> {
    let eig = HermitianEigen::new(h)?;
    let cutoff = rel_tol * eig.spectral_radius();
    Ok(eig.apply(|v| if v.abs() > cutoff { 1.0 / v } else { 0.0 }))
}

/// Orthogonal projection onto the range (column space) of a Hermitian matrix.
pub fn range_projection(h: &CMat, rel_tol: f64) -> Result<CMat> {
    let eig = HermitianEigen::new(h)?;
    let cutoff = rel_tol * eig.spectral_radius();
    Ok(eig.apply(|v| if v.abs() > cutoff { 1.0 } else { 0.0 }))
}

/// Fractional power `h^p` of a Hermitian PSD matrix. Eigenvalues below the
/// rank cutoff (and any negative dust) are clipped to zero first, so negative
/// exponents yield pseudo-inverse powers.
pub fn matrix_power(h: &CMat, p: f64, rel_tol: f64) -> Result<CMat> {
    let eig = HermitianEigen::new(h)?;
    let cutoff = rel_tol * eig.spectral_radius();
    Ok(eig.apply(|v| if v > cutoff { v.powf(p) } else { 0.0 }))
}

/// Solve `h x = b` for Hermitian PSD `h`: Cholesky when definite, otherwise
/// the least-norm pseudo-inverse solution.
pub fn solve_psd(h: &CMat, b: &CVec, rel_tol: f64) -> Result<CVec> {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    Ok(pseudo_inverse(&sym, rel_tol)? * b)
}

/// An affine solution set `{u0 + B z}` of a linear constraint system,
/// factored once so that many quadratic minimizations can reuse it.
pub struct AffineSpace {
    /// A particular solution (least-norm for `from_constraints`).
    pub particular: CVec,
    /// Orthonormal basis of the homogeneous solutions, `n x r` (`r` may be 0).
    pub basis: CMat,
}

impl AffineSpace {
    /// Solutions of `A u = b`, or `None` when infeasible. The system is
    /// reduced through the Hermitian eigendecomposition of `A* A`, which
    /// tolerates redundant (even repeated) constraint rows.
    pub fn from_constraints(a: &CMat, b: &CVec, rel_tol: f64) -> Result<Option<AffineSpace>> {
        let n = a.ncols();
        if a.nrows() != b.len() {
            return Err(Error::Invalid("constraint dimensions do not match".into()));
        }
        let ata = a.adjoint() * a;
        let eig = HermitianEigen::new(&ata)?;
        let cutoff = rel_tol * eig.spectral_radius().max(1e-300);
        let atb = a.adjoint() * b;
        // Least-norm particular solution u0 = (A*A)^+ A* b.
        let mut u0 = CVec::zeros(n);
        let mut null_cols: Vec<usize> = Vec::new();
        for i in 0..n {
            if eig.values[i] > cutoff {
                let v = eig.vectors.column(i);
                let coef = v.dotc(&atb) / C64::new(eig.values[i], 0.0);
                u0 += v * coef;
            } else {
                null_cols.push(i);
            }
        }
        if (a * &u0 - b).norm() > 1e-8 * (1.0 + b.norm()) {
            return Ok(None);
        }
        let mut basis = CMat::zeros(n, null_cols.len());
        for (c, &i) in null_cols.iter().enumerate() {
            basis.set_column(c, &eig.vectors.column(i));
        }
        Ok(Some(AffineSpace {
            particular: u0,
            basis,
        }))
    }

    /// The space `{u : u[pin] = 1}` (free everywhere else), built directly.
    pub fn pinned(n: usize, pin: usize) -> AffineSpace {
        let mut particular = CVec::zeros(n);
        particular[pin] = C64::new(1.0, 0.0);
        let mut basis = CMat::zeros(n, n - 1);
        let mut col = 0;
        for i in 0..n {
            if i != pin {
                basis[(i, col)] = C64::new(1.0, 0.0);
                col += 1;
            }
        }
        AffineSpace { particular, basis }
    }

    /// Minimizer of the Hermitian PSD form `u* Q u` over this affine space.
    pub fn minimize(&self, q: &CMat, rel_tol: f64) -> Result<CVec> {
        if self.basis.ncols() == 0 {
            return Ok(self.particular.clone());
        }
        let qb = q * &self.basis;
        let h = self.basis.adjoint() * &qb;
        let g = self.basis.adjoint() * (q * &self.particular);
        let z = solve_psd(&h, &(-g), rel_tol)?;
        Ok(&self.particular + &self.basis * z)
    }
}

/// Minimizer of the Hermitian PSD quadratic form `u* Q u` over the affine
/// space `{u : A u = b}`. Returns `None` when the constraints are infeasible.
pub fn min_quadratic_constrained(
    q: &CMat,
    a: &CMat,
    b: &CVec,
    rel_tol: f64,
) -> Result<Option<CVec>> {
    if a.ncols() != q.nrows() {
        return Err(Error::Invalid("constraint dimensions do not match".into()));
    }
    match AffineSpace::from_constraints(a, b, rel_tol)? {
        None => Ok(None),
        Some(space) => Ok(Some(space.minimize(q, rel_tol)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm3() -> CMat {
        // A fixed Hermitian matrix with distinct eigenvalues.
        CMat::from_row_slice(
            3,
            3,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.3, 0.4),
                C64::new(-0.1, 0.2),
                C64::new(0.3, -0.4),
                C64::new(1.0, 0.0),
                C64::new(0.5, -0.6),
                C64::new(-0.1, -0.2),
                C64::new(0.5, 0.6),
                C64::new(3.0, 0.0),
            ],
        )
    }

    fn rank1_psd() -> CMat {
        let v = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let mut m = CMat::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = v[r] * v[c].conj();
            }
        }
        m
    }

    #[test]
    fn eigen_recomposes() {
        let h = herm3();
        let eig = HermitianEigen::new(&h).unwrap();
        let back = eig.apply(|v| v);
        assert!(max_abs(&(back - h)) < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = herm3();
        h[(0, 1)] += C64::new(1e-6, 0.0);
        assert!(matches!(
            HermitianEigen::new(&h),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn penrose_identities_full_rank() {
        let h = herm3();
        let p = pseudo_inverse(&h, RANK_REL_TOL).unwrap();
        assert!(max_abs(&(&h * &p * &h - &h)) < 1e-10);
        assert!(max_abs(&(&p * &h * &p - &p)) < 1e-10);
        let hp = &h * &p;
        assert!(max_abs(&(hp.adjoint() - &hp)) < 1e-10);
    }

    #[test]
    fn penrose_identities_rank_deficient() {
        let h = rank1_psd();
        let p = pseudo_inverse(&h, RANK_REL_TOL).unwrap();
        assert!(max_abs(&(&h * &p * &h - &h)) < 1e-10);
        assert!(max_abs(&(&p * &h * &p - &p)) < 1e-10);
        // H^+ H equals the range projection for Hermitian H.
        let proj = range_projection(&h, RANK_REL_TOL).unwrap();
        assert!(max_abs(&(&p * &h - &proj)) < 1e-10);
        // Projection is idempotent and Hermitian.
        assert!(max_abs(&(&proj * &proj - &proj)) < 1e-12);
        assert!(max_abs(&(proj.adjoint() - &proj)) < 1e-12);
    }

    #[test]
    fn zero_matrix_pseudo_inverse_is_zero() {
        let z = CMat::zeros(2, 2);
        let p = pseudo_inverse(&z, RANK_REL_TOL).unwrap();
        assert_eq!(max_abs(&p), 0.0);
        let proj = range_projection(&z, RANK_REL_TOL).unwrap();
        assert_eq!(max_abs(&proj), 0.0);
    }

    #[test]
    fn psd_validation_clips_dust() {
        let mut h = rank1_psd();
        h[(0, 0)] -= C64::new(1e-14, 0.0);
        let clipped = validate_psd(&h).unwrap();
        let eig = HermitianEigen::new(&clipped).unwrap();
        assert!(eig.values.iter().all(|&v| v >= 0.0));

        let mut bad = rank1_psd();
        bad[(0, 0)] = C64::new(-1.0, 0.0);
        assert!(matches!(validate_psd(&bad), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn matrix_power_halves_compose() {
        let h = herm3();
        // Shift to make it PSD.
        let psd = &h + CMat::identity(3, 3) * C64::new(5.0, 0.0);
        let half = matrix_power(&psd, 0.5, RANK_REL_TOL).unwrap();
        assert!(max_abs(&(&half * &half - &psd)) < 1e-10);
        let inv = matrix_power(&psd, -1.0, RANK_REL_TOL).unwrap();
        let pinv = pseudo_inverse(&psd, RANK_REL_TOL).unwrap();
        assert!(max_abs(&(inv - pinv)) < 1e-10);
    }

    #[test]
    fn constrained_minimizer_beats_feasible_points() {
        // Minimize u*Qu with a pin u_0 = 1: closed-form check against
        // elimination on a 2x2 example.
        let q = rank1_psd() + CMat::identity(2, 2) * C64::new(0.5, 0.0);
        let a = CMat::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let b = CVec::from_vec(vec![C64::new(1.0, 0.0)]);
        let u = min_quadratic_constrained(&q, &a, &b, RANK_REL_TOL)
            .unwrap()
            .unwrap();
        assert!((u[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let val = (u.adjoint() * &q * &u)[(0, 0)].re;
        // Compare with brute elimination: u1 = -Q11^{-1} Q10.
        let u1 = -q[(1, 0)] / q[(1, 1)];
        let brute = CVec::from_vec(vec![C64::new(1.0, 0.0), u1]);
        let brute_val = (brute.adjoint() * &q * &brute)[(0, 0)].re;
        assert!((val - brute_val).abs() < 1e-12);
    }

    #[test]
    fn constrained_minimizer_tolerates_redundant_rows() {
        let q = CMat::identity(3, 3);
        // The same constraint twice plus an implied sum row.
        let a = CMat::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let b = CVec::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]);
        let u = min_quadratic_constrained(&q, &a, &b, RANK_REL_TOL)
            .unwrap()
            .unwrap();
        assert!((u[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(u[1].norm() < 1e-10 && u[2].norm() < 1e-10);
    }

    #[test]
    fn infeasible_constraints_detected() {
        let q = CMat::identity(2, 2);
        let a = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let b = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        assert!(min_quadratic_constrained(&q, &a, &b, RANK_REL_TOL)
            .unwrap()
            .is_none());
    }
}
