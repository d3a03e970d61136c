//! Spectral measures on the dual group: absolutely continuous densities,
//! atomic singular parts, and their Lebesgue-decomposition bookkeeping.
//!
//! A measure is `M = M_a + M_s`: the a.c. part is a grid-sampled `q x q`
//! Hermitian PSD density `W` against normalized Haar measure, the singular
//! part a finite list of PSD atoms sitting on grid nodes. Rank decisions for
//! a weight (carrier nodes, pseudo-inverse powers) are made relative to the
//! weight's global scale, i.e. the largest eigenvalue over the whole grid.

use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec, C64};
use crate::linalg::{self, CMat, CVec, HermitianEigen, RANK_REL_TOL};

/// Closed-form weight families (resamplable to a finer grid) plus raw tables.
#[derive(Clone, Debug)]
pub enum WeightFamily {
    /// Constant density `W(gamma) = C`.
    Constant(CMat),
    /// Scalar `w(gamma) = |sum_x a_x <gamma, x>|^2`.
    ModulusSquared(Vec<(Frequency, C64)>),
    /// Scalar piecewise-constant in the angle on `(-pi, pi]`: segments
    /// `(upper, value)` with ascending uppers; `w = value` on `(prev, upper]`.
    Piecewise(Vec<(f64, f64)>),
    /// Matrix `W(gamma) = A(gamma) A(gamma)*` with `A = sum_x A_x <gamma, x>`.
    MatrixPoly(Vec<(Frequency, CMat)>),
    /// Raw sample table; cannot be resampled, only subsampled.
    Samples,
}

/// A `q x q` Hermitian PSD density sampled on the dual-group grid.
#[derive(Clone, Debug)]
pub struct MatrixWeight {
    group: GroupSpec,
    q: usize,
    family: WeightFamily,
    samples: Vec<CMat>,
}

impl MatrixWeight {
    /// Build from validated per-node samples (Hermitian within 1e-12,
    /// eigenvalues >= -1e-10 relative, negative dust clipped to zero).
    pub fn from_samples(group: GroupSpec, samples: Vec<CMat>) -> Result<Self> {
        Self::build(group, WeightFamily::Samples, samples)
    }

    /// Constant matrix density.
    pub fn constant(group: GroupSpec, c: CMat) -> Result<Self> {
        let samples = vec![c.clone(); group.grid_len()];
        Self::build(group, WeightFamily::Constant(c), samples)
    }

    /// Constant scalar density.
    pub fn scalar_constant(group: GroupSpec, v: f64) -> Result<Self> {
        Self::constant(group, CMat::from_element(1, 1, C64::new(v, 0.0)))
    }

    /// Scalar `|trig polynomial|^2` density.
    pub fn modulus_squared(group: GroupSpec, coeffs: Vec<(Frequency, C64)>) -> Result<Self> {
        for &(x, _) in &coeffs {
            group.check_member(x)?;
        }
        let samples = (0..group.grid_len())
            .map(|j| {
                let v: C64 = coeffs.iter().map(|&(x, a)| a * group.character(x, j)).sum();
                CMat::from_element(1, 1, C64::new(v.norm_sqr(), 0.0))
            })
            .collect();
        Self::build(group, WeightFamily::ModulusSquared(coeffs), samples)
    }

    /// Scalar piecewise-constant density in the signed angle.
    pub fn piecewise(group: GroupSpec, segments: Vec<(f64, f64)>) -> Result<Self> {
        if !matches!(group, GroupSpec::Integer { .. }) {
            return Err(Error::Invalid(
                "piecewise-constant weights require the integer group".into(),
            ));
        }
        if segments.is_empty()
            || segments.windows(2).any(|w| w[0].0 >= w[1].0)
            || segments.last().unwrap().0 < std::f64::consts::PI - 1e-15
        {
            return Err(Error::Invalid(
                "piecewise segments must have ascending uppers covering (-pi, pi]".into(),
            ));
        }
        if segments.iter().any(|&(_, v)| v < 0.0 || !v.is_finite()) {
            return Err(Error::Invalid(
                "piecewise values must be finite and >= 0".into(),
            ));
        }
        let samples = (0..group.grid_len())
            .map(|j| {
                let t = group.node_angles_signed(j)[0];
                let v = segments
                    .iter()
                    .find(|&&(ub, _)| t <= ub + 1e-15)
                    .map(|&(_, v)| v)
                    .unwrap_or(segments.last().unwrap().1);
                CMat::from_element(1, 1, C64::new(v, 0.0))
            })
            .collect();
        Self::build(group, WeightFamily::Piecewise(segments), samples)
    }

    /// Matrix `A A*` density from a matrix trigonometric polynomial `A`.
    pub fn matrix_poly(group: GroupSpec, coeffs: Vec<(Frequency, CMat)>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid(
                "matrix-poly weight needs coefficients".into(),
            ));
        }
        let q = coeffs[0].1.nrows();
        for &(x, ref m) in &coeffs {
            group.check_member(x)?;
            if m.shape() != (q, q) {
                return Err(Error::Invalid("ragged matrix-poly coefficients".into()));
            }
        }
        let samples = (0..group.grid_len())
            .map(|j| {
                let mut a = CMat::zeros(q, q);
                for (x, m) in &coeffs {
                    a += m * group.character(*x, j);
                }
                &a * a.adjoint()
            })
            .collect();
        Self::build(group, WeightFamily::MatrixPoly(coeffs), samples)
    }

    fn build(group: GroupSpec, family: WeightFamily, samples: Vec<CMat>) -> Result<Self> {
        if samples.len() != group.grid_len() {
            return Err(Error::SizeMismatch {
                expected: group.grid_len(),
                got: samples.len(),
            });
        }
        let q = samples[0].nrows();
        if q == 0 {
            return Err(Error::Invalid("weight dimension must be >= 1".into()));
        }
        let mut clean = Vec::with_capacity(samples.len());
        for m in &samples {
            if m.shape() != (q, q) {
                return Err(Error::Invalid("ragged weight samples".into()));
            }
            clean.push(linalg::validate_psd(m)?);
        }
        Ok(MatrixWeight {
            group,
            q,
            family,
            samples: clean,
        })
    }

    /// Matrix dimension `q`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// The group whose dual this weight is sampled on.
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    /// True when `q == 1`.
    pub fn is_scalar(&self) -> bool {
        self.q == 1
    }

    /// Density sample at grid node `j`.
    pub fn at(&self, j: usize) -> &CMat {
        &self.samples[j]
    }

    /// Scalar density sample at node `j` (requires `q == 1`).
    pub fn scalar_at(&self, j: usize) -> f64 {
        debug_assert_eq!(self.q, 1);
        self.samples[j][(0, 0)].re
    }

    /// All samples, node order.
    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    /// Largest eigenvalue over the whole grid: the weight's global scale.
    pub fn global_scale(&self) -> f64 {
        if self.q == 1 {
            return (0..self.samples.len())
                .map(|j| self.scalar_at(j))
                .fold(0.0, f64::max);
        }
        self.samples
            .iter()
            .map(|m| {
                HermitianEigen::new(m)
                    .map(|e| e.spectral_radius())
                    .unwrap_or(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Carrier cutoff: eigenvalues at or below `rel_tol * global scale`
    /// count as zero.
    pub fn carrier_cutoff(&self, rel_tol: f64) -> f64 {
        rel_tol * self.global_scale()
    }

    /// Scalar fast path: samples of `(w^+)^p = w^{-p}` on the carrier and
    /// zero off it (`p > 0`).
    pub fn scalar_pinv_power(&self, p: f64, rel_tol: f64) -> Result<Vec<f64>> {
        if self.q != 1 {
            return Err(Error::Invalid("scalar_pinv_power requires q = 1".into()));
        }
        let cutoff = self.carrier_cutoff(rel_tol);
        Ok((0..self.samples.len())
            .map(|j| {
                let w = self.scalar_at(j);
                if w > cutoff {
                    w.powf(-p)
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Per-node Moore-Penrose inverses `W(gamma_j)^+` (global-scale cutoff).
    pub fn pinv_samples(&self, rel_tol: f64) -> Result<Vec<CMat>> {
        let cutoff = self.carrier_cutoff(rel_tol);
        self.samples
            .iter()
            .map(|m| {
                let eig = HermitianEigen::new(m)?;
                Ok(eig.apply(|v| if v > cutoff { 1.0 / v } else { 0.0 }))
            })
            .collect()
    }

    /// Per-node range projections `P(gamma_j)` onto `ran W(gamma_j)`.
    pub fn projection_samples(&self, rel_tol: f64) -> Result<Vec<CMat>> {
        let cutoff = self.carrier_cutoff(rel_tol);
        self.samples
            .iter()
            .map(|m| {
                let eig = HermitianEigen::new(m)?;
                Ok(eig.apply(|v| if v > cutoff { 1.0 } else { 0.0 }))
            })
            .collect()
    }

    /// Nodes where `W` is rank-deficient, with their range projections.
    pub fn deficient_nodes(&self, rel_tol: f64) -> Result<Vec<(usize, CMat)>> {
        let cutoff = self.carrier_cutoff(rel_tol);
        let mut out = Vec::new();
        for (j, m) in self.samples.iter().enumerate() {
            let eig = HermitianEigen::new(m)?;
            if eig.values.iter().any(|&v| v <= cutoff) {
                out.push((j, eig.apply(|v| if v > cutoff { 1.0 } else { 0.0 })));
            }
        }
        Ok(out)
    }

    /// Re-evaluate the family on another grid of the same kind. `None` for
    /// raw sample tables and for grids the family cannot target.
    pub fn resample(&self, target: GroupSpec) -> Option<MatrixWeight> {
        let compatible = matches!(
            (self.group, target),
            (GroupSpec::Integer { .. }, GroupSpec::Integer { .. })
                | (GroupSpec::Lattice2 { .. }, GroupSpec::Lattice2 { .. })
        ) || self.group == target;
        if !compatible {
            return None;
        }
        match &self.family {
            WeightFamily::Constant(c) => MatrixWeight::constant(target, c.clone()).ok(),
            WeightFamily::ModulusSquared(coeffs) => {
                MatrixWeight::modulus_squared(target, coeffs.clone()).ok()
            }
            WeightFamily::Piecewise(seg) => MatrixWeight::piecewise(target, seg.clone()).ok(),
            WeightFamily::MatrixPoly(coeffs) => {
                MatrixWeight::matrix_poly(target, coeffs.clone()).ok()
            }
            WeightFamily::Samples => None,
        }
    }

    /// Restrict a raw sample table to the coarsened grid (every other node
    /// per axis). The fallback quadrature check when resampling is impossible.
    pub fn subsample(&self) -> Option<MatrixWeight> {
        let coarse = self.group.coarsened()?;
        let mut samples = vec![CMat::zeros(self.q, self.q); coarse.grid_len()];
        for j in 0..self.group.grid_len() {
            if let Some(cj) = self.group.coarse_node(j) {
                samples[cj] = self.samples[j].clone();
            }
        }
        MatrixWeight::from_samples(coarse, samples).ok()
    }

    /// Zero weight of the same shape (used by part restrictions).
    pub fn zero_like(&self) -> MatrixWeight {
        MatrixWeight::constant(self.group, CMat::zeros(self.q, self.q))
            .expect("zero weight is valid")
    }
}

/// One atom of the singular part: PSD mass sitting on a grid node.
#[derive(Clone, Debug)]
pub struct Atom {
    /// Flat grid node index of the atom's location.
    pub node: usize,
    /// `q x q` Hermitian PSD mass.
    pub mass: CMat,
}

/// The singular part: finitely many atoms on distinct grid nodes.
#[derive(Clone, Debug, Default)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// No singular part.
    pub fn empty() -> Self {
        AtomicMeasure { atoms: Vec::new() }
    }

    /// Build from atoms; nodes must be distinct and in range, masses PSD.
    pub fn new(group: GroupSpec, q: usize, mut atoms: Vec<Atom>) -> Result<Self> {
        atoms.sort_by_key(|a| a.node);
        for w in atoms.windows(2) {
            if w[0].node == w[1].node {
                return Err(Error::Invalid(format!("duplicate atom node {}", w[0].node)));
            }
        }
        let mut clean = Vec::with_capacity(atoms.len());
        for a in atoms {
            if a.node >= group.grid_len() {
                return Err(Error::Invalid(format!(
                    "atom node {} outside grid of {} nodes",
                    a.node,
                    group.grid_len()
                )));
            }
            if a.mass.shape() != (q, q) {
                return Err(Error::Invalid("atom mass dimension mismatch".into()));
            }
            clean.push(Atom {
                node: a.node,
                mass: linalg::validate_psd(&a.mass)?,
            });
        }
        Ok(AtomicMeasure { atoms: clean })
    }

    /// Atoms in ascending node order.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// True when there are no atoms.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }
}

/// Which Lebesgue part of a measure to keep.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Part {
    /// Keep the density, drop the atoms.
    AcOnly,
    /// Keep the atoms, zero the density.
    SingularOnly,
}

/// A Lebesgue-decomposed spectral measure `M = M_a + M_s`.
#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    /// Absolutely continuous part: the sampled density.
    pub ac: MatrixWeight,
    /// Singular part: atoms on grid nodes.
    pub singular: AtomicMeasure,
}

impl SpectralMeasure {
    /// Combine a density and a singular part of matching dimension.
    pub fn new(ac: MatrixWeight, singular: AtomicMeasure) -> Result<Self> {
        for a in singular.atoms() {
            if a.mass.nrows() != ac.q() {
                return Err(Error::Invalid(
                    "atom dimension does not match density".into(),
                ));
            }
            if a.node >= ac.group().grid_len() {
                return Err(Error::Invalid("atom node outside the density grid".into()));
            }
        }
        Ok(SpectralMeasure { ac, singular })
    }

    /// A purely absolutely continuous measure.
    pub fn absolutely_continuous(ac: MatrixWeight) -> Self {
        SpectralMeasure {
            ac,
            singular: AtomicMeasure::empty(),
        }
    }

    /// Matrix dimension `q`.
    pub fn q(&self) -> usize {
        self.ac.q()
    }

    /// The underlying group.
    pub fn group(&self) -> GroupSpec {
        self.ac.group()
    }

    /// Keep one Lebesgue part, zeroing the other. Never alters the kept part.
    pub fn restrict(&self, part: Part) -> SpectralMeasure {
        match part {
            Part::AcOnly => SpectralMeasure {
                ac: self.ac.clone(),
                singular: AtomicMeasure::empty(),
            },
            Part::SingularOnly => SpectralMeasure {
                ac: self.ac.zero_like(),
                singular: self.singular.clone(),
            },
        }
    }

    /// Total mass `M(Gamma) = integral W dlambda + sum of atom masses`.
    pub fn total_mass(&self) -> CMat {
        let g = self.group();
        let mut acc = CMat::zeros(self.q(), self.q());
        for j in 0..g.grid_len() {
            acc += self.ac.at(j);
        }
        acc /= C64::new(g.grid_len() as f64, 0.0);
        for a in self.singular.atoms() {
            acc += &a.mass;
        }
        acc
    }
}

/// Moore-Penrose inverse of one Hermitian matrix (standalone operation:
/// cutoff relative to this matrix's own largest eigenvalue).
pub fn moore_penrose(h: &CMat, rel_tol: f64) -> Result<CMat> {
    linalg::pseudo_inverse(h, rel_tol)
}

/// Orthogonal projection onto `ran H` for one Hermitian matrix.
pub fn range_projection(h: &CMat, rel_tol: f64) -> Result<CMat> {
    linalg::range_projection(h, rel_tol)
}

/// Project grid samples of a `C^q`-valued function onto the pointwise range
/// of the weight: the canonical representative of its equivalence class in
/// `L^alpha(M_a)`. Scalar weights simply zero the samples off the carrier.
pub fn normalize_equivalence(f: &[CVec], w: &MatrixWeight, rel_tol: f64) -> Result<Vec<CVec>> {
    if f.len() != w.group().grid_len() {
        return Err(Error::SizeMismatch {
            expected: w.group().grid_len(),
            got: f.len(),
        });
    }
    if w.is_scalar() {
        let cutoff = w.carrier_cutoff(rel_tol);
        return Ok(f
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if w.scalar_at(j) > cutoff {
                    v.clone()
                } else {
                    CVec::zeros(v.len())
                }
            })
            .collect());
    }
    let projections = w.projection_samples(rel_tol)?;
    Ok(f.iter()
        .zip(projections.iter())
        .map(|(v, p)| p * v)
        .collect())
}

/// Convenience: default-tolerance pseudo-inverse used in tests.
pub fn moore_penrose_default(h: &CMat) -> Result<CMat> {
    moore_penrose(h, RANK_REL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;

    fn diag2(a: f64, b: f64) -> CMat {
        CMat::from_diagonal(&CVec::from_vec(vec![C64::new(a, 0.0), C64::new(b, 0.0)]))
    }

    #[test]
    fn ma1_weight_matches_formula() {
        // w(theta) = |1 - 0.5 e^{i theta}|^2 = 1.25 - cos(theta).
        let g = GroupSpec::integer(64).unwrap();
        let w = MatrixWeight::modulus_squared(
            g,
            vec![
                (Frequency::Int(0), C64::new(1.0, 0.0)),
                (Frequency::Int(1), C64::new(-0.5, 0.0)),
            ],
        )
        .unwrap();
        for j in 0..g.grid_len() {
            let t = g.node_angles(j)[0];
            assert!((w.scalar_at(j) - (1.25 - t.cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn piecewise_weight_and_pinv_power() {
        // w = 4 on angles in (-pi/2, pi/2], 0 elsewhere: w+ = 1/4 on the
        // carrier, 0 off it, matching the piecewise formula for (w+)^1.
        let g = GroupSpec::integer(32).unwrap();
        let half = std::f64::consts::FRAC_PI_2;
        let pi = std::f64::consts::PI;
        let w = MatrixWeight::piecewise(g, vec![(-half, 0.0), (half, 4.0), (pi, 0.0)]).unwrap();
        let v = w.scalar_pinv_power(1.0, RANK_REL_TOL).unwrap();
        for (j, &vj) in v.iter().enumerate() {
            let t = g.node_angles_signed(j)[0];
            let expect = if t > -half + 1e-12 && t <= half + 1e-12 {
                0.25
            } else {
                0.0
            };
            assert!(
                (vj - expect).abs() < 1e-14,
                "node {j} angle {t}: got {vj} want {expect}"
            );
        }
    }

    #[test]
    fn sample_validation_rejects_bad_input() {
        let g = GroupSpec::cyclic(4).unwrap();
        // Non-Hermitian sample.
        let mut bad = vec![CMat::identity(2, 2); 4];
        bad[2][(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(
            MatrixWeight::from_samples(g, bad),
            Err(Error::NotHermitian { .. })
        ));
        // Indefinite sample.
        let mut indef = vec![CMat::identity(2, 2); 4];
        indef[1] = diag2(1.0, -1.0);
        assert!(matches!(
            MatrixWeight::from_samples(g, indef),
            Err(Error::NotPsd { .. })
        ));
        // Wrong length.
        assert!(MatrixWeight::from_samples(g, vec![CMat::identity(2, 2); 3]).is_err());
    }

    #[test]
    fn matrix_poly_weight_is_psd_and_rank_deficient_where_a_drops() {
        // A(gamma) = diag(1, 1 - <gamma,1>): at gamma = 0 the second channel
        // vanishes, so W = A A* has a rank-1 node there.
        let g = GroupSpec::cyclic(6).unwrap();
        let a0 = diag2(1.0, 1.0);
        let a1 = diag2(0.0, -1.0);
        let w =
            MatrixWeight::matrix_poly(g, vec![(Frequency::Int(0), a0), (Frequency::Int(1), a1)])
                .unwrap();
        let deficient = w.deficient_nodes(RANK_REL_TOL).unwrap();
        assert_eq!(deficient.len(), 1);
        assert_eq!(deficient[0].0, 0);
        // The projection at the deficient node keeps only the first channel.
        let p = &deficient[0].1;
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(p[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn atoms_validated() {
        let g = GroupSpec::cyclic(8).unwrap();
        assert!(AtomicMeasure::new(
            g,
            1,
            vec![
                Atom {
                    node: 3,
                    mass: CMat::from_element(1, 1, C64::new(0.5, 0.0))
                },
                Atom {
                    node: 3,
                    mass: CMat::from_element(1, 1, C64::new(0.5, 0.0))
                },
            ],
        )
        .is_err());
        assert!(AtomicMeasure::new(
            g,
            1,
            vec![Atom {
                node: 9,
                mass: CMat::from_element(1, 1, C64::new(0.5, 0.0))
            }],
        )
        .is_err());
    }

    #[test]
    fn restrict_keeps_parts_intact() {
        let g = GroupSpec::cyclic(4).unwrap();
        let w = MatrixWeight::scalar_constant(g, 2.0).unwrap();
        let atoms = AtomicMeasure::new(
            g,
            1,
            vec![Atom {
                node: 1,
                mass: CMat::from_element(1, 1, C64::new(0.7, 0.0)),
            }],
        )
        .unwrap();
        let m = SpectralMeasure::new(w, atoms).unwrap();
        let ac = m.restrict(Part::AcOnly);
        assert!(ac.singular.is_empty());
        assert_eq!(ac.ac.scalar_at(0), 2.0);
        let sing = m.restrict(Part::SingularOnly);
        assert_eq!(sing.ac.scalar_at(0), 0.0);
        assert_eq!(sing.singular.len(), 1);
        // Total masses add up: 2.0 + 0.7 split as 2.0 and 0.7.
        assert!((m.total_mass()[(0, 0)].re - 2.7).abs() < 1e-14);
        assert!((ac.total_mass()[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((sing.total_mass()[(0, 0)].re - 0.7).abs() < 1e-14);
    }

    #[test]
    fn normalize_equivalence_zeroes_off_carrier() {
        let g = GroupSpec::integer(16).unwrap();
        let pi = std::f64::consts::PI;
        let w = MatrixWeight::piecewise(g, vec![(0.0, 0.0), (pi, 1.0)]).unwrap();
        let f: Vec<CVec> = (0..16)
            .map(|_| CVec::from_vec(vec![C64::new(1.0, 0.0)]))
            .collect();
        let out = normalize_equivalence(&f, &w, RANK_REL_TOL).unwrap();
        for (j, oj) in out.iter().enumerate() {
            let expect = if w.scalar_at(j) > 0.0 { 1.0 } else { 0.0 };
            assert_eq!(oj[0].re, expect);
        }
        // Idempotent.
        let again = normalize_equivalence(&out, &w, RANK_REL_TOL).unwrap();
        for j in 0..16 {
            assert_eq!(out[j][0], again[j][0]);
        }
    }

    #[test]
    fn resample_families_refine() {
        let g = GroupSpec::integer(16).unwrap();
        let w = MatrixWeight::modulus_squared(
            g,
            vec![
                (Frequency::Int(0), C64::new(1.0, 0.0)),
                (Frequency::Int(1), C64::new(-0.5, 0.0)),
            ],
        )
        .unwrap();
        let fine = w.resample(g.refined().unwrap()).unwrap();
        assert_eq!(fine.group().grid_len(), 32);
        // Even nodes of the fine grid agree with the coarse samples.
        for j in 0..16 {
            assert!((fine.scalar_at(2 * j) - w.scalar_at(j)).abs() < 1e-12);
        }
        // Raw tables cannot refine but can subsample.
        let raw = MatrixWeight::from_samples(g, w.samples().to_vec()).unwrap();
        assert!(raw.resample(g.refined().unwrap()).is_none());
        let coarse = raw.subsample().unwrap();
        assert_eq!(coarse.group().grid_len(), 8);
        for j in 0..8 {
            assert_eq!(coarse.scalar_at(j), raw.scalar_at(2 * j));
        }
    }
}
