//! The weighted space `L^alpha(M)`: trigonometric polynomials, norms,
//! Fourier coefficients, and Gram matrices.
//!
//! The norm of a `C^q`-valued function `f` against the decomposed measure
//! `M = W dlambda + sum of atoms` is
//! `[ integral ||W^{1/alpha} f||^alpha dlambda + sum ||mass^{1/alpha} f||^alpha ]^{1/alpha}`,
//! discretized by the grid mean in ascending node order. Fourier data follows
//! the convention used by the duality theory: `(f^*)^(x) = integral <gamma, x> f(gamma)^* dlambda`,
//! so for a polynomial the coefficient functional at `x` is exactly the
//! conjugated coefficient and vanishing constraints are finite and exact.

use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec, C64};
use crate::linalg::{CMat, CVec, HermitianEigen};
use crate::measures::SpectralMeasure;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// The exponent triple of the duality: `alpha`, its conjugate
/// `alpha' = alpha/(alpha-1)`, and `beta = 1/(alpha-1)`.
#[derive(Clone, Copy, Debug)]
pub struct Exponents {
    /// Primal exponent, `1 < alpha < infinity`.
    pub alpha: f64,
    /// Conjugate exponent `alpha' = alpha/(alpha-1)`.
    pub conjugate: f64,
    /// Weight exponent `beta = 1/(alpha-1) = alpha' - 1`.
    pub beta: f64,
}

impl Exponents {
    /// Build from `alpha`; errors outside `(1, infinity)`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 1.0 {
            return Err(Error::Invalid(format!(
                "alpha must lie in (1, infinity), got {alpha}"
            )));
        }
        Ok(Exponents {
            alpha,
            conjugate: alpha / (alpha - 1.0),
            beta: 1.0 / (alpha - 1.0),
        })
    }
}

/// A finitely supported `C^q`-valued trigonometric polynomial
/// `t(gamma) = sum_x u_x <gamma, x>`.
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    q: usize,
    coeffs: BTreeMap<Frequency, CVec>,
}

impl TrigPolynomial {
    /// The zero polynomial with values in `C^q`.
    pub fn zero(q: usize) -> Self {
        TrigPolynomial {
            q,
            coeffs: BTreeMap::new(),
        }
    }

    /// Build from coefficient terms; repeated frequencies accumulate and
    /// zero vectors are pruned.
    pub fn from_terms(q: usize, terms: Vec<(Frequency, CVec)>) -> Result<Self> {
        let mut p = TrigPolynomial::zero(q);
        for (x, u) in terms {
            p.add_term(x, u)?;
        }
        Ok(p)
    }

    /// The character basis element `chi_s e_k` (`k` zero-based).
    pub fn character_basis(s: Frequency, k: usize, q: usize) -> Result<Self> {
        if k >= q {
            return Err(Error::Invalid(format!(
                "coordinate k={k} out of range for q={q}"
            )));
        }
        let mut u = CVec::zeros(q);
        u[k] = C64::new(1.0, 0.0);
        TrigPolynomial::from_terms(q, vec![(s, u)])
    }

    /// Scalar polynomial term `c * chi_x` (`q = 1`).
    pub fn scalar_term(x: Frequency, c: C64) -> Self {
        TrigPolynomial::from_terms(1, vec![(x, CVec::from_vec(vec![c]))]).unwrap()
    }

    /// Add `u * chi_x` to this polynomial.
    pub fn add_term(&mut self, x: Frequency, u: CVec) -> Result<()> {
        if u.len() != self.q {
            return Err(Error::Invalid(format!(
                "coefficient length {} does not match q={}",
                u.len(),
                self.q
            )));
        }
        let entry = self.coeffs.entry(x).or_insert_with(|| CVec::zeros(self.q));
        *entry += u;
        if entry.iter().all(|v| v.norm() == 0.0) {
            self.coeffs.remove(&x);
        }
        Ok(())
    }

    /// Value dimension `q`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Supported frequencies, ascending.
    pub fn support(&self) -> Vec<Frequency> {
        self.coeffs.keys().copied().collect()
    }

    /// Coefficient vector at `x`, if present.
    pub fn coeff(&self, x: Frequency) -> Option<&CVec> {
        self.coeffs.get(&x)
    }

    /// Iterate terms in ascending frequency order.
    pub fn terms(&self) -> impl Iterator<Item = (&Frequency, &CVec)> {
        self.coeffs.iter()
    }

    /// True when no terms remain.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `self - other`.
    pub fn minus(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        if self.q != other.q {
            return Err(Error::Invalid("polynomial dimensions differ".into()));
        }
        let mut out = self.clone();
        for (&x, u) in other.terms() {
            out.add_term(x, -u.clone())?;
        }
        Ok(out)
    }

    /// Value at grid node `j`.
    pub fn eval_node(&self, g: &GroupSpec, j: usize) -> CVec {
        let mut v = CVec::zeros(self.q);
        for (&x, u) in &self.coeffs {
            v += u * g.character(x, j);
        }
        v
    }

    /// Values on the whole grid. Errors when a supported frequency does not
    /// fit the group or falls outside the alias-free band.
    pub fn eval_grid(&self, g: &GroupSpec) -> Result<Vec<CVec>> {
        for &x in self.coeffs.keys() {
            g.check_member(x)?;
            if !g.in_band(x) {
                return Err(Error::BandViolation {
                    freq: x,
                    band: g.band_limit().unwrap_or(i64::MAX),
                });
            }
        }
        Ok((0..g.grid_len()).map(|j| self.eval_node(g, j)).collect())
    }

    /// The conjugated coefficient functional `(t^*)^(x)`: the row vector with
    /// entries `conj(u_x[i])`, exactly zero off the support.
    pub fn conj_coefficient(&self, x: Frequency) -> CVec {
        match self.coeffs.get(&x) {
            Some(u) => u.map(|v| v.conj()),
            None => CVec::zeros(self.q),
        }
    }
}

impl serde::Serialize for TrigPolynomial {
    /// Terms in ascending frequency order, coefficients as `[re, im]` pairs.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        #[derive(serde::Serialize)]
        struct Term<'a> {
            freq: &'a Frequency,
            coeff: Vec<[f64; 2]>,
        }
        let mut seq = s.serialize_seq(Some(self.coeffs.len()))?;
        for (x, u) in &self.coeffs {
            seq.serialize_element(&Term {
                freq: x,
                coeff: u.iter().map(|v| [v.re, v.im]).collect(),
            })?;
        }
        seq.end()
    }
}

/// `(f^*)^(x)` for grid samples: `(1/N) sum_j <gamma_j, x> conj(f_j)`,
/// entrywise. Exact for in-band polynomials; errors outside the band.
pub fn fourier_coefficient_grid(f: &[CVec], x: Frequency, g: &GroupSpec) -> Result<CVec> {
    g.check_member(x)?;
    if !g.in_band(x) {
        return Err(Error::BandViolation {
            freq: x,
            band: g.band_limit().unwrap_or(i64::MAX),
        });
    }
    let n = g.grid_len();
    if f.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let q = f[0].len();
    let mut acc = CVec::zeros(q);
    for (j, fj) in f.iter().enumerate() {
        let c = g.character(x, j);
        for i in 0..q {
            acc[i] += c * fj[i].conj();
        }
    }
    Ok(acc / C64::new(n as f64, 0.0))
}

/// `(t^*)^(x)` for a polynomial: the conjugated coefficient, exactly.
pub fn fourier_coefficient_poly(t: &TrigPolynomial, x: Frequency) -> CVec {
    t.conj_coefficient(x)
}

/// The measure transform `M^(z) = integral <gamma, z> dM(gamma)`.
pub fn measure_transform(m: &SpectralMeasure, z: Frequency, g: &GroupSpec) -> Result<CMat> {
    g.check_member(z)?;
    if !g.in_band(z) {
        return Err(Error::BandViolation {
            freq: z,
            band: g.band_limit().unwrap_or(i64::MAX),
        });
    }
    let n = g.grid_len();
    let q = m.q();
    let mut acc = CMat::zeros(q, q);
    for j in 0..n {
        acc += m.ac.at(j) * g.character(z, j);
    }
    acc /= C64::new(n as f64, 0.0);
    for a in m.singular.atoms() {
        acc += &a.mass * g.character(z, a.node);
    }
    Ok(acc)
}

/// Norm in `L^alpha(M)` of grid samples.
pub fn lalpha_norm_grid(f: &[CVec], m: &SpectralMeasure, alpha: f64, g: &GroupSpec) -> Result<f64> {
    let n = g.grid_len();
    if f.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::Invalid(format!(
            "norm exponent must be >= 1, got {alpha}"
        )));
    }
    let q = m.q();
    if f[0].len() != q {
        return Err(Error::Invalid(format!(
            "sample dimension {} does not match measure dimension {q}",
            f[0].len()
        )));
    }
    let mut total = 0.0f64;
    // Absolutely continuous part: grid mean of ||W^{1/alpha} f||^alpha.
    if q == 1 {
        let mut acc = 0.0f64;
        for (j, fj) in f.iter().enumerate() {
            acc += m.ac.scalar_at(j) * fj[0].norm().powf(alpha);
        }
        total += acc / n as f64;
    } else if alpha == 2.0 {
        let mut acc = 0.0f64;
        for (j, fj) in f.iter().enumerate() {
            acc += quad_form(m.ac.at(j), fj);
        }
        total += acc / n as f64;
    } else {
        let mut acc = 0.0f64;
        for (j, fj) in f.iter().enumerate() {
            acc += root_weighted(m.ac.at(j), fj, alpha)?;
        }
        total += acc / n as f64;
    }
    // Singular part: one term per atom.
    for a in m.singular.atoms() {
        if q == 1 {
            total += a.mass[(0, 0)].re * f[a.node][0].norm().powf(alpha);
        } else if alpha == 2.0 {
            total += quad_form(&a.mass, &f[a.node]);
        } else {
            total += root_weighted(&a.mass, &f[a.node], alpha)?;
        }
    }
    Ok(total.max(0.0).powf(1.0 / alpha))
}

/// Norm in `L^alpha(M)` of a polynomial (band-checked grid evaluation).
pub fn lalpha_norm(
    t: &TrigPolynomial,
    m: &SpectralMeasure,
    alpha: f64,
    g: &GroupSpec,
) -> Result<f64> {
    let f = t.eval_grid(g)?;
    lalpha_norm_grid(&f, m, alpha, g)
}

/// `f^* H f` for Hermitian PSD `H` (real, clipped at zero).
fn quad_form(h: &CMat, f: &CVec) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            acc += f[r].conj() * h[(r, c)] * f[c];
        }
    }
    acc.re.max(0.0)
}

/// `||H^{1/alpha} f||^alpha` via the eigendecomposition of `H`.
fn root_weighted(h: &CMat, f: &CVec, alpha: f64) -> Result<f64> {
    let eig = HermitianEigen::new(h)?;
    // ||H^{1/alpha} f||^2 = sum_i lambda_i^{2/alpha} |<v_i, f>|^2.
    let mut norm_sq = 0.0f64;
    for i in 0..eig.values.len() {
        let lam = eig.values[i].max(0.0);
        if lam > 0.0 {
            let proj = eig.vectors.column(i).dotc(f).norm_sqr();
            norm_sq += lam.powf(2.0 / alpha) * proj;
        }
    }
    Ok(norm_sq.max(0.0).powf(alpha / 2.0))
}

/// Gram matrix of the character basis `{chi_x e_i}` in `L^2(M)`: the block at
/// (row `y`, column `x`) is `M^(x - y)`, giving a Hermitian PSD matrix of
/// side `len(freqs) * q`. Basis order: frequency-major, coordinate-minor.
pub fn gram_matrix(freqs: &[Frequency], m: &SpectralMeasure, g: &GroupSpec) -> Result<CMat> {
    let q = m.q();
    let nb = freqs.len();
    let mut diffs: BTreeMap<Frequency, CMat> = BTreeMap::new();
    for &x in freqs {
        for &y in freqs {
            let z = g.sub(x, y);
            if let Entry::Vacant(slot) = diffs.entry(z) {
                slot.insert(measure_transform(m, z, g)?);
            }
        }
    }
    let mut gram = CMat::zeros(nb * q, nb * q);
    for (col, &x) in freqs.iter().enumerate() {
        for (row, &y) in freqs.iter().enumerate() {
            let block = &diffs[&g.sub(x, y)];
            for i in 0..q {
                for l in 0..q {
                    gram[(row * q + i, col * q + l)] = block[(i, l)];
                }
            }
        }
    }
    // Exactly Hermitian by construction up to rounding; symmetrize the dust.
    let sym = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    Ok(sym)
}
