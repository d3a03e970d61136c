//! Discrete abelian groups, their dual groups, and grid quadrature.
//!
//! Three groups are supported: `Z` (dual: the circle), `Z_n` (self-dual), and
//! `Z^2` (dual: the torus). The dual group carries normalized Haar measure of
//! total mass 1, discretized on a uniform grid; all integrals in the crate are
//! grid means taken in ascending node order, so results are bit-reproducible.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// A frequency: an element of the group `G` indexing a character of the dual.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Frequency {
    /// Element of `Z` or `Z_n`.
    Int(i64),
    /// Element of `Z^2`.
    Pair(i64, i64),
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Int(x) => write!(f, "{x}"),
            Frequency::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Frequency::Int(x) => s.serialize_i64(*x),
            Frequency::Pair(a, b) => [*a, *b].serialize(s),
        }
    }
}

impl From<i64> for Frequency {
    fn from(x: i64) -> Self {
        Frequency::Int(x)
    }
}

impl From<(i64, i64)> for Frequency {
    fn from(p: (i64, i64)) -> Self {
        Frequency::Pair(p.0, p.1)
    }
}

/// The group `G` together with the discretization of its dual.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupSpec {
    /// `G = Z`; dual is the circle, discretized on `grid` uniform angles.
    Integer { grid: usize },
    /// `G = Z_n`; dual is `Z_n` itself (`order` nodes, quadrature exact).
    Cyclic { order: usize },
    /// `G = Z^2`; dual is the torus, discretized on a `grid x grid` mesh.
    Lattice2 { grid: usize },
}

impl GroupSpec {
    /// `Z` with a circle grid of `n` nodes (`n` a power of two, `n >= 4`).
    pub fn integer(n: usize) -> Result<Self> {
        check_grid(n)?;
        Ok(GroupSpec::Integer { grid: n })
    }

    /// `Z_n` (`n >= 2`).
    pub fn cyclic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!(
                "cyclic order must be >= 2, got {n}"
            )));
        }
        Ok(GroupSpec::Cyclic { order: n })
    }

    /// `Z^2` with an `n x n` torus grid (`n` a power of two, `n >= 4`).
    pub fn lattice2(n: usize) -> Result<Self> {
        check_grid(n)?;
        Ok(GroupSpec::Lattice2 { grid: n })
    }

    /// Total number of grid nodes on the dual.
    pub fn grid_len(&self) -> usize {
        match *self {
            GroupSpec::Integer { grid } => grid,
            GroupSpec::Cyclic { order } => order,
            GroupSpec::Lattice2 { grid } => grid * grid,
        }
    }

    /// Largest `|x|` (per component) whose character the grid resolves without
    /// aliasing against any other admitted frequency. `None` for cyclic groups,
    /// where quadrature is exact for every residue.
    pub fn band_limit(&self) -> Option<i64> {
        match *self {
            GroupSpec::Integer { grid } | GroupSpec::Lattice2 { grid } => Some(grid as i64 / 2 - 1),
            GroupSpec::Cyclic { .. } => None,
        }
    }

    /// Whether `x` lies inside the alias-free band (always true when cyclic).
    pub fn in_band(&self, x: Frequency) -> bool {
        match self.band_limit() {
            None => true,
            Some(b) => match x {
                Frequency::Int(v) => v.abs() <= b,
                Frequency::Pair(v, w) => v.abs() <= b && w.abs() <= b,
            },
        }
    }

    /// Errors unless `x` has the right shape for this group.
    pub fn check_member(&self, x: Frequency) -> Result<()> {
        let ok = matches!(
            (self, x),
            (GroupSpec::Integer { .. }, Frequency::Int(_))
                | (GroupSpec::Cyclic { .. }, Frequency::Int(_))
                | (GroupSpec::Lattice2 { .. }, Frequency::Pair(_, _))
        );
        if ok {
            Ok(())
        } else {
            Err(Error::FrequencyMismatch { freq: x })
        }
    }

    /// Canonical representative of `x` (reduces mod `n` on cyclic groups).
    pub fn canonical(&self, x: Frequency) -> Frequency {
        match (*self, x) {
            (GroupSpec::Cyclic { order }, Frequency::Int(v)) => {
                Frequency::Int(v.rem_euclid(order as i64))
            }
            _ => x,
        }
    }

    /// Group sum `x + y`.
    pub fn add(&self, x: Frequency, y: Frequency) -> Frequency {
        let z = match (x, y) {
            (Frequency::Int(a), Frequency::Int(b)) => Frequency::Int(a + b),
            (Frequency::Pair(a, b), Frequency::Pair(c, d)) => Frequency::Pair(a + c, b + d),
            _ => panic!("mixed frequency shapes"),
        };
        self.canonical(z)
    }

    /// Group inverse `-x`.
    pub fn neg(&self, x: Frequency) -> Frequency {
        let z = match x {
            Frequency::Int(a) => Frequency::Int(-a),
            Frequency::Pair(a, b) => Frequency::Pair(-a, -b),
        };
        self.canonical(z)
    }

    /// Difference `x - y`.
    pub fn sub(&self, x: Frequency, y: Frequency) -> Frequency {
        self.add(x, self.neg(y))
    }

    /// Angle coordinates of grid node `j`: one angle in `[0, 2*pi)` for the
    /// circle and cyclic groups, two for the torus (row-major node order).
    pub fn node_angles(&self, j: usize) -> Vec<f64> {
        match *self {
            GroupSpec::Integer { grid } => vec![2.0 * PI * j as f64 / grid as f64],
            GroupSpec::Cyclic { order } => vec![2.0 * PI * j as f64 / order as f64],
            GroupSpec::Lattice2 { grid } => {
                let (a, b) = (j / grid, j % grid);
                vec![
                    2.0 * PI * a as f64 / grid as f64,
                    2.0 * PI * b as f64 / grid as f64,
                ]
            }
        }
    }

    /// Same angles mapped to the reporting range `(-pi, pi]`.
    pub fn node_angles_signed(&self, j: usize) -> Vec<f64> {
        self.node_angles(j)
            .into_iter()
            .map(|t| if t > PI { t - 2.0 * PI } else { t })
            .collect()
    }

    /// Value of the character `<gamma_j, x>` at grid node `j`.
    pub fn character(&self, x: Frequency, j: usize) -> C64 {
        match (*self, x) {
            (GroupSpec::Integer { grid }, Frequency::Int(v)) => {
                C64::from_polar(1.0, 2.0 * PI * (v as f64) * (j as f64) / grid as f64)
            }
            (GroupSpec::Cyclic { order }, Frequency::Int(v)) => {
                let n = order as i64;
                let e = (v.rem_euclid(n) * (j as i64)).rem_euclid(n);
                C64::from_polar(1.0, 2.0 * PI * e as f64 / n as f64)
            }
            (GroupSpec::Lattice2 { grid }, Frequency::Pair(v, w)) => {
                let (a, b) = (j / grid, j % grid);
                C64::from_polar(
                    1.0,
                    2.0 * PI * ((v as f64) * (a as f64) + (w as f64) * (b as f64)) / grid as f64,
                )
            }
            _ => panic!("frequency shape does not match group"),
        }
    }

    /// Samples of the character of `x` on the whole grid, node order.
    pub fn character_samples(&self, x: Frequency) -> Result<Vec<C64>> {
        self.check_member(x)?;
        Ok((0..self.grid_len()).map(|j| self.character(x, j)).collect())
    }

    /// Quadrature of scalar grid samples: the mean over nodes, accumulated in
    /// ascending node order (grid Haar integral of total mass 1).
    pub fn quadrature(&self, samples: &[C64]) -> Result<C64> {
        let n = self.grid_len();
        if samples.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: samples.len(),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for v in samples {
            acc += v;
        }
        Ok(acc / n as f64)
    }

    /// Quadrature of matrix-valued grid samples (entrywise mean, node order).
    pub fn quadrature_matrix(&self, samples: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
        let n = self.grid_len();
        if samples.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: samples.len(),
            });
        }
        let (r, c) = samples[0].shape();
        let mut acc = DMatrix::<C64>::zeros(r, c);
        for m in samples {
            if m.shape() != (r, c) {
                return Err(Error::Invalid("ragged matrix samples".into()));
            }
            acc += m;
        }
        Ok(acc / C64::new(n as f64, 0.0))
    }

    /// The zero frequency of this group.
    pub fn zero(&self) -> Frequency {
        match self {
            GroupSpec::Lattice2 { .. } => Frequency::Pair(0, 0),
            _ => Frequency::Int(0),
        }
    }

    /// A grid with twice the resolution per axis, when refinement makes sense
    /// (`None` for cyclic groups, whose quadrature is already exact).
    pub fn refined(&self) -> Option<GroupSpec> {
        match *self {
            GroupSpec::Integer { grid } => Some(GroupSpec::Integer { grid: 2 * grid }),
            GroupSpec::Lattice2 { grid } => Some(GroupSpec::Lattice2 { grid: 2 * grid }),
            GroupSpec::Cyclic { .. } => None,
        }
    }

    /// A grid with half the resolution per axis, when coarsening is possible.
    pub fn coarsened(&self) -> Option<GroupSpec> {
        match *self {
            GroupSpec::Integer { grid } if grid >= 8 => Some(GroupSpec::Integer { grid: grid / 2 }),
            GroupSpec::Lattice2 { grid } if grid >= 8 => {
                Some(GroupSpec::Lattice2 { grid: grid / 2 })
            }
            _ => None,
        }
    }

    /// Node index on the coarsened grid corresponding to node `j` here, if `j`
    /// survives coarsening (even index per axis).
    pub fn coarse_node(&self, j: usize) -> Option<usize> {
        match *self {
            GroupSpec::Integer { .. } => j.is_multiple_of(2).then_some(j / 2),
            GroupSpec::Lattice2 { grid } => {
                let (a, b) = (j / grid, j % grid);
                (a.is_multiple_of(2) && b.is_multiple_of(2)).then_some(a / 2 * (grid / 2) + b / 2)
            }
            GroupSpec::Cyclic { .. } => None,
        }
    }

    /// Node index on the refined grid landing on the same dual-group point.
    pub fn refined_node(&self, j: usize) -> Option<usize> {
        match *self {
            GroupSpec::Integer { .. } => Some(2 * j),
            GroupSpec::Lattice2 { grid } => {
                let (a, b) = (j / grid, j % grid);
                Some(2 * a * (2 * grid) + 2 * b)
            }
            GroupSpec::Cyclic { .. } => None,
        }
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::Invalid(format!(
            "grid size must be a power of two >= 4, got {n}"
        )));
    }
    Ok(())
}
