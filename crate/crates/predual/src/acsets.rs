//! Frequency sets, absolute-continuity classification, and measure reduction.
//!
//! A `FrequencySet` describes the prediction set `S` (or its complement, the
//! approximation support `G \ S`) symbolically. `classify_ac` decides, by a
//! fixed list of syntactic rules, whether a set is an AC-set: a set such that
//! every finite measure whose transform vanishes on it is absolutely
//! continuous. When `G \ S` is proven AC, the singular part of the spectral
//! measure cannot influence the distance and `reduce_measure` drops it.
//!
//! The rules are applied to a normal form in which translations and
//! negations have been folded inward; anything they do not cover is reported
//! `Unknown` and the reduction conservatively keeps the full measure.

use crate::error::{Error, Result};
use crate::groups::{Frequency, GroupSpec};
use crate::measures::{Part, SpectralMeasure};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

/// Angular tolerance (degrees) for sector-opening comparisons.
const SECTOR_TOL_DEG: f64 = 1e-9;
/// Largest primitive lattice direction searched for half-plane boundaries.
const PRIMITIVE_CAP: i64 = 64;

/// Which side a half-line keeps.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HalfDir {
    /// `{x : x >= bound}`.
    Ge,
    /// `{x : x <= bound}`.
    Le,
}

/// Symbolic set of frequencies.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencySet {
    /// The whole group.
    All,
    /// A finite, duplicate-free list.
    Explicit(Vec<Frequency>),
    /// `{x : x >= bound}` or `{x : x <= bound}` in `Z`.
    HalfLine { dir: HalfDir, bound: i64 },
    /// Closed sector in `Z^2` with vertex at the origin, swept
    /// counterclockwise from `start_deg` to `end_deg`.
    Sector2 { start_deg: f64, end_deg: f64 },
    /// Set complement within the group.
    Complement(Box<FrequencySet>),
    /// `{x + shift : x in inner}`.
    Translate(Box<FrequencySet>, Frequency),
    /// `{-x : x in inner}`.
    Negate(Box<FrequencySet>),
}

impl FrequencySet {
    /// Duplicate-free explicit set.
    pub fn explicit(mut members: Vec<Frequency>) -> FrequencySet {
        members.sort();
        members.dedup();
        FrequencySet::Explicit(members)
    }

    /// Errors unless every primitive in the set fits the group.
    pub fn validate(&self, g: &GroupSpec) -> Result<()> {
        match self {
            FrequencySet::All => Ok(()),
            FrequencySet::Explicit(v) => v.iter().try_for_each(|&x| g.check_member(x)),
            FrequencySet::HalfLine { .. } => match g {
                GroupSpec::Integer { .. } => Ok(()),
                _ => Err(Error::Invalid(
                    "halfline sets require the integer group".into(),
                )),
            },
            FrequencySet::Sector2 { .. } => match g {
                GroupSpec::Lattice2 { .. } => Ok(()),
                _ => Err(Error::Invalid(
                    "sector2 sets require the lattice group".into(),
                )),
            },
            FrequencySet::Complement(s) | FrequencySet::Negate(s) => s.validate(g),
            FrequencySet::Translate(s, t) => {
                g.check_member(*t)?;
                s.validate(g)
            }
        }
    }

    /// Membership of `x` (canonicalized for the group, so residues work).
    pub fn contains(&self, x: Frequency, g: &GroupSpec) -> bool {
        let x = g.canonical(x);
        match self {
            FrequencySet::All => true,
            FrequencySet::Explicit(v) => v.iter().any(|&e| g.canonical(e) == x),
            FrequencySet::HalfLine { dir, bound } => match x {
                Frequency::Int(v) => match dir {
                    HalfDir::Ge => v >= *bound,
                    HalfDir::Le => v <= *bound,
                },
                _ => false,
            },
            FrequencySet::Sector2 { start_deg, end_deg } => match x {
                Frequency::Pair(a, b) => sector_contains(*start_deg, *end_deg, a, b),
                _ => false,
            },
            FrequencySet::Complement(s) => !s.contains(x, g),
            FrequencySet::Translate(s, t) => s.contains(g.sub(x, *t), g),
            FrequencySet::Negate(s) => s.contains(g.neg(x), g),
        }
    }

    /// Members within the symmetric box of radius `f` (all residues for
    /// cyclic groups, where the box plays no role), ascending.
    pub fn window(&self, g: &GroupSpec, f: i64) -> Vec<Frequency> {
        let mut out = Vec::new();
        match g {
            GroupSpec::Integer { .. } => {
                for x in -f..=f {
                    let x = Frequency::Int(x);
                    if self.contains(x, g) {
                        out.push(x);
                    }
                }
            }
            GroupSpec::Cyclic { order } => {
                for x in 0..*order as i64 {
                    let x = Frequency::Int(x);
                    if self.contains(x, g) {
                        out.push(x);
                    }
                }
            }
            GroupSpec::Lattice2 { .. } => {
                for a in -f..=f {
                    for b in -f..=f {
                        let x = Frequency::Pair(a, b);
                        if self.contains(x, g) {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out
    }

    /// Apply the classification rules to this set.
    pub fn classify_ac(&self, g: &GroupSpec) -> AcStatus {
        // Every subset of a compact abelian group is an AC-set.
        if matches!(g, GroupSpec::Cyclic { .. }) {
            return AcStatus::ProvenAc {
                rule: AcRule::CompactGroup,
            };
        }
        match normal_form(self, g) {
            Nf::All | Nf::Cofinite(_) => AcStatus::ProvenAc {
                rule: AcRule::CofiniteSet,
            },
            Nf::HalfGe(_) | Nf::HalfLe(_) => AcStatus::ProvenAc {
                rule: AcRule::RieszHalfLine,
            },
            Nf::Sector {
                span_deg,
                start_deg,
                shift,
                complemented: false,
            } => classify_sector(span_deg, start_deg, shift),
            _ => AcStatus::Unknown,
        }
    }
}

fn sector_contains(start_deg: f64, end_deg: f64, a: i64, b: i64) -> bool {
    if a == 0 && b == 0 {
        return true; // the vertex belongs to every closed sector
    }
    let span = (end_deg - start_deg).rem_euclid(360.0);
    let angle = (b as f64).atan2(a as f64).to_degrees();
    let rel = (angle - start_deg).rem_euclid(360.0);
    rel <= span + SECTOR_TOL_DEG || rel >= 360.0 - SECTOR_TOL_DEG
}

/// Rule that proved a set absolutely continuous.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcRule {
    /// Every subset of a compact abelian group is an AC-set.
    CompactGroup,
    /// The complement is finite, hence compact.
    CofiniteSet,
    /// F. and M. Riesz: half-lines in `Z` (and their translates/negates).
    RieszHalfLine,
    /// Bochner: closed sectors in `Z^2` of opening greater than 180 degrees.
    BochnerSector,
}

impl fmt::Display for AcRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AcRule::CompactGroup => "compact-group",
            AcRule::CofiniteSet => "cofinite-set",
            AcRule::RieszHalfLine => "riesz-half-line",
            AcRule::BochnerSector => "bochner-sector",
        };
        f.write_str(s)
    }
}

/// Outcome of `classify_ac`.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum AcStatus {
    /// The set is an AC-set, by the named rule.
    ProvenAc { rule: AcRule },
    /// The set is not an AC-set; `witness` describes a singular measure whose
    /// transform vanishes on it.
    KnownNotAc { witness: String },
    /// No rule fired; treated conservatively.
    Unknown,
}

impl AcStatus {
    /// True for `ProvenAc`.
    pub fn is_proven(&self) -> bool {
        matches!(self, AcStatus::ProvenAc { .. })
    }
}

/// Normal form after folding translations/negations/complements inward.
enum Nf {
    All,
    Finite(BTreeSet<Frequency>),
    Cofinite(BTreeSet<Frequency>),
    HalfGe(i64),
    HalfLe(i64),
    Sector {
        start_deg: f64,
        span_deg: f64,
        shift: (i64, i64),
        complemented: bool,
    },
    Other,
}

fn normal_form(s: &FrequencySet, g: &GroupSpec) -> Nf {
    match s {
        FrequencySet::All => Nf::All,
        FrequencySet::Explicit(v) => Nf::Finite(v.iter().map(|&x| g.canonical(x)).collect()),
        FrequencySet::HalfLine {
            dir: HalfDir::Ge,
            bound,
        } => Nf::HalfGe(*bound),
        FrequencySet::HalfLine {
            dir: HalfDir::Le,
            bound,
        } => Nf::HalfLe(*bound),
        FrequencySet::Sector2 { start_deg, end_deg } => Nf::Sector {
            start_deg: start_deg.rem_euclid(360.0),
            span_deg: (end_deg - start_deg).rem_euclid(360.0),
            shift: (0, 0),
            complemented: false,
        },
        FrequencySet::Complement(inner) => match normal_form(inner, g) {
            Nf::All => Nf::Finite(BTreeSet::new()),
            Nf::Finite(v) => Nf::Cofinite(v),
            Nf::Cofinite(v) => Nf::Finite(v),
            Nf::HalfGe(b) => Nf::HalfLe(b - 1),
            Nf::HalfLe(b) => Nf::HalfGe(b + 1),
            Nf::Sector {
                start_deg,
                span_deg,
                shift,
                complemented,
            } => Nf::Sector {
                start_deg,
                span_deg,
                shift,
                complemented: !complemented,
            },
            Nf::Other => Nf::Other,
        },
        FrequencySet::Negate(inner) => match normal_form(inner, g) {
            Nf::All => Nf::All,
            Nf::Finite(v) => Nf::Finite(v.iter().map(|&x| g.neg(x)).collect()),
            Nf::Cofinite(v) => Nf::Cofinite(v.iter().map(|&x| g.neg(x)).collect()),
            Nf::HalfGe(b) => Nf::HalfLe(-b),
            Nf::HalfLe(b) => Nf::HalfGe(-b),
            Nf::Sector {
                start_deg,
                span_deg,
                shift,
                complemented,
            } => Nf::Sector {
                start_deg: (start_deg + 180.0).rem_euclid(360.0),
                span_deg,
                shift: (-shift.0, -shift.1),
                complemented,
            },
            Nf::Other => Nf::Other,
        },
        FrequencySet::Translate(inner, t) => {
            let t = g.canonical(*t);
            match normal_form(inner, g) {
                Nf::All => Nf::All,
                Nf::Finite(v) => Nf::Finite(v.iter().map(|&x| g.add(x, t)).collect()),
                Nf::Cofinite(v) => Nf::Cofinite(v.iter().map(|&x| g.add(x, t)).collect()),
                Nf::HalfGe(b) => match t {
                    Frequency::Int(dt) => Nf::HalfGe(b + dt),
                    _ => Nf::Other,
                },
                Nf::HalfLe(b) => match t {
                    Frequency::Int(dt) => Nf::HalfLe(b + dt),
                    _ => Nf::Other,
                },
                Nf::Sector {
                    start_deg,
                    span_deg,
                    shift,
                    complemented,
                } => match t {
                    Frequency::Pair(a, b) => Nf::Sector {
                        start_deg,
                        span_deg,
                        shift: (shift.0 + a, shift.1 + b),
                        complemented,
                    },
                    _ => Nf::Other,
                },
                Nf::Other => Nf::Other,
            }
        }
    }
}

fn classify_sector(span_deg: f64, start_deg: f64, shift: (i64, i64)) -> AcStatus {
    if span_deg > 180.0 + SECTOR_TOL_DEG {
        // Bochner applies to the untranslated sector; translates stay AC.
        return AcStatus::ProvenAc {
            rule: AcRule::BochnerSector,
        };
    }
    if (span_deg - 180.0).abs() <= SECTOR_TOL_DEG {
        // A translated closed half-plane. When its boundary is a lattice
        // line and the translation moved the set strictly off that line,
        // Haar measure on the corresponding subtorus is a singular witness.
        let normal_deg = (start_deg + 90.0).rem_euclid(360.0);
        if let Some((p, q)) = primitive_direction(normal_deg) {
            let offset = shift.0 * p + shift.1 * q;
            if offset >= 1 {
                return AcStatus::KnownNotAc {
                    witness: format!(
                        "Haar measure on the subtorus {{(p*t, q*t)}} with (p,q)=({p},{q}): \
                         its transform vanishes exactly off the line x.(p,q)=0, and every \
                         member of this half-plane has x.(p,q) >= {offset}"
                    ),
                };
            }
        }
    }
    AcStatus::Unknown
}

/// Smallest primitive lattice vector pointing in the given direction, if one
/// exists within the search cap.
fn primitive_direction(angle_deg: f64) -> Option<(i64, i64)> {
    let rad = angle_deg.to_radians();
    let (ux, uy) = (rad.cos(), rad.sin());
    for r in 1..=PRIMITIVE_CAP {
        for p in -r..=r {
            for q in [-r, r] {
                for &(a, b) in &[(p, q), (q, p)] {
                    if gcd(a.unsigned_abs(), b.unsigned_abs()) != 1 {
                        continue;
                    }
                    let norm = ((a * a + b * b) as f64).sqrt();
                    let cross = (a as f64 * uy - b as f64 * ux) / norm;
                    let dot = (a as f64 * ux + b as f64 * uy) / norm;
                    if dot > 0.0 && cross.abs() <= 1e-11 {
                        return Some((a, b));
                    }
                }
            }
        }
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// How `reduce_measure` decides to treat the singular part.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionPolicy {
    /// Drop the singular part exactly when `G \ S` is proven AC.
    #[default]
    Auto,
    /// Drop it unconditionally (user override).
    ForceAc,
    /// Keep it unconditionally.
    ForceFull,
}

/// What the reduction did.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ReductionAction {
    /// The measure had no singular part to begin with.
    AlreadyAc,
    /// The singular part (`atoms` of them) was dropped.
    DroppedSingular { atoms: usize },
    /// The full measure was kept.
    KeptFull,
}

/// Record of a reduction decision.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    /// Policy that was in force.
    pub policy: ReductionPolicy,
    /// Classification of the approximation support `G \ S`.
    pub complement_status: AcStatus,
    /// What happened to the singular part.
    pub action: ReductionAction,
}

/// Drop the singular part of `m` when the approximation support `G \ S` is
/// proven to be an AC-set (or the policy forces it); never alters the
/// absolutely continuous part.
pub fn reduce_measure(
    m: &SpectralMeasure,
    s_set: &FrequencySet,
    g: &GroupSpec,
    policy: ReductionPolicy,
) -> (SpectralMeasure, ReductionReport) {
    let complement = FrequencySet::Complement(Box::new(s_set.clone()));
    let complement_status = complement.classify_ac(g);
    let atoms = m.singular.len();
    let drop = match policy {
        ReductionPolicy::Auto => complement_status.is_proven(),
        ReductionPolicy::ForceAc => true,
        ReductionPolicy::ForceFull => false,
    };
    let (reduced, action) = if m.singular.is_empty() {
        (m.clone(), ReductionAction::AlreadyAc)
    } else if drop {
        (
            m.restrict(Part::AcOnly),
            ReductionAction::DroppedSingular { atoms },
        )
    } else {
        (m.clone(), ReductionAction::KeptFull)
    };
    (
        reduced,
        ReductionReport {
            policy,
            complement_status,
            action,
        },
    )
}

impl fmt::Display for FrequencySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencySet::All => write!(f, "all"),
            FrequencySet::Explicit(v) => {
                write!(f, "explicit(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            FrequencySet::HalfLine { dir, bound } => {
                let d = match dir {
                    HalfDir::Ge => "ge",
                    HalfDir::Le => "le",
                };
                write!(f, "halfline({d},{bound})")
            }
            FrequencySet::Sector2 { start_deg, end_deg } => {
                write!(f, "sector2({start_deg}deg,{end_deg}deg)")
            }
            FrequencySet::Complement(s) => write!(f, "complement({s})"),
            FrequencySet::Translate(s, t) => write!(f, "translate({s},{t})"),
            FrequencySet::Negate(s) => write!(f, "negate({s})"),
        }
    }
}

impl Serialize for FrequencySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parse the textual set syntax: `all`, `explicit(0,5,-3)`,
/// `explicit((0,1),(2,-3))`, `halfline(ge,1)`, `sector2(30deg,240deg)`,
/// `complement(...)`, `translate(<set>,<freq>)`, `negate(...)`.
pub fn parse_set(text: &str) -> Result<FrequencySet> {
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    let set = p.set()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(Error::Parse(format!(
            "trailing input at byte {} in frequency-set expression",
            p.pos
        )));
    }
    Ok(set)
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected '{}' at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("expected identifier at byte {start}")));
        }
        Ok(String::from_utf8_lossy(&self.text[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') || self.peek() == Some(b'+') {
            self.pos += 1;
        }
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_digit() || self.text[self.pos] == b'.')
        {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number '{s}' at byte {start}")))
    }

    fn integer(&mut self) -> Result<i64> {
        let v = self.number()?;
        if v.fract() != 0.0 {
            return Err(Error::Parse(format!("expected integer, got {v}")));
        }
        Ok(v as i64)
    }

    fn angle(&mut self) -> Result<f64> {
        let v = self.number()?;
        self.skip_ws();
        if self.text[self.pos..].starts_with(b"deg") {
            self.pos += 3;
        }
        Ok(v)
    }

    fn frequency(&mut self) -> Result<Frequency> {
        if self.peek() == Some(b'(') {
            self.expect(b'(')?;
            let a = self.integer()?;
            self.expect(b',')?;
            let b = self.integer()?;
            self.expect(b')')?;
            Ok(Frequency::Pair(a, b))
        } else {
            Ok(Frequency::Int(self.integer()?))
        }
    }

    fn set(&mut self) -> Result<FrequencySet> {
        let name = self.ident()?;
        match name.as_str() {
            "all" => Ok(FrequencySet::All),
            "explicit" => {
                self.expect(b'(')?;
                let mut members = Vec::new();
                if self.peek() != Some(b')') {
                    loop {
                        members.push(self.frequency()?);
                        if self.peek() == Some(b',') {
                            self.expect(b',')?;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(b')')?;
                Ok(FrequencySet::explicit(members))
            }
            "halfline" => {
                self.expect(b'(')?;
                let dir = match self.ident()?.as_str() {
                    "ge" => HalfDir::Ge,
                    "le" => HalfDir::Le,
                    other => {
                        return Err(Error::Parse(format!(
                            "halfline direction must be ge or le, got '{other}'"
                        )))
                    }
                };
                self.expect(b',')?;
                let bound = self.integer()?;
                self.expect(b')')?;
                Ok(FrequencySet::HalfLine { dir, bound })
            }
            "sector2" => {
                self.expect(b'(')?;
                let start = self.angle()?;
                self.expect(b',')?;
                let end = self.angle()?;
                self.expect(b')')?;
                Ok(FrequencySet::Sector2 {
                    start_deg: start,
                    end_deg: end,
                })
            }
            "complement" => {
                self.expect(b'(')?;
                let inner = self.set()?;
                self.expect(b')')?;
                Ok(FrequencySet::Complement(Box::new(inner)))
            }
            "negate" => {
                self.expect(b'(')?;
                let inner = self.set()?;
                self.expect(b')')?;
                Ok(FrequencySet::Negate(Box::new(inner)))
            }
            "translate" => {
                self.expect(b'(')?;
                let inner = self.set()?;
                self.expect(b',')?;
                let t = self.frequency()?;
                self.expect(b')')?;
                Ok(FrequencySet::Translate(Box::new(inner), t))
            }
            other => Err(Error::Parse(format!("unknown set constructor '{other}'"))),
        }
    }
}
