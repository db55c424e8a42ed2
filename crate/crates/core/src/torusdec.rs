//! Torus decompositions: verification of visible, invisible and quasi
//! decompositions, construction from normal-form data, a constraint solver
//! for visible quartic decompositions, transport under projective maps, and
//! the quasi decomposition recurrence.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::BigRational;
use thiserror::Error;

use crate::fieldtower::{Coeff, ExtensionStep, FieldTower, TowerError};
use crate::localsing::{
    affine_common_zeros, infinity_multiplicities, lemma_oracle_invisible23,
    line_intersection_multiplicity, local_equation, multiplicity, LocalError, LocalIncidence, LocalType, ProjPoint,
    SingLabel, Signature,
};
use crate::polyring::{coprime, MultiPoly, PolyError, PolyRing, ProjectiveTransform};
use crate::report::Report;
use crate::upoly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorusError {
    #[error("inexact division: {0}")]
    InexactDivision(String),
    #[error("c = b00 - a00^2 vanishes; the (2,4) construction degenerates")]
    ZeroC,
    #[error("residual system is not of radical shape: {0}")]
    NonMonomialResidual(String),
    #[error("the transform does not preserve the curve")]
    CurveNotPreserved,
    #[error("the transform does not fix the line Z = 0")]
    LineNotPreserved,
    #[error("base identity f = h0^2 - g0^3 fails")]
    BaseIdentityFails,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl From<TowerError> for TorusError {
    fn from(e: TowerError) -> Self {
        TorusError::Poly(PolyError::Tower(e))
    }
}

fn inexact(e: PolyError) -> TorusError {
    match e {
        PolyError::InexactDivision { dividend, divisor } => {
            TorusError::InexactDivision(format!("`{dividend}` by `{divisor}`"))
        }
        e => TorusError::Poly(e),
    }
}

// ---------------------------------------------------------------------------
// Small helpers.

/// Same polynomial over a larger tower (same variables).
pub fn lift_to(p: &MultiPoly, tower: &Arc<FieldTower>) -> MultiPoly {
    if Arc::ptr_eq(p.tower(), tower) {
        return p.clone();
    }
    p.lift(&p.ring().with_tower(tower.clone()))
}

/// The larger of two prefix-compatible towers.
pub fn join_towers(a: &Arc<FieldTower>, b: &Arc<FieldTower>) -> Result<Arc<FieldTower>, TorusError> {
    if a.is_prefix_of(b) {
        Ok(b.clone())
    } else if b.is_prefix_of(a) {
        Ok(a.clone())
    } else {
        Err(TorusError::Poly(PolyError::RingMismatch))
    }
}

fn zvar(p: &MultiPoly) -> Result<MultiPoly, TorusError> {
    Ok(MultiPoly::var_named(p.ring(), "Z")?)
}

/// `u` with `a = u * b` for a constant `u`, if one exists.
pub fn proportionality(a: &MultiPoly, b: &MultiPoly) -> Option<Coeff> {
    if b.is_zero() {
        return a.is_zero().then(Coeff::zero);
    }
    let k = b.tower();
    for (m, cb) in b.terms() {
        let ca = a.coeff(m);
        let u = match k.inv(cb) {
            Ok(inv) => k.mul(&ca, &inv),
            Err(_) => match k.exact_div(&ca, cb) {
                Ok(u) => u,
                Err(_) => continue,
            },
        };
        return (b.scale(&u) == *a).then_some(u);
    }
    None
}

fn z_divides(p: &MultiPoly) -> Result<bool, TorusError> {
    Ok(zvar(p)?.divides(p))
}

// ---------------------------------------------------------------------------
// Quasi torus decompositions.

/// `f_r^(ab) f = f_p^a + f_q^b` with declared degrees.
#[derive(Clone, Debug)]
pub struct QuasiTorusDecomposition {
    pub f: MultiPoly,
    pub f_r: MultiPoly,
    pub f_p: MultiPoly,
    pub f_q: MultiPoly,
    pub a: u32,
    pub b: u32,
    pub r: u32,
    pub p: u32,
    pub q: u32,
    /// Drops the coprimality and gcd(a, b) = 1 requirements.
    pub relaxed: bool,
}

pub fn verify_quasi(d: &QuasiTorusDecomposition) -> Report {
    let mut rep = Report::new();
    let lhs = d.f_r.pow(d.a * d.b).mul(&d.f);
    let rhs = d.f_p.pow(d.a).add(&d.f_q.pow(d.b));
    let diff = lhs.sub(&rhs);
    rep.push(
        "identity",
        diff.is_zero(),
        if diff.is_zero() { String::new() } else { format!("{} terms differ", diff.num_terms()) },
    );
    for (name, poly, deg, positive) in [("f_r", &d.f_r, d.r, false), ("f_p", &d.f_p, d.p, true), ("f_q", &d.f_q, d.q, true)] {
        let ok = !poly.is_zero() && poly.degree() == deg && (!positive || deg > 0);
        rep.push(format!("degree {name}"), ok, format!("expected {deg}, found {}", poly.degree()));
    }
    if d.relaxed {
        rep.waive("coprimality", "relaxed mode");
        return rep;
    }
    rep.push("gcd(a, b) = 1", d.a.gcd(&d.b) == 1, format!("a = {}, b = {}", d.a, d.b));
    let named = [("f", &d.f), ("f_r", &d.f_r), ("f_p", &d.f_p), ("f_q", &d.f_q)];
    for i in 0..named.len() {
        for j in i + 1..named.len() {
            let ok = coprime(named[i].1, named[j].1).unwrap_or(false);
            rep.push(format!("coprime {} {}", named[i].0, named[j].0), ok, "");
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// Visible factorizations.

/// `F_p = F'_{p-r} Z^r`, `F_q = F'_{q-s} Z^s` with `sp >= rq`.
#[derive(Clone, Debug)]
pub struct VisibleFactorization {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub s: u32,
    pub fp: MultiPoly,
    pub fq: MultiPoly,
}

#[derive(Clone, Debug)]
pub struct ExpandedVisible {
    pub j: u32,
    pub g: MultiPoly,
    /// `G` is constant or still divisible by `Z`.
    pub degenerate: bool,
}

pub fn expand_visible(v: &VisibleFactorization) -> Result<ExpandedVisible, TorusError> {
    if v.s * v.p < v.r * v.q {
        return Err(TorusError::InvalidData("need s*p >= r*q".into()));
    }
    let z = zvar(&v.fp)?;
    let big_p = v.fp.mul(&z.pow(v.r));
    let big_q = v.fq.mul(&z.pow(v.s));
    let total = big_p.pow(v.q).add(&big_q.pow(v.p));
    let j = v.r * v.q;
    let g = total.exact_div(&z.pow(j)).map_err(inexact)?;
    let degenerate = g.is_constant() || z_divides(&g)?;
    Ok(ExpandedVisible { j, g, degenerate })
}

// ---------------------------------------------------------------------------
// Decomposition records.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionKind {
    /// `F2'^2 + F1'^3 Z = unit * F`.
    Visible,
    /// `F2^3 - F3^2 = unit * Z^2 F`.
    Invisible23,
    /// `F2^4 - F4^2 = unit * Z^4 F`.
    Invisible24,
}

impl DecompositionKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DecompositionKind::Visible => "visible23",
            DecompositionKind::Invisible23 => "invisible23",
            DecompositionKind::Invisible24 => "invisible24",
        }
    }

    fn z_power(&self) -> u32 {
        match self {
            DecompositionKind::Visible => 0,
            DecompositionKind::Invisible23 => 2,
            DecompositionKind::Invisible24 => 4,
        }
    }

    /// Expected degrees of the two components.
    fn degrees(&self) -> (u32, u32) {
        match self {
            DecompositionKind::Visible => (2, 1),
            DecompositionKind::Invisible23 => (2, 3),
            DecompositionKind::Invisible24 => (2, 4),
        }
    }
}

/// A decomposition of the quartic `curve` with components `a`, `b` and an
/// explicit constant `unit` (see [`DecompositionKind`] for the identities).
#[derive(Clone, Debug)]
pub struct DecompositionRecord {
    pub kind: DecompositionKind,
    pub curve: MultiPoly,
    pub unit: Coeff,
    pub a: MultiPoly,
    pub b: MultiPoly,
}

impl DecompositionRecord {
    pub fn new(kind: DecompositionKind, curve: MultiPoly, unit: Coeff, a: MultiPoly, b: MultiPoly) -> Result<Self, TorusError> {
        let t = join_towers(&join_towers(curve.tower(), a.tower())?, b.tower())?;
        Ok(DecompositionRecord { kind, curve: lift_to(&curve, &t), unit: t.reduce(unit), a: lift_to(&a, &t), b: lift_to(&b, &t) })
    }

    /// Record whose unit is whatever constant makes the identity hold, if any.
    pub fn with_found_unit(kind: DecompositionKind, curve: MultiPoly, a: MultiPoly, b: MultiPoly) -> Result<Self, TorusError> {
        let mut rec = Self::new(kind, curve, Coeff::one(), a, b)?;
        let target = rec.target_without_unit()?;
        match proportionality(&rec.lhs()?, &target) {
            Some(u) if !u.is_zero() => {
                rec.unit = u;
                Ok(rec)
            }
            _ => Err(TorusError::InvalidData("components do not decompose the curve up to a constant".into())),
        }
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        self.curve.tower()
    }

    pub fn lhs(&self) -> Result<MultiPoly, TorusError> {
        let z = zvar(&self.a)?;
        Ok(match self.kind {
            DecompositionKind::Visible => self.a.pow(2).add(&self.b.pow(3).mul(&z)),
            DecompositionKind::Invisible23 => self.a.pow(3).sub(&self.b.pow(2)),
            DecompositionKind::Invisible24 => self.a.pow(4).sub(&self.b.pow(2)),
        })
    }

    fn target_without_unit(&self) -> Result<MultiPoly, TorusError> {
        let z = zvar(&self.curve)?;
        Ok(z.pow(self.kind.z_power()).mul(&self.curve))
    }

    pub fn rhs(&self) -> Result<MultiPoly, TorusError> {
        Ok(self.target_without_unit()?.scale(&self.unit))
    }

    pub fn verify(&self) -> Report {
        let mut rep = Report::new();
        let k = self.tower();
        match (self.lhs(), self.rhs()) {
            (Ok(l), Ok(r)) => {
                let d = l.sub(&r);
                let detail = if d.is_zero() {
                    format!("unit {}", k.format(&self.unit))
                } else {
                    format!("unit {}; difference has {} terms", k.format(&self.unit), d.num_terms())
                };
                rep.push("identity", d.is_zero(), detail);
            }
            (Err(e), _) | (_, Err(e)) => rep.push("identity", false, e.to_string()),
        }
        rep.push("unit nonzero", !self.unit.is_zero(), "");
        let (da, db) = self.kind.degrees();
        rep.push("degree curve", self.curve.degree() == 4 && self.curve.is_homogeneous(), format!("{}", self.curve.degree()));
        rep.push("degree components", self.a.degree() == da && self.b.degree() == db && self.a.is_homogeneous() && self.b.is_homogeneous(), format!("{}, {}", self.a.degree(), self.b.degree()));
        rep.push("Z does not divide curve", !z_divides(&self.curve).unwrap_or(true), "");
        rep.push("coprime components", coprime(&self.a, &self.b).unwrap_or(false), "");
        rep
    }

    /// Components normalized to graded-lex leading coefficient 1; equal for
    /// decompositions that differ only by rescaling the components.
    pub fn canonical(&self) -> (MultiPoly, MultiPoly) {
        (self.a.normalized(), self.b.normalized())
    }

    pub fn lift(&self, tower: &Arc<FieldTower>) -> Self {
        DecompositionRecord {
            kind: self.kind,
            curve: lift_to(&self.curve, tower),
            unit: self.unit.clone(),
            a: lift_to(&self.a, tower),
            b: lift_to(&self.b, tower),
        }
    }

    /// Same decomposition up to rescaling of components, after lifting both
    /// to the larger tower.
    pub fn same_up_to_scaling(&self, other: &Self) -> bool {
        let Ok(t) = join_towers(self.tower(), other.tower()) else { return false };
        let (a1, b1) = self.lift(&t).canonical();
        let (a2, b2) = other.lift(&t).canonical();
        self.kind == other.kind && a1 == a2 && b1 == b2
    }

    /// Incidence data of a visible record at `p`: `I(C2, L; P)`, `I(C2, L_inf; P)`
    /// and smoothness of `C2 = {F2' = 0}` there.
    pub fn visible_incidence(&self, p: &ProjPoint) -> Result<LocalIncidence, TorusError> {
        if self.kind != DecompositionKind::Visible {
            return Err(TorusError::InvalidData("incidence data only for visible records".into()));
        }
        let z = zvar(&self.curve)?;
        let m = multiplicity(&self.a, p)?;
        if m == 0 {
            return Ok(LocalIncidence { iota1: 0, iota2: 0, c2_smooth: true });
        }
        let iota1 = line_intersection_multiplicity(&self.a, &self.b, p)?;
        let iota2 = line_intersection_multiplicity(&self.a, &z, p)?;
        Ok(LocalIncidence { iota1, iota2, c2_smooth: m == 1 })
    }
}

impl fmt::Display for DecompositionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (na, nb) = match self.kind {
            DecompositionKind::Visible => ("F2'", "F1'"),
            DecompositionKind::Invisible23 => ("F2", "F3"),
            DecompositionKind::Invisible24 => ("F2", "F4"),
        };
        writeln!(f, "kind: {}", self.kind.tag())?;
        writeln!(f, "curve: {}", self.curve)?;
        writeln!(f, "unit: {}", self.tower().format(&self.unit))?;
        writeln!(f, "{na}: {}", self.a)?;
        write!(f, "{nb}: {}", self.b)
    }
}

/// `Q = F2p^2 + F1p^3 Z` up to a constant, with the constant reported.
pub fn verify_visible_quartic(q: &MultiPoly, f2p: &MultiPoly, f1p: &MultiPoly) -> Report {
    match DecompositionRecord::with_found_unit(DecompositionKind::Visible, q.clone(), f2p.clone(), f1p.clone()) {
        Ok(rec) => rec.verify(),
        Err(_) => {
            let rec = DecompositionRecord::new(DecompositionKind::Visible, q.clone(), Coeff::one(), f2p.clone(), f1p.clone());
            let mut rep = match rec {
                Ok(r) => r.verify(),
                Err(e) => {
                    let mut r = Report::new();
                    r.push("identity", false, e.to_string());
                    r
                }
            };
            if let Some(c) = rep.checks.iter_mut().find(|c| c.name == "identity") {
                c.status = crate::report::Status::Fail;
                c.detail = "no constant u with F2'^2 + F1'^3 Z = u Q".into();
            }
            rep
        }
    }
}

/// Image of a record under `M`. The curve must be fixed up to a constant and
/// `Z` must be sent to a constant multiple of itself.
pub fn transform_decomposition(rec: &DecompositionRecord, m: &ProjectiveTransform) -> Result<DecompositionRecord, TorusError> {
    let t = join_towers(rec.tower(), m.tower())?;
    let rec = rec.lift(&t);
    let z = zvar(&rec.curve)?;
    let zeta = proportionality(&m.apply(&z)?, &z).filter(|c| !c.is_zero()).ok_or(TorusError::LineNotPreserved)?;
    // Rescale M so that Z is fixed exactly.
    let inv = t.inv(&zeta)?;
    let mm = m.matrix().clone().map(|row| row.map(|c| t.mul(&c, &inv)));
    let m = ProjectiveTransform::new(t.clone(), mm)?;
    let image = m.apply(&rec.curve)?;
    let kappa = proportionality(&image, &rec.curve).filter(|c| !c.is_zero()).ok_or(TorusError::CurveNotPreserved)?;
    let out = DecompositionRecord {
        kind: rec.kind,
        curve: rec.curve.clone(),
        unit: t.mul(&rec.unit, &kappa),
        a: m.apply(&rec.a)?,
        b: m.apply(&rec.b)?,
    };
    Ok(out)
}

// ---------------------------------------------------------------------------
// Invisible (2,3) data in normal form.

#[derive(Clone, Debug)]
pub struct InvisibleData23 {
    /// Linear forms in `X, Y` (as elements of the `X, Y, Z` ring).
    pub l1: MultiPoly,
    pub l2: MultiPoly,
    pub l3: MultiPoly,
    pub a00: Coeff,
    pub b00: Coeff,
    /// `+1` or `-1`; absorbed as `l1 -> eps * l1` in the cubic.
    pub eps: i8,
}

#[derive(Clone, Debug)]
pub struct Invisible23 {
    pub f2: MultiPoly,
    pub f3: MultiPoly,
    pub g: MultiPoly,
    pub c1: Coeff,
    pub c2: Coeff,
    /// Configurations allowed by the local analysis for this data.
    pub admissible: Vec<Signature>,
}

fn xy_form_value_at_01(l: &MultiPoly) -> Result<Coeff, TorusError> {
    let ring = l.ring();
    let mut pt = vec![Coeff::zero(); ring.nvars()];
    pt[ring.var_index("Y").ok_or(PolyError::UnknownVariable("Y".into()))?] = Coeff::one();
    Ok(l.eval(&pt))
}

pub fn build_invisible_23(d: &InvisibleData23) -> Result<Invisible23, TorusError> {
    if d.l1.is_zero() {
        return Err(TorusError::InvalidData("l1 must be nonzero".into()));
    }
    if d.eps != 1 && d.eps != -1 {
        return Err(TorusError::InvalidData("eps must be +1 or -1".into()));
    }
    let z = zvar(&d.l1)?;
    for l in [&d.l1, &d.l2, &d.l3] {
        if l.involves(z.ring().var_index("Z").unwrap()) || (!l.is_zero() && (l.degree() != 1 || !l.is_homogeneous())) {
            return Err(TorusError::InvalidData(format!("`{l}` is not a linear form in X, Y")));
        }
    }
    let l1 = d.l1.scale_int(d.eps as i64);
    let f2 = d.l1.pow(2).add(&d.l2.mul(&z)).add(&z.pow(2).scale(&d.a00));
    let three_halves = BigRational::new(3.into(), 2.into());
    let f3 = l1
        .pow(3)
        .add(&l1.mul(&d.l2).mul(&z).scale_rational(&three_halves))
        .add(&d.l3.mul(&z.pow(2)))
        .add(&z.pow(3).scale(&d.b00));
    let g = f2.pow(3).sub(&f3.pow(2)).exact_div(&z.pow(2)).map_err(inexact)?;
    let c1 = xy_form_value_at_01(&d.l2)?;
    let c2 = xy_form_value_at_01(&d.l3)?;
    let bitangent = matches!(infinity_multiplicities(&g), Ok(m) if m == [2, 2]);
    let admissible = lemma_oracle_invisible23(!c1.is_zero(), bitangent);
    Ok(Invisible23 { f2, f3, g, c1, c2, admissible })
}

// ---------------------------------------------------------------------------
// Invisible (2,4) data.

#[derive(Clone, Debug)]
pub struct InvisibleData24 {
    /// Quadratic form in `X, Y`.
    pub f2_2: MultiPoly,
    /// Linear form in `X, Y`.
    pub f2_1: MultiPoly,
    pub a00: Coeff,
    pub b00: Coeff,
}

#[derive(Clone, Debug)]
pub struct Invisible24 {
    pub f2: MultiPoly,
    pub f4: MultiPoly,
    pub g: MultiPoly,
    pub c: Coeff,
    pub c_prime: Coeff,
    /// `F2^4 - F4^2 = unit * Z^4 G`, with `unit = 2c`.
    pub unit: Coeff,
    pub report: Report,
}

impl Invisible24 {
    pub fn record(&self) -> Result<DecompositionRecord, TorusError> {
        DecompositionRecord::new(DecompositionKind::Invisible24, self.g.clone(), self.unit.clone(), self.f2.clone(), self.f4.clone())
    }
}

pub fn build_invisible_24(d: &InvisibleData24) -> Result<Invisible24, TorusError> {
    let k = d.f2_2.tower().clone();
    let c = k.reduce(d.b00.sub(&k.mul(&d.a00, &d.a00)));
    if c.is_zero() {
        return Err(TorusError::ZeroC);
    }
    let z = zvar(&d.f2_2)?;
    let f2 = d.f2_2.add(&d.f2_1.mul(&z)).add(&z.pow(2).scale(&d.a00));
    let z4 = z.pow(4);
    let f4 = f2.pow(2).sub(&z4.scale(&c));
    let half = BigRational::new(1.into(), 2.into());
    let c_prime = c.scale(&half);
    let g = f2.pow(2).sub(&z4.scale(&c_prime));
    let unit = c.scale(&BigRational::from_integer(2.into()));
    let mut report = Report::new();
    let lhs = f2.pow(4).sub(&f4.pow(2));
    let ok = lhs == z4.mul(&g).scale(&unit);
    report.push("identity", ok, format!("F2^4 - F4^2 = {} * Z^4 G", k.format(&unit)));
    let factored = f2.pow(2).sub(&f4).mul(&f2.pow(2).add(&f4));
    report.push("difference of squares", factored == lhs, "");
    report.push("Z does not divide G", !z_divides(&g)?, "");
    Ok(Invisible24 { f2, f4, g, c, c_prime, unit, report })
}

// ---------------------------------------------------------------------------
// Linear algebra over a tower.

/// Row-reduce `rows` (each of length `ncols`) and return a basis of the null space.
fn nullspace(k: &FieldTower, mut rows: Vec<Vec<Coeff>>, ncols: usize) -> Result<Vec<Vec<Coeff>>, TorusError> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][col].is_zero() && k.inv(&rows[i][col]).is_ok()) else {
            if (r..rows.len()).any(|i| !rows[i][col].is_zero()) {
                return Err(TorusError::NonMonomialResidual("non-invertible pivot in constraint system".into()));
            }
            continue;
        };
        rows.swap(r, pr);
        let inv = k.inv(&rows[r][col])?;
        rows[r] = rows[r].iter().map(|c| k.mul(c, &inv)).collect();
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                let pivot_row = rows[r].clone();
                for (j, pc) in pivot_row.iter().enumerate() {
                    let v = rows[i][j].sub(&k.mul(&f, pc));
                    rows[i][j] = k.reduce(v);
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &fcol in &free {
        let mut v = vec![Coeff::zero(); ncols];
        v[fcol] = Coeff::one();
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = rows[i][fcol].neg();
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Solve `A x = b` (A given by columns) when a unique solution exists.
fn solve_unique(k: &FieldTower, cols: &[Vec<Coeff>], rhs: &[Coeff]) -> Result<Option<Vec<Coeff>>, TorusError> {
    let n = cols.len();
    let mut rows: Vec<Vec<Coeff>> = (0..rhs.len())
        .map(|i| {
            let mut row: Vec<Coeff> = cols.iter().map(|c| c[i].clone()).collect();
            row.push(rhs[i].clone());
            row
        })
        .collect();
    let mut r = 0;
    for col in 0..n {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][col].is_zero() && k.inv(&rows[i][col]).is_ok()) else {
            return Ok(None);
        };
        rows.swap(r, pr);
        let inv = k.inv(&rows[r][col])?;
        rows[r] = rows[r].iter().map(|c| k.mul(c, &inv)).collect();
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                let pivot_row = rows[r].clone();
                for (j, pc) in pivot_row.iter().enumerate() {
                    let v = rows[i][j].sub(&k.mul(&f, pc));
                    rows[i][j] = k.reduce(v);
                }
            }
        }
        r += 1;
    }
    if rows[n..].iter().any(|row| !row[n].is_zero()) {
        return Ok(None);
    }
    Ok(Some(rows[..n].iter().map(|row| row[n].clone()).collect()))
}

// ---------------------------------------------------------------------------
// Visible decomposition solver.

/// Extra linear conditions for the solver.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// The conic `C2` passes through the point.
    ConicThrough(ProjPoint),
    /// `C2` is tangent at the point to the double tangent line of `Q` there.
    ConicTangent(ProjPoint),
    /// The line `L` passes through the point.
    LineThrough(ProjPoint),
}

/// A one-parameter-per-component family `F2' = s2 * conic`, `F1' = s1 * line`
/// with `s2^2 = lambda`, `s1^3 = mu`; conic and line have leading coefficient 1.
#[derive(Clone, Debug)]
pub struct VisibleSolution {
    pub curve: MultiPoly,
    pub conic: MultiPoly,
    pub line: MultiPoly,
    pub lambda: Coeff,
    pub mu: Coeff,
}

impl VisibleSolution {
    pub fn tower(&self) -> &Arc<FieldTower> {
        self.conic.tower()
    }

    /// Record with `unit` chosen so no radicals are needed: `lambda` and `mu`
    /// are absorbed by scaling the curve only when they agree; otherwise the
    /// radicals `s2`, `s1` are adjoined.
    pub fn realize(&self) -> Result<DecompositionRecord, TorusError> {
        let k = self.tower().clone();
        let (k, s2) = kth_root(&k, &self.lambda, 2, "s2")?;
        let (k, s1) = kth_root(&k, &self.mu, 3, "s1")?;
        let a = lift_to(&self.conic, &k).scale(&s2);
        let b = lift_to(&self.line, &k).scale(&s1);
        DecompositionRecord::new(DecompositionKind::Visible, lift_to(&self.curve, &k), Coeff::one(), a, b)
    }

    pub fn describe(&self) -> String {
        let k = self.tower();
        format!(
            "F2' = s2*({}), F1' = s1*({}), s2^2 = {}, s1^3 = {}",
            self.conic,
            self.line,
            k.format(&self.lambda),
            k.format(&self.mu)
        )
    }
}

/// A `k`-th root of `c`, from the tower when visible there, else a new generator.
fn kth_root(k: &Arc<FieldTower>, c: &Coeff, deg: usize, name: &str) -> Result<(Arc<FieldTower>, Coeff), TorusError> {
    let mut poly = vec![c.neg()];
    poly.resize(deg, Coeff::zero());
    poly.push(Coeff::one());
    // Root search needs inverses, which parameter-dependent constants lack.
    if let Ok(found) = upoly::roots(k, &poly, false) {
        if let Some(r) = found.roots.first() {
            return Ok((k.clone(), r.clone()));
        }
    }
    if deg == 2 {
        if let Some(q) = c.as_rational() {
            if let Some((t, r)) = upoly::sqrt_in_tower(k, &q, true)? {
                return Ok((t, r));
            }
        }
    }
    let mut n = name.to_string();
    let mut i = 1;
    while k.index_of(&n).is_some() {
        n = format!("{name}_{i}");
        i += 1;
    }
    let ext = k.extend(ExtensionStep::algebraic(&n, poly))?;
    let g = Coeff::generator(ext.len() - 1);
    Ok((ext, g))
}

fn form_basis(ring: &Arc<PolyRing>, deg: u32) -> Vec<MultiPoly> {
    let idx: Vec<usize> = ["X", "Y", "Z"].iter().map(|n| ring.var_index(n).unwrap()).collect();
    let mut out = Vec::new();
    for a in (0..=deg).rev() {
        for b in (0..=deg - a).rev() {
            let c = deg - a - b;
            let mut e = smallvec::smallvec![0u16; ring.nvars()];
            e[idx[0]] = a as u16;
            e[idx[1]] = b as u16;
            e[idx[2]] = c as u16;
            out.push(MultiPoly::monomial(ring, e, Coeff::one()));
        }
    }
    out
}

fn eval_xyz(p: &MultiPoly, pt: &[Coeff; 3]) -> Coeff {
    let ring = p.ring();
    let mut v = vec![Coeff::zero(); ring.nvars()];
    for (k, n) in ["X", "Y", "Z"].iter().enumerate() {
        v[ring.var_index(n).unwrap()] = pt[k].clone();
    }
    p.eval(&v)
}

/// A second point `W` on the tangent line of `Q` at `P` when the tangent cone
/// there is a double line.
fn double_tangent_direction(q: &MultiPoly, p: &ProjPoint) -> Result<Option<[Coeff; 3]>, TorusError> {
    let g = local_equation(q, p)?;
    if g.order() != 2 {
        return Ok(None);
    }
    let k = g.tower().clone();
    let h = g.homogeneous_part(2);
    let c = |a: u16, b: u16| h.coeff(&smallvec::smallvec![a, b]);
    let (alpha, beta, gamma) = (c(2, 0), c(1, 1), c(0, 2));
    let disc = k.mul(&beta, &beta).sub(&k.mul(&alpha, &gamma).scale(&BigRational::from_integer(4.into())));
    if !k.reduce(disc).is_zero() {
        return Ok(None);
    }
    // Direction (du, dv) annihilating the cone.
    let (du, dv) = if alpha.is_zero() {
        (Coeff::one(), Coeff::zero())
    } else {
        (beta.neg(), alpha.scale(&BigRational::from_integer(2.into())))
    };
    let chart = p.chart();
    let others: Vec<usize> = (0..3).filter(|&i| i != chart).collect();
    let mut w = p.coords().clone();
    w[others[0]] = w[others[0]].add(&du);
    w[others[1]] = w[others[1]].add(&dv);
    Ok(Some(w))
}

/// `H(X, Y)` with `F(X, Y, 0) = c * H^2`, as coefficients of `X^2, XY, Y^2`;
/// `None` when the restriction is not a square.
fn infinity_square_root(q: &MultiPoly) -> Result<Option<[Coeff; 3]>, TorusError> {
    let k = q.tower().clone();
    let ring = q.ring();
    let (xi, yi, zi) = (ring.var_index("X").unwrap(), ring.var_index("Y").unwrap(), ring.var_index("Z").unwrap());
    let top = q.eval_var(zi, &Coeff::zero()).eval_var(yi, &Coeff::one());
    let f = top.to_univariate(xi).unwrap_or_default();
    let Some(d) = upoly::degree(&f) else { return Ok(None) };
    if (4 - d) % 2 == 1 {
        return Ok(None);
    }
    let mut h: Vec<Coeff> = vec![Coeff::one()];
    for (factor, mult) in upoly::squarefree_decomposition(&k, &f)? {
        if mult % 2 == 1 {
            return Ok(None);
        }
        for _ in 0..mult / 2 {
            h = upoly::mul(&k, &h, &factor);
        }
    }
    // Missing X-degree is a power of Y, already implicit in homogenizing to degree 2.
    let c = |i: usize| h.get(i).cloned().unwrap_or_else(Coeff::zero);
    Ok(Some([c(2), c(1), c(0)]))
}

/// Visible decompositions `Q = F2'^2 + F1'^3 Z` whose inner points include
/// `inner`, subject to the extra constraints. Inner points put `P` on both
/// `L` and `C2`, and make `C2` tangent to the double tangent line of `Q`
/// when the tangent cone there is one. The restriction of `C2` to `Z = 0` is
/// always forced to be proportional to the square root of `Q(X, Y, 0)`.
pub fn solve_visible_quartic(q: &MultiPoly, inner: &[ProjPoint], constraints: &[Constraint]) -> Result<Vec<VisibleSolution>, TorusError> {
    let mut tower = q.tower().clone();
    for p in inner {
        tower = join_towers(&tower, p.tower())?;
    }
    for c in constraints {
        let (Constraint::ConicThrough(p) | Constraint::ConicTangent(p) | Constraint::LineThrough(p)) = c;
        tower = join_towers(&tower, p.tower())?;
    }
    let q = lift_to(q, &tower);
    let ring = q.ring().clone();
    let k = tower.clone();
    let lin = form_basis(&ring, 1);
    let con = form_basis(&ring, 2);

    let mut line_rows: Vec<Vec<Coeff>> = Vec::new();
    let mut conic_rows: Vec<Vec<Coeff>> = Vec::new();
    let mut all: Vec<Constraint> = Vec::new();
    for p in inner {
        all.push(Constraint::LineThrough(p.clone()));
        all.push(Constraint::ConicThrough(p.clone()));
        all.push(Constraint::ConicTangent(p.clone()));
    }
    all.extend(constraints.iter().cloned());
    for c in &all {
        match c {
            Constraint::LineThrough(p) => {
                let p = p.lift(&tower);
                line_rows.push(lin.iter().map(|m| eval_xyz(m, p.coords())).collect());
            }
            Constraint::ConicThrough(p) => {
                let p = p.lift(&tower);
                conic_rows.push(con.iter().map(|m| eval_xyz(m, p.coords())).collect());
            }
            Constraint::ConicTangent(p) => {
                let p = p.lift(&tower);
                if let Some(w) = double_tangent_direction(&q, &p)? {
                    // grad m (P) . W for each basis monomial.
                    let row = con
                        .iter()
                        .map(|m| {
                            let mut acc = Coeff::zero();
                            for (i, n) in ["X", "Y", "Z"].iter().enumerate() {
                                let d = m.derivative(ring.var_index(n).unwrap());
                                acc = acc.add(&k.mul(&eval_xyz(&d, p.coords()), &w[i]));
                            }
                            k.reduce(acc)
                        })
                        .collect();
                    conic_rows.push(row);
                }
            }
        }
    }
    // C2 restricted to Z = 0 is proportional to H; con is X^2, XY, XZ, Y^2, YZ, Z^2.
    let Some(h) = infinity_square_root(&q)? else {
        return Ok(vec![]);
    };
    let slots = [0usize, 1, 3];
    let pivot = (0..3).find(|&i| !h[i].is_zero() && k.inv(&h[i]).is_ok());
    let Some(pivot) = pivot else {
        return Err(TorusError::NonMonomialResidual("restriction to Z = 0 has no invertible coefficient".into()));
    };
    for j in (0..3).filter(|&j| j != pivot) {
        let mut row = vec![Coeff::zero(); 6];
        row[slots[j]] = h[pivot].clone();
        row[slots[pivot]] = h[j].neg();
        conic_rows.push(row);
    }
    let combine = |basis: &[MultiPoly], v: &[Coeff]| {
        basis.iter().zip(v).fold(MultiPoly::zero(&ring), |acc, (m, c)| acc.add(&m.scale(c)))
    };
    let lines = nullspace(&k, line_rows, 3)?;
    let conics = nullspace(&k, conic_rows, 6)?;
    if lines.is_empty() || conics.is_empty() {
        return Ok(vec![]);
    }
    if lines.len() > 1 || conics.len() > 1 {
        return Err(TorusError::NonMonomialResidual(format!(
            "{} free line parameters and {} free conic parameters remain; the residual system is quadratic-cubic in them",
            lines.len(),
            conics.len()
        )));
    }
    let line = combine(&lin, &lines[0]).normalized();
    let conic = combine(&con, &conics[0]).normalized();
    let z = zvar(&q)?;
    let u = conic.pow(2);
    let v = line.pow(3).mul(&z);
    let quartics = form_basis(&ring, 4);
    let coeff_of = |p: &MultiPoly| -> Vec<Coeff> {
        quartics.iter().map(|m| p.coeff(&m.terms().next().unwrap().0.clone())).collect()
    };
    let Some(sol) = solve_unique(&k, &[coeff_of(&u), coeff_of(&v)], &coeff_of(&q))? else {
        return Ok(vec![]);
    };
    let (lambda, mu) = (sol[0].clone(), sol[1].clone());
    if lambda.is_zero() || mu.is_zero() {
        return Ok(vec![]);
    }
    Ok(vec![VisibleSolution { curve: q, conic, line, lambda, mu }])
}

/// Outcome of [`visible_decompositions`].
#[derive(Clone, Debug, Default)]
pub struct VisibleSearch {
    pub solutions: Vec<VisibleSolution>,
    /// Inner-point choices whose residual system was not of radical shape.
    pub residual: Vec<String>,
}

/// Run the solver over every admissible choice of inner points among the
/// singular points of `q`. Pairs of transversal inner points (types `a2`,
/// `a3^inf`, `a4^inf`) are tried; solutions are deduplicated.
pub fn visible_decompositions(q: &MultiPoly) -> Result<VisibleSearch, TorusError> {
    let locus = crate::localsing::singular_points(q)?;
    if !locus.unresolved.is_empty() {
        return Err(TorusError::Local(LocalError::UnresolvedSingularLocus(locus.unresolved.clone())));
    }
    let candidates: Vec<&ProjPoint> = locus
        .points
        .iter()
        .filter(|p| match p.kind {
            LocalType::A { n: 2 } => !p.at_infinity(),
            LocalType::A { n: 3 | 4 } => p.at_infinity(),
            _ => false,
        })
        .map(|p| &p.point)
        .collect();
    let mut out = VisibleSearch::default();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let inner = [candidates[i].clone(), candidates[j].clone()];
            match solve_visible_quartic(q, &inner, &[]) {
                Ok(sols) => {
                    for s in sols {
                        if !out.solutions.iter().any(|o| o.conic == s.conic && o.line == s.line) {
                            out.solutions.push(s);
                        }
                    }
                }
                Err(TorusError::NonMonomialResidual(m)) => out.residual.push(format!("{}, {}: {m}", inner[0], inner[1])),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Admissibility of singular configurations.

/// Ways in which a quartic with singular configuration `sig` could arise
/// from a torus decomposition, according to the local classification of
/// inner and outer singularities. Empty means no decomposition exists.
pub fn decomposition_routes(sig: &Signature) -> Vec<String> {
    let a = |n: u32, inf: bool| SingLabel::new(LocalType::A { n }, inf);
    let mut routes = Vec::new();
    let remainder_ok = |inner: &[SingLabel], outer_allowed: &[u32]| -> bool {
        let mut rest: Vec<SingLabel> = sig.clone();
        for l in inner {
            match rest.iter().position(|x| x == l) {
                Some(i) => {
                    rest.remove(i);
                }
                None => return false,
            }
        }
        rest.iter().all(|l| !l.at_infinity && matches!(l.kind, LocalType::A { n } if outer_allowed.contains(&n)))
    };
    // Visible, smooth conic: C2 . L and C2 . L_inf split as [1, 1] or [2],
    // with at most one common point (L and L_inf meet once), never (2, 2).
    let parts: [&[u32]; 2] = [&[1, 1], &[2]];
    let mut candidates: Vec<(String, Vec<SingLabel>)> = Vec::new();
    for al in parts {
        for bl in parts {
            let mut opts: Vec<(Option<(usize, usize)>, String)> = vec![(None, String::new())];
            for i in 0..al.len() {
                for j in 0..bl.len() {
                    if !(al[i] == 2 && bl[j] == 2) {
                        opts.push((Some((i, j)), String::new()));
                    }
                }
            }
            for (shared, _) in opts {
                let mut inner = Vec::new();
                for (i, &i1) in al.iter().enumerate() {
                    match shared {
                        Some((si, sj)) if si == i => inner.push(a(3 * i1 + bl[sj] - 1, true)),
                        _ => inner.push(a(3 * i1 - 1, false)),
                    }
                }
                inner.sort();
                candidates.push((format!("visible (L: {al:?}, L_inf: {bl:?}, shared: {shared:?})"), inner));
            }
        }
    }
    candidates.push(("visible (C2 singular on L)".into(), vec![SingLabel::new(LocalType::E6, false)]));
    candidates.push(("visible (C2 singular on L and L_inf)".into(), vec![SingLabel::new(LocalType::LineArrangement { lines: 4 }, true)]));
    for (name, inner) in &candidates {
        if remainder_ok(inner, &[1, 2]) {
            routes.push(name.clone());
        }
    }
    for (c1, bit) in [(true, false), (false, false)] {
        for s in lemma_oracle_invisible23(c1, bit) {
            if &s == sig {
                routes.push(format!("invisible (2,3), c1 {}", if c1 { "nonzero" } else { "zero" }));
            }
        }
    }
    let inv24: [(&str, Vec<SingLabel>); 3] = [
        ("invisible (2,4), C2 . L_inf = [1, 1]", vec![a(3, true), a(3, true)]),
        ("invisible (2,4), C2 . L_inf = [2]", vec![a(7, true)]),
        ("invisible (2,4), C2 singular on L_inf", vec![SingLabel::new(LocalType::LineArrangement { lines: 4 }, true)]),
    ];
    for (name, inner) in inv24 {
        if remainder_ok(&inner, &[1]) {
            routes.push(name.to_string());
        }
    }
    routes.sort();
    routes.dedup();
    routes
}

// ---------------------------------------------------------------------------
// Quasi decomposition recurrence.

/// Tower containing `sqrt(-3)` (reused or adjoined) and that element.
pub fn sqrt_minus_three(k: &Arc<FieldTower>) -> Result<(Arc<FieldTower>, Coeff), TorusError> {
    let m3 = BigRational::from_integer((-3).into());
    let (t, r) = upoly::sqrt_in_tower(k, &m3, true)?.expect("adjoin always succeeds");
    Ok((t, r))
}

/// `g' = -(4/3) h^2 + g^3`, `h' = (sqrt(-3)/9) h (-8 h^2 + 9 g^3)`. The
/// polynomials are lifted to a tower containing `sqrt(-3)` first.
pub fn quasi_step(g: &MultiPoly, h: &MultiPoly) -> Result<(MultiPoly, MultiPoly), TorusError> {
    let t = join_towers(g.tower(), h.tower())?;
    let (t, r) = sqrt_minus_three(&t)?;
    let (g, h) = (lift_to(g, &t), lift_to(h, &t));
    let (g2, h2) = step_in_tower(&g, &h, &r);
    let lhs = h2.pow(2).sub(&g2.pow(3));
    let rhs = g.pow(6).mul(&h.pow(2).sub(&g.pow(3)));
    assert_eq!(lhs, rhs, "one-step recurrence identity");
    Ok((g2, h2))
}

fn step_in_tower(g: &MultiPoly, h: &MultiPoly, r: &Coeff) -> (MultiPoly, MultiPoly) {
    let hh = h.pow(2);
    let g3 = g.pow(3);
    let g2 = hh.scale_rational(&BigRational::new((-4).into(), 3.into())).add(&g3);
    let inner = hh.scale_int(-8).add(&g3.scale_int(9));
    let h2 = h.mul(&inner).scale(&r.scale(&BigRational::new(1.into(), 9.into())));
    (g2, h2)
}

#[derive(Clone, Debug)]
pub struct QuasiChain {
    pub f: MultiPoly,
    /// `(g_i, h_i)` for `i = 0..=N`.
    pub levels: Vec<(MultiPoly, MultiPoly)>,
    /// Resolved points of `{h_0 = 0} ∩ {g_0 = 0}`, over `sigma_tower`.
    pub sigma0: Vec<[Coeff; 2]>,
    pub sigma_tower: Arc<FieldTower>,
    pub report: Report,
}

impl QuasiChain {
    /// `r_i = g_0 * ... * g_i`.
    pub fn r(&self, i: usize) -> MultiPoly {
        self.levels[..=i].iter().fold(MultiPoly::one(self.f.ring()), |acc, (g, _)| acc.mul(g))
    }
}

pub fn quasi_chain(f: &MultiPoly, g0: &MultiPoly, h0: &MultiPoly, n: usize) -> Result<QuasiChain, TorusError> {
    let t = join_towers(&join_towers(f.tower(), g0.tower())?, h0.tower())?;
    let (f, g0, h0) = (lift_to(f, &t), lift_to(g0, &t), lift_to(h0, &t));
    if h0.pow(2).sub(&g0.pow(3)) != f {
        return Err(TorusError::BaseIdentityFails);
    }
    let (t, r) = sqrt_minus_three(&t)?;
    let (f, g0, h0) = (lift_to(&f, &t), lift_to(&g0, &t), lift_to(&h0, &t));
    let mut report = Report::new();
    report.push("base identity", true, "f = h0^2 - g0^3");
    let mut levels = vec![(g0.clone(), h0.clone())];
    let mut r_acc = MultiPoly::one(f.ring());
    for i in 0..n {
        let (g, h) = levels[i].clone();
        let (g2, h2) = step_in_tower(&g, &h, &r);
        r_acc = r_acc.mul(&g);
        let lhs = r_acc.pow(6).mul(&f);
        let rhs = h2.pow(2).sub(&g2.pow(3));
        report.push(format!("level {i}"), lhs == rhs, format!("deg g = {}, deg h = {}", g2.degree(), h2.degree()));
        levels.push((g2, h2));
    }
    let mut sigma0 = Vec::new();
    let mut sigma_tower = t.clone();
    match affine_common_zeros(&[g0.clone(), h0.clone()]) {
        Ok(z) if z.unresolved.is_empty() => {
            sigma_tower = z.tower.clone();
            sigma0 = z.points;
            for (i, (g, h)) in levels.iter().enumerate().skip(1) {
                let (g, h) = (lift_to(g, &sigma_tower), lift_to(h, &sigma_tower));
                let ok = sigma0.iter().all(|p| g.eval(p).is_zero() && h.eval(p).is_zero());
                report.push(format!("sigma 0 in sigma {i}"), ok, format!("{} points", sigma0.len()));
            }
        }
        Ok(_) => report.waive("sigma nesting", "inner locus not resolved"),
        Err(e) => report.waive("sigma nesting", e.to_string()),
    }
    Ok(QuasiChain { f, levels, sigma0, sigma_tower, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;
    use proptest::prelude::*;

    fn xyz() -> Arc<PolyRing> {
        PolyRing::projective(FieldTower::rationals())
    }

    fn q(s: &str) -> MultiPoly {
        parse_poly(&xyz(), s).unwrap()
    }

    #[test]
    fn quartic_one_decomposition_verifies() {
        let f = q("Z^4 + 2*(Y^2 - X^2)*Z^2 + Y^3*Z + (Y^2 - X^2)^2");
        let rep = verify_visible_quartic(&f, &q("X^2 - Y^2 - Z^2"), &q("Y"));
        assert!(rep.passed(), "{rep}");
        let rep = verify_visible_quartic(&f.scale_int(3), &q("X^2 - Y^2 - Z^2"), &q("Y"));
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn non_coprime_visible_fails() {
        let rep = verify_visible_quartic(&q("X^4"), &q("X^2"), &q("X"));
        assert!(!rep.passed());
    }

    #[test]
    fn expand_quartic_shape() {
        let v = VisibleFactorization { p: 3, q: 2, r: 1, s: 1, fp: q("X^2 - Y^2 - Z^2"), fq: q("Y") };
        let e = expand_visible(&v).unwrap();
        assert_eq!(e.j, 2);
        assert_eq!(e.g, q("(X^2 - Y^2 - Z^2)^2 + Y^3*Z"));
        assert!(!e.degenerate);
        let v = VisibleFactorization { p: 3, q: 2, r: 1, s: 1, fp: q("X*Z"), fq: q("Y") };
        assert!(expand_visible(&v).unwrap().degenerate);
    }

    #[test]
    fn quasi_step_on_cusp() {
        let r = PolyRing::new(FieldTower::rationals(), &["x", "y"]);
        let x = MultiPoly::var(&r, 0);
        let y = MultiPoly::var(&r, 1);
        let (g2, h2) = quasi_step(&x, &y).unwrap();
        let t = g2.tower().clone();
        let (x, y) = (lift_to(&x, &t), lift_to(&y, &t));
        assert_eq!(h2.pow(2).sub(&g2.pow(3)), x.pow(6).mul(&y.pow(2).sub(&x.pow(3))));
        let c = quasi_chain(&y.pow(2).sub(&x.pow(3)), &x, &y, 1).unwrap();
        assert!(c.report.passed(), "{}", c.report);
        assert_eq!(c.r(0), lift_to(&x, c.f.tower()));
        assert!(matches!(quasi_chain(&y.pow(2), &x, &y, 1), Err(TorusError::BaseIdentityFails)));
    }

    #[test]
    fn invisible24_zero_c() {
        let d = InvisibleData24 { f2_2: q("X^2"), f2_1: q("0"), a00: Coeff::one(), b00: Coeff::one() };
        assert!(matches!(build_invisible_24(&d), Err(TorusError::ZeroC)));
        let d = InvisibleData24 { f2_2: q("0"), f2_1: q("0"), a00: Coeff::one(), b00: Coeff::from_int(2) };
        let b = build_invisible_24(&d).unwrap();
        assert!(!b.report.passed());
    }

    #[test]
    fn routes_for_signature_only_rows() {
        let sig = |v: &[(u32, bool)]| {
            let mut s: Signature = v.iter().map(|&(n, i)| SingLabel::new(LocalType::A { n }, i)).collect();
            s.sort();
            s
        };
        assert!(decomposition_routes(&sig(&[(4, false), (2, true)])).is_empty());
        assert!(decomposition_routes(&sig(&[(5, true), (2, true)])).is_empty());
        assert!(!decomposition_routes(&sig(&[(2, false), (2, false)])).is_empty());
        assert!(!decomposition_routes(&sig(&[(6, true)])).is_empty());
        assert!(!decomposition_routes(&sig(&[(7, true)])).is_empty());
        assert!(!decomposition_routes(&sig(&[(3, true), (3, true), (1, false)])).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn one_step_identity(gc in prop::collection::vec(-3i64..4, 10), hc in prop::collection::vec(-3i64..4, 10), dg in 0u32..4, dh in 0u32..4) {
            let r = PolyRing::new(FieldTower::rationals(), &["x", "y"]);
            let mk = |cs: &[i64], d: u32| {
                let mut p = MultiPoly::zero(&r);
                let mut i = 0;
                for a in 0..=d {
                    for b in 0..=(d - a) {
                        p = p.add(&MultiPoly::monomial(&r, smallvec::smallvec![a as u16, b as u16], Coeff::from_int(cs[i % cs.len()])));
                        i += 1;
                    }
                }
                p
            };
            let g = mk(&gc, dg);
            let h = mk(&hc, dh);
            // quasi_step asserts the identity internally.
            quasi_step(&g, &h).unwrap();
        }
    }
}
