//! Local analysis of plane projective curves: singular loci, multiplicities,
//! Milnor numbers, intersection multiplicities with lines, germ types, the
//! predicted types for torus-shaped quartics, and QL configuration classes.
//!
//! Curves live in a ring whose variables are exactly `X, Y, Z`. The line at
//! infinity is `Z = 0`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::fieldtower::{Coeff, FieldTower, TowerError};
use crate::polyring::{gcd, resultant, MultiPoly, PolyError, PolyRing};
use crate::upoly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalError {
    #[error("curve is not reduced: repeated factor `{0}`")]
    NonReducedCurve(String),
    #[error("singular point is not isolated: the partials share `{0}` through it")]
    NonIsolated(String),
    #[error("the curve contains the line")]
    LineContained,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("expected a form in X, Y, Z")]
    NotProjective,
    #[error("unresolved singular locus; residual elimination factors: {}", .0.join("; "))]
    UnresolvedSingularLocus(Vec<String>),
    #[error("invalid incidence data: {0}")]
    InvalidIncidence(String),
    #[error("no generic shear found within the search bound")]
    ShearSearchExhausted,
    #[error("point and curve live over incompatible towers")]
    TowerMismatch,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl From<TowerError> for LocalError {
    fn from(e: TowerError) -> Self {
        LocalError::Poly(PolyError::Tower(e))
    }
}

/// A point of the projective plane, normalized so that its last nonzero
/// coordinate is 1.
#[derive(Clone, Debug)]
pub struct ProjPoint {
    tower: Arc<FieldTower>,
    coords: [Coeff; 3],
}

impl PartialEq for ProjPoint {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl ProjPoint {
    pub fn new(tower: &Arc<FieldTower>, coords: [Coeff; 3]) -> Result<Self, LocalError> {
        let coords = coords.map(|c| tower.reduce(c));
        let Some(c) = (0..3).rev().find(|&i| !coords[i].is_zero()) else {
            return Err(LocalError::InvalidIncidence("all coordinates vanish".into()));
        };
        let inv = tower.inv(&coords[c])?;
        let coords = coords.map(|x| tower.mul(&x, &inv));
        Ok(ProjPoint { tower: tower.clone(), coords })
    }

    pub fn from_ints(tower: &Arc<FieldTower>, c: [i64; 3]) -> Self {
        Self::new(tower, c.map(Coeff::from_int)).expect("nonzero point")
    }

    pub fn coords(&self) -> &[Coeff; 3] {
        &self.coords
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn at_infinity(&self) -> bool {
        self.coords[2].is_zero()
    }

    /// Index of the coordinate normalized to 1.
    pub fn chart(&self) -> usize {
        (0..3).rev().find(|&i| !self.coords[i].is_zero()).unwrap()
    }

    pub fn lift(&self, tower: &Arc<FieldTower>) -> Self {
        assert!(self.tower.is_prefix_of(tower));
        ProjPoint { tower: tower.clone(), coords: self.coords.clone() }
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .map(|c| {
                let s = self.tower.format(c);
                if c.terms().len() > 1 {
                    format!("({s})")
                } else {
                    s
                }
            })
            .collect();
        write!(f, "[{}]", parts.join(":"))
    }
}

/// Topological type of a germ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LocalType {
    /// Smooth point; `tangency` is the intersection multiplicity with a
    /// supplied line when one was given.
    Smooth { tangency: Option<u32> },
    /// `x^2 + y^(n+1)`, carrying `n`.
    A { n: u32 },
    E6,
    /// A union of concurrent lines through the point.
    LineArrangement { lines: u32 },
    Unsupported { multiplicity: u32, milnor: Option<u32> },
}

impl LocalType {
    pub fn a(n: u32) -> Self {
        LocalType::A { n }
    }

    pub fn label(&self) -> String {
        match self {
            LocalType::Smooth { tangency: None } => "smooth".into(),
            LocalType::Smooth { tangency: Some(t) } => format!("smooth(tangency {t})"),
            LocalType::A { n } => format!("a{n}"),
            LocalType::E6 => "e6".into(),
            LocalType::LineArrangement { lines } => format!("{lines} lines"),
            LocalType::Unsupported { multiplicity, milnor } => match milnor {
                Some(m) => format!("unsupported(mult {multiplicity}, mu {m})"),
                None => format!("unsupported(mult {multiplicity})"),
            },
        }
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularPoint {
    pub point: ProjPoint,
    pub kind: LocalType,
}

impl SingularPoint {
    pub fn at_infinity(&self) -> bool {
        self.point.at_infinity()
    }

    pub fn label(&self) -> SingLabel {
        SingLabel { kind: self.kind.clone(), at_infinity: self.at_infinity() }
    }
}

/// A germ type together with its position relative to the line at infinity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SingLabel {
    pub kind: LocalType,
    pub at_infinity: bool,
}

impl SingLabel {
    pub fn new(kind: LocalType, at_infinity: bool) -> Self {
        SingLabel { kind, at_infinity }
    }
}

impl fmt::Display for SingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.at_infinity {
            write!(f, "{}^inf", self.kind)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

/// Sorted multiset of labels.
pub type Signature = Vec<SingLabel>;

pub fn format_signature(s: &[SingLabel]) -> String {
    if s.is_empty() {
        return "{}".into();
    }
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let n = j - i;
        parts.push(if n > 1 { format!("{n}{}", s[i]) } else { s[i].to_string() });
        i = j;
    }
    parts.join(" + ")
}

#[derive(Clone, Debug)]
pub struct SingularLocus {
    /// Tower over which all points are expressed (may extend the curve's tower).
    pub tower: Arc<FieldTower>,
    pub points: Vec<SingularPoint>,
    /// Elimination factors whose roots could not be resolved.
    pub unresolved: Vec<String>,
}

impl SingularLocus {
    pub fn signature(&self) -> Signature {
        let mut s: Signature = self.points.iter().map(|p| p.label()).collect();
        s.sort();
        s
    }
}

fn xyz(ring: &PolyRing) -> Result<[usize; 3], LocalError> {
    if ring.nvars() != 3 {
        return Err(LocalError::NotProjective);
    }
    let mut out = [0; 3];
    for (k, n) in ["X", "Y", "Z"].iter().enumerate() {
        out[k] = ring.var_index(n).ok_or(LocalError::NotProjective)?;
    }
    Ok(out)
}

fn larger_tower(a: &Arc<FieldTower>, b: &Arc<FieldTower>) -> Result<Arc<FieldTower>, LocalError> {
    if a.is_prefix_of(b) {
        Ok(b.clone())
    } else if b.is_prefix_of(a) {
        Ok(a.clone())
    } else {
        Err(LocalError::TowerMismatch)
    }
}

/// `F` with `X, Y, Z` in canonical positions, over the given larger tower.
fn lifted(f: &MultiPoly, tower: &Arc<FieldTower>) -> Result<MultiPoly, LocalError> {
    let idx = xyz(f.ring())?;
    let ring = PolyRing::projective(tower.clone());
    Ok(f.remap_vars(&ring, &idx))
}

/// Affine equation `f(u, v)` of `F` at `P`, with `P` moved to the origin.
pub fn local_equation(f: &MultiPoly, p: &ProjPoint) -> Result<MultiPoly, LocalError> {
    let tower = larger_tower(f.tower(), p.tower())?;
    let f = lifted(f, &tower)?;
    let uv = PolyRing::new(tower, &["u", "v"]);
    let c = p.chart();
    let others: Vec<usize> = (0..3).filter(|&i| i != c).collect();
    let mut images = vec![MultiPoly::zero(&uv); 3];
    images[c] = MultiPoly::one(&uv);
    for (j, &i) in others.iter().enumerate() {
        images[i] = MultiPoly::constant(&uv, p.coords[i].clone()).add(&MultiPoly::var(&uv, j));
    }
    Ok(f.compose(&images))
}

/// Order of the local equation at `P`; 0 when `P` is not on the curve.
pub fn multiplicity(f: &MultiPoly, p: &ProjPoint) -> Result<u32, LocalError> {
    let g = local_equation(f, p)?;
    Ok(if g.is_zero() { u32::MAX } else { g.order() })
}

fn shear(g: &MultiPoly, k: i64) -> MultiPoly {
    let r = g.ring().clone();
    let u = MultiPoly::var(&r, 0);
    let v = MultiPoly::var(&r, 1);
    g.compose(&[u.add(&v.scale_int(k)), v])
}

fn shear_sequence() -> impl Iterator<Item = i64> {
    (0..24i64).map(|i| if i % 2 == 0 { i / 2 } else { -(i + 1) / 2 })
}

/// Local intersection number at the origin of two affine curves in `(u, v)`
/// known to meet there in isolation, via `ord_u Res_v` after a generic shear.
pub fn local_intersection_number(a: &MultiPoly, b: &MultiPoly) -> Result<u32, LocalError> {
    let origin = [Coeff::zero(), Coeff::zero()];
    if !a.eval(&origin).is_zero() || !b.eval(&origin).is_zero() {
        return Ok(0);
    }
    for k in shear_sequence() {
        let ak = shear(a, k);
        let bk = shear(b, k);
        // Leading v-coefficients must not vanish at u = 0.
        let lead_ok = |p: &MultiPoly| {
            p.coeffs_in(1).last().is_some_and(|c| !c.eval_var(0, &Coeff::zero()).is_zero())
        };
        if !lead_ok(&ak) || !lead_ok(&bk) {
            continue;
        }
        // The origin must be the only common zero above u = 0.
        let a0 = ak.eval_var(0, &Coeff::zero());
        let b0 = bk.eval_var(0, &Coeff::zero());
        let g = gcd(&a0, &b0)?;
        if g.num_terms() != 1 {
            continue;
        }
        let r = resultant(&ak, &bk, 1)?;
        let uni = r.to_univariate(0).expect("resultant free of v");
        return match uni.iter().position(|c| !c.is_zero()) {
            Some(ord) => Ok(ord as u32),
            None => Err(LocalError::NonIsolated(a.to_string())),
        };
    }
    Err(LocalError::ShearSearchExhausted)
}

/// Milnor number of the germ of `F` at `P`.
pub fn milnor_number(f: &MultiPoly, p: &ProjPoint) -> Result<u32, LocalError> {
    let g = local_equation(f, p)?;
    milnor_number_affine(&g)
}

/// Milnor number at the origin of an affine equation in two variables.
pub fn milnor_number_affine(g: &MultiPoly) -> Result<u32, LocalError> {
    let mut a = g.derivative(0);
    let mut b = g.derivative(1);
    let origin = [Coeff::zero(), Coeff::zero()];
    let common = gcd(&a, &b)?;
    if !common.is_constant() {
        if common.eval(&origin).is_zero() {
            return Err(LocalError::NonIsolated(common.to_string()));
        }
        a = a.exact_div(&common)?;
        b = b.exact_div(&common)?;
    }
    local_intersection_number(&a, &b)
}

fn point_on_line_other_than(l: &[Coeff; 3], p: &ProjPoint, tower: &Arc<FieldTower>) -> Option<[Coeff; 3]> {
    let e = |i: usize| {
        let mut v = [Coeff::zero(), Coeff::zero(), Coeff::zero()];
        v[i] = Coeff::one();
        v
    };
    for i in 0..3 {
        let w = cross(tower, l, &e(i));
        if w.iter().all(|c| c.is_zero()) {
            continue;
        }
        if cross(tower, &w, p.coords()).iter().any(|c| !c.is_zero()) {
            return Some(w);
        }
    }
    None
}

fn cross(k: &FieldTower, a: &[Coeff; 3], b: &[Coeff; 3]) -> [Coeff; 3] {
    [
        k.mul(&a[1], &b[2]).sub(&k.mul(&a[2], &b[1])),
        k.mul(&a[2], &b[0]).sub(&k.mul(&a[0], &b[2])),
        k.mul(&a[0], &b[1]).sub(&k.mul(&a[1], &b[0])),
    ]
}

/// Coefficient vector of a linear form in `X, Y, Z`.
pub fn linear_coeffs(l: &MultiPoly) -> Result<[Coeff; 3], LocalError> {
    let idx = xyz(l.ring())?;
    if l.degree() != 1 || !l.is_homogeneous() {
        return Err(LocalError::InvalidIncidence(format!("`{l}` is not a linear form")));
    }
    let mut out = [Coeff::zero(), Coeff::zero(), Coeff::zero()];
    for (k, &i) in idx.iter().enumerate() {
        let mut m = smallvec::smallvec![0u16; 3];
        m[i] = 1;
        out[k] = l.coeff(&m);
    }
    Ok(out)
}

/// `I(F, L; P)`: order in `s` of `F(P + s W)` with `W` another point of `L`.
pub fn line_intersection_multiplicity(f: &MultiPoly, l: &MultiPoly, p: &ProjPoint) -> Result<u32, LocalError> {
    let tower = larger_tower(&larger_tower(f.tower(), l.tower())?, p.tower())?;
    let lc = linear_coeffs(l)?;
    let on_line = (0..3).fold(Coeff::zero(), |acc, i| acc.add(&tower.mul(&lc[i], &p.coords[i])));
    if !tower.reduce(on_line).is_zero() {
        return Ok(0);
    }
    let w = point_on_line_other_than(&lc, p, &tower).ok_or(LocalError::InvalidIncidence("degenerate line".into()))?;
    let f = lifted(f, &tower)?;
    let sr = PolyRing::new(tower.clone(), &["s"]);
    let s = MultiPoly::var(&sr, 0);
    let images: Vec<MultiPoly> = (0..3)
        .map(|i| MultiPoly::constant(&sr, p.coords[i].clone()).add(&s.scale(&w[i])))
        .collect();
    let g = f.compose(&images);
    if g.is_zero() {
        return Err(LocalError::LineContained);
    }
    let uni = g.to_univariate(0).unwrap();
    Ok(uni.iter().position(|c| !c.is_zero()).unwrap() as u32)
}

/// Number of distinct linear factors (over the algebraic closure) of a binary
/// form of degree `m` in `u, v`.
fn distinct_lines(h: &MultiPoly, m: u32) -> Result<u32, LocalError> {
    let k = h.tower().clone();
    let at_v1 = h.eval_var(1, &Coeff::one());
    let uni = at_v1.to_univariate(0).unwrap();
    let d = upoly::degree(&uni).unwrap_or(0) as u32;
    let sf = upoly::squarefree_part(&k, &uni)?;
    let s = upoly::degree(&sf).unwrap_or(0) as u32;
    Ok(s + u32::from(d < m))
}

/// Germ type of `F` at `P`. When `line` is given, smooth points report their
/// intersection multiplicity with it.
pub fn classify_singularity(f: &MultiPoly, p: &ProjPoint, line: Option<&MultiPoly>) -> Result<LocalType, LocalError> {
    let g = local_equation(f, p)?;
    if g.is_zero() {
        return Err(LocalError::NonReducedCurve(f.to_string()));
    }
    let m = g.order();
    match m {
        0 => Err(LocalError::NotOnCurve),
        1 => {
            let tangency = match line {
                Some(l) => Some(line_intersection_multiplicity(f, l, p)?),
                None => None,
            };
            Ok(LocalType::Smooth { tangency })
        }
        2 => Ok(LocalType::A { n: milnor_number_affine(&g)? }),
        _ => {
            let cone = g.homogeneous_part(m);
            if m == g.degree() {
                return Ok(LocalType::LineArrangement { lines: distinct_lines(&cone, m)? });
            }
            let mu = milnor_number_affine(&g).ok();
            if m == 3 && mu == Some(6) && distinct_lines(&cone, 3)? == 1 {
                return Ok(LocalType::E6);
            }
            Ok(LocalType::Unsupported { multiplicity: m, milnor: mu })
        }
    }
}

fn univariate_restriction(f: &MultiPoly, tower: &Arc<FieldTower>, point: [Option<Coeff>; 3]) -> upoly::UPoly {
    // Exactly one coordinate is left free.
    let r = PolyRing::new(tower.clone(), &["t"]);
    let images: Vec<MultiPoly> = point
        .iter()
        .map(|c| match c {
            Some(c) => MultiPoly::constant(&r, c.clone()),
            None => MultiPoly::var(&r, 0),
        })
        .collect();
    f.with_tower(tower).compose(&images).to_univariate(0).unwrap()
}

trait WithTower {
    fn with_tower(&self, tower: &Arc<FieldTower>) -> MultiPoly;
}

impl WithTower for MultiPoly {
    fn with_tower(&self, tower: &Arc<FieldTower>) -> MultiPoly {
        self.lift(&self.ring().with_tower(tower.clone()))
    }
}

/// All singular points of the curve `F = 0` whose coordinates lie in the tower
/// or in quadratic radical extensions of it.
pub fn singular_points(f: &MultiPoly) -> Result<SingularLocus, LocalError> {
    if !f.is_homogeneous() {
        return Err(LocalError::Poly(PolyError::NotHomogeneous));
    }
    let base = f.tower().clone();
    let f = lifted(f, &base)?;
    let partials: Vec<MultiPoly> = (0..3).map(|v| f.derivative(v)).collect();
    let mut common = f.clone();
    for p in &partials {
        common = gcd(&common, p)?;
    }
    if !common.is_constant() {
        return Err(LocalError::NonReducedCurve(common.to_string()));
    }
    let mut tower = base.clone();
    let mut coords: Vec<[Coeff; 3]> = Vec::new();
    let mut unresolved: Vec<String> = Vec::new();

    // Points on Z = 0: [x : 1 : 0] and [1 : 0 : 0].
    let mut h: upoly::UPoly = Vec::new();
    for p in &partials {
        let r = univariate_restriction(p, &tower, [None, Some(Coeff::one()), Some(Coeff::zero())]);
        h = upoly::gcd(&tower, &h, &r)?;
    }
    if upoly::degree(&h).unwrap_or(0) > 0 {
        let roots = upoly::roots(&tower, &h, true)?;
        tower = roots.tower;
        for x in roots.roots {
            coords.push([x, Coeff::one(), Coeff::zero()]);
        }
        unresolved.extend(roots.unresolved.iter().map(|u| format_upoly(&tower, u, "X/Y")));
    }
    let e1 = [Coeff::one(), Coeff::zero(), Coeff::zero()];
    if partials.iter().all(|p| p.eval(&e1).is_zero()) {
        coords.push(e1);
    }

    // Affine points.
    let ring = PolyRing::new(tower.clone(), &["x", "y"]);
    let (x, y) = (MultiPoly::var(&ring, 0), MultiPoly::var(&ring, 1));
    let g = f.with_tower(&tower).compose(&[x, y, MultiPoly::one(&ring)]);
    let zeros = affine_common_zeros(&[g.clone(), g.derivative(0), g.derivative(1)])?;
    tower = zeros.tower;
    unresolved.extend(zeros.unresolved);
    coords.extend(zeros.points.into_iter().map(|[a, b]| [a, b, Coeff::one()]));

    let mut points = Vec::new();
    for c in coords {
        let p = ProjPoint::new(&tower, c)?;
        let kind = classify_singularity(&f, &p, None)?;
        points.push(SingularPoint { point: p, kind });
    }
    Ok(SingularLocus { tower, points, unresolved })
}

/// Common zeros in the affine plane of polynomials in two variables.
#[derive(Clone, Debug)]
pub struct AffineZeros {
    pub tower: Arc<FieldTower>,
    pub points: Vec<[Coeff; 2]>,
    pub unresolved: Vec<String>,
}

/// Finite common zero set of `polys` (at least two, in a two-variable ring),
/// by elimination after a shear `x -> x + k y` that makes the first
/// polynomial monic in `y`. Coordinates may need quadratic radicals, which
/// are adjoined.
pub fn affine_common_zeros(polys: &[MultiPoly]) -> Result<AffineZeros, LocalError> {
    assert!(polys.len() >= 2 && polys[0].ring().nvars() == 2);
    let base = polys[0].tower().clone();
    let p0 = &polys[0];
    if p0.is_zero() {
        return Err(LocalError::NonIsolated("0".into()));
    }
    if p0.is_constant() {
        return Ok(AffineZeros { tower: base, points: vec![], unresolved: vec![] });
    }
    let top = p0.homogeneous_part(p0.degree());
    'shear: for k in shear_sequence() {
        if top.eval(&[Coeff::from_int(k), Coeff::one()]).is_zero() {
            continue;
        }
        let sheared: Vec<MultiPoly> = polys.iter().map(|p| shear(p, k)).collect();
        let mut e: upoly::UPoly = Vec::new();
        for q in &sheared[1..] {
            let r = resultant(&sheared[0], q, 1)?;
            e = upoly::gcd(&base, &e, &r.to_univariate(0).unwrap())?;
        }
        if e.is_empty() {
            return Err(LocalError::NonIsolated(gcd(&sheared[0], &sheared[1])?.to_string()));
        }
        let roots = upoly::roots(&base, &e, true)?;
        let t2 = roots.tower.clone();
        let mut found = Vec::new();
        for x0 in &roots.roots {
            let mut yg: upoly::UPoly = Vec::new();
            for q in &sheared {
                yg = upoly::gcd(&t2, &yg, &univariate_restriction_xy(q, &t2, x0))?;
            }
            if !yg.is_empty() {
                yg = upoly::squarefree_part(&t2, &yg)?;
            }
            match upoly::degree(&yg) {
                None => return Err(LocalError::NonIsolated(format!("x = {}", t2.format(x0)))),
                Some(0) => continue,
                Some(1) => {
                    let y0 = t2.exact_div(&yg[0].neg(), &yg[1])?;
                    let xx = x0.add(&y0.scale(&num_rational::BigRational::from_integer(k.into())));
                    found.push([xx, y0]);
                }
                Some(_) => continue 'shear,
            }
        }
        let unresolved = roots.unresolved.iter().map(|u| format_upoly(&t2, u, "x")).collect();
        return Ok(AffineZeros { tower: t2, points: found, unresolved });
    }
    Err(LocalError::ShearSearchExhausted)
}

fn univariate_restriction_xy(g: &MultiPoly, tower: &Arc<FieldTower>, x0: &Coeff) -> upoly::UPoly {
    let g = g.with_tower(tower);
    g.eval_var(0, x0).to_univariate(1).unwrap()
}

fn format_upoly(tower: &Arc<FieldTower>, p: &[Coeff], var: &str) -> String {
    let r = PolyRing::new(tower.clone(), &[var]);
    MultiPoly::from_univariate(&r, 0, p).to_string()
}

// ---------------------------------------------------------------------------
// Predicted germ types for torus-shaped quartics.

/// Intersection data at an inner point of `G = F2'^2 + F1'^3 Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LocalIncidence {
    /// `I(C2, L; P)` with `L = {F1' = 0}`.
    pub iota1: u32,
    /// `I(C2, L_inf; P)`.
    pub iota2: u32,
    pub c2_smooth: bool,
}

/// Germ type of a visible quartic at an inner point, from incidence data alone.
pub fn lemma_oracle_visible(inc: &LocalIncidence, on_l: bool, on_linf: bool) -> Result<LocalType, LocalError> {
    if on_l != (inc.iota1 > 0) || on_linf != (inc.iota2 > 0) {
        return Err(LocalError::InvalidIncidence("flags disagree with intersection multiplicities".into()));
    }
    if !on_l && !on_linf {
        return Err(LocalError::InvalidIncidence("point is not an inner point".into()));
    }
    if inc.c2_smooth {
        if inc.iota1 > 2 || inc.iota2 > 2 {
            return Err(LocalError::InvalidIncidence("a smooth conic meets a line with multiplicity at most 2".into()));
        }
        if inc.iota1 == 2 && inc.iota2 == 2 {
            return Err(LocalError::InvalidIncidence("(2, 2) would force L = L_inf".into()));
        }
        return Ok(match (on_l, on_linf) {
            (true, false) => LocalType::A { n: 3 * inc.iota1 - 1 },
            (false, true) => LocalType::Smooth { tangency: Some(2 * inc.iota2) },
            _ => LocalType::A { n: 3 * inc.iota1 + inc.iota2 - 1 },
        });
    }
    Ok(match (on_l, on_linf) {
        (true, false) => LocalType::E6,
        (false, true) => LocalType::Smooth { tangency: Some(4) },
        _ => LocalType::LineArrangement { lines: 4 },
    })
}

/// Admissible singular configurations of an invisible (2,3) quartic built from
/// the normal form, split on `c1 = l2(0, 1)`.
pub fn lemma_oracle_invisible23(c1_nonzero: bool, bitangent: bool) -> Vec<Signature> {
    let a = |n: u32, inf: bool| SingLabel::new(LocalType::A { n }, inf);
    let mut out: Vec<Signature> = if c1_nonzero {
        let mut v = vec![vec![a(2, false), a(2, false), a(2, false)]];
        if !bitangent {
            v.push(vec![a(2, false), a(5, false)]);
        }
        v
    } else {
        vec![vec![a(2, false), a(2, false), a(2, true)], vec![a(2, true), a(5, false)]]
    };
    for s in &mut out {
        s.sort();
    }
    out
}

/// Germ type of `G = F2^2 - c' Z^4` at a point of `C2 ∩ L_inf`; `iota = 0`
/// denotes an outer singularity.
pub fn lemma_oracle_invisible24(iota: u32, c2_smooth: bool) -> Result<LocalType, LocalError> {
    if iota == 0 {
        return Ok(LocalType::A { n: 1 });
    }
    if !c2_smooth {
        return Ok(LocalType::LineArrangement { lines: 4 });
    }
    if iota > 2 {
        return Err(LocalError::InvalidIncidence("a smooth conic meets a line with multiplicity at most 2".into()));
    }
    Ok(LocalType::A { n: 4 * iota - 1 })
}

// ---------------------------------------------------------------------------
// QL configurations.

/// How a quartic meets the line at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum InfinityCase {
    /// Bitangent at two smooth points.
    I,
    /// Tangent at a smooth point, through one singular point.
    II,
    /// Through two singular points.
    III,
    /// One smooth point of intersection multiplicity 4.
    IV,
    /// One singular point of intersection multiplicity 4.
    V,
    Other,
}

impl fmt::Display for InfinityCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfinityCase::I => "(i)",
            InfinityCase::II => "(ii)",
            InfinityCase::III => "(iii)",
            InfinityCase::IV => "(iv)",
            InfinityCase::V => "(v)",
            InfinityCase::Other => "other",
        })
    }
}

/// One row of the configuration table: singular labels `(type, on L_inf)`.
pub struct QlRow {
    pub index: u8,
    pub sing: &'static [(&'static str, bool)],
    pub infinity: InfinityCase,
}

pub const QL_TABLE: [QlRow; 19] = {
    use InfinityCase::*;
    [
        QlRow { index: 1, sing: &[("a2", false), ("a2", false)], infinity: I },
        QlRow { index: 2, sing: &[("a2", false), ("a2", false)], infinity: IV },
        QlRow { index: 3, sing: &[("a2", false), ("a2", false), ("a1", false)], infinity: I },
        QlRow { index: 4, sing: &[("a2", false), ("a2", false), ("a1", false)], infinity: IV },
        QlRow { index: 5, sing: &[("a2", false), ("a2", false), ("a2", false)], infinity: I },
        QlRow { index: 6, sing: &[("a2", false), ("a3", true)], infinity: II },
        QlRow { index: 7, sing: &[("a5", false)], infinity: I },
        QlRow { index: 8, sing: &[("a5", false)], infinity: IV },
        QlRow { index: 9, sing: &[("a6", true)], infinity: II },
        QlRow { index: 10, sing: &[("a4", true), ("a2", false)], infinity: V },
        QlRow { index: 11, sing: &[("e6", false)], infinity: I },
        QlRow { index: 12, sing: &[("e6", false)], infinity: IV },
        QlRow { index: 13, sing: &[("a4", false), ("a2", true)], infinity: II },
        QlRow { index: 14, sing: &[("a3", true), ("a2", false), ("a1", false)], infinity: II },
        QlRow { index: 15, sing: &[("a5", false), ("a1", false)], infinity: I },
        QlRow { index: 16, sing: &[("a5", true), ("a2", true)], infinity: III },
        QlRow { index: 17, sing: &[("a3", true), ("a3", true)], infinity: III },
        QlRow { index: 18, sing: &[("a7", true)], infinity: V },
        QlRow { index: 19, sing: &[("a3", true), ("a3", true), ("a1", false)], infinity: III },
    ]
};

fn parse_label(s: &str) -> LocalType {
    if s == "e6" {
        LocalType::E6
    } else {
        LocalType::A { n: s[1..].parse().unwrap() }
    }
}

/// Inverse of [`format_signature`]: `"a1 + 2a2^inf"`, `"e6"`, `"none"`.
pub fn parse_signature(s: &str) -> Option<Signature> {
    let mut out = Vec::new();
    let s = s.trim();
    if s == "none" || s == "{}" || s.is_empty() {
        return Some(out);
    }
    for part in s.split('+') {
        let part = part.trim();
        let (body, inf) = match part.strip_suffix("^inf") {
            Some(b) => (b, true),
            None => (part, false),
        };
        let digits = body.chars().take_while(|c| c.is_ascii_digit()).count();
        let (count, label) = body.split_at(digits);
        let label = label.trim();
        // "4 lines" starts with its line count.
        let (count, kind) = if label == "lines" {
            (1, LocalType::LineArrangement { lines: count.parse().ok()? })
        } else {
            let count: usize = if count.is_empty() { 1 } else { count.parse().ok()? };
            let kind = match label {
                "e6" => LocalType::E6,
                l if l.starts_with('a') => LocalType::A { n: l[1..].parse().ok()? },
                _ => return None,
            };
            (count, kind)
        };
        for _ in 0..count {
            out.push(SingLabel::new(kind.clone(), inf));
        }
    }
    out.sort();
    Some(out)
}

impl QlRow {
    pub fn signature(&self) -> Signature {
        let mut s: Signature = self.sing.iter().map(|(k, inf)| SingLabel::new(parse_label(k), *inf)).collect();
        s.sort();
        s
    }
}

/// Configuration class of a quartic relative to `Z = 0`.
#[derive(Clone, Debug)]
pub struct QlClass {
    pub index: Option<u8>,
    pub signature: Signature,
    pub infinity: InfinityCase,
    pub locus: SingularLocus,
}

impl QlClass {
    pub fn describe(&self) -> String {
        let idx = self.index.map(|i| format!("QL({i})")).unwrap_or_else(|| "none".into());
        format!("{idx}: {} {}", format_signature(&self.signature), self.infinity)
    }
}

pub fn ql_row(index: u8) -> Option<&'static QlRow> {
    QL_TABLE.iter().find(|r| r.index == index)
}

/// Intersection pattern of the curve with `Z = 0`: multiplicities of the
/// distinct intersection points, from the squarefree decomposition of `F(X, Y, 0)`.
pub fn infinity_multiplicities(f: &MultiPoly) -> Result<Vec<u32>, LocalError> {
    let tower = f.tower().clone();
    let f = lifted(f, &tower)?;
    let d = f.degree();
    let b = univariate_restriction(&f, &tower, [None, Some(Coeff::one()), Some(Coeff::zero())]);
    if b.is_empty() {
        return Err(LocalError::LineContained);
    }
    let mut mults: Vec<u32> = Vec::new();
    for (factor, m) in upoly::squarefree_decomposition(&tower, &b)? {
        for _ in 0..upoly::degree(&factor).unwrap_or(0) {
            mults.push(m as u32);
        }
    }
    let deg_b = upoly::degree(&b).unwrap_or(0) as u32;
    if deg_b < d {
        mults.push(d - deg_b);
    }
    mults.sort_unstable_by(|a, b| b.cmp(a));
    Ok(mults)
}

/// Classify a reduced quartic against the configuration table.
pub fn classify_ql(q: &MultiPoly) -> Result<QlClass, LocalError> {
    let locus = singular_points(q)?;
    if !locus.unresolved.is_empty() {
        return Err(LocalError::UnresolvedSingularLocus(locus.unresolved.clone()));
    }
    let signature = locus.signature();
    let infinity = match infinity_multiplicities(q) {
        Err(LocalError::LineContained) => InfinityCase::Other,
        Err(e) => return Err(e),
        Ok(mults) => {
            let sing_inf: Vec<&SingularPoint> = locus.points.iter().filter(|p| p.at_infinity()).collect();
            match (mults.as_slice(), sing_inf.len()) {
                ([2, 2], 0) => InfinityCase::I,
                ([2, 2], 1) => InfinityCase::II,
                ([2, 2], 2) => InfinityCase::III,
                ([4], 0) => InfinityCase::IV,
                ([4], 1) => InfinityCase::V,
                _ => InfinityCase::Other,
            }
        }
    };
    let index = if q.degree() == 4 {
        QL_TABLE
            .iter()
            .find(|row| row.infinity == infinity && row.signature() == signature)
            .map(|row| row.index)
    } else {
        None
    };
    Ok(QlClass { index, signature, infinity, locus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn q(s: &str) -> MultiPoly {
        parse_poly(&PolyRing::projective(FieldTower::rationals()), s).unwrap()
    }

    fn uv(s: &str) -> MultiPoly {
        parse_poly(&PolyRing::new(FieldTower::rationals(), &["u", "v"]), s).unwrap()
    }

    #[test]
    fn milnor_of_a_n_and_e6() {
        for n in 1..=7u32 {
            assert_eq!(milnor_number_affine(&uv(&format!("u^2 + v^{}", n + 1))).unwrap(), n);
        }
        assert_eq!(milnor_number_affine(&uv("u^3 + v^4")).unwrap(), 6);
        assert_eq!(milnor_number_affine(&uv("v^2 - u^3")).unwrap(), 2);
    }

    #[test]
    fn non_isolated_is_reported() {
        assert!(matches!(milnor_number_affine(&uv("u^2*v^2")), Err(LocalError::NonIsolated(_))));
    }

    #[test]
    fn cusp_multiplicity_and_type() {
        let f = q("Y^2*Z - X^3");
        let k = FieldTower::rationals();
        let o = ProjPoint::from_ints(&k, [0, 0, 1]);
        assert_eq!(multiplicity(&f, &o).unwrap(), 2);
        assert_eq!(classify_singularity(&f, &o, None).unwrap(), LocalType::a(2));
        assert_eq!(multiplicity(&f, &ProjPoint::from_ints(&k, [1, 1, 1])).unwrap(), 1);
    }

    #[test]
    fn four_concurrent_lines() {
        let f = q("X*Y*(X - Y)*(X + 2*Y)");
        let p = ProjPoint::from_ints(&FieldTower::rationals(), [0, 0, 1]);
        assert_eq!(multiplicity(&f, &p).unwrap(), 4);
        assert_eq!(classify_singularity(&f, &p, None).unwrap(), LocalType::LineArrangement { lines: 4 });
    }

    #[test]
    fn e6_example() {
        let f = q("(X^2 + Y^2)^2 + X^3*Z");
        let p = ProjPoint::from_ints(&FieldTower::rationals(), [0, 0, 1]);
        assert_eq!(classify_singularity(&f, &p, None).unwrap(), LocalType::E6);
    }

    #[test]
    fn line_multiplicities() {
        let f = q("(X^2 - Y^2 - Z^2)^2 + Y^3*Z");
        let z = q("Z");
        let k = FieldTower::rationals();
        assert_eq!(line_intersection_multiplicity(&f, &z, &ProjPoint::from_ints(&k, [1, 1, 0])).unwrap(), 2);
        let g = q("X*Z - Y^2");
        assert_eq!(line_intersection_multiplicity(&g, &q("X"), &ProjPoint::from_ints(&k, [0, 0, 1])).unwrap(), 2);
        assert_eq!(line_intersection_multiplicity(&g, &q("X - Z"), &ProjPoint::from_ints(&k, [1, 1, 1])).unwrap(), 1);
        assert!(matches!(
            line_intersection_multiplicity(&q("X*(X^2 + Y*Z)"), &q("X"), &ProjPoint::from_ints(&k, [0, 1, 0])),
            Err(LocalError::LineContained)
        ));
    }

    #[test]
    fn smooth_conic_has_no_singular_points() {
        let l = singular_points(&q("X^2 + Y*Z")).unwrap();
        assert!(l.points.is_empty());
        assert!(l.unresolved.is_empty());
    }

    #[test]
    fn three_cuspidal_quartic() {
        let f = q("Z^4 - 6*(X^2 + Y^2)*Z^2 + 8*(X^2 - 3*Y^2)*X*Z - 3*(X^2 + Y^2)^2");
        let l = singular_points(&f).unwrap();
        assert_eq!(l.points.len(), 3);
        assert!(l.points.iter().all(|p| p.kind == LocalType::a(2)));
        let c = classify_ql(&f).unwrap();
        assert_eq!(c.index, Some(5));
    }

    #[test]
    fn fermat_quartic_is_unclassified() {
        let c = classify_ql(&q("X^4 + Y^4 + Z^4")).unwrap();
        assert!(c.signature.is_empty());
        assert_eq!(c.index, None);
    }

    #[test]
    fn ql12_example() {
        let c = classify_ql(&q("Y^3*Z + X^4")).unwrap();
        assert_eq!(c.index, Some(12));
        assert_eq!(c.infinity, InfinityCase::IV);
    }

    #[test]
    fn non_reduced_rejected() {
        assert!(matches!(singular_points(&q("(X^2 + Y*Z)^2")), Err(LocalError::NonReducedCurve(_))));
    }

    #[test]
    fn oracle_examples() {
        let inc = |a, b, s| LocalIncidence { iota1: a, iota2: b, c2_smooth: s };
        assert_eq!(lemma_oracle_visible(&inc(2, 0, true), true, false).unwrap(), LocalType::a(5));
        assert_eq!(lemma_oracle_visible(&inc(1, 1, true), true, true).unwrap(), LocalType::a(3));
        assert_eq!(lemma_oracle_visible(&inc(2, 0, false), true, false).unwrap(), LocalType::E6);
        assert!(lemma_oracle_visible(&inc(2, 2, true), true, true).is_err());
        assert_eq!(lemma_oracle_invisible24(2, true).unwrap(), LocalType::a(7));
        assert_eq!(lemma_oracle_invisible24(1, false).unwrap(), LocalType::LineArrangement { lines: 4 });
        assert_eq!(lemma_oracle_invisible24(0, true).unwrap(), LocalType::a(1));
        assert_eq!(lemma_oracle_invisible23(true, false).len(), 2);
        assert_eq!(lemma_oracle_invisible23(true, true).len(), 1);
    }
}
