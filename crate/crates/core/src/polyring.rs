//! Sparse multivariate polynomials over a [`FieldTower`].
//!
//! Monomials are fixed-length exponent vectors over the ring's declared
//! variables. Terms live in a `BTreeMap`, so the map order is lexicographic
//! and the last key is the lex-leading monomial. Printing uses graded lex.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed};
use smallvec::SmallVec;
use thiserror::Error;

use crate::fieldtower::{format_rational, same_tower, Coeff, FieldTower, TowerError};
use crate::upoly;

pub type Monomial = SmallVec<[u16; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("inexact division: `{dividend}` is not a multiple of `{divisor}`")]
    InexactDivision { dividend: String, divisor: String },
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("polynomials live in different rings")]
    RingMismatch,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("polynomial is not homogeneous in X, Y, Z")]
    NotHomogeneous,
    #[error("transform matrix is singular")]
    SingularTransform,
    #[error(transparent)]
    Tower(#[from] TowerError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyRing {
    tower: Arc<FieldTower>,
    vars: Vec<String>,
}

impl PolyRing {
    pub fn new(tower: Arc<FieldTower>, vars: &[&str]) -> Arc<Self> {
        Arc::new(PolyRing { tower, vars: vars.iter().map(|s| s.to_string()).collect() })
    }

    pub fn from_names(tower: Arc<FieldTower>, vars: Vec<String>) -> Arc<Self> {
        Arc::new(PolyRing { tower, vars })
    }

    /// The ring of forms in `X, Y, Z`.
    pub fn projective(tower: Arc<FieldTower>) -> Arc<Self> {
        Self::new(tower, &["X", "Y", "Z"])
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn with_tower(&self, tower: Arc<FieldTower>) -> Arc<Self> {
        Arc::new(PolyRing { tower, vars: self.vars.clone() })
    }

    fn zero_exp(&self) -> Monomial {
        SmallVec::from_elem(0, self.vars.len())
    }
}

pub fn same_ring(a: &Arc<PolyRing>, b: &Arc<PolyRing>) -> bool {
    Arc::ptr_eq(a, b) || (a.vars == b.vars && same_tower(&a.tower, &b.tower))
}

#[derive(Clone, Debug)]
pub struct MultiPoly {
    ring: Arc<PolyRing>,
    terms: BTreeMap<Monomial, Coeff>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        same_ring(&self.ring, &other.ring) && self.terms == other.terms
    }
}

fn mono_add(a: &Monomial, b: &Monomial) -> Monomial {
    a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
}

fn mono_divides(a: &Monomial, b: &Monomial) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x <= y)
}

fn mono_sub(b: &Monomial, a: &Monomial) -> Monomial {
    b.iter().zip(a.iter()).map(|(x, y)| x - y).collect()
}

fn mono_degree(m: &Monomial) -> u32 {
    m.iter().map(|&e| e as u32).sum()
}

fn grlex_desc(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    mono_degree(b).cmp(&mono_degree(a)).then_with(|| b.cmp(a))
}

impl MultiPoly {
    pub fn zero(ring: &Arc<PolyRing>) -> Self {
        MultiPoly { ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn one(ring: &Arc<PolyRing>) -> Self {
        Self::constant(ring, Coeff::one())
    }

    pub fn from_int(ring: &Arc<PolyRing>, n: i64) -> Self {
        Self::constant(ring, Coeff::from_int(n))
    }

    pub fn constant(ring: &Arc<PolyRing>, c: Coeff) -> Self {
        let c = ring.tower.reduce(c);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(ring.zero_exp(), c);
        }
        MultiPoly { ring: ring.clone(), terms }
    }

    pub fn var(ring: &Arc<PolyRing>, index: usize) -> Self {
        let mut e = ring.zero_exp();
        e[index] = 1;
        MultiPoly { ring: ring.clone(), terms: BTreeMap::from([(e, Coeff::one())]) }
    }

    pub fn var_named(ring: &Arc<PolyRing>, name: &str) -> Result<Self, PolyError> {
        let i = ring.var_index(name).ok_or_else(|| PolyError::UnknownVariable(name.into()))?;
        Ok(Self::var(ring, i))
    }

    pub fn monomial(ring: &Arc<PolyRing>, exp: Monomial, c: Coeff) -> Self {
        Self::from_terms(ring, [(exp, c)])
    }

    pub fn from_terms(ring: &Arc<PolyRing>, terms: impl IntoIterator<Item = (Monomial, Coeff)>) -> Self {
        let mut map: BTreeMap<Monomial, Coeff> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), ring.nvars(), "monomial arity");
            let entry = map.entry(e).or_insert_with(Coeff::zero);
            *entry = entry.add(&c);
        }
        let tower = &ring.tower;
        let terms = map
            .into_iter()
            .map(|(e, c)| (e, tower.reduce(c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        MultiPoly { ring: ring.clone(), terms }
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.ring.tower
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn constant_value(&self) -> Option<Coeff> {
        self.is_constant().then(|| self.terms.values().next().cloned().unwrap_or_default())
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(mono_degree).max().unwrap_or(0)
    }

    /// Lowest total degree among the terms; 0 for the zero polynomial.
    pub fn order(&self) -> u32 {
        self.terms.keys().map(mono_degree).min().unwrap_or(0)
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|e| e[v] as u32).max().unwrap_or(0)
    }

    pub fn involves(&self, v: usize) -> bool {
        self.terms.keys().any(|e| e[v] > 0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys().map(mono_degree);
        match it.next() {
            None => true,
            Some(d) => it.all(|x| x == d),
        }
    }

    /// Sum of the terms of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        MultiPoly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| mono_degree(e) == d)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    fn check(&self, other: &Self) {
        assert!(same_ring(&self.ring, &other.ring), "polynomials from different rings");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            match terms.get_mut(e) {
                Some(x) => {
                    *x = x.add(c);
                    if x.is_zero() {
                        terms.remove(e);
                    }
                }
                None => {
                    terms.insert(e.clone(), c.clone());
                }
            }
        }
        MultiPoly { ring: self.ring.clone(), terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        MultiPoly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.ring);
        }
        let tower = &self.ring.tower;
        let mut terms: BTreeMap<Monomial, Coeff> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = mono_add(ea, eb);
                let c = tower.mul(ca, cb);
                let entry = terms.entry(e).or_insert_with(Coeff::zero);
                *entry = entry.add(&c);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        MultiPoly { ring: self.ring.clone(), terms }
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        let tower = &self.ring.tower;
        let terms = self
            .terms
            .iter()
            .map(|(e, x)| (e.clone(), tower.mul(x, c)))
            .filter(|(_, x)| !x.is_zero())
            .collect();
        MultiPoly { ring: self.ring.clone(), terms }
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        self.scale(&Coeff::from_rational(r.clone()))
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&Coeff::from_int(n))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut result = Self::one(&self.ring);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiply by the monomial `x_v^k`.
    pub fn shift(&self, v: usize, k: u16) -> Self {
        MultiPoly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e[v] += k;
                    (e, c.clone())
                })
                .collect(),
        }
    }

    pub fn derivative(&self, v: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[v] > 0)
            .map(|(e, c)| {
                let mut ne = e.clone();
                let k = ne[v];
                ne[v] -= 1;
                (ne, c.scale(&BigRational::from_integer(k.into())))
            })
            .collect();
        MultiPoly { ring: self.ring.clone(), terms }
    }

    /// Exact quotient `self / d`, or `InexactDivision`.
    pub fn exact_div(&self, d: &Self) -> Result<Self, PolyError> {
        self.check(d);
        if d.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let tower = self.ring.tower.clone();
        let inexact = || PolyError::InexactDivision { dividend: self.to_string(), divisor: d.to_string() };
        if let Some(c) = d.constant_value() {
            let mut terms = BTreeMap::new();
            for (e, x) in &self.terms {
                let q = tower.exact_div(x, &c).map_err(|err| match err {
                    TowerError::NotExactlyDivisible(..) => inexact(),
                    other => PolyError::Tower(other),
                })?;
                terms.insert(e.clone(), q);
            }
            return Ok(MultiPoly { ring: self.ring.clone(), terms });
        }
        let (lead_e, lead_c) = d.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())).unwrap();
        let mut rem = self.terms.clone();
        let mut quot: BTreeMap<Monomial, Coeff> = BTreeMap::new();
        while let Some((e, c)) = rem.iter().next_back().map(|(e, c)| (e.clone(), c.clone())) {
            if !mono_divides(&lead_e, &e) {
                return Err(inexact());
            }
            let qe = mono_sub(&e, &lead_e);
            let qc = tower.exact_div(&c, &lead_c).map_err(|err| match err {
                TowerError::NotExactlyDivisible(..) => inexact(),
                other => PolyError::Tower(other),
            })?;
            for (de, dc) in &d.terms {
                let ne = mono_add(&qe, de);
                let sub = tower.mul(&qc, dc);
                let entry = rem.entry(ne.clone()).or_insert_with(Coeff::zero);
                *entry = entry.sub(&sub);
                if entry.is_zero() {
                    rem.remove(&ne);
                }
            }
            quot.insert(qe, qc);
        }
        Ok(MultiPoly { ring: self.ring.clone(), terms: quot })
    }

    pub fn divides(&self, other: &Self) -> bool {
        other.exact_div(self).is_ok()
    }

    /// Simultaneous substitution of every variable by a polynomial in `target`.
    pub fn compose(&self, images: &[MultiPoly]) -> Self {
        assert_eq!(images.len(), self.ring.nvars());
        let target = images
            .first()
            .map(|p| p.ring.clone())
            .unwrap_or_else(|| self.ring.clone());
        let mut powers: Vec<Vec<MultiPoly>> = images.iter().map(|p| vec![MultiPoly::one(&target), p.clone()]).collect();
        let mut out = MultiPoly::zero(&target);
        for (e, c) in &self.terms {
            let mut term = MultiPoly::constant(&target, c.clone());
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[v].len() <= k as usize {
                    let next = powers[v].last().unwrap().mul(&images[v]);
                    powers[v].push(next);
                }
                term = term.mul(&powers[v][k as usize]);
            }
            out = out.add(&term);
        }
        out
    }

    /// Substitute the given variables, keeping the others.
    pub fn substitute(&self, bindings: &[(usize, MultiPoly)]) -> Self {
        let images: Vec<MultiPoly> = (0..self.ring.nvars())
            .map(|v| {
                bindings
                    .iter()
                    .find(|(w, _)| *w == v)
                    .map(|(_, p)| p.clone())
                    .unwrap_or_else(|| MultiPoly::var(&self.ring, v))
            })
            .collect();
        self.compose(&images)
    }

    /// Set variable `v` to the constant `x`.
    pub fn eval_var(&self, v: usize, x: &Coeff) -> Self {
        let tower = &self.ring.tower;
        let mut pw: Vec<Coeff> = vec![Coeff::one()];
        let mut map: BTreeMap<Monomial, Coeff> = BTreeMap::new();
        for (e, c) in &self.terms {
            let k = e[v] as usize;
            while pw.len() <= k {
                let next = tower.mul(pw.last().unwrap(), x);
                pw.push(next);
            }
            let mut ne = e.clone();
            ne[v] = 0;
            let entry = map.entry(ne).or_insert_with(Coeff::zero);
            *entry = entry.add(&tower.mul(c, &pw[k]));
        }
        map.retain(|_, c| !c.is_zero());
        MultiPoly { ring: self.ring.clone(), terms: map }
    }

    /// Evaluate at a full point.
    pub fn eval(&self, point: &[Coeff]) -> Coeff {
        let mut p = self.clone();
        for (v, x) in point.iter().enumerate() {
            p = p.eval_var(v, x);
        }
        p.constant_value().unwrap()
    }

    /// Coefficients as a univariate polynomial in `v`, lowest degree first.
    pub fn coeffs_in(&self, v: usize) -> Vec<MultiPoly> {
        let d = self.degree_in(v) as usize;
        let mut out: Vec<BTreeMap<Monomial, Coeff>> = vec![BTreeMap::new(); if self.is_zero() { 0 } else { d + 1 }];
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let k = ne[v] as usize;
            ne[v] = 0;
            out[k].insert(ne, c.clone());
        }
        out.into_iter().map(|terms| MultiPoly { ring: self.ring.clone(), terms }).collect()
    }

    pub fn from_coeffs_in(ring: &Arc<PolyRing>, v: usize, coeffs: &[MultiPoly]) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in coeffs.iter().enumerate() {
            for (e, x) in &c.terms {
                let mut ne = e.clone();
                ne[v] += k as u16;
                terms.insert(ne, x.clone());
            }
        }
        MultiPoly { ring: ring.clone(), terms }
    }

    /// Univariate coefficient list, when only `v` occurs.
    pub fn to_univariate(&self, v: usize) -> Option<upoly::UPoly> {
        if self.terms.keys().any(|e| e.iter().enumerate().any(|(i, &k)| i != v && k > 0)) {
            return None;
        }
        let d = self.degree_in(v) as usize;
        let mut out = vec![Coeff::zero(); if self.is_zero() { 0 } else { d + 1 }];
        for (e, c) in &self.terms {
            out[e[v] as usize] = c.clone();
        }
        Some(out)
    }

    pub fn from_univariate(ring: &Arc<PolyRing>, v: usize, p: &[Coeff]) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in p.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut e = ring.zero_exp();
            e[v] = k as u16;
            terms.insert(e, c.clone());
        }
        MultiPoly { ring: ring.clone(), terms }
    }

    /// Leading coefficient under graded lex (the first printed term).
    pub fn leading_coeff(&self) -> Option<Coeff> {
        self.terms.iter().min_by(|a, b| grlex_desc(a.0, b.0)).map(|(_, c)| c.clone())
    }

    /// Scale so the graded-lex leading coefficient is 1.
    pub fn monic(&self) -> Result<Self, PolyError> {
        match self.leading_coeff() {
            None => Ok(self.clone()),
            Some(c) if c.is_one() => Ok(self.clone()),
            Some(c) => Ok(self.scale(&self.ring.tower.inv(&c)?)),
        }
    }

    /// [`monic`](Self::monic) when the leading coefficient is invertible,
    /// otherwise the polynomial made integral-primitive over the rationals.
    pub fn normalized(&self) -> Self {
        self.monic().unwrap_or_else(|_| self.clone())
    }

    /// Same polynomial viewed in a ring over a larger tower with the same variables.
    pub fn lift(&self, ring: &Arc<PolyRing>) -> Self {
        assert!(self.ring.tower.is_prefix_of(&ring.tower) && self.ring.vars == ring.vars, "cannot lift");
        MultiPoly { ring: ring.clone(), terms: self.terms.clone() }
    }

    /// Same terms reinterpreted in a ring with the same variables.
    pub(crate) fn with_ring_unchecked(&self, ring: &Arc<PolyRing>) -> Self {
        MultiPoly { ring: ring.clone(), terms: self.terms.clone() }
    }

    /// Apply a map to every coefficient, landing in `ring`.
    pub fn map_coeffs(&self, ring: &Arc<PolyRing>, f: impl Fn(&Coeff) -> Coeff) -> Self {
        MultiPoly::from_terms(ring, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    /// Rename/reorder variables: variable `i` of `self` becomes variable `map[i]` of `ring`.
    pub fn remap_vars(&self, ring: &Arc<PolyRing>, map: &[usize]) -> Self {
        let terms = self.terms.iter().map(|(e, c)| {
            let mut ne = ring.zero_exp();
            for (i, &k) in e.iter().enumerate() {
                ne[map[i]] += k;
            }
            (ne, c.clone())
        });
        MultiPoly::from_terms(ring, terms)
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms: Vec<(&Monomial, &Coeff)> = self.terms.iter().collect();
        terms.sort_by(|a, b| grlex_desc(a.0, b.0));
        let tower = &self.ring.tower;
        let mut first = true;
        for (e, c) in terms {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| {
                    if k == 1 {
                        self.ring.vars[v].clone()
                    } else {
                        format!("{}^{}", self.ring.vars[v], k)
                    }
                })
                .collect();
            let mono = mono.join("*");
            let (neg, body) = match c.as_rational() {
                Some(r) => {
                    let abs = r.abs();
                    let s = if mono.is_empty() {
                        format_rational(&abs)
                    } else if abs.is_one() {
                        mono.clone()
                    } else {
                        format!("{}*{}", format_rational(&abs), mono)
                    };
                    (r.is_negative(), s)
                }
                None if c.terms().len() == 1 => {
                    let r = &c.terms()[0].1;
                    let positive = Coeff::from_map(BTreeMap::from([(c.terms()[0].0.clone(), r.abs())]));
                    let cs = tower.format(&positive);
                    let s = if mono.is_empty() { cs } else { format!("{cs}*{mono}") };
                    (r.is_negative(), s)
                }
                None => {
                    let cs = tower.format(c);
                    let s = if mono.is_empty() { format!("({cs})") } else { format!("({cs})*{mono}") };
                    (false, s)
                }
            };
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            f.write_str(&body)?;
            first = false;
        }
        Ok(())
    }
}

impl std::ops::Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::add(self, rhs)
    }
}

impl std::ops::Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::sub(self, rhs)
    }
}

impl std::ops::Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        MultiPoly::mul(self, rhs)
    }
}

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Recursive gcd and resultant over K[other variables][v].

type Uni = Vec<MultiPoly>;

fn uni_trim(mut a: Uni) -> Uni {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn uni_deg(a: &Uni) -> usize {
    a.len().saturating_sub(1)
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) * a mod b`.
fn uni_prem(a: &Uni, b: &Uni) -> Uni {
    let db = uni_deg(b);
    let lb = b.last().unwrap();
    let mut r = a.clone();
    if r.len() <= db {
        return r;
    }
    let mut e = r.len() - db;
    while !r.is_empty() && r.len() > db {
        let lr = r.last().unwrap().clone();
        let shift = r.len() - 1 - db;
        let mut next: Uni = r.iter().map(|c| c.mul(lb)).collect();
        for (i, bc) in b.iter().enumerate() {
            next[shift + i] = next[shift + i].sub(&lr.mul(bc));
        }
        next.pop();
        r = uni_trim(next);
        e -= 1;
    }
    if e > 0 {
        let f = lb.pow(e as u32);
        r = r.iter().map(|c| c.mul(&f)).collect();
    }
    r
}

fn uni_div_scalar(a: &Uni, d: &MultiPoly) -> Result<Uni, PolyError> {
    a.iter().map(|c| c.exact_div(d)).collect()
}

/// Pseudo-remainder of `a` by `b` as polynomials in `v`.
pub fn prem(a: &MultiPoly, b: &MultiPoly, v: usize) -> MultiPoly {
    let r = uni_prem(&a.coeffs_in(v), &b.coeffs_in(v));
    MultiPoly::from_coeffs_in(a.ring(), v, &r)
}

fn main_var(a: &MultiPoly, b: &MultiPoly) -> Option<usize> {
    (0..a.ring.nvars()).rev().find(|&v| a.involves(v) || b.involves(v))
}

/// Content of `a` with respect to `v`: gcd of its coefficients in `v`.
pub fn content_in(a: &MultiPoly, v: usize) -> Result<MultiPoly, PolyError> {
    let mut g = MultiPoly::zero(a.ring());
    for c in a.coeffs_in(v) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c)?;
        if g.is_constant() {
            return Ok(MultiPoly::one(a.ring()));
        }
    }
    Ok(g)
}

/// Greatest common divisor, normalized to graded-lex leading coefficient 1
/// where that coefficient is invertible. Constants of the tower count as units.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> Result<MultiPoly, PolyError> {
    a.check(b);
    if a.is_zero() {
        return Ok(b.normalized());
    }
    if b.is_zero() {
        return Ok(a.normalized());
    }
    if a.is_constant() || b.is_constant() {
        return Ok(MultiPoly::one(a.ring()));
    }
    let v = main_var(a, b).unwrap();
    if !a.involves(v) {
        return gcd(a, &content_in(b, v)?);
    }
    if !b.involves(v) {
        return gcd(&content_in(a, v)?, b);
    }
    let ca = content_in(a, v)?;
    let cb = content_in(b, v)?;
    let d = gcd(&ca, &cb)?;
    let pa = a.exact_div(&ca)?;
    let pb = b.exact_div(&cb)?;
    let g = subresultant_gcd(&pa.coeffs_in(v), &pb.coeffs_in(v))?;
    let g = MultiPoly::from_coeffs_in(a.ring(), v, &g);
    let g = if uni_deg(&g.coeffs_in(v)) == 0 {
        MultiPoly::one(a.ring())
    } else {
        g.exact_div(&content_in(&g, v)?)?
    };
    Ok(d.mul(&g).normalized())
}

/// Spec-style gcd as univariate in `v`: primitive part of the full gcd in `v`.
pub fn gcd_in(a: &MultiPoly, b: &MultiPoly, v: usize) -> Result<MultiPoly, PolyError> {
    let g = gcd(a, b)?;
    if g.involves(v) {
        Ok(g.exact_div(&content_in(&g, v)?)?.normalized())
    } else {
        Ok(MultiPoly::one(a.ring()))
    }
}

/// Subresultant PRS on primitive inputs; returns the last nonzero remainder.
fn subresultant_gcd(a: &Uni, b: &Uni) -> Result<Uni, PolyError> {
    let (mut a, mut b) = if uni_deg(a) >= uni_deg(b) { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    let ring = a[0].ring().clone();
    let mut g = MultiPoly::one(&ring);
    let mut h = MultiPoly::one(&ring);
    loop {
        let delta = uni_deg(&a) - uni_deg(&b);
        let r = uni_prem(&a, &b);
        if r.is_empty() {
            return Ok(b);
        }
        if uni_deg(&r) == 0 {
            return Ok(vec![MultiPoly::one(&ring)]);
        }
        a = b;
        let den = g.mul(&h.pow(delta as u32));
        b = uni_div_scalar(&r, &den)?;
        g = a.last().unwrap().clone();
        h = if delta == 0 {
            h
        } else {
            g.pow(delta as u32).exact_div(&h.pow(delta as u32 - 1))?
        };
    }
}

/// Resultant with respect to `v`, with the convention
/// `Res(p, q) = lc(p)^deg(q) * prod q(alpha)` over the roots of `p`.
pub fn resultant(p: &MultiPoly, q: &MultiPoly, v: usize) -> Result<MultiPoly, PolyError> {
    p.check(q);
    let ring = p.ring().clone();
    if p.is_zero() || q.is_zero() {
        return Ok(MultiPoly::zero(&ring));
    }
    let mut a = p.coeffs_in(v);
    let mut b = q.coeffs_in(v);
    let (da0, db0) = (uni_deg(&a), uni_deg(&b));
    if db0 == 0 {
        return Ok(b[0].pow(da0 as u32));
    }
    if da0 == 0 {
        return Ok(a[0].pow(db0 as u32));
    }
    let mut s_neg = false;
    if da0 < db0 {
        std::mem::swap(&mut a, &mut b);
        if da0 % 2 == 1 && db0 % 2 == 1 {
            s_neg = !s_neg;
        }
    }
    let mut g = MultiPoly::one(&ring);
    let mut h = MultiPoly::one(&ring);
    loop {
        let (da, db) = (uni_deg(&a), uni_deg(&b));
        let delta = da - db;
        if da % 2 == 1 && db % 2 == 1 {
            s_neg = !s_neg;
        }
        let r = uni_prem(&a, &b);
        a = b;
        let den = g.mul(&h.pow(delta as u32));
        b = uni_div_scalar(&r, &den)?;
        g = a.last().unwrap().clone();
        h = if delta == 0 {
            h
        } else {
            g.pow(delta as u32).exact_div(&h.pow(delta as u32 - 1))?
        };
        if b.is_empty() {
            return Ok(MultiPoly::zero(&ring));
        }
        if uni_deg(&b) == 0 {
            break;
        }
    }
    let da = uni_deg(&a) as u32;
    let lb = b[0].clone();
    let res = if da == 0 {
        h
    } else {
        lb.pow(da).exact_div(&h.pow(da - 1))?
    };
    Ok(if s_neg { res.neg() } else { res })
}

/// True when `gcd(a, b)` is a constant.
pub fn coprime(a: &MultiPoly, b: &MultiPoly) -> Result<bool, PolyError> {
    Ok(gcd(a, b)?.is_constant())
}

// ---------------------------------------------------------------------------
// Projective transforms of X, Y, Z.

/// Linear change of coordinates `(X:Y:Z) -> (X:Y:Z) A` (row vector times matrix).
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveTransform {
    tower: Arc<FieldTower>,
    m: [[Coeff; 3]; 3],
}

impl ProjectiveTransform {
    pub fn new(tower: Arc<FieldTower>, m: [[Coeff; 3]; 3]) -> Result<Self, PolyError> {
        let m = m.map(|row| row.map(|c| tower.reduce(c)));
        let t = ProjectiveTransform { tower, m };
        if t.det().is_zero() {
            return Err(PolyError::SingularTransform);
        }
        Ok(t)
    }

    pub fn identity(tower: Arc<FieldTower>) -> Self {
        let o = Coeff::one;
        let z = Coeff::zero;
        ProjectiveTransform { tower, m: [[o(), z(), z()], [z(), o(), z()], [z(), z(), o()]] }
    }

    pub fn matrix(&self) -> &[[Coeff; 3]; 3] {
        &self.m
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn det(&self) -> Coeff {
        let k = &self.tower;
        let m = &self.m;
        let minor = |a: usize, b: usize, c: usize, d: usize| {
            k.mul(&m[1][a], &m[2][b]).sub(&k.mul(&m[1][c], &m[2][d]))
        };
        k.mul(&m[0][0], &minor(1, 2, 2, 1))
            .sub(&k.mul(&m[0][1], &minor(0, 2, 2, 0)))
            .add(&k.mul(&m[0][2], &minor(0, 1, 1, 0)))
    }

    /// Matrix product `self * other`; as coordinate changes, applying the
    /// product equals applying `self` after `other` on polynomials.
    pub fn compose(&self, other: &Self) -> Self {
        let k = &self.tower;
        let mut m: [[Coeff; 3]; 3] = Default::default();
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = Coeff::zero();
                for l in 0..3 {
                    acc = acc.add(&k.mul(&self.m[i][l], &other.m[l][j]));
                }
                *cell = acc;
            }
        }
        ProjectiveTransform { tower: self.tower.clone(), m }
    }

    pub fn inverse(&self) -> Result<Self, PolyError> {
        let k = &self.tower;
        let d = k.inv(&self.det())?;
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            k.mul(&m[r0][c0], &m[r1][c1]).sub(&k.mul(&m[r0][c1], &m[r1][c0]))
        };
        let mut inv: [[Coeff; 3]; 3] = Default::default();
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let rows: Vec<usize> = (0..3).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..3).filter(|&c| c != i).collect();
                let mut c = cof(rows[0], rows[1], cols[0], cols[1]);
                if (i + j) % 2 == 1 {
                    c = c.neg();
                }
                *cell = k.mul(&c, &d);
            }
        }
        Ok(ProjectiveTransform { tower: self.tower.clone(), m: inv })
    }

    /// True when the matrix is a nonzero scalar multiple of the identity.
    pub fn is_projective_identity(&self) -> bool {
        let d = &self.m[0][0];
        !d.is_zero()
            && (0..3).all(|i| (0..3).all(|j| if i == j { self.m[i][j] == *d } else { self.m[i][j].is_zero() }))
    }

    /// `p((X, Y, Z) A)`. Other variables of the ring are left alone.
    pub fn apply(&self, p: &MultiPoly) -> Result<MultiPoly, PolyError> {
        let ring = p.ring().clone();
        let idx: Vec<usize> = ["X", "Y", "Z"]
            .iter()
            .map(|n| ring.var_index(n).ok_or_else(|| PolyError::UnknownVariable(n.to_string())))
            .collect::<Result<_, _>>()?;
        let ring_k = if self.tower.is_prefix_of(ring.tower()) {
            ring.clone()
        } else if ring.tower().is_prefix_of(&self.tower) {
            ring.with_tower(self.tower.clone())
        } else {
            return Err(PolyError::RingMismatch);
        };
        let p = p.with_ring_unchecked(&ring_k);
        let vars: Vec<MultiPoly> = idx.iter().map(|&i| MultiPoly::var(&ring_k, i)).collect();
        let mut images: Vec<MultiPoly> = (0..ring_k.nvars()).map(|v| MultiPoly::var(&ring_k, v)).collect();
        for (j, &target) in idx.iter().enumerate() {
            let mut img = MultiPoly::zero(&ring_k);
            for (i, var) in vars.iter().enumerate() {
                img = img.add(&var.scale(&self.m[i][j]));
            }
            images[target] = img;
        }
        Ok(p.compose(&images))
    }
}

// ---------------------------------------------------------------------------
// Linear factors of ternary forms.

/// Result of [`factor_linear`].
#[derive(Clone, Debug)]
pub struct LinearFactors {
    pub ring: Arc<PolyRing>,
    pub factors: Vec<(MultiPoly, u32)>,
    pub remainder: MultiPoly,
}

/// Extract linear factors of a form in `X, Y, Z`, over the tower or quadratic
/// radical extensions of it when `adjoin` is set.
pub fn factor_linear(p: &MultiPoly, adjoin: bool) -> Result<LinearFactors, PolyError> {
    if !p.is_homogeneous() {
        return Err(PolyError::NotHomogeneous);
    }
    let mut ring = p.ring().clone();
    let mut rem = p.clone();
    let mut factors: Vec<(MultiPoly, u32)> = Vec::new();
    let xyz: Vec<usize> = ["X", "Y", "Z"]
        .iter()
        .map(|n| ring.var_index(n).ok_or_else(|| PolyError::UnknownVariable(n.to_string())))
        .collect::<Result<_, _>>()?;
    let lin = |ring: &Arc<PolyRing>, c: [Coeff; 3]| {
        let mut l = MultiPoly::zero(ring);
        for (i, ci) in c.iter().enumerate() {
            l = l.add(&MultiPoly::var(ring, xyz[i]).scale(ci));
        }
        l
    };
    let push = |factors: &mut Vec<(MultiPoly, u32)>, rem: &mut MultiPoly, l: MultiPoly| -> Result<(), PolyError> {
        let l = l.monic()?;
        let mut k = 0;
        while let Ok(q) = rem.exact_div(&l) {
            *rem = q;
            k += 1;
        }
        if k > 0 {
            factors.push((l, k));
        }
        Ok(())
    };
    // Two lines in general position, meeting at a point off the curve.
    let candidates: Vec<[i64; 3]> = vec![[1, 2, 3], [1, -3, 5], [2, 7, -1], [3, 1, 4], [5, -2, 7], [1, 1, -9]];
    let point_on = |a: &[i64; 3], b: &[i64; 3]| -> [i64; 3] {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    for ci in &candidates {
        let l = lin(&ring, ci.map(Coeff::from_int));
        push(&mut factors, &mut rem, l)?;
    }
    if rem.degree() == 0 {
        return Ok(LinearFactors { ring, factors, remainder: rem });
    }
    let mut chosen = None;
    'outer: for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let q = point_on(&candidates[i], &candidates[j]);
            let pt: Vec<Coeff> = (0..ring.nvars())
                .map(|v| xyz.iter().position(|&x| x == v).map(|k| Coeff::from_int(q[k])).unwrap_or_default())
                .collect();
            if !rem.eval(&pt).is_zero() {
                chosen = Some((candidates[i], candidates[j]));
                break 'outer;
            }
        }
    }
    let Some((la, lb)) = chosen else {
        return Ok(LinearFactors { ring, factors, remainder: rem });
    };
    // Points of each line: A + s B, with A, B two integer points spanning it.
    let span = |l: &[i64; 3]| -> ([i64; 3], [i64; 3]) {
        let e1 = [1, 0, 0];
        let e2 = [0, 1, 0];
        let e3 = [0, 0, 1];
        let mut pts: Vec<[i64; 3]> = vec![point_on(l, &e1), point_on(l, &e2), point_on(l, &e3)];
        pts.retain(|p| p.iter().any(|&x| x != 0));
        let a = pts[0];
        let b = pts.iter().copied().find(|p| point_on(&a, p).iter().any(|&x| x != 0)).unwrap();
        (a, b)
    };
    let line_points = |ring: &Arc<PolyRing>, rem: &MultiPoly, l: &[i64; 3]| -> Result<(Arc<FieldTower>, Vec<[Coeff; 3]>), PolyError> {
        let (a, b) = span(l);
        let tower = ring.tower().clone();
        let s_ring = PolyRing::new(tower.clone(), &["s"]);
        let s = MultiPoly::var(&s_ring, 0);
        let mut images = vec![MultiPoly::zero(&s_ring); ring.nvars()];
        for k in 0..3 {
            images[xyz[k]] = MultiPoly::from_int(&s_ring, a[k]).add(&s.scale_int(b[k]));
        }
        let restricted = rem.with_ring_unchecked(ring).compose(&images);
        let uni = restricted.to_univariate(0).unwrap();
        let r = upoly::roots(&tower, &uni, adjoin)?;
        let mut pts: Vec<[Coeff; 3]> = r
            .roots
            .iter()
            .map(|s| [0, 1, 2].map(|k| Coeff::from_int(a[k]).add(&s.scale(&BigRational::from_integer(b[k].into())))))
            .collect();
        if upoly::degree(&uni).unwrap_or(0) < rem.degree() as usize {
            pts.push(b.map(Coeff::from_int));
        }
        Ok((r.tower, pts))
    };
    let (t1, pa) = line_points(&ring, &rem, &la)?;
    ring = ring.with_tower(t1);
    let (t2, pb) = line_points(&ring, &rem, &lb)?;
    ring = ring.with_tower(t2);
    rem = rem.with_ring_unchecked(&ring);
    for (f, _) in factors.iter_mut() {
        *f = f.with_ring_unchecked(&ring);
    }
    let k = ring.tower().clone();
    for p in &pa {
        for q in &pb {
            if rem.degree() == 0 {
                break;
            }
            let c = [
                k.mul(&p[1], &q[2]).sub(&k.mul(&p[2], &q[1])),
                k.mul(&p[2], &q[0]).sub(&k.mul(&p[0], &q[2])),
                k.mul(&p[0], &q[1]).sub(&k.mul(&p[1], &q[0])),
            ];
            if c.iter().all(|x| x.is_zero()) {
                continue;
            }
            let l = lin(&ring, c);
            if l.monic().is_err() {
                continue;
            }
            push(&mut factors, &mut rem, l)?;
        }
    }
    Ok(LinearFactors { ring, factors, remainder: rem })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldtower::ExtensionStep;
    use crate::parse::parse_poly;
    use proptest::prelude::*;

    fn ring_q(vars: &[&str]) -> Arc<PolyRing> {
        PolyRing::new(FieldTower::rationals(), vars)
    }

    fn p(ring: &Arc<PolyRing>, s: &str) -> MultiPoly {
        parse_poly(ring, s).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let r = ring_q(&["X", "Y", "Z"]);
        assert_eq!(p(&r, "X - Y").mul(&p(&r, "X + Y")), p(&r, "X^2 - Y^2"));
    }

    #[test]
    fn inexact_division_is_reported() {
        let r = ring_q(&["X"]);
        assert!(matches!(p(&r, "X^2 + 1").exact_div(&p(&r, "X")), Err(PolyError::InexactDivision { .. })));
    }

    #[test]
    fn resultant_conventions() {
        let r = ring_q(&["x", "y", "a", "b"]);
        assert_eq!(resultant(&p(&r, "y^2 - x"), &p(&r, "y"), 1).unwrap(), p(&r, "-x"));
        assert_eq!(resultant(&p(&r, "y - a"), &p(&r, "y - b"), 1).unwrap(), p(&r, "a - b"));
    }

    #[test]
    fn resultant_of_two_conics_matches_elimination() {
        // Circle and hyperbola meeting at x^2 = 2 (twice each).
        let r = ring_q(&["x", "y"]);
        let a = p(&r, "x^2 + y^2 - 3");
        let b = p(&r, "x^2 - y^2 - 1");
        let res = resultant(&a, &b, 1).unwrap();
        assert_eq!(res, p(&r, "4*x^4 - 16*x^2 + 16"));
    }

    #[test]
    fn gcd_examples() {
        let r = ring_q(&["X", "Y", "Z"]);
        assert_eq!(gcd(&p(&r, "X^2 - Y^2"), &p(&r, "X - Y")).unwrap(), p(&r, "X - Y"));
        assert_eq!(gcd(&p(&r, "2*X^2 - 2*Y^2"), &MultiPoly::zero(&r)).unwrap(), p(&r, "X^2 - Y^2"));
        let a = p(&r, "(X + Y*Z)*(X^2 - Z^3 + Y)");
        let b = p(&r, "(X + Y*Z)*(X - Y)^2");
        assert_eq!(gcd(&a, &b).unwrap(), p(&r, "X + Y*Z"));
    }

    #[test]
    fn gcd_over_parameter_tower() {
        let t = FieldTower::rationals().extend(ExtensionStep::transcendental("t")).unwrap();
        let r = PolyRing::projective(t);
        let q = p(&r, "(X^2 - Y^2 - Z^2)^2 + t*Y^3*Z");
        let f2 = p(&r, "X^2 - Y^2 - Z^2");
        assert!(coprime(&q, &f2).unwrap());
    }

    #[test]
    fn transforms_compose_and_invert() {
        let r = ring_q(&["X", "Y", "Z"]);
        let k = r.tower().clone();
        let m = ProjectiveTransform::new(
            k.clone(),
            [[1, 2, 0], [0, 1, 3], [1, 0, 1]].map(|row| row.map(Coeff::from_int)),
        )
        .unwrap();
        let f = p(&r, "X^3 + Y*Z^2 - 2*X*Y*Z");
        let g = m.apply(&f).unwrap();
        assert!(g.is_homogeneous());
        assert_eq!(m.inverse().unwrap().apply(&g).unwrap(), f);
        assert!(m.compose(&m.inverse().unwrap()).is_projective_identity());
    }

    #[test]
    fn linear_factors() {
        let r = ring_q(&["X", "Y", "Z"]);
        let lf = factor_linear(&p(&r, "X^2 - Y^2"), false).unwrap();
        assert_eq!(lf.factors.len(), 2);
        assert!(lf.remainder.is_constant());
        let lf = factor_linear(&p(&r, "(X - Y)^2*(X + Y)^2"), false).unwrap();
        assert!(lf.factors.iter().all(|(_, k)| *k == 2));
        let qi = FieldTower::rationals()
            .extend(ExtensionStep::algebraic("i", vec![Coeff::one(), Coeff::zero(), Coeff::one()]))
            .unwrap();
        let ri = PolyRing::projective(qi);
        let lf = factor_linear(&p(&ri, "X^2 + Y^2"), false).unwrap();
        assert_eq!(lf.factors.len(), 2);
        let prod = lf.factors[0].0.mul(&lf.factors[1].0);
        assert_eq!(prod, p(&ri, "X^2 + Y^2"));
        let lf = factor_linear(&p(&r, "X^2 + Y*Z"), true).unwrap();
        assert!(lf.factors.is_empty());
    }

    #[test]
    fn euler_relation() {
        let r = ring_q(&["X", "Y", "Z"]);
        let f = p(&r, "Z^4 - 6*(X^2 + Y^2)*Z^2 + 8*(X^2 - 3*Y^2)*X*Z - 3*(X^2 + Y^2)^2");
        let lhs = (0..3).fold(MultiPoly::zero(&r), |acc, v| acc.add(&MultiPoly::var(&r, v).mul(&f.derivative(v))));
        assert_eq!(lhs, f.scale_int(4));
    }

    fn arb_poly(nvars: usize, max_deg: u16) -> impl Strategy<Value = Vec<(Vec<u16>, i64)>> {
        prop::collection::vec((prop::collection::vec(0..=max_deg, nvars), -5i64..=5), 0..6)
    }

    fn build(r: &Arc<PolyRing>, t: &[(Vec<u16>, i64)]) -> MultiPoly {
        MultiPoly::from_terms(r, t.iter().map(|(e, c)| (e.iter().copied().collect(), Coeff::from_int(*c))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn division_inverts_multiplication(a in arb_poly(3, 2), b in arb_poly(3, 2)) {
            let r = ring_q(&["X", "Y", "Z"]);
            let a = build(&r, &a);
            let b = build(&r, &b);
            prop_assume!(!b.is_zero());
            prop_assert_eq!(a.mul(&b).exact_div(&b).unwrap(), a);
        }

        #[test]
        fn resultant_swap_sign(a in arb_poly(2, 3), b in arb_poly(2, 3)) {
            let r = ring_q(&["x", "y"]);
            let a = build(&r, &a);
            let b = build(&r, &b);
            prop_assume!(a.degree_in(1) > 0 && b.degree_in(1) > 0);
            let ab = resultant(&a, &b, 1).unwrap();
            let ba = resultant(&b, &a, 1).unwrap();
            let sign = if (a.degree_in(1) * b.degree_in(1)) % 2 == 1 { ba.neg() } else { ba };
            prop_assert_eq!(ab, sign);
        }

        #[test]
        fn gcd_divides_both(a in arb_poly(2, 2), b in arb_poly(2, 2), c in arb_poly(2, 1)) {
            let r = ring_q(&["x", "y"]);
            let c = build(&r, &c);
            prop_assume!(!c.is_zero());
            let a = build(&r, &a).mul(&c);
            let b = build(&r, &b).mul(&c);
            prop_assume!(!a.is_zero() && !b.is_zero());
            let g = gcd(&a, &b).unwrap();
            prop_assert!(a.exact_div(&g).is_ok());
            prop_assert!(b.exact_div(&g).is_ok());
            prop_assert!(g.exact_div(&c.normalized()).is_ok());
        }

        #[test]
        fn transform_is_a_homomorphism(a in arb_poly(3, 2), b in arb_poly(3, 2), m in prop::collection::vec(-3i64..=3, 9)) {
            let r = ring_q(&["X", "Y", "Z"]);
            let k = r.tower().clone();
            let mat = [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]].map(|row| row.map(Coeff::from_int));
            let Ok(t) = ProjectiveTransform::new(k, mat) else { return Ok(()); };
            let a = build(&r, &a);
            let b = build(&r, &b);
            prop_assert_eq!(t.apply(&a.mul(&b)).unwrap(), t.apply(&a).unwrap().mul(&t.apply(&b).unwrap()));
        }
    }
}
