//! Exact arithmetic in iterated extensions of the rationals.
//!
//! A [`FieldTower`] is an ordered list of generators. Each generator is either
//! transcendental (a free parameter) or algebraic over the levels below it,
//! given by a monic defining polynomial. Elements are stored as sparse
//! polynomials in the generators over `BigRational`, reduced so that the degree
//! in every algebraic generator stays below the degree of its defining
//! polynomial. With that normal form, equality of elements is structural.
//!
//! Adjoining a generator never checks irreducibility. A reducible defining
//! polynomial makes the quotient a ring with zero divisors, which surfaces
//! lazily through [`TowerError::ZeroDivisor`] when something tries to invert
//! one of them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;
use thiserror::Error;

/// Exponent vector over the generators of a tower, with trailing zeros trimmed.
pub(crate) type GenExp = SmallVec<[u16; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("generator name `{0}` is already used in the tower")]
    DuplicateName(String),
    #[error("defining polynomial of `{0}` must be monic of degree at least 2")]
    NonMonicMinpoly(String),
    #[error("defining polynomial of `{0}` uses generators that are not below it")]
    MinpolyOutOfRange(String),
    #[error("zero divisor: the element shares the factor `{witness}` with a defining polynomial")]
    ZeroDivisor { witness: String },
    #[error("`{0}` is not invertible: it depends on a transcendental parameter")]
    NotInvertible(String),
    #[error("exact division of `{0}` by `{1}` failed")]
    NotExactlyDivisible(String, String),
    #[error("elements belong to different towers")]
    TowerMismatch,
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` cannot be specialized: {1}")]
    BadSpecialization(String, String),
}

/// Canonical representation of a tower element: sorted `(exponent, rational)`
/// pairs with no zero coefficients. Only meaningful relative to a tower.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Coeff {
    terms: Vec<(GenExp, BigRational)>,
}

fn trim(e: &mut GenExp) {
    while e.last() == Some(&0) {
        e.pop();
    }
}

fn exp_add(a: &GenExp, b: &GenExp) -> GenExp {
    let n = a.len().max(b.len());
    let mut out: GenExp = SmallVec::with_capacity(n);
    for i in 0..n {
        out.push(a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0));
    }
    out
}

fn exp_get(e: &GenExp, k: usize) -> u16 {
    e.get(k).copied().unwrap_or(0)
}

fn exp_set(e: &mut GenExp, k: usize, v: u16) {
    if e.len() <= k {
        e.resize(k + 1, 0);
    }
    e[k] = v;
    trim(e);
}

fn exp_divides(a: &GenExp, b: &GenExp) -> bool {
    (0..a.len().max(b.len())).all(|i| exp_get(a, i) <= exp_get(b, i))
}

fn exp_sub(b: &GenExp, a: &GenExp) -> GenExp {
    let mut out: GenExp = (0..b.len()).map(|i| exp_get(b, i) - exp_get(a, i)).collect();
    trim(&mut out);
    out
}

impl Coeff {
    pub fn zero() -> Self {
        Coeff { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        if r.is_zero() {
            Self::zero()
        } else {
            Coeff { terms: vec![(SmallVec::new(), r)] }
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    /// The generator with the given tower index, as an element.
    pub fn generator(index: usize) -> Self {
        let mut e: GenExp = SmallVec::new();
        exp_set(&mut e, index, 1);
        Coeff { terms: vec![(e, BigRational::one())] }
    }

    pub(crate) fn from_map(map: BTreeMap<GenExp, BigRational>) -> Self {
        Coeff {
            terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(|r| r.is_one())
    }

    /// `Some(r)` when the element is the rational constant `r`.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [(e, c)] if e.is_empty() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    pub(crate) fn terms(&self) -> &[(GenExp, BigRational)] {
        &self.terms
    }

    /// Highest generator index with a nonzero exponent.
    pub fn max_generator(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(e, _)| e.len().checked_sub(1)).max()
    }

    pub fn uses_generator(&self, k: usize) -> bool {
        self.terms.iter().any(|(e, _)| exp_get(e, k) > 0)
    }

    pub fn degree_in(&self, k: usize) -> u16 {
        self.terms.iter().map(|(e, _)| exp_get(e, k)).max().unwrap_or(0)
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Coeff {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * r)).collect(),
        }
    }

    fn merge(&self, other: &Self, negate: bool) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let ord = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                (None, _) => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    let (e, c) = &other.terms[j];
                    out.push((e.clone(), if negate { -c } else { c.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate {
                        &self.terms[i].1 - &other.terms[j].1
                    } else {
                        &self.terms[i].1 + &other.terms[j].1
                    };
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Coeff { terms: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.merge(other, true)
    }

    pub fn neg(&self) -> Self {
        Coeff {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    /// Product without reduction modulo the defining polynomials.
    fn raw_mul(&self, other: &Self) -> BTreeMap<GenExp, BigRational> {
        let mut map: BTreeMap<GenExp, BigRational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = exp_add(ea, eb);
                let c = ca * cb;
                match map.entry(e) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(c);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        *o.get_mut() += c;
                    }
                }
            }
        }
        map
    }

    /// Substitute rational values for some generators and drop them,
    /// renumbering the remaining generator indices through `remap`.
    pub(crate) fn map_generators(
        &self,
        remap: &[Option<usize>],
        values: &BTreeMap<usize, BigRational>,
    ) -> BTreeMap<GenExp, BigRational> {
        let mut map: BTreeMap<GenExp, BigRational> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut coeff = c.clone();
            let mut ne: GenExp = SmallVec::new();
            for (k, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                match remap[k] {
                    Some(nk) => exp_set(&mut ne, nk, p),
                    None => {
                        let v = &values[&k];
                        coeff *= num_traits::pow(v.clone(), p as usize);
                    }
                }
            }
            *map.entry(ne).or_insert_with(BigRational::zero) += coeff;
        }
        map
    }
}

/// Kind of a tower generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    Transcendental,
    /// Monic defining polynomial, as the coefficients `c_0 .. c_{d-1}` of
    /// `x^d + c_{d-1} x^{d-1} + ... + c_0`, each in the lower tower.
    Algebraic { tail: Vec<Coeff> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub kind: GeneratorKind,
}

impl Generator {
    pub fn degree(&self) -> Option<usize> {
        match &self.kind {
            GeneratorKind::Transcendental => None,
            GeneratorKind::Algebraic { tail } => Some(tail.len()),
        }
    }

    pub fn is_algebraic(&self) -> bool {
        matches!(self.kind, GeneratorKind::Algebraic { .. })
    }
}

/// One adjunction step, as supplied by callers.
#[derive(Clone, Debug)]
pub struct ExtensionStep {
    pub name: String,
    pub kind: StepKind,
}

#[derive(Clone, Debug)]
pub enum StepKind {
    Transcendental,
    /// Full coefficient list `c_0 .. c_d` (low to high) of the defining polynomial.
    Algebraic(Vec<Coeff>),
}

impl ExtensionStep {
    pub fn transcendental(name: &str) -> Self {
        ExtensionStep { name: name.to_string(), kind: StepKind::Transcendental }
    }

    pub fn algebraic(name: &str, coeffs: Vec<Coeff>) -> Self {
        ExtensionStep { name: name.to_string(), kind: StepKind::Algebraic(coeffs) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FieldTower {
    gens: Vec<Generator>,
}

impl FieldTower {
    /// The rationals.
    pub fn rationals() -> Arc<Self> {
        Arc::new(FieldTower::default())
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    /// True when every element of `self` is an element of `other` with the same representation.
    pub fn is_prefix_of(&self, other: &FieldTower) -> bool {
        self.gens.len() <= other.gens.len() && self.gens.iter().zip(&other.gens).all(|(a, b)| a == b)
    }

    pub fn has_transcendentals(&self) -> bool {
        self.gens.iter().any(|g| !g.is_algebraic())
    }

    pub fn extend(&self, step: ExtensionStep) -> Result<Arc<FieldTower>, TowerError> {
        if self.index_of(&step.name).is_some() {
            return Err(TowerError::DuplicateName(step.name));
        }
        let kind = match step.kind {
            StepKind::Transcendental => GeneratorKind::Transcendental,
            StepKind::Algebraic(mut coeffs) => {
                while coeffs.last().is_some_and(|c| c.is_zero()) {
                    coeffs.pop();
                }
                if coeffs.len() < 3 || !coeffs.last().unwrap().is_one() {
                    return Err(TowerError::NonMonicMinpoly(step.name));
                }
                if coeffs
                    .iter()
                    .any(|c| c.max_generator().is_some_and(|k| k >= self.gens.len()))
                {
                    return Err(TowerError::MinpolyOutOfRange(step.name));
                }
                coeffs.pop();
                let tail = coeffs.into_iter().map(|c| self.reduce(c)).collect();
                GeneratorKind::Algebraic { tail }
            }
        };
        let mut gens = self.gens.clone();
        gens.push(Generator { name: step.name, kind });
        Ok(Arc::new(FieldTower { gens }))
    }

    /// Bring an element into canonical form.
    pub fn reduce(&self, c: Coeff) -> Coeff {
        if !self.gens.iter().any(|g| g.is_algebraic()) {
            return c;
        }
        let mut map: BTreeMap<GenExp, BigRational> = c.terms.into_iter().collect();
        self.reduce_map(&mut map);
        Coeff::from_map(map)
    }

    fn reduce_map(&self, map: &mut BTreeMap<GenExp, BigRational>) {
        for k in (0..self.gens.len()).rev() {
            let GeneratorKind::Algebraic { tail } = &self.gens[k].kind else {
                continue;
            };
            let d = tail.len() as u16;
            loop {
                let hits: Vec<GenExp> =
                    map.keys().filter(|e| exp_get(e, k) >= d).cloned().collect();
                if hits.is_empty() {
                    break;
                }
                for e in hits {
                    let c = map.remove(&e).unwrap();
                    if c.is_zero() {
                        continue;
                    }
                    let mut base = e.clone();
                    exp_set(&mut base, k, exp_get(&e, k) - d);
                    for (i, ti) in tail.iter().enumerate() {
                        for (te, tc) in &ti.terms {
                            let mut ne = exp_add(&base, te);
                            let cur = exp_get(&ne, k);
                            exp_set(&mut ne, k, cur + i as u16);
                            let add = -(&c * tc);
                            let entry = map.entry(ne).or_insert_with(BigRational::zero);
                            *entry += add;
                        }
                    }
                }
                map.retain(|_, c| !c.is_zero());
            }
        }
    }

    pub fn mul(&self, a: &Coeff, b: &Coeff) -> Coeff {
        if a.is_zero() || b.is_zero() {
            return Coeff::zero();
        }
        if let Some(r) = a.as_rational() {
            return b.scale(&r);
        }
        if let Some(r) = b.as_rational() {
            return a.scale(&r);
        }
        let mut map = a.raw_mul(b);
        self.reduce_map(&mut map);
        Coeff::from_map(map)
    }

    pub fn pow(&self, a: &Coeff, n: u32) -> Coeff {
        let mut result = Coeff::one();
        let mut base = a.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = self.mul(&result, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    /// Multiplicative inverse, by extended Euclid against the defining
    /// polynomials from the top of the tower down.
    pub fn inv(&self, c: &Coeff) -> Result<Coeff, TowerError> {
        if c.is_zero() {
            return Err(TowerError::ZeroDivisor { witness: "0".into() });
        }
        if let Some(r) = c.as_rational() {
            return Ok(Coeff::from_rational(r.recip()));
        }
        let k = c.max_generator().unwrap();
        let tail = match &self.gens[k].kind {
            GeneratorKind::Transcendental => {
                return Err(TowerError::NotInvertible(self.format(c)));
            }
            GeneratorKind::Algebraic { tail } => tail,
        };
        let mut modulus: Vec<Coeff> = tail.clone();
        modulus.push(Coeff::one());
        let a = self.split_univariate(c, k);

        let (mut r0, mut r1) = (modulus, a);
        let (mut s0, mut s1) = (Vec::<Coeff>::new(), vec![Coeff::one()]);
        while r1.len() > 1 {
            let (q, r) = self.uni_divrem(&r0, &r1)?;
            let qs1 = self.uni_mul(&q, &s1);
            let s2 = uni_sub(&s0, &qs1);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
            if r1.is_empty() {
                return Err(TowerError::ZeroDivisor {
                    witness: self.format_univariate(&r0, &self.gens[k].name),
                });
            }
        }
        let lead_inv = self.inv(&r1[0])?;
        let s: Vec<Coeff> = s1.iter().map(|x| self.mul(x, &lead_inv)).collect();
        Ok(self.join_univariate(&s, k))
    }

    /// Exact division `a / b` in the coefficient ring.
    pub fn exact_div(&self, a: &Coeff, b: &Coeff) -> Result<Coeff, TowerError> {
        if b.is_zero() {
            return Err(TowerError::ZeroDivisor { witness: "0".into() });
        }
        if a.is_zero() {
            return Ok(Coeff::zero());
        }
        if let Some(r) = b.as_rational() {
            return Ok(a.scale(&r.recip()));
        }
        match self.inv(b) {
            Ok(i) => Ok(self.mul(a, &i)),
            Err(TowerError::NotInvertible(_))
                if (0..self.gens.len())
                    .all(|k| !self.gens[k].is_algebraic() || !b.uses_generator(k)) =>
            {
                self.divide_by_parameter_poly(a, b)
            }
            Err(TowerError::NotInvertible(_)) => Err(TowerError::NotExactlyDivisible(
                self.format(a),
                self.format(b),
            )),
            Err(e) => Err(e),
        }
    }

    /// Division by a polynomial in the transcendental generators only, done
    /// separately on each algebraic-monomial component of `a`.
    fn divide_by_parameter_poly(&self, a: &Coeff, b: &Coeff) -> Result<Coeff, TowerError> {
        let algebraic: Vec<bool> = self.gens.iter().map(|g| g.is_algebraic()).collect();
        let mut groups: BTreeMap<GenExp, Vec<(GenExp, BigRational)>> = BTreeMap::new();
        for (e, c) in &a.terms {
            let mut alg: GenExp = SmallVec::new();
            let mut tr: GenExp = SmallVec::new();
            for (k, &p) in e.iter().enumerate() {
                if algebraic[k] {
                    exp_set(&mut alg, k, p);
                } else {
                    exp_set(&mut tr, k, p);
                }
            }
            groups.entry(alg).or_default().push((tr, c.clone()));
        }
        let (lead_e, lead_c) = b.terms.last().unwrap().clone();
        let mut out: BTreeMap<GenExp, BigRational> = BTreeMap::new();
        for (alg, terms) in groups {
            let mut rem: BTreeMap<GenExp, BigRational> = terms.into_iter().collect();
            while let Some((e, c)) = rem.iter().next_back().map(|(e, c)| (e.clone(), c.clone())) {
                if !exp_divides(&lead_e, &e) {
                    return Err(TowerError::NotExactlyDivisible(self.format(a), self.format(b)));
                }
                let qe = exp_sub(&e, &lead_e);
                let qc = &c / &lead_c;
                for (be, bc) in &b.terms {
                    let ne = exp_add(&qe, be);
                    let entry = rem.entry(ne).or_insert_with(BigRational::zero);
                    *entry -= &qc * bc;
                }
                rem.retain(|_, v| !v.is_zero());
                *out.entry(exp_add(&qe, &alg)).or_insert_with(BigRational::zero) += qc;
            }
        }
        Ok(Coeff::from_map(out))
    }

    /// View `c` as a univariate polynomial in generator `k`.
    fn split_univariate(&self, c: &Coeff, k: usize) -> Vec<Coeff> {
        let deg = c.degree_in(k) as usize;
        let mut parts: Vec<BTreeMap<GenExp, BigRational>> = vec![BTreeMap::new(); deg + 1];
        for (e, r) in &c.terms {
            let p = exp_get(e, k) as usize;
            let mut ne = e.clone();
            exp_set(&mut ne, k, 0);
            parts[p].insert(ne, r.clone());
        }
        let mut out: Vec<Coeff> = parts.into_iter().map(Coeff::from_map).collect();
        while out.last().is_some_and(|c| c.is_zero()) {
            out.pop();
        }
        out
    }

    fn join_univariate(&self, coeffs: &[Coeff], k: usize) -> Coeff {
        let mut map: BTreeMap<GenExp, BigRational> = BTreeMap::new();
        for (i, c) in coeffs.iter().enumerate() {
            for (e, r) in &c.terms {
                let mut ne = e.clone();
                let cur = exp_get(&ne, k);
                exp_set(&mut ne, k, cur + i as u16);
                *map.entry(ne).or_insert_with(BigRational::zero) += r;
            }
        }
        self.reduce(Coeff::from_map(map))
    }

    fn uni_mul(&self, a: &[Coeff], b: &[Coeff]) -> Vec<Coeff> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Coeff::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] = out[i + j].add(&self.mul(x, y));
            }
        }
        uni_trim(out)
    }

    fn uni_divrem(&self, a: &[Coeff], b: &[Coeff]) -> Result<(Vec<Coeff>, Vec<Coeff>), TowerError> {
        let lead_inv = self.inv(b.last().unwrap())?;
        let mut rem: Vec<Coeff> = a.to_vec();
        if rem.len() < b.len() {
            return Ok((Vec::new(), rem));
        }
        let mut q = vec![Coeff::zero(); rem.len() - b.len() + 1];
        while rem.len() >= b.len() {
            let shift = rem.len() - b.len();
            let factor = self.mul(rem.last().unwrap(), &lead_inv);
            for (i, bc) in b.iter().enumerate() {
                rem[shift + i] = rem[shift + i].sub(&self.mul(&factor, bc));
            }
            q[shift] = factor;
            rem.pop();
            rem = uni_trim(rem);
        }
        Ok((uni_trim(q), rem))
    }

    /// Human/grammar-compatible rendering of an element.
    pub fn format(&self, c: &Coeff) -> String {
        if c.is_zero() {
            return "0".into();
        }
        let mut terms: Vec<&(GenExp, BigRational)> = c.terms.iter().collect();
        terms.sort_by(|a, b| grlex_desc(&a.0, &b.0));
        let mut out = String::new();
        for (i, (e, r)) in terms.iter().enumerate() {
            let mono = self.format_generator_monomial(e);
            let neg = r.is_negative();
            let abs = r.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if mono.is_empty() {
                out.push_str(&format_rational(&abs));
            } else if abs.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format_rational(&abs));
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }

    fn format_generator_monomial(&self, e: &GenExp) -> String {
        let mut parts = Vec::new();
        for (k, &p) in e.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let name = &self.gens[k].name;
            if p == 1 {
                parts.push(name.clone());
            } else {
                parts.push(format!("{name}^{p}"));
            }
        }
        parts.join("*")
    }

    fn format_univariate(&self, coeffs: &[Coeff], var: &str) -> String {
        let mut parts = Vec::new();
        for (i, c) in coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let cs = self.format(c);
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            if mono.is_empty() {
                parts.push(format!("({cs})"));
            } else {
                parts.push(format!("({cs})*{mono}"));
            }
        }
        parts.join(" + ")
    }

    /// Description lines, one per generator, in the CLI tower grammar.
    pub fn describe(&self) -> Vec<String> {
        self.gens
            .iter()
            .enumerate()
            .map(|(k, g)| match &g.kind {
                GeneratorKind::Transcendental => format!("{}: transcendental", g.name),
                GeneratorKind::Algebraic { tail } => {
                    let lower = FieldTower { gens: self.gens[..k].to_vec() };
                    let mut parts = vec![format!("{}^{}", g.name, tail.len())];
                    for (i, c) in tail.iter().enumerate().rev() {
                        if c.is_zero() {
                            continue;
                        }
                        let cs = lower.format(c);
                        let mono = match i {
                            0 => String::new(),
                            1 => g.name.clone(),
                            _ => format!("{}^{}", g.name, i),
                        };
                        let body = if mono.is_empty() {
                            if c.terms.len() == 1 {
                                cs
                            } else {
                                format!("({cs})")
                            }
                        } else if c.is_one() {
                            mono
                        } else {
                            format!("({cs})*{mono}")
                        };
                        parts.push(body);
                    }
                    let mut s = parts[0].clone();
                    for p in &parts[1..] {
                        if let Some(rest) = p.strip_prefix('-') {
                            s.push_str(" - ");
                            s.push_str(rest);
                        } else {
                            s.push_str(" + ");
                            s.push_str(p);
                        }
                    }
                    format!("{}: minpoly = {}", g.name, s)
                }
            })
            .collect()
    }

    /// Drop the named transcendental generators, substituting rational values.
    /// Returns the smaller tower and the coefficient map into it.
    pub fn specialize(
        &self,
        values: &BTreeMap<String, BigRational>,
    ) -> Result<(Arc<FieldTower>, Specialization), TowerError> {
        let mut idx_values = BTreeMap::new();
        for (name, v) in values {
            let k = self.index_of(name).ok_or_else(|| TowerError::UnknownGenerator(name.clone()))?;
            if self.gens[k].is_algebraic() {
                return Err(TowerError::BadSpecialization(name.clone(), "not transcendental".into()));
            }
            idx_values.insert(k, v.clone());
        }
        let mut remap = Vec::with_capacity(self.gens.len());
        let mut next = 0;
        for k in 0..self.gens.len() {
            if idx_values.contains_key(&k) {
                remap.push(None);
            } else {
                remap.push(Some(next));
                next += 1;
            }
        }
        let mut gens = Vec::new();
        for (k, g) in self.gens.iter().enumerate() {
            if remap[k].is_none() {
                continue;
            }
            let kind = match &g.kind {
                GeneratorKind::Transcendental => GeneratorKind::Transcendental,
                GeneratorKind::Algebraic { tail } => {
                    if tail.iter().any(|c| idx_values.keys().any(|&s| c.uses_generator(s))) {
                        return Err(TowerError::BadSpecialization(
                            g.name.clone(),
                            "its defining polynomial depends on a specialized parameter".into(),
                        ));
                    }
                    GeneratorKind::Algebraic {
                        tail: tail
                            .iter()
                            .map(|c| Coeff::from_map(c.map_generators(&remap, &idx_values)))
                            .collect(),
                    }
                }
            };
            gens.push(Generator { name: g.name.clone(), kind });
        }
        let target = Arc::new(FieldTower { gens });
        Ok((target.clone(), Specialization { remap, values: idx_values, target }))
    }
}

/// Coefficient map produced by [`FieldTower::specialize`].
#[derive(Clone, Debug)]
pub struct Specialization {
    remap: Vec<Option<usize>>,
    values: BTreeMap<usize, BigRational>,
    target: Arc<FieldTower>,
}

impl Specialization {
    pub fn apply(&self, c: &Coeff) -> Coeff {
        self.target.reduce(Coeff::from_map(c.map_generators(&self.remap, &self.values)))
    }

    pub fn target(&self) -> &Arc<FieldTower> {
        &self.target
    }
}

pub(crate) fn grlex_desc(a: &GenExp, b: &GenExp) -> Ordering {
    let da: u32 = a.iter().map(|&x| x as u32).sum();
    let db: u32 = b.iter().map(|&x| x as u32).sum();
    db.cmp(&da).then_with(|| {
        let n = a.len().max(b.len());
        for i in 0..n {
            let c = exp_get(b, i).cmp(&exp_get(a, i));
            if c != Ordering::Equal {
                return c;
            }
        }
        Ordering::Equal
    })
}

pub(crate) fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn uni_trim(mut v: Vec<Coeff>) -> Vec<Coeff> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn uni_sub(a: &[Coeff], b: &[Coeff]) -> Vec<Coeff> {
    let n = a.len().max(b.len());
    let zero = Coeff::zero();
    uni_trim(
        (0..n)
            .map(|i| a.get(i).unwrap_or(&zero).sub(b.get(i).unwrap_or(&zero)))
            .collect(),
    )
}

/// An element together with the tower it lives in.
#[derive(Clone, Debug)]
pub struct FieldElement {
    tower: Arc<FieldTower>,
    repr: Coeff,
}

impl FieldElement {
    pub fn new(tower: Arc<FieldTower>, repr: Coeff) -> Self {
        let repr = tower.reduce(repr);
        FieldElement { tower, repr }
    }

    pub fn zero(tower: &Arc<FieldTower>) -> Self {
        FieldElement { tower: tower.clone(), repr: Coeff::zero() }
    }

    pub fn one(tower: &Arc<FieldTower>) -> Self {
        FieldElement { tower: tower.clone(), repr: Coeff::one() }
    }

    pub fn from_int(tower: &Arc<FieldTower>, n: i64) -> Self {
        FieldElement { tower: tower.clone(), repr: Coeff::from_int(n) }
    }

    pub fn from_rational(tower: &Arc<FieldTower>, r: BigRational) -> Self {
        FieldElement { tower: tower.clone(), repr: Coeff::from_rational(r) }
    }

    pub fn generator(tower: &Arc<FieldTower>, name: &str) -> Result<Self, TowerError> {
        let k = tower.index_of(name).ok_or_else(|| TowerError::UnknownGenerator(name.into()))?;
        Ok(FieldElement::new(tower.clone(), Coeff::generator(k)))
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn repr(&self) -> &Coeff {
        &self.repr
    }

    pub fn into_repr(self) -> Coeff {
        self.repr
    }

    pub fn is_zero(&self) -> bool {
        self.repr.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.repr.is_one()
    }

    /// Canonical form. Elements are kept canonical, so this is idempotent.
    pub fn reduce(&self) -> Self {
        FieldElement { tower: self.tower.clone(), repr: self.tower.reduce(self.repr.clone()) }
    }

    pub fn invert(&self) -> Result<Self, TowerError> {
        Ok(FieldElement { tower: self.tower.clone(), repr: self.tower.inv(&self.repr)? })
    }

    pub fn pow(&self, n: u32) -> Self {
        FieldElement { tower: self.tower.clone(), repr: self.tower.pow(&self.repr, n) }
    }

    pub fn equals(&self, other: &Self) -> Result<bool, TowerError> {
        if !same_tower(&self.tower, &other.tower) {
            return Err(TowerError::TowerMismatch);
        }
        Ok(self.tower.reduce(self.repr.sub(&other.repr)).is_zero())
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, TowerError> {
        if !same_tower(&self.tower, &other.tower) {
            return Err(TowerError::TowerMismatch);
        }
        Ok(FieldElement {
            tower: self.tower.clone(),
            repr: self.tower.exact_div(&self.repr, &other.repr)?,
        })
    }

    fn check(&self, other: &Self) {
        assert!(same_tower(&self.tower, &other.tower), "field elements from different towers");
    }
}

pub fn same_tower(a: &Arc<FieldTower>, b: &Arc<FieldTower>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        same_tower(&self.tower, &other.tower) && self.repr == other.repr
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tower.format(&self.repr))
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.check(rhs);
        FieldElement { tower: self.tower.clone(), repr: self.repr.add(&rhs.repr) }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.check(rhs);
        FieldElement { tower: self.tower.clone(), repr: self.repr.sub(&rhs.repr) }
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.check(rhs);
        FieldElement { tower: self.tower.clone(), repr: self.tower.mul(&self.repr, &rhs.repr) }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { tower: self.tower.clone(), repr: self.repr.neg() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Coeff {
        Coeff::from_int(n)
    }

    fn tower_with(name: &str, coeffs: &[i64]) -> Arc<FieldTower> {
        FieldTower::rationals()
            .extend(ExtensionStep::algebraic(name, coeffs.iter().map(|&c| q(c)).collect()))
            .unwrap()
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        let t = tower_with("i", &[1, 0, 1]);
        let i = FieldElement::generator(&t, "i").unwrap();
        assert_eq!(&i * &i, FieldElement::from_int(&t, -1));
    }

    #[test]
    fn sixth_root_relation() {
        let t = tower_with("t", &[108, 0, 0, 0, 0, 0, 1]);
        let g = FieldElement::generator(&t, "t").unwrap();
        assert!((&g.pow(6) + &FieldElement::from_int(&t, 108)).is_zero());
        assert!(g.pow(3).pow(2).equals(&FieldElement::from_int(&t, -108)).unwrap());
        assert_eq!(g.pow(5).repr().degree_in(0), 5);
    }

    #[test]
    fn cube_root_of_four() {
        let t = tower_with("c", &[-4, 0, 0, 1]);
        let c = FieldElement::generator(&t, "c").unwrap();
        assert_eq!(c.pow(3), FieldElement::from_int(&t, 4));
        assert_eq!(c.pow(4), &FieldElement::from_int(&t, 4) * &c);
    }

    #[test]
    fn inverse_of_i_is_minus_i() {
        let t = tower_with("i", &[1, 0, 1]);
        let i = FieldElement::generator(&t, "i").unwrap();
        assert_eq!(i.invert().unwrap(), -&i);
    }

    #[test]
    fn rationalize_one_plus_sqrt3() {
        // (1 + r)(r - 1) = r^2 - 1 = 2, so 1/(1 + r) = (r - 1)/2.
        let t = tower_with("r", &[-3, 0, 1]);
        let r = FieldElement::generator(&t, "r").unwrap();
        let one = FieldElement::one(&t);
        let x = &one + &r;
        let expected = FieldElement::new(t.clone(), r.repr().sub(&Coeff::one()).scale(&BigRational::new(1.into(), 2.into())));
        let inv = x.invert().unwrap();
        assert_eq!(inv, expected);
        assert!((&inv * &x).is_one());
    }

    #[test]
    fn zero_has_no_inverse() {
        let t = FieldTower::rationals();
        assert!(matches!(FieldElement::zero(&t).invert(), Err(TowerError::ZeroDivisor { .. })));
    }

    #[test]
    fn reducible_minpoly_reports_zero_divisor() {
        let t = tower_with("s", &[-1, 0, 1]);
        let s = FieldElement::generator(&t, "s").unwrap();
        let x = &s - &FieldElement::one(&t);
        match x.invert() {
            Err(TowerError::ZeroDivisor { witness }) => assert!(witness.contains('s'), "{witness}"),
            other => panic!("expected zero divisor, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_non_monic_are_rejected() {
        let t = tower_with("i", &[1, 0, 1]);
        assert_eq!(
            t.extend(ExtensionStep::transcendental("i")).unwrap_err(),
            TowerError::DuplicateName("i".into())
        );
        assert_eq!(
            t.extend(ExtensionStep::algebraic("w", vec![q(1), q(0), q(2)])).unwrap_err(),
            TowerError::NonMonicMinpoly("w".into())
        );
        assert_eq!(
            t.extend(ExtensionStep::algebraic("w", vec![q(1), q(1)])).unwrap_err(),
            TowerError::NonMonicMinpoly("w".into())
        );
    }

    #[test]
    fn transcendentals_are_independent() {
        let t = FieldTower::rationals()
            .extend(ExtensionStep::transcendental("s"))
            .unwrap()
            .extend(ExtensionStep::transcendental("t"))
            .unwrap();
        let s = FieldElement::generator(&t, "s").unwrap();
        let tt = FieldElement::generator(&t, "t").unwrap();
        assert!(!s.equals(&tt).unwrap());
        assert!(matches!(s.invert(), Err(TowerError::NotInvertible(_))));
    }

    #[test]
    fn exact_division_by_parameter_polynomial() {
        let t = FieldTower::rationals()
            .extend(ExtensionStep::transcendental("t"))
            .unwrap()
            .extend(ExtensionStep::algebraic("i", vec![q(1), q(0), q(1)]))
            .unwrap();
        let tt = FieldElement::generator(&t, "t").unwrap();
        let i = FieldElement::generator(&t, "i").unwrap();
        let one = FieldElement::one(&t);
        let b = &(&tt * &tt) - &one;
        let a = &b * &(&i + &tt);
        assert_eq!(a.try_div(&b).unwrap(), &i + &tt);
        assert!(matches!(
            (&a + &one).try_div(&b),
            Err(TowerError::NotExactlyDivisible(..))
        ));
    }

    #[test]
    fn tower_mismatch_is_an_error() {
        let a = FieldElement::one(&tower_with("i", &[1, 0, 1]));
        let b = FieldElement::one(&tower_with("r", &[-3, 0, 1]));
        assert_eq!(a.equals(&b), Err(TowerError::TowerMismatch));
    }

    #[test]
    fn describe_lists_generators() {
        let t = FieldTower::rationals()
            .extend(ExtensionStep::transcendental("t"))
            .unwrap()
            .extend(ExtensionStep::algebraic(
                "s",
                vec![Coeff::generator(0).neg(), q(0), q(0), q(1)],
            ))
            .unwrap();
        assert_eq!(t.describe(), vec!["t: transcendental".to_string(), "s: minpoly = s^3 - t".to_string()]);
    }

    #[test]
    fn specialization_drops_parameters() {
        let t = FieldTower::rationals()
            .extend(ExtensionStep::transcendental("t"))
            .unwrap()
            .extend(ExtensionStep::algebraic("i", vec![q(1), q(0), q(1)]))
            .unwrap();
        let values = BTreeMap::from([("t".to_string(), BigRational::from_integer(3.into()))]);
        let (small, spec) = t.specialize(&values).unwrap();
        assert_eq!(small.len(), 1);
        let x = t.mul(&Coeff::generator(0), &Coeff::generator(1));
        assert_eq!(spec.apply(&x), Coeff::generator(0).scale(&BigRational::from_integer(3.into())));
    }
}
