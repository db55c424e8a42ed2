//! Univariate polynomials over a tower, stored low degree first, plus the root
//! resolution used by singular-locus elimination.
//!
//! Root finding never trusts floating point: numeric approximations only
//! propose rational candidates or rational quadratic factors, and every
//! proposal is confirmed by exact evaluation or exact division. Whatever is not
//! confirmed is handed back as unresolved.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::fieldtower::{Coeff, ExtensionStep, FieldTower, GeneratorKind, TowerError};

pub type UPoly = Vec<Coeff>;

pub fn trim(mut p: UPoly) -> UPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

/// Degree, with `None` for the zero polynomial.
pub fn degree(p: &[Coeff]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub fn add(a: &[Coeff], b: &[Coeff]) -> UPoly {
    let zero = Coeff::zero();
    trim(
        (0..a.len().max(b.len()))
            .map(|i| a.get(i).unwrap_or(&zero).add(b.get(i).unwrap_or(&zero)))
            .collect(),
    )
}

pub fn sub(a: &[Coeff], b: &[Coeff]) -> UPoly {
    let zero = Coeff::zero();
    trim(
        (0..a.len().max(b.len()))
            .map(|i| a.get(i).unwrap_or(&zero).sub(b.get(i).unwrap_or(&zero)))
            .collect(),
    )
}

pub fn mul(k: &FieldTower, a: &[Coeff], b: &[Coeff]) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Coeff::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&k.mul(x, y));
        }
    }
    trim(out)
}

pub fn scale(k: &FieldTower, a: &[Coeff], c: &Coeff) -> UPoly {
    trim(a.iter().map(|x| k.mul(x, c)).collect())
}

pub fn derivative(a: &[Coeff]) -> UPoly {
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.scale(&BigRational::from_integer(BigInt::from(i))))
            .collect(),
    )
}

pub fn eval(k: &FieldTower, a: &[Coeff], x: &Coeff) -> Coeff {
    let mut acc = Coeff::zero();
    for c in a.iter().rev() {
        acc = k.mul(&acc, x).add(c);
    }
    acc
}

/// Division with remainder; the divisor's leading coefficient must be invertible.
pub fn divrem(k: &FieldTower, a: &[Coeff], b: &[Coeff]) -> Result<(UPoly, UPoly), TowerError> {
    let b = trim(b.to_vec());
    let db = b.len().checked_sub(1).ok_or(TowerError::ZeroDivisor { witness: "0".into() })?;
    let lead_inv = k.inv(&b[db])?;
    let mut rem = trim(a.to_vec());
    if rem.len() <= db {
        return Ok((Vec::new(), rem));
    }
    let mut q = vec![Coeff::zero(); rem.len() - db];
    while rem.len() > db {
        let shift = rem.len() - 1 - db;
        let f = k.mul(rem.last().unwrap(), &lead_inv);
        for (i, c) in b.iter().enumerate() {
            rem[shift + i] = rem[shift + i].sub(&k.mul(&f, c));
        }
        q[shift] = f;
        rem.pop();
        rem = trim(rem);
    }
    Ok((trim(q), rem))
}

pub fn monic(k: &FieldTower, a: &[Coeff]) -> Result<UPoly, TowerError> {
    let a = trim(a.to_vec());
    match a.last() {
        None => Ok(a),
        Some(l) if l.is_one() => Ok(a),
        Some(l) => {
            let inv = k.inv(l)?;
            Ok(scale(k, &a, &inv))
        }
    }
}

/// Monic gcd by the Euclidean algorithm.
pub fn gcd(k: &FieldTower, a: &[Coeff], b: &[Coeff]) -> Result<UPoly, TowerError> {
    let mut r0 = trim(a.to_vec());
    let mut r1 = trim(b.to_vec());
    while !r1.is_empty() {
        let (_, r) = divrem(k, &r0, &r1)?;
        r0 = std::mem::replace(&mut r1, r);
    }
    monic(k, &r0)
}

pub fn exact_quotient(k: &FieldTower, a: &[Coeff], b: &[Coeff]) -> Result<Option<UPoly>, TowerError> {
    let (q, r) = divrem(k, a, b)?;
    Ok(if r.is_empty() { Some(q) } else { None })
}

/// Monic squarefree part.
pub fn squarefree_part(k: &FieldTower, a: &[Coeff]) -> Result<UPoly, TowerError> {
    let g = gcd(k, a, &derivative(a))?;
    let q = exact_quotient(k, a, &g)?.expect("gcd divides");
    monic(k, &q)
}

/// Yun's decomposition `a = lc * prod f_i^i`; returns the nonconstant `(f_i, i)`.
pub fn squarefree_decomposition(k: &FieldTower, a: &[Coeff]) -> Result<Vec<(UPoly, usize)>, TowerError> {
    let a = monic(k, a)?;
    let mut out = Vec::new();
    if degree(&a).unwrap_or(0) == 0 {
        return Ok(out);
    }
    let da = derivative(&a);
    let b = gcd(k, &a, &da)?;
    let mut c = exact_quotient(k, &a, &b)?.unwrap();
    let mut d = sub(&exact_quotient(k, &da, &b)?.unwrap(), &derivative(&c));
    let mut i = 1;
    while degree(&c).unwrap_or(0) > 0 {
        let f = gcd(k, &c, &d)?;
        if degree(&f).unwrap_or(0) > 0 {
            out.push((f.clone(), i));
        }
        let c_next = exact_quotient(k, &c, &f)?.unwrap();
        d = sub(&exact_quotient(k, &d, &f)?.unwrap(), &derivative(&c_next));
        c = c_next;
        i += 1;
    }
    Ok(out)
}

/// Rational square root of `r`, if any.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

/// Elements of the tower whose square is a known rational: `g^(d/2)` for each
/// generator with a binomial defining polynomial `x^d + c` with `d` even and `c` rational.
fn square_candidates(k: &FieldTower) -> Vec<(Coeff, BigRational)> {
    let mut base = Vec::new();
    for (idx, g) in k.generators().iter().enumerate() {
        let GeneratorKind::Algebraic { tail } = &g.kind else { continue };
        let d = tail.len();
        if d % 2 != 0 || tail[1..].iter().any(|c| !c.is_zero()) {
            continue;
        }
        let Some(c0) = tail[0].as_rational() else { continue };
        let e = k.pow(&Coeff::generator(idx), (d / 2) as u32);
        base.push((e, -c0));
    }
    let mut all = base.clone();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            all.push((k.mul(&base[i].0, &base[j].0), &base[i].1 * &base[j].1));
        }
    }
    all
}

/// Square root of a rational inside the tower. When it is not already
/// available and `adjoin` is set, a fresh generator `w<n>` with defining
/// polynomial `x^2 - m` (m a squarefree integer) is appended.
pub fn sqrt_in_tower(
    k: &Arc<FieldTower>,
    d: &BigRational,
    adjoin: bool,
) -> Result<Option<(Arc<FieldTower>, Coeff)>, TowerError> {
    if let Some(s) = rational_sqrt(d) {
        return Ok(Some((k.clone(), Coeff::from_rational(s))));
    }
    for (e, r) in square_candidates(k) {
        if r.is_zero() {
            continue;
        }
        if let Some(s) = rational_sqrt(&(d / &r)) {
            return Ok(Some((k.clone(), e.scale(&s))));
        }
    }
    if !adjoin {
        return Ok(None);
    }
    // d = m * q^2 / den^2 with m = numer * denom reduced by square factors.
    let num = d.numer() * d.denom();
    let (m, q) = split_square(&num);
    let mut n = 1;
    while k.index_of(&format!("w{n}")).is_some() {
        n += 1;
    }
    let name = format!("w{n}");
    let ext = k.extend(ExtensionStep::algebraic(
        &name,
        vec![Coeff::from_rational(BigRational::from_integer(-m)), Coeff::zero(), Coeff::one()],
    ))?;
    let w = Coeff::generator(ext.len() - 1);
    let factor = BigRational::new(q, d.denom().clone());
    Ok(Some((ext, w.scale(&factor))))
}

/// Write `n = m * q^2` with `m` free of small square factors.
fn split_square(n: &BigInt) -> (BigInt, BigInt) {
    let sign = if n.is_negative() { -BigInt::one() } else { BigInt::one() };
    let mut rest = n.abs();
    let mut q = BigInt::one();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(1_000_000);
    while &p * &p <= rest && p < limit {
        let sq = &p * &p;
        while (&rest % &sq).is_zero() {
            rest /= &sq;
            q *= &p;
        }
        p += 1;
    }
    let r = rest.sqrt();
    if &r * &r == rest {
        q *= &r;
        rest = BigInt::one();
    }
    (sign * rest, q)
}

/// Outcome of root resolution.
#[derive(Clone, Debug)]
pub struct Roots {
    pub tower: Arc<FieldTower>,
    /// Distinct roots.
    pub roots: Vec<Coeff>,
    /// Squarefree factors of degree > 2 (or with irrational data) left unsolved.
    pub unresolved: Vec<UPoly>,
}

/// Distinct roots of `p` in the tower, or in radical quadratic extensions of
/// it when `adjoin` is set.
pub fn roots(k: &Arc<FieldTower>, p: &[Coeff], adjoin: bool) -> Result<Roots, TowerError> {
    let mut out = Roots { tower: k.clone(), roots: Vec::new(), unresolved: Vec::new() };
    if degree(p).unwrap_or(0) == 0 {
        return Ok(out);
    }
    let q = squarefree_part(k, p)?;
    let rational = q.iter().all(|c| c.is_rational());
    let mut pending: Vec<UPoly> = vec![q];
    if rational {
        pending = split_rational(&pending.pop().unwrap(), &mut out.roots);
    }
    for f in pending {
        match degree(&f).unwrap_or(0) {
            0 => {}
            1 => {
                let r = out.tower.exact_div(&f[0].neg(), &f[1])?;
                out.roots.push(r);
            }
            2 => {
                if !solve_quadratic(&mut out, &f, adjoin)? {
                    out.unresolved.push(f);
                }
            }
            _ => out.unresolved.push(f),
        }
    }
    Ok(out)
}

fn solve_quadratic(out: &mut Roots, f: &[Coeff], adjoin: bool) -> Result<bool, TowerError> {
    let k = out.tower.clone();
    let f = monic(&k, f)?;
    let (b, c) = (&f[1], &f[0]);
    let disc = k.mul(b, b).sub(&c.scale(&BigRational::from_integer(4.into())));
    let Some(dr) = disc.as_rational() else { return Ok(false) };
    let Some((ext, s)) = sqrt_in_tower(&k, &dr, adjoin)? else { return Ok(false) };
    let half = BigRational::new(1.into(), 2.into());
    let nb = b.neg();
    out.tower = ext;
    out.roots.push(nb.add(&s).scale(&half));
    out.roots.push(nb.sub(&s).scale(&half));
    Ok(true)
}

fn to_rationals(p: &[Coeff]) -> Vec<BigRational> {
    p.iter().map(|c| c.as_rational().unwrap()).collect()
}

fn eval_rational(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn divide_rational(p: &[BigRational], d: &[BigRational]) -> Option<Vec<BigRational>> {
    let mut rem = p.to_vec();
    let dd = d.len() - 1;
    if rem.len() <= dd {
        return None;
    }
    let mut q = vec![BigRational::zero(); rem.len() - dd];
    let lead = d[dd].clone();
    while rem.len() > dd {
        let shift = rem.len() - 1 - dd;
        let f = rem.last().unwrap() / &lead;
        for (i, c) in d.iter().enumerate() {
            rem[shift + i] -= &f * c;
        }
        q[shift] = f;
        rem.pop();
    }
    rem.iter().all(|c| c.is_zero()).then_some(q)
}

/// Split off rational roots and rational quadratic factors of a squarefree
/// rational polynomial. Returns the remaining factors (quadratics and the
/// unsplit remainder).
fn split_rational(p: &[Coeff], roots: &mut Vec<Coeff>) -> Vec<UPoly> {
    let mut cur = to_rationals(p);
    let mut factors: Vec<UPoly> = Vec::new();
    let approx = match approximate_roots(&cur) {
        Some(a) => a,
        None => return vec![p.to_vec()],
    };
    let mut remaining: Vec<Complex64> = Vec::new();
    for z in approx {
        let mut found = false;
        if z.im.abs() <= 1e-6 * (1.0 + z.re.abs()) {
            if let Some(r) = recover_rational(z.re) {
                if cur.len() > 1 && eval_rational(&cur, &r).is_zero() {
                    let lin = vec![-r.clone(), BigRational::one()];
                    cur = divide_rational(&cur, &lin).unwrap();
                    roots.push(Coeff::from_rational(r));
                    found = true;
                }
            }
        }
        if !found {
            remaining.push(z);
        }
    }
    // Pair the remaining approximations into rational quadratics.
    let mut used = vec![false; remaining.len()];
    for i in 0..remaining.len() {
        if used[i] || cur.len() <= 3 {
            continue;
        }
        for j in i + 1..remaining.len() {
            if used[j] {
                continue;
            }
            let s = remaining[i] + remaining[j];
            let pr = remaining[i] * remaining[j];
            let tol = |z: Complex64| z.im.abs() <= 1e-6 * (1.0 + z.re.abs());
            if !tol(s) || !tol(pr) {
                continue;
            }
            let (Some(rs), Some(rp)) = (recover_rational(s.re), recover_rational(pr.re)) else {
                continue;
            };
            let quad = vec![rp, -rs, BigRational::one()];
            if let Some(q) = divide_rational(&cur, &quad) {
                cur = q;
                factors.push(quad.into_iter().map(Coeff::from_rational).collect());
                used[i] = true;
                used[j] = true;
                break;
            }
        }
    }
    if cur.len() > 1 {
        factors.push(cur.into_iter().map(Coeff::from_rational).collect());
    }
    factors
}

/// Continued-fraction recovery of a small-height rational close to `x`.
fn recover_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let approx = h1.to_f64()? / k1.to_f64()?;
        if (approx - x).abs() <= 1e-9 * (1.0 + x.abs()) {
            return Some(BigRational::new(h1, k1));
        }
        let frac = y - a;
        if frac.abs() < 1e-15 {
            return Some(BigRational::new(h1, k1));
        }
        y = 1.0 / frac;
    }
    None
}

/// Aberth iteration on the polynomial with the given rational coefficients.
fn approximate_roots(p: &[BigRational]) -> Option<Vec<Complex64>> {
    let n = p.len() - 1;
    let lead = p[n].clone();
    let c: Vec<f64> = p.iter().map(|x| (x / &lead).to_f64()).collect::<Option<_>>()?;
    if c.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let radius = 1.0 + c[..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for a in c.iter().rev() {
            d = d * x + v;
            v = v * x + a;
        }
        (v, d)
    };
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (v, d) = eval(z[k]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    s += 1.0 / (z[k] - z[j]);
                }
            }
            let w = ratio / (1.0 - ratio * s);
            if w.is_finite() {
                z[k] -= w;
                moved = moved.max(w.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    Some(z)
}

/// Integer gcd helper for content computations elsewhere.
pub fn rational_content(values: &[BigRational]) -> BigRational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for v in values {
        num = num.gcd(v.numer());
        den = den.lcm(v.denom());
    }
    if num.is_zero() {
        BigRational::one()
    } else {
        BigRational::new(num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> UPoly {
        v.iter().map(|&x| Coeff::from_int(x)).collect()
    }

    #[test]
    fn rational_and_quadratic_roots() {
        let k = FieldTower::rationals();
        // (x - 1/3)(x + 2)(x^2 - 3)
        let p = mul(&k, &mul(&k, &ints(&[-1, 3]), &ints(&[2, 1])), &ints(&[-3, 0, 1]));
        let r = roots(&k, &p, true).unwrap();
        assert_eq!(r.roots.len(), 4);
        assert!(r.unresolved.is_empty());
        assert_eq!(r.tower.len(), 1);
        for x in &r.roots {
            assert!(eval(&r.tower, &p, x).is_zero());
        }
    }

    #[test]
    fn existing_generator_is_reused() {
        let k = FieldTower::rationals()
            .extend(ExtensionStep::algebraic("i", ints(&[1, 0, 1])))
            .unwrap();
        let r = roots(&k, &ints(&[4, 0, 1]), true).unwrap();
        assert_eq!(r.tower.len(), 1);
        assert_eq!(r.roots.len(), 2);
    }

    #[test]
    fn sixth_root_supplies_square_roots() {
        let k = FieldTower::rationals()
            .extend(ExtensionStep::algebraic("t", ints(&[108, 0, 0, 0, 0, 0, 1])))
            .unwrap();
        let (k2, s) = sqrt_in_tower(&k, &BigRational::from_integer((-3).into()), false).unwrap().unwrap();
        assert_eq!(k2.len(), 1);
        assert_eq!(k.mul(&s, &s), Coeff::from_int(-3));
    }

    #[test]
    fn cubic_without_rational_roots_is_unresolved() {
        let k = FieldTower::rationals();
        let r = roots(&k, &ints(&[-2, 0, 0, 1]), true).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.unresolved.len(), 1);
    }

    #[test]
    fn quartic_splits_into_quadratics() {
        let k = FieldTower::rationals();
        let p = mul(&k, &ints(&[-3, 0, 1]), &ints(&[1, 0, 1]));
        let r = roots(&k, &p, true).unwrap();
        assert_eq!(r.roots.len(), 4);
        assert_eq!(r.tower.len(), 2);
    }

    #[test]
    fn yun_multiplicities() {
        let k = FieldTower::rationals();
        // (x-1)^2 (x+1)^2
        let a = mul(&k, &ints(&[-1, 0, 1]), &ints(&[-1, 0, 1]));
        let d = squarefree_decomposition(&k, &a).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].1, 2);
        assert_eq!(degree(&d[0].0), Some(2));
        // x^3 (x - 2)
        let b = mul(&k, &ints(&[0, 0, 0, 1]), &ints(&[-2, 1]));
        let d = squarefree_decomposition(&k, &b).unwrap();
        let mults: Vec<usize> = d.iter().map(|(_, m)| *m).collect();
        assert_eq!(mults, vec![1, 3]);
    }
}
