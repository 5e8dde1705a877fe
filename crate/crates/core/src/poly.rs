//! Univariate polynomials with exact rational coefficients.
//!
//! Polynomials are plain `Vec<Rat>` with the constant term first; the zero
//! polynomial is the empty vector (or all zeros).  This module carries only
//! what the rest of the crate needs: division, gcd, squarefree tests,
//! cyclotomic polynomials, and a small exact factorisation routine
//! (rational roots plus Kronecker interpolation) used to split semisimple
//! module layers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalars::{rat, Rat};

pub fn degree(p: &[Rat]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub fn trim(mut p: Vec<Rat>) -> Vec<Rat> {
    while let Some(last) = p.last() {
        if last.is_zero() {
            p.pop();
        } else {
            break;
        }
    }
    p
}

pub fn is_zero(p: &[Rat]) -> bool {
    degree(p).is_none()
}

pub fn add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = vec![Rat::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    trim(out)
}

pub fn mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if is_zero(a) || is_zero(b) {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            let t = x * y;
            out[i + j] += t;
        }
    }
    trim(out)
}

pub fn scale(a: &[Rat], c: &Rat) -> Vec<Rat> {
    trim(a.iter().map(|x| x * c).collect())
}

/// Euclidean division `a = q*b + r` with `deg r < deg b`. Panics if `b = 0`.
pub fn divmod(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let db = degree(b).expect("division by zero polynomial");
    let lead_inv = b[db].recip();
    let mut rem: Vec<Rat> = trim(a.to_vec());
    let mut quot = vec![Rat::zero(); rem.len().saturating_sub(db)];
    while let Some(dr) = degree(&rem) {
        if dr < db {
            break;
        }
        let coef = &rem[dr] * &lead_inv;
        let shift = dr - db;
        for i in 0..=db {
            let t = &b[i] * &coef;
            rem[shift + i] -= t;
        }
        quot[shift] = coef;
        rem = trim(rem);
    }
    (trim(quot), rem)
}

/// Exact quotient; panics if the division is not exact.
pub fn div_exact(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let (q, r) = divmod(a, b);
    assert!(is_zero(&r), "polynomial division was not exact");
    q
}

pub fn divides(b: &[Rat], a: &[Rat]) -> bool {
    if is_zero(a) {
        return true;
    }
    let (_, r) = divmod(a, b);
    is_zero(&r)
}

pub fn derivative(p: &[Rat]) -> Vec<Rat> {
    if p.len() <= 1 {
        return Vec::new();
    }
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * rat(i as i64))
            .collect(),
    )
}

/// Monic gcd via the Euclidean algorithm.
pub fn gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while !is_zero(&y) {
        let (_, r) = divmod(&x, &y);
        x = y;
        y = r;
    }
    make_monic(x)
}

/// Extended gcd: returns `(g, s, t)` with `s*a + t*b = g`, `g` monic.
pub fn extended_gcd(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>, Vec<Rat>) {
    let mut r0 = trim(a.to_vec());
    let mut r1 = trim(b.to_vec());
    let mut s0 = vec![Rat::one()];
    let mut s1 = Vec::new();
    let mut t0 = Vec::new();
    let mut t1 = vec![Rat::one()];
    while !is_zero(&r1) {
        let (q, r) = divmod(&r0, &r1);
        let qs = mul(&q, &s1);
        let qt = mul(&q, &t1);
        let ns = add(&s0, &scale(&qs, &rat(-1)));
        let nt = add(&t0, &scale(&qt, &rat(-1)));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = ns;
        t0 = t1;
        t1 = nt;
    }
    if let Some(d) = degree(&r0) {
        let c = r0[d].recip();
        (scale(&r0, &c), scale(&s0, &c), scale(&t0, &c))
    } else {
        (r0, s0, t0)
    }
}

pub fn make_monic(p: Vec<Rat>) -> Vec<Rat> {
    match degree(&p) {
        None => p,
        Some(d) => {
            let c = p[d].recip();
            scale(&p, &c)
        }
    }
}

pub fn is_squarefree(p: &[Rat]) -> bool {
    match degree(p) {
        None | Some(0) => false,
        Some(_) => degree(&gcd(p, &derivative(p))) == Some(0),
    }
}

pub fn eval(p: &[Rat], x: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Euler's totient, by trial division.
pub fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            while n % d == 0 {
                n /= d;
            }
            result -= result / d;
        }
        d += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// The `d`-th cyclotomic polynomial, by exact division of `x^d - 1` by the
/// cyclotomic polynomials of the proper divisors.
pub fn cyclotomic(d: u64) -> Vec<Rat> {
    let mut num = vec![Rat::zero(); d as usize + 1];
    num[0] = rat(-1);
    num[d as usize] = rat(1);
    let mut p = num;
    for e in 1..d {
        if d % e == 0 {
            p = div_exact(&p, &cyclotomic(e));
        }
    }
    p
}

/// All `d` such that `phi(d) <= n`; the orders a root of unity can have when
/// its minimal polynomial fits inside degree `n`.
pub fn unit_root_orders(n: usize) -> Vec<u64> {
    let bound = 2 * (n as u64) * (n as u64) + 1;
    (1..=bound).filter(|&d| euler_phi(d) <= n as u64).collect()
}

fn content_and_primitive(p: &[Rat]) -> (Rat, Vec<BigInt>) {
    // common denominator, then gcd of numerators
    let mut denom = BigInt::one();
    for c in p {
        denom = denom.lcm(c.denom());
    }
    let ints: Vec<BigInt> = p.iter().map(|c| c.numer() * (&denom / c.denom())).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    let prim: Vec<BigInt> = ints.iter().map(|c| c / &g).collect();
    (Rat::new(g, denom), prim)
}

fn divisors_with_sign(n: &BigInt) -> Vec<BigInt> {
    // all divisors of |n|, both signs; |n| is expected to stay small in the
    // factorisation contexts this is used for
    let m = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= m {
        if (&m % &d).is_zero() {
            out.push(d.clone());
            out.push(-d.clone());
            let e = &m / &d;
            if e != d {
                out.push(e.clone());
                out.push(-e);
            }
        }
        d += 1;
    }
    out.sort();
    out
}

/// Rational roots of `p`, by the rational root theorem on the primitive part.
pub fn rational_roots(p: &[Rat]) -> Vec<Rat> {
    let Some(d) = degree(p) else {
        return Vec::new();
    };
    let (_, prim) = content_and_primitive(&p[..=d]);
    let mut shift = 0usize;
    while prim[shift].is_zero() {
        shift += 1;
    }
    let mut roots = Vec::new();
    if shift > 0 {
        roots.push(Rat::zero());
    }
    let a0 = &prim[shift];
    let an = &prim[d];
    for num in divisors_with_sign(a0) {
        for den in divisors_with_sign(an) {
            if den.is_negative() {
                continue;
            }
            let cand = Rat::new(num.clone(), den.clone());
            if eval(p, &cand).is_zero() && !roots.contains(&cand) {
                roots.push(cand.clone());
            }
        }
    }
    roots.sort();
    roots
}

/// Factors a nonconstant rational polynomial into monic irreducible factors
/// with multiplicity, returned as `(factor, multiplicity)` pairs.
///
/// Linear factors come from the rational root theorem; what remains is
/// attacked degree by degree with Kronecker interpolation.  This is meant for
/// the small minimal polynomials arising from endomorphism algebras, not as a
/// general-purpose factoring engine.
pub fn factor(p: &[Rat]) -> Vec<(Vec<Rat>, usize)> {
    let mut result: Vec<(Vec<Rat>, usize)> = Vec::new();
    let mut rest = make_monic(trim(p.to_vec()));
    assert!(degree(&rest).is_some(), "cannot factor the zero polynomial");

    let push = |f: Vec<Rat>, result: &mut Vec<(Vec<Rat>, usize)>| {
        for entry in result.iter_mut() {
            if entry.0 == f {
                entry.1 += 1;
                return;
            }
        }
        result.push((f, 1));
    };

    // strip rational roots first
    loop {
        if degree(&rest) == Some(0) {
            return result;
        }
        let roots = rational_roots(&rest);
        if roots.is_empty() {
            break;
        }
        for r in roots {
            let lin = vec![-r.clone(), Rat::one()];
            while divides(&lin, &rest) {
                rest = div_exact(&rest, &lin);
                push(lin.clone(), &mut result);
            }
        }
    }

    // Kronecker for the rest
    'outer: while let Some(d) = degree(&rest) {
        if d == 0 {
            break;
        }
        if d <= 3 {
            // no rational roots and degree <= 3: irreducible over Q
            push(std::mem::take(&mut rest), &mut result);
            break;
        }
        for fd in 2..=(d / 2) {
            if let Some(f) = kronecker_factor(&rest, fd) {
                while divides(&f, &rest) {
                    rest = div_exact(&rest, &f);
                }
                // f found by Kronecker at minimal degree is irreducible
                let mult = {
                    let mut m = 0;
                    let mut probe = trim(p.to_vec());
                    while divides(&f, &probe) {
                        probe = div_exact(&probe, &f);
                        m += 1;
                    }
                    m
                };
                for _ in 0..mult.max(1) {
                    push(f.clone(), &mut result);
                }
                continue 'outer;
            }
        }
        push(std::mem::take(&mut rest), &mut result);
        break;
    }
    result
}

/// Searches for a monic factor of exact degree `fd` by Kronecker
/// interpolation on the primitive integer model of `p`.
fn kronecker_factor(p: &[Rat], fd: usize) -> Option<Vec<Rat>> {
    let d = degree(p)?;
    if fd == 0 || fd >= d {
        return None;
    }
    let (_, prim) = content_and_primitive(&p[..=d]);
    let prim_rat: Vec<Rat> = prim.iter().map(|c| Rat::from_integer(c.clone())).collect();

    // evaluation points 0, 1, -1, 2, -2, ...
    let mut points: Vec<Rat> = vec![Rat::zero()];
    let mut k = 1i64;
    while points.len() < fd + 1 {
        points.push(rat(k));
        points.push(rat(-k));
        k += 1;
    }
    points.truncate(fd + 1);

    let values: Vec<BigInt> = points
        .iter()
        .map(|x| eval(&prim_rat, x).to_integer())
        .collect();
    if values.iter().any(|v| v.is_zero()) {
        // a rational root slipped through; callers strip roots first
        return None;
    }

    // enumerate divisor tuples
    let divisor_lists: Vec<Vec<BigInt>> = values.iter().map(divisors_with_sign).collect();
    let mut idx = vec![0usize; fd + 1];
    loop {
        let choice: Vec<Rat> = idx
            .iter()
            .zip(&divisor_lists)
            .map(|(&i, l)| Rat::from_integer(l[i].clone()))
            .collect();
        if let Some(cand) = lagrange(&points, &choice) {
            if degree(&cand) == Some(fd) {
                let cand = make_monic(cand);
                if divides(&cand, p) {
                    return Some(cand);
                }
            }
        }
        // odometer
        let mut carry = 0usize;
        loop {
            idx[carry] += 1;
            if idx[carry] < divisor_lists[carry].len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry > fd {
                return None;
            }
        }
    }
}

fn lagrange(xs: &[Rat], ys: &[Rat]) -> Option<Vec<Rat>> {
    let n = xs.len();
    let mut acc: Vec<Rat> = Vec::new();
    for i in 0..n {
        let mut term = vec![ys[i].clone()];
        for j in 0..n {
            if i == j {
                continue;
            }
            let denom = &xs[i] - &xs[j];
            if denom.is_zero() {
                return None;
            }
            let c = denom.recip();
            // term *= (x - xs[j]) / (xs[i] - xs[j])
            term = mul(&term, &[&(-&xs[j]) * &c, c.clone()]);
        }
        acc = add(&acc, &term);
    }
    Some(trim(acc))
}
