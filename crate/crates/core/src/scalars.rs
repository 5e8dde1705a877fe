//! Exact arithmetic substrate: rationals with p-adic valuations and
//! number-field elements used as representation coefficients.
//!
//! All magnitudes are carried as `log_q` values (`q = p`), so every formula
//! downstream is piecewise-linear in exact rational coordinates.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Rat = num_rational::BigRational;

/// Shorthand for small rational constants.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `n/d` as an exact rational. Panics on `d = 0`.
pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// A finite place of `Q`: a prime `p`, with residue size `q = p` used as the
/// base of all logarithms at this place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimePlace {
    p: u64,
}

impl PrimePlace {
    /// Primality is verified at construction.
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::invalid(format!("{p} is not prime")));
        }
        Ok(PrimePlace { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Residue size used as log base; equal to `p` for places of `Q`.
    pub fn q(&self) -> u64 {
        self.p
    }

    /// Exact valuation of a rational at this place.
    pub fn valuation(&self, x: &Rat) -> Valuation {
        if Zero::is_zero(x) {
            return Valuation::Infinite;
        }
        let p = BigInt::from(self.p);
        Valuation::Finite(int_valuation(x.numer(), &p) - int_valuation(x.denom(), &p))
    }

    /// `log_q |x|`, i.e. the negated valuation; `LogMag::NegInf` for zero.
    pub fn log_abs(&self, x: &Rat) -> LogMag {
        match self.valuation(x) {
            Valuation::Infinite => LogMag::NegInf,
            Valuation::Finite(v) => LogMag::Finite(rat(-v)),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn int_valuation(x: &BigInt, p: &BigInt) -> i64 {
    debug_assert!(!x.is_zero());
    let mut v = 0i64;
    let mut cur = x.abs();
    loop {
        let (q, r) = cur.div_rem(p);
        if r.is_zero() {
            v += 1;
            cur = q;
        } else {
            return v;
        }
    }
}

/// Extended integer: the value group together with the `+infinity` sentinel
/// for the valuation of zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

/// `log_q` of a magnitude: an exact rational, or `-infinity` for zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogMag {
    NegInf,
    Finite(Rat),
}

impl LogMag {
    pub fn finite(self) -> Option<Rat> {
        match self {
            LogMag::Finite(r) => Some(r),
            LogMag::NegInf => None,
        }
    }

    pub fn is_neg_inf(&self) -> bool {
        matches!(self, LogMag::NegInf)
    }

    pub fn plus(&self, delta: &Rat) -> LogMag {
        match self {
            LogMag::NegInf => LogMag::NegInf,
            LogMag::Finite(r) => LogMag::Finite(r + delta),
        }
    }
}

impl PartialOrd for LogMag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogMag {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (LogMag::NegInf, LogMag::NegInf) => Ordering::Equal,
            (LogMag::NegInf, _) => Ordering::Less,
            (_, LogMag::NegInf) => Ordering::Greater,
            (LogMag::Finite(a), LogMag::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for LogMag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogMag::NegInf => write!(f, "-inf"),
            LogMag::Finite(r) => write!(f, "{r}"),
        }
    }
}

/// An exact rational together with a prime place; carries its valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuedScalar {
    pub value: Rat,
    pub place: PrimePlace,
}

impl ValuedScalar {
    pub fn new(value: Rat, place: PrimePlace) -> Self {
        ValuedScalar { value, place }
    }

    /// Exact p-adic valuation of the reduced fraction; `Infinite` for zero.
    pub fn valuation(&self) -> Valuation {
        self.place.valuation(&self.value)
    }

    /// `log_q|x| = -valuation(x)`; `NegInf` for zero.
    pub fn log_abs(&self) -> LogMag {
        self.place.log_abs(&self.value)
    }
}

/// Field operations needed by the generic linear algebra.
///
/// `zero_like`/`one_like` take a witness so that number-field elements can
/// carry their field without a global context.
pub trait Scalar: Clone + PartialEq + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_int_like(&self, n: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;

    fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv().expect("division by zero"))
    }
}

impl Scalar for Rat {
    fn zero_like(&self) -> Self {
        Rat::zero()
    }
    fn one_like(&self) -> Self {
        Rat::one()
    }
    fn from_int_like(&self, n: i64) -> Self {
        rat(n)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// A number field `Q[x]/(m)` presented by one monic squarefree rational
/// polynomial; no embedding into `C` is ever computed.
#[derive(Debug, PartialEq, Eq)]
pub struct NumberField {
    /// Monic minimal polynomial, low degree first; length = degree + 1.
    minpoly: Vec<Rat>,
}

impl NumberField {
    /// Checks that `minpoly` is monic of degree >= 1 and squarefree.
    pub fn new(minpoly: Vec<Rat>) -> Result<Arc<Self>> {
        if minpoly.len() < 2 {
            return Err(Error::invalid("minimal polynomial must have degree >= 1"));
        }
        if minpoly.last().unwrap() != &Rat::one() {
            return Err(Error::invalid("minimal polynomial must be monic"));
        }
        if !crate::poly::is_squarefree(&minpoly) {
            return Err(Error::invalid("minimal polynomial must be squarefree"));
        }
        Ok(Arc::new(NumberField { minpoly }))
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    pub fn minpoly(&self) -> &[Rat] {
        &self.minpoly
    }

    /// The zero element of this field.
    pub fn zero(self: &Arc<Self>) -> NfElem {
        NfElem {
            field: Arc::clone(self),
            coeffs: vec![Rat::zero(); self.degree()],
        }
    }

    pub fn one(self: &Arc<Self>) -> NfElem {
        self.from_rat(Rat::one())
    }

    pub fn from_rat(self: &Arc<Self>, r: Rat) -> NfElem {
        let mut coeffs = vec![Rat::zero(); self.degree()];
        coeffs[0] = r;
        NfElem {
            field: Arc::clone(self),
            coeffs,
        }
    }

    /// The generator `x` of the field (the class of the variable).
    pub fn generator(self: &Arc<Self>) -> NfElem {
        let mut coeffs = vec![Rat::zero(); self.degree()];
        if self.degree() >= 2 {
            coeffs[1] = Rat::one();
            NfElem {
                field: Arc::clone(self),
                coeffs,
            }
        } else {
            // degree-1 field: x = -m_0
            coeffs[0] = -self.minpoly[0].clone();
            NfElem {
                field: Arc::clone(self),
                coeffs,
            }
        }
    }

    /// Builds an element from raw coefficients, reducing modulo the minimal
    /// polynomial. Raw degree is bounded to catch runaway inputs.
    pub fn element(self: &Arc<Self>, raw: Vec<Rat>) -> Result<NfElem> {
        let bound = 8 * self.degree().max(1) + 8;
        if raw.len() > bound {
            return Err(Error::invalid(format!(
                "coefficient vector of length {} exceeds the internal degree bound {bound}",
                raw.len()
            )));
        }
        Ok(self.reduce(raw))
    }

    fn reduce(self: &Arc<Self>, mut raw: Vec<Rat>) -> NfElem {
        let deg = self.degree();
        while raw.len() > deg {
            // kill the leading coefficient using x^deg = -(m_0 + ... + m_{deg-1} x^{deg-1})
            let top = raw.pop().unwrap();
            if !Zero::is_zero(&top) {
                let shift = raw.len() - deg;
                for i in 0..deg {
                    let t = &self.minpoly[i] * &top;
                    raw[shift + i] -= t;
                }
            }
        }
        raw.resize(deg, Rat::zero());
        NfElem {
            field: Arc::clone(self),
            coeffs: raw,
        }
    }
}

/// An element of a [`NumberField`], stored as the canonical reduced
/// representative of degree < deg(minpoly). Equality is coefficient-wise.
#[derive(Clone)]
pub struct NfElem {
    field: Arc<NumberField>,
    coeffs: Vec<Rat>,
}

impl NfElem {
    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Canonical reduced representative. Elements are already kept reduced,
    /// so this is the identity; it exists so callers can normalize data that
    /// crossed a serialization boundary.
    pub fn normalize(&self) -> NfElem {
        self.clone()
    }

    /// The rational value if this element lies in the prime field.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.coeffs.iter().skip(1).all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Matrix of multiplication by `self` on the `Q`-basis `1, x, ..., x^{d-1}`,
    /// returned column-major as `d` columns of length `d`.
    pub fn mult_matrix(&self) -> Vec<Vec<Rat>> {
        let d = self.field.degree();
        let mut cols = Vec::with_capacity(d);
        let mut cur = self.clone();
        for j in 0..d {
            if j > 0 {
                cur = cur.mul_by_x();
            }
            cols.push(cur.coeffs.clone());
        }
        cols
    }

    fn mul_by_x(&self) -> NfElem {
        let mut raw = vec![Rat::zero()];
        raw.extend(self.coeffs.iter().cloned());
        self.field.reduce(raw)
    }
}

impl PartialEq for NfElem {
    fn eq(&self, other: &Self) -> bool {
        self.field.minpoly == other.field.minpoly && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for NfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nf[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl Scalar for NfElem {
    fn zero_like(&self) -> Self {
        self.field.zero()
    }
    fn one_like(&self) -> Self {
        self.field.one()
    }
    fn from_int_like(&self, n: i64) -> Self {
        self.field.from_rat(rat(n))
    }
    fn add(&self, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        NfElem {
            field: Arc::clone(&self.field),
            coeffs,
        }
    }
    fn sub(&self, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        NfElem {
            field: Arc::clone(&self.field),
            coeffs,
        }
    }
    fn mul(&self, other: &Self) -> Self {
        let d = self.field.degree();
        let mut raw = vec![Rat::zero(); 2 * d];
        for (i, a) in self.coeffs.iter().enumerate() {
            if Zero::is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if Zero::is_zero(b) {
                    continue;
                }
                let t = a * b;
                raw[i + j] += t;
            }
        }
        self.field.reduce(raw)
    }
    fn neg(&self) -> Self {
        NfElem {
            field: Arc::clone(&self.field),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // extended Euclid in Q[x] against the minimal polynomial; the gcd is a
        // nonzero constant because the minimal polynomial is squarefree and
        // self is reduced (shared factors would force a zero divisor, which a
        // field presentation by an irreducible polynomial excludes).
        let m = self.field.minpoly.clone();
        let a = self.coeffs.clone();
        let (g, _, t) = crate::poly::extended_gcd(&m, &a);
        if crate::poly::degree(&g) != Some(0) {
            // minpoly was squarefree but reducible and self is a zero divisor
            return None;
        }
        let c = g[0].clone();
        let inv_c = c.recip();
        let scaled: Vec<Rat> = t.iter().map(|x| x * &inv_c).collect();
        Some(self.field.reduce(scaled))
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}
