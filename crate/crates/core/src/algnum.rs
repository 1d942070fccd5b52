//! Exact arithmetic in multi-quadratic extensions of the rationals.
//!
//! An [`AlgebraicReal`] is a finite rational combination of square roots of
//! square-free integers. A negative radicand `d` stands for `i·√|d|`, so the
//! same type also carries the complex structure constants that unitary
//! irreducible representations of cyclic groups need.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot order non-real value {0}")]
    NotReal(String),
    #[error("radicand {0} is not square-free")]
    NotSquareFree(i64),
    #[error("malformed number: {0}")]
    Parse(String),
}

/// Exact element of `ℚ(√d₁, …, √d_k)`.
///
/// Terms are kept sorted by radicand with no zero coefficients, so derived
/// equality and hashing are equality and hashing of the field element.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AlgebraicReal {
    terms: Vec<(i64, BigRational)>,
}

fn is_square_free(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let mut m = d.unsigned_abs();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// Writes `d = m²·c` with `c` square-free carrying the sign of `d`.
fn square_part(d: i64) -> (i64, i64) {
    let sign = d.signum();
    let mut rest = d.unsigned_abs();
    let mut m = 1u64;
    let mut p = 2u64;
    while p * p <= rest {
        while rest % (p * p) == 0 {
            rest /= p * p;
            m *= p;
        }
        p += 1;
    }
    (m as i64, sign * rest as i64)
}

/// `√a·√b = s·√c` for square-free `a`, `b`.
fn mul_radicands(a: i64, b: i64) -> (i64, i64) {
    let g = a.gcd(&b);
    let c = (a / g)
        .checked_mul(b / g)
        .expect("radicand product overflows i64");
    let s = if a < 0 && b < 0 { -g } else { g };
    (s, c)
}

fn prime_factors(d: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut m = d.unsigned_abs();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            out.push(p as i64);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m as i64);
    }
    out
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl AlgebraicReal {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den`; panics when `den == 0`.
    pub fn rational(num: i64, den: i64) -> Self {
        Self::from_rational(ratio(num, den))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self::from_terms(vec![(1, q)])
    }

    /// `√d` for any integer `d`, with square factors pulled out.
    pub fn sqrt(d: i64) -> Self {
        if d == 0 {
            return Self::zero();
        }
        let (m, c) = square_part(d);
        Self::from_terms(vec![(c, BigRational::from_integer(BigInt::from(m)))])
    }

    /// `coeff·√d` for a square-free radicand.
    pub fn surd(coeff: BigRational, d: i64) -> Result<Self, AlgError> {
        if !is_square_free(d) {
            return Err(AlgError::NotSquareFree(d));
        }
        Ok(Self::from_terms(vec![(d, coeff)]))
    }

    /// The imaginary unit, `√(-1)`.
    pub fn i() -> Self {
        Self::sqrt(-1)
    }

    fn from_terms(mut terms: Vec<(i64, BigRational)>) -> Self {
        terms.sort_by_key(|(d, _)| *d);
        let mut out: Vec<(i64, BigRational)> = Vec::with_capacity(terms.len());
        for (d, c) in terms {
            match out.last_mut() {
                Some((ld, lc)) if *ld == d => *lc += c,
                _ => out.push((d, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Self { terms: out }
    }

    /// Re-normalizes the term list. Values are always canonical, so this is
    /// the identity on anything built through the public API.
    pub fn canonical(&self) -> Self {
        Self::from_terms(self.terms.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == 1 && self.terms[0].1.is_one()
    }

    /// Coefficients keyed by radicand; `1` is the rational part.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.terms.iter().map(|(d, c)| (*d, c))
    }

    pub fn coefficient(&self, d: i64) -> BigRational {
        self.terms
            .iter()
            .find(|(r, _)| *r == d)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|(d, _)| *d == 1)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        self.is_rational().then(|| self.coefficient(1))
    }

    /// No negative radicands, i.e. the value lies in a real field.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(d, _)| *d > 0)
    }

    /// Complex conjugation: negates exactly the coefficients of negative radicands.
    pub fn conj(&self) -> Self {
        self.flip(|d| d < 0)
    }

    fn flip(&self, hit: impl Fn(i64) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(d, c)| (*d, if hit(*d) { -c.clone() } else { c.clone() }))
                .collect(),
        }
    }

    /// Multiplicative inverse, rationalizing the denominator one Galois
    /// generator at a time.
    pub fn inv(&self) -> Result<Self, AlgError> {
        if self.is_zero() {
            return Err(AlgError::DivisionByZero);
        }
        let mut num = Self::one();
        let mut den = self.clone();
        while !den.is_rational() {
            let generator = den
                .terms
                .iter()
                .find_map(|(d, _)| {
                    if *d < 0 {
                        Some(-1)
                    } else if *d > 1 {
                        prime_factors(*d).first().copied()
                    } else {
                        None
                    }
                })
                .expect("non-rational value has a radicand other than 1");
            let conjugate = if generator == -1 {
                den.flip(|d| d < 0)
            } else {
                den.flip(|d| d % generator == 0)
            };
            num = &num * &conjugate;
            den = &den * &conjugate;
        }
        let q = den.coefficient(1);
        Ok(num.scale(&q.recip()))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(d, c)| (*d, c * q)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        out
    }

    /// Real part as a float.
    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(d, _)| *d > 0)
            .map(|(d, c)| c.to_f64().unwrap_or(f64::NAN) * (*d as f64).sqrt())
            .sum()
    }

    /// Imaginary part as a float.
    pub fn imag_f64(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(d, _)| *d < 0)
            .map(|(d, c)| c.to_f64().unwrap_or(f64::NAN) * (d.unsigned_abs() as f64).sqrt())
            .sum()
    }

    /// Encloses the value in `[lo, hi]` using `bits` binary digits per surd.
    fn enclose(&self, bits: u32) -> (BigRational, BigRational) {
        let scale = BigInt::one() << (2 * bits);
        let den = BigInt::one() << bits;
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (d, c) in &self.terms {
            let (a, b) = if *d == 1 {
                (BigRational::one(), BigRational::one())
            } else {
                let floor = (BigInt::from(*d) * &scale).sqrt();
                let a = BigRational::new(floor.clone(), den.clone());
                let b = BigRational::new(floor + 1, den.clone());
                (a, b)
            };
            if c.is_positive() {
                lo += c * &a;
                hi += c * &b;
            } else {
                lo += c * &b;
                hi += c * &a;
            }
        }
        (lo, hi)
    }

    /// Sign of a real value, decided exactly.
    pub fn signum_real(&self) -> Result<Ordering, AlgError> {
        if !self.is_real() {
            return Err(AlgError::NotReal(self.to_string()));
        }
        if self.is_zero() {
            return Ok(Ordering::Equal);
        }
        if self.is_rational() {
            return Ok(self.coefficient(1).cmp(&BigRational::zero()));
        }
        let mut bits = 16;
        loop {
            let (lo, hi) = self.enclose(bits);
            if lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if hi.is_negative() {
                return Ok(Ordering::Less);
            }
            bits *= 2;
        }
    }

    /// Orders two real values by their embedding with `√d > 0`.
    pub fn compare(&self, other: &Self) -> Result<Ordering, AlgError> {
        if !self.is_real() {
            return Err(AlgError::NotReal(self.to_string()));
        }
        if !other.is_real() {
            return Err(AlgError::NotReal(other.to_string()));
        }
        if self == other {
            return Ok(Ordering::Equal);
        }
        (self - other).signum_real()
    }

    pub fn is_positive(&self) -> bool {
        matches!(self.signum_real(), Ok(Ordering::Greater))
    }
}

impl From<i64> for AlgebraicReal {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigRational> for AlgebraicReal {
    fn from(q: BigRational) -> Self {
        Self::from_rational(q)
    }
}

impl Add<&AlgebraicReal> for &AlgebraicReal {
    type Output = AlgebraicReal;

    fn add(self, rhs: &AlgebraicReal) -> AlgebraicReal {
        let mut out = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < rhs.terms.len() {
            let (da, ca) = &self.terms[i];
            let (db, cb) = &rhs.terms[j];
            match da.cmp(db) {
                Ordering::Less => {
                    out.push((*da, ca.clone()));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((*db, cb.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = ca + cb;
                    if !c.is_zero() {
                        out.push((*da, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&rhs.terms[j..]);
        AlgebraicReal { terms: out }
    }
}

impl Neg for &AlgebraicReal {
    type Output = AlgebraicReal;

    fn neg(self) -> AlgebraicReal {
        AlgebraicReal {
            terms: self.terms.iter().map(|(d, c)| (*d, -c.clone())).collect(),
        }
    }
}

impl Sub<&AlgebraicReal> for &AlgebraicReal {
    type Output = AlgebraicReal;

    fn sub(self, rhs: &AlgebraicReal) -> AlgebraicReal {
        self + &(-rhs)
    }
}

impl Mul<&AlgebraicReal> for &AlgebraicReal {
    type Output = AlgebraicReal;

    fn mul(self, rhs: &AlgebraicReal) -> AlgebraicReal {
        if self.is_zero() || rhs.is_zero() {
            return AlgebraicReal::zero();
        }
        if self.is_rational() {
            return rhs.scale(&self.terms[0].1);
        }
        if rhs.is_rational() {
            return self.scale(&rhs.terms[0].1);
        }
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (da, ca) in &self.terms {
            for (db, cb) in &rhs.terms {
                let (s, c) = mul_radicands(*da, *db);
                terms.push((c, ca * cb * BigInt::from(s)));
            }
        }
        AlgebraicReal::from_terms(terms)
    }
}

impl Div<&AlgebraicReal> for &AlgebraicReal {
    type Output = AlgebraicReal;

    /// Panics on division by zero, like the rational types it wraps.
    fn div(self, rhs: &AlgebraicReal) -> AlgebraicReal {
        self * &rhs.inv().expect("division by zero")
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<AlgebraicReal> for AlgebraicReal {
            type Output = AlgebraicReal;
            fn $method(self, rhs: AlgebraicReal) -> AlgebraicReal {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&AlgebraicReal> for AlgebraicReal {
            type Output = AlgebraicReal;
            fn $method(self, rhs: &AlgebraicReal) -> AlgebraicReal {
                (&self).$method(rhs)
            }
        }
        impl $tr<AlgebraicReal> for &AlgebraicReal {
            type Output = AlgebraicReal;
            fn $method(self, rhs: AlgebraicReal) -> AlgebraicReal {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for AlgebraicReal {
    type Output = AlgebraicReal;
    fn neg(self) -> AlgebraicReal {
        -&self
    }
}

impl AddAssign<&AlgebraicReal> for AlgebraicReal {
    fn add_assign(&mut self, rhs: &AlgebraicReal) {
        *self = &*self + rhs;
    }
}

impl AddAssign for AlgebraicReal {
    fn add_assign(&mut self, rhs: AlgebraicReal) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&AlgebraicReal> for AlgebraicReal {
    fn sub_assign(&mut self, rhs: &AlgebraicReal) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&AlgebraicReal> for AlgebraicReal {
    fn mul_assign(&mut self, rhs: &AlgebraicReal) {
        *self = &*self * rhs;
    }
}

impl Sum for AlgebraicReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a AlgebraicReal> for AlgebraicReal {
    fn sum<I: Iterator<Item = &'a AlgebraicReal>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl Product for AlgebraicReal {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |acc, x| acc * x)
    }
}

fn fmt_coeff(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("({}/{})", c.numer(), c.denom())
    }
}

impl fmt::Display for AlgebraicReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // irrational terms first, rational part last
        let ordered = self
            .terms
            .iter()
            .filter(|(d, _)| *d != 1)
            .chain(self.terms.iter().filter(|(d, _)| *d == 1));
        for (k, (d, c)) in ordered.enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if *d == 1 {
                if mag.is_integer() {
                    write!(f, "{}", mag.numer())?;
                } else {
                    write!(f, "{}/{}", mag.numer(), mag.denom())?;
                }
                continue;
            }
            if !mag.is_one() {
                write!(f, "{}", fmt_coeff(&mag))?;
            }
            if *d < 0 {
                write!(f, "√({d})")?;
            } else {
                write!(f, "√{d}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for AlgebraicReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgebraicReal({self})")
    }
}

impl Serialize for AlgebraicReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        // keys in radicand order rather than string order
        let mut m = serializer.serialize_map(Some(self.terms.len()))?;
        for (d, c) in &self.terms {
            m.serialize_entry(
                &d.to_string(),
                &[c.numer().to_string(), c.denom().to_string()],
            )?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for AlgebraicReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, [String; 2]> = BTreeMap::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(raw.len());
        for (k, [n, d]) in raw {
            let radicand: i64 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad radicand {k:?}")))?;
            if radicand != 1 && !is_square_free(radicand) {
                return Err(D::Error::custom(AlgError::NotSquareFree(radicand)));
            }
            let num: BigInt = n
                .parse()
                .map_err(|_| D::Error::custom(format!("bad numerator {n:?}")))?;
            let den: BigInt = d
                .parse()
                .map_err(|_| D::Error::custom(format!("bad denominator {d:?}")))?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            terms.push((radicand, BigRational::new(num, den)));
        }
        Ok(AlgebraicReal::from_terms(terms))
    }
}
