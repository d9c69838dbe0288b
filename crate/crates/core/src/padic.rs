//! Exact scalar arithmetic over Q(zeta_{p^h}) with p-adic valuations.
//!
//! Every scalar is a rational polynomial in a primitive p^h-th root of
//! unity, reduced modulo the p^h-th cyclotomic polynomial. Valuations are
//! computed exactly: v_p on Q directly, and v_p(Norm)/[Q(zeta):Q] via a
//! resultant for cyclotomic elements. Norms never appear as floats; the
//! whole crate works with the additive picture |x| = p^(-v(x)).

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Parse a rational from "num/den" or plain integer form.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let mk = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad integer {t:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = mk(d)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(mk(n)?, den))
        }
        None => Ok(BigRational::from(mk(s)?)),
    }
}

/// Canonical "num/den" form; integers print without the denominator.
pub fn ratio_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn ratio_i64(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn ratio_int(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// The residue characteristic. Primality is checked at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::NotPrime(p as u64));
        }
        let mut d = 2u32;
        while (d as u64) * (d as u64) <= p as u64 {
            if p % d == 0 {
                return Err(Error::NotPrime(p as u64));
            }
            d += 1;
        }
        Ok(Prime(p))
    }

    pub fn get(&self) -> u32 {
        self.0
    }

    pub fn big(&self) -> BigInt {
        BigInt::from(self.0)
    }

    /// p^k as a BigInt.
    pub fn pow_big(&self, k: u32) -> BigInt {
        self.big().pow(k)
    }

    /// Euler phi of p^h; phi(1) = 1 for h = 0.
    pub fn phi(&self, h: u32) -> usize {
        if h == 0 {
            1
        } else {
            (self.0 as usize - 1) * (self.0 as usize).pow(h - 1)
        }
    }

    /// v_p of a nonzero integer. Divides in chunks of p^64 and p^8 before
    /// the final single steps; valuations in the hundreds are routine once
    /// coefficient towers grow.
    pub fn val_int(&self, n: &BigInt) -> Option<i64> {
        if n.is_zero() {
            return None;
        }
        let p = self.big();
        let mut n = n.clone();
        let mut v = 0i64;
        if (&n % &p).is_zero() {
            for (chunk, width) in [(self.pow_big(64), 64i64), (self.pow_big(8), 8)] {
                loop {
                    let (q, r) = num::Integer::div_rem(&n, &chunk);
                    if r.is_zero() {
                        n = q;
                        v += width;
                    } else {
                        break;
                    }
                }
            }
            loop {
                let (q, r) = num::Integer::div_rem(&n, &p);
                if r.is_zero() {
                    n = q;
                    v += 1;
                } else {
                    break;
                }
            }
        }
        Some(v)
    }

    /// v_p of a rational, None for zero.
    pub fn val_ratio(&self, q: &BigRational) -> Option<i64> {
        Some(self.val_int(q.numer())? - self.val_int(q.denom()).expect("nonzero denom"))
    }

    /// v_p(n!) by Legendre's formula.
    pub fn val_factorial(&self, n: u64) -> u64 {
        let mut v = 0u64;
        let mut q = n / self.0 as u64;
        while q > 0 {
            v += q;
            q /= self.0 as u64;
        }
        v
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A valuation: the norm is p^(-q), so bigger q means smaller norm.
/// `Infinite` is the valuation of zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogValue {
    Finite(BigRational),
    Infinite,
}

impl LogValue {
    pub fn finite(q: BigRational) -> Self {
        LogValue::Finite(q)
    }

    pub fn from_int(n: i64) -> Self {
        LogValue::Finite(ratio_int(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, LogValue::Infinite)
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            LogValue::Finite(q) => Some(q),
            LogValue::Infinite => None,
        }
    }

    pub fn add(&self, other: &LogValue) -> LogValue {
        match (self, other) {
            (LogValue::Finite(a), LogValue::Finite(b)) => LogValue::Finite(a + b),
            _ => LogValue::Infinite,
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (LogValue::Finite(a), LogValue::Finite(b)) => a.cmp(b),
            (LogValue::Finite(_), LogValue::Infinite) => Ordering::Less,
            (LogValue::Infinite, LogValue::Finite(_)) => Ordering::Greater,
            (LogValue::Infinite, LogValue::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogValue::Finite(q) => write!(f, "{}", ratio_string(q)),
            LogValue::Infinite => write!(f, "inf"),
        }
    }
}

/// An element of Q(zeta_{p^h}): rational coefficients in the power basis
/// 1, zeta, ..., zeta^(phi(p^h)-1), reduced mod the cyclotomic polynomial.
/// Level 0 is plain Q. Equality is semantic: representations at different
/// levels compare equal when they name the same element.
#[derive(Clone, Debug, Eq)]
pub struct Scalar {
    prime: Prime,
    level: u32,
    coeffs: Vec<BigRational>,
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        if self.prime != other.prime {
            return false;
        }
        if self.level == other.level {
            return self.coeffs == other.coeffs;
        }
        let lvl = self.level.max(other.level);
        self.lift(lvl).coeffs == other.lift(lvl).coeffs
    }
}

impl Scalar {
    pub fn zero(prime: Prime, level: u32) -> Self {
        Scalar {
            prime,
            level,
            coeffs: vec![BigRational::zero(); prime.phi(level)],
        }
    }

    pub fn one(prime: Prime, level: u32) -> Self {
        Self::from_ratio(prime, level, BigRational::one())
    }

    pub fn from_ratio(prime: Prime, level: u32, q: BigRational) -> Self {
        let mut s = Self::zero(prime, level);
        s.coeffs[0] = q;
        s
    }

    pub fn from_int(prime: Prime, level: u32, n: i64) -> Self {
        Self::from_ratio(prime, level, ratio_int(n))
    }

    /// The chosen primitive p^level-th root of unity (level >= 1).
    pub fn zeta(prime: Prime, level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::LevelTooLow { have: 0, need: 1 });
        }
        let raw = vec![BigRational::zero(), BigRational::one()];
        Ok(Self::from_raw(prime, level, raw))
    }

    /// zeta^k for any integer k, reduced mod p^level.
    pub fn zeta_pow(prime: Prime, level: u32, k: i64) -> Result<Self> {
        if level == 0 {
            return Err(Error::LevelTooLow { have: 0, need: 1 });
        }
        let n = prime.pow_big(level);
        let mut kk = BigInt::from(k) % &n;
        if kk.sign() == num::bigint::Sign::Minus {
            kk += &n;
        }
        let e: usize = usize::try_from(&kk).expect("reduced exponent fits");
        let mut raw = vec![BigRational::zero(); e + 1];
        raw[e] = BigRational::one();
        Ok(Self::from_raw(prime, level, raw))
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational value when the element lies in Q, else None.
    pub fn as_ratio(&self) -> Option<&BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    /// Reduce a raw power-basis polynomial (any degree) mod the cyclotomic
    /// polynomial of level `level`. Exponents are first folded mod p^level,
    /// then the relation zeta^((p-1)p^(h-1)) = -(1 + zeta^(p^(h-1)) + ...)
    /// is applied from the top degree downward.
    fn from_raw(prime: Prime, level: u32, raw: Vec<BigRational>) -> Self {
        let phi = prime.phi(level);
        if level == 0 {
            let mut c = BigRational::zero();
            for r in raw {
                c += r;
            }
            return Scalar {
                prime,
                level,
                coeffs: vec![c],
            };
        }
        let n = (prime.get() as usize).pow(level);
        let step = (prime.get() as usize).pow(level - 1);
        let mut folded = vec![BigRational::zero(); n.max(raw.len())];
        for (e, c) in raw.into_iter().enumerate() {
            if !c.is_zero() {
                folded[e % n] += c;
            }
        }
        folded.truncate(n);
        // zeta^e for e in [phi, n): e = s + (p-1)*step, zeta^e = -sum_j zeta^(s + j*step)
        for e in (phi..n).rev() {
            if folded[e].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut folded[e], BigRational::zero());
            let s = e - (prime.get() as usize - 1) * step;
            for j in 0..(prime.get() as usize - 1) {
                folded[s + j * step] -= &c;
            }
        }
        folded.truncate(phi);
        Scalar {
            prime,
            level,
            coeffs: folded,
        }
    }

    /// Embed into the level-`level` field (zeta_old = zeta_new^(p^(diff))).
    pub fn lift(&self, level: u32) -> Scalar {
        if level <= self.level {
            return self.clone();
        }
        if self.level == 0 {
            return Scalar::from_ratio(self.prime, level, self.coeffs[0].clone());
        }
        let stride = (self.prime.get() as usize).pow(level - self.level);
        let mut raw = vec![BigRational::zero(); self.coeffs.len() * stride];
        for (i, c) in self.coeffs.iter().enumerate() {
            raw[i * stride] = c.clone();
        }
        Scalar::from_raw(self.prime, level, raw)
    }

    fn common(a: &Scalar, b: &Scalar) -> Result<(Scalar, Scalar)> {
        if a.prime != b.prime {
            return Err(Error::PrimeMismatch(a.prime.get(), b.prime.get()));
        }
        let lvl = a.level.max(b.level);
        Ok((a.lift(lvl), b.lift(lvl)))
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        let (mut a, b) = Self::common(self, other)?;
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x += y;
        }
        Ok(a)
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        let mut s = self.clone();
        for c in s.coeffs.iter_mut() {
            *c = -c.clone();
        }
        s
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        let (a, b) = Self::common(self, other)?;
        if a.level == 0 {
            return Ok(Scalar::from_ratio(
                a.prime,
                0,
                &a.coeffs[0] * &b.coeffs[0],
            ));
        }
        let mut raw = vec![BigRational::zero(); a.coeffs.len() + b.coeffs.len()];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    raw[i + j] += x * y;
                }
            }
        }
        Ok(Scalar::from_raw(a.prime, a.level, raw))
    }

    pub fn scale(&self, q: &BigRational) -> Scalar {
        let mut s = self.clone();
        for c in s.coeffs.iter_mut() {
            *c *= q;
        }
        s
    }

    pub fn pow(&self, mut e: u64) -> Result<Scalar> {
        let mut base = self.clone();
        let mut acc = Scalar::one(self.prime, self.level);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Multiplicative inverse, None for zero. Extended Euclid against the
    /// cyclotomic polynomial, which is irreducible, so any nonzero element
    /// is a unit.
    pub fn inverse(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        if let Some(q) = self.as_ratio() {
            return Some(Scalar::from_ratio(self.prime, self.level, q.recip()));
        }
        let phi = self.prime.phi(self.level);
        let step = (self.prime.get() as usize).pow(self.level - 1);
        let mut cyclo = vec![BigRational::zero(); phi + 1];
        for j in 0..self.prime.get() as usize {
            cyclo[j * step] = BigRational::one();
        }
        let (g, _, v) = poly_ext_gcd(&cyclo, &self.coeffs);
        // g is a nonzero constant; inverse = v/g reduced mod the cyclotomic
        let g0 = g.first()?.clone();
        if g0.is_zero() || poly_deg(&g) != Some(0) {
            return None;
        }
        let inv_raw: Vec<BigRational> = v.iter().map(|c| c / &g0).collect();
        Some(Scalar::from_raw(self.prime, self.level, inv_raw))
    }

    /// The p-adic valuation, normalized so that valuation(p) = 1, equal to
    /// v_p(Norm)/phi(p^h) for cyclotomic elements.
    ///
    /// Computed through the ramification filtration: after stripping the
    /// rational p-content, the element lies in Z_p[zeta] with some unit
    /// coefficient, and zeta - 1 is a uniformizer of that discrete
    /// valuation ring with residue field F_p (reduction sends zeta to 1).
    /// Dividing by zeta - 1 while the coefficient sum vanishes mod p
    /// counts the ramified part exactly; at most phi - 1 divisions happen.
    pub fn valuation(&self) -> LogValue {
        if self.is_zero() {
            return LogValue::Infinite;
        }
        if let Some(q) = self.as_ratio() {
            return LogValue::Finite(ratio_int(
                self.prime.val_ratio(q).expect("nonzero rational"),
            ));
        }
        let phi = self.prime.phi(self.level);
        let vmin = self
            .coeffs
            .iter()
            .filter_map(|c| self.prime.val_ratio(c))
            .min()
            .expect("nonzero element");
        let scale = if vmin >= 0 {
            BigRational::from(self.prime.pow_big(vmin as u32)).recip()
        } else {
            BigRational::from(self.prime.pow_big((-vmin) as u32))
        };
        let mut y = self.scale(&scale);
        let p = self.prime.big();
        let residue_sum_is_zero = |s: &Scalar| -> bool {
            let mut acc = BigInt::zero();
            for c in &s.coeffs {
                if c.is_zero() {
                    continue;
                }
                let den_inv = mod_inverse(c.denom(), &p).expect("denominator prime to p");
                acc += c.numer() * den_inv;
            }
            (acc % &p).is_zero()
        };
        let zeta = Scalar::zeta(self.prime, self.level).expect("level >= 1");
        let zm1_inv = zeta
            .sub(&Scalar::one(self.prime, self.level))
            .expect("same level")
            .inverse()
            .expect("nonzero");
        let mut k = 0usize;
        while residue_sum_is_zero(&y) {
            y = y.mul(&zm1_inv).expect("same level");
            k += 1;
            assert!(k < phi, "content was stripped, so the remainder is a unit");
        }
        LogValue::Finite(
            ratio_int(vmin) + BigRational::new(BigInt::from(k), BigInt::from(phi as i64)),
        )
    }

    /// Reference route for the valuation: v_p of the resultant with the
    /// cyclotomic polynomial over phi(p^h). Slower; kept as an independent
    /// oracle for the uniformizer-division route.
    pub fn valuation_resultant(&self) -> LogValue {
        if self.is_zero() {
            return LogValue::Infinite;
        }
        if let Some(q) = self.as_ratio() {
            return LogValue::Finite(ratio_int(
                self.prime.val_ratio(q).expect("nonzero rational"),
            ));
        }
        let phi = self.prime.phi(self.level);
        let mut cyclo = vec![BigRational::zero(); phi + 1];
        let step = (self.prime.get() as usize).pow(self.level - 1);
        for j in 0..self.prime.get() as usize {
            cyclo[j * step] = BigRational::one();
        }
        let norm = resultant(&cyclo, &self.coeffs);
        let v = self
            .prime
            .val_ratio(&norm)
            .expect("norm of nonzero element is nonzero");
        LogValue::Finite(BigRational::new(BigInt::from(v), BigInt::from(phi as i64)))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_ratio() {
            return write!(f, "{}", ratio_string(q));
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == 0 {
                write!(f, "{}", ratio_string(c))?;
            } else {
                write!(f, "{}*zeta^{}", ratio_string(c), i)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn poly_deg(p: &[BigRational]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

/// Extended gcd over Q[x]: returns (g, u, v) with u*a + v*b = g.
fn poly_ext_gcd(
    a: &[BigRational],
    b: &[BigRational],
) -> (Vec<BigRational>, Vec<BigRational>, Vec<BigRational>) {
    let zero = || vec![BigRational::zero()];
    let one = || vec![BigRational::one()];
    let mut r0: Vec<BigRational> = a.to_vec();
    let mut r1: Vec<BigRational> = b.to_vec();
    let (mut u0, mut u1) = (one(), zero());
    let (mut v0, mut v1) = (zero(), one());
    while poly_deg(&r1).is_some() {
        let (q, rem) = poly_divmod(&r0, &r1);
        r0 = std::mem::replace(&mut r1, rem);
        let nu = poly_sub(&u0, &poly_mul(&q, &u1));
        u0 = std::mem::replace(&mut u1, nu);
        let nv = poly_sub(&v0, &poly_mul(&q, &v1));
        v0 = std::mem::replace(&mut v1, nv);
    }
    (r0, u0, v0)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let da = poly_deg(a);
    let db = poly_deg(b);
    match (da, db) {
        (Some(da), Some(db)) => {
            let mut out = vec![BigRational::zero(); da + db + 1];
            for i in 0..=da {
                if a[i].is_zero() {
                    continue;
                }
                for j in 0..=db {
                    if !b[j].is_zero() {
                        out[i + j] += &a[i] * &b[j];
                    }
                }
            }
            out
        }
        _ => vec![BigRational::zero()],
    }
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
            x - y
        })
        .collect()
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let db = poly_deg(b).expect("nonzero divisor");
    let mut rem: Vec<BigRational> = a.to_vec();
    let mut quo = vec![BigRational::zero(); a.len().max(db + 1)];
    while let Some(dr) = poly_deg(&rem) {
        if dr < db {
            break;
        }
        let c = &rem[dr] / &b[db];
        quo[dr - db] = c.clone();
        for i in 0..=db {
            let t = &c * &b[i];
            rem[dr - db + i] -= t;
        }
        rem[dr] = BigRational::zero();
    }
    (quo, rem)
}

/// Resultant of two rational polynomials by the Euclidean recursion.
/// Degrees here stay below ~20, so plain fraction arithmetic is fine.
fn resultant(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let da = match poly_deg(a) {
        Some(d) => d,
        None => return BigRational::zero(),
    };
    let db = match poly_deg(b) {
        Some(d) => d,
        None => return BigRational::zero(),
    };
    if db == 0 {
        return num::pow::pow(b[0].clone(), da);
    }
    // a mod b
    let mut r: Vec<BigRational> = a[..=da].to_vec();
    let lb = &b[db];
    while let Some(dr) = poly_deg(&r) {
        if dr < db {
            break;
        }
        let q = &r[dr] / lb;
        for i in 0..=db {
            let t = &q * &b[i];
            r[dr - db + i] -= t;
        }
        r[dr] = BigRational::zero();
    }
    let dr = poly_deg(&r);
    let sign = if (da * db) % 2 == 1 {
        -BigRational::one()
    } else {
        BigRational::one()
    };
    match dr {
        None => BigRational::zero(),
        Some(dr) => {
            let e = da as i64 - dr as i64;
            sign * num::pow::pow(lb.clone(), e as usize) * resultant(&b[..=db], &r[..=dr])
        }
    }
}

/// An exactly-known element of Z_p: a rational with denominator prime to p,
/// carried with the number of digits the caller trusts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicApprox {
    prime: Prime,
    value: BigRational,
    precision: u32,
}

/// Precision tag for rationals known exactly.
pub const EXACT_PRECISION: u32 = u32::MAX;

impl PadicApprox {
    pub fn new(prime: Prime, value: BigRational, precision: u32) -> Result<Self> {
        if prime.val_int(value.denom()).expect("nonzero denom") != 0 {
            return Err(Error::DenominatorNotUnit(ratio_string(&value)));
        }
        Ok(PadicApprox {
            prime,
            value,
            precision,
        })
    }

    /// A rational known to full precision.
    pub fn exact(prime: Prime, value: BigRational) -> Result<Self> {
        Self::new(prime, value, EXACT_PRECISION)
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// The canonical residue in [0, p^h).
    pub fn residue(&self, h: u32) -> Result<BigInt> {
        if h > self.precision {
            return Err(Error::InsufficientPrecision {
                requested: h,
                declared: self.precision,
            });
        }
        let m = self.prime.pow_big(h);
        let den_inv = mod_inverse(self.value.denom(), &m).expect("denominator is a unit");
        let mut r = (self.value.numer() * den_inv) % &m;
        if r.sign() == num::bigint::Sign::Minus {
            r += &m;
        }
        Ok(r)
    }

    /// The representative of the class mod p^h lying in
    /// [(1-p^h)/2, (1+p^h)/2).
    pub fn centered_rep(&self, h: u32) -> Result<BigInt> {
        let m = self.prime.pow_big(h);
        let r = self.residue(h)?;
        // r >= (1+p^h)/2  <=>  2r >= 1 + p^h  <=>  2r - p^h >= 1
        if BigInt::from(2) * &r >= BigInt::one() + &m {
            Ok(r - m)
        } else {
            Ok(r)
        }
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let (mut old_r, mut r) = (a.clone() % m, m.clone());
    if old_r.sign() == num::bigint::Sign::Minus {
        old_r += m;
    }
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    while !r.is_zero() {
        let q = &old_r / &r;
        let tmp_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, tmp_r);
        let tmp_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, tmp_s);
    }
    if old_r != BigInt::one() {
        return None;
    }
    let mut inv = old_s % m;
    if inv.sign() == num::bigint::Sign::Minus {
        inv += m;
    }
    Some(inv)
}

/// Finite-precision surrogate for the equivalence that identifies exponent
/// tuples: true iff some coordinate permutation keeps
/// max_i |delta'^(h) - delta^(h)|/h <= bound for every h in 1..=h_max.
pub fn eq_class_test(
    delta: &[PadicApprox],
    delta_prime: &[PadicApprox],
    h_max: u32,
    bound: &BigRational,
) -> Result<bool> {
    if delta.len() != delta_prime.len() {
        return Ok(false);
    }
    let n = delta.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reps: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    let mut reps_prime: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        reps.push(
            (1..=h_max)
                .map(|h| delta[i].centered_rep(h))
                .collect::<Result<_>>()?,
        );
        reps_prime.push(
            (1..=h_max)
                .map(|h| delta_prime[i].centered_rep(h))
                .collect::<Result<_>>()?,
        );
    }
    let ok_for = |perm: &[usize]| -> bool {
        for h in 1..=h_max as usize {
            for i in 0..n {
                let diff = (&reps_prime[i][h - 1] - &reps[perm[i]][h - 1]).abs();
                // |diff|/h <= bound  <=>  |diff| <= h*bound
                let lhs = BigRational::from(diff);
                let rhs = BigRational::from(BigInt::from(h as i64)) * bound;
                if lhs > rhs {
                    return false;
                }
            }
        }
        true
    };
    // mu <= 3 in practice, so enumerating permutations is fine
    loop {
        if ok_for(&perm) {
            return Ok(true);
        }
        if !next_permutation(&mut perm) {
            return Ok(false);
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    #[test]
    fn primality_checked() {
        assert!(Prime::new(4).is_err());
        assert!(Prime::new(1).is_err());
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(97).is_ok());
    }

    #[test]
    fn valuation_of_p_is_one() {
        let s = Scalar::from_int(p3(), 0, 3);
        assert_eq!(s.valuation(), LogValue::from_int(1));
        let six = Scalar::from_int(p3(), 0, 6);
        assert_eq!(six.valuation(), LogValue::from_int(1));
    }

    #[test]
    fn valuation_of_zeta_minus_one() {
        // v(zeta_p - 1) = 1/(p-1), the Eisenstein uniformizer scale
        for p in [2u32, 3, 5] {
            let prime = Prime::new(p).unwrap();
            let z = Scalar::zeta(prime, 1).unwrap();
            let zm1 = z.sub(&Scalar::one(prime, 1)).unwrap();
            assert_eq!(
                zm1.valuation(),
                LogValue::finite(ratio_i64(1, (p - 1) as i64)),
                "p = {p}"
            );
            // resultant oracle: (zeta-1)^(p-1) has valuation exactly 1
            let pw = zm1.pow((p - 1) as u64).unwrap();
            assert_eq!(pw.valuation(), LogValue::from_int(1));
        }
    }

    #[test]
    fn valuation_level_two() {
        // v(zeta_9 - 1) = 1/phi(9) = 1/6
        let z = Scalar::zeta(p3(), 2).unwrap();
        let zm1 = z.sub(&Scalar::one(p3(), 2)).unwrap();
        assert_eq!(zm1.valuation(), LogValue::finite(ratio_i64(1, 6)));
    }

    #[test]
    fn zeta_powers_cycle() {
        let prime = p3();
        let z = Scalar::zeta(prime, 1).unwrap();
        let z3 = z.pow(3).unwrap();
        assert_eq!(z3, Scalar::one(prime, 1));
        // 1 + zeta + zeta^2 = 0
        let sum = Scalar::one(prime, 1)
            .add(&z)
            .unwrap()
            .add(&z.pow(2).unwrap())
            .unwrap();
        assert!(sum.is_zero());
    }

    #[test]
    fn lift_is_compatible_with_multiplication() {
        let prime = p3();
        let z3 = Scalar::zeta(prime, 1).unwrap();
        let z9 = Scalar::zeta(prime, 2).unwrap();
        assert_eq!(z3.lift(2), z9.pow(3).unwrap());
    }

    #[test]
    fn valuation_routes_agree() {
        // uniformizer-division route vs resultant route on a spread of
        // elements, including ramified ones
        for p in [2u32, 3, 5] {
            let prime = Prime::new(p).unwrap();
            for level in 1..=2u32 {
                let z = Scalar::zeta(prime, level).unwrap();
                let zm1 = z.sub(&Scalar::one(prime, level)).unwrap();
                let mut probe = vec![
                    z.clone(),
                    zm1.clone(),
                    zm1.pow(2).unwrap(),
                    zm1.pow(3).unwrap().scale(&ratio_i64(5, 7)),
                    z.add(&Scalar::from_int(prime, level, 2)).unwrap(),
                    zm1.scale(&ratio_i64(9, 2)),
                ];
                probe.push(probe[1].mul(&probe[4]).unwrap());
                for x in probe {
                    assert_eq!(
                        x.valuation(),
                        x.valuation_resultant(),
                        "p={p} level={level} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn scalar_inverse() {
        let prime = p3();
        let z = Scalar::zeta(prime, 2).unwrap();
        let x = z
            .pow(4)
            .unwrap()
            .scale(&ratio_i64(3, 7))
            .add(&Scalar::from_int(prime, 2, 2))
            .unwrap();
        let inv = x.inverse().unwrap();
        assert_eq!(x.mul(&inv).unwrap(), Scalar::one(prime, 2));
        assert!(Scalar::zero(prime, 1).inverse().is_none());
    }

    #[test]
    fn centered_rep_examples() {
        let prime = p3();
        let zero = PadicApprox::exact(prime, ratio_int(0)).unwrap();
        for h in 0..5 {
            assert_eq!(zero.centered_rep(h).unwrap(), BigInt::from(0));
        }
        // p=3, h=2: 7 -> -2 in [-4, 5)
        let seven = PadicApprox::exact(prime, ratio_int(7)).unwrap();
        assert_eq!(seven.centered_rep(2).unwrap(), BigInt::from(-2));
        // p=3, h=2: 1/2 = 5 mod 9, and 5 is not in [-4,5), so -4
        let half = PadicApprox::exact(prime, ratio_i64(1, 2)).unwrap();
        assert_eq!(half.residue(2).unwrap(), BigInt::from(5));
        assert_eq!(half.centered_rep(2).unwrap(), BigInt::from(-4));
    }

    #[test]
    fn centered_rep_brute_force() {
        // oracle: enumerate all residues and center by the interval test
        let prime = p3();
        for h in 1..=4u32 {
            let m = 3i64.pow(h);
            for a in -40..40i64 {
                let x = PadicApprox::exact(prime, ratio_int(a)).unwrap();
                let got = x.centered_rep(h).unwrap();
                let mut expect = a % m;
                // center into [(1-m)/2, (1+m)/2) by brute force
                while BigRational::from(BigInt::from(2 * expect))
                    >= BigRational::from(BigInt::from(1 + m))
                {
                    expect -= m;
                }
                while BigRational::from(BigInt::from(2 * expect))
                    < BigRational::from(BigInt::from(1 - m))
                {
                    expect += m;
                }
                assert_eq!(got, BigInt::from(expect), "a={a} h={h}");
            }
        }
    }

    #[test]
    fn centered_rep_for_p2() {
        let prime = Prime::new(2).unwrap();
        // h=2: interval [-3/2, 5/2), residue 3 -> -1
        let three = PadicApprox::exact(prime, ratio_int(3)).unwrap();
        assert_eq!(three.centered_rep(2).unwrap(), BigInt::from(-1));
        let two = PadicApprox::exact(prime, ratio_int(2)).unwrap();
        assert_eq!(two.centered_rep(2).unwrap(), BigInt::from(2));
    }

    #[test]
    fn precision_is_enforced() {
        let prime = p3();
        let x = PadicApprox::new(prime, ratio_i64(1, 2), 2).unwrap();
        assert!(x.centered_rep(2).is_ok());
        assert!(matches!(
            x.centered_rep(3),
            Err(Error::InsufficientPrecision { .. })
        ));
    }

    #[test]
    fn denominators_divisible_by_p_are_rejected() {
        assert!(PadicApprox::exact(p3(), ratio_i64(1, 3)).is_err());
    }

    #[test]
    fn eq_class_examples() {
        let prime = p3();
        let half = PadicApprox::exact(prime, ratio_i64(1, 2)).unwrap();
        let one = &ratio_int(1);
        // reflexive with bound 0
        assert!(eq_class_test(
            std::slice::from_ref(&half),
            std::slice::from_ref(&half),
            3,
            &ratio_int(0)
        )
        .unwrap());
        // integer shift stays within bound 1
        let shifted = PadicApprox::exact(prime, ratio_i64(3, 2)).unwrap();
        assert!(eq_class_test(
            std::slice::from_ref(&half),
            std::slice::from_ref(&shifted),
            3,
            one
        )
        .unwrap());
        // 2 and 1/2 drift apart
        let two = PadicApprox::exact(prime, ratio_int(2)).unwrap();
        assert!(!eq_class_test(
            std::slice::from_ref(&half),
            std::slice::from_ref(&two),
            3,
            one
        )
        .unwrap());
    }

    #[test]
    fn eq_class_respects_permutations() {
        let prime = p3();
        let a = PadicApprox::exact(prime, ratio_i64(1, 2)).unwrap();
        let b = PadicApprox::exact(prime, ratio_int(0)).unwrap();
        let fwd = vec![a.clone(), b.clone()];
        let rev = vec![b, a];
        assert!(eq_class_test(&fwd, &rev, 3, &ratio_int(0)).unwrap());
    }
}
