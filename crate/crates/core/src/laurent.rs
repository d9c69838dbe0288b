//! Truncated Laurent elements in t with optional polynomial dependence on
//! a disk variable z, and their Gauss valuations.
//!
//! An element carries a truncation window in t-degree: inside the window
//! the stored coefficients are exact, outside nothing is known. Ring
//! operations shrink windows conservatively and fail hard when a window
//! empties out; dominant-term arguments are meaningless once truncation
//! can silently eat monomials.
//!
//! The Gauss valuation at log-radius r = -log_p(rho) is
//! min over stored terms of v(coeff) + n_t * r; z-exponents contribute
//! nothing because the sup over the closed unit disk of |z^k| is 1.

use crate::error::{Error, Result};
use crate::padic::{ratio_string, LogValue, Prime, Scalar};
use num::rational::BigRational;
use num::{BigInt, One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Hard cap on z-degrees; relative families at desk scale stay far below.
pub const Z_DEGREE_CAP: u32 = 512;

/// Truncation window in t-degree. `None` on a side means the element is
/// exact in that direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Window {
    pub fn full() -> Self {
        Window { lo: None, hi: None }
    }

    pub fn new(lo: Option<i64>, hi: Option<i64>) -> Result<Self> {
        let w = Window { lo, hi };
        if w.is_empty() {
            return Err(Error::WindowUnderflow(format!("{w}")));
        }
        Ok(w)
    }

    pub fn is_full(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    fn is_empty(&self) -> bool {
        match (self.lo, self.hi) {
            (Some(a), Some(b)) => a > b,
            _ => false,
        }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo.map_or(true, |a| n >= a) && self.hi.map_or(true, |b| n <= b)
    }

    fn intersect(&self, other: &Window) -> Window {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (Some(a), None) => Some(a),
            (None, b) => b,
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, b) => b,
        };
        Window { lo, hi }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: Option<i64>| s.map_or("*".to_string(), |v| v.to_string());
        write!(f, "[{}, {}]", side(self.lo), side(self.hi))
    }
}

/// Closed interval in the log-radius coordinate r = -log_p(rho);
/// rho runs over [p^(-r_hi), p^(-r_lo)].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RInterval {
    lo: BigRational,
    hi: BigRational,
}

impl RInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo <= BigRational::zero() || lo > hi {
            return Err(Error::BadInterval(ratio_string(&lo), ratio_string(&hi)));
        }
        Ok(RInterval { lo, hi })
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        *r >= self.lo && *r <= self.hi
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from(BigInt::from(2))
    }

    /// The interval of t^p-radii: r-coordinates scale by p.
    pub fn scale(&self, factor: &BigRational) -> Result<Self> {
        RInterval::new(&self.lo * factor, &self.hi * factor)
    }
}

impl fmt::Display for RInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", ratio_string(&self.lo), ratio_string(&self.hi))
    }
}

/// A finite sum of c * t^(nt) * z^(nz) with cyclotomic coefficients,
/// exact within its t-window. Equality ignores the level bookkeeping and
/// compares coefficients semantically.
#[derive(Clone, Debug, Eq)]
pub struct LaurentElement {
    prime: Prime,
    level: u32,
    terms: BTreeMap<(i64, u32), Scalar>,
    window: Window,
}

impl PartialEq for LaurentElement {
    fn eq(&self, other: &Self) -> bool {
        self.prime == other.prime && self.window == other.window && self.terms == other.terms
    }
}

impl LaurentElement {
    pub fn zero(prime: Prime, level: u32) -> Self {
        LaurentElement {
            prime,
            level,
            terms: BTreeMap::new(),
            window: Window::full(),
        }
    }

    pub fn one(prime: Prime, level: u32) -> Self {
        Self::monomial(prime, level, 0, 0, Scalar::one(prime, level))
            .expect("unit monomial")
    }

    pub fn monomial(
        prime: Prime,
        level: u32,
        nt: i64,
        nz: u32,
        coeff: Scalar,
    ) -> Result<Self> {
        let mut e = Self::zero(prime, level);
        e.insert_term(nt, nz, coeff)?;
        Ok(e)
    }

    pub fn from_terms<I>(prime: Prime, level: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, u32, Scalar)>,
    {
        let mut e = Self::zero(prime, level);
        for (nt, nz, c) in terms {
            e.insert_term(nt, nz, c)?;
        }
        Ok(e)
    }

    fn insert_term(&mut self, nt: i64, nz: u32, coeff: Scalar) -> Result<()> {
        if nz > Z_DEGREE_CAP {
            return Err(Error::ZDegreeCap(nz, Z_DEGREE_CAP));
        }
        if coeff.prime() != self.prime {
            return Err(Error::PrimeMismatch(coeff.prime().get(), self.prime.get()));
        }
        if !self.window.contains(nt) {
            return Err(Error::WindowUnderflow(format!(
                "term t^{nt} outside window {}",
                self.window
            )));
        }
        if coeff.level() > self.level {
            self.level = coeff.level();
            let old = std::mem::take(&mut self.terms);
            for (k, v) in old {
                self.terms.insert(k, v.lift(self.level));
            }
        }
        let lifted = coeff.lift(self.level);
        let entry = self.terms.entry((nt, nz)).or_insert_with(|| {
            Scalar::zero(self.prime, self.level)
        });
        *entry = entry.add(&lifted)?;
        if entry.is_zero() {
            self.terms.remove(&(nt, nz));
        }
        Ok(())
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, u32), &Scalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_z(&self) -> bool {
        self.terms.keys().any(|&(_, nz)| nz > 0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// t-support bounds of the stored terms.
    pub fn support(&self) -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for &(nt, _) in self.terms.keys() {
            lo = lo.min(nt);
            hi = hi.max(nt);
        }
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Restrict to a (smaller) window, dropping terms outside it.
    pub fn with_window(&self, window: Window) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::WindowUnderflow("requested empty window".into()));
        }
        let mut out = self.clone();
        out.window = window;
        out.terms.retain(|&(nt, _), _| window.contains(nt));
        Ok(out)
    }

    /// The coefficient of t^nt as a polynomial in z, as (nz, scalar) pairs.
    pub fn t_coefficient(&self, nt: i64) -> Vec<(u32, Scalar)> {
        self.terms
            .range((nt, 0)..=(nt, u32::MAX))
            .map(|(&(_, nz), c)| (nz, c.clone()))
            .collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime.get(), other.prime.get()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let window = self.window.intersect(&other.window);
        if window.is_empty() {
            return Err(Error::WindowUnderflow(format!(
                "add: {} meets {}",
                self.window, other.window
            )));
        }
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level.max(other.level),
            terms: BTreeMap::new(),
            window,
        };
        for (&(nt, nz), c) in self.terms.iter().chain(other.terms.iter()) {
            if window.contains(nt) {
                out.insert_term(nt, nz, c.clone())?;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = self.clone();
        if q.is_zero() {
            out.terms.clear();
            return out;
        }
        for c in out.terms.values_mut() {
            *c = c.scale(q);
        }
        out
    }

    pub fn scale_scalar(&self, s: &Scalar) -> Result<Self> {
        if s.is_zero() {
            let mut out = self.clone();
            out.terms.clear();
            return Ok(out);
        }
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level.max(s.level()),
            terms: BTreeMap::new(),
            window: self.window,
        };
        for (&(nt, nz), c) in self.terms.iter() {
            out.insert_term(nt, nz, c.mul(s)?)?;
        }
        Ok(out)
    }

    /// Product window: each factor's unknown tail convolves against the
    /// partner's known support, so the exact region shrinks by the
    /// partner's support width; two opposite-sided tails wipe out
    /// everything and raise an underflow.
    fn mul_window(&self, other: &Self) -> Result<Window> {
        let sup_a = self.support();
        let sup_b = other.support();
        let mut lo: Option<i64> = None;
        let mut hi: Option<i64> = None;
        let mut clamp_lo = |v: i64| lo = Some(lo.map_or(v, |x: i64| x.max(v)));
        let mut clamp_hi = |v: i64| hi = Some(hi.map_or(v, |x: i64| x.min(v)));

        // tail of a against known support of b, and symmetrically
        let pairs = [(self.window, sup_b), (other.window, sup_a)];
        for (w, sup) in pairs {
            if let Some((s_lo, s_hi)) = sup {
                if let Some(a) = w.lo {
                    clamp_lo(a + s_hi);
                }
                if let Some(b) = w.hi {
                    clamp_hi(b + s_lo);
                }
            }
        }
        // tail against tail: opposite-sided tails cover every degree
        let a_low_tail = self.window.lo.is_some();
        let a_high_tail = self.window.hi.is_some();
        let b_low_tail = other.window.lo.is_some();
        let b_high_tail = other.window.hi.is_some();
        if (a_low_tail && b_high_tail) || (a_high_tail && b_low_tail) {
            return Err(Error::WindowUnderflow(
                "product of two oppositely truncated elements is unknown everywhere".into(),
            ));
        }
        if a_low_tail && b_low_tail {
            clamp_lo(self.window.lo.unwrap() + other.window.lo.unwrap() - 1);
        }
        if a_high_tail && b_high_tail {
            clamp_hi(self.window.hi.unwrap() + other.window.hi.unwrap() + 1);
        }
        let w = Window { lo, hi };
        if w.is_empty() {
            return Err(Error::WindowUnderflow(format!(
                "mul: windows {} * {} leave nothing exact",
                self.window, other.window
            )));
        }
        Ok(w)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let window = self.mul_window(other)?;
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level.max(other.level),
            terms: BTreeMap::new(),
            window,
        };
        for (&(at, az), ac) in self.terms.iter() {
            for (&(bt, bz), bc) in other.terms.iter() {
                let nt = at + bt;
                if !window.contains(nt) {
                    continue;
                }
                out.insert_term(nt, az + bz, ac.mul(bc)?)?;
            }
        }
        Ok(out)
    }

    /// d/dt. The exact region slides down by one on both sides: an unknown
    /// term just above the window differentiates onto the old top degree.
    pub fn d_dt(&self) -> Result<Self> {
        let window = Window::new(
            self.window.lo.map(|a| a - 1),
            self.window.hi.map(|b| b - 1),
        )?;
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level,
            terms: BTreeMap::new(),
            window,
        };
        for (&(nt, nz), c) in self.terms.iter() {
            if nt == 0 {
                continue;
            }
            let scaled = c.scale(&BigRational::from(BigInt::from(nt)));
            if window.contains(nt - 1) {
                out.insert_term(nt - 1, nz, scaled)?;
            }
        }
        Ok(out)
    }

    /// t -> t^k for k >= 1 (k = p realizes the Frobenius substitution).
    pub fn substitute_t_power(&self, k: u32) -> Result<Self> {
        assert!(k >= 1);
        let k64 = k as i64;
        let window = Window::new(
            self.window.lo.map(|a| a * k64),
            self.window.hi.map(|b| b * k64),
        )?;
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level,
            terms: BTreeMap::new(),
            window,
        };
        for (&(nt, nz), c) in self.terms.iter() {
            out.insert_term(nt * k64, nz, c.clone())?;
        }
        Ok(out)
    }

    /// Substitute z = a.
    pub fn specialize_z(&self, a: &Scalar) -> Result<Self> {
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level.max(a.level()),
            terms: BTreeMap::new(),
            window: self.window,
        };
        for (&(nt, nz), c) in self.terms.iter() {
            let c = c.mul(&a.pow(nz as u64)?)?;
            out.insert_term(nt, 0, c)?;
        }
        Ok(out)
    }

    /// Substitute t -> u*t for a root of unity u (coefficient of t^n picks
    /// up u^n). Used by the mu_p-action and the S-matrix averages.
    pub fn twist_t(&self, u: &Scalar) -> Result<Self> {
        let mut out = LaurentElement {
            prime: self.prime,
            level: self.level.max(u.level()),
            terms: BTreeMap::new(),
            window: self.window,
        };
        for (&(nt, nz), c) in self.terms.iter() {
            let factor = if nt >= 0 {
                u.pow(nt as u64)?
            } else {
                // u is a p^h-th root of unity: u^(-1) = u^(p^h - 1)
                let order = self.prime.pow_big(u.level().max(1));
                let e = (&order - BigInt::one()) * BigInt::from(-nt);
                let e: u64 = (e % numeric_order(self.prime, u.level().max(1)))
                    .try_into()
                    .expect("small exponent");
                u.pow(e)?
            };
            out.insert_term(nt, nz, c.mul(&factor)?)?;
        }
        Ok(out)
    }

    /// Exact division for fully known elements: long division by the
    /// lowest t-degree term of the divisor, succeeding only when the
    /// remainder terminates at zero. Both operands must be z-free in the
    /// divisor's leading position or the division is refused.
    pub fn try_div_exact(&self, den: &Self) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(LaurentElement::zero(self.prime, self.level));
        }
        // leading term of the divisor: lowest (nt, nz); require nz = 0 so
        // the quotient stays polynomial in z
        let (&(dt, dz), dc) = den.terms.iter().next()?;
        if dz != 0 {
            return None;
        }
        let dc_inv = dc.inverse()?;
        let mut rem = self.clone();
        let mut quo = LaurentElement::zero(self.prime, self.level.max(den.level));
        let width = den
            .support()
            .map(|(a, b)| (b - a) as usize)
            .unwrap_or(0)
            .max(1);
        let self_width = self
            .support()
            .map(|(a, b)| (b - a) as usize)
            .unwrap_or(0);
        let budget = 4 * (width + self_width) + 16;
        for _ in 0..budget {
            if rem.is_zero() {
                return Some(quo);
            }
            let (&(rt, rz), rc) = rem.terms.iter().next().expect("nonzero");
            let q_coeff = rc.mul(&dc_inv).ok()?;
            let q_term =
                LaurentElement::monomial(self.prime, q_coeff.level(), rt - dt, rz, q_coeff)
                    .ok()?;
            quo = quo.add(&q_term).ok()?;
            rem = rem.sub(&q_term.mul(den).ok()?).ok()?;
        }
        None
    }

    /// Division in the valuation topology at log-radius r: requires the
    /// divisor's minimal-valuation term to be strictly dominant, and
    /// returns a quotient q with v_r(self - q*den) >= target (or the
    /// division exact). Each step cancels the remainder's dominant term,
    /// so the remainder valuation climbs by at least the divisor's
    /// dominance gap.
    pub fn div_dominant(
        &self,
        den: &Self,
        r: &BigRational,
        target: &BigRational,
    ) -> Option<Self> {
        let mut den_terms: Vec<((i64, u32), Scalar, BigRational)> = Vec::new();
        for (&k, c) in den.terms() {
            match c.valuation() {
                LogValue::Finite(v) => {
                    let val = v + BigRational::from(BigInt::from(k.0)) * r;
                    den_terms.push((k, c.clone(), val));
                }
                LogValue::Infinite => {}
            }
        }
        den_terms.sort_by(|a, b| a.2.cmp(&b.2));
        let (gk, gc, gv) = den_terms.first()?.clone();
        if den_terms.len() > 1 && den_terms[1].2 == gv {
            return None; // no strict dominance, no contraction
        }
        if gk.1 != 0 {
            return None; // quotients must stay polynomial in z
        }
        let g_inv = gc.inverse()?;
        let mut rem = self.clone();
        let mut quo = LaurentElement::zero(self.prime, self.level.max(den.level));
        let budget = 4096usize;
        for _ in 0..budget {
            if rem.is_zero() {
                return Some(quo);
            }
            // dominant remainder term
            let mut best: Option<((i64, u32), Scalar, BigRational)> = None;
            for (&k, c) in rem.terms() {
                if let LogValue::Finite(v) = c.valuation() {
                    let val = v + BigRational::from(BigInt::from(k.0)) * r;
                    match &best {
                        Some((_, _, bv)) if *bv <= val => {}
                        _ => best = Some((k, c.clone(), val)),
                    }
                }
            }
            let (rk, rc, rv) = best?;
            if &rv >= target {
                return Some(quo);
            }
            let q_coeff = rc.mul(&g_inv).ok()?;
            let q_term = LaurentElement::monomial(
                self.prime,
                q_coeff.level(),
                rk.0 - gk.0,
                rk.1,
                q_coeff,
            )
            .ok()?;
            quo = quo.add(&q_term).ok()?;
            rem = rem.sub(&q_term.mul(den).ok()?).ok()?;
        }
        None
    }

    /// Drop terms whose valuation stays above `bound` on the whole
    /// r-interval (the per-term value v + nt*r is affine in r, so the
    /// endpoints control it). Used to shed certified-negligible mass;
    /// callers must fold `bound` into their tail accounting.
    pub fn prune_above(&self, bound: &BigRational, r_lo: &BigRational, r_hi: &BigRational) -> Self {
        let mut out = self.clone();
        out.terms.retain(|&(nt, _), c| {
            let v = match c.valuation() {
                LogValue::Finite(v) => v,
                LogValue::Infinite => return false,
            };
            let ntq = BigRational::from(BigInt::from(nt));
            let at_lo = &v + &ntq * r_lo;
            let at_hi = &v + &ntq * r_hi;
            at_lo.min(at_hi) <= *bound
        });
        out
    }

    /// Gauss valuation at log-radius r: min over stored terms of
    /// v(coeff) + nt*r. Empty elements valuate to +infinity.
    pub fn gauss_valuation(&self, r: &BigRational) -> LogValue {
        let mut best = LogValue::Infinite;
        for (&(nt, _), c) in self.terms.iter() {
            let v = c
                .valuation()
                .add(&LogValue::finite(BigRational::from(BigInt::from(nt)) * r));
            best = best.min(v);
        }
        best
    }
}

fn numeric_order(prime: Prime, level: u32) -> BigInt {
    prime.pow_big(level)
}

impl fmt::Display for LaurentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(nt, nz), c) in self.terms.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if nt != 0 {
                write!(f, "*t^{nt}")?;
            }
            if nz != 0 {
                write!(f, "*z^{nz}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{ratio_i64, ratio_int};

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    fn rat(prime: Prime, n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(prime, 0, ratio_i64(n, d))
    }

    #[test]
    fn gauss_valuation_of_t() {
        let prime = p3();
        let t = LaurentElement::monomial(prime, 0, 1, 0, Scalar::one(prime, 0)).unwrap();
        assert_eq!(
            t.gauss_valuation(&ratio_i64(1, 2)),
            LogValue::finite(ratio_i64(1, 2))
        );
    }

    #[test]
    fn gauss_valuation_mixed_terms() {
        // p=3, f = 3 + t + t^2/9 at r=1: min(1, 1, 0) = 0
        let prime = p3();
        let f = LaurentElement::from_terms(
            prime,
            0,
            [
                (0, 0, rat(prime, 3, 1)),
                (1, 0, rat(prime, 1, 1)),
                (2, 0, rat(prime, 1, 9)),
            ],
        )
        .unwrap();
        assert_eq!(f.gauss_valuation(&ratio_int(1)), LogValue::from_int(0));
    }

    #[test]
    fn gauss_valuation_ignores_z() {
        // p=3, f = z + 3t at r=1/4: min(0, 1+1/4) = 0
        let prime = p3();
        let f = LaurentElement::from_terms(
            prime,
            0,
            [(0, 1, rat(prime, 1, 1)), (1, 0, rat(prime, 3, 1))],
        )
        .unwrap();
        assert_eq!(f.gauss_valuation(&ratio_i64(1, 4)), LogValue::from_int(0));
    }

    #[test]
    fn derivative_and_substitution() {
        let prime = p3();
        let t2 = LaurentElement::monomial(prime, 0, 2, 0, Scalar::one(prime, 0)).unwrap();
        let d = t2.d_dt().unwrap();
        let expect =
            LaurentElement::monomial(prime, 0, 1, 0, rat(prime, 2, 1)).unwrap();
        assert_eq!(d.terms, expect.terms);

        let f = LaurentElement::from_terms(
            prime,
            0,
            [(-1, 0, rat(prime, 1, 1)), (1, 0, rat(prime, 1, 1))],
        )
        .unwrap();
        let g = f.substitute_t_power(3).unwrap();
        let expect = LaurentElement::from_terms(
            prime,
            0,
            [(-3, 0, rat(prime, 1, 1)), (3, 0, rat(prime, 1, 1))],
        )
        .unwrap();
        assert_eq!(g.terms, expect.terms);
    }

    #[test]
    fn specialize_z_example() {
        // z + 3t at z=2 -> 2 + 3t
        let prime = p3();
        let f = LaurentElement::from_terms(
            prime,
            0,
            [(0, 1, rat(prime, 1, 1)), (1, 0, rat(prime, 3, 1))],
        )
        .unwrap();
        let g = f.specialize_z(&Scalar::from_int(prime, 0, 2)).unwrap();
        let expect = LaurentElement::from_terms(
            prime,
            0,
            [(0, 0, rat(prime, 2, 1)), (1, 0, rat(prime, 3, 1))],
        )
        .unwrap();
        assert_eq!(g.terms, expect.terms);
    }

    #[test]
    fn multiplication_shrinks_by_partner_support_width() {
        let prime = p3();
        let mut f = LaurentElement::from_terms(
            prime,
            0,
            [(0, 0, rat(prime, 1, 1)), (1, 0, rat(prime, 1, 1))],
        )
        .unwrap();
        f.window = Window::new(Some(-5), Some(5)).unwrap();
        let g = LaurentElement::from_terms(
            prime,
            0,
            [(-1, 0, rat(prime, 1, 1)), (2, 0, rat(prime, 1, 1))],
        )
        .unwrap(); // exact, support [-1, 2]
        let h = f.mul(&g).unwrap();
        assert_eq!(h.window, Window::new(Some(-3), Some(4)).unwrap());
    }

    #[test]
    fn opposite_truncations_underflow() {
        let prime = p3();
        let mut f = LaurentElement::one(prime, 0);
        f.window = Window::new(Some(-5), None).unwrap();
        let mut g = LaurentElement::one(prime, 0);
        g.window = Window::new(None, Some(5)).unwrap();
        assert!(matches!(f.mul(&g), Err(Error::WindowUnderflow(_))));
    }

    #[test]
    fn derivative_slides_window() {
        let prime = p3();
        let mut f =
            LaurentElement::monomial(prime, 0, 2, 0, Scalar::one(prime, 0)).unwrap();
        f.window = Window::new(Some(0), Some(4)).unwrap();
        let d = f.d_dt().unwrap();
        assert_eq!(d.window, Window::new(Some(-1), Some(3)).unwrap());
    }

    #[test]
    fn twist_multiplies_coefficients_by_root_powers() {
        let prime = p3();
        let zeta = Scalar::zeta(prime, 1).unwrap();
        let f = LaurentElement::from_terms(
            prime,
            1,
            [
                (1, 0, Scalar::one(prime, 1)),
                (-1, 0, Scalar::one(prime, 1)),
            ],
        )
        .unwrap();
        let g = f.twist_t(&zeta).unwrap();
        let zeta2 = zeta.pow(2).unwrap();
        let expect = LaurentElement::from_terms(
            prime,
            1,
            [(1, 0, zeta.clone()), (-1, 0, zeta2)],
        )
        .unwrap();
        assert_eq!(g.terms, expect.terms);
    }

    #[test]
    fn gauss_multiplicativity_spot() {
        let prime = p3();
        let f = LaurentElement::from_terms(
            prime,
            0,
            [(-2, 0, rat(prime, 3, 1)), (1, 0, rat(prime, 1, 2))],
        )
        .unwrap();
        let g = LaurentElement::from_terms(
            prime,
            0,
            [(0, 0, rat(prime, 9, 1)), (3, 0, rat(prime, 5, 1))],
        )
        .unwrap();
        let r = ratio_i64(1, 3);
        let lhs = f.mul(&g).unwrap().gauss_valuation(&r);
        let rhs = f.gauss_valuation(&r).add(&g.gauss_valuation(&r));
        assert_eq!(lhs, rhs);
    }
}
