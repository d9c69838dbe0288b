//! Differential modules over the Laurent ring: derivative-power matrices,
//! generic radius-of-convergence estimation, cyclic vectors, and the
//! Newton-polygon spectral norm.
//!
//! A module of rank mu is determined by the matrix G1 of the derivation:
//! sections are coordinate row vectors v, the derivation acts by
//! v -> dv/dt + v*G1, and the matrix G_n of the n-th power obeys
//! G_{n+1} = d/dt(G_n) + G_n*G1 with G_0 = I.
//!
//! Radius estimation works in the valuation picture. With
//! w_n = v_r(G_n/n!) the function f(r) = -log_p R(E, p^(-r)) satisfies
//! f(r) = max(r, limsup_n(-w_n/n)). Two finite surrogates are combined:
//!
//! * the factorial route: max of -w_n/n over n <= N prime to p. The
//!   p-divisible indices are excluded because unipotent-type modules
//!   produce v_p(n)-sized spikes there that a finite max cannot average
//!   away, while the limsup ignores them.
//! * the geometric route: when -v_r(G_{p^k})/p^k is the same rational at
//!   every p-power p^k <= N, the norm growth is exactly geometric and
//!   limsup(-w_n/n) equals that constant plus 1/(p-1), the limit of
//!   v_p(n!)/n. This recovers exact values (for example 2r for
//!   Dwork-type twists) that the windowed factorial max approaches only
//!   in the limit.
//!
//! The returned flag marks estimates whose late and middle windows agree
//! and whose value is attained in the late window; anything else should
//! be treated as unreliable.

use crate::error::{Error, Result};
use crate::laurent::{LaurentElement, RInterval};
use crate::matrix::{solve_fraction_system, LaurentFraction, Mat};
use crate::padic::{ratio_i64, LogValue, Prime, Scalar};
use num::rational::BigRational;
use num::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct DiffModule {
    rank: usize,
    g1: Mat,
    interval: RInterval,
    prime: Prime,
    level: u32,
}

impl DiffModule {
    pub fn new(g1: Mat, interval: RInterval, prime: Prime, level: u32) -> Result<Self> {
        if g1.rows() != g1.cols() || g1.rows() == 0 {
            return Err(Error::BadDescription(format!(
                "connection matrix must be square and nonempty, got {}x{}",
                g1.rows(),
                g1.cols()
            )));
        }
        for e in g1.entries() {
            if e.prime() != prime {
                return Err(Error::PrimeMismatch(e.prime().get(), prime.get()));
            }
        }
        let level = g1
            .entries()
            .map(|e| e.level())
            .fold(level, |a, b| a.max(b));
        Ok(DiffModule {
            rank: g1.rows(),
            g1,
            interval,
            prime,
            level,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn g1(&self) -> &Mat {
        &self.g1
    }

    pub fn interval(&self) -> &RInterval {
        &self.interval
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn has_z(&self) -> bool {
        self.g1.has_z()
    }

    /// Default truncation order for radius estimation.
    pub fn default_n(&self) -> usize {
        let p = self.prime.get() as usize;
        (p * p * p).max(4 * self.rank * p)
    }

    pub fn trivial(prime: Prime, level: u32, rank: usize, interval: RInterval) -> Self {
        DiffModule {
            rank,
            g1: Mat::zero(prime, level, rank, rank),
            interval,
            prime,
            level,
        }
    }

    /// Rank-one module with derivation e -> g*e.
    pub fn rank1_twist(g: LaurentElement, interval: RInterval) -> Self {
        let prime = g.prime();
        let level = g.level();
        DiffModule {
            rank: 1,
            g1: Mat::from_rows(vec![vec![g]]),
            interval,
            prime,
            level,
        }
    }

    /// M_xi: the rank-one module d + xi*dlog(t), i.e. G1 = xi/t.
    pub fn m_xi(prime: Prime, xi: &BigRational, interval: RInterval) -> Result<Self> {
        let g = LaurentElement::monomial(
            prime,
            0,
            -1,
            0,
            Scalar::from_ratio(prime, 0, xi.clone()),
        )?;
        Ok(Self::rank1_twist(g, interval))
    }

    pub fn direct_sum(&self, other: &DiffModule) -> Result<DiffModule> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime.get(), other.prime.get()));
        }
        let interval = RInterval::new(
            self.interval.lo().max(other.interval.lo()).clone(),
            self.interval.hi().min(other.interval.hi()).clone(),
        )?;
        let n = self.rank + other.rank;
        let level = self.level.max(other.level);
        let mut g1 = Mat::zero(self.prime, level, n, n);
        for i in 0..self.rank {
            for j in 0..self.rank {
                g1[(i, j)] = self.g1[(i, j)].clone();
            }
        }
        for i in 0..other.rank {
            for j in 0..other.rank {
                g1[(self.rank + i, self.rank + j)] = other.g1[(i, j)].clone();
            }
        }
        DiffModule::new(g1, interval, self.prime, level)
    }

    pub fn tensor(&self, other: &DiffModule) -> Result<DiffModule> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime.get(), other.prime.get()));
        }
        let interval = RInterval::new(
            self.interval.lo().max(other.interval.lo()).clone(),
            self.interval.hi().min(other.interval.hi()).clone(),
        )?;
        let n = self.rank * other.rank;
        let level = self.level.max(other.level);
        let mut g1 = Mat::zero(self.prime, level, n, n);
        // G = A (x) I + I (x) B on basis e_i (x) f_j, index i*rank(B)+j
        for i in 0..self.rank {
            for k in 0..self.rank {
                for j in 0..other.rank {
                    let idx = (i * other.rank + j, k * other.rank + j);
                    g1[idx] = g1[idx].add(&self.g1[(i, k)])?;
                }
            }
        }
        for j in 0..other.rank {
            for l in 0..other.rank {
                for i in 0..self.rank {
                    let idx = (i * other.rank + j, i * other.rank + l);
                    g1[idx] = g1[idx].add(&other.g1[(j, l)])?;
                }
            }
        }
        DiffModule::new(g1, interval, self.prime, level)
    }

    /// Pull back along t -> t^p. The connection matrix becomes
    /// p*t^(p-1)*G1(t^p) and r-coordinates divide by p.
    pub fn frobenius_pullback(&self) -> Result<DiffModule> {
        let p = self.prime.get();
        let sub = self.g1.substitute_t_power(p)?;
        let factor = LaurentElement::monomial(
            self.prime,
            self.level,
            p as i64 - 1,
            0,
            Scalar::from_int(self.prime, self.level, p as i64),
        )?;
        let g1 = sub.map(|e| e.mul(&factor))?;
        let interval = self
            .interval
            .scale(&ratio_i64(1, p as i64))?;
        DiffModule::new(g1, interval, self.prime, self.level)
    }
}

/// The matrices G_1..G_N of the derivation powers.
#[derive(Clone, Debug)]
pub struct DerivativePowers {
    mats: Vec<Mat>,
}

impl DerivativePowers {
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// G_n for n >= 1.
    pub fn g(&self, n: usize) -> &Mat {
        &self.mats[n - 1]
    }
}

/// Compute G_1..G_N by the recursion G_{n+1} = d/dt(G_n) + G_n*G1.
pub fn derive_powers(m: &DiffModule, n_max: usize) -> Result<DerivativePowers> {
    assert!(n_max >= 1);
    let mut mats = Vec::with_capacity(n_max);
    mats.push(m.g1.clone());
    for _ in 1..n_max {
        let last = mats.last().expect("nonempty");
        let next = last.d_dt()?.add(&last.mul(&m.g1)?)?;
        mats.push(next);
    }
    Ok(DerivativePowers { mats })
}

/// Radius estimate at one log-radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusEstimate {
    pub f_hat: BigRational,
    pub stabilized: bool,
}

/// Precomputed per-n valuation lines for fast evaluation at many radii.
///
/// For each n the Gauss valuation of G_n is the lower envelope of the
/// lines v + nt*r over stored terms; only the per-degree minima are kept.
pub struct RadiusSampler {
    prime: Prime,
    n_max: usize,
    /// lines[n-1]: t-degree -> minimal coefficient valuation, None entries
    /// meaning G_n = 0.
    lines: Vec<Option<BTreeMap<i64, BigRational>>>,
    fact_vals: Vec<BigRational>,
}

impl RadiusSampler {
    pub fn new(m: &DiffModule, n_max: usize) -> Result<Self> {
        let powers = derive_powers(m, n_max)?;
        Self::from_powers(m.prime(), &powers)
    }

    pub fn from_powers(prime: Prime, powers: &DerivativePowers) -> Result<Self> {
        let n_max = powers.len();
        let mut lines = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let g = powers.g(n);
            let mut map: BTreeMap<i64, BigRational> = BTreeMap::new();
            for e in g.entries() {
                for (&(nt, _), c) in e.terms() {
                    if let LogValue::Finite(v) = c.valuation() {
                        map.entry(nt)
                            .and_modify(|cur| {
                                if v < *cur {
                                    *cur = v.clone();
                                }
                            })
                            .or_insert(v);
                    }
                }
            }
            lines.push(if map.is_empty() { None } else { Some(map) });
        }
        let fact_vals = (0..=n_max as u64)
            .map(|n| BigRational::from(BigInt::from(prime.val_factorial(n))))
            .collect();
        Ok(RadiusSampler {
            prime,
            n_max,
            lines,
            fact_vals,
        })
    }

    /// v_r(G_n), None for G_n = 0.
    fn power_valuation(&self, n: usize, r: &BigRational) -> Option<BigRational> {
        self.lines[n - 1].as_ref().map(|map| {
            map.iter()
                .map(|(&nt, v)| v + BigRational::from(BigInt::from(nt)) * r)
                .min()
                .expect("nonempty")
        })
    }

    pub fn estimate(&self, r: &BigRational) -> RadiusEstimate {
        let p = self.prime.get() as usize;
        let n = self.n_max;
        // a_n = -(v_r(G_n) - v(n!))/n on indices prime to p
        let mut a: Vec<Option<BigRational>> = vec![None; n + 1];
        let mut vals: Vec<Option<BigRational>> = vec![None; n + 1];
        for k in 1..=n {
            vals[k] = self.power_valuation(k, r);
            if let Some(v) = &vals[k] {
                let w = v - &self.fact_vals[k];
                a[k] = Some(-w / BigRational::from(BigInt::from(k as i64)));
            }
        }
        let coprime_max = |range: std::ops::RangeInclusive<usize>| -> Option<BigRational> {
            range
                .filter(|k| k % p != 0)
                .filter_map(|k| a[k].clone())
                .max()
        };
        let a_co = coprime_max(1..=n);

        // geometric route along p-powers
        let mut b_vals: Vec<Option<BigRational>> = Vec::new();
        let mut q = p;
        while q <= n {
            b_vals.push(
                vals[q]
                    .as_ref()
                    .map(|v| -v / BigRational::from(BigInt::from(q as i64))),
            );
            q *= p;
        }
        let geometric = b_vals.len() >= 2
            && b_vals.iter().all(|b| b.is_some())
            && b_vals.windows(2).all(|w| w[0] == w[1]);
        let b_route: Option<BigRational> = if geometric {
            Some(
                ratio_i64(1, (self.prime.get() - 1) as i64)
                    + b_vals[0].clone().expect("checked"),
            )
        } else {
            None
        };

        let combine = |cands: &[Option<BigRational>]| -> BigRational {
            let mut best = r.clone();
            for c in cands.iter().flatten() {
                if *c > best {
                    best = c.clone();
                }
            }
            best
        };
        let f_hat = combine(&[a_co.clone(), b_route.clone()]);
        let late = combine(&[coprime_max(n / 2 + 1..=n), b_route.clone()]);
        let mid = combine(&[coprime_max(n / 4 + 1..=n / 2), b_route.clone()]);
        let stabilized = late == mid && f_hat == late;
        RadiusEstimate { f_hat, stabilized }
    }

    /// The bare factorial growth rate max_{n<=N}(-w_n/n), the quantity the
    /// Christol-Dwork cross-check compares against. None when every G_n
    /// vanishes.
    pub fn growth_rate(&self, r: &BigRational) -> Option<BigRational> {
        (1..=self.n_max)
            .filter_map(|k| {
                self.power_valuation(k, r).map(|v| {
                    -(v - &self.fact_vals[k]) / BigRational::from(BigInt::from(k as i64))
                })
            })
            .max()
    }
}

/// Estimate f(r) = -log_p R(E, p^(-r)) from the first n_max derivative
/// powers. The estimate is exact on geometric-growth and Robba-type
/// modules; `stabilized = false` flags values that moved between the
/// sampling windows and should not be trusted.
pub fn generic_radius_estimate(
    m: &DiffModule,
    r: &BigRational,
    n_max: usize,
) -> Result<RadiusEstimate> {
    if !m.interval().contains(r) {
        return Err(Error::RadiusOutsideInterval(crate::padic::ratio_string(r)));
    }
    let p = m.prime().get() as usize;
    if n_max < p * p {
        return Err(Error::BadDescription(format!(
            "truncation order {n_max} is below p^2 = {}; the windows cannot stabilize",
            p * p
        )));
    }
    Ok(RadiusSampler::new(m, n_max)?.estimate(r))
}

/// A cyclic vector v together with the coefficients of
/// partial^mu(v) = sum a_i partial^i(v).
#[derive(Clone, Debug)]
pub struct CyclicData {
    pub vector: Vec<LaurentElement>,
    pub coeffs: Vec<LaurentFraction>,
}

/// Apply the derivation to a coordinate row vector: v -> dv/dt + v*G1.
fn apply_derivation(m: &DiffModule, v: &[LaurentElement]) -> Result<Vec<LaurentElement>> {
    let mu = m.rank;
    let mut out = Vec::with_capacity(mu);
    for j in 0..mu {
        let mut acc = v[j].d_dt()?;
        for i in 0..mu {
            if v[i].is_zero() && v[i].window().is_full() {
                continue;
            }
            acc = acc.add(&v[i].mul(&m.g1[(i, j)])?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Search for a cyclic vector among sums c_i t^(d_i) e_i with small
/// integer data. The search is seeded and deterministic.
pub fn cyclic_vector(m: &DiffModule, seed: u64) -> Result<CyclicData> {
    let mu = m.rank;
    let prime = m.prime;
    let level = m.level;
    let mut candidates: Vec<Vec<(i64, i64)>> = Vec::new(); // per coord (c, d)
    // standard vectors, then the all-ones vector, then seeded randoms
    for i in 0..mu {
        let mut v = vec![(0i64, 0i64); mu];
        v[i] = (1, 0);
        candidates.push(v);
    }
    candidates.push(vec![(1, 0); mu]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 64usize;
    while candidates.len() < budget {
        let v: Vec<(i64, i64)> = (0..mu)
            .map(|_| (rng.gen_range(-2..=2i64), rng.gen_range(-2..=2i64)))
            .collect();
        if v.iter().any(|&(c, _)| c != 0) {
            candidates.push(v);
        }
    }

    for cand in &candidates {
        let v: Vec<LaurentElement> = cand
            .iter()
            .map(|&(c, d)| {
                if c == 0 {
                    Ok(LaurentElement::zero(prime, level))
                } else {
                    LaurentElement::monomial(prime, level, d, 0, Scalar::from_int(prime, level, c))
                }
            })
            .collect::<Result<_>>()?;
        // rows v, dv, ..., d^(mu-1)v and the extra row d^mu v
        let mut rows = vec![v.clone()];
        for _ in 0..mu {
            let next = apply_derivation(m, rows.last().expect("nonempty"))?;
            rows.push(next);
        }
        let basis = Mat::from_rows(rows[..mu].to_vec());
        let det = basis.det()?;
        if det.is_zero() {
            continue;
        }
        // solve a * B = d^mu v, i.e. B^T a^T = (d^mu v)^T
        let a_sys: Vec<Vec<LaurentFraction>> = (0..mu)
            .map(|i| {
                (0..mu)
                    .map(|j| LaurentFraction::from_element(basis[(j, i)].clone()))
                    .collect()
            })
            .collect();
        let rhs: Vec<LaurentFraction> = (0..mu)
            .map(|i| LaurentFraction::from_element(rows[mu][i].clone()))
            .collect();
        if let Some(coeffs) = solve_fraction_system(&a_sys, &rhs)? {
            return Ok(CyclicData { vector: v, coeffs });
        }
    }
    Err(Error::CyclicVectorExhausted(candidates.len()))
}

/// Newton data for the operator partial^mu - sum a_i partial^i: the points
/// (-i, v_r(a_i)) together with the monic anchor (-mu, 0).
#[derive(Clone, Debug)]
pub struct NewtonData {
    pub points: Vec<(i64, LogValue)>,
    pub least_slope: Option<BigRational>,
}

impl NewtonData {
    pub fn new(coeffs: &[LaurentFraction], r: &BigRational) -> Self {
        let mu = coeffs.len() as i64;
        let mut points = vec![(-mu, LogValue::from_int(0))];
        let mut least: Option<BigRational> = None;
        for (i, a) in coeffs.iter().enumerate() {
            let v = a.gauss_valuation(r);
            points.push((-(i as i64), v.clone()));
            if let LogValue::Finite(v) = v {
                // slope of the chord from (-mu, 0) to (-i, v)
                let slope = v / BigRational::from(BigInt::from(mu - i as i64));
                least = Some(match least {
                    None => slope,
                    Some(cur) => cur.min(slope),
                });
            }
        }
        NewtonData {
            points,
            least_slope: least,
        }
    }
}

/// The valuation of max(|partial|_L, |partial|_sp) via the least slope of
/// the Newton hull: min(-r, least slope). Returns -r when every a_i is 0.
pub fn spectral_norm_newton(coeffs: &[LaurentFraction], r: &BigRational) -> LogValue {
    let data = NewtonData::new(coeffs, r);
    let op_norm = LogValue::Finite(-r.clone());
    match data.least_slope {
        None => op_norm,
        Some(s) => op_norm.min(LogValue::Finite(s)),
    }
}

/// f-value implied by the Newton route: 1/(p-1) - spectral_norm_newton.
/// A certified upper bound for f(r); exact when the twist dominates the
/// operator norm.
pub fn newton_f_value(prime: Prime, coeffs: &[LaurentFraction], r: &BigRational) -> BigRational {
    let lv = spectral_norm_newton(coeffs, r);
    let v = lv.as_finite().expect("max with |partial|_L is finite");
    ratio_i64(1, (prime.get() - 1) as i64) - v
}
