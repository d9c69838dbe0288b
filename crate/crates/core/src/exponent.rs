//! Exponents of solvable modules with highest break zero: the truncated
//! resolvent, its root-of-unity averages S_{h,Delta}, the greedy digit
//! search for the exponent class, and Sigma-membership tests.
//!
//! The resolvent Y(x,y) = sum_n G_n(y)(x-y)^n/n! specializes along
//! x = zeta*y to sum_n (zeta-1)^n * [G_n(t) t^n / n!], so only the
//! matrices T_n = G_n t^n/n! are stored. Under the Robba condition the
//! n-th term has valuation at least n*v(zeta-1), which certifies the
//! truncation tail.
//!
//! S_{h,Delta} = p^(-h) sum_{zeta^(p^h)=1} zeta^(-Delta) Y(zeta x, x),
//! and det S_{h,Delta} = sum over refinements Delta' of det S_{h+1,Delta'}.
//! Digits are chosen greedily: at each level keep the refinement whose
//! determinant valuation at the reference radius is minimal (the norm
//! maximal), breaking ties by the lexicographically smallest centered
//! representative vector.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::module::{derive_powers, DiffModule};
use crate::padic::{
    eq_class_test, ratio_i64, ratio_string, LogValue, PadicApprox, Prime, Scalar,
};
use crate::profile::{classify, default_grid, grid_in, robba_on_grid, sample_profile, BreakVerdict};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::Serialize;

/// Truncated horizontal-transport kernel: T_n = G_n t^n / n! for
/// n = 0..=n_max (T_0 = I), plus the per-level tail data.
#[derive(Clone, Debug)]
pub struct Resolvent {
    pub prime: Prime,
    pub rank: usize,
    pub t_mats: Vec<Mat>,
    pub n_max: usize,
    /// When terms were pruned, the valuation floor they were certified to
    /// exceed; folds into the tail bound.
    pub pruned_floor: Option<BigRational>,
}

impl Resolvent {
    /// Certified tail valuation of the level-h specialization
    /// sum_n (zeta-1)^n T_n: (n_max+1)/phi(p^h) capped by any pruning
    /// floor, before the p^(-h) of the S-average.
    pub fn tail_at_level(&self, h: u32) -> BigRational {
        let trunc = ratio_i64(self.n_max as i64 + 1, self.prime.phi(h) as i64);
        match &self.pruned_floor {
            Some(f) => trunc.min(f.clone()),
            None => trunc,
        }
    }
}

/// Default truncation order for level-h work.
pub fn default_resolvent_n(prime: Prime, h_max: u32) -> usize {
    prime.phi(h_max) * (8 + h_max as usize)
}

/// Build the truncated resolvent. Pre: the module satisfies the Robba
/// condition on the sampled working grid (f(r) = r exactly), which is
/// what certifies the tail bound.
pub fn resolvent(
    m: &DiffModule,
    n_max: usize,
    robba_grid: &[BigRational],
    n_radius: usize,
) -> Result<Resolvent> {
    if !robba_on_grid(m, robba_grid, n_radius)? {
        return Err(Error::RobbaPrecondition(format!(
            "f(r) != r on the working grid for a rank-{} module",
            m.rank()
        )));
    }
    let powers = derive_powers(m, n_max)?;
    // terms certified above this floor never influence a determinant
    // decision (the floor caps the tail bound at every level up to the
    // desk maximum); shedding them keeps relative families tractable
    const MAX_LEVEL_HINT: u32 = 3;
    let floor = BigRational::from(BigInt::from(n_max as i64 + 1))
        / BigRational::from(BigInt::from(m.prime().phi(MAX_LEVEL_HINT) as i64))
        + BigRational::from(BigInt::from(4));
    let r_lo = m.interval().lo().clone();
    let r_hi = m.interval().hi().clone();
    let mut t_mats = Vec::with_capacity(n_max + 1);
    t_mats.push(Mat::identity(m.prime(), m.level(), m.rank()));
    let mut inv_fact = BigRational::one();
    let mut pruned = false;
    for n in 1..=n_max {
        inv_fact /= BigRational::from(BigInt::from(n as i64));
        let tn = crate::laurent::LaurentElement::monomial(
            m.prime(),
            m.level(),
            n as i64,
            0,
            Scalar::from_ratio(m.prime(), 0, inv_fact.clone()),
        )?;
        let full = powers.g(n).map(|e| e.mul(&tn))?;
        let slim = full.map(|e| {
            let before = e.num_terms();
            let after = e.prune_above(&floor, &r_lo, &r_hi);
            if after.num_terms() < before {
                pruned = true;
            }
            Ok(after)
        })?;
        t_mats.push(slim);
    }
    Ok(Resolvent {
        prime: m.prime(),
        rank: m.rank(),
        t_mats,
        n_max,
        pruned_floor: if pruned { Some(floor) } else { None },
    })
}

/// The specializations Y(zeta^j x, x) for all p^h-th roots zeta^j,
/// cached per level.
pub struct LevelKernels {
    pub h: u32,
    pub y_mats: Vec<Mat>,
    pub zeta: Scalar,
}

pub fn level_kernels(resolvent: &Resolvent, h: u32) -> Result<LevelKernels> {
    let prime = resolvent.prime;
    let order = (prime.get() as usize).pow(h);
    let zeta = if h == 0 {
        Scalar::one(prime, 0)
    } else {
        Scalar::zeta(prime, h)?
    };
    let level = zeta.level();
    let mut y_mats = Vec::with_capacity(order);
    for j in 0..order {
        let zj = zeta.pow(j as u64)?;
        let c = zj.sub(&Scalar::one(prime, level))?;
        // Y(zeta^j x, x) = sum_n c^n T_n
        let mut acc = resolvent.t_mats[0].clone();
        if !c.is_zero() {
            let mut c_pow = Scalar::one(prime, level);
            for n in 1..=resolvent.n_max {
                c_pow = c_pow.mul(&c)?;
                acc = acc.add(&resolvent.t_mats[n].scale_scalar(&c_pow)?)?;
            }
        }
        y_mats.push(acc);
    }
    Ok(LevelKernels { h, y_mats, zeta })
}

/// One twisted average S_{h,Delta} with its determinant valuation at the
/// reference radius.
#[derive(Clone, Debug)]
pub struct SMatrix {
    pub h: u32,
    pub delta: Vec<BigInt>,
    pub matrix: Mat,
    pub det_valuation: LogValue,
    /// Valuations at or above this bound are not distinguishable from
    /// truncation junk.
    pub tail: BigRational,
}

/// Assemble S_{h,Delta} from cached kernels.
pub fn s_matrix_from_kernels(
    resolvent: &Resolvent,
    kernels: &LevelKernels,
    delta: &[BigInt],
    r0: &BigRational,
) -> Result<SMatrix> {
    let prime = resolvent.prime;
    let h = kernels.h;
    if delta.len() != resolvent.rank {
        return Err(Error::BadDescription(format!(
            "delta has {} coordinates for a rank-{} module",
            delta.len(),
            resolvent.rank
        )));
    }
    let order = (prime.get() as usize).pow(h);
    let level = kernels.zeta.level();
    let mut acc = Mat::zero(prime, level, resolvent.rank, resolvent.rank);
    for (j, y) in kernels.y_mats.iter().enumerate() {
        // diag(zeta^(-j*delta_i)) * Y_j: scale row i
        let mut rows = Vec::with_capacity(resolvent.rank);
        for i in 0..resolvent.rank {
            let d: i64 = (&delta[i] % BigInt::from(order as i64))
                .try_into()
                .expect("residue fits in i64");
            let e = -(j as i64) * d;
            let w = if h == 0 {
                Scalar::one(prime, 0)
            } else {
                Scalar::zeta_pow(prime, h, e)?
            };
            let row: Vec<crate::laurent::LaurentElement> = (0..resolvent.rank)
                .map(|c| y[(i, c)].scale_scalar(&w))
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        acc = acc.add(&Mat::from_rows(rows))?;
    }
    let ph = BigRational::from(prime.pow_big(h));
    let matrix = acc.scale(&ph.recip());
    let tail = resolvent.tail_at_level(h) - BigRational::from(BigInt::from(h as i64));
    let det = matrix.det()?;
    let det_valuation = match det.gauss_valuation(r0) {
        LogValue::Finite(v) if v < tail => LogValue::Finite(v),
        // cannot be told apart from the truncation tail
        _ => LogValue::Infinite,
    };
    Ok(SMatrix {
        h,
        delta: delta.to_vec(),
        matrix,
        det_valuation,
        tail,
    })
}

/// Convenience wrapper building the kernels afresh.
pub fn s_matrix(
    resolvent: &Resolvent,
    h: u32,
    delta: &[BigInt],
    r0: &BigRational,
) -> Result<SMatrix> {
    let kernels = level_kernels(resolvent, h)?;
    s_matrix_from_kernels(resolvent, kernels.as_ref(), delta, r0)
}

impl AsRef<LevelKernels> for LevelKernels {
    fn as_ref(&self) -> &LevelKernels {
        self
    }
}

/// The chosen digit vector with its per-level determinant valuations.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentCandidate {
    /// Canonical residues in [0, p^H).
    pub delta: Vec<u64>,
    #[serde(rename = "mod")]
    pub modulus: u64,
    pub det_valuations: Vec<String>,
    pub r0: String,
    pub height: u32,
}

impl ExponentCandidate {
    pub fn delta_big(&self) -> Vec<BigInt> {
        self.delta.iter().map(|&d| BigInt::from(d)).collect()
    }
}

/// Greedy digit selection: at each level h <= h_max pick, among the p^mu
/// refinements of the current vector, the one with minimal determinant
/// valuation at r0; ties go to the lexicographically smallest centered
/// representative vector.
pub fn exponent_digits(
    m: &DiffModule,
    r0: &BigRational,
    h_max: u32,
    n_max: Option<usize>,
    n_radius: Option<usize>,
) -> Result<ExponentCandidate> {
    let n_res = n_max.unwrap_or_else(|| default_resolvent_n(m.prime(), h_max));
    let n_rad = n_radius.unwrap_or_else(|| m.default_n());
    let grid = grid_in(m.interval(), &default_grid());
    let res = resolvent(m, n_res, &grid, n_rad)?;
    exponent_digits_from_resolvent(m, &res, r0, h_max)
}

pub fn exponent_digits_from_resolvent(
    m: &DiffModule,
    res: &Resolvent,
    r0: &BigRational,
    h_max: u32,
) -> Result<ExponentCandidate> {
    let prime = m.prime();
    let p = prime.get() as usize;
    let mu = m.rank();
    let mut delta: Vec<BigInt> = vec![BigInt::zero(); mu];
    let mut det_valuations: Vec<String> = Vec::new();
    for h in 1..=h_max {
        let kernels = level_kernels(res, h)?;
        let step = prime.pow_big(h - 1);
        let ph = prime.pow_big(h);
        let mut best: Option<(Vec<BigInt>, BigRational, Vec<BigInt>)> = None;
        // enumerate digit vectors d in {0..p-1}^mu
        let mut digits = vec![0usize; mu];
        loop {
            let cand: Vec<BigInt> = (0..mu)
                .map(|i| &delta[i] + BigInt::from(digits[i] as i64) * &step)
                .collect();
            let s = s_matrix_from_kernels(res, &kernels, &cand, r0)?;
            if let LogValue::Finite(v) = s.det_valuation {
                let centered: Vec<BigInt> = cand
                    .iter()
                    .map(|c| {
                        let x = PadicApprox::exact(prime, BigRational::from(c.clone()))
                            .expect("integer");
                        x.centered_rep(h).expect("exact precision")
                    })
                    .collect();
                let better = match &best {
                    None => true,
                    Some((_, bv, bc)) => v < *bv || (v == *bv && centered < *bc),
                };
                if better {
                    best = Some((cand, v, centered));
                }
            }
            // increment the digit odometer
            let mut i = 0;
            loop {
                if i == mu {
                    break;
                }
                digits[i] += 1;
                if digits[i] < p {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == mu {
                break;
            }
        }
        match best {
            None => return Err(Error::DegenerateResolvent(h)),
            Some((cand, v, _)) => {
                delta = cand
                    .into_iter()
                    .map(|c| {
                        let mut r = c % &ph;
                        if r.sign() == num::bigint::Sign::Minus {
                            r += &ph;
                        }
                        r
                    })
                    .collect();
                det_valuations.push(ratio_string(&v));
            }
        }
    }
    let modulus: u64 = prime
        .pow_big(h_max)
        .try_into()
        .expect("desk-scale modulus");
    Ok(ExponentCandidate {
        delta: delta
            .iter()
            .map(|d| u64::try_from(d).expect("canonical residue"))
            .collect(),
        modulus,
        det_valuations,
        r0: ratio_string(r0),
        height: h_max,
    })
}

/// NID / NLD check for finite rational Sigma-sets, one set per divisor
/// index: no two members may differ by a nonzero integer, and rationals
/// are automatically p-adically non-Liouville.
pub fn nid_nld_check(sigma_sets: &[Vec<BigRational>]) -> bool {
    for sigma in sigma_sets {
        for (i, a) in sigma.iter().enumerate() {
            for b in sigma.iter().skip(i + 1) {
                let d = a - b;
                if d.denom().is_one() && !d.numer().is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// Membership of the candidate in Sigma-bar at finite precision: each
/// coordinate must match some xi in Sigma up to an integer shift s with
/// |s| <= shift_bound, compared through centered representatives mod p^H.
pub fn exponent_in_sigma(
    cand: &ExponentCandidate,
    sigma: &[BigRational],
    prime: Prime,
    shift_bound: &BigRational,
) -> Result<bool> {
    let h = cand.height;
    for &d in &cand.delta {
        let mut hit = false;
        for xi in sigma {
            // s = delta - xi mod p^H, centered; the true shift matches the
            // centered representative whenever |s| <= p^H/2
            let diff = BigRational::from(BigInt::from(d)) - xi;
            let appr = PadicApprox::exact(prime, diff)?;
            let s = appr.centered_rep(h)?;
            if BigRational::from(s.abs()) <= *shift_bound {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default shift bound: p^H/4, small enough that a genuine fractional
/// difference cannot masquerade as an integer shift at precision p^H.
pub fn default_shift_bound(prime: Prime, h: u32) -> BigRational {
    BigRational::from(prime.pow_big(h)) / BigRational::from(BigInt::from(4))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum SigmaVerdict {
    True,
    False { reason: String },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaReport {
    pub robba: bool,
    pub exponent: Option<ExponentCandidate>,
    pub verdict: SigmaVerdict,
}

pub struct SigmaParams {
    pub h_max: u32,
    pub r0: Option<BigRational>,
    pub n_resolvent: Option<usize>,
    pub n_radius: Option<usize>,
    pub shift_bound: Option<BigRational>,
}

impl SigmaParams {
    pub fn new(h_max: u32) -> Self {
        SigmaParams {
            h_max,
            r0: None,
            n_resolvent: None,
            n_radius: None,
            shift_bound: None,
        }
    }
}

/// Composite Sigma-unipotence test: the Robba condition on the working
/// grid plus membership of the exponent in Sigma-bar.
pub fn sigma_unipotent_check(
    m: &DiffModule,
    sigma: &[BigRational],
    params: &SigmaParams,
) -> Result<SigmaReport> {
    if !nid_nld_check(std::slice::from_ref(&sigma.to_vec())) {
        return Ok(SigmaReport {
            robba: false,
            exponent: None,
            verdict: SigmaVerdict::Inconclusive {
                reason: "sigma violates the non-integer-difference condition".into(),
            },
        });
    }
    let n_rad = params.n_radius.unwrap_or_else(|| m.default_n());
    let grid = grid_in(m.interval(), &default_grid());
    if grid.len() < 3 {
        return Ok(SigmaReport {
            robba: false,
            exponent: None,
            verdict: SigmaVerdict::Inconclusive {
                reason: "interval too narrow for the default grid".into(),
            },
        });
    }
    let profile = sample_profile(m, &grid, n_rad)?;
    let verdict = classify(&profile);
    let robba = verdict.is_solvable_with_break_zero()
        && profile.samples.iter().all(|s| s.f_hat == s.r);
    if let BreakVerdict::Inconclusive { reason } = &verdict {
        return Ok(SigmaReport {
            robba: false,
            exponent: None,
            verdict: SigmaVerdict::Inconclusive {
                reason: format!("break classification inconclusive: {reason}"),
            },
        });
    }
    if !robba {
        return Ok(SigmaReport {
            robba: false,
            exponent: None,
            verdict: SigmaVerdict::False {
                reason: "Robba condition fails (highest break is not 0)".into(),
            },
        });
    }
    let r0 = params.r0.clone().unwrap_or_else(|| m.interval().midpoint());
    let cand = exponent_digits(
        m,
        &r0,
        params.h_max,
        params.n_resolvent,
        params.n_radius,
    )?;
    let bound = params
        .shift_bound
        .clone()
        .unwrap_or_else(|| default_shift_bound(m.prime(), params.h_max));
    let inside = exponent_in_sigma(&cand, sigma, m.prime(), &bound)?;
    let verdict = if inside {
        SigmaVerdict::True
    } else {
        SigmaVerdict::False {
            reason: format!(
                "exponent {:?} mod {} does not meet sigma up to shifts of size {}",
                cand.delta,
                cand.modulus,
                ratio_string(&bound)
            ),
        }
    };
    Ok(SigmaReport {
        robba: true,
        exponent: Some(cand),
        verdict,
    })
}

/// Equality of two candidates as exponent tuples under the finite
/// surrogate of the tuple equivalence.
pub fn candidates_equivalent(
    prime: Prime,
    a: &ExponentCandidate,
    b: &ExponentCandidate,
    bound: &BigRational,
) -> Result<bool> {
    let to_apx = |c: &ExponentCandidate| -> Result<Vec<PadicApprox>> {
        c.delta
            .iter()
            .map(|&d| PadicApprox::new(prime, BigRational::from(BigInt::from(d)), c.height))
            .collect()
    };
    let h = a.height.min(b.height);
    eq_class_test(&to_apx(a)?, &to_apx(b)?, h, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::{LaurentElement, RInterval};

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    fn interval() -> RInterval {
        RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap()
    }

    fn working_grid() -> Vec<BigRational> {
        grid_in(&interval(), &default_grid())
    }

    fn m_xi(n: i64, d: i64) -> DiffModule {
        DiffModule::m_xi(p3(), &ratio_i64(n, d), interval()).unwrap()
    }

    fn res_for(m: &DiffModule, n: usize) -> Resolvent {
        resolvent(m, n, &working_grid(), 27).unwrap()
    }

    fn r0() -> BigRational {
        ratio_i64(1, 4)
    }

    #[test]
    fn resolvent_requires_robba() {
        let m = m_xi(1, 3);
        assert!(matches!(
            resolvent(&m, 20, &working_grid(), 27),
            Err(Error::RobbaPrecondition(_))
        ));
    }

    #[test]
    fn resolvent_of_trivial_is_identity() {
        let m = DiffModule::trivial(p3(), 0, 2, interval());
        let res = res_for(&m, 12);
        assert_eq!(res.t_mats[0], Mat::identity(p3(), 0, 2));
        for n in 1..=12 {
            assert!(res.t_mats[n].is_zero());
        }
    }

    #[test]
    fn resolvent_of_m_xi_is_binomial() {
        // T_n = binom(xi, n) as a scalar matrix
        let m = m_xi(1, 2);
        let res = res_for(&m, 8);
        let xi = ratio_i64(1, 2);
        let mut binom = BigRational::one();
        for n in 1..=8usize {
            binom *= (&xi - ratio_i64(n as i64 - 1, 1)) / ratio_i64(n as i64, 1);
            let entry = &res.t_mats[n][(0, 0)];
            let terms: Vec<_> = entry.terms().collect();
            assert_eq!(terms.len(), 1);
            assert_eq!(terms[0].0, &(0i64, 0u32));
            assert_eq!(terms[0].1.as_ratio().unwrap(), &binom, "n = {n}");
        }
    }

    #[test]
    fn s_matrix_examples_on_trivial() {
        let m = DiffModule::trivial(p3(), 0, 1, interval());
        let res = res_for(&m, 12);
        let s0 = s_matrix(&res, 1, &[BigInt::zero()], &r0()).unwrap();
        assert_eq!(s0.det_valuation, LogValue::from_int(0));
        for d in 1..3 {
            let s = s_matrix(&res, 1, &[BigInt::from(d)], &r0()).unwrap();
            assert!(s.det_valuation.is_infinite(), "d = {d}");
        }
    }

    #[test]
    fn s_matrix_picks_residue_of_half() {
        // 1/2 = 2 mod 3: det valuation 0 at d=2, positive otherwise
        let m = m_xi(1, 2);
        let res = res_for(&m, 24);
        let mut vals = Vec::new();
        for d in 0..3i64 {
            let s = s_matrix(&res, 1, &[BigInt::from(d)], &r0()).unwrap();
            vals.push(s.det_valuation);
        }
        assert_eq!(vals[2], LogValue::from_int(0));
        for d in [0usize, 1] {
            match &vals[d] {
                LogValue::Infinite => {}
                LogValue::Finite(v) => assert!(v > &BigRational::zero(), "d = {d}"),
            }
        }
    }

    #[test]
    fn refinement_identity_within_tails() {
        // det S_{h,D} = sum over refinements of det S_{h+1,D'}
        let m = m_xi(1, 2);
        let res = res_for(&m, 60);
        let d1 = [BigInt::from(2)];
        let s1 = s_matrix(&res, 1, &d1, &r0()).unwrap();
        let mut sum: Option<LaurentElement> = None;
        let kernels = level_kernels(&res, 2).unwrap();
        for j in 0..3i64 {
            let d2 = [BigInt::from(2 + 3 * j)];
            let s2 = s_matrix_from_kernels(&res, &kernels, &d2, &r0()).unwrap();
            let det = s2.matrix.det().unwrap();
            sum = Some(match sum {
                None => det,
                Some(s) => s.add(&det).unwrap(),
            });
        }
        let det1 = s1.matrix.det().unwrap();
        let diff = det1.sub(&sum.unwrap()).unwrap();
        match diff.gauss_valuation(&r0()) {
            LogValue::Infinite => {}
            LogValue::Finite(v) => {
                // within the level-2 tail
                let tail = res.tail_at_level(2) - ratio_i64(2, 1);
                assert!(v >= tail, "difference valuation {v} below tail {tail}");
            }
        }
    }

    #[test]
    fn twisting_identity_condition_one() {
        // zeta^Delta S_h(x) = S_h(zeta x) Y(zeta x, x) for all p^h-th
        // roots, h <= 2
        let m = m_xi(1, 2);
        let res = res_for(&m, 60);
        for (h, delta) in [(1u32, 2i64), (2, 5)] {
            let kernels = level_kernels(&res, h).unwrap();
            let order = 3u64.pow(h);
            let s =
                s_matrix_from_kernels(&res, &kernels, &[BigInt::from(delta)], &r0()).unwrap();
            let zeta = Scalar::zeta(p3(), h).unwrap();
            for j in 1..order {
                let zj = zeta.pow(j).unwrap();
                let lhs = s
                    .matrix
                    .scale_scalar(&zj.pow(delta as u64).unwrap())
                    .unwrap();
                let rhs = s
                    .matrix
                    .twist_t(&zj)
                    .unwrap()
                    .mul(&kernels.y_mats[j as usize])
                    .unwrap();
                let diff = lhs.sub(&rhs).unwrap();
                match diff.gauss_valuation(&r0()) {
                    LogValue::Infinite => {}
                    LogValue::Finite(v) => {
                        let tail = res.tail_at_level(h) - ratio_i64(2, 1)
                            - BigRational::from(BigInt::from(h));
                        assert!(v >= tail, "h = {h}, j = {j}: residual valuation {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn greedy_digits_recover_m_xi() {
        for (n, d, expect) in [(0i64, 1i64, vec![0u64]), (1, 2, vec![5]), (2, 1, vec![2])] {
            let m = m_xi(n, d);
            let cand = exponent_digits(&m, &r0(), 2, None, Some(27)).unwrap();
            assert_eq!(cand.delta, expect, "xi = {n}/{d}");
            assert_eq!(cand.modulus, 9);
            // norms along the chain never decrease
            let vals: Vec<BigRational> = cand
                .det_valuations
                .iter()
                .map(|v| crate::padic::parse_ratio(v).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]), "xi = {n}/{d}");
        }
    }

    #[test]
    fn greedy_digits_blockwise_on_direct_sum() {
        let m = m_xi(0, 1).direct_sum(&m_xi(1, 2)).unwrap();
        let cand = exponent_digits(&m, &r0(), 1, None, Some(27)).unwrap();
        let mut sorted = cand.delta.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 2]);
    }

    #[test]
    fn log_nilpotent_has_zero_exponent() {
        let prime = p3();
        let z = LaurentElement::zero(prime, 0);
        let e = LaurentElement::monomial(prime, 0, -1, 0, Scalar::one(prime, 0)).unwrap();
        let g1 = Mat::from_rows(vec![vec![z.clone(), e], vec![z.clone(), z]]);
        let m = DiffModule::new(g1, interval(), prime, 0).unwrap();
        let cand = exponent_digits(&m, &r0(), 1, None, Some(27)).unwrap();
        assert_eq!(cand.delta, vec![0, 0]);
    }

    #[test]
    fn nid_examples() {
        assert!(nid_nld_check(&[vec![ratio_i64(0, 1), ratio_i64(1, 2)]]));
        assert!(!nid_nld_check(&[vec![ratio_i64(0, 1), ratio_i64(1, 1)]]));
        assert!(nid_nld_check(&[vec![ratio_i64(0, 1)]]));
    }

    #[test]
    fn sigma_membership_examples() {
        let prime = p3();
        let cand = |delta: Vec<u64>| ExponentCandidate {
            delta,
            modulus: 9,
            det_valuations: vec![],
            r0: "1/4".into(),
            height: 2,
        };
        let half = vec![ratio_i64(1, 2)];
        let b2 = ratio_i64(2, 1);
        assert!(exponent_in_sigma(&cand(vec![5]), &half, prime, &b2).unwrap());
        assert!(exponent_in_sigma(&cand(vec![6]), &half, prime, &b2).unwrap());
        assert!(!exponent_in_sigma(&cand(vec![1]), &half, prime, &b2).unwrap());
        // the default bound keeps 1/2 away from integers
        let bound = default_shift_bound(prime, 2);
        assert!(!exponent_in_sigma(&cand(vec![5]), &[ratio_i64(0, 1)], prime, &bound).unwrap());
    }

    #[test]
    fn sigma_unipotent_composite() {
        let params = SigmaParams::new(2);
        let half = vec![ratio_i64(1, 2)];
        let report = sigma_unipotent_check(&m_xi(1, 2), &half, &params).unwrap();
        assert_eq!(report.verdict, SigmaVerdict::True);

        let zero = vec![ratio_i64(0, 1)];
        let report = sigma_unipotent_check(&m_xi(1, 2), &zero, &params).unwrap();
        assert!(matches!(report.verdict, SigmaVerdict::False { .. }));

        // Dwork-type: break 1, Robba fails
        let prime = p3();
        let zc = Scalar::zeta(prime, 1).unwrap();
        let c = zc.sub(&Scalar::one(prime, 1)).unwrap();
        let g = LaurentElement::monomial(prime, 1, -2, 0, c).unwrap();
        let dwork = DiffModule::rank1_twist(g, interval());
        let report = sigma_unipotent_check(&dwork, &half, &params).unwrap();
        assert!(matches!(report.verdict, SigmaVerdict::False { .. }));
        assert!(!report.robba);
    }

    #[test]
    fn candidates_equivalence_surrogate() {
        let prime = p3();
        let a = ExponentCandidate {
            delta: vec![5],
            modulus: 9,
            det_valuations: vec![],
            r0: "1/4".into(),
            height: 2,
        };
        let b = ExponentCandidate {
            delta: vec![6],
            modulus: 9,
            det_valuations: vec![],
            r0: "1/4".into(),
            height: 2,
        };
        assert!(candidates_equivalent(prime, &a, &b, &ratio_i64(1, 1)).unwrap());
    }
}
