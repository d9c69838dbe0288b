//! The mu_p-action on a differential module, its projectors, and
//! Frobenius antecedents.
//!
//! When R(E, rho) > p^(-1/(p-1))*rho on the interval, the p-th roots of
//! unity act on sections through the Taylor series
//! x -> sum_i ((zeta^m - 1) t)^i / i! * partial^i(x), and the averaged
//! projectors P_j = p^(-1) sum_m zeta^(-mj) A_m decompose E. The image of
//! P_0 descends along t -> t^p; extracting a basis of it by column
//! reduction over the subring in u = t^p and transporting the connection
//! 1/(p t^(p-1)) * partial yields the antecedent.
//!
//! All series are truncated; every matrix built here carries a certified
//! tail valuation at the interval midpoint, and identity checks assert
//! vanishing only up to that tail.

use crate::error::{Error, Result};
use crate::laurent::{LaurentElement, Window};
use crate::matrix::{solve_fraction_system, LaurentFraction, Mat};
use crate::module::{derive_powers, DiffModule, RadiusSampler};
use crate::padic::{ratio_i64, ratio_string, LogValue, Scalar};
use num::rational::BigRational;
use num::{BigInt, One, Zero};
use serde::Serialize;

/// Matrices of the zeta^m-action for m = 0..p-1, truncated at `n_max`,
/// with the certified tail valuation of the dropped terms at the
/// reference radius.
#[derive(Clone, Debug)]
pub struct MuPAction {
    pub matrices: Vec<Mat>,
    pub n_max: usize,
    pub r0: BigRational,
    /// Lower bound for the valuation at r0 of everything truncated away.
    pub tail: BigRational,
}

/// Budget for the tail valuation: p^2 + 10, at the interval midpoint.
fn tail_budget(m: &DiffModule) -> BigRational {
    let p = m.prime().get() as i64;
    BigRational::from(BigInt::from(p * p + 10))
}

/// Verify R(E,rho) > p^(-1/(p-1))*rho on the interval, i.e.
/// f(r) < r + 1/(p-1) at the endpoints and midpoint (f - r is convex, so
/// the endpoints control the interior). Returns the smallest slack.
fn antecedent_gap(m: &DiffModule, n_estimate: usize) -> Result<BigRational> {
    let sampler = RadiusSampler::new(m, n_estimate)?;
    let margin = ratio_i64(1, (m.prime().get() - 1) as i64);
    let mut gap: Option<BigRational> = None;
    for r in [
        m.interval().lo().clone(),
        m.interval().midpoint(),
        m.interval().hi().clone(),
    ] {
        let est = sampler.estimate(&r);
        let slack = &r + &margin - &est.f_hat;
        if slack <= BigRational::zero() || !est.stabilized {
            return Err(Error::AntecedentPrecondition(ratio_string(&r)));
        }
        gap = Some(match gap {
            None => slack,
            Some(g) => g.min(slack),
        });
    }
    Ok(gap.expect("three samples"))
}

/// Build the truncated mu_p-action. The truncation order is chosen so the
/// tail valuation at the midpoint exceeds the budget.
pub fn mu_p_action(m: &DiffModule, n_max: Option<usize>) -> Result<MuPAction> {
    let prime = m.prime();
    let p = prime.get() as usize;
    let level = m.level().max(1);
    let gap = antecedent_gap(m, m.default_n())?;
    let budget = tail_budget(m);
    let n_max = n_max.unwrap_or_else(|| {
        let need = &budget / &gap;
        let mut n = need.ceil().to_integer();
        if n < BigInt::from(p) {
            n = BigInt::from(p);
        }
        usize::try_from(n).unwrap_or(64).min(512)
    });
    let r0 = m.interval().midpoint();
    let tail = BigRational::from(BigInt::from(n_max as i64 + 1)) * &gap;

    let powers = derive_powers(m, n_max)?;
    let zeta = Scalar::zeta(prime, 1)?;
    let mut matrices = Vec::with_capacity(p);
    for mm in 0..p {
        let mut acc = Mat::identity(prime, level, m.rank());
        if mm > 0 {
            let zm = zeta.pow(mm as u64)?;
            let c = zm.sub(&Scalar::one(prime, 1))?; // zeta^m - 1
            let mut c_pow = Scalar::one(prime, level);
            let mut inv_fact = BigRational::one();
            for i in 1..=n_max {
                c_pow = c_pow.mul(&c)?;
                inv_fact /= BigRational::from(BigInt::from(i as i64));
                // ((zeta^m - 1) t)^i / i! * G_i
                let t_pow = LaurentElement::monomial(
                    prime,
                    level,
                    i as i64,
                    0,
                    c_pow.scale(&inv_fact),
                )?;
                let term = powers.g(i).map(|e| e.mul(&t_pow))?;
                acc = acc.add(&term)?;
            }
        }
        matrices.push(acc);
    }
    Ok(MuPAction {
        matrices,
        n_max,
        r0,
        tail,
    })
}

impl MuPAction {
    /// Valuation floor of the action matrices at r0.
    fn floor(&self) -> BigRational {
        let mut f = BigRational::zero();
        for a in &self.matrices {
            if let LogValue::Finite(v) = a.gauss_valuation(&self.r0) {
                if v < f {
                    f = v;
                }
            }
        }
        f
    }

    /// Threshold below which an entry valuation counts as significant in
    /// identity checks: the tail degraded by one product and by the
    /// p^(-1) in the projector average.
    pub fn check_threshold(&self) -> BigRational {
        &self.tail + self.floor() - BigRational::one()
    }
}

/// P_j = p^(-1) sum_m zeta^(-mj) A_m.
pub fn projectors(action: &MuPAction) -> Result<Vec<Mat>> {
    let first = &action.matrices[0];
    let prime = first.entries().next().expect("nonempty").prime();
    let p = prime.get() as usize;
    let inv_p = ratio_i64(1, p as i64);
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut acc: Option<Mat> = None;
        for (mm, a) in action.matrices.iter().enumerate() {
            let w = Scalar::zeta_pow(prime, 1, -((mm * j) as i64))?;
            let term = a.scale_scalar(&w)?;
            acc = Some(match acc {
                None => term,
                Some(s) => s.add(&term)?,
            });
        }
        out.push(acc.expect("p >= 2").scale(&inv_p));
    }
    Ok(out)
}

/// Split a t-Laurent element into its p residue components as u-Laurent
/// elements, u = t^p: component l collects degrees nt = p*q + l.
fn u_components(e: &LaurentElement, p: u32) -> Result<Vec<LaurentElement>> {
    let prime = e.prime();
    let level = e.level();
    let p64 = p as i64;
    let window = e.window();
    let mut comps = Vec::with_capacity(p as usize);
    for l in 0..p64 {
        // a residue class with no exact degrees left cannot be split off
        let w = Window::new(
            window.lo.map(|a| num::integer::div_ceil(a - l, p64)),
            window.hi.map(|b| num::integer::div_floor(b - l, p64)),
        )?;
        let comp = LaurentElement::zero(prime, level).with_window(w)?;
        comps.push(comp);
    }
    for (&(nt, nz), c) in e.terms() {
        let l = nt.rem_euclid(p64);
        let q = (nt - l) / p64;
        let mono = LaurentElement::monomial(prime, level, q, nz, c.clone())?;
        comps[l as usize] = comps[l as usize].add(&mono)?;
    }
    Ok(comps)
}

/// The antecedent: a module F in the variable u = t^p together with the
/// basis of Im P_0 inside E expressing the isomorphism phi^* F = E.
#[derive(Clone, Debug)]
pub struct Antecedent {
    pub module: DiffModule,
    /// Rows are the E-coordinates of the chosen basis of Im P_0.
    pub basis: Mat,
    pub r0: BigRational,
    pub threshold: BigRational,
}

/// Construct the Frobenius antecedent by column reduction of the
/// candidate sections P_0(t^j e_k) over the subring in u = t^p.
pub fn antecedent(m: &DiffModule, n_max: Option<usize>) -> Result<Antecedent> {
    let prime = m.prime();
    let p = prime.get() as usize;
    let mu = m.rank();
    let action = mu_p_action(m, n_max)?;
    let projs = projectors(&action)?;
    let threshold = action.check_threshold();
    let r_u = &action.r0 * BigRational::from(BigInt::from(p as i64));

    // candidate coordinates: P_0(t^j e_k) = t^j * row_k(P_{(p-j) mod p})
    let mut candidates: Vec<Vec<LaurentElement>> = Vec::with_capacity(p * mu);
    for j in 0..p {
        let proj = &projs[(p - j) % p];
        let tj = LaurentElement::monomial(
            prime,
            m.level().max(1),
            j as i64,
            0,
            Scalar::one(prime, m.level().max(1)),
        )?;
        for k in 0..mu {
            let row: Vec<LaurentElement> = (0..mu)
                .map(|c| proj[(k, c)].mul(&tj))
                .collect::<Result<_>>()?;
            candidates.push(row);
        }
    }

    // flatten each candidate over u and run a greedy rank selection
    let flat_len = mu * p;
    let mut flats: Vec<Vec<LaurentFraction>> = Vec::with_capacity(candidates.len());
    for cand in &candidates {
        let mut flat = Vec::with_capacity(flat_len);
        for coord in cand {
            for comp in u_components(coord, prime.get())? {
                flat.push(LaurentFraction::from_element(comp));
            }
        }
        flats.push(flat);
    }

    let significant = |f: &LaurentFraction| -> bool {
        match f.gauss_valuation(&r_u) {
            LogValue::Finite(v) => v < threshold,
            LogValue::Infinite => false,
        }
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut pivots: Vec<(usize, Vec<LaurentFraction>)> = Vec::new(); // (col, reduced row)
    for (idx, flat) in flats.iter().enumerate() {
        if selected.len() == mu {
            break;
        }
        let mut row = flat.clone();
        for (pcol, prow) in &pivots {
            if row[*pcol].is_zero() {
                continue;
            }
            let factor = row[*pcol].div(&prow[*pcol])?;
            for c in 0..flat_len {
                let t = factor.mul(&prow[c])?;
                row[c] = row[c].sub(&t)?;
            }
        }
        // best remaining entry by valuation
        let mut best: Option<(usize, BigRational)> = None;
        for (c, entry) in row.iter().enumerate() {
            if !significant(entry) {
                continue;
            }
            if let LogValue::Finite(v) = entry.gauss_valuation(&r_u) {
                match &best {
                    Some((_, bv)) if *bv <= v => {}
                    _ => best = Some((c, v)),
                }
            }
        }
        if let Some((c, _)) = best {
            pivots.push((c, row));
            selected.push(idx);
        }
    }
    if selected.len() != mu {
        return Err(Error::ColumnReduction(mu));
    }

    let basis = Mat::from_rows(selected.iter().map(|&i| candidates[i].clone()).collect());
    let pivot_cols: Vec<usize> = pivots.iter().map(|(c, _)| *c).collect();

    // derivation in u on each basis row: (dB_i/dt + B_i G1) / (p t^(p-1))
    let shift = LaurentElement::monomial(
        prime,
        m.level().max(1),
        -(p as i64 - 1),
        0,
        Scalar::from_ratio(prime, 0, ratio_i64(1, p as i64)),
    )?;
    let mut d_rows: Vec<Vec<LaurentElement>> = Vec::with_capacity(mu);
    for i in 0..mu {
        let mut row = Vec::with_capacity(mu);
        for c in 0..mu {
            let mut acc = basis[(i, c)].d_dt()?;
            for k in 0..mu {
                acc = acc.add(&basis[(i, k)].mul(&m.g1()[(k, c)])?)?;
            }
            row.push(acc.mul(&shift)?);
        }
        d_rows.push(row);
    }

    // flattened basis over u, restricted to the pivot columns
    let basis_flat: Vec<Vec<LaurentFraction>> =
        selected.iter().map(|&i| flats[i].clone()).collect();
    let sys: Vec<Vec<LaurentFraction>> = pivot_cols
        .iter()
        .map(|&c| (0..mu).map(|j| basis_flat[j][c].clone()).collect())
        .collect();

    let mut h_rows: Vec<Vec<LaurentElement>> = Vec::with_capacity(mu);
    for d_row in &d_rows {
        let mut d_flat = Vec::with_capacity(flat_len);
        for coord in d_row {
            for comp in u_components(coord, prime.get())? {
                d_flat.push(LaurentFraction::from_element(comp));
            }
        }
        let rhs: Vec<LaurentFraction> =
            pivot_cols.iter().map(|&c| d_flat[c].clone()).collect();
        let sol = solve_fraction_system(&sys, &rhs)?.ok_or(Error::ColumnReduction(mu))?;
        // verify the non-pivot columns within the tail
        for c in 0..flat_len {
            if pivot_cols.contains(&c) {
                continue;
            }
            let mut acc = LaurentFraction::zero(prime, m.level().max(1));
            for (j, s) in sol.iter().enumerate() {
                acc = acc.add(&s.mul(&basis_flat[j][c])?)?;
            }
            let resid = acc.sub(&d_flat[c])?;
            if !resid.is_zero() {
                if let LogValue::Finite(v) = resid.gauss_valuation(&r_u) {
                    if v < threshold {
                        return Err(Error::ColumnReduction(mu));
                    }
                }
            }
        }
        let mut row = Vec::with_capacity(mu);
        for frac in sol {
            // exact division covers the terminating corpus; series-type
            // modules fall back to dominant-term division that stops when
            // the remainder sinks below the certified tail
            let q = match frac.num.try_div_exact(&frac.den) {
                Some(q) => q,
                None => {
                    let vden = match frac.den.gauss_valuation(&r_u) {
                        LogValue::Finite(v) => v,
                        LogValue::Infinite => return Err(Error::ColumnReduction(mu)),
                    };
                    let target = &threshold + vden;
                    frac.num
                        .div_dominant(&frac.den, &r_u, &target)
                        .ok_or(Error::ColumnReduction(mu))?
                }
            };
            row.push(q);
        }
        h_rows.push(row);
    }

    let interval_u = m
        .interval()
        .scale(&BigRational::from(BigInt::from(p as i64)))?;
    let module = DiffModule::new(Mat::from_rows(h_rows), interval_u, prime, m.level().max(1))?;
    Ok(Antecedent {
        module,
        basis,
        r0: action.r0.clone(),
        threshold,
    })
}

/// Entry-by-entry smallness at r0: every nonzero entry of `m` must
/// valuate at or above the threshold.
fn vanishes_within_tail(m: &Mat, r0: &BigRational, threshold: &BigRational) -> bool {
    match m.gauss_valuation(r0) {
        LogValue::Infinite => true,
        LogValue::Finite(v) => v >= *threshold,
    }
}

/// Verify sum P_j = id and P_j o P_j' = delta_{jj'} P_j (the composition
/// in its twisted matrix form) within tails.
pub fn verify_projectors(m: &DiffModule, action: &MuPAction) -> Result<bool> {
    let prime = m.prime();
    let p = prime.get() as usize;
    let projs = projectors(action)?;
    let threshold = action.check_threshold();
    let r0 = &action.r0;
    let mut sum: Option<Mat> = None;
    for pj in &projs {
        sum = Some(match sum {
            None => pj.clone(),
            Some(s) => s.add(pj)?,
        });
    }
    let id = Mat::identity(prime, m.level().max(1), m.rank());
    if !vanishes_within_tail(&sum.expect("p >= 2").sub(&id)?, r0, &threshold) {
        return Ok(false);
    }
    // operator composition: (P_j o P_j')(e_k) has matrix
    // p^(-1) sum_m zeta^(-mj) sigma_m(P_j') A_m
    let zeta = Scalar::zeta(prime, 1)?;
    for j in 0..p {
        for j2 in 0..p {
            let mut acc: Option<Mat> = None;
            for (mm, a) in action.matrices.iter().enumerate() {
                let zm = zeta.pow(mm as u64)?;
                let twisted = projs[j2].twist_t(&zm)?;
                let w = Scalar::zeta_pow(prime, 1, -((mm * j) as i64))?;
                let term = twisted.mul(a)?.scale_scalar(&w)?;
                acc = Some(match acc {
                    None => term,
                    Some(s) => s.add(&term)?,
                });
            }
            let comp = acc.expect("p >= 2").scale(&ratio_i64(1, p as i64));
            let expect = if j == j2 {
                projs[j].clone()
            } else {
                Mat::zero(prime, m.level().max(1), m.rank(), m.rank())
            };
            // two truncated factors stack; relax the threshold by one unit
            let relaxed = &threshold - BigRational::one();
            if !vanishes_within_tail(&comp.sub(&expect)?, r0, &relaxed) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusLawEntry {
    pub r: String,
    pub f_antecedent_at_pr: String,
    pub p_times_f: String,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AntecedentReport {
    pub radius_law: Vec<RadiusLawEntry>,
    pub pullback_identity: bool,
    pub roundtrip_isomorphic: bool,
}

impl AntecedentReport {
    pub fn pass(&self) -> bool {
        self.radius_law.iter().all(|e| e.equal)
            && self.pullback_identity
            && self.roundtrip_isomorphic
    }
}

/// Check f_F(p r) = p f_E(r) on the grid, the pullback matrix identity
/// dB/dt + B G1 = p t^(p-1) H(t^p) B within tails, and the roundtrip:
/// the antecedent of phi^* F matches F.
pub fn verify_antecedent_radius(
    m: &DiffModule,
    ante: &Antecedent,
    grid: &[BigRational],
    n_max: usize,
) -> Result<AntecedentReport> {
    let p = m.prime().get();
    let pr = BigRational::from(BigInt::from(p as i64));
    let sampler_e = RadiusSampler::new(m, n_max)?;
    let sampler_f = RadiusSampler::new(&ante.module, n_max)?;
    let mut radius_law = Vec::with_capacity(grid.len());
    for r in grid {
        let fe = sampler_e.estimate(r);
        let ff = sampler_f.estimate(&(r * &pr));
        radius_law.push(RadiusLawEntry {
            r: ratio_string(r),
            f_antecedent_at_pr: ratio_string(&ff.f_hat),
            p_times_f: ratio_string(&(&fe.f_hat * &pr)),
            equal: ff.f_hat == &fe.f_hat * &pr,
        });
    }

    // pullback identity
    let pulled = ante.module.frobenius_pullback()?;
    let lhs = ante.basis.d_dt()?.add(&ante.basis.mul(m.g1())?)?;
    let rhs = pulled.g1().mul(&ante.basis)?;
    let pullback_identity = vanishes_within_tail(&lhs.sub(&rhs)?, &ante.r0, &ante.threshold);

    // roundtrip: Cor-1.9-style
    let roundtrip_isomorphic = match antecedent(&pulled, None) {
        Err(_) => false,
        Ok(again) => {
            let mut ok = true;
            if m.rank() == 1 {
                let d1 = residue_like(&ante.module);
                let d2 = residue_like(&again.module);
                ok &= match (d1, d2) {
                    (Some(a), Some(b)) => a.sub(&b).map(|d| d.is_zero()).unwrap_or(false),
                    (None, None) => true,
                    _ => false,
                };
            }
            let s_f = RadiusSampler::new(&again.module, n_max)?;
            for r in grid {
                let ru = r * &pr;
                ok &= s_f.estimate(&ru).f_hat == sampler_f.estimate(&ru).f_hat;
            }
            ok
        }
    };
    Ok(AntecedentReport {
        radius_law,
        pullback_identity,
        roundtrip_isomorphic,
    })
}

/// For rank-1 modules, the z-free coefficient of 1/u in G1 (the residue
/// that pins M_xi).
pub fn residue_like(m: &DiffModule) -> Option<Scalar> {
    if m.rank() != 1 {
        return None;
    }
    let coeffs = m.g1()[(0, 0)].t_coefficient(-1);
    Some(
        coeffs
            .into_iter()
            .find(|(nz, _)| *nz == 0)
            .map(|(_, c)| c)
            .unwrap_or_else(|| Scalar::zero(m.prime(), m.level())),
    )
}
