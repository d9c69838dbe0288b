//! Two-variable relative modules on disk x annulus: specialization at
//! lifted points, unit factorization certificates, and the fiberwise
//! agreement experiment.
//!
//! The coefficient disk is modeled by the polynomial variable z with the
//! sup-norm valuation (min over z-coefficients); the generic fiber sees
//! exactly that valuation. A specialization point is an integer lift a,
//! and distinct integers index distinct closed points of the divisor.
//!
//! The unit factorization of a nonzero element a = sum a_n(z) t^n finds
//! the dominant degree n0, the z-polynomial a_{n0} whose residue-zero
//! locus must be avoided, and a closed subinterval I' on which
//! |a_n| rho^n < |a_{n0}| rho^{n0} strictly for every other stored term;
//! off the locus the element is a unit with |a(u)|_rho = |a|_rho. The
//! experiment gathers these loci from the derivative powers (and, when
//! exponents are requested, from the chosen determinant chain) and checks
//! that every specialization that disagrees with the generic verdict is
//! inside a gathered locus.

use crate::error::{Error, Result};
use crate::exponent::{
    default_resolvent_n, exponent_digits_from_resolvent, level_kernels, resolvent,
    s_matrix_from_kernels, ExponentCandidate,
};
use crate::laurent::{LaurentElement, RInterval};
use crate::module::{derive_powers, DiffModule};
use crate::padic::{ratio_string, LogValue, Scalar};
use crate::profile::{classify, default_grid, grid_in, sample_profile, BreakVerdict};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;
use serde::Serialize;

/// A module over the relative ring: same data as an absolute module,
/// with z-dependence allowed in the connection matrix.
#[derive(Clone, Debug)]
pub struct RelModule(pub DiffModule);

/// Teichmueller-style lift of a closed point of the coefficient disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpecPoint(pub i64);

impl RelModule {
    pub fn new(m: DiffModule) -> Self {
        RelModule(m)
    }

    pub fn module(&self) -> &DiffModule {
        &self.0
    }

    /// Substitute z = a in every entry.
    pub fn specialize(&self, pt: SpecPoint) -> Result<DiffModule> {
        let a = Scalar::from_int(self.0.prime(), self.0.level(), pt.0);
        let g1 = self.0.g1().specialize_z(&a)?;
        DiffModule::new(g1, self.0.interval().clone(), self.0.prime(), self.0.level())
    }

    /// The generic-fiber valuation of the connection matrix at log-radius
    /// r: the Gauss valuation with z-coefficients measured by their
    /// sup-norm minima.
    pub fn generic_fiber_valuation(&self, r: &BigRational) -> LogValue {
        self.0.g1().gauss_valuation(r)
    }
}

/// Certificate produced by the unit factorization.
#[derive(Clone, Debug)]
pub struct UnitCertificate {
    /// Dominant t-degree.
    pub n0: i64,
    /// The z-polynomial a_{n0} as (nz, coefficient) pairs; specializations
    /// whose valuation exceeds the generic one are excluded.
    pub locus: Vec<(u32, Scalar)>,
    /// Closed subinterval on which the dominance inequalities hold.
    pub shrunk: RInterval,
}

impl UnitCertificate {
    /// Generic valuation of the dominant coefficient.
    pub fn locus_valuation(&self) -> LogValue {
        self.locus
            .iter()
            .map(|(_, c)| c.valuation())
            .min()
            .unwrap_or(LogValue::Infinite)
    }

    /// Evaluate the locus polynomial at z = a.
    fn locus_at(&self, a: i64, prime: crate::padic::Prime, level: u32) -> Result<Scalar> {
        let av = Scalar::from_int(prime, level, a);
        let mut acc = Scalar::zero(prime, level);
        for (nz, c) in &self.locus {
            acc = acc.add(&c.mul(&av.pow(*nz as u64)?)?)?;
        }
        Ok(acc)
    }

    /// True when the specialization at a drops the norm of the dominant
    /// coefficient, i.e. the point sits inside the excluded locus.
    pub fn excludes(&self, pt: SpecPoint, prime: crate::padic::Prime, level: u32) -> Result<bool> {
        let generic = self.locus_valuation();
        let at = self.locus_at(pt.0, prime, level)?.valuation();
        Ok(at > generic)
    }

    /// True when the locus polynomial actually depends on z; constant
    /// coefficients can never exclude a point.
    pub fn has_z(&self) -> bool {
        self.locus.iter().any(|(nz, _)| *nz > 0)
    }
}

/// Unit factorization of a nonzero element over the interval, following
/// the endpoint-dominance case split: collect the degrees attaining the
/// norm at the small-radius end (A, degrees <= 0) or the large-radius end
/// (B, degrees >= 0); take n0 = max A if A is nonempty, else min B; then
/// shrink to a closed subinterval where strict dominance holds for all
/// stored terms.
pub fn unit_factor(a: &LaurentElement, interval: &RInterval) -> Result<UnitCertificate> {
    if a.is_zero() {
        return Err(Error::ZeroElement);
    }
    // t-degree -> coefficient valuation (min over z-coefficients)
    let mut lines: Vec<(i64, BigRational)> = Vec::new();
    {
        use std::collections::BTreeMap;
        let mut map: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (&(nt, _), c) in a.terms() {
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
        lines.extend(map);
    }
    let r_lo = interval.lo();
    let r_hi = interval.hi();
    let eval = |n: i64, v: &BigRational, r: &BigRational| v + BigRational::from(BigInt::from(n)) * r;
    let mut v_min: Option<BigRational> = None;
    for (n, v) in &lines {
        for r in [r_lo, r_hi] {
            let val = eval(*n, v, r);
            v_min = Some(match v_min {
                None => val,
                Some(m) => m.min(val),
            });
        }
    }
    let v_min = v_min.expect("nonzero element");
    let set_a: Vec<i64> = lines
        .iter()
        .filter(|(n, v)| *n <= 0 && eval(*n, v, r_hi) == v_min)
        .map(|(n, _)| *n)
        .collect();
    let set_b: Vec<i64> = lines
        .iter()
        .filter(|(n, v)| *n >= 0 && eval(*n, v, r_lo) == v_min)
        .map(|(n, _)| *n)
        .collect();
    let n0 = if let Some(&max_a) = set_a.iter().max() {
        max_a
    } else {
        *set_b.iter().min().ok_or(Error::ZeroElement)?
    };
    let w = a.window();
    if w.lo == Some(n0) || w.hi == Some(n0) {
        return Err(Error::DominantAtEdge(n0));
    }
    let v_n0 = lines
        .iter()
        .find(|(n, _)| *n == n0)
        .map(|(_, v)| v.clone())
        .expect("n0 is a stored degree");

    // strict dominance region: for every other degree, v_n + n r > v_{n0} + n0 r
    let mut flo = r_lo.clone();
    let mut fhi = r_hi.clone();
    let mut lo_strict = false;
    let mut hi_strict = false;
    for (n, v) in &lines {
        if *n == n0 {
            continue;
        }
        let slope = BigRational::from(BigInt::from(n - n0));
        let offset = v - &v_n0;
        // need offset + slope*r > 0
        let root = -&offset / &slope;
        if slope > BigRational::zero() {
            if root >= flo {
                flo = root;
                lo_strict = true;
            }
        } else if root <= fhi {
            fhi = root;
            hi_strict = true;
        }
    }
    if flo > fhi || (flo == fhi && (lo_strict || hi_strict)) {
        return Err(Error::BadInterval(ratio_string(&flo), ratio_string(&fhi)));
    }
    let quarter = (&fhi - &flo) / BigRational::from(BigInt::from(4));
    let i_lo = if lo_strict { &flo + &quarter } else { flo };
    let i_hi = if hi_strict { &fhi - &quarter } else { fhi };
    let shrunk = RInterval::new(i_lo, i_hi)?;
    let locus = a.t_coefficient(n0);
    Ok(UnitCertificate { n0, locus, shrunk })
}

#[derive(Clone, Debug, Serialize)]
pub struct PointVerdict {
    pub a: i64,
    pub break_verdict: BreakVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentCandidate>,
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutReport {
    pub generic_break: BreakVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generic_exponent: Option<ExponentCandidate>,
    pub points: Vec<PointVerdict>,
    pub exceptions: Vec<i64>,
    /// Display forms of the gathered locus polynomials.
    pub loci: Vec<String>,
    /// Whether every exception lies inside a gathered locus.
    pub contained: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub struct CutParams {
    pub n_radius: Option<usize>,
    pub sigma: Option<Vec<BigRational>>,
    pub h_max: u32,
    pub r0: Option<BigRational>,
    pub n_resolvent: Option<usize>,
}

impl CutParams {
    pub fn breaks_only() -> Self {
        CutParams {
            n_radius: None,
            sigma: None,
            h_max: 2,
            r0: None,
            n_resolvent: None,
        }
    }
}

fn verdicts_match(a: &BreakVerdict, b: &BreakVerdict) -> bool {
    match (a, b) {
        (BreakVerdict::Solvable { b: x }, BreakVerdict::Solvable { b: y }) => x == y,
        (BreakVerdict::NotSolvable { q: x }, BreakVerdict::NotSolvable { q: y }) => x == y,
        _ => false,
    }
}

/// Run the specialization experiment: compute the generic verdict (break
/// and optionally exponent through the generic-fiber valuation), the
/// per-point verdicts, the exception set, and containment of exceptions
/// in the union of the gathered excluded loci.
pub fn cut_experiment(
    e: &RelModule,
    points: &[SpecPoint],
    params: &CutParams,
) -> Result<CutReport> {
    // pairwise distinct integer lifts index pairwise distinct points
    for (i, p) in points.iter().enumerate() {
        for q in points.iter().skip(i + 1) {
            if p.0 == q.0 {
                return Err(Error::BadDescription(format!(
                    "specialization points must be pairwise distinct, {} repeats",
                    p.0
                )));
            }
        }
    }
    let m = e.module();
    let n_rad = params.n_radius.unwrap_or_else(|| m.default_n());
    let grid = grid_in(m.interval(), &default_grid());
    if grid.len() < 3 {
        return Err(Error::BadDescription(
            "module interval meets fewer than 3 default grid points".into(),
        ));
    }
    let mut notes = Vec::new();

    let generic_profile = sample_profile(m, &grid, n_rad)?;
    let generic_break = classify(&generic_profile);
    let r0 = params.r0.clone().unwrap_or_else(|| m.interval().midpoint());

    // loci from the derivative powers
    let powers = derive_powers(m, n_rad)?;
    let mut loci: Vec<UnitCertificate> = Vec::new();
    let r_mid = m.interval().midpoint();
    for n in 1..=n_rad {
        let g = powers.g(n);
        // entry attaining the generic norm at the midpoint
        let mut best: Option<(&LaurentElement, BigRational)> = None;
        for entry in g.entries() {
            if let LogValue::Finite(v) = entry.gauss_valuation(&r_mid) {
                match &best {
                    Some((_, bv)) if *bv <= v => {}
                    _ => best = Some((entry, v)),
                }
            }
        }
        if let Some((entry, _)) = best {
            match unit_factor(entry, m.interval()) {
                Ok(cert) => {
                    if cert.has_z() {
                        loci.push(cert);
                    }
                }
                Err(err) => notes.push(format!("unit factorization skipped at n={n}: {err}")),
            }
        }
    }

    // generic exponent when requested and the generic break is 0
    let mut generic_exponent = None;
    if params.sigma.is_some() {
        if generic_break.is_solvable_with_break_zero() {
            let n_res = params
                .n_resolvent
                .unwrap_or_else(|| default_resolvent_n(m.prime(), params.h_max));
            let res = resolvent(m, n_res, &grid, n_rad)?;
            let cand = exponent_digits_from_resolvent(m, &res, &r0, params.h_max)?;
            // loci from the chosen determinant chain
            for h in 1..=params.h_max {
                let kernels = level_kernels(&res, h)?;
                let ph = m.prime().pow_big(h);
                let delta_h: Vec<BigInt> = cand
                    .delta_big()
                    .iter()
                    .map(|d| d % &ph)
                    .collect();
                let s = s_matrix_from_kernels(&res, &kernels, &delta_h, &r0)?;
                let det = s.matrix.det()?;
                if !det.is_zero() {
                    match unit_factor(&det, m.interval()) {
                        Ok(cert) => {
                            if cert.has_z() {
                                loci.push(cert);
                            }
                        }
                        Err(err) => {
                            notes.push(format!("determinant chain factorization at h={h}: {err}"))
                        }
                    }
                }
            }
            generic_exponent = Some(cand);
        } else {
            notes.push(
                "exponents requested but the generic break is not 0; skipping exponents".into(),
            );
        }
    }

    // per-point verdicts
    let mut verdicts = Vec::with_capacity(points.len());
    let mut exceptions = Vec::new();
    for &pt in points {
        let fiber = e.specialize(pt)?;
        let profile = sample_profile(&fiber, &grid, n_rad)?;
        let break_verdict = classify(&profile);
        let mut agrees = verdicts_match(&break_verdict, &generic_break);
        let mut exponent = None;
        if let Some(gen_exp) = &generic_exponent {
            if break_verdict.is_solvable_with_break_zero() {
                let n_res = params
                    .n_resolvent
                    .unwrap_or_else(|| default_resolvent_n(m.prime(), params.h_max));
                let res = resolvent(&fiber, n_res, &grid, n_rad)?;
                let cand = exponent_digits_from_resolvent(&fiber, &res, &r0, params.h_max)?;
                agrees &= cand.delta == gen_exp.delta;
                exponent = Some(cand);
            } else {
                agrees = false;
            }
        }
        if !agrees {
            exceptions.push(pt.0);
        }
        verdicts.push(PointVerdict {
            a: pt.0,
            break_verdict,
            exponent,
            agrees,
        });
    }

    // containment of the exceptions in the union of gathered loci
    let mut contained = true;
    for &a in &exceptions {
        let mut inside = false;
        for cert in &loci {
            if cert.excludes(SpecPoint(a), m.prime(), m.level())? {
                inside = true;
                break;
            }
        }
        contained &= inside;
    }

    let loci_display: Vec<String> = {
        let mut seen = std::collections::BTreeSet::new();
        for cert in &loci {
            seen.insert(locus_display(&cert.locus));
        }
        seen.into_iter().collect()
    };

    Ok(CutReport {
        generic_break,
        generic_exponent,
        points: verdicts,
        exceptions,
        loci: loci_display,
        contained,
        notes,
    })
}

/// Canonical display of a locus polynomial: scalar unit factors are
/// stripped (they do not move the zero set) and a bare monomial c*z^k
/// reduces to "z", which has the same excluded points.
fn locus_display(locus: &[(u32, Scalar)]) -> String {
    let nonzero: Vec<&(u32, Scalar)> = locus.iter().filter(|(_, c)| !c.is_zero()).collect();
    if nonzero.len() == 1 && nonzero[0].0 > 0 {
        return "z".into();
    }
    // normalize by the lowest-degree coefficient
    let lead = nonzero.first().map(|(_, c)| c.clone());
    let parts: Vec<String> = nonzero
        .iter()
        .map(|(nz, c)| {
            let c = match lead.as_ref().and_then(|l| l.inverse()) {
                Some(inv) => c.mul(&inv).unwrap_or_else(|_| c.clone()),
                None => c.clone(),
            };
            if *nz == 0 {
                format!("{c}")
            } else if *nz == 1 {
                format!("({c})*z")
            } else {
                format!("({c})*z^{nz}")
            }
        })
        .collect();
    parts.join(" + ")
}

/// Termwise specialization monotonicity: v(G_n(a)) >= v(G_n) for every
/// n <= N at the given radius (the inequality that drives the generic
/// comparison argument).
pub fn specialization_monotone(
    e: &RelModule,
    pt: SpecPoint,
    r: &BigRational,
    n_max: usize,
) -> Result<bool> {
    let m = e.module();
    let powers = derive_powers(m, n_max)?;
    let a = Scalar::from_int(m.prime(), m.level(), pt.0);
    for n in 1..=n_max {
        let generic = powers.g(n).gauss_valuation(r);
        let special = powers.g(n).specialize_z(&a)?.gauss_valuation(r);
        if special < generic {
            return Ok(false);
        }
    }
    Ok(true)
}
