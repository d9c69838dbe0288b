//! Radius profiles: the sampled function r -> f(r), its final affine
//! piece, solvability classification and the highest ramification break.
//!
//! Classification follows the convexity picture: f is continuous,
//! piecewise affine and convex with slopes in Z/(mu!), f(r) >= r, and the
//! module is solvable with break b exactly when the final piece towards
//! r -> 0+ is (b+1)r. All fits are exact rational interpolations; a
//! mismatch is structural, never noise.

use crate::error::{Error, Result};
use crate::laurent::RInterval;
use crate::module::{DiffModule, RadiusSampler};
use crate::padic::{ratio_i64, ratio_string};
use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// One sampled point of the profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSample {
    pub r: BigRational,
    pub f_hat: BigRational,
    pub stabilized: bool,
}

/// Samples sorted by r descending (toward r = 0 at the end), plus the
/// exact affine piece fitted through the two smallest stabilized samples.
#[derive(Clone, Debug)]
pub struct RadiusProfile {
    pub samples: Vec<ProfileSample>,
    pub rank: usize,
    /// (slope, intercept) of the fitted final piece, when two stabilized
    /// samples exist.
    pub fitted: Option<(BigRational, BigRational)>,
}

/// Default sampling grid r = 2^-k, k = 1..=6.
pub fn default_grid() -> Vec<BigRational> {
    (1..=6).map(|k| ratio_i64(1, 1 << k)).collect()
}

pub fn sample_profile(
    m: &DiffModule,
    grid: &[BigRational],
    n_max: usize,
) -> Result<RadiusProfile> {
    if grid.len() < 3 {
        return Err(Error::BadDescription(
            "profile sampling needs at least 3 grid points".into(),
        ));
    }
    for r in grid {
        if !m.interval().contains(r) {
            return Err(Error::RadiusOutsideInterval(ratio_string(r)));
        }
    }
    let sampler = RadiusSampler::new(m, n_max)?;
    let mut samples: Vec<ProfileSample> = grid
        .iter()
        .map(|r| {
            let est = sampler.estimate(r);
            ProfileSample {
                r: r.clone(),
                f_hat: est.f_hat,
                stabilized: est.stabilized,
            }
        })
        .collect();
    samples.sort_by(|a, b| b.r.cmp(&a.r));
    samples.dedup_by(|a, b| a.r == b.r);
    let fitted = fit_final_piece(&samples);
    Ok(RadiusProfile {
        samples,
        rank: m.rank(),
        fitted,
    })
}

/// Exact line through the two smallest stabilized r-samples.
fn fit_final_piece(samples: &[ProfileSample]) -> Option<(BigRational, BigRational)> {
    let stab: Vec<&ProfileSample> = samples.iter().filter(|s| s.stabilized).collect();
    if stab.len() < 2 {
        return None;
    }
    let a = stab[stab.len() - 1]; // smallest r
    let b = stab[stab.len() - 2];
    let slope = (&b.f_hat - &a.f_hat) / (&b.r - &a.r);
    let intercept = &a.f_hat - &slope * &a.r;
    Some((slope, intercept))
}

/// Solvability verdict for the final piece of the profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BreakVerdict {
    /// f(r) = (b+1) r near 0: highest ramification break b >= 0.
    Solvable {
        #[serde(with = "crate::format::ratio_serde")]
        b: BigRational,
    },
    /// The final piece has intercept q > 0: limsup R < 1.
    NotSolvable {
        #[serde(with = "crate::format::ratio_serde")]
        q: BigRational,
    },
    Inconclusive { reason: String },
}

impl BreakVerdict {
    pub fn is_solvable_with_break_zero(&self) -> bool {
        matches!(self, BreakVerdict::Solvable { b } if b.is_zero())
    }
}

/// Classify the profile: Solvable{b} iff the fitted final piece is
/// (b+1)r with b >= 0, NotSolvable{q} iff its intercept q is positive,
/// Inconclusive when stabilization failed or the third-smallest
/// stabilized sample disagrees with the fit.
pub fn classify(profile: &RadiusProfile) -> BreakVerdict {
    let stab: Vec<&ProfileSample> = profile.samples.iter().filter(|s| s.stabilized).collect();
    if stab.len() < 3 {
        return BreakVerdict::Inconclusive {
            reason: format!(
                "need at least 3 stabilized samples, have {}",
                stab.len()
            ),
        };
    }
    let (slope, intercept) = match &profile.fitted {
        Some(fit) => fit.clone(),
        None => {
            return BreakVerdict::Inconclusive {
                reason: "no fitted final piece".into(),
            }
        }
    };
    // the third smallest stabilized sample must sit on the same line
    let third = stab[stab.len() - 3];
    let predicted = &slope * &third.r + &intercept;
    if predicted != third.f_hat {
        return BreakVerdict::Inconclusive {
            reason: format!(
                "third sample off the fitted piece: f({}) = {} but the piece gives {}",
                ratio_string(&third.r),
                ratio_string(&third.f_hat),
                ratio_string(&predicted)
            ),
        };
    }
    let one = BigRational::one();
    if intercept.is_zero() && slope >= one {
        BreakVerdict::Solvable {
            b: slope - BigRational::one(),
        }
    } else if intercept.is_positive() {
        BreakVerdict::NotSolvable { q: intercept }
    } else {
        BreakVerdict::Inconclusive {
            reason: format!(
                "fitted piece f = {}*r + {} is incompatible with f >= r",
                ratio_string(&slope),
                ratio_string(&intercept)
            ),
        }
    }
}

/// One reported defect of a profile's shape.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeViolation {
    pub at_r: String,
    pub what: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    pub convex: bool,
    pub above_diagonal: bool,
    pub slopes_quantized: bool,
    pub violations: Vec<ShapeViolation>,
}

impl ShapeReport {
    pub fn pass(&self) -> bool {
        self.convex && self.above_diagonal && self.slopes_quantized
    }
}

/// Verify the unconditional shape facts on the sampled points: convexity
/// in r, f(r) >= r, and chord slopes in Z/(mu!). A single chord whose
/// slope lies strictly between its neighbours is exempt from the
/// quantization check: it may straddle a kink of the true profile, where
/// the chord slope is a proper mixture of the two adjacent slopes.
pub fn check_shape(profile: &RadiusProfile) -> ShapeReport {
    let mut report = ShapeReport {
        convex: true,
        above_diagonal: true,
        slopes_quantized: true,
        violations: Vec::new(),
    };
    // ascending in r for the convexity bookkeeping
    let mut pts: Vec<&ProfileSample> = profile.samples.iter().collect();
    pts.sort_by(|a, b| a.r.cmp(&b.r));
    for s in &pts {
        if s.f_hat < s.r {
            report.above_diagonal = false;
            report.violations.push(ShapeViolation {
                at_r: ratio_string(&s.r),
                what: format!(
                    "f = {} dips below the diagonal",
                    ratio_string(&s.f_hat)
                ),
            });
        }
    }
    if pts.len() < 2 {
        return report;
    }
    let slopes: Vec<BigRational> = pts
        .windows(2)
        .map(|w| (&w[1].f_hat - &w[0].f_hat) / (&w[1].r - &w[0].r))
        .collect();
    for (i, w) in slopes.windows(2).enumerate() {
        if w[0] > w[1] {
            report.convex = false;
            report.violations.push(ShapeViolation {
                at_r: ratio_string(&pts[i + 1].r),
                what: format!(
                    "slope falls from {} to {} with increasing r",
                    ratio_string(&w[0]),
                    ratio_string(&w[1])
                ),
            });
        }
    }
    let mu_fact: BigInt = (1..=profile.rank as u64).product::<u64>().into();
    let quantized =
        |s: &BigRational| (s * BigRational::from(mu_fact.clone())).denom().is_one();
    for (i, s) in slopes.iter().enumerate() {
        if quantized(s) {
            continue;
        }
        let left = i.checked_sub(1).map(|j| &slopes[j]);
        let right = slopes.get(i + 1);
        let kink_chord = match (left, right) {
            (Some(l), Some(rr)) => l < s && s < rr,
            // boundary chords cannot be attributed either way; only flag
            // them when a neighbour pins them to an affine run
            (Some(l), None) => l < s,
            (None, Some(rr)) => s < rr,
            (None, None) => false,
        };
        if !kink_chord {
            report.slopes_quantized = false;
            report.violations.push(ShapeViolation {
                at_r: ratio_string(&pts[i].r),
                what: format!(
                    "chord slope {} is not in Z/({}!)",
                    ratio_string(s),
                    profile.rank
                ),
            });
        }
    }
    report
}

/// Convenience: sample with default parameters and classify.
pub fn break_verdict(m: &DiffModule, n_max: Option<usize>) -> Result<BreakVerdict> {
    let n = n_max.unwrap_or_else(|| m.default_n());
    let grid: Vec<BigRational> = default_grid()
        .into_iter()
        .filter(|r| m.interval().contains(r))
        .collect();
    if grid.len() < 3 {
        return Err(Error::BadDescription(format!(
            "module interval {} meets fewer than 3 default grid points",
            m.interval()
        )));
    }
    let profile = sample_profile(m, &grid, n)?;
    Ok(classify(&profile))
}

/// Check that f(r) = r exactly at every sampled point of the given grid
/// (the Robba condition on the sampled subinterval).
pub fn robba_on_grid(m: &DiffModule, grid: &[BigRational], n_max: usize) -> Result<bool> {
    let profile = sample_profile(m, grid, n_max)?;
    Ok(profile
        .samples
        .iter()
        .all(|s| s.stabilized && s.f_hat == s.r))
}

/// CSV emission: header plus one row per sample.
pub fn profile_csv(profile: &RadiusProfile) -> String {
    let mut out = String::from("r,f_hat,stabilized\n");
    for s in &profile.samples {
        out.push_str(&format!(
            "{},{},{}\n",
            ratio_string(&s.r),
            ratio_string(&s.f_hat),
            s.stabilized
        ));
    }
    out
}

/// Restrict a grid to an interval.
pub fn grid_in(interval: &RInterval, grid: &[BigRational]) -> Vec<BigRational> {
    grid.iter()
        .filter(|r| interval.contains(r))
        .cloned()
        .collect()
}
