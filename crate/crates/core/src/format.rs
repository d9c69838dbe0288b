//! The module-description file format and the named example corpus.
//!
//! Everything is JSON with rationals as "num/den" strings so that
//! exactness survives serialization. Emission is canonical: terms sorted
//! by (nt, nz), rationals reduced, cyclotomic coefficients tagged with
//! their level; emit -> parse -> emit is byte-identical.

use crate::error::{Error, Result};
use crate::laurent::{LaurentElement, RInterval};
use crate::matrix::Mat;
use crate::module::DiffModule;
use crate::padic::{parse_ratio, ratio_i64, ratio_string, Prime, Scalar};
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Serde adapter: rationals as "num/den" strings.
pub mod ratio_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&ratio_string(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map_err(serde::de::Error::custom)
    }
}

/// A coefficient: plain rational string, or a level-tagged coefficient
/// array over the power basis of Q(zeta_{p^level}).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffRepr {
    Rational(String),
    Cyclotomic { level: u32, coeffs: Vec<String> },
}

impl CoeffRepr {
    pub fn from_scalar(s: &Scalar) -> Self {
        if let Some(q) = s.as_ratio() {
            CoeffRepr::Rational(ratio_string(q))
        } else {
            CoeffRepr::Cyclotomic {
                level: s.level(),
                coeffs: s.coeffs().iter().map(ratio_string).collect(),
            }
        }
    }

    pub fn to_scalar(&self, prime: Prime) -> Result<Scalar> {
        match self {
            CoeffRepr::Rational(s) => Ok(Scalar::from_ratio(prime, 0, parse_ratio(s)?)),
            CoeffRepr::Cyclotomic { level, coeffs } => {
                let phi = prime.phi(*level);
                if coeffs.len() > phi {
                    return Err(Error::BadDescription(format!(
                        "coefficient array of length {} exceeds phi(p^{level}) = {phi}",
                        coeffs.len()
                    )));
                }
                let mut acc = Scalar::zero(prime, *level);
                for (i, c) in coeffs.iter().enumerate() {
                    let q = parse_ratio(c)?;
                    if q.is_zero() {
                        continue;
                    }
                    let zi = Scalar::zeta_pow(prime, *level, i as i64)?;
                    acc = acc.add(&zi.scale(&q))?;
                }
                Ok(acc)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRepr {
    pub nt: i64,
    pub nz: u32,
    pub coeff: CoeffRepr,
}

/// Term lists for an arbitrary matrix over the Laurent ring (used for
/// antecedent bases alongside module descriptions).
pub fn matrix_terms(m: &Mat) -> Vec<Vec<Vec<TermRepr>>> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    m[(i, j)]
                        .terms()
                        .map(|(&(nt, nz), c)| TermRepr {
                            nt,
                            nz,
                            coeff: CoeffRepr::from_scalar(c),
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// The on-disk description of a module.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleDescription {
    pub p: u32,
    pub level: u32,
    pub rank: usize,
    pub vars: Vec<String>,
    pub r_interval: [String; 2],
    pub matrix: Vec<Vec<Vec<TermRepr>>>,
}

impl ModuleDescription {
    pub fn has_z_var(&self) -> bool {
        self.vars.iter().any(|v| v == "z")
    }

    pub fn to_module(&self) -> Result<DiffModule> {
        let prime = Prime::new(self.p)?;
        if self.vars.is_empty() || self.vars[0] != "t" || self.vars.len() > 2 {
            return Err(Error::BadDescription(format!(
                "vars must be [\"t\"] or [\"t\",\"z\"], got {:?}",
                self.vars
            )));
        }
        if self.vars.len() == 2 && self.vars[1] != "z" {
            return Err(Error::BadDescription(format!(
                "second variable must be \"z\", got {:?}",
                self.vars[1]
            )));
        }
        let allow_z = self.has_z_var();
        if self.matrix.len() != self.rank
            || self.matrix.iter().any(|row| row.len() != self.rank)
        {
            return Err(Error::BadDescription(format!(
                "matrix must be {0}x{0}",
                self.rank
            )));
        }
        let lo = parse_ratio(&self.r_interval[0])?;
        let hi = parse_ratio(&self.r_interval[1])?;
        let interval = RInterval::new(lo, hi)?;
        let mut rows = Vec::with_capacity(self.rank);
        for (i, row) in self.matrix.iter().enumerate() {
            let mut entries = Vec::with_capacity(self.rank);
            for (j, terms) in row.iter().enumerate() {
                let mut e = LaurentElement::zero(prime, self.level);
                for t in terms {
                    if t.nz > 0 && !allow_z {
                        return Err(Error::BadDescription(format!(
                            "entry ({i},{j}) uses z but vars = [\"t\"]"
                        )));
                    }
                    let c = t.coeff.to_scalar(prime)?;
                    if c.level() > self.level {
                        return Err(Error::BadDescription(format!(
                            "entry ({i},{j}) has a level-{} coefficient above the declared level {}",
                            c.level(),
                            self.level
                        )));
                    }
                    e = e.add(&LaurentElement::monomial(prime, self.level, t.nt, t.nz, c)?)?;
                }
                entries.push(e);
            }
            rows.push(entries);
        }
        DiffModule::new(Mat::from_rows(rows), interval, prime, self.level)
    }

    pub fn from_module(m: &DiffModule) -> Self {
        let rank = m.rank();
        let has_z = m.has_z();
        let mut matrix = Vec::with_capacity(rank);
        for i in 0..rank {
            let mut row = Vec::with_capacity(rank);
            for j in 0..rank {
                let e = &m.g1()[(i, j)];
                let terms: Vec<TermRepr> = e
                    .terms()
                    .map(|(&(nt, nz), c)| TermRepr {
                        nt,
                        nz,
                        coeff: CoeffRepr::from_scalar(c),
                    })
                    .collect();
                row.push(terms);
            }
            matrix.push(row);
        }
        ModuleDescription {
            p: m.prime().get(),
            level: m.level(),
            rank,
            vars: if has_z {
                vec!["t".into(), "z".into()]
            } else {
                vec!["t".into()]
            },
            r_interval: [
                ratio_string(m.interval().lo()),
                ratio_string(m.interval().hi()),
            ],
            matrix,
        }
    }

    /// Canonical pretty JSON plus a trailing newline.
    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn load_module(path: &Path) -> Result<(DiffModule, ModuleDescription)> {
    let text = std::fs::read_to_string(path)?;
    let desc = ModuleDescription::parse(&text)?;
    let module = desc.to_module()?;
    Ok((module, desc))
}

pub fn save_module(path: &Path, m: &DiffModule) -> Result<()> {
    let desc = ModuleDescription::from_module(m);
    std::fs::write(path, desc.emit())?;
    Ok(())
}

/// Default r-interval for the corpus: r in [1/64, 1/2].
pub fn corpus_interval() -> RInterval {
    RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap()
}

/// Names of the bundled examples.
pub const CORPUS_NAMES: &[&str] = &[
    "m_zero",
    "m_half",
    "m_two",
    "m_third",
    "dwork",
    "log_nilpotent",
    "rel_dwork",
    "rel_const_exponent",
];

/// Build a named corpus module. `m_xi` additionally takes the twist
/// parameter.
pub fn corpus_module(name: &str, xi: Option<&BigRational>) -> Result<DiffModule> {
    let prime = Prime::new(3)?;
    let interval = corpus_interval();
    let zeta_m1 = || -> Result<Scalar> {
        let z = Scalar::zeta(prime, 1)?;
        z.sub(&Scalar::one(prime, 1))
    };
    match name {
        "m_xi" => {
            let xi = xi.ok_or_else(|| {
                Error::BadDescription("corpus m_xi needs --xi <rational>".into())
            })?;
            DiffModule::m_xi(prime, xi, interval)
        }
        "m_zero" => DiffModule::m_xi(prime, &ratio_i64(0, 1), interval),
        "m_half" => DiffModule::m_xi(prime, &ratio_i64(1, 2), interval),
        "m_two" => DiffModule::m_xi(prime, &ratio_i64(2, 1), interval),
        "m_third" => DiffModule::m_xi(prime, &ratio_i64(1, 3), interval),
        "dwork" => {
            let g = LaurentElement::monomial(prime, 1, -2, 0, zeta_m1()?)?;
            Ok(DiffModule::rank1_twist(g, interval))
        }
        "log_nilpotent" => {
            let z = LaurentElement::zero(prime, 0);
            let e = LaurentElement::monomial(prime, 0, -1, 0, Scalar::one(prime, 0))?;
            let g1 = Mat::from_rows(vec![vec![z.clone(), e], vec![z.clone(), z]]);
            DiffModule::new(g1, interval, prime, 0)
        }
        "rel_dwork" => {
            let g = LaurentElement::monomial(prime, 1, -2, 1, zeta_m1()?)?;
            Ok(DiffModule::rank1_twist(g, interval))
        }
        "rel_const_exponent" => {
            let a = LaurentElement::monomial(
                prime,
                0,
                -1,
                0,
                Scalar::from_ratio(prime, 0, ratio_i64(1, 2)),
            )?;
            let b = LaurentElement::monomial(prime, 0, 1, 1, Scalar::from_int(prime, 0, 3))?;
            Ok(DiffModule::rank1_twist(a.add(&b)?, interval))
        }
        other => Err(Error::BadDescription(format!(
            "unknown corpus name {other:?}; known: {}",
            CORPUS_NAMES.join(", ")
        ))),
    }
}
