//! Small dense matrices over the Laurent ring and its fraction field.
//!
//! Ranks stay at desk scale (mu <= 3, flattened antecedent systems up to
//! p*mu columns), so Laplace determinants and fraction-field Gaussian
//! elimination are perfectly adequate.

use crate::error::{Error, Result};
use crate::laurent::LaurentElement;
use crate::padic::{LogValue, Prime, Scalar};
use num::rational::BigRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<LaurentElement>,
}

impl Mat {
    pub fn zero(prime: Prime, level: u32, rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![LaurentElement::zero(prime, level); rows * cols],
        }
    }

    pub fn identity(prime: Prime, level: u32, n: usize) -> Self {
        let mut m = Self::zero(prime, level, n, n);
        for i in 0..n {
            m[(i, i)] = LaurentElement::one(prime, level);
        }
        m
    }

    pub fn from_rows(rows_data: Vec<Vec<LaurentElement>>) -> Self {
        let rows = rows_data.len();
        let cols = rows_data.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows * cols);
        for r in rows_data {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r);
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[LaurentElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = &LaurentElement> {
        self.data.iter()
    }

    pub fn map<F>(&self, mut f: F) -> Result<Mat>
    where
        F: FnMut(&LaurentElement) -> Result<LaurentElement>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        for e in &self.data {
            data.push(f(e)?);
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut data = Vec::with_capacity(self.data.len());
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            data.push(a.add(b)?);
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.add(&other.map(|e| Ok(e.neg()))?)
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        assert_eq!(self.cols, other.rows);
        let prime = self.data[0].prime();
        let level = self.data[0].level().max(other.data[0].level());
        let mut out = Mat::zero(prime, level, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentElement::zero(prime, level);
                for k in 0..self.cols {
                    let a = &self[(i, k)];
                    let b = &other[(k, j)];
                    if a.is_zero() || b.is_zero() {
                        // keep window bookkeeping of the zero product
                        if !a.window().is_full() || !b.window().is_full() {
                            let p = a.mul(b)?;
                            acc = acc.add(&p)?;
                        }
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, q: &BigRational) -> Mat {
        let mut out = self.clone();
        for e in out.data.iter_mut() {
            *e = e.scale(q);
        }
        out
    }

    pub fn scale_scalar(&self, s: &Scalar) -> Result<Mat> {
        self.map(|e| e.scale_scalar(s))
    }

    pub fn d_dt(&self) -> Result<Mat> {
        self.map(|e| e.d_dt())
    }

    pub fn substitute_t_power(&self, k: u32) -> Result<Mat> {
        self.map(|e| e.substitute_t_power(k))
    }

    pub fn specialize_z(&self, a: &Scalar) -> Result<Mat> {
        self.map(|e| e.specialize_z(a))
    }

    pub fn twist_t(&self, u: &Scalar) -> Result<Mat> {
        self.map(|e| e.twist_t(u))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn has_z(&self) -> bool {
        self.data.iter().any(|e| e.has_z())
    }

    /// Min Gauss valuation over the entries (the valuation of the max
    /// norm); Infinite for the zero matrix.
    pub fn gauss_valuation(&self, r: &BigRational) -> LogValue {
        let mut best = LogValue::Infinite;
        for e in &self.data {
            best = best.min(e.gauss_valuation(r));
        }
        best
    }

    /// Laplace expansion; ranks are tiny.
    pub fn det(&self) -> Result<LaurentElement> {
        assert_eq!(self.rows, self.cols);
        let prime = self.data[0].prime();
        let level = self.data[0].level();
        match self.rows {
            0 => Ok(LaurentElement::one(prime, level)),
            1 => Ok(self[(0, 0)].clone()),
            n => {
                let mut acc = LaurentElement::zero(prime, level);
                for j in 0..n {
                    if self[(0, j)].is_zero() && self[(0, j)].window().is_full() {
                        continue;
                    }
                    let minor = self.minor(0, j);
                    let term = self[(0, j)].mul(&minor.det()?)?;
                    acc = if j % 2 == 0 {
                        acc.add(&term)?
                    } else {
                        acc.sub(&term)?
                    };
                }
                Ok(acc)
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> Mat {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            for j in 0..self.cols {
                if j == col {
                    continue;
                }
                data.push(self[(i, j)].clone());
            }
        }
        Mat {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data,
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = LaurentElement;

    fn index(&self, (i, j): (usize, usize)) -> &LaurentElement {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut LaurentElement {
        &mut self.data[i * self.cols + j]
    }
}

/// A formal fraction of Laurent elements. No gcd reduction beyond monomial
/// normalization; desk-scale solves never grow far.
#[derive(Clone, Debug)]
pub struct LaurentFraction {
    pub num: LaurentElement,
    pub den: LaurentElement,
}

impl LaurentFraction {
    pub fn from_element(e: LaurentElement) -> Self {
        let one = LaurentElement::one(e.prime(), e.level());
        LaurentFraction { num: e, den: one }
    }

    pub fn zero(prime: Prime, level: u32) -> Self {
        Self::from_element(LaurentElement::zero(prime, level))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let num = self
            .num
            .mul(&other.den)?
            .add(&other.num.mul(&self.den)?)?;
        let den = self.den.mul(&other.den)?;
        Ok(LaurentFraction { num, den })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LaurentFraction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Ok(LaurentFraction {
            num: self.num.mul(&other.num)?,
            den: self.den.mul(&other.den)?,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::ZeroElement);
        }
        Ok(LaurentFraction {
            num: self.num.mul(&other.den)?,
            den: self.den.mul(&other.num)?,
        })
    }

    /// Gauss valuation of the fraction: v(num) - v(den).
    pub fn gauss_valuation(&self, r: &BigRational) -> LogValue {
        let vn = self.num.gauss_valuation(r);
        let vd = self.den.gauss_valuation(r);
        match (vn, vd) {
            (LogValue::Finite(a), LogValue::Finite(b)) => LogValue::Finite(a - b),
            (LogValue::Infinite, _) => LogValue::Infinite,
            (_, LogValue::Infinite) => LogValue::Infinite,
        }
    }
}

/// Solve A x = b over the Laurent fraction field by Gaussian elimination.
/// Returns None when A is singular (as far as the stored terms can tell).
pub fn solve_fraction_system(
    a: &[Vec<LaurentFraction>],
    b: &[LaurentFraction],
) -> Result<Option<Vec<LaurentFraction>>> {
    let n = a.len();
    if n == 0 {
        return Ok(Some(Vec::new()));
    }
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<LaurentFraction>> = a.to_vec();
    let mut rhs: Vec<LaurentFraction> = b.to_vec();
    for col in 0..n {
        let pivot = match (col..n).find(|&i| !m[i][col].is_zero()) {
            Some(i) => i,
            None => return Ok(None),
        };
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = LaurentFraction {
            num: m[col][col].den.clone(),
            den: m[col][col].num.clone(),
        };
        for j in col..n {
            m[col][j] = m[col][j].mul(&inv)?;
        }
        rhs[col] = rhs[col].mul(&inv)?;
        for i in 0..n {
            if i == col || m[i][col].is_zero() {
                continue;
            }
            let factor = m[i][col].clone();
            for j in col..n {
                let t = factor.mul(&m[col][j])?;
                m[i][j] = m[i][j].sub(&t)?;
            }
            let t = factor.mul(&rhs[col])?;
            rhs[i] = rhs[i].sub(&t)?;
        }
    }
    Ok(Some(rhs))
}
