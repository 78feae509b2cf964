//! Exact-integer lattice bases: Gram–Schmidt data, LLL and BKZ reduction,
//! and the scalar diagnostics used by the attack.
//!
//! Everything here is exact. Reduction runs on the integral Gram–Schmidt
//! representation (`D_i`, `lambda_{i,j}`) so no rational ever needs
//! normalising; [`GsoData`] exposes the same information as rationals.

mod bkz;
mod diag;
mod gso;
mod lll;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

pub use bkz::{bkz_reduce, bkz_reduce_with, BkzStats};
pub use diag::{det_abs, gaussian_heuristic, sv_lower_bound, ShortestVectorBound};
pub use gso::{gso, GsoData, IntegralGso};
pub use lll::{lll_reduce, lll_reduce_in_place};
pub(crate) use diag::ratio_log2;

/// LLL parameter used unless a caller picks another: 99/100.
pub fn default_delta() -> BigRational {
    BigRational::new(99.into(), 100.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("basis must be a non-empty square matrix, got {rows} rows with row lengths {lens:?}")]
    NotSquare { rows: usize, lens: Vec<usize> },
    #[error("basis is rank deficient (row {0} lies in the span of the previous rows)")]
    RankDeficient(usize),
    #[error("LLL parameter must lie in (1/4, 1], got {0}")]
    InvalidDelta(String),
    #[error("block size {block} out of range [2, {dim}]")]
    BlockSize { block: usize, dim: usize },
}

/// Row basis of a full-rank integer lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Basis {
    rows: Vec<Vec<BigInt>>,
}

impl Basis {
    /// Square, non-empty integer matrix. Rank is checked by the operations that
    /// need it.
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<Self, LatticeError> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(LatticeError::NotSquare {
                rows: d,
                lens: rows.iter().map(Vec::len).collect(),
            });
        }
        Ok(Basis { rows })
    }

    pub fn from_i64<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, LatticeError> {
        Basis::new(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn identity(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| (0..d).map(|j| BigInt::from((i == j) as i64)).collect())
            .collect();
        Basis { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<Vec<BigInt>> {
        self.rows
    }

    /// Squared Euclidean norm of row `i`.
    pub fn row_norm_sq(&self, i: usize) -> BigInt {
        dot(&self.rows[i], &self.rows[i])
    }

    /// `coeffs * B`.
    pub fn combine(&self, coeffs: &[BigInt]) -> Vec<BigInt> {
        let d = self.dim();
        let mut out = vec![BigInt::from(0); d];
        for (c, row) in coeffs.iter().zip(&self.rows) {
            if c.sign() == num_bigint::Sign::NoSign {
                continue;
            }
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b;
            }
        }
        out
    }

    /// Decimal-string matrix for reports.
    pub fn to_decimal_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_str_radix(10)).collect())
            .collect()
    }
}

pub(crate) fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_delta(delta: &BigRational) -> Result<(), LatticeError> {
    let quarter = BigRational::new(1.into(), 4.into());
    let one = BigRational::from_integer(1.into());
    if delta <= &quarter || delta > &one {
        return Err(LatticeError::InvalidDelta(delta.to_string()));
    }
    Ok(())
}
