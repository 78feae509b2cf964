use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::gso::GsoData;
use super::Basis;

/// `|det B|` by Bareiss fraction-free elimination.
pub fn det_abs(basis: &Basis) -> BigInt {
    let n = basis.dim();
    let mut m: Vec<Vec<BigInt>> = basis.rows().to_vec();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => m.swap(k, i),
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    m[n - 1][n - 1].abs()
}

/// Certified lower bound `min_i |b*_i| <= s(L)`, kept squared and exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortestVectorBound {
    pub norm_sq: BigRational,
}

impl ShortestVectorBound {
    /// `sqrt(norm_sq)` in floating point (for reports and forecasts).
    pub fn norm(&self) -> f64 {
        ratio_log2(&self.norm_sq).map_or(0.0, |l| (l / 2.0).exp2())
    }
}

pub fn sv_lower_bound(gso: &GsoData) -> ShortestVectorBound {
    let norm_sq = gso
        .norms_sq
        .iter()
        .min()
        .cloned()
        .expect("non-empty GSO");
    ShortestVectorBound { norm_sq }
}

/// `log2 |v|` for a nonzero integer, accurate to double precision.
pub(crate) fn int_log2(v: &BigInt) -> Option<f64> {
    if v.is_zero() {
        return None;
    }
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v.abs() >> shift).to_f64()?;
    Some(top.log2() + shift as f64)
}

pub(crate) fn ratio_log2(r: &BigRational) -> Option<f64> {
    Some(int_log2(r.numer())? - int_log2(r.denom())?)
}

/// Gaussian-heuristic estimate `sqrt(d / (2 pi e)) * |det|^{1/d}` of `s(L)`.
pub fn gaussian_heuristic(basis: &Basis) -> f64 {
    let d = basis.dim() as f64;
    let Some(log_det) = int_log2(&det_abs(basis)) else {
        return 0.0;
    };
    (d / (2.0 * std::f64::consts::PI * std::f64::consts::E)).sqrt() * (log_det / d).exp2()
}
