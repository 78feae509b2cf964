//! Integral LLL: size reduction and swaps update `D_i` and `lambda_{i,j}`
//! directly, with exact divisions only.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::gso::IntegralGso;
use super::{check_delta, Basis, LatticeError};

/// Nearest integer to `num / den` for `den > 0`, ties rounded up.
fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (num * &two + den).div_floor(&(den * two))
}

/// Size-reduce row `k` against row `l` (`l < k`).
pub(crate) fn size_reduce(rows: &mut [Vec<BigInt>], g: &mut IntegralGso, k: usize, l: usize) -> bool {
    let dl = &g.d[l + 1];
    let lam = &g.lambda[k][l];
    if (lam * 2i32).abs() <= *dl {
        return false;
    }
    let r = round_div(lam, dl);
    let (head, tail) = rows.split_at_mut(k);
    for (bk, bl) in tail[0].iter_mut().zip(&head[l]) {
        *bk -= &r * bl;
    }
    let (lh, lt) = g.lambda.split_at_mut(k);
    let row_k = &mut lt[0];
    row_k[l] -= &r * &g.d[l + 1];
    for i in 0..l {
        row_k[i] -= &r * &lh[l][i];
    }
    true
}

/// Exchange rows `k - 1` and `k`, keeping the integral GSO consistent.
pub(crate) fn swap(rows: &mut [Vec<BigInt>], g: &mut IntegralGso, k: usize) {
    let n = rows.len();
    rows.swap(k, k - 1);
    {
        let (lh, lt) = g.lambda.split_at_mut(k);
        for j in 0..k - 1 {
            std::mem::swap(&mut lh[k - 1][j], &mut lt[0][j]);
        }
    }
    let lam = g.lambda[k][k - 1].clone();
    let b = (&g.d[k - 1] * &g.d[k + 1] + &lam * &lam) / &g.d[k];
    for i in k + 1..n {
        let t = g.lambda[i][k].clone();
        let new_ik = (&g.d[k + 1] * &g.lambda[i][k - 1] - &lam * &t) / &g.d[k];
        let new_ik1 = (&b * &t + &lam * &new_ik) / &g.d[k + 1];
        g.lambda[i][k] = new_ik;
        g.lambda[i][k - 1] = new_ik1;
    }
    g.d[k] = b;
}

/// Lovász test in integers: `num * D_k^2 <= den * (D_{k+1} D_{k-1} + lambda^2)`.
fn lovasz_holds(g: &IntegralGso, k: usize, num: &BigInt, den: &BigInt) -> bool {
    let lam = &g.lambda[k][k - 1];
    let lhs = num * &g.d[k] * &g.d[k];
    let rhs = den * (&g.d[k + 1] * &g.d[k - 1] + lam * lam);
    lhs <= rhs
}

/// LLL-reduce `rows` in place. `g` must be the integral GSO of `rows`; it is
/// kept up to date. Returns the number of swaps performed.
pub fn lll_reduce_in_place(
    rows: &mut [Vec<BigInt>],
    g: &mut IntegralGso,
    delta: &BigRational,
) -> usize {
    let n = rows.len();
    let num = delta.numer().clone();
    let den = delta.denom().clone();
    let mut swaps = 0;
    let mut k = 1;
    while k < n {
        size_reduce(rows, g, k, k - 1);
        if lovasz_holds(g, k, &num, &den) {
            for l in (0..k - 1).rev() {
                size_reduce(rows, g, k, l);
            }
            k += 1;
        } else {
            swap(rows, g, k);
            swaps += 1;
            k = (k - 1).max(1);
        }
    }
    debug_assert!(g.d.iter().all(|v| !v.is_zero()));
    swaps
}

/// LLL-reduced basis of the same lattice, with Lovász parameter `delta`.
pub fn lll_reduce(basis: &Basis, delta: &BigRational) -> Result<Basis, LatticeError> {
    check_delta(delta)?;
    let mut g = IntegralGso::compute(basis)?;
    let mut rows = basis.rows().to_vec();
    lll_reduce_in_place(&mut rows, &mut g, delta);
    Basis::new(rows)
}
