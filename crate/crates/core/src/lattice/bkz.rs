//! BKZ with an exact-enumeration block oracle and no pruning.
//!
//! A tour walks `k = 0..d-1`; for each window `[k, min(k + block, d))` it looks
//! for the shortest nonzero vector of the projected block lattice. A vector
//! strictly shorter than `b*_k` (checked in exact arithmetic) is inserted at
//! `k` with a unimodular transform of the window rows, followed by LLL. Tours
//! repeat until one makes no insertion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::gso::IntegralGso;
use super::lll::lll_reduce_in_place;
use super::{check_delta, Basis, LatticeError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BkzStats {
    pub tours: usize,
    pub insertions: usize,
}

/// Upper bound on tours; each insertion strictly shortens some `b*_k`, so a
/// run reaching this many tours indicates a bug rather than slow progress.
const MAX_TOURS: usize = 10_000;

pub fn bkz_reduce(basis: &Basis, block: usize, delta: &BigRational) -> Result<Basis, LatticeError> {
    bkz_reduce_with(basis, block, delta).map(|(b, _)| b)
}

pub fn bkz_reduce_with(
    basis: &Basis,
    block: usize,
    delta: &BigRational,
) -> Result<(Basis, BkzStats), LatticeError> {
    let d = basis.dim();
    if block < 2 || block > d {
        return Err(LatticeError::BlockSize { block, dim: d });
    }
    check_delta(delta)?;
    let mut g = IntegralGso::compute(basis)?;
    let mut rows = basis.rows().to_vec();
    lll_reduce_in_place(&mut rows, &mut g, delta);

    let mut stats = BkzStats::default();
    while stats.tours < MAX_TOURS {
        stats.tours += 1;
        let mut changed = false;
        for k in 0..d - 1 {
            let end = (k + block).min(d);
            let Some(coeffs) = block_svp(&g, k, end) else {
                continue;
            };
            if projected_norm_sq(&g, k, &coeffs) >= g.norm_sq(k) {
                continue;
            }
            insert(&mut rows, k, &coeffs);
            g = IntegralGso::compute(&Basis::new(rows.clone())?)?;
            lll_reduce_in_place(&mut rows, &mut g, delta);
            stats.insertions += 1;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Ok((Basis::new(rows)?, stats))
}

/// Exact `|pi_k(sum_i x_i b_{k+i})|^2`.
fn projected_norm_sq(g: &IntegralGso, k: usize, x: &[i64]) -> BigRational {
    let beta = x.len();
    let mut total = BigRational::zero();
    for j in 0..beta {
        let mut y = BigRational::from_integer(BigInt::from(x[j]));
        for i in j + 1..beta {
            if x[i] != 0 {
                y += g.mu(k + i, k + j) * BigInt::from(x[i]);
            }
        }
        total += &y * &y * g.norm_sq(k + j);
    }
    total
}

/// Shortest nonzero coefficient vector of the projected block `[k, end)`, if
/// one is (in floating point) shorter than `b*_k`.
pub(crate) fn block_svp(g: &IntegralGso, k: usize, end: usize) -> Option<Vec<i64>> {
    let beta = end - k;
    let base = g.norm_sq(k);
    let r: Vec<f64> = (k..end)
        .map(|j| (g.norm_sq(j) / &base).to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let mu: Vec<Vec<f64>> = (0..beta)
        .map(|i| (0..i).map(|j| g.mu(k + i, k + j).to_f64().unwrap_or(0.0)).collect())
        .collect();

    let mut search = SvpSearch {
        r: &r,
        mu: &mu,
        x: vec![0; beta],
        best: None,
        bound: 1.0 - 1e-9,
    };
    search.descend(beta - 1, 0.0, true);
    search.best
}

struct SvpSearch<'a> {
    r: &'a [f64],
    mu: &'a [Vec<f64>],
    x: Vec<i64>,
    best: Option<Vec<i64>>,
    bound: f64,
}

impl SvpSearch<'_> {
    fn center(&self, level: usize) -> f64 {
        let beta = self.x.len();
        -(level + 1..beta)
            .map(|i| self.x[i] as f64 * self.mu[i][level])
            .sum::<f64>()
    }

    /// Schnorr–Euchner zigzag at `level`; while every higher coefficient is
    /// zero only nonnegative values are tried, which removes the sign symmetry.
    fn descend(&mut self, level: usize, partial: f64, zero_above: bool) {
        let c = self.center(level);
        let mut xk = c.round() as i64;
        let mut step: i64 = if c >= xk as f64 { 1 } else { -1 };
        let mut dir = step;
        if zero_above {
            xk = 0;
            step = 1;
            dir = 1;
        }
        loop {
            let y = xk as f64 - c;
            let dist = partial + y * y * self.r[level];
            // both orders are monotone in |y|, so the first miss ends the level
            if dist >= self.bound {
                return;
            }
            self.x[level] = xk;
            if level == 0 {
                if self.x.iter().any(|&v| v != 0) {
                    self.best = Some(self.x.clone());
                    self.bound = dist;
                }
            } else {
                self.descend(level - 1, dist, zero_above && xk == 0);
            }
            if zero_above {
                xk += 1;
            } else {
                xk += step;
                dir = -dir;
                step = dir - step;
            }
        }
    }
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    // returns (g, s, t) with s*a + t*b = g >= 0
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Unimodular rewrite of rows `k..k+x.len()` so that row `k` becomes
/// `sum_i x_i b_{k+i} / gcd(x)`.
fn insert(rows: &mut [Vec<BigInt>], k: usize, x: &[i64]) {
    let mut c: Vec<i128> = x.iter().map(|&v| v as i128).collect();
    for j in (1..c.len()).rev() {
        let (a, b) = (c[j - 1], c[j]);
        if b == 0 {
            continue;
        }
        let (g, s, t) = ext_gcd(a, b);
        let (p, q) = (BigInt::from(a / g), BigInt::from(b / g));
        let (s, t) = (BigInt::from(s), BigInt::from(t));
        let (lo, hi) = rows.split_at_mut(k + j);
        let r_prev = &mut lo[k + j - 1];
        let r_cur = &mut hi[0];
        for (u, v) in r_prev.iter_mut().zip(r_cur.iter_mut()) {
            let new_u = &p * &*u + &q * &*v;
            let new_v = &s * &*v - &t * &*u;
            *u = new_u;
            *v = new_v;
        }
        c[j - 1] = g;
        c[j] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{default_delta, det_abs, gso, lll_reduce};
    use num_traits::Signed;

    fn brute_shortest_sq(b: &Basis, range: i64) -> BigInt {
        let d = b.dim();
        let mut best: Option<BigInt> = None;
        let total = (2 * range + 1).pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let coeffs: Vec<BigInt> = (0..d)
                .map(|_| {
                    let v = rem % (2 * range + 1) - range;
                    rem /= 2 * range + 1;
                    BigInt::from(v)
                })
                .collect();
            if coeffs.iter().all(Zero::is_zero) {
                continue;
            }
            let v = b.combine(&coeffs);
            let n: BigInt = v.iter().map(|x| x * x).sum();
            if best.as_ref().is_none_or(|bv| &n < bv) {
                best = Some(n);
            }
        }
        best.unwrap()
    }

    #[test]
    fn full_block_finds_exact_shortest_vector() {
        let cases: [[[i64; 3]; 3]; 3] = [
            [[13, 7, 1], [4, -9, 22], [17, 5, -6]],
            [[101, 0, 0], [37, 1, 0], [64, 0, 1]],
            [[3, 14, 15], [9, 26, 5], [35, 89, 79]],
        ];
        for rows in cases {
            let b = Basis::from_i64(&rows).unwrap();
            let r = bkz_reduce(&b, 3, &default_delta()).unwrap();
            // coefficients of a shortest vector in an LLL-reduced 3-dim basis are tiny
            let lll = lll_reduce(&b, &default_delta()).unwrap();
            assert_eq!(r.row_norm_sq(0), brute_shortest_sq(&lll, 4));
            assert_eq!(det_abs(&r), det_abs(&b));
        }
    }

    #[test]
    fn output_is_lll_reduced_and_same_lattice() {
        let b = Basis::from_i64(&[
            [1 << 20, 0, 0, 0, 0],
            [0, 1 << 20, 0, 0, 0],
            [0, 0, 1 << 20, 0, 0],
            [0, 0, 0, 1 << 20, 0],
            [312_345, 777_777, 123_456, 987_654, 1],
        ])
        .unwrap();
        let (r, stats) = bkz_reduce_with(&b, 4, &default_delta()).unwrap();
        assert!(stats.tours >= 1);
        let g = gso(&r).unwrap();
        assert!(g.is_size_reduced());
        assert!(g.satisfies_lovasz(&default_delta()));
        assert_eq!(det_abs(&r), det_abs(&b));
        let lll = lll_reduce(&b, &default_delta()).unwrap();
        assert!(r.row_norm_sq(0) <= lll.row_norm_sq(0));
    }

    #[test]
    fn block_size_bounds() {
        let b = Basis::identity(3);
        assert!(matches!(
            bkz_reduce(&b, 1, &default_delta()),
            Err(LatticeError::BlockSize { .. })
        ));
        assert!(bkz_reduce(&b, 4, &default_delta()).is_err());
        let r = bkz_reduce(&b, 2, &default_delta()).unwrap();
        assert!(r.rows().iter().flatten().all(|v| v.abs() <= BigInt::from(1)));
    }

    #[test]
    fn unimodular_insertion() {
        let mut rows = vec![
            vec![BigInt::from(1), BigInt::from(0), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)],
        ];
        insert(&mut rows, 0, &[3, -4, 6]);
        assert_eq!(rows[0], vec![BigInt::from(3), BigInt::from(-4), BigInt::from(6)]);
        assert_eq!(det_abs(&Basis::new(rows).unwrap()), BigInt::from(1));
        // non-primitive: gcd 2 divides out
        let mut rows = Basis::identity(2).into_rows();
        insert(&mut rows, 0, &[4, 6]);
        assert_eq!(rows[0], vec![BigInt::from(2), BigInt::from(3)]);
    }
}
