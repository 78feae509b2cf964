#![allow(dead_code)]

use latkey::lattice::Basis;
use num_bigint::BigInt;
use rand::Rng;

/// Integer determinant by cofactor expansion (dimension <= 4 only).
pub fn det_i64(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    let mut total = 0;
    for c in 0..n {
        let minor: Vec<Vec<i64>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect())
            .collect();
        let sign = if c % 2 == 0 { 1 } else { -1 };
        total += sign * m[0][c] * det_i64(&minor);
    }
    total
}

/// `adj(B)` so that `B^{-1} = adj / det`.
pub fn adjugate(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i64>> = m
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .map(|(_, row)| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j][i] = sign * det_i64(&minor);
        }
    }
    adj
}

/// Brute force over the coefficient box implied by Cramer's rule: `x = u B^{-1}`
/// with `|u_j| <= |v_j| + R`. Returns the sorted points in the ball, or `None`
/// when the box is too large to scan.
pub fn brute_ball(m: &[Vec<i64>], v: &[i64], r_sq: i64, max_box: i64) -> Option<Vec<(Vec<i64>, Vec<i64>)>> {
    let n = m.len();
    let det = det_i64(m).abs();
    assert!(det != 0);
    let adj = adjugate(m);
    let r = (r_sq as f64).sqrt().ceil() as i64;
    let mut ranges = Vec::with_capacity(n);
    let mut size = 1i64;
    for i in 0..n {
        let s: i64 = (0..n).map(|j| (v[j].abs() + r) * adj[j][i].abs()).sum();
        let lim = s / det + 1;
        ranges.push(lim);
        size = size.checked_mul(2 * lim + 1)?;
        if size > max_box {
            return None;
        }
    }
    let mut out = Vec::new();
    let mut x: Vec<i64> = ranges.iter().map(|&l| -l).collect();
    loop {
        let u: Vec<i64> = (0..n).map(|j| (0..n).map(|i| x[i] * m[i][j]).sum()).collect();
        let d: i64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if d <= r_sq {
            out.push((x.clone(), u));
        }
        let mut k = 0;
        loop {
            if k == n {
                out.sort();
                return Some(out);
            }
            x[k] += 1;
            if x[k] <= ranges[k] {
                break;
            }
            x[k] = -ranges[k];
            k += 1;
        }
    }
}

pub fn random_full_rank<R: Rng>(rng: &mut R, n: usize, lim: i64) -> Vec<Vec<i64>> {
    loop {
        let m: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-lim..=lim)).collect()).collect();
        if det_i64(&m) != 0 {
            return m;
        }
    }
}

pub fn to_basis(m: &[Vec<i64>]) -> Basis {
    Basis::from_i64(m).unwrap()
}

pub fn big_vec(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}
