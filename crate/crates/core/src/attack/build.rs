//! The algebra of one attack index: coefficients, the lattice `J_i`, the
//! target `v_i` and the radius.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::enumeration::BallPoint;
use crate::lattice::{gso, ratio_log2, sv_lower_bound, Basis, LatticeError};
use crate::scheme::arith::{mod_inverse, mod_neg, mod_sub};
use crate::scheme::AttackInstance;

use super::AttackError;

/// `A_j = -r_j s_j^-1` and `B_j = -h_j s_j^-1` modulo `q`, for every signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffSet {
    pub a: Vec<BigUint>,
    pub b: Vec<BigUint>,
}

/// `C_{i,j}` and `D_{i,j}` for `j = 1..n`, stored at `j - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftedCoeffs {
    pub i: usize,
    pub c: Vec<BigUint>,
    pub d: Vec<BigUint>,
}

pub fn compute_coeffs(instance: &AttackInstance) -> Result<CoeffSet, AttackError> {
    let q = &instance.params.q;
    let mut a = Vec::with_capacity(instance.signatures.len());
    let mut b = Vec::with_capacity(instance.signatures.len());
    for (j, sig) in instance.signatures.iter().enumerate() {
        let w = mod_inverse(&(&sig.s % q), q)
            .ok_or_else(|| AttackError::InvalidInstance(format!("s_{j} is not invertible mod q")))?;
        a.push(mod_neg(&(&sig.r * &w % q), q));
        b.push(mod_neg(&(&sig.h * &w % q), q));
    }
    Ok(CoeffSet { a, b })
}

/// Shifted coefficients for candidate minimum index `i`; panics if `i > n`.
pub fn shifted_coeffs(coeffs: &CoeffSet, i: usize, delta_l: u32, q: &BigUint) -> ShiftedCoeffs {
    let n = coeffs.a.len() - 1;
    assert!(i <= n, "index {i} out of range 0..={n}");
    let inv = mod_inverse(&(BigUint::one() << delta_l as usize), q).expect("q is an odd prime");
    let pick = |v: &[BigUint], j: usize| if j <= i { v[j - 1].clone() } else { v[j].clone() };
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for j in 1..=n {
        c.push(mod_sub(&pick(&coeffs.a, j), &coeffs.a[i], q) * &inv % q);
        d.push(mod_sub(&pick(&coeffs.b, j), &coeffs.b[i], q) * &inv % q);
    }
    ShiftedCoeffs { i, c, d }
}

fn to_int(v: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, v.clone())
}

/// `diag(2^{delta+1} q)` over the last row `(2^{delta+1} C_1, ..., 2^{delta+1} C_n, 1)`.
pub fn build_lattice(c: &[BigUint], q: &BigUint, delta: u32) -> Result<Basis, LatticeError> {
    let n = c.len();
    let scale = BigInt::one() << (delta as usize + 1);
    let diag = &scale * to_int(q);
    let mut rows = vec![vec![BigInt::zero(); n + 1]; n + 1];
    for (j, cj) in c.iter().enumerate() {
        rows[j][j] = diag.clone();
        rows[n][j] = &scale * to_int(cj);
    }
    rows[n][n] = BigInt::one();
    Basis::new(rows)
}

/// `(2^{delta+1} D_1 + 2^ell, ..., 2^{delta+1} D_n + 2^ell, 0)`.
pub fn build_target(d: &[BigUint], delta: u32, ell: u32) -> Vec<BigInt> {
    let top = BigInt::one() << ell as usize;
    let mut v: Vec<BigInt> = d
        .iter()
        .map(|dj| (to_int(dj) << (delta as usize + 1)) + &top)
        .collect();
    v.push(BigInt::zero());
    v
}

/// `R^2 = 2^{2 ell} (n + 1)`.
pub fn radius_sq(ell: u32, n: usize) -> BigInt {
    (BigInt::one() << (2 * ell as usize)) * BigInt::from(n + 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hypothesis2 {
    /// The certified bound exceeds the threshold; `false` is inconclusive.
    pub holds: bool,
    /// `min |b*_i| / ((1/2) (2^{delta+1} q)^{n/(n+1)})`.
    pub margin: f64,
}

/// Compare `min |b*_i|` with `(1/2) (2^{delta+1} q)^{n/(n+1)}` exactly, as
/// `(4 N)^{n+1} > D^{n+1} (2^{delta+1} q)^{2n}` where `min |b*_i|^2 = N / D`.
pub fn check_hypothesis2(basis: &Basis, q: &BigUint, delta: u32, n: usize) -> Result<Hypothesis2, LatticeError> {
    let bound = sv_lower_bound(&gso(basis)?).norm_sq;
    let side = to_int(q) << (delta as usize + 1);
    let e = n as u32 + 1;
    let lhs = num_traits::pow(bound.numer() * BigInt::from(4), e as usize);
    let rhs = num_traits::pow(bound.denom().clone(), e as usize) * num_traits::pow(side.clone(), 2 * n);
    let log_bound = ratio_log2(&bound).unwrap_or(f64::NEG_INFINITY) / 2.0;
    let log_threshold = ratio_log2(&num_rational::BigRational::from_integer(side)).unwrap_or(0.0) * n as f64
        / e as f64
        - 1.0;
    Ok(Hypothesis2 {
        holds: lhs > rhs,
        margin: (log_bound - log_threshold).exp2(),
    })
}

/// `(-u_{n+1}) mod q` for each point, first occurrence kept.
pub fn extract_candidates(points: &[BallPoint], q: &BigUint) -> Vec<BigUint> {
    let q = to_int(q);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for p in points {
        let last = p.point.last().expect("non-empty point");
        let a = num_integer::Integer::mod_floor(&-last, &q)
            .to_biguint()
            .expect("reduced mod q");
        if seen.insert(a.clone()) {
            out.push(a);
        }
    }
    out
}

/// Ground-truth lattice vector for a planted instance at index `i`:
/// coefficients `(c_1, ..., c_n, -a)` and the point `u` itself.
pub fn planted_vector(instance: &AttackInstance, shifted: &ShiftedCoeffs) -> Option<(Vec<BigInt>, Vec<BigInt>)> {
    let meta = instance.meta.as_ref()?;
    let q = to_int(&instance.params.q);
    let a = to_int(&meta.secret);
    let kmin = to_int(&meta.nonces[shifted.i]);
    let scale = BigInt::one() << (instance.delta as usize + 1);
    let others = (0..meta.nonces.len()).filter(|&j| j != shifted.i);
    let mut coeffs = Vec::new();
    let mut u = Vec::new();
    for (j, idx) in others.enumerate() {
        let z = to_int(&meta.nonces[idx]) - &kmin;
        let (zp, rem) = num_integer::Integer::div_rem(&z, &(BigInt::one() << instance.delta_l as usize));
        if !rem.is_zero() {
            return None;
        }
        let (c, d) = (to_int(&shifted.c[j]), to_int(&shifted.d[j]));
        let (cj, rem) = num_integer::Integer::div_rem(&(zp + &c * &a + d), &q);
        if !rem.is_zero() {
            return None;
        }
        u.push(&scale * (&cj * &q - c * &a));
        coeffs.push(cj);
    }
    coeffs.push(-a.clone());
    u.push(-a);
    Some((coeffs, u))
}
