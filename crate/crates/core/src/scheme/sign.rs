use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use super::arith::mod_inverse;
use super::ec::Point;
use super::params::{Group, SchemeParams};
use super::SchemeError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicKey {
    /// `R = g^a mod p`.
    Dsa(BigUint),
    /// `Q = a * G`.
    Ecdsa(Point),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub secret: BigUint,
    pub public: PublicKey,
}

/// One observed signature `(h, r, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMessage {
    pub h: BigUint,
    pub r: BigUint,
    pub s: BigUint,
}

/// Group action of a scalar on the generator: `g^k mod p` or `k * G`.
pub fn public_from_secret(params: &SchemeParams, a: &BigUint) -> PublicKey {
    match &params.group {
        Group::Dsa { g } => PublicKey::Dsa(g.modpow(a, &params.p)),
        Group::Ecdsa { curve, base } => PublicKey::Ecdsa(curve.mul(a, base)),
    }
}

/// Key pair for a caller-chosen secret in `[1, q-1]`.
pub fn keypair_from_secret(params: &SchemeParams, a: BigUint) -> Result<KeyPair, SchemeError> {
    if a.is_zero() || a >= params.q {
        return Err(SchemeError::KeyOutOfRange);
    }
    let public = public_from_secret(params, &a);
    Ok(KeyPair { secret: a, public })
}

pub fn keygen<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> KeyPair {
    let a = rng.gen_biguint_range(&BigUint::one(), &params.q);
    keypair_from_secret(params, a).expect("sampled in range")
}

/// `r` component for nonce `k`: `(g^k mod p) mod q` or `x(kG) mod q`.
fn commitment(params: &SchemeParams, k: &BigUint) -> BigUint {
    match &params.group {
        Group::Dsa { g } => g.modpow(k, &params.p) % &params.q,
        Group::Ecdsa { curve, base } => match curve.mul(k, base) {
            Point::Infinity => BigUint::zero(),
            Point::Affine { x, .. } => x % &params.q,
        },
    }
}

/// `r = commit(k)`, `s = k^{-1}(h + a r) mod q`.
///
/// Returns [`SchemeError::RetryNeeded`] when `r = 0` or `s = 0`; the caller
/// draws a fresh nonce.
pub fn sign(
    params: &SchemeParams,
    a: &BigUint,
    h: &BigUint,
    k: &BigUint,
) -> Result<SignedMessage, SchemeError> {
    let q = &params.q;
    if k.is_zero() || k >= q {
        return Err(SchemeError::NonceOutOfRange);
    }
    if h >= q {
        return Err(SchemeError::HashOutOfRange);
    }
    if a.is_zero() || a >= q {
        return Err(SchemeError::KeyOutOfRange);
    }
    let r = commitment(params, k);
    if r.is_zero() {
        return Err(SchemeError::RetryNeeded);
    }
    let k_inv = mod_inverse(k, q).expect("q prime, 0 < k < q");
    let s = k_inv * ((h + a * &r) % q) % q;
    if s.is_zero() {
        return Err(SchemeError::RetryNeeded);
    }
    Ok(SignedMessage { h: h.clone(), r, s })
}

/// The textbook verification equations. Degenerate inputs verify as `false`.
pub fn verify(params: &SchemeParams, public: &PublicKey, h: &BigUint, sig: &SignedMessage) -> bool {
    let q = &params.q;
    let SignedMessage { r, s, .. } = sig;
    if r.is_zero() || s.is_zero() || r >= q || s >= q {
        return false;
    }
    let Some(w) = mod_inverse(s, q) else {
        return false;
    };
    let u1 = (h % q) * &w % q;
    let u2 = r * &w % q;
    match (&params.group, public) {
        (Group::Dsa { g }, PublicKey::Dsa(big_r)) => {
            let p = &params.p;
            let v = g.modpow(&u1, p) * big_r.modpow(&u2, p) % p % q;
            &v == r
        }
        (Group::Ecdsa { curve, base }, PublicKey::Ecdsa(point)) => {
            let sum = curve.add(&curve.mul(&u1, base), &curve.mul(&u2, point));
            match sum {
                Point::Infinity => false,
                Point::Affine { x, .. } => &(x % q) == r,
            }
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::params::{gen_curve_params, CurveSpec, TOY_CURVE};

    fn tiny_dsa() -> SchemeParams {
        SchemeParams::dsa(23u32.into(), 11u32.into(), 4u32.into()).unwrap()
    }

    fn big(v: u32) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn forced_key_matches_direct_exponentiation() {
        let params = tiny_dsa();
        let kp = keypair_from_secret(&params, big(3)).unwrap();
        assert_eq!(kp.public, PublicKey::Dsa(big(18)));
        let kp = keypair_from_secret(&params, big(1)).unwrap();
        assert_eq!(kp.public, PublicKey::Dsa(big(4)));
        assert_eq!(keypair_from_secret(&params, big(11)), Err(SchemeError::KeyOutOfRange));
        assert_eq!(keypair_from_secret(&params, big(0)), Err(SchemeError::KeyOutOfRange));
    }

    #[test]
    fn hand_computed_dsa_signature() {
        let params = tiny_dsa();
        let sig = sign(&params, &big(3), &big(5), &big(7)).unwrap();
        assert_eq!((sig.r.clone(), sig.s.clone()), (big(8), big(1)));
        let public = PublicKey::Dsa(big(18));
        assert!(verify(&params, &public, &big(5), &sig));
        let bumped = SignedMessage { s: big(2), ..sig.clone() };
        assert!(!verify(&params, &public, &big(5), &bumped));
        let zero_r = SignedMessage { r: big(0), ..sig };
        assert!(!verify(&params, &public, &big(5), &zero_r));
    }

    #[test]
    fn zero_s_signals_retry() {
        let params = tiny_dsa();
        // (4^k mod 23) mod 11 is never 0 in this group, so hit the s = 0 branch:
        // k = 7 gives r = 8, and h = -3*8 mod 11 = 9 makes h + a*r vanish
        assert_eq!(sign(&params, &big(3), &big(9), &big(7)), Err(SchemeError::RetryNeeded));
    }

    #[test]
    fn out_of_range_inputs() {
        let params = tiny_dsa();
        assert_eq!(sign(&params, &big(3), &big(5), &big(0)), Err(SchemeError::NonceOutOfRange));
        assert_eq!(sign(&params, &big(3), &big(5), &big(11)), Err(SchemeError::NonceOutOfRange));
        assert_eq!(sign(&params, &big(3), &big(11), &big(2)), Err(SchemeError::HashOutOfRange));
    }

    #[test]
    fn ecdsa_with_unit_key() {
        let params = gen_curve_params(&CurveSpec::Preset(TOY_CURVE.into())).unwrap();
        let kp = keypair_from_secret(&params, big(1)).unwrap();
        let q = params.q.clone();
        for k in [2u32, 3, 1000, 65000] {
            let h = big(12345);
            match sign(&params, &kp.secret, &h, &big(k)) {
                Ok(sig) => {
                    let expected = mod_inverse(&big(k), &q).unwrap() * ((&h + &sig.r) % &q) % &q;
                    assert_eq!(sig.s, expected);
                    assert!(verify(&params, &kp.public, &h, &sig));
                }
                Err(e) => assert_eq!(e, SchemeError::RetryNeeded),
            }
        }
    }
}
