use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use super::arith::{divides, is_probable_prime, random_exact_bits};
use super::ec::{Curve, Point};
use super::SchemeError;

/// Bound on fresh `q` draws in [`gen_group_params`].
const MAX_Q_ATTEMPTS: usize = 1_000;
/// Bound on `t` increments per `q` in [`gen_group_params`].
const MAX_T_STEPS: usize = 200_000;

/// Name of the built-in brute-forceable test curve.
pub const TOY_CURVE: &str = "toy16";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SchemeKind {
    Dsa,
    Ecdsa,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Group {
    /// Order-`q` subgroup of `F_p^*` generated by `g`.
    Dsa { g: BigUint },
    /// Prime-order point `base` on `curve`.
    Ecdsa { curve: Curve, base: Point },
}

/// The algebraic setting of a signer: DSA group `(p, q, g)` or curve
/// `(p, A, B, G, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    pub p: BigUint,
    pub q: BigUint,
    pub group: Group,
}

impl SchemeParams {
    pub fn kind(&self) -> SchemeKind {
        match self.group {
            Group::Dsa { .. } => SchemeKind::Dsa,
            Group::Ecdsa { .. } => SchemeKind::Ecdsa,
        }
    }

    /// Bit length of `q`.
    pub fn ell(&self) -> u32 {
        self.q.bits() as u32
    }

    pub fn dsa(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, SchemeError> {
        let params = SchemeParams {
            p,
            q,
            group: Group::Dsa { g },
        };
        params.validate()?;
        Ok(params)
    }

    pub fn curve(&self) -> Option<&Curve> {
        match &self.group {
            Group::Ecdsa { curve, .. } => Some(curve),
            Group::Dsa { .. } => None,
        }
    }

    /// Re-check every structural invariant of the parameters.
    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |msg: &str| Err(SchemeError::InvalidParams(msg.to_owned()));
        if !is_probable_prime(&self.q) {
            return bad("q is not prime");
        }
        if !is_probable_prime(&self.p) {
            return bad("p is not prime");
        }
        match &self.group {
            Group::Dsa { g } => {
                if !divides(&self.q, &(&self.p - 1u32)) {
                    return bad("q does not divide p - 1");
                }
                if g.is_zero() || g.is_one() || g >= &self.p {
                    return bad("g must lie in (1, p)");
                }
                if !g.modpow(&self.q, &self.p).is_one() {
                    return bad("g^q != 1 mod p");
                }
            }
            Group::Ecdsa { curve, base } => {
                if curve.p != self.p {
                    return bad("curve field does not match p");
                }
                if curve.is_singular() {
                    return bad("singular curve: 4A^3 + 27B^2 = 0 mod p");
                }
                if base.is_infinity() || !curve.contains(base) {
                    return bad("base point is not on the curve");
                }
                if !curve.mul(&self.q, base).is_infinity() {
                    return bad("q * G is not the point at infinity");
                }
            }
        }
        Ok(())
    }
}

/// DSA group generation: random `q` of exactly `q_bits` bits, then
/// `p = q*t + 1` for increasing even `t` until `p` is a `p_bits`-bit prime,
/// then `g = h^{(p-1)/q}` for random `h` until `g != 1`.
pub fn gen_group_params<R: Rng + ?Sized>(
    q_bits: u32,
    p_bits: u32,
    rng: &mut R,
) -> Result<SchemeParams, SchemeError> {
    if q_bits < 2 || q_bits >= p_bits {
        return Err(SchemeError::InvalidParams(format!(
            "need 2 <= q_bits < p_bits, got q_bits = {q_bits}, p_bits = {p_bits}"
        )));
    }
    let p_low = BigUint::one() << (p_bits - 1);
    let p_high = BigUint::one() << p_bits;

    for _ in 0..MAX_Q_ATTEMPTS {
        let q = random_prime(q_bits, rng);
        // smallest even t with q*t + 1 >= 2^{p_bits-1}
        let mut t = (&p_low - 1u32 + &q - 1u32) / &q;
        if t.bit(0) {
            t += 1u32;
        }
        if t < BigUint::from(2u32) {
            t = BigUint::from(2u32);
        }
        for _ in 0..MAX_T_STEPS {
            let p = &q * &t + 1u32;
            if p >= p_high {
                break;
            }
            if is_probable_prime(&p) {
                let g = find_generator(&p, &q, rng);
                return SchemeParams::dsa(p, q, g);
            }
            t += 2u32;
        }
    }
    Err(SchemeError::GenerationFailed(MAX_Q_ATTEMPTS))
}

fn random_prime<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> BigUint {
    loop {
        let mut c = random_exact_bits(rng, bits as u64);
        if bits > 2 {
            c.set_bit(0, true);
        }
        if is_probable_prime(&c) {
            return c;
        }
    }
}

fn find_generator<R: Rng + ?Sized>(p: &BigUint, q: &BigUint, rng: &mut R) -> BigUint {
    use num_bigint::RandBigInt;
    let cofactor = (p - 1u32) / q;
    let two = BigUint::from(2u32);
    loop {
        let h = if p > &BigUint::from(3u32) {
            rng.gen_biguint_range(&two, &(p - 1u32))
        } else {
            two.clone()
        };
        let g = h.modpow(&cofactor, p);
        if !g.is_one() {
            return g;
        }
    }
}

/// Curve source for [`gen_curve_params`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CurveSpec {
    Preset(String),
    Explicit {
        p: BigUint,
        a: BigUint,
        b: BigUint,
        gx: BigUint,
        gy: BigUint,
        q: BigUint,
    },
}

#[derive(serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
enum CurveSpecFile {
    Preset(String),
    Explicit {
        p: String,
        a: String,
        b: String,
        gx: String,
        gy: String,
        q: String,
    },
}

impl serde::Serialize for CurveSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let file = match self {
            CurveSpec::Preset(name) => CurveSpecFile::Preset(name.clone()),
            CurveSpec::Explicit { p, a, b, gx, gy, q } => CurveSpecFile::Explicit {
                p: p.to_string(),
                a: a.to_string(),
                b: b.to_string(),
                gx: gx.to_string(),
                gy: gy.to_string(),
                q: q.to_string(),
            },
        };
        serde::Serialize::serialize(&file, s)
    }
}

impl<'de> serde::Deserialize<'de> for CurveSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let num = |v: &str| v.trim().parse::<BigUint>().map_err(serde::de::Error::custom);
        Ok(match <CurveSpecFile as serde::Deserialize>::deserialize(de)? {
            CurveSpecFile::Preset(name) => CurveSpec::Preset(name),
            CurveSpecFile::Explicit { p, a, b, gx, gy, q } => CurveSpec::Explicit {
                p: num(&p)?,
                a: num(&a)?,
                b: num(&b)?,
                gx: num(&gx)?,
                gy: num(&gy)?,
                q: num(&q)?,
            },
        })
    }
}

/// Validated ECDSA parameters from a preset name or explicit values.
pub fn gen_curve_params(spec: &CurveSpec) -> Result<SchemeParams, SchemeError> {
    let (p, a, b, gx, gy, q) = match spec {
        CurveSpec::Preset(name) if name == TOY_CURVE => (
            BigUint::from(65521u32),
            BigUint::from(16u32),
            BigUint::from(7u32),
            BigUint::from(1u32),
            BigUint::from(4699u32),
            BigUint::from(65029u32),
        ),
        CurveSpec::Preset(name) => {
            return Err(SchemeError::InvalidParams(format!(
                "unknown curve preset {name:?} (built-in: {TOY_CURVE})"
            )))
        }
        CurveSpec::Explicit { p, a, b, gx, gy, q } => {
            (p.clone(), a.clone(), b.clone(), gx.clone(), gy.clone(), q.clone())
        }
    };
    let curve = Curve::new(p.clone(), a, b);
    let params = SchemeParams {
        p,
        q,
        group: Group::Ecdsa {
            curve,
            base: Point::Affine { x: gx, y: gy },
        },
    };
    params.validate()?;
    Ok(params)
}
