//! Attack instances: a public key, `n + 1` signatures and the claimed shared-bit
//! counts, plus optional ground truth for planted instances. Serialized as JSON
//! with every big integer as a decimal string.

use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ec::{Curve, Point};
use super::nonce::{sample_shared_ephemeral, sample_shared_ephemerals, EphemeralPattern, RESAMPLE_BUDGET};
use super::params::{Group, SchemeKind, SchemeParams};
use super::sign::{sign, verify, KeyPair, PublicKey, SignedMessage};
use super::SchemeError;

/// How the signed values `h` are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashMode {
    /// `h` uniform in `[0, q)`, used directly as the message.
    #[default]
    Passthrough,
    /// `h = SHA-256(random 32-byte message) mod q`.
    Hashed,
}

/// Ground truth for planted instances. Never read by the attack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceMeta {
    pub secret: BigUint,
    pub nonces: Vec<BigUint>,
    /// Index of the smallest nonce (first one on ties).
    pub min_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackInstance {
    pub params: SchemeParams,
    pub public: PublicKey,
    pub signatures: Vec<SignedMessage>,
    pub ell: u32,
    pub delta: u32,
    pub delta_l: u32,
    pub meta: Option<InstanceMeta>,
}

impl AttackInstance {
    /// `n`, one less than the number of signatures.
    pub fn n(&self) -> usize {
        self.signatures.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: String| Err(SchemeError::Malformed(m));
        if self.signatures.len() < 2 {
            return bad(format!("need at least 2 signatures, got {}", self.signatures.len()));
        }
        if self.ell != self.params.ell() {
            return bad(format!("ell = {} but q has {} bits", self.ell, self.params.ell()));
        }
        if self.delta == 0 || self.delta >= self.ell || self.delta_l > self.delta {
            return bad(format!(
                "need 0 < delta < ell and delta_l <= delta, got delta = {}, delta_l = {}",
                self.delta, self.delta_l
            ));
        }
        for (j, sig) in self.signatures.iter().enumerate() {
            if !verify(&self.params, &self.public, &sig.h, sig) {
                return bad(format!("signature {j} does not verify"));
            }
        }
        if let Some(meta) = &self.meta {
            if meta.nonces.len() != self.signatures.len() {
                return bad("meta.k length differs from signature count".into());
            }
            if meta.min_index >= meta.nonces.len() {
                return bad("meta.min_index out of range".into());
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SchemeError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| SchemeError::Malformed(e.to_string()))?;
        let instance = file.into_instance()?;
        instance.validate()?;
        Ok(instance)
    }
}

fn draw_hash<R: Rng + ?Sized>(q: &BigUint, mode: HashMode, rng: &mut R) -> BigUint {
    match mode {
        HashMode::Passthrough => rng.gen_biguint_below(q),
        HashMode::Hashed => {
            let mut msg = [0u8; 32];
            rng.fill(&mut msg);
            BigUint::from_bytes_be(&Sha256::digest(msg)) % q
        }
    }
}

fn sign_all<R, F>(
    params: &SchemeParams,
    keypair: &KeyPair,
    mut nonces: Vec<BigUint>,
    hash_mode: HashMode,
    mut redraw: F,
    rng: &mut R,
) -> Result<(Vec<SignedMessage>, Vec<BigUint>), SchemeError>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<BigUint, SchemeError>,
{
    let mut sigs = Vec::with_capacity(nonces.len());
    for k in nonces.iter_mut() {
        let mut attempts = 0;
        loop {
            let h = draw_hash(&params.q, hash_mode, rng);
            match sign(params, &keypair.secret, &h, k) {
                Ok(sig) => {
                    sigs.push(sig);
                    break;
                }
                Err(SchemeError::RetryNeeded) => {
                    attempts += 1;
                    if attempts >= RESAMPLE_BUDGET {
                        return Err(SchemeError::ResampleBudget(RESAMPLE_BUDGET));
                    }
                    *k = redraw(rng)?;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok((sigs, nonces))
}

fn min_index(nonces: &[BigUint]) -> usize {
    nonces
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.cmp(b).then(i.cmp(j)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Planted instance: `n + 1` signatures whose nonces follow `pattern`.
pub fn make_instance<R: Rng + ?Sized>(
    params: &SchemeParams,
    keypair: &KeyPair,
    n: usize,
    pattern: &EphemeralPattern,
    hash_mode: HashMode,
    rng: &mut R,
) -> Result<AttackInstance, SchemeError> {
    if n < 1 {
        return Err(SchemeError::InvalidParams(format!("need n >= 1, got {n}")));
    }
    let nonces = sample_shared_ephemerals(params, pattern, n + 1, rng)?;
    let (signatures, nonces) = sign_all(
        params,
        keypair,
        nonces,
        hash_mode,
        |rng| sample_shared_ephemeral(params, pattern, rng),
        rng,
    )?;
    Ok(AttackInstance {
        params: params.clone(),
        public: keypair.public.clone(),
        signatures,
        ell: params.ell(),
        delta: pattern.delta,
        delta_l: pattern.delta_l,
        meta: Some(InstanceMeta {
            secret: keypair.secret.clone(),
            min_index: min_index(&nonces),
            nonces,
        }),
    })
}

/// Negative control: independent uniform nonces, labelled with a claimed
/// `(delta, delta_l)` they do not actually satisfy.
pub fn make_uniform_instance<R: Rng + ?Sized>(
    params: &SchemeParams,
    keypair: &KeyPair,
    n: usize,
    claimed_delta: u32,
    claimed_delta_l: u32,
    hash_mode: HashMode,
    rng: &mut R,
) -> Result<AttackInstance, SchemeError> {
    if n < 1 {
        return Err(SchemeError::InvalidParams(format!("need n >= 1, got {n}")));
    }
    let draw = |rng: &mut R| Ok(rng.gen_biguint_range(&BigUint::one(), &params.q));
    let nonces = (0..=n).map(|_| draw(rng)).collect::<Result<Vec<_>, _>>()?;
    let (signatures, nonces) = sign_all(params, keypair, nonces, hash_mode, draw, rng)?;
    let instance = AttackInstance {
        params: params.clone(),
        public: keypair.public.clone(),
        signatures,
        ell: params.ell(),
        delta: claimed_delta,
        delta_l: claimed_delta_l,
        meta: Some(InstanceMeta {
            secret: keypair.secret.clone(),
            min_index: min_index(&nonces),
            nonces,
        }),
    };
    Ok(instance)
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Serialize, Deserialize)]
struct SignatureFile {
    h: String,
    r: String,
    s: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PubFile {
    Scalar(String),
    Point { x: String, y: String },
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    a: String,
    k: Vec<String>,
    min_index: usize,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    kind: SchemeKind,
    p: String,
    q: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    g: Option<String>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    curve_a: Option<String>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none", default)]
    curve_b: Option<String>,
    #[serde(rename = "Gx", skip_serializing_if = "Option::is_none", default)]
    gx: Option<String>,
    #[serde(rename = "Gy", skip_serializing_if = "Option::is_none", default)]
    gy: Option<String>,
    #[serde(rename = "pub")]
    public: PubFile,
    ell: u32,
    delta: u32,
    delta_l: u32,
    signatures: Vec<SignatureFile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    meta: Option<MetaFile>,
}

pub(crate) fn parse_dec(field: &str, value: &str) -> Result<BigUint, SchemeError> {
    BigUint::from_str(value.trim())
        .map_err(|_| SchemeError::Malformed(format!("{field}: not a decimal integer: {value:?}")))
}

fn required<'a>(field: &str, v: &'a Option<String>) -> Result<&'a str, SchemeError> {
    v.as_deref()
        .ok_or_else(|| SchemeError::Malformed(format!("missing field {field:?}")))
}

impl From<&AttackInstance> for InstanceFile {
    fn from(inst: &AttackInstance) -> Self {
        let dec = |v: &BigUint| v.to_str_radix(10);
        let (g, curve_a, curve_b, gx, gy) = match &inst.params.group {
            Group::Dsa { g } => (Some(dec(g)), None, None, None, None),
            Group::Ecdsa { curve, base } => {
                let (x, y) = match base {
                    Point::Affine { x, y } => (dec(x), dec(y)),
                    Point::Infinity => unreachable!("validated base point is affine"),
                };
                (None, Some(dec(&curve.a)), Some(dec(&curve.b)), Some(x), Some(y))
            }
        };
        let public = match &inst.public {
            PublicKey::Dsa(r) => PubFile::Scalar(dec(r)),
            PublicKey::Ecdsa(Point::Affine { x, y }) => PubFile::Point { x: dec(x), y: dec(y) },
            PublicKey::Ecdsa(Point::Infinity) => PubFile::Scalar("infinity".into()),
        };
        InstanceFile {
            kind: inst.params.kind(),
            p: dec(&inst.params.p),
            q: dec(&inst.params.q),
            g,
            curve_a,
            curve_b,
            gx,
            gy,
            public,
            ell: inst.ell,
            delta: inst.delta,
            delta_l: inst.delta_l,
            signatures: inst
                .signatures
                .iter()
                .map(|s| SignatureFile {
                    h: dec(&s.h),
                    r: dec(&s.r),
                    s: dec(&s.s),
                })
                .collect(),
            meta: inst.meta.as_ref().map(|m| MetaFile {
                a: dec(&m.secret),
                k: m.nonces.iter().map(dec).collect(),
                min_index: m.min_index,
            }),
        }
    }
}

impl InstanceFile {
    fn into_instance(self) -> Result<AttackInstance, SchemeError> {
        let p = parse_dec("p", &self.p)?;
        let q = parse_dec("q", &self.q)?;
        let (group, public) = match self.kind {
            SchemeKind::Dsa => {
                let g = parse_dec("g", required("g", &self.g)?)?;
                let PubFile::Scalar(r) = &self.public else {
                    return Err(SchemeError::Malformed("DSA pub must be a decimal string".into()));
                };
                (Group::Dsa { g }, PublicKey::Dsa(parse_dec("pub", r)?))
            }
            SchemeKind::Ecdsa => {
                let a = parse_dec("A", required("A", &self.curve_a)?)?;
                let b = parse_dec("B", required("B", &self.curve_b)?)?;
                let gx = parse_dec("Gx", required("Gx", &self.gx)?)?;
                let gy = parse_dec("Gy", required("Gy", &self.gy)?)?;
                let PubFile::Point { x, y } = &self.public else {
                    return Err(SchemeError::Malformed("ECDSA pub must be {x, y}".into()));
                };
                let point = Point::Affine {
                    x: parse_dec("pub.x", x)?,
                    y: parse_dec("pub.y", y)?,
                };
                let curve = Curve::new(p.clone(), a, b);
                if !curve.contains(&point) {
                    return Err(SchemeError::Malformed("ECDSA pub is not on the curve".into()));
                }
                (
                    Group::Ecdsa {
                        curve,
                        base: Point::Affine { x: gx, y: gy },
                    },
                    PublicKey::Ecdsa(point),
                )
            }
        };
        let params = SchemeParams { p, q, group };
        params.validate()?;

        let signatures = self
            .signatures
            .iter()
            .map(|s| {
                Ok(SignedMessage {
                    h: parse_dec("h", &s.h)?,
                    r: parse_dec("r", &s.r)?,
                    s: parse_dec("s", &s.s)?,
                })
            })
            .collect::<Result<Vec<_>, SchemeError>>()?;
        if signatures.iter().any(|s| s.h >= params.q) {
            return Err(SchemeError::Malformed("h must be reduced mod q".into()));
        }
        let meta = self
            .meta
            .map(|m| {
                Ok::<_, SchemeError>(InstanceMeta {
                    secret: parse_dec("meta.a", &m.a)?,
                    nonces: m
                        .k
                        .iter()
                        .map(|k| parse_dec("meta.k", k))
                        .collect::<Result<_, _>>()?,
                    min_index: m.min_index,
                })
            })
            .transpose()?;
        if meta.as_ref().is_some_and(|m| m.secret.is_zero()) {
            return Err(SchemeError::Malformed("meta.a must be nonzero".into()));
        }
        Ok(AttackInstance {
            params,
            public,
            signatures,
            ell: self.ell,
            delta: self.delta,
            delta_l: self.delta_l,
            meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::arith::{mod_inverse, mod_neg};
    use crate::scheme::params::{gen_curve_params, gen_group_params, CurveSpec, TOY_CURVE};
    use crate::scheme::sign::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planted(seed: u64, ell: u32, n: usize, delta: u32, delta_l: u32) -> AttackInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = gen_group_params(ell, ell + 32, &mut rng).unwrap();
        let kp = keygen(&params, &mut rng);
        let pattern = EphemeralPattern::random(&params.q, delta, delta_l, &mut rng).unwrap();
        make_instance(&params, &kp, n, &pattern, HashMode::Passthrough, &mut rng).unwrap()
    }

    #[test]
    fn planted_instance_at_full_size() {
        let inst = planted(42, 160, 7, 20, 10);
        assert_eq!(inst.signatures.len(), 8);
        inst.validate().unwrap();
        let meta = inst.meta.as_ref().unwrap();
        let min = &meta.nonces[meta.min_index];
        assert!(meta.nonces.iter().all(|k| k >= min));
        for k in &meta.nonces {
            let z = k - min;
            assert!((&z % (BigUint::one() << 10u32)).is_zero());
            assert!(z < (BigUint::one() << 150u32));
        }
        assert!(inst.signatures.iter().all(|s| s.h < inst.params.q));
    }

    #[test]
    fn signing_congruence_holds_on_planted_nonces() {
        let inst = planted(5, 64, 5, 12, 6);
        let q = &inst.params.q;
        let meta = inst.meta.as_ref().unwrap();
        for (sig, k) in inst.signatures.iter().zip(&meta.nonces) {
            let s_inv = mod_inverse(&sig.s, q).unwrap();
            let big_a = mod_neg(&(&sig.r * &s_inv % q), q);
            let big_b = mod_neg(&(&sig.h * &s_inv % q), q);
            assert!(((k + big_a * &meta.secret + big_b) % q).is_zero());
        }
    }

    #[test]
    fn n_zero_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = gen_group_params(16, 32, &mut rng).unwrap();
        let kp = keygen(&params, &mut rng);
        let pattern = EphemeralPattern::random(&params.q, 4, 2, &mut rng).unwrap();
        assert!(make_instance(&params, &kp, 0, &pattern, HashMode::Passthrough, &mut rng).is_err());
    }

    #[test]
    fn determinism_and_json_round_trip() {
        let a = planted(11, 64, 3, 8, 4);
        let b = planted(11, 64, 3, 8, 4);
        assert_eq!(a.to_json(), b.to_json());
        let back = AttackInstance::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn meta_is_optional_in_json() {
        let mut inst = planted(12, 32, 3, 8, 4);
        inst.meta = None;
        let text = inst.to_json();
        assert!(!text.contains("meta"));
        assert_eq!(AttackInstance::from_json(&text).unwrap(), inst);
    }

    #[test]
    fn ecdsa_instance_round_trip_and_hashed_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = gen_curve_params(&CurveSpec::Preset(TOY_CURVE.into())).unwrap();
        let kp = keygen(&params, &mut rng);
        let pattern = EphemeralPattern::random(&params.q, 8, 4, &mut rng).unwrap();
        let inst = make_instance(&params, &kp, 3, &pattern, HashMode::Hashed, &mut rng).unwrap();
        inst.validate().unwrap();
        let text = inst.to_json();
        assert!(text.contains("\"Gx\""));
        assert_eq!(AttackInstance::from_json(&text).unwrap(), inst);
    }

    #[test]
    fn malformed_json_is_rejected() {
        let inst = planted(13, 32, 3, 8, 4);
        let text = inst.to_json();
        assert!(AttackInstance::from_json(&text[..text.len() / 2]).is_err());
        let tampered = text.replacen("\"s\": \"", "\"s\": \"1", 1);
        assert!(AttackInstance::from_json(&tampered).is_err());
        let not_dec = text.replacen("\"q\": \"", "\"q\": \"x", 1);
        assert!(matches!(AttackInstance::from_json(&not_dec), Err(SchemeError::Malformed(_))));
    }

    #[test]
    fn uniform_instance_verifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = gen_group_params(64, 96, &mut rng).unwrap();
        let kp = keygen(&params, &mut rng);
        let inst = make_uniform_instance(&params, &kp, 7, 20, 10, HashMode::Passthrough, &mut rng)
            .unwrap();
        inst.validate().unwrap();
        assert_eq!(inst.delta, 20);
    }
}
