//! Schoolbook DSA and ECDSA with caller-controlled randomness, plus the
//! shared-bit nonce sampler used to plant attack instances.

pub mod arith;
pub mod ec;
mod instance;
mod nonce;
mod params;
mod sign;

use thiserror::Error;

pub use ec::{Curve, Point};
pub use instance::{make_instance, make_uniform_instance, AttackInstance, HashMode, InstanceMeta};
pub use nonce::{
    sample_shared_ephemeral, sample_shared_ephemerals, EphemeralPattern, RESAMPLE_BUDGET,
};
pub use params::{gen_curve_params, gen_group_params, CurveSpec, Group, SchemeKind, SchemeParams, TOY_CURVE};
pub use sign::{
    keygen, keypair_from_secret, public_from_secret, sign, verify, KeyPair, PublicKey,
    SignedMessage,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no suitable prime pair found after {0} attempts")]
    GenerationFailed(usize),
    #[error("private key outside [1, q-1]")]
    KeyOutOfRange,
    #[error("nonce outside [1, q-1]")]
    NonceOutOfRange,
    #[error("hash value not reduced mod q")]
    HashOutOfRange,
    #[error("r or s is zero; draw a fresh nonce")]
    RetryNeeded,
    #[error("invalid nonce pattern: {0}")]
    InvalidPattern(String),
    #[error("nonce resampling budget of {0} draws exhausted")]
    ResampleBudget(usize),
    #[error("malformed instance: {0}")]
    Malformed(String),
}
