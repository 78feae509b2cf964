//! Ephemeral keys that agree on a block of most-significant bits and a block
//! of least-significant bits, with every other bit drawn uniformly.
//!
//! For `ell`-bit keys the layout is
//!
//! ```text
//!   | msb_bits (delta_m) | free (ell - delta) | lsb_bits (delta_l) |
//!   bit ell-1                                                  bit 0
//! ```
//!
//! so any two keys differ by a multiple of `2^delta_l` smaller than
//! `2^{ell - delta_m}`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use super::params::SchemeParams;
use super::SchemeError;

/// Draws allowed per key before giving up on `0 < k < q`.
pub const RESAMPLE_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EphemeralPattern {
    pub ell: u32,
    pub delta: u32,
    pub delta_l: u32,
    /// Shared top block, `delta_m` bits wide.
    pub msb_bits: BigUint,
    /// Shared bottom block, `delta_l` bits wide.
    pub lsb_bits: BigUint,
}

impl EphemeralPattern {
    pub fn new(
        ell: u32,
        delta: u32,
        delta_l: u32,
        msb_bits: BigUint,
        lsb_bits: BigUint,
    ) -> Result<Self, SchemeError> {
        let pattern = EphemeralPattern {
            ell,
            delta,
            delta_l,
            msb_bits,
            lsb_bits,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn delta_m(&self) -> u32 {
        self.delta - self.delta_l
    }

    /// Number of bits left uniform.
    pub fn free_bits(&self) -> u32 {
        self.ell.saturating_sub(self.delta)
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: String| Err(SchemeError::InvalidPattern(m));
        if self.delta == 0 {
            return bad("delta must be positive".into());
        }
        if self.delta_l > self.delta {
            return bad(format!("delta_l = {} exceeds delta = {}", self.delta_l, self.delta));
        }
        if self.delta >= self.ell {
            return bad(format!(
                "delta = {} leaves no free bit in {}-bit keys",
                self.delta, self.ell
            ));
        }
        if self.msb_bits.bits() > self.delta_m() as u64 {
            return bad(format!("msb_bits wider than delta_m = {}", self.delta_m()));
        }
        if self.lsb_bits.bits() > self.delta_l as u64 {
            return bad(format!("lsb_bits wider than delta_l = {}", self.delta_l));
        }
        Ok(())
    }

    /// Random shared blocks for keys below `q`. The top block is drawn strictly
    /// below the top `delta_m` bits of `q`, so every completion is `< q`.
    pub fn random<R: Rng + ?Sized>(
        q: &BigUint,
        delta: u32,
        delta_l: u32,
        rng: &mut R,
    ) -> Result<Self, SchemeError> {
        let ell = q.bits() as u32;
        if delta_l > delta || delta == 0 || delta >= ell {
            return EphemeralPattern::new(ell, delta, delta_l, BigUint::zero(), BigUint::zero());
        }
        let delta_m = delta - delta_l;
        let msb_bits = if delta_m == 0 {
            BigUint::zero()
        } else {
            let q_prefix = q >> (ell - delta_m);
            rng.gen_biguint_below(&q_prefix)
        };
        let lsb_bits = rng.gen_biguint(delta_l as u64);
        EphemeralPattern::new(ell, delta, delta_l, msb_bits, lsb_bits)
    }

    /// Fill the free middle bits with `free` (at most `free_bits()` wide).
    pub fn compose(&self, free: &BigUint) -> BigUint {
        let top_shift = self.ell - self.delta_m();
        (&self.msb_bits << top_shift) | (free << self.delta_l) | &self.lsb_bits
    }

    /// True when `k` carries both shared blocks.
    pub fn matches(&self, k: &BigUint) -> bool {
        if k.bits() > self.ell as u64 {
            return false;
        }
        let top_shift = self.ell - self.delta_m();
        let low_mask = (BigUint::one() << self.delta_l) - 1u32;
        (k >> top_shift) == self.msb_bits && (k & low_mask) == self.lsb_bits
    }
}

/// One key following `pattern`, resampled until `0 < k < q`.
pub fn sample_shared_ephemeral<R: Rng + ?Sized>(
    params: &SchemeParams,
    pattern: &EphemeralPattern,
    rng: &mut R,
) -> Result<BigUint, SchemeError> {
    pattern.validate()?;
    if pattern.ell != params.ell() {
        return Err(SchemeError::InvalidPattern(format!(
            "pattern is for {}-bit keys but q has {} bits",
            pattern.ell,
            params.ell()
        )));
    }
    for _ in 0..RESAMPLE_BUDGET {
        let free = rng.gen_biguint(pattern.free_bits() as u64);
        let k = pattern.compose(&free);
        if !k.is_zero() && k < params.q {
            return Ok(k);
        }
    }
    Err(SchemeError::ResampleBudget(RESAMPLE_BUDGET))
}

/// `count` keys sharing the top `delta_m` and bottom `delta_l` bits.
pub fn sample_shared_ephemerals<R: Rng + ?Sized>(
    params: &SchemeParams,
    pattern: &EphemeralPattern,
    count: usize,
    rng: &mut R,
) -> Result<Vec<BigUint>, SchemeError> {
    if count < 2 {
        return Err(SchemeError::InvalidPattern(format!(
            "need at least 2 keys, got {count}"
        )));
    }
    (0..count)
        .map(|_| sample_shared_ephemeral(params, pattern, rng))
        .collect()
}
