use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::attack::{CandidateFilter, Reduction, DEFAULT_SHELLS};
use crate::enumeration::DEFAULT_NODE_BUDGET;
use crate::scheme::{CurveSpec, HashMode, SchemeKind};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("instance generation failed: {0}")]
    Generation(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonceModel {
    /// Planted: all nonces share the top `delta - delta_L` and bottom `delta_L` bits.
    #[default]
    Shared,
    /// Negative control: independent uniform nonces.
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionKind {
    Lll,
    #[default]
    Bkz,
}

fn default_block() -> usize {
    8
}
fn default_p_bits() -> u32 {
    1024
}
fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}
fn default_shells() -> u32 {
    DEFAULT_SHELLS
}
fn default_true() -> bool {
    true
}
fn default_kind() -> SchemeKind {
    SchemeKind::Dsa
}

/// Accepts `"123"` as well as `123`.
fn seed_from_any<'de, D: Deserializer<'de>>(de: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(u64),
        Str(String),
    }
    match Raw::deserialize(de)? {
        Raw::Num(v) => Ok(v),
        Raw::Str(s) => s.trim().parse().map_err(serde::de::Error::custom),
    }
}

fn seed_to_string<S: serde::Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// One experiment: `trials` seeded instances attacked with the same settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CampaignConfig {
    /// Bit length of `q`.
    pub ell: u32,
    pub delta: u32,
    /// Defaults to `delta / 2`.
    #[serde(default, alias = "delta_l")]
    pub delta_l: Option<u32>,
    /// Number of signatures, `n + 1`.
    pub signatures: usize,
    pub trials: usize,
    #[serde(deserialize_with = "seed_from_any", serialize_with = "seed_to_string")]
    pub seed: u64,
    #[serde(default)]
    pub reduction: ReductionKind,
    #[serde(default = "default_block")]
    pub block: usize,
    #[serde(default = "default_true", alias = "min_index_known")]
    pub min_index_known: bool,
    #[serde(default = "default_kind")]
    pub scheme: SchemeKind,
    /// Curve for ECDSA campaigns.
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    /// Bit length of `p` for generated DSA groups.
    #[serde(default = "default_p_bits", alias = "p_bits")]
    pub p_bits: u32,
    #[serde(default = "default_budget", alias = "node_budget")]
    pub node_budget: u64,
    #[serde(default)]
    pub nonces: NonceModel,
    #[serde(default)]
    pub filter: CandidateFilter,
    /// Radius passes per enumeration; 0 searches the ball in one pass.
    #[serde(default = "default_shells")]
    pub shells: u32,
    #[serde(default, alias = "hash_mode")]
    pub hash_mode: HashMode,
    /// Prefix for `<prefix>.csv` and `<prefix>.json`.
    #[serde(default, alias = "output_path", alias = "output")]
    pub output_path: Option<PathBuf>,
}

impl CampaignConfig {
    /// Defaults for a planted DSA campaign.
    pub fn new(ell: u32, delta: u32, signatures: usize, trials: usize, seed: u64) -> Self {
        CampaignConfig {
            ell,
            delta,
            delta_l: None,
            signatures,
            trials,
            seed,
            reduction: ReductionKind::Bkz,
            block: default_block(),
            min_index_known: true,
            scheme: SchemeKind::Dsa,
            curve: None,
            p_bits: default_p_bits(),
            node_budget: DEFAULT_NODE_BUDGET,
            nonces: NonceModel::Shared,
            filter: CandidateFilter::default(),
            shells: DEFAULT_SHELLS,
            hash_mode: HashMode::Passthrough,
            output_path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: CampaignConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn delta_l(&self) -> u32 {
        self.delta_l.unwrap_or(self.delta / 2)
    }

    pub fn reduction(&self) -> Reduction {
        match self.reduction {
            ReductionKind::Lll => Reduction::Lll,
            ReductionKind::Bkz => Reduction::Bkz(self.block),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.signatures < 2 {
            return bad(format!("signatures must be >= 2, got {}", self.signatures));
        }
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.delta == 0 {
            return bad("delta must be positive".into());
        }
        if !(self.delta_l() <= self.delta && self.delta < self.ell) {
            return bad(format!(
                "need 0 <= delta_L <= delta < ell, got delta_L={} delta={} ell={}",
                self.delta_l(),
                self.delta,
                self.ell
            ));
        }
        if self.reduction == ReductionKind::Bkz && self.block < 2 {
            return bad(format!("block size must be >= 2, got {}", self.block));
        }
        match self.scheme {
            SchemeKind::Dsa => {
                if self.ell < 2 || self.ell >= self.p_bits {
                    return bad(format!("need 2 <= ell < pBits, got ell={} pBits={}", self.ell, self.p_bits));
                }
            }
            SchemeKind::Ecdsa => {
                if self.curve.is_none() {
                    return bad("ECDSA campaigns need a curve".into());
                }
            }
        }
        if self.node_budget == 0 {
            return bad("nodeBudget must be positive".into());
        }
        Ok(())
    }
}
