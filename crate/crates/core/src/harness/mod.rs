//! Seeded campaigns over generated instances, and the table runner.
//!
//! A trial is a pure function of `(config, trial index)` apart from its wall
//! time: the trial seed is `mix64`-derived and drives group, key, nonce and
//! message generation.

mod campaign;
mod config;
mod table1;

pub use campaign::{
    mix64, resolve_workers, run_campaign, run_trial, run_trial_with, trial_instance, trial_seed, Aggregate,
    CampaignReport, TrialRow, CSV_HEADER,
};
pub use config::{CampaignConfig, HarnessError, NonceModel, ReductionKind};
pub use table1::{render_table1, table1, Table1Options, Table1Row, TABLE1_ELL, TABLE1_ROWS};
