//! Deterministic lattice key recovery for (EC)DSA when the ephemeral keys of
//! several signatures share blocks of high and low bits.
//!
//! The pipeline: [`scheme`] signs and plants instances, [`lattice`] builds and
//! reduces the attack lattices exactly, [`enumeration`] lists every lattice
//! point in a ball around the target, and [`attack`] turns those points into
//! candidate keys. [`harness`] runs seeded campaigns and the CLI.

pub mod scheme;
pub mod lattice;
pub mod enumeration;
pub mod attack;
pub mod harness;
