//! Every lattice point in a closed ball `{u in L : |u - v|^2 <= R^2}`.
//!
//! The search ([`Enumerator`]) works in floating point on a radius inflated by
//! `1 + 2^-20` and every point it reports through [`enumerate_ball`] is
//! rechecked in exact integers. The visitor interface lets the attack stream
//! leaves without materialising them.

mod engine;

use num_bigint::BigInt;
use num_traits::Signed;
use thiserror::Error;

use crate::lattice::{Basis, GsoData, IntegralGso, LatticeError};

pub use engine::{Enumerator, Execution, Flow, Leaf, Outcome, Visitor, INFLATION};

/// Default cap on search-tree nodes per query.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("target has {got} coordinates, basis dimension is {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("radius squared must be nonnegative")]
    NegativeRadius,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("node budget exhausted after {nodes} nodes")]
    BudgetExceeded { nodes: u64 },
    #[error("shortest-vector lower bound must be positive")]
    NonPositiveBound,
}

#[derive(Clone, Debug)]
pub struct BallQuery {
    basis: Basis,
    gso: IntegralGso,
    target: Vec<BigInt>,
    radius_sq: BigInt,
}

impl BallQuery {
    pub fn new(basis: Basis, target: Vec<BigInt>, radius_sq: BigInt) -> Result<Self, EnumError> {
        if target.len() != basis.dim() {
            return Err(EnumError::DimensionMismatch {
                want: basis.dim(),
                got: target.len(),
            });
        }
        if radius_sq.is_negative() {
            return Err(EnumError::NegativeRadius);
        }
        let gso = IntegralGso::compute(&basis)?;
        Ok(BallQuery {
            basis,
            gso,
            target,
            radius_sq,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn gso(&self) -> GsoData {
        self.gso.to_rational()
    }

    pub fn target(&self) -> &[BigInt] {
        &self.target
    }

    pub fn radius_sq(&self) -> &BigInt {
        &self.radius_sq
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BallPoint {
    pub coeffs: Vec<BigInt>,
    pub point: Vec<BigInt>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    pub node_budget: u64,
    pub execution: Execution,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub nodes: u64,
}

struct Collect<'e> {
    e: &'e Enumerator,
    found: Vec<BallPoint>,
}

impl Visitor for Collect<'_> {
    fn leaf(&mut self, leaf: &Leaf<'_>) -> Flow {
        if self.e.in_ball(leaf.offset) {
            self.found.push(BallPoint {
                coeffs: self.e.coeffs(leaf.offset),
                point: self.e.exact_point(leaf.offset),
            });
        }
        Flow::Continue
    }
}

/// All lattice points in the ball, sorted by coefficient vector.
pub fn enumerate_ball(query: &BallQuery) -> Result<Vec<BallPoint>, EnumError> {
    enumerate_ball_with(query, &EnumOptions::default()).map(|(p, _)| p)
}

pub fn enumerate_ball_with(
    query: &BallQuery,
    opts: &EnumOptions,
) -> Result<(Vec<BallPoint>, EnumStats), EnumError> {
    let e = Enumerator::new(query);
    let out = e.run(
        || Collect {
            e: &e,
            found: Vec::new(),
        },
        opts.node_budget,
        opts.execution,
    )?;
    let mut points: Vec<BallPoint> = out.visitors.into_iter().flat_map(|c| c.found).collect();
    points.sort();
    for p in &points {
        let dist: BigInt = p
            .point
            .iter()
            .zip(&query.target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(dist <= query.radius_sq, "emitted point outside the ball");
    }
    Ok((points, EnumStats { nodes: out.nodes }))
}

/// `(2R / s + 1)^d`, an upper bound on the number of lattice points in any ball
/// of radius `R` when `s` is at most the shortest nonzero vector length.
pub fn count_bound(radius: f64, sl_lower: f64, d: usize) -> Result<f64, EnumError> {
    if !(sl_lower > 0.0) {
        return Err(EnumError::NonPositiveBound);
    }
    Ok((2.0 * radius / sl_lower + 1.0).powi(d as i32))
}
