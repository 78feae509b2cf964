//! Key recovery from signatures whose nonces share their top `delta_M` and
//! bottom `delta_L` bits.
//!
//! For each candidate minimum index `i` the attack builds `J_i` and `v_i`,
//! reduces the basis, and walks every lattice point within `R = 2^ell sqrt(n+1)`
//! of `v_i`. The last coordinate of each point gives a key candidate.

mod build;
mod check;
mod linear;
mod mont;

use std::collections::HashSet;
use std::time::Instant;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::enumeration::{
    count_bound, BallQuery, EnumError, Enumerator, Execution, Flow, Leaf, Visitor, DEFAULT_NODE_BUDGET, INFLATION,
};
use crate::lattice::{bkz_reduce, default_delta, det_abs, gso, lll_reduce, sv_lower_bound, Basis, LatticeError};
use crate::scheme::AttackInstance;

pub use build::{
    build_lattice, build_target, check_hypothesis2, compute_coeffs, extract_candidates, planted_vector, radius_sq,
    shifted_coeffs, CoeffSet, Hypothesis2, ShiftedCoeffs,
};
pub use check::{verify_candidate, CandidateFilter, KeyCheck};

use check::{Congruences, FastCongruences, LevelPowers};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Lll,
    /// BKZ with this block size; clamped to the lattice dimension.
    Bkz(usize),
}

impl Default for Reduction {
    fn default() -> Self {
        Reduction::Bkz(8)
    }
}

impl std::fmt::Display for Reduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reduction::Lll => write!(f, "lll"),
            Reduction::Bkz(b) => write!(f, "bkz-{b}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackOptions {
    pub reduction: Reduction,
    pub delta_lll: BigRational,
    pub min_index_hint: Option<usize>,
    /// Node cap for each index's enumeration.
    pub node_budget: u64,
    pub filter: CandidateFilter,
    /// Search the ball in `shells + 1` passes of radius `R 2^{-k/4}`,
    /// `k = shells, ..., 0`, each testing only the points the previous pass
    /// did not reach. Every point of the ball is still tested once; 0 is a
    /// single pass.
    pub shells: u32,
    pub execution: Execution,
}

pub const DEFAULT_SHELLS: u32 = 8;

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            reduction: Reduction::default(),
            delta_lll: default_delta(),
            min_index_hint: None,
            node_budget: DEFAULT_NODE_BUDGET,
            filter: CandidateFilter::default(),
            shells: DEFAULT_SHELLS,
            execution: Execution::default(),
        }
    }
}

fn as_decimal<S: Serializer, T: ToString>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn as_opt_decimal<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_none(),
    }
}

/// Diagnostics for one candidate minimum index.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexReport {
    pub index: usize,
    pub hypothesis2_holds: bool,
    pub hypothesis2_margin: f64,
    /// Lattice points in the closed ball that were visited.
    pub points_enumerated: u64,
    pub nodes_visited: u64,
    /// Points that passed the coordinate box, when a filter is active.
    pub box_candidates: u64,
    /// Candidates that reached the public-key test.
    pub keys_tested: u64,
    /// Lemma 2.1 forecast with the certified `s(L)` lower bound.
    pub count_bound: f64,
    /// The reduced basis passed the exact size-reduction, Lovász, determinant
    /// and halving-chain checks.
    pub reduction_ok: bool,
    pub reduction_ms: f64,
    pub enumeration_ms: f64,
    pub wall_ms: f64,
    pub found: bool,
    pub budget_exceeded: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttackReport {
    pub success: bool,
    #[serde(serialize_with = "as_opt_decimal")]
    pub a: Option<BigUint>,
    pub i_star: Option<usize>,
    pub per_index: Vec<IndexReport>,
    #[serde(serialize_with = "as_decimal")]
    pub radius_sq: BigInt,
    pub reduction: String,
    pub wall_ms: f64,
}

impl AttackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("no candidate matched the public key")]
    KeyNotFound(Box<AttackReport>),
    #[error("node budget exhausted at index {index}")]
    BudgetExceeded { index: usize, report: Box<AttackReport> },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl AttackError {
    /// The partial report carried by search failures.
    pub fn report(&self) -> Option<&AttackReport> {
        match self {
            AttackError::KeyNotFound(r) | AttackError::BudgetExceeded { report: r, .. } => Some(r),
            _ => None,
        }
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Reduce `basis` as requested.
pub fn reduce(basis: &Basis, reduction: Reduction, delta: &BigRational) -> Result<Basis, LatticeError> {
    match reduction {
        Reduction::Bkz(block) if basis.dim() >= 2 => bkz_reduce(basis, block.clamp(2, basis.dim()), delta),
        _ => lll_reduce(basis, delta),
    }
}

/// Exact checks on a reduced basis against the original one.
pub fn reduction_invariants_hold(original: &Basis, reduced: &Basis, delta: &BigRational) -> bool {
    let Ok(g) = gso(reduced) else {
        return false;
    };
    g.is_size_reduced()
        && g.satisfies_lovasz(delta)
        && g.satisfies_halving_chain()
        && det_abs(original) == det_abs(reduced)
}

struct IndexCtx<'a> {
    e: Enumerator,
    /// Squared radius of the previous pass, exactly and as a fraction of
    /// this pass's inflated one.
    inner: Option<(BigInt, f64)>,
    key: &'a KeyCheck,
    congruences: &'a Congruences,
    fast: Option<&'a FastCongruences>,
    levels: Option<&'a LevelPowers>,
    filter: CandidateFilter,
    n: usize,
    q: BigInt,
    /// `2^ell`, slightly widened, for the floating-point prefilter.
    box_f: f64,
    q_f: f64,
    two_ell: f64,
    /// `2^{-(delta_M + 1)}`.
    addend_scale: f64,
    /// `2^{ell - delta_M}`, slightly widened.
    top_room: f64,
}

struct KeyVisitor<'c, 'a> {
    ctx: &'c IndexCtx<'a>,
    points: u64,
    boxed: u64,
    tested: u64,
    seen: HashSet<BigUint>,
    found: Option<BigUint>,
}

impl KeyVisitor<'_, '_> {
    /// The box, shared-bits and key tests in fixed width.
    fn fast_candidate(&mut self, f: &FastCongruences, y: &[i64], widest: f64) -> Flow {
        let ctx = self.ctx;
        let Some(a) = f.key(y) else {
            return Flow::Continue;
        };
        self.boxed += 1;
        let mut k_i = None;
        if ctx.filter == CandidateFilter::SharedBits {
            let k = f.k_min(y);
            let low = f.below_top(&k).to_f64();
            if (widest + ctx.two_ell) * ctx.addend_scale + low >= ctx.top_room {
                return Flow::Continue;
            }
            k_i = Some(k);
        }
        if !f.residues_ok(y, k_i.as_ref()) {
            return Flow::Continue;
        }
        self.tested += 1;
        let bytes = a.to_bytes_le();
        let hit = ctx
            .levels
            .and_then(|l| l.check(y))
            .unwrap_or_else(|| ctx.key.check_le(&bytes));
        if hit {
            self.found = Some(BigUint::from_bytes_le(&bytes));
            return Flow::Stop;
        }
        Flow::Continue
    }

    fn test(&mut self, a: BigUint) -> Flow {
        self.tested += 1;
        if self.ctx.key.check(&a) {
            self.found = Some(a);
            return Flow::Stop;
        }
        Flow::Continue
    }
}

impl Visitor for KeyVisitor<'_, '_> {
    fn leaf(&mut self, leaf: &Leaf<'_>) -> Flow {
        let ctx = self.ctx;
        let e = &ctx.e;
        if leaf.dist >= e.certain_below() && !e.in_ball(leaf.offset) {
            return Flow::Continue;
        }
        if let Some((inner_sq, frac)) = &ctx.inner {
            let slack = 1.0 - e.certain_below();
            if leaf.dist <= frac - slack
                || (leaf.dist < frac + slack && &e.exact_dist_sq(leaf.offset) <= inner_sq)
            {
                return Flow::Continue;
            }
        }
        self.points += 1;
        if ctx.filter == CandidateFilter::None {
            let last = e.exact_last(leaf.offset);
            let a = num_integer::Integer::mod_floor(&-last, &ctx.q)
                .to_biguint()
                .expect("reduced mod q");
            if self.seen.insert(a.clone()) {
                return self.test(a);
            }
            return Flow::Continue;
        }
        let last = leaf.diff(ctx.n);
        let slack = ctx.q_f / 65536.0;
        if last >= slack || last <= -ctx.q_f - slack {
            return Flow::Continue;
        }
        let mut widest = f64::NEG_INFINITY;
        for j in 0..ctx.n {
            let x = leaf.diff(j);
            if x.abs() >= ctx.box_f {
                return Flow::Continue;
            }
            widest = widest.max(x);
        }
        if let Some(f) = ctx.fast {
            return self.fast_candidate(f, leaf.offset, widest);
        }
        let a = -e.exact_last(leaf.offset);
        if a.sign() != Sign::Plus || a >= ctx.q {
            return Flow::Continue;
        }
        self.boxed += 1;
        let shared = ctx.filter == CandidateFilter::SharedBits;
        let mut k_i = None;
        if shared {
            // the largest addend 2^{delta_L} z'_j = (u_j - v_j + 2^ell) / 2^{delta_M + 1}
            // must not carry into the shared top block
            let k = ctx.congruences.k_min(&a);
            let low = ctx.congruences.below_top(&k).to_f64().unwrap_or(f64::INFINITY);
            if (widest + ctx.two_ell) * ctx.addend_scale + low >= ctx.top_room {
                return Flow::Continue;
            }
            k_i = Some(k);
        }
        let Some(z) = ctx.congruences.box_residues(&a) else {
            return Flow::Continue;
        };
        if let Some(k) = k_i {
            if !ctx.congruences.shared_bits(&k, &z) {
                return Flow::Continue;
            }
        }
        self.test(a.to_biguint().expect("positive"))
    }
}

/// `isqrt(R^4 / 2^k)` for `k = shells, ..., 0`, without repeats; the last is `R^2`.
fn shell_radii(r_sq: &BigInt, shells: u32) -> Vec<BigInt> {
    let r4 = r_sq * r_sq;
    let mut out: Vec<BigInt> = Vec::new();
    for k in (0..=shells.min(64)).rev() {
        let r = if k == 0 { r_sq.clone() } else { (&r4 >> k as usize).sqrt() };
        if out.last() != Some(&r) {
            out.push(r);
        }
    }
    out
}

/// Run the attack; see the module docs.
pub fn recover_key(instance: &AttackInstance, opts: &AttackOptions) -> Result<AttackReport, AttackError> {
    let start = Instant::now();
    instance
        .validate()
        .map_err(|e| AttackError::InvalidInstance(e.to_string()))?;
    let n = instance.n();
    let (ell, delta, delta_l) = (instance.ell, instance.delta, instance.delta_l);
    if !(delta_l <= delta && delta < ell) {
        return Err(AttackError::InvalidInstance(format!(
            "need 0 <= delta_L <= delta < ell, got delta_L={delta_l} delta={delta} ell={ell}"
        )));
    }
    if let Some(h) = opts.min_index_hint {
        if h > n {
            return Err(AttackError::InvalidInstance(format!("min index hint {h} exceeds n = {n}")));
        }
    }
    let q = &instance.params.q;
    let coeffs = compute_coeffs(instance)?;
    let key = KeyCheck::new(&instance.params, &instance.public);
    let r_sq = radius_sq(ell, n);
    let radius = (2.0f64).powi(ell as i32) * ((n + 1) as f64).sqrt();
    let mut report = AttackReport {
        success: false,
        a: None,
        i_star: None,
        per_index: Vec::new(),
        radius_sq: r_sq.clone(),
        reduction: opts.reduction.to_string(),
        wall_ms: 0.0,
    };
    let indices: Vec<usize> = match opts.min_index_hint {
        Some(h) => vec![h],
        None => (0..=n).collect(),
    };

    for i in indices {
        let t0 = Instant::now();
        let shifted = shifted_coeffs(&coeffs, i, delta_l, q);
        let lattice = build_lattice(&shifted.c, q, delta)?;
        let reduced = reduce(&lattice, opts.reduction, &opts.delta_lll)?;
        let reduction_ok = reduction_invariants_hold(&lattice, &reduced, &opts.delta_lll);
        let reduction_ms = ms_since(t0);
        let hyp = check_hypothesis2(&reduced, q, delta, n)?;
        let s_lower = sv_lower_bound(&gso(&reduced)?).norm();
        let forecast = count_bound(radius, s_lower, n + 1).unwrap_or(f64::INFINITY);

        let t1 = Instant::now();
        let target = build_target(&shifted.d, delta, ell);
        let query = BallQuery::new(reduced, target, r_sq.clone()).map_err(|e| match e {
            EnumError::Lattice(l) => AttackError::Lattice(l),
            other => AttackError::InvalidInstance(other.to_string()),
        })?;
        let congruences = Congruences::new(&coeffs, &shifted, q, ell, delta, delta_l);
        let full = Enumerator::new(&query);
        let (last_base, last_col) = full.last_coordinate();
        let fast = congruences.fast(last_base, last_col);
        let levels = full
            .offset_bounds()
            .and_then(|b| key.level_powers(last_base, last_col, &b));
        let mut entry = IndexReport {
            index: i,
            hypothesis2_holds: hyp.holds,
            hypothesis2_margin: hyp.margin,
            points_enumerated: 0,
            nodes_visited: 0,
            box_candidates: 0,
            keys_tested: 0,
            count_bound: forecast,
            reduction_ok,
            reduction_ms,
            enumeration_ms: 0.0,
            wall_ms: 0.0,
            found: false,
            budget_exceeded: false,
        };
        let mut found = None;
        let mut inner: Option<BigInt> = None;
        for r_sq_k in shell_radii(&r_sq, opts.shells) {
            let e = full.with_radius(r_sq_k.clone());
            let frac = |inner: &BigInt| {
                inner.to_f64().unwrap_or(f64::INFINITY) / (r_sq_k.to_f64().unwrap_or(f64::INFINITY) * INFLATION)
            };
            let ctx = IndexCtx {
                inner: inner.take().map(|r| {
                    let f = frac(&r);
                    (r, f)
                }),
                e,
                key: &key,
                congruences: &congruences,
                fast: fast.as_ref(),
                levels: levels.as_ref(),
                filter: opts.filter,
                n,
                q: BigInt::from_biguint(Sign::Plus, q.clone()),
                box_f: (2.0f64).powi(ell as i32) * (1.0 + 1.0 / 65536.0),
                q_f: q.to_f64().unwrap_or(f64::INFINITY),
                two_ell: (2.0f64).powi(ell as i32),
                addend_scale: (2.0f64).powi(-((delta - delta_l) as i32 + 1)),
                top_room: (2.0f64).powi((ell - (delta - delta_l)) as i32) * (1.0 + 1.0 / 65536.0),
            };
            let make = || KeyVisitor {
                ctx: &ctx,
                points: 0,
                boxed: 0,
                tested: 0,
                seen: HashSet::new(),
                found: None,
            };
            let budget = opts.node_budget.saturating_sub(entry.nodes_visited);
            match ctx.e.run(make, budget, opts.execution) {
                Err(EnumError::BudgetExceeded { nodes }) => {
                    entry.nodes_visited += nodes;
                    entry.budget_exceeded = true;
                    entry.enumeration_ms = ms_since(t1);
                    entry.wall_ms = ms_since(t0);
                    report.per_index.push(entry);
                    report.wall_ms = ms_since(start);
                    return Err(AttackError::BudgetExceeded {
                        index: i,
                        report: Box::new(report),
                    });
                }
                Err(other) => return Err(AttackError::InvalidInstance(other.to_string())),
                Ok(outcome) => {
                    entry.nodes_visited += outcome.nodes;
                    for v in outcome.visitors {
                        entry.points_enumerated += v.points;
                        entry.box_candidates += v.boxed;
                        entry.keys_tested += v.tested;
                        if found.is_none() {
                            found = v.found;
                        }
                    }
                }
            }
            if found.is_some() {
                break;
            }
            inner = Some(r_sq_k);
        }
        entry.enumeration_ms = ms_since(t1);
        entry.wall_ms = ms_since(t0);
        entry.found = found.is_some();
        report.per_index.push(entry);
        if let Some(a) = found {
            debug_assert!(verify_candidate(&instance.params, &instance.public, &a));
            report.success = true;
            report.a = Some(a);
            report.i_star = Some(i);
            report.wall_ms = ms_since(start);
            return Ok(report);
        }
    }
    report.wall_ms = ms_since(start);
    Err(AttackError::KeyNotFound(Box::new(report)))
}
