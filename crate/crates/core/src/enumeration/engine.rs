//! Schnorr–Euchner depth-first search in floating point over exactly
//! prepared data.
//!
//! The exact Babai point `x0` is subtracted first, so the search runs on
//! small offsets `y = x - x0` whose centers all lie within a few units of 0.
//! Distances are normalised by the inflated radius, so a node is kept when
//! its partial distance is at most 1.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{BallQuery, EnumError};

/// `1 + 2^-20`, applied to `R^2` before any floating-point pruning.
pub const INFLATION: f64 = 1.0 + 1.0 / 1_048_576.0;

/// Roots gathered above the split level before subtrees are handed out.
const SPLIT_TARGET: usize = 256;

/// Nodes a walker may count locally before settling with the shared budget.
const FLUSH_EVERY: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// How subtrees are scheduled. Both produce identical results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// A leaf of the search tree: a candidate point inside the inflated ball.
pub struct Leaf<'a> {
    /// Offset coefficients `y`; the lattice coefficients are `x0 + y`.
    pub offset: &'a [i64],
    /// `|u - v|^2 / (R^2 (1 + 2^-20))` in floating point.
    pub dist: f64,
    partial: &'a [f64],
    first_row: &'a [f64],
}

impl Leaf<'_> {
    /// Coordinate `j` of `u - v` in floating point.
    #[inline]
    pub fn diff(&self, j: usize) -> f64 {
        self.partial[j] + self.offset[0] as f64 * self.first_row[j]
    }
}

pub trait Visitor: Send {
    fn leaf(&mut self, leaf: &Leaf<'_>) -> Flow;
}

/// Visitors of the subtrees that count towards the result, in search order.
pub struct Outcome<V> {
    pub visitors: Vec<V>,
    pub nodes: u64,
    pub stopped: bool,
}

/// Search data for one [`BallQuery`].
#[derive(Clone)]
pub struct Enumerator {
    d: usize,
    basis: Vec<Vec<BigInt>>,
    target: Vec<BigInt>,
    radius_sq: BigInt,
    babai: Vec<BigInt>,
    /// `v - x0 B`.
    residual: Vec<BigInt>,
    /// Last coordinate of `x0 B`, and the last column of `B`.
    last_base: BigInt,
    last_col: Vec<BigInt>,
    r: Vec<f64>,
    /// `|b*_i|^2` and their minimum.
    norms: Vec<f64>,
    min_norm: f64,
    /// `mu[j][i]` for `i < j`.
    mu: Vec<Vec<f64>>,
    centre: Vec<f64>,
    rows: Vec<Vec<f64>>,
    neg_residual: Vec<f64>,
}

fn round_rational(x: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    (x.numer() * &two + x.denom()).div_floor(&(x.denom() * two))
}

impl Enumerator {
    pub fn new(query: &BallQuery) -> Self {
        let d = query.basis.dim();
        let basis = query.basis.rows().to_vec();
        let g = &query.gso;

        // mu_{v,k} = <v, b*_k> / |b*_k|^2 via the fraction-free recurrence, as if
        // v were one more row.
        let mut lam_v: Vec<BigInt> = Vec::with_capacity(d);
        for k in 0..d {
            let mut u: BigInt = query.target.iter().zip(&basis[k]).map(|(a, b)| a * b).sum();
            for i in 0..k {
                u = (&g.d[i + 1] * u - &lam_v[i] * &g.lambda[k][i]) / &g.d[i];
            }
            lam_v.push(u);
        }
        let t: Vec<BigRational> = (0..d)
            .map(|k| BigRational::new(lam_v[k].clone(), g.d[k + 1].clone()))
            .collect();
        let mu_q: Vec<Vec<BigRational>> = (0..d).map(|j| (0..j).map(|i| g.mu(j, i)).collect()).collect();

        // nearest plane from the top level down
        let mut babai = vec![BigInt::zero(); d];
        let mut centre_q = vec![BigRational::zero(); d];
        for i in (0..d).rev() {
            let mut c = t[i].clone();
            for j in i + 1..d {
                if !babai[j].is_zero() {
                    c -= &mu_q[j][i] * &babai[j];
                }
            }
            babai[i] = round_rational(&c);
            centre_q[i] = c - BigRational::from_integer(babai[i].clone());
        }

        let mut residual = query.target.clone();
        for (x, row) in babai.iter().zip(&basis) {
            if x.is_zero() {
                continue;
            }
            for (o, b) in residual.iter_mut().zip(row) {
                *o -= x * b;
            }
        }

        let norms: Vec<f64> = (0..d).map(|i| g.norm_sq(i).to_f64().unwrap_or(f64::INFINITY)).collect();
        let min_norm = (0..d).map(|i| g.norm_sq(i)).min().expect("non-empty basis");
        let min_norm = min_norm.to_f64().unwrap_or(f64::MIN_POSITIVE);
        let to_f = |v: &BigInt| v.to_f64().unwrap_or(f64::NAN);
        let last_col: Vec<BigInt> = basis.iter().map(|row| row[d - 1].clone()).collect();
        let last_base = babai.iter().zip(&last_col).map(|(x, b)| x * b).sum();
        let mut e = Enumerator {
            d,
            r: Vec::new(),
            norms,
            min_norm,
            mu: mu_q
                .iter()
                .map(|row| row.iter().map(|m| m.to_f64().unwrap_or(0.0)).collect())
                .collect(),
            centre: centre_q.iter().map(|c| c.to_f64().unwrap_or(0.0)).collect(),
            rows: basis.iter().map(|row| row.iter().map(to_f).collect()).collect(),
            neg_residual: residual.iter().map(|v| -to_f(v)).collect(),
            basis,
            target: query.target.clone(),
            radius_sq: query.radius_sq.clone(),
            babai,
            residual,
            last_base,
            last_col,
        };
        e.set_radius(query.radius_sq.clone());
        e
    }

    /// The same search around the same target with another radius.
    pub fn with_radius(&self, radius_sq: BigInt) -> Enumerator {
        let mut e = self.clone();
        e.set_radius(radius_sq);
        e
    }

    fn set_radius(&mut self, radius_sq: BigInt) {
        let scale = if radius_sq.is_zero() {
            // only the target itself can qualify; any positive scale below the
            // shortest gap keeps the search finite
            self.min_norm / 1_048_576.0
        } else {
            radius_sq.to_f64().unwrap_or(f64::INFINITY) * INFLATION
        };
        self.r = self.norms.iter().map(|n| n / scale).collect();
        self.radius_sq = radius_sq;
    }

    pub fn radius_sq(&self) -> &BigInt {
        &self.radius_sq
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Lattice coefficients `x0 + y`.
    pub fn coeffs(&self, offset: &[i64]) -> Vec<BigInt> {
        self.babai.iter().zip(offset).map(|(x, &y)| x + y).collect()
    }

    /// Exact `u - v` for the point with offset `y`.
    pub fn exact_diff(&self, offset: &[i64]) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self.residual.iter().map(|v| -v).collect();
        for (&y, row) in offset.iter().zip(&self.basis) {
            if y == 0 {
                continue;
            }
            let y = BigInt::from(y);
            for (o, b) in out.iter_mut().zip(row) {
                *o += &y * b;
            }
        }
        out
    }

    /// Exact point `u = (x0 + y) B`.
    pub fn exact_point(&self, offset: &[i64]) -> Vec<BigInt> {
        self.exact_diff(offset)
            .into_iter()
            .zip(&self.target)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn exact_dist_sq(&self, offset: &[i64]) -> BigInt {
        self.exact_diff(offset).iter().map(|v| v * v).sum()
    }

    /// Exact membership test `|u - v|^2 <= R^2`.
    pub fn in_ball(&self, offset: &[i64]) -> bool {
        self.exact_dist_sq(offset) <= self.radius_sq
    }

    /// Last coordinate of `u`, exactly.
    pub fn exact_last(&self, offset: &[i64]) -> BigInt {
        let mut acc = self.last_base.clone();
        for (&y, b) in offset.iter().zip(&self.last_col) {
            if y != 0 {
                acc += b * y;
            }
        }
        acc
    }

    /// `u_{last} = base + sum_k y_k col[k]` for offset `y`, as `(base, col)`.
    pub fn last_coordinate(&self) -> (&BigInt, &[BigInt]) {
        (&self.last_base, &self.last_col)
    }

    /// Bounds on `|y_k|` over every leaf of this search: `|y_k - c_k| <= r_k^{-1/2}`
    /// with `|c_k| <= |centre_k| + sum_{j > k} |y_j mu_{j,k}|`. `None` if a bound
    /// does not fit in an `i64`.
    pub fn offset_bounds(&self) -> Option<Vec<i64>> {
        let mut b = vec![0.0f64; self.d];
        for k in (0..self.d).rev() {
            let spread: f64 = (k + 1..self.d).map(|j| b[j] * self.mu[j][k].abs()).sum();
            b[k] = ((self.centre[k].abs() + spread + self.r[k].recip().sqrt()) * 1.001 + 1.0).ceil();
        }
        b.iter().map(|&x| (x.is_finite() && x < 4.0e18).then_some(x as i64)).collect()
    }

    /// Leaves with `dist` below this are inside the exact ball beyond any
    /// floating-point doubt; the rest need [`Enumerator::in_ball`].
    pub fn certain_below(&self) -> f64 {
        1.0 - 4.0 / 1_048_576.0
    }

    fn centre_at(&self, level: usize, y: &[i64]) -> f64 {
        let mut c = self.centre[level];
        for j in level + 1..self.d {
            c -= y[j] as f64 * self.mu[j][level];
        }
        c
    }

    /// Enumerate every leaf, handing each subtree a fresh visitor from `make`.
    pub fn run<V, F>(&self, make: F, budget: u64, exec: Execution) -> Result<Outcome<V>, EnumError>
    where
        V: Visitor,
        F: Fn() -> V + Sync,
    {
        let (roots, split, top_nodes) = self.split_roots(budget)?;
        let shared = Shared {
            limit: budget,
            used: AtomicU64::new(top_nodes),
            exceeded: AtomicBool::new(false),
            found_at: AtomicUsize::new(usize::MAX),
        };
        let work = |(idx, root): (usize, &Root)| -> Option<(V, u64, bool)> {
            if shared.found_at.load(Ordering::Relaxed) < idx || shared.exceeded.load(Ordering::Relaxed) {
                return None;
            }
            let mut w = Walker::new(self, &shared, idx, make());
            let stopped = w.start(root, split);
            if stopped {
                shared.found_at.fetch_min(idx, Ordering::Relaxed);
            }
            if w.aborted && !stopped {
                return None;
            }
            Some((w.visitor, w.nodes, stopped))
        };

        let results: Vec<Option<(V, u64, bool)>> = match exec {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                roots.par_iter().enumerate().map(work).collect()
            }
            _ => {
                let mut out = Vec::with_capacity(roots.len());
                for item in roots.iter().enumerate() {
                    let r = work(item);
                    let stop = matches!(r, Some((_, _, true)));
                    out.push(r);
                    if stop || shared.exceeded.load(Ordering::Relaxed) {
                        break;
                    }
                }
                out
            }
        };

        if shared.exceeded.load(Ordering::Relaxed) {
            return Err(EnumError::BudgetExceeded {
                nodes: shared.used.load(Ordering::Relaxed),
            });
        }
        let found_at = shared.found_at.load(Ordering::Relaxed);
        let mut outcome = Outcome {
            visitors: Vec::new(),
            nodes: top_nodes,
            stopped: found_at != usize::MAX,
        };
        for (idx, r) in results.into_iter().enumerate() {
            if idx > found_at {
                break;
            }
            let (v, nodes, _) = r.expect("subtrees before the stopping one run to completion");
            outcome.nodes += nodes;
            outcome.visitors.push(v);
        }
        Ok(outcome)
    }

    /// Breadth-first expansion of the top levels, in search order, until there
    /// are enough roots or only the leaf level is left.
    fn split_roots(&self, budget: u64) -> Result<(Vec<Root>, usize, u64), EnumError> {
        let d = self.d;
        let mut level = d;
        let mut roots = vec![Root { y: vec![0; d], dist: 0.0 }];
        let mut nodes = 0u64;
        while level > 1 && roots.len() < SPLIT_TARGET && !roots.is_empty() {
            let k = level - 1;
            let mut next = Vec::new();
            for root in &roots {
                let c = self.centre_at(k, &root.y);
                for (x, dist) in Zigzag::new(c, self.r[k], root.dist) {
                    let mut y = root.y.clone();
                    y[k] = x;
                    next.push(Root { y, dist });
                }
            }
            nodes += next.len() as u64;
            if nodes > budget {
                return Err(EnumError::BudgetExceeded { nodes });
            }
            roots = next;
            level = k;
        }
        Ok((roots, level, nodes))
    }
}

struct Root {
    y: Vec<i64>,
    dist: f64,
}

struct Shared {
    limit: u64,
    used: AtomicU64,
    exceeded: AtomicBool,
    found_at: AtomicUsize,
}

/// Values of one coefficient in order of increasing distance from `c`, while
/// the partial distance stays within 1.
struct Zigzag {
    c: f64,
    r: f64,
    base: f64,
    next: i64,
    step: i64,
    dir: i64,
}

impl Zigzag {
    fn new(c: f64, r: f64, base: f64) -> Self {
        let x = c.round();
        let dir = if c >= x { 1 } else { -1 };
        Zigzag {
            c,
            r,
            base,
            next: x as i64,
            step: dir,
            dir,
        }
    }
}

impl Iterator for Zigzag {
    type Item = (i64, f64);

    #[inline]
    fn next(&mut self) -> Option<(i64, f64)> {
        let x = self.next;
        let e = x as f64 - self.c;
        let dist = self.base + e * e * self.r;
        // |x - c| only grows along the sequence
        if dist > 1.0 || dist.is_nan() {
            return None;
        }
        self.next += self.step;
        self.dir = -self.dir;
        self.step = self.dir - self.step;
        Some((x, dist))
    }
}

struct Walker<'e, V> {
    e: &'e Enumerator,
    shared: &'e Shared,
    idx: usize,
    visitor: V,
    y: Vec<i64>,
    /// `diff[k] = sum_{j >= k} y_j b_j - (v - x0 B)`.
    diff: Vec<Vec<f64>>,
    nodes: u64,
    pending: u64,
    aborted: bool,
}

impl<'e, V: Visitor> Walker<'e, V> {
    fn new(e: &'e Enumerator, shared: &'e Shared, idx: usize, visitor: V) -> Self {
        Walker {
            e,
            shared,
            idx,
            visitor,
            y: vec![0; e.d],
            diff: vec![vec![0.0; e.d]; e.d + 1],
            nodes: 0,
            pending: 0,
            aborted: false,
        }
    }

    /// Returns whether the visitor asked to stop.
    fn start(&mut self, root: &Root, split: usize) -> bool {
        let d = self.e.d;
        self.y.copy_from_slice(&root.y);
        self.diff[d].copy_from_slice(&self.e.neg_residual);
        for k in (split..d).rev() {
            let (lo, hi) = self.diff.split_at_mut(k + 1);
            let yk = self.y[k] as f64;
            for ((o, a), b) in lo[k].iter_mut().zip(&hi[0]).zip(&self.e.rows[k]) {
                *o = a + yk * b;
            }
        }
        let stopped = self.descend(split - 1, root.dist) == Flow::Stop && !self.aborted;
        self.settle();
        stopped
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.settle();
        }
        !self.aborted
    }

    fn settle(&mut self) {
        let s = self.shared;
        let used = s.used.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
        self.pending = 0;
        if used > s.limit {
            s.exceeded.store(true, Ordering::Relaxed);
        }
        if s.exceeded.load(Ordering::Relaxed) || s.found_at.load(Ordering::Relaxed) < self.idx {
            self.aborted = true;
        }
    }

    fn descend(&mut self, level: usize, partial: f64) -> Flow {
        let e = self.e;
        let c = e.centre_at(level, &self.y);
        if level == 0 {
            for (x, dist) in Zigzag::new(c, e.r[0], partial) {
                if !self.tick() {
                    return Flow::Stop;
                }
                self.y[0] = x;
                let leaf = Leaf {
                    offset: &self.y,
                    dist,
                    partial: &self.diff[1],
                    first_row: &e.rows[0],
                };
                if self.visitor.leaf(&leaf) == Flow::Stop {
                    return Flow::Stop;
                }
            }
            return Flow::Continue;
        }
        for (x, dist) in Zigzag::new(c, e.r[level], partial) {
            if !self.tick() {
                return Flow::Stop;
            }
            self.y[level] = x;
            {
                let (lo, hi) = self.diff.split_at_mut(level + 1);
                let xf = x as f64;
                for ((o, a), b) in lo[level].iter_mut().zip(&hi[0]).zip(&e.rows[level]) {
                    *o = a + xf * b;
                }
            }
            if self.descend(level - 1, dist) == Flow::Stop {
                return Flow::Stop;
            }
        }
        self.y[level] = 0;
        Flow::Continue
    }
}
