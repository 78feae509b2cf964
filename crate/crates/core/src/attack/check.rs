//! Candidate keys against the public key, and the cheap arithmetic filters
//! that run before the group operation.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scheme::{Group, Point, PublicKey, SchemeParams};

use super::build::{CoeffSet, ShiftedCoeffs};
use super::linear::{Form, ModQ, Wide};
use super::mont::Mont;

/// `g^a mod p == pub` (DSA) or `a P == Q` (ECDSA), for `0 <= a < q`.
pub fn verify_candidate(params: &SchemeParams, public: &PublicKey, a: &BigUint) -> bool {
    if a.is_zero() || a >= &params.q {
        return false;
    }
    match (&params.group, public) {
        (Group::Dsa { g }, PublicKey::Dsa(y)) => &g.modpow(a, &params.p) == y,
        (Group::Ecdsa { curve, base }, PublicKey::Ecdsa(pt)) => &curve.mul(a, base) == pt,
        _ => false,
    }
}

const WINDOW: usize = 8;

/// Fixed-base DSA tables in Montgomery form: `table[w][b] = g^{b 2^{8w}}`.
struct DsaTables {
    mont: Mont,
    table: Vec<u64>,
    target: Vec<u64>,
}

/// Fixed-base exponentiation with one table row per 8-bit window of `a`.
pub struct KeyCheck {
    params: SchemeParams,
    public: PublicKey,
    dsa: Option<DsaTables>,
    ec: Vec<Vec<Point>>,
}

impl KeyCheck {
    pub fn new(params: &SchemeParams, public: &PublicKey) -> Self {
        let windows = (params.q.bits() as usize).div_ceil(WINDOW);
        let mut dsa = None;
        let mut ec = Vec::new();
        match (&params.group, public) {
            (Group::Dsa { g }, PublicKey::Dsa(y)) => {
                if let Some(mont) = Mont::new(&params.p) {
                    let n = mont.limbs();
                    let mut table = Vec::with_capacity(windows << WINDOW);
                    let one = mont.to_mont(&BigUint::one());
                    let mut base = mont.to_mont(g);
                    let mut next = vec![0; n];
                    for _ in 0..windows {
                        let row = table.len();
                        table.extend_from_slice(&one);
                        for j in 1..1 << WINDOW {
                            let prev = table[row + (j - 1) * n..row + j * n].to_vec();
                            mont.mul(&prev, &base, &mut next);
                            table.extend_from_slice(&next);
                        }
                        let top = table[row + ((1 << WINDOW) - 1) * n..].to_vec();
                        mont.mul(&top, &base, &mut next);
                        base.copy_from_slice(&next);
                    }
                    let target = mont.to_mont(y);
                    dsa = Some(DsaTables { mont, table, target });
                }
            }
            (Group::Ecdsa { curve, base }, _) => {
                let mut b = base.clone();
                for _ in 0..windows {
                    let mut row = Vec::with_capacity(1 << WINDOW);
                    row.push(Point::Infinity);
                    for j in 1..1 << WINDOW {
                        row.push(curve.add(&row[j - 1], &b));
                    }
                    b = curve.add(&row[(1 << WINDOW) - 1], &b);
                    ec.push(row);
                }
            }
            _ => {}
        }
        KeyCheck {
            params: params.clone(),
            public: public.clone(),
            dsa,
            ec,
        }
    }

    pub fn check(&self, a: &BigUint) -> bool {
        if a.is_zero() || a >= &self.params.q {
            return false;
        }
        self.check_le(&a.to_bytes_le())
    }

    /// [`KeyCheck::check`] for `0 < a < q` given as little-endian bytes.
    pub(crate) fn check_le(&self, bytes: &[u8]) -> bool {
        match (&self.params.group, &self.public) {
            (Group::Dsa { .. }, PublicKey::Dsa(_)) => {
                let Some(t) = &self.dsa else {
                    return verify_candidate(&self.params, &self.public, &BigUint::from_bytes_le(bytes));
                };
                let n = t.mont.limbs();
                let mut acc: Option<Vec<u64>> = None;
                let mut next = vec![0; n];
                for (w, &byte) in bytes.iter().enumerate() {
                    if byte == 0 {
                        continue;
                    }
                    let at = ((w << WINDOW) + byte as usize) * n;
                    let entry = &t.table[at..at + n];
                    match &mut acc {
                        None => acc = Some(entry.to_vec()),
                        Some(x) => {
                            t.mont.mul(x, entry, &mut next);
                            x.copy_from_slice(&next);
                        }
                    }
                }
                acc.is_some_and(|x| x == t.target)
            }
            (Group::Ecdsa { curve, .. }, PublicKey::Ecdsa(q)) => {
                let mut acc = Point::Infinity;
                for (w, &byte) in bytes.iter().enumerate() {
                    if byte != 0 {
                        acc = curve.add(&acc, &self.ec[w][byte as usize]);
                    }
                }
                &acc == q
            }
            _ => false,
        }
    }
}

/// Most table entries [`KeyCheck::level_powers`] will build.
const LEVEL_TABLE_CAP: usize = 1 << 16;

/// `g^a` for the candidate of offset `y`, as `g^{-base} prod_k g^{-y_k col[k]}`
/// with one table of powers per search level.
pub(crate) struct LevelPowers {
    mont: Mont,
    start: Vec<u64>,
    bounds: Vec<i64>,
    tables: Vec<Vec<u64>>,
    target: Vec<u64>,
}

impl KeyCheck {
    /// Tables for candidates `a = -(base + sum_k y_k col[k]) mod q` with
    /// `|y_k| <= bounds[k]`. DSA only, and only while the tables stay small.
    pub(crate) fn level_powers(&self, base: &BigInt, col: &[BigInt], bounds: &[i64]) -> Option<LevelPowers> {
        let (Group::Dsa { g }, Some(t)) = (&self.params.group, &self.dsa) else {
            return None;
        };
        let entries = bounds.iter().try_fold(0usize, |acc, &b| {
            let b = usize::try_from(b).ok()?;
            acc.checked_add(2 * b + 1)
        })?;
        if entries > LEVEL_TABLE_CAP {
            return None;
        }
        let (p, q) = (&self.params.p, &to_int(&self.params.q));
        let pow = |e: &BigInt| t.mont.to_mont(&g.modpow(&e.mod_floor(q).to_biguint().expect("reduced"), p));
        let n = t.mont.limbs();
        let mut tables = Vec::with_capacity(col.len());
        let mut next = vec![0; n];
        for (c, &b) in col.iter().zip(bounds) {
            let b = b as usize;
            let (down, up) = (pow(c), pow(&-c));
            let mut table = vec![0u64; (2 * b + 1) * n];
            table[b * n..(b + 1) * n].copy_from_slice(&t.mont.to_mont(&BigUint::one()));
            for j in 1..=b {
                let prev = table[(b + j - 1) * n..(b + j) * n].to_vec();
                t.mont.mul(&prev, &up, &mut next);
                table[(b + j) * n..(b + j + 1) * n].copy_from_slice(&next);
                let prev = table[(b - j + 1) * n..(b - j + 2) * n].to_vec();
                t.mont.mul(&prev, &down, &mut next);
                table[(b - j) * n..(b - j + 1) * n].copy_from_slice(&next);
            }
            tables.push(table);
        }
        Some(LevelPowers {
            mont: t.mont.clone(),
            start: pow(&-base),
            bounds: bounds.to_vec(),
            tables,
            target: t.target.clone(),
        })
    }
}

impl LevelPowers {
    /// Whether `g^a` is the public key; `None` if `y` leaves the tables.
    pub(crate) fn check(&self, y: &[i64]) -> Option<bool> {
        let n = self.mont.limbs();
        let mut acc = self.start.clone();
        let mut next = vec![0; n];
        for ((&yk, &b), table) in y.iter().zip(&self.bounds).zip(&self.tables) {
            if yk == 0 {
                continue;
            }
            if yk.abs() > b {
                return None;
            }
            let at = (yk + b) as usize * n;
            self.mont.mul(&acc, &table[at..at + n], &mut next);
            acc.copy_from_slice(&next);
        }
        Some(acc == self.target)
    }
}

/// Which enumerated points reach the public-key test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateFilter {
    /// Every distinct `(-u_{n+1}) mod q`.
    None,
    /// Points with `|u_j - v_j| < 2^ell` for `j <= n` and `-q < u_{n+1} < 0`.
    Box,
    /// `Box`, plus the nonces implied by the candidate must share their top
    /// `delta - delta_L` bits.
    #[default]
    SharedBits,
}

/// Exact per-candidate tests derived from the signing congruences.
pub(crate) struct Congruences {
    q: BigInt,
    c: Vec<BigInt>,
    d: Vec<BigInt>,
    a_i: BigInt,
    b_i: BigInt,
    z_limit: BigInt,
    delta_l: usize,
    top_shift: usize,
}

fn to_int(v: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, v.clone())
}

/// [`Congruences`] in fixed width, as affine forms in the search offset `y`
/// of one enumeration.
pub(crate) struct FastCongruences {
    modq: ModQ,
    /// `u_{n+1}`, exactly.
    u_last: Form,
    /// `A_i u_{n+1} - B_i`, whose residue is `k_i`.
    k_min: Form,
    /// `C_j u_{n+1} - D_j`, whose residues are the `z'_j`.
    z: Vec<Form>,
    z_limit: Wide,
    delta_l: usize,
    top_shift: usize,
}

impl FastCongruences {
    /// The key `a = -u_{n+1}` when `0 < a < q`.
    pub(crate) fn key(&self, y: &[i64]) -> Option<Wide> {
        let a = self.u_last.eval(y).neg();
        (!a.is_neg() && !a.is_zero() && &a < self.modq.q()).then_some(a)
    }

    pub(crate) fn k_min(&self, y: &[i64]) -> Wide {
        self.modq.reduce(self.k_min.eval(y))
    }

    pub(crate) fn below_top(&self, k_i: &Wide) -> Wide {
        k_i.low_bits(self.top_shift)
    }

    /// Every `z'_j` lies in `(0, 2^{ell - delta})` and, given `k_i`, every
    /// `k_i + 2^{delta_L} z'_j` stays below `q` with the top bits of `k_i`.
    pub(crate) fn residues_ok(&self, y: &[i64], k_i: Option<&Wide>) -> bool {
        let top = k_i.map(|k| k.shr(self.top_shift));
        self.z.iter().all(|f| {
            let z = self.modq.reduce(f.eval(y));
            if z.is_zero() || z >= self.z_limit {
                return false;
            }
            match (k_i, &top) {
                (Some(k), Some(top)) => {
                    let k_j = k.add(&z.shl(self.delta_l));
                    &k_j < self.modq.q() && &k_j.shr(self.top_shift) == top
                }
                _ => true,
            }
        })
    }
}

impl Congruences {
    /// Fixed-width forms for the search whose last coordinate is
    /// `base + sum_k y_k col[k]`; `None` if the numbers are too wide.
    pub(crate) fn fast(&self, base: &BigInt, col: &[BigInt]) -> Option<FastCongruences> {
        let q = &self.q;
        let z = self
            .c
            .iter()
            .zip(&self.d)
            .map(|(c, d)| Form::scaled_mod(base, col, c, &-d, q))
            .collect::<Option<_>>()?;
        Some(FastCongruences {
            modq: ModQ::new(q)?,
            u_last: Form::new(base, col)?,
            k_min: Form::scaled_mod(base, col, &self.a_i, &-&self.b_i, q)?,
            z,
            z_limit: Wide::from_bigint(&self.z_limit)?,
            delta_l: self.delta_l,
            top_shift: self.top_shift,
        })
    }

    pub(crate) fn new(coeffs: &CoeffSet, shifted: &ShiftedCoeffs, q: &BigUint, ell: u32, delta: u32, delta_l: u32) -> Self {
        let delta_m = delta - delta_l;
        Congruences {
            q: to_int(q),
            c: shifted.c.iter().map(to_int).collect(),
            d: shifted.d.iter().map(to_int).collect(),
            a_i: to_int(&coeffs.a[shifted.i]),
            b_i: to_int(&coeffs.b[shifted.i]),
            z_limit: BigInt::one() << (ell - delta) as usize,
            delta_l: delta_l as usize,
            top_shift: (ell - delta_m) as usize,
        }
    }

    fn reduce(&self, v: BigInt) -> BigInt {
        v.mod_floor(&self.q)
    }

    /// `z'_j = (-C_j a - D_j) mod q` must lie in `(0, 2^{ell - delta})`.
    /// Returns the `z'_j` when they all do.
    pub(crate) fn box_residues(&self, a: &BigInt) -> Option<Vec<BigInt>> {
        let mut out = Vec::with_capacity(self.c.len());
        for (c, d) in self.c.iter().zip(&self.d) {
            let z = self.reduce(-(c * a) - d);
            if z.is_zero() || z >= self.z_limit {
                return None;
            }
            out.push(z);
        }
        Some(out)
    }

    /// `k_i = (-A_i a - B_i) mod q`, the candidate's minimal nonce.
    pub(crate) fn k_min(&self, a: &BigInt) -> BigInt {
        self.reduce(-(&self.a_i * a) - &self.b_i)
    }

    /// `k_i mod 2^{ell - delta_M}`, the part of `k_i` below the shared top block.
    pub(crate) fn below_top(&self, k_i: &BigInt) -> BigInt {
        k_i & ((BigInt::one() << self.top_shift) - 1)
    }

    /// With `k_i = (-A_i a - B_i) mod q`, every `k_i + 2^{delta_L} z'_j` must stay
    /// below `q` and keep the top bits of `k_i`.
    pub(crate) fn shared_bits(&self, k_i: &BigInt, z: &[BigInt]) -> bool {
        let top = k_i >> self.top_shift;
        z.iter().all(|zj| {
            let k_j = k_i + (zj << self.delta_l);
            k_j < self.q && (&k_j >> self.top_shift) == top
        })
    }
}
