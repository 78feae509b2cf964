//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

mod common;

use std::io::Write;

use common::{brute_ball, random_full_rank, to_basis, big_vec};
use latkey::attack::{
    build_lattice, build_target, compute_coeffs, planted_vector, radius_sq, reduce, reduction_invariants_hold,
    shifted_coeffs, Reduction,
};
use latkey::enumeration::{count_bound, enumerate_ball, BallQuery};
use latkey::harness::{resolve_workers, run_campaign, CampaignConfig, CampaignReport, NonceModel};
use latkey::lattice::{default_delta, gso, sv_lower_bound, Basis};
use latkey::scheme::{
    gen_curve_params, gen_group_params, keygen, make_instance, sign, verify, CurveSpec, EphemeralPattern, HashMode,
    SchemeError, SchemeParams, TOY_CURVE,
};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MEAN_LIMIT_MS: f64 = 150_000.0;

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn say(v: &Verdict) {
    // Bypass the test harness capture so the lines always reach the log.
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "acceptance {}: {} - {}",
        v.id,
        if v.pass { "PASS" } else { "FAIL" },
        v.detail
    );
}

fn workers() -> usize {
    resolve_workers(None).unwrap()
}

fn table_campaign(delta: u32, sigs: usize, seed: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(160, delta, sigs, 10, seed);
    cfg.reduction = latkey::harness::ReductionKind::Bkz;
    cfg.block = 8;
    cfg.min_index_known = true;
    cfg
}

fn successes(r: &CampaignReport) -> usize {
    r.rows.iter().filter(|t| t.success).count()
}

fn row_verdict(r: &CampaignReport) -> (bool, String) {
    let ok = successes(r) * 10 >= 9 * r.rows.len() && r.aggregate.mean_time_ms <= MEAN_LIMIT_MS;
    let detail = format!(
        "delta={} sigs={}: {}/{} recovered, mean {:.0} ms, median {:.0} ms",
        r.config.delta,
        r.config.signatures,
        successes(r),
        r.rows.len(),
        r.aggregate.mean_time_ms,
        r.aggregate.median_time_ms
    );
    (ok, detail)
}

fn without_wall(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(3);
            f.join(",")
        })
        .collect()
}

/// Planted vector of one instance against inequality (4) and the ball,
/// with the expected coordinates recomputed from the nonces.
fn planted_case(ell: u32, delta: u32, delta_l: u32, sigs: usize, seed: u64, lattices: &mut Vec<Basis>) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = gen_group_params(ell, ell + 64, &mut rng).map_err(|e| e.to_string())?;
    let kp = keygen(&params, &mut rng);
    let pattern = EphemeralPattern::random(&params.q, delta, delta_l, &mut rng).map_err(|e| e.to_string())?;
    let inst = make_instance(&params, &kp, sigs - 1, &pattern, HashMode::Passthrough, &mut rng)
        .map_err(|e| e.to_string())?;
    let meta = inst.meta.as_ref().unwrap();
    let i = meta.min_index;
    let q = &params.q;
    let sh = shifted_coeffs(&compute_coeffs(&inst).map_err(|e| e.to_string())?, i, delta_l, q);
    let lattice = build_lattice(&sh.c, q, delta).map_err(|e| e.to_string())?;
    let target = build_target(&sh.d, delta, ell);
    let (x, u) = planted_vector(&inst, &sh).ok_or("no planted vector")?;
    if lattice.combine(&x) != u {
        return Err("planted vector is not the stated combination".into());
    }
    if u[sigs - 1] != -BigInt::from(meta.secret.clone()) {
        return Err("last coordinate is not -a".into());
    }
    let two_ell = BigInt::one() << ell;
    let ki = BigInt::from(meta.nonces[i].clone());
    let others = (0..sigs).filter(|&j| j != i);
    for (t, j) in others.enumerate() {
        let z = BigInt::from(meta.nonces[j].clone()) - &ki;
        let unit = BigInt::one() << delta_l;
        if &z % &unit != BigInt::zero() {
            return Err(format!("k_{j} - k_{i} not divisible by 2^delta_L"));
        }
        let zp = z / unit;
        let want = (&zp << (delta + 1)) - &two_ell;
        let diff = &u[t] - &target[t];
        if diff != want {
            return Err(format!("coordinate {t}: u - v disagrees with 2^(delta+1) z' - 2^ell"));
        }
        let abs = if diff < BigInt::zero() { -diff } else { diff };
        if !(abs > BigInt::zero() && abs < two_ell) {
            return Err(format!("coordinate {t}: inequality (4) fails"));
        }
    }
    let dist: BigInt = u.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
    if dist >= radius_sq(ell, sigs - 1) {
        return Err("planted vector outside the ball".into());
    }
    lattices.push(lattice);
    Ok(())
}

fn criterion3(lattices: &mut Vec<Basis>) -> Verdict {
    let mut grid = Vec::new();
    for ell in [64u32, 160] {
        for delta in [8u32, 12, 20] {
            for dl in [0, delta / 2, delta] {
                for sigs in [4usize, 8, 12] {
                    grid.push((ell, delta, dl, sigs));
                }
            }
        }
    }
    let mut failures = Vec::new();
    for case in 0..100usize {
        let (ell, delta, dl, sigs) = grid[case % grid.len()];
        if let Err(e) = planted_case(ell, delta, dl, sigs, 0xACCE_0300 + case as u64, lattices) {
            failures.push(format!("case {case} ({ell},{delta},{dl},{sigs}): {e}"));
        }
    }
    Verdict {
        id: 3,
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("100/100 planted vectors satisfy inequality (4) and lie in the ball ({} grid points)", grid.len())
        } else {
            format!("{}/100 failed; first: {}", failures.len(), failures[0])
        },
    }
}

fn criterion4(lattices: &mut Vec<Basis>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0400);
    let (mut checked, mut mismatches, mut bound_fail, mut strict, mut degenerate) = (0, 0, 0, 0, 0);
    while checked < 500 {
        let n = rng.gen_range(1..=4);
        let m = random_full_rank(&mut rng, n, 50);
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-60..=60)).collect();
        let scale: i64 = m.iter().map(|r| r.iter().map(|x| x * x).sum::<i64>()).min().unwrap();
        let r_sq = rng.gen_range(0..=3 * scale);
        let Some(want) = brute_ball(&m, &v, r_sq, 3_000_000) else {
            continue;
        };
        let basis = to_basis(&m);
        let q = BallQuery::new(basis.clone(), big_vec(&v), r_sq.into()).unwrap();
        let got: Vec<Vec<i64>> = enumerate_ball(&q)
            .unwrap()
            .iter()
            .map(|p| p.point.iter().map(|x| x.to_i64().unwrap()).collect())
            .collect();
        let mut want: Vec<Vec<i64>> = want.into_iter().map(|(_, u)| u).collect();
        want.sort();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        if got_sorted != want {
            mismatches += 1;
        }
        let s = sv_lower_bound(&gso(&basis).unwrap()).norm();
        let bound = count_bound((r_sq as f64).sqrt(), s, n).unwrap();
        if r_sq > 0 && n >= 2 {
            strict += 1;
            if (got.len() as f64) >= bound {
                bound_fail += 1;
            }
        } else {
            // R = 0 or d = 1: the bound can be attained, so only <= is a theorem.
            degenerate += 1;
            if (got.len() as f64) > bound {
                bound_fail += 1;
            }
        }
        lattices.push(basis);
        checked += 1;
    }
    Verdict {
        id: 4,
        pass: mismatches == 0 && bound_fail == 0,
        detail: format!(
            "{checked} lattices: {mismatches} set mismatches, {bound_fail} bound violations \
             (strict < in {strict} cases, <= in {degenerate} with R = 0 or d = 1)"
        ),
    }
}

fn criterion5(lattices: &[Basis], campaign_rows: usize, campaign_ok: bool) -> Verdict {
    let delta = default_delta();
    let mut runs = 0;
    let mut bad = 0;
    for b in lattices {
        for red in [Reduction::Lll, Reduction::Bkz(8)] {
            let out = reduce(b, red, &delta).unwrap();
            runs += 1;
            if !reduction_invariants_hold(b, &out, &delta) {
                bad += 1;
            }
        }
    }
    Verdict {
        id: 5,
        pass: bad == 0 && campaign_ok,
        detail: format!(
            "{runs} LLL/BKZ-8 reductions: {bad} invariant failures; {campaign_rows} campaign trials: {}",
            if campaign_ok { "all reductions passed" } else { "some reduction failed" }
        ),
    }
}

fn criterion6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0600);
    let mut setups: Vec<(SchemeParams, usize)> = Vec::new();
    for _ in 0..4 {
        setups.push((gen_group_params(16, 64, &mut rng).unwrap(), 100));
    }
    for _ in 0..2 {
        setups.push((gen_group_params(160, 1024, &mut rng).unwrap(), 150));
    }
    setups.push((gen_curve_params(&CurveSpec::Preset(TOY_CURVE.into())).unwrap(), 300));
    let (mut total, mut bad_verify, mut bad_congruence, mut forged) = (0, 0, 0, 0);
    for (params, count) in &setups {
        let q = &params.q;
        let two = BigUint::from(2u32);
        let inv = |x: &BigUint| x.modpow(&(q - &two), q);
        let mut done = 0;
        while done < *count {
            let kp = keygen(params, &mut rng);
            let h = rng.gen_biguint_below(q);
            let k = rng.gen_biguint_range(&BigUint::one(), q);
            let sig = match sign(params, &kp.secret, &h, &k) {
                Ok(s) => s,
                Err(SchemeError::RetryNeeded) => continue,
                Err(e) => panic!("{e}"),
            };
            done += 1;
            total += 1;
            if !verify(params, &kp.public, &h, &sig) {
                bad_verify += 1;
            }
            let s_inv = inv(&sig.s);
            let a_coef = (q - (&sig.r * &s_inv) % q) % q;
            let b_coef = (q - (&h * &s_inv) % q) % q;
            if (&k + a_coef * &kp.secret + b_coef) % q != BigUint::zero() {
                bad_congruence += 1;
            }
            let h2 = (&h + 1u32) % q;
            if verify(params, &kp.public, &h2, &sig) {
                forged += 1;
            }
        }
    }
    Verdict {
        id: 6,
        pass: total >= 1000 && bad_verify == 0 && bad_congruence == 0,
        detail: format!(
            "{total} round trips (DSA l=16 and l=160, toy-curve ECDSA): {bad_verify} verify failures, \
             {bad_congruence} congruence failures; {forged} altered messages accepted"
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let w = workers();
    let mut verdicts = Vec::new();
    let mut record = |v: Verdict, all: &mut Vec<Verdict>| {
        say(&v);
        all.push(v);
    };

    let row20 = run_campaign(&table_campaign(20, 8, 2020), w).unwrap();
    let row16 = run_campaign(&table_campaign(16, 11, 1611), w).unwrap();
    let (ok20, d20) = row_verdict(&row20);
    let (ok16, d16) = row_verdict(&row16);
    record(
        Verdict {
            id: 1,
            pass: ok20 && ok16,
            detail: format!("{d20}; {d16}"),
        },
        &mut verdicts,
    );

    let row12 = run_campaign(&table_campaign(12, 14, 1214), w).unwrap();
    let (ok12, d12) = row_verdict(&row12);
    record(
        Verdict {
            id: 2,
            pass: ok12,
            detail: d12,
        },
        &mut verdicts,
    );

    let mut lattices = Vec::new();
    record(criterion3(&mut lattices), &mut verdicts);
    record(criterion4(&mut lattices), &mut verdicts);

    let mut neg_cfg = table_campaign(20, 8, 7070);
    neg_cfg.nonces = NonceModel::Uniform;
    // every trial walks its whole ball, which can exceed the default budget
    neg_cfg.node_budget = 20_000_000_000;
    let neg = run_campaign(&neg_cfg, w).unwrap();

    let campaigns = [&row20, &row16, &row12, &neg];
    let rows: usize = campaigns.iter().map(|c| c.rows.len()).sum();
    let campaign_ok = campaigns.iter().all(|c| c.rows.iter().all(|r| r.reduction_ok));
    record(criterion5(&lattices, rows, campaign_ok), &mut verdicts);

    record(criterion6(), &mut verdicts);

    let not_found = neg
        .rows
        .iter()
        .filter(|r| r.reason.as_deref() == Some("no candidate matched the public key"))
        .count();
    record(
        Verdict {
            id: 7,
            pass: successes(&neg) == 0 && not_found == neg.rows.len(),
            detail: format!(
                "uniform nonces, claimed delta=20, 8 sigs: {}/{} recovered, {not_found} ended in KeyNotFound",
                successes(&neg),
                neg.rows.len()
            ),
        },
        &mut verdicts,
    );

    let again16 = run_campaign(&table_campaign(16, 11, 1611), w + 1).unwrap();
    let again12 = run_campaign(&table_campaign(12, 14, 1214), 1).unwrap();
    let same16 = without_wall(&row16.to_csv()) == without_wall(&again16.to_csv());
    let same12 = without_wall(&row12.to_csv()) == without_wall(&again12.to_csv());
    record(
        Verdict {
            id: 8,
            pass: same16 && same12,
            detail: format!(
                "re-run CSVs without wall_ms identical: delta=16 ({} vs {} workers) {same16}, delta=12 {same12}",
                w,
                w + 1
            ),
        },
        &mut verdicts,
    );

    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
