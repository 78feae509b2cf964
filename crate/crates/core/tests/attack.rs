use latkey::attack::{
    build_lattice, build_target, check_hypothesis2, compute_coeffs, extract_candidates, planted_vector, radius_sq,
    recover_key, shifted_coeffs, verify_candidate, AttackError, AttackOptions, CandidateFilter, CoeffSet, KeyCheck,
    Reduction,
};
use latkey::enumeration::{enumerate_ball, BallPoint, BallQuery};
use latkey::lattice::{det_abs, Basis};
use latkey::scheme::{
    gen_group_params, keygen, make_instance, make_uniform_instance, AttackInstance, EphemeralPattern, HashMode,
    SchemeParams, SignedMessage,
};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, Pow, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn u(v: u64) -> BigUint {
    BigUint::from(v)
}

fn small_params() -> SchemeParams {
    SchemeParams::dsa(u(23), u(11), u(4)).unwrap()
}

fn instance_with(sigs: &[(u64, u64, u64)]) -> AttackInstance {
    // fields other than the signatures are irrelevant for coefficient tests
    AttackInstance {
        params: small_params(),
        public: latkey::scheme::PublicKey::Dsa(u(18)),
        signatures: sigs
            .iter()
            .map(|&(h, r, s)| SignedMessage { h: u(h), r: u(r), s: u(s) })
            .collect(),
        ell: 4,
        delta: 2,
        delta_l: 1,
        meta: None,
    }
}

#[test]
fn coefficients_from_signatures() {
    let c = compute_coeffs(&instance_with(&[(5, 3, 4), (0, 10, 1)])).unwrap();
    assert_eq!(c.a, vec![u(2), u(1)]);
    assert_eq!(c.b, vec![u(7), u(0)]);
}

#[test]
fn shifted_coefficients() {
    let q = u(11);
    let set = CoeffSet { a: vec![u(2), u(5)], b: vec![u(0), u(0)] };
    assert_eq!(shifted_coeffs(&set, 0, 1, &q).c, vec![u(7)]);
    // 2^0 = 1: plain differences
    let set = CoeffSet { a: vec![u(2), u(5), u(9)], b: vec![u(1), u(4), u(0)] };
    let s0 = shifted_coeffs(&set, 0, 0, &q);
    assert_eq!(s0.c, vec![u(3), u(7)]);
    assert_eq!(s0.d, vec![u(3), u(10)]);
    // i = n uses A_{j-1} - A_n for every j
    let s2 = shifted_coeffs(&set, 2, 0, &q);
    assert_eq!(s2.c, vec![u(4), u(7)]);
    assert_eq!(s2.d, vec![u(1), u(4)]);
    // middle index: j=1 uses A_0, j=2 uses A_2
    let s1 = shifted_coeffs(&set, 1, 0, &q);
    assert_eq!(s1.c, vec![u(8), u(4)]);
}

#[test]
fn lattice_and_target_shapes() {
    let q = u(11);
    let b = build_lattice(&[u(7)], &q, 2).unwrap();
    assert_eq!(b, Basis::from_i64(&[[88, 0], [56, 1]]).unwrap());
    assert_eq!(det_abs(&b), BigInt::from(88));
    let b = build_lattice(&[u(3), u(5)], &q, 0).unwrap();
    assert_eq!(b, Basis::from_i64(&[[22, 0, 0], [0, 22, 0], [6, 10, 1]]).unwrap());
    assert_eq!(det_abs(&b), BigInt::from(22 * 22));

    assert_eq!(build_target(&[u(7)], 2, 5), vec![BigInt::from(88), BigInt::zero()]);
    assert_eq!(
        build_target(&[u(0), u(0)], 3, 6),
        vec![BigInt::from(64), BigInt::from(64), BigInt::zero()]
    );
    let d: Vec<BigUint> = (1..=7u64).map(u).collect();
    let v = build_target(&d, 20, 160);
    assert_eq!(v.len(), 8);
    for (j, vj) in v.iter().take(7).enumerate() {
        assert_eq!(*vj, (BigInt::one() << 160) + (BigInt::from(j + 1) << 21));
    }
}

#[test]
fn radii() {
    assert_eq!(radius_sq(160, 7), BigInt::from(8) * (BigInt::one() << 320));
    assert_eq!(radius_sq(9, 0), BigInt::one() << 18);
    assert_eq!(radius_sq(5, 3), BigInt::from(4096));
}

#[test]
fn hypothesis_two() {
    let q = u(11);
    // threshold (1/2) 88^{1/2} ~ 4.69
    let good = Basis::from_i64(&[[6, 0], [0, 6]]).unwrap();
    let h = check_hypothesis2(&good, &q, 2, 1).unwrap();
    assert!(h.holds);
    assert!((h.margin - 6.0 / (0.5 * 88f64.sqrt())).abs() < 1e-9);
    let bad = Basis::from_i64(&[[4, 0], [0, 22]]).unwrap();
    assert!(!check_hypothesis2(&bad, &q, 2, 1).unwrap().holds);
    let doubled = Basis::from_i64(&[[12, 0], [0, 12]]).unwrap();
    let h2 = check_hypothesis2(&doubled, &q, 2, 1).unwrap();
    assert!((h2.margin - 2.0 * h.margin).abs() < 1e-9);
    let huge = Basis::from_i64(&[[1 << 40, 0], [0, 1 << 40]]).unwrap();
    assert!(check_hypothesis2(&huge, &q, 2, 1).unwrap().holds);
}

#[test]
fn candidates_from_points() {
    let pt = |last: i64| BallPoint {
        coeffs: vec![],
        point: vec![BigInt::from(5), BigInt::from(last)],
    };
    let q = u(11);
    assert_eq!(extract_candidates(&[pt(-3)], &q), vec![u(3)]);
    assert_eq!(extract_candidates(&[pt(0)], &q), vec![u(0)]);
    assert_eq!(extract_candidates(&[pt(-3), pt(8), pt(-4)], &q), vec![u(3), u(4)]);
}

#[test]
fn key_check_on_toy_group() {
    let params = small_params();
    let public = latkey::scheme::PublicKey::Dsa(u(18));
    assert!(verify_candidate(&params, &public, &u(3)));
    assert!(!verify_candidate(&params, &public, &u(0)));
    let table = KeyCheck::new(&params, &public);
    for a in 0..11u64 {
        assert_eq!(table.check(&u(a)), a == 3, "a = {a}");
        assert_eq!(verify_candidate(&params, &public, &u(a)), a == 3);
    }
}

fn planted(seed: u64, q_bits: u32, p_bits: u32, delta: u32, delta_l: u32, sigs: usize) -> AttackInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = gen_group_params(q_bits, p_bits, &mut rng).unwrap();
    let kp = keygen(&params, &mut rng);
    let pattern = EphemeralPattern::random(&params.q, delta, delta_l, &mut rng).unwrap();
    make_instance(&params, &kp, sigs - 1, &pattern, HashMode::Passthrough, &mut rng).unwrap()
}

#[test]
fn wrong_key_fails_exhaustively_on_16_bit_group() {
    let inst = planted(3, 16, 32, 8, 4, 4);
    let a = inst.meta.as_ref().unwrap().secret.clone();
    let table = KeyCheck::new(&inst.params, &inst.public);
    let q: u64 = inst.params.q.clone().try_into().unwrap();
    for cand in 0..q {
        assert_eq!(table.check(&u(cand)), u(cand) == a);
    }
    assert!(!verify_candidate(&inst.params, &inst.public, &((&a + 1u32) % &inst.params.q)));
}

#[test]
fn key_check_agrees_with_modpow_at_1024_bits() {
    let inst = planted(21, 160, 1024, 20, 10, 8);
    let a = inst.meta.as_ref().unwrap().secret.clone();
    let table = KeyCheck::new(&inst.params, &inst.public);
    assert!(table.check(&a));
    let q = &inst.params.q;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut cands = vec![u(1), u(255), u(256), q - 1u32, (&a + 1u32) % q, &a ^ (u(1) << 80u32)];
    cands.extend((0..20).map(|_| rng.gen_biguint_below(q)));
    for c in cands {
        assert_eq!(table.check(&c), verify_candidate(&inst.params, &inst.public, &c));
        assert_eq!(table.check(&c), c == a);
    }
}

#[test]
fn toy_end_to_end_without_hint() {
    for seed in 0..5 {
        let inst = planted(100 + seed, 16, 32, 8, 4, 4);
        let meta = inst.meta.clone().unwrap();
        for filter in [CandidateFilter::None, CandidateFilter::Box, CandidateFilter::SharedBits] {
            let opts = AttackOptions { filter, ..Default::default() };
            let report = recover_key(&inst, &opts).unwrap();
            assert_eq!(report.a.as_ref(), Some(&meta.secret));
            assert!(report.per_index.len() <= 4);
            for idx in &report.per_index {
                assert!(idx.reduction_ok);
                assert!((idx.points_enumerated as f64) < idx.count_bound);
            }
        }
    }
}

#[test]
fn reduction_choice_does_not_change_the_key() {
    let inst = planted(9, 64, 128, 12, 6, 8);
    let meta = inst.meta.clone().unwrap();
    for reduction in [Reduction::Lll, Reduction::Bkz(4), Reduction::Bkz(8)] {
        let opts = AttackOptions {
            reduction,
            min_index_hint: Some(meta.min_index),
            ..Default::default()
        };
        let report = recover_key(&inst, &opts).unwrap();
        assert_eq!(report.a, Some(meta.secret.clone()));
        assert_eq!(report.i_star, Some(meta.min_index));
    }
}

#[test]
fn planted_vector_lies_in_the_ball() {
    let inst = planted(21, 64, 128, 12, 6, 8);
    let meta = inst.meta.clone().unwrap();
    let coeffs = compute_coeffs(&inst).unwrap();
    let q = &inst.params.q;
    let sh = shifted_coeffs(&coeffs, meta.min_index, inst.delta_l, q);
    let (x, point) = planted_vector(&inst, &sh).unwrap();
    let j = build_lattice(&sh.c, q, inst.delta).unwrap();
    assert_eq!(j.combine(&x), point);
    let v = build_target(&sh.d, inst.delta, inst.ell);
    let dist: BigInt = point.iter().zip(&v).map(|(a, b)| (a - b).pow(2u32)).sum();
    assert!(dist < radius_sq(inst.ell, inst.n()));
}

#[test]
fn uniform_nonces_give_key_not_found() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let params = gen_group_params(32, 64, &mut rng).unwrap();
    let kp = keygen(&params, &mut rng);
    let inst = make_uniform_instance(&params, &kp, 5, 10, 5, HashMode::Passthrough, &mut rng).unwrap();
    match recover_key(&inst, &AttackOptions::default()) {
        Err(AttackError::KeyNotFound(report)) => {
            assert!(!report.success);
            assert_eq!(report.per_index.len(), 6);
        }
        other => panic!("expected KeyNotFound, got {other:?}"),
    }
}

#[test]
fn shell_passes_partition_the_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let params = gen_group_params(64, 128, &mut rng).unwrap();
    let kp = keygen(&params, &mut rng);
    let inst = make_uniform_instance(&params, &kp, 5, 10, 5, HashMode::Passthrough, &mut rng).unwrap();
    let i = inst.meta.as_ref().unwrap().min_index;
    let q = &inst.params.q;
    let sh = shifted_coeffs(&compute_coeffs(&inst).unwrap(), i, inst.delta_l, q);
    let reduced = latkey::attack::reduce(
        &build_lattice(&sh.c, q, inst.delta).unwrap(),
        Reduction::Bkz(8),
        &latkey::lattice::default_delta(),
    )
    .unwrap();
    let query = BallQuery::new(reduced, build_target(&sh.d, inst.delta, inst.ell), radius_sq(inst.ell, inst.n())).unwrap();
    let in_ball = enumerate_ball(&query).unwrap().len() as u64;
    assert!(in_ball > 1000, "{in_ball}");
    let mut seen = Vec::new();
    for shells in [0, 1, 3, 8, 20] {
        for filter in [CandidateFilter::Box, CandidateFilter::SharedBits] {
            let opts = AttackOptions {
                min_index_hint: Some(i),
                shells,
                filter,
                ..Default::default()
            };
            let Err(AttackError::KeyNotFound(report)) = recover_key(&inst, &opts) else {
                panic!("expected KeyNotFound");
            };
            let r = &report.per_index[0];
            assert_eq!(r.points_enumerated, in_ball, "shells {shells}");
            seen.push((filter, r.box_candidates, r.keys_tested));
        }
    }
    for w in seen.chunks(2).collect::<Vec<_>>().windows(2) {
        assert_eq!(w[0], w[1]);
    }
}

#[test]
fn shells_find_the_same_key() {
    for seed in 0..4 {
        let inst = planted(300 + seed, 64, 128, 12, 6, 6);
        let hint = inst.meta.as_ref().map(|m| m.min_index);
        for shells in [0, 8] {
            let opts = AttackOptions {
                min_index_hint: hint,
                shells,
                ..Default::default()
            };
            let report = recover_key(&inst, &opts).unwrap();
            assert_eq!(report.a.as_ref(), Some(&inst.meta.as_ref().unwrap().secret));
        }
    }
}

#[test]
fn report_json_uses_decimal_strings() {
    let inst = planted(5, 16, 32, 8, 4, 4);
    let report = recover_key(&inst, &AttackOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["a"], serde_json::json!(inst.meta.as_ref().unwrap().secret.to_string()));
    assert_eq!(v["radiusSq"], serde_json::json!(radius_sq(inst.ell, inst.n()).to_string()));
    assert!(v["perIndex"][0]["hypothesis2Margin"].is_number());
}

#[test]
fn bkz_on_a_line_falls_back_to_lll() {
    let delta = latkey::lattice::default_delta();
    let b = Basis::from_i64(&[[-6]]).unwrap();
    for red in [Reduction::Lll, Reduction::Bkz(8)] {
        let out = latkey::attack::reduce(&b, red, &delta).unwrap();
        assert!(latkey::attack::reduction_invariants_hold(&b, &out, &delta));
    }
}
