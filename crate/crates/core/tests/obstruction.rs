use nalgebra::{Rotation3, Unit, Vector3};
use nearsym_core::forms::CompiledForm;
use nearsym_core::models::theta;
use nearsym_core::obstruction::*;
use nearsym_core::parity::Parity;
use nearsym_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn j_action_examples() {
    let a = JClass::base(Space::S1xS2, -1);
    assert_eq!(j_action(a, 1).value, 1);
    assert_eq!(a.modulus(), 2);
    assert_eq!(j_action(JClass::base(Space::W, -1), 3).value, 3);
    for space in [Space::S3, Space::S1xS2, Space::W] {
        let a = JClass::new(space, 4, 5);
        assert_eq!(j_action(a, 0), a);
    }
    assert_eq!(JClass::new(Space::S1xS2, 0, -7).value, -7);
}

#[test]
fn j_action_is_a_group_action_with_expected_stabilizer() {
    for n in -5i64..=5 {
        for space in [Space::S3, Space::S1xS2, Space::W] {
            let base = JClass::base(space, n);
            for m in -20i64..=20 {
                for k in -20i64..=20 {
                    assert_eq!(j_action(j_action(base, m), k), j_action(base, m + k));
                }
                let fixed = j_action(base, m) == base;
                let expected = match space {
                    Space::S1xS2 if n != 0 => m % (2 * n) == 0,
                    _ => m == 0,
                };
                assert_eq!(fixed, expected, "{space} n = {n} m = {m}");
            }
        }
    }
}

#[test]
fn restrictions_intertwine_actions() {
    let base = JClass::base(Space::W, -1);
    let (r1, r2) = restrictions(base).unwrap();
    assert_eq!((r1.value, r2.value), (0, 0));
    assert_eq!((r1.space, r2.space), (Space::S3, Space::S1xS2));
    let (r1, r2) = restrictions(j_action(base, 1)).unwrap();
    assert_eq!((r1.value, r2.value), (-1, 1));
    let (r1, r2) = restrictions(j_action(base, 2)).unwrap();
    assert_eq!((r1.value, r2.value), (-2, 0));

    for m in -10..=10 {
        let a = j_action(base, m);
        let (r1, r2) = restrictions(a).unwrap();
        let (s1, s2) = restrictions(j_action(a, 1)).unwrap();
        assert_eq!(s1, j_action(r1, -1));
        assert_eq!(s2, j_action(r2, 1));
    }
    assert_eq!(restrictions(JClass::base(Space::W, 2)), Err(Error::UnsupportedIndex(2)));
    assert!(restrictions(JClass::base(Space::S3, -1)).is_err());
}

#[test]
fn extension_criterion() {
    assert!(extension_exists(0, 0));
    assert!(!extension_exists(1, 0));
    assert!(extension_exists(1, -3));
    // Restricting any class on W gives an extendable pair.
    for m in -10..=10 {
        let (r1, r2) = restrictions(j_action(JClass::base(Space::W, -1), m)).unwrap();
        assert!(extension_exists(r2.value, r1.value));
    }
}

#[test]
fn beta_ledger_examples() {
    let cp2 = ManifoldInvariants::new(0, 1, 0);
    assert_eq!((cp2.euler(), cp2.signature(), cp2.beta()), (3, 1, 2));
    let l = beta_ledger(cp2, &[Parity::Even, Parity::Even, Parity::Odd], Some(9));
    assert_eq!(l.required_even_parity, 0);
    assert!(l.consistent);
    assert_eq!(l.surgered_beta, 5);
    assert_eq!(l.hopf_sum_parity, 1);
    assert_eq!(l.relation_parity, Some(0));
    assert!(l.flags.is_empty());
    assert!(!beta_ledger(cp2, &[Parity::Even], None).consistent);

    let m = ManifoldInvariants::new(1, 1, 0);
    assert_eq!(m.beta(), 1);
    assert_eq!(beta_ledger(m, &[], None).required_even_parity, 1);

    // One even circle among [even, odd, odd] needs β odd.
    let parities = [Parity::Even, Parity::Odd, Parity::Odd];
    assert!(beta_ledger(m, &parities, None).consistent);
    assert!(!beta_ledger(cp2, &parities, None).consistent);

    let bad = beta_ledger(cp2, &[], Some(4));
    assert_eq!(bad.relation_parity, None);
    assert_eq!(bad.flags.len(), 1);
}

#[test]
fn beta_ledger_over_examples() {
    for (name, inv, c2) in example_manifolds() {
        assert!(inv.beta_consistent(), "{name}");
        assert_eq!(inv.beta(), 1 - inv.b1 as i64 + inv.b2_plus as i64);
        let l = beta_ledger(inv, &[], Some(c2));
        assert!(l.flags.is_empty(), "{name}: {:?}", l.flags);
        assert_eq!(l.relation_parity, Some(inv.beta().rem_euclid(2)), "{name}");
    }
}

#[test]
fn fusing_even_and_odd_preserves_ledger() {
    assert_eq!(fuse(Parity::Even, Parity::Odd), Parity::Even);
    assert_eq!(fuse(Parity::Odd, Parity::Even), Parity::Even);
    assert_eq!(fuse(Parity::Odd, Parity::Odd), Parity::Odd);
    assert_eq!(fuse(Parity::Even, Parity::Even), Parity::Odd);
    for (_, inv, _) in example_manifolds() {
        for rest in [vec![], vec![Parity::Odd], vec![Parity::Even, Parity::Odd]] {
            let mut before = vec![Parity::Even, Parity::Odd];
            before.extend(&rest);
            let mut after = vec![fuse(Parity::Even, Parity::Odd)];
            after.extend(&rest);
            assert_eq!(
                beta_ledger(inv, &before, None).consistent,
                beta_ledger(inv, &after, None).consistent
            );
        }
    }
}

#[test]
fn hopf_invariants_of_standard_maps() {
    let opts = HopfOptions::default();
    let h = hopf_invariant(&hopf_map, &opts).unwrap();
    assert_eq!((h.invariant, h.method), (1, HopfMethod::Linking));
    assert!(h.margin > 0.2);
    assert_eq!(h.components, vec![1, 1]);

    let c = hopf_invariant(&conjugate_hopf_map, &opts).unwrap();
    assert_eq!(c.invariant, -1);

    let k = hopf_invariant(&constant_map, &opts).unwrap();
    assert_eq!((k.invariant, k.method), (0, HopfMethod::NonSurjective));

    let f = hopf_invariant(&lemma_f_map(10.0), &opts).unwrap();
    assert_eq!((f.invariant, f.method), (0, HopfMethod::NonSurjective));
    assert_eq!(f.values, vec![[1.0, 0.0, 0.0]]);
    assert!(f.margin > 0.0);
}

#[test]
fn hopf_invariant_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(0.01..0.2));
        for (map, want) in [(hopf_map as fn(&[f64; 4]) -> [f64; 3], 1), (constant_map, 0)] {
            let rotated = move |p: &[f64; 4]| -> [f64; 3] { (rot * Vector3::from(map(p))).into() };
            assert_eq!(hopf_invariant(&rotated, &HopfOptions::default()).unwrap().invariant, want);
        }
    }
    let dense = HopfOptions {
        samples: 200_000,
        ..HopfOptions::default()
    };
    assert_eq!(hopf_invariant(&hopf_map, &dense).unwrap().invariant, 1);
    assert_eq!(hopf_invariant(&lemma_f_map(10.0), &dense).unwrap().invariant, 0);
}

#[test]
fn explicit_regular_values() {
    let opts = HopfOptions {
        values: Some([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
        ..HopfOptions::default()
    };
    let h = hopf_invariant(&hopf_map, &opts).unwrap();
    assert_eq!(h.invariant, 1);
    assert_eq!(h.attempts, 1);
}

#[test]
fn lemma_f_identity_and_margin() {
    let r = lemma_f_checks(10.0, 100_000).unwrap();
    assert!(r.identity_residual < 1e-9);
    assert!(r.sphere_samples >= 100_000);
    assert!(r.margin > 0.0);
    // Over S^3_10, F points toward (1, 0, 0) only if |z1| < 2, where
    // |z2| >= sqrt(96) against a first component of at most 4.
    assert!(r.min_angle >= (96f64.sqrt() / 4.0).atan() - 1e-12);

    // On |z1| = R, z2 = 0: F = (-2(R - 2), 0, 0)/(R - 2).
    let d = lemma_f_field(&[10.0, 0.0, 0.0, 0.0]);
    assert!((d[0] + 2.0).abs() < 1e-15 && d[1] == 0.0 && d[2] == 0.0);

    // At (3, 0): f = 1 and both sides are (-2, 0, 0).
    let th = CompiledForm::new(&theta());
    let a = pulled_back_theta(&th, &[3.0, 0.0, 0.0, 0.0]);
    assert_eq!(a, [-2.0, 0.0, 0.0]);
    assert_eq!(lemma_f_f(&[3.0, 0.0, 0.0, 0.0]), 1.0);
    assert!(lemma_f_checks(3.0, 1000).is_err());
}

#[test]
fn named_maps() {
    assert!(named_map("hopf", 0.0).is_ok());
    assert!(named_map("lemma-f", 2.0).is_err());
    assert!(matches!(named_map("bogus", 10.0), Err(Error::UnknownModel(_))));
}
