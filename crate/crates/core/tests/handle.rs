use nearsym_core::calibration::Region;
use nearsym_core::contour::panel;
use nearsym_core::forms::{Coefficient, SampledField};
use nearsym_core::handle::*;
use nearsym_core::models::positivity_condition;

const DELTAS: [f64; 2] = [0.1, 0.05];
const TS: [f64; 5] = [-1.0, -0.5, 0.5, 0.75, 1.0];

fn lin(k: usize, n: usize) -> f64 {
    -2.0 + 4.0 * k as f64 / (n - 1) as f64
}

#[test]
fn endpoint_values() {
    for d in DELTAS {
        let fam = HandleFamily::new(d).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                let (x1, x3) = (lin(i, 41), lin(j, 41));
                assert_eq!(fam.f_t(-1.0, x1, x3), 0.25 * (x3 * x3 - 1.0));
            }
        }
        assert_eq!(fam.f1(2.0, 0.0), -0.25);
        assert_eq!(fam.f1(0.0, 2.0), 0.75);
        assert_eq!(fam.f_t(0.0, 2.0, 1.5), 0.3125);
        assert_eq!(fam.f_t(1.0, 0.0, 0.0), fam.f1(0.0, 0.0));
    }
}

#[test]
fn sup_of_f1() {
    for d in DELTAS {
        let fam = HandleFamily::new(d).unwrap();
        let n = 801;
        let mut sup = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                sup = sup.max(fam.f1(lin(i, n), lin(j, n)).abs());
            }
        }
        assert!((sup - 0.75).abs() < 1e-9, "delta {d}: {sup}");
    }
}

#[test]
fn evenness_and_t_independence_outside_square() {
    for d in DELTAS {
        let fam = HandleFamily::new(d).unwrap();
        for t in TS {
            for i in 0..81 {
                for j in 0..81 {
                    let (x1, x3) = (lin(i, 81), lin(j, 81));
                    let v = fam.f_t(t, x1, x3);
                    assert_eq!(v, fam.f_t(t, -x1, x3));
                    assert_eq!(v, fam.f_t(t, x1, -x3));
                    if !fam.in_square(x1, x3) {
                        assert!((v - fam.f_t(-1.0, x1, x3)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn single_nondegenerate_transition() {
    for d in DELTAS {
        let fam = HandleFamily::new(d).unwrap();
        let tr = critical_transition(&fam).unwrap();
        // f_t(0, 0) = -1/4 + (1 + t)/2 * A with A = 1/3.
        assert!((tr.t_star - 0.5).abs() < 1e-12);
        assert_eq!(tr.point, [0.0, 0.0]);
        assert!(tr.nondegenerate);
        assert!(tr.hessian_eigenvalues[0] < 0.0 && tr.hessian_eigenvalues[1] > 0.0);

        let before = panel(&fam, tr.t_star - 0.05, 512).topology;
        let at = panel(&fam, tr.t_star, 512).topology;
        let after = panel(&fam, tr.t_star + 0.05, 512).topology;
        assert_eq!((before.count(), at.count(), after.count()), (2, 1, 2));
        assert!(at.node_count() > 0);
        assert_eq!(before.pairing(), vec![vec!["NE", "NW"], vec!["SE", "SW"]]);
        assert_eq!(after.pairing(), vec![vec!["NE", "SE"], vec!["NW", "SW"]]);
    }
}

#[test]
fn vanishing_order_one_away_from_transition() {
    for d in DELTAS {
        let fam = HandleFamily::new(d).unwrap();
        for t in TS {
            let p = panel(&fam, t, 512);
            let mut checked = 0;
            for seg in &p.zero_segments {
                for q in seg {
                    if t == 0.5 && q[0].hypot(q[1]) < 0.05 {
                        continue;
                    }
                    let g = fam.jet(t, q[0], q[1]).grad;
                    assert!(g[0].hypot(g[1]) > 1e-6, "delta {d} t {t} at {q:?}");
                    checked += 1;
                }
            }
            assert!(checked > 1000);
        }
    }
}

#[test]
fn x1_slope_on_nonpositive_region() {
    let cs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&d| x1_slope_where_nonpositive(&HandleFamily::new(d).unwrap(), 801))
        .collect();
    for c in &cs {
        assert!(*c < 1.0, "{cs:?}");
    }
    let scaled: Vec<f64> = [0.1, 0.05, 0.025].iter().zip(&cs).map(|(d, c)| d * c).collect();
    assert!(scaled[0] > scaled[1] && scaled[1] > scaled[2], "{scaled:?}");
}

#[test]
fn epsilon_passes_positivity() {
    let b = c1_bound_and_epsilon(&DELTAS, 5, 81).unwrap();
    assert!(b.bound > 0.0);
    assert_eq!(b.epsilon, epsilon_from_bound(b.bound));
    for d in DELTAS {
        let fam = HandleFamily::new(d).unwrap();
        let pts = Region::u_delta(d).unwrap().grid(21);
        for t in TS {
            let eps = b.epsilon;
            let f = SampledField::with_gradient(
                move |p: &[f64; 4]| eps * fam.f_t(t, p[0], p[2]),
                move |p: &[f64; 4]| {
                    let g = fam.jet(t, p[0], p[2]).grad;
                    [eps * g[0], 0.0, eps * g[1], 0.0]
                },
            );
            let r = positivity_condition(&Coefficient::Sampled(f), &pts).unwrap();
            assert!(r.holds, "delta {d} t {t}: {}", r.worst_ratio);
        }
    }
}
