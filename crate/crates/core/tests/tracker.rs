use nearsym_core::calibration::{gradient_rank, Region};
use nearsym_core::forms::{Coefficient, FormPath, Point};
use nearsym_core::handle::HandleFamily;
use nearsym_core::models::{base_f_poly, birth_path, omega_delta_path, omega_f, surgery_path, theta};
use nearsym_core::tracker::{t_grid, trace, ComponentKind, EventKind, Slice, TraceOptions, ZeroSetTrace};

/// Distance from p to {x2 = x4 = 0, g = 0} to first order in the in-plane
/// offset, with g(x1, x3) and its gradient given.
fn plane_curve_distance(p: &Point, g: f64, grad: [f64; 2]) -> f64 {
    let gn = (grad[0].powi(2) + grad[1].powi(2)).sqrt();
    (p[1].powi(2) + p[3].powi(2) + (g / gn).powi(2)).sqrt()
}

fn circle_distance(p: &Point, t: f64) -> f64 {
    let r = (p[0] * p[0] + p[2] * p[2]).sqrt();
    (p[1].powi(2) + p[3].powi(2) + (r - t.sqrt()).powi(2)).sqrt()
}

fn hyperbola_distance(p: &Point, t: f64) -> f64 {
    plane_curve_distance(p, p[0] * p[0] - p[2] * p[2] - t, [2.0 * p[0], -2.0 * p[2]])
}

fn distance_to_slice(q: &Point, s: &Slice) -> f64 {
    let mut best = f64::INFINITY;
    for c in &s.components {
        for l in &c.polylines {
            for w in l.windows(2) {
                let ab: Vec<f64> = (0..4).map(|i| w[1][i] - w[0][i]).collect();
                let l2: f64 = ab.iter().map(|x| x * x).sum();
                let u = if l2 > 0.0 {
                    ((0..4).map(|i| (q[i] - w[0][i]) * ab[i]).sum::<f64>() / l2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let d = (0..4)
                    .map(|i| (q[i] - w[0][i] - u * ab[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
    }
    best
}

fn check_points_polished(tr: &ZeroSetTrace, path: &FormPath) {
    for s in &tr.slices {
        let w = path.compiled(s.t);
        let near_event = tr.events.iter().any(|e| (e.t - s.t).abs() < 1e-3);
        for (k, p) in s.points().enumerate() {
            let r = w.values(p).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(r < 1e-8, "residual {r} at t = {}", s.t);
            if !near_event && k % 7 == 0 {
                assert_eq!(gradient_rank(&w, p, None).unwrap().rank, 3, "t = {}", s.t);
            }
        }
    }
}

#[test]
fn birth_trace_matches_circle() {
    let path = birth_path(0.5).unwrap();
    let opts = TraceOptions::default();
    let tr = trace(&path, &Region::unit_ball(), &t_grid(-0.5, 0.5, 100), &opts).unwrap();

    for s in &tr.slices {
        if s.t < 0.0 {
            assert_eq!(s.count(), 0, "t = {}", s.t);
        } else if s.t == 0.0 {
            assert_eq!(s.count(), 1);
            assert_eq!(s.components[0].kind, ComponentKind::Point);
        } else {
            assert_eq!(s.count(), 1, "t = {}", s.t);
            assert_eq!(s.components[0].kind, ComponentKind::Closed);
            for p in s.points() {
                assert!(circle_distance(p, s.t) < 1e-6);
            }
            for k in 0..64 {
                let a = std::f64::consts::TAU * k as f64 / 64.0;
                let q = [s.t.sqrt() * a.cos(), 0.0, s.t.sqrt() * a.sin(), 0.0];
                assert!(distance_to_slice(&q, s) < opts.step, "coverage at t = {}", s.t);
            }
        }
    }
    assert_eq!(tr.events.len(), 1);
    let e = &tr.events[0];
    assert!(e.t.abs() < 1e-6);
    assert_eq!(e.kind, EventKind::Birth);
    assert_eq!(e.index, 0);
    assert_eq!((e.spatial_rank, e.rank_with_time), (2, 3));
    assert!(e.bracket.1 - e.bracket.0 < 1e-6);
    check_points_polished(&tr, &path);
}

#[test]
fn surgery_trace_reconnects_arcs() {
    let path = surgery_path(0.5).unwrap();
    let opts = TraceOptions::default();
    let tr = trace(&path, &Region::cube(1.0), &t_grid(-0.5, 0.5, 100), &opts).unwrap();

    let before = tr.slices[0].signature();
    let after = tr.slices.last().unwrap().signature();
    assert_ne!(before, after);
    for s in &tr.slices {
        if s.t == 0.0 {
            assert_eq!(s.count(), 1);
            assert!(s.components[0].nodes > 0);
            continue;
        }
        assert_eq!(s.count(), 2, "t = {}", s.t);
        assert!(s.components.iter().all(|c| c.kind == ComponentKind::Arc));
        assert_eq!(s.signature(), if s.t < 0.0 { before.clone() } else { after.clone() });
        for p in s.points() {
            assert!(hyperbola_distance(p, s.t) < 1e-6);
        }
        // Sample the locus by x3 (t > 0) or x1 (t < 0) and check coverage.
        for k in 0..=40 {
            let u = -0.9 + 1.8 * k as f64 / 40.0;
            for sign in [-1.0, 1.0] {
                let v = sign * (u * u + s.t.abs()).sqrt();
                if v.abs() > 0.95 {
                    continue;
                }
                let q = if s.t > 0.0 { [v, 0.0, u, 0.0] } else { [u, 0.0, v, 0.0] };
                assert!(distance_to_slice(&q, s) < opts.step, "coverage at t = {}", s.t);
            }
        }
    }
    // Arcs join opposite sides of x3 = 0 before and opposite sides of x1 = 0 after.
    assert_eq!(before[0].2, vec!["+0+0".to_string(), "-0+0".to_string()]);
    assert_eq!(after[0].2, vec!["+0+0".to_string(), "+0-0".to_string()]);

    assert_eq!(tr.events.len(), 1);
    let e = &tr.events[0];
    assert!(e.t.abs() < 1e-6);
    assert_eq!(e.kind, EventKind::Surgery);
    assert_eq!(e.index, 1);
    assert_eq!((e.spatial_rank, e.rank_with_time), (2, 3));
    check_points_polished(&tr, &path);
}

#[test]
fn constant_theta_is_one_line() {
    let path = FormPath::constant(theta());
    let tr = trace(&path, &Region::cube(1.0), &t_grid(0.0, 1.0, 4), &TraceOptions::default()).unwrap();
    assert!(tr.events.is_empty());
    for s in &tr.slices {
        assert_eq!(s.count(), 1);
        assert_eq!(s.components[0].kind, ComponentKind::Arc);
        for p in s.points() {
            assert!((p[1].powi(2) + p[2].powi(2) + p[3].powi(2)).sqrt() < 1e-6);
        }
    }
    assert_eq!(tr.count_components(0.4), 1);
}

#[test]
fn omega_f_has_two_segments() {
    let w = omega_f(&Coefficient::from(base_f_poly())).unwrap();
    let path = FormPath::constant(w);
    let tr = trace(&path, &Region::cube(2.0), &[0.0], &TraceOptions::default()).unwrap();
    assert_eq!(tr.count_components(0.0), 2);
    for p in tr.slices[0].points() {
        let d = plane_curve_distance(p, 0.25 * (p[2] * p[2] - 1.0), [0.0, 0.5 * p[2]]);
        assert!(d < 1e-6);
    }
}

#[test]
fn handle_path_swaps_connectivity() {
    let fam = HandleFamily::new(0.1).unwrap();
    let path = omega_delta_path(fam, 0.5).unwrap();
    let region = Region::u_delta(0.1).unwrap();
    let tr = trace(&path, &region, &[-1.0, -0.5, 0.25, 0.75, 1.0], &TraceOptions::default()).unwrap();
    for t in [-1.0, -0.5, 0.75, 1.0] {
        assert_eq!(tr.count_components(t), 2);
    }
    assert_eq!(tr.slices[0].signature(), tr.slices[2].signature());
    assert_eq!(tr.slices[3].signature(), tr.slices[4].signature());
    assert_ne!(tr.slices[0].signature(), tr.slices[4].signature());
    assert_eq!(tr.events.len(), 1);
    let e = &tr.events[0];
    // f_t(0, 0) = -1/4 + (1 + t)/6 vanishes at t = 1/2.
    assert!((e.t - 0.5).abs() < 1e-6);
    assert_eq!(e.kind, EventKind::Surgery);
    assert_eq!(e.spatial_rank, 2);
}
