use nearsym_core::forms::DifferentialForm;
use nearsym_core::models::theta;
use nearsym_core::moser::{
    constant_problem, convergence_study, flow, integrate, lipschitz_ratio, moser_field, sample_starts,
    straightening_problem, Cutoff, FlowOptions, MoserProblem,
};

#[test]
fn constant_path_has_zero_field() {
    let pr = constant_problem(&theta()).unwrap();
    for p in sample_starts(20, 0.01, 0.5) {
        let (v, r) = moser_field(&pr, &p, 0.3).unwrap();
        assert_eq!(v, [0.0; 4]);
        assert_eq!(r, 0.0);
    }
    let res = integrate(&pr, &sample_starts(10, 0.05, 0.2), &FlowOptions::default()).unwrap();
    // Only central-difference rounding remains.
    assert!(res.max_residual < 1e-9);
    for t in &res.trajectories {
        assert_eq!(t.start, t.end);
    }
}

#[test]
fn standard_form_field() {
    // dc12 + dc34 with primitive dc1: v(dc12 + dc34) = -dc1 forces v = ∂c2.
    let w = DifferentialForm::basis(&[0, 1]).add(&DifferentialForm::basis(&[2, 3]));
    let pr = MoserProblem::new(&w, &w, &DifferentialForm::basis(&[0]), Cutoff::none()).unwrap();
    let (v, r) = moser_field(&pr, &[0.2, -0.1, 0.4, 0.0], 0.5).unwrap();
    assert!(r < 1e-12);
    let want = [0.0, 1.0, 0.0, 0.0];
    for i in 0..4 {
        assert!((v[i] - want[i]).abs() < 1e-12);
    }
}

#[test]
fn singular_point_rejected() {
    let pr = straightening_problem().unwrap();
    assert!(moser_field(&pr, &[0.5, 0.0, 0.0, 0.0], 0.5).is_err());
}

#[test]
fn straightening_pulls_back() {
    let pr = straightening_problem().unwrap();
    let starts = sample_starts(100, 0.01, 0.3);
    let res = integrate(&pr, &starts, &FlowOptions::default()).unwrap();
    assert_eq!(res.flagged, 0);
    assert_eq!(res.residuals.len(), 100);
    assert!(res.max_residual < 1e-6, "{}", res.max_residual);
    assert!(res.max_solve_residual < 1e-12);
    assert!(res.lower_bound_holds);
    for t in &res.trajectories {
        for (_, x) in &t.points {
            assert!(pr.cutoff.eval(x) == 1.0);
        }
    }
}

#[test]
fn corrupted_primitive_fails() {
    let pr = straightening_problem().unwrap().scaled_primitive(2.0);
    let res = integrate(&pr, &sample_starts(100, 0.01, 0.3), &FlowOptions::default()).unwrap();
    assert!(res.max_residual > 1e-3, "{}", res.max_residual);
}

#[test]
fn rk4_is_fourth_order() {
    let pr = straightening_problem().unwrap();
    let c = convergence_study(&pr, &sample_starts(8, 0.25, 0.3), &[1, 2, 4, 8], 512);
    assert!(c.errors[0] / c.errors[3] > 1e3);
    for o in &c.orders {
        assert!((3.5..4.5).contains(o), "{:?}", c.orders);
    }
}

#[test]
fn field_is_linearly_bounded_near_axis() {
    let pr = straightening_problem().unwrap();
    let mut pts = Vec::new();
    for e in [-4, -3, -2, -1] {
        pts.extend(sample_starts(25, 10f64.powi(e), 10f64.powi(e)));
    }
    let k = lipschitz_ratio(&pr, &pts, 0.5);
    assert!(k.is_finite() && k < 1.0);
    // The primitive is cubic in the normal directions, so |v|/|x| shrinks toward the axis.
    let near = lipschitz_ratio(&pr, &pts[..25], 0.5);
    assert!(near < 1e-2 * k);
}

#[test]
fn lower_bound_from_small_start() {
    let pr = straightening_problem().unwrap();
    let start = [0.5, 1e-2, 0.0, 0.0];
    let tr = flow(&pr, &start, &FlowOptions::default());
    assert!(tr.flagged.is_none());
    for (s, x) in &tr.points {
        let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
        assert!(r >= (-tr.max_ratio * s).exp() * 1e-2 * (1.0 - 1e-12));
    }
}
