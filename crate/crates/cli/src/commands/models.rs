use anyhow::{bail, Result};
use serde_json::json;

use nearsym_core::calibration::{gradient_rank, is_closed, near_positive_report};
use nearsym_core::forms::{rat_int, CompiledForm, DifferentialForm, FormPath, Point, Poly4};
use nearsym_core::handle::{c1_bound_and_epsilon, HandleFamily};
use nearsym_core::models::{
    build, contact_checks, omega_delta_estimates, quotient_consistency, ModelKind, ModelSpec, QuotientModel,
};
use nearsym_core::parity::{glued_model, parity as circle_parity, Circle, Parity, ParityOptions};
use nearsym_core::tracker::{self, ComponentKind, EventKind, TraceOptions, ZeroSetTrace};

use super::{region_for, t_range};
use crate::report::{round_floats, to_value, OutDir, Report};

fn record_spec(r: &mut Report, spec: &ModelSpec) {
    match spec.kind {
        ModelKind::Birth | ModelKind::Surgery => {
            r.param("epsilon", spec.epsilon);
            r.param("t", spec.t);
        }
        ModelKind::OmegaDeltaT => {
            r.param("epsilon", spec.epsilon);
            r.param("delta", spec.delta);
            r.param("t", spec.t);
        }
        _ => {}
    }
}

/// Known zeros of each model at its parameter value.
fn known_zeros(spec: &ModelSpec) -> Vec<Point> {
    let t = spec.t;
    match spec.kind {
        ModelKind::Theta | ModelKind::ThetaEv | ModelKind::ThetaOdd => {
            vec![[-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.0]]
        }
        ModelKind::MorseForm => vec![[0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 0.0, 0.75]],
        ModelKind::Birth if t > 0.0 => {
            let r = t.sqrt();
            vec![[r, 0.0, 0.0, 0.0], [0.0, 0.0, -r, 0.0], [r * 0.6, 0.0, r * 0.8, 0.0]]
        }
        ModelKind::Surgery if t != 0.0 => [-0.5f64, 0.0, 0.5]
            .iter()
            .map(|&u| {
                let v = (u * u + t.abs()).sqrt();
                if t > 0.0 {
                    [v, 0.0, u, 0.0]
                } else {
                    [u, 0.0, v, 0.0]
                }
            })
            .collect(),
        ModelKind::OmegaF => vec![[0.0, 0.0, 1.0, 0.0], [1.7, 0.0, -1.0, 0.0]],
        // Outside the handle square f_t is the base function.
        ModelKind::OmegaDeltaT => vec![[1.7, 0.0, 1.0, 0.0], [1.7, 0.0, -1.0, 0.0], [-1.7, 0.0, 1.0, 0.0]],
        _ => Vec::new(),
    }
}

pub fn verify(spec: &ModelSpec, grid: usize, estimate_grid: usize) -> Result<Report> {
    let kind = spec.kind;
    let mut r = Report::new("verify", Some(kind.name()));
    record_spec(&mut r, spec);
    r.param("grid", grid);
    let model = build(spec)?;
    let region = region_for(spec)?;
    let w = CompiledForm::new(&model.form);

    let closed = is_closed(&model.form, &region.grid(5), 1e-9)?;
    r.verdict("closed", closed.closed, &closed);

    let np = near_positive_report(&w, &region, grid);
    r.verdict(
        "near-positive on grid",
        np.near_positive,
        json!({
            "points_checked": np.points_checked,
            "positive_points": np.positive_points,
            "zero_points": np.zero_points.len(),
            "min_square": np.min_square,
            "counterexamples": np.counterexamples.iter().take(5).collect::<Vec<_>>(),
        }),
    );

    let zeros = known_zeros(spec);
    if !zeros.is_empty() {
        let verdicts: Vec<_> = zeros.iter().map(|p| gradient_rank(&w, p, None)).collect();
        let ok = verdicts.iter().all(|v| matches!(v, Ok(g) if g.rank == 3));
        let ranks: Vec<_> = verdicts
            .iter()
            .map(|v| v.as_ref().map(|g| g.rank as i64).unwrap_or(-1))
            .collect();
        r.verdict("rank 3 at known zeros", ok, json!({ "points": zeros, "ranks": ranks }));
    }

    match kind {
        ModelKind::Theta => {
            let sq = model.form.wedge(&model.form)?;
            let x = |i| Poly4::var(i).pow(2);
            let want = (&(&x(1) + &x(2)) + &x(3).scale(&rat_int(4))).scale(&rat_int(2));
            let ok = sq.exact_eq(&DifferentialForm::volume().mul_function(&want.into()))?;
            r.verdict("wedge square 2(x1^2 + x2^2 + 4 x3^2) dvol", ok, ok);
        }
        ModelKind::ThetaEv | ModelKind::ThetaOdd => {
            let q = model.quotient.clone().expect("quotient model");
            let c = quotient_consistency(&q)?;
            r.verdict("deck invariance", c.consistent, c.consistent);
        }
        ModelKind::OmegaDeltaT => {
            let fam = HandleFamily::new(spec.delta)?;
            let e = omega_delta_estimates(fam, spec.epsilon, spec.t, estimate_grid)?;
            r.verdict("square bound delta(x2^2 + x4^2)", e.lower_bound_margin >= -1e-9, e.lower_bound_margin);
            r.verdict("plane identity", e.plane_residual < 1e-9, e.plane_residual);
            r.verdict("t-independent outside square", e.t_dependence_outside < 1e-12, e.t_dependence_outside);
            let c = contact_checks(&fam, spec.epsilon, &[spec.t], 9)?;
            r.verdict("d alpha = zeta", c.d_alpha_is_zeta && c.d_corrected_is_zeta, true);
            r.verdict(
                "perturbed primitive contact on C_delta",
                c.contact_on_c_delta_corrected,
                c.min_criterion_corrected,
            );
            r.data = json!({ "estimates": e, "contact": c });
        }
        _ => {}
    }
    Ok(r)
}

pub struct TraceArgs {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub steps: usize,
    pub seeds: usize,
    pub step: f64,
}

fn path_of(spec: &ModelSpec) -> Result<FormPath> {
    let model = build(spec)?;
    Ok(match (model.path, model.quotient) {
        (Some(p), _) => p,
        (None, Some(q)) => FormPath::constant(q.base),
        (None, None) => FormPath::constant(model.form),
    })
}

fn summarize(tr: &ZeroSetTrace) -> serde_json::Value {
    let slices: Vec<_> = tr
        .slices
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "count": s.count(),
                "components": s.components.iter().map(|c| json!({
                    "kind": c.kind,
                    "nodes": c.nodes,
                    "endpoint_labels": c.endpoint_labels,
                    "points": c.points().count(),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "slices": slices, "events": tr.events })
}

pub fn trace(spec: &ModelSpec, args: &TraceArgs, out: &OutDir) -> Result<Report> {
    let kind = spec.kind;
    let (lo, hi) = t_range(kind);
    let (lo, hi) = (args.t_min.unwrap_or(lo), args.t_max.unwrap_or(hi));
    if args.steps < 2 || hi <= lo {
        bail!("need at least 2 steps and t-min < t-max");
    }
    let mut r = Report::new("trace", Some(kind.name()));
    record_spec(&mut r, spec);
    r.param("t_min", lo);
    r.param("t_max", hi);
    r.param("steps", args.steps);
    r.param("seeds_per_axis", args.seeds);
    r.param("step", args.step);

    let path = path_of(spec)?;
    let region = region_for(spec)?;
    let opts = TraceOptions {
        seeds_per_axis: args.seeds,
        step: args.step,
        ..TraceOptions::default()
    };
    let grid = tracker::t_grid(lo, hi, args.steps - 1);
    let tr = tracker::trace(&path, &region, &grid, &opts)?;

    let mut worst = 0.0f64;
    for s in &tr.slices {
        let w = path.compiled(s.t);
        for p in s.points() {
            worst = w.values(p).iter().fold(worst, |a, x| a.max(x.abs()));
        }
    }
    r.verdict("points polished", worst < 1e-8, worst);

    let events: Vec<_> = tr.events.iter().map(|e| (e.kind, e.t)).collect();
    let expect = |r: &mut Report, want: EventKind, t0: f64| {
        let ok = tr.events.len() == 1 && tr.events[0].kind == want && (tr.events[0].t - t0).abs() < 1e-6;
        r.verdict(&format!("single {want:?} event at t = {t0}").to_lowercase(), ok, &events);
    };
    let contains = |t: f64| lo < t && t < hi;
    match kind {
        ModelKind::Birth if contains(0.0) => expect(&mut r, EventKind::Birth, 0.0),
        ModelKind::Surgery if contains(0.0) => expect(&mut r, EventKind::Surgery, 0.0),
        ModelKind::OmegaDeltaT if contains(0.5) => expect(&mut r, EventKind::Surgery, 0.5),
        ModelKind::Theta | ModelKind::ThetaEv | ModelKind::ThetaOdd | ModelKind::MorseForm => {
            let ok = tr.events.is_empty()
                && tr
                    .slices
                    .iter()
                    .all(|s| s.count() == 1 && s.components[0].kind == ComponentKind::Arc);
            r.verdict("one zero line, no events", ok, &events);
        }
        _ => r.verdict("trace completed", true, &events),
    }
    let rel = format!("trace-{}.json", kind.name());
    out.write(&mut r, &rel, &serde_json::to_string(&round_floats(to_value(&tr)))?)?;
    r.data = summarize(&tr);
    Ok(r)
}

/// Quotient models by name: the two Θ models and the glued circle.
fn quotient_by_name(name: &str) -> Result<(QuotientModel, Parity)> {
    Ok(match name {
        "theta-ev" => (QuotientModel::theta_ev(), Parity::Even),
        "theta-odd" => (QuotientModel::theta_odd(), Parity::Odd),
        "glued" => (glued_model()?, Parity::Even),
        _ => return Err(nearsym_core::Error::UnknownModel(name.to_string()).into()),
    })
}

pub fn parity(name: &str, samples: usize, reverse: bool) -> Result<Report> {
    let (q, want) = quotient_by_name(name)?;
    let mut r = Report::new("parity", Some(name));
    r.param("samples", samples);
    r.param("reverse", reverse);
    let w = CompiledForm::new(&q.base);
    let mut circle = Circle::quotient_axis(&q);
    if reverse {
        circle = circle.reversed()?;
    }
    let opts = ParityOptions {
        samples,
        ..ParityOptions::new()
    };
    let rep = circle_parity(&w, &circle, &opts)?;
    r.verdict(&format!("parity is {want}"), rep.parity == want, rep.parity.to_string());
    r.verdict(
        "S symmetric and trace-free",
        rep.max_asymmetry < 1e-9 && rep.max_trace < 1e-9,
        json!({ "max_asymmetry": rep.max_asymmetry, "max_trace": rep.max_trace }),
    );
    r.verdict("eigenline continuity", rep.min_continuity > 0.9, rep.min_continuity);
    r.data = json!({
        "parity": rep.parity.to_string(),
        "monodromy_sign": rep.monodromy_sign,
        "reversed": rep.reversed,
        "samples": rep.samples.len(),
        "first_sample": rep.samples.first(),
    });
    Ok(r)
}

/// ε from the C^1 bound of the handle family at the given δ.
pub fn handle_epsilon(delta: f64) -> Result<f64> {
    Ok(c1_bound_and_epsilon(&[delta], 5, 81)?.epsilon)
}
