use anyhow::{bail, Result};
use serde_json::json;

use nearsym_core::contour::{csv, panel, svg, PANEL_TIMES};
use nearsym_core::handle::{critical_transition, HandleFamily};
use nearsym_core::moser::{convergence_study, integrate, sample_starts, straightening_problem, FlowOptions};
use nearsym_core::obstruction::{
    beta_ledger, extension_exists, hopf_invariant, j_action, lemma_f_checks, named_map, restrictions, stabilizer,
    HopfOptions, JClass, ManifoldInvariants, Space,
};
use nearsym_core::parity::Parity;

use crate::report::{OutDir, Report};

pub fn contours(delta: f64, times: &[f64], cells: usize, out: &OutDir) -> Result<Report> {
    let fam = HandleFamily::new(delta)?;
    if cells < 2 {
        bail!("need at least 2 cells per axis");
    }
    let mut r = Report::new("contours", None);
    r.param("delta", delta);
    r.param("t", times);
    r.param("cells", cells);

    let mut panels = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        if !(-1.0..=1.0).contains(&t) {
            bail!("t = {t} outside [-1, 1]");
        }
        let p = panel(&fam, t, cells);
        out.write(&mut r, &format!("contours/panel-{k}.svg"), &svg(&fam, &p))?;
        out.write(&mut r, &format!("contours/panel-{k}.csv"), &csv(&fam, t, cells))?;
        panels.push(p);
    }

    let tr = critical_transition(&fam)?;
    r.verdict(
        "single non-degenerate transition",
        tr.nondegenerate,
        json!({ "t_star": tr.t_star, "point": tr.point, "hessian_eigenvalues": tr.hessian_eigenvalues }),
    );
    let described: Vec<String> = panels.iter().map(|p| p.topology.describe()).collect();
    if times == PANEL_TIMES {
        r.verdict(
            "panel progression 2, 2, 1-with-node, 2, 2",
            described == ["2", "2", "1-with-node", "2", "2"],
            &described,
        );
    }
    let pairing = |t: f64| panels.iter().find(|p| p.t == t).map(|p| p.topology.pairing());
    let before = times.iter().copied().filter(|&t| t < tr.t_star).min_by(f64::total_cmp);
    let after = times.iter().copied().filter(|&t| t > tr.t_star).max_by(f64::total_cmp);
    if let (Some(a), Some(b)) = (before, after) {
        let (pa, pb) = (pairing(a), pairing(b));
        r.verdict("endpoint pairing swaps", pa != pb, json!({ "before": pa, "after": pb }));
    }
    r.data = json!({
        "panels": panels.iter().map(|p| json!({
            "t": p.t,
            "described": p.topology.describe(),
            "topology": p.topology,
        })).collect::<Vec<_>>(),
    });
    Ok(r)
}

pub struct MoserArgs {
    pub samples: usize,
    pub tol: f64,
    pub reference_steps: usize,
}

pub fn moser(args: &MoserArgs) -> Result<Report> {
    let mut r = Report::new("moser", Some("straightening"));
    r.param("samples", args.samples);
    r.param("tol", args.tol);
    r.param("reference_steps", args.reference_steps);
    let problem = straightening_problem()?;
    let opts = FlowOptions {
        tol: args.tol,
        ..FlowOptions::default()
    };
    let starts = sample_starts(args.samples, 0.01, 0.3);
    let res = integrate(&problem, &starts, &opts)?;
    r.verdict("pullback residual < 1e-6", res.max_residual < 1e-6, res.max_residual);
    r.verdict("linear solves", res.max_solve_residual < 1e-12, res.max_solve_residual);
    r.verdict("exponential lower bound", res.lower_bound_holds, json!({ "k": res.k, "margin": res.lower_bound_margin }));
    r.verdict("no flagged trajectories", res.flagged == 0, res.flagged);

    let conv = convergence_study(&problem, &sample_starts(8, 0.25, 0.3), &[1, 2, 4, 8], args.reference_steps);
    let span = conv.errors.first().unwrap_or(&0.0) / conv.errors.last().unwrap_or(&1.0);
    let ok = conv.orders.iter().all(|o| (3.5..=4.5).contains(o)) && span > 1e3;
    r.verdict("fourth-order convergence", ok, &conv);

    let bad = integrate(&problem.scaled_primitive(2.0), &starts, &opts)?;
    r.verdict("corrupted primitive detected", bad.max_residual > 1e-3, bad.max_residual);
    r.data = json!({ "k": res.k, "residuals": res.residuals });
    Ok(r)
}

/// Invariants of the named maps.
fn expected_hopf(name: &str) -> Option<i64> {
    match name {
        "hopf" => Some(1),
        "conjugate-hopf" => Some(-1),
        "constant" | "lemma-f" | "F" => Some(0),
        _ => None,
    }
}

pub fn hopf(name: &str, radius: f64, samples: usize) -> Result<Report> {
    let map = named_map(name, radius)?;
    let mut r = Report::new("hopf", Some(name));
    r.param("R", radius);
    r.param("samples", samples);
    let opts = HopfOptions {
        samples,
        ..HopfOptions::default()
    };
    let h = hopf_invariant(&*map, &opts)?;
    if let Some(want) = expected_hopf(name) {
        r.verdict(&format!("hopf invariant {want}"), h.invariant == want, h.invariant);
    }
    r.verdict("margin", h.margin > 0.0, h.margin);
    if matches!(name, "lemma-f" | "F") {
        let f = lemma_f_checks(radius, samples)?;
        r.verdict("pullback identity on f^-1(1)", f.identity_residual < 1e-9, f.identity_residual);
        r.verdict("(1, 0, 0) omitted", f.margin > 0.0, f.margin);
        r.data = json!({ "hopf": h, "lemma_f": f });
    } else {
        r.data = json!({ "hopf": h });
    }
    Ok(r)
}

pub fn parse_parities(s: &str) -> Result<Vec<Parity>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| match x {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            _ => bail!("parity must be `even` or `odd`, got `{x}`"),
        })
        .collect()
}

/// Exhaustive checks of the J-set arithmetic for |n| <= 5 and |m| <= 20.
fn j_set_checks() -> (bool, bool, bool) {
    let mut action = true;
    for n in -5i64..=5 {
        for space in [Space::S3, Space::S1xS2, Space::W] {
            let base = JClass::base(space, n);
            let s = stabilizer(space, n);
            for m in -20i64..=20 {
                for k in -20i64..=20 {
                    action &= j_action(j_action(base, m), k) == j_action(base, m + k);
                }
                let fixed = j_action(base, m) == base;
                action &= fixed == if s == 0 { m == 0 } else { m % s == 0 };
            }
        }
    }
    let base = JClass::base(Space::W, -1);
    let intertwine = (-10..=10).all(|m| {
        let a = j_action(base, m);
        match (restrictions(a), restrictions(j_action(a, 1))) {
            (Ok((r1, r2)), Ok((s1, s2))) => s1 == j_action(r1, -1) && s2 == j_action(r2, 1),
            _ => false,
        }
    });
    let table = extension_exists(0, 0) && !extension_exists(1, 0) && extension_exists(1, -3) && !extension_exists(0, 1);
    (action, intertwine, table)
}

pub fn obstruction(inv: ManifoldInvariants, parities: &[Parity], c2: Option<i64>) -> Result<Report> {
    let mut r = Report::new("obstruction", None);
    r.param("b1", inv.b1);
    r.param("b2plus", inv.b2_plus);
    r.param("b2minus", inv.b2_minus);
    r.param("parities", parities.iter().map(|p| p.to_string()).collect::<Vec<_>>());
    r.param("c2", c2);
    let (action, intertwine, table) = j_set_checks();
    r.verdict("J-action and stabilizers", action, action);
    r.verdict("restrictions intertwine actions", intertwine, intertwine);
    r.verdict("extension criterion", table, table);
    let l = beta_ledger(inv, parities, c2);
    r.verdict("ledger inputs consistent", l.flags.is_empty(), &l.flags);
    r.verdict(
        &format!("even circles = beta mod 2 (beta = {})", l.beta),
        l.consistent,
        json!({ "n_even": l.n_even, "required_parity": l.required_even_parity }),
    );
    r.data = json!({ "ledger": l });
    Ok(r)
}
