//! Moser flows for affine paths of 2-forms.

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{
    fiber_from_center, homotopy_operator, numeric::two_form_matrix, numeric::two_form_values, rat,
    CompiledForm, Coefficient, DifferentialForm, Point, Poly4,
};
use crate::models::theta;

/// Central-difference step for flow Jacobians.
pub const FLOW_FD_STEP: f64 = 1e-5;
/// Threshold on the Pfaffian |det θ_s(p)|^(1/2) below which the field is
/// not solved for.
pub const PFAFFIAN_TOL: f64 = 1e-12;

/// Quintic smoothstep on [0, 1].
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// χ(t, x) = χ1(t) χ2(|x|), with |x| the distance to the t-axis.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Cutoff {
    /// χ1 = 1 on this interval.
    pub t_plateau: (f64, f64),
    /// Width over which χ1 falls to 0.
    pub t_ramp: f64,
    /// χ2 = 1 for |x| <= r_inner and 0 for |x| >= r_outer.
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Cutoff {
    pub fn none() -> Self {
        Self {
            t_plateau: (f64::NEG_INFINITY, f64::INFINITY),
            t_ramp: 1.0,
            r_inner: f64::INFINITY,
            r_outer: f64::INFINITY,
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        let (a, b) = self.t_plateau;
        let t = p[0];
        let c1 = if t < a {
            smoothstep(1.0 - (a - t) / self.t_ramp)
        } else if t > b {
            smoothstep(1.0 - (t - b) / self.t_ramp)
        } else {
            1.0
        };
        let r = fiber_norm(p);
        let c2 = if r <= self.r_inner {
            1.0
        } else {
            smoothstep((self.r_outer - r) / (self.r_outer - self.r_inner))
        };
        c1 * c2
    }
}

/// Distance from p to the t-axis.
pub fn fiber_norm(p: &Point) -> f64 {
    (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt()
}

/// The affine path θ_s = (1-s) θ0 + s θ1 with a primitive of θ1 - θ0.
#[derive(Clone)]
pub struct MoserProblem {
    pub theta0: CompiledForm,
    pub theta1: CompiledForm,
    pub eta_dot: CompiledForm,
    pub cutoff: Cutoff,
}

impl MoserProblem {
    pub fn new(
        theta0: &DifferentialForm,
        theta1: &DifferentialForm,
        eta_dot: &DifferentialForm,
        cutoff: Cutoff,
    ) -> Result<Self> {
        for (f, d) in [(theta0, 2), (theta1, 2), (eta_dot, 1)] {
            if f.degree() != d {
                return Err(Error::WrongDegree {
                    expected: d,
                    found: f.degree(),
                });
            }
        }
        Ok(Self {
            theta0: CompiledForm::new(theta0),
            theta1: CompiledForm::new(theta1),
            eta_dot: CompiledForm::new(eta_dot),
            cutoff,
        })
    }

    /// Primitive from the homotopy operator centred on the t-axis.
    pub fn with_homotopy_primitive(
        theta0: &DifferentialForm,
        theta1: &DifferentialForm,
        cutoff: Cutoff,
    ) -> Result<Self> {
        let eta = homotopy_operator(&theta1.sub(theta0), &fiber_from_center(&[0]))?;
        Self::new(theta0, theta1, &eta, cutoff)
    }

    /// Same problem with the primitive multiplied by `c`.
    pub fn scaled_primitive(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.eta_dot = self.eta_dot.scaled(c);
        out
    }

    fn matrix(&self, p: &Point, s: f64) -> Matrix4<f64> {
        let a = two_form_matrix(&two_form_values(&self.theta0, p));
        let b = two_form_matrix(&two_form_values(&self.theta1, p));
        Matrix4::from_fn(|i, j| (1.0 - s) * a[i][j] + s * b[i][j])
    }
}

/// Θ + (3/10) d(x1^2 x2 dx3) in coordinates (t, x1, x2, x3).
pub fn perturbed_theta() -> DifferentialForm {
    let beta = DifferentialForm::term(Coefficient::Exact(&Poly4::var(1).pow(2) * &Poly4::var(2)), &[3]);
    let d = beta.exterior_derivative().expect("polynomial");
    theta().add(&d.scale(&rat(3, 10)))
}

/// θ_s = (1-s) ω + s Θ for the perturbed ω, cut off outside a tube.
pub fn straightening_problem() -> Result<MoserProblem> {
    MoserProblem::with_homotopy_primitive(
        &perturbed_theta(),
        &theta(),
        Cutoff {
            t_plateau: (-1.0, 2.0),
            t_ramp: 1.0,
            r_inner: 0.6,
            r_outer: 0.9,
        },
    )
}

/// Constant path at ω with zero primitive.
pub fn constant_problem(w: &DifferentialForm) -> Result<MoserProblem> {
    MoserProblem::new(w, w, &DifferentialForm::zero(1), Cutoff::none())
}

/// Solution v of ι(v)θ_s(p) = -χ(p) η̇(p) and the residual of the solve.
pub fn moser_field(problem: &MoserProblem, p: &Point, s: f64) -> Result<([f64; 4], f64)> {
    let m = problem.matrix(p, s);
    let det = m.determinant();
    if det.abs().sqrt() < PFAFFIAN_TOL {
        return Err(Error::Singular(det));
    }
    let chi = problem.cutoff.eval(p);
    let eta = problem.eta_dot.values(p);
    let rhs = Vector4::from_fn(|i, _| -chi * eta[i]);
    // (ι(v)θ)_b = Σ_a v_a θ_ab
    let mt = m.transpose();
    let v = mt.lu().solve(&rhs).ok_or(Error::Singular(det))?;
    let residual = (mt * v - rhs).amax();
    Ok((std::array::from_fn(|i| v[i]), residual))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowOptions {
    /// Local error tolerance of the step-doubling controller.
    pub tol: f64,
    /// Fixed number of RK4 steps instead of adaptive control.
    pub fixed_steps: Option<usize>,
    pub s_span: (f64, f64),
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            fixed_steps: None,
            s_span: (0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub start: Point,
    /// Accepted (s, point) pairs, starting at the start point.
    pub points: Vec<(f64, Point)>,
    pub end: Point,
    /// Largest |v| / |x| seen along the trajectory.
    pub max_ratio: f64,
    pub max_solve_residual: f64,
    pub flagged: Option<String>,
}

fn rk4_step(problem: &MoserProblem, x: &Point, s: f64, h: f64) -> Result<(Point, f64)> {
    let f = |y: &Point, s: f64| moser_field(problem, y, s);
    let add = |y: &Point, k: &[f64; 4], c: f64| -> Point { std::array::from_fn(|i| y[i] + c * k[i]) };
    let (k1, r1) = f(x, s)?;
    let (k2, r2) = f(&add(x, &k1, h / 2.0), s + h / 2.0)?;
    let (k3, r3) = f(&add(x, &k2, h / 2.0), s + h / 2.0)?;
    let (k4, r4) = f(&add(x, &k3, h), s + h)?;
    let out = std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    Ok((out, r1.max(r2).max(r3).max(r4)))
}

fn ratio(problem: &MoserProblem, x: &Point, s: f64) -> f64 {
    let r = fiber_norm(x);
    match moser_field(problem, x, s) {
        Ok((v, _)) if r > 0.0 => v.iter().map(|c| c * c).sum::<f64>().sqrt() / r,
        _ => 0.0,
    }
}

/// Flow of the Moser field from one start point.
pub fn flow(problem: &MoserProblem, start: &Point, opts: &FlowOptions) -> Trajectory {
    let (s0, s1) = opts.s_span;
    let mut tr = Trajectory {
        start: *start,
        points: vec![(s0, *start)],
        end: *start,
        max_ratio: ratio(problem, start, s0),
        max_solve_residual: 0.0,
        flagged: None,
    };
    let mut x = *start;
    let mut s = s0;
    let accept = |tr: &mut Trajectory, x: Point, s: f64, r: f64| {
        tr.points.push((s, x));
        tr.max_ratio = tr.max_ratio.max(ratio(problem, &x, s));
        tr.max_solve_residual = tr.max_solve_residual.max(r);
    };
    if let Some(n) = opts.fixed_steps {
        let h = (s1 - s0) / n as f64;
        for k in 0..n {
            match rk4_step(problem, &x, s, h) {
                Ok((y, r)) => {
                    x = y;
                    s = s0 + (k + 1) as f64 * h;
                    accept(&mut tr, x, s, r);
                }
                Err(e) => {
                    tr.flagged = Some(e.to_string());
                    break;
                }
            }
        }
    } else {
        let mut h = (s1 - s0) / 8.0;
        while s < s1 && tr.flagged.is_none() {
            h = h.min(s1 - s);
            let full = rk4_step(problem, &x, s, h);
            let half = rk4_step(problem, &x, s, h / 2.0)
                .and_then(|(y, r1)| rk4_step(problem, &y, s + h / 2.0, h / 2.0).map(|(z, r2)| (z, r1.max(r2))));
            match (full, half) {
                (Ok((y1, _)), Ok((y2, r))) => {
                    let err = (0..4).map(|i| (y2[i] - y1[i]).abs()).fold(0.0, f64::max) / 15.0;
                    if err <= opts.tol {
                        x = y2;
                        s += h;
                        accept(&mut tr, x, s, r);
                        let grow = if err == 0.0 { 2.0 } else { 0.9 * (opts.tol / err).powf(0.2) };
                        h *= grow.clamp(0.2, 2.0);
                    } else {
                        h *= 0.5;
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    h *= 0.5;
                    if h < 1e-12 {
                        tr.flagged = Some(e.to_string());
                    }
                }
            }
            if h < 1e-12 && tr.flagged.is_none() {
                tr.flagged = Some("step size underflow".into());
            }
        }
    }
    tr.end = x;
    tr
}

/// max |(Dφ)^T θ1(φ(p)) Dφ - θ0(p)| with a central-difference Jacobian of φ.
pub fn pullback_residual(problem: &MoserProblem, p: &Point, end: &Point, opts: &FlowOptions) -> Result<f64> {
    let mut dphi = Matrix4::zeros();
    for j in 0..4 {
        let mut a = *p;
        let mut b = *p;
        a[j] += FLOW_FD_STEP;
        b[j] -= FLOW_FD_STEP;
        let (ta, tb) = (flow(problem, &a, opts), flow(problem, &b, opts));
        if let Some(e) = ta.flagged.or(tb.flagged) {
            return Err(Error::FamilyInvalid(format!("flow failed near {p:?}: {e}")));
        }
        for i in 0..4 {
            dphi[(i, j)] = (ta.end[i] - tb.end[i]) / (2.0 * FLOW_FD_STEP);
        }
    }
    let m1 = problem.matrix(end, 1.0);
    let m0 = problem.matrix(p, 0.0);
    Ok((dphi.transpose() * m1 * dphi - m0).amax())
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowResult {
    pub trajectories: Vec<Trajectory>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_solve_residual: f64,
    /// Measured sup |v| / |x| over all trajectories.
    pub k: f64,
    /// Smallest |x_s| / (e^{-ks} |x_0|) over all trajectories.
    pub lower_bound_margin: f64,
    pub lower_bound_holds: bool,
    pub flagged: usize,
}

/// Integrates from every start, checks the pullback identity at each and
/// the exponential lower bound along each trajectory.
pub fn integrate(problem: &MoserProblem, starts: &[Point], opts: &FlowOptions) -> Result<FlowResult> {
    let trajectories: Vec<Trajectory> = starts.par_iter().map(|p| flow(problem, p, opts)).collect();
    let residuals: Vec<f64> = starts
        .par_iter()
        .zip(&trajectories)
        .map(|(p, t)| {
            if t.flagged.is_some() {
                Ok(f64::NAN)
            } else {
                pullback_residual(problem, p, &t.end, opts)
            }
        })
        .collect::<Result<_>>()?;
    let k = trajectories.iter().map(|t| t.max_ratio).fold(0.0, f64::max);
    let mut margin = f64::INFINITY;
    for t in trajectories.iter().filter(|t| t.flagged.is_none()) {
        let r0 = fiber_norm(&t.start);
        for (s, x) in &t.points {
            let bound = (-k * (s - opts.s_span.0)).exp() * r0;
            if bound > 0.0 {
                margin = margin.min(fiber_norm(x) / bound);
            }
        }
    }
    let finite: Vec<f64> = residuals.iter().copied().filter(|r| r.is_finite()).collect();
    Ok(FlowResult {
        max_residual: finite.iter().copied().fold(0.0, f64::max),
        max_solve_residual: trajectories.iter().map(|t| t.max_solve_residual).fold(0.0, f64::max),
        flagged: trajectories.iter().filter(|t| t.flagged.is_some()).count(),
        lower_bound_holds: margin >= 1.0 - 1e-9,
        lower_bound_margin: margin,
        k,
        trajectories,
        residuals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Convergence {
    pub steps: Vec<usize>,
    /// Max endpoint error against a fine fixed-step reference.
    pub errors: Vec<f64>,
    /// log2 of successive error ratios.
    pub orders: Vec<f64>,
}

/// Fixed-step RK4 endpoint errors for each step count against `reference` steps.
pub fn convergence_study(problem: &MoserProblem, starts: &[Point], steps: &[usize], reference: usize) -> Convergence {
    let run = |n: usize| -> Vec<Point> {
        starts
            .par_iter()
            .map(|p| {
                let opts = FlowOptions {
                    fixed_steps: Some(n),
                    ..FlowOptions::default()
                };
                flow(problem, p, &opts).end
            })
            .collect()
    };
    let exact = run(reference);
    let errors: Vec<f64> = steps
        .iter()
        .map(|&n| {
            run(n)
                .iter()
                .zip(&exact)
                .map(|(a, b)| (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max)
        })
        .collect();
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Convergence {
        steps: steps.to_vec(),
        errors,
        orders,
    }
}

/// Largest |v| / |x| over the given points at path parameter s.
pub fn lipschitz_ratio(problem: &MoserProblem, points: &[Point], s: f64) -> f64 {
    points.iter().map(|p| ratio(problem, p, s)).fold(0.0, f64::max)
}

/// Deterministic start points with t in [0.1, 0.9] and |x| in [r_min, r_max].
pub fn sample_starts(n: usize, r_min: f64, r_max: f64) -> Vec<Point> {
    // Low-discrepancy sequence from the golden-ratio family.
    let g = [0.754877666246693, 0.569840290998053, 0.430159709001947, 0.324717957244746];
    (0..n)
        .map(|k| {
            let u: [f64; 4] = std::array::from_fn(|i| (0.5 + g[i] * (k + 1) as f64).fract());
            let t = 0.1 + 0.8 * u[0];
            let r = r_min + (r_max - r_min) * u[1];
            let z = 2.0 * u[2] - 1.0;
            let phi = std::f64::consts::TAU * u[3];
            let q = (1.0 - z * z).sqrt();
            [t, r * q * phi.cos(), r * q * phi.sin(), r * z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_profile() {
        let c = Cutoff {
            t_plateau: (0.0, 1.0),
            t_ramp: 0.5,
            r_inner: 0.5,
            r_outer: 1.0,
        };
        assert_eq!(c.eval(&[0.5, 0.1, 0.0, 0.0]), 1.0);
        assert_eq!(c.eval(&[0.5, 1.2, 0.0, 0.0]), 0.0);
        assert_eq!(c.eval(&[-0.6, 0.1, 0.0, 0.0]), 0.0);
        let mid = c.eval(&[0.5, 0.75, 0.0, 0.0]);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn starts_lie_in_shell() {
        for p in sample_starts(50, 0.01, 0.3) {
            let r = fiber_norm(&p);
            assert!((0.01 - 1e-12..=0.3 + 1e-12).contains(&r));
            assert!((0.1..=0.9).contains(&p[0]));
        }
    }
}
