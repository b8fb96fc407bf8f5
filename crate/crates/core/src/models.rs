//! Named model forms and their validity checks.
//!
//! Θ-type models use the chart (t, x1, x2, x3) = (c1, c2, c3, c4); the birth,
//! surgery, ω^f and Ω^δ_t models use (x1, x2, x3, x4) = (c1, c2, c3, c4); the
//! Morse construction uses (x1, x2, x3, t) = (c1, c2, c3, c4).

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::Region;
use crate::error::{Error, Result};
use crate::forms::numeric::{two_form_values, wedge_pairing, wedge_square_value};
use crate::forms::poly::{rat_from_f64, rat_int};
use crate::forms::{
    rat, Coefficient, CompiledForm, DifferentialForm, FormPath, Point, Poly4, Rational, SampledField, SmoothMap,
};
use crate::handle::HandleFamily;

fn x(i: usize) -> Poly4 {
    Poly4::var(i)
}

fn dx(i: usize, j: usize) -> DifferentialForm {
    DifferentialForm::basis(&[i, j])
}

/// The self-dual basis β1 = dc12 + dc34, β2 = dc13 - dc24, β3 = dc14 + dc23.
pub fn betas() -> [DifferentialForm; 3] {
    [
        dx(0, 1).add(&dx(2, 3)),
        dx(0, 2).sub(&dx(1, 3)),
        dx(0, 3).add(&dx(1, 2)),
    ]
}

/// Θ = x1 β1 + x2 β2 - 2 x3 β3.
pub fn theta() -> DifferentialForm {
    let [b1, b2, b3] = betas();
    b1.mul_function(&x(1).into())
        .add(&b2.mul_function(&x(2).into()))
        .add(&b3.mul_function(&x(3).scale(&rat_int(-2)).into()))
}

/// ζ = x2 (dx12 + dx34) - x4 (dx14 + dx23).
pub fn zeta() -> DifferentialForm {
    dx(0, 1)
        .add(&dx(2, 3))
        .mul_function(&x(1).into())
        .sub(&dx(0, 3).add(&dx(1, 2)).mul_function(&x(3).into()))
}

/// η^f = f (dx13 + dx42) + x4 (∂1 f dx12 + ∂3 f dx32), for f = f(x1, x3).
pub fn eta_f(f: &Coefficient) -> Result<DifferentialForm> {
    let f1 = f.partial(0)?;
    let f3 = f.partial(2)?;
    eta_from_parts(f, &f1, &f3)
}

fn eta_from_parts(f: &Coefficient, f1: &Coefficient, f3: &Coefficient) -> Result<DifferentialForm> {
    let x4: Coefficient = x(3).into();
    Ok(DifferentialForm::basis(&[0, 2])
        .add(&DifferentialForm::basis(&[3, 1]))
        .mul_function(f)
        .add(&DifferentialForm::basis(&[0, 1]).mul_function(&x4.mul(f1)))
        .add(&DifferentialForm::basis(&[2, 1]).mul_function(&x4.mul(f3))))
}

/// ω^f = ζ + η^f / 2.
pub fn omega_f(f: &Coefficient) -> Result<DifferentialForm> {
    Ok(zeta().add(&eta_f(f)?.scale(&rat(1, 2))))
}

/// f = (x3^2 - 1)/4 as a polynomial.
pub fn base_f_poly() -> Poly4 {
    (&x(2).pow(2) - &Poly4::one()).scale(&rat(1, 4))
}

fn birth_f(t: &Rational, sign: i64) -> Poly4 {
    (&(&x(0).pow(2) + &x(2).pow(2).scale(&rat_int(sign))) - &Poly4::constant(t.clone()))
        .scale(&rat(1, 2))
}

fn check_birth_params(epsilon: f64, t: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    if !(-0.5..=0.5).contains(&t) {
        return Err(Error::InvalidParameter(format!("t must lie in [-1/2, 1/2], got {t}")));
    }
    Ok(())
}

/// ζ + ε η_t with η_t built from f = (x1^2 + x3^2 - t)/2.
pub fn birth(epsilon: f64, t: f64) -> Result<DifferentialForm> {
    check_birth_params(epsilon, t)?;
    birth_exact(&rat_from_f64(epsilon), &rat_from_f64(t))
}

pub fn birth_exact(epsilon: &Rational, t: &Rational) -> Result<DifferentialForm> {
    Ok(zeta().add(&eta_f(&birth_f(t, 1).into())?.scale(epsilon)))
}

/// ζ + ε η'_t with η'_t built from f = (x1^2 - x3^2 - t)/2.
pub fn surgery(epsilon: f64, t: f64) -> Result<DifferentialForm> {
    check_birth_params(epsilon, t)?;
    surgery_exact(&rat_from_f64(epsilon), &rat_from_f64(t))
}

pub fn surgery_exact(epsilon: &Rational, t: &Rational) -> Result<DifferentialForm> {
    Ok(zeta().add(&eta_f(&birth_f(t, -1).into())?.scale(epsilon)))
}

pub fn birth_path(epsilon: f64) -> Result<FormPath> {
    check_birth_params(epsilon, 0.0)?;
    let e = rat_from_f64(epsilon);
    Ok(FormPath::new(move |t| {
        birth_exact(&e, &rat_from_f64(t)).expect("polynomial coefficients")
    }))
}

pub fn surgery_path(epsilon: f64) -> Result<FormPath> {
    check_birth_params(epsilon, 0.0)?;
    let e = rat_from_f64(epsilon);
    Ok(FormPath::new(move |t| {
        surgery_exact(&e, &rat_from_f64(t)).expect("polynomial coefficients")
    }))
}

/// The three forms spanning the birth model:
/// dx12 + dx34, dx14 + dx23 - ε(x1 dx12 + x3 dx32), dx13 + dx42.
pub fn birth_spanning_forms(epsilon: &Rational) -> [DifferentialForm; 3] {
    let corr = DifferentialForm::term(x(0), &[0, 1]).add(&DifferentialForm::term(x(2), &[2, 1]));
    [
        dx(0, 1).add(&dx(2, 3)),
        dx(0, 3).add(&dx(1, 2)).sub(&corr.scale(epsilon)),
        dx(0, 2).add(&DifferentialForm::basis(&[3, 1])),
    ]
}

/// D_δ(x1, x2, x3, x4) = (δ x1, x2, x3, x4).
pub fn dilation(delta: &Rational) -> SmoothMap {
    SmoothMap::polynomial([x(0).scale(delta), x(1), x(2), x(3)])
}

/// Sampled fields (f_t, ∂1 f_t, ∂3 f_t) on R^4 with closed-form gradients.
pub fn handle_fields(fam: HandleFamily, t: f64) -> [SampledField; 3] {
    let value = SampledField::with_gradient(
        move |p: &Point| fam.f_t(t, p[0], p[2]),
        move |p: &Point| {
            let j = fam.jet(t, p[0], p[2]);
            [j.grad[0], 0.0, j.grad[1], 0.0]
        },
    );
    let d1 = SampledField::with_gradient(
        move |p: &Point| fam.jet(t, p[0], p[2]).grad[0],
        move |p: &Point| {
            let j = fam.jet(t, p[0], p[2]);
            [j.hess[0][0], 0.0, j.hess[0][1], 0.0]
        },
    );
    let d3 = SampledField::with_gradient(
        move |p: &Point| fam.jet(t, p[0], p[2]).grad[1],
        move |p: &Point| {
            let j = fam.jet(t, p[0], p[2]);
            [j.hess[1][0], 0.0, j.hess[1][1], 0.0]
        },
    );
    [value, d1, d3]
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1/10], got {delta}")));
    }
    Ok(())
}

/// Ω^δ_t = D_δ^*ζ + (δε/2)(f_t (δ dx13 + dx42) + x4 (∂1 f_t dx12 + ∂3 f_t dx32)).
pub fn omega_delta_t(fam: HandleFamily, epsilon: f64, t: f64) -> Result<DifferentialForm> {
    check_delta(fam.delta)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t must lie in [-1, 1], got {t}")));
    }
    let delta = rat_from_f64(fam.delta);
    let a = rat_from_f64(fam.delta * epsilon / 2.0);
    let [f, f1, f3] = handle_fields(fam, t).map(Coefficient::Sampled);
    let x4: Coefficient = x(3).into();
    let pert = dx(0, 2)
        .scale(&delta)
        .add(&DifferentialForm::basis(&[3, 1]))
        .mul_function(&f)
        .add(&DifferentialForm::basis(&[0, 1]).mul_function(&x4.mul(&f1)))
        .add(&DifferentialForm::basis(&[2, 1]).mul_function(&x4.mul(&f3)));
    Ok(zeta().pullback(&dilation(&delta))?.add(&pert.scale(&a)))
}

pub fn omega_delta_path(fam: HandleFamily, epsilon: f64) -> Result<FormPath> {
    omega_delta_t(fam, epsilon, 0.0)?;
    Ok(FormPath::new(move |t| {
        omega_delta_t(fam, epsilon, t.clamp(-1.0, 1.0)).expect("validated parameters")
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaEstimate {
    pub delta: f64,
    pub epsilon: f64,
    pub t: f64,
    pub samples: usize,
    /// min over U_δ of Ω^2/dvol - δ(x2^2 + x4^2).
    pub lower_bound_margin: f64,
    pub plane_samples: usize,
    /// max over x2 = x4 = 0 of |Ω^2/dvol - (δ^3 ε^2/2) f_t^2|.
    pub plane_residual: f64,
    /// max coefficient difference from t = -1 outside the handle square.
    pub t_dependence_outside: f64,
}

/// Grid checks of Ω^δ_t on U_δ with n points per axis.
pub fn omega_delta_estimates(fam: HandleFamily, epsilon: f64, t: f64, n: usize) -> Result<OmegaEstimate> {
    let w = CompiledForm::new(&omega_delta_t(fam, epsilon, t)?);
    let w0 = CompiledForm::new(&omega_delta_t(fam, epsilon, -1.0)?);
    let delta = fam.delta;
    let pts = Region::u_delta(delta)?.grid(n);
    let (margin, dep) = pts
        .par_iter()
        .map(|p| {
            let v = two_form_values(&w, p);
            let m = wedge_square_value(&v) - delta * (p[1] * p[1] + p[3] * p[3]);
            let dep = if fam.in_square(p[0], p[2]) {
                0.0
            } else {
                let v0 = two_form_values(&w0, p);
                (0..6).map(|k| (v[k] - v0[k]).abs()).fold(0.0, f64::max)
            };
            (m, dep)
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let scale = delta.powi(3) * epsilon * epsilon / 2.0;
    let mut plane_residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let x1 = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
            let x3 = -2.0 + 4.0 * j as f64 / (n - 1) as f64;
            let v = two_form_values(&w, &[x1, 0.0, x3, 0.0]);
            let want = scale * fam.f_t(t, x1, x3).powi(2);
            plane_residual = plane_residual.max((wedge_square_value(&v) - want).abs());
        }
    }
    Ok(OmegaEstimate {
        delta,
        epsilon,
        t,
        samples: pts.len(),
        lower_bound_margin: margin,
        plane_samples: n * n,
        plane_residual,
        t_dependence_outside: dep,
    })
}

/// ω = df∧dt + *_3 df for f on R^3.
#[derive(Clone, Debug)]
pub struct MorseModel {
    pub form: DifferentialForm,
    pub laplacian: Poly4,
    pub closed: bool,
}

pub fn from_morse(f: &Poly4) -> Result<MorseModel> {
    if f.terms().any(|(e, _)| e[3] != 0) {
        return Err(Error::InvalidParameter(
            "Morse function must not depend on t (the fourth coordinate)".into(),
        ));
    }
    let g: [Poly4; 3] = std::array::from_fn(|i| f.partial(i));
    let dt_part = DifferentialForm::term(g[0].clone(), &[0, 3])
        .add(&DifferentialForm::term(g[1].clone(), &[1, 3]))
        .add(&DifferentialForm::term(g[2].clone(), &[2, 3]));
    let star = DifferentialForm::term(g[0].clone(), &[1, 2])
        .add(&DifferentialForm::term(g[1].clone(), &[2, 0]))
        .add(&DifferentialForm::term(g[2].clone(), &[0, 1]));
    let laplacian = &(&g[0].partial(0) + &g[1].partial(1)) + &g[2].partial(2);
    Ok(MorseModel {
        form: dt_part.add(&star),
        closed: laplacian.is_zero(),
        laplacian,
    })
}

/// A form on R^4 that descends along t ↦ t - 1, optionally composed with σ.
#[derive(Clone, Debug)]
pub struct QuotientModel {
    pub base: DifferentialForm,
    pub sigma: bool,
}

impl QuotientModel {
    pub fn theta_ev() -> Self {
        Self {
            base: theta(),
            sigma: false,
        }
    }

    pub fn theta_odd() -> Self {
        Self {
            base: theta(),
            sigma: true,
        }
    }

    /// (t, x) ↦ (t - 1, σx) with σ(x1, x2, x3) = (x1, -x2, -x3) when enabled.
    pub fn deck_map(&self) -> SmoothMap {
        let s = if self.sigma { -1 } else { 1 };
        SmoothMap::polynomial([
            &x(0) - &Poly4::one(),
            x(1),
            x(2).scale(&rat_int(s)),
            x(3).scale(&rat_int(s)),
        ])
    }

    /// Differential of the deck map (constant).
    pub fn deck_differential(&self) -> [[f64; 4]; 4] {
        let s = if self.sigma { -1.0 } else { 1.0 };
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, s, 0.0],
            [0.0, 0.0, 0.0, s],
        ]
    }
}

#[derive(Clone, Debug)]
pub struct QuotientCheck {
    pub consistent: bool,
    pub difference: DifferentialForm,
}

pub fn quotient_consistency(q: &QuotientModel) -> Result<QuotientCheck> {
    let pulled = q.base.pullback(&q.deck_map())?;
    let difference = pulled.sub(&q.base);
    if !difference.is_exact() {
        return Err(Error::NotExact);
    }
    Ok(QuotientCheck {
        consistent: difference.is_zero(),
        difference,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    pub holds: bool,
    /// Largest |x4^2 ∂3 f + x2 x4 ∂1 f| / (x2^2 + x4^2) seen.
    pub worst_ratio: f64,
    /// 1 / worst_ratio (infinite when the left side vanishes identically).
    pub margin: f64,
}

/// Check |x4^2 ∂3 f + x2 x4 ∂1 f| <= x2^2 + x4^2 at the given points.
pub fn positivity_condition(f: &Coefficient, points: &[Point]) -> Result<PositivityReport> {
    f.gradient(&[0.0; 4])?;
    let worst = points
        .par_iter()
        .map(|p| {
            let g = f.gradient(p).expect("partials checked above");
            let lhs = (p[3] * p[3] * g[2] + p[1] * p[3] * g[0]).abs();
            let r2 = p[1] * p[1] + p[3] * p[3];
            if lhs == 0.0 {
                0.0
            } else if r2 == 0.0 {
                f64::INFINITY
            } else {
                lhs / r2
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(PositivityReport {
        holds: worst <= 1.0,
        worst_ratio: worst,
        margin: if worst == 0.0 { f64::INFINITY } else { 1.0 / worst },
    })
}

/// α = x1 x2 dx2 - x1 x4 dx4 - x2 x4 dx3.
pub fn contact_alpha() -> DifferentialForm {
    DifferentialForm::term(&x(0) * &x(1), &[1])
        .sub(&DifferentialForm::term(&x(0) * &x(3), &[3]))
        .sub(&DifferentialForm::term(&x(1) * &x(3), &[2]))
}

/// ∫_0^{x1} f_t(s, x3) ds in closed form.
pub fn gamma_coefficient(fam: &HandleFamily, t: f64, x1: f64, x3: f64) -> f64 {
    let l = fam.half_width();
    let u = (x1 / l).clamp(-1.0, 1.0);
    let mu_int = l * (u - u.powi(3) + 0.6 * u.powi(5) - u.powi(7) / 7.0);
    let s = 0.5 * (1.0 + t);
    x1 * crate::handle::base_f(x3).value + s * fam.amplitude * fam.nu(x3).v * mu_int
}

/// α' = α - d(x1 (x2^2 - x4^2)/2) = -(x2^2 - x4^2)/2 dx1 - x2 x4 dx3.
///
/// Same differential as α, but d(x2^2 + x4^2)∧α'∧dα' = (x2^2 + x4^2)^2 dvol,
/// so α' is contact on every positive level set of x2^2 + x4^2.
pub fn corrected_contact_alpha() -> DifferentialForm {
    DifferentialForm::term((&x(1).pow(2) - &x(3).pow(2)).scale(&rat(-1, 2)), &[0])
        .sub(&DifferentialForm::term(&x(1) * &x(3), &[2]))
}

/// Which primitive of ζ seeds the perturbed contact family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContactPrimitive {
    /// α = x1 x2 dx2 - x1 x4 dx4 - x2 x4 dx3.
    Alpha,
    /// α' from [`corrected_contact_alpha`].
    Corrected,
}

/// Values of the perturbed contact form D_δ^*α + (δε/2)(x4 f_t dx2 + δ γ_t),
/// with γ_t = g_t dx3 and g_t = ∫_0^{x1} f_t(s, x3) ds.
pub fn perturbed_alpha(
    fam: &HandleFamily,
    epsilon: f64,
    t: f64,
    p: &Point,
    base: ContactPrimitive,
) -> [f64; 4] {
    let d = fam.delta;
    let a = d * epsilon / 2.0;
    let (x1, x2, x3, x4) = (p[0], p[1], p[2], p[3]);
    let f = fam.f_t(t, x1, x3);
    let g = gamma_coefficient(fam, t, x1, x3);
    let pulled = match base {
        ContactPrimitive::Alpha => [0.0, d * x1 * x2, -x2 * x4, -d * x1 * x4],
        ContactPrimitive::Corrected => [-0.5 * d * (x2 * x2 - x4 * x4), 0.0, -x2 * x4, 0.0],
    };
    [pulled[0], pulled[1] + a * x4 * f, pulled[2] + a * d * g, pulled[3]]
}

/// (d(x2^2 + x4^2) ∧ a ∧ w) / dvol.
pub fn contact_criterion(p: &Point, a: &[f64; 4], w: &[f64; 6]) -> f64 {
    let u = [0.0, 2.0 * p[1], 0.0, 2.0 * p[3]];
    let ua: [f64; 6] = std::array::from_fn(|k| {
        let (i, j) = crate::forms::PAIRS[k];
        u[i] * a[j] - u[j] * a[i]
    });
    wedge_pairing(&ua, w)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactReport {
    pub d_alpha_is_zeta: bool,
    /// Whether d(x2^2 + x4^2)∧α∧dα equals 4(x2^2 + x4^2) dvol.
    pub claimed_criterion_identity: bool,
    /// The criterion polynomial actually obtained for α.
    pub alpha_criterion: String,
    pub criterion_vanishes_on_axis: bool,
    pub d_corrected_is_zeta: bool,
    /// d(x2^2 + x4^2)∧α'∧dα' = (x2^2 + x4^2)^2 dvol.
    pub corrected_criterion_identity: bool,
    pub samples: usize,
    /// Smallest criterion value over the samples, for α and for α'.
    pub min_criterion_alpha: f64,
    pub min_criterion_corrected: f64,
    pub contact_on_c_delta_alpha: bool,
    pub contact_on_c_delta_corrected: bool,
    /// max |γ_t - γ_{-1}| over sampled points of C_δ outside the square.
    pub gamma_t_dependence_outside_square: f64,
}

fn criterion_form(alpha: &DifferentialForm) -> Result<DifferentialForm> {
    let r2 = &x(1).pow(2) + &x(3).pow(2);
    DifferentialForm::function(r2)
        .exterior_derivative()?
        .wedge(alpha)?
        .wedge(&alpha.exterior_derivative()?)
}

/// Exact identities for the contact primitives plus a sampled contact test
/// of the perturbed family on C_δ at the given t values.
pub fn contact_checks(
    fam: &HandleFamily,
    epsilon: f64,
    t_values: &[f64],
    n: usize,
) -> Result<ContactReport> {
    let alpha = contact_alpha();
    let corrected = corrected_contact_alpha();
    let d_alpha_is_zeta = alpha.exterior_derivative()?.exact_eq(&zeta())?;
    let d_corrected_is_zeta = corrected.exterior_derivative()?.exact_eq(&zeta())?;
    let r2 = &x(1).pow(2) + &x(3).pow(2);
    let lhs = criterion_form(&alpha)?;
    let claimed = DifferentialForm::volume().mul_function(&r2.scale(&rat_int(4)).into());
    let claimed_criterion_identity = lhs.exact_eq(&claimed)?;
    let alpha_criterion = format!("{}", lhs.display(&crate::forms::BIRTH_ALIASES));
    let corrected_criterion_identity = criterion_form(&corrected)?
        .exact_eq(&DifferentialForm::volume().mul_function(&r2.pow(2).into()))?;
    let on_axis = [[0.3, 0.0, -0.7, 0.0], [1.0, 0.0, 1.0, 0.0]];
    let z = zeta();
    let criterion_vanishes_on_axis = on_axis.iter().all(|p| {
        let av = alpha.values(p);
        let zv = z.values(p);
        let a: [f64; 4] = std::array::from_fn(|i| av[i]);
        let w: [f64; 6] = std::array::from_fn(|i| zv[i]);
        contact_criterion(p, &a, &w) == 0.0
    });

    let region = Region::c_delta(fam.delta)?;
    let pts = region.grid(n);
    let mut mins = [f64::INFINITY; 2];
    let mut gamma_dep = 0.0f64;
    for &t in t_values {
        let w = crate::forms::CompiledForm::new(&omega_delta_t(*fam, epsilon, t)?);
        let m = pts
            .par_iter()
            .map(|p| {
                let v = w.values(p);
                let v6: [f64; 6] = std::array::from_fn(|i| v[i]);
                let a = perturbed_alpha(fam, epsilon, t, p, ContactPrimitive::Alpha);
                let b = perturbed_alpha(fam, epsilon, t, p, ContactPrimitive::Corrected);
                [contact_criterion(p, &a, &v6), contact_criterion(p, &b, &v6)]
            })
            .reduce(
                || [f64::INFINITY; 2],
                |a, b| [a[0].min(b[0]), a[1].min(b[1])],
            );
        mins = [mins[0].min(m[0]), mins[1].min(m[1])];
        for p in &pts {
            if !fam.in_square(p[0], p[2]) {
                let dg = gamma_coefficient(fam, t, p[0], p[2])
                    - gamma_coefficient(fam, -1.0, p[0], p[2]);
                gamma_dep = gamma_dep.max(dg.abs());
            }
        }
    }
    Ok(ContactReport {
        d_alpha_is_zeta,
        claimed_criterion_identity,
        alpha_criterion,
        criterion_vanishes_on_axis,
        d_corrected_is_zeta,
        corrected_criterion_identity,
        samples: pts.len() * t_values.len(),
        min_criterion_alpha: mins[0],
        min_criterion_corrected: mins[1],
        contact_on_c_delta_alpha: mins[0] > 0.0,
        contact_on_c_delta_corrected: mins[1] > 0.0,
        gamma_t_dependence_outside_square: gamma_dep,
    })
}

/// Names accepted by the model registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ModelKind {
    Theta,
    ThetaEv,
    ThetaOdd,
    Birth,
    Surgery,
    OmegaF,
    OmegaDeltaT,
    MorseForm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Theta,
        ModelKind::ThetaEv,
        ModelKind::ThetaOdd,
        ModelKind::Birth,
        ModelKind::Surgery,
        ModelKind::OmegaF,
        ModelKind::OmegaDeltaT,
        ModelKind::MorseForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Theta => "theta",
            ModelKind::ThetaEv => "theta-ev",
            ModelKind::ThetaOdd => "theta-odd",
            ModelKind::Birth => "birth",
            ModelKind::Surgery => "surgery",
            ModelKind::OmegaF => "omega-f",
            ModelKind::OmegaDeltaT => "omega-delta-t",
            ModelKind::MorseForm => "morse",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }

    /// Display names of the four coordinates.
    pub fn aliases(self) -> &'static [&'static str; 4] {
        match self {
            ModelKind::Theta | ModelKind::ThetaEv | ModelKind::ThetaOdd => &crate::forms::THETA_ALIASES,
            ModelKind::MorseForm => &["x1", "x2", "x3", "t"],
            _ => &crate::forms::BIRTH_ALIASES,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub epsilon: f64,
    pub delta: f64,
    pub t: f64,
    /// Function for OmegaF (in x1, x3) or MorseForm (in x1, x2, x3).
    pub f: Option<Poly4>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            epsilon: 0.5,
            delta: 0.1,
            t: 0.25,
            f: None,
        }
    }
}

/// A constructed model: the form at the requested parameter, plus the
/// path or quotient structure when the model has one.
#[derive(Clone)]
pub struct BuiltModel {
    pub kind: ModelKind,
    pub form: DifferentialForm,
    pub path: Option<FormPath>,
    pub quotient: Option<QuotientModel>,
}

pub fn build(spec: &ModelSpec) -> Result<BuiltModel> {
    let kind = spec.kind;
    let mut out = BuiltModel {
        kind,
        form: DifferentialForm::zero(2),
        path: None,
        quotient: None,
    };
    match kind {
        ModelKind::Theta => {
            out.form = theta();
            out.path = Some(FormPath::constant(theta()));
        }
        ModelKind::ThetaEv | ModelKind::ThetaOdd => {
            let q = if kind == ModelKind::ThetaEv {
                QuotientModel::theta_ev()
            } else {
                QuotientModel::theta_odd()
            };
            out.form = q.base.clone();
            out.quotient = Some(q);
        }
        ModelKind::Birth => {
            out.form = birth(spec.epsilon, spec.t)?;
            out.path = Some(birth_path(spec.epsilon)?);
        }
        ModelKind::Surgery => {
            out.form = surgery(spec.epsilon, spec.t)?;
            out.path = Some(surgery_path(spec.epsilon)?);
        }
        ModelKind::OmegaF => {
            let f = spec.f.clone().unwrap_or_else(base_f_poly);
            if f.terms().any(|(e, _)| e[1] != 0 || e[3] != 0) {
                return Err(Error::InvalidParameter("f must depend on x1 and x3 only".into()));
            }
            out.form = omega_f(&f.into())?;
        }
        ModelKind::OmegaDeltaT => {
            let fam = HandleFamily::new(spec.delta)?;
            out.form = omega_delta_t(fam, spec.epsilon, spec.t)?;
            out.path = Some(omega_delta_path(fam, spec.epsilon)?);
        }
        ModelKind::MorseForm => {
            let f = spec.f.clone().unwrap_or_else(harmonic_morse);
            let m = from_morse(&f)?;
            out.form = m.form;
        }
    }
    if out.form.is_exact() {
        debug_assert!(
            kind == ModelKind::MorseForm || out.form.exterior_derivative()?.is_zero(),
            "model {kind} must be closed"
        );
    }
    Ok(out)
}

/// x3^2 - x1^2/2 - x2^2/2.
pub fn harmonic_morse() -> Poly4 {
    &x(2).pow(2) - &(&x(0).pow(2) + &x(1).pow(2)).scale(&rat(1, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betas_are_self_dual() {
        for b in betas() {
            assert!(b.hodge_star().exact_eq(&b).unwrap());
        }
    }

    #[test]
    fn registry_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::from_name(k.name()).unwrap(), k);
        }
        assert!(matches!(ModelKind::from_name("nope"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn parameter_validation() {
        assert!(birth(0.6, 0.0).is_err());
        assert!(surgery(0.5, 0.7).is_err());
        let fam = HandleFamily::new(0.1).unwrap();
        assert!(omega_delta_t(fam, 0.5, 1.5).is_err());
        assert!(HandleFamily::new(0.0).is_err());
    }

    #[test]
    fn morse_standard_form() {
        let m = from_morse(&x(2)).unwrap();
        let expect = dx(2, 3).add(&dx(0, 1));
        assert!(m.form.exact_eq(&expect).unwrap());
        assert!(m.closed);
        assert!(!from_morse(&x(2).pow(2)).unwrap().closed);
        assert!(from_morse(&harmonic_morse()).unwrap().closed);
    }

    #[test]
    fn positivity_examples() {
        let f0 = Coefficient::Exact(Poly4::zero());
        let r = positivity_condition(&f0, &[[0.0, 0.1, 0.0, 0.2]]).unwrap();
        assert!(r.holds && r.margin.is_infinite());
        let f10 = Coefficient::Exact(x(2).scale(&rat_int(10)));
        let r = positivity_condition(&f10, &[[0.0, 0.0, 0.0, 1.0]]).unwrap();
        assert!(!r.holds);
        assert!((r.worst_ratio - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_is_a_primitive() {
        let fam = HandleFamily::new(0.1).unwrap();
        let h = 1e-6;
        for &(x1, x3) in &[(0.4, 0.3), (-1.1, 0.9), (1.5, -0.2), (0.0, 1.5)] {
            let d = (gamma_coefficient(&fam, 0.2, x1 + h, x3) - gamma_coefficient(&fam, 0.2, x1 - h, x3))
                / (2.0 * h);
            assert!((d - fam.f_t(0.2, x1, x3)).abs() < 1e-8);
        }
    }
}
