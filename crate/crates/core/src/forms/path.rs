//! One-parameter families of 2-forms.

use std::sync::Arc;

use super::coefficient::Point;
use super::form::DifferentialForm;
use super::numeric::CompiledForm;

/// Step used for derivatives in the path parameter.
pub const T_STEP: f64 = 1e-5;

/// A family t ↦ ω_t, built on demand.
#[derive(Clone)]
pub struct FormPath {
    build: Arc<dyn Fn(f64) -> DifferentialForm + Send + Sync>,
}

impl FormPath {
    pub fn new<F>(build: F) -> Self
    where
        F: Fn(f64) -> DifferentialForm + Send + Sync + 'static,
    {
        Self {
            build: Arc::new(build),
        }
    }

    pub fn constant(form: DifferentialForm) -> Self {
        Self::new(move |_| form.clone())
    }

    /// Affine path (1-s) a + s b.
    pub fn affine(a: DifferentialForm, b: DifferentialForm) -> Self {
        Self::new(move |s| {
            let s = super::poly::rat_from_f64(s);
            let one_minus = super::poly::rat_int(1) - &s;
            a.scale(&one_minus).add(&b.scale(&s))
        })
    }

    pub fn at(&self, t: f64) -> DifferentialForm {
        (self.build)(t)
    }

    pub fn compiled(&self, t: f64) -> CompiledForm {
        CompiledForm::new(&self.at(t))
    }

    /// Central difference of component values in t.
    pub fn t_derivative(&self, p: &Point, t: f64) -> Vec<f64> {
        let a = self.compiled(t + T_STEP).values(p);
        let b = self.compiled(t - T_STEP).values(p);
        a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * T_STEP)).collect()
    }
}
