//! Form coefficients: exact polynomials or sampled smooth fields.

use std::fmt;
use std::sync::Arc;

use super::poly::{rat_to_f64, Poly4, Rational};
use crate::error::{Error, Result};

pub type Point = [f64; 4];

/// Central finite-difference step for sampled coefficients.
pub const FD_STEP: f64 = 1e-5;

type ValueFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> [f64; 4] + Send + Sync>;

/// How a sampled field supplies its first derivatives.
#[derive(Clone)]
pub enum Partials {
    Closed(GradFn),
    FiniteDifference,
    Missing,
}

/// A smooth scalar field known only through evaluation.
#[derive(Clone)]
pub struct SampledField {
    value: ValueFn,
    partials: Partials,
}

impl SampledField {
    pub fn new<F>(value: F, partials: Partials) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            partials,
        }
    }

    pub fn with_gradient<F, G>(value: F, grad: G) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
        G: Fn(&Point) -> [f64; 4] + Send + Sync + 'static,
    {
        Self::new(value, Partials::Closed(Arc::new(grad)))
    }

    pub fn from_poly(p: &Poly4) -> Self {
        let v = p.clone();
        let grads: [Poly4; 4] = std::array::from_fn(|i| p.partial(i));
        Self::with_gradient(
            move |x| v.eval(x),
            move |x| std::array::from_fn(|i| grads[i].eval(x)),
        )
    }

    pub fn eval(&self, p: &Point) -> f64 {
        (self.value)(p)
    }

    pub fn partials(&self) -> &Partials {
        &self.partials
    }

    pub fn gradient(&self, p: &Point) -> Result<[f64; 4]> {
        match &self.partials {
            Partials::Closed(g) => Ok(g(p)),
            Partials::FiniteDifference => Ok(fd_gradient(&*self.value, p)),
            Partials::Missing => Err(Error::MissingPartials),
        }
    }

    /// The field `∂_i self`, itself sampled. Second derivatives come from
    /// central differences of the first.
    pub fn partial(&self, i: usize) -> Result<SampledField> {
        match &self.partials {
            Partials::Closed(g) => {
                let g = g.clone();
                Ok(SampledField::new(move |p| g(p)[i], Partials::FiniteDifference))
            }
            Partials::FiniteDifference => {
                let v = self.value.clone();
                Ok(SampledField::new(
                    move |p| fd_partial(&*v, p, i),
                    Partials::FiniteDifference,
                ))
            }
            Partials::Missing => Err(Error::MissingPartials),
        }
    }

    fn combine<V, G>(a: &SampledField, b: &SampledField, value: V, grad: G) -> SampledField
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static,
        G: Fn(f64, f64, [f64; 4], [f64; 4]) -> [f64; 4] + Send + Sync + 'static,
    {
        let (va, vb) = (a.value.clone(), b.value.clone());
        let v2 = value.clone();
        let val = move |p: &Point| v2(va(p), vb(p));
        let partials = match (&a.partials, &b.partials) {
            (Partials::Missing, _) | (_, Partials::Missing) => Partials::Missing,
            (Partials::Closed(ga), Partials::Closed(gb)) => {
                let (ga, gb) = (ga.clone(), gb.clone());
                let (va, vb) = (a.value.clone(), b.value.clone());
                Partials::Closed(Arc::new(move |p: &Point| grad(va(p), vb(p), ga(p), gb(p))))
            }
            _ => Partials::FiniteDifference,
        };
        SampledField::new(val, partials)
    }
}

fn fd_partial(f: &(dyn Fn(&Point) -> f64 + Send + Sync), p: &Point, i: usize) -> f64 {
    let mut a = *p;
    let mut b = *p;
    a[i] += FD_STEP;
    b[i] -= FD_STEP;
    (f(&a) - f(&b)) / (2.0 * FD_STEP)
}

fn fd_gradient(f: &(dyn Fn(&Point) -> f64 + Send + Sync), p: &Point) -> [f64; 4] {
    std::array::from_fn(|i| fd_partial(f, p, i))
}

/// A single coefficient of a differential form.
#[derive(Clone)]
pub enum Coefficient {
    Exact(Poly4),
    Sampled(SampledField),
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::Exact(Poly4::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coefficient::Exact(_))
    }

    pub fn as_poly(&self) -> Option<&Poly4> {
        match self {
            Coefficient::Exact(p) => Some(p),
            Coefficient::Sampled(_) => None,
        }
    }

    /// Structural zero test; sampled coefficients are never structurally zero.
    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Exact(p) => p.is_zero(),
            Coefficient::Sampled(_) => false,
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Coefficient::Exact(q) => q.eval(p),
            Coefficient::Sampled(s) => s.eval(p),
        }
    }

    pub fn gradient(&self, p: &Point) -> Result<[f64; 4]> {
        match self {
            Coefficient::Exact(q) => Ok(std::array::from_fn(|i| q.partial(i).eval(p))),
            Coefficient::Sampled(s) => s.gradient(p),
        }
    }

    pub fn partial(&self, i: usize) -> Result<Coefficient> {
        match self {
            Coefficient::Exact(q) => Ok(Coefficient::Exact(q.partial(i))),
            Coefficient::Sampled(s) => Ok(Coefficient::Sampled(s.partial(i)?)),
        }
    }

    fn to_sampled(&self) -> SampledField {
        match self {
            Coefficient::Exact(p) => SampledField::from_poly(p),
            Coefficient::Sampled(s) => s.clone(),
        }
    }

    pub fn add(&self, other: &Coefficient) -> Coefficient {
        match (self, other) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a + b),
            _ if self.is_zero() => other.clone(),
            _ if other.is_zero() => self.clone(),
            _ => Coefficient::Sampled(SampledField::combine(
                &self.to_sampled(),
                &other.to_sampled(),
                |a, b| a + b,
                |_, _, ga, gb| std::array::from_fn(|i| ga[i] + gb[i]),
            )),
        }
    }

    pub fn mul(&self, other: &Coefficient) -> Coefficient {
        match (self, other) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a * b),
            _ if self.is_zero() || other.is_zero() => Coefficient::zero(),
            _ => Coefficient::Sampled(SampledField::combine(
                &self.to_sampled(),
                &other.to_sampled(),
                |a, b| a * b,
                |a, b, ga, gb| std::array::from_fn(|i| ga[i] * b + a * gb[i]),
            )),
        }
    }

    pub fn scale(&self, c: &Rational) -> Coefficient {
        match self {
            Coefficient::Exact(p) => Coefficient::Exact(p.scale(c)),
            Coefficient::Sampled(_) => self.mul(&Coefficient::Exact(Poly4::constant(c.clone()))),
        }
    }

    pub fn neg(&self) -> Coefficient {
        self.scale(&-Rational::from_integer(1.into()))
    }

    /// Precompose with a map R^4 -> R^4 given by coefficient components.
    pub fn compose(&self, map: &[Coefficient; 4]) -> Coefficient {
        if let (Coefficient::Exact(p), Some(polys)) = (self, exact_map(map)) {
            return Coefficient::Exact(p.compose(&polys));
        }
        let outer = self.to_sampled();
        let comps: Vec<SampledField> = map.iter().map(|c| c.to_sampled()).collect();
        let comps = Arc::new(comps);
        let c2 = comps.clone();
        let o2 = outer.clone();
        let value = move |p: &Point| {
            let q: Point = std::array::from_fn(|k| c2[k].eval(p));
            o2.eval(&q)
        };
        let closed = matches!(outer.partials, Partials::Closed(_))
            && comps.iter().all(|c| matches!(c.partials, Partials::Closed(_)));
        let missing = matches!(outer.partials, Partials::Missing)
            || comps.iter().any(|c| matches!(c.partials, Partials::Missing));
        let partials = if closed {
            Partials::Closed(Arc::new(move |p: &Point| {
                let q: Point = std::array::from_fn(|k| comps[k].eval(p));
                let go = outer.gradient(&q).expect("closed partials");
                let jac: [[f64; 4]; 4] =
                    std::array::from_fn(|k| comps[k].gradient(p).expect("closed partials"));
                std::array::from_fn(|i| (0..4).map(|k| go[k] * jac[k][i]).sum())
            }))
        } else if missing {
            Partials::Missing
        } else {
            Partials::FiniteDifference
        };
        Coefficient::Sampled(SampledField::new(value, partials))
    }
}

pub(crate) fn exact_map(map: &[Coefficient; 4]) -> Option<[Poly4; 4]> {
    let mut out: [Poly4; 4] = Default::default();
    for (o, c) in out.iter_mut().zip(map.iter()) {
        *o = c.as_poly()?.clone();
    }
    Some(out)
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Exact(p) => write!(f, "{p:?}"),
            Coefficient::Sampled(_) => write!(f, "<sampled>"),
        }
    }
}

impl From<Poly4> for Coefficient {
    fn from(p: Poly4) -> Self {
        Coefficient::Exact(p)
    }
}

impl From<SampledField> for Coefficient {
    fn from(s: SampledField) -> Self {
        Coefficient::Sampled(s)
    }
}

/// Convenience: evaluate a rational constant in floating point.
pub fn to_f64(r: &Rational) -> f64 {
    rat_to_f64(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::poly::rat_int;

    #[test]
    fn product_rule_for_mixed_coefficients() {
        let s = SampledField::with_gradient(|p| p[0].sin(), |p| [p[0].cos(), 0.0, 0.0, 0.0]);
        let c = Coefficient::Exact(Poly4::var(1)).mul(&Coefficient::Sampled(s));
        let p = [0.3, 2.0, 0.0, 0.0];
        assert!((c.eval(&p) - 2.0 * 0.3f64.sin()).abs() < 1e-15);
        let g = c.gradient(&p).unwrap();
        assert!((g[0] - 2.0 * 0.3f64.cos()).abs() < 1e-15);
        assert!((g[1] - 0.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn missing_partials_are_rejected() {
        let s = SampledField::new(|p| p[0], Partials::Missing);
        assert_eq!(s.gradient(&[0.0; 4]), Err(Error::MissingPartials));
        let fd = SampledField::new(|p| p[0] * p[0], Partials::FiniteDifference);
        assert!((fd.gradient(&[1.0, 0.0, 0.0, 0.0]).unwrap()[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = Coefficient::Exact(Poly4::var(0));
        let b = a.add(&a).scale(&rat_int(3));
        assert!(b.is_exact());
        assert_eq!(b.as_poly().unwrap(), &Poly4::var(0).scale(&rat_int(6)));
    }
}
