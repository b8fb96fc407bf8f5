//! Floating-point evaluation of forms with first and second derivatives.

use super::coefficient::{Coefficient, Point, FD_STEP};
use super::form::{DifferentialForm, MultiIndex};
use super::poly::{monomial_value, Exponents, Poly4};

#[derive(Clone, Debug, Default)]
struct CompiledPoly {
    terms: Vec<(f64, Exponents)>,
}

impl CompiledPoly {
    fn new(p: &Poly4) -> Self {
        Self {
            terms: p.to_f64_terms(),
        }
    }

    fn eval(&self, p: &Point) -> f64 {
        self.terms.iter().map(|(c, e)| c * monomial_value(e, p)).sum()
    }
}

#[derive(Clone)]
enum CompiledCoef {
    Poly {
        value: CompiledPoly,
        grad: [CompiledPoly; 4],
        hess: [[CompiledPoly; 4]; 4],
    },
    Sampled(Coefficient),
}

impl CompiledCoef {
    fn new(c: &Coefficient) -> Self {
        match c {
            Coefficient::Exact(p) => {
                let g: [Poly4; 4] = std::array::from_fn(|i| p.partial(i));
                CompiledCoef::Poly {
                    value: CompiledPoly::new(p),
                    grad: std::array::from_fn(|i| CompiledPoly::new(&g[i])),
                    hess: std::array::from_fn(|i| {
                        std::array::from_fn(|j| CompiledPoly::new(&g[i].partial(j)))
                    }),
                }
            }
            Coefficient::Sampled(_) => CompiledCoef::Sampled(c.clone()),
        }
    }

    fn eval(&self, p: &Point) -> f64 {
        match self {
            CompiledCoef::Poly { value, .. } => value.eval(p),
            CompiledCoef::Sampled(c) => c.eval(p),
        }
    }

    fn gradient(&self, p: &Point) -> [f64; 4] {
        match self {
            CompiledCoef::Poly { grad, .. } => std::array::from_fn(|i| grad[i].eval(p)),
            CompiledCoef::Sampled(c) => c.gradient(p).unwrap_or_else(|_| fd_grad(c, p)),
        }
    }

    fn hessian(&self, p: &Point) -> [[f64; 4]; 4] {
        match self {
            CompiledCoef::Poly { hess, .. } => {
                std::array::from_fn(|i| std::array::from_fn(|j| hess[i][j].eval(p)))
            }
            CompiledCoef::Sampled(_) => {
                let mut h = [[0.0; 4]; 4];
                for j in 0..4 {
                    let mut a = *p;
                    let mut b = *p;
                    a[j] += FD_STEP;
                    b[j] -= FD_STEP;
                    let (ga, gb) = (self.gradient(&a), self.gradient(&b));
                    for i in 0..4 {
                        h[i][j] = (ga[i] - gb[i]) / (2.0 * FD_STEP);
                    }
                }
                for i in 0..4 {
                    for j in 0..i {
                        let s = 0.5 * (h[i][j] + h[j][i]);
                        h[i][j] = s;
                        h[j][i] = s;
                    }
                }
                h
            }
        }
    }
}

fn fd_grad(c: &Coefficient, p: &Point) -> [f64; 4] {
    std::array::from_fn(|i| {
        let mut a = *p;
        let mut b = *p;
        a[i] += FD_STEP;
        b[i] -= FD_STEP;
        (c.eval(&a) - c.eval(&b)) / (2.0 * FD_STEP)
    })
}

/// A form compiled for fast repeated evaluation. Components are listed in
/// the order of [`MultiIndex::all_of_degree`].
#[derive(Clone)]
pub struct CompiledForm {
    degree: usize,
    coefs: Vec<Option<CompiledCoef>>,
    scale: f64,
}

impl CompiledForm {
    pub fn new(form: &DifferentialForm) -> Self {
        let coefs = MultiIndex::all_of_degree(form.degree())
            .into_iter()
            .map(|m| {
                let c = form.coefficient(m);
                if c.is_zero() {
                    None
                } else {
                    Some(CompiledCoef::new(&c))
                }
            })
            .collect();
        Self {
            degree: form.degree(),
            coefs,
            scale: 1.0,
        }
    }

    /// The same form multiplied by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            scale: self.scale * c,
            ..self.clone()
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn values(&self, p: &Point) -> Vec<f64> {
        self.coefs
            .iter()
            .map(|c| c.as_ref().map_or(0.0, |c| self.scale * c.eval(p)))
            .collect()
    }

    /// Rows are components, columns the four coordinate directions.
    pub fn jacobian(&self, p: &Point) -> Vec<[f64; 4]> {
        self.coefs
            .iter()
            .map(|c| c.as_ref().map_or([0.0; 4], |c| c.gradient(p).map(|x| self.scale * x)))
            .collect()
    }

    pub fn hessians(&self, p: &Point) -> Vec<[[f64; 4]; 4]> {
        self.coefs
            .iter()
            .map(|c| {
                c.as_ref()
                    .map_or([[0.0; 4]; 4], |c| c.hessian(p).map(|r| r.map(|x| self.scale * x)))
            })
            .collect()
    }
}

/// Evaluate a 2-form as its six components (12, 13, 14, 23, 24, 34).
pub fn two_form_values(c: &CompiledForm, p: &Point) -> [f64; 6] {
    debug_assert_eq!(c.degree(), 2);
    let v = c.values(p);
    std::array::from_fn(|i| v[i])
}

/// Antisymmetric 4x4 matrix W with ω = Σ_{i<j} W_ij dc_i∧dc_j.
pub fn two_form_matrix(v: &[f64; 6]) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    for (k, (i, j)) in super::form::PAIRS.iter().enumerate() {
        w[*i][*j] = v[k];
        w[*j][*i] = -v[k];
    }
    w
}

/// ω∧ω / dvol for a 2-form given by its six components.
pub fn wedge_square_value(v: &[f64; 6]) -> f64 {
    2.0 * (v[0] * v[5] - v[1] * v[4] + v[2] * v[3])
}

/// Polar form of the wedge-square: (a∧b)/dvol.
pub fn wedge_pairing(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a[0] * b[5] + a[5] * b[0] - a[1] * b[4] - a[4] * b[1] + a[2] * b[3] + a[3] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compiled_matches_symbolic() {
        let f = DifferentialForm::term(&Poly4::var(0) * &Poly4::var(1), &[0, 1])
            .add(&DifferentialForm::term(Poly4::var(3).pow(3), &[2, 3]));
        let c = CompiledForm::new(&f);
        let p = [0.5, -1.5, 2.0, 0.7];
        let v = two_form_values(&c, &p);
        assert!((v[0] + 0.75).abs() < 1e-15);
        assert!((v[5] - 0.343).abs() < 1e-12);
        let h = c.hessians(&p);
        assert!((h[5][3][3] - 6.0 * 0.7).abs() < 1e-12);
        assert!((h[0][0][1] - 1.0).abs() < 1e-15);
        let sq = wedge_square_value(&v);
        assert!((sq - wedge_pairing(&v, &v)).abs() < 1e-15);
    }
}
