//! Radial Poincaré homotopy operator on the trivial bundle R^4 -> center.
//!
//! The center subspace is spanned by the `base` coordinates; the remaining
//! (fiber) coordinates are contracted radially. With h_s(b, y) = (b, s y) and
//! R the fiber Euler field, H a = ∫_0^1 h_s^*(ι(R) a) s^{-1} ds, so that
//! dH a + H da = a - p^* i^* a.

use super::coefficient::Coefficient;
use super::form::{DifferentialForm, MultiIndex};
use super::poly::{rat_int, Poly4};
use crate::error::{Error, Result};

/// Which coordinates are contracted (true) and which span the center (false).
pub type Fiber = [bool; 4];

pub fn fiber_from_center(center: &[usize]) -> Fiber {
    std::array::from_fn(|i| !center.contains(&i))
}

pub fn homotopy_operator(a: &DifferentialForm, fiber: &Fiber) -> Result<DifferentialForm> {
    if a.degree() == 0 {
        return Ok(DifferentialForm::zero(0));
    }
    let mut out = DifferentialForm::zero(a.degree() - 1);
    for (m, c) in a.terms() {
        let p = c.as_poly().ok_or(Error::NotExact)?;
        let fiber_in_index = m.indices().iter().filter(|&&i| fiber[i]).count() as i64;
        for (pos, i) in m.indices().into_iter().enumerate() {
            if !fiber[i] {
                continue;
            }
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            // x_i * c_I contributes with weight 1/(fiber degree + fiber count).
            let mut q = Poly4::zero();
            for (e, coef) in p.terms() {
                let fdeg: i64 = (0..4).filter(|&k| fiber[k]).map(|k| e[k] as i64).sum();
                let mut e2 = *e;
                e2[i] += 1;
                let w = coef / rat_int(fdeg + fiber_in_index) * rat_int(sign);
                q += &Poly4::monomial(e2, w);
            }
            let piece = DifferentialForm::from_terms(
                a.degree() - 1,
                vec![(m.without(i), Coefficient::Exact(q))],
            );
            out = out.add(&piece);
        }
    }
    Ok(out)
}

/// p^* i^* a: restrict coefficients to the center and drop fiber differentials.
pub fn center_projection(a: &DifferentialForm, fiber: &Fiber) -> Result<DifferentialForm> {
    let mut terms: Vec<(MultiIndex, Coefficient)> = Vec::new();
    for (m, c) in a.terms() {
        let p = c.as_poly().ok_or(Error::NotExact)?;
        if m.indices().iter().any(|&i| fiber[i]) {
            continue;
        }
        terms.push((*m, Coefficient::Exact(p.restrict_zero(fiber))));
    }
    Ok(DifferentialForm::from_terms(a.degree(), terms))
}

/// Residual dHa + Hda - (a - p^*i^*a); zero exactly when the identity holds.
pub fn homotopy_residual(a: &DifferentialForm, fiber: &Fiber) -> Result<DifferentialForm> {
    let ha = homotopy_operator(a, fiber)?;
    let dha = if a.degree() == 0 {
        DifferentialForm::zero(0)
    } else {
        ha.exterior_derivative()?
    };
    let hda = if a.degree() == 4 {
        DifferentialForm::zero(4)
    } else {
        homotopy_operator(&a.exterior_derivative()?, fiber)?
    };
    let lhs = dha.add(&hda);
    let rhs = a.sub(&center_projection(a, fiber)?);
    Ok(lhs.sub(&rhs))
}

/// Every coefficient lies in the square of the ideal of the center.
pub fn vanishes_to_second_order(a: &DifferentialForm, fiber: &Fiber) -> Result<bool> {
    for (_, c) in a.terms() {
        let p = c.as_poly().ok_or(Error::NotExact)?;
        if !p.in_ideal_power(fiber, 2) {
            return Ok(false);
        }
    }
    Ok(true)
}
