//! Differential forms on R^4 with the standard orientation dc1∧dc2∧dc3∧dc4.

use std::collections::BTreeMap;
use std::fmt;

use super::coefficient::{Coefficient, Point};
use super::poly::{rat_int, Poly4, Rational};
use crate::error::{Error, Result};

/// Increasing multi-index, stored as a bitmask over the four coordinates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(u8);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);
    pub const VOLUME: MultiIndex = MultiIndex(0b1111);

    /// Build from 0-based coordinate indices; returns the sign needed to sort
    /// them, or `None` if an index repeats.
    pub fn from_indices(idx: &[usize]) -> Option<(i32, MultiIndex)> {
        let mut mask = 0u8;
        let mut sign = 1;
        for (a, &i) in idx.iter().enumerate() {
            assert!(i < 4, "coordinate index out of range");
            if mask & (1 << i) != 0 {
                return None;
            }
            mask |= 1 << i;
            for &j in &idx[a + 1..] {
                if j < i {
                    sign = -sign;
                }
            }
        }
        Some((sign, MultiIndex(mask)))
    }

    pub fn single(i: usize) -> MultiIndex {
        MultiIndex(1 << i)
    }

    pub fn pair(i: usize, j: usize) -> (i32, MultiIndex) {
        MultiIndex::from_indices(&[i, j]).expect("distinct indices")
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..4).filter(|&i| self.contains(i)).collect()
    }

    pub fn complement(self) -> MultiIndex {
        MultiIndex(!self.0 & 0b1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Sign with dc_self ∧ dc_other = sign · dc_(self ∪ other), or `None`
    /// when the indices overlap.
    pub fn wedge_sign(self, other: MultiIndex) -> Option<i32> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let mut inversions = 0;
        for i in self.indices() {
            for j in other.indices() {
                if j < i {
                    inversions += 1;
                }
            }
        }
        Some(if inversions % 2 == 0 { 1 } else { -1 })
    }

    pub fn union(self, other: MultiIndex) -> MultiIndex {
        MultiIndex(self.0 | other.0)
    }

    pub fn without(self, i: usize) -> MultiIndex {
        MultiIndex(self.0 & !(1 << i))
    }

    /// All increasing multi-indices of length k, in lexicographic order.
    pub fn all_of_degree(k: usize) -> Vec<MultiIndex> {
        let mut v: Vec<MultiIndex> = (0u8..16)
            .map(MultiIndex)
            .filter(|m| m.len() == k)
            .collect();
        v.sort_by_key(|m| m.indices());
        v
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.indices().iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "d{}", s.join(""))
    }
}

/// Canonical ordering of 2-form components: 12, 13, 14, 23, 24, 34.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// A differential form of fixed degree.
#[derive(Clone)]
pub struct DifferentialForm {
    degree: usize,
    terms: BTreeMap<MultiIndex, Coefficient>,
}

/// A map R^4 -> R^4 given by its components (exact or sampled).
#[derive(Clone, Debug)]
pub struct SmoothMap {
    pub components: [Coefficient; 4],
}

impl SmoothMap {
    pub fn polynomial(components: [Poly4; 4]) -> Self {
        Self {
            components: components.map(Coefficient::Exact),
        }
    }

    pub fn identity() -> Self {
        Self::polynomial(std::array::from_fn(Poly4::var))
    }

    /// Affine map x ↦ A x + b with rational entries.
    pub fn affine(a: [[Rational; 4]; 4], b: [Rational; 4]) -> Self {
        Self::polynomial(std::array::from_fn(|i| {
            let mut p = Poly4::constant(b[i].clone());
            for (j, aij) in a[i].iter().enumerate() {
                p += &Poly4::var(j).scale(aij);
            }
            p
        }))
    }

    /// Composite self ∘ inner.
    pub fn after(&self, inner: &SmoothMap) -> SmoothMap {
        SmoothMap {
            components: std::array::from_fn(|i| self.components[i].compose(&inner.components)),
        }
    }

    pub fn eval(&self, p: &Point) -> Point {
        std::array::from_fn(|i| self.components[i].eval(p))
    }

    /// Jacobian matrix rows = components.
    pub fn jacobian(&self, p: &Point) -> Result<[[f64; 4]; 4]> {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            out[i] = self.components[i].gradient(p)?;
        }
        Ok(out)
    }
}

/// A vector field Σ v_i ∂_{c_i}.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub components: [Coefficient; 4],
}

impl VectorField {
    pub fn new(components: [Coefficient; 4]) -> Self {
        Self { components }
    }

    pub fn polynomial(components: [Poly4; 4]) -> Self {
        Self::new(components.map(Coefficient::Exact))
    }

    /// Constant coordinate field ∂_{c_{i+1}}.
    pub fn coordinate(i: usize) -> Self {
        Self::polynomial(std::array::from_fn(|k| {
            if k == i {
                Poly4::one()
            } else {
                Poly4::zero()
            }
        }))
    }

    /// Euler field Σ_{i ∈ fiber} c_i ∂_i.
    pub fn euler(fiber: &[bool; 4]) -> Self {
        Self::polynomial(std::array::from_fn(|i| {
            if fiber[i] {
                Poly4::var(i)
            } else {
                Poly4::zero()
            }
        }))
    }
}

impl DifferentialForm {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= 4, "degree must be at most 4");
        Self {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn function(c: impl Into<Coefficient>) -> Self {
        let mut f = Self::zero(0);
        f.add_term(MultiIndex::EMPTY, 1, c.into());
        f
    }

    pub fn volume() -> Self {
        Self::basis(&[0, 1, 2, 3])
    }

    /// dc_{i1} ∧ ... ∧ dc_{ik} for 0-based indices in any order.
    pub fn basis(idx: &[usize]) -> Self {
        let mut f = Self::zero(idx.len());
        if let Some((s, m)) = MultiIndex::from_indices(idx) {
            f.add_term(m, s, Coefficient::Exact(Poly4::one()));
        }
        f
    }

    /// c · dc_{i1} ∧ ... ∧ dc_{ik}.
    pub fn term(c: impl Into<Coefficient>, idx: &[usize]) -> Self {
        let mut f = Self::zero(idx.len());
        if let Some((s, m)) = MultiIndex::from_indices(idx) {
            f.add_term(m, s, c.into());
        }
        f
    }

    pub fn from_terms(degree: usize, terms: Vec<(MultiIndex, Coefficient)>) -> Self {
        let mut f = Self::zero(degree);
        for (m, c) in terms {
            assert_eq!(m.len(), degree, "multi-index length must match degree");
            f.add_term(m, 1, c);
        }
        f
    }

    fn add_term(&mut self, m: MultiIndex, sign: i32, c: Coefficient) {
        debug_assert_eq!(m.len(), self.degree);
        let c = if sign < 0 { c.neg() } else { c };
        if c.is_zero() {
            return;
        }
        let merged = match self.terms.remove(&m) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !merged.is_zero() {
            self.terms.insert(m, merged);
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: MultiIndex) -> Coefficient {
        self.terms.get(&m).cloned().unwrap_or_else(Coefficient::zero)
    }

    /// Exact coefficient of dc_{idx} (sorted sign applied).
    pub fn exact_coefficient(&self, idx: &[usize]) -> Result<Poly4> {
        let (s, m) = MultiIndex::from_indices(idx).ok_or(Error::NotExact)?;
        let c = self.coefficient(m);
        let p = c.as_poly().ok_or(Error::NotExact)?;
        Ok(if s < 0 { -p } else { p.clone() })
    }

    pub fn is_exact(&self) -> bool {
        self.terms.values().all(Coefficient::is_exact)
    }

    /// Structural zero (only meaningful for exact forms).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &DifferentialForm) -> DifferentialForm {
        assert_eq!(self.degree, other.degree, "cannot add forms of different degree");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, 1, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DifferentialForm) -> DifferentialForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        self.map_coefficients(|c| c.neg())
    }

    pub fn scale(&self, r: &Rational) -> DifferentialForm {
        self.map_coefficients(|c| c.scale(r))
    }

    pub fn scale_int(&self, k: i64) -> DifferentialForm {
        self.scale(&rat_int(k))
    }

    /// Multiply by a function coefficient.
    pub fn mul_function(&self, f: &Coefficient) -> DifferentialForm {
        self.map_coefficients(|c| c.mul(f))
    }

    fn map_coefficients<F: Fn(&Coefficient) -> Coefficient>(&self, f: F) -> DifferentialForm {
        let mut out = Self::zero(self.degree);
        for (m, c) in &self.terms {
            out.add_term(*m, 1, f(c));
        }
        out
    }

    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        if self.degree + other.degree > 4 {
            return Err(Error::DegreeOverflow(self.degree, other.degree));
        }
        let mut out = Self::zero(self.degree + other.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(s) = ma.wedge_sign(*mb) {
                    out.add_term(ma.union(*mb), s, ca.mul(cb));
                }
            }
        }
        Ok(out)
    }

    pub fn exterior_derivative(&self) -> Result<DifferentialForm> {
        // d of a top form is the zero 5-form, returned as the empty 4-form.
        let mut out = Self::zero((self.degree + 1).min(4));
        if self.degree == 4 {
            return Ok(out);
        }
        for (m, c) in &self.terms {
            for j in 0..4 {
                if m.contains(j) {
                    continue;
                }
                let dj = c.partial(j)?;
                if dj.is_zero() {
                    continue;
                }
                let s = MultiIndex::single(j).wedge_sign(*m).expect("disjoint");
                out.add_term(m.union(MultiIndex::single(j)), s, dj);
            }
        }
        Ok(out)
    }

    pub fn interior_product(&self, v: &VectorField) -> Result<DifferentialForm> {
        if self.degree == 0 {
            return Err(Error::InteriorOfFunction);
        }
        let mut out = Self::zero(self.degree - 1);
        for (m, c) in &self.terms {
            for (pos, i) in m.indices().into_iter().enumerate() {
                let vi = &v.components[i];
                if vi.is_zero() {
                    continue;
                }
                let s = if pos % 2 == 0 { 1 } else { -1 };
                out.add_term(m.without(i), s, c.mul(vi));
            }
        }
        Ok(out)
    }

    /// Euclidean Hodge star with dc1∧dc2∧dc3∧dc4 positive.
    pub fn hodge_star(&self) -> DifferentialForm {
        let mut out = Self::zero(4 - self.degree);
        for (m, c) in &self.terms {
            let comp = m.complement();
            let s = m.wedge_sign(comp).expect("complementary");
            out.add_term(comp, s, c.clone());
        }
        out
    }

    pub fn pullback(&self, map: &SmoothMap) -> Result<DifferentialForm> {
        let differentials: Vec<DifferentialForm> = map
            .components
            .iter()
            .map(|c| DifferentialForm::function(c.clone()).exterior_derivative())
            .collect::<Result<_>>()?;
        let mut out = Self::zero(self.degree);
        for (m, c) in &self.terms {
            let mut acc = DifferentialForm::function(c.compose(&map.components));
            for i in m.indices() {
                acc = acc.wedge(&differentials[i])?;
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Numerical values of all C(4,k) components at a point, in the order of
    /// [`MultiIndex::all_of_degree`].
    pub fn values(&self, p: &Point) -> Vec<f64> {
        MultiIndex::all_of_degree(self.degree)
            .into_iter()
            .map(|m| self.terms.get(&m).map_or(0.0, |c| c.eval(p)))
            .collect()
    }

    /// Coefficient of a 4-form against dvol.
    pub fn top_coefficient(&self) -> Result<Coefficient> {
        if self.degree != 4 {
            return Err(Error::WrongDegree {
                expected: 4,
                found: self.degree,
            });
        }
        Ok(self.coefficient(MultiIndex::VOLUME))
    }

    /// Structural equality of exact forms.
    pub fn exact_eq(&self, other: &DifferentialForm) -> Result<bool> {
        if !self.is_exact() || !other.is_exact() {
            return Err(Error::NotExact);
        }
        Ok(self.degree == other.degree && self.sub(other).is_zero())
    }

    pub(crate) fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: &[&str; 4]) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match c {
                Coefficient::Exact(p) => {
                    write!(f, "(")?;
                    p.fmt_with(f, names)?;
                    write!(f, ")")?;
                }
                Coefficient::Sampled(_) => write!(f, "<sampled>")?,
            }
            for i in m.indices() {
                write!(f, " d{}", names[i])?;
            }
        }
        Ok(())
    }

    /// Render with display aliases for the four coordinates.
    pub fn display<'a>(&'a self, names: &'a [&'a str; 4]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a DifferentialForm, &'a [&'a str; 4]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with(f, self.1)
            }
        }
        D(self, names)
    }
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.degree)?;
        self.fmt_with(f, &["c1", "c2", "c3", "c4"])
    }
}

/// Display aliases: (t, x1, x2, x3) for the Θ-type models.
pub const THETA_ALIASES: [&str; 4] = ["t", "x1", "x2", "x3"];
/// Display aliases: (x1, x2, x3, x4) for the birth and surgery models.
pub const BIRTH_ALIASES: [&str; 4] = ["x1", "x2", "x3", "x4"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::poly::rat;

    fn dx(i: usize, j: usize) -> DifferentialForm {
        DifferentialForm::basis(&[i, j])
    }

    #[test]
    fn basis_product_is_volume() {
        let v = dx(0, 1).wedge(&dx(2, 3)).unwrap();
        assert!(v.exact_eq(&DifferentialForm::volume()).unwrap());
        let w = dx(2, 3).wedge(&dx(0, 1)).unwrap();
        assert!(w.exact_eq(&DifferentialForm::volume()).unwrap());
        let z = dx(0, 2).wedge(&dx(1, 3)).unwrap();
        assert!(z.exact_eq(&DifferentialForm::volume().neg()).unwrap());
    }

    #[test]
    fn degree_overflow_rejected() {
        assert_eq!(
            dx(0, 1).wedge(&DifferentialForm::basis(&[0, 1, 2])).unwrap_err(),
            Error::DegreeOverflow(2, 3)
        );
    }

    #[test]
    fn one_term_leibniz() {
        // d(c2 dc2)... use d(x1 dc2) with x1 = c1: dc1 ∧ dc2
        let a = DifferentialForm::term(Poly4::var(0), &[1]);
        let da = a.exterior_derivative().unwrap();
        assert!(da.exact_eq(&dx(0, 1)).unwrap());
    }

    #[test]
    fn contraction_examples() {
        // Θ-chart: t = c1, x1 = c2. ι(∂t)(dt∧dx1 + dx2∧dx3) = dx1
        let beta1 = dx(0, 1).add(&dx(2, 3));
        let r = beta1.interior_product(&VectorField::coordinate(0)).unwrap();
        assert!(r.exact_eq(&DifferentialForm::basis(&[1])).unwrap());
        let z = dx(2, 3).interior_product(&VectorField::coordinate(0)).unwrap();
        assert!(z.is_zero());
        // ι(R)(dc1∧dc2) = c1 dc2 - c2 dc1
        let r = dx(0, 1)
            .interior_product(&VectorField::euler(&[true; 4]))
            .unwrap();
        let expect = DifferentialForm::term(Poly4::var(0), &[1])
            .sub(&DifferentialForm::term(Poly4::var(1), &[0]));
        assert!(r.exact_eq(&expect).unwrap());
        assert_eq!(
            DifferentialForm::function(Poly4::one())
                .interior_product(&VectorField::coordinate(0))
                .unwrap_err(),
            Error::InteriorOfFunction
        );
    }

    #[test]
    fn hodge_star_basics() {
        assert!(dx(0, 1).hodge_star().exact_eq(&dx(2, 3)).unwrap());
        assert!(dx(0, 2).hodge_star().exact_eq(&dx(1, 3).neg()).unwrap());
        let star_vol = DifferentialForm::volume().hodge_star();
        assert!(star_vol
            .exact_eq(&DifferentialForm::function(Poly4::one()))
            .unwrap());
        for (i, j) in PAIRS {
            let s2 = dx(i, j).hodge_star().hodge_star();
            assert!(s2.exact_eq(&dx(i, j)).unwrap());
        }
    }

    #[test]
    fn dilation_pulls_back_volume() {
        let d = rat(3, 7);
        let map = SmoothMap::polynomial([
            Poly4::var(0).scale(&d),
            Poly4::var(1),
            Poly4::var(2),
            Poly4::var(3),
        ]);
        let v = DifferentialForm::volume().pullback(&map).unwrap();
        assert!(v.exact_eq(&DifferentialForm::volume().scale(&d)).unwrap());
    }

    #[test]
    fn interior_product_squares_to_zero() {
        let v = VectorField::polynomial([Poly4::var(1), Poly4::one(), Poly4::var(3), Poly4::int(2)]);
        let a = DifferentialForm::term(Poly4::var(0), &[0, 1, 2]).add(&DifferentialForm::term(
            Poly4::var(2),
            &[1, 2, 3],
        ));
        let r = a.interior_product(&v).unwrap().interior_product(&v).unwrap();
        assert!(r.is_zero());
    }
}
