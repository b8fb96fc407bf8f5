//! Exact polynomials in the four chart coordinates c1..c4.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type Exponents = [u32; 4];

/// Build a rational from a numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact binary value of a finite float.
pub fn rat_from_f64(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Sparse multivariate polynomial with rational coefficients.
///
/// Zero coefficients are never stored, so structural equality is polynomial
/// equality.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct Poly4 {
    terms: BTreeMap<Exponents, Rational>,
}

impl Poly4 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial([0; 4], c)
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rat_int(c))
    }

    /// The coordinate function c_{i+1} (0-based `i`).
    pub fn var(i: usize) -> Self {
        let mut e = [0; 4];
        e[i] = 1;
        Self::monomial(e, Rational::one())
    }

    pub fn monomial(exponents: Exponents, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exponents, c);
        }
        Self { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponents, Rational)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to c_{i+1}.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = *e;
            e2[i] -= 1;
            out.add_term(e2, c * rat_int(e[i] as i64));
        }
        out
    }

    pub fn eval(&self, p: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rat_to_f64(c) * monomial_value(e, p))
            .sum()
    }

    pub fn eval_exact(&self, p: &[Rational; 4]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for i in 0..4 {
                for _ in 0..e[i] {
                    m *= &p[i];
                }
            }
            acc += m;
        }
        acc
    }

    /// Substitute c_i := map[i].
    pub fn compose(&self, map: &[Poly4; 4]) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut m = Self::constant(c.clone());
            for i in 0..4 {
                if e[i] > 0 {
                    m = &m * &map[i].pow(e[i]);
                }
            }
            out = &out + &m;
        }
        out
    }

    /// Drop every monomial containing one of the `fiber` coordinates,
    /// i.e. restrict to the subspace where they vanish.
    pub fn restrict_zero(&self, fiber: &[bool; 4]) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| (0..4).all(|i| !fiber[i] || e[i] == 0))
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// True when every monomial has total degree at least `order` in the
    /// `fiber` coordinates, i.e. the polynomial lies in the `order`-th power
    /// of the ideal generated by those coordinates.
    pub fn in_ideal_power(&self, fiber: &[bool; 4], order: u32) -> bool {
        self.terms
            .keys()
            .all(|e| (0..4).filter(|&i| fiber[i]).map(|i| e[i]).sum::<u32>() >= order)
    }

    /// Evaluate polynomial, gradient and Hessian in floating point.
    pub fn to_f64_terms(&self) -> Vec<(f64, Exponents)> {
        self.terms.iter().map(|(e, c)| (rat_to_f64(c), *e)).collect()
    }

    pub(crate) fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: &[&str; 4]) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let is_const = e.iter().all(|&k| k == 0);
            if !mag.is_one() || is_const {
                write!(f, "{mag}")?;
            }
            for i in 0..4 {
                match e[i] {
                    0 => {}
                    1 => write!(f, "{}", names[i])?,
                    k => write!(f, "{}^{}", names[i], k)?,
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn monomial_value(e: &Exponents, p: &[f64; 4]) -> f64 {
    let mut m = 1.0;
    for i in 0..4 {
        if e[i] > 0 {
            m *= p[i].powi(e[i] as i32);
        }
    }
    m
}

impl fmt::Debug for Poly4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &["c1", "c2", "c3", "c4"])
    }
}

impl fmt::Display for Poly4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &["c1", "c2", "c3", "c4"])
    }
}

impl Add for &Poly4 {
    type Output = Poly4;
    fn add(self, rhs: &Poly4) -> Poly4 {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Add for Poly4 {
    type Output = Poly4;
    fn add(self, rhs: Poly4) -> Poly4 {
        &self + &rhs
    }
}

impl AddAssign<&Poly4> for Poly4 {
    fn add_assign(&mut self, rhs: &Poly4) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl Sub for &Poly4 {
    type Output = Poly4;
    fn sub(self, rhs: &Poly4) -> Poly4 {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Sub for Poly4 {
    type Output = Poly4;
    fn sub(self, rhs: Poly4) -> Poly4 {
        &self - &rhs
    }
}

impl Neg for &Poly4 {
    type Output = Poly4;
    fn neg(self) -> Poly4 {
        Poly4 {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

impl Neg for Poly4 {
    type Output = Poly4;
    fn neg(self) -> Poly4 {
        -&self
    }
}

impl Mul for &Poly4 {
    type Output = Poly4;
    fn mul(self, rhs: &Poly4) -> Poly4 {
        let mut out = Poly4::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Mul for Poly4 {
    type Output = Poly4;
    fn mul(self, rhs: Poly4) -> Poly4 {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Poly4 {
        Poly4::var(i)
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let p = &x(0) + &x(1);
        let q = &p - &x(1);
        assert_eq!(q, x(0));
        assert_eq!((&p - &p).len(), 0);
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn product_and_partial() {
        // (c1 + c2)^2 = c1^2 + 2 c1 c2 + c2^2
        let p = (&x(0) + &x(1)).pow(2);
        assert_eq!(p.len(), 3);
        let d = p.partial(0);
        assert_eq!(d, (&x(0) + &x(1)).scale(&rat_int(2)));
    }

    #[test]
    fn compose_with_dilation() {
        let p = &x(0) * &x(1);
        let map = [x(0).scale(&rat(1, 10)), x(1), x(2), x(3)];
        assert_eq!(p.compose(&map), p.scale(&rat(1, 10)));
    }

    #[test]
    fn exact_and_float_evaluation_agree() {
        let p = &(&x(0).pow(2) - &x(2).scale(&rat(3, 4))) + &Poly4::int(5);
        let pt = [rat(1, 2), rat_int(0), rat(-2, 3), rat_int(1)];
        let exact = p.eval_exact(&pt);
        assert_eq!(exact, rat(1, 4) + rat(1, 2) + rat_int(5));
        let f = p.eval(&[0.5, 0.0, -2.0 / 3.0, 1.0]);
        assert!((f - rat_to_f64(&exact)).abs() < 1e-15);
    }

    #[test]
    fn ideal_membership() {
        let fiber = [false, true, true, true];
        let p = &x(1) * &x(2);
        assert!(p.in_ideal_power(&fiber, 2));
        assert!(!(&p + &x(3)).in_ideal_power(&fiber, 2));
        assert!((&x(0) * &x(1)).restrict_zero(&fiber).is_zero());
    }
}
