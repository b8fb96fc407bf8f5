//! The two-parameter function family f_t^δ used to reconnect two zero arcs.
//!
//! f(x1, x3) = (x3^2 - 1)/4 and f_1 = f + A μ(x1) ν(x3), where μ and ν are
//! even C^2 bumps supported in |x| <= L = 1 + 2δ. The path is the linear
//! interpolation f_t = (1-t)/2 f + (1+t)/2 f_1.

use serde::Serialize;

use crate::error::{Error, Result};

/// Amplitude of the bump added to f.
pub const AMPLITUDE: f64 = 1.0 / 3.0;
/// Weight of the quartic bulge in ν.
const NU_BULGE: f64 = 0.5;

/// Value and first two derivatives of a scalar function of one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Value, gradient and Hessian of a function of (x1, x3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Jet2 {
    fn lerp(a: &Jet2, b: &Jet2, wa: f64, wb: f64) -> Jet2 {
        Jet2 {
            value: wa * a.value + wb * b.value,
            grad: std::array::from_fn(|i| wa * a.grad[i] + wb * b.grad[i]),
            hess: std::array::from_fn(|i| {
                std::array::from_fn(|j| wa * a.hess[i][j] + wb * b.hess[i][j])
            }),
        }
    }
}

/// The base function f = (x3^2 - 1)/4.
pub fn base_f(x3: f64) -> Jet2 {
    Jet2 {
        value: 0.25 * (x3 * x3 - 1.0),
        grad: [0.0, 0.5 * x3],
        hess: [[0.0, 0.0], [0.0, 0.5]],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HandleFamily {
    pub delta: f64,
    pub amplitude: f64,
}

impl HandleFamily {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.1) {
            return Err(Error::InvalidParameter(format!(
                "handle family needs delta in (0, 1/10], got {delta}"
            )));
        }
        Ok(Self {
            delta,
            amplitude: AMPLITUDE,
        })
    }

    /// Half-width L = 1 + 2δ of the square outside which the family is constant.
    pub fn half_width(&self) -> f64 {
        1.0 + 2.0 * self.delta
    }

    /// μ(x) = (1 - (x/L)^2)^3 on |x| < L.
    pub fn mu(&self, x: f64) -> Jet1 {
        let l = self.half_width();
        let u = x / l;
        if u.abs() >= 1.0 {
            return Jet1 { v: 0.0, d1: 0.0, d2: 0.0 };
        }
        let w = 1.0 - u * u;
        Jet1 {
            v: w * w * w,
            d1: -6.0 * u * w * w / l,
            d2: (-6.0 * w * w + 24.0 * u * u * w) / (l * l),
        }
    }

    /// ν as a function of y = |x3| >= 0.
    fn nu_radial(&self, y: f64) -> Jet1 {
        let c = NU_BULGE;
        let beta = 4.0 * self.delta;
        let inner = |y: f64| Jet1 {
            v: 1.0 - y * y + c * y * y * (1.0 - y * y) + beta * y.powi(4),
            d1: -2.0 * y + c * (2.0 * y - 4.0 * y.powi(3)) + 4.0 * beta * y.powi(3),
            d2: -2.0 + c * (2.0 - 12.0 * y * y) + 12.0 * beta * y * y,
        };
        if y <= 1.0 {
            return inner(y);
        }
        let h = 2.0 * self.delta;
        if y >= 1.0 + h {
            return Jet1 { v: 0.0, d1: 0.0, d2: 0.0 };
        }
        // Quintic Hermite landing matching value, slope and curvature at y = 1
        // and vanishing to second order at y = L.
        let e = inner(1.0);
        let s = (y - 1.0) / h;
        let (s2, s3, s4, s5) = (s * s, s.powi(3), s.powi(4), s.powi(5));
        let h0 = [1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5, -30.0 * s2 + 60.0 * s3 - 30.0 * s4, -60.0 * s + 180.0 * s2 - 120.0 * s3];
        let h1 = [s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5, 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4, -36.0 * s + 96.0 * s2 - 60.0 * s3];
        let h2 = [
            0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
            0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
            0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3),
        ];
        let comb = |k: usize| e.v * h0[k] + e.d1 * h * h1[k] + e.d2 * h * h * h2[k];
        Jet1 {
            v: comb(0),
            d1: comb(1) / h,
            d2: comb(2) / (h * h),
        }
    }

    /// ν(x3), even in x3.
    pub fn nu(&self, x3: f64) -> Jet1 {
        let j = self.nu_radial(x3.abs());
        Jet1 {
            v: j.v,
            d1: if x3 < 0.0 { -j.d1 } else { j.d1 },
            d2: j.d2,
        }
    }

    /// The bump term A μ(x1) ν(x3).
    pub fn bump(&self, x1: f64, x3: f64) -> Jet2 {
        let (m, n) = (self.mu(x1), self.nu(x3));
        let a = self.amplitude;
        Jet2 {
            value: a * m.v * n.v,
            grad: [a * m.d1 * n.v, a * m.v * n.d1],
            hess: [
                [a * m.d2 * n.v, a * m.d1 * n.d1],
                [a * m.d1 * n.d1, a * m.v * n.d2],
            ],
        }
    }

    pub fn f1_jet(&self, x1: f64, x3: f64) -> Jet2 {
        let f = base_f(x3);
        let b = self.bump(x1, x3);
        Jet2::lerp(&f, &b, 1.0, 1.0)
    }

    pub fn f1(&self, x1: f64, x3: f64) -> f64 {
        self.f1_jet(x1, x3).value
    }

    /// f_t with first and second partials in (x1, x3).
    pub fn jet(&self, t: f64, x1: f64, x3: f64) -> Jet2 {
        let s = 0.5 * (1.0 + t);
        let f = base_f(x3);
        if s == 0.0 {
            return f;
        }
        let b = self.bump(x1, x3);
        Jet2::lerp(&f, &b, 1.0, s)
    }

    pub fn f_t(&self, t: f64, x1: f64, x3: f64) -> f64 {
        self.jet(t, x1, x3).value
    }

    /// Whether (x1, x3) lies in the closed square [-L, L]^2 outside which the
    /// family does not depend on t.
    pub fn in_square(&self, x1: f64, x3: f64) -> bool {
        let l = self.half_width();
        x1.abs() <= l && x3.abs() <= l
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub t_star: f64,
    pub point: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    pub hessian_eigenvalues: [f64; 2],
    pub nondegenerate: bool,
}

/// Locate the unique (t, x) where a zero of f_t is a critical point.
///
/// Inside the open square ∂1 f_t = s A μ'(x1) ν(x3) vanishes only on x1 = 0
/// (for t > -1), so the search reduces to the line x1 = 0: there the
/// conditions f_t = 0 and ∂3 f_t = 0 eliminate s and leave
/// h(y) = y ν(y)/2 - f(y) ν'(y) = 0.
pub fn critical_transition(fam: &HandleFamily) -> Result<Transition> {
    let l = fam.half_width();
    let a = fam.amplitude;
    let h = |y: f64| {
        let n = fam.nu(y);
        0.5 * y * n.v - base_f(y).value * n.d1
    };
    let s_of = |y: f64| -base_f(y).value / (a * fam.nu(y).v);
    let mut roots = vec![0.0];
    let n = 20_000;
    let mut prev = h(1e-9);
    for k in 1..n {
        let y1 = l * k as f64 / n as f64;
        let cur = h(y1);
        if prev * cur < 0.0 {
            let (mut lo, mut hi) = (l * (k - 1) as f64 / n as f64, y1);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if h(lo) * h(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    let admissible: Vec<(f64, f64)> = roots
        .into_iter()
        .filter(|&y| y < l && fam.nu(y).v > 0.0)
        .map(|y| (y, s_of(y)))
        .filter(|&(_, s)| (0.0..=1.0).contains(&s))
        .collect();
    if admissible.len() != 1 {
        return Err(Error::FamilyInvalid(format!(
            "expected exactly one critical zero, found {}",
            admissible.len()
        )));
    }
    let (y, s) = admissible[0];
    let t_star = 2.0 * s - 1.0;
    let jet = fam.jet(t_star, 0.0, y);
    let hs = jet.hess;
    let tr = hs[0][0] + hs[1][1];
    let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let eig = [0.5 * tr - disc, 0.5 * tr + disc];
    Ok(Transition {
        t_star,
        point: [0.0, y],
        hessian: hs,
        hessian_eigenvalues: eig,
        nondegenerate: det.abs() > 1e-9,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C1Bound {
    pub bound: f64,
    pub epsilon: f64,
}

/// ε = min(1, 1/(2B)); the bound B = 0 gives ε = 1.
pub fn epsilon_from_bound(b: f64) -> f64 {
    if b <= 0.0 {
        1.0
    } else {
        (0.5 / b).min(1.0)
    }
}

/// Sup of max(|f|, |∂1 f|, |∂3 f|) over a grid in (t, δ, x) on [-2, 2]^2.
pub fn c1_bound_and_epsilon(deltas: &[f64], t_samples: usize, n: usize) -> Result<C1Bound> {
    let mut b = 0.0f64;
    for &d in deltas {
        let fam = HandleFamily::new(d)?;
        for k in 0..t_samples {
            let t = -1.0 + 2.0 * k as f64 / (t_samples.max(2) - 1) as f64;
            for i in 0..n {
                for j in 0..n {
                    let x1 = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
                    let x3 = -2.0 + 4.0 * j as f64 / (n - 1) as f64;
                    let jt = fam.jet(t, x1, x3);
                    b = b.max(jt.value.abs()).max(jt.grad[0].abs()).max(jt.grad[1].abs());
                }
            }
        }
    }
    Ok(C1Bound {
        bound: b,
        epsilon: epsilon_from_bound(b),
    })
}

/// sup |∂1 f_1| over the region where f_1 <= 0, sampled on an n x n grid.
pub fn x1_slope_where_nonpositive(fam: &HandleFamily, n: usize) -> f64 {
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let x1 = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
            let x3 = -2.0 + 4.0 * j as f64 / (n - 1) as f64;
            let jt = fam.f1_jet(x1, x3);
            if jt.value <= 0.0 {
                m = m.max(jt.grad[0].abs());
            }
        }
    }
    m
}
