//! Predicates for near-positive and near-symplectic forms.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::numeric::{wedge_pairing, wedge_square_value};
use crate::forms::{Coefficient, CompiledForm, DifferentialForm, FormPath, Point};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Grid points whose six coefficients are all below this are zeros.
pub const ZERO_TOL: f64 = 1e-10;
/// Largest coefficient accepted at a point handed to [`gradient_rank`].
pub const POLISHED_ZERO_TOL: f64 = 1e-8;

/// c_i^2 + c_j^2 compared against a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cylinder {
    pub axes: (usize, usize),
    pub bound: f64,
    /// `true` for the level set r^2 = bound, `false` for the open set r^2 < bound.
    pub level_set: bool,
}

/// A box, optionally cut by a cylinder condition and a ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub bounds: [(f64, f64); 4],
    pub cylinder: Option<Cylinder>,
    pub ball_radius: Option<f64>,
}

impl Region {
    pub fn new(bounds: [(f64, f64); 4]) -> Result<Self> {
        for (lo, hi) in bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "region bounds must be finite with lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(Self {
            bounds,
            cylinder: None,
            ball_radius: None,
        })
    }

    pub fn cube(half: f64) -> Self {
        Self::new([(-half, half); 4]).expect("positive half width")
    }

    /// Open unit ball D^4.
    pub fn unit_ball() -> Self {
        Self {
            ball_radius: Some(1.0),
            ..Self::cube(1.0)
        }
    }

    /// U_δ = {|x1| < 2, |x3| < 2, x2^2 + x4^2 < δ}.
    pub fn u_delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!("U_delta needs 0 < delta <= 1, got {delta}")));
        }
        let r = delta.sqrt();
        Ok(Self {
            cylinder: Some(Cylinder {
                axes: (1, 3),
                bound: delta,
                level_set: false,
            }),
            ..Self::new([(-2.0, 2.0), (-r, r), (-2.0, 2.0), (-r, r)])?
        })
    }

    /// C_δ = {|x1| <= 2, |x3| <= 2, x2^2 + x4^2 = δ^2}.
    pub fn c_delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!("C_delta needs 0 < delta <= 1, got {delta}")));
        }
        Ok(Self {
            cylinder: Some(Cylinder {
                axes: (1, 3),
                bound: delta * delta,
                level_set: true,
            }),
            ..Self::new([(-2.0, 2.0), (-delta, delta), (-2.0, 2.0), (-delta, delta)])?
        })
    }

    pub fn with_ball(mut self, r: f64) -> Self {
        self.ball_radius = Some(r);
        self
    }

    pub fn contains(&self, p: &Point) -> bool {
        let in_box = (0..4).all(|i| p[i] >= self.bounds[i].0 && p[i] <= self.bounds[i].1);
        let in_cyl = self.cylinder.map_or(true, |c| {
            let r2 = p[c.axes.0].powi(2) + p[c.axes.1].powi(2);
            if c.level_set {
                (r2 - c.bound).abs() <= 1e-12 * c.bound.max(1.0)
            } else {
                r2 < c.bound
            }
        });
        let in_ball = self
            .ball_radius
            .map_or(true, |r| p.iter().map(|x| x * x).sum::<f64>() < r * r);
        in_box && in_cyl && in_ball
    }

    /// Distance from p to the boundary of the region (negative outside).
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..4 {
            d = d.min(p[i] - self.bounds[i].0).min(self.bounds[i].1 - p[i]);
        }
        if let Some(c) = self.cylinder {
            if !c.level_set {
                let r = (p[c.axes.0].powi(2) + p[c.axes.1].powi(2)).sqrt();
                d = d.min(c.bound.sqrt() - r);
            }
        }
        if let Some(rb) = self.ball_radius {
            d = d.min(rb - p.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        d
    }

    /// Tensor grid with `n` points per axis (endpoints included), filtered to
    /// the region. On a cylinder level set the two cylinder axes are replaced
    /// by `n` equally spaced angles.
    pub fn grid(&self, n: usize) -> Vec<Point> {
        assert!(n >= 2, "grid needs at least two points per axis");
        let lin = |i: usize, k: usize| {
            let (lo, hi) = self.bounds[i];
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        };
        let mut out = Vec::new();
        match self.cylinder {
            Some(c) if c.level_set => {
                let free: Vec<usize> = (0..4).filter(|&i| i != c.axes.0 && i != c.axes.1).collect();
                let r = c.bound.sqrt();
                for a in 0..n {
                    for b in 0..n {
                        for k in 0..n {
                            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                            let mut p = [0.0; 4];
                            p[free[0]] = lin(free[0], a);
                            p[free[1]] = lin(free[1], b);
                            p[c.axes.0] = r * phi.cos();
                            p[c.axes.1] = r * phi.sin();
                            if self.ball_radius.map_or(true, |rb| {
                                p.iter().map(|x| x * x).sum::<f64>() < rb * rb
                            }) {
                                out.push(p);
                            }
                        }
                    }
                }
            }
            _ => {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                let p = [lin(0, a), lin(1, b), lin(2, c), lin(3, d)];
                                if self.contains(&p) {
                                    out.push(p);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedReport {
    pub closed: bool,
    pub residual: f64,
}

/// Exact forms: symbolic test of dω = 0. Sampled forms: max |dω| over
/// `samples` compared with `tol`.
pub fn is_closed(a: &DifferentialForm, samples: &[Point], tol: f64) -> Result<ClosedReport> {
    let d = a.exterior_derivative()?;
    if d.is_exact() {
        return Ok(ClosedReport {
            closed: d.is_zero(),
            residual: if d.is_zero() {
                0.0
            } else {
                samples
                    .iter()
                    .flat_map(|p| d.values(p))
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            },
        });
    }
    let residual = samples
        .par_iter()
        .map(|p| d.values(p).into_iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .reduce(|| 0.0, f64::max);
    Ok(ClosedReport {
        closed: residual <= tol,
        residual,
    })
}

/// Coefficient of ω∧ω against dvol.
pub fn wedge_square_field(w: &DifferentialForm) -> Result<Coefficient> {
    if w.degree() != 2 {
        return Err(Error::WrongDegree {
            expected: 2,
            found: w.degree(),
        });
    }
    w.wedge(w)?.top_coefficient()
}

/// Gram matrix of (a, b) ↦ (a∧b)/dvol at p.
pub fn wedge_square_gram(forms: &[DifferentialForm], p: &Point) -> Result<DMatrix<f64>> {
    let mut vals = Vec::with_capacity(forms.len());
    for f in forms {
        if f.degree() != 2 {
            return Err(Error::WrongDegree {
                expected: 2,
                found: f.degree(),
            });
        }
        let v = f.values(p);
        vals.push([v[0], v[1], v[2], v[3], v[4], v[5]]);
    }
    Ok(gram_of(&vals))
}

pub fn gram_of(vals: &[[f64; 6]]) -> DMatrix<f64> {
    let k = vals.len();
    DMatrix::from_fn(k, k, |i, j| wedge_pairing(&vals[i], &vals[j]))
}

/// (positive, negative, zero) eigenvalue counts with relative tolerance.
pub fn signature(m: &DMatrix<f64>) -> (usize, usize, usize) {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut s = (0, 0, 0);
    for v in eig.eigenvalues.iter() {
        if *v > 1e-12 * scale {
            s.0 += 1;
        } else if *v < -1e-12 * scale {
            s.1 += 1;
        } else {
            s.2 += 1;
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientVerdict {
    pub point: Point,
    pub rank: usize,
    /// Defined only when rank = 3.
    pub positive_definite_image: Option<bool>,
    pub includes_time_direction: bool,
    pub singular_values: Vec<f64>,
}

impl GradientVerdict {
    pub fn is_nondegenerate(&self) -> bool {
        self.rank == 3 && self.positive_definite_image == Some(true)
    }
}

/// Rank of the intrinsic gradient at a zero, optionally including the
/// path direction.
pub fn gradient_rank(
    w: &CompiledForm,
    p: &Point,
    time: Option<(&FormPath, f64)>,
) -> Result<GradientVerdict> {
    let v = w.values(p);
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > POLISHED_ZERO_TOL {
        return Err(Error::NotAZero(m));
    }
    let jac = w.jacobian(p);
    let cols = if time.is_some() { 5 } else { 4 };
    let dt = time.map(|(path, t)| path.t_derivative(p, t));
    let j = DMatrix::from_fn(6, cols, |r, c| {
        if c < 4 {
            jac[r][c]
        } else {
            dt.as_ref().expect("time column")[r]
        }
    });
    let svd = j.svd(true, false);
    let mut sv: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = sv.first().map_or(0.0, |x| x.0);
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|(s, _)| *s > RANK_TOL * smax).count()
    };
    let positive_definite_image = if rank == 3 {
        let u = svd.u.as_ref().expect("left singular vectors");
        let basis: Vec<[f64; 6]> = sv[..3]
            .iter()
            .map(|(_, k)| std::array::from_fn(|r| u[(r, *k)]))
            .collect();
        let g = gram_of(&basis);
        let eig = SymmetricEigen::new(g);
        Some(eig.eigenvalues.iter().all(|&e| e > 1e-9))
    } else {
        None
    };
    Ok(GradientVerdict {
        point: *p,
        rank,
        positive_definite_image,
        includes_time_direction: time.is_some(),
        singular_values: sv.iter().map(|x| x.0).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub point: Point,
    pub square: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearPositiveReport {
    pub near_positive: bool,
    pub points_checked: usize,
    pub positive_points: usize,
    pub zero_points: Vec<Point>,
    pub zero_verdicts: Vec<GradientVerdict>,
    pub counterexamples: Vec<Counterexample>,
    pub min_square: f64,
}

enum Classified {
    Positive(f64),
    Zero(GradientVerdict),
    Bad(Counterexample),
}

/// Classify grid points into positive-square points and zeros, checking the
/// rank-3 condition at every zero.
pub fn near_positive_report(w: &CompiledForm, region: &Region, n: usize) -> NearPositiveReport {
    let pts = region.grid(n);
    let classified: Vec<Classified> = pts
        .par_iter()
        .map(|p| {
            let v = w.values(p);
            let v6: [f64; 6] = std::array::from_fn(|i| v[i]);
            let sq = wedge_square_value(&v6);
            let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if vmax < ZERO_TOL {
                match gradient_rank(w, p, None) {
                    Ok(g) if g.is_nondegenerate() => Classified::Zero(g),
                    Ok(g) => Classified::Bad(Counterexample {
                        point: *p,
                        square: sq,
                        reason: format!("zero with gradient rank {}", g.rank),
                    }),
                    Err(e) => Classified::Bad(Counterexample {
                        point: *p,
                        square: sq,
                        reason: e.to_string(),
                    }),
                }
            } else if sq > 0.0 {
                Classified::Positive(sq)
            } else {
                let rank = w
                    .jacobian(p)
                    .iter()
                    .flat_map(|r| r.iter())
                    .any(|x| x.abs() > 0.0) as usize;
                Classified::Bad(Counterexample {
                    point: *p,
                    square: sq,
                    reason: if rank == 0 {
                        "non-positive square at a non-zero, gradient rank 0".into()
                    } else {
                        "non-positive square at a non-zero".into()
                    },
                })
            }
        })
        .collect();
    let mut report = NearPositiveReport {
        near_positive: true,
        points_checked: pts.len(),
        positive_points: 0,
        zero_points: Vec::new(),
        zero_verdicts: Vec::new(),
        counterexamples: Vec::new(),
        min_square: f64::INFINITY,
    };
    for c in classified {
        match c {
            Classified::Positive(s) => {
                report.positive_points += 1;
                report.min_square = report.min_square.min(s);
            }
            Classified::Zero(g) => {
                report.zero_points.push(g.point);
                report.zero_verdicts.push(g);
            }
            Classified::Bad(c) => {
                report.min_square = report.min_square.min(c.square);
                report.counterexamples.push(c);
            }
        }
    }
    report.near_positive = report.counterexamples.is_empty();
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanningReport {
    pub positive_definite: bool,
    /// Smallest Gram eigenvalue seen.
    pub worst_margin: f64,
    pub worst_point: Option<Point>,
}

/// Positive-definiteness of the 3x3 wedge-square Gram of three form fields.
pub fn spanning_positivity(forms: &[CompiledForm; 3], points: &[Point]) -> SpanningReport {
    let (margin, worst) = points
        .par_iter()
        .map(|p| {
            let vals: Vec<[f64; 6]> = forms
                .iter()
                .map(|f| {
                    let v = f.values(p);
                    std::array::from_fn(|i| v[i])
                })
                .collect();
            let eig = SymmetricEigen::new(gram_of(&vals));
            (eig.eigenvalues.min(), Some(*p))
        })
        .reduce(
            || (f64::INFINITY, None),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    SpanningReport {
        positive_definite: margin > 0.0,
        worst_margin: margin,
        worst_point: worst,
    }
}
