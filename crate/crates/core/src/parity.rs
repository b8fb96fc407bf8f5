//! The normal-bundle endomorphism S along zero circles and the parity of
//! its negative eigenline.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{CompiledForm, Coefficient, Point, SampledField, SmoothMap};
use crate::models::{theta, QuotientModel};
use crate::tracker::{kernel_direction, polish_point};

/// Tolerance for the self-duality of the gradient image.
pub const SELF_DUAL_TOL: f64 = 1e-7;
/// Minimum eigenvalue gap between the negative and positive eigenvalues.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ParityOptions {
    /// Samples along the circle; doubled on continuity failure.
    pub samples: usize,
    /// Fixed rotation applied to every normal frame.
    pub frame_rotation: Option<[[f64; 3]; 3]>,
}

impl ParityOptions {
    pub fn new() -> Self {
        Self {
            samples: 64,
            frame_rotation: None,
        }
    }
}

/// Orthonormal frame of the complement of z, by Gram-Schmidt on the three
/// coordinate axes least aligned with z.
pub fn normal_frame(z: &[f64; 4]) -> [[f64; 4]; 3] {
    let drop = (0..4)
        .max_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs()))
        .expect("four axes");
    let zn = Vector4::from_column_slice(z).normalize();
    let mut basis: Vec<Vector4<f64>> = vec![zn];
    for i in (0..4).filter(|&i| i != drop) {
        let mut v = Vector4::zeros();
        v[i] = 1.0;
        for b in &basis {
            v -= b * b.dot(&v);
        }
        basis.push(v.normalize());
    }
    std::array::from_fn(|k| std::array::from_fn(|i| basis[k + 1][i]))
}

fn rotate_frame(frame: [[f64; 4]; 3], r: &[[f64; 3]; 3]) -> [[f64; 4]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|c| (0..3).map(|j| r[i][j] * frame[j][c]).sum()))
}

/// Self-duality residual |a - *a| / |a| of a 2-form in PAIRS order.
fn anti_self_dual_part(a: &[f64; 6]) -> f64 {
    let d = [a[0] - a[5], a[1] + a[4], a[2] - a[3]];
    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        0.0
    } else {
        d.iter().map(|x| x * x).sum::<f64>().sqrt() / n
    }
}

fn two_form_apply(a: &[f64; 6], u: &[f64; 4], v: &[f64; 4]) -> f64 {
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    pairs
        .iter()
        .zip(a)
        .map(|(&(i, j), c)| c * (u[i] * v[j] - u[j] * v[i]))
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SMatrix {
    pub frame: [[f64; 4]; 3],
    pub s: [[f64; 3]; 3],
    pub asymmetry: f64,
    pub trace: f64,
}

/// S_ij = (∇_{n_j} ω)(z, n_i) in the normal frame n of z.
pub fn s_matrix(
    w: &CompiledForm,
    p: &Point,
    z: &[f64; 4],
    rotation: Option<&[[f64; 3]; 3]>,
) -> Result<SMatrix> {
    if w.degree() != 2 {
        return Err(Error::WrongDegree {
            expected: 2,
            found: w.degree(),
        });
    }
    let m = w.values(p).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > crate::calibration::POLISHED_ZERO_TOL {
        return Err(Error::NotAZero(m));
    }
    let mut frame = normal_frame(z);
    if let Some(r) = rotation {
        frame = rotate_frame(frame, r);
    }
    let jac = w.jacobian(p);
    let grads: Vec<[f64; 6]> = frame
        .iter()
        .map(|n| std::array::from_fn(|k| (0..4).map(|c| jac[k][c] * n[c]).sum()))
        .collect();
    for g in &grads {
        let r = anti_self_dual_part(g);
        if r > SELF_DUAL_TOL {
            return Err(Error::NotSelfDual(r));
        }
    }
    let s: [[f64; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| two_form_apply(&grads[j], z, &frame[i])));
    let mut asymmetry = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            asymmetry = asymmetry.max((s[i][j] - s[j][i]).abs());
        }
    }
    Ok(SMatrix {
        frame,
        trace: s[0][0] + s[1][1] + s[2][2],
        s,
        asymmetry,
    })
}

/// Eigenvalues (descending) and matching unit eigenvectors of the
/// symmetrized matrix.
fn eigen3(s: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let m = Matrix3::from_fn(|i, j| 0.5 * (s[i][j] + s[j][i]));
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    (
        order.map(|k| eig.eigenvalues[k]),
        order.map(|k| std::array::from_fn(|i| eig.eigenvectors[(i, k)])),
    )
}

fn signature(ev: &[f64; 3]) -> (usize, usize) {
    let pos = ev.iter().filter(|&&e| e > 0.0).count();
    let neg = ev.iter().filter(|&&e| e < 0.0).count();
    (pos, neg)
}

/// A circle given as a polyline from p0 to p1, where the closing map's
/// differential carries tangent vectors at p1 to tangent vectors at p0.
/// For an embedded loop p1 = p0 and the closing map is the identity.
#[derive(Clone, Debug, Serialize)]
pub struct Circle {
    pub points: Vec<Point>,
    pub closing: [[f64; 4]; 4],
}

const IDENTITY4: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

impl Circle {
    /// An embedded loop; the first point is appended if not already last.
    pub fn closed(points: Vec<Point>) -> Self {
        let mut points = points;
        if points.first() != points.last() {
            let p0 = points[0];
            points.push(p0);
        }
        Self {
            points,
            closing: IDENTITY4,
        }
    }

    /// The image of the t-axis segment [0, 1] in a quotient by the deck map.
    pub fn quotient_axis(q: &QuotientModel) -> Self {
        Self {
            points: vec![[0.0; 4], [1.0, 0.0, 0.0, 0.0]],
            closing: q.deck_differential(),
        }
    }

    pub fn reversed(&self) -> Result<Self> {
        let m = Matrix4::from_fn(|i, j| self.closing[i][j]);
        let inv = m.try_inverse().ok_or(Error::Singular(m.determinant()))?;
        let mut points = self.points.clone();
        points.reverse();
        Ok(Self {
            points,
            closing: std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])),
        })
    }

    fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(&w[0], &w[1])).sum()
    }

    /// n + 1 points equally spaced by arclength, endpoints included.
    fn resample(&self, n: usize) -> Vec<Point> {
        let total = self.length();
        let mut out = Vec::with_capacity(n + 1);
        let mut seg = 0;
        let mut acc = 0.0;
        for k in 0..=n {
            let target = total * k as f64 / n as f64;
            while seg + 1 < self.points.len() - 1
                && acc + dist(&self.points[seg], &self.points[seg + 1]) < target
            {
                acc += dist(&self.points[seg], &self.points[seg + 1]);
                seg += 1;
            }
            let (a, b) = (self.points[seg], self.points[seg + 1]);
            let l = dist(&a, &b);
            let u = if l > 0.0 { ((target - acc) / l).clamp(0.0, 1.0) } else { 0.0 };
            out.push(std::array::from_fn(|i| a[i] + u * (b[i] - a[i])));
        }
        out
    }
}

fn dist(a: &Point, b: &Point) -> f64 {
    (0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| a[i] * b[i]).sum()
}

/// Kernel direction at p, signed to agree with `hint`.
fn tangent_along(w: &CompiledForm, p: &Point, hint: &[f64; 4]) -> [f64; 4] {
    let k = kernel_direction(w, p);
    let mut z: [f64; 4] = std::array::from_fn(|i| k[i]);
    if dot4(&z, hint) < 0.0 {
        z = z.map(|x| -x);
    }
    z
}

fn polyline_direction(points: &[Point], k: usize) -> [f64; 4] {
    let (a, b) = if k + 1 < points.len() {
        (points[k], points[k + 1])
    } else {
        (points[k - 1], points[k])
    };
    std::array::from_fn(|i| b[i] - a[i])
}

/// Orients a circle so that S has eigen-signature (+,+,-) with z along the
/// direction of traversal. Returns the circle, reversed when needed.
pub fn orient_circle(w: &CompiledForm, circle: &Circle) -> Result<(Circle, bool)> {
    let p = circle.points[0];
    let z = tangent_along(w, &p, &polyline_direction(&circle.points, 0));
    let s = s_matrix(w, &p, &z, None)?;
    let (ev, _) = eigen3(&s.s);
    match signature(&ev) {
        (2, 1) => Ok((circle.clone(), false)),
        (1, 2) => Ok((circle.reversed()?, true)),
        _ => Err(Error::OrientationInconsistent),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParitySample {
    pub point: Point,
    pub tangent: [f64; 4],
    pub s: [[f64; 3]; 3],
    pub eigenvalues: [f64; 3],
    pub l_minus: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityReport {
    pub samples: Vec<ParitySample>,
    pub monodromy_sign: i8,
    pub parity: Parity,
    pub reversed: bool,
    pub max_asymmetry: f64,
    pub max_trace: f64,
    pub min_continuity: f64,
}

fn track(w: &CompiledForm, circle: &Circle, n: usize, opts: &ParityOptions) -> Result<(Vec<ParitySample>, f64)> {
    let pts = circle.resample(n);
    let mut samples: Vec<ParitySample> = Vec::with_capacity(pts.len());
    let mut min_dot = f64::INFINITY;
    for (k, q) in pts.iter().enumerate() {
        let p = polish_point(w, *q, 1e-13, 60).ok_or_else(|| {
            Error::NotAZero(w.values(q).iter().fold(0.0f64, |a, x| a.max(x.abs())))
        })?;
        let z = tangent_along(w, &p, &polyline_direction(&pts, k));
        let s = s_matrix(w, &p, &z, opts.frame_rotation.as_ref())?;
        let (ev, vecs) = eigen3(&s.s);
        if signature(&ev) != (2, 1) {
            return Err(Error::OrientationInconsistent);
        }
        if ev[1] - ev[2] < GAP_TOL {
            return Err(Error::DegenerateEigenvalues(ev[1] - ev[2]));
        }
        let e = vecs[2];
        let mut l: [f64; 4] = std::array::from_fn(|c| (0..3).map(|i| e[i] * s.frame[i][c]).sum());
        if let Some(prev) = samples.last() {
            let d = dot4(&l, &prev.l_minus);
            if d < 0.0 {
                l = l.map(|x| -x);
            }
            min_dot = min_dot.min(d.abs());
        }
        samples.push(ParitySample {
            point: p,
            tangent: z,
            s: s.s,
            eigenvalues: ev,
            l_minus: l,
        });
    }
    Ok((samples, min_dot))
}

/// Parity of a zero circle from the monodromy of the negative eigenline.
pub fn parity(w: &CompiledForm, circle: &Circle, opts: &ParityOptions) -> Result<ParityReport> {
    let (circle, reversed) = orient_circle(w, circle)?;
    let mut n = opts.samples.max(64);
    let (samples, min_continuity) = loop {
        let (s, d) = track(w, &circle, n, opts)?;
        if d > 0.9 {
            break (s, d);
        }
        if n >= 1 << 14 {
            return Err(Error::DegenerateEigenvalues(d));
        }
        n *= 2;
    };
    let first = samples.first().expect("samples").l_minus;
    let last = samples.last().expect("samples").l_minus;
    let back: [f64; 4] =
        std::array::from_fn(|i| (0..4).map(|j| circle.closing[i][j] * last[j]).sum());
    let monodromy_sign: i8 = if dot4(&back, &first) > 0.0 { 1 } else { -1 };
    let max_asymmetry = samples
        .iter()
        .map(|s| {
            let mut a = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    a = a.max((s.s[i][j] - s.s[j][i]).abs());
                }
            }
            a
        })
        .fold(0.0, f64::max);
    let max_trace = samples
        .iter()
        .map(|s| (s.s[0][0] + s.s[1][1] + s.s[2][2]).abs())
        .fold(0.0, f64::max);
    Ok(ParityReport {
        samples,
        monodromy_sign,
        parity: if monodromy_sign > 0 { Parity::Even } else { Parity::Odd },
        reversed,
        max_asymmetry,
        max_trace,
        min_continuity,
    })
}

/// Parity of the image of the t-axis in a quotient model.
pub fn quotient_parity(q: &QuotientModel, opts: &ParityOptions) -> Result<ParityReport> {
    parity(&CompiledForm::new(&q.base), &Circle::quotient_axis(q), opts)
}

/// Θ pulled back by (t, x) ↦ (t, x1, R(πt)(x2, x3)), with the deck map of
/// Θ_odd. The half turn and the deck reflection each reverse L⁻.
pub fn glued_model() -> Result<QuotientModel> {
    let c = |p: &Point| (PI * p[0]).cos();
    let s = |p: &Point| (PI * p[0]).sin();
    let y2 = SampledField::with_gradient(
        move |p| c(p) * p[2] - s(p) * p[3],
        move |p| [-PI * (s(p) * p[2] + c(p) * p[3]), 0.0, c(p), -s(p)],
    );
    let y3 = SampledField::with_gradient(
        move |p| s(p) * p[2] + c(p) * p[3],
        move |p| [PI * (c(p) * p[2] - s(p) * p[3]), 0.0, s(p), c(p)],
    );
    let map = SmoothMap {
        components: [
            Coefficient::Exact(crate::forms::Poly4::var(0)),
            Coefficient::Exact(crate::forms::Poly4::var(1)),
            y2.into(),
            y3.into(),
        ],
    };
    Ok(QuotientModel {
        base: theta().pullback(&map)?,
        sigma: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_s_is_diag() {
        let w = CompiledForm::new(&theta());
        let s = s_matrix(&w, &[0.3, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], None).unwrap();
        let expect = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.s[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let z = [0.6, 0.0, 0.8, 0.0];
        let f = normal_frame(&z);
        for i in 0..3 {
            assert!(dot4(&f[i], &z).abs() < 1e-12);
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot4(&f[i], &f[j]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_zero_point_rejected() {
        let w = CompiledForm::new(&theta());
        assert!(matches!(
            s_matrix(&w, &[0.0, 0.5, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], None),
            Err(Error::NotAZero(_))
        ));
    }
}
