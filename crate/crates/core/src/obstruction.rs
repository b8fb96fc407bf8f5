//! Obstruction bookkeeping: J-set arithmetic, restriction maps, Hopf invariants
//! of maps S^3 -> S^2 and the β parity ledger.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::CompiledForm;
use crate::models::theta;
use crate::parity::Parity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Space {
    S3,
    S1xS2,
    W,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::S3 => "S3",
            Space::S1xS2 => "S1xS2",
            Space::W => "W",
        })
    }
}

/// Generator of the stabilizer of the Z-action on J(space, t_n); 0 when the
/// action is free.
pub fn stabilizer(space: Space, n: i64) -> i64 {
    match space {
        Space::S1xS2 => (2 * n).abs(),
        Space::S3 | Space::W => 0,
    }
}

/// A homotopy class of plane fields, as an element of the Z-set J(space, t_n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct JClass {
    pub space: Space,
    pub n: i64,
    pub value: i64,
}

impl JClass {
    pub fn new(space: Space, n: i64, value: i64) -> Self {
        let modulus = stabilizer(space, n);
        let value = if modulus == 0 { value } else { value.rem_euclid(modulus) };
        Self { space, n, value }
    }

    pub fn base(space: Space, n: i64) -> Self {
        Self::new(space, n, 0)
    }

    pub fn modulus(&self) -> i64 {
        stabilizer(self.space, self.n)
    }
}

impl fmt::Display for JClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.modulus() {
            0 => write!(f, "{} in J({}, n={}) = Z", self.value, self.space, self.n),
            m => write!(f, "{} in J({}, n={}) = Z/{}", self.value, self.space, self.n, m),
        }
    }
}

/// a[m].
pub fn j_action(a: JClass, m: i64) -> JClass {
    JClass::new(a.space, a.n, a.value + m)
}

/// Restrictions of a class on W to its two boundary pieces. Only the index
/// n = -1 is supported; there r1(a[1]) = r1(a)[-1] and r2(a[1]) = r2(a)[1]
/// starting from (0, 0) at the basepoint.
pub fn restrictions(a: JClass) -> Result<(JClass, JClass)> {
    if a.space != Space::W {
        return Err(Error::InvalidParameter(format!(
            "restrictions are defined on W, got {}",
            a.space
        )));
    }
    if a.n != -1 {
        return Err(Error::UnsupportedIndex(a.n));
    }
    Ok((
        JClass::new(Space::S3, a.n, -a.value),
        JClass::new(Space::S1xS2, a.n, a.value),
    ))
}

/// A plane field with class a on S1xS2 (index -1) and b on S3 extends over
/// the cobordism iff a = b mod 2.
pub fn extension_exists(a: i64, b: i64) -> bool {
    (a - b).rem_euclid(2) == 0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ManifoldInvariants {
    pub b1: u32,
    pub b2_plus: u32,
    pub b2_minus: u32,
}

impl ManifoldInvariants {
    pub fn new(b1: u32, b2_plus: u32, b2_minus: u32) -> Self {
        Self { b1, b2_plus, b2_minus }
    }

    pub fn euler(&self) -> i64 {
        2 - 2 * self.b1 as i64 + self.b2_plus as i64 + self.b2_minus as i64
    }

    pub fn signature(&self) -> i64 {
        self.b2_plus as i64 - self.b2_minus as i64
    }

    /// β = (e + σ)/2.
    pub fn beta(&self) -> i64 {
        (self.euler() + self.signature()) / 2
    }

    /// Checks (e + σ)/2 = 1 - b1 + b2+ with e + σ even.
    pub fn beta_consistent(&self) -> bool {
        let s = self.euler() + self.signature();
        s % 2 == 0 && s / 2 == 1 - self.b1 as i64 + self.b2_plus as i64
    }
}

/// A few closed 4-manifolds with their characteristic class square.
pub fn example_manifolds() -> Vec<(&'static str, ManifoldInvariants, i64)> {
    vec![
        ("CP2", ManifoldInvariants::new(0, 1, 0), 9),
        ("S1xS3 # CP2", ManifoldInvariants::new(1, 1, 0), 9),
        ("K3", ManifoldInvariants::new(0, 3, 19), 0),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaLedger {
    pub invariants: ManifoldInvariants,
    pub euler: i64,
    pub signature: i64,
    pub beta: i64,
    pub n_even: usize,
    pub n_odd: usize,
    /// β after surgery along every zero-circle; each circle adds
    /// e(S^2 x B^2) - e(B^3 x S^1) = 2 to e and nothing to σ.
    pub surgered_beta: i64,
    pub hopf_sum_parity: i64,
    /// Parity the even count must have.
    pub required_even_parity: i64,
    pub consistent: bool,
    pub c_squared: Option<i64>,
    /// (c^2 - 2e - 3σ)/4 mod 2, when c^2 is supplied and admissible.
    pub relation_parity: Option<i64>,
    pub flags: Vec<String>,
}

pub fn beta_ledger(inv: ManifoldInvariants, parities: &[Parity], c_squared: Option<i64>) -> BetaLedger {
    let mut flags = Vec::new();
    if !inv.beta_consistent() {
        flags.push("(e + sigma)/2 differs from 1 - b1 + b2+".to_string());
    }
    let (e, sigma, beta) = (inv.euler(), inv.signature(), inv.beta());
    let n_even = parities.iter().filter(|p| **p == Parity::Even).count();
    let n_odd = parities.len() - n_even;
    let surgered_beta = beta + parities.len() as i64;
    let hopf_sum_parity = n_odd as i64 % 2;
    // β(X_γ) ≡ Σ h ≡ n_odd, so β + n_even + n_odd ≡ n_odd.
    let required_even_parity = (surgered_beta - parities.len() as i64).rem_euclid(2);
    let consistent = (n_even as i64).rem_euclid(2) == required_even_parity;

    let relation_parity = c_squared.and_then(|c2| {
        if (c2 - sigma).rem_euclid(8) != 0 {
            flags.push(format!("c^2 = {c2} is not congruent to sigma = {sigma} mod 8"));
            return None;
        }
        let num = c2 - 2 * e - 3 * sigma;
        if num % 4 != 0 {
            flags.push(format!("c^2 - 2e - 3 sigma = {num} is not divisible by 4"));
            return None;
        }
        let r = (num / 4).rem_euclid(2);
        if r != beta.rem_euclid(2) {
            flags.push("(c^2 - 2e - 3 sigma)/4 and beta differ mod 2".to_string());
        }
        Some(r)
    });

    BetaLedger {
        invariants: inv,
        euler: e,
        signature: sigma,
        beta,
        n_even,
        n_odd,
        surgered_beta,
        hopf_sum_parity,
        required_even_parity,
        consistent,
        c_squared,
        relation_parity,
        flags,
    }
}

/// Fuses two zero-circles: the result is even iff the two parities differ.
pub fn fuse(a: Parity, b: Parity) -> Parity {
    if a == b {
        Parity::Odd
    } else {
        Parity::Even
    }
}

/// A map from the unit 3-sphere to R^3 \ 0, read as a map to S^2.
pub type SphereMap = dyn Fn(&[f64; 4]) -> [f64; 3] + Sync;

pub fn hopf_map(p: &[f64; 4]) -> [f64; 3] {
    let [a, b, c, d] = *p;
    // z1 = a + ib, z2 = c + id; z1 conj(z2) = (ac + bd) + i(bc - ad).
    [
        a * a + b * b - c * c - d * d,
        2.0 * (a * c + b * d),
        2.0 * (b * c - a * d),
    ]
}

/// The Hopf map precomposed with (z1, z2) ↦ (z1, conj z2).
pub fn conjugate_hopf_map(p: &[f64; 4]) -> [f64; 3] {
    hopf_map(&[p[0], p[1], p[2], -p[3]])
}

pub fn constant_map(_: &[f64; 4]) -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// f(z1, z2) = (|z1| - 2)^2 + |z2|^2.
pub fn lemma_f_f(z: &[f64; 4]) -> f64 {
    let r1 = z[0].hypot(z[1]);
    (r1 - 2.0).powi(2) + z[2] * z[2] + z[3] * z[3]
}

/// F = f^{-1/2} (-2(|z1| - 2), Re z2, Im z2).
pub fn lemma_f_field(z: &[f64; 4]) -> [f64; 3] {
    let r1 = z[0].hypot(z[1]);
    let s = lemma_f_f(z).sqrt();
    [-2.0 * (r1 - 2.0) / s, z[2] / s, z[3] / s]
}

/// F restricted to the sphere of radius r, as a map on the unit sphere.
pub fn lemma_f_map(r: f64) -> impl Fn(&[f64; 4]) -> [f64; 3] + Sync {
    move |p| lemma_f_field(&[r * p[0], r * p[1], r * p[2], r * p[3]])
}

/// Named maps for the command line.
pub fn named_map(name: &str, r: f64) -> Result<Box<SphereMap>> {
    match name {
        "hopf" => Ok(Box::new(hopf_map)),
        "conjugate-hopf" => Ok(Box::new(conjugate_hopf_map)),
        "constant" => Ok(Box::new(constant_map)),
        "lemma-f" | "F" => {
            if r <= 3.0 {
                return Err(Error::InvalidParameter(format!("radius {r} must exceed 3")));
            }
            Ok(Box::new(lemma_f_map(r)))
        }
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

fn unit3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v).normalize()
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| a[i] * b[i]).sum()
}

fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Points on S^2 in a Fibonacci spiral.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// A grid on S^3 in Hopf coordinates (cos η e^{iξ1}, sin η e^{iξ2}) with
/// roughly n points, and its covering radius.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub points: Vec<[f64; 4]>,
    pub covering_radius: f64,
}

impl SphereGrid {
    pub fn new(n: usize) -> Self {
        let n_eta = ((n as f64 / 16.0).cbrt().ceil() as usize).max(2);
        let n_xi = 4 * n_eta;
        let (d_eta, d_xi) = (0.5 * PI / n_eta as f64, TAU / n_xi as f64);
        let mut points = Vec::with_capacity(n_eta * n_xi * n_xi);
        for i in 0..n_eta {
            let eta = (i as f64 + 0.5) * d_eta;
            for j in 0..n_xi {
                let a = j as f64 * d_xi;
                for k in 0..n_xi {
                    let b = k as f64 * d_xi;
                    points.push([
                        eta.cos() * a.cos(),
                        eta.cos() * a.sin(),
                        eta.sin() * b.cos(),
                        eta.sin() * b.sin(),
                    ]);
                }
            }
        }
        // The metric is dη^2 + cos^2η dξ1^2 + sin^2η dξ2^2, and the η cells
        // are centred so the poles sit half a step from a sample.
        let covering_radius = 0.5 * (d_eta * d_eta + 2.0 * d_xi * d_xi).sqrt();
        Self { points, covering_radius }
    }
}

/// Orthonormal basis of the tangent space of S^3 at p.
fn tangent_basis(p: &[f64; 4]) -> [[f64; 4]; 3] {
    // Left multiplication by i, j, k on the unit quaternions.
    let [a, b, c, d] = *p;
    [[-b, a, -d, c], [-c, d, a, -b], [-d, -c, b, a]]
}

/// Angle samples and a local Lipschitz estimate for map/|map| at each point.
struct ImageSample {
    direction: Vector3<f64>,
    lipschitz: f64,
}

fn sample_image(map: &SphereMap, grid: &SphereGrid) -> Result<Vec<ImageSample>> {
    const H: f64 = 1e-6;
    grid.points
        .par_iter()
        .map(|p| {
            let g = map(p);
            let norm = Vector3::from(g).norm();
            if !(norm > 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "map vanishes or is undefined near {p:?}"
                )));
            }
            let direction = Vector3::from(g) / norm;
            let mut frob = 0.0;
            for t in tangent_basis(p) {
                let shift = |s: f64| -> [f64; 4] {
                    let q: [f64; 4] = std::array::from_fn(|i| p[i] + s * t[i]);
                    let n = dot4(&q, &q).sqrt();
                    q.map(|x| x / n)
                };
                let d = (unit3(map(&shift(H))) - unit3(map(&shift(-H)))) / (2.0 * H);
                frob += d.norm_squared();
            }
            Ok(ImageSample {
                direction,
                lipschitz: frob.sqrt(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HopfMethod {
    NonSurjective,
    Linking,
}

#[derive(Clone, Debug)]
pub struct HopfOptions {
    pub samples: usize,
    pub step: f64,
    pub segments: usize,
    pub values: Option<[[f64; 3]; 2]>,
    /// Factor applied to the sampled Lipschitz constant to bound it between
    /// samples.
    pub lipschitz_safety: f64,
}

impl Default for HopfOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            step: 0.05,
            segments: 512,
            values: None,
            lipschitz_safety: 2.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfResult {
    pub invariant: i64,
    pub method: HopfMethod,
    /// Value missed by the map (non-surjective) or the two regular values.
    pub values: Vec<[f64; 3]>,
    /// Cap margin: angular gap minus the Lipschitz bound times the covering
    /// radius, or distance of the linking integral from the nearest
    /// half-integer.
    pub margin: f64,
    pub min_angle: Option<f64>,
    pub lipschitz: f64,
    pub covering_radius: f64,
    pub linking_raw: Option<f64>,
    pub components: Vec<usize>,
    pub samples: usize,
    pub attempts: usize,
}

/// Largest spherical cap missed by the sampled image, tested over a fixed
/// set of candidate centres.
fn omitted_value(images: &[ImageSample], lipschitz: f64, covering: f64) -> Option<([f64; 3], f64, f64)> {
    let mut candidates = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    candidates.extend(fibonacci_sphere(200));
    candidates
        .par_iter()
        .map(|c| {
            let v = Vector3::from(*c);
            let min_angle = images
                .iter()
                .map(|s| s.direction.dot(&v).clamp(-1.0, 1.0).acos())
                .fold(f64::INFINITY, f64::min);
            (*c, min_angle, min_angle - lipschitz * covering)
        })
        .filter(|c| c.2 > 0.0)
        .max_by(|a, b| a.2.total_cmp(&b.2))
}

pub fn hopf_invariant(map: &SphereMap, opts: &HopfOptions) -> Result<HopfResult> {
    let grid = SphereGrid::new(opts.samples);
    let images = sample_image(map, &grid)?;
    let lipschitz = opts.lipschitz_safety * images.iter().map(|s| s.lipschitz).fold(0.0, f64::max);
    let covering = grid.covering_radius;

    if let Some((value, min_angle, margin)) = omitted_value(&images, lipschitz, covering) {
        return Ok(HopfResult {
            invariant: 0,
            method: HopfMethod::NonSurjective,
            values: vec![value],
            margin,
            min_angle: Some(min_angle),
            lipschitz,
            covering_radius: covering,
            linking_raw: None,
            components: Vec::new(),
            samples: grid.points.len(),
            attempts: 0,
        });
    }

    let pairs: Vec<[[f64; 3]; 2]> = match opts.values {
        Some(v) => vec![v],
        None => {
            let c = fibonacci_sphere(24);
            (0..5).map(|k| [c[3 * k + 1], c[(3 * k + 14) % 24]]).collect()
        }
    };
    let mut last_err = None;
    for (attempt, pair) in pairs.iter().enumerate() {
        let curves: Result<Vec<Vec<Vec<[f64; 4]>>>> = pair
            .iter()
            .map(|y| preimage(map, &grid, &images, unit3(*y), opts.step))
            .collect();
        let curves = match curves {
            Ok(c) if c.iter().all(|c| !c.is_empty()) => c,
            Ok(_) => {
                last_err = Some(Error::NoRegularValue(attempt + 1));
                continue;
            }
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut segments = opts.segments;
        let mut raw = linking_number(&curves[0], &curves[1], segments, &grid);
        while 0.5 - (raw - raw.round()).abs() <= 0.2 && segments < 16 * opts.segments {
            segments *= 2;
            raw = linking_number(&curves[0], &curves[1], segments, &grid);
        }
        let margin = 0.5 - (raw - raw.round()).abs();
        if margin <= 0.2 {
            last_err = Some(Error::FamilyInvalid(format!("linking integral {raw} not near an integer")));
            continue;
        }
        return Ok(HopfResult {
            invariant: raw.round() as i64,
            method: HopfMethod::Linking,
            values: pair.iter().map(|y| unit3(*y).into()).collect(),
            margin,
            min_angle: None,
            lipschitz,
            covering_radius: covering,
            linking_raw: Some(raw),
            components: curves.iter().map(|c| c.len()).collect(),
            samples: grid.points.len(),
            attempts: attempt + 1,
        });
    }
    if opts.values.is_some() {
        return Err(last_err.unwrap_or(Error::NoRegularValue(1)));
    }
    Err(Error::NoRegularValue(pairs.len()))
}

/// Constraints cutting out the preimage of y: |p|^2 - 1 and the components
/// of map(p) orthogonal to y.
struct Preimage<'a> {
    map: &'a SphereMap,
    y: Vector3<f64>,
    e: [Vector3<f64>; 2],
}

impl Preimage<'_> {
    fn new(map: &SphereMap, y: Vector3<f64>) -> Preimage<'_> {
        let seed = if y.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (seed - y * y.dot(&seed)).normalize();
        let e2 = y.cross(&e1);
        Preimage { map, y, e: [e1, e2] }
    }

    fn eval(&self, p: &[f64; 4]) -> Vector3<f64> {
        let g = Vector3::from((self.map)(p));
        Vector3::new(dot4(p, p) - 1.0, g.dot(&self.e[0]), g.dot(&self.e[1]))
    }

    fn on_positive_side(&self, p: &[f64; 4]) -> bool {
        Vector3::from((self.map)(p)).dot(&self.y) > 0.0
    }

    fn jacobian(&self, p: &[f64; 4]) -> Matrix3x4<f64> {
        const H: f64 = 1e-6;
        let mut j = Matrix3x4::zeros();
        for i in 0..4 {
            let (mut a, mut b) = (*p, *p);
            a[i] += H;
            b[i] -= H;
            j.set_column(i, &((self.eval(&a) - self.eval(&b)) / (2.0 * H)));
        }
        j
    }

    fn polish(&self, p0: &[f64; 4]) -> Option<[f64; 4]> {
        let mut p = *p0;
        for _ in 0..40 {
            let c = self.eval(&p);
            if c.norm() < 1e-12 {
                return self.on_positive_side(&p).then_some(p);
            }
            let j = self.jacobian(&p);
            let jjt: Matrix3<f64> = j * j.transpose();
            let step = j.transpose() * jjt.lu().solve(&c)?;
            for i in 0..4 {
                p[i] -= step[i];
            }
            if !p.iter().all(|x| x.is_finite()) {
                return None;
            }
        }
        let c = self.eval(&p);
        (c.norm() < 1e-10 && self.on_positive_side(&p)).then_some(p)
    }

    /// Oriented unit tangent from the signed 3x3 minors of J. With this
    /// orientation the Hopf map has invariant +1. None when the constraints
    /// are degenerate.
    fn tangent(&self, p: &[f64; 4]) -> Option<[f64; 4]> {
        let j = self.jacobian(p);
        let mut v = [0.0; 4];
        for (i, vi) in v.iter_mut().enumerate() {
            let cols: Vec<usize> = (0..4).filter(|&c| c != i).collect();
            let m = Matrix3::from_fn(|r, c| j[(r, cols[c])]);
            let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
            *vi = sign * m.determinant();
        }
        let n = dot4(&v, &v).sqrt();
        let scale = j.row_iter().map(|r| r.norm()).fold(1.0, f64::max).powi(3);
        (n > 1e-8 * scale).then(|| v.map(|x| x / n))
    }

    fn trace(&self, start: [f64; 4], step: f64) -> Result<Vec<[f64; 4]>> {
        let degenerate = || Error::NoRegularValue(1);
        let mut points = vec![start];
        let mut v = self.tangent(&start).ok_or_else(degenerate)?;
        let mut travelled = 0.0;
        let mut h = step;
        for _ in 0..200_000 {
            let p = *points.last().unwrap();
            let guess: [f64; 4] = std::array::from_fn(|i| p[i] + h * v[i]);
            let next = self.polish(&guess).and_then(|q| {
                let w = self.tangent(&q)?;
                (dot4(&w, &v) > 0.8 && dist4(&q, &p) < 2.0 * h).then_some((q, w))
            });
            let Some((q, w)) = next else {
                h *= 0.5;
                if h < 1e-7 {
                    return Err(degenerate());
                }
                continue;
            };
            travelled += dist4(&q, &p);
            if travelled > 4.0 * step && dist4(&q, &start) < 1.5 * step {
                return Ok(points);
            }
            points.push(q);
            v = w;
            h = (2.0 * h).min(step);
        }
        Err(degenerate())
    }
}

/// All components of the preimage of y found from grid seeds.
fn preimage(
    map: &SphereMap,
    grid: &SphereGrid,
    images: &[ImageSample],
    y: Vector3<f64>,
    step: f64,
) -> Result<Vec<Vec<[f64; 4]>>> {
    let constraints = Preimage::new(map, y);
    let mut seeds: Vec<(f64, usize)> = images
        .iter()
        .enumerate()
        .map(|(k, s)| (s.direction.dot(&y).clamp(-1.0, 1.0).acos(), k))
        .filter(|(a, _)| *a < 0.3)
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut curves: Vec<Vec<[f64; 4]>> = Vec::new();
    for (_, k) in seeds.into_iter().take(400) {
        let Some(p) = constraints.polish(&grid.points[k]) else {
            continue;
        };
        let known = curves
            .iter()
            .flatten()
            .any(|q| dist4(q, &p) < 3.0 * step);
        if known {
            continue;
        }
        curves.push(constraints.trace(p, step)?);
    }
    Ok(curves)
}

/// Resamples a closed polyline to n points equally spaced in arc length.
fn resample_closed(points: &[[f64; 4]], n: usize) -> Vec<[f64; 4]> {
    let m = points.len();
    let mut cum = vec![0.0];
    for k in 0..m {
        let d = dist4(&points[k], &points[(k + 1) % m]);
        cum.push(cum[k] + d);
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let s = total * i as f64 / n as f64;
        while cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let u = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let (a, b) = (points[seg], points[(seg + 1) % m]);
        out.push(std::array::from_fn(|j| a[j] + u * (b[j] - a[j])));
    }
    out
}

/// Stereographic projection from the pole, using a frame (u1, u2, u3) with
/// det[u1, u2, u3, pole] = 1.
struct Stereographic {
    pole: Vector4<f64>,
    frame: [Vector4<f64>; 3],
}

impl Stereographic {
    fn new(pole: &[f64; 4]) -> Self {
        let n = Vector4::from(*pole).normalize();
        let mut frame: Vec<Vector4<f64>> = Vec::new();
        for k in 0..4 {
            let mut v = Vector4::zeros();
            v[k] = 1.0;
            v -= n * n.dot(&v);
            for u in &frame {
                v -= u * u.dot(&v);
            }
            if v.norm() > 0.3 && frame.len() < 3 {
                frame.push(v.normalize());
            }
        }
        let det = nalgebra::Matrix4::from_columns(&[frame[0], frame[1], frame[2], n]).determinant();
        if det < 0.0 {
            frame[2] = -frame[2];
        }
        Self {
            pole: n,
            frame: [frame[0], frame[1], frame[2]],
        }
    }

    fn project(&self, p: &[f64; 4]) -> Vector3<f64> {
        let q = Vector4::from(*p);
        let denom = 1.0 - q.dot(&self.pole);
        Vector3::new(
            q.dot(&self.frame[0]),
            q.dot(&self.frame[1]),
            q.dot(&self.frame[2]),
        ) / denom
    }
}

fn gauss_integral(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let seg = |c: &[Vector3<f64>], k: usize| {
        let (p, q) = (c[k], c[(k + 1) % c.len()]);
        (0.5 * (p + q), q - p)
    };
    let sb: Vec<(Vector3<f64>, Vector3<f64>)> = (0..b.len()).map(|k| seg(b, k)).collect();
    let total: f64 = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let (m, da) = seg(a, i);
            sb.iter()
                .map(|(n, db)| {
                    let r = m - n;
                    r.dot(&da.cross(db)) / r.norm().powi(3)
                })
                .sum::<f64>()
        })
        .sum();
    total / (4.0 * PI)
}

/// Linking number of two oriented unions of closed curves on S^3.
fn linking_number(a: &[Vec<[f64; 4]>], b: &[Vec<[f64; 4]>], segments: usize, grid: &SphereGrid) -> f64 {
    let all: Vec<&[f64; 4]> = a.iter().chain(b).flatten().collect();
    // Project from the grid point farthest from both curves.
    let pole = grid
        .points
        .par_iter()
        .step_by(7)
        .map(|p| (all.iter().map(|q| dist4(p, q)).fold(f64::INFINITY, f64::min), *p))
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .map(|x| x.1)
        .unwrap_or([0.0, 0.0, 0.0, 1.0]);
    let proj = Stereographic::new(&pole);
    let curves = |c: &[Vec<[f64; 4]>]| -> Vec<Vec<Vector3<f64>>> {
        c.iter()
            .map(|l| resample_closed(l, segments).iter().map(|p| proj.project(p)).collect())
            .collect()
    };
    let (ca, cb) = (curves(a), curves(b));
    let mut lk = 0.0;
    for x in &ca {
        for y in &cb {
            lk += gauss_integral(x, y);
        }
    }
    lk
}

/// Θ_ev coefficient vector pulled back along
/// α(z1, z2) = (z1/|z1|; |z1| - 2, Re z2, Im z2).
///
/// Θ carries the factor -2 on its third spatial coordinate, so the fibre
/// coordinates are placed cyclically as (x1, x2, x3) = (Re z2, Im z2, |z1| - 2)
/// and the β coefficients are read in the order (β3, β1, β2).
pub fn pulled_back_theta(theta: &CompiledForm, z: &[f64; 4]) -> [f64; 3] {
    let r1 = z[0].hypot(z[1]);
    let t = z[1].atan2(z[0]) / TAU;
    let w = theta.values(&[t, z[2], z[3], r1 - 2.0]);
    let b = [0.5 * (w[0] + w[5]), 0.5 * (w[1] - w[4]), 0.5 * (w[2] + w[3])];
    [b[2], b[0], b[1]]
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaFReport {
    pub radius: f64,
    pub identity_samples: usize,
    pub identity_residual: f64,
    pub sphere_samples: usize,
    pub min_angle: f64,
    pub lipschitz: f64,
    pub covering_radius: f64,
    /// min_angle - lipschitz * covering_radius; positive means (1, 0, 0) is
    /// not in the image of F/|F|.
    pub margin: f64,
}

pub fn lemma_f_checks(r: f64, samples: usize) -> Result<LemmaFReport> {
    if !(r > 3.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must exceed 3")));
    }
    let th = CompiledForm::new(&theta());
    // f^{-1}(1): z1 = (2 + u1) e^{iφ}, z2 = u2 + i u3 with u on S^2.
    let n_phi = 32;
    let us = fibonacci_sphere(64);
    let mut identity_residual: f64 = 0.0;
    let mut identity_samples = 0;
    for k in 0..n_phi {
        let phi = TAU * (k as f64 + 0.25) / n_phi as f64;
        for u in &us {
            let z = [(2.0 + u[0]) * phi.cos(), (2.0 + u[0]) * phi.sin(), u[1], u[2]];
            let a = pulled_back_theta(&th, &z);
            let f = lemma_f_field(&z);
            for i in 0..3 {
                identity_residual = identity_residual.max((a[i] - f[i]).abs());
            }
            identity_samples += 1;
        }
    }

    let grid = SphereGrid::new(samples);
    let map = lemma_f_map(r);
    let images = sample_image(&map, &grid)?;
    let lipschitz = 2.0 * images.iter().map(|s| s.lipschitz).fold(0.0, f64::max);
    let min_angle = images
        .iter()
        .map(|s| s.direction.x.clamp(-1.0, 1.0).acos())
        .fold(f64::INFINITY, f64::min);
    Ok(LemmaFReport {
        radius: r,
        identity_samples,
        identity_residual,
        sphere_samples: grid.points.len(),
        min_angle,
        lipschitz,
        covering_radius: grid.covering_radius,
        margin: min_angle - lipschitz * grid.covering_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_and_norms() {
        let g = SphereGrid::new(100_000);
        assert!(g.points.len() >= 100_000);
        for p in g.points.iter().step_by(997) {
            assert!((dot4(p, p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let p = {
            let q = [0.3, -0.5, 0.7, 0.2];
            let n = dot4(&q, &q).sqrt();
            q.map(|x| x / n)
        };
        let t = tangent_basis(&p);
        for i in 0..3 {
            assert!(dot4(&t[i], &p).abs() < 1e-14);
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot4(&t[i], &t[j]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn resample_keeps_square_perimeter() {
        let sq = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]];
        let r = resample_closed(&sq, 8);
        assert_eq!(r.len(), 8);
        assert_eq!(r[0], sq[0]);
        assert!(dist4(&r[2], &sq[1]) < 1e-12);
    }
}
