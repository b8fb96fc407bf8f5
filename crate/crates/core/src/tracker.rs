//! Zero sets of 2-form paths: seeding, Newton polish, curve continuation,
//! component assembly and event detection.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{gradient_rank, Region, POLISHED_ZERO_TOL};
use crate::error::{Error, Result};
use crate::forms::{CompiledForm, FormPath, Point};

#[derive(Clone, Debug, Serialize)]
pub struct TraceOptions {
    /// Seed grid points per axis.
    pub seeds_per_axis: usize,
    /// Continuation step.
    pub step: f64,
    /// Residual accepted after Newton polish.
    pub polish_tol: f64,
    /// Bisection tolerance on event times.
    pub event_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            seeds_per_axis: 14,
            step: 0.02,
            polish_tol: 1e-11,
            event_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Point,
    Closed,
    Arc,
}

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub kind: ComponentKind,
    /// One polyline per traced branch; a component with a node has several.
    pub polylines: Vec<Vec<Point>>,
    pub nodes: usize,
    /// Sign-pattern labels of the arc endpoints, sorted.
    pub endpoint_labels: Vec<String>,
}

impl Component {
    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.polylines.iter().flatten()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Slice {
    pub t: f64,
    pub components: Vec<Component>,
}

/// Comparable description of a slice: kind, node count and endpoints per component.
pub type Signature = Vec<(ComponentKind, usize, Vec<String>)>;

impl Slice {
    pub fn signature(&self) -> Signature {
        let mut s: Signature = self
            .components
            .iter()
            .map(|c| (c.kind, c.nodes, c.endpoint_labels.clone()))
            .collect();
        s.sort();
        s
    }

    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.components.iter().flat_map(|c| c.points())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Birth,
    Surgery,
    Death,
}

#[derive(Clone, Debug, Serialize)]
pub struct Event {
    pub t: f64,
    pub point: Point,
    pub kind: EventKind,
    pub index: usize,
    pub spatial_rank: usize,
    pub rank_with_time: usize,
    /// Bracket from bisection on the slice signature.
    pub bracket: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroSetTrace {
    pub slices: Vec<Slice>,
    pub events: Vec<Event>,
}

impl ZeroSetTrace {
    /// Component count at the sample nearest to t.
    pub fn count_components(&self, t: f64) -> usize {
        self.slices
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .map_or(0, Slice::count)
    }
}

struct Tracer<'a> {
    w: CompiledForm,
    region: &'a Region,
    opts: &'a TraceOptions,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &Point, b: &Point) -> f64 {
    (0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn jac_matrix(rows: &[[f64; 4]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c])
}

/// Distance from p to the segment [a, b].
fn point_segment(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab: Vec<f64> = (0..4).map(|i| b[i] - a[i]).collect();
    let l2: f64 = ab.iter().map(|x| x * x).sum();
    let s = if l2 == 0.0 {
        0.0
    } else {
        ((0..4).map(|i| (p[i] - a[i]) * ab[i]).sum::<f64>() / l2).clamp(0.0, 1.0)
    };
    let q: Point = std::array::from_fn(|i| a[i] + s * ab[i]);
    dist(p, &q)
}

/// Distance between segments [a, b] and [c, d].
fn segment_segment(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    let u: Vector4<f64> = Vector4::from_fn(|i, _| b[i] - a[i]);
    let v: Vector4<f64> = Vector4::from_fn(|i, _| d[i] - c[i]);
    let w0: Vector4<f64> = Vector4::from_fn(|i, _| a[i] - c[i]);
    let (uu, uv, vv, uw, vw) = (u.dot(&u), u.dot(&v), v.dot(&v), u.dot(&w0), v.dot(&w0));
    let den = uu * vv - uv * uv;
    let mut best = point_segment(a, c, d)
        .min(point_segment(b, c, d))
        .min(point_segment(c, a, b))
        .min(point_segment(d, a, b));
    if den > 1e-14 * uu * vv {
        let s = (uv * vw - vv * uw) / den;
        let r = (uu * vw - uv * uw) / den;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&r) {
            best = best.min((w0 + u * s - v * r).norm());
        }
    }
    best
}

fn polyline_distance(p: &[Point], q: &[Point]) -> f64 {
    let segs = |l: &[Point]| -> Vec<(Point, Point)> {
        if l.len() == 1 {
            vec![(l[0], l[0])]
        } else {
            l.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };
    let (sp, sq) = (segs(p), segs(q));
    let mut best = f64::INFINITY;
    for (a, b) in &sp {
        for (c, d) in &sq {
            best = best.min(segment_segment(a, b, c, d));
        }
    }
    best
}

fn endpoint_label(p: &Point) -> String {
    p.iter()
        .map(|&x| {
            if x > 1e-6 {
                '+'
            } else if x < -1e-6 {
                '-'
            } else {
                '0'
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum End {
    Boundary,
    Closed,
    Stalled,
}

/// Minimum-norm least-squares solution of J dx = f, via the eigen
/// decomposition of J^T J with small eigenvalues discarded.
fn min_norm_step(jac: &[[f64; 4]], f: &[f64]) -> Option<Vector4<f64>> {
    let mut jtj = Matrix4::<f64>::zeros();
    let mut jtf = Vector4::<f64>::zeros();
    for (row, &fr) in jac.iter().zip(f) {
        for a in 0..4 {
            jtf[a] += row[a] * fr;
            for b in 0..4 {
                jtj[(a, b)] += row[a] * row[b];
            }
        }
    }
    let eig = SymmetricEigen::new(jtj);
    let lmax = eig.eigenvalues.max();
    if lmax <= 0.0 {
        return None;
    }
    let mut dx = Vector4::zeros();
    for k in 0..4 {
        let l = eig.eigenvalues[k];
        if l > 1e-18 * lmax {
            let v = eig.eigenvectors.column(k);
            dx += v * (v.dot(&jtf) / l);
        }
    }
    Some(dx)
}

/// Gauss-Newton with minimum-norm steps onto the zero set of w. Gives up
/// when the residual stagnates.
pub fn polish_point(w: &CompiledForm, p0: Point, tol: f64, max_iter: usize) -> Option<Point> {
    let mut p = p0;
    let mut last = f64::INFINITY;
    for k in 0..max_iter {
        let f = w.values(&p);
        let r = norm(&f);
        if r < tol {
            return Some(p);
        }
        if k > 4 && r > 0.95 * last {
            return None;
        }
        last = r;
        let dx = min_norm_step(&w.jacobian(&p), &f)?;
        for i in 0..4 {
            p[i] -= dx[i];
        }
        if !p.iter().all(|x| x.is_finite()) {
            return None;
        }
    }
    (norm(&w.values(&p)) < tol.max(1e-2 * POLISHED_ZERO_TOL)).then_some(p)
}

/// Unit kernel direction of the spatial Jacobian of w at p.
pub fn kernel_direction(w: &CompiledForm, p: &Point) -> Vector4<f64> {
    let j = jac_matrix(&w.jacobian(p));
    let jtj: Matrix4<f64> = Matrix4::from_fn(|r, c| j.column(r).dot(&j.column(c)));
    let eig = SymmetricEigen::new(jtj);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    eig.eigenvectors.column(order[0]).into_owned()
}

impl<'a> Tracer<'a> {
    fn polish(&self, p0: Point, max_iter: usize) -> Option<Point> {
        polish_point(&self.w, p0, self.opts.polish_tol, max_iter)
    }

    /// Step cap from the distance to the nearest singular point, estimated
    /// as the third singular value over the Hessian size.
    fn feature_size(&self, p: &Point) -> f64 {
        let j = jac_matrix(&self.w.jacobian(p));
        let mut sv: Vec<f64> = j.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let hess = self
            .w
            .hessians(p)
            .iter()
            .map(|h| h.iter().flatten().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if hess == 0.0 {
            f64::INFINITY
        } else {
            0.25 * sv.get(2).copied().unwrap_or(0.0) / hess
        }
    }

    fn walk(&self, p0: &Point, sign: f64) -> (Vec<Point>, End) {
        let step = self.opts.step;
        let mut pts = vec![*p0];
        let mut tau = kernel_direction(&self.w, p0);
        tau *= sign;
        let mut h = step;
        let mut travelled = 0.0;
        let max_pts = (200.0 / step) as usize;
        while pts.len() < max_pts {
            let p = *pts.last().expect("nonempty");
            h = h.min(self.feature_size(&p));
            if h < 1e-7 {
                return (pts, End::Stalled);
            }
            let q: Point = std::array::from_fn(|i| p[i] + h * tau[i]);
            let accepted = self.polish(q, 12).and_then(|qc| {
                let mut t2 = kernel_direction(&self.w, &qc);
                if t2.dot(&tau) < 0.0 {
                    t2 = -t2;
                }
                let d = dist(&p, &qc);
                let ok = t2.dot(&tau).clamp(-1.0, 1.0).acos() < 0.2 && d > 0.5 * h && d < 1.5 * h;
                ok.then_some((qc, t2, d))
            });
            match accepted {
                Some((qc, t2, d)) => {
                    if !self.region.contains(&qc) {
                        return (pts, End::Boundary);
                    }
                    pts.push(qc);
                    tau = t2;
                    travelled += d;
                    if pts.len() > 3 && travelled > 4.0 * h && dist(&qc, p0) < 1.5 * h {
                        pts.push(*p0);
                        return (pts, End::Closed);
                    }
                    h = (2.0 * h).min(step);
                }
                None => {
                    h *= 0.5;
                    if h < 1e-7 {
                        return (pts, End::Stalled);
                    }
                }
            }
        }
        (pts, End::Stalled)
    }

    /// Full branch through p0 and how each end terminated.
    fn branch(&self, p0: &Point) -> (Vec<Point>, [End; 2]) {
        let (fwd, e1) = self.walk(p0, 1.0);
        if e1 == End::Closed {
            return (fwd, [End::Closed, End::Closed]);
        }
        let (mut back, e2) = self.walk(p0, -1.0);
        back.reverse();
        back.pop();
        back.extend(fwd);
        (back, [e2, e1])
    }
}

/// Zero set of a single form in a region, seeded from a grid.
pub fn zero_slice(w: &CompiledForm, t: f64, region: &Region, opts: &TraceOptions) -> Slice {
    let h = seeds_spacing(region, opts.seeds_per_axis);
    let seeds: Vec<Point> = region
        .grid(opts.seeds_per_axis)
        .into_par_iter()
        .filter(|p| {
            let f = norm(&w.values(p));
            let jn = norm(&w.jacobian(p).concat());
            f < jn * h
        })
        .collect();
    slice_from_seeds(w, t, region, opts, &seeds)
}

/// Zero set reached by polishing the given seeds and continuing from them.
pub fn slice_from_seeds(
    w: &CompiledForm,
    t: f64,
    region: &Region,
    opts: &TraceOptions,
    seeds: &[Point],
) -> Slice {
    let tracer = Tracer { w: w.clone(), region, opts };
    let mut polished: Vec<Point> = seeds
        .par_iter()
        .filter_map(|p| {
            let r = tracer.polish(*p, 80);
            if r.is_none() {
                log::debug!("seed {p:?} dropped at t = {t}");
            }
            r
        })
        .filter(|p| region.contains(p))
        .collect();
    polished.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let cover = 3.0 * opts.step;
    let mut lines: Vec<(Vec<Point>, [End; 2])> = Vec::new();
    for p in polished {
        if lines.iter().any(|(l, _)| polyline_distance(l, &[p]) < cover) {
            continue;
        }
        lines.push(tracer.branch(&p));
    }
    assemble(t, lines, opts.step)
}

fn seeds_spacing(region: &Region, n: usize) -> f64 {
    region
        .bounds
        .iter()
        .map(|(lo, hi)| (hi - lo) / (n - 1) as f64)
        .fold(0.0, f64::max)
}

fn assemble(t: f64, lines: Vec<(Vec<Point>, [End; 2])>, step: f64) -> Slice {
    let n = lines.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut nodes = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let (li, lj) = (&lines[i].0, &lines[j].0);
            let stalled_near = |l: &(Vec<Point>, [End; 2]), other: &[Point]| {
                [0usize, 1].iter().any(|&k| {
                    let end = if k == 0 { l.0[0] } else { *l.0.last().expect("nonempty") };
                    l.1[k] == End::Stalled && polyline_distance(&[end], other) < 3.0 * step
                })
            };
            let meets = polyline_distance(li, lj) < 1e-6
                || stalled_near(&lines[i], lj)
                || stalled_near(&lines[j], li);
            if meets {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
                nodes[i] += 1;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    let components = groups
        .into_iter()
        .map(|(_, idx)| {
            let polylines: Vec<Vec<Point>> = idx.iter().map(|&i| lines[i].0.clone()).collect();
            let ends: Vec<End> = idx.iter().flat_map(|&i| lines[i].1).collect();
            let diameter = polylines
                .iter()
                .flatten()
                .map(|p| dist(p, &polylines[0][0]))
                .fold(0.0, f64::max);
            let node_count: usize = idx.iter().map(|&i| nodes[i]).sum();
            let mut endpoint_labels: Vec<String> = idx
                .iter()
                .flat_map(|&i| {
                    let (l, e) = &lines[i];
                    let mut v = Vec::new();
                    if e[0] == End::Boundary {
                        v.push(endpoint_label(&l[0]));
                    }
                    if e[1] == End::Boundary {
                        v.push(endpoint_label(l.last().expect("nonempty")));
                    }
                    v
                })
                .collect();
            endpoint_labels.sort();
            let kind = if diameter < 1e-4 {
                ComponentKind::Point
            } else if ends.contains(&End::Boundary) {
                ComponentKind::Arc
            } else {
                ComponentKind::Closed
            };
            Component {
                kind,
                polylines,
                nodes: if kind == ComponentKind::Point { 0 } else { node_count },
                endpoint_labels: if kind == ComponentKind::Point {
                    Vec::new()
                } else {
                    endpoint_labels
                },
            }
        })
        .collect::<Vec<_>>();
    let mut components = components;
    components.sort_by(|a, b| {
        (a.kind, &a.endpoint_labels)
            .cmp(&(b.kind, &b.endpoint_labels))
            .then(a.polylines[0][0].partial_cmp(&b.polylines[0][0]).expect("finite"))
    });
    Slice { t, components }
}

/// Zero sets at each t of `t_grid`, then events between samples.
pub fn trace(path: &FormPath, region: &Region, t_grid: &[f64], opts: &TraceOptions) -> Result<ZeroSetTrace> {
    let slices: Vec<Slice> = t_grid
        .par_iter()
        .map(|&t| zero_slice(&path.compiled(t), t, region, opts))
        .collect();
    let mut tr = ZeroSetTrace {
        slices,
        events: Vec::new(),
    };
    tr.events = detect_events(&tr, path, region, opts)?;
    Ok(tr)
}

/// Bisect every interval where the slice signature changes, then locate
/// and classify the critical point.
pub fn detect_events(
    trace: &ZeroSetTrace,
    path: &FormPath,
    region: &Region,
    opts: &TraceOptions,
) -> Result<Vec<Event>> {
    let mut events: Vec<Event> = Vec::new();
    for w in trace.slices.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.signature() == b.signature() {
            continue;
        }
        let left = a.signature();
        let (mut lo, mut hi) = (a.t, b.t);
        let mut hi_slice = b.clone();
        let mut lo_slice = a.clone();
        while hi - lo > opts.event_tol {
            let mid = 0.5 * (lo + hi);
            let seeds: Vec<Point> = lo_slice
                .points()
                .chain(hi_slice.points())
                .step_by(2)
                .copied()
                .collect();
            let s = slice_from_seeds(&path.compiled(mid), mid, region, opts, &seeds);
            if s.signature() == left {
                lo = mid;
                lo_slice = s;
            } else {
                hi = mid;
                hi_slice = s;
            }
        }
        let e = classify(path, &lo_slice, &hi_slice, (lo, hi))?;
        if !events.iter().any(|x| (x.t - e.t).abs() < 1e-4 && dist(&x.point, &e.point) < 1e-4) {
            events.push(e);
        }
    }
    Ok(events)
}

/// Smallest third singular value of the spatial Jacobian along a slice.
fn most_degenerate(path: &FormPath, slices: [&Slice; 2]) -> Option<(Point, f64)> {
    let mut best: Option<(Point, f64, f64)> = None;
    for s in slices {
        let w = path.compiled(s.t);
        for p in s.points() {
            let j = jac_matrix(&w.jacobian(p));
            let sv = j.singular_values();
            let mut v: Vec<f64> = sv.iter().copied().collect();
            v.sort_by(|a, b| b.total_cmp(a));
            let s3 = v.get(2).copied().unwrap_or(0.0);
            if best.map_or(true, |b| s3 < b.2) {
                best = Some((*p, s.t, s3));
            }
        }
    }
    best.map(|(p, t, _)| (p, t))
}

const T_HESS_STEP: f64 = 1e-4;

/// Values, Jacobian and Hessians of (x, t) -> ω_t(x) in five variables.
fn jet5(path: &FormPath, p: &Point, t: f64) -> (Vec<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let h = T_HESS_STEP;
    let w0 = path.compiled(t);
    let (wp, wm) = (path.compiled(t + h), path.compiled(t - h));
    let f0 = w0.values(p);
    let (fp, fm) = (wp.values(p), wm.values(p));
    let j0 = w0.jacobian(p);
    let (jp, jm) = (wp.jacobian(p), wm.jacobian(p));
    let hs = w0.hessians(p);
    let m = f0.len();
    let jac = DMatrix::from_fn(m, 5, |r, c| {
        if c < 4 {
            j0[r][c]
        } else {
            (fp[r] - fm[r]) / (2.0 * h)
        }
    });
    let hess = (0..m)
        .map(|r| {
            DMatrix::from_fn(5, 5, |a, b| match (a < 4, b < 4) {
                (true, true) => hs[r][a][b],
                (true, false) => (jp[r][a] - jm[r][a]) / (2.0 * h),
                (false, true) => (jp[r][b] - jm[r][b]) / (2.0 * h),
                (false, false) => (fp[r] - 2.0 * f0[r] + fm[r]) / (h * h),
            })
        })
        .collect();
    (f0, jac, hess)
}

fn classify(path: &FormPath, lo: &Slice, hi: &Slice, bracket: (f64, f64)) -> Result<Event> {
    let (p0, t0) = most_degenerate(path, [lo, hi])
        .ok_or_else(|| Error::FamilyInvalid("event without zeros on either side".into()))?;
    let (_, j0, _) = jet5(path, &p0, t0);
    let svd = j0.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let proj = DMatrix::from_fn(3, j0.nrows(), |k, r| u[(r, order[k])]);

    let mut y = DVector::from_fn(5, |i, _| if i < 4 { p0[i] } else { t0 });
    let et = DVector::from_fn(5, |i, _| if i == 4 { 1.0 } else { 0.0 });
    let jg0 = &proj * &j0;
    let mut lam = jg0
        .transpose()
        .svd(true, true)
        .solve(&et, 1e-12)
        .map_err(|e| Error::FamilyInvalid(format!("event refinement: {e}")))?;
    let mut hg: Vec<DMatrix<f64>> = Vec::new();
    let mut jg = jg0;
    for _ in 0..40 {
        let p: Point = std::array::from_fn(|i| y[i]);
        let (f, j, h) = jet5(path, &p, y[4]);
        let g = &proj * DVector::from_column_slice(&f);
        jg = &proj * &j;
        hg = (0..3)
            .map(|k| {
                h.iter()
                    .enumerate()
                    .fold(DMatrix::zeros(5, 5), |acc, (r, hr)| acc + hr * proj[(k, r)])
            })
            .collect();
        let lag = hg
            .iter()
            .enumerate()
            .fold(DMatrix::zeros(5, 5), |acc, (k, hk)| acc - hk * lam[k]);
        let mut res = DVector::zeros(8);
        res.rows_mut(0, 3).copy_from(&g);
        res.rows_mut(3, 5).copy_from(&(&et - jg.transpose() * &lam));
        if res.norm() < 1e-13 {
            break;
        }
        let mut m = DMatrix::zeros(8, 8);
        m.view_mut((0, 0), (3, 5)).copy_from(&jg);
        m.view_mut((3, 0), (5, 5)).copy_from(&lag);
        m.view_mut((3, 5), (5, 3)).copy_from(&(-jg.transpose()));
        let step = m
            .svd(true, true)
            .solve(&(-res), 1e-14)
            .map_err(|e| Error::FamilyInvalid(format!("event refinement: {e}")))?;
        y += step.rows(0, 5);
        lam += step.rows(5, 3);
    }
    let point: Point = std::array::from_fn(|i| y[i]);
    let t = y[4];
    let w = path.compiled(t);
    let spatial = gradient_rank(&w, &point, None)?;
    let full = gradient_rank(&w, &point, Some((path, t)))?;
    if spatial.rank < 2 {
        return Err(Error::FamilyInvalid(format!(
            "model violated: spatial gradient rank {} at event t = {t}",
            spatial.rank
        )));
    }
    // Hessian of t restricted to the zero surface.
    let ker = kernel_basis(&jg);
    let lag = hg
        .iter()
        .enumerate()
        .fold(DMatrix::zeros(5, 5), |acc, (k, hk)| acc - hk * lam[k]);
    let reduced = ker.transpose() * lag * &ker;
    let eig = SymmetricEigen::new(reduced);
    let index = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
    let kind = match index {
        0 => EventKind::Birth,
        1 => EventKind::Surgery,
        _ => EventKind::Death,
    };
    Ok(Event {
        t,
        point,
        kind,
        index,
        spatial_rank: spatial.rank,
        rank_with_time: full.rank,
        bracket,
    })
}

/// Orthonormal basis (columns) of the kernel of a full-rank 3x5 matrix.
fn kernel_basis(jg: &DMatrix<f64>) -> DMatrix<f64> {
    let jtj = jg.transpose() * jg;
    let eig = SymmetricEigen::new(jtj);
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    DMatrix::from_fn(5, 2, |r, c| eig.eigenvectors[(r, order[c])])
}

/// Uniform grid of n + 1 values on [lo, hi].
pub fn t_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}
