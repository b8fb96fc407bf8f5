//! Marching-squares contours of functions on a square, with zero-set topology.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::handle::HandleFamily;

/// Vertex values below this magnitude are snapped to zero.
pub const SNAP_TOL: f64 = 1e-12;

pub type P2 = [f64; 2];

/// Samples of a function on a uniform (cells + 1)^2 vertex grid over [lo, hi]^2.
#[derive(Clone, Debug)]
pub struct Grid {
    pub cells: usize,
    pub lo: f64,
    pub hi: f64,
    values: Vec<f64>,
}

impl Grid {
    pub fn sample<F: Fn(f64, f64) -> f64>(f: F, cells: usize, lo: f64, hi: f64) -> Self {
        let n = cells + 1;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f(Self::coord(lo, hi, cells, i), Self::coord(lo, hi, cells, j)));
            }
        }
        Self {
            cells,
            lo,
            hi,
            values,
        }
    }

    fn coord(lo: f64, hi: f64, cells: usize, i: usize) -> f64 {
        lo + (hi - lo) * i as f64 / cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        Self::coord(self.lo, self.hi, self.cells, i)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.cells + 1) + i]
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }
}

/// Line segments of the level set {f = level}. `center` resolves saddle cells.
pub fn marching_squares<F: Fn(f64, f64) -> f64>(grid: &Grid, level: f64, center: F) -> Vec<[P2; 2]> {
    let mut segs = Vec::new();
    let val = |i: usize, j: usize| {
        let v = grid.value(i, j) - level;
        if v.abs() < SNAP_TOL {
            0.0
        } else {
            v
        }
    };
    for j in 0..grid.cells {
        for i in 0..grid.cells {
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: [f64; 4] = std::array::from_fn(|k| val(c[k].0, c[k].1));
            let pos: [bool; 4] = std::array::from_fn(|k| v[k] >= 0.0);
            let mut cross: Vec<(usize, P2)> = Vec::new();
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if pos[a] != pos[b] {
                    let s = v[a] / (v[a] - v[b]);
                    let pa = [grid.x(c[a].0), grid.x(c[a].1)];
                    let pb = [grid.x(c[b].0), grid.x(c[b].1)];
                    cross.push((e, [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]));
                }
            }
            match cross.len() {
                2 => segs.push([cross[0].1, cross[1].1]),
                4 => {
                    let cx = 0.5 * (grid.x(i) + grid.x(i + 1));
                    let cy = 0.5 * (grid.x(j) + grid.x(j + 1));
                    let center_pos = center(cx, cy) - level >= 0.0;
                    // Edges e0..e3; pair so that the center's sign region stays connected.
                    if center_pos == pos[0] {
                        segs.push([cross[0].1, cross[1].1]);
                        segs.push([cross[2].1, cross[3].1]);
                    } else {
                        segs.push([cross[3].1, cross[0].1]);
                        segs.push([cross[1].1, cross[2].1]);
                    }
                }
                _ => {}
            }
        }
    }
    segs.retain(|s| s[0] != s[1]);
    segs
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentInfo {
    pub closed: bool,
    /// Points on the boundary of the square, sorted.
    pub endpoints: Vec<P2>,
    /// Quadrant labels of the endpoints (e.g. "NE"), sorted.
    pub endpoint_labels: Vec<String>,
    pub nodes: Vec<P2>,
    pub segments: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroTopology {
    pub components: Vec<ComponentInfo>,
}

impl ZeroTopology {
    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn node_count(&self) -> usize {
        self.components.iter().map(|c| c.nodes.len()).sum()
    }

    /// Endpoint label groups, one per component, sorted.
    pub fn pairing(&self) -> Vec<Vec<String>> {
        let mut v: Vec<Vec<String>> = self
            .components
            .iter()
            .map(|c| c.endpoint_labels.clone())
            .collect();
        v.sort();
        v
    }

    /// Summary such as "2", "1-with-node".
    pub fn describe(&self) -> String {
        if self.node_count() > 0 {
            format!("{}-with-node", self.count())
        } else {
            self.count().to_string()
        }
    }
}

fn quadrant(p: &P2) -> String {
    let ns = if p[1] >= 0.0 { "N" } else { "S" };
    let ew = if p[0] >= 0.0 { "E" } else { "W" };
    format!("{ns}{ew}")
}

/// Connected components of a segment soup, joined where endpoints coincide.
pub fn topology(segs: &[[P2; 2]], lo: f64, hi: f64, step: f64) -> ZeroTopology {
    let key = |p: &P2| ((p[0] / step * 1e6).round() as i64, (p[1] / step * 1e6).round() as i64);
    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut pts: Vec<P2> = Vec::new();
    let mut degree: Vec<usize> = Vec::new();
    let mut edges = Vec::with_capacity(segs.len());
    for s in segs {
        let mut e = [0usize; 2];
        for (k, p) in s.iter().enumerate() {
            let id = *ids.entry(key(p)).or_insert_with(|| {
                pts.push(*p);
                degree.push(0);
                pts.len() - 1
            });
            degree[id] += 1;
            e[k] = id;
        }
        edges.push(e);
    }
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for e in &edges {
        let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: HashMap<usize, ComponentInfo> = HashMap::new();
    let on_boundary = |p: &P2| {
        let tol = 1e-9 * (hi - lo);
        p.iter().any(|&c| (c - lo).abs() < tol || (c - hi).abs() < tol)
    };
    for (id, p) in pts.iter().enumerate() {
        let r = find(&mut parent, id);
        let g = groups.entry(r).or_insert_with(|| ComponentInfo {
            closed: true,
            endpoints: Vec::new(),
            endpoint_labels: Vec::new(),
            nodes: Vec::new(),
            segments: 0,
        });
        if degree[id] == 1 {
            g.closed = false;
            if on_boundary(p) {
                g.endpoints.push(*p);
            }
        } else if degree[id] > 2 {
            g.nodes.push(*p);
        }
    }
    for e in &edges {
        let r = find(&mut parent, e[0]);
        groups.get_mut(&r).expect("component").segments += 1;
    }
    let mut components: Vec<ComponentInfo> = groups.into_values().collect();
    for c in &mut components {
        c.endpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        c.endpoint_labels = c.endpoints.iter().map(quadrant).collect();
        c.endpoint_labels.sort();
    }
    components.sort_by(|a, b| {
        a.endpoints
            .first()
            .partial_cmp(&b.endpoints.first())
            .expect("finite")
    });
    ZeroTopology { components }
}

/// One panel of the handle-family figure.
#[derive(Clone, Debug, Serialize)]
pub struct Panel {
    pub t: f64,
    pub topology: ZeroTopology,
    #[serde(skip)]
    pub zero_segments: Vec<[P2; 2]>,
    #[serde(skip)]
    pub level_segments: Vec<(f64, Vec<[P2; 2]>)>,
}

/// Levels drawn as thin contours.
pub const LEVELS: [f64; 8] = [-0.2, -0.1, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6];

pub fn panel(fam: &HandleFamily, t: f64, cells: usize) -> Panel {
    let f = |a: f64, b: f64| fam.f_t(t, a, b);
    let grid = Grid::sample(f, cells, -2.0, 2.0);
    let zero = marching_squares(&grid, 0.0, f);
    let topo = topology(&zero, -2.0, 2.0, grid.step());
    let level_segments = LEVELS
        .iter()
        .map(|&l| (l, marching_squares(&grid, l, f)))
        .collect();
    Panel {
        t,
        topology: topo,
        zero_segments: zero,
        level_segments,
    }
}

/// Parameter values of the five standard panels.
pub const PANEL_TIMES: [f64; 5] = [-1.0, -0.5, 0.5, 0.75, 1.0];

pub fn figure(fam: &HandleFamily, cells: usize) -> Vec<Panel> {
    PANEL_TIMES.iter().map(|&t| panel(fam, t, cells)).collect()
}

/// Grid samples (x1, x3, f) as CSV text.
pub fn csv(fam: &HandleFamily, t: f64, cells: usize) -> String {
    let mut s = String::from("x1,x3,f\n");
    let grid = Grid::sample(|a, b| fam.f_t(t, a, b), cells, -2.0, 2.0);
    for j in 0..=cells {
        for i in 0..=cells {
            let _ = writeln!(s, "{},{},{}", fmt_num(grid.x(i)), fmt_num(grid.x(j)), fmt_num(grid.value(i, j)));
        }
    }
    s
}

fn fmt_num(x: f64) -> String {
    let r = format!("{:.12e}", x);
    r.parse::<f64>().map(|v| v.to_string()).unwrap_or(r)
}

/// SVG of one panel: thin level contours, the zero set at triple stroke, and
/// the square [-L, L]^2 outside which the family is constant.
pub fn svg(fam: &HandleFamily, p: &Panel) -> String {
    let size = 400.0;
    let map = |q: &P2| ((q[0] + 2.0) / 4.0 * size, (2.0 - q[1]) / 4.0 * size);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<title>f_t at t = {}</title>"#, p.t);
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let l = fam.half_width();
    let (x0, y0) = map(&[-l, l]);
    let w = 2.0 * l / 4.0 * size;
    let _ = writeln!(
        s,
        r##"<rect x="{x0:.3}" y="{y0:.3}" width="{w:.3}" height="{w:.3}" fill="none" stroke="#888" stroke-dasharray="4 3" stroke-width="0.8"/>"##
    );
    let stroke = 1.0;
    for (level, segs) in &p.level_segments {
        let color = if *level < 0.0 { "#3465a4" } else { "#cc0000" };
        let _ = write!(s, r#"<path fill="none" stroke="{color}" stroke-width="{stroke}" d=""#);
        for seg in segs {
            let (a, b) = (map(&seg[0]), map(&seg[1]));
            let _ = write!(s, "M{:.3} {:.3}L{:.3} {:.3}", a.0, a.1, b.0, b.1);
        }
        let _ = writeln!(s, r#""/>"#);
    }
    let _ = write!(s, r#"<path fill="none" stroke="black" stroke-width="{}" d=""#, 3.0 * stroke);
    for seg in &p.zero_segments {
        let (a, b) = (map(&seg[0]), map(&seg[1]));
        let _ = write!(s, "M{:.3} {:.3}L{:.3} {:.3}", a.0, a.1, b.0, b.1);
    }
    let _ = writeln!(s, r#""/>"#);
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_one_closed_component() {
        let f = |x: f64, y: f64| x * x + y * y - 1.0;
        let g = Grid::sample(f, 64, -2.0, 2.0);
        let topo = topology(&marching_squares(&g, 0.0, f), -2.0, 2.0, g.step());
        assert_eq!(topo.count(), 1);
        assert!(topo.components[0].closed);
        assert_eq!(topo.node_count(), 0);
    }

    #[test]
    fn lines_reach_the_boundary() {
        let f = |_: f64, y: f64| 0.25 * (y * y - 1.0);
        let g = Grid::sample(f, 64, -2.0, 2.0);
        let topo = topology(&marching_squares(&g, 0.0, f), -2.0, 2.0, g.step());
        assert_eq!(topo.count(), 2);
        assert_eq!(
            topo.pairing(),
            vec![vec!["NE".to_string(), "NW".to_string()], vec!["SE".to_string(), "SW".to_string()]]
        );
    }

    #[test]
    fn crossing_lines_make_a_node() {
        let f = |x: f64, y: f64| x * x - 2.0 * y * y;
        let g = Grid::sample(f, 64, -2.0, 2.0);
        let topo = topology(&marching_squares(&g, 0.0, f), -2.0, 2.0, g.step());
        assert_eq!(topo.describe(), "1-with-node");
    }
}
