//! Quadrature over the sphere split into Voronoi cells around the ends.
//!
//! Each cell is integrated in the chart w centered at its site, where the
//! site sits at w = 0 and the cell boundary is a union of circular arcs with
//! closed-form radius rho(theta). Angles are split at Voronoi vertices and
//! integrated by Gauss-Legendre; radii use geometric Gauss-Legendre panels.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{point_from_sphere, sphere_point, Mobius};
use crate::rational::Point;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes per angular arc; full circles use four times this.
    pub angular_nodes: usize,
    /// Gauss-Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Ratio between consecutive radial panel boundaries.
    pub panel_ratio: f64,
    /// Radial panels used between 0 and the cell boundary when nothing is excised.
    pub core_panels: usize,
    /// Relative tolerance for refinement checks.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            angular_nodes: 24,
            radial_nodes: 16,
            panel_ratio: 2.0,
            core_panels: 4,
            tolerance: 1e-8,
        }
    }
}

impl QuadratureSpec {
    /// A finer rule for convergence checks.
    pub fn refined(&self) -> Self {
        Self {
            angular_nodes: self.angular_nodes * 3 / 2 + 2,
            radial_nodes: self.radial_nodes * 3 / 2 + 2,
            core_panels: self.core_panels + 2,
            ..*self
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    x.iter().zip(&w).map(|(xi, wi)| (m + h * xi, h * wi)).collect()
}

/// A quadrature node in a cell chart; the weight includes r dr dtheta.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub cell: usize,
    pub w: C64,
    pub weight: f64,
}

/// One Voronoi cell with its centered chart.
#[derive(Debug, Clone)]
pub struct Cell {
    pub site: Point,
    pub chart: Mobius,
    /// Index of the end at the site, if any.
    pub end: Option<usize>,
    /// Other sites in this chart's sphere coordinates.
    others: Vec<[f64; 3]>,
    /// Angles of Voronoi vertices in this chart, sorted.
    kinks: Vec<f64>,
}

impl Cell {
    /// Radius of the cell boundary in direction theta.
    pub fn rho(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.others
            .iter()
            .map(|k| {
                let cc = k[0] * c + k[1] * s;
                let e = 1.0 + k[2];
                (-cc + (cc * cc + e * e).sqrt()) / e
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest boundary radius, sampled densely.
    pub fn min_rho(&self) -> f64 {
        let n = 720;
        let mut m = f64::INFINITY;
        for k in 0..n {
            m = m.min(self.rho(std::f64::consts::TAU * k as f64 / n as f64));
        }
        for &t in &self.kinks {
            m = m.min(self.rho(t));
        }
        m
    }

    /// Angular rule over the full circle, respecting kinks.
    fn angles(&self, spec: &QuadratureSpec) -> Vec<(f64, f64)> {
        if self.kinks.is_empty() {
            let n = 4 * spec.angular_nodes;
            let h = std::f64::consts::TAU / n as f64;
            return (0..n).map(|k| (k as f64 * h, h)).collect();
        }
        let mut out = Vec::new();
        let k = self.kinks.len();
        for i in 0..k {
            let a = self.kinks[i];
            let mut b = self.kinks[(i + 1) % k];
            if b <= a {
                b += std::f64::consts::TAU;
            }
            out.extend(gl_interval(spec.angular_nodes, a, b));
        }
        out
    }

    /// Nodes covering the cell minus the disk |w| < inner.
    pub fn nodes(&self, id: usize, inner: f64, spec: &QuadratureSpec) -> Vec<Node> {
        let mut out = Vec::new();
        for (theta, wt) in self.angles(spec) {
            let outer = self.rho(theta);
            let dir = C64::from_polar(1.0, theta);
            let mut edges = Vec::new();
            if inner <= 0.0 {
                let p = spec.core_panels.max(1);
                for i in 0..=p {
                    edges.push(outer * i as f64 / p as f64);
                }
            } else {
                assert!(inner < outer, "excision radius exceeds cell");
                let mut r = inner;
                edges.push(r);
                while r * spec.panel_ratio < outer {
                    r *= spec.panel_ratio;
                    edges.push(r);
                }
                if outer - *edges.last().unwrap() < 0.25 * (*edges.last().unwrap()) && edges.len() > 1 {
                    edges.pop();
                }
                edges.push(outer);
            }
            for pair in edges.windows(2) {
                for (r, wr) in gl_interval(spec.radial_nodes, pair[0], pair[1]) {
                    out.push(Node {
                        cell: id,
                        w: dir * r,
                        weight: wt * wr * r,
                    });
                }
            }
        }
        out
    }

    /// Nodes on the annulus r_in < |w| < r_out (inside the cell).
    pub fn annulus_nodes(&self, id: usize, r_in: f64, r_out: f64, spec: &QuadratureSpec) -> Vec<Node> {
        let n = 4 * spec.angular_nodes;
        let h = std::f64::consts::TAU / n as f64;
        let mut edges = vec![r_in];
        let mut r = r_in;
        while r * spec.panel_ratio < r_out * (1.0 - 1e-12) {
            r *= spec.panel_ratio;
            edges.push(r);
        }
        edges.push(r_out);
        let mut out = Vec::new();
        for k in 0..n {
            let dir = C64::from_polar(1.0, k as f64 * h);
            for pair in edges.windows(2) {
                for (r, wr) in gl_interval(spec.radial_nodes, pair[0], pair[1]) {
                    out.push(Node {
                        cell: id,
                        w: dir * r,
                        weight: h * wr * r,
                    });
                }
            }
        }
        out
    }
}

/// Voronoi decomposition of the sphere by a set of sites.
#[derive(Debug, Clone)]
pub struct CellDecomposition {
    pub cells: Vec<Cell>,
}

impl CellDecomposition {
    /// Cells around the given ends; a single end gets its antipode as an extra site.
    pub fn new(ends: &[Point]) -> Self {
        let mut sites: Vec<(Point, Option<usize>)> =
            ends.iter().enumerate().map(|(i, &p)| (p, Some(i))).collect();
        if sites.len() == 1 {
            let s = sphere_point(ends[0]);
            sites.push((point_from_sphere([-s[0], -s[1], -s[2]]), None));
        }
        if sites.is_empty() {
            sites.push((Point::Finite(0.0.into()), None));
            sites.push((Point::Infinity, None));
        }
        let q: Vec<[f64; 3]> = sites.iter().map(|(p, _)| sphere_point(*p)).collect();

        // Voronoi vertices: points equidistant from three sites and not closer to any other.
        let mut vertices: Vec<([f64; 3], Vec<usize>)> = Vec::new();
        let n = q.len();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let u = sub(q[i], q[j]);
                    let v = sub(q[i], q[k]);
                    let c = cross(u, v);
                    let norm = dot(c, c).sqrt();
                    if norm < 1e-12 {
                        continue;
                    }
                    for sign in [1.0, -1.0] {
                        let x = [sign * c[0] / norm, sign * c[1] / norm, sign * c[2] / norm];
                        let di = dot(x, q[i]);
                        if (0..n).all(|l| dot(x, q[l]) <= di + 1e-12) {
                            vertices.push((x, vec![i, j, k]));
                        }
                    }
                }
            }
        }

        let cells = sites
            .iter()
            .enumerate()
            .map(|(i, &(site, end))| {
                let chart = Mobius::centered_at(site);
                let inv = chart.inverse();
                let others = (0..n)
                    .filter(|&l| l != i)
                    .map(|l| sphere_point(inv.apply(sites[l].0)))
                    .collect();
                let mut kinks: Vec<f64> = vertices
                    .iter()
                    .filter(|(_, s)| s.contains(&i))
                    .filter_map(|(x, _)| inv.apply(point_from_sphere(*x)).finite())
                    .map(|w| w.arg().rem_euclid(std::f64::consts::TAU))
                    .collect();
                kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
                kinks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                Cell {
                    site,
                    chart,
                    end,
                    others,
                    kinks,
                }
            })
            .collect();
        Self { cells }
    }

    /// All nodes, excising |w| < inner[end] in end cells.
    pub fn nodes(&self, inner: &[f64], spec: &QuadratureSpec) -> Vec<Node> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(id, c)| {
                let r = c.end.map_or(0.0, |e| inner[e]);
                c.nodes(id, r, spec)
            })
            .collect()
    }

    /// Integrand evaluated in parallel, summed in node order.
    pub fn integrate<F>(&self, nodes: &[Node], f: F) -> f64
    where
        F: Fn(&Node) -> f64 + Sync,
    {
        let v: Vec<f64> = nodes.par_iter().map(|n| n.weight * f(n)).collect();
        v.iter().sum()
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Area density of the round sphere in any centered chart: 4/(1+|w|^2)^2.
    fn area(dec: &CellDecomposition, spec: &QuadratureSpec) -> f64 {
        let nodes = dec.nodes(&[0.0; 8], spec);
        dec.integrate(&nodes, |n| 4.0 / (1.0 + n.w.norm_sqr()).powi(2))
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-15);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_site_covers_sphere() {
        let dec = CellDecomposition::new(&[Point::Infinity]);
        assert_eq!(dec.cells.len(), 2);
        let a = area(&dec, &QuadratureSpec::default());
        assert!((a - 4.0 * std::f64::consts::PI).abs() < 1e-12, "{a}");
    }

    #[test]
    fn tetrahedral_sites_cover_sphere() {
        let s = 1.0 / 3f64.sqrt();
        let verts = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let pts: Vec<Point> = verts.iter().map(|v| point_from_sphere(*v)).collect();
        let dec = CellDecomposition::new(&pts);
        for c in &dec.cells {
            assert_eq!(c.kinks.len(), 3);
        }
        let a = area(&dec, &QuadratureSpec::default());
        assert!((a - 4.0 * std::f64::consts::PI).abs() < 1e-11, "{a}");
    }

    #[test]
    fn irregular_sites_cover_sphere() {
        let pts = [
            Point::Finite(C64::new(0.3, -0.2)),
            Point::Finite(C64::new(-1.1, 0.7)),
            Point::Finite(C64::new(2.0, 1.5)),
            Point::Infinity,
            Point::Finite(C64::new(0.1, 1.9)),
        ];
        let dec = CellDecomposition::new(&pts);
        let a = area(&dec, &QuadratureSpec::default());
        assert!((a - 4.0 * std::f64::consts::PI).abs() < 1e-10, "{a}");
        // Excised disks plus their complement give the full area.
        let inner = vec![0.05; 5];
        let spec = QuadratureSpec::default();
        let nodes = dec.nodes(&inner, &spec);
        let outer = dec.integrate(&nodes, |n| 4.0 / (1.0 + n.w.norm_sqr()).powi(2));
        let disk: f64 = (0..5)
            .map(|_| {
                let r2 = 0.05f64 * 0.05;
                4.0 * std::f64::consts::PI * r2 / (1.0 + r2)
            })
            .sum();
        assert!((outer + disk - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn annulus_area() {
        let dec = CellDecomposition::new(&[Point::Infinity]);
        let nodes = dec.cells[0].annulus_nodes(0, 0.1, 0.4, &QuadratureSpec::default());
        let a: f64 = nodes.iter().map(|n| n.weight).sum();
        let exact = std::f64::consts::PI * (0.16 - 0.01);
        assert!((a - exact).abs() < 1e-13);
    }
}
