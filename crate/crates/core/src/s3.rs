//! Jacobi spectra of closed-form minimal surfaces in S^3 and the index count
//! over eigenvalues strictly inside (0, 2).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::Mobius;
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum S3Kind {
    GreatSphere,
    CliffordTorus,
}

/// A minimal surface in the unit S^3 with Jacobi operator L = Delta + |II|^2 + Ric(n, n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S3MinimalSurface {
    pub kind: S3Kind,
    /// |II|^2, constant on both catalog surfaces.
    pub second_fundamental_sqr: f64,
    /// Ric(n, n) of the unit S^3.
    pub ricci: f64,
}

impl S3MinimalSurface {
    pub fn new(kind: S3Kind) -> Self {
        let second_fundamental_sqr = match kind {
            S3Kind::GreatSphere => 0.0,
            S3Kind::CliffordTorus => 2.0,
        };
        Self {
            kind,
            second_fundamental_sqr,
            ricci: 2.0,
        }
    }

    pub fn great_sphere() -> Self {
        Self::new(S3Kind::GreatSphere)
    }

    /// The product of two circles of radius 1/sqrt(2).
    pub fn clifford_torus() -> Self {
        Self::new(S3Kind::CliffordTorus)
    }

    /// Potential |II|^2 + Ric(n, n).
    pub fn potential(&self) -> f64 {
        self.second_fundamental_sqr + self.ricci
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            S3Kind::GreatSphere => 4.0 * PI,
            S3Kind::CliffordTorus => 2.0 * PI * PI,
        }
    }

    /// Intrinsic curvature from the Gauss equation: K = 1 - |II|^2 / 2.
    pub fn gauss_curvature(&self) -> f64 {
        1.0 - 0.5 * self.second_fundamental_sqr
    }

    pub fn euler_characteristic(&self) -> i32 {
        match self.kind {
            S3Kind::GreatSphere => 2,
            S3Kind::CliffordTorus => 0,
        }
    }

    /// Willmore energy int (|H|^2 + 1) dA, which is the area for a minimal surface.
    pub fn willmore_energy(&self) -> f64 {
        self.area()
    }

    /// Laplacian eigenvalues (nonpositive) with multiplicities up to the cutoff.
    ///
    /// The great sphere uses degrees k <= cutoff. The Clifford torus is the flat
    /// torus R^2 / (sqrt(2) pi Z)^2 with eigenvalues -2 (k^2 + l^2); all lattice
    /// modes with k^2 + l^2 <= cutoff are included.
    pub fn laplace_spectrum(&self, cutoff: u32) -> Vec<(f64, usize)> {
        match self.kind {
            S3Kind::GreatSphere => (0..=cutoff as u64)
                .map(|k| (-((k * (k + 1)) as f64), 2 * k as usize + 1))
                .collect(),
            S3Kind::CliffordTorus => {
                let n = cutoff as i64;
                let b = (n as f64).sqrt().ceil() as i64;
                let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                for k in -b..=b {
                    for l in -b..=b {
                        let s = k * k + l * l;
                        if s <= n {
                            *counts.entry(s).or_default() += 1;
                        }
                    }
                }
                counts.into_iter().map(|(s, m)| (-2.0 * s as f64, m)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenLine {
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Eigenvalues of L, in decreasing order.
pub fn jacobi_spectrum(surface: &S3MinimalSurface, cutoff: u32) -> Vec<EigenLine> {
    surface
        .laplace_spectrum(cutoff)
        .into_iter()
        .map(|(mu, m)| EigenLine {
            lambda: mu + surface.potential(),
            multiplicity: m,
        })
        .collect()
}

/// Sum of multiplicities of eigenvalues strictly inside (0, 2).
pub fn index_from_spectrum(lines: &[EigenLine]) -> usize {
    lines
        .iter()
        .filter(|l| l.lambda > 0.0 && l.lambda < 2.0)
        .map(|l| l.multiplicity)
        .sum()
}

pub fn willmore_index_s3(surface: &S3MinimalSurface, cutoff: u32) -> usize {
    index_from_spectrum(&jacobi_spectrum(surface, cutoff))
}

/// Unit normal in R^4 orthogonal to the three given vectors.
fn normal4(u: &[Jet; 4], v: &[Jet; 4], w: &[Jet; 4]) -> [Jet; 4] {
    let det3 = |c: [usize; 3]| {
        let m = |r: &[Jet; 4], i: usize| r[c[i]];
        m(u, 0) * (m(v, 1) * m(w, 2) - m(v, 2) * m(w, 1)) - m(u, 1) * (m(v, 0) * m(w, 2) - m(v, 2) * m(w, 0))
            + m(u, 2) * (m(v, 0) * m(w, 1) - m(v, 1) * m(w, 0))
    };
    let n = [
        det3([1, 2, 3]),
        det3([0, 2, 3]).scale(-1.0),
        det3([0, 1, 3]),
        det3([0, 1, 2]).scale(-1.0),
    ];
    let len = n.iter().fold(Jet::zero(n[0].order()), |s, c| s + *c * *c).sqrt().recip();
    n.map(|c| c * len)
}

/// Max relative error of L(a.n) = 2 a.n on the great sphere {x_4 = 0},
/// evaluated with jets in the stereographic chart on an r x theta grid.
pub fn great_sphere_jacobi_residual(a: [f64; 4], radii: &[f64], angles: usize) -> f64 {
    let chart = Mobius::identity();
    let surface = S3MinimalSurface::great_sphere();
    let mut worst: f64 = 0.0;
    for &r in radii {
        for k in 0..angles {
            let w = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / angles as f64);
            let s = chart.sphere_jets(w, 3);
            let x = [s[0], s[1], s[2], Jet::zero(3)];
            let dx: [Jet; 4] = std::array::from_fn(|i| x[i].dx());
            let dy: [Jet; 4] = std::array::from_fn(|i| x[i].dy());
            let tr = |j: [Jet; 4]| j.map(|c| c.truncate(2));
            let n = normal4(&tr(x), &dx, &dy);
            let u = (0..4).fold(Jet::zero(2), |acc, i| acc + n[i].scale(a[i]));
            let e2l = (0..3)
                .map(|i| {
                    let g = s[i].gradient();
                    g[0] * g[0]
                })
                .sum::<f64>();
            let lu = u.laplacian() / e2l + surface.potential() * u.value();
            let target = 2.0 * u.value();
            worst = worst.max((lu - target).abs() / target.abs().max(1e-300));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn great_sphere_spectrum() {
        let s = jacobi_spectrum(&S3MinimalSurface::great_sphere(), 3);
        let pairs: Vec<(f64, usize)> = s.iter().map(|l| (l.lambda, l.multiplicity)).collect();
        assert_eq!(pairs, vec![(2.0, 1), (0.0, 3), (-4.0, 5), (-10.0, 7)]);
        assert_eq!(willmore_index_s3(&S3MinimalSurface::great_sphere(), 3), 0);
    }

    #[test]
    fn clifford_torus_lattice() {
        let t = S3MinimalSurface::clifford_torus();
        let s = jacobi_spectrum(&t, 5);
        let pairs: Vec<(f64, usize)> = s.iter().map(|l| (l.lambda, l.multiplicity)).collect();
        assert_eq!(pairs, vec![(4.0, 1), (2.0, 4), (0.0, 4), (-4.0, 4), (-6.0, 8)]);
        assert_eq!(willmore_index_s3(&t, 5), 0);
        assert_eq!(t.gauss_curvature() * t.area(), 2.0 * PI * t.euler_characteristic() as f64);
    }

    #[test]
    fn injected_line_is_counted() {
        let lines = [
            EigenLine { lambda: 1.0, multiplicity: 3 },
            EigenLine { lambda: 2.0, multiplicity: 1 },
            EigenLine { lambda: 0.0, multiplicity: 2 },
        ];
        assert_eq!(index_from_spectrum(&lines), 3);
    }

    #[test]
    fn normal_is_a_jacobi_eigenfunction() {
        let e = great_sphere_jacobi_residual([0.3, -0.2, 0.5, 0.8], &[0.3, 1.0, 2.5], 12);
        assert!(e < 1e-8, "{e}");
    }
}
