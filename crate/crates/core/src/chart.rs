//! Moebius charts of the Riemann sphere and the round-sphere identification.
//!
//! Stereographic convention: z = 0 is the south pole (0, 0, -1) and
//! z = infinity the north pole.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::jet::{CJet, Jet};
use crate::rational::{Point, RationalFunction};

type C64 = Complex64;

/// The map w -> (a w + b)/(c w + d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        assert!((a * d - b * c).norm() > 0.0, "singular Moebius map");
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    /// z -> e^{i theta} z.
    pub fn rotation(theta: f64) -> Self {
        Self::new(C64::from_polar(1.0, theta), 0.0.into(), 0.0.into(), 1.0.into())
    }

    /// z -> 1/z.
    pub fn inversion() -> Self {
        Self::new(0.0.into(), 1.0.into(), 1.0.into(), 0.0.into())
    }

    /// A sphere rotation sending w = 0 to `p`.
    pub fn centered_at(p: Point) -> Self {
        match p {
            Point::Finite(p) => Self::new(1.0.into(), p, -p.conj(), 1.0.into()),
            Point::Infinity => Self::inversion(),
        }
    }

    pub fn apply(&self, w: Point) -> Point {
        match w {
            Point::Finite(w) => {
                let den = self.c * w + self.d;
                if den.norm() == 0.0 {
                    Point::Infinity
                } else {
                    Point::Finite((self.a * w + self.b) / den)
                }
            }
            Point::Infinity => {
                if self.c.norm() == 0.0 {
                    Point::Infinity
                } else {
                    Point::Finite(self.a / self.c)
                }
            }
        }
    }

    pub fn apply_finite(&self, w: C64) -> C64 {
        (self.a * w + self.b) / (self.c * w + self.d)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    /// self after other: w -> self(other(w)).
    pub fn compose(&self, other: &Mobius) -> Self {
        Self::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
    }

    /// Precomposes a rational function with this map.
    pub fn pull_back(&self, f: &RationalFunction) -> RationalFunction {
        f.compose_mobius(self.a, self.b, self.c, self.d)
    }

    /// Homogeneous coordinates (Z0, Z1) = (a w + b, c w + d) as jets at w.
    pub fn homogeneous_jets(&self, w: C64, order: usize) -> (CJet, CJet) {
        let z0 = CJet::holomorphic(&[self.a * w + self.b, self.a], order);
        let z1 = CJet::holomorphic(&[self.c * w + self.d, self.c], order);
        (z0, z1)
    }

    /// Jets of the round-sphere coordinates of the image point.
    pub fn sphere_jets(&self, w: C64, order: usize) -> [Jet; 3] {
        let (z0, z1) = self.homogeneous_jets(w, order);
        let n0 = z0.norm_sqr();
        let n1 = z1.norm_sqr();
        let inv = (n0 + n1).recip();
        let p = z0 * z1.conj();
        [p.re * inv * 2.0, p.im * inv * 2.0, (n0 - n1) * inv]
    }

    /// Derivative dz/dw at w.
    pub fn derivative(&self, w: C64) -> C64 {
        let den = self.c * w + self.d;
        (self.a * self.d - self.b * self.c) / (den * den)
    }
}

/// Round-sphere coordinates of a point.
pub fn sphere_point(z: Point) -> [f64; 3] {
    match z {
        Point::Infinity => [0.0, 0.0, 1.0],
        Point::Finite(z) => {
            let r2 = z.norm_sqr();
            let d = 1.0 + r2;
            [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
        }
    }
}

/// Inverse of `sphere_point` for unit 3-vectors.
pub fn point_from_sphere(s: [f64; 3]) -> Point {
    let den = 1.0 - s[2];
    if den <= 1e-300 {
        Point::Infinity
    } else {
        Point::Finite(C64::new(s[0] / den, s[1] / den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_round_trip() {
        for z in [C64::new(0.3, -0.8), C64::new(5.0, 2.0), C64::new(0.0, 0.0)] {
            let s = sphere_point(Point::Finite(z));
            let n = s.iter().map(|x| x * x).sum::<f64>();
            assert!((n - 1.0).abs() < 1e-14);
            match point_from_sphere(s) {
                Point::Finite(w) => assert!((w - z).norm() < 1e-13),
                _ => panic!(),
            }
        }
        assert_eq!(sphere_point(Point::Finite(0.0.into())), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn centered_chart_is_isometric() {
        let p = Point::Finite(C64::new(0.7, 1.3));
        let m = Mobius::centered_at(p);
        assert_eq!(m.apply(Point::Finite(0.0.into())), p);
        let a = Point::Finite(C64::new(0.2, 0.1));
        let b = Point::Finite(C64::new(-0.4, 0.9));
        let d0 = a.chordal_distance(&b);
        let d1 = m.apply(a).chordal_distance(&m.apply(b));
        assert!((d0 - d1).abs() < 1e-14);
        let inv = Mobius::inversion();
        let d2 = inv.apply(a).chordal_distance(&inv.apply(b));
        assert!((d0 - d2).abs() < 1e-14);
    }

    #[test]
    fn sphere_jets_match_point_map() {
        let m = Mobius::centered_at(Point::Finite(C64::new(-0.5, 0.25)));
        let w = C64::new(0.1, -0.2);
        let s = m.sphere_jets(w, 2);
        let direct = sphere_point(m.apply(Point::Finite(w)));
        for i in 0..3 {
            assert!((s[i].value() - direct[i]).abs() < 1e-14);
        }
        let h = 1e-5;
        let sp = sphere_point(m.apply(Point::Finite(w + h)));
        let sm = sphere_point(m.apply(Point::Finite(w - h)));
        for i in 0..3 {
            let fd = (sp[i] - sm[i]) / (2.0 * h);
            assert!((s[i].deriv(1, 0) - fd).abs() < 1e-8);
        }
    }
}
