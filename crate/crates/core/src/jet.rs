//! Truncated bivariate Taylor arithmetic up to total order 4.
//!
//! A `Jet` at a point (x0, y0) stores Taylor coefficients c_ab of
//! h1^a h2^b with a + b <= order, so the partial derivative
//! d^(a+b)/dx^a dy^b equals a! b! c_ab.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::rational::binomial;

pub const MAX_ORDER: usize = 4;
const N: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[inline]
const fn idx(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

#[inline]
fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Alias matching the derivative-bundle naming used across the crate.
pub type Jet4 = Jet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; N],
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER);
        let mut c = [0.0; N];
        c[0] = v;
        Self { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate x1 at value x0.
    pub fn var_x(x0: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[idx(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate x2 at value y0.
    pub fn var_y(y0: f64, order: usize) -> Self {
        let mut j = Self::constant(y0, order);
        if order >= 1 {
            j.c[idx(0, 1)] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Taylor coefficient of h1^a h2^b.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.order {
            0.0
        } else {
            self.c[idx(a, b)]
        }
    }

    pub fn set_coeff(&mut self, a: usize, b: usize, v: f64) {
        assert!(a + b <= self.order);
        self.c[idx(a, b)] = v;
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative d^(a+b) / dx1^a dx2^b at the base point.
    pub fn deriv(&self, a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) * self.coeff(a, b)
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.deriv(1, 0), self.deriv(0, 1)]
    }

    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let xy = self.deriv(1, 1);
        [[self.deriv(2, 0), xy], [xy, self.deriv(0, 2)]]
    }

    /// Flat Laplacian at the base point.
    pub fn laplacian(&self) -> f64 {
        self.deriv(2, 0) + self.deriv(0, 2)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut out = Self::zero(order);
        for n in 0..=order {
            for b in 0..=n {
                out.c[idx(n - b, b)] = self.c[idx(n - b, b)];
            }
        }
        out
    }

    /// Jet of the partial derivative in x1 (one order lower).
    pub fn dx(&self) -> Self {
        assert!(self.order >= 1);
        let mut out = Self::zero(self.order - 1);
        for n in 0..self.order {
            for b in 0..=n {
                let a = n - b;
                out.c[idx(a, b)] = (a + 1) as f64 * self.c[idx(a + 1, b)];
            }
        }
        out
    }

    /// Jet of the partial derivative in x2 (one order lower).
    pub fn dy(&self) -> Self {
        assert!(self.order >= 1);
        let mut out = Self::zero(self.order - 1);
        for n in 0..self.order {
            for b in 0..=n {
                let a = n - b;
                out.c[idx(a, b)] = (b + 1) as f64 * self.c[idx(a, b + 1)];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.c.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// Applies a univariate function given its Taylor coefficients g_k at the value.
    pub fn compose(&self, g: &[f64]) -> Self {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Self::constant(g[0], self.order);
        let mut pow = Self::constant(1.0, self.order);
        for gk in g.iter().take(self.order + 1).skip(1) {
            pow *= delta;
            out += pow.scale(*gk);
        }
        out
    }

    pub fn recip(&self) -> Self {
        let u = self.c[0];
        let g: Vec<f64> = (0..=self.order)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / u.powi(k as i32 + 1))
            .collect();
        self.compose(&g)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn powf(&self, p: f64) -> Self {
        let u = self.c[0];
        let mut g = Vec::with_capacity(self.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.order {
            g.push(coef * u.powf(p - k as f64));
            coef *= (p - k as f64) / (k + 1) as f64;
        }
        self.compose(&g)
    }

    pub fn ln(&self) -> Self {
        let u = self.c[0];
        let mut g = vec![u.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            g.push(sign / (k as f64 * u.powi(k as i32)));
        }
        self.compose(&g)
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        let g: Vec<f64> = (0..=self.order).map(|k| e / factorial(k)).collect();
        self.compose(&g)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let g: Vec<f64> = (0..=self.order)
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&g)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [c, -s, -c, s];
        let g: Vec<f64> = (0..=self.order)
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&g)
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0, self.order), |acc, _| acc * *self)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = self.truncate(order);
        for k in 0..idx(0, order) + 1 {
            out.c[k] += rhs.c[k];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for n1 in 0..=order {
            for b1 in 0..=n1 {
                let x = self.c[idx(n1 - b1, b1)];
                if x == 0.0 {
                    continue;
                }
                for n2 in 0..=order - n1 {
                    for b2 in 0..=n2 {
                        out.c[idx(n1 - b1 + n2 - b2, b1 + b2)] += x * rhs.c[idx(n2 - b2, b2)];
                    }
                }
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

/// A complex-valued jet, stored as real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn new(re: Jet, im: Jet) -> Self {
        Self { re, im }
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        Self::new(Jet::constant(c.re, order), Jet::constant(c.im, order))
    }

    /// Jet of a holomorphic function from its Taylor coefficients a_n at z0.
    pub fn holomorphic(taylor: &[Complex64], order: usize) -> Self {
        let mut re = Jet::zero(order);
        let mut im = Jet::zero(order);
        // (h1 + i h2)^n = sum_b C(n,b) i^b h1^(n-b) h2^b
        for (n, an) in taylor.iter().enumerate().take(order + 1) {
            for b in 0..=n {
                let ib = match b % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                };
                let v = an * ib * binomial(n, b);
                re.c[idx(n - b, b)] += v.re;
                im.c[idx(n - b, b)] += v.im;
            }
        }
        Self { re, im }
    }

    pub fn order(&self) -> usize {
        self.re.order.min(self.im.order)
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn norm_sqr(&self) -> Jet {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(
            self.re * c.re - self.im * c.im,
            self.re * c.im + self.im * c.re,
        )
    }

    pub fn scale_real(&self, s: Jet) -> Self {
        Self::new(self.re * s, self.im * s)
    }

    pub fn recip(&self) -> Self {
        let inv = self.norm_sqr().recip();
        Self::new(self.re * inv, -(self.im * inv))
    }
}

impl Add for CJet {
    type Output = CJet;
    fn add(self, rhs: CJet) -> CJet {
        CJet::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for CJet {
    type Output = CJet;
    fn sub(self, rhs: CJet) -> CJet {
        CJet::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for CJet {
    type Output = CJet;
    fn mul(self, rhs: CJet) -> CJet {
        CJet::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Div for CJet {
    type Output = CJet;
    fn div(self, rhs: CJet) -> CJet {
        self * rhs.recip()
    }
}

/// Cross product of jet 3-vectors.
pub fn cross(a: &[Jet; 3], b: &[Jet; 3]) -> [Jet; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: &[Jet; 3], b: &[Jet; 3]) -> Jet {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: f64, y: f64, order: usize) -> (Jet, Jet) {
        (Jet::var_x(x, order), Jet::var_y(y, order))
    }

    #[test]
    fn product_rule_on_monomials() {
        let (x, y) = point(0.7, -0.3, 4);
        let f = x * x * y;
        assert!((f.value() - 0.49 * -0.3).abs() < 1e-15);
        assert!((f.deriv(1, 0) - 2.0 * 0.7 * -0.3).abs() < 1e-15);
        assert!((f.deriv(2, 1) - 2.0).abs() < 1e-15);
        assert!((f.deriv(1, 1) - 1.4).abs() < 1e-15);
        assert_eq!(f.deriv(3, 1), 0.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let (x, y) = point(0.4, 0.9, 4);
        let r2 = x * x + y * y + 1.0;
        let s = r2.sqrt();
        let l = r2.ln();
        let e = (x * y).exp();
        let v = r2.value();
        // d/dx sqrt(r2) = x / sqrt(r2)
        assert!((s.deriv(1, 0) - 0.4 / v.sqrt()).abs() < 1e-14);
        // Laplacian of ln(1 + x^2 + y^2) = 4 / (1 + r^2)^2
        assert!((l.laplacian() - 4.0 / (v * v)).abs() < 1e-13);
        // d^2/dxdy exp(xy) = (1 + xy) exp(xy)
        let xy = 0.36f64;
        assert!((e.deriv(1, 1) - (1.0 + xy) * xy.exp()).abs() < 1e-13);
        let q = x / r2;
        let expect = (v - 2.0 * 0.16) / (v * v);
        assert!((q.deriv(1, 0) - expect).abs() < 1e-14);
    }

    #[test]
    fn trig_derivatives() {
        let (x, _) = point(0.3, 0.0, 4);
        let s = x.sin();
        assert!((s.deriv(3, 0) + 0.3f64.cos()).abs() < 1e-14);
        assert!((x.cos().deriv(4, 0) - 0.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn partial_lowers_order() {
        let (x, y) = point(1.0, 2.0, 3);
        let f = x * x * x * y;
        let fx = f.dx();
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 6.0).abs() < 1e-15);
        assert!((fx.deriv(1, 0) - 12.0).abs() < 1e-15);
        assert!((f.dy().deriv(2, 0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn holomorphic_jet_satisfies_cauchy_riemann() {
        let a = [
            Complex64::new(1.0, 2.0),
            Complex64::new(0.5, -1.0),
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.7),
            Complex64::new(0.05, 0.02),
        ];
        let f = CJet::holomorphic(&a, 4);
        let ux = f.re.dx();
        let vy = f.im.dy();
        let uy = f.re.dy();
        let vx = f.im.dx();
        for n in 0..=3 {
            for b in 0..=n {
                assert!((ux.coeff(n - b, b) - vy.coeff(n - b, b)).abs() < 1e-14);
                assert!((uy.coeff(n - b, b) + vx.coeff(n - b, b)).abs() < 1e-14);
            }
        }
        assert!((f.re.laplacian()).abs() < 1e-14);
    }
}
