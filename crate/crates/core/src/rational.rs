//! Complex polynomials and rational functions on the Riemann sphere.

use std::fmt;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WillmoreError};

pub type C64 = Complex64;

/// Default absolute clustering tolerance for denominator roots.
pub const POLE_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Finite(C64),
    Infinity,
}

impl Point {
    pub fn finite(&self) -> Option<C64> {
        match self {
            Point::Finite(z) => Some(*z),
            Point::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    /// Chordal distance on the unit sphere (diameter 2).
    pub fn chordal_distance(&self, other: &Point) -> f64 {
        match (self, other) {
            (Point::Infinity, Point::Infinity) => 0.0,
            (Point::Finite(a), Point::Infinity) | (Point::Infinity, Point::Finite(a)) => {
                2.0 / (1.0 + a.norm_sqr()).sqrt()
            }
            (Point::Finite(a), Point::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
            }
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            Point::Infinity => write!(f, "inf"),
        }
    }
}

/// Polynomial with ascending complex coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPolynomial {
    coeffs: Vec<C64>,
}

impl ComplexPolynomial {
    /// Builds a polynomial, dropping exactly-zero leading coefficients.
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = Self { coeffs };
        p.trim_exact();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// The monomial c z^n.
    pub fn monomial(c: C64, n: usize) -> Self {
        let mut coeffs = vec![ZERO; n + 1];
        coeffs[n] = c;
        Self::new(coeffs)
    }

    /// z - root.
    pub fn linear(root: C64) -> Self {
        Self::new(vec![-root, ONE])
    }

    pub fn from_roots(roots: &[C64]) -> Self {
        roots
            .iter()
            .fold(Self::one(), |acc, &r| acc.mul(&Self::linear(r)))
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    /// Sum of coefficient moduli, a scale for relative tests.
    pub fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    fn trim_exact(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if *c == ZERO) {
            self.coeffs.pop();
        }
    }

    /// Drops leading coefficients below `rel` times the largest modulus.
    pub fn trimmed(mut self, rel: f64) -> Self {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while matches!(self.coeffs.last(), Some(c) if c.norm() <= rel * scale) {
            self.coeffs.pop();
        }
        self
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Rounding-error scale for evaluation at z: sum |c_k| |z|^k.
    pub fn eval_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Primitive with zero constant term.
    pub fn integral(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(ZERO);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Quotient and remainder of Euclidean division.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dn = divisor.degree();
        if self.is_zero() || self.degree() < dn {
            return (Self::zero(), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![ZERO; self.degree() - dn + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dn] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + dn] = ZERO;
        }
        rem.truncate(dn);
        (Self::new(quot), Self::new(rem))
    }

    /// Quotient by (z - r), discarding the remainder.
    pub fn deflate(&self, r: C64) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let n = self.coeffs.len() - 1;
        let mut q = vec![ZERO; n];
        let mut acc = ZERO;
        for k in (0..n).rev() {
            acc = acc * r + self.coeffs[k + 1];
            q[k] = acc;
        }
        Self::new(q)
    }

    /// Taylor coefficients at z0: p(z0 + t) = sum c_k t^k.
    pub fn shift(&self, z0: C64) -> Vec<C64> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let next = c[k + 1];
                c[k] += z0 * next;
            }
        }
        c
    }

    /// The coefficient list reversed: z^deg p(1/z).
    pub fn reversed(&self, degree: usize) -> Vec<C64> {
        (0..=degree).map(|k| self.coeff(degree - k)).collect()
    }

    /// All complex roots via companion-matrix eigenvalues, each polished by one Newton step.
    pub fn roots(&self) -> Vec<C64> {
        self.eigen_roots().into_iter().map(|r| self.polish(r)).collect()
    }

    fn eigen_roots(&self) -> Vec<C64> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let roots: Vec<C64> = if n == 1 {
            vec![-self.coeffs[0] / lead]
        } else {
            let mut m = DMatrix::<C64>::zeros(n, n);
            for i in 1..n {
                m[(i, i - 1)] = ONE;
            }
            for i in 0..n {
                m[(i, n - 1)] = -self.coeffs[i] / lead;
            }
            Schur::new(m).eigenvalues().map(|e| e.iter().copied().collect()).unwrap_or_default()
        };
        roots
    }

    /// One Newton step, skipped near multiple roots.
    fn polish(&self, r: C64) -> C64 {
        let d = self.derivative();
        let dp = d.eval(r);
        if dp.norm() > 1e-8 * d.eval_scale(r).max(f64::MIN_POSITIVE) {
            let step = self.eval(r) / dp;
            if step.norm() < 1e-3 * (1.0 + r.norm()) {
                return r - step;
            }
        }
        r
    }

    /// Roots grouped into distinct points with multiplicities.
    ///
    /// Roots within `tol` are merged. Around each root, growing neighbourhoods
    /// are also tried, and a group is merged when its mean is numerically a root
    /// of the group's multiplicity; this collects multiple roots that the
    /// eigenvalue solver splits by roughly eps^(1/k).
    pub fn roots_with_multiplicity(&self, tol: f64) -> Vec<(C64, usize)> {
        // Unpolished eigenvalues: Newton steps destroy the accuracy of cluster means.
        let roots = self.eigen_roots();
        let n = roots.len();
        let mut used = vec![false; n];
        let mut out = Vec::new();
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mean_of = |g: &[usize]| g.iter().map(|&j| roots[j]).sum::<C64>() / g.len() as f64;
            let mut best = vec![i];
            for rad in [1e-10, 1e-8, 1e-6, 1e-5, 1e-4, 1e-3] {
                let r = rad * (1.0 + roots[i].norm());
                let g: Vec<usize> = (0..n)
                    .filter(|&j| !used[j] && (roots[j] - roots[i]).norm() <= r)
                    .collect();
                if g.len() <= best.len() {
                    continue;
                }
                let mean = mean_of(&g);
                let spread = g.iter().map(|&j| (roots[j] - mean).norm()).fold(0.0, f64::max);
                if spread <= tol * (1.0 + mean.norm()) || self.vanishes_to_order(mean, g.len()) {
                    best = g;
                }
            }
            for &j in &best {
                used[j] = true;
            }
            let c = mean_of(&best);
            out.push(if best.len() == 1 { (self.polish(c), 1) } else { (c, best.len()) });
        }
        out
    }

    /// True when the first `k` Taylor coefficients at z0 are at rounding level.
    fn vanishes_to_order(&self, z0: C64, k: usize) -> bool {
        let t = self.shift(z0);
        let r = z0.norm();
        (0..k.min(t.len())).all(|j| {
            let mut floor = 0.0;
            for (i, c) in self.coeffs.iter().enumerate().skip(j) {
                floor += c.norm() * binomial(i, j) * r.powi((i - j) as i32);
            }
            t[j].norm() <= 256.0 * f64::EPSILON * floor
        })
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Power-series quotient a/b truncated to n terms; b[0] must be nonzero.
pub fn series_div(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut q = vec![ZERO; n];
    let b0 = b[0];
    for k in 0..n {
        let mut s = a.get(k).copied().unwrap_or(ZERO);
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            s -= b[j] * q[k - j];
        }
        q[k] = s / b0;
    }
    q
}

/// A pole with its order and residue in the function chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub location: Point,
    pub order: u32,
    /// Coefficient of (z-p)^-1, or of zeta^-1 with zeta = 1/z at infinity.
    pub residue: C64,
}

/// Quotient of complex polynomials, kept with a monic denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    pub numerator: ComplexPolynomial,
    pub denominator: ComplexPolynomial,
}

impl RationalFunction {
    /// Builds num/den, normalizing the denominator to unit leading coefficient.
    pub fn new(numerator: ComplexPolynomial, denominator: ComplexPolynomial) -> Result<Self> {
        if denominator.is_zero() {
            return Err(WillmoreError::ZeroDenominator);
        }
        let lead = denominator.leading();
        Ok(Self {
            numerator: numerator.scale(ONE / lead),
            denominator: denominator.scale(ONE / lead),
        })
    }

    /// Builds and then cancels common roots.
    pub fn reduced(numerator: ComplexPolynomial, denominator: ComplexPolynomial) -> Result<Self> {
        Ok(Self::new(numerator, denominator)?.reduce(POLE_TOL))
    }

    pub fn polynomial(p: ComplexPolynomial) -> Self {
        Self {
            numerator: p,
            denominator: ComplexPolynomial::one(),
        }
    }

    pub fn constant(c: C64) -> Self {
        Self::polynomial(ComplexPolynomial::constant(c))
    }

    pub fn zero() -> Self {
        Self::polynomial(ComplexPolynomial::zero())
    }

    /// The identity map z.
    pub fn z() -> Self {
        Self::polynomial(ComplexPolynomial::monomial(ONE, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Cancels numerator roots that match denominator roots within `tol`.
    pub fn reduce(&self, tol: f64) -> Self {
        let mut num = self.numerator.clone().trimmed(1e-14);
        let mut den = self.denominator.clone();
        if num.is_zero() {
            return Self::zero();
        }
        for (r, k) in den.roots_with_multiplicity(tol) {
            for _ in 0..k {
                let scale = num.eval_scale(r).max(f64::MIN_POSITIVE);
                let matched = num.degree() >= 1
                    && num.eval(r).norm() <= tol.max(1e3 * f64::EPSILON) * scale;
                if !matched {
                    break;
                }
                num = num.deflate(r);
                den = den.deflate(r);
            }
        }
        Self::new(num, den.trimmed(1e-14)).expect("monic denominator stays nonzero")
    }

    /// Value at a point of the sphere; poles map to infinity.
    pub fn evaluate(&self, z: Point) -> Point {
        match z {
            Point::Finite(z) => {
                let d = self.denominator.eval(z);
                let n = self.numerator.eval(z);
                if d == ZERO {
                    if n == ZERO {
                        // Only reachable for unreduced input.
                        Point::Finite(C64::new(f64::NAN, f64::NAN))
                    } else {
                        Point::Infinity
                    }
                } else {
                    Point::Finite(n / d)
                }
            }
            Point::Infinity => {
                if self.numerator.is_zero() {
                    return Point::Finite(ZERO);
                }
                let (dn, dd) = (self.numerator.degree(), self.denominator.degree());
                match dn.cmp(&dd) {
                    std::cmp::Ordering::Greater => Point::Infinity,
                    std::cmp::Ordering::Less => Point::Finite(ZERO),
                    std::cmp::Ordering::Equal => {
                        Point::Finite(self.numerator.leading() / self.denominator.leading())
                    }
                }
            }
        }
    }

    /// Value at a finite point, infinite at poles.
    pub fn eval(&self, z: C64) -> C64 {
        self.numerator.eval(z) / self.denominator.eval(z)
    }

    pub fn derivative(&self) -> Self {
        let n = &self.numerator;
        let d = &self.denominator;
        let num = n.derivative().mul(d).sub(&n.mul(&d.derivative()));
        Self::new(num, d.mul(d))
            .expect("nonzero denominator")
            .reduce(POLE_TOL)
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = self
            .numerator
            .mul(&other.denominator)
            .add(&other.numerator.mul(&self.denominator));
        Self::new(num, self.denominator.mul(&other.denominator))
            .expect("nonzero denominator")
            .reduce(POLE_TOL)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.numerator.mul(&other.numerator),
            self.denominator.mul(&other.denominator),
        )
        .expect("nonzero denominator")
        .reduce(POLE_TOL)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            numerator: self.numerator.scale(c),
            denominator: self.denominator.clone(),
        }
        .reduce(POLE_TOL)
    }

    /// Adds a constant without re-reducing.
    pub fn add_constant(&self, c: C64) -> Self {
        Self {
            numerator: self.numerator.add(&self.denominator.scale(c)),
            denominator: self.denominator.clone(),
        }
    }

    /// First `n` Taylor coefficients at a regular point z0.
    pub fn taylor(&self, z0: C64, n: usize) -> Vec<C64> {
        let a = self.numerator.shift(z0);
        let b = self.denominator.shift(z0);
        series_div(&a, &b, n)
    }

    /// Polynomial part and proper remainder: self = q + r/den.
    pub fn polynomial_part(&self) -> (ComplexPolynomial, ComplexPolynomial) {
        self.numerator.div_rem(&self.denominator)
    }

    /// Laurent coefficients at a finite pole of the given order, starting from (z-p)^-order.
    pub fn laurent_at(&self, p: C64, order: usize, n_terms: usize) -> Vec<C64> {
        let mut q = self.denominator.clone();
        for _ in 0..order {
            q = q.deflate(p);
        }
        let a = self.numerator.shift(p);
        let b = q.shift(p);
        series_div(&a, &b, n_terms)
    }

    /// Expansion at infinity: self(1/zeta) = sum c_k zeta^(k - order) for k = 0..n_terms.
    /// Returns the order of the pole at infinity (0 if regular) with the coefficients.
    pub fn laurent_at_infinity(&self, n_terms: usize) -> (usize, Vec<C64>) {
        let dn = self.numerator.degree();
        let dd = self.denominator.degree();
        let order = dn.saturating_sub(dd);
        // self(1/zeta) = zeta^(dd - dn) * rev(num)/rev(den).
        let big = dn.max(dd);
        let a = self.numerator.reversed(dn);
        let b = self.denominator.reversed(dd);
        let series = series_div(&a, &b, n_terms + big);
        // Multiply by zeta^(dd - dn); shift so index 0 is zeta^-order.
        let shift = dd as isize - dn as isize + order as isize;
        let coeffs = (0..n_terms)
            .map(|k| {
                let idx = k as isize - shift;
                if idx >= 0 {
                    series[idx as usize]
                } else {
                    ZERO
                }
            })
            .collect();
        (order, coeffs)
    }

    /// Poles with orders and function-chart residues.
    pub fn find_poles(&self, tol: f64) -> Result<Vec<PoleRecord>> {
        let mut out = Vec::new();
        let clusters = self.denominator.roots_with_multiplicity(tol);
        for &(p, k) in &clusters {
            let scale = self.denominator.eval_scale(p).max(f64::MIN_POSITIVE);
            let residual = self.denominator.shift(p)[..k]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max)
                / scale;
            if residual > tol {
                return Err(WillmoreError::IllConditionedRoots { residual, tol });
            }
            let residue = if k == 1 {
                self.numerator.eval(p) / self.denominator.derivative().eval(p)
            } else {
                self.laurent_at(p, k, k)[k - 1]
            };
            out.push(PoleRecord {
                location: Point::Finite(p),
                order: k as u32,
                residue,
            });
        }
        let order = self
            .numerator
            .degree()
            .saturating_sub(self.denominator.degree());
        if order > 0 && !self.numerator.is_zero() {
            // Coefficient of zeta^-1 is the z^1 coefficient of the polynomial part.
            let (q, _) = self.polynomial_part();
            out.push(PoleRecord {
                location: Point::Infinity,
                order: order as u32,
                residue: q.coeff(1),
            });
        }
        Ok(out)
    }

    /// Residue of the differential self(z) dz at infinity.
    pub fn form_residue_at_infinity(&self) -> C64 {
        let (_, r) = self.polynomial_part();
        let dd = self.denominator.degree();
        if dd == 0 {
            return ZERO;
        }
        -r.coeff(dd - 1) / self.denominator.leading()
    }

    /// Sum of residues of self(z) dz over the whole sphere.
    pub fn residue_sum(&self, tol: f64) -> Result<C64> {
        let finite: C64 = self
            .find_poles(tol)?
            .iter()
            .filter(|p| !p.location.is_infinite())
            .map(|p| p.residue)
            .sum();
        Ok(finite + self.form_residue_at_infinity())
    }

    /// Rational primitive with zero constant term in the partial fraction form.
    pub fn antiderivative(&self, tol: f64) -> Result<Self> {
        let (q, _) = self.polynomial_part();
        let poles: Vec<(C64, usize)> = self.denominator.roots_with_multiplicity(tol);
        // Principal parts of the primitive: b_j/(z-p)^j.
        let mut parts: Vec<(C64, Vec<C64>)> = Vec::new();
        for &(p, k) in &poles {
            let c = self.laurent_at(p, k, k);
            let scale = c.iter().map(|x| x.norm()).fold(1.0, f64::max);
            let res = c[k - 1];
            if res.norm() > tol * scale {
                return Err(WillmoreError::LogarithmicObstruction {
                    pole: Point::Finite(p),
                    residue: res,
                });
            }
            // c[i] multiplies (z-p)^(i-k); integrate terms with exponent -j, j >= 2.
            let mut b = vec![ZERO; k.saturating_sub(1)];
            for (i, &ci) in c.iter().enumerate().take(k.saturating_sub(1)) {
                let j = k - i;
                b[j - 2] = ci / (1.0 - j as f64);
            }
            if !b.is_empty() {
                parts.push((p, b));
            }
        }
        let poly = q.integral();
        let mut den = ComplexPolynomial::one();
        for (p, b) in &parts {
            den = den.mul(&ComplexPolynomial::linear(*p).pow(b.len()));
        }
        let mut num = poly.mul(&den);
        for (idx, (p, b)) in parts.iter().enumerate() {
            let mut others = ComplexPolynomial::one();
            for (jdx, (pp, bb)) in parts.iter().enumerate() {
                if jdx != idx {
                    others = others.mul(&ComplexPolynomial::linear(*pp).pow(bb.len()));
                }
            }
            let top = b.len();
            for (i, &bj) in b.iter().enumerate() {
                let j = i + 1;
                let factor = ComplexPolynomial::linear(*p).pow(top - j);
                num = num.add(&others.mul(&factor).scale(bj));
            }
        }
        Self::new(num, den)
    }

    /// Precomposition with the Moebius map w -> (a w + b)/(c w + d).
    pub fn compose_mobius(&self, a: C64, b: C64, c: C64, d: C64) -> Self {
        let n = self.numerator.degree().max(self.denominator.degree());
        let lin_top = ComplexPolynomial::new(vec![b, a]);
        let lin_bot = ComplexPolynomial::new(vec![d, c]);
        let homog = |p: &ComplexPolynomial| {
            let mut acc = ComplexPolynomial::zero();
            for (k, &ck) in p.coeffs().iter().enumerate() {
                if ck == ZERO {
                    continue;
                }
                let term = lin_top.pow(k).mul(&lin_bot.pow(n - k)).scale(ck);
                acc = acc.add(&term);
            }
            acc.trimmed(1e-14)
        };
        Self::new(homog(&self.numerator), homog(&self.denominator))
            .expect("Moebius maps are invertible")
            .reduce(POLE_TOL)
    }
}
