//! Test functions on the round sphere: restrictions of polynomials in the
//! ambient coordinates s = (s1, s2, s3), orthonormalized in L^2(S^2).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use statrs::function::gamma::gamma;

use crate::chart::{point_from_sphere, sphere_point, Mobius};
use crate::error::{Result, WillmoreError};
use crate::geometry::SphereFunction;
use crate::jet::Jet;
use crate::rational::Point;

type C64 = Complex64;

/// Integral of s1^a s2^b s3^c over the unit sphere.
pub fn monomial_integral(e: [u32; 3]) -> f64 {
    if e.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let h = |k: u32| gamma((k as f64 + 1.0) / 2.0);
    2.0 * h(e[0]) * h(e[1]) * h(e[2]) / gamma((e[0] + e[1] + e[2]) as f64 / 2.0 + 1.5)
}

/// A polynomial in the ambient coordinates restricted to the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePolynomial {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl SpherePolynomial {
    pub fn new(terms: Vec<(f64, [u32; 3])>) -> Self {
        Self { terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![(c, [0, 0, 0])])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.terms.iter().map(|&(a, e)| (a * c, e)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        Self::new(t)
    }

    /// L^2(S^2) inner product.
    pub fn inner(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for &(a, e) in &self.terms {
            for &(b, f) in &other.terms {
                s += a * b * monomial_integral([e[0] + f[0], e[1] + f[1], e[2] + f[2]]);
            }
        }
        s
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }
}

fn monomial_jet(s: &[Jet; 3], e: [u32; 3]) -> Jet {
    s[0].powi(e[0]) * s[1].powi(e[1]) * s[2].powi(e[2])
}

impl SphereFunction for SpherePolynomial {
    fn jet_in_chart(&self, chart: &Mobius, w: C64, order: usize) -> Jet {
        let s = chart.sphere_jets(w, order);
        let mut out = Jet::zero(order);
        for &(c, e) in &self.terms {
            out += monomial_jet(&s, e).scale(c);
        }
        out
    }

    fn value_at(&self, s: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|&(c, e)| c * s[0].powi(e[0] as i32) * s[1].powi(e[1] as i32) * s[2].powi(e[2] as i32))
            .sum()
    }
}

/// v composed with a sphere automorphism: (v o mu)(z) = v(mu(z)).
pub struct Composed<'a> {
    pub f: &'a dyn SphereFunction,
    pub mobius: Mobius,
}

impl SphereFunction for Composed<'_> {
    fn jet_in_chart(&self, chart: &Mobius, w: C64, order: usize) -> Jet {
        self.f.jet_in_chart(&self.mobius.compose(chart), w, order)
    }

    fn value_at(&self, s: [f64; 3]) -> f64 {
        self.f.value_at(sphere_point(self.mobius.apply(point_from_sphere(s))))
    }
}

/// Raw spanning monomials of degree at most d, with s3 to power at most 1
/// (s3^2 = 1 - s1^2 - s2^2 on the sphere), ordered by degree.
pub fn spanning_monomials(degree: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for c in 0..=1u32.min(d) {
            for a in (0..=d - c).rev() {
                out.push([a, d - c - a, c]);
            }
        }
    }
    out
}

/// Nested L^2-orthonormal basis of polynomials of degree at most d on the sphere.
#[derive(Debug, Clone)]
pub struct TestBasis {
    pub degree: u32,
    pub monomials: Vec<[u32; 3]>,
    /// v_k = sum_i coefficients[(k, i)] m_i; lower triangular.
    pub coefficients: DMatrix<f64>,
    /// L^2 Gram matrix of the v_k, recomputed from exact monomial integrals.
    pub gram: DMatrix<f64>,
    /// Condition number of the raw monomial Gram matrix.
    pub raw_condition: f64,
    /// end_values[(j, k)] = v_k(p_j).
    pub end_values: DMatrix<f64>,
}

impl TestBasis {
    pub fn new(degree: u32, ends: &[Point]) -> Result<Self> {
        let monomials = spanning_monomials(degree);
        let n = monomials.len();
        let raw = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (monomials[i], monomials[j]);
            monomial_integral([a[0] + b[0], a[1] + b[1], a[2] + b[2]])
        });
        let ev = raw.clone().symmetric_eigenvalues();
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        let raw_condition = hi / lo;
        let chol = raw
            .clone()
            .cholesky()
            .ok_or(WillmoreError::GramIllConditioned(f64::INFINITY))?;
        let linv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(WillmoreError::GramIllConditioned(raw_condition))?;
        let gram = &linv * &raw * linv.transpose();
        let gram = (&gram + gram.transpose()) * 0.5;
        let gev = gram.clone().symmetric_eigenvalues();
        let (glo, ghi) = gev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        if !(glo > 0.0 && ghi / glo < 1e8) {
            return Err(WillmoreError::GramIllConditioned(ghi / glo));
        }
        let mut basis = Self {
            degree,
            monomials,
            coefficients: linv,
            gram,
            raw_condition,
            end_values: DMatrix::zeros(ends.len(), n),
        };
        for (j, p) in ends.iter().enumerate() {
            let vals = basis.values_at(sphere_point(*p));
            for k in 0..n {
                basis.end_values[(j, k)] = vals[k];
            }
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// The k-th basis function as a polynomial.
    pub fn function(&self, k: usize) -> SpherePolynomial {
        SpherePolynomial::new(
            (0..=k)
                .map(|i| (self.coefficients[(k, i)], self.monomials[i]))
                .filter(|(c, _)| *c != 0.0)
                .collect(),
        )
    }

    /// The combination sum c_k v_k.
    pub fn combination(&self, c: &[f64]) -> SpherePolynomial {
        let n = self.len();
        let coef = DVector::from_column_slice(c).transpose() * &self.coefficients;
        SpherePolynomial::new((0..n).map(|i| (coef[i], self.monomials[i])).collect())
    }

    pub fn values_at(&self, s: [f64; 3]) -> Vec<f64> {
        let m = DVector::from_iterator(
            self.len(),
            self.monomials
                .iter()
                .map(|e| s[0].powi(e[0] as i32) * s[1].powi(e[1] as i32) * s[2].powi(e[2] as i32)),
        );
        (&self.coefficients * m).iter().copied().collect()
    }

    /// Jets of every basis function in a chart at w.
    pub fn jets(&self, chart: &Mobius, w: C64, order: usize) -> Vec<Jet> {
        let s = chart.sphere_jets(w, order);
        let m: Vec<Jet> = self.monomials.iter().map(|&e| monomial_jet(&s, e)).collect();
        (0..self.len())
            .map(|k| {
                let mut out = Jet::zero(order);
                for i in 0..=k {
                    let c = self.coefficients[(k, i)];
                    if c != 0.0 {
                        out += m[i].scale(c);
                    }
                }
                out
            })
            .collect()
    }

    /// Orthonormal basis (as coefficient vectors) of {c : sum_k c_k v_k(p_j) = 0 for all j}.
    pub fn vanishing_subspace(&self) -> DMatrix<f64> {
        let n = self.len();
        let m = self.end_values.nrows();
        if m == 0 {
            return DMatrix::identity(n, n);
        }
        // Null space from the full SVD of E^T E (n x n, symmetric).
        let ete = self.end_values.transpose() * &self.end_values;
        let eig = ete.symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
        let cols: Vec<DVector<f64>> = (0..n)
            .filter(|&i| eig.eigenvalues[i].abs() < 1e-12 * scale)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// A random combination vanishing at every end.
    pub fn random_vanishing<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.vanishing_subspace();
        let g = DVector::from_fn(k.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        (k * g).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn monomial_integrals() {
        assert!((monomial_integral([0, 0, 0]) - 4.0 * PI).abs() < 1e-13);
        assert!((monomial_integral([2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((monomial_integral([2, 2, 0]) - 4.0 * PI / 15.0).abs() < 1e-13);
        assert!((monomial_integral([4, 0, 0]) - 4.0 * PI / 5.0).abs() < 1e-13);
        assert_eq!(monomial_integral([1, 2, 0]), 0.0);
    }

    #[test]
    fn dimension_and_orthonormality() {
        for d in 0..=6 {
            let b = TestBasis::new(d, &[]).unwrap();
            assert_eq!(b.len(), ((d + 1) * (d + 1)) as usize);
            let err = (&b.gram - DMatrix::identity(b.len(), b.len())).amax();
            assert!(err < 1e-9, "degree {d}: {err}");
        }
    }

    #[test]
    fn basis_is_nested() {
        let b2 = TestBasis::new(2, &[]).unwrap();
        let b3 = TestBasis::new(3, &[]).unwrap();
        for k in 0..b2.len() {
            for i in 0..b2.len() {
                assert!((b2.coefficients[(k, i)] - b3.coefficients[(k, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jets_match_values() {
        let b = TestBasis::new(3, &[]).unwrap();
        let chart = Mobius::centered_at(Point::Finite(C64::new(0.3, -0.2)));
        let w = C64::new(0.1, 0.05);
        let jets = b.jets(&chart, w, 2);
        let vals = b.values_at(sphere_point(chart.apply(Point::Finite(w))));
        for k in 0..b.len() {
            assert!((jets[k].value() - vals[k]).abs() < 1e-12);
            let f = b.function(k);
            assert!((f.jet_in_chart(&chart, w, 2).deriv(1, 1) - jets[k].deriv(1, 1)).abs() < 1e-10);
        }
    }

    #[test]
    fn vanishing_subspace_vanishes() {
        let ends = [Point::Infinity, Point::Finite(C64::new(0.5, 0.5)), Point::Finite(C64::new(-1.0, 0.2))];
        let b = TestBasis::new(2, &ends).unwrap();
        let k = b.vanishing_subspace();
        assert_eq!(k.ncols(), b.len() - ends.len());
        let mut rng = rand::thread_rng();
        let c = b.random_vanishing(&mut rng);
        let v = b.combination(&c);
        for p in ends {
            assert!(v.value_at(sphere_point(p)).abs() < 1e-12);
        }
    }
}
