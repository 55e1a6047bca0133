//! Named Weierstrass data: the plane, catenoid, Enneper, and a family with four planar ends.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::point_from_sphere;
use crate::error::{Result, WillmoreError};
use crate::rational::{ComplexPolynomial, Point, RationalFunction};
use crate::weierstrass::{
    build_from_f, null_residual, random_sphere_point, MinimalImmersion, WeierstrassInput,
};

type C64 = Complex64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Catalog entries addressable from configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogSurface {
    Plane,
    Catenoid,
    Enneper,
    FourEnd,
}

impl CatalogSurface {
    pub fn input(&self) -> Result<WeierstrassInput> {
        Ok(match self {
            CatalogSurface::Plane => plane(0.5),
            CatalogSurface::Catenoid => catenoid(),
            CatalogSurface::Enneper => enneper(),
            CatalogSurface::FourEnd => four_end(&FourEndOptions::default())?.input,
        })
    }
}

/// The plane f = (z, -iz, 0) at height `height`; its inversion is a round sphere of diameter 1/height.
pub fn plane(height: f64) -> WeierstrassInput {
    let z = ComplexPolynomial::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let miz = ComplexPolynomial::new(vec![c(0.0, 0.0), c(0.0, -1.0)]);
    WeierstrassInput::Direct {
        f: [
            RationalFunction::polynomial(z),
            RationalFunction::polynomial(miz),
            RationalFunction::zero(),
        ],
        offset: [0.0, 0.0, height],
    }
}

/// g = z, eta = 1/z^2.
pub fn catenoid() -> WeierstrassInput {
    WeierstrassInput::Gauss {
        g: RationalFunction::z(),
        eta: RationalFunction::new(
            ComplexPolynomial::one(),
            ComplexPolynomial::monomial(c(1.0, 0.0), 2),
        )
        .expect("nonzero"),
        offset: [0.0; 3],
    }
}

/// g = z, eta = 1.
pub fn enneper() -> WeierstrassInput {
    WeierstrassInput::Gauss {
        g: RationalFunction::z(),
        eta: RationalFunction::constant(c(1.0, 0.0)),
        offset: [0.0; 3],
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FourEndOptions {
    /// Euler angles of the rotation applied to the regular tetrahedron.
    pub euler: [f64; 3],
    /// Perturbation of the initial guess for the free end.
    pub guess_offset: C64,
    pub seed: u64,
}

impl Default for FourEndOptions {
    fn default() -> Self {
        Self {
            euler: [0.3, 0.5, 0.7],
            guess_offset: c(0.04, -0.03),
            seed: 7,
        }
    }
}

/// Result of the four-end construction.
#[derive(Debug, Clone)]
pub struct FourEnd {
    pub input: WeierstrassInput,
    pub ends: [C64; 4],
    /// Newton iterations used to place the free end.
    pub iterations: usize,
    /// Singular values of the planar-end constraint matrix at the solution.
    pub singular_values: [f64; 4],
    /// Max |sum phi_j^2| / sum |phi_j|^2 by least squares over sample points.
    pub null_residual: f64,
    /// Largest residue of phi over the ends (exactness of phi dz).
    pub max_phi_residue: f64,
}

fn rotation(euler: [f64; 3]) -> [[f64; 3]; 3] {
    let (a, b, g) = (euler[0], euler[1], euler[2]);
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
    let mul = |x: [[f64; 3]; 3], y: [[f64; 3]; 3]| {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += x[i][k] * y[k][j];
                }
            }
        }
        out
    };
    mul(mul(rz(a), ry(b)), rz(g))
}

/// Vertices of a rotated regular tetrahedron as points of C.
pub fn tetrahedral_ends(euler: [f64; 3]) -> [C64; 4] {
    let s = 1.0 / 3f64.sqrt();
    let verts = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let r = rotation(euler);
    std::array::from_fn(|k| {
        let v = verts[k];
        let w: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| r[i][j] * v[j]).sum());
        point_from_sphere(w).finite().expect("rotation keeps vertices finite")
    })
}

/// Rows l_k(h) = h'(p_k) - kappa_k h(p_k) on cubic coefficient vectors.
fn constraint_matrix(p: &[C64; 4]) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |k, i| {
        let kappa: C64 = (0..4).filter(|&l| l != k).map(|l| 1.0 / (p[k] - p[l])).sum();
        let pk = p[k];
        let d = if i == 0 { c(0.0, 0.0) } else { pk.powi(i as i32 - 1) * i as f64 };
        d - kappa * pk.powi(i as i32)
    })
}

/// All 3x3 minors; they vanish exactly when the rank is at most 2.
fn minors(m: &DMatrix<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(16);
    for skip_r in 0..4 {
        for skip_c in 0..4 {
            let rows: Vec<usize> = (0..4).filter(|&r| r != skip_r).collect();
            let cols: Vec<usize> = (0..4).filter(|&x| x != skip_c).collect();
            let a = |i: usize, j: usize| m[(rows[i], cols[j])];
            out.push(
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)),
            );
        }
    }
    out
}

/// Gauss-Newton in the free end p4 on the holomorphic minors.
fn solve_free_end(fixed: [C64; 3], guess: C64) -> Result<(C64, usize)> {
    let residual = |p4: C64| minors(&constraint_matrix(&[fixed[0], fixed[1], fixed[2], p4]));
    let mut p4 = guess;
    for it in 0..100 {
        let r = residual(p4);
        let norm: f64 = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Ok((p4, it));
        }
        let h = 1e-7 * (1.0 + p4.norm());
        let rp = residual(p4 + h);
        let rm = residual(p4 - h);
        let jac: Vec<C64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let num: C64 = jac.iter().zip(&r).map(|(j, x)| j.conj() * x).sum();
        let den: f64 = jac.iter().map(|j| j.norm_sqr()).sum();
        let step = num / den;
        p4 -= step;
        if step.norm() < 1e-15 * (1.0 + p4.norm()) {
            return Ok((p4, it + 1));
        }
    }
    let r = residual(p4);
    let norm: f64 = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-10 {
        Ok((p4, 100))
    } else {
        Err(WillmoreError::InvalidInput(format!(
            "four-end solve did not converge (minor residual {norm:.3e})"
        )))
    }
}

/// Builds a minimal sphere with four embedded planar ends.
///
/// The Gauss data is g = P/Q and eta = Q^2/R^2 with R = prod (z - p_k) and
/// P, Q cubics. The residues of phi at every p_k vanish iff span{P, Q} lies in
/// the kernel of the functionals l_k, which requires the constraint matrix to
/// have rank 2. Three ends are fixed and the fourth found by Gauss-Newton.
pub fn four_end(opts: &FourEndOptions) -> Result<FourEnd> {
    let t = tetrahedral_ends(opts.euler);
    let (p4, iterations) = solve_free_end([t[0], t[1], t[2]], t[3] + opts.guess_offset)?;
    let ends = [t[0], t[1], t[2], p4];
    let m = constraint_matrix(&ends);
    let svd = m.clone().svd(true, true);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let singular_values: [f64; 4] = std::array::from_fn(|k| svd.singular_values[order[k]]);
    let v = svd.v_t.expect("requested").adjoint();
    let kernel = |k: usize| -> ComplexPolynomial {
        ComplexPolynomial::new((0..4).map(|i| v[(i, order[k])]).collect())
    };
    let (p, q) = (kernel(2), kernel(3));
    let r = ComplexPolynomial::from_roots(&ends);
    // phi over the exact denominator R^2; no cancellation is needed.
    let r2 = r.mul(&r);
    let (p2, q2) = (p.mul(&p), q.mul(&q));
    let half = c(0.5, 0.0);
    let phi: [RationalFunction; 3] = [
        q2.sub(&p2).scale(half),
        q2.add(&p2).scale(c(0.0, 0.5)),
        p.mul(&q),
    ]
    .map(|num| RationalFunction::new(num, r2.clone()).expect("nonzero"));
    let max_phi_residue = phi
        .iter()
        .flat_map(|f| ends.iter().map(move |&p| f.laurent_at(p, 2, 2)[1].norm()))
        .fold(0.0, f64::max);
    let poles: Vec<Point> = ends.iter().map(|&p| Point::Finite(p)).collect();
    let null_residual = null_residual(&phi, &poles, opts.seed, 200);

    // With zero residues, f = sum_k -c_k / (z - p_k) where c_k is the
    // z^-2 coefficient of phi at p_k; the ends are known exactly.
    let numer: [ComplexPolynomial; 3] = std::array::from_fn(|j| {
        let mut acc = ComplexPolynomial::zero();
        for k in 0..4 {
            let others: Vec<C64> = (0..4).filter(|&l| l != k).map(|l| ends[l]).collect();
            let s_k = ComplexPolynomial::from_roots(&others);
            let ck = phi[j].numerator.eval(ends[k]) / s_k.eval(ends[k]).powi(2);
            acc = acc.add(&s_k.scale(-ck));
        }
        acc
    });
    let f: [RationalFunction; 3] =
        numer.map(|n| RationalFunction::new(n, r.clone()).expect("nonzero"));
    let imm = build_from_f(&f)?;
    let mean_alpha = imm.ends.iter().map(|e| e.alpha).sum::<f64>() / imm.end_count() as f64;
    let s = c(1.0 / mean_alpha, 0.0);
    let f: [RationalFunction; 3] = std::array::from_fn(|j| f[j].scale(s));
    let imm = build_from_f(&f)?;
    let offset = far_point(&imm, opts.seed);
    Ok(FourEnd {
        input: WeierstrassInput::Direct {
            f,
            offset: offset.map(|x| -x),
        },
        ends,
        iterations,
        singular_values,
        null_residual,
        max_phi_residue,
    })
}

/// A point of R^3 far from the surface: best of seeded candidates in the bounding box.
fn far_point(imm: &MinimalImmersion, seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfa4);
    let mut samples = Vec::new();
    while samples.len() < 6000 {
        let p = random_sphere_point(&mut rng);
        if imm.distance_to_ends(p) < 0.01 {
            continue;
        }
        let Point::Finite(z) = p else { continue };
        samples.push(imm.position(z));
    }
    let core: Vec<&[f64; 3]> = samples
        .iter()
        .filter(|x| x.iter().map(|c| c * c).sum::<f64>() < 9.0)
        .collect();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for x in &core {
        for i in 0..3 {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    }
    let dist = |c: &[f64; 3]| {
        samples
            .iter()
            .map(|x| (0..3).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = ([0.0; 3], f64::NEG_INFINITY);
    for _ in 0..400 {
        let cand: [f64; 3] = std::array::from_fn(|i| rng.gen_range(lo[i]..hi[i]));
        let d = dist(&cand);
        if d > best.1 {
            best = (cand, d);
        }
    }
    best.0
}
