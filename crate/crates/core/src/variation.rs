//! The regularized second variation Q of the Willmore energy at an inverted
//! minimal surface, its inertia, and a finite-difference cross-check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Composed, TestBasis};
use crate::chart::{sphere_point, Mobius};
use crate::error::{Result, WillmoreError};
use crate::geometry::{invert, willmore_energy, willmore_on_nodes, NormalGraph, SphereFunction};
use crate::jet::{dot, Jet};
use crate::quadrature::{Node, QuadratureSpec};
use crate::richardson::Extrapolation;
use crate::weierstrass::{ChartedImmersion, MinimalImmersion};

type C64 = Complex64;

const CHUNK: usize = 256;

pub const DEFAULT_RADII: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// A finite family of functions on the sphere with chart jets.
pub trait FunctionFamily: Sync {
    fn len(&self) -> usize;
    fn jets(&self, chart: &Mobius, w: C64, order: usize) -> Vec<Jet>;
    fn values_at(&self, s: [f64; 3]) -> Vec<f64>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FunctionFamily for TestBasis {
    fn len(&self) -> usize {
        TestBasis::len(self)
    }
    fn jets(&self, chart: &Mobius, w: C64, order: usize) -> Vec<Jet> {
        TestBasis::jets(self, chart, w, order)
    }
    fn values_at(&self, s: [f64; 3]) -> Vec<f64> {
        TestBasis::values_at(self, s)
    }
}

/// An explicit list of sphere functions.
pub struct FunctionList<'a>(pub Vec<&'a dyn SphereFunction>);

impl FunctionFamily for FunctionList<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn jets(&self, chart: &Mobius, w: C64, order: usize) -> Vec<Jet> {
        self.0.iter().map(|f| f.jet_in_chart(chart, w, order)).collect()
    }
    fn values_at(&self, s: [f64; 3]) -> Vec<f64> {
        self.0.iter().map(|f| f.value_at(s)).collect()
    }
}

/// Per-end excision data in the centered end chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Excision {
    /// |A|^2 for f ~ A / w in the end chart.
    pub chart_residue: f64,
    /// Disk radius per unit R: D(p_j, R) = {|w| < R * scale}.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct QuadraticFormAssembly {
    pub radii: Vec<f64>,
    pub excisions: Vec<Excision>,
    pub interior: Vec<DMatrix<f64>>,
    pub counterterm: Vec<DMatrix<f64>>,
    pub regularized: Vec<DMatrix<f64>>,
    pub q: DMatrix<f64>,
    pub extrapolation: Extrapolation,
    pub extrapolation_error: f64,
}

fn sym_outer_polarized(a: &[f64], c: f64, p: &mut DMatrix<f64>, m: &mut DMatrix<f64>) {
    let n = a.len();
    for k in 0..n {
        for l in k..n {
            let s = a[k] + a[l];
            let d = a[k] - a[l];
            p[(k, l)] += c * s * s;
            m[(k, l)] += c * d * d;
        }
    }
}

/// Values a_k = Delta_flat w_k - 2 K e^{2 lambda} w_k with w_k = |X|^2 v_k,
/// and the density factor 1 / (2 e^{2 lambda}); q(v) = int a^2 / (2 e^{2 lambda}) dx.
fn node_values(ch: &ChartedImmersion, family: &dyn FunctionFamily, w: C64) -> Result<(Vec<f64>, f64)> {
    let l = ch.local(w, 5)?;
    let x = l.position_jets(2);
    let r2 = dot(&x, &x);
    let e2l = l.conformal_factor(0).value();
    let kd = l.curvature_density(0).value();
    let vs = family.jets(&ch.mobius, w, 2);
    let a = vs
        .iter()
        .map(|v| {
            let wk = r2 * *v;
            wk.laplacian() - 2.0 * kd * wk.value()
        })
        .collect();
    Ok((a, 0.5 / e2l))
}

/// Polarized interior integral over a node set: (P - M) / 4.
fn interior_on_nodes(
    charts: &[ChartedImmersion],
    family: &dyn FunctionFamily,
    nodes: &[Node],
) -> Result<DMatrix<f64>> {
    let n = family.len();
    // Fixed chunks summed in order keep the result independent of the thread count.
    let parts = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut p = DMatrix::zeros(n, n);
            let mut m = DMatrix::zeros(n, n);
            for node in chunk {
                let (a, c) = node_values(&charts[node.cell], family, node.w)?;
                sym_outer_polarized(&a, c * node.weight, &mut p, &mut m);
            }
            Ok((p, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let (p, m) = parts
        .into_iter()
        .fold((DMatrix::zeros(n, n), DMatrix::zeros(n, n)), |a, b| (a.0 + b.0, a.1 + b.1));
    let mut out = (p - m) * 0.25;
    for k in 0..n {
        for l in 0..k {
            out[(k, l)] = out[(l, k)];
        }
    }
    Ok(out)
}

/// Assembles Q on the family over the radii schedule.
pub fn assemble_q(
    imm: &MinimalImmersion,
    family: &dyn FunctionFamily,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<QuadraticFormAssembly> {
    if radii.len() < 4 || radii.windows(2).any(|r| !(r[1] < r[0])) || radii.iter().any(|&r| r <= 0.0) {
        return Err(WillmoreError::InvalidInput(
            "radii schedule must be positive, strictly decreasing, with at least 4 entries".into(),
        ));
    }
    for e in &imm.ends {
        if e.residue_norm < 1e-10 {
            return Err(WillmoreError::ZeroResidueEnd(e.location));
        }
    }
    let cells = crate::quadrature::CellDecomposition::new(&imm.end_locations());
    let charts: Vec<ChartedImmersion> = cells.cells.iter().map(|c| imm.chart(c.chart)).collect();
    let n = family.len();
    let m = imm.end_count();

    // Excision scales from the end-chart residues.
    let mut excisions = vec![
        Excision {
            chart_residue: 0.0,
            scale: 0.0
        };
        m
    ];
    for (id, c) in cells.cells.iter().enumerate() {
        if let Some(j) = c.end {
            let a = charts[id].split.as_ref().expect("end cell has a split").a;
            let res: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            let alpha = (res / 2.0).sqrt();
            let scale = alpha.min(0.5 * c.min_rho() / radii[0]);
            excisions[j] = Excision {
                chart_residue: res,
                scale,
            };
        }
    }

    // Nested node sets: the cells outside the largest disks, then annuli.
    let outer: Vec<f64> = excisions.iter().map(|e| radii[0] * e.scale).collect();
    let base_nodes = cells.nodes(&outer, quad);
    let mut interior = vec![interior_on_nodes(&charts, family, &base_nodes)?];
    for i in 1..radii.len() {
        let mut ann = Vec::new();
        for (id, c) in cells.cells.iter().enumerate() {
            if let Some(j) = c.end {
                let s = excisions[j].scale;
                ann.extend(c.annulus_nodes(id, radii[i] * s, radii[i - 1] * s, quad));
            }
        }
        let add = interior_on_nodes(&charts, family, &ann)?;
        interior.push(&interior[i - 1] + add);
    }

    // Counterterms 4 pi sum_j Res_j / rho_j^2 v_k(p_j) v_l(p_j).
    let end_vals: Vec<Vec<f64>> = imm
        .ends
        .iter()
        .map(|e| family.values_at(sphere_point(e.location)))
        .collect();
    let counterterm: Vec<DMatrix<f64>> = radii
        .iter()
        .map(|&r| {
            let mut c = DMatrix::zeros(n, n);
            for (j, ex) in excisions.iter().enumerate() {
                let rho = r * ex.scale;
                let f = 4.0 * std::f64::consts::PI * ex.chart_residue / (rho * rho);
                for k in 0..n {
                    for l in 0..n {
                        c[(k, l)] += f * end_vals[j][k] * end_vals[j][l];
                    }
                }
            }
            c
        })
        .collect();
    let regularized: Vec<DMatrix<f64>> = interior.iter().zip(&counterterm).map(|(a, b)| a - b).collect();

    // Order detection on the entry with the largest variation.
    let mut best = (0, 0, -1.0);
    for k in 0..n {
        for l in k..n {
            let v = (regularized[0][(k, l)] - regularized[radii.len() - 1][(k, l)]).abs();
            if v > best.2 {
                best = (k, l, v);
            }
        }
    }
    let scale_int = interior.last().map_or(0.0, |m| m.amax()) * radii[radii.len() - 1].powi(2);
    let series: Vec<f64> = regularized.iter().map(|q| q[(best.0, best.1)]).collect();
    let noise = 1e-12 * scale_int.max(1e-300) + 1e-14;
    let extrapolation = Extrapolation::fit(radii, &series, noise)?;

    let mut q = DMatrix::zeros(n, n);
    let mut err: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            let vals: Vec<f64> = regularized.iter().map(|r| r[(k, l)]).collect();
            let (v, e) = extrapolation.apply(&vals);
            q[(k, l)] = v;
            err = err.max(e);
        }
    }
    let q = (&q + q.transpose()) * 0.5;
    let spread = err / q.amax().max(1e-8 * scale_int).max(1e-300);
    if spread > 1e-2 && err > 1e-6 {
        return Err(WillmoreError::NoConvergence { spread });
    }
    Ok(QuadraticFormAssembly {
        radii: radii.to_vec(),
        excisions,
        interior,
        counterterm,
        regularized,
        q,
        extrapolation,
        extrapolation_error: err,
    })
}

/// Q(v, v) for a single function.
pub fn q_value(
    imm: &MinimalImmersion,
    v: &dyn SphereFunction,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let a = assemble_q(imm, &FunctionList(vec![v]), radii, quad)?;
    Ok((a.q[(0, 0)], a.extrapolation_error))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub negative_count: usize,
    pub null_count: usize,
    pub index_bound: usize,
    pub verdict: bool,
    pub tol_neg: f64,
}

/// Default negativity threshold: 100 x extrapolation error, floored at 1e-7 x spectral radius.
pub fn default_tol_neg(assembly: &QuadraticFormAssembly, gram: &DMatrix<f64>) -> Result<f64> {
    let ev = generalized_eigenvalues(&assembly.q, gram)?;
    let radius = ev.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    Ok((100.0 * assembly.extrapolation_error).max(1e-7 * radius))
}

/// Eigenvalues of Q c = lambda G c, sorted ascending.
pub fn generalized_eigenvalues(q: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = gram.nrows();
    let gev = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = gev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    if !(lo > 0.0) || hi / lo > 1e8 {
        return Err(WillmoreError::GramIllConditioned(hi / lo));
    }
    let chol = gram.clone().cholesky().ok_or(WillmoreError::GramIllConditioned(hi / lo))?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(WillmoreError::GramIllConditioned(hi / lo))?;
    let c = &linv * q * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

pub fn inertia(
    assembly: &QuadraticFormAssembly,
    gram: &DMatrix<f64>,
    index_bound: usize,
    tol_neg: Option<f64>,
) -> Result<SpectralReport> {
    let eigenvalues = generalized_eigenvalues(&assembly.q, gram)?;
    let tol_neg = match tol_neg {
        Some(t) => t,
        None => default_tol_neg(assembly, gram)?,
    };
    let negative_count = eigenvalues.iter().filter(|&&x| x < -tol_neg).count();
    let null_count = eigenvalues.iter().filter(|&&x| x.abs() <= tol_neg).count();
    Ok(SpectralReport {
        eigenvalues,
        negative_count,
        null_count,
        index_bound,
        verdict: negative_count <= index_bound,
        tol_neg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdOracle {
    pub value: f64,
    pub error: f64,
    pub steps: Vec<f64>,
    pub second_differences: Vec<f64>,
    pub energy: f64,
}

/// d^2/dt^2 W(psi + t v n_psi) at t = 0 by central differences, extrapolated in t^2.
pub fn fd_hessian_oracle(
    imm: &MinimalImmersion,
    v: &dyn SphereFunction,
    steps: &[f64],
    quad: &QuadratureSpec,
) -> Result<FdOracle> {
    if steps.len() < 3 || steps.windows(2).any(|t| !(t[1] < t[0])) {
        return Err(WillmoreError::InvalidInput(
            "oracle steps must be strictly decreasing with at least 3 entries".into(),
        ));
    }
    let psi = invert(imm)?;
    let energy = willmore_energy(&psi, quad)?;
    let nodes = psi.cells.nodes(&vec![0.0; psi.cells.cells.len()], quad);
    let w0 = willmore_on_nodes(&psi, &nodes)?;
    let at = |t: f64| -> Result<f64> {
        let g = NormalGraph { base: &psi, v, t };
        willmore_on_nodes(&g, &nodes).map_err(|e| match e {
            WillmoreError::DegenerateMetric(_) => WillmoreError::ImmersionLost(t),
            other => other,
        })
    };
    let mut d2 = Vec::with_capacity(steps.len());
    for &t in steps {
        let wp = at(t)?;
        let wm = at(-t)?;
        d2.push((wp - 2.0 * w0 + wm) / (t * t));
    }
    // Even in t, so the error is a series in t^2.
    let u: Vec<f64> = steps.iter().map(|t| t * t).collect();
    let ex = Extrapolation::with_order(&u, 1)?;
    let (value, error) = ex.apply(&d2);
    Ok(FdOracle {
        value,
        error,
        steps: steps.to_vec(),
        second_differences: d2,
        energy,
    })
}

/// |Q_{f o mu}(v o mu, v o mu) - Q_f(v, v)|.
pub fn mobius_invariance_check(
    imm: &MinimalImmersion,
    v: &dyn SphereFunction,
    mobius: &Mobius,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let (q0, _) = q_value(imm, v, radii, quad)?;
    let moved = imm.compose(mobius)?;
    let vm = Composed { f: v, mobius: *mobius };
    let (q1, _) = q_value(&moved, &vm, radii, quad)?;
    Ok((q1 - q0).abs())
}
