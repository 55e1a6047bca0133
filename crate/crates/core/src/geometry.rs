//! Differential-geometric kernels in conformal charts.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::Mobius;
use crate::error::{Result, WillmoreError};
use crate::jet::{cross, dot, CJet, Jet};
use crate::quadrature::{CellDecomposition, Node, QuadratureSpec};
use crate::weierstrass::{ChartedImmersion, LocalMinimal, MinimalImmersion};

type C64 = Complex64;

/// Number of Taylor coefficients needed for position jets of the given order
/// plus one extra derivative.
fn taylor_len(order: usize) -> usize {
    order + 3
}

/// Geometric data of the minimal immersion at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePointFrame {
    pub position: [f64; 3],
    pub e1: [f64; 3],
    pub e2: [f64; 3],
    pub normal: [f64; 3],
    pub conformal_factor: f64,
    /// Second fundamental form in chart coordinates.
    pub second_fundamental_form: [[f64; 2]; 2],
    pub mean_curvature: f64,
    pub gauss_curvature: f64,
}

/// Frame at a finite point of the global chart.
pub fn frame_at(imm: &MinimalImmersion, z: C64) -> Result<SurfacePointFrame> {
    frame_in_chart(&imm.chart(Mobius::identity()), z)
}

/// Frame at w in the given chart, in closed form from f, f', f''.
pub fn frame_in_chart(ch: &ChartedImmersion, w: C64) -> Result<SurfacePointFrame> {
    let l = ch.local(w, 3)?;
    let f0 = l.value();
    let f1 = l.derivative(1);
    let f2 = l.derivative(2);
    let i = C64::new(0.0, 1.0);
    let position = f0.map(|c| c.re);
    let e1 = f1.map(|c| c.re);
    let e2 = f1.map(|c| (i * c).re);
    let n = crate::weierstrass::cross3(e1, e2);
    let nn = crate::weierstrass::norm3(n);
    let normal = n.map(|x| x / nn);
    let xx = f2.map(|c| c.re);
    let xy = f2.map(|c| (i * c).re);
    let yy = f2.map(|c| -c.re);
    let d = crate::weierstrass::dot3;
    let s = [[d(xx, normal), d(xy, normal)], [d(xy, normal), d(yy, normal)]];
    let e2l = 0.5 * f1.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let h = (s[0][0] + s[1][1]) / (2.0 * e2l);
    let k = (s[0][0] * s[1][1] - s[0][1] * s[1][0]) / (e2l * e2l);
    Ok(SurfacePointFrame {
        position,
        e1,
        e2,
        normal,
        conformal_factor: e2l,
        second_fundamental_form: s,
        mean_curvature: h,
        gauss_curvature: k,
    })
}

/// Kind of a scalar field, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    ChartPolynomial,
    SpherePolynomial,
    Composite,
    Custom,
}

/// A real function of the chart coordinate with jets up to order 4.
pub trait ScalarField: Sync {
    fn jet(&self, w: C64, order: usize) -> Result<Jet>;
    fn kind(&self) -> FieldKind;
}

/// A real function on the round sphere, evaluable in any Moebius chart.
pub trait SphereFunction: Sync {
    /// Jets of v(mobius(w)).
    fn jet_in_chart(&self, chart: &Mobius, w: C64, order: usize) -> Jet;
    /// Value at a point of the unit sphere.
    fn value_at(&self, s: [f64; 3]) -> f64;
}

/// Polynomial sum c x1^a x2^b in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPolynomial {
    pub terms: Vec<(f64, u32, u32)>,
}

impl ChartPolynomial {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Self {
        Self { terms }
    }

    /// Evaluates on arbitrary coordinate jets.
    pub fn eval_jets(&self, x: Jet, y: Jet) -> Jet {
        let mut out = Jet::zero(x.order().min(y.order()));
        for &(c, a, b) in &self.terms {
            out += (x.powi(a) * y.powi(b)).scale(c);
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, a, b)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum()
    }
}

impl ScalarField for ChartPolynomial {
    fn jet(&self, w: C64, order: usize) -> Result<Jet> {
        Ok(self.eval_jets(Jet::var_x(w.re, order), Jet::var_y(w.im, order)))
    }
    fn kind(&self) -> FieldKind {
        FieldKind::ChartPolynomial
    }
}

/// A sphere function seen through a chart.
pub struct OnChart<'a> {
    pub f: &'a dyn SphereFunction,
    pub chart: Mobius,
}

impl ScalarField for OnChart<'_> {
    fn jet(&self, w: C64, order: usize) -> Result<Jet> {
        Ok(self.f.jet_in_chart(&self.chart, w, order))
    }
    fn kind(&self) -> FieldKind {
        FieldKind::SpherePolynomial
    }
}

/// A field given by a jet-valued closure.
pub struct CustomField<F: Fn(C64, usize) -> Result<Jet> + Sync>(pub F);

impl<F: Fn(C64, usize) -> Result<Jet> + Sync> ScalarField for CustomField<F> {
    fn jet(&self, w: C64, order: usize) -> Result<Jet> {
        (self.0)(w, order)
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Custom
    }
}

/// w = |X|^2 v for the minimal immersion in a chart.
pub struct Composite<'a> {
    pub chart: &'a ChartedImmersion,
    pub v: &'a dyn ScalarField,
}

impl ScalarField for Composite<'_> {
    fn jet(&self, w: C64, order: usize) -> Result<Jet> {
        let l = self.chart.local(w, taylor_len(order))?;
        let x = l.position_jets(order);
        Ok(dot(&x, &x) * self.v.jet(w, order)?)
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Composite
    }
}

pub fn composite_w<'a>(chart: &'a ChartedImmersion, v: &'a dyn ScalarField) -> Composite<'a> {
    Composite { chart, v }
}

/// e^{-2 lambda} times the flat Laplacian of the field.
pub fn laplace_beltrami(field: &dyn ScalarField, ch: &ChartedImmersion, w: C64) -> Result<f64> {
    let l = ch.local(w, 3)?;
    let e2l = l.conformal_factor(0).value();
    Ok(field.jet(w, 2)?.laplacian() / e2l)
}

/// Jets of the one-form (Delta_g w + 2 K w) *dw - 1/2 *d|dw|^2_g as (dx1, dx2) coefficients.
pub fn boundary_one_form_jets(
    ch: &ChartedImmersion,
    field: &dyn ScalarField,
    w: C64,
    order: usize,
) -> Result<[Jet; 2]> {
    let l = ch.local(w, order + 4)?;
    let wj = field.jet(w, order + 2)?;
    let e2l = l.conformal_factor(order + 1);
    let inv = e2l.recip();
    let kdens = l.curvature_density(order);
    let wx = wj.dx();
    let wy = wj.dy();
    let lap = wx.dx() + wy.dy();
    // (Delta_g w + 2 K w) = e^{-2 lambda} (lap + 2 K e^{2 lambda} w)
    let coeff = (lap + kdens * wj.truncate(order) * 2.0) * inv.truncate(order);
    let h = (wx * wx + wy * wy) * inv;
    let hx = h.dx();
    let hy = h.dy();
    let w1 = -(coeff * wy.truncate(order)) + hy * 0.5;
    let w2 = coeff * wx.truncate(order) - hx * 0.5;
    Ok([w1, w2])
}

pub fn boundary_one_form(ch: &ChartedImmersion, field: &dyn ScalarField, w: C64) -> Result<[f64; 2]> {
    let j = boundary_one_form_jets(ch, field, w, 0)?;
    Ok([j[0].value(), j[1].value()])
}

/// Line integral of the one-form over |w - center| = r, counterclockwise in the chart.
pub fn circulation(
    ch: &ChartedImmersion,
    field: &dyn ScalarField,
    center: C64,
    r: f64,
    n: usize,
) -> Result<f64> {
    let h = std::f64::consts::TAU / n as f64;
    let vals: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * h;
            let (s, c) = t.sin_cos();
            let w = center + C64::new(r * c, r * s);
            let om = boundary_one_form(ch, field, w)?;
            Ok((om[0] * (-r * s) + om[1] * (r * c)) * h)
        })
        .collect();
    Ok(vals?.iter().sum())
}

/// The field |x|^2 v(x / |x|^2) on the chart, i.e. v read in the inverted coordinate.
pub struct InvertedPolynomial<'a>(pub &'a ChartPolynomial);

impl ScalarField for InvertedPolynomial<'_> {
    fn jet(&self, w: C64, order: usize) -> Result<Jet> {
        let x = Jet::var_x(w.re, order);
        let y = Jet::var_y(w.im, order);
        let r2 = x * x + y * y;
        let inv = r2.recip();
        Ok(r2 * self.0.eval_jets(x * inv, y * inv))
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Custom
    }
}

/// Least-squares fit of circulations c(r) = a x(r) + b, with x = r^2 around the
/// end at infinity of a flat chart and x = rho^-2 in an end chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFit {
    pub radii: Vec<f64>,
    pub circulations: Vec<f64>,
    /// Fitted values a x(r) + b at each radius.
    pub fitted: Vec<f64>,
    pub leading_coefficient: f64,
    pub constant: f64,
    /// Predicted leading coefficient.
    pub expected: f64,
}

fn fit_leading(radii: &[f64], circulations: Vec<f64>, x: impl Fn(f64) -> f64, expected: f64) -> Result<BoundaryFit> {
    let m = nalgebra::DMatrix::from_fn(radii.len(), 2, |i, j| if j == 0 { x(radii[i]) } else { 1.0 });
    let b = nalgebra::DVector::from_column_slice(&circulations);
    let sol = m
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| WillmoreError::InvalidInput(e.into()))?;
    Ok(BoundaryFit {
        radii: radii.to_vec(),
        fitted: radii.iter().map(|&r| sol[0] * x(r) + sol[1]).collect(),
        circulations,
        leading_coefficient: sol[0],
        constant: sol[1],
        expected,
    })
}

/// Circulations of the one-form of w = |x|^2 v(x/|x|^2) over |x| = r, oriented
/// as the boundary of the end at infinity; the leading term is -8 pi v(0)^2 r^2.
pub fn boundary_expansion_fit(ch: &ChartedImmersion, v: &ChartPolynomial, radii: &[f64], n: usize) -> Result<BoundaryFit> {
    let field = InvertedPolynomial(v);
    let circulations = radii
        .iter()
        .map(|&r| circulation(ch, &field, C64::new(0.0, 0.0), r, n).map(|c| -c))
        .collect::<Result<Vec<f64>>>()?;
    let v0 = v.eval(0.0, 0.0);
    fit_leading(radii, circulations, |r| r * r, -8.0 * std::f64::consts::PI * v0 * v0)
}

/// The same expansion in the chart centered at end j, for w = |X|^2 v with v a
/// sphere function: counterclockwise circulations over |w| = rho behave like
/// -4 pi |A|^2 v(p_j)^2 / rho^2, where A/w is the singular part of f.
pub fn end_boundary_fit(
    imm: &MinimalImmersion,
    j: usize,
    v: &dyn SphereFunction,
    radii: &[f64],
    n: usize,
) -> Result<BoundaryFit> {
    let ch = imm.end_chart(j);
    let on = OnChart { f: v, chart: ch.mobius };
    let field = composite_w(&ch, &on);
    let circulations = radii
        .iter()
        .map(|&r| circulation(&ch, &field, C64::new(0.0, 0.0), r, n))
        .collect::<Result<Vec<f64>>>()?;
    let res: f64 = ch.split.as_ref().map_or(0.0, |s| s.a.iter().map(|x| x.norm_sqr()).sum());
    let vp = v.value_at(crate::chart::sphere_point(imm.ends[j].location));
    fit_leading(radii, circulations, |r| 1.0 / (r * r), -4.0 * std::f64::consts::PI * res * vp * vp)
}

/// Density of d(omega) = d1 omega2 - d2 omega1 at w.
pub fn boundary_form_exterior_derivative(
    ch: &ChartedImmersion,
    field: &dyn ScalarField,
    w: C64,
) -> Result<f64> {
    let j = boundary_one_form_jets(ch, field, w, 1)?;
    Ok(j[1].deriv(1, 0) - j[0].deriv(0, 1))
}

/// First and second fundamental forms of a parametrized surface.
#[derive(Debug, Clone, Copy)]
pub struct Forms {
    pub e: Jet,
    pub f: Jet,
    pub g: Jet,
    pub l: Jet,
    pub m: Jet,
    pub n: Jet,
    pub normal: [Jet; 3],
    pub det: Jet,
}

/// Fundamental forms from position jets of order k (metric order k-1, second form k-2).
pub fn forms(x: &[Jet; 3]) -> Result<Forms> {
    let xu: [Jet; 3] = std::array::from_fn(|i| x[i].dx());
    let xv: [Jet; 3] = std::array::from_fn(|i| x[i].dy());
    let e = dot(&xu, &xu);
    let f = dot(&xu, &xv);
    let g = dot(&xv, &xv);
    let det = e * g - f * f;
    let tr = e.value() + g.value();
    if !(det.value() > 1e-14 * tr * tr) {
        return Err(WillmoreError::DegenerateMetric(det.value()));
    }
    let c = cross(&xu, &xv);
    let inv = det.sqrt().recip();
    let normal: [Jet; 3] = std::array::from_fn(|i| c[i] * inv);
    let xuu: [Jet; 3] = std::array::from_fn(|i| xu[i].dx());
    let xuv: [Jet; 3] = std::array::from_fn(|i| xu[i].dy());
    let xvv: [Jet; 3] = std::array::from_fn(|i| xv[i].dy());
    Ok(Forms {
        e,
        f,
        g,
        l: dot(&xuu, &normal),
        m: dot(&xuv, &normal),
        n: dot(&xvv, &normal),
        normal,
        det,
    })
}

impl Forms {
    pub fn mean_curvature(&self) -> Jet {
        (self.l * self.g - self.m * self.f * 2.0 + self.n * self.e) / (self.det * 2.0)
    }

    pub fn gauss_curvature(&self) -> Jet {
        (self.l * self.n - self.m * self.m) / self.det
    }

    /// Laplace-Beltrami of u at the base point; u needs order 2, the metric order 1.
    pub fn laplace_beltrami(&self, u: &Jet) -> f64 {
        let sq = self.det.truncate(1).sqrt();
        let invdet = self.det.truncate(1).recip();
        let (e, f, g) = (self.e.truncate(1), self.f.truncate(1), self.g.truncate(1));
        let ux = u.dx();
        let uy = u.dy();
        let a = (g * ux - f * uy) * invdet * sq;
        let b = (e * uy - f * ux) * invdet * sq;
        (a.deriv(1, 0) + b.deriv(0, 1)) / sq.value()
    }
}

/// A surface given by position jets in a single chart.
pub trait ParametricSurface: Sync {
    fn position_jets(&self, w: C64, order: usize) -> Result<[Jet; 3]>;
}

impl ParametricSurface for ChartedImmersion {
    fn position_jets(&self, w: C64, order: usize) -> Result<[Jet; 3]> {
        Ok(self.local(w, taylor_len(order))?.position_jets(order))
    }
}

pub fn mean_curvature_of(s: &dyn ParametricSurface, w: C64) -> Result<f64> {
    let x = s.position_jets(w, 2)?;
    Ok(forms(&x)?.mean_curvature().value())
}

/// |Delta_g H + 2 H (H^2 - K)| from order-4 jets.
pub fn willmore_residual(s: &dyn ParametricSurface, w: C64) -> Result<f64> {
    let x = s.position_jets(w, 4)?;
    let fm = forms(&x)?;
    let h = fm.mean_curvature();
    let k = fm.gauss_curvature().value();
    let hv = h.value();
    Ok((fm.laplace_beltrami(&h) + 2.0 * hv * (hv * hv - k)).abs())
}

/// A surface covered by the cells of a decomposition, one chart per cell.
pub trait ChartedSurface: Sync {
    fn cells(&self) -> &CellDecomposition;
    fn cell_jets(&self, cell: usize, w: C64, order: usize) -> Result<[Jet; 3]>;
}

/// One cell of a charted surface as a parametric surface.
pub struct CellView<'a, S: ChartedSurface + ?Sized> {
    pub surface: &'a S,
    pub cell: usize,
}

impl<S: ChartedSurface + ?Sized> ParametricSurface for CellView<'_, S> {
    fn position_jets(&self, w: C64, order: usize) -> Result<[Jet; 3]> {
        self.surface.cell_jets(self.cell, w, order)
    }
}

/// The inversion psi = X / |X|^2 of a minimal immersion.
#[derive(Debug, Clone)]
pub struct InvertedSurface {
    pub cells: CellDecomposition,
    pub charts: Vec<ChartedImmersion>,
    pub global: ChartedImmersion,
    pub min_norm_sqr: f64,
}

pub fn invert(imm: &MinimalImmersion) -> Result<InvertedSurface> {
    let cells = CellDecomposition::new(&imm.end_locations());
    let charts: Vec<ChartedImmersion> = cells.cells.iter().map(|c| imm.chart(c.chart)).collect();
    let coarse = QuadratureSpec {
        angular_nodes: 12,
        radial_nodes: 8,
        core_panels: 3,
        ..Default::default()
    };
    let nodes = cells.nodes(&vec![0.0; imm.end_count()], &coarse);
    let mut min_norm: f64 = nodes
        .par_iter()
        .map(|n| {
            let ch = &charts[n.cell];
            if ch.split.is_some() && n.w.norm() < 0.5 * cells.cells[n.cell].min_rho() {
                return f64::INFINITY;
            }
            let x = ch.position(n.w);
            x.iter().map(|c| c * c).sum::<f64>()
        })
        .reduce(|| f64::INFINITY, f64::min);
    // Refine the minimum locally from the best grid points.
    min_norm = min_norm.min(refine_min_norm(&charts, &cells, &nodes));
    if min_norm < 1e-8 {
        return Err(WillmoreError::OriginOnSurface(min_norm));
    }
    Ok(InvertedSurface {
        cells,
        charts,
        global: imm.chart(Mobius::identity()),
        min_norm_sqr: min_norm,
    })
}

fn refine_min_norm(charts: &[ChartedImmersion], cells: &CellDecomposition, nodes: &[Node]) -> f64 {
    let norm = |cell: usize, w: C64| {
        let x = charts[cell].position(w);
        x.iter().map(|c| c * c).sum::<f64>()
    };
    let mut scored: Vec<(f64, usize, C64)> = nodes
        .iter()
        .filter(|n| !(charts[n.cell].split.is_some() && n.w.norm() < 0.5 * cells.cells[n.cell].min_rho()))
        .map(|n| (norm(n.cell, n.w), n.cell, n.w))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best = f64::INFINITY;
    for &(v0, cell, w0) in scored.iter().take(8) {
        let (mut w, mut v, mut step) = (w0, v0, 1e-2 * (1.0 + w0.norm()));
        for _ in 0..200 {
            let mut moved = false;
            for d in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
                let cand = w + d * step;
                if charts[cell].pole_distance(cand) < 1e-6 {
                    continue;
                }
                let vc = norm(cell, cand);
                if vc < v {
                    v = vc;
                    w = cand;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best = best.min(v);
    }
    best
}

impl InvertedSurface {
    /// Position jets of psi in the chart of `cell`.
    pub fn jets_in_chart(&self, cell: usize, w: C64, order: usize) -> Result<[Jet; 3]> {
        let ch = &self.charts[cell];
        match &ch.split {
            Some(split) => {
                // psi = (P + rho ReB)/(a2 + 2<P, ReB> + rho |ReB|^2), P = Re(A conj(w)).
                let x = Jet::var_x(w.re, order);
                let y = Jet::var_y(w.im, order);
                let rho = x * x + y * y;
                let mut a2 = 0.0;
                let mut p: [Jet; 3] = [Jet::zero(order); 3];
                let mut rb: [Jet; 3] = [Jet::zero(order); 3];
                for j in 0..3 {
                    let a = split.a[j];
                    a2 += 0.5 * a.norm_sqr();
                    p[j] = x * a.re + y * a.im;
                    let t = split.b[j].taylor(w, order + 1);
                    rb[j] = CJet::holomorphic(&t, order).re;
                }
                let den = dot(&p, &rb) * 2.0 + rho * dot(&rb, &rb) + a2;
                let inv = den.recip();
                Ok(std::array::from_fn(|j| (p[j] + rho * rb[j]) * inv))
            }
            None => {
                let x = ch.position_jets(w, order)?;
                let inv = dot(&x, &x).recip();
                Ok(std::array::from_fn(|j| x[j] * inv))
            }
        }
    }

    /// psi at a point of the global chart (away from ends).
    pub fn position(&self, z: C64) -> [f64; 3] {
        let x = self.global.position(z);
        let n = x.iter().map(|c| c * c).sum::<f64>();
        x.map(|c| c / n)
    }

    /// The cell containing a global point and its chart coordinate.
    pub fn locate(&self, z: crate::rational::Point) -> (usize, C64) {
        let mut best = (0, C64::new(0.0, 0.0), f64::INFINITY);
        for (i, c) in self.cells.cells.iter().enumerate() {
            if let Some(w) = c.chart.inverse().apply(z).finite() {
                let r = w.norm() / c.rho(w.arg());
                if r < best.2 {
                    best = (i, w, r);
                }
            }
        }
        (best.0, best.1)
    }
}

impl ChartedSurface for InvertedSurface {
    fn cells(&self) -> &CellDecomposition {
        &self.cells
    }
    fn cell_jets(&self, cell: usize, w: C64, order: usize) -> Result<[Jet; 3]> {
        self.jets_in_chart(cell, w, order)
    }
}

/// Global-chart view of psi at finite points away from the ends.
impl ParametricSurface for InvertedSurface {
    fn position_jets(&self, z: C64, order: usize) -> Result<[Jet; 3]> {
        let x = self.global.position_jets(z, order)?;
        let inv = dot(&x, &x).recip();
        Ok(std::array::from_fn(|j| x[j] * inv))
    }
}

/// Integral of H^2 dA over a charted surface at the given rule.
/// Max Willmore-equation residual of the inverted surface at `n` seeded uniform points.
pub fn sampled_willmore_residual(psi: &InvertedSurface, seed: u64, n: usize) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let (cell, w) = psi.locate(crate::weierstrass::random_sphere_point(&mut rng));
        worst = worst.max(willmore_residual(&CellView { surface: psi, cell }, w)?);
    }
    Ok(worst)
}

/// Refinement levels tried before giving up.
pub const MAX_REFINEMENTS: usize = 3;

fn willmore_sum(s: &dyn ChartedSurface, spec: &QuadratureSpec) -> Result<f64> {
    let nodes = s.cells().nodes(&vec![0.0; s.cells().cells.len()], spec);
    willmore_on_nodes(s, &nodes)
}

pub(crate) fn willmore_on_nodes(s: &dyn ChartedSurface, nodes: &[Node]) -> Result<f64> {
    nodes
        .par_iter()
        .map(|n| {
            let x = s.cell_jets(n.cell, n.w, 2)?;
            let fm = forms(&x)?;
            let h = fm.mean_curvature().value();
            Ok(n.weight * h * h * fm.det.value().sqrt())
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.iter().sum())
}

/// Willmore energy, refining until two successive rules agree.
pub fn willmore_energy(s: &dyn ChartedSurface, spec: &QuadratureSpec) -> Result<f64> {
    let mut spec = *spec;
    let mut prev = willmore_sum(s, &spec)?;
    let mut err = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        spec = spec.refined();
        let next = willmore_sum(s, &spec)?;
        err = (next - prev).abs();
        if err <= spec.tolerance * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(WillmoreError::QuadratureNotConverged { estimate: prev, error: err })
}

/// The normal graph psi + t v n of a charted surface.
pub struct NormalGraph<'a> {
    pub base: &'a dyn ChartedSurface,
    pub v: &'a dyn SphereFunction,
    pub t: f64,
}

impl ChartedSurface for NormalGraph<'_> {
    fn cells(&self) -> &CellDecomposition {
        self.base.cells()
    }
    fn cell_jets(&self, cell: usize, w: C64, order: usize) -> Result<[Jet; 3]> {
        let x = self.base.cell_jets(cell, w, order + 1)?;
        let fm = forms(&x)?;
        let chart = self.base.cells().cells[cell].chart;
        let v = self.v.jet_in_chart(&chart, w, order);
        let out: [Jet; 3] = std::array::from_fn(|i| x[i].truncate(order) + fm.normal[i] * v * self.t);
        Ok(out)
    }
}

/// Residual of the harmonic map equation for the Gauss map in a chart: |Delta N + |dN|^2 N|.
pub fn gauss_map_harmonic_residual(ch: &ChartedImmersion, w: C64) -> Result<f64> {
    let x = ch.position_jets(w, 3)?;
    let fm = forms(&x)?;
    let n = fm.normal;
    let mut grad = 0.0;
    for c in &n {
        let g = c.gradient();
        grad += g[0] * g[0] + g[1] * g[1];
    }
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for c in &n {
        let r = c.laplacian() + grad * c.value();
        res = res.max(r.abs());
        scale = scale.max(c.laplacian().abs());
    }
    Ok(res / scale.max(grad).max(1e-300))
}

/// Local minimal data helper exposed for diagnostics.
pub fn local_data(ch: &ChartedImmersion, w: C64, order: usize) -> Result<LocalMinimal> {
    ch.local(w, taylor_len(order))
}

/// |grad h|^2 of the graph representation of end `j` over its asymptotic plane
/// at horizontal distance `r`, maximized over angles. Equals tan^2 of the angle
/// between the normal and the asymptotic normal; g - delta = dh (x) dh in graph coordinates.
pub fn end_graph_slope(imm: &MinimalImmersion, j: usize, r: f64) -> Result<f64> {
    let end = &imm.ends[j];
    let ch = imm.end_chart(j);
    let n0 = end.asymptotic_normal;
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let w = C64::from_polar(end.alpha / r, 0.3 + std::f64::consts::TAU * k as f64 / 8.0);
        let n = frame_in_chart(&ch, w)?.normal;
        let s = crate::weierstrass::norm3(crate::weierstrass::cross3(n, n0));
        let c = crate::weierstrass::dot3(n, n0);
        worst = worst.max((s / c).powi(2));
    }
    Ok(worst)
}
