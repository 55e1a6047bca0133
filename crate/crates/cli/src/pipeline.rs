//! Runs the stages named by a config and collects a report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use willmore_core::basis::{spanning_monomials, SpherePolynomial, TestBasis};
use willmore_core::chart::Mobius;
use willmore_core::geometry::{end_boundary_fit, invert, sampled_willmore_residual, willmore_energy, BoundaryFit};
use willmore_core::rational::Point;
use willmore_core::variation::{
    assemble_q, fd_hessian_oracle, generalized_eigenvalues, inertia, mobius_invariance_check, q_value, QuadraticFormAssembly, SpectralReport,
};
use willmore_core::weierstrass::{curvature_samples, quantization_report, CurvatureSample, BuildOptions, MinimalImmersion, QuantizationReport, WeierstrassInput};
use willmore_core::{Result, WillmoreError};

use crate::config::{Check, InputSpec, RunConfig};

/// Tolerances of the pass/fail checks.
pub const NULL_TOL: f64 = 1e-10;
pub const QUANTIZATION_REL_TOL: f64 = 1e-3;
pub const ENERGY_AGREEMENT_REL_TOL: f64 = 1e-6;
pub const RESIDUAL_TOL: f64 = 1e-5;
pub const STOKES_REL_TOL: f64 = 1e-2;
pub const ORACLE_REL_TOL: f64 = 1e-3;
pub const ORACLE_ABS_TOL: f64 = 1e-6;
pub const MOBIUS_TOL: f64 = 1e-6;
const RESIDUAL_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndSummary {
    pub location: Point,
    pub residue_vector: [[f64; 2]; 3],
    pub residue_norm: f64,
    pub alpha: f64,
    pub asymptotic_normal: [f64; 3],
    pub planar: bool,
    pub embedded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionSummary {
    pub m: usize,
    pub genus: u32,
    pub null_residual: f64,
    pub ends: Vec<EndSummary>,
}

/// Spectrum of the regularized form at one excision radius, before extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusDiagnostic {
    pub radius: f64,
    pub min_eigenvalue: f64,
    pub negative_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub basis_degree: u32,
    pub basis_size: usize,
    pub extrapolation_order: u32,
    pub observed_order: f64,
    pub extrapolation_error: f64,
    pub per_radius: Vec<RadiusDiagnostic>,
    #[serde(flatten)]
    pub report: SpectralReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDelta {
    pub q: f64,
    pub q_error: f64,
    pub fd: f64,
    pub fd_error: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobiusDeltas {
    pub rotation: f64,
    pub inversion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub immersion: Option<ImmersionSummary>,
    pub quantization: Option<QuantizationReport>,
    pub willmore_energy: Option<f64>,
    pub spectral: Option<SpectralSummary>,
    /// Present iff the assembly and inertia stages succeeded.
    pub verdict: Option<bool>,
    pub oracle: Vec<OracleDelta>,
    pub mobius: Option<MobiusDeltas>,
    pub checks: BTreeMap<Check, CheckOutcome>,
    pub errors: Vec<StageError>,
}

impl RunReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass) && self.verdict != Some(false)
    }
}

/// Data for the plot CSVs.
#[derive(Debug, Clone, Default)]
pub struct PlotData {
    /// (degree, basis size, sorted eigenvalues).
    pub spectra: Vec<(u32, usize, Vec<f64>)>,
    pub assembly: Option<QuadraticFormAssembly>,
    pub boundary: Option<BoundaryFit>,
    /// Per-node quadrature diagnostics, collected under --trace.
    pub trace: Option<Vec<CurvatureSample>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
}

pub struct RunOutput {
    pub report: RunReport,
    pub plots: PlotData,
    pub timing: Timing,
}

fn resolve_input(spec: &InputSpec) -> Result<WeierstrassInput> {
    match spec {
        InputSpec::Data(d) => Ok(d.clone()),
        InputSpec::Catalog { catalog } => catalog.input(),
    }
}

fn summarize(imm: &MinimalImmersion) -> ImmersionSummary {
    ImmersionSummary {
        m: imm.end_count(),
        genus: imm.genus,
        null_residual: imm.null_residual,
        ends: imm
            .ends
            .iter()
            .map(|e| EndSummary {
                location: e.location,
                residue_vector: e.residue_vector.map(|c| [c.re, c.im]),
                residue_norm: e.residue_norm,
                alpha: e.alpha,
                asymptotic_normal: e.asymptotic_normal,
                planar: e.planar,
                embedded: e.embedded,
            })
            .collect(),
    }
}

fn random_field(rng: &mut ChaCha8Rng, degree: u32) -> SpherePolynomial {
    SpherePolynomial::new(
        spanning_monomials(degree)
            .into_iter()
            .map(|e| (rng.gen_range(-1.0..1.0), e))
            .collect(),
    )
}

struct Runner {
    trace: bool,
    report: RunReport,
    timing: Timing,
}

impl Runner {
    /// Runs one stage, recording its time and any error under the stage name.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Option<T> {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        if self.trace {
            eprintln!("[trace] {name}: {secs:.3}s{}", if out.is_err() { " (failed)" } else { "" });
        }
        self.timing.stages.push((name.to_string(), secs));
        match out {
            Ok(v) => Some(v),
            Err(e) => {
                self.report.errors.push(StageError {
                    stage: name.to_string(),
                    message: e.to_string(),
                });
                None
            }
        }
    }

    fn check(&mut self, c: Check, value: f64, tolerance: f64) {
        self.report.checks.insert(
            c,
            CheckOutcome {
                pass: value <= tolerance,
                value,
                tolerance,
            },
        );
    }
}

pub fn run(cfg: &RunConfig, trace: bool) -> RunOutput {
    let mut r = Runner {
        trace,
        report: RunReport {
            seed: cfg.seed,
            ..RunReport::default()
        },
        timing: Timing::default(),
    };
    let mut plots = PlotData::default();
    let wants = |c: Check| cfg.checks.contains(&c);
    let quad = cfg.quadrature;
    let opts = BuildOptions {
        seed: cfg.seed,
        ..BuildOptions::default()
    };

    let Some(imm) = r.stage("build", || resolve_input(&cfg.input)?.build_with(&opts)) else {
        return finish(r, plots);
    };
    r.report.immersion = Some(summarize(&imm));
    let m = imm.end_count();
    if wants(Check::Null) {
        r.check(Check::Null, imm.null_residual, NULL_TOL);
    }

    if trace {
        plots.trace = r.stage("trace", || curvature_samples(&imm, &quad));
    }
    let qr = r.stage("quantization", || quantization_report(&imm, &quad));
    r.report.quantization = qr;
    let psi = r.stage("inversion", || invert(&imm));
    if let Some(psi) = &psi {
        r.report.willmore_energy = r.stage("willmore_energy", || willmore_energy(psi, &quad));
    }
    if wants(Check::Quantization) {
        if let (Some(q), Some(w)) = (qr, r.report.willmore_energy) {
            let target = 4.0 * PI * m as f64;
            let quant = (q.willmore_of_inversion - target).abs() / target;
            let agree = (w - q.willmore_of_inversion).abs() / q.willmore_of_inversion.abs();
            // Normalize both deviations by their tolerances.
            let value = (quant / QUANTIZATION_REL_TOL).max(agree / ENERGY_AGREEMENT_REL_TOL);
            r.check(Check::Quantization, value, 1.0);
        }
    }
    if wants(Check::WillmoreResidual) {
        if let Some(psi) = &psi {
            if let Some(res) = r.stage("willmore_residual", || sampled_willmore_residual(psi, cfg.seed, RESIDUAL_SAMPLES)) {
                r.check(Check::WillmoreResidual, res, RESIDUAL_TOL);
            }
        }
    }

    let basis = r.stage("basis", || TestBasis::new(cfg.basis_degree, &imm.end_locations()));
    let assembly = basis
        .as_ref()
        .and_then(|b| r.stage("assembly", || assemble_q(&imm, b, &cfg.radii_schedule, &quad)));
    if let (Some(b), Some(a)) = (&basis, &assembly) {
        let out = r.stage("inertia", || {
            let rep = inertia(a, &b.gram, m, cfg.tol_neg)?;
            let per_radius = a
                .radii
                .iter()
                .zip(&a.regularized)
                .map(|(&radius, q)| {
                    let ev = generalized_eigenvalues(q, &b.gram)?;
                    Ok(RadiusDiagnostic {
                        radius,
                        min_eigenvalue: ev.iter().copied().fold(f64::INFINITY, f64::min),
                        negative_count: ev.iter().filter(|&&x| x < -rep.tol_neg).count(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((rep, per_radius))
        });
        if let Some((rep, per_radius)) = out {
            r.report.verdict = Some(rep.verdict);
            r.report.spectral = Some(SpectralSummary {
                basis_degree: cfg.basis_degree,
                basis_size: b.len(),
                extrapolation_order: a.extrapolation.order,
                observed_order: a.extrapolation.observed_order,
                extrapolation_error: a.extrapolation_error,
                per_radius,
                report: rep,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field_degree = cfg.basis_degree.min(2);

    if wants(Check::Stokes) {
        let v = random_field(&mut rng, field_degree);
        match &assembly {
            Some(a) => {
                let radii: Vec<f64> = cfg.radii_schedule.iter().map(|x| x * a.excisions[0].scale).collect();
                if let Some(fit) = r.stage("stokes", || end_boundary_fit(&imm, 0, &v, &radii, 256)) {
                    let rel = (fit.leading_coefficient - fit.expected).abs() / fit.expected.abs().max(1e-300);
                    r.check(Check::Stokes, rel, STOKES_REL_TOL);
                    plots.boundary = Some(fit);
                }
            }
            None => {
                r.stage("stokes", || -> Result<()> {
                    Err(WillmoreError::InvalidInput("needs the excision radii of a successful assembly".into()))
                });
            }
        }
    }

    if wants(Check::Oracle) {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for _ in 0..cfg.oracle.samples {
            let v = random_field(&mut rng, field_degree);
            let out = r.stage("oracle", || {
                let (q, q_error) = q_value(&imm, &v, &cfg.radii_schedule, &quad)?;
                let fd = fd_hessian_oracle(&imm, &v, &cfg.oracle.steps, &quad)?;
                Ok(OracleDelta {
                    q,
                    q_error,
                    fd: fd.value,
                    fd_error: fd.error,
                    delta: (fd.value - q).abs(),
                })
            });
            match out {
                Some(d) => {
                    worst = worst.max(d.delta / (ORACLE_REL_TOL * d.q.abs()).max(ORACLE_ABS_TOL));
                    r.report.oracle.push(d);
                }
                None => ok = false,
            }
        }
        if ok {
            r.check(Check::Oracle, worst, 1.0);
        }
    }

    if wants(Check::Mobius) {
        let v = random_field(&mut rng, field_degree);
        let out = r.stage("mobius", || {
            Ok(MobiusDeltas {
                rotation: mobius_invariance_check(&imm, &v, &Mobius::rotation(0.7), &cfg.radii_schedule, &quad)?,
                inversion: mobius_invariance_check(&imm, &v, &Mobius::inversion(), &cfg.radii_schedule, &quad)?,
            })
        });
        if let Some(d) = out {
            r.check(Check::Mobius, d.rotation.max(d.inversion), MOBIUS_TOL);
            r.report.mobius = Some(d);
        }
    }

    // Eigenvalue-vs-basis-size data for the plots.
    if !cfg.checks.is_empty() {
        for d in 0..=cfg.basis_degree {
            if d == cfg.basis_degree {
                if let Some(s) = &r.report.spectral {
                    plots.spectra.push((d, s.basis_size, s.report.eigenvalues.clone()));
                }
                continue;
            }
            let out = r.stage("spectrum_sweep", || {
                let b = TestBasis::new(d, &imm.end_locations())?;
                let a = assemble_q(&imm, &b, &cfg.radii_schedule, &quad)?;
                Ok((b.len(), inertia(&a, &b.gram, m, cfg.tol_neg)?.eigenvalues))
            });
            if let Some((n, ev)) = out {
                plots.spectra.push((d, n, ev));
            }
        }
        plots.assembly = assembly;
    }
    finish(r, plots)
}

fn finish(r: Runner, plots: PlotData) -> RunOutput {
    RunOutput {
        report: r.report,
        plots,
        timing: r.timing,
    }
}
