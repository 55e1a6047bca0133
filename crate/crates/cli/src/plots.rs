//! CSV tables for plotting.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::pipeline::{PlotData, RunReport};

#[derive(Serialize)]
struct SummaryRow<'a> {
    key: &'a str,
    value: String,
}

#[derive(Serialize)]
struct EigenRow {
    degree: u32,
    basis_size: usize,
    index: usize,
    eigenvalue: f64,
}

#[derive(Serialize)]
struct QRow {
    radius: f64,
    k: usize,
    interior: f64,
    counterterm: f64,
    regularized: f64,
}

#[derive(Serialize)]
struct BoundaryRow {
    radius: f64,
    circulation: f64,
    fitted: f64,
}

#[derive(Serialize)]
struct TraceRow {
    cell: usize,
    u: f64,
    v: f64,
    weight: f64,
    density: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn summary_rows(report: &RunReport) -> Vec<(String, String)> {
    let mut rows = vec![("seed".to_string(), report.seed.to_string())];
    let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
    push("m", opt(report.immersion.as_ref().map(|i| i.m)));
    push("total_curvature", opt(report.quantization.map(|q| q.total_curvature)));
    push("willmore_of_inversion", opt(report.quantization.map(|q| q.willmore_of_inversion)));
    push("willmore_energy", opt(report.willmore_energy));
    let s = report.spectral.as_ref();
    push("basis_size", opt(s.map(|s| s.basis_size)));
    push("negative_count", opt(s.map(|s| s.report.negative_count)));
    push("null_count", opt(s.map(|s| s.report.null_count)));
    push("index_bound", opt(s.map(|s| s.report.index_bound)));
    push("verdict", opt(report.verdict));
    for (c, o) in &report.checks {
        let name = serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        push(&format!("check_{name}"), if o.pass { "pass" } else { "fail" }.to_string());
    }
    push("errors", report.errors.len().to_string());
    rows
}

/// Writes summary.csv always, the eigenvalue and regularization tables when the
/// data exists, boundary.csv when the boundary fit ran and the quadrature
/// trace when collected. Returns the paths.
pub fn write_all(dir: &Path, report: &RunReport, plots: &PlotData) -> csv::Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let path = dir.join("summary.csv");
    write_rows(
        &path,
        summary_rows(report).iter().map(|(k, v)| SummaryRow { key: k, value: v.clone() }),
    )?;
    written.push(path);

    if !plots.spectra.is_empty() {
        let path = dir.join("eigenvalues.csv");
        write_rows(
            &path,
            plots.spectra.iter().flat_map(|(degree, n, ev)| {
                ev.iter().enumerate().map(move |(index, &eigenvalue)| EigenRow {
                    degree: *degree,
                    basis_size: *n,
                    index,
                    eigenvalue,
                })
            }),
        )?;
        written.push(path);
    }

    if let Some(a) = &plots.assembly {
        let path = dir.join("regularized_q.csv");
        let n = a.q.nrows();
        write_rows(
            &path,
            a.radii.iter().enumerate().flat_map(|(i, &radius)| {
                (0..n).map(move |k| QRow {
                    radius,
                    k,
                    interior: a.interior[i][(k, k)],
                    counterterm: a.counterterm[i][(k, k)],
                    regularized: a.regularized[i][(k, k)],
                })
            }),
        )?;
        written.push(path);
    }

    if let Some(b) = &plots.boundary {
        let path = dir.join("boundary.csv");
        write_rows(
            &path,
            (0..b.radii.len()).map(|i| BoundaryRow {
                radius: b.radii[i],
                circulation: b.circulations[i],
                fitted: b.fitted[i],
            }),
        )?;
        written.push(path);
    }
    if let Some(t) = &plots.trace {
        let path = dir.join("trace_curvature.csv");
        write_rows(
            &path,
            t.iter().map(|s| TraceRow {
                cell: s.cell,
                u: s.w[0],
                v: s.w[1],
                weight: s.weight,
                density: s.density,
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}
