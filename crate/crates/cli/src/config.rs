//! Run configuration, read from a JSON file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use willmore_core::catalog::CatalogSurface;
use willmore_core::quadrature::QuadratureSpec;
use willmore_core::variation::DEFAULT_RADII;
use willmore_core::weierstrass::{WeierstrassInput, DEFAULT_SEED};

pub const MAX_BASIS_DEGREE: u32 = 6;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Either a catalog entry or explicit Weierstrass data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Catalog { catalog: CatalogSurface },
    Data(WeierstrassInput),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Null,
    Quantization,
    Stokes,
    Oracle,
    Mobius,
    WillmoreResidual,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Null,
        Check::Quantization,
        Check::Stokes,
        Check::Oracle,
        Check::Mobius,
        Check::WillmoreResidual,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Number of random test fields compared against Q.
    pub samples: usize,
    /// Finite-difference steps, strictly decreasing.
    pub steps: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            samples: 3,
            steps: vec![0.02, 0.01, 0.005, 0.0025],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSpec,
    #[serde(default = "default_degree")]
    pub basis_degree: u32,
    #[serde(default = "default_radii")]
    pub radii_schedule: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "all_checks")]
    pub checks: BTreeSet<Check>,
    /// Seed for every random sample (null-condition points, test fields).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Negativity threshold for the inertia count; derived from the error estimate when absent.
    #[serde(default)]
    pub tol_neg: Option<f64>,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Output directory; the command line overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_degree() -> u32 {
    2
}

fn default_radii() -> Vec<f64> {
    DEFAULT_RADII.to_vec()
}

fn all_checks() -> BTreeSet<Check> {
    Check::ALL.into_iter().collect()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn strictly_decreasing_positive(v: &[f64]) -> bool {
    v.iter().all(|&x| x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.basis_degree > MAX_BASIS_DEGREE {
            return bad(format!(
                "basis_degree {} outside [0, {MAX_BASIS_DEGREE}]",
                self.basis_degree
            ));
        }
        if self.radii_schedule.len() < 4 || !strictly_decreasing_positive(&self.radii_schedule) {
            return bad("radii_schedule needs at least 4 positive, strictly decreasing radii".into());
        }
        let q = &self.quadrature;
        if q.angular_nodes == 0 || q.radial_nodes == 0 || q.core_panels == 0 {
            return bad("quadrature node counts must be positive".into());
        }
        if !(q.panel_ratio > 1.0) || !(q.tolerance > 0.0) {
            return bad("quadrature needs panel_ratio > 1 and tolerance > 0".into());
        }
        if self.checks.contains(&Check::Oracle) {
            if self.oracle.samples == 0 {
                return bad("oracle.samples must be positive".into());
            }
            if self.oracle.steps.len() < 3 || !strictly_decreasing_positive(&self.oracle.steps) {
                return bad("oracle.steps needs at least 3 positive, strictly decreasing steps".into());
            }
        }
        if let InputSpec::Data(data) = &self.input {
            let rationals: Vec<&willmore_core::rational::RationalFunction> = match data {
                WeierstrassInput::Direct { f, .. } => f.iter().collect(),
                WeierstrassInput::Gauss { g, eta, .. } => vec![g, eta],
            };
            if rationals.iter().any(|r| r.denominator.is_zero()) {
                return bad("input has an identically zero denominator".into());
            }
        }
        if let Some(t) = self.tol_neg {
            if !(t >= 0.0) {
                return bad("tol_neg must be nonnegative".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"input": {"catalog": "plane"}}"#).unwrap();
        assert_eq!(cfg.basis_degree, 2);
        assert_eq!(cfg.radii_schedule, DEFAULT_RADII.to_vec());
        assert_eq!(cfg.checks.len(), 6);
        assert_eq!(cfg.input, InputSpec::Catalog { catalog: CatalogSurface::Plane });
    }

    #[test]
    fn inline_gauss_data_parses() {
        let text = r#"{
            "input": {"mode": "gauss",
                      "g": {"numerator": [[0,0],[1,0]], "denominator": [[1,0]]},
                      "eta": {"numerator": [[1,0]], "denominator": [[0,0],[0,0],[1,0]]}},
            "checks": []
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert!(matches!(cfg.input, InputSpec::Data(WeierstrassInput::Gauss { .. })));
        assert!(cfg.checks.is_empty());
    }

    #[test]
    fn rejects_out_of_range_values() {
        for text in [
            r#"{"input": {"catalog": "plane"}, "basis_degree": 9}"#,
            r#"{"input": {"catalog": "plane"}, "radii_schedule": [0.1, 0.2, 0.05, 0.01]}"#,
            r#"{"input": {"catalog": "plane"}, "radii_schedule": [0.2, 0.1, 0.05]}"#,
            r#"{"input": {"catalog": "plane"}, "oracle": {"steps": [0.01, 0.02, 0.005]}}"#,
            r#"{"input": {"catalog": "plane"}, "unknown": 1}"#,
            r#"{"input": {"catalog": "torus"}}"#,
            r#"{"input": {"mode": "direct", "f": [{"numerator": [[1,0]], "denominator": []}, {"numerator": [[1,0]], "denominator": [[1,0]]}, {"numerator": [[1,0]], "denominator": [[1,0]]}]}}"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
    }
}
