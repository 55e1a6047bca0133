use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use willmore_cli::config::{ConfigError, RunConfig};
use willmore_cli::pipeline::{self, RunOutput};
use willmore_cli::plots;
use willmore_core::s3::{self, EigenLine, S3Kind, S3MinimalSurface};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "willmore", version, about = "Willmore index of inverted minimal surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a config file and write report.json and CSV tables.
    Run {
        config: PathBuf,
        /// Output directory; overrides output_dir in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print stage timings to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Index of a minimal surface in S^3 from its Jacobi spectrum.
    S3Index {
        #[arg(long, value_enum)]
        surface: Surface,
        /// Laplace eigenvalue cutoff.
        #[arg(long, default_value_t = 6)]
        cutoff: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Surface {
    GreatSphere,
    CliffordTorus,
}

#[derive(Serialize)]
struct S3Output {
    surface: S3MinimalSurface,
    area: f64,
    willmore_energy: f64,
    euler_characteristic: i32,
    cutoff: u32,
    spectrum: Vec<EigenLine>,
    index: usize,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("WILLMORE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("WILLMORE_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    RunConfig::load(path).map_err(|e: ConfigError| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

fn run(config: &Path, out: Option<PathBuf>, trace: bool) -> ExitCode {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    let RunOutput { report, plots: data, timing } = pipeline::run(&cfg, trace);
    let written = write_json(&dir.join("report.json"), &report)
        .and_then(|_| write_json(&dir.join("timing.json"), &timing))
        .map_err(|e| e.to_string())
        .and_then(|_| plots::write_all(&dir, &report, &data).map_err(|e| e.to_string()));
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    for e in &report.errors {
        eprintln!("error in stage {}: {}", e.stage, e.message);
    }
    for (c, o) in report.checks.iter().filter(|(_, o)| !o.pass) {
        eprintln!("check {c:?} failed: {:e} > {:e}", o.value, o.tolerance);
    }
    if !report.errors.is_empty() {
        ExitCode::from(EXIT_NUMERICAL)
    } else if !report.all_checks_pass() {
        ExitCode::from(EXIT_CHECK_FAILED)
    } else {
        ExitCode::SUCCESS
    }
}

fn s3_index(surface: Surface, cutoff: u32) -> ExitCode {
    let surface = S3MinimalSurface::new(match surface {
        Surface::GreatSphere => S3Kind::GreatSphere,
        Surface::CliffordTorus => S3Kind::CliffordTorus,
    });
    let spectrum = s3::jacobi_spectrum(&surface, cutoff);
    let out = S3Output {
        surface,
        area: surface.area(),
        willmore_energy: surface.willmore_energy(),
        euler_characteristic: surface.euler_characteristic(),
        cutoff,
        index: s3::index_from_spectrum(&spectrum),
        spectrum,
    };
    match serde_json::to_string_pretty(&out) {
        Ok(s) => {
            println!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match cli.command {
        Command::Run { config, out, trace } => run(&config, out, trace),
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::S3Index { surface, cutoff } => s3_index(surface, cutoff),
    }
}
