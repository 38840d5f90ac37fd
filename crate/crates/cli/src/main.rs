//! `hillspec`: command-line front end for the Hill-operator spectral library.
//!
//! Exit codes: 0 success (or PASS), 1 FAIL, 2 INCONCLUSIVE, 64 bad configuration,
//! 65 numerical failure, 74 output error.

mod commands;
mod io;
mod run_config;
mod validate;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hillspec::potential::{parse_complex, PotentialSpec};
use hillspec::HillError;

use commands::Output;
use run_config::{load_potential_file, Format, GridInput, RunConfig};

/// Configuration problems; reported with exit code 64.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "hillspec", version, about = "Floquet spectral analysis of periodic Hill operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet, periodic, antiperiodic spectra and critical points.
    Spectra(Common),
    /// Spectral arcs, gaps and singular points.
    Portrait(Common),
    /// Scalar-type criterion; the exit code encodes the verdict.
    Criterion(Common),
    /// Spectral projection of a test function onto one band.
    Project(ProjectArgs),
    /// Partial eigenfunction expansion over bands 1..=band-max.
    Expand(ExpandArgs),
    /// Green's kernel on a square grid.
    Greens(GreensArgs),
    /// Invariant suite with a pass/fail table.
    Validate(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset potential: zero, mathieu:C, gasymov:G, constant:C (complex values as a+bi).
    #[arg(long, conflicts_with = "potential_file")]
    preset: Option<String>,
    /// JSON potential description ({"fourier": {...}}, {"samples": [...]} or {"preset": "..."}).
    #[arg(long)]
    potential_file: Option<PathBuf>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Integration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory; without it the primary artifact goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Test function as CSV (x, re, im) on a uniform grid over [-N pi, N pi).
    #[arg(long, conflicts_with = "bump")]
    input: Option<PathBuf>,
    /// Gaussian test function "center,width".
    #[arg(long, allow_hyphen_values = true)]
    bump: Option<String>,
    /// Half-width N of the grid in cells of length pi.
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args, Clone)]
struct ProjectArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    band: Option<usize>,
}

#[derive(Args, Clone)]
struct ExpandArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    band_max: Option<usize>,
    /// Expand even when the criterion verdict is FAIL (skips the criterion run).
    #[arg(long)]
    allow_fail: bool,
}

#[derive(Args, Clone)]
struct GreensArgs {
    #[command(flatten)]
    common: Common,
    /// Spectral parameter "re,im" or a complex literal.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Range "x_min,x_max" used for both arguments.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long)]
    points: Option<usize>,
}

fn pair(s: &str, what: &str) -> Result<(f64, f64), ConfigError> {
    let bad = || ConfigError(format!("{what} must look like `a,b`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn base_config(c: &Common) -> Result<RunConfig, ConfigError> {
    let mut rc = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &c.preset {
        rc.potential = PotentialSpec::Preset(p.clone());
    }
    if let Some(p) = &c.potential_file {
        rc.potential = load_potential_file(p)?;
    }
    if let Some(k) = c.kmax {
        rc.k_max = k;
    }
    if let Some(t) = c.tol {
        rc.tolerances.floquet.tol = t;
    }
    if let Some(o) = &c.out {
        rc.out = Some(o.clone());
    }
    if let Some(s) = c.seed {
        rc.seed = s;
    }
    if let Some(f) = c.format {
        rc.format = f;
    }
    Ok(rc)
}

fn apply_grid(rc: &mut RunConfig, g: &GridArgs) -> Result<(), ConfigError> {
    if let Some(p) = &g.input {
        rc.project.input = GridInput::Csv { path: p.clone() };
    }
    if let Some(b) = &g.bump {
        let (center, width) = pair(b, "--bump")?;
        if width <= 0.0 {
            return Err(ConfigError("bump width must be positive".into()));
        }
        rc.project.input = GridInput::Bump { center, width };
    }
    if let Some(n) = g.cells {
        rc.project.n_cells = n;
    }
    Ok(())
}

fn configure(cmd: &Command) -> Result<RunConfig, ConfigError> {
    let mut rc = match cmd {
        Command::Spectra(c) | Command::Portrait(c) | Command::Criterion(c) | Command::Validate(c) => base_config(c)?,
        Command::Project(a) => {
            let mut rc = base_config(&a.common)?;
            apply_grid(&mut rc, &a.grid)?;
            if let Some(b) = a.band {
                rc.project.band = b;
            }
            rc
        }
        Command::Expand(a) => {
            let mut rc = base_config(&a.common)?;
            apply_grid(&mut rc, &a.grid)?;
            if let Some(b) = a.band_max {
                rc.project.band_max = b;
            }
            rc.project.allow_fail |= a.allow_fail;
            rc
        }
        Command::Greens(a) => {
            let mut rc = base_config(&a.common)?;
            if let Some(z) = &a.z {
                let z = match pair(z, "--z") {
                    Ok((re, im)) => [re, im],
                    Err(_) => {
                        let c = parse_complex(z).map_err(|e| ConfigError(e.to_string()))?;
                        [c.re, c.im]
                    }
                };
                rc.greens.z = z;
            }
            if let Some(r) = &a.range {
                let (lo, hi) = pair(r, "--range")?;
                rc.greens.x_min = lo;
                rc.greens.x_max = hi;
            }
            if let Some(p) = a.points {
                rc.greens.points = p;
            }
            rc
        }
    };
    if matches!(cmd, Command::Project(_) | Command::Expand(_)) && rc.project.band == 0 {
        rc.project.band = 1;
    }
    rc.validate()?;
    Ok(rc)
}

fn init_threads() -> Result<(), ConfigError> {
    if let Ok(s) = std::env::var("HILL_THREADS") {
        let n: usize = s.trim().parse().map_err(|_| ConfigError(format!("HILL_THREADS must be a positive integer, got `{s}`")))?;
        if n == 0 {
            return Err(ConfigError("HILL_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cmd: &Command, rc: &RunConfig) -> anyhow::Result<Output> {
    let v = rc.potential()?;
    match cmd {
        Command::Spectra(_) => commands::spectra(rc, &v),
        Command::Portrait(_) => commands::portrait(rc, &v),
        Command::Criterion(_) => commands::criterion(rc, &v),
        Command::Project(_) => commands::project(rc, &v),
        Command::Expand(_) => commands::expand_cmd(rc, &v),
        Command::Greens(_) => commands::greens(rc, &v),
        Command::Validate(_) => {
            let (doc, table) = validate::run(rc.potential.clone(), &v, rc.k_max, rc.seed, &rc.tolerances)?;
            let exit = if doc.failed == 0 { 0 } else { 1 };
            let csv = io::csv_string(
                &["check", "value", "tolerance", "pass"],
                doc.checks.iter().map(|c| vec![c.name.clone(), c.value.to_string(), c.tolerance.to_string(), c.pass.to_string()]),
            )?;
            let summary = format!("{table}{} passed, {} failed", doc.passed, doc.failed);
            Ok(Output { files: vec![("validate.json".into(), io::to_json(&doc)?), ("validate.csv".into(), csv)], json: 0, csv: 1, summary, exit })
        }
    }
}

fn write_out(out: &Output, rc: &RunConfig, is_validate: bool) -> anyhow::Result<()> {
    let text = match &rc.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for (name, body) in &out.files {
                std::fs::write(dir.join(name), body)?;
            }
            std::fs::write(dir.join("run_config.json"), io::to_json(rc)?)?;
            format!("{}\n", out.summary)
        }
        None if is_validate => format!("{}\n", out.summary),
        None => out.primary(rc.format).to_string(),
    };
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        // a closed pipe (`| head`) is not an error for the run itself
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let rc = match init_threads().and_then(|_| configure(&cli.command)) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("error[config]: {e}");
            return ExitCode::from(64);
        }
    };
    let out = match execute(&cli.command, &rc) {
        Ok(o) => o,
        Err(e) => {
            if let Some(c) = e.downcast_ref::<ConfigError>() {
                eprintln!("error[config]: {c}");
                return ExitCode::from(64);
            }
            if let Some(h) = e.downcast_ref::<HillError>() {
                eprintln!("error[{}]: {h}", h.kind());
                return ExitCode::from(65);
            }
            eprintln!("error: {e:#}");
            return ExitCode::from(74);
        }
    };
    if let Err(e) = write_out(&out, &rc, matches!(cli.command, Command::Validate(_))) {
        eprintln!("error[output]: {e:#}");
        return ExitCode::from(74);
    }
    ExitCode::from(out.exit as u8)
}
