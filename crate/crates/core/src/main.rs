use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use dpo_core::fock::build_liouvillian;
use dpo_core::meanfield::classify_phase;
use dpo_core::output::{write_rows, write_table, Format, Metadata};
use dpo_core::params::{dimensionless, reduce, PhysicalParams};
use dpo_core::potential::{classical_tilt, manifold_point, potential_value};
use dpo_core::sweep::{run_sweep, CutoffSpec, Method, SweepSpec};
use dpo_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_STRICT: u8 = 3;

#[derive(Parser)]
#[command(name = "dpo", version, about = "Degenerate parametric oscillator phases and switching times")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy)]
struct Grid(usize, usize);

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once('x').ok_or_else(|| format!("expected <nx>x<ny>, got {s:?}"))?;
        let nx: usize = a.parse().map_err(|_| format!("bad nx in {s:?}"))?;
        let ny: usize = b.parse().map_err(|_| format!("bad ny in {s:?}"))?;
        if nx < 1 || ny < 1 {
            return Err("grid sizes must be >= 1".into());
        }
        Ok(Grid(nx, ny))
    }
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (a, b) = s.split_once(',').unwrap_or((s, "0"));
    let re = a.trim().parse().map_err(|_| format!("bad real part in {s:?}"))?;
    let im = b.trim().parse().map_err(|_| format!("bad imaginary part in {s:?}"))?;
    Ok(Complex64::new(re, im))
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 3 if any row fails to compute.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print reduced and dimensionless parameters.
    Reduce {
        #[arg(long)]
        config: PathBuf,
    },
    /// Region codes over a grid in the complex c plane (0 marks a boundary).
    PhaseMap {
        #[arg(long, default_value = "200x200")]
        grid: Grid,
        #[arg(long, default_value_t = 2.0)]
        extent: f64,
    },
    /// Potential on the tilted manifold over cell centres in (-1, 1)^2.
    PotentialGrid {
        #[arg(long, default_value = "101x101")]
        grid: Grid,
        /// "re,im"
        #[arg(long, default_value = "0.33,0.17", value_parser = parse_complex)]
        c_tilde: Complex64,
        #[arg(long, default_value_t = 3.0)]
        n: f64,
        #[arg(long, default_value_t = 0.01)]
        p: f64,
        /// Tilt angle; defaults to the phase of the classical point.
        #[arg(long)]
        phi: Option<f64>,
    },
    TunnelAnalytic(SweepArgs),
    TunnelFock {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        cutoff: Option<CutoffSpec>,
    },
    /// Analytic and Fock columns side by side.
    Compare {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        cutoff: Option<CutoffSpec>,
    },
    /// Sparse triplet dump of the transition matrix for the config's base point.
    DumpLiouvillian {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cutoff: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
    Strict(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParams(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// A bare parameter object, or the `base` of a sweep config.
fn load_params(path: &Path) -> Result<PhysicalParams, Failure> {
    let v: serde_json::Value = serde_json::from_str(&read(path)?).map_err(|e| Failure::Config(e.to_string()))?;
    let obj = v.get("base").cloned().unwrap_or(v);
    serde_json::from_value(obj).map_err(|e| Failure::Config(e.to_string()))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_fail(e: io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

fn sweep(cli: &Cli, args: &SweepArgs, methods: Vec<Method>, cutoff: Option<CutoffSpec>) -> Result<(), Failure> {
    let mut spec = SweepSpec::from_json(&read(&args.config)?)?;
    spec.methods = methods;
    if let Some(c) = cutoff {
        spec.fock_cutoff = c;
    }
    let rows = run_sweep(&spec)?;
    let meta = Metadata::new()
        .with("config", args.config.display())
        .with("spec", serde_json::to_string(&spec).map_err(|e| Failure::Runtime(e.to_string()))?);
    let out = cli.out.clone().or_else(|| spec.output_path.clone().map(PathBuf::from));
    let mut w = sink(out.as_deref())?;
    write_rows(&rows, cli.format, &meta, &mut w).map_err(io_fail)?;
    w.flush().map_err(io_fail)?;
    let hard = rows.iter().filter(|r| r.hard_failure).count();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("row {}: {}", r.swept_value, r.error.as_deref().unwrap_or_default());
    }
    if args.strict && hard > 0 {
        return Err(Failure::Strict(hard));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Reduce { config } => {
            let p = load_params(config)?;
            let r = reduce(&p)?;
            let dp = dimensionless(&r)?;
            let pairs: Vec<(&str, f64)> = vec![
                ("gamma_re", r.gamma.re),
                ("gamma_im", r.gamma.im),
                ("g_re", r.g.re),
                ("g_im", r.g.im),
                ("gamma2eff", r.gamma2eff),
                ("E", r.e),
                ("n", dp.n),
                ("theta", dp.theta),
                ("c_re", dp.c.re),
                ("c_im", dp.c.im),
                ("c_tilde_re", dp.c_tilde.re),
                ("c_tilde_im", dp.c_tilde.im),
                ("c_bar_re", dp.c_bar.re),
                ("c_bar_im", dp.c_bar.im),
                ("d_re", dp.d.re),
                ("d_im", dp.d.im),
            ];
            let cols: Vec<&str> = pairs.iter().map(|(k, _)| *k).collect();
            let vals = vec![pairs.iter().map(|(_, v)| *v).collect()];
            let meta = Metadata::new()
                .with("config", config.display())
                .with("adiabatic_ok", p.adiabatic_ok());
            let mut w = sink(cli.out.as_deref())?;
            write_table(&cols, &vals, cli.format, &meta, &mut w).map_err(io_fail)?;
            w.flush().map_err(io_fail)
        }
        Cmd::PhaseMap { grid, extent } => {
            let xs = linspace(-extent, *extent, grid.0);
            let ys = linspace(-extent, *extent, grid.1);
            let mut rows = Vec::with_capacity(xs.len() * ys.len());
            for y in &ys {
                for x in &xs {
                    let code = classify_phase(Complex64::new(*x, *y)).map_or(0, |p| p.region.code());
                    rows.push(vec![*x, *y, code as f64]);
                }
            }
            let meta = Metadata::new().with("grid", format!("{}x{}", grid.0, grid.1)).with("extent", extent);
            let mut w = sink(cli.out.as_deref())?;
            write_table(&["c_re", "c_im", "region"], &rows, cli.format, &meta, &mut w).map_err(io_fail)?;
            w.flush().map_err(io_fail)
        }
        Cmd::PotentialGrid { grid, c_tilde, n, p, phi } => {
            if !(*p > 0.0 && *n > 0.0) {
                return Err(Failure::Config("p and n must be > 0".into()));
            }
            let phi = match phi {
                Some(v) => *v,
                None => classical_tilt(*c_tilde)?,
            };
            let centre = |k: usize, m: usize| -1.0 + (2 * k + 1) as f64 / m as f64;
            let zero = Complex64::new(0.0, 0.0);
            let mut rows = Vec::with_capacity(grid.0 * grid.1);
            for j in 0..grid.1 {
                for i in 0..grid.0 {
                    let (x, y) = (centre(i, grid.0), centre(j, grid.1));
                    let v = potential_value(manifold_point(x, y, phi, *p), *c_tilde, *n, zero)?;
                    rows.push(vec![x, y, v.re, v.im]);
                }
            }
            let meta = Metadata::new()
                .with("c_tilde", format!("{},{}", c_tilde.re, c_tilde.im))
                .with("n", n)
                .with("p", p)
                .with("phi", phi);
            let mut w = sink(cli.out.as_deref())?;
            write_table(&["x", "y", "phi_re", "phi_im"], &rows, cli.format, &meta, &mut w).map_err(io_fail)?;
            w.flush().map_err(io_fail)
        }
        Cmd::TunnelAnalytic(args) => sweep(cli, args, vec![Method::Analytic], None),
        Cmd::TunnelFock { sweep: args, cutoff } => sweep(cli, args, vec![Method::Fock], *cutoff),
        Cmd::Compare { sweep: args, cutoff } => sweep(cli, args, vec![Method::Analytic, Method::Fock], *cutoff),
        Cmd::DumpLiouvillian { config, cutoff } => {
            let r = reduce(&load_params(config)?)?;
            let l = build_liouvillian(&r, *cutoff)?;
            let mut w = sink(cli.out.as_deref())?;
            l.write_triplets(&mut w).map_err(io_fail)?;
            w.flush().map_err(io_fail)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Strict(k)) => {
            eprintln!("{k} row(s) failed");
            ExitCode::from(EXIT_STRICT)
        }
    }
}
