//! Command-line front end: classification, time integration, spectra,
//! resolvent sweeps, the verification ladder, and parameter sweeps.
//!
//! Exit codes: 0 on success (including a red verification verdict,
//! which is a result, not a failure), 1 on validation errors, 2 on
//! numerical failures. Errors print one machine-readable line on
//! standard error: `error[validation]: ...` or `error[numerical]: ...`.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bresse_core::analysis::{predicted_decay, verify_regime, VerifyConfig, VerifyReport};
use bresse_core::discretize::{assemble, Grid, Operator};
use bresse_core::integrate::{simulate, TimeStepConfig};
use bresse_core::model::classify_regime;
use bresse_core::spectral::{resolvent_sweep_with_context, sweep_context};
use bresse_core::{io, Error, Result};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "bresse",
    about = "Numerical laboratory for a damped curved-beam system",
    version
)]
struct Cli {
    /// Flat key = value config file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSV artifacts
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out: PathBuf,

    /// Seed override for randomized initial data
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel sections (defaults to the rayon pool)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Config override, repeatable: --set key=value
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the coefficient regime and its predicted decay law
    Classify,
    /// Integrate in time and write energy.csv
    Simulate,
    /// Write the generator spectrum to spectrum.csv
    Spectrum {
        /// Also dump generator.csv and gram.csv as coordinate triplets
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Sweep resolvent norms and write resolvent.csv
    Resolvent,
    /// Run the full cross-check ladder and write its report
    Verify,
    /// Repeat verify along a grid of one coefficient
    Sweep {
        /// Coefficient to vary (rho1, rho2, k1, k2, k3, l, a0, beta)
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of grid points, endpoints included
        #[arg(long)]
        steps: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = if e.is_validation() {
                ("validation", 1)
            } else {
                ("numerical", 2)
            };
            eprintln!("error[{kind}]: {e}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse_file(path)?,
        None => RunConfig::default(),
    };
    for pair in &cli.sets {
        cfg.apply_set(pair)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.params.validate()?;
    setup_threads(cli.threads)?;
    std::fs::create_dir_all(&cli.out)?;

    match cli.cmd {
        Cmd::Classify => classify(&cfg),
        Cmd::Simulate => run_simulate(&cfg, &cli.out),
        Cmd::Spectrum { dump_matrices } => run_spectrum(&cfg, &cli.out, dump_matrices),
        Cmd::Resolvent => run_resolvent(&cfg, &cli.out),
        Cmd::Verify => run_verify(&cfg, &cli.out).map(|_| ()),
        Cmd::Sweep { param, from, to, steps } => run_sweep(&cfg, &cli.out, &param, from, to, steps),
    }
}

#[cfg(feature = "parallel")]
fn setup_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidParameter {
                name: "threads",
                reason: e.to_string(),
            })?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn setup_threads(threads: Option<usize>) -> Result<()> {
    if threads.is_some() {
        eprintln!("note: built without the parallel feature; --threads ignored");
    }
    Ok(())
}

fn base_operator(cfg: &RunConfig) -> Result<Operator> {
    assemble(&cfg.params, &Grid::new(cfg.n, cfg.params.length)?)
}

fn classify(cfg: &RunConfig) -> Result<()> {
    let regime = classify_regime(&cfg.params)?;
    println!(
        "{}, ell={}, predicted: {}",
        regime.name(),
        regime.ell(),
        predicted_decay(regime)
    );
    Ok(())
}

fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let op = base_operator(cfg)?;
    let mut step_cfg = TimeStepConfig::new(cfg.dt, cfg.t_final);
    step_cfg.record_every = cfg.record_every;
    step_cfg.validate()?;
    let u0 = cfg.initial.build(&cfg.params, op.grid(), cfg.seed)?;
    let result = simulate(&op, &u0, &step_cfg)?;
    let path = out.join("energy.csv");
    io::write_energy_csv(&path, &result.trace)?;
    println!(
        "simulated {} steps to t = {}: E(0) = {:.6e}, E(end) = {:.6e}",
        step_cfg.steps(),
        cfg.t_final,
        result.trace.energies.first().copied().unwrap_or(0.0),
        result.trace.energies.last().copied().unwrap_or(0.0),
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn run_spectrum(cfg: &RunConfig, out: &Path, dump_matrices: bool) -> Result<()> {
    let op = base_operator(cfg)?;
    let report = bresse_core::spectral::eigenvalues(&op)?;
    let path = out.join("spectrum.csv");
    io::write_spectrum_csv(&path, &report)?;
    println!(
        "N = {}, dim = {}: abscissa = {:.6e}, min |Re| = {:.6e}",
        cfg.n,
        report.dim,
        report.abscissa,
        report.min_abs_real()
    );
    println!("wrote {}", path.display());
    if dump_matrices {
        let gen_path = out.join("generator.csv");
        io::write_matrix_triplets(&gen_path, op.generator())?;
        let gram_path = out.join("gram.csv");
        io::write_matrix_triplets(&gram_path, op.gram())?;
        println!("wrote {} and {}", gen_path.display(), gram_path.display());
    }
    Ok(())
}

fn run_resolvent(cfg: &RunConfig, out: &Path) -> Result<()> {
    let op = base_operator(cfg)?;
    let sweep_cfg = cfg.sweep_config(op.grid().h())?;
    let ctx = sweep_context(&op, &sweep_cfg)?;
    let sweep = resolvent_sweep_with_context(&ctx, &sweep_cfg)?;
    let path = out.join("resolvent.csv");
    io::write_resolvent_csv(&path, &sweep)?;
    println!(
        "window [{:.4}, {:.4}] with {} samples ({} excluded): fitted exponent = {:.4} (whole window {:.4})",
        sweep_cfg.lambda_min,
        sweep_cfg.lambda_max,
        sweep.lambdas.len(),
        sweep.excluded.len(),
        sweep.fitted_exponent,
        sweep.full_window_exponent
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn run_verify(cfg: &RunConfig, out: &Path) -> Result<VerifyReport> {
    std::fs::create_dir_all(out)?;
    let h_top = cfg.params.length / (2 * cfg.n + 1) as f64;
    let verify_cfg = VerifyConfig {
        params: cfg.params,
        n_base: cfg.n,
        dt: cfg.dt,
        t_final: cfg.t_final,
        initial: cfg.initial,
        seed: cfg.seed,
        robust: cfg.robust,
        sweep: Some(cfg.sweep_config(h_top)?),
    };
    let report = verify_regime(&verify_cfg)?;
    io::write_report_csv(&out.join("report.csv"), &report)?;
    io::write_energy_csv(&out.join("energy.csv"), &report.trace)?;
    io::write_resolvent_csv(&out.join("resolvent.csv"), &report.sweep)?;
    for (n, spectrum) in &report.spectra {
        io::write_spectrum_csv(&out.join(format!("spectrum_{n}.csv")), spectrum)?;
    }
    println!("{report}");
    println!("wrote report.csv, energy.csv, resolvent.csv, spectrum_{{N}}.csv under {}", out.display());
    Ok(report)
}

/// Runs verify once per grid point of one coefficient; each item owns a
/// subdirectory, and sweep_summary.csv aggregates the verdicts.
fn run_sweep(
    cfg: &RunConfig,
    out: &Path,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<()> {
    const ALLOWED: [&str; 8] = ["rho1", "rho2", "k1", "k2", "k3", "l", "a0", "beta"];
    if !ALLOWED.contains(&param) {
        return Err(Error::InvalidParameter {
            name: "param",
            reason: format!("sweep parameter must be one of {ALLOWED:?}, got `{param}`"),
        });
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: "needs at least one grid point".into(),
        });
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "from",
            reason: format!("sweep range [{from}, {to}] must be finite"),
        });
    }

    let mut summary = String::from("param,value,regime,ell,resolvent_exponent,decay_measured,verdict\n");
    for i in 0..steps {
        let value = if steps == 1 {
            from
        } else {
            from + (to - from) * i as f64 / (steps - 1) as f64
        };
        let mut item_cfg = cfg.clone();
        item_cfg.apply_set(&format!("{param}={value}"))?;
        item_cfg.params.validate()?;
        let item_dir = out.join(format!("{param}_{i:02}"));
        println!("[{}/{steps}] {param} = {value}", i + 1);
        let report = run_verify(&item_cfg, &item_dir)?;
        let decay_row = report
            .rows
            .iter()
            .find(|r| r.check.starts_with("decay_"))
            .expect("ladder always emits a decay row");
        summary.push_str(&format!(
            "{param},{},{},{},{},{},{}\n",
            io::fmt(value),
            report.regime.name(),
            report.regime.ell(),
            io::fmt(report.sweep.fitted_exponent),
            io::fmt(decay_row.measured),
            if report.verdict { "green" } else { "red" }
        ));
    }
    let path = out.join("sweep_summary.csv");
    io::atomic_write(&path, &summary)?;
    println!("wrote {}", path.display());
    Ok(())
}
