mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use expflow::gronwall::{certify, RateCertificate, TimeProfile};
use expflow::sweep::{report, run_sweep, Check, ProfileSet, SweepConfig, SweepRecord};
use expflow::{Error, Result};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "expflow",
    version,
    about = "Inviscid-limit checks and certified rates for 2D flows on the torus"
)]
struct Cli {
    /// JSON input: sweep config, profiles file, or report directory depending on the command
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; summary.json is written here
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Grid size n (power of two)
    #[arg(long, global = true, default_value_t = 64)]
    grid: usize,
    /// Override the command's main tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Duality, Luxemburg norm, embedding and log-interpolation checks on random data
    OrliczCheck {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        fields: usize,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
    },
    /// Symmetric-gradient identity residual on Taylor–Green and random fields
    IdentityCheck {
        #[arg(long, default_value_t = 20)]
        fields: usize,
    },
    /// Euler energy conservation and the mollified energy balance along an ε ladder
    EnergyBalance {
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long, default_value_t = 3)]
        modes: usize,
    },
    /// Viscosity sweep against an Euler reference, with certificate and rate fit
    ViscSweep,
    /// Certify a rate from a profiles JSON file (as written by visc-sweep)
    CertifyRate,
    /// Rebuild CSV/JSON reports from records.json and certificate.json
    Report,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    passed: bool,
    checks: &'a [Check],
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn require_config(cli: &Cli, what: &str) -> Result<PathBuf> {
    cli.config
        .clone()
        .ok_or_else(|| Error::Config(format!("--config is required for {what}")))
}

fn revalidate(p: &TimeProfile) -> Result<TimeProfile> {
    TimeProfile::new(p.times().to_vec(), p.values().to_vec())
}

fn execute(cli: &Cli) -> Result<(&'static str, Vec<Check>)> {
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::OrliczCheck { samples, fields, pairs } => {
            let opts = suites::OrliczOptions {
                grid: cli.grid,
                seed: cli.seed,
                tol: cli.tol.unwrap_or(expflow::orlicz::DEFAULT_TOL),
                samples: *samples,
                fields: *fields,
                pairs: *pairs,
            };
            Ok(("orlicz-check", suites::orlicz(&opts)?))
        }
        Command::IdentityCheck { fields } => Ok((
            "identity-check",
            suites::identity(cli.grid, cli.seed, cli.tol.unwrap_or(1e-9), *fields)?,
        )),
        Command::EnergyBalance { t_end, modes } => {
            let opts = suites::EnergyOptions {
                grid: cli.grid,
                seed: cli.seed,
                tol: cli.tol.unwrap_or(1e-7),
                t_end: *t_end,
                modes: *modes,
            };
            Ok(("energy-balance", suites::energy(&opts)?))
        }
        Command::ViscSweep => {
            let mut cfg = match &cli.config {
                Some(path) => SweepConfig::from_json_file(path)?,
                None => SweepConfig::taylor_green(cli.grid, 1.0, vec![1e-1, 1e-2, 1e-3, 1e-4]),
            };
            if let Some(tol) = cli.tol {
                cfg.tolerances.ineq = tol;
            }
            let outdir = cfg.output_dir.clone().unwrap_or_else(|| cli.out.clone());
            let outcome = run_sweep(&cfg)?;
            fs::create_dir_all(&outdir)?;
            outcome.write(&outdir)?;
            for r in &outcome.records {
                eprintln!(
                    "nu = {:.1e}  sup dist = {:.6e}  min slack = {:.3e}  log10 bound = {:.4e}",
                    r.nu, r.sup_rel_dist, r.min_slack, r.log10_certified_bound
                );
            }
            Ok(("visc-sweep", outcome.checks()?))
        }
        Command::CertifyRate => {
            let path = require_config(cli, "certify-rate")?;
            let set: ProfileSet = read_json(&path)?;
            let (f, g, h) = (revalidate(&set.f)?, revalidate(&set.g)?, revalidate(&set.h)?);
            let cert = certify(&f, &g, &h, set.sigma, set.t_end)?;
            write_json(&cli.out.join("certificate.json"), &cert)?;
            let detail = format!(
                "N = {}, log10 M = {:.4e}, nu_bar = {:.3e}",
                cert.n_windows, cert.log10_big_m, cert.nu_bar
            );
            Ok((
                "certify-rate",
                vec![Check::new("certificate", cert.log10_big_m.is_finite(), detail)],
            ))
        }
        Command::Report => {
            let dir = cli.config.clone().unwrap_or_else(|| cli.out.clone());
            let records: Vec<SweepRecord> = read_json(&dir.join("records.json"))?;
            let cert: RateCertificate = read_json(&dir.join("certificate.json"))?;
            let fit = report(&records, &cert, &cli.out)?;
            let below: Vec<&SweepRecord> = records.iter().filter(|r| r.nu < cert.nu_bar).collect();
            let mut checks = vec![Check::new(
                "certificate_domination",
                below.iter().all(|r| cert.dominates(r.nu, r.sup_rel_dist)),
                format!("{} records below nu_bar", below.len()),
            )];
            if let Some(r) = fit.exponent {
                checks.push(Check::new(
                    "fitted_rate_exceeds_certified",
                    r >= cert.certified_rate(),
                    format!("fitted r = {r:.4}"),
                ));
            }
            Ok(("report", checks))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((command, checks)) => {
            let passed = checks.iter().all(|c| c.passed);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let summary = Summary {
                command,
                passed,
                checks: &checks,
            };
            if let Err(e) = write_json(&cli.out.join("summary.json"), &summary) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
