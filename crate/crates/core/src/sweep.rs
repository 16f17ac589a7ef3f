//! Viscosity sweeps: one Euler reference run, one Navier–Stokes run per `ν`
//! on a shared time grid, the hypothesis envelopes `f, g, h`, the rate
//! certificate and the empirical rate fit.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::random::random_divergence_free;
use crate::field::{lp_norm, GridSpec, VectorField2};
use crate::gronwall::{certify, RateCertificate, TimeProfile};
use crate::relative_energy::{write_inequality_report, InequalityResidual, PairSeries};
use crate::solver::{admissibility_check, run, taylor_green, SolverConfig, TimeStep, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialData {
    TaylorGreen,
    BandLimitedRandom { seed: u64, modes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative inequality tolerance: slack ≥ −ineq·(1 + E(0)).
    pub ineq: f64,
    /// Relative energy-inequality tolerance: excess ≤ energy·E(0).
    pub energy: f64,
    /// Relative agreement with the closed-form Taylor–Green distance.
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ineq: 1e-8,
            energy: 1e-9,
            closed_form: 1e-6,
        }
    }
}

fn default_sigma() -> f64 {
    2.0
}

fn default_windows() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub t_end: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub nu_list: Vec<f64>,
    pub initial_data: InitialData,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Shared time step; chosen from the CFL bound of the initial data when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Number of equal windows for the viscous inequality check.
    #[serde(default = "default_windows")]
    pub windows: usize,
}

impl SweepConfig {
    pub fn taylor_green(n: usize, t_end: f64, nu_list: Vec<f64>) -> Self {
        Self {
            n,
            t_end,
            sigma: default_sigma(),
            nu_list,
            initial_data: InitialData::TaylorGreen,
            output_dir: None,
            tolerances: Tolerances::default(),
            dt: None,
            windows: default_windows(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu_list.is_empty() {
            return Err(Error::Config("nu_list is empty".into()));
        }
        if self.nu_list.iter().any(|&nu| !(nu > 0.0 && nu < 1.0)) {
            return Err(Error::Config("every ν must lie in (0, 1)".into()));
        }
        if self.nu_list.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Config("nu_list must be strictly decreasing".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.sigma > 0.0 && self.sigma <= 4.0) {
            return Err(Error::Config(format!("sigma must lie in (0, 4], got {}", self.sigma)));
        }
        if self.windows == 0 {
            return Err(Error::Config("windows must be >= 1".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt must be > 0, got {dt}")));
            }
        }
        GridSpec::new(self.n).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn initial_velocity(&self, grid: &GridSpec) -> Result<VectorField2> {
        match self.initial_data {
            InitialData::TaylorGreen => taylor_green(0.0, 0.0, grid),
            InitialData::BandLimitedRandom { seed, modes } => Ok(random_divergence_free(grid, modes, seed)),
        }
    }
}

/// `(1 − e^{−2νT})·π√2`, the Taylor–Green distance at time `T`.
pub fn taylor_green_distance(nu: f64, t: f64) -> f64 {
    -(-2.0 * nu * t).exp_m1() * PI * 2f64.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub nu: f64,
    /// `sup_t ‖u^ν(t) − U(t)‖₂` over snapshots.
    pub sup_rel_dist: f64,
    /// `∫‖∇ˢU‖_exp dt`.
    pub f_l1: f64,
    /// `sup_t √ν‖∇u^ν‖₂`.
    pub g_nu_max: f64,
    /// `sup_t ‖u^ν‖_{2+σ}`.
    pub h_nu_max: f64,
    pub min_slack: f64,
    pub inequality_ok: bool,
    pub quadrature_ok: bool,
    pub energy_ok: bool,
    /// `Mν^{1/M}`; JSON has no infinity, so an overflowed bound is written as `null`.
    #[serde(deserialize_with = "null_as_infinity")]
    pub certified_bound: f64,
    pub log10_certified_bound: f64,
    pub below_nu_bar: bool,
    pub dominated: bool,
    pub wall_time: f64,
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Per-`ν` results before certification.
struct NuRun {
    nu: f64,
    sup_rel_dist: f64,
    g_nu: Vec<f64>,
    h_nu: Vec<f64>,
    windows: Vec<InequalityResidual>,
    energy_ok: bool,
    wall_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSet {
    pub sigma: f64,
    pub t_end: f64,
    pub f: TimeProfile,
    pub g: TimeProfile,
    pub h: TimeProfile,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub config: SweepConfig,
    pub dt: f64,
    pub records: Vec<SweepRecord>,
    pub certificate: RateCertificate,
    pub profiles: ProfileSet,
    pub windows: Vec<(f64, Vec<InequalityResidual>)>,
    pub euler_energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

fn shared_dt(cfg: &SweepConfig, grid: &GridSpec, u0: &VectorField2) -> Result<f64> {
    if let Some(dt) = cfg.dt {
        return Ok(dt);
    }
    let linf = lp_norm(u0, f64::INFINITY)?;
    let nu_max = cfg.nu_list[0];
    let limit = SolverConfig::new(grid, nu_max, cfg.t_end, TimeStep::Auto).dt_limit(linf);
    // at least four steps per inequality window so the quadrature check has
    // something to compare, and headroom for velocity growth along the run
    Ok(0.8 * limit.min(cfg.t_end / (4 * cfg.windows) as f64))
}

fn window_times(times: &[f64], windows: usize) -> Vec<f64> {
    let m = times.len() - 1;
    let mut idx: Vec<usize> = (0..=windows).map(|k| (k * m + windows / 2) / windows).collect();
    idx.dedup();
    idx.into_iter().map(|i| times[i]).collect()
}

fn run_one(cfg: &SweepConfig, u0: &VectorField2, euler: &Trajectory, solver: &SolverConfig, nu: f64) -> Result<NuRun> {
    let start = Instant::now();
    let mut scfg = solver.clone();
    scfg.nu = nu;
    let traj = run(u0, &scfg)?;
    let pair = PairSeries::new(&traj, euler)?;
    let sup_rel_dist = pair.e_rel.iter().map(|e| (2.0 * e).sqrt()).fold(0.0, f64::max);
    let e0 = euler.ledger[0].energy;
    let windows = pair.viscous_windows(&window_times(&pair.times, cfg.windows))?;
    let energy_ok = admissibility_check(&traj.ledger, cfg.tolerances.energy * e0)?.ok();
    let g_nu = traj
        .states
        .iter()
        .map(|s| Ok(nu.sqrt() * lp_norm(&s.omega, 2.0)?))
        .collect::<Result<_>>()?;
    let h_nu = traj.ledger.iter().map(|r| r.l2psigma_velocity).collect();
    Ok(NuRun {
        nu,
        sup_rel_dist,
        g_nu,
        h_nu,
        windows,
        energy_ok,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn envelope(base: impl Iterator<Item = f64>, runs: &[NuRun], pick: impl Fn(&NuRun) -> &Vec<f64>) -> Vec<f64> {
    base.enumerate()
        .map(|(k, b)| b + runs.iter().map(|r| pick(r)[k]).fold(0.0, f64::max))
        .collect()
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let grid = GridSpec::new(cfg.n)?;
    let u0 = cfg.initial_velocity(&grid)?;
    let dt = shared_dt(cfg, &grid, &u0)?;
    let mut solver = SolverConfig::new(&grid, 0.0, cfg.t_end, TimeStep::Fixed(dt));
    solver.sigma = cfg.sigma;
    let euler = run(&u0, &solver).map_err(|e| Error::Sweep {
        nu: 0.0,
        source: Box::new(e),
    })?;
    let e0 = euler.ledger[0].energy;
    let euler_energy_drift = euler
        .ledger
        .iter()
        .map(|r| (r.energy - e0).abs() / e0.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let mut runs: Vec<NuRun> = cfg
        .nu_list
        .par_iter()
        .map(|&nu| {
            run_one(cfg, &u0, &euler, &solver, nu).map_err(|e| Error::Sweep {
                nu,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    runs.sort_by(|a, b| b.nu.total_cmp(&a.nu));

    let times = euler.times();
    let f = TimeProfile::new(
        times.clone(),
        euler.ledger.iter().map(|r| r.lexp_sym_gradient).collect(),
    )?;
    let g = TimeProfile::new(
        times.clone(),
        envelope(euler.ledger.iter().map(|r| r.l2_sym_gradient), &runs, |r| &r.g_nu),
    )?;
    let h = TimeProfile::new(
        times,
        envelope(euler.ledger.iter().map(|r| r.l2psigma_velocity), &runs, |r| &r.h_nu),
    )?;
    let certificate = certify(&f, &g, &h, cfg.sigma, cfg.t_end)?;

    let tol_ineq = cfg.tolerances.ineq * (1.0 + e0);
    let f_l1 = f.integral();
    let records = runs
        .iter()
        .map(|r| {
            let below = r.nu < certificate.nu_bar;
            let log_bound = certificate.log_bound(r.nu);
            SweepRecord {
                nu: r.nu,
                sup_rel_dist: r.sup_rel_dist,
                f_l1,
                g_nu_max: r.g_nu.iter().cloned().fold(0.0, f64::max),
                h_nu_max: r.h_nu.iter().cloned().fold(0.0, f64::max),
                min_slack: r.windows.iter().map(|w| w.slack).fold(f64::INFINITY, f64::min),
                inequality_ok: r.windows.iter().all(|w| w.holds(tol_ineq)),
                quadrature_ok: r.windows.iter().all(|w| w.quadrature_ok(tol_ineq)),
                energy_ok: r.energy_ok,
                certified_bound: log_bound.exp(),
                log10_certified_bound: log_bound / std::f64::consts::LN_10,
                below_nu_bar: below,
                dominated: certificate.dominates(r.nu, r.sup_rel_dist),
                wall_time: r.wall_time,
            }
        })
        .collect();
    Ok(SweepOutcome {
        config: cfg.clone(),
        dt,
        records,
        certificate,
        profiles: ProfileSet {
            sigma: cfg.sigma,
            t_end: cfg.t_end,
            f,
            g,
            h,
        },
        windows: runs.into_iter().map(|r| (r.nu, r.windows)).collect(),
        euler_energy_drift,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: Option<f64>,
    pub prefactor: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: usize,
    pub note: Option<String>,
}

/// Least-squares fit of `log sup_rel_dist = r·log ν + log A`.
pub fn fit_rate(records: &[SweepRecord]) -> Result<RateFit> {
    if records.len() < 3 {
        return Err(Error::input(format!(
            "rate fit needs at least 3 records, got {}",
            records.len()
        )));
    }
    if records.iter().any(|r| !(r.sup_rel_dist > 0.0)) {
        return Ok(RateFit {
            exponent: None,
            prefactor: None,
            r_squared: None,
            points: records.len(),
            note: Some("fit skipped: some distances are zero".into()),
        });
    }
    let xs: Vec<f64> = records.iter().map(|r| r.nu.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.sup_rel_dist.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r = sxy / sxx;
    let intercept = my - r * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        exponent: Some(r),
        prefactor: Some(intercept.exp()),
        r_squared: Some(r_squared),
        points: records.len(),
        note: None,
    })
}

impl SweepOutcome {
    pub fn checks(&self) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        if self.config.initial_data == InitialData::TaylorGreen {
            let worst = self
                .records
                .iter()
                .map(|r| {
                    let exact = taylor_green_distance(r.nu, self.config.t_end);
                    (r.sup_rel_dist - exact).abs() / exact
                })
                .fold(0.0, f64::max);
            out.push(Check::new(
                "closed_form_distance",
                worst <= self.config.tolerances.closed_form,
                format!("max relative deviation {worst:.3e}"),
            ));
        }
        let below: Vec<&SweepRecord> = self.records.iter().filter(|r| r.below_nu_bar).collect();
        out.push(Check::new(
            "certificate_domination",
            below.iter().all(|r| r.dominated),
            format!(
                "{} of {} records below nu_bar = {:.3e}; log10 M = {:.4e}",
                below.len(),
                self.records.len(),
                self.certificate.nu_bar,
                self.certificate.log10_big_m
            ),
        ));
        out.push(Check::new(
            "viscous_inequality",
            self.records.iter().all(|r| r.inequality_ok),
            format!(
                "min slack {:.3e}",
                self.records.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min)
            ),
        ));
        out.push(Check::new(
            "energy_inequality",
            self.records.iter().all(|r| r.energy_ok),
            format!("Euler energy drift {:.3e}", self.euler_energy_drift),
        ));
        if self.records.len() >= 3 {
            let fit = fit_rate(&self.records)?;
            if let Some(r) = fit.exponent {
                let rate = self.certificate.certified_rate();
                out.push(Check::new(
                    "fitted_rate_exceeds_certified",
                    r >= rate,
                    format!(
                        "fitted r = {r:.4}, certified 1/M = 10^{:.4e}",
                        -self.certificate.log10_big_m
                    ),
                ));
            }
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct CsvRow {
    nu: f64,
    sup_rel_dist: f64,
    certified_bound: f64,
    min_slack: f64,
    log10_certified_bound: f64,
}

#[derive(Serialize)]
struct PlotRow {
    log10_nu: f64,
    log10_value: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(crate::solver::csv_err)?;
    for r in rows {
        w.serialize(r).map_err(crate::solver::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Writes `sweep.csv`, `certificate.json`, `rate_fit.json`, `records.json`
/// and `plotdata/*.csv` under `outdir`.
pub fn report(records: &[SweepRecord], certificate: &RateCertificate, outdir: &Path) -> Result<RateFit> {
    let plot = outdir.join("plotdata");
    fs::create_dir_all(&plot)?;
    write_csv(
        &outdir.join("sweep.csv"),
        records.iter().map(|r| CsvRow {
            nu: r.nu,
            sup_rel_dist: r.sup_rel_dist,
            certified_bound: r.certified_bound,
            min_slack: r.min_slack,
            log10_certified_bound: r.log10_certified_bound,
        }),
    )?;
    write_json(&outdir.join("certificate.json"), certificate)?;
    write_json(&outdir.join("records.json"), &records)?;
    let fit = if records.len() >= 3 {
        fit_rate(records)?
    } else {
        RateFit {
            exponent: None,
            prefactor: None,
            r_squared: None,
            points: records.len(),
            note: Some("fit skipped: fewer than 3 records".into()),
        }
    };
    write_json(&outdir.join("rate_fit.json"), &fit)?;
    write_csv(
        &plot.join("sup_rel_dist.csv"),
        records.iter().map(|r| PlotRow {
            log10_nu: r.nu.log10(),
            log10_value: r.sup_rel_dist.log10(),
        }),
    )?;
    write_csv(
        &plot.join("certified_bound.csv"),
        records.iter().map(|r| PlotRow {
            log10_nu: r.nu.log10(),
            log10_value: r.log10_certified_bound,
        }),
    )?;
    if let (Some(r), Some(a)) = (fit.exponent, fit.prefactor) {
        write_csv(
            &plot.join("rate_fit.csv"),
            records.iter().map(|rec| PlotRow {
                log10_nu: rec.nu.log10(),
                log10_value: a.log10() + r * rec.nu.log10(),
            }),
        )?;
    }
    Ok(fit)
}

impl SweepOutcome {
    /// [`report`] plus the profiles, config and per-`ν` inequality windows.
    pub fn write(&self, outdir: &Path) -> Result<RateFit> {
        let fit = report(&self.records, &self.certificate, outdir)?;
        write_json(&outdir.join("profiles.json"), &self.profiles)?;
        write_json(&outdir.join("config.json"), &self.config)?;
        let rows: Vec<InequalityResidual> = self.windows.iter().flat_map(|(_, w)| w.iter().cloned()).collect();
        write_inequality_report(&outdir.join("inequality_report.csv"), &rows)?;
        Ok(fit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(nu: f64, dist: f64) -> SweepRecord {
        SweepRecord {
            nu,
            sup_rel_dist: dist,
            f_l1: 0.0,
            g_nu_max: 0.0,
            h_nu_max: 0.0,
            min_slack: 0.0,
            inequality_ok: true,
            quadrature_ok: true,
            energy_ok: true,
            certified_bound: f64::INFINITY,
            log10_certified_bound: 1e4,
            below_nu_bar: true,
            dominated: true,
            wall_time: 0.0,
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::taylor_green(32, 1.0, vec![]);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.nu_list = vec![1e-3, 1e-2];
        assert!(cfg.validate().is_err());
        cfg.nu_list = vec![1e-2, 1e-3];
        assert!(cfg.validate().is_ok());
        cfg.nu_list = vec![1.0];
        assert!(cfg.validate().is_err());
        cfg.nu_list = vec![0.1];
        cfg.n = 48;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{"n": 32, "t_end": 0.5, "nu_list": [0.1, 0.01],
            "initial_data": {"kind": "band_limited_random", "seed": 3, "modes": 2}}"#;
        let cfg: SweepConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.sigma, 2.0);
        assert_eq!(cfg.windows, 10);
        assert_eq!(cfg.initial_data, InitialData::BandLimitedRandom { seed: 3, modes: 2 });
        let back: SweepConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn fit_recovers_constructed_exponent() {
        let recs: Vec<SweepRecord> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&nu| record(nu, nu.sqrt()))
            .collect();
        let fit = fit_rate(&recs).unwrap();
        assert!((fit.exponent.unwrap() - 0.5).abs() < 1e-12);
        assert!((fit.prefactor.unwrap() - 1.0).abs() < 1e-10);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
        assert!(fit_rate(&recs[..2]).is_err());
        let zero: Vec<SweepRecord> = [1e-1, 1e-2, 1e-3].iter().map(|&nu| record(nu, 0.0)).collect();
        let skipped = fit_rate(&zero).unwrap();
        assert!(skipped.exponent.is_none() && skipped.note.is_some());
    }

    #[test]
    fn window_times_cover_run() {
        let times: Vec<f64> = (0..=37).map(|k| k as f64 / 37.0).collect();
        let w = window_times(&times, 10);
        assert_eq!(w.len(), 11);
        assert_eq!((w[0], w[10]), (0.0, 1.0));
    }

    #[test]
    fn small_taylor_green_sweep() {
        let cfg = SweepConfig::taylor_green(16, 0.5, vec![1e-1, 1e-2, 1e-3]);
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 3);
        for r in &out.records {
            let exact = taylor_green_distance(r.nu, 0.5);
            assert!((r.sup_rel_dist - exact).abs() <= 1e-6 * exact);
        }
        assert!(out.checks().unwrap().iter().all(|c| c.passed), "{:?}", out.checks());
        let json = serde_json::to_string(&out.records).unwrap();
        let back: Vec<SweepRecord> = serde_json::from_str(&json).unwrap();
        assert!(back.iter().all(|r| r.certified_bound == f64::INFINITY));
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let first = fs::read(dir.path().join("sweep.csv")).unwrap();
        let again = run_sweep(&cfg).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        again.write(dir2.path()).unwrap();
        assert_eq!(first, fs::read(dir2.path().join("sweep.csv")).unwrap());
        for f in [
            "certificate.json",
            "rate_fit.json",
            "records.json",
            "plotdata/sup_rel_dist.csv",
            "inequality_report.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }
}
