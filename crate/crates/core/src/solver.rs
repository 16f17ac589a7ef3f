//! Pseudo-spectral Navier–Stokes / Euler solver in vorticity form.
//!
//! The state is advanced with integrating-factor RK4: diffusion is handled by
//! the exact factor `e^{−ν|k|²t}`, advection `u·∇ω` is explicit and 2/3
//! dealiased. The dissipation integral `ν∫‖∇u‖₂²` rides along as an extra
//! ODE component so the energy ledger is fourth-order accurate too.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::snapshot::{write_snapshot, FieldSnapshot};
use crate::field::{
    lexp_norm, lp_norm, max_spectral_divergence, sym_gradient, velocity_from_vorticity, vorticity, GridSpec,
    ScalarField, VectorField2,
};

/// Courant number used for both the check and the automatic step.
pub const CFL_SAFETY: f64 = 0.5;
/// Steps between automatic time-step updates.
pub const AUTO_DT_INTERVAL: usize = 10;
/// Enstrophy fraction allowed in the top third of the retained band for `ν = 0`.
pub const TAIL_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub nu: f64,
    pub t_end: f64,
    pub dt: TimeStep,
    /// Steps between stored snapshots. The final state is always stored.
    pub output_stride: usize,
    /// Exponent parameter for the `L^{2+σ}` ledger column.
    pub sigma: f64,
}

impl SolverConfig {
    pub fn new(grid: &GridSpec, nu: f64, t_end: f64, dt: TimeStep) -> Self {
        Self {
            grid: grid.clone(),
            nu,
            t_end,
            dt,
            output_stride: 1,
            sigma: 2.0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::domain(format!("viscosity must be >= 0, got {}", self.nu)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::domain(format!("dt must be > 0, got {dt}")));
            }
        }
        if self.output_stride == 0 {
            return Err(Error::domain("output_stride must be >= 1"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Largest admissible step for the current velocity: the advective CFL
    /// bound, and `1/(ν k_c²)` so the dissipation quadrature resolves the
    /// fastest retained decay rate.
    pub fn dt_limit(&self, linf_velocity: f64) -> f64 {
        let mut limit = f64::INFINITY;
        if linf_velocity > 0.0 {
            limit = CFL_SAFETY * self.grid.dx() / linf_velocity;
        }
        let kc = self.grid.dealias_cutoff() as f64;
        if self.nu > 0.0 {
            limit = limit.min(1.0 / (self.nu * kc * kc));
        }
        limit
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub step: usize,
    pub omega: ScalarField,
    pub velocity: VectorField2,
    /// Conserved mean velocity; the vorticity does not see it.
    pub mean: (f64, f64),
    /// `ν∫₀ᵗ‖∇u‖₂² ds`.
    pub dissipation: f64,
}

impl SolverState {
    /// Initial state from a divergence-free velocity, projected onto the
    /// dealiased band.
    pub fn from_velocity(u0: &VectorField2) -> Result<Self> {
        if !u0.is_finite() {
            return Err(Error::NonFinite { t: 0.0 });
        }
        let scale = lp_norm(u0, 2.0)?;
        let div = max_spectral_divergence(u0);
        if div > 1e-8 * (1.0 + scale) {
            return Err(Error::precondition(format!(
                "initial velocity is not divergence free (spectral divergence {div:.3e})"
            )));
        }
        let mean = u0.mean();
        let omega = vorticity(u0).dealiased();
        Ok(Self::from_vorticity(omega, mean, 0.0, 0, 0.0))
    }

    fn from_vorticity(omega: ScalarField, mean: (f64, f64), t: f64, step: usize, dissipation: f64) -> Self {
        let velocity = velocity_from_vorticity(&omega, mean);
        Self {
            t,
            step,
            omega,
            velocity,
            mean,
            dissipation,
        }
    }

    pub fn energy(&self) -> f64 {
        0.5 * lp_norm(&self.velocity, 2.0).unwrap_or(f64::NAN).powi(2)
    }
}

/// Spectral workspace: wavenumbers and band mask for one grid.
struct Spectral {
    grid: GridSpec,
    kx: Vec<f64>,
    ky: Vec<f64>,
    k2: Vec<f64>,
    band: Vec<bool>,
}

impl Spectral {
    fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let mut kx = Vec::with_capacity(grid.len());
        let mut ky = Vec::with_capacity(grid.len());
        let mut k2 = Vec::with_capacity(grid.len());
        let mut band = Vec::with_capacity(grid.len());
        for j in 0..n {
            for i in 0..n {
                kx.push(grid.derivative_wavenumber(i));
                ky.push(grid.derivative_wavenumber(j));
                let (a, b) = (grid.wavenumber(i) as f64, grid.wavenumber(j) as f64);
                k2.push(a * a + b * b);
                band.push(grid.is_dealiased_mode(i, j));
            }
        }
        Self {
            grid: grid.clone(),
            kx,
            ky,
            k2,
            band,
        }
    }

    fn to_physical(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.grid.inverse(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }

    /// `−P_N(u·∇ω)` for a band-limited vorticity spectrum.
    fn advection(&self, w: &[Complex64], mean: (f64, f64)) -> Vec<Complex64> {
        let i = Complex64::i();
        let len = w.len();
        let mut uh = vec![Complex64::new(0.0, 0.0); len];
        let mut vh = uh.clone();
        let mut wx = uh.clone();
        let mut wy = uh.clone();
        for idx in 0..len {
            if self.k2[idx] == 0.0 {
                continue;
            }
            let psi = w[idx] / self.k2[idx];
            uh[idx] = i * self.ky[idx] * psi;
            vh[idx] = -i * self.kx[idx] * psi;
            wx[idx] = i * self.kx[idx] * w[idx];
            wy[idx] = i * self.ky[idx] * w[idx];
        }
        let u = self.to_physical(uh);
        let v = self.to_physical(vh);
        let wx = self.to_physical(wx);
        let wy = self.to_physical(wy);
        let mut prod: Vec<Complex64> = (0..len)
            .map(|k| Complex64::new((u[k] + mean.0) * wx[k] + (v[k] + mean.1) * wy[k], 0.0))
            .collect();
        self.grid.forward(&mut prod);
        for (c, keep) in prod.iter_mut().zip(&self.band) {
            *c = if *keep { -*c } else { Complex64::new(0.0, 0.0) };
        }
        prod
    }

    /// `ν‖∇u‖₂² = ν‖ω‖₂²` from the spectrum.
    fn dissipation_rate(&self, nu: f64, w: &[Complex64]) -> f64 {
        if nu == 0.0 {
            return 0.0;
        }
        let n2 = self.grid.len() as f64;
        nu * w.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_measure() / n2
    }

    fn tail_fraction(&self, w: &[Complex64]) -> f64 {
        let threshold = 2.0 * self.grid.dealias_cutoff() as f64 / 3.0;
        let mut total = 0.0;
        let mut tail = 0.0;
        for (c, k2) in w.iter().zip(&self.k2) {
            let e = c.norm_sqr();
            total += e;
            if k2.sqrt() > threshold {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

fn scaled(f: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    x.iter().zip(f).map(|(x, f)| x * *f).collect()
}

/// One integrating-factor RK4 step of length `dt`.
fn rk4_step(sp: &Spectral, nu: f64, mean: (f64, f64), w: &[Complex64], dt: f64) -> (Vec<Complex64>, f64) {
    let half: Vec<f64> = sp.k2.iter().map(|k2| (-nu * k2 * 0.5 * dt).exp()).collect();
    let full: Vec<f64> = half.iter().map(|e| e * e).collect();

    let k1 = sp.advection(w, mean);
    let a = scaled(&half, &axpy(w, 0.5 * dt, &k1));
    let k2 = sp.advection(&a, mean);
    let b = axpy(&scaled(&half, w), 0.5 * dt, &k2);
    let k3 = sp.advection(&b, mean);
    let c = axpy(&scaled(&full, w), dt, &scaled(&half, &k3));
    let k4 = sp.advection(&c, mean);

    let out = (0..w.len())
        .map(|i| full[i] * w[i] + (dt / 6.0) * (full[i] * k1[i] + 2.0 * half[i] * (k2[i] + k3[i]) + k4[i]))
        .collect();
    let diss = (dt / 6.0)
        * (sp.dissipation_rate(nu, w)
            + 2.0 * sp.dissipation_rate(nu, &a)
            + 2.0 * sp.dissipation_rate(nu, &b)
            + sp.dissipation_rate(nu, &c));
    (out, diss)
}

fn spectrum_of(sp: &Spectral, omega: &ScalarField) -> Vec<Complex64> {
    let mut w: Vec<Complex64> = omega.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    sp.grid.forward(&mut w);
    for (c, keep) in w.iter_mut().zip(&sp.band) {
        if !*keep {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    w
}

fn check_cfl(cfg: &SolverConfig, state: &SolverState, dt: f64) -> Result<()> {
    let limit = cfg.dt_limit(lp_norm(&state.velocity, f64::INFINITY)?);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { t: state.t, dt, limit });
    }
    Ok(())
}

fn advance(sp: &Spectral, cfg: &SolverConfig, state: &SolverState, dt: f64) -> Result<SolverState> {
    check_cfl(cfg, state, dt)?;
    let w = spectrum_of(sp, &state.omega);
    let (w, diss) = rk4_step(sp, cfg.nu, state.mean, &w, dt);
    let t = state.t + dt;
    if w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) || !diss.is_finite() {
        return Err(Error::NonFinite { t });
    }
    if cfg.nu == 0.0 {
        let fraction = sp.tail_fraction(&w);
        if fraction > TAIL_LIMIT {
            return Err(Error::SpectralTail {
                t,
                fraction,
                limit: TAIL_LIMIT,
            });
        }
    }
    let omega = ScalarField::new(&sp.grid, sp.to_physical(w))?;
    Ok(SolverState::from_vorticity(
        omega,
        state.mean,
        t,
        state.step + 1,
        state.dissipation + diss,
    ))
}

/// Advances one step. A fixed step must satisfy the CFL bound; the automatic
/// step uses the bound itself, clipped to `t_end`.
pub fn step(state: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    state.omega.grid().check_same(&cfg.grid)?;
    let sp = Spectral::new(&cfg.grid);
    let dt = match cfg.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => auto_dt(cfg, state)?.min((cfg.t_end - state.t).max(f64::MIN_POSITIVE)),
    };
    advance(&sp, cfg, state, dt)
}

fn auto_dt(cfg: &SolverConfig, state: &SolverState) -> Result<f64> {
    let limit = cfg.dt_limit(lp_norm(&state.velocity, f64::INFINITY)?);
    Ok(limit.min(cfg.t_end))
}

/// One row of the energy ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub energy: f64,
    pub cumulative_dissipation: f64,
    pub linf_velocity: f64,
    pub l2_sym_gradient: f64,
    pub lexp_sym_gradient: f64,
    pub l2psigma_velocity: f64,
}

impl LedgerRow {
    pub fn of(state: &SolverState, sigma: f64) -> Result<Self> {
        let s = sym_gradient(&state.velocity);
        Ok(Self {
            t: state.t,
            energy: state.energy(),
            cumulative_dissipation: state.dissipation,
            linf_velocity: lp_norm(&state.velocity, f64::INFINITY)?,
            l2_sym_gradient: lp_norm(&s, 2.0)?,
            lexp_sym_gradient: lexp_norm(&s)?,
            l2psigma_velocity: lp_norm(&state.velocity, 2.0 + sigma)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub nu: f64,
    pub sigma: f64,
    pub states: Vec<SolverState>,
    pub ledger: Vec<LedgerRow>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &SolverState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Snapshots as `t_<index>.bin` plus `ledger.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (k, s) in self.states.iter().enumerate() {
            write_snapshot(
                &dir.join(format!("t_{k}.bin")),
                &FieldSnapshot::Vector(s.velocity.clone()),
                s.t,
            )?;
        }
        write_ledger(&dir.join("ledger.csv"), &self.ledger)
    }
}

pub fn write_ledger(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

/// Integrates from `u0` to `cfg.t_end`.
///
/// With a fixed step the interval is split into `ceil(t_end/dt)` equal steps,
/// so the effective step never exceeds the requested one and every run with
/// the same `(t_end, dt)` shares one time grid.
pub fn run(u0: &VectorField2, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    u0.grid().check_same(&cfg.grid)?;
    let sp = Spectral::new(&cfg.grid);
    let mut state = SolverState::from_velocity(u0)?;
    let mut states = vec![state.clone()];
    let mut ledger = vec![LedgerRow::of(&state, cfg.sigma)?];

    let fixed_steps = match cfg.dt {
        TimeStep::Fixed(dt) => Some(((cfg.t_end / dt) - 1e-9).ceil().max(1.0) as usize),
        TimeStep::Auto => None,
    };
    let mut dt_auto = 0.0;
    loop {
        let done = match fixed_steps {
            Some(m) => state.step >= m,
            None => state.t >= cfg.t_end,
        };
        if done {
            break;
        }
        let dt = match fixed_steps {
            Some(m) => cfg.t_end / m as f64,
            None => {
                if state.step % AUTO_DT_INTERVAL == 0 {
                    dt_auto = auto_dt(cfg, &state)?;
                }
                // the cached step may have become too large since the last update
                let limit = cfg.dt_limit(lp_norm(&state.velocity, f64::INFINITY)?);
                let remaining = cfg.t_end - state.t;
                let dt = dt_auto.min(limit);
                if remaining <= dt * (1.0 + 1e-9) {
                    remaining
                } else {
                    dt
                }
            }
        };
        let mut next = advance(&sp, cfg, &state, dt)?;
        let last = match fixed_steps {
            Some(m) => next.step == m,
            None => next.t >= cfg.t_end,
        };
        if let (Some(_), true) = (fixed_steps, last) {
            next.t = cfg.t_end;
        }
        if next.step % cfg.output_stride == 0 || last {
            ledger.push(LedgerRow::of(&next, cfg.sigma)?);
            states.push(next.clone());
        }
        state = next;
    }
    Ok(Trajectory {
        nu: cfg.nu,
        sigma: cfg.sigma,
        states,
        ledger,
    })
}

/// Exact Taylor–Green solution `A e^{−2νt}(sin x cos y, −cos x sin y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorGreenOracle {
    pub amplitude: f64,
    pub nu: f64,
}

impl TaylorGreenOracle {
    pub fn new(nu: f64) -> Self {
        Self { amplitude: 1.0, nu }
    }

    pub fn velocity(&self, t: f64, grid: &GridSpec) -> VectorField2 {
        let a = self.amplitude * (-2.0 * self.nu * t).exp();
        VectorField2::from_fn(grid, |x, y| (a * x.sin() * y.cos(), -a * x.cos() * y.sin()))
    }

    /// `½‖u(t)‖₂² = π²A²e^{−4νt}`.
    pub fn energy(&self, t: f64) -> f64 {
        PI * PI * self.amplitude.powi(2) * (-4.0 * self.nu * t).exp()
    }

    /// `ν∫₀ᵗ‖∇u‖₂² = π²A²(1 − e^{−4νt})`.
    pub fn dissipation(&self, t: f64) -> f64 {
        PI * PI * self.amplitude.powi(2) * -(-4.0 * self.nu * t).exp_m1()
    }
}

pub fn taylor_green(nu: f64, t: f64, grid: &GridSpec) -> Result<VectorField2> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    Ok(TaylorGreenOracle::new(nu).velocity(t, grid))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub tol_energy: f64,
    /// Snapshot indices with `E(t) > E(0) + tol`.
    pub flagged: Vec<usize>,
    /// `max_{τ₁<τ₂} E(τ₂) + ν∫_{τ₁}^{τ₂}‖∇u‖² − E(τ₁)`, or `−∞` for one row.
    pub worst_pair_excess: f64,
}

impl AdmissibilityReport {
    pub fn ok(&self) -> bool {
        self.flagged.is_empty() && self.worst_pair_excess <= self.tol_energy
    }
}

/// Checks the energy inequality at every snapshot and every ledger pair.
pub fn admissibility_check(ledger: &[LedgerRow], tol_energy: f64) -> Result<AdmissibilityReport> {
    let first = ledger
        .first()
        .ok_or_else(|| Error::input("admissibility check needs a nonempty ledger"))?;
    let flagged = ledger
        .iter()
        .enumerate()
        .filter(|(_, r)| r.energy > first.energy + tol_energy)
        .map(|(k, _)| k)
        .collect();
    // E(τ₂) + D(τ₂) − (E(τ₁) + D(τ₁)) is maximized against the running minimum.
    let mut worst = f64::NEG_INFINITY;
    let mut running_min = f64::INFINITY;
    for r in ledger {
        let total = r.energy + r.cumulative_dissipation;
        if running_min.is_finite() {
            worst = worst.max(total - running_min);
        }
        running_min = running_min.min(total);
    }
    Ok(AdmissibilityReport {
        tol_energy,
        flagged,
        worst_pair_excess: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random::random_divergence_free;

    fn l2_diff(a: &VectorField2, b: &VectorField2) -> f64 {
        lp_norm(&(a - b), 2.0).unwrap()
    }

    #[test]
    fn rest_state_is_fixed() {
        let g = GridSpec::new(16).unwrap();
        let cfg = SolverConfig::new(&g, 0.1, 1.0, TimeStep::Fixed(0.1));
        let s = SolverState::from_velocity(&VectorField2::zeros(&g)).unwrap();
        let s1 = step(&s, &cfg).unwrap();
        assert_eq!(s1.omega.max_abs(), 0.0);
        assert_eq!(s1.dissipation, 0.0);
    }

    #[test]
    fn taylor_green_single_step() {
        let g = GridSpec::new(32).unwrap();
        let (nu, dt) = (0.01, 1e-3);
        let cfg = SolverConfig::new(&g, nu, 1.0, TimeStep::Fixed(dt));
        let s = SolverState::from_velocity(&taylor_green(nu, 0.0, &g).unwrap()).unwrap();
        let omega0 = s.omega.clone();
        let expected_peak = omega0.max_abs() * (-2.0 * nu * dt).exp();
        let s1 = step(&s, &cfg).unwrap();
        let d = s1
            .omega
            .zip_with(&omega0, |a, b| a - (-2.0 * nu * dt).exp() * b)
            .unwrap()
            .max_abs();
        assert!(d <= 1e-10, "{d}");
        assert!((s1.omega.max_abs() - expected_peak).abs() < 1e-10);
    }

    #[test]
    fn taylor_green_vorticity_sign() {
        let g = GridSpec::new(16).unwrap();
        let s = SolverState::from_velocity(&taylor_green(0.0, 0.0, &g).unwrap()).unwrap();
        let expected = ScalarField::from_fn(&g, |x, y| 2.0 * x.sin() * y.sin());
        let d = s.omega.zip_with(&expected, |a, b| a - b).unwrap().max_abs();
        assert!(d < 1e-13);
    }

    #[test]
    fn taylor_green_oracle_values() {
        let g = GridSpec::new(32).unwrap();
        let u = taylor_green(1e-3, 1.0, &g).unwrap();
        let norm = lp_norm(&u, 2.0).unwrap();
        assert!((norm - (-0.002f64).exp() * PI * 2f64.sqrt()).abs() < 1e-12);
        assert!((norm - 4.434006).abs() < 1e-6);
        let u0 = taylor_green(0.0, 0.0, &g).unwrap();
        assert_eq!(taylor_green(0.0, 5.0, &g).unwrap().u.values(), u0.u.values());
        assert!(taylor_green(0.1, -1.0, &g).is_err());
        let o = TaylorGreenOracle::new(0.05);
        assert!((o.energy(0.7) + o.dissipation(0.7) - o.energy(0.0)).abs() < 1e-13);
    }

    #[test]
    fn navier_stokes_taylor_green_run() {
        let g = GridSpec::new(64).unwrap();
        let nu = 1e-3;
        let cfg = SolverConfig::new(&g, nu, 1.0, TimeStep::Fixed(0.01)).with_stride(10);
        let traj = run(&taylor_green(nu, 0.0, &g).unwrap(), &cfg).unwrap();
        let oracle = TaylorGreenOracle::new(nu);
        for s in &traj.states {
            assert!(l2_diff(&s.velocity, &oracle.velocity(s.t, &g)) <= 1e-8);
        }
        let last = traj.ledger.last().unwrap();
        assert_eq!(last.t, 1.0);
        let e0 = traj.ledger[0].energy;
        let balance = (last.energy + last.cumulative_dissipation - e0).abs() / e0;
        assert!(balance <= 1e-9, "{balance}");
        assert!((last.cumulative_dissipation - oracle.dissipation(1.0)).abs() <= 1e-9 * e0);
        assert!(admissibility_check(&traj.ledger, 1e-9 * e0).unwrap().ok());
    }

    #[test]
    fn euler_taylor_green_is_steady() {
        let g = GridSpec::new(32).unwrap();
        let u0 = taylor_green(0.0, 0.0, &g).unwrap();
        let cfg = SolverConfig::new(&g, 0.0, 1.0, TimeStep::Auto).with_stride(5);
        let traj = run(&u0, &cfg).unwrap();
        assert!((traj.last().t - 1.0).abs() < 1e-12);
        for s in &traj.states {
            assert!(l2_diff(&s.velocity, &u0) <= 1e-8);
        }
    }

    #[test]
    fn euler_conserves_enstrophy_and_mean() {
        let g = GridSpec::new(64).unwrap();
        let mut u0 = random_divergence_free(&g, 4, 9);
        u0.u = u0.u.map(|x| x + 0.3);
        let cfg = SolverConfig::new(&g, 0.0, 0.1, TimeStep::Fixed(1e-3)).with_stride(100);
        let traj = run(&u0, &cfg).unwrap();
        assert_eq!(traj.last().step, 100);
        let z0 = lp_norm(&traj.states[0].omega, 2.0).unwrap();
        let z1 = lp_norm(&traj.last().omega, 2.0).unwrap();
        assert!((z1 - z0).abs() <= 1e-8, "{}", z1 - z0);
        let (mu, mv) = traj.last().velocity.mean();
        assert!((mu - 0.3).abs() < 1e-12 && mv.abs() < 1e-12);
        for s in &traj.states {
            assert!(max_spectral_divergence(&s.velocity) <= 1e-10);
            assert!(s.omega.mean().abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_step_above_cfl_is_rejected() {
        let g = GridSpec::new(32).unwrap();
        let cfg = SolverConfig::new(&g, 0.0, 1.0, TimeStep::Fixed(0.5));
        let s = SolverState::from_velocity(&taylor_green(0.0, 0.0, &g).unwrap()).unwrap();
        assert!(matches!(step(&s, &cfg), Err(Error::Cfl { .. })));
    }

    #[test]
    fn rejects_compressible_initial_data() {
        let g = GridSpec::new(16).unwrap();
        let u = VectorField2::from_fn(&g, |x, _| (x.sin(), 0.0));
        let cfg = SolverConfig::new(&g, 0.1, 1.0, TimeStep::Auto);
        assert!(matches!(run(&u, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn euler_tail_monitor_trips_on_rough_data() {
        let g = GridSpec::new(16).unwrap();
        let u0 = random_divergence_free(&g, 5, 2);
        let cfg = SolverConfig::new(&g, 0.0, 0.1, TimeStep::Auto);
        assert!(matches!(run(&u0, &cfg), Err(Error::SpectralTail { .. })));
    }

    #[test]
    fn admissibility_flags_scaled_snapshot() {
        let g = GridSpec::new(32).unwrap();
        let cfg = SolverConfig::new(&g, 0.05, 0.5, TimeStep::Fixed(0.01)).with_stride(10);
        let traj = run(&taylor_green(0.05, 0.0, &g).unwrap(), &cfg).unwrap();
        // strict decay passes even with zero tolerance
        let strict = admissibility_check(&traj.ledger, 0.0).unwrap();
        assert!(strict.flagged.is_empty());
        let mut bad = traj.ledger.clone();
        bad[3].energy = 1.1 * bad[0].energy;
        let rep = admissibility_check(&bad, 1e-9 * bad[0].energy).unwrap();
        assert_eq!(rep.flagged, vec![3]);
        assert!(!rep.ok());
        assert!(admissibility_check(&[], 0.0).is_err());
    }

    #[test]
    fn ledger_round_trips_through_csv() {
        let g = GridSpec::new(16).unwrap();
        let cfg = SolverConfig::new(&g, 0.1, 0.2, TimeStep::Fixed(0.05));
        let traj = run(&taylor_green(0.1, 0.0, &g).unwrap(), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        traj.write_dir(dir.path()).unwrap();
        assert!(dir.path().join("t_4.bin").exists());
        let back = read_ledger(&dir.path().join("ledger.csv")).unwrap();
        assert_eq!(back.len(), traj.ledger.len());
        let header = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
        assert!(header.starts_with(
            "t,energy,cumulative_dissipation,linf_velocity,l2_sym_gradient,lexp_sym_gradient,l2psigma_velocity"
        ));
    }
}
