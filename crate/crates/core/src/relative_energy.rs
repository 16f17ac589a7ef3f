//! Relative energy `½‖u − U‖₂²` between trajectories and the signed residuals
//! of the relative-energy inequalities, the mollified energy balance and
//! energy conservation.
//!
//! Space integrals of cubic expressions in band-limited fields are exact on the
//! grid (three retained wavenumbers never sum to a nonzero multiple of `n`), so
//! pointwise quadrature is used throughout. Time integrals use the trapezoid
//! rule on snapshot times.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lp_norm, sym_gradient, SymTensor2, VectorField2};
use crate::mollifier::{commutator, mollify, MollifierSpec};
use crate::solver::{csv_err, Trajectory};

/// Relative tolerance for matching snapshot times.
const TIME_MATCH: f64 = 1e-9;

pub fn rel_energy(u: &VectorField2, big_u: &VectorField2) -> Result<f64> {
    let w = u.try_sub(big_u)?;
    Ok(0.5 * lp_norm(&w, 2.0)?.powi(2))
}

/// `1e−8·(1 + E(0))`.
pub fn default_tol_ineq(initial_energy: f64) -> f64 {
    1e-8 * (1.0 + initial_energy)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Variant {
    Plain,
    Viscous,
    Mollified { epsilon: f64 },
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Plain => write!(f, "plain"),
            Variant::Viscous => write!(f, "viscous"),
            Variant::Mollified { epsilon } => write!(f, "mollified(eps={epsilon})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelEnergySeries {
    pub variant: Variant,
    pub times: Vec<f64>,
    pub e_rel: Vec<f64>,
}

impl RelEnergySeries {
    pub fn sup(&self) -> f64 {
        self.e_rel.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityResidual {
    pub variant: Variant,
    pub tau1: f64,
    pub tau2: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; the inequality holds when this is `≥ −tol`.
    pub slack: f64,
    /// `|rhs − rhs_coarse|` where the coarse value skips every other snapshot.
    /// `NaN` when the window has fewer than two intervals.
    pub quadrature_gap: f64,
}

impl InequalityResidual {
    pub fn holds(&self, tol: f64) -> bool {
        self.slack.is_finite() && self.slack >= -tol
    }

    /// `|lhs − rhs|`, for identities rather than inequalities.
    pub fn residual(&self) -> f64 {
        self.slack.abs()
    }

    /// Snapshots are dense enough when halving their density moves the rhs
    /// by less than a tenth of the tolerance.
    pub fn quadrature_ok(&self, tol: f64) -> bool {
        self.quadrature_gap.is_nan() || self.quadrature_gap < tol / 10.0
    }
}

#[derive(Serialize)]
struct ReportRow {
    variant: String,
    tau1: f64,
    tau2: f64,
    lhs: f64,
    rhs: f64,
    slack: f64,
}

/// Writes `inequality_report.csv`-style rows.
pub fn write_inequality_report(path: &Path, rows: &[InequalityResidual]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(ReportRow {
            variant: r.variant.to_string(),
            tau1: r.tau1,
            tau2: r.tau2,
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn check_aligned(a: &Trajectory, b: &Trajectory) -> Result<()> {
    a.states[0].velocity.grid().check_same(b.states[0].velocity.grid())?;
    if a.states.len() != b.states.len() {
        return Err(Error::input(format!(
            "trajectories have {} and {} snapshots; a shared time grid is required",
            a.states.len(),
            b.states.len()
        )));
    }
    for (x, y) in a.states.iter().zip(&b.states) {
        if (x.t - y.t).abs() > TIME_MATCH * (1.0 + x.t.abs()) {
            return Err(Error::input(format!("snapshot times differ: {} vs {}", x.t, y.t)));
        }
    }
    Ok(())
}

fn snapshot_index(traj: &Trajectory, tau: f64) -> Result<usize> {
    let last = traj.last().t;
    if tau < 0.0 || tau > last * (1.0 + TIME_MATCH) + TIME_MATCH {
        return Err(Error::domain(format!(
            "time {tau} outside the trajectory horizon [0, {last}]"
        )));
    }
    traj.states
        .iter()
        .position(|s| (s.t - tau).abs() <= TIME_MATCH * (1.0 + tau))
        .ok_or_else(|| Error::input(format!("time {tau} is not a snapshot time")))
}

/// Trapezoid rule over `[i1, i2]` and the same with every other node dropped.
fn trapezoid_pair(times: &[f64], values: &[f64], i1: usize, i2: usize) -> (f64, f64) {
    let fine: f64 = (i1..i2)
        .map(|k| 0.5 * (times[k + 1] - times[k]) * (values[k] + values[k + 1]))
        .sum();
    if i2 - i1 < 2 {
        return (fine, f64::NAN);
    }
    let mut nodes: Vec<usize> = (i1..=i2).step_by(2).collect();
    if *nodes.last().unwrap() != i2 {
        nodes.push(i2);
    }
    let coarse: f64 = nodes
        .windows(2)
        .map(|w| 0.5 * (times[w[1]] - times[w[0]]) * (values[w[0]] + values[w[1]]))
        .sum();
    (fine, coarse)
}

/// `∫ ∇ˢU : (U − u) ⊗ (u − U) dx = −∫ ∇ˢU : w⊗w`, `w = u − U`.
fn transport_term(s_big: &SymTensor2, w: &VectorField2) -> Result<f64> {
    let ww = SymTensor2::outer(w, w)?;
    Ok(-s_big.contract(&ww)?.integral())
}

/// Per-snapshot relative energy and inequality integrands for a pair.
#[derive(Clone, Debug)]
pub struct PairSeries {
    pub times: Vec<f64>,
    pub e_rel: Vec<f64>,
    /// `−∫∇ˢU : w⊗w`.
    pub transport: Vec<f64>,
    /// `ν∫∇u : ∇ˢU` (zero for an Euler pair).
    pub viscous: Vec<f64>,
}

impl PairSeries {
    pub fn new(u: &Trajectory, big_u: &Trajectory) -> Result<Self> {
        check_aligned(u, big_u)?;
        let nu = u.nu;
        let mut out = Self {
            times: Vec::with_capacity(u.states.len()),
            e_rel: Vec::with_capacity(u.states.len()),
            transport: Vec::with_capacity(u.states.len()),
            viscous: Vec::with_capacity(u.states.len()),
        };
        for (a, b) in u.states.iter().zip(&big_u.states) {
            let w = a.velocity.try_sub(&b.velocity)?;
            let s_big = sym_gradient(&b.velocity);
            out.times.push(b.t);
            out.e_rel.push(0.5 * lp_norm(&w, 2.0)?.powi(2));
            out.transport.push(transport_term(&s_big, &w)?);
            // ∇u : ∇ˢU = ∇ˢu : ∇ˢU because ∇ˢU is symmetric
            let visc = if nu > 0.0 {
                nu * sym_gradient(&a.velocity).contract(&s_big)?.integral()
            } else {
                0.0
            };
            out.viscous.push(visc);
        }
        Ok(out)
    }

    fn residual(&self, variant: Variant, i1: usize, i2: usize) -> InequalityResidual {
        let integrand: Vec<f64> = self.transport.iter().zip(&self.viscous).map(|(a, b)| a + b).collect();
        let (fine, coarse) = trapezoid_pair(&self.times, &integrand, i1, i2);
        let lhs = self.e_rel[i2];
        let rhs = self.e_rel[i1] + fine;
        InequalityResidual {
            variant,
            tau1: self.times[i1],
            tau2: self.times[i2],
            lhs,
            rhs,
            slack: rhs - lhs,
            quadrature_gap: (fine - coarse).abs(),
        }
    }

    pub fn series(&self, variant: Variant) -> RelEnergySeries {
        RelEnergySeries {
            variant,
            times: self.times.clone(),
            e_rel: self.e_rel.clone(),
        }
    }

    /// Viscous residuals over consecutive windows `[τ_k, τ_{k+1}]` between
    /// the given snapshot times.
    pub fn viscous_windows(&self, taus: &[f64]) -> Result<Vec<InequalityResidual>> {
        let idx: Vec<usize> = taus.iter().map(|&t| index_in(&self.times, t)).collect::<Result<_>>()?;
        Ok(idx
            .windows(2)
            .map(|w| self.residual(Variant::Viscous, w[0], w[1]))
            .collect())
    }
}

fn index_in(times: &[f64], tau: f64) -> Result<usize> {
    times
        .iter()
        .position(|&s| (s - tau).abs() <= TIME_MATCH * (1.0 + tau))
        .ok_or_else(|| Error::input(format!("time {tau} is not a snapshot time")))
}

pub fn rel_energy_series(u: &Trajectory, big_u: &Trajectory) -> Result<RelEnergySeries> {
    check_aligned(u, big_u)?;
    let variant = if u.nu > 0.0 { Variant::Viscous } else { Variant::Plain };
    let e_rel = u
        .states
        .iter()
        .zip(&big_u.states)
        .map(|(a, b)| rel_energy(&a.velocity, &b.velocity))
        .collect::<Result<_>>()?;
    Ok(RelEnergySeries {
        variant,
        times: big_u.times(),
        e_rel,
    })
}

/// `½‖u_ε − U_ε‖₂²` along a pair.
pub fn mollified_rel_energy_series(
    u: &Trajectory,
    big_u: &Trajectory,
    spec: &MollifierSpec,
) -> Result<RelEnergySeries> {
    check_aligned(u, big_u)?;
    let e_rel = u
        .states
        .iter()
        .zip(&big_u.states)
        .map(|(a, b)| rel_energy(&mollify(&a.velocity, spec)?, &mollify(&b.velocity, spec)?))
        .collect::<Result<_>>()?;
    Ok(RelEnergySeries {
        variant: Variant::Mollified { epsilon: spec.epsilon },
        times: big_u.times(),
        e_rel,
    })
}

fn require_euler(traj: &Trajectory, what: &str) -> Result<()> {
    if traj.nu != 0.0 {
        return Err(Error::precondition(format!(
            "{what} requires an Euler trajectory (ν = 0), got ν = {}",
            traj.nu
        )));
    }
    Ok(())
}

/// `E_rel(τ) ≤ E_rel(0) + ∫₀^τ∫ ∇ˢU : (U−u)⊗(u−U)` for two Euler solutions.
///
/// Navier–Stokes trajectories are rejected: their relative energy obeys the
/// viscous variant instead.
pub fn key_inequality(u: &Trajectory, big_u: &Trajectory, tau: f64) -> Result<InequalityResidual> {
    require_euler(u, "the plain relative-energy inequality (two Euler trajectories)")?;
    require_euler(big_u, "the plain relative-energy inequality (two Euler trajectories)")?;
    check_aligned(u, big_u)?;
    let i2 = snapshot_index(big_u, tau)?;
    Ok(PairSeries::new(u, big_u)?.residual(Variant::Plain, 0, i2))
}

/// `E_rel^ν(τ₂) ≤ E_rel^ν(τ₁) + ∫∫ ∇ˢU:(U−u)⊗(u−U) + ν∫∫ ∇u:∇ˢU` over `[τ₁, τ₂]`.
pub fn viscous_key_inequality(
    u_nu: &Trajectory,
    big_u: &Trajectory,
    tau1: f64,
    tau2: f64,
) -> Result<InequalityResidual> {
    if !(u_nu.nu > 0.0) {
        return Err(Error::precondition(format!(
            "the viscous inequality needs ν > 0, got ν = {}",
            u_nu.nu
        )));
    }
    require_euler(big_u, "the viscous inequality's reference solution")?;
    if !(tau1 < tau2) {
        return Err(Error::domain(format!("need τ₁ < τ₂, got [{tau1}, {tau2}]")));
    }
    check_aligned(u_nu, big_u)?;
    let i1 = snapshot_index(big_u, tau1)?;
    let i2 = snapshot_index(big_u, tau2)?;
    Ok(PairSeries::new(u_nu, big_u)?.residual(Variant::Viscous, i1, i2))
}

/// `E_{U_ε}(τ) − E_{U_ε}(0)` against `−∫₀^τ∫ R_ε^U : ∇ˢU_ε`; `slack = rhs − lhs`
/// and the residual is its absolute value.
pub fn mollified_energy_balance(big_u: &Trajectory, spec: &MollifierSpec, tau: f64) -> Result<InequalityResidual> {
    require_euler(big_u, "the mollified energy balance")?;
    let i2 = snapshot_index(big_u, tau)?;
    let mut times = Vec::with_capacity(i2 + 1);
    let mut flux = Vec::with_capacity(i2 + 1);
    let mut energy = Vec::with_capacity(i2 + 1);
    for s in &big_u.states[..=i2] {
        let smooth = mollify(&s.velocity, spec)?;
        let (r, _) = commutator(&s.velocity, spec, big_u.sigma)?;
        times.push(s.t);
        flux.push(-r.contract(&sym_gradient(&smooth))?.integral());
        energy.push(0.5 * lp_norm(&smooth, 2.0)?.powi(2));
    }
    let (fine, coarse) = trapezoid_pair(&times, &flux, 0, i2);
    let lhs = energy[i2] - energy[0];
    Ok(InequalityResidual {
        variant: Variant::Mollified { epsilon: spec.epsilon },
        tau1: 0.0,
        tau2: times[i2],
        lhs,
        rhs: fine,
        slack: fine - lhs,
        quadrature_gap: (fine - coarse).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub is_euler: bool,
    pub note: Option<String>,
    /// `max_τ |E(τ) − E(0)| / E(0)`.
    pub max_rel_drift: f64,
    pub sigma: f64,
    pub times: Vec<f64>,
    /// `‖U(t)‖_{2+σ}`.
    pub l2psigma_velocity: Vec<f64>,
    /// `‖∇ˢU(t)‖_exp`.
    pub lexp_sym_gradient: Vec<f64>,
}

impl ConservationReport {
    pub fn ok(&self, tol_cons: f64) -> bool {
        self.is_euler && self.max_rel_drift <= tol_cons && self.lexp_sym_gradient.iter().all(|v| v.is_finite())
    }
}

pub fn energy_conservation_check(big_u: &Trajectory, sigma: f64) -> Result<ConservationReport> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
    }
    let is_euler = big_u.nu == 0.0;
    let e0 = big_u.ledger[0].energy;
    let max_rel_drift =
        big_u.ledger.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max) / e0.max(f64::MIN_POSITIVE);
    let l2psigma_velocity = big_u
        .states
        .iter()
        .map(|s| lp_norm(&s.velocity, 2.0 + sigma))
        .collect::<Result<_>>()?;
    Ok(ConservationReport {
        is_euler,
        note: (!is_euler).then(|| format!("not an Euler trajectory (ν = {})", big_u.nu)),
        max_rel_drift,
        sigma,
        times: big_u.times(),
        l2psigma_velocity,
        lexp_sym_gradient: big_u.ledger.iter().map(|r| r.lexp_sym_gradient).collect(),
    })
}
