//! Scalar Grönwall machinery behind the vanishing-viscosity rate: time
//! profiles, the splitting functions `p, q`, the window length `t₀`, the
//! iterated per-window bounds and the constants `M`, `ν̄` of the certified
//! estimate `sup_t ‖u^ν − U‖₂ ≤ M ν^{1/M}`.
//!
//! # Closure used for the per-window constant
//!
//! With `y = ‖u^ν − U‖₂²` and truncation level `ν^{−γ}`, every window
//! `[s, τ]` obeys
//!
//! ```text
//! y(τ) ≤ y(s) + ν^{θγ}∫q + ∫ p·y·(|log y| + log(ν^{−γ} + 1) + 1)
//! ```
//!
//! `y` is bounded a priori by `Y* = |Ω|^{σ/(2+σ)} sup h²`. Put
//! `ỹ = y + ν^{θγ}` so that `ν^{θγ} ≤ ỹ ≤ 1 + Y*` and the log factor is at most
//! `(1+θ)γ·log(1/ν) + Λ` with `Λ = log(2e) + log(1 + Y*)`. Grönwall on window
//! `k` with `γ_k = e_{k−1}` (and `e_0 = 1`, `y(0) = 0`) then gives
//! `y ≤ B_k ν^{e_k}`, where
//!
//! ```text
//! B_k = (B_{k−1} + 1 + Q_k)·exp(P_k Λ),   e_k = e_{k−1}·θ/2,
//! ```
//!
//! because `∫_window p ≤ θ/4` and `θ ≤ 1/2` keep the exponent
//! `θe − (1+θ)e·P_k` above `θe/2`. Taking square roots,
//! `M = max{C^N, 2(2/θ)^N}` with `C = max(1, max_k B_k^{1/k})` suffices.

use std::f64::consts::{E, LN_2};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::TORUS_MEASURE;
use crate::orlicz::INTERP_CONSTANT;

/// Smallest `ν̄` that still counts as a certificate.
pub const NU_BAR_FLOOR: f64 = 1e-12;
/// Relative local error target of the comparison ODE integrator.
pub const ODE_TOL: f64 = 1e-10;
/// Upper limit on the resampled mesh used by [`certify`].
pub const MAX_CERT_CELLS: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeProfile {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::input("time profile mesh is empty"));
        }
        if times.len() != values.len() {
            return Err(Error::input(format!(
                "time profile has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::input(
                "time profile times must be finite and strictly increasing",
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input("time profile values must be finite and nonnegative"));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` on the uniform mesh of `cells` cells over `[0, t_end]`.
    pub fn from_fn(t_end: f64, cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let times = uniform_mesh(t_end, cells)?;
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn constant(t_end: f64, cells: usize, c: f64) -> Result<Self> {
        Self::from_fn(t_end, cells, |_| c)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Trapezoid integral over the mesh.
    pub fn integral(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Piecewise-linear interpolant, constant outside the mesh.
    pub fn at(&self, t: f64) -> f64 {
        let ts = &self.times;
        if t <= ts[0] {
            return self.values[0];
        }
        if t >= self.t_end() {
            return *self.values.last().unwrap();
        }
        let k = ts.partition_point(|&s| s <= t) - 1;
        let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    pub fn resample(&self, times: &[f64]) -> Result<Self> {
        Self::new(times.to_vec(), times.iter().map(|&t| self.at(t)).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.times.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Mesh width when the mesh is uniform to relative precision `1e−9`.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = (self.t_end() - self.times[0]) / (self.times.len() - 1) as f64;
        let ok = self.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        ok.then_some(h)
    }

    /// SHA-256 over the little-endian bytes of times then values.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for x in self.times.iter().chain(&self.values) {
            hasher.update(x.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

fn uniform_mesh(t_end: f64, cells: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) || cells == 0 {
        return Err(Error::domain(format!(
            "uniform mesh needs T > 0 and at least one cell, got T = {t_end}, cells = {cells}"
        )));
    }
    Ok((0..=cells).map(|k| t_end * k as f64 / cells as f64).collect())
}

/// `θ = σ/(4+σ)`.
pub fn theta_of(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(sigma / (4.0 + sigma))
}

/// Constant in `‖F‖_r ≤ C‖F‖_exp` on the torus: Hölder up to `m = ⌈r⌉` and
/// `∫|F|^m ≤ m!·‖F‖_exp^m`.
pub fn embedding_constant(r: f64) -> Result<f64> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::domain(format!("embedding exponent must be >= 1, got {r}")));
    }
    let m = r.ceil();
    let log_fact: f64 = (1..=m as u64).map(|k| (k as f64).ln()).sum();
    Ok((TORUS_MEASURE.ln() * (1.0 / r - 1.0 / m) + log_fact / m).exp())
}

/// `p = c_interp·f·(1 + c_σ·h^{1+θ})`, `q = c_σ·f·h^{1+θ} + g²` on the mesh of `f`.
pub fn derive_pq(
    f: &TimeProfile,
    g: &TimeProfile,
    h: &TimeProfile,
    sigma: f64,
    c_interp: f64,
    c_sigma: f64,
) -> Result<(TimeProfile, TimeProfile)> {
    let theta = theta_of(sigma)?;
    if !(c_interp > 0.0 && c_sigma > 0.0) {
        return Err(Error::domain("splitting constants must be positive"));
    }
    let g = g.resample(f.times())?;
    let h = h.resample(f.times())?;
    let mut p = Vec::with_capacity(f.times.len());
    let mut q = Vec::with_capacity(f.times.len());
    for k in 0..f.times.len() {
        let hh = h.values[k].powf(1.0 + theta);
        p.push(c_interp * f.values[k] * (1.0 + c_sigma * hh));
        q.push(c_sigma * f.values[k] * hh + g.values[k].powi(2));
    }
    Ok((
        TimeProfile::new(f.times.clone(), p)?,
        TimeProfile::new(f.times.clone(), q)?,
    ))
}

/// Per-cell upper integrals of a profile on a uniform mesh: trapezoid plus
/// `L·h²/4`, the trapezoid error bound of an `L`-Lipschitz function, with `L`
/// the largest sampled slope.
#[derive(Clone, Debug)]
struct CellMasses {
    step: f64,
    prefix: Vec<f64>,
    error_bound: f64,
}

impl CellMasses {
    fn new(p: &TimeProfile, t_end: f64) -> Result<Self> {
        let step = p
            .uniform_step()
            .ok_or_else(|| Error::input("certification needs profiles on a uniform time mesh"))?;
        if p.times[0].abs() > 1e-12 || (p.t_end() - t_end).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::input(format!(
                "profile mesh [{}, {}] does not span [0, {t_end}]",
                p.times[0],
                p.t_end()
            )));
        }
        let lip = p
            .values
            .windows(2)
            .map(|v| (v[1] - v[0]).abs() / step)
            .fold(0.0, f64::max);
        let pad = lip * step * step / 4.0;
        let mut prefix = Vec::with_capacity(p.values.len());
        prefix.push(0.0);
        for v in p.values.windows(2) {
            let cell = 0.5 * step * (v[0] + v[1]) + pad;
            prefix.push(prefix.last().unwrap() + cell);
        }
        let cells = p.values.len() - 1;
        Ok(Self {
            step,
            prefix,
            error_bound: pad * cells as f64,
        })
    }

    fn cells(&self) -> usize {
        self.prefix.len() - 1
    }

    fn sum(&self, a: usize, b: usize) -> f64 {
        self.prefix[b] - self.prefix[a]
    }

    /// `max_s ∫_s^{s+k cells}`.
    fn sup_window(&self, k: usize) -> f64 {
        let n = self.cells();
        if k >= n {
            return self.sum(0, n);
        }
        (0..=n - k).map(|s| self.sum(s, s + k)).fold(0.0, f64::max)
    }

    /// Largest window length (in cells) whose sup-window mass is `≤ limit`.
    fn largest_window(&self, limit: f64) -> usize {
        let (mut lo, mut hi) = (0usize, self.cells());
        if self.sup_window(hi) <= limit {
            return hi;
        }
        // invariant: sup_window(lo) ≤ limit < sup_window(hi)
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.sup_window(mid) <= limit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Largest mesh-aligned `t₀` with `sup_s ∫_s^{s+t₀} p ≤ θ/4`, and `N = ⌈T/t₀⌉`.
pub fn choose_t0(p: &TimeProfile, theta: f64, t_end: f64) -> Result<(f64, usize)> {
    let masses = CellMasses::new(p, t_end)?;
    let k = window_cells(&masses, theta)?;
    Ok((k as f64 * masses.step, masses.cells().div_ceil(k)))
}

fn window_cells(masses: &CellMasses, theta: f64) -> Result<usize> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    let k = masses.largest_window(theta / 4.0);
    if k == 0 {
        return Err(Error::Certification(format!(
            "a single mesh cell of width {:.3e} already carries more than θ/4 = {:.3e} of ∫p",
            masses.step,
            theta / 4.0
        )));
    }
    Ok(k)
}

/// Exponent bookkeeping of the window iteration, generic so it can be run in
/// exact arithmetic. For incoming exponent `e` the window bound has exponent
/// `θe − (1+θ)e·P`, which the certificate rounds down to `θe/2`. Returns the
/// ladder `e_0 = 1, e_1, …, e_N` and the unrounded exponents.
pub fn exponent_ladder<T>(theta: &T, window_masses: &[T]) -> (Vec<T>, Vec<T>)
where
    T: Clone
        + One
        + Zero
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>,
{
    let two = T::one() + T::one();
    let mut ladder = vec![T::one()];
    let mut raw = Vec::with_capacity(window_masses.len());
    for mass in window_masses {
        let e = ladder.last().unwrap().clone();
        raw.push(theta.clone() * e.clone() - (T::one() + theta.clone()) * e.clone() * mass.clone());
        ladder.push(e * theta.clone() / two.clone());
    }
    (ladder, raw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureBounds {
    pub p: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDigests {
    pub f: String,
    pub g: String,
    pub h: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub sigma: f64,
    pub theta: f64,
    pub t_end: f64,
    pub t0: f64,
    #[serde(rename = "N")]
    pub n_windows: usize,
    pub mesh_cells: usize,
    pub c_interp: f64,
    pub c_sigma: f64,
    /// A priori bound on `‖u^ν − U‖₂²`.
    pub y_star: f64,
    pub lambda: f64,
    pub int_p: f64,
    pub int_q: f64,
    /// Padded `∫p`, `∫q` over each window.
    pub window_p: Vec<f64>,
    pub window_q: Vec<f64>,
    /// `log B_k`: `y ≤ B_k ν^{e_k}` on window `k`.
    pub log_window_constants: Vec<f64>,
    /// `γ_k = (θ/2)^{k−1}`; entries may underflow to zero, the log ladder is exact.
    pub gamma_ladder: Vec<f64>,
    pub log10_gamma_ladder: Vec<f64>,
    /// Per-window constant `C`; `None` when it overflows `f64`.
    #[serde(rename = "C")]
    pub c_envelope: Option<f64>,
    pub log10_c_envelope: f64,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    #[serde(rename = "log10_M")]
    pub log10_big_m: f64,
    pub nu_bar: f64,
    pub quadrature_error_bounds: QuadratureBounds,
    pub input_profile_digests: ProfileDigests,
    pub notes: Vec<String>,
}

impl RateCertificate {
    fn ln_m(&self) -> f64 {
        self.log10_big_m * std::f64::consts::LN_10
    }

    /// `log(M ν^{1/M})`.
    pub fn log_bound(&self, nu: f64) -> f64 {
        let ln_m = self.ln_m();
        ln_m + nu.ln() * (-ln_m).exp()
    }

    /// `M ν^{1/M}`, `+∞` when it overflows.
    pub fn bound(&self, nu: f64) -> f64 {
        self.log_bound(nu).exp()
    }

    /// `M ν^{1/M} ≥ distance`, compared in log space.
    pub fn dominates(&self, nu: f64, distance: f64) -> bool {
        distance <= 0.0 || self.log_bound(nu) >= distance.ln()
    }

    /// `1/M`, the certified rate exponent.
    pub fn certified_rate(&self) -> f64 {
        (-self.ln_m()).exp()
    }

    /// Window bounds `log(B_k ν^{e_k})` for `y = ‖u^ν − U‖₂²`.
    pub fn log_window_bounds(&self, nu: f64) -> Vec<f64> {
        self.log_window_constants
            .iter()
            .enumerate()
            .map(|(k, lb)| lb + (self.theta / 2.0).powi(k as i32 + 1) * nu.ln())
            .collect()
    }

    /// Window end times `t₀, 2t₀, …, T`.
    pub fn window_ends(&self) -> Vec<f64> {
        (1..=self.n_windows)
            .map(|k| (k as f64 * self.t0).min(self.t_end))
            .collect()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Splitting constants for exponent `σ`: `(2(1 + 2 log 2), 2·C_emb(1/θ))`.
pub fn splitting_constants(sigma: f64) -> Result<(f64, f64)> {
    let theta = theta_of(sigma)?;
    Ok((2.0 * INTERP_CONSTANT, 2.0 * embedding_constant(1.0 / theta)?))
}

/// Certified constants for `sup_t ‖u^ν − U‖₂ ≤ M ν^{1/M}` from envelopes
/// `‖∇ˢU‖_exp ≤ f`, `‖∇ˢU‖₂ + √ν‖∇u^ν‖₂ ≤ g`, `‖U‖_{2+σ} + ‖u^ν‖_{2+σ} ≤ h`.
///
/// Profiles are resampled onto a uniform mesh fine enough that no cell holds
/// more than `θ/16` of `∫p`. `σ` must lie in `(0, 4]` so that `θ ≤ 1/2`.
pub fn certify(f: &TimeProfile, g: &TimeProfile, h: &TimeProfile, sigma: f64, t_end: f64) -> Result<RateCertificate> {
    let theta = theta_of(sigma)?;
    if sigma > 4.0 {
        return Err(Error::domain(format!(
            "sigma must be <= 4 so that θ <= 1/2, got {sigma}"
        )));
    }
    for (name, prof) in [("f", f), ("g", g), ("h", h)] {
        if prof.times[0].abs() > 1e-12 || (prof.t_end() - t_end).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::input(format!("profile {name} does not span [0, {t_end}]")));
        }
    }
    let (c_interp, c_sigma) = splitting_constants(sigma)?;
    let h_sq = h.map(|v| v * v)?;

    // resolve p so that every cell carries at most θ/16
    let (p0, _) = derive_pq(f, g, &h_sq, sigma, c_interp, c_sigma)?;
    let base_cells = f.times.len() - 1;
    let needed = (16.0 * t_end * p0.max() / theta).ceil();
    if needed > MAX_CERT_CELLS as f64 {
        return Err(Error::Certification(format!(
            "profiles need {needed:.0} mesh cells to resolve θ/4 windows (limit {MAX_CERT_CELLS})"
        )));
    }
    let cells = base_cells.max(needed as usize).max(1);
    let mesh = uniform_mesh(t_end, cells)?;
    let (f_u, g_u, h_u) = (f.resample(&mesh)?, g.resample(&mesh)?, h_sq.resample(&mesh)?);
    let (p, q) = derive_pq(&f_u, &g_u, &h_u, sigma, c_interp, c_sigma)?;

    let pm = CellMasses::new(&p, t_end)?;
    let qm = CellMasses::new(&q, t_end)?;
    let k = window_cells(&pm, theta)?;
    let n_windows = cells.div_ceil(k);

    let y_star = TORUS_MEASURE.powf(sigma / (2.0 + sigma)) * h_sq.max();
    let lambda = (2.0 * E).ln() + y_star.ln_1p();

    let mut window_p = Vec::with_capacity(n_windows);
    let mut window_q = Vec::with_capacity(n_windows);
    let mut log_b = Vec::with_capacity(n_windows);
    let mut prev = f64::NEG_INFINITY;
    for w in 0..n_windows {
        let (a, b) = (w * k, ((w + 1) * k).min(cells));
        let (pw, qw) = (pm.sum(a, b), qm.sum(a, b));
        let lb = log_add_exp(prev, qw.ln_1p()) + pw * lambda;
        window_p.push(pw);
        window_q.push(qw);
        log_b.push(lb);
        prev = lb;
    }
    let ln_c = log_b
        .iter()
        .enumerate()
        .map(|(j, lb)| lb / (j + 1) as f64)
        .fold(0.0, f64::max);
    let n = n_windows as f64;
    let ln_m = (n * ln_c).max(LN_2 + n * (2.0 / theta).ln());
    let nu_bar = 0.5f64.min(2f64.powf(-2.0 / theta));
    if nu_bar < NU_BAR_FLOOR {
        return Err(Error::Certification(format!(
            "ν̄ = {nu_bar:.3e} falls below the floor {NU_BAR_FLOOR:e}"
        )));
    }
    let log10_gamma_ladder: Vec<f64> = (0..n_windows).map(|j| j as f64 * (theta / 2.0).log10()).collect();
    let finite = |ln: f64| {
        let v = ln.exp();
        v.is_finite().then_some(v)
    };
    Ok(RateCertificate {
        sigma,
        theta,
        t_end,
        t0: k as f64 * pm.step,
        n_windows,
        mesh_cells: cells,
        c_interp,
        c_sigma,
        y_star,
        lambda,
        int_p: pm.sum(0, cells),
        int_q: qm.sum(0, cells),
        window_p,
        window_q,
        log_window_constants: log_b,
        gamma_ladder: log10_gamma_ladder.iter().map(|l| 10f64.powf(*l)).collect(),
        log10_gamma_ladder,
        c_envelope: finite(ln_c),
        log10_c_envelope: ln_c / std::f64::consts::LN_10,
        big_m: finite(ln_m),
        log10_big_m: ln_m / std::f64::consts::LN_10,
        nu_bar,
        quadrature_error_bounds: QuadratureBounds {
            p: pm.error_bound,
            q: qm.error_bound,
        },
        input_profile_digests: ProfileDigests {
            f: f.digest(),
            g: g.digest(),
            h: h.digest(),
        },
        notes: vec![
            format!("profiles resampled onto {cells} uniform cells; cell masses padded by L·h²/4"),
            "window restarts use admissibility of u^ν on each window, which holds by construction for Leray-Hopf solutions".into(),
            format!("ν̄ = min(1/2, 2^(−2/θ)) is the restart threshold; the window bounds hold for every ν in (0, 1)"),
        ],
    })
}

/// Uniform smallness: the largest mesh-aligned `t_η` such that every window
/// of length `t_η` carries at most `η` of `C_r f h² + g²/4`, `r = (2+σ)/σ`.
/// This bounds `E_rel^ν(τ₁ + τ) − E_rel^ν(τ₁)` by `η` for `τ ≤ t_η`, all `ν < 1`.
pub fn uniform_smallness_time(f: &TimeProfile, g: &TimeProfile, h: &TimeProfile, sigma: f64, eta: f64) -> Result<f64> {
    theta_of(sigma)?;
    if !(eta > 0.0) {
        return Err(Error::domain(format!("eta must be > 0, got {eta}")));
    }
    let c_r = embedding_constant((2.0 + sigma) / sigma)?;
    let g = g.resample(f.times())?;
    let h = h.resample(f.times())?;
    let values = (0..f.times.len())
        .map(|k| c_r * f.values[k] * h.values[k].powi(2) + 0.25 * g.values[k].powi(2))
        .collect();
    let s = TimeProfile::new(f.times.clone(), values)?;
    let masses = CellMasses::new(&s, s.t_end())?;
    let k = masses.largest_window(eta);
    if k == 0 {
        return Err(Error::Certification(format!(
            "a single mesh cell already exceeds η = {eta:e}"
        )));
    }
    Ok(k as f64 * masses.step)
}

fn rk4(rhs: &impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> f64 {
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    let k4 = rhs(t + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
}

/// Adaptive RK4 with step-doubling error control across the given
/// breakpoints. Returns `+∞` once the solution leaves the finite range.
fn integrate(rhs: impl Fn(f64, f64) -> f64, y0: f64, breakpoints: &[f64]) -> f64 {
    let mut y = y0;
    for seg in breakpoints.windows(2) {
        let (mut t, end) = (seg[0], seg[1]);
        let mut h = end - t;
        while t < end {
            h = h.min(end - t);
            let full = rk4(&rhs, t, y, h);
            let half = rk4(&rhs, t + 0.5 * h, rk4(&rhs, t, y, 0.5 * h), 0.5 * h);
            if !half.is_finite() || half > f64::MAX / 4.0 {
                return f64::INFINITY;
            }
            let err = (half - full).abs();
            if err <= ODE_TOL * half.abs().max(1e-300) || h <= 1e-14 * (end - seg[0]).max(1e-300) {
                y = half;
                t += h;
                if err < ODE_TOL * half.abs() / 32.0 {
                    h *= 2.0;
                }
            } else {
                h *= 0.5;
            }
        }
    }
    y
}

fn breakpoints(f: &TimeProfile, t0: f64, t1: f64) -> Vec<f64> {
    let mut pts = vec![t0];
    pts.extend(f.times.iter().cloned().filter(|&t| t > t0 && t < t1));
    pts.push(t1);
    pts
}

/// `y(τ)` for `y' = f(t)·y·(|log y| + L)`, `y(0) = a`.
pub fn ode_oracle(a: f64, f: &TimeProfile, log_const: f64, tau: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("initial value must be > 0, got {a}")));
    }
    if !(tau >= 0.0) {
        return Err(Error::domain(format!("tau must be >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(a);
    }
    let rhs = |t: f64, y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            f.at(t) * y * (y.ln().abs() + log_const)
        }
    };
    Ok(integrate(rhs, a, &breakpoints(f, 0.0, tau)))
}

/// Maximal solution of the window inequalities the certificate is built on:
/// on window `k`, `y' = ν^{θγ_k} q + p·y·(|log y| + log(ν^{−γ_k} + 1) + 1)`
/// with `y(0) = 0`. Returns `y` at each window end.
pub fn window_comparison(cert: &RateCertificate, p: &TimeProfile, q: &TimeProfile, nu: f64) -> Result<Vec<f64>> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::domain(format!("ν must lie in (0, 1), got {nu}")));
    }
    let mut y = 0.0;
    let mut out = Vec::with_capacity(cert.n_windows);
    let mut start = 0.0;
    for (k, end) in cert.window_ends().into_iter().enumerate() {
        let gamma = (cert.theta / 2.0).powi(k as i32);
        let src = nu.powf(cert.theta * gamma);
        let log_term = (nu.powf(-gamma)).ln_1p() + 1.0;
        let rhs = |t: f64, y: f64| {
            let growth = if y > 0.0 { y * (y.ln().abs() + log_term) } else { 0.0 };
            src * q.at(t) + p.at(t) * growth
        };
        y = integrate(rhs, y, &breakpoints(p, start, end));
        out.push(y);
        start = end;
    }
    Ok(out)
}
