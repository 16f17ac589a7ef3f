//! Check suites behind the non-sweep subcommands.

use expflow::field::random::{random_divergence_free, random_scalar};
use expflow::field::{GridSpec, ScalarField};
use expflow::mollifier::{commutator, identity_residual, MollifierKind, MollifierSpec};
use expflow::orlicz::{
    duality_gap, embedding_check, log_interpolation, luxemburg_norm, luxemburg_norm_samples, INTERP_CONSTANT,
};
use expflow::relative_energy::{energy_conservation_check, mollified_energy_balance};
use expflow::solver::{run, taylor_green, SolverConfig, TimeStep};
use expflow::sweep::Check;
use expflow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct OrliczOptions {
    pub grid: usize,
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
    pub fields: usize,
    pub pairs: usize,
}

fn random_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    let modes = rng.gen_range(1..=6);
    let offset = rng.gen_range(-0.5..0.5);
    let amp = rng.gen_range(0.1..5.0);
    random_scalar(grid, modes, offset, rng.gen()).scale(amp)
}

pub fn orlicz(opts: &OrliczOptions) -> Result<Vec<Check>> {
    let grid = GridSpec::new(opts.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();

    let mut worst = f64::INFINITY;
    for _ in 0..opts.samples {
        let (s, t) = (rng.gen_range(0.0..=50.0), rng.gen_range(0.0..=50.0));
        worst = worst.min(duality_gap(s, t)?);
    }
    checks.push(Check::new(
        "duality_gap",
        worst >= -1e-12,
        format!("min gap {worst:.3e} over {} samples", opts.samples),
    ));

    let mut unit = vec![0.0; 1024];
    unit[..64].fill(1.0);
    let ind = luxemburg_norm_samples(&unit, 1.0 / 64.0, opts.tol)?.norm;
    let exact = 1.0 / std::f64::consts::LN_2;
    checks.push(Check::new(
        "indicator_norm",
        (ind - exact).abs() <= 1e-9,
        format!("norm {ind:.12} vs 1/log 2 = {exact:.12}"),
    ));

    let (mut resid, mut homog, mut tri, mut emb, mut emb_worst) =
        (0.0f64, 0.0f64, f64::INFINITY, 0usize, f64::NEG_INFINITY);
    for _ in 0..opts.fields {
        let f = random_field(&grid, &mut rng);
        let g = random_field(&grid, &mut rng);
        let nf = luxemburg_norm(&f, opts.tol)?;
        let ng = luxemburg_norm(&g, opts.tol)?.norm;
        resid = resid.max(nf.residual.abs());
        let lam = rng.gen_range(0.1..10.0);
        homog = homog.max((luxemburg_norm(&f.scale(lam), opts.tol)?.norm - lam * nf.norm).abs());
        let sum = luxemburg_norm(&f.zip_with(&g, |a, b| a + b)?, opts.tol)?.norm;
        tri = tri.min(nf.norm + ng - sum);
        for p in 1..=4 {
            let e = embedding_check(&f, p)?;
            emb_worst = emb_worst.max(e.lp_norm - e.bound);
            if !e.holds(0.0) {
                emb += 1;
            }
        }
    }
    let slack = 10.0 * opts.tol;
    checks.push(Check::new(
        "luxemburg_residual",
        resid <= opts.tol,
        format!("max |modular − 1| {resid:.3e} over {} fields", opts.fields),
    ));
    checks.push(Check::new(
        "luxemburg_homogeneity_triangle",
        homog <= slack && tri >= -slack,
        format!("homogeneity error {homog:.3e}, triangle slack {tri:.3e}"),
    ));
    checks.push(Check::new(
        "embedding",
        emb == 0,
        format!("{emb} violations, max lp − bound {emb_worst:.3e}"),
    ));

    let mut viol = 0;
    for _ in 0..opts.pairs {
        let f = random_field(&grid, &mut rng);
        let g = random_field(&grid, &mut rng);
        if !log_interpolation(&f, &g, INTERP_CONSTANT)?.holds() {
            viol += 1;
        }
    }
    checks.push(Check::new(
        "log_interpolation",
        viol == 0,
        format!("{viol} violations over {} pairs", opts.pairs),
    ));
    Ok(checks)
}

pub fn identity(grid: usize, seed: u64, tol: f64, fields: usize) -> Result<Vec<Check>> {
    let g = GridSpec::new(grid)?;
    let mut worst = identity_residual(&taylor_green(0.0, 0.0, &g)?)?;
    let max_mode = (grid / 3).min(8);
    for k in 0..fields as u64 {
        worst = worst.max(identity_residual(&random_divergence_free(&g, max_mode, seed + k))?);
    }
    let mut checks = vec![Check::new(
        "identity_residual",
        worst <= tol,
        format!("max residual {worst:.3e} on n = {grid} (Taylor–Green + {fields} random)"),
    )];
    // data band-limited just below n/2 aliases on n and is resolved on 2n
    let modes = grid / 2 - 1;
    let coarse = identity_residual(&random_divergence_free(&g, modes, seed))?;
    let fine = identity_residual(&random_divergence_free(&GridSpec::new(2 * grid)?, modes, seed))?;
    checks.push(Check::new(
        "identity_refinement",
        4.0 * fine <= coarse,
        format!("residual {coarse:.3e} on n = {grid}, {fine:.3e} on n = {}", 2 * grid),
    ));
    Ok(checks)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

pub struct EnergyOptions {
    pub grid: usize,
    pub seed: u64,
    pub tol: f64,
    pub t_end: f64,
    pub modes: usize,
}

pub fn energy(opts: &EnergyOptions) -> Result<Vec<Check>> {
    let g = GridSpec::new(opts.grid)?;
    let u0 = random_divergence_free(&g, opts.modes, opts.seed);
    let euler = run(&u0, &SolverConfig::new(&g, 0.0, opts.t_end, TimeStep::Auto))?;
    let cons = energy_conservation_check(&euler, 2.0)?;
    let mut checks = vec![Check::new(
        "energy_conservation",
        cons.ok(opts.tol),
        format!("max relative drift {:.3e} over T = {}", cons.max_rel_drift, opts.t_end),
    )];

    let short = 0.2f64.min(opts.t_end);
    let mut residuals = Vec::new();
    let mut norms = Vec::new();
    for eps in [0.4, 0.2, 0.1] {
        // the residual is trapezoid error O(dt²) on a flux that sharpens as ε shrinks,
        // so dt is refined with ε²
        let ladder_run = run(
            &u0,
            &SolverConfig::new(&g, 0.0, short, TimeStep::Fixed(eps * eps / 16.0)),
        )?;
        let spec = MollifierSpec::new(eps, MollifierKind::SpectralGaussian)?;
        residuals.push(mollified_energy_balance(&ladder_run, &spec, short)?.residual());
        norms.push(commutator(&u0, &spec, 2.0)?.1.norm_1ps2);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check::new(
        "mollified_balance_ladder",
        decreasing(&residuals),
        format!("residuals {} along ε = 0.4, 0.2, 0.1", sci(&residuals)),
    ));
    checks.push(Check::new(
        "commutator_ladder",
        decreasing(&norms),
        format!("‖R_ε‖ {}", sci(&norms)),
    ));

    let steady = run(
        &taylor_green(0.0, 0.0, &g)?,
        &SolverConfig::new(&g, 0.0, short, TimeStep::Fixed(0.01)),
    )?;
    let spec = MollifierSpec::gaussian(0.2)?;
    let r = mollified_energy_balance(&steady, &spec, short)?.residual();
    checks.push(Check::new(
        "steady_balance",
        r <= 1e-8,
        format!("steady Taylor–Green residual {r:.3e}"),
    ));
    Ok(checks)
}
