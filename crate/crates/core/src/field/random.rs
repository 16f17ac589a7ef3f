//! Seeded smooth random fields for fuzzing and test data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::GridSpec;
use super::ops::lp_norm;
use super::types::{ScalarField, VectorField2};

struct Mode {
    kx: f64,
    ky: f64,
    a: f64,
    b: f64,
}

/// Modes with `1 ≤ max(|kx|, |ky|) ≤ max_mode`, one per ± pair.
fn random_modes(max_mode: usize, rng: &mut ChaCha8Rng) -> Vec<Mode> {
    let k = max_mode as i64;
    let mut modes = Vec::new();
    for ky in -k..=k {
        for kx in -k..=k {
            // half plane: (kx, ky) and (−kx, −ky) give the same real mode
            if ky < 0 || (ky == 0 && kx <= 0) {
                continue;
            }
            let decay = 1.0 / ((kx * kx + ky * ky) as f64);
            modes.push(Mode {
                kx: kx as f64,
                ky: ky as f64,
                a: rng.gen_range(-1.0..1.0) * decay,
                b: rng.gen_range(-1.0..1.0) * decay,
            });
        }
    }
    modes
}

fn synthesize(grid: &GridSpec, modes: &[Mode], f: impl Fn(&Mode, f64) -> (f64, f64)) -> (ScalarField, ScalarField) {
    let n = grid.n();
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];
    for j in 0..n {
        let y = grid.coord(j);
        for i in 0..n {
            let x = grid.coord(i);
            let idx = j * n + i;
            for m in modes {
                let (du, dv) = f(m, m.kx * x + m.ky * y);
                u[idx] += du;
                v[idx] += dv;
            }
        }
    }
    (
        ScalarField::new(grid, u).expect("sized from grid"),
        ScalarField::new(grid, v).expect("sized from grid"),
    )
}

/// Band-limited divergence-free velocity `∇^⊥ψ` with zero mean, scaled to
/// the Taylor–Green `L²` norm `π√2`.
pub fn random_divergence_free(grid: &GridSpec, max_mode: usize, seed: u64) -> VectorField2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = random_modes(max_mode, &mut rng);
    // ψ = a cos θ + b sin θ, u = ∂ᵧψ, v = −∂ₓψ
    let (u, v) = synthesize(grid, &modes, |m, th| {
        let d = -m.a * th.sin() + m.b * th.cos();
        (m.ky * d, -m.kx * d)
    });
    let field = VectorField2 { u, v };
    let norm = lp_norm(&field, 2.0).expect("p = 2");
    if norm == 0.0 {
        return field;
    }
    field.scale(std::f64::consts::PI * 2f64.sqrt() / norm)
}

/// Band-limited real scalar field with zero mean and unit sup norm, plus `offset`.
pub fn random_scalar(grid: &GridSpec, max_mode: usize, offset: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = random_modes(max_mode, &mut rng);
    let (f, _) = synthesize(grid, &modes, |m, th| (m.a * th.cos() + m.b * th.sin(), 0.0));
    let scale = f.max_abs();
    let f = if scale > 0.0 { f.scale(1.0 / scale) } else { f };
    f.map(|v| v + offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ops::max_spectral_divergence;

    #[test]
    fn random_velocity_is_divergence_free_and_seeded() {
        let g = GridSpec::new(32).unwrap();
        let a = random_divergence_free(&g, 4, 3);
        let b = random_divergence_free(&g, 4, 3);
        let c = random_divergence_free(&g, 4, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(max_spectral_divergence(&a) < 1e-12);
        assert!(a.mean().0.abs() < 1e-14);
    }
}
