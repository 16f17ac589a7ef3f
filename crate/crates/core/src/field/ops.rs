//! Spectral differential operators, the Leray projector and the norms used
//! throughout the crate.

use num_complex::Complex64;

use super::types::{Magnitude, ScalarField, Spectrum, SymTensor2, VectorField2};
use crate::error::{Error, Result};
use crate::orlicz::{self, LuxemburgResult};

/// Exponent of an `L^p` norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        }
    }
}

pub fn gradient(f: &ScalarField) -> VectorField2 {
    let s = f.spectrum();
    VectorField2 {
        u: s.dx().to_field(),
        v: s.dy().to_field(),
    }
}

/// `(∇U + ∇Uᵀ)/2`.
pub fn sym_gradient(field: &VectorField2) -> SymTensor2 {
    let su = field.u.spectrum();
    let sv = field.v.spectrum();
    let ux = su.dx();
    let vy = sv.dy();
    let cross = su.dy().add(&sv.dx()).expect("components share a grid").scale(0.5);
    SymTensor2 {
        xx: ux.to_field(),
        xy: cross.to_field(),
        yy: vy.to_field(),
    }
}

pub fn divergence(field: &VectorField2) -> ScalarField {
    divergence_spectrum(field).to_field()
}

fn divergence_spectrum(field: &VectorField2) -> Spectrum {
    field
        .u
        .spectrum()
        .dx()
        .add(&field.v.spectrum().dy())
        .expect("components share a grid")
}

/// Scalar vorticity `∂ₓv − ∂ᵧu`.
pub fn vorticity(field: &VectorField2) -> ScalarField {
    field
        .v
        .spectrum()
        .dx()
        .add(&field.u.spectrum().dy().scale(-1.0))
        .expect("components share a grid")
        .to_field()
}

/// Largest modulus of the spectral divergence `k·û`, in physical units
/// (coefficients divided by `n²`).
pub fn max_spectral_divergence(field: &VectorField2) -> f64 {
    let s = divergence_spectrum(field);
    let n2 = field.grid().len() as f64;
    s.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.norm())) / n2
}

/// Orthogonal projection onto divergence-free fields: `û ↦ û − k(k·û)/|k|²`,
/// mean mode untouched.
pub fn leray_project(field: &VectorField2) -> VectorField2 {
    let grid = field.grid().clone();
    let n = grid.n();
    let su = field.u.spectrum();
    let sv = field.v.spectrum();
    let mut pu = su.clone();
    let mut pv = sv.clone();
    for j in 0..n {
        let ky = grid.derivative_wavenumber(j);
        for i in 0..n {
            let kx = grid.derivative_wavenumber(i);
            let idx = j * n + i;
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                // mean mode, and Nyquist lines whose derivative symbol is zero
                continue;
            }
            let a = su.coeffs()[idx];
            let b = sv.coeffs()[idx];
            let kdot = a * kx + b * ky;
            pu.coeffs_mut()[idx] = a - kdot * (kx / k2);
            pv.coeffs_mut()[idx] = b - kdot * (ky / k2);
        }
    }
    VectorField2 {
        u: pu.to_field(),
        v: pv.to_field(),
    }
}

/// Divergence-free velocity `∇^⊥ψ = (∂ᵧψ, −∂ₓψ)` with `−Δψ = ω`, plus a
/// prescribed mean velocity.
pub fn velocity_from_vorticity(omega: &ScalarField, mean: (f64, f64)) -> VectorField2 {
    let grid = omega.grid().clone();
    let psi = omega.spectrum().map_modes(|i, j, c| {
        let kx = grid.wavenumber(i) as f64;
        let ky = grid.wavenumber(j) as f64;
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            c / k2
        }
    });
    let (mu, mv) = mean;
    VectorField2 {
        u: psi.dy().to_field().map(|x| x + mu),
        v: psi.dx().to_field().map(|x| -x + mv),
    }
}

/// Pointwise product of two fields after truncating both to the 2/3 band.
pub fn dealiased_product(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.dealiased().zip_with(&b.dealiased(), |x, y| x * y)
}

/// Grid-quadrature `L^p` norm of the pointwise magnitude.
pub fn lp_norm<F: Magnitude>(field: &F, p: impl Into<Exponent>) -> Result<f64> {
    let m = field.magnitude();
    match p.into() {
        Exponent::Infinity => Ok(m.max_abs()),
        Exponent::Finite(p) if p >= 1.0 => {
            let scale = m.max_abs();
            if scale == 0.0 {
                return Ok(0.0);
            }
            // scaled to avoid overflow for large p
            let s: f64 = m.values().iter().map(|v| (v / scale).powf(p)).sum();
            Ok(scale * (s * field.grid().cell_measure()).powf(1.0 / p))
        }
        Exponent::Finite(p) => Err(Error::domain(format!("L^p norm needs p >= 1, got {p}"))),
    }
}

/// Luxemburg `L^exp` norm of the pointwise magnitude.
pub fn lexp_norm<F: Magnitude>(field: &F) -> Result<f64> {
    Ok(lexp_norm_detailed(field, orlicz::DEFAULT_TOL)?.norm)
}

pub fn lexp_norm_detailed<F: Magnitude>(field: &F, tol: f64) -> Result<LuxemburgResult> {
    orlicz::luxemburg_norm(&field.magnitude(), tol)
}

pub fn l2_inner(a: &VectorField2, b: &VectorField2) -> Result<f64> {
    Ok(a.dot(b)?.integral())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random::random_divergence_free;
    use crate::field::GridSpec;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    fn taylor_green(g: &GridSpec) -> VectorField2 {
        VectorField2::from_fn(g, |x, y| (x.sin() * y.cos(), -x.cos() * y.sin()))
    }

    #[test]
    fn gradient_of_single_mode() {
        let g = grid(32);
        let d = gradient(&ScalarField::from_fn(&g, |x, _| x.sin()));
        assert!(max_diff(&d.u, &ScalarField::from_fn(&g, |x, _| x.cos())) < 1e-13);
        assert!(d.v.max_abs() < 1e-13);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = grid(16);
        let d = gradient(&ScalarField::constant(&g, 1.0));
        assert!(d.u.max_abs() < 1e-15 && d.v.max_abs() < 1e-15);
    }

    #[test]
    fn gradient_of_product_mode() {
        let g = grid(32);
        let d = gradient(&ScalarField::from_fn(&g, |x, y| x.sin() * y.cos()));
        assert!(max_diff(&d.u, &ScalarField::from_fn(&g, |x, y| x.cos() * y.cos())) < 1e-12);
        assert!(max_diff(&d.v, &ScalarField::from_fn(&g, |x, y| -x.sin() * y.sin())) < 1e-12);
    }

    #[test]
    fn gradient_converges_spectrally_for_smooth_data() {
        // non-band-limited analytic data: error drops by orders of magnitude per doubling
        let err = |n: usize| {
            let g = grid(n);
            let d = gradient(&ScalarField::from_fn(&g, |x, _| x.sin().exp()));
            max_diff(&d.u, &ScalarField::from_fn(&g, |x, _| x.cos() * x.sin().exp()))
        };
        let (e8, e16) = (err(8), err(16));
        assert!(e8 > 1e-6);
        assert!(e16 < 1e-4 * e8);
    }

    #[test]
    fn sym_gradient_of_taylor_green_is_diagonal() {
        let g = grid(32);
        let s = sym_gradient(&taylor_green(&g));
        let cc = ScalarField::from_fn(&g, |x, y| x.cos() * y.cos());
        assert!(max_diff(&s.xx, &cc) < 1e-12);
        assert!(max_diff(&s.yy, &cc.scale(-1.0)) < 1e-12);
        assert!(s.xy.max_abs() < 1e-12);
    }

    #[test]
    fn sym_gradient_of_shear_pair() {
        let g = grid(32);
        let s = sym_gradient(&VectorField2::from_fn(&g, |x, y| (y.sin(), -x.sin())));
        assert!(s.xx.max_abs() < 1e-12 && s.yy.max_abs() < 1e-12);
        let expected = ScalarField::from_fn(&g, |x, y| 0.5 * (y.cos() - x.cos()));
        assert!(max_diff(&s.xy, &expected) < 1e-12);
    }

    #[test]
    fn sym_gradient_of_constant_is_zero() {
        let g = grid(16);
        let s = sym_gradient(&VectorField2::from_fn(&g, |_, _| (0.7, -1.3)));
        assert!(lp_norm(&s, f64::INFINITY).unwrap() < 1e-14);
    }

    #[test]
    fn leray_fixes_divergence_free_fields() {
        let g = grid(32);
        let u = taylor_green(&g);
        let p = leray_project(&u);
        assert!(max_diff(&p.u, &u.u) < 1e-12 && max_diff(&p.v, &u.v) < 1e-12);
    }

    #[test]
    fn leray_annihilates_gradients() {
        let g = grid(32);
        let grad = gradient(&ScalarField::from_fn(&g, |x, y| x.sin() * y.sin()));
        let p = leray_project(&grad);
        assert!(p.u.max_abs() < 1e-12 && p.v.max_abs() < 1e-12);
    }

    #[test]
    fn leray_is_idempotent_and_kills_divergence() {
        let g = grid(32);
        let raw = VectorField2::from_fn(&g, |x, y| ((x + 2.0 * y).sin().exp(), (x * 3.0).cos() * y.sin() + 0.2));
        let p = leray_project(&raw);
        let pp = leray_project(&p);
        assert!(max_diff(&p.u, &pp.u) < 1e-12 && max_diff(&p.v, &pp.v) < 1e-12);
        let l2 = lp_norm(&raw, 2.0).unwrap();
        assert!(max_spectral_divergence(&p) <= 1e-10 * l2);
        // mean preserved
        assert!((p.mean().1 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn velocity_inverts_vorticity() {
        let g = grid(64);
        let u = random_divergence_free(&g, 5, 11);
        let w = vorticity(&u);
        let back = velocity_from_vorticity(&w, u.mean());
        assert!(max_diff(&back.u, &u.u) < 1e-12 && max_diff(&back.v, &u.v) < 1e-12);
    }

    #[test]
    fn taylor_green_vorticity_sign() {
        let g = grid(16);
        let w = vorticity(&taylor_green(&g));
        let expected = ScalarField::from_fn(&g, |x, y| 2.0 * x.sin() * y.sin());
        assert!(max_diff(&w, &expected) < 1e-12);
    }

    #[test]
    fn lp_norm_examples() {
        let g = grid(64);
        let tg = lp_norm(&taylor_green(&g), 2.0).unwrap();
        assert!((tg - std::f64::consts::PI * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(lp_norm(&ScalarField::constant(&g, 1.0), f64::INFINITY).unwrap(), 1.0);
        let s = lp_norm(&ScalarField::from_fn(&g, |x, _| x.sin()), 2.0).unwrap();
        assert!((s - (2.0 * std::f64::consts::PI * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(lp_norm(&ScalarField::constant(&g, 1.0), 0.5).is_err());
    }

    #[test]
    fn lp_norms_increase_with_p_on_probability_measure() {
        // on the normalized measure ‖f‖_p is nondecreasing in p
        let g = grid(32);
        let f = ScalarField::from_fn(&g, |x, y| 0.9 * (x + y.cos()).sin());
        let measure = crate::field::TORUS_MEASURE;
        let mut prev = 0.0;
        for p in [1.0, 1.5, 2.0, 3.0, 6.0, 12.0] {
            let normalized = lp_norm(&f, p).unwrap() / measure.powf(1.0 / p);
            assert!(normalized >= prev - 1e-14);
            prev = normalized;
        }
        assert!(prev <= lp_norm(&f, f64::INFINITY).unwrap() + 1e-14);
    }

    #[test]
    fn lexp_of_zero_tensor_is_zero() {
        let g = grid(16);
        assert_eq!(lexp_norm(&SymTensor2::zeros(&g)).unwrap(), 0.0);
    }

    #[test]
    fn dealiased_product_truncates_inputs() {
        let g = grid(16);
        let hi = ScalarField::from_fn(&g, |x, _| (7.0 * x).cos());
        let one = ScalarField::constant(&g, 1.0);
        assert!(dealiased_product(&hi, &one).unwrap().max_abs() < 1e-14);
    }
}
