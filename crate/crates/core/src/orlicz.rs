//! The exponential Orlicz space `L^exp` generated by the Young function
//! `ψ(s) = e^s − 1`: Luxemburg norm, the `L^p` embedding and the
//! logarithmic interpolation estimate against `L¹ ∩ L^∞`.
//!
//! All integrals are grid quadratures with a uniform cell measure, so every
//! inequality here holds exactly for the discrete measure and can be asserted
//! without slack beyond round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Default tolerance on the Luxemburg residual `∫ψ(|f|/β) − 1`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Constant for the log-interpolation estimate obtained by choosing the
/// splitting level equal to `‖g‖₁` and using `log(1+2a) ≤ log 2 + log(1+a)`.
pub const INTERP_CONSTANT: f64 = 1.0 + 2.0 * std::f64::consts::LN_2;

const MAX_BISECTIONS: usize = 200;

/// The Young function `ψ(s) = e^s − 1` on `s ≥ 0`.
pub fn young(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!("young function needs s >= 0, got {s}")));
    }
    Ok(s.exp_m1())
}

/// `(e^s − 1) + t·log(t+1) − s·t`, nonnegative for all `s, t ≥ 0`.
pub fn duality_gap(s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain(format!("duality gap needs s, t >= 0, got ({s}, {t})")));
    }
    Ok(s.exp_m1() + t * t.ln_1p() - s * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LuxemburgResult {
    pub norm: f64,
    /// `∫ψ(|f|/norm) − 1`; zero for the zero field.
    pub residual: f64,
    pub iterations: usize,
}

/// Quadrature of `ψ(|v|/β)` with uniform cell weight.
pub fn modular(values: &[f64], cell_measure: f64, beta: f64) -> f64 {
    values.iter().map(|v| (v.abs() / beta).exp_m1()).sum::<f64>() * cell_measure
}

/// Luxemburg norm `inf{β > 0 : ∫ψ(|f|/β) ≤ 1}` of a torus field.
pub fn luxemburg_norm(f: &ScalarField, tol: f64) -> Result<LuxemburgResult> {
    luxemburg_norm_samples(f.values(), f.grid().cell_measure(), tol)
}

/// Luxemburg norm for samples carrying a uniform quadrature weight.
///
/// The modular is strictly decreasing in `β`, so the root of `∫ψ(|f|/β) = 1`
/// is bracketed starting from `[max|f|·1e−8, max|f|]`, doubling the upper end
/// until the modular drops to 1, and then bisected down to floating-point
/// resolution.
pub fn luxemburg_norm_samples(values: &[f64], cell_measure: f64, tol: f64) -> Result<LuxemburgResult> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(cell_measure > 0.0) {
        return Err(Error::domain("cell measure must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("field has non-finite samples"));
    }
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(LuxemburgResult {
            norm: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }

    let mut lo = peak * 1e-8;
    let mut hi = peak;
    let mut iterations = 0;
    while modular(values, cell_measure, hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if !hi.is_finite() {
            return Err(Error::input("Luxemburg bracket overflowed"));
        }
    }
    while hi - lo > 4.0 * f64::EPSILON * hi && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(values, cell_measure, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let residual = modular(values, cell_measure, hi) - 1.0;
    if residual.abs() > tol {
        return Err(Error::Domain(format!(
            "Luxemburg bisection stalled with residual {residual:e} > {tol:e}"
        )));
    }
    Ok(LuxemburgResult {
        norm: hi,
        residual,
        iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub lp_norm: f64,
    /// `(p!)^{1/p}·‖f‖_exp`.
    pub bound: f64,
}

impl EmbeddingCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.lp_norm <= self.bound + slack
    }
}

/// `‖f‖_p` next to the embedding bound `(p!)^{1/p}‖f‖_exp`.
pub fn embedding_check(f: &ScalarField, p: u32) -> Result<EmbeddingCheck> {
    if p < 1 {
        return Err(Error::domain("embedding exponent must be >= 1"));
    }
    if f.max_abs() == 0.0 {
        return Err(Error::precondition("embedding check needs a nonzero field"));
    }
    let lexp = luxemburg_norm(f, DEFAULT_TOL)?.norm;
    let lp = crate::field::lp_norm(f, p as f64)?;
    Ok(EmbeddingCheck {
        lp_norm: lp,
        bound: factorial_root(p) * lexp,
    })
}

/// `(p!)^{1/p}` computed through logarithms.
pub fn factorial_root(p: u32) -> f64 {
    let log_fact: f64 = (2..=p).map(|k| (k as f64).ln()).sum();
    (log_fact / p as f64).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpBound {
    /// `∫|fg|`.
    pub lhs: f64,
    /// `C‖f‖_exp‖g‖₁[log(1+‖g‖_∞) + |log‖g‖₁| + 1]`.
    pub rhs: f64,
    pub constant_used: f64,
}

impl InterpBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 4.0 * f64::EPSILON)
    }
}

/// Both sides of the logarithmic interpolation estimate for `f ∈ L^exp`,
/// `g ∈ L¹ ∩ L^∞`. When `‖g‖₁ = 0` both sides are 0.
pub fn log_interpolation(f: &ScalarField, g: &ScalarField, constant: f64) -> Result<InterpBound> {
    if !(constant > 0.0) {
        return Err(Error::domain(format!("constant must be positive, got {constant}")));
    }
    if !g.is_finite() {
        return Err(Error::input("g must be bounded and finite"));
    }
    let lhs = f.zip_with(g, |a, b| (a * b).abs())?.integral();
    let g1 = g.map(f64::abs).integral();
    if g1 == 0.0 {
        return Ok(InterpBound {
            lhs: 0.0,
            rhs: 0.0,
            constant_used: constant,
        });
    }
    let ginf = g.max_abs();
    let fexp = luxemburg_norm(f, DEFAULT_TOL)?.norm;
    let rhs = constant * fexp * g1 * (ginf.ln_1p() + g1.ln().abs() + 1.0);
    Ok(InterpBound {
        lhs,
        rhs,
        constant_used: constant,
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // quoted reference values
mod tests {
    use super::*;
    use crate::field::random::random_scalar;
    use crate::field::GridSpec;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    /// 1 on `cells` of the samples, 0 elsewhere; unit total measure on the support.
    fn unit_indicator(cells: usize, total: usize) -> (Vec<f64>, f64) {
        let mut v = vec![0.0; total];
        v[..cells].iter_mut().for_each(|x| *x = 1.0);
        (v, 1.0 / cells as f64)
    }

    #[test]
    fn young_values() {
        assert_eq!(young(0.0).unwrap(), 0.0);
        assert!((young(1.0).unwrap() - 1.718282).abs() < 1e-6);
        assert!((young(LN2).unwrap() - 1.0).abs() < 1e-15);
        assert!(young(-1e-3).is_err());
        assert!(young(f64::NAN).is_err());
    }

    #[test]
    fn duality_gap_values() {
        assert!((duality_gap(0.0, 5.0).unwrap() - 5.0 * 6f64.ln()).abs() < 1e-12);
        assert!((duality_gap(0.0, 5.0).unwrap() - 8.9588).abs() < 1e-4);
        assert!((duality_gap(1.0, 1.0).unwrap() - 1.411429).abs() < 1e-6);
        // minimizer branch: e^s = t gives t − 1 + t·log(1 + 1/t)
        let t = 2f64.exp() - 1.0;
        let s = t.ln();
        let closed = t - 1.0 + t * (1.0 / t).ln_1p();
        assert!((duality_gap(s, t).unwrap() - closed).abs() < 1e-12);
        assert!((closed - 6.318111).abs() < 1e-6);
        assert!(duality_gap(-1.0, 0.0).is_err());
    }

    #[test]
    fn indicator_norm_closed_form() {
        let (v, cell) = unit_indicator(64, 1024);
        let r = luxemburg_norm_samples(&v, cell, DEFAULT_TOL).unwrap();
        assert!((r.norm - 1.0 / LN2).abs() < 1e-9);
        assert!((r.norm - 1.442695).abs() < 1e-6);
        assert!(r.residual.abs() <= DEFAULT_TOL);
    }

    #[test]
    fn indicator_on_torus_grid() {
        // |E|(e^{1/β} − 1) = 1 gives β = 1/log(1 + 1/|E|)
        let g = GridSpec::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| if x < 1.0 && y < 1.0 { 1.0 } else { 0.0 });
        let measure = f.integral();
        let r = luxemburg_norm(&f, DEFAULT_TOL).unwrap();
        assert!((r.norm - 1.0 / (1.0 / measure).ln_1p()).abs() < 1e-9);
    }

    #[test]
    fn zero_field() {
        let g = GridSpec::new(8).unwrap();
        let r = luxemburg_norm(&ScalarField::zeros(&g), 1e-10).unwrap();
        assert_eq!((r.norm, r.residual), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(luxemburg_norm_samples(&[1.0, f64::NAN], 1.0, 1e-10).is_err());
        assert!(luxemburg_norm_samples(&[1.0], 1.0, 0.0).is_err());
        let g = GridSpec::new(8).unwrap();
        assert!(embedding_check(&ScalarField::zeros(&g), 1).is_err());
        assert!(embedding_check(&ScalarField::constant(&g, 1.0), 0).is_err());
        let bad = ScalarField::constant(&g, f64::INFINITY);
        assert!(log_interpolation(&ScalarField::constant(&g, 1.0), &bad, 1.0).is_err());
        assert!(log_interpolation(&ScalarField::constant(&g, 1.0), &ScalarField::zeros(&g), 0.0).is_err());
    }

    #[test]
    fn homogeneity() {
        let g = GridSpec::new(32).unwrap();
        let f = random_scalar(&g, 4, 0.2, 9);
        let a = luxemburg_norm(&f, DEFAULT_TOL).unwrap().norm;
        let b = luxemburg_norm(&f.scale(3.0), DEFAULT_TOL).unwrap().norm;
        assert!((b - 3.0 * a).abs() <= 10.0 * DEFAULT_TOL);
    }

    #[test]
    fn embedding_on_indicator() {
        let g = GridSpec::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| if x < 1.0 && y < 1.0 { 1.0 } else { 0.0 });
        let e1 = embedding_check(&f, 1).unwrap();
        let e2 = embedding_check(&f, 2).unwrap();
        let lexp = luxemburg_norm(&f, DEFAULT_TOL).unwrap().norm;
        assert!((e1.bound - lexp).abs() < 1e-12);
        assert!((e2.bound - 2f64.sqrt() * lexp).abs() < 1e-12);
        assert!(e1.holds(0.0) && e2.holds(0.0));
    }

    #[test]
    fn embedding_on_unit_measure_indicator() {
        let (v, cell) = unit_indicator(16, 256);
        let lexp = luxemburg_norm_samples(&v, cell, DEFAULT_TOL).unwrap().norm;
        assert!((lexp * factorial_root(1) - 1.442695).abs() < 1e-6);
        assert!((lexp * factorial_root(2) - 2.040279).abs() < 1e-6);
    }

    #[test]
    fn interpolation_indicator_pair() {
        // f = g = unit-measure indicator: lhs = 1, rhs = C·(1/log 2)·(log 2 + 1)
        let (v, cell) = unit_indicator(16, 256);
        let fexp = luxemburg_norm_samples(&v, cell, DEFAULT_TOL).unwrap().norm;
        let lhs: f64 = v.iter().map(|x| x * x).sum::<f64>() * cell;
        let rhs = INTERP_CONSTANT * fexp * 1.0 * (LN2 + 0.0 + 1.0);
        assert!((lhs - 1.0).abs() < 1e-15);
        assert!((rhs - 5.8290).abs() < 1e-4);
    }

    #[test]
    fn interpolation_zero_g() {
        let g = GridSpec::new(16).unwrap();
        let b = log_interpolation(&random_scalar(&g, 3, 0.0, 1), &ScalarField::zeros(&g), INTERP_CONSTANT).unwrap();
        assert_eq!((b.lhs, b.rhs), (0.0, 0.0));
        assert!(b.holds());
    }

    #[test]
    fn factorial_roots() {
        assert!((factorial_root(1) - 1.0).abs() < 1e-15);
        assert!((factorial_root(3) - 6f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((factorial_root(4) - 24f64.powf(0.25)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn duality_gap_nonnegative(s in 0.0f64..50.0, t in 0.0f64..50.0) {
            prop_assert!(duality_gap(s, t).unwrap() >= -1e-12);
        }

        #[test]
        fn luxemburg_residual_and_triangle(seed in any::<u64>(), off in -0.5f64..0.5) {
            let g = GridSpec::new(16).unwrap();
            let f = random_scalar(&g, 3, off, seed);
            let h = random_scalar(&g, 2, 0.0, seed ^ 0x5555);
            let rf = luxemburg_norm(&f, DEFAULT_TOL).unwrap();
            prop_assert!(rf.residual.abs() <= DEFAULT_TOL);
            let rh = luxemburg_norm(&h, DEFAULT_TOL).unwrap().norm;
            let sum = luxemburg_norm(&f.zip_with(&h, |a, b| a + b).unwrap(), DEFAULT_TOL).unwrap().norm;
            prop_assert!(sum <= rf.norm + rh + 10.0 * DEFAULT_TOL);
        }
    }
}
