use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Real field sampled on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

/// Spectral coefficients of a real field (forward transform, unnormalized).
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::input(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x, y)` at the grid nodes.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            let y = grid.coord(j);
            for i in 0..n {
                values.push(f(grid.coord(i), y));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral over the torus.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut coeffs: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut coeffs);
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Truncates to the 2/3-rule band.
    pub fn dealiased(&self) -> Self {
        self.spectrum().dealiased().to_field()
    }
}

impl Spectrum {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of the mode at FFT indices `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[j * self.grid.n() + i]
    }

    /// Inverse transform, keeping the real part.
    pub fn to_field(&self) -> ScalarField {
        let mut data = self.coeffs.clone();
        self.grid.inverse(&mut data);
        ScalarField {
            grid: self.grid.clone(),
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Applies `f(i, j, coeff)` to every mode, where `(i, j)` are FFT indices.
    pub fn map_modes(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let n = self.grid.n();
        let mut coeffs = self.coeffs.clone();
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                coeffs[idx] = f(i, j, coeffs[idx]);
            }
        }
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Multiplies every mode by a real symbol of the wavenumber vector.
    pub fn apply_multiplier(&self, m: impl Fn(f64, f64) -> f64) -> Self {
        let g = self.grid.clone();
        self.map_modes(|i, j, c| c * m(g.wavenumber(i) as f64, g.wavenumber(j) as f64))
    }

    pub fn dx(&self) -> Self {
        let g = self.grid.clone();
        self.map_modes(|i, _, c| c * Complex64::new(0.0, g.derivative_wavenumber(i)))
    }

    pub fn dy(&self) -> Self {
        let g = self.grid.clone();
        self.map_modes(|_, j, c| c * Complex64::new(0.0, g.derivative_wavenumber(j)))
    }

    pub fn dealiased(&self) -> Self {
        let g = self.grid.clone();
        self.map_modes(|i, j, c| {
            if g.is_dealiased_mode(i, j) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `Σ|ĉ|²·|Ω|/n⁴`, the Parseval form of `∫|f|²`.
    pub fn l2_norm_squared(&self) -> f64 {
        let n2 = self.grid.len() as f64;
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_measure() / n2
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

/// Planar vector field `(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2 {
    pub u: ScalarField,
    pub v: ScalarField,
}

impl VectorField2 {
    pub fn new(u: ScalarField, v: ScalarField) -> Result<Self> {
        u.grid.check_same(&v.grid)?;
        Ok(Self { u, v })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            u: ScalarField::zeros(grid),
            v: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        Self {
            u: ScalarField::from_fn(grid, |x, y| f(x, y).0),
            v: ScalarField::from_fn(grid, |x, y| f(x, y).1),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            u: self.u.scale(c),
            v: self.v.scale(c),
        }
    }

    pub fn dot(&self, other: &Self) -> Result<ScalarField> {
        let uu = self.u.zip_with(&other.u, |a, b| a * b)?;
        let vv = self.v.zip_with(&other.v, |a, b| a * b)?;
        uu.zip_with(&vv, |a, b| a + b)
    }

    pub fn dealiased(&self) -> Self {
        Self {
            u: self.u.dealiased(),
            v: self.v.dealiased(),
        }
    }

    pub fn mean(&self) -> (f64, f64) {
        (self.u.mean(), self.v.mean())
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        Ok(Self {
            u: self.u.zip_with(&other.u, f)?,
            v: self.v.zip_with(&other.v, f)?,
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }
}

impl Add for &VectorField2 {
    type Output = VectorField2;

    /// Panics on grid mismatch; use [`VectorField2::try_add`] otherwise.
    fn add(self, rhs: Self) -> VectorField2 {
        self.try_add(rhs).expect("grid mismatch in vector addition")
    }
}

impl Sub for &VectorField2 {
    type Output = VectorField2;

    fn sub(self, rhs: Self) -> VectorField2 {
        self.try_sub(rhs).expect("grid mismatch in vector subtraction")
    }
}

impl Mul<f64> for &VectorField2 {
    type Output = VectorField2;

    fn mul(self, rhs: f64) -> VectorField2 {
        self.scale(rhs)
    }
}

impl Neg for &VectorField2 {
    type Output = VectorField2;

    fn neg(self) -> VectorField2 {
        self.scale(-1.0)
    }
}

/// Symmetric 2×2 tensor field; only `xx`, `xy`, `yy` are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor2 {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl SymTensor2 {
    pub fn new(xx: ScalarField, xy: ScalarField, yy: ScalarField) -> Result<Self> {
        xx.grid.check_same(&xy.grid)?;
        xx.grid.check_same(&yy.grid)?;
        Ok(Self { xx, xy, yy })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            xx: ScalarField::zeros(grid),
            xy: ScalarField::zeros(grid),
            yy: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.xx.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Pointwise Frobenius contraction `A : B`.
    pub fn contract(&self, other: &Self) -> Result<ScalarField> {
        let xx = self.xx.zip_with(&other.xx, |a, b| a * b)?;
        let xy = self.xy.zip_with(&other.xy, |a, b| 2.0 * a * b)?;
        let yy = self.yy.zip_with(&other.yy, |a, b| a * b)?;
        xx.zip_with(&xy, |a, b| a + b)?.zip_with(&yy, |a, b| a + b)
    }

    /// Pointwise outer product `a ⊗ b` symmetrized; exact when `a = b` or `a = −b`.
    pub fn outer(a: &VectorField2, b: &VectorField2) -> Result<Self> {
        Ok(Self {
            xx: a.u.zip_with(&b.u, |p, q| p * q)?,
            xy: {
                let ab = a.u.zip_with(&b.v, |p, q| p * q)?;
                let ba = a.v.zip_with(&b.u, |p, q| p * q)?;
                ab.zip_with(&ba, |p, q| 0.5 * (p + q))?
            },
            yy: a.v.zip_with(&b.v, |p, q| p * q)?,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            xx: self.xx.zip_with(&other.xx, |a, b| a - b)?,
            xy: self.xy.zip_with(&other.xy, |a, b| a - b)?,
            yy: self.yy.zip_with(&other.yy, |a, b| a - b)?,
        })
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            xx: f(&self.xx),
            xy: f(&self.xy),
            yy: f(&self.yy),
        }
    }
}

/// Pointwise Euclidean magnitude, used by every norm.
pub trait Magnitude {
    fn grid(&self) -> &GridSpec;
    fn magnitude(&self) -> ScalarField;
}

impl Magnitude for ScalarField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn magnitude(&self) -> ScalarField {
        self.map(f64::abs)
    }
}

impl Magnitude for VectorField2 {
    fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    fn magnitude(&self) -> ScalarField {
        self.u
            .zip_with(&self.v, |a, b| a.hypot(b))
            .expect("components share a grid")
    }
}

impl Magnitude for SymTensor2 {
    fn grid(&self) -> &GridSpec {
        self.xx.grid()
    }

    fn magnitude(&self) -> ScalarField {
        let n = self.xx.values.len();
        let values = (0..n)
            .map(|k| {
                let (a, b, c) = (self.xx.values[k], self.xy.values[k], self.yy.values[k]);
                (a * a + 2.0 * b * b + c * c).sqrt()
            })
            .collect();
        ScalarField {
            grid: self.xx.grid.clone(),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_transform() {
        let g = GridSpec::new(32).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (x.sin() * (2.0 * y).cos() + 0.3 * (x + y).sin()).exp());
        let back = f.spectrum().to_field();
        let scale = f.max_abs();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn single_mode_lands_on_expected_coefficient() {
        let g = GridSpec::new(16).unwrap();
        let f = ScalarField::from_fn(&g, |x, _| x.cos());
        let s = f.spectrum();
        let n2 = g.len() as f64;
        assert!((s.at(1, 0).re - n2 / 2.0).abs() < 1e-9);
        assert!((s.at(15, 0).re - n2 / 2.0).abs() < 1e-9);
        assert!(s.at(0, 0).norm() < 1e-9);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = GridSpec::new(64).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (x.sin() + (3.0 * y).cos() * x.cos()).exp());
        let physical = f.map(|v| v * v).integral();
        let spectral = f.spectrum().l2_norm_squared();
        assert!((physical - spectral).abs() <= 1e-10 * physical);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ScalarField::zeros(&GridSpec::new(8).unwrap());
        let b = ScalarField::zeros(&GridSpec::new(16).unwrap());
        assert!(matches!(
            a.zip_with(&b, |x, y| x + y),
            Err(Error::GridMismatch { left: 8, right: 16 })
        ));
    }

    #[test]
    fn tensor_magnitude_is_frobenius() {
        let g = GridSpec::new(8).unwrap();
        let t = SymTensor2 {
            xx: ScalarField::constant(&g, 1.0),
            xy: ScalarField::constant(&g, 2.0),
            yy: ScalarField::constant(&g, -2.0),
        };
        let m = t.magnitude();
        assert!((m.values()[0] - 13.0_f64.sqrt()).abs() < 1e-15);
        assert!((t.contract(&t).unwrap().values()[0] - 13.0).abs() < 1e-14);
    }
}
