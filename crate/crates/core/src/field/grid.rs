use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Side length of the periodic box `[0, 2π)²`.
pub const BOX_LENGTH: f64 = 2.0 * PI;

/// Lebesgue measure of the torus, `4π²`. Integrals are never normalized.
pub const TORUS_MEASURE: f64 = BOX_LENGTH * BOX_LENGTH;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform `n × n` grid on the torus together with its FFT plans.
///
/// Layout is row-major with `x` varying fastest: sample `(i, j)` sits at
/// `(i·dx, j·dx)` and lives at index `j·n + i`. Spectral arrays use the same
/// layout with the standard FFT wavenumber ordering `0, 1, …, n/2−1, −n/2, …, −1`
/// along each axis.
#[derive(Clone)]
pub struct GridSpec {
    n: usize,
    dx: f64,
    dealias_cutoff: usize,
    plans: Arc<Plans>,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::domain(format!("grid size must be a power of two >= 8, got {n}")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            n,
            dx: BOX_LENGTH / n as f64,
            dealias_cutoff: n / 3,
            plans: Arc::new(plans),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Largest retained wavenumber under the 2/3 rule, `floor(n/3)`.
    pub fn dealias_cutoff(&self) -> usize {
        self.dealias_cutoff
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_measure(&self) -> f64 {
        self.dx * self.dx
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Signed wavenumber of FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber used for odd-order derivatives: the Nyquist mode has no
    /// real-valued derivative and is dropped.
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    pub fn is_dealiased_mode(&self, i: usize, j: usize) -> bool {
        let c = self.dealias_cutoff as i64;
        self.wavenumber(i).abs() <= c && self.wavenumber(j).abs() <= c
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Unnormalized forward 2D DFT in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.plans.forward);
    }

    /// Inverse 2D DFT in place, including the `1/n²` factor.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.plans.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        plan.process(data);
        transpose_in_place(data, self.n);
        plan.process(data);
        transpose_in_place(data, self.n);
    }
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("n", &self.n)
            .field("dx", &self.dx)
            .field("dealias_cutoff", &self.dealias_cutoff)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(4).is_err());
        assert!(GridSpec::new(48).is_err());
        assert!(GridSpec::new(0).is_err());
        assert!(GridSpec::new(8).is_ok());
    }

    #[test]
    fn spacing_covers_box() {
        for n in [8, 32, 64, 512] {
            let g = GridSpec::new(n).unwrap();
            assert_eq!(g.dx() * n as f64, BOX_LENGTH);
            assert_eq!(g.dealias_cutoff(), n / 3);
        }
    }

    #[test]
    fn wavenumber_ordering() {
        let g = GridSpec::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.derivative_wavenumber(4), 0.0);
    }

    #[test]
    fn dealias_cutoff_blocks_aliasing() {
        // sums of two retained wavenumbers must not wrap back into the retained band
        for n in [8usize, 16, 32, 64, 128, 256] {
            let c = (n / 3) as i64;
            assert!(2 * c - (n as i64) < -c);
        }
    }
}
