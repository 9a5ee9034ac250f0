//! FFT-backed helpers for real `L`-periodic samples on a uniform grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse transforms and angular wavenumbers for one `(N, L)`.
///
/// Each instance owns its plans and scratch; instances are never shared
/// between concurrently running solvers.
#[derive(Clone)]
pub struct Fourier {
    n: usize,
    period: f64,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl Fourier {
    pub fn new(n: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let xi = (0..n).map(|j| wavenumber(j, n, period)).collect();
        Self {
            n,
            period,
            xi,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Angular wavenumbers `ξⱼ = 2π j / L` in FFT order; the Nyquist entry is `+πN/L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.xi
    }

    /// Unnormalized DFT `f̂ⱼ = Σ fₘ e^{-2πi jm/N}`.
    pub fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }

    /// Inverse of [`Fourier::forward`], real part only, normalized by `1/N`.
    pub fn inverse_real(&mut self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        self.inverse.process_with_scratch(&mut coeffs, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        coeffs.into_iter().map(|c| c.re * scale).collect()
    }

    /// Spectral derivative of the given order. For odd orders the Nyquist
    /// mode is dropped so the result stays real.
    pub fn derivative(&mut self, values: &[f64], order: u32) -> Vec<f64> {
        let mut hat = self.forward(values);
        let nyq = self.n / 2;
        for (j, c) in hat.iter_mut().enumerate() {
            if order % 2 == 1 && j == nyq && self.n.is_multiple_of(2) {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            *c *= Complex64::new(0.0, self.xi[j]).powu(order);
        }
        self.inverse_real(hat)
    }

    /// Squared discrete H¹ norm `L Σ (1 + ξ²) |f̂/N|²`.
    pub fn h1_norm_sq(&mut self, values: &[f64]) -> f64 {
        let hat = self.forward(values);
        h1_norm_sq_of_coeffs(&hat, &self.xi, self.period)
    }
}

pub(crate) fn h1_norm_sq_of_coeffs(hat: &[Complex64], xi: &[f64], period: f64) -> f64 {
    let n = hat.len() as f64;
    period
        * hat
            .iter()
            .zip(xi)
            .map(|(c, &x)| (1.0 + x * x) * c.norm_sqr())
            .sum::<f64>()
        / (n * n)
}

fn wavenumber(j: usize, n: usize, period: f64) -> f64 {
    let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * m / period
}

/// Periodic trapezoid rule: `(L/N) Σ fⱼ`.
pub fn trapezoid(values: &[f64], period: f64) -> f64 {
    values.iter().sum::<f64>() * period / values.len() as f64
}

/// Uniform nodes `xⱼ = jL/N`.
pub fn nodes(n: usize, period: f64) -> Vec<f64> {
    (0..n).map(|j| j as f64 * period / n as f64).collect()
}
