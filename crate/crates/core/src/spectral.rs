//! Discrete Fourier machinery for the periodic grid.
//!
//! Conventions (used by every module in this crate):
//!   grid points     x_j = -1/2 + j/N,  j = 0..N-1
//!   coefficients    f_k = (1/N) sum_j f(x_j) exp(-2 pi i k x_j)
//!   reconstruction  f(x_j) = sum_k f_k exp(2 pi i k x_j)
//! with k running over the standard FFT layout {0, 1, ..., N/2-1, -N/2, ..., -1}.
//! Because the grid starts at -1/2 rather than 0, coefficients pick up a
//! (-1)^k phase relative to the raw index-space DFT; the engine applies it so
//! callers always see true Fourier coefficients with respect to x.
//!
//! With this normalization: mean(f) = f_0, Parseval reads
//! (1/N) sum_j |f_j|^2 = sum_k |f_k|^2, periodic convolution is a plain
//! product of coefficients, and d/dx multiplies mode k by 2 pi i k.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::real::{cast, Real};

/// Planned FFTs for one grid size. Cheap to clone (the plans are shared).
#[derive(Clone)]
pub struct SpectralEngine<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> SpectralEngine<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Signed frequency of FFT bin `i` on a length-`n` grid.
    pub fn freq_of(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Grid coordinate of sample index `j`.
    pub fn grid_x(j: usize, n: usize) -> T {
        cast::<T>(-0.5 + j as f64 / n as f64)
    }

    /// Forward transform: values on the grid -> Fourier coefficients f_k.
    pub fn coeffs(&self, values: &[T]) -> Vec<Complex<T>> {
        assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex<T>> =
            values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        let inv_n = T::one() / cast::<T>(self.n as f64);
        for (i, c) in buf.iter_mut().enumerate() {
            // (-1)^k phase from the grid offset x_0 = -1/2.
            let s = if i % 2 == 0 { inv_n } else { -inv_n };
            *c = Complex::new(c.re * s, c.im * s);
        }
        buf
    }

    /// Inverse transform: Fourier coefficients -> real values on the grid.
    pub fn values(&self, coeffs: &[Complex<T>]) -> Vec<T> {
        assert_eq!(coeffs.len(), self.n);
        let mut buf: Vec<Complex<T>> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { *c } else { -*c })
            .collect();
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Spectral derivative d/dx in coefficient space. The Nyquist mode is
    /// zeroed: it cannot carry a faithful derivative on a real grid.
    pub fn derivative_coeffs(&self, coeffs: &mut [Complex<T>]) {
        let n = self.n;
        let two_pi = cast::<T>(2.0) * T::PI();
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = Self::freq_of(i, n);
            if k == -((n / 2) as i64) {
                *c = Complex::new(T::zero(), T::zero());
            } else {
                let w = two_pi * cast::<T>(k as f64);
                // multiply by i*w
                *c = Complex::new(-c.im * w, c.re * w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| -0.5 + j as f64 / n as f64).collect()
    }

    #[test]
    fn single_mode_coefficients() {
        let n = 64;
        let eng = SpectralEngine::<f64>::new(n);
        let vals: Vec<f64> = grid(n)
            .iter()
            .map(|x| 3.0 + 2.0 * (2.0 * std::f64::consts::PI * x).cos())
            .collect();
        let c = eng.coeffs(&vals);
        assert!((c[0].re - 3.0).abs() < 1e-13);
        assert!((c[1].re - 1.0).abs() < 1e-13, "c1 = {:?}", c[1]);
        assert!(c[1].im.abs() < 1e-13);
        assert!((c[n - 1].re - 1.0).abs() < 1e-13);
        for i in 2..n - 1 {
            assert!(c[i].norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_and_parseval() {
        let n = 128;
        let eng = SpectralEngine::<f64>::new(n);
        let vals: Vec<f64> = grid(n)
            .iter()
            .map(|x| (2.0 * std::f64::consts::PI * x).sin() + 0.3 * (6.0 * std::f64::consts::PI * x).cos())
            .collect();
        let c = eng.coeffs(&vals);
        let back = eng.values(&c);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        let grid_norm: f64 = vals.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let mode_norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!((grid_norm - mode_norm).abs() < 1e-13);
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let n = 64;
        let eng = SpectralEngine::<f64>::new(n);
        let tau = 2.0 * std::f64::consts::PI;
        let vals: Vec<f64> = grid(n).iter().map(|x| (tau * x).sin()).collect();
        let mut c = eng.coeffs(&vals);
        eng.derivative_coeffs(&mut c);
        let d = eng.values(&c);
        for (j, x) in grid(n).iter().enumerate() {
            assert!((d[j] - tau * (tau * x).cos()).abs() < 1e-11);
        }
    }
}
