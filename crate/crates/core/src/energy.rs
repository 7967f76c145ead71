//! The total energy and its pieces.
//!
//! Canonical energy (kernel form, exact in mode space):
//!
//!   E[rho] = -1/2 <rho, K_m * rho> + eps^{1-m} int Phi_{m,n}(rho)
//!
//! The Fourier form of the nonlocal part splits off the constant null
//! Lagrangian W = A^2 ||K_m||_1 / 2:
//!
//!   1/2 <rho, K*rho> = I_m = I~_m + W,   I~_m = S_m sum_k |k|^{m+1} |h_k|^2.
//!
//! All convolutions and derivatives are spectral (the nonlocal operator is
//! diagonal in Fourier space); int Phi uses the trapezoid rule, spectrally
//! accurate for smooth periodic integrands.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{d_even, KernelTable};
use crate::profile::{GridProfile, SpectralProfile};
use crate::quad::adaptive_simpson;
use crate::real::{cast, compensated_sum, mean, Real};
use crate::special::{s_constant, ModelParams};
use crate::spectral::SpectralEngine;

/// Decomposition of the total energy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    /// Fourier-form nonlocal energy I~_m (null Lagrangian removed).
    pub nonlocal_tilde: T,
    /// Null Lagrangian W = A^2 ||K_m||_1 / 2 on the feasible set.
    pub null_lagrangian: T,
    /// Local part eps^{1-m} int Phi_{m,n}(rho).
    pub local: T,
    /// Total kernel-form energy -(I~ + W) + local.
    pub total: T,
}

// ---------------------------------------------------------------------------
// Local energy density Phi and its derivatives
// ---------------------------------------------------------------------------

/// Local energy density Phi_{m,n}(xi). Nonnegative arguments only; xi < 0 is
/// infeasible and signaled as an error rather than returned as infinity.
pub fn phi<T: Real>(xi: T, params: &ModelParams<T>) -> Result<T> {
    if !xi.is_finite() {
        return Err(Error::Domain("phi: non-finite argument".into()));
    }
    if xi < T::zero() {
        return Err(Error::Infeasible(format!("phi undefined for xi = {xi} < 0")));
    }
    if xi == T::zero() {
        return Ok(T::zero());
    }
    let m = params.m;
    let n = params.n;
    let dipole = params.gamma / (n * (n + T::one())) * xi.powf(n + T::one());
    let monopole = if m == T::zero() {
        xi * xi.ln()
    } else {
        xi.powf(m + T::one()) / (m * (m + T::one()))
    };
    Ok(monopole + dipole)
}

/// Phi'_{m,n}(xi) for xi > 0. Unbounded as xi -> 0+ when m <= 0.
pub fn phi_prime<T: Real>(xi: T, params: &ModelParams<T>) -> Result<T> {
    if !(xi > T::zero()) {
        return Err(Error::Domain(format!("phi_prime requires xi > 0, got {xi}")));
    }
    let m = params.m;
    let n = params.n;
    let dipole = params.gamma / n * xi.powf(n);
    let monopole = if m == T::zero() {
        xi.ln() + T::one()
    } else {
        xi.powf(m) / m
    };
    Ok(monopole + dipole)
}

/// Phi''_{m,n}(xi) = xi^{m-1} + gamma xi^{n-1} for xi > 0.
pub fn phi_second<T: Real>(xi: T, params: &ModelParams<T>) -> Result<T> {
    if !(xi > T::zero()) {
        return Err(Error::Domain(format!("phi_second requires xi > 0, got {xi}")));
    }
    Ok(xi.powf(params.m - T::one()) + params.gamma * xi.powf(params.n - T::one()))
}

/// eps^{1-m} * (1/N) sum_j Phi(rho_j).
pub fn local_energy<T: Real>(p: &GridProfile<T>, params: &ModelParams<T>) -> Result<T> {
    let n = p.len();
    let mut values = Vec::with_capacity(n);
    for &r in p.rho() {
        values.push(phi(r, params)?);
    }
    Ok(params.epsilon_pow() * compensated_sum(values) / cast::<T>(n as f64))
}

// ---------------------------------------------------------------------------
// Nonlocal energy in both representations
// ---------------------------------------------------------------------------

/// Fourier representation I~_m = S_m sum_k |k|^{m+1} |h_k|^2.
pub fn nonlocal_energy_fourier<T: Real>(s: &SpectralProfile<T>, params: &ModelParams<T>) -> Result<T> {
    let sm = s_constant(params.m)?;
    let half_n = s.len() as i64 / 2;
    let mut acc = T::zero();
    for k in 1..half_n {
        let w = cast::<T>(k as f64).powf(params.m + T::one());
        acc += cast::<T>(2.0) * w * s.coeff(k).norm_sqr();
    }
    // Nyquist mode enters once (FFT layout stores it at frequency -N/2).
    acc += cast::<T>(half_n as f64).powf(params.m + T::one()) * s.coeff(-half_n).norm_sqr();
    Ok(sm * acc)
}

/// Kernel representation I_m = 1/2 <rho, K*rho>, evaluated in multiplier
/// space (exact for the trigonometric interpolant):
/// 1/2 [ K^(0) A^2 + sum_{k != 0} K^(k) |rho^_k|^2 ].
pub fn nonlocal_energy_kernel<T: Real>(p: &GridProfile<T>, table: &KernelTable<T>) -> Result<T> {
    check_grids(p, table)?;
    let eng = SpectralEngine::<T>::new(p.len());
    let c = eng.coeffs(p.rho());
    let mut acc = table.multiplier(0) * c[0].norm_sqr();
    for (i, ci) in c.iter().enumerate().skip(1) {
        let k = SpectralEngine::<T>::freq_of(i, p.len());
        acc += table.multiplier(k) * ci.norm_sqr();
    }
    Ok(acc * cast::<T>(0.5))
}

/// Null Lagrangian W = (A/2) ||rho * K_m||_L1, evaluated as the grid mean of
/// |K*rho|. Since rho >= 0 and K >= 0 the convolution is nonnegative and this
/// equals A^2 ||K||_1 / 2 up to rounding.
pub fn null_lagrangian<T: Real>(p: &GridProfile<T>, table: &KernelTable<T>) -> Result<T> {
    check_grids(p, table)?;
    if p.rho().iter().any(|&r| r < T::zero()) {
        return Err(Error::Infeasible(
            "null Lagrangian needs rho >= 0 (L1 norm equals the integral only then)".into(),
        ));
    }
    let eng = SpectralEngine::<T>::new(p.len());
    let conv = convolve_kernel(&eng, p, table);
    let abs: Vec<T> = conv.iter().map(|v| v.abs()).collect();
    Ok(p.mean_slope() * mean(&abs) * cast::<T>(0.5))
}

/// (K * rho)(x_j) via multipliers.
pub(crate) fn convolve_kernel<T: Real>(
    eng: &SpectralEngine<T>,
    p: &GridProfile<T>,
    table: &KernelTable<T>,
) -> Vec<T> {
    let mut c = eng.coeffs(p.rho());
    apply_multipliers(&mut c, table, p.len());
    eng.values(&c)
}

pub(crate) fn apply_multipliers<T: Real>(
    coeffs: &mut [Complex<T>],
    table: &KernelTable<T>,
    n: usize,
) {
    for (i, ci) in coeffs.iter_mut().enumerate() {
        let k = SpectralEngine::<T>::freq_of(i, n);
        let w = table.multiplier(k);
        *ci = Complex::new(ci.re * w, ci.im * w);
    }
}

/// Total energy in the canonical kernel form, with the breakdown fields.
pub fn total_energy<T: Real>(
    p: &GridProfile<T>,
    table: &KernelTable<T>,
    params: &ModelParams<T>,
) -> Result<EnergyBreakdown<T>> {
    let nonlocal_kernel = nonlocal_energy_kernel(p, table)?;
    let local = local_energy(p, params)?;
    let spectral = crate::profile::to_spectral(p);
    let nonlocal_tilde = nonlocal_energy_fourier(&spectral, params)?;
    let null_lagrangian = null_lagrangian(p, table)?;
    Ok(EnergyBreakdown {
        nonlocal_tilde,
        null_lagrangian,
        local,
        total: -nonlocal_kernel + local,
    })
}

/// Total alone, skipping the breakdown (hot path for the optimizer).
pub(crate) fn total_energy_value<T: Real>(
    p: &GridProfile<T>,
    table: &KernelTable<T>,
    params: &ModelParams<T>,
) -> Result<T> {
    Ok(-nonlocal_energy_kernel(p, table)? + local_energy(p, params)?)
}

// ---------------------------------------------------------------------------
// Chemical potential and Euler-Lagrange residual
// ---------------------------------------------------------------------------

/// Continuum chemical potential mu = (K*rho)' - eps^{1-m} d/dx Phi'(rho),
/// both derivatives spectral. Requires rho > 0 pointwise.
pub fn chemical_potential<T: Real>(
    p: &GridProfile<T>,
    table: &KernelTable<T>,
    params: &ModelParams<T>,
) -> Result<Vec<T>> {
    check_grids(p, table)?;
    if p.rho().iter().any(|&r| r <= T::zero()) {
        return Err(Error::Domain(
            "chemical potential needs rho > 0 pointwise (Phi' is singular at 0)".into(),
        ));
    }
    let eng = SpectralEngine::<T>::new(p.len());
    // nonlocal: (K * rho)' in mode space
    let mut c = eng.coeffs(p.rho());
    apply_multipliers(&mut c, table, p.len());
    eng.derivative_coeffs(&mut c);
    let nonlocal = eng.values(&c);
    // local: eps^{1-m} d/dx [Phi'(rho)]
    let mut w = Vec::with_capacity(p.len());
    for &r in p.rho() {
        w.push(phi_prime(r, params)?);
    }
    let mut cw = eng.coeffs(&w);
    eng.derivative_coeffs(&mut cw);
    let dw = eng.values(&cw);
    let epsw = params.epsilon_pow();
    Ok(nonlocal
        .iter()
        .zip(&dw)
        .map(|(&a, &b)| a - epsw * b)
        .collect())
}

/// The nonlocal part of mu through the equivalent coefficient path
/// -2 S_m |k|^{m+1} h_k (cross-check for the multiplier route).
pub fn nonlocal_force_spectral<T: Real>(p: &GridProfile<T>, params: &ModelParams<T>) -> Result<Vec<T>> {
    let sm = s_constant(params.m)?;
    let eng = SpectralEngine::<T>::new(p.len());
    let mut c = p.height_coeffs(&eng);
    let n = p.len();
    for (i, ci) in c.iter_mut().enumerate() {
        let k = SpectralEngine::<T>::freq_of(i, n);
        let w = -cast::<T>(2.0) * sm * cast::<T>(k.unsigned_abs() as f64).powf(params.m + T::one());
        *ci = Complex::new(ci.re * w, ci.im * w);
    }
    Ok(eng.values(&c))
}

/// Euler-Lagrange residual on the support: r = -K*rho + eps^{1-m} Phi'(rho)
/// + lambda with lambda balancing the mean over the support; returns sup|r|.
pub fn el_residual<T: Real>(
    p: &GridProfile<T>,
    table: &KernelTable<T>,
    params: &ModelParams<T>,
    support_mask: &[bool],
) -> Result<T> {
    check_grids(p, table)?;
    if support_mask.len() != p.len() {
        return Err(Error::Config("support mask length mismatch".into()));
    }
    if !support_mask.iter().any(|&b| b) {
        return Err(Error::Config("empty support".into()));
    }
    let eng = SpectralEngine::<T>::new(p.len());
    let conv = convolve_kernel(&eng, p, table);
    let epsw = params.epsilon_pow();
    let mut values = Vec::new();
    for (j, (&on, &r)) in support_mask.iter().zip(p.rho()).enumerate() {
        if !on {
            continue;
        }
        if r <= T::zero() {
            return Err(Error::Domain(format!(
                "el_residual: rho must be positive on the support (cell {j})"
            )));
        }
        values.push(-conv[j] + epsw * phi_prime(r, params)?);
    }
    let lambda = -mean(&values);
    Ok(values
        .iter()
        .map(|&v| (v + lambda).abs())
        .fold(T::zero(), T::max))
}

/// Fractional-Laplacian form of the nonlocal operator applied to h~:
/// (m+1) P.V. int (h~(x) - h~(y)) / |x-y|^{m+2} dy, evaluated by periodized
/// quadrature with the second-order Taylor term subtracted at the
/// singularity. Agrees with -(nonlocal part of mu), i.e. with
/// +2 S_m |k|^{m+1} h_k in mode space, on band-limited profiles.
pub fn nonlocal_apply_fractional<T: Real>(p: &GridProfile<T>, params: &ModelParams<T>) -> Result<Vec<T>> {
    let m = params.m;
    let n = p.len();
    let eng = SpectralEngine::<T>::new(n);
    let h_coeffs = p.height_coeffs(&eng);
    // direct trigonometric evaluation of h~ and h~'' at arbitrary points
    let modes: Vec<(T, Complex<T>)> = h_coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > T::zero())
        .map(|(i, c)| (cast::<T>(SpectralEngine::<T>::freq_of(i, n) as f64), *c))
        .collect();
    let two_pi = cast::<T>(2.0) * T::PI();
    let h_at = |x: T| -> T {
        let mut acc = T::zero();
        for &(k, c) in &modes {
            let phase = two_pi * k * x;
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc
    };
    let hxx_at = |x: T| -> T {
        let mut acc = T::zero();
        for &(k, c) in &modes {
            let phase = two_pi * k * x;
            let w = -(two_pi * k) * (two_pi * k);
            acc += w * (c.re * phase.cos() - c.im * phase.sin());
        }
        acc
    };
    let h4_at = |x: T| -> T {
        let mut acc = T::zero();
        for &(k, c) in &modes {
            let phase = two_pi * k * x;
            let w2 = (two_pi * k) * (two_pi * k);
            acc += w2 * w2 * (c.re * phase.cos() - c.im * phase.sin());
        }
        acc
    };
    let half = cast::<T>(0.5);
    // Below t_cut the Taylor-subtracted bracket is dominated by rounding
    // noise that the singular weight would amplify; its true contribution
    // is the analytic fourth-order term added back below.
    let t_cut = cast::<T>(1e-3);
    // moment integrals int t^2 D_m(t) dt: |t|^{-m} part of the central image
    // analytic, lattice remainder by quadrature (computed once per profile)
    let central_moment = half.powf(T::one() - m) / (T::one() - m);
    let lattice_moment = adaptive_simpson(
        |t: T| t * t * (d_even(m, t) - t.powf(-m - cast::<T>(2.0))),
        cast::<T>(1e-6),
        half,
        cast::<T>(1e-12),
    )?;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let x = p.x(j);
        let hx = h_at(x);
        let hxx = hxx_at(x);
        // int_{t_cut}^{1/2} [2h(x) - h(x+t) - h(x-t) + t^2 h''(x)] D_m(t) dt
        let w_remainder = |t: T| -> T {
            let w = cast::<T>(2.0) * hx - h_at(x + t) - h_at(x - t) + t * t * hxx;
            w * d_even(m, t)
        };
        let tol = cast::<T>(1e-9) * (hxx.abs() + T::one());
        let smooth_part = adaptive_simpson(w_remainder, t_cut, half, tol)?;
        // fourth-order Taylor contribution of the skipped [0, t_cut]:
        // w ~ -t^4 h''''(x)/12, D_m ~ t^{-m-2}
        let small_t = -h4_at(x) / cast::<T>(12.0) * t_cut.powf(cast::<T>(3.0) - m)
            / (cast::<T>(3.0) - m);
        let taylor_part = -hxx * (central_moment + lattice_moment);
        out.push((m + T::one()) * (smooth_part + small_t + taylor_part));
    }
    Ok(out)
}

/// Interpolation-inequality check for m = 0: returns
/// (I~_0[h], 2/N_cut ||rho||_L2^2 + 3 A^2 + A^2 log N_cut).
pub fn interpolation_bound_check<T: Real>(
    p: &GridProfile<T>,
    params: &ModelParams<T>,
    n_cut: usize,
) -> Result<(T, T)> {
    if params.m != T::zero() {
        return Err(Error::Domain("interpolation bound is stated for m = 0".into()));
    }
    if n_cut == 0 {
        return Err(Error::Config("N_cut must be positive".into()));
    }
    let s = crate::profile::to_spectral(p);
    let lhs = nonlocal_energy_fourier(&s, params)?;
    let sq: Vec<T> = p.rho().iter().map(|&r| r * r).collect();
    let l2sq = mean(&sq);
    let a = p.mean_slope();
    let nf = cast::<T>(n_cut as f64);
    let rhs = cast::<T>(2.0) / nf * l2sq + cast::<T>(3.0) * a * a + a * a * nf.ln();
    Ok((lhs, rhs))
}

fn check_grids<T: Real>(p: &GridProfile<T>, table: &KernelTable<T>) -> Result<()> {
    if p.len() != table.grid_size {
        return Err(Error::Config(format!(
            "profile grid {} does not match kernel table grid {}",
            p.len(),
            table.grid_size
        )));
    }
    Ok(())
}
