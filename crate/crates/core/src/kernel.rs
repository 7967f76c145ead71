//! The 1-periodic interaction kernel K_m.
//!
//! K_m is the periodic antiderivative of -d(z), d(z) = sum_k (z+k)/|z+k|^{m+2},
//! normalized by K_m(1/2) = 0. For m != 0 it has the lattice-sum form
//!
//!   K_m(z) = (1/m) sum_{k in Z} ( |z+k|^{-m} - |1/2+k|^{-m} ),
//!
//! and K_0(z) = -log sin(pi |z|) in closed form. In Fourier space the kernel
//! is diagonal with multipliers K^(k) = S_m |k|^{m-1} / (2 pi^2) for k != 0
//! and K^(0) = ||K_m||_L1 = S_m eta(1-m) / pi^2.
//!
//! Real-space sums pair k with -k-1 (the principal-value convention), which
//! makes them absolutely convergent with second-difference decay; the tail
//! beyond a fixed number of direct terms is closed with an Euler-Maclaurin
//! correction, giving ~1e-14 accuracy uniformly in m.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{falling, pair1, pair2, phi_expm1};
use crate::quad::GaussLegendre;
use crate::real::{cast, Real};
use crate::special::{eta, s_constant, zeta};

/// Number of directly summed lattice pairs before the Euler-Maclaurin tail.
const DIRECT_PAIRS: usize = 48;

fn check_m<T: Real>(m: T) -> Result<()> {
    if !(m > -T::one() && m < T::one()) {
        return Err(Error::Domain(format!("kernel exponent m = {m} outside (-1, 1)")));
    }
    Ok(())
}

/// K_m(z) for z in [-1/2, 1/2], z != 0.
pub fn kernel_value<T: Real>(m: T, z: T) -> Result<T> {
    check_m(m)?;
    let half = cast::<T>(0.5);
    if !(z >= -half && z <= half) {
        return Err(Error::Domain(format!("kernel argument z = {z} outside [-1/2, 1/2]")));
    }
    if z == T::zero() {
        return Err(Error::Singularity("kernel singularity at z = 0".into()));
    }
    let z = z.abs();
    if m == T::zero() {
        return Ok(-(T::PI() * z).sin().ln());
    }
    Ok(kernel_value_lattice(m, z))
}

/// Lattice-sum evaluation for 0 < z <= 1/2 (continuous through m -> 0).
fn kernel_value_lattice<T: Real>(m: T, z: T) -> T {
    let half = cast::<T>(0.5);
    let d = z - half;
    let mut sum = T::zero();
    for k in 0..DIRECT_PAIRS {
        let x = cast::<T>(k as f64) + half;
        let u = d / x;
        let a = u.ln_1p();
        let b = (-u).ln_1p();
        // (1/m)[(x+d)^{-m} + (x-d)^{-m} - 2 x^{-m}] in cancellation-free form
        sum += -x.powf(-m) * (a * phi_expm1(-m * a) + b * phi_expm1(-m * b));
    }
    // Euler-Maclaurin closure of sum_{k >= K} h(k), h(x) = paired term at x.
    let x = cast::<T>(DIRECT_PAIRS as f64) + half;
    let u = d / x;
    let a = u.ln_1p();
    let b = (-u).ln_1p();
    let integral = x.powf(T::one() - m) / (T::one() - m)
        * ((T::one() + u) * a * phi_expm1(-m * a) + (T::one() - u) * b * phi_expm1(-m * b));
    let h0 = -x.powf(-m) * (a * phi_expm1(-m * a) + b * phi_expm1(-m * b));
    // h^{(r)}(x) = [prod_{i=1}^{r-1} (-m-i)] * (-1) * pair2(-m-r, x, d); the
    // 1/m of the kernel cancels against the first falling factor.
    let hder = |r: usize| -> T {
        let mut coef = -T::one();
        for i in 1..r {
            coef = coef * (-m - cast::<T>(i as f64));
        }
        coef * pair2(-m - cast::<T>(r as f64), x, d)
    };
    sum + integral + h0 * half - hder(1) / cast::<T>(12.0) + hder(3) / cast::<T>(720.0)
        - hder(5) / cast::<T>(30240.0)
}

/// K'_m(z) = -sum_{k in Z} (z+k)/|z+k|^{m+2} for z in [-1/2, 1/2], z != 0.
///
/// Odd in z; at m = 0 this is -pi cot(pi z). The endpoints +-1/2 return 0
/// (the paired sum cancels exactly there).
pub fn kernel_derivative<T: Real>(m: T, z: T) -> Result<T> {
    check_m(m)?;
    let half = cast::<T>(0.5);
    if !(z >= -half && z <= half) {
        return Err(Error::Domain(format!("kernel argument z = {z} outside [-1/2, 1/2]")));
    }
    if z == T::zero() {
        return Err(Error::Singularity("kernel derivative singular at z = 0".into()));
    }
    let sign = if z < T::zero() { -T::one() } else { T::one() };
    Ok(sign * kernel_derivative_lattice(m, z.abs()))
}

fn kernel_derivative_lattice<T: Real>(m: T, z: T) -> T {
    let half = cast::<T>(0.5);
    let d = z - half;
    let p = -m - T::one();
    let mut sum = T::zero();
    for k in 0..DIRECT_PAIRS {
        let x = cast::<T>(k as f64) + half;
        sum += -pair1(p, x, d);
    }
    let x = cast::<T>(DIRECT_PAIRS as f64) + half;
    let u = d / x;
    let a = u.ln_1p();
    let b = (-u).ln_1p();
    // int_K^inf h = -(1/m) pair1(-m, x, d), written cancellation-free.
    let integral = x.powf(-m) * (a * phi_expm1(-m * a) - b * phi_expm1(-m * b));
    let h0 = -pair1(p, x, d);
    let hder = |r: usize| -> T { -falling(p, r) * pair1(p - cast::<T>(r as f64), x, d) };
    sum + integral + h0 * half - hder(1) / cast::<T>(12.0) + hder(3) / cast::<T>(720.0)
        - hder(5) / cast::<T>(30240.0)
}

/// Periodized absolute power sum D_m(z) = sum_{k in Z} |z+k|^{-m-2}
/// for z in (0, 1/2]. Used by the fractional-Laplacian form of the nonlocal
/// operator; absolutely convergent since m + 2 > 1.
pub(crate) fn d_even<T: Real>(m: T, z: T) -> T {
    let p = -m - cast::<T>(2.0);
    // |z|^{-m-2} + 2 zeta(m+2) + sum_{k>=1} pair2(p, k, z)
    let mut acc = z.powf(p) + cast::<T>(2.0) * zeta(m + cast::<T>(2.0)).expect("m+2 > 1");
    let kmax = 32usize;
    for k in 1..kmax {
        acc += pair2(p, cast::<T>(k as f64), z);
    }
    let x = cast::<T>(kmax as f64);
    let integral = -pair2(p + T::one(), x, z) / (p + T::one());
    let h0 = pair2(p, x, z);
    let hder = |r: usize| -> T { falling(p, r) * pair2(p - cast::<T>(r as f64), x, z) };
    acc + integral + h0 * cast::<T>(0.5) - hder(1) / cast::<T>(12.0) + hder(3) / cast::<T>(720.0)
}

// ---------------------------------------------------------------------------
// Kernel table
// ---------------------------------------------------------------------------

/// Real-space cell averages and Fourier multipliers of K_m on an N-cell grid.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTable<T> {
    /// Kernel exponent m.
    pub m: T,
    /// Grid size N (power of two).
    pub grid_size: usize,
    /// Cell averages of K_m over the N cells centered at x_j = -1/2 + j/N.
    pub real_samples: Vec<T>,
    /// Fourier multipliers K^(k) for k = 0..N/2 (symmetric in k).
    pub multipliers: Vec<T>,
    /// ||K_m||_L1 = K^(0).
    pub l1_norm: T,
    /// The constant S_m of the Fourier representation.
    pub s_m: T,
}

impl<T: Real> KernelTable<T> {
    /// Multiplier K^(k) for any signed frequency with |k| <= N/2.
    #[inline]
    pub fn multiplier(&self, k: i64) -> T {
        self.multipliers[k.unsigned_abs() as usize]
    }
}

/// Build the kernel table: closed-form multipliers plus quadrature cell
/// averages of the lattice-sum kernel.
pub fn build_kernel_table<T: Real>(m: T, n: usize) -> Result<KernelTable<T>> {
    check_m(m)?;
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "kernel table size must be a power of two >= 16, got {n}"
        )));
    }
    let s_m = s_constant(m)?;
    let pi2 = T::PI() * T::PI();
    let l1_norm = s_m * eta(T::one() - m)? / pi2;
    let mut multipliers = Vec::with_capacity(n / 2 + 1);
    multipliers.push(l1_norm);
    for k in 1..=n / 2 {
        multipliers.push(s_m * cast::<T>(k as f64).powf(m - T::one()) / (cast::<T>(2.0) * pi2));
    }
    let real_samples = cell_averages(m, n);
    Ok(KernelTable { m, grid_size: n, real_samples, multipliers, l1_norm, s_m })
}

/// Cell averages N * int_{x_j - w}^{x_j + w} K_m, w = 1/(2N), folded onto
/// [0, 1/2] by evenness and periodicity. The |z|^{-m} singularity at z = 0
/// (log for m = 0) is integrated analytically; the smooth remainder by
/// Gauss-Legendre panels.
fn cell_averages<T: Real>(m: T, n: usize) -> Vec<T> {
    let gl = GaussLegendre::<T>::new(16);
    let nf = cast::<T>(n as f64);
    let w = T::one() / (cast::<T>(2.0) * nf);
    let half = cast::<T>(0.5);

    // Smooth remainder after subtracting the singular model at z = 0.
    // Gauss-Legendre nodes are interior points, so z = 0 is never evaluated.
    let smooth = |z: T| -> T {
        if m == T::zero() {
            // -log sin(pi z) + log(pi z), smooth and -> 0 as z -> 0
            -((T::PI() * z).sin() / (T::PI() * z)).ln()
        } else {
            kernel_value_lattice(m, z) - z.powf(-m) / m
        }
    };
    // Antiderivative of the singular model on [0, 1/2].
    let singular_integral = |a: T, b: T| -> T {
        if m == T::zero() {
            // int -log(pi z) dz = z - z log(pi z)
            let f = |z: T| {
                if z == T::zero() {
                    T::zero()
                } else {
                    z - z * (T::PI() * z).ln()
                }
            };
            f(b) - f(a)
        } else {
            // int z^{-m}/m dz = z^{1-m} / (m (1-m))
            (b.powf(T::one() - m) - a.powf(T::one() - m)) / (m * (T::one() - m))
        }
    };
    // int_a^b K_m for 0 <= a < b <= 1/2.
    let segment = |a: T, b: T| -> T { singular_integral(a, b) + gl.integrate(a, b, smooth) };

    let mut samples = vec![T::zero(); n];
    // Cells j = n/2 .. n-1 lie at x_j in [0, 1/2); compute those, mirror the rest.
    for j in n / 2..n {
        let x = cast::<T>(-0.5 + j as f64 / n as f64);
        let integral = if j == n / 2 {
            // cell straddles z = 0
            segment(T::zero(), w) * cast::<T>(2.0)
        } else {
            segment(x - w, x + w)
        };
        samples[j] = integral * nf;
    }
    // Wrap cell at x_0 = -1/2 straddles the half-point: fold to [1/2-w, 1/2].
    samples[0] = segment(half - w, half) * cast::<T>(2.0) * nf;
    for j in 1..n / 2 {
        samples[j] = samples[n - j];
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralEngine;

    const PI: f64 = std::f64::consts::PI;

    // References computed from the Hurwitz-zeta closed form
    // K_m(z) = (zeta(m,z) + zeta(m,1-z) - 2 zeta(m,1/2)) / m.
    const KERNEL_REFS: [(f64, f64, f64); 9] = [
        (0.5, 0.25, 0.7086828429106085957),
        (0.5, 0.1, 2.9229704474037486630),
        (-0.5, 0.1, 0.45572279678751545580),
        (-0.5, 0.25, 0.15744456850621495589),
        (-0.9, 0.1, 0.19994780452485153598),
        (-0.9, 0.25, 0.076402714036613908634),
        (0.9, 0.1, 6.0426011301384475051),
        (-0.5, 0.4, 0.024068084181600731002),
        (-0.9, 0.4, 0.012121354817003181236),
    ];

    #[test]
    fn kernel_value_reference_points() {
        for &(m, z, want) in &KERNEL_REFS {
            let got = kernel_value(m, z).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "K_{m}({z}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn kernel_value_m0_closed_form() {
        // K_0(1/4) = -log sin(pi/4) = log 2 / 2
        let got = kernel_value(0.0, 0.25).unwrap();
        assert!((got - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
        // closed form against lattice path at tiny m (continuity in m)
        for z in [0.05f64, 0.2, 0.45] {
            let k0 = kernel_value(0.0, z).unwrap();
            let km = kernel_value(1e-9, z).unwrap();
            assert!((k0 - km).abs() < 1e-7, "z = {z}: {k0} vs {km}");
        }
    }

    #[test]
    fn kernel_vanishes_at_half() {
        for m in [-0.5f64, 0.0, 0.5] {
            let v = kernel_value(m, 0.5).unwrap();
            assert!(v.abs() < 1e-14, "K_{m}(1/2) = {v}");
        }
    }

    #[test]
    fn kernel_is_even() {
        for m in [-0.7, -0.2, 0.3, 0.8] {
            for z in [0.07, 0.23, 0.41] {
                let a = kernel_value(m, z).unwrap();
                let b = kernel_value(m, -z).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn kernel_errors() {
        assert!(matches!(kernel_value(0.3, 0.0), Err(Error::Singularity(_))));
        assert!(matches!(kernel_value(1.2, 0.25), Err(Error::Domain(_))));
        assert!(matches!(kernel_value(0.3, 0.7), Err(Error::Domain(_))));
        assert!(matches!(kernel_derivative(0.3, 0.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn derivative_reference_points() {
        // -pi cot(pi/4) = -pi
        let got = kernel_derivative(0.0f64, 0.25).unwrap();
        assert!((got + PI).abs() < 1e-12);
        for (m, z, want) in [
            (0.5f64, 0.25f64, -6.9160212276896163229f64),
            (-0.5, 0.25, -1.3353829143792183533),
            (-0.9, 0.1, -1.0471448122088105446),
        ] {
            let got = kernel_derivative(m, z).unwrap();
            assert!(((got - want) / want).abs() < 1e-13, "K'_{m}({z}) = {got}");
        }
    }

    #[test]
    fn derivative_matches_cotangent_at_m0() {
        for i in 1..40 {
            let z = i as f64 / 80.0; // (0, 1/2)
            let got: f64 = kernel_derivative(0.0, z).unwrap();
            let want = -PI / (PI * z).tan();
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "z = {z}");
        }
    }

    #[test]
    fn derivative_negative_and_odd() {
        for m in [-0.8, -0.3, 0.0, 0.4, 0.9] {
            for i in 1..10 {
                let z = i as f64 / 20.0;
                let d = kernel_derivative(m, z).unwrap();
                assert!(d < 0.0, "K'_{m}({z}) = {d} should be negative");
                let dm = kernel_derivative(m, -z).unwrap();
                assert_eq!(dm, -d);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // Centered differences of kernel_value converge at observed order ~2.
        for m in [-0.6, 0.2, 0.7] {
            for z in [0.05, 0.2, 0.45] {
                let exact = kernel_derivative(m, z).unwrap();
                let fd = |h: f64| {
                    (kernel_value(m, z + h).unwrap() - kernel_value(m, z - h).unwrap()) / (2.0 * h)
                };
                let e1 = (fd(1e-3) - exact).abs();
                let e2 = (fd(5e-4) - exact).abs();
                let order = (e1 / e2).log2();
                assert!(order > 1.8, "m={m}, z={z}: observed order {order}");
            }
        }
    }

    #[test]
    fn table_l1_norms() {
        // m = 0: ||K_0||_1 = int -log sin(pi z) = log 2; frozen values for
        // the rest (S_m eta(1-m)/pi^2 via high-precision evaluation).
        let t = build_kernel_table(0.0f64, 64).unwrap();
        assert!((t.l1_norm - std::f64::consts::LN_2).abs() < 1e-14);
        for (m, want) in [
            (0.5f64, 2.4195945736865214810f64),
            (-0.5, 0.24355386232237968127),
        ] {
            let t = build_kernel_table(m, 64).unwrap();
            assert!(((t.l1_norm - want) / want).abs() < 1e-13);
        }
    }

    #[test]
    fn table_first_multiplier_m0() {
        // Fourier series of -log sin(pi z): coefficient 1/(2k); K^(1) = 1/2.
        let t = build_kernel_table(0.0f64, 64).unwrap();
        assert!((t.multiplier(1) - 0.5).abs() < 1e-14);
        assert!((t.multiplier(-1) - 0.5).abs() < 1e-14);
        assert!((t.multiplier(2) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn fourier_series_vanishes_at_half() {
        // K(1/2) = K^(0) + sum_{k!=0} (-1)^k K^(k) = 0; sum the alternating
        // tail well beyond the table with averaging acceleration.
        for m in [-0.5f64, 0.2, 0.7] {
            let t = build_kernel_table(m, 64).unwrap();
            let coef = |k: usize| t.s_m * (k as f64).powf(m - 1.0) / (2.0 * PI * PI);
            let partials: Vec<f64> = (1..400)
                .scan(0.0, |acc, k| {
                    *acc += 2.0 * if k % 2 == 0 { coef(k) } else { -coef(k) };
                    Some(*acc)
                })
                .collect();
            let mut avg = partials;
            for _ in 0..80 {
                if avg.len() < 2 {
                    break;
                }
                avg = avg.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            }
            let total = t.l1_norm + avg[0];
            assert!(total.abs() < 1e-8, "m = {m}: series at 1/2 sums to {total}");
        }
    }

    #[test]
    fn cell_averages_integrate_to_l1_norm() {
        // (1/N) sum_j real_samples = int K_m: quadrature vs closed form.
        for m in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let t = build_kernel_table(m, 256).unwrap();
            let mean = t.real_samples.iter().sum::<f64>() / 256.0;
            assert!(
                ((mean - t.l1_norm) / t.l1_norm).abs() < 1e-11,
                "m = {m}: cell average mean {mean} vs l1 {l1}",
                l1 = t.l1_norm
            );
        }
    }

    #[test]
    fn cell_averages_shape_invariants() {
        for m in [-0.5, 0.0, 0.5] {
            let t = build_kernel_table(m, 128).unwrap();
            let s = &t.real_samples;
            let n = t.grid_size;
            assert!(s.iter().all(|&v| v >= 0.0));
            for j in 1..n {
                assert_eq!(s[j], s[n - j], "evenness at j = {j}");
            }
            // nonincreasing away from the center cell on (0, 1/2)
            for j in n / 2..n - 1 {
                assert!(s[j] >= s[j + 1], "monotonicity at j = {j} (m = {m})");
            }
            assert!(s[n - 1] >= s[0]);
        }
    }

    #[test]
    fn l1_norm_grows_toward_m_equals_one() {
        let norms: Vec<f64> = [0.5, 0.7, 0.9, 0.99]
            .iter()
            .map(|&m| build_kernel_table(m, 64).unwrap().l1_norm)
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] > w[0], "l1 norms must grow: {norms:?}");
        }
    }

    #[test]
    fn table_rejects_bad_sizes() {
        assert!(matches!(build_kernel_table(0.0f64, 48), Err(Error::Config(_))));
        assert!(matches!(build_kernel_table(0.0f64, 8), Err(Error::Config(_))));
    }

    #[test]
    fn multiplier_real_space_consistency() {
        // Circular convolution with the cell averages agrees with the
        // alias-corrected closed-form multipliers: the cell-average filter is
        // sinc(k/N) and frequencies fold at multiples of N. This pins the
        // real-space quadrature/lattice-sum construction against the
        // closed-form spectral one to 1e-6 for band-limited densities.
        let n = 256usize;
        for m in [-0.5f64, 0.0, 0.5] {
            let t = build_kernel_table(m, n).unwrap();
            let eng = SpectralEngine::<f64>::new(n);
            // band-limited density, modes <= n/8
            let rho: Vec<f64> = (0..n)
                .map(|j| {
                    let x = -0.5 + j as f64 / n as f64;
                    1.0 + 0.4 * (2.0 * PI * 3.0 * x).cos() + 0.3 * (2.0 * PI * 32.0 * x).sin()
                })
                .collect();
            let rho_hat = eng.coeffs(&rho);
            let samp_hat = eng.coeffs(&t.real_samples);
            // conv via real samples: coefficients samp_hat * rho_hat
            let conv_real: Vec<f64> = {
                let mut c = samp_hat.clone();
                for (ci, ri) in c.iter_mut().zip(&rho_hat) {
                    *ci = *ci * *ri;
                }
                eng.values(&c)
            };
            // alias-corrected effective multiplier of the cell-average table
            let sinc = |t: f64| if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
            let khat = |k: f64| {
                if k == 0.0 {
                    t.l1_norm
                } else {
                    t.s_m * k.abs().powf(m - 1.0) / (2.0 * PI * PI)
                }
            };
            let effective = |k: i64| {
                let mut acc = 0.0;
                for p in -40000i64..=40000 {
                    let kk = k as f64 + (p * n as i64) as f64;
                    acc += khat(kk) * sinc(kk / n as f64);
                }
                acc
            };
            let conv_spec: Vec<f64> = {
                let mut c = rho_hat.clone();
                for (i, ci) in c.iter_mut().enumerate() {
                    let k = SpectralEngine::<f64>::freq_of(i, n);
                    *ci = *ci * effective(k);
                }
                eng.values(&c)
            };
            let num: f64 = conv_real
                .iter()
                .zip(&conv_spec)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = conv_spec.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den < 1e-6, "m = {m}: relative deviation {}", num / den);
        }
    }
}
