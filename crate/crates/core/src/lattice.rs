//! Stable evaluation of power-sum building blocks shared by the kernel
//! lattice sums, the discrete sigma sums, and the fractional-form check.
//!
//! The recurring difficulty: combinations like (x+d)^p + (x-d)^p - 2 x^p
//! cancel to O((d/x)^2) and naive evaluation loses all digits once x >> d.
//! Everything here switches to series forms before that happens.

use crate::real::{cast, Real};

/// phi(t) = expm1(t) / t with the removable value phi(0) = 1.
#[inline]
pub(crate) fn phi_expm1<T: Real>(t: T) -> T {
    if t == T::zero() {
        T::one()
    } else {
        t.exp_m1() / t
    }
}

/// Falling product p (p-1) ... (p-r+1).
#[inline]
pub(crate) fn falling<T: Real>(p: T, r: usize) -> T {
    let mut acc = T::one();
    for i in 0..r {
        acc = acc * (p - cast::<T>(i as f64));
    }
    acc
}

/// Second symmetric difference (x+d)^p + (x-d)^p - 2 x^p, requires |d| < x.
pub(crate) fn pair2<T: Real>(p: T, x: T, d: T) -> T {
    let u = d / x;
    if u.abs() <= cast::<T>(0.25) {
        // x^p * 2 * sum_{j>=1} binom(p, 2j) u^{2j}
        let u2 = u * u;
        let mut binom = T::one();
        let mut upow = T::one();
        let mut acc = T::zero();
        for j in 1..60usize {
            let i0 = cast::<T>((2 * j - 2) as f64);
            let i1 = cast::<T>((2 * j - 1) as f64);
            binom = binom * (p - i0) / (i0 + T::one()) * (p - i1) / (i1 + T::one());
            upow = upow * u2;
            let term = binom * upow;
            acc += term;
            if term.abs() <= cast::<T>(1e-20) * acc.abs() {
                break;
            }
        }
        x.powf(p) * cast::<T>(2.0) * acc
    } else {
        (x + d).powf(p) + (x - d).powf(p) - cast::<T>(2.0) * x.powf(p)
    }
}

/// First symmetric difference (x+d)^p - (x-d)^p, requires |d| < x.
pub(crate) fn pair1<T: Real>(p: T, x: T, d: T) -> T {
    let u = d / x;
    if u.abs() <= cast::<T>(0.25) {
        // x^p * 2 * sum_{j>=0} binom(p, 2j+1) u^{2j+1}
        let u2 = u * u;
        let mut binom = p;
        let mut upow = u;
        let mut acc = binom * upow;
        for j in 1..60usize {
            let i0 = cast::<T>((2 * j - 1) as f64);
            let i1 = cast::<T>((2 * j) as f64);
            binom = binom * (p - i0) / (i0 + T::one()) * (p - i1) / (i1 + T::one());
            upow = upow * u2;
            let term = binom * upow;
            acc += term;
            if term.abs() <= cast::<T>(1e-20) * acc.abs() {
                break;
            }
        }
        x.powf(p) * cast::<T>(2.0) * acc
    } else {
        (x + d).powf(p) - (x - d).powf(p)
    }
}

/// (base + delta)^p - base^p without cancellation for |delta| << base.
#[inline]
pub(crate) fn pow_diff<T: Real>(p: T, base: T, delta: T) -> T {
    let r = (delta / base).ln_1p();
    base.powf(p) * (p * r).exp_m1()
}
