//! Small quadrature toolbox: Gauss-Legendre rules and an adaptive Simpson
//! integrator. These back the kernel cell averages and the singular-integral
//! cross checks; nothing here is specific to the surface model.

use crate::error::{Error, Result};
use crate::real::{cast, Real};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Build the rule by Newton iteration on the Legendre polynomial roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre rule needs at least 2 points");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = cast::<T>(n as f64);
        for i in 0..(n + 1) / 2 {
            // Chebyshev-like initial guess for the i-th root.
            let theta = cast::<T>(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut x = theta.cos();
            let mut dp = T::one();
            for _ in 0..100 {
                // Legendre recurrence: p0 = 1, p1 = x.
                let mut p0 = T::one();
                let mut p1 = x;
                for k in 2..=n {
                    let kf = cast::<T>(k as f64);
                    let p2 = ((cast::<T>(2.0) * kf - T::one()) * x * p1
                        - (kf - T::one()) * p0)
                        / kf;
                    p0 = p1;
                    p1 = p2;
                }
                // Derivative via p'_n = n (x p_n - p_{n-1}) / (x^2 - 1).
                dp = nf * (x * p1 - p0) / (x * x - T::one());
                let dx = p1 / dp;
                x = x - dx;
                if dx.abs() <= T::epsilon() * cast::<T>(4.0) {
                    break;
                }
            }
            let w = cast::<T>(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over [a, b] with a single panel of this rule.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = cast::<T>(0.5);
        let mid = (a + b) * half;
        let rad = (b - a) * half;
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + rad * x);
        }
        acc * rad
    }
}

/// Adaptive Simpson integration with an absolute tolerance.
pub fn adaptive_simpson<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    tol: T,
) -> Result<T> {
    let half = cast::<T>(0.5);
    let sixth = cast::<T>(1.0 / 6.0);
    let m = (a + b) * half;
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) * sixth * (fa + cast::<T>(4.0) * fm + fb);
    let mut stack = vec![(a, m, b, fa, fm, fb, whole, tol, 0usize)];
    let mut total = T::zero();
    while let Some((a, m, b, fa, fm, fb, whole, tol, depth)) = stack.pop() {
        if depth > 60 {
            return Err(Error::Numerical(
                "adaptive Simpson recursion exceeded depth 60".into(),
            ));
        }
        let lm = (a + m) * half;
        let rm = (m + b) * half;
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) * sixth * (fa + cast::<T>(4.0) * flm + fm);
        let right = (b - m) * sixth * (fm + cast::<T>(4.0) * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= cast::<T>(15.0) * tol || (b - a).abs() < T::epsilon() * cast::<T>(16.0) {
            total += left + right + delta / cast::<T>(15.0);
        } else {
            let htol = tol * half;
            stack.push((a, lm, m, fa, flm, fm, left, htol, depth + 1));
            stack.push((m, rm, b, fm, frm, fb, right, htol, depth + 1));
        }
    }
    if !total.is_finite() {
        return Err(Error::Numerical("adaptive Simpson produced non-finite value".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::<f64>::new(8);
        // 8-point rule integrates degree <= 15 exactly.
        let val = gl.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((val - 1.0 / 16.0).abs() < 1e-14, "got {val}");
    }

    #[test]
    fn gauss_legendre_smooth_function() {
        let gl = GaussLegendre::<f64>::new(32);
        let val = gl.integrate(0.0, std::f64::consts::PI, |x| x.sin());
        assert!((val - 2.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_matches_closed_form() {
        let val = adaptive_simpson(|x: f64| (x * x).exp(), 0.0, 1.0, 1e-12).unwrap();
        // int_0^1 exp(x^2) dx, reference from series evaluation.
        assert!((val - 1.4626517459071816).abs() < 1e-10);
    }

    #[test]
    fn simpson_handles_mild_singularity() {
        // sqrt has unbounded derivative at 0; adaptive bisection still converges.
        let val = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 1.0, 1e-11).unwrap();
        assert!((val - 2.0 / 3.0).abs() < 1e-8);
    }
}
