//! Experiment drivers: the minimum-energy scaling sweep and the
//! symmetry/unimodality evidence suite.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_kernel_table, KernelTable};
use crate::minimize::{
    ansatz_profile, minimize_energy, project_feasible, MinimizeOptions, MinimizeResult,
};
use crate::profile::{center_profile, rearrange_decreasing, shift_profile, GridProfile};
use crate::real::{cast, Real};
use crate::special::ModelParams;

/// One row of the scaling sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingRow<T> {
    pub epsilon: T,
    /// Minimum energy in the paper normalization (kernel-form energy plus
    /// the constant A^2 ||K||_1 / 2, so that E[Ax] = eps^{1-m} Phi(A)).
    pub e_min: T,
    pub support_radius: T,
    pub iterations: usize,
    /// True when the ansatz start beat the perturbed-uniform start.
    pub ansatz_won: bool,
}

/// Result of [`scaling_sweep`]: rows sorted by decreasing epsilon plus the
/// least-squares fit of E_min against log(1/eps).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport<T> {
    pub rows: Vec<ScalingRow<T>>,
    pub fitted_slope: T,
    pub fitted_intercept: T,
    /// Root-mean-square residual of the fit.
    pub residual: T,
}

/// Sweep the minimum energy over `eps_list` (strictly decreasing) at m = 0.
/// Each point minimizes from both the bunch ansatz and a 1% perturbed
/// uniform profile and keeps the lower energy.
pub fn scaling_sweep<T: Real>(
    params_base: &ModelParams<T>,
    eps_list: &[T],
    n: usize,
    opts: &MinimizeOptions<T>,
) -> Result<ScalingReport<T>> {
    if params_base.m != T::zero() {
        return Err(Error::Domain("the scaling law is stated for m = 0".into()));
    }
    if eps_list.is_empty() {
        return Err(Error::Config("eps_list is empty".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("eps_list must be strictly decreasing".into()));
    }
    let a = params_base.mean_slope;
    for &eps in eps_list {
        let rho0 = eps.powf(-T::one() / params_base.n);
        if rho0 < a {
            return Err(Error::Domain(format!("eps = {eps} too large for the ansatz")));
        }
        if rho0 > cast::<T>(n as f64) / cast::<T>(8.0) {
            return Err(Error::Config(format!(
                "unresolvable bunch at eps = {eps}: eps^(-1/n) > N/8"
            )));
        }
    }
    let table = build_kernel_table(params_base.m, n)?;
    let offset = a * a * table.l1_norm / cast::<T>(2.0);
    let rows: Result<Vec<ScalingRow<T>>> = eps_list
        .par_iter()
        .map(|&eps| {
            let params = ModelParams::new(
                params_base.m,
                params_base.n,
                eps,
                params_base.gamma,
                a,
            )?;
            let from_ansatz = {
                let init = ansatz_profile(&params, n)?;
                minimize_energy(&init, &table, &params, opts)?
            };
            let from_uniform = {
                let init = perturbed_uniform(n, a, cast::<T>(0.01));
                minimize_energy(&init, &table, &params, opts)?
            };
            let ansatz_won = from_ansatz.energy.total <= from_uniform.energy.total;
            let best: &MinimizeResult<T> = if ansatz_won { &from_ansatz } else { &from_uniform };
            Ok(ScalingRow {
                epsilon: eps,
                e_min: best.energy.total + offset,
                support_radius: best.support_radius,
                iterations: best.iterations,
                ansatz_won,
            })
        })
        .collect();
    let rows = rows?;
    let (fitted_slope, fitted_intercept, residual) = fit_against_log_inv_eps(&rows);
    Ok(ScalingReport { rows, fitted_slope, fitted_intercept, residual })
}

/// Least squares of e_min against log(1/eps).
fn fit_against_log_inv_eps<T: Real>(rows: &[ScalingRow<T>]) -> (T, T, T) {
    let n = cast::<T>(rows.len() as f64);
    let xs: Vec<T> = rows.iter().map(|r| (T::one() / r.epsilon).ln()).collect();
    let ys: Vec<T> = rows.iter().map(|r| r.e_min).collect();
    let mean_x = xs.iter().copied().sum::<T>() / n;
    let mean_y = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - (slope * x + intercept);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

fn perturbed_uniform<T: Real>(n: usize, a: T, amplitude: T) -> GridProfile<T> {
    let two_pi = cast::<T>(2.0) * T::PI();
    let rho: Vec<T> = (0..n)
        .map(|j| {
            let x = cast::<T>(-0.5 + j as f64 / n as f64);
            a * (T::one() + amplitude * (two_pi * x).cos())
        })
        .collect();
    GridProfile::from_parts_unchecked(a, rho)
}

// ---------------------------------------------------------------------------
// Symmetry / unimodality evidence
// ---------------------------------------------------------------------------

/// Metrics of one minimization run started from a random feasible profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvidenceRun<T> {
    pub energy: T,
    /// min over reflection centers of ||rho - reflect(rho)||_2 / ||rho||_2.
    pub symmetry_defect: T,
    /// min over circular shifts of ||rho - rho*||_2 / ||rho||_2.
    pub rearrangement_defect: T,
    pub el_residual: T,
    /// sup-norm of K * rho (the natural residual scale).
    pub mu_scale: T,
    pub support_radius: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of [`bunching_evidence`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceReport<T> {
    pub runs: Vec<EvidenceRun<T>>,
    /// max - min of the converged energies.
    pub energy_spread: T,
}

/// Run `n_inits` minimizations from seeded random feasible profiles and
/// report symmetry/unimodality metrics of the converged states.
pub fn bunching_evidence<T: Real>(
    params: &ModelParams<T>,
    n: usize,
    opts: &MinimizeOptions<T>,
    n_inits: usize,
) -> Result<EvidenceReport<T>> {
    if n_inits == 0 {
        return Err(Error::Config("need at least one initial profile".into()));
    }
    let table = build_kernel_table(params.m, n)?;
    let runs: Result<Vec<EvidenceRun<T>>> = (0..n_inits)
        .into_par_iter()
        .map(|i| {
            let init = random_feasible_init(n, params.mean_slope, opts.seed.wrapping_add(i as u64));
            let res = minimize_energy(&init, &table, params, opts)?;
            evidence_metrics(&res, &table, params)
        })
        .collect();
    let runs = runs?;
    let (mut lo, mut hi) = (runs[0].energy, runs[0].energy);
    for r in &runs {
        lo = lo.min(r.energy);
        hi = hi.max(r.energy);
    }
    Ok(EvidenceReport { runs, energy_spread: hi - lo })
}

fn evidence_metrics<T: Real>(
    res: &MinimizeResult<T>,
    table: &KernelTable<T>,
    params: &ModelParams<T>,
) -> Result<EvidenceRun<T>> {
    let centered = center_profile(&res.profile);
    let norm = l2_norm(centered.rho());
    let symmetry_defect = reflection_defect(&centered) / norm;
    let star = rearrange_decreasing(&centered);
    let rearrangement_defect = best_shift_distance(&centered, &star) / norm;
    let eng = crate::spectral::SpectralEngine::<T>::new(centered.len());
    let conv = crate::energy::convolve_kernel(&eng, &centered, table);
    let mu_scale = conv.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let _ = params;
    Ok(EvidenceRun {
        energy: res.energy.total,
        symmetry_defect,
        rearrangement_defect,
        el_residual: res.el_residual,
        mu_scale,
        support_radius: res.support_radius,
        iterations: res.iterations,
        converged: res.converged,
    })
}

fn random_feasible_init<T: Real>(n: usize, a: T, seed: u64) -> GridProfile<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<T> = (0..n)
        .map(|_| a * cast::<T>(rng.gen_range(0.25..1.75)))
        .collect();
    project_feasible(&raw, a).expect("random init projects cleanly")
}

fn l2_norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Minimum over the 2N candidate reflection centers (grid points and
/// half-grid points) of ||rho - reflect(rho)||_2.
fn reflection_defect<T: Real>(p: &GridProfile<T>) -> T {
    let n = p.len();
    let rho = p.rho();
    let mut best = T::infinity();
    for offset in 0..2 * n {
        let mut acc = T::zero();
        for j in 0..n {
            // reflection j -> offset - j (offset even: about a grid point;
            // odd: about a half-grid point)
            let mirrored = (offset as i64 - j as i64).rem_euclid(n as i64) as usize;
            let d = rho[j] - rho[mirrored];
            acc += d * d;
        }
        best = best.min(acc);
    }
    best.sqrt()
}

/// Minimum over circular shifts of ||shift(p) - q||_2.
fn best_shift_distance<T: Real>(p: &GridProfile<T>, q: &GridProfile<T>) -> T {
    let n = p.len();
    let mut best = T::infinity();
    for s in 0..n {
        let shifted = shift_profile(p, s as i64);
        let mut acc = T::zero();
        for (a, b) in shifted.rho().iter().zip(q.rho()) {
            let d = *a - *b;
            acc += d * d;
        }
        best = best.min(acc);
    }
    best.sqrt()
}

/// Reported E_min (paper normalization) of the flat profile, for reference:
/// eps^{1-m} Phi(A).
pub fn flat_reference_energy<T: Real>(params: &ModelParams<T>) -> Result<T> {
    Ok(params.epsilon_pow() * crate::energy::phi(params.mean_slope, params)?)
}
