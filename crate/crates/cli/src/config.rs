//! JSON run configuration. All numeric parameters come from the config file;
//! command-line flags only carry paths and the thread cap.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use stepbunch_core::minimize::MinimizeOptions;
use stepbunch_core::special::{derive_model_params, ModelParams, PhysicalParams};

/// Model-parameter block: either explicit continuum parameters or physical
/// ones that map through derive_model_params. Exactly one must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitBlock>,
    /// Input profile CSV (for `energy`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<StepsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceBlock>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalBlock {
    #[serde(flatten)]
    pub params: PhysicalParams<f64>,
    #[serde(rename = "A")]
    pub mean_slope: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridBlock {
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverBlock {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub rearrange_every: usize,
    pub rho_floor: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = MinimizeOptions::<f64>::default();
        Self {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            step_init: d.step_init,
            armijo_c: d.armijo_c,
            backtrack_factor: d.backtrack_factor,
            rearrange_every: d.rearrange_every,
            rho_floor: d.rho_floor,
        }
    }
}

impl SolverBlock {
    pub fn to_options(self, seed: u64) -> MinimizeOptions<f64> {
        MinimizeOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            step_init: self.step_init,
            armijo_c: self.armijo_c,
            backtrack_factor: self.backtrack_factor,
            rearrange_every: self.rearrange_every,
            rho_floor: self.rho_floor,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitBlock {
    /// rho = A (1 + amplitude cos(2 pi x)).
    UniformPerturbed {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Piecewise-constant bunch ansatz.
    Ansatz,
    /// Profile CSV on disk.
    File { path: String },
}

fn default_amplitude() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvolveBlock {
    pub t_end: f64,
    pub dt_init: f64,
    /// Interval between snapshot CSVs (0 = none).
    #[serde(default)]
    pub snapshot_every: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepsBlock {
    #[serde(rename = "L")]
    pub period: f64,
    #[serde(rename = "Ns")]
    pub ns: usize,
    /// Explicit positions (overrides ns-uniform spacing when present).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
    /// Relative perturbation applied to a uniform train.
    #[serde(default)]
    pub perturb: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DynamicsBlock {
    pub t_end: f64,
    pub dt_init: f64,
    pub rel_tol: f64,
    #[serde(default)]
    pub min_spacing_stop: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurfaceBlock {
    pub delta: f64,
    #[serde(rename = "A", default = "default_one")]
    pub mean_slope: f64,
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureBlock {
    pub m_list: Vec<f64>,
    pub p_list: Vec<usize>,
    pub a_list: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvidenceBlock {
    #[serde(default = "default_inits")]
    pub inits: usize,
}

fn default_inits() -> usize {
    5
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("malformed JSON in {}", path.display()))?;
        Ok(cfg)
    }

    /// Resolve the continuum model parameters, deriving them from the
    /// physical block when necessary. Exactly one of model/physical must be
    /// present; all type invariants are re-validated.
    pub fn model_params(&self) -> anyhow::Result<ModelParams<f64>> {
        match (&self.model, &self.physical) {
            (Some(m), None) => {
                // revalidate the deserialized struct
                Ok(ModelParams::new(m.m, m.n, m.epsilon, m.gamma, m.mean_slope)?)
            }
            (None, Some(p)) => {
                let params = PhysicalParams::new(
                    p.params.alpha1,
                    p.params.alpha2,
                    p.params.lattice_a,
                    p.params.m,
                    p.params.n,
                )?;
                Ok(derive_model_params(&params, p.mean_slope)?)
            }
            (Some(_), Some(_)) => bail!("config must contain exactly one of `model`/`physical`, found both"),
            (None, None) => bail!("config must contain exactly one of `model`/`physical`"),
        }
    }

    pub fn physical_params(&self) -> anyhow::Result<PhysicalParams<f64>> {
        let p = self
            .physical
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("config is missing the `physical` block"))?;
        Ok(PhysicalParams::new(
            p.params.alpha1,
            p.params.alpha2,
            p.params.lattice_a,
            p.params.m,
            p.params.n,
        )?)
    }

    pub fn grid_n(&self) -> anyhow::Result<usize> {
        Ok(self
            .grid
            .ok_or_else(|| anyhow::anyhow!("config is missing the `grid` block"))?
            .n)
    }

    pub fn solver_options(&self) -> MinimizeOptions<f64> {
        self.solver.unwrap_or_default().to_options(self.seed)
    }
}
