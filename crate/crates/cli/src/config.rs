//! Self-contained TOML experiment configuration.
//!
//! Every field has a default, so an empty file (or no file) is a valid
//! configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Quadratic,
    Counterexample,
    Divergence,
    Ct,
    Certify,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Quadratic => "quadratic",
            Experiment::Counterexample => "counterexample",
            Experiment::Divergence => "divergence",
            Experiment::Ct => "ct",
            Experiment::Certify => "certify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    Thm32,
    Cor33,
    Classical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Output directory; every artifact path in the report is relative to it.
    /// Not serialized, so reports do not depend on where they were written.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub quadratic: QuadraticConfig,
    pub counterexample: CounterexampleConfig,
    pub divergence: DivergenceConfig,
    pub ct: CtConfig,
    pub certify: CertifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            out: PathBuf::from("out"),
            quadratic: QuadraticConfig::default(),
            counterexample: CounterexampleConfig::default(),
            divergence: DivergenceConfig::default(),
            ct: CtConfig::default(),
            certify: CertifyConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticConfig {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mismatch_scale: f64,
    pub kappa: f64,
    pub planner: Planner,
    /// Replaces the planned `τ` (σ and ω follow the planner's relations).
    pub tau: Option<f64>,
    pub allow_infeasible: bool,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub tail_fraction: f64,
}

impl Default for QuadraticConfig {
    fn default() -> Self {
        Self {
            n: 100,
            m: 50,
            alpha: 0.15,
            beta: 1.0,
            mismatch_scale: 0.05,
            kappa: 0.01,
            planner: Planner::Thm32,
            tau: None,
            allow_infeasible: false,
            max_iter: 100_000,
            rel_tol: 1e-15,
            tail_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub n: usize,
    pub alpha_mm: f64,
    pub tau: f64,
    pub sigma: f64,
    /// Every entry of `x⁰`.
    pub x0: f64,
    /// Every entry of `y⁰`.
    pub y0: f64,
    pub iterations: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            n: 5,
            alpha_mm: 1.0,
            tau: 0.5,
            sigma: 0.5,
            x0: 1.0,
            y0: 1.0,
            iterations: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceConfig {
    pub z: f64,
    pub tau0: f64,
    pub sigma0: f64,
    pub iterations: usize,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            z: 1.0,
            tau0: 0.5,
            sigma0: 0.9,
            iterations: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtConfig {
    pub height: usize,
    pub width: usize,
    pub n_angles: usize,
    pub n_bins: usize,
    pub lambda0: f64,
    /// One matched and one mismatched run per value.
    pub lambda1: Vec<f64>,
    pub lambda2: f64,
    pub eps: f64,
    pub noise_rel: f64,
    pub kappa: f64,
    /// Run even when `γ_G·γ_F* ≤ 2‖A−V‖²`; the check is still reported.
    pub allow_infeasible: bool,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for CtConfig {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            n_angles: 20,
            n_bins: 90,
            lambda0: 1.0,
            lambda1: vec![1.2],
            lambda2: 0.01,
            eps: 0.01,
            noise_rel: 0.15,
            kappa: 0.01,
            allow_infeasible: true,
            max_iter: 5000,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub gamma_g: f64,
    pub gamma_fstar: f64,
    pub norm_v: f64,
    pub norm_amv: f64,
    pub kappa: f64,
    pub n_iters: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            gamma_g: 1.0,
            gamma_fstar: 1.0,
            norm_v: 1.0,
            norm_amv: 0.5,
            kappa: 0.25,
            n_iters: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks ranges that the builders would otherwise reject late.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(msg));
        match self.experiment {
            Some(Experiment::Quadratic) => {
                let q = &self.quadratic;
                if q.max_iter == 0 || !(q.rel_tol > 0.0) {
                    return bad("quadratic: max_iter must be ≥ 1 and rel_tol positive".into());
                }
                if !(q.tail_fraction > 0.0 && q.tail_fraction <= 1.0) {
                    return bad(format!(
                        "quadratic: tail_fraction {} outside (0, 1]",
                        q.tail_fraction
                    ));
                }
            }
            Some(Experiment::Ct) => {
                let c = &self.ct;
                if c.lambda1.is_empty() {
                    return bad("ct: lambda1 needs at least one value".into());
                }
                if c.height < 16 || c.width < 16 {
                    return bad("ct: image must be at least 16×16".into());
                }
                if c.max_iter == 0 || !(c.rel_tol > 0.0) {
                    return bad("ct: max_iter must be ≥ 1 and rel_tol positive".into());
                }
            }
            Some(Experiment::Counterexample) if self.counterexample.iterations == 0 => {
                return bad("counterexample: iterations must be ≥ 1".into());
            }
            Some(Experiment::Divergence) if self.divergence.iterations == 0 => {
                return bad("divergence: iterations must be ≥ 1".into());
            }
            Some(Experiment::Certify) => {
                let c = &self.certify;
                if !(c.gamma_g >= 0.0
                    && c.gamma_fstar >= 0.0
                    && c.norm_v >= 0.0
                    && c.norm_amv >= 0.0)
                {
                    return bad("certify: moduli and norms must be nonnegative".into());
                }
            }
            None => return bad("no experiment selected".into()),
            _ => {}
        }
        Ok(())
    }
}
