//! Experiment configuration, loadable from JSON or TOML.

use std::path::{Path, PathBuf};

use dyadic_sketch::bandit::{BetaConfig, BetaMode, Bounds, PolicyConfig, PolicyKind};
use dyadic_sketch::{AlphaRule, SketchKind, UpdateRule};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Streaming covariance approximation: FD vs dyadic sketch.
    Approx,
    /// Gaussian contexts.
    Synthetic,
    /// Contexts drawn from a few orthonormal vectors.
    WorstCase,
    /// Online classification from a labeled dataset.
    Classify,
}

/// Row distribution of an approximation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    /// i.i.d. standard normal rows.
    Gaussian,
    /// Rows drawn uniformly from the first `rank` standard basis vectors.
    Orthonormal,
    /// Standard normal coefficients on a random `rank`-dimensional subspace.
    LowRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxConfig {
    pub stream: StreamKind,
    /// Rank for the orthonormal and low-rank streams (defaults to `d`).
    pub rank: Option<usize>,
    /// Scale every row to unit norm.
    pub normalize_rows: bool,
    /// Sketch size of the FD baseline.
    pub fd_sketch_size: usize,
    pub l0: usize,
    pub epsilon: f64,
    pub kind: SketchKind,
    pub rule: UpdateRule,
    /// Largest `d` for which the dense error oracle runs.
    pub dim_cap: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            stream: StreamKind::Gaussian,
            rank: None,
            normalize_rows: false,
            fd_sketch_size: 50,
            l0: 16,
            epsilon: 2000.0,
            kind: SketchKind::Fd,
            rule: UpdateRule::Standard,
            dim_cap: 400,
        }
    }
}

/// One roster entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    /// Column label; defaults to a name derived from the kind.
    #[serde(default)]
    pub label: Option<String>,
    pub kind: PolicyKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub beta: BetaConfig,
    #[serde(default)]
    pub dyadic_rule: UpdateRule,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
}

fn default_lambda() -> f64 {
    1.0
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, lambda: f64, beta: BetaConfig) -> Self {
        Self {
            label: None,
            kind,
            lambda,
            beta,
            dyadic_rule: UpdateRule::Fast,
            alpha_rule: AlphaRule::Full,
        }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.kind {
            PolicyKind::Oful => "OFUL".into(),
            PolicyKind::Soful { l } => format!("SOFUL-{l}"),
            PolicyKind::Cbscfd { l } => format!("CBSCFD-{l}"),
            PolicyKind::DbsFd { l0, .. } => format!("DBSLinUCB-FD-{l0}"),
            PolicyKind::DbsRfd { l0, .. } => format!("DBSLinUCB-RFD-{l0}"),
        }
    }

    pub fn to_policy_config(&self, bounds: Bounds) -> PolicyConfig {
        let mut cfg = PolicyConfig::new(self.kind, self.lambda, self.beta).with_bounds(bounds);
        cfg.dyadic_rule = self.dyadic_rule;
        cfg.alpha_rule = self.alpha_rule;
        cfg
    }
}

/// Grid of β and λ values; every roster entry is run once per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            betas: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            lambdas: vec![2e-4, 2e-3, 2e-2, 2e-1, 2.0, 2e1, 2e2, 2e3, 2e4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    #[serde(alias = "T")]
    pub rounds: usize,
    /// Arms per round.
    #[serde(alias = "K")]
    pub arms: usize,
    pub policies: Vec<PolicySpec>,
    /// Standard deviation `R` of the Gaussian reward noise.
    pub noise: f64,
    /// Context norm bound `L`.
    pub context_norm: f64,
    /// Scale every arm to norm `L`.
    pub normalize_arms: bool,
    pub seed: u64,
    pub repetitions: usize,
    pub output: Option<PathBuf>,
    /// Rank of the synthetic context distribution (full rank when absent).
    pub context_rank: Option<usize>,
    /// Number of orthonormal vectors of the worst-case environment (defaults to `d`).
    pub orthonormal_rank: Option<usize>,
    /// Probabilities of the orthonormal vectors (uniform when absent).
    pub weights: Option<Vec<f64>>,
    /// CSV (`label,f1,...,fd`) or IDX image file.
    pub dataset: Option<PathBuf>,
    /// IDX label file accompanying an IDX image file.
    pub labels: Option<PathBuf>,
    pub target_label: i64,
    pub approx: ApproxConfig,
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(ExperimentKind::Synthetic)
    }
}

fn fixed(beta: f64) -> BetaConfig {
    BetaConfig::fixed(beta)
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment family.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            d: 100,
            rounds: 2000,
            arms: 50,
            policies: Vec::new(),
            noise: 0.1,
            context_norm: 1.0,
            normalize_arms: true,
            seed: 0,
            repetitions: 1,
            output: None,
            context_rank: None,
            orthonormal_rank: None,
            weights: None,
            dataset: None,
            labels: None,
            target_label: 0,
            approx: ApproxConfig::default(),
            sweep: None,
        };
        match kind {
            ExperimentKind::Approx => Self {
                rounds: 1250,
                ..base
            },
            ExperimentKind::Synthetic => Self {
                policies: vec![
                    PolicySpec::new(PolicyKind::Oful, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::Soful { l: 30 }, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::Cbscfd { l: 30 }, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::DbsFd { l0: 16, epsilon: 2000.0 }, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::DbsRfd { l0: 16, epsilon: 2000.0 }, 1.0, fixed(0.1)),
                ],
                ..base
            },
            ExperimentKind::WorstCase => Self {
                rounds: 4000,
                arms: 20,
                policies: vec![
                    PolicySpec::new(PolicyKind::Oful, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::Soful { l: 30 }, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::DbsFd { l0: 16, epsilon: 2000.0 }, 1.0, fixed(0.1)),
                ],
                ..base
            },
            ExperimentKind::Classify => Self {
                rounds: 2000,
                normalize_arms: false,
                policies: vec![
                    PolicySpec::new(PolicyKind::Oful, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::Soful { l: 20 }, 1.0, fixed(0.1)),
                    PolicySpec::new(PolicyKind::DbsFd { l0: 2, epsilon: 1000.0 }, 1.0, fixed(0.1)),
                ],
                ..base
            },
        }
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        Ok(cfg)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            context_norm: self.context_norm,
            weight_norm: 1.0,
            noise: self.noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("T", self.rounds),
            ("K", self.arms),
            ("repetitions", self.repetitions),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(HarnessError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(HarnessError::Config("noise must be a finite non-negative number".into()));
        }
        if !(self.context_norm > 0.0) {
            return Err(HarnessError::Config("context_norm must be positive".into()));
        }
        if self.experiment != ExperimentKind::Approx {
            if self.policies.is_empty() {
                return Err(HarnessError::Config("policy roster is empty".into()));
            }
            for p in &self.policies {
                p.beta
                    .validate()
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.label())))?;
                if !(p.lambda > 0.0) {
                    return Err(HarnessError::Config(format!("{}: lambda must be positive", p.label())));
                }
            }
        }
        if let Some(r) = self.orthonormal_rank {
            if r == 0 || r > self.d {
                return Err(HarnessError::Config(format!(
                    "orthonormal_rank must lie in 1..={}",
                    self.d
                )));
            }
        }
        if let Some(r) = self.context_rank {
            if r == 0 || r > self.d {
                return Err(HarnessError::Config(format!("context_rank must lie in 1..={}", self.d)));
            }
        }
        Ok(())
    }

    /// Roster after expanding the sweep grid, if any.
    pub fn expanded_roster(&self) -> Vec<PolicySpec> {
        let Some(sweep) = &self.sweep else {
            return self.policies.clone();
        };
        let mut out = Vec::new();
        for p in &self.policies {
            for &beta in &sweep.betas {
                for &lambda in &sweep.lambdas {
                    let mut q = p.clone();
                    q.beta = BetaConfig {
                        mode: BetaMode::Fixed,
                        fixed_value: beta,
                        ..p.beta
                    };
                    q.lambda = lambda;
                    q.label = Some(format!("{}[beta={beta:e};lambda={lambda:e}]", p.label()));
                    out.push(q);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for k in [ExperimentKind::Approx, ExperimentKind::Synthetic, ExperimentKind::WorstCase] {
            ExperimentConfig::preset(k).validate().unwrap();
        }
    }

    #[test]
    fn empty_roster_rejected() {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::Synthetic);
        cfg.policies.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_and_toml_agree() {
        let cfg = ExperimentConfig::preset(ExperimentKind::WorstCase);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let t = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&t).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sweep_expands_grid() {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::Synthetic);
        cfg.policies.truncate(2);
        cfg.sweep = Some(SweepConfig {
            betas: vec![0.1, 1.0],
            lambdas: vec![1.0, 2.0, 3.0],
        });
        let r = cfg.expanded_roster();
        assert_eq!(r.len(), 12);
        assert!(r.iter().all(|p| p.beta.mode == BetaMode::Fixed));
    }
}
