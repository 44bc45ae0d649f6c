//! Linear-bandit policies on top of the covariance sketches: exact OFUL, the single-sketch
//! SOFUL (FD) and CBSCFD (RFD) baselines, and DBSLinUCB driven by a [`DyadicSketch`].

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicConfig, DyadicSketch, UpdateRule};
use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::numerics::{axpy, dot};
use crate::sketch::{AlphaRule, DenseCovariance, SketchKind, SketchState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    Theoretical,
    Fixed,
}

/// Confidence-radius configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaConfig {
    pub mode: BetaMode,
    pub delta: f64,
    pub fixed_value: f64,
}

impl BetaConfig {
    pub fn fixed(value: f64) -> Self {
        Self {
            mode: BetaMode::Fixed,
            delta: 0.1,
            fixed_value: value,
        }
    }

    pub fn theoretical(delta: f64) -> Self {
        Self {
            mode: BetaMode::Theoretical,
            delta,
            fixed_value: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.fixed_value > 0.0) || !self.fixed_value.is_finite() {
            return Err(Error::OutOfRange {
                what: "beta fixed value",
                value: self.fixed_value,
                range: "(0, inf)",
            });
        }
        Ok(())
    }
}

impl Default for BetaConfig {
    fn default() -> Self {
        Self::fixed(1.0)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// Problem-scale constants: context norm bound `L`, weight norm bound `H`, noise scale `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub context_norm: f64,
    pub weight_norm: f64,
    pub noise: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            context_norm: 1.0,
            weight_norm: 1.0,
            noise: 0.1,
        }
    }
}

/// Inputs of the confidence-radius formulas.
#[derive(Debug, Clone, Copy)]
pub struct BetaParams<'a> {
    pub dim: usize,
    /// Rounds played so far.
    pub t: usize,
    pub lambda: f64,
    pub delta: f64,
    pub bounds: Bounds,
    /// σ̄ᵢ per block.
    pub shrink_sums: &'a [f64],
    /// Sketch length of each block (only used by the RFD radius).
    pub block_lengths: &'a [usize],
    /// Length `l` of the active block.
    pub l_active: usize,
    /// Replaces the `2l` rank term (OFUL and the dense fallback use `d`).
    pub rank_term: Option<usize>,
}

impl BetaParams<'_> {
    fn rank_term(&self) -> f64 {
        self.rank_term.map_or(2.0 * self.l_active as f64, |r| r as f64)
    }

    fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.lambda > 0.0) {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: self.lambda,
                range: "(0, inf)",
            });
        }
        if self.rank_term() <= 0.0 {
            return Err(Error::InvalidArgument("rank term must be positive".into()));
        }
        Ok(())
    }
}

/// Radius for FD-based sketches:
/// `R√(1+Σσ̄/λ)·√(2ln(1/δ) + d·ln(1+Σσ̄/λ) + 2l·ln(1 + tL²/(2lλ))) + H(λ+Σσ̄)/√λ`.
pub fn beta_fd(p: &BetaParams<'_>) -> Result<f64> {
    p.validate()?;
    let sum: f64 = p.shrink_sums.iter().sum();
    let lam = p.lambda;
    let r2 = p.rank_term();
    let Bounds {
        context_norm: l_bound,
        weight_norm: h,
        noise: r,
    } = p.bounds;
    let inner = 2.0 * (1.0 / p.delta).ln()
        + p.dim as f64 * (1.0 + sum / lam).ln()
        + r2 * (1.0 + p.t as f64 * l_bound * l_bound / (r2 * lam)).ln();
    Ok(r * (1.0 + sum / lam).sqrt() * inner.sqrt() + h * (lam + sum) / lam.sqrt())
}

/// `h_t = Σσ̄ᵢ − Σ lᵢσ̄ᵢ / (2l)`.
pub fn rfd_shrink_excess(shrink_sums: &[f64], block_lengths: &[usize], l_active: usize) -> f64 {
    let sum: f64 = shrink_sums.iter().sum();
    let weighted: f64 = shrink_sums
        .iter()
        .zip(block_lengths)
        .map(|(s, &l)| l as f64 * s)
        .sum();
    sum - weighted / (2.0 * l_active as f64)
}

/// Radius for RFD-based sketches:
/// `R√(2ln(1/δ) + d·ln(1+Σσ̄/λ) + 2l·ln(1 + tL²/(2lλ) + h_t/λ)) + H√(λ+Σσ̄)`.
pub fn beta_rfd(p: &BetaParams<'_>) -> Result<f64> {
    p.validate()?;
    if p.block_lengths.len() != p.shrink_sums.len() {
        return Err(Error::DimensionMismatch {
            context: "beta_rfd block lengths",
            expected: p.shrink_sums.len(),
            actual: p.block_lengths.len(),
        });
    }
    let sum: f64 = p.shrink_sums.iter().sum();
    let lam = p.lambda;
    let r2 = p.rank_term();
    let h_t = if p.l_active > 0 {
        rfd_shrink_excess(p.shrink_sums, p.block_lengths, p.l_active)
    } else {
        0.0
    };
    let Bounds {
        context_norm: l_bound,
        weight_norm: h,
        noise: r,
    } = p.bounds;
    let inner = 2.0 * (1.0 / p.delta).ln()
        + p.dim as f64 * (1.0 + sum / lam).ln()
        + r2 * (1.0 + p.t as f64 * l_bound * l_bound / (r2 * lam) + h_t / lam).ln();
    Ok(r * inner.sqrt() + h * (lam + sum).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Exact ridge regression with a dense inverse.
    Oful,
    /// Single FD sketch of length `l`.
    Soful { l: usize },
    /// Single RFD sketch of length `l`.
    Cbscfd { l: usize },
    /// DBSLinUCB over FD blocks.
    DbsFd { l0: usize, epsilon: f64 },
    /// DBSLinUCB over RFD blocks.
    DbsRfd { l0: usize, epsilon: f64 },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Oful => "OFUL",
            PolicyKind::Soful { .. } => "SOFUL",
            PolicyKind::Cbscfd { .. } => "CBSCFD",
            PolicyKind::DbsFd { .. } => "DBSLinUCB-FD",
            PolicyKind::DbsRfd { .. } => "DBSLinUCB-RFD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub lambda: f64,
    #[serde(default)]
    pub beta: BetaConfig,
    #[serde(default)]
    pub bounds: Bounds,
    /// Update rule of the dyadic policies.
    #[serde(default)]
    pub dyadic_rule: UpdateRule,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, lambda: f64, beta: BetaConfig) -> Self {
        Self {
            kind,
            lambda,
            beta,
            bounds: Bounds::default(),
            dyadic_rule: UpdateRule::Fast,
            alpha_rule: AlphaRule::Full,
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_dyadic_rule(mut self, rule: UpdateRule) -> Self {
        self.dyadic_rule = rule;
        self
    }
}

/// The covariance structure behind a policy.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceHandle {
    Dense(DenseCovariance),
    Single(SketchState),
    Dyadic(DyadicSketch),
}

impl CovarianceHandle {
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            CovarianceHandle::Dense(c) => c.apply_inverse(v),
            CovarianceHandle::Single(s) => s.apply_inverse(v),
            CovarianceHandle::Dyadic(d) => d.global_view().apply_inverse(v),
        }
    }

    pub fn quadratic(&self, x: &[f64]) -> Result<f64> {
        match self {
            CovarianceHandle::Dense(c) => c.quadratic(x),
            CovarianceHandle::Single(s) => s.quadratic(x),
            CovarianceHandle::Dyadic(d) => d.global_view().quadratic(x),
        }
    }

    fn update(&mut self, x: &[f64]) -> Result<()> {
        match self {
            CovarianceHandle::Dense(c) => c.rank1_update(x),
            CovarianceHandle::Single(s) => match s.kind() {
                SketchKind::Fd => s.fd_update(x).map(|_| ()),
                SketchKind::Rfd => s.rfd_update(x).map(|_| ()),
            },
            CovarianceHandle::Dyadic(d) => d.update(x).map(|_| ()),
        }
    }
}

/// State of one bandit policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    cfg: PolicyConfig,
    dim: usize,
    cov: CovarianceHandle,
    b: Vec<f64>,
    theta_hat: Vec<f64>,
    t: usize,
}

impl Policy {
    pub fn new(cfg: PolicyConfig, dim: usize) -> Result<Self> {
        cfg.beta.validate()?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let lambda = cfg.lambda;
        let cov = match cfg.kind {
            PolicyKind::Oful => CovarianceHandle::Dense(DenseCovariance::new(dim, lambda)?),
            PolicyKind::Soful { l } => {
                CovarianceHandle::Single(SketchState::new(SketchKind::Fd, l, dim, lambda)?)
            }
            PolicyKind::Cbscfd { l } => CovarianceHandle::Single(
                SketchState::new(SketchKind::Rfd, l, dim, lambda)?.with_alpha_rule(cfg.alpha_rule),
            ),
            PolicyKind::DbsFd { l0, epsilon } | PolicyKind::DbsRfd { l0, epsilon } => {
                let kind = if matches!(cfg.kind, PolicyKind::DbsFd { .. }) {
                    SketchKind::Fd
                } else {
                    SketchKind::Rfd
                };
                let dc = DyadicConfig::new(l0, epsilon, lambda, kind)
                    .with_rule(cfg.dyadic_rule)
                    .with_alpha_rule(cfg.alpha_rule);
                CovarianceHandle::Dyadic(DyadicSketch::new(dc, dim)?)
            }
        };
        Ok(Self {
            cfg,
            dim,
            cov,
            b: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            t: 0,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn name(&self) -> &'static str {
        self.cfg.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covariance(&self) -> &CovarianceHandle {
        &self.cov
    }

    /// `Σ r_s x_s`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// Number of updates so far.
    pub fn t(&self) -> usize {
        self.t
    }

    fn beta_params<'a>(&self, sums: &'a [f64], lengths: &'a [usize]) -> BetaParams<'a> {
        BetaParams {
            dim: self.dim,
            t: self.t,
            lambda: self.cfg.lambda,
            delta: self.cfg.beta.delta,
            bounds: self.cfg.bounds,
            shrink_sums: sums,
            block_lengths: lengths,
            l_active: 0,
            rank_term: None,
        }
    }

    /// Current confidence radius.
    pub fn beta(&self) -> Result<f64> {
        if self.cfg.beta.mode == BetaMode::Fixed {
            return Ok(self.cfg.beta.fixed_value);
        }
        match &self.cov {
            CovarianceHandle::Dense(_) => beta_fd(&BetaParams {
                rank_term: Some(self.dim),
                ..self.beta_params(&[], &[])
            }),
            CovarianceHandle::Single(s) => {
                let sums = [s.shrink_total()];
                let lengths = [s.capacity()];
                let p = BetaParams {
                    l_active: s.capacity(),
                    ..self.beta_params(&sums, &lengths)
                };
                match s.kind() {
                    SketchKind::Fd => beta_fd(&p),
                    SketchKind::Rfd => beta_rfd(&p),
                }
            }
            CovarianceHandle::Dyadic(d) => {
                let sums = d.shrink_sums();
                let lengths = d.block_lengths();
                let p = BetaParams {
                    l_active: d.active_length(),
                    rank_term: d.fallback_engaged().then_some(self.dim),
                    ..self.beta_params(&sums, &lengths)
                };
                match d.config().kind {
                    SketchKind::Fd => beta_fd(&p),
                    SketchKind::Rfd => beta_rfd(&p),
                }
            }
        }
    }

    /// Upper confidence score `xᵀθ̂ + β·‖x‖_{Â⁻¹}`.
    pub fn score(&self, x: &[f64], beta: f64) -> Result<f64> {
        ensure_dim("arm", self.dim, x.len())?;
        let q = self.cov.quadratic(x)?.max(0.0);
        Ok(dot(x, &self.theta_hat) + beta * q.sqrt())
    }

    /// Index and score of the arm with the highest upper confidence score; ties go to the
    /// lowest index.
    pub fn select(&self, arms: &[Vec<f64>]) -> Result<(usize, f64)> {
        if arms.is_empty() {
            return Err(Error::InvalidArgument("empty arm set".into()));
        }
        let beta = self.beta()?;
        let mut best = (0, f64::NEG_INFINITY);
        for (i, x) in arms.iter().enumerate() {
            let s = self.score(x, beta)?;
            if s > best.1 {
                best = (i, s);
            }
        }
        Ok(best)
    }

    /// Absorbs the pulled arm and its reward, then recomputes `θ̂ = Â⁻¹ b`.
    pub fn update(&mut self, arm: &[f64], reward: f64) -> Result<()> {
        ensure_dim("arm", self.dim, arm.len())?;
        ensure_finite(arm, "arm")?;
        ensure_finite(&[reward], "reward")?;
        self.cov.update(arm)?;
        axpy(reward, arm, &mut self.b);
        self.theta_hat = self.cov.apply_inverse(&self.b)?;
        self.t += 1;
        Ok(())
    }
}

/// Arm set offered in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundArms {
    pub arms: Vec<Vec<f64>>,
    /// Expected reward of each arm, when the environment knows it.
    pub expected: Option<Vec<f64>>,
}

/// A source of arm sets and rewards.
pub trait Environment {
    fn dim(&self) -> usize;

    /// Next arm set, or `None` when exhausted.
    fn next_round(&mut self) -> Option<RoundArms>;

    /// Observed reward for pulling arm `index` of `round`.
    fn pull(&mut self, round: &RoundArms, index: usize) -> f64;
}

/// One played round.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmRound {
    pub arms: Vec<Vec<f64>>,
    pub chosen_index: usize,
    pub reward: f64,
    /// `max_x E[r(x)] − E[r(x_t)]`, when the environment exposes expected rewards.
    pub instant_regret: Option<f64>,
    /// Time spent in selection and update.
    pub policy_time: Duration,
}

/// Plays `rounds` rounds, handing each one to `sink` as it completes.
pub fn run_policy_with<E, F>(
    policy: &mut Policy,
    env: &mut E,
    rounds: usize,
    mut sink: F,
) -> Result<()>
where
    E: Environment + ?Sized,
    F: FnMut(ArmRound),
{
    ensure_dim("environment", policy.dim(), env.dim())?;
    for t in 0..rounds {
        let round = env.next_round().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "environment exhausted after {t} of {rounds} rounds"
            ))
        })?;
        let start = Instant::now();
        let (idx, _) = policy.select(&round.arms)?;
        let mut elapsed = start.elapsed();
        let reward = env.pull(&round, idx);
        let start = Instant::now();
        policy.update(&round.arms[idx], reward)?;
        elapsed += start.elapsed();
        let instant_regret = round.expected.as_ref().map(|e| {
            let best = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - e[idx]).max(0.0)
        });
        sink(ArmRound {
            arms: round.arms,
            chosen_index: idx,
            reward,
            instant_regret,
            policy_time: elapsed,
        });
    }
    Ok(())
}

/// Plays `rounds` rounds and returns the trace.
pub fn run_policy<E: Environment + ?Sized>(
    policy: &mut Policy,
    env: &mut E,
    rounds: usize,
) -> Result<Vec<ArmRound>> {
    let mut trace = Vec::with_capacity(rounds);
    run_policy_with(policy, env, rounds, |r| trace.push(r))?;
    Ok(trace)
}
