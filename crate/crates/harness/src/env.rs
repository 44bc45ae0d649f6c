//! Bandit environments and row-stream generators.
//!
//! Every environment draws its arms, its hidden weight and its reward noise from three
//! independent ChaCha8 streams seeded from one environment seed, so every policy played
//! against environments built from the same seed sees identical arm sets and noise.

use std::sync::Arc;

use dyadic_sketch::bandit::{Environment, RoundArms};
use dyadic_sketch::numerics::{dot, norm_sq, splitmix64};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::config::{ApproxConfig, ExperimentConfig, StreamKind};
use crate::data::Dataset;
use crate::error::{HarnessError, Result};

const ARM_SALT: u64 = 0xA5A5_0001;
const THETA_SALT: u64 = 0xA5A5_0002;
const NOISE_SALT: u64 = 0xA5A5_0003;
const BASIS_SALT: u64 = 0xA5A5_0004;

/// Seed of repetition `rep`: `splitmix64(master ^ splitmix64(rep))`.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    splitmix64(master ^ splitmix64(rep as u64))
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ salt))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn normalized(mut v: Vec<f64>, norm: f64) -> Vec<f64> {
    let n = norm_sq(&v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x *= norm / n);
    }
    v
}

/// `r` orthonormal rows in `R^d` (Gram–Schmidt on Gaussian draws).
pub fn random_orthonormal_rows<R: Rng + ?Sized>(rng: &mut R, r: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(r);
    while rows.len() < r {
        let mut v = gaussian_vector(rng, d);
        for _ in 0..2 {
            for q in &rows {
                let p = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm_sq(&v).sqrt();
        if n > 1e-8 {
            rows.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    rows
}

struct Noise {
    rng: ChaCha8Rng,
    dist: Option<Normal<f64>>,
}

impl Noise {
    fn new(seed: u64, std: f64) -> Self {
        Self {
            rng: rng(seed, NOISE_SALT),
            dist: (std > 0.0).then(|| Normal::new(0.0, std).expect("finite positive std")),
        }
    }

    fn sample(&mut self) -> f64 {
        match &self.dist {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }
}

/// Linear rewards `xᵀθ⋆ + N(0, R²)` with a unit-norm hidden `θ⋆`.
pub struct GaussianEnv {
    dim: usize,
    arms: usize,
    theta: Vec<f64>,
    basis: Option<Vec<Vec<f64>>>,
    arm_norm: Option<f64>,
    arm_rng: ChaCha8Rng,
    noise: Noise,
}

impl GaussianEnv {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn draw_arm(&mut self) -> Vec<f64> {
        let x = match &self.basis {
            None => gaussian_vector(&mut self.arm_rng, self.dim),
            Some(basis) => {
                let z = gaussian_vector(&mut self.arm_rng, basis.len());
                let mut x = vec![0.0; self.dim];
                for (zi, row) in z.iter().zip(basis) {
                    x.iter_mut().zip(row).for_each(|(a, b)| *a += zi * b);
                }
                x
            }
        };
        match self.arm_norm {
            Some(l) => normalized(x, l),
            None => x,
        }
    }
}

/// Standard-normal arms (optionally on a random `context_rank`-dimensional subspace, and
/// optionally scaled to norm `L`); `θ⋆` standard normal, normalized.
pub fn gen_gaussian_instance(cfg: &ExperimentConfig, seed: u64) -> GaussianEnv {
    let d = cfg.d;
    let theta = normalized(gaussian_vector(&mut rng(seed, THETA_SALT), d), 1.0);
    let basis = cfg
        .context_rank
        .filter(|&r| r < d)
        .map(|r| random_orthonormal_rows(&mut rng(seed, BASIS_SALT), r, d));
    GaussianEnv {
        dim: d,
        arms: cfg.arms,
        theta,
        basis,
        arm_norm: cfg.normalize_arms.then_some(cfg.context_norm),
        arm_rng: rng(seed, ARM_SALT),
        noise: Noise::new(seed, cfg.noise),
    }
}

impl Environment for GaussianEnv {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_round(&mut self) -> Option<RoundArms> {
        let arms: Vec<Vec<f64>> = (0..self.arms).map(|_| self.draw_arm()).collect();
        let expected = arms.iter().map(|x| dot(x, &self.theta)).collect();
        Some(RoundArms {
            arms,
            expected: Some(expected),
        })
    }

    fn pull(&mut self, round: &RoundArms, index: usize) -> f64 {
        dot(&round.arms[index], &self.theta) + self.noise.sample()
    }
}

/// Contexts drawn i.i.d. from `r` fixed orthonormal vectors (the first `r` standard basis
/// vectors scaled to norm `L`) with the given probabilities.
pub struct OrthonormalEnv {
    dim: usize,
    arms: usize,
    norm: f64,
    theta: Vec<f64>,
    index: WeightedIndex<f64>,
    arm_rng: ChaCha8Rng,
    noise: Noise,
}

impl OrthonormalEnv {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Index of the next drawn vector (exposed for frequency checks).
    pub fn draw_index(&mut self) -> usize {
        self.index.sample(&mut self.arm_rng)
    }
}

pub fn gen_orthonormal_instance(
    cfg: &ExperimentConfig,
    r: usize,
    weights: Option<&[f64]>,
    seed: u64,
) -> Result<OrthonormalEnv> {
    if r == 0 || r > cfg.d {
        return Err(HarnessError::Config(format!("r must lie in 1..={}", cfg.d)));
    }
    let w = match weights {
        Some(w) => {
            if w.len() != r {
                return Err(HarnessError::Config(format!(
                    "{} weights for {r} vectors",
                    w.len()
                )));
            }
            if w.iter().any(|&p| !(p >= 0.0)) {
                return Err(HarnessError::Config("weights must be non-negative".into()));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(HarnessError::Config(format!("weights sum to {sum}, not 1")));
            }
            w.to_vec()
        }
        None => vec![1.0 / r as f64; r],
    };
    let index = WeightedIndex::new(&w).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(OrthonormalEnv {
        dim: cfg.d,
        arms: cfg.arms,
        norm: cfg.context_norm,
        theta: normalized(gaussian_vector(&mut rng(seed, THETA_SALT), cfg.d), 1.0),
        index,
        arm_rng: rng(seed, ARM_SALT),
        noise: Noise::new(seed, cfg.noise),
    })
}

impl Environment for OrthonormalEnv {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_round(&mut self) -> Option<RoundArms> {
        let mut arms = Vec::with_capacity(self.arms);
        let mut expected = Vec::with_capacity(self.arms);
        for _ in 0..self.arms {
            let i = self.draw_index();
            let mut x = vec![0.0; self.dim];
            x[i] = self.norm;
            expected.push(self.norm * self.theta[i]);
            arms.push(x);
        }
        Some(RoundArms {
            arms,
            expected: Some(expected),
        })
    }

    fn pull(&mut self, round: &RoundArms, index: usize) -> f64 {
        dot(&round.arms[index], &self.theta) + self.noise.sample()
    }
}

/// One random sample per label each round; reward 1 for the target label, else 0.
pub struct ClassificationEnv {
    data: Arc<Dataset>,
    target: usize,
    rng: ChaCha8Rng,
}

impl ClassificationEnv {
    pub fn new(data: Arc<Dataset>, target_label: i64, seed: u64) -> Result<Self> {
        let target = data
            .labels()
            .iter()
            .position(|&l| l == target_label)
            .ok_or_else(|| {
                HarnessError::Dataset(format!("target label {target_label} not in dataset"))
            })?;
        Ok(Self {
            data,
            target,
            rng: rng(seed, ARM_SALT),
        })
    }

    /// Position of the target label within each arm set.
    pub fn target_position(&self) -> usize {
        self.target
    }
}

/// Loads the dataset and builds a classification environment over it.
pub fn gen_classification_instance(
    dataset: &std::path::Path,
    labels: Option<&std::path::Path>,
    target_label: i64,
    seed: u64,
) -> Result<ClassificationEnv> {
    let data = crate::data::load_dataset(dataset, labels)?;
    ClassificationEnv::new(Arc::new(data), target_label, seed)
}

impl Environment for ClassificationEnv {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn next_round(&mut self) -> Option<RoundArms> {
        let n = self.data.labels().len();
        let arms: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let g = self.data.group(i);
                g[self.rng.random_range(0..g.len())].clone()
            })
            .collect();
        let expected = (0..n).map(|i| f64::from(u8::from(i == self.target))).collect();
        Some(RoundArms {
            arms,
            expected: Some(expected),
        })
    }

    fn pull(&mut self, _round: &RoundArms, index: usize) -> f64 {
        f64::from(u8::from(index == self.target))
    }
}

/// Rows of an approximation experiment.
pub fn gen_stream(approx: &ApproxConfig, d: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let rank = approx.rank.unwrap_or(d);
    if rank == 0 || rank > d {
        return Err(HarnessError::Config(format!("stream rank must lie in 1..={d}")));
    }
    let mut r = rng(seed, ARM_SALT);
    let rows: Vec<Vec<f64>> = match approx.stream {
        StreamKind::Gaussian => (0..n).map(|_| gaussian_vector(&mut r, d)).collect(),
        StreamKind::Orthonormal => (0..n)
            .map(|_| {
                let mut x = vec![0.0; d];
                x[r.random_range(0..rank)] = 1.0;
                x
            })
            .collect(),
        StreamKind::LowRank => {
            let basis = random_orthonormal_rows(&mut rng(seed, BASIS_SALT), rank, d);
            (0..n)
                .map(|_| {
                    let z = gaussian_vector(&mut r, rank);
                    let mut x = vec![0.0; d];
                    for (zi, row) in z.iter().zip(&basis) {
                        x.iter_mut().zip(row).for_each(|(a, b)| *a += zi * b);
                    }
                    x
                })
                .collect()
        }
    };
    Ok(if approx.normalize_rows {
        rows.into_iter().map(|x| normalized(x, 1.0)).collect()
    } else {
        rows
    })
}
