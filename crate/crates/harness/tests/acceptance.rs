//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p dbs-harness --test acceptance`. The process exits 0
//! regardless of failures unless `ACCEPTANCE_STRICT=1` is set. `ACCEPTANCE_ONLY=1,4,7`
//! restricts the run to the listed criteria.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dbs_harness::config::ExperimentKind;
use dbs_harness::env::gen_gaussian_instance;
use dbs_harness::experiment::run_single;
use dbs_harness::{run_approx_experiment, run_bandit_experiment, ExperimentConfig, PolicySpec};
use dyadic_sketch::bandit::{
    beta_fd, beta_rfd, BetaConfig, BetaParams, Bounds, Environment, Policy, PolicyConfig,
    PolicyKind,
};
use dyadic_sketch::{DyadicConfig, DyadicSketch, SketchKind, SketchState, UpdateRule};

// ---------------------------------------------------------------------------------------
// independent dense oracles

type Mat = Vec<Vec<f64>>;

fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

fn add_outer(g: &mut Mat, x: &[f64]) {
    for (i, row) in g.iter_mut().enumerate() {
        if x[i] != 0.0 {
            for (j, v) in row.iter_mut().enumerate() {
                *v += x[i] * x[j];
            }
        }
    }
}

fn from_lib(m: &dyadic_sketch::DenseMatrix) -> Mat {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

fn frob_sq(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|v| v * v).sum()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut m: Mat = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (a[i][j] + a[j][i])).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let total: f64 = m.iter().flatten().map(|v| v * v).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn spectral(a: &Mat) -> f64 {
    let v = jacobi_eigenvalues(a);
    v.first().map_or(0.0, |lo| lo.abs().max(v[v.len() - 1].abs()))
}

fn condition(a: &Mat) -> f64 {
    let v = jacobi_eigenvalues(a);
    v[v.len() - 1] / v[0]
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------------------
// streams

fn gaussian(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(r)).collect()
}

fn unit(mut x: Vec<f64>) -> Vec<f64> {
    let n = dot(&x, &x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    x
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    Gaussian,
    LowRank(usize),
    Decaying,
    Orthonormal(usize),
}

fn stream(r: &mut ChaCha8Rng, shape: Shape, n: usize, d: usize) -> Vec<Vec<f64>> {
    match shape {
        Shape::Gaussian => (0..n).map(|_| gaussian(r, d)).collect(),
        Shape::LowRank(k) => {
            let basis: Vec<Vec<f64>> = (0..k).map(|_| gaussian(r, d)).collect();
            (0..n)
                .map(|_| {
                    let mut x = vec![0.0; d];
                    for b in &basis {
                        let c: f64 = StandardNormal.sample(r);
                        x.iter_mut().zip(b).for_each(|(v, bv)| *v += c * bv);
                    }
                    x
                })
                .collect()
        }
        Shape::Decaying => (0..n)
            .map(|_| {
                gaussian(r, d)
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| v * 0.7f64.powi(i as i32))
                    .collect()
            })
            .collect(),
        Shape::Orthonormal(k) => (0..n)
            .map(|_| {
                let mut x = vec![0.0; d];
                x[r.random_range(0..k)] = 1.0;
                x
            })
            .collect(),
    }
}

fn random_shape(r: &mut ChaCha8Rng, d: usize) -> Shape {
    match r.random_range(0..4) {
        0 => Shape::Gaussian,
        1 => Shape::LowRank(r.random_range(1..=d)),
        2 => Shape::Decaying,
        _ => Shape::Orthonormal(r.random_range(1..=d)),
    }
}

// ---------------------------------------------------------------------------------------
// criteria

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// FD spectral bound and PSD gap.
fn c1() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let streams = 500;
    let (mut failures, mut worst_slack) = (0usize, f64::INFINITY);
    for _ in 0..streams {
        let d = r.random_range(2..=30);
        let n = r.random_range(1..=200);
        let l = r.random_range(2..=10);
        let shape = random_shape(&mut r, d);
        let rows = stream(&mut r, shape, n, d);
        let mut fd = SketchState::new(SketchKind::Fd, l, d, 1.0).unwrap();
        let mut gram = zeros(d);
        for x in &rows {
            fd.fd_update(x).unwrap();
            add_outer(&mut gram, x);
        }
        let fro = frob_sq(&rows);
        let diff = sub(&gram, &from_lib(&fd.rows().col_gram()));
        let eig = jacobi_eigenvalues(&diff);
        let err = eig[d - 1].abs().max(eig[0].abs());
        let spectrum: Vec<f64> = jacobi_eigenvalues(&gram).into_iter().rev().collect();
        let bound = (0..l)
            .map(|k| spectrum[k.min(d)..].iter().map(|v| v.max(0.0)).sum::<f64>() / (l - k) as f64)
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-8 * fro;
        if eig[0] < -tol || err > bound + tol {
            failures += 1;
        }
        worst_slack = worst_slack.min((bound - err) / fro.max(1e-300));
    }
    outcome(
        failures == 0,
        format!("{streams} streams, {failures} violations, min relative slack {worst_slack:.3e}"),
    )
}

/// Dyadic global error at every prefix of normalized-row streams.
fn c2() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut specs = Vec::new();
    for i in 0..200 {
        let (d, n) = match i % 25 {
            0 => (100, 2000),
            1..=5 => (r.random_range(40..=60), r.random_range(200..=500)),
            _ => (r.random_range(4..=30), r.random_range(20..=300)),
        };
        specs.push((d, n));
    }
    let (mut failures, mut worst) = (0usize, 0.0f64);
    let mut orthonormal = 0usize;
    for (i, (d, n)) in specs.into_iter().enumerate() {
        let shape = if i % 3 == 0 || d == 100 {
            orthonormal += 1;
            Shape::Orthonormal(r.random_range(1..=d))
        } else {
            random_shape(&mut r, d)
        };
        let rows: Vec<Vec<f64>> = stream(&mut r, shape, n, d).into_iter().map(unit).collect();
        let rule = if i % 2 == 0 { UpdateRule::Standard } else { UpdateRule::Fast };
        let kind = if i % 4 < 2 { SketchKind::Fd } else { SketchKind::Rfd };
        let l0 = r.random_range(1..=8);
        // blocks must be able to hold one unit row
        let cap = [1.0, 2.0, 4.0, 8.0, 16.0, 64.0][r.random_range(0..6)];
        let unit_cap = DyadicConfig::new(l0, 1.0, 1.0, kind).with_rule(rule).size_cap();
        let eps = cap / unit_cap;
        let mut dy = DyadicSketch::new(DyadicConfig::new(l0, eps, 1.0, kind).with_rule(rule), d)
            .unwrap();
        let mut gram = zeros(d);
        let mut bad = false;
        for (t, x) in rows.iter().enumerate() {
            dy.update(x).unwrap();
            add_outer(&mut gram, x);
            let err = spectral(&sub(&gram, &from_lib(&dy.approx_gram())));
            worst = worst.max(err / (2.0 * eps));
            if err > 2.0 * eps + 1e-6 * (t + 1) as f64 {
                bad = true;
            }
        }
        failures += usize::from(bad);
    }
    outcome(
        failures == 0,
        format!(
            "200 streams ({orthonormal} orthonormal), {failures} violating, \
             max err/2eps {worst:.4}"
        ),
    )
}

/// Sketched inverse application and quadratic form against dense inverses.
fn c3() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let instances = 1200;
    let (mut failures, mut worst) = (0usize, 0.0f64);
    for i in 0..instances {
        let d = r.random_range(1..=30);
        let n = r.random_range(1..=60);
        let lambda = 10f64.powf(r.random_range(-2.0..1.0));
        let shape = random_shape(&mut r, d);
        let rows = stream(&mut r, shape, n, d);
        let v = gaussian(&mut r, d);
        let (apply, quad, approx) = if i % 3 == 2 {
            let kind = if i % 2 == 0 { SketchKind::Fd } else { SketchKind::Rfd };
            let rule = if i % 4 < 2 { UpdateRule::Standard } else { UpdateRule::Fast };
            let cfg = DyadicConfig::new(r.random_range(1..=4), r.random_range(0.5..5.0), lambda, kind)
                .with_rule(rule);
            let mut dy = DyadicSketch::new(cfg, d).unwrap();
            for x in &rows {
                dy.update(x).unwrap();
            }
            let view = dy.global_view();
            (
                view.apply_inverse(&v).unwrap(),
                view.quadratic(&v).unwrap(),
                from_lib(&dy.approx_gram()),
            )
        } else {
            let kind = if i % 3 == 0 { SketchKind::Fd } else { SketchKind::Rfd };
            let mut sk = SketchState::new(kind, r.random_range(1..=10), d, lambda).unwrap();
            for x in &rows {
                sk.update(x).unwrap();
            }
            (
                sk.apply_inverse(&v).unwrap(),
                sk.quadratic(&v).unwrap(),
                from_lib(&sk.approx_gram()),
            )
        };
        let mut a = approx;
        for (k, row) in a.iter_mut().enumerate() {
            row[k] += lambda;
        }
        let want = matvec(&inverse(&a), &v);
        let scale = dot(&want, &want).sqrt().max(1e-300);
        let diff: f64 = apply.iter().zip(&want).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let want_q = dot(&v, &want);
        let rel = (diff / scale).max((quad - want_q).abs() / want_q.abs().max(1e-300));
        worst = worst.max(rel);
        failures += usize::from(rel > 1e-8);
    }
    outcome(
        failures == 0,
        format!("{instances} instances, {failures} above 1e-8, max relative error {worst:.2e}"),
    )
}

/// Fast path against the per-row path run with the same block-size cap.
fn c4() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let streams = 100;
    let (mut failures, mut worst, mut boundaries) = (0usize, 0.0f64, 0usize);
    for i in 0..streams {
        let d = r.random_range(8..=40);
        let n = r.random_range(50..=400);
        let shape = random_shape(&mut r, d);
        let rows = stream(&mut r, shape, n, d);
        let kind = if i % 2 == 0 { SketchKind::Fd } else { SketchKind::Rfd };
        let l0 = r.random_range(1..=4);
        let eps = r.random_range(2.0..40.0);
        let fast = DyadicConfig::new(l0, eps, 1.0, kind).with_rule(UpdateRule::Fast);
        let slow = DyadicConfig::new(l0, eps / 2.0, 1.0, kind).with_rule(UpdateRule::Standard);
        let mut f = DyadicSketch::new(fast, d).unwrap();
        let mut s = DyadicSketch::new(slow, d).unwrap();
        let mut fro = 0.0;
        let mut bad = false;
        for x in &rows {
            fro += dot(x, x);
            let rep = f.update(x).unwrap();
            s.update(x).unwrap();
            if rep.shrink.is_some() {
                boundaries += 1;
                let err = spectral(&sub(&from_lib(&f.approx_gram()), &from_lib(&s.approx_gram())));
                worst = worst.max(err / fro);
                bad |= err > 1e-6 * fro;
            }
        }
        failures += usize::from(bad);
    }
    outcome(
        failures == 0,
        format!(
            "{streams} streams, {boundaries} boundaries, {failures} streams disagreeing, \
             max gap/|X|_F^2 {worst:.3e}"
        ),
    )
}

/// RFD monotonicity and conditioning.
fn c5() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let streams = 200;
    let (mut mono_fail, mut cond_fail) = (0usize, 0usize);
    let mut worst_ratio = 0.0f64;
    for _ in 0..streams {
        let d = r.random_range(2..=16);
        let n = r.random_range(1..=80);
        let l = r.random_range(1..=8);
        let lambda = 10f64.powf(r.random_range(-1.0..1.0));
        let shape = random_shape(&mut r, d);
        let rows = stream(&mut r, shape, n, d);
        let mut rfd = SketchState::new(SketchKind::Rfd, l, d, lambda).unwrap();
        let mut gram = zeros(d);
        let mut prev = zeros(d);
        let mut fro = 0.0;
        let (mut mono, mut cond) = (true, true);
        for x in &rows {
            rfd.rfd_update(x).unwrap();
            add_outer(&mut gram, x);
            fro += dot(x, x);
            let cur = from_lib(&rfd.approx_gram());
            mono &= jacobi_eigenvalues(&sub(&cur, &prev))[0] >= -1e-8 * fro;
            let shift = |m: &Mat| -> Mat {
                let mut m = m.clone();
                (0..d).for_each(|k| m[k][k] += lambda);
                m
            };
            let c_alpha = condition(&shift(&cur));
            let c_plain = condition(&shift(&from_lib(&rfd.rows().col_gram())));
            let c_exact = condition(&shift(&gram));
            worst_ratio = worst_ratio.max(c_alpha / c_plain).max(c_alpha / c_exact);
            cond &= c_alpha <= c_plain * (1.0 + 1e-6) && c_alpha <= c_exact * (1.0 + 1e-6);
            prev = cur;
        }
        mono_fail += usize::from(!mono);
        cond_fail += usize::from(!cond);
    }
    outcome(
        mono_fail == 0 && cond_fail == 0,
        format!(
            "{streams} streams, {mono_fail} monotonicity and {cond_fail} conditioning \
             violations, max condition ratio {worst_ratio:.4}"
        ),
    )
}

/// DBSLinUCB and OFUL agree while the stream rank is below `l0`.
fn c6() -> Outcome {
    let (d, rounds, rank, l0) = (40, 500, 6, 8);
    let (mut mismatched_runs, mut worst_theta, mut worst_regret) = (0usize, 0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let cfg = ExperimentConfig {
            d,
            rounds,
            arms: 20,
            context_rank: Some(rank),
            seed,
            ..ExperimentConfig::preset(ExperimentKind::Synthetic)
        };
        let mut env = gen_gaussian_instance(&cfg, seed);
        let beta = BetaConfig::fixed(0.1);
        let mut oful = Policy::new(PolicyConfig::new(PolicyKind::Oful, 1.0, beta), d).unwrap();
        let mut dbs: Vec<Policy> = [
            PolicyKind::DbsFd { l0, epsilon: 2000.0 },
            PolicyKind::DbsRfd { l0, epsilon: 2000.0 },
        ]
        .into_iter()
        .map(|k| Policy::new(PolicyConfig::new(k, 1.0, beta), d).unwrap())
        .collect();
        let mut regret = [0.0f64; 3];
        let mut same = true;
        for _ in 0..rounds {
            let round = env.next_round().unwrap();
            let expected = round.expected.clone().unwrap();
            let best = expected.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (pick, _) = oful.select(&round.arms).unwrap();
            let picks: Vec<usize> = dbs.iter().map(|p| p.select(&round.arms).unwrap().0).collect();
            let reward = env.pull(&round, pick);
            oful.update(&round.arms[pick], reward).unwrap();
            regret[0] += best - expected[pick];
            for (k, (p, &q)) in dbs.iter_mut().zip(&picks).enumerate() {
                same &= q == pick;
                // feed the OFUL choice so both policies keep seeing the same history
                p.update(&round.arms[pick], reward).unwrap();
                regret[k + 1] += best - expected[q];
                let gap = p
                    .theta_hat()
                    .iter()
                    .zip(oful.theta_hat())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst_theta = worst_theta.max(gap);
            }
        }
        worst_regret = worst_regret.max((regret[1] - regret[0]).abs().max((regret[2] - regret[0]).abs()));
        mismatched_runs += usize::from(!same);
    }
    outcome(
        mismatched_runs == 0 && worst_theta <= 1e-6,
        format!(
            "20 runs, {mismatched_runs} with differing choices, max theta gap {worst_theta:.2e}, \
             max regret gap {worst_regret:.2e}"
        ),
    )
}

fn worst_case_config(epsilon: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::WorstCase);
    cfg.d = 100;
    cfg.orthonormal_rank = Some(100);
    cfg.rounds = 4000;
    cfg.repetitions = 10;
    cfg.policies = vec![
        PolicySpec::new(PolicyKind::Soful { l: 30 }, 1.0, BetaConfig::fixed(0.1)),
        PolicySpec::new(PolicyKind::DbsFd { l0: 16, epsilon }, 1.0, BetaConfig::fixed(0.1)),
    ];
    cfg
}

fn growth(cfg: &ExperimentConfig) -> Vec<(String, f64, f64)> {
    let table = run_bandit_experiment(cfg).unwrap();
    cfg.policies
        .iter()
        .map(|p| {
            let col = table.column(&format!("{}_regret", p.label())).unwrap();
            let t = col.len();
            (p.label(), col[t - 1], col[t - 1] / col[t / 2 - 1])
        })
        .collect()
}

/// Linear-regret pitfall on the orthonormal distribution.
fn c7() -> Outcome {
    let g = growth(&worst_case_config(2000.0));
    let (soful, dbs) = (&g[0], &g[1]);
    let pass = soful.2 >= 1.9 && dbs.2 <= 1.8 && dbs.1 < soful.1;
    let info = growth(&worst_case_config(20.0));
    outcome(
        pass,
        format!(
            "SOFUL regret {:.1} ratio {:.3}; DBS regret {:.1} ratio {:.3} \
             (eps=20 for reference: DBS regret {:.1} ratio {:.3})",
            soful.1, soful.2, dbs.1, dbs.2, info[1].1, info[1].2
        ),
    )
}

/// Covariance approximation at the default approx scale.
fn c8() -> Outcome {
    let cfg = ExperimentConfig::preset(ExperimentKind::Approx);
    let eps = cfg.approx.epsilon;
    let table = run_approx_experiment(&cfg).unwrap();
    let dbs = table.column("DBS_err").unwrap();
    let fd = table.column("FD_err").unwrap();
    let max_dbs = dbs.iter().copied().fold(0.0, f64::max);
    let (fd_final, dbs_final) = (fd[fd.len() - 1], dbs[dbs.len() - 1]);
    outcome(
        max_dbs <= 2.0 * eps && fd_final > dbs_final,
        format!(
            "n={} d={}: max DBS err {max_dbs:.1} (2eps={}), final FD {fd_final:.1} vs DBS \
             {dbs_final:.1}",
            cfg.rounds,
            cfg.d,
            2.0 * eps
        ),
    )
}

/// Per-round time as `d` doubles on a rank-20 stream.
fn c9() -> Outcome {
    let mean_round_ms = |d: usize| -> (f64, f64) {
        let cfg = ExperimentConfig {
            d,
            rounds: 400,
            arms: 20,
            context_rank: Some(20),
            repetitions: 5,
            policies: vec![
                PolicySpec::new(PolicyKind::Oful, 1.0, BetaConfig::fixed(0.1)),
                PolicySpec::new(PolicyKind::DbsFd { l0: 16, epsilon: 2000.0 }, 1.0, BetaConfig::fixed(0.1)),
            ],
            ..ExperimentConfig::preset(ExperimentKind::Synthetic)
        };
        let mut totals = [0.0; 2];
        for rep in 0..cfg.repetitions {
            for (p, total) in totals.iter_mut().enumerate() {
                let trace = run_single(&cfg, p, rep, None).unwrap();
                *total += trace.time_ms[cfg.rounds - 1];
            }
        }
        let per = (cfg.repetitions * cfg.rounds) as f64;
        (totals[0] / per, totals[1] / per)
    };
    let (oful_200, dbs_200) = mean_round_ms(200);
    let (oful_400, dbs_400) = mean_round_ms(400);
    let (oful_ratio, dbs_ratio) = (oful_400 / oful_200, dbs_400 / dbs_200);
    outcome(
        dbs_ratio <= 2.6 && oful_ratio >= 3.2,
        format!(
            "ms/round d=200->400: OFUL {oful_200:.4}->{oful_400:.4} (x{oful_ratio:.2}), \
             DBS {dbs_200:.4}->{dbs_400:.4} (x{dbs_ratio:.2})"
        ),
    )
}

/// Confidence radii against a direct transcription of the formulas.
fn c10() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let blocks = r.random_range(1..=5);
        let sums: Vec<f64> = (0..blocks).map(|_| r.random_range(0.0..50.0)).collect();
        let lengths: Vec<usize> = (0..blocks).map(|i| 2usize << i).collect();
        let l = lengths[blocks - 1];
        let d = r.random_range(1..=500);
        let t = r.random_range(0..=100_000);
        let lam = 10f64.powf(r.random_range(-2.0..2.0));
        let delta = r.random_range(0.001..0.5);
        let (big_l, big_h, big_r) = (
            r.random_range(0.1..3.0),
            r.random_range(0.1..3.0),
            r.random_range(0.0..2.0),
        );
        let rank_term = if r.random_bool(0.25) { Some(d) } else { None };
        let p = BetaParams {
            dim: d,
            t,
            lambda: lam,
            delta,
            bounds: Bounds {
                context_norm: big_l,
                weight_norm: big_h,
                noise: big_r,
            },
            shrink_sums: &sums,
            block_lengths: &lengths,
            l_active: l,
            rank_term,
        };
        let m = rank_term.map_or(2.0 * l as f64, |v| v as f64);
        let mut s = 0.0;
        for v in &sums {
            s += v;
        }
        let mut weighted = 0.0;
        for (v, &li) in sums.iter().zip(&lengths) {
            weighted += v * li as f64;
        }
        let h_t = s - weighted / (2.0 * l as f64);
        let log_det = d as f64 * (s / lam).ln_1p();
        let fd_ref = big_r
            * (1.0 + s / lam).sqrt()
            * (2.0 * delta.recip().ln() + log_det + m * (t as f64 * big_l.powi(2) / (m * lam)).ln_1p())
                .sqrt()
            + big_h * (lam + s) / lam.sqrt();
        let rfd_ref = big_r
            * (2.0 * delta.recip().ln()
                + log_det
                + m * (t as f64 * big_l.powi(2) / (m * lam) + h_t / lam).ln_1p())
            .sqrt()
            + big_h * (lam + s).sqrt();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        worst = worst
            .max(rel(beta_fd(&p).unwrap(), fd_ref))
            .max(rel(beta_rfd(&p).unwrap(), rfd_ref));
    }
    outcome(worst <= 1e-10, format!("100 grid points, max relative gap {worst:.2e}"))
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "FD spectral bound", Duration::from_secs(30), c1),
        (2, "dyadic global 2eps bound", Duration::from_secs(120), c2),
        (3, "Woodbury equivalence", Duration::from_secs(10), c3),
        (4, "fast/slow dyadic agreement", Duration::from_secs(60), c4),
        (5, "RFD monotonicity and conditioning", Duration::from_secs(60), c5),
        (6, "exact-regime DBSLinUCB = OFUL", Duration::from_secs(60), c6),
        (7, "orthonormal pitfall regret growth", Duration::from_secs(300), c7),
        (8, "approximation at default scale", Duration::from_secs(60), c8),
        (9, "per-round time scaling in d", Duration::from_secs(180), c9),
        (10, "confidence radius formulas", Duration::from_secs(5), c10),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut passed, mut failed) = (0usize, Vec::new());
    for (id, name, limit, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        let timing = format!(
            "{:.1}s of {}s{}",
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" }
        );
        println!(
            "{} C{id:<2} {name}: {} [{timing}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if pass {
            passed += 1;
        } else {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {passed} passed, {} failed{}",
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({failed:?})")
        }
    );
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
