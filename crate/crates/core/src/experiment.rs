//! Reproducible synthetic experiments: sparse-recovery comparison against
//! a discrepancy-matched Tikhonov solution, trade-off curve extraction,
//! and per-iterate convergence logs.
//!
//! Randomness comes from ChaCha8 seeded with a user-supplied 64-bit seed;
//! standard normal variates are drawn with the polar (Marsaglia) method.
//! Streams are stable for a fixed seed, so emitted files are byte
//! identical across runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::homotopy::{
    find_minimizer_collect, PathNode, Problem, SolveOptions, StoppingRule,
};
use crate::iterative::{adaptive_landweber, thresholded_landweber, IterOptions, IterationState};
use crate::linalg::{solve, Matrix, Vector};
use crate::scalar::Tolerance;

/// Standard normal sampler using the polar method.
pub struct NormalGen {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalGen {
    pub fn new(seed: u64) -> Self {
        NormalGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn uniform_index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.rng.gen::<f64>() - 1.0;
            let v = 2.0 * self.rng.gen::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// Settings of one synthetic run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    /// Number of nonzero components of the planted vector.
    pub sparsity: usize,
    /// Noise norm as a fraction of the clean data norm.
    pub noise: f64,
    /// Use the identity matrix instead of a random one (requires m = n).
    pub identity: bool,
}

/// A generated problem together with its ground truth.
pub struct GeneratedProblem {
    pub problem: Problem<f64>,
    pub x_in: Vector<f64>,
    /// `||e||^2`, the discrepancy target of the reconstruction.
    pub noise_norm_sq: f64,
}

pub fn generate(config: &ExperimentConfig) -> Result<GeneratedProblem> {
    if config.m == 0 || config.n == 0 || config.sparsity == 0 {
        return Err(Error::Parse("m, n, sparsity must all be at least 1".into()));
    }
    if config.sparsity > config.n {
        return Err(Error::Parse("sparsity cannot exceed n".into()));
    }
    if config.noise < 0.0 {
        return Err(Error::Parse("noise fraction must be nonnegative".into()));
    }
    if config.identity && config.m != config.n {
        return Err(Error::Parse("identity matrix requires m = n".into()));
    }
    let mut gen = NormalGen::new(config.seed);

    let k = if config.identity {
        Matrix::identity(config.n)
    } else {
        let mut rows = Vec::with_capacity(config.m);
        for _ in 0..config.m {
            rows.push((0..config.n).map(|_| gen.normal()).collect());
        }
        Matrix::from_rows(rows)?
    };

    let mut x_in = Vector::zeros(config.n);
    let mut placed = 0;
    while placed < config.sparsity {
        let i = gen.uniform_index(config.n);
        if x_in[i] == 0.0 {
            x_in[i] = gen.normal();
            placed += 1;
        }
    }

    let clean = k.matvec(&x_in);
    let clean_norm = clean.norm_sq().sqrt();
    let mut e = Vector::new((0..config.m).map(|_| gen.normal()).collect());
    let e_norm = e.norm_sq().sqrt();
    if e_norm > 0.0 && config.noise > 0.0 {
        e = e.scale(&(config.noise * clean_norm / e_norm));
    } else {
        e = Vector::zeros(config.m);
    }
    let y = clean.add(&e);
    let noise_norm_sq = e.norm_sq();

    Ok(GeneratedProblem {
        problem: Problem::new(k, y, None)?,
        x_in,
        noise_norm_sq,
    })
}

/// Tikhonov-regularized solution `(K^T K + lambda I)^{-1} K^T y`,
/// computed through the dual system when the problem is underdetermined.
pub fn tikhonov(problem: &Problem<f64>, lambda: f64) -> Result<Vector<f64>> {
    let k = problem.matrix();
    let y = problem.data();
    let (m, n) = (k.nrows(), k.ncols());
    let tol = Tolerance::standard();
    if m < n {
        // x = K^T (K K^T + lambda I)^{-1} y
        let mut a = Matrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += k.get(i, c) * k.get(j, c);
                }
                a.set(i, j, acc);
                a.set(j, i, acc);
            }
            a.set(i, i, a.get(i, i) + lambda);
        }
        let z = solve(&a, y, &tol)?;
        Ok(k.tr_matvec(&z))
    } else {
        let mut a = k.gram_restricted(&(0..n).collect::<Vec<_>>());
        for i in 0..n {
            a.set(i, i, a.get(i, i) + lambda);
        }
        solve(&a, &k.tr_matvec(y), &tol)
    }
}

/// Find the Tikhonov solution whose discrepancy matches `target` to a
/// relative accuracy of 1e-10 by bisection on lambda. The discrepancy is
/// increasing in lambda.
pub fn tikhonov_matched(problem: &Problem<f64>, target: f64) -> Result<Vector<f64>> {
    let disc = |x: &Vector<f64>| {
        problem
            .data()
            .sub(&problem.matrix().matvec(x))
            .norm_sq()
    };
    let mut lo = 1e-12;
    let x_lo = tikhonov(problem, lo)?;
    if disc(&x_lo) > target {
        return Err(Error::InfeasibleStop(format!(
            "discrepancy target {target} below the minimal achievable value"
        )));
    }
    let mut hi = 1.0;
    for _ in 0..200 {
        if disc(&tikhonov(problem, hi)?) >= target {
            break;
        }
        hi *= 2.0;
    }
    let mut best = x_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x_mid = tikhonov(problem, mid)?;
        let d = disc(&x_mid);
        if (d - target).abs() <= 1e-10 * target.max(1e-300) {
            return Ok(x_mid);
        }
        if d < target {
            lo = mid;
        } else {
            hi = mid;
        }
        best = x_mid;
    }
    Ok(best)
}

/// Support-recovery and error metrics of one reconstruction.
#[derive(Clone, Debug)]
pub struct ReconstructionMetrics {
    pub rel_err_l2: f64,
    pub true_positives: usize,
    pub false_positives: usize,
}

pub fn metrics(x: &Vector<f64>, x_in: &Vector<f64>, zero_tol: f64) -> ReconstructionMetrics {
    let denom = x_in.norm_sq().sqrt().max(1e-300);
    let rel_err_l2 = x.sub(x_in).norm_sq().sqrt() / denom;
    let mut tp = 0;
    let mut fp = 0;
    for i in 0..x.len() {
        if x[i].abs() > zero_tol {
            if x_in[i] != 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    ReconstructionMetrics {
        rel_err_l2,
        true_positives: tp,
        false_positives: fp,
    }
}

/// Full outcome of one synthetic run.
pub struct ExperimentOutcome {
    pub x_in: Vector<f64>,
    pub x_l1: Vector<f64>,
    pub x_l2: Vector<f64>,
    pub l1_metrics: ReconstructionMetrics,
    pub l2_metrics: ReconstructionMetrics,
    pub nodes: Vec<PathNode<f64>>,
    /// Per-iterate (counter, discrepancy, distance to x_l1) for the
    /// thresholded Landweber run at the final path penalty.
    pub tlw_convergence: Vec<(usize, f64, f64)>,
    /// Same log for the adaptive Landweber run at radius `||x_l1||_1`.
    pub alw_convergence: Vec<(usize, f64, f64)>,
}

/// Run the sparse-recovery experiment: homotopy stopped at the noise
/// level, discrepancy-matched Tikhonov comparison, and convergence logs
/// for two iterative schemes.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let generated = generate(config)?;
    let problem = &generated.problem;

    let (nodes, result) = find_minimizer_collect(
        problem,
        &StoppingRule::MinDiscrepancy(generated.noise_norm_sq),
        &SolveOptions::default(),
    )?;
    let x_l1 = result.final_node.x.clone();
    let lambda = result.final_node.lambda;

    let x_l2 = tikhonov_matched(problem, generated.noise_norm_sq.max(1e-12))?;

    let zero_tol = 1e-9;
    let l1_metrics = metrics(&x_l1, &generated.x_in, zero_tol);
    let l2_metrics = metrics(&x_l2, &generated.x_in, zero_tol);

    // The operator norm must be below sqrt(2) for the Landweber schemes;
    // rescale the problem rather than the algorithms.
    let scaled = scaled_problem(problem)?;
    let scale = scaled.1;
    let sp = &scaled.0;
    let lambda_scaled = lambda * scale * scale;
    let iters = 200;

    let mut tlw_convergence = Vec::new();
    {
        let stop = move |s: &IterationState<f64>| s.counter >= iters;
        let mut collect = |s: &IterationState<f64>| {
            let x_unscaled = s.x.clone();
            let d = problem.data().sub(&problem.matrix().matvec(&x_unscaled)).norm_sq();
            let dist = x_unscaled.sub(&x_l1).norm_sq().sqrt();
            tlw_convergence.push((s.counter, d, dist));
        };
        thresholded_landweber(
            sp,
            &lambda_scaled,
            IterOptions {
                collect: Some(&mut collect),
                stop: Some(&stop),
                ..Default::default()
            },
        )?;
    }

    let mut alw_convergence = Vec::new();
    {
        let radius = x_l1.l1_norm();
        let mut collect = |s: &IterationState<f64>| {
            let d = problem.data().sub(&problem.matrix().matvec(&s.x)).norm_sq();
            let dist = s.x.sub(&x_l1).norm_sq().sqrt();
            alw_convergence.push((s.counter, d, dist));
        };
        adaptive_landweber(
            sp,
            &radius,
            iters,
            IterOptions {
                collect: Some(&mut collect),
                ..Default::default()
            },
        )?;
    }

    Ok(ExperimentOutcome {
        x_in: generated.x_in,
        x_l1,
        x_l2,
        l1_metrics,
        l2_metrics,
        nodes,
        tlw_convergence,
        alw_convergence,
    })
}

/// Estimate the operator norm by power iteration.
pub fn operator_norm(k: &Matrix<f64>) -> f64 {
    let n = k.ncols();
    let mut v = Vector::new((0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect());
    let mut norm = 0.0;
    for _ in 0..100 {
        let w = k.tr_matvec(&k.matvec(&v));
        let wn = w.norm_sq().sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w.scale(&(1.0 / wn));
        norm = wn;
    }
    norm.sqrt()
}

/// Scale the problem so the operator norm is safely below 1: rows of K
/// and y are multiplied by a common factor. The minimizers are related by
/// `lambda -> lambda * c^2` with the same x.
fn scaled_problem(problem: &Problem<f64>) -> Result<(Problem<f64>, f64)> {
    let norm = operator_norm(problem.matrix());
    let c = if norm > 0.9 { 0.9 / norm } else { 1.0 };
    let k = problem.matrix();
    let mut rows = Vec::with_capacity(k.nrows());
    for i in 0..k.nrows() {
        rows.push((0..k.ncols()).map(|j| k.get(i, j) * c).collect());
    }
    let y = problem.data().scale(&c);
    Ok((Problem::new(Matrix::from_rows(rows)?, y, None)?, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_generation() {
        let config = ExperimentConfig {
            seed: 7,
            m: 5,
            n: 9,
            sparsity: 3,
            noise: 0.05,
            identity: false,
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.x_in, b.x_in);
        assert_eq!(a.problem.data(), b.problem.data());
        assert_eq!(a.x_in.support().len(), 3);
        assert!(a.noise_norm_sq > 0.0);
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut gen = NormalGen::new(3);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = gen.normal();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn tikhonov_matches_discrepancy_target() {
        let config = ExperimentConfig {
            seed: 11,
            m: 8,
            n: 20,
            sparsity: 3,
            noise: 0.1,
            identity: false,
        };
        let g = generate(&config).unwrap();
        let x = tikhonov_matched(&g.problem, g.noise_norm_sq).unwrap();
        let d = g.problem.data().sub(&g.problem.matrix().matvec(&x)).norm_sq();
        assert!((d - g.noise_norm_sq).abs() <= 1e-8 * g.noise_norm_sq);
    }

    #[test]
    fn identity_noiseless_recovery_is_exact() {
        let config = ExperimentConfig {
            seed: 2,
            m: 6,
            n: 6,
            sparsity: 1,
            noise: 0.0,
            identity: true,
        };
        let out = run(&config).unwrap();
        let err = out.x_l1.sub(&out.x_in).norm_sq().sqrt();
        assert!(err < 1e-9, "error {err}");
        assert_eq!(out.l1_metrics.false_positives, 0);
    }

    #[test]
    fn operator_norm_of_identity() {
        let k: Matrix<f64> = Matrix::identity(4);
        let n = operator_norm(&k);
        assert!((n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn small_regression_run_produces_logs() {
        let config = ExperimentConfig {
            seed: 5,
            m: 10,
            n: 25,
            sparsity: 3,
            noise: 0.03,
            identity: false,
        };
        let out = run(&config).unwrap();
        assert!(!out.nodes.is_empty());
        assert_eq!(out.tlw_convergence.len(), 201);
        assert_eq!(out.alw_convergence.len(), 201);
        // The constrained iterates respect the radius from the first
        // update onward.
        assert!(out.l1_metrics.rel_err_l2.is_finite());
        assert!(out.l2_metrics.rel_err_l2.is_finite());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = ExperimentConfig {
            seed: 1,
            m: 4,
            n: 4,
            sparsity: 1,
            noise: 0.0,
            identity: false,
        };
        let mut c = base.clone();
        c.sparsity = 9;
        assert!(generate(&c).is_err());
        let mut c = base.clone();
        c.noise = -0.5;
        assert!(generate(&c).is_err());
        let mut c = base;
        c.identity = true;
        c.m = 3;
        assert!(generate(&c).is_err());
    }
}
