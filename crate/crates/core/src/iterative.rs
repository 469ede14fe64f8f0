//! Iterative approximation of the penalized and constrained minimizers:
//! thresholded Landweber, projected Landweber, projected steepest descent,
//! and the two adaptive (growing-radius) variants.

use std::time::Instant;


use crate::error::{Error, Result};
use crate::homotopy::Problem;
use crate::linalg::Vector;
use crate::ops;
use crate::scalar::Scalar;

/// Snapshot of one iterate.
#[derive(Clone, Debug)]
pub struct IterationState<S> {
    pub counter: usize,
    pub x: Vector<S>,
    pub remainder: Vector<S>,
    pub misfit: Vector<S>,
    /// Step size used to reach this iterate; 1 for fixed-step schemes
    /// and for the starting point.
    pub beta: S,
    pub elapsed: f64,
}

impl<S: Scalar> IterationState<S> {
    pub fn discrepancy(&self) -> S {
        self.misfit.norm_sq()
    }
}

/// Shared options of the iterative schemes.
pub struct IterOptions<'a, S> {
    /// Starting point (default 0; the adaptive schemes always start at 0).
    pub start: Option<Vector<S>>,
    /// Penalty weights for the thresholded scheme (default all ones).
    pub weights: Option<Vector<S>>,
    /// Called with every iterate, the start included.
    pub collect: Option<&'a mut dyn FnMut(&IterationState<S>)>,
    /// Stop as soon as this holds (checked after each update). Default:
    /// one iteration for the fixed-radius schemes, `numsteps` iterations
    /// for the adaptive ones.
    pub stop: Option<&'a dyn Fn(&IterationState<S>) -> bool>,
}

impl<'a, S> Default for IterOptions<'a, S> {
    fn default() -> Self {
        IterOptions {
            start: None,
            weights: None,
            collect: None,
            stop: None,
        }
    }
}

/// Result of an iterative solve.
#[derive(Clone, Debug)]
pub struct IterResult<S> {
    pub final_state: IterationState<S>,
}

fn make_state<S: Scalar>(
    problem: &Problem<S>,
    counter: usize,
    x: Vector<S>,
    beta: S,
    t0: Instant,
) -> Result<IterationState<S>> {
    let misfit = problem.data().sub(&problem.matrix().matvec(&x));
    let remainder = problem.matrix().tr_matvec(&misfit);
    if !S::EXACT {
        for v in x.iter().chain(remainder.iter()) {
            if !v.to_f64().is_finite() {
                return Err(Error::Diverged);
            }
        }
    }
    Ok(IterationState {
        counter,
        x,
        remainder,
        misfit,
        beta,
        elapsed: t0.elapsed().as_secs_f64(),
    })
}

fn starting_point<S: Scalar>(problem: &Problem<S>, opts: &IterOptions<S>) -> Result<Vector<S>> {
    match &opts.start {
        Some(x0) => {
            if x0.len() != problem.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "start has length {}, problem has dimension {}",
                    x0.len(),
                    problem.dim()
                )));
            }
            Ok(x0.clone())
        }
        None => Ok(Vector::zeros(problem.dim())),
    }
}

fn run_scheme<S: Scalar>(
    problem: &Problem<S>,
    start: Vector<S>,
    opts: &mut IterOptions<S>,
    default_stop: &dyn Fn(&IterationState<S>) -> bool,
    mut update: impl FnMut(&IterationState<S>) -> Result<(Vector<S>, S)>,
) -> Result<IterResult<S>> {
    let t0 = Instant::now();
    let mut state = make_state(problem, 0, start, S::one(), t0)?;
    if let Some(c) = opts.collect.as_mut() {
        c(&state);
    }
    loop {
        let stopped = match opts.stop {
            Some(f) => f(&state),
            None => default_stop(&state),
        };
        if stopped && state.counter > 0 {
            return Ok(IterResult { final_state: state });
        }
        let (x_next, beta) = update(&state)?;
        state = make_state(problem, state.counter + 1, x_next, beta, t0)?;
        if let Some(c) = opts.collect.as_mut() {
            c(&state);
        }
    }
}

/// Thresholded Landweber iteration
/// `x <- S_{w lambda}(x + K^T(y - Kx))` for the penalized functional.
pub fn thresholded_landweber<S: Scalar>(
    problem: &Problem<S>,
    lambda: &S,
    mut opts: IterOptions<S>,
) -> Result<IterResult<S>> {
    if lambda.is_negative() {
        return Err(Error::NegativeThreshold);
    }
    let weights = match opts.weights.clone() {
        Some(w) => {
            if w.len() != problem.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "weights have length {}, problem has dimension {}",
                    w.len(),
                    problem.dim()
                )));
            }
            w
        }
        None => problem.weights().clone(),
    };
    let thresholds = weights.scale(lambda);
    let start = starting_point(problem, &opts)?;
    run_scheme(
        problem,
        start,
        &mut opts,
        &|s| s.counter >= 1,
        |state| {
            let arg = state.x.add(&state.remainder);
            Ok((ops::soft_threshold_vec(&arg, &thresholds)?, S::one()))
        },
    )
}

/// Projected Landweber iteration
/// `x <- P_R(x + K^T(y - Kx))` for the radius-constrained functional.
pub fn projected_landweber<S: Scalar>(
    problem: &Problem<S>,
    radius: &S,
    mut opts: IterOptions<S>,
) -> Result<IterResult<S>> {
    if radius.is_negative() {
        return Err(Error::NegativeRadius);
    }
    let start = starting_point(problem, &opts)?;
    run_scheme(
        problem,
        start,
        &mut opts,
        &|s| s.counter >= 1,
        |state| {
            let arg = state.x.add(&state.remainder);
            Ok((ops::project_l1_ball(&arg, radius)?, S::one()))
        },
    )
}

fn descent_step<S: Scalar>(problem: &Problem<S>, state: &IterationState<S>) -> Result<S> {
    let r = &state.remainder;
    if r.iter().all(|v| v.is_zero()) {
        return Ok(S::zero());
    }
    let kr = problem.matrix().matvec(r);
    let denom = kr.norm_sq();
    if denom.is_zero() {
        return Err(Error::SingularStepSize);
    }
    r.norm_sq().try_div(&denom)
}

/// Projected steepest descent `x <- P_R(x + beta r)` with the adaptive
/// step `beta = ||r||^2 / ||Kr||^2`.
pub fn projected_steepest_descent<S: Scalar>(
    problem: &Problem<S>,
    radius: &S,
    mut opts: IterOptions<S>,
) -> Result<IterResult<S>> {
    if radius.is_negative() {
        return Err(Error::NegativeRadius);
    }
    let start = starting_point(problem, &opts)?;
    run_scheme(
        problem,
        start,
        &mut opts,
        &|s| s.counter >= 1,
        |state| {
            if state.remainder.iter().all(|v| v.is_zero()) {
                return Ok((state.x.clone(), S::zero()));
            }
            let beta = descent_step(problem, state)?;
            let arg = state.x.add_scaled(&beta, &state.remainder);
            Ok((ops::project_l1_ball(&arg, radius)?, beta))
        },
    )
}

fn adaptive_radius<S: Scalar>(radius: &S, n: usize, numsteps: usize) -> S {
    let grown = radius.clone() * S::from_int((n + 1) as i64)
        / S::from_int(numsteps as i64);
    if grown > *radius {
        radius.clone()
    } else {
        grown
    }
}

/// Projected Landweber with warm-started radii `R_n = (n+1) R / numsteps`.
pub fn adaptive_landweber<S: Scalar>(
    problem: &Problem<S>,
    radius: &S,
    numsteps: usize,
    mut opts: IterOptions<S>,
) -> Result<IterResult<S>> {
    if numsteps == 0 {
        return Err(Error::ZeroNumSteps);
    }
    if radius.is_negative() {
        return Err(Error::NegativeRadius);
    }
    let start = Vector::zeros(problem.dim());
    run_scheme(
        problem,
        start,
        &mut opts,
        &|s| s.counter >= numsteps,
        |state| {
            let rn = adaptive_radius(radius, state.counter, numsteps);
            let arg = state.x.add(&state.remainder);
            Ok((ops::project_l1_ball(&arg, &rn)?, S::one()))
        },
    )
}

/// Steepest descent with the same warm-started radii as
/// [`adaptive_landweber`].
pub fn adaptive_steepest_descent<S: Scalar>(
    problem: &Problem<S>,
    radius: &S,
    numsteps: usize,
    mut opts: IterOptions<S>,
) -> Result<IterResult<S>> {
    if numsteps == 0 {
        return Err(Error::ZeroNumSteps);
    }
    if radius.is_negative() {
        return Err(Error::NegativeRadius);
    }
    let start = Vector::zeros(problem.dim());
    run_scheme(
        problem,
        start,
        &mut opts,
        &|s| s.counter >= numsteps,
        |state| {
            if state.remainder.iter().all(|v| v.is_zero()) {
                return Ok((state.x.clone(), S::zero()));
            }
            let rn = adaptive_radius(radius, state.counter, numsteps);
            let beta = descent_step(problem, state)?;
            let arg = state.x.add_scaled(&beta, &state.remainder);
            Ok((ops::project_l1_ball(&arg, &rn)?, beta))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::Rational;
    use num_traits::{One, Zero};

    type Q = Rational;

    fn qv(values: &[i64]) -> Vector<Q> {
        Vector::from_ints(values)
    }

    fn identity_problem() -> Problem<Q> {
        Problem::new(Matrix::identity(5), qv(&[12, -8, 5, 1, 2]), None).unwrap()
    }

    fn stop_at(n: usize) -> impl Fn(&IterationState<Q>) -> bool {
        move |s| s.counter >= n
    }

    #[test]
    fn thresholded_identity_one_step() {
        // For K = I a single step from 0 gives S_lambda(y), the exact
        // penalized minimizer.
        let p = identity_problem();
        let r = thresholded_landweber(&p, &Q::one(), IterOptions::default()).unwrap();
        assert_eq!(r.final_state.x, qv(&[11, -7, 4, 0, 1]));
        assert_eq!(r.final_state.counter, 1);
    }

    #[test]
    fn thresholded_above_lambda_max_stays_at_origin() {
        let p = identity_problem();
        let stop = stop_at(25);
        let r = thresholded_landweber(
            &p,
            &Q::from_int(15),
            IterOptions {
                stop: Some(&stop),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.final_state.x, Vector::zeros(5));
    }

    #[test]
    fn thresholded_rejects_bad_input() {
        let p = identity_problem();
        assert!(thresholded_landweber(&p, &Q::from_int(-1), IterOptions::default()).is_err());
        assert!(thresholded_landweber(
            &p,
            &Q::one(),
            IterOptions {
                start: Some(qv(&[1, 2])),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn thresholded_weighted_fixed_point() {
        // With weights taken from the problem, the fixed point obeys the
        // weighted conditions: component thresholds are w_i lambda.
        let p = Problem::new(
            Matrix::identity(3),
            qv(&[10, -10, 10]),
            Some(qv(&[2, 1, 0])),
        )
        .unwrap();
        let r = thresholded_landweber(&p, &Q::from_int(4), IterOptions::default()).unwrap();
        assert_eq!(r.final_state.x, qv(&[2, -6, 10]));
    }

    #[test]
    fn projected_identity_one_step() {
        let p = identity_problem();
        let r = projected_landweber(&p, &Q::from_int(10), IterOptions::default()).unwrap();
        assert_eq!(r.final_state.x, qv(&[7, -3, 0, 0, 0]));
    }

    #[test]
    fn projected_zero_radius() {
        let p = identity_problem();
        let r = projected_landweber(&p, &Q::zero(), IterOptions::default()).unwrap();
        assert_eq!(r.final_state.x, Vector::zeros(5));
    }

    #[test]
    fn projected_large_radius_reaches_data() {
        let p = identity_problem();
        let stop = stop_at(3);
        let r = projected_landweber(
            &p,
            &Q::from_int(100),
            IterOptions {
                stop: Some(&stop),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.final_state.x, qv(&[12, -8, 5, 1, 2]));
    }

    #[test]
    fn feasibility_along_projected_iterates() {
        let p = identity_problem();
        let radius = Q::from_int(6);
        let mut l1s: Vec<Q> = Vec::new();
        let stop = stop_at(5);
        {
            let mut collect = |s: &IterationState<Q>| l1s.push(s.x.l1_norm());
            projected_landweber(
                &p,
                &radius,
                IterOptions {
                    collect: Some(&mut collect),
                    stop: Some(&stop),
                    ..Default::default()
                },
            )
            .unwrap();
        }
        assert_eq!(l1s.len(), 6);
        for l1 in &l1s[1..] {
            assert!(*l1 <= radius);
        }
    }

    #[test]
    fn steepest_descent_identity_unit_step() {
        let p = identity_problem();
        let r = projected_steepest_descent(&p, &Q::from_int(10), IterOptions::default()).unwrap();
        assert_eq!(r.final_state.beta, Q::one());
        assert_eq!(r.final_state.x, qv(&[7, -3, 0, 0, 0]));
    }

    #[test]
    fn steepest_descent_scaled_identity_step() {
        // K = 2 I gives beta = 1/4, so the pre-projection point for
        // y = (4, 0) is (2, 0).
        let k: Matrix<Q> = Matrix::from_int_rows(&[&[2, 0], &[0, 2]]);
        let p = Problem::new(k, qv(&[4, 0]), None).unwrap();
        let r = projected_steepest_descent(&p, &Q::from_int(100), IterOptions::default()).unwrap();
        assert_eq!(r.final_state.beta, Q::ratio(1, 4));
        assert_eq!(r.final_state.x, qv(&[2, 0]));
    }

    #[test]
    fn steepest_descent_converged_remainder_stops_cleanly() {
        let p: Problem<Q> = Problem::new(Matrix::identity(2), qv(&[0, 0]), None).unwrap();
        let stop = stop_at(3);
        let r = projected_steepest_descent(
            &p,
            &Q::one(),
            IterOptions {
                stop: Some(&stop),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.final_state.x, Vector::zeros(2));
    }

    #[test]
    fn steepest_descent_singular_step_reported() {
        // A descent direction annihilated by K has no well-defined step.
        // This cannot arise from a consistent remainder (which lies in
        // the row space of K), so the guard is exercised directly.
        let k: Matrix<Q> = Matrix::from_int_rows(&[&[0, 1], &[0, 0]]);
        let p = Problem::new(k, qv(&[1, 0]), None).unwrap();
        let state = IterationState {
            counter: 0,
            x: qv(&[0, 0]),
            remainder: qv(&[1, 0]),
            misfit: qv(&[1, 0]),
            beta: Q::one(),
            elapsed: 0.0,
        };
        assert!(matches!(
            descent_step(&p, &state),
            Err(Error::SingularStepSize)
        ));
    }

    #[test]
    fn adaptive_single_step_matches_projected() {
        let p = identity_problem();
        let a = adaptive_landweber(&p, &Q::from_int(10), 1, IterOptions::default()).unwrap();
        let b = projected_landweber(&p, &Q::from_int(10), IterOptions::default()).unwrap();
        assert_eq!(a.final_state.x, b.final_state.x);
    }

    #[test]
    fn adaptive_reaches_full_radius() {
        // R = 28 = ||y||_1, so the final step admits y itself.
        let p = identity_problem();
        let r = adaptive_landweber(&p, &Q::from_int(28), 4, IterOptions::default()).unwrap();
        assert_eq!(r.final_state.counter, 4);
        assert_eq!(r.final_state.x, qv(&[12, -8, 5, 1, 2]));
    }

    #[test]
    fn adaptive_start_is_forced_to_zero() {
        let p = identity_problem();
        let r = adaptive_landweber(
            &p,
            &Q::from_int(4),
            2,
            IterOptions {
                start: Some(qv(&[100, 100, 100, 100, 100])),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.final_state.x.l1_norm() <= Q::from_int(4));
    }

    #[test]
    fn adaptive_variants_agree_on_identity() {
        let p = identity_problem();
        let a = adaptive_landweber(&p, &Q::from_int(10), 5, IterOptions::default()).unwrap();
        let b = adaptive_steepest_descent(&p, &Q::from_int(10), 5, IterOptions::default()).unwrap();
        assert_eq!(a.final_state.x, b.final_state.x);
    }

    #[test]
    fn zero_numsteps_rejected() {
        let p = identity_problem();
        assert!(matches!(
            adaptive_landweber(&p, &Q::one(), 0, IterOptions::default()),
            Err(Error::ZeroNumSteps)
        ));
        assert!(matches!(
            adaptive_steepest_descent(&p, &Q::one(), 0, IterOptions::default()),
            Err(Error::ZeroNumSteps)
        ));
    }

    #[test]
    fn collected_remainders_match_recomputation() {
        let p = identity_problem();
        let mut states: Vec<IterationState<Q>> = Vec::new();
        let stop = stop_at(3);
        {
            let mut collect = |s: &IterationState<Q>| states.push(s.clone());
            thresholded_landweber(
                &p,
                &Q::from_int(2),
                IterOptions {
                    collect: Some(&mut collect),
                    stop: Some(&stop),
                    ..Default::default()
                },
            )
            .unwrap();
        }
        for s in &states {
            let r = ops::remainder(&p, &s.x).unwrap();
            assert_eq!(r, s.remainder);
        }
    }

    #[test]
    fn float_divergence_detected() {
        // ||K|| far above sqrt(2): the Landweber iteration blows up and
        // must be reported rather than looping on non-finite values.
        let k: Matrix<f64> = Matrix::from_rows(vec![vec![10.0, 0.0], vec![0.0, 10.0]]).unwrap();
        let p = Problem::new(k, Vector::new(vec![1.0, 1.0]), None).unwrap();
        let stop = |s: &IterationState<f64>| s.counter >= 10_000;
        let r = thresholded_landweber(
            &p,
            &0.1,
            IterOptions {
                stop: Some(&stop),
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::Diverged)));
    }
}
