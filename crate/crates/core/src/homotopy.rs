//! The exact path solver: walks the piecewise-linear minimizer path of
//! `||Kx - y||^2 + 2 lambda sum_i w_i |x_i|` from `lambda_max` down,
//! handling entry, removal, tie and zero-weight events, with
//! interpolating stopping rules.

use std::time::Instant;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix, Vector};
use crate::ops;
use crate::scalar::{approx_equal, Scalar, Tolerance};

/// The problem triple: matrix `K`, data `y`, per-component penalty
/// weights `w` (all ones by default).
#[derive(Clone, Debug)]
pub struct Problem<S> {
    k: Matrix<S>,
    y: Vector<S>,
    w: Vector<S>,
}

impl<S: Scalar> Problem<S> {
    pub fn new(k: Matrix<S>, y: Vector<S>, weights: Option<Vector<S>>) -> Result<Self> {
        if k.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, data has length {}",
                k.nrows(),
                y.len()
            )));
        }
        let w = match weights {
            Some(w) => {
                if w.len() != k.ncols() {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix has {} columns, weights have length {}",
                        k.ncols(),
                        w.len()
                    )));
                }
                for (i, wi) in w.iter().enumerate() {
                    if wi.is_negative() {
                        return Err(Error::NegativeWeight(i));
                    }
                }
                w
            }
            None => Vector::ones(k.ncols()),
        };
        Ok(Problem { k, y, w })
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.k
    }

    pub fn data(&self) -> &Vector<S> {
        &self.y
    }

    pub fn weights(&self) -> &Vector<S> {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.k.ncols()
    }

    pub fn is_penalized(&self, i: usize) -> bool {
        !self.w[i].is_zero()
    }

    pub fn zero_weight_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.is_penalized(i)).collect()
    }
}

/// One breakpoint of the piecewise-linear path.
#[derive(Clone, Debug)]
pub struct PathNode<S> {
    pub counter: usize,
    pub x: Vector<S>,
    pub lambda: S,
    pub remainder: Vector<S>,
    pub misfit: Vector<S>,
    /// Indices (0-based) of the nonzero components of `x`.
    pub support: Vec<usize>,
    /// Seconds since the solve started.
    pub elapsed: f64,
}

impl<S: Scalar> PathNode<S> {
    pub fn discrepancy(&self) -> S {
        self.misfit.norm_sq()
    }

    /// Support size including every zero-weight index, the count used by
    /// the `MaxNonZero` stopping rule.
    pub fn counted_support_size(&self, problem: &Problem<S>) -> usize {
        let mut count = self.support.len();
        for i in problem.zero_weight_indices() {
            if self.x[i].is_zero() {
                count += 1;
            }
        }
        count
    }
}

/// Which criterion terminates the path walk.
pub enum StoppingRule<S> {
    /// Stop when the penalty parameter reaches this value (default 0).
    Penalty(S),
    /// Stop when the l1 norm of the minimizer reaches this value.
    MaxL1Norm(S),
    /// Stop when the discrepancy `||Kx - y||^2` comes down to this value.
    MinDiscrepancy(S),
    /// Stop at the first node with this many nonzero coefficients
    /// (zero-weight components always counted).
    MaxNonZero(usize),
    /// Stop at the first node satisfying the predicate; no interpolation.
    Predicate(Box<dyn Fn(&PathNode<S>) -> bool>),
    /// Never stop before the terminal node.
    None,
}

/// One advance along the path.
#[derive(Clone, Debug)]
pub struct HomotopyStep<S> {
    pub direction: Vector<S>,
    pub step: S,
    pub event: StepEvent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepEvent {
    /// These indices catch up with the maximal remainder ratio.
    Entry(Vec<usize>),
    /// These nonzero components reach zero.
    Removal(Vec<usize>),
    /// No event before the penalty reaches zero.
    Terminal,
}

/// Active index set with prescribed signs (`0` for zero-weight members).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug)]
pub struct SolveOptions<S> {
    pub tol: Tolerance<S>,
    /// 0 silent, 1 event lines, 2 full per-node dumps (to stderr).
    pub verbose: u8,
}

impl<S: Scalar> Default for SolveOptions<S> {
    fn default() -> Self {
        SolveOptions {
            tol: Tolerance::standard(),
            verbose: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<S> {
    pub final_node: PathNode<S>,
    pub warnings: Vec<String>,
}

fn sign_i8<S: Scalar>(v: &S) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// `max_{w_i != 0} |r_i / w_i|`, the penalty value of a minimizer.
pub fn lambda_of<S: Scalar>(problem: &Problem<S>, remainder: &Vector<S>) -> S {
    let mut best = S::zero();
    for i in 0..problem.dim() {
        if problem.is_penalized(i) {
            let ratio = remainder[i].abs() / problem.weights()[i].clone();
            if ratio > best {
                best = ratio;
            }
        }
    }
    best
}

fn make_node<S: Scalar>(
    problem: &Problem<S>,
    counter: usize,
    x: Vector<S>,
    lambda: Option<S>,
    t0: Instant,
) -> PathNode<S> {
    let misfit = problem.data().sub(&problem.matrix().matvec(&x));
    let remainder = problem.matrix().tr_matvec(&misfit);
    let lambda = lambda.unwrap_or_else(|| lambda_of(problem, &remainder));
    let support = x.support();
    PathNode {
        counter,
        x,
        lambda,
        remainder,
        misfit,
        support,
        elapsed: t0.elapsed().as_secs_f64(),
    }
}

/// The node at `lambda >= lambda_max`. With all weights positive this is
/// the origin; with zero weights present it is the least-squares
/// minimizer restricted to the unpenalized components, so their
/// remainder components vanish.
pub fn initial_node<S: Scalar>(problem: &Problem<S>, tol: &Tolerance<S>) -> Result<PathNode<S>> {
    let t0 = Instant::now();
    let zero_w = problem.zero_weight_indices();
    let mut x = Vector::zeros(problem.dim());
    if !zero_w.is_empty() {
        let gram = problem.matrix().gram_restricted(&zero_w);
        let kty = problem.matrix().tr_matvec(problem.data());
        let rhs = Vector::new(zero_w.iter().map(|&i| kty[i].clone()).collect());
        let sol = solve(&gram, &rhs, tol).map_err(|_| Error::SingularUnpenalizedStart {
            indices: zero_w.clone(),
        })?;
        for (a, &i) in zero_w.iter().enumerate() {
            x[i] = sol[a].clone();
        }
    }
    Ok(make_node(problem, 0, x, None, t0))
}

/// Direction `v` supported on the given active set that decreases every
/// active remainder ratio uniformly: `(K^T K v)_i = w_i s_i` on penalized
/// active indices and `(K^T K v)_i = 0` on zero-weight indices.
pub fn compute_direction<S: Scalar>(
    problem: &Problem<S>,
    active: &ActiveSet,
    tol: &Tolerance<S>,
) -> Result<Vector<S>> {
    let gram = problem.matrix().gram_restricted(&active.indices);
    let rhs = Vector::new(
        active
            .indices
            .iter()
            .zip(active.signs.iter())
            .map(|(&i, &s)| problem.weights()[i].clone() * S::from_int(s as i64))
            .collect(),
    );
    let sol = solve(&gram, &rhs, tol).map_err(|_| Error::NonUniquePath {
        support: active.indices.clone(),
    })?;
    let mut v = Vector::zeros(problem.dim());
    for (a, &i) in active.indices.iter().enumerate() {
        v[i] = sol[a].clone();
    }
    Ok(v)
}

/// Walk as far as possible along `v`: the step ends when an outside
/// remainder ratio catches up with the decreasing active ratio, when an
/// active component reaches zero, or when the penalty reaches zero.
pub fn compute_step<S: Scalar>(
    problem: &Problem<S>,
    node: &PathNode<S>,
    v: &Vector<S>,
    tol: &Tolerance<S>,
) -> HomotopyStep<S> {
    let n = problem.dim();
    let lambda = node.lambda.clone();
    let c = problem.matrix().tr_matvec(&problem.matrix().matvec(v));

    let in_active = |i: usize| -> bool {
        !v[i].is_zero() || !node.x[i].is_zero() || !problem.is_penalized(i)
    };
    let mu_floor = tol.zero_abs.clone();

    let mut best = lambda.clone();
    let mut event = StepEvent::Terminal;

    // Entry events: |r_j(mu)| / w_j catches up with lambda - mu.
    for j in 0..n {
        if !problem.is_penalized(j) || in_active(j) {
            continue;
        }
        let wj = problem.weights()[j].clone();
        for sigma in [1i64, -1] {
            let s = S::from_int(sigma);
            let denom = s.clone() * wj.clone() - c[j].clone();
            if denom.is_zero() {
                continue;
            }
            let mu = (s * wj.clone() * lambda.clone() - node.remainder[j].clone()) / denom;
            if mu <= mu_floor || mu.is_zero() {
                continue;
            }
            if mu < best {
                best = mu;
                event = StepEvent::Entry(vec![j]);
            } else if mu == best {
                if let StepEvent::Entry(js) = &mut event {
                    if !js.contains(&j) {
                        js.push(j);
                    }
                }
            }
        }
    }

    // Removal events: an active nonzero component reaches zero.
    for i in 0..n {
        if node.x[i].is_zero() || v[i].is_zero() || !problem.is_penalized(i) {
            continue;
        }
        if sign_i8(&node.x[i]) == sign_i8(&v[i]) {
            continue;
        }
        let mu = -(node.x[i].clone() / v[i].clone());
        if mu <= mu_floor || mu.is_zero() {
            continue;
        }
        if mu < best {
            best = mu;
            event = StepEvent::Removal(vec![i]);
        } else if mu == best {
            match &mut event {
                StepEvent::Removal(is) => is.push(i),
                // Simultaneous entry and removal: handle the removal now,
                // the entries are re-detected as tie candidates at the
                // next node.
                StepEvent::Entry(_) => event = StepEvent::Removal(vec![i]),
                StepEvent::Terminal => {}
            }
        }
    }

    HomotopyStep {
        direction: v.clone(),
        step: best,
        event,
    }
}

/// Decide which of the tied candidate indices actually enter the support.
///
/// Returns the whole active set (existing support, all zero-weight
/// indices, and the admitted subset of `candidates`) with prescribed
/// signs. Subsets are searched in order of decreasing cardinality, then
/// lexicographically; a subset is admissible when the resulting direction
/// moves every entering component with the sign of its remainder and
/// drives every excluded candidate's ratio down at least as fast as the
/// active ones.
pub fn resolve_tie_entry<S: Scalar>(
    problem: &Problem<S>,
    node: &PathNode<S>,
    candidates: &[usize],
    tol: &Tolerance<S>,
) -> Result<ActiveSet> {
    let zero_w = problem.zero_weight_indices();
    let mut base: Vec<(usize, i8)> = Vec::new();
    for &i in &node.support {
        if problem.is_penalized(i) {
            base.push((i, sign_i8(&node.x[i])));
        }
    }
    for &i in &zero_w {
        base.push((i, 0));
    }
    let has_penalized_base = base.iter().any(|&(_, s)| s != 0);

    let one = num_traits::One::one();
    let cond2_floor: S = if S::EXACT {
        one
    } else {
        let o: S = num_traits::One::one();
        o - tol.tie_rel.clone()
    };

    for size in (0..=candidates.len()).rev() {
        if size == 0 && !has_penalized_base {
            continue;
        }
        for combo in candidates.iter().copied().combinations(size) {
            let mut members: Vec<(usize, i8)> = base.clone();
            for &j in &combo {
                members.push((j, sign_i8(&node.remainder[j])));
            }
            members.sort_by_key(|&(i, _)| i);
            let active = ActiveSet {
                indices: members.iter().map(|&(i, _)| i).collect(),
                signs: members.iter().map(|&(_, s)| s).collect(),
            };
            let v = match compute_direction(problem, &active, tol) {
                Ok(v) => v,
                Err(_) => continue, // singular trial subset, keep searching
            };
            // Condition 1: entering components move with the sign of
            // their remainder.
            if combo
                .iter()
                .any(|&j| sign_i8(&v[j]) != sign_i8(&node.remainder[j]))
            {
                continue;
            }
            // Condition 2: excluded candidates' ratios must not overtake
            // the uniformly decreasing active ratio.
            let excluded: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|j| !combo.contains(j))
                .collect();
            if !excluded.is_empty() {
                let c = problem.matrix().tr_matvec(&problem.matrix().matvec(&v));
                let ok = excluded.iter().all(|&j| {
                    let s = S::from_int(sign_i8(&node.remainder[j]) as i64);
                    let rate = s * c[j].clone() / problem.weights()[j].clone();
                    rate >= cond2_floor
                });
                if !ok {
                    continue;
                }
            }
            return Ok(active);
        }
    }
    Err(Error::TieResolutionFailed {
        candidates: candidates.to_vec(),
    })
}

/// True iff `(x, lambda)` satisfies the weighted variational conditions:
/// `r_i = w_i lambda sign(x_i)` on the support, `|r_i| <= w_i lambda`
/// off it, and `r_i = 0` wherever `w_i = 0` (all within `tol` on the
/// float backend).
pub fn verify_kkt<S: Scalar>(
    problem: &Problem<S>,
    x: &Vector<S>,
    lambda: &S,
    tol: &Tolerance<S>,
) -> Result<bool> {
    if lambda.is_negative() {
        return Ok(false);
    }
    let r = ops::remainder(problem, x)?;
    let mut scale = S::one();
    if *lambda > scale {
        scale = lambda.clone();
    }
    for v in r.iter() {
        let a = v.abs();
        if a > scale {
            scale = a;
        }
    }
    let slack = tol.tie_rel.clone() * scale;
    for i in 0..problem.dim() {
        let wi = problem.weights()[i].clone();
        if wi.is_zero() {
            if r[i].abs() > slack {
                return Ok(false);
            }
        } else if !x[i].is_zero() {
            let target = wi * lambda.clone() * S::from_int(sign_i8(&x[i]) as i64);
            if (r[i].clone() - target).abs() > slack {
                return Ok(false);
            }
        } else if r[i].abs() > wi * lambda.clone() + slack.clone() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn interpolate_nodes<S: Scalar>(
    problem: &Problem<S>,
    prev: &PathNode<S>,
    node: &PathNode<S>,
    theta: &S,
    t0: Instant,
) -> PathNode<S> {
    let dx = node.x.sub(&prev.x);
    let x = prev.x.add_scaled(theta, &dx);
    let lambda = prev.lambda.clone()
        + theta.clone() * (node.lambda.clone() - prev.lambda.clone());
    make_node(problem, node.counter, x, Some(lambda), t0)
}

fn check_stop<S: Scalar>(
    problem: &Problem<S>,
    stop: &StoppingRule<S>,
    prev: Option<&PathNode<S>>,
    node: &PathNode<S>,
    t0: Instant,
) -> Result<Option<PathNode<S>>> {
    match stop {
        StoppingRule::None => Ok(None),
        StoppingRule::Penalty(target) => {
            if node.lambda <= *target {
                match prev {
                    Some(p) if node.lambda != *target => {
                        let theta = (p.lambda.clone() - target.clone())
                            .try_div(&(p.lambda.clone() - node.lambda.clone()))?;
                        Ok(Some(interpolate_nodes(problem, p, node, &theta, t0)))
                    }
                    _ => Ok(Some(node.clone())),
                }
            } else {
                Ok(None)
            }
        }
        StoppingRule::MaxL1Norm(target) => {
            let l1 = node.x.l1_norm();
            if l1 >= *target {
                match prev {
                    Some(p) if l1 != *target => {
                        // ||x||_1 is affine along a segment (signs are
                        // constant between nodes).
                        let p_l1 = p.x.l1_norm();
                        let theta = (target.clone() - p_l1.clone())
                            .try_div(&(l1 - p_l1))?;
                        Ok(Some(interpolate_nodes(problem, p, node, &theta, t0)))
                    }
                    _ => Ok(Some(node.clone())),
                }
            } else {
                Ok(None)
            }
        }
        StoppingRule::MinDiscrepancy(target) => {
            let disc = node.discrepancy();
            if disc <= *target {
                match prev {
                    Some(p) if disc != *target => {
                        let theta = discrepancy_crossing(p, node, target)?;
                        Ok(Some(interpolate_nodes(problem, p, node, &theta, t0)))
                    }
                    _ => Ok(Some(node.clone())),
                }
            } else {
                Ok(None)
            }
        }
        StoppingRule::MaxNonZero(n) => {
            if node.counted_support_size(problem) >= *n {
                Ok(Some(node.clone()))
            } else {
                Ok(None)
            }
        }
        StoppingRule::Predicate(f) => {
            if f(node) {
                Ok(Some(node.clone()))
            } else {
                Ok(None)
            }
        }
    }
}

/// Solve `a theta^2 + b theta + c = target` for the crossing of the
/// (quadratic) segment discrepancy, taking the root in [0, 1] nearest
/// the newer node.
fn discrepancy_crossing<S: Scalar>(
    prev: &PathNode<S>,
    node: &PathNode<S>,
    target: &S,
) -> Result<S> {
    let dm = node.misfit.sub(&prev.misfit);
    let a = dm.norm_sq();
    let two = S::from_int(2);
    let b = two.clone() * prev.misfit.dot(&dm);
    let c = prev.discrepancy() - target.clone();
    if a.is_zero() {
        return c.clone().try_div(&b).map(|t| -t);
    }
    let disc = b.clone() * b.clone() - S::from_int(4) * a.clone() * c;
    let sq = disc.sqrt()?;
    let twoa = two * a;
    let r1 = ((-b.clone()) + sq.clone()).try_div(&twoa)?;
    let r2 = ((-b) - sq).try_div(&twoa)?;
    let zero = S::zero();
    let one: S = num_traits::One::one();
    let mut best: Option<S> = None;
    for r in [r1, r2] {
        if r >= zero && r <= one {
            match &best {
                Some(b) if *b >= r => {}
                _ => best = Some(r),
            }
        }
    }
    best.ok_or_else(|| {
        Error::InfeasibleStop("no discrepancy crossing inside the overshooting segment".into())
    })
}

/// Core walker; `on_node` is called with every path node as it is
/// produced (node 0 included).
pub fn find_minimizer_cb<S: Scalar>(
    problem: &Problem<S>,
    stop: &StoppingRule<S>,
    opts: &SolveOptions<S>,
    on_node: &mut dyn FnMut(&PathNode<S>),
) -> Result<SolveResult<S>> {
    validate_stop(stop)?;
    let t0 = Instant::now();
    let mut warnings = Vec::new();
    if !S::EXACT {
        if let StoppingRule::Penalty(l) = stop {
            if l.is_zero() {
                warnings.push(
                    "stopping at penalty 0 is unreliable on the float backend; \
                     prefer a positive stopping penalty"
                        .to_string(),
                );
            }
        }
    }

    let mut node = initial_node(problem, &opts.tol)?;
    emit(&node, opts);
    on_node(&node);
    if let Some(f) = check_stop(problem, stop, None, &node, t0)? {
        return Ok(SolveResult {
            final_node: f,
            warnings,
        });
    }

    loop {
        if node.lambda.is_zero() || (!S::EXACT && node.lambda <= opts.tol.zero_abs) {
            return finish_at_terminal(stop, node, warnings, &opts.tol);
        }

        let candidates: Vec<usize> = (0..problem.dim())
            .filter(|&j| {
                problem.is_penalized(j)
                    && node.x[j].is_zero()
                    && approx_equal(
                        &(node.remainder[j].abs() / problem.weights()[j].clone()),
                        &node.lambda,
                        &opts.tol,
                    )
            })
            .collect();

        let active = resolve_tie_entry(problem, &node, &candidates, &opts.tol)?;
        let v = compute_direction(problem, &active, &opts.tol)?;
        let step = compute_step(problem, &node, &v, &opts.tol);
        if opts.verbose >= 1 {
            eprintln!(
                "node {}: lambda {}, event {:?}, step {}",
                node.counter, node.lambda, step.event, step.step
            );
        }

        let mut x_new = node.x.add_scaled(&step.step, &v);
        if let StepEvent::Removal(ref idxs) = step.event {
            for &i in idxs {
                x_new[i] = S::zero();
            }
        }
        let lambda_new = match step.event {
            StepEvent::Terminal => S::zero(),
            _ => node.lambda.clone() - step.step.clone(),
        };
        let prev = node;
        node = make_node(problem, prev.counter + 1, x_new, Some(lambda_new), t0);
        emit(&node, opts);
        on_node(&node);
        if let Some(f) = check_stop(problem, stop, Some(&prev), &node, t0)? {
            return Ok(SolveResult {
                final_node: f,
                warnings,
            });
        }
    }
}

fn emit<S: Scalar>(node: &PathNode<S>, opts: &SolveOptions<S>) {
    if opts.verbose >= 2 {
        eprintln!(
            "  x = {:?}\n  remainder = {:?}\n  support = {:?}",
            node.x, node.remainder, node.support
        );
    }
}

fn validate_stop<S: Scalar>(stop: &StoppingRule<S>) -> Result<()> {
    match stop {
        StoppingRule::Penalty(v) if v.is_negative() => Err(Error::InvalidStoppingRule(
            "stopping penalty must be nonnegative".into(),
        )),
        StoppingRule::MaxL1Norm(v) if v.is_negative() => Err(Error::InvalidStoppingRule(
            "stopping l1 norm must be nonnegative".into(),
        )),
        StoppingRule::MinDiscrepancy(v) if v.is_negative() => Err(Error::InvalidStoppingRule(
            "stopping discrepancy must be nonnegative".into(),
        )),
        StoppingRule::MaxNonZero(0) => Err(Error::InvalidStoppingRule(
            "nonzero count must be at least 1".into(),
        )),
        _ => Ok(()),
    }
}

fn finish_at_terminal<S: Scalar>(
    stop: &StoppingRule<S>,
    node: PathNode<S>,
    warnings: Vec<String>,
    tol: &Tolerance<S>,
) -> Result<SolveResult<S>> {
    if let StoppingRule::MinDiscrepancy(d) = stop {
        let disc = node.discrepancy();
        if disc > *d && !approx_equal(&disc, d, tol) {
            return Err(Error::InfeasibleStop(format!(
                "minimal achievable discrepancy {} exceeds the target {}",
                disc, d
            )));
        }
    }
    Ok(SolveResult {
        final_node: node,
        warnings,
    })
}

/// Walk the path until the stopping rule fires; returns the final
/// (possibly interpolated) minimizer.
pub fn find_minimizer<S: Scalar>(
    problem: &Problem<S>,
    stop: &StoppingRule<S>,
    opts: &SolveOptions<S>,
) -> Result<SolveResult<S>> {
    find_minimizer_cb(problem, stop, opts, &mut |_| {})
}

/// Like [`find_minimizer`] but also collects every path node walked.
pub fn find_minimizer_collect<S: Scalar>(
    problem: &Problem<S>,
    stop: &StoppingRule<S>,
    opts: &SolveOptions<S>,
) -> Result<(Vec<PathNode<S>>, SolveResult<S>)> {
    let mut nodes = Vec::new();
    let result = find_minimizer_cb(problem, stop, opts, &mut |n| nodes.push(n.clone()))?;
    Ok((nodes, result))
}
