//! Elementwise and vector operators: soft thresholding, projection onto an
//! l1 ball, weighted norms, and the remainder `K^T(y - Kx)`.


use crate::error::{Error, Result};
use crate::homotopy::Problem;
use crate::linalg::Vector;
use crate::scalar::Scalar;

/// Soft thresholding of a single value: `x - t` for `x > t`, `0` for
/// `|x| <= t`, `x + t` for `x < -t`. The threshold must be nonnegative.
pub fn soft_threshold_scalar<S: Scalar>(x: &S, threshold: &S) -> Result<S> {
    if threshold.is_negative() {
        return Err(Error::NegativeThreshold);
    }
    if x > threshold {
        Ok(x.clone() - threshold.clone())
    } else if x.abs() <= *threshold {
        Ok(S::zero())
    } else {
        Ok(x.clone() + threshold.clone())
    }
}

/// Componentwise soft thresholding with one shared threshold.
pub fn soft_threshold<S: Scalar>(x: &Vector<S>, threshold: &S) -> Result<Vector<S>> {
    let mut out = Vec::with_capacity(x.len());
    for v in x.iter() {
        out.push(soft_threshold_scalar(v, threshold)?);
    }
    Ok(Vector::new(out))
}

/// Componentwise soft thresholding with a per-component threshold vector.
pub fn soft_threshold_vec<S: Scalar>(x: &Vector<S>, thresholds: &Vector<S>) -> Result<Vector<S>> {
    if x.len() != thresholds.len() {
        return Err(Error::DimensionMismatch(format!(
            "soft_threshold: value length {} vs threshold length {}",
            x.len(),
            thresholds.len()
        )));
    }
    let mut out = Vec::with_capacity(x.len());
    for (v, t) in x.iter().zip(thresholds.iter()) {
        out.push(soft_threshold_scalar(v, t)?);
    }
    Ok(Vector::new(out))
}

/// Euclidean projection of `x` onto the l1 ball of radius `radius`.
///
/// Realized as `S_tau(x)` with `tau >= 0` chosen so that the result has
/// l1 norm exactly `radius` whenever `||x||_1 > radius`; `x` itself is
/// returned when it is already inside the ball. `tau` is found by sorting
/// the component magnitudes and scanning the piecewise-linear segments of
/// `tau -> ||S_tau(x)||_1`, so the result is exact on the rational backend.
pub fn project_l1_ball<S: Scalar>(x: &Vector<S>, radius: &S) -> Result<Vector<S>> {
    if radius.is_negative() {
        return Err(Error::NegativeRadius);
    }
    let l1 = x.l1_norm();
    if l1 <= *radius {
        return Ok(x.clone());
    }
    // Magnitudes sorted in decreasing order.
    let mut mags: Vec<S> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("no NaN magnitudes"));

    // With the top k magnitudes active, ||S_tau(x)||_1 = prefix_k - k*tau
    // for tau in [mags[k], mags[k-1]). Pick the segment containing radius.
    let n = mags.len();
    let mut prefix = S::zero();
    let mut tau = S::zero();
    for k in 0..n {
        prefix = prefix + mags[k].clone();
        let count = S::from_int((k + 1) as i64);
        let candidate = (prefix.clone() - radius.clone()).try_div(&count)?;
        let lower = if k + 1 < n { mags[k + 1].clone() } else { S::zero() };
        if candidate >= lower && candidate <= mags[k] {
            tau = candidate;
            break;
        }
    }
    soft_threshold(x, &tau)
}

/// `sum_i w_i |x_i|` with nonnegative weights.
pub fn weighted_l1_norm<S: Scalar>(x: &Vector<S>, w: &Vector<S>) -> Result<S> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "weighted_l1_norm: lengths {} vs {}",
            x.len(),
            w.len()
        )));
    }
    let mut acc = S::zero();
    for (i, (v, wi)) in x.iter().zip(w.iter()).enumerate() {
        if wi.is_negative() {
            return Err(Error::NegativeWeight(i));
        }
        acc = acc + wi.clone() * v.abs();
    }
    Ok(acc)
}

/// The remainder `K^T(y - Kx)`.
pub fn remainder<S: Scalar>(problem: &Problem<S>, x: &Vector<S>) -> Result<Vector<S>> {
    if x.len() != problem.matrix().ncols() {
        return Err(Error::DimensionMismatch(format!(
            "remainder: x has length {}, matrix has {} columns",
            x.len(),
            problem.matrix().ncols()
        )));
    }
    let misfit = problem.data().sub(&problem.matrix().matvec(x));
    Ok(problem.matrix().tr_matvec(&misfit))
}
