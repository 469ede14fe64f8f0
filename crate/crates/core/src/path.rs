//! Path post-processing: piecewise-linear interpolation of the minimizer
//! between nodes, exact certification of a node list, and trade-off curve
//! extraction.


use crate::error::{Error, Result};
use crate::homotopy::{verify_kkt, PathNode, Problem};
use crate::linalg::Vector;
use crate::scalar::{Scalar, Tolerance};

/// An ordered list of path nodes with strictly decreasing penalty values.
#[derive(Clone, Debug)]
pub struct Path<S> {
    nodes: Vec<PathNode<S>>,
}

impl<S: Scalar> Path<S> {
    pub fn new(nodes: Vec<PathNode<S>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::DimensionMismatch("empty path".into()));
        }
        let dim = nodes[0].x.len();
        for pair in nodes.windows(2) {
            if pair[1].x.len() != dim {
                return Err(Error::DimensionMismatch(
                    "path nodes have differing dimensions".into(),
                ));
            }
            if pair[1].lambda >= pair[0].lambda {
                return Err(Error::LambdaOutOfRange(format!(
                    "penalty values must strictly decrease, got {} then {}",
                    pair[0].lambda, pair[1].lambda
                )));
            }
        }
        Ok(Path { nodes })
    }

    pub fn nodes(&self) -> &[PathNode<S>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lambda_max(&self) -> &S {
        &self.nodes[0].lambda
    }

    pub fn lambda_min(&self) -> &S {
        &self.nodes[self.nodes.len() - 1].lambda
    }
}

/// Evaluate the piecewise-linear minimizer path at `lambda`. No
/// extrapolation: `lambda` must lie between the smallest and the largest
/// node penalty.
pub fn interpolate<S: Scalar>(path: &Path<S>, lambda: &S) -> Result<Vector<S>> {
    if lambda > path.lambda_max() || lambda < path.lambda_min() {
        return Err(Error::LambdaOutOfRange(format!(
            "{} outside [{}, {}]",
            lambda,
            path.lambda_min(),
            path.lambda_max()
        )));
    }
    let nodes = path.nodes();
    for pair in nodes.windows(2) {
        let (hi, lo) = (&pair[0], &pair[1]);
        if *lambda <= hi.lambda && *lambda >= lo.lambda {
            if *lambda == hi.lambda {
                return Ok(hi.x.clone());
            }
            if *lambda == lo.lambda {
                return Ok(lo.x.clone());
            }
            let theta = (hi.lambda.clone() - lambda.clone())
                .try_div(&(hi.lambda.clone() - lo.lambda.clone()))?;
            let dx = lo.x.sub(&hi.x);
            return Ok(hi.x.add_scaled(&theta, &dx));
        }
    }
    // Single-node path: lambda equals the only node's penalty.
    Ok(nodes[0].x.clone())
}

/// Outcome of certifying a node list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certification {
    Valid,
    Invalid { detail: String },
    Indeterminate { reason: String },
}

/// Certify that a node list is the exact minimizer path of `problem`.
///
/// Only exact-backend paths can be certified; float paths, dimension
/// mismatches between nodes, and non-descending penalties yield
/// `Indeterminate`. Between each consecutive pair all certified
/// quantities are affine in the interpolation parameter, so checking the
/// variational conditions at both endpoints and one interior point,
/// together with sign constancy of every component over the segment,
/// certifies the whole segment.
pub fn check_minimizer_list<S: Scalar>(
    problem: &Problem<S>,
    nodes: &[PathNode<S>],
) -> Result<Certification> {
    if !S::EXACT {
        return Ok(Certification::Indeterminate {
            reason: "only exact-backend paths can be certified".into(),
        });
    }
    if nodes.is_empty() {
        return Ok(Certification::Indeterminate {
            reason: "empty node list".into(),
        });
    }
    let n = problem.dim();
    for node in nodes {
        if node.x.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "node of dimension {} against a problem of dimension {}",
                node.x.len(),
                n
            )));
        }
    }
    for pair in nodes.windows(2) {
        if pair[1].lambda >= pair[0].lambda {
            return Ok(Certification::Indeterminate {
                reason: "penalty values are not strictly descending".into(),
            });
        }
    }

    let tol = Tolerance::exact();
    for (idx, node) in nodes.iter().enumerate() {
        if !verify_kkt(problem, &node.x, &node.lambda, &tol)? {
            return Ok(Certification::Invalid {
                detail: format!("node {idx} violates the variational conditions"),
            });
        }
    }
    let half = S::ratio(1, 2);
    for (idx, pair) in nodes.windows(2).enumerate() {
        let (hi, lo) = (&pair[0], &pair[1]);
        // Sign constancy: no penalized component may cross zero strictly
        // inside the segment, otherwise the interpolant leaves the
        // piecewise-linear path structure. Zero-weight components carry
        // no sign condition and may cross freely.
        for i in 0..n {
            if !problem.is_penalized(i) {
                continue;
            }
            let a = &hi.x[i];
            let b = &lo.x[i];
            if a.is_positive() && b.is_negative() || a.is_negative() && b.is_positive() {
                return Ok(Certification::Invalid {
                    detail: format!(
                        "component {} changes sign inside segment {}..{}",
                        i,
                        idx,
                        idx + 1
                    ),
                });
            }
        }
        let dx = lo.x.sub(&hi.x);
        let mid_x = hi.x.add_scaled(&half, &dx);
        let mid_lambda = (hi.lambda.clone() + lo.lambda.clone()) * half.clone();
        if !verify_kkt(problem, &mid_x, &mid_lambda, &tol)? {
            return Ok(Certification::Invalid {
                detail: format!(
                    "interior of segment {}..{} violates the variational conditions",
                    idx,
                    idx + 1
                ),
            });
        }
        // For components nonzero anywhere on the segment, the remainder
        // must sit exactly on the weighted penalty at both endpoints so
        // the equality holds identically in the interpolation parameter.
        let r_hi = crate::ops::remainder(problem, &hi.x)?;
        let r_lo = crate::ops::remainder(problem, &lo.x)?;
        for i in 0..n {
            if hi.x[i].is_zero() && lo.x[i].is_zero() {
                continue;
            }
            if !problem.is_penalized(i) {
                continue;
            }
            let s = if hi.x[i].is_positive() || lo.x[i].is_positive() {
                S::one()
            } else {
                -S::one()
            };
            let w = problem.weights()[i].clone();
            if r_hi[i] != w.clone() * hi.lambda.clone() * s.clone()
                || r_lo[i] != w * lo.lambda.clone() * s
            {
                return Ok(Certification::Invalid {
                    detail: format!(
                        "component {} off the penalty level set on segment {}..{}",
                        i,
                        idx,
                        idx + 1
                    ),
                });
            }
        }
    }
    Ok(Certification::Valid)
}

/// Per node, the pair `(||x||_1, ||Kx - y||^2)` in node order.
pub fn trade_off_curve<S: Scalar>(path: &Path<S>) -> Vec<(S, S)> {
    path.nodes()
        .iter()
        .map(|n| (n.x.l1_norm(), n.discrepancy()))
        .collect()
}
