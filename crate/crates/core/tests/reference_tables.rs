//! End-to-end reproduction of the four published node tables on the
//! exact backend, plus certification and rejection of the known-wrong
//! third-party node lists.

use l1path::homotopy::{
    find_minimizer_collect, verify_kkt, Problem, SolveOptions, StoppingRule,
};
use l1path::linalg::{Matrix, Vector};
use l1path::path::{check_minimizer_list, Certification};
use l1path::scalar::{Scalar, Tolerance};
use l1path::Rational;
use num_traits::Zero;

type Q = Rational;

fn q(n: i64, d: i64) -> Q {
    Q::ratio(n, d)
}

fn qv(values: &[i64]) -> Vector<Q> {
    Vector::from_ints(values)
}

fn walk(problem: &Problem<Q>) -> Vec<l1path::homotopy::PathNode<Q>> {
    let (nodes, _) = find_minimizer_collect(
        problem,
        &StoppingRule::Penalty(Q::zero()),
        &SolveOptions::default(),
    )
    .unwrap();
    nodes
}

#[test]
fn identity_example_six_nodes() {
    let p = Problem::new(Matrix::identity(5), qv(&[12, -8, 5, 1, 2]), None).unwrap();
    let nodes = walk(&p);
    let expected: [(&[i64], i64); 6] = [
        (&[0, 0, 0, 0, 0], 12),
        (&[4, 0, 0, 0, 0], 8),
        (&[7, -3, 0, 0, 0], 5),
        (&[10, -6, 3, 0, 0], 2),
        (&[11, -7, 4, 0, 1], 1),
        (&[12, -8, 5, 1, 2], 0),
    ];
    assert_eq!(nodes.len(), expected.len());
    for (node, (x, lam)) in nodes.iter().zip(expected.iter()) {
        assert_eq!(node.x, qv(x));
        assert_eq!(node.lambda, Q::from_int(*lam));
    }
    assert_eq!(check_minimizer_list(&p, &nodes).unwrap(), Certification::Valid);
}

#[test]
fn tie_example_six_nodes() {
    let k = Matrix::from_int_rows(&[&[-3, 4, 4], &[-5, 1, 4], &[5, 1, -4]]);
    let p: Problem<Q> = Problem::new(k, qv(&[24, 17, -7]), None).unwrap();
    let nodes = walk(&p);
    assert_eq!(nodes.len(), 6);

    let expected_x: [Vec<Q>; 6] = [
        vec![Q::zero(), Q::zero(), Q::zero()],
        vec![Q::zero(), Q::zero(), q(43, 16)],
        vec![Q::zero(), q(43, 15), q(43, 15)],
        vec![q(-172, 73), q(301, 73), Q::zero()],
        vec![q(-2356, 991), q(4251, 991), Q::zero()],
        vec![Q::from_int(-4), Q::from_int(5), Q::from_int(-2)],
    ];
    let expected_lambda = [
        Q::from_int(192),
        Q::from_int(63),
        q(128, 15),
        q(256, 73),
        q(256, 991),
        Q::zero(),
    ];
    for (node, (x, lam)) in nodes.iter().zip(expected_x.iter().zip(expected_lambda.iter())) {
        assert_eq!(node.x, Vector::new(x.clone()));
        assert_eq!(node.lambda, *lam);
    }
    // The tie at the top is broken in favor of the third component only.
    assert_eq!(nodes[1].support, vec![2]);
    assert_eq!(check_minimizer_list(&p, &nodes).unwrap(), Certification::Valid);
}

#[test]
fn removal_example_support_sequence() {
    let k = Matrix::from_int_rows(&[&[-4, 3, -1], &[-4, 4, 3], &[-1, 1, -1]]);
    let p: Problem<Q> = Problem::new(k, qv(&[7, 21, 0]), None).unwrap();
    let nodes = walk(&p);
    assert_eq!(nodes.len(), 6);

    let expected_x: [Vec<Q>; 6] = [
        vec![Q::zero(), Q::zero(), Q::zero()],
        vec![q(-7, 4), Q::zero(), Q::zero()],
        vec![Q::zero(), q(7, 3), Q::zero()],
        vec![Q::zero(), q(49, 18), Q::zero()],
        vec![Q::zero(), q(28, 9), q(7, 3)],
        vec![Q::from_int(-1), Q::from_int(2), Q::from_int(3)],
    ];
    let expected_lambda = [
        Q::from_int(112),
        q(217, 4),
        q(133, 3),
        q(308, 9),
        q(49, 9),
        Q::zero(),
    ];
    let expected_support: [&[usize]; 6] = [&[], &[0], &[1], &[1], &[1, 2], &[0, 1, 2]];
    for (node, ((x, lam), supp)) in nodes.iter().zip(
        expected_x
            .iter()
            .zip(expected_lambda.iter())
            .zip(expected_support.iter()),
    ) {
        assert_eq!(node.x, Vector::new(x.clone()));
        assert_eq!(node.lambda, *lam);
        assert_eq!(node.support, supp.to_vec());
    }
    assert_eq!(check_minimizer_list(&p, &nodes).unwrap(), Certification::Valid);
}

#[test]
fn weighted_example_three_nodes() {
    let k = Matrix::from_int_rows(&[&[0, 2, 4], &[-1, 1, 3], &[-2, 1, -1]]);
    let p: Problem<Q> = Problem::new(k, qv(&[-4, -4, -11]), Some(qv(&[2, 1, 0]))).unwrap();
    let nodes = walk(&p);
    assert_eq!(nodes.len(), 3);

    assert_eq!(
        nodes[0].x,
        Vector::new(vec![Q::zero(), Q::zero(), q(-17, 26)])
    );
    assert_eq!(nodes[0].lambda, q(214, 13));
    assert_eq!(
        nodes[0].remainder,
        Vector::new(vec![q(659, 26), q(-214, 13), Q::zero()])
    );

    assert_eq!(
        nodes[1].x,
        Vector::new(vec![Q::zero(), q(-197, 44), q(47, 44)])
    );
    assert_eq!(nodes[1].lambda, q(75, 11));
    assert_eq!(
        nodes[1].remainder,
        Vector::new(vec![q(150, 11), q(-75, 11), Q::zero()])
    );

    assert_eq!(nodes[2].x, qv(&[3, -4, 1]));
    assert!(nodes[2].lambda.is_zero());

    assert_eq!(check_minimizer_list(&p, &nodes).unwrap(), Certification::Valid);
}

#[test]
fn weighted_variant_of_the_tie_inputs() {
    // The same weights on the tie example's inputs: the zero-weight
    // component starts at its unpenalized least-squares value and the
    // path reaches the exact solution of Kx = y in three nodes.
    let k = Matrix::from_int_rows(&[&[-3, 4, 4], &[-5, 1, 4], &[5, 1, -4]]);
    let p: Problem<Q> = Problem::new(k, qv(&[24, 17, -7]), Some(qv(&[2, 1, 0]))).unwrap();
    let nodes = walk(&p);
    assert_eq!(nodes.len(), 3);

    assert_eq!(nodes[0].x, qv(&[0, 0, 4]));
    assert_eq!(nodes[0].lambda, Q::from_int(42));
    assert_eq!(nodes[0].remainder, qv(&[16, 42, 0]));

    assert_eq!(
        nodes[1].x,
        Vector::new(vec![Q::zero(), q(75, 23), q(67, 23)])
    );
    assert_eq!(nodes[1].lambda, q(16, 23));

    assert_eq!(nodes[2].x, qv(&[-4, 5, -2]));
    assert!(nodes[2].lambda.is_zero());

    assert_eq!(check_minimizer_list(&p, &nodes).unwrap(), Certification::Valid);
}

#[test]
fn wrong_published_node_lists_are_rejected() {
    let k = Matrix::from_int_rows(&[&[-3, 4, 4], &[-5, 1, 4], &[5, 1, -4]]);
    let p: Problem<Q> = Problem::new(k, qv(&[24, 17, -7]), None).unwrap();
    let tol = Tolerance::exact();

    // Node 1 of the widely circulated lars/lasso output, as an exact
    // rational: the largest remainder component does not correspond to
    // the nonzero component.
    let x_bad = Vector::new(vec![q(-9149, 5000), Q::zero(), Q::zero()]);
    let r = l1path::ops::remainder(&p, &x_bad).unwrap();
    let lambda = l1path::homotopy::lambda_of(&p, &r);
    assert!(!verify_kkt(&p, &x_bad, &lambda, &tol).unwrap());

    // The first breakpoint reported by another solver: remainder
    // (-20, 20, 20), so the sign of the first component disagrees.
    let x_sl = Vector::new(vec![q(43, 8), Q::zero(), q(301, 32)]);
    let r_sl = l1path::ops::remainder(&p, &x_sl).unwrap();
    assert_eq!(r_sl, qv(&[-20, 20, 20]));
    assert!(!verify_kkt(&p, &x_sl, &Q::from_int(20), &tol).unwrap());
}
