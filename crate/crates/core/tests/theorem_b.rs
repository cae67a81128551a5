mod common;

use common::{fiber_fixtures, kernel_chirality_index};
use oddindex_core::boundary::*;
use oddindex_core::geometries::*;
use oddindex_core::{Sign, DEFAULT_TOL_RANK as TOL};
use Sign::{Minus as M, Plus as P};

const PATTERNS: [(Sign, Sign); 4] = [(P, M), (M, P), (P, P), (M, M)];

fn expected(d: i64, pattern: (Sign, Sign)) -> i64 {
    match pattern {
        (P, M) => d,
        (M, P) => -d,
        _ => 0,
    }
}

#[test]
fn four_patterns_with_fd_witness() {
    for d in -3..=3 {
        let y = abstract_even_model(2, 2, d, 0).unwrap();
        for pat in PATTERNS {
            let prob = BoundaryProblem::single(y.clone(), pat.0, pat.1);
            let r = verify_theorem_b_with_fd(&prob, DEFAULT_GRID, TOL).unwrap();
            assert_eq!(r.lhs.index, expected(d, pat), "d {d} {pat:?}");
            assert!(r.matches);
            assert_eq!(r.fd_agrees, Some(true));
            assert_eq!(r.fd.unwrap().index, r.lhs.index);
        }
    }
}

#[test]
fn two_cylinders_all_sixteen_patterns() {
    let y1 = abstract_even_model(2, 2, 1, 0).unwrap();
    let y2 = abstract_even_model(2, 2, 2, 1).unwrap();
    for mask in 0..16u32 {
        let e = |bit: u32| if mask & (1 << bit) != 0 { M } else { P };
        let prob = BoundaryProblem::new(
            vec![y1.clone(), y2.clone()],
            &[0.5, 0.5],
            &[(e(0), e(1)), (e(2), e(3))],
        )
        .unwrap();
        let r = verify_theorem_b_with_fd(&prob, DEFAULT_GRID, TOL).unwrap();
        let oracle = expected(1, (e(0), e(1))) + expected(2, (e(2), e(3)));
        assert_eq!(r.lhs.index, oracle, "mask {mask}");
        assert!(r.matches, "mask {mask}");
        assert_eq!(r.fd_agrees, Some(true));
        assert!(cobordism_check(&prob).unwrap());
    }
}

#[test]
fn adjoint_duality_and_vanishing() {
    for y in fiber_fixtures() {
        let idx = kernel_chirality_index(&y);
        for pat in PATTERNS {
            let prob = BoundaryProblem::single(y.clone(), pat.0, pat.1);
            let a = boundary_index_shooting(&prob, TOL).unwrap();
            let b = boundary_index_shooting(&prob.flipped(), TOL).unwrap();
            assert_eq!(a.index, -b.index);
            assert_eq!((a.dim_ker, a.dim_coker), (b.dim_coker, b.dim_ker));
            assert_eq!(a.index, expected(idx, pat), "{} {pat:?}", y.label);
            let (minus, plus) = theorem_b_rhs(&prob).unwrap();
            assert_eq!(minus, plus);
            assert!(cobordism_check(&prob).unwrap());
        }
    }
}

#[test]
fn torus_always_zero() {
    let y = torus_flat_model(1).unwrap();
    for pat in PATTERNS {
        let r = verify_theorem_b(&BoundaryProblem::single(y.clone(), pat.0, pat.1), TOL).unwrap();
        assert_eq!(r.lhs.index, 0);
        assert!(r.matches);
    }
}

#[test]
fn point_interval_dense() {
    // iψ′ = φ on [0, ½]: Dirichlet at both ends leaves one obstruction,
    // no condition leaves the constants
    let pt = EvenModel::point();
    let both = BoundaryProblem::single(pt.clone(), M, P);
    let r = boundary_index_fd_dense(&both, 200, TOL).unwrap();
    assert_eq!((r.dim_ker, r.dim_coker, r.index), (0, 1, -1));
    let none = BoundaryProblem::single(pt, P, M);
    let r = boundary_index_fd_dense(&none, 200, TOL).unwrap();
    assert_eq!((r.dim_ker, r.dim_coker, r.index), (1, 0, 1));
}

#[test]
fn sweep_agrees_with_dense_fd() {
    for y in [
        abstract_even_model(2, 2, -2, 3).unwrap(),
        sphere_monopole_model(1, 2).unwrap(),
        torus_flat_model(1).unwrap(),
    ] {
        for pat in PATTERNS {
            let prob = BoundaryProblem::single(y.clone(), pat.0, pat.1);
            let s = boundary_index_fd(&prob, 50, TOL).unwrap();
            let d = boundary_index_fd_dense(&prob, 50, TOL).unwrap();
            assert_eq!((s.dim_ker, s.dim_coker), (d.dim_ker, d.dim_coker), "{} {pat:?}", y.label);
        }
    }
}

#[test]
fn longer_cylinders_do_not_overflow() {
    let y = torus_flat_model(2).unwrap();
    let prob = BoundaryProblem::new(vec![y], &[40.0], &[(P, M)]).unwrap();
    assert_eq!(boundary_index_shooting(&prob, TOL).unwrap().index, 0);
}

#[test]
fn hw_equivalence_fixtures() {
    for y in fiber_fixtures() {
        let idx = kernel_chirality_index(&y);
        let r = hw_equivalence_check(&y, 8, TOL).unwrap();
        assert!(r.equal, "{}", y.label);
        assert_eq!((r.index_twisted, r.index_boundary), (idx, idx));
    }
    let r = hw_equivalence_check(&sphere_monopole_model(-1, 2).unwrap(), 8, TOL).unwrap();
    assert_eq!((r.index_twisted, r.index_boundary), (-1, -1));
}
