use num_complex::Complex64;
use oddindex_core::geometries::*;
use oddindex_core::linop::{eigh, numerical_index, singular_values};
use oddindex_core::{CMat, DEFAULT_TOL_RANK as TOL};

fn taylor_exp(h: &CMat, x: f64) -> CMat {
    // scaling and squaring around a plain Taylor series
    let n = h.nrows();
    let norm = h.norm() * x.abs();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = h * Complex64::new(x / 2f64.powi(s), 0.0);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..30 {
        term = &term * &a / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn abstract_index_over_seeds() {
    for seed in 0..50 {
        for d in -3..=3 {
            let y = abstract_even_model(2, 2, d, seed).unwrap();
            let r = numerical_index(&y.chiral, TOL).unwrap();
            assert_eq!(r.index_from_kernels(), d, "seed {seed} d {d}");
            assert_eq!(r.rank(), y.dim_plus.min(y.dim_minus));
        }
    }
}

#[test]
fn abstract_is_deterministic() {
    assert_eq!(abstract_even_model(2, 2, 1, 9).unwrap(), abstract_even_model(2, 2, 1, 9).unwrap());
    assert_ne!(abstract_even_model(2, 2, 1, 9).unwrap(), abstract_even_model(2, 2, 1, 10).unwrap());
}

#[test]
fn transfer_against_taylor_series() {
    for y in [
        abstract_even_model(2, 2, 1, 0).unwrap(),
        sphere_monopole_model(1, 2).unwrap(),
        torus_flat_model(1).unwrap(),
    ] {
        let h = transfer_generator(&y);
        for x in [0.5, -0.25, 0.1] {
            let t = interval_transfer(&y, x).unwrap();
            let e = taylor_exp(&h, x);
            assert!((&t - &e).norm() < 1e-8 * e.norm(), "{}", y.label);
        }
    }
}

#[test]
fn transfer_generator_squares_to_laplacian() {
    let y = abstract_even_model(2, 2, -2, 3).unwrap();
    let h = transfer_generator(&y);
    let d = y.dirac();
    assert!((&h * &h - &d * &d).norm() < 1e-12);
    assert!((&h - h.adjoint()).norm() < 1e-14);
}

#[test]
fn transfer_solves_the_ode() {
    // ψ(x) = T(x)ψ₀ satisfies iΓψ′ + D_Yψ = 0; check by central differences
    let y = abstract_even_model(2, 2, 2, 5).unwrap();
    let psi0 = CMat::from_fn(y.dim(), 1, |i, _| Complex64::new(1.0 + i as f64, -0.5));
    let h = 1e-5;
    let x = 0.3;
    let deriv = (interval_transfer(&y, x + h).unwrap() - interval_transfer(&y, x - h).unwrap()) * &psi0
        / Complex64::new(2.0 * h, 0.0);
    let psi = interval_transfer(&y, x).unwrap() * &psi0;
    let residual = y.grading() * deriv * Complex64::new(0.0, 1.0) + y.dirac() * psi;
    assert!(residual.norm() < 1e-6);
}

/// Dense monopole oracle: kernel of `D_Y²` restricted to each chirality.
#[test]
fn monopole_zero_modes_dense() {
    for q in -3i64..=3 {
        let l = (q.abs() + 2) as usize;
        let y = sphere_monopole_model(q, l).unwrap();
        let d = y.dirac();
        let sq = &d * &d;
        let (values, vectors) = eigh(&sq);
        let g = y.grading();
        let mut plus = 0;
        let mut minus = 0;
        for (j, &lam) in values.iter().enumerate() {
            if lam.abs() < 1e-9 {
                let v = vectors.column(j);
                let chir = (v.adjoint() * &g * v)[(0, 0)].re;
                if chir > 0.5 {
                    plus += 1;
                } else {
                    minus += 1;
                }
            }
        }
        assert_eq!(plus as i64 - minus as i64, q);
        assert_eq!(plus + minus, q.unsigned_abs() as usize);
        // lowest nonzero level j = (|q| + 1)/2 has eigenvalue (j + ½)² − q²/4 of D_Y²
        let j = (q.abs() as f64 + 1.0) / 2.0;
        let gap = (j + 0.5).powi(2) - (q * q) as f64 / 4.0;
        let smallest = values.iter().copied().filter(|&v| v > 1e-9).fold(f64::INFINITY, f64::min);
        assert!((smallest - gap).abs() < 1e-9, "q = {q}");
    }
}

#[test]
fn torus_gap() {
    let y = torus_flat_model(2).unwrap();
    let mut sv = singular_values(&y.chiral);
    sv.sort_by(f64::total_cmp);
    assert!(sv[0] < 1e-12);
    assert!((sv[1] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn product_kernel_is_fiber_kernel() {
    for d in -3..=3 {
        let y = abstract_even_model(2, 2, d, 1).unwrap();
        let m = product_circle(&y, 4).unwrap();
        let r = numerical_index(&m.matrix, TOL).unwrap();
        assert_eq!(r.dim_ker, d.unsigned_abs() as usize);
    }
}

#[test]
fn union_offsets() {
    let a = circle_dirac(2).unwrap();
    let y = abstract_even_model(2, 2, 1, 0).unwrap();
    let b = product_circle(&y, 1).unwrap();
    let u = disjoint_union(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(u.dim(), a.dim() + b.dim());
    assert_eq!(u.components.len(), 2);
    assert_eq!(u.components[1].offset, 5);
    assert_eq!(u.basis[5].component, 1);
    assert_eq!(u.sectors.len(), a.sectors.len() + b.sectors.len());
    assert!(u.sector_leak(&u.matrix) == 0.0);
}
