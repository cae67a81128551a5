#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{One, Zero};
use oddindex_core::CMat;

/// Exact rank by Gaussian elimination over ℚ. Entries must be real and
/// exactly representable (the diagram generator only produces integers).
pub fn exact_rank(m: &CMat) -> usize {
    let mut a: Vec<Vec<BigRational>> = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)];
                    assert_eq!(z.im, 0.0, "oracle needs real entries");
                    BigRational::from_float(z.re).expect("finite entry")
                })
                .collect()
        })
        .collect();
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let inv = BigRational::one() / a[rank][c].clone();
        for r in 0..rows {
            if r != rank && !a[r][c].is_zero() {
                let f = a[r][c].clone() * &inv;
                for k in c..cols {
                    let v = a[rank][k].clone() * &f;
                    a[r][k] -= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn exact_index(m: &CMat) -> i64 {
    let r = exact_rank(m) as i64;
    let (dom, cod) = (m.ncols() as i64, m.nrows() as i64);
    (dom - r) - (cod - r)
}

pub fn exact_ker_coker(m: &CMat) -> (usize, usize) {
    let r = exact_rank(m);
    (m.ncols() - r, m.nrows() - r)
}

pub fn int_matrix(rows: usize, cols: usize, entries: &[i64]) -> CMat {
    CMat::from_fn(rows, cols, |i, j| num_complex::Complex64::new(entries[i * cols + j] as f64, 0.0))
}


use oddindex_core::geometries::{abstract_even_model, sphere_monopole_model, torus_flat_model, EvenModel};

/// Index of `D_Y` read off from the chirality of the zero modes of `D_Y²`.
pub fn kernel_chirality_index(y: &EvenModel) -> i64 {
    let d = y.dirac();
    let (values, vectors) = oddindex_core::linop::eigh(&(&d * &d));
    let g = y.grading();
    let mut total = 0.0;
    for (j, &lam) in values.iter().enumerate() {
        if lam.abs() < 1e-9 {
            let v = vectors.column(j);
            total += (v.adjoint() * &g * v)[(0, 0)].re;
        }
    }
    let rounded = total.round();
    assert!((total - rounded).abs() < 1e-9, "zero modes are not chiral");
    rounded as i64
}

/// Even factors used throughout: abstract models with `d ∈ −3..=3` and
/// seeds 0–4, the flat torus, and monopoles with `q ∈ −2..=2`.
pub fn fiber_fixtures() -> Vec<EvenModel> {
    let mut out = Vec::new();
    for seed in 0..5 {
        for d in -3..=3 {
            out.push(abstract_even_model(2, 2, d, seed).unwrap());
        }
    }
    out.push(torus_flat_model(1).unwrap());
    for q in -2i64..=2 {
        out.push(sphere_monopole_model(q, (q.abs() + 1) as usize).unwrap());
    }
    out
}
