//! Finite-dimensional operator core: rank, kernel and cokernel extraction,
//! heat traces, commutants of pointwise operators, and index additivity
//! over short exact rows.

use crate::{CMat, Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Kernel, cokernel and index of a finite matrix, with the singular-value
/// gap that justified the rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub dim_domain: usize,
    pub dim_codomain: usize,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub sigma_max: f64,
    /// Smallest singular value counted as nonzero; 0 when the rank is 0.
    pub sigma_min_nonzero: f64,
    pub threshold_used: f64,
}

impl IndexReport {
    pub fn rank(&self) -> usize {
        self.dim_domain - self.dim_ker
    }

    /// Report for a direct sum of operators.
    pub fn direct_sum<'a>(parts: impl IntoIterator<Item = &'a IndexReport>) -> IndexReport {
        let mut out = IndexReport {
            dim_domain: 0,
            dim_codomain: 0,
            dim_ker: 0,
            dim_coker: 0,
            index: 0,
            sigma_max: 0.0,
            sigma_min_nonzero: f64::INFINITY,
            threshold_used: 0.0,
        };
        for p in parts {
            out.dim_domain += p.dim_domain;
            out.dim_codomain += p.dim_codomain;
            out.dim_ker += p.dim_ker;
            out.dim_coker += p.dim_coker;
            out.index += p.index;
            out.sigma_max = out.sigma_max.max(p.sigma_max);
            if p.rank() > 0 {
                out.sigma_min_nonzero = out.sigma_min_nonzero.min(p.sigma_min_nonzero);
            }
            out.threshold_used = out.threshold_used.max(p.threshold_used);
        }
        if !out.sigma_min_nonzero.is_finite() {
            out.sigma_min_nonzero = 0.0;
        }
        out
    }
}

/// `tol · max(1, σ_max)`.
pub fn rank_threshold(sigma_max: f64, tol: f64) -> f64 {
    tol * sigma_max.max(1.0)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rank tolerance must lie in (0, 1), got {tol}")))
    }
}

fn check_finite(m: &CMat) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("matrix has non-finite entries".into()))
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m).singular_values().expect("SVD did not converge")
}

/// Count singular values above `threshold`, failing if any sits within a
/// factor 10 of it.
pub fn count_above(svals: &[f64], threshold: f64) -> Result<usize> {
    let ambiguous: Vec<f64> = svals
        .iter()
        .copied()
        .filter(|&s| s >= threshold / 10.0 && s <= threshold * 10.0)
        .collect();
    if !ambiguous.is_empty() {
        return Err(Error::GapAmbiguity {
            threshold,
            values: ambiguous,
        });
    }
    Ok(svals.iter().filter(|&&s| s > threshold).count())
}

/// Index of `m`, viewed as a map from `ℂ^{ncols}` to `ℂ^{nrows}`.
///
/// The rank counts singular values `σ > tol · max(1, σ_max)`; the kernel
/// and cokernel dimensions both come from that one rank.
pub fn numerical_index(m: &CMat, tol: f64) -> Result<IndexReport> {
    numerical_index_blocks(std::slice::from_ref(m), tol)
}

/// Index of a block-diagonal operator given by its blocks. One threshold,
/// relative to the largest singular value over all blocks, is applied to
/// every block.
pub fn numerical_index_blocks(blocks: &[CMat], tol: f64) -> Result<IndexReport> {
    check_tol(tol)?;
    let mut svals = Vec::new();
    let (mut domain, mut codomain) = (0, 0);
    for b in blocks {
        check_finite(b)?;
        domain += b.ncols();
        codomain += b.nrows();
        svals.extend(singular_values(b));
    }
    report_from_singular_values(&svals, domain, codomain, tol)
}

pub fn report_from_singular_values(
    svals: &[f64],
    domain: usize,
    codomain: usize,
    tol: f64,
) -> Result<IndexReport> {
    let sigma_max = svals.iter().copied().fold(0.0, f64::max);
    let threshold = rank_threshold(sigma_max, tol);
    let rank = count_above(svals, threshold)?;
    let sigma_min_nonzero = svals
        .iter()
        .copied()
        .filter(|&s| s > threshold)
        .fold(f64::INFINITY, f64::min);
    Ok(IndexReport {
        dim_domain: domain,
        dim_codomain: codomain,
        dim_ker: domain - rank,
        dim_coker: codomain - rank,
        index: domain as i64 - codomain as i64,
        sigma_max,
        sigma_min_nonzero: if rank > 0 { sigma_min_nonzero } else { 0.0 },
        threshold_used: threshold,
    })
}

/// Orthonormal bases of the kernel (columns in `ℂ^{ncols}`) and cokernel
/// (columns in `ℂ^{nrows}`) of a square matrix, singular values at or below
/// `threshold` counted as zero.
pub fn square_null_spaces(m: &CMat, threshold: f64) -> (CMat, CMat) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square_null_spaces needs a square matrix");
    if n == 0 {
        return (CMat::zeros(0, 0), CMat::zeros(0, 0));
    }
    let (u, svals, v) = svd_full(m);
    let zero: Vec<usize> = (0..n).filter(|&i| svals[i] <= threshold).collect();
    (v.select_columns(&zero), u.select_columns(&zero))
}

/// Orthonormal basis (as rows) of the row space of `m`, dropping directions
/// with singular value at or below `threshold`.
pub fn row_space(m: &CMat, threshold: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMat::zeros(0, m.ncols());
    }
    let (_, svals, v) = svd_full(m);
    let keep: Vec<usize> = (0..svals.len()).filter(|&i| svals[i] > threshold).collect();
    v.select_columns(&keep).adjoint()
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub(crate) fn check_self_adjoint(m: &CMat, rel: f64) -> Result<()> {
    let residual = hermitian_residual(m);
    if residual > rel * m.norm().max(1.0) {
        return Err(Error::Symmetry { residual });
    }
    Ok(())
}

fn to_faer(m: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full singular value decomposition `M = U Σ V*`: `U` is `m × m`, `V` is
/// `n × n`, singular values in descending order.
pub fn svd_full(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (CMat::identity(r, r), Vec::new(), CMat::identity(c, c));
    }
    let svd = to_faer(m).svd().expect("SVD did not converge");
    let s = svd.S();
    let values = (0..r.min(c)).map(|i| s[i].re).collect();
    (from_faer(svd.U()), values, from_faer(svd.V()))
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues in ascending
/// order and orthonormal eigenvectors as columns.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "eigh needs a square matrix");
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigen-decomposition did not converge");
    let s = eig.S();
    ((0..n).map(|i| s[i].re).collect(), from_faer(eig.U()))
}

/// `Tr(θ e^{−tD²}) = Σⱼ e^{−t λⱼ²} ⟨φⱼ, θ φⱼ⟩` over an orthonormal eigenbasis
/// of the self-adjoint `D`.
pub fn heat_trace(d: &CMat, theta: &CMat, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("heat time must be positive, got {t}")));
    }
    if d.shape() != theta.shape() || d.nrows() != d.ncols() {
        return Err(Error::Size(format!(
            "heat trace needs square D and θ of equal size, got {:?} and {:?}",
            d.shape(),
            theta.shape()
        )));
    }
    check_self_adjoint(d, 1e-10)?;
    if d.nrows() == 0 {
        return Ok(0.0);
    }
    let (values, phi) = eigh(d);
    let projected = phi.adjoint() * theta * &phi;
    let mut total = Complex64::new(0.0, 0.0);
    for (j, lambda) in values.iter().enumerate() {
        total += projected[(j, j)] * (-t * lambda * lambda).exp();
    }
    if total.im.abs() > 1e-8 {
        return Err(Error::Convention { imag: total.im });
    }
    Ok(total.re)
}

/// Which operators count as bundle maps: after the unitary change of basis
/// `to_pointwise`, coordinates are ordered `(point, fiber)` and a bundle map
/// is block-diagonal with one `fiber × fiber` block per point.
#[derive(Debug, Clone)]
pub struct PointwiseStructure {
    pub to_pointwise: CMat,
    pub points: usize,
    pub fiber: usize,
}

impl PointwiseStructure {
    /// Every operator on `ℂⁿ` is admitted.
    pub fn unrestricted(n: usize) -> PointwiseStructure {
        PointwiseStructure {
            to_pointwise: CMat::identity(n, n),
            points: 1,
            fiber: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.points * self.fiber
    }
}

/// Dimension of `{θ bundle map : Dθ = θD}`, the numerical nullity of
/// `θ ↦ [D, θ]` restricted to bundle maps.
pub fn commutant_dimension(d: &CMat, structure: &PointwiseStructure, tol: f64) -> Result<usize> {
    let n = structure.dim();
    if d.nrows() != n || d.ncols() != n || structure.to_pointwise.shape() != (n, n) {
        return Err(Error::Size(format!(
            "pointwise structure of dimension {n} does not match operator {:?}",
            d.shape()
        )));
    }
    let w = &structure.to_pointwise;
    let dp = w * d * w.adjoint();
    let f = structure.fiber;
    let mut map = CMat::zeros(n * n, structure.points * f * f);
    let mut col = 0;
    for p in 0..structure.points {
        for a in 0..f {
            for b in 0..f {
                // θ = e_{pa} e_{pb}ᵀ; [D, θ]_{ij} = D_{i,pa} δ_{j,pb} − δ_{i,pa} D_{pb,j}
                let (ia, ib) = (p * f + a, p * f + b);
                for i in 0..n {
                    map[(i + ib * n, col)] += dp[(i, ia)];
                }
                for j in 0..n {
                    map[(ia + j * n, col)] -= dp[(ib, j)];
                }
                col += 1;
            }
        }
    }
    Ok(numerical_index(&map, tol)?.dim_ker)
}

/// Two short exact rows `0 → V′ → V → V″ → 0`, `0 → W′ → W → W″ → 0` joined
/// by vertical maps `T′, T, T″`.
#[derive(Debug, Clone)]
pub struct ExactRowDiagram {
    pub t_sub: CMat,
    pub t: CMat,
    pub t_quot: CMat,
    /// `V′ → V`
    pub incl_v: CMat,
    /// `V → V″`
    pub proj_v: CMat,
    /// `W′ → W`
    pub incl_w: CMat,
    /// `W → W″`
    pub proj_w: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnakeReport {
    pub index_t: i64,
    pub index_t_sub: i64,
    pub index_t_quot: i64,
    pub holds: bool,
}

impl ExactRowDiagram {
    /// `(dim V′, dim V, dim V″, dim W′, dim W, dim W″)`.
    pub fn dims(&self) -> [usize; 6] {
        [
            self.incl_v.ncols(),
            self.incl_v.nrows(),
            self.proj_v.nrows(),
            self.incl_w.ncols(),
            self.incl_w.nrows(),
            self.proj_w.nrows(),
        ]
    }

    fn check_row(incl: &CMat, proj: &CMat, name: &str, tol: f64) -> Result<()> {
        let (sub, mid, quot) = (incl.ncols(), incl.nrows(), proj.nrows());
        if proj.ncols() != mid {
            return Err(Error::Diagram(format!("{name}-row: maps are not composable")));
        }
        if sub + quot != mid {
            return Err(Error::Diagram(format!(
                "{name}-row: dimensions {sub} + {quot} != {mid}, row cannot be exact"
            )));
        }
        let scale = incl.norm().max(1.0) * proj.norm().max(1.0);
        if (proj * incl).norm() > 1e-10 * scale {
            return Err(Error::Diagram(format!("{name}-row: composition is not zero")));
        }
        if numerical_index(incl, tol)?.dim_ker != 0 {
            return Err(Error::Diagram(format!("{name}-row: inclusion is not injective")));
        }
        if numerical_index(proj, tol)?.dim_coker != 0 {
            return Err(Error::Diagram(format!("{name}-row: projection is not surjective")));
        }
        Ok(())
    }

    /// Exactness of both rows and commutativity of both squares.
    pub fn validate(&self, tol: f64) -> Result<()> {
        Self::check_row(&self.incl_v, &self.proj_v, "V", tol)?;
        Self::check_row(&self.incl_w, &self.proj_w, "W", tol)?;
        let [vs, v, vq, ws, w, wq] = self.dims();
        let shapes = [
            (&self.t_sub, (ws, vs), "T′"),
            (&self.t, (w, v), "T"),
            (&self.t_quot, (wq, vq), "T″"),
        ];
        for (m, shape, name) in shapes {
            if m.shape() != shape {
                return Err(Error::Diagram(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    m.shape()
                )));
            }
        }
        let left = &self.t * &self.incl_v - &self.incl_w * &self.t_sub;
        let left_scale = (self.t.norm() * self.incl_v.norm()).max(self.incl_w.norm() * self.t_sub.norm()).max(1.0);
        if left.norm() > 1e-10 * left_scale {
            return Err(Error::Diagram("left square (V′ → W) does not commute".into()));
        }
        let right = &self.proj_w * &self.t - &self.t_quot * &self.proj_v;
        let right_scale = (self.proj_w.norm() * self.t.norm()).max(self.t_quot.norm() * self.proj_v.norm()).max(1.0);
        if right.norm() > 1e-10 * right_scale {
            return Err(Error::Diagram("right square (V → W″) does not commute".into()));
        }
        Ok(())
    }
}

/// Index additivity `index T = index T′ + index T″` over a diagram with
/// exact rows.
pub fn snake_additivity_check(diag: &ExactRowDiagram, tol: f64) -> Result<SnakeReport> {
    diag.validate(tol)?;
    let index_t = numerical_index(&diag.t, tol)?.index_from_kernels();
    let index_t_sub = numerical_index(&diag.t_sub, tol)?.index_from_kernels();
    let index_t_quot = numerical_index(&diag.t_quot, tol)?.index_from_kernels();
    Ok(SnakeReport {
        index_t,
        index_t_sub,
        index_t_quot,
        holds: index_t == index_t_sub + index_t_quot,
    })
}

impl IndexReport {
    /// `dim ker − dim coker`, recomputed from the two dimensions.
    pub fn index_from_kernels(&self) -> i64 {
        self.dim_ker as i64 - self.dim_coker as i64
    }
}

type IntMat = Vec<Vec<i64>>;

fn int_identity(n: usize) -> IntMat {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

/// A unimodular `P` and its exact inverse, from random transvections.
fn unimodular(n: usize, rng: &mut ChaCha8Rng) -> (IntMat, IntMat) {
    let mut p = int_identity(n);
    let mut inv = int_identity(n);
    if n < 2 {
        return (p, inv);
    }
    for _ in 0..n + 2 {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let c: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
        // P ← (1 + c e_j e_iᵀ) P,  P⁻¹ ← P⁻¹ (1 − c e_j e_iᵀ)
        for k in 0..n {
            p[j][k] += c * p[i][k];
        }
        for row in inv.iter_mut() {
            row[i] -= c * row[j];
        }
    }
    (p, inv)
}

fn random_int(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> IntMat {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-2..=2)).collect())
        .collect()
}

fn int_mul(a: &IntMat, b: &IntMat, inner: usize, cols: usize) -> IntMat {
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// A random `rows × cols` integer matrix of rank at most `rank`.
fn random_low_rank(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> IntMat {
    let max_rank = rows.min(cols);
    let rank = if max_rank == 0 { 0 } else { rng.gen_range(0..=max_rank) };
    let x = random_int(rows, rank, rng);
    let y = random_int(rank, cols, rng);
    int_mul(&x, &y, rank, cols)
}

fn to_cmat(m: &IntMat, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| Complex64::new(m[i][j] as f64, 0.0))
}

/// Random diagram with exact rows from `dims = (V′, V, V″, W′, W, W″)`.
///
/// `T` is block upper triangular with diagonal blocks `T′, T″` in split
/// bases, then conjugated by random unimodular changes of basis so the
/// rows stop being coordinate inclusions. All entries are integers.
pub fn random_exact_diagram(dims: [usize; 6], seed: u64) -> Result<ExactRowDiagram> {
    let [vs, v, vq, ws, w, wq] = dims;
    if vs + vq != v || ws + wq != w {
        return Err(Error::Size(format!(
            "inconsistent diagram dimensions {dims:?}: need V = V′ + V″ and W = W′ + W″"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_sub = random_low_rank(ws, vs, &mut rng);
    let t_quot = random_low_rank(wq, vq, &mut rng);
    let coupling = random_int(ws, vq, &mut rng);

    let mut split: IntMat = vec![vec![0; v]; w];
    for i in 0..ws {
        for j in 0..vs {
            split[i][j] = t_sub[i][j];
        }
        for j in 0..vq {
            split[i][vs + j] = coupling[i][j];
        }
    }
    for i in 0..wq {
        for j in 0..vq {
            split[ws + i][vs + j] = t_quot[i][j];
        }
    }

    let (p, p_inv) = unimodular(v, &mut rng);
    let (q, q_inv) = unimodular(w, &mut rng);
    let p_m = to_cmat(&p, v, v);
    let p_inv_m = to_cmat(&p_inv, v, v);
    let q_m = to_cmat(&q, w, w);
    let q_inv_m = to_cmat(&q_inv, w, w);

    Ok(ExactRowDiagram {
        t: &q_m * to_cmat(&split, w, v) * &p_inv_m,
        t_sub: to_cmat(&t_sub, ws, vs),
        t_quot: to_cmat(&t_quot, wq, vq),
        incl_v: p_m.columns(0, vs).into_owned(),
        proj_v: p_inv_m.rows(vs, vq).into_owned(),
        incl_w: q_m.columns(0, ws).into_owned(),
        proj_w: q_inv_m.rows(ws, wq).into_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL_RANK as TOL;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn eigh_residual(h: &CMat) -> f64 {
        let (values, v) = eigh(h);
        let n = h.nrows();
        let lam = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, values.iter().map(|&x| c(x))));
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        assert!((v.adjoint() * &v - CMat::identity(n, n)).norm() < 1e-12);
        (h * &v - &v * lam).norm()
    }

    #[test]
    fn eigh_complex_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 12] {
            let g = CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let h = &g + g.adjoint();
            assert!(eigh_residual(&h) < 1e-12);
        }
    }

    #[test]
    fn eigh_degenerate_involutions() {
        // swaps with signs, stored as complex: highly degenerate ±1 spectrum
        let n = 9;
        let mut p = CMat::zeros(n, n);
        for i in 0..n {
            p[(n - 1 - i, i)] = c(if i % 3 == 0 { -1.0 } else { 1.0 });
        }
        let p = (&p + p.adjoint()) * c(0.5);
        assert!(eigh_residual(&p) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let q = eigh(&(&g + g.adjoint())).1;
        let signs = nalgebra::DVector::from_fn(n, |i, _| c(if i < 4 { 1.0 } else { -1.0 }));
        let h = &q * CMat::from_diagonal(&signs) * q.adjoint();
        assert!(eigh_residual(&h) < 1e-12);
        let (values, _) = eigh(&h);
        assert_eq!(values.iter().filter(|&&v| v > 0.0).count(), 4);
    }

    #[test]
    fn zero_matrix_index() {
        let r = numerical_index(&CMat::zeros(3, 5), TOL).unwrap();
        assert_eq!((r.dim_ker, r.dim_coker, r.index), (5, 3, 2));
        assert_eq!(r.sigma_min_nonzero, 0.0);
    }

    #[test]
    fn identity_index() {
        for n in [1, 4, 9] {
            let r = numerical_index(&CMat::identity(n, n), TOL).unwrap();
            assert_eq!((r.dim_ker, r.dim_coker, r.index), (0, 0, 0));
            assert!(r.sigma_min_nonzero > r.threshold_used);
        }
    }

    #[test]
    fn empty_shapes() {
        let r = numerical_index(&CMat::zeros(0, 1), TOL).unwrap();
        assert_eq!((r.dim_ker, r.dim_coker, r.index), (1, 0, 1));
        let r = numerical_index(&CMat::zeros(2, 0), TOL).unwrap();
        assert_eq!((r.dim_ker, r.dim_coker, r.index), (0, 2, -2));
    }

    #[test]
    fn ambiguous_gap_is_reported() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(3e-8)]));
        match numerical_index(&m, TOL) {
            Err(Error::GapAmbiguity { values, .. }) => assert_eq!(values.len(), 1),
            other => panic!("expected gap ambiguity, got {other:?}"),
        }
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(1e-12)]));
        assert_eq!(numerical_index(&m, TOL).unwrap().dim_ker, 1);
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(matches!(numerical_index(&CMat::identity(2, 2), 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(numerical_index(&CMat::identity(2, 2), 1.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = c(f64::NAN);
        assert!(matches!(numerical_index(&m, TOL), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn block_threshold_is_global() {
        // 1e-9 is zero against σ_max = 10 even though its own block is tiny.
        let a = CMat::from_element(1, 1, c(10.0));
        let b = CMat::from_element(1, 1, c(1e-9));
        let r = numerical_index_blocks(&[a, b], TOL).unwrap();
        assert_eq!(r.dim_ker, 1);
        assert_eq!(r.threshold_used, 1e-7);
    }

    #[test]
    fn null_spaces_of_square() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0), c(0.0), c(0.0)]));
        let (k, ck) = square_null_spaces(&m, 1e-8);
        assert_eq!((k.ncols(), ck.ncols()), (2, 2));
        assert!((&m * &k).norm() < 1e-14);
        assert!((m.adjoint() * &ck).norm() < 1e-14);
    }

    #[test]
    fn heat_trace_trivial() {
        for n in [1, 3, 6] {
            for t in [0.1, 1.0, 10.0] {
                let v = heat_trace(&CMat::zeros(n, n), &CMat::identity(n, n), t).unwrap();
                assert!((v - n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heat_trace_pair_cancels() {
        // D has spectrum {±λ}; θ = diag(1, −1) anticommutes with D.
        let lambda = 1.7;
        let d = CMat::from_row_slice(2, 2, &[c(0.0), c(lambda), c(lambda), c(0.0)]);
        let theta = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        for t in [0.1, 1.0, 10.0] {
            assert!(heat_trace(&d, &theta, t).unwrap().abs() < 1e-14);
        }
        // with θ = 1 the full heat trace is 2 e^{−tλ²}
        let v = heat_trace(&d, &CMat::identity(2, 2), 0.5).unwrap();
        assert!((v - 2.0 * (-0.5 * lambda * lambda).exp()).abs() < 1e-14);
    }

    #[test]
    fn heat_trace_errors() {
        let d = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(heat_trace(&d, &CMat::identity(2, 2), 1.0), Err(Error::Symmetry { .. })));
        let theta = CMat::identity(2, 2) * Complex64::new(0.0, 1.0);
        assert!(matches!(
            heat_trace(&CMat::zeros(2, 2), &theta, 1.0),
            Err(Error::Convention { .. })
        ));
        assert!(heat_trace(&CMat::zeros(2, 2), &CMat::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn unrestricted_commutant_of_distinct_diagonal() {
        let n = 5;
        let d = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| c(i as f64 + 0.5)));
        let dim = commutant_dimension(&d, &PointwiseStructure::unrestricted(n), TOL).unwrap();
        assert_eq!(dim, n);
    }

    #[test]
    fn commutant_size_mismatch() {
        let s = PointwiseStructure::unrestricted(3);
        assert!(matches!(commutant_dimension(&CMat::zeros(2, 2), &s, TOL), Err(Error::Size(_))));
    }

    #[test]
    fn identity_diagram() {
        let n = 3;
        let i = CMat::identity(n, n);
        let diag = ExactRowDiagram {
            t_sub: i.clone(),
            t: CMat::identity(2 * n, 2 * n),
            t_quot: i.clone(),
            incl_v: CMat::identity(2 * n, n),
            proj_v: CMat::identity(2 * n, 2 * n).rows(n, n).into_owned(),
            incl_w: CMat::identity(2 * n, n),
            proj_w: CMat::identity(2 * n, 2 * n).rows(n, n).into_owned(),
        };
        let r = snake_additivity_check(&diag, TOL).unwrap();
        assert_eq!((r.index_t, r.index_t_sub, r.index_t_quot, r.holds), (0, 0, 0, true));
    }

    #[test]
    fn block_triangular_diagram() {
        // T′: 5 → 3 of rank 2, T″: 4 → 4 invertible.
        let mut t_sub = CMat::zeros(3, 5);
        t_sub[(0, 0)] = c(1.0);
        t_sub[(1, 1)] = c(2.0);
        t_sub[(2, 0)] = c(1.0);
        let t_quot = CMat::identity(4, 4) * c(3.0);
        let mut t = CMat::zeros(7, 9);
        t.view_mut((0, 0), (3, 5)).copy_from(&t_sub);
        t.view_mut((3, 5), (4, 4)).copy_from(&t_quot);
        t[(0, 6)] = c(5.0);
        let diag = ExactRowDiagram {
            t_sub,
            t,
            t_quot,
            incl_v: CMat::identity(9, 5),
            proj_v: CMat::identity(9, 9).rows(5, 4).into_owned(),
            incl_w: CMat::identity(7, 3),
            proj_w: CMat::identity(7, 7).rows(3, 4).into_owned(),
        };
        let r = snake_additivity_check(&diag, TOL).unwrap();
        assert_eq!((r.index_t, r.index_t_sub, r.index_t_quot), (2, 2, 0));
        assert!(r.holds);
    }

    #[test]
    fn broken_diagram_is_rejected() {
        let mut d = random_exact_diagram([2, 5, 3, 1, 4, 3], 3).unwrap();
        d.t[(0, 0)] += c(1.0);
        assert!(matches!(snake_additivity_check(&d, TOL), Err(Error::Diagram(_))));
        let mut d = random_exact_diagram([2, 5, 3, 1, 4, 3], 3).unwrap();
        d.proj_v = d.proj_v.rows(0, 2).into_owned();
        assert!(matches!(d.validate(TOL), Err(Error::Diagram(_))));
    }

    #[test]
    fn degenerate_rows() {
        for seed in 0..5 {
            let d = random_exact_diagram([0, 4, 4, 0, 3, 3], seed).unwrap();
            d.validate(TOL).unwrap();
            let r = snake_additivity_check(&d, TOL).unwrap();
            assert_eq!(r.index_t, r.index_t_quot);
            assert_eq!(r.index_t_sub, 0);
        }
    }

    #[test]
    fn random_diagram_validates_and_depends_on_seed() {
        let a = random_exact_diagram([3, 7, 4, 2, 6, 4], 1).unwrap();
        let b = random_exact_diagram([3, 7, 4, 2, 6, 4], 2).unwrap();
        a.validate(TOL).unwrap();
        b.validate(TOL).unwrap();
        assert_ne!(a.t, b.t);
        let again = random_exact_diagram([3, 7, 4, 2, 6, 4], 1).unwrap();
        assert_eq!(a.t, again.t);
    }

    #[test]
    fn inconsistent_dims() {
        assert!(matches!(random_exact_diagram([1, 3, 1, 0, 0, 0], 0), Err(Error::Size(_))));
    }
}
