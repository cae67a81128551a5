//! Finite spectral models of Dirac operators.
//!
//! Closed models use Fourier modes `e^{2πikx/ℓ}`, `|k| ≤ K`, on a circle
//! of circumference `ℓ`. Even-dimensional factors `Y` enter only through
//! their graded Dirac operator `D_Y = [[0, A*], [A, 0]]` with
//! `Γ_Y = diag(1, −1)` ([`EvenModel`]).

use crate::clifford::{build_clifford_rep, chirality};
use crate::linop::{self, eigh, numerical_index, IndexReport, PointwiseStructure};
use crate::{CMat, Error, Result, DEFAULT_TOL_RANK};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default circle circumference (the circle is `ℝ/ℤ`).
pub const CIRCLE_LENGTH: f64 = 1.0;
/// Default cylinder length.
pub const INTERVAL_LENGTH: f64 = 0.5;
/// Largest matrix dimension any model may allocate.
pub const MAX_MODEL_DIM: usize = 20_000;

/// Which even-dimensional factor a model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FiberLabel {
    Point,
    Abstract { p: usize, q: usize, d: i64, seed: u64 },
    TorusFlat { cutoff: usize },
    SphereMonopole { charge: i64, cutoff: usize },
}

impl std::fmt::Display for FiberLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiberLabel::Point => write!(f, "point"),
            FiberLabel::Abstract { p, q, d, seed } => write!(f, "abstract(p={p},q={q},d={d},seed={seed})"),
            FiberLabel::TorusFlat { cutoff } => write!(f, "torus(K={cutoff})"),
            FiberLabel::SphereMonopole { charge, cutoff } => write!(f, "monopole(q={charge},L={cutoff})"),
        }
    }
}

/// A graded even factor: `A : S⁺ → S⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenModel {
    pub dim_plus: usize,
    pub dim_minus: usize,
    /// `dim_minus × dim_plus`.
    pub chiral: CMat,
    pub label: FiberLabel,
}

impl EvenModel {
    pub fn new(chiral: CMat, label: FiberLabel) -> EvenModel {
        EvenModel {
            dim_plus: chiral.ncols(),
            dim_minus: chiral.nrows(),
            chiral,
            label,
        }
    }

    /// A point: `S⁺ = ℂ`, `S⁻ = 0`.
    pub fn point() -> EvenModel {
        EvenModel::new(CMat::zeros(0, 1), FiberLabel::Point)
    }

    pub fn dim(&self) -> usize {
        self.dim_plus + self.dim_minus
    }

    /// `D_Y = [[0, A*], [A, 0]]`.
    pub fn dirac(&self) -> CMat {
        let (p, n) = (self.dim_plus, self.dim());
        let mut d = CMat::zeros(n, n);
        d.view_mut((p, 0), (self.dim_minus, p)).copy_from(&self.chiral);
        d.view_mut((0, p), (p, self.dim_minus)).copy_from(&self.chiral.adjoint());
        d
    }

    /// `Γ_Y = diag(+1, −1)`.
    pub fn grading(&self) -> CMat {
        let p = self.dim_plus;
        CMat::from_diagonal(&nalgebra::DVector::from_fn(self.dim(), |i, _| {
            Complex64::new(if i < p { 1.0 } else { -1.0 }, 0.0)
        }))
    }
}

pub fn analytic_index_report(y: &EvenModel, tol: f64) -> Result<IndexReport> {
    numerical_index(&y.chiral, tol)
}

/// `dim ker A − dim ker A*`.
pub fn analytic_index(y: &EvenModel) -> Result<i64> {
    Ok(analytic_index_report(y, DEFAULT_TOL_RANK)?.index_from_kernels())
}

/// Random full-rank even model with index `d`: `dim S⁺ = p + max(d, 0)`,
/// `dim S⁻ = q + max(−d, 0)` with `p = q`, complex Gaussian entries.
pub fn abstract_even_model(p: usize, q: usize, d: i64, seed: u64) -> Result<EvenModel> {
    if p != q {
        return Err(Error::Construction(format!(
            "a full-rank map has index dim S⁺ − dim S⁻, so p = q is required for index {d} (got p = {p}, q = {q})"
        )));
    }
    let dim_plus = p + d.max(0) as usize;
    let dim_minus = q + (-d).max(0) as usize;
    let label = FiberLabel::Abstract { p, q, d, seed };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..2 {
        let a = CMat::from_fn(dim_minus, dim_plus, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        if let Ok(r) = numerical_index(&a, DEFAULT_TOL_RANK) {
            if r.rank() == dim_plus.min(dim_minus) {
                return Ok(EvenModel::new(a, label));
            }
        }
    }
    Err(Error::Construction(format!(
        "random chiral block for {label} is rank deficient twice"
    )))
}

/// Modes `(k₁, k₂)`, `|kᵢ| ≤ K`, in row-major order.
pub fn torus_modes(k: usize) -> Vec<(i64, i64)> {
    let k = k as i64;
    (-k..=k).flat_map(|a| (-k..=k).map(move |b| (a, b))).collect()
}

/// Flat unit torus `ℝ²/ℤ²`: `D_Y = c(e¹)∂₁ + c(e²)∂₂` on Fourier modes.
///
/// The chiral block is read off between the `±1` eigenvectors of the
/// two-dimensional chirality, so `A` is diagonal over modes with entry
/// `−2π(k₁ + i k₂)`.
pub fn torus_flat_model(k: usize) -> Result<EvenModel> {
    if k == 0 {
        return Err(Error::Size("torus cutoff must be at least 1".into()));
    }
    let modes = torus_modes(k);
    if 2 * modes.len() > MAX_MODEL_DIM {
        return Err(Error::Size(format!("torus cutoff {k} exceeds the size cap")));
    }
    let rep = build_clifford_rep(2)?;
    let gamma = chirality(&rep)?;
    let (values, vectors) = eigh(&gamma);
    let pick = |sign: f64| {
        let i = (0..2)
            .find(|&i| (values[i] - sign).abs() < 1e-12)
            .expect("chirality has eigenvalues ±1");
        vectors.column(i).into_owned()
    };
    let (plus, minus) = (pick(1.0), pick(-1.0));
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut a = CMat::zeros(modes.len(), modes.len());
    for (idx, &(k1, k2)) in modes.iter().enumerate() {
        let symbol = &rep.generators[0] * (two_pi_i * k1 as f64) + &rep.generators[1] * (two_pi_i * k2 as f64);
        a[(idx, idx)] = (minus.adjoint() * symbol * &plus)[(0, 0)];
    }
    Ok(EvenModel::new(a, FiberLabel::TorusFlat { cutoff: k }))
}

/// Monopole-harmonic basis labels `(2j, 2m)` with spin weight `s = two_s/2`
/// and `j ≤ cutoff`.
fn monopole_basis(two_s: i64, cutoff: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut two_j = two_s.abs();
    while two_j <= 2 * cutoff as i64 {
        for two_m in (-two_j..=two_j).step_by(2) {
            out.push((two_j, two_m));
        }
        two_j += 2;
    }
    out
}

/// Charge-`q` monopole on the unit sphere.
///
/// Positive spinors are spin-weight `s = (q − 1)/2` harmonics, negative
/// ones spin-weight `s + 1`. The chiral block is the spin-weight raising
/// ladder operator, `|s, j, m⟩ ↦ √((j − s)(j + s + 1)) |s + 1, j, m⟩`, so the
/// nonzero singular values are `√((j + ½)² − q²/4)` and the unpaired lowest
/// multiplet (`2j + 1 = |q|` states) sits in chirality `sign(q)`.
/// Both chiralities are truncated at total angular momentum `j ≤ L`.
pub fn sphere_monopole_model(q: i64, cutoff: usize) -> Result<EvenModel> {
    if (cutoff as i64) < q.abs() + 1 {
        return Err(Error::Size(format!(
            "monopole cutoff L = {cutoff} must be at least |q| + 1 = {}",
            q.abs() + 1
        )));
    }
    let two_s = q - 1;
    let plus = monopole_basis(two_s, cutoff);
    let minus = monopole_basis(two_s + 2, cutoff);
    if plus.len() + minus.len() > MAX_MODEL_DIM {
        return Err(Error::Size(format!("monopole cutoff {cutoff} exceeds the size cap")));
    }
    let mut a = CMat::zeros(minus.len(), plus.len());
    for (col, &(two_j, two_m)) in plus.iter().enumerate() {
        if let Some(row) = minus.iter().position(|&l| l == (two_j, two_m)) {
            let v = ((two_j - two_s) * (two_j + two_s + 2)) as f64 / 4.0;
            a[(row, col)] = Complex64::new(v.sqrt(), 0.0);
        }
    }
    Ok(EvenModel::new(a, FiberLabel::SphereMonopole { charge: q, cutoff }))
}

/// Where a closed model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    Circle { cutoff: usize, circumference: f64 },
    ProductCircle { cutoff: usize, circumference: f64, fiber: FiberLabel },
    DisjointUnion { parts: Vec<Geometry> },
    /// Assembled by hand; carries no reflection symmetry.
    Custom { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisLabel {
    pub component: usize,
    pub mode: i64,
    pub fiber: usize,
}

/// One connected piece `S¹ × Y` of a closed model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComponent {
    pub offset: usize,
    pub cutoff: usize,
    pub circumference: f64,
    pub fiber: EvenModel,
}

impl ModelComponent {
    pub fn dim(&self) -> usize {
        (2 * self.cutoff + 1) * self.fiber.dim()
    }

    /// Local index of `(mode, fiber)`.
    pub fn local(&self, mode: i64, a: usize) -> usize {
        (mode + self.cutoff as i64) as usize * self.fiber.dim() + a
    }
}

/// A truncated self-adjoint Dirac operator with basis metadata.
///
/// `sectors` partitions the basis into subspaces preserved by the operator
/// (and, for reflection-symmetric models, by the lift): the zero mode and
/// each pair `{k, −k}`. Spectral work is done sector by sector.
#[derive(Debug, Clone)]
pub struct DiracModel {
    pub matrix: CMat,
    pub basis: Vec<BasisLabel>,
    pub geometry: Geometry,
    pub components: Vec<ModelComponent>,
    pub sectors: Vec<Vec<usize>>,
}

impl DiracModel {
    /// Validated assembly from parts.
    pub fn from_parts(
        matrix: CMat,
        basis: Vec<BasisLabel>,
        geometry: Geometry,
        components: Vec<ModelComponent>,
        sectors: Vec<Vec<usize>>,
    ) -> Result<DiracModel> {
        let n = matrix.nrows();
        if matrix.ncols() != n || basis.len() != n {
            return Err(Error::Size(format!(
                "matrix {:?} and {} basis labels do not match",
                matrix.shape(),
                basis.len()
            )));
        }
        linop::check_self_adjoint(&matrix, 1e-10)?;
        let mut seen = vec![false; n];
        for s in &sectors {
            for &i in s {
                if i >= n || seen[i] {
                    return Err(Error::Size("sectors must partition the basis".into()));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Size("sectors must cover the basis".into()));
        }
        let model = DiracModel {
            matrix,
            basis,
            geometry,
            components,
            sectors,
        };
        let leak = model.sector_leak(&model.matrix);
        if leak > 1e-12 * model.matrix.norm().max(1.0) {
            return Err(Error::Size(format!("operator couples different sectors (leak {leak:e})")));
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Norm of the part of `m` coupling different sectors.
    pub fn sector_leak(&self, m: &CMat) -> f64 {
        let mut owner = vec![0; self.dim()];
        for (s, idx) in self.sectors.iter().enumerate() {
            for &i in idx {
                owner[i] = s;
            }
        }
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if owner[i] != owner[j] {
                    acc += m[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Restriction of `m` to sector `s`.
    pub fn restrict(&self, m: &CMat, s: usize) -> CMat {
        let idx = &self.sectors[s];
        m.select_rows(idx).select_columns(idx)
    }

    /// Collocation picture for bundle maps: values at the `2K + 1` equally
    /// spaced points of each circle factor, fiber coordinates innermost.
    pub fn collocation_structure(&self) -> Result<PointwiseStructure> {
        let fiber = match self.components.first() {
            Some(c) => c.fiber.dim(),
            None => return Err(Error::UnsupportedGeometry("model has no components".into())),
        };
        if self.components.iter().any(|c| c.fiber.dim() != fiber) {
            return Err(Error::UnsupportedGeometry(
                "collocation structure needs equal fiber dimensions".into(),
            ));
        }
        if matches!(self.geometry, Geometry::Custom { .. }) {
            return Err(Error::UnsupportedGeometry("custom model has no collocation grid".into()));
        }
        let n = self.dim();
        let mut w = CMat::zeros(n, n);
        let mut points = 0;
        for c in &self.components {
            let np = 2 * c.cutoff + 1;
            let norm = 1.0 / (np as f64).sqrt();
            for j in 0..np {
                let x = j as f64 / np as f64;
                for k in -(c.cutoff as i64)..=(c.cutoff as i64) {
                    let phase = Complex64::from_polar(norm, 2.0 * PI * k as f64 * x);
                    for a in 0..fiber {
                        w[(c.offset + j * fiber + a, c.offset + c.local(k, a))] = phase;
                    }
                }
            }
            points += np;
        }
        Ok(PointwiseStructure {
            to_pointwise: w,
            points,
            fiber,
        })
    }
}

fn check_cutoff(k: usize, fiber_dim: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Size("circle cutoff must be at least 1".into()));
    }
    if (2 * k + 1) * fiber_dim > MAX_MODEL_DIM {
        return Err(Error::Size(format!(
            "model dimension {} exceeds the cap {MAX_MODEL_DIM}",
            (2 * k + 1) * fiber_dim
        )));
    }
    Ok(())
}

fn mode_sectors(component: &ModelComponent) -> Vec<Vec<usize>> {
    let f = component.fiber.dim();
    let zero: Vec<usize> = (0..f).map(|a| component.offset + component.local(0, a)).collect();
    let mut out = vec![zero];
    for k in 1..=component.cutoff as i64 {
        let mut s: Vec<usize> = (0..f).map(|a| component.offset + component.local(-k, a)).collect();
        s.extend((0..f).map(|a| component.offset + component.local(k, a)));
        out.push(s);
    }
    out
}

/// `i d/dx` on `ℝ/ℤ`: diagonal with entry `−2πk` on `e^{2πikx}`.
pub fn circle_dirac(k: usize) -> Result<DiracModel> {
    circle_dirac_with_length(k, CIRCLE_LENGTH)
}

pub fn circle_dirac_with_length(k: usize, circumference: f64) -> Result<DiracModel> {
    check_cutoff(k, 1)?;
    let component = ModelComponent {
        offset: 0,
        cutoff: k,
        circumference,
        fiber: EvenModel::point(),
    };
    let kk = k as i64;
    let modes: Vec<i64> = (-kk..=kk).collect();
    let matrix = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        modes.len(),
        modes.iter().map(|&m| Complex64::new(-2.0 * PI * m as f64 / circumference, 0.0)),
    ));
    let basis = modes
        .iter()
        .map(|&mode| BasisLabel {
            component: 0,
            mode,
            fiber: 0,
        })
        .collect();
    let sectors = mode_sectors(&component);
    Ok(DiracModel {
        matrix,
        basis,
        geometry: Geometry::Circle { cutoff: k, circumference },
        components: vec![component],
        sectors,
    })
}

/// `D_X = iΓ_Y ∂ₓ + D_Y` on `S¹ × Y`; block `−(2πk/ℓ)Γ_Y + D_Y` per mode.
pub fn product_circle(y: &EvenModel, k: usize) -> Result<DiracModel> {
    product_circle_with_length(y, k, CIRCLE_LENGTH)
}

pub fn product_circle_with_length(y: &EvenModel, k: usize, circumference: f64) -> Result<DiracModel> {
    let f = y.dim();
    check_cutoff(k, f)?;
    let component = ModelComponent {
        offset: 0,
        cutoff: k,
        circumference,
        fiber: y.clone(),
    };
    let n = component.dim();
    let dy = y.dirac();
    let gamma = y.grading();
    let mut matrix = CMat::zeros(n, n);
    let mut basis = Vec::with_capacity(n);
    let kk = k as i64;
    for mode in -kk..=kk {
        let block = &gamma * Complex64::new(-2.0 * PI * mode as f64 / circumference, 0.0) + &dy;
        let start = component.local(mode, 0);
        matrix.view_mut((start, start), (f, f)).copy_from(&block);
        basis.extend((0..f).map(|a| BasisLabel {
            component: 0,
            mode,
            fiber: a,
        }));
    }
    let sectors = mode_sectors(&component);
    Ok(DiracModel {
        matrix,
        basis,
        geometry: Geometry::ProductCircle {
            cutoff: k,
            circumference,
            fiber: y.label.clone(),
        },
        components: vec![component],
        sectors,
    })
}

/// Block-diagonal union of closed models.
pub fn disjoint_union(models: &[DiracModel]) -> Result<DiracModel> {
    let n: usize = models.iter().map(DiracModel::dim).sum();
    if n > MAX_MODEL_DIM {
        return Err(Error::Size(format!("union dimension {n} exceeds the cap")));
    }
    let mut matrix = CMat::zeros(n, n);
    let (mut basis, mut components, mut sectors, mut parts) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut offset = 0;
    for m in models {
        let first = components.len();
        matrix.view_mut((offset, offset), (m.dim(), m.dim())).copy_from(&m.matrix);
        basis.extend(m.basis.iter().map(|b| BasisLabel {
            component: b.component + first,
            ..*b
        }));
        components.extend(m.components.iter().map(|c| ModelComponent {
            offset: c.offset + offset,
            ..c.clone()
        }));
        sectors.extend(m.sectors.iter().map(|s| s.iter().map(|i| i + offset).collect::<Vec<_>>()));
        parts.push(m.geometry.clone());
        offset += m.dim();
    }
    Ok(DiracModel {
        matrix,
        basis,
        geometry: Geometry::DisjointUnion { parts },
        components,
        sectors,
    })
}

/// `exp(x·H)` for Hermitian `H`, through its eigendecomposition.
pub fn hermitian_exp(h: &CMat, x: f64) -> Result<CMat> {
    let n = h.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    linop::check_self_adjoint(h, 1e-10)?;
    let (values, u) = eigh(h);
    let exponent = values.iter().map(|l| (x * l).abs()).fold(0.0, f64::max);
    if exponent > 700.0 {
        return Err(Error::Scaling { exponent });
    }
    let scaled = CMat::from_fn(n, n, |i, j| u[(i, j)] * (x * values[j]).exp());
    Ok(scaled * u.adjoint())
}

/// Generator `iΓ_Y D_Y` of the zero-mode flow `ψ′ = iΓ_Y D_Y ψ` on the
/// cylinder; it is Hermitian and squares to `D_Y²`.
pub fn transfer_generator(y: &EvenModel) -> CMat {
    y.grading() * y.dirac() * Complex64::new(0.0, 1.0)
}

/// `T(x) = exp(x · iΓ_Y D_Y)`: carries `ψ(0)` to `ψ(x)` for solutions of
/// `D_X ψ = 0` on `[0, L] × Y`.
pub fn interval_transfer(y: &EvenModel, x: f64) -> Result<CMat> {
    hermitian_exp(&transfer_generator(y), x)
}
