//! Mixed local boundary problems on disjoint unions of cylinders
//! `[0, L] × Y`, and the two sides of the boundary index formula.

use crate::error::StageExt;
use crate::geometries::{analytic_index, product_circle, transfer_generator, EvenModel, INTERVAL_LENGTH};
use crate::involution::verify_theorem_a;
use crate::linop::{count_above, eigh, svd_full, rank_threshold, singular_values, IndexReport};
use crate::{CMat, Error, Result, Sign};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smallest grid accepted by the finite-difference witness.
pub const MIN_GRID: usize = 50;
/// Default grid for the finite-difference witness.
pub const DEFAULT_GRID: usize = 400;

/// One boundary component with its induced orientation and the chosen
/// half `ε` of its spinors that must vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub label: String,
    pub orientation: Sign,
    pub epsilon: Sign,
}

impl BoundaryComponent {
    /// The `Γ_Y` eigenvalue whose block is set to zero.
    pub fn constrained_sign(&self) -> Sign {
        self.orientation.times(self.epsilon)
    }
}

/// `[0, L] × Y`; the `x = 0` end is `−Y`, the `x = L` end is `+Y`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub factor: EvenModel,
    pub length: f64,
    pub start: BoundaryComponent,
    pub end: BoundaryComponent,
}

impl Cylinder {
    pub fn new(factor: EvenModel, length: f64, eps_start: Sign, eps_end: Sign, label: &str) -> Cylinder {
        Cylinder {
            factor,
            length,
            start: BoundaryComponent {
                label: format!("{label}:x=0"),
                orientation: Sign::Minus,
                epsilon: eps_start,
            },
            end: BoundaryComponent {
                label: format!("{label}:x=L"),
                orientation: Sign::Plus,
                epsilon: eps_end,
            },
        }
    }

    fn ends(&self) -> [&BoundaryComponent; 2] {
        [&self.start, &self.end]
    }
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryProblem {
    pub cylinders: Vec<Cylinder>,
}

impl BoundaryProblem {
    /// Cylinders `[0, L_j] × Y_j` with `(ε at x = 0, ε at x = L_j)`.
    pub fn new(factors: Vec<EvenModel>, lengths: &[f64], assignments: &[(Sign, Sign)]) -> Result<BoundaryProblem> {
        if factors.len() != lengths.len() || factors.len() != assignments.len() {
            return Err(Error::InvalidProblem(format!(
                "{} factors, {} lengths and {} assignments",
                factors.len(),
                lengths.len(),
                assignments.len()
            )));
        }
        let cylinders = factors
            .into_iter()
            .zip(lengths)
            .zip(assignments)
            .enumerate()
            .map(|(j, ((y, &l), &(e0, e1)))| Cylinder::new(y, l, e0, e1, &format!("cyl{j}")))
            .collect();
        let prob = BoundaryProblem { cylinders };
        prob.validate()?;
        Ok(prob)
    }

    /// One cylinder of length `½`.
    pub fn single(y: EvenModel, eps_start: Sign, eps_end: Sign) -> BoundaryProblem {
        BoundaryProblem {
            cylinders: vec![Cylinder::new(y, INTERVAL_LENGTH, eps_start, eps_end, "cyl0")],
        }
    }

    /// The same problem with every `ε` flipped.
    pub fn flipped(&self) -> BoundaryProblem {
        let mut out = self.clone();
        for c in &mut out.cylinders {
            c.start.epsilon = c.start.epsilon.flip();
            c.end.epsilon = c.end.epsilon.flip();
        }
        out
    }

    pub fn components(&self) -> impl Iterator<Item = (&BoundaryComponent, &EvenModel)> {
        self.cylinders
            .iter()
            .flat_map(|c| c.ends().into_iter().map(move |b| (b, &c.factor)))
    }

    pub fn validate(&self) -> Result<()> {
        for (j, c) in self.cylinders.iter().enumerate() {
            if !(c.length.is_finite() && c.length > 0.0) {
                return Err(Error::InvalidProblem(format!("cylinder {j} has length {}", c.length)));
            }
            if c.start.orientation != Sign::Minus || c.end.orientation != Sign::Plus {
                return Err(Error::InvalidProblem(format!(
                    "cylinder {j} must have orientation − at x = 0 and + at x = L"
                )));
            }
            if c.factor.chiral.shape() != (c.factor.dim_minus, c.factor.dim_plus) {
                return Err(Error::InvalidProblem(format!("cylinder {j} has a malformed factor")));
            }
        }
        Ok(())
    }
}

/// Projectors onto `S⁺` and `S⁻` of `Y` with the given orientation.
pub fn boundary_splitting(y: &EvenModel, orientation: Sign) -> (CMat, CMat) {
    let n = y.dim();
    let gamma = y.grading() * Complex64::new(orientation.value() as f64, 0.0);
    let id = CMat::identity(n, n);
    let half = Complex64::new(0.5, 0.0);
    ((&id + &gamma) * half, (&id - &gamma) * half)
}

/// Coordinates of the `Γ_Y = s` block.
fn block_indices(y: &EvenModel, s: Sign) -> Vec<usize> {
    match s {
        Sign::Plus => (0..y.dim_plus).collect(),
        Sign::Minus => (y.dim_plus..y.dim()).collect(),
    }
}

/// Rows `e_iᵀ` picking the constrained block at a boundary component.
fn condition_rows(y: &EvenModel, s: Sign) -> CMat {
    let idx = block_indices(y, s);
    CMat::from_fn(idx.len(), y.dim(), |r, c| Complex64::new(f64::from(idx[r] == c), 0.0))
}

struct Nullity {
    nullity: usize,
    sigma_max: f64,
    sigma_min_nonzero: f64,
    threshold: f64,
}

fn nullity(m: &CMat, tol: f64) -> Result<Nullity> {
    let sv = singular_values(m);
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = rank_threshold(sigma_max, tol);
    let rank = count_above(&sv, threshold)?;
    let sigma_min_nonzero = sv.iter().copied().filter(|&s| s > threshold).fold(f64::INFINITY, f64::min);
    Ok(Nullity {
        nullity: m.ncols() - rank,
        sigma_max,
        sigma_min_nonzero: if rank > 0 { sigma_min_nonzero } else { 0.0 },
        threshold,
    })
}

/// Dimension of `{ψ : D_X ψ = 0, ψ_{s₀}(0) = 0, ψ_{s₁}(L) = 0}`.
///
/// Solutions are `ψ(x) = Σ c_j e^{λ_j (x − x_j)} u_j` over the eigenpairs of
/// the transfer generator, with `x_j = L` for growing and `x_j = 0` for
/// decaying modes, so no exponential exceeds one.
fn shooting_nullity(y: &EvenModel, length: f64, s0: Sign, s1: Sign, tol: f64) -> Result<Nullity> {
    let n = y.dim();
    if n == 0 {
        return Ok(Nullity {
            nullity: 0,
            sigma_max: 0.0,
            sigma_min_nonzero: 0.0,
            threshold: rank_threshold(0.0, tol),
        });
    }
    let (values, u) = eigh(&transfer_generator(y));
    let at = |x: f64| {
        CMat::from_fn(n, n, |i, j| {
            let l = values[j];
            let xj = if l > 0.0 { length } else { 0.0 };
            u[(i, j)] * (l * (x - xj)).exp()
        })
    };
    let r0 = block_indices(y, s0);
    let r1 = block_indices(y, s1);
    let mut m = CMat::zeros(r0.len() + r1.len(), n);
    if !r0.is_empty() {
        m.rows_mut(0, r0.len()).copy_from(&at(0.0).select_rows(&r0));
    }
    if !r1.is_empty() {
        m.rows_mut(r0.len(), r1.len()).copy_from(&at(length).select_rows(&r1));
    }
    nullity(&m, tol)
}

fn cylinder_report(ker: Nullity, coker: Nullity, n: usize) -> IndexReport {
    IndexReport {
        dim_domain: n,
        dim_codomain: n,
        dim_ker: ker.nullity,
        dim_coker: coker.nullity,
        index: ker.nullity as i64 - coker.nullity as i64,
        sigma_max: ker.sigma_max.max(coker.sigma_max),
        sigma_min_nonzero: [ker.sigma_min_nonzero, coker.sigma_min_nonzero]
            .into_iter()
            .filter(|&s| s > 0.0)
            .reduce(f64::min)
            .unwrap_or(0.0),
        threshold_used: ker.threshold.max(coker.threshold),
    }
}

/// Kernel and cokernel of `(D_X, P^ε)` from exact solutions on each
/// cylinder. The adjoint problem imposes the complementary halves.
///
/// `dim_domain` and `dim_codomain` count the solution space of the ODE
/// (`dim S(Y)` per cylinder).
pub fn boundary_index_shooting(prob: &BoundaryProblem, tol: f64) -> Result<IndexReport> {
    prob.validate()?;
    let mut parts = Vec::new();
    for c in &prob.cylinders {
        let (s0, s1) = (c.start.constrained_sign(), c.end.constrained_sign());
        let ker = shooting_nullity(&c.factor, c.length, s0, s1, tol)?;
        let coker = shooting_nullity(&c.factor, c.length, s0.flip(), s1.flip(), tol)?;
        parts.push(cylinder_report(ker, coker, c.factor.dim()));
    }
    Ok(IndexReport::direct_sum(&parts))
}

/// Box-scheme coefficients `(A, B)` so that row `j` reads
/// `A ψ_j + B ψ_{j+1} = 0`, scaled by `h`.
fn box_stencil(y: &EvenModel, h: f64) -> (CMat, CMat) {
    let d = y.dirac() * Complex64::new(h / 2.0, 0.0);
    let ig = y.grading() * Complex64::new(0.0, 1.0);
    (&d - &ig, &d + &ig)
}

fn check_grid(prob: &BoundaryProblem, n_grid: usize) -> Result<()> {
    prob.validate()?;
    if n_grid < MIN_GRID {
        return Err(Error::Size(format!("finite-difference grid needs at least {MIN_GRID} points, got {n_grid}")));
    }
    let cells = prob.cylinders.iter().map(|c| n_grid * c.factor.dim()).max().unwrap_or(0);
    if cells > 4_000_000 {
        return Err(Error::Size(format!("finite-difference system with {cells} unknowns is too large")));
    }
    Ok(())
}

/// Split `x` into the rows it can eliminate and the rest: returns the rank
/// of `x` and the left null space of `x` applied to `y`.
fn eliminate(x: &CMat, y: &CMat, tol: f64) -> Result<(usize, CMat)> {
    if x.nrows() == 0 {
        return Ok((0, CMat::zeros(0, y.ncols())));
    }
    let (u, svals, _) = svd_full(x);
    let threshold = rank_threshold(svals.first().copied().unwrap_or(0.0), tol);
    let rank = count_above(&svals, threshold)?;
    Ok((rank, u.columns(rank, x.nrows() - rank).adjoint() * y))
}

fn orthonormal_rows(m: &CMat, tol: f64) -> Result<CMat> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let (_, svals, v) = svd_full(m);
    let threshold = rank_threshold(svals.first().copied().unwrap_or(0.0), tol);
    let rank = count_above(&svals, threshold)?;
    Ok(v.columns(0, rank).adjoint())
}

fn vstack(parts: &[&CMat], ncols: usize) -> CMat {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = CMat::zeros(rows, ncols);
    let mut r = 0;
    for p in parts {
        if p.nrows() > 0 {
            out.rows_mut(r, p.nrows()).copy_from(p);
        }
        r += p.nrows();
    }
    out
}

struct FdCounts {
    unknowns: usize,
    domain: usize,
    codomain: usize,
    rank_all: usize,
}

impl FdCounts {
    fn report(&self, threshold: f64) -> IndexReport {
        let ker = self.unknowns - self.rank_all;
        let rank_op = self.domain - ker;
        let coker = self.codomain - rank_op;
        IndexReport {
            dim_domain: self.domain,
            dim_codomain: self.codomain,
            dim_ker: ker,
            dim_coker: coker,
            index: ker as i64 - coker as i64,
            sigma_max: 0.0,
            sigma_min_nonzero: 0.0,
            threshold_used: threshold,
        }
    }
}

/// Rank of the stacked boundary and difference rows, one grid point at a
/// time with an orthonormal carry.
fn fd_counts_sweep(c: &Cylinder, n_grid: usize, tol: f64) -> Result<FdCounts> {
    let y = &c.factor;
    let n = y.dim();
    let h = c.length / (n_grid - 1) as f64;
    let (a, b) = box_stencil(y, h);
    let bc0 = condition_rows(y, c.start.constrained_sign());
    let bc1 = condition_rows(y, c.end.constrained_sign());
    let zeros = |r: usize| CMat::zeros(r, n);
    let mut carry = bc0.clone();
    let mut rank_all = 0;
    for _ in 0..n_grid - 1 {
        let x = vstack(&[&carry, &a], n);
        let yb = vstack(&[&zeros(carry.nrows()), &b], n);
        let (r, rest) = eliminate(&x, &yb, tol)?;
        rank_all += r;
        carry = orthonormal_rows(&rest, tol)?;
    }
    let last = vstack(&[&carry, &bc1], n);
    let sv = singular_values(&last);
    let threshold = rank_threshold(sv.iter().copied().fold(0.0, f64::max), tol);
    rank_all += count_above(&sv, threshold)?;
    Ok(FdCounts {
        unknowns: n_grid * n,
        domain: n_grid * n - bc0.nrows() - bc1.nrows(),
        codomain: (n_grid - 1) * n,
        rank_all,
    })
}

/// Same counts from one dense SVD of the whole system.
fn fd_counts_dense(c: &Cylinder, n_grid: usize, tol: f64) -> Result<FdCounts> {
    let y = &c.factor;
    let n = y.dim();
    let h = c.length / (n_grid - 1) as f64;
    let (a, b) = box_stencil(y, h);
    let bc0 = condition_rows(y, c.start.constrained_sign());
    let bc1 = condition_rows(y, c.end.constrained_sign());
    let unknowns = n_grid * n;
    let rows = bc0.nrows() + bc1.nrows() + (n_grid - 1) * n;
    let mut m = CMat::zeros(rows, unknowns);
    let mut r = 0;
    if bc0.nrows() > 0 {
        m.view_mut((0, 0), (bc0.nrows(), n)).copy_from(&bc0);
        r += bc0.nrows();
    }
    for j in 0..n_grid - 1 {
        m.view_mut((r, j * n), (n, n)).copy_from(&a);
        m.view_mut((r, (j + 1) * n), (n, n)).copy_from(&b);
        r += n;
    }
    if bc1.nrows() > 0 {
        m.view_mut((r, (n_grid - 1) * n), (bc1.nrows(), n)).copy_from(&bc1);
    }
    let sv = singular_values(&m);
    let threshold = rank_threshold(sv.iter().copied().fold(0.0, f64::max), tol);
    Ok(FdCounts {
        unknowns,
        domain: unknowns - bc0.nrows() - bc1.nrows(),
        codomain: (n_grid - 1) * n,
        rank_all: count_above(&sv, threshold)?,
    })
}

fn fd_index(prob: &BoundaryProblem, n_grid: usize, tol: f64, dense: bool) -> Result<IndexReport> {
    check_grid(prob, n_grid)?;
    let mut parts = Vec::new();
    for c in &prob.cylinders {
        let counts = if dense {
            fd_counts_dense(c, n_grid, tol)?
        } else {
            fd_counts_sweep(c, n_grid, tol)?
        };
        parts.push(counts.report(tol));
    }
    Ok(IndexReport::direct_sum(&parts))
}

/// Finite-difference witness: box scheme for `iΓ_Y ∂ₓ + D_Y` on `n_grid`
/// points per cylinder with the boundary conditions as extra rows. The
/// rank is found by a sweep along the grid.
pub fn boundary_index_fd(prob: &BoundaryProblem, n_grid: usize, tol: f64) -> Result<IndexReport> {
    fd_index(prob, n_grid, tol, false)
}

/// [`boundary_index_fd`] through a single dense SVD; cubic in `n_grid`.
pub fn boundary_index_fd_dense(prob: &BoundaryProblem, n_grid: usize, tol: f64) -> Result<IndexReport> {
    fd_index(prob, n_grid, tol, true)
}

/// `(Σ_{ε=−} index D_{Y_i}, −Σ_{ε=+} index D_{Y_i})`, each component's
/// index taken with its own orientation.
pub fn theorem_b_rhs(prob: &BoundaryProblem) -> Result<(i64, i64)> {
    let (mut minus, mut plus) = (0, 0);
    for (b, y) in prob.components() {
        let idx = b.orientation.value() * analytic_index(y)?;
        match b.epsilon {
            Sign::Minus => minus += idx,
            Sign::Plus => plus -= idx,
        }
    }
    Ok((minus, plus))
}

/// `Σ orientation · index D_Y = 0` over all boundary components.
pub fn cobordism_check(prob: &BoundaryProblem) -> Result<bool> {
    let mut total = 0;
    for (b, y) in prob.components() {
        total += b.orientation.value() * analytic_index(y)?;
    }
    Ok(total == 0)
}

#[derive(Debug, Clone)]
pub struct TheoremBReport {
    pub lhs: IndexReport,
    pub rhs_minus_sum: i64,
    pub rhs_plus_sum: i64,
    pub matches: bool,
    pub fd: Option<IndexReport>,
    /// `Some(false)` is a discretization warning, not a failure.
    pub fd_agrees: Option<bool>,
}

pub fn verify_theorem_b(prob: &BoundaryProblem, tol: f64) -> Result<TheoremBReport> {
    verify_theorem_b_impl(prob, None, tol)
}

/// [`verify_theorem_b`] with the finite-difference witness attached.
pub fn verify_theorem_b_with_fd(prob: &BoundaryProblem, n_grid: usize, tol: f64) -> Result<TheoremBReport> {
    verify_theorem_b_impl(prob, Some(n_grid), tol)
}

fn verify_theorem_b_impl(prob: &BoundaryProblem, n_grid: Option<usize>, tol: f64) -> Result<TheoremBReport> {
    let lhs = boundary_index_shooting(prob, tol).stage("boundary_index_shooting")?;
    let (rhs_minus_sum, rhs_plus_sum) = theorem_b_rhs(prob).stage("theorem_b_rhs")?;
    let fd = match n_grid {
        Some(g) => Some(boundary_index_fd(prob, g, tol).stage("boundary_index_fd")?),
        None => None,
    };
    let fd_agrees = fd
        .as_ref()
        .map(|f| f.dim_ker == lhs.dim_ker && f.dim_coker == lhs.dim_coker);
    Ok(TheoremBReport {
        matches: lhs.index == rhs_minus_sum && lhs.index == rhs_plus_sum,
        lhs,
        rhs_minus_sum,
        rhs_plus_sum,
        fd,
        fd_agrees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwEquivalence {
    pub index_twisted: i64,
    pub index_boundary: i64,
    pub equal: bool,
}

/// Index of the reflection-twisted operator on `S¹ × Y` against the index
/// of the cylinder `[0, ½] × Y` with `ψ⁻(0) = ψ⁻(½) = 0`.
pub fn hw_equivalence_check(y: &EvenModel, k: usize, tol: f64) -> Result<HwEquivalence> {
    let model = product_circle(y, k).stage("product_circle")?;
    let twisted = verify_theorem_a(&model, tol)?.lhs.index;
    let prob = BoundaryProblem::single(y.clone(), Sign::Plus, Sign::Minus);
    let boundary = boundary_index_shooting(&prob, tol).stage("boundary_index_shooting")?.index;
    Ok(HwEquivalence {
        index_twisted: twisted,
        index_boundary: boundary,
        equal: twisted == boundary,
    })
}
