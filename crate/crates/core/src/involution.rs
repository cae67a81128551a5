//! Lifts of the reflection `x ↦ −x` to spinors, the induced splitting, and
//! the two sides of the fixed-point index formula.

use crate::error::StageExt;
use crate::geometries::{analytic_index, DiracModel, Geometry, ModelComponent};
use crate::linop::{self, eigh, heat_trace, numerical_index_blocks, rank_threshold, square_null_spaces, IndexReport};
use crate::{CMat, Error, Result, Sign};
use num_complex::Complex64;
use num_rational::Ratio;

/// Tolerance for the algebraic lift identities.
pub const LIFT_TOL: f64 = 1e-10;
/// Allowed gap between the exact and heat-kernel Lefschetz numbers.
pub const LEFSCHETZ_TOL: f64 = 1e-7;
/// Heat times used by [`verify_theorem_a`].
pub const HEAT_TIMES: [f64; 3] = [0.1, 1.0, 10.0];

/// A lift `τ̃` of the reflection, `ψ_k ↦ sign · Γ_Y ψ_{−k}` on each component.
#[derive(Debug, Clone)]
pub struct InvolutionLift {
    /// Basis index of the mirror mode, fiber index unchanged.
    pub mode_map: Vec<usize>,
    /// Fiber factor per component (`Γ_Y`, or `[1]` on a bare circle).
    pub fiber_factors: Vec<CMat>,
    pub signs: Vec<Sign>,
    /// Basis indices owned by each component.
    pub components: Vec<Vec<usize>>,
    /// Mode sectors copied from the model.
    pub sectors: Vec<Vec<usize>>,
    pub matrix: CMat,
}

impl InvolutionLift {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖τ̃² − 1‖`.
    pub fn square_defect(&self) -> f64 {
        let n = self.dim();
        if self.sector_leak(&self.matrix) > 0.0 {
            return (&self.matrix * &self.matrix - CMat::identity(n, n)).norm();
        }
        let mut acc = 0.0;
        for s in 0..self.sectors.len() {
            let b = self.restrict(&self.matrix, s);
            acc += (&b * &b - CMat::identity(b.nrows(), b.nrows())).norm_squared();
        }
        acc.sqrt()
    }

    /// `‖τ̃D + Dτ̃‖`.
    pub fn anticommutator(&self, d: &CMat) -> f64 {
        if d.shape() != self.matrix.shape() || self.sector_leak(&self.matrix) > 0.0 || self.sector_leak(d) > 0.0 {
            return (&self.matrix * d + d * &self.matrix).norm();
        }
        let mut acc = 0.0;
        for s in 0..self.sectors.len() {
            let (t, ds) = (self.restrict(&self.matrix, s), self.restrict(d, s));
            acc += (&t * &ds + &ds * &t).norm_squared();
        }
        acc.sqrt()
    }

    fn sector_owner(&self) -> Option<Vec<usize>> {
        let mut owner = vec![usize::MAX; self.dim()];
        for (s, idx) in self.sectors.iter().enumerate() {
            for &i in idx {
                *owner.get_mut(i)? = s;
            }
        }
        owner.iter().all(|&o| o != usize::MAX).then_some(owner)
    }

    /// Norm of the part of `m` coupling different sectors; infinite when
    /// the sectors do not partition the basis.
    fn sector_leak(&self, m: &CMat) -> f64 {
        let Some(owner) = self.sector_owner() else {
            return f64::INFINITY;
        };
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if owner[i] != owner[j] {
                    acc += m[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    fn restrict(&self, m: &CMat, s: usize) -> CMat {
        let idx = &self.sectors[s];
        m.select_rows(idx).select_columns(idx)
    }
}

fn check_reflectable(model: &DiracModel) -> Result<()> {
    fn supported(g: &Geometry) -> bool {
        match g {
            Geometry::Circle { .. } | Geometry::ProductCircle { .. } => true,
            Geometry::DisjointUnion { parts } => parts.iter().all(supported),
            Geometry::Custom { .. } => false,
        }
    }
    if !supported(&model.geometry) || model.components.is_empty() {
        return Err(Error::UnsupportedGeometry(format!(
            "{:?} carries no reflection x ↦ −x",
            model.geometry
        )));
    }
    Ok(())
}

fn mirror_index(c: &ModelComponent, idx: usize, mode: i64, fiber: usize) -> Result<usize> {
    if mode.unsigned_abs() as usize > c.cutoff || fiber >= c.fiber.dim() {
        return Err(Error::UnsupportedGeometry(format!(
            "basis index {idx} (mode {mode}, fiber {fiber}) has no mirror partner"
        )));
    }
    Ok(c.offset + c.local(-mode, fiber))
}

/// Assemble `τ̃` with one sign per component and check `τ̃² = 1`,
/// `τ̃D = −Dτ̃`.
pub fn build_lift(model: &DiracModel, signs: &[Sign]) -> Result<InvolutionLift> {
    check_reflectable(model)?;
    if signs.len() != model.components.len() {
        return Err(Error::Size(format!(
            "{} signs given for {} components",
            signs.len(),
            model.components.len()
        )));
    }
    let n = model.dim();
    let mut mode_map = vec![0; n];
    let mut components = vec![Vec::new(); model.components.len()];
    let mut matrix = CMat::zeros(n, n);
    let factors: Vec<CMat> = model.components.iter().map(|c| c.fiber.grading()).collect();
    for (idx, label) in model.basis.iter().enumerate() {
        let comp = model
            .components
            .get(label.component)
            .ok_or_else(|| Error::UnsupportedGeometry(format!("basis index {idx} names a missing component")))?;
        if comp.offset + comp.local(label.mode, label.fiber) != idx {
            return Err(Error::UnsupportedGeometry(format!(
                "basis index {idx} is not in Fourier order"
            )));
        }
        let target = mirror_index(comp, idx, label.mode, label.fiber)?;
        mode_map[idx] = target;
        components[label.component].push(idx);
        let s = signs[label.component].value() as f64;
        let f = comp.fiber.dim();
        let base = target - label.fiber;
        for b in 0..f {
            matrix[(base + b, idx)] = factors[label.component][(b, label.fiber)] * s;
        }
    }
    let raw = InvolutionLift {
        mode_map,
        fiber_factors: factors,
        signs: signs.to_vec(),
        components,
        sectors: model.sectors.clone(),
        matrix,
    };
    let lift = normalize_lift(raw)?;
    verify_lift(model, &lift)?;
    Ok(lift)
}

/// [`build_lift`] with every sign `+`.
pub fn build_lift_plus(model: &DiracModel) -> Result<InvolutionLift> {
    build_lift(model, &vec![Sign::Plus; model.components.len()])
}

/// Check both lift identities against `model`.
pub fn verify_lift(model: &DiracModel, lift: &InvolutionLift) -> Result<()> {
    if lift.dim() != model.dim() {
        return Err(Error::Size(format!("lift size {} vs model size {}", lift.dim(), model.dim())));
    }
    let sq = lift.square_defect();
    if sq > LIFT_TOL {
        return Err(Error::LiftInconsistency(format!("τ̃² − 1 has norm {sq:e}")));
    }
    let anti = lift.anticommutator(&model.matrix);
    if anti > LIFT_TOL * model.matrix.norm().max(1.0) {
        return Err(Error::LiftInconsistency(format!("τ̃D + Dτ̃ has norm {anti:e}")));
    }
    Ok(())
}

/// Rescale a candidate whose square is a scalar `c` on each component so
/// that it squares to the identity.
pub fn normalize_lift(raw: InvolutionLift) -> Result<InvolutionLift> {
    let mut lift = raw;
    for (c, idx) in lift.components.clone().iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let block = lift.matrix.select_rows(idx).select_columns(idx);
        let outside = lift.matrix.select_columns(idx).norm() - block.norm();
        if outside.abs() > LIFT_TOL * block.norm().max(1.0) {
            return Err(Error::LiftInconsistency(format!("candidate mixes component {c} with others")));
        }
        let squares: Vec<CMat> = if lift.sector_leak(&lift.matrix) == 0.0 {
            let mine: std::collections::HashSet<usize> = idx.iter().copied().collect();
            lift.sectors
                .iter()
                .map(|sec| {
                    let sub: Vec<usize> = sec.iter().copied().filter(|i| mine.contains(i)).collect();
                    let b = lift.matrix.select_rows(&sub).select_columns(&sub);
                    &b * &b
                })
                .collect()
        } else {
            vec![&block * &block]
        };
        let trace: Complex64 = squares.iter().map(|q| q.trace()).sum();
        let scalar = trace / Complex64::new(idx.len() as f64, 0.0);
        let defect = squares
            .iter()
            .map(|q| (q - CMat::identity(q.nrows(), q.nrows()) * scalar).norm_squared())
            .sum::<f64>()
            .sqrt();
        if defect > LIFT_TOL * scalar.norm().max(1.0) || scalar.norm() < LIFT_TOL {
            return Err(Error::LiftInconsistency(format!(
                "candidate squared is not a nonzero scalar on component {c} (defect {defect:e})"
            )));
        }
        let root = scalar.sqrt();
        if (root - Complex64::new(1.0, 0.0)).norm() < f64::EPSILON {
            continue;
        }
        let inv = Complex64::new(1.0, 0.0) / root;
        for &j in idx {
            for &i in idx {
                lift.matrix[(i, j)] *= inv;
            }
        }
        if let Some(f) = lift.fiber_factors.get_mut(c) {
            *f *= inv;
        }
    }
    Ok(lift)
}

/// Orthonormal `±1` eigenbases of `τ̃`, one pair per sector.
#[derive(Debug, Clone)]
pub struct SplitSpaces {
    pub sectors: Vec<Vec<usize>>,
    /// Columns in sector coordinates.
    pub plus: Vec<CMat>,
    pub minus: Vec<CMat>,
    pub total_dim: usize,
}

impl SplitSpaces {
    pub fn dim_plus(&self) -> usize {
        self.plus.iter().map(|m| m.ncols()).sum()
    }

    pub fn dim_minus(&self) -> usize {
        self.minus.iter().map(|m| m.ncols()).sum()
    }

    fn embed(&self, parts: &[CMat]) -> CMat {
        let cols: usize = parts.iter().map(|m| m.ncols()).sum();
        let mut out = CMat::zeros(self.total_dim, cols);
        let mut c0 = 0;
        for (s, m) in parts.iter().enumerate() {
            for (r, &i) in self.sectors[s].iter().enumerate() {
                for c in 0..m.ncols() {
                    out[(i, c0 + c)] = m[(r, c)];
                }
            }
            c0 += m.ncols();
        }
        out
    }

    /// Basis of `S⁺` as columns of the full space.
    pub fn basis_plus(&self) -> CMat {
        self.embed(&self.plus)
    }

    pub fn basis_minus(&self) -> CMat {
        self.embed(&self.minus)
    }

    /// The same splitting with the roles of `S⁺` and `S⁻` exchanged.
    pub fn swapped(&self) -> SplitSpaces {
        SplitSpaces {
            sectors: self.sectors.clone(),
            plus: self.minus.clone(),
            minus: self.plus.clone(),
            total_dim: self.total_dim,
        }
    }
}

pub fn split_spinors(lift: &InvolutionLift) -> Result<SplitSpaces> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for s in 0..lift.sectors.len() {
        let t = lift.restrict(&lift.matrix, s);
        linop::check_self_adjoint(&t, 1e-8).map_err(|_| {
            Error::LiftInconsistency(format!("lift is not self-adjoint on sector {s}"))
        })?;
        let (values, vectors) = eigh(&t);
        let (mut p, mut m) = (Vec::new(), Vec::new());
        for (j, &l) in values.iter().enumerate() {
            if (l - 1.0).abs() <= 1e-8 {
                p.push(j);
            } else if (l + 1.0).abs() <= 1e-8 {
                m.push(j);
            } else {
                return Err(Error::LiftInconsistency(format!("lift has eigenvalue {l} on sector {s}")));
            }
        }
        plus.push(vectors.select_columns(&p));
        minus.push(vectors.select_columns(&m));
    }
    Ok(SplitSpaces {
        sectors: lift.sectors.clone(),
        plus,
        minus,
        total_dim: lift.dim(),
    })
}

/// Matrices of `D : S⁺ → S⁻`, one per sector.
pub fn compressed_blocks(model: &DiracModel, split: &SplitSpaces, tol: f64) -> Result<Vec<CMat>> {
    if split.sectors != model.sectors || split.total_dim != model.dim() {
        return Err(Error::Size("splitting was built for a different model".into()));
    }
    let scale = model.matrix.norm().max(1.0);
    let mut blocks = Vec::with_capacity(split.sectors.len());
    let mut residual = 0.0f64;
    for s in 0..split.sectors.len() {
        let d = model.restrict(&model.matrix, s);
        let image = &d * &split.plus[s];
        let m = split.minus[s].adjoint() * &image;
        residual = residual.max((image - &split.minus[s] * &m).norm());
        blocks.push(m);
    }
    if residual > tol * scale {
        return Err(Error::SplittingConsistency { residual });
    }
    Ok(blocks)
}

/// Index of `D : S⁺ → S⁻`.
pub fn chiral_index(model: &DiracModel, split: &SplitSpaces, tol: f64) -> Result<IndexReport> {
    let blocks = compressed_blocks(model, split, tol)?;
    numerical_index_blocks(&blocks, tol)
}

/// `θ̂ = (τ̃, −τ̃)` on the domain and codomain copies, so that
/// `D θ_dom = θ_cod D`.
pub fn lefschetz_endomorphism(lift: &InvolutionLift) -> (CMat, CMat) {
    (lift.matrix.clone(), -&lift.matrix)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LefschetzMethod {
    Exact,
    Heat(f64),
}

/// `Tr θ̂|_Ker − Tr θ̂|_Coker` from kernel and cokernel bases, certified
/// integral and returned as an exact integer value.
fn lefschetz_exact(model: &DiracModel, lift: &InvolutionLift, tol: f64) -> Result<f64> {
    let blocks: Vec<CMat> = (0..model.sectors.len()).map(|s| model.restrict(&model.matrix, s)).collect();
    let report = numerical_index_blocks(&blocks, tol)?;
    let threshold = rank_threshold(report.sigma_max, tol);
    let (theta_dom, theta_cod) = lefschetz_endomorphism(lift);
    let mut total = Complex64::new(0.0, 0.0);
    for (s, d) in blocks.iter().enumerate() {
        let (ker, coker) = square_null_spaces(d, threshold);
        total += (ker.adjoint() * lift.restrict(&theta_dom, s) * &ker).trace();
        total -= (coker.adjoint() * lift.restrict(&theta_cod, s) * &coker).trace();
    }
    if total.im.abs() > 1e-8 {
        return Err(Error::Convention { imag: total.im });
    }
    // trace of an involution on finite spaces
    let rounded = total.re.round();
    if (total.re - rounded).abs() > LEFSCHETZ_TOL {
        return Err(Error::Consistency(format!("Lefschetz trace {} is not an integer", total.re)));
    }
    Ok(rounded)
}

/// `Tr(θ̂ e^{−tD²})` as a supertrace over domain and codomain copies.
fn lefschetz_heat(model: &DiracModel, lift: &InvolutionLift, t: f64) -> Result<f64> {
    let (theta_dom, theta_cod) = lefschetz_endomorphism(lift);
    let theta = theta_dom - theta_cod;
    let mut total = 0.0;
    for s in 0..model.sectors.len() {
        total += heat_trace(&model.restrict(&model.matrix, s), &lift.restrict(&theta, s), t)?;
    }
    Ok(total)
}

/// Lefschetz number of `θ̂` on `D`. The heat method is cross-checked
/// against the exact one.
pub fn lefschetz_number(model: &DiracModel, lift: &InvolutionLift, method: LefschetzMethod, tol: f64) -> Result<f64> {
    verify_lift(model, lift)?;
    let exact = lefschetz_exact(model, lift, tol)?;
    match method {
        LefschetzMethod::Exact => Ok(exact),
        LefschetzMethod::Heat(t) => {
            let heat = lefschetz_heat(model, lift, t)?;
            if (heat - exact).abs() > LEFSCHETZ_TOL {
                return Err(Error::Consistency(format!(
                    "heat Lefschetz number {heat} at t = {t} differs from exact value {exact}"
                )));
            }
            Ok(heat)
        }
    }
}

/// One fixed component `F` with its contribution `index D_F / 2^{r+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedComponent {
    pub label: String,
    pub r: u32,
    pub index_df: i64,
    pub contribution: Ratio<i64>,
}

impl FixedComponent {
    pub fn new(label: impl Into<String>, index_df: i64, r: u32) -> Result<FixedComponent> {
        if r > 60 {
            return Err(Error::InvalidArgument(format!("codimension parameter r = {r} too large")));
        }
        Ok(FixedComponent {
            label: label.into(),
            r,
            index_df,
            contribution: Ratio::new(index_df, 1i64 << (r + 1)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSum {
    pub components: Vec<FixedComponent>,
    pub total: Ratio<i64>,
}

impl FixedPointSum {
    pub fn from_components(components: Vec<FixedComponent>) -> FixedPointSum {
        let total = components.iter().map(|c| c.contribution).sum();
        FixedPointSum { components, total }
    }
}

/// Fixed-point sum from explicit `(index D_F, r)` data.
pub fn fixed_point_rhs_explicit(data: &[(i64, u32)]) -> Result<FixedPointSum> {
    let comps = data
        .iter()
        .enumerate()
        .map(|(i, &(idx, r))| FixedComponent::new(format!("F{i}"), idx, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(FixedPointSum::from_components(comps))
}

/// Fixed-point sum of the reflection on a circle or product model: each
/// component has fixed copies of `Y` at `x = 0` and `x = ℓ/2`, both with
/// `r = 0`, oriented by the lift sign.
pub fn fixed_point_rhs(model: &DiracModel, signs: &[Sign]) -> Result<FixedPointSum> {
    check_reflectable(model)?;
    if signs.len() != model.components.len() {
        return Err(Error::Size(format!(
            "{} signs given for {} components",
            signs.len(),
            model.components.len()
        )));
    }
    let mut comps = Vec::new();
    for (i, (c, sign)) in model.components.iter().zip(signs).enumerate() {
        let idx = sign.value() * analytic_index(&c.fiber)?;
        for at in ["x=0", "x=l/2"] {
            comps.push(FixedComponent::new(format!("c{i}:{at}:{}", c.fiber.label), idx, 0)?);
        }
    }
    Ok(FixedPointSum::from_components(comps))
}

#[derive(Debug, Clone)]
pub struct TheoremAReport {
    pub lhs: IndexReport,
    pub rhs_components: Vec<FixedComponent>,
    pub rhs_total: Ratio<i64>,
    pub matches: bool,
    pub lefschetz_exact: f64,
    /// `(t, heat Lefschetz number)`.
    pub lefschetz_heat: Vec<(f64, f64)>,
}

pub fn verify_theorem_a(model: &DiracModel, tol: f64) -> Result<TheoremAReport> {
    verify_theorem_a_with_signs(model, &vec![Sign::Plus; model.components.len()], tol)
}

pub fn verify_theorem_a_with_signs(model: &DiracModel, signs: &[Sign], tol: f64) -> Result<TheoremAReport> {
    let lift = build_lift(model, signs).stage("build_lift")?;
    let split = split_spinors(&lift).stage("split_spinors")?;
    let lhs = chiral_index(model, &split, tol).stage("chiral_index")?;
    let rhs = fixed_point_rhs(model, signs).stage("fixed_point_rhs")?;
    let lefschetz_exact = lefschetz_number(model, &lift, LefschetzMethod::Exact, tol).stage("lefschetz_number")?;
    let mut lefschetz_heat = Vec::new();
    for t in HEAT_TIMES {
        let h = lefschetz_number(model, &lift, LefschetzMethod::Heat(t), tol).stage("lefschetz_number")?;
        lefschetz_heat.push((t, h));
    }
    let index = lhs.index_from_kernels();
    if (lefschetz_exact - 2.0 * index as f64).abs() > LEFSCHETZ_TOL {
        return Err(Error::Consistency(format!(
            "Lefschetz number {lefschetz_exact} is not twice the index {index}"
        ))
        .at("lefschetz_number"));
    }
    let matches = rhs.total.is_integer() && rhs.total == Ratio::from_integer(index);
    Ok(TheoremAReport {
        lhs,
        rhs_components: rhs.components,
        rhs_total: rhs.total,
        matches,
        lefschetz_exact,
        lefschetz_heat,
    })
}
