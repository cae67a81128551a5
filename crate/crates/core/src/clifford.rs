//! Complex Clifford modules with `c(e)² = −1`.
//!
//! Generators are skew-adjoint, so `Σ c(eⁱ) ∂ᵢ` is self-adjoint. They are
//! built by the usual recursive tensor construction on Hermitian gamma
//! matrices `γⱼ` (`γⱼ² = 1`) and set `c(eʲ) = i γⱼ`:
//!
//! * odd `n = 2m + 1`: reuse the `2m` generators and append the chirality
//!   of the even module;
//! * even `n = 2m + 2`: tensor the odd generators with `σx` and append
//!   `1 ⊗ σy`.

use crate::{CMat, Error, Result, Sign};
use num_complex::Complex64;

/// Largest supported dimension (spinor modules of size `2^8`).
pub const MAX_DIM: usize = 16;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordRep {
    pub dim: usize,
    /// `c(e¹), …, c(eⁿ)`.
    pub generators: Vec<CMat>,
    /// `c(ω) = c(e¹)⋯c(eⁿ)`.
    pub volume: CMat,
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()])
}

fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[0.0.into(), -I, I, 0.0.into()])
}

fn product(mats: &[CMat], size: usize) -> CMat {
    mats.iter().fold(CMat::identity(size, size), |acc, m| acc * m)
}

/// `i^k` for integer `k`.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

impl CliffordRep {
    /// The zero-dimensional module: a single spinor of positive chirality.
    pub fn point() -> CliffordRep {
        CliffordRep {
            dim: 0,
            generators: Vec::new(),
            volume: CMat::identity(1, 1),
        }
    }

    /// Spinor module size `2^⌊n/2⌋`.
    pub fn spinor_dim(&self) -> usize {
        1 << (self.dim / 2)
    }

    /// Largest defect `‖c(eⁱ)c(eʲ) + c(eʲ)c(eⁱ) + 2δⁱʲ‖` over all pairs.
    pub fn anticommutator_defect(&self) -> f64 {
        let s = self.spinor_dim();
        let mut worst: f64 = 0.0;
        for (i, a) in self.generators.iter().enumerate() {
            for (j, b) in self.generators.iter().enumerate() {
                let mut m = a * b + b * a;
                if i == j {
                    m += CMat::identity(s, s) * Complex64::new(2.0, 0.0);
                }
                worst = worst.max(m.norm());
            }
        }
        worst
    }
}

/// Hermitian gamma matrices in dimension `n`, deterministic.
fn gammas(n: usize) -> Vec<CMat> {
    if n == 1 {
        return vec![CMat::identity(1, 1)];
    }
    let prev = gammas(n - 1);
    if n.is_multiple_of(2) {
        let size = prev[0].nrows();
        let mut out: Vec<CMat> = prev.iter().map(|g| g.kronecker(&pauli_x())).collect();
        out.push(CMat::identity(size, size).kronecker(&pauli_y()));
        out
    } else {
        // Chirality of the even module, Γ = i^{3m} γ₁⋯γ₂ₘ.
        let m = (n - 1) / 2;
        let size = prev[0].nrows();
        let gamma = product(&prev, size) * i_pow(3 * m as i64);
        let mut out = prev;
        out.push(gamma);
        out
    }
}

pub fn build_clifford_rep(n: usize) -> Result<CliffordRep> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Size(format!(
            "Clifford dimension must lie in 1..={MAX_DIM}, got {n}"
        )));
    }
    let generators: Vec<CMat> = gammas(n).into_iter().map(|g| g * I).collect();
    let size = generators[0].nrows();
    let volume = product(&generators, size);
    Ok(CliffordRep {
        dim: n,
        generators,
        volume,
    })
}

/// `Γ = i^m c(ω)` for `dim = 2m`; the point module gives `Γ = 1`.
pub fn chirality(rep: &CliffordRep) -> Result<CMat> {
    if rep.dim % 2 == 1 {
        return Err(Error::Parity(rep.dim));
    }
    Ok(&rep.volume * i_pow((rep.dim / 2) as i64))
}

/// Fiber factor `± i^{r+1} c(e¹)⋯c(e^{2r+1})` of the reflection lift across
/// a fixed set of codimension `2r + 1`.
///
/// It squares to the identity, commutes with the normal generators
/// `c(e¹), …, c(e^{2r+1})` and anticommutes with the remaining ones, so the
/// lift `ψ(f; x) ↦ M ψ(f; −x)` anticommutes with the Dirac operator.
pub fn pin_lift_factor(r: usize, rep: &CliffordRep, sign: Sign) -> Result<CMat> {
    let k = 2 * r + 1;
    if k > rep.dim {
        return Err(Error::Size(format!(
            "pin lift factor with r = {r} needs {k} generators, module has {}",
            rep.dim
        )));
    }
    let s = rep.spinor_dim();
    let m = product(&rep.generators[..k], s);
    Ok(m * (i_pow(r as i64 + 1) * sign.value() as f64))
}
