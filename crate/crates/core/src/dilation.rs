//! Stinespring isometries, the unitary one-step dilation, complementary
//! channels and covariant symbols.
//!
//! Tensor products are ordered system first: `H_0 ⊗ GH_m` has row index
//! `x * d_m + a`.

use crate::channel::KrausSet;
use crate::error::{Error, Result};
use crate::numeric::{min_eigenvalue, orthogonal_complement, partial_trace_left, CMatrix};
use crate::scalar::Real;
use crate::subproduct::SubproductSystem;

#[derive(Debug, Clone)]
pub struct DilationBundle<T: Real> {
    level: usize,
    isometry: CMatrix<T>,
    unitary: Option<CMatrix<T>>,
    reference_index: usize,
}

impl<T: Real> DilationBundle<T> {
    pub fn level(&self) -> usize {
        self.level
    }

    /// `V_m : H_0 → H_0 ⊗ GH_m`.
    pub fn isometry(&self) -> &CMatrix<T> {
        &self.isometry
    }

    /// `W` on `H_0 ⊗ GH` (level 1 only).
    pub fn unitary(&self) -> Option<&CMatrix<T>> {
        self.unitary.as_ref()
    }

    /// Index of the bath vector `e_1` the dilation starts from.
    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    fn env_dim(&self) -> usize {
        self.isometry.rows() / self.isometry.cols()
    }

    /// `<e_1| W† (A ⊗ I) W |e_1>`, the compression that reproduces `Φ(A)`.
    pub fn compress(&self, a: &CMatrix<T>) -> Result<CMatrix<T>> {
        let w = self
            .unitary
            .as_ref()
            .ok_or_else(|| Error::DimensionMismatch("bundle carries no unitary".into()))?;
        let d = self.isometry.cols();
        let n = self.env_dim();
        if a.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("observable must be {d}x{d}")));
        }
        let big = a.kron(&CMatrix::identity(n));
        let full = w.adjoint_mul(&big.matmul(w));
        let e = self.reference_index;
        Ok(CMatrix::from_fn(d, d, |x, y| full[(x * n + e, y * n + e)]))
    }

    /// `W (ρ ⊗ |e_1><e_1|) W†` on `H_0 ⊗ GH`.
    pub fn evolve_joint(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        let w = self
            .unitary
            .as_ref()
            .ok_or_else(|| Error::DimensionMismatch("bundle carries no unitary".into()))?;
        let n = self.env_dim();
        let bath = CMatrix::unit(n, self.reference_index, self.reference_index);
        let joint = rho.kron(&bath);
        Ok(w.matmul(&joint).matmul(&w.adjoint()))
    }
}

/// `V_m x = Σ_{|j| = m} (K_j x) ⊗ (B_m† e_j)`.
pub fn stinespring_isometry<T: Real>(s: &SubproductSystem<T>, m: usize) -> Result<CMatrix<T>> {
    let level = s.level(m)?;
    let d = s.system_dim();
    let dm = level.dim();
    let ops = level.ops();
    Ok(CMatrix::from_fn(d * dm, d, |row, y| {
        let (x, a) = (row / dm, row % dm);
        ops[a][(x, y)]
    }))
}

pub fn stinespring_bundle<T: Real>(s: &SubproductSystem<T>, m: usize) -> Result<DilationBundle<T>> {
    Ok(DilationBundle {
        level: m,
        isometry: stinespring_isometry(s, m)?,
        unitary: None,
        reference_index: 0,
    })
}

/// Unitary `W` on `C^d ⊗ C^n` acting as `V_1` on the slice `x ⊗ e_1`, completed
/// by an orthonormal basis of the complement of `range(V_1)`.
pub fn unitary_dilation<T: Real>(k: &KrausSet<T>) -> Result<DilationBundle<T>> {
    let report = k.validate();
    if !report.valid {
        return Err(Error::InvalidKraus(format!(
            "unitality residual {:e} exceeds {:e}",
            report.unitality_residual,
            k.tol().residual_tol
        )));
    }
    if !report.is_minimal() {
        return Err(Error::NotMinimal {
            rank: report.independence_rank,
            n: report.n,
        });
    }
    let (d, n) = (k.dim(), k.n());
    let ops = k.ops();
    let v = CMatrix::from_fn(d * n, d, |row, y| ops[row % n][(row / n, y)]);
    let comp = orthogonal_complement(&v);
    if comp.cols() != d * n - d {
        return Err(Error::InvalidKraus(format!(
            "V_1 complement has dimension {}, expected {}",
            comp.cols(),
            d * n - d
        )));
    }
    let mut w = CMatrix::zeros(d * n, d * n);
    let mut next = 0;
    for col in 0..d * n {
        let (x, g) = (col / n, col % n);
        for row in 0..d * n {
            w[(row, col)] = if g == 0 { v[(row, x)] } else { comp[(row, next)] };
        }
        if g != 0 {
            next += 1;
        }
    }
    Ok(DilationBundle {
        level: 1,
        isometry: v,
        unitary: Some(w),
        reference_index: 0,
    })
}

fn check_density<T: Real>(rho: &CMatrix<T>, d: usize, residual_tol: f64) -> Result<()> {
    if rho.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("state must be {d}x{d}")));
    }
    let tol = T::lit(residual_tol);
    if rho.hermiticity_residual() > tol {
        return Err(Error::InvalidState("state is not Hermitian".into()));
    }
    if (rho.trace().re - T::one()).abs() > tol {
        return Err(Error::InvalidState(format!("trace {} != 1", rho.trace().re)));
    }
    if min_eigenvalue(rho)? < -tol {
        return Err(Error::InvalidState("state is not positive semidefinite".into()));
    }
    Ok(())
}

/// Complementary channel output: the `n × n` matrix with entries
/// `Tr(ρ K_k† K_j)` at position `(j, k)`.
pub fn complementary_state<T: Real>(k: &KrausSet<T>, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    check_density(rho, k.dim(), k.tol().residual_tol)?;
    let ops = k.ops();
    let tails: Vec<CMatrix<T>> = ops.iter().map(|op| op.matmul(rho)).collect();
    Ok(CMatrix::from_fn(k.n(), k.n(), |j, kk| ops[kk].hs_inner(&tails[j])))
}

/// The same output obtained by tracing `H_0` out of `W (ρ ⊗ |e_1><e_1|) W†`.
pub fn complementary_state_traced<T: Real>(bundle: &DilationBundle<T>, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    let joint = bundle.evolve_joint(rho)?;
    let d = bundle.isometry().cols();
    partial_trace_left(&joint, d, bundle.env_dim())
}

fn check_level_operator<T: Real>(s: &SubproductSystem<T>, m: usize, x: &CMatrix<T>) -> Result<()> {
    let dm = s.dim(m)?;
    if x.shape() != (dm, dm) {
        return Err(Error::DimensionMismatch(format!(
            "level-{m} operator must be {dm}x{dm}, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// Covariant symbol `ς^(m)(X) = Σ_{|j|=|k|=m} X̃_{jk} K_j† K_k` with
/// `X̃ = B_m X B_m†`, summed over explicit words.
pub fn covariant_symbol<T: Real>(
    k: &KrausSet<T>,
    s: &SubproductSystem<T>,
    m: usize,
    x: &CMatrix<T>,
) -> Result<CMatrix<T>> {
    check_level_operator(s, m, x)?;
    let b = s.basis(m)?;
    let lifted = b.matmul(x).matmul(&b.adjoint());
    let words = k.word_table(m)?;
    let words = words.as_slice();
    let d = k.dim();
    let mut out = CMatrix::zeros(d, d);
    for (j, wj) in words.iter().enumerate() {
        let mut inner = CMatrix::zeros(d, d);
        for (kk, wk) in words.iter().enumerate() {
            let c = lifted[(j, kk)];
            if c.re != T::zero() || c.im != T::zero() {
                inner.axpy(c, wk);
            }
        }
        out = &out + &wj.adjoint_mul(&inner);
    }
    Ok(out)
}

/// `V_m† (I ⊗ X) V_m`.
pub fn covariant_symbol_dilated<T: Real>(s: &SubproductSystem<T>, m: usize, x: &CMatrix<T>) -> Result<CMatrix<T>> {
    check_level_operator(s, m, x)?;
    let v = stinespring_isometry(s, m)?;
    let big = CMatrix::identity(s.system_dim()).kron(x);
    Ok(v.adjoint_mul(&big.matmul(&v)))
}
