//! Jacobi-based spectral routines and the small set of decompositions the
//! rest of the crate needs: Hermitian eigensystems, singular values,
//! numerical ranges, PSD inverses and partial traces.

use crate::error::{Error, Result};
use crate::numeric::matrix::CMatrix;
use crate::scalar::{creal, czero, Cx, Real};
use crate::tolerance::ToleranceConfig;

const MAX_SWEEPS: usize = 80;

/// Parameters of the unitary 2x2 rotation that diagonalises
/// `[[a, z], [conj(z), b]]`.
///
/// The rotation acts on columns `p, q` as
/// `U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]` with `z = |z| e^{i phi}`.
struct Rotation<T: Real> {
    c: T,
    s: T,
    /// `e^{-i phi}`
    phase: Cx<T>,
}

impl<T: Real> Rotation<T> {
    fn new(a: T, b: T, z: Cx<T>) -> Self {
        let az = z.norm();
        let phase = z.conj() / az;
        let zeta = (b - a) / (az + az);
        let t = if zeta == T::zero() {
            T::one()
        } else {
            zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
        };
        let c = T::one() / (T::one() + t * t).sqrt();
        Self { c, s: t * c, phase }
    }

    /// `(x_p, x_q) <- (x_p, x_q) U`, i.e. a right multiplication on a row pair.
    #[inline]
    fn right(&self, xp: Cx<T>, xq: Cx<T>) -> (Cx<T>, Cx<T>) {
        let u_qp = -self.phase * self.s;
        let u_qq = self.phase * self.c;
        (xp * self.c + xq * u_qp, xp * self.s + xq * u_qq)
    }

    /// `(x_p, x_q) <- U^dagger (x_p, x_q)`, a left multiplication on a column pair.
    #[inline]
    fn left_adjoint(&self, xp: Cx<T>, xq: Cx<T>) -> (Cx<T>, Cx<T>) {
        let u_qp = -self.phase * self.s;
        let u_qq = self.phase * self.c;
        (xp * self.c + xq * u_qp.conj(), xp * self.s + xq * u_qq.conj())
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Eigenvalues are returned in ascending order together with the
/// unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut w = a.hermitian_part();
    let mut v = CMatrix::<T>::identity(n);
    let scale = w.frobenius_norm();
    if scale == T::zero() || n == 1 {
        let vals = (0..n).map(|i| w[(i, i)].re).collect();
        return Ok((vals, v));
    }
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let z = w[(p, q)];
                let az = z.norm();
                if az == T::zero() || az <= eps * eps * scale {
                    continue;
                }
                let rot = Rotation::new(w[(p, p)].re, w[(q, q)].re, z);
                for r in 0..n {
                    let (x, y) = rot.right(w[(r, p)], w[(r, q)]);
                    w[(r, p)] = x;
                    w[(r, q)] = y;
                }
                for r in 0..n {
                    let (x, y) = rot.left_adjoint(w[(p, r)], w[(q, r)]);
                    w[(p, r)] = x;
                    w[(q, r)] = y;
                }
                w[(p, q)] = czero();
                w[(q, p)] = czero();
                w[(p, p)] = creal(w[(p, p)].re);
                w[(q, q)] = creal(w[(q, q)].re);
                for r in 0..n {
                    let (x, y) = rot.right(v[(r, p)], v[(r, q)]);
                    v[(r, p)] = x;
                    v[(r, q)] = y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w[(i, i)]
            .re
            .partial_cmp(&w[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| w[(i, i)].re).collect();
    Ok((vals, v.select_columns(&order)))
}

/// Column set after one-sided Jacobi orthogonalisation: mutually orthogonal
/// columns whose norms are the singular values of the input.
fn orthogonalized_columns<T: Real>(x: &CMatrix<T>) -> Vec<Vec<Cx<T>>> {
    let (rows, cols) = x.shape();
    let mut g: Vec<Vec<Cx<T>>> = (0..cols).map(|j| x.column(j)).collect();
    let fro2 = x.frobenius_norm().powi(2);
    if fro2 == T::zero() {
        return g;
    }
    let eps = T::epsilon();
    let floor = eps * eps * fro2;
    let mut norms: Vec<T> = g.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let mut gamma = czero::<T>();
                for (x, y) in g[p].iter().zip(&g[q]) {
                    gamma += x.conj() * *y;
                }
                if gamma.norm() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let rot = Rotation::new(alpha, beta, gamma);
                let (lo, hi) = g.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                let mut np = T::zero();
                let mut nq = T::zero();
                for r in 0..rows {
                    let (a, b) = rot.right(cp[r], cq[r]);
                    cp[r] = a;
                    cq[r] = b;
                    np += a.norm_sqr();
                    nq += b.norm_sqr();
                }
                norms[p] = np;
                norms[q] = nq;
            }
        }
        if !rotated {
            break;
        }
    }
    g
}

fn column_norm<T: Real>(c: &[Cx<T>]) -> T {
    c.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(x: &CMatrix<T>) -> Vec<T> {
    let g = if x.cols() > x.rows() {
        orthogonalized_columns(&x.adjoint())
    } else {
        orthogonalized_columns(x)
    };
    let mut s: Vec<T> = g.iter().map(|c| column_norm(c)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Spectral (operator) norm.
pub fn op_norm<T: Real>(x: &CMatrix<T>) -> T {
    if x.rows() == 0 || x.cols() == 0 {
        return T::zero();
    }
    singular_values(x).first().copied().unwrap_or_else(T::zero)
}

/// Number of singular values above `rank_rel_tol * sigma_max`.
pub fn numerical_rank<T: Real>(x: &CMatrix<T>, tol: &ToleranceConfig) -> usize {
    let s = singular_values(x);
    let Some(&smax) = s.first() else { return 0 };
    if smax == T::zero() {
        return 0;
    }
    let cut = T::lit(tol.rank_rel_tol) * smax;
    s.iter().filter(|&&v| v > cut).count()
}

/// Isometry whose columns span the numerical column space of `columns`.
///
/// Columns are ordered by decreasing singular value. An all-zero input yields
/// a matrix with zero columns.
pub fn orthonormal_range<T: Real>(columns: &CMatrix<T>, tol: &ToleranceConfig) -> CMatrix<T> {
    range_above(columns, |smax| T::lit(tol.rank_rel_tol) * smax)
}

fn range_above<T: Real>(columns: &CMatrix<T>, cutoff: impl Fn(T) -> T) -> CMatrix<T> {
    let rows = columns.rows();
    let g = orthogonalized_columns(columns);
    let mut ranked: Vec<(T, usize)> = g.iter().enumerate().map(|(j, c)| (column_norm(c), j)).collect();
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let smax = ranked.first().map_or(T::zero(), |r| r.0);
    if smax == T::zero() {
        return CMatrix::zeros(rows, 0);
    }
    let cut = cutoff(smax);
    let kept: Vec<(T, usize)> = ranked.into_iter().filter(|r| r.0 > cut).collect();
    let mut out = CMatrix::zeros(rows, kept.len());
    for (k, (s, j)) in kept.iter().enumerate() {
        for r in 0..rows {
            out[(r, k)] = g[*j][r] / *s;
        }
    }
    out
}

/// Isometry onto the orthogonal complement of the range of the isometry `b`.
pub fn orthogonal_complement<T: Real>(b: &CMatrix<T>) -> CMatrix<T> {
    let n = b.rows();
    let p = b.matmul(&b.adjoint());
    let q = &CMatrix::identity(n) - &p;
    // I - p has spectrum {0, 1}; a relative cut would keep rounding noise when
    // b is unitary.
    range_above(&q, |_| T::lit(0.5))
}

/// `||B^dagger B - I||` in operator norm.
pub fn isometry_residual<T: Real>(b: &CMatrix<T>) -> T {
    let g = b.adjoint_mul(b);
    op_norm(&(&g - &CMatrix::identity(b.cols())))
}

fn check_hermitian<T: Real>(m: &CMatrix<T>, tol: &ToleranceConfig) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let res = m.hermiticity_residual();
    let scale = T::one().max(m.frobenius_norm());
    if res > T::lit(tol.residual_tol) * scale {
        return Err(Error::NotHermitian(res.as_f64()));
    }
    Ok(())
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function<T: Real>(m: &CMatrix<T>, f: impl Fn(T) -> T) -> Result<CMatrix<T>> {
    let (vals, v) = hermitian_eigen(m)?;
    let n = vals.len();
    let mut scaled = v.clone();
    for j in 0..n {
        let fj = f(vals[j]);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    Ok(scaled.matmul(&v.adjoint()))
}

fn positive_spectrum<T: Real>(m: &CMatrix<T>, tol: &ToleranceConfig) -> Result<()> {
    check_hermitian(m, tol)?;
    let (vals, _) = hermitian_eigen(m)?;
    let lmax = vals.last().copied().unwrap_or_else(T::zero);
    let lmin = vals.first().copied().unwrap_or_else(T::zero);
    if lmax.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || lmin <= T::lit(tol.rank_rel_tol) * lmax {
        let ratio = if lmax > T::zero() { (lmin / lmax).as_f64() } else { 0.0 };
        return Err(Error::SingularCorrelation { level: None, ratio });
    }
    Ok(())
}

/// Inverse of a Hermitian positive definite matrix.
///
/// Fails with [`Error::SingularCorrelation`] when the smallest eigenvalue is
/// below `rank_rel_tol` times the largest.
pub fn psd_inverse<T: Real>(m: &CMatrix<T>, tol: &ToleranceConfig) -> Result<CMatrix<T>> {
    positive_spectrum(m, tol)?;
    let inv = hermitian_function(m, |x| T::one() / x)?;
    if !inv.is_finite() {
        return Err(Error::NonFinite("psd_inverse"));
    }
    Ok(inv)
}

/// `m^{-1/2}` for Hermitian positive definite `m`.
pub fn psd_inverse_sqrt<T: Real>(m: &CMatrix<T>, tol: &ToleranceConfig) -> Result<CMatrix<T>> {
    positive_spectrum(m, tol)?;
    hermitian_function(m, |x| T::one() / x.sqrt())
}

/// `m^{1/2}` for Hermitian positive semidefinite `m`; tiny negative
/// eigenvalues are clamped to zero.
pub fn psd_sqrt<T: Real>(m: &CMatrix<T>, tol: &ToleranceConfig) -> Result<CMatrix<T>> {
    check_hermitian(m, tol)?;
    hermitian_function(m, |x| x.max(T::zero()).sqrt())
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals.first().copied().unwrap_or_else(T::zero))
}

/// Partial trace over the right tensor factor of `H ⊗ K`.
pub fn partial_trace_right<T: Real>(m: &CMatrix<T>, dim_h: usize, dim_k: usize) -> Result<CMatrix<T>> {
    let n = dim_h * dim_k;
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over {dim_h}x{dim_k}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(CMatrix::from_fn(dim_h, dim_h, |a, b| {
        let mut acc = czero();
        for k in 0..dim_k {
            acc += m[(a * dim_k + k, b * dim_k + k)];
        }
        acc
    }))
}

/// Partial trace over the left tensor factor of `H ⊗ K`.
pub fn partial_trace_left<T: Real>(m: &CMatrix<T>, dim_h: usize, dim_k: usize) -> Result<CMatrix<T>> {
    let n = dim_h * dim_k;
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over {dim_h}x{dim_k}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(CMatrix::from_fn(dim_k, dim_k, |a, b| {
        let mut acc = czero();
        for h in 0..dim_h {
            acc += m[(h * dim_k + a, h * dim_k + b)];
        }
        acc
    }))
}

/// Applies `q^{⊗m}` to every column of `x` (which has `n^m` rows) without
/// forming the Kronecker power.
pub fn apply_kron_power<T: Real>(q: &CMatrix<T>, m: usize, x: &CMatrix<T>) -> CMatrix<T> {
    let n = q.rows();
    assert!(q.is_square());
    let total = n.pow(m as u32);
    assert_eq!(x.rows(), total, "apply_kron_power row mismatch");
    let mut cur = x.clone();
    let mut next = CMatrix::zeros(total, x.cols());
    // Factor `f` (0 = most significant) has stride n^(m-1-f).
    for f in 0..m {
        let stride = n.pow((m - 1 - f) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                for a in 0..n {
                    let row_out = base + a * stride + off;
                    for c in 0..x.cols() {
                        let mut acc = czero();
                        for b in 0..n {
                            acc += q[(a, b)] * cur[(base + b * stride + off, c)];
                        }
                        next[(row_out, c)] = acc;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}
