//! The Stinespring subproduct system `GH_•` of a channel, its level
//! projections, the shifts on the truncated Φ-Fock space and the
//! inductive-limit maps `ι_{m,l}`.
//!
//! # Conventions
//!
//! A coefficient vector `c ∈ C^{n^m}` names the operator
//! `op(c) = Σ_j conj(c_j) K_j`, where `K_j = K_{j_1} ⋯ K_{j_m}`. Word
//! position `i` is tensor factor `i` of `GH^{⊗m}` (first letter most
//! significant). `GH_m` is the orthogonal complement of `{c : op(c) = 0}`;
//! the antilinear convention matches the identification of `GH` with the span
//! of the adjoints `K_k†`, so that `Σ_{jk} (p_m)_{jk} K_j† A K_k = Φ^m(A)`.
//!
//! Levels are built recursively inside `GH_{m-1} ⊗ GH`: if `b_1, …, b_{d}` is
//! the orthonormal basis of `GH_{m-1}` and `E_i = op(b_i)`, the candidates
//! `b_i ⊗ e_k` name the operators `E_i K_k`, and `GH_m` is the numerical row
//! space of the matrix stacking their entries. Only `d_{m-1} n` operator
//! products are formed per level.

use crate::channel::KrausSet;
use crate::error::{Error, Result};
use crate::numeric::{op_norm, orthonormal_range, CMatrix};
use crate::scalar::{cone, Cx, Real};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone)]
pub struct Level<T: Real> {
    /// `B_m`, an `n^m × d_m` isometry.
    basis: CMatrix<T>,
    /// `E_a = op(B_m e_a)`, one `d × d` operator per basis vector.
    ops: Vec<CMatrix<T>>,
    /// `C_m` with `B_m = (B_{m-1} ⊗ I_n) C_m`.
    refinement: CMatrix<T>,
}

impl<T: Real> Level<T> {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &CMatrix<T> {
        &self.basis
    }

    pub fn ops(&self) -> &[CMatrix<T>] {
        &self.ops
    }

    pub fn refinement(&self) -> &CMatrix<T> {
        &self.refinement
    }
}

#[derive(Debug, Clone)]
pub struct SubproductSystem<T: Real> {
    n: usize,
    system_dim: usize,
    kraus: Vec<CMatrix<T>>,
    levels: Vec<Level<T>>,
    tol: ToleranceConfig,
}

impl<T: Real> SubproductSystem<T> {
    /// Builds levels `0..=max_level` of the Stinespring subproduct system.
    ///
    /// Requires a valid minimal Kraus set and `n^max_level <= word_count_cap`.
    pub fn build(k: &KrausSet<T>, max_level: usize) -> Result<Self> {
        let tol = *k.tol();
        let report = k.validate();
        if !report.valid {
            return Err(Error::InvalidKraus(format!(
                "unitality residual {:e} exceeds {:e}",
                report.unitality_residual, tol.residual_tol
            )));
        }
        if !report.is_minimal() {
            return Err(Error::NotMinimal {
                rank: report.independence_rank,
                n: report.n,
            });
        }
        let n = k.n();
        tol.check_words(n, max_level)?;

        let one = CMatrix::identity(1);
        let mut levels = vec![Level {
            basis: one.clone(),
            ops: vec![CMatrix::identity(k.dim())],
            refinement: one,
        }];
        for _ in 1..=max_level {
            let next = next_level(levels.last().expect("level 0 exists"), k.ops(), &tol);
            levels.push(next);
        }
        Ok(Self {
            n,
            system_dim: k.dim(),
            kraus: k.ops().to_vec(),
            levels,
            tol,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn tol(&self) -> &ToleranceConfig {
        &self.tol
    }

    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(Level::dim).collect()
    }

    pub fn level(&self, m: usize) -> Result<&Level<T>> {
        self.levels.get(m).ok_or(Error::LevelOutOfRange {
            level: m,
            max: self.max_level(),
        })
    }

    pub fn dim(&self, m: usize) -> Result<usize> {
        Ok(self.level(m)?.dim())
    }

    pub fn basis(&self, m: usize) -> Result<&CMatrix<T>> {
        Ok(self.level(m)?.basis())
    }

    /// `p_m = B_m B_m†` on `GH^{⊗m}`.
    pub fn level_projection(&self, m: usize) -> Result<CMatrix<T>> {
        let b = self.basis(m)?;
        Ok(b.matmul(&b.adjoint()))
    }

    /// Level operators built from the rescaled Kraus operators `w_k K_k`,
    /// i.e. `op_w(B_m e_a) = Σ_j conj(B_{j a}) w_{j_1}⋯w_{j_m} K_j`.
    pub fn weighted_level_ops(&self, m: usize, weights: &[Cx<T>]) -> Result<Vec<CMatrix<T>>> {
        self.level(m)?;
        if weights.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} Kraus operators",
                weights.len(),
                self.n
            )));
        }
        let scaled: Vec<CMatrix<T>> = self
            .kraus
            .iter()
            .zip(weights)
            .map(|(k, &w)| k.scale_cx(w))
            .collect();
        let mut ops = vec![CMatrix::identity(self.system_dim)];
        for level in &self.levels[1..=m] {
            ops = refine_ops(&ops, &scaled, level.refinement());
        }
        Ok(ops)
    }

    /// `||p_{m+l}(I - p_m ⊗ p_l)||`.
    pub fn subproduct_residual(&self, m: usize, l: usize) -> Result<T> {
        let top = self.basis(m + l)?;
        let pair = self.basis(m)?.kron(self.basis(l)?);
        // ||p (I - q)|| = ||(I - q) B|| for the isometry B onto range(p).
        let inside = pair.matmul(&pair.adjoint_mul(top));
        Ok(op_norm(&(top - &inside)))
    }

    /// Largest subproduct residual over all splits `a + b = m`.
    pub fn max_split_residual(&self, m: usize) -> Result<T> {
        let mut worst = T::zero();
        for a in 0..=m {
            worst = worst.max(self.subproduct_residual(a, m - a)?);
        }
        Ok(worst)
    }

    fn check_letter(&self, k: usize) -> Result<()> {
        if k >= self.n {
            return Err(Error::IndexOutOfRange { index: k, n: self.n });
        }
        Ok(())
    }

    /// `S_k : GH_m → GH_{m+1}`, `ψ ↦ p_{m+1}(e_k ⊗ ψ)`, in level bases.
    pub fn shift_left(&self, k: usize, m: usize) -> Result<CMatrix<T>> {
        self.check_letter(k)?;
        let upper = self.basis(m + 1)?;
        let lower = self.basis(m)?;
        let block = lower.rows();
        let rows: Vec<usize> = (0..block).map(|i| k * block + i).collect();
        Ok(upper.select_rows(&rows).adjoint_mul(lower))
    }

    /// `R_k : GH_m → GH_{m+1}`, `ψ ↦ p_{m+1}(ψ ⊗ e_k)`, in level bases.
    pub fn shift_right(&self, k: usize, m: usize) -> Result<CMatrix<T>> {
        self.check_letter(k)?;
        let upper = self.basis(m + 1)?;
        let lower = self.basis(m)?;
        let rows: Vec<usize> = (0..lower.rows()).map(|i| i * self.n + k).collect();
        Ok(upper.select_rows(&rows).adjoint_mul(lower))
    }

    fn check_square_at(&self, a: &CMatrix<T>, m: usize) -> Result<()> {
        let dm = self.dim(m)?;
        if a.shape() != (dm, dm) {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, level {m} has dimension {dm}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }

    /// `ι_{m,l}(A) = Σ_{|r| = l-m} R_r A R_r†`.
    pub fn inductive_map(&self, a: &CMatrix<T>, m: usize, l: usize) -> Result<CMatrix<T>> {
        if l < m {
            return Err(Error::LevelOutOfRange { level: m, max: l });
        }
        self.level(l)?;
        self.check_square_at(a, m)?;
        let mut x = a.clone();
        for level in m..l {
            let dim = self.dim(level + 1)?;
            let mut next = CMatrix::zeros(dim, dim);
            for k in 0..self.n {
                let r = self.shift_right(k, level)?;
                next = &next + &r.matmul(&x).matmul(&r.adjoint());
            }
            x = next;
        }
        Ok(x)
    }

    /// `||ι_{m,l}(AB) - ι_{m,l}(A) ι_{m,l}(B)||`.
    pub fn multiplicativity_residual(&self, a: &CMatrix<T>, b: &CMatrix<T>, m: usize, l: usize) -> Result<T> {
        let ab = self.inductive_map(&a.matmul(b), m, l)?;
        let ia = self.inductive_map(a, m, l)?;
        let ib = self.inductive_map(b, m, l)?;
        Ok(op_norm(&(&ab - &ia.matmul(&ib))))
    }

    /// `||p_m - p'_m||` against another system with the same `n`.
    pub fn projection_distance(&self, other: &Self, m: usize) -> Result<T> {
        let b = self.basis(m)?;
        let c = other.basis(m)?;
        if b.rows() != c.rows() {
            return Err(Error::DimensionMismatch("systems over different GH".into()));
        }
        if b.cols() != c.cols() {
            return Ok(T::one());
        }
        // For equal ranks ||p - p'|| = ||(I - p') p|| = ||B - B'(B'† B)||.
        let off = b - &c.matmul(&c.adjoint_mul(b));
        Ok(op_norm(&off))
    }
}

fn candidate_ops<T: Real>(prev: &[CMatrix<T>], kraus: &[CMatrix<T>]) -> Vec<CMatrix<T>> {
    let mut out = Vec::with_capacity(prev.len() * kraus.len());
    for e in prev {
        for k in kraus {
            out.push(e.matmul(k));
        }
    }
    out
}

fn combine<T: Real>(cands: &[CMatrix<T>], coeffs: &CMatrix<T>) -> Vec<CMatrix<T>> {
    (0..coeffs.cols())
        .map(|c| {
            let (rows, cols) = cands[0].shape();
            let mut op = CMatrix::zeros(rows, cols);
            for (r, cand) in cands.iter().enumerate() {
                let w = coeffs[(r, c)];
                if w.re != T::zero() || w.im != T::zero() {
                    op.axpy(w.conj(), cand);
                }
            }
            op
        })
        .collect()
}

fn refine_ops<T: Real>(prev: &[CMatrix<T>], kraus: &[CMatrix<T>], refinement: &CMatrix<T>) -> Vec<CMatrix<T>> {
    combine(&candidate_ops(prev, kraus), refinement)
}

fn next_level<T: Real>(prev: &Level<T>, kraus: &[CMatrix<T>], tol: &ToleranceConfig) -> Level<T> {
    let n = kraus.len();
    let cands = candidate_ops(&prev.ops, kraus);
    let count = cands.len();
    let entries = cands[0].rows() * cands[0].cols();
    let stack = CMatrix::from_fn(count, entries, |r, e| cands[r].as_slice()[e]);
    let mut refinement = orthonormal_range(&stack, tol);
    if refinement.cols() == count {
        refinement = CMatrix::identity(count);
    }
    let ops = combine(&cands, &refinement);

    // B_m = (B_{m-1} ⊗ I_n) C_m, row (j, k) = Σ_i B_{m-1}[j, i] C_m[i n + k, ·].
    let prev_basis = &prev.basis;
    let dim = refinement.cols();
    let mut basis = CMatrix::zeros(prev_basis.rows() * n, dim);
    for j in 0..prev_basis.rows() {
        for k in 0..n {
            for c in 0..dim {
                let mut acc = Cx::new(T::zero(), T::zero());
                for i in 0..prev_basis.cols() {
                    acc += prev_basis[(j, i)] * refinement[(i * n + k, c)];
                }
                basis[(j * n + k, c)] = acc;
            }
        }
    }
    Level { basis, ops, refinement }
}

/// Direct sum `⊕_{m ≤ M} GH_m` with the left and right shifts as block matrices.
///
/// Shifts out of the top level are truncated to zero.
#[derive(Debug, Clone)]
pub struct TruncatedFock<T: Real> {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    left: Vec<CMatrix<T>>,
    right: Vec<CMatrix<T>>,
}

impl<T: Real> TruncatedFock<T> {
    pub fn new(s: &SubproductSystem<T>) -> Result<Self> {
        let dims = s.dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in &dims {
            offsets.push(total);
            total += d;
        }
        let mut left = vec![CMatrix::zeros(total, total); s.n()];
        let mut right = vec![CMatrix::zeros(total, total); s.n()];
        for m in 0..s.max_level() {
            for k in 0..s.n() {
                place(&mut left[k], &s.shift_left(k, m)?, offsets[m + 1], offsets[m]);
                place(&mut right[k], &s.shift_right(k, m)?, offsets[m + 1], offsets[m]);
            }
        }
        Ok(Self {
            dims,
            offsets,
            left,
            right,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.dims.last().copied().unwrap_or(0)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offset(&self, m: usize) -> usize {
        self.offsets[m]
    }

    pub fn left(&self, k: usize) -> &CMatrix<T> {
        &self.left[k]
    }

    pub fn right(&self, k: usize) -> &CMatrix<T> {
        &self.right[k]
    }

    /// Restriction of a Fock-space operator to the block `GH_m → GH_m`.
    pub fn block(&self, x: &CMatrix<T>, m: usize) -> CMatrix<T> {
        let (o, d) = (self.offsets[m], self.dims[m]);
        CMatrix::from_fn(d, d, |i, j| x[(o + i, o + j)])
    }

    /// `S_{k_1} ⋯ S_{k_m}` as a Fock-space operator.
    pub fn left_word(&self, word: &[usize]) -> CMatrix<T> {
        let mut out = CMatrix::identity(self.total_dim());
        for &k in word {
            out = out.matmul(&self.left[k]);
        }
        out
    }

    /// The vacuum vector `1 ∈ GH_0`.
    pub fn vacuum(&self) -> Vec<Cx<T>> {
        let mut v = vec![Cx::new(T::zero(), T::zero()); self.total_dim()];
        v[0] = cone();
        v
    }
}

fn place<T: Real>(target: &mut CMatrix<T>, block: &CMatrix<T>, row: usize, col: usize) {
    for i in 0..block.rows() {
        for j in 0..block.cols() {
            target[(row + i, col + j)] = block[(i, j)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::numeric::{isometry_residual, numerical_rank};
    use crate::scalar::creal;

    type M = CMatrix<f64>;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn build(k: &KrausSet<f64>, m: usize) -> SubproductSystem<f64> {
        SubproductSystem::build(k, m).unwrap()
    }

    /// Rank of the explicit word map, assembled from every length-`m` word.
    fn word_map_rank(k: &KrausSet<f64>, m: usize) -> usize {
        let words = k.word_table(m).unwrap();
        let d2 = k.dim() * k.dim();
        let t = M::from_fn(words.len(), d2, |j, e| words.as_slice()[j].as_slice()[e]);
        numerical_rank(&t, &tol())
    }

    #[test]
    fn level_zero_and_one() {
        let k = catalog::random_unital::<f64>(3, 4, 1, tol()).unwrap();
        let s = build(&k, 2);
        assert_eq!(s.dim(0).unwrap(), 1);
        assert_eq!(*s.basis(0).unwrap(), M::identity(1));
        assert_eq!(*s.basis(1).unwrap(), M::identity(3));
        assert_eq!(s.level_projection(0).unwrap(), M::identity(1));
    }

    #[test]
    fn projective_dims_are_constant() {
        let k = catalog::uniform_projective::<f64>(3, tol()).unwrap();
        let s = build(&k, 5);
        assert_eq!(s.dims(), vec![1, 3, 3, 3, 3, 3]);
    }

    #[test]
    fn dims_agree_with_word_map_rank() {
        let cases = [
            catalog::commuting_generic::<f64>(2, 6, 3, tol()).unwrap(),
            catalog::random_unital::<f64>(2, 3, 3, tol()).unwrap(),
            catalog::sequential_projective::<f64>(4, 0.4, 3, tol()).unwrap(),
        ];
        for k in &cases {
            let s = build(k, 4);
            for m in 0..=4 {
                assert_eq!(s.dim(m).unwrap(), word_map_rank(k, m), "m={m}");
            }
        }
    }

    #[test]
    fn bases_are_isometries_and_ops_match_words() {
        let k = catalog::sequential_projective::<f64>(4, 0.7, 5, tol()).unwrap();
        let s = build(&k, 3);
        for m in 0..=3 {
            let b = s.basis(m).unwrap();
            assert!(isometry_residual(b) < 1e-12);
            let words = k.word_table(m).unwrap();
            for (a, e) in s.level(m).unwrap().ops().iter().enumerate() {
                let mut direct = M::zeros(4, 4);
                for (j, w) in words.as_slice().iter().enumerate() {
                    direct.axpy(b[(j, a)].conj(), w);
                }
                assert!((&direct - e).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commuting_pair_level_two_is_symmetric() {
        let k = catalog::commuting_generic::<f64>(2, 12, 1, tol()).unwrap();
        let s = build(&k, 2);
        let p = s.level_projection(2).unwrap();
        let e12 = [0.0, 1.0, 0.0, 0.0].map(creal);
        let img = p.mul_vec(&e12);
        let expected = [0.0, 0.5, 0.5, 0.0];
        for (z, x) in img.iter().zip(expected) {
            assert!((z - creal(x)).norm() < 1e-12);
        }
        // S_1 e_2 has norm 1/√2.
        let s1 = s.shift_left(0, 1).unwrap();
        let v = s1.mul_vec(&[creal(0.0), creal(1.0)]);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shifts_from_vacuum() {
        let k = catalog::commuting_generic::<f64>(2, 8, 2, tol()).unwrap();
        let s = build(&k, 2);
        for j in 0..2 {
            let sl = s.shift_left(j, 0).unwrap();
            let sr = s.shift_right(j, 0).unwrap();
            assert_eq!(sl, M::unit(2, j, 0).select_columns(&[0]));
            assert_eq!(sr, sl);
        }
        assert!(s.shift_left(2, 0).is_err());
        assert!(s.shift_left(0, 2).is_err());
    }

    #[test]
    fn commuting_left_equals_right() {
        let k = catalog::commuting_generic::<f64>(2, 10, 4, tol()).unwrap();
        let s = build(&k, 5);
        for m in 0..5 {
            for j in 0..2 {
                let d = &s.shift_left(j, m).unwrap() - &s.shift_right(j, m).unwrap();
                assert!(d.max_abs() < 1e-10, "m={m}");
            }
        }
    }

    #[test]
    fn free_right_shifts_are_orthogonal_isometries() {
        let k = catalog::random_unital::<f64>(2, 8, 6, tol()).unwrap();
        let s = build(&k, 3);
        assert_eq!(s.dims(), vec![1, 2, 4, 8]);
        for m in 0..3 {
            for j in 0..2 {
                for l in 0..2 {
                    let g = s.shift_right(l, m).unwrap().adjoint_mul(&s.shift_right(j, m).unwrap());
                    let expected = if j == l { M::identity(g.rows()) } else { M::zeros(g.rows(), g.cols()) };
                    assert_eq!(g, expected);
                }
            }
        }
        for m in 0..=3 {
            assert_eq!(s.subproduct_residual(m, 3 - m).unwrap(), 0.0);
        }
    }

    #[test]
    fn violated_subproduct_law_is_detected() {
        // Replace level 2 of a commuting system by the antisymmetric line.
        let k = catalog::commuting_generic::<f64>(2, 6, 1, tol()).unwrap();
        let mut s = build(&k, 2);
        let h = 0.5f64.sqrt();
        let anti = M::from_fn(4, 1, |i, _| creal([0.0, h, -h, 0.0][i]));
        s.levels[1].basis = M::from_fn(2, 1, |i, _| creal([1.0, 0.0][i]));
        s.levels[2].basis = anti;
        let r = s.subproduct_residual(1, 1).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "residual {r}");
    }

    #[test]
    fn inductive_map_edge_cases() {
        let k = catalog::commuting_generic::<f64>(2, 8, 3, tol()).unwrap();
        let s = build(&k, 4);
        let a = M::from_fn(2, 2, |i, j| creal((i + 2 * j) as f64));
        assert_eq!(s.inductive_map(&a, 1, 1).unwrap(), a);
        let il = s.inductive_map(&M::identity(2), 1, 4).unwrap();
        assert!((&il - &M::identity(5)).max_abs() < 1e-10);
        assert!(s.inductive_map(&a, 2, 1).is_err());
        assert!(s.inductive_map(&M::identity(3), 1, 2).is_err());
        assert!(s.multiplicativity_residual(&M::identity(2), &M::identity(2), 1, 4).unwrap() < 1e-10);
    }

    #[test]
    fn truncated_fock_vacuum_words() {
        let k = catalog::sequential_projective::<f64>(4, 0.5, 2, tol()).unwrap();
        let s = build(&k, 3);
        let fock = TruncatedFock::new(&s).unwrap();
        assert_eq!(fock.total_dim(), s.dims().iter().sum::<usize>());
        for word in crate::channel::MultiIndex::all(4, 2) {
            let v = fock.left_word(word.letters()).mul_vec(&fock.vacuum());
            let b = s.basis(2).unwrap();
            let idx = word.index(4);
            let off = fock.offset(2);
            for a in 0..s.dim(2).unwrap() {
                assert!((v[off + a] - b[(idx, a)].conj()).norm() < 1e-12);
            }
        }
        for k in 0..4 {
            assert!(op_norm(fock.left(k)) <= 1.0 + 1e-12);
            assert!(op_norm(fock.right(k)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rejects_non_minimal_and_over_cap() {
        let s = 0.5f64.sqrt();
        let k = KrausSet::new(vec![M::identity(2).scale(s), M::identity(2).scale(s)], tol()).unwrap();
        assert!(matches!(SubproductSystem::build(&k, 2), Err(Error::NotMinimal { .. })));
        let r = catalog::random_unital::<f64>(2, 4, 1, tol()).unwrap();
        assert!(matches!(SubproductSystem::build(&r, 13), Err(Error::CapExceeded { .. })));
    }
}
