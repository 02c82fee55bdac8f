//! Quantum channels presented by a finite Kraus set, `Φ(A) = Σ K_k† A K_k`.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{numerical_rank, op_norm, orthonormal_range, CMatrix};
use crate::scalar::Real;
use crate::tolerance::ToleranceConfig;

/// Word `k_1 k_2 ⋯ k_m` over the alphabet `{0, …, n-1}`.
///
/// Letters are zero-based; `Display` prints them one-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(letters: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&k| k >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Self(letters))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Word with position `index` in the big-endian enumeration of length-`m` words.
    pub fn from_index(mut index: usize, n: usize, m: usize) -> Self {
        let mut letters = vec![0; m];
        for slot in letters.iter_mut().rev() {
            *slot = index % n;
            index /= n;
        }
        Self(letters)
    }

    /// Position in `GH^{⊗m}`: the first letter is the most significant digit.
    pub fn index(&self, n: usize) -> usize {
        self.0.iter().fold(0, |acc, &k| acc * n + k)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// All words of length `m`, in index order.
    pub fn all(n: usize, m: usize) -> impl Iterator<Item = MultiIndex> {
        let total = n.pow(m as u32);
        (0..total).map(move |i| Self::from_index(i, n, m))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", k + 1)?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// `||Σ K_k† K_k - I||` in operator norm.
    pub unitality_residual: f64,
    /// Numerical rank of the Gram matrix `G_{jk} = Tr(K_j† K_k)`.
    pub independence_rank: usize,
    pub n: usize,
    pub valid: bool,
}

impl ValidationReport {
    pub fn is_minimal(&self) -> bool {
        self.independence_rank == self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet<T: Real> {
    dim: usize,
    ops: Vec<CMatrix<T>>,
    tol: ToleranceConfig,
}

impl<T: Real> KrausSet<T> {
    pub fn new(ops: Vec<CMatrix<T>>, tol: ToleranceConfig) -> Result<Self> {
        tol.validate()?;
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidKraus("no Kraus operators".into()))?;
        let dim = first.rows();
        if dim == 0 {
            return Err(Error::InvalidKraus("zero-dimensional system".into()));
        }
        for (k, op) in ops.iter().enumerate() {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {} is {}x{}, expected {dim}x{dim}",
                    k + 1,
                    op.rows(),
                    op.cols()
                )));
            }
            if !op.is_finite() {
                return Err(Error::InvalidKraus(format!("Kraus operator {} has non-finite entries", k + 1)));
            }
        }
        Ok(Self { dim, ops, tol })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[CMatrix<T>] {
        &self.ops
    }

    pub fn tol(&self) -> &ToleranceConfig {
        &self.tol
    }

    pub fn with_tol(mut self, tol: ToleranceConfig) -> Self {
        self.tol = tol;
        self
    }

    /// Gram matrix `G_{jk} = Tr(K_j† K_k)`.
    pub fn gram(&self) -> CMatrix<T> {
        let n = self.n();
        CMatrix::from_fn(n, n, |j, k| self.ops[j].hs_inner(&self.ops[k]))
    }

    pub fn unitality_residual(&self) -> T {
        let mut s = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            s = &s + &k.adjoint_mul(k);
        }
        op_norm(&(&s - &CMatrix::identity(self.dim)))
    }

    pub fn validate(&self) -> ValidationReport {
        let residual = self.unitality_residual().as_f64();
        let rank = numerical_rank(&self.stacked(), &self.tol);
        ValidationReport {
            unitality_residual: residual,
            independence_rank: rank,
            n: self.n(),
            valid: residual <= self.tol.residual_tol,
        }
    }

    /// `n × d²` matrix whose rows are the row-major vectorised Kraus operators.
    /// Its numerical rank equals that of the Gram matrix without squaring the spread.
    pub fn stacked(&self) -> CMatrix<T> {
        let d2 = self.dim * self.dim;
        CMatrix::from_fn(self.n(), d2, |k, e| self.ops[k].as_slice()[e])
    }

    fn check_operand(&self, a: &CMatrix<T>, what: &str) -> Result<()> {
        if a.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {}x{}, channel acts on dimension {}",
                a.rows(),
                a.cols(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Heisenberg picture: `Σ K_k† A K_k`.
    pub fn apply_heisenberg(&self, a: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check_operand(a, "observable")?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out = &out + &k.adjoint_mul(&a.matmul(k));
        }
        Ok(out)
    }

    /// `Φ^m(A)` by repeated application.
    pub fn heisenberg_power(&self, a: &CMatrix<T>, m: usize) -> Result<CMatrix<T>> {
        let mut out = a.clone();
        for _ in 0..m {
            out = self.apply_heisenberg(&out)?;
        }
        Ok(out)
    }

    /// Schrödinger picture: `Σ K_k ρ K_k†`.
    pub fn apply_schrodinger(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.check_operand(rho, "state")?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out = &out + &k.matmul(rho).matmul(&k.adjoint());
        }
        Ok(out)
    }

    /// Choi matrix `Σ_{ab} E_ab ⊗ Φ_*(E_ab)`.
    pub fn choi_matrix(&self) -> CMatrix<T> {
        let d = self.dim;
        let mut out = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let e = CMatrix::unit(d, a, b);
                let img = self.apply_schrodinger(&e).expect("square unit matrix");
                out = &out + &e.kron(&img);
            }
        }
        out
    }

    /// `K_{j_1} K_{j_2} ⋯ K_{j_m}`; the empty word is the identity.
    pub fn kraus_word(&self, word: &MultiIndex) -> Result<CMatrix<T>> {
        self.tol.check_words(self.n(), word.len())?;
        let mut out = CMatrix::identity(self.dim);
        for &k in word.letters() {
            let op = self
                .ops
                .get(k)
                .ok_or(Error::IndexOutOfRange { index: k, n: self.n() })?;
            out = out.matmul(op);
        }
        Ok(out)
    }

    /// Every length-`m` word product, indexed as in [`MultiIndex::index`].
    pub fn word_table(&self, m: usize) -> Result<WordTable<T>> {
        WordTable::build(self, m)
    }

    /// Reduces to linearly independent Kraus operators implementing the same channel.
    ///
    /// The new operators are `K'_r = Σ_k conj(U_{kr}) K_k`, where the columns of
    /// `U` are the leading left-singular directions of the `n × d²` stacking matrix.
    pub fn minimal_kraus(&self) -> Result<Self> {
        let report = self.validate();
        if !report.valid {
            return Err(Error::InvalidKraus(format!(
                "unitality residual {:e} exceeds {:e}",
                report.unitality_residual, self.tol.residual_tol
            )));
        }
        let n = self.n();
        let u = orthonormal_range(&self.stacked(), &self.tol);
        if u.cols() == n {
            return Ok(self.clone());
        }
        let ops = (0..u.cols())
            .map(|r| {
                let mut op = CMatrix::zeros(self.dim, self.dim);
                for k in 0..n {
                    op.axpy(u[(k, r)].conj(), &self.ops[k]);
                }
                op
            })
            .collect();
        Self::new(ops, self.tol)
    }

    /// Kraus set of the same channel after the unitary mixing `K'_j = Σ_i u_{ij} K_i`.
    pub fn mixed_by(&self, u: &CMatrix<T>) -> Result<Self> {
        let n = self.n();
        if u.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "mixing matrix must be {n}x{n}, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let ops = (0..n)
            .map(|j| {
                let mut op = CMatrix::zeros(self.dim, self.dim);
                for i in 0..n {
                    op.axpy(u[(i, j)], &self.ops[i]);
                }
                op
            })
            .collect();
        Self::new(ops, self.tol)
    }

    pub fn cast<U: Real>(&self) -> KrausSet<U> {
        KrausSet {
            dim: self.dim,
            ops: self.ops.iter().map(CMatrix::cast).collect(),
            tol: self.tol,
        }
    }
}

/// All Kraus words of one length, built by extending length-`(m-1)` prefixes.
#[derive(Debug, Clone)]
pub struct WordTable<T: Real> {
    n: usize,
    m: usize,
    words: Vec<CMatrix<T>>,
}

impl<T: Real> WordTable<T> {
    fn build(k: &KrausSet<T>, m: usize) -> Result<Self> {
        let n = k.n();
        k.tol.check_words(n, m)?;
        let mut words = vec![CMatrix::identity(k.dim())];
        for _ in 0..m {
            let mut next = Vec::with_capacity(words.len() * n);
            for prefix in &words {
                for op in k.ops() {
                    next.push(prefix.matmul(op));
                }
            }
            words = next;
        }
        Ok(Self { n, m, words })
    }

    pub fn level(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &MultiIndex) -> &CMatrix<T> {
        &self.words[word.index(self.n)]
    }

    pub fn as_slice(&self) -> &[CMatrix<T>] {
        &self.words
    }

    /// Full pairing matrix `M_{jk} = Tr(ρ K_k† K_j X)` over all words,
    /// with `X = I` when `x` is `None`.
    pub fn pairing_matrix(&self, rho: &CMatrix<T>, x: Option<&CMatrix<T>>) -> CMatrix<T> {
        let total = self.words.len();
        let tail = match x {
            Some(x) => x.matmul(rho),
            None => rho.clone(),
        };
        let right: Vec<CMatrix<T>> = self.words.iter().map(|w| w.matmul(&tail)).collect();
        CMatrix::from_fn(total, total, |j, k| self.words[k].hs_inner(&right[j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Cx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = CMatrix<f64>;

    fn set(ops: Vec<M>) -> KrausSet<f64> {
        KrausSet::new(ops, ToleranceConfig::default()).unwrap()
    }

    fn random_valid(n: usize, d: usize, seed: u64) -> KrausSet<f64> {
        crate::catalog::random_unital(n, d, seed, ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn identity_channel_validates() {
        let r = set(vec![M::identity(3)]).validate();
        assert_eq!(r.unitality_residual, 0.0);
        assert_eq!(r.independence_rank, 1);
        assert!(r.valid);
    }

    #[test]
    fn orthogonal_projections_validate() {
        let r = set(vec![M::from_real_diagonal(&[1.0, 0.0]), M::from_real_diagonal(&[0.0, 1.0])]).validate();
        assert_eq!(r.unitality_residual, 0.0);
        assert_eq!(r.independence_rank, 2);
        assert!(r.valid);
    }

    #[test]
    fn half_sum_of_noncommuting_projections_is_not_unital() {
        let s = 0.5f64.sqrt();
        let p = M::from_real_diagonal(&[1.0, 0.0]).scale(s);
        let q = M::from_fn(2, 2, |_, _| Cx::new(0.5, 0.0)).scale(s);
        let r = set(vec![p, q]).validate();
        // (P + Q)/2 - I has eigenvalues -1/2 ± √2/4.
        let expected = 0.5 + 2f64.sqrt() / 4.0;
        assert!((r.unitality_residual - expected).abs() < 1e-12);
        assert!(r.unitality_residual > 0.2);
        assert!(!r.valid);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let e = KrausSet::new(vec![M::identity(2), M::identity(3)], ToleranceConfig::default());
        assert!(matches!(e, Err(Error::DimensionMismatch(_))));
        assert!(KrausSet::<f64>::new(vec![], ToleranceConfig::default()).is_err());
    }

    #[test]
    fn projective_kills_off_diagonal() {
        let k = set(vec![M::from_real_diagonal(&[1.0, 0.0]), M::from_real_diagonal(&[0.0, 1.0])]);
        let sx = M::from_fn(2, 2, |i, j| if i != j { Cx::new(1.0, 0.0) } else { Cx::new(0.0, 0.0) });
        assert_eq!(k.apply_heisenberg(&sx).unwrap(), M::zeros(2, 2));
        assert!(k.apply_heisenberg(&M::identity(3)).is_err());
    }

    #[test]
    fn heisenberg_is_positive_and_unital() {
        let k = random_valid(3, 4, 7);
        assert!((&k.apply_heisenberg(&M::identity(4)).unwrap() - &M::identity(4)).max_abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let a = M::random_hermitian(4, &mut rng);
        let out = k.apply_heisenberg(&a).unwrap();
        assert!(out.hermiticity_residual() < 1e-12);
        let (va, _) = crate::numeric::hermitian_eigen(&a).unwrap();
        let (vo, _) = crate::numeric::hermitian_eigen(&out).unwrap();
        assert!(vo[0] >= va[0] - 1e-12 && vo[3] <= va[3] + 1e-12);
    }

    #[test]
    fn schrodinger_trace_and_duality() {
        let k = random_valid(2, 5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        assert_eq!(set(vec![M::identity(5)]).apply_schrodinger(&M::identity(5)).unwrap(), M::identity(5));
        for _ in 0..5 {
            let rho = M::random_density(5, &mut rng);
            let a = M::random_gaussian(5, 5, &mut rng);
            let out = k.apply_schrodinger(&rho).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-12);
            let lhs = out.trace_of_product(&a);
            let rhs = rho.trace_of_product(&k.apply_heisenberg(&a).unwrap());
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn choi_matrix_is_psd() {
        let k = random_valid(3, 3, 17);
        let choi = k.choi_matrix();
        assert!(crate::numeric::min_eigenvalue(&choi).unwrap() > -1e-10);
    }

    #[test]
    fn kraus_words() {
        let k = set(vec![M::from_real_diagonal(&[1.0, 0.0]), M::from_real_diagonal(&[0.0, 1.0])]);
        assert_eq!(k.kraus_word(&MultiIndex::empty()).unwrap(), M::identity(2));
        assert_eq!(k.kraus_word(&MultiIndex::new(vec![0, 1], 2).unwrap()).unwrap(), M::zeros(2, 2));

        let r = random_valid(2, 3, 5);
        let w = MultiIndex::new(vec![0, 0, 1], 2).unwrap();
        let fold = r.ops()[0].matmul(&r.ops()[0]).matmul(&r.ops()[1]);
        assert_eq!(r.kraus_word(&w).unwrap(), fold);
        assert!(MultiIndex::new(vec![2], 2).is_err());
    }

    #[test]
    fn word_table_matches_direct_products() {
        let r = random_valid(2, 3, 9);
        let t = r.word_table(3).unwrap();
        assert_eq!(t.len(), 8);
        for w in MultiIndex::all(2, 3) {
            assert!((t.get(&w) - &r.kraus_word(&w).unwrap()).max_abs() < 1e-14);
        }
        let tight = r.clone().with_tol(ToleranceConfig::default().with_word_cap(4));
        assert!(matches!(tight.word_table(3), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn multi_index_round_trip() {
        for i in 0..27 {
            assert_eq!(MultiIndex::from_index(i, 3, 3).index(3), i);
        }
        let w = MultiIndex::new(vec![0, 2], 3).unwrap();
        assert_eq!(w.to_string(), "(1,3)");
        assert_eq!(w.concat(&MultiIndex::new(vec![1], 3).unwrap()).letters(), &[0, 2, 1]);
    }

    #[test]
    fn minimal_kraus_collapses_duplicates() {
        let s = 0.5f64.sqrt();
        let k = set(vec![M::identity(2).scale(s), M::identity(2).scale(s)]);
        let m = k.minimal_kraus().unwrap();
        assert_eq!(m.n(), 1);
        let op = &m.ops()[0];
        let phase = op[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!((op - &M::identity(2).scale_cx(phase)).max_abs() < 1e-12);
    }

    #[test]
    fn minimal_kraus_keeps_independent_sets() {
        let k = random_valid(3, 3, 2);
        assert_eq!(k.minimal_kraus().unwrap().n(), 3);
    }

    #[test]
    fn minimal_kraus_rejects_invalid() {
        let k = set(vec![M::identity(2).scale(2.0)]);
        assert!(k.minimal_kraus().is_err());
    }
}
