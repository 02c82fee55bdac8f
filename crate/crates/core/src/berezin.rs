//! Correlation matrices, the time-m dequantization `Ψ^(m)`, degree-zero word
//! elements and convergence diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{KrausSet, MultiIndex};
use crate::error::{Error, Result};
use crate::numeric::{apply_kron_power, min_eigenvalue, op_norm, orthonormal_range, psd_inverse, CMatrix};
use crate::scalar::{cx, Cx, Real};
use crate::subproduct::SubproductSystem;
use crate::tolerance::ToleranceConfig;

/// A validated reference state `ρ_0` together with its outcome weights
/// `Tr(ρ_0 K_k† K_k)`.
#[derive(Debug, Clone)]
pub struct StateSpec<T: Real> {
    rho0: CMatrix<T>,
    weights: Vec<T>,
}

impl<T: Real> StateSpec<T> {
    pub fn new(k: &KrausSet<T>, rho0: CMatrix<T>) -> Result<Self> {
        let tol = T::lit(k.tol().residual_tol);
        let d = k.dim();
        if rho0.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("state must be {d}x{d}")));
        }
        if !rho0.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        if rho0.hermiticity_residual() > tol {
            return Err(Error::InvalidState("state is not Hermitian".into()));
        }
        if (rho0.trace().re - T::one()).abs() > tol {
            return Err(Error::InvalidState(format!("trace {} != 1", rho0.trace().re)));
        }
        if min_eigenvalue(&rho0)? < -tol {
            return Err(Error::InvalidState("state is not positive semidefinite".into()));
        }
        let weights: Vec<T> = k
            .ops()
            .iter()
            .map(|op| op.hs_inner(&op.matmul(&rho0)).re)
            .collect();
        if let Some(j) = weights.iter().position(|&w| w <= tol) {
            return Err(Error::InvalidState(format!(
                "outcome {} has vanishing weight {}",
                j + 1,
                weights[j]
            )));
        }
        Ok(Self { rho0, weights })
    }

    /// `ρ_0 = I/d`.
    pub fn maximally_mixed(k: &KrausSet<T>) -> Result<Self> {
        let d = k.dim();
        Self::new(k, CMatrix::identity(d).scale(T::one() / T::count(d)))
    }

    pub fn rho0(&self) -> &CMatrix<T> {
        &self.rho0
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Correlation data at one level.
#[derive(Debug, Clone)]
pub struct CorrelationLevel<T: Real> {
    pub level: usize,
    /// `M_m = B_m† M^full B_m`.
    pub raw: CMatrix<T>,
    /// `Q_m = c_m M_m`.
    pub q: CMatrix<T>,
    pub scale: T,
    /// `Tr(Q_m)`.
    pub trace: T,
    /// `(r1, r2)`, see [`phi_symmetry_residual`].
    pub symmetry: (T, T),
}

#[derive(Debug, Clone)]
pub struct CorrelationData<T: Real> {
    state: StateSpec<T>,
    q: CMatrix<T>,
    /// Diagonal of `Q^{-1}`.
    inv_diag: Vec<T>,
    levels: Vec<CorrelationLevel<T>>,
}

impl<T: Real> CorrelationData<T> {
    /// Correlation matrices for levels `1..=max_m`.
    pub fn build(s: &SubproductSystem<T>, state: StateSpec<T>, max_m: usize) -> Result<Self> {
        let max_m = max_m.max(1);
        if max_m > s.max_level() {
            return Err(Error::LevelOutOfRange {
                level: max_m,
                max: s.max_level(),
            });
        }
        let first = correlation_level(s, &state, 1)?;
        let q = first.q.clone();
        let inv = psd_inverse(&q, s.tol()).map_err(|e| with_level(e, 1))?;
        let inv_diag = inv.diagonal().iter().map(|z| z.re).collect();
        let mut data = Self {
            state,
            q,
            inv_diag,
            levels: Vec::with_capacity(max_m),
        };
        data.levels.push(first);
        for m in 2..=max_m {
            let level = correlation_level(s, &data.state, m)?;
            data.levels.push(level);
        }
        for m in 1..=max_m {
            let sym = phi_symmetry_residual(&data, s, m)?;
            data.levels[m - 1].symmetry = sym;
        }
        Ok(data)
    }

    pub fn state(&self) -> &StateSpec<T> {
        &self.state
    }

    /// Level-one correlation matrix `Q`.
    pub fn q(&self) -> &CMatrix<T> {
        &self.q
    }

    pub fn inverse_diagonal(&self) -> &[T] {
        &self.inv_diag
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, m: usize) -> Result<&CorrelationLevel<T>> {
        if m == 0 || m > self.levels.len() {
            return Err(Error::LevelOutOfRange {
                level: m,
                max: self.levels.len(),
            });
        }
        Ok(&self.levels[m - 1])
    }

    pub fn levels(&self) -> &[CorrelationLevel<T>] {
        &self.levels
    }

    /// `|Tr(Q_m^{-1}) - Tr(Q_m)| / Tr(Q_m)`.
    pub fn normalization_residual(&self, m: usize, tol: &ToleranceConfig) -> Result<T> {
        let lvl = self.level(m)?;
        let inv = psd_inverse(&lvl.q, tol).map_err(|e| with_level(e, m))?;
        Ok((inv.trace().re - lvl.trace).abs() / lvl.trace)
    }
}

fn with_level(e: Error, m: usize) -> Error {
    match e {
        Error::SingularCorrelation { ratio, .. } => Error::SingularCorrelation { level: Some(m), ratio },
        other => other,
    }
}

/// Correlation data at level `m`: `M_m = B_m† M^full B_m` with
/// `M^full_{jk} = Tr(ρ_0 K_k† K_j)`, rescaled so that `Tr(Q_m^{-1}) = Tr(Q_m)`.
/// The symmetry residuals are left at zero; [`CorrelationData::build`] fills them.
pub fn correlation_level<T: Real>(s: &SubproductSystem<T>, st: &StateSpec<T>, m: usize) -> Result<CorrelationLevel<T>> {
    if m == 0 {
        return Err(Error::LevelOutOfRange {
            level: 0,
            max: s.max_level(),
        });
    }
    let level = s.level(m)?;
    let ops = level.ops();
    let dm = level.dim();
    let tails: Vec<CMatrix<T>> = ops.iter().map(|e| e.matmul(st.rho0())).collect();
    let raw = CMatrix::from_fn(dm, dm, |a, b| ops[b].hs_inner(&tails[a]));
    let inv = psd_inverse(&raw, s.tol()).map_err(|e| with_level(e, m))?;
    let tr = raw.trace().re;
    let scale = (inv.trace().re / tr).sqrt();
    let q = raw.scale(scale);
    let trace = q.trace().re;
    Ok(CorrelationLevel {
        level: m,
        raw,
        q,
        scale,
        trace,
        symmetry: (T::zero(), T::zero()),
    })
}

/// `r1 = ||Q_m - B_m† Q^{⊗m} B_m||`, `r2 = ||(I - p_m) Q^{⊗m} p_m||`.
pub fn phi_symmetry_residual<T: Real>(c: &CorrelationData<T>, s: &SubproductSystem<T>, m: usize) -> Result<(T, T)> {
    let b = s.basis(m)?;
    let qm = &c.level(m)?.q;
    let y = apply_kron_power(c.q(), m, b);
    let inner = b.adjoint_mul(&y);
    let r1 = op_norm(&(qm - &inner));
    let r2 = op_norm(&(&y - &b.matmul(&inner)));
    Ok((r1, r2))
}

fn dequant_weights<T: Real>(c: &CorrelationData<T>) -> Vec<Cx<T>> {
    c.inverse_diagonal().iter().map(|&w| cx(w, T::zero())).collect()
}

/// `Ψ^(m)(A) = Tr(Q_m) B_m† C B_m` with `C_{jk} = w_k Tr(ρ_0 K_k† K_j A)` and
/// `w_k = Π_i (Q^{-1})_{k_i k_i}`.
///
/// The word sum collapses to level operators: entry `(a, b)` equals
/// `Tr(Q_m) Tr(ρ_0 F_b† E_a A)` where `F` are the level operators of the
/// rescaled set `w_k K_k`.
pub fn dequantize<T: Real>(
    s: &SubproductSystem<T>,
    c: &CorrelationData<T>,
    a: &CMatrix<T>,
    m: usize,
) -> Result<CMatrix<T>> {
    let d = s.system_dim();
    if a.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("observable must be {d}x{d}")));
    }
    if m == 0 {
        return Err(Error::LevelOutOfRange {
            level: 0,
            max: c.max_level(),
        });
    }
    let lvl = c.level(m)?;
    let e = s.level(m)?.ops();
    let f = s.weighted_level_ops(m, &dequant_weights(c))?;
    let ar = a.matmul(c.state().rho0());
    let tails: Vec<CMatrix<T>> = e.iter().map(|ea| ea.matmul(&ar)).collect();
    let dm = e.len();
    let tr = cx(lvl.trace, T::zero());
    Ok(CMatrix::from_fn(dm, dm, |i, j| f[j].hs_inner(&tails[i]) * tr))
}

/// A finite sum `Σ c · K_j† K_k` with `|j| = |k|` in every term.
#[derive(Debug, Clone)]
pub struct Gt0Element<T: Real> {
    terms: Vec<(MultiIndex, MultiIndex, Cx<T>)>,
}

#[derive(Debug, Clone)]
pub struct Gt0Evaluation<T: Real> {
    pub matrix: CMatrix<T>,
    /// Whether the term list is closed under `(j, k, c) ↦ (k, j, c̄)`.
    pub adjoint_closed: bool,
}

impl<T: Real> Gt0Element<T> {
    pub fn new(terms: Vec<(MultiIndex, MultiIndex, Cx<T>)>) -> Result<Self> {
        for (i, (j, k, _)) in terms.iter().enumerate() {
            if j.len() != k.len() {
                return Err(Error::DegreeMismatch {
                    term: i,
                    starred: j.len(),
                    unstarred: k.len(),
                });
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(MultiIndex, MultiIndex, Cx<T>)] {
        &self.terms
    }

    /// Formal adjoint `(j, k, c) ↦ (k, j, c̄)`.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(j, k, c)| (k.clone(), j.clone(), c.conj())).collect(),
        }
    }

    fn adjoint_closed(&self, tol: T) -> bool {
        let mut sums: BTreeMap<(Vec<usize>, Vec<usize>), Cx<T>> = BTreeMap::new();
        for (j, k, c) in &self.terms {
            *sums.entry((j.letters().to_vec(), k.letters().to_vec())).or_default() += *c;
        }
        let scale = sums.values().fold(T::one(), |acc, c| acc.max(c.norm()));
        sums.iter().all(|((j, k), c)| {
            let mirror = sums.get(&(k.clone(), j.clone())).copied().unwrap_or_default();
            (*c - mirror.conj()).norm() <= tol * scale
        })
    }
}

pub fn gt0_evaluate<T: Real>(k: &KrausSet<T>, e: &Gt0Element<T>) -> Result<Gt0Evaluation<T>> {
    let d = k.dim();
    let mut out = CMatrix::zeros(d, d);
    for (j, kk, c) in e.terms() {
        let wj = k.kraus_word(j)?;
        let wk = k.kraus_word(kk)?;
        out.axpy(*c, &wj.adjoint_mul(&wk));
    }
    Ok(Gt0Evaluation {
        matrix: out,
        adjoint_closed: e.adjoint_closed(T::lit(k.tol().residual_tol)),
    })
}

/// Orthonormal basis of `span{vec(K_j† K_k) : |j| = |k| = μ ≤ degree_bound}`.
///
/// The span at degree `μ` coincides with `{E_a† E_b}` over the level-`μ`
/// operators, which is what gets stacked.
#[derive(Debug, Clone)]
pub struct NormalOrderedSpan<T: Real> {
    degree_bound: usize,
    basis: CMatrix<T>,
}

impl<T: Real> NormalOrderedSpan<T> {
    pub fn new(s: &SubproductSystem<T>, degree_bound: usize) -> Result<Self> {
        if degree_bound > s.max_level() {
            return Err(Error::LevelOutOfRange {
                level: degree_bound,
                max: s.max_level(),
            });
        }
        let d = s.system_dim();
        let mut cols = Vec::new();
        for mu in 0..=degree_bound {
            let ops = s.level(mu)?.ops();
            for ea in ops {
                for eb in ops {
                    cols.push(ea.adjoint_mul(eb).vec());
                }
            }
        }
        let span = CMatrix::from_fn(d * d, cols.len(), |i, j| cols[j][i]);
        Ok(Self {
            degree_bound,
            basis: orthonormal_range(&span, s.tol()),
        })
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Dimension of the span inside `B(H_0)`.
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// `||x - P x|| / ||x||` in Hilbert-Schmidt norm.
    pub fn relative_residual(&self, x: &CMatrix<T>) -> T {
        let norm = x.frobenius_norm();
        if norm == T::zero() {
            return T::zero();
        }
        let v = CMatrix::column_vector(&x.vec());
        let proj = self.basis.matmul(&self.basis.adjoint_mul(&v));
        (&v - &proj).frobenius_norm() / norm
    }

    /// Residual of the anti-normally ordered product `K_r K_q†`.
    pub fn residual(&self, k: &KrausSet<T>, r: &MultiIndex, q: &MultiIndex) -> Result<T> {
        if r.len() != q.len() {
            return Err(Error::DegreeMismatch {
                term: 0,
                starred: q.len(),
                unstarred: r.len(),
            });
        }
        if r.len() > self.degree_bound {
            return Err(Error::LevelOutOfRange {
                level: r.len(),
                max: self.degree_bound,
            });
        }
        let x = k.kraus_word(r)?.matmul(&k.kraus_word(q)?.adjoint());
        Ok(self.relative_residual(&x))
    }
}

/// Relative least-squares residual of `K_r K_q†` against the span of
/// `{K_j† K_k : |j| = |k| = μ ≤ degree_bound}`. Build a
/// [`NormalOrderedSpan`] once when checking many words.
pub fn normal_ordering_residual<T: Real>(
    k: &KrausSet<T>,
    s: &SubproductSystem<T>,
    r: &MultiIndex,
    q: &MultiIndex,
    degree_bound: usize,
) -> Result<T> {
    NormalOrderedSpan::new(s, degree_bound)?.residual(k, r, q)
}

/// Descriptive trend of a nonnegative sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Every entry within the residual tolerance of zero.
    Flat,
    Decreasing,
    Bounded,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub flat: bool,
    pub decreasing: bool,
    pub bounded: bool,
}

impl TrendVerdict {
    pub fn of(seq: &[f64], residual_tol: f64) -> Self {
        let flat = seq.iter().all(|&x| x <= residual_tol);
        let decreasing = seq.windows(2).all(|w| w[1] <= w[0] * (1.0 + residual_tol));
        let bounded = if seq.is_empty() {
            true
        } else {
            let mut sorted = seq.to_vec();
            sorted.sort_by(f64::total_cmp);
            let median = if sorted.len() % 2 == 1 {
                sorted[sorted.len() / 2]
            } else {
                0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
            };
            flat || sorted[sorted.len() - 1] <= 10.0 * median
        };
        Self {
            flat,
            decreasing,
            bounded,
        }
    }

    /// The strongest label that applies.
    pub fn trend(&self) -> Trend {
        if self.flat {
            Trend::Flat
        } else if self.decreasing {
            Trend::Decreasing
        } else if self.bounded {
            Trend::Bounded
        } else {
            Trend::Unbounded
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub labels: Vec<String>,
    pub levels: Vec<usize>,
    pub norm_gap: Vec<f64>,
    pub vn_residual: Vec<f64>,
    pub scaled_commutator: Vec<f64>,
    pub limit_state_gap: Vec<f64>,
    pub verdicts: BTreeMap<String, TrendVerdict>,
}

impl ConvergenceReport {
    pub fn sequences(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("norm_gap", &self.norm_gap),
            ("vn_residual", &self.vn_residual),
            ("scaled_commutator", &self.scaled_commutator),
            ("limit_state_gap", &self.limit_state_gap),
        ]
    }

    /// Verdict restricted to the levels `from..=to`.
    pub fn verdict_between(&self, name: &str, from: usize, to: usize, residual_tol: f64) -> Option<TrendVerdict> {
        let seq = self.sequences().into_iter().find(|(n, _)| *n == name)?.1;
        let picked: Vec<f64> = self
            .levels
            .iter()
            .zip(seq)
            .filter(|(m, _)| (from..=to).contains(*m))
            .map(|(_, &x)| x)
            .collect();
        Some(TrendVerdict::of(&picked, residual_tol))
    }
}

pub fn convergence_report<T: Real>(
    s: &SubproductSystem<T>,
    c: &CorrelationData<T>,
    a: &CMatrix<T>,
    b: &CMatrix<T>,
    m_max: usize,
) -> Result<ConvergenceReport> {
    let tol = s.tol().residual_tol;
    for x in [a, b] {
        if x.hermiticity_residual().as_f64() > tol * op_norm(x).as_f64().max(1.0) {
            return Err(Error::NotHermitian(x.hermiticity_residual().as_f64()));
        }
    }
    let norm_a = op_norm(a).as_f64();
    let expect_a = c.state().rho0().trace_of_product(a).re.as_f64();
    let ab = a.matmul(b);
    let mut report = ConvergenceReport {
        labels: vec!["A".into(), "B".into()],
        levels: Vec::new(),
        norm_gap: Vec::new(),
        vn_residual: Vec::new(),
        scaled_commutator: Vec::new(),
        limit_state_gap: Vec::new(),
        verdicts: BTreeMap::new(),
    };
    for m in 1..=m_max {
        let pa = dequantize(s, c, a, m)?;
        let pb = dequantize(s, c, b, m)?;
        let pab = dequantize(s, c, &ab, m)?;
        let lvl = c.level(m)?;
        let papb = pa.matmul(&pb);
        let comm = &papb - &pb.matmul(&pa);
        report.levels.push(m);
        report.norm_gap.push((op_norm(&pa).as_f64() - norm_a).abs());
        report.vn_residual.push(op_norm(&(&pab - &papb)).as_f64());
        report.scaled_commutator.push(m as f64 * op_norm(&comm).as_f64());
        let pairing = lvl.q.trace_of_product(&pa).re.as_f64() / lvl.trace.as_f64();
        report.limit_state_gap.push((pairing - expect_a).abs());
    }
    let verdicts: Vec<(String, TrendVerdict)> = report
        .sequences()
        .iter()
        .map(|(n, seq)| (n.to_string(), TrendVerdict::of(seq, tol)))
        .collect();
    report.verdicts = verdicts.into_iter().collect();
    Ok(report)
}
