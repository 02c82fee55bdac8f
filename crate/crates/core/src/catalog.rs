//! Seeded constructors for the example channel families.
//!
//! Every constructor is deterministic in its arguments and produces a Kraus
//! set whose unitality holds by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::KrausSet;
use crate::error::{Error, Result};
use crate::numeric::{orthonormal_range, psd_inverse_sqrt, CMatrix};
use crate::scalar::{cx, creal, Real};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Identity,
    Unitary,
    Projective,
    CommutingGeneric,
    RandomUnital,
    SequentialProjective,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Identity,
        Family::Unitary,
        Family::Projective,
        Family::CommutingGeneric,
        Family::RandomUnital,
        Family::SequentialProjective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::Unitary => "unitary",
            Family::Projective => "projective",
            Family::CommutingGeneric => "commuting_generic",
            Family::RandomUnital => "random_unital",
            Family::SequentialProjective => "sequential_projective",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSpec {
    pub family: Family,
    #[serde(default = "one")]
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: CatalogParams,
}

fn one() -> usize {
    1
}

impl CatalogSpec {
    pub fn new(family: Family, n: usize, d: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            d,
            seed,
            params: CatalogParams::default(),
        }
    }

    pub fn build<T: Real>(&self, tol: ToleranceConfig) -> Result<KrausSet<T>> {
        match self.family {
            Family::Identity => identity(self.d, tol),
            Family::Unitary => unitary(self.d, self.seed, tol),
            Family::Projective => {
                let ranks = match &self.params.ranks {
                    Some(r) => r.clone(),
                    None => even_ranks(self.n, self.d)?,
                };
                projective_measurement(self.d, &ranks, tol)
            }
            Family::CommutingGeneric => commuting_generic(self.n, self.d, self.seed, tol),
            Family::RandomUnital => random_unital(self.n, self.d, self.seed, tol),
            Family::SequentialProjective => {
                let angle = self.params.angle.unwrap_or(std::f64::consts::FRAC_PI_4);
                sequential_projective(self.d, angle, self.seed, tol)
            }
        }
    }
}

fn even_ranks(n: usize, d: usize) -> Result<Vec<usize>> {
    if n == 0 || n > d {
        return Err(Error::InvalidCatalog(format!("cannot split dimension {d} into {n} blocks")));
    }
    Ok((0..n).map(|k| d / n + usize::from(k < d % n)).collect())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidCatalog("dimension must be positive".into()));
    }
    Ok(())
}

pub fn identity<T: Real>(d: usize, tol: ToleranceConfig) -> Result<KrausSet<T>> {
    check_dim(d)?;
    KrausSet::new(vec![CMatrix::identity(d)], tol)
}

/// Seeded unitary obtained by orthonormalising a complex Gaussian matrix.
pub fn random_unitary<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> CMatrix<T> {
    loop {
        let g = CMatrix::<T>::random_gaussian(d, d, rng);
        let u = orthonormal_range(&g, &ToleranceConfig::default());
        if u.cols() == d {
            return u;
        }
    }
}

/// Single-operator channel `A ↦ U† A U`.
pub fn unitary<T: Real>(d: usize, seed: u64, tol: ToleranceConfig) -> Result<KrausSet<T>> {
    check_dim(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    KrausSet::new(vec![random_unitary(d, &mut rng)], tol)
}

/// Orthogonal projections onto consecutive coordinate blocks of the given ranks.
pub fn projective_measurement<T: Real>(d: usize, ranks: &[usize], tol: ToleranceConfig) -> Result<KrausSet<T>> {
    check_dim(d)?;
    let total: usize = ranks.iter().sum();
    if total != d || ranks.contains(&0) {
        return Err(Error::InvalidCatalog(format!(
            "projection ranks {ranks:?} must be positive and sum to {d}"
        )));
    }
    let mut ops = Vec::with_capacity(ranks.len());
    let mut start = 0;
    for &r in ranks {
        let diag: Vec<T> = (0..d)
            .map(|i| if (start..start + r).contains(&i) { T::one() } else { T::zero() })
            .collect();
        ops.push(CMatrix::from_real_diagonal(&diag));
        start += r;
    }
    KrausSet::new(ops, tol)
}

/// Rank-one projections onto the coordinate axes of `C^n`.
pub fn uniform_projective<T: Real>(n: usize, tol: ToleranceConfig) -> Result<KrausSet<T>> {
    projective_measurement(n, &vec![1; n], tol)
}

/// Diagonal Kraus operators whose `i`-th diagonal entries form a seeded
/// random point on the unit sphere of `C^n`.
pub fn commuting_generic<T: Real>(n: usize, d: usize, seed: u64, tol: ToleranceConfig) -> Result<KrausSet<T>> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::InvalidCatalog("need at least one Kraus operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diags = vec![vec![creal(T::zero()); d]; n];
    #[allow(clippy::needless_range_loop)]
    for i in 0..d {
        let point: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = point.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        for (k, (a, b)) in point.into_iter().enumerate() {
            diags[k][i] = cx(T::lit(a / norm), T::lit(b / norm));
        }
    }
    KrausSet::new(diags.iter().map(|v| CMatrix::from_diagonal(v)).collect(), tol)
}

/// `K_k = G_k S^{-1/2}` with `S = Σ G_k† G_k` and complex Gaussian `G_k`.
///
/// A singular `S` advances the seed deterministically.
pub fn random_unital<T: Real>(n: usize, d: usize, seed: u64, tol: ToleranceConfig) -> Result<KrausSet<T>> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::InvalidCatalog("need at least one Kraus operator".into()));
    }
    for attempt in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let gs: Vec<CMatrix<T>> = (0..n).map(|_| CMatrix::random_gaussian(d, d, &mut rng)).collect();
        let mut s = CMatrix::zeros(d, d);
        for g in &gs {
            s = &s + &g.adjoint_mul(g);
        }
        let s = s.hermitian_part();
        let Ok(root) = psd_inverse_sqrt(&s, &ToleranceConfig::default()) else {
            continue;
        };
        return KrausSet::new(gs.iter().map(|g| g.matmul(&root)).collect(), tol);
    }
    Err(Error::InvalidCatalog(format!("no invertible frame found from seed {seed}")))
}

/// Two sequential two-outcome projective measurements: first `{P, I-P}`,
/// then `{Q, I-Q}` where `Q` is `P` tilted by `angle` in every principal
/// plane. Returns the four operators `Q_b P_a` ordered `(a, b)` =
/// `(1,1), (1,2), (2,1), (2,2)`.
pub fn sequential_projective<T: Real>(d: usize, angle: f64, seed: u64, tol: ToleranceConfig) -> Result<KrausSet<T>> {
    if d < 2 {
        return Err(Error::InvalidCatalog("sequential measurements need d >= 2".into()));
    }
    if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidCatalog(format!("angle {angle} outside (0, pi/2)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unitary::<T>(d, &mut rng);
    let r = d / 2;
    let (c, s) = (T::lit(angle.cos()), T::lit(angle.sin()));
    let p_basis = u.select_columns(&(0..r).collect::<Vec<_>>());
    let q_basis = CMatrix::from_fn(d, r, |i, j| u[(i, j)] * c + u[(i, r + j)] * s);
    let p = p_basis.matmul(&p_basis.adjoint());
    let q = q_basis.matmul(&q_basis.adjoint());
    let id = CMatrix::identity(d);
    let ps = [p.clone(), &id - &p];
    let qs = [q.clone(), &id - &q];
    let mut ops = Vec::with_capacity(4);
    for pa in &ps {
        for qb in &qs {
            ops.push(qb.matmul(pa));
        }
    }
    KrausSet::new(ops, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn every_family_is_unital() {
        let specs = [
            CatalogSpec::new(Family::Identity, 1, 4, 0),
            CatalogSpec::new(Family::Unitary, 1, 5, 3),
            CatalogSpec::new(Family::Projective, 3, 3, 0),
            CatalogSpec::new(Family::Projective, 2, 5, 0),
            CatalogSpec::new(Family::CommutingGeneric, 2, 12, 1),
            CatalogSpec::new(Family::CommutingGeneric, 3, 20, 1),
            CatalogSpec::new(Family::RandomUnital, 2, 16, 1),
            CatalogSpec::new(Family::SequentialProjective, 4, 4, 1),
        ];
        for spec in specs {
            let k = spec.build::<f64>(tol()).unwrap();
            let r = k.validate();
            assert!(r.unitality_residual < 1e-12, "{spec:?}: {}", r.unitality_residual);
        }
    }

    #[test]
    fn projective_examples() {
        let k = projective_measurement::<f64>(3, &[1, 1, 1], tol()).unwrap();
        assert_eq!(k.n(), 3);
        assert_eq!(k.validate().unitality_residual, 0.0);
        for (i, p) in k.ops().iter().enumerate() {
            assert_eq!(*p, CMatrix::unit(3, i, i));
        }
        assert!(projective_measurement::<f64>(3, &[1, 1], tol()).is_err());
    }

    #[test]
    fn commuting_generic_commutes_exactly() {
        let k = commuting_generic::<f64>(3, 6, 5, tol()).unwrap();
        for a in k.ops() {
            for b in k.ops() {
                assert_eq!(a.matmul(b), b.matmul(a));
            }
        }
    }

    #[test]
    fn constructors_are_deterministic() {
        let a = random_unital::<f64>(2, 6, 42, tol()).unwrap();
        let b = random_unital::<f64>(2, 6, 42, tol()).unwrap();
        assert_eq!(a, b);
        let c = random_unital::<f64>(2, 6, 43, tol()).unwrap();
        assert_ne!(a, c);
        let s1 = sequential_projective::<f64>(4, 0.3, 9, tol()).unwrap();
        let s2 = sequential_projective::<f64>(4, 0.3, 9, tol()).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn sequential_rejects_degenerate_angle() {
        assert!(sequential_projective::<f64>(4, 0.0, 1, tol()).is_err());
        assert!(sequential_projective::<f64>(4, std::f64::consts::FRAC_PI_2, 1, tol()).is_err());
        let k = sequential_projective::<f64>(4, std::f64::consts::FRAC_PI_4, 1, tol()).unwrap();
        assert!(k.validate().unitality_residual < 1e-12);
        assert_eq!(k.n(), 4);
    }

    #[test]
    fn spec_serde_names() {
        let spec: CatalogSpec =
            serde_json::from_str(r#"{"family":"sequential_projective","d":4,"seed":2,"params":{"angle":0.5}}"#).unwrap();
        assert_eq!(spec.family, Family::SequentialProjective);
        assert_eq!(spec.params.angle, Some(0.5));
        assert_eq!(Family::parse("commuting_generic"), Some(Family::CommutingGeneric));
    }

    #[test]
    fn f32_catalog_builds() {
        let k = commuting_generic::<f32>(2, 5, 1, tol()).unwrap();
        assert!(k.unitality_residual() < 1e-5);
    }
}
