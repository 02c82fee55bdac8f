use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Singular values below `rank_rel_tol * sigma_max` count as zero.
    pub rank_rel_tol: f64,
    /// Acceptance threshold for identities such as unitality or isometry residuals.
    pub residual_tol: f64,
    /// Largest number of words `n^m` handled at a single level.
    pub word_count_cap: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-9,
            residual_tol: 1e-8,
            word_count_cap: 4096,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rank_rel_tol > 0.0 && self.rank_rel_tol.is_finite()) {
            return Err(Error::InvalidTolerance(format!(
                "rank_rel_tol must be positive, got {}",
                self.rank_rel_tol
            )));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(Error::InvalidTolerance(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.word_count_cap == 0 {
            return Err(Error::InvalidTolerance("word_count_cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_word_cap(mut self, cap: usize) -> Self {
        self.word_count_cap = cap;
        self
    }

    /// `n^m`, or an error when it exceeds `word_count_cap`.
    pub fn check_words(&self, n: usize, m: usize) -> Result<usize> {
        let mut total: usize = 1;
        for _ in 0..m {
            total = total.checked_mul(n).ok_or(Error::CapExceeded {
                requested: usize::MAX,
                cap: self.word_count_cap,
            })?;
            if total > self.word_count_cap {
                return Err(Error::CapExceeded {
                    requested: n.saturating_pow(m as u32),
                    cap: self.word_count_cap,
                });
            }
        }
        Ok(total)
    }
}
