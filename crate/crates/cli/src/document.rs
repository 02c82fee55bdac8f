//! JSON documents read and written by the command-line tool.
//!
//! Floats are written with serde_json's shortest round-trip formatting and
//! parsed with its `float_roundtrip` feature, so a document survives
//! serialize → parse bit-exactly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stinespring::{CatalogSpec, Kraus, Matrix, ToleranceConfig};

use crate::error::CliError;

/// A complex matrix as paired real arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            re: m.real_parts(),
            im: m.imag_parts(),
        }
    }

    pub fn to_matrix(&self) -> Result<Matrix, CliError> {
        let m = Matrix::from_re_im(&self.re, &self.im).map_err(|e| CliError::Input(e.to_string()))?;
        if !m.is_finite() {
            return Err(CliError::Input("matrix has non-finite entries".into()));
        }
        Ok(m)
    }

    pub fn to_square(&self, dim: usize, what: &str) -> Result<Matrix, CliError> {
        let m = self.to_matrix()?;
        if m.shape() != (dim, dim) {
            return Err(CliError::Input(format!(
                "{what} is {}x{}, expected {dim}x{dim}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }
}

/// Tolerance overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct TolOverrides {
    pub rank: Option<f64>,
    pub residual: Option<f64>,
    pub word_cap: Option<usize>,
}

/// A channel given either by explicit Kraus matrices or by a catalog spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<ToleranceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogSpec>,
}

impl ChannelDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| CliError::Input(format!("channel document: {e}")))?;
        match (&doc.kraus, &doc.catalog) {
            (Some(_), Some(_)) => Err(CliError::Input(
                "channel document has both \"kraus\" and \"catalog\"".into(),
            )),
            (None, None) => Err(CliError::Input(
                "channel document needs \"kraus\" or \"catalog\"".into(),
            )),
            _ => Ok(doc),
        }
    }

    pub fn from_kraus(k: &Kraus) -> Self {
        Self {
            dim: k.dim(),
            kraus: Some(k.ops().iter().map(MatrixDoc::from_matrix).collect()),
            state: None,
            tol: None,
            catalog: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn tolerances(&self, over: TolOverrides) -> Result<ToleranceConfig, CliError> {
        let mut t = self.tol.unwrap_or_default();
        if let Some(r) = over.rank {
            t.rank_rel_tol = r;
        }
        if let Some(r) = over.residual {
            t.residual_tol = r;
        }
        if let Some(c) = over.word_cap {
            t.word_count_cap = c;
        }
        t.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(t)
    }

    /// The Kraus set, without any unitality or minimality check.
    pub fn kraus_set(&self, tol: ToleranceConfig) -> Result<Kraus, CliError> {
        let k = match (&self.kraus, &self.catalog) {
            (Some(ops), None) => {
                let ops = ops
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.to_square(self.dim, &format!("Kraus operator {}", i + 1)))
                    .collect::<Result<Vec<_>, _>>()?;
                Kraus::new(ops, tol).map_err(|e| CliError::Input(e.to_string()))?
            }
            (None, Some(spec)) => spec.build(tol).map_err(|e| CliError::Input(e.to_string()))?,
            _ => unreachable!("checked in parse"),
        };
        if k.dim() != self.dim {
            return Err(CliError::Input(format!(
                "document declares dim {} but the channel acts on dimension {}",
                self.dim,
                k.dim()
            )));
        }
        Ok(k)
    }

    pub fn state_matrix(&self) -> Result<Option<Matrix>, CliError> {
        self.state.as_ref().map(|s| s.to_square(self.dim, "state")).transpose()
    }
}

/// SHA-256 over one or more input files, each prefixed by its length.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stinespring::{catalog, Family};

    #[test]
    fn round_trip_is_bit_exact() {
        let k = catalog::random_unital::<f64>(3, 4, 12, ToleranceConfig::default()).unwrap();
        let doc = ChannelDocument::from_kraus(&k);
        let back = ChannelDocument::parse(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        let k2 = back.kraus_set(ToleranceConfig::default()).unwrap();
        for (a, b) in k.ops().iter().zip(k2.ops()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn catalog_documents_build() {
        let text = r#"{"dim": 3, "catalog": {"family": "projective", "n": 3, "d": 3}}"#;
        let doc = ChannelDocument::parse(text).unwrap();
        assert_eq!(doc.catalog.as_ref().unwrap().family, Family::Projective);
        let k = doc.kraus_set(ToleranceConfig::default()).unwrap();
        assert_eq!(k.n(), 3);
    }

    #[test]
    fn exactly_one_source() {
        assert!(ChannelDocument::parse(r#"{"dim": 2}"#).is_err());
        let both = r#"{"dim": 1, "kraus": [{"re": [[1.0]], "im": [[0.0]]}],
                       "catalog": {"family": "identity", "d": 1}}"#;
        assert!(ChannelDocument::parse(both).is_err());
    }

    #[test]
    fn declared_dimension_is_checked() {
        let text = r#"{"dim": 3, "catalog": {"family": "identity", "d": 2}}"#;
        let doc = ChannelDocument::parse(text).unwrap();
        assert!(doc.kraus_set(ToleranceConfig::default()).is_err());
        let text = r#"{"dim": 2, "kraus": [{"re": [[1.0]], "im": [[0.0]]}]}"#;
        let doc = ChannelDocument::parse(text).unwrap();
        assert!(doc.kraus_set(ToleranceConfig::default()).is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let doc = ChannelDocument::parse(r#"{"dim": 1, "catalog": {"family": "identity", "d": 1}, "tol": {"residual_tol": 1e-6}}"#)
            .unwrap();
        let t = doc
            .tolerances(TolOverrides {
                rank: Some(1e-7),
                ..Default::default()
            })
            .unwrap();
        assert_eq!((t.rank_rel_tol, t.residual_tol), (1e-7, 1e-6));
        assert!(doc
            .tolerances(TolOverrides {
                rank: Some(-1.0),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn digest_separates_inputs() {
        assert_ne!(digest(&[b"ab", b"c"]), digest(&[b"a", b"bc"]));
        assert_eq!(digest(&[b"x"]).len(), 64);
    }
}
