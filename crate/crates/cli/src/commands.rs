//! The subcommands, independent of argument parsing.
//!
//! Each command returns an [`Outcome`]: a report, an optional CSV table and,
//! when a check did not pass, the reason (exit status 1).

use std::path::Path;

use serde::{Deserialize, Serialize};
use stinespring::berezin::{convergence_report, dequantize, CorrelationData, StateSpec, TrendVerdict};
use stinespring::dilation::{
    complementary_state, complementary_state_traced, stinespring_isometry, unitary_dilation,
};
use stinespring::numeric::{isometry_residual, min_eigenvalue, op_norm};
use stinespring::{CatalogParams, CatalogSpec, Family, Kraus, Matrix, Subproduct, ToleranceConfig};

use crate::document::{digest, ChannelDocument, MatrixDoc, TolOverrides};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: Vec<String>,
    pub version: String,
    pub input_digest: String,
    pub payload: Payload,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRow {
    pub m: usize,
    pub d_m: usize,
    pub subproduct_residual_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub m: usize,
    pub l: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryRow {
    pub m: usize,
    pub r1: f64,
    pub r2: f64,
    pub trace_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub norm_gap: f64,
    pub vn_residual: f64,
    pub scaled_commutator: f64,
    pub limit_state_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Validation {
        dim: usize,
        n: usize,
        unitality_residual: f64,
        independence_rank: usize,
        minimal: bool,
        valid: bool,
    },
    Dimensions {
        minimalized: bool,
        rows: Vec<DimRow>,
    },
    SubproductCheck {
        tolerance: f64,
        worst: f64,
        rows: Vec<SplitRow>,
    },
    Dilation {
        level: usize,
        env_dim: usize,
        isometry: MatrixDoc,
        isometry_residual: f64,
        power_residual: f64,
        unitary: Option<MatrixDoc>,
        unitary_residual: Option<f64>,
        compression_residual: Option<f64>,
    },
    Complementary {
        output: MatrixDoc,
        formula_gap: f64,
        trace: f64,
        min_eigenvalue: f64,
    },
    Dequantization {
        level: usize,
        dim: usize,
        matrix: MatrixDoc,
        unitality_residual: f64,
        hermiticity_residual: f64,
        limit_state_gap: f64,
        symmetry: Vec<SymmetryRow>,
    },
    Convergence {
        rows: Vec<ConvergenceRow>,
        verdicts: std::collections::BTreeMap<String, TrendVerdict>,
    },
}

#[derive(Debug)]
pub struct Outcome {
    pub report: ReportDocument,
    pub csv: Option<String>,
    pub failure: Option<String>,
}

/// Command echo and tolerance overrides shared by every command.
pub struct Context {
    pub echo: Vec<String>,
    pub over: TolOverrides,
}

struct Loaded {
    doc: ChannelDocument,
    bytes: Vec<u8>,
    tol: ToleranceConfig,
    kraus: Kraus,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<(String, Vec<u8>), CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    Ok((text, bytes))
}

fn load(path: &Path, over: TolOverrides) -> Result<Loaded, CliError> {
    let (text, bytes) = read_text(path)?;
    let doc = ChannelDocument::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let tol = doc.tolerances(over)?;
    let kraus = doc.kraus_set(tol)?;
    Ok(Loaded { doc, bytes, tol, kraus })
}

fn read_matrix(path: &Path, dim: usize, what: &str) -> Result<(Matrix, Vec<u8>), CliError> {
    let (text, bytes) = read_text(path)?;
    let doc: MatrixDoc = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((doc.to_square(dim, what)?, bytes))
}

/// The channel as a minimal Kraus set; fails when it is not unital.
fn minimal(k: &Kraus) -> Result<(Kraus, bool), CliError> {
    let report = k.validate();
    if !report.valid {
        return Err(CliError::Failed(format!(
            "channel is not unital: residual {:e}",
            report.unitality_residual
        )));
    }
    if report.is_minimal() {
        Ok((k.clone(), false))
    } else {
        Ok((k.minimal_kraus()?, true))
    }
}

fn report(ctx: &Context, parts: &[&[u8]], payload: Payload) -> ReportDocument {
    ReportDocument {
        command: ctx.echo.clone(),
        version: VERSION.to_string(),
        input_digest: digest(parts),
        payload,
    }
}

fn csv_table<R: Serialize>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows are flat records");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

pub fn validate(ctx: &Context, path: &Path, minimalize: Option<&Path>) -> Result<Outcome, CliError> {
    let l = load(path, ctx.over)?;
    let r = l.kraus.validate();
    let failure = (!r.valid).then(|| {
        format!(
            "unitality residual {:e} exceeds {:e}",
            r.unitality_residual, l.tol.residual_tol
        )
    });
    if let (Some(out), true) = (minimalize, r.valid) {
        let reduced = l.kraus.minimal_kraus()?;
        let mut doc = ChannelDocument::from_kraus(&reduced);
        doc.state = l.doc.state.clone();
        doc.tol = l.doc.tol;
        write_file(out, &doc.to_json())?;
    }
    let payload = Payload::Validation {
        dim: l.kraus.dim(),
        n: r.n,
        unitality_residual: r.unitality_residual,
        independence_rank: r.independence_rank,
        minimal: r.is_minimal(),
        valid: r.valid,
    };
    Ok(Outcome {
        report: report(ctx, &[&l.bytes], payload),
        csv: None,
        failure,
    })
}

pub fn dims(ctx: &Context, path: &Path, max_m: usize) -> Result<Outcome, CliError> {
    let l = load(path, ctx.over)?;
    let (k, minimalized) = minimal(&l.kraus)?;
    let s = Subproduct::build(&k, max_m)?;
    let rows = (0..=max_m)
        .map(|m| {
            Ok(DimRow {
                m,
                d_m: s.dim(m)?,
                subproduct_residual_max: s.max_split_residual(m)?,
            })
        })
        .collect::<Result<Vec<_>, stinespring::Error>>()?;
    let csv = csv_table(&rows);
    Ok(Outcome {
        report: report(ctx, &[&l.bytes], Payload::Dimensions { minimalized, rows }),
        csv: Some(csv),
        failure: None,
    })
}

pub fn subproduct_check(ctx: &Context, path: &Path, max_m: usize) -> Result<Outcome, CliError> {
    let l = load(path, ctx.over)?;
    let (k, _) = minimal(&l.kraus)?;
    let s = Subproduct::build(&k, max_m)?;
    let mut rows = Vec::new();
    for total in 0..=max_m {
        for m in 0..=total {
            rows.push(SplitRow {
                m,
                l: total - m,
                residual: s.subproduct_residual(m, total - m)?,
            });
        }
    }
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let tolerance = l.tol.residual_tol;
    let failure = (worst >= tolerance).then(|| format!("subproduct residual {worst:e} exceeds {tolerance:e}"));
    let csv = csv_table(&rows);
    Ok(Outcome {
        report: report(ctx, &[&l.bytes], Payload::SubproductCheck { tolerance, worst, rows }),
        csv: Some(csv),
        failure,
    })
}

pub fn dilate(ctx: &Context, path: &Path, level: usize) -> Result<Outcome, CliError> {
    let l = load(path, ctx.over)?;
    let (k, _) = minimal(&l.kraus)?;
    let d = k.dim();
    let s = Subproduct::build(&k, level.max(1))?;
    let v = stinespring_isometry(&s, level)?;
    let env_dim = s.dim(level)?;
    let mut power_residual = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let a = Matrix::unit(d, i, j);
            let lhs = v.adjoint_mul(&a.kron(&Matrix::identity(env_dim)).matmul(&v));
            let rhs = k.heisenberg_power(&a, level)?;
            power_residual = power_residual.max(op_norm(&(&lhs - &rhs)));
        }
    }
    let (mut unitary, mut unitary_residual, mut compression_residual) = (None, None, None);
    if level == 1 {
        let bundle = unitary_dilation(&k)?;
        let w = bundle.unitary().expect("level-one bundles carry W");
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let a = Matrix::unit(d, i, j);
                worst = worst.max(op_norm(&(&bundle.compress(&a)? - &k.apply_heisenberg(&a)?)));
            }
        }
        unitary_residual = Some(isometry_residual(w).max(isometry_residual(&w.adjoint())));
        unitary = Some(MatrixDoc::from_matrix(w));
        compression_residual = Some(worst);
    }
    let tol = l.tol.residual_tol;
    let worst = power_residual
        .max(unitary_residual.unwrap_or(0.0))
        .max(compression_residual.unwrap_or(0.0));
    let failure = (worst > tol).then(|| format!("dilation residual {worst:e} exceeds {tol:e}"));
    let payload = Payload::Dilation {
        level,
        env_dim,
        isometry_residual: isometry_residual(&v),
        isometry: MatrixDoc::from_matrix(&v),
        power_residual,
        unitary,
        unitary_residual,
        compression_residual,
    };
    Ok(Outcome {
        report: report(ctx, &[&l.bytes], payload),
        csv: None,
        failure,
    })
}

fn state_of(l: &Loaded, override_path: Option<&Path>, extra: &mut Vec<Vec<u8>>) -> Result<Matrix, CliError> {
    if let Some(p) = override_path {
        let (m, bytes) = read_matrix(p, l.kraus.dim(), "state")?;
        extra.push(bytes);
        return Ok(m);
    }
    let d = l.kraus.dim();
    Ok(l.doc
        .state_matrix()?
        .unwrap_or_else(|| Matrix::identity(d).scale(1.0 / d as f64)))
}

pub fn complementary(ctx: &Context, path: &Path, state: Option<&Path>) -> Result<Outcome, CliError> {
    let l = load(path, ctx.over)?;
    let mut extra = Vec::new();
    let rho = state_of(&l, state, &mut extra)?;
    let (k, _) = minimal(&l.kraus)?;
    let out = complementary_state(&k, &rho)?;
    let traced = complementary_state_traced(&unitary_dilation(&k)?, &rho)?;
    let formula_gap = op_norm(&(&out - &traced));
    let tol = l.tol.residual_tol;
    let failure = (formula_gap > tol).then(|| format!("complementary formulas differ by {formula_gap:e}"));
    let payload = Payload::Complementary {
        trace: out.trace().re,
        min_eigenvalue: min_eigenvalue(&out)?,
        output: MatrixDoc::from_matrix(&out),
        formula_gap,
    };
    let mut parts: Vec<&[u8]> = vec![&l.bytes];
    parts.extend(extra.iter().map(|b| b.as_slice()));
    Ok(Outcome {
        report: report(ctx, &parts, payload),
        csv: None,
        failure,
    })
}

fn correlations(l: &Loaded, k: &Kraus, max_m: usize) -> Result<(Subproduct, CorrelationData<f64>), CliError> {
    let s = Subproduct::build(k, max_m)?;
    let st = match l.doc.state_matrix()? {
        Some(rho) => StateSpec::new(k, rho)?,
        None => StateSpec::maximally_mixed(k)?,
    };
    let c = CorrelationData::build(&s, st, max_m)?;
    Ok((s, c))
}

pub fn dequantize_cmd(ctx: &Context, path: &Path, observable: &Path, level: usize) -> Result<Outcome, CliError> {
    if level == 0 {
        return Err(CliError::Input("--level must be at least 1".into()));
    }
    let l = load(path, ctx.over)?;
    let (a, obs_bytes) = read_matrix(observable, l.kraus.dim(), "observable")?;
    let (k, _) = minimal(&l.kraus)?;
    let (s, c) = correlations(&l, &k, level)?;
    let psi = dequantize(&s, &c, &a, level)?;
    let id = dequantize(&s, &c, &Matrix::identity(k.dim()), level)?;
    let lvl = c.level(level)?;
    let expect = c.state().rho0().trace_of_product(&a).re;
    let symmetry = c
        .levels()
        .iter()
        .map(|x| SymmetryRow {
            m: x.level,
            r1: x.symmetry.0,
            r2: x.symmetry.1,
            trace_q: x.trace,
        })
        .collect();
    let payload = Payload::Dequantization {
        level,
        dim: psi.rows(),
        unitality_residual: op_norm(&(&id - &Matrix::identity(psi.rows()))),
        hermiticity_residual: psi.hermiticity_residual(),
        limit_state_gap: (lvl.q.trace_of_product(&psi).re / lvl.trace - expect).abs(),
        matrix: MatrixDoc::from_matrix(&psi),
        symmetry,
    };
    Ok(Outcome {
        report: report(ctx, &[&l.bytes, &obs_bytes], payload),
        csv: None,
        failure: None,
    })
}

pub fn converge(ctx: &Context, path: &Path, a: &Path, b: &Path, max_m: usize) -> Result<Outcome, CliError> {
    if max_m == 0 {
        return Err(CliError::Input("--max-m must be at least 1".into()));
    }
    let l = load(path, ctx.over)?;
    let (am, a_bytes) = read_matrix(a, l.kraus.dim(), "observable A")?;
    let (bm, b_bytes) = read_matrix(b, l.kraus.dim(), "observable B")?;
    let (k, _) = minimal(&l.kraus)?;
    let (s, c) = correlations(&l, &k, max_m)?;
    let r = convergence_report(&s, &c, &am, &bm, max_m)?;
    let rows: Vec<ConvergenceRow> = (0..r.levels.len())
        .map(|i| ConvergenceRow {
            m: r.levels[i],
            norm_gap: r.norm_gap[i],
            vn_residual: r.vn_residual[i],
            scaled_commutator: r.scaled_commutator[i],
            limit_state_gap: r.limit_state_gap[i],
        })
        .collect();
    let csv = csv_table(&rows);
    let payload = Payload::Convergence {
        rows,
        verdicts: r.verdicts,
    };
    Ok(Outcome {
        report: report(ctx, &[&l.bytes, &a_bytes, &b_bytes], payload),
        csv: Some(csv),
        failure: None,
    })
}

/// Catalog arguments as given on the command line.
pub struct CatalogArgs {
    pub family: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub ranks: Option<Vec<usize>>,
    pub angle: Option<f64>,
    pub spec_only: bool,
}

pub fn catalog_doc(args: &CatalogArgs, over: TolOverrides) -> Result<ChannelDocument, CliError> {
    let family = Family::parse(&args.family).ok_or_else(|| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
        CliError::Input(format!("unknown family {:?}; expected one of {}", args.family, names.join(", ")))
    })?;
    let spec = CatalogSpec {
        family,
        n: args.n,
        d: args.d,
        seed: args.seed,
        params: CatalogParams {
            ranks: args.ranks.clone(),
            angle: args.angle,
        },
    };
    let tol = ToleranceConfig::default();
    let tol = ToleranceConfig {
        rank_rel_tol: over.rank.unwrap_or(tol.rank_rel_tol),
        residual_tol: over.residual.unwrap_or(tol.residual_tol),
        word_count_cap: over.word_cap.unwrap_or(tol.word_count_cap),
    };
    tol.validate()?;
    let k: Kraus = spec.build(tol)?;
    if args.spec_only {
        return Ok(ChannelDocument {
            dim: k.dim(),
            kraus: None,
            state: None,
            tol: None,
            catalog: Some(spec),
        });
    }
    Ok(ChannelDocument::from_kraus(&k))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
