//! Serialized certificates, CSV projections and the terminal summary.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::family::{Field, GeneratorSpec, TailMode, VectorFamily};
use crate::pipeline::{Method, Mode, PipelineConfig, PipelineRun, Weights};
use crate::verify::Check;

/// Where the analyzed family came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Generator(GeneratorSpec),
    Input { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub source: Source,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEntry {
    pub k: usize,
    pub value: f64,
    /// Absent when the value is zero.
    pub log2: Option<f64>,
}

/// JSON form of a successful run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateDoc {
    pub dim: usize,
    pub count: usize,
    pub field: Field,
    pub tail: TailMode,
    pub mode: Mode,
    pub method: Method,
    #[serde(rename = "T_norm")]
    pub t_norm: f64,
    pub series_bound: f64,
    pub identity_residual: f64,
    pub min_frame_eig: f64,
    pub resolvent_agreement: f64,
    pub uniform_baseline: Option<f64>,
    pub lambda: Vec<LambdaEntry>,
    pub lambda_eff: Vec<LambdaEntry>,
    pub w_norms: Vec<f64>,
    pub residuals: Vec<f64>,
    pub gamma_supports: Vec<Vec<usize>>,
    pub chain_ranks: Vec<usize>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub sample_count: usize,
    pub config: ConfigEcho,
}

fn entries(weights: &Weights) -> Vec<LambdaEntry> {
    weights
        .iter()
        .map(|(&k, &value)| LambdaEntry {
            k,
            value,
            log2: (value > 0.0).then(|| value.log2()),
        })
        .collect()
}

impl CertificateDoc {
    pub fn from_run(family: &VectorFamily, run: &PipelineRun, source: Source) -> Self {
        let cert = &run.certificate;
        let diag = &cert.diagnostics;
        Self {
            dim: family.dim(),
            count: family.len(),
            field: family.field(),
            tail: family.tail(),
            mode: diag.mode,
            method: diag.method,
            t_norm: diag.t_norm,
            series_bound: diag.series_bound,
            identity_residual: diag.identity_residual,
            min_frame_eig: diag.min_frame_eig,
            resolvent_agreement: diag.resolvent_agreement,
            uniform_baseline: diag.uniform_baseline,
            lambda: entries(&cert.lambda),
            lambda_eff: entries(&cert.lambda_eff),
            w_norms: cert.w.iter().map(|w| w.norm()).collect(),
            residuals: run.approximants.iter().map(|(_, a)| a.residual).collect(),
            gamma_supports: run.approximants.supports(),
            chain_ranks: run.chain.ranks(),
            passed: cert.passed(),
            checks: cert.report.checks.clone(),
            seed: cert.report.seed,
            sample_count: cert.report.sample_count,
            config: ConfigEcho {
                source,
                pipeline: run.config,
            },
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    /// `k,value,log2` rows for the computed weights.
    pub fn lambda_csv(&self) -> String {
        let mut out = String::from("k,value,log2\n");
        for e in &self.lambda {
            let log2 = e.log2.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", e.k, fmt_f64(e.value), log2);
        }
        out
    }

    pub fn lambda_range(&self) -> Option<(f64, f64)> {
        let values = self.lambda.iter().map(|e| e.value);
        let min = values.clone().fold(f64::INFINITY, f64::min);
        let max = values.fold(f64::NEG_INFINITY, f64::max);
        (!self.lambda.is_empty()).then_some((min, max))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "family: d={} N={} field={} tail={}",
            self.dim, self.count, self.field, self.tail
        );
        let _ = writeln!(s, "mode={} method={}", self.mode, self.method);
        let _ = writeln!(s, "T_norm = {}", fmt_f64(self.t_norm));
        let _ = writeln!(s, "identity_residual = {}", fmt_f64(self.identity_residual));
        let _ = writeln!(s, "min_frame_eig = {}", fmt_f64(self.min_frame_eig));
        if let Some(b) = self.uniform_baseline {
            let _ = writeln!(s, "uniform_baseline = {}", fmt_f64(b));
        }
        match self.lambda_range() {
            Some((lo, hi)) => {
                let _ = writeln!(
                    s,
                    "lambda: {} indices, range [{}, {}]",
                    self.lambda.len(),
                    fmt_f64(lo),
                    fmt_f64(hi)
                );
            }
            None => s.push_str("lambda: empty\n"),
        }
        s.push_str(&check_tally(&self.checks));
        s
    }
}

pub fn check_tally(checks: &[Check]) -> String {
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut s = format!("checks: {passed}/{} passed\n", checks.len());
    for c in checks.iter().filter(|c| !c.passed) {
        let _ = writeln!(
            s,
            "  FAILED {}: lhs={} rhs={} tol={}",
            c.name,
            fmt_f64(c.lhs),
            fmt_f64(c.rhs),
            fmt_f64(c.tolerance)
        );
    }
    s
}

/// Shortest round-trip decimal.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// The parts of a stored certificate that re-verification needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCertificate {
    pub dim: usize,
    pub lambda: Weights,
    pub seed: Option<u64>,
    pub sample_count: Option<usize>,
}

impl StoredCertificate {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("certificate line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let parse_err = |context: &str, message: &str| Error::Parse {
            context: context.into(),
            message: message.into(),
        };
        let dim = doc
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| parse_err("dim", "expected a non-negative integer"))?
            as usize;
        let items = doc
            .get("lambda")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err("lambda", "expected an array"))?;
        let mut lambda = Weights::new();
        for (i, item) in items.iter().enumerate() {
            let ctx = format!("lambda[{i}]");
            let k = item
                .get("k")
                .and_then(Value::as_u64)
                .filter(|&k| k >= 1)
                .ok_or_else(|| parse_err(&ctx, "expected an index k >= 1"))?
                as usize;
            let value = item
                .get("value")
                .and_then(Value::as_f64)
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| parse_err(&ctx, "expected a finite non-negative value"))?;
            if lambda.insert(k, value).is_some() {
                return Err(parse_err(&ctx, &format!("duplicate index {k}")));
            }
        }
        Ok(Self {
            dim,
            lambda,
            seed: doc.get("seed").and_then(Value::as_u64),
            sample_count: doc
                .get("sample_count")
                .and_then(Value::as_u64)
                .map(|v| v as usize),
        })
    }
}

/// One line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub mode: Mode,
    #[serde(rename = "T_norm")]
    pub t_norm: Option<f64>,
    pub min_frame_eig: Option<f64>,
    pub max_lambda: Option<f64>,
    /// `ok`, `failed` (a check did not pass), `overflow` or `error`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

pub const SWEEP_COLUMNS: &str = "d,N,mode,T_norm,min_frame_eig,max_lambda,status";

pub fn sweep_csv(rows: &[SweepRow], timing: bool) -> String {
    let mut out = String::from(SWEEP_COLUMNS);
    if timing {
        out.push_str(",runtime_ms");
    }
    out.push('\n');
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.d,
            r.n,
            r.mode,
            opt(r.t_norm),
            opt(r.min_frame_eig),
            opt(r.max_lambda),
            r.status
        );
        if timing {
            let _ = write!(out, ",{}", opt(r.runtime_ms));
        }
        out.push('\n');
    }
    out
}
