//! Finite models of a total sequence `(v_n)`: a stored prefix `v_1..v_N`
//! plus a rule for the indices beyond it.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// What `v_k` is for `k > N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// `v_k = 0`.
    Zero,
    /// `v_k = v_{((k-1) mod N) + 1}`.
    Cyclic,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

impl fmt::Display for TailMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailMode::Zero => "zero",
            TailMode::Cyclic => "cyclic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFamily {
    field: Field,
    dim: usize,
    vectors: Vec<CVector>,
    tail: TailMode,
}

impl VectorFamily {
    pub fn new(field: Field, dim: usize, vectors: Vec<CVector>, tail: TailMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dimension must be at least 1".into()));
        }
        if vectors.is_empty() {
            return Err(Error::EmptyFamily);
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    found: v.len(),
                    expected: dim,
                });
            }
            for (component, c) in v.iter().enumerate() {
                if !c.re.is_finite() || !c.im.is_finite() {
                    return Err(Error::NonFinite { index, component });
                }
                if field == Field::Real && c.im != 0.0 {
                    return Err(Error::Input(format!(
                        "vector {index}, component {component}: imaginary part in a real family"
                    )));
                }
            }
        }
        Ok(Self {
            field,
            dim,
            vectors,
            tail,
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>], tail: TailMode) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let vectors = rows.iter().map(|r| linalg::real_vector(r)).collect();
        Self::new(Field::Real, dim.max(1), vectors, tail)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored vectors `N`.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn tail(&self) -> TailMode {
        self.tail
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    /// `v_k` for a 1-based index, following the tail rule past `N`.
    pub fn effective_vector(&self, k: usize) -> CVector {
        assert!(k >= 1, "sequence indices start at 1");
        let n = self.vectors.len();
        if k <= n {
            return self.vectors[k - 1].clone();
        }
        match self.tail {
            TailMode::Zero => CVector::zeros(self.dim),
            TailMode::Cyclic => self.vectors[(k - 1) % n].clone(),
        }
    }

    /// Stored index that `v_k` repeats in cyclic mode (identity otherwise).
    pub fn residue(&self, k: usize) -> usize {
        match self.tail {
            TailMode::Zero => k,
            TailMode::Cyclic => (k - 1) % self.vectors.len() + 1,
        }
    }

    /// Numerical rank of `v_1..v_N`.
    pub fn rank(&self, rank_tol: f64) -> Result<usize> {
        Ok(linalg::orthonormal_basis(self.dim, &self.vectors, rank_tol)?.rank())
    }

    pub fn to_json(&self) -> Value {
        let vectors: Vec<Value> = self
            .vectors
            .iter()
            .map(|v| {
                Value::Array(
                    v.iter()
                        .map(|c| match self.field {
                            Field::Real => Value::from(c.re),
                            Field::Complex => Value::from(vec![c.re, c.im]),
                        })
                        .collect(),
                )
            })
            .collect();
        serde_json::json!({
            "field": self.field,
            "dim": self.dim,
            "tail": self.tail,
            "vectors": vectors,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("family serializes");
        s.push('\n');
        s
    }

    pub fn to_csv_string(&self) -> Result<String> {
        if self.field != Field::Real {
            return Err(Error::Input(
                "CSV export supports real families only".into(),
            ));
        }
        if self.tail != TailMode::Zero {
            return Err(Error::Input("CSV export implies a zero tail".into()));
        }
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(vec![]);
        for v in &self.vectors {
            w.write_record(v.iter().map(|c| c.re.to_string()))
                .map_err(|e| Error::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let obj = doc
            .as_object()
            .ok_or_else(|| parse_err("document", "expected an object"))?;

        let field = match obj.get("field") {
            None => Field::Complex,
            Some(v) => match v.as_str() {
                Some("real") => Field::Real,
                Some("complex") => Field::Complex,
                _ => return Err(parse_err("field", "expected \"real\" or \"complex\"")),
            },
        };
        let tail = match obj.get("tail") {
            None => TailMode::Zero,
            Some(v) => match v.as_str() {
                Some("zero") => TailMode::Zero,
                Some("cyclic") => TailMode::Cyclic,
                _ => return Err(parse_err("tail", "expected \"zero\" or \"cyclic\"")),
            },
        };
        let dim = obj
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| parse_err("dim", "expected a non-negative integer"))?
            as usize;
        let rows = obj
            .get("vectors")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err("vectors", "expected an array of vectors"))?;
        if rows.is_empty() {
            return Err(Error::EmptyFamily);
        }

        let mut vectors = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let entries = row
                .as_array()
                .ok_or_else(|| parse_err(&format!("vectors[{i}]"), "expected an array"))?;
            if entries.len() != dim {
                return Err(Error::DimensionMismatch {
                    index: i,
                    found: entries.len(),
                    expected: dim,
                });
            }
            let mut v = CVector::zeros(dim);
            for (j, entry) in entries.iter().enumerate() {
                let ctx = format!("vectors[{i}][{j}]");
                v[j] = match entry {
                    Value::Number(_) => Complex64::new(number(entry, &ctx)?, 0.0),
                    Value::Array(pair) if pair.len() == 2 && field == Field::Complex => {
                        Complex64::new(number(&pair[0], &ctx)?, number(&pair[1], &ctx)?)
                    }
                    _ => {
                        let want = match field {
                            Field::Real => "a number",
                            Field::Complex => "a number or an [re, im] pair",
                        };
                        return Err(parse_err(&ctx, &format!("expected {want}")));
                    }
                };
            }
            vectors.push(v);
        }
        Self::new(field, dim, vectors, tail)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                context: format!("row {}", i + 1),
                message: e.to_string(),
            })?;
            let row = record
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    s.parse::<f64>().map_err(|e| Error::Parse {
                        context: format!("row {}, field {}", i + 1, j + 1),
                        message: format!("{s:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::DimensionMismatch {
                        index: i,
                        found: row.len(),
                        expected: first.len(),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Self::from_real_rows(&rows, TailMode::Zero)
    }
}

fn parse_err(context: &str, message: &str) -> Error {
    Error::Parse {
        context: context.to_string(),
        message: message.to_string(),
    }
}

fn number(v: &Value, ctx: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(ctx, "expected a finite number"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FamilyFormat {
    Json,
    Csv,
}

pub fn load_family(path: &Path, format: FamilyFormat) -> Result<VectorFamily> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        FamilyFormat::Json => VectorFamily::from_json_str(&text),
        FamilyFormat::Csv => VectorFamily::from_csv_str(&text),
    }
}

pub fn save_family(family: &VectorFamily, path: &Path, format: FamilyFormat) -> Result<()> {
    let text = match format {
        FamilyFormat::Json => family.to_json_string(),
        FamilyFormat::Csv => family.to_csv_string()?,
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `v_n = e_n`, `N = d`.
    Orthonormal,
    /// `v_n = e_n + e_{n+1}` for `n < d`, `v_d = e_d`.
    ShiftedSum,
    /// `v_n = e_1 + δ^n e_{min(n+1, d)}`.
    DampedTail,
    /// i.i.d. standard Gaussian entries.
    RandomGaussian,
    /// `e_1..e_d` followed by normalized all-ones vectors, cyclic tail.
    CyclicSpanning,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Orthonormal => "orthonormal",
            GeneratorKind::ShiftedSum => "shifted_sum",
            GeneratorKind::DampedTail => "damped_tail",
            GeneratorKind::RandomGaussian => "random_gaussian",
            GeneratorKind::CyclicSpanning => "cyclic_spanning",
        })
    }
}

pub const DEFAULT_DAMPING: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dim: usize,
    /// `N`; each kind has its own default when absent.
    pub count: Option<usize>,
    /// Overrides the kind's natural tail when set.
    pub tail: Option<TailMode>,
    pub damping: f64,
    pub seed: u64,
    /// Only consulted by `random_gaussian`.
    pub field: Field,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            count: None,
            tail: None,
            damping: DEFAULT_DAMPING,
            seed: 0,
            field: Field::Complex,
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = Some(count);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tail(mut self, tail: TailMode) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_field(mut self, field: Field) -> Self {
        self.field = field;
        self
    }
}

/// Builds the family described by `spec` and checks that it is total.
pub fn generate_family(spec: &GeneratorSpec) -> Result<VectorFamily> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::Generation("dimension must be at least 1".into()));
    }
    let e = |i: usize| linalg::unit_vector(d, i);
    let (field, vectors, tail) = match spec.kind {
        GeneratorKind::Orthonormal => {
            fixed_count(spec, d)?;
            (Field::Real, (0..d).map(e).collect(), TailMode::Zero)
        }
        GeneratorKind::ShiftedSum => {
            fixed_count(spec, d)?;
            let vs = (0..d)
                .map(|i| if i + 1 < d { e(i) + e(i + 1) } else { e(i) })
                .collect();
            (Field::Real, vs, TailMode::Zero)
        }
        GeneratorKind::DampedTail => {
            let delta = spec.damping;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Generation(format!(
                    "damping must lie in (0, 1), got {delta}"
                )));
            }
            let n = spec.count.unwrap_or(d);
            let vs = (1..=n)
                .map(|k| {
                    let mut v = e(0);
                    v[(k + 1).min(d) - 1] += Complex64::new(delta.powi(k as i32), 0.0);
                    v
                })
                .collect();
            (Field::Real, vs, TailMode::Zero)
        }
        GeneratorKind::RandomGaussian => {
            let n = spec.count.unwrap_or(d);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let vs = (0..n)
                .map(|_| {
                    CVector::from_fn(d, |_, _| match spec.field {
                        Field::Real => Complex64::new(StandardNormal.sample(&mut rng), 0.0),
                        Field::Complex => {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                        }
                    })
                })
                .collect();
            (spec.field, vs, TailMode::Zero)
        }
        GeneratorKind::CyclicSpanning => {
            let n = spec.count.unwrap_or(d + 1);
            let ones = CVector::from_element(d, Complex64::new(1.0 / (d as f64).sqrt(), 0.0));
            let vs = (0..n)
                .map(|i| if i < d { e(i) } else { ones.clone() })
                .collect();
            (Field::Real, vs, TailMode::Cyclic)
        }
    };
    let family = VectorFamily::new(field, d, vectors, spec.tail.unwrap_or(tail))
        .map_err(|e| Error::Generation(e.to_string()))?;
    let rank = family.rank(linalg::DEFAULT_RANK_TOL)?;
    if rank != d {
        return Err(Error::Generation(format!(
            "{} family with d = {d}, N = {} has rank {rank}, not total",
            spec.kind,
            family.len()
        )));
    }
    Ok(family)
}

fn fixed_count(spec: &GeneratorSpec, d: usize) -> Result<()> {
    match spec.count {
        Some(n) if n != d => Err(Error::Generation(format!(
            "{} families have exactly d = {d} vectors, got count {n}",
            spec.kind
        ))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(v: &[f64]) -> CVector {
        linalg::real_vector(v)
    }

    #[test]
    fn orthonormal_generator() {
        let f = generate_family(&GeneratorSpec::new(GeneratorKind::Orthonormal, 3)).unwrap();
        assert_eq!(
            f.vectors(),
            &[
                real(&[1., 0., 0.]),
                real(&[0., 1., 0.]),
                real(&[0., 0., 1.])
            ]
        );
        assert_eq!(f.tail(), TailMode::Zero);
    }

    #[test]
    fn shifted_sum_generator() {
        let f = generate_family(&GeneratorSpec::new(GeneratorKind::ShiftedSum, 3)).unwrap();
        assert_eq!(
            f.vectors(),
            &[
                real(&[1., 1., 0.]),
                real(&[0., 1., 1.]),
                real(&[0., 0., 1.])
            ]
        );
        assert_eq!(f.rank(1e-10).unwrap(), 3);
    }

    #[test]
    fn random_generator_is_deterministic() {
        let spec = GeneratorSpec::new(GeneratorKind::RandomGaussian, 4)
            .with_count(6)
            .with_seed(7);
        let a = generate_family(&spec).unwrap();
        let b = generate_family(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        let c = generate_family(&spec.clone().with_seed(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_reports_non_total_family() {
        let spec = GeneratorSpec::new(GeneratorKind::RandomGaussian, 4).with_count(3);
        assert!(matches!(generate_family(&spec), Err(Error::Generation(_))));
        let spec = GeneratorSpec::new(GeneratorKind::DampedTail, 3).with_damping(1.5);
        assert!(matches!(generate_family(&spec), Err(Error::Generation(_))));
    }

    #[test]
    fn cyclic_spanning_generator() {
        let f = generate_family(&GeneratorSpec::new(GeneratorKind::CyclicSpanning, 2)).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.tail(), TailMode::Cyclic);
    }

    #[test]
    fn effective_vector_tail_rules() {
        let zero = VectorFamily::from_real_rows(
            &[vec![1., 0.], vec![0., 1.], vec![1., 1.]],
            TailMode::Zero,
        )
        .unwrap();
        assert_eq!(zero.effective_vector(8), CVector::zeros(2));
        assert_eq!(zero.effective_vector(3), real(&[1., 1.]));

        let cyc = VectorFamily::from_real_rows(
            &[vec![1., 0.], vec![0., 1.], vec![1., 1.]],
            TailMode::Cyclic,
        )
        .unwrap();
        assert_eq!(cyc.effective_vector(5), real(&[0., 1.]));
        assert_eq!(cyc.residue(5), 2);
    }

    #[test]
    fn json_real_pair() {
        let f = VectorFamily::from_json_str(
            r#"{"field": "real", "dim": 2, "tail": "zero", "vectors": [[1, 0], [0, 1]]}"#,
        )
        .unwrap();
        assert_eq!(f.vectors(), &[real(&[1., 0.]), real(&[0., 1.])]);
    }

    #[test]
    fn json_dimension_mismatch_names_index() {
        let err = VectorFamily::from_json_str(
            r#"{"field": "real", "dim": 2, "vectors": [[1, 0], [0, 1, 2]]}"#,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                index: 1,
                found: 3,
                expected: 2
            }
        ));
        assert!(err.to_string().contains("vector 1"));
    }

    #[test]
    fn json_cyclic_tail_and_complex_pairs() {
        let f = VectorFamily::from_json_str(
            r#"{"field": "complex", "dim": 2, "tail": "cyclic", "vectors": [[[1, 2], 0], [[0, 0], [0, -1]]]}"#,
        )
        .unwrap();
        assert_eq!(f.tail(), TailMode::Cyclic);
        assert_eq!(f.vectors()[0][0], Complex64::new(1., 2.));
        assert_eq!(f.vectors()[1][1], Complex64::new(0., -1.));
    }

    #[test]
    fn json_diagnostics() {
        let empty = VectorFamily::from_json_str(r#"{"dim": 2, "vectors": []}"#).unwrap_err();
        assert!(matches!(empty, Error::EmptyFamily));

        let syntax =
            VectorFamily::from_json_str("{\"dim\": 2,\n \"vectors\": [[1, 0]").unwrap_err();
        assert!(
            matches!(syntax, Error::Parse { ref context, .. } if context.starts_with("line 2"))
        );

        let bad = VectorFamily::from_json_str(r#"{"field": "real", "dim": 1, "vectors": [["x"]]}"#)
            .unwrap_err();
        assert!(matches!(bad, Error::Parse { ref context, .. } if context == "vectors[0][0]"));

        let pair_in_real =
            VectorFamily::from_json_str(r#"{"field": "real", "dim": 1, "vectors": [[[1, 2]]]}"#);
        assert!(pair_in_real.is_err());

        let overflow = VectorFamily::from_json_str(r#"{"dim": 1, "vectors": [[1e400]]}"#);
        assert!(overflow.is_err());
    }

    #[test]
    fn csv_import() {
        let f = VectorFamily::from_csv_str("1, 0\n0.5, 2\n").unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.tail(), TailMode::Zero);
        assert_eq!(f.vectors()[1], real(&[0.5, 2.0]));
        assert!(matches!(
            VectorFamily::from_csv_str("1,0\n1\n"),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            VectorFamily::from_csv_str("1,zz\n"),
            Err(Error::Parse { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn json_round_trip_is_bit_exact(
            d in 1usize..5,
            rows in proptest::collection::vec(proptest::collection::vec((any::<f64>(), any::<f64>()), 4), 1..5),
            cyclic in any::<bool>(),
        ) {
            let vectors: Vec<CVector> = rows.iter().map(|r| {
                CVector::from_iterator(d, r.iter().take(d).map(|&(a, b)| {
                    let fin = |x: f64| if x.is_finite() { x } else { 0.0 };
                    Complex64::new(fin(a), fin(b))
                }))
            }).collect();
            let tail = if cyclic { TailMode::Cyclic } else { TailMode::Zero };
            let f = VectorFamily::new(Field::Complex, d, vectors, tail).unwrap();
            let back = VectorFamily::from_json_str(&f.to_json_string()).unwrap();
            prop_assert_eq!(f.len(), back.len());
            for (a, b) in f.vectors().iter().zip(back.vectors()) {
                for (x, y) in a.iter().zip(b.iter()) {
                    prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                    prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
            prop_assert_eq!(back.tail(), tail);
        }

        #[test]
        fn cyclic_effective_vector_is_periodic(n in 1usize..6, k in 1usize..40) {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, 1.0]).collect();
            let f = VectorFamily::from_real_rows(&rows, TailMode::Cyclic).unwrap();
            prop_assert_eq!(f.effective_vector(k), f.effective_vector(k + n));
        }

        #[test]
        fn generated_families_are_total(
            kind in prop_oneof![
                Just(GeneratorKind::Orthonormal),
                Just(GeneratorKind::ShiftedSum),
                Just(GeneratorKind::DampedTail),
                Just(GeneratorKind::RandomGaussian),
                Just(GeneratorKind::CyclicSpanning),
            ],
            d in 1usize..12,
            seed in any::<u64>(),
        ) {
            let f = generate_family(&GeneratorSpec::new(kind, d).with_seed(seed)).unwrap();
            prop_assert_eq!(f.rank(linalg::DEFAULT_RANK_TOL).unwrap(), d);
        }
    }
}
