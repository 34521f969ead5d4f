//! Approximants `z_n`, the perturbation `T`, the resolvent vectors `w_n` and
//! the weights `λ_k`, plus the end-to-end run.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{self, CanonicalBasis, TailSpanChain};
use crate::error::{Error, Result, Stage};
use crate::family::{TailMode, VectorFamily};
use crate::linalg::{self, CVector, DenseMatrix};
use crate::verify::{self, VerificationReport};

/// Residuals below this are accepted even when `3^{-n}` is smaller; binary64
/// cannot resolve `3^{-n}` once `n` passes roughly 33.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Exact-mode projections must reach at least this residual.
pub const EXACT_RESIDUAL_TOL: f64 = 1e-9;

/// Target relative truncation error of the Neumann series.
pub const NEUMANN_TARGET: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Minimum-norm least squares onto the tail span.
    Exact,
    /// Exact coefficients rounded to a power-of-two grid, so `T != 0`.
    Quantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Neumann,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Quantized => "quantized",
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Neumann => "neumann",
        })
    }
}

/// Allowed residual `||u_n - z_n||` for a nonzero `u_n`.
pub fn residual_budget(n: usize) -> f64 {
    3f64.powi(-(n as i32)).max(RESIDUAL_FLOOR)
}

/// `z_n` together with its coefficients over the tail `k >= ⌈n/2⌉`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant {
    pub z: CVector,
    /// Nonzero coefficients keyed by sequence index.
    pub gamma: BTreeMap<usize, Complex64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximantSet {
    items: Vec<Approximant>,
}

impl ApproximantSet {
    pub fn new(items: Vec<Approximant>) -> Self {
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `z_n`-record, 1-based.
    pub fn get(&self, n: usize) -> &Approximant {
        &self.items[n - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Approximant)> {
        self.items.iter().enumerate().map(|(i, a)| (i + 1, a))
    }

    pub fn residual_sum(&self) -> f64 {
        self.items.iter().map(|a| a.residual).sum()
    }

    /// Sorted keys of each `γ^{(n)}`.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.items
            .iter()
            .map(|a| a.gamma.keys().copied().collect())
            .collect()
    }
}

fn last_tail_index(family: &VectorFamily, start: usize) -> usize {
    match family.tail() {
        TailMode::Zero => family.len(),
        TailMode::Cyclic => start + family.len() - 1,
    }
}

fn round_to_grid(c: Complex64, step: f64) -> Complex64 {
    Complex64::new((c.re / step).round() * step, (c.im / step).round() * step)
}

fn sparse(coeffs: &CVector, start: usize) -> BTreeMap<usize, Complex64> {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
        .map(|(j, c)| (start + j, *c))
        .collect()
}

pub fn approximate_basis(
    u: &CanonicalBasis,
    family: &VectorFamily,
    mode: Mode,
    rank_tol: f64,
) -> Result<ApproximantSet> {
    let dim = family.dim();
    let mut items = Vec::with_capacity(u.len());
    for n in 1..=u.len() {
        if u.is_zero(n) {
            items.push(Approximant {
                z: CVector::zeros(dim),
                gamma: BTreeMap::new(),
                residual: 0.0,
            });
            continue;
        }
        let target = u.get(n);
        let start = n.div_ceil(2);
        let stop = last_tail_index(family, start);
        let cols: Vec<CVector> = (start..=stop).map(|k| family.effective_vector(k)).collect();
        if cols.is_empty() {
            return Err(Error::Approximation {
                n,
                residual: target.norm(),
                bound: residual_budget(n),
            });
        }
        let a = linalg::columns_to_matrix(dim, &cols)?;
        let exact = linalg::min_norm_least_squares(&a, target, rank_tol)?;
        let budget = residual_budget(n);

        let coeffs = match mode {
            Mode::Exact => {
                let residual = (target - &a * &exact).norm();
                if residual > EXACT_RESIDUAL_TOL || residual >= budget {
                    return Err(Error::Approximation {
                        n,
                        residual,
                        bound: budget.min(EXACT_RESIDUAL_TOL),
                    });
                }
                exact
            }
            Mode::Quantized => quantize(n, &a, target, &exact, budget / 2.0)?,
        };
        let z = &a * &coeffs;
        let residual = (target - &z).norm();
        items.push(Approximant {
            z,
            gamma: sparse(&coeffs, start),
            residual,
        });
    }
    Ok(ApproximantSet::new(items))
}

/// Rounds `exact` to the coarsest power-of-two grid whose residual stays
/// below `limit`.
fn quantize(
    n: usize,
    a: &DenseMatrix,
    target: &CVector,
    exact: &CVector,
    limit: f64,
) -> Result<CVector> {
    let biggest = exact
        .iter()
        .map(|c| c.re.abs().max(c.im.abs()))
        .fold(0.0, f64::max);
    if biggest == 0.0 {
        return Err(Error::Approximation {
            n,
            residual: target.norm(),
            bound: limit,
        });
    }
    let top = biggest.log2().ceil() as i32 + 1;
    // Below 2^-60 of the largest coefficient rounding no longer changes it.
    let bottom = top - 64;
    let mut last = f64::INFINITY;
    for p in (bottom..=top).rev() {
        let step = 2f64.powi(p);
        let q = exact.map(|c| round_to_grid(c, step));
        last = (target - a * &q).norm();
        if last < limit {
            return Ok(q);
        }
    }
    Err(Error::Approximation {
        n,
        residual: last,
        bound: limit,
    })
}

#[derive(Debug, Clone)]
pub struct PerturbationOperator {
    pub t: DenseMatrix,
    pub norm: f64,
    /// `Σ_n ρ_n`, an upper bound for `norm`.
    pub series_bound: f64,
}

pub fn build_perturbation(u: &CanonicalBasis, z: &ApproximantSet) -> Result<PerturbationOperator> {
    if u.len() != z.len() {
        return Err(Error::Input(format!(
            "{} basis vectors but {} approximants",
            u.len(),
            z.len()
        )));
    }
    let dim = u.dim();
    let mut t = DenseMatrix::zeros(dim, dim);
    for (n, approx) in z.iter() {
        if u.is_zero(n) {
            continue;
        }
        let un = u.get(n);
        t += linalg::rank_one(un, &(un - &approx.z));
    }
    let norm = linalg::operator_norm(&t);
    if norm >= 1.0 {
        return Err(Error::NotInvertible { norm });
    }
    Ok(PerturbationOperator {
        t,
        norm,
        series_bound: z.residual_sum(),
    })
}

/// Number of Neumann terms beyond the identity.
pub fn neumann_terms(norm: f64) -> usize {
    if norm == 0.0 {
        0
    } else {
        (NEUMANN_TARGET.ln() / norm.ln()).ceil().max(0.0) as usize
    }
}

/// `w_n = (I - T)^{-1} u_n`.
pub fn resolve_frame(
    t: &PerturbationOperator,
    u: &CanonicalBasis,
    method: Method,
) -> Result<Vec<CVector>> {
    if t.norm >= 1.0 {
        return Err(Error::NotInvertible { norm: t.norm });
    }
    let dim = u.dim();
    match method {
        Method::Direct => {
            let lu = (DMatrix::identity(dim, dim) - &t.t).lu();
            (1..=u.len())
                .map(|n| {
                    if u.is_zero(n) {
                        return Ok(CVector::zeros(dim));
                    }
                    lu.solve(u.get(n))
                        .ok_or(Error::NotInvertible { norm: t.norm })
                })
                .collect()
        }
        Method::Neumann => {
            let terms = neumann_terms(t.norm);
            Ok((1..=u.len())
                .map(|n| {
                    if u.is_zero(n) {
                        return CVector::zeros(dim);
                    }
                    let mut term = u.get(n).clone();
                    let mut acc = term.clone();
                    for _ in 0..terms {
                        term = &t.t * term;
                        acc += &term;
                    }
                    acc
                })
                .collect())
        }
    }
}

/// Weights keyed by sequence index.
pub type Weights = BTreeMap<usize, f64>;

/// `λ_k = Σ_{n <= 2k} 2^{n/2 + k + 1} ||w_n||^2 |γ^{(n)}_k|^2`.
pub fn scaling_weights(w: &[CVector], z: &ApproximantSet) -> Result<Weights> {
    if w.len() != z.len() {
        return Err(Error::Input(format!(
            "{} resolvent vectors but {} approximants",
            w.len(),
            z.len()
        )));
    }
    let mut lambda = Weights::new();
    for (n, approx) in z.iter() {
        let wn = w[n - 1].norm_squared();
        for (&k, gamma) in &approx.gamma {
            debug_assert!(n <= 2 * k);
            let scale = 2f64.powf(n as f64 / 2.0 + k as f64 + 1.0);
            *lambda.entry(k).or_insert(0.0) += scale * wn * gamma.norm_sqr();
        }
    }
    if let Some((&k, _)) = lambda.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Overflow { k });
    }
    Ok(lambda)
}

/// Adds `floor` to every weight, first filling in missing stored indices.
pub fn apply_floor(lambda: &Weights, family: &VectorFamily, floor: f64) -> Weights {
    let mut out = lambda.clone();
    if floor > 0.0 {
        for k in 1..=family.len() {
            out.entry(k).or_insert(0.0);
        }
        out.values_mut().for_each(|v| *v += floor);
    }
    out
}

/// Folds weights onto stored indices `1..N` (cyclic tails repeat vectors;
/// zero tails drop indices past `N`, whose vectors vanish).
pub fn effective_weights(lambda: &Weights, family: &VectorFamily) -> Weights {
    let mut out = Weights::new();
    for (&k, &v) in lambda {
        if family.tail() == TailMode::Zero && k > family.len() {
            continue;
        }
        *out.entry(family.residue(k)).or_insert(0.0) += v;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub method: Method,
    pub rank_tol: f64,
    pub lambda_floor: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            method: Method::Direct,
            rank_tol: linalg::DEFAULT_RANK_TOL,
            lambda_floor: 0.0,
            samples: 1000,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rank_tol > 0.0 && self.rank_tol.is_finite()) {
            return Err(Error::Input(format!(
                "rank_tol must be positive, got {}",
                self.rank_tol
            )));
        }
        if !(self.lambda_floor >= 0.0 && self.lambda_floor.is_finite()) {
            return Err(Error::Input(format!(
                "lambda_floor must be finite and non-negative, got {}",
                self.lambda_floor
            )));
        }
        if self.samples == 0 {
            return Err(Error::Input("samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t_norm: f64,
    pub series_bound: f64,
    pub identity_residual: f64,
    pub min_frame_eig: f64,
    /// Largest `||w_direct - w_neumann||` over all `n`.
    pub resolvent_agreement: f64,
    /// `1/A` for the unweighted frame operator; zero tails only, and absent
    /// when that operator is numerically singular.
    pub uniform_baseline: Option<f64>,
    pub mode: Mode,
    pub method: Method,
}

#[derive(Debug, Clone)]
pub struct ScalingCertificate {
    pub w: Vec<CVector>,
    /// Weights as computed (after the optional floor), keyed by sequence index.
    pub lambda: Weights,
    /// Weights folded onto stored indices `1..N`.
    pub lambda_eff: Weights,
    pub diagnostics: Diagnostics,
    pub report: VerificationReport,
}

impl ScalingCertificate {
    pub fn passed(&self) -> bool {
        self.report.all_passed()
    }
}

/// Every intermediate of one run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    pub chain: TailSpanChain,
    pub basis: CanonicalBasis,
    pub approximants: ApproximantSet,
    pub perturbation: PerturbationOperator,
    pub certificate: ScalingCertificate,
}

pub fn run_pipeline(family: &VectorFamily, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let chain =
        chain::compute_tail_chain(family, config.rank_tol).map_err(Error::at(Stage::TailChain))?;
    let basis = chain::build_canonical_basis(&chain).map_err(Error::at(Stage::CanonicalBasis))?;
    let approximants = approximate_basis(&basis, family, config.mode, config.rank_tol)
        .map_err(Error::at(Stage::Approximation))?;
    let perturbation =
        build_perturbation(&basis, &approximants).map_err(Error::at(Stage::Perturbation))?;
    let w =
        resolve_frame(&perturbation, &basis, config.method).map_err(Error::at(Stage::Resolvent))?;
    let other = match config.method {
        Method::Direct => Method::Neumann,
        Method::Neumann => Method::Direct,
    };
    let w_other =
        resolve_frame(&perturbation, &basis, other).map_err(Error::at(Stage::Resolvent))?;
    let resolvent_agreement = w
        .iter()
        .zip(&w_other)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let raw = scaling_weights(&w, &approximants).map_err(Error::at(Stage::Weights))?;
    let lambda = apply_floor(&raw, family, config.lambda_floor);
    let lambda_eff = effective_weights(&lambda, family);

    let uniform_baseline = match family.tail() {
        // Purely informational; a numerically singular unweighted operator just
        // leaves it out.
        TailMode::Zero => verify::uniform_baseline(family).ok(),
        TailMode::Cyclic => None,
    };

    let samples = verify::sample_unit_vectors(family.dim(), config.samples, config.seed);
    let inputs = verify::RunInputs {
        family,
        chain: &chain,
        basis: &basis,
        approximants: &approximants,
        perturbation: &perturbation,
        w: &w,
        resolvent_agreement,
        lambda_eff: &lambda_eff,
    };
    let report = verify::verify_run(&inputs, &samples, config.seed)
        .map_err(Error::at(Stage::Verification))?;

    let diagnostics = Diagnostics {
        t_norm: perturbation.norm,
        series_bound: perturbation.series_bound,
        identity_residual: report.get("identity").map(|c| c.lhs).unwrap_or(f64::NAN),
        min_frame_eig: report
            .get("lower_frame.min_eig")
            .map(|c| c.rhs)
            .unwrap_or(f64::NAN),
        resolvent_agreement,
        uniform_baseline,
        mode: config.mode,
        method: config.method,
    };
    Ok(PipelineRun {
        config: *config,
        chain,
        basis,
        approximants,
        perturbation,
        certificate: ScalingCertificate {
            w,
            lambda,
            lambda_eff,
            diagnostics,
            report,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_canonical_basis, compute_tail_chain};
    use crate::family::{generate_family, GeneratorKind, GeneratorSpec};
    use crate::linalg::{real_vector, unit_vector, DEFAULT_RANK_TOL};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn two_vector() -> VectorFamily {
        VectorFamily::from_real_rows(&[vec![1., 0.], vec![1., 1.]], TailMode::Zero).unwrap()
    }

    fn approximants(family: &VectorFamily, mode: Mode) -> (CanonicalBasis, ApproximantSet) {
        let chain = compute_tail_chain(family, DEFAULT_RANK_TOL).unwrap();
        let u = build_canonical_basis(&chain).unwrap();
        let z = approximate_basis(&u, family, mode, DEFAULT_RANK_TOL).unwrap();
        (u, z)
    }

    #[test]
    fn budget_follows_powers_of_three_then_floor() {
        assert_eq!(residual_budget(1), 1.0 / 3.0);
        assert_eq!(residual_budget(2), 1.0 / 9.0);
        assert_eq!(residual_budget(60), RESIDUAL_FLOOR);
    }

    #[test]
    fn orthonormal_exact_approximants() {
        let f = generate_family(&GeneratorSpec::new(GeneratorKind::Orthonormal, 2)).unwrap();
        let (_, z) = approximants(&f, Mode::Exact);
        assert!((z.get(1).z.clone() - unit_vector(2, 0)).norm() < 1e-14);
        assert!((z.get(1).gamma[&1] - 1.0).norm() < 1e-14);
        assert!((z.get(3).gamma[&2] - 1.0).norm() < 1e-14);
        assert!(z.iter().all(|(_, a)| a.residual < 1e-14));
        assert!(z.get(2).gamma.is_empty() && z.get(4).gamma.is_empty());
    }

    #[test]
    fn two_vector_exact_coefficients() {
        let (_, z) = approximants(&two_vector(), Mode::Exact);
        let g1 = &z.get(1).gamma;
        assert!((g1[&1] - SQRT2).norm() < 1e-12);
        assert!((g1[&2] + 1.0 / SQRT2).norm() < 1e-12);
        let g3 = &z.get(3).gamma;
        assert_eq!(g3.keys().copied().collect::<Vec<_>>(), vec![2]);
        assert!((g3[&2] - 1.0 / SQRT2).norm() < 1e-12);
    }

    #[test]
    fn quantized_residuals_are_positive_and_bounded() {
        let (u, z) = approximants(&two_vector(), Mode::Quantized);
        for n in u.nonzero_indices() {
            let r = z.get(n).residual;
            assert!(r > 0.0 && r < residual_budget(n) / 2.0, "n={n} r={r}");
        }
        let t = build_perturbation(&u, &z).unwrap();
        assert!(t.norm > 0.0);
        assert!(t.norm <= t.series_bound + 1e-10);
        assert!(t.series_bound <= 0.5);
    }

    #[test]
    fn supports_respect_tail_start() {
        let f = generate_family(
            &GeneratorSpec::new(GeneratorKind::RandomGaussian, 4)
                .with_count(9)
                .with_seed(3),
        )
        .unwrap();
        for mode in [Mode::Exact, Mode::Quantized] {
            let (_, z) = approximants(&f, mode);
            for (n, a) in z.iter() {
                if let Some(&min) = a.gamma.keys().next() {
                    assert!(min >= n.div_ceil(2));
                }
                let rebuilt = a.gamma.iter().fold(CVector::zeros(4), |acc, (&k, g)| {
                    acc + f.effective_vector(k) * *g
                });
                assert!((rebuilt - &a.z).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn exact_perturbation_is_negligible() {
        let (u, z) = approximants(&two_vector(), Mode::Exact);
        assert!(build_perturbation(&u, &z).unwrap().norm <= 1e-8);
    }

    #[test]
    fn single_entry_perturbation() {
        let u = CanonicalBasis::from_entries(2, vec![Some(unit_vector(2, 0))]);
        let e1 = unit_vector(2, 0);
        let z = ApproximantSet::new(vec![Approximant {
            z: &e1 * Complex64::new(0.5, 0.0),
            gamma: BTreeMap::new(),
            residual: 0.5,
        }]);
        let t = build_perturbation(&u, &z).unwrap();
        assert!((t.norm - 0.5).abs() < 1e-14);
        assert!((t.t[(0, 0)] - 0.5).norm() < 1e-15);

        for method in [Method::Direct, Method::Neumann] {
            let w = resolve_frame(&t, &u, method).unwrap();
            assert!(
                (&w[0] - real_vector(&[2.0, 0.0])).norm() < 1e-12,
                "{method}"
            );
        }
    }

    #[test]
    fn large_perturbation_is_not_invertible() {
        let u = CanonicalBasis::from_entries(1, vec![Some(unit_vector(1, 0))]);
        let z = ApproximantSet::new(vec![Approximant {
            z: CVector::zeros(1),
            gamma: BTreeMap::new(),
            residual: 1.0,
        }]);
        assert!(matches!(
            build_perturbation(&u, &z),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn zero_perturbation_resolvent_is_identity() {
        let u = CanonicalBasis::from_entries(2, vec![Some(unit_vector(2, 1)), None]);
        let t = PerturbationOperator {
            t: DenseMatrix::zeros(2, 2),
            norm: 0.0,
            series_bound: 0.0,
        };
        assert_eq!(neumann_terms(0.0), 0);
        for method in [Method::Direct, Method::Neumann] {
            let w = resolve_frame(&t, &u, method).unwrap();
            assert_eq!(w[0], unit_vector(2, 1));
            assert_eq!(w[1], CVector::zeros(2));
        }
    }

    #[test]
    fn orthonormal_weights_closed_form() {
        let f = generate_family(&GeneratorSpec::new(GeneratorKind::Orthonormal, 5)).unwrap();
        let run = run_pipeline(&f, &PipelineConfig::default()).unwrap();
        for k in 1..=5 {
            let want = 2f64.powf(2.0 * k as f64 + 0.5);
            let got = run.certificate.lambda[&k];
            assert!((got - want).abs() <= 1e-12 * want, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn two_vector_weights_by_hand() {
        let run = run_pipeline(&two_vector(), &PipelineConfig::default()).unwrap();
        let l = &run.certificate.lambda;
        assert!((l[&1] - 2f64.powf(3.5)).abs() < 1e-10);
        assert!((l[&2] - (2f64.powf(2.5) + 2f64.powf(3.5))).abs() < 1e-10);
        assert!((l[&1] - 11.3137).abs() < 1e-4 && (l[&2] - 16.9706).abs() < 1e-4);
    }

    #[test]
    fn unused_indices_have_no_weight() {
        let f = VectorFamily::from_real_rows(
            &[vec![0., 0.], vec![1., 0.], vec![0., 1.]],
            TailMode::Zero,
        )
        .unwrap();
        let run = run_pipeline(&f, &PipelineConfig::default()).unwrap();
        assert!(!run.certificate.lambda.contains_key(&1));

        let floored = PipelineConfig {
            lambda_floor: 1e-300,
            ..PipelineConfig::default()
        };
        let run = run_pipeline(&f, &floored).unwrap();
        assert_eq!(run.certificate.lambda[&1], 1e-300);
    }

    #[test]
    fn weights_overflow_is_reported() {
        let z = ApproximantSet::new(vec![Approximant {
            z: CVector::zeros(1),
            gamma: BTreeMap::from([(1, Complex64::new(1e200, 0.0))]),
            residual: 0.0,
        }]);
        let w = vec![real_vector(&[1.0])];
        assert!(matches!(
            scaling_weights(&w, &z),
            Err(Error::Overflow { k: 1 })
        ));
    }

    #[test]
    fn non_total_family_fails_in_first_stage() {
        let f =
            VectorFamily::from_real_rows(&[vec![1., 2.], vec![2., 4.]], TailMode::Zero).unwrap();
        let err = run_pipeline(&f, &PipelineConfig::default()).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::TailChain));
        assert!(matches!(err.root(), Error::NotTotal { rank: 1, dim: 2 }));
    }

    #[test]
    fn cyclic_weights_fold_onto_residues() {
        let f = generate_family(&GeneratorSpec::new(GeneratorKind::CyclicSpanning, 2)).unwrap();
        let run = run_pipeline(&f, &PipelineConfig::default()).unwrap();
        let total: f64 = run.certificate.lambda.values().sum();
        let folded: f64 = run.certificate.lambda_eff.values().sum();
        assert!((total - folded).abs() <= 1e-12 * total);
        assert!(run
            .certificate
            .lambda_eff
            .keys()
            .all(|&k| (1..=3).contains(&k)));
        assert!(run.certificate.passed(), "{:#?}", run.certificate.report);
    }
}
