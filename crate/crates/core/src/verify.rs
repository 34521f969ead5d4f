//! Independent checks of every identity and inequality the construction
//! relies on. Failures are recorded in the report, never raised.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::{CanonicalBasis, TailSpanChain, NESTING_TOL};
use crate::error::{Error, Result};
use crate::family::VectorFamily;
use crate::linalg::{self, CVector, DenseMatrix};
use crate::pipeline::{residual_budget, ApproximantSet, PerturbationOperator, Weights};

pub const OPERATOR_TOL: f64 = 1e-8;
pub const RELATIVE_TOL: f64 = 1e-8;
pub const GRAM_TOL: f64 = 1e-9;
pub const MEMBERSHIP_TOL: f64 = 1e-8;
pub const RESOLVENT_RESIDUAL_TOL: f64 = 1e-12;
pub const RESOLVENT_AGREEMENT_TOL: f64 = 1e-9;

/// One instrumented inequality `lhs <= rhs + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: lhs <= rhs + tolerance,
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance,
        }
    }

    /// `lhs <= rhs (1 + rel)`.
    pub fn relative(name: impl Into<String>, lhs: f64, rhs: f64, rel: f64) -> Self {
        Self::new(name, lhs, rhs, rel * rhs.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub seed: u64,
    pub sample_count: usize,
}

impl VerificationReport {
    pub fn new(mut checks: Vec<Check>, seed: u64, sample_count: usize) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        Self {
            checks,
            seed,
            sample_count,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Seeded complex Gaussian vectors, normalized to unit length.
pub fn sample_unit_vectors(dim: usize, count: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = CVector::from_fn(dim, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            });
            let norm = v.norm();
            if norm > 0.0 {
                break v / Complex64::new(norm, 0.0);
            }
        })
        .collect()
}

/// `<v_j, x>` for the stored vectors, reused for every tail index.
struct Projections(Vec<Complex64>);

impl Projections {
    fn new(family: &VectorFamily, x: &CVector) -> Self {
        Self(family.vectors().iter().map(|v| v.dotc(x)).collect())
    }

    /// `<v̂_k, x>` under the family's tail rule.
    fn at(&self, family: &VectorFamily, k: usize) -> Complex64 {
        let j = family.residue(k);
        if j > self.0.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.0[j - 1]
        }
    }
}

/// `S_λ = Σ_k λ_k v̂_k v̂_k^*`.
pub fn frame_operator(family: &VectorFamily, lambda: &Weights) -> DenseMatrix {
    let d = family.dim();
    let mut s = DenseMatrix::zeros(d, d);
    for (&k, &weight) in lambda {
        let v = family.effective_vector(k);
        s += linalg::rank_one(&v, &v) * Complex64::new(weight, 0.0);
    }
    s
}

fn weighted_energy(family: &VectorFamily, lambda: &Weights, p: &Projections) -> f64 {
    lambda
        .iter()
        .map(|(&k, &weight)| weight * p.at(family, k).norm_sqr())
        .sum()
}

/// `||x||^2 <= Σ λ_k |<v_k, x>|^2`, sampled and through the eigenvalue of
/// `S_λ`; a third entry asserts that the analytic bound implies the sampled one.
pub fn check_lower_frame_with(
    family: &VectorFamily,
    lambda_eff: &Weights,
    samples: &[CVector],
) -> Vec<Check> {
    let mut worst: Option<(f64, f64)> = None;
    for x in samples {
        let p = Projections::new(family, x);
        let lhs = x.norm_squared();
        let rhs = weighted_energy(family, lambda_eff, &p);
        if worst.is_none_or(|(l, r)| rhs - lhs < r - l) {
            worst = Some((lhs, rhs));
        }
    }
    let (lhs, rhs) = worst.unwrap_or((0.0, 0.0));
    let sampled = Check::new("lower_frame.sampled", lhs, rhs, OPERATOR_TOL);

    let min_eig =
        linalg::hermitian_min_eig(&frame_operator(family, lambda_eff)).unwrap_or(f64::NAN);
    let analytic = Check::new("lower_frame.min_eig", 1.0, min_eig, OPERATOR_TOL);
    let contradiction = if analytic.passed && !sampled.passed {
        1.0
    } else {
        0.0
    };
    let implied = Check::new("lower_frame.implied", contradiction, 0.0, 0.0);
    vec![analytic, implied, sampled]
}

pub fn check_lower_frame(
    family: &VectorFamily,
    lambda_eff: &Weights,
    samples: usize,
    seed: u64,
) -> VerificationReport {
    let xs = sample_unit_vectors(family.dim(), samples, seed);
    VerificationReport::new(
        check_lower_frame_with(family, lambda_eff, &xs),
        seed,
        samples,
    )
}

/// `||I - Σ_n w_n z_n^*||`.
pub fn identity_residual(w: &[CVector], z: &ApproximantSet) -> f64 {
    let d = z.get(1).z.len();
    let mut r = DenseMatrix::identity(d, d);
    for (n, approx) in z.iter() {
        r -= linalg::rank_one(&w[n - 1], &approx.z);
    }
    linalg::operator_norm(&r)
}

pub fn check_identity(w: &[CVector], z: &ApproximantSet) -> Check {
    Check::new("identity", identity_residual(w, z), OPERATOR_TOL, 0.0)
}

/// `((Σ β_n)^2, Σ 2^n β_n^2)` with `n` counted from 1.
pub fn weighted_cs_gap(beta: &[f64]) -> Result<(f64, f64)> {
    if let Some((i, b)) = beta
        .iter()
        .enumerate()
        .find(|(_, b)| !(**b >= 0.0 && b.is_finite()))
    {
        return Err(Error::Input(format!(
            "beta[{i}] = {b} is not a finite non-negative number"
        )));
    }
    let sum: f64 = beta.iter().sum();
    let rhs = beta
        .iter()
        .enumerate()
        .map(|(i, b)| 2f64.powi(i as i32 + 1) * b * b)
        .sum();
    Ok((sum * sum, rhs))
}

fn z_bound_pair(
    family: &VectorFamily,
    n: usize,
    approx: &crate::pipeline::Approximant,
    x: &CVector,
    p: &Projections,
) -> (f64, f64) {
    let lhs = approx.z.dotc(x).norm_sqr();
    let sum: f64 = approx
        .gamma
        .iter()
        .map(|(&k, g)| 2f64.powi(k as i32) * g.norm_sqr() * p.at(family, k).norm_sqr())
        .sum();
    let rhs = 2f64.powf(1.0 - n as f64 / 2.0) * sum;
    (lhs, rhs)
}

/// `|z_n^* x|^2 <= 2^{1 - n/2} Σ_k 2^k |γ^{(n)}_k|^2 |<v̂_k, x>|^2` for every `n`.
pub fn check_z_bound(z: &ApproximantSet, family: &VectorFamily, x: &CVector) -> Vec<Check> {
    let p = Projections::new(family, x);
    z.iter()
        .map(|(n, approx)| {
            let (lhs, rhs) = z_bound_pair(family, n, approx, x, &p);
            Check::new(format!("z_bound.{n}"), lhs, rhs, 1e-10 * (1.0 + rhs))
        })
        .collect()
}

pub fn check_chain(chain: &TailSpanChain, u: &CanonicalBasis) -> Vec<Check> {
    let bad_drops = chain
        .drops()
        .iter()
        .filter(|d| !(0..=1).contains(*d))
        .count();
    let nesting = chain.nesting_residuals().into_iter().fold(0.0, f64::max);
    let membership = u
        .nonzero_indices()
        .into_iter()
        .map(|n| chain.basis(n.div_ceil(2)).residual_of(u.get(n)).norm())
        .fold(0.0, f64::max);
    let count = u.nonzero_indices().len() as f64;
    let accounting = chain.drops().iter().sum::<i64>() as f64 + chain.core().rank() as f64;
    vec![
        Check::new("chain.dim_drop", bad_drops as f64, 0.0, 0.0),
        Check::new("chain.nesting", nesting, NESTING_TOL, 0.0),
        Check::new("chain.gram", u.gram_deviation(), GRAM_TOL, 0.0),
        Check::new("chain.membership", membership, MEMBERSHIP_TOL, 0.0),
        Check::new(
            "chain.basis_count",
            (count - u.dim() as f64).abs(),
            0.0,
            0.0,
        ),
        Check::new(
            "chain.accounting",
            (accounting - u.dim() as f64).abs(),
            0.0,
            0.0,
        ),
    ]
}

/// Smallest uniform weight `1/A` making the stored vectors a lower frame.
pub fn uniform_baseline(family: &VectorFamily) -> Result<f64> {
    let ones: Weights = (1..=family.len()).map(|k| (k, 1.0)).collect();
    let s = frame_operator(family, &ones);
    let scale = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let a = linalg::hermitian_min_eig(&s)?;
    if a <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(a));
    }
    Ok(1.0 / a)
}

/// Everything one pipeline run hands to the verifier.
pub struct RunInputs<'a> {
    pub family: &'a VectorFamily,
    pub chain: &'a TailSpanChain,
    pub basis: &'a CanonicalBasis,
    pub approximants: &'a ApproximantSet,
    pub perturbation: &'a PerturbationOperator,
    pub w: &'a [CVector],
    pub resolvent_agreement: f64,
    pub lambda_eff: &'a Weights,
}

fn worst_pair<I: Iterator<Item = (f64, f64)>>(pairs: I, tol: impl Fn(f64) -> f64) -> (f64, f64) {
    pairs
        .max_by(|a, b| {
            let ea = a.0 - a.1 - tol(a.1);
            let eb = b.0 - b.1 - tol(b.1);
            ea.partial_cmp(&eb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or((0.0, 0.0))
}

pub fn verify_run(
    inputs: &RunInputs<'_>,
    samples: &[CVector],
    seed: u64,
) -> Result<VerificationReport> {
    let RunInputs {
        family,
        chain,
        basis,
        approximants: z,
        perturbation,
        w,
        resolvent_agreement,
        lambda_eff,
    } = *inputs;
    let mut checks = check_chain(chain, basis);

    let nonzero = basis.nonzero_indices();
    let worst_ratio = nonzero
        .iter()
        .map(|&n| z.get(n).residual / residual_budget(n))
        .fold(0.0, f64::max);
    checks.push(Check::new("approximation.residual", worst_ratio, 1.0, 0.0));
    let support_violations = z
        .iter()
        .filter(|(n, a)| a.gamma.keys().next().is_some_and(|&k| k < n.div_ceil(2)))
        .count();
    checks.push(Check::new(
        "approximation.support",
        support_violations as f64,
        0.0,
        0.0,
    ));

    checks.push(Check::new(
        "perturbation.norm_bound",
        perturbation.norm,
        perturbation.series_bound,
        1e-10,
    ));
    checks.push(Check::new(
        "perturbation.series",
        perturbation.series_bound,
        0.5,
        0.0,
    ));

    let eye = DenseMatrix::identity(basis.dim(), basis.dim());
    let i_minus_t = &eye - &perturbation.t;
    let resolvent_residual = nonzero
        .iter()
        .map(|&n| (&i_minus_t * &w[n - 1] - basis.get(n)).norm() / basis.get(n).norm())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "resolvent.residual",
        resolvent_residual,
        RESOLVENT_RESIDUAL_TOL,
        0.0,
    ));
    checks.push(Check::new(
        "resolvent.cross_check",
        resolvent_agreement,
        RESOLVENT_AGREEMENT_TOL,
        0.0,
    ));

    checks.push(check_identity(w, z));
    checks.extend(check_lower_frame_with(family, lambda_eff, samples));

    let w_sq: Vec<f64> = w.iter().map(|v| v.norm_squared()).collect();
    let mut z_pairs = Vec::with_capacity(samples.len());
    let mut recon_pairs = Vec::with_capacity(samples.len());
    let mut weight_pairs = Vec::with_capacity(samples.len());
    for x in samples {
        let p = Projections::new(family, x);
        let zx: Vec<f64> = z.iter().map(|(_, a)| a.z.dotc(x).norm_sqr()).collect();
        let z_worst = worst_pair(
            z.iter().map(|(n, a)| z_bound_pair(family, n, a, x, &p)),
            |rhs| 1e-10 * (1.0 + rhs),
        );
        z_pairs.push(z_worst);

        let middle: f64 = zx
            .iter()
            .enumerate()
            .map(|(i, v)| 2f64.powi(i as i32 + 1) * w_sq[i] * v)
            .sum();
        recon_pairs.push((x.norm_squared(), middle));
        weight_pairs.push((middle, weighted_energy(family, lambda_eff, &p)));
    }
    let (lhs, rhs) = worst_pair(z_pairs.into_iter(), |rhs| 1e-10 * (1.0 + rhs));
    checks.push(Check::new("z_bound", lhs, rhs, 1e-10 * (1.0 + rhs)));
    let (lhs, rhs) = worst_pair(recon_pairs.into_iter(), |rhs| RELATIVE_TOL * rhs);
    checks.push(Check::relative(
        "chained.reconstruction",
        lhs,
        rhs,
        RELATIVE_TOL,
    ));
    let (lhs, rhs) = worst_pair(weight_pairs.into_iter(), |rhs| RELATIVE_TOL * rhs);
    checks.push(Check::relative("chained.weights", lhs, rhs, RELATIVE_TOL));

    Ok(VerificationReport::new(checks, seed, samples.len()))
}
