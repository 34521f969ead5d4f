//! The decreasing chain of tail spans `H_n = span{v_k : k >= n}` and the
//! orthonormal basis `u_n` adapted to it.

use crate::error::{Error, Result};
use crate::family::{TailMode, VectorFamily};
use crate::linalg::{self, CVector, OrthoBasis};

/// Largest supported canonical basis length `2M`.
pub const MAX_CANONICAL_LEN: usize = 512;

/// Tolerance for `span(B_{n+1}) ⊆ span(B_n)`.
pub const NESTING_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct TailSpanChain {
    /// `B_1..B_{M+1}`; `bases[i]` spans `H_{i+1}`.
    bases: Vec<OrthoBasis>,
    core: OrthoBasis,
}

impl TailSpanChain {
    /// Builds a chain from explicit bases; the last one doubles as the core.
    pub fn from_bases(bases: Vec<OrthoBasis>) -> Result<Self> {
        let core = bases
            .last()
            .cloned()
            .ok_or_else(|| Error::Input("a chain needs at least one basis".into()))?;
        Ok(Self { bases, core })
    }

    /// Chain length `M`.
    pub fn len(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    /// Basis of `H_n`, `1 <= n <= M + 1`.
    pub fn basis(&self, n: usize) -> &OrthoBasis {
        &self.bases[n - 1]
    }

    pub fn bases(&self) -> &[OrthoBasis] {
        &self.bases
    }

    /// Orthonormal basis of `H_∞`.
    pub fn core(&self) -> &OrthoBasis {
        &self.core
    }

    /// `r_1..r_{M+1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(OrthoBasis::rank).collect()
    }

    /// `r_n - r_{n+1}` for `n = 1..M` (signed so broken chains show up).
    pub fn drops(&self) -> Vec<i64> {
        self.bases
            .windows(2)
            .map(|w| w[0].rank() as i64 - w[1].rank() as i64)
            .collect()
    }

    /// `||B_{n+1} - B_n B_n^* B_{n+1}||` for `n = 1..M`.
    pub fn nesting_residuals(&self) -> Vec<f64> {
        self.bases
            .windows(2)
            .map(|w| w[0].containment_residual(&w[1]))
            .collect()
    }
}

/// Indices of the vectors spanning `H_n` under the family's tail rule.
fn tail_indices(family: &VectorFamily, n: usize) -> std::ops::RangeInclusive<usize> {
    let len = family.len();
    match family.tail() {
        TailMode::Zero => n..=len,
        // One full period starting at n covers every stored vector.
        TailMode::Cyclic => n..=n + len - 1,
    }
}

/// Chain length `M`: `N + 1` with a zero tail, `N` with a cyclic one.
pub fn chain_length(family: &VectorFamily) -> usize {
    match family.tail() {
        TailMode::Zero => family.len() + 1,
        TailMode::Cyclic => family.len(),
    }
}

pub fn compute_tail_chain(family: &VectorFamily, rank_tol: f64) -> Result<TailSpanChain> {
    let m = chain_length(family);
    if 2 * m > MAX_CANONICAL_LEN {
        return Err(Error::ChainTooLong {
            len: 2 * m,
            max: MAX_CANONICAL_LEN,
        });
    }
    let dim = family.dim();
    let mut bases = vec![OrthoBasis::empty(dim); m + 1];
    for n in (1..=m + 1).rev() {
        let vectors: Vec<CVector> = tail_indices(family, n)
            .map(|k| family.effective_vector(k))
            .collect();
        bases[n - 1] = linalg::orthonormal_basis(dim, &vectors, rank_tol)?;
    }
    let rank = bases[0].rank();
    if rank != dim {
        return Err(Error::NotTotal { rank, dim });
    }
    let chain = TailSpanChain::from_bases(bases)?;
    if let Some((i, drop)) = chain
        .drops()
        .into_iter()
        .enumerate()
        .find(|(_, d)| !(0..=1).contains(d))
    {
        return Err(Error::Inconsistency(format!(
            "dim H_{} - dim H_{} = {drop}, expected 0 or 1",
            i + 1,
            i + 2
        )));
    }
    Ok(chain)
}

/// Where a canonical basis entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// `u_{2n-1} = x_n`.
    Gap(usize),
    /// `u_{2n} = y_n`.
    Core(usize),
}

/// `u_1..u_{2M}`; absent vectors are stored as exact zeros.
#[derive(Debug, Clone)]
pub struct CanonicalBasis {
    dim: usize,
    entries: Vec<CVector>,
    present: Vec<bool>,
}

impl CanonicalBasis {
    pub fn from_entries(dim: usize, entries: Vec<Option<CVector>>) -> Self {
        let present = entries.iter().map(Option::is_some).collect();
        let entries = entries
            .into_iter()
            .map(|e| e.unwrap_or_else(|| CVector::zeros(dim)))
            .collect();
        Self {
            dim,
            entries,
            present,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2M`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `u_n`, 1-based.
    pub fn get(&self, n: usize) -> &CVector {
        &self.entries[n - 1]
    }

    pub fn is_zero(&self, n: usize) -> bool {
        !self.present[n - 1]
    }

    pub fn slot(n: usize) -> Slot {
        if n % 2 == 1 {
            Slot::Gap(n.div_ceil(2))
        } else {
            Slot::Core(n / 2)
        }
    }

    pub fn entries(&self) -> &[CVector] {
        &self.entries
    }

    /// 1-based indices of the nonzero entries.
    pub fn nonzero_indices(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&n| !self.is_zero(n)).collect()
    }

    /// Gram deviation of the nonzero entries from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let cols: Vec<CVector> = self
            .nonzero_indices()
            .into_iter()
            .map(|n| self.get(n).clone())
            .collect();
        match linalg::columns_to_matrix(self.dim, &cols) {
            Ok(m) => linalg::gram_deviation(&m),
            Err(_) => f64::INFINITY,
        }
    }
}

pub fn build_canonical_basis(chain: &TailSpanChain) -> Result<CanonicalBasis> {
    let m = chain.len();
    let dim = chain.dim();
    let core = chain.core();
    let mut entries = Vec::with_capacity(2 * m);
    for n in 1..=m {
        let gap = linalg::complement_within(chain.basis(n), chain.basis(n + 1), NESTING_TOL)?;
        let x = match gap.rank() {
            0 => None,
            1 => Some(gap.column(0)),
            r => {
                return Err(Error::Inconsistency(format!(
                    "H_{n} ∩ H_{}^⊥ has dimension {r}",
                    n + 1
                )))
            }
        };
        let y = (n <= core.rank()).then(|| core.column(n - 1));
        entries.push(x);
        entries.push(y);
    }
    if core.rank() > m {
        return Err(Error::Inconsistency(format!(
            "core rank {} exceeds chain length {m}",
            core.rank()
        )));
    }
    let basis = CanonicalBasis::from_entries(dim, entries);
    let count = basis.nonzero_indices().len();
    if count != dim {
        return Err(Error::Inconsistency(format!(
            "canonical basis has {count} nonzero vectors, expected {dim}"
        )));
    }
    Ok(basis)
}
