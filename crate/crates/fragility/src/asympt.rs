//! Residual tail-dependence indices for asymptotically independent vectors.
//!
//! When a vector's extreme-value attractor has independent components the
//! fragility index degenerates to 1 and extremal coefficients carry no
//! information. The coefficient eta_A in (0,1] grades how fast the joint
//! exceedance probability of the coordinates in A decays relative to the
//! marginal ones; eta_A = 1 means genuine tail dependence, eta_A = 1/|A|
//! exact independence. This module provides the whole-vector and sub-vector
//! coefficients, the block combination eta(X, D) built from them, the
//! transversal coefficient over one representative per block, analytic
//! bounds, and closed forms for two tractable families: Gaussian vectors and
//! minima of latent unit-Pareto variables.

use std::collections::BTreeSet;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::sampler::{rng_for_seed, unit_pareto};
use crate::partition::{Partition, SubsetKey};

/// Largest condition number accepted for a correlation submatrix before the
/// solve is considered numerically meaningless.
pub const MAX_CONDITION: f64 = 1e12;

/// Cap on the number of transversals enumerated by [`eta_combination`].
pub const MAX_TRANSVERSALS: usize = 1_000_000;

const BOUNDARY_TOL: f64 = 1e-9;

/// Sign pattern of pairwise extremal association, supplied by the caller or
/// derived from a correlation matrix. It selects which analytic eta bounds
/// apply; `Unknown` keeps only the unconditional ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    Positive,
    Negative,
    Unknown,
}

impl Association {
    /// Classifies a correlation matrix by the uniform sign of its
    /// off-diagonal entries; mixed signs give `Unknown`. Zero entries are
    /// compatible with either sign, so an all-zero pattern counts as
    /// positive (independence is the shared boundary case).
    pub fn from_correlation(sigma: &[Vec<f64>]) -> Association {
        let mut any_pos = false;
        let mut any_neg = false;
        for (i, row) in sigma.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if v > 0.0 {
                    any_pos = true;
                } else if v < 0.0 {
                    any_neg = true;
                }
            }
        }
        match (any_pos, any_neg) {
            (_, false) => Association::Positive,
            (false, true) => Association::Negative,
            (true, true) => Association::Unknown,
        }
    }
}

fn check_eta(label: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 || value > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "{label} must lie in (0, 1], got {value}"
        )));
    }
    Ok(())
}

/// eta_A for a centered Gaussian vector with the given correlation matrix:
/// the reciprocal of the sum of all entries of the inverse of the
/// A-submatrix.
pub fn eta_gaussian(sigma: &[Vec<f64>], a: &SubsetKey) -> Result<f64> {
    let d = sigma.len();
    if d == 0 || sigma.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidArgument(
            "correlation matrix must be square and nonempty".into(),
        ));
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..d {
        for j in 0..i {
            if (sigma[i][j] - sigma[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "correlation matrix is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let idx = a.indices();
    if idx.iter().any(|&i| i > d) {
        return Err(Error::InvalidArgument(format!(
            "subset {a} exceeds matrix dimension {d}"
        )));
    }
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |r, c| sigma[idx[r] - 1][idx[c] - 1]);
    let singular = sub.clone().svd(false, false).singular_values;
    let s_max = singular.max();
    let s_min = singular.min();
    if !(s_min > 0.0) || s_max / s_min > MAX_CONDITION {
        return Err(Error::Numeric(format!(
            "correlation submatrix for {a} is singular or ill-conditioned"
        )));
    }
    let chol = Cholesky::new(sub).ok_or_else(|| {
        Error::Numeric(format!(
            "correlation submatrix for {a} is not positive definite"
        ))
    })?;
    let total = chol.solve(&DVector::from_element(m, 1.0)).sum();
    if !(total > 0.0) {
        return Err(Error::Numeric(format!(
            "inverse correlation submatrix for {a} has non-positive total {total}"
        )));
    }
    Ok(1.0 / total)
}

/// Block residual-dependence index: eta(X, D) = eta_D * (1/s) * sum_j
/// 1/eta_{I_j}, the whole-vector coefficient rescaled by the mean reciprocal
/// block coefficient. With singleton blocks it returns eta_D itself.
pub fn eta_block_aifi(eta_d: f64, eta_blocks: &[f64]) -> Result<f64> {
    check_eta("eta_D", eta_d)?;
    if eta_blocks.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one block coefficient is required".into(),
        ));
    }
    for (j, &e) in eta_blocks.iter().enumerate() {
        check_eta(&format!("eta for block {}", j + 1), e)?;
    }
    let inv_sum: f64 = eta_blocks.iter().map(|e| 1.0 / e).sum();
    Ok(eta_d * inv_sum / eta_blocks.len() as f64)
}

/// Transversal coefficient eta_{(I_1,...,I_s)}: the maximum of eta over all
/// subsets that pick exactly one coordinate from every block.
pub fn eta_combination<F>(partition: &Partition, mut eta_lookup: F) -> Result<f64>
where
    F: FnMut(&SubsetKey) -> Result<f64>,
{
    let d = partition.dimension();
    let blocks = partition.blocks();
    let mut count: usize = 1;
    for b in blocks {
        count = count.saturating_mul(b.members.len());
        if count > MAX_TRANSVERSALS {
            return Err(Error::InvalidArgument(format!(
                "partition yields more than {MAX_TRANSVERSALS} transversals"
            )));
        }
    }
    let mut pos = vec![0_usize; blocks.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let picked: Vec<usize> = blocks
            .iter()
            .zip(&pos)
            .map(|(b, &p)| b.members.indices()[p])
            .collect();
        let key = SubsetKey::new(picked, d)?;
        let value = eta_lookup(&key)?;
        if value > best {
            best = value;
        }
        let mut level = blocks.len();
        loop {
            if level == 0 {
                return Ok(best);
            }
            level -= 1;
            pos[level] += 1;
            if pos[level] < blocks[level].members.len() {
                break;
            }
            pos[level] = 0;
        }
    }
}

/// Analytic envelope for eta(X, D) given the whole-vector and per-block
/// coefficients, with boundary detection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaBoundsReport {
    /// eta(X, D) recomputed from the inputs.
    pub eta: f64,
    pub association: Association,
    /// 1/s. Equality characterizes independent block sub-vectors; positive
    /// association forces eta above it, negative association below.
    pub block_independence_value: f64,
    /// (min_j eta_{I_j} / s) * sum_j 1/eta_{I_j}, an unconditional upper
    /// bound attained exactly under total dependence between blocks.
    pub block_total_dependence_upper: f64,
    /// eta_D * d / s. Equality characterizes independence inside every
    /// block; within-block positive association keeps eta below it,
    /// negative association above.
    pub within_independence_value: f64,
    /// eta_D, an unconditional lower bound attained exactly when every block
    /// is totally dependent inside.
    pub whole_vector_lower: f64,
    /// Tightest interval implied by the association flag.
    pub lower: f64,
    pub upper: f64,
    pub at_block_independence: bool,
    pub at_block_total_dependence: bool,
    pub at_within_independence: bool,
    pub at_within_total_dependence: bool,
}

fn boundary(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Computes eta(X, D) together with the bounds that the block structure and
/// the association sign imply, flagging attained boundaries.
pub fn eta_bounds(
    eta_d: f64,
    eta_blocks: &[f64],
    d: usize,
    association: Association,
) -> Result<EtaBoundsReport> {
    let s = eta_blocks.len();
    let eta = eta_block_aifi(eta_d, eta_blocks)?;
    if d < s {
        return Err(Error::InvalidArgument(format!(
            "dimension {d} is smaller than the number of blocks {s}"
        )));
    }
    let s_f = s as f64;
    let min_block = eta_blocks.iter().copied().fold(f64::INFINITY, f64::min);
    let inv_sum: f64 = eta_blocks.iter().map(|e| 1.0 / e).sum();
    let block_independence_value = 1.0 / s_f;
    let block_total_dependence_upper = min_block / s_f * inv_sum;
    let within_independence_value = eta_d * d as f64 / s_f;
    let whole_vector_lower = eta_d;

    let mut lower = whole_vector_lower;
    let mut upper = block_total_dependence_upper.min(1.0);
    match association {
        Association::Positive => {
            lower = lower.max(block_independence_value);
            upper = upper.min(within_independence_value);
        }
        Association::Negative => {
            lower = lower.max(within_independence_value);
            upper = upper.min(block_independence_value);
        }
        Association::Unknown => {}
    }

    Ok(EtaBoundsReport {
        eta,
        association,
        block_independence_value,
        block_total_dependence_upper,
        within_independence_value,
        whole_vector_lower,
        lower,
        upper,
        at_block_independence: boundary(eta, block_independence_value),
        at_block_total_dependence: boundary(eta, block_total_dependence_upper),
        at_within_independence: boundary(eta, within_independence_value),
        at_within_total_dependence: boundary(eta, whole_vector_lower),
    })
}

/// Vector whose coordinates are minima over fixed sets of shared i.i.d. unit
/// Pareto latent variables. Joint upper-tail probabilities are exact powers,
/// which makes every eta and the fragility index exactly computable; the
/// family doubles as a simulation testbed for estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct MinParetoStructure {
    sets: Vec<BTreeSet<usize>>,
}

impl MinParetoStructure {
    /// Builds the structure from one latent-index set per coordinate.
    /// Latent indices are arbitrary labels; each coordinate needs at least
    /// one.
    pub fn new(sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one coordinate is required".into(),
            ));
        }
        let mut out = Vec::with_capacity(sets.len());
        for (i, set) in sets.into_iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {} has an empty latent set",
                    i + 1
                )));
            }
            out.push(set.into_iter().collect::<BTreeSet<usize>>());
        }
        Ok(MinParetoStructure { sets: out })
    }

    pub fn dimension(&self) -> usize {
        self.sets.len()
    }

    /// Number of distinct latent variables across all coordinates.
    pub fn latent_count(&self) -> usize {
        self.latent_labels().len()
    }

    fn latent_labels(&self) -> Vec<usize> {
        let mut union = BTreeSet::new();
        for set in &self.sets {
            union.extend(set.iter().copied());
        }
        union.into_iter().collect()
    }

    fn check_subset(&self, a: &SubsetKey) -> Result<()> {
        let d = self.dimension();
        if a.indices().iter().any(|&i| i > d) {
            return Err(Error::InvalidArgument(format!(
                "subset {a} exceeds dimension {d}"
            )));
        }
        Ok(())
    }

    /// Size of the union of latent sets over the coordinates in `members`;
    /// the joint survival P(all of them > x) equals x to the minus this.
    fn union_size(&self, members: &[usize]) -> usize {
        let mut union = BTreeSet::new();
        for &i in members {
            union.extend(self.sets[i - 1].iter().copied());
        }
        union.len()
    }

    /// Exact eta_A: the joint survival over A is x^(-|union of latent
    /// sets|) while the product of marginal survivals decays with the sum of
    /// the individual set sizes, so eta_A is their ratio over |A|.
    pub fn eta(&self, a: &SubsetKey) -> Result<f64> {
        self.check_subset(a)?;
        let sum_sizes: usize = a.indices().iter().map(|&i| self.sets[i - 1].len()).sum();
        let union = self.union_size(a.indices());
        Ok(sum_sizes as f64 / (a.len() * union) as f64)
    }

    /// Inclusion-exclusion expansion of P(some coordinate in `members`
    /// exceeds x) as integer coefficients keyed by the exponent of 1/x.
    fn survival_polynomial(&self, members: &[usize]) -> std::collections::BTreeMap<usize, i64> {
        let mut coeffs = std::collections::BTreeMap::new();
        let m = members.len();
        for mask in 1_u64..(1 << m) {
            let picked: Vec<usize> = (0..m)
                .filter(|&b| mask >> b & 1 == 1)
                .map(|b| members[b])
                .collect();
            let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
            *coeffs.entry(self.union_size(&picked)).or_insert(0) += sign;
        }
        coeffs.retain(|_, c| *c != 0);
        coeffs
    }

    /// Exact limiting fragility index for a partition of the coordinates:
    /// the ratio of the leading (smallest-exponent) coefficients of the
    /// block-wise and whole-vector exceedance expansions. Computed in
    /// integer arithmetic, so the result is a correctly rounded rational.
    pub fn fragility_index(&self, partition: &Partition) -> Result<f64> {
        let d = self.dimension();
        if partition.dimension() != d {
            return Err(Error::InvalidArgument(format!(
                "partition dimension {} does not match structure dimension {d}",
                partition.dimension()
            )));
        }
        let mut numerator = std::collections::BTreeMap::new();
        for block in partition.blocks() {
            for (exp, c) in self.survival_polynomial(block.members.indices()) {
                *numerator.entry(exp).or_insert(0_i64) += c;
            }
        }
        numerator.retain(|_, c| *c != 0);
        let denominator = self.survival_polynomial(&(1..=d).collect::<Vec<_>>());
        let (num_exp, num_c) = numerator
            .iter()
            .next()
            .map(|(&e, &c)| (e, c))
            .ok_or_else(|| Error::Numeric("empty exceedance expansion".into()))?;
        let (den_exp, den_c) = denominator
            .iter()
            .next()
            .map(|(&e, &c)| (e, c))
            .ok_or_else(|| Error::Numeric("empty exceedance expansion".into()))?;
        if num_exp != den_exp || den_c <= 0 {
            return Err(Error::Numeric(format!(
                "leading exceedance terms do not align (exponents {num_exp} vs {den_exp})"
            )));
        }
        Ok(num_c as f64 / den_c as f64)
    }

    /// Draws n rows: one unit Pareto per latent variable, each coordinate
    /// the minimum over its latent set. Deterministic in the seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be positive".into(),
            ));
        }
        let labels_latent = self.latent_labels();
        let position: std::collections::BTreeMap<usize, usize> = labels_latent
            .iter()
            .enumerate()
            .map(|(pos, &label)| (label, pos))
            .collect();
        let d = self.dimension();
        let mut rng = rng_for_seed(seed);
        let mut latent = vec![0.0; labels_latent.len()];
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            for v in latent.iter_mut() {
                *v = unit_pareto(&mut rng);
            }
            let row: Vec<f64> = self
                .sets
                .iter()
                .map(|set| {
                    set.iter()
                        .map(|label| latent[position[label]])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            rows.push(row);
        }
        let labels = (1..=d).map(|i| format!("X{i}")).collect();
        Dataset::new(labels, rows, None)
    }
}

/// Exact eta_A for a min-Pareto structure; thin wrapper over
/// [`MinParetoStructure::eta`] for symmetry with [`eta_gaussian`].
pub fn eta_min_pareto(structure: &MinParetoStructure, a: &SubsetKey) -> Result<f64> {
    structure.eta(a)
}

/// The eta indices of a vector relative to a partition. `k` echoes the
/// top-order-statistics count when the values are estimates; it is absent
/// for closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaReport {
    #[serde(rename = "eta_D")]
    pub eta_d: f64,
    pub eta_blocks: Vec<f64>,
    pub eta_block_aifi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_combination: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

pub(crate) fn eta_report_from_lookup<F>(partition: &Partition, mut lookup: F) -> Result<EtaReport>
where
    F: FnMut(&SubsetKey) -> Result<f64>,
{
    let eta_d = lookup(&partition.full_set())?;
    let mut eta_blocks = Vec::with_capacity(partition.block_count());
    for block in partition.blocks() {
        eta_blocks.push(lookup(&block.members)?);
    }
    let aifi = eta_block_aifi(eta_d, &eta_blocks)?;
    let combination = match eta_combination(partition, &mut lookup) {
        Ok(v) => Some(v),
        Err(Error::InvalidArgument(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EtaReport {
        eta_d,
        eta_blocks,
        eta_block_aifi: aifi,
        eta_combination: combination,
        k: None,
        diagnostics: Vec::new(),
    })
}

/// Full eta report for a Gaussian correlation matrix.
pub fn eta_report_gaussian(sigma: &[Vec<f64>], partition: &Partition) -> Result<EtaReport> {
    if sigma.len() != partition.dimension() {
        return Err(Error::InvalidArgument(format!(
            "matrix dimension {} does not match partition dimension {}",
            sigma.len(),
            partition.dimension()
        )));
    }
    eta_report_from_lookup(partition, |key| eta_gaussian(sigma, key))
}

/// Full eta report for a min-Pareto structure. Flags non-equivalent margins,
/// where the harmonic combination identity behind `eta_block_aifi` is not
/// guaranteed.
pub fn eta_report_min_pareto(
    structure: &MinParetoStructure,
    partition: &Partition,
) -> Result<EtaReport> {
    if structure.dimension() != partition.dimension() {
        return Err(Error::InvalidArgument(format!(
            "structure dimension {} does not match partition dimension {}",
            structure.dimension(),
            partition.dimension()
        )));
    }
    let mut report = eta_report_from_lookup(partition, |key| structure.eta(key))?;
    let first = structure.sets[0].len();
    if structure.sets.iter().any(|s| s.len() != first) {
        report.diagnostics.push(
            "margins have different tail exponents; the block index assumes \
             tail-equivalent margins"
                .into(),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::subset;

    fn constant_rho(d: usize, rho: f64) -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect()
    }

    fn chain_structure() -> MinParetoStructure {
        MinParetoStructure::new(vec![vec![1, 2], vec![2, 3], vec![3, 4]]).unwrap()
    }

    fn two_one_partition() -> Partition {
        Partition::new(3, vec![("pair", vec![1, 2]), ("single", vec![3])]).unwrap()
    }

    #[test]
    fn gaussian_eta_constant_correlation() {
        for rho in [0.0, 0.3, 0.6, 0.9] {
            let sigma = constant_rho(4, rho);
            let eta_d = eta_gaussian(&sigma, &subset(&[1, 2, 3, 4], 4)).unwrap();
            assert!((eta_d - (3.0 * rho + 1.0) / 4.0).abs() < 1e-12, "rho={rho}");
            let eta_pair = eta_gaussian(&sigma, &subset(&[1, 2], 4)).unwrap();
            assert!((eta_pair - (rho + 1.0) / 2.0).abs() < 1e-12);
            let eta_single = eta_gaussian(&sigma, &subset(&[3], 4)).unwrap();
            assert_eq!(eta_single, 1.0);
        }
    }

    #[test]
    fn gaussian_eta_identity_is_exact() {
        let sigma = constant_rho(4, 0.0);
        assert_eq!(eta_gaussian(&sigma, &subset(&[1, 2, 3, 4], 4)).unwrap(), 0.25);
        assert_eq!(eta_gaussian(&sigma, &subset(&[1, 2], 4)).unwrap(), 0.5);
    }

    #[test]
    fn gaussian_eta_rejects_degenerate_matrices() {
        let singular = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(
            eta_gaussian(&singular, &subset(&[1, 2], 2)),
            Err(Error::Numeric(_))
        ));
        let asym = vec![vec![1.0, 0.2], vec![0.3, 1.0]];
        assert!(eta_gaussian(&asym, &subset(&[1, 2], 2)).is_err());
        let sigma = constant_rho(2, 0.5);
        assert!(eta_gaussian(&sigma, &subset(&[1, 3], 3)).is_err());
    }

    #[test]
    fn block_index_matches_gaussian_closed_form() {
        for rho in [0.0, 0.25, 0.5, 0.75] {
            let sigma = constant_rho(4, rho);
            let partition = Partition::new(
                4,
                vec![("a", vec![1, 2]), ("b", vec![3]), ("c", vec![4])],
            )
            .unwrap();
            let report = eta_report_gaussian(&sigma, &partition).unwrap();
            let expected = (3.0 * rho + 1.0) * (rho + 2.0) / (6.0 * (rho + 1.0));
            assert!(
                (report.eta_block_aifi - expected).abs() < 1e-12,
                "rho={rho}: {} vs {expected}",
                report.eta_block_aifi
            );
            assert!(report.eta_block_aifi >= report.eta_d - 1e-12);
        }
    }

    #[test]
    fn block_index_at_zero_correlation_is_exactly_one_third() {
        let eta = eta_block_aifi(0.25, &[0.5, 1.0, 1.0]).unwrap();
        assert_eq!(eta, 1.0 / 3.0);
    }

    #[test]
    fn block_index_with_singleton_blocks_returns_eta_d() {
        assert_eq!(eta_block_aifi(0.37, &[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.37);
    }

    #[test]
    fn block_index_rejects_out_of_range_inputs() {
        assert!(eta_block_aifi(0.0, &[0.5]).is_err());
        assert!(eta_block_aifi(0.5, &[]).is_err());
        assert!(eta_block_aifi(0.5, &[1.2]).is_err());
    }

    #[test]
    fn min_pareto_eta_values_are_exact() {
        let s = chain_structure();
        assert_eq!(s.eta(&subset(&[1, 2, 3], 3)).unwrap(), 0.5);
        assert_eq!(s.eta(&subset(&[2, 3], 3)).unwrap(), 2.0 / 3.0);
        assert_eq!(s.eta(&subset(&[1, 3], 3)).unwrap(), 0.5);
        assert_eq!(s.eta(&subset(&[1, 2], 3)).unwrap(), 2.0 / 3.0);
        assert_eq!(s.eta(&subset(&[2], 3)).unwrap(), 1.0);
        assert_eq!(eta_min_pareto(&s, &subset(&[1, 3], 3)).unwrap(), 0.5);
    }

    #[test]
    fn min_pareto_block_report_matches_hand_computation() {
        let s = chain_structure();
        let report = eta_report_min_pareto(&s, &two_one_partition()).unwrap();
        assert_eq!(report.eta_d, 0.5);
        assert_eq!(report.eta_blocks, vec![2.0 / 3.0, 1.0]);
        assert_eq!(report.eta_block_aifi, 0.625);
        assert_eq!(report.eta_combination, Some(2.0 / 3.0));
        assert!(report.diagnostics.is_empty());
    }

    #[test]
    fn min_pareto_fragility_index_is_exactly_one() {
        let s = chain_structure();
        assert_eq!(s.fragility_index(&two_one_partition()).unwrap(), 1.0);
        assert_eq!(
            s.fragility_index(&Partition::singleton(3).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn min_pareto_sampling_is_deterministic_and_respects_minima() {
        let s = chain_structure();
        let a = s.sample(64, 11).unwrap();
        let b = s.sample(64, 11).unwrap();
        assert_eq!(a.row(5), b.row(5));
        assert_eq!(a.n_cols(), 3);
        for i in 0..a.n_rows() {
            let row = a.row(i);
            assert!(row.iter().all(|&v| v >= 1.0));
        }
        let c = s.sample(64, 12).unwrap();
        assert_ne!(a.row(0), c.row(0));
    }

    #[test]
    fn combination_over_singletons_reduces_to_eta_d() {
        let sigma = constant_rho(3, 0.4);
        let partition = Partition::singleton(3).unwrap();
        let combo = eta_combination(&partition, |key| eta_gaussian(&sigma, key)).unwrap();
        let eta_d = eta_gaussian(&sigma, &subset(&[1, 2, 3], 3)).unwrap();
        assert!((combo - eta_d).abs() < 1e-15);
    }

    #[test]
    fn bounds_flag_independence_boundaries_at_zero_correlation() {
        let report = eta_bounds(0.25, &[0.5, 1.0, 1.0], 4, Association::Positive).unwrap();
        assert_eq!(report.eta, 1.0 / 3.0);
        assert!(report.at_block_independence);
        assert!(report.at_within_independence);
        assert!(!report.at_within_total_dependence);
        assert!(report.lower <= report.eta && report.eta <= report.upper);
    }

    #[test]
    fn bounds_bracket_the_min_pareto_example() {
        let report = eta_bounds(0.5, &[2.0 / 3.0, 1.0], 3, Association::Positive).unwrap();
        assert_eq!(report.eta, 0.625);
        assert_eq!(report.whole_vector_lower, 0.5);
        assert_eq!(report.within_independence_value, 0.75);
        assert!((report.block_total_dependence_upper - 5.0 / 6.0).abs() < 1e-12);
        assert!(report.lower <= report.eta && report.eta <= report.upper);
        assert!(report.eta >= report.whole_vector_lower);
        assert!(report.eta <= report.within_independence_value);
    }

    #[test]
    fn bounds_detect_total_dependence_within_blocks() {
        let report = eta_bounds(0.7, &[1.0, 1.0], 5, Association::Unknown).unwrap();
        assert!(report.at_within_total_dependence);
        assert_eq!(report.eta, 0.7);
    }

    #[test]
    fn association_from_correlation_sign_patterns() {
        assert_eq!(
            Association::from_correlation(&constant_rho(3, 0.2)),
            Association::Positive
        );
        assert_eq!(
            Association::from_correlation(&constant_rho(3, 0.0)),
            Association::Positive
        );
        assert_eq!(
            Association::from_correlation(&constant_rho(3, -0.2)),
            Association::Negative
        );
        let mixed = vec![
            vec![1.0, 0.2, -0.1],
            vec![0.2, 1.0, 0.0],
            vec![-0.1, 0.0, 1.0],
        ];
        assert_eq!(Association::from_correlation(&mixed), Association::Unknown);
    }

    #[test]
    fn report_serializes_eta_d_key() {
        let report = eta_report_min_pareto(&chain_structure(), &two_one_partition()).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert!(json.get("eta_D").is_some());
        assert!(json.get("eta_block_aifi").is_some());
    }
}
