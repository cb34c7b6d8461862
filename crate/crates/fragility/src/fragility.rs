//! Block fragility index and the distribution of the number of exceeding
//! blocks.
//!
//! All quantities are driven by extremal coefficients eps_A indexed by
//! coordinate subsets. The index for a partition D = {I_1..I_s} is
//! FI = sum_j eps_{I_j} / eps_D, the limiting expected number of blocks
//! whose maximum exceeds a high threshold given at least one does; the full
//! limiting distribution of that count comes from an inclusion-exclusion
//! sum over block subsets.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::partition::{Partition, SubsetKey};
use crate::models::MevModel;

/// Dust threshold: derived probabilities this far below zero (or sums this
/// far from one) are treated as floating-point noise; anything larger means
/// the input coefficients were not a valid exponent-measure restriction.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Largest supported block count for subset enumeration.
pub const MAX_BLOCKS: usize = 20;

/// Working set of extremal coefficients keyed by coordinate subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalCoefficientSet {
    d: usize,
    coefficients: BTreeMap<SubsetKey, f64>,
}

impl ExtremalCoefficientSet {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(ExtremalCoefficientSet {
            d,
            coefficients: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Stores eps_A, validating 1 <= eps_A <= |A| (up to dust).
    pub fn insert(&mut self, key: SubsetKey, eps: f64) -> Result<()> {
        if key.indices().last().copied().unwrap_or(0) > self.d {
            return Err(Error::InvalidArgument(format!(
                "subset {key} exceeds dimension {}",
                self.d
            )));
        }
        let size = key.len() as f64;
        if !eps.is_finite() || eps < 1.0 - PROBABILITY_TOL || eps > size + PROBABILITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "eps for {key} must lie in [1, {size}], got {eps}"
            )));
        }
        self.coefficients.insert(key, eps);
        Ok(())
    }

    pub fn get(&self, key: &SubsetKey) -> Result<f64> {
        self.coefficients
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingCoefficient(key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Builds the set of coefficients for every union of blocks of
    /// `partition` by calling `eps_of` on each union.
    pub fn from_block_unions(
        partition: &Partition,
        mut eps_of: impl FnMut(&SubsetKey) -> Result<f64>,
    ) -> Result<Self> {
        let s = check_block_count(partition)?;
        let mut set = Self::new(partition.dimension())?;
        for mask in 1_u64..(1 << s) {
            let key = partition.union_of_mask(mask).expect("nonzero mask");
            let eps = eps_of(&key)?;
            set.insert(key, eps)?;
        }
        set.validate_union_monotone(partition)?;
        Ok(set)
    }

    /// Closed-form coefficients of a max-stable model for every block union.
    pub fn from_model(model: &MevModel, partition: &Partition) -> Result<Self> {
        if model.dimension() != partition.dimension() {
            return Err(Error::InvalidArgument(format!(
                "model dimension {} does not match partition dimension {}",
                model.dimension(),
                partition.dimension()
            )));
        }
        Self::from_block_unions(partition, |key| model.extremal_coefficient(key))
    }

    /// Checks monotonicity in set inclusion along covering pairs of block
    /// unions (union versus union minus one block).
    fn validate_union_monotone(&self, partition: &Partition) -> Result<()> {
        let s = partition.block_count();
        for mask in 1_u64..(1 << s) {
            let key = partition.union_of_mask(mask).expect("nonzero mask");
            let eps = self.get(&key)?;
            for j in 0..s {
                let smaller = mask & !(1 << j);
                if smaller == mask || smaller == 0 {
                    continue;
                }
                let sub_key = partition.union_of_mask(smaller).expect("nonzero mask");
                let sub_eps = self.get(&sub_key)?;
                if sub_eps > eps + PROBABILITY_TOL {
                    return Err(Error::InconsistentCoefficients(format!(
                        "eps for {sub_key} = {sub_eps} exceeds eps for superset {key} = {eps}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Distribution of the number of exceeding blocks, supported on 1..=s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceDistribution {
    probs: Vec<f64>,
}

impl ExceedanceDistribution {
    /// Validates and wraps a probability vector over counts 1..=s.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument(
                "distribution needs at least one count".into(),
            ));
        }
        let mut cleaned = Vec::with_capacity(probs.len());
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
                return Err(Error::InconsistentCoefficients(format!(
                    "P(N = {}) = {p} is not a probability",
                    i + 1
                )));
            }
            cleaned.push(p.clamp(0.0, 1.0));
        }
        let total: f64 = cleaned.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InconsistentCoefficients(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(ExceedanceDistribution { probs: cleaned })
    }

    /// P(N = k) for k = 1..=s; `probs()[0]` is P(N = 1).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expected count, sum of k P(N = k).
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// Structural bounds on the fragility index together with attainment flags.
///
/// `inter_upper` is the bound sum_j eps_{I_j} / max_j eps_{I_j} driven by
/// dependence between blocks; `intra_lower` and `intra_upper` are s / eps_D
/// and d / eps_D, driven by dependence within blocks. Each flag marks the
/// boundary regime attained when the index sits on the matching bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragilityBounds {
    pub inter_upper: f64,
    pub intra_lower: f64,
    pub intra_upper: f64,
    pub blocks_independent: bool,
    pub blocks_totally_dependent: bool,
    pub within_blocks_independent: bool,
    pub within_blocks_totally_dependent: bool,
}

/// Echo of one partition block inside a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEcho {
    pub name: String,
    pub members: Vec<usize>,
}

/// Full fragility analysis of one (coefficient set, partition) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragilityReport {
    pub fi: f64,
    pub eps_blocks: Vec<f64>,
    #[serde(rename = "eps_D")]
    pub eps_d: f64,
    pub exceedance_probs: Vec<f64>,
    pub bounds: FragilityBounds,
    pub partition: Vec<BlockEcho>,
    pub diagnostics: Vec<String>,
}

impl FragilityReport {
    pub fn distribution(&self) -> ExceedanceDistribution {
        ExceedanceDistribution {
            probs: self.exceedance_probs.clone(),
        }
    }
}

pub(crate) fn check_block_count(partition: &Partition) -> Result<usize> {
    let s = partition.block_count();
    if s > MAX_BLOCKS {
        return Err(Error::InvalidArgument(format!(
            "partition has {s} blocks; subset enumeration supports at most {MAX_BLOCKS}"
        )));
    }
    Ok(s)
}

fn check_same_dimension(eps: &ExtremalCoefficientSet, partition: &Partition) -> Result<()> {
    if eps.dimension() != partition.dimension() {
        return Err(Error::InvalidArgument(format!(
            "coefficient set dimension {} does not match partition dimension {}",
            eps.dimension(),
            partition.dimension()
        )));
    }
    Ok(())
}

/// Block fragility index FI = sum_j eps_{I_j} / eps_D, computed as an exact
/// ratio of the two coefficient sums.
pub fn fragility_index(eps: &ExtremalCoefficientSet, partition: &Partition) -> Result<f64> {
    check_same_dimension(eps, partition)?;
    let mut block_sum = 0.0;
    for j in 1..=partition.block_count() {
        block_sum += eps.get(&partition.block(j)?.members)?;
    }
    let eps_d = eps.get(&partition.full_set())?;
    Ok(block_sum / eps_d)
}

/// Fragility index of the logistic model: sum_j (|I_j| / d)^alpha. For the
/// finest partition this is d^(1 - alpha).
pub fn fragility_index_logistic(alpha: f64, partition: &Partition) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let d = partition.dimension() as f64;
    Ok(partition
        .blocks()
        .iter()
        .map(|b| (b.members.len() as f64 / d).powf(alpha))
        .sum())
}

/// Values of `eps_of_union` on every union of blocks, indexed by block
/// bitmask; entry 0 is the empty union with value 0.
pub(crate) fn union_values(
    partition: &Partition,
    mut eps_of_union: impl FnMut(&SubsetKey) -> Result<f64>,
) -> Result<Vec<f64>> {
    let s = check_block_count(partition)?;
    let mut values = vec![0.0; 1 << s];
    for mask in 1_u64..(1 << s) {
        let key = partition.union_of_mask(mask).expect("nonzero mask");
        values[mask as usize] = eps_of_union(&key)?;
    }
    Ok(values)
}

/// Inclusion-exclusion numerators of P(N = k): for each k,
/// sum over |S| = k, T subset of S of (-1)^(|T|+1) v(union of T and S^c).
/// The numerators algebraically sum to v(full mask).
fn exceedance_numerators(values: &[f64], s: usize) -> Vec<f64> {
    let full = (1_usize << s) - 1;
    let mut numerators = vec![0.0; s];
    for s_mask in 1..=full {
        let k = s_mask.count_ones() as usize;
        let s_comp = full & !s_mask;
        let mut acc = 0.0;
        let mut t = s_mask;
        loop {
            let sign = if t.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * values[t | s_comp];
            if t == 0 {
                break;
            }
            t = (t - 1) & s_mask;
        }
        numerators[k - 1] += acc;
    }
    numerators
}

fn distribution_from_values(values: &[f64], s: usize) -> Result<ExceedanceDistribution> {
    let denom = values[values.len() - 1];
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Numeric(format!(
            "coefficient of the full set must be positive and finite, got {denom}"
        )));
    }
    let probs: Vec<f64> = exceedance_numerators(values, s)
        .into_iter()
        .map(|n| n / denom)
        .collect();
    ExceedanceDistribution::from_probs(probs)
}

/// Limiting distribution of the number of exceeding blocks from extremal
/// coefficients (strict: inputs must form a valid exponent-measure
/// restriction up to floating-point dust).
pub fn exceedance_distribution(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
) -> Result<ExceedanceDistribution> {
    check_same_dimension(eps, partition)?;
    let values = union_values(partition, |key| eps.get(key))?;
    distribution_from_values(&values, partition.block_count())
}

/// Lenient variant for plug-in estimates: finite-sample coefficient noise
/// may push derived probabilities slightly negative, so negatives are
/// clipped, the vector renormalized, and a diagnostic returned whenever the
/// violation exceeded dust level.
pub(crate) fn exceedance_distribution_lenient(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
) -> Result<(ExceedanceDistribution, Vec<String>)> {
    check_same_dimension(eps, partition)?;
    let values = union_values(partition, |key| eps.get(key))?;
    let denom = values[values.len() - 1];
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Numeric(format!(
            "coefficient of the full set must be positive and finite, got {denom}"
        )));
    }
    let raw: Vec<f64> = exceedance_numerators(&values, partition.block_count())
        .into_iter()
        .map(|n| n / denom)
        .collect();
    let mut diagnostics = Vec::new();
    let worst = raw.iter().copied().fold(0.0_f64, |acc, p| acc.min(p));
    if worst < -PROBABILITY_TOL {
        diagnostics.push(format!(
            "estimated coefficients are not exactly consistent: clipped P(N = k) \
             components as low as {worst:.6} to zero and renormalized"
        ));
    }
    let clipped: Vec<f64> = raw.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric(
            "all exceedance probabilities vanished after clipping".into(),
        ));
    }
    let probs = clipped.into_iter().map(|p| p / total).collect();
    Ok((ExceedanceDistribution::from_probs(probs)?, diagnostics))
}

fn validate_gamma(gamma: &[f64], d: usize) -> Result<()> {
    if gamma.len() != d {
        return Err(Error::InvalidArgument(format!(
            "gamma has {} entries, expected {d}",
            gamma.len()
        )));
    }
    if let Some(i) = gamma.iter().position(|g| !g.is_finite() || *g <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma[{}] must be finite and positive",
            i + 1
        )));
    }
    Ok(())
}

/// Corner values of the stable tail dependence function: for each block
/// union, l evaluated at gamma restricted to the union (zero elsewhere).
/// Arguments stay in log scale throughout, so large gamma cannot underflow
/// a copula evaluation.
fn corner_values(
    l: &mut impl FnMut(&[f64]) -> Result<f64>,
    gamma: &[f64],
    partition: &Partition,
) -> Result<Vec<f64>> {
    union_values(partition, |key| {
        let mut x = vec![0.0; gamma.len()];
        for &i in key.indices() {
            x[i - 1] = gamma[i - 1];
        }
        let value = l(&x)?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Numeric(format!(
                "tail dependence evaluator returned {value} at corner {key}"
            )));
        }
        Ok(value)
    })
}

/// Distribution of the number of exceeding blocks for a vector with
/// equivalent Frechet margins gamma, driven by a stable tail dependence
/// evaluator `l` (for a model, pass `|x| model.stable_tail_dependence(x)`).
/// With gamma all ones this reduces to [`exceedance_distribution`].
pub fn exceedance_distribution_equiv(
    mut l: impl FnMut(&[f64]) -> Result<f64>,
    gamma: &[f64],
    partition: &Partition,
) -> Result<ExceedanceDistribution> {
    validate_gamma(gamma, partition.dimension())?;
    let values = corner_values(&mut l, gamma, partition)?;
    distribution_from_values(&values, partition.block_count())
}

/// Fragility index for equivalent Frechet margins gamma:
/// sum_j l(gamma on I_j) / l(gamma).
pub fn fragility_index_equiv(
    mut l: impl FnMut(&[f64]) -> Result<f64>,
    gamma: &[f64],
    partition: &Partition,
) -> Result<f64> {
    validate_gamma(gamma, partition.dimension())?;
    let corner = |l: &mut dyn FnMut(&[f64]) -> Result<f64>, key: &SubsetKey| -> Result<f64> {
        let mut x = vec![0.0; gamma.len()];
        for &i in key.indices() {
            x[i - 1] = gamma[i - 1];
        }
        l(&x)
    };
    let mut block_sum = 0.0;
    for j in 1..=partition.block_count() {
        block_sum += corner(&mut l, &partition.block(j)?.members)?;
    }
    let denom = corner(&mut l, &partition.full_set())?;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Numeric(format!(
            "l(gamma) must be positive and finite, got {denom}"
        )));
    }
    Ok(block_sum / denom)
}

/// Bounds on the fragility index with attainment flags (tolerance: dust).
pub fn fragility_bounds(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
) -> Result<FragilityBounds> {
    check_same_dimension(eps, partition)?;
    let fi = fragility_index(eps, partition)?;
    let mut block_eps = Vec::with_capacity(partition.block_count());
    for j in 1..=partition.block_count() {
        block_eps.push(eps.get(&partition.block(j)?.members)?);
    }
    let eps_d = eps.get(&partition.full_set())?;
    let block_sum: f64 = block_eps.iter().sum();
    let block_max = block_eps.iter().copied().fold(f64::MIN, f64::max);
    let s = partition.block_count() as f64;
    let d = partition.dimension() as f64;
    let inter_upper = block_sum / block_max;
    let intra_lower = s / eps_d;
    let intra_upper = d / eps_d;
    Ok(FragilityBounds {
        inter_upper,
        intra_lower,
        intra_upper,
        blocks_independent: (fi - 1.0).abs() <= PROBABILITY_TOL,
        blocks_totally_dependent: (fi - inter_upper).abs() <= PROBABILITY_TOL,
        within_blocks_independent: (fi - intra_upper).abs() <= PROBABILITY_TOL,
        within_blocks_totally_dependent: (fi - intra_lower).abs() <= PROBABILITY_TOL,
    })
}

/// Fragility index recomposed as a convex combination over blocks of
/// finest-partition indices: sum_j (|I_j| / d) FI(D*) / FI_j(D*_j) where
/// FI(D*) = d / eps_D and FI_j(D*_j) = |I_j| / eps_{I_j}. Algebraically
/// equal to [`fragility_index`]; computed by the literal composition.
pub fn convex_combination_identity(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
) -> Result<f64> {
    check_same_dimension(eps, partition)?;
    let d = partition.dimension() as f64;
    let eps_d = eps.get(&partition.full_set())?;
    let fi_star = d / eps_d;
    let mut total = 0.0;
    for j in 1..=partition.block_count() {
        let block = partition.block(j)?;
        let size = block.members.len() as f64;
        let fi_block_star = size / eps.get(&block.members)?;
        total += (size / d) * fi_star / fi_block_star;
    }
    Ok(total)
}

/// Both sides of the power identity G(x 1) = (prod_j G_j(x 1))^(1 / FI)
/// along equal components, with unit Frechet margins: the left side is the
/// model copula at e^(-1/x), the right side multiplies block marginal
/// copulas and raises to 1 / FI from the coefficient route.
pub fn power_identity_check(
    model: &MevModel,
    partition: &Partition,
    x: f64,
) -> Result<(f64, f64)> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "x must be finite and positive, got {x}"
        )));
    }
    if model.dimension() != partition.dimension() {
        return Err(Error::InvalidArgument(format!(
            "model dimension {} does not match partition dimension {}",
            model.dimension(),
            partition.dimension()
        )));
    }
    let d = partition.dimension();
    let u = (-1.0 / x).exp();
    let lhs = model.copula_value(&vec![u; d])?;
    let eps = ExtremalCoefficientSet::from_model(model, partition)?;
    let fi = fragility_index(&eps, partition)?;
    let mut product = 1.0;
    for j in 1..=partition.block_count() {
        let mut args = vec![1.0; d];
        for &i in partition.block(j)?.members.indices() {
            args[i - 1] = u;
        }
        product *= model.copula_value(&args)?;
    }
    Ok((lhs, product.powf(1.0 / fi)))
}

/// Assembles the full report: index, block coefficients, exceedance
/// distribution, bounds and partition echo.
pub fn fragility_report(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
) -> Result<FragilityReport> {
    let distribution = exceedance_distribution(eps, partition)?;
    report_with_distribution(eps, partition, distribution, Vec::new())
}

pub(crate) fn report_with_distribution(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
    distribution: ExceedanceDistribution,
    diagnostics: Vec<String>,
) -> Result<FragilityReport> {
    let fi = fragility_index(eps, partition)?;
    let bounds = fragility_bounds(eps, partition)?;
    let mut eps_blocks = Vec::with_capacity(partition.block_count());
    let mut echo = Vec::with_capacity(partition.block_count());
    for j in 1..=partition.block_count() {
        let block = partition.block(j)?;
        eps_blocks.push(eps.get(&block.members)?);
        echo.push(BlockEcho {
            name: block.name.clone(),
            members: block.members.indices().to_vec(),
        });
    }
    Ok(FragilityReport {
        fi,
        eps_blocks,
        eps_d: eps.get(&partition.full_set())?,
        exceedance_probs: distribution.probs().to_vec(),
        bounds,
        partition: echo,
        diagnostics,
    })
}
