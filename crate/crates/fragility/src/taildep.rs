//! Block tail dependence coefficients.
//!
//! For a subset S of blocks, lambda_S is the limit of
//! P(every block in S exceeds u) / (1 - u) as u -> 1, obtained from extremal
//! coefficients of block unions by inclusion-exclusion; tau_S = lambda_full /
//! lambda_S conditions total exceedance on the blocks in S exceeding. Both
//! give alternative routes to the exceedance-count distribution and the
//! fragility index.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fragility::{
    check_block_count, union_values, ExceedanceDistribution, ExtremalCoefficientSet,
    PROBABILITY_TOL,
};
use crate::models::{FactorParetoModel, MevModel};
use crate::partition::Partition;

/// Lambda and tau maps over nonempty subsets of blocks, keyed by sorted
/// 1-based block indices. Tau is stored only where lambda_S > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDependenceSet {
    s: usize,
    lambda: BTreeMap<Vec<usize>, f64>,
    tau: BTreeMap<Vec<usize>, f64>,
}

pub(crate) fn subset_label(blocks: &[usize]) -> String {
    let inner: Vec<String> = blocks.iter().map(|j| j.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

fn labeled(map: &BTreeMap<Vec<usize>, f64>) -> BTreeMap<String, f64> {
    map.iter().map(|(k, &v)| (subset_label(k), v)).collect()
}

impl Serialize for TailDependenceSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut state = serializer.serialize_struct("TailDependenceSet", 3)?;
        state.serialize_field("block_count", &self.s)?;
        state.serialize_field("lambda", &labeled(&self.lambda))?;
        state.serialize_field("tau", &labeled(&self.tau))?;
        state.end()
    }
}

pub(crate) fn canonical_blocks(blocks: &[usize], s: usize) -> Result<Vec<usize>> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument(
            "block subset must be nonempty".into(),
        ));
    }
    let mut sorted: Vec<usize> = blocks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&j| j == 0 || j > s) {
        return Err(Error::InvalidArgument(format!(
            "block index {bad} outside 1..={s}"
        )));
    }
    Ok(sorted)
}

fn blocks_to_mask(blocks: &[usize]) -> u64 {
    blocks.iter().fold(0_u64, |m, &j| m | 1 << (j - 1))
}

/// lambda_S from extremal coefficients of block unions over subsets of S:
/// sum over nonempty T subset of S of (-1)^(|T|+1) eps(union of blocks in T).
fn lambda_from_values(values: &[f64], s_mask: u64) -> Result<f64> {
    let mut acc = 0.0;
    let mut t = s_mask;
    loop {
        if t != 0 {
            let sign = if t.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * values[t as usize];
        }
        if t == 0 {
            break;
        }
        t = (t - 1) & s_mask;
    }
    if acc < -PROBABILITY_TOL {
        return Err(Error::InconsistentCoefficients(format!(
            "lambda came out {acc}; the coefficients do not form a valid \
             exponent-measure restriction"
        )));
    }
    Ok(acc.max(0.0))
}

/// Tail dependence coefficient lambda_S for one subset of blocks.
pub fn lambda_from_extremal(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
    blocks: &[usize],
) -> Result<f64> {
    let s = check_block_count(partition)?;
    let subset = canonical_blocks(blocks, s)?;
    let values = union_values(partition, |key| eps.get(key))?;
    lambda_from_values(&values, blocks_to_mask(&subset))
}

/// Conditional coefficient tau_S = lambda_{1..s} / lambda_S.
pub fn tau_from_extremal(
    eps: &ExtremalCoefficientSet,
    partition: &Partition,
    blocks: &[usize],
) -> Result<f64> {
    let s = check_block_count(partition)?;
    let subset = canonical_blocks(blocks, s)?;
    let values = union_values(partition, |key| eps.get(key))?;
    let full_mask = (1_u64 << s) - 1;
    let lambda_s = lambda_from_values(&values, blocks_to_mask(&subset))?;
    if lambda_s <= 0.0 {
        return Err(Error::UndefinedLimit(format!(
            "lambda for blocks {subset:?} is zero; tau is undefined"
        )));
    }
    Ok(lambda_from_values(&values, full_mask)? / lambda_s)
}

impl TailDependenceSet {
    /// Computes lambda for every nonempty block subset and tau wherever
    /// lambda_S > 0.
    pub fn from_extremal(eps: &ExtremalCoefficientSet, partition: &Partition) -> Result<Self> {
        let s = check_block_count(partition)?;
        let values = union_values(partition, |key| eps.get(key))?;
        let full_mask = (1_u64 << s) - 1;
        let mut lambda = BTreeMap::new();
        for mask in 1_u64..=full_mask {
            let subset: Vec<usize> = (1..=s).filter(|j| mask >> (j - 1) & 1 == 1).collect();
            lambda.insert(subset, lambda_from_values(&values, mask)?);
        }
        let lambda_full = lambda[&(1..=s).collect::<Vec<_>>()];
        let mut tau = BTreeMap::new();
        for (subset, &l) in &lambda {
            if l > 0.0 {
                tau.insert(subset.clone(), lambda_full / l);
            }
        }
        Ok(TailDependenceSet { s, lambda, tau })
    }

    pub fn from_model(model: &MevModel, partition: &Partition) -> Result<Self> {
        let eps = ExtremalCoefficientSet::from_model(model, partition)?;
        Self::from_extremal(&eps, partition)
    }

    pub fn block_count(&self) -> usize {
        self.s
    }

    pub fn lambda(&self, blocks: &[usize]) -> Result<f64> {
        let subset = canonical_blocks(blocks, self.s)?;
        self.lambda
            .get(&subset)
            .copied()
            .ok_or_else(|| Error::MissingCoefficient(format!("lambda for blocks {subset:?}")))
    }

    /// tau_S where defined; a zero lambda_S makes the limit undefined.
    pub fn tau(&self, blocks: &[usize]) -> Result<f64> {
        let subset = canonical_blocks(blocks, self.s)?;
        match self.tau.get(&subset) {
            Some(&t) => Ok(t),
            None if self.lambda.contains_key(&subset) => Err(Error::UndefinedLimit(format!(
                "lambda for blocks {subset:?} is zero; tau is undefined"
            ))),
            None => Err(Error::MissingCoefficient(format!(
                "tau for blocks {subset:?}"
            ))),
        }
    }

    pub fn lambdas(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.lambda
    }

    pub fn taus(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.tau
    }
}

/// Exceedance-count distribution recovered from lambda alone:
/// P(N = k) proportional to
/// sum over |S| = k, T subset of S^c of (-1)^|T| lambda_{T union S}.
pub fn exceedance_from_lambda(tds: &TailDependenceSet) -> Result<ExceedanceDistribution> {
    let s = tds.s;
    let full = (1_u64 << s) - 1;
    let mut numerators = vec![0.0; s];
    for s_mask in 1..=full {
        let k = s_mask.count_ones() as usize;
        let s_comp = full & !s_mask;
        let mut acc = 0.0;
        let mut t = s_comp;
        loop {
            let sign = if t.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            let subset: Vec<usize> = (1..=s)
                .filter(|j| (t | s_mask) >> (j - 1) & 1 == 1)
                .collect();
            acc += sign * tds.lambda(&subset)?;
            if t == 0 {
                break;
            }
            t = (t - 1) & s_comp;
        }
        numerators[k - 1] += acc;
    }
    let total: f64 = numerators.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::UndefinedLimit(format!(
            "total exceedance mass from lambda is {total}"
        )));
    }
    ExceedanceDistribution::from_probs(numerators.into_iter().map(|v| v / total).collect())
}

/// Fragility index recovered from lambda alone: sum_j lambda_{j} divided by
/// the same total mass that normalizes [`exceedance_from_lambda`].
pub fn fi_from_lambda(tds: &TailDependenceSet) -> Result<f64> {
    let s = tds.s;
    let full = (1_u64 << s) - 1;
    let mut total = 0.0;
    for s_mask in 1..=full {
        let s_comp = full & !s_mask;
        let mut t = s_comp;
        loop {
            let sign = if t.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            let subset: Vec<usize> = (1..=s)
                .filter(|j| (t | s_mask) >> (j - 1) & 1 == 1)
                .collect();
            total += sign * tds.lambda(&subset)?;
            if t == 0 {
                break;
            }
            t = (t - 1) & s_comp;
        }
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::UndefinedLimit(format!(
            "total exceedance mass from lambda is {total}"
        )));
    }
    let mut block_sum = 0.0;
    for j in 1..=s {
        block_sum += tds.lambda(&[j])?;
    }
    Ok(block_sum / total)
}

/// tau_S for a factor model directly from its spectral atoms: ratio of
/// sum_k min over all blocks of the block atom maxima to the same sum with
/// the minimum restricted to the blocks in S, where the atom weight of
/// coordinate i on factor k is lambda[i][k]^alpha.
pub fn tau_spectral_factor(
    model: &FactorParetoModel,
    partition: &Partition,
    blocks: &[usize],
) -> Result<f64> {
    let s = check_block_count(partition)?;
    let subset = canonical_blocks(blocks, s)?;
    let block_atom_max = |j: usize, k: usize| -> Result<f64> {
        Ok(partition
            .block(j)?
            .members
            .indices()
            .iter()
            .map(|&i| model.atom_weight(i, k))
            .fold(0.0, f64::max))
    };
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for k in 1..=model.factor_count() {
        let mut min_all = f64::INFINITY;
        for j in 1..=s {
            min_all = min_all.min(block_atom_max(j, k)?);
        }
        let mut min_subset = f64::INFINITY;
        for &j in &subset {
            min_subset = min_subset.min(block_atom_max(j, k)?);
        }
        numerator += min_all;
        denominator += min_subset;
    }
    if denominator <= 0.0 {
        return Err(Error::UndefinedLimit(format!(
            "spectral mass for blocks {subset:?} is zero; tau is undefined"
        )));
    }
    Ok(numerator / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::{exceedance_distribution, fragility_index};
    use crate::models::{LogisticModel, MevModel};
    use crate::testutil::{factor_example, pair_and_single};

    fn factor_set() -> (TailDependenceSet, ExtremalCoefficientSet, Partition) {
        let partition = pair_and_single();
        let eps = ExtremalCoefficientSet::from_model(&factor_example(), &partition).unwrap();
        let tds = TailDependenceSet::from_extremal(&eps, &partition).unwrap();
        (tds, eps, partition)
    }

    #[test]
    fn factor_example_lambda_and_tau() {
        let (tds, eps, partition) = factor_set();
        assert!((tds.lambda(&[1]).unwrap() - 1.5).abs() < 1e-12);
        assert!((tds.lambda(&[2]).unwrap() - 1.0).abs() < 1e-12);
        assert!((tds.lambda(&[1, 2]).unwrap() - 1.0).abs() < 1e-12);
        assert!((tds.tau(&[1]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((tds.tau(&[2]).unwrap() - 1.0).abs() < 1e-12);
        assert!((tds.tau(&[1, 2]).unwrap() - 1.0).abs() < 1e-12);

        let l1 = lambda_from_extremal(&eps, &partition, &[1]).unwrap();
        assert!((l1 - 1.5).abs() < 1e-12);
        let t1 = tau_from_extremal(&eps, &partition, &[1]).unwrap();
        assert!((t1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_is_monotone_nonincreasing() {
        let (tds, _, _) = factor_set();
        assert!(tds.lambda(&[1, 2]).unwrap() <= tds.lambda(&[1]).unwrap() + 1e-12);
        assert!(tds.lambda(&[1, 2]).unwrap() <= tds.lambda(&[2]).unwrap() + 1e-12);
    }

    #[test]
    fn lambda_route_matches_coefficient_route() {
        let partition =
            Partition::new(4, vec![("a", vec![1, 2]), ("b", vec![3]), ("c", vec![4])]).unwrap();
        for model in [
            MevModel::Logistic(LogisticModel::new(4, 0.5).unwrap()),
            MevModel::Logistic(LogisticModel::new(4, 0.8).unwrap()),
        ] {
            let eps = ExtremalCoefficientSet::from_model(&model, &partition).unwrap();
            let tds = TailDependenceSet::from_extremal(&eps, &partition).unwrap();
            let direct = exceedance_distribution(&eps, &partition).unwrap();
            let via_lambda = exceedance_from_lambda(&tds).unwrap();
            for (a, b) in direct.probs().iter().zip(via_lambda.probs()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            let fi_direct = fragility_index(&eps, &partition).unwrap();
            let fi_lambda = fi_from_lambda(&tds).unwrap();
            assert!((fi_direct - fi_lambda).abs() < 1e-10);
        }
    }

    #[test]
    fn independence_makes_tau_undefined_beyond_single_blocks() {
        let model = MevModel::Logistic(LogisticModel::new(3, 1.0).unwrap());
        let partition = pair_and_single();
        let tds = TailDependenceSet::from_model(&model, &partition).unwrap();
        assert!(tds.lambda(&[1, 2]).unwrap().abs() < 1e-12);
        assert!(matches!(
            tds.tau(&[1, 2]),
            Err(Error::UndefinedLimit(_))
        ));
        assert!((tds.tau(&[1]).unwrap() - 0.0).abs() < 1e-12);
        let dist = exceedance_from_lambda(&tds).unwrap();
        assert!((dist.probs()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_route_matches_extremal_route_on_factor_example() {
        let (tds, _, partition) = factor_set();
        let MevModel::FactorPareto(factor) = factor_example() else {
            unreachable!()
        };
        for blocks in [vec![1], vec![2], vec![1, 2]] {
            let spectral = tau_spectral_factor(&factor, &partition, &blocks).unwrap();
            let extremal = tds.tau(&blocks).unwrap();
            assert!(
                (spectral - extremal).abs() < 1e-12,
                "blocks {blocks:?}: {spectral} vs {extremal}"
            );
        }
        let t1 = tau_spectral_factor(&factor, &partition, &[1]).unwrap();
        assert!((t1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn subset_arguments_are_validated() {
        let (tds, eps, partition) = factor_set();
        assert!(tds.lambda(&[]).is_err());
        assert!(tds.lambda(&[3]).is_err());
        assert!(lambda_from_extremal(&eps, &partition, &[0]).is_err());
        assert!((tds.lambda(&[1, 1]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn serializes_with_block_subset_keys() {
        let (tds, _, _) = factor_set();
        let json = serde_json::to_value(&tds).unwrap();
        assert!(json.get("lambda").is_some());
        assert!(json.get("tau").is_some());
    }
}
