//! Simulation cross-checks of the closed-form quantities.
//!
//! Samples a model, replaces the margins by ranks, counts block exceedances
//! over high empirical quantiles, and compares the resulting frequencies
//! against the closed forms: the fragility index and exceedance-count
//! distribution for max-stable families, lambda and tau over block subsets,
//! and the eta indices for the Gaussian family. Checks are deterministic in
//! the seed; replicates run on independent derived substreams and their
//! empirical values are averaged.

use serde::Serialize;

use crate::asympt::{eta_block_aifi, eta_combination, eta_report_gaussian};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{hill_eta_hat, pit_transform, EstimatorConfig, PitDataset};
use crate::fragility::{exceedance_distribution, ExceedanceDistribution, ExtremalCoefficientSet};
use crate::models::sampler::derive_seed;
use crate::models::MevModel;
use crate::partition::Partition;
use crate::taildep::{subset_label, TailDependenceSet};

/// Largest block count for which lambda/tau are checked on every nonempty
/// block subset; beyond it only the single blocks and the full set are.
const FULL_SUBSET_LIMIT: usize = 6;

/// One simulation check run: which model and partition, how much data, at
/// which quantiles, and how tight the pass criterion is.
#[derive(Debug, Clone, Serialize)]
pub struct McCheckSpec {
    #[serde(skip)]
    pub model: MevModel,
    #[serde(skip)]
    pub partition: Partition,
    /// Thresholds, as marginal rank quantiles in (0,1). The pass verdict is
    /// taken at the largest.
    pub quantiles: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub replicates: usize,
    /// Absolute error allowed at the largest quantile.
    pub tolerance: f64,
}

impl McCheckSpec {
    /// Defaults: quantiles 0.95 and 0.99, n = 100000, one replicate,
    /// tolerance 0.1 (a heuristic calibrated to those defaults).
    pub fn new(model: MevModel, partition: Partition, seed: u64) -> Self {
        McCheckSpec {
            model,
            partition,
            quantiles: vec![0.95, 0.99],
            n: 100_000,
            seed,
            replicates: 1,
            tolerance: 0.1,
        }
    }

    fn validate(&self) -> Result<Vec<f64>> {
        if self.model.dimension() != self.partition.dimension() {
            return Err(Error::InvalidArgument(format!(
                "model dimension {} does not match partition dimension {}",
                self.model.dimension(),
                self.partition.dimension()
            )));
        }
        if self.quantiles.is_empty() {
            return Err(Error::InvalidArgument("at least one quantile is required".into()));
        }
        if self.quantiles.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "quantiles must lie in (0, 1), got {:?}",
                self.quantiles
            )));
        }
        if self.n < 1000 {
            return Err(Error::InvalidArgument(format!(
                "sample size {} is too small for tail counting; need at least 1000",
                self.n
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("at least one replicate is required".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        let mut sorted = self.quantiles.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
        sorted.dedup();
        Ok(sorted)
    }
}

/// Empirical value of one quantity at one quantile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UPoint {
    pub u: f64,
    pub value: f64,
    pub abs_error: f64,
}

/// Closed form vs. empirical trajectory for one quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityCheck {
    pub name: String,
    pub closed_form: f64,
    pub empirical_by_u: Vec<UPoint>,
    /// Error at the largest quantile; the pass verdict uses this.
    pub abs_error: f64,
    pub pass: bool,
    /// Whether the error shrinks from the smallest to the largest quantile;
    /// informational only (absent with a single quantile).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converging: Option<bool>,
}

/// Outcome of one [`mc_check`] run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCheckReport {
    pub model_family: String,
    pub dimension: usize,
    pub n: usize,
    pub seed: u64,
    pub replicates: usize,
    pub tolerance: f64,
    pub quantiles: Vec<f64>,
    pub checks: Vec<QuantityCheck>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Per-count exceedance tallies of the rank-transformed rows at quantile u:
/// `counts[k-1]` rows have exactly k blocks exceeding, `m` rows have at
/// least one.
fn exceedance_counts(
    pit: &PitDataset,
    partition: &Partition,
    u: f64,
) -> Result<(Vec<usize>, usize)> {
    let s = partition.block_count();
    let mut counts = vec![0_usize; s];
    let mut m = 0_usize;
    for i in 0..pit.n_rows() {
        let mut exceeding = 0;
        for block in partition.blocks() {
            if pit.row_max(i, &block.members) > u {
                exceeding += 1;
            }
        }
        if exceeding > 0 {
            counts[exceeding - 1] += 1;
            m += 1;
        }
    }
    Ok((counts, m))
}

/// Relative frequencies of the number of exceeding blocks among rows where
/// at least one block exceeds the marginal rank quantile u, together with
/// the conditional mean count (a finite-level fragility-index proxy).
pub fn empirical_exceedance_distribution(
    sample: &Dataset,
    partition: &Partition,
    u: f64,
) -> Result<(ExceedanceDistribution, f64)> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile must lie in (0, 1), got {u}"
        )));
    }
    if sample.n_cols() != partition.dimension() {
        return Err(Error::InvalidArgument(format!(
            "data dimension {} does not match partition dimension {}",
            sample.n_cols(),
            partition.dimension()
        )));
    }
    let pit = pit_transform(sample)?;
    let (counts, m) = exceedance_counts(&pit, partition, u)?;
    if m == 0 {
        return Err(Error::UndefinedLimit(format!(
            "no block exceedance observed at quantile {u}; the conditional \
             distribution is undefined"
        )));
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    let distribution = ExceedanceDistribution::from_probs(probs)?;
    let mean = distribution.mean();
    Ok((distribution, mean))
}

/// The closed-form targets for one model/partition pair, plus the plan for
/// computing their empirical counterparts.
struct Targets {
    names: Vec<String>,
    closed: Vec<f64>,
    /// Block subsets whose lambda is tracked, aligned with the lambda
    /// entries of `names`; tau subsets follow analogously.
    lambda_subsets: Vec<Vec<usize>>,
    tau_subsets: Vec<Vec<usize>>,
    notes: Vec<String>,
}

fn block_subsets(s: usize) -> Vec<Vec<usize>> {
    if s <= FULL_SUBSET_LIMIT {
        (1_u64..(1 << s))
            .map(|mask| (1..=s).filter(|j| mask >> (j - 1) & 1 == 1).collect())
            .collect()
    } else {
        let mut subsets: Vec<Vec<usize>> = (1..=s).map(|j| vec![j]).collect();
        subsets.push((1..=s).collect());
        subsets
    }
}

fn max_stable_targets(model: &MevModel, partition: &Partition) -> Result<Targets> {
    let eps = ExtremalCoefficientSet::from_model(model, partition)?;
    let distribution = exceedance_distribution(&eps, partition)?;
    let tds = TailDependenceSet::from_extremal(&eps, partition)?;
    let mut names = vec!["fi".to_string()];
    let mut closed = vec![distribution.mean()];
    for (k, &p) in distribution.probs().iter().enumerate() {
        names.push(format!("p_{}", k + 1));
        closed.push(p);
    }
    let mut lambda_subsets = Vec::new();
    let mut tau_subsets = Vec::new();
    let mut notes = Vec::new();
    for subset in block_subsets(partition.block_count()) {
        names.push(format!("lambda_{}", subset_label(&subset)));
        closed.push(tds.lambda(&subset)?);
        lambda_subsets.push(subset);
    }
    for subset in block_subsets(partition.block_count()) {
        match tds.tau(&subset) {
            Ok(tau) => {
                names.push(format!("tau_{}", subset_label(&subset)));
                closed.push(tau);
                tau_subsets.push(subset);
            }
            Err(Error::UndefinedLimit(_)) => notes.push(format!(
                "tau for blocks {} is undefined (lambda = 0); skipped",
                subset_label(&subset)
            )),
            Err(e) => return Err(e),
        }
    }
    Ok(Targets {
        names,
        closed,
        lambda_subsets,
        tau_subsets,
        notes,
    })
}

fn max_stable_empirical(
    pit: &PitDataset,
    partition: &Partition,
    u: f64,
    targets: &Targets,
) -> Result<Vec<f64>> {
    let n = pit.n_rows();
    let s = partition.block_count();
    let (counts, m) = exceedance_counts(pit, partition, u)?;
    let mut values = Vec::with_capacity(targets.names.len());
    if m == 0 {
        return Err(Error::UndefinedLimit(format!(
            "no block exceedance observed at quantile {u}"
        )));
    }
    let mean = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (k + 1) as f64 * c as f64)
        .sum::<f64>()
        / m as f64;
    values.push(mean);
    for &c in &counts {
        values.push(c as f64 / m as f64);
    }
    let joint_count = |subset: &[usize]| -> Result<usize> {
        let keys: Vec<_> = subset
            .iter()
            .map(|&j| partition.block(j).map(|b| b.members.clone()))
            .collect::<Result<_>>()?;
        let mut count = 0;
        for i in 0..n {
            if keys.iter().all(|key| pit.row_max(i, key) > u) {
                count += 1;
            }
        }
        Ok(count)
    };
    let denom = n as f64 * (1.0 - u);
    let mut lambda_counts = Vec::with_capacity(targets.lambda_subsets.len());
    for subset in &targets.lambda_subsets {
        let c = joint_count(subset)?;
        lambda_counts.push(c);
        values.push(c as f64 / denom);
    }
    let full: Vec<usize> = (1..=s).collect();
    let full_count = joint_count(&full)?;
    for subset in &targets.tau_subsets {
        let c = joint_count(subset)?;
        values.push(if c > 0 {
            full_count as f64 / c as f64
        } else {
            f64::NAN
        });
    }
    Ok(values)
}

fn gaussian_targets(model: &MevModel, partition: &Partition) -> Result<Targets> {
    let MevModel::Gaussian(g) = model else {
        unreachable!("caller dispatches on family")
    };
    let report = eta_report_gaussian(g.sigma(), partition)?;
    let mut names = vec!["eta_D".to_string()];
    let mut closed = vec![report.eta_d];
    for (j, &e) in report.eta_blocks.iter().enumerate() {
        names.push(format!("eta_block_{}", j + 1));
        closed.push(e);
    }
    names.push("eta_block_aifi".to_string());
    closed.push(report.eta_block_aifi);
    let mut notes = Vec::new();
    match report.eta_combination {
        Some(c) => {
            names.push("eta_combination".to_string());
            closed.push(c);
        }
        None => notes.push("transversal combination skipped (too many transversals)".into()),
    }
    Ok(Targets {
        names,
        closed,
        lambda_subsets: Vec::new(),
        tau_subsets: Vec::new(),
        notes,
    })
}

fn gaussian_empirical(
    pit: &PitDataset,
    partition: &Partition,
    u: f64,
    targets: &Targets,
) -> Result<Vec<f64>> {
    let n = pit.n_rows();
    let k = ((n as f64 * (1.0 - u)) as usize).max(10);
    let config = EstimatorConfig {
        k: Some(k),
        ..EstimatorConfig::default()
    };
    let eta_d = hill_eta_hat(pit, &partition.full_set(), &config)?.value;
    let mut eta_blocks = Vec::with_capacity(partition.block_count());
    for block in partition.blocks() {
        eta_blocks.push(hill_eta_hat(pit, &block.members, &config)?.value);
    }
    let aifi = eta_block_aifi(eta_d, &eta_blocks).unwrap_or(f64::NAN);
    let mut values = vec![eta_d];
    values.extend(&eta_blocks);
    values.push(aifi);
    if targets.names.iter().any(|n| n == "eta_combination") {
        let combo =
            eta_combination(partition, |key| hill_eta_hat(pit, key, &config).map(|e| e.value))?;
        values.push(combo);
    }
    Ok(values)
}

/// Samples the model and compares every applicable closed-form quantity
/// against its empirical counterpart at each quantile. The verdict per
/// quantity is |empirical - closed| < tolerance at the largest quantile;
/// failures are report content, not errors.
pub fn mc_check(spec: &McCheckSpec) -> Result<McCheckReport> {
    let quantiles = spec.validate()?;
    let targets = if spec.model.is_max_stable() {
        max_stable_targets(&spec.model, &spec.partition)?
    } else {
        gaussian_targets(&spec.model, &spec.partition)?
    };

    let mut sums = vec![vec![0.0; targets.names.len()]; quantiles.len()];
    for r in 0..spec.replicates {
        let seed = derive_seed(spec.seed, r as u64);
        let sample = spec.model.sample(spec.n, seed)?;
        let pit = pit_transform(&sample)?;
        for (ui, &u) in quantiles.iter().enumerate() {
            let values = if spec.model.is_max_stable() {
                max_stable_empirical(&pit, &spec.partition, u, &targets)?
            } else {
                gaussian_empirical(&pit, &spec.partition, u, &targets)?
            };
            for (acc, v) in sums[ui].iter_mut().zip(values) {
                *acc += v;
            }
        }
    }

    let reps = spec.replicates as f64;
    let mut checks = Vec::with_capacity(targets.names.len());
    for (qi, name) in targets.names.iter().enumerate() {
        let closed = targets.closed[qi];
        let empirical_by_u: Vec<UPoint> = quantiles
            .iter()
            .enumerate()
            .map(|(ui, &u)| {
                let value = sums[ui][qi] / reps;
                UPoint {
                    u,
                    value,
                    abs_error: (value - closed).abs(),
                }
            })
            .collect();
        let abs_error = empirical_by_u.last().expect("nonempty quantiles").abs_error;
        let first_error = empirical_by_u[0].abs_error;
        let converging = if empirical_by_u.len() > 1 && abs_error.is_finite() {
            Some(abs_error <= first_error)
        } else {
            None
        };
        checks.push(QuantityCheck {
            name: name.clone(),
            closed_form: closed,
            empirical_by_u,
            abs_error,
            pass: abs_error < spec.tolerance,
            converging,
        });
    }

    Ok(McCheckReport {
        model_family: spec.model.family_name().to_string(),
        dimension: spec.model.dimension(),
        n: spec.n,
        seed: spec.seed,
        replicates: spec.replicates,
        tolerance: spec.tolerance,
        quantiles,
        pass: checks.iter().all(|c| c.pass),
        checks,
        notes: targets.notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GaussianModel, LogisticModel};
    use crate::testutil::{factor_example, pair_and_single};

    #[test]
    fn conditional_mean_equals_weighted_counts_exactly() {
        let sample = factor_example().sample(5_000, 3).unwrap();
        let partition = pair_and_single();
        let (dist, mean) = empirical_exceedance_distribution(&sample, &partition, 0.95).unwrap();
        let weighted: f64 = dist
            .probs()
            .iter()
            .enumerate()
            .map(|(k, &p)| (k + 1) as f64 * p)
            .sum();
        assert_eq!(mean, weighted);
    }

    #[test]
    fn comonotone_rows_exceed_all_blocks_together() {
        let rows = (1..=2000).map(|i| vec![i as f64, (2 * i) as f64, (3 * i) as f64]).collect();
        let sample = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            rows,
            None,
        )
        .unwrap();
        let partition = Partition::singleton(3).unwrap();
        let (dist, mean) = empirical_exceedance_distribution(&sample, &partition, 0.9).unwrap();
        assert_eq!(dist.probs()[2], 1.0);
        assert_eq!(mean, 3.0);
    }

    #[test]
    fn factor_example_passes_at_moderate_sample_size() {
        let mut spec = McCheckSpec::new(factor_example(), pair_and_single(), 42);
        spec.n = 20_000;
        spec.tolerance = 0.15;
        let report = mc_check(&spec).unwrap();
        assert!(
            report.pass,
            "failed checks: {:?}",
            report
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| (c.name.clone(), c.closed_form, c.abs_error))
                .collect::<Vec<_>>()
        );
        let fi = report.checks.iter().find(|c| c.name == "fi").unwrap();
        assert!((fi.closed_form - 20.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn independent_logistic_blocks_have_unit_fi_and_no_tau() {
        let model = MevModel::Logistic(LogisticModel::new(3, 1.0).unwrap());
        let mut spec = McCheckSpec::new(model, pair_and_single(), 7);
        spec.n = 20_000;
        spec.tolerance = 0.15;
        let report = mc_check(&spec).unwrap();
        let fi = report.checks.iter().find(|c| c.name == "fi").unwrap();
        assert!((fi.closed_form - 1.0).abs() < 1e-12);
        assert!(fi.pass, "fi error {}", fi.abs_error);
        assert!(report.checks.iter().all(|c| c.name != "tau_{1,2}"));
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn gaussian_checks_track_eta_closed_forms() {
        let sigma = vec![
            vec![1.0, 0.5, 0.5, 0.5],
            vec![0.5, 1.0, 0.5, 0.5],
            vec![0.5, 0.5, 1.0, 0.5],
            vec![0.5, 0.5, 0.5, 1.0],
        ];
        let model = MevModel::Gaussian(GaussianModel::new(sigma).unwrap());
        let partition = Partition::new(
            4,
            vec![("a", vec![1, 2]), ("b", vec![3]), ("c", vec![4])],
        )
        .unwrap();
        let mut spec = McCheckSpec::new(model, partition, 19);
        spec.n = 20_000;
        spec.tolerance = 0.2;
        let report = mc_check(&spec).unwrap();
        let aifi = report
            .checks
            .iter()
            .find(|c| c.name == "eta_block_aifi")
            .unwrap();
        assert!((aifi.closed_form - 2.5 * 2.5 / 9.0).abs() < 1e-12);
        assert!(aifi.pass, "eta error {}", aifi.abs_error);
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let mut spec = McCheckSpec::new(factor_example(), pair_and_single(), 123);
        spec.n = 2_000;
        spec.quantiles = vec![0.9, 0.97];
        spec.replicates = 2;
        let a = serde_json::to_string(&mc_check(&spec).unwrap()).unwrap();
        let b = serde_json::to_string(&mc_check(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation_rejects_bad_inputs() {
        let mut spec = McCheckSpec::new(factor_example(), pair_and_single(), 1);
        spec.n = 10;
        assert!(mc_check(&spec).is_err());
        let mut spec = McCheckSpec::new(factor_example(), pair_and_single(), 1);
        spec.quantiles = vec![1.0];
        assert!(mc_check(&spec).is_err());
        let mut spec = McCheckSpec::new(factor_example(), Partition::singleton(2).unwrap(), 1);
        spec.n = 2_000;
        assert!(mc_check(&spec).is_err());
    }
}
