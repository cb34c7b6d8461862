//! Rank-based estimators of the dependence quantities.
//!
//! Everything here operates on the probability-integral transform of the
//! data: each column is replaced by its empirical distribution function
//! values with denominator n+1, which keeps every transformed value strictly
//! inside (0,1) and makes all estimators invariant under strictly increasing
//! marginal transformations. On top of the transform sit the block-maxima
//! mean M(A), the extremal-coefficient estimate M/(1-M), the plug-in
//! fragility index, a threshold-counting estimate of the block tail
//! dependence coefficient lambda, and a Hill-type estimate of the residual
//! dependence coefficient eta.

use serde::Serialize;

use crate::asympt::{eta_report_from_lookup, EtaReport};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fragility::{
    exceedance_distribution_lenient, report_with_distribution, ExtremalCoefficientSet,
    FragilityReport,
};
use crate::partition::{Partition, SubsetKey};
use crate::taildep::canonical_blocks;

/// Column-wise probability integral transform of a dataset: entry (i, j) is
/// the fraction of observations in column j that are <= the (i, j) value,
/// with denominator n+1.
#[derive(Debug, Clone, PartialEq)]
pub struct PitDataset {
    labels: Vec<String>,
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl PitDataset {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Transformed value for row `i` (0-based) and column `j` (1-based).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + (j - 1)]
    }

    fn check_subset(&self, a: &SubsetKey) -> Result<()> {
        if a.indices().iter().any(|&j| j > self.d) {
            return Err(Error::InvalidArgument(format!(
                "subset {a} exceeds data dimension {}",
                self.d
            )));
        }
        Ok(())
    }

    pub(crate) fn row_max(&self, i: usize, a: &SubsetKey) -> f64 {
        a.indices()
            .iter()
            .map(|&j| self.value(i, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tuning knobs for the threshold-based estimators. `k` overrides the
/// number of top order statistics for both lambda and the Hill estimate;
/// when absent, lambda uses floor(n^(2/3)) and Hill uses floor(sqrt(n)).
/// `clamp_eps` projects extremal-coefficient estimates onto their feasible
/// range [1, |A|].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub k: Option<usize>,
    pub clamp_eps: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            k: None,
            clamp_eps: true,
        }
    }
}

impl EstimatorConfig {
    fn resolve_k(&self, n: usize, default_k: usize) -> Result<usize> {
        let k = self.k.unwrap_or(default_k);
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must satisfy 1 <= k < n = {n}"
            )));
        }
        Ok(k)
    }

    /// Top-order count for the lambda estimator: floor(n^(2/3)) by default.
    pub fn k_lambda(&self, n: usize) -> Result<usize> {
        self.resolve_k(n, ((n as f64).powf(2.0 / 3.0) + 1e-9).floor() as usize)
    }

    /// Top-order count for the Hill estimator: floor(sqrt(n)) by default.
    pub fn k_hill(&self, n: usize) -> Result<usize> {
        self.resolve_k(n, ((n as f64).sqrt() + 1e-9).floor() as usize)
    }
}

/// Applies the (n+1)-denominator empirical distribution function column by
/// column. Ties share their count-based value. Constant columns carry no
/// rank information and are rejected.
pub fn pit_transform(data: &Dataset) -> Result<PitDataset> {
    let n = data.n_rows();
    let d = data.n_cols();
    if n < 2 {
        return Err(Error::Data(format!(
            "at least 2 rows are required for the rank transform, got {n}"
        )));
    }
    let denom = (n + 1) as f64;
    let mut values = vec![0.0; n * d];
    for j in 1..=d {
        let column = data.column(j);
        let mut sorted = column.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        if sorted[0] == sorted[n - 1] {
            return Err(Error::Data(format!(
                "column '{}' is constant; its ranks are degenerate",
                data.labels()[j - 1]
            )));
        }
        for (i, &x) in column.iter().enumerate() {
            let count = sorted.partition_point(|&v| v <= x);
            values[i * d + (j - 1)] = count as f64 / denom;
        }
    }
    Ok(PitDataset {
        labels: data.labels().to_vec(),
        values,
        n,
        d,
    })
}

/// Sample mean of the rowwise maxima of the transformed columns in A.
pub fn block_max_mean(pit: &PitDataset, a: &SubsetKey) -> Result<f64> {
    pit.check_subset(a)?;
    let total: f64 = (0..pit.n).map(|i| pit.row_max(i, a)).sum();
    Ok(total / pit.n as f64)
}

/// Extremal-coefficient estimate with and without the feasibility clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonHat {
    /// M/(1-M) as computed.
    pub raw: f64,
    /// Headline value: `raw` clamped to [1, |A|] when the config asks for
    /// it, `raw` unchanged otherwise.
    pub value: f64,
}

/// Estimates the extremal coefficient of the coordinates in A as
/// M(A)/(1 - M(A)).
pub fn extremal_coef_hat(
    pit: &PitDataset,
    a: &SubsetKey,
    config: &EstimatorConfig,
) -> Result<EpsilonHat> {
    let m = block_max_mean(pit, a)?;
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Numeric(format!(
            "block-maxima mean for {a} is {m}, outside (0, 1)"
        )));
    }
    let raw = m / (1.0 - m);
    let value = if config.clamp_eps {
        raw.clamp(1.0, a.len() as f64)
    } else {
        raw
    };
    Ok(EpsilonHat { raw, value })
}

/// Plug-in fragility report: extremal coefficients of every block union are
/// estimated, the index is their ratio, and the exceedance distribution is
/// derived from them with finite-sample noise clipped and renormalized
/// (clipping is reported in the diagnostics, as is any clamped coefficient).
pub fn fi_hat(
    pit: &PitDataset,
    partition: &Partition,
    config: &EstimatorConfig,
) -> Result<FragilityReport> {
    if partition.dimension() != pit.d {
        return Err(Error::InvalidArgument(format!(
            "partition dimension {} does not match data dimension {}",
            partition.dimension(),
            pit.d
        )));
    }
    let mut diagnostics = Vec::new();
    let eps = ExtremalCoefficientSet::from_block_unions(partition, |key| {
        let est = extremal_coef_hat(pit, key, config)?;
        // Rank sums leave float dust around the feasible-range endpoints;
        // only a visible adjustment is worth a note.
        if (est.value - est.raw).abs() > 1e-9 {
            diagnostics.push(format!(
                "eps estimate for {key} clamped from {:.6} to {:.6}",
                est.raw, est.value
            ));
        }
        Ok(est.value)
    })?;
    let (distribution, mut dist_notes) = exceedance_distribution_lenient(&eps, partition)?;
    diagnostics.append(&mut dist_notes);
    report_with_distribution(&eps, partition, distribution, diagnostics)
}

/// Threshold-counting estimate of lambda_S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaHat {
    pub value: f64,
    /// Number of top order statistics defining the threshold 1 - k/n.
    pub k: usize,
    /// Rows on which every block in S exceeded the threshold.
    pub exceedances: usize,
}

/// Estimates lambda_S = lim P(all blocks in S exceed u)/(1-u) by counting
/// rows whose per-block transformed maxima all exceed 1 - k/n, scaled by
/// 1/k.
pub fn lambda_hat(
    pit: &PitDataset,
    partition: &Partition,
    blocks: &[usize],
    config: &EstimatorConfig,
) -> Result<LambdaHat> {
    if partition.dimension() != pit.d {
        return Err(Error::InvalidArgument(format!(
            "partition dimension {} does not match data dimension {}",
            partition.dimension(),
            pit.d
        )));
    }
    let subset = canonical_blocks(blocks, partition.block_count())?;
    let k = config.k_lambda(pit.n)?;
    let threshold = 1.0 - k as f64 / pit.n as f64;
    let keys: Vec<&SubsetKey> = subset
        .iter()
        .map(|&j| partition.block(j).map(|b| &b.members))
        .collect::<Result<_>>()?;
    let mut exceedances = 0;
    for i in 0..pit.n {
        if keys.iter().all(|key| pit.row_max(i, key) > threshold) {
            exceedances += 1;
        }
    }
    Ok(LambdaHat {
        value: exceedances as f64 / k as f64,
        k,
        exceedances,
    })
}

/// Hill-type estimate of eta_A, raw and truncated to its (0, 1] range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaHat {
    pub raw: f64,
    /// min(raw, 1): the coefficient's parameter space is (0, 1].
    pub value: f64,
    pub k: usize,
}

/// Estimates eta_A as the Hill tail index of T_i = min over A of
/// 1/(1 - transformed value): the mean log-ratio of the k largest T values
/// to the (k+1)-th largest.
pub fn hill_eta_hat(pit: &PitDataset, a: &SubsetKey, config: &EstimatorConfig) -> Result<EtaHat> {
    pit.check_subset(a)?;
    let k = config.k_hill(pit.n)?;
    let mut t: Vec<f64> = (0..pit.n)
        .map(|i| {
            a.indices()
                .iter()
                .map(|&j| 1.0 / (1.0 - pit.value(i, j)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    t.sort_by(|x, y| y.partial_cmp(x).expect("finite values"));
    let floor = t[k];
    if !(floor > 0.0) {
        return Err(Error::Numeric(format!(
            "order statistic T({k}) = {floor} is not positive"
        )));
    }
    let raw = t[..k].iter().map(|v| (v / floor).ln()).sum::<f64>() / k as f64;
    if !(raw > 0.0) {
        return Err(Error::Numeric(format!(
            "Hill estimate degenerated to {raw}; the top {k} order statistics are tied"
        )));
    }
    Ok(EtaHat {
        raw,
        value: raw.min(1.0),
        k,
    })
}

/// Full eta report estimated from data: eta for the whole vector, every
/// block, the harmonic block combination, and the transversal maximum. A
/// diagnostic flags data whose estimated fragility index materially exceeds
/// 1, where the residual-dependence indices lose their meaning.
pub fn eta_reports_hat(
    pit: &PitDataset,
    partition: &Partition,
    config: &EstimatorConfig,
) -> Result<EtaReport> {
    if partition.dimension() != pit.d {
        return Err(Error::InvalidArgument(format!(
            "partition dimension {} does not match data dimension {}",
            partition.dimension(),
            pit.d
        )));
    }
    let mut report =
        eta_report_from_lookup(partition, |key| hill_eta_hat(pit, key, config).map(|e| e.value))?;
    report.k = Some(config.k_hill(pit.n)?);
    if let Ok(fi_report) = fi_hat(pit, partition, config) {
        if fi_report.fi > 1.05 {
            report.diagnostics.push(format!(
                "estimated fragility index {:.3} exceeds 1; eta indices assume an \
                 asymptotically independent vector",
                fi_report.fi
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticModel, MevModel};
    use crate::testutil::{factor_example, pair_and_single, subset};

    fn dataset(labels: &[&str], rows: Vec<Vec<f64>>) -> Dataset {
        Dataset::new(labels.iter().map(|s| s.to_string()).collect(), rows, None).unwrap()
    }

    /// d comonotone tie-free columns with n = 7 rows; the PIT denominator
    /// n + 1 = 8 is a power of two, so every transformed value and mean is
    /// exact in binary floating point.
    fn comonotone(d: usize) -> PitDataset {
        let rows = (1..=7)
            .map(|i| (1..=d).map(|j| (i * j) as f64).collect())
            .collect();
        let labels: Vec<String> = (1..=d).map(|j| format!("C{j}")).collect();
        pit_transform(
            &Dataset::new(labels, rows, None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pit_maps_ranks_over_n_plus_one() {
        let pit = pit_transform(&dataset(&["a"], vec![vec![3.0], vec![1.0], vec![2.0]])).unwrap();
        assert_eq!(pit.value(0, 1), 0.75);
        assert_eq!(pit.value(1, 1), 0.25);
        assert_eq!(pit.value(2, 1), 0.5);
    }

    #[test]
    fn pit_ties_share_the_count_value() {
        let pit = pit_transform(&dataset(&["a"], vec![vec![2.0], vec![2.0], vec![1.0]])).unwrap();
        assert_eq!(pit.value(0, 1), 0.75);
        assert_eq!(pit.value(1, 1), 0.75);
        assert_eq!(pit.value(2, 1), 0.25);
    }

    #[test]
    fn pit_rejects_constant_columns_and_tiny_samples() {
        let constant = dataset(&["a"], vec![vec![5.0], vec![5.0], vec![5.0]]);
        assert!(matches!(pit_transform(&constant), Err(Error::Data(_))));
        let tiny = dataset(&["a"], vec![vec![1.0]]);
        assert!(pit_transform(&tiny).is_err());
    }

    #[test]
    fn pit_is_invariant_under_increasing_transforms() {
        let raw: Vec<f64> = (0..40).map(|i| ((i * 37) % 41) as f64 / 10.0).collect();
        let base = dataset(&["a"], raw.iter().map(|&v| vec![v]).collect());
        let warped = dataset(&["a"], raw.iter().map(|&v| vec![v.exp()]).collect());
        let p1 = pit_transform(&base).unwrap();
        let p2 = pit_transform(&warped).unwrap();
        for i in 0..40 {
            assert_eq!(p1.value(i, 1), p2.value(i, 1));
        }
    }

    #[test]
    fn block_max_mean_is_half_for_tie_free_singletons() {
        let pit = comonotone(2);
        assert_eq!(block_max_mean(&pit, &subset(&[1], 2)).unwrap(), 0.5);
        assert_eq!(block_max_mean(&pit, &subset(&[1, 2], 2)).unwrap(), 0.5);
    }

    #[test]
    fn block_max_mean_antithetic_closed_form() {
        let n = 10;
        let rows = (1..=n)
            .map(|r| vec![r as f64, (n + 1 - r) as f64])
            .collect();
        let pit = pit_transform(&dataset(&["up", "down"], rows)).unwrap();
        let m = block_max_mean(&pit, &subset(&[1, 2], 2)).unwrap();
        let expected = (3 * n + 2) as f64 / (4 * (n + 1)) as f64;
        assert!((m - expected).abs() < 1e-14);
    }

    #[test]
    fn comonotone_columns_estimate_eps_exactly_one() {
        let pit = comonotone(3);
        let est = extremal_coef_hat(&pit, &subset(&[1, 2, 3], 3), &EstimatorConfig::default())
            .unwrap();
        assert_eq!(est.raw, 1.0);
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn antithetic_columns_hit_the_feasibility_clamp() {
        let rows = (1..=7).map(|r| vec![r as f64, (8 - r) as f64]).collect();
        let pit = pit_transform(&dataset(&["up", "down"], rows)).unwrap();
        let clamped =
            extremal_coef_hat(&pit, &subset(&[1, 2], 2), &EstimatorConfig::default()).unwrap();
        assert!((clamped.raw - 2.5).abs() < 1e-12);
        assert_eq!(clamped.value, 2.0);
        let unclamped = extremal_coef_hat(
            &pit,
            &subset(&[1, 2], 2),
            &EstimatorConfig {
                clamp_eps: false,
                ..EstimatorConfig::default()
            },
        )
        .unwrap();
        assert_eq!(unclamped.value, unclamped.raw);
    }

    #[test]
    fn fi_hat_on_comonotone_data_reaches_the_dimension() {
        let pit = comonotone(3);
        let partition = Partition::singleton(3).unwrap();
        let report = fi_hat(&pit, &partition, &EstimatorConfig::default()).unwrap();
        assert_eq!(report.fi, 3.0);
        assert!((report.exceedance_probs[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fi_hat_is_the_ratio_of_its_own_coefficients() {
        let data = factor_example().sample(500, 21).unwrap();
        let pit = pit_transform(&data).unwrap();
        let partition = pair_and_single();
        let report = fi_hat(&pit, &partition, &EstimatorConfig::default()).unwrap();
        let ratio = report.eps_blocks.iter().sum::<f64>() / report.eps_d;
        assert!((report.fi - ratio).abs() < 1e-12);
    }

    #[test]
    fn fi_hat_converges_on_maxima_of_the_factor_example() {
        // The factor construction is only in the domain of attraction of its
        // max-stable limit, so the coefficient estimators are applied to a
        // sample of componentwise block maxima (the same reduction a monthly
        // maxima step performs on daily data). On the raw rows the estimate
        // settles near 1.31 rather than the limit value 1.5.
        let data = factor_example().sample(20_000, 5).unwrap();
        let (maxima, dropped) = crate::io::block_maxima(&data, 25).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(maxima.n_rows(), 800);
        let pit = pit_transform(&maxima).unwrap();
        let partition = pair_and_single();
        let report = fi_hat(&pit, &partition, &EstimatorConfig::default()).unwrap();
        assert!(
            (report.fi - 20.0 / 12.0).abs() < 0.1,
            "fi = {}",
            report.fi
        );
        assert!((report.eps_d - 1.5).abs() < 0.1, "eps_D = {}", report.eps_d);
    }

    #[test]
    fn lambda_hat_is_one_on_comonotone_data() {
        let pit = comonotone(2);
        let partition = Partition::new(2, vec![("a", vec![1]), ("b", vec![2])]).unwrap();
        let config = EstimatorConfig {
            k: Some(3),
            ..EstimatorConfig::default()
        };
        let est = lambda_hat(&pit, &partition, &[1, 2], &config).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.k, 3);
        assert_eq!(est.exceedances, 3);
    }

    #[test]
    fn lambda_hat_vanishes_for_independent_blocks() {
        let model = MevModel::Logistic(LogisticModel::new(2, 1.0).unwrap());
        let pit = pit_transform(&model.sample(20_000, 9).unwrap()).unwrap();
        let partition = Partition::singleton(2).unwrap();
        let est = lambda_hat(&pit, &partition, &[1, 2], &EstimatorConfig::default()).unwrap();
        assert!(est.value < 0.1, "lambda = {}", est.value);
    }

    #[test]
    fn lambda_hat_single_block_tracks_eps_hat() {
        let data = factor_example().sample(20_000, 13).unwrap();
        let pit = pit_transform(&data).unwrap();
        let partition = pair_and_single();
        let config = EstimatorConfig::default();
        let lambda = lambda_hat(&pit, &partition, &[1], &config).unwrap();
        let eps = extremal_coef_hat(&pit, &subset(&[1, 2], 3), &config).unwrap();
        assert!(
            (lambda.value - eps.value).abs() < 0.15,
            "lambda = {} vs eps = {}",
            lambda.value,
            eps.value
        );
    }

    #[test]
    fn hill_eta_is_near_one_on_comonotone_data() {
        let n = 10_000;
        let rows = (1..=n).map(|r| vec![r as f64, (r * 2) as f64]).collect();
        let pit = pit_transform(&dataset(&["a", "b"], rows)).unwrap();
        let est = hill_eta_hat(&pit, &subset(&[1, 2], 2), &EstimatorConfig::default()).unwrap();
        assert_eq!(est.k, 100);
        assert!((est.raw - 1.0).abs() < 0.05, "raw = {}", est.raw);
        assert!(est.value <= 1.0);
    }

    #[test]
    fn hill_eta_is_near_half_for_independent_pairs() {
        let model = MevModel::Logistic(LogisticModel::new(2, 1.0).unwrap());
        let pit = pit_transform(&model.sample(20_000, 31).unwrap()).unwrap();
        let est = hill_eta_hat(&pit, &subset(&[1, 2], 2), &EstimatorConfig::default()).unwrap();
        assert!((est.value - 0.5).abs() < 0.1, "eta = {}", est.value);
    }

    #[test]
    fn eta_report_flags_tail_dependent_data() {
        let data = factor_example().sample(5_000, 17).unwrap();
        let pit = pit_transform(&data).unwrap();
        let report =
            eta_reports_hat(&pit, &pair_and_single(), &EstimatorConfig::default()).unwrap();
        assert!(report.eta_d > 0.8, "eta_D = {}", report.eta_d);
        assert!(report
            .diagnostics
            .iter()
            .any(|m| m.contains("fragility index")));
        assert_eq!(report.k, Some((5_000f64).sqrt() as usize));
    }

    #[test]
    fn config_defaults_and_validation() {
        let config = EstimatorConfig::default();
        assert_eq!(config.k_lambda(1_000).unwrap(), 100);
        assert_eq!(config.k_hill(10_000).unwrap(), 100);
        let fixed = EstimatorConfig {
            k: Some(50),
            ..EstimatorConfig::default()
        };
        assert_eq!(fixed.k_lambda(100).unwrap(), 50);
        assert_eq!(fixed.k_hill(100).unwrap(), 50);
        let too_big = EstimatorConfig {
            k: Some(100),
            ..EstimatorConfig::default()
        };
        assert!(too_big.k_hill(100).is_err());
    }
}
