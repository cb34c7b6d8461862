//! Parametric dependence models: three max-stable families with closed-form
//! extremal coefficients (logistic, asymmetric logistic, factor-Pareto) and a
//! Gaussian family used as the asymptotic-independence testbed.
//!
//! All max-stable quantities are expressed through the stable tail dependence
//! function l(x) = -log C(e^-x1, ..., e^-xd); extremal coefficients are its
//! values at indicator arguments. The Gaussian family carries no extremal
//! coefficients: requesting them is an error, not a silent fallback.

pub(crate) mod sampler;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::SubsetKey;

/// Tolerance for weight normalization checks; configs further off than this
/// are rejected rather than renormalized.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Serde form of a model, discriminated by `family`.
///
/// Weight matrices are row-major: `beta[k][i]` is factor k's weight on
/// coordinate i, `lambda[i][k]` is coordinate i's weight on factor k,
/// `sigma[i][j]` is the correlation of coordinates i and j.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Logistic {
        d: usize,
        alpha: f64,
    },
    AsymmetricLogistic {
        d: usize,
        alphas: Vec<f64>,
        beta: Vec<Vec<f64>>,
    },
    FactorPareto {
        d: usize,
        alpha: f64,
        lambda: Vec<Vec<f64>>,
    },
    Gaussian {
        d: usize,
        sigma: Vec<Vec<f64>>,
    },
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }
}

/// Symmetric logistic dependence with parameter alpha in (0, 1];
/// alpha = 1 is independence.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    d: usize,
    alpha: f64,
}

impl LogisticModel {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("logistic: d must be positive".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
            return Err(Error::Config(format!(
                "logistic: alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(LogisticModel { d, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Asymmetric logistic dependence: a max-mixture of q logistic factors with
/// parameters alpha_k and nonnegative weights beta[k][i] whose column sums
/// are 1 (unit Frechet margins).
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetricLogisticModel {
    d: usize,
    alphas: Vec<f64>,
    beta: Vec<Vec<f64>>,
}

impl AsymmetricLogisticModel {
    pub fn new(d: usize, alphas: Vec<f64>, beta: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("asymmetric logistic: d must be positive".into()));
        }
        let q = alphas.len();
        if q == 0 {
            return Err(Error::Config(
                "asymmetric logistic: at least one factor required".into(),
            ));
        }
        for (k, &a) in alphas.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 || a > 1.0 {
                return Err(Error::Config(format!(
                    "asymmetric logistic: alphas[{k}] must lie in (0, 1], got {a}"
                )));
            }
        }
        if beta.len() != q {
            return Err(Error::Config(format!(
                "asymmetric logistic: beta has {} rows for {q} factors",
                beta.len()
            )));
        }
        for (k, row) in beta.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Config(format!(
                    "asymmetric logistic: beta row {k} has {} entries, expected {d}",
                    row.len()
                )));
            }
            if let Some(i) = row.iter().position(|b| !b.is_finite() || *b < 0.0) {
                return Err(Error::Config(format!(
                    "asymmetric logistic: beta[{k}][{i}] must be finite and nonnegative"
                )));
            }
        }
        for i in 0..d {
            let col_sum: f64 = beta.iter().map(|row| row[i]).sum();
            if (col_sum - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::Config(format!(
                    "asymmetric logistic: beta column {} sums to {col_sum}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(AsymmetricLogisticModel { d, alphas, beta })
    }
}

/// Linear factor model X_i = sum_k lambda[i][k] Y_k over iid Pareto(alpha)
/// factors, with rows normalized by sum_k lambda[i][k]^alpha = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorParetoModel {
    d: usize,
    m: usize,
    alpha: f64,
    lambda: Vec<Vec<f64>>,
}

impl FactorParetoModel {
    pub fn new(d: usize, alpha: f64, lambda: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("factor model: d must be positive".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Config(format!(
                "factor model: alpha must be positive, got {alpha}"
            )));
        }
        if lambda.len() != d {
            return Err(Error::Config(format!(
                "factor model: lambda has {} rows, expected {d}",
                lambda.len()
            )));
        }
        let m = lambda[0].len();
        if m == 0 {
            return Err(Error::Config(
                "factor model: at least one factor required".into(),
            ));
        }
        for (i, row) in lambda.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Config(format!(
                    "factor model: lambda row {} has {} entries, expected {m}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|l| !l.is_finite() || *l < 0.0) {
                return Err(Error::Config(format!(
                    "factor model: lambda[{}][{}] must be finite and nonnegative",
                    i + 1,
                    k + 1
                )));
            }
            let norm: f64 = row.iter().map(|l| l.powf(alpha)).sum();
            if (norm - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::Config(format!(
                    "factor model: row {} has sum of lambda^alpha = {norm}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(FactorParetoModel { d, m, alpha, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn factor_count(&self) -> usize {
        self.m
    }

    /// Spectral atom weight of coordinate i (1-based) on factor k (1-based):
    /// lambda[i][k]^alpha.
    pub fn atom_weight(&self, i: usize, k: usize) -> f64 {
        self.lambda[i - 1][k - 1].powf(self.alpha)
    }
}

/// Multivariate Gaussian with a positive definite correlation matrix.
/// Asymptotically independent for all off-diagonal correlations below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    d: usize,
    sigma: Vec<Vec<f64>>,
    chol_lower: Vec<Vec<f64>>,
}

impl GaussianModel {
    pub fn new(sigma: Vec<Vec<f64>>) -> Result<Self> {
        let d = sigma.len();
        if d == 0 {
            return Err(Error::Config("gaussian: sigma must be nonempty".into()));
        }
        for (i, row) in sigma.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Config(format!(
                    "gaussian: sigma row {} has {} entries, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "gaussian: sigma[{}][{}] is not finite",
                    i + 1,
                    j + 1
                )));
            }
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..d {
            if (sigma[i][i] - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::Config(format!(
                    "gaussian: sigma must have unit diagonal, sigma[{0}][{0}] = {1}",
                    i + 1,
                    sigma[i][i]
                )));
            }
            for j in 0..i {
                if (sigma[i][j] - sigma[j][i]).abs() > WEIGHT_TOL {
                    return Err(Error::Config(format!(
                        "gaussian: sigma is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let mat = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
        let chol = mat.cholesky().ok_or_else(|| {
            Error::Numeric("gaussian: sigma is not positive definite".into())
        })?;
        let l = chol.l();
        let chol_lower = (0..d)
            .map(|i| (0..d).map(|j| l[(i, j)]).collect())
            .collect();
        Ok(GaussianModel {
            d,
            sigma,
            chol_lower,
        })
    }

    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }
}

/// A dependence model for a d-dimensional vector.
#[derive(Debug, Clone, PartialEq)]
pub enum MevModel {
    Logistic(LogisticModel),
    AsymmetricLogistic(AsymmetricLogisticModel),
    FactorPareto(FactorParetoModel),
    Gaussian(GaussianModel),
}

impl MevModel {
    pub fn from_config(config: ModelConfig) -> Result<Self> {
        match config {
            ModelConfig::Logistic { d, alpha } => {
                Ok(MevModel::Logistic(LogisticModel::new(d, alpha)?))
            }
            ModelConfig::AsymmetricLogistic { d, alphas, beta } => Ok(
                MevModel::AsymmetricLogistic(AsymmetricLogisticModel::new(d, alphas, beta)?),
            ),
            ModelConfig::FactorPareto { d, alpha, lambda } => Ok(MevModel::FactorPareto(
                FactorParetoModel::new(d, alpha, lambda)?,
            )),
            ModelConfig::Gaussian { d, sigma } => {
                if sigma.len() != d {
                    return Err(Error::Config(format!(
                        "gaussian: sigma is {}x{} but d = {d}",
                        sigma.len(),
                        sigma.first().map_or(0, Vec::len)
                    )));
                }
                Ok(MevModel::Gaussian(GaussianModel::new(sigma)?))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_config(ModelConfig::from_json(text)?)
    }

    pub fn dimension(&self) -> usize {
        match self {
            MevModel::Logistic(m) => m.d,
            MevModel::AsymmetricLogistic(m) => m.d,
            MevModel::FactorPareto(m) => m.d,
            MevModel::Gaussian(m) => m.d,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            MevModel::Logistic(_) => "logistic",
            MevModel::AsymmetricLogistic(_) => "asymmetric_logistic",
            MevModel::FactorPareto(_) => "factor_pareto",
            MevModel::Gaussian(_) => "gaussian",
        }
    }

    /// Whether the family is max-stable with closed-form extremal
    /// coefficients (false only for the Gaussian testbed).
    pub fn is_max_stable(&self) -> bool {
        !matches!(self, MevModel::Gaussian(_))
    }

    fn check_key(&self, a: &SubsetKey) -> Result<()> {
        let d = self.dimension();
        let max = *a.indices().last().expect("keys are nonempty");
        if max > d {
            return Err(Error::InvalidArgument(format!(
                "subset {a} references coordinate {max}, model dimension is {d}"
            )));
        }
        Ok(())
    }

    /// Extremal coefficient eps_A = l(indicator of A).
    pub fn extremal_coefficient(&self, a: &SubsetKey) -> Result<f64> {
        self.check_key(a)?;
        match self {
            MevModel::Logistic(m) => Ok((a.len() as f64).powf(m.alpha)),
            MevModel::AsymmetricLogistic(m) => Ok(m
                .alphas
                .iter()
                .zip(&m.beta)
                .map(|(&alpha_k, row)| {
                    a.indices()
                        .iter()
                        .map(|&i| row[i - 1].powf(1.0 / alpha_k))
                        .sum::<f64>()
                        .powf(alpha_k)
                })
                .sum()),
            MevModel::FactorPareto(m) => Ok((1..=m.m)
                .map(|k| {
                    a.indices()
                        .iter()
                        .map(|&i| m.atom_weight(i, k))
                        .fold(0.0, f64::max)
                })
                .sum()),
            MevModel::Gaussian(_) => Err(Error::Unsupported(
                "extremal coefficients are undefined for the gaussian family \
                 (asymptotically independent); use eta_gaussian for its residual \
                 dependence index"
                    .into(),
            )),
        }
    }

    /// Stable tail dependence function l(x) = -log C(e^-x1, ..., e^-xd)
    /// for nonnegative x; homogeneous of degree 1.
    pub fn stable_tail_dependence(&self, x: &[f64]) -> Result<f64> {
        let d = self.dimension();
        if x.len() != d {
            return Err(Error::InvalidArgument(format!(
                "argument has {} entries, model dimension is {d}",
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "x[{}] must be finite and nonnegative",
                i + 1
            )));
        }
        match self {
            MevModel::Logistic(m) => Ok(x
                .iter()
                .map(|v| v.powf(1.0 / m.alpha))
                .sum::<f64>()
                .powf(m.alpha)),
            MevModel::AsymmetricLogistic(m) => Ok(m
                .alphas
                .iter()
                .zip(&m.beta)
                .map(|(&alpha_k, row)| {
                    row.iter()
                        .zip(x)
                        .map(|(&b, &v)| (b * v).powf(1.0 / alpha_k))
                        .sum::<f64>()
                        .powf(alpha_k)
                })
                .sum()),
            MevModel::FactorPareto(m) => Ok((1..=m.m)
                .map(|k| {
                    x.iter()
                        .enumerate()
                        .map(|(i0, &v)| m.atom_weight(i0 + 1, k) * v)
                        .fold(0.0, f64::max)
                })
                .sum()),
            MevModel::Gaussian(_) => Err(Error::Unsupported(
                "the stable tail dependence function degenerates for the gaussian \
                 family; use eta_gaussian"
                    .into(),
            )),
        }
    }

    /// Copula value C(u) = exp(-l(-log u)). A zero component yields the
    /// limit value 0; components above 1 or below 0 are rejected.
    pub fn copula_value(&self, u: &[f64]) -> Result<f64> {
        let d = self.dimension();
        if u.len() != d {
            return Err(Error::InvalidArgument(format!(
                "argument has {} entries, model dimension is {d}",
                u.len()
            )));
        }
        if let Some(i) = u.iter().position(|v| !(*v >= 0.0 && *v <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "u[{}] must lie in [0, 1]",
                i + 1
            )));
        }
        if u.contains(&0.0) {
            return Ok(0.0);
        }
        let x: Vec<f64> = u.iter().map(|&v| -v.ln()).collect();
        Ok((-self.stable_tail_dependence(&x)?).exp())
    }

    /// Draws n rows from the model with columns labeled X1..Xd. The same
    /// (model, n, seed) triple always produces the same dataset.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be positive".into()));
        }
        let d = self.dimension();
        let mut rng = sampler::rng_for_seed(seed);
        let mut rows = Vec::with_capacity(n);
        match self {
            MevModel::Logistic(m) => {
                let mut row = vec![0.0; d];
                for _ in 0..n {
                    sampler::fill_logistic_row(m.alpha, &mut rng, &mut row);
                    rows.push(row.clone());
                }
            }
            MevModel::AsymmetricLogistic(m) => {
                let mut factor_row = vec![0.0; d];
                for _ in 0..n {
                    let mut row: Vec<f64> = vec![0.0; d];
                    for (alpha_k, beta_row) in m.alphas.iter().zip(&m.beta) {
                        sampler::fill_logistic_row(*alpha_k, &mut rng, &mut factor_row);
                        for i in 0..d {
                            row[i] = row[i].max(beta_row[i] * factor_row[i]);
                        }
                    }
                    rows.push(row);
                }
            }
            MevModel::FactorPareto(m) => {
                let mut factors = vec![0.0; m.m];
                for _ in 0..n {
                    for y in factors.iter_mut() {
                        *y = sampler::pareto(m.alpha, &mut rng);
                    }
                    rows.push(
                        m.lambda
                            .iter()
                            .map(|row| row.iter().zip(&factors).map(|(l, y)| l * y).sum())
                            .collect(),
                    );
                }
            }
            MevModel::Gaussian(m) => {
                let mut z = vec![0.0; d];
                for _ in 0..n {
                    sampler::fill_std_normal(&mut rng, &mut z);
                    rows.push(
                        m.chol_lower
                            .iter()
                            .enumerate()
                            .map(|(i, l_row)| {
                                l_row[..=i].iter().zip(&z).map(|(l, zj)| l * zj).sum()
                            })
                            .collect(),
                    );
                }
            }
        }
        let labels = (1..=d).map(|i| format!("X{i}")).collect();
        Dataset::new(labels, rows, None)
    }
}
