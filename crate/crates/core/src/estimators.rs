//! Sample-side statistics, Pareto fits and bias-corrected Gini estimators.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature::QuadratureConfig;
use crate::ratio::pairwise_abs_sum;
use crate::statistics::{gini_expectation, sample_theil_value};

/// A finite sample of non-negative observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleData {
    values: Vec<f64>,
}

impl SampleData {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("sample must contain at least one value".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("observations must be finite and non-negative, got {bad}")));
        }
        Ok(Self { values })
    }

    /// One value per line. Blank lines are skipped, as is a first line that
    /// is not a number (a column header).
    pub fn from_lines(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let field = line.split(',').next().unwrap_or("").trim();
            if field.is_empty() {
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if i == 0 => {}
                Err(e) => {
                    return Err(Error::Parse { input: field.to_string(), reason: format!("line {}: {e}", i + 1) })
                }
            }
        }
        Self::new(values)
    }

    /// Values separated by commas or whitespace, e.g. `1,2.5,3`.
    pub fn from_list(text: &str) -> Result<Self> {
        let values = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse { input: s.to_string(), reason: e.to_string() }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    fn mean(&self) -> f64 {
        self.sum() / self.n() as f64
    }
}

fn need_two(data: &SampleData) -> Result<()> {
    if data.n() < 2 {
        return Err(Error::Config(format!("statistic needs at least two observations, got {}", data.n())));
    }
    Ok(())
}

/// `sum_{i != j} |X_i - X_j| / (2 (n-1) S)`, or `r` for an all-zero sample.
pub fn sample_gini(data: &SampleData, r: f64) -> Result<f64> {
    need_two(data)?;
    let s = data.sum();
    if s == 0.0 {
        return Ok(r);
    }
    Ok(pairwise_abs_sum(data.values()) / (2.0 * (data.n() - 1) as f64 * s))
}

/// Unbiased sample variance over the squared sample mean, or `r` for an
/// all-zero sample.
pub fn sample_scv(data: &SampleData, r: f64) -> Result<f64> {
    need_two(data)?;
    let mean = data.mean();
    if mean == 0.0 {
        return Ok(r);
    }
    let ss: f64 = data.values().iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(ss / (data.n() - 1) as f64 / (mean * mean))
}

pub fn sample_theil(data: &SampleData, r: f64) -> Result<f64> {
    Ok(sample_theil_value(data.values(), r))
}

/// Fitted values at or below 1 are replaced by this, so the fitted Pareto law
/// keeps a finite mean.
pub const ALPHA_FLOOR: f64 = 1.0 + 1e-6;

/// A Pareto shape estimate with the scale fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoFit {
    /// The formula value.
    pub raw: f64,
    /// `raw`, or [`ALPHA_FLOOR`] when `raw <= 1`.
    pub alpha: f64,
    pub clamped: bool,
}

impl ParetoFit {
    fn from_raw(raw: f64) -> Self {
        if raw > 1.0 && raw.is_finite() {
            Self { raw, alpha: raw, clamped: false }
        } else {
            Self { raw, alpha: ALPHA_FLOOR, clamped: true }
        }
    }
}

/// Maximum likelihood: `n / sum ln X_i`.
pub fn pareto_fit_mle(data: &SampleData) -> Result<ParetoFit> {
    if let Some(x) = data.values().iter().find(|&&x| x < 1.0) {
        return Err(Error::Domain(format!("Pareto(alpha, 1) data must be at least 1, got {x}")));
    }
    let ln_sum: f64 = data.values().iter().map(|x| x.ln()).sum();
    if ln_sum == 0.0 {
        return Err(Error::Degenerate("all observations equal 1; the likelihood has no maximum".into()));
    }
    Ok(ParetoFit::from_raw(data.n() as f64 / ln_sum))
}

/// Method of moments: `mean / (mean - 1)`.
pub fn pareto_fit_mom(data: &SampleData) -> Result<ParetoFit> {
    let mean = data.mean();
    if mean <= 1.0 + 1e-9 {
        return Err(Error::Domain(format!("method of moments needs a sample mean above 1, got {mean}")));
    }
    Ok(ParetoFit::from_raw(mean / (mean - 1.0)))
}

/// `E G_hat - G` for `n` draws from `dist`.
pub fn bias_function(dist: &DistributionSpec, n: usize, config: &QuadratureConfig) -> Result<f64> {
    let g = gini_expectation(dist, n, 0.0, config)?;
    if !g.moment.converged {
        return Err(Error::Refused(format!("quadrature did not converge for {dist}, n = {n}")));
    }
    Ok(g.expected - g.population_g)
}

/// Bias of the sample Gini under Pareto(alpha, 1).
pub trait BiasSource: Sync {
    fn bias(&self, alpha: f64, n: usize) -> Result<f64>;
}

/// Direct engine evaluation at every query.
#[derive(Debug, Clone, Copy, Default)]
pub struct EngineBias {
    pub config: QuadratureConfig,
}

impl BiasSource for EngineBias {
    fn bias(&self, alpha: f64, n: usize) -> Result<f64> {
        bias_function(&DistributionSpec::pareto(alpha, 1.0)?, n, &self.config)
    }
}

/// Pareto bias tabulated on a logarithmic shape grid for one `n`, with
/// monotone cubic interpolation in `ln alpha`. Queries outside the grid use
/// the nearest end value.
#[derive(Debug, Clone)]
pub struct ParetoBiasTable {
    n: usize,
    curve: MonotoneCubic,
}

impl ParetoBiasTable {
    pub const NODES: usize = 64;
    pub const ALPHA_MIN: f64 = 1.01;
    pub const ALPHA_MAX: f64 = 50.0;

    pub fn build(n: usize, config: &QuadratureConfig) -> Result<Self> {
        Self::build_with(n, Self::NODES, Self::ALPHA_MIN, Self::ALPHA_MAX, config)
    }

    pub fn build_with(n: usize, nodes: usize, lo: f64, hi: f64, config: &QuadratureConfig) -> Result<Self> {
        if nodes < 2 || !(lo > 1.0 && hi > lo) {
            return Err(Error::Config(format!("bias grid needs at least two nodes in (1, inf), got {nodes} on [{lo}, {hi}]")));
        }
        let step = (hi / lo).ln() / (nodes - 1) as f64;
        let ln_alpha: Vec<f64> = (0..nodes).map(|i| lo.ln() + step * i as f64).collect();
        let bias: Vec<f64> = ln_alpha
            .par_iter()
            .map(|&la| EngineBias { config: *config }.bias(la.exp(), n))
            .collect::<Result<_>>()?;
        Ok(Self { n, curve: MonotoneCubic::new(ln_alpha, bias)? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, y) = self.curve.knots();
        (x.iter().map(|v| v.exp()).collect(), y.to_vec())
    }
}

impl BiasSource for ParetoBiasTable {
    fn bias(&self, alpha: f64, n: usize) -> Result<f64> {
        if n != self.n {
            return Err(Error::Config(format!("bias table was built for n = {}, queried at n = {n}", self.n)));
        }
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("shape must be positive, got {alpha}")));
        }
        Ok(self.curve.eval(alpha.ln()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    Plain,
    MleDebiased,
    MomDebiased,
    MlePlugin,
    MomPlugin,
}

impl EstimatorMethod {
    pub const ALL: [EstimatorMethod; 5] =
        [Self::Plain, Self::MleDebiased, Self::MomDebiased, Self::MlePlugin, Self::MomPlugin];

    pub fn name(self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::MleDebiased => "mle_debiased",
            Self::MomDebiased => "mom_debiased",
            Self::MlePlugin => "mle_plugin",
            Self::MomPlugin => "mom_plugin",
        }
    }
}

impl fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::Parse { input: s.to_string(), reason: "unknown estimator method".into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub method: EstimatorMethod,
    pub value: f64,
    /// Fitted Pareto shape for the model-based methods.
    pub fitted_param: Option<f64>,
    pub clamped: bool,
}

/// Population Gini of Pareto(alpha, x_m): `1 / (2 alpha - 1)`.
pub fn pareto_gini(alpha: f64) -> f64 {
    1.0 / (2.0 * alpha - 1.0)
}

/// Gini estimate of `data` by `method`; the debiased variants subtract
/// `bias.bias(alpha_hat, n)` from the sample Gini.
pub fn debiased_gini(data: &SampleData, method: EstimatorMethod, bias: &dyn BiasSource) -> Result<EstimatorResult> {
    let tag = |e: Error| match e {
        Error::Domain(m) => Error::Domain(format!("{method}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{method}: {m}")),
        other => other,
    };
    let fit = match method {
        EstimatorMethod::Plain => None,
        EstimatorMethod::MleDebiased | EstimatorMethod::MlePlugin => Some(pareto_fit_mle(data).map_err(tag)?),
        EstimatorMethod::MomDebiased | EstimatorMethod::MomPlugin => Some(pareto_fit_mom(data).map_err(tag)?),
    };
    let value = match (method, fit) {
        (EstimatorMethod::MlePlugin | EstimatorMethod::MomPlugin, Some(f)) => pareto_gini(f.alpha),
        (EstimatorMethod::MleDebiased | EstimatorMethod::MomDebiased, Some(f)) => {
            sample_gini(data, 0.0)? - bias.bias(f.alpha, data.n())?
        }
        _ => sample_gini(data, 0.0)?,
    };
    Ok(EstimatorResult {
        method,
        value,
        fitted_param: fit.map(|f| f.alpha),
        clamped: fit.is_some_and(|f| f.clamped),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn data(v: &[f64]) -> SampleData {
        SampleData::new(v.to_vec()).unwrap()
    }

    #[test]
    fn parses_lines_and_lists() {
        assert_eq!(SampleData::from_lines("x\n1\n\n2.5\n3e0\n").unwrap(), data(&[1.0, 2.5, 3.0]));
        assert_eq!(SampleData::from_lines("1,ignored\n2\n").unwrap(), data(&[1.0, 2.0]));
        assert!(SampleData::from_lines("1\nabc\n").is_err());
        assert!(SampleData::from_lines("header\n").is_err());
        assert_eq!(SampleData::from_list("1, 2 3").unwrap(), data(&[1.0, 2.0, 3.0]));
        assert!(SampleData::from_list("1,-2").is_err());
    }

    struct Fixed(f64);
    impl BiasSource for Fixed {
        fn bias(&self, _: f64, _: usize) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn sample_gini_examples() {
        assert_eq!(sample_gini(&data(&[1.0, 1.0, 1.0, 1.0]), 0.0).unwrap(), 0.0);
        assert_eq!(sample_gini(&data(&[0.0, 1.0]), 0.0).unwrap(), 1.0);
        assert_eq!(sample_gini(&data(&[0.0, 0.0, 0.0]), 0.7).unwrap(), 0.7);
        assert!(matches!(sample_gini(&data(&[3.0]), 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn sample_scv_examples() {
        assert_eq!(sample_scv(&data(&[2.0, 2.0, 2.0]), 0.0).unwrap(), 0.0);
        assert_eq!(sample_scv(&data(&[0.0, 2.0]), 0.0).unwrap(), 2.0);
        assert_eq!(sample_scv(&data(&[0.0, 0.0]), 5.0).unwrap(), 5.0);
    }

    #[test]
    fn sample_data_validation() {
        assert!(SampleData::new(vec![]).is_err());
        assert!(SampleData::new(vec![1.0, -0.5]).is_err());
        assert!(SampleData::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn mle_examples() {
        let f = pareto_fit_mle(&data(&[E, E, E, E])).unwrap();
        assert!((f.raw - 1.0).abs() < 1e-15);
        let f = pareto_fit_mle(&data(&[E * E, E * E])).unwrap();
        assert!((f.raw - 0.5).abs() < 1e-15);
        assert!(f.clamped && f.alpha == ALPHA_FLOOR);
        assert!(matches!(pareto_fit_mle(&data(&[0.5, 2.0])), Err(Error::Domain(_))));
        assert!(matches!(pareto_fit_mle(&data(&[1.0, 1.0])), Err(Error::Degenerate(_))));
        let d = DistributionSpec::pareto(2.0, 1.0).unwrap().sample(10_000, 3).unwrap();
        let f = pareto_fit_mle(&d).unwrap();
        assert!((f.alpha - 2.0).abs() < 4.0 * 2.0 / 100.0, "{f:?}");
    }

    #[test]
    fn mom_examples() {
        assert!((pareto_fit_mom(&data(&[1.0, 3.0])).unwrap().alpha - 2.0).abs() < 1e-15);
        assert!((pareto_fit_mom(&data(&[1.0, 2.0])).unwrap().alpha - 3.0).abs() < 1e-15);
        assert!(matches!(pareto_fit_mom(&data(&[1.0, 1.0 + 1e-12])), Err(Error::Domain(_))));
    }

    #[test]
    fn estimator_methods() {
        let d = data(&[1.0, 3.0]);
        let plain = debiased_gini(&d, EstimatorMethod::Plain, &Fixed(0.1)).unwrap();
        assert_eq!(plain.value, sample_gini(&d, 0.0).unwrap());
        assert_eq!(plain.fitted_param, None);
        let plug = debiased_gini(&d, EstimatorMethod::MomPlugin, &Fixed(0.1)).unwrap();
        assert!((plug.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(plug.fitted_param, Some(2.0));
        let deb = debiased_gini(&d, EstimatorMethod::MomDebiased, &Fixed(-0.05)).unwrap();
        assert!((deb.value - (plain.value + 0.05)).abs() < 1e-15);
        let err = debiased_gini(&data(&[0.5, 0.7]), EstimatorMethod::MleDebiased, &Fixed(0.0)).unwrap_err();
        assert!(err.to_string().contains("mle_debiased"), "{err}");
        for m in EstimatorMethod::ALL {
            assert_eq!(m.to_string().parse::<EstimatorMethod>().unwrap(), m);
        }
    }

    #[test]
    fn gamma_bias_is_zero_so_debiasing_is_identity() {
        let b = bias_function(&DistributionSpec::gamma(1.5, 1.0).unwrap(), 7, &QuadratureConfig::default()).unwrap();
        assert!(b.abs() < 1e-10);
    }

    #[test]
    fn pareto_bias_is_negative_and_shrinks_with_alpha() {
        let cfg = QuadratureConfig::default();
        let at2 = bias_function(&DistributionSpec::pareto(2.0, 1.0).unwrap(), 20, &cfg).unwrap();
        let at50 = bias_function(&DistributionSpec::pareto(50.0, 1.0).unwrap(), 20, &cfg).unwrap();
        assert!(at2 < 0.0 && at50.abs() < at2.abs(), "{at2} {at50}");
    }

    #[test]
    fn bias_table_interpolates_engine_values() {
        let cfg = QuadratureConfig::default();
        let table = ParetoBiasTable::build_with(5, 12, 1.2, 6.0, &cfg).unwrap();
        let (alphas, biases) = table.nodes();
        assert_eq!(alphas.len(), 12);
        assert!((table.bias(alphas[3], 5).unwrap() - biases[3]).abs() < 1e-15);
        let mid = (alphas[4] * alphas[5]).sqrt();
        let direct = EngineBias { config: cfg }.bias(mid, 5).unwrap();
        assert!((table.bias(mid, 5).unwrap() - direct).abs() < 1e-3 * direct.abs(), "{direct}");
        assert!(table.bias(2.0, 6).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance(xs in prop::collection::vec(0.0f64..50.0, 2..60), c in 0.01f64..100.0) {
            let a = data(&xs);
            let b = data(&xs.iter().map(|x| x * c).collect::<Vec<_>>());
            let (ga, gb) = (sample_gini(&a, 0.0).unwrap(), sample_gini(&b, 0.0).unwrap());
            prop_assert!((ga - gb).abs() <= 1e-12 * ga.max(1.0));
            let (sa, sb) = (sample_scv(&a, 0.0).unwrap(), sample_scv(&b, 0.0).unwrap());
            prop_assert!((sa - sb).abs() <= 1e-10 * sa.max(1.0));
        }

        #[test]
        fn gini_bounds(xs in prop::collection::vec(0.0f64..50.0, 2..60)) {
            let n = xs.len() as f64;
            let g = sample_gini(&data(&xs), 0.0).unwrap();
            prop_assert!(g >= 0.0 && g <= n / (n - 1.0));
            // the n(n-1) normalization never exceeds one on non-negative data
            prop_assert!(g <= 1.0 + 1e-12);
        }
    }
}
