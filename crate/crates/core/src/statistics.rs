//! Named statistics on top of the engine: moments of the sample Gini
//! coefficient, the sample squared coefficient of variation and the Theil
//! index, plus the Gamma closed forms.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::{DistributionSpec, PopulationStat};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_semi_infinite, QuadratureConfig};
use crate::ratio::{expected_ratio_iid, CustomTilted, MomentResult, RatioStatistic, TKernel, TiltedComponent};

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Config(format!("pairwise statistics need n >= 2, got {n}")));
    }
    Ok(())
}

fn ratio_or_none(expected: f64, population: f64) -> Option<f64> {
    (population > 0.0).then(|| expected / population)
}

/// First moment of the sample Gini coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniExpectation {
    pub expected: f64,
    /// `E G_hat / G`; absent when `G = 0`.
    pub ratio_r: Option<f64>,
    pub population_g: f64,
    pub moment: MomentResult,
}

pub fn gini_expectation(dist: &DistributionSpec, n: usize, r: f64, config: &QuadratureConfig) -> Result<GiniExpectation> {
    check_n(n)?;
    let moment = expected_ratio_iid(dist, n, &RatioStatistic::gini(n, r)?, config)?;
    let population_g = population_or_zero(dist, PopulationStat::Gini)?;
    Ok(GiniExpectation {
        expected: moment.value,
        ratio_r: ratio_or_none(moment.value, population_g),
        population_g,
        moment,
    })
}

fn population_or_zero(dist: &DistributionSpec, stat: PopulationStat) -> Result<f64> {
    if dist.mean() == 0.0 {
        // a law concentrated at 0: every sample falls back to r
        return Ok(0.0);
    }
    dist.population_stat(stat)
}

/// First and second moments of the sample Gini coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniMomentReport {
    pub expected: f64,
    pub ratio_r: Option<f64>,
    pub second_moment: f64,
    pub variance: f64,
    pub population_g: f64,
    pub first: MomentResult,
    pub second: MomentResult,
}

/// `E G_hat^2` and `Var G_hat`. The fallback for `G_hat^2` is `r^2`.
pub fn gini_second_moment(dist: &DistributionSpec, n: usize, r: f64, config: &QuadratureConfig) -> Result<GiniMomentReport> {
    check_n(n)?;
    if !dist.variance().is_finite() {
        return Err(Error::Capability(format!(
            "second moment of the sample Gini needs xi2 = 2 Var(X) finite; {dist} has infinite variance"
        )));
    }
    let first = gini_expectation(dist, n, r, config)?;
    let second = expected_ratio_iid(dist, n, &RatioStatistic::gini_squared(n, r)?, config)?;
    Ok(GiniMomentReport {
        expected: first.expected,
        ratio_r: first.ratio_r,
        second_moment: second.value,
        variance: second.value - first.expected * first.expected,
        population_g: first.population_g,
        first: first.moment,
        second,
    })
}

/// Expectation of the sample squared coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScvMomentReport {
    pub expected: f64,
    pub ratio_rv: Option<f64>,
    pub population_cv2: f64,
    pub moment: MomentResult,
}

pub fn scv_expectation(dist: &DistributionSpec, n: usize, r: f64, config: &QuadratureConfig) -> Result<ScvMomentReport> {
    check_n(n)?;
    if !dist.variance().is_finite() {
        return Err(Error::Capability(format!("squared coefficient of variation needs a finite variance; {dist} has none")));
    }
    let moment = expected_ratio_iid(dist, n, &RatioStatistic::scv(n, r)?, config)?;
    let population_cv2 = population_or_zero(dist, PopulationStat::Scv)?;
    Ok(ScvMomentReport {
        expected: moment.value,
        ratio_rv: ratio_or_none(moment.value, population_cv2),
        population_cv2,
        moment,
    })
}

/// Quasi-random inner sampling used for the Theil index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheilConfig {
    pub points: usize,
    pub shifts: usize,
    pub seed: u64,
}

impl Default for TheilConfig {
    fn default() -> Self {
        Self { points: 4096, shifts: 8, seed: 0x7e11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheilReport {
    pub expected: f64,
    /// Spread of the randomly shifted lattice estimates.
    pub std_error: f64,
    pub population_theil: f64,
    pub quadrature_error: f64,
}

/// Sample Theil index `(1/n) sum (X_i / mean) ln(X_i / mean)` with the
/// convention `0 ln 0 = 0`, and `r` for the all-zero sample.
pub fn sample_theil_value(xs: &[f64], r: f64) -> f64 {
    let s: f64 = xs.iter().sum();
    if s == 0.0 {
        return r;
    }
    theil_numerator(xs, s) / s
}

fn theil_numerator(xs: &[f64], s: f64) -> f64 {
    let n = xs.len() as f64;
    xs.iter().filter(|&&x| x > 0.0).map(|&x| x * (n * x / s).ln()).sum()
}

/// Generator of the `d`-dimensional Kronecker lattice: powers of the inverse
/// of the unique positive root of `x^(d+1) = x + 1`.
fn kronecker_generator(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|k| phi.powi(-(k as i32)).fract()).collect()
}

/// Draws of `n` base observations on shifted lattice points, one block per
/// shift.
fn lattice_draws(dist: &DistributionSpec, n: usize, qc: &TheilConfig) -> Result<Vec<Vec<Vec<f64>>>> {
    let law = dist.tilt(0.0)?.law()?;
    let g = kronecker_generator(n);
    let mut rng = ChaCha8Rng::seed_from_u64(qc.seed);
    let mut blocks = Vec::with_capacity(qc.shifts);
    for _ in 0..qc.shifts {
        let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut block = Vec::with_capacity(qc.points);
        for k in 0..qc.points {
            let mut xs = Vec::with_capacity(n);
            for d in 0..n {
                let u = (shift[d] + (k as f64 + 0.5) * g[d]).fract();
                xs.push(law.quantile(u)?);
            }
            block.push(xs);
        }
        blocks.push(block);
    }
    Ok(blocks)
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (m, (var / v.len() as f64).sqrt())
}

/// Expected sample Theil index. The numerator `sum X_i ln(n X_i / S)`
/// depends on `S`, so the tilted expectation is estimated on fixed lattice
/// draws: for laws whose tilt is a rescaling it is `s(lambda) E[T]`,
/// otherwise the base draws are reweighted by `exp(-lambda S)`.
pub fn theil_expectation(
    dist: &DistributionSpec,
    n: usize,
    r: f64,
    config: &QuadratureConfig,
    qmc: &TheilConfig,
) -> Result<TheilReport> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    if qmc.points == 0 || qmc.shifts == 0 {
        return Err(Error::Config("lattice needs at least one point and one shift".into()));
    }
    let population_theil = population_or_zero(dist, PopulationStat::Theil)?;
    let atom = r * dist.zero_mass().powi(n as i32);
    if n == 1 {
        return Ok(TheilReport { expected: atom, std_error: 0.0, population_theil, quadrature_error: 0.0 });
    }
    let blocks = lattice_draws(dist, n, qmc)?;
    let mut estimates = Vec::with_capacity(blocks.len());
    let mut quad_err: f64 = 0.0;
    if dist.scale_factor(1.0).is_some() {
        // E_lambda[T] = s(lambda) E_0[T] because T is homogeneous of degree one
        let ln_n = n as f64;
        let scaled = integrate_semi_infinite(
            |lambda| {
                let s = dist.scale_factor(lambda).unwrap_or(0.0);
                (ln_n * dist.ln_laplace(lambda).unwrap_or(f64::NEG_INFINITY)).exp() * s
            },
            config,
        )?;
        quad_err = scaled.error_estimate;
        for block in &blocks {
            let t0 = block.iter().map(|xs| theil_numerator(xs, xs.iter().sum())).sum::<f64>() / block.len() as f64;
            estimates.push(t0 * scaled.value + atom);
        }
    } else {
        for block in blocks {
            let pairs: Arc<Vec<(f64, f64)>> = Arc::new(
                block
                    .iter()
                    .map(|xs| {
                        let s: f64 = xs.iter().sum();
                        (theil_numerator(xs, s), s)
                    })
                    .filter(|(t, _)| *t != 0.0)
                    .collect(),
            );
            let count = block.len() as f64;
            let tilted: CustomTilted = Arc::new(move |comps: &[TiltedComponent<'_>]| {
                let lambda = comps[0].view.lambda;
                let ln_ln: f64 = comps.iter().map(|c| c.multiplicity as f64 * c.law.ln_laplace()).sum();
                let acc: f64 = pairs.iter().map(|(t, s)| t * (-lambda * s - ln_ln).exp()).sum();
                Ok(acc / count)
            });
            let stat = RatioStatistic::new(TKernel::Custom { tilted, sample: None }, 1.0, r)?;
            let m = expected_ratio_iid(dist, n, &stat, config)?;
            quad_err = quad_err.max(m.quadrature_error);
            estimates.push(m.value);
        }
    }
    let (expected, std_error) = mean_and_se(&estimates);
    Ok(TheilReport { expected, std_error, population_theil, quadrature_error: quad_err })
}

/// Population Gini coefficient of Gamma(shape, scale):
/// `Gamma(a + 1/2) / (sqrt(pi) Gamma(a + 1))`.
pub fn gamma_gini(shape: f64) -> f64 {
    (ln_gamma(shape + 0.5) - ln_gamma(shape + 1.0)).exp() / PI.sqrt()
}

/// `Gamma(a + 1/2)^2 / (pi Gamma(a)^2)`, a quarter of the squared mean
/// difference of Gamma(a, 1).
fn gamma_half_gmd_sq(shape: f64) -> f64 {
    (2.0 * (ln_gamma(shape + 0.5) - ln_gamma(shape))).exp() / PI
}

fn check_gamma_args(shape: f64, n: usize) -> Result<()> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::Domain(format!("gamma shape must be positive, got {shape}")));
    }
    check_n(n)
}

/// `E G_hat^2` for Gamma(shape, scale) samples, given `xi1` of Gamma(shape, 1).
pub fn gamma_gini_second_moment_closed_form(shape: f64, n: usize, xi1: f64) -> Result<f64> {
    check_gamma_args(shape, n)?;
    let (a, n) = (shape, n as f64);
    let d = (n - 1.0) * (a * n + 1.0);
    Ok(1.0 / d + (n - 2.0) * xi1 / (a * d) + (n - 2.0) * (n - 3.0) * gamma_half_gmd_sq(a) / (a * d))
}

/// `Var G_hat` for Gamma(shape, scale) samples, given `xi1` of Gamma(shape, 1).
pub fn gamma_gini_variance_closed_form(shape: f64, n: usize, xi1: f64) -> Result<f64> {
    check_gamma_args(shape, n)?;
    let (a, n) = (shape, n as f64);
    let d = (n - 1.0) * (a * n + 1.0);
    Ok(1.0 / d + (n - 2.0) * xi1 / (a * d) - ((1.0 + 4.0 * a) * n - (6.0 * a + 1.0)) / d * gamma_half_gmd_sq(a) / (a * a))
}

/// `E c_hat^2 = n / (a n + 1)` for Gamma(shape, scale) samples.
pub fn gamma_scv_expectation(shape: f64, n: usize) -> Result<f64> {
    check_gamma_args(shape, n)?;
    let n = n as f64;
    Ok(n / (shape * n + 1.0))
}

/// `xi1 = E|X1 - X2||X1 - X3|` of Gamma(shape, 1), computed once per shape.
pub fn gamma_unit_xi1(shape: f64) -> Result<f64> {
    DistributionSpec::gamma(shape, 1.0)?.tilt(0.0)?.law()?.xi1()
}
