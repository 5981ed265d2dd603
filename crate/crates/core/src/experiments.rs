//! Parameter sweeps: expected-value and variance curves over a parameter
//! grid, and the replication experiment comparing Gini estimators on Pareto
//! samples.
//!
//! Failures at a grid point are recorded in the row, never raised, so a sweep
//! always returns one row per point in grid order.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Family, PopulationStat};
use crate::error::{Error, Result};
use crate::estimators::{debiased_gini, pareto_gini, BiasSource, EstimatorMethod, ParetoBiasTable, SampleData};
use crate::oracle::{Moments, CHUNK};
use crate::quadrature::QuadratureConfig;
use crate::statistics::{gini_expectation, gini_second_moment, scv_expectation, theil_expectation, TheilConfig};

/// An inclusive arithmetic grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("grid needs finite bounds and a positive step, got {start}:{stop}:{step}")));
        }
        if stop < start {
            return Err(Error::Config(format!("grid is empty: {stop} < {start}")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let v = self.start + self.step * i as f64;
                // strip accumulated representation noise, e.g. 1.1 + 3 * 0.1
                (v * 1e12).round() / 1e12
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |reason: &str| Error::Parse { input: s.to_string(), reason: reason.to_string() };
        let parts: Vec<&str> = s.split(':').collect();
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| parse_err("grid values must be numbers")))
            .collect::<Result<_>>()?;
        match nums.as_slice() {
            [v] => Self::new(*v, *v, 1.0),
            [a, b, step] => Self::new(*a, *b, *step),
            _ => Err(parse_err("expected START:STOP:STEP")),
        }
    }
}

/// One `(parameter, n)` point of an expected-value curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub family: String,
    pub param: f64,
    pub n: usize,
    pub stat: PopulationStat,
    pub population_value: f64,
    pub expected_value: f64,
    /// Expected over population value; NaN when the population value is 0.
    pub ratio: f64,
    pub quad_error: f64,
    pub converged: bool,
    /// Inner sampling error (Theil only, else 0).
    pub std_error: f64,
    /// Error message when the point could not be evaluated.
    pub note: String,
}

fn failed_row(family: &str, param: f64, n: usize, stat: PopulationStat, e: &Error) -> CurveRow {
    CurveRow {
        family: family.to_string(),
        param,
        n,
        stat,
        population_value: f64::NAN,
        expected_value: f64::NAN,
        ratio: f64::NAN,
        quad_error: f64::NAN,
        converged: false,
        std_error: f64::NAN,
        note: e.to_string(),
    }
}

fn curve_point(
    base: &DistributionSpec,
    param: f64,
    n: usize,
    stat: PopulationStat,
    r: f64,
    config: &QuadratureConfig,
    theil: &TheilConfig,
) -> Result<CurveRow> {
    let dist = base.with_primary_param(param)?;
    let family = dist.family_name().to_string();
    let (population_value, expected_value, quad_error, converged, std_error) = match stat {
        PopulationStat::Gini => {
            let g = gini_expectation(&dist, n, r, config)?;
            (g.population_g, g.expected, g.moment.quadrature_error, g.moment.converged, 0.0)
        }
        PopulationStat::Scv => {
            let s = scv_expectation(&dist, n, r, config)?;
            (s.population_cv2, s.expected, s.moment.quadrature_error, s.moment.converged, 0.0)
        }
        PopulationStat::Theil => {
            let t = theil_expectation(&dist, n, r, config, theil)?;
            (t.population_theil, t.expected, t.quadrature_error, true, t.std_error)
        }
    };
    let ratio = if population_value > 0.0 { expected_value / population_value } else { f64::NAN };
    Ok(CurveRow {
        family,
        param,
        n,
        stat,
        population_value,
        expected_value,
        ratio,
        quad_error,
        converged,
        std_error,
        note: String::new(),
    })
}

/// `E stat_hat` and the ratio to the population value over
/// `params x ns`, with `params` replacing the primary parameter of `base`.
/// Rows are ordered by `n`, then parameter.
pub fn expected_curve(
    base: &DistributionSpec,
    stat: PopulationStat,
    params: &[f64],
    ns: &[usize],
    r: f64,
    config: &QuadratureConfig,
    theil: &TheilConfig,
) -> Vec<CurveRow> {
    let points: Vec<(usize, f64)> = ns.iter().flat_map(|&n| params.iter().map(move |&p| (n, p))).collect();
    points
        .par_iter()
        .map(|&(n, p)| {
            curve_point(base, p, n, stat, r, config, theil)
                .unwrap_or_else(|e| failed_row(base.family_name(), p, n, stat, &e))
        })
        .collect()
}

/// One point of a variance curve of the sample Gini coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub family: String,
    pub param: f64,
    pub n: usize,
    pub population_value: f64,
    pub expected_value: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub quad_error: f64,
    pub converged: bool,
    pub note: String,
}

pub fn gini_variance_curve(
    base: &DistributionSpec,
    params: &[f64],
    ns: &[usize],
    r: f64,
    config: &QuadratureConfig,
) -> Vec<VarianceRow> {
    let points: Vec<(usize, f64)> = ns.iter().flat_map(|&n| params.iter().map(move |&p| (n, p))).collect();
    points
        .par_iter()
        .map(|&(n, p)| {
            let row = base.with_primary_param(p).and_then(|d| gini_second_moment(&d, n, r, config));
            match row {
                Ok(m) => VarianceRow {
                    family: base.family_name().to_string(),
                    param: p,
                    n,
                    population_value: m.population_g,
                    expected_value: m.expected,
                    second_moment: m.second_moment,
                    variance: m.variance,
                    quad_error: m.first.quadrature_error + m.second.quadrature_error,
                    converged: m.first.converged && m.second.converged,
                    note: String::new(),
                },
                Err(e) => VarianceRow {
                    family: base.family_name().to_string(),
                    param: p,
                    n,
                    population_value: f64::NAN,
                    expected_value: f64::NAN,
                    second_moment: f64::NAN,
                    variance: f64::NAN,
                    quad_error: f64::NAN,
                    converged: false,
                    note: e.to_string(),
                },
            }
        })
        .collect()
}

/// SplitMix64 finalizer, used to derive independent seeds per grid point.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bias of one estimator at one `(alpha, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasRow {
    pub alpha: f64,
    pub n: usize,
    pub method: EstimatorMethod,
    /// Mean of `estimate - G(alpha)`.
    pub bias: f64,
    pub abs_bias: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Replications where the fit was clamped to keep alpha above 1.
    pub clamped: usize,
    /// Replications where the estimator could not be computed.
    pub failures: usize,
}

#[derive(Default, Clone, Copy)]
struct MethodTally {
    moments: Moments,
    clamped: usize,
    failures: usize,
}

fn debias_point(alpha: f64, n: usize, replications: usize, seed: u64, bias: &dyn BiasSource) -> Result<Vec<DebiasRow>> {
    let dist = DistributionSpec::pareto(alpha, 1.0)?;
    let truth = pareto_gini(alpha);
    let chunks = replications.div_ceil(CHUNK);
    let parts: Vec<[MethodTally; 5]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut tallies = [MethodTally::default(); 5];
            for _ in 0..CHUNK.min(replications - c * CHUNK) {
                let data = SampleData::new((0..n).map(|_| dist.draw(&mut rng)).collect())?;
                for (t, m) in tallies.iter_mut().zip(EstimatorMethod::ALL) {
                    match debiased_gini(&data, m, bias) {
                        Ok(est) => {
                            t.moments.push(est.value - truth);
                            t.clamped += est.clamped as usize;
                        }
                        Err(Error::Domain(_) | Error::Degenerate(_)) => t.failures += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(tallies)
        })
        .collect::<Result<_>>()?;
    let mut total = [MethodTally::default(); 5];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.moments.merge(&p.moments);
            t.clamped += p.clamped;
            t.failures += p.failures;
        }
    }
    Ok(EstimatorMethod::ALL
        .into_iter()
        .zip(total)
        .map(|(method, t)| DebiasRow {
            alpha,
            n,
            method,
            bias: t.moments.mean,
            abs_bias: t.moments.mean.abs(),
            std_error: t.moments.std_error(),
            replications,
            clamped: t.clamped,
            failures: t.failures,
        })
        .collect())
}

/// Replication experiment on Pareto(alpha, 1) samples comparing the five
/// Gini estimators. The bias correction uses a [`ParetoBiasTable`] per `n`.
/// Rows are ordered by `n`, then alpha, then method.
pub fn debias_experiment(
    alphas: &[f64],
    ns: &[usize],
    replications: usize,
    seed: u64,
    config: &QuadratureConfig,
) -> Result<Vec<DebiasRow>> {
    if replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > 1.0)) {
        return Err(Error::Config(format!("Pareto shape must exceed 1, got {a}")));
    }
    if let Some(n) = ns.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("sample size must be at least 2, got {n}")));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let table = ParetoBiasTable::build(n, config)?;
        for (i, &alpha) in alphas.iter().enumerate() {
            rows.extend(debias_point(alpha, n, replications, derive_seed(seed, n as u64, i as u64), &table)?);
        }
    }
    Ok(rows)
}

/// Mean of `abs_bias` over the alpha grid, per `(n, method)`.
pub fn mean_abs_bias(rows: &[DebiasRow], n: usize, method: EstimatorMethod) -> f64 {
    let sel: Vec<f64> = rows.iter().filter(|r| r.n == n && r.method == method).map(|r| r.abs_bias).collect();
    sel.iter().sum::<f64>() / sel.len() as f64
}

/// Checks that the family can be used by [`debias_experiment`].
pub fn require_pareto(dist: &DistributionSpec) -> Result<()> {
    if dist.family() != Family::Pareto {
        return Err(Error::Config(format!("the debiasing experiment needs a Pareto law, got {dist}")));
    }
    Ok(())
}
