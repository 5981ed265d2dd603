//! Engine-versus-oracle validation suites. Each suite returns one
//! [`Check`] per point with the engine value, the reference value, the
//! allowed deviation and the verdict.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimators::EstimatorMethod;
use crate::experiments::{debias_experiment, derive_seed, mean_abs_bias};
use crate::oracle::{enumerate_expected_statistic, mc_expected_statistic, mc_statistic_moments, mc_tilted_cross_moment, CrossMoment};
use crate::quadrature::{integrate_with_power_weight, QuadratureConfig};
use crate::ratio::{expected_ratio_iid, sanity_identity_suite, RatioStatistic};
use crate::statistics::{gamma_gini_variance_closed_form, gamma_scv_expectation, gini_expectation, gini_second_moment};

/// Sample sizes used by the Monte Carlo suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationScale {
    /// Replications of the statistic for mean and variance bands.
    pub mc_replications: usize,
    /// Triples drawn for the `xi1` oracle.
    pub xi1_samples: usize,
    /// Replications per point of the debiasing experiment.
    pub debias_replications: usize,
    pub seed: u64,
}

impl Default for ValidationScale {
    fn default() -> Self {
        Self { mc_replications: 1_000_000, xi1_samples: 10_000_000, debias_replications: 100_000, seed: 20_240_917 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub engine: f64,
    pub reference: f64,
    /// Largest accepted `|engine - reference|`; NaN for ordering checks.
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn close(label: String, engine: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (engine - reference).abs() <= tolerance;
        Self { label, engine, reference, tolerance, pass }
    }

    fn holds(label: String, engine: f64, reference: f64, pass: bool) -> Self {
        Self { label, engine, reference, tolerance: f64::NAN, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub id: u8,
    pub slug: String,
    pub title: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub seconds: f64,
    /// Set when the suite aborted with an error.
    pub error: Option<String>,
}

pub struct Suite {
    pub id: u8,
    pub slug: &'static str,
    pub title: &'static str,
    /// Deterministic suites run in quick mode.
    pub deterministic: bool,
    run: fn(&ValidationScale) -> Result<Vec<Check>>,
}

pub const SUITES: [Suite; 9] = [
    Suite { id: 1, slug: "gamma-identity", title: "gamma-density identity for 1/x^a", deterministic: true, run: gamma_identity },
    Suite { id: 2, slug: "gamma-unbiasedness", title: "sample Gini is unbiased under Gamma", deterministic: true, run: gamma_unbiasedness },
    Suite { id: 3, slug: "gamma-scv", title: "Gamma SCV expectation n/(an+1)", deterministic: true, run: gamma_scv },
    Suite { id: 4, slug: "discrete-enumeration", title: "engine equals exact enumeration on discrete laws", deterministic: true, run: discrete_enumeration },
    Suite { id: 5, slug: "pareto-bias", title: "Pareto Gini bias against Monte Carlo", deterministic: false, run: pareto_bias },
    Suite { id: 6, slug: "gamma-variance", title: "Gamma Gini variance: closed form, engine, Monte Carlo", deterministic: false, run: gamma_variance },
    Suite { id: 7, slug: "debias-ordering", title: "ordering of the five Gini estimators on Pareto data", deterministic: false, run: debias_ordering },
    Suite { id: 8, slug: "engine-identities", title: "E[S^k/S^k] = 1 and E[X1/S] = 1/n", deterministic: true, run: engine_identities },
    Suite { id: 9, slug: "evaluation-count", title: "evaluation count does not grow with n", deterministic: true, run: evaluation_count },
];

pub fn find_suite(key: &str) -> Result<&'static Suite> {
    let key = key.trim().to_ascii_lowercase();
    let key = key.strip_prefix('c').unwrap_or(&key);
    SUITES
        .iter()
        .find(|s| s.slug == key || s.id.to_string() == key)
        .ok_or_else(|| Error::Config(format!("unknown suite `{key}`")))
}

pub fn run_suite(suite: &Suite, scale: &ValidationScale) -> SuiteReport {
    let start = Instant::now();
    let (checks, error) = match (suite.run)(scale) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.pass);
    SuiteReport {
        id: suite.id,
        slug: suite.slug.to_string(),
        title: suite.title.to_string(),
        checks,
        pass,
        seconds: start.elapsed().as_secs_f64(),
        error,
    }
}

/// Runs every suite, or only the deterministic ones when `quick`.
pub fn run_all(quick: bool, scale: &ValidationScale) -> Vec<SuiteReport> {
    SUITES.iter().filter(|s| !quick || s.deterministic).map(|s| run_suite(s, scale)).collect()
}

const GAMMA_SHAPES: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
const GAMMA_NS: [usize; 4] = [2, 5, 20, 100];

fn gamma_identity(_: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    for a in [0.3, 1.0, 2.0, 7.5] {
        for x in [0.5, 1.0, 3.0] {
            let v = integrate_with_power_weight(|l| (-l * x).exp(), a, &cfg)?.value;
            let want = x.powf(-a);
            out.push(Check::close(format!("a={a} x={x}"), v, want, 1e-9 * want));
        }
    }
    Ok(out)
}

fn gamma_unbiasedness(_: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    for a in GAMMA_SHAPES {
        for n in GAMMA_NS {
            let g = gini_expectation(&DistributionSpec::gamma(a, 1.0)?, n, 0.0, &cfg)?;
            out.push(Check::close(format!("a={a} n={n} R"), g.ratio_r.unwrap_or(f64::NAN), 1.0, 1e-8));
        }
    }
    Ok(out)
}

fn gamma_scv(_: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    for a in GAMMA_SHAPES {
        for n in GAMMA_NS {
            let stat = RatioStatistic::scv(n, 0.0)?;
            let v = expected_ratio_iid(&DistributionSpec::gamma(a, 1.0)?, n, &stat, &cfg)?.value;
            let want = gamma_scv_expectation(a, n)?;
            out.push(Check::close(format!("a={a} n={n}"), v, want, 1e-8 * want));
        }
    }
    Ok(out)
}

fn discrete_enumeration(_: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut dists = Vec::new();
    for p in [0.3, 0.5, 0.9] {
        dists.push(DistributionSpec::bernoulli(p)?);
    }
    for mu in [0.5, 2.0] {
        dists.push(DistributionSpec::poisson(mu)?);
    }
    let mut out = Vec::new();
    for d in &dists {
        for n in [2, 3, 5, 8] {
            for r in [0.0, 1.0] {
                for (name, stat) in [("gini", RatioStatistic::gini(n, r)?), ("scv", RatioStatistic::scv(n, r)?)] {
                    let engine = expected_ratio_iid(d, n, &stat, &cfg)?;
                    let exact = enumerate_expected_statistic(d, n, &stat, 1e-10)?;
                    let budget = engine.quadrature_error + exact.truncation_bound;
                    let mut c = Check::close(format!("{d} {name} n={n} r={r}"), engine.value, exact.value, 1e-7);
                    c.pass &= budget <= 1e-7;
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}

const PARETO_SHAPES: [f64; 3] = [1.5, 2.0, 3.0];
const PARETO_NS: [usize; 4] = [3, 5, 10, 20];

fn pareto_bias(scale: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    let mut ratio = [[0.0; 4]; 3];
    for (i, a) in PARETO_SHAPES.into_iter().enumerate() {
        let d = DistributionSpec::pareto(a, 1.0)?;
        for (j, n) in PARETO_NS.into_iter().enumerate() {
            let g = gini_expectation(&d, n, 0.0, &cfg)?;
            let stat = RatioStatistic::gini(n, 0.0)?;
            let mc = mc_expected_statistic(&d, n, &stat, scale.mc_replications, derive_seed(scale.seed, 5, (i * 4 + j) as u64))?;
            out.push(Check::close(format!("a={a} n={n} E G_hat vs MC"), g.expected, mc.mean, 3.0 * mc.std_error));
            let r = g.ratio_r.unwrap_or(f64::NAN);
            out.push(Check::holds(format!("a={a} n={n} R < 1"), r, 1.0, r < 1.0));
            ratio[i][j] = r;
        }
    }
    for (i, a) in PARETO_SHAPES.into_iter().enumerate() {
        for j in 1..4 {
            let (lo, hi) = (ratio[i][j - 1], ratio[i][j]);
            out.push(Check::holds(format!("a={a} R rises from n={} to n={}", PARETO_NS[j - 1], PARETO_NS[j]), hi, lo, hi > lo));
        }
    }
    for (j, n) in PARETO_NS.into_iter().enumerate() {
        for i in 1..3 {
            let (lo, hi) = (ratio[i - 1][j], ratio[i][j]);
            out.push(Check::holds(format!("n={n} R rises from a={} to a={}", PARETO_SHAPES[i - 1], PARETO_SHAPES[i]), hi, lo, hi > lo));
        }
    }
    Ok(out)
}

fn gamma_variance(scale: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    for (i, a) in [1.0, 2.0].into_iter().enumerate() {
        let d = DistributionSpec::gamma(a, 1.0)?;
        let xi1 = mc_tilted_cross_moment(&d.tilt(0.0)?, CrossMoment::Xi1, scale.xi1_samples, derive_seed(scale.seed, 6, i as u64))?;
        for (j, n) in [2usize, 5, 10].into_iter().enumerate() {
            let closed = gamma_gini_variance_closed_form(a, n, xi1.mean)?;
            let nf = n as f64;
            let closed_se = (nf - 2.0) / (a * (nf - 1.0) * (a * nf + 1.0)) * xi1.std_error;
            let engine = gini_second_moment(&d, n, 0.0, &cfg)?;
            let engine_err = engine.first.quadrature_error * 2.0 + engine.second.quadrature_error + 1e-12;
            let stat = RatioStatistic::gini(n, 0.0)?;
            let mc = mc_statistic_moments(&d, n, &stat, scale.mc_replications, derive_seed(scale.seed, 60 + i as u64, j as u64))?;
            let (mc_var, mc_se) = (mc.variance(), mc.variance_std_error());
            let band = |s1: f64, s2: f64| 3.0 * (s1 * s1 + s2 * s2).sqrt();
            out.push(Check::close(format!("a={a} n={n} closed form vs engine"), engine.variance, closed, band(closed_se, engine_err)));
            out.push(Check::close(format!("a={a} n={n} engine vs Monte Carlo"), engine.variance, mc_var, band(engine_err, mc_se)));
            out.push(Check::close(format!("a={a} n={n} closed form vs Monte Carlo"), closed, mc_var, band(closed_se, mc_se)));
            if a == 1.0 && n == 2 {
                out.push(Check::close("a=1 n=2 closed form is 1/12".into(), closed, 1.0 / 12.0, 1e-14));
                out.push(Check::close("a=1 n=2 engine hits 1/12".into(), engine.variance, 1.0 / 12.0, engine_err.max(1e-10)));
                out.push(Check::close("a=1 n=2 Monte Carlo hits 1/12".into(), mc_var, 1.0 / 12.0, 3.0 * mc_se));
            }
        }
    }
    Ok(out)
}

fn debias_ordering(scale: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let alphas = [1.2, 1.5, 2.0, 2.5, 3.0];
    let rows = debias_experiment(&alphas, &[20, 50], scale.debias_replications, derive_seed(scale.seed, 7, 0), &cfg)?;
    let mut out = Vec::new();
    let m = |n, method| mean_abs_bias(&rows, n, method);
    let plain = m(20, EstimatorMethod::Plain);
    let mom_plugin = m(20, EstimatorMethod::MomPlugin);
    out.push(Check::holds("n=20 plain above mom_plugin".into(), plain, mom_plugin, plain > mom_plugin));
    for method in [EstimatorMethod::MlePlugin, EstimatorMethod::MleDebiased, EstimatorMethod::MomDebiased] {
        let v = m(20, method);
        out.push(Check::holds(format!("n=20 mom_plugin above {method}"), mom_plugin, v, mom_plugin > v));
    }
    for method in EstimatorMethod::ALL {
        let (a, b) = (m(50, method), m(20, method));
        out.push(Check::holds(format!("{method} shrinks from n=20 to n=50"), a, b, a < b));
    }
    Ok(out)
}

fn engine_identities(_: &ValidationScale) -> Result<Vec<Check>> {
    let dists = [
        DistributionSpec::gamma(0.5, 1.0)?,
        DistributionSpec::gamma(3.0, 2.0)?,
        DistributionSpec::exponential(1.0)?,
        DistributionSpec::pareto(2.5, 1.0)?,
        DistributionSpec::pareto(3.0, 1.0)?,
        DistributionSpec::lognormal(0.0, 1.0)?,
        DistributionSpec::inverse_gaussian(1.0, 2.0)?,
    ];
    let mut out = Vec::new();
    for d in &dists {
        for n in [2, 5] {
            for k in 1..=3 {
                for case in sanity_identity_suite(d, n, k, 0.0, 1e-9)? {
                    if k > 1 && case.label == "X1/S" {
                        continue;
                    }
                    out.push(Check::close(format!("{d} n={n} {}", case.label), case.value, case.expected, 1e-9));
                }
            }
        }
    }
    Ok(out)
}

fn evaluation_count(_: &ValidationScale) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    for a in GAMMA_SHAPES {
        let d = DistributionSpec::gamma(a, 1.0)?;
        let count = |n: usize| -> Result<f64> {
            Ok(expected_ratio_iid(&d, n, &RatioStatistic::gini(n, 0.0)?, &cfg)?.evaluations as f64)
        };
        let (small, large) = (count(2)?, count(100)?);
        let ratio = small.max(large) / small.min(large);
        out.push(Check::holds(format!("a={a} evaluations n=2: {small}, n=100: {large}"), ratio, 2.0, ratio < 2.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_are_found_by_slug_and_id() {
        assert_eq!(find_suite("gamma-unbiasedness").unwrap().id, 2);
        assert_eq!(find_suite("C4").unwrap().slug, "discrete-enumeration");
        assert_eq!(find_suite("9").unwrap().slug, "evaluation-count");
        assert!(find_suite("nope").is_err());
    }

    #[test]
    fn deterministic_suites_pass() {
        for id in [1u8, 2, 3, 8, 9] {
            let r = run_suite(&SUITES[id as usize - 1], &ValidationScale::default());
            assert!(r.pass, "{r:?}");
        }
    }
}
