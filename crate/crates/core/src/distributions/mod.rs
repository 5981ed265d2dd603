//! Non-negative distributions and their exponentially tilted versions.
//!
//! The tilted law `F^(lambda)` reweights `F` by `exp(-lambda x) / L(lambda)`,
//! where `L` is the Laplace transform. Several families are closed under
//! tilting (Gamma, Exponential, Poisson, Bernoulli, negative binomial,
//! inverse Gaussian); Pareto functionals reduce to generalized exponential
//! integrals; the lognormal law is handled on a logarithmic grid.

mod discrete;
mod grid;
mod pareto;
mod tilted;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::{digamma, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::estimators::SampleData;
use crate::special::{ln_expint, norm_cdf};

pub use tilted::{Moment, TiltedLaw, TiltedMomentSet, TiltedView};


#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    Exponential,
    Pareto,
    Poisson,
    Bernoulli,
    NegativeBinomial,
    Lognormal,
    InverseGaussian,
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    Continuous,
    Discrete,
}

/// Population inequality measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationStat {
    Gini,
    Scv,
    Theil,
}

impl FromStr for PopulationStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gini" => Ok(Self::Gini),
            "scv" | "cv2" => Ok(Self::Scv),
            "theil" => Ok(Self::Theil),
            other => Err(Error::Config(format!("unknown statistic `{other}` (expected gini, scv or theil)"))),
        }
    }
}

impl fmt::Display for PopulationStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gini => "gini",
            Self::Scv => "scv",
            Self::Theil => "theil",
        })
    }
}

/// Family parameters.
///
/// Gamma is shape-scale (`E X = shape * scale`), Pareto has density
/// `shape * scale^shape / x^(shape+1)` on `[scale, inf)`, the negative
/// binomial counts failures before the `r`-th success with success
/// probability `p`, and the inverse Gaussian is `(mean, shape)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Gamma { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Pareto { shape: f64, scale: f64 },
    Poisson { mean: f64 },
    Bernoulli { p: f64 },
    NegativeBinomial { r: f64, p: f64 },
    Lognormal { mu: f64, sigma: f64 },
    InverseGaussian { mean: f64, shape: f64 },
    PointMass { value: f64 },
}

/// A validated non-negative distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    law: Law,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl DistributionSpec {
    pub fn new(law: Law) -> Result<Self> {
        match law {
            Law::Gamma { shape, scale } => {
                positive("gamma shape", shape)?;
                positive("gamma scale", scale)?;
            }
            Law::Exponential { rate } => positive("exponential rate", rate)?,
            Law::Pareto { shape, scale } => {
                positive("pareto scale", scale)?;
                if !(shape > 1.0 && shape.is_finite()) {
                    return Err(Error::Domain(format!("pareto shape must exceed 1 for a finite mean, got {shape}")));
                }
            }
            Law::Poisson { mean } => positive("poisson mean", mean)?,
            Law::Bernoulli { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Domain(format!("bernoulli p must lie in (0, 1], got {p}")));
                }
            }
            Law::NegativeBinomial { r, p } => {
                positive("negative binomial r", r)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Domain(format!("negative binomial p must lie in (0, 1), got {p}")));
                }
            }
            Law::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::Domain(format!("lognormal mu must be finite, got {mu}")));
                }
                positive("lognormal sigma", sigma)?;
            }
            Law::InverseGaussian { mean, shape } => {
                positive("inverse gaussian mean", mean)?;
                positive("inverse gaussian shape", shape)?;
            }
            Law::PointMass { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::Domain(format!("point mass must sit at a finite non-negative value, got {value}")));
                }
            }
        }
        Ok(Self { law })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Law::Gamma { shape, scale })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Law::Exponential { rate })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Law::Pareto { shape, scale })
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        Self::new(Law::Poisson { mean })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(Law::Bernoulli { p })
    }

    pub fn negative_binomial(r: f64, p: f64) -> Result<Self> {
        Self::new(Law::NegativeBinomial { r, p })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Law::Lognormal { mu, sigma })
    }

    pub fn inverse_gaussian(mean: f64, shape: f64) -> Result<Self> {
        Self::new(Law::InverseGaussian { mean, shape })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(Law::PointMass { value })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn family(&self) -> Family {
        match self.law {
            Law::Gamma { .. } => Family::Gamma,
            Law::Exponential { .. } => Family::Exponential,
            Law::Pareto { .. } => Family::Pareto,
            Law::Poisson { .. } => Family::Poisson,
            Law::Bernoulli { .. } => Family::Bernoulli,
            Law::NegativeBinomial { .. } => Family::NegativeBinomial,
            Law::Lognormal { .. } => Family::Lognormal,
            Law::InverseGaussian { .. } => Family::InverseGaussian,
            Law::PointMass { .. } => Family::PointMass,
        }
    }

    pub fn support_kind(&self) -> SupportKind {
        match self.law {
            Law::Poisson { .. } | Law::Bernoulli { .. } | Law::NegativeBinomial { .. } | Law::PointMass { .. } => {
                SupportKind::Discrete
            }
            _ => SupportKind::Continuous,
        }
    }

    /// Named parameters in canonical order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.law {
            Law::Gamma { shape, scale } => vec![("shape", shape), ("scale", scale)],
            Law::Exponential { rate } => vec![("rate", rate)],
            Law::Pareto { shape, scale } => vec![("shape", shape), ("scale", scale)],
            Law::Poisson { mean } => vec![("mean", mean)],
            Law::Bernoulli { p } => vec![("p", p)],
            Law::NegativeBinomial { r, p } => vec![("r", r), ("p", p)],
            Law::Lognormal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            Law::InverseGaussian { mean, shape } => vec![("mean", mean), ("shape", shape)],
            Law::PointMass { value } => vec![("value", value)],
        }
    }

    /// Replaces the first parameter (the shape for Gamma/Pareto, the mean for
    /// Poisson, ...). Used by parameter sweeps.
    pub fn with_primary_param(&self, v: f64) -> Result<Self> {
        let law = match self.law {
            Law::Gamma { scale, .. } => Law::Gamma { shape: v, scale },
            Law::Exponential { .. } => Law::Exponential { rate: v },
            Law::Pareto { scale, .. } => Law::Pareto { shape: v, scale },
            Law::Poisson { .. } => Law::Poisson { mean: v },
            Law::Bernoulli { .. } => Law::Bernoulli { p: v },
            Law::NegativeBinomial { p, .. } => Law::NegativeBinomial { r: v, p },
            Law::Lognormal { mu, .. } => Law::Lognormal { mu, sigma: v },
            Law::InverseGaussian { mean, .. } => Law::InverseGaussian { mean, shape: v },
            Law::PointMass { .. } => Law::PointMass { value: v },
        };
        Self::new(law)
    }

    /// The law of `c X`. Only defined for families closed under scaling.
    pub fn scaled_by(&self, c: f64) -> Result<Self> {
        positive("scale multiplier", c)?;
        let law = match self.law {
            Law::Gamma { shape, scale } => Law::Gamma { shape, scale: scale * c },
            Law::Exponential { rate } => Law::Exponential { rate: rate / c },
            Law::Pareto { shape, scale } => Law::Pareto { shape, scale: scale * c },
            Law::Lognormal { mu, sigma } => Law::Lognormal { mu: mu + c.ln(), sigma },
            Law::InverseGaussian { mean, shape } => Law::InverseGaussian { mean: mean * c, shape: shape * c },
            Law::PointMass { value } => Law::PointMass { value: value * c },
            _ => return Err(Error::Capability(format!("{} is not closed under scaling", self.family_name()))),
        };
        Self::new(law)
    }

    pub fn family_name(&self) -> &'static str {
        match self.family() {
            Family::Gamma => "gamma",
            Family::Exponential => "exponential",
            Family::Pareto => "pareto",
            Family::Poisson => "poisson",
            Family::Bernoulli => "bernoulli",
            Family::NegativeBinomial => "negbin",
            Family::Lognormal => "lognormal",
            Family::InverseGaussian => "invgauss",
            Family::PointMass => "pointmass",
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match self.law {
            Law::Pareto { scale, .. } => scale,
            Law::PointMass { value } => value,
            _ => 0.0,
        }
    }

    /// `ln E[exp(-lambda X)]`.
    pub fn ln_laplace(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        if lambda == 0.0 {
            return Ok(0.0);
        }
        Ok(match self.law {
            Law::Gamma { shape, scale } => -shape * (scale * lambda).ln_1p(),
            Law::Exponential { rate } => -(lambda / rate).ln_1p(),
            Law::Pareto { shape, scale } => shape.ln() + ln_expint(shape + 1.0, lambda * scale),
            Law::Poisson { mean } => mean * (-lambda).exp_m1(),
            Law::Bernoulli { p } => (p * (-lambda).exp_m1()).ln_1p(),
            Law::NegativeBinomial { r, p } => r * (p.ln() - (-(1.0 - p) * (-lambda).exp()).ln_1p()),
            Law::Lognormal { mu, sigma } => grid::lognormal(mu, sigma, lambda).ln_mass(),
            Law::InverseGaussian { mean, shape } => {
                let t = 2.0 * mean * mean * lambda / shape;
                -(shape / mean) * t / (1.0 + (1.0 + t).sqrt())
            }
            Law::PointMass { value } => -lambda * value,
        })
    }

    /// Laplace transform `L(lambda) = E[exp(-lambda X)]`.
    pub fn laplace(&self, lambda: f64) -> Result<f64> {
        Ok(self.ln_laplace(lambda)?.exp())
    }

    /// `P(X = 0)`.
    pub fn zero_mass(&self) -> f64 {
        match self.law {
            Law::Poisson { mean } => (-mean).exp(),
            Law::Bernoulli { p } => 1.0 - p,
            Law::NegativeBinomial { r, p } => p.powf(r),
            Law::PointMass { value } if value == 0.0 => 1.0,
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match self.law {
            Law::Gamma { shape, scale } => shape * scale,
            Law::Exponential { rate } => 1.0 / rate,
            Law::Pareto { shape, scale } => shape * scale / (shape - 1.0),
            Law::Poisson { mean } => mean,
            Law::Bernoulli { p } => p,
            Law::NegativeBinomial { r, p } => r * (1.0 - p) / p,
            Law::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Law::InverseGaussian { mean, .. } => mean,
            Law::PointMass { value } => value,
        }
    }

    /// Variance; `+inf` for Pareto with shape at most 2.
    pub fn variance(&self) -> f64 {
        match self.law {
            Law::Gamma { shape, scale } => shape * scale * scale,
            Law::Exponential { rate } => 1.0 / (rate * rate),
            Law::Pareto { shape, scale } => {
                if shape <= 2.0 {
                    f64::INFINITY
                } else {
                    shape * scale * scale / ((shape - 1.0).powi(2) * (shape - 2.0))
                }
            }
            Law::Poisson { mean } => mean,
            Law::Bernoulli { p } => p * (1.0 - p),
            Law::NegativeBinomial { r, p } => r * (1.0 - p) / (p * p),
            Law::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                s2.exp_m1() * (2.0 * mu + s2).exp()
            }
            Law::InverseGaussian { mean, shape } => mean.powi(3) / shape,
            Law::PointMass { .. } => 0.0,
        }
    }

    /// The tilted law at `lambda`.
    pub fn tilt(&self, lambda: f64) -> Result<TiltedView> {
        TiltedView::new(*self, lambda)
    }

    /// Gini mean difference `E|X1 - X2|`.
    pub fn gmd(&self) -> Result<f64> {
        self.tilt(0.0)?.law()?.gmd()
    }

    /// `GMD(F^(lambda)) / GMD(F)`.
    pub fn gmd_scaling_g(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        if let Some(s) = self.scale_factor(lambda) {
            if self.gmd_is_zero() {
                return Err(Error::Domain("gini mean difference of the base law is zero".into()));
            }
            return Ok(s);
        }
        let base = self.gmd()?;
        if base == 0.0 {
            return Err(Error::Domain("gini mean difference of the base law is zero".into()));
        }
        Ok(self.tilt(lambda)?.law()?.gmd()? / base)
    }

    fn gmd_is_zero(&self) -> bool {
        matches!(self.law, Law::PointMass { .. } | Law::Bernoulli { p: 1.0 })
    }

    /// For laws whose tilt is a rescaling, the factor `s` with
    /// `F^(lambda)(x) = F(x / s)`.
    pub fn scale_factor(&self, lambda: f64) -> Option<f64> {
        match self.law {
            Law::Gamma { scale, .. } => Some(1.0 / (1.0 + scale * lambda)),
            Law::Exponential { rate } => Some(rate / (rate + lambda)),
            _ => None,
        }
    }

    /// Population Gini coefficient, squared coefficient of variation or
    /// Theil index.
    pub fn population_stat(&self, stat: PopulationStat) -> Result<f64> {
        let mean = self.mean();
        if mean == 0.0 {
            return Err(Error::Domain("population statistic undefined for a law concentrated at 0".into()));
        }
        match stat {
            PopulationStat::Gini => match self.law {
                Law::Gamma { shape, .. } => Ok((ln_gamma(shape + 0.5) - ln_gamma(shape + 1.0)).exp() / std::f64::consts::PI.sqrt()),
                Law::Exponential { .. } => Ok(0.5),
                Law::Pareto { shape, .. } => Ok(1.0 / (2.0 * shape - 1.0)),
                Law::Lognormal { sigma, .. } => Ok(2.0 * norm_cdf(sigma / std::f64::consts::SQRT_2) - 1.0),
                Law::PointMass { .. } => Ok(0.0),
                _ => Ok(self.gmd()? / (2.0 * mean)),
            },
            PopulationStat::Scv => {
                let var = self.variance();
                if !var.is_finite() {
                    return Err(Error::Capability(format!(
                        "squared coefficient of variation needs a finite variance; {} has none",
                        self
                    )));
                }
                Ok(var / (mean * mean))
            }
            PopulationStat::Theil => match self.law {
                Law::Gamma { shape, .. } => Ok(digamma(shape + 1.0) - shape.ln()),
                Law::Exponential { .. } => Ok(1.0 - crate::special::EULER_GAMMA),
                Law::Pareto { shape, .. } => Ok(1.0 / (shape - 1.0) - (shape / (shape - 1.0)).ln()),
                Law::Lognormal { sigma, .. } => Ok(0.5 * sigma * sigma),
                Law::PointMass { .. } => Ok(0.0),
                _ => {
                    let law = self.tilt(0.0)?.law()?;
                    let e = law.expect(|x| if x > 0.0 { x * (x / mean).ln() } else { 0.0 })?;
                    Ok(e / mean)
                }
            },
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        Ok(match self.law {
            Law::Gamma { shape, scale } => 1.0 - gamma_ur(shape, x / scale),
            Law::Exponential { rate } => -(-rate * x).exp_m1(),
            Law::Pareto { shape, scale } => {
                if x < scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(shape)
                }
            }
            Law::Lognormal { mu, sigma } => {
                if x == 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma)
                }
            }
            Law::InverseGaussian { mean, shape } => ig_cdf(mean, shape, x),
            Law::PointMass { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.tilt(0.0)?.law()?.cdf(x)?,
        })
    }

    /// Smallest `x` with `P(X <= x) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.tilt(0.0)?.law()?.quantile(u)
    }

    /// One draw from the base law.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            Law::Gamma { shape, scale } => rand_distr::Gamma::new(shape, scale).expect("validated").sample(rng),
            Law::Exponential { rate } => rand_distr::Exp::new(rate).expect("validated").sample(rng),
            Law::Pareto { shape, scale } => rand_distr::Pareto::new(scale, shape).expect("validated").sample(rng),
            Law::Poisson { mean } => rand_distr::Poisson::new(mean).expect("validated").sample(rng),
            Law::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Law::NegativeBinomial { r, p } => {
                let rate = rand_distr::Gamma::new(r, (1.0 - p) / p).expect("validated").sample(rng);
                if rate <= 0.0 {
                    0.0
                } else {
                    rand_distr::Poisson::new(rate).map(|d| d.sample(rng)).unwrap_or(0.0)
                }
            }
            Law::Lognormal { mu, sigma } => rand_distr::LogNormal::new(mu, sigma).expect("validated").sample(rng),
            Law::InverseGaussian { mean, shape } => {
                rand_distr::InverseGaussian::new(mean, shape).expect("validated").sample(rng)
            }
            Law::PointMass { value } => value,
        }
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleData> {
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n).map(|_| self.draw(&mut rng)).collect();
        SampleData::new(values)
    }
}

pub(crate) fn ig_cdf(mean: f64, shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = (shape / x).sqrt();
    let first = norm_cdf(a * (x / mean - 1.0));
    // exp(2 shape / mean) Phi(-a (x/mean + 1)) in log space to avoid overflow
    let arg = -a * (x / mean + 1.0);
    let tail = norm_cdf(arg);
    let second = if tail > 0.0 { (2.0 * shape / mean + tail.ln()).exp() } else { 0.0 };
    (first + second).min(1.0)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tilt parameter must be a finite non-negative number, got {lambda}")))
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family_name())?;
        for (i, (k, v)) in self.params().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `family(name=value,...)`; a lone positional value is accepted
    /// for one-parameter families, e.g. `pointmass(1)` or `poisson(2)`.
    fn from_str(input: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse { input: input.to_string(), reason };
        let s = input.trim();
        let (name, body) = match s.find('(') {
            Some(i) => {
                if !s.ends_with(')') {
                    return Err(parse_err("missing closing parenthesis".into()));
                }
                (&s[..i], &s[i + 1..s.len() - 1])
            }
            None => (s, ""),
        };
        let name = name.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let mut named: Vec<(String, f64)> = Vec::new();
        let mut positional: Vec<f64> = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => {
                    let v: f64 = v.trim().parse().map_err(|_| parse_err(format!("`{v}` is not a number")))?;
                    named.push((k.trim().to_ascii_lowercase(), v));
                }
                None => {
                    if !named.is_empty() {
                        return Err(parse_err("positional value after named ones".into()));
                    }
                    positional.push(part.parse().map_err(|_| parse_err(format!("`{part}` is not a number")))?);
                }
            }
        }
        type Schema = (Vec<&'static str>, Vec<Vec<&'static str>>, Vec<Option<f64>>);
        let schema: Schema = match name.as_str() {
            "gamma" => (vec!["shape", "scale"], vec![vec!["shape", "alpha", "a", "k"], vec!["scale", "beta", "theta"]], vec![None, Some(1.0)]),
            "exponential" | "exp" => (vec!["rate"], vec![vec!["rate", "lambda"]], vec![Some(1.0)]),
            "pareto" => (vec!["shape", "scale"], vec![vec!["shape", "alpha", "a"], vec!["scale", "xm", "x_m"]], vec![None, Some(1.0)]),
            "poisson" => (vec!["mean"], vec![vec!["mean", "mu", "lambda"]], vec![None]),
            "bernoulli" => (vec!["p"], vec![vec!["p"]], vec![None]),
            "negbin" | "negative_binomial" | "nbinom" => (vec!["r", "p"], vec![vec!["r", "n"], vec!["p"]], vec![None, None]),
            "lognormal" | "lnorm" => (vec!["mu", "sigma"], vec![vec!["mu", "meanlog"], vec!["sigma", "sdlog"]], vec![Some(0.0), None]),
            "invgauss" | "inverse_gaussian" | "inversegaussian" | "wald" => {
                (vec!["mean", "shape"], vec![vec!["mean", "mu"], vec!["shape", "lambda"]], vec![None, None])
            }
            "pointmass" | "point_mass" | "dirac" | "constant" => (vec!["value"], vec![vec!["value", "c", "x"]], vec![None]),
            other => return Err(parse_err(format!("unknown family `{other}`"))),
        };
        let (canonical, aliases, defaults) = schema;
        if positional.len() > canonical.len() {
            return Err(parse_err(format!("expected at most {} parameters", canonical.len())));
        }
        let mut values: Vec<Option<f64>> = defaults;
        for (slot, v) in positional.iter().enumerate() {
            values[slot] = Some(*v);
        }
        for (k, v) in &named {
            let slot = aliases
                .iter()
                .position(|names| names.contains(&k.as_str()))
                .ok_or_else(|| parse_err(format!("unknown parameter `{k}` for {name}")))?;
            values[slot] = Some(*v);
        }
        let mut vals = Vec::with_capacity(values.len());
        for (slot, v) in values.iter().enumerate() {
            vals.push(v.ok_or_else(|| parse_err(format!("missing parameter `{}`", canonical[slot])))?);
        }
        let law = match name.as_str() {
            "gamma" => Law::Gamma { shape: vals[0], scale: vals[1] },
            "exponential" | "exp" => Law::Exponential { rate: vals[0] },
            "pareto" => Law::Pareto { shape: vals[0], scale: vals[1] },
            "poisson" => Law::Poisson { mean: vals[0] },
            "bernoulli" => Law::Bernoulli { p: vals[0] },
            "negbin" | "negative_binomial" | "nbinom" => Law::NegativeBinomial { r: vals[0], p: vals[1] },
            "lognormal" | "lnorm" => Law::Lognormal { mu: vals[0], sigma: vals[1] },
            "pointmass" | "point_mass" | "dirac" | "constant" => Law::PointMass { value: vals[0] },
            _ => Law::InverseGaussian { mean: vals[0], shape: vals[1] },
        };
        Self::new(law).map_err(|e| parse_err(e.to_string()))
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
