use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::discrete::PmfTable;
use super::grid::{self, LogGrid};
use super::pareto::TiltedPareto;
use super::{check_lambda, ig_cdf, DistributionSpec, Law};
use crate::error::{Error, Result};

/// A base law together with a tilt parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedView {
    pub base: DistributionSpec,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Mean,
    Variance,
    Gmd,
    Xi1,
}

/// Moments of a tilted law. Entries that were not requested are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TiltedMomentSet {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub gmd: Option<f64>,
    /// `E|X1 - X2||X1 - X3|`.
    pub xi1: Option<f64>,
}

impl TiltedMomentSet {
    /// `xi0 = GMD^2`.
    pub fn xi0(&self) -> Option<f64> {
        self.gmd.map(|g| g * g)
    }

    /// `xi2 = E|X1 - X2|^2 = 2 Var`.
    pub fn xi2(&self) -> Option<f64> {
        self.variance.map(|v| 2.0 * v)
    }
}

impl TiltedView {
    pub fn new(base: DistributionSpec, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { base, lambda })
    }

    pub fn ln_laplace(&self) -> Result<f64> {
        self.base.ln_laplace(self.lambda)
    }

    /// `Some(s)` when the tilted law is the base law scaled by `s`.
    pub fn scale_factor(&self) -> Option<f64> {
        match self.base.law() {
            Law::PointMass { .. } => Some(1.0),
            _ => self.base.scale_factor(self.lambda),
        }
    }

    /// Resolves the tilted law into a form that evaluates functionals.
    pub fn law(&self) -> Result<TiltedLaw> {
        let lambda = self.lambda;
        let ln_laplace = self.base.ln_laplace(lambda)?;
        let kind = match *self.base.law() {
            Law::Gamma { shape, scale } => Kind::Gamma { shape, scale: scale / (1.0 + scale * lambda) },
            Law::Exponential { rate } => Kind::Gamma { shape: 1.0, scale: 1.0 / (rate + lambda) },
            Law::Pareto { shape, scale } => Kind::Pareto(TiltedPareto::new(shape, scale, lambda)),
            Law::Poisson { mean } => Kind::Table(PmfTable::poisson(mean * (-lambda).exp())),
            Law::Bernoulli { p } => {
                let e = (-lambda).exp();
                Kind::Table(PmfTable::bernoulli(p * e / (1.0 - p + p * e)))
            }
            Law::NegativeBinomial { r, p } => {
                let q = (1.0 - p) * (-lambda).exp();
                Kind::Table(PmfTable::negative_binomial(r, 1.0 - q))
            }
            Law::Lognormal { mu, sigma } => Kind::Grid(grid::lognormal(mu, sigma, lambda)),
            Law::InverseGaussian { mean, shape } => {
                let t = 2.0 * mean * mean * lambda / shape;
                Kind::InverseGaussian { mean: mean / (1.0 + t).sqrt(), shape }
            }
            Law::PointMass { value } => Kind::Point(value),
        };
        Ok(TiltedLaw { ln_laplace, kind, grid: OnceLock::new() })
    }

    /// Computes the requested subset of moments.
    pub fn moments(&self, which: &[Moment]) -> Result<TiltedMomentSet> {
        let law = self.law()?;
        let mut out = TiltedMomentSet::default();
        for m in which {
            match m {
                Moment::Mean => out.mean = Some(law.mean()?),
                Moment::Variance => out.variance = Some(law.variance()?),
                Moment::Gmd => out.gmd = Some(law.gmd()?),
                Moment::Xi1 => out.xi1 = Some(law.xi1()?),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Point(f64),
    Gamma { shape: f64, scale: f64 },
    Pareto(TiltedPareto),
    Table(PmfTable),
    Grid(LogGrid),
    InverseGaussian { mean: f64, shape: f64 },
}

/// A resolved tilted law.
#[derive(Debug, Clone)]
pub struct TiltedLaw {
    ln_laplace: f64,
    kind: Kind,
    // log grid of a Gamma (unit scale) or inverse Gaussian law, built on first use
    grid: OnceLock<LogGrid>,
}

/// `xi1` of Gamma(shape, 1), computed once per shape.
fn gamma_unit_xi1(shape: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("cache lock").get(&shape.to_bits()) {
        return *v;
    }
    let v = if shape == 1.0 { 4.0 / 3.0 } else { grid::gamma(shape).xi1() };
    cache.lock().expect("cache lock").insert(shape.to_bits(), v);
    v
}

fn gamma_unit_gmd(shape: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    2.0 * (ln_gamma(shape + 0.5) - ln_gamma(shape)).exp() / std::f64::consts::PI.sqrt()
}

impl TiltedLaw {
    fn grid(&self) -> &LogGrid {
        self.grid.get_or_init(|| match self.kind {
            Kind::Gamma { shape, .. } => grid::gamma(shape),
            Kind::InverseGaussian { mean, shape } => grid::inverse_gaussian(mean, shape),
            _ => unreachable!("only Gamma and inverse Gaussian laws use a lazily built grid"),
        })
    }

    /// `ln L(lambda)` of the base law at the tilt that produced this law.
    pub fn ln_laplace(&self) -> f64 {
        self.ln_laplace
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(v) => *v,
            Kind::Gamma { shape, scale } => shape * scale,
            Kind::Pareto(p) => p.mean()?,
            Kind::Table(t) => t.mean(),
            Kind::Grid(g) => g.mean(),
            Kind::InverseGaussian { mean, .. } => *mean,
        })
    }

    pub fn variance(&self) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(_) => 0.0,
            Kind::Gamma { shape, scale } => shape * scale * scale,
            Kind::Pareto(p) => p.variance()?,
            Kind::Table(t) => t.variance(),
            Kind::Grid(g) => g.variance(),
            Kind::InverseGaussian { mean, shape } => mean.powi(3) / shape,
        })
    }

    /// `E[X^k]`.
    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(v) => v.powi(k as i32),
            Kind::Gamma { shape, scale } => (0..k).map(|j| (shape + j as f64) * scale).product(),
            Kind::Pareto(p) => p.raw_moment(k)?,
            Kind::Table(t) => t.raw_moment(k),
            Kind::Grid(g) => g.raw_moment(k),
            Kind::InverseGaussian { mean, shape } => match k {
                0 => 1.0,
                1 => *mean,
                2 => mean * mean + mean.powi(3) / shape,
                3 => mean.powi(3) + 3.0 * mean.powi(4) / shape + 3.0 * mean.powi(5) / (shape * shape),
                _ => self.grid().raw_moment(k),
            },
        })
    }

    /// Gini mean difference `E|X1 - X2|`.
    pub fn gmd(&self) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(_) => 0.0,
            Kind::Gamma { shape, scale } => scale * gamma_unit_gmd(*shape),
            Kind::Pareto(p) => p.gmd()?,
            Kind::Table(t) => t.gmd(),
            Kind::Grid(g) => g.gmd(),
            Kind::InverseGaussian { .. } => self.grid().gmd(),
        })
    }

    /// `E|X1 - X2||X1 - X3|`.
    pub fn xi1(&self) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(_) => 0.0,
            Kind::Gamma { shape, scale } => scale * scale * gamma_unit_xi1(*shape),
            Kind::Pareto(p) => p.xi1()?,
            Kind::Table(t) => t.xi1(),
            Kind::Grid(g) => g.xi1(),
            Kind::InverseGaussian { .. } => self.grid().xi1(),
        })
    }

    /// `E[phi(X)]` for a smooth `phi`.
    pub fn expect(&self, phi: impl Fn(f64) -> f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(v) => phi(*v),
            Kind::Gamma { scale, .. } => self.grid().expect(|x| phi(scale * x)),
            Kind::Pareto(p) => {
                let xm = p.xm;
                p.integrate_s(|s| phi(xm * s.exp()))?
            }
            Kind::Table(t) => t.expect(phi),
            Kind::Grid(g) => g.expect(phi),
            Kind::InverseGaussian { .. } => self.grid().expect(phi),
        })
    }

    /// `E|x - X|`.
    pub fn abs_dev(&self, x: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(v) => (x - v).abs(),
            Kind::Gamma { shape, scale } => {
                // E (X - x)_+ = shape scale Q(shape+1, x/scale) - x Q(shape, x/scale)
                let t = x / scale;
                let excess = if t <= 0.0 { shape * scale - x } else { shape * scale * gamma_ur(shape + 1.0, t) - x * gamma_ur(*shape, t) };
                x - shape * scale + 2.0 * excess
            }
            Kind::Pareto(p) => p.abs_dev(x)?,
            Kind::Table(t) => t.abs_dev(x),
            Kind::Grid(g) => g.abs_dev(x),
            Kind::InverseGaussian { .. } => self.grid().abs_dev(x),
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            Kind::Point(v) => {
                if x >= *v {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Gamma { shape, scale } => 1.0 - gamma_ur(*shape, x / scale),
            Kind::Pareto(p) => p.cdf(x),
            Kind::Table(t) => t.cdf(x),
            Kind::Grid(g) => g.cdf(x),
            Kind::InverseGaussian { mean, shape } => ig_cdf(*mean, *shape, x),
        })
    }

    /// Smallest `x` with `F(x) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1], got {u}")));
        }
        Ok(match &self.kind {
            Kind::Point(v) => *v,
            Kind::Gamma { shape, scale } => {
                use statrs::distribution::{ContinuousCDF, Gamma};
                let g = Gamma::new(*shape, 1.0 / scale).map_err(|e| Error::Domain(e.to_string()))?;
                g.inverse_cdf(u)
            }
            Kind::Pareto(p) => p.quantile(u),
            Kind::Table(t) => t.quantile(u),
            Kind::Grid(g) => g.quantile(u),
            Kind::InverseGaussian { mean, shape } => {
                // bisection on the closed-form CDF
                let (mut lo, mut hi) = (0.0, *mean);
                while ig_cdf(*mean, *shape, hi) < u {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if ig_cdf(*mean, *shape, mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }

    /// One draw from the tilted law, sampling the closed tilted family where
    /// one exists and inverting the tilted CDF otherwise.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Point(v) => *v,
            Kind::Gamma { shape, scale } => rand_distr::Gamma::new(*shape, *scale)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng),
            Kind::InverseGaussian { mean, shape } => rand_distr::InverseGaussian::new(*mean, *shape)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng),
            _ => self.quantile(rng.random::<f64>())?,
        })
    }

    /// Support points and probabilities of a discrete law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            Kind::Point(v) => Some(vec![(*v, 1.0)]),
            Kind::Table(t) => Some(t.probs().iter().enumerate().map(|(k, &p)| (k as f64, p)).collect()),
            _ => None,
        }
    }
}
