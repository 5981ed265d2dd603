//! The tilting engine for `E[T(X) / S_n^a]`.
//!
//! For independent non-negative `X_i` with Laplace transforms `L_i`,
//!
//! ```text
//! E V = 1/Gamma(a) int_0^inf lambda^(a-1) prod_i L_i(lambda) E_tilted[T] dlambda
//!       + r prod_i P(X_i = 0)
//! ```
//!
//! where `E_tilted` is the expectation under the product of the tilted laws.
//! Equal components are grouped so the work per `lambda` node depends on the
//! number of distinct laws, not on `n`.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, TiltedLaw, TiltedView};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_power_weight_scaled, QuadratureConfig};

/// Symmetric pair function `h(x, y)`.
#[derive(Clone)]
pub enum PairKernel {
    /// `|x - y|`
    AbsDiff,
    /// `(x - y)^2`
    SqDiff,
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for PairKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AbsDiff => f.write_str("AbsDiff"),
            Self::SqDiff => f.write_str("SqDiff"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PairKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::AbsDiff => (x - y).abs(),
            Self::SqDiff => (x - y) * (x - y),
            Self::Custom(h) => h(x, y),
        }
    }
}

/// One distinct law of the sample at a fixed tilt.
pub struct TiltedComponent<'a> {
    pub view: TiltedView,
    pub law: &'a TiltedLaw,
    pub multiplicity: usize,
}

pub type CustomTilted = Arc<dyn Fn(&[TiltedComponent<'_>]) -> Result<f64> + Send + Sync>;
pub type SampleKernel = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The numerator `T` of a self-normalized statistic.
#[derive(Clone)]
pub enum TKernel {
    /// `(sum_{i != j} h(X_i, X_j))^degree` over ordered pairs, degree 1 or 2.
    PairwiseUStat { h: PairKernel, degree: u32 },
    /// `sum_i phi(X_i)`.
    SingleSum(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// `S_n^k`.
    SumPower(u32),
    /// `X_i` (zero-based).
    Coordinate(usize),
    /// Caller-supplied tilted expectation, with an optional evaluator on
    /// concrete samples for the Monte Carlo oracle.
    Custom { tilted: CustomTilted, sample: Option<SampleKernel> },
}

impl fmt::Debug for TKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PairwiseUStat { h, degree } => write!(f, "PairwiseUStat {{ h: {h:?}, degree: {degree} }}"),
            Self::SingleSum(_) => f.write_str("SingleSum(..)"),
            Self::SumPower(k) => write!(f, "SumPower({k})"),
            Self::Coordinate(i) => write!(f, "Coordinate({i})"),
            Self::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// Sum of `|x_i - x_j|` over ordered pairs `i != j`, from the sorted sample:
/// `2 sum_i (2i - n - 1) x_(i)` with one-based ranks.
pub fn pairwise_abs_sum(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    2.0 * v.iter().enumerate().map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x).sum::<f64>()
}

/// Sum of `(x_i - x_j)^2` over ordered pairs, `2 (n sum x^2 - S^2)`, computed
/// from deviations about the mean.
pub fn pairwise_sq_sum(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    2.0 * n * xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
}

impl TKernel {
    /// `T(x)` on a concrete sample.
    pub fn evaluate(&self, xs: &[f64]) -> Result<f64> {
        Ok(match self {
            Self::PairwiseUStat { h, degree } => {
                let sum = match h {
                    PairKernel::AbsDiff => pairwise_abs_sum(xs),
                    PairKernel::SqDiff => pairwise_sq_sum(xs),
                    PairKernel::Custom(_) => {
                        let mut acc = 0.0;
                        for (i, &x) in xs.iter().enumerate() {
                            for (j, &y) in xs.iter().enumerate() {
                                if i != j {
                                    acc += h.eval(x, y);
                                }
                            }
                        }
                        acc
                    }
                };
                sum.powi(*degree as i32)
            }
            Self::SingleSum(phi) => xs.iter().map(|&x| phi(x)).sum(),
            Self::SumPower(k) => xs.iter().sum::<f64>().powi(*k as i32),
            Self::Coordinate(i) => *xs
                .get(*i)
                .ok_or_else(|| Error::Config(format!("coordinate {i} outside a sample of size {}", xs.len())))?,
            Self::Custom { sample, .. } => match sample {
                Some(f) => f(xs),
                None => return Err(Error::Capability("custom kernel has no sample evaluator".into())),
            },
        })
    }

    fn is_symmetric(&self) -> bool {
        !matches!(self, Self::Coordinate(_))
    }
}

/// `V = factor * T(X) / S_n^power`, and `V = fallback_r` when `S_n = 0`.
#[derive(Debug, Clone)]
pub struct RatioStatistic {
    pub kernel: TKernel,
    pub power: f64,
    pub fallback_r: f64,
    /// Constant multiplier on `T`; 1 unless a named statistic needs it.
    pub factor: f64,
}

impl RatioStatistic {
    pub fn new(kernel: TKernel, power: f64, fallback_r: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Config(format!("power must be positive, got {power}")));
        }
        if !(fallback_r >= 0.0 && fallback_r.is_finite()) {
            return Err(Error::Config(format!("fallback value r must be finite and non-negative, got {fallback_r}")));
        }
        match &kernel {
            TKernel::PairwiseUStat { degree, .. } if !(1..=2).contains(degree) => {
                return Err(Error::Config(format!("pairwise kernels support degree 1 or 2, got {degree}")));
            }
            TKernel::SumPower(0) => return Err(Error::Config("sum power must be at least 1".into())),
            _ => {}
        }
        Ok(Self { kernel, power, fallback_r, factor: 1.0 })
    }

    pub fn with_factor(mut self, factor: f64) -> Self {
        self.factor = factor;
        self
    }

    /// Sample Gini coefficient `sum_{i != j} |X_i - X_j| / (2 (n-1) S_n)`.
    pub fn gini(n: usize, r: f64) -> Result<Self> {
        let k = Self::new(TKernel::PairwiseUStat { h: PairKernel::AbsDiff, degree: 1 }, 1.0, r)?;
        Ok(k.with_factor(1.0 / (2.0 * (n.max(2) - 1) as f64)))
    }

    /// Square of the sample Gini coefficient.
    pub fn gini_squared(n: usize, r: f64) -> Result<Self> {
        let k = Self::new(TKernel::PairwiseUStat { h: PairKernel::AbsDiff, degree: 2 }, 2.0, r * r)?;
        let c = 2.0 * (n.max(2) - 1) as f64;
        Ok(k.with_factor(1.0 / (c * c)))
    }

    /// Sample squared coefficient of variation `s^2 / mean^2` with the
    /// unbiased sample variance.
    pub fn scv(n: usize, r: f64) -> Result<Self> {
        let k = Self::new(TKernel::PairwiseUStat { h: PairKernel::SqDiff, degree: 1 }, 2.0, r)?;
        let n = n.max(2) as f64;
        Ok(k.with_factor(n / (2.0 * (n - 1.0))))
    }

    /// `V(x)` on a concrete sample.
    pub fn evaluate(&self, xs: &[f64]) -> Result<f64> {
        let s: f64 = xs.iter().sum();
        if s == 0.0 {
            return Ok(self.fallback_r);
        }
        Ok(self.factor * self.kernel.evaluate(xs)? / s.powf(self.power))
    }

    pub fn is_symmetric(&self) -> bool {
        self.kernel.is_symmetric()
    }

    /// A bound on `|V|` over all non-negative samples of size `n`, when one
    /// is known.
    pub fn sup_bound(&self, n: usize) -> Option<f64> {
        let m = (n.max(1) - 1) as f64;
        let t = match (&self.kernel, self.power) {
            (TKernel::PairwiseUStat { h: PairKernel::AbsDiff, degree: 1 }, p) if p == 1.0 => 2.0 * m,
            (TKernel::PairwiseUStat { h: PairKernel::AbsDiff, degree: 2 }, p) if p == 2.0 => 4.0 * m * m,
            (TKernel::PairwiseUStat { h: PairKernel::SqDiff, degree: 1 }, p) if p == 2.0 => 2.0 * m,
            (TKernel::SumPower(k), p) if p == *k as f64 => 1.0,
            (TKernel::Coordinate(_), p) if p == 1.0 => 1.0,
            _ => return None,
        };
        Some((self.factor.abs() * t).max(self.fallback_r))
    }
}

/// An engine evaluation with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub value: f64,
    pub quadrature_error: f64,
    /// `r prod_i P(X_i = 0)`.
    pub atom_term: f64,
    pub integral_part: f64,
    pub converged: bool,
    /// Integrand evaluations spent by the quadrature.
    pub evaluations: usize,
}

struct Group {
    dist: DistributionSpec,
    count: usize,
}

fn group(dists: &[DistributionSpec]) -> (Vec<Group>, Vec<usize>) {
    let mut groups: Vec<Group> = Vec::new();
    let mut index = Vec::with_capacity(dists.len());
    for d in dists {
        match groups.iter().position(|g| g.dist == *d) {
            Some(k) => {
                groups[k].count += 1;
                index.push(k);
            }
            None => {
                index.push(groups.len());
                groups.push(Group { dist: *d, count: 1 });
            }
        }
    }
    (groups, index)
}

/// `E V` for `n` i.i.d. draws from `dist`.
pub fn expected_ratio_iid(
    dist: &DistributionSpec,
    n: usize,
    stat: &RatioStatistic,
    config: &QuadratureConfig,
) -> Result<MomentResult> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let groups = vec![Group { dist: *dist, count: n }];
    evaluate(&groups, &vec![0; n], stat, config)
}

/// `E V` for independent, not necessarily identical observations.
pub fn expected_ratio_independent(
    dists: &[DistributionSpec],
    stat: &RatioStatistic,
    config: &QuadratureConfig,
) -> Result<MomentResult> {
    if dists.is_empty() {
        return Err(Error::Config("at least one distribution is required".into()));
    }
    let (groups, index) = group(dists);
    evaluate(&groups, &index, stat, config)
}

fn cross_abs(a: &TiltedLaw, b: &TiltedLaw) -> Result<f64> {
    // E|Xa - Xb| = E_a m_b(Xa) with m_b(x) = E|x - Xb|; sum over atoms when possible
    let (outer, inner) = if a.atoms().is_some() || b.atoms().is_none() { (a, b) } else { (b, a) };
    if let Some(atoms) = outer.atoms() {
        let mut acc = 0.0;
        for (x, p) in atoms {
            if p > 0.0 {
                acc += p * inner.abs_dev(x)?;
            }
        }
        return Ok(acc);
    }
    let failure = RefCell::new(None);
    let v = outer.expect(|x| match inner.abs_dev(x) {
        Ok(m) => m,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    })?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn pair_expectation(h: &PairKernel, a: &TiltedLaw, b: &TiltedLaw, same: bool) -> Result<f64> {
    match h {
        PairKernel::AbsDiff => {
            if same {
                a.gmd()
            } else {
                cross_abs(a, b)
            }
        }
        PairKernel::SqDiff => {
            if same {
                Ok(2.0 * a.variance()?)
            } else {
                let d = a.mean()? - b.mean()?;
                Ok(a.variance()? + b.variance()? + d * d)
            }
        }
        PairKernel::Custom(f) => match (a.atoms(), b.atoms()) {
            (Some(xa), Some(xb)) => {
                let mut acc = 0.0;
                for &(x, p) in &xa {
                    for &(y, q) in &xb {
                        acc += p * q * f(x, y);
                    }
                }
                Ok(acc)
            }
            _ => Err(Error::Capability("custom pair kernels are supported for discrete laws only".into())),
        },
    }
}

/// Raw moments `E S^j`, `j = 0..=k`, of a sum of independent groups via
/// cumulants, so the cost does not depend on the multiplicities.
fn sum_moments(laws: &[(TiltedLaw, usize)], k: usize) -> Result<Vec<f64>> {
    let binom = |n: usize, r: usize| -> f64 { (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let mut kappa = vec![0.0; k + 1];
    for (law, count) in laws {
        let m: Vec<f64> = (0..=k as u32).map(|j| law.raw_moment(j)).collect::<Result<_>>()?;
        let mut c = vec![0.0; k + 1];
        for n in 1..=k {
            let mut v = m[n];
            for j in 1..n {
                v -= binom(n - 1, j - 1) * c[j] * m[n - j];
            }
            c[n] = v;
        }
        for j in 1..=k {
            kappa[j] += *count as f64 * c[j];
        }
    }
    let mut mu = vec![1.0; k + 1];
    for n in 1..=k {
        mu[n] = (0..n).map(|j| binom(n - 1, j) * kappa[j + 1] * mu[n - 1 - j]).sum();
    }
    Ok(mu)
}

fn tilted_expectation(
    kernel: &TKernel,
    groups: &[Group],
    index: &[usize],
    laws: &[(TiltedLaw, usize)],
    lambda: f64,
) -> Result<f64> {
    let n = index.len() as f64;
    match kernel {
        TKernel::SumPower(k) => Ok(sum_moments(laws, *k as usize)?[*k as usize]),
        TKernel::Coordinate(i) => {
            let g = *index.get(*i).ok_or_else(|| Error::Config(format!("coordinate {i} outside a sample of size {n}")))?;
            laws[g].0.mean()
        }
        TKernel::SingleSum(phi) => {
            let mut acc = 0.0;
            for (law, c) in laws {
                acc += *c as f64 * law.expect(|x| phi(x))?;
            }
            Ok(acc)
        }
        TKernel::PairwiseUStat { h, degree: 1 } => {
            let mut acc = 0.0;
            for (a, (la, ca)) in laws.iter().enumerate() {
                let ca = *ca as f64;
                if ca > 1.0 {
                    acc += ca * (ca - 1.0) * pair_expectation(h, la, la, true)?;
                }
                for (lb, cb) in laws.iter().skip(a + 1) {
                    acc += 2.0 * ca * *cb as f64 * pair_expectation(h, la, lb, false)?;
                }
            }
            Ok(acc)
        }
        TKernel::PairwiseUStat { h, .. } => {
            if laws.len() != 1 {
                return Err(Error::Capability("second-degree pairwise kernels need identically distributed observations".into()));
            }
            let law = &laws[0].0;
            let w2 = 2.0 * n * (n - 1.0);
            let w1 = 4.0 * n * (n - 1.0) * (n - 2.0);
            let w0 = n * (n - 1.0) * (n - 2.0) * (n - 3.0);
            match h {
                PairKernel::AbsDiff => {
                    let mut v = w2 * 2.0 * law.variance()?;
                    if n >= 3.0 {
                        v += w1 * law.xi1()?;
                    }
                    if n >= 4.0 {
                        v += w0 * law.gmd()?.powi(2);
                    }
                    Ok(v)
                }
                PairKernel::SqDiff => {
                    let m1 = law.mean()?;
                    let var = law.variance()?;
                    let mu4 = law.expect(|x| (x - m1).powi(4))?;
                    let s4 = var * var;
                    Ok(w2 * (2.0 * mu4 + 6.0 * s4) + w1 * (mu4 + 3.0 * s4) + w0 * 4.0 * s4)
                }
                PairKernel::Custom(_) => Err(Error::Capability("custom pair kernels support degree 1 only".into())),
            }
        }
        TKernel::Custom { tilted, .. } => {
            let comps: Vec<TiltedComponent<'_>> = groups
                .iter()
                .zip(laws)
                .map(|(g, (law, c))| TiltedComponent { view: TiltedView { base: g.dist, lambda }, law, multiplicity: *c })
                .collect();
            tilted(&comps)
        }
    }
}

fn evaluate(groups: &[Group], index: &[usize], stat: &RatioStatistic, config: &QuadratureConfig) -> Result<MomentResult> {
    config.validate()?;
    let n = index.len();
    let ln_p0: f64 = groups.iter().map(|g| g.count as f64 * g.dist.zero_mass().ln()).sum();
    let atom_term = if stat.fallback_r == 0.0 { 0.0 } else { stat.fallback_r * ln_p0.exp() };
    if n == 1 && matches!(stat.kernel, TKernel::PairwiseUStat { .. }) {
        return Ok(MomentResult {
            value: atom_term,
            quadrature_error: 0.0,
            atom_term,
            integral_part: 0.0,
            converged: true,
            evaluations: 0,
        });
    }
    let total_mean: f64 = groups.iter().map(|g| g.count as f64 * g.dist.mean()).sum();
    let scale = if total_mean > 0.0 { 1.0 / total_mean } else { 1.0 };

    let integrand_at = |lambda: f64| -> Result<f64> {
        if lambda.is_infinite() {
            // the tilted laws collapse onto zero, where T vanishes
            return Ok(0.0);
        }
        let mut ln_l = 0.0;
        let mut laws = Vec::with_capacity(groups.len());
        for g in groups {
            let law = g.dist.tilt(lambda)?.law()?;
            ln_l += g.count as f64 * law.ln_laplace();
            laws.push((law, g.count));
        }
        if ln_l < -745.0 {
            return Ok(0.0);
        }
        let t = tilted_expectation(&stat.kernel, groups, index, &laws, lambda)?;
        Ok(stat.factor * ln_l.exp() * t)
    };
    // surface capability errors before integrating
    integrand_at(scale)?;

    let failure = RefCell::new(None);
    let result = integrate_with_power_weight_scaled(
        |lambda| match integrand_at(lambda) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        stat.power,
        scale,
        config,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let r = result?;
    Ok(MomentResult {
        value: r.value + atom_term,
        quadrature_error: r.error_estimate,
        atom_term,
        integral_part: r.value,
        converged: r.converged,
        evaluations: r.evaluations,
    })
}

/// One row of [`sanity_identity_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityCase {
    pub label: String,
    pub value: f64,
    pub expected: f64,
    pub quadrature_error: f64,
    pub pass: bool,
}

/// Runs the identities `E[S^k / S^k] = 1 - (1 - r) P(S = 0)` and
/// `E[X_1 / S] = (1 - P(S = 0)) / n + r P(S = 0)`.
pub fn sanity_identity_suite(dist: &DistributionSpec, n: usize, k: u32, r: f64, tol: f64) -> Result<Vec<SanityCase>> {
    if !(1..=3).contains(&k) {
        return Err(Error::Config(format!("identity power must be 1, 2 or 3, got {k}")));
    }
    let config = QuadratureConfig::default();
    let p0n = dist.zero_mass().powi(n as i32);
    let mut out = Vec::new();
    let mut run = |label: String, stat: RatioStatistic, expected: f64| -> Result<()> {
        let m = expected_ratio_iid(dist, n, &stat, &config)?;
        out.push(SanityCase {
            label,
            value: m.value,
            expected,
            quadrature_error: m.quadrature_error,
            pass: (m.value - expected).abs() <= tol && m.converged,
        });
        Ok(())
    };
    run(format!("S^{k}/S^{k}"), RatioStatistic::new(TKernel::SumPower(k), k as f64, r)?, 1.0 - (1.0 - r) * p0n)?;
    run(
        "X1/S".to_string(),
        RatioStatistic::new(TKernel::Coordinate(0), 1.0, r)?,
        (1.0 - p0n) / n as f64 + r * p0n,
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests;
