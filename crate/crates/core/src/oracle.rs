//! Ground truth for the engine: Monte Carlo replication, exact enumeration
//! for discrete laws, and Monte Carlo cross moments of tilted laws.
//!
//! Replications are split into chunks of [`CHUNK`] draws. Chunk `c` uses
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so results depend only on
//! `(seed, replications)` and not on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, SupportKind, TiltedLaw, TiltedView};
use crate::error::{Error, Result};
use crate::ratio::RatioStatistic;

pub const CHUNK: usize = 4096;
pub const MIN_REPLICATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(replications)`.
    pub std_error: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Streaming central moments up to order four, mergeable in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: f64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.merge(&Moments { count: 1.0, mean: x, ..Default::default() });
    }

    pub fn merge(&mut self, b: &Moments) {
        let a = *self;
        if b.count == 0.0 {
            return;
        }
        if a.count == 0.0 {
            *self = *b;
            return;
        }
        let n = a.count + b.count;
        let d = b.mean - a.mean;
        let (na, nb) = (a.count, b.count);
        let d_n = d / n;
        self.count = n;
        self.mean = a.mean + d * nb / n;
        self.m2 = a.m2 + b.m2 + d * d_n * na * nb;
        self.m3 = a.m3 + b.m3 + d * d_n * d_n * na * nb * (na - nb) + 3.0 * d_n * (na * b.m2 - nb * a.m2);
        self.m4 = a.m4
            + b.m4
            + d * d_n * d_n * d_n * na * nb * (na * na - na * nb + nb * nb)
            + 6.0 * d_n * d_n * (na * na * b.m2 + nb * nb * a.m2)
            + 4.0 * d_n * (na * b.m3 - nb * a.m3);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            self.m2 / (self.count - 1.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count).sqrt()
    }

    /// Large-sample standard error of [`Moments::variance`],
    /// `sqrt((mu4 - sigma^4) / N)`.
    pub fn variance_std_error(&self) -> f64 {
        let mu4 = self.m4 / self.count;
        let s2 = self.m2 / self.count;
        ((mu4 - s2 * s2).max(0.0) / self.count).sqrt()
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `draw_one` `replications` times across chunks and merges in chunk
/// order.
fn replicate<F>(replications: usize, seed: u64, draw_one: F) -> Result<Moments>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let chunks = replications.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = CHUNK.min(replications - c * CHUNK);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw_one(&mut rng)?);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

fn check_replications(replications: usize) -> Result<()> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::Config(format!("at least {MIN_REPLICATIONS} replications are required, got {replications}")));
    }
    Ok(())
}

fn estimate(m: &Moments, replications: usize, seed: u64) -> OracleEstimate {
    OracleEstimate { mean: m.mean, std_error: m.std_error(), replications, seed }
}

/// Mean and variance of `V` over replications of independent samples drawn
/// from `dists` (one law per coordinate).
pub fn mc_statistic_moments_independent(
    dists: &[DistributionSpec],
    stat: &RatioStatistic,
    replications: usize,
    seed: u64,
) -> Result<Moments> {
    check_replications(replications)?;
    if dists.is_empty() {
        return Err(Error::Config("at least one distribution is required".into()));
    }
    replicate(replications, seed, |rng| {
        let xs: Vec<f64> = dists.iter().map(|d| d.draw(rng)).collect();
        stat.evaluate(&xs)
    })
}

pub fn mc_statistic_moments(
    dist: &DistributionSpec,
    n: usize,
    stat: &RatioStatistic,
    replications: usize,
    seed: u64,
) -> Result<Moments> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    mc_statistic_moments_independent(&vec![*dist; n], stat, replications, seed)
}

/// Monte Carlo estimate of `E V` for `n` i.i.d. draws.
pub fn mc_expected_statistic(
    dist: &DistributionSpec,
    n: usize,
    stat: &RatioStatistic,
    replications: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    Ok(estimate(&mc_statistic_moments(dist, n, stat, replications, seed)?, replications, seed))
}

pub fn mc_expected_statistic_independent(
    dists: &[DistributionSpec],
    stat: &RatioStatistic,
    replications: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    Ok(estimate(&mc_statistic_moments_independent(dists, stat, replications, seed)?, replications, seed))
}

/// Exact expectation over a truncated discrete support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub value: f64,
    /// Bound on `|E V - value|` from the omitted support.
    pub truncation_bound: f64,
    /// Largest support point kept.
    pub support_max: f64,
    pub outcomes: u64,
}

pub const MAX_ENUMERATION_N: usize = 12;
const MAX_OUTCOMES: f64 = 5e7;

/// `E V` by summing over every outcome with all coordinates at most `K`,
/// where `K` is the smallest support point with
/// `n P(X > K) sup|V| <= truncation_mass_bound`. Symmetric statistics sum
/// over multisets with multinomial weights.
pub fn enumerate_expected_statistic(
    dist: &DistributionSpec,
    n: usize,
    stat: &RatioStatistic,
    truncation_mass_bound: f64,
) -> Result<Enumeration> {
    if dist.support_kind() != SupportKind::Discrete {
        return Err(Error::Capability(format!("enumeration needs a discrete law, got {dist}")));
    }
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(Error::Config(format!("enumeration supports 1 <= n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    if !(truncation_mass_bound >= 0.0) {
        return Err(Error::Config("truncation bound must be non-negative".into()));
    }
    let atoms = dist.tilt(0.0)?.law()?.atoms().ok_or_else(|| Error::Capability(format!("{dist} has no atom table")))?;
    let sup = stat.sup_bound(n);
    // suffix tails: tail[k] = P(X > x_k); the table itself stops where the
    // remaining mass is below 1e-19
    let kept_total: f64 = atoms.iter().map(|a| a.1).sum();
    let table_tail = (1.0 - kept_total).max(0.0);
    let mut tail = vec![0.0; atoms.len()];
    let mut acc = table_tail;
    for k in (0..atoms.len()).rev() {
        tail[k] = acc;
        acc += atoms[k].1;
    }
    let weight = sup.unwrap_or(1.0);
    let cut = (0..atoms.len())
        .find(|&k| n as f64 * tail[k] * weight <= truncation_mass_bound)
        .unwrap_or(atoms.len() - 1);
    let omitted = n as f64 * tail[cut];
    if sup.is_none() && omitted > 0.0 {
        return Err(Error::Refused(format!(
            "statistic has no known bound and truncation drops probability {omitted:e}; the remainder cannot be bounded"
        )));
    }
    let support = &atoms[..=cut];
    let m = support.len();
    let symmetric = stat.is_symmetric();
    let outcomes = if symmetric {
        // C(m + n - 1, n)
        (0..n).fold(1.0, |acc, i| acc * (m + i) as f64 / (i + 1) as f64)
    } else {
        (m as f64).powi(n as i32)
    };
    if outcomes > MAX_OUTCOMES {
        return Err(Error::Refused(format!("enumeration would visit {outcomes:e} outcomes")));
    }
    let ln_p: Vec<f64> = support.iter().map(|a| a.1.ln()).collect();
    let ln_fact: Vec<f64> = (0..=n).map(|k| (1..=k).map(|j| (j as f64).ln()).sum()).collect();
    let mut idx = vec![0usize; n];
    let mut xs = vec![0.0; n];
    let mut value = 0.0;
    let mut count = 0u64;
    loop {
        for (x, &i) in xs.iter_mut().zip(&idx) {
            *x = support[i].0;
        }
        let mut ln_w: f64 = idx.iter().map(|&i| ln_p[i]).sum();
        if symmetric {
            ln_w += ln_fact[n];
            let mut run = 1;
            for j in 1..=n {
                if j < n && idx[j] == idx[j - 1] {
                    run += 1;
                } else {
                    ln_w -= ln_fact[run];
                    run = 1;
                }
            }
        }
        if ln_w > -745.0 {
            value += ln_w.exp() * stat.evaluate(&xs)?;
        }
        count += 1;
        // next index tuple: non-decreasing tuples when symmetric
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(Enumeration {
                    value,
                    truncation_bound: omitted * weight,
                    support_max: support[m - 1].0,
                    outcomes: count,
                });
            }
            k -= 1;
            if idx[k] + 1 < m {
                idx[k] += 1;
                let v = if symmetric { idx[k] } else { 0 };
                for j in idx.iter_mut().skip(k + 1) {
                    *j = v;
                }
                break;
            }
        }
    }
}

/// Exact draws from a tilted law: rejection from the base law with
/// acceptance `exp(-lambda (x - x_min))`, or inverse-CDF sampling of the
/// tilted law when the acceptance rate is below [`TiltedSampler::MIN_ACCEPTANCE`].
#[derive(Debug, Clone)]
pub struct TiltedSampler {
    base: DistributionSpec,
    lambda: f64,
    x_min: f64,
    acceptance: f64,
    law: TiltedLaw,
}

impl TiltedSampler {
    pub const MIN_ACCEPTANCE: f64 = 1e-4;

    pub fn new(view: &TiltedView) -> Result<Self> {
        let x_min = view.base.support_min();
        let acceptance = (view.ln_laplace()? + view.lambda * x_min).exp();
        Ok(Self { base: view.base, lambda: view.lambda, x_min, acceptance, law: view.law()? })
    }

    /// Expected acceptance probability of the rejection path.
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn uses_rejection(&self) -> bool {
        self.acceptance >= Self::MIN_ACCEPTANCE
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if !self.uses_rejection() {
            return self.law.draw(rng);
        }
        loop {
            let x = self.base.draw(rng);
            if rng.random::<f64>() < (-self.lambda * (x - self.x_min)).exp() {
                return Ok(x);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossMoment {
    /// `E|X1 - X2|`
    Gmd,
    /// `E|X1 - X2||X1 - X3|`
    Xi1,
}

/// Monte Carlo estimate of a pair or triple moment of the tilted law.
pub fn mc_tilted_cross_moment(view: &TiltedView, which: CrossMoment, samples: usize, seed: u64) -> Result<OracleEstimate> {
    check_replications(samples)?;
    let sampler = TiltedSampler::new(view)?;
    let m = replicate(samples, seed, |rng| {
        let a = sampler.draw(rng)?;
        let b = sampler.draw(rng)?;
        Ok(match which {
            CrossMoment::Gmd => (a - b).abs(),
            CrossMoment::Xi1 => (a - b).abs() * (a - sampler.draw(rng)?).abs(),
        })
    })?;
    Ok(estimate(&m, samples, seed))
}
