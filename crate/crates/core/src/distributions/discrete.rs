//! Integer-valued laws as truncated probability tables on `0, 1, 2, ...`.

// stop once the remaining tail mass is provably below this
const TAIL: f64 = 1e-19;
const MAX_LEN: usize = 50_000_000;

#[derive(Debug, Clone)]
pub(crate) struct PmfTable {
    p: Vec<f64>,
}

impl PmfTable {
    /// Builds `p_0, p_1, ...` from `ln p_0` and the ratio `p_(k+1) / p_k`.
    /// `ratio_limit` bounds the ratio from above for large `k`, which makes
    /// the geometric tail bound rigorous.
    pub(crate) fn from_ratios(ln_p0: f64, ratio: impl Fn(usize) -> f64, ratio_limit: f64, mean: f64) -> Self {
        let mut ln_p = Vec::new();
        let mut cur = ln_p0;
        let mut k = 0usize;
        let mut max = f64::NEG_INFINITY;
        loop {
            ln_p.push(cur);
            max = max.max(cur);
            let q = ratio(k);
            if q <= 0.0 {
                break;
            }
            let bound = q.max(ratio_limit);
            if k as f64 > mean && bound < 1.0 && cur + (bound / (1.0 - bound)).ln() < TAIL.ln() + max.min(0.0) {
                break;
            }
            if ln_p.len() >= MAX_LEN {
                break;
            }
            cur += q.ln();
            k += 1;
        }
        let mut p: Vec<f64> = ln_p.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        Self { p }
    }

    pub(crate) fn bernoulli(q: f64) -> Self {
        if q >= 1.0 {
            Self { p: vec![0.0, 1.0] }
        } else {
            Self { p: vec![1.0 - q, q] }
        }
    }

    pub(crate) fn poisson(mean: f64) -> Self {
        Self::from_ratios(-mean, |k| mean / (k as f64 + 1.0), 0.0, mean)
    }

    /// Failures before the `r`-th success, success probability `p`.
    pub(crate) fn negative_binomial(r: f64, p: f64) -> Self {
        let q = 1.0 - p;
        Self::from_ratios(r * p.ln(), |k| q * (k as f64 + r) / (k as f64 + 1.0), q, r * q / p)
    }

    pub(crate) fn probs(&self) -> &[f64] {
        &self.p
    }

    pub(crate) fn expect(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.p.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(k, &p)| p * phi(k as f64)).sum()
    }

    pub(crate) fn raw_moment(&self, k: u32) -> f64 {
        self.expect(|x| x.powi(k as i32))
    }

    pub(crate) fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub(crate) fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// `E|X1 - X2| = 2 sum_k F(k) (1 - F(k))` with the upper tail summed
    /// from the right.
    pub(crate) fn gmd(&self) -> f64 {
        let upper = self.suffix();
        let mut below = 0.0;
        let mut acc = 0.0;
        for (k, &p) in self.p.iter().enumerate() {
            below += p;
            acc += below * upper[k + 1];
        }
        2.0 * acc
    }

    // suffix[k] = P(X >= k)
    fn suffix(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.p.len() + 1];
        for k in (0..self.p.len()).rev() {
            s[k] = s[k + 1] + self.p[k];
        }
        s
    }

    /// `E|k - X|` for every support point.
    fn abs_devs(&self) -> Vec<f64> {
        let n = self.p.len();
        let mut above_p = vec![0.0; n + 1];
        let mut above_m = vec![0.0; n + 1];
        for k in (0..n).rev() {
            above_p[k] = above_p[k + 1] + self.p[k];
            above_m[k] = above_m[k + 1] + self.p[k] * k as f64;
        }
        let (mut below_p, mut below_m) = (0.0, 0.0);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let x = k as f64;
            out.push(x * below_p - below_m + above_m[k + 1] - x * above_p[k + 1]);
            below_p += self.p[k];
            below_m += self.p[k] * x;
        }
        out
    }

    pub(crate) fn xi1(&self) -> f64 {
        self.abs_devs().iter().zip(&self.p).map(|(m, p)| p * m * m).sum()
    }

    pub(crate) fn abs_dev(&self, x0: f64) -> f64 {
        self.expect(|x| (x - x0).abs())
    }

    pub(crate) fn cdf(&self, x0: f64) -> f64 {
        if x0 < 0.0 {
            return 0.0;
        }
        let k = (x0.floor() as usize).min(self.p.len() - 1);
        self.p[..=k].iter().sum::<f64>().min(1.0)
    }

    pub(crate) fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &p) in self.p.iter().enumerate() {
            acc += p;
            if acc >= u {
                return k as f64;
            }
        }
        (self.p.len() - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_table_moments() {
        let t = PmfTable::poisson(3.5);
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((t.mean() - 3.5).abs() < 1e-13);
        assert!((t.variance() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn negative_binomial_table_moments() {
        let (r, p) = (2.5, 0.3);
        let t = PmfTable::negative_binomial(r, p);
        assert!((t.mean() - r * (1.0 - p) / p).abs() < 1e-11);
        assert!((t.variance() - r * (1.0 - p) / (p * p)).abs() < 1e-9);
    }

    #[test]
    fn pairwise_functionals_match_double_sums() {
        let t = PmfTable::poisson(1.7);
        let p = t.probs();
        let (mut gmd, mut xi1) = (0.0, 0.0);
        for (i, &pi) in p.iter().enumerate() {
            let mut m = 0.0;
            for (j, &pj) in p.iter().enumerate() {
                let d = (i as f64 - j as f64).abs();
                gmd += pi * pj * d;
                m += pj * d;
            }
            xi1 += pi * m * m;
        }
        assert!((t.gmd() - gmd).abs() < 1e-13);
        assert!((t.xi1() - xi1).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_closed_forms() {
        let t = PmfTable::bernoulli(0.3);
        assert!((t.gmd() - 2.0 * 0.3 * 0.7).abs() < 1e-15);
        assert!((t.xi1() - 0.3 * 0.7).abs() < 1e-15);
    }
}
