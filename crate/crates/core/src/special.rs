//! Special functions not covered by `statrs`.
//!
//! The generalized exponential integral `E_p(z) = int_1^inf exp(-z t) t^(-p) dt`
//! carries every Pareto functional: the Laplace transform is `a E_(a+1)(z)`,
//! tilted raw moments are ratios of `E_p` values, and the tilted survival
//! function is `(x_m/x)^a E_(a+1)(lambda x) / E_(a+1)(lambda x_m)`. It is
//! related to the upper incomplete gamma function by
//! `Gamma(-a, z) = z^(-a) E_(a+1)(z)`.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_TERMS: usize = 60;

/// `zeta(k) - 1` for `k = 2..SERIES_TERMS+1`, via Euler-Maclaurin summation.
fn zeta_minus_one_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_2, B_4, ..., B_12
        const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
        let n_cut = 20.0_f64;
        (2..SERIES_TERMS + 2)
            .map(|k| {
                let k = k as f64;
                let mut sum: f64 = (2..20).map(|j| (j as f64).powf(-k)).sum();
                sum += n_cut.powf(1.0 - k) / (k - 1.0) + 0.5 * n_cut.powf(-k);
                let mut rising = k; // k (k+1) ... (k + 2m - 2)
                let mut fact = 2.0; // (2m)!
                for (m, b) in BERNOULLI.iter().enumerate() {
                    let m = m as f64 + 1.0;
                    sum += b / fact * rising * n_cut.powf(-k - 2.0 * m + 1.0);
                    rising *= (k + 2.0 * m - 1.0) * (k + 2.0 * m);
                    fact *= (2.0 * m + 1.0) * (2.0 * m + 2.0);
                }
                sum
            })
            .collect()
    })
}

/// `ln Gamma(1 + eps)`, accurate relative to its value for small `eps`.
pub fn ln_gamma_1p(eps: f64) -> f64 {
    if eps.abs() > 0.5 {
        return ln_gamma(1.0 + eps);
    }
    let table = zeta_minus_one_table();
    let mut sum = -eps.ln_1p() + eps * (1.0 - EULER_GAMMA);
    let mut power = -eps;
    for (i, z) in table.iter().enumerate() {
        let k = (i + 2) as f64;
        power *= -eps;
        let term = z * power / k;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `E_q(z)` for `q` in `[0.5, 1.5]` and `0 < z <= 2` by power series, with the
/// two singular pieces combined so the result stays accurate as `q -> 1`.
fn expint_series(q: f64, z: f64) -> f64 {
    let eps = 1.0 - q;
    let head = if eps == 0.0 {
        -EULER_GAMMA - z.ln()
    } else {
        (ln_gamma_1p(eps) - eps * z.ln()).exp_m1() / eps
    };
    let mut sum = 0.0;
    let mut term = 1.0; // (-z)^k / k!
    for k in 1..200 {
        let kf = k as f64;
        term *= -z / kf;
        let add = term / (kf + eps);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    head - sum
}

/// Continued fraction for `E_p(z) e^z`, valid for `z >= 1`.
fn expint_cf_scaled(p: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + p;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let a = -fi * (p - 1.0 + fi);
        b += 2.0;
        d = a * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Natural logarithm of the generalized exponential integral `E_p(z)`.
///
/// Defined for real `p` and `z > 0`; at `z = 0` returns `-ln(p - 1)` for
/// `p > 1` and `+inf` otherwise.
pub fn ln_expint(p: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if p > 1.0 { -(p - 1.0).ln() } else { f64::INFINITY };
    }
    if z > 1.0 {
        return expint_cf_scaled(p, z).ln() - z;
    }
    expint_small(p, z).ln()
}

/// `ln(E_p(z) e^z)`, finite for large `z` where `E_p` itself underflows.
pub fn ln_expint_scaled(p: f64, z: f64) -> f64 {
    if z > 1.0 {
        return expint_cf_scaled(p, z).ln();
    }
    ln_expint(p, z) + z
}

/// `E_p(z) - E_(p+1)(z)`, evaluated without cancellation for large `z`.
pub fn expint_step_diff(p: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if p > 1.0 { 1.0 / ((p - 1.0) * p) } else { f64::INFINITY };
    }
    if z > 1.0 {
        return (expint_cf_scaled(p, z) - expint_cf_scaled(p + 1.0, z)) * (-z).exp();
    }
    expint_small(p, z) - expint_small(p + 1.0, z)
}

/// Generalized exponential integral `E_p(z)`.
pub fn expint(p: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if p > 1.0 { 1.0 / (p - 1.0) } else { f64::INFINITY };
    }
    if z > 1.0 {
        return expint_cf_scaled(p, z) * (-z).exp();
    }
    expint_small(p, z)
}

fn expint_small(p: f64, z: f64) -> f64 {
    let ez = (-z).exp();
    if p >= 0.5 {
        let steps = (p - 0.5).floor();
        let mut q = p - steps;
        if q > 1.5 {
            q -= 1.0;
        }
        let mut e = expint_series(q, z);
        // upward recurrence E_(q+1) = (e^-z - z E_q) / q
        while q + 0.5 < p {
            e = (ez - z * e) / q;
            q += 1.0;
        }
        e
    } else {
        let steps = (0.5 - p).ceil();
        let mut q = p + steps;
        let mut e = expint_series(q, z);
        // downward recurrence E_(q-1) = (e^-z - (q-1) E_q) / z
        while q - 0.5 > p {
            e = (ez - (q - 1.0) * e) / z;
            q -= 1.0;
        }
        e
    }
}

/// Upper incomplete gamma `Gamma(-a, z) = int_z^inf t^(-a-1) e^-t dt` for `z > 0`.
pub fn upper_incomplete_gamma_neg(a: f64, z: f64) -> f64 {
    z.powf(-a) * expint(a + 1.0, z)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
