//! Tilted Pareto functionals.
//!
//! With `z = lambda x_m` and `E_p` the generalized exponential integral:
//!
//! ```text
//! L(lambda)        = a E_(a+1)(z)
//! E[X^k]           = x_m^k E_(a+1-k)(z) / E_(a+1)(z)
//! S(x)             = (x_m/x)^a E_(a+1)(lambda x) / E_(a+1)(z)
//! int_x^inf S(t)dt = x_m (x_m/x)^(a-1) (E_a - E_(a+1))(lambda x) / E_(a+1)(z)
//! ```
//!
//! Remaining one-dimensional integrals run in `s = ln(x / x_m)`, where the
//! tilted density is `exp(-a s - z e^s) / E_(a+1)(z)`.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_power_weight_scaled, QuadratureConfig};
use crate::special::{expint_step_diff, ln_expint, ln_expint_scaled};

#[derive(Debug, Clone, Copy)]
pub(crate) struct TiltedPareto {
    pub shape: f64,
    pub xm: f64,
    pub lambda: f64,
    z: f64,
    // ln(E_(a+1)(z) e^z)
    ln_norm: f64,
}

fn inner_config() -> QuadratureConfig {
    QuadratureConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-300).with_max_subdivisions(400)
}

impl TiltedPareto {
    pub(crate) fn new(shape: f64, xm: f64, lambda: f64) -> Self {
        let z = lambda * xm;
        Self { shape, xm, lambda, z, ln_norm: ln_expint_scaled(shape + 1.0, z) }
    }

    fn infinite(&self, what: &str) -> Error {
        Error::Capability(format!("{what} of pareto(shape={}) is infinite without tilting", self.shape))
    }

    /// Log density in `s` relative to the tilted normalization.
    fn ln_density_s(&self, s: f64) -> f64 {
        -self.shape * s - self.tilt_term(s) - self.ln_norm
    }

    // z (e^s - 1), kept finite when z = 0
    fn tilt_term(&self, s: f64) -> f64 {
        if self.z == 0.0 {
            0.0
        } else {
            self.z * s.exp_m1()
        }
    }

    /// `int_0^inf g(s) density(s) ds`.
    pub(crate) fn integrate_s(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        self.integrate_weighted(|s| {
            let d = self.ln_density_s(s);
            if d < -745.0 {
                0.0
            } else {
                g(s) * d.exp()
            }
        })
    }

    /// `int_0^inf exp(ln_g(s)) density(s) ds` for a non-negative integrand
    /// that may be too large to represent on its own.
    fn integrate_s_ln(&self, ln_g: impl Fn(f64) -> f64) -> Result<f64> {
        self.integrate_weighted(|s| {
            let d = self.ln_density_s(s);
            if d < -1e4 {
                return 0.0;
            }
            let v = ln_g(s) + d;
            if v < -745.0 {
                0.0
            } else {
                v.exp()
            }
        })
    }

    fn integrate_weighted(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let width = 1.0 / (self.shape + self.z);
        Ok(integrate_with_power_weight_scaled(f, 1.0, width, &inner_config())?.value)
    }

    pub(crate) fn survival(&self, x: f64) -> f64 {
        if x <= self.xm {
            return 1.0;
        }
        let s = (x / self.xm).ln();
        self.ln_survival_s(s).exp()
    }

    fn ln_survival_s(&self, s: f64) -> f64 {
        // E_p(w) e^w <= 1/(p-1) bounds the survival function before w overflows
        let head = -self.shape * s - self.tilt_term(s) - self.ln_norm;
        if head - self.shape.ln() < -800.0 {
            return f64::NEG_INFINITY;
        }
        let w = if self.z == 0.0 { 0.0 } else { self.z * s.exp() };
        head + ln_expint_scaled(self.shape + 1.0, w)
    }

    /// `int_x^inf S(t) dt` for `x >= x_m`.
    fn tail_integral(&self, x: f64) -> f64 {
        let a = self.shape;
        let w = self.lambda * x;
        let d = expint_step_diff(a, w);
        // E_(a+1)(z) = exp(ln_norm - z)
        self.xm * (self.xm / x).powf(a - 1.0) * d * (self.z - self.ln_norm).exp()
    }

    pub(crate) fn mean(&self) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(self.shape * self.xm / (self.shape - 1.0));
        }
        Ok(self.xm + self.tail_integral(self.xm))
    }

    pub(crate) fn raw_moment(&self, k: u32) -> Result<f64> {
        let p = self.shape + 1.0 - k as f64;
        if self.lambda == 0.0 && p <= 1.0 {
            return Err(self.infinite(&format!("raw moment {k}")));
        }
        let ln = ln_expint(p, self.z) - ln_expint(self.shape + 1.0, self.z);
        Ok(self.xm.powi(k as i32) * ln.exp())
    }

    pub(crate) fn variance(&self) -> Result<f64> {
        if self.lambda == 0.0 {
            let a = self.shape;
            if a <= 2.0 {
                return Err(self.infinite("variance"));
            }
            return Ok(a * self.xm * self.xm / ((a - 1.0).powi(2) * (a - 2.0)));
        }
        let m1 = self.mean()?;
        let m2 = self.raw_moment(2)?;
        let quick = m2 - m1 * m1;
        if quick > 1e-3 * m2 {
            return Ok(quick);
        }
        let excess = m1 - self.xm;
        let xm = self.xm;
        self.integrate_s_ln(|s| {
            if s > 300.0 {
                return 2.0 * (xm.ln() + s);
            }
            2.0 * (xm * s.exp_m1() - excess).abs().ln()
        })
    }

    /// `E|X1 - X2| = 2 int S (1 - S) dx`.
    pub(crate) fn gmd(&self) -> Result<f64> {
        if self.lambda == 0.0 {
            let a = self.shape;
            return Ok(2.0 * a * self.xm / ((a - 1.0) * (2.0 * a - 1.0)));
        }
        let r = self.integrate_weighted(|s| {
            let ln_s = self.ln_survival_s(s);
            if ln_s + s < -745.0 {
                return 0.0;
            }
            // S (1 - S) e^s
            (ln_s + s).exp() * -ln_s.exp_m1()
        })?;
        Ok(2.0 * self.xm * r)
    }

    /// `E|x - X|`.
    pub(crate) fn abs_dev(&self, x: f64) -> Result<f64> {
        let mean = self.mean()?;
        if x <= self.xm {
            return Ok(mean - x);
        }
        Ok(x - mean + 2.0 * self.tail_integral(x))
    }

    /// `E|X1 - X2||X1 - X3| = E m(X)^2` with `m(x) = E|x - X|`.
    pub(crate) fn xi1(&self) -> Result<f64> {
        if self.lambda == 0.0 && self.shape <= 2.0 {
            return Err(self.infinite("xi1"));
        }
        let mean = self.mean()?;
        let xm = self.xm;
        self.integrate_s_ln(|s| {
            // far in the tail m(x) = x to working precision
            if s > 300.0 {
                return 2.0 * (xm.ln() + s);
            }
            let m = if s == 0.0 { mean - xm } else { xm * s.exp() - mean + 2.0 * self.tail_integral(xm * s.exp()) };
            2.0 * m.abs().ln()
        })
    }

    pub(crate) fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Inverse of the tilted CDF by bisection in `s`.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.xm;
        }
        if self.lambda == 0.0 {
            return self.xm * (1.0 - u).powf(-1.0 / self.shape);
        }
        let target = 1.0 - u;
        let (mut lo, mut hi) = (0.0, 1.0 / (self.shape + self.z));
        while self.ln_survival_s(hi).exp() > target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                break;
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.ln_survival_s(mid).exp() > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        self.xm * (0.5 * (lo + hi)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_interval, integrate_semi_infinite};

    // plain quadrature of the tilted density e^{-lambda x} a x^{-a-1} on [1, inf)
    fn tilted_expect(a: f64, lambda: f64, phi: impl Fn(f64) -> f64) -> f64 {
        let cfg = QuadratureConfig::default().with_rel_tol(1e-13).with_abs_tol(1e-300);
        let dens = |x: f64| (-lambda * x).exp() * a * x.powf(-a - 1.0);
        let norm = integrate_semi_infinite(|t| dens(1.0 + t), &cfg).unwrap().value;
        integrate_semi_infinite(|t| dens(1.0 + t) * phi(1.0 + t), &cfg).unwrap().value / norm
    }

    #[test]
    fn moments_match_direct_quadrature() {
        for &(a, lambda) in &[(1.5, 0.5), (2.0, 0.1), (3.0, 2.0), (1.05, 0.01), (2.5, 30.0)] {
            let p = TiltedPareto::new(a, 1.0, lambda);
            let mean = tilted_expect(a, lambda, |x| x);
            assert!(((p.mean().unwrap() - mean) / mean).abs() < 1e-10, "a={a} l={lambda}");
            let var = tilted_expect(a, lambda, |x| (x - mean) * (x - mean));
            assert!(((p.variance().unwrap() - var) / var).abs() < 1e-8, "a={a} l={lambda}: {} vs {var}", p.variance().unwrap());
            let m3 = tilted_expect(a, lambda, |x| x * x * x);
            assert!(((p.raw_moment(3).unwrap() - m3) / m3).abs() < 1e-9, "a={a} l={lambda}");
        }
    }

    #[test]
    fn gmd_matches_survival_integral() {
        let (a, lambda) = (2.0, 0.5);
        let p = TiltedPareto::new(a, 1.0, lambda);
        let cfg = QuadratureConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-300);
        let dens = |x: f64| (-lambda * x).exp() * a * x.powf(-a - 1.0);
        let norm = integrate_semi_infinite(|t| dens(1.0 + t), &cfg).unwrap().value;
        let surv = |x: f64| integrate_semi_infinite(|t| dens(x + t), &cfg).unwrap().value / norm;
        // 2 int F (1 - F) dx, the tail beyond 80 is below 1e-30
        let direct = 2.0 * integrate_interval(|x| surv(x) * (1.0 - surv(x)), 1.0, 80.0, &cfg.with_rel_tol(1e-10)).unwrap().value;
        assert!(((p.gmd().unwrap() - direct) / direct).abs() < 1e-9, "{} vs {direct}", p.gmd().unwrap());
        // untilted closed form 2 a x_m / ((a-1)(2a-1))
        let p0 = TiltedPareto::new(3.0, 2.0, 1e-9);
        assert!((p0.gmd().unwrap() - 2.0 * 3.0 * 2.0 / (2.0 * 5.0)).abs() < 1e-6);
    }

    #[test]
    fn abs_dev_matches_quadrature() {
        let (a, lambda) = (1.7, 0.8);
        let p = TiltedPareto::new(a, 1.0, lambda);
        for &x in &[0.5, 1.0, 1.3, 4.0] {
            let want = tilted_expect(a, lambda, |t| (t - x).abs());
            assert!((p.abs_dev(x).unwrap() - want).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let p = TiltedPareto::new(2.5, 1.0, 0.7);
        for &u in &[0.01, 0.3, 0.9, 0.999] {
            let x = p.quantile(u);
            assert!((p.cdf(x) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn untilted_xi1_is_finite_above_two() {
        // m(x) = x - mu + 2 x_m^a x^(1-a) / (a-1) at lambda = 0
        let a = 3.0;
        let mu = 1.5;
        let cfg = QuadratureConfig::default().with_rel_tol(1e-13).with_abs_tol(1e-300);
        // in s = ln x the density is a e^(-a s); factor x out of m(x)
        let direct = integrate_semi_infinite(
            |s| {
                let r = 1.0 - mu * (-s).exp() + 2.0 * (-a * s).exp() / (a - 1.0);
                a * r * r * ((2.0 - a) * s).exp()
            },
            &cfg,
        )
        .unwrap()
        .value;
        let got = TiltedPareto::new(a, 1.0, 0.0).xi1().unwrap();
        assert!(((got - direct) / direct).abs() < 1e-9, "{got} vs {direct}");
    }

    #[test]
    fn untilted_heavy_moments_are_refused() {
        let p = TiltedPareto::new(1.8, 1.0, 0.0);
        assert!(matches!(p.variance(), Err(Error::Capability(_))));
        assert!(matches!(p.xi1(), Err(Error::Capability(_))));
    }
}
