//! Monotone piecewise cubic interpolation (Fritsch–Carlson).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    /// Knots must be strictly increasing in `x`. The interpolant preserves
    /// monotonicity of the data on every interval.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Config("interpolation needs at least two matching knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("knots must be finite with strictly increasing abscissae".into()));
        }
        let k = x.len();
        let delta: Vec<f64> = (0..k - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut m = vec![0.0; k];
        m[0] = delta[0];
        m[k - 1] = delta[k - 2];
        for i in 1..k - 1 {
            m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..k - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                m[i] = t * a * delta[i];
                m[i + 1] = t * b * delta[i];
            }
        }
        Ok(Self { x, y, slope: m })
    }

    /// Value at `t`, clamped to the end knots outside the range.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[k - 1] {
            return self.y[k - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.slope[i] + h01 * self.y[i + 1] + h11 * h * self.slope[i + 1]
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_knots_and_clamps() {
        let c = MonotoneCubic::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 2.5]).unwrap();
        assert_eq!(c.eval(0.0), 1.0);
        assert_eq!(c.eval(1.0), 2.0);
        assert_eq!(c.eval(3.0), 2.5);
        assert_eq!(c.eval(-4.0), 1.0);
        assert_eq!(c.eval(9.0), 2.5);
    }

    #[test]
    fn exact_on_lines() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let c = MonotoneCubic::new(x, y).unwrap();
        for i in 0..60 {
            let t = i as f64 * 0.1;
            assert!((c.eval(t) - (3.0 - 2.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn preserves_monotone_data(steps in prop::collection::vec((0.01f64..2.0, 0.0f64..3.0), 2..20), t in 0.0f64..1.0) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let c = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
            let span = *x.last().unwrap();
            let a = c.eval(t * span);
            let b = c.eval((t * span + 0.01).min(span));
            prop_assert!(b >= a - 1e-12);
            prop_assert!(a >= -1e-12 && a <= y.last().unwrap() + 1e-12);
        }
    }
}
