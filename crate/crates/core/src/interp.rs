//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch–Carlson).

/// Monotone cubic interpolant through `(x_i, y_i)`. Monotone data yields a
/// monotone interpolant, so a nondecreasing table never produces a negative
/// derivative between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// Knots must be strictly increasing and at least two.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];

        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Self { x, y, d };
        }

        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Self { x, y, d }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        }
    }

    /// Value and derivative at `t`; outside the knot range the end cubic is extended.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = (self.d[i], self.d[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1;
        let slope = (6.0 * s2 - 6.0 * s) / h * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) / h * y1
            + (3.0 * s2 - 2.0 * s) * d1;
        (value, slope)
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots() {
        let x = vec![0.0, 0.5, 1.0, 2.0, 3.5];
        let y = vec![0.0, 0.2, 0.9, 1.0, 4.0];
        let m = MonotoneCubic::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.eval(*xi).0 - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn monotone_data_has_nonnegative_slope() {
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.3).collect();
        let y = vec![0.0, 0.0, 0.1, 0.1, 0.1, 2.0, 2.0, 2.1, 5.0, 5.0, 5.0, 5.5];
        let m = MonotoneCubic::new(x, y);
        for i in 0..=1000 {
            let t = i as f64 * 3.3 / 1000.0;
            assert!(m.eval(t).1 >= -1e-14, "slope at {t}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64).powf(1.3) * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sinh()).collect();
        let m = MonotoneCubic::new(x, y);
        let h = 1e-6;
        for t in [0.05, 0.33, 1.1, 2.0] {
            let fd = (m.eval(t + h).0 - m.eval(t - h).0) / (2.0 * h);
            assert!((fd - m.eval(t).1).abs() < 1e-7);
        }
    }
}
