//! Monotone cubic (Fritsch-Carlson) interpolation.
//!
//! Used wherever sampled radial fields or profiles are evaluated off-grid:
//! the interpolant preserves monotonicity of the data, which the similarity
//! frame and sandwich audits rely on.

/// Piecewise-cubic Hermite interpolant with Fritsch-Carlson limited slopes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// Build from strictly increasing abscissae. Panics on fewer than two
    /// points or non-increasing `x`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "need at least two points");
        for w in x.windows(2) {
            assert!(w[1] > w[0], "abscissae must be strictly increasing");
        }
        let n = x.len();
        let mut delta = vec![0.0; n - 1];
        for i in 0..n - 1 {
            delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        }
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                // Harmonic mean weighting keeps the interpolant monotone.
                let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
                let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        // Endpoint limiting.
        for (i, lim) in [(0usize, 0usize), (n - 1, n - 2)] {
            if delta[lim] == 0.0 {
                m[i] = 0.0;
            } else if m[i] / delta[lim] > 3.0 {
                m[i] = 3.0 * delta[lim];
            }
        }
        MonotoneCubic { x, y, m }
    }

    /// Evaluate at `t`; clamps to the end values outside the data range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.m[k] + h01 * self.y[k + 1] + h11 * h * self.m[k + 1]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }
}
