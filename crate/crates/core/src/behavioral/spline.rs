/// Monotone piecewise-cubic Hermite interpolant on a uniform grid
/// (Fritsch-Carlson slopes), extended linearly beyond the end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneSpline {
    /// Knots at `x0 + k·h`. Needs at least two knots and `h > 0`.
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        assert!(y.len() >= 2 && h > 0.0, "spline needs two knots and a positive step");
        let n = y.len();
        let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                let (a, b) = (delta[k - 1], delta[k]);
                d[k] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
            }
            d[0] = end_slope(delta[0], delta[1]);
            d[n - 1] = end_slope(delta[n - 2], delta[n - 3]);
        }
        MonotoneSpline { x0, h, y, d }
    }

    pub fn knots(&self) -> &[f64] {
        &self.y
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let u = (x - self.x0) / self.h;
        if u <= 0.0 {
            return self.y[0] + self.d[0] * (x - self.x0);
        }
        let last = (n - 1) as f64;
        if u >= last {
            return self.y[n - 1] + self.d[n - 1] * (u - last) * self.h;
        }
        let k = (u as usize).min(n - 2);
        let s = u - k as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * self.h * self.d[k] + h01 * self.y[k + 1] + h11 * self.h * self.d[k + 1]
    }
}

/// Shape-preserving three-point end slope on a uniform grid.
fn end_slope(d0: f64, d1: f64) -> f64 {
    let s = (3.0 * d0 - d1) / 2.0;
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_lines() {
        let s = MonotoneSpline::new(-1.0, 0.5, vec![3.0, 2.0, 1.0, 0.0, -1.0]);
        for k in 0..5 {
            assert!((s.eval(-1.0 + 0.5 * k as f64) - (3.0 - k as f64)).abs() < 1e-14);
        }
        assert!((s.eval(-0.3) - 1.6).abs() < 1e-14);
        // linear extension
        assert!((s.eval(2.0) - (-3.0)).abs() < 1e-12);
        assert!((s.eval(-2.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn flat_segment_stays_flat() {
        let s = MonotoneSpline::new(0.0, 1.0, vec![0.0, 1.0, 1.0, 1.0, 2.0]);
        for k in 0..=100 {
            let x = 1.0 + k as f64 * 0.02;
            assert!((s.eval(x) - 1.0).abs() < 1e-14);
        }
    }
}
