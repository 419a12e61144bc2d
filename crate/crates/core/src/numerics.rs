//! Small scalar numerics shared by the other modules: golden-section
//! refinement, a clamped cubic spline and log-log slope fitting.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]` by golden-section search.
///
/// Returns `(argmax, max)`. The bracket endpoints are evaluated as well, so a
/// monotone function returns its boundary maximum.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let fa = f(a)?;
    let fb = f(b)?;
    let mut best = if fa >= fb { (a, fa) } else { (b, fb) };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    for cand in [(c, fc), (d, fd)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Minimizes `f` on `[lo, hi]`; see [`golden_section_max`].
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (x, v) = golden_section_max(|s| f(s).map(|y| -y), lo, hi, tol)?;
    Ok((x, -v))
}

/// Cubic spline with prescribed end slopes (clamped boundary conditions).
///
/// Twice continuously differentiable; interpolates the knots exactly.
#[derive(Debug, Clone)]
pub struct ClampedSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
    uniform_step: Option<f64>,
}

impl ClampedSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slope_start: f64, slope_end: f64) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::Domain(format!(
                "spline needs at least two knots with matching values (got {} knots, {} values)",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("spline knots must be strictly increasing".into()));
        }

        // Tridiagonal system for the moments M_i:
        // h_{i-1} M_{i-1} + 2(h_{i-1}+h_i) M_i + h_i M_{i+1} = 6(d_i - d_{i-1}),
        // with the clamped rows at both ends.
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slopes: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();

        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];

        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * (slopes[0] - slope_start);
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slopes[i] - slopes[i - 1]);
        }
        sub[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (slope_end - slopes[n - 2]);

        let moments = solve_tridiagonal(&sub, &diag, &sup, &rhs);

        let first = h[0];
        let uniform_step = h
            .iter()
            .all(|&hi| (hi - first).abs() <= 1e-12 * first.abs().max(1e-300))
            .then_some(first);

        Ok(Self {
            knots,
            values,
            moments,
            uniform_step,
        })
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.knots.len();
        let idx = match self.uniform_step {
            Some(step) => ((x - self.knots[0]) / step).floor() as isize,
            None => self.knots.partition_point(|&k| k <= x) as isize - 1,
        };
        idx.clamp(0, n as isize - 2) as usize
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_all(&self, x: f64) -> (f64, f64, f64) {
        let i = self.interval(x);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let a = (x1 - x) / h;
        let b = (x - x0) / h;

        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let curvature = a * m0 + b * m1;
        (value, slope, curvature)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_all(x).0
    }
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Least-squares slope of `ln y` against `ln x`.
///
/// Points with non-positive coordinates are skipped; `None` when fewer than
/// two usable points remain.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Uniform grid `{j / (n - 1)}` on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|j| j as f64 / last).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, v) = golden_section_max(|s| Ok(-(s - 0.3).powi(2) + 2.0), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_keeps_boundary_maximum() {
        let (x, v) = golden_section_max(|s| Ok(s), 0.2, 0.7, 1e-10).unwrap();
        assert_eq!(x, 0.7);
        assert_eq!(v, 0.7);
    }

    #[test]
    fn clamped_spline_reproduces_cubics() {
        // Clamped splines are exact on cubic data when the end slopes are exact.
        let f = |x: f64| x * x * x - 2.0 * x * x + 0.5 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 4.0 * x + 0.5;
        let d2f = |x: f64| 6.0 * x - 4.0;
        let knots = unit_grid(9);
        let values = knots.iter().map(|&x| f(x)).collect();
        let spline = ClampedSpline::new(knots, values, df(0.0), df(1.0)).unwrap();
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            let (v, s, c) = spline.eval_all(x);
            assert!((v - f(x)).abs() < 1e-12, "value at {x}");
            assert!((s - df(x)).abs() < 1e-11, "slope at {x}");
            assert!((c - d2f(x)).abs() < 1e-10, "curvature at {x}");
        }
    }

    #[test]
    fn spline_rejects_bad_knots() {
        assert!(ClampedSpline::new(vec![0.0], vec![1.0], 0.0, 0.0).is_err());
        assert!(ClampedSpline::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn log_log_slope_of_power_law() {
        let xs = [10.0, 20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.0)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
    }
}
