//! Cubic smoothing splines with GCV-selected penalty, natural cubic
//! evaluation, and a golden-section minimizer.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A natural cubic spline through fitted knot values.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (natural boundary: zero at the ends).
    second: Vec<f64>,
}

impl CubicSpline {
    /// Interpolating natural cubic spline through `(xs, ys)`.
    pub fn interpolate(xs: &[f64], ys: &[f64]) -> Result<CubicSpline> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Input("spline needs >= 2 points of equal count".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("spline abscissae must be strictly increasing".into()));
        }
        let n = xs.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal solve for interior second derivatives.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut off = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = (h0 + h1) / 3.0;
                if i + 1 < m {
                    off[i] = h1 / 6.0;
                }
                rhs[i] = (ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0;
            }
            // Thomas algorithm.
            for i in 1..m {
                let w = off[i - 1] / diag[i - 1];
                diag[i] -= w * off[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; m];
            sol[m - 1] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                sol[i] = (rhs[i] - off[i] * sol[i + 1]) / diag[i];
            }
            second[1..=m].copy_from_slice(&sol);
        }
        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            second,
        })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    /// Evaluate; linear extrapolation beyond the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            let slope = self.deriv_at_knot(0);
            return self.ys[0] + slope * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            let slope = self.deriv_at_knot(n - 1);
            return self.ys[n - 1] + slope * (x - self.xs[n - 1]);
        }
        let k = self.xs.partition_point(|&v| v <= x).min(n - 1) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let a = (self.xs[k + 1] - x) / h;
        let b = (x - self.xs[k]) / h;
        a * self.ys[k]
            + b * self.ys[k + 1]
            + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h * h / 6.0
    }

    fn deriv_at_knot(&self, k: usize) -> f64 {
        let n = self.xs.len();
        if k == 0 {
            let h = self.xs[1] - self.xs[0];
            (self.ys[1] - self.ys[0]) / h - h / 6.0 * (2.0 * self.second[0] + self.second[1])
        } else {
            let h = self.xs[n - 1] - self.xs[n - 2];
            (self.ys[n - 1] - self.ys[n - 2]) / h
                + h / 6.0 * (self.second[n - 2] + 2.0 * self.second[n - 1])
        }
    }

    /// All roots of `eval(x) = target` inside the knot range, found by a scan
    /// over a fine grid followed by bisection.
    pub fn solve(&self, target: f64, grid: usize) -> Vec<f64> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        let step = (hi - lo) / grid as f64;
        let mut roots = Vec::new();
        let mut prev_x = lo;
        let mut prev_f = self.eval(lo) - target;
        for k in 1..=grid {
            let x = lo + step * k as f64;
            let f = self.eval(x) - target;
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if prev_f * f < 0.0 {
                let (mut a, mut b) = (prev_x, x);
                let (mut fa, _) = (prev_f, f);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let fm = self.eval(m) - target;
                    if fa * fm <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_x = x;
            prev_f = f;
        }
        if prev_f == 0.0 {
            roots.push(prev_x);
        }
        roots
    }
}

/// Fit a cubic smoothing spline with the penalty chosen by generalized
/// cross-validation over a log-spaced grid.
///
/// Returns the spline through the fitted knot values and the selected
/// penalty. With fewer than four points the fit degrades to interpolation.
pub fn smoothing_spline(xs: &[f64], ys: &[f64]) -> Result<(CubicSpline, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Input("spline needs >= 2 points of equal count".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("spline abscissae must be strictly increasing".into()));
    }
    let n = xs.len();
    if n < 4 {
        return Ok((CubicSpline::interpolate(xs, ys)?, 0.0));
    }
    let m = n - 2;
    // Second-difference operator and its Gram weights.
    let mut delta = DMatrix::zeros(m, n);
    let mut w = DMatrix::zeros(m, m);
    for i in 0..m {
        let h0 = xs[i + 1] - xs[i];
        let h1 = xs[i + 2] - xs[i + 1];
        delta[(i, i)] = 1.0 / h0;
        delta[(i, i + 1)] = -(1.0 / h0 + 1.0 / h1);
        delta[(i, i + 2)] = 1.0 / h1;
        w[(i, i)] = (h0 + h1) / 3.0;
        if i + 1 < m {
            w[(i, i + 1)] = h1 / 6.0;
            w[(i + 1, i)] = h1 / 6.0;
        }
    }
    let w_inv = w
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Input("singular spline weight matrix".into()))?;
    let k = delta.transpose() * w_inv * delta;
    let y = nalgebra::DVector::from_column_slice(ys);

    let mut best = (f64::INFINITY, 0.0, ys.to_vec());
    for exp in -8..=4 {
        for sub in 0..3 {
            let lambda = 10f64.powf(exp as f64 + sub as f64 / 3.0);
            let a = (DMatrix::identity(n, n) + lambda * &k)
                .try_inverse()
                .ok_or_else(|| Error::Input("singular smoothing system".into()))?;
            let fitted = &a * &y;
            let resid = &y - &fitted;
            let trace_i_minus_a = n as f64 - a.trace();
            if trace_i_minus_a <= 1e-10 {
                continue;
            }
            let gcv = n as f64 * resid.norm_squared() / (trace_i_minus_a * trace_i_minus_a);
            if gcv < best.0 {
                best = (gcv, lambda, fitted.iter().cloned().collect());
            }
        }
    }
    let spline = CubicSpline::interpolate(xs, &best.2)?;
    Ok((spline, best.1))
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_hits_knots() {
        let xs = [0.0, 1.0, 2.5, 4.0];
        let ys = [1.0, -1.0, 0.5, 2.0];
        let s = CubicSpline::interpolate(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((s.eval(*x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_smooth_function() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0 * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x).sin()).collect();
        let s = CubicSpline::interpolate(&xs, &ys).unwrap();
        for k in 0..100 {
            let x = 0.05 + 2.9 * k as f64 / 99.0;
            assert!((s.eval(x) - x.sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn smoothing_keeps_exact_data() {
        let xs: Vec<f64> = (0..15).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 0.3 + 0.5 * (1.5 * x).tanh()).collect();
        let (s, _) = smoothing_spline(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((s.eval(*x) - y).abs() < 2e-3, "x={x}");
        }
    }

    #[test]
    fn smoothing_reduces_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let truth: Vec<f64> = xs.iter().map(|&x| (0.8 * x).sin()).collect();
        let noisy: Vec<f64> = truth.iter().map(|&y| y + rng.gen_range(-0.05..0.05)).collect();
        let (s, lambda) = smoothing_spline(&xs, &noisy).unwrap();
        let raw_err: f64 = noisy
            .iter()
            .zip(truth.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let fit_err: f64 = xs
            .iter()
            .zip(truth.iter())
            .map(|(&x, &t)| (s.eval(x) - t).powi(2))
            .sum();
        assert!(lambda > 0.0);
        assert!(fit_err < raw_err, "fit {fit_err} vs raw {raw_err}");
    }

    #[test]
    fn solve_finds_crossing() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x * x).collect();
        let s = CubicSpline::interpolate(&xs, &ys).unwrap();
        let roots = s.solve(2.0, 400);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 2.0f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn golden_section_minimizes_parabola() {
        let x = golden_section_min(|x| (x - 1.3).powi(2), -5.0, 5.0, 1e-8);
        assert!((x - 1.3).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CubicSpline::interpolate(&[0.0], &[1.0]).is_err());
        assert!(CubicSpline::interpolate(&[0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(smoothing_spline(&[1.0, 0.5, 2.0], &[0.0, 0.0, 0.0]).is_err());
    }
}
