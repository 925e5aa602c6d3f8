//! Small numerical helpers shared by the engines.

use crate::error::{Error, Result};

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Ordinary or weighted least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual scatter.
    pub slope_stderr: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    fit_line_weighted(xs, ys, &vec![1.0; xs.len()])
}

pub fn fit_line_weighted(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n || ws.len() != n {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least two points, got {n}"
        )));
    }
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
        sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("line fit with a single abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = (0..n)
            .map(|i| ws[i] * (ys[i] - intercept - slope * xs[i]).powi(2))
            .sum();
        let wmean = sw / n as f64;
        (rss / wmean / (n - 2) as f64 / (sxx / wmean)).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

/// Least squares for a small dense system via normal equations.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let p = rows.first().map_or(0, |r| r.len());
    if rows.len() < p || p == 0 {
        return Err(Error::InsufficientData("underdetermined least squares".into()));
    }
    // column scaling keeps the normal equations well conditioned
    let scale: Vec<f64> = (0..p)
        .map(|j| {
            let s = rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, &b) in rows.iter().zip(rhs) {
        for i in 0..p {
            let ri = r[i] / scale[i];
            for j in 0..p {
                a[i][j] += ri * r[j] / scale[j];
            }
            a[i][p] += ri * b;
        }
    }
    let sol = solve_dense(a)?;
    Ok(sol.iter().zip(&scale).map(|(x, s)| x / s).collect())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub fn solve_dense(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::InsufficientData("singular linear system".into()));
        }
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    Ok(x)
}

/// Neville extrapolation of `f(h)` to `h = 0` from samples `(h_i, f_i)`.
///
/// Returns the full tableau diagonal; the last entry is the estimate and the
/// difference to the one before it is a size estimate for its error.
pub fn neville_to_zero(hs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = hs.len();
    let mut p = fs.to_vec();
    let mut diag = vec![p[0]];
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i]);
        }
        diag.push(p[0]);
    }
    diag
}

/// Aitken's delta-squared extrapolant of three consecutive terms.
pub fn aitken(a0: f64, a1: f64, a2: f64) -> f64 {
    let d = a2 - 2.0 * a1 + a0;
    if d.abs() < 1e-300 {
        a2
    } else {
        a2 - (a2 - a1) * (a2 - a1) / d
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (m, f64::NAN);
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Upper incomplete gamma `Γ(a, z)` for half-integer `a ≤ 1/2` and `z > 0`.
///
/// Built by downward recurrence from `Γ(1/2, z) = √π erfc(√z)`.
pub fn upper_gamma_half_integer(a: f64, z: f64) -> f64 {
    debug_assert!(z > 0.0);
    let steps = (0.5 - a).round();
    debug_assert!((0.5 - a - steps).abs() < 1e-12 && steps >= 0.0);
    let mut g = std::f64::consts::PI.sqrt() * statrs::function::erf::erfc(z.sqrt());
    let mut cur = 0.5;
    let ln_z = z.ln();
    for _ in 0..steps as usize {
        // Γ(c - 1, z) = (Γ(c, z) - z^{c-1} e^{-z}) / (c - 1)
        let c1 = cur - 1.0;
        g = (g - ((c1 * ln_z) - z).exp()) / c1;
        cur = c1;
    }
    g
}

/// Sum over `t = start, start + step, ...` of `Σ_i c_i t^{-s_i} x^t`, for
/// `0 < x ≤ 1`, by Euler–Maclaurin with exact integrals.
///
/// The exponents must be half-integers, above one when `x = 1`.
pub fn power_law_tail(terms: &[(f64, f64)], x: f64, start: f64, step: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0 + 1e-15) {
        return Err(Error::Precondition(format!(
            "tail ratio must lie in (0, 1], got {x}"
        )));
    }
    let eps = (-x.ln()).max(0.0);
    let mut total = 0.0;
    for &(c, s) in terms {
        if c == 0.0 {
            continue;
        }
        let z = eps * start;
        if s <= 1.0 && z < 1e-14 {
            return Err(Error::Precondition(format!(
                "power-law tail with exponent {s} does not converge"
            )));
        }
        let integral = if z < 1e-14 {
            start.powf(1.0 - s) / (s - 1.0)
        } else {
            eps.powf(s - 1.0) * upper_gamma_half_integer(1.0 - s, z)
        };
        let f0 = start.powf(-s) * (-eps * start).exp();
        let df0 = f0 * (-s / start - eps);
        let d3 = {
            // third derivative of t^{-s} e^{-εt}
            let u = -s / start - eps;
            let u1 = s / (start * start);
            let u2 = -2.0 * s / start.powi(3);
            f0 * (u * u * u + 3.0 * u * u1 + u2)
        };
        let sum = integral / step + f0 / 2.0 - step * df0 / 12.0 + step.powi(3) * d3 / 720.0;
        total += c * sum;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        assert_relative_eq!(s.value(), 1.0 + 1e-14, max_relative = 1e-15);
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let hs = [1.0, 0.5, 0.25, 0.125];
        let fs: Vec<f64> = hs.iter().map(|h| 2.0 + 3.0 * h - h * h).collect();
        let d = neville_to_zero(&hs, &fs);
        assert_relative_eq!(*d.last().unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn incomplete_gamma_matches_direct_sum() {
        // Γ(-1/2, z) = ∫_z^∞ t^{-3/2} e^{-t} dt, by composite Simpson on t = z + u²
        let z = 0.7;
        let f = |u: f64| 2.0 * u * (z + u * u).powf(-1.5) * (-(z + u * u)).exp();
        let (a, b, n) = (0.0, 8.0, 20000);
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = s * h / 3.0;
        assert_relative_eq!(upper_gamma_half_integer(-0.5, z), simpson, max_relative = 1e-9);
    }

    #[test]
    fn power_law_tail_matches_brute_force() {
        for &(x, step) in &[(0.999f64, 1.0f64), (1.0, 2.0), (0.99, 2.0)] {
            let terms = [(1.3, 1.5), (-0.4, 2.5)];
            let start: f64 = 400.0;
            let mut brute = CompensatedSum::new();
            let mut t = start;
            while t < 4.0e6 {
                brute.add(terms.iter().map(|(c, s)| c * t.powf(-s)).sum::<f64>() * x.powf(t));
                t += step;
            }
            let tail_rest = if x == 1.0 { 1.3 * 2.0 * (4.0e6f64).powf(-0.5) / step } else { 0.0 };
            let est = power_law_tail(&terms, x, start, step).unwrap();
            assert_relative_eq!(est, brute.value() + tail_rest, max_relative = 1e-6);
        }
    }

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let rows: Vec<Vec<f64>> = (1..20).map(|i| {
            let t = i as f64;
            vec![1.0, 1.0 / t, 1.0 / (t * t)]
        }).collect();
        let rhs: Vec<f64> = rows.iter().map(|r| 2.0 - r[1] + 0.5 * r[2]).collect();
        let c = least_squares(&rows, &rhs).unwrap();
        assert_relative_eq!(c[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(c[1], -1.0, epsilon = 1e-8);
    }
}
