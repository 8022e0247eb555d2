//! Small descriptive statistics used by the experiment drivers.

use rand::Rng;

use crate::rng::SeedContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    /// `std / sqrt(n)`.
    pub stderr: f64,
    pub n: usize,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
            stderr: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary {
        mean,
        std,
        stderr: std / (n as f64).sqrt(),
        n,
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let s = summarize(xs);
    s.std * s.std
}

/// Standard error of the unbiased sample variance, `sqrt((m4 - (n-3)/(n-1) s^4) / n)`.
pub fn variance_stderr(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - (n - 3.0) / (n - 1.0) * s2 * s2).max(0.0) / n).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile (the R type 7 rule).
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(xs), p)
}

pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Distribution-free standard error of the `p`-quantile: half the width of
/// the order-statistic 95% interval `n p +- 1.96 sqrt(n p (1 - p))`, over 1.96.
pub fn quantile_stderr(xs: &[f64], p: f64) -> f64 {
    let v = sorted(xs);
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let half = 1.96 * (nf * p * (1.0 - p)).sqrt();
    let lo = ((nf * p - half).floor().max(0.0) as usize).min(n - 1);
    let hi = ((nf * p + half).ceil() as usize).min(n - 1);
    (v[hi] - v[lo]) / (2.0 * 1.96)
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Resamples `data` with replacement `reps` times and returns the statistic
/// on each resample, in order.
pub fn bootstrap<T: Clone, F>(data: &[T], reps: usize, seed: &SeedContext, stat: F) -> Vec<f64>
where
    F: Fn(&[T]) -> f64,
{
    let mut rng = seed.rng();
    let n = data.len();
    let mut buf = Vec::with_capacity(n);
    (0..reps)
        .map(|_| {
            buf.clear();
            buf.extend((0..n).map(|_| data[rng.random_range(0..n)].clone()));
            stat(&buf)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    #[test]
    fn summary_of_constant_has_zero_stderr() {
        let s = summarize(&[1.0; 10]);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn summary_known_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.std / 2.0).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 5.0, 4.0];
        assert_eq!(median(&xs), 3.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn ols_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - x / 3.0).collect();
        let (slope, icpt) = ols(&xs, &ys);
        assert!((slope + 1.0 / 3.0).abs() < 1e-14);
        assert!((icpt - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let seed = SeedContext::new(1, "boot", 0, Purpose::Bootstrap);
        let a = bootstrap(&data, 20, &seed, mean);
        let b = bootstrap(&data, 20, &seed, mean);
        assert_eq!(a, b);
    }
}
