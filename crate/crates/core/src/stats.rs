//! Sample moments, the Kolmogorov-Smirnov normality distance and least squares lines.

use statrs::function::erf::erfc;

/// Summary of a scalar sample: mean, unbiased variance and standardized shape moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                skewness: f64::NAN,
                excess_kurtosis: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
            min = min.min(x);
            max = max.max(x);
        }
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let pop_var = m2 / nf;
        let (skewness, excess_kurtosis) = if pop_var > 0.0 {
            ((m3 / nf) / pop_var.powf(1.5), (m4 / nf) / (pop_var * pop_var) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Self {
            count: n,
            mean,
            variance,
            skewness,
            excess_kurtosis,
            min,
            max,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.mean, self.variance, self.skewness, self.excess_kurtosis]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Kolmogorov-Smirnov distance between the sample, standardized by its own
/// mean and standard deviation, and the standard normal distribution.
pub fn ks_distance_standardized(xs: &[f64]) -> f64 {
    let summary = SampleSummary::from_samples(xs);
    let sd = summary.std_dev();
    if xs.len() < 2 || sd == 0.0 {
        return 1.0;
    }
    let mut z: Vec<f64> = xs.iter().map(|x| (x - summary.mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    ks_distance_sorted(&z, normal_cdf)
}

/// One-sample KS statistic for already sorted samples against `cdf`.
pub fn ks_distance_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Ordinary least squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len(), "fit_line needs paired samples");
    assert!(xs.len() >= 2, "fit_line needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    LineFit {
        slope,
        intercept: my - slope * mx,
    }
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> LineFit {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly)
}
