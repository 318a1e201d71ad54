//! Means and Student-t confidence intervals across trials.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample mean and the half-width of its two-sided 95% interval. The
/// half-width is `None` for fewer than two samples.
pub fn mean_ci95(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, Some(t * (var / n as f64).sqrt()))
}

/// Interval summary of one group of samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub n: usize,
    pub mean: f64,
    pub half_width: Option<f64>,
}

impl Interval {
    pub fn of(values: &[f64]) -> Self {
        let (mean, half_width) = mean_ci95(values);
        Self {
            n: values.len(),
            mean,
            half_width,
        }
    }

    pub fn low(&self) -> Option<f64> {
        self.half_width.map(|h| self.mean - h)
    }

    pub fn high(&self) -> Option<f64> {
        self.half_width.map(|h| self.mean + h)
    }

    pub fn contains(&self, x: f64) -> bool {
        matches!((self.low(), self.high()), (Some(l), Some(h)) if l <= x && x <= h)
    }

    /// Whether this interval lies entirely above `other`.
    pub fn above(&self, other: &Interval) -> bool {
        matches!((self.low(), other.high()), (Some(l), Some(h)) if l > h)
    }
}
