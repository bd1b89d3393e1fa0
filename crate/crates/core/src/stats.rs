//! Small-sample summaries used by the estimators and the harness.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
    /// Halfwidth of the two-sided 95% Student-t interval.
    pub ci95: f64,
}

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
pub fn t975(df: usize) -> f64 {
    if df == 0 {
        return f64::INFINITY;
    }
    if df > 10_000 {
        return Normal::standard().inverse_cdf(0.975);
    }
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY)
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            n,
            mean: f64::NAN,
            sd: f64::NAN,
            se: f64::NAN,
            ci95: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary {
            n,
            mean,
            sd: 0.0,
            se: f64::INFINITY,
            ci95: f64::INFINITY,
        };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    let se = sd / (n as f64).sqrt();
    Summary {
        n,
        mean,
        sd,
        se,
        ci95: t975(n - 1) * se,
    }
}

/// Batch-means summary: splits `xs` into `batches` contiguous blocks and
/// summarizes the block means.
pub fn batch_means(xs: &[f64], batches: usize) -> Summary {
    let size = xs.len() / batches.max(1);
    if size == 0 {
        return summarize(xs);
    }
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    summarize(&means)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basic() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.ci95 - 3.182_446_305 * s.se).abs() < 1e-6);
    }

    #[test]
    fn t_quantiles() {
        assert!((t975(15) - 2.131_449_546).abs() < 1e-6);
        assert!((t975(1_000_000) - 1.959_966).abs() < 1e-4);
    }

    #[test]
    fn batches() {
        let xs: Vec<f64> = (0..100).map(f64::from).collect();
        let s = batch_means(&xs, 4);
        assert_eq!(s.n, 4);
        assert_eq!(s.mean, 49.5);
    }
}
