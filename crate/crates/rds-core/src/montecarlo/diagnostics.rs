//! Normality diagnostics for Monte Carlo estimate distributions: Q-Q
//! correlation against normal quantiles plus moment-based shape statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::normal_quantile;

/// Quantified normal-appearance summary of a sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalityDiagnostics {
    /// Pearson correlation of sorted standardized values with normal
    /// quantiles at plotting positions `(i - 0.5) / n`.
    pub qq_correlation: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Center and scale to mean 0, sd 1 (population normalization).
pub fn standardize(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Argument("need at least two values".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(Error::Degenerate("constant input cannot be standardized".into()));
    }
    let sd = var.sqrt();
    Ok(values.iter().map(|&v| (v - mean) / sd).collect())
}

/// Normal quantiles at the plotting positions `(i - 0.5) / n`.
pub fn plotting_quantiles(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| normal_quantile((i as f64 - 0.5) / n as f64))
        .collect()
}

/// Q-Q correlation, skewness, and excess kurtosis of a sample.
pub fn normality_diagnostics(values: &[f64]) -> Result<NormalityDiagnostics> {
    let n = values.len();
    if n < 20 {
        return Err(Error::Argument(format!("need at least 20 values, got {n}")));
    }
    let mut z = standardize(values)?;
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = plotting_quantiles(n);

    let q_mean = q.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut z_ss = 0.0;
    let mut q_ss = 0.0;
    for (&zi, &qi) in z.iter().zip(&q) {
        // z already has mean 0
        num += zi * (qi - q_mean);
        z_ss += zi * zi;
        q_ss += (qi - q_mean) * (qi - q_mean);
    }
    let qq_correlation = num / (z_ss.sqrt() * q_ss.sqrt());

    let skewness = z.iter().map(|&v| v.powi(3)).sum::<f64>() / n as f64;
    let excess_kurtosis = z.iter().map(|&v| v.powi(4)).sum::<f64>() / n as f64 - 3.0;
    Ok(NormalityDiagnostics {
        qq_correlation,
        skewness,
        excess_kurtosis,
    })
}

/// Diagnostics plus batch-based Monte Carlo standard errors, from splitting
/// the sample into `batches` contiguous blocks.
pub fn batched_diagnostics(
    values: &[f64],
    batches: usize,
) -> Result<(NormalityDiagnostics, NormalityDiagnostics)> {
    if batches < 2 {
        return Err(Error::Argument("need at least two batches".into()));
    }
    let full = normality_diagnostics(values)?;
    let size = values.len() / batches;
    if size < 20 {
        return Err(Error::Argument("batches too small for diagnostics".into()));
    }
    let mut corr = Vec::with_capacity(batches);
    let mut skew = Vec::with_capacity(batches);
    let mut kurt = Vec::with_capacity(batches);
    for b in 0..batches {
        let d = normality_diagnostics(&values[b * size..(b + 1) * size])?;
        corr.push(d.qq_correlation);
        skew.push(d.skewness);
        kurt.push(d.excess_kurtosis);
    }
    let se = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|&x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (v / xs.len() as f64).sqrt()
    };
    Ok((
        full,
        NormalityDiagnostics {
            qq_correlation: se(&corr),
            skewness: se(&skew),
            excess_kurtosis: se(&kurt),
        },
    ))
}
