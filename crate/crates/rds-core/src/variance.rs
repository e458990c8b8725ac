//! Exact spectral variance of walk averages, the plug-in estimator
//! `G(R_hat) * var_hat`, wave-variance regimes, and the closed-form
//! variance comparison between the sample mean and inverse probability
//! weighting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::vh_estimate;
use crate::graph::{pi_inner, Graph, Spectrum};
use crate::tree::{convexity_scan, DistancePGF};
use crate::walk::WalkSample;

/// One eigenvalue's contribution to the exact variance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralTerm {
    pub lambda: f64,
    pub weight_sq: f64,
    pub g_of_lambda: f64,
}

/// Exact variance of the sample average, decomposed over the spectrum.
#[derive(Debug, Clone)]
pub struct VarianceBreakdown {
    pub terms: Vec<SpectralTerm>,
    /// `sum_l <y, f_l>^2 G(lambda_l)` over `l >= 2`.
    pub sigma_sq_exact: f64,
    /// Lag-1 autocorrelation, the weight-squared mean of the eigenvalues.
    pub r: f64,
    /// `G(R) * var_pi(y)`, the Jensen lower bound.
    pub jensen_lower: f64,
    /// Whether the scanned `G''` is nonnegative on `[lambda_min, 1]`.
    pub convexity_ok: bool,
}

impl VarianceBreakdown {
    /// CSV rows `lambda,weight_sq,G_of_lambda,term`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,weight_sq,G_of_lambda,term\n");
        for t in &self.terms {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t.lambda,
                t.weight_sq,
                t.g_of_lambda,
                t.weight_sq * t.g_of_lambda
            ));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::json!({
            "sigma_sq_exact": self.sigma_sq_exact,
            "R": self.r,
            "jensen_lower": self.jensen_lower,
            "convex": self.convexity_ok,
        })
        .to_string()
    }
}

/// Covariance of the feature at two tree nodes a fixed distance apart:
/// `sum_{l >= 2} lambda_l^d <y, f_l>^2`.
pub fn exact_pair_covariance(spectrum: &Spectrum, y: &[f64], d: u32) -> Result<f64> {
    let weights = projection_weights(spectrum, y)?;
    let mut acc = 0.0;
    for l in 1..spectrum.n() {
        acc += spectrum.eigenvalues()[l].powi(d as i32) * weights[l] * weights[l];
    }
    Ok(acc)
}

fn projection_weights(spectrum: &Spectrum, y: &[f64]) -> Result<Vec<f64>> {
    // centering only shifts the f_1 component, which is excluded everywhere
    spectrum.project(y)
}

/// Exact variance of the sample average of the walk over the given tree:
/// `sigma^2 = sum_{l >= 2} <y, f_l>^2 G(lambda_l)`.
pub fn exact_mean_variance(
    pgf: &DistancePGF,
    spectrum: &Spectrum,
    y: &[f64],
) -> Result<VarianceBreakdown> {
    let weights = projection_weights(spectrum, y)?;
    let mut terms = Vec::with_capacity(spectrum.n().saturating_sub(1));
    let mut sigma_sq = 0.0;
    let mut var_pi = 0.0;
    let mut r_num = 0.0;
    for l in 1..spectrum.n() {
        let lambda = spectrum.eigenvalues()[l];
        let w2 = weights[l] * weights[l];
        let (g, _, _) = pgf.eval(lambda);
        terms.push(SpectralTerm {
            lambda,
            weight_sq: w2,
            g_of_lambda: g,
        });
        sigma_sq += w2 * g;
        var_pi += w2;
        r_num += w2 * lambda;
    }
    let r = if var_pi > 0.0 { r_num / var_pi } else { 0.0 };
    let lambda_min = spectrum.lambda_min().clamp(-1.0, 1.0 - 1e-9);
    let scan = convexity_scan(pgf, lambda_min, 0.01)?;
    let (g_r, _, _) = pgf.eval(r);
    Ok(VarianceBreakdown {
        terms,
        sigma_sq_exact: sigma_sq,
        r,
        jensen_lower: g_r * var_pi,
        convexity_ok: scan.is_convex(),
    })
}

/// Plug-in variance estimate for the sample average.
#[derive(Debug, Clone, Copy)]
pub struct PluginVariance {
    /// Estimated lag-1 autocorrelation, clamped to `[-1, 1]`.
    pub r_hat: f64,
    /// `G(R_hat) * var_hat`, an estimate of the variance of the sample mean.
    pub sigma_hat_sq: f64,
    /// Set when the sample variance degenerated to zero.
    pub degenerate: bool,
}

/// Plug-in estimator from one observed walk. Both moments center on the
/// VH-weighted mean and the raw variance carries no explicit pi adjustment,
/// since sampling is already proportional to pi.
pub fn plugin_variance(
    sample: &WalkSample,
    y_obs: &[f64],
    deg_obs: &[f64],
    pgf: &DistancePGF,
) -> Result<PluginVariance> {
    let n = y_obs.len();
    if n < 2 {
        return Err(Error::Argument("need at least two observations".into()));
    }
    if n != sample.len() || deg_obs.len() != n {
        return Err(Error::Dimension("observation vectors must match the sample".into()));
    }
    let pairs = sample.parent_child_pairs();
    if pairs.is_empty() {
        return Err(Error::Argument("need at least one parent-child pair".into()));
    }
    let center = vh_estimate(y_obs, deg_obs)?;
    let var_hat = y_obs.iter().map(|&v| (v - center).powi(2)).sum::<f64>() / n as f64;
    if var_hat <= 0.0 {
        return Ok(PluginVariance {
            r_hat: 0.0,
            sigma_hat_sq: 0.0,
            degenerate: true,
        });
    }
    let cov_hat = pairs
        .iter()
        .map(|&(p, c)| (y_obs[p] - center) * (y_obs[c] - center))
        .sum::<f64>()
        / pairs.len() as f64;
    let r_hat = (cov_hat / var_hat).clamp(-1.0, 1.0);
    let (g, _, _) = pgf.eval(r_hat);
    Ok(PluginVariance {
        r_hat,
        sigma_hat_sq: g * var_hat,
        degenerate: false,
    })
}

/// Growth regime of `var(Y_h)` as the wave index increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveVarianceRegime {
    /// `m < lambda_2^{-2}`: bounded.
    Bounded,
    /// `m = lambda_2^{-2}`: linear in `h`.
    Linear,
    /// `m > lambda_2^{-2}`: grows like `(m lambda_2^2)^h`.
    Exponential,
}

/// Exact variance of the wave sum `Y_h` via the within-wave pair counts
/// `s_{h0} = m^h`, `s_{hk} = m^{h+k} - m^{h+k-1}`:
/// `var(Y_h) = sum_l <y, f_l>^2 (1 + sum_{k=1}^{h} m^{k-1}(m-1) lambda_l^{2k})`.
pub fn lemma3_wave_variance(
    spectrum: &Spectrum,
    y: &[f64],
    m: usize,
    h: u32,
) -> Result<(f64, WaveVarianceRegime)> {
    if m == 0 {
        return Err(Error::Argument("branching factor must be >= 1".into()));
    }
    let weights = projection_weights(spectrum, y)?;
    let mf = m as f64;
    let mut var = 0.0;
    for l in 1..spectrum.n() {
        let lambda_sq = spectrum.eigenvalues()[l].powi(2);
        // m^{k-1}(m-1) lambda^{2k} = ((m-1)/m) (m lambda^2)^k
        let factor = (mf - 1.0) / mf;
        let mut series = 1.0;
        let mut geo = 1.0;
        for _ in 1..=h {
            geo *= mf * lambda_sq;
            series += factor * geo;
        }
        var += weights[l] * weights[l] * series;
    }
    let lambda2_sq = spectrum.lambda2().powi(2);
    let growth = mf * lambda2_sq;
    let regime = if (growth - 1.0).abs() <= 1e-9 {
        WaveVarianceRegime::Linear
    } else if growth < 1.0 {
        WaveVarianceRegime::Bounded
    } else {
        WaveVarianceRegime::Exponential
    };
    Ok((var, regime))
}

/// Exact finite-height variance of the aggregate wave statistic
/// `T_h = h^{-1/2} sum_{i=1}^h Y_i` on an m-tree.
///
/// Cross-wave covariances come from counting ordered node pairs by the wave
/// of their closest common ancestor: for waves `i <= j`,
/// `cov(Y_i, Y_j) = sum_l <y, f_l>^2 m^{(i-j)/2}
///   (m^{j-i} lambda_l^{j-i} + sum_{a<i} m^{j-a-1}(m-1) lambda_l^{i+j-2a})`.
/// The `i = j` diagonal reduces to the within-wave pair counts used by
/// [`lemma3_wave_variance`]. `T_h`'s variance converges to
/// [`crate::estimators::theorem1_sigma0`] at rate `O(1/h)` below the growth
/// threshold.
pub fn wave_aggregate_variance(
    spectrum: &Spectrum,
    y: &[f64],
    m: usize,
    h: u32,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Argument("branching factor must be >= 1".into()));
    }
    if h == 0 {
        return Err(Error::Argument("need at least one wave".into()));
    }
    let weights = projection_weights(spectrum, y)?;
    let mf = m as f64;
    let h = h as i32;
    let mut total = 0.0;
    for l in 1..spectrum.n() {
        let lambda = spectrum.eigenvalues()[l];
        let mut acc = 0.0;
        for i in 1..=h {
            for j in i..=h {
                let mut pair = mf.powi(j - i) * lambda.powi(j - i);
                for a in 0..i {
                    pair += mf.powi(j - a - 1) * (mf - 1.0) * lambda.powi(i + j - 2 * a);
                }
                let cov = mf.powf(f64::from(i - j) / 2.0) * pair;
                acc += if i == j { cov } else { 2.0 * cov };
            }
        }
        total += weights[l] * weights[l] * acc / f64::from(h);
    }
    Ok(total)
}

/// Closed-form variances under a sampling design, and the corresponding
/// lower bound on their difference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceComparison {
    pub var_ipw: f64,
    pub var_mean: f64,
    /// `var_ipw - var_mean`.
    pub vd: f64,
    /// Analytic lower bound on `vd`.
    pub bound: f64,
}

/// `(1/N) sum pi_i^2 - 1/N^2`.
pub fn var_of_pi(pi: &[f64]) -> f64 {
    let n = pi.len() as f64;
    pi.iter().map(|&p| p * p).sum::<f64>() / n - 1.0 / (n * n)
}

/// Variance comparison when samples are drawn i.i.d. from `pi` and the
/// features are uncorrelated random variables with moments `mu1`, `mu2`.
pub fn iid_variance_comparison(
    pi: &[f64],
    n: usize,
    mu1: f64,
    mu2: f64,
) -> Result<VarianceComparison> {
    if n == 0 {
        return Err(Error::Argument("sample size must be positive".into()));
    }
    if mu2 < mu1 * mu1 {
        return Err(Error::Argument("need mu2 >= mu1^2".into()));
    }
    let big_n = pi.len() as f64;
    let nf = n as f64;
    let var_y = mu2 - mu1 * mu1;
    let sum_pi_sq: f64 = pi.iter().map(|&p| p * p).sum();
    let sum_inv: f64 = pi.iter().map(|&p| 1.0 / (big_n * big_n * p)).sum();

    let var_mean = mu2 / nf - mu1 * mu1 / nf
        + (nf - 1.0) / nf * (mu2 * sum_pi_sq + mu1 * mu1 * (1.0 - sum_pi_sq) - mu1 * mu1);
    let var_ipw = mu2 / nf * sum_inv - mu1 * mu1 / nf
        + (nf - 1.0) / nf * (mu2 / big_n + mu1 * mu1 * (1.0 - 1.0 / big_n) - mu1 * mu1);
    let vd = var_ipw - var_mean;
    let _ = var_y;

    let c1 = pi.iter().map(|&p| big_n * p).fold(f64::MIN, f64::max);
    let bound = mu2 * big_n * (big_n / (nf * c1 * c1) - 1.0) * var_of_pi(pi);
    Ok(VarianceComparison {
        var_ipw,
        var_mean,
        vd,
        bound,
    })
}

/// Variance comparison for the tree-indexed walk, aggregating spectral
/// return probabilities through the tree's distance histogram. Requires the
/// degree bounds `C1 N <= deg(i) <= C2 N`.
pub fn tree_variance_comparison(
    g: &Graph,
    spectrum: &Spectrum,
    pgf: &DistancePGF,
    mu1: f64,
    mu2: f64,
    c1: f64,
    c2: f64,
) -> Result<VarianceComparison> {
    let big_n = g.n() as f64;
    let n = pgf.n();
    let nf = n as f64;
    if mu2 < mu1 * mu1 {
        return Err(Error::Argument("need mu2 >= mu1^2".into()));
    }
    for (i, &d) in g.degrees().iter().enumerate() {
        if d < c1 * big_n - 1e-9 || d > c2 * big_n + 1e-9 {
            return Err(Error::Precondition(format!(
                "degree bound violated at node {i}: deg = {d}, C1 N = {}, C2 N = {}",
                c1 * big_n,
                c2 * big_n
            )));
        }
    }
    let pi = g.pi();
    let var_y = mu2 - mu1 * mu1;

    // p_ii^d = pi_i (1 + sum_{l>=2} lambda_l^d f_l(i)^2); precompute the
    // per-eigenvalue aggregates so each distance costs O(n_eig)
    let n_states = spectrum.n();
    let sum_pi_sq: f64 = pi.iter().map(|&p| p * p).sum();
    let sum_inv: f64 = pi.iter().map(|&p| 1.0 / (big_n * big_n * p)).sum();
    let mut pi_sq_f: Vec<f64> = Vec::with_capacity(n_states);
    let mut f_sq: Vec<f64> = Vec::with_capacity(n_states);
    let mut f_sum_sq: Vec<f64> = Vec::with_capacity(n_states);
    for l in 0..n_states {
        let f = spectrum.eigenfunction(l);
        pi_sq_f.push(f.iter().zip(pi).map(|(&x, &p)| p * p * x * x).sum());
        f_sq.push(f.iter().map(|&x| x * x).sum());
        f_sum_sq.push(f.iter().sum::<f64>().powi(2));
    }

    let norm = nf * nf;
    let mut cross_mean = 0.0; // (1/n^2) sum_{sigma != tau} sum_i pi_i p_ii^d
    let mut cross_ipw = 0.0; // (1/n^2) sum_{sigma != tau} sum_i p_ii^d / (N^2 pi_i)
    let mut cross_ipw_mu1 = 0.0; // mu1^2 residual: off-diagonal products under 1/pi weights
    for (d, &count) in pgf.counts().iter().enumerate().skip(1) {
        if count == 0 {
            continue;
        }
        let c = count as f64 / norm;
        let mut mean_term = sum_pi_sq;
        let mut ipw_term = big_n / (big_n * big_n);
        let mut mu1_term = 0.0;
        for l in 1..n_states {
            let pow = spectrum.eigenvalues()[l].powi(d as i32);
            mean_term += pow * pi_sq_f[l];
            ipw_term += pow * f_sq[l] / (big_n * big_n);
            mu1_term += pow * f_sum_sq[l] / (big_n * big_n);
        }
        cross_mean += c * mean_term;
        cross_ipw += c * ipw_term;
        cross_ipw_mu1 += c * mu1_term;
    }

    let var_mean = mu2 / nf - mu1 * mu1 / nf + var_y * cross_mean;
    let var_ipw =
        mu2 / nf * sum_inv - mu1 * mu1 / nf + var_y * cross_ipw + mu1 * mu1 * cross_ipw_mu1;
    let vd = var_ipw - var_mean;
    let bound = mu2
        * (big_n * big_n * c1 * c1 / (nf * c2 * c2) * var_of_pi(pi) - c2 / (big_n * c1 * c1));
    Ok(VarianceComparison {
        var_ipw,
        var_mean,
        vd,
        bound,
    })
}

/// Double-sum route to the exact mean variance, straight from the pairwise
/// covariance lemma. Kept as an independent algebraic path for cross-checks.
pub fn pairwise_mean_variance(
    pgf: &DistancePGF,
    spectrum: &Spectrum,
    y: &[f64],
) -> Result<f64> {
    let norm = (pgf.n() as f64) * (pgf.n() as f64);
    let mut acc = 0.0;
    for (d, &count) in pgf.counts().iter().enumerate() {
        if count > 0 {
            acc += count as f64 * exact_pair_covariance(spectrum, y, d as u32)?;
        }
    }
    Ok(acc / norm)
}

/// `var_pi(y)` computed from first principles.
pub fn var_pi(y: &[f64], pi: &[f64]) -> Result<f64> {
    let ones = vec![1.0; y.len()];
    let mean = pi_inner(y, &ones, pi)?;
    let centered: Vec<f64> = y.iter().map(|&v| v - mean).collect();
    pi_inner(&centered, &centered, pi)
}
