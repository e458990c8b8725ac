//! Point estimators for the population mean, the bias statistic and its
//! hypothesis test, and the wave-weighted CLT statistic with its limit
//! variance.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{pi_inner, Graph, Spectrum, UNIT_EIGENVALUE_TOL};
use crate::tree::distance_pgf;
use crate::variance::plugin_variance;
use crate::walk::WalkSample;

/// Arithmetic mean of the observed feature.
pub fn sample_mean(obs: &[f64]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    Ok(obs.iter().sum::<f64>() / obs.len() as f64)
}

/// Inverse probability weighted estimator `(1/n) sum y / (N pi)`.
pub fn ipw_estimate(obs: &[f64], pi_at_samples: &[f64], population: usize) -> Result<f64> {
    if obs.len() != pi_at_samples.len() {
        return Err(Error::Dimension("obs and pi lengths differ".into()));
    }
    if obs.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    let n = population as f64;
    let mut acc = 0.0;
    for (&y, &p) in obs.iter().zip(pi_at_samples) {
        if p <= 0.0 {
            return Err(Error::Domain("zero or negative pi at a sampled node".into()));
        }
        acc += y / (n * p);
    }
    Ok(acc / obs.len() as f64)
}

/// Harmonic mean of observed degrees, `n / sum(1/deg)`.
pub fn harmonic_mean_degree(deg_obs: &[f64]) -> Result<f64> {
    if deg_obs.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    let mut acc = 0.0;
    for &d in deg_obs {
        if d <= 0.0 {
            return Err(Error::Domain("zero degree in sample".into()));
        }
        acc += 1.0 / d;
    }
    Ok(deg_obs.len() as f64 / acc)
}

/// Volz-Heckathorn estimator: Hajek-style self-normalized inverse-degree
/// weighting.
pub fn vh_estimate(obs: &[f64], deg_obs: &[f64]) -> Result<f64> {
    if obs.len() != deg_obs.len() {
        return Err(Error::Dimension("obs and degree lengths differ".into()));
    }
    if obs.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&y, &d) in obs.iter().zip(deg_obs) {
        if d <= 0.0 {
            return Err(Error::Domain("zero degree in sample".into()));
        }
        num += y / d;
        den += 1.0 / d;
    }
    Ok(num / den)
}

/// Per-sample bias feature `y'(i) = y(i) (1 - dbar / deg(i))`. Its mean over
/// the sample is the bias statistic.
pub fn bias_feature(obs: &[f64], deg_obs: &[f64], dbar: f64) -> Result<Vec<f64>> {
    if obs.len() != deg_obs.len() {
        return Err(Error::Dimension("obs and degree lengths differ".into()));
    }
    obs.iter()
        .zip(deg_obs)
        .map(|(&y, &d)| {
            if d <= 0.0 {
                Err(Error::Domain("zero degree in sample".into()))
            } else {
                Ok(y * (1.0 - dbar / d))
            }
        })
        .collect()
}

/// Outcome of the bias hypothesis test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BiasTest {
    pub z_stat: f64,
    pub reject: bool,
    /// Set when the variance estimate degenerated to zero.
    pub degenerate: bool,
}

/// Two-sided z-test of `H0: bias = 0`. `sigma_hat_sq` is an estimate of the
/// variance of the mean of the bias feature (not of a single observation).
pub fn bias_test(bias_hat: f64, sigma_hat_sq: f64, alpha: f64) -> Result<BiasTest> {
    if sigma_hat_sq < 0.0 {
        return Err(Error::Domain("negative variance estimate".into()));
    }
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::Argument(format!("alpha must be in (0,1), got {alpha}")));
    }
    let crit = normal_quantile(1.0 - alpha / 2.0);
    if sigma_hat_sq == 0.0 {
        // degenerate: a nonzero bias with zero variance is an automatic
        // rejection signal, zero bias cannot reject
        return Ok(BiasTest {
            z_stat: if bias_hat == 0.0 { 0.0 } else { f64::INFINITY * bias_hat.signum() },
            reject: bias_hat != 0.0,
            degenerate: true,
        });
    }
    let z = bias_hat / sigma_hat_sq.sqrt();
    Ok(BiasTest {
        z_stat: z,
        reject: z.abs() > crit,
        degenerate: false,
    })
}

/// Hard-thresholded estimator: the weighted arm when the test rejects, the
/// sample mean otherwise.
pub fn bias_adjusted(mu_hat: f64, mu_weighted: f64, reject: bool) -> f64 {
    if reject {
        mu_weighted
    } else {
        mu_hat
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Per-wave normalized sums and their aggregate.
#[derive(Debug, Clone)]
pub struct WaveStatistic {
    /// `Y_i = m^{-i/2} sum_{|tau| = i} y(X_tau)` for waves `1..=h`.
    pub wave_sums: Vec<f64>,
    /// `(1/sqrt(h)) sum_i Y_i`.
    pub t_stat: f64,
}

/// Wave statistic of an m-tree walk. The feature is centered with the exact
/// stationary distribution before summation.
pub fn wave_statistic(
    sample: &WalkSample,
    y: &[f64],
    pi: &[f64],
    m: usize,
) -> Result<WaveStatistic> {
    let tree = sample.tree();
    let shape = tree
        .m_tree_shape()
        .filter(|&(tm, _)| tm == m)
        .ok_or_else(|| Error::Shape(format!("tree is not an m-tree with m={m}")))?;
    let h = shape.1 as usize;
    let mean = pi_inner(y, &vec![1.0; y.len()], pi)?;
    let mut wave_sums = vec![0.0; h];
    for t in 0..tree.len() {
        let wave = tree.wave(t) as usize;
        if wave == 0 {
            continue;
        }
        let x = sample.node(t).expect("m-tree walks have full assignments");
        wave_sums[wave - 1] += y[x] - mean;
    }
    for (i, s) in wave_sums.iter_mut().enumerate() {
        *s /= (m as f64).powi(i as i32 + 1).sqrt();
    }
    let t_stat = if h > 0 {
        wave_sums.iter().sum::<f64>() / (h as f64).sqrt()
    } else {
        0.0
    };
    Ok(WaveStatistic { wave_sums, t_stat })
}

/// Limit variance of the wave statistic:
/// `sigma_0^2 = sum_{l >= 2} <y, f_l>^2 (1 - lambda_l^2) / (sqrt(m) lambda_l - 1)^2`.
///
/// Requires `m < lambda_2^{-2}` strictly; otherwise the operator behind the
/// formula is not safely invertible and the growth threshold error is raised.
pub fn theorem1_sigma0(spectrum: &Spectrum, y: &[f64], m: usize) -> Result<f64> {
    let lambda2 = spectrum.lambda2().abs();
    if 1.0 - lambda2 < UNIT_EIGENVALUE_TOL {
        return Err(Error::Precondition("|lambda_2| = 1 within tolerance".into()));
    }
    if (m as f64) * lambda2 * lambda2 >= 1.0 {
        return Err(Error::Threshold(format!(
            "m = {m} >= lambda_2^-2 = {:.6}",
            1.0 / (lambda2 * lambda2)
        )));
    }
    let ones = vec![1.0; y.len()];
    let mean = pi_inner(y, &ones, spectrum.pi())?;
    let centered: Vec<f64> = y.iter().map(|&v| v - mean).collect();
    let weights = spectrum.project(&centered)?;
    let sqrt_m = (m as f64).sqrt();
    let mut sigma_sq = 0.0;
    for l in 1..spectrum.n() {
        let lambda = spectrum.eigenvalues()[l];
        let denom = sqrt_m * lambda - 1.0;
        sigma_sq += weights[l] * weights[l] * (1.0 - lambda * lambda) / (denom * denom);
    }
    Ok(sigma_sq)
}

/// Full estimator report for one walk sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub n: usize,
    pub mu_hat: f64,
    /// Present only when the stationary distribution is supplied.
    pub mu_ipw: Option<f64>,
    pub mu_vh: f64,
    pub dbar_hat: f64,
    pub bias_hat: f64,
    pub sigma_hat_sq: f64,
    pub z: f64,
    pub reject: bool,
    pub mu_ba: f64,
    /// Scaling convention: `sigma_hat_sq` estimates the variance of the
    /// sample mean of the bias feature.
    pub convention: String,
}

impl EstimateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Compute the full report: estimators, bias statistic, plug-in variance,
/// test decision, and the bias-adjusted estimate.
///
/// When `pi_known` is set the IPW estimator is computed from the graph's
/// exact stationary distribution and used as the weighted arm of the
/// bias-adjusted estimator; otherwise the VH estimator is the weighted arm.
pub fn estimate_report(
    sample: &WalkSample,
    g: &Graph,
    y: &[f64],
    pi_known: bool,
    alpha: f64,
) -> Result<EstimateReport> {
    let obs = sample.observe_feature(y)?;
    let deg = sample.observe_degrees(g);
    let n = obs.len();
    let mu_hat = sample_mean(&obs)?;
    let dbar_hat = harmonic_mean_degree(&deg)?;
    let mu_vh = vh_estimate(&obs, &deg)?;
    let mu_ipw = if pi_known {
        let pi_at: Vec<f64> = sample.sampled_nodes().iter().map(|&i| g.pi()[i]).collect();
        Some(ipw_estimate(&obs, &pi_at, g.n())?)
    } else {
        None
    };
    let y_prime = bias_feature(&obs, &deg, dbar_hat)?;
    let bias_hat = sample_mean(&y_prime)?;
    let pgf = distance_pgf(sample.tree())?;
    let plug = plugin_variance(sample, &y_prime, &deg, &pgf)?;
    let test = bias_test(bias_hat, plug.sigma_hat_sq, alpha)?;
    let weighted = mu_ipw.unwrap_or(mu_vh);
    let mu_ba = bias_adjusted(mu_hat, weighted, test.reject);
    Ok(EstimateReport {
        n,
        mu_hat,
        mu_ipw,
        mu_vh,
        dbar_hat,
        bias_hat,
        sigma_hat_sq: plug.sigma_hat_sq,
        z: test.z_stat,
        reject: test.reject,
        mu_ba,
        convention: "var_of_mean".into(),
    })
}
