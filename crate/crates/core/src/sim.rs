//! Monte-Carlo study: replicate sampling and fitting, then summarize the
//! estimates by bias, RMSE and empirical percentile intervals.

use rayon::prelude::*;
use serde::Serialize;

use crate::em::{em_fit, EmConfig};
use crate::error::{CbError, Result};
use crate::model::{sample, CbParams};

fn non_empty(estimates: &[f64]) -> Result<()> {
    if estimates.is_empty() {
        Err(CbError::Empty("no estimates"))
    } else {
        Ok(())
    }
}

/// Mean estimate minus the true value.
pub fn bias(estimates: &[f64], truth: f64) -> Result<f64> {
    non_empty(estimates)?;
    Ok(estimates.iter().map(|e| e - truth).sum::<f64>() / estimates.len() as f64)
}

pub fn rmse(estimates: &[f64], truth: f64) -> Result<f64> {
    non_empty(estimates)?;
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(mse.sqrt())
}

/// Quantile of already sorted values, inclusive linear interpolation:
/// position `h = (len - 1) q`, interpolating between the neighbours of `h`.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub(crate) fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

/// Central interval holding `level` of the estimates: the
/// `(1 - level) / 2` and `1 - (1 - level) / 2` empirical quantiles.
pub fn percentile_interval(estimates: &[f64], level: f64) -> Result<(f64, f64)> {
    non_empty(estimates)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(CbError::InvalidParameter {
            name: "level",
            value: level,
            reason: "must lie strictly inside (0, 1)",
        });
    }
    let sorted = sorted_copy(estimates);
    let tail = (1.0 - level) / 2.0;
    Ok((
        quantile_sorted(&sorted, tail),
        quantile_sorted(&sorted, 1.0 - tail),
    ))
}

/// Sample variance with denominator `len - 1`; zero for a single value.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Seed of replication `index`: the SplitMix64 output function applied to
/// `parent + (index + 1) * 0x9E3779B97F4A7C15` (wrapping).
///
/// Counter based, so a replication's data never depends on which other
/// replications ran or in what order.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Percentile interval level reported per parameter.
pub const INTERVAL_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub params: CbParams,
    pub sample_size: usize,
    pub replications: usize,
    pub em_config: EmConfig,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with the default EM controls (start (0.5, 0.5), not the truth).
    pub fn new(params: CbParams, sample_size: usize, replications: usize, seed: u64) -> Result<Self> {
        let scenario = Self {
            params,
            sample_size,
            replications,
            em_config: EmConfig::default(),
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(CbError::Config("sample size must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(CbError::Config("replications must be at least 1".into()));
        }
        self.em_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub truth: f64,
    pub bias: f64,
    pub rmse: f64,
    pub interval_low: f64,
    pub interval_high: f64,
    /// Indexed by replication; failed replications are absent.
    #[serde(skip)]
    pub estimates: Vec<f64>,
}

impl ParameterSummary {
    fn new(estimates: Vec<f64>, truth: f64) -> Result<Self> {
        let (interval_low, interval_high) = percentile_interval(&estimates, INTERVAL_LEVEL)?;
        Ok(Self {
            truth,
            bias: bias(&estimates, truth)?,
            rmse: rmse(&estimates, truth)?,
            interval_low,
            interval_high,
            estimates,
        })
    }

    /// Monte-Carlo standard error of the mean estimate.
    pub fn mc_standard_error(&self) -> f64 {
        (sample_variance(&self.estimates) / self.estimates.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub p: ParameterSummary,
    pub rho: ParameterSummary,
    /// Replications that hit the iteration cap or failed to fit.
    pub degenerate_count: usize,
    /// Replications whose fit returned an error; not in the estimates.
    pub failed_count: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, Copy)]
struct Replicate {
    p: f64,
    rho: f64,
    converged: bool,
}

fn replicate(scenario: &Scenario, index: usize) -> Result<Replicate> {
    let seed = child_seed(scenario.seed, index as u64);
    let data = sample(&scenario.params, scenario.sample_size, seed)?;
    let fit = em_fit(&data, &scenario.em_config)?;
    Ok(Replicate {
        p: fit.p_hat,
        rho: fit.rho_hat,
        converged: fit.converged(),
    })
}

/// Runs every replication of `scenario` (in parallel) and aggregates.
///
/// Output depends only on the scenario: replication `r` samples with
/// [`child_seed`]`(seed, r)` and results are reduced in index order.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    scenario.validate()?;
    let outcomes: Vec<Result<Replicate>> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| replicate(scenario, r))
        .collect();

    let mut p_hats = Vec::with_capacity(outcomes.len());
    let mut rho_hats = Vec::with_capacity(outcomes.len());
    let mut degenerate_count = 0;
    let mut failed_count = 0;
    let mut last_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(rep) => {
                p_hats.push(rep.p);
                rho_hats.push(rep.rho);
                if !rep.converged {
                    degenerate_count += 1;
                }
            }
            Err(err) if err.is_fit_degeneracy() => {
                failed_count += 1;
                degenerate_count += 1;
                last_error = Some(err);
            }
            Err(err) => return Err(err),
        }
    }
    if p_hats.is_empty() {
        return Err(last_error.unwrap_or(CbError::AllReplicationsFailed(scenario.replications)));
    }
    Ok(ScenarioReport {
        p: ParameterSummary::new(p_hats, scenario.params.p())?,
        rho: ParameterSummary::new(rho_hats, scenario.params.rho())?,
        degenerate_count,
        failed_count,
        replications: scenario.replications,
    })
}
