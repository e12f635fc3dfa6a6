//! EM estimation of `(p, rho)` for CB(n, p, rho).
//!
//! Each observation carries a latent indicator `Z_i`: 1 if it came from
//! the two-point component on `{0, n}`, 0 if from the binomial component.
//! The E-step computes responsibilities `tau_i = E[Z_i | y_i, theta]`,
//! which are identically zero off `{0, n}`. The M-step maximizes the
//! expected complete-data log-likelihood in closed form:
//!
//! ```text
//! rho = sum(tau_i) / k
//! p   = sum(tau_i y_i / n + (1 - tau_i) y_i) / sum(n (1 - tau_i) + tau_i)
//! ```

use statrs::function::factorial::ln_binomial;

use crate::error::{CbError, Result};
use crate::model::{binomial_ln_pmf_unchecked, log_likelihood, xlogy, CbParams, Dataset};

/// Controls for [`em_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub start_p: f64,
    pub start_rho: f64,
    pub max_iterations: usize,
    pub epsilon: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            start_p: 0.5,
            start_rho: 0.5,
            max_iterations: 1000,
            epsilon: 1e-15,
        }
    }
}

impl EmConfig {
    pub fn new(start_p: f64, start_rho: f64, max_iterations: usize, epsilon: f64) -> Result<Self> {
        let config = Self {
            start_p,
            start_rho,
            max_iterations,
            epsilon,
        };
        config.validate()?;
        Ok(config)
    }

    /// Start values must be strictly inside (0, 1). `rho = 0` in particular
    /// is an absorbing state that would silently return the binomial MLE.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("start_p", self.start_p), ("start_rho", self.start_rho)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(CbError::Config(format!(
                    "{name} = {value} must lie strictly inside (0, 1)"
                )));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(CbError::Config(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(CbError::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub p_hat: f64,
    pub rho_hat: f64,
    pub iterations: usize,
    pub converged_p: bool,
    pub converged_rho: bool,
    pub log_likelihood: f64,
    /// Responsibilities from the E-step that produced `(p_hat, rho_hat)`.
    pub responsibilities: Vec<f64>,
}

impl EmResult {
    /// True when the loop stopped on the tolerance test rather than on the
    /// iteration cap.
    pub fn converged(&self) -> bool {
        self.converged_p || self.converged_rho
    }
}

/// One point on an EM trajectory. Iteration 0 is the start value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub iteration: usize,
    pub p: f64,
    pub rho: f64,
    pub log_likelihood: f64,
}

/// Posterior weight of the two-point component for a single count.
///
/// Mirrors the direct-arithmetic form `rho p^(y/n) (1-p)^((n-y)/n)` over
/// the sum of both weighted component probabilities.
fn responsibility(y: u32, n: u32, p: f64, rho: f64) -> Option<f64> {
    let n_f = n as f64;
    let boundary = rho * p.powf(y as f64 / n_f) * (1.0 - p).powf((n - y) as f64 / n_f);
    let binomial = (1.0 - rho) * binomial_ln_pmf_unchecked(y, n, p).exp();
    let total = boundary + binomial;
    if total > 0.0 {
        Some(boundary / total)
    } else {
        None
    }
}

fn check_params_match(data: &Dataset, params: &CbParams) -> Result<()> {
    if data.n() != params.n() {
        return Err(CbError::Config(format!(
            "dataset has n = {} but parameters have n = {}",
            data.n(),
            params.n()
        )));
    }
    Ok(())
}

/// Responsibilities `tau_i` for every observation.
///
/// Fails with [`CbError::ZeroProbability`] when an observation has zero
/// probability under `params`.
pub fn e_step(data: &Dataset, params: &CbParams) -> Result<Vec<f64>> {
    check_params_match(data, params)?;
    let n = data.n();
    data.observations()
        .iter()
        .enumerate()
        .map(|(index, &y)| {
            if data.is_boundary(y) {
                responsibility(y, n, params.p(), params.rho()).ok_or(CbError::ZeroProbability {
                    index,
                    value: y,
                    p: params.p(),
                    rho: params.rho(),
                })
            } else if cb_prob_positive(y, n, params) {
                Ok(0.0)
            } else {
                Err(CbError::ZeroProbability {
                    index,
                    value: y,
                    p: params.p(),
                    rho: params.rho(),
                })
            }
        })
        .collect()
}

fn cb_prob_positive(y: u32, n: u32, params: &CbParams) -> bool {
    params.rho() < 1.0 && binomial_ln_pmf_unchecked(y, n, params.p()) > f64::NEG_INFINITY
}

fn check_responsibilities(data: &Dataset, responsibilities: &[f64]) -> Result<()> {
    if responsibilities.len() != data.len() {
        return Err(CbError::Config(format!(
            "{} responsibilities for {} observations",
            responsibilities.len(),
            data.len()
        )));
    }
    if let Some(&bad) = responsibilities.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CbError::InvalidParameter {
            name: "responsibility",
            value: bad,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

/// Closed-form maximizer `(p, rho)` of the Q-function for fixed
/// responsibilities.
pub fn m_step(data: &Dataset, responsibilities: &[f64]) -> Result<(f64, f64)> {
    check_responsibilities(data, responsibilities)?;
    Ok(m_step_unchecked(data, responsibilities))
}

fn m_step_unchecked(data: &Dataset, tau: &[f64]) -> (f64, f64) {
    let n = data.n() as f64;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut tau_sum = 0.0;
    for (&y, &t) in data.observations().iter().zip(tau) {
        let y = y as f64;
        numerator += t * y / n + (1.0 - t) * y;
        denominator += t + (1.0 - t) * n;
        tau_sum += t;
    }
    let p = (numerator / denominator).clamp(0.0, 1.0);
    let rho = (tau_sum / tau.len() as f64).clamp(0.0, 1.0);
    (p, rho)
}

/// Expected complete-data log-likelihood `Q(theta | tau)`.
pub fn q_function(data: &Dataset, responsibilities: &[f64], params: &CbParams) -> Result<f64> {
    check_params_match(data, params)?;
    check_responsibilities(data, responsibilities)?;
    let n = data.n();
    let n_f = n as f64;
    let (mut boundary, mut binomial, mut successes, mut failures, mut ln_coef) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&y, &t) in data.observations().iter().zip(responsibilities) {
        let y_f = y as f64;
        boundary += t;
        binomial += 1.0 - t;
        successes += t * y_f / n_f + (1.0 - t) * y_f;
        failures += t * (n_f - y_f) / n_f + (1.0 - t) * (n_f - y_f);
        if t < 1.0 {
            ln_coef += (1.0 - t) * ln_binomial(n as u64, y as u64);
        }
    }
    Ok(xlogy(boundary, params.rho())
        + xlogy(binomial, 1.0 - params.rho())
        + xlogy(successes, params.p())
        + xlogy(failures, 1.0 - params.p())
        + ln_coef)
}

/// Fits `(p, rho)` by EM.
///
/// One update is applied to the start value before the loop, which sets
/// the iteration counter to 1. Each further update increments it. The loop
/// ends at `max_iterations`, or as soon as either coordinate moves by less
/// than `epsilon`; the two flags record which coordinates passed the test
/// on the final update.
pub fn em_fit(data: &Dataset, config: &EmConfig) -> Result<EmResult> {
    em_fit_observed(data, config, |_| {})
}

/// Full sequence of iterates visited by [`em_fit`], start value included.
pub fn em_trajectory(data: &Dataset, config: &EmConfig) -> Result<(EmResult, Vec<Iterate>)> {
    let mut path = Vec::new();
    let result = em_fit_observed(data, config, |it| path.push(it))?;
    Ok((result, path))
}

/// [`em_fit`] with a callback receiving every iterate, start value first.
pub fn em_fit_observed<F>(data: &Dataset, config: &EmConfig, mut observe: F) -> Result<EmResult>
where
    F: FnMut(Iterate),
{
    config.validate()?;
    let n = data.n();
    let model = CbParams::new(n, config.start_p, config.start_rho)?;
    // Only observations on {0, n} can carry a nonzero responsibility.
    let boundary_index: Vec<usize> = data
        .observations()
        .iter()
        .enumerate()
        .filter(|(_, &y)| data.is_boundary(y))
        .map(|(i, _)| i)
        .collect();
    let mut tau = vec![0.0; data.len()];

    let evaluate = |iteration: usize, p: f64, rho: f64| -> Result<Iterate> {
        let ll = log_likelihood(data, &model.with(p, rho)?)?;
        if !ll.is_finite() {
            return Err(CbError::NonFiniteLikelihood { iteration, p, rho });
        }
        Ok(Iterate {
            iteration,
            p,
            rho,
            log_likelihood: ll,
        })
    };
    let update = |p: f64, rho: f64, tau: &mut [f64]| -> Result<(f64, f64)> {
        for &i in &boundary_index {
            let y = data.observations()[i];
            tau[i] = responsibility(y, n, p, rho).ok_or(CbError::ZeroProbability {
                index: i,
                value: y,
                p,
                rho,
            })?;
        }
        Ok(m_step_unchecked(data, tau))
    };

    observe(evaluate(0, config.start_p, config.start_rho)?);
    let (mut p, mut rho) = update(config.start_p, config.start_rho, &mut tau)?;
    let mut iterations = 1;
    let mut current = evaluate(iterations, p, rho)?;
    observe(current);

    let (mut converged_p, mut converged_rho) = (false, false);
    while iterations < config.max_iterations && !converged_p && !converged_rho {
        let (next_p, next_rho) = update(p, rho, &mut tau)?;
        converged_p = (next_p - p).abs() < config.epsilon;
        converged_rho = (next_rho - rho).abs() < config.epsilon;
        iterations += 1;
        p = next_p;
        rho = next_rho;
        current = evaluate(iterations, p, rho)?;
        observe(current);
    }

    Ok(EmResult {
        p_hat: p,
        rho_hat: rho,
        iterations,
        converged_p,
        converged_rho,
        log_likelihood: current.log_likelihood,
        responsibilities: tau,
    })
}
