//! The correlated binomial distribution CB(n, p, rho).
//!
//! CB(n, p, rho) is a two-component mixture: with weight `1 - rho` an
//! ordinary Binomial(n, p), and with weight `rho` a two-point distribution
//! that puts mass `1 - p` on 0 and `p` on `n`.
//!
//! All mass functions are evaluated in log space and exponentiated at the
//! end. Parameters on the boundary of `[0, 1]` are allowed and use the
//! convention `0^0 = 1` (equivalently `0 * ln 0 = 0`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::factorial::ln_binomial;

use crate::error::{CbError, Result};

/// Per-observation probabilities below this are raised to it in clamped mode.
pub const CLAMP_FLOOR: f64 = 1e-300;

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(CbError::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

fn check_trials(n: u32) -> Result<()> {
    if n == 0 {
        return Err(CbError::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "trial count must be at least 1",
        });
    }
    Ok(())
}

/// Parameters of CB(n, p, rho).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbParams {
    n: u32,
    p: f64,
    rho: f64,
}

impl CbParams {
    pub fn new(n: u32, p: f64, rho: f64) -> Result<Self> {
        check_trials(n)?;
        check_unit("p", p)?;
        check_unit("rho", rho)?;
        Ok(Self { n, p, rho })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Same `n`, new `(p, rho)`.
    pub fn with(&self, p: f64, rho: f64) -> Result<Self> {
        Self::new(self.n, p, rho)
    }
}

/// `k >= 1` observed counts sharing one trial count `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: u32,
    observations: Vec<u32>,
}

impl Dataset {
    pub fn new(n: u32, observations: Vec<u32>) -> Result<Self> {
        check_trials(n)?;
        if observations.is_empty() {
            return Err(CbError::Empty("dataset has no observations"));
        }
        if let Some(&value) = observations.iter().find(|&&y| y > n) {
            return Err(CbError::OutOfSupport { value, n });
        }
        Ok(Self { n, observations })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn observations(&self) -> &[u32] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.observations.iter().map(|&y| y as f64).sum::<f64>() / self.len() as f64
    }

    /// Whether `y` is in the support of the two-point component, `{0, n}`.
    pub fn is_boundary(&self, y: u32) -> bool {
        y == 0 || y == self.n
    }

    /// Occurrence count of every value `0..=n`.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n as usize + 1];
        for &y in &self.observations {
            counts[y as usize] += 1;
        }
        counts
    }
}

/// `a * ln(b)` with `0 * ln(0) = 0`.
pub(crate) fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    let lo = a.min(b);
    hi + (lo - hi).exp().ln_1p()
}

fn check_support(y: u32, n: u32) -> Result<()> {
    check_trials(n)?;
    if y > n {
        return Err(CbError::OutOfSupport { value: y, n });
    }
    Ok(())
}

pub(crate) fn binomial_ln_pmf_unchecked(y: u32, n: u32, p: f64) -> f64 {
    ln_binomial(n as u64, y as u64) + xlogy(y as f64, p) + xlogy((n - y) as f64, 1.0 - p)
}

/// Log of `p^(y/n) (1-p)^((n-y)/n)`, the two-point component's kernel.
pub(crate) fn boundary_ln_kernel(y: u32, n: u32, p: f64) -> f64 {
    let n_f = n as f64;
    xlogy(y as f64 / n_f, p) + xlogy((n - y) as f64 / n_f, 1.0 - p)
}

pub fn binomial_ln_pmf(y: u32, n: u32, p: f64) -> Result<f64> {
    check_support(y, n)?;
    check_unit("p", p)?;
    Ok(binomial_ln_pmf_unchecked(y, n, p))
}

/// `C(n, y) p^y (1-p)^(n-y)`.
pub fn binomial_pmf(y: u32, n: u32, p: f64) -> Result<f64> {
    binomial_ln_pmf(y, n, p).map(f64::exp)
}

pub(crate) fn cb_ln_pmf_unchecked(y: u32, params: &CbParams) -> f64 {
    let n = params.n;
    let binom = xlogy(1.0, 1.0 - params.rho) + binomial_ln_pmf_unchecked(y, n, params.p);
    if y == 0 || y == n {
        let boundary = xlogy(1.0, params.rho) + boundary_ln_kernel(y, n, params.p);
        log_add_exp(binom, boundary)
    } else {
        binom
    }
}

pub fn cb_ln_pmf(y: u32, params: &CbParams) -> Result<f64> {
    check_support(y, params.n)?;
    Ok(cb_ln_pmf_unchecked(y, params))
}

/// `(1-rho) C(n,y) p^y (1-p)^(n-y) + rho p^(y/n) (1-p)^((n-y)/n) 1{y in {0,n}}`.
pub fn cb_pmf(y: u32, params: &CbParams) -> Result<f64> {
    cb_ln_pmf(y, params).map(f64::exp)
}

/// Observed-data log-likelihood `sum_i ln P(y_i)`.
///
/// Returns `-inf` when some observation has probability zero under
/// `params`; see [`log_likelihood_clamped`] for a finite variant.
pub fn log_likelihood(data: &Dataset, params: &CbParams) -> Result<f64> {
    log_likelihood_with(data, params, None)
}

/// As [`log_likelihood`], but each per-observation probability is floored
/// at [`CLAMP_FLOOR`] so the result is always finite.
pub fn log_likelihood_clamped(data: &Dataset, params: &CbParams) -> Result<f64> {
    log_likelihood_with(data, params, Some(CLAMP_FLOOR.ln()))
}

fn log_likelihood_with(data: &Dataset, params: &CbParams, floor: Option<f64>) -> Result<f64> {
    if data.n != params.n {
        return Err(CbError::Config(format!(
            "dataset has n = {} but parameters have n = {}",
            data.n, params.n
        )));
    }
    let total = data
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(y, &c)| {
            let lp = cb_ln_pmf_unchecked(y as u32, params);
            let lp = match floor {
                Some(f) => lp.max(f),
                None => lp,
            };
            c as f64 * lp
        })
        .sum();
    Ok(total)
}

/// Draws `k` independent observations from CB(n, p, rho).
///
/// The generator is ChaCha8 seeded with `seed`. Each observation consumes
/// exactly two uniform `f64` draws `u1, u2` in `[0, 1)`:
///
/// * `u1 < rho` selects the two-point component, which yields `n` when
///   `u2 < p` and `0` otherwise;
/// * otherwise `u2` is inverted through the Binomial(n, p) CDF, returning
///   the smallest `y` with `u2 < F(y)`.
///
/// The stream layout never depends on the branch taken, so datasets are
/// reproducible for a given `(params, k, seed)`.
pub fn sample(params: &CbParams, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(CbError::Empty("sample size k must be at least 1"));
    }
    let n = params.n;
    let cdf = binomial_cdf_table(n, params.p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let observations = (0..k)
        .map(|_| {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            if u1 < params.rho {
                if u2 < params.p {
                    n
                } else {
                    0
                }
            } else {
                cdf.iter().position(|&f| u2 < f).unwrap_or(n as usize) as u32
            }
        })
        .collect();
    Dataset::new(n, observations)
}

fn binomial_cdf_table(n: u32, p: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = (0..=n)
        .map(|y| {
            acc += binomial_ln_pmf_unchecked(y, n, p).exp();
            acc
        })
        .collect();
    // Rounding can leave the total a hair below 1.
    *cdf.last_mut().expect("n >= 1") = 1.0;
    cdf
}
