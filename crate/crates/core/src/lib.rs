//! Maximum-likelihood estimation for the correlated binomial distribution
//! CB(n, p, rho) by expectation-maximization, with a seeded sampler, a
//! brute-force grid oracle, a Monte-Carlo study harness and box-percentile
//! plot output.

pub mod cli;
pub mod em;
pub mod error;
pub mod files;
pub mod model;
pub mod oracle;
pub mod plot;
pub mod sim;

pub use em::{e_step, em_fit, em_trajectory, m_step, q_function, EmConfig, EmResult, Iterate};
pub use error::{CbError, Result};
pub use model::{
    binomial_pmf, cb_pmf, log_likelihood, log_likelihood_clamped, sample, CbParams, Dataset,
};
pub use oracle::{grid_mle, grid_search, GridPoint, GridSpec};
pub use plot::{build_quantile_polygon, render_svg, QuantilePolygon};
pub use sim::{bias, percentile_interval, rmse, run_scenario, Scenario, ScenarioReport};
