//! Plain-text observation and estimate files.
//!
//! Observation files hold non-negative integers separated by any mix of
//! whitespace and newlines. A `#` starts a comment running to the end of
//! the line. Estimate files hold one real number per line, with the same
//! comment and blank-line rules.

use std::fmt::Write as _;

use crate::error::{CbError, Result};
use crate::model::Dataset;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        (i + 1, body)
    })
}

pub fn parse_observations(text: &str, n: u32) -> Result<Dataset> {
    let mut observations = Vec::new();
    for (line, body) in content_lines(text) {
        for token in body.split_whitespace() {
            let value: u32 = token.parse().map_err(|_| CbError::Parse {
                line,
                message: format!("`{token}` is not a non-negative integer"),
            })?;
            if value > n {
                return Err(CbError::Parse {
                    line,
                    message: format!("observation {value} exceeds n = {n}"),
                });
            }
            observations.push(value);
        }
    }
    if observations.is_empty() {
        return Err(CbError::Empty("input contains no observations"));
    }
    Dataset::new(n, observations)
}

pub fn format_observations(data: &Dataset, header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for y in data.observations() {
        let _ = writeln!(out, "{y}");
    }
    out
}

pub fn parse_estimates(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (line, body) in content_lines(text) {
        let token = body.trim();
        if token.is_empty() {
            continue;
        }
        let value: f64 = token.parse().map_err(|_| CbError::Parse {
            line,
            message: format!("`{token}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(CbError::Parse {
                line,
                message: format!("`{token}` is not finite"),
            });
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(CbError::Empty("estimates file contains no values"));
    }
    Ok(values)
}

/// One value per line, shortest round-trip representation.
pub fn format_estimates(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}
