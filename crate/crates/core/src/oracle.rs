//! Brute-force grid maximizer of the observed-data log-likelihood.
//!
//! Shares nothing with the EM path except the likelihood itself, so it can
//! be used to check that EM lands on the global maximum.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{CbError, Result};
use crate::model::{binomial_ln_pmf_unchecked, boundary_ln_kernel, xlogy, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per axis, endpoints included.
    pub coarse_resolution: usize,
    pub refine_rounds: usize,
    /// Window width multiplier applied at each refinement round.
    pub refine_shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            coarse_resolution: 2001,
            refine_rounds: 3,
            refine_shrink: 0.05,
        }
    }
}

impl GridSpec {
    pub fn new(coarse_resolution: usize, refine_rounds: usize, refine_shrink: f64) -> Result<Self> {
        let spec = Self {
            coarse_resolution,
            refine_rounds,
            refine_shrink,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coarse_resolution < 11 {
            return Err(CbError::Config(format!(
                "grid resolution {} is below the minimum of 11",
                self.coarse_resolution
            )));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return Err(CbError::Config(format!(
                "refine_shrink = {} must lie strictly inside (0, 1)",
                self.refine_shrink
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub p: f64,
    pub rho: f64,
    pub log_likelihood: f64,
}

impl GridPoint {
    /// Higher likelihood first; ties go to the smaller `p`, then smaller `rho`.
    /// NaN likelihoods rank below everything.
    fn better_than(&self, other: &GridPoint) -> bool {
        let key = |ll: f64| if ll.is_nan() { f64::NEG_INFINITY } else { ll };
        match key(self.log_likelihood).partial_cmp(&key(other.log_likelihood)) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Less) => false,
            _ => (self.p, self.rho) < (other.p, other.rho),
        }
    }

    fn pick(a: GridPoint, b: GridPoint) -> GridPoint {
        if b.better_than(&a) {
            b
        } else {
            a
        }
    }
}

/// Result of [`grid_mle`] with the best point after each round.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best: GridPoint,
    /// Round 0 is the coarse pass.
    pub rounds: Vec<GridPoint>,
}

/// Log-likelihood evaluator over a grid.
///
/// For a fixed `p` the interior counts contribute
/// `C_int ln(1 - rho) + sum_y c_y ln Bin(y)`, so each row caches that sum
/// and only the (at most two) boundary counts need a per-point logarithm.
struct RowEvaluator<'a> {
    counts: &'a [(u32, f64)],
    n: u32,
}

/// Boundary count with its two component probabilities at a fixed `p`.
#[derive(Debug, Clone, Copy)]
struct BoundaryTerm {
    count: f64,
    ln_binomial: f64,
    ln_kernel: f64,
    binomial: f64,
    kernel: f64,
    /// Both pieces are exactly representable in linear space.
    linear: bool,
}

#[derive(Debug, Clone)]
struct Row {
    interior_count: f64,
    interior_ln: f64,
    boundary: Vec<BoundaryTerm>,
}

/// `ln(1 - rho)`, `ln(rho)` and the weights themselves for one grid column.
#[derive(Debug, Clone, Copy)]
struct Column {
    rho: f64,
    ln_binom_weight: f64,
    ln_boundary_weight: f64,
}

impl Column {
    fn new(rho: f64) -> Self {
        Self {
            rho,
            ln_binom_weight: xlogy(1.0, 1.0 - rho),
            ln_boundary_weight: xlogy(1.0, rho),
        }
    }
}

/// Below this a log-probability is handled in log space to avoid underflow.
const LINEAR_FLOOR: f64 = -700.0;

fn representable(ln: f64) -> bool {
    ln == f64::NEG_INFINITY || ln >= LINEAR_FLOOR
}

impl RowEvaluator<'_> {
    fn row(&self, p: f64) -> Row {
        let mut row = Row {
            interior_count: 0.0,
            interior_ln: 0.0,
            boundary: Vec::with_capacity(2),
        };
        for &(y, c) in self.counts {
            let ln_binomial = binomial_ln_pmf_unchecked(y, self.n, p);
            if y == 0 || y == self.n {
                let ln_kernel = boundary_ln_kernel(y, self.n, p);
                row.boundary.push(BoundaryTerm {
                    count: c,
                    ln_binomial,
                    ln_kernel,
                    binomial: ln_binomial.exp(),
                    kernel: ln_kernel.exp(),
                    linear: representable(ln_binomial) && representable(ln_kernel),
                });
            } else {
                row.interior_count += c;
                row.interior_ln += c * ln_binomial;
            }
        }
        row
    }

    fn eval(row: &Row, col: &Column) -> f64 {
        let mut total = if row.interior_count > 0.0 {
            row.interior_count * col.ln_binom_weight + row.interior_ln
        } else {
            0.0
        };
        for term in &row.boundary {
            let lp = if term.linear {
                ((1.0 - col.rho) * term.binomial + col.rho * term.kernel).ln()
            } else {
                let a = col.ln_binom_weight + term.ln_binomial;
                let b = col.ln_boundary_weight + term.ln_kernel;
                let hi = a.max(b);
                if hi == f64::NEG_INFINITY {
                    hi
                } else {
                    hi + (a.min(b) - hi).exp().ln_1p()
                }
            };
            total += term.count * lp;
        }
        total
    }
}

fn axis(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect()
}

/// A window of width `width` centred on `center`, shifted to stay in [0, 1].
fn window(center: f64, width: f64) -> (f64, f64) {
    let lo = (center - width / 2.0).max(0.0);
    let hi = (lo + width).min(1.0);
    let lo = (hi - width).max(0.0);
    (lo, hi)
}

fn search_box(
    eval: &RowEvaluator<'_>,
    p_range: (f64, f64),
    rho_range: (f64, f64),
    points: usize,
) -> GridPoint {
    let ps = axis(p_range.0, p_range.1, points);
    let columns: Vec<Column> = axis(rho_range.0, rho_range.1, points)
        .into_iter()
        .map(Column::new)
        .collect();
    ps.par_iter()
        .map(|&p| {
            let row = eval.row(p);
            columns
                .iter()
                .map(|col| GridPoint {
                    p,
                    rho: col.rho,
                    log_likelihood: RowEvaluator::eval(&row, col),
                })
                .reduce(GridPoint::pick)
                .expect("non-empty axis")
        })
        .reduce_with(GridPoint::pick)
        .expect("non-empty axis")
}

/// Grid search over `[0, 1]^2` followed by `refine_rounds` zoomed passes.
///
/// Each refinement evaluates the same number of points per axis on a window
/// `refine_shrink` times the previous width, centred on the incumbent. The
/// incumbent is kept if no point in the new window beats it, so the best
/// likelihood never decreases from round to round.
pub fn grid_search(data: &Dataset, spec: &GridSpec) -> Result<GridSearch> {
    spec.validate()?;
    let counts: Vec<(u32, f64)> = data
        .counts()
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(y, c)| (y as u32, c as f64))
        .collect();
    let eval = RowEvaluator {
        counts: &counts,
        n: data.n(),
    };
    let points = spec.coarse_resolution;
    let mut best = search_box(&eval, (0.0, 1.0), (0.0, 1.0), points);
    let mut rounds = vec![best];
    let mut width = 1.0;
    for _ in 0..spec.refine_rounds {
        width *= spec.refine_shrink;
        let candidate = search_box(
            &eval,
            window(best.p, width),
            window(best.rho, width),
            points,
        );
        best = GridPoint::pick(best, candidate);
        rounds.push(best);
    }
    Ok(GridSearch { best, rounds })
}

/// Best `(p, rho, log-likelihood)` found by [`grid_search`].
pub fn grid_mle(data: &Dataset, spec: &GridSpec) -> Result<GridPoint> {
    grid_search(data, spec).map(|s| s.best)
}
