//! Liu-process inverse distribution and the α-path reduction of an
//! uncertain fractional differential equation to a family of deterministic
//! Caputo problems.
//!
//! For the UFDE D^ν X = f(t, X) + g(t, X) dC/dt driven by a Liu process C,
//! the α-path X^α solves the deterministic FDE with right-hand side
//! f(t, x) + |g(t, x)| Φ^{−1}(α), and by the Yao–Chen formula X^α is the
//! α-quantile of the uncertain solution at every time.

use std::sync::Arc;

use rayon::prelude::*;

use crate::adams::{self, CaputoProblem, Rhs, SolverConfig, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{AlphaGrid, TimeGrid};

/// Inverse standard normal uncertain distribution
/// Φ^{−1}(α) = (√3/π) ln(α/(1−α)), odd-symmetric about α = 1/2.
pub fn liu_inverse_std(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    Ok(3.0f64.sqrt() / std::f64::consts::PI * (alpha / (1.0 - alpha)).ln())
}

/// UFDE with drift f, diffusion g and a single initial value.
#[derive(Clone)]
pub struct UncertainProblem {
    pub nu: f64,
    pub drift: Arc<dyn Rhs>,
    pub diffusion: Arc<dyn Rhs>,
    pub x0: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl UncertainProblem {
    pub fn new(
        nu: f64,
        drift: Arc<dyn Rhs>,
        diffusion: Arc<dyn Rhs>,
        x0: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::InvalidNu { nu });
        }
        if !(t_start < t_end) {
            return Err(Error::InvalidConfig(format!(
                "need t_start < t_end (got {t_start} and {t_end})"
            )));
        }
        Ok(Self {
            nu,
            drift,
            diffusion,
            x0,
            t_start,
            t_end,
        })
    }
}

/// Combined α-path right-hand side f(t, x) + |g(t, x)| Φ^{−1}(α).
/// The absolute value is applied at every evaluation of g, so
/// sign-changing diffusions are handled pointwise.
struct AlphaPathRhs {
    drift: Arc<dyn Rhs>,
    diffusion: Arc<dyn Rhs>,
    noise: f64,
}

impl Rhs for AlphaPathRhs {
    fn eval(&self, t: f64, x: f64) -> std::result::Result<f64, adams::DomainViolation> {
        let f = self.drift.eval(t, x)?;
        let g = self.diffusion.eval(t, x)?;
        Ok(f + g.abs() * self.noise)
    }

    fn eval_clamped(
        &self,
        t: f64,
        x: f64,
    ) -> std::result::Result<(f64, bool), adams::DomainViolation> {
        let (f, cf) = self.drift.eval_clamped(t, x)?;
        let (g, cg) = self.diffusion.eval_clamped(t, x)?;
        Ok((f + g.abs() * self.noise, cf || cg))
    }
}

/// The deterministic FDE solved by the α-path of `u`.
pub fn alpha_path_problem(u: &UncertainProblem, alpha: f64) -> Result<CaputoProblem> {
    let noise = liu_inverse_std(alpha)?;
    CaputoProblem::new(
        u.nu,
        Arc::new(AlphaPathRhs {
            drift: u.drift.clone(),
            diffusion: u.diffusion.clone(),
            noise,
        }),
        u.x0,
        u.t_start,
        u.t_end,
    )
}

/// Inverse-distribution surface: X\[α_i\]\[t_j\] over an α grid and a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSurface {
    alpha_grid: AlphaGrid,
    grid: TimeGrid,
    values: Vec<Vec<f64>>,
}

impl AlphaSurface {
    /// Assemble a surface from precomputed rows (test support). Row lengths
    /// must match the time grid and the row count the α grid.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn from_parts(
        alpha_grid: AlphaGrid,
        grid: TimeGrid,
        values: Vec<Vec<f64>>,
    ) -> Self {
        debug_assert_eq!(values.len(), alpha_grid.len());
        debug_assert!(values.iter().all(|r| r.len() == grid.len()));
        Self {
            alpha_grid,
            grid,
            values,
        }
    }

    pub fn alpha_grid(&self) -> &AlphaGrid {
        &self.alpha_grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Row i is the α_i-path sampled on the time grid.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Numerical check of the Yao–Chen ordering: rows nondecreasing in α at
    /// every grid time, up to `tol` of slack.
    pub fn is_nondecreasing_in_alpha(&self, tol: f64) -> bool {
        for pair in self.values.windows(2) {
            for (lo, hi) in pair[0].iter().zip(pair[1].iter()) {
                if *hi < *lo - tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Solve the α-path FDE for every level of `alphas`.
///
/// Rows are independent solves and run in parallel; assembly keeps grid
/// order, so the result does not depend on scheduling. The sweep fails
/// atomically: the first failing row aborts it, tagged with its α.
pub fn sweep(
    u: &UncertainProblem,
    alphas: &AlphaGrid,
    grid: &TimeGrid,
    config: &SolverConfig,
) -> Result<AlphaSurface> {
    let rows: Vec<Result<Vec<f64>>> = alphas
        .values()
        .par_iter()
        .map(|&alpha| solve_row(u, alpha, grid, config).map(|t| t.values))
        .collect();
    let mut values = Vec::with_capacity(rows.len());
    for row in rows {
        values.push(row?);
    }
    Ok(AlphaSurface {
        alpha_grid: alphas.clone(),
        grid: grid.clone(),
        values,
    })
}

/// Partial-results sweep: failed rows are dropped from the surface and
/// returned alongside it with their α levels. Errors only if no row
/// succeeds.
pub fn sweep_partial(
    u: &UncertainProblem,
    alphas: &AlphaGrid,
    grid: &TimeGrid,
    config: &SolverConfig,
) -> Result<(AlphaSurface, Vec<(f64, Error)>)> {
    let rows: Vec<(f64, Result<Vec<f64>>)> = alphas
        .values()
        .par_iter()
        .map(|&alpha| (alpha, solve_row(u, alpha, grid, config).map(|t| t.values)))
        .collect();
    let mut kept_alphas = Vec::new();
    let mut values = Vec::new();
    let mut failures = Vec::new();
    for (alpha, row) in rows {
        match row {
            Ok(v) => {
                kept_alphas.push(alpha);
                values.push(v);
            }
            Err(e) => failures.push((alpha, e)),
        }
    }
    if values.is_empty() {
        let (alpha, e) = failures.pop().expect("at least one row");
        return Err(Error::SweepRow {
            alpha,
            source: Box::new(e),
        });
    }
    Ok((
        AlphaSurface {
            alpha_grid: AlphaGrid::new(kept_alphas)?,
            grid: grid.clone(),
            values,
        },
        failures,
    ))
}

fn solve_row(
    u: &UncertainProblem,
    alpha: f64,
    grid: &TimeGrid,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let problem = alpha_path_problem(u, alpha)?;
    adams::solve(&problem, grid, config).map_err(|e| Error::SweepRow {
        alpha,
        source: Box::new(e),
    })
}
