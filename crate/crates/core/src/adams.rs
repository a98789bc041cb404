//! n-order fractional Adams predictor–corrector for Caputo initial value
//! problems
//!
//!   D^ν X(t) = F(t, X(t)),  X(t_0) = x0,  0 < ν ≤ 1,
//!
//! in the integral form X(t) = x0 + (1/Γ(ν)) ∫ (t−s)^{ν−1} F(s, X_s) ds.
//!
//! Every subinterval contributes a product-integration term: F is replaced
//! by the Lagrange interpolant on a window of `order` grid nodes and the
//! kernel is integrated exactly through its moments. Two memory layouts are
//! supported:
//!
//! * [`MemoryMode::Full`] re-integrates the whole history with the kernel
//!   anchored at the current target node. This is the form consistent with
//!   the Caputo integral representation and reduces to classical
//!   Adams–Bashforth/Moulton at ν = 1.
//! * [`MemoryMode::Increment`] advances X by the product integral over the
//!   last interval only, the local scheme where X_{t_n} = X_{t_{n−1}} +
//!   (1/Γ(ν)) ∫_{t_{n−1}}^{t_n} (t_n−s)^{ν−1} F ds.
//!
//! The first points are generated by progressively higher-order windows
//! (order ramp), optionally on a sub-stepped prefix grid, because startup
//! error contaminates everything downstream.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::lagrange::{split_lagrange_unchecked, BasisCoefficients, NodeWindow};
use crate::moments::shifted_moment_row;

/// Hard cap on the interpolation order.
pub const MAX_ORDER: usize = 6;

/// Reported by a right-hand side when its formula is undefined at the
/// requested point (negative radicand, log of a nonpositive value, …).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainViolation {
    pub reason: &'static str,
}

/// Right-hand side F(t, x) of a Caputo problem.
pub trait Rhs: Send + Sync {
    fn eval(&self, t: f64, x: f64) -> std::result::Result<f64, DomainViolation>;

    /// Evaluate with out-of-domain arguments clamped to the domain boundary
    /// instead of failing; the flag reports whether clamping occurred.
    /// The default implementation never clamps, so right-hand sides without
    /// clamping support keep strict behavior under [`DomainPolicy::Clamp`].
    fn eval_clamped(&self, t: f64, x: f64) -> std::result::Result<(f64, bool), DomainViolation> {
        self.eval(t, x).map(|v| (v, false))
    }
}

/// Plain closure right-hand side; never reports domain violations.
pub struct FnRhs<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Rhs for FnRhs<F> {
    fn eval(&self, t: f64, x: f64) -> std::result::Result<f64, DomainViolation> {
        Ok(self.0(t, x))
    }
}

/// Fallible closure right-hand side.
pub struct CheckedRhs<F>(pub F);

impl<F> Rhs for CheckedRhs<F>
where
    F: Fn(f64, f64) -> std::result::Result<f64, DomainViolation> + Send + Sync,
{
    fn eval(&self, t: f64, x: f64) -> std::result::Result<f64, DomainViolation> {
        self.0(t, x)
    }
}

/// Deterministic Caputo initial value problem.
#[derive(Clone)]
pub struct CaputoProblem {
    pub nu: f64,
    pub rhs: Arc<dyn Rhs>,
    pub x0: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl CaputoProblem {
    pub fn new(nu: f64, rhs: Arc<dyn Rhs>, x0: f64, t_start: f64, t_end: f64) -> Result<Self> {
        let p = Self {
            nu,
            rhs,
            x0,
            t_start,
            t_end,
        };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor from an infallible closure.
    pub fn from_fn<F>(nu: f64, rhs: F, x0: f64, t_start: f64, t_end: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(nu, Arc::new(FnRhs(rhs)), x0, t_start, t_end)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidNu { nu: self.nu });
        }
        if !(self.t_start < self.t_end) {
            return Err(Error::InvalidConfig(format!(
                "need t_start < t_end (got {} and {})",
                self.t_start, self.t_end
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidConfig("x0 is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryMode {
    /// Re-anchored product integration of the whole history (default).
    #[default]
    Full,
    /// Local increment over the final interval only.
    Increment,
}

/// What to do when the right-hand side reports a domain violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainPolicy {
    /// Fail the solve (default).
    #[default]
    Error,
    /// Ask the RHS to clamp to the domain boundary and mark the trajectory.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Number of interpolation nodes per window (n of the method).
    pub order: usize,
    pub memory: MemoryMode,
    /// Fixed-point corrector passes per step (PECE when 1).
    pub corrector_iterations: usize,
    /// Sub-step factor applied to the first `order` intervals; 1 disables.
    pub bootstrap_refine: usize,
    pub domain_policy: DomainPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            order: 3,
            memory: MemoryMode::Full,
            corrector_iterations: 1,
            bootstrap_refine: 10,
            domain_policy: DomainPolicy::Error,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::InvalidConfig(format!(
                "order {} outside 1..={MAX_ORDER}",
                self.order
            )));
        }
        if self.order >= 5 {
            log::warn!(
                "order {} interpolation windows tend to oscillate; 3 or 4 is usually better",
                self.order
            );
        }
        if self.corrector_iterations == 0 {
            return Err(Error::InvalidConfig(
                "corrector_iterations must be at least 1".into(),
            ));
        }
        if self.bootstrap_refine == 0 {
            return Err(Error::InvalidConfig(
                "bootstrap_refine must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Solution samples on a grid, with the cached right-hand side values.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub rhs_values: Vec<f64>,
    /// True if any RHS evaluation was clamped under [`DomainPolicy::Clamp`].
    pub clamped: bool,
}

impl Trajectory {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// One predictor–corrector step driver. `solve` wraps it; tests can drive
/// `predict`/`correct`/`push` directly.
pub struct Stepper<'a> {
    problem: &'a CaputoProblem,
    nodes: &'a [f64],
    order: usize,
    memory: MemoryMode,
    policy: DomainPolicy,
    inv_gamma_nu: f64,
    values: Vec<f64>,
    rhs_values: Vec<f64>,
    clamped: bool,
    // Lagrange coefficients per (window start, window length), in the frame
    // shifted by the window's first node; valid for the whole solve.
    basis_cache: HashMap<(usize, usize), BasisCoefficients>,
    // Kernel moments per (interval index, window start) for the current
    // target node. Rows for older targets are never queried again, so they
    // are dropped when the target advances.
    moment_rows: HashMap<(usize, usize), [f64; MAX_ORDER]>,
    moment_target: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(problem: &'a CaputoProblem, grid: &'a TimeGrid, config: &SolverConfig) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        let nodes = grid.nodes();
        let scale = problem.t_end - problem.t_start;
        if (grid.t_start() - problem.t_start).abs() > 1e-12 * scale.abs()
            || (grid.t_end() - problem.t_end).abs() > 1e-12 * scale.abs()
        {
            return Err(Error::InvalidGrid(format!(
                "grid [{}, {}] does not span the problem horizon [{}, {}]",
                grid.t_start(),
                grid.t_end(),
                problem.t_start,
                problem.t_end
            )));
        }
        let mut stepper = Self {
            problem,
            nodes,
            order: config.order,
            memory: config.memory,
            policy: config.domain_policy,
            inv_gamma_nu: 1.0 / libm::tgamma(problem.nu),
            values: Vec::with_capacity(nodes.len()),
            rhs_values: Vec::with_capacity(nodes.len()),
            clamped: false,
            basis_cache: HashMap::new(),
            moment_rows: HashMap::new(),
            moment_target: 0,
        };
        let f0 = stepper.eval_rhs(nodes[0], problem.x0)?;
        stepper.values.push(problem.x0);
        stepper.rhs_values.push(f0);
        Ok(stepper)
    }

    /// Points computed so far (the next step has this index).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // seeded with x0
    }

    pub fn is_done(&self) -> bool {
        self.values.len() == self.nodes.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rhs_values(&self) -> &[f64] {
        &self.rhs_values
    }

    /// Evaluate F under the configured domain policy.
    pub fn eval_rhs(&mut self, t: f64, x: f64) -> Result<f64> {
        let outcome = match self.policy {
            DomainPolicy::Error => self.problem.rhs.eval(t, x).map(|v| (v, false)),
            DomainPolicy::Clamp => self.problem.rhs.eval_clamped(t, x),
        };
        match outcome {
            Ok((v, c)) => {
                self.clamped |= c;
                if !v.is_finite() {
                    return Err(Error::NonFinite { t });
                }
                Ok(v)
            }
            Err(dv) => Err(Error::RhsDomain {
                t,
                x,
                reason: dv.reason.to_string(),
            }),
        }
    }

    /// Predictor for the next node: memory term plus the extrapolating
    /// window {t_{n−m}, …, t_{n−1}} integrated over (t_{n−1}, t_n).
    pub fn predict(&mut self) -> Result<f64> {
        let n = self.next_index()?;
        let m = self.order.min(n);
        let local = self.window_sum(n - m, m, n - 1, n, None);
        Ok(match self.memory {
            MemoryMode::Increment => self.values[n - 1] + self.inv_gamma_nu * local,
            MemoryMode::Full => {
                self.problem.x0 + self.inv_gamma_nu * (self.history_sum(n, n - 1, None) + local)
            }
        })
    }

    /// One corrector pass for the next node, with `f_new` the latest
    /// evaluation of F(t_n, ·). The window shifts to {t_{n−m+1}, …, t_n}.
    pub fn correct(&mut self, f_new: f64) -> Result<f64> {
        let n = self.next_index()?;
        let m = self.order.min(n + 1);
        let local = self.window_sum(n + 1 - m, m, n - 1, n, Some(f_new));
        Ok(match self.memory {
            MemoryMode::Increment => self.values[n - 1] + self.inv_gamma_nu * local,
            MemoryMode::Full => {
                self.problem.x0
                    + self.inv_gamma_nu * (self.history_sum(n, n, Some(f_new)) + local)
            }
        })
    }

    /// Commit the next node's value and its final RHS evaluation.
    pub fn push(&mut self, value: f64, rhs_value: f64) -> Result<()> {
        let n = self.next_index()?;
        if !value.is_finite() || !rhs_value.is_finite() {
            return Err(Error::NonFinite { t: self.nodes[n] });
        }
        self.values.push(value);
        self.rhs_values.push(rhs_value);
        Ok(())
    }

    /// Full predict–evaluate–correct–evaluate cycle for the next node.
    pub fn advance(&mut self, corrector_iterations: usize) -> Result<f64> {
        let n = self.next_index()?;
        let t_n = self.nodes[n];
        let mut x = self.predict()?;
        if !x.is_finite() {
            return Err(Error::NonFinite { t: t_n });
        }
        for _ in 0..corrector_iterations {
            let f = self.eval_rhs(t_n, x)?;
            x = self.correct(f)?;
            if !x.is_finite() {
                return Err(Error::NonFinite { t: t_n });
            }
        }
        let f = self.eval_rhs(t_n, x)?;
        self.push(x, f)?;
        Ok(x)
    }

    fn next_index(&self) -> Result<usize> {
        let n = self.values.len();
        if n >= self.nodes.len() {
            return Err(Error::Precondition("grid exhausted".into()));
        }
        Ok(n)
    }

    /// Σ over past intervals i = 0 .. target−2 of the product integral with
    /// the kernel anchored at node `target`. `known_hi` is the highest node
    /// whose value may appear in a window (target−1 for the predictor,
    /// target for the corrector).
    fn history_sum(&mut self, target: usize, known_hi: usize, f_new: Option<f64>) -> f64 {
        if target < 2 {
            return 0.0;
        }
        let q = self.order.min(known_hi + 1);
        let mut total = 0.0;
        for i in 0..=(target - 2) {
            // window of q nodes ending at t_{i+1}, pushed forward to start
            // at t_0 near the beginning
            let start = (i + 2).saturating_sub(q);
            total += self.window_sum(start, q, i, target, f_new);
        }
        total
    }

    /// Weighted sum Σ_j w_j F_j for the window of `len` nodes starting at
    /// `wstart`, integrating interval (t_i, t_{i+1}) against the kernel
    /// anchored at node `target`. Basis and moments live in the frame
    /// shifted by t_{wstart}, which keeps the assembly well conditioned on
    /// fine grids far from the origin.
    fn window_sum(
        &mut self,
        wstart: usize,
        len: usize,
        interval: usize,
        target: usize,
        f_new: Option<f64>,
    ) -> f64 {
        let moments = self.moment_row_for(interval, target, wstart);
        let mut weights = [0.0f64; MAX_ORDER];
        {
            let nodes = self.nodes;
            let coeffs = self.basis_cache.entry((wstart, len)).or_insert_with(|| {
                let shifted: Vec<f64> = nodes[wstart..wstart + len]
                    .iter()
                    .map(|&t| t - nodes[wstart])
                    .collect();
                split_lagrange_unchecked(&shifted)
            });
            for (j, row) in coeffs.rows().iter().enumerate() {
                weights[j] = row.iter().zip(moments.iter()).map(|(c, m)| c * m).sum();
            }
        }
        let n_new = self.values.len();
        let mut sum = 0.0;
        for (j, &w) in weights[..len].iter().enumerate() {
            let idx = wstart + j;
            let f = if idx == n_new {
                f_new.expect("window touching the new node requires f_new")
            } else {
                self.rhs_values[idx]
            };
            sum += w * f;
        }
        sum
    }

    fn moment_row_for(&mut self, interval: usize, target: usize, wstart: usize) -> [f64; MAX_ORDER] {
        if self.moment_target != target {
            self.moment_rows.clear();
            self.moment_target = target;
        }
        let nodes = self.nodes;
        let order = self.order;
        let nu = self.problem.nu;
        *self
            .moment_rows
            .entry((interval, wstart))
            .or_insert_with(|| {
                let mut row = [0.0f64; MAX_ORDER];
                shifted_moment_row(
                    nu,
                    nodes[target],
                    nodes[interval],
                    nodes[interval + 1],
                    nodes[wstart],
                    &mut row[..order],
                );
                row
            })
    }
}

/// Solve the problem on `grid`.
///
/// With `bootstrap_refine > 1` the first `order` intervals are sub-stepped
/// internally by that factor and only the coarse nodes are kept, blunting
/// the startup error that the order ramp would otherwise propagate.
///
/// ```
/// use ufde::{solve, CaputoProblem, SolverConfig, TimeGrid};
///
/// // D^0.8 X = 0.6 X, X(0) = 0.5
/// let problem = CaputoProblem::from_fn(0.8, |_t, x| 0.6 * x, 0.5, 0.0, 1.0)?;
/// let grid = TimeGrid::uniform(0.0, 1.0, 0.05)?;
/// let traj = solve(&problem, &grid, &SolverConfig::default())?;
/// assert!((traj.last() - 0.9945).abs() < 1e-3);
/// # Ok::<(), ufde::Error>(())
/// ```
pub fn solve(problem: &CaputoProblem, grid: &TimeGrid, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let intervals = grid.len() - 1;
    if config.bootstrap_refine > 1 && intervals > 0 {
        let k = config.order.min(intervals);
        let fine_grid = grid.with_refined_prefix(config.bootstrap_refine, k);
        let fine = solve_plain(problem, &fine_grid, config)?;
        let factor = config.bootstrap_refine;
        let index = |j: usize| if j <= k { j * factor } else { k * factor + (j - k) };
        let values = (0..grid.len()).map(|j| fine.values[index(j)]).collect();
        let rhs_values = (0..grid.len()).map(|j| fine.rhs_values[index(j)]).collect();
        Ok(Trajectory {
            grid: grid.clone(),
            values,
            rhs_values,
            clamped: fine.clamped,
        })
    } else {
        solve_plain(problem, grid, config)
    }
}

fn solve_plain(problem: &CaputoProblem, grid: &TimeGrid, config: &SolverConfig) -> Result<Trajectory> {
    let mut stepper = Stepper::new(problem, grid, config)?;
    while !stepper.is_done() {
        stepper.advance(config.corrector_iterations)?;
    }
    Ok(Trajectory {
        grid: grid.clone(),
        values: stepper.values,
        rhs_values: stepper.rhs_values,
        clamped: stepper.clamped,
    })
}

/// Truncation bound for one subinterval of the n-th order method:
///
/// ((t−a)^ν − (t−b)^ν)/Γ(ν+1) · (M_n/n!) · max over s in (a, b) of |ω_n(s)|,
///
/// evaluated at the step end t = b, where ω_n(s) = Π_j (s − t_j) runs over
/// the window nodes and M_n bounds the n-th derivative of the integrand.
/// The maximum of |ω_n| is taken by dense sampling of the interval.
pub fn truncation_bound(
    nu: f64,
    window: &NodeWindow,
    interval: (f64, f64),
    m_n: f64,
    n: usize,
) -> Result<f64> {
    let (a, b) = interval;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidNu { nu });
    }
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b, t_target: b });
    }
    if n != window.len() {
        return Err(Error::Precondition(format!(
            "order {n} does not match the window of {} nodes",
            window.len()
        )));
    }
    if !(m_n >= 0.0) {
        return Err(Error::Precondition(format!(
            "derivative bound M_n = {m_n} must be nonnegative"
        )));
    }
    const SAMPLES: usize = 2048;
    let mut omega_max = 0.0f64;
    for i in 0..=SAMPLES {
        let s = a + (b - a) * (i as f64 / SAMPLES as f64);
        let omega: f64 = window.nodes().iter().map(|&t| s - t).product();
        omega_max = omega_max.max(omega.abs());
    }
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    Ok((b - a).powf(nu) / libm::tgamma(nu + 1.0) * (m_n / factorial) * omega_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::interval_weights;
    use crate::oracle;
    use approx::assert_abs_diff_eq;

    fn uniform(h: f64) -> TimeGrid {
        TimeGrid::uniform(0.0, 1.0, h).unwrap()
    }

    fn config(order: usize, memory: MemoryMode) -> SolverConfig {
        SolverConfig {
            order,
            memory,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn constant_rhs_is_integrated_exactly() {
        let problem = CaputoProblem::from_fn(1.0, |_, _| 1.0, 0.0, 0.0, 1.0).unwrap();
        for order in 1..=4 {
            for memory in [MemoryMode::Full, MemoryMode::Increment] {
                let traj = solve(&problem, &uniform(0.01), &config(order, memory)).unwrap();
                assert_abs_diff_eq!(traj.last(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn classical_exponential() {
        let problem = CaputoProblem::from_fn(1.0, |_, x| x, 1.0, 0.0, 1.0).unwrap();
        let traj = solve(&problem, &uniform(0.01), &config(3, MemoryMode::Full)).unwrap();
        assert!((traj.last() - 1.0f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn fractional_linear_drift_matches_mittag_leffler() {
        // drift-only benchmark: X(1) = 0.5 E_{0.8}(0.6)
        let problem = CaputoProblem::from_fn(0.8, |_, x| 0.6 * x, 0.5, 0.0, 1.0).unwrap();
        let traj = solve(&problem, &uniform(0.01), &config(3, MemoryMode::Full)).unwrap();
        let exact = 0.5 * oracle::mittag_leffler(0.8, 1.0, 0.6).unwrap();
        assert!(
            (traj.last() - exact).abs() < 1e-5,
            "got {} want {exact}",
            traj.last()
        );
    }

    #[test]
    fn final_interval_weights_reduce_to_adams_bashforth() {
        // ν = 1, m = 2: weights (−h/2, 3h/2) on the extrapolated interval
        let h = 0.1;
        let w = interval_weights(
            &NodeWindow::new(vec![0.3, 0.3 + h]).unwrap(),
            1.0,
            0.3 + 2.0 * h,
            0.3 + h,
            0.3 + 2.0 * h,
        )
        .unwrap();
        assert_abs_diff_eq!(w.weights[0], -h / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(w.weights[1], 3.0 * h / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn single_node_window_weight_is_base_moment() {
        let w = interval_weights(&NodeWindow::new(vec![0.5]).unwrap(), 0.7, 0.6, 0.5, 0.6).unwrap();
        let base = crate::moments::moment(&crate::moments::MomentQuery {
            nu: 0.7,
            k: 0,
            t_target: 0.6,
            a: 0.5,
            b: 0.6,
        })
        .unwrap();
        assert_abs_diff_eq!(w.weights[0], base, epsilon = 1e-14);
    }

    #[test]
    fn zero_rhs_predictor_returns_memory_term() {
        let problem = CaputoProblem::from_fn(0.8, |_, _| 0.0, 2.5, 0.0, 1.0).unwrap();
        let grid = uniform(0.25);
        for (memory, want) in [(MemoryMode::Increment, 2.5), (MemoryMode::Full, 2.5)] {
            let cfg = config(2, memory);
            let mut st = Stepper::new(&problem, &grid, &cfg).unwrap();
            st.push(2.5, 0.0).unwrap(); // X(t_1) of the zero-RHS problem
            let p = st.predict().unwrap();
            assert_abs_diff_eq!(p, want, epsilon = 0.0);
        }
    }

    #[test]
    fn x_independent_corrector_ignores_predictor() {
        // corrector with F(t) only: result equals the direct quadrature,
        // whatever value the predictor produced
        let problem = CaputoProblem::from_fn(0.8, |t, _| t * t, 0.0, 0.0, 1.0).unwrap();
        let grid = uniform(0.25);
        let cfg = config(2, MemoryMode::Full);
        let mut st = Stepper::new(&problem, &grid, &cfg).unwrap();
        let f1 = 0.25f64 * 0.25;
        let c = st.correct(f1).unwrap();
        // same quadrature assembled by hand from the weights
        let w = interval_weights(
            &NodeWindow::new(vec![0.0, 0.25]).unwrap(),
            0.8,
            0.25,
            0.0,
            0.25,
        )
        .unwrap();
        let by_hand = (w.weights[0] * 0.0 + w.weights[1] * f1) / libm::tgamma(0.8);
        assert_abs_diff_eq!(c, by_hand, epsilon = 1e-15);
    }

    #[test]
    fn order_one_step_is_the_degenerate_ramp() {
        let problem = CaputoProblem::from_fn(0.6, |t, x| x - t, 0.8, 0.0, 1.0).unwrap();
        let grid = uniform(0.5);
        let cfg = SolverConfig {
            order: 1,
            bootstrap_refine: 1,
            ..SolverConfig::default()
        };
        let traj = solve(&problem, &grid, &cfg).unwrap();
        // by hand: rectangle predictor then one implicit-rectangle pass
        let g = libm::tgamma(0.6);
        let m0 = ((0.5f64).powf(0.6)) / 0.6;
        let xp = 0.8 + m0 * (0.8 - 0.0) / g;
        let xc = 0.8 + m0 * (xp - 0.5) / g;
        assert_abs_diff_eq!(traj.values[1], xc, epsilon = 1e-14);
    }

    // Classical ramped ABM in increment form, with textbook coefficients.
    // Predictor uses min(p, n) backward nodes, corrector min(p, n+1).
    fn classical_pece(order: usize, h: f64, steps: usize, x0: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let ab: [&[f64]; 4] = [
            &[1.0],
            &[-1.0 / 2.0, 3.0 / 2.0],
            &[5.0 / 12.0, -16.0 / 12.0, 23.0 / 12.0],
            &[-9.0 / 24.0, 37.0 / 24.0, -59.0 / 24.0, 55.0 / 24.0],
        ];
        let am: [&[f64]; 4] = [
            &[1.0],
            &[1.0 / 2.0, 1.0 / 2.0],
            &[-1.0 / 12.0, 8.0 / 12.0, 5.0 / 12.0],
            &[1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 9.0 / 24.0],
        ];
        let mut xs = vec![x0];
        let mut fs = vec![f(0.0, x0)];
        for n in 1..=steps {
            let t_n = h * n as f64;
            let mp = order.min(n);
            let mut xp = xs[n - 1];
            for (j, w) in ab[mp - 1].iter().enumerate() {
                xp += h * w * fs[n - mp + j];
            }
            let mc = order.min(n + 1);
            let mut xc = xs[n - 1];
            for (j, w) in am[mc - 1].iter().enumerate() {
                let idx = n + 1 - mc + j;
                let fv = if idx == n { f(t_n, xp) } else { fs[idx] };
                xc += h * w * fv;
            }
            fs.push(f(t_n, xc));
            xs.push(xc);
        }
        xs[steps]
    }

    #[test]
    fn nu_one_increment_mode_is_classical_pece() {
        let f = |_t: f64, x: f64| x;
        for order in 2..=4usize {
            let problem = CaputoProblem::from_fn(1.0, f, 1.0, 0.0, 1.0).unwrap();
            let cfg = SolverConfig {
                order,
                memory: MemoryMode::Increment,
                bootstrap_refine: 1,
                ..SolverConfig::default()
            };
            let traj = solve(&problem, &uniform(0.02), &cfg).unwrap();
            let classical = classical_pece(order, 0.02, 50, 1.0, f);
            assert!(
                (traj.last() - classical).abs() < 1e-12,
                "order {order}: {} vs {classical}",
                traj.last()
            );
        }
    }

    #[test]
    fn truncation_bound_zero_for_polynomial_integrands() {
        let window = NodeWindow::new(vec![0.0, 0.1, 0.2]).unwrap();
        let b = truncation_bound(0.8, &window, (0.1, 0.2), 0.0, 3).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn truncation_bound_reduces_to_trapezoid_form_at_nu_one() {
        // ν = 1, n = 2: bound = h · (M/2) · max|ω₂| with ω₂ = (s−t0)(s−t1)
        let h = 0.2;
        let window = NodeWindow::new(vec![0.5, 0.5 + h]).unwrap();
        let b = truncation_bound(1.0, &window, (0.5, 0.5 + h), 3.0, 2).unwrap();
        let omega_max = h * h / 4.0; // midpoint of (s−t0)(t1−s)
        assert_abs_diff_eq!(b, h * 1.5 * omega_max, epsilon = 1e-6 * b);
    }

    #[test]
    fn truncation_bound_dominates_single_interval_error() {
        // product integration of sin over one interval vs adaptive quadrature
        let (nu, n, h) = (0.8, 3usize, 0.01);
        for step in [10usize, 50, 99] {
            let t: Vec<f64> = (0..=step + 1).map(|i| h * i as f64).collect();
            let window =
                NodeWindow::new(t[step - 1..=step + 1].to_vec()).unwrap();
            let (a, b) = (t[step], t[step + 1]);
            let w = interval_weights(&window, nu, b, a, b).unwrap();
            let quad: f64 = w
                .weights
                .iter()
                .zip(window.nodes())
                .map(|(w, &tj)| w * tj.sin())
                .sum();
            let exact = oracle::adaptive_quad(nu, b, a, b, |s| s.sin()).unwrap();
            let err = (quad - exact).abs() / libm::tgamma(nu);
            let bound = truncation_bound(nu, &window, (a, b), 1.0, n).unwrap();
            assert!(
                err <= bound,
                "step {step}: error {err:e} exceeds bound {bound:e}"
            );
        }
    }

    #[test]
    fn domain_violation_is_reported_with_location() {
        let rhs = CheckedRhs(|_t: f64, x: f64| {
            if x < 1.0 {
                Err(DomainViolation {
                    reason: "sqrt of negative argument",
                })
            } else {
                Ok((x - 1.0).sqrt() - 3.0)
            }
        });
        let problem = CaputoProblem::new(0.8, Arc::new(rhs), 1.01, 0.0, 1.0).unwrap();
        let err = solve(&problem, &uniform(0.1), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::RhsDomain { .. }), "got {err:?}");
    }

    #[test]
    fn overflow_is_reported_as_non_finite() {
        let problem = CaputoProblem::from_fn(1.0, |_, x: f64| x.exp(), 5.0, 0.0, 1.0).unwrap();
        let err = solve(&problem, &uniform(0.1), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "got {err:?}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig {
            order: 7,
            ..SolverConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg.order = 3;
        cfg.corrector_iterations = 0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg.corrector_iterations = 2;
        cfg.bootstrap_refine = 0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn extra_corrector_iterations_stay_consistent() {
        let problem = CaputoProblem::from_fn(0.8, |_, x| 0.6 * x, 0.5, 0.0, 1.0).unwrap();
        let grid = uniform(0.02);
        let one = solve(&problem, &grid, &config(3, MemoryMode::Full)).unwrap();
        let cfg3 = SolverConfig {
            corrector_iterations: 3,
            ..config(3, MemoryMode::Full)
        };
        let three = solve(&problem, &grid, &cfg3).unwrap();
        // more fixed-point passes move the iterate by O(h^2ν) at most
        let diff = (one.last() - three.last()).abs();
        assert!(diff < 1e-4, "{diff}");
        // and both stay close to the closed form
        let exact = 0.5 * oracle::mittag_leffler(0.8, 1.0, 0.6).unwrap();
        assert!((three.last() - exact).abs() < 1e-5);
    }

    #[test]
    fn nonuniform_grid_keeps_polynomial_exactness() {
        // irregular spacing exercises the window bookkeeping that uniform
        // grids mask; exactness for x-independent polynomial data must
        // survive it
        let nodes = vec![0.0, 0.07, 0.1, 0.25, 0.31, 0.5, 0.52, 0.8, 1.0];
        let grid = TimeGrid::from_nodes(nodes).unwrap();
        let problem =
            CaputoProblem::from_fn(0.6, |t, _| 2.0 - t + 0.5 * t * t, 1.0, 0.0, 1.0).unwrap();
        let traj = solve(&problem, &grid, &config(3, MemoryMode::Full)).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate().skip(1) {
            let exact = 1.0 + 2.0 * oracle::rl_monomial_integral(0.6, 0, t)
                - oracle::rl_monomial_integral(0.6, 1, t)
                + 0.5 * oracle::rl_monomial_integral(0.6, 2, t);
            assert!(
                (traj.values[j] - exact).abs() <= 1e-11 * exact.abs(),
                "node {j}: {} vs {exact}",
                traj.values[j]
            );
        }
    }

    #[test]
    fn shifted_time_origin() {
        // Caputo anchor at t_start = 2: I^ν 1 = (t−2)^ν/Γ(ν+1)
        let problem = CaputoProblem::from_fn(0.5, |_, _| 1.0, 0.3, 2.0, 3.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 3.0, 0.05).unwrap();
        let traj = solve(&problem, &grid, &config(2, MemoryMode::Full)).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate() {
            let exact = 0.3 + (t - 2.0f64).sqrt() / libm::tgamma(1.5);
            assert!(
                (traj.values[j] - exact).abs() <= 1e-12,
                "node {j}: {} vs {exact}",
                traj.values[j]
            );
        }
    }

    #[test]
    fn single_node_grid_cannot_span_a_horizon() {
        let problem = CaputoProblem::from_fn(0.8, |_, x| x, 1.5, 0.0, 1.0).unwrap();
        let grid = TimeGrid::from_nodes(vec![0.0]).unwrap();
        assert!(matches!(
            solve(&problem, &grid, &SolverConfig::default()),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn rejects_mismatched_grid() {
        let problem = CaputoProblem::from_fn(0.8, |_, x| x, 1.0, 0.0, 2.0).unwrap();
        let err = solve(&problem, &uniform(0.1), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidGrid(_)));
    }

    #[test]
    fn polynomial_rhs_is_reproduced_exactly() {
        // degree 2 < order 3, x-independent: full memory is quadrature-exact
        let problem =
            CaputoProblem::from_fn(0.7, |t, _| 1.0 - 2.0 * t + 3.0 * t * t, 1.0, 0.0, 1.0).unwrap();
        let grid = uniform(0.1);
        let traj = solve(&problem, &grid, &config(3, MemoryMode::Full)).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate().skip(1) {
            let exact = 1.0 + oracle::rl_monomial_integral(0.7, 0, t)
                - 2.0 * oracle::rl_monomial_integral(0.7, 1, t)
                + 3.0 * oracle::rl_monomial_integral(0.7, 2, t);
            assert!(
                (traj.values[j] - exact).abs() <= 1e-10 * exact.abs(),
                "node {j}: {} vs {exact}",
                traj.values[j]
            );
        }
    }
}
