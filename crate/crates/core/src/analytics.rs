//! Post-processing of inverse-distribution surfaces: extreme values of a
//! monotone function of the solution, first-hitting-time distributions,
//! expected values, and the error-study driver for the linear benchmark.

use std::sync::Arc;

use crate::adams::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{AlphaGrid, TimeGrid};
use crate::oracle;
use crate::uncertain::{sweep, AlphaSurface, UncertainProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    StrictlyIncreasing,
    StrictlyDecreasing,
}

/// A strictly monotone map J applied to the solution. The declared
/// direction is trusted input; consumers spot-check it by sampling J on a
/// 100-point grid spanning the data range.
#[derive(Clone)]
pub struct MonotoneMap {
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub direction: Direction,
}

impl MonotoneMap {
    pub fn new(
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        direction: Direction,
    ) -> Self {
        Self {
            map: Arc::new(map),
            direction,
        }
    }

    pub fn identity() -> Self {
        Self::new(|x| x, Direction::StrictlyIncreasing)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.map)(x)
    }

    /// Sample J on 100 points of [lo, hi] and reject declared directions
    /// the samples contradict.
    fn spot_check(&self, lo: f64, hi: f64) -> Result<()> {
        if !(hi > lo) {
            return Ok(()); // degenerate range, nothing to check
        }
        let mut prev = self.eval(lo);
        for i in 1..100 {
            let x = lo + (hi - lo) * (i as f64 / 99.0);
            let cur = self.eval(x);
            let violated = match self.direction {
                Direction::StrictlyIncreasing => cur < prev,
                Direction::StrictlyDecreasing => cur > prev,
            };
            if violated {
                return Err(Error::Precondition(format!(
                    "J is not {:?} near x = {x}",
                    self.direction
                )));
            }
            prev = cur;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Inverse distribution of an extreme value, indexed by α.
    ExtremeInverseDist,
    /// First-hitting-time distribution, indexed by the horizon s.
    FhtDist,
}

/// Ordered (abscissa, ordinate) pairs of one of the two curve kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionCurve {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub kind: CurveKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeMode {
    Infimum,
    Supremum,
}

/// Inverse distribution of inf/sup over time of J along the solution.
///
/// For strictly increasing J the ordinate at α is the extreme of J over the
/// α-path; for strictly decreasing J the path at 1−α is used instead, which
/// requires the α grid to be symmetric about 1/2.
pub fn extreme_value(
    surface: &AlphaSurface,
    j: &MonotoneMap,
    mode: ExtremeMode,
) -> Result<DistributionCurve> {
    let (lo, hi) = surface_range(surface);
    j.spot_check(lo, hi)?;
    let alphas = surface.alpha_grid();
    let mut ordinates = Vec::with_capacity(alphas.len());
    for i in 0..alphas.len() {
        let row_index = match j.direction {
            Direction::StrictlyIncreasing => i,
            Direction::StrictlyDecreasing => {
                alphas.mirror_index(i).ok_or_else(|| Error::GridMismatch {
                    requested: 1.0 - alphas.values()[i],
                    detail: "decreasing J needs an alpha grid symmetric about 1/2".into(),
                })?
            }
        };
        let row = surface.row(row_index);
        let extreme = match mode {
            ExtremeMode::Infimum => row.iter().map(|&x| j.eval(x)).fold(f64::INFINITY, f64::min),
            ExtremeMode::Supremum => row
                .iter()
                .map(|&x| j.eval(x))
                .fold(f64::NEG_INFINITY, f64::max),
        };
        ordinates.push(extreme);
    }
    Ok(DistributionCurve {
        abscissae: alphas.values().to_vec(),
        ordinates,
        kind: CurveKind::ExtremeInverseDist,
    })
}

/// Distribution of the first time J(X_t) reaches the level z, evaluated at
/// each horizon in `horizons`:
///
/// U(s) = 1 − inf{ α | sup_{t ≤ s} J(X_t^α) ≥ z },
///
/// with the infimum taken over the default α grid (0.01 … 0.99) and the
/// empty set mapping to 1, so horizons no path reaches give U(s) = 0.
pub fn fht_distribution(
    u: &UncertainProblem,
    j: &MonotoneMap,
    z: f64,
    horizons: &[f64],
    grid: &TimeGrid,
    config: &SolverConfig,
) -> Result<DistributionCurve> {
    if j.direction != Direction::StrictlyIncreasing {
        return Err(Error::Precondition(
            "the first-hitting-time formula needs a nondecreasing J".into(),
        ));
    }
    if !(z > j.eval(u.x0)) {
        return Err(Error::Precondition(format!(
            "threshold z = {z} must exceed J(x0) = {}",
            j.eval(u.x0)
        )));
    }
    if horizons.is_empty() {
        return Err(Error::Precondition("no horizons given".into()));
    }
    for w in horizons.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Precondition(
                "horizons must be strictly increasing".into(),
            ));
        }
    }
    if horizons[0] < grid.t_start() - 1e-12 {
        return Err(Error::GridMismatch {
            requested: horizons[0],
            detail: "horizon before the time grid".into(),
        });
    }
    let s_max = *horizons.last().unwrap();
    if s_max > grid.t_end() + 1e-12 {
        return Err(Error::GridMismatch {
            requested: s_max,
            detail: "horizon beyond the time grid".into(),
        });
    }
    let alphas = AlphaGrid::default_percent();
    let surface = sweep(u, &alphas, grid, config)?;
    let (lo, hi) = surface_range(&surface);
    j.spot_check(lo, hi)?;

    // running sup of J along each row, so each horizon is a prefix lookup
    let nodes = surface.time_grid().nodes();
    let rows: Vec<Vec<f64>> = surface
        .rows()
        .iter()
        .map(|row| {
            let mut sup = f64::NEG_INFINITY;
            row.iter()
                .map(|&x| {
                    sup = sup.max(j.eval(x));
                    sup
                })
                .collect()
        })
        .collect();

    let mut ordinates = Vec::with_capacity(horizons.len());
    for &s in horizons {
        // last grid node with t <= s (within rounding)
        let cut = nodes.partition_point(|&t| t <= s + 1e-12) - 1;
        let hit = alphas
            .values()
            .iter()
            .enumerate()
            .find(|(i, _)| rows[*i][cut] >= z)
            .map(|(_, &alpha)| alpha);
        ordinates.push(match hit {
            Some(alpha) => 1.0 - alpha,
            None => 0.0,
        });
    }
    Ok(DistributionCurve {
        abscissae: horizons.to_vec(),
        ordinates,
        kind: CurveKind::FhtDist,
    })
}

/// α-average of J along the surface at one time index, by the trapezoid
/// rule over the α grid (normalized to the grid span).
pub fn expected_value(surface: &AlphaSurface, j: &MonotoneMap, t_index: usize) -> Result<f64> {
    let alphas = surface.alpha_grid().values();
    if t_index >= surface.time_grid().len() {
        return Err(Error::Precondition(format!(
            "time index {t_index} out of range"
        )));
    }
    let ys: Vec<f64> = surface
        .rows()
        .iter()
        .map(|row| j.eval(row[t_index]))
        .collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite {
            t: surface.time_grid().nodes()[t_index],
        });
    }
    if alphas.len() == 1 {
        return Ok(ys[0]);
    }
    let mut integral = 0.0;
    for i in 1..alphas.len() {
        integral += 0.5 * (ys[i] + ys[i - 1]) * (alphas[i] - alphas[i - 1]);
    }
    Ok(integral / (alphas[alphas.len() - 1] - alphas[0]))
}

fn surface_range(surface: &AlphaSurface) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in surface.rows() {
        for &x in row {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo, hi)
}

/// Which parameter an error study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Interpolation order n.
    VaryOrder,
    /// Fractional order ν.
    VaryNu,
    /// Diffusion exponent υ of b t^υ.
    VaryUpsilon,
}

/// Baseline configuration of the linear benchmark D^ν X = aX + b t^υ dC/dt.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub a: f64,
    pub b: f64,
    pub upsilon: f64,
    pub nu: f64,
    pub x0: f64,
    pub h: f64,
    pub t_end: f64,
    pub alphas: AlphaGrid,
    pub solver: SolverConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            a: 0.6,
            b: 1.0,
            upsilon: 2.0,
            nu: 0.8,
            x0: 0.5,
            h: 0.01,
            t_end: 1.0,
            alphas: AlphaGrid::default_percent(),
            solver: SolverConfig::default(),
        }
    }
}

/// One study configuration with its mean absolute error at t_end over the
/// α grid, measured against the closed-form truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub parameter: f64,
    pub mae: f64,
    pub log10_mae: f64,
}

/// Sweep the varied parameter over `values`, solving the linear benchmark
/// and scoring each configuration by its MAE against the closed form.
pub fn error_study(kind: StudyKind, values: &[f64], base: &StudyConfig) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = base.clone();
        match kind {
            StudyKind::VaryOrder => {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(Error::Precondition(format!(
                        "order study needs integer orders, got {v}"
                    )));
                }
                cfg.solver.order = v as usize;
            }
            StudyKind::VaryNu => cfg.nu = v,
            StudyKind::VaryUpsilon => cfg.upsilon = v,
        }
        let mae = study_mae(&cfg)?;
        rows.push(StudyRow {
            parameter: v,
            mae,
            log10_mae: mae.log10(),
        });
    }
    Ok(rows)
}

fn study_mae(cfg: &StudyConfig) -> Result<f64> {
    let (a, b, ups, nu, x0) = (cfg.a, cfg.b, cfg.upsilon, cfg.nu, cfg.x0);
    let u = UncertainProblem::new(
        nu,
        Arc::new(crate::adams::FnRhs(move |_t: f64, x: f64| a * x)),
        Arc::new(crate::adams::FnRhs(move |t: f64, _x: f64| {
            b * t.powf(ups)
        })),
        x0,
        0.0,
        cfg.t_end,
    )?;
    let grid = TimeGrid::uniform(0.0, cfg.t_end, cfg.h)?;
    let surface = sweep(&u, &cfg.alphas, &grid, &cfg.solver)?;
    let last = grid.len() - 1;
    let mut total = 0.0;
    for (i, &alpha) in cfg.alphas.values().iter().enumerate() {
        let exact = oracle::linear_closed_form(a, b, ups, nu, alpha, x0, cfg.t_end)?;
        total += (surface.row(i)[last] - exact).abs();
    }
    Ok(total / cfg.alphas.len() as f64)
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(ry.iter()) {
        num += (a - mean) * (b - mean);
        dx += (a - mean).powi(2);
        dy += (b - mean).powi(2);
    }
    num / (dx * dy).sqrt()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adams::FnRhs;
    use approx::assert_abs_diff_eq;

    /// Synthetic surface with explicit rows.
    fn surface_from_rows(alphas: &[f64], rows: Vec<Vec<f64>>) -> AlphaSurface {
        let n = rows[0].len();
        let grid = if n == 1 {
            TimeGrid::from_nodes(vec![0.0]).unwrap()
        } else {
            TimeGrid::uniform(0.0, 1.0, 1.0 / (n as f64 - 1.0)).unwrap()
        };
        AlphaSurface::from_parts(AlphaGrid::new(alphas.to_vec()).unwrap(), grid, rows)
    }

    #[test]
    fn extreme_value_of_monotone_rows() {
        // rows nondecreasing in t: infimum is the initial value, supremum
        // the final value
        let rows = vec![
            vec![0.5, 0.6, 0.7],
            vec![0.5, 0.8, 1.0],
            vec![0.5, 0.9, 1.4],
        ];
        let s = surface_from_rows(&[0.25, 0.5, 0.75], rows);
        let j = MonotoneMap::identity();
        let inf = extreme_value(&s, &j, ExtremeMode::Infimum).unwrap();
        assert_eq!(inf.ordinates, vec![0.5, 0.5, 0.5]);
        let sup = extreme_value(&s, &j, ExtremeMode::Supremum).unwrap();
        assert_eq!(sup.ordinates, vec![0.7, 1.0, 1.4]);
        for (a, b) in sup.ordinates.iter().zip(inf.ordinates.iter()) {
            assert!(a >= b);
        }
    }

    #[test]
    fn decreasing_j_flips_to_the_mirror_row() {
        let rows = vec![
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![4.0, 4.0],
        ];
        let s = surface_from_rows(&[0.25, 0.5, 0.75], rows);
        let j = MonotoneMap::new(|x| -x, Direction::StrictlyDecreasing);
        let inf = extreme_value(&s, &j, ExtremeMode::Infimum).unwrap();
        // at α = 0.25 the mirror row is α = 0.75 with constant value 4
        assert_eq!(inf.ordinates[0], -4.0);
        assert_eq!(inf.ordinates[2], -1.0);
    }

    #[test]
    fn decreasing_j_requires_symmetric_grid() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let s = surface_from_rows(&[0.2, 0.5], rows);
        let j = MonotoneMap::new(|x| -x, Direction::StrictlyDecreasing);
        assert!(matches!(
            extreme_value(&s, &j, ExtremeMode::Infimum),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn misdeclared_direction_is_caught() {
        let rows = vec![vec![0.0, 1.0], vec![0.5, 2.0]];
        let s = surface_from_rows(&[0.4, 0.6], rows);
        let j = MonotoneMap::new(|x| x, Direction::StrictlyDecreasing);
        assert!(matches!(
            extreme_value(&s, &j, ExtremeMode::Infimum),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn expected_value_of_flat_surface_is_the_constant() {
        let rows = vec![vec![3.0, 3.0], vec![3.0, 3.0], vec![3.0, 3.0]];
        let s = surface_from_rows(&[0.25, 0.5, 0.75], rows);
        let v = expected_value(&s, &MonotoneMap::identity(), 1).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn expected_value_is_flip_invariant_on_symmetric_grids() {
        let rows = vec![vec![1.0], vec![2.0], vec![5.0]];
        let s = surface_from_rows(&[0.25, 0.5, 0.75], rows.clone());
        let mut rev = rows;
        rev.reverse();
        let s_rev = surface_from_rows(&[0.25, 0.5, 0.75], rev);
        let j = MonotoneMap::identity();
        assert_abs_diff_eq!(
            expected_value(&s, &j, 0).unwrap(),
            expected_value(&s_rev, &j, 0).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn expected_value_respects_surface_dominance() {
        let a = surface_from_rows(&[0.3, 0.7], vec![vec![2.0], vec![3.0]]);
        let b = surface_from_rows(&[0.3, 0.7], vec![vec![1.0], vec![2.5]]);
        let j = MonotoneMap::identity();
        assert!(expected_value(&a, &j, 0).unwrap() >= expected_value(&b, &j, 0).unwrap());
    }

    #[test]
    fn linear_benchmark_upper_half_extremes() {
        // on α ≥ 1/2 every path of the linear benchmark is nondecreasing in
        // t, so the infimum curve is the initial value and the supremum
        // curve is the final value
        let u = UncertainProblem::new(
            0.8,
            Arc::new(FnRhs(|_t: f64, x: f64| 0.6 * x)),
            Arc::new(FnRhs(|t: f64, _x: f64| t * t)),
            0.5,
            0.0,
            1.0,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 0.02).unwrap();
        let alphas = AlphaGrid::uniform(0.5, 0.05, 0.95).unwrap();
        let surface = sweep(&u, &alphas, &grid, &SolverConfig::default()).unwrap();
        for row in surface.rows() {
            assert!(row.windows(2).all(|w| w[1] >= w[0]), "row not monotone");
        }
        let j = MonotoneMap::identity();
        let inf = extreme_value(&surface, &j, ExtremeMode::Infimum).unwrap();
        assert!(inf.ordinates.iter().all(|&v| v == 0.5));
        let sup = extreme_value(&surface, &j, ExtremeMode::Supremum).unwrap();
        let last = grid.len() - 1;
        for (i, v) in sup.ordinates.iter().enumerate() {
            assert_eq!(*v, surface.row(i)[last]);
        }
    }

    #[test]
    fn expected_value_of_linear_benchmark_matches_median_path() {
        // antisymmetric diffusion about α = 1/2: the α-average at t = 1
        // collapses onto the median path up to solver error
        let u = UncertainProblem::new(
            0.8,
            Arc::new(FnRhs(|_t: f64, x: f64| 0.6 * x)),
            Arc::new(FnRhs(|t: f64, _x: f64| t * t)),
            0.5,
            0.0,
            1.0,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 0.02).unwrap();
        let alphas = AlphaGrid::uniform(0.05, 0.05, 0.95).unwrap();
        let surface = sweep(&u, &alphas, &grid, &SolverConfig::default()).unwrap();
        let mid = alphas.index_of(0.5, 1e-9).unwrap();
        let last = grid.len() - 1;
        let e = expected_value(&surface, &MonotoneMap::identity(), last).unwrap();
        assert!(
            (e - surface.row(mid)[last]).abs() < 1e-3,
            "{e} vs {}",
            surface.row(mid)[last]
        );
    }

    #[test]
    fn spearman_sanity() {
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 9.0]), 1.0);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[9.0, 4.0, 2.0]), -1.0);
        let mixed = spearman(&[1.0, 2.0, 3.0], &[4.0, 2.0, 9.0]);
        assert!(mixed > 0.0 && mixed < 1.0);
    }

    #[test]
    fn fht_curve_empty_set_convention() {
        // threshold no path can reach: curve identically zero
        let u = UncertainProblem::new(
            0.8,
            Arc::new(FnRhs(|_t: f64, x: f64| 0.1 * x)),
            Arc::new(FnRhs(|_t: f64, _x: f64| 0.05)),
            0.5,
            0.0,
            1.0,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 0.05).unwrap();
        let curve = fht_distribution(
            &u,
            &MonotoneMap::identity(),
            100.0,
            &[0.5, 1.0],
            &grid,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(curve.ordinates, vec![0.0, 0.0]);
    }

    #[test]
    fn fht_curve_saturates_when_every_path_crosses() {
        // strictly increasing paths with a threshold barely above x0 end up
        // crossing for every α, so U(s) → 1 − α_min
        let u = UncertainProblem::new(
            0.8,
            Arc::new(FnRhs(|_t: f64, _x: f64| 1.0)),
            Arc::new(FnRhs(|_t: f64, _x: f64| 0.01)),
            0.5,
            0.0,
            1.0,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 0.05).unwrap();
        let curve = fht_distribution(
            &u,
            &MonotoneMap::identity(),
            0.52,
            &[0.2, 1.0],
            &grid,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(curve.ordinates[1], 1.0 - 0.01, epsilon = 1e-12);
        // and the curve is nondecreasing in s
        assert!(curve.ordinates[1] >= curve.ordinates[0]);
    }

    #[test]
    fn fht_rejects_threshold_below_initial_value() {
        let u = UncertainProblem::new(
            0.8,
            Arc::new(FnRhs(|_t: f64, x: f64| x)),
            Arc::new(FnRhs(|_t: f64, _x: f64| 0.0)),
            0.5,
            0.0,
            1.0,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            fht_distribution(
                &u,
                &MonotoneMap::identity(),
                0.4,
                &[1.0],
                &grid,
                &SolverConfig::default()
            ),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn error_study_vary_order_improves() {
        let base = StudyConfig {
            h: 0.02,
            alphas: AlphaGrid::uniform(0.1, 0.1, 0.9).unwrap(),
            ..StudyConfig::default()
        };
        let rows = error_study(StudyKind::VaryOrder, &[2.0, 3.0], &base).unwrap();
        assert!(rows[1].mae < rows[0].mae);
    }
}
