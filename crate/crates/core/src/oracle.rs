//! Independent truth sources used to validate the solver: Mittag-Leffler
//! series, the closed-form solution of the linear benchmark, adaptive
//! quadrature for the singular kernel, and a fine-grid reference solve.
//!
//! Everything here deliberately avoids the moment recurrence and the
//! high-order stepper, so agreement between the two sides is meaningful.

use crate::adams::{self, CaputoProblem, MemoryMode, SolverConfig, Trajectory};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::uncertain::liu_inverse_std;

/// The Gamma function used throughout the crate.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Series truncation threshold: stop once a term drops below this.
const TERM_TOL: f64 = 1e-16;
/// Hard cap on series length before reporting failure to converge.
const MAX_TERMS: usize = 1_000_000;

/// Mittag-Leffler function E_{α,β}(z) = Σ_{m≥0} z^m / Γ(αm + β).
///
/// Terms are formed in log space (no overflow for large m) and accumulated
/// with Neumaier compensation. Arguments are expected in the desk-scale
/// regime |z| ≲ 5 where the plain series is well conditioned.
pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::Precondition(format!(
            "Mittag-Leffler parameters must be positive (alpha = {alpha}, beta = {beta})"
        )));
    }
    if z == 0.0 {
        return Ok(1.0 / libm::tgamma(beta));
    }
    let ln_az = z.abs().ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut below = 0usize;
    for m in 0..MAX_TERMS {
        let mf = m as f64;
        let mag = (mf * ln_az - libm::lgamma(alpha * mf + beta)).exp();
        let term = if z < 0.0 && m % 2 == 1 { -mag } else { mag };
        // Neumaier compensated add
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        // terms can grow before the gamma takes over; require two quiet ones
        below = if mag < TERM_TOL { below + 1 } else { 0 };
        if below >= 2 {
            return Ok(sum + comp);
        }
    }
    Err(Error::NoConvergence {
        max_terms: MAX_TERMS,
        last_term: sum,
    })
}

/// Closed-form α-path of the linear benchmark
/// D^ν X = a X + b t^υ Φ^{-1}(α), X(0) = x0:
///
/// X(t) = x0 E_ν(a t^ν)
///        + b Φ^{-1}(α) Γ(υ+1) Σ_{m≥0} a^m t^{ν(m+1)+υ} / Γ(ν(m+1)+υ+1),
///
/// the series obtained by termwise Beta integration of the convolution
/// ∫₀ᵗ (t−s)^{ν−1} E_{ν,ν}(a(t−s)^ν) s^υ ds. The `linear_series_matches_
/// convolution_quadrature` test pins the series against direct adaptive
/// quadrature of that convolution before it is trusted anywhere.
pub fn linear_closed_form(
    a: f64,
    b: f64,
    upsilon: f64,
    nu: f64,
    alpha: f64,
    x0: f64,
    t: f64,
) -> Result<f64> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidNu { nu });
    }
    if t < 0.0 {
        return Err(Error::Precondition(format!("t = {t} must be nonnegative")));
    }
    if !(upsilon >= 0.0) || upsilon.fract().abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "upsilon = {upsilon} must be a nonnegative integer"
        )));
    }
    if t == 0.0 {
        return Ok(x0);
    }
    let drift = x0 * mittag_leffler(nu, 1.0, a * t.powf(nu))?;
    let noise = liu_inverse_std(alpha)?;
    if b == 0.0 || noise == 0.0 {
        return Ok(drift);
    }
    let ln_t = t.ln();
    let gamma_ups = libm::tgamma(upsilon + 1.0);
    let ln_aa = if a == 0.0 { f64::NEG_INFINITY } else { a.abs().ln() };
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut below = 0usize;
    let mut converged = false;
    for m in 0..MAX_TERMS {
        let mf = m as f64;
        let exponent = nu * (mf + 1.0) + upsilon;
        let ln_mag = if m == 0 {
            exponent * ln_t - libm::lgamma(exponent + 1.0)
        } else {
            mf * ln_aa + exponent * ln_t - libm::lgamma(exponent + 1.0)
        };
        let mag = ln_mag.exp();
        let term = if a < 0.0 && m % 2 == 1 { -mag } else { mag };
        let s = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - s) + term
        } else {
            (term - s) + sum
        };
        sum = s;
        below = if mag < TERM_TOL { below + 1 } else { 0 };
        if below >= 2 || a == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            max_terms: MAX_TERMS,
            last_term: sum,
        });
    }
    Ok(drift + b * noise * gamma_ups * (sum + comp))
}

/// Riemann–Liouville integral of a monomial: I^ν s^k evaluated at t, i.e.
/// Γ(k+1)/Γ(k+1+ν) · t^{k+ν}.
pub fn rl_monomial_integral(nu: f64, k: usize, t: f64) -> f64 {
    let kf = k as f64;
    (libm::tgamma(kf + 1.0) / libm::tgamma(kf + 1.0 + nu)) * t.powf(kf + nu)
}

// 15-point Kronrod extension of 7-point Gauss (positive abscissae).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_27,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7-K15 panel: returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let hl = 0.5 * (hi - lo);
    let fc = f(c);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    for i in 0..3 {
        let x = hl * XGK[2 * i + 1];
        let pair = f(c - x) + f(c + x);
        resg += WG[i] * pair;
        resk += WGK[2 * i + 1] * pair;
    }
    for i in 0..4 {
        let x = hl * XGK[2 * i];
        let pair = f(c - x) + f(c + x);
        resk += WGK[2 * i] * pair;
    }
    (resk * hl, (resk - resg).abs() * hl)
}

/// Adaptive integral of (t_target − s)^{ν−1} · smooth(s) over (a, b).
///
/// The weak singularity is removed exactly by the substitution
/// u = (t_target − s)^ν, under which the kernel times ds becomes du/ν; the
/// remaining integrand u ↦ smooth(t_target − u^{1/ν}) is then integrated by
/// globally adaptive G7-K15 bisection to absolute tolerance 1e-13.
pub fn adaptive_quad<F: Fn(f64) -> f64>(
    nu: f64,
    t_target: f64,
    a: f64,
    b: f64,
    smooth: F,
) -> Result<f64> {
    const TOL: f64 = 1e-13;
    const MAX_PANELS: usize = 4096;
    MomentQueryShim {
        nu,
        t_target,
        a,
        b,
    }
    .validate()?;
    let inv_nu = 1.0 / nu;
    let g = |u: f64| smooth(t_target - u.max(0.0).powf(inv_nu));
    let u_lo = if b == t_target {
        0.0
    } else {
        (t_target - b).powf(nu)
    };
    let u_hi = (t_target - a).powf(nu);

    // segments ordered worst-error-first
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::new(); // (err, lo, hi, val)
    let (v, e) = gk15(&g, u_lo, u_hi);
    segs.push((e, u_lo, u_hi, v));
    loop {
        let total_err: f64 = segs.iter().map(|s| s.0).sum();
        if total_err <= TOL {
            let total: f64 = segs.iter().map(|s| s.3).sum();
            return Ok(total * inv_nu);
        }
        if segs.len() >= MAX_PANELS {
            return Err(Error::ToleranceNotMet {
                requested: TOL,
                achieved: total_err,
            });
        }
        // split the worst panel
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i)
            .unwrap();
        let (_, lo, hi, _) = segs.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&g, lo, mid);
        let (v2, e2) = gk15(&g, mid, hi);
        segs.push((e1, lo, mid, v1));
        segs.push((e2, mid, hi, v2));
    }
}

// adaptive_quad shares the moment query domain without depending on the
// moments module.
struct MomentQueryShim {
    nu: f64,
    t_target: f64,
    a: f64,
    b: f64,
}

impl MomentQueryShim {
    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidNu { nu: self.nu });
        }
        if !(self.a < self.b && self.b <= self.t_target) {
            return Err(Error::InvalidInterval {
                a: self.a,
                b: self.b,
                t_target: self.t_target,
            });
        }
        Ok(())
    }
}

/// Fine-grid fallback truth: order-1 full-memory solve on a grid with every
/// interval split `fine_factor` times, restricted back to the coarse nodes.
pub fn reference_solve(
    problem: &CaputoProblem,
    grid: &TimeGrid,
    fine_factor: usize,
) -> Result<Trajectory> {
    if fine_factor < 4 {
        return Err(Error::Precondition(format!(
            "fine_factor = {fine_factor} must be at least 4"
        )));
    }
    let coarse = grid.nodes();
    let mut fine = Vec::with_capacity((coarse.len() - 1) * fine_factor + 1);
    for w in coarse.windows(2) {
        fine.push(w[0]);
        for l in 1..fine_factor {
            fine.push(w[0] + (w[1] - w[0]) * (l as f64 / fine_factor as f64));
        }
    }
    fine.push(*coarse.last().unwrap());
    let fine_grid = TimeGrid::from_nodes(fine)?;
    let config = SolverConfig {
        order: 1,
        memory: MemoryMode::Full,
        corrector_iterations: 1,
        bootstrap_refine: 1,
        ..SolverConfig::default()
    };
    let fine_traj = adams::solve(problem, &fine_grid, &config)?;
    let values = (0..coarse.len())
        .map(|j| fine_traj.values[j * fine_factor])
        .collect();
    let rhs_values = (0..coarse.len())
        .map(|j| fine_traj.rhs_values[j * fine_factor])
        .collect();
    Ok(Trajectory {
        grid: grid.clone(),
        values,
        rhs_values,
        clamped: fine_traj.clamped,
    })
}
