//! Exact moments of the weakly singular kernel and product-integration
//! weights.
//!
//! The building block is M(ν−1, k) = ∫_a^b (t* − s)^{ν−1} s^k ds with
//! 0 < ν ≤ 1 and a < b ≤ t*. Integration by parts gives the upward
//! recurrence
//!
//! M(ν−1, k) = −[s^k (t*−s)^ν]_a^b / (k+ν) + k t*/(k+ν) · M(ν−1, k−1),
//!
//! with the closed-form base case M(ν−1, 0) = ((t*−a)^ν − (t*−b)^ν)/ν.
//! When b = t* the boundary term at s = b vanishes identically (ν > 0), so
//! the singular endpoint never has to be evaluated.
//!
//! Pairing the moments with the monomial form of a Lagrange basis yields
//! weights w_j = Σ_k a_{jk} M(ν−1, k) that integrate the kernel exactly
//! against the interpolant of any data on the window.

use crate::error::{Error, Result};
use crate::lagrange::NodeWindow;

/// Cap on the monomial degree of a moment query.
pub const MAX_DEGREE: usize = 8;

/// A single kernel-moment request: ∫_a^b (t_target − s)^{nu−1} s^k ds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentQuery {
    pub nu: f64,
    pub k: usize,
    pub t_target: f64,
    pub a: f64,
    pub b: f64,
}

impl MomentQuery {
    pub fn validate(&self) -> Result<()> {
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
        if self.k > MAX_DEGREE {
            return Err(Error::DegreeTooLarge {
                k: self.k,
                cap: MAX_DEGREE,
            });
        }
        Ok(())
    }
}

/// Fill `out[k]` with M(ν−1, k) for k = 0 .. out.len()−1.
///
/// Inputs are assumed valid (see [`MomentQuery::validate`]); the solver
/// calls this on grid data it has already checked.
pub(crate) fn moment_row(nu: f64, t_target: f64, a: f64, b: f64, out: &mut [f64]) {
    moment_row_inner(nu, t_target, a, b, b == t_target, out);
}

fn moment_row_inner(nu: f64, t_target: f64, a: f64, b: f64, singular_end: bool, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let pa = (t_target - a).powf(nu);
    // boundary factor at s = b is exactly 0 at the singular endpoint
    let pb = if singular_end {
        0.0
    } else {
        (t_target - b).powf(nu)
    };
    out[0] = (pa - pb) / nu;
    let mut a_pow = 1.0;
    let mut b_pow = 1.0;
    for k in 1..out.len() {
        a_pow *= a;
        b_pow *= b;
        let boundary = b_pow * pb - a_pow * pa;
        let kf = k as f64;
        out[k] = (-boundary + kf * t_target * out[k - 1]) / (kf + nu);
    }
}

/// Exact kernel moment via the recurrence.
pub fn moment(q: &MomentQuery) -> Result<f64> {
    q.validate()?;
    let mut row = vec![0.0; q.k + 1];
    moment_row(q.nu, q.t_target, q.a, q.b, &mut row);
    Ok(row[q.k])
}

/// Recurrence value cross-checked against the adaptive-quadrature oracle.
///
/// If the two disagree by more than 1e-8 relative, a warning is logged and
/// the quadrature value is returned instead. Intended for validation runs;
/// the solver hot path uses [`moment`].
pub fn moment_checked(q: &MomentQuery) -> Result<f64> {
    let rec = moment(q)?;
    let quad = crate::oracle::adaptive_quad(q.nu, q.t_target, q.a, q.b, |s| s.powi(q.k as i32))?;
    let scale = quad.abs().max(f64::MIN_POSITIVE);
    if (rec - quad).abs() / scale > 1e-8 {
        log::warn!(
            "moment recurrence drifted from quadrature: {rec:e} vs {quad:e} for {q:?}; \
             using the quadrature value"
        );
        return Ok(quad);
    }
    Ok(rec)
}

/// Product-integration weights for one subinterval.
///
/// `weights[j]` multiplies the data value at `window.nodes()[j]`; the rule
/// integrates (t_target − s)^{ν−1} · (interpolant of the data) exactly over
/// (a, b).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub weights: Vec<f64>,
    pub window: NodeWindow,
    pub interval: (f64, f64),
    pub t_target: f64,
}

/// Assemble w_j = Σ_k a_{jk} M(ν−1, k) for the window's basis.
///
/// Internally the window, interval and anchor are shifted so the first node
/// sits at the origin before the basis is split; the kernel is translation
/// invariant, so the weights are the same, but fine windows far from t = 0
/// stay well conditioned that way.
pub fn interval_weights(
    window: &NodeWindow,
    nu: f64,
    t_target: f64,
    a: f64,
    b: f64,
) -> Result<WeightSet> {
    MomentQuery {
        nu,
        k: window.len() - 1,
        t_target,
        a,
        b,
    }
    .validate()?;
    let mut weights = vec![0.0; window.len()];
    shifted_window_weights(window.nodes(), nu, t_target, a, b, &mut weights);
    Ok(WeightSet {
        weights,
        window: window.clone(),
        interval: (a, b),
        t_target,
    })
}

/// Weight assembly in the frame shifted by the window's first node.
pub(crate) fn shifted_window_weights(
    nodes: &[f64],
    nu: f64,
    t_target: f64,
    a: f64,
    b: f64,
    weights: &mut [f64],
) {
    let c = nodes[0];
    let shifted: Vec<f64> = nodes.iter().map(|&t| t - c).collect();
    let coeffs = crate::lagrange::split_lagrange_unchecked(&shifted);
    let mut row = vec![0.0; nodes.len()];
    shifted_moment_row(nu, t_target, a, b, c, &mut row);
    for (w, r) in weights.iter_mut().zip(coeffs.rows()) {
        *w = r.iter().zip(&row).map(|(c, m)| c * m).sum();
    }
}

/// Moment row in the frame shifted by `c`. The singular-endpoint test is
/// done on the unshifted values so exact node identity is preserved.
pub(crate) fn shifted_moment_row(
    nu: f64,
    t_target: f64,
    a: f64,
    b: f64,
    c: f64,
    out: &mut [f64],
) {
    if b == t_target {
        // keep the exact-equality signal through the shift
        moment_row_inner(nu, t_target - c, a - c, b - c, true, out);
    } else {
        moment_row_inner(nu, t_target - c, a - c, b - c, false, out);
    }
}
