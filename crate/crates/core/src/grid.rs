//! Time and alpha discretizations.

use crate::error::{Error, Result};

/// Pull a uniform-grid value onto the step's decimal scale, so grids built
/// from decimal steps print cleanly (0.3 rather than 0.30000000000000004).
/// Values move by at most one rounding unit; anything that does not look
/// like a short decimal step is left untouched.
fn snap_decimal(v: f64, step: f64) -> f64 {
    let s = format!("{step}");
    if s.contains('e') {
        return v;
    }
    let decimals = s.split('.').nth(1).map_or(0, str::len);
    if decimals == 0 || decimals > 12 {
        return v;
    }
    let scale = 10f64.powi(decimals as i32);
    let snapped = (v * scale).round() / scale;
    if (snapped - v).abs() <= 1e-9 * v.abs().max(1.0) {
        snapped
    } else {
        v
    }
}

/// Strictly increasing sequence of time nodes, optionally carrying a refined
/// prefix (extra sub-step nodes inserted in the leading intervals for the
/// solver bootstrap).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    /// Number of nodes that were inserted by prefix refinement (0 for a
    /// plain grid). Metadata only; the solver treats all nodes alike.
    refined_prefix: usize,
}

impl TimeGrid {
    /// Build a grid from explicit nodes. They must be finite and strictly
    /// increasing, and there must be at least one node.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidGrid("no nodes".into()));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "nodes not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        Ok(Self {
            nodes,
            refined_prefix: 0,
        })
    }

    /// Uniform grid from `t_start` to `t_end` with step `h`. The step must
    /// divide the horizon to within 1e-9 relative; the last node is placed
    /// at exactly `t_end`.
    pub fn uniform(t_start: f64, t_end: f64, h: f64) -> Result<Self> {
        if !(t_end > t_start) || !(h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need t_start < t_end and h > 0 (got {t_start}, {t_end}, {h})"
            )));
        }
        let span = t_end - t_start;
        let steps = (span / h).round();
        if steps < 1.0 || (steps * h - span).abs() > 1e-9 * span {
            return Err(Error::InvalidGrid(format!(
                "step {h} does not divide the horizon {span}"
            )));
        }
        let n = steps as usize;
        let mut nodes = Vec::with_capacity(n + 1);
        for i in 0..n {
            nodes.push(snap_decimal(t_start + span * (i as f64 / n as f64), h));
        }
        nodes.push(t_end);
        Self::from_nodes(nodes)
    }

    /// New grid with the first `intervals` intervals each split into
    /// `factor` equal parts. All original nodes are kept verbatim.
    pub fn with_refined_prefix(&self, factor: usize, intervals: usize) -> Self {
        let k = intervals.min(self.nodes.len() - 1);
        if factor <= 1 || k == 0 {
            return self.clone();
        }
        let mut nodes = Vec::with_capacity(self.nodes.len() + k * (factor - 1));
        for i in 0..k {
            let (lo, hi) = (self.nodes[i], self.nodes[i + 1]);
            nodes.push(lo);
            for l in 1..factor {
                nodes.push(lo + (hi - lo) * (l as f64 / factor as f64));
            }
        }
        nodes.extend_from_slice(&self.nodes[k..]);
        Self {
            nodes,
            refined_prefix: k * (factor - 1),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes (intervals + 1).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one node by construction
    }

    pub fn t_start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn refined_prefix(&self) -> usize {
        self.refined_prefix
    }
}

/// Strictly increasing confidence levels in the open interval (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    alphas: Vec<f64>,
}

impl AlphaGrid {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidGrid("empty alpha grid".into()));
        }
        for &a in &alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::AlphaOutOfRange { alpha: a });
            }
        }
        for w in alphas.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidGrid("alphas not strictly increasing".into()));
            }
        }
        Ok(Self { alphas })
    }

    /// Uniform levels `lo, lo+step, …, hi`; `step` must divide `hi - lo`.
    pub fn uniform(lo: f64, step: f64, hi: f64) -> Result<Self> {
        if !(hi >= lo) || !(step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "need lo <= hi and step > 0 (got {lo}, {hi}, {step})"
            )));
        }
        let span = hi - lo;
        let n = (span / step).round();
        if span > 0.0 && (n * step - span).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!(
                "step {step} does not divide the range {span}"
            )));
        }
        let n = n as usize;
        let mut alphas = Vec::with_capacity(n + 1);
        for i in 0..n {
            alphas.push(snap_decimal(lo + span * (i as f64 / n as f64), step));
        }
        alphas.push(hi);
        Self::new(alphas)
    }

    /// The default experiment grid 0.01, 0.02, …, 0.99.
    pub fn default_percent() -> Self {
        Self::uniform(0.01, 0.01, 0.99).expect("static grid is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the level closest to `alpha` within `tol`, if any.
    pub fn index_of(&self, alpha: f64, tol: f64) -> Option<usize> {
        let i = self
            .alphas
            .partition_point(|&a| a < alpha)
            .min(self.alphas.len() - 1);
        let candidates = [i.saturating_sub(1), i];
        candidates
            .into_iter()
            .filter(|&j| (self.alphas[j] - alpha).abs() <= tol)
            .min_by(|&p, &q| {
                (self.alphas[p] - alpha)
                    .abs()
                    .total_cmp(&(self.alphas[q] - alpha).abs())
            })
    }

    /// Index of the row at 1 − α_i, for grids symmetric about 1/2.
    pub fn mirror_index(&self, i: usize) -> Option<usize> {
        self.index_of(1.0 - self.alphas[i], 1e-9)
    }
}
