//! Splitting of Lagrange basis polynomials into monomial coefficients.
//!
//! For m distinct nodes t_0 < … < t_{m−1}, the j-th basis polynomial is
//!
//! L_j(s) = Π_{i≠j} (s − t_i) / (t_j − t_i).
//!
//! Written in monomial form L_j(s) = Σ_k a_{jk} s^k, the numerator
//! coefficients are the signed elementary symmetric sums of the excluded
//! node set and the denominator is the usual product of node gaps. With the
//! basis in this form, integrating L_j against any kernel reduces to kernel
//! moments of s^k, which is what the product-integration weights need.

use crate::error::{Error, Result};

/// Hard cap on the window size; beyond this the monomial form of the basis
/// is too ill-conditioned to be useful in double precision.
pub const MAX_WINDOW: usize = 8;

/// Ordered window of distinct interpolation nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWindow {
    nodes: Vec<f64>,
}

impl NodeWindow {
    /// Nodes must be finite, strictly increasing and at most [`MAX_WINDOW`] many.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if nodes.len() > MAX_WINDOW {
            return Err(Error::WindowTooLarge {
                m: nodes.len(),
                cap: MAX_WINDOW,
            });
        }
        for (i, w) in nodes.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                return Err(Error::DuplicateNodes { index: i + 1, gap });
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Monomial coefficients of a Lagrange basis: row j holds a_{j0} … a_{j,m−1}
/// with L_j(s) = Σ_k a_{jk} s^k.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisCoefficients {
    rows: Vec<Vec<f64>>,
}

impl BasisCoefficients {
    /// Coefficient rows, one per basis polynomial.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn window_len(&self) -> usize {
        self.rows.len()
    }
}

/// Expand every Lagrange basis polynomial of `window` into monomial
/// coefficients.
///
/// The elementary symmetric sums are accumulated by absorbing one root at a
/// time (multiplying out (s − t_i) factor by factor), which gives the same
/// signed sums as enumerating all node subsets in O(m²) operations.
pub fn split_lagrange(window: &NodeWindow) -> BasisCoefficients {
    split_lagrange_unchecked(window.nodes())
}

/// Splitting on a raw node slice the caller has already validated.
pub(crate) fn split_lagrange_unchecked(nodes: &[f64]) -> BasisCoefficients {
    let m = nodes.len();
    let mut rows = Vec::with_capacity(m);
    for j in 0..m {
        let mut deno = 1.0;
        // numerator = Π_{i≠j} (s − t_i), built up coefficient-wise
        let mut poly = vec![0.0; m];
        poly[0] = 1.0;
        let mut deg = 0;
        for (i, &t) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            deno *= nodes[j] - t;
            deg += 1;
            for k in (0..=deg).rev() {
                let shifted = if k > 0 { poly[k - 1] } else { 0.0 };
                poly[k] = shifted - t * poly[k];
            }
        }
        for c in &mut poly {
            *c /= deno;
        }
        rows.push(poly);
    }
    BasisCoefficients { rows }
}

/// Evaluate all basis polynomials at `s` by Horner's rule.
pub fn eval_basis(coeffs: &BasisCoefficients, s: f64) -> Vec<f64> {
    coeffs
        .rows
        .iter()
        .map(|row| row.iter().rev().fold(0.0, |acc, &c| acc * s + c))
        .collect()
}
