//! Chebyshev polynomials of the first kind, their first and second
//! derivatives, and Chebyshev–Gauss–Lobatto quadrature.
//!
//! All evaluations run the three-term recurrence
//!
//! ```text
//! T_{n+1}   = 2x T_n − T_{n−1}
//! T'_{n+1}  = 2 T_n  + 2x T'_n  − T'_{n−1}
//! T''_{n+1} = 4 T'_n + 2x T''_n − T''_{n−1}
//! ```
//!
//! which is exact at the endpoints and costs O(n) per point.

use std::f64::consts::PI;

use crate::error::{CsnnError, Result};

/// Arguments this far outside `[-1, 1]` are clamped rather than rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

pub(crate) fn clamp_unit(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + CLAMP_TOLERANCE {
        return Err(CsnnError::Domain { value: x });
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// `T_n(x)`.
pub fn chebyshev_t(n: usize, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    Ok(values_upto(n, x, 0)[0][n])
}

/// First or second derivative of `T_n` at `x`.
pub fn chebyshev_t_deriv(n: usize, x: f64, order: usize) -> Result<f64> {
    if order == 0 || order > 2 {
        return Err(CsnnError::UnsupportedOrder(order));
    }
    let x = clamp_unit(x)?;
    Ok(values_upto(n, x, order)[order][n])
}

/// Values of `T_0 … T_n` and, up to `order`, their derivatives at an
/// already-validated `x`. Rows beyond `order` are left empty.
pub(crate) fn values_upto(n: usize, x: f64, order: usize) -> [Vec<f64>; 3] {
    let len = n + 1;
    let mut t = vec![0.0; len];
    let mut dt = if order >= 1 { vec![0.0; len] } else { Vec::new() };
    let mut d2t = if order >= 2 { vec![0.0; len] } else { Vec::new() };
    t[0] = 1.0;
    if len > 1 {
        t[1] = x;
        if order >= 1 {
            dt[1] = 1.0;
        }
    }
    for k in 1..n {
        t[k + 1] = 2.0 * x * t[k] - t[k - 1];
        if order >= 1 {
            dt[k + 1] = 2.0 * t[k] + 2.0 * x * dt[k] - dt[k - 1];
        }
        if order >= 2 {
            d2t[k + 1] = 4.0 * dt[k] + 2.0 * x * d2t[k] - d2t[k - 1];
        }
    }
    [t, dt, d2t]
}

/// Chebyshev–Gauss–Lobatto nodes and weights of order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CglRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CglRule {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(CsnnError::InvalidOrder(order));
        }
        let n = order as f64;
        let nodes = (0..=order)
            .map(|j| {
                // exact symmetric values at the center and endpoints
                if 2 * j == order {
                    0.0
                } else {
                    (PI * j as f64 / n).cos()
                }
            })
            .collect();
        let weights = (0..=order)
            .map(|j| if j == 0 || j == order { PI / (2.0 * n) } else { PI / n })
            .collect();
        Ok(Self {
            order,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `x_0 = 1 > x_1 > … > x_N = −1`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes `x_1 … x_{N−1}`, i.e. without the two endpoints.
    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.order]
    }

    /// `Σ_j u(x_j) v(x_j) ω_j`.
    pub fn inner_product(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let expected = self.order + 1;
        for len in [u.len(), v.len()] {
            if len != expected {
                return Err(CsnnError::LengthMismatch { expected, got: len });
            }
        }
        Ok(u.iter()
            .zip(v)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    /// Discrete norm induced by [`CglRule::inner_product`].
    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.inner_product(u, u)?.sqrt())
    }
}

pub fn cgl_rule(order: usize) -> Result<CglRule> {
    CglRule::new(order)
}

pub fn discrete_inner_product(u: &[f64], v: &[f64], rule: &CglRule) -> Result<f64> {
    rule.inner_product(u, v)
}
