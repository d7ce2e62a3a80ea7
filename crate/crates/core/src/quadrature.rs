//! Gauss–Legendre rules and the (theta, phi) product grid.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{GombocError, Result};

pub const MIN_THETA_ORDER: usize = 8;
pub const MIN_PHI_ORDER: usize = 16;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wt| half * wt).collect(),
    )
}

/// Product rule: Gauss–Legendre in theta on `[0, pi]`, uniform periodic in phi on `[0, 2pi)`.
#[derive(Clone, Debug, Serialize)]
pub struct SphericalGrid {
    #[serde(skip)]
    pub theta_nodes: Vec<f64>,
    #[serde(skip)]
    pub theta_weights: Vec<f64>,
    #[serde(skip)]
    pub phi_nodes: Vec<f64>,
    #[serde(skip)]
    pub phi_weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphericalGrid {
    pub const DEFAULT_THETA: usize = 64;
    pub const DEFAULT_PHI: usize = 128;

    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < MIN_THETA_ORDER || n_phi < MIN_PHI_ORDER {
            return Err(GombocError::InvalidGrid(format!(
                "quadrature needs n_theta >= {MIN_THETA_ORDER} and n_phi >= {MIN_PHI_ORDER}, got {n_theta}x{n_phi}"
            )));
        }
        let (theta_nodes, theta_weights) = gauss_legendre_on(n_theta, 0.0, PI);
        let h = TAU / n_phi as f64;
        Ok(Self {
            theta_nodes,
            theta_weights,
            phi_nodes: (0..n_phi).map(|j| j as f64 * h).collect(),
            phi_weights: vec![h; n_phi],
            n_theta,
            n_phi,
        })
    }
}

impl Default for SphericalGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_THETA, Self::DEFAULT_PHI).expect("default orders are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_rules_match_tables() {
        let (x, w) = gauss_legendre(2);
        assert_relative_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_relative_eq!(x[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_eq!(x[1], 0.0);
        assert_relative_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(w[0], 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [5, 16, 64, 128] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n).min(40) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn grid_weights_sum() {
        let g = SphericalGrid::new(64, 128).unwrap();
        assert_relative_eq!(g.theta_weights.iter().sum::<f64>(), PI, epsilon = 1e-13);
        assert_relative_eq!(g.phi_weights.iter().sum::<f64>(), TAU, epsilon = 1e-13);
        let sin_int: f64 = g.theta_nodes.iter().zip(&g.theta_weights).map(|(t, w)| w * t.sin()).sum();
        assert_relative_eq!(sin_int, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn grid_minimum_orders() {
        assert!(SphericalGrid::new(7, 16).is_err());
        assert!(SphericalGrid::new(8, 15).is_err());
        assert!(SphericalGrid::new(8, 16).is_ok());
    }
}
