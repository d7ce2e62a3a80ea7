//! Volume and first moments by product quadrature, and the reduced
//! center-of-mass constraints on the phase law.
//!
//! The radial integrals are done analytically: `∫ r^2 dr = F^3 / 3` for the
//! volume and `∫ r^3 dr = F^4 / 4` for the first moments. The residuals below
//! carry the `1/4`, so they are the true first moments of the unscaled body and
//! `com = residual / volume`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::quadrature::{gauss_legendre_on, SphericalGrid};
use crate::surface::{eta, PhaseFunction, ShapeSpec};

/// A center-of-mass residual counts as zero below this magnitude.
pub const COM_RESIDUAL_THRESHOLD: f64 = 1e-8;

/// Gauss–Legendre order for the one-dimensional phase constraints.
pub const CONSTRAINT_ORDER: usize = 128;

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    /// Volume of the scaled body.
    pub volume: f64,
    /// Center of mass of the scaled body.
    pub com: [f64; 3],
    /// `∫∫ sin(theta) cos(theta) F^4/4 dtheta dphi` on the unscaled body.
    pub com_residual_z: f64,
    /// `∫∫ sin^2(theta) exp(i phi) F^4/4 dtheta dphi` on the unscaled body.
    pub com_residual_xy: Complex64,
    pub threshold: f64,
    /// Both residuals below [`COM_RESIDUAL_THRESHOLD`].
    pub com_at_origin: bool,
    pub grid: SphericalGrid,
}

/// Sums `g(theta, phi) * w_theta * w_phi` row by row. Rows are reduced in
/// parallel and combined in index order, so the result does not depend on the
/// thread count.
fn integrate<T, G>(grid: &SphericalGrid, g: G) -> T
where
    T: Send + Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    G: Fn(f64, f64) -> T + Sync,
{
    let rows: Vec<T> = grid
        .theta_nodes
        .par_iter()
        .zip(grid.theta_weights.par_iter())
        .map(|(&theta, &wt)| {
            let row: T = grid
                .phi_nodes
                .iter()
                .zip(&grid.phi_weights)
                .map(|(&phi, &wp)| g(theta, phi) * wp)
                .sum();
            row * wt
        })
        .collect();
    rows.into_iter().sum()
}

fn unit_volume(shape: &ShapeSpec, grid: &SphericalGrid) -> f64 {
    integrate(grid, |theta, phi| {
        let f = shape.jet(theta, phi).f;
        theta.sin() * f * f * f / 3.0
    })
}

/// Volume of the scaled body.
pub fn volume(shape: &ShapeSpec, grid: &SphericalGrid) -> f64 {
    unit_volume(shape, grid) * shape.scale_r0().powi(3)
}

pub fn com_residuals(shape: &ShapeSpec, grid: &SphericalGrid) -> MomentReport {
    let unit_vol = unit_volume(shape, grid);
    let com_residual_z = integrate(grid, |theta, phi| {
        let (s, c) = theta.sin_cos();
        s * c * shape.quartic(theta, phi).q / 4.0
    });
    let com_residual_xy = integrate(grid, |theta, phi| {
        let s = theta.sin();
        Complex64::from_polar(s * s * shape.quartic(theta, phi).q / 4.0, phi)
    });
    let r0 = shape.scale_r0();
    let com = [
        r0 * com_residual_xy.re / unit_vol,
        r0 * com_residual_xy.im / unit_vol,
        r0 * com_residual_z / unit_vol,
    ];
    MomentReport {
        volume: unit_vol * r0.powi(3),
        com,
        com_residual_z,
        com_residual_xy,
        threshold: COM_RESIDUAL_THRESHOLD,
        com_at_origin: com_residual_z.abs() < COM_RESIDUAL_THRESHOLD
            && com_residual_xy.norm() < COM_RESIDUAL_THRESHOLD,
        grid: grid.clone(),
    }
}

/// `∫_0^pi sin^3(theta) exp(i P(theta)) dtheta` for an arbitrary phase callback.
pub fn phase_constraint_residual_with(phase: impl Fn(f64) -> f64) -> Complex64 {
    let (nodes, weights) = gauss_legendre_on(CONSTRAINT_ORDER, 0.0, PI);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| {
            let s = t.sin();
            Complex64::from_polar(w * s * s * s, phase(t))
        })
        .sum()
}

/// The reduced center-of-mass constraint; zero iff the body balances at the origin.
pub fn phase_constraint_residual(phase: &PhaseFunction) -> Complex64 {
    phase_constraint_residual_with(|t| phase.value(t))
}

/// `∫_{-pi}^{pi} exp(i P(eta)) deta` for a phase given as a function of `eta`.
pub fn eta_constraint_residual(phase_of_eta: impl Fn(f64) -> f64) -> Complex64 {
    let (nodes, weights) = gauss_legendre_on(CONSTRAINT_ORDER, -PI, PI);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&e, &w)| Complex64::from_polar(w, phase_of_eta(e)))
        .sum()
}

/// Both forms of the constraint for a phase written in `eta`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChangeOfVariables {
    /// `∫_0^pi sin^3(theta) exp(i P(eta(theta))) dtheta`.
    pub theta_form: Complex64,
    /// `∫_{-pi}^{pi} exp(i P(eta)) deta`.
    pub eta_form: Complex64,
    /// `|theta_form - 2/(3pi) eta_form|`.
    pub gap: f64,
}

/// Evaluates the constraint in both variables; since
/// `deta = -(3pi/2) sin^3(theta) dtheta`, the two agree up to `2/(3pi)`.
pub fn change_of_variables(phase_of_eta: impl Fn(f64) -> f64) -> ChangeOfVariables {
    let theta_form = phase_constraint_residual_with(|t| phase_of_eta(eta(t)));
    let eta_form = eta_constraint_residual(&phase_of_eta);
    ChangeOfVariables {
        theta_form,
        eta_form,
        gap: (theta_form - eta_form * (2.0 / (3.0 * PI))).norm(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Preset;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_volume() {
        let s = Preset::G1.shape(1e-12).unwrap();
        let v = volume(&s, &SphericalGrid::default());
        assert_relative_eq!(v, 4.0 * PI / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn volume_scales_cubically() {
        let grid = SphericalGrid::default();
        let s = Preset::G2.shape(0.17).unwrap();
        let v1 = volume(&s, &grid);
        let v2 = volume(&s.clone().with_scale(2.0).unwrap(), &grid);
        assert_relative_eq!(v2, 8.0 * v1, max_relative = 1e-14);
    }

    #[test]
    fn presets_balance() {
        let grid = SphericalGrid::default();
        for (p, b) in [(Preset::G1, 0.15), (Preset::G2, 0.17)] {
            let r = com_residuals(&p.shape(b).unwrap(), &grid);
            assert!(r.com_residual_z.abs() < 1e-10, "{p:?} z {}", r.com_residual_z);
            assert!(r.com_residual_xy.norm() < 1e-10, "{p:?} xy {}", r.com_residual_xy);
            assert!(r.com_at_origin);
            assert!(r.volume > 0.0);
        }
    }

    #[test]
    fn off_center_counter_example() {
        let s = ShapeSpec::new(0.15, PhaseFunction::linear(3.0, 0.0).unwrap()).unwrap();
        let r = com_residuals(&s, &SphericalGrid::default());
        // F^4/4 averaged against exp(i phi) leaves beta*pi * ∫ sin^3 e^{3i theta} = beta*pi * (-i pi/8)
        let expected = Complex64::new(0.0, -0.15 * PI * PI / 8.0);
        assert!((r.com_residual_xy - expected).norm() < 1e-12);
        assert!(r.com_residual_z.abs() < 1e-10);
        assert!(!r.com_at_origin);
        assert_relative_eq!(r.com[1], expected.im / r.volume, max_relative = 1e-12);
    }

    #[test]
    fn phase_constraints() {
        assert!(phase_constraint_residual(&PhaseFunction::linear_wrap(5).unwrap()).norm() < 1e-12);
        assert!(phase_constraint_residual(&PhaseFunction::CosineCubic).norm() < 1e-12);
        for n in [7, 9, 11] {
            assert!(phase_constraint_residual(&PhaseFunction::linear_wrap(n).unwrap()).norm() < 1e-12);
        }
        let r = phase_constraint_residual(&PhaseFunction::linear(3.0, 0.0).unwrap());
        assert!((r - Complex64::new(0.0, -PI / 8.0)).norm() < 1e-9);
        // n = 1 is not balanced either: ∫ sin^3 e^{i theta} = i * 3pi/8
        let r = phase_constraint_residual_with(|t| t);
        assert!((r - Complex64::new(0.0, 3.0 * PI / 8.0)).norm() < 1e-12);
    }

    #[test]
    fn eta_constraints() {
        assert!(eta_constraint_residual(|e| e).norm() < 1e-12);
        assert!((eta_constraint_residual(|_| 0.0) - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-12);
        assert!(eta_constraint_residual(|e| 2.0 * e).norm() < 1e-12);
    }

    #[test]
    fn change_of_variables_identity() {
        for f in [|e: f64| e, |e: f64| 2.0 * e, |_| 0.0, |e: f64| 0.5 * e * e] {
            let cv = change_of_variables(f);
            assert!(cv.gap < 1e-10, "gap {}", cv.gap);
        }
    }

    #[test]
    fn z_residual_vanishes_for_any_phase() {
        let grid = SphericalGrid::default();
        for phase in [
            PhaseFunction::linear(3.0, 0.0).unwrap(),
            PhaseFunction::linear(1.7, 0.4).unwrap(),
            PhaseFunction::linear(2.0, 0.0).unwrap(),
        ] {
            let r = com_residuals(&ShapeSpec::new(0.15, phase).unwrap(), &grid);
            assert!(r.com_residual_z.abs() < 1e-10);
        }
    }

    #[test]
    fn xy_residual_reduces_to_phase_constraint() {
        let grid = SphericalGrid::default();
        for phase in [
            PhaseFunction::linear(3.0, 0.0).unwrap(),
            PhaseFunction::linear(2.0, 0.3).unwrap(),
            PhaseFunction::linear(1.3, 0.0).unwrap(),
        ] {
            let beta = 0.12;
            let lhs = com_residuals(&ShapeSpec::new(beta, phase.clone()).unwrap(), &grid).com_residual_xy;
            let rhs = phase_constraint_residual(&phase) * (beta * PI);
            assert!((lhs - rhs).norm() < 1e-10, "{} vs {}", lhs, rhs);
        }
    }

    #[test]
    fn quadrature_converged_at_default_orders() {
        let coarse = SphericalGrid::default();
        let fine = SphericalGrid::new(128, 256).unwrap();
        for (p, b) in [(Preset::G1, 0.15), (Preset::G2, 0.17)] {
            let s = p.shape(b).unwrap();
            let (a, c) = (com_residuals(&s, &coarse), com_residuals(&s, &fine));
            assert!((a.volume - c.volume).abs() < 1e-10, "{p:?}");
            assert!((a.com_residual_xy - c.com_residual_xy).norm() < 1e-10);
            assert!((a.com_residual_z - c.com_residual_z).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_sum() {
        let s = Preset::G1.shape(0.15).unwrap();
        let g = SphericalGrid::default();
        let a = com_residuals(&s, &g);
        let b = com_residuals(&s, &g);
        assert_eq!(a.volume.to_bits(), b.volume.to_bits());
        assert_eq!(a.com_residual_xy.re.to_bits(), b.com_residual_xy.re.to_bits());
    }
}
