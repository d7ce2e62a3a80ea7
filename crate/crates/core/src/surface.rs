//! The perturbed-sphere surface family and its exact derivatives.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Serialize, Serializer};

use crate::error::{GombocError, Result};

/// Tolerance band outside `[0, pi]` inside which `theta` is clamped rather than rejected.
pub const THETA_TOLERANCE: f64 = 1e-12;

/// Upper bound on `beta`: keeps `F^4 >= 1 - 4 beta` strictly positive.
pub const BETA_LIMIT: f64 = 0.25;

type PhaseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Odd wrap number `n = 2p + 1` with `p >= 2` for the linear phase `P(theta) = n theta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WrapNumber(u32);

impl WrapNumber {
    pub fn new(n: u32) -> Result<Self> {
        if n >= 5 && n % 2 == 1 {
            Ok(Self(n))
        } else {
            Err(GombocError::InvalidPhase(format!(
                "linear wrap number must be odd and at least 5, got {n}"
            )))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// A user-supplied phase law with analytic first and second derivatives.
#[derive(Clone)]
pub struct CustomPhase {
    name: String,
    value: PhaseFn,
    first: PhaseFn,
    second: PhaseFn,
}

impl CustomPhase {
    /// Builds a custom phase. The three callbacks are sampled on `[0, pi]` and
    /// rejected if any of them produces a non-finite value.
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        first: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let phase = Self {
            name: name.into(),
            value: Arc::new(value),
            first: Arc::new(first),
            second: Arc::new(second),
        };
        const SAMPLES: usize = 512;
        for k in 0..=SAMPLES {
            let theta = PI * k as f64 / SAMPLES as f64;
            let vals = [
                (phase.value)(theta),
                (phase.first)(theta),
                (phase.second)(theta),
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(GombocError::InvalidPhase(format!(
                    "custom phase '{}' is not finite at theta={theta}",
                    phase.name
                )));
            }
        }
        Ok(phase)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPhase").field("name", &self.name).finish()
    }
}

/// The azimuthal offset law `P(theta)`.
#[derive(Clone, Debug)]
pub enum PhaseFunction {
    /// `P(theta) = n theta`; wraps `n / 2` turns around the z axis from pole to pole.
    LinearWrap(WrapNumber),
    /// `P(theta) = eta(theta) = 3pi/2 (cos theta - cos^3 theta / 3)`.
    CosineCubic,
    Custom(CustomPhase),
}

impl PhaseFunction {
    pub fn linear_wrap(n: u32) -> Result<Self> {
        WrapNumber::new(n).map(PhaseFunction::LinearWrap)
    }

    /// `P(theta) = slope * theta + offset` with no restriction on the slope.
    ///
    /// Slopes other than odd integers `>= 5` move the center of mass off the
    /// origin; this constructor exists for counter-examples.
    pub fn linear(slope: f64, offset: f64) -> Result<Self> {
        if !slope.is_finite() || !offset.is_finite() {
            return Err(GombocError::InvalidPhase(format!(
                "linear phase needs finite coefficients, got slope={slope}, offset={offset}"
            )));
        }
        let name = if offset == 0.0 {
            format!("linear({slope})")
        } else {
            format!("linear({slope},{offset})")
        };
        CustomPhase::new(
            name,
            move |t| slope * t + offset,
            move |_| slope,
            |_| 0.0,
        )
        .map(PhaseFunction::Custom)
    }

    pub fn name(&self) -> String {
        match self {
            PhaseFunction::LinearWrap(n) => format!("linear-wrap({})", n.get()),
            PhaseFunction::CosineCubic => "cosine-cubic".to_string(),
            PhaseFunction::Custom(c) => c.name.clone(),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self {
            PhaseFunction::LinearWrap(n) => n.get() as f64 * theta,
            PhaseFunction::CosineCubic => eta(theta),
            PhaseFunction::Custom(c) => (c.value)(theta),
        }
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        match self {
            PhaseFunction::LinearWrap(n) => n.get() as f64,
            PhaseFunction::CosineCubic => {
                let s = theta.sin();
                -1.5 * PI * s * s * s
            }
            PhaseFunction::Custom(c) => (c.first)(theta),
        }
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        match self {
            PhaseFunction::LinearWrap(_) => 0.0,
            PhaseFunction::CosineCubic => {
                let (s, c) = theta.sin_cos();
                -4.5 * PI * s * s * c
            }
            PhaseFunction::Custom(c) => (c.second)(theta),
        }
    }
}

impl Serialize for PhaseFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

/// The cosine-cubic substitution `eta = 3pi/2 (cos theta - cos^3 theta / 3)`,
/// mapping `[0, pi]` onto `[pi, -pi]` with `d eta = -(3pi/2) sin^3 theta d theta`.
pub fn eta(theta: f64) -> f64 {
    let c = theta.cos();
    1.5 * PI * (c - c * c * c / 3.0)
}

/// `P(theta)` for the given phase law.
pub fn phase_value(phase: &PhaseFunction, theta: f64) -> f64 {
    phase.value(theta)
}

/// The two shapes with closed-form phase laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `P(theta) = 5 theta`.
    G1,
    /// `P(theta) = eta(theta)`.
    G2,
}

impl Preset {
    pub fn phase(self) -> PhaseFunction {
        match self {
            Preset::G1 => PhaseFunction::LinearWrap(WrapNumber(5)),
            Preset::G2 => PhaseFunction::CosineCubic,
        }
    }

    /// Amplitude quoted as sufficient for convexity in the original construction.
    pub fn default_beta(self) -> f64 {
        match self {
            Preset::G1 => 0.15,
            Preset::G2 => 0.17,
        }
    }

    pub fn shape(self, beta: f64) -> Result<ShapeSpec> {
        ShapeSpec::new(beta, self.phase())
    }

    /// Expected `(theta, phi)` of the stable and unstable equilibria.
    pub fn equilibria(self) -> ((f64, f64), (f64, f64)) {
        match self {
            Preset::G1 => ((FRAC_PI_2, 3.0 * FRAC_PI_2), (FRAC_PI_2, FRAC_PI_2)),
            Preset::G2 => ((FRAC_PI_2, PI), (FRAC_PI_2, 0.0)),
        }
    }
}

/// One analytic shape: amplitude, phase law and physical scale.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeSpec {
    beta: f64,
    phase: PhaseFunction,
    scale_r0: f64,
}

impl ShapeSpec {
    pub fn new(beta: f64, phase: PhaseFunction) -> Result<Self> {
        if !(beta > 0.0 && beta < BETA_LIMIT) {
            return Err(GombocError::InvalidShape(format!(
                "beta must lie in (0, {BETA_LIMIT}), got {beta}"
            )));
        }
        Ok(Self {
            beta,
            phase,
            scale_r0: 1.0,
        })
    }

    pub fn with_scale(mut self, scale_r0: f64) -> Result<Self> {
        if !(scale_r0 > 0.0 && scale_r0.is_finite()) {
            return Err(GombocError::InvalidShape(format!(
                "scale_r0 must be positive and finite, got {scale_r0}"
            )));
        }
        self.scale_r0 = scale_r0;
        Ok(self)
    }

    /// Same shape with a different amplitude.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        ShapeSpec::new(beta, self.phase.clone())?.with_scale(self.scale_r0)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phase(&self) -> &PhaseFunction {
        &self.phase
    }

    pub fn scale_r0(&self) -> f64 {
        self.scale_r0
    }

    /// `F^4` and its partials. Inputs are trusted to be canonical.
    pub(crate) fn quartic(&self, theta: f64, phi: f64) -> QuarticJet {
        let k = 4.0 * self.beta;
        let p1 = self.phase.derivative(theta);
        let p2 = self.phase.second_derivative(theta);
        let (st, ct) = theta.sin_cos();
        let (su, cu) = (phi - self.phase.value(theta)).sin_cos();

        QuarticJet {
            q: 1.0 + k * st * cu,
            q_t: k * (ct * cu + st * p1 * su),
            q_p: -k * st * su,
            q_p_over_sin: -k * su,
            q_tt: k * (-st * cu * (1.0 + p1 * p1) + 2.0 * ct * p1 * su + st * p2 * su),
            q_pp: -k * st * cu,
            q_tp: -k * (ct * su - st * p1 * cu),
        }
    }

    /// Radius and partials, chained through the fourth root of `F^4`.
    pub(crate) fn jet(&self, theta: f64, phi: f64) -> SurfaceJet {
        self.quartic(theta, phi).radius()
    }

    /// Exact jet of the unscaled radius `F(theta, phi)`.
    pub fn radius_jet(&self, theta: f64, phi: f64) -> Result<SurfaceJet> {
        let (theta, phi) = canonical_angles(theta, phi)?;
        Ok(self.jet(theta, phi))
    }

    /// Unscaled surface point `F r_hat`.
    pub fn cartesian_point(&self, theta: f64, phi: f64) -> Result<Vector3<f64>> {
        let (theta, phi) = canonical_angles(theta, phi)?;
        Ok(self.point(theta, phi))
    }

    pub(crate) fn point(&self, theta: f64, phi: f64) -> Vector3<f64> {
        radial(theta, phi) * self.jet(theta, phi).f
    }

    /// Unit outward normal, proportional to `grad(r - F)` on the surface.
    ///
    /// At the poles the tangential part uses the limits of `dF/dtheta` and
    /// `dF/dphi / sin(theta)`, which are finite and direction independent.
    pub fn outward_normal(&self, theta: f64, phi: f64) -> Result<Vector3<f64>> {
        let (theta, phi) = canonical_angles(theta, phi)?;
        Ok(self.normal(theta, phi))
    }

    pub(crate) fn normal(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let j = self.jet(theta, phi);
        let (r_hat, t_hat, p_hat) = frame(theta, phi);
        (r_hat - t_hat * (j.df_dtheta / j.f) - p_hat * (j.df_dphi_over_sin / j.f)).normalize()
    }
}

/// Partial derivatives of `F^4`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct QuarticJet {
    pub q: f64,
    pub q_t: f64,
    pub q_p: f64,
    /// `q_p / sin(theta)`, finite at the poles.
    pub q_p_over_sin: f64,
    pub q_tt: f64,
    pub q_pp: f64,
    pub q_tp: f64,
}

impl QuarticJet {
    fn radius(&self) -> SurfaceJet {
        let f = self.q.sqrt().sqrt();
        let a = f / (4.0 * self.q);
        let b = 3.0 * f / (16.0 * self.q * self.q);
        SurfaceJet {
            f,
            df_dtheta: a * self.q_t,
            df_dphi: a * self.q_p,
            df_dphi_over_sin: a * self.q_p_over_sin,
            d2f_dtheta2: a * self.q_tt - b * self.q_t * self.q_t,
            d2f_dphi2: a * self.q_pp - b * self.q_p * self.q_p,
            d2f_dthetadphi: a * self.q_tp - b * self.q_t * self.q_p,
        }
    }

    /// Norm of the tangential gradient of `F^4` on the unit sphere.
    pub fn tangential_norm(&self) -> f64 {
        self.q_t.hypot(self.q_p_over_sin)
    }
}

/// Radius `F` and its first and second partials in `(theta, phi)`, unscaled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceJet {
    pub f: f64,
    pub df_dtheta: f64,
    pub df_dphi: f64,
    /// `dF/dphi / sin(theta)`, evaluated analytically so it stays finite at the poles.
    pub df_dphi_over_sin: f64,
    pub d2f_dtheta2: f64,
    pub d2f_dphi2: f64,
    pub d2f_dthetadphi: f64,
}

/// Clamps `theta` into `[0, pi]` (rejecting values further than
/// [`THETA_TOLERANCE`] outside) and reduces `phi` to `[0, 2pi)`.
pub fn canonical_angles(theta: f64, phi: f64) -> Result<(f64, f64)> {
    if !theta.is_finite()
        || !phi.is_finite()
        || theta < -THETA_TOLERANCE
        || theta > PI + THETA_TOLERANCE
    {
        return Err(GombocError::InvalidAngle { theta, phi });
    }
    Ok((theta.clamp(0.0, PI), reduce_phi(phi)))
}

pub(crate) fn reduce_phi(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub(crate) fn radial(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Orthonormal spherical frame `(r_hat, theta_hat, phi_hat)`.
pub(crate) fn frame(theta: f64, phi: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        Vector3::new(st * cp, st * sp, ct),
        Vector3::new(ct * cp, ct * sp, -st),
        Vector3::new(-sp, cp, 0.0),
    )
}

/// Spherical angles of a (not necessarily unit) direction.
pub(crate) fn angles_of(d: &Vector3<f64>) -> (f64, f64) {
    let rho = d.x.hypot(d.y);
    (rho.atan2(d.z), reduce_phi(d.y.atan2(d.x)))
}

/// A spherical chart rotated by a quarter turn about the x axis, so that the
/// poles of the main chart sit on its equator at `phi' = pi/2` (north) and
/// `phi' = 3pi/2` (south).
#[derive(Clone, Copy, Debug, Default)]
pub struct RotatedChart;

impl RotatedChart {
    pub const NORTH: (f64, f64) = (FRAC_PI_2, FRAC_PI_2);
    pub const SOUTH: (f64, f64) = (FRAC_PI_2, 3.0 * FRAC_PI_2);

    pub fn direction(theta_r: f64, phi_r: f64) -> Vector3<f64> {
        let d = radial(theta_r, phi_r);
        Vector3::new(d.x, -d.z, d.y)
    }

    /// Main-chart angles of a rotated-chart point.
    pub fn to_main(theta_r: f64, phi_r: f64) -> (f64, f64) {
        angles_of(&Self::direction(theta_r, phi_r))
    }
}
