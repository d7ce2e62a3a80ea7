//! Principal curvatures of the embedding `(theta, phi) -> F(theta, phi) r_hat`
//! and a grid certificate of convexity.
//!
//! Curvatures use the outward normal, so the unit sphere has `kappa = +1`.
//! A shape counts as convex when the smallest principal curvature is strictly
//! positive at every sample.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GombocError, Result};
use crate::surface::{PhaseFunction, RotatedChart, ShapeSpec, BETA_LIMIT};

/// Half-width of the polar band excluded from the main chart.
pub const POLE_EXCLUSION: f64 = 1e-6;
pub const MIN_SCAN_THETA: usize = 128;
pub const MIN_SCAN_PHI: usize = 256;
pub const DEFAULT_SCAN_THETA: usize = 256;
pub const DEFAULT_SCAN_PHI: usize = 512;
/// Nodes per side of each rotated-chart pole cap. Even, so the pole itself is never a node.
pub const CAP_NODES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub theta: f64,
    pub phi: f64,
    /// Smaller principal curvature.
    pub kappa1: f64,
    pub kappa2: f64,
    pub gaussian: f64,
    pub mean: f64,
}

/// Principal curvatures from the first and second fundamental forms.
pub fn curvature_at(shape: &ShapeSpec, theta: f64, phi: f64) -> Result<CurvatureSample> {
    if !(theta > POLE_EXCLUSION && theta < PI - POLE_EXCLUSION) || !phi.is_finite() {
        return Err(GombocError::InvalidAngle { theta, phi });
    }
    Ok(sample(shape, theta, phi))
}

/// Everything is expressed in the orthonormal frame `(r_hat, theta_hat, phi_hat)`.
fn sample(shape: &ShapeSpec, theta: f64, phi: f64) -> CurvatureSample {
    let j = shape.jet(theta, phi);
    let (s, c) = theta.sin_cos();
    let (f, ft, fp) = (j.f, j.df_dtheta, j.df_dphi);

    let x_t = [ft, f, 0.0];
    let x_p = [fp, 0.0, f * s];
    let x_tt = [j.d2f_dtheta2 - f, 2.0 * ft, 0.0];
    let x_tp = [j.d2f_dthetadphi, fp, ft * s + f * c];
    let x_pp = [j.d2f_dphi2 - f * s * s, -f * s * c, 2.0 * fp * s];

    // x_t × x_p = F sin(theta) (F, -F_theta, -F_phi / sin(theta))
    let n = [f, -ft, -j.df_dphi_over_sin];
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let n = n.map(|v| v / norm);
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

    let (e, ff, g) = (dot(&x_t, &x_t), dot(&x_t, &x_p), dot(&x_p, &x_p));
    // sign flipped so that curving toward the interior is positive
    let (l, m, nn) = (-dot(&x_tt, &n), -dot(&x_tp, &n), -dot(&x_pp, &n));

    let det = e * g - ff * ff;
    let gaussian = (l * nn - m * m) / det;
    let mean = (e * nn - 2.0 * ff * m + g * l) / (2.0 * det);
    let disc = (mean * mean - gaussian).max(0.0).sqrt();
    CurvatureSample {
        theta,
        phi,
        kappa1: mean - disc,
        kappa2: mean + disc,
        gaussian,
        mean,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    Main,
    NorthCap,
    SouthCap,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridMinimum {
    pub theta: f64,
    pub phi: f64,
    pub chart: Chart,
    pub kappa1: f64,
    pub kappa2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub n_theta: usize,
    pub n_phi: usize,
    pub cap_nodes: usize,
    pub samples: usize,
    pub min_kappa1: f64,
    pub argmin: GridMinimum,
    pub min_mean: f64,
    /// Mean curvature positive everywhere; necessary for convexity.
    pub mean_positive: bool,
    pub is_convex: bool,
}

/// Nodes of the main chart (`theta = i pi / n_theta`, `0 < i < n_theta`) and of
/// the two rotated-chart caps, all in main-chart angles.
fn scan_nodes(n_theta: usize, n_phi: usize) -> Vec<(f64, f64, Chart)> {
    let dt = PI / n_theta as f64;
    let dp = TAU / n_phi as f64;
    let mut nodes = Vec::with_capacity((n_theta - 1) * n_phi + 2 * CAP_NODES * CAP_NODES);
    for i in 1..n_theta {
        for j in 0..n_phi {
            nodes.push((i as f64 * dt, j as f64 * dp, Chart::Main));
        }
    }
    // caps reach three main-chart rows past the pole
    let half = 3.0 * dt;
    let h = 2.0 * half / CAP_NODES as f64;
    for ((tc, pc), chart) in [
        (RotatedChart::NORTH, Chart::NorthCap),
        (RotatedChart::SOUTH, Chart::SouthCap),
    ] {
        for a in 0..CAP_NODES {
            for b in 0..CAP_NODES {
                let tr = tc - half + (a as f64 + 0.5) * h;
                let pr = pc - half + (b as f64 + 0.5) * h;
                let (t, p) = RotatedChart::to_main(tr, pr);
                nodes.push((t, p, chart));
            }
        }
    }
    nodes
}

pub fn convexity_scan(shape: &ShapeSpec, n_theta: usize, n_phi: usize) -> Result<CurvatureReport> {
    if n_theta < MIN_SCAN_THETA || n_phi < MIN_SCAN_PHI {
        return Err(GombocError::InvalidGrid(format!(
            "convexity scan needs at least {MIN_SCAN_THETA}x{MIN_SCAN_PHI}, got {n_theta}x{n_phi}"
        )));
    }
    let nodes = scan_nodes(n_theta, n_phi);
    let chunks: Vec<(usize, f64, f64)> = nodes
        .par_chunks(n_phi)
        .enumerate()
        .map(|(k, chunk)| {
            let mut best = (usize::MAX, f64::INFINITY, f64::INFINITY);
            for (offset, &(t, p, _)) in chunk.iter().enumerate() {
                let cs = sample(shape, t, p);
                if cs.kappa1 < best.1 {
                    best.0 = k * n_phi + offset;
                    best.1 = cs.kappa1;
                }
                best.2 = best.2.min(cs.mean);
            }
            best
        })
        .collect();

    let (mut idx, mut min_k, mut min_mean) = (0, f64::INFINITY, f64::INFINITY);
    for (i, k, m) in chunks {
        if k < min_k {
            idx = i;
            min_k = k;
        }
        min_mean = min_mean.min(m);
    }
    let (t, p, chart) = nodes[idx];
    let at_min = sample(shape, t, p);
    let mean_positive = min_mean > 0.0;
    Ok(CurvatureReport {
        n_theta,
        n_phi,
        cap_nodes: CAP_NODES,
        samples: nodes.len(),
        min_kappa1: min_k,
        argmin: GridMinimum {
            theta: t,
            phi: p,
            chart,
            kappa1: at_min.kappa1,
            kappa2: at_min.kappa2,
        },
        min_mean,
        mean_positive,
        is_convex: mean_positive && min_k > 0.0,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BetaSearchOptions {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for BetaSearchOptions {
    fn default() -> Self {
        Self {
            lo: 0.005,
            hi: 0.249,
            tol: 1e-4,
            n_theta: DEFAULT_SCAN_THETA,
            n_phi: DEFAULT_SCAN_PHI,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BetaProbe {
    pub beta: f64,
    pub min_kappa1: f64,
    pub is_convex: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BracketCheck {
    pub n_theta: usize,
    pub n_phi: usize,
    pub lo: BetaProbe,
    pub hi: BetaProbe,
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaSearchResult {
    pub beta_max: f64,
    pub bracket: [f64; 2],
    pub bracket_width: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub trace: Vec<BetaProbe>,
    /// Every convex probe lies below every non-convex probe.
    pub monotone: bool,
    /// Bracket endpoints re-evaluated at doubled resolution.
    pub verification: BracketCheck,
    pub verified: bool,
}

fn probe(phase: &PhaseFunction, beta: f64, n_theta: usize, n_phi: usize) -> Result<BetaProbe> {
    let shape = ShapeSpec::new(beta, phase.clone())?;
    let r = convexity_scan(&shape, n_theta, n_phi)?;
    Ok(BetaProbe {
        beta,
        min_kappa1: r.min_kappa1,
        is_convex: r.is_convex,
    })
}

fn is_monotone(trace: &[BetaProbe]) -> bool {
    let max_convex = trace
        .iter()
        .filter(|p| p.is_convex)
        .map(|p| p.beta)
        .fold(f64::NEG_INFINITY, f64::max);
    trace.iter().filter(|p| !p.is_convex).all(|p| p.beta > max_convex)
}

/// Largest convex amplitude for a phase law, with the default bracket and grid.
pub fn beta_max(phase: &PhaseFunction, tol: f64) -> Result<BetaSearchResult> {
    beta_max_with(
        phase,
        BetaSearchOptions {
            tol,
            ..Default::default()
        },
    )
}

/// Bisection on the convexity verdict at a fixed grid.
///
/// If the trace is not monotone in `beta`, or the final bracket does not hold
/// at doubled resolution, the whole search is repeated on a doubled grid (at
/// most twice).
pub fn beta_max_with(phase: &PhaseFunction, opts: BetaSearchOptions) -> Result<BetaSearchResult> {
    if !(opts.tol >= 1e-6) {
        return Err(GombocError::InvalidArgument(format!(
            "beta tolerance must be at least 1e-6, got {}",
            opts.tol
        )));
    }
    if !(opts.lo > 0.0 && opts.lo < opts.hi && opts.hi < BETA_LIMIT) {
        return Err(GombocError::InvalidArgument(format!(
            "bracket must satisfy 0 < lo < hi < {BETA_LIMIT}, got [{}, {}]",
            opts.lo, opts.hi
        )));
    }

    let (mut nt, mut np) = (opts.n_theta, opts.n_phi);
    let mut result = None;
    for _ in 0..3 {
        let lo_probe = probe(phase, opts.lo, nt, np)?;
        let hi_probe = probe(phase, opts.hi, nt, np)?;
        if !lo_probe.is_convex || hi_probe.is_convex {
            return Err(GombocError::BadBracket {
                lo: opts.lo,
                hi: opts.hi,
                lo_convex: lo_probe.is_convex,
                hi_convex: hi_probe.is_convex,
            });
        }
        let mut trace = vec![lo_probe, hi_probe];
        let (mut lo, mut hi) = (opts.lo, opts.hi);
        while hi - lo >= opts.tol {
            let mid = 0.5 * (lo + hi);
            let p = probe(phase, mid, nt, np)?;
            trace.push(p);
            if p.is_convex {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let monotone = is_monotone(&trace);
        let verification = BracketCheck {
            n_theta: 2 * nt,
            n_phi: 2 * np,
            lo: probe(phase, lo, 2 * nt, 2 * np)?,
            hi: probe(phase, hi, 2 * nt, 2 * np)?,
        };
        let verified = verification.lo.is_convex && !verification.hi.is_convex;
        let done = monotone && verified;
        result = Some(BetaSearchResult {
            beta_max: 0.5 * (lo + hi),
            bracket: [lo, hi],
            bracket_width: hi - lo,
            n_theta: nt,
            n_phi: np,
            trace,
            monotone,
            verification,
            verified,
        });
        if done {
            break;
        }
        nt *= 2;
        np *= 2;
    }
    Ok(result.expect("at least one search pass runs"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Preset;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn sphere_has_unit_curvature() {
        let sphere = Preset::G1.shape(1e-12).unwrap();
        for (t, p) in [(0.3, 0.1), (FRAC_PI_2, 2.0), (3.0, 5.5), (1e-5, 1.0)] {
            let c = curvature_at(&sphere, t, p).unwrap();
            assert!((c.kappa1 - 1.0).abs() < 1e-6 && (c.kappa2 - 1.0).abs() < 1e-6, "{c:?}");
        }
        let r = convexity_scan(&sphere, 128, 256).unwrap();
        assert!((r.min_kappa1 - 1.0).abs() < 1e-6);
        assert!(r.is_convex);
    }

    #[test]
    fn pole_band_rejected() {
        let s = Preset::G1.shape(0.1).unwrap();
        assert!(curvature_at(&s, 1e-7, 0.0).is_err());
        assert!(curvature_at(&s, PI - 1e-7, 0.0).is_err());
        assert!(curvature_at(&s, 2e-6, 0.0).is_ok());
    }

    #[test]
    fn ordering_and_invariants() {
        let s = Preset::G2.shape(0.03).unwrap();
        for k in 1..50 {
            let t = PI * k as f64 / 50.0;
            let c = curvature_at(&s, t, 0.37 * k as f64).unwrap();
            assert!(c.kappa1 <= c.kappa2);
            assert!((c.gaussian - c.kappa1 * c.kappa2).abs() < 1e-10 * c.gaussian.abs().max(1.0));
            assert!((c.mean - 0.5 * (c.kappa1 + c.kappa2)).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_perturbation_is_not_convex() {
        let g1 = Preset::G1.shape(0.24).unwrap();
        assert!(!convexity_scan(&g1, 256, 512).unwrap().is_convex);
    }

    #[test]
    fn stable_point_of_g1_is_a_groove_at_quoted_beta() {
        // At beta = 0.15 the wave across the equator has curvature ~26 beta,
        // far beyond the unit-sphere background.
        let g1 = Preset::G1.shape(0.15).unwrap();
        let c = curvature_at(&g1, FRAC_PI_2, 1.5 * PI).unwrap();
        assert!(c.kappa1 < -5.0, "{c:?}");
        assert!(c.kappa2 > 0.0);
    }

    #[test]
    fn small_amplitude_presets_are_convex() {
        for p in [Preset::G1, Preset::G2] {
            let r = convexity_scan(&p.shape(0.03).unwrap(), 256, 512).unwrap();
            assert!(r.is_convex, "{p:?} {r:?}");
        }
    }

    #[test]
    fn bracket_errors() {
        let phase = Preset::G1.phase();
        let opts = |lo, hi| BetaSearchOptions {
            lo,
            hi,
            tol: 1e-3,
            ..Default::default()
        };
        assert!(matches!(
            beta_max_with(&phase, opts(0.2, 0.21)),
            Err(GombocError::BadBracket { .. })
        ));
        assert!(matches!(
            beta_max_with(&phase, opts(0.01, 0.02)),
            Err(GombocError::BadBracket { lo_convex: true, hi_convex: true, .. })
        ));
        assert!(beta_max_with(&phase, opts(0.1, 0.05)).is_err());
        assert!(beta_max(&phase, 1e-7).is_err());
    }

    #[test]
    fn bisection_trace_is_monotone() {
        let r = beta_max_with(
            &Preset::G2.phase(),
            BetaSearchOptions {
                tol: 1e-3,
                n_theta: 128,
                n_phi: 256,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.monotone);
        assert!(r.bracket_width < 1e-3);
        assert!(r.trace.iter().filter(|p| p.is_convex).all(|p| p.beta <= r.bracket[0]));
        assert!(r.trace.iter().filter(|p| !p.is_convex).all(|p| p.beta >= r.bracket[1]));
    }
}
