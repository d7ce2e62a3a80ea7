//! Equilibria of the body resting on a plane: critical points of the radius
//! `F(theta, phi)` measured from the center of mass.
//!
//! All root finding works on `F^4`, which has the same critical set as `F`
//! and polynomial dependence on the trigonometric factors. Scanning uses
//! `G = (dF^4/dtheta, dF^4/dphi)` without the `1/sin(theta)` factor; reported
//! residuals put it back.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GombocError, Result};
use crate::surface::{radial, reduce_phi, RotatedChart, ShapeSpec};

/// Below this amplitude the shape is treated as a sphere.
pub const DEGENERATE_BETA: f64 = 1e-9;
pub const MIN_SCAN_THETA: usize = 64;
pub const MIN_SCAN_PHI: usize = 128;
pub const DEFAULT_SCAN_THETA: usize = 128;
pub const DEFAULT_SCAN_PHI: usize = 256;
/// Newton stops once `|G|` drops below this.
pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Equilibria closer than this (surface arc length) are merged.
pub const DEDUP_ARC_LENGTH: f64 = 1e-6;

const POLE_CAP_HALF_WIDTH: f64 = 0.2;
const POLE_CAP_NODES: usize = 41;
const THETA_GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    /// Local minimum of the distance to the center of mass.
    Stable,
    /// Local maximum.
    Unstable,
    Saddle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    SignChange,
    LocalMinimum,
    PoleCap,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Candidate {
    pub theta: f64,
    pub phi: f64,
    pub source: CandidateSource,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EquilibriumPoint {
    pub theta: f64,
    pub phi: f64,
    pub kind: EquilibriumKind,
    /// `|(dF^4/dtheta, dF^4/dphi / sin(theta))|` at the refined point.
    pub grad_norm: f64,
    /// Eigenvalues of the Hessian of `F^4` in the orthonormal tangent frame, ascending.
    pub hessian_eigs: [f64; 2],
    /// Unscaled radius `F` at the point.
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EquilibriumCounts {
    pub stable: usize,
    pub unstable: usize,
    pub saddle: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RejectedCandidate {
    pub theta: f64,
    pub phi: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumReport {
    /// Sorted by theta, then phi.
    pub points: Vec<EquilibriumPoint>,
    pub counts: EquilibriumCounts,
    /// `#stable + #unstable - #saddle`; 2 on any closed convex surface.
    pub index_sum: i64,
    pub is_mono_monostatic: bool,
    pub scan: [usize; 2],
    pub rejected: Vec<RejectedCandidate>,
}

impl EquilibriumReport {
    pub fn stable(&self) -> impl Iterator<Item = &EquilibriumPoint> {
        self.points.iter().filter(|p| p.kind == EquilibriumKind::Stable)
    }

    pub fn unstable(&self) -> impl Iterator<Item = &EquilibriumPoint> {
        self.points.iter().filter(|p| p.kind == EquilibriumKind::Unstable)
    }
}

fn check_degenerate(shape: &ShapeSpec) -> Result<()> {
    if shape.beta() < DEGENERATE_BETA {
        return Err(GombocError::Degenerate {
            beta: shape.beta(),
            threshold: DEGENERATE_BETA,
        });
    }
    Ok(())
}

/// Locates neighborhoods of critical points on a dense `(theta, phi)` grid.
///
/// A cell is flagged when the bilinear interpolants of both components of `G`
/// vanish at a common point inside it; connected flagged cells form one
/// candidate. Interior nodes where the tangential gradient has a grid-local
/// minimum are added when a Newton step from the node stays within half a
/// cell diagonal, which catches tangential zeros without a clean sign change.
pub fn critical_point_scan(shape: &ShapeSpec, n_theta: usize, n_phi: usize) -> Result<Vec<Candidate>> {
    check_degenerate(shape)?;
    if n_theta < MIN_SCAN_THETA || n_phi < MIN_SCAN_PHI {
        return Err(GombocError::InvalidGrid(format!(
            "equilibrium scan needs at least {MIN_SCAN_THETA}x{MIN_SCAN_PHI}, got {n_theta}x{n_phi}"
        )));
    }
    let dt = PI / n_theta as f64;
    let dp = TAU / n_phi as f64;
    let theta_at = |i: usize| (i as f64 + 0.5) * dt;
    let phi_at = |j: usize| j as f64 * dp;

    // (dF^4/dtheta, dF^4/dphi, tangential norm) per node, row-major
    let values: Vec<[f64; 3]> = (0..n_theta)
        .into_par_iter()
        .flat_map_iter(|i| {
            let theta = theta_at(i);
            (0..n_phi).map(move |j| {
                let q = shape.quartic(theta, phi_at(j));
                [q.q_t, q.q_p, q.tangential_norm()]
            })
        })
        .collect();
    let at = |i: usize, j: usize| values[i * n_phi + j % n_phi];

    let corners = |i: usize, j: usize| [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];

    let flagged: HashSet<(usize, usize)> = (0..n_theta - 1)
        .flat_map(|i| (0..n_phi).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let c = corners(i, j);
            bilinear_common_zero(c.map(|v| v[0]), c.map(|v| v[1]))
        })
        .collect();

    let mut candidates = Vec::new();
    let mut seen = HashSet::new();
    let mut ordered: Vec<_> = flagged.iter().copied().collect();
    ordered.sort_unstable();
    for start in ordered {
        if !seen.insert(start) {
            continue;
        }
        let mut best = start;
        let mut best_score = f64::INFINITY;
        let mut queue = VecDeque::from([start]);
        while let Some((i, j)) = queue.pop_front() {
            let score: f64 = corners(i, j).iter().map(|v| v[2]).sum();
            if score < best_score {
                best_score = score;
                best = (i, j);
            }
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let ni = i as i64 + di;
                    if ni < 0 || ni >= n_theta as i64 - 1 {
                        continue;
                    }
                    let nj = (j as i64 + dj).rem_euclid(n_phi as i64) as usize;
                    let next = (ni as usize, nj);
                    if flagged.contains(&next) && seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
        }
        candidates.push(Candidate {
            theta: theta_at(best.0) + 0.5 * dt,
            phi: reduce_phi(phi_at(best.1) + 0.5 * dp),
            source: CandidateSource::SignChange,
        });
    }

    // Grid-local minima of the tangential gradient whose linearization puts
    // a root within the surrounding cell.
    let reach = 0.5 * dt.hypot(dp);
    let near_flagged = |i: usize, j: usize| {
        (i.saturating_sub(2)..=(i + 1).min(n_theta - 2)).any(|ci| {
            (0..4).any(|k| flagged.contains(&(ci, (j + n_phi + k - 2) % n_phi)))
        })
    };
    for i in 1..n_theta - 1 {
        for j in 0..n_phi {
            let v = at(i, j)[2];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let ni = (i as i64 + di) as usize;
                    let nj = (j as i64 + dj).rem_euclid(n_phi as i64) as usize;
                    v <= at(ni, nj)[2]
                })
            });
            if !is_min || near_flagged(i, j) {
                continue;
            }
            let (theta, phi) = (theta_at(i), phi_at(j));
            match newton_step(shape, theta, phi) {
                Some((st, sp)) if st.hypot(sp) <= reach => candidates.push(Candidate {
                    theta,
                    phi,
                    source: CandidateSource::LocalMinimum,
                }),
                _ => {}
            }
        }
    }

    candidates.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.phi.total_cmp(&b.phi)));
    Ok(candidates)
}

/// Whether the bilinear interpolants of two fields over a unit cell share a
/// zero. Corner order: `(0,0), (1,0), (0,1), (1,1)`.
fn bilinear_common_zero(f: [f64; 4], g: [f64; 4]) -> bool {
    let coeffs = |v: [f64; 4]| [v[0], v[1] - v[0], v[2] - v[0], v[0] - v[1] - v[2] + v[3]];
    let [a0, a1, a2, a3] = coeffs(f);
    let [b0, b1, b2, b3] = coeffs(g);
    // eliminate s from a0 + a1 s + a2 t + a3 s t = 0 and the same for b
    let qa = a2 * b3 - b2 * a3;
    let qb = a0 * b3 + a2 * b1 - b0 * a3 - b2 * a1;
    let qc = a0 * b1 - b0 * a1;
    let scale = [qa, qb, qc].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        // both fields proportional across the cell; fall back to sign changes
        let straddles = |v: [f64; 4]| {
            v.iter().any(|&x| x <= 0.0) && v.iter().any(|&x| x >= 0.0)
        };
        return straddles(f) && straddles(g);
    }
    let eps = 1e-9;
    let inside = |x: f64| (-eps..=1.0 + eps).contains(&x);
    let mut roots = Vec::with_capacity(2);
    if qa.abs() <= 1e-14 * scale {
        if qb.abs() > 1e-14 * scale {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let r = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * r);
            roots.push(q / qa);
            if q != 0.0 {
                roots.push(qc / q);
            }
        }
    }
    roots.into_iter().filter(|&t| inside(t)).any(|t| {
        let (da, db) = (a1 + a3 * t, b1 + b3 * t);
        let s = if da.abs() >= db.abs() {
            if da == 0.0 {
                return false;
            }
            -(a0 + a2 * t) / da
        } else {
            -(b0 + b2 * t) / db
        };
        inside(s)
    })
}

/// Full Newton step on `G = 0` from `(theta, phi)`, if the Hessian is invertible.
fn newton_step(shape: &ShapeSpec, theta: f64, phi: f64) -> Option<(f64, f64)> {
    let q = shape.quartic(theta, phi);
    let det = q.q_tt * q.q_pp - q.q_tp * q.q_tp;
    if det.abs() <= 1e-300 {
        return None;
    }
    Some((
        -(q.q_pp * q.q_t - q.q_tp * q.q_p) / det,
        -(q.q_tt * q.q_p - q.q_tp * q.q_t) / det,
    ))
}

fn symmetric_eigs(a: f64, b: f64, c: f64) -> [f64; 2] {
    let m = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    [m - r, m + r]
}

fn classify(eigs: [f64; 2]) -> EquilibriumKind {
    if eigs[0] > 0.0 {
        EquilibriumKind::Stable
    } else if eigs[1] < 0.0 {
        EquilibriumKind::Unstable
    } else {
        EquilibriumKind::Saddle
    }
}

/// Damped Newton on `G = 0` with the exact Hessian of `F^4`.
pub fn refine(shape: &ShapeSpec, candidate: &Candidate) -> Result<EquilibriumPoint> {
    let (mut theta, mut phi) = (candidate.theta.clamp(THETA_GUARD, PI - THETA_GUARD), candidate.phi);
    let residual = |t: f64, p: f64| {
        let q = shape.quartic(t, p);
        q.q_t.hypot(q.q_p)
    };
    let mut g = residual(theta, phi);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if g < NEWTON_TOLERANCE {
            return Ok(point_at(shape, theta, phi));
        }
        let (step_t, step_p) = newton_step(shape, theta, phi).unwrap_or_else(|| {
            let q = shape.quartic(theta, phi);
            (-q.q_t, -q.q_p)
        });
        let mut lambda = 1.0;
        loop {
            let t = (theta + lambda * step_t).clamp(THETA_GUARD, PI - THETA_GUARD);
            let p = phi + lambda * step_p;
            let trial = residual(t, p);
            if trial < g || lambda < 1e-6 {
                theta = t;
                phi = p;
                g = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    if g < NEWTON_TOLERANCE {
        return Ok(point_at(shape, theta, phi));
    }
    Err(GombocError::NoConvergence {
        theta: candidate.theta,
        phi: candidate.phi,
        iterations: MAX_NEWTON_ITERATIONS,
        residual: g,
    })
}

fn point_at(shape: &ShapeSpec, theta: f64, phi: f64) -> EquilibriumPoint {
    let phi = reduce_phi(phi);
    let q = shape.quartic(theta, phi);
    let s = theta.sin();
    let eigs = symmetric_eigs(q.q_tt, q.q_tp / s, q.q_pp / (s * s));
    EquilibriumPoint {
        theta,
        phi,
        kind: classify(eigs),
        grad_norm: q.tangential_norm(),
        hessian_eigs: eigs,
        radius: q.q.sqrt().sqrt(),
    }
}

/// Looks for equilibria in the pole caps, where the main chart is singular.
///
/// Each cap is sampled in the rotated chart, with the pole itself as the
/// center node. The tangential gradient of `F^4` has a finite limit at the
/// pole, so the pole is tested directly; other near-pole minima are refined
/// with Newton in the main chart.
pub fn pole_check(shape: &ShapeSpec) -> Result<Vec<EquilibriumPoint>> {
    check_degenerate(shape)?;
    let n = POLE_CAP_NODES;
    let h = 2.0 * POLE_CAP_HALF_WIDTH / (n - 1) as f64;
    let mut found = Vec::new();

    for (tc, pc) in [RotatedChart::NORTH, RotatedChart::SOUTH] {
        let node = |a: usize, b: usize| {
            RotatedChart::to_main(
                tc - POLE_CAP_HALF_WIDTH + a as f64 * h,
                pc - POLE_CAP_HALF_WIDTH + b as f64 * h,
            )
        };
        let norms: Vec<f64> = (0..n * n)
            .map(|k| {
                let (t, p) = node(k / n, k % n);
                shape.quartic(t, p).tangential_norm()
            })
            .collect();
        let at = |a: usize, b: usize| norms[a * n + b];

        let mut lip = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a + 1 < n {
                    lip = lip.max((at(a + 1, b) - at(a, b)).abs() / h);
                }
                if b + 1 < n {
                    lip = lip.max((at(a, b + 1) - at(a, b)).abs() / h);
                }
            }
        }
        let threshold = lip * h;

        for a in 1..n - 1 {
            for b in 1..n - 1 {
                let v = at(a, b);
                let is_min = (a - 1..=a + 1).all(|x| (b - 1..=b + 1).all(|y| v <= at(x, y)));
                if !is_min || v >= threshold {
                    continue;
                }
                let (t, p) = node(a, b);
                let center = a == n / 2 && b == n / 2;
                if center && v < 1e-10 {
                    found.push(pole_point(shape, tc, pc));
                } else if let Ok(pt) = refine(
                    shape,
                    &Candidate {
                        theta: t,
                        phi: p,
                        source: CandidateSource::PoleCap,
                    },
                ) {
                    found.push(pt);
                }
            }
        }
    }
    Ok(found)
}

/// An equilibrium sitting exactly on a pole, classified by a finite-difference
/// Hessian in the rotated chart (orthonormal at its equator).
fn pole_point(shape: &ShapeSpec, tc: f64, pc: f64) -> EquilibriumPoint {
    let q = |dt: f64, dp: f64| {
        let (t, p) = RotatedChart::to_main(tc + dt, pc + dp);
        shape.quartic(t, p).q
    };
    let h = 1e-4;
    let q0 = q(0.0, 0.0);
    let a = (q(h, 0.0) - 2.0 * q0 + q(-h, 0.0)) / (h * h);
    let c = (q(0.0, h) - 2.0 * q0 + q(0.0, -h)) / (h * h);
    let b = (q(h, h) - q(h, -h) - q(-h, h) + q(-h, -h)) / (4.0 * h * h);
    let eigs = symmetric_eigs(a, b, c);
    let (theta, _) = RotatedChart::to_main(tc, pc);
    let jet = shape.quartic(theta, 0.0);
    EquilibriumPoint {
        theta,
        phi: 0.0,
        kind: classify(eigs),
        grad_norm: jet.tangential_norm(),
        hessian_eigs: eigs,
        radius: q0.sqrt().sqrt(),
    }
}

fn arc_distance(a: &EquilibriumPoint, b: &EquilibriumPoint) -> f64 {
    let (u, v) = (radial(a.theta, a.phi), radial(b.theta, b.phi));
    let angle = u.cross(&v).norm().atan2(u.dot(&v));
    angle * 0.5 * (a.radius + b.radius)
}

fn sort_points(points: &mut [EquilibriumPoint]) {
    points.sort_by(|a, b| {
        if (a.theta - b.theta).abs() > 1e-9 {
            a.theta.total_cmp(&b.theta)
        } else {
            a.phi.total_cmp(&b.phi)
        }
    });
}

/// Full equilibrium census at the default scan resolution.
pub fn census(shape: &ShapeSpec) -> Result<EquilibriumReport> {
    census_with(shape, DEFAULT_SCAN_THETA, DEFAULT_SCAN_PHI)
}

/// Scan, refine, pole check and merge. If the index sum is not 2 the scan is
/// repeated once at doubled resolution before giving up.
pub fn census_with(shape: &ShapeSpec, n_theta: usize, n_phi: usize) -> Result<EquilibriumReport> {
    check_degenerate(shape)?;
    let mut last_index = 0;
    let mut last_scan = (n_theta, n_phi);
    for attempt in 0..2 {
        let (nt, np) = (n_theta << attempt, n_phi << attempt);
        last_scan = (nt, np);
        let candidates = critical_point_scan(shape, nt, np)?;
        let mut points = Vec::new();
        let mut rejected = Vec::new();
        for c in &candidates {
            match refine(shape, c) {
                Ok(p) => points.push(p),
                Err(e) => rejected.push(RejectedCandidate {
                    theta: c.theta,
                    phi: c.phi,
                    reason: e.to_string(),
                }),
            }
        }
        points.extend(pole_check(shape)?);

        let mut merged: Vec<EquilibriumPoint> = Vec::new();
        for p in points {
            match merged.iter_mut().find(|m| arc_distance(m, &p) < DEDUP_ARC_LENGTH) {
                Some(m) if p.grad_norm < m.grad_norm => *m = p,
                Some(_) => {}
                None => merged.push(p),
            }
        }
        sort_points(&mut merged);

        let mut counts = EquilibriumCounts::default();
        for p in &merged {
            match p.kind {
                EquilibriumKind::Stable => counts.stable += 1,
                EquilibriumKind::Unstable => counts.unstable += 1,
                EquilibriumKind::Saddle => counts.saddle += 1,
            }
        }
        let index_sum = counts.stable as i64 + counts.unstable as i64 - counts.saddle as i64;
        last_index = index_sum;
        if index_sum == 2 {
            return Ok(EquilibriumReport {
                is_mono_monostatic: counts
                    == EquilibriumCounts {
                        stable: 1,
                        unstable: 1,
                        saddle: 0,
                    },
                points: merged,
                counts,
                index_sum,
                scan: [nt, np],
                rejected,
            });
        }
    }
    Err(GombocError::IndexViolation {
        index_sum: last_index,
        n_theta: last_scan.0,
        n_phi: last_scan.1,
    })
}

/// Where the two equatorial equilibria of any perturbed-sphere shape sit:
/// `(stable, unstable)` at `phi = P(pi/2) + pi` and `phi = P(pi/2)`.
pub fn equatorial_equilibria(shape: &ShapeSpec) -> ((f64, f64), (f64, f64)) {
    let p = shape.phase().value(FRAC_PI_2);
    ((FRAC_PI_2, reduce_phi(p + PI)), (FRAC_PI_2, reduce_phi(p)))
}
