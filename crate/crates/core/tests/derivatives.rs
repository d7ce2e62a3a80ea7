use std::f64::consts::{PI, TAU};

use gomboc::{Preset, ShapeSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;

const SAMPLES: usize = 1000;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

fn f(s: &ShapeSpec, t: f64, p: f64) -> f64 {
    s.radius_jet(t, p).unwrap().f
}

fn samples(seed: u64) -> Vec<(f64, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..SAMPLES)
        .map(|_| (rng.gen_range(0.01..PI - 0.01), rng.gen_range(0.0..TAU)))
        .collect()
}

#[test]
fn first_partials_match_central_differences() {
    let h = 1e-6;
    for (seed, preset) in [(1, Preset::G1), (2, Preset::G2)] {
        let s = preset.shape(preset.default_beta()).unwrap();
        let mut worst: f64 = 0.0;
        for (t, p) in samples(seed) {
            let j = s.radius_jet(t, p).unwrap();
            let ft = (f(&s, t + h, p) - f(&s, t - h, p)) / (2.0 * h);
            let fp = (f(&s, t, p + h) - f(&s, t, p - h)) / (2.0 * h);
            worst = worst.max(rel(j.df_dtheta, ft)).max(rel(j.df_dphi, fp));
            assert!((j.df_dphi_over_sin * t.sin() - j.df_dphi).abs() < 1e-14);
        }
        assert!(worst < 1e-6, "{preset:?} first partials worst {worst:e}");
    }
}

#[test]
fn second_partials_match_central_differences() {
    let h = 1e-4;
    for (seed, preset) in [(3, Preset::G1), (4, Preset::G2)] {
        let s = preset.shape(preset.default_beta()).unwrap();
        let mut worst: f64 = 0.0;
        for (t, p) in samples(seed) {
            let j = s.radius_jet(t, p).unwrap();
            let c = f(&s, t, p);
            let ftt = (f(&s, t + h, p) - 2.0 * c + f(&s, t - h, p)) / (h * h);
            let fpp = (f(&s, t, p + h) - 2.0 * c + f(&s, t, p - h)) / (h * h);
            let ftp = (f(&s, t + h, p + h) - f(&s, t + h, p - h) - f(&s, t - h, p + h)
                + f(&s, t - h, p - h))
                / (4.0 * h * h);
            worst = worst
                .max(rel(j.d2f_dtheta2, ftt))
                .max(rel(j.d2f_dphi2, fpp))
                .max(rel(j.d2f_dthetadphi, ftp));
        }
        assert!(worst < 1e-4, "{preset:?} second partials worst {worst:e}");
    }
}

fn preset_shape(g2: bool, beta: f64) -> ShapeSpec {
    let p = if g2 { Preset::G2 } else { Preset::G1 };
    p.shape(beta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn radius_stays_in_range(g2 in any::<bool>(), beta in 1e-6f64..0.249, t in 0.0f64..PI, p in 0.0f64..TAU) {
        let f = preset_shape(g2, beta).radius_jet(t, p).unwrap().f;
        prop_assert!(f >= (1.0 - 4.0 * beta).powf(0.25) - 1e-14);
        prop_assert!(f <= (1.0 + 4.0 * beta).powf(0.25) + 1e-14);
    }

    #[test]
    fn periodic_in_phi(g2 in any::<bool>(), beta in 1e-6f64..0.249, t in 0.0f64..PI, p in 0.0f64..TAU) {
        let s = preset_shape(g2, beta);
        let a = s.radius_jet(t, p).unwrap();
        let b = s.radius_jet(t, p + TAU).unwrap();
        prop_assert!((a.f - b.f).abs() < 1e-13);
        prop_assert!((a.df_dtheta - b.df_dtheta).abs() < 1e-12);
    }

    #[test]
    fn fourth_power_matches_definition(g2 in any::<bool>(), beta in 1e-6f64..0.249, t in 0.0f64..PI, p in 0.0f64..TAU) {
        let s = preset_shape(g2, beta);
        let f = s.radius_jet(t, p).unwrap().f;
        let q = 1.0 + 4.0 * beta * t.sin() * (p - s.phase().value(t)).cos();
        prop_assert!((f.powi(4) - q).abs() < 1e-14);
    }
}
