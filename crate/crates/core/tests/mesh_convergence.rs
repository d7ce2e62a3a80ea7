use std::f64::consts::PI;

use gomboc::mesh::tessellate;
use gomboc::moments::volume;
use gomboc::quadrature::SphericalGrid;
use gomboc::Preset;

fn mesh_errors(beta: f64, exact: f64) -> Vec<f64> {
    let s = Preset::G1.shape(beta).unwrap();
    [32, 64, 128, 256]
        .iter()
        .map(|&n| (tessellate(&s, n, 2 * n).unwrap().volume() - exact).abs())
        .collect()
}

#[test]
fn sphere_mesh_converges_at_second_order() {
    let e = mesh_errors(1e-12, 4.0 * PI / 3.0);
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }
}

#[test]
fn g1_mesh_converges_to_quadrature_volume() {
    let s = Preset::G1.shape(0.15).unwrap();
    let exact = volume(&s, &SphericalGrid::new(256, 512).unwrap());
    let e = mesh_errors(0.15, exact);
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }
    assert!(e[3] / exact < 5e-3);
}

#[test]
fn mesh_volume_under_inscribes() {
    // secant triangles of a nearly spherical body lie inside it
    let s = Preset::G2.shape(0.17).unwrap();
    let exact = volume(&s, &SphericalGrid::default());
    let m = tessellate(&s, 64, 128).unwrap();
    assert!(m.volume() < exact);
}
