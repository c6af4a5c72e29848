//! Closed-form sphere incidence against a numeric ray march.

use lumispec_core::geometry::sphere_miss_boundary_deg;
use lumispec_core::{
    incidence_flat, incidence_sphere, solve_incidence, PivotGeometry, SurfaceModel,
};

/// Numeric oracle: golden-section minimum of |p(t) - c|² - R² along the ray,
/// bisection for the first root, then the angle between the reversed ray and
/// the outward normal via atan2. Returns (aoi, path) or None on a miss.
fn ray_march(theta_deg: f64, wd: f64, radius: f64) -> Option<(f64, f64)> {
    let th = theta_deg.to_radians();
    let u = [th.sin(), th.cos()];
    let c = [0.0, wd + radius];
    let f = |t: f64| {
        let dx = t * u[0] - c[0];
        let dy = t * u[1] - c[1];
        dx * dx + dy * dy - radius * radius
    };
    let (mut a, mut b) = (0.0, 2.0 * (wd + radius));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let t_min = 0.5 * (a + b);
    if f(t_min) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, t_min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let p = [t * u[0], t * u[1]];
    let n = [(p[0] - c[0]) / radius, (p[1] - c[1]) / radius];
    let back = [-u[0], -u[1]];
    let cross = back[0] * n[1] - back[1] * n[0];
    let dot = back[0] * n[0] + back[1] * n[1];
    Some((cross.abs().atan2(dot), t))
}

#[test]
fn oracle_reference_points() {
    let (aoi, path) = ray_march(0.0, 17.0, 25.0).unwrap();
    assert!(aoi.abs() < 1e-12);
    assert!((path - 17.0).abs() < 1e-9);
    let (aoi, _) = ray_march(10.0, 17.0, 25.0).unwrap();
    assert!((aoi.to_degrees() - 16.961_493).abs() < 1e-5);
    assert!(ray_march(40.0, 17.0, 25.0).is_none());
}

#[test]
fn closed_form_matches_oracle_across_sweep() {
    let g = PivotGeometry::default();
    let r = 25.0;
    let edge = sphere_miss_boundary_deg(r, g.working_distance_mm);
    for i in 0..1000 {
        let theta = -0.99 * edge + 1.98 * edge * i as f64 / 999.0;
        let s = incidence_sphere(theta, &g, r).unwrap();
        let (aoi, path) = ray_march(theta, g.working_distance_mm, r).unwrap();
        assert!((s.aoi_rad - aoi).abs() <= 1e-9, "theta {theta}");
        assert!((s.path_mm - path).abs() <= 1e-7, "theta {theta}");
    }
}

#[test]
fn miss_boundary_agrees() {
    let g = PivotGeometry::default();
    let edge = sphere_miss_boundary_deg(25.0, 17.0);
    for theta in [edge - 1e-6, -(edge - 1e-6)] {
        assert!(incidence_sphere(theta, &g, 25.0).is_ok());
        assert!(ray_march(theta, 17.0, 25.0).is_some());
    }
    for theta in [edge + 1e-6, 60.0, -(edge + 1e-6)] {
        assert!(incidence_sphere(theta, &g, 25.0).is_err());
        assert!(ray_march(theta, 17.0, 25.0).is_none());
    }
}

#[test]
fn convex_incidence_exceeds_flat() {
    let g = PivotGeometry::default();
    let edge = sphere_miss_boundary_deg(25.0, 17.0);
    let mut prev = 0.0;
    for i in 1..500 {
        let theta = edge * i as f64 / 500.0;
        let flat = incidence_flat(theta, &g).unwrap().aoi_rad;
        let sphere = incidence_sphere(theta, &g, 25.0).unwrap().aoi_rad;
        assert!(sphere > flat);
        assert!(sphere > prev);
        assert!(flat > 0.0);
        prev = sphere;
    }
}

#[test]
fn symmetric_in_motor_angle() {
    let g = PivotGeometry::default();
    for surface in [SurfaceModel::Flat, SurfaceModel::sphere(25.0, &g)] {
        for i in 0..360 {
            let theta = i as f64 * 0.1;
            let a = solve_incidence(theta, &g, &surface).unwrap();
            let b = solve_incidence(-theta, &g, &surface).unwrap();
            assert_eq!(a.aoi_rad, b.aoi_rad);
        }
    }
}

#[test]
fn sphere_converges_to_flat() {
    let g = PivotGeometry::default();
    let flat = incidence_flat(15.0, &g).unwrap().aoi_rad;
    let errors: Vec<f64> = [1e3, 1e4, 1e6]
        .iter()
        .map(|&r| {
            (solve_incidence(15.0, &g, &SurfaceModel::sphere(r, &g))
                .unwrap()
                .aoi_rad
                - flat)
                .abs()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 1e-4);
}
