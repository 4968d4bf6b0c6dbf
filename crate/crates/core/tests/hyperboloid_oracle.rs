//! De Sitter geodesics against the closed form on the hyperboloid
//! `−x₀² + x₁² + … = 1`, where geodesics are `cos/cosh/linear` combinations
//! of the initial position and velocity.

use lorentz_core::comparison::{item_rng, random_fiber_point};
use lorentz_core::geodesic::{integrate_geodesic, lorentz_norm2, EventSpec, IntegrationOptions, SpacetimePoint, TangentVector};
use lorentz_core::{Fiber, MetricFamily};
use rand::Rng;

fn embed(family: &MetricFamily, p: &SpacetimePoint) -> Vec<f64> {
    let w = family.fiber().embed(&p.x).unwrap();
    std::iter::once(p.t.sinh()).chain(w.iter().map(|v| p.t.cosh() * v)).collect()
}

fn embed_velocity(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector) -> Vec<f64> {
    let fiber = family.fiber();
    let w = fiber.embed(&p.x).unwrap();
    let j = fiber.embed_jacobian(&p.x).unwrap();
    let (s, c) = (p.t.sinh(), p.t.cosh());
    let mut out = vec![c * v.dt];
    for k in 0..w.len() {
        let dw: f64 = (0..v.dx.len()).map(|b| j[(k, b)] * v.dx[b]).sum();
        out.push(s * v.dt * w[k] + c * dw);
    }
    out
}

/// Closed-form position at affine parameter `s`.
fn oracle(x0: &[f64], v0: &[f64], h: f64, s: f64) -> Vec<f64> {
    if h > 1e-12 {
        let k = h.sqrt();
        x0.iter().zip(v0).map(|(x, v)| (k * s).cos() * x + (k * s).sin() * v / k).collect()
    } else if h < -1e-12 {
        let k = (-h).sqrt();
        x0.iter().zip(v0).map(|(x, v)| (k * s).cosh() * x + (k * s).sinh() * v / k).collect()
    } else {
        x0.iter().zip(v0).map(|(x, v)| x + s * v).collect()
    }
}

/// Draws `(p, v)` of the requested class (0 spacelike, 1 timelike, 2 null)
/// with `|h(v,v)| = 1` for the non-null classes.
fn initial(family: &MetricFamily, class: usize, rng: &mut impl Rng) -> (SpacetimePoint, TangentVector) {
    let n = family.dim();
    let p = SpacetimePoint::new(rng.gen_range(-1.5..1.5), random_fiber_point(family, rng));
    let g = family.metric_at(p.t, &p.x).unwrap();
    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let gn = lorentz_core::metric_family::quad(&g, &dir).sqrt();
    let unit: Vec<f64> = dir.iter().map(|d| d / gn).collect();
    let v = match class {
        0 => {
            let a: f64 = rng.gen_range(-1.0..1.0);
            TangentVector::new(a, unit.iter().map(|u| (1.0 + a * a).sqrt() * u).collect())
        }
        1 => {
            let b: f64 = rng.gen_range(0.0..1.0);
            let dt = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * (1.0 + b * b).sqrt();
            TangentVector::new(dt, unit.iter().map(|u| b * u).collect())
        }
        _ => {
            let dt = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            TangentVector::new(dt, unit)
        }
    };
    (p, v)
}

fn run(dim: usize, count: usize, u_max: f64, seed: u64) -> f64 {
    let family = MetricFamily::de_sitter(dim);
    assert!(matches!(family.fiber(), Fiber::Sphere { .. }));
    let opts = IntegrationOptions::default();
    let mut worst: f64 = 0.0;
    for id in 0..count {
        let mut rng = item_rng(seed, id);
        let (p, v) = initial(&family, id % 3, &mut rng);
        let h = lorentz_norm2(&family, &p, &v).unwrap();
        let x0 = embed(&family, &p);
        let v0 = embed_velocity(&family, &p, &v);
        // timelike and null geodesics leave any bounded t-range; cap the span at |t| ≤ 12
        let span = if id % 3 == 0 { u_max } else { u_max.min(10.0) };
        let traj = integrate_geodesic(&family, &p, &v, span, &EventSpec::stop_at(&[-12.0, 12.0]), &opts).unwrap();
        for s in &traj.samples {
            let x = oracle(&x0, &v0, h, s.u);
            let t = x[0].asinh();
            let w: Vec<f64> = x[1..].iter().map(|v| v / t.cosh()).collect();
            let got = family.fiber().embed(&s.point.x).unwrap();
            let mut err = (t - s.point.t).abs();
            for (a, b) in w.iter().zip(&got) {
                err = err.max((a - b).abs());
            }
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn circle_fiber_matches_closed_form() {
    let err = run(1, 90, 10.0, 11);
    assert!(err < 1e-6, "max deviation {err}");
}

#[test]
fn sphere_fiber_matches_closed_form() {
    let err = run(2, 60, 10.0, 12);
    assert!(err < 1e-6, "max deviation {err}");
}

#[test]
fn null_geodesic_time_is_monotone() {
    let family = MetricFamily::de_sitter(1);
    let mut rng = item_rng(3, 0);
    for _ in 0..20 {
        let (p, v) = initial(&family, 2, &mut rng);
        let traj = integrate_geodesic(&family, &p, &v, 8.0, &EventSpec::stop_at(&[-12.0, 12.0]), &IntegrationOptions::default()).unwrap();
        let sign = v.dt.signum();
        assert!(traj.samples.windows(2).all(|w| sign * (w[1].point.t - w[0].point.t) > 0.0));
    }
}
