use std::f64::consts::PI;

use lorentz_core::comparison::{envelope_offset, riccati_envelope};
use lorentz_core::curvature::{sectional_curvature_fd, sectional_curvature_warped};
use lorentz_core::geodesic::{integrate_geodesic, lorentz_inner, EventSpec, IntegrationOptions, SpacetimePoint, TangentVector};
use lorentz_core::isometry::{lorentz_defect, random_lorentz, IsometryAction};
use lorentz_core::metric_family::{christoffels_fd, metric_t_derivative_fd, Warp};
use lorentz_core::metric_space::{check_cover_subadditivity, graph_diameter, random_cover_instance, WeightedGraph};
use lorentz_core::{Fiber, FiberPoint, MetricFamily};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn warp() -> impl Strategy<Value = Warp> {
    prop_oneof![Just(Warp::Cosh), Just(Warp::Exp), (0.2f64..2.0).prop_map(|shift| Warp::SinhShifted { shift })]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cover_inequality_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_cover_instance(&mut rng, 80).unwrap();
        let r = check_cover_subadditivity(&inst).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn shortest_paths_satisfy_triangle_inequality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_cover_instance(&mut rng, 40).unwrap();
        let d = inst.graph.distance_matrix();
        let n = d.len();
        for a in 0..n {
            prop_assert_eq!(d[a][a], 0.0);
            for b in 0..n {
                prop_assert!((d[a][b] - d[b][a]).abs() <= 1e-12 * d[a][b].max(1.0));
                for c in 0..n {
                    prop_assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-12 * d[a][c].max(1.0));
                }
            }
        }
        let est = graph_diameter(&inst.graph);
        prop_assert!(est.exact && est.lower == est.upper);
    }

    #[test]
    fn time_derivative_matches_differences(w in warp(), t in -2.0f64..2.0, x in 0.0f64..6.2) {
        let f = MetricFamily::warped(w, Fiber::Sphere { dim: 1 }).unwrap();
        let p = FiberPoint::angles(vec![x]);
        let exact = f.metric_t_derivative(t, &p).unwrap();
        let fd = metric_t_derivative_fd(&f, t, &p, 1e-5).unwrap();
        prop_assert!((&exact - fd).norm() <= 1e-6 * (1.0 + exact.norm()));
    }

    #[test]
    fn spatial_christoffels_match_differences(w in warp(), t in -1.5f64..1.5, y0 in -0.8f64..0.8, y1 in -0.8f64..0.8) {
        let f = MetricFamily::warped(w, Fiber::Sphere { dim: 2 }).unwrap();
        let p = FiberPoint::new(0, vec![y0, y1]);
        let exact = f.spatial_christoffels(t, &p).unwrap();
        let fd = christoffels_fd(&f, t, &p, 1e-5).unwrap();
        for (a, b) in exact.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn warped_curvature_matches_differences(w in warp(), t in -1.5f64..1.5, x in 0.0f64..6.2, a in -0.8f64..0.8, b in -1.0f64..1.0) {
        let f = MetricFamily::warped(w, Fiber::Sphere { dim: 2 }).unwrap();
        let xp = f.fiber().param_point(&[1.0, x]);
        let p = SpacetimePoint::new(t, xp);
        let v = TangentVector::new(1.0, vec![a, 0.3]);
        let u = TangentVector::new(b, vec![-0.4, 1.0]);
        let closed = sectional_curvature_warped(&f, &p, &v, &u);
        let fd = sectional_curvature_fd(&f, &p, &v, &u);
        if let (Ok(c), Ok(d)) = (closed, fd) {
            prop_assert!((c - d).abs() <= 1e-5 * (1.0 + c.abs()), "{} vs {}", c, d);
        }
    }

    #[test]
    fn lorentz_elements_preserve_h_and_compose(seed in any::<u64>(), t in -1.5f64..1.5, x in 0.0f64..6.2, dt in -1.0f64..1.0, dx in -1.0f64..1.0) {
        let f = MetricFamily::de_sitter(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_lorentz(1, 2.0, &mut rng).unwrap();
        let b = random_lorentz(1, 2.0, &mut rng).unwrap();
        let la = a.lorentz_matrix().unwrap();
        let lb = b.lorentz_matrix().unwrap();
        prop_assert!(lorentz_defect(&la) <= 1e-10);
        let p = SpacetimePoint::new(t, FiberPoint::angles(vec![x]));
        let v = TangentVector::new(dt, vec![dx]);
        let (q, w) = a.push_forward(&f, &p, &v).unwrap();
        let before = lorentz_inner(&f, &p, &v, &v).unwrap();
        let after = lorentz_inner(&f, &q, &w, &w).unwrap();
        prop_assert!((before - after).abs() <= 1e-8 * (1.0 + w.dt * w.dt));
        let stepwise = b.apply(&f, &q).unwrap();
        let mut gens = a.generators().to_vec();
        gens.extend(b.generators().iter().cloned());
        let product = IsometryAction::new(1, gens).unwrap();
        prop_assert!(((product.lorentz_matrix().unwrap()) - &lb * &la).norm() <= 1e-9 * (lb.norm() * la.norm()));
        let direct = product.apply(&f, &p).unwrap();
        prop_assert!((direct.t - stepwise.t).abs() <= 1e-9 * (1.0 + direct.t.abs()));
        let dx = (direct.x.coords[0] - stepwise.x.coords[0] + PI).rem_euclid(2.0 * PI) - PI;
        prop_assert!(dx.abs() <= 1e-9);
    }

    #[test]
    fn geodesic_norm_is_conserved(shift in 0.2f64..2.0, cosh in any::<bool>(), t in -1.0f64..1.0, x in 0.0f64..6.2, dt in -1.0f64..1.0, dx in -1.0f64..1.0) {
        let w = if cosh { Warp::Cosh } else { Warp::SinhShifted { shift } };
        let f = MetricFamily::warped(w, Fiber::Sphere { dim: 1 }).unwrap();
        let p = SpacetimePoint::new(t, FiberPoint::angles(vec![x]));
        let v = TangentVector::new(dt, vec![dx]);
        prop_assume!(!v.is_zero());
        let opts = IntegrationOptions::default();
        let traj = integrate_geodesic(&f, &p, &v, 3.0, &EventSpec::stop_at(&[-6.0, 6.0]), &opts).unwrap();
        prop_assert!(traj.valid);
        prop_assert!(traj.norm_drift <= traj.drift_bound(&opts).max(1e-12), "{} > {}", traj.norm_drift, traj.drift_bound(&opts));
    }

    /// The exponential warp is incomplete towards t → −∞, where ṫ blows up and
    /// h(γ̇,γ̇) is a difference of large terms; drift is measured against ṫ².
    #[test]
    fn geodesic_norm_drift_is_relative_on_exp_warp(t in -1.0f64..1.0, x in 0.0f64..6.2, dt in -1.0f64..1.0, dx in -1.0f64..1.0) {
        let f = MetricFamily::warped(Warp::Exp, Fiber::Sphere { dim: 1 }).unwrap();
        let p = SpacetimePoint::new(t, FiberPoint::angles(vec![x]));
        let v = TangentVector::new(dt, vec![dx]);
        prop_assume!(!v.is_zero());
        let opts = IntegrationOptions::default();
        let traj = integrate_geodesic(&f, &p, &v, 3.0, &EventSpec::stop_at(&[-6.0, 6.0]), &opts).unwrap();
        let scale = traj.samples.iter().map(|s| s.velocity.dt * s.velocity.dt).fold(1.0, f64::max);
        prop_assert!(traj.norm_drift <= 1e-8 * scale * traj.affine_span().max(1.0), "{} vs scale {}", traj.norm_drift, scale);
    }

    #[test]
    fn envelope_solves_riccati(c in 0.1f64..2.0, tdot in -5.0f64..5.0, frac in 0.01f64..0.9) {
        let u0 = envelope_offset(c, tdot);
        let u = frac * (PI / c - u0);
        let g = riccati_envelope(c, u0, u).unwrap();
        let h = 1e-6;
        let dg = (riccati_envelope(c, u0, u + h).unwrap() - riccati_envelope(c, u0, u - h).unwrap()) / (2.0 * h);
        prop_assert!((dg + c * (1.0 + g * g)).abs() <= 1e-5 * (1.0 + g * g));
    }

    #[test]
    fn weighted_graph_rejects_bad_weights(w in -5.0f64..0.0) {
        prop_assert!(WeightedGraph::new(2, &[(0, 1, w)]).is_err());
    }
}
