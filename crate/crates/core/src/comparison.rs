//! Riccati envelope and the length, projection and endpoint-distance bounds
//! for spacelike geodesics confined to `|t| ≥ t₀`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use crate::error::{GeometryError, Result};
use crate::geodesic::{
    concatenate, integrate_geodesic, project_and_measure, reverse, CausalClass, Crossing,
    EventSpec, IntegrationOptions, LevelEvent, SpacetimePoint, TangentVector, Trajectory,
};
use crate::metric_family::{quad, FiberPoint, HypothesisCertificate, MetricFamily};

/// Tolerance on `|t| ≥ level` when deciding confinement (events land within 1e−10).
pub const CONFINEMENT_TOL: f64 = 1e-8;
/// Tolerance on `|ṫ(0)|` (unit speed) for apex-started trajectories.
pub const APEX_TOL: f64 = 1e-8;

/// `G(u + u₀) = cot(c (u + u₀))`, the solution of `G′ = −c(1 + G²)`.
pub fn riccati_envelope(c: f64, u0: f64, u: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(GeometryError::Domain(format!("envelope needs c > 0, got {c}")));
    }
    let s = u + u0;
    if !(s > 0.0 && s < PI / c) {
        return Err(GeometryError::Domain(format!("u + u0 = {s} outside (0, π/c)")));
    }
    let x = c * s;
    Ok(x.cos() / x.sin())
}

/// The branch `u₀ ∈ (0, π/c)` with `cot(c u₀) = ṫ₀`.
pub fn envelope_offset(c: f64, tdot0: f64) -> f64 {
    (FRAC_PI_2 - tdot0.atan()) / c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundName {
    Length21,
    Projection22,
    Endpoint24,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    pub id: usize,
    pub reason: String,
}

/// Outcome of one batch bound check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_name: BoundName,
    pub bound_value: f64,
    pub observed_max: f64,
    pub margin: f64,
    pub sample_count: usize,
    pub worst_case_id: Option<usize>,
    pub runtime_ms: u64,
    /// Slack granted by the distance discretization (Endpoint24 only).
    pub net_error: f64,
    pub rejected: Vec<Rejection>,
    /// Secondary pointwise checks that failed (envelope, two-term split).
    pub auxiliary_failures: usize,
    /// Largest secondary quantity: envelope excess for Length21, second
    /// projection term for Projection22.
    pub auxiliary_max: f64,
    pub passed: bool,
}

impl BoundReport {
    fn assemble(
        bound_name: BoundName,
        bound_value: f64,
        net_error: f64,
        results: Vec<std::result::Result<(f64, usize, f64), Rejection>>,
        started: Instant,
    ) -> Self {
        let mut observed_max = 0.0;
        let mut worst = None;
        let mut rejected = Vec::new();
        let mut count = 0;
        let mut aux_fail = 0;
        let mut aux_max = f64::NEG_INFINITY;
        for (id, r) in results.into_iter().enumerate() {
            match r {
                Ok((value, fails, aux)) => {
                    count += 1;
                    aux_fail += fails;
                    aux_max = aux_max.max(aux);
                    if worst.is_none() || value > observed_max {
                        observed_max = value;
                        worst = Some(id);
                    }
                }
                Err(rej) => rejected.push(rej),
            }
        }
        let margin = bound_value + net_error - observed_max;
        Self {
            bound_name,
            bound_value,
            observed_max,
            margin,
            sample_count: count,
            worst_case_id: worst,
            runtime_ms: started.elapsed().as_millis() as u64,
            net_error,
            rejected,
            auxiliary_failures: aux_fail,
            auxiliary_max: if aux_max.is_finite() { aux_max } else { 0.0 },
            passed: margin > 0.0 && aux_fail == 0,
        }
    }
}

/// Returns the slab side (`±1`) when every sample satisfies `side·t ≥ level − tol`.
fn confined_side(traj: &Trajectory, level: f64) -> Option<f64> {
    let side = traj.start().point.t.signum();
    traj.samples
        .iter()
        .all(|s| side * s.point.t >= level - CONFINEMENT_TOL)
        .then_some(side)
}

fn screen(traj: &Trajectory, id: usize, level: f64) -> std::result::Result<f64, Rejection> {
    if traj.causal != CausalClass::Spacelike || traj.h0 <= 0.0 {
        return Err(Rejection { id, reason: "not spacelike".into() });
    }
    confined_side(traj, level).ok_or(Rejection { id, reason: format!("not confined to |t| ≥ {level}") })
}

/// Length check: every confined spacelike geodesic has length `< π/c`,
/// and `±ṫ` stays below the Riccati envelope `cot(c(u + u₀))`.
pub fn check_length_bound(
    family: &MetricFamily,
    certificate: &HypothesisCertificate,
    trajectories: &[Trajectory],
) -> BoundReport {
    let _ = family;
    let started = Instant::now();
    let c = certificate.c();
    let t0 = certificate.t0();
    let results = trajectories
        .par_iter()
        .enumerate()
        .map(|(id, tr)| {
            let side = screen(tr, id, t0)?;
            let speed = tr.h0.sqrt();
            let length = tr.length();
            let u_start = tr.start().u;
            let tdot0 = side * tr.start().velocity.dt / speed;
            let u0 = envelope_offset(c, tdot0);
            let mut fails = 0;
            let mut excess = f64::NEG_INFINITY;
            for s in &tr.samples {
                let u = (s.u - u_start) * speed;
                let tdot = side * s.velocity.dt / speed;
                match riccati_envelope(c, u0, u) {
                    Ok(g) => {
                        let e = tdot - g;
                        excess = excess.max(e);
                        if e > 1e-9 * (1.0 + g.abs()) {
                            fails += 1;
                        }
                    }
                    Err(_) => fails += 1,
                }
            }
            Ok((length, fails, excess))
        })
        .collect();
    BoundReport::assemble(BoundName::Length21, certificate.length_bound(), 0.0, results, started)
}

/// Projection check on apex-started confined geodesics: the projection
/// onto the end slice has `g_{γ⁰(L)}`-length `≤ C′`. Also checks the two
/// terms of the split `∫e^{−c(|γ⁰|−|γ⁰(L)|)}du ≤ L` and
/// `∫e^{−c(|γ⁰|−|γ⁰(L)|)}|γ̇⁰|du ≤ 1/c`.
pub fn check_projection_bound(
    family: &MetricFamily,
    certificate: &HypothesisCertificate,
    trajectories: &[Trajectory],
) -> BoundReport {
    let started = Instant::now();
    let c = certificate.c();
    let t0 = certificate.t0();
    let results = trajectories
        .par_iter()
        .enumerate()
        .map(|(id, tr)| {
            let side = screen(tr, id, t0)?;
            let speed = tr.h0.sqrt();
            if (tr.start().velocity.dt / speed).abs() > APEX_TOL {
                return Err(Rejection { id, reason: "does not start at an apex".into() });
            }
            let end_t = tr.end().point.t;
            let projected = project_and_measure(family, tr, end_t)
                .map_err(|e| Rejection { id, reason: e.to_string() })?
                .length;
            let (term1, term2) =
                split_terms(family, tr, c, side, end_t).map_err(|e| Rejection { id, reason: e.to_string() })?;
            let length = tr.length();
            let mut fails = 0;
            if term1 > length * (1.0 + 1e-9) + 1e-12 {
                fails += 1;
            }
            if term2 > 1.0 / c * (1.0 + 1e-9) {
                fails += 1;
            }
            Ok((projected, fails, term2))
        })
        .collect();
    BoundReport::assemble(BoundName::Projection22, certificate.projection_bound(), 0.0, results, started)
}

fn split_terms(family: &MetricFamily, tr: &Trajectory, c: f64, side: f64, end_t: f64) -> Result<(f64, f64)> {
    const GL5: [(f64, f64); 5] = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    let speed = tr.h0.sqrt();
    let (mut t1, mut t2) = (0.0, 0.0);
    for i in 0..tr.samples.len().saturating_sub(1) {
        let h = (tr.samples[i + 1].u - tr.samples[i].u) * speed;
        for (node, w) in GL5 {
            let (p, v) = tr.interval_state(family, i, 0.5 * (node + 1.0))?;
            let damp = (-c * (side * p.t - side * end_t)).exp();
            t1 += 0.5 * h * w * damp;
            t2 += 0.5 * h * w * damp * (v.dt / speed).abs();
        }
    }
    Ok((t1, t2))
}

/// Intrinsic distance on a slice `F_T`, with its own error tolerance.
pub trait SliceDistance: Sync {
    fn distance(&self, a: &FiberPoint, b: &FiberPoint) -> Result<f64>;
    fn tolerance(&self) -> f64;
}

/// Endpoint check: endpoints of geodesics confined to `|t| ≥ T`
/// are within `d_T ≤ 2C′ + net_error` of each other.
pub fn check_endpoint_distance(
    family: &MetricFamily,
    certificate: &HypothesisCertificate,
    big_t: f64,
    trajectories: &[Trajectory],
    distance: &dyn SliceDistance,
) -> Result<BoundReport> {
    let _ = family;
    if !(big_t > certificate.t0()) {
        return Err(GeometryError::Precondition(format!(
            "slice level {big_t} must exceed t0 = {}",
            certificate.t0()
        )));
    }
    let started = Instant::now();
    let results = trajectories
        .par_iter()
        .enumerate()
        .map(|(id, tr)| {
            let side = tr.start().point.t.signum();
            let ends_ok = [tr.start(), tr.end()].iter().all(|s| side * s.point.t >= big_t - CONFINEMENT_TOL);
            if !ends_ok {
                return Err(Rejection { id, reason: format!("endpoints not in |t| ≥ {big_t}") });
            }
            let d = distance
                .distance(&tr.start().point.x, &tr.end().point.x)
                .map_err(|e| Rejection { id, reason: e.to_string() })?;
            Ok((d, 0, 0.0))
        })
        .collect();
    Ok(BoundReport::assemble(
        BoundName::Endpoint24,
        2.0 * certificate.projection_bound(),
        distance.tolerance(),
        results,
        started,
    ))
}

/// A confined spacelike geodesic started at its apex (`ṫ = 0`), integrated
/// in both directions until `|t|` drops to the crossing level.
#[derive(Clone, Debug)]
pub struct ApexGeodesic {
    pub id: usize,
    pub apex: SpacetimePoint,
    pub direction: TangentVector,
    /// Apex to crossing along `+direction`.
    pub forward: Trajectory,
    /// Apex to crossing along `−direction`.
    pub backward: Trajectory,
    /// Crossing to crossing through the apex.
    pub full: Trajectory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApexBatchSpec {
    pub count: usize,
    pub seed: u64,
    /// Apex `|t|` is drawn uniformly from this range.
    pub apex_range: (f64, f64),
    /// Integration stops where `|t|` reaches this level.
    pub level: f64,
    /// Affine budget per half (a geodesic that fails to cross is an anomaly).
    pub budget: f64,
}

impl ApexBatchSpec {
    /// The standard batch: apexes in `[t₀ + 0.1, t₀ + 3]`, crossing at `t₀`.
    pub fn standard(certificate: &HypothesisCertificate, count: usize, seed: u64) -> Self {
        let t0 = certificate.t0();
        Self { count, seed, apex_range: (t0 + 0.1, t0 + 3.0), level: t0, budget: 2.0 * certificate.length_bound() }
    }
}

/// Uniformly random point of `F` drawn from `rng`.
pub fn random_fiber_point(family: &MetricFamily, rng: &mut impl Rng) -> FiberPoint {
    let fiber = family.fiber();
    let n = fiber.dim();
    if fiber.is_periodic() {
        return FiberPoint::angles((0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect());
    }
    loop {
        let w: Vec<f64> = (0..=n).map(|_| gaussian(rng)).collect();
        let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 1e-9 {
            let w: Vec<f64> = w.iter().map(|v| v / r).collect();
            return fiber.from_embedding(&w).expect("unit vector embeds");
        }
    }
}

/// Standard normal variate (Box–Muller).
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random `g_t`-unit fiber direction at `(t, x)`.
pub fn random_unit_direction(family: &MetricFamily, t: f64, x: &FiberPoint, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let g = family.metric_at(t, x)?;
    loop {
        let v: Vec<f64> = (0..family.dim()).map(|_| gaussian(rng)).collect();
        let n2 = quad(&g, &v);
        if n2 > 1e-12 {
            let k = 1.0 / n2.sqrt();
            return Ok(v.iter().map(|a| a * k).collect());
        }
    }
}

/// Per-item generator so batches are reproducible regardless of thread count.
pub fn item_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64 + 1);
    rng
}

/// Generates apex-started confined geodesics, alternating between the upper
/// (`t > 0`) and lower slab.
pub fn apex_batch(family: &MetricFamily, spec: &ApexBatchSpec, opts: &IntegrationOptions) -> Result<Vec<ApexGeodesic>> {
    (0..spec.count)
        .into_par_iter()
        .map(|id| {
            let mut rng = item_rng(spec.seed, id);
            let side = if id % 2 == 0 { 1.0 } else { -1.0 };
            let t = side * rng.gen_range(spec.apex_range.0..=spec.apex_range.1);
            let x = random_fiber_point(family, &mut rng);
            let dx = random_unit_direction(family, t, &x, &mut rng)?;
            apex_geodesic(family, id, SpacetimePoint::new(t, x), TangentVector::new(0.0, dx), spec.level, spec.budget, opts)
        })
        .collect()
}

/// Integrates both halves of the apex geodesic through `(apex, direction)`.
pub fn apex_geodesic(
    family: &MetricFamily,
    id: usize,
    apex: SpacetimePoint,
    direction: TangentVector,
    level: f64,
    budget: f64,
    opts: &IntegrationOptions,
) -> Result<ApexGeodesic> {
    let side = apex.t.signum();
    let events = EventSpec {
        levels: vec![LevelEvent {
            level: side * level,
            direction: if side > 0.0 { Crossing::Down } else { Crossing::Up },
        }],
        terminal: true,
    };
    let forward = integrate_geodesic(family, &apex, &direction, budget, &events, opts)?;
    let backward = integrate_geodesic(family, &apex, &direction.scaled(-1.0), budget, &events, opts)?;
    if forward.events.is_empty() || backward.events.is_empty() {
        return Err(GeometryError::Anomaly(format!(
            "apex geodesic {id} did not reach |t| = {level} within affine budget {budget}"
        )));
    }
    let full = concatenate(&reverse(&backward), &forward);
    Ok(ApexGeodesic { id, apex, direction, forward, backward, full })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_examples() {
        assert!(riccati_envelope(1.0, FRAC_PI_2, 0.0).unwrap().abs() < 1e-15);
        let c = 1f64.tanh();
        assert!(riccati_envelope(c, 0.0, PI / (2.0 * c)).unwrap().abs() < 1e-15);
        assert!((riccati_envelope(1.0, 0.3, 0.2).unwrap() - 1.830_487_721_712_452).abs() < 1e-12);
        assert!(riccati_envelope(1.0, 0.0, 0.0).is_err());
        assert!(riccati_envelope(1.0, 3.0, 0.2).is_err());
    }

    #[test]
    fn offset_inverts_envelope() {
        let c = 0.7;
        for tdot in [-3.0, -0.2, 0.0, 0.5, 10.0] {
            let u0 = envelope_offset(c, tdot);
            assert!(u0 > 0.0 && u0 < PI / c);
            assert!((riccati_envelope(c, u0, 0.0).unwrap() - tdot).abs() < 1e-12 * (1.0 + tdot.abs()));
        }
    }

    #[test]
    fn empty_batch_is_vacuous() {
        let f = MetricFamily::de_sitter(1);
        let cert = HypothesisCertificate::unchecked(1.0, 1f64.tanh());
        let r = check_length_bound(&f, &cert, &[]);
        assert!(r.passed);
        assert_eq!(r.sample_count, 0);
        assert_eq!(r.worst_case_id, None);
    }

    #[test]
    fn small_batch_respects_bounds() {
        let f = MetricFamily::de_sitter(1);
        let cert = HypothesisCertificate::unchecked(1.0, 1f64.tanh());
        let spec = ApexBatchSpec::standard(&cert, 12, 7);
        let batch = apex_batch(&f, &spec, &IntegrationOptions::default()).unwrap();
        let full: Vec<Trajectory> = batch.iter().map(|b| b.full.clone()).collect();
        let r = check_length_bound(&f, &cert, &full);
        assert!(r.passed, "{r:?}");
        let halves: Vec<Trajectory> = batch.iter().map(|b| b.forward.clone()).collect();
        let p = check_projection_bound(&f, &cert, &halves);
        assert!(p.passed, "{p:?}");
        assert_eq!(p.rejected.len(), 0);
    }

    #[test]
    fn vertical_trajectory_rejected() {
        let f = MetricFamily::de_sitter(1);
        let cert = HypothesisCertificate::unchecked(1.0, 1f64.tanh());
        let tr = integrate_geodesic(
            &f,
            &SpacetimePoint::new(2.0, FiberPoint::angles(vec![0.0])),
            &TangentVector::new(1.0, vec![0.0]),
            1.0,
            &EventSpec::none(),
            &IntegrationOptions::default(),
        )
        .unwrap();
        let r = check_projection_bound(&f, &cert, &[tr]);
        assert_eq!(r.rejected.len(), 1);
        assert_eq!(r.sample_count, 0);
    }
}
