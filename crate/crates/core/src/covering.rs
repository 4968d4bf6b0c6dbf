//! Covers of a slice `F_T` by small balls whose points are pairwise joined
//! by spacelike geodesics staying inside the slab `|t − T| < ε`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{item_rng, random_unit_direction};
use crate::error::{GeometryError, Result};
use crate::geodesic::{
    causal_classify_with, integrate_geodesic, CausalClass, EventSpec, IntegrationOptions, SpacetimePoint,
    TangentVector, Trajectory,
};
use crate::metric_family::{FiberPoint, HypothesisCertificate, MetricFamily};
use crate::metric_space::NetGraph;

/// Slack on the strict slab inequalities.
pub const EXCURSION_SLACK: f64 = 1e-6;
/// Shooting residual accepted as converged.
const SHOOT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverBall {
    pub center: FiberPoint,
    pub center_id: usize,
    pub member_ids: Vec<usize>,
}

/// A cover of `F_T` by balls `V_i`. Each ball gathers the net nodes within
/// `radius` of its center; as a subset of `F_T` it is the `g_T`-ball of
/// `continuum_radius = radius + net ε`, so the balls cover the whole slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabCover {
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilon: f64,
    pub radius: f64,
    pub continuum_radius: f64,
    pub count: usize,
    pub balls: Vec<CoverBall>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverOptions {
    /// Pairs checked by the radius search at each candidate radius.
    pub pilot_pairs: usize,
    /// Radius search gives up below this value.
    pub min_radius: f64,
    pub seed: u64,
    pub integration: IntegrationOptions,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self { pilot_pairs: 64, min_radius: 1e-3, seed: 0, integration: IntegrationOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairFailure {
    pub ball: usize,
    pub pair: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverVerification {
    pub pairs_checked: usize,
    pub pairs_connected: usize,
    /// Largest `|t − T|` along any connecting geodesic.
    pub max_excursion: f64,
    pub max_residual: f64,
    pub flagged_balls: Vec<usize>,
    pub failures: Vec<PairFailure>,
    pub passed: bool,
}

/// Greedy cover of the net at `T` by graph balls, with the radius halved from
/// `ε/2` until a pilot sample of pairs verifies.
pub fn build_slab_cover(
    family: &MetricFamily,
    certificate: Option<&HypothesisCertificate>,
    net: &NetGraph,
    t: f64,
    epsilon: f64,
    opts: &CoverOptions,
) -> Result<SlabCover> {
    let cert = certificate
        .ok_or_else(|| GeometryError::Precondition("slab cover needs a hypothesis certificate (t0)".into()))?;
    if t - epsilon <= cert.t0() {
        return Err(GeometryError::Precondition(format!(
            "T − ε = {} must exceed t0 = {}",
            t - epsilon,
            cert.t0()
        )));
    }
    if (net.t - t).abs() > 1e-12 {
        return Err(GeometryError::InvalidArgument(format!("net lives at T = {}, not {t}", net.t)));
    }
    let mut radius = 0.5 * epsilon;
    let mut last = None;
    while radius >= opts.min_radius {
        let cover = greedy_cover(net, t, epsilon, radius);
        let report = verify_cover(family, &cover, opts.pilot_pairs, opts.seed, &opts.integration)?;
        if report.passed {
            return Ok(cover);
        }
        last = Some((radius, report));
        radius *= 0.5;
    }
    let detail = last
        .map(|(r, rep)| {
            format!(
                "at r = {r}: {}/{} pairs connected, max excursion {}, first failure {:?}",
                rep.pairs_connected,
                rep.pairs_checked,
                rep.max_excursion,
                rep.failures.first().map(|f| &f.reason)
            )
        })
        .unwrap_or_default();
    Err(GeometryError::InvalidCover(format!("radius search fell below {}: {detail}", opts.min_radius)))
}

/// Deterministic greedy cover: the lowest uncovered node id becomes the next center.
pub fn greedy_cover(net: &NetGraph, t: f64, epsilon: f64, radius: f64) -> SlabCover {
    let mut covered = vec![false; net.len()];
    let mut balls = Vec::new();
    while let Some(c) = covered.iter().position(|v| !v) {
        let members = net.ball(c, radius);
        for &m in &members {
            covered[m] = true;
        }
        balls.push(CoverBall { center: net.nodes[c].clone(), center_id: c, member_ids: members });
    }
    SlabCover {
        t,
        epsilon,
        radius,
        continuum_radius: radius + net.epsilon,
        count: balls.len(),
        balls,
    }
}

/// Random point of the continuum ball `B(center, ρ)` in the center's chart
/// (linearized metric at the center).
fn ball_point(family: &MetricFamily, t: f64, center: &FiberPoint, rho: f64, rng: &mut impl Rng) -> Result<FiberPoint> {
    let dir = random_unit_direction(family, t, center, rng)?;
    let s = rho * rng.gen::<f64>().powf(1.0 / family.dim() as f64);
    Ok(FiberPoint::new(center.chart, center.coords.iter().zip(&dir).map(|(c, d)| c + s * d).collect()))
}

fn shoot(family: &MetricFamily, start: &SpacetimePoint, v: &[f64], opts: &IntegrationOptions) -> Result<Trajectory> {
    let tv = TangentVector::new(v[0], v[1..].to_vec());
    integrate_geodesic(family, start, &tv, 1.0, &EventSpec::none(), opts)
}

fn residual(family: &MetricFamily, traj: &Trajectory, t: f64, q: &FiberPoint) -> Result<Vec<f64>> {
    let end = traj.end();
    let mut r = vec![end.point.t - t];
    r.extend(family.fiber().displacement(q, &end.point.x)?);
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct Connection {
    /// `None` for the trivial pair `p = q`.
    pub trajectory: Option<Trajectory>,
    pub residual: f64,
    pub excursion: f64,
    pub causal: CausalClass,
}

/// Solves the two-point problem `p → q` on the slice `t = T` by shooting with
/// damped Newton on the initial velocity (finite-difference Jacobian).
pub fn connect_on_slice(
    family: &MetricFamily,
    t: f64,
    p: &FiberPoint,
    q: &FiberPoint,
    opts: &IntegrationOptions,
) -> Result<Connection> {
    let fiber = family.fiber();
    let start = SpacetimePoint::new(t, p.clone());
    let d = fiber.displacement(p, q)?;
    let n = d.len();
    if d.iter().all(|v| *v == 0.0) {
        return Ok(Connection { trajectory: None, residual: 0.0, excursion: 0.0, causal: CausalClass::Spacelike });
    }
    let dg = family.metric_t_derivative(t, p)?;
    let tdot = 0.25 * crate::metric_family::quad(&dg, &d);
    let mut v: Vec<f64> = std::iter::once(tdot).chain(d.iter().copied()).collect();
    let mut traj = shoot(family, &start, &v, opts)?;
    let mut r = residual(family, &traj, t, q)?;
    let mut rn = DVector::from_column_slice(&r).norm();
    let scale = 1.0 + DVector::from_column_slice(&v).norm();
    for _ in 0..40 {
        if rn < SHOOT_TOL {
            break;
        }
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for k in 0..=n {
            let h = 1e-7 * (1.0 + v[k].abs());
            let mut vp = v.clone();
            vp[k] += h;
            let rp = residual(family, &shoot(family, &start, &vp, opts)?, t, q)?;
            for i in 0..=n {
                jac[(i, k)] = (rp[i] - r[i]) / h;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or_else(|| GeometryError::Domain("singular shooting jacobian".into()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            if let Ok(tr) = shoot(family, &start, &trial, opts) {
                if let Ok(rt) = residual(family, &tr, t, q) {
                    let rtn = DVector::from_column_slice(&rt).norm();
                    if rtn < rn {
                        v = trial;
                        traj = tr;
                        r = rt;
                        rn = rtn;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted || DVector::from_column_slice(&v).norm() > 1e3 * scale {
            break;
        }
    }
    let excursion = traj.samples.iter().map(|s| (s.point.t - t).abs()).fold(0.0, f64::max);
    let tv = TangentVector::new(v[0], v[1..].to_vec());
    let causal = causal_classify_with(family, &start, &tv, opts.tol_null)?;
    Ok(Connection { trajectory: Some(traj), residual: rn, excursion, causal })
}

/// Checks `pair_budget` sampled pairs, spread round-robin over the balls.
/// Each ball's first pair is a diametral pair through the center.
pub fn verify_cover(
    family: &MetricFamily,
    cover: &SlabCover,
    pair_budget: usize,
    seed: u64,
    opts: &IntegrationOptions,
) -> Result<CoverVerification> {
    let t = cover.t;
    let rho = cover.continuum_radius;
    let nb = cover.balls.len();
    let results: Vec<(usize, usize, std::result::Result<(f64, f64), String>)> = (0..pair_budget)
        .into_par_iter()
        .map(|k| {
            let ball = k % nb;
            let round = k / nb;
            let center = &cover.balls[ball].center;
            let mut rng = item_rng(seed, k);
            let pair = (|| -> Result<(FiberPoint, FiberPoint)> {
                if round == 0 {
                    let dir = random_unit_direction(family, t, center, &mut rng)?;
                    let at = |s: f64| FiberPoint::new(center.chart, center.coords.iter().zip(&dir).map(|(c, d)| c + s * d).collect());
                    Ok((at(-rho), at(rho)))
                } else {
                    Ok((ball_point(family, t, center, rho, &mut rng)?, ball_point(family, t, center, rho, &mut rng)?))
                }
            })();
            let outcome = pair.map_err(|e| e.to_string()).and_then(|(p, q)| {
                let c = connect_on_slice(family, t, &p, &q, opts).map_err(|e| e.to_string())?;
                if c.residual >= SHOOT_TOL {
                    return Err(format!("shooting did not converge (residual {:.3e})", c.residual));
                }
                if c.causal != CausalClass::Spacelike {
                    return Err(format!("connecting geodesic is {:?}", c.causal));
                }
                if c.excursion >= cover.epsilon - EXCURSION_SLACK {
                    return Err(format!("excursion {} leaves the slab of half-width {}", c.excursion, cover.epsilon));
                }
                Ok((c.excursion, c.residual))
            });
            (ball, k, outcome)
        })
        .collect();
    let mut report = CoverVerification {
        pairs_checked: results.len(),
        pairs_connected: 0,
        max_excursion: 0.0,
        max_residual: 0.0,
        flagged_balls: Vec::new(),
        failures: Vec::new(),
        passed: true,
    };
    for (ball, pair, r) in results {
        match r {
            Ok((e, res)) => {
                report.pairs_connected += 1;
                report.max_excursion = report.max_excursion.max(e);
                report.max_residual = report.max_residual.max(res);
            }
            Err(reason) => {
                if !report.flagged_balls.contains(&ball) {
                    report.flagged_balls.push(ball);
                }
                report.failures.push(PairFailure { ball, pair, reason });
            }
        }
    }
    report.flagged_balls.sort_unstable();
    report.passed = report.failures.is_empty();
    Ok(report)
}
