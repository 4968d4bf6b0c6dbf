//! Verification suites. Each suite is a pure function of the configuration.

use std::time::Instant;

use lorentz_core::comparison::{
    apex_batch, check_endpoint_distance, check_length_bound, check_projection_bound, item_rng, random_fiber_point,
    random_unit_direction, ApexBatchSpec, ApexGeodesic, BoundReport,
};
use lorentz_core::covering::{build_slab_cover, verify_cover, CoverOptions};
use lorentz_core::curvature::{
    check_jacobi_metric_identity, curvature_samples, estimate_alpha, hessian_concavity_check, integrate_jacobi,
    normal_chart_gauss_check, random_indefinite_planes, write_curvature_csv,
};
use lorentz_core::geodesic::{IntegrationOptions, Trajectory};
use lorentz_core::isometry::{
    divergence_diagnostics, divergence_proposition_check, main_theorem_experiment, random_isometry_sample,
    ExperimentOptions, Generator, IsometryAction,
};
use lorentz_core::metric_family::{best_growth_rate, check_exponential_growth, check_hypothesis_h};
use lorentz_core::metric_space::{
    build_net, check_cover_subadditivity, diameter_growth_curve, hand_cover_instances, random_cover_instance,
    NetDistance,
};
use lorentz_core::{GeometryError, HypothesisCertificate, MetricFamily};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Expectation, RunConfig};
use crate::error::{Context, LabError};
use crate::report::{Artifact, SuiteReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Hypothesis,
    Lemma21,
    Lemma22,
    Cor24,
    Lemma31,
    Lemma32,
    Growth,
    Jacobi,
    Gauss,
    MainTheorem,
    Divergence,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Hypothesis,
        Suite::Lemma21,
        Suite::Lemma22,
        Suite::Cor24,
        Suite::Lemma31,
        Suite::Lemma32,
        Suite::Growth,
        Suite::Jacobi,
        Suite::Gauss,
        Suite::MainTheorem,
        Suite::Divergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hypothesis => "hypothesis",
            Suite::Lemma21 => "lemma21",
            Suite::Lemma22 => "lemma22",
            Suite::Cor24 => "cor24",
            Suite::Lemma31 => "lemma31",
            Suite::Lemma32 => "lemma32",
            Suite::Growth => "growth",
            Suite::Jacobi => "jacobi",
            Suite::Gauss => "gauss",
            Suite::MainTheorem => "main-theorem",
            Suite::Divergence => "divergence",
        }
    }

    pub fn parse(name: &str) -> Result<Suite, LabError> {
        Suite::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            let known: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
            LabError::Usage(format!("unknown suite {name:?}; expected one of {}", known.join(", ")))
        })
    }
}

/// Outcome of the body of one suite, before the report envelope is added.
struct Outcome {
    passed: bool,
    details: Value,
    artifacts: Vec<Artifact>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn csv_artifact(name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Artifact {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    Artifact::new(name, buf)
}

pub fn run_suite(cfg: &RunConfig, suite: Suite) -> Result<SuiteReport, LabError> {
    let started = Instant::now();
    let family = cfg.family();
    let outcome = match suite {
        Suite::Hypothesis => hypothesis(cfg, &family),
        Suite::Lemma21 => lemma21(cfg, &family),
        Suite::Lemma22 => lemma22(cfg, &family),
        Suite::Cor24 => cor24(cfg, &family),
        Suite::Lemma31 => lemma31(cfg),
        Suite::Lemma32 => lemma32(cfg, &family),
        Suite::Growth => growth(cfg, &family),
        Suite::Jacobi => jacobi(cfg, &family),
        Suite::Gauss => gauss(cfg, &family),
        Suite::MainTheorem => main_theorem(cfg, &family),
        Suite::Divergence => divergence(cfg, &family),
    }
    .map_err(|e| match e {
        LabError::Geometry { context, source } => {
            LabError::Geometry { context: format!("suite {}: {context}", suite.name()), source }
        }
        other => other,
    })?;
    Ok(SuiteReport::new(
        suite.name(),
        outcome.passed,
        cfg,
        family.label(),
        outcome.details,
        started.elapsed().as_millis() as u64,
        outcome.artifacts,
    ))
}

fn growth_rate(cfg: &RunConfig, family: &MetricFamily) -> Result<(f64, bool), LabError> {
    match cfg.certificate.c {
        Some(c) => Ok((c, false)),
        None => Ok((best_growth_rate(family, cfg.certificate.t0, &cfg.certificate.options()).context("growth rate")?, true)),
    }
}

/// Certificate for the configured `(t0, c)`; a rejected hypothesis is a precondition failure.
pub fn certify(cfg: &RunConfig, family: &MetricFamily) -> Result<HypothesisCertificate, LabError> {
    let (c, _) = growth_rate(cfg, family)?;
    let t0 = cfg.certificate.t0;
    if !(c > 0.0) {
        return Err(GeometryError::Precondition(format!("no positive growth rate at t0 = {t0} (best c = {c})")))
            .context("certificate");
    }
    let report = check_hypothesis_h(family, t0, c, &cfg.certificate.options()).context("certificate")?;
    report.certificate.ok_or_else(|| LabError::Geometry {
        context: "certificate".into(),
        source: GeometryError::Precondition(format!("hypothesis rejected at t0 = {t0}, c = {c}")),
    })
}

fn hypothesis(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let (c, derived) = growth_rate(cfg, family)?;
    let expect = cfg.hypothesis.expect;
    if !(c > 0.0) {
        return Ok(Outcome {
            passed: expect == Expectation::Rejected,
            details: json!({
                "expect": expect,
                "certified": false,
                "c": c,
                "c_derived": derived,
                "reason": "no positive growth rate on the grid",
            }),
            artifacts: vec![],
        });
    }
    let report = check_hypothesis_h(family, cfg.certificate.t0, c, &cfg.certificate.options()).context("hypothesis")?;
    let growth = match &report.certificate {
        Some(cert) => Some(check_exponential_growth(family, cert, &cfg.certificate.options()).context("growth")?),
        None => None,
    };
    let certified = report.passed();
    let passed = match expect {
        Expectation::Certified => certified && growth.as_ref().is_some_and(|g| g.passed),
        Expectation::Rejected => !certified,
    };
    Ok(Outcome {
        passed,
        details: json!({
            "expect": expect,
            "certified": certified,
            "c": c,
            "c_derived": derived,
            "length_bound": report.certificate.as_ref().map(|k| k.length_bound()),
            "projection_bound": report.certificate.as_ref().map(|k| k.projection_bound()),
            "hypothesis": to_value(&report),
            "growth": growth.as_ref().map(to_value),
        }),
        artifacts: vec![],
    })
}

fn batch(
    cfg: &RunConfig,
    family: &MetricFamily,
    cert: &HypothesisCertificate,
    count: usize,
    level: f64,
    offsets: (f64, f64),
) -> Result<Vec<ApexGeodesic>, LabError> {
    let spec = ApexBatchSpec {
        count,
        seed: cfg.seed,
        apex_range: (level + offsets.0, level + offsets.1),
        level,
        budget: 2.0 * cert.length_bound(),
    };
    apex_batch(family, &spec, &cfg.tolerances.integration()).context("apex batch")
}

#[derive(Serialize)]
struct DriftSummary {
    trajectories: usize,
    invalid: usize,
    /// `max |h − h₀| / max(1, span)`.
    max_drift_per_length: f64,
}

fn drift_summary<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> DriftSummary {
    let mut s = DriftSummary { trajectories: 0, invalid: 0, max_drift_per_length: 0.0 };
    for t in trajs {
        s.trajectories += 1;
        s.invalid += usize::from(!t.valid);
        s.max_drift_per_length = s.max_drift_per_length.max(t.norm_drift / t.affine_span().max(1.0));
    }
    s
}

fn worst_artifact(report: &BoundReport, trajs: &[&Trajectory]) -> Vec<Artifact> {
    report
        .worst_case_id
        .and_then(|id| trajs.get(id))
        .map(|t| vec![csv_artifact("worst_trajectory.csv", |b| t.write_csv(b))])
        .unwrap_or_default()
}

fn lemma21(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let cert = certify(cfg, family)?;
    let p = &cfg.lemma21;
    let geos = batch(cfg, family, &cert, p.count, cert.t0(), p.apex_offsets)?;
    let full: Vec<Trajectory> = geos.iter().map(|g| g.full.clone()).collect();
    let report = check_length_bound(family, &cert, &full);
    let concavity = hessian_concavity_check(family, &full).context("concavity")?;
    let drift = drift_summary(&full);
    let refs: Vec<&Trajectory> = full.iter().collect();
    Ok(Outcome {
        passed: report.passed && concavity.passed && drift.invalid == 0,
        details: json!({
            "t0": cert.t0(),
            "c": cert.c(),
            "bound": to_value(&report),
            "concavity": to_value(&concavity),
            "drift": to_value(&drift),
        }),
        artifacts: worst_artifact(&report, &refs),
    })
}

fn lemma22(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let cert = certify(cfg, family)?;
    let p = &cfg.lemma22;
    let geos = batch(cfg, family, &cert, p.count, cert.t0(), p.apex_offsets)?;
    let halves: Vec<Trajectory> = geos.iter().flat_map(|g| [g.forward.clone(), g.backward.clone()]).collect();
    let report = check_projection_bound(family, &cert, &halves);
    let drift = drift_summary(&halves);
    let refs: Vec<&Trajectory> = halves.iter().collect();
    Ok(Outcome {
        passed: report.passed && drift.invalid == 0,
        details: json!({
            "t0": cert.t0(),
            "c": cert.c(),
            "bound": to_value(&report),
            "drift": to_value(&drift),
        }),
        artifacts: worst_artifact(&report, &refs),
    })
}

fn cor24(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let cert = certify(cfg, family)?;
    let p = &cfg.cor24;
    let geos = batch(cfg, family, &cert, p.count, p.t, p.apex_offsets)?;
    let sides: Vec<f64> = if family.is_time_even() { vec![1.0] } else { vec![1.0, -1.0] };
    let mut reports = Vec::new();
    let mut artifacts = Vec::new();
    for side in sides {
        let trajs: Vec<Trajectory> = geos
            .iter()
            .filter(|g| family.is_time_even() || g.apex.t.signum() == side)
            .map(|g| g.full.clone())
            .collect();
        let net = build_net(family, side * p.t, p.epsilon).context("endpoint net")?;
        let dist = NetDistance::new(family, &net);
        let report = check_endpoint_distance(family, &cert, p.t, &trajs, &dist).context("endpoint distances")?;
        let refs: Vec<&Trajectory> = trajs.iter().collect();
        if artifacts.is_empty() || !report.passed {
            artifacts = worst_artifact(&report, &refs);
        }
        reports.push(json!({ "side": side, "net_nodes": net.len(), "bound": to_value(&report) }));
    }
    let passed = reports.iter().all(|r| r["bound"]["passed"] == Value::Bool(true));
    Ok(Outcome {
        passed,
        details: json!({
            "T": p.t,
            "epsilon": p.epsilon,
            "projection_bound": cert.projection_bound(),
            "sides": reports,
        }),
        artifacts,
    })
}

fn lemma31(cfg: &RunConfig) -> Result<Outcome, LabError> {
    let p = &cfg.lemma31;
    let rows: Vec<(usize, usize, f64, f64, bool)> = (0..p.instances)
        .into_par_iter()
        .map(|id| {
            let mut rng = item_rng(cfg.seed, id);
            let inst = random_cover_instance(&mut rng, p.max_nodes)?;
            let r = check_cover_subadditivity(&inst)?;
            Ok((inst.graph.node_count(), inst.parts.len(), r.diameter, r.sum, r.passed))
        })
        .collect::<Result<_, GeometryError>>()
        .context("random covers")?;
    let mut hand = Vec::new();
    for (name, inst) in hand_cover_instances().context("hand covers")? {
        let r = check_cover_subadditivity(&inst).context("hand covers")?;
        hand.push(json!({ "name": name, "report": to_value(&r) }));
    }
    let passed_count = rows.iter().filter(|r| r.4).count();
    let max_ratio = rows.iter().map(|r| r.2 / r.3).fold(0.0, f64::max);
    let hand_ok = hand.iter().all(|h| h["report"]["passed"] == Value::Bool(true));
    let csv = csv_artifact("covers.csv", |b| {
        use std::io::Write;
        writeln!(b, "id,nodes,parts,diameter,sum")?;
        for (id, r) in rows.iter().enumerate() {
            writeln!(b, "{id},{},{},{:.16e},{:.16e}", r.0, r.1, r.2, r.3)?;
        }
        Ok(())
    });
    Ok(Outcome {
        passed: passed_count == rows.len() && hand_ok,
        details: json!({
            "instances": rows.len(),
            "passed_count": passed_count,
            "max_ratio": max_ratio,
            "hand": hand,
        }),
        artifacts: vec![csv],
    })
}

fn lemma32(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let cert = certify(cfg, family)?;
    let p = &cfg.lemma32;
    let integration = cfg.tolerances.integration();
    let net = build_net(family, p.t, p.epsilon * p.net_fraction).context("cover net")?;
    let opts = CoverOptions { pilot_pairs: p.pilot_pairs, seed: cfg.seed, integration, ..CoverOptions::default() };
    let cover = build_slab_cover(family, Some(&cert), &net, p.t, p.epsilon, &opts).context("slab cover")?;
    let check = verify_cover(family, &cover, p.pair_budget, cfg.seed, &integration).context("cover verification")?;
    let centers = csv_artifact("cover_centers.csv", |b| {
        use std::io::Write;
        let n = family.dim();
        let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(b, "ball,chart,{},members", coords.join(","))?;
        for (i, ball) in cover.balls.iter().enumerate() {
            let xs: Vec<String> = ball.center.coords.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(b, "{i},{},{},{}", ball.center.chart, xs.join(","), ball.member_ids.len())?;
        }
        Ok(())
    });
    Ok(Outcome {
        passed: check.passed,
        details: json!({
            "T": cover.t,
            "epsilon": cover.epsilon,
            "net_nodes": net.len(),
            "count": cover.count,
            "radius": cover.radius,
            "continuum_radius": cover.continuum_radius,
            "verification": to_value(&check),
        }),
        artifacts: vec![centers],
    })
}

fn growth(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let p = &cfg.growth;
    let cert = match certify(cfg, family) {
        Ok(c) => Some(c),
        Err(LabError::Geometry { source: GeometryError::Precondition(_), .. }) => None,
        Err(e) => return Err(e),
    };
    let curve = diameter_growth_curve(family, cert.as_ref(), &p.t_values, p.epsilon, cfg.tolerances.growth_ratio)
        .context("diameter curve")?;
    let csv = csv_artifact("diameter_curve.csv", |b| {
        use std::io::Write;
        writeln!(b, "T,lower,upper,nodes")?;
        for pt in &curve.points {
            writeln!(b, "{:.16e},{:.16e},{:.16e},{}", pt.t, pt.lower, pt.upper, pt.nodes)?;
        }
        Ok(())
    });
    Ok(Outcome {
        passed: curve.growth_passed != Some(false),
        details: json!({ "certified": cert.is_some(), "curve": to_value(&curve) }),
        artifacts: vec![csv],
    })
}

/// Seed stream for Jacobi field sampling, separate from the plane stream.
const JACOBI_STREAM: u64 = 0x4a41_434f_4249;

fn jacobi(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let p = &cfg.jacobi;
    let planes = random_indefinite_planes(family, p.planes, p.t_range, cfg.seed).context("planes")?;
    let samples = curvature_samples(family, &planes).context("curvature")?;
    let min_k = samples.iter().map(|s| s.k).fold(f64::INFINITY, f64::min);
    let max_k = samples.iter().map(|s| s.k).fold(f64::NEG_INFINITY, f64::max);
    let alpha = estimate_alpha(family, p.planes, p.t_range, cfg.seed).context("alpha")?;
    let stepper = cfg.tolerances.integration().stepper;
    let fields = (0..p.fields)
        .into_par_iter()
        .map(|id| {
            let mut rng = item_rng(cfg.seed ^ JACOBI_STREAM, id);
            let x = random_fiber_point(family, &mut rng);
            let w = random_unit_direction(family, 0.0, &x, &mut rng)?;
            let field = integrate_jacobi(family, &x, &w, (-p.u_max, p.u_max), p.samples, &stepper)?;
            check_jacobi_metric_identity(family, &field, alpha.alpha())
        })
        .collect::<Result<Vec<_>, GeometryError>>()
        .context("jacobi fields")?;
    let max_identity_error = fields.iter().map(|r| r.max_identity_error).fold(0.0, f64::max);
    let tanh_margin_min = fields.iter().map(|r| r.tanh_margin_min).fold(f64::INFINITY, f64::min);
    let csv = csv_artifact("curvature.csv", |b| write_curvature_csv(&samples, b));
    Ok(Outcome {
        passed: alpha.alpha_squared.is_some() && fields.iter().all(|r| r.passed),
        details: json!({
            "planes": samples.len(),
            "min_k": min_k,
            "max_k": max_k,
            "alpha": to_value(&alpha),
            "fields": fields.len(),
            "max_identity_error": max_identity_error,
            "tanh_margin_min": tanh_margin_min,
            "reports": to_value(&fields),
        }),
        artifacts: vec![csv],
    })
}

fn gauss(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let p = &cfg.gauss;
    let points: Vec<_> = (0..p.geodesics).map(|id| random_fiber_point(family, &mut item_rng(cfg.seed, id))).collect();
    let report = normal_chart_gauss_check(family, &points, p.u_max, &cfg.tolerances.integration()).context("gauss")?;
    Ok(Outcome { passed: report.passed, details: to_value(&report), artifacts: vec![] })
}

fn main_theorem(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let cert = certify(cfg, family)?;
    let p = &cfg.main_theorem;
    let sample = random_isometry_sample(family, p.isometries, p.max_rapidity, cfg.seed).context("isometries")?;
    let integration: IntegrationOptions = cfg.tolerances.integration();
    let opts = ExperimentOptions {
        cover: CoverOptions { seed: cfg.seed, integration, ..CoverOptions::default() },
        ..ExperimentOptions::default()
    };
    let report = main_theorem_experiment(family, &cert, p.t1, p.epsilon, &sample, &opts).context("experiment")?;
    let witnessed = report.isometries.iter().filter(|o| o.intersects).count();
    let full = serde_json::to_vec_pretty(&report).expect("report serializes");
    Ok(Outcome {
        passed: report.passed,
        details: json!({
            "T1": report.t1,
            "epsilon": report.epsilon,
            "C_prime": report.c_prime,
            "n_cover": report.n_cover,
            "threshold": report.threshold,
            "T2": report.t2,
            "dia_T2": to_value(&report.dia_t2),
            "isometries": report.isometries.len(),
            "witnessed": witnessed,
        }),
        artifacts: vec![Artifact::new("experiment.json", full)],
    })
}

fn divergence(cfg: &RunConfig, family: &MetricFamily) -> Result<Outcome, LabError> {
    let p = &cfg.divergence;
    let action = IsometryAction::new(family.dim(), vec![Generator::Boost { axis: 1, rapidity: p.rapidity }])
        .context("boost")?;
    match divergence_proposition_check(family, &action, p.t, p.resolution, cfg.tolerances.divergence_integral) {
        Ok(report) => Ok(Outcome { passed: report.passed, details: to_value(&report), artifacts: vec![] }),
        Err(GeometryError::Precondition(reason)) => {
            let diagnostics = divergence_diagnostics(family, &action, p.resolution).context("divergence")?;
            Ok(Outcome {
                passed: false,
                details: json!({
                    "precondition_failed": reason,
                    "diagnostics": to_value(&diagnostics),
                }),
                artifacts: vec![],
            })
        }
        Err(e) => Err(e).context("divergence"),
    }
}
