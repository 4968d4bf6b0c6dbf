//! Acceptance run: twelve criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every criterion executes and reports
//! even when an earlier one fails. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use lorentz_core::comparison::{item_rng, random_fiber_point};
use lorentz_core::geodesic::{
    integrate_geodesic, lorentz_norm2, EventSpec, IntegrationOptions, SpacetimePoint, TangentVector, Trajectory,
};
use lorentz_core::metric_family::{quad, wrap_delta};
use lorentz_core::MetricFamily;
use lorentz_lab::{emit_report, run_suite, RunConfig, Suite, SuiteReport};
use rand::Rng;
use serde_json::Value;

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{e}"))
}

fn run(cfg: &RunConfig, suite: Suite) -> Result<SuiteReport, String> {
    run_suite(cfg, suite).map_err(|e| e.to_string())
}

fn num(v: &Value, path: &str) -> f64 {
    path.split('.')
        .fold(v, |v, k| &v[k])
        .as_f64()
        .unwrap_or_else(|| panic!("missing number at {path}"))
}

struct Verdict {
    passed: bool,
    note: String,
}

fn verdict(passed: bool, note: impl Into<String>) -> Result<Verdict, String> {
    Ok(Verdict { passed, note: note.into() })
}

/// Shared state: trajectories reused by the norm-conservation criterion.
#[derive(Default)]
struct Ctx {
    suite2_drift: Vec<f64>,
    oracle_drift: Vec<f64>,
}

fn c1(_: &mut Ctx) -> Result<Verdict, String> {
    let started = Instant::now();
    let mut ds = config("ds2.toml");
    ds.certificate.c = None;
    let r = run(&ds, Suite::Hypothesis)?;
    let c = num(&r.details, "c");
    let exact = 1f64.tanh();
    let constant = run(&config("constant.toml"), Suite::Hypothesis)?;
    let rejected = constant.details["certified"] == Value::Bool(false);
    let elapsed = started.elapsed();
    verdict(
        r.passed && (c - exact).abs() <= 1e-12 && rejected && elapsed < Duration::from_secs(5),
        format!("c = {c:.15} (|c - tanh 1| = {:.1e}), constant rejected = {rejected}", (c - exact).abs()),
    )
}

fn c2(ctx: &mut Ctx) -> Result<Verdict, String> {
    let started = Instant::now();
    let bound = PI / 1f64.tanh();
    let ds = run(&config("ds2.toml"), Suite::Lemma21)?;
    let d = &ds.details;
    let count = num(d, "bound.sample_count") as usize;
    let observed = num(d, "bound.observed_max");
    let rejected = d["bound"]["rejected"].as_array().map_or(0, Vec::len);
    let bump = run(&config("bump.toml"), Suite::Lemma21)?;
    let b = &bump.details;
    let bump_bound = PI / num(b, "c");
    let bump_observed = num(b, "bound.observed_max");
    let bump_count = num(b, "bound.sample_count") as usize;
    ctx.suite2_drift.push(num(d, "drift.max_drift_per_length"));
    ctx.suite2_drift.push(num(b, "drift.max_drift_per_length"));
    let elapsed = started.elapsed();
    verdict(
        ds.passed
            && bump.passed
            && count >= 1000
            && bump_count >= 1000
            && rejected == 0
            && observed < bound
            && bump_observed < bump_bound
            && elapsed < Duration::from_secs(60),
        format!(
            "de Sitter max length {observed:.5} < {bound:.5} over {count}; bump {bump_observed:.5} < {bump_bound:.5} over {bump_count}"
        ),
    )
}

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

/// Geodesic of the hyperboloid `−x₀² + x₁² + x₂² = 1` through `x0` with velocity `v0`.
fn hyperboloid_geodesic(x0: &[f64], v0: &[f64], h: f64, s: f64) -> Vec<f64> {
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

fn initial(family: &MetricFamily, class: usize, rng: &mut impl Rng) -> (SpacetimePoint, TangentVector) {
    let p = SpacetimePoint::new(rng.gen_range(-1.5..1.5), random_fiber_point(family, rng));
    let g = family.metric_at(p.t, &p.x).unwrap();
    let dir = [rng.gen_range(-1.0..1.0)];
    let unit = dir[0] / quad(&g, &dir).sqrt();
    let v = match class {
        0 => {
            let a: f64 = rng.gen_range(-1.0..1.0);
            TangentVector::new(a, vec![(1.0 + a * a).sqrt() * unit])
        }
        1 => {
            let b: f64 = rng.gen_range(0.0..1.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            TangentVector::new(sign * (1.0 + b * b).sqrt(), vec![b * unit])
        }
        _ => TangentVector::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, vec![unit]),
    };
    (p, v)
}

fn c3(ctx: &mut Ctx) -> Result<Verdict, String> {
    let family = MetricFamily::de_sitter(1);
    let opts: IntegrationOptions = config("ds2.toml").tolerances.integration();
    let mut worst: f64 = 0.0;
    let mut classes = [0usize; 3];
    for id in 0..200 {
        let mut rng = item_rng(3, id);
        let class = id % 3;
        let (p, v) = initial(&family, class, &mut rng);
        let h = lorentz_norm2(&family, &p, &v).map_err(|e| e.to_string())?;
        let x0 = embed(&family, &p);
        let v0 = embed_velocity(&family, &p, &v);
        let traj: Trajectory = integrate_geodesic(&family, &p, &v, 10.0, &EventSpec::stop_at(&[-12.0, 12.0]), &opts)
            .map_err(|e| e.to_string())?;
        classes[class] += 1;
        for s in &traj.samples {
            let x = hyperboloid_geodesic(&x0, &v0, h, s.u);
            let t = x[0].asinh();
            let angle = x[2].atan2(x[1]);
            let err = (t - s.point.t).abs().max(wrap_delta(angle, s.point.x.coords[0]).abs());
            worst = worst.max(err);
        }
        ctx.oracle_drift.push(traj.norm_drift / traj.affine_span().max(1.0));
    }
    verdict(
        worst <= 1e-6,
        format!("max chart deviation {worst:.2e} over 200 geodesics (spacelike/timelike/null = {classes:?})"),
    )
}

fn c4(ctx: &mut Ctx) -> Result<Verdict, String> {
    if ctx.suite2_drift.is_empty() || ctx.oracle_drift.is_empty() {
        return Err("needs the trajectories of criteria 2 and 3".into());
    }
    let s2 = ctx.suite2_drift.iter().copied().fold(0.0, f64::max);
    let s3 = ctx.oracle_drift.iter().copied().fold(0.0, f64::max);
    verdict(s2 <= 1e-8 && s3 <= 1e-8, format!("max drift per unit length: suite 2 {s2:.2e}, suite 3 {s3:.2e}"))
}

fn c5(_: &mut Ctx) -> Result<Verdict, String> {
    let cfg = config("ds2.toml");
    let c_prime = (PI + 1.0) / 1f64.tanh();
    let proj = run(&cfg, Suite::Lemma22)?;
    let observed = num(&proj.details, "bound.observed_max");
    let end = run(&cfg, Suite::Cor24)?;
    let sides = end.details["sides"].as_array().ok_or("missing sides")?;
    let mut samples = 0;
    let mut worst: f64 = 0.0;
    let mut ok = end.passed;
    for s in sides {
        samples += num(s, "bound.sample_count") as usize;
        let d = num(s, "bound.observed_max");
        let tol = num(s, "bound.net_error");
        worst = worst.max(d);
        ok &= d <= 2.0 * c_prime + tol;
    }
    verdict(
        proj.passed && observed <= c_prime && ok && samples >= 500,
        format!("projection max {observed:.5} <= C' = {c_prime:.5}; endpoint max {worst:.5} <= 2C' over {samples} at T = 1.5"),
    )
}

fn c6(_: &mut Ctx) -> Result<Verdict, String> {
    let started = Instant::now();
    let r = run(&config("random-covers.toml"), Suite::Lemma31)?;
    let n = num(&r.details, "instances") as usize;
    let ok = num(&r.details, "passed_count") as usize;
    let hand = r.details["hand"].as_array().map_or(0, Vec::len);
    let elapsed = started.elapsed();
    verdict(
        r.passed && n == 1000 && ok == n && hand >= 2 && elapsed < Duration::from_secs(60),
        format!("{ok}/{n} random covers, {hand} hand instances, max dia/sum {:.4}", num(&r.details, "max_ratio")),
    )
}

fn c7(_: &mut Ctx) -> Result<Verdict, String> {
    let r = run(&config("ds2.toml"), Suite::Growth)?;
    let points = r.details["curve"]["points"].as_array().ok_or("missing points")?;
    let mut worst: f64 = 0.0;
    for p in points {
        let t = num(p, "T");
        let exact = PI * t.cosh();
        let est = 0.5 * (num(p, "lower") + num(p, "upper"));
        worst = worst.max((est - exact).abs() / exact);
    }
    let growth = r.details["curve"]["growth_passed"] == Value::Bool(true);
    verdict(
        r.passed && growth && points.len() == 3 && worst <= 0.02,
        format!("max relative diameter error {worst:.2e} at T = 1, 2, 3; growth ratios ok = {growth}"),
    )
}

fn c8(_: &mut Ctx) -> Result<Verdict, String> {
    let r = run(&config("ds2.toml"), Suite::Jacobi)?;
    let d = &r.details;
    let k_err = (num(d, "min_k") - 1.0).abs().max((num(d, "max_k") - 1.0).abs());
    let identity = num(d, "max_identity_error");
    let margin = num(d, "tanh_margin_min");
    let planes = num(d, "planes") as usize;
    verdict(
        r.passed && planes >= 100 && k_err <= 1e-6 && identity <= 1e-6 && margin >= 0.0,
        format!("|K - 1| <= {k_err:.1e} on {planes} planes; identity error {identity:.1e}; tanh margin {margin:.3e}"),
    )
}

fn c9(_: &mut Ctx) -> Result<Verdict, String> {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["ds2.toml", "bump.toml"] {
        let r = run(&config(name), Suite::Gauss)?;
        let cross = num(&r.details, "max_cross_term");
        let n = num(&r.details, "geodesics") as usize;
        ok &= r.passed && cross <= 1e-6 && n >= 50;
        notes.push(format!("{name}: {cross:.1e} over {n}"));
    }
    verdict(ok, format!("max cross term {}", notes.join(", ")))
}

fn c10(_: &mut Ctx) -> Result<Verdict, String> {
    let started = Instant::now();
    let r = run(&config("ds2.toml"), Suite::MainTheorem)?;
    let d = &r.details;
    let lower = num(d, "dia_T2.lower");
    let threshold = 2.0 * num(d, "n_cover") * num(d, "C_prime");
    let total = num(d, "isometries") as usize;
    let witnessed = num(d, "witnessed") as usize;
    let elapsed = started.elapsed();
    verdict(
        r.passed && lower > threshold && total == 100 && witnessed == total && elapsed < Duration::from_secs(600),
        format!("T2 = {}, dia >= {lower:.2} > {threshold:.2}; witnesses {witnessed}/{total}", num(d, "T2")),
    )
}

fn c11(_: &mut Ctx) -> Result<Verdict, String> {
    let r = run(&config("ds2.toml"), Suite::Divergence)?;
    let d = &r.details;
    let note = match d.get("precondition_failed") {
        Some(reason) => {
            let g = &d["diagnostics"];
            format!(
                "{}; trace < 0 at {}/{} samples, sign(trace) = -sign(t) at {}/{}, integral {:.1e}",
                reason.as_str().unwrap_or("precondition failed"),
                g["negative_trace"],
                g["samples"],
                g["sign_matches_minus_t"],
                g["signed_samples"],
                num(g, "integral")
            )
        }
        None => format!(
            "trace negative everywhere = {}, integral {:.1e}",
            d["trace_negative_everywhere"],
            num(d, "diagnostics.integral")
        ),
    };
    verdict(r.passed, note)
}

fn c12(_: &mut Ctx) -> Result<Verdict, String> {
    let cfg = config("ds2.toml");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for suite in [Suite::Hypothesis, Suite::Lemma21, Suite::Cor24, Suite::Lemma32, Suite::Growth, Suite::Jacobi] {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{}-{k}", suite.name()));
            emit_report(&run(&cfg, suite)?, &out).map_err(|e| e.to_string())?;
            let mut files: Vec<_> = std::fs::read_dir(&out)
                .map_err(|e| e.to_string())?
                .map(|e| e.unwrap().path())
                .filter(|p| p.file_name().is_some_and(|n| n != "timing.json"))
                .collect();
            files.sort();
            bytes.push(files.iter().map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap())).collect::<Vec<_>>());
        }
        compared += bytes[0].len();
        if bytes[0] != bytes[1] {
            mismatched.push(suite.name());
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{compared} report and side files byte-identical across reruns; mismatched: {mismatched:?}"),
    )
}

type Criterion = fn(&mut Ctx) -> Result<Verdict, String>;

fn main() {
    let criteria: [(&str, &str, Criterion); 12] = [
        ("C1", "hypothesis certification", c1),
        ("C2", "confined geodesic length", c2),
        ("C3", "hyperboloid oracle", c3),
        ("C4", "norm conservation", c4),
        ("C5", "projection and endpoint bounds", c5),
        ("C6", "cover subadditivity", c6),
        ("C7", "diameter fidelity and growth", c7),
        ("C8", "curvature and Jacobi fields", c8),
        ("C9", "normal chart cross terms", c9),
        ("C10", "isometry witnesses", c10),
        ("C11", "divergence check", c11),
        ("C12", "determinism", c12),
    ];
    let mut ctx = Ctx::default();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let started = Instant::now();
        let outcome = f(&mut ctx);
        let secs = started.elapsed().as_secs_f64();
        let (passed, note) = match outcome {
            Ok(v) => (v.passed, v.note),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!("{id:<4}{} {name} ({secs:.1} s): {note}", if passed { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {}/12 passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
