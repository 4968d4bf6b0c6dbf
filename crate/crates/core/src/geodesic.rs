//! Geodesics of `h = −dt² + g_t`: integration, causal class, slab extension
//! and projection onto slices `F_T`.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::error::{GeometryError, Result};
use crate::metric_family::{quad, FiberPoint, HypothesisCertificate, MetricFamily, POLAR_CHART};
use crate::ode::{locate_crossing, DormandPrince};

/// Default tolerance on `|h(v,v)|` below which a vector counts as null.
pub const TOL_NULL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: FiberPoint,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: FiberPoint) -> Self {
        Self { t, x }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub dt: f64,
    pub dx: Vec<f64>,
}

impl TangentVector {
    pub fn new(dt: f64, dx: Vec<f64>) -> Self {
        Self { dt, dx }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { dt: k * self.dt, dx: self.dx.iter().map(|v| k * v).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.dt == 0.0 && self.dx.iter().all(|v| *v == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    Spacelike,
    Timelike,
    Null,
}

/// `h(v, w)` at `p`.
pub fn lorentz_inner(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    let g = family.metric_at(p.t, &p.x)?;
    Ok(-v.dt * w.dt + crate::metric_family::bilinear(&g, &v.dx, &w.dx))
}

/// `h(v, v)` at `p`.
pub fn lorentz_norm2(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector) -> Result<f64> {
    let g = family.metric_at(p.t, &p.x)?;
    Ok(-v.dt * v.dt + quad(&g, &v.dx))
}

/// Causal character of `v` with tolerance `tol` on `|h(v,v)|`.
pub fn causal_classify_with(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, tol: f64) -> Result<CausalClass> {
    if v.is_zero() {
        return Err(GeometryError::InvalidArgument("zero tangent vector has no causal class".into()));
    }
    let h = lorentz_norm2(family, p, v)?;
    Ok(if h.abs() <= tol {
        CausalClass::Null
    } else if h > 0.0 {
        CausalClass::Spacelike
    } else {
        CausalClass::Timelike
    })
}

pub fn causal_classify(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector) -> Result<CausalClass> {
    causal_classify_with(family, p, v, TOL_NULL)
}

/// Right-hand side of the geodesic equation: returns `(γ̇, γ̈)`.
///
/// `ẗ = −½ ∂_t g(ẋ,ẋ)` and `ẍᵏ = −Γᵏᵢⱼ ẋⁱẋʲ − (g⁻¹ ∂_t g ẋ)ᵏ ṫ`.
pub fn geodesic_rhs(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector) -> Result<(TangentVector, TangentVector)> {
    let n = family.dim();
    if v.dx.len() != n {
        return Err(GeometryError::Dimension { expected: n, got: v.dx.len() });
    }
    let y = pack(p, v);
    let d = rhs_vec(family, p.x.chart, &y)?;
    Ok((v.clone(), TangentVector::new(d[n + 1], d[n + 2..].to_vec())))
}

fn pack(p: &SpacetimePoint, v: &TangentVector) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * (p.x.dim() + 1));
    y.push(p.t);
    y.extend_from_slice(&p.x.coords);
    y.push(v.dt);
    y.extend_from_slice(&v.dx);
    y
}

fn unpack(chart: u8, y: &[f64]) -> (SpacetimePoint, TangentVector) {
    let m = y.len() / 2;
    (
        SpacetimePoint::new(y[0], FiberPoint::new(chart, y[1..m].to_vec())),
        TangentVector::new(y[m], y[m + 1..].to_vec()),
    )
}

fn rhs_vec(family: &MetricFamily, chart: u8, y: &[f64]) -> Result<Vec<f64>> {
    let n = family.dim();
    let t = y[0];
    let x = FiberPoint::new(chart, y[1..=n].to_vec());
    let dt = y[n + 1];
    let dx = &y[n + 2..];
    let geo = family.local(t, &x)?;
    let mut out = Vec::with_capacity(2 * n + 2);
    out.push(dt);
    out.extend_from_slice(dx);
    out.push(-0.5 * quad(&geo.dg, dx));
    let mut dgx = vec![0.0; n];
    for l in 0..n {
        for j in 0..n {
            dgx[l] += geo.dg[(l, j)] * dx[j];
        }
    }
    for k in 0..n {
        let mut a = 0.0;
        for i in 0..n {
            for j in 0..n {
                a -= geo.gamma[k * n * n + i * n + j] * dx[i] * dx[j];
            }
        }
        for l in 0..n {
            a -= geo.g_inv[(k, l)] * dgx[l] * dt;
        }
        out.push(a);
    }
    Ok(out)
}

/// Which sign changes of `t − level` count as events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    Up,
    Down,
    Either,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEvent {
    pub level: f64,
    pub direction: Crossing,
}

/// Level-crossing specification for [`integrate_geodesic`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub levels: Vec<LevelEvent>,
    /// Stop integrating at the first detected crossing.
    pub terminal: bool,
}

impl EventSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Stop at the first crossing of any of `levels`, in either direction.
    pub fn stop_at(levels: &[f64]) -> Self {
        Self {
            levels: levels.iter().map(|&level| LevelEvent { level, direction: Crossing::Either }).collect(),
            terminal: true,
        }
    }

    fn fires(&self, f0: f64, f1: f64, dir: Crossing) -> bool {
        let up = f0 < 0.0 && f1 >= 0.0;
        let down = f0 > 0.0 && f1 <= 0.0;
        match dir {
            Crossing::Up => up,
            Crossing::Down => down,
            Crossing::Either => up || down,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub u: f64,
    pub level: f64,
    /// Index of the sample recorded at the crossing.
    pub sample: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub u: f64,
    pub point: SpacetimePoint,
    pub velocity: TangentVector,
    pub accel: TangentVector,
    /// `h(γ̇, γ̇)` at this sample.
    pub h_norm: f64,
}

/// A sampled geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub causal: CausalClass,
    /// `h(γ̇(0), γ̇(0))`.
    pub h0: f64,
    /// `max |h(γ̇,γ̇) − h₀|` over the samples.
    pub norm_drift: f64,
    pub events: Vec<Event>,
    /// False when the norm drift exceeds the configured bound.
    pub valid: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub stepper: DormandPrince,
    pub tol_null: f64,
    /// Allowed norm drift per unit affine length.
    pub drift_per_length: f64,
    /// Bisection tolerance for event location, in `u`.
    pub event_tol: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { stepper: DormandPrince::default(), tol_null: TOL_NULL, drift_per_length: 1e-8, event_tol: 1e-10 }
    }
}

impl Trajectory {
    pub fn start(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn end(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    /// Affine parameter span `u_end − u_start`.
    pub fn affine_span(&self) -> f64 {
        self.end().u - self.start().u
    }

    /// Lorentzian length `∫ √|h(γ̇,γ̇)| du` (constant speed along a geodesic).
    pub fn length(&self) -> f64 {
        self.h0.abs().sqrt() * self.affine_span()
    }

    pub fn min_t(&self) -> f64 {
        self.samples.iter().map(|s| s.point.t).fold(f64::INFINITY, f64::min)
    }

    pub fn max_t(&self) -> f64 {
        self.samples.iter().map(|s| s.point.t).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Drift bound implied by `opts` for this trajectory's length.
    pub fn drift_bound(&self, opts: &IntegrationOptions) -> f64 {
        opts.drift_per_length * self.affine_span().max(1.0)
    }

    /// Interpolated state on interval `i` (between samples `i` and `i+1`) at
    /// fraction `s ∈ [0,1]`, expressed in the chart of sample `i + 1`.
    ///
    /// Position uses quintic Hermite interpolation from positions, velocities
    /// and accelerations; the velocity is its derivative.
    pub fn interval_state(&self, family: &MetricFamily, i: usize, s: f64) -> Result<(SpacetimePoint, TangentVector)> {
        let b = &self.samples[i + 1];
        let a = self.sample_in_chart(family, i, b.point.x.chart)?;
        let h = b.u - a.u;
        let ya = pack(&a.point, &a.velocity);
        let yb = pack(&b.point, &b.velocity);
        let m = ya.len() / 2;
        let aa = pack_accel(&a.accel);
        let ab = pack_accel(&b.accel);
        let (h0, h1, h2, h3, h4, h5) = quintic_basis(s);
        let (d0, d1, d2, d3, d4, d5) = quintic_basis_derivative(s);
        let mut pos = vec![0.0; m];
        let mut vel = vec![0.0; m];
        for k in 0..m {
            let (p0, v0, a0) = (ya[k], ya[m + k] * h, aa[k] * h * h);
            let (p1, v1, a1) = (yb[k], yb[m + k] * h, ab[k] * h * h);
            pos[k] = h0 * p0 + h1 * v0 + h2 * a0 + h3 * p1 + h4 * v1 + h5 * a1;
            vel[k] = (d0 * p0 + d1 * v0 + d2 * a0 + d3 * p1 + d4 * v1 + d5 * a1) / h;
        }
        let mut y = pos;
        y.extend(vel);
        Ok(unpack(b.point.x.chart, &y))
    }

    fn sample_in_chart(&self, family: &MetricFamily, i: usize, chart: u8) -> Result<Sample> {
        let a = &self.samples[i];
        if a.point.x.chart == chart {
            return Ok(a.clone());
        }
        let (x, dx) = family.fiber().tangent_to_chart(&a.point.x, &a.velocity.dx, chart)?;
        let point = SpacetimePoint::new(a.point.t, x);
        let velocity = TangentVector::new(a.velocity.dt, dx);
        let (_, accel) = geodesic_rhs(family, &point, &velocity)?;
        Ok(Sample { u: a.u, point, velocity, accel, h_norm: a.h_norm })
    }

    /// State at affine parameter `u` (clamped to the sampled range).
    pub fn state_at(&self, family: &MetricFamily, u: f64) -> Result<(SpacetimePoint, TangentVector)> {
        let n = self.samples.len();
        if n == 1 || u <= self.start().u {
            let s = self.start();
            return Ok((s.point.clone(), s.velocity.clone()));
        }
        if u >= self.end().u {
            let s = self.end();
            return Ok((s.point.clone(), s.velocity.clone()));
        }
        let i = self.samples.partition_point(|s| s.u <= u) - 1;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        self.interval_state(family, i, (u - a.u) / (b.u - a.u))
    }

    /// Writes the CSV dump `u,t,chart_id,x1..,dt,dx1..,h_norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.samples.first().map(|s| s.point.x.dim()).unwrap_or(0);
        let mut header = vec!["u".to_string(), "t".into(), "chart_id".into()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("dt".into());
        header.extend((1..=n).map(|i| format!("dx{i}")));
        header.push("h_norm".into());
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{:.16e}", s.u), format!("{:.16e}", s.point.t), s.point.x.chart.to_string()];
            row.extend(s.point.x.coords.iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", s.velocity.dt));
            row.extend(s.velocity.dx.iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", s.h_norm));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Reads the rows of a trajectory CSV dump as `(u, point, velocity, h_norm)`.
pub fn read_trajectory_csv<R: BufRead>(r: R) -> Result<Vec<(f64, SpacetimePoint, TangentVector, f64)>> {
    let bad = |m: String| GeometryError::InvalidArgument(format!("trajectory csv: {m}"));
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?.map_err(|e| bad(e.to_string()))?;
    let cols = header.split(',').count();
    if cols < 7 || (cols - 5) % 2 != 0 {
        return Err(bad(format!("unexpected header {header}")));
    }
    let n = (cols - 5) / 2;
    let mut out = Vec::new();
    for line in lines {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols {
            return Err(bad(format!("row has {} fields, expected {cols}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
        let chart = f[2].trim().parse::<u8>().map_err(|e| bad(e.to_string()))?;
        let coords = f[3..3 + n].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let dx = f[4 + n..4 + 2 * n].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        out.push((
            num(f[0])?,
            SpacetimePoint::new(num(f[1])?, FiberPoint::new(chart, coords)),
            TangentVector::new(num(f[3 + n])?, dx),
            num(f[cols - 1])?,
        ));
    }
    Ok(out)
}

fn pack_accel(a: &TangentVector) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.dx.len() + 1);
    v.push(a.dt);
    v.extend_from_slice(&a.dx);
    v
}

fn quintic_basis(s: f64) -> (f64, f64, f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    (
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        0.5 * s3 - s4 + 0.5 * s5,
    )
}

fn quintic_basis_derivative(s: f64) -> (f64, f64, f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    (
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        1.5 * s2 - 4.0 * s3 + 2.5 * s4,
    )
}

fn make_sample(family: &MetricFamily, u: f64, chart: u8, y: &[f64], dy: &[f64]) -> Result<Sample> {
    let (point, velocity) = unpack(chart, y);
    let m = y.len() / 2;
    let accel = TangentVector::new(dy[m], dy[m + 1..].to_vec());
    let h_norm = lorentz_norm2(family, &point, &velocity)?;
    Ok(Sample { u, point, velocity, accel, h_norm })
}

/// Integrates the geodesic from `(start, v0)` over `u ∈ [0, u_max]`, stopping
/// early at terminal events. Sphere charts are switched when the coordinates
/// leave the inner 80% of the chart; the recorded samples carry their chart.
pub fn integrate_geodesic(
    family: &MetricFamily,
    start: &SpacetimePoint,
    v0: &TangentVector,
    u_max: f64,
    events: &EventSpec,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    let n = family.dim();
    if v0.dx.len() != n {
        return Err(GeometryError::Dimension { expected: n, got: v0.dx.len() });
    }
    if v0.is_zero() {
        return Err(GeometryError::InvalidArgument("zero initial velocity".into()));
    }
    if !(u_max >= 0.0) || v0.dx.iter().any(|v| !v.is_finite()) || !v0.dt.is_finite() {
        return Err(GeometryError::InvalidArgument("non-finite initial data or negative u_max".into()));
    }
    family.fiber().validate(&start.x)?;
    let (mut x0, mut dx0) = (start.x.clone(), v0.dx.clone());
    if x0.chart == POLAR_CHART || family.fiber().needs_chart_switch(&x0) {
        let target = if x0.chart == POLAR_CHART {
            family.fiber().switch_target(&x0)
        } else {
            family.fiber().canonical(&x0)?.chart
        };
        let (x, dx) = family.fiber().tangent_to_chart(&x0, &dx0, target)?;
        x0 = x;
        dx0 = dx;
    }
    let first = SpacetimePoint::new(start.t, x0);
    let vel = TangentVector::new(v0.dt, dx0);
    let h0 = lorentz_norm2(family, &first, &vel)?;
    let causal = causal_classify_with(family, &first, &vel, opts.tol_null)?;

    let dp = opts.stepper;
    let mut chart = first.x.chart;
    let mut y = pack(&first, &vel);
    let mut u = 0.0;
    let mut dy = rhs_vec(family, chart, &y)?;
    let mut samples = vec![make_sample(family, u, chart, &y, &dy)?];
    let mut found = Vec::new();
    let mut h = dp.h_max.min(0.01);
    let mut stop = false;

    while u < u_max && !stop {
        let remaining = u_max - u;
        let mut rhs = |uu: f64, yy: &[f64]| {
            let _ = uu;
            rhs_vec(family, chart, yy)
        };
        let attempt = h.min(remaining);
        let (mut step, next) = match dp.advance(&mut rhs, u, &y, &dy, attempt) {
            Ok(r) => r,
            Err(GeometryError::ChartDomain { .. }) if attempt > dp.h_min * 4.0 => {
                h = attempt * 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        h = next;

        // earliest event within this step
        let mut hit: Option<(f64, f64)> = None;
        for ev in &events.levels {
            let f0 = y[0] - ev.level;
            let f1 = step.y[0] - ev.level;
            if events.fires(f0, f1, ev.direction) {
                let mut eval = |hh: f64| -> Result<(f64, f64)> {
                    if hh == 0.0 {
                        return Ok((f0, y[n + 1]));
                    }
                    let s = dp.trial(&mut rhs, u, &y, &dy, hh)?;
                    Ok((s.y[0] - ev.level, s.y[n + 1]))
                };
                let mut root = locate_crossing(|hh| eval(hh).map(|r| r.0), f0, step.h, opts.event_tol)?;
                // one Newton polish on the bracketed root
                let (fr, slope) = eval(root)?;
                if slope.abs() > 1e-12 {
                    let polished = root - fr / slope;
                    if polished > 0.0 && polished <= step.h && eval(polished)?.0.abs() <= fr.abs() {
                        root = polished;
                    }
                }
                if hit.map_or(true, |(r, _)| root < r) {
                    hit = Some((root, ev.level));
                }
            }
        }
        if let Some((root, level)) = hit {
            if root < step.h {
                step = dp.trial(&mut rhs, u, &y, &dy, root.max(1e-300))?;
            }
            u += step.h;
            y = step.y;
            dy = step.dy;
            samples.push(make_sample(family, u, chart, &y, &dy)?);
            found.push(Event { u, level, sample: samples.len() - 1 });
            if events.terminal {
                stop = true;
            }
        } else {
            u = if step.h >= remaining { u_max } else { u + step.h };
            y = step.y;
            dy = step.dy;
            samples.push(make_sample(family, u, chart, &y, &dy)?);
        }

        let xp = FiberPoint::new(chart, y[1..=n].to_vec());
        if family.fiber().needs_chart_switch(&xp) {
            let target = family.fiber().switch_target(&xp);
            let (x, dx) = family.fiber().tangent_to_chart(&xp, &y[n + 2..], target)?;
            chart = target;
            y[1..=n].copy_from_slice(&x.coords);
            y[n + 2..].copy_from_slice(&dx);
            dy = rhs_vec(family, chart, &y)?;
        }
        if samples.len() > 5_000_000 {
            return Err(GeometryError::Integration { u, reason: "sample limit exceeded".into() });
        }
    }

    let norm_drift = samples.iter().map(|s| (s.h_norm - h0).abs()).fold(0.0, f64::max);
    let mut traj = Trajectory { samples, causal, h0, norm_drift, events: found, valid: true };
    traj.valid = traj.norm_drift <= traj.drift_bound(opts);
    Ok(traj)
}

/// Reverses the orientation of a trajectory: `u ↦ u_end − u`, `γ̇ ↦ −γ̇`.
pub fn reverse(traj: &Trajectory) -> Trajectory {
    let u_end = traj.end().u;
    let u_start = traj.start().u;
    let samples: Vec<Sample> = traj
        .samples
        .iter()
        .rev()
        .map(|s| Sample {
            u: u_end - s.u + u_start,
            point: s.point.clone(),
            velocity: s.velocity.scaled(-1.0),
            accel: s.accel.clone(),
            h_norm: s.h_norm,
        })
        .collect();
    let last = samples.len() - 1;
    let events = traj
        .events
        .iter()
        .rev()
        .map(|e| Event { u: u_end - e.u + u_start, level: e.level, sample: last - e.sample })
        .collect();
    Trajectory { samples, events, ..traj.clone() }
}

/// Joins `b` after `a` (the end of `a` must be the start of `b`), shifting
/// `b`'s parameter so it continues `a`'s.
pub fn concatenate(a: &Trajectory, b: &Trajectory) -> Trajectory {
    let mut r = a.clone();
    let offset = r.end().u - b.start().u;
    let base = r.samples.len() - 1;
    r.samples.extend(b.samples.iter().skip(1).map(|s| Sample { u: s.u + offset, ..s.clone() }));
    r.events.extend(b.events.iter().map(|e| Event { u: e.u + offset, level: e.level, sample: e.sample + base }));
    r.norm_drift = r.norm_drift.max(b.norm_drift);
    r.valid = a.valid && b.valid;
    r
}

/// Extends a spacelike geodesic seed lying in `|t| ≥ T` (on one side) in both
/// directions until each end reaches the slice `F_{±T}`. The result has unit
/// speed and `u` starting at 0.
pub fn maximal_slab_extension(
    family: &MetricFamily,
    certificate: &HypothesisCertificate,
    seed: &Trajectory,
    big_t: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    if seed.causal != CausalClass::Spacelike || seed.h0 <= 0.0 {
        return Err(GeometryError::Precondition("slab extension needs a spacelike seed".into()));
    }
    if !(big_t > certificate.t0()) {
        return Err(GeometryError::Precondition(format!(
            "slice level {big_t} must exceed t0 = {}",
            certificate.t0()
        )));
    }
    let side = seed.start().point.t.signum();
    let level = side * big_t;
    if seed.samples.iter().any(|s| side * s.point.t < big_t - 1e-8) {
        return Err(GeometryError::Precondition(format!(
            "seed leaves the region |t| ≥ {big_t}"
        )));
    }
    let budget = 2.0 * certificate.length_bound();
    let scale = 1.0 / seed.h0.sqrt();
    let p0 = seed.start().point.clone();
    let v0 = seed.start().velocity.scaled(scale);
    // events: leaving the region `side·t ≥ T`
    let exit = EventSpec {
        levels: vec![LevelEvent { level, direction: if side > 0.0 { Crossing::Down } else { Crossing::Up } }],
        terminal: true,
    };
    let on_slice = (p0.t - level).abs() <= 1e-8;
    let outward = |v: &TangentVector| side * v.dt < 0.0;

    let back_v = v0.scaled(-1.0);
    let backward = if on_slice && outward(&back_v) {
        None
    } else {
        let tr = integrate_geodesic(family, &p0, &back_v, budget, &exit, opts)?;
        if tr.events.is_empty() {
            return Err(GeometryError::Anomaly(format!(
                "backward extension did not reach F_T within affine budget {budget}"
            )));
        }
        Some(tr)
    };
    let used = backward.as_ref().map_or(0.0, |t| t.affine_span());
    let forward = if on_slice && outward(&v0) && backward.is_some() {
        None
    } else {
        let tr = integrate_geodesic(family, &p0, &v0, budget - used, &exit, opts)?;
        if tr.events.is_empty() {
            return Err(GeometryError::Anomaly(format!(
                "forward extension did not reach F_T within affine budget {budget}"
            )));
        }
        Some(tr)
    };
    let mut out = match (backward, forward) {
        (Some(b), Some(f)) => concatenate(&reverse(&b), &f),
        (Some(b), None) => reverse(&b),
        (None, Some(f)) => f,
        (None, None) => unreachable!("at least one direction is integrated"),
    };
    out.valid = out.norm_drift <= out.drift_bound(opts);
    Ok(out)
}

/// Projection of a trajectory onto `F_T` with its `g_T` length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub points: Vec<FiberPoint>,
    pub length: f64,
    /// `|L₅ − L₃|` summed over intervals (5- vs 3-point Gauss–Legendre).
    pub error_estimate: f64,
}

const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.0, 0.888_888_888_888_888_9),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// `L(π_T γ) = ∫ √(g_T(γ̇_F, γ̇_F)) du` by Gauss–Legendre quadrature on each
/// sample interval of the interpolated trajectory.
pub fn project_and_measure(family: &MetricFamily, traj: &Trajectory, big_t: f64) -> Result<Projection> {
    let points = traj.samples.iter().map(|s| s.point.x.clone()).collect();
    let mut length = 0.0;
    let mut err = 0.0;
    let speed = |i: usize, s: f64| -> Result<f64> {
        let (p, v) = traj.interval_state(family, i, s)?;
        let g = family.metric_at(big_t, &p.x)?;
        Ok(quad(&g, &v.dx).max(0.0).sqrt())
    };
    for i in 0..traj.samples.len().saturating_sub(1) {
        let h = traj.samples[i + 1].u - traj.samples[i].u;
        if h <= 0.0 {
            continue;
        }
        let mut l5 = 0.0;
        for (node, w) in GL5 {
            l5 += w * speed(i, 0.5 * (node + 1.0))?;
        }
        let mut l3 = 0.0;
        for (node, w) in GL3 {
            l3 += w * speed(i, 0.5 * (node + 1.0))?;
        }
        length += 0.5 * h * l5;
        err += 0.5 * h * (l5 - l3).abs();
    }
    Ok(Projection { points, length, error_estimate: err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_family::{Fiber, Warp};

    #[test]
    fn rhs_at_de_sitter_example() {
        // t = 1, ṫ = 0, unit ẋ: ẗ = −cosh(1) sinh(1) / cosh²(1) = −tanh(1)
        let f = MetricFamily::de_sitter(1);
        let p = SpacetimePoint::new(1.0, FiberPoint::angles(vec![0.0]));
        let v = TangentVector::new(0.0, vec![1.0 / 1f64.cosh()]);
        let (_, a) = geodesic_rhs(&f, &p, &v).unwrap();
        assert!((a.dt + 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn vertical_geodesic_is_straight() {
        let f = MetricFamily::de_sitter(2);
        let p = SpacetimePoint::new(0.0, FiberPoint::new(0, vec![0.3, -0.2]));
        let v = TangentVector::new(1.0, vec![0.0, 0.0]);
        let tr = integrate_geodesic(&f, &p, &v, 3.0, &EventSpec::none(), &Default::default()).unwrap();
        for s in &tr.samples {
            assert_eq!(s.point.x.coords, vec![0.3, -0.2]);
            assert!((s.point.t - s.u).abs() < 1e-13);
        }
        assert_eq!(tr.causal, CausalClass::Timelike);
    }

    #[test]
    fn classify_examples() {
        let f = MetricFamily::de_sitter(1);
        let p = SpacetimePoint::new(0.0, FiberPoint::angles(vec![0.0]));
        assert_eq!(causal_classify(&f, &p, &TangentVector::new(1.0, vec![0.0])).unwrap(), CausalClass::Timelike);
        assert_eq!(causal_classify(&f, &p, &TangentVector::new(0.0, vec![1.0])).unwrap(), CausalClass::Spacelike);
        assert_eq!(causal_classify(&f, &p, &TangentVector::new(1.0, vec![1.0])).unwrap(), CausalClass::Null);
        assert!(causal_classify(&f, &p, &TangentVector::new(0.0, vec![0.0])).is_err());
    }

    #[test]
    fn constant_family_has_linear_time() {
        let f = MetricFamily::warped(Warp::Constant, Fiber::Torus { dim: 2 }).unwrap();
        let p = SpacetimePoint::new(0.5, FiberPoint::angles(vec![0.0, 0.0]));
        let v = TangentVector::new(0.3, vec![1.0, 2.0]);
        let tr = integrate_geodesic(&f, &p, &v, 4.0, &EventSpec::none(), &Default::default()).unwrap();
        let e = tr.end();
        assert!((e.point.t - (0.5 + 0.3 * 4.0)).abs() < 1e-12);
        assert!((e.point.x.coords[1] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn fiber_circle_projection_length() {
        // a curve at fixed t traversing S¹ once: projected length 2π cosh T
        let f = MetricFamily::warped(Warp::Constant, Fiber::Sphere { dim: 1 }).unwrap();
        let p = SpacetimePoint::new(0.0, FiberPoint::angles(vec![0.0]));
        let v = TangentVector::new(0.0, vec![1.0]);
        let tr = integrate_geodesic(&f, &p, &v, std::f64::consts::TAU, &EventSpec::none(), &Default::default()).unwrap();
        let big_t = 1.3;
        let de_sitter = MetricFamily::de_sitter(1);
        let pr = project_and_measure(&de_sitter, &tr, big_t).unwrap();
        assert!((pr.length - std::f64::consts::TAU * big_t.cosh()).abs() < 1e-10);
    }

    #[test]
    fn event_locates_level() {
        let f = MetricFamily::de_sitter(1);
        let p = SpacetimePoint::new(2.0, FiberPoint::angles(vec![0.0]));
        let v = TangentVector::new(0.0, vec![1.0 / 2f64.cosh()]);
        let tr = integrate_geodesic(&f, &p, &v, 10.0, &EventSpec::stop_at(&[1.0]), &Default::default()).unwrap();
        assert_eq!(tr.events.len(), 1);
        assert!((tr.end().point.t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip() {
        let f = MetricFamily::de_sitter(2);
        let p = SpacetimePoint::new(1.0, FiberPoint::new(0, vec![0.1, 0.2]));
        let v = TangentVector::new(0.1, vec![0.3, 0.0]);
        let tr = integrate_geodesic(&f, &p, &v, 1.0, &EventSpec::none(), &Default::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let rows = read_trajectory_csv(&buf[..]).unwrap();
        assert_eq!(rows.len(), tr.samples.len());
        for (row, s) in rows.iter().zip(&tr.samples) {
            assert!((row.0 - s.u).abs() <= 1e-15 * s.u.abs().max(1.0));
            assert!((row.1.x.coords[0] - s.point.x.coords[0]).abs() < 1e-15);
        }
    }
}
