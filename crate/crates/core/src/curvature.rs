//! Spacetime curvature, Jacobi fields along vertical geodesics `u ↦ (u, x)`,
//! the concavity sign of `t` along spacelike geodesics, and the Gauss-form
//! check for the normal chart over `F₀`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::comparison::{item_rng, random_fiber_point, random_unit_direction};
use crate::error::{GeometryError, Result};
use crate::geodesic::{
    geodesic_rhs, integrate_geodesic, lorentz_inner, lorentz_norm2, EventSpec, IntegrationOptions,
    SpacetimePoint, TangentVector, Trajectory,
};
use crate::metric_family::{quad, FiberPoint, MetricFamily};
use crate::ode::DormandPrince;
use crate::sampling;

/// Base step for finite differences of Christoffel symbols.
pub const FD_CHRISTOFFEL_STEP: f64 = 1e-4;
/// Relative Gram-determinant threshold below which a plane is degenerate.
pub const DEGENERATE_TOL: f64 = 1e-10;

/// Christoffel symbols of `h = −dt² + g_t` in coordinates `(t, x¹, …, xⁿ)`,
/// flattened `Γᵃ_bc → [a*m*m + b*m + c]` with `m = n + 1`.
pub fn spacetime_christoffels(family: &MetricFamily, t: f64, x: &FiberPoint) -> Result<Vec<f64>> {
    let n = family.dim();
    let m = n + 1;
    let geo = family.local(t, x)?;
    let mut gam = vec![0.0; m * m * m];
    let s = &geo.g_inv * &geo.dg * 0.5;
    for i in 0..n {
        for j in 0..n {
            gam[(i + 1) * m + (j + 1)] = 0.5 * geo.dg[(i, j)];
            gam[(i + 1) * m * m + (j + 1)] = s[(i, j)];
            gam[(i + 1) * m * m + (j + 1) * m] = s[(i, j)];
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gam[(k + 1) * m * m + (i + 1) * m + (j + 1)] = geo.gamma[k * n * n + i * n + j];
            }
        }
    }
    Ok(gam)
}

fn shifted(t: f64, x: &FiberPoint, dir: usize, h: f64) -> (f64, FiberPoint) {
    if dir == 0 {
        (t + h, x.clone())
    } else {
        let mut y = x.clone();
        y.coords[dir - 1] += h;
        (t, y)
    }
}

/// Riemann tensor `Rᵃ_bcd = ∂_c Γᵃ_db − ∂_d Γᵃ_cb + Γᵃ_ce Γᵉ_db − Γᵃ_de Γᵉ_cb`
/// from central differences of the Christoffel symbols with one Richardson
/// extrapolation. Flattened `[((a*m + b)*m + c)*m + d]`.
pub fn riemann_fd(family: &MetricFamily, t: f64, x: &FiberPoint, step: f64) -> Result<Vec<f64>> {
    let m = family.dim() + 1;
    let gam = spacetime_christoffels(family, t, x)?;
    let mut dgam = vec![0.0; m * m * m * m]; // [c][a][b][d] = ∂_c Γᵃ_bd
    for c in 0..m {
        let central = |h: f64| -> Result<Vec<f64>> {
            let (tp, xp) = shifted(t, x, c, h);
            let (tm, xm) = shifted(t, x, c, -h);
            let gp = spacetime_christoffels(family, tp, &xp)?;
            let gm = spacetime_christoffels(family, tm, &xm)?;
            Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let d1 = central(step)?;
        let d2 = central(0.5 * step)?;
        for k in 0..m * m * m {
            dgam[c * m * m * m + k] = (4.0 * d2[k] - d1[k]) / 3.0;
        }
    }
    let g = |a: usize, b: usize, c: usize| gam[a * m * m + b * m + c];
    let dg = |c: usize, a: usize, b: usize, d: usize| dgam[c * m * m * m + a * m * m + b * m + d];
    let mut r = vec![0.0; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut v = dg(c, a, d, b) - dg(d, a, c, b);
                    for e in 0..m {
                        v += g(a, c, e) * g(e, d, b) - g(a, d, e) * g(e, c, b);
                    }
                    r[((a * m + b) * m + c) * m + d] = v;
                }
            }
        }
    }
    Ok(r)
}

fn full(v: &TangentVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.dx.len() + 1);
    out.push(v.dt);
    out.extend_from_slice(&v.dx);
    out
}

fn gram(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, w: &TangentVector) -> Result<(f64, f64, f64)> {
    let hvv = lorentz_norm2(family, p, v)?;
    let hww = lorentz_norm2(family, p, w)?;
    let hvw = lorentz_inner(family, p, v, w)?;
    let q = hvv * hww - hvw * hvw;
    let scale = (hvv * hww).abs() + hvw * hvw + (v.dt * v.dt + crate::metric_family::norm2(&v.dx))
        * (w.dt * w.dt + crate::metric_family::norm2(&w.dx))
        * 1e-30;
    if q.abs() <= DEGENERATE_TOL * scale {
        return Err(GeometryError::DegeneratePlane(q));
    }
    Ok((hvv, hww, hvw))
}

/// `h(R(v,w)w, v)` from the finite-difference Riemann tensor.
pub fn curvature_form_fd(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    let m = family.dim() + 1;
    let r = riemann_fd(family, p.t, &p.x, FD_CHRISTOFFEL_STEP)?;
    let (vv, ww) = (full(v), full(w));
    // (R(v,w)w)ᵃ = Rᵃ_bcd wᵇ vᶜ wᵈ
    let mut rvw = vec![0.0; m];
    for (a, slot) in rvw.iter_mut().enumerate() {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    *slot += r[((a * m + b) * m + c) * m + d] * ww[b] * vv[c] * ww[d];
                }
            }
        }
    }
    let z = TangentVector::new(rvw[0], rvw[1..].to_vec());
    lorentz_inner(family, p, &z, v)
}

/// Sectional curvature from finite differences of the Christoffel symbols.
pub fn sectional_curvature_fd(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    let (hvv, hww, hvw) = gram(family, p, v, w)?;
    Ok(curvature_form_fd(family, p, v, w)? / (hvv * hww - hvw * hvw))
}

/// Closed-form sectional curvature of `−dt² + f(t)² g₀` with `g₀` of constant
/// curvature `k`: with `A = (k + f′²)/f²`, `D = f″/f` and `θ(X) = −X⁰`,
/// `K·Q = A·Q + (A − D)(θ(w)² h(v,v) − 2θ(v)θ(w) h(v,w) + θ(v)² h(w,w))`.
pub fn sectional_curvature_warped(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    if !family.is_warped_product() {
        return Err(GeometryError::InvalidArgument("closed form needs a warped product".into()));
    }
    let warp = family.warp().expect("warped product has a warp");
    let (hvv, hww, hvw) = gram(family, p, v, w)?;
    let (f, fp, fpp) = warp.eval(p.t);
    let k = family.fiber().base_curvature();
    let a = (k + fp * fp) / (f * f);
    let d = fpp / f;
    let (tv, tw) = (-v.dt, -w.dt);
    let q = hvv * hww - hvw * hvw;
    let bracket = tw * tw * hvv - 2.0 * tv * tw * hvw + tv * tv * hww;
    Ok(a + (a - d) * bracket / q)
}

/// Sectional curvature of the plane spanned by `v, w` (closed form for warped
/// products, finite differences otherwise).
pub fn sectional_curvature(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    if family.is_warped_product() {
        sectional_curvature_warped(family, p, v, w)
    } else {
        sectional_curvature_fd(family, p, v, w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub point: SpacetimePoint,
    pub v: TangentVector,
    pub w: TangentVector,
    #[serde(rename = "K")]
    pub k: f64,
}

/// Random indefinite planes: `v` is timelike (`v = (1, X)` with `g(X,X) < 0.81`),
/// `w` is arbitrary, so the span is indefinite unless degenerate.
pub fn random_indefinite_planes(
    family: &MetricFamily,
    count: usize,
    t_range: (f64, f64),
    seed: u64,
) -> Result<Vec<(SpacetimePoint, TangentVector, TangentVector)>> {
    (0..count)
        .into_par_iter()
        .map(|id| {
            let mut rng = item_rng(seed, id);
            loop {
                let t = rng.gen_range(t_range.0..=t_range.1);
                let x = random_fiber_point(family, &mut rng);
                let p = SpacetimePoint::new(t, x);
                let r = rng.gen_range(0.0..0.9);
                let dir = random_unit_direction(family, t, &p.x, &mut rng)?;
                let v = TangentVector::new(1.0, dir.iter().map(|d| r * d).collect());
                let dir2 = random_unit_direction(family, t, &p.x, &mut rng)?;
                let b = rng.gen_range(-1.5..1.5);
                let w = TangentVector::new(b, dir2);
                if let Ok((hvv, hww, hvw)) = gram(family, &p, &v, &w) {
                    if hvv * hww - hvw * hvw < -1e-6 {
                        return Ok((p, v, w));
                    }
                }
            }
        })
        .collect()
}

/// Curvature samples on the given planes.
pub fn curvature_samples(
    family: &MetricFamily,
    planes: &[(SpacetimePoint, TangentVector, TangentVector)],
) -> Result<Vec<CurvatureSample>> {
    planes
        .par_iter()
        .map(|(p, v, w)| {
            Ok(CurvatureSample { point: p.clone(), v: v.clone(), w: w.clone(), k: sectional_curvature(family, p, v, w)? })
        })
        .collect()
}

/// Writes curvature samples as CSV `t,chart,x1..,K`.
pub fn write_curvature_csv<W: Write>(samples: &[CurvatureSample], mut w: W) -> std::io::Result<()> {
    let n = samples.first().map(|s| s.point.x.dim()).unwrap_or(0);
    let mut header = vec!["t".to_string(), "chart".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("K".into());
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let mut row = vec![format!("{:.16e}", s.point.t), s.point.x.chart.to_string()];
        row.extend(s.point.x.coords.iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{:.16e}", s.k));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub min_k: f64,
    /// `0.99 · min K`, or `None` when the minimum is not positive.
    pub alpha_squared: Option<f64>,
    pub samples: usize,
}

impl AlphaEstimate {
    pub fn alpha(&self) -> f64 {
        self.alpha_squared.map_or(0.0, f64::sqrt)
    }
}

/// Estimates a lower curvature bound `α²` on indefinite planes from a
/// deterministic sample, with a 1% safety margin.
pub fn estimate_alpha(family: &MetricFamily, count: usize, t_range: (f64, f64), seed: u64) -> Result<AlphaEstimate> {
    let planes = random_indefinite_planes(family, count, t_range, seed)?;
    let ks = curvature_samples(family, &planes)?;
    let min_k = ks.iter().map(|s| s.k).fold(f64::INFINITY, f64::min);
    Ok(AlphaEstimate {
        min_k,
        alpha_squared: (min_k > 0.0).then(|| 0.99 * min_k),
        samples: ks.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobiSample {
    pub u: f64,
    /// Coordinate components of `Y`.
    pub y: TangentVector,
    /// Coordinate components of `∇_u Y`.
    pub dy: TangentVector,
}

/// A Jacobi field along the vertical geodesic `u ↦ (u, x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobiField {
    pub x: FiberPoint,
    pub w: Vec<f64>,
    pub samples: Vec<JacobiSample>,
}

/// `Rᵃ_0c0` along the vertical geodesic at `(u, x)`, as an `m × m` matrix.
fn vertical_tidal(family: &MetricFamily, u: f64, x: &FiberPoint) -> Result<DMatrix<f64>> {
    let m = family.dim() + 1;
    let r = riemann_fd(family, u, x, FD_CHRISTOFFEL_STEP)?;
    Ok(DMatrix::from_fn(m, m, |a, c| r[((a * m) * m + c) * m]))
}

/// `Γᵃ_0b` at `(u, x)`.
fn time_connection(family: &MetricFamily, u: f64, x: &FiberPoint) -> Result<DMatrix<f64>> {
    let n = family.dim();
    let geo = family.local(u, x)?;
    let s = &geo.g_inv * &geo.dg * 0.5;
    Ok(DMatrix::from_fn(n + 1, n + 1, |a, b| if a > 0 && b > 0 { s[(a - 1, b - 1)] } else { 0.0 }))
}

/// Coordinate form of the Jacobi equation along `(u, x)` with state `(J, P)`,
/// `P = ∇_u Y`: `J′ = P − Γ₀J`, `P′ = −Γ₀P − R(·,∂_t)∂_t J`.
fn jacobi_rhs(family: &MetricFamily, x: &FiberPoint, u: f64, y: &[f64]) -> Result<Vec<f64>> {
    let m = family.dim() + 1;
    let g0 = time_connection(family, u, x)?;
    let r = vertical_tidal(family, u, x)?;
    let mut out = vec![0.0; 2 * m];
    for a in 0..m {
        let mut dj = y[m + a];
        let mut dp = 0.0;
        for b in 0..m {
            dj -= g0[(a, b)] * y[b];
            dp -= g0[(a, b)] * y[m + b] + r[(a, b)] * y[b];
        }
        out[a] = dj;
        out[m + a] = dp;
    }
    Ok(out)
}

/// Integrates the Jacobi field `Y` along `u ↦ (u, x)` with `Y(0) = (0, w)` and
/// `∇Y(0) = Γ₀ Y(0)`, the value that keeps `Y` equal to the coordinate field
/// `(0, w)` when `F₀` is totally geodesic. Samples lie on a uniform grid of
/// `samples` points over `u_range` (which should contain 0).
pub fn integrate_jacobi(
    family: &MetricFamily,
    x: &FiberPoint,
    w: &[f64],
    u_range: (f64, f64),
    samples: usize,
    stepper: &DormandPrince,
) -> Result<JacobiField> {
    let n = family.dim();
    if w.len() != n {
        return Err(GeometryError::Dimension { expected: n, got: w.len() });
    }
    if w.iter().all(|v| *v == 0.0) {
        return Err(GeometryError::InvalidArgument("Jacobi seed w must be nonzero".into()));
    }
    family.fiber().validate(x)?;
    let (lo, hi) = u_range;
    if !(lo <= 0.0 && hi >= 0.0 && hi > lo) || samples < 2 {
        return Err(GeometryError::InvalidArgument(format!("bad Jacobi range [{lo}, {hi}]")));
    }
    let m = n + 1;
    let mut y0 = vec![0.0; 2 * m];
    y0[1..m].copy_from_slice(w);
    let g0 = time_connection(family, 0.0, x)?;
    for a in 0..m {
        for b in 0..m {
            y0[m + a] += g0[(a, b)] * y0[b];
        }
    }
    let grid = sampling::linspace(lo, hi, samples);
    let mut states: Vec<Option<Vec<f64>>> = vec![None; samples];
    // forward from 0 over the nonnegative grid points, backward over the rest
    for dir in [1.0f64, -1.0] {
        let mut rhs = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
            let d = jacobi_rhs(family, x, dir * s, y)?;
            Ok(d.iter().map(|v| dir * v).collect())
        };
        let mut s_prev = 0.0;
        let mut y = y0.clone();
        let mut idx: Vec<usize> = (0..samples).filter(|&i| dir * grid[i] >= 0.0).collect();
        if dir < 0.0 {
            idx.reverse();
        }
        for i in idx {
            let s = dir * grid[i];
            y = stepper.integrate_to(&mut rhs, s_prev, &y, s)?;
            s_prev = s;
            states[i] = Some(y.clone());
        }
    }
    let samples = grid
        .iter()
        .zip(states)
        .map(|(&u, st)| {
            let y = st.expect("every grid point integrated");
            JacobiSample {
                u,
                y: TangentVector::new(y[0], y[1..m].to_vec()),
                dy: TangentVector::new(y[m], y[m + 1..].to_vec()),
            }
        })
        .collect();
    Ok(JacobiField { x: x.clone(), w: w.to_vec(), samples })
}

/// Largest residual of `∇_u∇_u Y + R(Y, γ̇)γ̇ = 0` at interior samples, using a
/// fourth-order central difference of `∇Y` (uniform grids only), scaled by
/// `1 + |Y| + |∇Y|`.
pub fn jacobi_residual(family: &MetricFamily, field: &JacobiField) -> Result<f64> {
    let s = &field.samples;
    if s.len() < 5 {
        return Ok(0.0);
    }
    let du = s[1].u - s[0].u;
    let m = field.x.dim() + 1;
    let mut worst: f64 = 0.0;
    for i in 2..s.len() - 2 {
        let p = |k: usize| {
            let mut v = vec![s[k].dy.dt];
            v.extend_from_slice(&s[k].dy.dx);
            v
        };
        let (pm2, pm1, pp1, pp2) = (p(i - 2), p(i - 1), p(i + 1), p(i + 2));
        let jv = {
            let mut v = vec![s[i].y.dt];
            v.extend_from_slice(&s[i].y.dx);
            v
        };
        let pv = p(i);
        let g0 = time_connection(family, s[i].u, &field.x)?;
        let r = vertical_tidal(family, s[i].u, &field.x)?;
        let scale = 1.0 + jv.iter().chain(&pv).map(|v| v.abs()).fold(0.0, f64::max);
        for a in 0..m {
            let dp = (pm2[a] - 8.0 * pm1[a] + 8.0 * pp1[a] - pp2[a]) / (12.0 * du);
            let mut res = dp;
            for b in 0..m {
                res += g0[(a, b)] * pv[b] + r[(a, b)] * jv[b];
            }
            worst = worst.max(res.abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobiReport {
    /// `max |h(Y,Y) − g_u(w,w)| / g_u(w,w)`.
    pub max_identity_error: f64,
    pub identity_passed: bool,
    pub alpha: f64,
    /// `min (∂_{|u|} g_u(w,w)/g_u(w,w) − |α tanh(αu)|)`.
    pub tanh_margin_min: f64,
    pub tanh_passed: bool,
    /// `|h(Y(0), ∇Y(0))|`.
    pub initial_orthogonality: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Checks `h(Y_w, Y_w) = g_u(w, w)` along the field and the growth inequality
/// `∂_{|u|} g_u(w,w) / g_u(w,w) ≥ |α tanh(αu)|`.
pub fn check_jacobi_metric_identity(family: &MetricFamily, field: &JacobiField, alpha: f64) -> Result<JacobiReport> {
    let mut max_err: f64 = 0.0;
    let mut margin_min = f64::INFINITY;
    let mut y0_dot = 0.0;
    for s in &field.samples {
        let p = SpacetimePoint::new(s.u, field.x.clone());
        let hyy = lorentz_norm2(family, &p, &s.y)?;
        let g = family.metric_at(s.u, &field.x)?;
        let gww = quad(&g, &field.w);
        max_err = max_err.max((hyy - gww).abs() / gww);
        let dg = family.metric_t_derivative(s.u, &field.x)?;
        let sign = if s.u > 0.0 { 1.0 } else if s.u < 0.0 { -1.0 } else { 0.0 };
        let ratio = sign * quad(&dg, &field.w) / gww;
        margin_min = margin_min.min(ratio - (alpha * (alpha * s.u).tanh()).abs());
        if s.u == 0.0 {
            y0_dot = lorentz_inner(family, &p, &s.y, &s.dy)?.abs();
        }
    }
    let identity_passed = max_err <= 1e-6;
    let tanh_passed = margin_min >= -1e-9;
    Ok(JacobiReport {
        max_identity_error: max_err,
        identity_passed,
        alpha,
        tanh_margin_min: margin_min,
        tanh_passed,
        initial_orthogonality: y0_dot,
        samples: field.samples.len(),
        passed: identity_passed && tanh_passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub checked: usize,
    pub rejected: usize,
    pub samples: usize,
    /// `max side·ẗ` over samples; negative when the check passes.
    pub worst_signed_accel: f64,
    pub violations: usize,
    pub passed: bool,
}

/// Checks `ẗ < 0` along spacelike geodesics in `t > 0` and `ẗ > 0` in `t < 0`,
/// with `ẗ = −½ ∂_t g(γ̇_F, γ̇_F)`. Vertical trajectories and trajectories
/// touching `t = 0` are rejected.
pub fn hessian_concavity_check(family: &MetricFamily, trajectories: &[Trajectory]) -> Result<ConcavityReport> {
    let mut rep = ConcavityReport {
        checked: 0,
        rejected: 0,
        samples: 0,
        worst_signed_accel: f64::NEG_INFINITY,
        violations: 0,
        passed: true,
    };
    for tr in trajectories {
        let side = tr.start().point.t.signum();
        let inside = tr.samples.iter().all(|s| side * s.point.t > 0.0);
        let vertical = tr.samples.iter().any(|s| {
            family.metric_at(s.point.t, &s.point.x).map(|g| quad(&g, &s.velocity.dx) <= 1e-14).unwrap_or(true)
        });
        if side == 0.0 || !inside || vertical {
            rep.rejected += 1;
            continue;
        }
        rep.checked += 1;
        for s in &tr.samples {
            let (_, a) = geodesic_rhs(family, &s.point, &s.velocity)?;
            let signed = side * a.dt;
            rep.samples += 1;
            rep.worst_signed_accel = rep.worst_signed_accel.max(signed);
            if signed >= 0.0 {
                rep.violations += 1;
            }
        }
    }
    rep.passed = rep.violations == 0;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussReport {
    pub geodesics: usize,
    /// `max ‖∂_t g‖` over the sampled points of `F₀`.
    pub slice_second_fundamental_form: f64,
    /// `max |γ(u) − (u, p)|` in chart coordinates.
    pub max_chart_deviation: f64,
    /// `max |h(∂_t, Y_i)|` over transported coordinate fields.
    pub max_cross_term: f64,
    /// `max |Y_i − e_i|` (the transported field stays the coordinate field).
    pub max_field_deviation: f64,
    pub passed: bool,
}

/// Integrates unit normal geodesics `(u, p)` from points of `F₀` and transports
/// the coordinate fields `∂_{x_i}` as Jacobi fields; in the product chart the
/// geodesics stay vertical and the cross terms `h(∂_t, ∂_{x_i})` vanish.
pub fn normal_chart_gauss_check(
    family: &MetricFamily,
    points: &[FiberPoint],
    u_max: f64,
    opts: &IntegrationOptions,
) -> Result<GaussReport> {
    let sff = points
        .iter()
        .map(|p| family.metric_t_derivative(0.0, p).map(|d| d.amax()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if sff > 1e-10 {
        return Err(GeometryError::Precondition(format!(
            "F₀ is not totally geodesic: max |∂_t g| at t = 0 is {sff:e}"
        )));
    }
    let n = family.dim();
    let results: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64)> {
            let start = SpacetimePoint::new(0.0, p.clone());
            let tr = integrate_geodesic(family, &start, &TangentVector::new(1.0, vec![0.0; n]), u_max, &EventSpec::none(), opts)?;
            let mut dev: f64 = 0.0;
            for s in &tr.samples {
                dev = dev.max((s.point.t - s.u).abs());
                let q = family.fiber().to_chart(&s.point.x, p.chart)?;
                for (a, b) in q.coords.iter().zip(&p.coords) {
                    dev = dev.max((a - b).abs());
                }
            }
            let mut cross: f64 = 0.0;
            let mut field_dev: f64 = 0.0;
            for i in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let jf = integrate_jacobi(family, p, &e, (0.0, u_max), 41, &opts.stepper)?;
                for s in &jf.samples {
                    let at = SpacetimePoint::new(s.u, p.clone());
                    let normal = TangentVector::new(1.0, vec![0.0; n]);
                    cross = cross.max(lorentz_inner(family, &at, &normal, &s.y)?.abs());
                    for (a, b) in s.y.dx.iter().zip(&e) {
                        field_dev = field_dev.max((a - b).abs());
                    }
                }
            }
            Ok((dev, cross, field_dev))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_chart_deviation = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_cross_term = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_field_deviation = results.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(GaussReport {
        geodesics: points.len(),
        slice_second_fundamental_form: sff,
        max_chart_deviation,
        max_cross_term,
        max_field_deviation,
        passed: max_chart_deviation <= 1e-8 && max_cross_term <= 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_family::{Fiber, Warp};

    #[test]
    fn de_sitter_circle_has_unit_curvature() {
        let f = MetricFamily::de_sitter(1);
        let p = SpacetimePoint::new(0.7, FiberPoint::angles(vec![1.0]));
        let v = TangentVector::new(1.0, vec![0.0]);
        let w = TangentVector::new(0.0, vec![1.0]);
        assert!((sectional_curvature(&f, &p, &v, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!((sectional_curvature_fd(&f, &p, &v, &w).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn product_mixed_plane_is_flat() {
        let f = MetricFamily::warped(Warp::Constant, Fiber::Sphere { dim: 2 }).unwrap();
        let p = SpacetimePoint::new(0.3, FiberPoint::new(0, vec![0.2, 0.1]));
        let v = TangentVector::new(1.0, vec![0.0, 0.0]);
        let w = TangentVector::new(0.0, vec![1.0, 0.0]);
        assert!(sectional_curvature_fd(&f, &p, &v, &w).unwrap().abs() < 1e-8);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let f = MetricFamily::de_sitter(1);
        let p = SpacetimePoint::new(0.0, FiberPoint::angles(vec![0.0]));
        let v = TangentVector::new(1.0, vec![1.0]);
        let r = sectional_curvature(&f, &p, &v, &v.scaled(2.0));
        assert!(matches!(r, Err(GeometryError::DegeneratePlane(_))));
    }

    #[test]
    fn de_sitter_jacobi_is_coordinate_field() {
        let f = MetricFamily::de_sitter(2);
        let x = FiberPoint::new(0, vec![0.3, 0.1]);
        let jf = integrate_jacobi(&f, &x, &[0.4, -0.2], (0.0, 2.0), 21, &DormandPrince::default()).unwrap();
        for s in &jf.samples {
            assert!((s.y.dx[0] - 0.4).abs() < 1e-8 && (s.y.dx[1] + 0.2).abs() < 1e-8);
        }
        let rep = check_jacobi_metric_identity(&f, &jf, 1.0).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn exp_warp_fails_gauss_precondition() {
        let f = MetricFamily::warped(Warp::Exp, Fiber::Sphere { dim: 1 }).unwrap();
        let r = normal_chart_gauss_check(&f, &[FiberPoint::angles(vec![0.0])], 1.0, &IntegrationOptions::default());
        assert!(matches!(r, Err(GeometryError::Precondition(_))));
    }
}
