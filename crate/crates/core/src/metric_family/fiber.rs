//! Compact fibers `F` (round spheres and flat tori) and their coordinate charts.
//!
//! * Torus `Tⁿ` and the circle `S¹` use a single periodic angle chart (id 0).
//!   Coordinates are reduced mod 2π only by [`Fiber::canonical`]; integrators
//!   keep them lifted so curves stay continuous.
//! * `Sⁿ` for `n ≥ 2` uses two stereographic charts: id 0 projects from the
//!   north pole, id 1 from the south pole, with transition `y' = y / |y|²`.
//!   `S²` additionally has the polar chart (id 2, coordinates `(θ, φ)`), which
//!   is accepted everywhere except at the poles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{GeometryError, Result};
use crate::sampling;

pub const ANGLE_CHART: u8 = 0;
pub const NORTH_CHART: u8 = 0;
pub const SOUTH_CHART: u8 = 1;
pub const POLAR_CHART: u8 = 2;

/// Nominal radius of a stereographic chart; switching happens at 0.8 of it.
pub const STEREO_CHART_RADIUS: f64 = 2.0;
pub const STEREO_SWITCH_RADIUS: f64 = 0.8 * STEREO_CHART_RADIUS;
/// Points farther out than this are rejected as chart-domain violations.
pub const STEREO_DOMAIN_RADIUS: f64 = 4.0;
const POLAR_POLE_GAP: f64 = 1e-9;

/// The compact fiber `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Fiber {
    /// Round unit sphere `Sⁿ`.
    Sphere { dim: usize },
    /// Flat torus `Tⁿ = Rⁿ / 2πZⁿ`.
    Torus { dim: usize },
}

/// A point of `F` in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub chart: u8,
    pub coords: Vec<f64>,
}

impl FiberPoint {
    pub fn new(chart: u8, coords: Vec<f64>) -> Self {
        Self { chart, coords }
    }

    pub fn angles(coords: Vec<f64>) -> Self {
        Self { chart: ANGLE_CHART, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed angular difference `b − a` reduced to `(−π, π]`.
pub fn wrap_delta(a: f64, b: f64) -> f64 {
    let mut d = (b - a).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

impl Fiber {
    pub fn dim(&self) -> usize {
        match *self {
            Fiber::Sphere { dim } | Fiber::Torus { dim } => dim,
        }
    }

    /// Whether the fiber uses the single periodic angle chart.
    pub fn is_periodic(&self) -> bool {
        matches!(self, Fiber::Torus { .. } | Fiber::Sphere { dim: 1 })
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Fiber::Sphere { .. })
    }

    /// Sectional curvature of the base metric `g₀` (0 for tori and for `S¹`).
    pub fn base_curvature(&self) -> f64 {
        match *self {
            Fiber::Sphere { dim } if dim >= 2 => 1.0,
            _ => 0.0,
        }
    }

    /// The chart origin, used to seed deterministic constructions.
    pub fn origin(&self) -> FiberPoint {
        FiberPoint::new(0, vec![0.0; self.dim()])
    }

    pub fn validate(&self, p: &FiberPoint) -> Result<()> {
        let n = self.dim();
        if p.coords.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: p.coords.len() });
        }
        let bad = || GeometryError::ChartDomain { chart: p.chart, coords: p.coords.clone() };
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(bad());
        }
        if self.is_periodic() {
            if p.chart != ANGLE_CHART {
                return Err(bad());
            }
            return Ok(());
        }
        match p.chart {
            NORTH_CHART | SOUTH_CHART => {
                if norm(&p.coords) > STEREO_DOMAIN_RADIUS {
                    return Err(bad());
                }
            }
            POLAR_CHART if n == 2 => {
                let theta = p.coords[0];
                if !(POLAR_POLE_GAP..=PI - POLAR_POLE_GAP).contains(&theta) {
                    return Err(bad());
                }
            }
            _ => return Err(bad()),
        }
        Ok(())
    }

    /// Coordinate matrix of the base metric `g₀` at `p`.
    pub fn base_metric(&self, p: &FiberPoint) -> DMatrix<f64> {
        let n = self.dim();
        if self.is_periodic() {
            return DMatrix::identity(n, n);
        }
        match p.chart {
            POLAR_CHART => {
                let s = p.coords[0].sin();
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, s * s]))
            }
            _ => {
                let r2 = norm2(&p.coords);
                let conf = 4.0 / ((1.0 + r2) * (1.0 + r2));
                DMatrix::identity(n, n) * conf
            }
        }
    }

    /// Christoffel symbols of `g₀`, flattened as `gamma[k*n*n + i*n + j] = Γᵏᵢⱼ`.
    pub fn base_christoffels(&self, p: &FiberPoint) -> Vec<f64> {
        let n = self.dim();
        let mut gamma = vec![0.0; n * n * n];
        if self.is_periodic() {
            return gamma;
        }
        match p.chart {
            POLAR_CHART => {
                let (s, c) = p.coords[0].sin_cos();
                // Γ^θ_{φφ} = −sinθ cosθ, Γ^φ_{θφ} = Γ^φ_{φθ} = cotθ
                gamma[1 * 2 + 1] = -s * c;
                gamma[4 + 1] = c / s;
                gamma[4 + 2] = c / s;
            }
            _ => {
                // g₀ = e^{2ρ} δ with ρ = ln 2 − ln(1 + |y|²)
                let y = &p.coords;
                let r2 = norm2(y);
                let drho: Vec<f64> = y.iter().map(|yi| -2.0 * yi / (1.0 + r2)).collect();
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = 0.0;
                            if k == i {
                                v += drho[j];
                            }
                            if k == j {
                                v += drho[i];
                            }
                            if i == j {
                                v -= drho[k];
                            }
                            gamma[k * n * n + i * n + j] = v;
                        }
                    }
                }
            }
        }
        gamma
    }

    /// Embedding of a sphere point into `R^{n+1}` (unit vector).
    pub fn embed(&self, p: &FiberPoint) -> Result<Vec<f64>> {
        match *self {
            Fiber::Sphere { dim: 1 } => {
                let (s, c) = p.coords[0].sin_cos();
                Ok(vec![c, s])
            }
            Fiber::Sphere { dim } => match p.chart {
                POLAR_CHART => {
                    let (st, ct) = p.coords[0].sin_cos();
                    let (sp, cp) = p.coords[1].sin_cos();
                    Ok(vec![st * cp, st * sp, ct])
                }
                chart => {
                    let r2 = norm2(&p.coords);
                    let mut w: Vec<f64> = p.coords.iter().map(|y| 2.0 * y / (1.0 + r2)).collect();
                    let last = (r2 - 1.0) / (r2 + 1.0);
                    w.push(if chart == NORTH_CHART { last } else { -last });
                    debug_assert_eq!(w.len(), dim + 1);
                    Ok(w)
                }
            },
            Fiber::Torus { .. } => Err(GeometryError::InvalidArgument(
                "torus fibers have no sphere embedding".into(),
            )),
        }
    }

    /// Jacobian `∂ω/∂x` of the sphere embedding, `(n+1) × n`.
    pub fn embed_jacobian(&self, p: &FiberPoint) -> Result<DMatrix<f64>> {
        match *self {
            Fiber::Sphere { dim: 1 } => {
                let (s, c) = p.coords[0].sin_cos();
                Ok(DMatrix::from_column_slice(2, 1, &[-s, c]))
            }
            Fiber::Sphere { dim: n } => match p.chart {
                POLAR_CHART => {
                    let (st, ct) = p.coords[0].sin_cos();
                    let (sp, cp) = p.coords[1].sin_cos();
                    Ok(DMatrix::from_row_slice(
                        3,
                        2,
                        &[ct * cp, -st * sp, ct * sp, st * cp, -st, 0.0],
                    ))
                }
                chart => {
                    let y = &p.coords;
                    let r2 = norm2(y);
                    let d = 1.0 + r2;
                    let mut j = DMatrix::zeros(n + 1, n);
                    for a in 0..n {
                        for b in 0..n {
                            let delta = if a == b { 1.0 } else { 0.0 };
                            j[(a, b)] = 2.0 * delta / d - 4.0 * y[a] * y[b] / (d * d);
                        }
                    }
                    let sign = if chart == NORTH_CHART { 1.0 } else { -1.0 };
                    for b in 0..n {
                        j[(n, b)] = sign * 4.0 * y[b] / (d * d);
                    }
                    Ok(j)
                }
            },
            Fiber::Torus { .. } => Err(GeometryError::InvalidArgument(
                "torus fibers have no sphere embedding".into(),
            )),
        }
    }

    /// Chart point for a unit vector `ω ∈ Sⁿ`, in the canonical chart.
    pub fn from_embedding(&self, w: &[f64]) -> Result<FiberPoint> {
        match *self {
            Fiber::Sphere { dim: 1 } => Ok(FiberPoint::angles(vec![reduce_angle(w[1].atan2(w[0]))])),
            Fiber::Sphere { dim: n } => {
                let last = w[n];
                let (chart, denom) = if last <= 0.0 {
                    (NORTH_CHART, 1.0 - last)
                } else {
                    (SOUTH_CHART, 1.0 + last)
                };
                Ok(FiberPoint::new(chart, w[..n].iter().map(|v| v / denom).collect()))
            }
            Fiber::Torus { .. } => Err(GeometryError::InvalidArgument(
                "torus fibers have no sphere embedding".into(),
            )),
        }
    }

    /// Chart components of an embedded tangent vector `dω` at `p`.
    pub fn tangent_from_embedding(&self, p: &FiberPoint, dw: &[f64]) -> Result<Vec<f64>> {
        let j = self.embed_jacobian(p)?;
        let jt = j.transpose();
        let normal = &jt * &j;
        let rhs = &jt * DVector::from_column_slice(dw);
        let sol = normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| GeometryError::Domain("singular chart jacobian".into()))?;
        Ok(sol.iter().copied().collect())
    }

    /// Representation of `p` in its canonical chart (angles reduced mod 2π,
    /// stereographic coordinates with `|y| ≤ 1`).
    pub fn canonical(&self, p: &FiberPoint) -> Result<FiberPoint> {
        if self.is_periodic() {
            return Ok(FiberPoint::angles(p.coords.iter().map(|c| reduce_angle(*c)).collect()));
        }
        match p.chart {
            POLAR_CHART => self.from_embedding(&self.embed(p)?),
            chart => {
                if norm2(&p.coords) <= 1.0 {
                    Ok(p.clone())
                } else {
                    Ok(FiberPoint::new(other_stereo(chart), invert(&p.coords)))
                }
            }
        }
    }

    /// Re-expresses `p` in `chart`.
    pub fn to_chart(&self, p: &FiberPoint, chart: u8) -> Result<FiberPoint> {
        if p.chart == chart {
            return Ok(p.clone());
        }
        if self.is_periodic() {
            return Err(GeometryError::ChartDomain { chart, coords: p.coords.clone() });
        }
        if p.chart != POLAR_CHART && chart != POLAR_CHART {
            return Ok(FiberPoint::new(chart, invert(&p.coords)));
        }
        let w = self.embed(p)?;
        if chart == POLAR_CHART {
            let theta = w[2].clamp(-1.0, 1.0).acos();
            let phi = w[1].atan2(w[0]);
            let q = FiberPoint::new(POLAR_CHART, vec![theta, phi]);
            self.validate(&q)?;
            return Ok(q);
        }
        let n = self.dim();
        let denom = if chart == NORTH_CHART { 1.0 - w[n] } else { 1.0 + w[n] };
        Ok(FiberPoint::new(chart, w[..n].iter().map(|v| v / denom).collect()))
    }

    /// Re-expresses the point-vector pair `(p, v)` in `chart`.
    pub fn tangent_to_chart(&self, p: &FiberPoint, v: &[f64], chart: u8) -> Result<(FiberPoint, Vec<f64>)> {
        if p.chart == chart {
            return Ok((p.clone(), v.to_vec()));
        }
        let q = self.to_chart(p, chart)?;
        if p.chart != POLAR_CHART && chart != POLAR_CHART {
            let y = &p.coords;
            let r2 = norm2(y);
            let r4 = r2 * r2;
            let dot: f64 = y.iter().zip(v).map(|(a, b)| a * b).sum();
            let w = y
                .iter()
                .zip(v)
                .map(|(yi, vi)| (vi * r2 - 2.0 * yi * dot) / r4)
                .collect();
            return Ok((q, w));
        }
        let j = self.embed_jacobian(p)?;
        let dw = &j * DVector::from_column_slice(v);
        let w = self.tangent_from_embedding(&q, dw.as_slice())?;
        Ok((q, w))
    }

    /// True when an integrator should move `p` to the other stereographic chart.
    pub fn needs_chart_switch(&self, p: &FiberPoint) -> bool {
        !self.is_periodic() && p.chart != POLAR_CHART && norm(&p.coords) > STEREO_SWITCH_RADIUS
    }

    /// Chart to switch to from `p` (integration never uses the polar chart).
    pub fn switch_target(&self, p: &FiberPoint) -> u8 {
        if p.chart == POLAR_CHART {
            self.canonical(p).map(|q| q.chart).unwrap_or(NORTH_CHART)
        } else {
            other_stereo(p.chart)
        }
    }

    /// Chart-coordinate displacement from `a` to `b`, expressed in `a`'s chart.
    /// Periodic coordinates are wrapped into `(−π, π]`.
    pub fn displacement(&self, a: &FiberPoint, b: &FiberPoint) -> Result<Vec<f64>> {
        if self.is_periodic() {
            return Ok(a.coords.iter().zip(&b.coords).map(|(x, y)| wrap_delta(*x, *y)).collect());
        }
        let b = self.to_chart(b, a.chart)?;
        Ok(a.coords.iter().zip(&b.coords).map(|(x, y)| y - x).collect())
    }

    /// Deterministic background point set used to seed ε-nets.
    ///
    /// For periodic fibers `per_axis` points per coordinate (a regular grid
    /// containing the origin); for spheres roughly `per_axis^n` quasi-uniform points.
    pub fn background_points(&self, per_axis: usize) -> Vec<FiberPoint> {
        let n = self.dim();
        let per_axis = per_axis.max(2);
        if self.is_periodic() {
            let total = per_axis.pow(n as u32);
            return (0..total)
                .map(|mut idx| {
                    let mut c = vec![0.0; n];
                    for slot in c.iter_mut() {
                        *slot = TAU * (idx % per_axis) as f64 / per_axis as f64;
                        idx /= per_axis;
                    }
                    FiberPoint::angles(c)
                })
                .collect();
        }
        let total = per_axis.pow(n as u32);
        let mut out = Vec::with_capacity(total + 1);
        out.push(self.origin());
        if n == 2 {
            for w in sampling::fibonacci_sphere(total) {
                out.push(self.from_embedding(&w).expect("sphere embedding"));
            }
        } else {
            for i in 1..=total as u64 {
                let w = sampling::sphere_point(i, n + 1);
                out.push(self.from_embedding(&w).expect("sphere embedding"));
            }
        }
        out
    }

    /// Parameter box used by grid searches over `F`.
    pub fn param_ranges(&self) -> Vec<(f64, f64)> {
        let n = self.dim();
        if self.is_periodic() {
            return vec![(0.0, TAU); n];
        }
        let mut r = vec![(0.0, PI); n - 1];
        r.push((0.0, TAU));
        r
    }

    /// Point of `F` for a parameter vector from [`Fiber::param_ranges`]
    /// (angles for tori, hyperspherical angles for spheres).
    pub fn param_point(&self, params: &[f64]) -> FiberPoint {
        if self.is_periodic() {
            return FiberPoint::angles(params.to_vec());
        }
        let n = self.dim();
        let mut w = vec![0.0; n + 1];
        let mut s = 1.0;
        for k in 0..n - 1 {
            w[k] = s * params[k].cos();
            s *= params[k].sin();
        }
        w[n - 1] = s * params[n - 1].cos();
        w[n] = s * params[n - 1].sin();
        self.from_embedding(&w).expect("sphere embedding")
    }
}

fn other_stereo(chart: u8) -> u8 {
    if chart == NORTH_CHART {
        SOUTH_CHART
    } else {
        NORTH_CHART
    }
}

fn invert(y: &[f64]) -> Vec<f64> {
    let r2 = norm2(y);
    y.iter().map(|v| v / r2).collect()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    norm2(v).sqrt()
}
