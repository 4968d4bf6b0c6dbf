//! Time-dependent fiber metrics `g_t` and their derivatives.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fiber::{norm, Fiber, FiberPoint};
use crate::error::{GeometryError, Result};
use crate::sampling;

/// Scalar warp functions `f(t)` from the built-in catalog.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Warp {
    /// `f(t) = cosh t`; with a round sphere fiber this is de Sitter space.
    Cosh,
    /// `f(t) = e^t`.
    Exp,
    /// `f(t) = sqrt(shift² + sinh² t)`: even, positive, and asymptotic to `|sinh t|`.
    SinhShifted { shift: f64 },
    /// `f(t) = 1`.
    Constant,
}

impl Warp {
    /// Returns `(f, f', f'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            Warp::Cosh => (t.cosh(), t.sinh(), t.cosh()),
            Warp::Exp => {
                let e = t.exp();
                (e, e, e)
            }
            Warp::SinhShifted { shift } => {
                let (s, c) = (t.sinh(), t.cosh());
                let f = (shift * shift + s * s).sqrt();
                let fp = s * c / f;
                let fpp = ((2.0 * t).cosh() - fp * fp) / f;
                (f, fp, fpp)
            }
            Warp::Constant => (1.0, 0.0, 0.0),
        }
    }

    pub fn is_even(&self) -> bool {
        !matches!(self, Warp::Exp)
    }

    fn validate(&self) -> Result<()> {
        if let Warp::SinhShifted { shift } = *self {
            if !(shift > 0.0 && shift.is_finite()) {
                return Err(GeometryError::InvalidFamily(format!(
                    "sinh_shifted warp needs shift > 0, got {shift}"
                )));
            }
        }
        Ok(())
    }
}

/// Smooth positive bump `b(x) = exp(κ (⟨ω(x), ω_c⟩ − 1))` on a sphere, or
/// `exp(κ Σ (cos(xᵢ − cᵢ) − 1))` on a torus. Its maximum value is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    /// Perturbation strength ε.
    pub amplitude: f64,
    /// Bump center in canonical chart coordinates.
    pub center: FiberPoint,
    /// Concentration κ ≥ 0.
    pub concentration: f64,
}

/// Time envelope of a bump perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    /// `sech(t − center)`.
    Sech { center: f64 },
}

impl Envelope {
    /// Returns `(e, e')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Envelope::Sech { center } => {
                let s = 1.0 / (t - center).cosh();
                (s, -s * (t - center).tanh())
            }
        }
    }

    pub fn is_even(&self) -> bool {
        match *self {
            Envelope::Sech { center } => center == 0.0,
        }
    }
}

/// Declarative description of a metric family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `g_t = f(t)² g₀`.
    WarpedProduct { warp: Warp, fiber: Fiber },
    /// Flat torus metric `G(t) = D(t) B D(t)` with `D = diag(f₁(t), …, fₙ(t))`.
    TorusMatrix { base: Vec<Vec<f64>>, warps: Vec<Warp> },
    /// `g_t = f(t)² (1 + ε b(x) e(t)) g₀`.
    BumpPerturbedWarp { warp: Warp, fiber: Fiber, bump: BumpSpec, envelope: Envelope },
}

#[derive(Clone, Debug)]
enum Kind {
    Warped {
        warp: Warp,
    },
    TorusMatrix {
        base: DMatrix<f64>,
        warps: Vec<Warp>,
    },
    Bump {
        warp: Warp,
        amplitude: f64,
        concentration: f64,
        center: Vec<f64>,
        envelope: Envelope,
    },
}

/// Metric, time derivative and spatial Christoffel symbols at one point.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub dg: DMatrix<f64>,
    /// `gamma[k*n*n + i*n + j] = Γᵏᵢⱼ`.
    pub gamma: Vec<f64>,
}

/// A validated smooth family of Riemannian metrics `{g_t}` on a compact fiber.
#[derive(Clone, Debug)]
pub struct MetricFamily {
    spec: FamilySpec,
    fiber: Fiber,
    kind: Kind,
}

impl MetricFamily {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        let (fiber, kind) = match &spec {
            FamilySpec::WarpedProduct { warp, fiber } => {
                warp.validate()?;
                check_fiber(fiber)?;
                (*fiber, Kind::Warped { warp: *warp })
            }
            FamilySpec::TorusMatrix { base, warps } => {
                let n = warps.len();
                if n == 0 || n > 3 || base.len() != n || base.iter().any(|r| r.len() != n) {
                    return Err(GeometryError::InvalidFamily(format!(
                        "torus matrix needs an n×n base with n warps (1 ≤ n ≤ 3), got {} warps",
                        n
                    )));
                }
                for w in warps {
                    w.validate()?;
                }
                let b = DMatrix::from_fn(n, n, |i, j| base[i][j]);
                if (&b - b.transpose()).amax() > 1e-12 || b.clone().cholesky().is_none() {
                    return Err(GeometryError::InvalidFamily(
                        "torus base matrix must be symmetric positive definite".into(),
                    ));
                }
                (Fiber::Torus { dim: n }, Kind::TorusMatrix { base: b, warps: warps.clone() })
            }
            FamilySpec::BumpPerturbedWarp { warp, fiber, bump, envelope } => {
                warp.validate()?;
                check_fiber(fiber)?;
                fiber.validate(&bump.center)?;
                if !(bump.concentration >= 0.0) || !bump.amplitude.is_finite() {
                    return Err(GeometryError::InvalidFamily("bad bump parameters".into()));
                }
                let center = if fiber.is_periodic() {
                    bump.center.coords.clone()
                } else {
                    fiber.embed(&bump.center)?
                };
                let kind = Kind::Bump {
                    warp: *warp,
                    amplitude: bump.amplitude,
                    concentration: bump.concentration,
                    center,
                    envelope: *envelope,
                };
                (*fiber, kind)
            }
        };
        let family = Self { spec, fiber, kind };
        family.check_positive_definite()?;
        Ok(family)
    }

    /// Convenience: de Sitter space `−dt² + cosh²t g_{Sⁿ}`.
    pub fn de_sitter(dim: usize) -> Self {
        Self::new(FamilySpec::WarpedProduct { warp: Warp::Cosh, fiber: Fiber::Sphere { dim } })
            .expect("de Sitter family is valid")
    }

    /// Convenience: `g_t = f(t)² g₀`.
    pub fn warped(warp: Warp, fiber: Fiber) -> Result<Self> {
        Self::new(FamilySpec::WarpedProduct { warp, fiber })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn dim(&self) -> usize {
        self.fiber.dim()
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.spec {
            FamilySpec::WarpedProduct { warp, fiber } => format!("warped({warp:?}, {fiber:?})"),
            FamilySpec::TorusMatrix { warps, .. } => format!("torus_matrix({warps:?})"),
            FamilySpec::BumpPerturbedWarp { warp, fiber, bump, .. } => {
                format!("bump_warp({warp:?}, {fiber:?}, eps={})", bump.amplitude)
            }
        }
    }

    /// The warp function when the family is a warped product (perturbed or not).
    pub fn warp(&self) -> Option<Warp> {
        match self.kind {
            Kind::Warped { warp } | Kind::Bump { warp, .. } => Some(warp),
            Kind::TorusMatrix { .. } => None,
        }
    }

    pub fn is_warped_product(&self) -> bool {
        matches!(self.kind, Kind::Warped { .. })
    }

    /// Whether `g_t` has constant coefficients in the chart (flat periodic fibers
    /// without a bump), so slice distances need a single metric evaluation.
    pub fn is_fiber_homogeneous(&self) -> bool {
        match self.kind {
            Kind::TorusMatrix { .. } => true,
            Kind::Warped { .. } => self.fiber.is_periodic(),
            Kind::Bump { .. } => false,
        }
    }

    /// `−dt² + cosh²t g_{Sⁿ}`, the family on which Lorentz isometries act.
    pub fn is_de_sitter(&self) -> bool {
        matches!(self.kind, Kind::Warped { warp: Warp::Cosh }) && self.fiber.is_sphere()
    }

    /// Whether `g_{−t} = g_t` by construction.
    pub fn is_time_even(&self) -> bool {
        match &self.kind {
            Kind::Warped { warp } => warp.is_even(),
            Kind::TorusMatrix { warps, .. } => warps.iter().all(Warp::is_even),
            Kind::Bump { warp, envelope, .. } => warp.is_even() && envelope.is_even(),
        }
    }

    /// Bump value and chart gradient at `x`.
    fn bump(&self, x: &FiberPoint) -> Result<(f64, Vec<f64>)> {
        let Kind::Bump { concentration, center, .. } = &self.kind else {
            return Ok((0.0, vec![0.0; self.dim()]));
        };
        let k = *concentration;
        if self.fiber.is_periodic() {
            let s: f64 = x.coords.iter().zip(center).map(|(a, c)| (a - c).cos() - 1.0).sum();
            let b = (k * s).exp();
            let grad = x.coords.iter().zip(center).map(|(a, c)| -k * (a - c).sin() * b).collect();
            Ok((b, grad))
        } else {
            let w = self.fiber.embed(x)?;
            let dot: f64 = w.iter().zip(center).map(|(a, c)| a * c).sum();
            let b = (k * (dot - 1.0)).exp();
            let j = self.fiber.embed_jacobian(x)?;
            let jc = j.transpose() * DVector::from_column_slice(center);
            Ok((b, jc.iter().map(|v| k * b * v).collect()))
        }
    }

    /// Conformal factor `ψ = f²(1 + ε b e)` with `∂_t ψ` and chart gradient `∂_x ψ`
    /// (warped and bump families only).
    fn conformal(&self, t: f64, x: &FiberPoint) -> Result<(f64, f64, Vec<f64>)> {
        match &self.kind {
            Kind::Warped { warp } => {
                let (f, fp, _) = warp.eval(t);
                Ok((f * f, 2.0 * f * fp, vec![0.0; self.dim()]))
            }
            Kind::Bump { warp, amplitude, envelope, .. } => {
                let (f, fp, _) = warp.eval(t);
                let (e, ep) = envelope.eval(t);
                let (b, grad_b) = self.bump(x)?;
                let pert = 1.0 + amplitude * b * e;
                let psi = f * f * pert;
                let dpsi = 2.0 * f * fp * pert + f * f * amplitude * b * ep;
                let grad = grad_b.iter().map(|gb| f * f * amplitude * e * gb).collect();
                Ok((psi, dpsi, grad))
            }
            Kind::TorusMatrix { .. } => Err(GeometryError::InvalidArgument(
                "torus-matrix families are not conformal to g₀".into(),
            )),
        }
    }

    fn torus_matrices(base: &DMatrix<f64>, warps: &[Warp], t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = warps.len();
        let vals: Vec<(f64, f64, f64)> = warps.iter().map(|w| w.eval(t)).collect();
        let g = DMatrix::from_fn(n, n, |i, j| vals[i].0 * base[(i, j)] * vals[j].0);
        let dg = DMatrix::from_fn(n, n, |i, j| {
            base[(i, j)] * (vals[i].1 * vals[j].0 + vals[i].0 * vals[j].1)
        });
        (g, dg)
    }

    /// Coordinate matrix of `g_t` at `x`.
    pub fn metric_at(&self, t: f64, x: &FiberPoint) -> Result<DMatrix<f64>> {
        self.fiber.validate(x)?;
        check_time(t)?;
        match &self.kind {
            Kind::TorusMatrix { base, warps } => Ok(Self::torus_matrices(base, warps, t).0),
            _ => {
                let (psi, _, _) = self.conformal(t, x)?;
                Ok(self.fiber.base_metric(x) * psi)
            }
        }
    }

    /// `∂_t g_t` at `x` (analytic for every family kind).
    pub fn metric_t_derivative(&self, t: f64, x: &FiberPoint) -> Result<DMatrix<f64>> {
        self.fiber.validate(x)?;
        check_time(t)?;
        match &self.kind {
            Kind::TorusMatrix { base, warps } => Ok(Self::torus_matrices(base, warps, t).1),
            _ => {
                let (_, dpsi, _) = self.conformal(t, x)?;
                Ok(self.fiber.base_metric(x) * dpsi)
            }
        }
    }

    /// Spatial Christoffel symbols of `g_t` at `x`, flattened `Γᵏᵢⱼ → [k*n*n + i*n + j]`.
    pub fn spatial_christoffels(&self, t: f64, x: &FiberPoint) -> Result<Vec<f64>> {
        self.fiber.validate(x)?;
        check_time(t)?;
        self.christoffels_unchecked(t, x)
    }

    fn christoffels_unchecked(&self, t: f64, x: &FiberPoint) -> Result<Vec<f64>> {
        let n = self.dim();
        match &self.kind {
            Kind::TorusMatrix { .. } => Ok(vec![0.0; n * n * n]),
            Kind::Warped { .. } => Ok(self.fiber.base_christoffels(x)),
            Kind::Bump { .. } => {
                // conformal change g = e^{2ρ} g₀ with ρ = ½ ln(1 + ε b e)
                let mut gamma = self.fiber.base_christoffels(x);
                let (psi, _, grad) = self.conformal(t, x)?;
                let drho: Vec<f64> = grad.iter().map(|g| 0.5 * g / psi).collect();
                if drho.iter().all(|d| *d == 0.0) {
                    return Ok(gamma);
                }
                let g0 = self.fiber.base_metric(x);
                let g0_inv = g0.clone().try_inverse().ok_or_else(|| {
                    GeometryError::Domain("singular base metric".into())
                })?;
                let raised = &g0_inv * DVector::from_column_slice(&drho);
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
                            v -= g0[(i, j)] * raised[k];
                            gamma[k * n * n + i * n + j] += v;
                        }
                    }
                }
                Ok(gamma)
            }
        }
    }

    /// Everything the geodesic equation needs at `(t, x)` in one evaluation.
    pub fn local(&self, t: f64, x: &FiberPoint) -> Result<LocalGeometry> {
        self.fiber.validate(x)?;
        check_time(t)?;
        let (g, dg) = match &self.kind {
            Kind::TorusMatrix { base, warps } => Self::torus_matrices(base, warps, t),
            _ => {
                let (psi, dpsi, _) = self.conformal(t, x)?;
                let g0 = self.fiber.base_metric(x);
                (&g0 * psi, g0 * dpsi)
            }
        };
        let g_inv = g
            .clone()
            .cholesky()
            .ok_or_else(|| GeometryError::Anomaly(format!("metric not positive definite at t={t}")))?
            .inverse();
        let gamma = self.christoffels_unchecked(t, x)?;
        Ok(LocalGeometry { g, g_inv, dg, gamma })
    }

    /// `g_t(v, v)`.
    pub fn norm2(&self, t: f64, x: &FiberPoint, v: &[f64]) -> Result<f64> {
        let g = self.metric_at(t, x)?;
        Ok(quad(&g, v))
    }

    /// Short-range `g_T` distance between fiber points, evaluating the metric
    /// at the midpoint. Exact for warped products over `S¹` and flat tori.
    pub fn local_distance(&self, t: f64, a: &FiberPoint, b: &FiberPoint) -> Result<f64> {
        if self.fiber.is_periodic() {
            let delta = self.fiber.displacement(a, b)?;
            let mid = FiberPoint::new(
                a.chart,
                a.coords.iter().zip(&delta).map(|(x, d)| x + 0.5 * d).collect(),
            );
            let g = self.metric_at(t, &mid)?;
            return Ok(quad(&g, &delta).max(0.0).sqrt());
        }
        let wa = self.fiber.embed(a)?;
        let wb = self.fiber.embed(b)?;
        let diff: Vec<f64> = wa.iter().zip(&wb).map(|(x, y)| x - y).collect();
        let sum: Vec<f64> = wa.iter().zip(&wb).map(|(x, y)| x + y).collect();
        let (nd, ns) = (norm(&diff), norm(&sum));
        let angle = 2.0 * nd.atan2(ns);
        let mid = if ns > 1e-12 {
            sum.iter().map(|v| v / ns).collect::<Vec<_>>()
        } else {
            wa.clone()
        };
        let mid = self.fiber.from_embedding(&mid)?;
        let (psi, _, _) = self.conformal(t, &mid)?;
        Ok(psi.sqrt() * angle)
    }

    /// Largest `sqrt(λ_max(g_t))` over a small deterministic sample of `F`.
    pub fn max_scale(&self, t: f64) -> f64 {
        self.fiber
            .background_points(6)
            .iter()
            .filter_map(|x| self.metric_at(t, x).ok())
            .map(|g| g.symmetric_eigenvalues().max().sqrt())
            .fold(0.0, f64::max)
    }

    fn check_positive_definite(&self) -> Result<()> {
        let xs = self.fiber.background_points(8);
        for t in sampling::linspace(-10.0, 10.0, 41) {
            for x in &xs {
                let g = self.metric_at(t, x)?;
                if g.cholesky().is_none() {
                    return Err(GeometryError::InvalidFamily(format!(
                        "g_t not positive definite at t={t}, x={:?}",
                        x.coords
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_fiber(fiber: &Fiber) -> Result<()> {
    let n = fiber.dim();
    if !(1..=3).contains(&n) {
        return Err(GeometryError::InvalidFamily(format!(
            "fiber dimension must be 1..=3, got {n}"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::Domain(format!("non-finite time {t}")))
    }
}

/// `vᵀ A v`.
pub fn quad(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * a[(i, j)] * v[j];
        }
    }
    s
}

/// `uᵀ A v`.
pub fn bilinear(a: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += u[i] * a[(i, j)] * v[j];
        }
    }
    s
}

/// Central-difference `∂_t g_t` with step `h` (reference path for families
/// without a closed form; the default step is 1e−5).
pub fn metric_t_derivative_fd(family: &MetricFamily, t: f64, x: &FiberPoint, h: f64) -> Result<DMatrix<f64>> {
    let gp = family.metric_at(t + h, x)?;
    let gm = family.metric_at(t - h, x)?;
    Ok((gp - gm) / (2.0 * h))
}

/// Christoffel symbols of `g_t` from central differences of `metric_at`
/// (default step 1e−4).
pub fn christoffels_fd(family: &MetricFamily, t: f64, x: &FiberPoint, h: f64) -> Result<Vec<f64>> {
    let n = family.dim();
    let g = family.metric_at(t, x)?;
    let g_inv = g
        .try_inverse()
        .ok_or_else(|| GeometryError::Domain("singular metric".into()))?;
    let mut dg = Vec::with_capacity(n);
    for l in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.coords[l] += h;
        xm.coords[l] -= h;
        dg.push((family.metric_at(t, &xp)? - family.metric_at(t, &xm)?) / (2.0 * h));
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += g_inv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                }
                gamma[k * n * n + i * n + j] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_family::fiber::{NORTH_CHART, POLAR_CHART};

    fn bump_s1() -> MetricFamily {
        MetricFamily::new(FamilySpec::BumpPerturbedWarp {
            warp: Warp::Cosh,
            fiber: Fiber::Sphere { dim: 1 },
            bump: BumpSpec {
                amplitude: 0.1,
                center: FiberPoint::angles(vec![0.0]),
                concentration: 2.0,
            },
            envelope: Envelope::Sech { center: 0.0 },
        })
        .unwrap()
    }

    #[test]
    fn de_sitter_metric_at_zero_is_identity() {
        let f = MetricFamily::de_sitter(1);
        let g = f.metric_at(0.0, &FiberPoint::angles(vec![1.3])).unwrap();
        assert_eq!(g[(0, 0)], 1.0);
    }

    #[test]
    fn exp_torus_matrix() {
        let f = MetricFamily::new(FamilySpec::TorusMatrix {
            base: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            warps: vec![Warp::Exp, Warp::Exp],
        })
        .unwrap();
        let g = f.metric_at(1.0, &FiberPoint::angles(vec![0.2, 0.4])).unwrap();
        let e2 = (2.0f64).exp();
        assert!((g[(0, 0)] - e2).abs() < 1e-14 && (g[(1, 1)] - e2).abs() < 1e-14);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn constant_torus_has_zero_derivative() {
        let f = MetricFamily::new(FamilySpec::TorusMatrix {
            base: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
            warps: vec![Warp::Constant, Warp::Constant],
        })
        .unwrap();
        let dg = f.metric_t_derivative(0.7, &FiberPoint::angles(vec![0.0, 0.0])).unwrap();
        assert_eq!(dg.amax(), 0.0);
    }

    #[test]
    fn cosh_derivative_is_sinh_two_t() {
        let f = MetricFamily::de_sitter(1);
        let dg = f.metric_t_derivative(1.0, &FiberPoint::angles(vec![0.0])).unwrap();
        assert!((dg[(0, 0)] - (2.0f64).sinh()).abs() < 1e-14);
    }

    #[test]
    fn bump_value_matches_hand_expansion() {
        // g_0(0) = cosh²(0) (1 + 0.1 · e^{2(cos 0 − 1)} · sech 0) = 1.1
        let f = bump_s1();
        let g = f.metric_at(0.0, &FiberPoint::angles(vec![0.0])).unwrap();
        assert!((g[(0, 0)] - 1.1).abs() < 1e-15);
        // at x = π: bump = e^{−4}
        let g = f.metric_at(0.0, &FiberPoint::angles(vec![std::f64::consts::PI])).unwrap();
        assert!((g[(0, 0)] - (1.0 + 0.1 * (-4.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn flat_base_christoffels_vanish() {
        let f = MetricFamily::warped(Warp::Cosh, Fiber::Torus { dim: 2 }).unwrap();
        let g = f.spatial_christoffels(0.3, &FiberPoint::angles(vec![1.0, 2.0])).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn warp_cancels_in_sphere_christoffels() {
        let f = MetricFamily::de_sitter(2);
        let x = FiberPoint::new(POLAR_CHART, vec![0.9, 0.1]);
        let a = f.spatial_christoffels(0.0, &x).unwrap();
        let b = f.spatial_christoffels(2.5, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chart_domain_error_propagates() {
        let f = MetricFamily::de_sitter(2);
        let bad = FiberPoint::new(NORTH_CHART, vec![10.0, 0.0]);
        assert!(matches!(f.metric_at(0.0, &bad), Err(GeometryError::ChartDomain { .. })));
    }

    #[test]
    fn negative_amplitude_breaking_definiteness_is_rejected() {
        let spec = FamilySpec::BumpPerturbedWarp {
            warp: Warp::Cosh,
            fiber: Fiber::Sphere { dim: 1 },
            bump: BumpSpec { amplitude: -2.0, center: FiberPoint::angles(vec![0.0]), concentration: 0.0 },
            envelope: Envelope::Sech { center: 0.0 },
        };
        assert!(matches!(MetricFamily::new(spec), Err(GeometryError::InvalidFamily(_))));
    }

    #[test]
    fn sinh_shifted_derivatives_consistent() {
        let w = Warp::SinhShifted { shift: 0.5 };
        for &t in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let h = 1e-5;
            let (_, fp, fpp) = w.eval(t);
            let d1 = (w.eval(t + h).0 - w.eval(t - h).0) / (2.0 * h);
            let d2 = (w.eval(t + h).1 - w.eval(t - h).1) / (2.0 * h);
            assert!((fp - d1).abs() < 1e-8 * (1.0 + fp.abs()));
            assert!((fpp - d2).abs() < 1e-8 * (1.0 + fpp.abs()));
        }
    }
}
