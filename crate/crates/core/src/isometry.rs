//! Isometries of the model families, the slab-intersection test `φ(K) ∩ K ≠ ∅`,
//! the end-to-end slab experiment, and the divergence check on images of `F₀`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::comparison::{item_rng, random_fiber_point};
use crate::covering::{build_slab_cover, CoverOptions};
use crate::curvature::estimate_alpha;
use crate::error::{GeometryError, Result};
use crate::geodesic::{lorentz_inner, SpacetimePoint, TangentVector};
use crate::metric_family::{bilinear, FiberPoint, HypothesisCertificate, MetricFamily};
use crate::metric_space::{build_net, estimate_diameter, GrowthPoint};

/// Allowed `‖ΛᵀηΛ − η‖` for a Lorentz matrix.
pub const LORENTZ_TOL: f64 = 1e-10;
/// Membership tolerance for slab witnesses.
pub const WITNESS_TOL: f64 = 1e-9;

/// One factor of an isometry. Ambient indices are `0` (time) and `1..=n+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Boost { axis: usize, rapidity: f64 },
    Rotation { i: usize, j: usize, angle: f64 },
    Lorentz { matrix: Vec<Vec<f64>> },
    FiberShift { shift: Vec<f64> },
    FiberRotation { matrix: Vec<Vec<f64>> },
    TimeReflection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Preserving,
    Reversing,
}

#[derive(Clone, Debug)]
enum Step {
    Lorentz(DMatrix<f64>),
    Shift(Vec<f64>),
    Rotate(DMatrix<f64>),
    Reflect,
}

/// The composite `g_k ∘ … ∘ g_1` of its generators (the first is applied first).
#[derive(Clone, Debug)]
pub struct IsometryAction {
    generators: Vec<Generator>,
    steps: Vec<Step>,
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(GeometryError::InvalidArgument("matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn minkowski_eta(size: usize) -> DMatrix<f64> {
    let mut eta = DMatrix::identity(size, size);
    eta[(0, 0)] = -1.0;
    eta
}

/// `‖ΛᵀηΛ − η‖_F`.
pub fn lorentz_defect(lambda: &DMatrix<f64>) -> f64 {
    let eta = minkowski_eta(lambda.nrows());
    (lambda.transpose() * &eta * lambda - eta).norm()
}

/// Boost in the `(x₀, x_axis)` plane of `ℝ^{1,n+1}`.
pub fn boost(n: usize, axis: usize, rapidity: f64) -> Result<DMatrix<f64>> {
    let size = n + 2;
    if axis == 0 || axis >= size {
        return Err(GeometryError::InvalidArgument(format!("boost axis {axis} outside 1..={}", n + 1)));
    }
    let mut m = DMatrix::identity(size, size);
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    m[(0, 0)] = ch;
    m[(axis, axis)] = ch;
    m[(0, axis)] = sh;
    m[(axis, 0)] = sh;
    Ok(m)
}

/// Rotation by `angle` in the spatial `(x_i, x_j)` plane.
pub fn rotation(n: usize, i: usize, j: usize, angle: f64) -> Result<DMatrix<f64>> {
    let size = n + 2;
    if i == 0 || j == 0 || i >= size || j >= size || i == j {
        return Err(GeometryError::InvalidArgument(format!("rotation plane ({i}, {j}) invalid")));
    }
    let mut m = DMatrix::identity(size, size);
    let (s, c) = angle.sin_cos();
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    Ok(m)
}

impl IsometryAction {
    pub fn identity() -> Self {
        Self { generators: Vec::new(), steps: Vec::new() }
    }

    /// Compiles generators for a fiber of dimension `n`; consecutive Lorentz
    /// factors are multiplied into one matrix.
    pub fn new(n: usize, generators: Vec<Generator>) -> Result<Self> {
        let mut steps: Vec<Step> = Vec::new();
        for g in &generators {
            let step = match g {
                Generator::Boost { axis, rapidity } => Step::Lorentz(boost(n, *axis, *rapidity)?),
                Generator::Rotation { i, j, angle } => Step::Lorentz(rotation(n, *i, *j, *angle)?),
                Generator::Lorentz { matrix } => {
                    let m = rows_to_matrix(matrix)?;
                    if m.nrows() != n + 2 {
                        return Err(GeometryError::Dimension { expected: n + 2, got: m.nrows() });
                    }
                    let d = lorentz_defect(&m);
                    if d > LORENTZ_TOL {
                        return Err(GeometryError::InvalidArgument(format!("matrix is not Lorentz: defect {d:e}")));
                    }
                    Step::Lorentz(m)
                }
                Generator::FiberShift { shift } => {
                    if shift.len() != n {
                        return Err(GeometryError::Dimension { expected: n, got: shift.len() });
                    }
                    Step::Shift(shift.clone())
                }
                Generator::FiberRotation { matrix } => {
                    let m = rows_to_matrix(matrix)?;
                    if m.nrows() != n + 1 {
                        return Err(GeometryError::Dimension { expected: n + 1, got: m.nrows() });
                    }
                    let d = (m.transpose() * &m - DMatrix::identity(n + 1, n + 1)).norm();
                    if d > LORENTZ_TOL {
                        return Err(GeometryError::InvalidArgument(format!("matrix is not orthogonal: defect {d:e}")));
                    }
                    Step::Rotate(m)
                }
                Generator::TimeReflection => Step::Reflect,
            };
            match (steps.last_mut(), step) {
                (Some(Step::Lorentz(prev)), Step::Lorentz(m)) => *prev = m * &*prev,
                (_, s) => steps.push(s),
            }
        }
        Ok(Self { generators, steps })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// The single Lorentz matrix when the action is purely Lorentz.
    pub fn lorentz_matrix(&self) -> Option<DMatrix<f64>> {
        match self.steps.as_slice() {
            [Step::Lorentz(m)] => Some(m.clone()),
            _ => None,
        }
    }

    pub fn orientation(&self) -> Orientation {
        let reversing = self
            .steps
            .iter()
            .filter(|s| match s {
                Step::Lorentz(m) => m[(0, 0)] < 0.0,
                Step::Reflect => true,
                _ => false,
            })
            .count();
        if reversing % 2 == 0 {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }

    /// Rejects actions that are not isometries of `family` by construction.
    pub fn check_compatible(&self, family: &MetricFamily) -> Result<()> {
        for s in &self.steps {
            match s {
                Step::Lorentz(_) if !family.is_de_sitter() => {
                    return Err(GeometryError::Configuration(format!(
                        "Lorentz isometries need the de Sitter family, got {}",
                        family.label()
                    )))
                }
                Step::Shift(_) if !family.is_fiber_homogeneous() => {
                    return Err(GeometryError::Configuration(format!(
                        "fiber translations need a chart-homogeneous torus family, got {}",
                        family.label()
                    )))
                }
                Step::Rotate(_) if !(family.is_warped_product() && family.fiber().is_sphere()) => {
                    return Err(GeometryError::Configuration(format!(
                        "fiber rotations need a warped sphere family, got {}",
                        family.label()
                    )))
                }
                Step::Reflect if !family.is_time_even() => {
                    return Err(GeometryError::Configuration(format!(
                        "time reflection needs a time-even family, got {}",
                        family.label()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn apply(&self, family: &MetricFamily, p: &SpacetimePoint) -> Result<SpacetimePoint> {
        let zero = TangentVector::new(0.0, vec![0.0; family.dim()]);
        Ok(self.push_forward(family, p, &zero)?.0)
    }

    /// `(φ(p), dφ_p v)`.
    pub fn push_forward(
        &self,
        family: &MetricFamily,
        p: &SpacetimePoint,
        v: &TangentVector,
    ) -> Result<(SpacetimePoint, TangentVector)> {
        self.check_compatible(family)?;
        let fiber = family.fiber();
        let mut p = p.clone();
        let mut v = v.clone();
        for s in &self.steps {
            match s {
                Step::Lorentz(m) => {
                    let omega = fiber.embed(&p.x)?;
                    let jac = fiber.embed_jacobian(&p.x)?;
                    let domega = &jac * DVector::from_column_slice(&v.dx);
                    let (sh, ch) = (p.t.sinh(), p.t.cosh());
                    let size = omega.len() + 1;
                    let mut x = DVector::zeros(size);
                    let mut dx = DVector::zeros(size);
                    x[0] = sh;
                    dx[0] = ch * v.dt;
                    for k in 0..omega.len() {
                        x[k + 1] = ch * omega[k];
                        dx[k + 1] = sh * v.dt * omega[k] + ch * domega[k];
                    }
                    let y = m * x;
                    let dy = m * dx;
                    let t = y[0].asinh();
                    let (st, ct) = (t.sinh(), t.cosh());
                    let dt = dy[0] / ct;
                    let w: Vec<f64> = (1..size).map(|k| y[k] / ct).collect();
                    let dw: Vec<f64> = (1..size).map(|k| (dy[k] - st * dt * w[k - 1]) / ct).collect();
                    let x = fiber.from_embedding(&w)?;
                    let dxc = fiber.tangent_from_embedding(&x, &dw)?;
                    p = SpacetimePoint::new(t, x);
                    v = TangentVector::new(dt, dxc);
                }
                Step::Shift(shift) => {
                    let coords = p.x.coords.iter().zip(shift).map(|(a, b)| a + b).collect();
                    p = SpacetimePoint::new(p.t, FiberPoint::new(p.x.chart, coords));
                }
                Step::Rotate(r) => {
                    let omega = DVector::from_vec(fiber.embed(&p.x)?);
                    let jac = fiber.embed_jacobian(&p.x)?;
                    let domega = &jac * DVector::from_column_slice(&v.dx);
                    let w = r * omega;
                    let dw = r * domega;
                    let x = fiber.from_embedding(w.as_slice())?;
                    let dxc = fiber.tangent_from_embedding(&x, dw.as_slice())?;
                    p = SpacetimePoint::new(p.t, x);
                    v = TangentVector::new(v.dt, dxc);
                }
                Step::Reflect => {
                    p = SpacetimePoint::new(-p.t, p.x);
                    v = TangentVector::new(-v.dt, v.dx);
                }
            }
        }
        Ok((p, v))
    }
}

/// Random product of at most three generators: rotations with uniform angles,
/// boosts with rapidity uniform in `[0, max_rapidity]`.
pub fn random_lorentz(n: usize, max_rapidity: f64, rng: &mut impl Rng) -> Result<IsometryAction> {
    let count = rng.gen_range(1..=3);
    let mut gens = Vec::with_capacity(count);
    for _ in 0..count {
        if rng.gen_bool(0.5) {
            gens.push(Generator::Boost { axis: rng.gen_range(1..=n + 1), rapidity: rng.gen_range(0.0..=max_rapidity) });
        } else {
            let i = rng.gen_range(1..=n + 1);
            let mut j = rng.gen_range(1..=n);
            if j >= i {
                j += 1;
            }
            gens.push(Generator::Rotation { i, j, angle: rng.gen_range(0.0..std::f64::consts::TAU) });
        }
    }
    IsometryAction::new(n, gens)
}

/// Random fiber translation of a torus.
pub fn random_fiber_shift(n: usize, rng: &mut impl Rng) -> Result<IsometryAction> {
    let shift = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    IsometryAction::new(n, vec![Generator::FiberShift { shift }])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryCheck {
    pub samples: usize,
    /// `max |h(dφv, dφw) − h(v,w)| / max(1, |dφv|_R |dφw|_R)` with `|·|_R` the
    /// Riemannian reference norm `dt² + g_t`.
    pub max_inner_error: f64,
    pub lorentz_defect: f64,
    /// Sign of the pushed-forward `∂_t` matches the declared orientation everywhere.
    pub orientation_consistent: bool,
    pub passed: bool,
}

fn reference_norm(family: &MetricFamily, p: &SpacetimePoint, v: &TangentVector) -> Result<f64> {
    let g = family.metric_at(p.t, &p.x)?;
    Ok((v.dt * v.dt + bilinear(&g, &v.dx, &v.dx)).sqrt())
}

/// Samples points with `t ∈ t_range` and checks that `φ` preserves `h` and
/// the declared time orientation.
pub fn check_isometry(
    family: &MetricFamily,
    action: &IsometryAction,
    samples: usize,
    t_range: (f64, f64),
    seed: u64,
    tol: f64,
) -> Result<IsometryCheck> {
    action.check_compatible(family)?;
    let expect_up = action.orientation() == Orientation::Preserving;
    let n = family.dim();
    let per: Vec<(f64, bool)> = (0..samples)
        .into_par_iter()
        .map(|k| -> Result<(f64, bool)> {
            let mut rng = item_rng(seed, k);
            let p = SpacetimePoint::new(rng.gen_range(t_range.0..=t_range.1), random_fiber_point(family, &mut rng));
            let v = TangentVector::new(rng.gen_range(-1.0..1.0), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let w = TangentVector::new(rng.gen_range(-1.0..1.0), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let (q, pv) = action.push_forward(family, &p, &v)?;
            let (_, pw) = action.push_forward(family, &p, &w)?;
            let before = lorentz_inner(family, &p, &v, &w)?;
            let after = lorentz_inner(family, &q, &pv, &pw)?;
            let scale = (reference_norm(family, &q, &pv)? * reference_norm(family, &q, &pw)?).max(1.0);
            let (_, dt) = action.push_forward(family, &p, &TangentVector::new(1.0, vec![0.0; n]))?;
            Ok(((after - before).abs() / scale, (dt.dt > 0.0) == expect_up))
        })
        .collect::<Result<_>>()?;
    let max_inner_error = per.iter().map(|r| r.0).fold(0.0, f64::max);
    let orientation_consistent = per.iter().all(|r| r.1);
    let lorentz_defect = action.lorentz_matrix().map(|m| lorentz_defect(&m)).unwrap_or(0.0);
    Ok(IsometryCheck {
        samples,
        max_inner_error,
        lorentz_defect,
        orientation_consistent,
        passed: max_inner_error <= tol && orientation_consistent && lorentz_defect <= LORENTZ_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub per_dim: usize,
    pub levels: usize,
    /// Cap on grid points per level.
    pub max_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { per_dim: 64, levels: 3, max_points: 1 << 18 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabIntersection {
    pub intersects: bool,
    pub witness: Option<SpacetimePoint>,
    pub image: Option<SpacetimePoint>,
    /// Smallest `|t(φ(p))|` seen over the search.
    pub min_abs_t: f64,
    pub evaluations: usize,
}

fn grid_axis(lo: f64, hi: f64, k: usize, m: usize) -> f64 {
    lo + (hi - lo) * (k as f64 + 0.5) / m as f64
}

/// Grid search with local refinement for `p ∈ K = [−T₂, T₂] × F` with `φ(p) ∈ K`.
pub fn slab_intersection_test(
    family: &MetricFamily,
    action: &IsometryAction,
    t2: f64,
    opts: &SearchOptions,
) -> Result<SlabIntersection> {
    if t2 <= 0.0 {
        return Err(GeometryError::InvalidArgument(format!("T2 must be positive, got {t2}")));
    }
    if action.orientation() != Orientation::Preserving {
        return Err(GeometryError::Precondition("slab test runs only on orientation-preserving isometries".into()));
    }
    action.check_compatible(family)?;
    let fiber = family.fiber();
    let mut ranges = vec![(-t2, t2)];
    ranges.extend(fiber.param_ranges());
    let dims = ranges.len();
    let per_dim = opts.per_dim.min((opts.max_points as f64).powf(1.0 / dims as f64).floor() as usize).max(2);
    let total = per_dim.pow(dims as u32);
    let eval = |params: &[f64]| -> Result<(SpacetimePoint, SpacetimePoint)> {
        let p = SpacetimePoint::new(params[0], fiber.param_point(&params[1..]));
        let q = action.apply(family, &p)?;
        Ok((p, q))
    };
    let mut evaluations = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut box_ = ranges.clone();
    for _ in 0..opts.levels.max(1) {
        let found = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut rem = idx;
                let params: Vec<f64> = box_
                    .iter()
                    .map(|&(lo, hi)| {
                        let k = rem % per_dim;
                        rem /= per_dim;
                        grid_axis(lo, hi, k, per_dim)
                    })
                    .collect();
                let score = eval(&params).map(|(_, q)| q.t.abs()).unwrap_or(f64::INFINITY);
                (score, idx, params)
            })
            .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
            .expect("non-empty grid");
        evaluations += total;
        if best.as_ref().is_none_or(|b| found.0 < b.0) {
            best = Some((found.0, found.2.clone()));
        }
        let (_, center) = best.as_ref().expect("set above");
        box_ = box_
            .iter()
            .zip(&ranges)
            .zip(center)
            .map(|((&(lo, hi), &(rlo, rhi)), &c)| {
                let half = 2.0 * (hi - lo) / per_dim as f64;
                ((c - half).max(rlo), (c + half).min(rhi))
            })
            .collect();
    }
    let (min_abs_t, params) = best.expect("at least one level");
    let (p, q) = eval(&params)?;
    let ok = p.t.abs() <= t2 + WITNESS_TOL && q.t.abs() <= t2 + WITNESS_TOL;
    Ok(SlabIntersection {
        intersects: ok,
        witness: ok.then(|| p.clone()),
        image: ok.then_some(q),
        min_abs_t,
        evaluations,
    })
}

/// An isometry drawn for the experiment, with its id and generator list.
#[derive(Clone, Debug)]
pub struct IsometrySample {
    pub id: usize,
    pub action: IsometryAction,
}

/// `count` random Lorentz elements for de Sitter, or fiber translations for
/// chart-homogeneous torus families. Item `k` uses its own stream of `seed`.
pub fn random_isometry_sample(family: &MetricFamily, count: usize, max_rapidity: f64, seed: u64) -> Result<Vec<IsometrySample>> {
    let n = family.dim();
    (0..count)
        .map(|id| {
            let mut rng = item_rng(seed, id);
            let action = if family.is_de_sitter() {
                random_lorentz(n, max_rapidity, &mut rng)?
            } else if family.is_fiber_homogeneous() && family.fiber().is_periodic() {
                random_fiber_shift(n, &mut rng)?
            } else {
                return Err(GeometryError::Configuration(format!(
                    "no isometry sampler for {}; declare fiber isometries explicitly",
                    family.label()
                )));
            };
            Ok(IsometrySample { id, action })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentOptions {
    /// Net spacing at `T₁` as a fraction of `ε`.
    pub net_fraction: f64,
    pub cover: CoverOptions,
    pub t_step: f64,
    /// Marching gives up beyond `T₁ + t_budget`.
    pub t_budget: f64,
    /// Net spacing for the diameter march, relative to the largest slice scale.
    /// `None` picks a default by fiber dimension.
    pub diameter_relative_epsilon: Option<f64>,
    /// `dia(F_{T₂})` counts as large once `lower·(1 − margin) > 2nC′`.
    pub diameter_margin: f64,
    pub search: SearchOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            net_fraction: 0.1,
            cover: CoverOptions::default(),
            t_step: 0.25,
            t_budget: 40.0,
            diameter_relative_epsilon: None,
            diameter_margin: 0.02,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryOutcome {
    pub id: usize,
    pub generators: Vec<Generator>,
    pub intersects: bool,
    pub witness: Option<SpacetimePoint>,
    pub image: Option<SpacetimePoint>,
    pub min_abs_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub family: String,
    pub t0: f64,
    pub c: f64,
    #[serde(rename = "C_prime")]
    pub c_prime: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub epsilon: f64,
    pub n_cover: usize,
    pub cover_radius: f64,
    pub threshold: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub dia_t2: GrowthPoint,
    pub march: Vec<GrowthPoint>,
    pub isometries: Vec<IsometryOutcome>,
    pub passed: bool,
}

/// Cover `F_{T₁}`, march to `T₂` with `dia(F_{T₂}) > 2·n(T₁,ε)·C′`, then test
/// every sampled isometry against `K = [−T₂, T₂] × F`.
pub fn main_theorem_experiment(
    family: &MetricFamily,
    certificate: &HypothesisCertificate,
    t1: f64,
    epsilon: f64,
    isometries: &[IsometrySample],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    if t1 <= certificate.t0() || t1 - epsilon <= certificate.t0() {
        return Err(GeometryError::Precondition(format!(
            "need T1 − ε > t0 (T1 = {t1}, ε = {epsilon}, t0 = {})",
            certificate.t0()
        )));
    }
    let net = build_net(family, t1, opts.net_fraction * epsilon)?;
    let cover = build_slab_cover(family, Some(certificate), &net, t1, epsilon, &opts.cover)?;
    let threshold = 2.0 * cover.count as f64 * certificate.projection_bound();
    let rel = opts.diameter_relative_epsilon.unwrap_or(match family.dim() {
        1 => 0.01,
        2 => 0.08,
        _ => 0.25,
    });
    let mut march = Vec::new();
    let mut t = t1;
    let found = loop {
        t += opts.t_step;
        if t > t1 + opts.t_budget {
            break None;
        }
        let eps = rel * family.max_scale(t);
        let net = build_net(family, t, eps)?;
        let d = estimate_diameter(&net);
        let point = GrowthPoint { t, lower: d.lower, upper: d.upper, nodes: net.len() };
        march.push(point.clone());
        if d.lower * (1.0 - opts.diameter_margin) > threshold {
            break Some(point);
        }
    };
    let dia_t2 = found.ok_or_else(|| {
        GeometryError::Configuration(format!(
            "slice diameter stayed below 2nC′ = {threshold} up to T = {}",
            t1 + opts.t_budget
        ))
    })?;
    let t2 = dia_t2.t;
    let mut outcomes = isometries
        .par_iter()
        .map(|s| -> Result<IsometryOutcome> {
            let r = slab_intersection_test(family, &s.action, t2, &opts.search)?;
            Ok(IsometryOutcome {
                id: s.id,
                generators: s.action.generators().to_vec(),
                intersects: r.intersects,
                witness: r.witness,
                image: r.image,
                min_abs_t: r.min_abs_t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|o| o.id);
    let passed = outcomes.iter().all(|o| o.intersects);
    Ok(ExperimentReport {
        family: family.label(),
        t0: certificate.t0(),
        c: certificate.c(),
        c_prime: certificate.projection_bound(),
        t1,
        epsilon,
        n_cover: cover.count,
        cover_radius: cover.radius,
        threshold,
        t2,
        dia_t2,
        march,
        isometries: outcomes,
        passed,
    })
}

/// `Hess t(X, Y) = −½ ∂_t g(X_x, Y_x)`.
pub fn hessian_t(family: &MetricFamily, p: &SpacetimePoint, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    let dg = family.metric_t_derivative(p.t, &p.x)?;
    Ok(-0.5 * bilinear(&dg, &x.dx, &y.dx))
}

/// Checks that `frame` is `h`-orthonormal and spacelike at `p`.
pub fn validate_frame(family: &MetricFamily, p: &SpacetimePoint, frame: &[TangentVector], tol: f64) -> Result<()> {
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate().skip(i) {
            let h = lorentz_inner(family, p, a, b)?;
            let target = if i == j { 1.0 } else { 0.0 };
            if (h - target).abs() > tol {
                return Err(GeometryError::InvalidArgument(format!(
                    "frame is not orthonormal: h(e{i}, e{j}) = {h}"
                )));
            }
        }
    }
    Ok(())
}

/// `Σ Hess t(e_i, e_i)` over a validated orthonormal frame.
pub fn hessian_trace(family: &MetricFamily, p: &SpacetimePoint, frame: &[TangentVector]) -> Result<f64> {
    validate_frame(family, p, frame, 1e-8)?;
    frame.iter().map(|e| hessian_t(family, p, e, e)).sum()
}

fn gram_schmidt(family: &MetricFamily, p: &SpacetimePoint, vs: &[TangentVector]) -> Result<Vec<TangentVector>> {
    let mut out: Vec<TangentVector> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for e in &out {
            let k = lorentz_inner(family, p, &w, e)?;
            w = TangentVector::new(w.dt - k * e.dt, w.dx.iter().zip(&e.dx).map(|(a, b)| a - k * b).collect());
        }
        let n2 = lorentz_inner(family, p, &w, &w)?;
        if n2 <= 0.0 {
            return Err(GeometryError::Domain(format!("tangent of φ(F₀) is not spacelike (h = {n2})")));
        }
        out.push(w.scaled(1.0 / n2.sqrt()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceDiagnostics {
    pub samples: usize,
    pub min_t: f64,
    pub max_t: f64,
    pub negative_trace: usize,
    pub positive_trace: usize,
    /// Samples with `|t| > 1e-9` where `sign(trace) = −sign(t)`.
    pub sign_matches_minus_t: usize,
    pub signed_samples: usize,
    pub max_trace: f64,
    /// Quadrature of the Hessian trace against the induced volume.
    pub integral: f64,
    /// Total induced volume of `φ(F₀)`.
    pub volume: f64,
    /// `max |Δ_S t − trace| / max |trace|` with `Δ_S t` from spectral
    /// differentiation along the curve (n = 1).
    pub spectral_laplacian_error: Option<f64>,
    pub max_frame_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub diagnostics: DivergenceDiagnostics,
    pub trace_negative_everywhere: bool,
    pub integral_vanishes: bool,
    pub integral_tol: f64,
    pub passed: bool,
}

fn sphere_params(n: usize, resolution: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<Vec<f64>>>)> {
    // returns parameter points, quadrature weights (g₀ area × cell size) and embedding tangents
    use std::f64::consts::{PI, TAU};
    match n {
        1 => {
            let h = TAU / resolution as f64;
            let pts = (0..resolution).map(|k| vec![k as f64 * h]).collect::<Vec<_>>();
            let tangents = pts.iter().map(|p| vec![vec![-p[0].sin(), p[0].cos()]]).collect();
            Ok((pts, vec![h; resolution], tangents))
        }
        2 => {
            let m = ((resolution as f64 / 2.0).sqrt().ceil() as usize).max(4);
            let (ht, hp) = (PI / m as f64, TAU / (2 * m) as f64);
            let mut pts = Vec::new();
            let mut weights = Vec::new();
            let mut tangents = Vec::new();
            for i in 0..m {
                let a = (i as f64 + 0.5) * ht;
                for j in 0..2 * m {
                    let b = j as f64 * hp;
                    let (sa, ca) = a.sin_cos();
                    let (sb, cb) = b.sin_cos();
                    pts.push(vec![a, b]);
                    weights.push(sa * ht * hp);
                    tangents.push(vec![vec![-sa, ca * cb, ca * sb], vec![0.0, -sa * sb, sa * cb]]);
                }
            }
            Ok((pts, weights, tangents))
        }
        _ => Err(GeometryError::InvalidArgument(format!("divergence check supports n ≤ 2, got {n}"))),
    }
}

fn spectral_derivative(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = f.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fwd.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = if k < n / 2 {
            k as f64
        } else if k == n / 2 && n % 2 == 0 {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex::new(0.0, kk);
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Evaluates the Hessian-trace field on `φ(F₀)` without requiring the image to
/// be confined: sign pattern, quadrature of the trace and (for `n = 1`) a
/// spectral cross-check of the intrinsic Laplacian of `t`.
pub fn divergence_diagnostics(family: &MetricFamily, action: &IsometryAction, resolution: usize) -> Result<DivergenceDiagnostics> {
    let fiber = family.fiber();
    if !fiber.is_sphere() {
        return Err(GeometryError::InvalidArgument("divergence check needs a sphere fiber".into()));
    }
    let n = fiber.dim();
    let (params, weights, emb_tangents) = sphere_params(n, resolution)?;
    let rows = params
        .par_iter()
        .zip(emb_tangents.par_iter())
        .map(|(pp, tans)| -> Result<(f64, f64, f64, f64)> {
            let x = fiber.param_point(pp);
            let p = SpacetimePoint::new(0.0, x.clone());
            let mut pushed = Vec::with_capacity(n);
            let mut q = p.clone();
            for dw in tans {
                let dx = fiber.tangent_from_embedding(&x, dw)?;
                let (qq, v) = action.push_forward(family, &p, &TangentVector::new(0.0, dx))?;
                q = qq;
                pushed.push(v);
            }
            let gram: Vec<f64> = (0..n * n)
                .map(|k| lorentz_inner(family, &q, &pushed[k / n], &pushed[k % n]))
                .collect::<Result<_>>()?;
            let det = if n == 1 { gram[0] } else { gram[0] * gram[3] - gram[1] * gram[2] };
            let frame = gram_schmidt(family, &q, &pushed)?;
            let mut ferr: f64 = 0.0;
            for (i, a) in frame.iter().enumerate() {
                for (j, b) in frame.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    ferr = ferr.max((lorentz_inner(family, &q, a, b)? - target).abs());
                }
            }
            let trace = frame.iter().map(|e| hessian_t(family, &q, e, e)).sum::<Result<f64>>()?;
            Ok((q.t, trace, det.max(0.0).sqrt(), ferr))
        })
        .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let traces: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let speeds: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let integral: f64 = rows.iter().zip(&weights).map(|(r, w)| r.1 * r.2 * w).sum();
    let volume: f64 = rows.iter().zip(&weights).map(|(r, w)| r.2 * w).sum();
    let signed: Vec<_> = rows.iter().filter(|r| r.0.abs() > 1e-9).collect();
    let spectral_laplacian_error = (n == 1).then(|| {
        let dt = spectral_derivative(&ts);
        let flux: Vec<f64> = dt.iter().zip(&speeds).map(|(d, s)| d / s).collect();
        let dflux = spectral_derivative(&flux);
        dflux
            .iter()
            .zip(&speeds)
            .zip(&traces)
            .map(|((d, s), tr)| (d / s - tr).abs())
            .fold(0.0, f64::max)
            / traces.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max)
    });
    Ok(DivergenceDiagnostics {
        samples: rows.len(),
        min_t: ts.iter().copied().fold(f64::INFINITY, f64::min),
        max_t: ts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        negative_trace: traces.iter().filter(|t| **t < 0.0).count(),
        positive_trace: traces.iter().filter(|t| **t > 0.0).count(),
        sign_matches_minus_t: signed.iter().filter(|r| r.1.signum() == -r.0.signum()).count(),
        signed_samples: signed.len(),
        max_trace: traces.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        integral,
        volume,
        spectral_laplacian_error,
        max_frame_error: rows.iter().map(|r| r.3).fold(0.0, f64::max),
    })
}

/// The contradiction check on `φ(F₀)`: requires the image to lie in `t > T`
/// and positive indefinite-plane curvature, then asserts the Hessian trace of
/// `t` is negative at every sample while its integral vanishes.
pub fn divergence_proposition_check(
    family: &MetricFamily,
    action: &IsometryAction,
    t: f64,
    resolution: usize,
    integral_tol: f64,
) -> Result<DivergenceReport> {
    let alpha = estimate_alpha(family, 64, (-3.0, 3.0), 0)?;
    if alpha.min_k <= 0.0 {
        return Err(GeometryError::Precondition(format!(
            "indefinite-plane curvature is not positive (min K = {})",
            alpha.min_k
        )));
    }
    let d0 = family.metric_t_derivative(0.0, &family.fiber().origin())?;
    if d0.norm() > 1e-10 {
        return Err(GeometryError::Precondition("F₀ is not totally geodesic".into()));
    }
    let diagnostics = divergence_diagnostics(family, action, resolution)?;
    if diagnostics.min_t <= t {
        return Err(GeometryError::Precondition(format!(
            "φ(F₀) is not confined to t > {t}: it reaches t = {}",
            diagnostics.min_t
        )));
    }
    let trace_negative_everywhere = diagnostics.negative_trace == diagnostics.samples;
    let integral_vanishes = diagnostics.integral.abs() <= integral_tol;
    Ok(DivergenceReport {
        passed: trace_negative_everywhere && integral_vanishes,
        diagnostics,
        trace_negative_everywhere,
        integral_vanishes,
        integral_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn ds() -> MetricFamily {
        MetricFamily::de_sitter(1)
    }

    #[test]
    fn boost_example() {
        let f = ds();
        let a = IsometryAction::new(1, vec![Generator::Boost { axis: 1, rapidity: 2.0 }]).unwrap();
        let q = a.apply(&f, &SpacetimePoint::new(0.0, FiberPoint::angles(vec![0.0]))).unwrap();
        assert!((q.t - 2.0).abs() < 1e-12);
        assert!(q.x.coords[0].abs() < 1e-12);
    }

    #[test]
    fn identity_and_rotation() {
        let f = ds();
        let p = SpacetimePoint::new(0.7, FiberPoint::angles(vec![1.1]));
        let q = IsometryAction::identity().apply(&f, &p).unwrap();
        assert_eq!(p, q);
        let r = IsometryAction::new(1, vec![Generator::Rotation { i: 1, j: 2, angle: 0.5 }]).unwrap();
        let q = r.apply(&f, &p).unwrap();
        assert!((q.t - 0.7).abs() < 1e-12);
        assert!((q.x.coords[0] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn lorentz_on_other_family_is_a_configuration_error() {
        let f = MetricFamily::warped(crate::metric_family::Warp::Exp, crate::metric_family::Fiber::Sphere { dim: 1 }).unwrap();
        let a = IsometryAction::new(1, vec![Generator::Boost { axis: 1, rapidity: 1.0 }]).unwrap();
        let p = SpacetimePoint::new(0.0, FiberPoint::angles(vec![0.0]));
        assert!(matches!(a.apply(&f, &p), Err(GeometryError::Configuration(_))));
    }

    #[test]
    fn random_elements_preserve_h() {
        let f = MetricFamily::de_sitter(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let a = random_lorentz(2, 2.0, &mut rng).unwrap();
            let c = check_isometry(&f, &a, 100, (-2.0, 2.0), 1, 1e-8).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn reversed_orientation_is_filtered() {
        let f = ds();
        let a = IsometryAction::new(1, vec![Generator::Boost { axis: 1, rapidity: 10.0 }, Generator::TimeReflection]).unwrap();
        assert_eq!(a.orientation(), Orientation::Reversing);
        assert!(matches!(slab_intersection_test(&f, &a, 1.0, &SearchOptions::default()), Err(GeometryError::Precondition(_))));
    }

    #[test]
    fn large_boost_meets_slab() {
        let f = ds();
        let a = IsometryAction::new(1, vec![Generator::Boost { axis: 2, rapidity: 10.0 }]).unwrap();
        let r = slab_intersection_test(&f, &a, 0.5, &SearchOptions::default()).unwrap();
        assert!(r.intersects);
        let w = r.witness.unwrap();
        assert!(w.t.abs() <= 0.5 && a.apply(&f, &w).unwrap().t.abs() <= 0.5 + WITNESS_TOL);
    }

    #[test]
    fn boosted_circle_diagnostics() {
        let f = ds();
        let a = IsometryAction::new(1, vec![Generator::Boost { axis: 1, rapidity: 6.0 }]).unwrap();
        let d = divergence_diagnostics(&f, &a, 4096).unwrap();
        assert!(d.min_t < 0.0 && d.max_t > 0.0);
        assert_eq!(d.sign_matches_minus_t, d.signed_samples);
        assert!(d.integral.abs() < 1e-6 * d.volume, "{d:?}");
        assert!(d.spectral_laplacian_error.unwrap() < 1e-3, "{d:?}");
        assert!(d.max_frame_error < 1e-10);
        assert!(matches!(
            divergence_proposition_check(&f, &a, 2.0, 4096, 1e-4),
            Err(GeometryError::Precondition(_))
        ));
    }

    #[test]
    fn vertical_frame_rejected() {
        let f = ds();
        let p = SpacetimePoint::new(0.5, FiberPoint::angles(vec![0.0]));
        let vertical = TangentVector::new(1.0, vec![0.0]);
        assert!(hessian_trace(&f, &p, &[vertical]).is_err());
        let e = TangentVector::new(0.0, vec![1.0 / 0.5f64.cosh()]);
        let tr = hessian_trace(&f, &p, &[e]).unwrap();
        assert!((tr + 0.5f64.tanh()).abs() < 1e-12);
    }
}
