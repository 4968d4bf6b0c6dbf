//! Grid checks of the growth condition `sign(t) ∂_t g_t(X,X) ≥ 2c g_t(X,X)` for `|t| ≥ t₀`.

use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

use super::family::MetricFamily;
use super::fiber::FiberPoint;
use crate::error::{GeometryError, Result};
use crate::sampling::linspace;

/// Relative slack used when comparing eigenvalue rates against `2c`.
const RATE_TOL: f64 = 1e-12;

/// Witness `(t₀, c)` of the growth condition with the derived length bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCertificate {
    t0: f64,
    c: f64,
    length_bound: f64,
    projection_bound: f64,
    horizon: f64,
}

impl HypothesisCertificate {
    fn issue(t0: f64, c: f64, horizon: f64) -> Self {
        Self { t0, c, length_bound: PI / c, projection_bound: (PI + 1.0) / c, horizon }
    }

    /// A certificate that was not produced by [`check_hypothesis_h`]. Useful for
    /// exercising failure paths with fabricated constants.
    pub fn unchecked(t0: f64, c: f64) -> Self {
        Self::issue(t0, c, 0.0)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `π / c`.
    pub fn length_bound(&self) -> f64 {
        self.length_bound
    }

    /// `C′ = (π + 1) / c`.
    pub fn projection_bound(&self) -> f64 {
        self.projection_bound
    }

    /// Largest `|t| − t₀` covered by the grid check (0 for unchecked certificates).
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Grid resolution for the hypothesis and growth checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisOptions {
    /// The grid covers `|t| ∈ [t₀, t₀ + horizon]`.
    pub horizon: f64,
    /// Approximate number of `(t, x)` grid points.
    pub sample_budget: usize,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { horizon: 10.0, sample_budget: 4096 }
    }
}

/// The violating sample of a failed check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub t: f64,
    pub x: FiberPoint,
    /// `g_t`-unit direction achieving the minimum rate.
    pub direction: Vec<f64>,
    /// `sign(t) ∂_t g(X,X) / g(X,X)` at the sample.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub t0: f64,
    pub c: f64,
    pub horizon: f64,
    pub samples: usize,
    /// Minimum over the grid of `λ_min − 2c`.
    pub min_margin: f64,
    /// For warped products: verdict of `sign(t) f′/f ≥ c` on the same t-grid.
    pub scalar_verdict: Option<bool>,
    pub certificate: Option<HypothesisCertificate>,
    pub counterexample: Option<Counterexample>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.certificate.is_some()
    }
}

/// Smallest `λ` with `A X = λ B X` for symmetric `A` and positive definite `B`,
/// and the `B`-unit eigenvector.
pub fn generalized_min_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::Anomaly("metric not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| GeometryError::Anomaly("singular Cholesky factor".into()))?;
    let m = &l_inv * a * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let (k, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let x = l_inv.transpose() * eig.eigenvectors.column(k);
    Ok((lambda, x.iter().copied().collect()))
}

fn grid(family: &MetricFamily, t0: f64, opts: &HypothesisOptions) -> (Vec<f64>, Vec<FiberPoint>) {
    let per_axis = match family.dim() {
        1 => 8,
        2 => 6,
        _ => 4,
    };
    let xs = family.fiber().background_points(per_axis);
    let nt = (opts.sample_budget / (2 * xs.len())).max(16);
    let ts = linspace(t0, t0 + opts.horizon, nt);
    (ts, xs)
}

/// Minimum of `λ_min(sign(t) ∂_t g, g) / 2` over the grid: the largest `c`
/// the grid can certify for this `t₀`.
pub fn best_growth_rate(family: &MetricFamily, t0: f64, opts: &HypothesisOptions) -> Result<f64> {
    let (ts, xs) = grid(family, t0, opts);
    let mut best = f64::INFINITY;
    for &s in &ts {
        for t in [s, -s] {
            for x in &xs {
                let g = family.metric_at(t, x)?;
                let dg = family.metric_t_derivative(t, x)? * t.signum();
                best = best.min(generalized_min_eigen(&dg, &g)?.0 / 2.0);
            }
        }
    }
    Ok(best)
}

/// Checks the growth condition on a deterministic `(t, x)` grid. Directions
/// `X` are handled exactly: the worst direction at each point is the
/// generalized eigenvector of `(sign(t) ∂_t g, g)` with the smallest eigenvalue.
pub fn check_hypothesis_h(
    family: &MetricFamily,
    t0: f64,
    c: f64,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport> {
    if !(t0 > 0.0 && c > 0.0 && t0.is_finite() && c.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!(
            "hypothesis check needs t0 > 0 and c > 0, got t0={t0}, c={c}"
        )));
    }
    let (ts, xs) = grid(family, t0, opts);
    let slack = RATE_TOL * (2.0 * c).max(1.0);
    let mut min_margin = f64::INFINITY;
    let mut worst: Option<Counterexample> = None;
    let mut samples = 0;
    for &s in &ts {
        for t in [s, -s] {
            for x in &xs {
                let g = family.metric_at(t, x)?;
                let dg = family.metric_t_derivative(t, x)? * t.signum();
                let (lambda, dir) = generalized_min_eigen(&dg, &g)?;
                samples += 1;
                let margin = lambda - 2.0 * c;
                if margin < min_margin {
                    min_margin = margin;
                    if margin < -slack {
                        worst = Some(Counterexample { t, x: x.clone(), direction: dir, rate: lambda });
                    }
                }
            }
        }
    }
    let scalar_verdict = family.warp().filter(|_| family.is_warped_product()).map(|w| {
        ts.iter().all(|&s| {
            [s, -s].iter().all(|&t| {
                let (f, fp, _) = w.eval(t);
                t.signum() * fp / f >= c - slack / 2.0
            })
        })
    });
    let certificate = worst.is_none().then(|| HypothesisCertificate::issue(t0, c, opts.horizon));
    Ok(HypothesisReport {
        t0,
        c,
        horizon: opts.horizon,
        samples,
        min_margin,
        scalar_verdict,
        certificate,
        counterexample: worst,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub passed: bool,
    pub pairs: usize,
    /// Minimum of `min_X g_{t₂}(X,X)/g_{t₁}(X,X) − e^{2c(t₂−t₁)}` over sampled pairs.
    pub worst_margin: f64,
    pub worst_t1: f64,
    pub worst_t2: f64,
    pub worst_x: Option<FiberPoint>,
}

/// Checks `g_{t₂}(X,X) ≥ e^{2c(t₂−t₁)} g_{t₁}(X,X)` for `t₀ ≤ |t₁| ≤ |t₂|` on
/// both sides of the slab, again with the exact worst direction.
pub fn check_exponential_growth(
    family: &MetricFamily,
    certificate: &HypothesisCertificate,
    opts: &HypothesisOptions,
) -> Result<GrowthReport> {
    let t0 = certificate.t0();
    let c = certificate.c();
    let xs = family.fiber().background_points(match family.dim() {
        1 => 6,
        2 => 4,
        _ => 3,
    });
    let nt = ((opts.sample_budget as f64 / (2.0 * xs.len() as f64)).sqrt() as usize).clamp(6, 64);
    let ts = linspace(t0, t0 + opts.horizon.max(1.0), nt);
    let mut report = GrowthReport {
        passed: true,
        pairs: 0,
        worst_margin: f64::INFINITY,
        worst_t1: t0,
        worst_t2: t0,
        worst_x: None,
    };
    for sign in [1.0, -1.0] {
        for i in 0..ts.len() {
            for j in i..ts.len() {
                let (t1, t2) = (sign * ts[i], sign * ts[j]);
                for x in &xs {
                    let g1 = family.metric_at(t1, x)?;
                    let g2 = family.metric_at(t2, x)?;
                    let (ratio, _) = generalized_min_eigen(&g2, &g1)?;
                    let target = (2.0 * c * (ts[j] - ts[i])).exp();
                    let margin = ratio - target;
                    report.pairs += 1;
                    if margin < report.worst_margin {
                        report.worst_margin = margin;
                        report.worst_t1 = t1;
                        report.worst_t2 = t2;
                        report.worst_x = Some(x.clone());
                    }
                    if margin < -RATE_TOL * target {
                        report.passed = false;
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_family::{Fiber, Warp};

    #[test]
    fn de_sitter_certifies_at_tanh_one() {
        let f = MetricFamily::de_sitter(1);
        let opts = HypothesisOptions::default();
        let r = check_hypothesis_h(&f, 1.0, 1f64.tanh(), &opts).unwrap();
        assert!(r.passed());
        assert_eq!(r.scalar_verdict, Some(true));
        let cert = r.certificate.unwrap();
        assert_eq!(cert.length_bound(), PI / 1f64.tanh());
        assert!((cert.length_bound() - 4.125022).abs() < 1e-6);
    }

    #[test]
    fn too_large_rate_fails_near_t0() {
        let f = MetricFamily::de_sitter(1);
        let r = check_hypothesis_h(&f, 1.0, 0.99, &HypothesisOptions::default()).unwrap();
        assert!(!r.passed());
        assert_eq!(r.scalar_verdict, Some(false));
        let cx = r.counterexample.unwrap();
        assert!((cx.t.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_family_rejected() {
        let f = MetricFamily::warped(Warp::Constant, Fiber::Torus { dim: 2 }).unwrap();
        let r = check_hypothesis_h(&f, 1.0, 0.1, &HypothesisOptions::default()).unwrap();
        assert!(!r.passed());
        assert_eq!(r.counterexample.unwrap().rate, 0.0);
    }

    #[test]
    fn best_rate_is_tanh_t0() {
        let f = MetricFamily::de_sitter(2);
        let c = best_growth_rate(&f, 1.0, &HypothesisOptions::default()).unwrap();
        assert!((c - 1f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn growth_check_outcomes() {
        let f = MetricFamily::de_sitter(1);
        let cert = HypothesisCertificate::unchecked(1.0, 1f64.tanh());
        assert!(check_exponential_growth(&f, &cert, &HypothesisOptions::default()).unwrap().passed);
        let flat = MetricFamily::warped(Warp::Constant, Fiber::Sphere { dim: 1 }).unwrap();
        let r = check_exponential_growth(&flat, &cert, &HypothesisOptions::default()).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn unit_direction_counterexample() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let (l, x) = generalized_min_eigen(&a, &b).unwrap();
        assert!((l - 1.25).abs() < 1e-14);
        assert!((4.0 * x[1] * x[1] - 1.0).abs() < 1e-12);
    }
}
