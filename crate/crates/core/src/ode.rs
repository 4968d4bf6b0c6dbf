//! Dormand–Prince 5(4) integration with FSAL and bisection event location.

use crate::error::{GeometryError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size control parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for DormandPrince {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_min: 1e-12, h_max: 0.1 }
    }
}

/// One completed Runge–Kutta step.
#[derive(Clone, Debug)]
pub struct Step {
    pub h: f64,
    pub y: Vec<f64>,
    /// Derivative at the new state (first stage of the next step).
    pub dy: Vec<f64>,
    /// Scaled error norm; the step is acceptable when ≤ 1.
    pub err: f64,
}

impl DormandPrince {
    /// A single trial step of size `h` from `(u, y)` with `dy = f(u, y)`.
    pub fn trial<F>(&self, rhs: &mut F, u: f64, y: &[f64], dy: &[f64], h: f64) -> Result<Step>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    {
        let n = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(dy.to_vec());
        let mut tmp = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            k.push(rhs(u + C[s] * h, &tmp)?);
        }
        // stage 7 was evaluated at the 5th-order solution (FSAL), which is `tmp`
        let y_new = tmp;
        let mut sum = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            let r = h * e / scale;
            sum += r * r;
        }
        let err = (sum / n.max(1) as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Integration { u, reason: "non-finite state".into() });
        }
        let dy_new = k.pop().expect("seven stages");
        Ok(Step { h, y: y_new, dy: dy_new, err })
    }

    /// Retries from `(u, y)` with shrinking steps until one is accepted.
    /// Returns the accepted step and a suggested next step size.
    pub fn advance<F>(&self, rhs: &mut F, u: f64, y: &[f64], dy: &[f64], h_try: f64) -> Result<(Step, f64)>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    {
        let mut h = h_try.min(self.h_max);
        loop {
            if h < self.h_min {
                return Err(GeometryError::Integration {
                    u,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let step = self.trial(rhs, u, y, dy, h)?;
            if step.err <= 1.0 {
                let factor = if step.err == 0.0 { 5.0 } else { (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0) };
                let next = (h * factor).min(self.h_max);
                return Ok((step, next));
            }
            h *= (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    /// Integrates from `u0` to `u1` (`u1 ≥ u0`) and returns the final state.
    pub fn integrate_to<F>(&self, rhs: &mut F, u0: f64, y0: &[f64], u1: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    {
        let mut u = u0;
        let mut y = y0.to_vec();
        if u1 <= u0 {
            return Ok(y);
        }
        let mut dy = rhs(u, &y)?;
        let mut h = (u1 - u0).min(self.h_max).min(0.01);
        while u < u1 {
            let remaining = u1 - u;
            let last = h >= remaining;
            let (step, next) = self.advance(rhs, u, &y, &dy, h.min(remaining))?;
            u = if last && step.h == remaining { u1 } else { u + step.h };
            y = step.y;
            dy = step.dy;
            h = next;
            if remaining - step.h <= 1e-15 * u1.abs().max(1.0) {
                break;
            }
        }
        Ok(y)
    }
}

/// Bisection for the root of `level(h)` on `[0, h_hi]`, where `level(0)` and
/// `level(h_hi)` have opposite signs. `level` typically re-steps the
/// integrator from the step start with the shorter step `h`.
pub fn locate_crossing<G>(mut level: G, level_lo: f64, h_hi: f64, tol: f64) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let mut lo = 0.0;
    let mut hi = h_hi;
    let sign_lo = level_lo.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = level(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let dp = DormandPrince::default();
        let mut rhs = |_u: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        let y = dp.integrate_to(&mut rhs, 0.0, &[1.0, 0.0], std::f64::consts::TAU).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert!(y[1].abs() < 1e-9);
    }

    #[test]
    fn exponential_growth() {
        let dp = DormandPrince::default();
        let mut rhs = |_u: f64, y: &[f64]| Ok(vec![y[0]]);
        let y = dp.integrate_to(&mut rhs, 0.0, &[1.0], 2.0).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn crossing_of_linear_level() {
        let root = locate_crossing(|h| Ok(h - 0.3), -0.3, 1.0, 1e-12).unwrap();
        assert!((root - 0.3).abs() < 1e-11);
    }
}
