//! Deterministic low-discrepancy point sets.

use std::f64::consts::PI;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

/// The `index`-th point of the Halton sequence in `dim` dimensions, in `[0, 1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension {dim} unsupported");
    (0..dim).map(|d| radical_inverse(index, PRIMES[d])).collect()
}

/// Quasi-uniform point on the unit sphere S^{dim-1} ⊂ R^dim.
///
/// Index 0 is always the first basis vector.
pub fn sphere_point(index: u64, dim: usize) -> Vec<f64> {
    if index == 0 {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        return e;
    }
    let pairs = dim.div_ceil(2);
    // skip the origin of the sequence, whose coordinates are all zero
    let h = halton(index, 2 * pairs);
    let mut z = Vec::with_capacity(2 * pairs);
    for p in 0..pairs {
        let u1 = h[2 * p].max(1e-300);
        let u2 = h[2 * p + 1];
        let r = (-2.0 * u1.ln()).sqrt();
        z.push(r * (2.0 * PI * u2).cos());
        z.push(r * (2.0 * PI * u2).sin());
    }
    z.truncate(dim);
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        let mut e = vec![0.0; dim];
        e[dim - 1] = 1.0;
        return e;
    }
    z.iter().map(|v| v / norm).collect()
}

/// Fibonacci lattice on S² with `count` points.
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// `count` points uniformly spaced on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn sphere_points_are_unit() {
        for dim in 2..=4 {
            for i in 0..50 {
                let p = sphere_point(i, dim);
                let n: f64 = p.iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(1.0, 2.0, 5);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 2.0);
        assert_eq!(v.len(), 5);
    }
}
