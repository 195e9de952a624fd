//! Gauss–Legendre rules on intervals.

use crate::error::{Error, Result};

/// Five-point Gauss–Legendre nodes on [-1, 1].
pub const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];

pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point rule mapped onto [lo, hi].
pub fn gl5<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Gauss–Legendre: compare the 5-point rule on [lo, hi] with the
/// sum over both halves and bisect until they agree to `tol`.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if hi < lo {
        return adaptive(f, hi, lo, tol).map(|v| -v);
    }
    let whole = gl5(f, lo, hi);
    recurse(f, lo, hi, whole, tol, 0)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let left = gl5(f, lo, mid);
    let right = gl5(f, mid, hi);
    let refined = left + right;
    if (refined - whole).abs() <= tol {
        return Ok(refined);
    }
    if depth >= MAX_DEPTH || mid <= lo || mid >= hi {
        return Err(Error::Quadrature { lo, hi });
    }
    Ok(recurse(f, lo, mid, left, 0.5 * tol, depth + 1)?
        + recurse(f, mid, hi, right, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl5_is_exact_for_degree_nine() {
        let f = |x: f64| x.powi(9) - 3.0 * x.powi(4) + 1.0;
        let exact = |x: f64| x.powi(10) / 10.0 - 0.6 * x.powi(5) + x;
        let got = gl5(f, -0.3, 1.7);
        assert!((got - (exact(1.7) - exact(-0.3))).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_two() {
        assert!((GL5_WEIGHTS.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_a_kink() {
        let got = adaptive(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12).unwrap();
        assert!((got - (0.045 + 0.245)).abs() < 1e-12);
        let rev = adaptive(&|x: f64| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((rev + 0.5).abs() < 1e-15);
    }
}
