//! Composite trapezoidal rules used by every frequency-domain integral.

/// Trapezoidal rule over uniformly spaced samples.
pub fn trapezoid(samples: &[f64], spacing: f64) -> f64 {
    match samples {
        [] | [_] => 0.0,
        [first, inner @ .., last] => spacing * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Trapezoidal rule for `f` on `[a, b]` with `points` nodes (endpoints included).
pub fn trapezoid_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> f64 {
    assert!(points >= 2, "trapezoid needs at least two nodes");
    let h = (b - a) / (points - 1) as f64;
    let interior: f64 = (1..points - 1).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + interior)
}

/// Relative change between a coarse and a refined quadrature value.
pub fn relative_change(coarse: f64, fine: f64) -> f64 {
    if fine == 0.0 {
        coarse.abs()
    } else {
        ((fine - coarse) / fine).abs()
    }
}

/// Refinement must move a result by less than this for it to count as converged.
pub const REFINEMENT_TOLERANCE: f64 = 1e-3;
