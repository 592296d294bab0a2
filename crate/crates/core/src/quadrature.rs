//! Composite trapezoid rule.

/// Integrates `f` over `[a, b]` with `panels` equal panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels >= 1);
    if a == b {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut interior = 0.0;
    for i in 1..panels {
        interior += f(a + h * i as f64);
    }
    h * (0.5 * (f(a) + f(b)) + interior)
}

/// Trapezoid rule over samples on an evenly spaced grid with spacing `h`.
pub fn trapezoid_samples(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}
