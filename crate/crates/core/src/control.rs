//! Control-function pairs `(psi, phi)`.
//!
//! `psi` must be continuous, nondecreasing and vanish only at zero; `phi` must
//! be lower semicontinuous and vanish only at zero. Zero-at-zero, positivity
//! and monotonicity are checked on sample grids. Continuity and lower
//! semicontinuity cannot be decided from samples: they are declared, and
//! `phi` is probed only at its declared jump points.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ControlPair {
    name: String,
    psi: ScalarFn,
    phi: ScalarFn,
    /// Points where `phi` may jump; lower semicontinuity is probed there.
    phi_jumps: Vec<f64>,
}

impl fmt::Debug for ControlPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlPair")
            .field("name", &self.name)
            .field("phi_jumps", &self.phi_jumps)
            .finish()
    }
}

impl ControlPair {
    pub fn new(
        name: impl Into<String>,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ControlPair {
            name: name.into(),
            psi: Arc::new(psi),
            phi: Arc::new(phi),
            phi_jumps: Vec::new(),
        }
    }

    pub fn with_phi_jumps(mut self, jumps: Vec<f64>) -> Self {
        self.phi_jumps = jumps;
        self
    }

    /// `psi(t) = t`, `phi(t) = c t` with `0 < c < 1`.
    pub fn linear(c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(format!("linear pair needs 0 < c < 1, got {c}")));
        }
        Ok(ControlPair::new(format!("linear({c})"), |t| t, move |t| c * t))
    }

    /// The piecewise pair of the four-map worked example:
    /// `psi = 3t` on `[0, 1/3]`, `1` on `(1/3, 1]`, `t` beyond;
    /// `phi = t/3` on `(0, 1/3]`, `1/9` beyond, `0` at `0`.
    pub fn example22() -> Self {
        const THIRD: f64 = 1.0 / 3.0;
        ControlPair::new(
            "example22",
            |t| {
                if t <= THIRD {
                    3.0 * t
                } else if t <= 1.0 {
                    1.0
                } else {
                    t
                }
            },
            |t| {
                if t == 0.0 {
                    0.0
                } else if t <= THIRD {
                    t / 3.0
                } else {
                    1.0 / 9.0
                }
            },
        )
        .with_phi_jumps(vec![0.0, THIRD])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phi_jumps(&self) -> &[f64] {
        &self.phi_jumps
    }

    /// `psi(t)` without argument checks.
    pub fn psi(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    /// `phi(t)` without argument checks.
    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    /// `psi(t) - phi(t)`, the right-hand side of the contractive inequality.
    pub fn discount(&self, t: f64) -> f64 {
        self.psi(t) - self.phi(t)
    }
}

/// `(psi(t), phi(t))`, rejecting negative or non-finite `t` and non-finite or
/// negative outputs.
pub fn eval_pair(cp: &ControlPair, t: f64) -> Result<(f64, f64)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NegativeInput(t));
    }
    let (a, b) = (cp.psi(t), cp.phi(t));
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
        return Err(Error::invalid(format!("{} produced ({a}, {b}) at t = {t}", cp.name())));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub name: String,
    pub grid_size: usize,
    pub monotonicity_violations: usize,
    pub positivity_violations: usize,
    pub zero_at_zero: bool,
}

impl PairReport {
    pub fn is_clean(&self) -> bool {
        self.zero_at_zero && self.monotonicity_violations == 0 && self.positivity_violations == 0
    }
}

/// Checks zero-at-zero, positivity off zero and monotonicity of `psi` over a
/// grid. The grid is sorted and deduplicated first.
pub fn verify_pair(cp: &ControlPair, grid: &[f64]) -> PairReport {
    let mut ts: Vec<f64> = grid.iter().copied().filter(|t| t.is_finite()).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let zero_at_zero = cp.psi(0.0) == 0.0 && cp.phi(0.0) == 0.0;
    let mut positivity = 0;
    let mut monotonicity = 0;
    let mut prev: Option<f64> = None;
    for &t in &ts {
        let (a, b) = (cp.psi(t), cp.phi(t));
        let bad = if t > 0.0 {
            !(a > 0.0 && b > 0.0)
        } else {
            !(a >= 0.0 && b >= 0.0)
        };
        positivity += bad as usize;
        if let Some(p) = prev {
            monotonicity += (a < p) as usize;
        }
        prev = Some(a);
    }
    PairReport {
        name: cp.name().to_string(),
        grid_size: ts.len(),
        monotonicity_violations: monotonicity,
        positivity_violations: positivity,
        zero_at_zero,
    }
}

/// Probes lower semicontinuity of `phi` at each declared jump point. The
/// one-sided limits are estimated at distance `1e-12` from the jump; a limit
/// falling below `phi(jump)` by more than `1e-9` is a failure. Returns the
/// number of failing jump points.
pub fn check_lsc_at_jumps(cp: &ControlPair) -> usize {
    const H: f64 = 1e-12;
    cp.phi_jumps()
        .iter()
        .filter(|&&j| {
            let right = cp.phi(j + H);
            let left = if j - H >= 0.0 { cp.phi(j - H) } else { right };
            right.min(left) < cp.phi(j) - 1e-9
        })
        .count()
}

/// Checks `psi(a) + phi(2a) <= psi(2a)` on every sampled `a`. Returns the
/// number of violating samples.
pub fn check_doubling_condition(cp: &ControlPair, samples: &[f64]) -> usize {
    samples
        .iter()
        .filter(|&&a| cp.psi(a) + cp.phi(2.0 * a) > cp.psi(2.0 * a) + 1e-10)
        .count()
}

/// Composes a pair with `Psi(x) = integral of density over [0, x]`, evaluated
/// by the trapezoid rule with `quad_steps` panels. The density is checked for
/// nonnegativity on `[0, t_max]` before composing.
pub fn integral_compose(
    cp: &ControlPair,
    density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    quad_steps: usize,
    t_max: f64,
) -> Result<ControlPair> {
    if quad_steps < 16 {
        return Err(Error::invalid(format!("quad_steps must be >= 16, got {quad_steps}")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    let probes = 4 * quad_steps;
    for i in 0..=probes {
        let t = t_max * i as f64 / probes as f64;
        let v = density(t);
        if !(v >= 0.0) {
            return Err(Error::NegativeDensity { at: t, value: v });
        }
    }
    let density: ScalarFn = Arc::new(density);
    let big_psi = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            trapezoid(|t| density(t), 0.0, x, quad_steps)
        }
    };
    let big_psi = Arc::new(big_psi);
    let (psi, phi) = (cp.psi.clone(), cp.phi.clone());
    let (g1, g2) = (big_psi.clone(), big_psi);
    Ok(ControlPair {
        name: format!("integral({})", cp.name()),
        psi: Arc::new(move |t| g1(psi(t))),
        phi: Arc::new(move |t| g2(phi(t))),
        phi_jumps: cp.phi_jumps.clone(),
    })
}

/// `{0, 1e-6, step, 2 step, ..., hi}`: the standard control-pair probe grid.
pub fn probe_grid(hi: f64, step: f64) -> Vec<f64> {
    let n = (hi / step).round() as usize;
    let mut g = vec![0.0, 1e-6];
    g.extend((1..=n).map(|i| step * i as f64));
    g
}
