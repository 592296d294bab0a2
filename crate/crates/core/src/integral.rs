//! Implicit integral equations `F(t, u(t)) = ∫_0^1 κ(t, s, u(s)) ds` on a
//! uniform node grid, solved by alternating the pointwise map
//! `x -> F(·, x)` and the integral map `x -> ∫ κ(·, s, x(s)) ds`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{check_doubling_condition, ControlPair};
use crate::error::{Error, Result};
use crate::metric::{linspace, BuiltinMetric, PartialMetric};
use crate::quadrature::trapezoid_samples;

/// Tolerance for the pointwise bound checks.
pub const TOL_COND: f64 = 1e-12;

/// Nonnegative samples at `t_j = j / (N - 1)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GridFunction {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for GridFunction {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        GridFunction::new(values)
    }
}

impl From<GridFunction> for Vec<f64> {
    fn from(g: GridFunction) -> Self {
        g.values
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "grid functions need at least 2 nodes, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(values));
        }
        if let Some(v) = values.iter().find(|&&v| v < 0.0) {
            return Err(Error::NegativeInput(*v));
        }
        Ok(GridFunction { values })
    }

    pub fn from_fn(nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(grid_nodes(nodes)?.into_iter().map(f).collect())
    }

    pub fn constant(nodes: usize, c: f64) -> Result<Self> {
        GridFunction::from_fn(nodes, |_| c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise order.
    pub fn leq(&self, other: &GridFunction) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// The node grid `t_j = j / (N - 1)`.
pub fn grid_nodes(nodes: usize) -> Result<Vec<f64>> {
    if nodes < 2 {
        return Err(Error::invalid(format!("grid needs at least 2 nodes, got {nodes}")));
    }
    linspace(0.0, 1.0, nodes)
}

/// Built-in pointwise maps `F(t, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterSpec {
    /// `coef * u`
    Linear { coef: f64 },
    /// `coef * u * t`
    LinearT { coef: f64 },
}

impl OuterSpec {
    pub fn build(self) -> OuterFn {
        match self {
            OuterSpec::Linear { coef } => Arc::new(move |_, u| coef * u),
            OuterSpec::LinearT { coef } => Arc::new(move |t, u| coef * u * t),
        }
    }
}

/// Built-in kernels `κ(t, s, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `coef * v`
    Linear { coef: f64 },
    /// `coef * v * s`
    LinearS { coef: f64 },
}

impl KernelSpec {
    pub fn build(self) -> KernelFn {
        match self {
            KernelSpec::Linear { coef } => Arc::new(move |_, _, v| coef * v),
            KernelSpec::LinearS { coef } => Arc::new(move |_, s, v| coef * v * s),
        }
    }
}

pub type OuterFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct IntegralProblem {
    outer: OuterFn,
    kernel: KernelFn,
    h: f64,
    nodes: Vec<f64>,
    control: ControlPair,
}

impl fmt::Debug for IntegralProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegralProblem")
            .field("h", &self.h)
            .field("nodes", &self.nodes.len())
            .field("control", &self.control.name())
            .finish()
    }
}

impl IntegralProblem {
    pub fn new(outer: OuterFn, kernel: KernelFn, h: f64, nodes: usize, control: ControlPair) -> Result<Self> {
        if !(0.0..0.25).contains(&h) {
            return Err(Error::invalid(format!("h must lie in [0, 1/4), got {h}")));
        }
        Ok(IntegralProblem {
            outer,
            kernel,
            h,
            nodes: grid_nodes(nodes)?,
            control,
        })
    }

    pub fn from_specs(
        outer: OuterSpec,
        kernel: KernelSpec,
        h: f64,
        nodes: usize,
        control: ControlPair,
    ) -> Result<Self> {
        IntegralProblem::new(outer.build(), kernel.build(), h, nodes, control)
    }

    /// `F = h u`, `κ = 2h v` with the linear `(t, t/2)` control pair.
    pub fn saturated(h: f64, nodes: usize) -> Result<Self> {
        IntegralProblem::from_specs(
            OuterSpec::Linear { coef: h },
            KernelSpec::Linear { coef: 2.0 * h },
            h,
            nodes,
            ControlPair::linear(0.5)?,
        )
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn control(&self) -> &ControlPair {
        &self.control
    }

    fn spacing(&self) -> f64 {
        1.0 / (self.nodes.len() - 1) as f64
    }

    fn check_len(&self, x: &GridFunction) -> Result<()> {
        if x.len() != self.nodes.len() {
            return Err(Error::Dimension {
                expected: self.nodes.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn outer_raw(&self, x: &GridFunction) -> Vec<f64> {
        self.nodes
            .par_iter()
            .zip(x.values.par_iter())
            .map(|(&t, &u)| (self.outer)(t, u))
            .collect()
    }

    fn integral_raw(&self, x: &GridFunction) -> Vec<f64> {
        let h = self.spacing();
        self.nodes
            .par_iter()
            .map_init(
                || Vec::with_capacity(self.nodes.len()),
                |buf, &t| {
                    buf.clear();
                    buf.extend(self.nodes.iter().zip(&x.values).map(|(&s, &v)| (self.kernel)(t, s, v)));
                    trapezoid_samples(buf, h)
                },
            )
            .collect()
    }
}

fn nonnegative(values: Vec<f64>, what: &'static str) -> Result<GridFunction> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(values));
    }
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::Negativity(what));
    }
    Ok(GridFunction { values })
}

/// `(f x)(t_j) = F(t_j, x(t_j))`.
pub fn apply_f(prob: &IntegralProblem, x: &GridFunction) -> Result<GridFunction> {
    prob.check_len(x)?;
    nonnegative(prob.outer_raw(x), "pointwise map returned a negative value")
}

/// `(g x)(t_j) = ∫_0^1 κ(t_j, s, x(s)) ds` by the trapezoid rule on the node grid.
pub fn apply_g(prob: &IntegralProblem, x: &GridFunction) -> Result<GridFunction> {
    prob.check_len(x)?;
    nonnegative(prob.integral_raw(x), "kernel integral returned a negative value")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n_probes: usize,
    /// Nodes with `F(t, u) > h u`.
    pub pointwise_bound_violations: usize,
    /// Probes with `sup_t ∫ κ(t, s, v(s)) ds > 2h sup v`.
    pub integral_bound_violations: usize,
    /// Nodes with `∫ κ(t, s, v(s)) ds > 2h v(t)`; informational.
    pub integral_pointwise_excess: usize,
    /// Samples with `psi(a) + phi(2a) > psi(2a)`.
    pub doubling_violations: usize,
    pub doubling_samples: usize,
}

impl ConditionReport {
    pub fn is_clean(&self) -> bool {
        self.pointwise_bound_violations == 0 && self.integral_bound_violations == 0 && self.doubling_violations == 0
    }
}

/// `1`, `t`, `sin(pi t)`, `1 - t`.
pub fn standard_probes(nodes: usize) -> Result<Vec<GridFunction>> {
    Ok(vec![
        GridFunction::constant(nodes, 1.0)?,
        GridFunction::from_fn(nodes, |t| t)?,
        GridFunction::from_fn(nodes, |t| (std::f64::consts::PI * t).sin().max(0.0))?,
        GridFunction::from_fn(nodes, |t| 1.0 - t)?,
    ])
}

pub fn check_conditions(prob: &IntegralProblem, probes: &[GridFunction]) -> Result<ConditionReport> {
    if probes.is_empty() {
        return Err(Error::invalid("condition check needs at least one probe"));
    }
    let h = prob.h;
    let mut report = ConditionReport {
        n_probes: probes.len(),
        pointwise_bound_violations: 0,
        integral_bound_violations: 0,
        integral_pointwise_excess: 0,
        doubling_violations: 0,
        doubling_samples: 0,
    };
    for v in probes {
        prob.check_len(v)?;
        let fv = prob.outer_raw(v);
        report.pointwise_bound_violations += fv
            .iter()
            .zip(&v.values)
            .filter(|(f, u)| !(**f <= h * **u + TOL_COND))
            .count();
        let gv = prob.integral_raw(v);
        let sup_g = gv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(sup_g <= 2.0 * h * v.sup() + TOL_COND) {
            report.integral_bound_violations += 1;
        }
        report.integral_pointwise_excess += gv
            .iter()
            .zip(&v.values)
            .filter(|(g, u)| !(**g <= 2.0 * h * **u + TOL_COND))
            .count();
    }
    let samples = linspace(0.0, 4.0, 401)?;
    report.doubling_samples = samples.len();
    report.doubling_violations = check_doubling_condition(&prob.control, &samples);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub tol: f64,
    /// Cap on full `f`-then-`g` cycles.
    pub max_cycles: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_cycles: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    ConditionViolation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub conditions: ConditionReport,
    pub solution: GridFunction,
    /// Half-steps applied; even indices are `f` steps.
    pub steps: usize,
    pub cycles: usize,
    /// Index of the half-step whose sup-norm change met `tol`.
    pub converged_step: Option<usize>,
    /// `sup |x_{n+1} - x_n|` per half-step.
    pub step_norms: Vec<f64>,
    /// `sup x_n` for `n = 0..=steps`.
    pub sup_norms: Vec<f64>,
    /// `p(x_n, x_{n+1})` in the sup-pair partial metric.
    pub p_values: Vec<f64>,
    /// Cycles where `psi(p(f x, g f x)) > psi(p(x, f x)) - phi(p(x, f x))`.
    pub contraction_violations: usize,
    /// `|F(t_j, u_j) - ∫ κ(t_j, s, u(s)) ds|`.
    pub residual: Vec<f64>,
    pub residual_sup: f64,
}

impl SolveResult {
    /// Writes `t, u, residual` rows.
    pub fn write_csv<W: std::io::Write>(&self, prob: &IntegralProblem, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "u", "residual"])?;
        for ((t, u), r) in prob.nodes.iter().zip(&self.solution.values).zip(&self.residual) {
            out.write_record([t.to_string(), u.to_string(), r.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<solution>", e))?;
        Ok(())
    }
}

/// Alternates `x <- f x`, `x <- g x` from `x0` until the sup-norm change of a
/// half-step is at most `tol`. Conditions are checked on the standard probes
/// first; a failure skips the iteration and reports the residual of `x0`.
pub fn solve(prob: &IntegralProblem, x0: &GridFunction, opts: &SolveOptions) -> Result<SolveResult> {
    prob.check_len(x0)?;
    if !(opts.tol >= 0.0) {
        return Err(Error::invalid("solve needs tol >= 0"));
    }
    let conditions = check_conditions(prob, &standard_probes(prob.nodes.len())?)?;
    let mut result = SolveResult {
        status: SolveStatus::MaxIters,
        conditions,
        solution: x0.clone(),
        steps: 0,
        cycles: 0,
        converged_step: None,
        step_norms: Vec::new(),
        sup_norms: vec![x0.sup()],
        p_values: Vec::new(),
        contraction_violations: 0,
        residual: Vec::new(),
        residual_sup: 0.0,
    };
    let admissible = result.conditions.is_clean();
    if !admissible {
        result.status = SolveStatus::ConditionViolation;
    }
    let max_steps = if admissible { 2 * opts.max_cycles } else { 0 };
    let sup_pair = BuiltinMetric::SupPair;
    let cp = &prob.control;
    let mut x = x0.clone();
    for step in 0..max_steps {
        let next = if step % 2 == 0 {
            apply_f(prob, &x)?
        } else {
            apply_g(prob, &x)?
        };
        let delta = x.sup_distance(&next);
        result.step_norms.push(delta);
        result.sup_norms.push(next.sup());
        result.p_values.push(sup_pair.distance(&x.values, &next.values));
        if step % 2 == 1 {
            let a = result.p_values[step - 1];
            let lhs = cp.psi(result.p_values[step]);
            if lhs > cp.discount(a) + 1e-10 {
                result.contraction_violations += 1;
            }
        }
        x = next;
        result.steps = step + 1;
        if delta <= opts.tol {
            result.status = SolveStatus::Converged;
            result.converged_step = Some(step);
            break;
        }
    }
    result.cycles = result.steps.div_ceil(2);
    let fu = prob.outer_raw(&x);
    let gu = prob.integral_raw(&x);
    result.residual = fu.iter().zip(&gu).map(|(a, b)| (a - b).abs()).collect();
    result.residual_sup = result.residual.iter().copied().fold(0.0, f64::max);
    result.solution = x;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(outer: OuterSpec, kernel: KernelSpec, h: f64, n: usize) -> IntegralProblem {
        IntegralProblem::from_specs(outer, kernel, h, n, ControlPair::linear(0.5).unwrap()).unwrap()
    }

    #[test]
    fn apply_f_examples() {
        let p = IntegralProblem::saturated(0.2, 11).unwrap();
        let one = GridFunction::constant(11, 1.0).unwrap();
        assert!(apply_f(&p, &one).unwrap().values().iter().all(|&v| v == 0.2));
        let zero = GridFunction::constant(11, 0.0).unwrap();
        assert_eq!(apply_f(&p, &zero).unwrap(), zero);

        let pt = problem(
            OuterSpec::LinearT { coef: 0.2 },
            KernelSpec::Linear { coef: 0.4 },
            0.2,
            5,
        );
        let fx = apply_f(&pt, &GridFunction::constant(5, 1.0).unwrap()).unwrap();
        for (got, want) in fx.values().iter().zip([0.0, 0.05, 0.1, 0.15, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_g_examples() {
        let p = IntegralProblem::saturated(0.2, 11).unwrap();
        let gx = apply_g(&p, &GridFunction::constant(11, 1.0).unwrap()).unwrap();
        assert!(gx.values().iter().all(|&v| (v - 0.4).abs() < 1e-15));
        let zero = GridFunction::constant(11, 0.0).unwrap();
        assert_eq!(apply_g(&p, &zero).unwrap(), zero);
        for n in [2, 3, 17, 201] {
            let ps = problem(
                OuterSpec::Linear { coef: 0.2 },
                KernelSpec::LinearS { coef: 0.4 },
                0.2,
                n,
            );
            let gx = apply_g(&ps, &GridFunction::constant(n, 1.0).unwrap()).unwrap();
            assert!(gx.values().iter().all(|&v| (v - 0.2).abs() <= 1e-12), "{n}");
        }
    }

    #[test]
    fn negative_outputs_are_rejected() {
        let p = IntegralProblem::from_specs(
            OuterSpec::Linear { coef: -0.1 },
            KernelSpec::Linear { coef: -0.1 },
            0.2,
            5,
            ControlPair::linear(0.5).unwrap(),
        )
        .unwrap();
        let one = GridFunction::constant(5, 1.0).unwrap();
        assert!(matches!(apply_f(&p, &one), Err(Error::Negativity(_))));
        assert!(matches!(apply_g(&p, &one), Err(Error::Negativity(_))));
        assert!(GridFunction::new(vec![1.0, -1.0]).is_err());
        assert!(GridFunction::new(vec![1.0]).is_err());
        assert!(IntegralProblem::saturated(0.25, 5).is_err());
    }

    #[test]
    fn conditions_on_saturated_problem() {
        let p = IntegralProblem::saturated(0.2, 201).unwrap();
        let r = check_conditions(&p, &standard_probes(201).unwrap()).unwrap();
        assert!(r.is_clean(), "{r:?}");
        assert!(r.integral_pointwise_excess > 0);

        let bad = IntegralProblem::from_specs(
            OuterSpec::Linear { coef: 0.2 },
            KernelSpec::Linear { coef: 0.4 },
            0.2,
            11,
            ControlPair::new("steep", |t| t, |t| 2.0 * t),
        )
        .unwrap();
        let r = check_conditions(&bad, &standard_probes(11).unwrap()).unwrap();
        assert_eq!(r.doubling_violations, r.doubling_samples - 1);

        let loose = problem(
            OuterSpec::Linear { coef: 0.3 },
            KernelSpec::Linear { coef: 0.5 },
            0.2,
            11,
        );
        let r = check_conditions(&loose, &standard_probes(11).unwrap()).unwrap();
        assert!(r.pointwise_bound_violations > 0);
        assert_eq!(r.integral_bound_violations, 1);
        let s = solve(
            &loose,
            &GridFunction::constant(11, 1.0).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(s.status, SolveStatus::ConditionViolation);
    }

    #[test]
    fn saturated_solve_decays_geometrically() {
        let p = IntegralProblem::saturated(0.2, 201).unwrap();
        let s = solve(&p, &GridFunction::constant(201, 1.0).unwrap(), &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert!(s.cycles <= 14);
        assert!(s.solution.sup() <= 1e-8);
        assert!(s.residual_sup <= 1e-10);
        assert_eq!(s.contraction_violations, 0);
        for (n, w) in s.sup_norms.windows(2).enumerate() {
            let factor = if n % 2 == 0 { 0.2 } else { 0.4 };
            assert!(w[1] <= factor * w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_start_is_fixed() {
        let p = IntegralProblem::saturated(0.2, 21).unwrap();
        let s = solve(&p, &GridFunction::constant(21, 0.0).unwrap(), &SolveOptions::default()).unwrap();
        assert_eq!(s.converged_step, Some(0));
        assert_eq!(s.residual_sup, 0.0);
    }

    #[test]
    fn weighted_problem() {
        let p = problem(
            OuterSpec::LinearT { coef: 0.1 },
            KernelSpec::LinearS { coef: 0.2 },
            0.1,
            201,
        );
        let s = solve(&p, &GridFunction::constant(201, 1.0).unwrap(), &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert!(s.cycles <= 10);
        assert!(s.solution.sup() <= 1e-8);
        assert!(s.residual_sup <= 1e-10);
    }

    #[test]
    fn solution_csv() {
        let p = IntegralProblem::saturated(0.2, 3).unwrap();
        let s = solve(&p, &GridFunction::constant(3, 1.0).unwrap(), &SolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,u,residual\n0,"));
        assert_eq!(text.lines().count(), 4);
    }
}
