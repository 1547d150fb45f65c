//! Continuity method for the radial soliton Monge–Ampère equation
//!
//! `log((a + φ''/2)/a) + φ' = sF`,
//!
//! the reduction of `(ω + i∂∂̄φ)^n = e^{sF - X(φ)/2} ω^n` with `X = 2∂_t`.
//! Each step in `s` is a damped Newton iteration on the node increments of
//! `φ` (see [`crate::potential`]). At the capped end the reflected stencil
//! imposes `φ'(t_min) = 0`; at `t_max` the value is pinned to zero and no
//! equation is imposed, matching the Dirichlet policy of the linear solver.
//! With these unknowns the Jacobian is lower bidiagonal.

use std::fmt;

use serde::Serialize;

use crate::drift::DriftOperator;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::model::RadialKahlerModel;
use crate::norms::decay_rate_fit;
use crate::potential::{InnerStencil, RadialPotential};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityConfig {
    /// Number of uniform steps in `s` before adaptation.
    pub steps: usize,
    pub min_step: f64,
    /// Newton tolerance on the sup-norm of the residual.
    pub tolerance: f64,
    pub max_newton: usize,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// Trial steps must keep `(a + φ''/2)/a` above this.
    pub positivity_floor: f64,
    /// Weight `ε` of the recorded `sup e^{εt}|φ|`.
    pub record_weight: f64,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        Self {
            steps: 10,
            min_step: 1.0 / 160.0,
            tolerance: 1e-10,
            max_newton: 30,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 40,
            positivity_floor: 1e-6,
            record_weight: 1.4,
        }
    }
}

impl ContinuityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::param("steps", "must be positive"));
        }
        let first = 1.0 / self.steps as f64;
        if !(self.min_step > 0.0 && self.min_step <= first) {
            return Err(Error::param("min_step", "must lie in (0, 1/steps]"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        if self.max_newton == 0 {
            return Err(Error::param("max_newton", "must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::param("backtrack", "must lie in (0, 1)"));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(Error::param("sufficient_decrease", "must lie in (0, 1)"));
        }
        if !(self.positivity_floor > 0.0 && self.positivity_floor < 1.0) {
            return Err(Error::param("positivity_floor", "must lie in (0, 1)"));
        }
        if !self.record_weight.is_finite() {
            return Err(Error::param("record_weight", "must be finite"));
        }
        Ok(())
    }
}

/// State of the path at one accepted value of `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub s: f64,
    pub step: f64,
    pub iterations: usize,
    pub sup_residual: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `sup e^{εt}|φ|` with `ε` = [`ContinuityConfig::record_weight`].
    pub weighted_sup: f64,
    /// `inf (f + φ')`.
    pub inf_f_plus_dphi: f64,
    pub sup_dphi: f64,
    /// Step halvings spent before this step was accepted.
    pub halvings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Stalled,
    PositivityLost,
    NewtonDiverged,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::Stalled => "continuity stalled",
            FailureKind::PositivityLost => "positivity lost",
            FailureKind::NewtonDiverged => "Newton diverged",
        })
    }
}

/// Failure of [`continuity_solve`], with the path accepted so far.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{kind} at s = {s_reached}: {detail}")]
pub struct ContinuityFailure {
    pub kind: FailureKind,
    pub s_reached: f64,
    pub detail: String,
    pub records: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSolution {
    pub phi: GridFunction,
    pub potential: RadialPotential,
    pub records: Vec<StepRecord>,
    pub final_residual: f64,
    pub newton_iterations: usize,
    pub halvings: usize,
    /// `decay_rate_fit(φ)`.
    pub decay: f64,
    pub config: ContinuityConfig,
    pub warnings: Vec<String>,
}

fn inner_for(model: &RadialKahlerModel) -> InnerStencil {
    if model.has_origin() {
        InnerStencil::Reflect
    } else {
        InnerStencil::OneSided
    }
}

/// Residual `log((a + φ''/2)/a) + φ' - sF` at every node.
pub fn ma_residual_radial(
    model: &RadialKahlerModel,
    phi: &RadialPotential,
    f: &GridFunction,
    s: f64,
) -> Result<GridFunction> {
    let grid = *phi.grid();
    grid.ensure_same(f.grid())?;
    let a = model.coefficient_on(&grid)?;
    let r = residual(&grid, &a, phi, f.values(), s)?;
    GridFunction::new(grid, r)
}

/// Same as [`ma_residual_radial`] for potentials given by node values; the
/// inner stencil follows the model (reflected at a capped end).
pub fn ma_residual_values(
    model: &RadialKahlerModel,
    phi: &GridFunction,
    f: &GridFunction,
    s: f64,
) -> Result<GridFunction> {
    ma_residual_radial(model, &RadialPotential::from_values_with(phi, inner_for(model)), f, s)
}

fn residual(grid: &Grid, a: &[f64], phi: &RadialPotential, f: &[f64], s: f64) -> Result<Vec<f64>> {
    let q = phi.curvature_ratio(a);
    let dphi = phi.first_derivative();
    let mut r = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        if !(q[i] > -1.0) {
            return Err(Error::PositivityLost {
                node: i,
                t: grid.t(i),
                ratio: 1.0 + q[i],
            });
        }
        r.push(q[i].ln_1p() + dphi[i] - s * f[i]);
    }
    Ok(r)
}

/// The linearization `u ↦ ½ a_φ⁻¹ u'' + u'` of the residual at `φ`, with
/// `a_φ = a + φ''/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator {
    grid: Grid,
    a_phi: Vec<f64>,
}

impl LinearizedOperator {
    pub fn coefficient(&self) -> &[f64] {
        &self.a_phi
    }

    /// As a drift operator with coefficient `a_φ`, scaled by ½.
    pub fn drift(&self) -> DriftOperator {
        DriftOperator::new(self.grid, self.a_phi.clone(), 0.0, 0.0)
            .expect("positivity checked on construction")
            .scaled(0.5)
    }

    /// Apply to a perturbation given by increments, at every node, using
    /// the same stencils as the residual.
    pub fn apply(&self, psi: &RadialPotential) -> Vec<f64> {
        let d2 = psi.second_derivative();
        let d1 = psi.first_derivative();
        d2.iter()
            .zip(&d1)
            .zip(&self.a_phi)
            .map(|((d2, d1), a)| 0.5 * d2 / a + d1)
            .collect()
    }
}

pub fn linearized_operator(model: &RadialKahlerModel, phi: &RadialPotential) -> Result<LinearizedOperator> {
    let grid = *phi.grid();
    let a = model.coefficient_on(&grid)?;
    let q = phi.curvature_ratio(&a);
    let mut a_phi = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let ratio = 1.0 + q[i];
        if !(ratio > 0.0) {
            return Err(Error::PositivityLost {
                node: i,
                t: grid.t(i),
                ratio,
            });
        }
        a_phi.push(a[i] * ratio);
    }
    Ok(LinearizedOperator { grid, a_phi })
}

enum NewtonFailure {
    NotConverged(f64),
    LineSearch(f64),
    Positivity { node: usize, t: f64, ratio: f64 },
    NonFinite(String),
}

impl NewtonFailure {
    fn describe(&self) -> String {
        match self {
            NewtonFailure::NotConverged(r) => format!("no convergence, residual {r:e}"),
            NewtonFailure::LineSearch(r) => format!("line search failed at residual {r:e}"),
            NewtonFailure::Positivity { node, t, ratio } => {
                format!("metric ratio {ratio:e} at node {node} (t = {t})")
            }
            NewtonFailure::NonFinite(why) => why.clone(),
        }
    }

    fn kind(&self) -> FailureKind {
        match self {
            NewtonFailure::NotConverged(_) | NewtonFailure::LineSearch(_) => FailureKind::Stalled,
            NewtonFailure::Positivity { .. } => FailureKind::PositivityLost,
            NewtonFailure::NonFinite(_) => FailureKind::NewtonDiverged,
        }
    }
}

/// Everything the Newton iteration needs that does not depend on `φ`.
struct Problem<'a> {
    grid: Grid,
    a: Vec<f64>,
    f: &'a [f64],
    cfg: &'a ContinuityConfig,
}

impl Problem<'_> {
    /// Residual on the equation rows `0..n-1`; the last node is the
    /// Dirichlet node.
    fn rows(&self, phi: &RadialPotential, s: f64) -> std::result::Result<(Vec<f64>, Vec<f64>), NewtonFailure> {
        let q = phi.curvature_ratio(&self.a);
        let dphi = phi.first_derivative();
        let m = q.len() - 1;
        let mut r = Vec::with_capacity(m);
        for i in 0..m {
            let ratio = 1.0 + q[i];
            if !(ratio > self.cfg.positivity_floor) {
                return Err(NewtonFailure::Positivity {
                    node: i,
                    t: self.grid.t(i),
                    ratio,
                });
            }
            let v = q[i].ln_1p() + dphi[i] - s * self.f[i];
            if !v.is_finite() {
                return Err(NewtonFailure::NonFinite(format!("non-finite residual at node {i}")));
            }
            r.push(v);
        }
        Ok((r, q))
    }

    /// Solve `J δ = -r` by forward substitution.
    fn newton_direction(&self, q: &[f64], r: &[f64]) -> std::result::Result<Vec<f64>, NewtonFailure> {
        let h = self.grid.h();
        let h2 = h * h;
        let mut delta = vec![0.0; r.len()];
        let a_phi = |i: usize| self.a[i] * (1.0 + q[i]);
        delta[0] = -r[0] * h2 * a_phi(0);
        for i in 1..r.len() {
            let inv = 1.0 / (2.0 * h2 * a_phi(i));
            let diag = inv + 0.5 / h;
            let lower = -inv + 0.5 / h;
            delta[i] = (-r[i] - lower * delta[i - 1]) / diag;
        }
        if let Some(i) = delta.iter().position(|d| !d.is_finite()) {
            return Err(NewtonFailure::NonFinite(format!(
                "non-finite Newton update at node {i}"
            )));
        }
        Ok(delta)
    }

    fn newton(
        &self,
        start: &RadialPotential,
        s: f64,
    ) -> std::result::Result<(RadialPotential, usize, f64), NewtonFailure> {
        let cfg = self.cfg;
        let mut phi = start.clone();
        let (mut r, mut q) = self.rows(&phi, s)?;
        let mut res = sup(&r);
        let mut last_positivity = None;
        for it in 0..=cfg.max_newton {
            if res <= cfg.tolerance {
                return Ok((phi, it, res));
            }
            if it == cfg.max_newton {
                break;
            }
            let delta = self.newton_direction(&q, &r)?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=cfg.max_backtracks {
                let mut trial = phi.clone();
                trial.axpy(lambda, &delta);
                match self.rows(&trial, s) {
                    Ok((tr, tq)) => {
                        let tres = sup(&tr);
                        if tres <= (1.0 - cfg.sufficient_decrease * lambda) * res {
                            accepted = Some((trial, tr, tq, tres));
                            break;
                        }
                    }
                    Err(e @ NewtonFailure::Positivity { .. }) => last_positivity = Some(e),
                    Err(NewtonFailure::NonFinite(_)) => {}
                    Err(e) => return Err(e),
                }
                lambda *= cfg.backtrack;
            }
            match accepted {
                Some((p, tr, tq, tres)) => {
                    phi = p;
                    r = tr;
                    q = tq;
                    res = tres;
                }
                None => return Err(last_positivity.unwrap_or(NewtonFailure::LineSearch(res))),
            }
        }
        Err(NewtonFailure::NotConverged(res))
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        phi: &RadialPotential,
        s: f64,
        step: f64,
        iterations: usize,
        res: f64,
        halvings: usize,
        f_model: &[f64],
    ) -> StepRecord {
        let q = phi.curvature_ratio(&self.a);
        let dphi = phi.first_derivative();
        let values = phi.values();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in &q {
            lo = lo.min(1.0 + v);
            hi = hi.max(1.0 + v);
        }
        let weighted_sup = values
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (self.cfg.record_weight * self.grid.t(i)).exp() * v.abs())
            .fold(0.0, f64::max);
        let inf_f = f_model
            .iter()
            .zip(&dphi)
            .map(|(f, d)| f + d)
            .fold(f64::INFINITY, f64::min);
        StepRecord {
            s,
            step,
            iterations,
            sup_residual: res,
            min_ratio: lo,
            max_ratio: hi,
            weighted_sup,
            inf_f_plus_dphi: inf_f,
            sup_dphi: dphi.iter().fold(0.0, |m, d| m.max(d.abs())),
            halvings,
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_inputs(model: &RadialKahlerModel, f: &GridFunction, cfg: &ContinuityConfig) -> Result<()> {
    cfg.validate()?;
    if !model.has_origin() {
        return Err(Error::param(
            "model",
            "the continuity solver needs a capped inner end (cigar or glued cigar)",
        ));
    }
    if f.len() < 5 {
        return Err(Error::param("F", "grid too short"));
    }
    Ok(())
}

/// Solve the equation at `s = 1` by continuation from `φ = 0` at `s = 0`.
pub fn continuity_solve(
    model: &RadialKahlerModel,
    f: &GridFunction,
    cfg: &ContinuityConfig,
) -> Result<SolitonSolution> {
    check_inputs(model, f, cfg)?;
    let grid = *f.grid();
    let problem = Problem {
        grid,
        a: model.coefficient_on(&grid)?,
        f: f.values(),
        cfg,
    };
    let f_model = model.potential_on(&grid)?;
    let mut warnings = Vec::new();
    let rate = decay_rate_fit(f);
    if !(rate > 1.0 && rate < 2.0) {
        warnings.push(format!("decay rate of F is {rate}, outside (1, 2)"));
    }

    let initial = 1.0 / cfg.steps as f64;
    let mut phi = RadialPotential::zero(grid, InnerStencil::Reflect);
    let mut records = vec![problem.record(&phi, 0.0, 0.0, 0, 0.0, 0, &f_model)];
    let mut s = 0.0;
    let mut step = initial;
    let mut quick = 0;
    let mut halvings = 0;
    let mut halvings_here = 0;
    let mut newton_iterations = 0;
    let mut final_residual = 0.0;
    while s < 1.0 {
        let target = if s + step >= 1.0 - 1e-12 { 1.0 } else { s + step };
        match problem.newton(&phi, target) {
            Ok((next, iterations, res)) => {
                phi = next;
                newton_iterations += iterations;
                final_residual = res;
                records.push(problem.record(&phi, target, target - s, iterations, res, halvings_here, &f_model));
                s = target;
                halvings_here = 0;
                if iterations <= 1 {
                    quick += 1;
                    if quick >= 2 {
                        step = (2.0 * step).min(initial);
                        quick = 0;
                    }
                } else {
                    quick = 0;
                }
            }
            Err(failure) => {
                quick = 0;
                step *= 0.5;
                halvings += 1;
                halvings_here += 1;
                if step < cfg.min_step * (1.0 - 1e-9) {
                    return Err(Error::Continuity(Box::new(ContinuityFailure {
                        kind: failure.kind(),
                        s_reached: s,
                        detail: failure.describe(),
                        records,
                    })));
                }
            }
        }
    }
    let values = phi.values();
    Ok(SolitonSolution {
        decay: decay_rate_fit(&values),
        phi: values,
        potential: phi,
        records,
        final_residual,
        newton_iterations,
        halvings,
        config: cfg.clone(),
        warnings,
    })
}

/// Newton solve at `s = 1` from each start; returns the largest pairwise
/// sup-distance between the converged potentials.
pub fn uniqueness_check(
    model: &RadialKahlerModel,
    f: &GridFunction,
    cfg: &ContinuityConfig,
    initializations: &[RadialPotential],
) -> Result<f64> {
    check_inputs(model, f, cfg)?;
    if initializations.len() < 2 {
        return Err(Error::param("initializations", "need at least two"));
    }
    let grid = *f.grid();
    let problem = Problem {
        grid,
        a: model.coefficient_on(&grid)?,
        f: f.values(),
        cfg,
    };
    let mut solutions = Vec::with_capacity(initializations.len());
    for (k, init) in initializations.iter().enumerate() {
        grid.ensure_same(init.grid())?;
        let start = init.clone().with_inner(InnerStencil::Reflect);
        let (phi, _, _) = problem.newton(&start, 1.0).map_err(|e| Error::NewtonDiverged {
            s: 1.0,
            reason: format!("initialization {k}: {}", e.describe()),
        })?;
        solutions.push(phi.values());
    }
    let mut worst = 0.0_f64;
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            worst = worst.max(solutions[i].sup_distance(&solutions[j])?);
        }
    }
    Ok(worst)
}
