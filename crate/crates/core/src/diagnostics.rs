//! Weighted Poincaré constant and verification reports.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::continuity::{ma_residual_radial, SolitonSolution};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::Tridiagonal;
use crate::model::RadialKahlerModel;
use crate::norms::decay_rate_fit;

const MAX_INVERSE_ITERATIONS: usize = 500;
const EIGEN_TOL: f64 = 1e-12;

/// Reference value of the barrier constant; reported, never enforced.
pub const LAMBDA_REFERENCE: f64 = 0.125;

/// The quadratic forms `(∫|u'|² w dt, ∫u² w a dt)` with `w = e^f/f²`,
/// discretised with midpoint-averaged weights for the gradient and lumped
/// weights for the mass, Dirichlet at both ends. The gradient form carries
/// no factor `a` because `|∇u|² dV = u'² dt dθ` in the conformal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePencil {
    grid: Grid,
    /// Node weights `e^f/f²`, divided by their maximum.
    weight: Vec<f64>,
    mass: Vec<f64>,
}

impl PoincarePencil {
    pub fn new(model: &RadialKahlerModel, grid: &Grid) -> Result<Self> {
        let f = model.potential_on(grid)?;
        let a = model.coefficient_on(grid)?;
        if let Some(node) = f.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain {
                node,
                t: grid.t(node),
                value: f[node],
            });
        }
        // e^f/f² relative to its maximum, in logs to avoid overflow
        let log_w: Vec<f64> = f.iter().map(|v| v - 2.0 * v.ln()).collect();
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weight: Vec<f64> = log_w.iter().map(|v| (v - top).exp()).collect();
        let mass = weight.iter().zip(&a).map(|(w, a)| w * a * grid.h()).collect();
        Ok(Self {
            grid: *grid,
            weight,
            mass,
        })
    }

    /// Same pencil with every weight multiplied by `c > 0`.
    pub fn rescaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            weight: self.weight.iter().map(|w| c * w).collect(),
            mass: self.mass.iter().map(|m| c * m).collect(),
        }
    }

    fn edge(&self, i: usize) -> f64 {
        0.5 * (self.weight[i] + self.weight[i + 1]) / self.grid.h()
    }

    /// `(numerator, denominator)` for a vector on all nodes; the end values
    /// are treated as zero.
    pub fn forms(&self, u: &[f64]) -> (f64, f64) {
        let n = self.grid.len();
        let v = |i: usize| if i == 0 || i == n - 1 { 0.0 } else { u[i] };
        let num = (0..n - 1).map(|i| self.edge(i) * (v(i + 1) - v(i)).powi(2)).sum();
        let den = (1..n - 1).map(|i| self.mass[i] * v(i).powi(2)).sum();
        (num, den)
    }

    fn stiffness(&self) -> Tridiagonal {
        let m = self.grid.len() - 2;
        let mut k = Tridiagonal::zeros(m);
        for r in 0..m {
            let i = r + 1;
            k.diag[r] = self.edge(i - 1) + self.edge(i);
            if r > 0 {
                k.lower[r] = -self.edge(i - 1);
            }
            if r + 1 < m {
                k.upper[r] = -self.edge(i);
            }
        }
        k
    }

    /// Smallest eigenvalue by inverse iteration from the constant vector.
    pub fn lambda_min(&self) -> Result<PoincareResult> {
        let k = self.stiffness();
        let m = k.len();
        let mass = &self.mass[1..=m];
        let mut u = vec![1.0; m];
        let mut lambda = f64::INFINITY;
        for it in 1..=MAX_INVERSE_ITERATIONS {
            let rhs: Vec<f64> = u.iter().zip(mass).map(|(x, b)| x * b).collect();
            let x = k.solve(&rhs)?;
            let kx = k.apply(&x);
            let num: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
            let den: f64 = x.iter().zip(mass).map(|(a, b)| a * a * b).sum();
            let next = num / den;
            let norm = den.sqrt();
            u = x.iter().map(|v| v / norm).collect();
            if (next - lambda).abs() <= EIGEN_TOL * next.abs() {
                return Ok(PoincareResult {
                    lambda_min: next,
                    iterations: it,
                });
            }
            lambda = next;
        }
        Err(Error::NotConverged(MAX_INVERSE_ITERATIONS))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareResult {
    pub lambda_min: f64,
    pub iterations: usize,
}

pub fn poincare_rayleigh(model: &RadialKahlerModel, grid: &Grid) -> Result<PoincareResult> {
    PoincarePencil::new(model, grid)?.lambda_min()
}

/// Rayleigh quotient of `u` for the pencil of [`poincare_rayleigh`].
pub fn rayleigh_quotient(model: &RadialKahlerModel, u: &GridFunction) -> Result<f64> {
    let (num, den) = PoincarePencil::new(model, u.grid())?.forms(u.values());
    if den == 0.0 {
        return Err(Error::param("u", "vanishes on the interior"));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` encodes `+∞`.
    pub value: Option<f64>,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let pass = match comparison {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
        };
        Self {
            name: name.to_string(),
            value: value.is_finite().then_some(value),
            comparison,
            threshold,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub model: String,
    pub n: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub h: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub references: Vec<Reference>,
    pub provenance: Provenance,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Thresholds of [`verify_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub residual: f64,
    pub decay_slack: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub path_growth: f64,
    /// Also check the soliton residual of the output metric (glued runs).
    pub soliton: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            decay_slack: 0.1,
            min_ratio: 0.5,
            max_ratio: 2.0,
            path_growth: 10.0,
            soliton: false,
        }
    }
}

/// Hex SHA-256 of a serialisable configuration.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn verify_solution(
    model: &RadialKahlerModel,
    solution: &SolitonSolution,
    f: &GridFunction,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let grid = *solution.phi.grid();
    grid.ensure_same(f.grid())?;
    let phi = &solution.potential;
    let mut checks = Vec::new();

    let r = ma_residual_radial(model, phi, f, 1.0)?;
    let n = r.len();
    let sup_r = r.values()[..n - 1].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    checks.push(Check::new(
        "equation_residual",
        sup_r,
        Comparison::AtMost,
        opts.residual,
    ));

    if opts.soliton {
        let s = phi.soliton_residual(model)?;
        checks.push(Check::new(
            "soliton_residual",
            s.sup_norm(),
            Comparison::AtMost,
            opts.residual,
        ));
    }

    let rate_f = decay_rate_fit(f);
    let rate_phi = decay_rate_fit(&solution.phi);
    checks.push(Check::new(
        "decay_rate",
        rate_phi,
        Comparison::AtLeast,
        rate_f.min(2.0) - opts.decay_slack,
    ));

    let a = model.coefficient_on(&grid)?;
    let q = phi.curvature_ratio(&a);
    let lo = q.iter().map(|v| 1.0 + v).fold(f64::INFINITY, f64::min);
    let hi = q.iter().map(|v| 1.0 + v).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("min_metric_ratio", lo, Comparison::AtLeast, opts.min_ratio));
    checks.push(Check::new("max_metric_ratio", hi, Comparison::AtMost, opts.max_ratio));

    let fm = model.potential_on(&grid)?;
    let inf_f = fm
        .iter()
        .zip(phi.first_derivative())
        .map(|(f, d)| f + d)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::new("inf_f_plus_dphi", inf_f, Comparison::AtLeast, 1.0 - 1e-8));

    let last = solution.records.last().expect("records include s = 0");
    let c0 = solution.records.iter().map(|r| r.weighted_sup).fold(0.0, f64::max);
    checks.push(Check::new(
        "path_weighted_sup",
        c0,
        Comparison::AtMost,
        opts.path_growth * last.weighted_sup,
    ));
    let d1 = solution.records.iter().map(|r| r.sup_dphi).fold(0.0, f64::max);
    checks.push(Check::new(
        "path_sup_dphi",
        d1,
        Comparison::AtMost,
        opts.path_growth * last.sup_dphi,
    ));

    Ok(VerificationReport {
        checks,
        references: vec![Reference {
            name: "poincare_lambda_reference".into(),
            value: LAMBDA_REFERENCE,
        }],
        provenance: Provenance {
            model: model.kind().name().to_string(),
            n: model.n(),
            t_min: grid.t_min(),
            t_max: grid.t_max(),
            h: grid.h(),
            config_hash: config_hash(&solution.config),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cigar_model, cylinder_model};

    #[test]
    fn constant_vector_bounds_lambda() {
        let g = Grid::new(0.0, 20.0, 0.02).unwrap();
        let m = cylinder_model(1).unwrap();
        let lam = poincare_rayleigh(&m, &g).unwrap().lambda_min;
        assert!(lam > 0.0);
        let ones = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert!(rayleigh_quotient(&m, &ones).unwrap() >= lam);
    }

    #[test]
    fn scale_invariance() {
        let g = Grid::new(-12.0, 20.0, 0.02).unwrap();
        let p = PoincarePencil::new(&cigar_model(1).unwrap(), &g).unwrap();
        let a = p.lambda_min().unwrap().lambda_min;
        let b = p.rescaled(37.5).lambda_min().unwrap().lambda_min;
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn hash_is_stable() {
        let h = config_hash(&crate::continuity::ContinuityConfig::default());
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&crate::continuity::ContinuityConfig::default()));
    }

    #[test]
    fn infinite_values_serialize_as_null() {
        let c = Check::new("decay_rate", f64::INFINITY, Comparison::AtLeast, 1.0);
        assert!(c.pass);
        assert!(serde_json::to_string(&c).unwrap().contains("\"value\":null"));
    }
}
