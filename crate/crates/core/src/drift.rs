//! Mode-by-mode solver for the drift Laplacian `Δ_f = Δ_g + X` on truncated
//! model cylinders.
//!
//! On `g = a(t)(dt² + dθ²) + g_T` a cross-section mode with circle part
//! `μ_θ = (2πj/ℓ)²` and torus part `μ_T = |2πk*|²` reduces `Δ_f` to
//!
//! `L u = a⁻¹ (u'' - μ_θ u) - μ_T u + 2u'`,
//!
//! since `X = ∇f = 2∂_t` gives `g(∇f, ∇u) = a⁻¹ f' u' = 2u'`. For the
//! cylinder this is `u'' + 2u' - μu`.
//!
//! Boundary policy: homogeneous Dirichlet at `t_max`; at `t_min`, a capped
//! model (cigar) uses Neumann for the radial mode and Dirichlet for every
//! other mode, and a two-ended cylinder uses Dirichlet.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::Tridiagonal;
use crate::model::RadialKahlerModel;
use crate::spectrum::{CrossSection, Mode};

/// Relative residual above which a direct solve is reported as singular.
const SOLVE_RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    Dirichlet(f64),
    Neumann(f64),
}

/// The discrete operator `scale · (a⁻¹(u'' - μ_θ u) - μ_T u + 2u')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftOperator {
    grid: Grid,
    coefficient: Vec<f64>,
    mu_circle: f64,
    mu_torus: f64,
    scale: f64,
}

impl DriftOperator {
    pub fn new(grid: Grid, coefficient: Vec<f64>, mu_circle: f64, mu_torus: f64) -> Result<Self> {
        if coefficient.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient length".into()));
        }
        if let Some(node) = coefficient.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::Domain {
                node,
                t: grid.t(node),
                value: coefficient[node],
            });
        }
        if mu_circle < 0.0 || mu_torus < 0.0 {
            return Err(Error::NegativeEigenvalue(mu_circle.min(mu_torus)));
        }
        Ok(Self {
            grid,
            coefficient,
            mu_circle,
            mu_torus,
            scale: 1.0,
        })
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficient(&self) -> &[f64] {
        &self.coefficient
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `(lower, diag, upper)` of the interior row at node `i`.
    pub fn row(&self, i: usize) -> (f64, f64, f64) {
        let h = self.grid.h();
        let inv_a = 1.0 / self.coefficient[i];
        let k = self.scale;
        (
            k * (inv_a / (h * h) - 1.0 / h),
            k * (-2.0 * inv_a / (h * h) - self.mu_circle * inv_a - self.mu_torus),
            k * (inv_a / (h * h) + 1.0 / h),
        )
    }

    /// `L u` at interior nodes; the two boundary entries are zero.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let (l, d, r) = self.row(i);
            out[i] = l * u[i - 1] + d * u[i] + r * u[i + 1];
        }
        out
    }

    /// Full system with boundary rows.
    pub fn system(&self, rhs: &[f64], inner: Boundary, outer: Boundary) -> ModeSystem {
        let n = self.grid.len();
        let h = self.grid.h();
        let mut m = Tridiagonal::zeros(n);
        let mut b = rhs.to_vec();
        for i in 1..n - 1 {
            let (l, d, r) = self.row(i);
            m.lower[i] = l;
            m.diag[i] = d;
            m.upper[i] = r;
        }
        let k = self.scale;
        for (node, bc, inward) in [(0usize, inner, 1usize), (n - 1, outer, n - 2)] {
            match bc {
                Boundary::Dirichlet(value) => {
                    m.diag[node] = 1.0;
                    b[node] = value;
                }
                Boundary::Neumann(slope) => {
                    // mirror ghost: u_ghost = u_inward ∓ 2h·slope
                    let inv_a = 1.0 / self.coefficient[node];
                    let sign = if node == 0 { -1.0 } else { 1.0 };
                    let (_, d, _) = self.row(node);
                    m.diag[node] = d;
                    let off = k * 2.0 * inv_a / (h * h);
                    if node == 0 {
                        m.upper[0] = off;
                    } else {
                        m.lower[node] = off;
                    }
                    let _ = inward;
                    let ghost = k * inv_a / (h * h) * (sign * 2.0 * h * slope);
                    b[node] = rhs[node] - ghost - k * 2.0 * slope;
                }
            }
        }
        ModeSystem { matrix: m, rhs: b }
    }
}

/// Assembled tridiagonal system for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystem {
    pub matrix: Tridiagonal,
    pub rhs: Vec<f64>,
}

impl ModeSystem {
    pub fn solve(&self) -> Result<(Vec<f64>, f64)> {
        let u = self.matrix.solve(&self.rhs)?;
        let au = self.matrix.apply(&u);
        let res = au.iter().zip(&self.rhs).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        let row_scale = (0..self.matrix.len())
            .map(|i| {
                (self.matrix.lower[i].abs() + self.matrix.diag[i].abs() + self.matrix.upper[i].abs())
                    * u[i.saturating_sub(1)..(i + 2).min(u.len())]
                        .iter()
                        .fold(0.0_f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0_f64, f64::max);
        let b = self.rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let denom = row_scale.max(b);
        let rel = if denom > 0.0 { res / denom } else { 0.0 };
        if !(rel <= SOLVE_RESIDUAL_LIMIT) {
            let row = au
                .iter()
                .zip(&self.rhs)
                .enumerate()
                .max_by(|a, b| (a.1 .0 - a.1 .1).abs().total_cmp(&(b.1 .0 - b.1 .1).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            return Err(Error::Singular { row });
        }
        Ok((u, rel))
    }
}

/// One Fourier mode of `Δ_f u = h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProblem {
    pub model: RadialKahlerModel,
    pub mu_circle: f64,
    pub mu_torus: f64,
    pub rhs: GridFunction,
    pub inner: Boundary,
    pub outer: Boundary,
}

impl ModeProblem {
    /// Radial mode (`μ = 0`) with the default boundary policy.
    pub fn radial(model: RadialKahlerModel, rhs: GridFunction) -> Self {
        let (inner, outer) = default_policy(&model, 0.0);
        Self {
            model,
            mu_circle: 0.0,
            mu_torus: 0.0,
            rhs,
            inner,
            outer,
        }
    }

    /// Mode with eigenvalue `mu`, attributed to the torus factor.
    pub fn with_eigenvalue(mut self, mu: f64) -> Self {
        self.mu_circle = 0.0;
        self.mu_torus = mu;
        (self.inner, self.outer) = default_policy(&self.model, mu);
        self
    }

    pub fn with_mode(mut self, mode: &Mode) -> Self {
        self.mu_circle = mode.mu_circle;
        self.mu_torus = mode.mu_torus;
        (self.inner, self.outer) = default_policy(&self.model, mode.mu());
        self
    }

    pub fn with_boundary(mut self, inner: Boundary, outer: Boundary) -> Self {
        self.inner = inner;
        self.outer = outer;
        self
    }

    pub fn mu(&self) -> f64 {
        self.mu_circle + self.mu_torus
    }

    pub fn grid(&self) -> &Grid {
        self.rhs.grid()
    }

    pub fn operator(&self) -> Result<DriftOperator> {
        let grid = *self.grid();
        DriftOperator::new(grid, self.model.coefficient_on(&grid)?, self.mu_circle, self.mu_torus)
    }
}

/// Boundary conditions `(inner, outer)` used when none are given.
pub fn default_policy(model: &RadialKahlerModel, mu: f64) -> (Boundary, Boundary) {
    let inner = if model.has_origin() && mu == 0.0 {
        Boundary::Neumann(0.0)
    } else {
        Boundary::Dirichlet(0.0)
    };
    (inner, Boundary::Dirichlet(0.0))
}

pub fn assemble_mode_operator(p: &ModeProblem) -> Result<ModeSystem> {
    if let Some(node) = p.rhs.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            node,
            t: p.grid().t(node),
        });
    }
    Ok(p.operator()?.system(p.rhs.values(), p.inner, p.outer))
}

/// Direct tridiagonal solve; the discrete equations hold to `1e-10`
/// relative residual or the system is reported singular.
pub fn solve_mode(p: &ModeProblem) -> Result<GridFunction> {
    solve_mode_with_residual(p).map(|(u, _)| u)
}

pub fn solve_mode_with_residual(p: &ModeProblem) -> Result<(GridFunction, f64)> {
    let (u, rel) = assemble_mode_operator(p)?.solve()?;
    Ok((GridFunction::new(*p.grid(), u)?, rel))
}

/// Solve `Δ_f u = H` for a field given by its mode coefficients. Every mode
/// must carry a quotient-invariant eigenfunction; results keep input order.
pub fn solve_field(
    model: &RadialKahlerModel,
    cs: &CrossSection,
    field: &[(Mode, GridFunction)],
) -> Result<Vec<(Mode, GridFunction)>> {
    field
        .iter()
        .map(|(mode, rhs)| {
            if !cs.orbit_has_invariant(mode) {
                return Err(Error::NonInvariantMode {
                    j: mode.j,
                    dual: mode.dual.clone(),
                });
            }
            let p = ModeProblem::radial(model.clone(), rhs.clone()).with_mode(mode);
            Ok((mode.clone(), solve_mode(&p)?))
        })
        .collect()
}
