//! Radial Kähler potentials stored as node increments.
//!
//! Near the capped end of the cigar the form coefficient is `a ≈ e^{2t}`
//! (about `4e-11` at `t = -12`), while a smooth potential is
//! `φ ≈ φ(0) + λ e^{2t}`. Second differences of stored values lose the
//! `e^{2t}` part to rounding of `φ(0)`, so the metric ratio `φ''/(2a)` would
//! carry `O(1e-2)` noise there. Storing `d_i = φ_{i+1} - φ_i` keeps every
//! stencil at full relative precision; values are recovered by summing from
//! the outer end, where `φ(t_max)` is the anchor.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::model::RadialKahlerModel;

/// Stencil used at the inner node `t_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStencil {
    /// Mirror ghost node, `φ'(t_min) = 0`: smoothness at the origin of `C`.
    Reflect,
    /// Second-order one-sided differences.
    OneSided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    grid: Grid,
    increments: Vec<f64>,
    anchor: f64,
    inner: InnerStencil,
}

impl RadialPotential {
    pub fn zero(grid: Grid, inner: InnerStencil) -> Self {
        Self {
            grid,
            increments: vec![0.0; grid.len() - 1],
            anchor: 0.0,
            inner,
        }
    }

    /// From sampled values, with one-sided stencils at `t_min`.
    pub fn from_values(phi: &GridFunction) -> Self {
        Self::from_values_with(phi, InnerStencil::OneSided)
    }

    pub fn from_values_with(phi: &GridFunction, inner: InnerStencil) -> Self {
        let v = phi.values();
        Self {
            grid: *phi.grid(),
            increments: v.windows(2).map(|w| w[1] - w[0]).collect(),
            anchor: v[v.len() - 1],
            inner,
        }
    }

    /// Potential with prescribed curvature `φ''`, `φ'(t_min) = 0` and
    /// `φ(t_max) = 0`, integrated with the same reflected stencil the solver
    /// uses, so the discrete metric ratio at every node is exactly
    /// `1 + φ''(t_i) / (2 a_i)`.
    pub fn from_curvature(grid: Grid, curvature: impl Fn(f64) -> f64) -> Result<Self> {
        let h2 = grid.h() * grid.h();
        let mut increments = Vec::with_capacity(grid.len() - 1);
        let mut acc = 0.0;
        for i in 0..grid.len() - 1 {
            let c = curvature(grid.t(i));
            if !c.is_finite() {
                return Err(Error::NonFinite { node: i, t: grid.t(i) });
            }
            acc += if i == 0 { 0.5 * h2 * c } else { h2 * c };
            increments.push(acc);
        }
        Ok(Self {
            grid,
            increments,
            anchor: 0.0,
            inner: InnerStencil::Reflect,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn inner(&self) -> InnerStencil {
        self.inner
    }

    pub fn with_inner(mut self, inner: InnerStencil) -> Self {
        self.inner = inner;
        self
    }

    pub(crate) fn axpy(&mut self, lambda: f64, delta: &[f64]) {
        for (d, x) in self.increments.iter_mut().zip(delta) {
            *d += lambda * x;
        }
    }

    /// `self + lambda·other`, increment by increment.
    pub fn plus_scaled(&self, lambda: f64, other: &RadialPotential) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = self.clone();
        out.axpy(lambda, &other.increments);
        out.anchor += lambda * other.anchor;
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            increments: self.increments.iter().map(|d| c * d).collect(),
            anchor: c * self.anchor,
            ..self.clone()
        }
    }

    /// Node values, summed from the anchor at `t_max`.
    pub fn values(&self) -> GridFunction {
        let n = self.grid.len();
        let mut v = vec![0.0; n];
        v[n - 1] = self.anchor;
        for i in (0..n - 1).rev() {
            v[i] = v[i + 1] - self.increments[i];
        }
        GridFunction::new(self.grid, v).expect("finite increments give finite values")
    }

    /// `φ'` at every node.
    pub fn first_derivative(&self) -> Vec<f64> {
        let d = &self.increments;
        let n = self.grid.len();
        let h = self.grid.h();
        let mut out = vec![0.0; n];
        out[0] = match self.inner {
            InnerStencil::Reflect => 0.0,
            InnerStencil::OneSided => (3.0 * d[0] - d[1]) / (2.0 * h),
        };
        for i in 1..n - 1 {
            out[i] = (d[i] + d[i - 1]) / (2.0 * h);
        }
        out[n - 1] = (3.0 * d[n - 2] - d[n - 3]) / (2.0 * h);
        out
    }

    /// `φ''` at every node.
    pub fn second_derivative(&self) -> Vec<f64> {
        let d = &self.increments;
        let n = self.grid.len();
        let h2 = self.grid.h() * self.grid.h();
        let mut out = vec![0.0; n];
        out[0] = match self.inner {
            InnerStencil::Reflect => 2.0 * d[0] / h2,
            InnerStencil::OneSided => (-2.0 * d[0] + 3.0 * d[1] - d[2]) / h2,
        };
        for i in 1..n - 1 {
            out[i] = (d[i] - d[i - 1]) / h2;
        }
        out[n - 1] = (2.0 * d[n - 2] - 3.0 * d[n - 3] + d[n - 4]) / h2;
        out
    }

    /// `φ''/(2a)` at every node, i.e. the metric ratio minus one.
    pub fn curvature_ratio(&self, a: &[f64]) -> Vec<f64> {
        self.second_derivative()
            .iter()
            .zip(a)
            .map(|(d2, a)| d2 / (2.0 * a))
            .collect()
    }

    pub fn sup_distance(&self, other: &RadialPotential) -> Result<f64> {
        self.values().sup_distance(&other.values())
    }

    /// See [`crate::model::soliton_residual`].
    pub fn soliton_residual(&self, model: &RadialKahlerModel) -> Result<GridFunction> {
        let grid = self.grid;
        let a = model.coefficient_on(&grid)?;
        let log_a = model.log_coefficient_on(&grid)?;
        let f = model.potential_on(&grid)?;
        let q = self.curvature_ratio(&a);
        let dphi = self.first_derivative();
        let mut r = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let ratio = 1.0 + q[i];
            if !(ratio > 0.0) {
                return Err(Error::PositivityLost {
                    node: i,
                    t: grid.t(i),
                    ratio,
                });
            }
            r.push(log_a[i] + q[i].ln_1p() - 2.0 * grid.t(i) + f[i] + dphi[i]);
        }
        let c = r[r.len() - 1];
        for v in &mut r {
            *v -= c;
        }
        GridFunction::new(grid, r)
    }
}
