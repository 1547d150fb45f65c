//! Uniform grids in the cylindrical coordinate `t` and sampled fields on them.
//!
//! Every numerical quantity in the crate is carried by a [`GridFunction`]
//! (one axis) or a [`GridFunction2D`] (a `t` axis times a periodic `u` axis).

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when `(t_max - t_min) / h` is not an exact integer.
const GRID_SLACK: f64 = 1e-9;

/// Uniform grid `t_i = t_min + i h`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_min: f64,
    h: f64,
    len: usize,
}

impl Grid {
    pub fn new(t_min: f64, t_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("spacing must be positive, got {h}")));
        }
        if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::param(
                "t_max",
                format!("need finite t_min < t_max, got [{t_min}, {t_max}]"),
            ));
        }
        let cells = (t_max - t_min) / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > GRID_SLACK * cells.max(1.0) {
            return Err(Error::param(
                "h",
                format!("(t_max - t_min) / h = {cells} is not an integer"),
            ));
        }
        let len = rounded as usize + 1;
        if len < 4 {
            return Err(Error::param("h", "grid needs at least 4 nodes"));
        }
        Ok(Self { t_min, h, len })
    }

    /// The working grid `[-12, 20]` with `h = 0.01`.
    pub fn standard() -> Self {
        Self::new(-12.0, 20.0, 0.01).expect("standard grid is valid")
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.len - 1)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.t(i))
    }

    /// Index of the node closest to `t`, clamped to the grid.
    pub fn nearest(&self, t: f64) -> usize {
        let x = ((t - self.t_min) / self.h).round();
        x.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Same grid with the spacing halved.
    pub fn refined(&self) -> Self {
        Self::new(self.t_min, self.t_max(), self.h / 2.0).expect("refinement of a valid grid")
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len == other.len
            && (self.t_min - other.t_min).abs() <= GRID_SLACK * self.h
            && (self.h - other.h).abs() <= GRID_SLACK * self.h
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}] h={} vs [{}, {}] h={}",
                self.t_min,
                self.t_max(),
                self.h,
                other.t_min,
                other.t_max(),
                other.h
            )))
        }
    }
}

/// A scalar field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node, t: grid.t(node) });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.grid.t(i)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.t(i), v))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, v| c * v)
    }

    /// Sup-norm of `self - other`; the grids must coincide.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// First derivative, 2nd-order central inside, one-sided at the ends.
    pub fn derivative(&self) -> Self {
        Self {
            grid: self.grid,
            values: fd::first(&self.values, self.grid.h),
        }
    }

    /// Second derivative, 2nd-order central inside, one-sided at the ends.
    pub fn second_derivative(&self) -> Self {
        Self {
            grid: self.grid,
            values: fd::second(&self.values, self.grid.h),
        }
    }

    /// CSV with header `t,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.grid.t(i), v);
        }
        out
    }

    /// Parses the `t,value` CSV written by [`GridFunction::to_csv`]. The node
    /// coordinates must form a uniform grid.
    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if idx == 0 {
                if line != "t,value" {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: format!("expected header `t,value`, found `{line}`"),
                    });
                }
                continue;
            }
            let (t, v) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: lineno,
                reason: "expected two comma-separated columns".into(),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    reason: format!("`{s}`: {e}"),
                })
            };
            ts.push(parse(t)?);
            vs.push(parse(v)?);
        }
        if ts.len() < 4 {
            return Err(Error::Parse {
                line: ts.len() + 1,
                reason: "need at least 4 rows".into(),
            });
        }
        let h = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
        let grid = Grid::new(ts[0], ts[ts.len() - 1], h)?;
        for (i, &t) in ts.iter().enumerate() {
            if (t - grid.t(i)).abs() > 1e-6 * h {
                return Err(Error::Parse {
                    line: i + 2,
                    reason: format!("node t = {t} is off the uniform grid"),
                });
            }
        }
        Self::new(grid, vs)
    }
}

/// A field on `grid × [0, u_period)`, periodic in `u`, stored row-major in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    grid: Grid,
    u_period: f64,
    u_len: usize,
    values: Vec<f64>,
}

impl GridFunction2D {
    pub fn from_fn(grid: Grid, u_period: f64, u_len: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !(u_period > 0.0) || u_len < 3 {
            return Err(Error::param(
                "u_len",
                "periodic axis needs a positive period and at least 3 nodes",
            ));
        }
        let du = u_period / u_len as f64;
        let mut values = Vec::with_capacity(grid.len() * u_len);
        for i in 0..grid.len() {
            let t = grid.t(i);
            for j in 0..u_len {
                let v = f(t, j as f64 * du);
                if !v.is_finite() {
                    return Err(Error::NonFinite { node: i, t });
                }
                values.push(v);
            }
        }
        Ok(Self {
            grid,
            u_period,
            u_len,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn u_period(&self) -> f64 {
        self.u_period
    }

    pub fn u_len(&self) -> usize {
        self.u_len
    }

    pub fn du(&self) -> f64 {
        self.u_period / self.u_len as f64
    }

    pub fn u(&self, j: usize) -> f64 {
        j as f64 * self.du()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.u_len + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { values, ..self.clone() }
    }

    pub(crate) fn same_layout(&self, other: &GridFunction2D) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.u_len != other.u_len || (self.u_period - other.u_period).abs() > 1e-12 {
            return Err(Error::GridMismatch("periodic axes differ".into()));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum of `|value|` over each `t`-slice.
    pub fn slice_maxima(&self) -> GridFunction {
        let values = self
            .values
            .chunks(self.u_len)
            .map(|row| row.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }
}

/// Second-order finite-difference stencils on uniform spacing.
pub mod fd {
    /// `u'` with central differences inside and 2nd-order one-sided ends.
    pub fn first(u: &[f64], h: f64) -> Vec<f64> {
        let n = u.len();
        assert!(n >= 3, "first derivative needs 3 nodes");
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
        d
    }

    /// `u''` with central differences inside and 2nd-order one-sided ends.
    pub fn second(u: &[f64], h: f64) -> Vec<f64> {
        let n = u.len();
        assert!(n >= 4, "second derivative needs 4 nodes");
        let h2 = h * h;
        let mut d = vec![0.0; n];
        d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
        for i in 1..n - 1 {
            d[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
        }
        d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
        d
    }

    /// Cumulative integral of `g` from node 0: trapezoid rule with the
    /// Euler-Maclaurin endpoint correction `-h^2/12 (g'(t_i) - g'(t_0))`,
    /// which makes the result 4th-order accurate for smooth `g`.
    pub fn cumulative_integral(g: &[f64], h: f64) -> Vec<f64> {
        let dg = first(g, h);
        let mut out = Vec::with_capacity(g.len());
        let mut trap = 0.0;
        out.push(0.0);
        for i in 1..g.len() {
            trap += 0.5 * h * (g[i - 1] + g[i]);
            out.push(trap - h * h / 12.0 * (dg[i] - dg[0]));
        }
        out
    }
}
