//! Cut-off gluing of a radial model to the flat cylinder.
//!
//! The glued form is `i∂∂̄(χ t² + (1 - χ) P) + ρ β` where `½P'' = a` is the
//! inner potential, `χ` a polynomial smoothstep from `t = 1` to `t = t₀`,
//! and `ρ` a nonnegative bump on `[½, t₀ + ½]`. Its coefficient is
//!
//! `c = χ + (1 - χ) a + χ'(2t - P') + ½χ''(t² - P) + ρ`,
//!
//! evaluated from the closed forms of `χ` and its derivatives, so that
//! `c = a` for `t ≤ ½` and `c = 1` for `t ≥ t₀ + ½` hold exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{fd, Grid, GridFunction};
use crate::model::{ModelKind, RadialKahlerModel};

/// Default lower bound on `c` over the gluing region.
pub const DEFAULT_MARGIN: f64 = 1e-2;
const RHO_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlueSpec {
    pub t0: f64,
    /// Odd polynomial degree of the smoothstep.
    pub degree: u32,
    pub rho0: f64,
}

impl GlueSpec {
    pub fn new(t0: f64) -> Result<Self> {
        Self::with_degree(t0, 7)
    }

    pub fn with_degree(t0: f64, degree: u32) -> Result<Self> {
        if !(t0 > 1.0 && t0.is_finite()) {
            return Err(Error::param("t0", "must be finite and greater than 1"));
        }
        if degree.is_multiple_of(2) || degree > 21 {
            return Err(Error::param("degree", "must be odd and at most 21"));
        }
        Ok(Self { t0, degree, rho0: 0.0 })
    }

    pub fn with_rho(mut self, rho0: f64) -> Result<Self> {
        if !(rho0 >= 0.0 && rho0.is_finite()) {
            return Err(Error::param("rho0", "must be finite and nonnegative"));
        }
        self.rho0 = rho0;
        Ok(self)
    }

    /// `(χ, χ', χ'')` at `t`.
    pub fn cutoff(&self, t: f64) -> (f64, f64, f64) {
        let w = self.t0 - 1.0;
        let x = (t - 1.0) / w;
        if x <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if x >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let (s, d1, d2) = smoothstep(self.degree, x);
        (s, d1 / w, d2 / (w * w))
    }

    /// Support `[½, t₀ + ½]` of the bump.
    pub fn region(&self) -> (f64, f64) {
        (0.5, self.t0 + 0.5)
    }

    /// `ρ(t)`.
    pub fn bump(&self, t: f64) -> f64 {
        let (lo, hi) = self.region();
        if t <= lo || t >= hi || self.rho0 == 0.0 {
            return 0.0;
        }
        let s = (2.0 * t - lo - hi) / (hi - lo);
        self.rho0 * (1.0 - s * s).powi(4)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `S(x) = Σ_{j=0}^{k} (-1)^j C(k+j, j) C(2k+1, k-j) x^{k+j+1}` with
/// `degree = 2k + 1`, and its first two derivatives.
pub fn smoothstep(degree: u32, x: f64) -> (f64, f64, f64) {
    let k = (degree - 1) / 2;
    let (mut s, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for j in 0..=k {
        let c = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(k + j, j) * binomial(2 * k + 1, k - j);
        let p = (k + j + 1) as i32;
        let pf = f64::from(p);
        s += c * x.powi(p);
        d1 += c * pf * x.powi(p - 1);
        if p >= 2 {
            d2 += c * pf * (pf - 1.0) * x.powi(p - 2);
        }
    }
    (s, d1, d2)
}

/// Radial potential `P` of a model with its derivatives, `P'' = 2a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    pub p: GridFunction,
    pub dp: GridFunction,
    pub d2p: GridFunction,
}

/// `P'` is `f - c₀` at the node nearest `t = 0` (equal to `∫_{-∞}^0 2a`
/// for the closed forms) and the corrected trapezoidal integral of `2a`
/// elsewhere; `P(0) = 0`.
pub fn potential_of(model: &RadialKahlerModel, grid: &Grid) -> Result<PotentialProfile> {
    let a = model.coefficient_on(grid)?;
    let f = model.potential_on(grid)?;
    let h = grid.h();
    let k = grid.nearest(0.0);
    let two_a: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
    let int_a = fd::cumulative_integral(&two_a, h);
    let anchor = f[k] - model.c0();
    let dp: Vec<f64> = int_a.iter().map(|v| anchor + v - int_a[k]).collect();
    let int_dp = fd::cumulative_integral(&dp, h);
    let p: Vec<f64> = int_dp.iter().map(|v| v - int_dp[k]).collect();
    Ok(PotentialProfile {
        p: GridFunction::new(*grid, p)?,
        dp: GridFunction::new(*grid, dp)?,
        d2p: GridFunction::new(*grid, two_a)?,
    })
}

pub fn glue_coefficient(inner: &PotentialProfile, spec: &GlueSpec) -> Result<GridFunction> {
    let grid = *inner.p.grid();
    let (p, dp, d2p) = (inner.p.values(), inner.dp.values(), inner.d2p.values());
    let c = (0..grid.len())
        .map(|i| {
            let t = grid.t(i);
            let (chi, d1, d2) = spec.cutoff(t);
            let a = 0.5 * d2p[i];
            let base = if chi == 0.0 {
                a
            } else if chi == 1.0 {
                1.0
            } else {
                chi + (1.0 - chi) * a + d1 * (2.0 * t - dp[i]) + 0.5 * d2 * (t * t - p[i])
            };
            base + spec.bump(t)
        })
        .collect();
    GridFunction::new(grid, c)
}

/// Minimum of `c` over the gluing region `[½, t₀ + ½]`.
pub fn region_min(c: &GridFunction, spec: &GlueSpec) -> f64 {
    let (lo, hi) = spec.region();
    c.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| (lo..=hi).contains(&c.t(*i)))
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min)
}

/// Smallest bump amplitude with `min c ≥ margin` on the gluing region:
/// `0` if no bump is needed, otherwise a geometric search (factor 1.2 from
/// `10⁻³`) refined by bisection to `10⁻³` relative.
pub fn auto_rho(inner: &PotentialProfile, spec: &GlueSpec, margin: f64) -> Result<f64> {
    if !(margin.is_finite() && margin < 1.0) {
        return Err(Error::param("margin", "must be finite and below 1"));
    }
    let (lo, hi) = spec.region();
    let g = inner.p.grid();
    if !(g.t_min() <= lo && hi <= g.t_max()) {
        return Err(Error::param("t0", "gluing region lies outside the grid"));
    }
    let ok = |rho: f64| -> Result<bool> {
        let c = glue_coefficient(inner, &spec.with_rho(rho)?)?;
        Ok(region_min(&c, spec) >= margin)
    };
    if ok(0.0)? {
        return Ok(0.0);
    }
    let mut below = 0.0;
    let mut above = 1e-3;
    while !ok(above)? {
        below = above;
        above *= 1.2;
        if above > RHO_LIMIT {
            return Err(Error::RhoSearchExhausted(RHO_LIMIT));
        }
    }
    while above - below > 1e-3 * above {
        let mid = 0.5 * (below + above);
        if ok(mid)? {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok(above)
}

/// The glued model: `a := c`, `f := ∫2c` normalised to `min f = 1`. The
/// cross-section and the inner end are inherited from `inner`.
pub fn glued_model(inner: &RadialKahlerModel, grid: &Grid, spec: &GlueSpec) -> Result<RadialKahlerModel> {
    let profile = potential_of(inner, grid)?;
    let c = glue_coefficient(&profile, spec)?;
    let two_c: Vec<f64> = c.values().iter().map(|v| 2.0 * v).collect();
    let f = fd::cumulative_integral(&two_c, grid.h());
    RadialKahlerModel::sampled(
        inner.n(),
        ModelKind::Glued,
        inner.torus().cloned(),
        inner.has_origin(),
        *grid,
        c.into_values(),
        f,
    )
}
