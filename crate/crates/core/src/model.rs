//! Radially symmetric ACyl Kähler models on `C × T^{2(n-1)}`.
//!
//! In the cylindrical coordinate `z = e^{t + iθ}` the `C`-factor Kähler form
//! is `a(t) β` with `β = dt ∧ dθ`, and a radial potential `P` contributes
//! `i∂∂̄P = ½ P''(t) β`. The soliton field is `X = 2∂_t`, so a gradient
//! soliton potential satisfies `f' = 2a`.
//!
//! Conventions used throughout:
//! * cylinder: `a ≡ 1`, `f = 2t + c₀`;
//! * cigar: `a = (1 + e^{-2t})^{-1}`, `f = log(1 + e^{2t}) + c₀`, `c₀ = 1`
//!   so that `inf f = 1`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::potential::RadialPotential;

/// `log(1 + e^x)` without overflow or cancellation.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cylinder,
    Cigar,
    Glued,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Cylinder => "cylinder",
            ModelKind::Cigar => "cigar",
            ModelKind::Glued => "glued",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cylinder" => Ok(ModelKind::Cylinder),
            "cigar" => Ok(ModelKind::Cigar),
            "glued" => Ok(ModelKind::Glued),
            other => Err(Error::param("kind", format!("unknown model kind `{other}`"))),
        }
    }
}

/// Flat torus of real dimension `2(n-1)`; rows of `basis` generate the lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusFactor {
    basis: Vec<Vec<f64>>,
}

impl TorusFactor {
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        let d = basis.len();
        if d == 0 || basis.iter().any(|row| row.len() != d) {
            return Err(Error::DegenerateLattice(format!(
                "basis must be square, got {} rows",
                d
            )));
        }
        let det = crate::linalg::determinant(&basis);
        if !(det.abs() > 1e-12) {
            return Err(Error::DegenerateLattice(format!("determinant {det}")));
        }
        Ok(Self { basis })
    }

    /// The unit square lattice `Z^{dim}`.
    pub fn unit(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { basis }
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Cylinder,
    Cigar,
    Sampled { grid: Grid, a: Vec<f64>, f: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialKahlerModel {
    n: usize,
    kind: ModelKind,
    c0: f64,
    torus: Option<TorusFactor>,
    capped: bool,
    profile: Profile,
}

/// Cigar × flat torus, `n` complex dimensions.
pub fn cigar_model(n: usize) -> Result<RadialKahlerModel> {
    RadialKahlerModel::closed(n, ModelKind::Cigar, 1.0)
}

/// Flat cylinder × flat torus. The potential offset defaults to `c₀ = 1`,
/// i.e. `min f = 1` on `t ≥ 0`; see [`RadialKahlerModel::normalized_on`].
pub fn cylinder_model(n: usize) -> Result<RadialKahlerModel> {
    RadialKahlerModel::closed(n, ModelKind::Cylinder, 1.0)
}

impl RadialKahlerModel {
    fn closed(n: usize, kind: ModelKind, c0: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::param("n", "complex dimension must be at least 1"));
        }
        let torus = (n > 1).then(|| TorusFactor::unit(2 * (n - 1)));
        let profile = match kind {
            ModelKind::Cigar => Profile::Cigar,
            ModelKind::Cylinder => Profile::Cylinder,
            ModelKind::Glued => unreachable!("glued models are sampled"),
        };
        Ok(Self {
            n,
            kind,
            c0,
            torus,
            capped: kind == ModelKind::Cigar,
            profile,
        })
    }

    /// A model known only at the nodes of `grid`. `f` is normalised so that
    /// its minimum is 1.
    pub(crate) fn sampled(
        n: usize,
        kind: ModelKind,
        torus: Option<TorusFactor>,
        capped: bool,
        grid: Grid,
        a: Vec<f64>,
        f: Vec<f64>,
    ) -> Result<Self> {
        if a.len() != grid.len() || f.len() != grid.len() {
            return Err(Error::GridMismatch("sampled model arrays".into()));
        }
        if let Some(node) = a.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain {
                node,
                t: grid.t(node),
                value: a[node],
            });
        }
        let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = 1.0 - fmin;
        let f = f.into_iter().map(|v| v + shift).collect();
        Ok(Self {
            n,
            kind,
            c0: shift,
            torus,
            capped,
            profile: Profile::Sampled { grid, a, f },
        })
    }

    /// Replace the torus lattice (rows are basis vectors of length `2(n-1)`).
    pub fn with_torus_lattice(mut self, basis: Vec<Vec<f64>>) -> Result<Self> {
        if self.n == 1 {
            return Err(Error::param("lattice", "n = 1 has no torus factor"));
        }
        let torus = TorusFactor::new(basis)?;
        if torus.dim() != 2 * (self.n - 1) {
            return Err(Error::param(
                "lattice",
                format!("expected dimension {}, got {}", 2 * (self.n - 1), torus.dim()),
            ));
        }
        self.torus = Some(torus);
        Ok(self)
    }

    /// Shift the additive constant of `f` (closed-form models only).
    pub fn with_potential_offset(mut self, c0: f64) -> Result<Self> {
        if matches!(self.profile, Profile::Sampled { .. }) {
            return Err(Error::param("c0", "sampled models fix c0 from min f = 1"));
        }
        self.c0 = c0;
        Ok(self)
    }

    /// Same model with `c₀` chosen so that `min f = 1` over `grid`.
    pub fn normalized_on(&self, grid: &Grid) -> Result<Self> {
        let f = self.potential_on(grid)?;
        let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
        match self.profile {
            Profile::Sampled { .. } => Ok(self.clone()),
            _ => self.clone().with_potential_offset(self.c0 + 1.0 - fmin),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn torus(&self) -> Option<&TorusFactor> {
        self.torus.as_ref()
    }

    /// Whether the inner end is capped off smoothly (origin of `C`), as for
    /// the cigar, rather than being a second cylindrical end.
    pub fn has_origin(&self) -> bool {
        self.capped
    }

    /// `a(t)` for closed-form models; `None` for sampled ones.
    pub fn coefficient(&self, t: f64) -> Option<f64> {
        match self.profile {
            Profile::Cylinder => Some(1.0),
            Profile::Cigar => Some(1.0 / (1.0 + (-2.0 * t).exp())),
            Profile::Sampled { .. } => None,
        }
    }

    /// `f(t)` for closed-form models; `None` for sampled ones.
    pub fn potential(&self, t: f64) -> Option<f64> {
        match self.profile {
            Profile::Cylinder => Some(2.0 * t + self.c0),
            Profile::Cigar => Some(softplus(2.0 * t) + self.c0),
            Profile::Sampled { .. } => None,
        }
    }

    fn sampled_on<'a>(&'a self, grid: &Grid, pick: fn(&'a Profile) -> &'a [f64]) -> Result<Vec<f64>> {
        match &self.profile {
            Profile::Sampled { grid: own, .. } => {
                own.ensure_same(grid)?;
                Ok(pick(&self.profile).to_vec())
            }
            _ => unreachable!(),
        }
    }

    /// `a` at the nodes of `grid`.
    pub fn coefficient_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self.profile {
            Profile::Sampled { .. } => self.sampled_on(grid, |p| match p {
                Profile::Sampled { a, .. } => a,
                _ => unreachable!(),
            }),
            _ => Ok(grid.nodes().map(|t| self.coefficient(t).unwrap()).collect()),
        }
    }

    /// `f` at the nodes of `grid`.
    pub fn potential_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self.profile {
            Profile::Sampled { .. } => self.sampled_on(grid, |p| match p {
                Profile::Sampled { f, .. } => f,
                _ => unreachable!(),
            }),
            _ => Ok(grid.nodes().map(|t| self.potential(t).unwrap()).collect()),
        }
    }

    /// `log a` at the nodes of `grid`, evaluated without cancellation for
    /// closed forms. Fails with [`Error::Domain`] if `a ≤ 0` anywhere.
    pub fn log_coefficient_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self.profile {
            Profile::Cylinder => Ok(vec![0.0; grid.len()]),
            Profile::Cigar => Ok(grid.nodes().map(|t| -softplus(-2.0 * t)).collect()),
            Profile::Sampled { .. } => {
                let a = self.coefficient_on(grid)?;
                a.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        if v > 0.0 {
                            Ok(v.ln())
                        } else {
                            Err(Error::Domain {
                                node: i,
                                t: grid.t(i),
                                value: v,
                            })
                        }
                    })
                    .collect()
            }
        }
    }

    /// The grid a sampled model lives on.
    pub fn native_grid(&self) -> Option<Grid> {
        match &self.profile {
            Profile::Sampled { grid, .. } => Some(*grid),
            _ => None,
        }
    }

    /// Plain-text key/value block: kind, n, c0, lattice rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.kind.name());
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "c0 = {}", self.c0);
        let _ = writeln!(out, "capped = {}", self.capped);
        if let Some(torus) = &self.torus {
            for (i, row) in torus.basis().iter().enumerate() {
                let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "lattice.{i} = {}", row.join(", "));
            }
        }
        if let Profile::Sampled { grid, .. } = &self.profile {
            let _ = writeln!(out, "grid.t_min = {}", grid.t_min());
            let _ = writeln!(out, "grid.t_max = {}", grid.t_max());
            let _ = writeln!(out, "grid.h = {}", grid.h());
        }
        out
    }

    /// Parses a block written by [`RadialKahlerModel::to_text`] for a
    /// closed-form model.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut n = None;
        let mut c0 = None;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse { line: idx + 1, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kind" => kind = Some(value.parse::<ModelKind>().map_err(|e| err(e.to_string()))?),
                "n" => n = Some(value.parse::<usize>().map_err(|e| err(e.to_string()))?),
                "c0" => c0 = Some(value.parse::<f64>().map_err(|e| err(e.to_string()))?),
                "capped" | "grid.t_min" | "grid.t_max" | "grid.h" => {}
                k if k.starts_with("lattice.") => {
                    let i = k["lattice.".len()..].parse::<usize>().map_err(|e| err(e.to_string()))?;
                    let row = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| err(e.to_string()))?;
                    rows.push((i, row));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::param("kind", "missing"))?;
        let n = n.ok_or_else(|| Error::param("n", "missing"))?;
        let mut model = match kind {
            ModelKind::Cigar => cigar_model(n)?,
            ModelKind::Cylinder => cylinder_model(n)?,
            ModelKind::Glued => {
                return Err(Error::param(
                    "kind",
                    "glued models are sampled; rebuild them with the glue builder",
                ))
            }
        };
        if let Some(c0) = c0 {
            model = model.with_potential_offset(c0)?;
        }
        if !rows.is_empty() {
            rows.sort_by_key(|(i, _)| *i);
            model = model.with_torus_lattice(rows.into_iter().map(|(_, r)| r).collect())?;
        }
        Ok(model)
    }
}

/// Coefficient of `Ric(ω)` relative to `β`: `-½ (log a)''` by central
/// differences. The `log e^{2t}` Jacobian between `(i/2)dz∧dz̄` and `β` is
/// linear in `t` and drops out.
pub fn ricci_coefficient(model: &RadialKahlerModel, grid: &Grid) -> Result<GridFunction> {
    let log_a = model.log_coefficient_on(grid)?;
    let d2 = crate::grid::fd::second(&log_a, grid.h());
    GridFunction::new(*grid, d2.into_iter().map(|v| -0.5 * v).collect())
}

/// Residual of the gradient-soliton volume identity for `ω + i∂∂̄φ`:
///
/// `r = log(a + φ''/2) - (2t - f - φ') - c`,
///
/// with `c` fixed so that `r(t_max) = 0`. Zero (to FD error) iff the
/// deformed metric is a steady soliton with field `2∂_t`.
pub fn soliton_residual(model: &RadialKahlerModel, phi: &GridFunction) -> Result<GridFunction> {
    RadialPotential::from_values(phi).soliton_residual(model)
}
