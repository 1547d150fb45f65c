//! `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, keys are dotted. Every key has
//! a default, so an empty file is valid. Command-line flags override values
//! read from the file.

use std::f64::consts::TAU;

use serde::Serialize;
use soliton_core::spectrum::{CrossSection, Quotient};
use soliton_core::{
    cigar_model, cylinder_model, glued_model, potential_of, ContinuityConfig, GlueSpec, Grid, RadialKahlerModel,
    VerifyOptions,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Cigar,
    Cylinder,
    Glued,
}

impl ModelChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cigar" => Some(Self::Cigar),
            "cylinder" => Some(Self::Cylinder),
            "glued" => Some(Self::Glued),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeChoice {
    Square,
    Hexagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientChoice {
    None,
    Z2,
    Z3,
}

/// Effective settings of a run. Serialised with the same dotted names the
/// config file uses; the manifest echoes it verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(rename = "model.kind")]
    pub model: ModelChoice,
    #[serde(rename = "model.n")]
    pub n: usize,
    /// Additive constant of `f` for the cylinder.
    #[serde(rename = "model.c0")]
    pub c0: f64,
    #[serde(rename = "grid.t_min")]
    pub t_min: f64,
    #[serde(rename = "grid.t_max")]
    pub t_max: f64,
    #[serde(rename = "grid.h")]
    pub h: f64,
    #[serde(rename = "cross.circle_length")]
    pub circle_length: f64,
    #[serde(rename = "cross.lattice")]
    pub lattice: LatticeChoice,
    #[serde(rename = "cross.dim")]
    pub torus_dim: usize,
    #[serde(rename = "cross.side")]
    pub side: f64,
    #[serde(rename = "cross.quotient")]
    pub quotient: QuotientChoice,
    #[serde(rename = "spectrum.mu_max")]
    pub mu_max: f64,
    #[serde(rename = "weights.window")]
    pub window: (f64, f64),
    #[serde(rename = "linear.mu")]
    pub mu: f64,
    #[serde(rename = "continuity.steps")]
    pub steps: usize,
    #[serde(rename = "continuity.min_step")]
    pub min_step: f64,
    #[serde(rename = "continuity.tolerance")]
    pub tolerance: f64,
    #[serde(rename = "continuity.max_newton")]
    pub max_newton: usize,
    #[serde(rename = "continuity.record_weight")]
    pub record_weight: f64,
    #[serde(rename = "verify.residual")]
    pub verify_residual: f64,
    #[serde(rename = "verify.decay_slack")]
    pub decay_slack: f64,
    #[serde(rename = "glue.t0")]
    pub t0: f64,
    #[serde(rename = "glue.margin")]
    pub margin: f64,
    #[serde(rename = "glue.degree")]
    pub degree: u32,
    #[serde(rename = "output.dir")]
    pub output_dir: Option<String>,
    #[serde(rename = "plot.log")]
    pub plot_log: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = ContinuityConfig::default();
        let v = VerifyOptions::default();
        Self {
            model: ModelChoice::Cigar,
            n: 1,
            c0: 1.0,
            t_min: -12.0,
            t_max: 20.0,
            h: 0.01,
            circle_length: TAU,
            lattice: LatticeChoice::Square,
            torus_dim: 2,
            side: TAU,
            quotient: QuotientChoice::None,
            mu_max: 10.0,
            window: (0.0, 2.0),
            mu: 0.0,
            steps: c.steps,
            min_step: c.min_step,
            tolerance: c.tolerance,
            max_newton: c.max_newton,
            record_weight: c.record_weight,
            verify_residual: v.residual,
            decay_slack: v.decay_slack,
            t0: 3.0,
            margin: soliton_core::glue::DEFAULT_MARGIN,
            degree: 7,
            output_dir: None,
            plot_log: false,
            seed: 0,
        }
    }
}

fn number(key: &str, value: &str) -> Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{key}` expects a finite number, got `{value}`")),
    }
}

fn positive(key: &str, value: &str) -> Result<f64, String> {
    let v = number(key, value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{key}` must be positive, got {v}"))
    }
}

fn count(key: &str, value: &str, min: u64) -> Result<u64, String> {
    match value.parse::<u64>() {
        Ok(v) if v >= min => Ok(v),
        _ => Err(format!("`{key}` expects an integer >= {min}, got `{value}`")),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{key}` expects true or false, got `{value}`")),
    }
}

/// Parses a config file. Errors name the offending key and carry its line.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut grid_line = 0;
    let mut window_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| CliError::Config { line: line_no, reason };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        cfg.set(key, value).map_err(err)?;
        if key.starts_with("grid.") {
            grid_line = line_no;
        }
        if key == "weights.window" {
            window_line = line_no;
        }
    }
    if !(cfg.t_max > cfg.t_min) {
        return Err(CliError::Config {
            line: grid_line,
            reason: format!(
                "`grid.t_max` must exceed `grid.t_min`, got [{}, {}]",
                cfg.t_min, cfg.t_max
            ),
        });
    }
    if !(cfg.window.1 > cfg.window.0) {
        return Err(CliError::Config {
            line: window_line,
            reason: "`weights.window` needs lo < hi".into(),
        });
    }
    Ok(cfg)
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "model.kind" => {
                self.model = ModelChoice::parse(value)
                    .ok_or_else(|| format!("`{key}` must be cigar, cylinder or glued, got `{value}`"))?
            }
            "model.n" => self.n = count(key, value, 1)? as usize,
            "model.c0" => self.c0 = number(key, value)?,
            "grid.t_min" => self.t_min = number(key, value)?,
            "grid.t_max" => self.t_max = number(key, value)?,
            "grid.h" => self.h = positive(key, value)?,
            "cross.circle_length" => self.circle_length = positive(key, value)?,
            "cross.lattice" => {
                self.lattice = match value {
                    "square" => LatticeChoice::Square,
                    "hexagonal" => LatticeChoice::Hexagonal,
                    _ => return Err(format!("`{key}` must be square or hexagonal, got `{value}`")),
                }
            }
            "cross.dim" => self.torus_dim = count(key, value, 1)? as usize,
            "cross.side" => self.side = positive(key, value)?,
            "cross.quotient" => {
                self.quotient = match value {
                    "none" => QuotientChoice::None,
                    "z2" => QuotientChoice::Z2,
                    "z3" => QuotientChoice::Z3,
                    _ => return Err(format!("`{key}` must be none, z2 or z3, got `{value}`")),
                }
            }
            "spectrum.mu_max" => self.mu_max = positive(key, value)?,
            "weights.window" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(format!("`{key}` expects two numbers `lo hi`, got `{value}`"));
                }
                self.window = (number(key, parts[0])?, number(key, parts[1])?);
            }
            "linear.mu" => {
                let mu = number(key, value)?;
                if mu < 0.0 {
                    return Err(format!("`{key}` must be nonnegative, got {mu}"));
                }
                self.mu = mu;
            }
            "continuity.steps" => self.steps = count(key, value, 1)? as usize,
            "continuity.min_step" => self.min_step = positive(key, value)?,
            "continuity.tolerance" => self.tolerance = positive(key, value)?,
            "continuity.max_newton" => self.max_newton = count(key, value, 1)? as usize,
            "continuity.record_weight" => self.record_weight = number(key, value)?,
            "verify.residual" => self.verify_residual = positive(key, value)?,
            "verify.decay_slack" => self.decay_slack = number(key, value)?,
            "glue.t0" => self.t0 = number(key, value)?,
            "glue.margin" => self.margin = positive(key, value)?,
            "glue.degree" => {
                let d = count(key, value, 1)?;
                if d.is_multiple_of(2) {
                    return Err(format!("`{key}` must be odd, got {d}"));
                }
                self.degree = d as u32;
            }
            "output.dir" => {
                if value.is_empty() {
                    return Err(format!("`{key}` must not be empty"));
                }
                self.output_dir = Some(value.to_string());
            }
            "plot.log" => self.plot_log = boolean(key, value)?,
            "seed" => self.seed = count(key, value, 0)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.t_min, self.t_max, self.h)?)
    }

    pub fn continuity(&self) -> ContinuityConfig {
        ContinuityConfig {
            steps: self.steps,
            min_step: self.min_step,
            tolerance: self.tolerance,
            max_newton: self.max_newton,
            record_weight: self.record_weight,
            ..ContinuityConfig::default()
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            residual: self.verify_residual,
            decay_slack: self.decay_slack,
            soliton: self.model == ModelChoice::Glued,
            ..VerifyOptions::default()
        }
    }

    pub fn glue_spec(&self) -> Result<GlueSpec, CliError> {
        Ok(GlueSpec::with_degree(self.t0, self.degree)?)
    }

    /// Glue spec with the bump amplitude fixed by the margin search.
    pub fn tuned_glue_spec(&self, inner: &RadialKahlerModel, grid: &Grid) -> Result<GlueSpec, CliError> {
        let spec = self.glue_spec()?;
        let rho = soliton_core::auto_rho(&potential_of(inner, grid)?, &spec, self.margin)?;
        Ok(spec.with_rho(rho)?)
    }

    /// The closed-form model the glued model is built from.
    pub fn base_model(&self) -> Result<RadialKahlerModel, CliError> {
        Ok(match self.model {
            ModelChoice::Cigar | ModelChoice::Glued => cigar_model(self.n)?,
            ModelChoice::Cylinder => cylinder_model(self.n)?.with_potential_offset(self.c0)?,
        })
    }

    /// The model on `grid`; glued models are sampled there.
    pub fn model_on(&self, grid: &Grid) -> Result<RadialKahlerModel, CliError> {
        let base = self.base_model()?;
        if self.model != ModelChoice::Glued {
            return Ok(base);
        }
        let spec = self.tuned_glue_spec(&base, grid)?;
        Ok(glued_model(&base, grid, &spec)?)
    }

    pub fn cross_section(&self) -> Result<CrossSection, CliError> {
        let cs = match self.lattice {
            LatticeChoice::Square => CrossSection::square(self.circle_length, self.torus_dim, self.side)?,
            LatticeChoice::Hexagonal => {
                if self.torus_dim != 2 {
                    return Err(CliError::Usage("hexagonal lattices need cross.dim = 2".into()));
                }
                CrossSection::hexagonal(self.circle_length, self.side)?
            }
        };
        let q = match self.quotient {
            QuotientChoice::None => return Ok(cs),
            QuotientChoice::Z2 => {
                let d = self.torus_dim;
                let map = (0..d)
                    .map(|i| (0..d).map(|j| if i == j { -1 } else { 0 }).collect())
                    .collect();
                Quotient::new(2, map)?
            }
            QuotientChoice::Z3 => {
                if self.lattice != LatticeChoice::Hexagonal {
                    return Err(CliError::Usage("the z3 quotient needs a hexagonal lattice".into()));
                }
                Quotient::new(3, vec![vec![0, 1], vec![-1, -1]])?
            }
        };
        Ok(cs.with_quotient(q)?)
    }
}
