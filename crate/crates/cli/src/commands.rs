use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use soliton_core::drift::solve_mode_with_residual;
use soliton_core::indicial::{weights_to_csv, CriticalWeightSet};
use soliton_core::norms::decay_rate_fit_window;
use soliton_core::spectrum::levels_to_csv;
use soliton_core::{
    continuity_solve, critical_weights, fredholm_window_check, poincare_rayleigh, soliton_residual, verify_solution,
    Error as CoreError, Grid, GridFunction, ModeProblem, RadialKahlerModel, SolitonSolution,
};

use crate::config::{ModelChoice, RunConfig};
use crate::error::CliError;
use crate::manifest::InputFile;
use crate::plot::line_plot;

/// Tail window used for the decay report, as fractions of the grid range.
const DECAY_WINDOW: (f64, f64) = (0.6, 0.9);

/// State shared by every subcommand: where outputs go and what the manifest
/// should list.
pub struct Run {
    pub config: RunConfig,
    pub dir: PathBuf,
    pub plot: bool,
    pub outputs: Vec<String>,
    pub notes: Map<String, Value>,
}

impl Run {
    pub fn new(config: RunConfig, dir: PathBuf, plot: bool) -> Self {
        Self {
            config,
            dir,
            plot,
            outputs: Vec::new(),
            notes: Map::new(),
        }
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| CliError::Output { path, source })?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("json value serializes") + "\n";
        self.write(name, &text)
    }

    fn field(&mut self, stem: &str, u: &GridFunction) -> Result<(), CliError> {
        self.write(&format!("{stem}.csv"), &u.to_csv())?;
        if self.plot {
            let svg = line_plot(u, stem, self.config.plot_log);
            self.write(&format!("{stem}.svg"), &svg)?;
        }
        Ok(())
    }

    fn note(&mut self, key: &str, value: Value) {
        self.notes.insert(key.to_string(), value);
    }
}

/// Reads a `t,value` CSV, returning its manifest entry too.
pub fn read_field(path: &Path) -> Result<(InputFile, GridFunction), CliError> {
    let (entry, bytes) = InputFile::read(path)?;
    let u = GridFunction::from_csv(Cursor::new(bytes)).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((entry, u))
}

/// `None` for `+∞`, which JSON cannot carry.
fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn spectrum(run: &mut Run) -> Result<(), CliError> {
    let cs = run.config.cross_section()?;
    let levels = cs.invariant_spectrum(run.config.mu_max)?;
    run.note("levels", json!(levels.len()));
    run.write("spectrum.csv", &levels_to_csv(&levels))
}

fn interior(cws: &CriticalWeightSet) -> CriticalWeightSet {
    let (lo, hi) = cws.window;
    let tol = soliton_core::indicial::DEDUP_TOL;
    CriticalWeightSet {
        weights: cws
            .weights
            .iter()
            .copied()
            .filter(|w| w.epsilon > lo + tol && w.epsilon < hi - tol)
            .collect(),
        ..cws.clone()
    }
}

pub fn weights(run: &mut Run) -> Result<(), CliError> {
    let cfg = &run.config;
    let cs = cfg.cross_section()?;
    let mus: Vec<f64> = cs.invariant_spectrum(cfg.mu_max)?.iter().map(|l| l.mu).collect();
    let cws = critical_weights(&mus, cfg.window, cfg.mu_max)?;
    let check = fredholm_window_check(&cws, cfg.window)?;
    let boundary: Vec<Value> = cws
        .weights
        .iter()
        .filter(|w| !interior(&cws).weights.contains(w))
        .map(|w| json!({ "epsilon": w.epsilon, "mu": w.mu, "branch": w.branch.name() }))
        .collect();
    run.note("fredholm", json!(check.fredholm));
    run.note("margin", finite(check.margin));
    run.note("boundary_weights", Value::Array(boundary));
    run.write("weights.csv", &weights_to_csv(&interior(&cws)))
}

fn subsample(u: &GridFunction, k: usize) -> Result<GridFunction, CliError> {
    let g = u.grid();
    let coarse = Grid::new(g.t_min(), g.t_max(), g.h() * k as f64)?;
    Ok(GridFunction::new(
        coarse,
        u.values().iter().step_by(k).copied().collect(),
    )?)
}

/// Observed order from solutions on `h`, `2h`, `4h`, compared on the
/// coarsest nodes.
fn observed_order(
    problem: impl Fn(GridFunction) -> Result<GridFunction, CliError>,
    rhs: &GridFunction,
) -> Result<f64, CliError> {
    if !(rhs.len() - 1).is_multiple_of(4) || rhs.len() < 17 {
        return Err(CliError::Usage(
            "--order needs an RHS grid whose cell count is a multiple of 4 (at least 16 cells)".into(),
        ));
    }
    let fine = problem(rhs.clone())?;
    let mid = problem(subsample(rhs, 2)?)?;
    let coarse = problem(subsample(rhs, 4)?)?;
    let d_coarse = (0..coarse.len()).fold(0.0_f64, |m, i| m.max((coarse.values()[i] - mid.values()[2 * i]).abs()));
    let d_fine = (0..coarse.len()).fold(0.0_f64, |m, i| {
        m.max((mid.values()[2 * i] - fine.values()[4 * i]).abs())
    });
    Ok((d_coarse / d_fine).log2())
}

pub fn solve_linear(run: &mut Run, rhs: &GridFunction, order: bool) -> Result<(), CliError> {
    let cfg = run.config.clone();
    let model = cfg.model_on(rhs.grid())?;
    let (u, residual) =
        solve_mode_with_residual(&ModeProblem::radial(model.clone(), rhs.clone()).with_eigenvalue(cfg.mu))?;
    let mut diag = Map::new();
    diag.insert("mu".into(), json!(cfg.mu));
    diag.insert("relative_residual".into(), json!(residual));
    diag.insert("decay_fit".into(), finite(soliton_core::decay_rate_fit(&u)));
    if order {
        let solve = |f: GridFunction| -> Result<GridFunction, CliError> {
            let m = cfg.model_on(f.grid())?;
            Ok(soliton_core::solve_mode(
                &ModeProblem::radial(m, f).with_eigenvalue(cfg.mu),
            )?)
        };
        diag.insert("convergence_order".into(), finite(observed_order(solve, rhs)?));
    }
    run.field("u", &u)?;
    run.write_json("diagnostics.json", &Value::Object(diag))
}

/// Right-hand side for the nonlinear solves: the file if given, otherwise
/// the compactly supported data induced by a glued model.
fn ma_rhs(cfg: &RunConfig, rhs: Option<&GridFunction>) -> Result<(RadialKahlerModel, GridFunction), CliError> {
    match rhs {
        Some(f) => Ok((cfg.model_on(f.grid())?, f.clone())),
        None if cfg.model == ModelChoice::Glued => {
            let grid = cfg.grid()?;
            let model = cfg.model_on(&grid)?;
            let f = soliton_residual(&model, &GridFunction::zeros(grid))?.scaled(-1.0);
            Ok((model, f))
        }
        None => Err(CliError::Usage("--rhs is required unless model.kind = glued".into())),
    }
}

fn continuity(run: &mut Run, model: &RadialKahlerModel, f: &GridFunction) -> Result<SolitonSolution, CliError> {
    match continuity_solve(model, f, &run.config.continuity()) {
        Ok(sol) => {
            run.write_json(
                "path.json",
                &json!({ "status": "converged", "failure": Value::Null, "records": sol.records }),
            )?;
            run.note("final_residual", json!(sol.final_residual));
            run.note("newton_iterations", json!(sol.newton_iterations));
            run.note("halvings", json!(sol.halvings));
            run.note("decay", finite(sol.decay));
            run.note("warnings", json!(sol.warnings));
            run.field("phi", &sol.phi)?;
            Ok(sol)
        }
        Err(CoreError::Continuity(fail)) => {
            run.write_json(
                "path.json",
                &json!({
                    "status": "failed",
                    "failure": { "kind": fail.kind, "s_reached": fail.s_reached, "detail": fail.detail },
                    "records": fail.records,
                }),
            )?;
            Err(CoreError::Continuity(fail).into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn solve_ma(run: &mut Run, rhs: Option<&GridFunction>) -> Result<(), CliError> {
    let (model, f) = ma_rhs(&run.config, rhs)?;
    continuity(run, &model, &f).map(|_| ())
}

pub fn glue(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.config.clone();
    let grid = cfg.grid()?;
    let inner = cfg.base_model()?;
    let spec = cfg.tuned_glue_spec(&inner, &grid)?;
    let glued = soliton_core::glued_model(&inner, &grid, &spec)?;
    let c = GridFunction::new(grid, glued.coefficient_on(&grid)?)?;
    let f = soliton_residual(&glued, &GridFunction::zeros(grid))?.scaled(-1.0);
    run.note("inner", json!(inner.kind().name()));
    run.note("rho", json!(spec.rho0));
    run.note("region", json!(spec.region()));
    run.note("region_min", json!(soliton_core::glue::region_min(&c, &spec)));
    let block = format!(
        "{}glue.t0 = {}\nglue.degree = {}\nglue.rho = {}\n",
        glued.to_text(),
        spec.t0,
        spec.degree,
        spec.rho0
    );
    run.write("glued_model.txt", &block)?;
    run.field("coefficient", &c)?;
    run.field("rhs", &f)
}

fn decay_csv(rows: &[(&str, &GridFunction)]) -> Result<String, CliError> {
    let mut out = String::from("quantity,epsilon_hat,window\n");
    for (name, u) in rows {
        let e = decay_rate_fit_window(u, DECAY_WINDOW)?;
        let e = if e.is_finite() { e.to_string() } else { "inf".into() };
        out.push_str(&format!("{name},{e},{}:{}\n", DECAY_WINDOW.0, DECAY_WINDOW.1));
    }
    Ok(out)
}

pub fn verify(run: &mut Run, rhs: Option<&GridFunction>, decay: bool) -> Result<(), CliError> {
    let (model, f) = ma_rhs(&run.config, rhs)?;
    let sol = continuity(run, &model, &f)?;
    let report = verify_solution(&model, &sol, &f, &run.config.verify_options())?;
    run.write("report.json", &report.to_json())?;
    if decay {
        let text = decay_csv(&[("F", &f), ("phi", &sol.phi)])?;
        run.write("decay.csv", &text)?;
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    run.note("passed", json!(failed.is_empty()));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

pub fn report(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.config.clone();
    let grid = cfg.grid()?;
    let mut model = cfg.model_on(&grid)?;
    if cfg.model == ModelChoice::Cylinder {
        // the Poincaré weight needs f >= 1 on the whole domain
        model = model.normalized_on(&grid)?;
    }
    let identity = soliton_residual(&model, &GridFunction::zeros(grid))?;
    let p = poincare_rayleigh(&model, &grid)?;
    run.field("soliton_residual", &identity)?;
    run.write_json(
        "report.json",
        &json!({
            "model": model.kind().name(),
            "n": model.n(),
            "grid": { "t_min": grid.t_min(), "t_max": grid.t_max(), "h": grid.h() },
            "soliton_residual_sup": identity.sup_norm(),
            "poincare": { "lambda_min": p.lambda_min, "iterations": p.iterations },
            "references": [{ "name": "poincare_lambda_reference", "value": soliton_core::diagnostics::LAMBDA_REFERENCE }],
        }),
    )
}
