//! Critical weights of the translation-invariant drift operator
//! `∂_t² + 2∂_t + Δ_L` on the cylinder `R × L`.
//!
//! A mode `e^{-εt} v` with `Δ_L v = -μ v` is homogeneous iff
//! `ε² - 2ε = μ`, so the critical weights are `ε = 1 ± √(1 + μ)`. Since
//! `1 + μ > 0` the roots are simple and no polynomial-in-`t` solutions
//! appear.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Weights closer than this are reported once.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn sign(&self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalWeight {
    pub epsilon: f64,
    pub mu: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalWeightSet {
    pub weights: Vec<CriticalWeight>,
    pub window: (f64, f64),
    /// Largest eigenvalue the input spectrum is known to be complete up to.
    pub mu_max: f64,
}

/// `ε₋(μ), ε₊(μ)`.
pub fn indicial_roots(mu: f64) -> (f64, f64) {
    let r = (1.0 + mu).sqrt();
    (1.0 - r, 1.0 + r)
}

/// Critical weights in the closed window `[lo, hi]` coming from the given
/// eigenvalues. `mu_max` records how far the spectrum is complete; it is
/// used by [`fredholm_window_check`].
pub fn critical_weights(spectrum: &[f64], window: (f64, f64), mu_max: f64) -> Result<CriticalWeightSet> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::param("window", format!("need lo < hi, got ({lo}, {hi})")));
    }
    let mut weights = Vec::new();
    for &mu in spectrum {
        if mu < -DEDUP_TOL || !mu.is_finite() {
            return Err(Error::NegativeEigenvalue(mu));
        }
        let mu = mu.max(0.0);
        let (minus, plus) = indicial_roots(mu);
        for (epsilon, branch) in [(minus, Branch::Minus), (plus, Branch::Plus)] {
            if epsilon >= lo - DEDUP_TOL && epsilon <= hi + DEDUP_TOL {
                weights.push(CriticalWeight { epsilon, mu, branch });
            }
        }
    }
    weights.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.mu.total_cmp(&b.mu)));
    weights.dedup_by(|b, a| (a.epsilon - b.epsilon).abs() <= DEDUP_TOL);
    Ok(CriticalWeightSet {
        weights,
        window,
        mu_max,
    })
}

/// Smallest `mu_max` for which every weight in `[lo, hi]` is seen: a weight
/// `ε` comes from `μ = (ε - 1)² - 1`.
pub fn required_mu_max(interval: (f64, f64)) -> f64 {
    let reach = (interval.0 - 1.0).abs().max((interval.1 - 1.0).abs());
    (reach * reach - 1.0).max(0.0)
}

/// Minimum spectral cut-off accepted for certification.
pub const MIN_CERTIFIED_MU_MAX: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowCheck {
    pub fredholm: bool,
    /// Distance from the interval to the nearest critical weight; `0` when a
    /// weight sits on the boundary, negative never.
    pub margin: f64,
}

/// True iff no critical weight lies in the open interval.
pub fn fredholm_window_check(cws: &CriticalWeightSet, interval: (f64, f64)) -> Result<WindowCheck> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::param("interval", "need lo < hi"));
    }
    let need = required_mu_max(interval).max(MIN_CERTIFIED_MU_MAX);
    if cws.mu_max < need {
        return Err(Error::InsufficientSpectrum { have: cws.mu_max, need });
    }
    if cws.window.0 > lo || cws.window.1 < hi {
        return Err(Error::param(
            "interval",
            "interval extends beyond the window the weights were computed for",
        ));
    }
    let inside = cws
        .weights
        .iter()
        .any(|w| w.epsilon > lo + DEDUP_TOL && w.epsilon < hi - DEDUP_TOL);
    let margin = if inside {
        0.0
    } else {
        cws.weights
            .iter()
            .map(|w| {
                if w.epsilon <= lo {
                    lo - w.epsilon
                } else {
                    w.epsilon - hi
                }
            })
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    };
    Ok(WindowCheck {
        fredholm: !inside,
        margin,
    })
}

/// CSV with header `epsilon,mu,branch`.
pub fn weights_to_csv(cws: &CriticalWeightSet) -> String {
    let mut out = String::from("epsilon,mu,branch\n");
    for w in &cws.weights {
        let _ = writeln!(out, "{},{},{}", w.epsilon, w.mu, w.branch.name());
    }
    out
}

/// Residual of the characteristic polynomial of `u'' + 2u' - μu = 0` at
/// `u = e^{-εt}`: `ε² - 2ε - μ`.
pub fn characteristic_residual(epsilon: f64, mu: f64) -> f64 {
    epsilon * epsilon - 2.0 * epsilon - mu
}
