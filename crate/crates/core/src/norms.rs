//! Discrete weighted sup-norms `‖u‖_{C^k_ε}` and empirical decay rates.
//!
//! Hölder seminorms are not discretized.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridFunction2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedNormSpec {
    pub k: usize,
    pub epsilon: f64,
    /// Fractions of `[t_min, t_max]` used by the decay fit.
    pub tail_window: (f64, f64),
}

pub const DEFAULT_TAIL_WINDOW: (f64, f64) = (0.6, 0.9);

impl WeightedNormSpec {
    pub fn new(k: usize, epsilon: f64) -> Self {
        Self {
            k,
            epsilon,
            tail_window: DEFAULT_TAIL_WINDOW,
        }
    }
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (a, b) = window;
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::param(
            "tail_window",
            format!("need 0 <= a < b <= 1, got ({a}, {b})"),
        ));
    }
    Ok(())
}

/// `max_{0≤j≤k} sup_i e^{ε t_i} |D^j u|_i` over the nodes where the central
/// stencil of order `j` fits.
pub fn weighted_sup_norm(u: &GridFunction, spec: &WeightedNormSpec) -> Result<f64> {
    let n = u.len();
    if n == 0 {
        return Err(Error::param("u", "empty grid"));
    }
    if n < 2 * spec.k + 1 {
        return Err(Error::param("k", "grid too short for the derivative stencil"));
    }
    let h = u.grid().h();
    let mut best = 0.0_f64;
    // `even` holds (δ²)^m u on nodes m..n-m, indexed from offset m.
    let mut even: Vec<f64> = u.values().to_vec();
    for j in 0..=spec.k {
        let m = j / 2;
        let (vals, offset): (Vec<f64>, usize) = if j % 2 == 0 {
            (even.clone(), m)
        } else {
            let d: Vec<f64> = even.windows(3).map(|w| (w[2] - w[0]) / (2.0 * h)).collect();
            (d, m + 1)
        };
        for (idx, v) in vals.iter().enumerate() {
            let t = u.t(idx + offset);
            best = best.max((spec.epsilon * t).exp() * v.abs());
        }
        if j % 2 == 1 {
            even = even.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]) / (h * h)).collect();
        }
    }
    Ok(best)
}

/// Least-squares slope of `-log|u|` against `t` on the default tail window.
/// Returns `f64::INFINITY` if `u` vanishes identically there.
pub fn decay_rate_fit(u: &GridFunction) -> f64 {
    decay_rate_fit_window(u, DEFAULT_TAIL_WINDOW).expect("default window is valid")
}

pub fn decay_rate_fit_window(u: &GridFunction, window: (f64, f64)) -> Result<f64> {
    check_window(window)?;
    let g = u.grid();
    let span = g.t_max() - g.t_min();
    let lo = g.t_min() + window.0 * span;
    let hi = g.t_min() + window.1 * span;
    let pts: Vec<(f64, f64)> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| (g.t(i), v))
        .filter(|&(t, v)| t >= lo - 1e-9 && t <= hi + 1e-9 && v != 0.0)
        .map(|(t, v)| (t, -v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Decay rate of a 2D field from its slice maxima.
pub fn decay_rate_fit_2d(u: &GridFunction2D) -> f64 {
    decay_rate_fit(&u.slice_maxima())
}
