//! Closed-form manufactured potentials on the cigar.
//!
//! `φ_A(t) = A (1 + x)^{-3/4}` with `x = e^{2t}`. Differentiating,
//!
//! - `φ'  = -3/2 A x (1 + x)^{-7/4}`
//! - `φ'' = A x (1 + x)^{-11/4} (9/4 x - 3)`
//! - `φ''/(2a) = A (1 + x)^{-7/4} (9/4 x - 3) / 2`, using `a = x/(1 + x)`
//!
//! so the metric ratio tends to `1 - 3A/2` at the capped end. It stays
//! positive iff `A < 2/3`; `A = 1` is not admissible.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::potential::RadialPotential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub amplitude: f64,
}

impl Manufactured {
    pub fn new(amplitude: f64) -> Self {
        Self { amplitude }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.amplitude * (-0.75 * crate::model::softplus(2.0 * t)).exp()
    }

    pub fn dphi(&self, t: f64) -> f64 {
        let x = (2.0 * t).exp();
        -1.5 * self.amplitude * x * (1.0 + x).powf(-1.75)
    }

    pub fn d2phi(&self, t: f64) -> f64 {
        let x = (2.0 * t).exp();
        self.amplitude * x * (1.0 + x).powf(-2.75) * (2.25 * x - 3.0)
    }

    /// `φ''/(2a)` without the cancellation of dividing two small numbers.
    pub fn curvature_ratio(&self, t: f64) -> f64 {
        let x = (2.0 * t).exp();
        0.5 * self.amplitude * (1.0 + x).powf(-1.75) * (2.25 * x - 3.0)
    }

    /// `log(1 + φ''/(2a)) + φ'`; `None` where the metric ratio is not
    /// positive.
    pub fn rhs(&self, t: f64) -> Option<f64> {
        let q = self.curvature_ratio(t);
        (q > -1.0).then(|| q.ln_1p() + self.dphi(t))
    }

    /// Smallest metric ratio `1 + φ''/(2a)` over `grid`.
    pub fn min_ratio(&self, grid: &Grid) -> f64 {
        grid.nodes()
            .map(|t| 1.0 + self.curvature_ratio(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// The right-hand side sampled on `grid`. Fails with
    /// [`Error::PositivityLost`] at the first node where the potential is
    /// not admissible.
    pub fn rhs_on(&self, grid: &Grid) -> Result<GridFunction> {
        let mut v = Vec::with_capacity(grid.len());
        for (i, t) in grid.nodes().enumerate() {
            match self.rhs(t) {
                Some(f) => v.push(f),
                None => {
                    return Err(Error::PositivityLost {
                        node: i,
                        t,
                        ratio: 1.0 + self.curvature_ratio(t),
                    })
                }
            }
        }
        GridFunction::new(*grid, v)
    }

    pub fn phi_on(&self, grid: &Grid) -> GridFunction {
        GridFunction::from_fn(*grid, |t| self.phi(t)).expect("closed form is finite")
    }

    /// Discrete potential with the exact curvature, pinned to zero at
    /// `t_max`.
    pub fn potential_on(&self, grid: &Grid) -> Result<RadialPotential> {
        RadialPotential::from_curvature(*grid, |t| self.d2phi(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let m = Manufactured::new(0.25);
        let h = 1e-5;
        for &t in &[-3.0, -0.5, 0.0, 0.7, 2.0] {
            let d1 = (m.phi(t + h) - m.phi(t - h)) / (2.0 * h);
            assert!((d1 - m.dphi(t)).abs() < 1e-9);
            let d2 = (m.dphi(t + h) - m.dphi(t - h)) / (2.0 * h);
            assert!((d2 - m.d2phi(t)).abs() < 1e-9);
            let a = 1.0 / (1.0 + (-2.0 * t).exp());
            assert!((m.d2phi(t) / (2.0 * a) - m.curvature_ratio(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_amplitude_is_not_admissible() {
        let g = Grid::standard();
        assert!((Manufactured::new(1.0).min_ratio(&g) + 0.5).abs() < 1e-9);
        match Manufactured::new(1.0).rhs_on(&g) {
            Err(Error::PositivityLost { t, .. }) => assert_eq!(t, -12.0),
            other => panic!("{other:?}"),
        }
        let m = Manufactured::new(0.25).min_ratio(&g);
        assert!((m - 0.625).abs() < 1e-9);
    }
}
