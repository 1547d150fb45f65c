//! Laplace spectrum of the cross-section `S¹ × T^{2(n-1)}`, optionally
//! divided by a cyclic group acting by a circle rotation and a lattice map.
//!
//! Eigenfunctions are `exp(2πi (jθ/ℓ + k*·x))` with `k*` in the dual
//! lattice; the eigenvalue is `(2πj/ℓ)² + |2πk*|²`. With lattice basis rows
//! `b_i`, dual vectors are `k* = B⁻¹ m` for integer `m`, and a lattice map
//! given in lattice coordinates by `M` acts on dual coefficients by `Mᵀ`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalues closer than this are merged into one level.
pub const MERGE_TOL: f64 = 1e-10;

/// Cyclic group `Z_m` generated by `(θ, x) ↦ (θ + ℓ/m, R x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quotient {
    order: u32,
    map: Vec<Vec<i64>>,
}

impl Quotient {
    pub fn new(order: u32, map: Vec<Vec<i64>>) -> Result<Self> {
        if order < 2 {
            return Err(Error::param("order", "quotient order must be at least 2"));
        }
        Ok(Self { order, map })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn map(&self) -> &[Vec<i64>] {
        &self.map
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    circle_length: f64,
    lattice: Vec<Vec<f64>>,
    dual: Vec<Vec<f64>>,
    quotient: Option<Quotient>,
}

/// One eigenfunction of the cross-section Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub j: i64,
    pub dual: Vec<i64>,
    /// `(2πj/ℓ)²`
    pub mu_circle: f64,
    /// `|2πk*|²`
    pub mu_torus: f64,
}

impl Mode {
    pub fn mu(&self) -> f64 {
        self.mu_circle + self.mu_torus
    }
}

/// An eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub mu: f64,
    pub multiplicity: usize,
}

impl CrossSection {
    /// `lattice` rows are basis vectors; pass an empty list for `n = 1`.
    pub fn new(circle_length: f64, lattice: Vec<Vec<f64>>) -> Result<Self> {
        if !(circle_length > 0.0) || !circle_length.is_finite() {
            return Err(Error::param("circle_length", "must be positive"));
        }
        let d = lattice.len();
        if lattice.iter().any(|r| r.len() != d) {
            return Err(Error::DegenerateLattice("basis must be square".into()));
        }
        let dual = if d == 0 {
            Vec::new()
        } else {
            let det = linalg::determinant(&lattice);
            if !(det.abs() > 1e-12) || !det.is_finite() {
                return Err(Error::DegenerateLattice(format!("determinant {det}")));
            }
            // k* = B^{-1} m: column j of B^{-1} is the j-th dual basis vector.
            let inv = linalg::inverse(&lattice).ok_or_else(|| Error::DegenerateLattice("singular basis".into()))?;
            (0..d).map(|j| (0..d).map(|k| inv[k][j]).collect()).collect()
        };
        Ok(Self {
            circle_length,
            lattice,
            dual,
            quotient: None,
        })
    }

    /// Square torus of side `side` in real dimension `dim`.
    pub fn square(circle_length: f64, dim: usize, side: f64) -> Result<Self> {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { side } else { 0.0 }).collect())
            .collect();
        Self::new(circle_length, basis)
    }

    /// Hexagonal 2-torus with unit-free side `side`.
    pub fn hexagonal(circle_length: f64, side: f64) -> Result<Self> {
        Self::new(
            circle_length,
            vec![vec![side, 0.0], vec![0.5 * side, 0.5 * 3f64.sqrt() * side]],
        )
    }

    /// Attach a cyclic quotient. The lattice map must be an integer isometry
    /// of the lattice with `R^m = Id`.
    pub fn with_quotient(mut self, quotient: Quotient) -> Result<Self> {
        let d = self.lattice.len();
        let m = &quotient.map;
        if m.len() != d || m.iter().any(|r| r.len() != d) {
            return Err(Error::NotLatticePreserving(format!(
                "map must be {d}x{d} in lattice coordinates"
            )));
        }
        let mut power = linalg::int_identity(d);
        for _ in 0..quotient.order {
            power = linalg::int_matmul(&power, m);
        }
        if power != linalg::int_identity(d) {
            return Err(Error::NotLatticePreserving(format!(
                "R^{} is not the identity",
                quotient.order
            )));
        }
        // isometry: Mᵀ G M = G with Gram matrix G = B Bᵀ
        let gram: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| self.lattice[i][k] * self.lattice[j][k]).sum())
                    .collect()
            })
            .collect();
        for i in 0..d {
            for j in 0..d {
                let mut v = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        v += m[k][i] as f64 * gram[k][l] * m[l][j] as f64;
                    }
                }
                if (v - gram[i][j]).abs() > 1e-9 * (1.0 + gram[i][j].abs()) {
                    return Err(Error::NotLatticePreserving(
                        "map is not an isometry of the flat torus".into(),
                    ));
                }
            }
        }
        self.quotient = Some(quotient);
        Ok(self)
    }

    pub fn circle_length(&self) -> f64 {
        self.circle_length
    }

    pub fn lattice(&self) -> &[Vec<f64>] {
        &self.lattice
    }

    pub fn quotient(&self) -> Option<&Quotient> {
        self.quotient.as_ref()
    }

    pub fn torus_dim(&self) -> usize {
        self.lattice.len()
    }

    /// Build the mode with circle index `j` and dual coefficients `dual`.
    pub fn mode(&self, j: i64, dual: Vec<i64>) -> Result<Mode> {
        if dual.len() != self.torus_dim() {
            return Err(Error::param("dual", "wrong number of dual coefficients"));
        }
        let mu_circle = (TAU * j as f64 / self.circle_length).powi(2);
        let d = self.torus_dim();
        let mut mu_torus = 0.0;
        for k in 0..d {
            let comp: f64 = (0..d).map(|i| dual[i] as f64 * self.dual[i][k]).sum();
            mu_torus += (TAU * comp).powi(2);
        }
        Ok(Mode {
            j,
            dual,
            mu_circle,
            mu_torus,
        })
    }

    /// Every mode with eigenvalue `≤ mu_max`, sorted by `(μ, j, dual)`.
    pub fn modes(&self, mu_max: f64) -> Result<Vec<Mode>> {
        if !(mu_max > 0.0) {
            return Err(Error::param("mu_max", "must be positive"));
        }
        let radius = mu_max.sqrt() / TAU;
        let jmax = (radius * self.circle_length).floor() as i64;
        // |m_i| = |k*·b_i| ≤ |k*| |b_i|
        let bounds: Vec<i64> = self
            .lattice
            .iter()
            .map(|b| (radius * b.iter().map(|v| v * v).sum::<f64>().sqrt()).floor() as i64)
            .collect();
        let mut out = Vec::new();
        let mut coeffs: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            for j in -jmax..=jmax {
                let mode = self.mode(j, coeffs.clone())?;
                if mode.mu() <= mu_max + MERGE_TOL {
                    out.push(mode);
                }
            }
            // odometer over the coefficient box
            let mut k = 0;
            loop {
                if k == coeffs.len() {
                    sort_modes(&mut out);
                    return Ok(out);
                }
                if coeffs[k] < bounds[k] {
                    coeffs[k] += 1;
                    break;
                }
                coeffs[k] = -bounds[k];
                k += 1;
            }
        }
    }

    /// Orbit of a mode under the quotient (just the mode if there is none).
    pub fn orbit(&self, mode: &Mode) -> Vec<Vec<i64>> {
        let Some(q) = &self.quotient else {
            return vec![mode.dual.clone()];
        };
        let mt = linalg::int_transpose(&q.map);
        let mut orbit = vec![mode.dual.clone()];
        let mut cur = linalg::int_apply(&mt, &mode.dual);
        while cur != mode.dual {
            orbit.push(cur.clone());
            cur = linalg::int_apply(&mt, &cur);
        }
        orbit
    }

    /// Whether the orbit through `mode` carries a nonzero invariant vector:
    /// the generator returns after `s` steps with phase `e^{2πi j s / m}`.
    pub fn orbit_has_invariant(&self, mode: &Mode) -> bool {
        match &self.quotient {
            None => true,
            Some(q) => {
                let s = self.orbit(mode).len() as i64;
                (mode.j * s).rem_euclid(q.order as i64) == 0
            }
        }
    }

    /// One representative per orbit carrying an invariant vector, i.e. a
    /// basis of the invariant eigenfunctions with `μ ≤ mu_max`.
    pub fn invariant_modes(&self, mu_max: f64) -> Result<Vec<Mode>> {
        let modes = self.modes(mu_max)?;
        Ok(modes
            .into_iter()
            .filter(|m| {
                let orbit = self.orbit(m);
                orbit.iter().min().unwrap() == &m.dual && self.orbit_has_invariant(m)
            })
            .collect())
    }

    /// Full spectrum up to `mu_max` with merged multiplicities.
    pub fn spectrum(&self, mu_max: f64) -> Result<Vec<Level>> {
        Ok(merge_levels(self.modes(mu_max)?.iter().map(Mode::mu)))
    }

    /// Spectrum of the quotient-invariant eigenfunctions. Without a quotient
    /// this is [`CrossSection::spectrum`].
    pub fn invariant_spectrum(&self, mu_max: f64) -> Result<Vec<Level>> {
        if self.quotient.is_none() {
            return self.spectrum(mu_max);
        }
        Ok(merge_levels(self.invariant_modes(mu_max)?.iter().map(Mode::mu)))
    }
}

fn sort_modes(modes: &mut [Mode]) {
    modes.sort_by(|a, b| a.mu().total_cmp(&b.mu()).then(a.j.cmp(&b.j)).then(a.dual.cmp(&b.dual)));
}

fn merge_levels(mus: impl Iterator<Item = f64>) -> Vec<Level> {
    let mut sorted: Vec<f64> = mus.collect();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<Level> = Vec::new();
    for mu in sorted {
        match out.last_mut() {
            Some(level) if (mu - level.mu).abs() <= MERGE_TOL => level.multiplicity += 1,
            _ => out.push(Level { mu, multiplicity: 1 }),
        }
    }
    out
}

/// CSV with header `mu,multiplicity`.
pub fn levels_to_csv(levels: &[Level]) -> String {
    let mut out = String::from("mu,multiplicity\n");
    for l in levels {
        let _ = writeln!(out, "{},{}", l.mu, l.multiplicity);
    }
    out
}

/// Multiplicities keyed by `μ` rounded to 9 digits, for comparisons.
pub fn level_map(levels: &[Level]) -> BTreeMap<i64, usize> {
    levels
        .iter()
        .map(|l| ((l.mu * 1e9).round() as i64, l.multiplicity))
        .collect()
}
