//! Monge–Ampère residual for `n = 2` potentials depending on `t` and on one
//! torus coordinate `u`.
//!
//! With `z = e^{t+iθ}` and `w = u + iv`, a function of `(t, u)` has
//! `φ_{zz̄} = φ_tt/(4|z|²)`, `φ_{ww̄} = φ_uu/4`, `φ_{zw̄} = φ_tu/(4z)`, while
//! `ω` has `g_{zz̄} = a/(2|z|²)` and `g_{ww̄} = 1/2`. The determinant ratio is
//! therefore
//!
//! `((a/2 + φ_tt/4)(1/2 + φ_uu/4) - (φ_tu/4)²) / (a/4)
//!   = (1 + φ_tt/(2a))(1 + φ_uu/2) - φ_tu²/(4a)`,
//!
//! and the residual is its logarithm plus `φ_t - sF`.

use crate::error::{Error, Result};
use crate::grid::{fd, GridFunction2D};
use crate::model::RadialKahlerModel;

pub fn ma_residual_2d(
    model: &RadialKahlerModel,
    phi: &GridFunction2D,
    f: &GridFunction2D,
    s: f64,
) -> Result<GridFunction2D> {
    if model.n() != 2 {
        return Err(Error::param("model", "the 2D residual needs n = 2"));
    }
    phi.same_layout(f)?;
    let grid = *phi.grid();
    let a = model.coefficient_on(&grid)?;
    let (nt, nu) = (grid.len(), phi.u_len());
    let (h, du) = (grid.h(), phi.du());

    let mut phi_t = vec![0.0; nt * nu];
    let mut phi_tt = vec![0.0; nt * nu];
    for j in 0..nu {
        let col: Vec<f64> = (0..nt).map(|i| phi.at(i, j)).collect();
        for (i, (d1, d2)) in fd::first(&col, h).into_iter().zip(fd::second(&col, h)).enumerate() {
            phi_t[i * nu + j] = d1;
            phi_tt[i * nu + j] = d2;
        }
    }
    let mut out = Vec::with_capacity(nt * nu);
    for i in 0..nt {
        for j in 0..nu {
            let (jm, jp) = ((j + nu - 1) % nu, (j + 1) % nu);
            let uu = (phi.at(i, jp) - 2.0 * phi.at(i, j) + phi.at(i, jm)) / (du * du);
            let tu = (phi_t[i * nu + jp] - phi_t[i * nu + jm]) / (2.0 * du);
            let det = (1.0 + phi_tt[i * nu + j] / (2.0 * a[i])) * (1.0 + 0.5 * uu) - tu * tu / (4.0 * a[i]);
            let diag = 1.0 + phi_tt[i * nu + j] / (2.0 * a[i]);
            if !(det > 0.0 && diag > 0.0) {
                return Err(Error::PositivityLost {
                    node: i,
                    t: grid.t(i),
                    ratio: det,
                });
            }
            out.push(det.ln() + phi_t[i * nu + j] - s * f.at(i, j));
        }
    }
    Ok(phi.with_values(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuity::ma_residual_values;
    use crate::grid::{Grid, GridFunction};
    use crate::model::cigar_model;

    #[test]
    fn zero_potential_zero_s() {
        let g = Grid::new(-4.0, 6.0, 0.05).unwrap();
        let phi = GridFunction2D::from_fn(g, std::f64::consts::TAU, 8, |_, _| 0.0).unwrap();
        let r = ma_residual_2d(&cigar_model(2).unwrap(), &phi, &phi, 0.0).unwrap();
        assert_eq!(r.sup_norm(), 0.0);
    }

    #[test]
    fn u_independent_reduces_to_radial() {
        let g = Grid::new(-4.0, 6.0, 0.05).unwrap();
        let m = cigar_model(2).unwrap();
        let p = |t: f64| 0.2 * (-(t - 1.0).powi(2)).exp();
        let phi = GridFunction2D::from_fn(g, std::f64::consts::TAU, 8, |t, _| p(t)).unwrap();
        let f = GridFunction2D::from_fn(g, std::f64::consts::TAU, 8, |t, _| t.sin()).unwrap();
        let r2 = ma_residual_2d(&m, &phi, &f, 0.7).unwrap();
        let r1 = ma_residual_values(
            &cigar_model(1).unwrap().with_potential_offset(1.0).unwrap(),
            &GridFunction::from_fn(g, p).unwrap(),
            &GridFunction::from_fn(g, f64::sin).unwrap(),
            0.7,
        )
        .unwrap();
        // interior nodes share stencils; the radial path reflects at t_min
        for i in 1..g.len() {
            for j in 0..8 {
                assert!((r2.at(i, j) - r1.values()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_other_dimensions() {
        let g = Grid::new(0.0, 1.0, 0.1).unwrap();
        let phi = GridFunction2D::from_fn(g, 1.0, 4, |_, _| 0.0).unwrap();
        assert!(ma_residual_2d(&cigar_model(1).unwrap(), &phi, &phi, 0.0).is_err());
    }
}
