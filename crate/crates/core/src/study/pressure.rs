//! Pressure recovery `p = -tr(sigma) / 2`.

use std::sync::Arc;

use serde::Serialize;

use crate::assembly::EigSystem;
use crate::error::{Error, Result};
use crate::refelem::piola::AffineMap;
use crate::space::FeSpace;

/// Trace of `sigma_h` at the quadrature points of one cell, with the
/// physical weights and the cell integral of `|sigma_h|^2`.
fn cell_trace(x: &[f64], sigma: &FeSpace, c: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let b = sigma.basis();
    let map = AffineMap::new(sigma.mesh().cell_coords(c))?;
    let mut tr = vec![0.0; b.n_points()];
    let mut sq = vec![0.0; b.n_points()];
    for r in 0..2 {
        let dofs: Vec<(usize, f64)> = sigma.cell_row_dofs(c, r).collect();
        for (q, t) in tr.iter_mut().enumerate() {
            let mut v = [0.0; 2];
            for (i, (g, s)) in dofs.iter().enumerate() {
                let phi = b.vvalue(q, i);
                v[0] += s * x[*g] * phi[0];
                v[1] += s * x[*g] * phi[1];
            }
            let pv = map.push(v);
            *t += pv[r];
            sq[q] += pv[0] * pv[0] + pv[1] * pv[1];
        }
    }
    let w: Vec<f64> = b.weights().iter().map(|w| w * map.det.abs()).collect();
    let energy = w.iter().zip(&sq).map(|(w, s)| w * s).sum();
    Ok((tr, w, energy))
}

fn check(sigma: &FeSpace, pressure: &FeSpace, x: &[f64]) -> Result<()> {
    if !Arc::ptr_eq(sigma.mesh(), pressure.mesh()) {
        return Err(Error::IncompatibleSpaces("spaces are built on different meshes".into()));
    }
    if !sigma.is_hdiv() || pressure.is_hdiv() || pressure.rows() != 1 {
        return Err(Error::IncompatibleSpaces("expected a pseudostress and a scalar space".into()));
    }
    if sigma.basis().n_points() != pressure.basis().n_points() {
        return Err(Error::IncompatibleSpaces("quadrature rules differ".into()));
    }
    if x.len() < sigma.ndof() {
        return Err(Error::InvalidInput(format!("expected {} pseudostress coefficients, got {}", sigma.ndof(), x.len())));
    }
    Ok(())
}

/// Cellwise L2 projection of `-tr(sigma_h) / 2` onto the pressure space.
/// Only the first `sigma.ndof()` entries of `x` are read.
pub fn recover_pressure(x: &[f64], sigma: &FeSpace, pressure: &FeSpace) -> Result<Vec<f64>> {
    check(sigma, pressure, x)?;
    let pb = pressure.basis();
    let mut p = vec![0.0; pressure.ndof()];
    for c in 0..sigma.mesh().n_cells() {
        let (tr, w, _) = cell_trace(x, sigma, c)?;
        let area: f64 = w.iter().sum();
        for (l, (g, s)) in pressure.cell_row_dofs(c, 0).enumerate() {
            let m: f64 = (0..tr.len()).map(|q| w[q] * -0.5 * tr[q] * pb.value(q, l)).sum();
            p[g] = s * m / area;
        }
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureGap {
    /// `||p_h - R_h(-tr sigma_h / 2)|| / ||sigma_h||`
    pub projected: f64,
    /// `||p_h + tr sigma_h / 2|| / ||sigma_h||`
    pub pointwise: f64,
}

/// Pressure consistency of a full-scheme eigenvector; `None` for the
/// reduced formulation.
pub fn pressure_gap(system: &EigSystem, z: &[f64]) -> Result<Option<PressureGap>> {
    let (Some(pspace), Some(range)) = (&system.pressure_space, &system.layout.pressure) else {
        return Ok(None);
    };
    let sigma = &system.sigma_space;
    check(sigma, pspace, z)?;
    let ph = &z[range.clone()];
    let rec = recover_pressure(z, sigma, pspace)?;
    let pb = pspace.basis();
    let (mut norm, mut proj, mut point) = (0.0, 0.0, 0.0);
    for c in 0..sigma.mesh().n_cells() {
        let (tr, w, e) = cell_trace(z, sigma, c)?;
        norm += e;
        let dofs: Vec<(usize, f64)> = pspace.cell_row_dofs(c, 0).collect();
        for q in 0..tr.len() {
            let (mut v, mut d) = (0.0, 0.0);
            for (l, (g, s)) in dofs.iter().enumerate() {
                v += s * ph[*g] * pb.value(q, l);
                d += s * (ph[*g] - rec[*g]) * pb.value(q, l);
            }
            proj += w[q] * d * d;
            point += w[q] * (v + 0.5 * tr[q]).powi(2);
        }
    }
    if norm == 0.0 {
        return Err(Error::InvalidInput("pseudostress component vanishes".into()));
    }
    Ok(Some(PressureGap { projected: (proj / norm).sqrt(), pointwise: (point / norm).sqrt() }))
}
