//! Affine cell maps and the contravariant Piola transform.

use super::basis::ReferenceBasis;
use crate::error::{Error, Result};

/// `F(x) = v0 + J x` mapping the reference triangle onto a physical cell.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub inv: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(coords: [[f64; 2]; 3]) -> Result<Self> {
        let [v0, v1, v2] = coords;
        let jac = [[v1[0] - v0[0], v2[0] - v0[0]], [v1[1] - v0[1], v2[1] - v0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det.abs() > 1e-14 * scale * scale) || !det.is_finite() {
            return Err(Error::DegenerateMap(det));
        }
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Ok(AffineMap { origin: v0, jac, det, inv })
    }

    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * p[0] + self.jac[0][1] * p[1],
            self.origin[1] + self.jac[1][0] * p[0] + self.jac[1][1] * p[1],
        ]
    }

    pub fn inverse_map(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [self.inv[0][0] * d[0] + self.inv[0][1] * d[1], self.inv[1][0] * d[0] + self.inv[1][1] * d[1]]
    }

    /// `J v / det J`
    #[inline]
    pub fn push(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }

    /// Inverse of [`push`](Self::push): `det J * J^{-1} v`.
    #[inline]
    pub fn pull(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.det * (self.inv[0][0] * v[0] + self.inv[0][1] * v[1]),
            self.det * (self.inv[1][0] * v[0] + self.inv[1][1] * v[1]),
        ]
    }

    #[inline]
    pub fn push_div(&self, d: f64) -> f64 {
        d / self.det
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }
}

/// Basis values mapped to a physical cell at the mapped quadrature points.
#[derive(Clone, Debug)]
pub struct PhysicalValues {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    /// Physical quadrature weights (reference weight times |det J|).
    pub weights: Vec<f64>,
    /// `values[q * dim + i]`
    pub values: Vec<[f64; 2]>,
    pub divs: Vec<f64>,
}

/// Pushes an H(div) reference basis forward to the cell with the given
/// vertices.
pub fn piola_push(coords: [[f64; 2]; 3], basis: &ReferenceBasis) -> Result<PhysicalValues> {
    let map = AffineMap::new(coords)?;
    let dim = basis.dim();
    let nq = basis.n_points();
    let mut values = Vec::with_capacity(nq * dim);
    let mut divs = Vec::with_capacity(nq * dim);
    for q in 0..nq {
        for i in 0..dim {
            values.push(map.push(basis.vvalue(q, i)));
            divs.push(map.push_div(basis.div(q, i)));
        }
    }
    Ok(PhysicalValues {
        dim,
        points: basis.points().iter().map(|&p| map.map(p)).collect(),
        weights: basis.weights().iter().map(|w| w * map.det.abs()).collect(),
        values,
        divs,
    })
}
