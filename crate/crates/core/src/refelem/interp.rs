//! Canonical H(div) interpolation and elementwise L2 projection.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelem::basis::pk_basis;
use crate::refelem::piola::AffineMap;
use crate::refelem::quadrature::{quadrature_rule, MAX_DEGREE};
use crate::space::FeSpace;

fn interp_degree(element_degree: usize) -> usize {
    (2 * element_degree + 6).min(MAX_DEGREE)
}

/// Row-wise application of the element DOF functionals to a tensor field.
/// `field(x)[r]` is row `r`. Interior quadrature has degree
/// `min(10, 2m + 6)` and each edge uses `m + 5` Gauss points, where `m` is
/// the element degree.
pub fn interp_hdiv(field: impl Fn([f64; 2]) -> [[f64; 2]; 2], space: &FeSpace) -> Result<Vec<f64>> {
    if !space.is_hdiv() {
        return Err(Error::IncompatibleSpaces("interp_hdiv needs a pseudostress space".into()));
    }
    let b = space.basis();
    let m = b.degree;
    let f = b.functionals().expect("H(div) basis").resampled(interp_degree(m), m + 5)?;
    let mesh = space.mesh();
    let mut x = vec![0.0; space.ndof()];
    for c in 0..mesh.n_cells() {
        let map = AffineMap::new(mesh.cell_coords(c))?;
        for r in 0..2 {
            let local = f.apply(|s, t| map.pull(field(map.map([s, t]))[r]));
            for (i, (g, sg)) in space.cell_row_dofs(c, r).enumerate() {
                x[g] = sg * local[i];
            }
        }
    }
    Ok(x)
}

/// Elementwise L2 projection onto discontinuous P_k, with coefficients
/// numbered `cell * dim(P_k) + i` in the orthonormal basis.
pub fn l2_project(field: impl Fn([f64; 2]) -> f64, mesh: &Mesh, k: usize) -> Result<Vec<f64>> {
    let rule = quadrature_rule(interp_degree(k))?;
    let b = pk_basis(k, &rule)?;
    let dim = b.dim();
    let mut x = vec![0.0; mesh.n_cells() * dim];
    for c in 0..mesh.n_cells() {
        let map = AffineMap::new(mesh.cell_coords(c))?;
        for q in 0..b.n_points() {
            let fv = field(map.map(b.points()[q]));
            // mean inner product: (1/|T|) int_T = 2 int_ref
            let w = 2.0 * b.weights()[q] * fv;
            for i in 0..dim {
                x[c * dim + i] += w * b.value(q, i);
            }
        }
    }
    Ok(x)
}

/// Value at a reference point of cell `c` of a discontinuous P_k function
/// with [`l2_project`] numbering.
pub fn eval_pk(coeffs: &[f64], k: usize, c: usize, p: [f64; 2]) -> Result<f64> {
    let b = pk_basis(k, &quadrature_rule(0)?)?;
    let dim = b.dim();
    Ok((0..dim).map(|i| coeffs[c * dim + i] * b.eval(i, p[0], p[1])).sum())
}
