//! Global finite element spaces: tensor pseudostress (two H(div) rows),
//! discontinuous vector velocity and discontinuous scalar pressure.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelem::basis::{bdm_basis, pk_basis, rt_basis, DofKind, Family, ReferenceBasis};
use crate::refelem::piola::AffineMap;
use crate::refelem::quadrature::quadrature_rule;

/// Pseudostress element family. `Bdm` with scheme degree `k` means BDM_{k+1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rt,
    Bdm,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rt => "rt",
            Scheme::Bdm => "bdm",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Scheme::Rt => Family::Rt,
            Scheme::Bdm => Family::Bdm,
        }
    }

    /// Polynomial degree of the H(div) element paired with velocity degree `k`.
    pub fn element_degree(self, k: usize) -> usize {
        match self {
            Scheme::Rt => k,
            Scheme::Bdm => k + 1,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rt" => Ok(Scheme::Rt),
            "bdm" => Ok(Scheme::Bdm),
            _ => Err(Error::InvalidInput(format!("unknown family '{s}' (expected rt or bdm)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Pseudostress { scheme: Scheme, k: usize },
    Velocity { k: usize },
    Pressure { k: usize },
}

/// Assembly quadrature degree for velocity degree `k`.
pub fn assembly_degree(k: usize) -> usize {
    2 * (k + 2)
}

/// A global space. Global index of local function `i` in row `r` on cell
/// `c` is `cell_dofs[(c * rows + r) * local_dim + i]`.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub kind: SpaceKind,
    mesh: Arc<Mesh>,
    basis: ReferenceBasis,
    ndof: usize,
    rows: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<f64>,
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// DOFs per row.
    pub fn row_ndof(&self) -> usize {
        self.ndof / self.rows
    }

    pub fn local_dim(&self) -> usize {
        self.basis.dim()
    }

    /// Velocity degree `k` of the scheme the space belongs to.
    pub fn k(&self) -> usize {
        match self.kind {
            SpaceKind::Pseudostress { k, .. } | SpaceKind::Velocity { k } | SpaceKind::Pressure { k } => k,
        }
    }

    pub fn is_hdiv(&self) -> bool {
        matches!(self.kind, SpaceKind::Pseudostress { .. })
    }

    #[inline]
    pub fn dof(&self, cell: usize, row: usize, i: usize) -> usize {
        self.cell_dofs[(cell * self.rows + row) * self.local_dim() + i]
    }

    #[inline]
    pub fn sign(&self, cell: usize, row: usize, i: usize) -> f64 {
        self.cell_signs[(cell * self.rows + row) * self.local_dim() + i]
    }

    /// `(global index, sign)` for every local function of one row on a cell.
    pub fn cell_row_dofs(&self, cell: usize, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.local_dim();
        let off = (cell * self.rows + row) * n;
        self.cell_dofs[off..off + n].iter().copied().zip(self.cell_signs[off..off + n].iter().copied())
    }

    /// Field value of one row at a reference point of a cell (vector for
    /// H(div) rows, `[value, 0]` for scalar rows).
    pub fn eval_row(&self, x: &[f64], cell: usize, row: usize, p: [f64; 2]) -> Result<[f64; 2]> {
        if self.is_hdiv() {
            let map = AffineMap::new(self.mesh.cell_coords(cell))?;
            let mut v = [0.0; 2];
            for (i, (g, s)) in self.cell_row_dofs(cell, row).enumerate() {
                let b = self.basis.eval_vec(i, p[0], p[1]);
                v[0] += s * x[g] * b[0];
                v[1] += s * x[g] * b[1];
            }
            Ok(map.push(v))
        } else {
            let v = self.cell_row_dofs(cell, row).enumerate().map(|(i, (g, s))| s * x[g] * self.basis.eval(i, p[0], p[1])).sum();
            Ok([v, 0.0])
        }
    }

    /// Divergence of one H(div) row at a reference point of a cell.
    pub fn eval_row_div(&self, x: &[f64], cell: usize, row: usize, p: [f64; 2]) -> Result<f64> {
        let map = AffineMap::new(self.mesh.cell_coords(cell))?;
        let d: f64 = self.cell_row_dofs(cell, row).enumerate().map(|(i, (g, s))| s * x[g] * self.basis.eval_div(i, p[0], p[1])).sum();
        Ok(map.push_div(d))
    }
}

fn check_k(k: usize, max: usize, what: &str) -> Result<()> {
    if k > max {
        return Err(Error::UnsupportedElement(format!("{what} with k = {k} (supported k <= {max})")));
    }
    Ok(())
}

pub fn build_pseudostress_space(mesh: &Arc<Mesh>, scheme: Scheme, k: usize) -> Result<FeSpace> {
    check_k(k, 2, &format!("{} pseudostress", scheme.name()))?;
    let rule = quadrature_rule(assembly_degree(k))?;
    let basis = match scheme {
        Scheme::Rt => rt_basis(k, &rule)?,
        Scheme::Bdm => bdm_basis(k + 1, &rule)?,
    };
    let ne = basis.edge_dofs();
    let ni = basis.interior_dofs();
    let n_row = mesh.n_edges() * ne + mesh.n_cells() * ni;
    let dim = basis.dim();
    let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * 2 * dim);
    let mut cell_signs = Vec::with_capacity(mesh.n_cells() * 2 * dim);
    for (c, ce) in mesh.cell_edges().iter().enumerate() {
        for r in 0..2 {
            for meta in &basis.dof_meta {
                let (g, s) = match *meta {
                    DofKind::Edge { edge, moment } => {
                        let e = ce[edge];
                        let s = if e.sign > 0 || moment % 2 == 1 { 1.0 } else { -1.0 };
                        (e.edge * ne + moment, s)
                    }
                    DofKind::Interior { index } => (mesh.n_edges() * ne + c * ni + index, 1.0),
                };
                cell_dofs.push(r * n_row + g);
                cell_signs.push(s);
            }
        }
    }
    Ok(FeSpace {
        kind: SpaceKind::Pseudostress { scheme, k },
        mesh: mesh.clone(),
        basis,
        ndof: 2 * n_row,
        rows: 2,
        cell_dofs,
        cell_signs,
    })
}

fn build_dg_space(mesh: &Arc<Mesh>, k: usize, rows: usize, kind: SpaceKind) -> Result<FeSpace> {
    check_k(k, 2, "discontinuous P_k space")?;
    let basis = pk_basis(k, &quadrature_rule(assembly_degree(k))?)?;
    let dim = basis.dim();
    let per_row = mesh.n_cells() * dim;
    let mut cell_dofs = Vec::with_capacity(per_row * rows);
    for c in 0..mesh.n_cells() {
        for r in 0..rows {
            cell_dofs.extend((0..dim).map(|i| r * per_row + c * dim + i));
        }
    }
    let cell_signs = vec![1.0; cell_dofs.len()];
    Ok(FeSpace { kind, mesh: mesh.clone(), basis, ndof: per_row * rows, rows, cell_dofs, cell_signs })
}

/// `[P_k]^2`, component-major numbering.
pub fn build_velocity_space(mesh: &Arc<Mesh>, k: usize) -> Result<FeSpace> {
    build_dg_space(mesh, k, 2, SpaceKind::Velocity { k })
}

pub fn build_pressure_space(mesh: &Arc<Mesh>, k: usize) -> Result<FeSpace> {
    build_dg_space(mesh, k, 1, SpaceKind::Pressure { k })
}

/// `t[i] = int_Omega tr(phi_i)` over the global tensor basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceConstraint {
    pub t: Vec<f64>,
}

impl TraceConstraint {
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.t.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

pub fn build_trace_constraint(space: &FeSpace) -> Result<TraceConstraint> {
    if !space.is_hdiv() {
        return Err(Error::IncompatibleSpaces("trace constraint needs a pseudostress space".into()));
    }
    let mesh = space.mesh();
    let b = space.basis();
    let mut t = vec![0.0; space.ndof()];
    for c in 0..mesh.n_cells() {
        let map = AffineMap::new(mesh.cell_coords(c))?;
        for r in 0..2 {
            for (i, (g, s)) in space.cell_row_dofs(c, r).enumerate() {
                // |det J| * w * (J v / det J)_r
                let mut acc = 0.0;
                for q in 0..b.n_points() {
                    let v = b.vvalue(q, i);
                    acc += b.weights()[q] * (map.jac[r][0] * v[0] + map.jac[r][1] * v[1]);
                }
                t[g] += s * acc * map.det.signum();
            }
        }
    }
    Ok(TraceConstraint { t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{disk_mesh, lshape_mesh, unit_square_mesh, Mesh};
    use crate::refelem::basis::ref_edge;
    use rand::{Rng, SeedableRng};

    fn sq(n: usize) -> Arc<Mesh> {
        Arc::new(unit_square_mesh(n).unwrap())
    }

    #[test]
    fn ndof_examples() {
        let m = sq(4);
        assert_eq!(build_pseudostress_space(&m, Scheme::Rt, 0).unwrap().ndof(), 112);
        assert_eq!(build_pseudostress_space(&m, Scheme::Bdm, 0).unwrap().ndof(), 224);
        let tri = Arc::new(Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap());
        assert_eq!(build_pseudostress_space(&tri, Scheme::Rt, 1).unwrap().ndof(), 16);
        assert_eq!(build_velocity_space(&m, 0).unwrap().ndof(), 64);
        assert_eq!(build_pressure_space(&m, 0).unwrap().ndof(), 32);
        assert_eq!(build_velocity_space(&m, 1).unwrap().ndof(), 192);
        let d = Arc::new(disk_mesh(1).unwrap());
        assert_eq!(build_pressure_space(&d, 0).unwrap().ndof(), 6);
    }

    #[test]
    fn ndof_formulas() {
        for m in [sq(3), Arc::new(lshape_mesh(2).unwrap()), Arc::new(disk_mesh(3).unwrap())] {
            let (ne, nc) = (m.n_edges(), m.n_cells());
            for k in 0..=2 {
                let rt = build_pseudostress_space(&m, Scheme::Rt, k).unwrap();
                assert_eq!(rt.ndof(), 2 * (ne * (k + 1) + nc * k * (k + 1)));
                let mm = k + 1;
                let bdm = build_pseudostress_space(&m, Scheme::Bdm, k).unwrap();
                assert_eq!(bdm.ndof(), 2 * (ne * (mm + 1) + nc * (mm - 1) * (mm + 1)));
                assert_eq!(build_velocity_space(&m, k).unwrap().ndof(), 2 * nc * (k + 1) * (k + 2) / 2);
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        let m = sq(1);
        assert!(build_pseudostress_space(&m, Scheme::Rt, 3).is_err());
        assert!(build_velocity_space(&m, 3).is_err());
    }

    #[test]
    fn every_dof_is_used() {
        let m = sq(3);
        for s in [Scheme::Rt, Scheme::Bdm] {
            let sp = build_pseudostress_space(&m, s, 1).unwrap();
            let mut seen = vec![false; sp.ndof()];
            for c in 0..m.n_cells() {
                for r in 0..2 {
                    for (g, _) in sp.cell_row_dofs(c, r) {
                        seen[g] = true;
                    }
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn normal_trace_continuity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for m in [sq(3), Arc::new(disk_mesh(2).unwrap())] {
            // edge -> (cell, local edge) incidences
            let mut inc: Vec<Vec<(usize, usize)>> = vec![vec![]; m.n_edges()];
            for (c, ce) in m.cell_edges().iter().enumerate() {
                for (l, e) in ce.iter().enumerate() {
                    inc[e.edge].push((c, l));
                }
            }
            for scheme in [Scheme::Rt, Scheme::Bdm] {
                for k in 0..=2 {
                    let sp = build_pseudostress_space(&m, scheme, k).unwrap();
                    for _ in 0..20 {
                        let x: Vec<f64> = (0..sp.ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        for (e, cells) in inc.iter().enumerate() {
                            if cells.len() != 2 {
                                continue;
                            }
                            let [a, b] = m.edges()[e];
                            let (pa, pb) = (m.vertices()[a], m.vertices()[b]);
                            let n = [pb[1] - pa[1], pa[0] - pb[0]];
                            for s in [0.2, 0.5, 0.85] {
                                let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                                for r in 0..2 {
                                    let tr: Vec<f64> = cells
                                        .iter()
                                        .map(|&(c, _)| {
                                            let map = AffineMap::new(m.cell_coords(c)).unwrap();
                                            let v = sp.eval_row(&x, c, r, map.inverse_map(p)).unwrap();
                                            v[0] * n[0] + v[1] * n[1]
                                        })
                                        .collect();
                                    assert!((tr[0] - tr[1]).abs() < 1e-10, "{scheme:?} k={k} jump {}", tr[0] - tr[1]);
                                }
                            }
                        }
                    }
                }
            }
        }
        let _ = ref_edge(0);
    }

    #[test]
    fn trace_constraint_matches_quadrature() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let m = sq(2);
        let rule = quadrature_rule(8).unwrap();
        for scheme in [Scheme::Rt, Scheme::Bdm] {
            let sp = build_pseudostress_space(&m, scheme, 1).unwrap();
            let tc = build_trace_constraint(&sp).unwrap();
            assert_eq!(tc.apply(&vec![0.0; sp.ndof()]), 0.0);
            let x: Vec<f64> = (0..sp.ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut direct = 0.0;
            for c in 0..m.n_cells() {
                let map = AffineMap::new(m.cell_coords(c)).unwrap();
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let r0 = sp.eval_row(&x, c, 0, *p).unwrap();
                    let r1 = sp.eval_row(&x, c, 1, *p).unwrap();
                    direct += w * map.det * (r0[0] + r1[1]);
                }
            }
            assert!((direct - tc.apply(&x)).abs() < 1e-12);
        }
    }
}
