//! Sparse assembly of the bilinear forms and of the saddle-point
//! eigenproblem `K z = lambda C z`.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelem::piola::AffineMap;
use crate::space::{
    build_pressure_space, build_pseudostress_space, build_trace_constraint, build_velocity_space, FeSpace, Scheme,
    TraceConstraint,
};
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Full,
    Reduced,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Full => "full",
            Formulation::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Formulation::Full),
            "reduced" => Ok(Formulation::Reduced),
            _ => Err(Error::InvalidInput(format!("unknown formulation '{s}' (expected full or reduced)"))),
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pushed-forward H(div) basis on one cell, signs applied.
struct HdivCell {
    dim: usize,
    /// `vals[q * dim + i]`
    vals: Vec<[f64; 2]>,
    divs: Vec<f64>,
    /// physical weights
    w: Vec<f64>,
}

fn hdiv_cell(space: &FeSpace, c: usize, row_sign: usize) -> Result<HdivCell> {
    let b = space.basis();
    let map = AffineMap::new(space.mesh().cell_coords(c))?;
    let dim = b.dim();
    let nq = b.n_points();
    let signs: Vec<f64> = space.cell_row_dofs(c, row_sign).map(|(_, s)| s).collect();
    let mut vals = Vec::with_capacity(nq * dim);
    let mut divs = Vec::with_capacity(nq * dim);
    for q in 0..nq {
        for i in 0..dim {
            let v = map.push(b.vvalue(q, i));
            vals.push([signs[i] * v[0], signs[i] * v[1]]);
            divs.push(signs[i] * map.push_div(b.div(q, i)));
        }
    }
    let w = b.weights().iter().map(|w| w * map.det.abs()).collect();
    Ok(HdivCell { dim, vals, divs, w })
}

fn same_mesh(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if !Arc::ptr_eq(a.mesh(), b.mesh()) {
        return Err(Error::IncompatibleSpaces("spaces are built on different meshes".into()));
    }
    if a.k() != b.k() {
        return Err(Error::IncompatibleSpaces(format!("degree mismatch ({} vs {})", a.k(), b.k())));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

fn per_cell<F>(mesh: &Mesh, f: F) -> Result<Vec<Vec<(usize, usize, f64)>>>
where
    F: Fn(usize) -> Result<Vec<(usize, usize, f64)>> + Sync + Send,
{
    (0..mesh.n_cells()).into_par_iter().map(f).collect()
}

fn collect_sym(t: &mut TripletBuilder, cells: Vec<Vec<(usize, usize, f64)>>) {
    for cell in cells {
        for (i, j, v) in cell {
            t.push_sym(i, j, v);
        }
    }
}

/// Upper-triangle local entries of the (sigma, sigma) block. `deviatoric`
/// weights the a0 part and `trace` the `(tr sigma)(tr tau)` part.
fn sigma_block(space: &FeSpace, c: usize, deviatoric: f64, trace: f64) -> Result<Vec<(usize, usize, f64)>> {
    let cell = hdiv_cell(space, c, 0)?;
    let n = cell.dim;
    let nq = cell.w.len();
    let mut out = Vec::with_capacity(2 * n * (2 * n + 1) / 2);
    for r in 0..2 {
        for s in r..2 {
            for i in 0..n {
                let j0 = if r == s { i } else { 0 };
                for j in j0..n {
                    let (mut g, mut tt) = (0.0, 0.0);
                    for q in 0..nq {
                        let (vi, vj) = (cell.vals[q * n + i], cell.vals[q * n + j]);
                        g += cell.w[q] * (vi[0] * vj[0] + vi[1] * vj[1]);
                        tt += cell.w[q] * vi[r] * vj[s];
                    }
                    let dot = if r == s { g } else { 0.0 };
                    let v = deviatoric * (dot - 0.5 * tt) + trace * tt;
                    out.push((space.dof(c, r, i), space.dof(c, s, j), v));
                }
            }
        }
    }
    Ok(out)
}

/// `(1/2mu) int sigma^d : tau^d`
pub fn assemble_a0(space: &FeSpace, mu: f64) -> Result<CsrMatrix> {
    check_mu(mu)?;
    let cells = per_cell(space.mesh(), |c| sigma_block(space, c, 0.5 / mu, 0.0))?;
    let mut t = TripletBuilder::new(space.ndof(), space.ndof());
    collect_sym(&mut t, cells);
    Ok(t.build(true))
}

fn full_block_entries(
    sigma: &FeSpace,
    pressure: &FeSpace,
    c: usize,
    mu: f64,
    gamma: f64,
    p_off: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    let g = gamma / mu;
    let mut out = sigma_block(sigma, c, 0.5 / mu, 0.25 * g)?;
    let cell = hdiv_cell(sigma, c, 0)?;
    let pb = pressure.basis();
    let n = cell.dim;
    let np = pb.dim();
    for r in 0..2 {
        for i in 0..n {
            for l in 0..np {
                let v: f64 = (0..cell.w.len()).map(|q| cell.w[q] * cell.vals[q * n + i][r] * pb.value(q, l)).sum();
                out.push((sigma.dof(c, r, i), p_off + pressure.dof(c, 0, l), 0.5 * g * v));
            }
        }
    }
    for l in 0..np {
        for m in l..np {
            let v: f64 = (0..cell.w.len()).map(|q| cell.w[q] * pb.value(q, l) * pb.value(q, m)).sum();
            out.push((p_off + pressure.dof(c, 0, l), p_off + pressure.dof(c, 0, m), g * v));
        }
    }
    Ok(out)
}

/// `(1/2mu) int sigma^d : tau^d + (gamma/mu) int (p + tr sigma / 2)(q + tr tau / 2)`
/// on the product space, sigma DOFs first.
pub fn assemble_a_full(sigma: &FeSpace, pressure: &FeSpace, mu: f64, gamma: f64) -> Result<CsrMatrix> {
    check_mu(mu)?;
    same_mesh(sigma, pressure)?;
    let n = sigma.ndof() + pressure.ndof();
    let cells = per_cell(sigma.mesh(), |c| full_block_entries(sigma, pressure, c, mu, gamma, sigma.ndof()))?;
    let mut t = TripletBuilder::new(n, n);
    collect_sym(&mut t, cells);
    Ok(t.build(true))
}

/// `(u_row, sigma_col, int v . div tau)` entries of one cell.
fn b_entries(sigma: &FeSpace, velocity: &FeSpace, c: usize) -> Result<Vec<(usize, usize, f64)>> {
    let cell = hdiv_cell(sigma, c, 0)?;
    let ub = velocity.basis();
    let n = cell.dim;
    let mut out = Vec::with_capacity(2 * n * ub.dim());
    for r in 0..2 {
        for l in 0..ub.dim() {
            for i in 0..n {
                let v: f64 = (0..cell.w.len()).map(|q| cell.w[q] * ub.value(q, l) * cell.divs[q * n + i]).sum();
                out.push((velocity.dof(c, r, l), sigma.dof(c, r, i), v));
            }
        }
    }
    Ok(out)
}

/// `B[v, tau] = int v . div tau`, shape `ndof(u) x ndof(sigma)`.
pub fn assemble_b(sigma: &FeSpace, velocity: &FeSpace) -> Result<CsrMatrix> {
    same_mesh(sigma, velocity)?;
    let cells = per_cell(sigma.mesh(), |c| b_entries(sigma, velocity, c))?;
    let mut t = TripletBuilder::new(velocity.ndof(), sigma.ndof());
    for cell in cells {
        for (i, j, v) in cell {
            t.push(i, j, v);
        }
    }
    Ok(t.build(false))
}

fn mass_entries(space: &FeSpace, c: usize) -> Result<Vec<(usize, usize, f64)>> {
    let b = space.basis();
    let map = AffineMap::new(space.mesh().cell_coords(c))?;
    let n = b.dim();
    let mut out = Vec::new();
    for l in 0..n {
        for m in l..n {
            let v: f64 = (0..b.n_points()).map(|q| b.weights()[q] * b.value(q, l) * b.value(q, m)).sum::<f64>() * map.det.abs();
            for r in 0..space.rows() {
                out.push((space.dof(c, r, l), space.dof(c, r, m), v));
            }
        }
    }
    Ok(out)
}

/// Block-diagonal L2 mass matrix of a discontinuous space.
pub fn assemble_mass_u(space: &FeSpace) -> Result<CsrMatrix> {
    if space.is_hdiv() {
        return Err(Error::IncompatibleSpaces("mass matrix needs a discontinuous space".into()));
    }
    let cells = per_cell(space.mesh(), |c| mass_entries(space, c))?;
    let mut t = TripletBuilder::new(space.ndof(), space.ndof());
    collect_sym(&mut t, cells);
    Ok(t.build(true))
}

/// H(div) inner product `int sigma : tau + int div sigma . div tau`.
pub fn assemble_hdiv_gram(space: &FeSpace) -> Result<CsrMatrix> {
    let cells = per_cell(space.mesh(), |c| {
        let cell = hdiv_cell(space, c, 0)?;
        let n = cell.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..cell.w.len())
                    .map(|q| {
                        let (a, b) = (cell.vals[q * n + i], cell.vals[q * n + j]);
                        cell.w[q] * (a[0] * b[0] + a[1] * b[1] + cell.divs[q * n + i] * cell.divs[q * n + j])
                    })
                    .sum();
                for r in 0..2 {
                    out.push((space.dof(c, r, i), space.dof(c, r, j), v));
                }
            }
        }
        Ok(out)
    })?;
    let mut t = TripletBuilder::new(space.ndof(), space.ndof());
    collect_sym(&mut t, cells);
    Ok(t.build(true))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub sigma: Range<usize>,
    pub pressure: Option<Range<usize>>,
    pub velocity: Range<usize>,
    pub multiplier: usize,
    pub dim: usize,
}

/// Generalized eigenproblem `K z = lambda C z` with `C = -M` on the
/// velocity block.
#[derive(Clone, Debug)]
pub struct EigSystem {
    pub k: CsrMatrix,
    pub c: CsrMatrix,
    /// Velocity mass matrix `M`.
    pub mass: CsrMatrix,
    pub layout: BlockLayout,
    pub formulation: Formulation,
    pub scheme: Scheme,
    pub degree: usize,
    pub mu: f64,
    pub gamma: f64,
    pub sigma_space: FeSpace,
    pub pressure_space: Option<FeSpace>,
    pub velocity_space: FeSpace,
    pub trace: TraceConstraint,
}

impl EigSystem {
    pub fn dim(&self) -> usize {
        self.layout.dim
    }
}

pub fn build_eig_system(mesh: &Arc<Mesh>, scheme: Scheme, k: usize, formulation: Formulation, mu: f64) -> Result<EigSystem> {
    build_eig_system_with_gamma(mesh, scheme, k, formulation, mu, 1.0)
}

pub fn build_eig_system_with_gamma(
    mesh: &Arc<Mesh>,
    scheme: Scheme,
    k: usize,
    formulation: Formulation,
    mu: f64,
    gamma: f64,
) -> Result<EigSystem> {
    check_mu(mu)?;
    let sigma = build_pseudostress_space(mesh, scheme, k)?;
    let velocity = build_velocity_space(mesh, k)?;
    let pressure = match formulation {
        Formulation::Full => Some(build_pressure_space(mesh, k)?),
        Formulation::Reduced => None,
    };
    let ns = sigma.ndof();
    let np = pressure.as_ref().map_or(0, |p| p.ndof());
    let nu = velocity.ndof();
    let layout = BlockLayout {
        sigma: 0..ns,
        pressure: pressure.as_ref().map(|_| ns..ns + np),
        velocity: ns + np..ns + np + nu,
        multiplier: ns + np + nu,
        dim: ns + np + nu + 1,
    };
    let u_off = layout.velocity.start;
    let a_cells = match &pressure {
        Some(p) => per_cell(mesh, |c| full_block_entries(&sigma, p, c, mu, gamma, ns))?,
        None => per_cell(mesh, |c| sigma_block(&sigma, c, 0.5 / mu, 0.0))?,
    };
    let b_cells = per_cell(mesh, |c| b_entries(&sigma, &velocity, c))?;
    let m_cells = per_cell(mesh, |c| mass_entries(&velocity, c))?;
    let trace = build_trace_constraint(&sigma)?;

    let mut kt = TripletBuilder::new(layout.dim, layout.dim);
    collect_sym(&mut kt, a_cells);
    for cell in b_cells {
        for (i, j, v) in cell {
            kt.push_sym(u_off + i, j, v);
        }
    }
    for (i, &v) in trace.t.iter().enumerate() {
        if v != 0.0 {
            kt.push_sym(layout.multiplier, i, v);
        }
    }
    let mut mt = TripletBuilder::new(nu, nu);
    let mut ct = TripletBuilder::new(layout.dim, layout.dim);
    for cell in m_cells {
        for (i, j, v) in cell {
            mt.push_sym(i, j, v);
            ct.push_sym(u_off + i, u_off + j, -v);
        }
    }
    Ok(EigSystem {
        k: kt.build(true),
        c: ct.build(true),
        mass: mt.build(true),
        layout,
        formulation,
        scheme,
        degree: k,
        mu,
        gamma,
        sigma_space: sigma,
        pressure_space: pressure,
        velocity_space: velocity,
        trace,
    })
}
