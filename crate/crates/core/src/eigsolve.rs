//! Smallest positive eigenvalues of `K z = lambda C z` for symmetric `K`
//! and symmetric negative semidefinite `C`.
//!
//! `C` is nonzero only on a block `u` where it equals `-M` with `M` SPD.
//! Eliminating everything else gives the operator
//! `S x = -(K^{-1} [0; M x; 0])_u`, self-adjoint in the `M` inner product,
//! whose eigenvalues are `theta = 1 / lambda`. The other directions of the
//! pencil have `lambda = infinity` and never enter.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use serde::{Deserialize, Serialize};

use crate::assembly::EigSystem;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Systems up to this dimension use the dense solver under `Auto`.
pub const DENSE_LIMIT: usize = 1500;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Auto,
    Dense,
    #[serde(rename = "shiftinvert")]
    ShiftInvert,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "auto" => Ok(SolverKind::Auto),
            "dense" => Ok(SolverKind::Dense),
            "shiftinvert" => Ok(SolverKind::ShiftInvert),
            _ => Err(Error::InvalidInput(format!("unknown solver '{s}' (expected auto, dense or shiftinvert)"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Auto => "auto",
            SolverKind::Dense => "dense",
            SolverKind::ShiftInvert => "shiftinvert",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative threshold below which `|theta|` counts as infinite lambda.
    pub tol_inf: f64,
    /// Ritz residual tolerance relative to `theta`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov subspace size; `None` means `max(4 nev, 40)`.
    pub subspace: Option<usize>,
    /// Spectral shift of the sparse path; a negative value lets the velocity
    /// block be eliminated exactly.
    pub shift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { kind: SolverKind::Auto, tol_inf: 1e-10, tol: 1e-12, max_restarts: 50, subspace: None, shift: -1.0 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Spectrum {
    /// Ascending, finite and positive.
    pub eigenvalues: Vec<f64>,
    /// Full-length eigenvectors with `z_u^T M z_u = 1`.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// `||K z - lambda C z|| / ||K z||`
    pub residuals: Vec<f64>,
    pub nev_requested: usize,
    pub nev_converged: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Filtered {
    pub eigenvalues: Vec<f64>,
    /// Position of each kept value in the input.
    pub source: Vec<usize>,
    pub advisory: Option<String>,
}

/// Maps `theta = 1 / lambda` values to finite positive eigenvalues,
/// discarding `|theta| <= tol_inf * max |theta|` and negative values.
pub fn filter_spectrum(theta: &[f64], tol_inf: f64) -> Filtered {
    let max = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut kept: Vec<(f64, usize)> = theta
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > tol_inf * max && t > 0.0)
        .map(|(i, &t)| (1.0 / t, i))
        .collect();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let advisory = kept.is_empty().then(|| {
        "no finite positive eigenvalues found; raise nev or the Krylov subspace size".to_string()
    });
    Filtered { eigenvalues: kept.iter().map(|k| k.0).collect(), source: kept.iter().map(|k| k.1).collect(), advisory }
}

pub fn solve_generalized(system: &EigSystem, nev: usize) -> Result<Spectrum> {
    solve_generalized_with(system, nev, &SolverOptions::default())
}

pub fn solve_generalized_with(system: &EigSystem, nev: usize, opts: &SolverOptions) -> Result<Spectrum> {
    solve_pencil(&system.k, &system.c, nev, opts)
}

/// Velocity block of the pencil: indices where `C` is nonzero, and `M = -C`
/// restricted to them.
struct MassBlock {
    idx: Vec<usize>,
    m: CsrMatrix,
}

fn mass_block(c: &CsrMatrix) -> MassBlock {
    let idx: Vec<usize> = (0..c.nrows).filter(|&i| c.row(i).any(|(_, v)| v != 0.0)).collect();
    let mut pos = vec![usize::MAX; c.nrows];
    for (p, &i) in idx.iter().enumerate() {
        pos[i] = p;
    }
    let mut t = crate::sparse::TripletBuilder::new(idx.len(), idx.len());
    for (p, &i) in idx.iter().enumerate() {
        for (j, v) in c.row(i) {
            if pos[j] != usize::MAX && v != 0.0 {
                t.push(p, pos[j], -v);
            }
        }
    }
    MassBlock { idx, m: t.build(true) }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

type SparseLu = faer::sparse::linalg::solvers::Lu<usize, f64>;
type SparseLlt = faer::sparse::linalg::solvers::Llt<usize, f64>;

enum Core {
    Lu(SparseLu),
    Llt(SparseLlt),
}

impl Core {
    fn factor(n: usize, trip: &[Triplet<usize, usize, f64>], spd: bool) -> Result<Self> {
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, trip)
            .map_err(|e| Error::SingularSystem(format!("could not build sparse matrix: {e:?}")))?;
        if spd {
            a.sp_cholesky(Side::Lower)
                .map(Core::Llt)
                .map_err(|e| Error::SingularSystem(format!("Cholesky factorization failed: {e:?}")))
        } else {
            a.sp_lu().map(Core::Lu).map_err(|e| Error::SingularSystem(format!("LU factorization failed: {e:?}")))
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        match self {
            Core::Lu(lu) => lu.solve_in_place(m.as_mut()),
            Core::Llt(llt) => llt.solve_in_place(m.as_mut()),
        }
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }
}

/// Exact elimination of a block-diagonal `D = K_uu`:
/// the core matrix is `A - B^T D^{-1} B`.
struct Elim {
    u: Vec<usize>,
    /// `K_ux` with core-local columns.
    b: CsrMatrix,
    bt: CsrMatrix,
    /// Local `u` positions of each diagonal block and the block inverse.
    blocks: Vec<(Vec<usize>, Mat<f64>)>,
}

impl Elim {
    fn dinv(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        for (pos, inv) in &self.blocks {
            for (a, &pa) in pos.iter().enumerate() {
                out[pa] = pos.iter().enumerate().map(|(b, &pb)| inv[(a, b)] * r[pb]).sum();
            }
        }
        out
    }
}

/// Connected components of the sparsity graph of a symmetric matrix.
fn components(m: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows;
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for (j, _) in m.row(i) {
                if comp[j] == usize::MAX {
                    comp[j] = id;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Largest diagonal block eliminated exactly.
const MAX_BLOCK: usize = 64;

/// Block-diagonal, negative definite `K_uu` as inverted blocks.
fn negative_blocks(k: &CsrMatrix, u: &[usize]) -> Option<Vec<(Vec<usize>, Mat<f64>)>> {
    let mut pos = vec![usize::MAX; k.nrows];
    for (p, &i) in u.iter().enumerate() {
        pos[i] = p;
    }
    let mut t = crate::sparse::TripletBuilder::new(u.len(), u.len());
    for (p, &i) in u.iter().enumerate() {
        t.push(p, p, 0.0);
        for (j, v) in k.row(i) {
            if pos[j] != usize::MAX {
                t.push(p, pos[j], v);
            }
        }
    }
    let d = t.build(true);
    let mut blocks = Vec::new();
    for c in components(&d) {
        if c.len() > MAX_BLOCK {
            return None;
        }
        let neg = Mat::<f64>::from_fn(c.len(), c.len(), |a, b| -d.get(c[a], c[b]));
        let llt = neg.llt(Side::Lower).ok()?;
        let inv = llt.inverse();
        blocks.push((c, Mat::<f64>::from_fn(inv.nrows(), inv.ncols(), |a, b| -inv[(a, b)])));
    }
    Some(blocks)
}

/// Dense border row `d` of a symmetric `K = [K0 t; t^T 0]`, handled by a
/// rank-two correction of the pinned core `P = K0 + s e_j e_j^T`.
struct Border {
    d: usize,
    j: usize,
    s: f64,
    t: Vec<f64>,
    yt: Vec<f64>,
    ye: Vec<f64>,
}

/// Sparse direct solver for `K` with one step of iterative refinement per
/// solve. A block-diagonal negative definite `K_uu` is eliminated so that
/// the remaining core is factored by Cholesky; otherwise the core is
/// factored by LU. A single dense symmetric row with zero diagonal (a
/// global constraint multiplier) is split off so that it does not fill
/// the factor.
struct SparseSolver<'a> {
    k: &'a CsrMatrix,
    /// Global indices of the core unknowns.
    keep: Vec<usize>,
    elim: Option<Elim>,
    core: Core,
    border: Option<Border>,
}

fn dense_border(k: &CsrMatrix) -> Option<usize> {
    let avg = k.nnz() as f64 / k.nrows.max(1) as f64;
    let limit = (8.0 * avg).max(64.0);
    let dense: Vec<usize> = (0..k.nrows).filter(|&i| (k.indptr[i + 1] - k.indptr[i]) as f64 > limit).collect();
    match dense[..] {
        [d] if k.symmetric && k.get(d, d) == 0.0 => Some(d),
        _ => None,
    }
}

impl<'a> SparseSolver<'a> {
    /// `u` lists candidate unknowns for exact elimination.
    fn new(k: &'a CsrMatrix, u: &[usize]) -> Result<Self> {
        let d = dense_border(k);
        if let Some(s) = Self::with_elimination(k, u, d) {
            return Ok(s);
        }
        Self::build(k, d, None)
    }

    fn with_elimination(k: &'a CsrMatrix, u: &[usize], d: Option<usize>) -> Option<Self> {
        if u.is_empty() || !k.symmetric || d.is_some_and(|d| u.contains(&d) || u.iter().any(|&i| k.get(d, i) != 0.0)) {
            return None;
        }
        let blocks = negative_blocks(k, u)?;
        Self::build(k, d, Some((u.to_vec(), blocks))).ok()
    }

    fn build(k: &'a CsrMatrix, d: Option<usize>, elim: Option<(Vec<usize>, Vec<(Vec<usize>, Mat<f64>)>)>) -> Result<Self> {
        let n = k.nrows;
        let mut local = vec![usize::MAX; n];
        let mut is_u = vec![false; n];
        if let Some((u, _)) = &elim {
            for &i in u {
                is_u[i] = true;
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&i| !is_u[i] && Some(i) != d).collect();
        for (p, &i) in keep.iter().enumerate() {
            local[i] = p;
        }
        let nc = keep.len();
        let mut core = crate::sparse::TripletBuilder::new(nc, nc);
        for (p, &i) in keep.iter().enumerate() {
            for (j, v) in k.row(i) {
                if local[j] != usize::MAX {
                    core.push(p, local[j], v);
                }
            }
        }
        let elim = match elim {
            None => None,
            Some((u, blocks)) => {
                let mut b = crate::sparse::TripletBuilder::new(u.len(), nc);
                for (p, &i) in u.iter().enumerate() {
                    for (j, v) in k.row(i) {
                        if local[j] != usize::MAX {
                            b.push(p, local[j], v);
                        }
                    }
                }
                let b = b.build(false);
                // -B^T D^{-1} B
                for (pos, inv) in &blocks {
                    let mut cols: Vec<usize> = pos.iter().flat_map(|&p| b.row(p).map(|e| e.0)).collect();
                    cols.sort_unstable();
                    cols.dedup();
                    let bl = Mat::<f64>::from_fn(pos.len(), cols.len(), |a, c| b.get(pos[a], cols[c]));
                    let prod = bl.transpose() * inv * &bl;
                    for (c1, &g1) in cols.iter().enumerate() {
                        for (c2, &g2) in cols.iter().enumerate() {
                            core.push(g1, g2, -prod[(c1, c2)]);
                        }
                    }
                }
                let bt = b.transpose();
                Some(Elim { u, b, bt, blocks })
            }
        };
        let spd = elim.is_some();
        let core = core.build(true);
        let mut trip: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(core.nnz() + 1);
        for i in 0..nc {
            for (j, v) in core.row(i) {
                trip.push(Triplet::new(i, j, v));
            }
        }
        let Some(d) = d else {
            let f = Core::factor(nc, &trip, spd)?;
            return Ok(SparseSolver { k, keep, elim, core: f, border: None });
        };
        let mut t = vec![0.0; nc];
        for (j, v) in k.row(d) {
            if local[j] != usize::MAX {
                t[local[j]] = v;
            }
        }
        // pin candidates by decreasing |t_j|
        let mut cand: Vec<usize> = (0..nc).filter(|&j| t[j] != 0.0).collect();
        cand.sort_by(|a, b| t[*b].abs().total_cmp(&t[*a].abs()).then(a.cmp(b)));
        let mut last = Error::SingularSystem("constraint row is empty".into());
        for &j in cand.iter().take(4) {
            let s = core.row(j).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            trip.push(Triplet::new(j, j, s));
            let f = Core::factor(nc, &trip, spd);
            trip.pop();
            let f = match f {
                Ok(f) => f,
                Err(e) => {
                    last = e;
                    continue;
                }
            };
            let yt = f.solve(&t);
            let mut e = vec![0.0; nc];
            e[j] = 1.0;
            let ye = f.solve(&e);
            if yt.iter().chain(&ye).all(|v| v.is_finite()) {
                return Ok(SparseSolver { k, keep, elim, core: f, border: Some(Border { d, j, s, t, yt, ye }) });
            }
            last = Error::SingularSystem("non-finite solution of the pinned system".into());
        }
        Err(last)
    }

    /// Solves `[P0 t; t^T 0] [x; m] = [b; beta]` where `P0 = P - s e_j e_j^T`.
    fn bordered(&self, bx: &[f64], beta: f64) -> Result<(Vec<f64>, f64)> {
        let yb = self.core.solve(bx);
        let Some(br) = &self.border else {
            return Ok((yb, 0.0));
        };
        let (j, s) = (br.j, br.s);
        // x_j (1 - s ye_j) + m yt_j = yb_j
        // s x_j t.ye - m t.yt = beta - t.yb
        let (a11, a12, r1) = (1.0 - s * br.ye[j], br.yt[j], yb[j]);
        let (a21, a22, r2) = (s * dot(&br.t, &br.ye), -dot(&br.t, &br.yt), beta - dot(&br.t, &yb));
        let det = a11 * a22 - a12 * a21;
        let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
        if !(det.abs() > 1e-14 * scale) {
            return Err(Error::SingularSystem(format!("bordered system is singular (det {det:e})")));
        }
        let xj = (r1 * a22 - a12 * r2) / det;
        let m = (a11 * r2 - a21 * r1) / det;
        let x = (0..yb.len()).map(|i| yb[i] - m * br.yt[i] + s * xj * br.ye[i]).collect();
        Ok((x, m))
    }

    fn solve_raw(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut bc: Vec<f64> = self.keep.iter().map(|&i| b[i]).collect();
        let mut du = Vec::new();
        if let Some(el) = &self.elim {
            let bu: Vec<f64> = el.u.iter().map(|&i| b[i]).collect();
            du = el.dinv(&bu);
            for (c, v) in bc.iter_mut().zip(el.bt.matvec(&du)) {
                *c -= v;
            }
        }
        let beta = self.border.as_ref().map_or(0.0, |br| b[br.d]);
        let (xc, m) = self.bordered(&bc, beta)?;
        let mut x = vec![0.0; b.len()];
        for (&i, v) in self.keep.iter().zip(&xc) {
            x[i] = *v;
        }
        if let Some(br) = &self.border {
            x[br.d] = m;
        }
        if let Some(el) = &self.elim {
            let bx = el.b.matvec(&xc);
            let corr = el.dinv(&bx);
            for (p, &i) in el.u.iter().enumerate() {
                x[i] = du[p] - corr[p];
            }
        }
        Ok(x)
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve_raw(b)?;
        let kx = self.k.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&kx).map(|(b, k)| b - k).collect();
        let dx = self.solve_raw(&r)?;
        for (x, d) in x.iter_mut().zip(&dx) {
            *x += d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite solution (K is singular)".into()));
        }
        Ok(x)
    }
}

/// Dense LU of `K`.
struct DenseSolver {
    lu: faer::linalg::solvers::PartialPivLu<f64>,
    n: usize,
}

impl DenseSolver {
    fn new(k: &CsrMatrix) -> Result<Self> {
        let n = k.nrows;
        let mut a = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for (j, v) in k.row(i) {
                a[(i, j)] = v;
            }
        }
        let lu = a.partial_piv_lu();
        // reject exactly or numerically singular matrices
        let u = lu.U();
        let dmax = (0..n).fold(0.0f64, |m, i| m.max(u[(i, i)].abs()));
        let dmin = (0..n).fold(f64::INFINITY, |m, i| m.min(u[(i, i)].abs()));
        if n > 0 && !(dmin > 1e-14 * dmax) {
            return Err(Error::SingularSystem(format!("pivot {dmin:e} relative to {dmax:e}")));
        }
        Ok(DenseSolver { lu, n })
    }

    fn solve_many(&self, b: Mat<f64>) -> Mat<f64> {
        debug_assert_eq!(b.nrows(), self.n);
        self.lu.solve(b)
    }
}

enum Factor<'a> {
    Sparse(SparseSolver<'a>),
    Dense(DenseSolver),
}

impl Factor<'_> {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factor::Sparse(s) => s.solve(b),
            Factor::Dense(d) => {
                let m = d.solve_many(Mat::from_fn(b.len(), 1, |i, _| b[i]));
                Ok((0..b.len()).map(|i| m[(i, 0)]).collect())
            }
        }
    }
}

/// Solves the pencil `(K, C)` for the `nev` smallest finite positive
/// eigenvalues.
pub fn solve_pencil(k: &CsrMatrix, c: &CsrMatrix, nev: usize, opts: &SolverOptions) -> Result<Spectrum> {
    if nev == 0 {
        return Err(Error::InvalidInput("nev must be at least 1".into()));
    }
    if k.nrows != k.ncols || c.nrows != k.nrows || c.ncols != k.ncols {
        return Err(Error::InvalidInput("K and C must be square and of equal size".into()));
    }
    faer::set_global_parallelism(Par::Seq);
    let mb = mass_block(c);
    let dense = match opts.kind {
        SolverKind::Dense => true,
        SolverKind::ShiftInvert => false,
        SolverKind::Auto => k.nrows <= DENSE_LIMIT,
    };
    let shift = if dense { 0.0 } else { opts.shift };
    let shifted;
    let (factor, theta, vectors, mut warnings) = if dense {
        let f = DenseSolver::new(k)?;
        let (theta, vecs) = dense_theta(&f, &mb)?;
        (Factor::Dense(f), theta, vecs, vec![])
    } else {
        shifted = shifted_matrix(k, c, shift);
        let f = SparseSolver::new(&shifted, &mb.idx)?;
        let (theta, vecs, w) = lanczos(&f, &mb, nev, opts)?;
        (Factor::Sparse(f), theta, vecs, w)
    };
    let filtered = filter_spectrum(&theta, opts.tol_inf);
    if let Some(a) = &filtered.advisory {
        warnings.push(a.clone());
    }
    let mut spec = Spectrum { nev_requested: nev, ..Default::default() };
    let kept = filtered.eigenvalues.iter().zip(&filtered.source).filter(|(l, _)| **l + shift > 0.0);
    for (mu, src) in kept.take(nev) {
        let lambda = mu + shift;
        let (z, res) = reconstruct(&factor, k, c, &mb, &vectors[*src], lambda, *mu)?;
        spec.eigenvalues.push(lambda);
        spec.eigenvectors.push(z);
        spec.residuals.push(res);
    }
    spec.nev_converged = spec.eigenvalues.len();
    if spec.nev_converged < nev && filtered.advisory.is_none() {
        warnings.push(format!("only {} of {nev} eigenvalues converged", spec.nev_converged));
    }
    spec.warnings = warnings;
    Ok(spec)
}

/// `K - shift C`.
fn shifted_matrix(k: &CsrMatrix, c: &CsrMatrix, shift: f64) -> CsrMatrix {
    if shift == 0.0 {
        return k.clone();
    }
    let mut t = crate::sparse::TripletBuilder::new(k.nrows, k.ncols);
    for i in 0..k.nrows {
        for (j, v) in k.row(i) {
            t.push(i, j, v);
        }
        for (j, v) in c.row(i) {
            t.push(i, j, -shift * v);
        }
    }
    t.build(k.symmetric && c.symmetric)
}

/// Full eigenvector from its velocity part, and the pencil residual.
/// `mu = lambda - shift` is the eigenvalue of the factored matrix.
fn reconstruct(
    factor: &Factor<'_>,
    k: &CsrMatrix,
    c: &CsrMatrix,
    mb: &MassBlock,
    x: &[f64],
    lambda: f64,
    mu: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = k.nrows;
    let mx = mb.m.matvec(x);
    let mut rhs = vec![0.0; n];
    for (p, &i) in mb.idx.iter().enumerate() {
        rhs[i] = -mu * mx[p];
    }
    let mut z = factor.solve(&rhs)?;
    let zu: Vec<f64> = mb.idx.iter().map(|&i| z[i]).collect();
    let nrm = dot(&zu, &mb.m.matvec(&zu)).sqrt();
    let s = if dot(&zu, &mx) < 0.0 { -1.0 / nrm } else { 1.0 / nrm };
    for v in z.iter_mut() {
        *v *= s;
    }
    let kz = k.matvec(&z);
    let cz = c.matvec(&z);
    let r: Vec<f64> = kz.iter().zip(&cz).map(|(a, b)| a - lambda * b).collect();
    Ok((z, norm(&r) / norm(&kz)))
}

/// Cholesky factor of the (small) dense `M`.
fn dense_mass_llt(m: &CsrMatrix) -> Result<Mat<f64>> {
    let n = m.nrows;
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in m.row(i) {
            a[(i, j)] = v;
        }
    }
    let llt = a
        .llt(Side::Lower)
        .map_err(|_| Error::InvalidInput("-C restricted to its support is not positive definite".into()))?;
    Ok(llt.L().to_owned())
}

/// All `theta` of `S` and their `M`-orthonormal vectors, from `-(K^{-1})_uu`.
fn dense_theta(f: &DenseSolver, mb: &MassBlock) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let nu = mb.idx.len();
    if nu == 0 {
        return Ok((vec![], vec![]));
    }
    let mut e = Mat::<f64>::zeros(f.n, nu);
    for (p, &i) in mb.idx.iter().enumerate() {
        e[(i, p)] = 1.0;
    }
    let z = f.solve_many(e);
    let mut x = Mat::<f64>::from_fn(nu, nu, |a, b| -z[(mb.idx[a], b)]);
    // symmetrize roundoff
    for a in 0..nu {
        for b in 0..a {
            let s = 0.5 * (x[(a, b)] + x[(b, a)]);
            x[(a, b)] = s;
            x[(b, a)] = s;
        }
    }
    let l = dense_mass_llt(&mb.m)?;
    let h = l.transpose() * &x * &l;
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("dense eigensolver failed: {e:?}")))?;
    let theta: Vec<f64> = (0..nu).map(|i| eig.S()[i]).collect();
    // v = L^{-T} y
    let y = eig.U().to_owned();
    let mut v = y;
    l.transpose().solve_upper_triangular_in_place(v.as_mut());
    let vecs = (0..nu).map(|j| (0..nu).map(|i| v[(i, j)]).collect()).collect();
    Ok((theta, vecs))
}

/// Deterministic filler vector used after an exact invariant subspace.
fn filler(n: usize, seed: usize) -> Vec<f64> {
    (0..n).map(|i| ((i as f64 + 1.0) * 0.7548776662 + seed as f64 * 0.5698402910).fract() - 0.5).collect()
}

/// Thick-restart Lanczos for the largest `theta` of `S`.
fn lanczos(
    f: &SparseSolver<'_>,
    mb: &MassBlock,
    nev: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<String>)> {
    let nu = mb.idx.len();
    let n = f.k.nrows;
    if nu == 0 {
        return Ok((vec![], vec![], vec![]));
    }
    let m = opts.subspace.unwrap_or((4 * nev).max(40)).min(nu).max(1);
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let mx = mb.m.matvec(x);
        let mut rhs = vec![0.0; n];
        for (p, &i) in mb.idx.iter().enumerate() {
            rhs[i] = mx[p];
        }
        let z = f.solve(&rhs)?;
        Ok(mb.idx.iter().map(|&i| -z[i]).collect())
    };
    // M-orthogonalize r against the basis, twice; returns the M-norm left.
    let orth = |r: &mut Vec<f64>, v: &[Vec<f64>], mv: &[Vec<f64>]| -> f64 {
        for _ in 0..2 {
            let coef: Vec<f64> = mv.iter().map(|q| dot(q, r)).collect();
            for (c, q) in coef.iter().zip(v) {
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        dot(r, &mb.m.matvec(r)).max(0.0).sqrt()
    };

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut mv: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let push = |x: Vec<f64>, v: &mut Vec<Vec<f64>>, mv: &mut Vec<Vec<f64>>| {
        let mx = mb.m.matvec(&x);
        v.push(x);
        mv.push(mx);
    };
    // a start vector without the symmetries of the mesh
    let start = filler(nu, 0);
    let s0 = 1.0 / dot(&start, &mb.m.matvec(&start)).sqrt();
    push(start.iter().map(|x| x * s0).collect(), &mut v, &mut mv);

    let mut warnings = Vec::new();
    let mut fill_seed = 0;
    let mut restart = 0;
    loop {
        // expand to m vectors
        while w.len() < v.len() {
            let sx = apply(&v[w.len()])?;
            w.push(sx);
            if v.len() < m {
                let mut r = w[w.len() - 1].clone();
                let scale = dot(&r, &mb.m.matvec(&r)).sqrt();
                let mut nr = orth(&mut r, &v, &mv);
                while nr <= 1e-10 * scale.max(f64::MIN_POSITIVE) && fill_seed < 8 {
                    fill_seed += 1;
                    r = filler(nu, fill_seed);
                    let s = dot(&r, &mb.m.matvec(&r)).sqrt();
                    nr = orth(&mut r, &v, &mv);
                    if nr > 1e-8 * s {
                        break;
                    }
                }
                if nr > 0.0 && nr.is_finite() {
                    push(r.iter().map(|x| x / nr).collect(), &mut v, &mut mv);
                }
            }
        }
        let p = v.len();
        let mut t = Mat::<f64>::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                t[(i, j)] = dot(&mv[i], &w[j]);
            }
        }
        for i in 0..p {
            for j in 0..i {
                let s = 0.5 * (t[(i, j)] + t[(j, i)]);
                t[(i, j)] = s;
                t[(j, i)] = s;
            }
        }
        let eig = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::SingularSystem(format!("projected eigensolver failed: {e:?}")))?;
        // descending theta
        let order: Vec<usize> = (0..p).rev().collect();
        let ritz = |col: usize, basis: &[Vec<f64>]| -> Vec<f64> {
            let mut x = vec![0.0; nu];
            for (i, b) in basis.iter().enumerate() {
                let y = eig.U()[(i, col)];
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += y * bi;
                }
            }
            x
        };
        let want: Vec<usize> = order.iter().copied().filter(|&c| eig.S()[c] > 0.0).take(nev).collect();
        let exhausted = p == nu;
        let mut converged = 0;
        for &col in &want {
            let th = eig.S()[col];
            let x = ritz(col, &v);
            let sx = ritz(col, &w);
            let r: Vec<f64> = sx.iter().zip(&x).map(|(a, b)| a - th * b).collect();
            let rn = dot(&r, &mb.m.matvec(&r)).max(0.0).sqrt();
            if rn <= opts.tol * th.abs() || exhausted {
                converged += 1;
            } else {
                break;
            }
        }
        let done = exhausted || (converged == want.len() && want.len() == nev);
        if done || restart >= opts.max_restarts {
            if !done {
                warnings.push(format!(
                    "Krylov iteration stopped after {restart} restarts with {converged} of {nev} eigenvalues converged"
                ));
            }
            let keep = if done { want.len() } else { converged };
            let theta: Vec<f64> = want[..keep].iter().map(|&c| eig.S()[c]).collect();
            let vecs: Vec<Vec<f64>> = want[..keep].iter().map(|&c| ritz(c, &v)).collect();
            return Ok((theta, vecs, warnings));
        }
        restart += 1;
        // residual direction of the last basis vector
        let mut r = w[p - 1].clone();
        let nr = orth(&mut r, &v, &mv);
        let keep = (nev + (m - nev) / 2).min(p - 1).max(1);
        let cols: Vec<usize> = order[..keep].to_vec();
        let nv: Vec<Vec<f64>> = cols.iter().map(|&c| ritz(c, &v)).collect();
        let nw: Vec<Vec<f64>> = cols.iter().map(|&c| ritz(c, &w)).collect();
        v.clear();
        mv.clear();
        w = nw;
        for x in nv {
            push(x, &mut v, &mut mv);
        }
        if nr > 0.0 && nr.is_finite() {
            let mut r: Vec<f64> = r.iter().map(|x| x / nr).collect();
            let nr2 = orth(&mut r, &v, &mv);
            push(r.iter().map(|x| x / nr2).collect(), &mut v, &mut mv);
        } else {
            fill_seed += 1;
            let mut r = filler(nu, fill_seed);
            let nr2 = orth(&mut r, &v, &mv);
            push(r.iter().map(|x| x / nr2).collect(), &mut v, &mut mv);
        }
    }
}
