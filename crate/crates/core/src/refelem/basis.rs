//! Nodal bases on the reference triangle T = conv{(0,0), (1,0), (0,1)}.
//!
//! Local edge `i` is opposite vertex `i` and runs from vertex `i+1` to
//! vertex `i+2` (counterclockwise). Edge functionals are normal-flux moments
//! `int_e (v.n) P_j(s) ds` against Legendre polynomials in the edge
//! parameter, so that they coincide with the same functionals on any
//! affinely mapped cell under the contravariant Piola transform.

use serde::{Deserialize, Serialize};

use super::poly::{curl, div, dot, grad, legendre, Poly, VecPoly};
use super::quadrature::{gauss_legendre_01, quadrature_rule, QuadRule, MAX_DEGREE};
use crate::error::{Error, Result};

pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Pk,
    Rt,
    Bdm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Pk => "P",
            Family::Rt => "RT",
            Family::Bdm => "BDM",
        }
    }
}

/// Which defining functional a basis function is dual to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofKind {
    Edge { edge: usize, moment: usize },
    Interior { index: usize },
}

/// Endpoints of local edge `i` on the reference triangle.
pub fn ref_edge(i: usize) -> ([f64; 2], [f64; 2]) {
    (REF_VERTICES[(i + 1) % 3], REF_VERTICES[(i + 2) % 3])
}

/// Defining functionals of an H(div) element (edge flux moments followed
/// by interior moments).
#[derive(Clone, Debug)]
pub struct HdivFunctionals {
    edge_moments: usize,
    interior: Vec<VecPoly>,
    gl_points: Vec<f64>,
    gl_weights: Vec<f64>,
    rule: QuadRule,
    interior_tab: Vec<[f64; 2]>,
}

impl HdivFunctionals {
    fn new(edge_moments: usize, interior: Vec<VecPoly>, quad_degree: usize) -> Result<Self> {
        let rule = quadrature_rule(quad_degree.min(MAX_DEGREE))?;
        let (gl_points, gl_weights) = gauss_legendre_01(edge_moments + 6);
        let interior_tab = rule
            .points
            .iter()
            .flat_map(|p| interior.iter().map(move |w| [w[0].eval(p[0], p[1]), w[1].eval(p[0], p[1])]))
            .collect();
        Ok(HdivFunctionals { edge_moments, interior, gl_points, gl_weights, rule, interior_tab })
    }

    /// Same functionals with a different interior quadrature degree and
    /// `edge_points` Gauss points per edge, for non-polynomial fields.
    pub fn resampled(&self, quad_degree: usize, edge_points: usize) -> Result<Self> {
        let mut f = HdivFunctionals::new(self.edge_moments, self.interior.clone(), quad_degree)?;
        let (p, w) = gauss_legendre_01(edge_points.max(self.edge_moments + 1));
        f.gl_points = p;
        f.gl_weights = w;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        3 * self.edge_moments + self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_moments(&self) -> usize {
        self.edge_moments
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Applies every functional to a field given on the reference triangle.
    pub fn apply(&self, v: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for e in 0..3 {
            let (a, b) = ref_edge(e);
            let t = [b[0] - a[0], b[1] - a[1]];
            // outward normal scaled by the edge length
            let n = [t[1], -t[0]];
            let vals: Vec<f64> = self
                .gl_points
                .iter()
                .map(|&s| {
                    let f = v(a[0] + s * t[0], a[1] + s * t[1]);
                    f[0] * n[0] + f[1] * n[1]
                })
                .collect();
            for j in 0..self.edge_moments {
                let m: f64 = self
                    .gl_points
                    .iter()
                    .zip(&self.gl_weights)
                    .zip(&vals)
                    .map(|((&s, &w), &fv)| w * fv * legendre(j, 2.0 * s - 1.0))
                    .sum();
                out.push(m);
            }
        }
        let ni = self.interior.len();
        let mut acc = vec![0.0; ni];
        for (q, (p, w)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
            let f = v(p[0], p[1]);
            for (j, a) in acc.iter_mut().enumerate() {
                let t = self.interior_tab[q * ni + j];
                *a += w * (f[0] * t[0] + f[1] * t[1]);
            }
        }
        out.extend(acc);
        out
    }

    /// Exact application to a polynomial field.
    pub fn apply_poly(&self, v: &VecPoly) -> Vec<f64> {
        let mut out = self.apply(|x, y| [v[0].eval(x, y), v[1].eval(x, y)]);
        let off = 3 * self.edge_moments;
        for (j, w) in self.interior.iter().enumerate() {
            out[off + j] = dot(v, w).integrate_ref();
        }
        out
    }

    pub fn dof_meta(&self) -> Vec<DofKind> {
        let mut m = Vec::with_capacity(self.len());
        for edge in 0..3 {
            for moment in 0..self.edge_moments {
                m.push(DofKind::Edge { edge, moment });
            }
        }
        m.extend((0..self.interior.len()).map(|index| DofKind::Interior { index }));
        m
    }
}

#[derive(Clone, Debug)]
enum Polys {
    Scalar(Vec<Poly>),
    Vector { fields: Vec<VecPoly>, divs: Vec<Poly>, functionals: Box<HdivFunctionals> },
}

/// A reference basis together with its tabulation on a quadrature rule.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub family: Family,
    pub degree: usize,
    polys: Polys,
    pub dof_meta: Vec<DofKind>,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    /// `values[q * dim + i]`; scalar families use the first component only.
    values: Vec<[f64; 2]>,
    divs: Vec<f64>,
}

impl ReferenceBasis {
    pub fn dim(&self) -> usize {
        self.dof_meta.len()
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_vector(&self) -> bool {
        matches!(self.polys, Polys::Vector { .. })
    }

    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.dim() + i][0]
    }

    #[inline]
    pub fn vvalue(&self, q: usize, i: usize) -> [f64; 2] {
        self.values[q * self.dim() + i]
    }

    #[inline]
    pub fn div(&self, q: usize, i: usize) -> f64 {
        self.divs[q * self.dim() + i]
    }

    pub fn eval(&self, i: usize, x: f64, y: f64) -> f64 {
        match &self.polys {
            Polys::Scalar(p) => p[i].eval(x, y),
            Polys::Vector { .. } => panic!("eval on a vector basis"),
        }
    }

    pub fn eval_vec(&self, i: usize, x: f64, y: f64) -> [f64; 2] {
        match &self.polys {
            Polys::Vector { fields, .. } => [fields[i][0].eval(x, y), fields[i][1].eval(x, y)],
            Polys::Scalar(_) => panic!("eval_vec on a scalar basis"),
        }
    }

    pub fn eval_div(&self, i: usize, x: f64, y: f64) -> f64 {
        match &self.polys {
            Polys::Vector { divs, .. } => divs[i].eval(x, y),
            Polys::Scalar(_) => panic!("eval_div on a scalar basis"),
        }
    }

    pub fn scalar_polys(&self) -> Option<&[Poly]> {
        match &self.polys {
            Polys::Scalar(p) => Some(p),
            _ => None,
        }
    }

    pub fn vector_polys(&self) -> Option<&[VecPoly]> {
        match &self.polys {
            Polys::Vector { fields, .. } => Some(fields),
            _ => None,
        }
    }

    pub fn functionals(&self) -> Option<&HdivFunctionals> {
        match &self.polys {
            Polys::Vector { functionals, .. } => Some(functionals),
            _ => None,
        }
    }

    /// Number of DOFs attached to each edge (H(div) families).
    pub fn edge_dofs(&self) -> usize {
        self.functionals().map_or(0, |f| f.edge_moments())
    }

    pub fn interior_dofs(&self) -> usize {
        self.functionals().map_or(self.dim(), |f| f.n_interior())
    }

    /// Re-tabulates the same basis on another rule.
    pub fn with_rule(&self, rule: &QuadRule) -> Self {
        let mut b = ReferenceBasis {
            family: self.family,
            degree: self.degree,
            polys: self.polys.clone(),
            dof_meta: self.dof_meta.clone(),
            points: vec![],
            weights: vec![],
            values: vec![],
            divs: vec![],
        };
        b.tabulate(rule);
        b
    }

    fn tabulate(&mut self, rule: &QuadRule) {
        self.points = rule.points.clone();
        self.weights = rule.weights.clone();
        self.values.clear();
        self.divs.clear();
        for p in &rule.points {
            match &self.polys {
                Polys::Scalar(ps) => {
                    for f in ps {
                        self.values.push([f.eval(p[0], p[1]), 0.0]);
                    }
                }
                Polys::Vector { fields, divs, .. } => {
                    for (f, d) in fields.iter().zip(divs) {
                        self.values.push([f[0].eval(p[0], p[1]), f[1].eval(p[0], p[1])]);
                        self.divs.push(d.eval(p[0], p[1]));
                    }
                }
            }
        }
    }
}

pub fn pk_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

pub fn rt_dim(k: usize) -> usize {
    (k + 1) * (k + 3)
}

pub fn bdm_dim(k: usize) -> usize {
    (k + 1) * (k + 2)
}

/// Orthonormal basis of P_k(T) for the mean inner product
/// `(p, q) = (1/|T|) int_T p q`; the first function is the constant 1.
pub fn pk_polys(k: usize) -> Vec<Poly> {
    let ip = |p: &Poly, q: &Poly| 2.0 * (p * q).integrate_ref();
    let mut basis: Vec<Poly> = Vec::new();
    for (a, b) in Poly::exponents(k) {
        let mut p = Poly::monomial(a, b);
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                p = &p - &q.scale(ip(&p, q));
            }
        }
        let nrm = ip(&p, &p).sqrt();
        basis.push(p.scale(1.0 / nrm));
    }
    basis
}

pub fn pk_basis(k: usize, rule: &QuadRule) -> Result<ReferenceBasis> {
    if k > 3 {
        return Err(Error::UnsupportedElement(format!("P_{k} (supported k <= 3)")));
    }
    let polys = pk_polys(k);
    let mut b = ReferenceBasis {
        family: Family::Pk,
        degree: k,
        dof_meta: (0..polys.len()).map(|index| DofKind::Interior { index }).collect(),
        polys: Polys::Scalar(polys),
        points: vec![],
        weights: vec![],
        values: vec![],
        divs: vec![],
    };
    b.tabulate(rule);
    Ok(b)
}

fn vector_monomials(k: usize) -> Vec<VecPoly> {
    let mut v = Vec::new();
    for (a, b) in Poly::exponents(k) {
        v.push([Poly::monomial(a, b), Poly::zero(0)]);
    }
    for (a, b) in Poly::exponents(k) {
        v.push([Poly::zero(0), Poly::monomial(a, b)]);
    }
    v
}

fn rt_functionals(k: usize) -> Result<HdivFunctionals> {
    let interior = if k == 0 { vec![] } else { vector_monomials(k - 1) };
    HdivFunctionals::new(k + 1, interior, 2 * k + 4)
}

fn bdm_functionals(m: usize) -> Result<HdivFunctionals> {
    let mut interior = Vec::new();
    if m >= 2 {
        for (a, b) in Poly::exponents(m - 1).skip(1) {
            interior.push(grad(&Poly::monomial(a, b)));
        }
        let bubble = &(&Poly::x() * &Poly::y()) * &(&Poly::constant(1.0) - &(&Poly::x() + &Poly::y()));
        for (a, b) in Poly::exponents(m - 2) {
            interior.push(curl(&(&bubble * &Poly::monomial(a, b))));
        }
    }
    HdivFunctionals::new(m + 1, interior, 2 * m + 4)
}

fn nodal_basis(
    family: Family,
    degree: usize,
    span: Vec<VecPoly>,
    functionals: HdivFunctionals,
    rule: &QuadRule,
) -> Result<ReferenceBasis> {
    let n = span.len();
    assert_eq!(n, functionals.len(), "span and functional counts differ");
    // d[i][j] = functional_i(span_j)
    let cols: Vec<Vec<f64>> = span.iter().map(|s| functionals.apply_poly(s)).collect();
    let d: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    let mut inv = invert_small(&d).map_err(|pivot| Error::SingularFunctionals {
        family: format!("{}_{}", family.name(), degree),
        pivot,
    })?;
    // one Newton-Schulz step: X <- X + X (I - D X)
    let mut r = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dx: f64 = (0..n).map(|l| d[i][l] * inv[l][j]).sum();
            r[i][j] = if i == j { 1.0 - dx } else { -dx };
        }
    }
    inv = (0..n)
        .map(|i| (0..n).map(|j| inv[i][j] + (0..n).map(|l| inv[i][l] * r[l][j]).sum::<f64>()).collect())
        .collect();
    let mut fields = Vec::with_capacity(n);
    for j in 0..n {
        let mut f: VecPoly = [Poly::zero(0), Poly::zero(0)];
        for (l, s) in span.iter().enumerate() {
            let c = inv[l][j];
            if c != 0.0 {
                f = [&f[0] + &s[0].scale(c), &f[1] + &s[1].scale(c)];
            }
        }
        fields.push(f);
    }
    let divs = fields.iter().map(div).collect();
    let mut b = ReferenceBasis {
        family,
        degree,
        dof_meta: functionals.dof_meta(),
        polys: Polys::Vector { fields, divs, functionals: Box::new(functionals) },
        points: vec![],
        weights: vec![],
        values: vec![],
        divs: vec![],
    };
    b.tabulate(rule);
    Ok(b)
}

/// RT_k = [P_k]^2 + x * homogeneous P_k.
pub fn rt_basis(k: usize, rule: &QuadRule) -> Result<ReferenceBasis> {
    if k > 2 {
        return Err(Error::UnsupportedElement(format!("RT_{k} (supported k <= 2)")));
    }
    let mut span = vector_monomials(k);
    for b in 0..=k {
        let h = Poly::monomial(k - b, b);
        span.push([&Poly::x() * &h, &Poly::y() * &h]);
    }
    nodal_basis(Family::Rt, k, span, rt_functionals(k)?, rule)
}

/// BDM_k = [P_k]^2.
pub fn bdm_basis(k: usize, rule: &QuadRule) -> Result<ReferenceBasis> {
    if !(1..=3).contains(&k) {
        return Err(Error::UnsupportedElement(format!("BDM_{k} (supported 1 <= k <= 3)")));
    }
    nodal_basis(Family::Bdm, k, vector_monomials(k), bdm_functionals(k)?, rule)
}

/// Inverts a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting. On failure returns the offending pivot magnitude.
pub(crate) fn invert_small(a: &[Vec<f64>]) -> std::result::Result<Vec<Vec<f64>>, f64> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        let pv = m[piv][col];
        if pv.abs() <= 1e-13 * scale {
            return Err(pv.abs());
        }
        m.swap(col, piv);
        let inv = 1.0 / pv;
        for v in m[col].iter_mut() {
            *v *= inv;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}
