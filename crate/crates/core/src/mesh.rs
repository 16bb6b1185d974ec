//! Conforming triangulations of the square, L-shaped and disk domains.
//!
//! Every mesh carries a global edge numbering: edges are stored with the
//! lower vertex index first and sorted lexicographically. Each cell keeps,
//! for its local edge `i` (the edge opposite local vertex `i`, traversed from
//! local vertex `i+1` to `i+2`), the global edge index and an orientation
//! sign: `+1` when the counterclockwise traversal agrees with the canonical
//! low-to-high direction, `-1` otherwise.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Square,
    Lshape,
    Disk,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Square => "square",
            DomainKind::Lshape => "lshape",
            DomainKind::Disk => "disk",
        }
    }

    /// Area of the meshed domain. For the disk this is the area of the
    /// inscribed polygon at resolution `n`, which is what the mesh covers.
    pub fn area(self, n: usize) -> f64 {
        match self {
            DomainKind::Square => 4.0,
            DomainKind::Lshape => 3.0,
            DomainKind::Disk => {
                let m = 6.0 * n as f64;
                0.5 * m * (2.0 * PI / m).sin()
            }
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "square" => Ok(DomainKind::Square),
            "lshape" => Ok(DomainKind::Lshape),
            "disk" | "circle" => Ok(DomainKind::Disk),
            other => Err(format!("unknown domain '{other}' (expected square, lshape or disk)")),
        }
    }
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Global edge reference from a cell: edge index and orientation sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellEdge {
    pub edge: usize,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[CellEdge; 3]>,
    boundary_edges: BTreeSet<usize>,
    domain: Option<DomainKind>,
    resolution: usize,
}

impl Mesh {
    /// Builds the edge topology for a conforming triangulation. Cells must be
    /// counterclockwise and non-degenerate.
    pub fn from_cells(vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>) -> Result<Self> {
        build_edge_topology(vertices, cells, None, 0)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self) -> &[[CellEdge; 3]] {
        &self.cell_edges
    }

    pub fn boundary_edges(&self) -> &BTreeSet<usize> {
        &self.boundary_edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edges.contains(&e)
    }

    pub fn domain(&self) -> Option<DomainKind> {
        self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        signed_area(&self.cell_coords(c))
    }

    pub fn area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let p = self.cell_coords(c);
        let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0]))
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    pub fn boundary_vertices(&self) -> BTreeSet<usize> {
        self.boundary_edges
            .iter()
            .flat_map(|&e| self.edges[e])
            .collect()
    }

    /// Plain-text dump: header `nv nc ne`, then vertex, cell and edge lines.
    pub fn write_ascii<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.n_vertices(), self.n_cells(), self.n_edges());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
        }
        for c in &self.cells {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
        for (e, ed) in self.edges.iter().enumerate() {
            let b = u8::from(self.is_boundary_edge(e));
            let _ = writeln!(s, "{} {} {}", ed[0], ed[1], b);
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }
}

pub(crate) fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Populates edges, per-cell edge orientation and boundary flags.
pub fn build_edge_topology(
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    domain: Option<DomainKind>,
    resolution: usize,
) -> Result<Mesh> {
    let nv = vertices.len();
    for (ci, c) in cells.iter().enumerate() {
        if let Some(&v) = c.iter().find(|&&v| v >= nv) {
            return Err(Error::BadVertexIndex { cell: ci, vertex: v, nv });
        }
        let area = signed_area(&[vertices[c[0]], vertices[c[1]], vertices[c[2]]]);
        if !(area > 0.0) {
            return Err(Error::DegenerateCell { cell: ci, area });
        }
    }

    // (lo, hi, cell, local edge)
    let mut incid: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * cells.len());
    for (ci, c) in cells.iter().enumerate() {
        for i in 0..3 {
            let a = c[(i + 1) % 3];
            let b = c[(i + 2) % 3];
            incid.push((a.min(b), a.max(b), ci, i));
        }
    }
    incid.sort_unstable();

    let mut edges = Vec::new();
    let mut boundary_edges = BTreeSet::new();
    let mut cell_edges = vec![[CellEdge { edge: 0, sign: 0 }; 3]; cells.len()];
    let mut start = 0;
    while start < incid.len() {
        let (lo, hi, _, _) = incid[start];
        let mut end = start + 1;
        while end < incid.len() && incid[end].0 == lo && incid[end].1 == hi {
            end += 1;
        }
        let count = end - start;
        if count > 2 {
            return Err(Error::NonConforming(lo, hi, count));
        }
        let e = edges.len();
        edges.push([lo, hi]);
        if count == 1 {
            boundary_edges.insert(e);
        }
        for &(_, _, ci, i) in &incid[start..end] {
            let a = cells[ci][(i + 1) % 3];
            let sign = if a == lo { 1 } else { -1 };
            cell_edges[ci][i] = CellEdge { edge: e, sign };
        }
        if count == 2 {
            let (_, _, c0, i0) = incid[start];
            let (_, _, c1, i1) = incid[start + 1];
            if cell_edges[c0][i0].sign == cell_edges[c1][i1].sign {
                // Two cells traverse the edge in the same direction: one is
                // inverted or the mesh folds over itself.
                return Err(Error::NonConforming(lo, hi, count));
            }
        }
        start = end;
    }

    Ok(Mesh {
        vertices,
        cells,
        edges,
        cell_edges,
        boundary_edges,
        domain,
        resolution,
    })
}

fn check_resolution(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidResolution(n))
    } else {
        Ok(())
    }
}

/// Structured mesh of (-1,1)^2: N x N squares, each cut by the diagonal from
/// lower-left to upper-right.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    check_resolution(n)?;
    let h = 2.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([-1.0 + i as f64 * h, -1.0 + j as f64 * h]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            push_split_square(&mut cells, idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
        }
    }
    build_edge_topology(vertices, cells, Some(DomainKind::Square), n)
}

fn push_split_square(cells: &mut Vec<[usize; 3]>, v00: usize, v10: usize, v11: usize, v01: usize) {
    cells.push([v00, v10, v11]);
    cells.push([v00, v11, v01]);
}

/// (-1,1)^2 minus [-1,0]^2: three unit squares, each an N x N structured grid.
pub fn lshape_mesh(n: usize) -> Result<Mesh> {
    check_resolution(n)?;
    let m = 2 * n;
    let h = 1.0 / n as f64;
    let in_domain = |i: usize, j: usize| !(i < n && j < n);
    let mut id = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            // A grid point is used if any adjacent square is in the domain.
            let used = (i.saturating_sub(1)..=i.min(m - 1))
                .any(|a| (j.saturating_sub(1)..=j.min(m - 1)).any(|b| in_domain(a, b)));
            if used {
                id[j * (m + 1) + i] = vertices.len();
                vertices.push([-1.0 + i as f64 * h, -1.0 + j as f64 * h]);
            }
        }
    }
    let g = |i: usize, j: usize| id[j * (m + 1) + i];
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..m {
        for i in 0..m {
            if in_domain(i, j) {
                push_split_square(&mut cells, g(i, j), g(i + 1, j), g(i + 1, j + 1), g(i, j + 1));
            }
        }
    }
    build_edge_topology(vertices, cells, Some(DomainKind::Lshape), n)
}

/// Concentric-ring triangulation of the unit disk. Ring `i` carries `6i`
/// vertices on the circle of radius `i/N`; the band between rings `i-1` and
/// `i` holds `6(2i-1)` triangles, `6N^2` in total.
pub fn disk_mesh(n: usize) -> Result<Mesh> {
    check_resolution(n)?;
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for i in 1..=n {
        ring_start.push(vertices.len());
        let r = i as f64 / n as f64;
        let count = 6 * i;
        for j in 0..count {
            let (s, c) = (2.0 * PI * j as f64 / count as f64).sin_cos();
            let p = if i == n { [c, s] } else { [r * c, r * s] };
            vertices.push(p);
        }
    }
    let ring = |i: usize, j: usize| -> usize {
        if i == 0 {
            0
        } else {
            ring_start[i] + j % (6 * i)
        }
    };
    let mut cells = Vec::with_capacity(6 * n * n);
    for i in 1..=n {
        for s in 0..6 {
            for t in 0..i {
                cells.push([ring(i - 1, s * (i - 1) + t), ring(i, s * i + t), ring(i, s * i + t + 1)]);
                if t + 1 < i {
                    cells.push([
                        ring(i - 1, s * (i - 1) + t),
                        ring(i, s * i + t + 1),
                        ring(i - 1, s * (i - 1) + t + 1),
                    ]);
                }
            }
        }
    }
    build_edge_topology(vertices, cells, Some(DomainKind::Disk), n)
}

pub fn generate(domain: DomainKind, n: usize) -> Result<Mesh> {
    match domain {
        DomainKind::Square => unit_square_mesh(n),
        DomainKind::Lshape => lshape_mesh(n),
        DomainKind::Disk => disk_mesh(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(m: &Mesh) {
        for c in 0..m.n_cells() {
            assert!(m.cell_area(c) > 0.0);
        }
        assert_eq!(m.n_vertices() as i64 - m.n_edges() as i64 + m.n_cells() as i64, 1);
        let mut count = vec![0usize; m.n_edges()];
        let mut sign_sum = vec![0i32; m.n_edges()];
        for ce in m.cell_edges() {
            for e in ce {
                count[e.edge] += 1;
                sign_sum[e.edge] += e.sign as i32;
            }
        }
        for e in 0..m.n_edges() {
            if m.is_boundary_edge(e) {
                assert_eq!(count[e], 1);
            } else {
                assert_eq!(count[e], 2);
                assert_eq!(sign_sum[e], 0, "interior edge signs must differ");
            }
            assert!(m.edges()[e][0] < m.edges()[e][1]);
        }
    }

    #[test]
    fn square_counts() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices(), m.n_edges()), (2, 4, 5));
        let m = unit_square_mesh(4).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices(), m.n_edges()), (32, 25, 56));
        assert_eq!(m.boundary_edges().len(), 16);
        assert_eq!(unit_square_mesh(10).unwrap().n_cells(), 200);
        assert!((m.mesh_size() - 2.0 * 2f64.sqrt() / 4.0).abs() < 1e-14);
        check_invariants(&m);
    }

    #[test]
    fn boundary_edge_count_matches_scan() {
        // Brute force: an edge is on the boundary of the square iff both
        // endpoints share a coordinate equal to +-1.
        for n in 1..6 {
            let m = unit_square_mesh(n).unwrap();
            let on_side = |a: [f64; 2], b: [f64; 2]| {
                (0..2).any(|d| (a[d] - b[d]).abs() < 1e-14 && (a[d].abs() - 1.0).abs() < 1e-14)
            };
            let scanned = m
                .edges()
                .iter()
                .filter(|e| on_side(m.vertices()[e[0]], m.vertices()[e[1]]))
                .count();
            assert_eq!(scanned, 4 * n);
            assert_eq!(m.boundary_edges().len(), scanned);
        }
    }

    #[test]
    fn lshape_counts() {
        let m = lshape_mesh(1).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (6, 8));
        assert_eq!(lshape_mesh(9).unwrap().n_cells(), 486);
        let origin = m.vertices().iter().position(|v| v[0] == 0.0 && v[1] == 0.0).unwrap();
        assert!(m.boundary_vertices().contains(&origin));
        assert!((m.area() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn disk_counts_and_boundary() {
        let m = disk_mesh(1).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (6, 7));
        assert_eq!(disk_mesh(20).unwrap().n_cells(), 2400);
        for n in 1..=10 {
            let m = disk_mesh(n).unwrap();
            assert_eq!(m.n_cells(), 6 * n * n);
            for v in m.boundary_vertices() {
                let p = m.vertices()[v];
                assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-14);
            }
            assert!((m.area() - DomainKind::Disk.area(n)).abs() < 1e-12);
            check_invariants(&m);
        }
    }

    #[test]
    fn disk_is_quasi_uniform() {
        let ratio = |n| {
            let m = disk_mesh(n).unwrap();
            let (lo, hi) = (0..m.n_cells())
                .map(|c| m.cell_diameter(c))
                .fold((f64::MAX, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
            hi / lo
        };
        let r = [4, 8, 16, 32].map(ratio);
        assert!(r.iter().all(|&x| x < 2.5), "{r:?}");
    }

    #[test]
    fn all_generators_satisfy_invariants() {
        for n in 1..=6 {
            check_invariants(&unit_square_mesh(n).unwrap());
            check_invariants(&lshape_mesh(n).unwrap());
            check_invariants(&disk_mesh(n).unwrap());
            assert_eq!(lshape_mesh(n).unwrap().n_cells(), 6 * n * n);
            assert_eq!(unit_square_mesh(n).unwrap().n_cells(), 2 * n * n);
        }
    }

    #[test]
    fn regeneration_is_identical() {
        assert_eq!(disk_mesh(7).unwrap(), disk_mesh(7).unwrap());
        assert_eq!(lshape_mesh(5).unwrap(), lshape_mesh(5).unwrap());
    }

    #[test]
    fn topology_small_cases() {
        let m = Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.n_edges(), 3);
        assert_eq!(m.boundary_edges().len(), 3);

        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let m = Mesh::from_cells(v, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!(m.n_edges(), 5);
        let interior: Vec<_> = (0..5).filter(|&e| !m.is_boundary_edge(e)).collect();
        assert_eq!(interior.len(), 1);
        let e = interior[0];
        let signs: Vec<i8> = m
            .cell_edges()
            .iter()
            .flat_map(|ce| ce.iter().filter(|x| x.edge == e).map(|x| x.sign))
            .collect();
        assert_eq!(signs.len(), 2);
        assert_eq!(signs[0], -signs[1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(unit_square_mesh(0), Err(Error::InvalidResolution(0))));
        assert!(lshape_mesh(0).is_err());
        assert!(disk_mesh(0).is_err());
        // three triangles on one edge
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, 2.0], [0.5, 3.0]];
        let r = Mesh::from_cells(v, vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]]);
        assert!(matches!(r, Err(Error::NonConforming(0, 1, 3))));
        let r = Mesh::from_cells(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(r, Err(Error::DegenerateCell { .. })));
    }

    #[test]
    fn ascii_export_layout() {
        let m = unit_square_mesh(1).unwrap();
        let mut buf = Vec::new();
        m.write_ascii(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "4 2 5");
        assert_eq!(lines.len(), 1 + 4 + 2 + 5);
        assert_eq!(lines[7..].iter().filter(|l| l.ends_with(" 1")).count(), 4);
    }
}
