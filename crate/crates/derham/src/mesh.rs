//! Tetrahedral meshes with combinatorially oriented connectivity arrays.
//!
//! Every tet tuple is stored strictly increasing in global vertex index, and
//! derived edges/faces are sorted lexicographically. All orientation is fixed
//! by this increasing-vertex enumeration: tangents run from the lower to the
//! higher vertex, face normals follow the ordered cross product of the
//! first-vertex-anchored edge vectors. No per-element sign tables exist.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Immutable tetrahedral mesh. Safe to share read-only across workers.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Tets as strictly increasing 4-tuples of vertex indices (`jcv`).
    pub tets: Vec<[usize; 4]>,
    /// Derived edges, strictly increasing pairs, lexicographically sorted (`jev`).
    pub edges: Vec<[usize; 2]>,
    /// Derived faces, strictly increasing triples, lexicographically sorted (`jfv`).
    pub faces: Vec<[usize; 3]>,
    pub boundary_face_flags: Vec<bool>,
    pub boundary_edge_flags: Vec<bool>,
    pub boundary_vertex_flags: Vec<bool>,
    /// Tets incident to each face (one or two).
    pub face_tets: Vec<(usize, Option<usize>)>,
    /// Tets incident to each vertex, ascending.
    pub vertex_tets: Vec<Vec<usize>>,
    edge_index: HashMap<[usize; 2], usize>,
    face_index: HashMap<[usize; 3], usize>,
}

/// Shape-regularity and size measures of a mesh.
#[derive(Clone, Debug)]
pub struct GeometryReport {
    /// Domain diameter (max pairwise vertex distance).
    pub h_omega: f64,
    /// Per-tet diameter.
    pub h_tau: Vec<f64>,
    /// Per-tet inscribed-ball diameter, `2 * 3 vol / surface`.
    pub iota_tau: Vec<f64>,
    /// Shape-regularity parameter `max h_tau / iota_tau`.
    pub rho: f64,
    pub h_max: f64,
    pub h_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarKind {
    Vertex,
    Edge,
    TwiceExtendedElement,
}

/// A star submesh together with the maps back into the parent mesh.
#[derive(Clone, Debug)]
pub struct StarSpec {
    pub kind: StarKind,
    pub seed: usize,
    pub submesh: Mesh,
    /// Submesh tet index -> parent tet index (injective, ascending).
    pub tet_parent: Vec<usize>,
    /// Submesh vertex index -> parent vertex index (ascending).
    pub vertex_parent: Vec<usize>,
}

/// Deterministic test-mesh factory shapes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    ReferenceTet,
    /// Unit cube, Freudenthal/Kuhn split of an `n^3` grid: `6 n^3` tets.
    CubeFreudenthal(usize),
    /// Cube mesh with the z-axis scaled by `aspect`.
    StretchedCube { n: usize, aspect: f64 },
    /// `k` tets around one interior vertex (`k = 4` or even `k >= 6`).
    VertexStarSynthetic(usize),
}

impl Mesh {
    /// Build a mesh from raw vertices and (possibly unsorted) tet tuples.
    pub fn build(vertices: Vec<Point>, tets_in: Vec<[usize; 4]>) -> Result<Mesh> {
        let nv = vertices.len();
        let mut tets = Vec::with_capacity(tets_in.len());
        let mut seen = HashMap::new();
        for (ti, tet) in tets_in.into_iter().enumerate() {
            for &v in &tet {
                if v >= nv {
                    return Err(Error::IndexOutOfRange(format!(
                        "tet {ti} references vertex {v} (nv = {nv})"
                    )));
                }
            }
            let mut t = tet;
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] || t[2] == t[3] {
                return Err(Error::DegenerateElement(ti));
            }
            let vol = signed_volume(&vertices, &t);
            let h = tet_diameter(&vertices, &t);
            if vol.abs() <= 1e-12 * h * h * h {
                return Err(Error::DegenerateElement(ti));
            }
            if seen.insert(t, ti).is_some() {
                return Err(Error::DuplicateElement(ti));
            }
            tets.push(t);
        }

        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        for t in &tets {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push([t[i], t[j]]);
                    for k in (j + 1)..4 {
                        faces.push([t[i], t[j], t[k]]);
                    }
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        faces.sort_unstable();
        faces.dedup();

        let edge_index: HashMap<_, _> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let face_index: HashMap<_, _> = faces.iter().enumerate().map(|(i, f)| (*f, i)).collect();

        let mut face_tets: Vec<(usize, Option<usize>)> = vec![(usize::MAX, None); faces.len()];
        for (ti, t) in tets.iter().enumerate() {
            for f in tet_faces(t) {
                let fi = face_index[&f];
                if face_tets[fi].0 == usize::MAX {
                    face_tets[fi].0 = ti;
                } else if face_tets[fi].1.is_none() {
                    face_tets[fi].1 = Some(ti);
                } else {
                    return Err(Error::NonManifold(f));
                }
            }
        }

        let boundary_face_flags: Vec<bool> = face_tets.iter().map(|ft| ft.1.is_none()).collect();
        let mut boundary_edge_flags = vec![false; edges.len()];
        let mut boundary_vertex_flags = vec![false; nv];
        for (fi, f) in faces.iter().enumerate() {
            if boundary_face_flags[fi] {
                for e in face_edges(f) {
                    boundary_edge_flags[edge_index[&e]] = true;
                }
                for &v in f {
                    boundary_vertex_flags[v] = true;
                }
            }
        }

        let mut vertex_tets = vec![Vec::new(); nv];
        for (ti, t) in tets.iter().enumerate() {
            for &v in t {
                vertex_tets[v].push(ti);
            }
        }

        Ok(Mesh {
            vertices,
            tets,
            edges,
            faces,
            boundary_face_flags,
            boundary_edge_flags,
            boundary_vertex_flags,
            face_tets,
            vertex_tets,
            edge_index,
            face_index,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    /// Connectivity array: global vertex of local slot `n` of edge `m`.
    pub fn jev(&self, m: usize, n: usize) -> usize {
        self.edges[m][n]
    }

    /// Connectivity array: global vertex of local slot `n` of face `m`.
    pub fn jfv(&self, m: usize, n: usize) -> usize {
        self.faces[m][n]
    }

    /// Connectivity array: global vertex of local slot `n` of tet `m`.
    pub fn jcv(&self, m: usize, n: usize) -> usize {
        self.tets[m][n]
    }

    pub fn edge_id(&self, e: [usize; 2]) -> Option<usize> {
        self.edge_index.get(&e).copied()
    }

    pub fn face_id(&self, f: [usize; 3]) -> Option<usize> {
        self.face_index.get(&f).copied()
    }

    /// `V - E + F - T`; equals 1 for ball-like domains.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
            - self.num_tets() as i64
    }

    pub fn signed_volume(&self, tet: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[tet])
    }

    pub fn volume(&self, tet: usize) -> f64 {
        self.signed_volume(tet).abs()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_tets()).map(|t| self.volume(t)).sum()
    }

    pub fn geometry(&self) -> GeometryReport {
        let mut h_omega: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                h_omega = h_omega.max((self.vertices[i] - self.vertices[j]).norm());
            }
        }
        let mut h_tau = Vec::with_capacity(self.num_tets());
        let mut iota_tau = Vec::with_capacity(self.num_tets());
        let mut rho: f64 = 0.0;
        for (ti, t) in self.tets.iter().enumerate() {
            let h = tet_diameter(&self.vertices, t);
            let vol = self.volume(ti);
            let mut surface = 0.0;
            for f in tet_faces(t) {
                surface += triangle_area(&self.vertices, &f);
            }
            // inradius r = 3 V / S, inscribed-ball diameter = 2 r
            let iota = 6.0 * vol / surface;
            rho = rho.max(h / iota);
            h_tau.push(h);
            iota_tau.push(iota);
        }
        let h_max = h_tau.iter().cloned().fold(0.0, f64::max);
        let h_min = h_tau.iter().cloned().fold(f64::INFINITY, f64::min);
        GeometryReport {
            h_omega,
            h_tau,
            iota_tau,
            rho,
            h_max,
            h_min,
        }
    }

    /// Extract a vertex/edge/twice-extended-element star as a submesh.
    pub fn extract_star(&self, kind: StarKind, seed: usize) -> Result<StarSpec> {
        let tet_set: Vec<usize> = match kind {
            StarKind::Vertex => {
                if seed >= self.num_vertices() {
                    return Err(Error::IndexOutOfRange(format!("vertex {seed}")));
                }
                self.vertex_tets[seed].clone()
            }
            StarKind::Edge => {
                if seed >= self.num_edges() {
                    return Err(Error::IndexOutOfRange(format!("edge {seed}")));
                }
                let [a, b] = self.edges[seed];
                self.vertex_tets[a]
                    .iter()
                    .copied()
                    .filter(|t| self.tets[*t].contains(&b))
                    .collect()
            }
            StarKind::TwiceExtendedElement => {
                if seed >= self.num_tets() {
                    return Err(Error::IndexOutOfRange(format!("tet {seed}")));
                }
                let mut current = vec![seed];
                for _ in 0..2 {
                    let mut next: Vec<usize> = current.clone();
                    for &t in &current {
                        for &v in &self.tets[t] {
                            next.extend_from_slice(&self.vertex_tets[v]);
                        }
                    }
                    next.sort_unstable();
                    next.dedup();
                    current = next;
                }
                current
            }
        };

        // Re-index vertices preserving ascending parent order, so the
        // submesh keeps the increasing-vertex orientation of the parent.
        let mut vertex_parent: Vec<usize> = tet_set
            .iter()
            .flat_map(|&t| self.tets[t].iter().copied())
            .collect();
        vertex_parent.sort_unstable();
        vertex_parent.dedup();
        let to_local: HashMap<usize, usize> = vertex_parent
            .iter()
            .enumerate()
            .map(|(l, p)| (*p, l))
            .collect();
        let vertices: Vec<Point> = vertex_parent.iter().map(|&p| self.vertices[p]).collect();
        let tets: Vec<[usize; 4]> = tet_set
            .iter()
            .map(|&t| {
                let g = self.tets[t];
                [to_local[&g[0]], to_local[&g[1]], to_local[&g[2]], to_local[&g[3]]]
            })
            .collect();
        let submesh = Mesh::build(vertices, tets)?;
        Ok(StarSpec {
            kind,
            seed,
            submesh,
            tet_parent: tet_set,
            vertex_parent,
        })
    }

    /// Same connectivity with new vertex coordinates.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Mesh> {
        if vertices.len() != self.num_vertices() {
            return Err(Error::InvalidArgument(
                "vertex count does not match connectivity".into(),
            ));
        }
        Mesh::build(vertices, self.tets.clone())
    }

    /// Coordinates scaled by `1/h_omega` and recentered at the barycenter of
    /// the vertex set; this is the companion reference mesh of the
    /// Piola-transport route.
    pub fn unit_normalized(&self) -> Result<Mesh> {
        let h = self.geometry().h_omega;
        let mut center = Point::zeros();
        for v in &self.vertices {
            center += v;
        }
        center /= self.num_vertices() as f64;
        self.with_vertices(self.vertices.iter().map(|v| (v - center) / h).collect())
    }

    pub fn write_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.num_vertices(), self.num_tets()).unwrap();
        for v in &self.vertices {
            writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
        }
        for t in &self.tets {
            writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
        }
        out
    }

    pub fn read_text(text: &str) -> Result<Mesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line_no, header) = lines
            .next()
            .ok_or(Error::Parse { line: 0, msg: "empty file".into() })?;
        let mut it = header.split_whitespace();
        let nv: usize = parse_tok(&mut it, line_no, "nv")?;
        let nt: usize = parse_tok(&mut it, line_no, "nt")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or(Error::Parse {
                line: usize::MAX,
                msg: "unexpected end of file in vertex block".into(),
            })?;
            let mut it = l.split_whitespace();
            let x: f64 = parse_tok(&mut it, ln, "x")?;
            let y: f64 = parse_tok(&mut it, ln, "y")?;
            let z: f64 = parse_tok(&mut it, ln, "z")?;
            vertices.push(Point::new(x, y, z));
        }
        let mut tets = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.next().ok_or(Error::Parse {
                line: usize::MAX,
                msg: "unexpected end of file in tet block".into(),
            })?;
            let mut it = l.split_whitespace();
            let mut t = [0usize; 4];
            for (slot, tv) in t.iter_mut().enumerate() {
                *tv = parse_tok(&mut it, ln, &format!("v{slot}"))?;
            }
            tets.push(t);
        }
        Mesh::build(vertices, tets)
    }
}

fn parse_tok<T: std::str::FromStr>(
    it: &mut std::str::SplitWhitespace<'_>,
    line: usize,
    what: &str,
) -> Result<T> {
    it.next()
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("missing field {what}"),
        })?
        .parse()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("cannot parse field {what}"),
        })
}

pub(crate) fn tet_faces(t: &[usize; 4]) -> [[usize; 3]; 4] {
    [
        [t[1], t[2], t[3]],
        [t[0], t[2], t[3]],
        [t[0], t[1], t[3]],
        [t[0], t[1], t[2]],
    ]
}

pub(crate) fn face_edges(f: &[usize; 3]) -> [[usize; 2]; 3] {
    [[f[0], f[1]], [f[1], f[2]], [f[0], f[2]]]
}

pub(crate) fn tet_edges(t: &[usize; 4]) -> [[usize; 2]; 6] {
    [
        [t[0], t[1]],
        [t[0], t[2]],
        [t[0], t[3]],
        [t[1], t[2]],
        [t[1], t[3]],
        [t[2], t[3]],
    ]
}

fn signed_volume(vertices: &[Point], t: &[usize; 4]) -> f64 {
    let a = vertices[t[1]] - vertices[t[0]];
    let b = vertices[t[2]] - vertices[t[0]];
    let c = vertices[t[3]] - vertices[t[0]];
    a.cross(&b).dot(&c) / 6.0
}

fn tet_diameter(vertices: &[Point], t: &[usize; 4]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            h = h.max((vertices[t[i]] - vertices[t[j]]).norm());
        }
    }
    h
}

fn triangle_area(vertices: &[Point], f: &[usize; 3]) -> f64 {
    let a = vertices[f[1]] - vertices[f[0]];
    let b = vertices[f[2]] - vertices[f[0]];
    a.cross(&b).norm() / 2.0
}

/// Deterministic mesh generators used throughout the test studies.
pub fn generate(shape: Shape) -> Result<Mesh> {
    match shape {
        Shape::ReferenceTet => Mesh::build(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        ),
        Shape::CubeFreudenthal(n) => cube_freudenthal(n, 1.0),
        Shape::StretchedCube { n, aspect } => {
            if aspect <= 0.0 {
                return Err(Error::InvalidArgument("aspect must be positive".into()));
            }
            cube_freudenthal(n, aspect)
        }
        Shape::VertexStarSynthetic(k) => vertex_star_synthetic(k),
    }
}

fn cube_freudenthal(n: usize, aspect: f64) -> Result<Mesh> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let idx = |i: usize, j: usize, k: usize| (i * (n + 1) + j) * (n + 1) + k;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                vertices.push(Point::new(
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    k as f64 / n as f64 * aspect,
                ));
            }
        }
    }
    // The 6 Kuhn simplices of each cell: walk the three axes in each
    // permutation order, visiting corner, corner+e0, corner+e0+e1, opposite.
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [idx(c[0], c[1], c[2]), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    Mesh::build(vertices, tets)
}

/// One uniform (red, 1:8) refinement: every tet is split at its edge
/// midpoints, the inner octahedron along the m02-m13 diagonal. The result
/// nests the input mesh and is conforming for any conforming input.
pub fn uniform_refine(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    for e in &mesh.edges {
        vertices.push((mesh.vertices[e[0]] + mesh.vertices[e[1]]) / 2.0);
    }
    let mid = |a: usize, b: usize| -> usize {
        let key = if a < b { [a, b] } else { [b, a] };
        nv + mesh.edge_id(key).unwrap()
    };
    let mut tets = Vec::with_capacity(8 * mesh.num_tets());
    for t in &mesh.tets {
        let [v0, v1, v2, v3] = *t;
        let (m01, m02, m03) = (mid(v0, v1), mid(v0, v2), mid(v0, v3));
        let (m12, m13, m23) = (mid(v1, v2), mid(v1, v3), mid(v2, v3));
        tets.push([v0, m01, m02, m03]);
        tets.push([m01, v1, m12, m13]);
        tets.push([m02, m12, v2, m23]);
        tets.push([m03, m13, m23, v3]);
        tets.push([m01, m02, m03, m13]);
        tets.push([m01, m02, m12, m13]);
        tets.push([m02, m03, m13, m23]);
        tets.push([m02, m12, m13, m23]);
    }
    Mesh::build(vertices, tets)
}

fn vertex_star_synthetic(k: usize) -> Result<Mesh> {
    if k == 4 {
        // A tetrahedron split at its centroid: 4 tets around the interior point.
        let outer = [
            Point::new(0.0, 0.0, 0.0),
            Point::new(3.0, 0.0, 0.0),
            Point::new(0.0, 3.0, 0.0),
            Point::new(0.0, 0.0, 3.0),
        ];
        let centroid = (outer[0] + outer[1] + outer[2] + outer[3]) / 4.0;
        let mut vertices = outer.to_vec();
        vertices.push(centroid);
        let c = 4;
        let tets = vec![[1, 2, 3, c], [0, 2, 3, c], [0, 1, 3, c], [0, 1, 2, c]];
        return Mesh::build(vertices, tets);
    }
    if k < 4 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "vertex_star_synthetic supports k = 4 or even k >= 6, got {k}"
        )));
    }
    // Bipyramid over an m-gon, m = k/2, split at the center vertex.
    let m = k / 2;
    let mut vertices = vec![Point::new(0.0, 0.0, 0.0)];
    for i in 0..m {
        let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
        vertices.push(Point::new(th.cos(), th.sin(), 0.0));
    }
    let top = vertices.len();
    vertices.push(Point::new(0.0, 0.0, 1.0));
    let bottom = vertices.len();
    vertices.push(Point::new(0.0, 0.0, -1.0));
    let mut tets = Vec::with_capacity(k);
    for i in 0..m {
        let a = 1 + i;
        let b = 1 + (i + 1) % m;
        tets.push([0, a, b, top]);
        tets.push([0, a, b, bottom]);
    }
    Mesh::build(vertices, tets)
}
