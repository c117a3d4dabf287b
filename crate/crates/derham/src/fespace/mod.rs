//! Finite element spaces of the four complex levels: global DOF maps,
//! Piola transformations, evaluation, and boundary-condition restriction.

pub mod reference;

use nalgebra::{DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{tet_edges, tet_faces, Mesh, Point};
use crate::poly::{Poly3, VPoly3};
use reference::{apply_dof, Entity, Field, ReferenceElement};

/// Boundary-condition flag of a space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bc {
    None,
    Homogeneous,
}

impl std::fmt::Display for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bc::None => write!(f, "none"),
            Bc::Homogeneous => write!(f, "homogeneous"),
        }
    }
}

/// Element family per complex level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Lagrange,
    Nedelec,
    RaviartThomas,
    Discontinuous,
}

pub fn family_of_level(level: usize) -> Family {
    match level {
        0 => Family::Lagrange,
        1 => Family::Nedelec,
        2 => Family::RaviartThomas,
        3 => Family::Discontinuous,
        _ => panic!("level out of range"),
    }
}

/// Per-tet affine map `x = J x_ref + origin`, taking the reference vertices
/// to the tet's vertices in increasing global index order. The determinant is
/// signed; `|det| = 6 vol`.
#[derive(Clone, Debug)]
pub struct GeometricMap {
    pub linear: Matrix3<f64>,
    pub translation: Point,
    pub det: f64,
    pub inv_linear: Matrix3<f64>,
}

impl GeometricMap {
    pub fn from_tet(mesh: &Mesh, tet: usize) -> GeometricMap {
        let t = mesh.tets[tet];
        let a = mesh.vertices[t[0]];
        let linear = Matrix3::from_columns(&[
            mesh.vertices[t[1]] - a,
            mesh.vertices[t[2]] - a,
            mesh.vertices[t[3]] - a,
        ]);
        let det = linear.determinant();
        let inv_linear = linear.try_inverse().expect("non-degenerate tet");
        GeometricMap {
            linear,
            translation: a,
            det,
            inv_linear,
        }
    }

    pub fn identity() -> GeometricMap {
        GeometricMap {
            linear: Matrix3::identity(),
            translation: Point::zeros(),
            det: 1.0,
            inv_linear: Matrix3::identity(),
        }
    }

    pub fn scaling(s: f64) -> GeometricMap {
        GeometricMap {
            linear: Matrix3::identity() * s,
            translation: Point::zeros(),
            det: s * s * s,
            inv_linear: Matrix3::identity() / s,
        }
    }

    /// The affine map taking `other`'s reference frame onto this tet's, i.e.
    /// the piecewise map from a companion mesh element to this element.
    pub fn relative_to(&self, other: &GeometricMap) -> GeometricMap {
        // F = self ∘ other^{-1}
        let linear = self.linear * other.inv_linear;
        let translation = self.translation - linear * other.translation;
        let det = linear.determinant();
        let inv_linear = linear.try_inverse().expect("invertible map");
        GeometricMap {
            linear,
            translation,
            det,
            inv_linear,
        }
    }

    pub fn apply(&self, x_ref: [f64; 3]) -> Point {
        self.translation + self.linear * Vector3::new(x_ref[0], x_ref[1], x_ref[2])
    }

    pub fn pullback_point(&self, x: &Point) -> [f64; 3] {
        let v = self.inv_linear * (x - self.translation);
        [v.x, v.y, v.z]
    }
}

fn mat3_to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

/// Row array of a constant matrix, for applying it to polynomial fields.
pub fn mat3_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    mat3_to_rows(m)
}

/// `p ∘ F` for a scalar polynomial and an affine map.
pub fn compose_scalar_with(p: &Poly3, f: &GeometricMap) -> Poly3 {
    compose_scalar(p, f)
}

/// Componentwise `v ∘ F` for a vector polynomial and an affine map.
pub fn compose_vector_with(v: &VPoly3, f: &GeometricMap) -> VPoly3 {
    compose_vector(v, f)
}

/// Compose a scalar polynomial with the affine map (`p ∘ F`).
fn compose_scalar(p: &Poly3, f: &GeometricMap) -> Poly3 {
    let j = &f.linear;
    let b = &f.translation;
    p.subst3(
        &Poly3::affine(b.x, j[(0, 0)], j[(0, 1)], j[(0, 2)]),
        &Poly3::affine(b.y, j[(1, 0)], j[(1, 1)], j[(1, 2)]),
        &Poly3::affine(b.z, j[(2, 0)], j[(2, 1)], j[(2, 2)]),
    )
}

fn compose_vector(v: &VPoly3, f: &GeometricMap) -> VPoly3 {
    VPoly3 {
        comp: [
            compose_scalar(&v.comp[0], f),
            compose_scalar(&v.comp[1], f),
            compose_scalar(&v.comp[2], f),
        ],
    }
}

/// The Piola transformation of level `l` along the affine map `F`:
/// `ψ^1(v) = J^T (v∘F)`, `ψ^2(v) = det(J) J^{-1} (v∘F)`,
/// `ψ^3(v) = det(J) (v∘F)`. It carries a field living on the image of `F`
/// to a field on its domain.
pub fn piola(level: usize, f: &GeometricMap, v: &Field) -> Result<Field> {
    if f.det == 0.0 {
        return Err(Error::SingularMap);
    }
    match level {
        1 => {
            let w = compose_vector(v.vector(), f);
            Ok(Field::Vector(w.matmul(&mat3_to_rows(&f.linear.transpose()))))
        }
        2 => {
            let w = compose_vector(v.vector(), f);
            Ok(Field::Vector(
                w.matmul(&mat3_to_rows(&f.inv_linear)).scale(f.det),
            ))
        }
        3 => Ok(Field::Scalar(compose_scalar(v.scalar(), f).scale(f.det))),
        _ => Err(Error::InvalidArgument(format!(
            "piola is defined for levels 1..=3, got {level}"
        ))),
    }
}

/// Inverse of [`piola`]: carries a field on the domain of `F` back to its
/// image.
pub fn piola_inverse(level: usize, f: &GeometricMap, v: &Field) -> Result<Field> {
    if f.det == 0.0 {
        return Err(Error::SingularMap);
    }
    let finv = GeometricMap {
        linear: f.inv_linear,
        translation: -(f.inv_linear * f.translation),
        det: 1.0 / f.det,
        inv_linear: f.linear,
    };
    match level {
        1 => {
            let w = compose_vector(v.vector(), &finv);
            Ok(Field::Vector(
                w.matmul(&mat3_to_rows(&f.inv_linear.transpose())),
            ))
        }
        2 => {
            let w = compose_vector(v.vector(), &finv);
            Ok(Field::Vector(
                w.matmul(&mat3_to_rows(&f.linear)).scale(1.0 / f.det),
            ))
        }
        3 => Ok(Field::Scalar(
            compose_scalar(v.scalar(), &finv).scale(1.0 / f.det),
        )),
        _ => Err(Error::InvalidArgument(format!(
            "piola is defined for levels 1..=3, got {level}"
        ))),
    }
}

/// A finite element space of one complex level on a mesh. Immutable after
/// build; element-local evaluations are pure and safe for concurrent use.
pub struct SpaceHandle<'m> {
    pub mesh: &'m Mesh,
    pub level: usize,
    pub degree: usize,
    pub bc: Bc,
    pub family: Family,
    pub reference: ReferenceElement,
    pub maps: Vec<GeometricMap>,
    /// Dimension before boundary-condition deletion.
    pub full_dim: usize,
    /// Retained dimension (equals `full_dim` for `Bc::None`).
    pub global_dim: usize,
    /// Per tet: local dof -> (full dof id, sign). With increasing-vertex
    /// orientation every sign is +1; the slot is kept for the record.
    pub dof_map: Vec<Vec<(usize, i8)>>,
    /// Marks retained dofs over the full numbering.
    pub free_dof_mask: Vec<bool>,
    /// Retained full ids, ascending.
    pub free_dofs: Vec<usize>,
    full_to_free: Vec<Option<usize>>,
    /// Block offsets of the canonical entity layout.
    off_e: usize,
    off_f: usize,
    off_c: usize,
    /// Renumbering of the canonical layout, if the space was permuted.
    perm: Option<Vec<usize>>,
}

/// Address of a global mesh entity carrying dofs.
#[derive(Clone, Copy, Debug)]
pub enum GlobalEntity {
    Vertex(usize),
    Edge(usize),
    Face(usize),
    Cell(usize),
}

/// Fixed interior check points on a face chart, used for conformity checks.
const FACE_CHECK_POINTS: [[f64; 2]; 6] = [
    [1.0 / 6.0, 1.0 / 6.0],
    [2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0],
    [0.25, 0.25],
    [0.5, 0.25],
    [0.25, 0.5],
];

impl<'m> SpaceHandle<'m> {
    pub fn build(mesh: &'m Mesh, level: usize, degree: usize, bc: Bc) -> Result<SpaceHandle<'m>> {
        let reference = ReferenceElement::build(level, degree)?;
        let maps: Vec<GeometricMap> = (0..mesh.num_tets())
            .map(|t| GeometricMap::from_tet(mesh, t))
            .collect();

        let cv = reference.dofs_per_vertex;
        let ce = reference.dofs_per_edge;
        let cf = reference.dofs_per_face;
        let cc = reference.dofs_per_cell;
        let off_e = mesh.num_vertices() * cv;
        let off_f = off_e + mesh.num_edges() * ce;
        let off_c = off_f + mesh.num_faces() * cf;
        let full_dim = off_c + mesh.num_tets() * cc;

        let mut dof_map = Vec::with_capacity(mesh.num_tets());
        for (ti, t) in mesh.tets.iter().enumerate() {
            let edges = tet_edges(t);
            let faces = tet_faces(t);
            let mut local = Vec::with_capacity(reference.ndof());
            for dof in &reference.dofs {
                let full = match dof.entity {
                    Entity::Vertex(lv) => t[lv] * cv + dof.within,
                    Entity::Edge(le) => {
                        let ge = mesh
                            .edge_id(edges[le])
                            .expect("tet edge present in edge list");
                        off_e + ge * ce + dof.within
                    }
                    Entity::Face(lf) => {
                        let gf = mesh
                            .face_id(faces[lf])
                            .expect("tet face present in face list");
                        off_f + gf * cf + dof.within
                    }
                    Entity::Cell => off_c + ti * cc + dof.within,
                };
                local.push((full, 1i8));
            }
            dof_map.push(local);
        }

        let mut free_dof_mask = vec![true; full_dim];
        if bc == Bc::Homogeneous {
            match level {
                0 => {
                    for (v, &b) in mesh.boundary_vertex_flags.iter().enumerate() {
                        if b {
                            for k in 0..cv {
                                free_dof_mask[v * cv + k] = false;
                            }
                        }
                    }
                    mask_edges(mesh, &mut free_dof_mask, off_e, ce);
                    mask_faces(mesh, &mut free_dof_mask, off_f, cf);
                }
                1 => {
                    mask_edges(mesh, &mut free_dof_mask, off_e, ce);
                    mask_faces(mesh, &mut free_dof_mask, off_f, cf);
                }
                2 => {
                    mask_faces(mesh, &mut free_dof_mask, off_f, cf);
                }
                // Level 3 keeps the full space; the mean-zero constraint is
                // imposed where the complex is assembled, not by deletion.
                3 => {}
                _ => unreachable!(),
            }
        }

        let free_dofs: Vec<usize> = (0..full_dim).filter(|&i| free_dof_mask[i]).collect();
        let mut full_to_free = vec![None; full_dim];
        for (fi, &full) in free_dofs.iter().enumerate() {
            full_to_free[full] = Some(fi);
        }
        Ok(SpaceHandle {
            mesh,
            level,
            degree,
            bc,
            family: family_of_level(level),
            reference,
            maps,
            full_dim,
            global_dim: free_dofs.len(),
            dof_map,
            free_dof_mask,
            free_dofs,
            full_to_free,
            off_e,
            off_f,
            off_c,
            perm: None,
        })
    }

    /// Full dof id of an entity's `within`-th dof, in this space's numbering.
    pub fn full_id(&self, entity: GlobalEntity, within: usize) -> usize {
        let base = match entity {
            GlobalEntity::Vertex(v) => v * self.reference.dofs_per_vertex + within,
            GlobalEntity::Edge(e) => self.off_e + e * self.reference.dofs_per_edge + within,
            GlobalEntity::Face(f) => self.off_f + f * self.reference.dofs_per_face + within,
            GlobalEntity::Cell(c) => self.off_c + c * self.reference.dofs_per_cell + within,
        };
        match &self.perm {
            Some(p) => p[base],
            None => base,
        }
    }

    pub fn free_index(&self, full: usize) -> Option<usize> {
        self.full_to_free[full]
    }

    /// Expand retained coefficients to the full numbering (deleted dofs are
    /// exactly zero for homogeneous-trace members).
    pub fn expand(&self, free: &DVector<f64>) -> DVector<f64> {
        assert_eq!(free.len(), self.global_dim);
        let mut full = DVector::zeros(self.full_dim);
        for (fi, &fd) in self.free_dofs.iter().enumerate() {
            full[fd] = free[fi];
        }
        full
    }

    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        assert_eq!(full.len(), self.full_dim);
        DVector::from_iterator(self.global_dim, self.free_dofs.iter().map(|&fd| full[fd]))
    }

    /// Physical values of every local basis function at a physical point.
    /// Scalar levels report the value in the first component.
    pub fn eval_basis(&self, tet: usize, point: &Point) -> Result<Vec<Vector3<f64>>> {
        let map = &self.maps[tet];
        let x = map.pullback_point(point);
        let l0 = 1.0 - x[0] - x[1] - x[2];
        if x.iter().any(|&c| c < -1e-12) || l0 < -1e-12 {
            return Err(Error::PointOutsideElement);
        }
        let mut out = Vec::with_capacity(self.reference.ndof());
        for b in &self.reference.basis {
            out.push(self.push_value(map, b, x));
        }
        Ok(out)
    }

    fn push_value(&self, map: &GeometricMap, b: &Field, x: [f64; 3]) -> Vector3<f64> {
        match self.level {
            0 => Vector3::new(b.scalar().eval(x), 0.0, 0.0),
            1 => {
                let v = b.vector().eval(x);
                map.inv_linear.transpose() * Vector3::new(v[0], v[1], v[2])
            }
            2 => {
                let v = b.vector().eval(x);
                map.linear * Vector3::new(v[0], v[1], v[2]) / map.det
            }
            3 => Vector3::new(b.scalar().eval(x) / map.det.abs(), 0.0, 0.0),
            _ => unreachable!(),
        }
    }

    /// Element restriction of a discrete field as a componentwise pullback
    /// polynomial (`u ∘ F` per component, scalar for levels 0 and 3).
    pub fn element_field(&self, tet: usize, free: &DVector<f64>) -> Field {
        let full = self.expand(free);
        self.element_field_full(tet, &full)
    }

    pub fn element_field_full(&self, tet: usize, full: &DVector<f64>) -> Field {
        let map = &self.maps[tet];
        match self.level {
            0 | 3 => {
                let mut acc = Poly3::zero(self.reference.basis[0].scalar().degree_bound());
                for (j, &(fd, _)) in self.dof_map[tet].iter().enumerate() {
                    let c = full[fd];
                    if c != 0.0 {
                        acc.axpy(c, self.reference.basis[j].scalar());
                    }
                }
                if self.level == 3 {
                    acc = acc.scale(1.0 / map.det.abs());
                }
                Field::Scalar(acc)
            }
            1 | 2 => {
                let q = self.reference.basis[0].vector().degree_bound();
                let mut acc = VPoly3::zero(q);
                for (j, &(fd, _)) in self.dof_map[tet].iter().enumerate() {
                    let c = full[fd];
                    if c != 0.0 {
                        let b = self.reference.basis[j].vector();
                        for comp in 0..3 {
                            acc.comp[comp].axpy(c, &b.comp[comp]);
                        }
                    }
                }
                let m = if self.level == 1 {
                    mat3_to_rows(&map.inv_linear.transpose())
                } else {
                    mat3_to_rows(&(map.linear / map.det))
                };
                Field::Vector(acc.matmul(&m))
            }
            _ => unreachable!(),
        }
    }

    /// Componentwise-pullback representation (`u ∘ F`) of a single local
    /// basis function on this element.
    pub fn local_basis_pullback(&self, tet: usize, j: usize) -> Field {
        let map = &self.maps[tet];
        let b = &self.reference.basis[j];
        match self.level {
            0 => Field::Scalar(b.scalar().clone()),
            3 => Field::Scalar(b.scalar().scale(1.0 / map.det.abs())),
            1 => Field::Vector(
                b.vector()
                    .matmul(&mat3_to_rows(&map.inv_linear.transpose())),
            ),
            2 => Field::Vector(b.vector().matmul(&mat3_to_rows(&(map.linear / map.det)))),
            _ => unreachable!(),
        }
    }

    /// Apply this element's dof functionals to a componentwise-pullback
    /// polynomial field on the tet.
    pub fn element_dofs_from_pullback(&self, tet: usize, field: &Field) -> Vec<f64> {
        let map = &self.maps[tet];
        let psi = match self.level {
            0 => Field::Scalar(field.scalar().clone()),
            3 => Field::Scalar(field.scalar().scale(map.det.abs())),
            1 => Field::Vector(field.vector().matmul(&mat3_to_rows(&map.linear.transpose()))),
            2 => Field::Vector(
                field
                    .vector()
                    .matmul(&mat3_to_rows(&map.inv_linear))
                    .scale(map.det),
            ),
            _ => unreachable!(),
        };
        self.reference
            .dofs
            .iter()
            .map(|d| apply_dof(d, &psi))
            .collect()
    }

    /// Degrees of freedom of a globally polynomial field given in physical
    /// coordinates. The input must conform to the space (and its boundary
    /// condition) for the result to represent it exactly.
    pub fn interpolate(&self, field: &Field) -> DVector<f64> {
        let mut full = DVector::zeros(self.full_dim);
        for tet in 0..self.mesh.num_tets() {
            let map = &self.maps[tet];
            let local = match (self.level, field) {
                (0 | 3, Field::Scalar(p)) => Field::Scalar(compose_scalar(p, map)),
                (1 | 2, Field::Vector(v)) => Field::Vector(compose_vector(v, map)),
                _ => panic!("field kind does not match level"),
            };
            let vals = self.element_dofs_from_pullback(tet, &local);
            for (j, &(fd, _)) in self.dof_map[tet].iter().enumerate() {
                full[fd] = vals[j];
            }
        }
        self.restrict(&full)
    }

    /// Same space with the full dof numbering permuted; used to assert that
    /// assembled spectra are independent of the global numbering.
    pub fn with_permuted_dofs(&self, perm: &[usize]) -> SpaceHandle<'m> {
        assert_eq!(perm.len(), self.full_dim);
        let dof_map: Vec<Vec<(usize, i8)>> = self
            .dof_map
            .iter()
            .map(|loc| loc.iter().map(|&(fd, s)| (perm[fd], s)).collect())
            .collect();
        let mut free_dof_mask = vec![false; self.full_dim];
        for (old, &keep) in self.free_dof_mask.iter().enumerate() {
            free_dof_mask[perm[old]] = keep;
        }
        let free_dofs: Vec<usize> = (0..self.full_dim).filter(|&i| free_dof_mask[i]).collect();
        let mut full_to_free = vec![None; self.full_dim];
        for (fi, &full) in free_dofs.iter().enumerate() {
            full_to_free[full] = Some(fi);
        }
        let composed = match &self.perm {
            None => perm.to_vec(),
            Some(old) => old.iter().map(|&o| perm[o]).collect(),
        };
        SpaceHandle {
            mesh: self.mesh,
            level: self.level,
            degree: self.degree,
            bc: self.bc,
            family: self.family,
            reference: self.reference.clone(),
            maps: self.maps.clone(),
            full_dim: self.full_dim,
            global_dim: free_dofs.len(),
            dof_map,
            free_dof_mask,
            free_dofs,
            full_to_free,
            off_e: self.off_e,
            off_f: self.off_f,
            off_c: self.off_c,
            perm: Some(composed),
        }
    }

    /// Maximum inter-element jump of the conforming trace component over all
    /// interior faces, sampled at six chart points per face. Level 0 checks
    /// the value, level 1 the tangential part, level 2 the normal component.
    pub fn max_conformity_jump(&self, free: &DVector<f64>) -> f64 {
        if self.level == 3 {
            return 0.0;
        }
        let mesh = self.mesh;
        let mut worst: f64 = 0.0;
        for (fi, f) in mesh.faces.iter().enumerate() {
            let (t1, t2) = mesh.face_tets[fi];
            let Some(t2) = t2 else { continue };
            let a = mesh.vertices[f[0]];
            let d1 = mesh.vertices[f[1]] - a;
            let d2 = mesh.vertices[f[2]] - a;
            let n = d1.cross(&d2).normalize();
            for pt in FACE_CHECK_POINTS {
                let x = a + d1 * pt[0] + d2 * pt[1];
                let v1 = self.eval_field_at(t1, &x, free);
                let v2 = self.eval_field_at(t2, &x, free);
                let jump = v1 - v2;
                let err = match self.level {
                    0 => jump.x.abs(),
                    1 => (jump - n * jump.dot(&n)).norm(),
                    2 => jump.dot(&n).abs(),
                    _ => 0.0,
                };
                worst = worst.max(err);
            }
        }
        worst
    }

    /// Evaluate the discrete field at a physical point inside `tet`.
    pub fn eval_field_at(&self, tet: usize, point: &Point, free: &DVector<f64>) -> Vector3<f64> {
        let full = self.expand(free);
        let basis = self
            .eval_basis(tet, point)
            .expect("point inside the element");
        let mut acc = Vector3::zeros();
        for (j, &(fd, _)) in self.dof_map[tet].iter().enumerate() {
            acc += basis[j] * full[fd];
        }
        acc
    }
}

fn mask_edges(mesh: &Mesh, mask: &mut [bool], off_e: usize, ce: usize) {
    for (e, &b) in mesh.boundary_edge_flags.iter().enumerate() {
        if b {
            for k in 0..ce {
                mask[off_e + e * ce + k] = false;
            }
        }
    }
}

fn mask_faces(mesh: &Mesh, mask: &mut [bool], off_f: usize, cf: usize) {
    for (f, &b) in mesh.boundary_face_flags.iter().enumerate() {
        if b {
            for k in 0..cf {
                mask[off_f + f * cf + k] = false;
            }
        }
    }
}

/// Hat function of a mesh vertex restricted to one tet, as a reference
/// polynomial (barycentric coordinate of the matching local vertex, zero if
/// the vertex is not part of the tet).
pub fn hat_on_tet(mesh: &Mesh, tet: usize, vertex: usize) -> Poly3 {
    let t = mesh.tets[tet];
    match t.iter().position(|&v| v == vertex) {
        None => Poly3::constant(0.0),
        Some(0) => Poly3::affine(1.0, -1.0, -1.0, -1.0),
        Some(1) => Poly3::coordinate(0),
        Some(2) => Poly3::coordinate(1),
        Some(3) => Poly3::coordinate(2),
        Some(_) => unreachable!(),
    }
}

/// Physical gradient of the hat function on a tet (constant vector).
pub fn hat_gradient(mesh: &Mesh, map: &GeometricMap, tet: usize, vertex: usize) -> Vector3<f64> {
    let t = mesh.tets[tet];
    let Some(pos) = t.iter().position(|&v| v == vertex) else {
        return Vector3::zeros();
    };
    let grad_ref = match pos {
        0 => Vector3::new(-1.0, -1.0, -1.0),
        1 => Vector3::new(1.0, 0.0, 0.0),
        2 => Vector3::new(0.0, 1.0, 0.0),
        3 => Vector3::new(0.0, 0.0, 1.0),
        _ => unreachable!(),
    };
    map.inv_linear.transpose() * grad_ref
}

/// Reference representation (`w = div u ∘ F`) of the physical divergence of
/// a componentwise-pullback vector polynomial.
pub fn physical_div(map: &GeometricMap, v: &VPoly3) -> Poly3 {
    let q = v.degree_bound().saturating_sub(1);
    let mut acc = Poly3::zero(q);
    for i in 0..3 {
        for k in 0..3 {
            let c = map.inv_linear[(k, i)];
            if c != 0.0 {
                acc.axpy(c, &v.comp[i].diff(k));
            }
        }
    }
    acc
}

/// Reference representation of the physical gradient of a scalar pullback
/// polynomial: `(grad u) ∘ F = J^{-T} grad_ref (u ∘ F)`.
pub fn physical_grad(map: &GeometricMap, p: &Poly3) -> VPoly3 {
    let g = crate::poly::grad(p);
    g.matmul(&mat3_to_rows(&map.inv_linear.transpose()))
}

/// Reference representation of the physical curl of a componentwise-pullback
/// vector polynomial.
pub fn physical_curl(map: &GeometricMap, v: &VPoly3) -> VPoly3 {
    // (curl u)_i ∘ F = eps_ijk d/dx_j u_k = eps_ijk Jinv[(m, j)] d_m (u_k ∘ F)
    let q = v.degree_bound().saturating_sub(1);
    let mut out = VPoly3::zero(q);
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k);
                if e == 0.0 {
                    continue;
                }
                for m in 0..3 {
                    let c = e * map.inv_linear[(m, j)];
                    if c != 0.0 {
                        out.comp[i].axpy(c, &v.comp[k].diff(m));
                    }
                }
            }
        }
    }
    out
}
