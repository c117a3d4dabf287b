//! Reference element: generating sets, degree-of-freedom functionals, and
//! dual bases for the four levels of the complex.
//!
//! All functionals are expressed as integrals on the reference tetrahedron
//! that coincide with the physical-entity moments under the level's Piola
//! map. Edge and face moments anchor their parameter frame at the entity's
//! first (lowest-index) vertex and run toward the higher vertices, matching
//! the global increasing-vertex orientation; this is what makes shared-entity
//! functionals element-independent and global conformity automatic.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{monomials2, monomials3, space_dim, Poly1, Poly2, Poly3, VPoly3};

pub const REF_VERTICES: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Local edges in the order of [`crate::mesh::tet_edges`].
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces in the order of [`crate::mesh::tet_faces`] (face m omits
/// local vertex m).
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Scalar (levels 0, 3) or vector (levels 1, 2) polynomial field.
#[derive(Clone, Debug)]
pub enum Field {
    Scalar(Poly3),
    Vector(VPoly3),
}

impl Field {
    pub fn scalar(&self) -> &Poly3 {
        match self {
            Field::Scalar(p) => p,
            Field::Vector(_) => panic!("expected scalar field"),
        }
    }

    pub fn vector(&self) -> &VPoly3 {
        match self {
            Field::Vector(v) => v,
            Field::Scalar(_) => panic!("expected vector field"),
        }
    }

    fn axpy_into(&self, s: f64, acc: &mut Field) {
        match (acc, self) {
            (Field::Scalar(a), Field::Scalar(p)) => a.axpy(s, p),
            (Field::Vector(a), Field::Vector(v)) => {
                for c in 0..3 {
                    a.comp[c].axpy(s, &v.comp[c]);
                }
            }
            _ => panic!("mixed field kinds"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entity {
    Vertex(usize),
    Edge(usize),
    Face(usize),
    Cell,
}

/// A single degree-of-freedom functional on the reference element.
#[derive(Clone, Debug)]
pub struct Dof {
    pub entity: Entity,
    /// Position within the entity's block; identical for the matching
    /// entity seen from a neighboring element.
    pub within: usize,
    pub kind: DofKind,
}

#[derive(Clone, Debug)]
pub enum DofKind {
    /// `u(v)` (level 0).
    VertexValue,
    /// `∫_0^1 u(x(s)) s^k ds` along the edge (level 0).
    EdgeScalar { k: usize },
    /// `∫_e u·t s^k ds`, unscaled tangential moment (level 1).
    EdgeTangential { k: usize },
    /// `∫∫ u(x(s,t)) s^i t^j` over the face chart (level 0).
    FaceScalar { i: usize, j: usize },
    /// `∫∫ u·d_t s^i t^j` with `d_0, d_1` the anchored edge vectors (level 1).
    FaceTangential { t: usize, i: usize, j: usize },
    /// `∫_f u·n s^i t^j`, unscaled normal-flux moment (level 2).
    FaceNormal { i: usize, j: usize },
    /// `∫_T u x^m` (levels 0 and 3).
    CellScalar { m: [usize; 3] },
    /// `∫_T u_comp x^m` against the pulled-back monomial frame (levels 1, 2).
    CellVector { comp: usize, m: [usize; 3] },
}

/// Reference element for one `(level, degree)` pair: dof functionals, dual
/// basis, and cached Gram tensors for mass assembly.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub level: usize,
    pub degree: usize,
    pub dofs: Vec<Dof>,
    pub basis: Vec<Field>,
    /// `∫ b_i b_j` for scalar levels.
    pub scalar_gram: Option<DMatrix<f64>>,
    /// `∫ b_i^(r) b_j^(s)` for vector levels, indexed `[r][s]`.
    pub vector_gram: Option<Box<[[DMatrix<f64>; 3]; 3]>>,
    pub dofs_per_vertex: usize,
    pub dofs_per_edge: usize,
    pub dofs_per_face: usize,
    pub dofs_per_cell: usize,
}

pub const MAX_DEGREE: usize = 4;

impl ReferenceElement {
    pub fn build(level: usize, degree: usize) -> Result<ReferenceElement> {
        if level > 3 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedSpace { level, degree });
        }
        let dofs = enumerate_dofs(level, degree);
        let gens = generators(level, degree);
        let ndof = dofs.len();
        assert_eq!(
            ndof,
            local_dim(level, degree),
            "dof count disagrees with the dimension formula"
        );

        // Select a linearly independent generator subset (the Nédélec
        // generating set {u + x×v} is redundant for p >= 1).
        let selected = select_independent(&gens, ndof);
        assert_eq!(selected.len(), ndof, "generating set has deficient rank");

        let mut w = DMatrix::zeros(ndof, ndof);
        for (j, g) in selected.iter().enumerate() {
            for (i, dof) in dofs.iter().enumerate() {
                w[(i, j)] = apply_dof(dof, g);
            }
        }
        let c = w
            .lu()
            .try_inverse()
            .expect("dof functionals are unisolvent on the generating set");

        let mut basis = Vec::with_capacity(ndof);
        for j in 0..ndof {
            let mut acc = match selected[0] {
                Field::Scalar(_) => Field::Scalar(Poly3::zero(max_gen_degree(level, degree))),
                Field::Vector(_) => Field::Vector(VPoly3::zero(max_gen_degree(level, degree))),
            };
            for (k, g) in selected.iter().enumerate() {
                let coeff = c[(k, j)];
                if coeff != 0.0 {
                    g.axpy_into(coeff, &mut acc);
                }
            }
            basis.push(acc);
        }

        let (scalar_gram, vector_gram) = if level == 0 || level == 3 {
            let mut g = DMatrix::zeros(ndof, ndof);
            for i in 0..ndof {
                for j in i..ndof {
                    let v = basis[i].scalar().mul(basis[j].scalar()).integral_ref_tet();
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            (Some(g), None)
        } else {
            let mut t: Box<[[DMatrix<f64>; 3]; 3]> =
                Box::new(std::array::from_fn(|_| {
                    std::array::from_fn(|_| DMatrix::zeros(ndof, ndof))
                }));
            for r in 0..3 {
                for s in 0..3 {
                    for i in 0..ndof {
                        for j in 0..ndof {
                            t[r][s][(i, j)] = basis[i].vector().comp[r]
                                .mul(&basis[j].vector().comp[s])
                                .integral_ref_tet();
                        }
                    }
                }
            }
            (None, Some(t))
        };

        Ok(ReferenceElement {
            level,
            degree,
            dofs,
            basis,
            scalar_gram,
            vector_gram,
            dofs_per_vertex: per_vertex(level),
            dofs_per_edge: per_edge(level, degree),
            dofs_per_face: per_face(level, degree),
            dofs_per_cell: per_cell(level, degree),
        })
    }

    pub fn ndof(&self) -> usize {
        self.dofs.len()
    }
}

/// `dim P_q` in `n` variables, zero for negative `q`.
fn dim_or_zero(q: isize, nvars: usize) -> usize {
    if q < 0 {
        0
    } else {
        space_dim(q as usize, nvars)
    }
}

fn per_vertex(level: usize) -> usize {
    usize::from(level == 0)
}

fn per_edge(level: usize, p: usize) -> usize {
    match level {
        0 => p,
        1 => p + 1,
        _ => 0,
    }
}

fn per_face(level: usize, p: usize) -> usize {
    match level {
        0 => dim_or_zero(p as isize - 2, 2),
        1 => 2 * dim_or_zero(p as isize - 1, 2),
        2 => space_dim(p, 2),
        _ => 0,
    }
}

fn per_cell(level: usize, p: usize) -> usize {
    match level {
        0 => dim_or_zero(p as isize - 3, 3),
        1 => 3 * dim_or_zero(p as isize - 2, 3),
        2 => 3 * dim_or_zero(p as isize - 1, 3),
        3 => space_dim(p, 3),
        _ => 0,
    }
}

/// Local space dimension from the closed-form count.
pub fn local_dim(level: usize, p: usize) -> usize {
    match level {
        0 => (p + 2) * (p + 3) * (p + 4) / 6,
        1 => (p + 1) * (p + 3) * (p + 4) / 2,
        2 => (p + 1) * (p + 2) * (p + 4) / 2,
        3 => (p + 1) * (p + 2) * (p + 3) / 6,
        _ => unreachable!(),
    }
}

fn max_gen_degree(level: usize, p: usize) -> usize {
    match level {
        0 => p + 1,
        1 | 2 => p + 1,
        3 => p,
        _ => unreachable!(),
    }
}

fn enumerate_dofs(level: usize, p: usize) -> Vec<Dof> {
    let mut dofs = Vec::new();
    if level == 0 {
        for v in 0..4 {
            dofs.push(Dof {
                entity: Entity::Vertex(v),
                within: 0,
                kind: DofKind::VertexValue,
            });
        }
    }
    for e in 0..6 {
        for k in 0..per_edge(level, p) {
            let kind = match level {
                0 => DofKind::EdgeScalar { k },
                1 => DofKind::EdgeTangential { k },
                _ => unreachable!(),
            };
            dofs.push(Dof {
                entity: Entity::Edge(e),
                within: k,
                kind,
            });
        }
    }
    for f in 0..4 {
        let mut within = 0;
        match level {
            0 => {
                for m in moments2(p as isize - 2) {
                    dofs.push(Dof {
                        entity: Entity::Face(f),
                        within,
                        kind: DofKind::FaceScalar { i: m[0], j: m[1] },
                    });
                    within += 1;
                }
            }
            1 => {
                for m in moments2(p as isize - 1) {
                    for t in 0..2 {
                        dofs.push(Dof {
                            entity: Entity::Face(f),
                            within,
                            kind: DofKind::FaceTangential { t, i: m[0], j: m[1] },
                        });
                        within += 1;
                    }
                }
            }
            2 => {
                for m in monomials2(p) {
                    dofs.push(Dof {
                        entity: Entity::Face(f),
                        within,
                        kind: DofKind::FaceNormal { i: m[0], j: m[1] },
                    });
                    within += 1;
                }
            }
            _ => {}
        }
    }
    let mut within = 0;
    match level {
        0 => {
            for m in moments3(p as isize - 3) {
                dofs.push(Dof {
                    entity: Entity::Cell,
                    within,
                    kind: DofKind::CellScalar { m },
                });
                within += 1;
            }
        }
        1 => {
            for m in moments3(p as isize - 2) {
                for comp in 0..3 {
                    dofs.push(Dof {
                        entity: Entity::Cell,
                        within,
                        kind: DofKind::CellVector { comp, m },
                    });
                    within += 1;
                }
            }
        }
        2 => {
            for m in moments3(p as isize - 1) {
                for comp in 0..3 {
                    dofs.push(Dof {
                        entity: Entity::Cell,
                        within,
                        kind: DofKind::CellVector { comp, m },
                    });
                    within += 1;
                }
            }
        }
        3 => {
            for m in monomials3(p) {
                dofs.push(Dof {
                    entity: Entity::Cell,
                    within,
                    kind: DofKind::CellScalar { m },
                });
                within += 1;
            }
        }
        _ => {}
    }
    dofs
}

fn moments2(q: isize) -> Vec<[usize; 2]> {
    if q < 0 {
        Vec::new()
    } else {
        monomials2(q as usize)
    }
}

fn moments3(q: isize) -> Vec<[usize; 3]> {
    if q < 0 {
        Vec::new()
    } else {
        monomials3(q as usize)
    }
}

/// Generating sets of the four local spaces: monomials for the scalar
/// levels, `{e_m x^a} ∪ {x × e_m x^a, |a| = p}` for the Nédélec space
/// and `{e_m x^a} ∪ {x^a x, |a| = p}` for the Raviart–Thomas space.
pub fn generators(level: usize, p: usize) -> Vec<Field> {
    match level {
        0 => monomials3(p + 1)
            .into_iter()
            .map(|m| Field::Scalar(Poly3::monomial(m[0], m[1], m[2])))
            .collect(),
        3 => monomials3(p)
            .into_iter()
            .map(|m| Field::Scalar(Poly3::monomial(m[0], m[1], m[2])))
            .collect(),
        1 => {
            let mut out = Vec::new();
            for m in monomials3(p) {
                for axis in 0..3 {
                    out.push(Field::Vector(VPoly3::axis(
                        Poly3::monomial(m[0], m[1], m[2]),
                        axis,
                    )));
                }
            }
            for m in monomials3(p) {
                if m[0] + m[1] + m[2] == p {
                    for axis in 0..3 {
                        let v = VPoly3::axis(Poly3::monomial(m[0], m[1], m[2]), axis);
                        out.push(Field::Vector(v.cross_with_x()));
                    }
                }
            }
            out
        }
        2 => {
            let mut out = Vec::new();
            for m in monomials3(p) {
                for axis in 0..3 {
                    out.push(Field::Vector(VPoly3::axis(
                        Poly3::monomial(m[0], m[1], m[2]),
                        axis,
                    )));
                }
            }
            for m in monomials3(p) {
                if m[0] + m[1] + m[2] == p {
                    let mono = Poly3::monomial(m[0], m[1], m[2]);
                    out.push(Field::Vector(VPoly3::from_components(
                        mono.mul(&Poly3::coordinate(0)),
                        mono.mul(&Poly3::coordinate(1)),
                        mono.mul(&Poly3::coordinate(2)),
                    )));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

/// Greedy modified Gram-Schmidt selection of an independent subset, in
/// coefficient space. Deterministic; keeps the earliest spanning fields.
fn select_independent(gens: &[Field], want: usize) -> Vec<Field> {
    let qmax = gens
        .iter()
        .map(|g| match g {
            Field::Scalar(p) => p.degree_bound(),
            Field::Vector(v) => v.degree_bound(),
        })
        .max()
        .unwrap();
    let flat: Vec<Vec<f64>> = gens.iter().map(|g| flatten(g, qmax)).collect();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut selected = Vec::new();
    for (gi, g) in flat.iter().enumerate() {
        let mut v = g.clone();
        let norm0 = norm(&v);
        for o in &ortho {
            let d = dot(&v, o);
            for (vk, ok) in v.iter_mut().zip(o) {
                *vk -= d * ok;
            }
        }
        // Second orthogonalization pass.
        for o in &ortho {
            let d = dot(&v, o);
            for (vk, ok) in v.iter_mut().zip(o) {
                *vk -= d * ok;
            }
        }
        let n = norm(&v);
        if n > 1e-8 * norm0.max(1.0) {
            for vk in v.iter_mut() {
                *vk /= n;
            }
            ortho.push(v);
            selected.push(gens[gi].clone());
            if selected.len() == want {
                break;
            }
        }
    }
    selected
}

fn flatten(f: &Field, q: usize) -> Vec<f64> {
    match f {
        Field::Scalar(p) => p.promote(q).coeffs().to_vec(),
        Field::Vector(v) => {
            let mut out = Vec::new();
            for c in 0..3 {
                out.extend_from_slice(v.comp[c].promote(q).coeffs());
            }
            out
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Apply a reference dof functional to a reference field.
pub fn apply_dof(dof: &Dof, field: &Field) -> f64 {
    match (&dof.kind, &dof.entity) {
        (DofKind::VertexValue, Entity::Vertex(v)) => field.scalar().eval(REF_VERTICES[*v]),
        (DofKind::EdgeScalar { k }, Entity::Edge(e)) => {
            edge_restrict_scalar(field.scalar(), *e).moment01(*k)
        }
        (DofKind::EdgeTangential { k }, Entity::Edge(e)) => {
            let [i, j] = LOCAL_EDGES[*e];
            let d = sub3(REF_VERTICES[j], REF_VERTICES[i]);
            edge_restrict_scalar(&field.vector().dot_const(d), *e).moment01(*k)
        }
        (DofKind::FaceScalar { i, j }, Entity::Face(f)) => {
            face_restrict_scalar(field.scalar(), *f).moment_tri(*i, *j)
        }
        (DofKind::FaceTangential { t, i, j }, Entity::Face(f)) => {
            let lf = LOCAL_FACES[*f];
            let d = sub3(REF_VERTICES[lf[1 + t]], REF_VERTICES[lf[0]]);
            face_restrict_scalar(&field.vector().dot_const(d), *f).moment_tri(*i, *j)
        }
        (DofKind::FaceNormal { i, j }, Entity::Face(f)) => {
            let lf = LOCAL_FACES[*f];
            let d1 = sub3(REF_VERTICES[lf[1]], REF_VERTICES[lf[0]]);
            let d2 = sub3(REF_VERTICES[lf[2]], REF_VERTICES[lf[0]]);
            let n = cross3(d1, d2);
            face_restrict_scalar(&field.vector().dot_const(n), *f).moment_tri(*i, *j)
        }
        (DofKind::CellScalar { m }, Entity::Cell) => field
            .scalar()
            .mul(&Poly3::monomial(m[0], m[1], m[2]))
            .integral_ref_tet(),
        (DofKind::CellVector { comp, m }, Entity::Cell) => field.vector().comp[*comp]
            .mul(&Poly3::monomial(m[0], m[1], m[2]))
            .integral_ref_tet(),
        _ => panic!("dof kind does not match entity"),
    }
}

fn edge_restrict_scalar(p: &Poly3, e: usize) -> Poly1 {
    let [i, j] = LOCAL_EDGES[e];
    let a = REF_VERTICES[i];
    let b = REF_VERTICES[j];
    p.subst1(
        &Poly1::affine(a[0], b[0] - a[0]),
        &Poly1::affine(a[1], b[1] - a[1]),
        &Poly1::affine(a[2], b[2] - a[2]),
    )
}

fn face_restrict_scalar(p: &Poly3, f: usize) -> Poly2 {
    let lf = LOCAL_FACES[f];
    let a = REF_VERTICES[lf[0]];
    let b = REF_VERTICES[lf[1]];
    let c = REF_VERTICES[lf[2]];
    p.subst2(
        &Poly2::affine(a[0], b[0] - a[0], c[0] - a[0]),
        &Poly2::affine(a[1], b[1] - a[1], c[1] - a[1]),
        &Poly2::affine(a[2], b[2] - a[2], c[2] - a[2]),
    )
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_dimension_formulas() {
        // dim P_{p+1}, Ne_p, RT_p, P_p for p = 0, 1, 2.
        assert_eq!(local_dim(0, 0), 4);
        assert_eq!(local_dim(0, 1), 10);
        assert_eq!(local_dim(0, 2), 20);
        assert_eq!(local_dim(1, 0), 6);
        assert_eq!(local_dim(1, 1), 20);
        assert_eq!(local_dim(1, 2), 45);
        assert_eq!(local_dim(2, 0), 4);
        assert_eq!(local_dim(2, 1), 15);
        assert_eq!(local_dim(2, 2), 36);
        assert_eq!(local_dim(3, 0), 1);
        assert_eq!(local_dim(3, 1), 4);
        assert_eq!(local_dim(3, 2), 10);
    }

    // Brute-force rank oracle over the monomial generating sets: evaluate
    // each generator at random points and rank the evaluation matrix.
    #[test]
    fn generating_set_rank_matches_dimension() {
        use crate::solvers::{svd_rank, SplitMix64};
        let mut rng = SplitMix64::new(2024);
        for level in 0..=3 {
            for p in 0..=2 {
                let gens = generators(level, p);
                let npts = 3 * gens.len();
                let mut m = DMatrix::zeros(npts * 3, gens.len());
                for pt in 0..npts {
                    let x = [
                        0.25 + 0.2 * rng.next_symmetric(),
                        0.25 + 0.2 * rng.next_symmetric(),
                        0.25 + 0.2 * rng.next_symmetric(),
                    ];
                    for (j, g) in gens.iter().enumerate() {
                        let vals = match g {
                            Field::Scalar(s) => [s.eval(x), 0.0, 0.0],
                            Field::Vector(v) => v.eval(x),
                        };
                        for c in 0..3 {
                            m[(3 * pt + c, j)] = vals[c];
                        }
                    }
                }
                assert_eq!(
                    svd_rank(&m),
                    local_dim(level, p),
                    "level {level} degree {p}"
                );
            }
        }
    }

    #[test]
    fn reference_duality_is_identity() {
        for level in 0..=3 {
            for p in 0..=2 {
                let re = ReferenceElement::build(level, p).unwrap();
                for (i, dof) in re.dofs.iter().enumerate() {
                    for (j, b) in re.basis.iter().enumerate() {
                        let v = apply_dof(dof, b);
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (v - expect).abs() < 1e-12,
                            "level {level} p {p} dof {i} basis {j}: {v}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_space_rejected() {
        assert!(ReferenceElement::build(4, 0).is_err());
        assert!(ReferenceElement::build(1, MAX_DEGREE + 1).is_err());
    }
}
