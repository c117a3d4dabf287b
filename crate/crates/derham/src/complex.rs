//! Assembly of mass matrices and differential operators, and exactness
//! diagnostics of the discrete complex.
//!
//! With the combinatorial orientation and unscaled moment functionals, the
//! lowest-order differential matrices are exactly the signed incidence
//! matrices of the mesh; they are assembled as integers for `p = 0` and the
//! general moment-based assembly is checked against them in the tests.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fespace::reference::{apply_dof, Field};
use crate::fespace::{Bc, GlobalEntity, SpaceHandle};
use crate::mesh::{tet_faces, Mesh};
use crate::poly::{curl, div, grad};
use crate::solvers::{nullspace, svd_rank};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpTag {
    Diff(usize),
    Mass(usize),
    Other,
}

/// Sparse operator between DOF vectors, stored as merged triplets.
#[derive(Clone, Debug)]
pub struct Operator {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub tag: OpTag,
}

impl Operator {
    fn from_map(rows: usize, cols: usize, map: BTreeMap<(usize, usize), f64>, tag: OpTag) -> Self {
        let triplets = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Operator {
            rows,
            cols,
            triplets,
            tag,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.triplets {
            m[(r, c)] = v;
        }
        m
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = DVector::zeros(self.rows);
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.triplets
            .iter()
            .map(|&(_, _, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// MatrixMarket coordinate text (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        out.push_str(&format!(
            "{} {} {}\n",
            self.rows,
            self.cols,
            self.triplets.len()
        ));
        for &(r, c, v) in &self.triplets {
            out.push_str(&format!("{} {} {}\n", r + 1, c + 1, v));
        }
        out
    }
}

/// Element mass matrix of a space on one tet, in the local basis.
pub fn local_mass(space: &SpaceHandle, tet: usize) -> DMatrix<f64> {
    let n = space.reference.ndof();
    let gmap = &space.maps[tet];
    let adet = gmap.det.abs();
    match space.level {
        0 => space.reference.scalar_gram.as_ref().unwrap() * adet,
        3 => space.reference.scalar_gram.as_ref().unwrap() / adet,
        1 | 2 => {
            let jtj = gmap.linear.transpose() * gmap.linear;
            let metric = if space.level == 1 {
                jtj.try_inverse().unwrap() * adet
            } else {
                jtj / adet
            };
            let t = space.reference.vector_gram.as_ref().unwrap();
            let mut acc = DMatrix::zeros(n, n);
            for r in 0..3 {
                for s in 0..3 {
                    let w = metric[(r, s)];
                    if w != 0.0 {
                        acc += &t[r][s] * w;
                    }
                }
            }
            acc
        }
        _ => unreachable!(),
    }
}

/// Mass matrix of a space, on its retained dofs. Entries come from the
/// closed-form barycentric monomial integrals, so they are exact up to
/// round-off.
pub fn assemble_mass(space: &SpaceHandle) -> Operator {
    let n = space.reference.ndof();
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for tet in 0..space.mesh.num_tets() {
        let local = local_mass(space, tet);
        for i in 0..n {
            let (fi, _) = space.dof_map[tet][i];
            let Some(ri) = space.free_index(fi) else { continue };
            for j in 0..n {
                let (fj, _) = space.dof_map[tet][j];
                let Some(cj) = space.free_index(fj) else { continue };
                *map.entry((ri, cj)).or_insert(0.0) += local[(i, j)];
            }
        }
    }
    Operator::from_map(
        space.global_dim,
        space.global_dim,
        map,
        OpTag::Mass(space.level),
    )
}

fn check_pair(space_l: &SpaceHandle, space_next: &SpaceHandle) -> Result<()> {
    if !std::ptr::eq(space_l.mesh, space_next.mesh)
        || space_next.level != space_l.level + 1
        || space_next.degree != space_l.degree
        || space_next.bc != space_l.bc
    {
        return Err(Error::InvalidArgument(
            "differential requires spaces of consecutive levels on one mesh with equal degree and bc"
                .into(),
        ));
    }
    Ok(())
}

/// Differential matrix `D^l`: for every discrete `u`, the dofs of `d^l u`
/// equal `D^l` times the dofs of `u`.
pub fn assemble_diff(space_l: &SpaceHandle, space_next: &SpaceHandle) -> Result<Operator> {
    check_pair(space_l, space_next)?;
    if space_l.degree == 0 {
        return Ok(assemble_diff_incidence(space_l, space_next));
    }
    assemble_diff_general(space_l, space_next)
}

/// Signed incidence matrices of the complex for `p = 0`; entries are exact
/// integers.
fn assemble_diff_incidence(space_l: &SpaceHandle, space_next: &SpaceHandle) -> Operator {
    let mesh = space_l.mesh;
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut put = |row: GlobalEntity, col: GlobalEntity, v: f64| {
        if let (Some(r), Some(c)) = (
            space_next.free_index(space_next.full_id(row, 0)),
            space_l.free_index(space_l.full_id(col, 0)),
        ) {
            map.insert((r, c), v);
        }
    };
    match space_l.level {
        0 => {
            // Gradient row per edge: +1 at the high vertex, -1 at the low.
            for (e, edge) in mesh.edges.iter().enumerate() {
                put(GlobalEntity::Edge(e), GlobalEntity::Vertex(edge[1]), 1.0);
                put(GlobalEntity::Edge(e), GlobalEntity::Vertex(edge[0]), -1.0);
            }
        }
        1 => {
            // Curl row per face (a,b,c): +(ab) +(bc) -(ac).
            for (f, face) in mesh.faces.iter().enumerate() {
                let ab = mesh.edge_id([face[0], face[1]]).unwrap();
                let bc = mesh.edge_id([face[1], face[2]]).unwrap();
                let ac = mesh.edge_id([face[0], face[2]]).unwrap();
                put(GlobalEntity::Face(f), GlobalEntity::Edge(ab), 1.0);
                put(GlobalEntity::Face(f), GlobalEntity::Edge(bc), 1.0);
                put(GlobalEntity::Face(f), GlobalEntity::Edge(ac), -1.0);
            }
        }
        2 => {
            // Divergence row per tet: outward sign of each face's global
            // normal, `(-1)^m sign(det J)` for the face omitting vertex m.
            for (t, tet) in mesh.tets.iter().enumerate() {
                let sdet = space_l.maps[t].det.signum();
                for (m, face) in tet_faces(tet).iter().enumerate() {
                    let fid = mesh.face_id(*face).unwrap();
                    let sign = if m % 2 == 0 { sdet } else { -sdet };
                    put(GlobalEntity::Cell(t), GlobalEntity::Face(fid), sign);
                }
            }
        }
        _ => unreachable!(),
    }
    Operator::from_map(
        space_next.global_dim,
        space_l.global_dim,
        map,
        OpTag::Diff(space_l.level),
    )
}

/// Moment-based assembly, valid for every degree: apply the next level's
/// reference functionals to the differentiated reference basis. The local
/// matrix is element-independent except for a `sign(det)` factor on the
/// divergence rows.
pub fn assemble_diff_general(space_l: &SpaceHandle, space_next: &SpaceHandle) -> Result<Operator> {
    check_pair(space_l, space_next)?;
    let nl = space_l.reference.ndof();
    let nn = space_next.reference.ndof();
    let mut local = DMatrix::zeros(nn, nl);
    for (j, b) in space_l.reference.basis.iter().enumerate() {
        let db = match space_l.level {
            0 => Field::Vector(grad(b.scalar())),
            1 => Field::Vector(curl(b.vector())),
            2 => Field::Scalar(div(b.vector())),
            _ => unreachable!(),
        };
        for (i, dof) in space_next.reference.dofs.iter().enumerate() {
            local[(i, j)] = apply_dof(dof, &db);
        }
    }
    let sign_rows = space_l.level == 2;
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for tet in 0..space_l.mesh.num_tets() {
        let s = if sign_rows {
            space_l.maps[tet].det.signum()
        } else {
            1.0
        };
        for i in 0..nn {
            let (fi, _) = space_next.dof_map[tet][i];
            let Some(r) = space_next.free_index(fi) else { continue };
            for j in 0..nl {
                let v = s * local[(i, j)];
                if v == 0.0 {
                    continue;
                }
                let (fj, _) = space_l.dof_map[tet][j];
                let Some(c) = space_l.free_index(fj) else { continue };
                let prev = map.insert((r, c), v);
                if let Some(p) = prev {
                    debug_assert!(
                        (p - v).abs() <= 1e-10 * v.abs().max(1.0),
                        "inconsistent differential entry ({r},{c}): {p} vs {v}"
                    );
                }
            }
        }
    }
    Ok(Operator::from_map(
        space_next.global_dim,
        space_l.global_dim,
        map,
        OpTag::Diff(space_l.level),
    ))
}

/// Per-level dimensions, ranks, kernels, cohomology, and composition
/// residuals of the assembled complex.
#[derive(Clone, Debug)]
pub struct ComplexReport {
    pub degree: usize,
    pub bc: Bc,
    /// Retained dimension per level 0..=3.
    pub dims: [usize; 4],
    /// rank(D^l) for l = 0, 1, 2.
    pub ranks: [usize; 3],
    /// dim ker(D^l) for l = 0, 1, 2.
    pub kernel_dims: [usize; 3],
    /// `dim ker(D^l) - rank(D^{l-1})` for l = 0, 1, 2.
    pub cohomology: [usize; 3],
    /// `max |D^{l+1} D^l|` for l = 0, 1.
    pub composition_residuals: [f64; 2],
    /// Surjectivity defect at the end of the sequence: distance of rank(D^2)
    /// from `dim V^3` (bc none) or from `dim V^3 - 1` (mean-zero target).
    pub end_defect: i64,
}

pub fn complex_report(mesh: &Mesh, degree: usize, bc: Bc) -> Result<ComplexReport> {
    let spaces: Vec<SpaceHandle> = (0..4)
        .map(|l| SpaceHandle::build(mesh, l, degree, bc))
        .collect::<Result<_>>()?;
    let diffs: Vec<DMatrix<f64>> = (0..3)
        .map(|l| Ok(assemble_diff(&spaces[l], &spaces[l + 1])?.to_dense()))
        .collect::<Result<Vec<_>>>()?;

    let dims = [
        spaces[0].global_dim,
        spaces[1].global_dim,
        spaces[2].global_dim,
        spaces[3].global_dim,
    ];
    let mut ranks = [0usize; 3];
    let mut kernel_dims = [0usize; 3];
    for l in 0..3 {
        ranks[l] = svd_rank(&diffs[l]);
        kernel_dims[l] = dims[l] - ranks[l];
    }
    let cohomology = [
        kernel_dims[0],
        kernel_dims[1] - ranks[0],
        kernel_dims[2] - ranks[1],
    ];
    let composition_residuals = [
        (&diffs[1] * &diffs[0]).abs().max(),
        (&diffs[2] * &diffs[1]).abs().max(),
    ];
    let target = match bc {
        Bc::None => dims[3] as i64,
        Bc::Homogeneous => dims[3] as i64 - 1,
    };
    Ok(ComplexReport {
        degree,
        bc,
        dims,
        ranks,
        kernel_dims,
        cohomology,
        composition_residuals,
        end_defect: target - ranks[2] as i64,
    })
}

/// M-orthogonal projector onto the M-orthogonal complement of `ker(diff)`.
pub fn kernel_orthogonal_projector(mass: &DMatrix<f64>, diff: &DMatrix<f64>) -> DMatrix<f64> {
    let n = mass.nrows();
    let z = nullspace(diff);
    if z.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let g = z.transpose() * mass * &z;
    let ginv = g.cholesky().expect("kernel Gram is SPD").inverse();
    DMatrix::identity(n, n) - &z * ginv * z.transpose() * mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Point, Shape};
    use crate::poly::{Poly3, VPoly3};
    use crate::solvers::{sym_gen_eig, SplitMix64};

    // With unscaled integral dofs the p = 0 basis on a tet is the indicator
    // scaled by 1/vol, so the mass matrix is diagonal with entries 1/vol
    // (equivalently: the indicator function itself has squared norm vol).
    #[test]
    fn mass_l3_p0_is_diagonal_with_inverse_volumes() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let s = SpaceHandle::build(&mesh, 3, 0, Bc::None).unwrap();
        let m = assemble_mass(&s).to_dense();
        for t in 0..mesh.num_tets() {
            for j in 0..mesh.num_tets() {
                let expect = if t == j { 1.0 / mesh.volume(t) } else { 0.0 };
                assert!((m[(t, j)] - expect).abs() < 1e-12);
            }
        }
        // The indicator of a tet has dofs = (.., vol, ..): its squared norm
        // must come out as the element volume.
        for t in 0..mesh.num_tets() {
            let mut dofs = DVector::zeros(s.global_dim);
            dofs[t] = mesh.volume(t);
            let nsq = dofs.dot(&(&m * &dofs));
            assert!((nsq - mesh.volume(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn mass_l0_p0_single_tet_row_sums() {
        let mesh = generate(Shape::ReferenceTet).unwrap();
        let s = SpaceHandle::build(&mesh, 0, 0, Bc::None).unwrap();
        let m = assemble_mass(&s).to_dense();
        let vol = mesh.volume(0);
        let mut total = 0.0;
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| m[(i, j)]).sum();
            assert!((row - vol / 4.0).abs() < 1e-14);
            total += row;
        }
        assert!((total - vol).abs() < 1e-14);
    }

    // Cholesky oracle for positive definiteness, plus direct random checks.
    #[test]
    fn mass_is_spd_every_level() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(31);
        for level in 0..=3 {
            for p in 0..=1 {
                let s = SpaceHandle::build(&mesh, level, p, Bc::None).unwrap();
                let m = assemble_mass(&s).to_dense();
                assert!((&m - m.transpose()).abs().max() < 1e-13);
                assert!(m.clone().cholesky().is_some(), "level {level} p {p}");
                for _ in 0..100 {
                    let x = rng.vector(s.global_dim);
                    if x.norm() == 0.0 {
                        continue;
                    }
                    assert!(x.dot(&(&m * &x)) > 0.0);
                }
            }
        }
    }

    #[test]
    fn grad_rows_are_signed_edge_incidence() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let s0 = SpaceHandle::build(&mesh, 0, 0, Bc::None).unwrap();
        let s1 = SpaceHandle::build(&mesh, 1, 0, Bc::None).unwrap();
        let d0 = assemble_diff(&s0, &s1).unwrap();
        let dense = d0.to_dense();
        for (e, edge) in mesh.edges.iter().enumerate() {
            for v in 0..mesh.num_vertices() {
                let expect = if v == edge[1] {
                    1.0
                } else if v == edge[0] {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(dense[(e, v)], expect);
            }
        }
    }

    #[test]
    fn composition_is_exactly_zero_in_integer_arithmetic() {
        for shape in [Shape::CubeFreudenthal(2), Shape::VertexStarSynthetic(8)] {
            let mesh = generate(shape).unwrap();
            for bc in [Bc::None, Bc::Homogeneous] {
                let spaces: Vec<SpaceHandle> = (0..4)
                    .map(|l| SpaceHandle::build(&mesh, l, 0, bc).unwrap())
                    .collect();
                let d0 = assemble_diff(&spaces[0], &spaces[1]).unwrap();
                let d1 = assemble_diff(&spaces[1], &spaces[2]).unwrap();
                let d2 = assemble_diff(&spaces[2], &spaces[3]).unwrap();
                for d in [&d0, &d1, &d2] {
                    for &(_, _, v) in &d.triplets {
                        assert!(v == 1.0 || v == -1.0, "p=0 entries must be ±1");
                    }
                }
                let prod10 = int_mul(&d1, &d0);
                let prod21 = int_mul(&d2, &d1);
                assert!(prod10.iter().all(|&v| v == 0));
                assert!(prod21.iter().all(|&v| v == 0));
            }
        }
    }

    fn int_mul(a: &Operator, b: &Operator) -> Vec<i64> {
        let ad = a.to_dense();
        let bd = b.to_dense();
        let mut out = vec![0i64; a.rows * b.cols];
        for r in 0..a.rows {
            for c in 0..b.cols {
                let mut acc = 0i64;
                for k in 0..a.cols {
                    acc += (ad[(r, k)] as i64) * (bd[(k, c)] as i64);
                }
                out[r * b.cols + c] = acc;
            }
        }
        out
    }

    #[test]
    fn general_assembly_matches_incidence_for_p0() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        for l in 0..3 {
            let sl = SpaceHandle::build(&mesh, l, 0, Bc::None).unwrap();
            let sn = SpaceHandle::build(&mesh, l + 1, 0, Bc::None).unwrap();
            let inc = assemble_diff(&sl, &sn).unwrap().to_dense();
            let gen = assemble_diff_general(&sl, &sn).unwrap().to_dense();
            assert!(
                (&inc - &gen).abs().max() < 1e-12,
                "level {l}: incidence vs general"
            );
        }
    }

    #[test]
    fn composition_small_for_p1() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        for bc in [Bc::None, Bc::Homogeneous] {
            let r = complex_report(&mesh, 1, bc).unwrap();
            assert!(r.composition_residuals[0] < 1e-12);
            assert!(r.composition_residuals[1] < 1e-12);
        }
    }

    #[test]
    fn cube_cohomology_and_ranks() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let r = complex_report(&mesh, 0, Bc::None).unwrap();
        assert_eq!(r.dims, [8, 19, 18, 6]);
        assert_eq!(r.kernel_dims, [1, 7, 12]);
        assert_eq!(r.ranks[0], 7);
        assert_eq!(r.ranks[1], 12);
        assert_eq!(r.ranks[2], 6, "div is onto P_0");
        assert_eq!(r.cohomology, [1, 0, 0]);
        assert_eq!(r.end_defect, 0);

        let rh = complex_report(&mesh, 0, Bc::Homogeneous).unwrap();
        assert_eq!(rh.cohomology, [0, 0, 0]);
        // Homogeneous sequence ends onto the mean-zero subspace.
        assert_eq!(rh.end_defect, 0);
    }

    #[test]
    fn reference_tet_homogeneous_is_trivial() {
        let mesh = generate(Shape::ReferenceTet).unwrap();
        let r = complex_report(&mesh, 0, Bc::Homogeneous).unwrap();
        assert_eq!(r.dims[0], 0);
        assert_eq!(r.dims[1], 0);
        assert_eq!(r.dims[2], 0);
        assert_eq!(r.dims[3], 1);
    }

    #[test]
    fn kernel_of_grad_is_constants() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let s0 = SpaceHandle::build(&mesh, 0, 0, Bc::None).unwrap();
        let s1 = SpaceHandle::build(&mesh, 1, 0, Bc::None).unwrap();
        let d0 = assemble_diff(&s0, &s1).unwrap().to_dense();
        let ones = DVector::from_element(s0.global_dim, 1.0);
        assert!((d0 * ones).abs().max() == 0.0);
        assert_eq!(svd_rank(&assemble_diff(&s0, &s1).unwrap().to_dense()), 7);
    }

    // A solid ring (3x3x1 cells minus the center column): first Betti
    // number 1. The cohomology of the complex must see the hole.
    #[test]
    fn ring_mesh_cohomology_matches_homology_rank() {
        let n = 3usize;
        let idx = |i: usize, j: usize, k: usize| (i * (n + 1) + j) * 2 + k;
        let mut vertices = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=1usize {
                    vertices.push(Point::new(i as f64, j as f64, k as f64));
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut tets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == 1 && j == 1 {
                    continue; // the hole
                }
                for perm in PERMS {
                    let mut c = [i, j, 0usize];
                    let mut tet = [idx(c[0], c[1], c[2]), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
        let mesh = Mesh::build(vertices, tets).unwrap();
        assert_eq!(mesh.euler_characteristic(), 0);
        for p in 0..=1 {
            let r = complex_report(&mesh, p, Bc::None).unwrap();
            assert_eq!(r.cohomology, [1, 1, 0], "p = {p}");
        }
    }

    // Commuting with interpolation: dofs of d^l v equal D^l times dofs of v
    // for global polynomial fields inside the discrete spaces.
    #[test]
    fn differential_commutes_with_interpolation() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(55);
        for p in 0..=1usize {
            for l in 0..3usize {
                let sl = SpaceHandle::build(&mesh, l, p, Bc::None).unwrap();
                let sn = SpaceHandle::build(&mesh, l + 1, p, Bc::None).unwrap();
                let d = assemble_diff(&sl, &sn).unwrap().to_dense();
                let deg = if l == 0 { p + 1 } else { p };
                let (vfield, dfield) = random_poly_field(&mut rng, l, deg);
                let dofs_v = sl.interpolate(&vfield);
                let dofs_dv = sn.interpolate(&dfield);
                let err = (&d * &dofs_v - &dofs_dv).abs().max();
                let scale = dofs_dv.abs().max().max(1.0);
                assert!(err <= 1e-11 * scale, "l {l} p {p}: err {err}");
            }
        }
    }

    fn random_poly_field(rng: &mut SplitMix64, l: usize, deg: usize) -> (Field, Field) {
        let rand_poly = |rng: &mut SplitMix64, q: usize| {
            let mut p = Poly3::zero(q);
            for m in crate::poly::monomials3(q) {
                p.axpy(
                    rng.next_symmetric(),
                    &Poly3::monomial(m[0], m[1], m[2]).promote(q),
                );
            }
            p
        };
        match l {
            0 => {
                let u = rand_poly(rng, deg);
                let g = grad(&u);
                (Field::Scalar(u), Field::Vector(g))
            }
            1 => {
                let v = VPoly3 {
                    comp: [
                        rand_poly(rng, deg),
                        rand_poly(rng, deg),
                        rand_poly(rng, deg),
                    ],
                };
                let c = curl(&v);
                (Field::Vector(v), Field::Vector(c))
            }
            2 => {
                let v = VPoly3 {
                    comp: [
                        rand_poly(rng, deg),
                        rand_poly(rng, deg),
                        rand_poly(rng, deg),
                    ],
                };
                let dv = div(&v);
                (Field::Vector(v), Field::Scalar(dv))
            }
            _ => unreachable!(),
        }
    }

    // Basis independence: permuting the global numbering leaves spectra
    // untouched.
    #[test]
    fn permuted_numbering_preserves_spectra() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(77);
        let sl = SpaceHandle::build(&mesh, 2, 0, Bc::None).unwrap();
        let sn = SpaceHandle::build(&mesh, 3, 0, Bc::None).unwrap();
        let m = assemble_mass(&sl).to_dense();
        let mn = assemble_mass(&sn).to_dense();
        let d = assemble_diff(&sl, &sn).unwrap().to_dense();
        let k = d.transpose() * &mn * &d;
        let eig = sym_gen_eig(&k, &m).unwrap();

        // Random permutations of both levels' full numbering.
        let perm_l = random_perm(&mut rng, sl.full_dim);
        let perm_n = random_perm(&mut rng, sn.full_dim);
        let slp = sl.with_permuted_dofs(&perm_l);
        let snp = sn.with_permuted_dofs(&perm_n);
        let mp = assemble_mass(&slp).to_dense();
        let mnp = assemble_mass(&snp).to_dense();
        let dp = assemble_diff(&slp, &snp).unwrap().to_dense();
        let kp = dp.transpose() * &mnp * &dp;
        let eigp = sym_gen_eig(&kp, &mp).unwrap();
        for (a, b) in eig.eigenvalues.iter().zip(eigp.eigenvalues.iter()) {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }

    fn random_perm(rng: &mut SplitMix64, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            p.swap(i, j);
        }
        p
    }

    #[test]
    fn kernel_projector_properties() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(99);
        let s0 = SpaceHandle::build(&mesh, 0, 0, Bc::None).unwrap();
        let s1 = SpaceHandle::build(&mesh, 1, 0, Bc::None).unwrap();
        let m = assemble_mass(&s0).to_dense();
        let d = assemble_diff(&s0, &s1).unwrap().to_dense();
        let p = kernel_orthogonal_projector(&m, &d);

        // Mean removal: P u = u - (<u,1>/<1,1>) 1.
        let ones = DVector::from_element(s0.global_dim, 1.0);
        let u = rng.vector(s0.global_dim);
        let mean = u.dot(&(&m * &ones)) / ones.dot(&(&m * &ones));
        let expect = &u - &ones * mean;
        assert!(((&p * &u) - expect).abs().max() < 1e-11);

        // Idempotency on 20 random vectors.
        for _ in 0..20 {
            let u = rng.vector(s0.global_dim);
            let once = &p * &u;
            let twice = &p * &once;
            assert!((&once - &twice).abs().max() < 1e-10);
        }

        // M-orthogonality to the kernel from the SVD oracle.
        let z = nullspace(&d);
        for _ in 0..10 {
            let u = rng.vector(s0.global_dim);
            let pu = &p * &u;
            for k in 0..z.ncols() {
                let zk = z.column(k);
                let ip = pu.dot(&(&m * DVector::from(zk.clone_owned())));
                assert!(ip.abs() < 1e-11);
            }
            // P z = 0 for kernel vectors.
            let zk = DVector::from(z.column(0).clone_owned());
            assert!((&p * &zk).abs().max() < 1e-10 * zk.abs().max());
        }
    }

    #[test]
    fn matrix_market_export() {
        let mesh = generate(Shape::ReferenceTet).unwrap();
        let s = SpaceHandle::build(&mesh, 3, 0, Bc::None).unwrap();
        let m = assemble_mass(&s);
        let mm = m.to_matrix_market();
        let mut lines = mm.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real general"
        );
        assert_eq!(lines.next().unwrap(), "1 1 1");
        let entry = lines.next().unwrap();
        assert!(entry.starts_with("1 1 "));
    }
}
