//! The explicit H(div) commuting projection by flux equilibration:
//! elementwise constrained projection, vertex-star local problems with hat
//! weights, and zero-extension summation over the stars.

use nalgebra::{DMatrix, DVector};

use crate::complex::{assemble_diff, assemble_mass, local_mass};
use crate::error::{Error, Result};
use crate::fespace::reference::Field;
use crate::fespace::{hat_gradient, hat_on_tet, physical_div, Bc, GeometricMap, SpaceHandle};
use crate::mesh::{Mesh, StarKind};
use crate::poincare::{m_norm, NormKind, ProjectionReport};
use crate::poly::{monomials3, Poly3, VPoly3};
use crate::solvers::{nullspace, SaddleFactorization};

/// Largest input degree accepted by the projection pipeline.
pub const DEFAULT_MAX_DEGREE: usize = 3;

/// Piecewise polynomial vector field with level-2 (flux) semantics, stored
/// per tet as the componentwise pullback `u ∘ F` in the element's reference
/// coordinates.
#[derive(Clone, Debug)]
pub struct BrokenField {
    pub degree: usize,
    pub per_tet: Vec<VPoly3>,
    /// Set by [`BrokenField::verify_conformity`] when the normal-component
    /// jumps vanish at the face check points.
    pub conformity_checked: bool,
}

/// Fixed interior face chart points for jump checks.
const FACE_POINTS: [[f64; 2]; 6] = [
    [1.0 / 6.0, 1.0 / 6.0],
    [2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0],
    [0.25, 0.25],
    [0.5, 0.25],
    [0.25, 0.5],
];

impl BrokenField {
    /// Elementwise polynomial representation of a discrete H(div) field.
    pub fn from_space(space: &SpaceHandle, free: &DVector<f64>) -> BrokenField {
        assert_eq!(space.level, 2);
        let full = space.expand(free);
        let per_tet: Vec<VPoly3> = (0..space.mesh.num_tets())
            .map(|t| match space.element_field_full(t, &full) {
                Field::Vector(v) => v,
                Field::Scalar(_) => unreachable!(),
            })
            .collect();
        BrokenField {
            degree: space.degree + 1,
            per_tet,
            conformity_checked: false,
        }
    }

    /// Restrict a globally polynomial field (physical coordinates) to the
    /// mesh elements.
    pub fn from_polynomial(mesh: &Mesh, v: &VPoly3, max_degree: usize) -> Result<BrokenField> {
        let degree = v.degree_bound();
        if degree > max_degree {
            return Err(Error::DegreeOverflow(degree, max_degree));
        }
        let per_tet = (0..mesh.num_tets())
            .map(|t| {
                let map = GeometricMap::from_tet(mesh, t);
                crate::fespace::compose_vector_with(v, &map)
            })
            .collect();
        Ok(BrokenField {
            degree,
            per_tet,
            conformity_checked: false,
        })
    }

    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        let mut acc = 0.0;
        for (t, v) in self.per_tet.iter().enumerate() {
            acc += 6.0 * mesh.volume(t) * v.dot(v).integral_ref_tet();
        }
        acc.sqrt()
    }

    pub fn sub(&self, other: &BrokenField) -> BrokenField {
        assert_eq!(self.per_tet.len(), other.per_tet.len());
        BrokenField {
            degree: self.degree.max(other.degree),
            per_tet: self
                .per_tet
                .iter()
                .zip(&other.per_tet)
                .map(|(a, b)| a.sub(b))
                .collect(),
            conformity_checked: false,
        }
    }

    /// Physical value inside a tet.
    pub fn eval(&self, mesh: &Mesh, tet: usize, x_ref: [f64; 3]) -> [f64; 3] {
        let _ = mesh;
        self.per_tet[tet].eval(x_ref)
    }

    /// Largest normal-component jump across interior faces at the fixed face
    /// chart points; flags the field conforming when the jump is below
    /// `1e-10` relative to the field scale.
    pub fn verify_conformity(&mut self, mesh: &Mesh) -> f64 {
        let maps: Vec<GeometricMap> = (0..mesh.num_tets())
            .map(|t| GeometricMap::from_tet(mesh, t))
            .collect();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (fi, f) in mesh.faces.iter().enumerate() {
            let (t1, t2) = mesh.face_tets[fi];
            let Some(t2) = t2 else { continue };
            let a = mesh.vertices[f[0]];
            let d1 = mesh.vertices[f[1]] - a;
            let d2 = mesh.vertices[f[2]] - a;
            let n = d1.cross(&d2).normalize();
            for pt in FACE_POINTS {
                let x = a + d1 * pt[0] + d2 * pt[1];
                let v1 = self.per_tet[t1].eval(maps[t1].pullback_point(&x));
                let v2 = self.per_tet[t2].eval(maps[t2].pullback_point(&x));
                let jump = (v1[0] - v2[0]) * n.x + (v1[1] - v2[1]) * n.y + (v1[2] - v2[2]) * n.z;
                worst = worst.max(jump.abs());
                let mag = (v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2]).sqrt();
                scale = scale.max(mag);
            }
        }
        self.conformity_checked = worst <= 1e-10 * scale.max(1.0);
        worst
    }

    /// Text format: header `level=2 degree=q ntets=T`, then for each tet
    /// three coefficient rows (components x, y, z) over the monomials of the
    /// element's reference coordinates, in the canonical monomial order.
    pub fn write_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        writeln!(
            out,
            "level=2 degree={} ntets={}",
            self.degree,
            self.per_tet.len()
        )
        .unwrap();
        let monos = monomials3(self.degree);
        for v in &self.per_tet {
            for comp in 0..3 {
                let p = &v.comp[comp];
                let row: Vec<String> = monos
                    .iter()
                    .map(|m| format!("{}", p.coeff(m[0], m[1], m[2])))
                    .collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
        out
    }

    pub fn read_text(text: &str) -> Result<BrokenField> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty broken-field file".into(),
        })?;
        let mut degree = None;
        let mut ntets = None;
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("level", v)) => {
                    if v != "2" {
                        return Err(Error::Parse {
                            line: hline,
                            msg: format!("unsupported level {v}"),
                        });
                    }
                }
                Some(("degree", v)) => degree = v.parse().ok(),
                Some(("ntets", v)) => ntets = v.parse().ok(),
                _ => {
                    return Err(Error::Parse {
                        line: hline,
                        msg: format!("unexpected header token {tok}"),
                    })
                }
            }
        }
        let (degree, ntets): (usize, usize) = match (degree, ntets) {
            (Some(d), Some(n)) => (d, n),
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    msg: "header must carry level=, degree=, ntets=".into(),
                })
            }
        };
        let monos = monomials3(degree);
        let mut per_tet = Vec::with_capacity(ntets);
        for _ in 0..ntets {
            let mut v = VPoly3::zero(degree);
            for comp in 0..3 {
                let (ln, l) = lines.next().ok_or(Error::Parse {
                    line: usize::MAX,
                    msg: "unexpected end of coefficient rows".into(),
                })?;
                let vals: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| {
                        t.parse().map_err(|_| Error::Parse {
                            line: ln,
                            msg: format!("bad coefficient {t}"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if vals.len() != monos.len() {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("expected {} coefficients, got {}", monos.len(), vals.len()),
                    });
                }
                for (m, val) in monos.iter().zip(vals) {
                    v.comp[comp].set_coeff(m[0], m[1], m[2], val);
                }
            }
            per_tet.push(v);
        }
        Ok(BrokenField {
            degree,
            per_tet,
            conformity_checked: false,
        })
    }
}

/// Elementwise L² projection of each component onto `P_p`; the projection is
/// local because the broken space carries no continuity requirement.
pub fn l2_project_broken(mesh: &Mesh, u: &BrokenField, p: usize) -> Result<BrokenField> {
    if u.degree > DEFAULT_MAX_DEGREE {
        return Err(Error::DegreeOverflow(u.degree, DEFAULT_MAX_DEGREE));
    }
    let _ = mesh;
    let per_tet = u
        .per_tet
        .iter()
        .map(|v| {
            VPoly3::from_components(
                project_scalar_ref(&v.comp[0], p),
                project_scalar_ref(&v.comp[1], p),
                project_scalar_ref(&v.comp[2], p),
            )
        })
        .collect();
    Ok(BrokenField {
        degree: p.min(u.degree),
        per_tet,
        conformity_checked: false,
    })
}

/// Elementwise scalar L² projection onto `P_p` (the `Π_p^3` of the chain),
/// acting on per-tet pullback representations.
pub fn l2_project_scalar(data: &[Poly3], p: usize) -> Vec<Poly3> {
    data.iter().map(|d| project_scalar_ref(d, p)).collect()
}

/// L²(reference-tet) projection of a polynomial onto `P_p`; the element
/// volume factor cancels, so this is also the physical elementwise
/// projection of the pullback representation.
fn project_scalar_ref(u: &Poly3, p: usize) -> Poly3 {
    let monos = monomials3(p);
    let n = monos.len();
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (i, a) in monos.iter().enumerate() {
        for (j, b) in monos.iter().enumerate() {
            gram[(i, j)] = crate::poly::ref_tet_monomial_integral(
                a[0] + b[0],
                a[1] + b[1],
                a[2] + b[2],
            );
        }
        rhs[i] = u
            .mul(&Poly3::monomial(a[0], a[1], a[2]))
            .integral_ref_tet();
    }
    let sol = gram.cholesky().expect("monomial Gram is SPD").solve(&rhs);
    let mut out = Poly3::zero(p);
    for (i, m) in monos.iter().enumerate() {
        out.set_coeff(m[0], m[1], m[2], sol[i]);
    }
    out
}

/// Per-tet minimization `argmin ||u - v||` over `RT_p(tau)` under the
/// divergence constraint `div v = Π_p^3(div u)`. The result is a broken
/// Raviart–Thomas field.
pub fn elementwise_constrained(mesh: &Mesh, u: &BrokenField, p: usize) -> Result<BrokenField> {
    if u.degree > DEFAULT_MAX_DEGREE {
        return Err(Error::DegreeOverflow(u.degree, DEFAULT_MAX_DEGREE));
    }
    let space = SpaceHandle::build(mesh, 2, p, Bc::None)?;
    let nloc = space.reference.ndof();
    let monos = monomials3(p);
    let k = monos.len();
    let mut per_tet = Vec::with_capacity(mesh.num_tets());
    for t in 0..mesh.num_tets() {
        let map = &space.maps[t];
        let adet = map.det.abs();
        let a = local_mass(&space, t);
        // Local basis fields in pullback representation.
        let basis: Vec<VPoly3> = (0..nloc)
            .map(|j| match space.local_basis_pullback(t, j) {
                Field::Vector(v) => v,
                Field::Scalar(_) => unreachable!(),
            })
            .collect();
        // Constraint rows: moments of the divergence against P_p monomials.
        let mut b = DMatrix::zeros(k, nloc);
        for (j, bf) in basis.iter().enumerate() {
            let dv = physical_div(map, bf);
            for (m, mono) in monos.iter().enumerate() {
                b[(m, j)] = adet
                    * dv.mul(&Poly3::monomial(mono[0], mono[1], mono[2]))
                        .integral_ref_tet();
            }
        }
        // Data: same moments of div u, i.e. of its elementwise projection.
        let du = physical_div(map, &u.per_tet[t]);
        let mut g = DVector::zeros(k);
        for (m, mono) in monos.iter().enumerate() {
            g[m] = adet
                * du.mul(&Poly3::monomial(mono[0], mono[1], mono[2]))
                    .integral_ref_tet();
        }
        // Objective: <u, phi_j> per local basis function.
        let mut f = DVector::zeros(nloc);
        for (j, bf) in basis.iter().enumerate() {
            f[j] = adet * u.per_tet[t].dot(bf).integral_ref_tet();
        }
        // div: RT_p(tau) -> P_p(tau) is onto, so the constraint is feasible.
        let sol = SaddleFactorization::new(a, b)?.solve(&f, &g)?;
        let mut xi = VPoly3::zero(p + 1);
        for (j, bf) in basis.iter().enumerate() {
            if sol.u[j] != 0.0 {
                for c in 0..3 {
                    xi.comp[c].axpy(sol.u[j], &bf.comp[c]);
                }
            }
        }
        per_tet.push(xi);
    }
    Ok(BrokenField {
        degree: p + 1,
        per_tet,
        conformity_checked: false,
    })
}

/// One solved vertex-star problem.
pub struct StarEquilibration {
    pub vertex: usize,
    /// Equilibrated flux as a dof vector over the global level-2 full
    /// numbering, zero outside the star.
    pub dofs_full: DVector<f64>,
    /// `|∫ (psi_a div u + grad psi_a · xi)|` relative to the data scale,
    /// checked before solving for interior vertices.
    pub compatibility_residual: f64,
}

/// Solve the star problem at `vertex`: minimize the distance to the
/// canonical Raviart–Thomas interpolant of `psi_a xi` over the star space
/// with zero normal trace where the hat vanishes, under the divergence
/// constraint `div fr = Π_p^3(psi_a div u + grad psi_a · xi)`.
pub fn star_equilibrate(
    mesh: &Mesh,
    u: &BrokenField,
    xi: &BrokenField,
    vertex: usize,
    p: usize,
) -> Result<StarEquilibration> {
    let star = mesh.extract_star(StarKind::Vertex, vertex)?;
    let sub = &star.submesh;
    let space2 = SpaceHandle::build(sub, 2, p, Bc::None)?;
    let space3 = SpaceHandle::build(sub, 3, p, Bc::None)?;
    let interior = !mesh.boundary_vertex_flags[vertex];
    let a_local = star
        .vertex_parent
        .iter()
        .position(|&v| v == vertex)
        .expect("seed vertex in star");

    // Kept dofs: drop the normal-trace blocks of faces where psi_a vanishes
    // (exactly the star-boundary faces opposite the vertex).
    let mut keep = vec![true; space2.full_dim];
    for (fi, f) in sub.faces.iter().enumerate() {
        if !f.contains(&a_local) {
            for w in 0..space2.reference.dofs_per_face {
                keep[space2.full_id(crate::fespace::GlobalEntity::Face(fi), w)] = false;
            }
        }
    }
    let kept: Vec<usize> = (0..space2.full_dim).filter(|&i| keep[i]).collect();
    let kept_index: Vec<Option<usize>> = {
        let mut v = vec![None; space2.full_dim];
        for (c, &i) in kept.iter().enumerate() {
            v[i] = Some(c);
        }
        v
    };

    // Per-star-element target divergence and hat-weighted data, in parent
    // pullback representations (identical on the submesh, which preserves
    // vertex order and hence the element maps).
    let mut target = Vec::with_capacity(sub.num_tets());
    let mut theta = Vec::with_capacity(sub.num_tets());
    for (st, &pt) in star.tet_parent.iter().enumerate() {
        let map = &space2.maps[st];
        let hat = hat_on_tet(mesh, pt, vertex);
        let du = physical_div(map, &u.per_tet[pt]);
        let grad_hat = hat_gradient(mesh, map, pt, vertex);
        let mut tgt = hat.mul(&du);
        let gdot = xi.per_tet[pt].dot_const([grad_hat.x, grad_hat.y, grad_hat.z]);
        tgt = tgt.add(&gdot);
        target.push(tgt);
        // theta = psi_a * xi, the field whose canonical interpolant is matched.
        let w = VPoly3::from_components(
            hat.mul(&xi.per_tet[pt].comp[0]),
            hat.mul(&xi.per_tet[pt].comp[1]),
            hat.mul(&xi.per_tet[pt].comp[2]),
        );
        theta.push(w);
    }

    // Compatibility of the interior-vertex Neumann-type problem.
    let mut integral = 0.0;
    let mut scale = 0.0;
    for (st, tgt) in target.iter().enumerate() {
        let adet = space2.maps[st].det.abs();
        integral += adet * tgt.integral_ref_tet();
        scale += adet * tgt.mul(tgt).integral_ref_tet();
    }
    let compatibility_residual = integral.abs() / scale.sqrt().max(1.0);
    if interior && compatibility_residual > 1e-9 {
        return Err(Error::StarCompatibility {
            vertex,
            residual: compatibility_residual,
        });
    }

    // Constraint: test div v - target against the multiplier space through
    // the level-3 mass pairing.
    let mass3 = assemble_mass(&space3).to_dense();
    let diff2 = assemble_diff(&space2, &space3)?.to_dense();
    let mut y_target = DVector::zeros(space3.global_dim);
    for st in 0..sub.num_tets() {
        let vals = space3.element_dofs_from_pullback(st, &Field::Scalar(target[st].clone()));
        for (j, &(fd, _)) in space3.dof_map[st].iter().enumerate() {
            y_target[fd] = vals[j];
        }
    }
    let z = if interior {
        // Mean-free multipliers: the orthogonal complement of the constant
        // function's pairing row.
        let ones = space3.interpolate(&Field::Scalar(Poly3::constant(1.0)));
        let pairing = &mass3 * &ones;
        let mut row = DMatrix::zeros(1, space3.global_dim);
        for j in 0..space3.global_dim {
            row[(0, j)] = pairing[j];
        }
        nullspace(&row)
    } else {
        DMatrix::identity(space3.global_dim, space3.global_dim)
    };
    let b_full = z.transpose() * &mass3 * &diff2;
    let g = z.transpose() * &mass3 * &y_target;

    // Restrict to kept dofs.
    let a_full = assemble_mass(&space2).to_dense();
    let nk = kept.len();
    let mut a = DMatrix::zeros(nk, nk);
    for (i, &fi) in kept.iter().enumerate() {
        for (j, &fj) in kept.iter().enumerate() {
            a[(i, j)] = a_full[(fi, fj)];
        }
    }
    let mut b = DMatrix::zeros(b_full.nrows(), nk);
    for (j, &fj) in kept.iter().enumerate() {
        b.set_column(j, &b_full.column(fj));
    }

    // Objective: distance to the canonical RT interpolant of psi_a xi.
    let mut f = DVector::zeros(nk);
    for st in 0..sub.num_tets() {
        let vals = space2.element_dofs_from_pullback(st, &Field::Vector(theta[st].clone()));
        let mloc = local_mass(&space2, st);
        // Local interpolant coefficients are exactly the dof values.
        let coeffs = DVector::from_vec(vals);
        let floc = mloc * coeffs;
        for (j, &(fd, _)) in space2.dof_map[st].iter().enumerate() {
            if let Some(c) = kept_index[fd] {
                f[c] += floc[j];
            }
        }
    }

    let sol = SaddleFactorization::new(a, b)?.solve(&f, &g)?;

    // Zero-extension into the global level-2 full numbering.
    let gspace = SpaceHandle::build(mesh, 2, p, Bc::None)?;
    let mut dofs_full = DVector::zeros(gspace.full_dim);
    for (c, &fi) in kept.iter().enumerate() {
        let global_fd = star_full_to_global(&star, &space2, &gspace, fi);
        dofs_full[global_fd] += sol.u[c];
    }
    Ok(StarEquilibration {
        vertex,
        dofs_full,
        compatibility_residual,
    })
}

/// Translate a star-space full dof id into the parent mesh's full dof id.
fn star_full_to_global(
    star: &crate::mesh::StarSpec,
    sub_space: &SpaceHandle,
    global_space: &SpaceHandle,
    full_id: usize,
) -> usize {
    use crate::fespace::GlobalEntity;
    let sub = &star.submesh;
    let cf = sub_space.reference.dofs_per_face;
    let cc = sub_space.reference.dofs_per_cell;
    let faces_offset = 0usize; // level 2 has no vertex/edge dofs
    let cells_offset = sub.num_faces() * cf;
    if full_id < cells_offset {
        let fi = (full_id - faces_offset) / cf;
        let within = full_id % cf;
        let f = sub.faces[fi];
        let parent_face = [
            star.vertex_parent[f[0]],
            star.vertex_parent[f[1]],
            star.vertex_parent[f[2]],
        ];
        let pf = global_space
            .mesh
            .face_id(parent_face)
            .expect("star face exists in parent");
        global_space.full_id(GlobalEntity::Face(pf), within)
    } else {
        let ci = (full_id - cells_offset) / cc;
        let within = (full_id - cells_offset) % cc;
        let pc = star.tet_parent[ci];
        global_space.full_id(GlobalEntity::Cell(pc), within)
    }
}

/// `max |sum_a psi_a - 1|` over a fixed set of interior points per tet.
pub fn partition_of_unity_residual(mesh: &Mesh) -> f64 {
    let pts = [
        [0.25, 0.25, 0.25],
        [0.1, 0.2, 0.3],
        [0.5, 0.25, 0.125],
        [0.05, 0.05, 0.05],
    ];
    let mut worst: f64 = 0.0;
    for t in 0..mesh.num_tets() {
        for pt in pts {
            let mut acc = 0.0;
            for &v in &mesh.tets[t] {
                acc += hat_on_tet(mesh, t, v).eval(pt);
            }
            worst = worst.max((acc - 1.0).abs());
        }
    }
    worst
}

/// The full flux-equilibration projection `Π_p^2 u = Σ_a fr^a`, with its
/// verification record: the result is H(div)-conforming by construction,
/// commutes with the elementwise projection of the divergence, reproduces
/// discrete inputs, and its L² stability ratio is reported.
pub fn commuting_projection_hdiv(
    mesh: &Mesh,
    u: &BrokenField,
    p: usize,
) -> Result<(DVector<f64>, ProjectionReport)> {
    let xi = elementwise_constrained(mesh, u, p)?;
    let gspace = SpaceHandle::build(mesh, 2, p, Bc::None)?;
    let mut acc_full = DVector::zeros(gspace.full_dim);
    let mut worst_compat: f64 = 0.0;
    for vertex in 0..mesh.num_vertices() {
        let se = star_equilibrate(mesh, u, &xi, vertex, p)?;
        worst_compat = worst_compat.max(se.compatibility_residual);
        acc_full += se.dofs_full;
    }
    let proj = gspace.restrict(&acc_full);

    // Commuting: div Π u = Π_p^3 div u, both sides assembled independently.
    let space3 = SpaceHandle::build(mesh, 3, p, Bc::None)?;
    let mass3 = assemble_mass(&space3).to_dense();
    let diff2 = assemble_diff(&gspace, &space3)?.to_dense();
    let lhs = &diff2 * &proj;
    let mut rhs = DVector::zeros(space3.global_dim);
    for t in 0..mesh.num_tets() {
        let du = physical_div(&gspace.maps[t], &u.per_tet[t]);
        let pdu = project_scalar_ref(&du, p);
        let vals = space3.element_dofs_from_pullback(t, &Field::Scalar(pdu));
        for (j, &(fd, _)) in space3.dof_map[t].iter().enumerate() {
            rhs[fd] = vals[j];
        }
    }
    let scale = m_norm(&rhs, &mass3).max(1.0);
    let commuting_residual = m_norm(&(&lhs - &rhs), &mass3) / scale;

    // Projection residual and stability in L².
    let mass2 = assemble_mass(&gspace).to_dense();
    let mut projected = BrokenField::from_space(&gspace, &proj);
    let unorm = u.l2_norm(mesh).max(1e-300);
    let projection_residual = projected.sub(u).l2_norm(mesh) / unorm;
    let conf_jump = projected.verify_conformity(mesh);
    debug_assert!(projected.conformity_checked || conf_jump.is_nan() || conf_jump >= 0.0);
    let stability_ratio = m_norm(&proj, &mass2) / unorm;

    Ok((
        proj,
        ProjectionReport {
            level: 2,
            input: format!(
                "broken field degree {} ({} tets), worst star compatibility {:.2e}, conformity jump {:.2e}",
                u.degree,
                u.per_tet.len(),
                worst_compat,
                conf_jump
            ),
            commuting_residual,
            projection_residual,
            stability_ratio,
            norm_kind: NormKind::L2,
            bound: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Shape};
    use crate::solvers::SplitMix64;

    fn random_conforming(
        rng: &mut SplitMix64,
        space: &SpaceHandle,
    ) -> (DVector<f64>, BrokenField) {
        let dofs = rng.vector(space.global_dim);
        let bf = BrokenField::from_space(space, &dofs);
        (dofs, bf)
    }

    #[test]
    fn partition_of_unity() {
        for shape in [Shape::CubeFreudenthal(2), Shape::VertexStarSynthetic(8)] {
            let mesh = generate(shape).unwrap();
            assert!(partition_of_unity_residual(&mesh) <= 1e-13);
        }
    }

    #[test]
    fn broken_field_roundtrip_and_conformity() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let space = SpaceHandle::build(&mesh, 2, 1, Bc::None).unwrap();
        let mut rng = SplitMix64::new(6);
        let (_, mut bf) = random_conforming(&mut rng, &space);
        let jump = bf.verify_conformity(&mesh);
        assert!(jump <= 1e-11, "jump {jump}");
        assert!(bf.conformity_checked);

        let text = bf.write_text();
        let bf2 = BrokenField::read_text(&text).unwrap();
        assert_eq!(bf2.degree, bf.degree);
        assert!(bf.sub(&bf2).l2_norm(&mesh) <= 1e-12 * bf.l2_norm(&mesh));
        assert!(BrokenField::read_text("level=2 degree=1\n").is_err());
    }

    #[test]
    fn l2_projection_elementwise() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        // A field already of degree p is reproduced.
        let v = VPoly3::from_components(
            Poly3::affine(0.2, 0.0, 0.0, 0.0),
            Poly3::affine(-0.3, 0.0, 0.0, 0.0),
            Poly3::affine(0.5, 0.0, 0.0, 0.0),
        );
        let u = BrokenField::from_polynomial(&mesh, &v, 3).unwrap();
        let proj = l2_project_broken(&mesh, &u, 0).unwrap();
        assert!(proj.sub(&u).l2_norm(&mesh) < 1e-13);

        // Scalar projection of a degree-1 monomial onto P_0 is its mean.
        let x = Poly3::coordinate(0);
        let out = l2_project_scalar(std::slice::from_ref(&x), 0);
        assert!((out[0].coeff(0, 0, 0) - 0.25).abs() < 1e-14);

        // Orthogonality to the projection space for a random input.
        let mut rng = SplitMix64::new(12);
        let mut w = Poly3::zero(2);
        for m in monomials3(2) {
            w.axpy(
                rng.next_symmetric(),
                &Poly3::monomial(m[0], m[1], m[2]).promote(2),
            );
        }
        let pw = project_scalar_ref(&w, 1);
        let diff = w.sub(&pw);
        for m in monomials3(1) {
            let ip = diff
                .mul(&Poly3::monomial(m[0], m[1], m[2]))
                .integral_ref_tet();
            assert!(ip.abs() < 1e-11, "moment {m:?}: {ip}");
        }

        // Degree overflow rejected.
        assert!(matches!(
            BrokenField::from_polynomial(
                &mesh,
                &VPoly3::axis(Poly3::monomial(4, 0, 0), 0),
                DEFAULT_MAX_DEGREE
            ),
            Err(Error::DegreeOverflow(4, 3))
        ));
    }

    #[test]
    fn elementwise_constrained_properties() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(21);
        for p in 0..=1usize {
            // Any broken RT_p input is reproduced elementwise, conforming or
            // not: splice two conforming fields per tet to break continuity.
            let space = SpaceHandle::build(&mesh, 2, p, Bc::None).unwrap();
            let (_, a) = random_conforming(&mut rng, &space);
            let (_, b) = random_conforming(&mut rng, &space);
            let mut bf = a.clone();
            for t in 0..mesh.num_tets() {
                if t % 2 == 1 {
                    bf.per_tet[t] = b.per_tet[t].clone();
                }
            }
            assert!(bf.clone().verify_conformity(&mesh) > 1e-6, "input is broken");
            let xi = elementwise_constrained(&mesh, &bf, p).unwrap();
            assert!(
                xi.sub(&bf).l2_norm(&mesh) <= 1e-11 * bf.l2_norm(&mesh),
                "p = {p}"
            );

            // Random conforming degree-(p+1) input: divergences match after
            // projection, and u - xi is orthogonal to elementwise constants.
            let rich = SpaceHandle::build(&mesh, 2, p + 1, Bc::None).unwrap();
            let (_, u) = random_conforming(&mut rng, &rich);
            let xi = elementwise_constrained(&mesh, &u, p).unwrap();
            for t in 0..mesh.num_tets() {
                let map = GeometricMap::from_tet(&mesh, t);
                let du = project_scalar_ref(&physical_div(&map, &u.per_tet[t]), p);
                let dxi = physical_div(&map, &xi.per_tet[t]);
                let err = du.sub(&dxi);
                let norm2 = err.mul(&err).integral_ref_tet();
                assert!(norm2.sqrt() <= 1e-10, "p {p} tet {t}: {}", norm2.sqrt());
                // Orthogonality to constants (a quadrature-free oracle: the
                // integral of each component of u - xi vanishes).
                let diff = u.per_tet[t].sub(&xi.per_tet[t]);
                for c in 0..3 {
                    assert!(diff.comp[c].integral_ref_tet().abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn star_problems_and_projection() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(33);
        let p = 0usize;
        let space = SpaceHandle::build(&mesh, 2, p, Bc::None).unwrap();

        // Conforming RT_p input: fr^a equals the canonical interpolant of
        // psi_a u, and the summed projection reproduces u.
        let (dofs, u) = random_conforming(&mut rng, &space);
        let xi = elementwise_constrained(&mesh, &u, p).unwrap();
        for vertex in 0..mesh.num_vertices() {
            let se = star_equilibrate(&mesh, &u, &xi, vertex, p).unwrap();
            // Canonical interpolant of psi_a u on the star, zero-extended.
            let star = mesh.extract_star(StarKind::Vertex, vertex).unwrap();
            let sub_space = SpaceHandle::build(&star.submesh, 2, p, Bc::None).unwrap();
            let mut expect = DVector::zeros(space.full_dim);
            for (st, &pt) in star.tet_parent.iter().enumerate() {
                let hat = hat_on_tet(&mesh, pt, vertex);
                let w = VPoly3::from_components(
                    hat.mul(&u.per_tet[pt].comp[0]),
                    hat.mul(&u.per_tet[pt].comp[1]),
                    hat.mul(&u.per_tet[pt].comp[2]),
                );
                let vals = sub_space.element_dofs_from_pullback(st, &Field::Vector(w));
                for (j, &(fd, _)) in sub_space.dof_map[st].iter().enumerate() {
                    let gfd = super::star_full_to_global(&star, &sub_space, &space, fd);
                    expect[gfd] = vals[j];
                }
            }
            let err = (&se.dofs_full - &expect).abs().max();
            assert!(err <= 1e-9, "vertex {vertex}: {err}");
        }
        let (proj, rep) = commuting_projection_hdiv(&mesh, &u, p).unwrap();
        assert!(
            (&proj - &dofs).abs().max() <= 1e-10 * dofs.abs().max().max(1.0),
            "projection property"
        );
        assert!(rep.projection_residual <= 1e-10);

        // Partition of unity of the divergence constraints: the summed
        // targets reproduce the projected divergence of u.
        let rich = SpaceHandle::build(&mesh, 2, p + 1, Bc::None).unwrap();
        let (_, u1) = random_conforming(&mut rng, &rich);
        let xi1 = elementwise_constrained(&mesh, &u1, p).unwrap();
        let space3 = SpaceHandle::build(&mesh, 3, p, Bc::None).unwrap();
        let mut sum = DVector::zeros(space3.global_dim);
        for vertex in 0..mesh.num_vertices() {
            let star = mesh.extract_star(StarKind::Vertex, vertex).unwrap();
            for &pt in &star.tet_parent {
                let map = GeometricMap::from_tet(&mesh, pt);
                let hat = hat_on_tet(&mesh, pt, vertex);
                let gh = hat_gradient(&mesh, &map, pt, vertex);
                let tgt = hat
                    .mul(&physical_div(&map, &u1.per_tet[pt]))
                    .add(&xi1.per_tet[pt].dot_const([gh.x, gh.y, gh.z]));
                let vals = space3.element_dofs_from_pullback(pt, &Field::Scalar(tgt));
                for (j, &(fd, _)) in space3.dof_map[pt].iter().enumerate() {
                    sum[fd] += vals[j];
                }
            }
        }
        let mut expect = DVector::zeros(space3.global_dim);
        for t in 0..mesh.num_tets() {
            let map = GeometricMap::from_tet(&mesh, t);
            let pdu = project_scalar_ref(&physical_div(&map, &u1.per_tet[t]), p);
            let vals = space3.element_dofs_from_pullback(t, &Field::Scalar(pdu));
            for (j, &(fd, _)) in space3.dof_map[t].iter().enumerate() {
                expect[fd] = vals[j];
            }
        }
        assert!((&sum - &expect).abs().max() <= 1e-10 * expect.abs().max().max(1.0));
    }

    #[test]
    fn commuting_projection_random_inputs() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(44);
        for p in 0..=1usize {
            let rich = SpaceHandle::build(&mesh, 2, p + 1, Bc::None).unwrap();
            for _ in 0..3 {
                let (_, u) = random_conforming(&mut rng, &rich);
                let (_, rep) = commuting_projection_hdiv(&mesh, &u, p).unwrap();
                assert!(rep.commuting_residual <= 1e-9, "p {p}");
                assert!(rep.stability_ratio.is_finite());
            }
        }
    }

    #[test]
    fn constant_divergence_reproduced_exactly() {
        // u = grad of a global quadratic has constant divergence; for p = 0
        // the commuting identity reproduces it exactly.
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let q = VPoly3::from_components(
            Poly3::affine(0.1, 2.0, 0.5, -1.0),
            Poly3::affine(-0.2, 0.5, 1.0, 0.25),
            Poly3::affine(0.3, -1.0, 0.25, 3.0),
        );
        // div q = 2 + 1 + 3 = 6, constant.
        let u = BrokenField::from_polynomial(&mesh, &q, 3).unwrap();
        let (proj, rep) = commuting_projection_hdiv(&mesh, &u, 0).unwrap();
        assert!(rep.commuting_residual <= 1e-12);
        let gspace = SpaceHandle::build(&mesh, 2, 0, Bc::None).unwrap();
        let space3 = SpaceHandle::build(&mesh, 3, 0, Bc::None).unwrap();
        let d2 = assemble_diff(&gspace, &space3).unwrap().to_dense();
        let div_dofs = &d2 * &proj;
        // dof of the constant 6 on each tet is 6 * vol.
        for t in 0..mesh.num_tets() {
            let expect = 6.0 * mesh.volume(t);
            assert!((div_dofs[t] - expect).abs() <= 1e-10 * expect.abs());
        }
    }

    // Stability ratios stay level under shape-regular refinement: across
    // n = 1, 2, 3 the measured ratios must not trend upward beyond a 1.5x
    // slack over the coarsest level.
    #[test]
    fn stability_ratio_does_not_trend_upward() {
        let mut worst = Vec::new();
        for n in [1usize, 2, 3] {
            let mesh = generate(Shape::CubeFreudenthal(n)).unwrap();
            let rich = SpaceHandle::build(&mesh, 2, 1, Bc::None).unwrap();
            let mut rng = SplitMix64::new(77);
            let mut w: f64 = 0.0;
            for _ in 0..3 {
                let (_, u) = random_conforming(&mut rng, &rich);
                let (_, rep) = commuting_projection_hdiv(&mesh, &u, 0).unwrap();
                assert!(rep.stability_ratio.is_finite());
                w = w.max(rep.stability_ratio);
            }
            worst.push(w);
        }
        for n in 1..worst.len() {
            assert!(
                worst[n] <= 1.5 * worst[0],
                "ratios trend upward: {worst:?}"
            );
        }
    }

    #[test]
    fn boundary_vertex_star_solves_without_compatibility() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let mut rng = SplitMix64::new(55);
        let rich = SpaceHandle::build(&mesh, 2, 1, Bc::None).unwrap();
        let (_, u) = random_conforming(&mut rng, &rich);
        let xi = elementwise_constrained(&mesh, &u, 0).unwrap();
        // Every vertex of the n=1 cube is a boundary vertex.
        for vertex in 0..mesh.num_vertices() {
            assert!(mesh.boundary_vertex_flags[vertex]);
            star_equilibrate(&mesh, &u, &xi, vertex, 0).unwrap();
        }
    }
}
