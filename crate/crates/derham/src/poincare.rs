//! Best discrete Poincaré constants and their equivalent formulations:
//! Rayleigh-quotient eigenvalues, stability of constrained minimization,
//! discrete inf-sup conditions, operator norms of minimal vector potentials,
//! and graph-stable minimizing projections; plus the discrete-vs-rich-oracle
//! minimizer comparison and the piecewise-Piola transport route.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::complex::{assemble_diff, assemble_mass};
use crate::error::{Error, Result};
use crate::fespace::reference::Field;
use crate::fespace::{Bc, GeometricMap, SpaceHandle};
use crate::mesh::{uniform_refine, Mesh, Point};
use crate::solvers::{svd_rank, sym_gen_eig, SaddleFactorization, SplitMix64};

/// All four spaces and assembled operators of one `(mesh, degree, bc)` cell.
pub struct ComplexOps<'m> {
    pub mesh: &'m Mesh,
    pub degree: usize,
    pub bc: Bc,
    pub spaces: Vec<SpaceHandle<'m>>,
    /// Mass matrices per level, on retained dofs.
    pub masses: Vec<DMatrix<f64>>,
    /// Differential matrices `D^l`, `l = 0, 1, 2`.
    pub diffs: Vec<DMatrix<f64>>,
    pub h_omega: f64,
    /// Cached `(rank, euclidean range basis)` of each differential.
    svd_cache: [std::sync::OnceLock<(usize, DMatrix<f64>)>; 3],
}

impl<'m> ComplexOps<'m> {
    pub fn build(mesh: &'m Mesh, degree: usize, bc: Bc) -> Result<Self> {
        Self::build_capped(mesh, degree, bc, usize::MAX)
    }

    pub fn build_capped(mesh: &'m Mesh, degree: usize, bc: Bc, cap: usize) -> Result<Self> {
        let spaces: Vec<SpaceHandle<'m>> = (0..4)
            .map(|l| SpaceHandle::build(mesh, l, degree, bc))
            .collect::<Result<_>>()?;
        for s in &spaces {
            if s.global_dim > cap {
                return Err(Error::DimensionCap {
                    dim: s.global_dim,
                    cap,
                });
            }
        }
        let masses: Vec<DMatrix<f64>> =
            spaces.iter().map(|s| assemble_mass(s).to_dense()).collect();
        let diffs: Vec<DMatrix<f64>> = (0..3)
            .map(|l| Ok(assemble_diff(&spaces[l], &spaces[l + 1])?.to_dense()))
            .collect::<Result<_>>()?;
        let h_omega = mesh.geometry().h_omega;
        Ok(ComplexOps {
            mesh,
            degree,
            bc,
            spaces,
            masses,
            diffs,
            h_omega,
            svd_cache: Default::default(),
        })
    }

    fn svd_of(&self, l: usize) -> &(usize, DMatrix<f64>) {
        self.svd_cache[l].get_or_init(|| {
            let d = &self.diffs[l];
            (svd_rank(d), crate::solvers::range_columns(d))
        })
    }

    /// Numerical rank of `D^l` (one-sided Jacobi SVD oracle).
    pub fn rank(&self, l: usize) -> usize {
        self.svd_of(l).0
    }

    /// M_{l+1}-orthonormal basis of `range(D^l)`.
    pub fn range_basis(&self, l: usize) -> Result<DMatrix<f64>> {
        let (rank, ubasis) = self.svd_of(l);
        if *rank == 0 {
            return Err(Error::InvalidArgument(format!("range of D^{l} is trivial")));
        }
        // M-orthonormalize: R = U L^{-T} with U^T M U = L L^T.
        let gram = ubasis.transpose() * &self.masses[l + 1] * ubasis;
        let chol = gram.cholesky().expect("range Gram is SPD");
        let mut rt = ubasis.transpose();
        chol.l().solve_lower_triangular_mut(&mut rt);
        Ok(rt.transpose())
    }
}

pub fn m_norm(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    v.dot(&(m * v)).max(0.0).sqrt()
}

/// Best-constant report of one `(mesh, l, p, bc)` cell. The cross-check
/// fields are filled by [`verified_constant`].
#[derive(Clone, Debug, Serialize)]
pub struct ConstantReport {
    pub l: usize,
    pub p: usize,
    #[serde(serialize_with = "ser_bc")]
    pub bc: Bc,
    pub h_omega: f64,
    pub lambda_min_pos: f64,
    /// Dimensionless best constant `1 / (h_omega sqrt(lambda_min_pos))`.
    pub constant: f64,
    pub kernel_dim: usize,
    pub dim: usize,
    pub infsup: Option<f64>,
    pub potential_norm: Option<f64>,
    pub seed: u64,
    /// Stability ratio of the minimizer driven by the extremal eigenvector;
    /// not part of the JSON schema.
    #[serde(skip)]
    pub extremal_ratio: Option<f64>,
}

fn ser_bc<S: serde::Serializer>(bc: &Bc, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&bc.to_string())
}

impl ConstantReport {
    /// JSON object with exactly the documented keys.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Eigenvalue route: smallest positive eigenvalue of
/// `(D^l)^T M_{l+1} D^l x = lambda M_l x` over the whole space, kernel
/// eigenvalues discarded by the self-validating threshold.
pub fn constant(mesh: &Mesh, l: usize, p: usize, bc: Bc) -> Result<ConstantReport> {
    let ops = ComplexOps::build(mesh, p, bc)?;
    Ok(eigen_constant(&ops, l, 0)?.0)
}

/// Eigenvalue route on pre-assembled operators; also returns the extremal
/// eigenvector (the one attaining `lambda_min_pos`).
pub fn eigen_constant(
    ops: &ComplexOps,
    l: usize,
    seed: u64,
) -> Result<(ConstantReport, DVector<f64>)> {
    assert!(l <= 2);
    let dim = ops.spaces[l].global_dim;
    if dim == 0 {
        return Err(Error::EmptySpace {
            level: l,
            degree: ops.degree,
        });
    }
    let d = &ops.diffs[l];
    let k = d.transpose() * &ops.masses[l + 1] * d;
    let k = (&k + k.transpose()) * 0.5;
    let eig = sym_gen_eig(&k, &ops.masses[l])?;
    let lmax = eig.eigenvalues[dim - 1].max(0.0);
    let tol = lmax * dim as f64 * 1e-12;
    let kernel_dim = eig.eigenvalues.iter().filter(|&&v| v < tol).count();
    // The eigenvalue threshold must reproduce the rank-oracle kernel
    // dimension, otherwise the tolerance is not trustworthy and we abort.
    let rank_kernel = dim - ops.rank(l);
    if kernel_dim != rank_kernel {
        return Err(Error::KernelMismatch {
            eigen: kernel_dim,
            rank: rank_kernel,
        });
    }
    if kernel_dim == dim {
        return Err(Error::InvalidArgument(
            "differential vanishes on the whole space; no positive eigenvalue".into(),
        ));
    }
    let lambda_min_pos = eig.eigenvalues[kernel_dim];
    let constant = 1.0 / (ops.h_omega * lambda_min_pos.sqrt());
    let extremal = DVector::from(eig.eigenvectors.column(kernel_dim).clone_owned());
    Ok((
        ConstantReport {
            l,
            p: ops.degree,
            bc: ops.bc,
            h_omega: ops.h_omega,
            lambda_min_pos,
            constant,
            kernel_dim,
            dim,
            infsup: None,
            potential_norm: None,
            seed,
            extremal_ratio: None,
        },
        extremal,
    ))
}

/// Minimal-norm solution of `d u = r` in level `l`: the constrained
/// minimization through its mixed formulation, with the multiplier space an
/// M-orthonormal basis of `range(D^l)`.
pub fn constrained_min(ops: &ComplexOps, l: usize, r: &DVector<f64>) -> Result<DVector<f64>> {
    ConstrainedMin::new(ops, l)?.solve(r)
}

/// Factorized mixed system, reused across many right-hand sides.
pub struct ConstrainedMin<'a, 'm> {
    ops: &'a ComplexOps<'m>,
    l: usize,
    pub range: DMatrix<f64>,
    fact: SaddleFactorization,
}

impl<'a, 'm> ConstrainedMin<'a, 'm> {
    pub fn new(ops: &'a ComplexOps<'m>, l: usize) -> Result<Self> {
        let range = ops.range_basis(l)?;
        let b = range.transpose() * &ops.masses[l + 1] * &ops.diffs[l];
        let fact = SaddleFactorization::new(ops.masses[l].clone(), b)?;
        Ok(ConstrainedMin {
            ops,
            l,
            range,
            fact,
        })
    }

    /// Minimal-norm preimage of `r` (given as a level-(l+1) dof vector).
    pub fn solve(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        self.solve_with_objective(&DVector::zeros(self.ops.spaces[self.l].global_dim), r)
    }

    /// Minimize `||v||^2 - 2 <f_lin, v>` subject to `d v = r`.
    pub fn solve_with_objective(
        &self,
        f_lin: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mnext = &self.ops.masses[self.l + 1];
        let rnorm = m_norm(r, mnext);
        let coords = self.range.transpose() * (mnext * r);
        let proj = &self.range * &coords;
        let defect = m_norm(&(r - proj), mnext);
        if defect > 1e-8 * rnorm.max(1e-300) {
            return Err(Error::IncompatibleConstraint);
        }
        let sol = self.fact.solve(f_lin, &coords)?;
        let resid = m_norm(&(&self.ops.diffs[self.l] * &sol.u - r), mnext);
        if resid > 1e-9 * rnorm.max(1.0) {
            return Err(Error::IncompatibleConstraint);
        }
        Ok(sol.u)
    }

    /// Largest generalized singular value of the minimal potential operator
    /// over this factorization's range basis.
    pub fn potential_norm(&self) -> Result<f64> {
        let k = self.range.ncols();
        let n = self.ops.spaces[self.l].global_dim;
        let mut phis = DMatrix::zeros(n, k);
        for j in 0..k {
            let t = DVector::from(self.range.column(j).clone_owned());
            let u = self.solve(&t)?;
            phis.set_column(j, &u);
        }
        let gram = phis.transpose() * &self.ops.masses[self.l] * &phis;
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = sym_gen_eig(&gram, &DMatrix::identity(k, k))?;
        Ok(eig.eigenvalues[k - 1].max(0.0).sqrt())
    }
}

/// Sampled supremum of `||u*|| / (h_omega ||r||)` over data `r = d v` for
/// random `v`; optionally includes the extremal eigenvector's datum, which
/// attains the best constant.
pub fn stability_sup(
    ops: &ComplexOps,
    l: usize,
    n_samples: usize,
    seed: u64,
    include_extremal: bool,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let fact = ConstrainedMin::new(ops, l)?;
    let mut sup: f64 = 0.0;
    let dim = ops.spaces[l].global_dim;
    let mut done = 0;
    while done < n_samples {
        let v = rng.vector(dim);
        let r = &ops.diffs[l] * &v;
        let rnorm = m_norm(&r, &ops.masses[l + 1]);
        if rnorm < 1e-12 {
            continue;
        }
        let u = fact.solve(&r)?;
        sup = sup.max(m_norm(&u, &ops.masses[l]) / (ops.h_omega * rnorm));
        done += 1;
    }
    if include_extremal {
        let (_, extremal) = eigen_constant(ops, l, seed)?;
        let r = &ops.diffs[l] * &extremal;
        let u = fact.solve(&r)?;
        sup = sup.max(m_norm(&u, &ops.masses[l]) / (ops.h_omega * m_norm(&r, &ops.masses[l + 1])));
    }
    Ok(sup)
}

/// Discrete inf-sup value, computed independently of the eigenvalue route:
/// the square root of the smallest eigenvalue of the Schur operator
/// `t -> D M_l^{-1} D^T t` restricted to `range(D^l)` in the M_{l+1} inner
/// product. The identity `value * C * h_omega = 1` ties it to the constant.
pub fn inf_sup(ops: &ComplexOps, l: usize) -> Result<f64> {
    let range = ops.range_basis(l)?;
    let w = ops.diffs[l].transpose() * &ops.masses[l + 1] * &range;
    let chol = ops.masses[l].clone().cholesky().ok_or(Error::NotSpd)?;
    let minv_w = chol.solve(&w);
    let s = w.transpose() * minv_w;
    let s = (&s + s.transpose()) * 0.5;
    let k = s.nrows();
    let eig = sym_gen_eig(&s, &DMatrix::identity(k, k))?;
    Ok(eig.eigenvalues[0].max(0.0).sqrt())
}

/// Operator norm of the minimal vector potential operator: the largest
/// generalized singular value of `r -> u*(r)` over an M-orthonormal range
/// basis. Equals `C * h_omega`.
pub fn potential_norm(ops: &ComplexOps, l: usize) -> Result<f64> {
    ConstrainedMin::new(ops, l)?.potential_norm()
}

/// Eigenvalue route plus all three independent cross-checks, sharing one
/// mixed-system factorization.
pub fn verified_constant(ops: &ComplexOps, l: usize, seed: u64) -> Result<ConstantReport> {
    let (mut report, extremal) = eigen_constant(ops, l, seed)?;
    report.infsup = Some(inf_sup(ops, l)?);
    let fact = ConstrainedMin::new(ops, l)?;
    report.potential_norm = Some(fact.potential_norm()?);
    let r = &ops.diffs[l] * &extremal;
    let u = fact.solve(&r)?;
    report.extremal_ratio =
        Some(m_norm(&u, &ops.masses[l]) / (ops.h_omega * m_norm(&r, &ops.masses[l + 1])));
    Ok(report)
}

/// Geometric nesting of a fine mesh inside a coarse mesh.
pub struct MeshEmbedding {
    /// Coarse parent of each fine tet.
    pub parent_of_fine: Vec<usize>,
    /// Affine charts from fine reference coordinates to parent reference
    /// coordinates.
    pub chart: Vec<GeometricMap>,
}

impl MeshEmbedding {
    /// Locate each fine tet inside a coarse parent and verify nesting: all
    /// fine vertices inside the parent and fine volumes summing to parent
    /// volumes.
    pub fn build(coarse: &Mesh, fine: &Mesh) -> Result<MeshEmbedding> {
        let cmaps: Vec<GeometricMap> = (0..coarse.num_tets())
            .map(|t| GeometricMap::from_tet(coarse, t))
            .collect();
        let fmaps: Vec<GeometricMap> = (0..fine.num_tets())
            .map(|t| GeometricMap::from_tet(fine, t))
            .collect();
        let inside = |m: &GeometricMap, p: &Point| -> bool {
            let x = m.pullback_point(p);
            let l0 = 1.0 - x[0] - x[1] - x[2];
            x.iter().all(|&c| c >= -1e-10) && l0 >= -1e-10
        };
        let mut parent_of_fine = Vec::with_capacity(fine.num_tets());
        let mut chart = Vec::with_capacity(fine.num_tets());
        let mut parent_volume = vec![0.0; coarse.num_tets()];
        for ft in 0..fine.num_tets() {
            let centroid: Point =
                fine.tets[ft].iter().map(|&v| fine.vertices[v]).sum::<Point>() / 4.0;
            let Some(ct) = (0..coarse.num_tets()).find(|&c| inside(&cmaps[c], &centroid)) else {
                return Err(Error::NotNested);
            };
            for &v in &fine.tets[ft] {
                if !inside(&cmaps[ct], &fine.vertices[v]) {
                    return Err(Error::NotNested);
                }
            }
            parent_volume[ct] += fine.volume(ft);
            // Chart: F_c^{-1} ∘ F_f.
            let linear = cmaps[ct].inv_linear * fmaps[ft].linear;
            let translation =
                cmaps[ct].inv_linear * (fmaps[ft].translation - cmaps[ct].translation);
            let det = linear.determinant();
            let inv_linear = linear.try_inverse().ok_or(Error::SingularMap)?;
            chart.push(GeometricMap {
                linear,
                translation,
                det,
                inv_linear,
            });
            parent_of_fine.push(ct);
        }
        for ct in 0..coarse.num_tets() {
            let v = coarse.volume(ct);
            if (parent_volume[ct] - v).abs() > 1e-10 * v {
                return Err(Error::NotNested);
            }
        }
        Ok(MeshEmbedding {
            parent_of_fine,
            chart,
        })
    }
}

/// Exact embedding matrix `E` of a coarse space into a rich space of the
/// same level (higher degree on the same mesh, or a nested refinement):
/// `E c` are the rich dofs of the coarse field `c`.
pub fn embedding_matrix(
    coarse: &SpaceHandle,
    rich: &SpaceHandle,
    emb: Option<&MeshEmbedding>,
) -> Result<DMatrix<f64>> {
    if coarse.level != rich.level || coarse.bc != rich.bc {
        return Err(Error::InvalidArgument(
            "embedding requires equal level and bc".into(),
        ));
    }
    if rich.degree < coarse.degree {
        return Err(Error::NotNested);
    }
    let mut e = DMatrix::zeros(rich.global_dim, coarse.global_dim);
    match emb {
        None => {
            if !std::ptr::eq(coarse.mesh, rich.mesh) {
                return Err(Error::NotNested);
            }
            for tet in 0..coarse.mesh.num_tets() {
                for (j, &(cfd, _)) in coarse.dof_map[tet].iter().enumerate() {
                    let Some(cj) = coarse.free_index(cfd) else {
                        continue;
                    };
                    let field = coarse.local_basis_pullback(tet, j);
                    let vals = rich.element_dofs_from_pullback(tet, &field);
                    for (i, &(rfd, _)) in rich.dof_map[tet].iter().enumerate() {
                        if let Some(ri) = rich.free_index(rfd) {
                            e[(ri, cj)] = vals[i];
                        }
                    }
                }
            }
        }
        Some(emb) => {
            for ft in 0..rich.mesh.num_tets() {
                let ct = emb.parent_of_fine[ft];
                let chart = &emb.chart[ft];
                for (j, &(cfd, _)) in coarse.dof_map[ct].iter().enumerate() {
                    let Some(cj) = coarse.free_index(cfd) else {
                        continue;
                    };
                    let coarse_field = coarse.local_basis_pullback(ct, j);
                    // Restrict to the fine element by composing with the chart.
                    let fine_field = compose_field(&coarse_field, chart);
                    let vals = rich.element_dofs_from_pullback(ft, &fine_field);
                    for (i, &(rfd, _)) in rich.dof_map[ft].iter().enumerate() {
                        if let Some(ri) = rich.free_index(rfd) {
                            e[(ri, cj)] = vals[i];
                        }
                    }
                }
            }
        }
    }
    Ok(e)
}

fn compose_field(f: &Field, chart: &GeometricMap) -> Field {
    match f {
        Field::Scalar(p) => Field::Scalar(crate::fespace::compose_scalar_with(p, chart)),
        Field::Vector(v) => Field::Vector(crate::fespace::compose_vector_with(v, chart)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    Graph,
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::L2 => write!(f, "L2"),
            NormKind::Graph => write!(f, "graph"),
        }
    }
}

/// Verification record of a commuting projection.
#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub level: usize,
    pub input: String,
    pub commuting_residual: f64,
    /// Relative distance `||u - Π u|| / ||u||`; vanishes when the input
    /// already lies in the target space.
    pub projection_residual: f64,
    pub stability_ratio: f64,
    pub norm_kind: NormKind,
    /// Theoretical bound the ratio is compared against, when one applies.
    pub bound: Option<f64>,
}

/// Rich-space description for projections and oracle comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleSpec {
    SameSpace,
    /// Same mesh, degree `p + k`.
    DegreePlus(usize),
    /// One uniform refinement, same degree.
    Refined,
}

impl std::fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleSpec::SameSpace => write!(f, "same-space"),
            OracleSpec::DegreePlus(k) => write!(f, "degree+{k}"),
            OracleSpec::Refined => write!(f, "refined"),
        }
    }
}

/// The graph-stable minimizing projection
/// `Π_p^l(u) = argmin { ||u - v|| : v coarse, d v = Π_p^{l+1}(d u) }`,
/// built first for l = 2 (with the elementwise L² projection as `Π_p^3`) and
/// then recursively for l = 1. The input is a field in a rich discrete space
/// on the same domain.
pub fn minimizing_projection(
    coarse: &ComplexOps,
    rich: &ComplexOps,
    emb: Option<&MeshEmbedding>,
    l: usize,
    u_rich: &DVector<f64>,
) -> Result<(DVector<f64>, ProjectionReport)> {
    assert!((1..=2).contains(&l));
    let v = min_proj_chain(coarse, rich, emb, l, u_rich)?;

    // Commuting residual, both sides assembled independently.
    let du = &rich.diffs[l] * u_rich;
    let target = min_proj_chain(coarse, rich, emb, l + 1, &du)?;
    let lhs = &coarse.diffs[l] * &v;
    let scale = m_norm(&target, &coarse.masses[l + 1]).max(1.0);
    let commuting_residual = m_norm(&(&lhs - &target), &coarse.masses[l + 1]) / scale;

    // Projection residual: distance between input and projection, measured
    // in the rich space through the exact embedding.
    let e = embedding_matrix(&coarse.spaces[l], &rich.spaces[l], emb)?;
    let unorm = m_norm(u_rich, &rich.masses[l]).max(1e-300);
    let projection_residual = m_norm(&(&e * &v - u_rich), &rich.masses[l]) / unorm;

    // Graph-norm stability ratio against the proof bound sqrt(10 + 8 C^2).
    let h2 = coarse.h_omega * coarse.h_omega;
    let num = {
        let dvn = m_norm(&lhs, &coarse.masses[l + 1]);
        let vn = m_norm(&v, &coarse.masses[l]);
        (vn * vn + h2 * dvn * dvn).sqrt()
    };
    let den = {
        let dun = m_norm(&du, &rich.masses[l + 1]);
        (unorm * unorm + h2 * dun * dun).sqrt()
    };
    let c = eigen_constant(coarse, l, 0)?.0.constant;
    let bound = (10.0 + 8.0 * c * c).sqrt();
    Ok((
        v,
        ProjectionReport {
            level: l,
            input: format!("rich field (degree {}, {} dofs)", rich.degree, u_rich.len()),
            commuting_residual,
            projection_residual,
            stability_ratio: num / den.max(1e-300),
            norm_kind: NormKind::Graph,
            bound: Some(bound),
        },
    ))
}

fn min_proj_chain(
    coarse: &ComplexOps,
    rich: &ComplexOps,
    emb: Option<&MeshEmbedding>,
    l: usize,
    u_rich: &DVector<f64>,
) -> Result<DVector<f64>> {
    let e = embedding_matrix(&coarse.spaces[l], &rich.spaces[l], emb)?;
    let load = e.transpose() * (&rich.masses[l] * u_rich);
    if l == 3 {
        // Plain L²-orthogonal projection onto the broken space.
        let chol = coarse.masses[3].clone().cholesky().ok_or(Error::NotSpd)?;
        return Ok(chol.solve(&load));
    }
    let du = &rich.diffs[l] * u_rich;
    let target = min_proj_chain(coarse, rich, emb, l + 1, &du)?;
    let fact = ConstrainedMin::new(coarse, l)?;
    fact.solve_with_objective(&load, &target)
}

/// Route-1 style comparison of discrete minimizers against a richer discrete
/// oracle standing in for the continuous minimizer.
#[derive(Clone, Debug)]
pub struct Route1Report {
    pub l: usize,
    pub p: usize,
    pub bc: Bc,
    pub oracle: String,
    pub nested: bool,
    pub ratios: Vec<f64>,
    /// Largest sampled `||u*_coarse|| / ||u*_oracle||`: a lower estimate of
    /// the minimizer-comparison constant.
    pub max_ratio: f64,
    pub seed: u64,
}

pub fn route1_min_ratio(
    mesh: &Mesh,
    l: usize,
    p: usize,
    bc: Bc,
    oracle: OracleSpec,
    n_samples: usize,
    seed: u64,
) -> Result<Route1Report> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let coarse = ComplexOps::build(mesh, p, bc)?;
    match oracle {
        OracleSpec::SameSpace => run_route1(&coarse, &coarse, None, l, oracle, n_samples, seed),
        OracleSpec::DegreePlus(k) => {
            let rich = ComplexOps::build(mesh, p + k, bc)?;
            run_route1(&coarse, &rich, None, l, oracle, n_samples, seed)
        }
        OracleSpec::Refined => {
            let fine = uniform_refine(mesh)?;
            let emb = MeshEmbedding::build(mesh, &fine)?;
            let rich = ComplexOps::build(&fine, p, bc)?;
            run_route1(&coarse, &rich, Some(&emb), l, oracle, n_samples, seed)
        }
    }
}

fn run_route1(
    coarse: &ComplexOps,
    rich: &ComplexOps,
    emb: Option<&MeshEmbedding>,
    l: usize,
    oracle: OracleSpec,
    n_samples: usize,
    seed: u64,
) -> Result<Route1Report> {
    let e_next = embedding_matrix(&coarse.spaces[l + 1], &rich.spaces[l + 1], emb)?;
    let fact_c = ConstrainedMin::new(coarse, l)?;
    let fact_r = ConstrainedMin::new(rich, l)?;
    let mut rng = SplitMix64::new(seed);
    let mut ratios = Vec::with_capacity(n_samples);
    while ratios.len() < n_samples {
        let v = rng.vector(coarse.spaces[l].global_dim);
        let r = &coarse.diffs[l] * &v;
        if m_norm(&r, &coarse.masses[l + 1]) < 1e-12 {
            continue;
        }
        let u_c = fact_c.solve(&r)?;
        let r_rich = &e_next * &r;
        let u_r = fact_r.solve(&r_rich)?;
        let num = m_norm(&u_c, &coarse.masses[l]);
        let den = m_norm(&u_r, &rich.masses[l]);
        ratios.push(num / den.max(1e-300));
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(Route1Report {
        l,
        p: coarse.degree,
        bc: coarse.bc,
        oracle: oracle.to_string(),
        nested: true,
        ratios,
        max_ratio,
        seed,
    })
}

/// Measured data of the piecewise-Piola transport to a companion reference
/// mesh with identical connectivity arrays.
#[derive(Clone, Debug)]
pub struct Route3Report {
    pub p: usize,
    pub bc: Bc,
    pub h_omega: f64,
    pub h_ref: f64,
    /// Max dof-vector residual of `ψ^{l+1}(d v) = d(ψ^l v)`, l = 1, 2.
    pub commuting_residual: [f64; 2],
    /// Max conformity jump of transported fields, levels 1 and 2.
    pub conformity_jump: [f64; 2],
    /// Measured operator norms `||ψ^l||`, l = 1, 2, 3.
    pub psi_norms: [f64; 3],
    /// Measured `||ψ^{-l}||`, l = 1, 2, 3.
    pub psi_inv_norms: [f64; 3],
    /// `(l, C_direct, C_ref)` per level l = 1, 2 (empty cells skipped).
    pub constants: Vec<(usize, f64, f64)>,
    /// Slack of `C_direct h <= ||ψ^{-l}|| ||ψ^{l+1}|| C_ref h_ref` per level
    /// (nonnegative when the transported bound holds).
    pub bound_slack: Vec<(usize, f64)>,
}

/// Build the restricted Piola transport to a companion reference mesh
/// (default: this mesh rescaled by `1/h_omega` and recentered), re-verify
/// conformity and the commuting identity on dof vectors, measure the
/// operator norms as generalized singular values, and check the
/// transported-constant inequality with those measured norms.
pub fn route3_transport(
    mesh: &Mesh,
    p: usize,
    bc: Bc,
    reference: Option<&Mesh>,
) -> Result<Route3Report> {
    let owned_ref;
    let refm = match reference {
        Some(r) => r,
        None => {
            owned_ref = mesh.unit_normalized()?;
            &owned_ref
        }
    };
    if refm.tets != mesh.tets {
        return Err(Error::ConnectivityMismatch);
    }
    let phys = ComplexOps::build(mesh, p, bc)?;
    let refc = ComplexOps::build(refm, p, bc)?;

    // Honest transport matrices per level 1..=3: pull each physical local
    // basis field back through the per-element map and re-extract dofs on
    // the reference mesh (and vice versa for the inverses).
    let mut transports = Vec::new();
    let mut inverses = Vec::new();
    for l in 1..=3 {
        transports.push(transport_matrix(&phys.spaces[l], &refc.spaces[l])?);
        inverses.push(transport_matrix(&refc.spaces[l], &phys.spaces[l])?);
    }

    let mut commuting_residual = [0.0f64; 2];
    let mut conformity_jump = [0.0f64; 2];
    let mut rng = SplitMix64::new(0x5eed);
    for l in 1..=2usize {
        let dim = phys.spaces[l].global_dim;
        if dim == 0 {
            continue;
        }
        for _ in 0..5 {
            let c = rng.vector(dim);
            let lhs = &transports[l] * (&phys.diffs[l] * &c);
            let rhs = &refc.diffs[l] * (&transports[l - 1] * &c);
            let scale = m_norm(&rhs, &refc.masses[l + 1]).max(1.0);
            commuting_residual[l - 1] = commuting_residual[l - 1]
                .max(m_norm(&(&lhs - &rhs), &refc.masses[l + 1]) / scale);
            let t = &transports[l - 1] * &c;
            conformity_jump[l - 1] =
                conformity_jump[l - 1].max(refc.spaces[l].max_conformity_jump(&t));
        }
    }

    let mut psi_norms = [0.0f64; 3];
    let mut psi_inv_norms = [0.0f64; 3];
    for l in 1..=3usize {
        psi_norms[l - 1] = operator_norm(&transports[l - 1], &refc.masses[l], &phys.masses[l])?;
        psi_inv_norms[l - 1] = operator_norm(&inverses[l - 1], &phys.masses[l], &refc.masses[l])?;
    }

    let h_ref = refc.h_omega;
    let mut constants = Vec::new();
    let mut bound_slack = Vec::new();
    for l in 1..=2usize {
        match (eigen_constant(&phys, l, 0), eigen_constant(&refc, l, 0)) {
            (Ok((cd, _)), Ok((cr, _))) => {
                let lhs = cd.constant * phys.h_omega;
                let rhs = psi_inv_norms[l - 1] * psi_norms[l] * cr.constant * h_ref;
                constants.push((l, cd.constant, cr.constant));
                bound_slack.push((l, rhs - lhs));
            }
            _ => continue,
        }
    }

    Ok(Route3Report {
        p,
        bc,
        h_omega: phys.h_omega,
        h_ref,
        commuting_residual,
        conformity_jump,
        psi_norms,
        psi_inv_norms,
        constants,
        bound_slack,
    })
}

/// `||T||` as a map `(V, M_from) -> (W, M_to)`: the largest generalized
/// singular value, from `T^T M_to T x = lambda M_from x`.
fn operator_norm(t: &DMatrix<f64>, m_to: &DMatrix<f64>, m_from: &DMatrix<f64>) -> Result<f64> {
    if t.ncols() == 0 {
        return Ok(0.0);
    }
    let k = t.transpose() * m_to * t;
    let k = (&k + k.transpose()) * 0.5;
    let eig = sym_gen_eig(&k, m_from)?;
    Ok(eig.eigenvalues[eig.eigenvalues.len() - 1].max(0.0).sqrt())
}

/// Dof-vector representation of the restricted Piola transport between two
/// meshes with identical connectivity arrays.
pub fn transport_matrix(from: &SpaceHandle, to: &SpaceHandle) -> Result<DMatrix<f64>> {
    if from.level != to.level || from.degree != to.degree || from.bc != to.bc {
        return Err(Error::InvalidArgument(
            "transport requires identical space parameters".into(),
        ));
    }
    if from.mesh.tets != to.mesh.tets {
        return Err(Error::ConnectivityMismatch);
    }
    let level = from.level;
    let mut t = DMatrix::zeros(to.global_dim, from.global_dim);
    for tet in 0..from.mesh.num_tets() {
        // F maps the target element onto the source element.
        let f = from.maps[tet].relative_to(&to.maps[tet]);
        for (j, &(ffd, _)) in from.dof_map[tet].iter().enumerate() {
            let Some(cj) = from.free_index(ffd) else {
                continue;
            };
            let field = from.local_basis_pullback(tet, j);
            // The componentwise pullback on the target element picks up only
            // the constant Piola factor of F.
            let mapped = match (level, &field) {
                (0, Field::Scalar(p)) => Field::Scalar(p.clone()),
                (3, Field::Scalar(p)) => Field::Scalar(p.scale(f.det)),
                (1, Field::Vector(v)) => {
                    let jt = f.linear.transpose();
                    Field::Vector(v.matmul(&crate::fespace::mat3_rows(&jt)))
                }
                (2, Field::Vector(v)) => Field::Vector(
                    v.matmul(&crate::fespace::mat3_rows(&f.inv_linear)).scale(f.det),
                ),
                _ => unreachable!(),
            };
            let vals = to.element_dofs_from_pullback(tet, &mapped);
            for (i, &(tfd, _)) in to.dof_map[tet].iter().enumerate() {
                if let Some(ri) = to.free_index(tfd) {
                    t[(ri, cj)] = vals[i];
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Shape};

    #[test]
    fn empty_space_reported() {
        let mesh = generate(Shape::ReferenceTet).unwrap();
        let err = constant(&mesh, 1, 0, Bc::Homogeneous).unwrap_err();
        assert!(err.to_string().contains("empty space"));
    }

    #[test]
    fn l0_constant_on_cube_below_convex_bound() {
        let mesh = generate(Shape::CubeFreudenthal(2)).unwrap();
        let rep = constant(&mesh, 0, 0, Bc::None).unwrap();
        assert_eq!(rep.kernel_dim, 1);
        assert!(rep.constant > 0.0);
        assert!(rep.constant <= 1.0 / std::f64::consts::PI + 1e-9);
        assert!((rep.h_omega - 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn four_way_equivalence_on_small_cells() {
        let cube = generate(Shape::CubeFreudenthal(1)).unwrap();
        let star = generate(Shape::VertexStarSynthetic(8)).unwrap();
        for (mesh, p) in [(&cube, 0usize), (&cube, 1), (&star, 0)] {
            for bc in [Bc::None, Bc::Homogeneous] {
                let ops = ComplexOps::build(mesh, p, bc).unwrap();
                for l in 1..=2usize {
                    if ops.spaces[l].global_dim == 0 {
                        continue;
                    }
                    let rep = match verified_constant(&ops, l, 1) {
                        Ok(r) => r,
                        Err(Error::InvalidArgument(_)) => continue, // trivial range
                        Err(e) => panic!("l {l} p {p} bc {bc}: {e}"),
                    };
                    let c = rep.constant;
                    let is = rep.infsup.unwrap();
                    assert!(
                        (is * c * rep.h_omega - 1.0).abs() <= 1e-8,
                        "infsup identity l {l} p {p} bc {bc}: {}",
                        is * c * rep.h_omega
                    );
                    let pn = rep.potential_norm.unwrap();
                    assert!(
                        (pn / (c * rep.h_omega) - 1.0).abs() <= 1e-8,
                        "potential norm l {l} p {p} bc {bc}"
                    );
                    let er = rep.extremal_ratio.unwrap();
                    assert!(
                        (er - c).abs() <= 1e-8 * c,
                        "extremal ratio l {l} p {p} bc {bc}: {er} vs {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn constrained_min_basics() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let ops = ComplexOps::build(&mesh, 0, Bc::None).unwrap();
        let l = 2;
        let fact = ConstrainedMin::new(&ops, l).unwrap();
        // r = 0 -> u* = 0.
        let zero = DVector::zeros(ops.spaces[l + 1].global_dim);
        let u = fact.solve(&zero).unwrap();
        assert!(u.norm() < 1e-12);
        // Minimality and the Euler orthogonality conditions.
        let mut rng = SplitMix64::new(2);
        for _ in 0..5 {
            let v = rng.vector(ops.spaces[l].global_dim);
            let r = &ops.diffs[l] * &v;
            let u = fact.solve(&r).unwrap();
            assert!(m_norm(&u, &ops.masses[l]) <= m_norm(&v, &ops.masses[l]) + 1e-12);
            let z = crate::solvers::nullspace(&ops.diffs[l]);
            for k in 0..z.ncols() {
                let zk = DVector::from(z.column(k).clone_owned());
                let ip = u.dot(&(&ops.masses[l] * &zk));
                assert!(ip.abs() < 1e-9 * m_norm(&u, &ops.masses[l]).max(1.0));
            }
        }
        // Incompatible datum: with homogeneous bc the divergence range is the
        // mean-zero subspace, so a constant datum must be rejected.
        let opsh = ComplexOps::build(&mesh, 0, Bc::Homogeneous).unwrap();
        let facth = ConstrainedMin::new(&opsh, 2).unwrap();
        let bad = DVector::from_element(opsh.spaces[3].global_dim, 1.0);
        assert!(matches!(
            facth.solve(&bad),
            Err(Error::IncompatibleConstraint)
        ));
    }

    #[test]
    fn stability_sup_bounded_by_constant() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let ops = ComplexOps::build(&mesh, 0, Bc::None).unwrap();
        let (rep, _) = eigen_constant(&ops, 2, 7).unwrap();
        let sup = stability_sup(&ops, 2, 32, 7, false).unwrap();
        assert!(sup <= rep.constant + 1e-8);
        let sup_ext = stability_sup(&ops, 2, 1, 7, true).unwrap();
        assert!((sup_ext - rep.constant).abs() <= 1e-8 * rep.constant);
        assert!(matches!(
            stability_sup(&ops, 2, 0, 7, false),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn potential_operator_right_inverse() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let ops = ComplexOps::build(&mesh, 0, Bc::None).unwrap();
        let l = 1;
        let fact = ConstrainedMin::new(&ops, l).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..5 {
            let v = rng.vector(ops.spaces[l].global_dim);
            let r = &ops.diffs[l] * &v;
            if m_norm(&r, &ops.masses[l + 1]) < 1e-10 {
                continue;
            }
            let phi = fact.solve(&r).unwrap();
            let back = &ops.diffs[l] * &phi;
            assert!(
                m_norm(&(back - &r), &ops.masses[l + 1])
                    <= 1e-9 * m_norm(&r, &ops.masses[l + 1]).max(1.0)
            );
        }
    }

    #[test]
    fn single_tet_curl_homogeneous_has_no_range() {
        let mesh = generate(Shape::ReferenceTet).unwrap();
        let ops = ComplexOps::build(&mesh, 0, Bc::Homogeneous).unwrap();
        assert!(inf_sup(&ops, 1).is_err());
    }

    // Without boundary conditions the divergence maps onto the whole broken
    // space, so the inf-sup multiplier space is all of P_p.
    #[test]
    fn divergence_range_covers_broken_space() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        for p in 0..=1usize {
            let ops = ComplexOps::build(&mesh, p, Bc::None).unwrap();
            let range = ops.range_basis(2).unwrap();
            assert_eq!(range.ncols(), ops.spaces[3].global_dim, "p = {p}");
        }
        // With homogeneous bc the range is the mean-zero subspace.
        let ops = ComplexOps::build(&mesh, 0, Bc::Homogeneous).unwrap();
        let range = ops.range_basis(2).unwrap();
        assert_eq!(range.ncols(), ops.spaces[3].global_dim - 1);
    }

    #[test]
    fn scale_invariance_of_constants() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let scaled = mesh
            .with_vertices(mesh.vertices.iter().map(|v| v * 3.25).collect())
            .unwrap();
        for l in 0..=2usize {
            let a = constant(&mesh, l, 0, Bc::None).unwrap();
            let b = constant(&scaled, l, 0, Bc::None).unwrap();
            assert!(
                (a.constant - b.constant).abs() <= 1e-10 * a.constant,
                "level {l}: {} vs {}",
                a.constant,
                b.constant
            );
        }
    }

    #[test]
    fn report_json_keys() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let ops = ComplexOps::build(&mesh, 0, Bc::None).unwrap();
        let rep = verified_constant(&ops, 2, 42).unwrap();
        let json = rep.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = v.as_object().unwrap();
        let expected = [
            "l",
            "p",
            "bc",
            "h_omega",
            "lambda_min_pos",
            "constant",
            "kernel_dim",
            "dim",
            "infsup",
            "potential_norm",
            "seed",
        ];
        assert_eq!(obj.len(), expected.len());
        // Keys appear in the documented order in the emitted text.
        let mut last = 0;
        for key in expected {
            assert!(obj.contains_key(key), "missing key {key}");
            let pos = json.find(&format!("\"{key}\":")).unwrap();
            assert!(pos >= last, "key {key} out of order");
            last = pos;
        }
        assert_eq!(obj["bc"], "none");
        assert_eq!(obj["seed"], 42);
    }

    #[test]
    fn embedding_matrices_are_exact() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let coarse = ComplexOps::build(&mesh, 0, Bc::None).unwrap();
        let rich = ComplexOps::build(&mesh, 1, Bc::None).unwrap();
        let mut rng = SplitMix64::new(4);
        for l in 0..=3usize {
            let e = embedding_matrix(&coarse.spaces[l], &rich.spaces[l], None).unwrap();
            let c = rng.vector(coarse.spaces[l].global_dim);
            let r = &e * &c;
            // Norms agree: the embedded field is the same function.
            let nc = m_norm(&c, &coarse.masses[l]);
            let nr = m_norm(&r, &rich.masses[l]);
            assert!((nc - nr).abs() <= 1e-10 * nc.max(1.0), "level {l}");
        }
        // Refined mesh, same degree.
        let fine = uniform_refine(&mesh).unwrap();
        let emb = MeshEmbedding::build(&mesh, &fine).unwrap();
        let richf = ComplexOps::build(&fine, 0, Bc::None).unwrap();
        for l in 0..=3usize {
            let e = embedding_matrix(&coarse.spaces[l], &richf.spaces[l], Some(&emb)).unwrap();
            let c = rng.vector(coarse.spaces[l].global_dim);
            let r = &e * &c;
            let nc = m_norm(&c, &coarse.masses[l]);
            let nr = m_norm(&r, &richf.masses[l]);
            assert!((nc - nr).abs() <= 1e-10 * nc.max(1.0), "refined level {l}");
            if l < 3 {
                let en =
                    embedding_matrix(&coarse.spaces[l + 1], &richf.spaces[l + 1], Some(&emb))
                        .unwrap();
                let lhs = &richf.diffs[l] * &r;
                let rhs = &en * (&coarse.diffs[l] * &c);
                assert!(
                    m_norm(&(lhs - &rhs), &richf.masses[l + 1]) <= 1e-9,
                    "commuting embedding level {l}"
                );
            }
        }
        // Non-nested pair rejected.
        let m3 = generate(Shape::CubeFreudenthal(3)).unwrap();
        let m2 = generate(Shape::CubeFreudenthal(2)).unwrap();
        assert!(matches!(
            MeshEmbedding::build(&m2, &m3),
            Err(Error::NotNested)
        ));
    }

    #[test]
    fn route1_ratios() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        // Same-space oracle: all ratios are 1.
        let rep = route1_min_ratio(&mesh, 2, 0, Bc::None, OracleSpec::SameSpace, 4, 5).unwrap();
        for r in &rep.ratios {
            assert!((r - 1.0).abs() < 1e-9);
        }
        // Refined oracle: minimization over a superset gives ratios >= 1.
        let rep = route1_min_ratio(&mesh, 2, 0, Bc::None, OracleSpec::Refined, 16, 5).unwrap();
        for r in &rep.ratios {
            assert!(*r >= 1.0 - 1e-9, "ratio {r}");
        }
        assert!(rep.max_ratio >= 1.0 - 1e-9);
        // Degree-enriched oracle.
        let rep2 = route1_min_ratio(&mesh, 1, 0, Bc::None, OracleSpec::DegreePlus(1), 4, 5).unwrap();
        for r in &rep2.ratios {
            assert!(*r >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn minimizing_projection_properties() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let coarse = ComplexOps::build(&mesh, 0, Bc::None).unwrap();
        let rich = ComplexOps::build(&mesh, 1, Bc::None).unwrap();
        let mut rng = SplitMix64::new(11);
        for l in 1..=2usize {
            // Projection property: coarse members are reproduced.
            let e = embedding_matrix(&coarse.spaces[l], &rich.spaces[l], None).unwrap();
            let c = rng.vector(coarse.spaces[l].global_dim);
            let u = &e * &c;
            let (v, rep) = minimizing_projection(&coarse, &rich, None, l, &u).unwrap();
            assert!(
                (&v - &c).abs().max() <= 1e-10 * c.abs().max().max(1.0),
                "projection property level {l}"
            );
            assert!(rep.projection_residual <= 1e-10);

            // Random rich input: commuting residual small, graph ratio within
            // the proof bound.
            for _ in 0..3 {
                let u = rng.vector(rich.spaces[l].global_dim);
                let (_, rep) = minimizing_projection(&coarse, &rich, None, l, &u).unwrap();
                assert!(rep.commuting_residual <= 1e-9, "level {l}");
                assert!(
                    rep.stability_ratio <= rep.bound.unwrap() + 1e-6,
                    "graph bound level {l}: {} vs {:?}",
                    rep.stability_ratio,
                    rep.bound
                );
            }
        }
    }

    #[test]
    fn route3_rejects_connectivity_mismatch() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let other = generate(Shape::CubeFreudenthal(2)).unwrap();
        assert!(matches!(
            route3_transport(&mesh, 0, Bc::None, Some(&other)),
            Err(Error::ConnectivityMismatch)
        ));
    }

    #[test]
    fn route3_self_reference_is_trivial() {
        let mesh = generate(Shape::CubeFreudenthal(1)).unwrap();
        let rep = route3_transport(&mesh, 0, Bc::None, Some(&mesh)).unwrap();
        for l in 0..2 {
            assert!(rep.commuting_residual[l] <= 1e-12);
            assert!(rep.conformity_jump[l] <= 1e-12);
        }
        for l in 0..3 {
            assert!((rep.psi_norms[l] - 1.0).abs() <= 1e-10);
            assert!((rep.psi_inv_norms[l] - 1.0).abs() <= 1e-10);
        }
        for (_, slack) in &rep.bound_slack {
            assert!(*slack >= -1e-9);
        }
    }

    #[test]
    fn route3_piola_scaling_under_similarity() {
        // Scaling the mesh by s scales the measured ||psi^2|| by sqrt(s) and
        // the product ||psi^{l+1}|| ||psi^{-l}|| by s.
        let mesh = generate(Shape::StretchedCube { n: 1, aspect: 4.0 }).unwrap();
        let s = 0.5;
        let scaled = mesh
            .with_vertices(mesh.vertices.iter().map(|v| v * s).collect())
            .unwrap();
        let r1 = route3_transport(&mesh, 0, Bc::None, None).unwrap();
        let r2 = route3_transport(&scaled, 0, Bc::None, None).unwrap();
        let expect = r1.psi_norms[1] * s.sqrt();
        assert!(
            (r2.psi_norms[1] - expect).abs() <= 1e-9 * expect,
            "{} vs {}",
            r2.psi_norms[1],
            expect
        );
        for l in 0..2 {
            let p1 = r1.psi_norms[l + 1] * r1.psi_inv_norms[l];
            let p2 = r2.psi_norms[l + 1] * r2.psi_inv_norms[l];
            assert!((p2 - s * p1).abs() <= 1e-9 * p1, "level {}", l + 1);
        }
        // Transported-constant inequality with measured norms.
        for (_, slack) in &r1.bound_slack {
            assert!(*slack >= -1e-9);
        }
    }
}
