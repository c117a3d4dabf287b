//! Dense symmetric solvers shared by all analysis code.
//!
//! Everything here is deterministic: identical inputs give bitwise-identical
//! outputs within one build. Problem sizes are capped at desk scale by the
//! callers, so dense factorizations are the right tool.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs of `K x = lambda M x`, ascending, with M-orthonormal vectors.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalues: DVector<f64>,
    /// Columns are the eigenvectors, `x_k^T M x_j = delta_kj`.
    pub eigenvectors: DMatrix<f64>,
    /// `||K x - lambda M x||_2` per pair.
    pub residuals: Vec<f64>,
}

/// Solution of the saddle system `[A B^T; B 0] [u; s] = [f; g]`.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub u: DVector<f64>,
    pub s: DVector<f64>,
    pub residual_primal: f64,
    pub residual_constraint: f64,
}

/// Solve the symmetric generalized eigenproblem `K x = lambda M x` with K
/// symmetric positive semidefinite and M symmetric positive definite, by
/// Cholesky reduction `M = L L^T` followed by a cyclic Jacobi sweep on
/// `L^-1 K L^-T`.
pub fn sym_gen_eig(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<EigenResult> {
    assert_eq!(k.nrows(), k.ncols());
    assert_eq!(m.nrows(), m.ncols());
    assert_eq!(k.nrows(), m.nrows());
    let n = k.nrows();
    if n == 0 {
        return Ok(EigenResult {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
            residuals: Vec::new(),
        });
    }
    let chol = m.clone().cholesky().ok_or(Error::NotSpd)?;
    let l = chol.l();
    // C = L^-1 K L^-T, symmetrized against round-off.
    let mut c = k.clone();
    l.solve_lower_triangular_mut(&mut c);
    c.transpose_mut();
    l.solve_lower_triangular_mut(&mut c);
    let c = (&c + c.transpose()) * 0.5;

    let (vals, vecs) = jacobi_eigen(c);

    // Back-transform: x = L^-T y. Orthonormal y gives M-orthonormal x.
    let mut x = vecs;
    l.transpose().solve_upper_triangular_mut(&mut x);

    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| vals[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        eigenvectors.set_column(j, &x.column(i));
    }

    let mut residuals = Vec::with_capacity(n);
    for j in 0..n {
        let xj = eigenvectors.column(j);
        let r = k * xj - m * xj * eigenvalues[j];
        residuals.push(r.norm());
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

/// Cyclic Jacobi for a dense symmetric matrix. Sweeps until the off-diagonal
/// Frobenius norm falls below 1e-14 relative to the initial norm, at most 50
/// sweeps.
fn jacobi_eigen(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    let norm0 = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..50 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= 1e-14 * norm0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;

                // Rotate rows/columns p and q of A and accumulate in V.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cos * akp - sin * akq;
                    a[(k, q)] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cos * apk - sin * aqk;
                    a[(q, k)] = sin * apk + cos * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cos * vkp - sin * vkq;
                    v[(k, q)] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    (vals, v)
}

/// Factorized KKT system for repeated saddle solves with one factorization.
pub struct SaddleFactorization {
    n: usize,
    k: usize,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl SaddleFactorization {
    /// `A` must be SPD on the kernel of `B`; `B` must have full row rank.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let k = b.nrows();
        assert_eq!(a.ncols(), n);
        if k > 0 {
            assert_eq!(b.ncols(), n);
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&a);
        if k > 0 {
            kkt.view_mut((n, 0), (k, n)).copy_from(&b);
            kkt.view_mut((0, n), (n, k)).copy_from(&b.transpose());
        }
        let lu = kkt.lu();
        Ok(SaddleFactorization { n, k, lu, a, b })
    }

    pub fn solve(&self, f: &DVector<f64>, g: &DVector<f64>) -> Result<SaddleSolution> {
        assert_eq!(f.len(), self.n);
        assert_eq!(g.len(), self.k);
        let mut rhs = DVector::zeros(self.n + self.k);
        rhs.rows_mut(0, self.n).copy_from(f);
        if self.k > 0 {
            rhs.rows_mut(self.n, self.k).copy_from(g);
        }
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or(Error::IncompatibleConstraint)?;
        let u = DVector::from(sol.rows(0, self.n).clone_owned());
        let s = DVector::from(sol.rows(self.n, self.k).clone_owned());
        let scale_primal = f.norm().max(self.a.norm() * u.norm()).max(1e-300);
        let residual_primal = if self.k > 0 {
            (&self.a * &u + self.b.transpose() * &s - f).norm() / scale_primal
        } else {
            (&self.a * &u - f).norm() / scale_primal
        };
        let scale_constraint = g.norm().max(u.norm() * self.b.norm()).max(1e-300);
        let residual_constraint = if self.k > 0 {
            (&self.b * &u - g).norm() / scale_constraint
        } else {
            0.0
        };
        if residual_primal > 1e-7 || residual_constraint > 1e-7 {
            return Err(Error::IncompatibleConstraint);
        }
        Ok(SaddleSolution {
            u,
            s,
            residual_primal,
            residual_constraint,
        })
    }
}

/// One-shot saddle solve `[A B^T; B 0] [u; s] = [f; g]`.
pub fn solve_saddle(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    f: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<SaddleSolution> {
    SaddleFactorization::new(a.clone(), b.clone())?.solve(f, g)
}

/// Full singular value decomposition `A = U diag(sigma) V^T` by one-sided
/// (Hestenes) Jacobi: rotations orthogonalize the columns of `A` while the
/// same rotations accumulate in `V`. Robust for the clustered and repeated
/// singular values of incidence-type matrices. Values are sorted descending;
/// `u` columns with vanishing singular value are zero.
#[derive(Clone, Debug)]
pub struct JacobiSvd {
    pub singular_values: Vec<f64>,
    /// `nrows x k`, k = min-like column count of the worked side.
    pub u: DMatrix<f64>,
    /// `ncols x k`, exactly orthonormal columns.
    pub v: DMatrix<f64>,
}

pub fn jacobi_svd(a: &DMatrix<f64>) -> JacobiSvd {
    // Work on the side with fewer columns; note the returned `v` then only
    // carries min(rows, cols) directions, which is fine for ranks and range
    // bases. [`nullspace`] always works on the given orientation.
    if a.ncols() > a.nrows() {
        let t = one_sided_svd(&a.transpose());
        return JacobiSvd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
        };
    }
    one_sided_svd(a)
}

fn one_sided_svd(a: &DMatrix<f64>) -> JacobiSvd {
    let n = a.nrows();
    let m = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::identity(m, m);
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    app += w[(i, p)] * w[(i, p)];
                    aqq += w[(i, q)] * w[(i, q)];
                    apq += w[(i, p)] * w[(i, q)];
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = cs * wp - sn * wq;
                    w[(i, q)] = sn * wp + cs * wq;
                }
                for i in 0..m {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = cs * vp - sn * vq;
                    v[(i, q)] = sn * vp + cs * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<f64> = (0..m).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut singular_values = Vec::with_capacity(m);
    let mut u = DMatrix::zeros(n, m);
    let mut vs = DMatrix::zeros(m, m);
    for (c, &j) in order.iter().enumerate() {
        singular_values.push(norms[j]);
        if norms[j] > 0.0 {
            u.set_column(c, &(w.column(j) / norms[j]));
        }
        vs.set_column(c, &v.column(j));
    }
    JacobiSvd {
        singular_values,
        u,
        v: vs,
    }
}

/// Rank threshold used throughout: `sigma_max * max(rows, cols) * 1e-12`.
pub fn rank_tolerance(m: &DMatrix<f64>, sigma_max: f64) -> f64 {
    sigma_max * m.nrows().max(m.ncols()) as f64 * 1e-12
}

/// Numerical rank with the self-validating threshold
/// `sigma <= sigma_max * max(rows, cols) * 1e-12`.
pub fn svd_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = jacobi_svd(m);
    let smax = svd.singular_values[0];
    let tol = rank_tolerance(m, smax);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the (right) nullspace.
pub fn nullspace(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Work on the given orientation so V is complete (cols x cols); the
    // one-sided sweep keeps it exactly orthonormal.
    let svd = one_sided_svd(m);
    let smax = svd.singular_values[0];
    let tol = rank_tolerance(m, smax);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let mut out = DMatrix::zeros(cols, cols - rank);
    for c in rank..cols {
        out.set_column(c - rank, &svd.v.column(c));
    }
    out
}

/// Left singular vectors with `sigma > tol`: an orthonormal (Euclidean)
/// basis of the range.
pub fn range_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = jacobi_svd(m);
    let smax = if svd.singular_values.is_empty() {
        0.0
    } else {
        svd.singular_values[0]
    };
    let tol = rank_tolerance(m, smax);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    DMatrix::from(svd.u.columns(0, rank).clone_owned())
}

/// Splitmix-style 64-bit PRNG used for all seeded sampling. The sequence is
/// part of the report format, so it must never change.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }

    pub fn vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.next_symmetric())
    }
}
