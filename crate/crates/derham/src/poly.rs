//! Exact polynomial arithmetic on the reference tetrahedron.
//!
//! Polynomials live in the reference coordinates `(x, y, z)` of the unit
//! tetrahedron with vertices `0, e1, e2, e3`, so that `x, y, z` coincide with
//! the barycentric coordinates of the last three vertices. All integrals
//! reduce to the closed form `∫ x^a y^b z^c = a! b! c! / (a+b+c+3)!` over the
//! reference tetrahedron, which keeps every assembled matrix entry exact up to
//! round-off.

/// Number of monomials of total degree <= q in `nvars` variables.
pub fn space_dim(q: usize, nvars: usize) -> usize {
    match nvars {
        1 => q + 1,
        2 => (q + 1) * (q + 2) / 2,
        3 => (q + 1) * (q + 2) * (q + 3) / 6,
        _ => unreachable!(),
    }
}

/// Monomial exponent triples of total degree <= q, ordered by total degree,
/// then by decreasing leading exponent. This order is fixed: space layouts,
/// the broken-field text format, and the basis caches all rely on it.
pub fn monomials3(q: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(space_dim(q, 3));
    for d in 0..=q {
        for a in (0..=d).rev() {
            for b in (0..=(d - a)).rev() {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

fn index3(a: usize, b: usize, c: usize) -> usize {
    let d = a + b + c;
    let t = d - a;
    d * (d + 1) * (d + 2) / 6 + t * (t + 1) / 2 + (t - b)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `∫_T x^a y^b z^c` over the unit reference tetrahedron.
pub fn ref_tet_monomial_integral(a: usize, b: usize, c: usize) -> f64 {
    factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
}

/// `∫_T s^i t^j` over the unit reference triangle.
pub fn ref_tri_monomial_integral(i: usize, j: usize) -> f64 {
    factorial(i) * factorial(j) / factorial(i + j + 2)
}

/// Scalar polynomial in three reference variables, dense over all monomials
/// of total degree <= `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly3 {
    q: usize,
    c: Vec<f64>,
}

impl Poly3 {
    pub fn zero(q: usize) -> Self {
        Poly3 {
            q,
            c: vec![0.0; space_dim(q, 3)],
        }
    }

    pub fn constant(v: f64) -> Self {
        Poly3 { q: 0, c: vec![v] }
    }

    pub fn monomial(a: usize, b: usize, c: usize) -> Self {
        let mut p = Poly3::zero(a + b + c);
        p.c[index3(a, b, c)] = 1.0;
        p
    }

    /// The coordinate polynomial `x`, `y`, or `z`.
    pub fn coordinate(axis: usize) -> Self {
        match axis {
            0 => Poly3::monomial(1, 0, 0),
            1 => Poly3::monomial(0, 1, 0),
            2 => Poly3::monomial(0, 0, 1),
            _ => panic!("axis out of range"),
        }
    }

    /// Affine polynomial `c0 + cx x + cy y + cz z`.
    pub fn affine(c0: f64, cx: f64, cy: f64, cz: f64) -> Self {
        Poly3 {
            q: 1,
            c: vec![c0, cx, cy, cz],
        }
    }

    pub fn degree_bound(&self) -> usize {
        self.q
    }

    pub fn coeff(&self, a: usize, b: usize, c: usize) -> f64 {
        if a + b + c > self.q {
            0.0
        } else {
            self.c[index3(a, b, c)]
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn set_coeff(&mut self, a: usize, b: usize, c: usize, v: f64) {
        assert!(a + b + c <= self.q);
        self.c[index3(a, b, c)] = v;
    }

    /// Copy into a representation with a (weakly) larger degree bound.
    pub fn promote(&self, q: usize) -> Self {
        assert!(q >= self.q);
        let mut out = Poly3::zero(q);
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            out.c[index3(m[0], m[1], m[2])] = self.c[idx];
        }
        out
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let q = self.q.max(other.q);
        let mut out = self.promote(q);
        for (idx, m) in monomials3(other.q).iter().enumerate() {
            out.c[index3(m[0], m[1], m[2])] += other.c[idx];
        }
        out
    }

    pub fn sub(&self, other: &Poly3) -> Poly3 {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly3 {
        Poly3 {
            q: self.q,
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &Poly3) {
        assert!(other.q <= self.q);
        for (idx, m) in monomials3(other.q).iter().enumerate() {
            self.c[index3(m[0], m[1], m[2])] += s * other.c[idx];
        }
    }

    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut out = Poly3::zero(self.q + other.q);
        let ma = monomials3(self.q);
        let mb = monomials3(other.q);
        for (ia, a) in ma.iter().enumerate() {
            let ca = self.c[ia];
            if ca == 0.0 {
                continue;
            }
            for (ib, b) in mb.iter().enumerate() {
                let cb = other.c[ib];
                if cb == 0.0 {
                    continue;
                }
                out.c[index3(a[0] + b[0], a[1] + b[1], a[2] + b[2])] += ca * cb;
            }
        }
        out
    }

    /// Partial derivative along `axis`.
    pub fn diff(&self, axis: usize) -> Poly3 {
        let q = self.q.saturating_sub(1);
        let mut out = Poly3::zero(q);
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            if m[axis] == 0 {
                continue;
            }
            let mut e = *m;
            e[axis] -= 1;
            out.c[index3(e[0], e[1], e[2])] += m[axis] as f64 * self.c[idx];
        }
        out
    }

    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            let c = self.c[idx];
            if c == 0.0 {
                continue;
            }
            acc += c * p[0].powi(m[0] as i32) * p[1].powi(m[1] as i32) * p[2].powi(m[2] as i32);
        }
        acc
    }

    pub fn integral_ref_tet(&self) -> f64 {
        let mut acc = 0.0;
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            let c = self.c[idx];
            if c != 0.0 {
                acc += c * ref_tet_monomial_integral(m[0], m[1], m[2]);
            }
        }
        acc
    }

    /// Substitute three polynomials (in reference variables) for `x, y, z`.
    /// With affine arguments this realizes composition with an affine map.
    pub fn subst3(&self, x: &Poly3, y: &Poly3, z: &Poly3) -> Poly3 {
        let dmax = x.q.max(y.q).max(z.q);
        let out_q = self.q * dmax.max(1);
        let mut out = Poly3::zero(out_q);
        let xp = powers3(x, self.q, out_q);
        let yp = powers3(y, self.q, out_q);
        let zp = powers3(z, self.q, out_q);
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            let c = self.c[idx];
            if c == 0.0 {
                continue;
            }
            out.axpy(c, &xp[m[0]].mul(&yp[m[1]]).mul(&zp[m[2]]).promote_clamp(out_q));
        }
        out
    }

    /// Substitute one-variable polynomials for `x, y, z` (edge parametrization).
    pub fn subst1(&self, x: &Poly1, y: &Poly1, z: &Poly1) -> Poly1 {
        let dmax = x.degree_bound().max(y.degree_bound()).max(z.degree_bound());
        let mut out = Poly1::zero(self.q * dmax.max(1));
        let xp = powers1(x, self.q);
        let yp = powers1(y, self.q);
        let zp = powers1(z, self.q);
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            let c = self.c[idx];
            if c == 0.0 {
                continue;
            }
            out.axpy(c, &xp[m[0]].mul(&yp[m[1]]).mul(&zp[m[2]]));
        }
        out
    }

    /// Substitute two-variable polynomials for `x, y, z` (face parametrization).
    pub fn subst2(&self, x: &Poly2, y: &Poly2, z: &Poly2) -> Poly2 {
        let dmax = x.degree_bound().max(y.degree_bound()).max(z.degree_bound());
        let mut out = Poly2::zero(self.q * dmax.max(1));
        let xp = powers2(x, self.q);
        let yp = powers2(y, self.q);
        let zp = powers2(z, self.q);
        for (idx, m) in monomials3(self.q).iter().enumerate() {
            let c = self.c[idx];
            if c == 0.0 {
                continue;
            }
            out.axpy(c, &xp[m[0]].mul(&yp[m[1]]).mul(&zp[m[2]]));
        }
        out
    }

    fn promote_clamp(&self, q: usize) -> Poly3 {
        if self.q == q {
            self.clone()
        } else if self.q < q {
            self.promote(q)
        } else {
            // Higher-degree coefficients must vanish; keep the low block.
            let mut out = Poly3::zero(q);
            for (idx, m) in monomials3(self.q).iter().enumerate() {
                if m[0] + m[1] + m[2] <= q {
                    out.c[index3(m[0], m[1], m[2])] = self.c[idx];
                } else {
                    debug_assert!(self.c[idx].abs() < 1e-12);
                }
            }
            out
        }
    }
}

fn powers3(p: &Poly3, n: usize, _q: usize) -> Vec<Poly3> {
    let mut out = vec![Poly3::constant(1.0)];
    for k in 1..=n {
        out.push(out[k - 1].mul(p));
    }
    out
}

fn powers1(p: &Poly1, n: usize) -> Vec<Poly1> {
    let mut out = vec![Poly1::constant(1.0)];
    for k in 1..=n {
        out.push(out[k - 1].mul(p));
    }
    out
}

fn powers2(p: &Poly2, n: usize) -> Vec<Poly2> {
    let mut out = vec![Poly2::constant(1.0)];
    for k in 1..=n {
        out.push(out[k - 1].mul(p));
    }
    out
}

/// Polynomial in a single parameter `s` (edge restrictions).
#[derive(Clone, Debug)]
pub struct Poly1 {
    c: Vec<f64>,
}

impl Poly1 {
    pub fn zero(q: usize) -> Self {
        Poly1 { c: vec![0.0; q + 1] }
    }

    pub fn constant(v: f64) -> Self {
        Poly1 { c: vec![v] }
    }

    /// `c0 + c1 s`.
    pub fn affine(c0: f64, c1: f64) -> Self {
        Poly1 { c: vec![c0, c1] }
    }

    pub fn degree_bound(&self) -> usize {
        self.c.len() - 1
    }

    pub fn mul(&self, other: &Poly1) -> Poly1 {
        let mut out = Poly1::zero(self.degree_bound() + other.degree_bound());
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in other.c.iter().enumerate() {
                out.c[i + j] += a * b;
            }
        }
        out
    }

    pub fn axpy(&mut self, s: f64, other: &Poly1) {
        for (i, v) in other.c.iter().enumerate() {
            self.c[i] += s * v;
        }
    }

    /// Multiply by `s^k` and integrate over `[0, 1]`.
    pub fn moment01(&self, k: usize) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(i, v)| v / (i + k + 1) as f64)
            .sum()
    }
}

/// Polynomial in two parameters `(s, t)` (face restrictions).
#[derive(Clone, Debug)]
pub struct Poly2 {
    q: usize,
    c: Vec<f64>,
}

fn index2(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + (d - i)
}

/// Monomial exponent pairs of total degree <= q, same ordering rule as
/// [`monomials3`].
pub fn monomials2(q: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::with_capacity(space_dim(q, 2));
    for d in 0..=q {
        for i in (0..=d).rev() {
            out.push([i, d - i]);
        }
    }
    out
}

impl Poly2 {
    pub fn zero(q: usize) -> Self {
        Poly2 {
            q,
            c: vec![0.0; space_dim(q, 2)],
        }
    }

    pub fn constant(v: f64) -> Self {
        Poly2 { q: 0, c: vec![v] }
    }

    /// `c0 + cs s + ct t`.
    pub fn affine(c0: f64, cs: f64, ct: f64) -> Self {
        Poly2 {
            q: 1,
            c: vec![c0, cs, ct],
        }
    }

    pub fn degree_bound(&self) -> usize {
        self.q
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::zero(self.q + other.q);
        let ma = monomials2(self.q);
        let mb = monomials2(other.q);
        for (ia, a) in ma.iter().enumerate() {
            if self.c[ia] == 0.0 {
                continue;
            }
            for (ib, b) in mb.iter().enumerate() {
                out.c[index2(a[0] + b[0], a[1] + b[1])] += self.c[ia] * other.c[ib];
            }
        }
        out
    }

    pub fn axpy(&mut self, s: f64, other: &Poly2) {
        assert!(other.q <= self.q);
        for (idx, m) in monomials2(other.q).iter().enumerate() {
            self.c[index2(m[0], m[1])] += s * other.c[idx];
        }
    }

    /// Multiply by `s^i t^j` and integrate over the unit triangle.
    pub fn moment_tri(&self, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for (idx, m) in monomials2(self.q).iter().enumerate() {
            let v = self.c[idx];
            if v != 0.0 {
                acc += v * ref_tri_monomial_integral(m[0] + i, m[1] + j);
            }
        }
        acc
    }
}

/// Vector-valued polynomial on the reference tetrahedron.
#[derive(Clone, Debug)]
pub struct VPoly3 {
    pub comp: [Poly3; 3],
}

impl VPoly3 {
    pub fn zero(q: usize) -> Self {
        VPoly3 {
            comp: [Poly3::zero(q), Poly3::zero(q), Poly3::zero(q)],
        }
    }

    pub fn from_components(x: Poly3, y: Poly3, z: Poly3) -> Self {
        VPoly3 { comp: [x, y, z] }
    }

    /// `p * e_axis`.
    pub fn axis(p: Poly3, axis: usize) -> Self {
        let q = p.degree_bound();
        let mut v = VPoly3::zero(q);
        v.comp[axis] = p;
        v
    }

    pub fn degree_bound(&self) -> usize {
        self.comp.iter().map(|p| p.degree_bound()).max().unwrap()
    }

    pub fn add(&self, other: &VPoly3) -> VPoly3 {
        VPoly3 {
            comp: [
                self.comp[0].add(&other.comp[0]),
                self.comp[1].add(&other.comp[1]),
                self.comp[2].add(&other.comp[2]),
            ],
        }
    }

    pub fn scale(&self, s: f64) -> VPoly3 {
        VPoly3 {
            comp: [
                self.comp[0].scale(s),
                self.comp[1].scale(s),
                self.comp[2].scale(s),
            ],
        }
    }

    pub fn sub(&self, other: &VPoly3) -> VPoly3 {
        self.add(&other.scale(-1.0))
    }

    pub fn eval(&self, p: [f64; 3]) -> [f64; 3] {
        [
            self.comp[0].eval(p),
            self.comp[1].eval(p),
            self.comp[2].eval(p),
        ]
    }

    /// Apply a constant 3x3 matrix to the components: `(A v)(x)`.
    pub fn matmul(&self, a: &[[f64; 3]; 3]) -> VPoly3 {
        let q = self.degree_bound();
        let mut out = VPoly3::zero(q);
        for r in 0..3 {
            let mut acc = Poly3::zero(q);
            for (k, col) in a[r].iter().enumerate() {
                if *col != 0.0 {
                    acc.axpy(*col, &self.comp[k].promote_clamp(q));
                }
            }
            out.comp[r] = acc;
        }
        out
    }

    pub fn dot_const(&self, d: [f64; 3]) -> Poly3 {
        let q = self.degree_bound();
        let mut acc = Poly3::zero(q);
        for k in 0..3 {
            if d[k] != 0.0 {
                acc.axpy(d[k], &self.comp[k].promote_clamp(q));
            }
        }
        acc
    }

    pub fn dot(&self, other: &VPoly3) -> Poly3 {
        let mut acc = self.comp[0].mul(&other.comp[0]);
        acc = acc.add(&self.comp[1].mul(&other.comp[1]));
        acc.add(&self.comp[2].mul(&other.comp[2]))
    }

    /// `x × v` with `x` the coordinate field.
    pub fn cross_with_x(&self) -> VPoly3 {
        let x = Poly3::coordinate(0);
        let y = Poly3::coordinate(1);
        let z = Poly3::coordinate(2);
        VPoly3 {
            comp: [
                y.mul(&self.comp[2]).sub(&z.mul(&self.comp[1])),
                z.mul(&self.comp[0]).sub(&x.mul(&self.comp[2])),
                x.mul(&self.comp[1]).sub(&y.mul(&self.comp[0])),
            ],
        }
    }
}

pub fn grad(p: &Poly3) -> VPoly3 {
    VPoly3 {
        comp: [p.diff(0), p.diff(1), p.diff(2)],
    }
}

pub fn curl(v: &VPoly3) -> VPoly3 {
    VPoly3 {
        comp: [
            v.comp[2].diff(1).sub(&v.comp[1].diff(2)),
            v.comp[0].diff(2).sub(&v.comp[2].diff(0)),
            v.comp[1].diff(0).sub(&v.comp[0].diff(1)),
        ],
    }
}

pub fn div(v: &VPoly3) -> Poly3 {
    v.comp[0].diff(0).add(&v.comp[1].diff(1)).add(&v.comp[2].diff(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent quadrature oracle: Gauss-Legendre tensor rule collapsed
    // onto the tetrahedron by the Duffy transform. Exact for polynomials of
    // modest degree given enough points per axis.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        // Nodes/weights on [0,1] via Newton iteration on Legendre polynomials.
        let mut out = Vec::new();
        for k in 0..n {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push(((x + 1.0) / 2.0, w / 2.0));
        }
        out
    }

    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    }

    fn duffy_integrate(f: impl Fn([f64; 3]) -> f64, n: usize) -> f64 {
        let gl = gauss_legendre(n);
        let mut acc = 0.0;
        for &(u, wu) in &gl {
            for &(v, wv) in &gl {
                for &(w, ww) in &gl {
                    // Collapse the unit cube onto the tetrahedron x+y+z <= 1.
                    let x = u;
                    let y = v * (1.0 - u);
                    let z = w * (1.0 - u) * (1.0 - v);
                    let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                    acc += wu * wv * ww * jac * f([x, y, z]);
                }
            }
        }
        acc
    }

    #[test]
    fn monomial_integrals_match_quadrature() {
        for &(a, b, c) in &[(0, 0, 0), (1, 0, 0), (2, 1, 0), (3, 2, 1), (4, 0, 2)] {
            let exact = ref_tet_monomial_integral(a, b, c);
            let quad = duffy_integrate(
                |p| p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32),
                8,
            );
            assert!(
                (exact - quad).abs() < 1e-14,
                "({a},{b},{c}): exact {exact} vs quad {quad}"
            );
        }
    }

    #[test]
    fn polynomial_integral_matches_quadrature() {
        let p = Poly3::monomial(2, 1, 0)
            .scale(3.0)
            .add(&Poly3::affine(0.5, -1.0, 2.0, 0.25))
            .mul(&Poly3::affine(1.0, 1.0, -2.0, 3.0));
        let exact = p.integral_ref_tet();
        let quad = duffy_integrate(|x| p.eval(x), 8);
        assert!((exact - quad).abs() < 1e-14);
    }

    #[test]
    fn subst3_composes_affine_maps() {
        let p = Poly3::monomial(2, 1, 1).add(&Poly3::monomial(0, 3, 0));
        let x = Poly3::affine(0.1, 2.0, 0.0, -1.0);
        let y = Poly3::affine(-0.3, 0.5, 1.5, 0.0);
        let z = Poly3::affine(0.7, 0.0, -0.25, 1.0);
        let q = p.subst3(&x, &y, &z);
        for pt in [[0.1, 0.2, 0.3], [0.0, 0.0, 0.0], [0.25, 0.5, 0.125]] {
            let mapped = [x.eval(pt), y.eval(pt), z.eval(pt)];
            assert!((q.eval(pt) - p.eval(mapped)).abs() < 1e-13);
        }
    }

    #[test]
    fn curl_of_grad_vanishes() {
        let p = Poly3::monomial(2, 1, 1)
            .add(&Poly3::monomial(1, 2, 0))
            .add(&Poly3::monomial(0, 0, 3));
        let c = curl(&grad(&p));
        for comp in &c.comp {
            for v in comp.coeffs() {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn div_of_curl_vanishes() {
        let v = VPoly3::from_components(
            Poly3::monomial(2, 0, 1),
            Poly3::monomial(0, 2, 1),
            Poly3::monomial(1, 1, 1),
        );
        let d = div(&curl(&v));
        for c in d.coeffs() {
            assert_eq!(*c, 0.0);
        }
    }

    #[test]
    fn edge_and_face_moments() {
        // Restrict x^2 y to the edge from e1 to e2: x = 1-s, y = s, z = 0.
        let p = Poly3::monomial(2, 1, 0);
        let r = p.subst1(
            &Poly1::affine(1.0, -1.0),
            &Poly1::affine(0.0, 1.0),
            &Poly1::constant(0.0),
        );
        // ∫_0^1 (1-s)^2 s ds = 1/12
        assert!((r.moment01(0) - 1.0 / 12.0).abs() < 1e-15);

        // Restrict x to the face spanned by e1, e2 at the origin: x = s.
        let f = Poly3::coordinate(0).subst2(
            &Poly2::affine(0.0, 1.0, 0.0),
            &Poly2::affine(0.0, 0.0, 1.0),
            &Poly2::constant(0.0),
        );
        // ∫_tri s = 1/6
        assert!((f.moment_tri(0, 0) - 1.0 / 6.0).abs() < 1e-15);
    }
}
