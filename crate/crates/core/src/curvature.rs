//! Curvature of the four connections, the statistical curvature
//! `S = ½(R + R̄)`, sectional curvature of `g̃`, and the structural
//! curvature identities.

use serde::Serialize;

use crate::error::GeometryError;
use crate::manifold::ManifoldDef;
use crate::statstruct::{ConnKind, StatGeom};
use crate::tensor::{gram_schmidt, inner, max_abs, rel_residual, Matrix, Tens3, Tens4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RiemKind {
    Conn(ConnKind),
    /// `S = ½(R + R̄)`.
    Statistical,
}

/// `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l`, stored at `(l, k, i, j)`.
#[derive(Debug, Clone, Serialize)]
pub struct Riem {
    pub kind: RiemKind,
    pub base: Vec<f64>,
    pub r: Tens4,
}

impl Riem {
    /// Components of `R(X, Y)Z`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        apply(&self.r, x, y, z)
    }
}

pub(crate) fn apply(r: &Tens4, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let n = r.dim();
    (0..n)
        .map(|l| {
            let mut s = 0.0;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        s += r.at(l, k, i, j) * x[i] * y[j] * z[k];
                    }
                }
            }
            s
        })
        .collect()
}

/// Riemann coefficients from a connection and its first derivatives.
pub fn riemann_from(gamma: &Tens3, dgamma: &Tens4) -> Tens4 {
    let n = gamma.dim();
    Tens4::from_fn(n, |l, k, i, j| {
        let mut s = dgamma.at(i, l, j, k) - dgamma.at(j, l, i, k);
        for m in 0..n {
            s += gamma.at(l, i, m) * gamma.at(m, j, k) - gamma.at(l, j, m) * gamma.at(m, i, k);
        }
        s
    })
}

pub(crate) fn riemann_of(s: &StatGeom, kind: ConnKind) -> Tens4 {
    riemann_from(&s.connection(kind), &s.connection_deriv(kind))
}

pub fn riemann(m: &ManifoldDef, x: &[f64], kind: ConnKind) -> Result<Riem, GeometryError> {
    let s = StatGeom::at(m, x)?;
    Ok(Riem {
        kind: RiemKind::Conn(kind),
        base: x.to_vec(),
        r: riemann_of(&s, kind),
    })
}

/// `g(R(∂_i,∂_j)∂_k, ∂_l)` at `(l, k, i, j)`.
pub fn lower(r: &Tens4, g: &Matrix) -> Tens4 {
    let n = r.dim();
    Tens4::from_fn(n, |l, k, i, j| (0..n).map(|m| g[(l, m)] * r.at(m, k, i, j)).sum())
}

/// `Ric(X, Y) = Σ_a g(R(e_a, X)Y, e_a)` over the Gram–Schmidt frame of the
/// coordinate basis.
pub fn ricci_from(r: &Tens4, g: &Matrix) -> Result<Matrix, GeometryError> {
    let n = r.dim();
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let frame = gram_schmidt(g, &basis).ok_or(GeometryError::DegeneratePlane { point: vec![] })?;
    Ok(Matrix::from_fn(n, n, |j, k| {
        frame
            .iter()
            .map(|e| inner(g, &apply(r, e, &basis[j], &basis[k]), e))
            .sum()
    }))
}

pub fn ricci(m: &ManifoldDef, x: &[f64], kind: ConnKind) -> Result<Matrix, GeometryError> {
    let s = StatGeom::at(m, x)?;
    ricci_from(&riemann_of(&s, kind), s.local.g()).map_err(|_| GeometryError::DegeneratePlane { point: x.to_vec() })
}

pub(crate) fn statistical_of(s: &StatGeom) -> Tens4 {
    riemann_of(s, ConnKind::Nabla).map2(&riemann_of(s, ConnKind::NablaBar), |a, b| 0.5 * (a + b))
}

pub fn statistical_curvature(m: &ManifoldDef, x: &[f64]) -> Result<Riem, GeometryError> {
    let s = StatGeom::at(m, x)?;
    Ok(Riem {
        kind: RiemKind::Statistical,
        base: x.to_vec(),
        r: statistical_of(&s),
    })
}

/// A 2-plane in `T_xM` spanned by two coordinate-frame vectors.
#[derive(Debug, Clone, Serialize)]
pub struct PlaneAt {
    pub base: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PlaneAt {
    pub fn new(base: &[f64], u: Vec<f64>, v: Vec<f64>) -> Self {
        PlaneAt {
            base: base.to_vec(),
            u,
            v,
        }
    }

    /// The coordinate plane `span(∂_i, ∂_j)`.
    pub fn coordinate(base: &[f64], i: usize, j: usize) -> Self {
        let n = base.len();
        let e = |a: usize| (0..n).map(|b| if a == b { 1.0 } else { 0.0 }).collect();
        PlaneAt::new(base, e(i), e(j))
    }

    /// A `g`-orthonormal basis `(X, Y)` of the plane.
    pub fn orthonormal(&self, g: &Matrix) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        let (uu, vv, uv) = (inner(g, &self.u, &self.u), inner(g, &self.v, &self.v), inner(g, &self.u, &self.v));
        let det = uu * vv - uv * uv;
        if !(det > 1e-10 * uu * vv) {
            return Err(GeometryError::DegeneratePlane { point: self.base.clone() });
        }
        let e = gram_schmidt(g, &[self.u.clone(), self.v.clone()])
            .ok_or_else(|| GeometryError::DegeneratePlane { point: self.base.clone() })?;
        Ok((e[0].clone(), e[1].clone()))
    }
}

/// `g(R(X,Y)Y, X)` for `g`-orthonormal `X, Y`.
pub(crate) fn sec_orthonormal(r: &Tens4, g: &Matrix, x: &[f64], y: &[f64]) -> f64 {
    inner(g, &apply(r, x, y, y), x)
}

/// Sectional curvature of `(M, g)` on a plane.
pub fn sectional_g(m: &ManifoldDef, plane: &PlaneAt) -> Result<f64, GeometryError> {
    let s = StatGeom::at(m, &plane.base)?;
    let g = s.local.g();
    let (x, y) = plane.orthonormal(g)?;
    Ok(sec_orthonormal(&riemann_of(&s, ConnKind::LcG), g, &x, &y))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SectionalTilde {
    /// From the curvature of `∇^g̃` and the metric `g̃ = e^σ g`.
    pub direct: f64,
    /// `e^{-σ}(g(S(X,Y)Y,X) − ½(Hess σ(X,X) + Hess σ(Y,Y) + ‖dσ‖²))` for
    /// `g`-orthonormal `X, Y`.
    pub via_s: f64,
}

pub(crate) fn sectional_tilde_at(s: &StatGeom, plane: &PlaneAt) -> Result<SectionalTilde, GeometryError> {
    let g = s.local.g();
    let (x, y) = plane.orthonormal(g)?;
    let sigma = s.local.jet.sigma;
    let rt = riemann_of(s, ConnKind::LcGTilde);
    // g̃(X,X) = g̃(Y,Y) = e^σ, g̃(X,Y) = 0
    let direct = sigma.exp() * sec_orthonormal(&rt, g, &x, &y) / (2.0 * sigma).exp();
    let gs = sec_orthonormal(&statistical_of(s), g, &x, &y);
    let h = &s.local.hess;
    let hxx = inner(h, &x, &x);
    let hyy = inner(h, &y, &y);
    let via_s = (-sigma).exp() * (gs - 0.5 * (hxx + hyy + s.local.dsigma_norm2));
    Ok(SectionalTilde { direct, via_s })
}

pub fn sectional_tilde(m: &ManifoldDef, plane: &PlaneAt) -> Result<SectionalTilde, GeometryError> {
    let s = StatGeom::at(m, &plane.base)?;
    sectional_tilde_at(&s, plane)
}

/// Residuals of the curvature relations between `R`, `R̄`, `R^g` and `K`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvatureRelations {
    /// `g(R(X,Y)Z, W) = −g(Z, R̄(X,Y)W)`.
    pub duality: f64,
    /// `R = R^g + (∇^g_X K)(Y,Z) − (∇^g_Y K)(X,Z) + [K_X, K_Y]Z`.
    pub gauss: f64,
    /// `R + R̄ = 2R^g + 2[K_X, K_Y]`.
    pub sum: f64,
}

impl CurvatureRelations {
    pub fn max(&self) -> f64 {
        self.duality.max(self.gauss).max(self.sum)
    }
}

/// `[K_i, K_j]∂_k` at `(l, k, i, j)`.
pub(crate) fn k_commutator(k: &Tens3) -> Tens4 {
    let n = k.dim();
    Tens4::from_fn(n, |l, kk, i, j| {
        (0..n)
            .map(|m| k.at(l, i, m) * k.at(m, j, kk) - k.at(l, j, m) * k.at(m, i, kk))
            .sum()
    })
}

pub(crate) fn curvature_relations_at(s: &StatGeom) -> CurvatureRelations {
    let n = s.dim();
    let g = s.local.g();
    let r = riemann_of(s, ConnKind::Nabla);
    let rbar = riemann_of(s, ConnKind::NablaBar);
    let rg = riemann_of(s, ConnKind::LcG);
    let comm = k_commutator(&s.k);

    let lhs3 = lower(&r, g);
    let rbar_low = lower(&rbar, g);
    // index (w, k, i, j): g(R(∂i,∂j)∂k, ∂w) against −g(∂k, R̄(∂i,∂j)∂w)
    let rhs3 = Tens4::from_fn(n, |w, k, i, j| -rbar_low.at(k, w, i, j));
    let duality = rel_residual(lhs3.as_slice(), rhs3.as_slice());

    let dk = s.nabla_g_k();
    let rhs4 = Tens4::from_fn(n, |l, k, i, j| {
        rg.at(l, k, i, j) + dk.at(i, l, j, k) - dk.at(j, l, i, k) + comm.at(l, k, i, j)
    });
    let gauss = rel_residual(r.as_slice(), rhs4.as_slice());

    let lhs5 = r.map2(&rbar, |a, b| a + b);
    let rhs5 = rg.map2(&comm, |a, b| 2.0 * a + 2.0 * b);
    let sum = rel_residual(lhs5.as_slice(), rhs5.as_slice());
    CurvatureRelations { duality, gauss, sum }
}

pub fn curvature_relation_residuals(m: &ManifoldDef, x: &[f64]) -> Result<CurvatureRelations, GeometryError> {
    Ok(curvature_relations_at(&StatGeom::at(m, x)?))
}

/// `‖Hess σ − (Δσ/n) g‖_∞`; zero exactly where `∇^g dσ` is proportional to
/// `g`.
pub fn conjugate_symmetry_residual(m: &ManifoldDef, x: &[f64]) -> Result<f64, GeometryError> {
    let local = m.local(x)?;
    Ok(conjugate_symmetry_of(&local.hess, local.g(), local.laplace))
}

pub(crate) fn conjugate_symmetry_of(hess: &Matrix, g: &Matrix, laplace: f64) -> f64 {
    let n = g.nrows() as f64;
    (hess - g * (laplace / n)).amax()
}

/// `λ(g_jk g_li − g_ik g_lj)` at `(l, k, i, j)`: the lowered curvature of
/// constant sectional curvature `λ`.
fn constant_model(g: &Matrix, lambda: f64) -> Tens4 {
    Tens4::from_fn(g.nrows(), |l, k, i, j| lambda * (g[(j, k)] * g[(l, i)] - g[(i, k)] * g[(l, j)]))
}

/// `max |g(R(∂_i,∂_j)∂_k, ∂_l) − λ(g_jk g_li − g_ik g_lj)|` for `∇`.
pub fn constant_curvature_residual(m: &ManifoldDef, x: &[f64], lambda: f64) -> Result<f64, GeometryError> {
    let s = StatGeom::at(m, x)?;
    let g = s.local.g();
    let low = lower(&riemann_of(&s, ConnKind::Nabla), g);
    Ok(max_abs(low.map2(&constant_model(g, lambda), |a, b| a - b).as_slice()))
}

/// Least-squares `λ` for `R = λ(g(Y,Z)X − g(X,Z)Y)` over a set of points,
/// with the lowered residual at the fitted value.
pub fn constant_curvature_fit(m: &ManifoldDef, points: &[Vec<f64>]) -> Result<(f64, f64), GeometryError> {
    let mut lows = Vec::with_capacity(points.len());
    let (mut num, mut den) = (0.0, 0.0);
    for x in points {
        let s = StatGeom::at(m, x)?;
        let g = s.local.g().clone();
        let low = lower(&riemann_of(&s, ConnKind::Nabla), &g);
        let unit = constant_model(&g, 1.0);
        for (a, b) in low.as_slice().iter().zip(unit.as_slice()) {
            num += a * b;
            den += b * b;
        }
        lows.push((low, g));
    }
    let lambda = if den > 0.0 { num / den } else { 0.0 };
    let resid = lows
        .iter()
        .map(|(low, g)| rel_residual(low.as_slice(), constant_model(g, lambda).as_slice()))
        .fold(0.0, f64::max);
    Ok((lambda, resid))
}

/// Antisymmetry in `(i, j)` and the first Bianchi identity, for one kind.
pub fn bianchi_residuals(r: &Tens4) -> (f64, f64) {
    let n = r.dim();
    let scale = 1f64.max(r.max_abs());
    let (mut anti, mut bianchi) = (0.0_f64, 0.0_f64);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    anti = anti.max((r.at(l, k, i, j) + r.at(l, k, j, i)).abs());
                    bianchi = bianchi.max((r.at(l, k, i, j) + r.at(l, i, j, k) + r.at(l, j, k, i)).abs());
                }
            }
        }
    }
    (anti / scale, bianchi / scale)
}

/// `max |Ric_ij − Ric_ji|`, scale-normalized.
pub fn ricci_asymmetry(ric: &Matrix) -> f64 {
    (ric - ric.transpose()).amax() / 1f64.max(ric.amax())
}

/// Closed-form curvature of `∇` in terms of `R^g`, `Hess σ` and `dσ`,
/// checked against the coefficient computation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedFormCheck {
    /// `R = R^g − ½(H(X,Z)Y − H(Y,Z)X + g(Y,Z)AX − g(X,Z)AY) + ¼(…)`.
    pub riemann: f64,
    /// `Ric = Ric^g + ½(n Hess σ − Δσ g) + ¼((n−2) dσ⊗dσ + n‖dσ‖² g)`.
    pub ricci: f64,
    /// Same with `+½` on the Hessian bracket of `R`; informational.
    pub riemann_plus_half: f64,
    /// Same with coefficient `n+2` on `Hess σ` in `Ric`; informational.
    pub ricci_n_plus_2: f64,
}

pub(crate) fn closed_form_at(s: &StatGeom) -> Result<ClosedFormCheck, GeometryError> {
    let n = s.dim();
    let g = s.local.g();
    let (h, a, grad, lap, nds) = (
        &s.local.hess,
        &s.local.jet.dsigma,
        &s.local.grad,
        s.local.laplace,
        s.local.dsigma_norm2,
    );
    let ginv = &s.local.ginv;
    // A = ∇ grad σ: A^l_i = g^{lm} H_{im}
    let amat = Matrix::from_fn(n, n, |l, i| (0..n).map(|m| ginv[(l, m)] * h[(i, m)]).sum());
    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let rg = riemann_of(s, ConnKind::LcG);
    let r = riemann_of(s, ConnKind::Nabla);
    let closed = |hs: f64| {
        Tens4::from_fn(n, |l, k, i, j| {
            let hterm = h[(i, k)] * d(l, j) - h[(j, k)] * d(l, i) + g[(j, k)] * amat[(l, i)] - g[(i, k)] * amat[(l, j)];
            let q1 = a[j] * a[k] * d(l, i) - a[i] * a[k] * d(l, j);
            let q2 = g[(j, k)] * (nds * d(l, i) + a[i] * grad[l]) - g[(i, k)] * (nds * d(l, j) + a[j] * grad[l]);
            rg.at(l, k, i, j) + hs * hterm + 0.25 * (q1 + q2)
        })
    };
    let riemann = rel_residual(r.as_slice(), closed(-0.5).as_slice());
    let riemann_plus_half = rel_residual(r.as_slice(), closed(0.5).as_slice());

    let ric = ricci_from(&r, g)?;
    let ric_g = ricci_from(&rg, g)?;
    let nf = n as f64;
    let closed_ric = |hc: f64| {
        Matrix::from_fn(n, n, |x, y| {
            ric_g[(x, y)]
                + 0.5 * (hc * h[(x, y)] - g[(x, y)] * lap)
                + 0.25 * ((nf - 2.0) * a[x] * a[y] + nf * nds * g[(x, y)])
        })
    };
    let ricci = rel_residual(ric.as_slice(), closed_ric(nf).as_slice());
    let ricci_n_plus_2 = rel_residual(ric.as_slice(), closed_ric(nf + 2.0).as_slice());
    Ok(ClosedFormCheck {
        riemann,
        ricci,
        riemann_plus_half,
        ricci_n_plus_2,
    })
}

pub fn closed_form_check(m: &ManifoldDef, x: &[f64]) -> Result<ClosedFormCheck, GeometryError> {
    closed_form_at(&StatGeom::at(m, x)?)
}
