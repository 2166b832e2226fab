//! The divisible statistical structure determined by `(g, σ)`.
//!
//! `C = sym(dσ ⊗ g)`, `K_X Y = -½(dσ(X)Y + dσ(Y)X + g(X,Y) grad σ)`, and the
//! four torsion-free connections `∇^g`, `∇ = ∇^g + K`, `∇̄ = ∇^g − K` and
//! `∇^g̃` of the conformal metric `g̃ = e^σ g`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::GeometryError;
use crate::manifold::{christoffel, invert_spd, LocalGeom, ManifoldDef};
use crate::tensor::{rel_residual, Matrix, Tens3, Tens4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConnKind {
    /// Levi-Civita connection of `g`.
    #[serde(rename = "lc")]
    LcG,
    #[serde(rename = "nabla")]
    Nabla,
    #[serde(rename = "bar")]
    NablaBar,
    /// Levi-Civita connection of `g̃ = e^σ g`.
    #[serde(rename = "lc-tilde")]
    LcGTilde,
}

impl ConnKind {
    pub const ALL: [ConnKind; 4] = [ConnKind::LcG, ConnKind::Nabla, ConnKind::NablaBar, ConnKind::LcGTilde];

    /// Command-line spelling.
    pub fn name(self) -> &'static str {
        match self {
            ConnKind::LcG => "lc",
            ConnKind::Nabla => "nabla",
            ConnKind::NablaBar => "bar",
            ConnKind::LcGTilde => "lc-tilde",
        }
    }
}

impl fmt::Display for ConnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConnKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ConnKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown connection `{s}` (expected lc, nabla, bar or lc-tilde)"))
    }
}

/// Connection coefficients `Γ^k_{ij}` at one point, stored at `(k, i, j)`.
#[derive(Debug, Clone, Serialize)]
pub struct ConnCoeffs {
    pub kind: ConnKind,
    pub base: Vec<f64>,
    pub gamma: Tens3,
}

/// Everything derived from `(g, σ)` at one point, up to first derivatives
/// of the connection coefficients.
#[derive(Debug, Clone)]
pub struct StatGeom {
    pub local: LocalGeom,
    /// `K^k_{ij}` at `(k, i, j)`.
    pub k: Tens3,
    /// `∂_m K^k_{ij}` at `(m, k, i, j)`.
    pub dk: Tens4,
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `K^k_{ij}` from the metric, `dσ` and `grad σ`.
pub(crate) fn k_tensor(g: &Matrix, dsigma: &[f64], grad: &[f64]) -> Tens3 {
    let n = g.nrows();
    Tens3::from_fn(n, |k, i, j| {
        -0.5 * (dsigma[i] * delta(k, j) + dsigma[j] * delta(k, i) + g[(i, j)] * grad[k])
    })
}

impl StatGeom {
    pub fn at(m: &ManifoldDef, x: &[f64]) -> Result<Self, GeometryError> {
        Ok(Self::from_local(m.local(x)?))
    }

    pub fn from_local(local: LocalGeom) -> Self {
        let n = local.dim();
        let g = local.g();
        let ds = &local.jet.dsigma;
        let k = k_tensor(g, ds, &local.grad);
        let dg = &local.jet.dg;
        let d2s = &local.d2sigma;
        let dk = Tens4::from_fn(n, |m, k, i, j| {
            -0.5 * (d2s[(m, i)] * delta(k, j)
                + d2s[(m, j)] * delta(k, i)
                + dg.at(m, i, j) * local.grad[k]
                + g[(i, j)] * local.dgrad[(m, k)])
        });
        StatGeom { local, k, dk }
    }

    pub fn dim(&self) -> usize {
        self.local.dim()
    }

    /// `P^k_{ij} = δ^k_i ∂_jσ + δ^k_j ∂_iσ`, the projective change from `∇`
    /// to `∇^g̃`.
    fn projective(&self) -> Tens3 {
        let ds = &self.local.jet.dsigma;
        Tens3::from_fn(self.dim(), |k, i, j| delta(k, i) * ds[j] + delta(k, j) * ds[i])
    }

    pub fn connection(&self, kind: ConnKind) -> Tens3 {
        let gamma = &self.local.gamma;
        match kind {
            ConnKind::LcG => gamma.clone(),
            ConnKind::Nabla => gamma.map2(&self.k, |a, b| a + b),
            ConnKind::NablaBar => gamma.map2(&self.k, |a, b| a - b),
            ConnKind::LcGTilde => gamma.map2(&self.k, |a, b| a + b).map2(&self.projective(), |a, b| a + b),
        }
    }

    /// `∂_m Γ^k_{ij}` at `(m, k, i, j)`.
    pub fn connection_deriv(&self, kind: ConnKind) -> Tens4 {
        let dgamma = &self.local.dgamma;
        match kind {
            ConnKind::LcG => dgamma.clone(),
            ConnKind::Nabla => dgamma.map2(&self.dk, |a, b| a + b),
            ConnKind::NablaBar => dgamma.map2(&self.dk, |a, b| a - b),
            ConnKind::LcGTilde => {
                let d2s = &self.local.d2sigma;
                let dp = Tens4::from_fn(self.dim(), |m, k, i, j| {
                    delta(k, i) * d2s[(m, j)] + delta(k, j) * d2s[(m, i)]
                });
                dgamma.map2(&self.dk, |a, b| a + b).map2(&dp, |a, b| a + b)
            }
        }
    }

    /// `C_{ijk} = ∂_iσ g_jk + ∂_jσ g_ki + ∂_kσ g_ij`.
    pub fn cubic(&self) -> Tens3 {
        let g = self.local.g();
        let ds = &self.local.jet.dsigma;
        Tens3::from_fn(self.dim(), |i, j, k| ds[i] * g[(j, k)] + ds[j] * g[(k, i)] + ds[k] * g[(i, j)])
    }

    /// `-2 g_{kl} K^l_{ij}`, stored at `(i, j, k)`.
    pub fn cubic_from_k(&self) -> Tens3 {
        let g = self.local.g();
        let n = self.dim();
        Tens3::from_fn(n, |i, j, k| -2.0 * (0..n).map(|l| g[(k, l)] * self.k.at(l, i, j)).sum::<f64>())
    }

    /// `(∇^g_i K)^l_{jk}` at `(i, l, j, k)`.
    pub fn nabla_g_k(&self) -> Tens4 {
        let n = self.dim();
        let (k, gamma) = (&self.k, &self.local.gamma);
        Tens4::from_fn(n, |i, l, j, kk| {
            let mut s = self.dk.at(i, l, j, kk);
            for m in 0..n {
                s += gamma.at(l, i, m) * k.at(m, j, kk)
                    - gamma.at(m, i, j) * k.at(l, m, kk)
                    - gamma.at(m, i, kk) * k.at(l, j, m);
            }
            s
        })
    }

    pub fn volume_density(&self) -> f64 {
        let n = self.dim() as f64;
        (-(n + 2.0) * self.local.jet.sigma / 2.0).exp() * self.local.g().determinant().sqrt()
    }

    /// `∂_i θ₀` from the symbolic jet.
    fn volume_density_grad(&self) -> Vec<f64> {
        let n = self.dim();
        let theta = self.volume_density();
        let (ginv, dg) = (&self.local.ginv, &self.local.jet.dg);
        (0..n)
            .map(|i| {
                let mut tr = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        tr += ginv[(a, b)] * dg.at(i, b, a);
                    }
                }
                theta * (-(n as f64 + 2.0) / 2.0 * self.local.jet.dsigma[i] + 0.5 * tr)
            })
            .collect()
    }

    /// `(tr K)_i = Γ̂^k_{ik} − Γ^k_{ik}`.
    pub fn trace_k(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|k| self.k.at(k, i, k)).sum()).collect()
    }
}

pub fn difference_tensor(m: &ManifoldDef, x: &[f64]) -> Result<Tens3, GeometryError> {
    let local = m.local(x)?;
    Ok(k_tensor(local.g(), &local.jet.dsigma, &local.grad))
}

pub fn cubic_form(m: &ManifoldDef, x: &[f64]) -> Result<Tens3, GeometryError> {
    Ok(StatGeom::at(m, x)?.cubic())
}

/// The cubic form recomputed as `-2 g(K_X Y, Z)`; agrees with
/// [`cubic_form`] up to rounding.
pub fn cubic_form_from_k(m: &ManifoldDef, x: &[f64]) -> Result<Tens3, GeometryError> {
    Ok(StatGeom::at(m, x)?.cubic_from_k())
}

pub fn connection_coeffs(m: &ManifoldDef, x: &[f64], kind: ConnKind) -> Result<ConnCoeffs, GeometryError> {
    let gamma = if kind == ConnKind::LcG {
        m.christoffel_g(x)?
    } else {
        StatGeom::at(m, x)?.connection(kind)
    };
    Ok(ConnCoeffs {
        kind,
        base: x.to_vec(),
        gamma,
    })
}

/// The conjugate structure `(g, ∇̄)`, realized as `σ ↦ −σ`.
pub fn conjugate(m: &ManifoldDef) -> ManifoldDef {
    m.with_negated_sigma()
}

/// `θ₀` with `θ = e^{-(n+2)σ/2} ω_g = θ₀ dx¹∧…∧dxⁿ`.
pub fn volume_density(m: &ManifoldDef, x: &[f64]) -> Result<f64, GeometryError> {
    let jet = m.jet(x, false)?;
    invert_spd(&jet.g, x)?;
    let n = m.dim() as f64;
    Ok((-(n + 2.0) * jet.sigma / 2.0).exp() * jet.g.determinant().sqrt())
}

/// Components of `∇θ`: `∂_iθ₀ − θ₀ Γ̂^k_{ik}`.
pub fn parallel_volume_residual(m: &ManifoldDef, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let s = StatGeom::at(m, x)?;
    let (lhs, rhs) = volume_terms(&s);
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect())
}

/// `(∂_iθ₀, θ₀ Γ̂^k_{ik})`.
fn volume_terms(s: &StatGeom) -> (Vec<f64>, Vec<f64>) {
    let n = s.dim();
    let theta = s.volume_density();
    let nabla = s.connection(ConnKind::Nabla);
    let rhs = (0..n).map(|i| theta * (0..n).map(|k| nabla.at(k, i, k)).sum::<f64>()).collect();
    (s.volume_density_grad(), rhs)
}

pub fn trace_k(m: &ManifoldDef, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(StatGeom::at(m, x)?.trace_k())
}

/// Christoffel symbols of `g̃ = e^σ g` computed directly from the metric
/// `g̃`, independent of the projective formula.
pub fn christoffel_tilde_direct(s: &StatGeom) -> Result<Tens3, GeometryError> {
    let n = s.dim();
    let jet = &s.local.jet;
    let e = jet.sigma.exp();
    let gt = &jet.g * e;
    let dgt = Tens3::from_fn(n, |m, i, j| e * (jet.dsigma[m] * jet.g[(i, j)] + jet.dg.at(m, i, j)));
    let gti = invert_spd(&gt, &jet.x)?;
    Ok(christoffel(&gt, &gti, &dgt).1)
}

/// Scale-normalized residuals of the structure identities at one point.
#[derive(Debug, Clone, Serialize)]
pub struct StructureResiduals {
    /// `∂_k g_ij − Γ^l_{ki} g_lj − Γ^l_{kj} g_il = 0` for `∇^g`.
    pub metric_compat: f64,
    /// `∇g = C`.
    pub codazzi: f64,
    /// `C` totally symmetric and equal to `-2 g(K·,·)`.
    pub cubic: f64,
    /// `∂_k g_ij = Γ̂^l_{ki} g_lj + Γ̄^l_{kj} g_il`.
    pub duality: f64,
    /// `Γ̂ + Γ̄ = 2Γ^g`.
    pub sum: f64,
    /// `Γ^g̃ − Γ^g = ½(δ^k_i ∂_jσ + δ^k_j ∂_iσ − g_ij grad^k σ)`.
    pub contrans: f64,
    /// `Γ^g̃ = Γ̂ + δ^k_i ∂_jσ + δ^k_j ∂_iσ` against the direct Christoffel
    /// symbols of `g̃`.
    pub proj: f64,
    /// `∇θ = 0`.
    pub volume: f64,
    /// `tr K = -(n+2)/2 dσ`.
    pub trace_k: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        [
            self.metric_compat,
            self.codazzi,
            self.cubic,
            self.duality,
            self.sum,
            self.contrans,
            self.proj,
            self.volume,
            self.trace_k,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn covariant_metric(g: &Matrix, dg: &Tens3, gamma: &Tens3) -> Tens3 {
    let n = g.nrows();
    Tens3::from_fn(n, |k, i, j| {
        dg.at(k, i, j)
            - (0..n)
                .map(|l| gamma.at(l, k, i) * g[(l, j)] + gamma.at(l, k, j) * g[(i, l)])
                .sum::<f64>()
    })
}

pub fn structure_residuals(m: &ManifoldDef, x: &[f64]) -> Result<StructureResiduals, GeometryError> {
    let s = StatGeom::at(m, x)?;
    structure_residuals_at(&s)
}

pub fn structure_residuals_at(s: &StatGeom) -> Result<StructureResiduals, GeometryError> {
    let n = s.dim();
    let g = s.local.g();
    let dg = &s.local.jet.dg;
    let ds = &s.local.jet.dsigma;
    let lc = s.connection(ConnKind::LcG);
    let nabla = s.connection(ConnKind::Nabla);
    let bar = s.connection(ConnKind::NablaBar);
    let tilde = s.connection(ConnKind::LcGTilde);
    let cubic = s.cubic();

    let zero = Tens3::zeros(n);
    let metric_compat = rel_residual(covariant_metric(g, dg, &lc).as_slice(), zero.as_slice());
    let codazzi = rel_residual(covariant_metric(g, dg, &nabla).as_slice(), cubic.as_slice());

    let mut sym = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = cubic.at(i, j, k);
                for p in [cubic.at(j, i, k), cubic.at(k, j, i), cubic.at(i, k, j)] {
                    sym = sym.max((c - p).abs());
                }
            }
        }
    }
    let cubic_res = rel_residual(cubic.as_slice(), s.cubic_from_k().as_slice())
        .max(sym / 1f64.max(cubic.max_abs()));

    let dual_rhs = Tens3::from_fn(n, |k, i, j| {
        (0..n)
            .map(|l| nabla.at(l, k, i) * g[(l, j)] + bar.at(l, k, j) * g[(i, l)])
            .sum()
    });
    let duality = rel_residual(dg.as_slice(), dual_rhs.as_slice());

    let sum = rel_residual(nabla.map2(&bar, |a, b| a + b).as_slice(), lc.map2(&lc, |a, b| a + b).as_slice());

    let direct = christoffel_tilde_direct(s)?;
    let contrans_rhs = Tens3::from_fn(n, |k, i, j| {
        lc.at(k, i, j)
            + 0.5 * (delta(k, i) * ds[j] + delta(k, j) * ds[i] - g[(i, j)] * s.local.grad[k])
    });
    let contrans = rel_residual(direct.as_slice(), contrans_rhs.as_slice());
    let proj = rel_residual(direct.as_slice(), tilde.as_slice());

    let (vl, vr) = volume_terms(s);
    let volume = rel_residual(&vl, &vr);

    let expect: Vec<f64> = ds.iter().map(|d| -(n as f64 + 2.0) / 2.0 * d).collect();
    let from_conn: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| nabla.at(k, i, k) - lc.at(k, i, k)).sum())
        .collect();
    let trace_k = rel_residual(&from_conn, &expect).max(rel_residual(&s.trace_k(), &expect));

    Ok(StructureResiduals {
        metric_compat,
        codazzi,
        cubic: cubic_res,
        duality,
        sum,
        contrans,
        proj,
        volume,
        trace_k,
    })
}
