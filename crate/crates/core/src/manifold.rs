//! Single-chart Riemannian manifolds `(M, g)` carrying a potential `σ`.
//!
//! A [`ManifoldDef`] holds the metric and potential as expressions in the
//! chart coordinates. Every derivative needed downstream (up to second
//! order in `g` and `σ`) is taken symbolically once, at construction, and
//! compiled into evaluation tapes; [`ManifoldDef::jet`] evaluates them at a
//! point and [`LocalGeom`] turns the values into the Levi-Civita geometry.

use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Cholesky, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, ManifoldError};
use crate::expr::{parse, parse_predicate, Expr, Predicate, Tape};
use crate::tensor::{Matrix, Tens3, Tens4};

/// Eigenvalue floor for the positive-definiteness check.
pub const EPS_SPD: f64 = 1e-12;

/// Number of points in the load-time positive-definiteness spot check.
pub const SPD_SPOT_CHECKS: usize = 32;
const SPD_SEED: u64 = 0x5eed_0f_5bd;

pub const BUILTIN_NAMES: [&str; 4] = ["euclidean", "paraboloid", "punctured-plane", "half-plane-exp"];

/// Chart coordinates of a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coord(pub Vec<f64>);

impl Deref for Coord {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Coord {
    fn from(v: Vec<f64>) -> Self {
        Coord(v)
    }
}

/// Tangent vector in the coordinate frame at `base`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameVec {
    pub base: Coord,
    pub components: Vec<f64>,
}

/// JSON manifold document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldDoc {
    pub name: String,
    pub dim: usize,
    pub coords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    pub metric: Vec<Vec<String>>,
    pub sigma: String,
    /// Box used when drawing random sample points, `[[lo, hi], ...]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_bounds: Option<Vec<[f64; 2]>>,
    /// Extra restriction for random sample points (e.g. stay away from a
    /// puncture).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_domain: Option<String>,
}

#[derive(Debug)]
struct Compiled {
    /// g_ij (i ≤ j), ∂_m g_ij, σ, ∂_m σ.
    first: Tape,
    /// `first` followed by ∂_m ∂_p g_ij (m ≤ p) and ∂_m ∂_p σ (m ≤ p).
    second: Tape,
}

/// A validated manifold definition. Cheap to clone.
#[derive(Debug, Clone)]
pub struct ManifoldDef {
    doc: ManifoldDoc,
    domain: Predicate,
    sample_domain: Predicate,
    metric: Vec<Vec<Expr>>,
    sigma: Expr,
    compiled: Arc<Compiled>,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row-major over the upper triangle
    i * n - i * (i + 1) / 2 + j
}

fn n_upper(n: usize) -> usize {
    n * (n + 1) / 2
}

impl ManifoldDef {
    pub fn from_doc(doc: ManifoldDoc) -> Result<Self, ManifoldError> {
        Self::build(doc, true)
    }

    fn build(doc: ManifoldDoc, spot_check: bool) -> Result<Self, ManifoldError> {
        let n = doc.dim;
        if n < 2 {
            return Err(ManifoldError::Dimension(format!("dim must be at least 2, got {n}")));
        }
        if doc.coords.len() != n {
            return Err(ManifoldError::Dimension(format!(
                "dim is {n} but {} coordinate names given",
                doc.coords.len()
            )));
        }
        for (k, c) in doc.coords.iter().enumerate() {
            if doc.coords[..k].contains(c) {
                return Err(ManifoldError::Invalid(format!("duplicate coordinate name `{c}`")));
            }
        }
        if doc.metric.len() != n || doc.metric.iter().any(|row| row.len() != n) {
            return Err(ManifoldError::Dimension(format!("metric must be a {n}x{n} matrix")));
        }
        let names = &doc.coords;
        let parse_field = |field: String, src: &str| {
            parse(src, names).map_err(|source| ManifoldError::Parse { field, source })
        };
        let mut upper: Vec<Vec<Option<Expr>>> = vec![vec![None; n]; n];
        for i in 0..n {
            for j in i..n {
                upper[i][j] = Some(parse_field(format!("metric[{i}][{j}]"), &doc.metric[i][j])?);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let src = doc.metric[i][j].trim();
                if src.is_empty() {
                    continue;
                }
                let lower = parse_field(format!("metric[{i}][{j}]"), src)?;
                if Some(&lower) != upper[j][i].as_ref() {
                    return Err(ManifoldError::NonSymmetricMetric { i, j });
                }
            }
        }
        let metric: Vec<Vec<Expr>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| upper[i.min(j)][i.max(j)].clone().expect("upper triangle filled"))
                    .collect()
            })
            .collect();
        let sigma = parse_field("sigma".into(), &doc.sigma)?;
        let pred = |field: &str, src: &Option<String>| match src {
            None => Ok(Predicate::True),
            Some(s) if s.trim().is_empty() => Ok(Predicate::True),
            Some(s) => parse_predicate(s, names).map_err(|source| ManifoldError::Parse {
                field: field.into(),
                source,
            }),
        };
        let domain = pred("domain", &doc.domain)?;
        let sample_domain = pred("sample_domain", &doc.sample_domain)?;
        if let Some(b) = &doc.sample_bounds {
            if b.len() != n || b.iter().any(|[lo, hi]| !(lo < hi)) {
                return Err(ManifoldError::Invalid(format!(
                    "sample_bounds must list {n} intervals [lo, hi] with lo < hi"
                )));
            }
        }
        let compiled = Arc::new(compile(n, &metric, &sigma));
        let def = ManifoldDef {
            doc,
            domain,
            sample_domain,
            metric,
            sigma,
            compiled,
        };
        if spot_check {
            def.spd_spot_check()?;
        }
        Ok(def)
    }

    pub fn from_json_str(src: &str) -> Result<Self, ManifoldError> {
        let doc: ManifoldDoc = serde_json::from_str(src)?;
        Self::from_doc(doc)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ManifoldError> {
        let src = std::fs::read_to_string(path).map_err(|source| ManifoldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&src)
    }

    /// One of [`BUILTIN_NAMES`].
    pub fn builtin(name: &str) -> Result<Self, ManifoldError> {
        let doc = builtin_doc(name).ok_or_else(|| ManifoldError::UnknownBuiltin(name.into()))?;
        Self::from_doc(doc)
    }

    pub fn doc(&self) -> &ManifoldDoc {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn dim(&self) -> usize {
        self.doc.dim
    }

    pub fn coords(&self) -> &[String] {
        &self.doc.coords
    }

    pub fn metric_expr(&self, i: usize, j: usize) -> &Expr {
        &self.metric[i][j]
    }

    pub fn sigma_expr(&self) -> &Expr {
        &self.sigma
    }

    pub fn domain(&self) -> &Predicate {
        &self.domain
    }

    /// The same metric with potential `-σ`: the conjugate statistical
    /// structure.
    pub fn with_negated_sigma(&self) -> Self {
        let sigma = self.sigma.negated();
        let mut doc = self.doc.clone();
        doc.sigma = sigma.display(&doc.coords).to_string();
        doc.name = match doc.name.strip_prefix("conjugate(").and_then(|s| s.strip_suffix(')')) {
            Some(inner) => inner.to_string(),
            None => format!("conjugate({})", doc.name),
        };
        let compiled = Arc::new(compile(self.dim(), &self.metric, &sigma));
        ManifoldDef {
            doc,
            domain: self.domain.clone(),
            sample_domain: self.sample_domain.clone(),
            metric: self.metric.clone(),
            sigma,
            compiled,
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.domain.holds(x)
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.in_domain(x) {
            return Err(GeometryError::OutOfDomain { point: x.to_vec() });
        }
        Ok(())
    }

    pub fn sigma_at(&self, x: &[f64]) -> Result<f64, GeometryError> {
        self.check_point(x)?;
        self.sigma.eval(x).map_err(|source| GeometryError::Eval {
            point: x.to_vec(),
            source,
        })
    }

    /// Raw metric values without domain or definiteness checks.
    fn metric_values(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        let n = self.dim();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.metric[i][j].eval(x).map_err(|source| GeometryError::Eval {
                    point: x.to_vec(),
                    source,
                })?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// `g(x)`; fails outside the domain or where `g` is not positive
    /// definite.
    pub fn metric_at(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        self.check_point(x)?;
        let g = self.metric_values(x)?;
        let min = min_eigenvalue(&g);
        if !(min > EPS_SPD) {
            return Err(GeometryError::NotPositiveDefinite {
                point: x.to_vec(),
                min_eigenvalue: min,
            });
        }
        Ok(g)
    }

    /// `g⁻¹(x)`.
    pub fn metric_inv_at(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        let g = self.metric_at(x)?;
        Ok(invert_spd(&g, x)?)
    }

    fn spd_spot_check(&self) -> Result<(), ManifoldError> {
        let mut rng = ChaCha8Rng::seed_from_u64(SPD_SEED);
        let bounds = self.sample_bounds();
        let mut checked = 0;
        for _ in 0..SPD_SPOT_CHECKS * 1000 {
            if checked == SPD_SPOT_CHECKS {
                break;
            }
            let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            if !self.in_domain(&x) || !self.sample_domain.holds(&x) {
                continue;
            }
            checked += 1;
            // points where the metric cannot be evaluated are not evidence
            // either way
            let Ok(g) = self.metric_values(&x) else {
                continue;
            };
            let min = min_eigenvalue(&g);
            if !(min > EPS_SPD) {
                return Err(ManifoldError::NotPositiveDefinite {
                    point: x,
                    min_eigenvalue: min,
                });
            }
        }
        Ok(())
    }

    pub fn sample_bounds(&self) -> Vec<(f64, f64)> {
        match &self.doc.sample_bounds {
            Some(b) => b.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
            None => vec![(-4.0, 4.0); self.dim()],
        }
    }

    /// Whether `x` lies in the region used for random sampling.
    pub fn in_sample_region(&self, x: &[f64]) -> bool {
        self.in_domain(x)
            && self.sample_domain.holds(x)
            && self
                .sample_bounds()
                .iter()
                .zip(x)
                .all(|(&(lo, hi), v)| (lo..=hi).contains(v))
    }

    /// `count` pseudo-random in-domain points from the sample region where
    /// the second-order jet evaluates cleanly. Deterministic in `seed`.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = self.sample_bounds();
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count && tries < count * 1000 {
            tries += 1;
            let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            if !self.in_domain(&x) || !self.sample_domain.holds(&x) {
                continue;
            }
            if self.local(&x).is_err() {
                continue;
            }
            out.push(x);
        }
        out
    }

    /// Values of `g`, `σ` and their derivatives at `x`; `second` selects
    /// whether second derivatives are evaluated too.
    pub fn jet(&self, x: &[f64], second: bool) -> Result<Jet, GeometryError> {
        self.check_point(x)?;
        let mut scratch = Vec::new();
        let mut jet = Jet::zeros(self.dim(), second);
        self.jet_into(x, &mut scratch, &mut jet)?;
        Ok(jet)
    }

    /// Unchecked jet evaluation into caller-owned buffers. The domain
    /// predicate is not consulted.
    pub(crate) fn jet_into(&self, x: &[f64], scratch: &mut Vec<f64>, jet: &mut Jet) -> Result<(), GeometryError> {
        let n = self.dim();
        let nu = n_upper(n);
        let tape = if jet.second() { &self.compiled.second } else { &self.compiled.first };
        jet.values.resize(tape.n_outputs(), 0.0);
        tape.eval(x, scratch, &mut jet.values).map_err(|source| GeometryError::Eval {
            point: x.to_vec(),
            source,
        })?;
        let v = &jet.values;
        jet.x.clear();
        jet.x.extend_from_slice(x);
        for i in 0..n {
            for j in 0..n {
                jet.g[(i, j)] = v[upper_index(n, i, j)];
            }
        }
        let base = nu;
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    jet.dg.set(m, i, j, v[base + m * nu + upper_index(n, i, j)]);
                }
            }
        }
        let base = nu + n * nu;
        jet.sigma = v[base];
        for m in 0..n {
            jet.dsigma[m] = v[base + 1 + m];
        }
        if let Some((d2g, d2s)) = jet.second.as_mut() {
            let base = nu + n * nu + 1 + n;
            let npairs = n_upper(n);
            for m in 0..n {
                for p in 0..n {
                    let mp = upper_index(n, m, p);
                    for i in 0..n {
                        for j in 0..n {
                            d2g.set(m, p, i, j, v[base + mp * nu + upper_index(n, i, j)]);
                        }
                    }
                }
            }
            let base = base + npairs * nu;
            for m in 0..n {
                for p in 0..n {
                    d2s[(m, p)] = v[base + upper_index(n, m, p)];
                }
            }
        }
        Ok(())
    }

    /// Levi-Civita geometry and potential derivatives at `x`.
    pub fn local(&self, x: &[f64]) -> Result<LocalGeom, GeometryError> {
        let jet = self.jet(x, true)?;
        LocalGeom::from_jet(jet)
    }

    /// Christoffel symbols `Γ^k_{ij}` of the Levi-Civita connection of `g`.
    pub fn christoffel_g(&self, x: &[f64]) -> Result<Tens3, GeometryError> {
        let jet = self.jet(x, false)?;
        let ginv = invert_spd(&jet.g, x)?;
        Ok(christoffel(&jet.g, &ginv, &jet.dg).1)
    }

    /// `grad_g σ = g⁻¹ dσ`.
    pub fn grad_sigma(&self, x: &[f64]) -> Result<FrameVec, GeometryError> {
        let jet = self.jet(x, false)?;
        let ginv = invert_spd(&jet.g, x)?;
        let components = (0..self.dim())
            .map(|k| (0..self.dim()).map(|l| ginv[(k, l)] * jet.dsigma[l]).sum())
            .collect();
        Ok(FrameVec {
            base: Coord(x.to_vec()),
            components,
        })
    }

    /// Covariant Hessian `∇^g dσ`.
    pub fn hess_sigma(&self, x: &[f64]) -> Result<Matrix, GeometryError> {
        Ok(self.local(x)?.hess)
    }

    /// `Δ_g σ = g^{ij} (∇^g dσ)_{ij}`.
    pub fn laplace_sigma(&self, x: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.local(x)?.laplace)
    }
}

fn compile(n: usize, metric: &[Vec<Expr>], sigma: &Expr) -> Compiled {
    let mut first = Vec::new();
    for i in 0..n {
        for j in i..n {
            first.push(metric[i][j].clone());
        }
    }
    let dmetric: Vec<Vec<Expr>> = (0..n)
        .map(|m| {
            let mut row = Vec::new();
            for i in 0..n {
                for j in i..n {
                    row.push(metric[i][j].diff(m));
                }
            }
            row
        })
        .collect();
    for row in &dmetric {
        first.extend(row.iter().cloned());
    }
    first.push(sigma.clone());
    let dsigma: Vec<Expr> = (0..n).map(|m| sigma.diff(m)).collect();
    first.extend(dsigma.iter().cloned());

    let mut second = first.clone();
    for m in 0..n {
        for p in m..n {
            for e in &dmetric[m] {
                second.push(e.diff(p));
            }
        }
    }
    for m in 0..n {
        for p in m..n {
            second.push(dsigma[m].diff(p));
        }
    }
    Compiled {
        first: Tape::compile(&first),
        second: Tape::compile(&second),
    }
}

pub(crate) fn min_eigenvalue(g: &Matrix) -> f64 {
    if g.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    SymmetricEigen::new(g.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v))
}

pub(crate) fn invert_spd(g: &Matrix, x: &[f64]) -> Result<Matrix, GeometryError> {
    match Cholesky::new(g.clone()) {
        Some(ch) => {
            let inv = ch.inverse();
            if inv.iter().all(|v| v.is_finite()) {
                Ok(inv)
            } else {
                Err(GeometryError::NotPositiveDefinite {
                    point: x.to_vec(),
                    min_eigenvalue: min_eigenvalue(g),
                })
            }
        }
        None => Err(GeometryError::NotPositiveDefinite {
            point: x.to_vec(),
            min_eigenvalue: min_eigenvalue(g),
        }),
    }
}

/// Christoffel symbols of the first (`Γ_{l,ij}` at `(l,i,j)`) and second
/// (`Γ^k_{ij}` at `(k,i,j)`) kind from `g`, `g⁻¹` and `∂_m g_ij`.
pub(crate) fn christoffel(g: &Matrix, ginv: &Matrix, dg: &Tens3) -> (Tens3, Tens3) {
    let n = g.nrows();
    let first = Tens3::from_fn(n, |l, i, j| 0.5 * (dg.at(i, j, l) + dg.at(j, i, l) - dg.at(l, i, j)));
    let second = Tens3::from_fn(n, |k, i, j| (0..n).map(|l| ginv[(k, l)] * first.at(l, i, j)).sum());
    (first, second)
}

/// Values of `g`, `σ` and their coordinate derivatives at one point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub x: Vec<f64>,
    pub g: Matrix,
    /// `∂_m g_ij` at `(m, i, j)`.
    pub dg: Tens3,
    pub sigma: f64,
    pub dsigma: Vec<f64>,
    /// `∂_m ∂_p g_ij` at `(m, p, i, j)` and `∂_m ∂_p σ`.
    second: Option<(Tens4, Matrix)>,
    values: Vec<f64>,
}

impl Jet {
    pub(crate) fn zeros(n: usize, second: bool) -> Self {
        Jet {
            x: vec![0.0; n],
            g: Matrix::zeros(n, n),
            dg: Tens3::zeros(n),
            sigma: 0.0,
            dsigma: vec![0.0; n],
            second: second.then(|| (Tens4::zeros(n), Matrix::zeros(n, n))),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn second(&self) -> bool {
        self.second.is_some()
    }

    pub fn d2g(&self) -> Option<&Tens4> {
        self.second.as_ref().map(|s| &s.0)
    }

    pub fn d2sigma(&self) -> Option<&Matrix> {
        self.second.as_ref().map(|s| &s.1)
    }
}

/// Second-order Levi-Civita geometry of `(M, g)` and derivatives of `σ` at
/// a point.
#[derive(Debug, Clone)]
pub struct LocalGeom {
    pub jet: Jet,
    pub ginv: Matrix,
    /// `∂_m g^{kl}` at `(m, k, l)`.
    pub dginv: Tens3,
    /// `Γ^k_{ij}` of `∇^g`.
    pub gamma: Tens3,
    /// `∂_m Γ^k_{ij}` at `(m, k, i, j)`.
    pub dgamma: Tens4,
    pub d2sigma: Matrix,
    pub grad: Vec<f64>,
    /// `∂_m (grad σ)^k` at `(m, k)`.
    pub dgrad: Matrix,
    pub hess: Matrix,
    pub laplace: f64,
    /// `‖dσ‖²_g`.
    pub dsigma_norm2: f64,
}

impl LocalGeom {
    pub fn from_jet(jet: Jet) -> Result<Self, GeometryError> {
        let n = jet.dim();
        let (d2g, d2sigma) = match &jet.second {
            Some((a, b)) => (a.clone(), b.clone()),
            None => panic!("LocalGeom requires a second-order jet"),
        };
        let ginv = invert_spd(&jet.g, &jet.x)?;
        let (first, gamma) = christoffel(&jet.g, &ginv, &jet.dg);
        let dginv = Tens3::from_fn(n, |m, k, l| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s -= ginv[(k, a)] * jet.dg.at(m, a, b) * ginv[(b, l)];
                }
            }
            s
        });
        let dgamma = Tens4::from_fn(n, |m, k, i, j| {
            let mut s = 0.0;
            for l in 0..n {
                let dfirst = 0.5 * (d2g.at(m, i, j, l) + d2g.at(m, j, i, l) - d2g.at(m, l, i, j));
                s += dginv.at(m, k, l) * first.at(l, i, j) + ginv[(k, l)] * dfirst;
            }
            s
        });
        let ds = &jet.dsigma;
        let grad: Vec<f64> = (0..n).map(|k| (0..n).map(|l| ginv[(k, l)] * ds[l]).sum()).collect();
        let dgrad = Matrix::from_fn(n, n, |m, k| {
            (0..n)
                .map(|l| dginv.at(m, k, l) * ds[l] + ginv[(k, l)] * d2sigma[(m, l)])
                .sum()
        });
        let hess = Matrix::from_fn(n, n, |i, j| {
            d2sigma[(i, j)] - (0..n).map(|k| gamma.at(k, i, j) * ds[k]).sum::<f64>()
        });
        let mut laplace = 0.0;
        for i in 0..n {
            for j in 0..n {
                laplace += ginv[(i, j)] * hess[(i, j)];
            }
        }
        let dsigma_norm2 = (0..n).map(|k| grad[k] * ds[k]).sum();
        Ok(LocalGeom {
            jet,
            ginv,
            dginv,
            gamma,
            dgamma,
            d2sigma,
            grad,
            dgrad,
            hess,
            laplace,
            dsigma_norm2,
        })
    }

    pub fn dim(&self) -> usize {
        self.jet.dim()
    }

    pub fn g(&self) -> &Matrix {
        &self.jet.g
    }

    pub fn x(&self) -> &[f64] {
        &self.jet.x
    }
}

/// Document for a built-in manifold.
pub fn builtin_doc(name: &str) -> Option<ManifoldDoc> {
    let coords = vec!["x1".to_string(), "x2".to_string()];
    let diag = |f: &str| vec![vec![f.to_string(), "0".to_string()], vec!["0".to_string(), f.to_string()]];
    let doc = |metric: Vec<Vec<String>>, sigma: &str, domain: Option<&str>, bounds: [[f64; 2]; 2], sample_domain: Option<&str>| {
        ManifoldDoc {
            name: name.to_string(),
            dim: 2,
            coords: coords.clone(),
            domain: domain.map(str::to_string),
            metric,
            sigma: sigma.to_string(),
            sample_bounds: Some(bounds.to_vec()),
            sample_domain: sample_domain.map(str::to_string),
        }
    };
    Some(match name {
        "euclidean" => doc(diag("1"), "0", None, [[-3.0, 3.0], [-3.0, 3.0]], None),
        // centro-affine elliptic paraboloid; constant sectional curvature 1
        "paraboloid" => doc(
            diag("2/((x1)^2+(x2)^2+1)"),
            "-log(0.5*((x1)^2+(x2)^2+1))",
            None,
            [[-3.0, 3.0], [-3.0, 3.0]],
            None,
        ),
        // g = e^{2/r²} δ with potential -2/r²: complete but not geodesically
        // connected
        "punctured-plane" => doc(
            diag("exp(2/(x1^2+x2^2))"),
            "-2/(x1^2+x2^2)",
            Some("x1^2+x2^2 > 0"),
            [[-3.0, 3.0], [-3.0, 3.0]],
            Some("x1^2+x2^2 >= 0.25"),
        ),
        "half-plane-exp" => doc(
            diag("1/x2^2"),
            "exp(-x2)",
            Some("x2 > 0"),
            [[-3.0, 3.0], [0.2, 5.0]],
            None,
        ),
        _ => return None,
    })
}

/// Resolve a manifold source: a built-in name or a path to a JSON document.
pub fn load_manifold(source: &str) -> Result<ManifoldDef, ManifoldError> {
    if BUILTIN_NAMES.contains(&source) {
        return ManifoldDef::builtin(source);
    }
    let path = Path::new(source);
    if path.exists() {
        return ManifoldDef::from_json_file(path);
    }
    Err(ManifoldError::UnknownBuiltin(source.to_string()))
}
