//! Scans over sample sets: the Cartan–Hadamard inequality for `g̃`, its
//! two-dimensional form, σ-boundedness sampling and the aggregate check
//! suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curvature::{
    bianchi_residuals, closed_form_at, conjugate_symmetry_of, constant_curvature_fit, curvature_relations_at,
    ricci_asymmetry, ricci_from, riemann_of, sec_orthonormal, sectional_tilde_at, statistical_of, PlaneAt,
};
use crate::error::GeometryError;
use crate::manifold::ManifoldDef;
use crate::statstruct::{structure_residuals_at, ConnKind, StatGeom};
use crate::tensor::inner;

#[derive(Debug, Clone, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("empty sample set")]
    Empty,
    #[error("scan needs dimension 2, manifold has dimension {0}")]
    Dimension(usize),
    #[error("bad grid spec {spec:?}: {reason}")]
    Grid { spec: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Pass iff the worst value is at most the tolerance.
    Bound,
    /// Value reported only; always passes.
    Reported,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub worst_value: f64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn bound(name: &str, worst: (f64, Vec<f64>), tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            kind: CheckKind::Bound,
            // NaN never passes
            pass: worst.0 <= tolerance,
            worst_value: worst.0,
            worst_point: worst.1,
            tolerance,
        }
    }

    fn reported(name: &str, worst: (f64, Vec<f64>)) -> Self {
        CheckResult {
            name: name.to_string(),
            kind: CheckKind::Reported,
            worst_value: worst.0,
            worst_point: worst.1,
            tolerance: f64::NAN,
            pass: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub manifold: String,
    pub sample_spec: String,
    pub points: usize,
    /// Grid points outside the domain, not evaluated.
    pub skipped: usize,
    pub checks: Vec<CheckResult>,
}

impl ScanReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{} [{}] points={} skipped={}\n",
            self.manifold, self.sample_spec, self.points, self.skipped
        );
        for c in &self.checks {
            let status = match (c.kind, c.pass) {
                (CheckKind::Reported, _) => "info",
                (_, true) => "pass",
                (_, false) => "FAIL",
            };
            let at: Vec<String> = c.worst_point.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&format!(
                "  {:<28} {:>4}  worst={:<24.17e} tol={:<8.1e} at ({})\n",
                c.name,
                status,
                c.worst_value,
                c.tolerance,
                at.join(", ")
            ));
        }
        out
    }
}

/// A rectangular grid `x1:a:b:n,x2:a:b:n,…` with one axis per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub axes: Vec<(f64, f64, usize)>,
}

impl GridSpec {
    pub fn parse(spec: &str, coords: &[String]) -> Result<Self, AnalyzeError> {
        let bad = |reason: String| AnalyzeError::Grid {
            spec: spec.to_string(),
            reason,
        };
        let mut axes: Vec<Option<(f64, f64, usize)>> = vec![None; coords.len()];
        for part in spec.split(',') {
            let f: Vec<&str> = part.split(':').collect();
            let [name, a, b, n] = f.as_slice() else {
                return Err(bad(format!("axis {part:?} is not name:a:b:n")));
            };
            let idx = coords
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| bad(format!("unknown coordinate {name:?}")))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.parse().map_err(|_| bad(format!("bad count {n:?}")))?;
            if n == 0 || !a.is_finite() || !b.is_finite() || (n == 1 && a != b) || (n > 1 && a >= b) {
                return Err(bad(format!("empty or reversed axis {part:?}")));
            }
            if axes[idx].replace((a, b, n)).is_some() {
                return Err(bad(format!("coordinate {name:?} given twice")));
            }
        }
        let axes = axes
            .into_iter()
            .zip(coords)
            .map(|(a, c)| a.ok_or_else(|| bad(format!("missing coordinate {c:?}"))))
            .collect::<Result<_, _>>()?;
        Ok(GridSpec { axes })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for &(a, b, n) in &self.axes {
            let vals: Vec<f64> = (0..n)
                .map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
                .collect();
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn render(&self, coords: &[String]) -> String {
        self.axes
            .iter()
            .zip(coords)
            .map(|((a, b, n), c)| format!("{c}:{a}:{b}:{n}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Largest value, first occurrence wins ties; NaN counts as largest.
fn worst_of<I: IntoIterator<Item = (f64, Vec<f64>)>>(it: I) -> (f64, Vec<f64>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (v, x) in it {
        if v > best.0 || (v.is_nan() && !best.0.is_nan()) {
            best = (v, x);
        }
    }
    best
}

fn random_plane(rng: &mut ChaCha8Rng, base: &[f64]) -> PlaneAt {
    let n = base.len();
    let mut r = || (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    PlaneAt::new(base, r(), r())
}

/// Coordinate planes followed by `extra` seeded random planes.
fn planes_at(x: &[f64], extra: usize, seed: u64, index: usize) -> Vec<PlaneAt> {
    let n = x.len();
    let mut planes = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            planes.push(PlaneAt::coordinate(x, i, j));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    planes.extend((0..extra).map(|_| random_plane(&mut rng, x)));
    planes
}

fn split_domain(m: &ManifoldDef, points: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, usize) {
    let n = points.len();
    let inside: Vec<Vec<f64>> = points.into_iter().filter(|x| m.in_domain(x)).collect();
    let skipped = n - inside.len();
    (inside, skipped)
}

/// `2g(S(X,Y)Y,X) − (Hess σ(X,X) + Hess σ(Y,Y) + ‖dσ‖²)` for a
/// `g`-orthonormal pair. Non-positive on every plane iff `g̃` has
/// non-positive sectional curvature there.
pub fn hadamard_lhs(s: &StatGeom, plane: &PlaneAt) -> Result<f64, GeometryError> {
    let g = s.local.g();
    let (x, y) = plane.orthonormal(g)?;
    let gs = sec_orthonormal(&statistical_of(s), g, &x, &y);
    let h = &s.local.hess;
    Ok(2.0 * gs - (inner(h, &x, &x) + inner(h, &y, &y) + s.local.dsigma_norm2))
}

/// Maximum of [`hadamard_lhs`] over all sample points and planes.
pub fn hadamard_scan(
    m: &ManifoldDef,
    points: Vec<Vec<f64>>,
    planes: usize,
    seed: u64,
    tol: f64,
    sample_spec: &str,
) -> Result<ScanReport, AnalyzeError> {
    if m.dim() < 2 {
        return Err(AnalyzeError::Dimension(m.dim()));
    }
    let (points, skipped) = split_domain(m, points);
    if points.is_empty() {
        return Err(AnalyzeError::Empty);
    }
    let vals: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let s = StatGeom::at(m, x)?;
            let mut worst = f64::NEG_INFINITY;
            for p in planes_at(x, planes, seed, idx) {
                match hadamard_lhs(&s, &p) {
                    Ok(v) => worst = if v.is_nan() || v > worst { v } else { worst },
                    // a random pair can be numerically degenerate
                    Err(GeometryError::DegeneratePlane { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(worst)
        })
        .collect::<Result<_, GeometryError>>()?;
    let worst = worst_of(vals.into_iter().zip(points.iter().cloned()));
    Ok(ScanReport {
        manifold: m.name().to_string(),
        sample_spec: sample_spec.to_string(),
        points: points.len(),
        skipped,
        checks: vec![CheckResult::bound("hadamard", worst, tol)],
    })
}

/// `2k^g + ‖dσ‖² − Δσ`, the two-dimensional form of [`hadamard_lhs`].
pub fn hadamard2d_value(s: &StatGeom) -> Result<f64, GeometryError> {
    let g = s.local.g();
    let x = s.local.x().to_vec();
    let (u, v) = PlaneAt::coordinate(&x, 0, 1).orthonormal(g)?;
    let k = sec_orthonormal(&riemann_of(s, ConnKind::LcG), g, &u, &v);
    Ok(2.0 * k + s.local.dsigma_norm2 - s.local.laplace)
}

pub fn hadamard2d_scan(
    m: &ManifoldDef,
    points: Vec<Vec<f64>>,
    tol: f64,
    sample_spec: &str,
) -> Result<ScanReport, AnalyzeError> {
    if m.dim() != 2 {
        return Err(AnalyzeError::Dimension(m.dim()));
    }
    let (points, skipped) = split_domain(m, points);
    if points.is_empty() {
        return Err(AnalyzeError::Empty);
    }
    let vals: Vec<f64> = points
        .par_iter()
        .map(|x| hadamard2d_value(&StatGeom::at(m, x)?))
        .collect::<Result<_, GeometryError>>()?;
    let worst = worst_of(vals.into_iter().zip(points.iter().cloned()));
    Ok(ScanReport {
        manifold: m.name().to_string(),
        sample_spec: sample_spec.to_string(),
        points: points.len(),
        skipped,
        checks: vec![CheckResult::bound("hadamard-2d", worst, tol)],
    })
}

/// Sampled extrema of σ. Sampling cannot establish boundedness; the
/// `heuristic` flag is always set.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaBounds {
    pub min: f64,
    pub argmin: Vec<f64>,
    pub max: f64,
    pub argmax: Vec<f64>,
    pub heuristic: bool,
}

pub fn sigma_bounds_scan(m: &ManifoldDef, points: &[Vec<f64>]) -> Result<SigmaBounds, AnalyzeError> {
    if points.is_empty() {
        return Err(AnalyzeError::Empty);
    }
    let mut out = SigmaBounds {
        min: f64::INFINITY,
        argmin: Vec::new(),
        max: f64::NEG_INFINITY,
        argmax: Vec::new(),
        heuristic: true,
    };
    for x in points {
        let s = m.sigma_at(x)?;
        if s < out.min {
            out.min = s;
            out.argmin = x.clone();
        }
        if s > out.max {
            out.max = s;
            out.argmax = x.clone();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuiteOpts {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SuiteOpts {
    fn default() -> Self {
        SuiteOpts {
            samples: 100,
            tol: 1e-8,
            seed: 42,
        }
    }
}

const BOUND_NAMES: [&str; 18] = [
    "metric-compat",
    "codazzi",
    "cubic-symmetry",
    "duality",
    "connection-sum",
    "conformal-christoffel",
    "projective-christoffel",
    "volume-parallel",
    "trace-k",
    "curvature-duality",
    "curvature-gauss",
    "curvature-sum",
    "riemann-antisymmetry",
    "bianchi",
    "ricci-symmetry",
    "sectional-tilde",
    "closed-form-riemann",
    "closed-form-ricci",
];

/// Every identity check at each of `opts.samples` seeded points, plus the
/// reported conjugate-symmetry residual and constant-curvature fit.
pub fn check_suite(m: &ManifoldDef, opts: &SuiteOpts) -> Result<ScanReport, AnalyzeError> {
    let points = m.sample_points(opts.samples, opts.seed);
    if points.is_empty() {
        return Err(AnalyzeError::Empty);
    }
    let n = m.dim();
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, x)| -> Result<Vec<f64>, GeometryError> {
            let s = StatGeom::at(m, x)?;
            let st = structure_residuals_at(&s)?;
            let cr = curvature_relations_at(&s);
            let r = riemann_of(&s, ConnKind::Nabla);
            let (anti, bianchi) = bianchi_residuals(&r);
            let ric = ricci_from(&r, s.local.g())?;
            let mut sec = 0.0_f64;
            if n >= 2 {
                for p in planes_at(x, 1, opts.seed, idx) {
                    match sectional_tilde_at(&s, &p) {
                        Ok(t) => sec = sec.max((t.direct - t.via_s).abs() / 1f64.max(t.direct.abs())),
                        Err(GeometryError::DegeneratePlane { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            let cf = closed_form_at(&s)?;
            let conj = conjugate_symmetry_of(&s.local.hess, s.local.g(), s.local.laplace);
            Ok(vec![
                st.metric_compat,
                st.codazzi,
                st.cubic,
                st.duality,
                st.sum,
                st.contrans,
                st.proj,
                st.volume,
                st.trace_k,
                cr.duality,
                cr.gauss,
                cr.sum,
                anti,
                bianchi,
                ricci_asymmetry(&ric),
                sec,
                cf.riemann,
                cf.ricci,
                // in dim 2 the Hessian is not tied to g; only reported
                conj,
            ])
        })
        .collect::<Result<_, _>>()?;

    let column = |c: usize| worst_of(rows.iter().zip(&points).map(|(r, x)| (r[c], x.clone())));
    let mut checks: Vec<CheckResult> = BOUND_NAMES[..18]
        .iter()
        .enumerate()
        .map(|(c, name)| CheckResult::bound(name, column(c), opts.tol))
        .collect();
    checks.push(CheckResult::reported("conjugate-symmetry", column(18)));
    let (lambda, resid) = constant_curvature_fit(m, &points)?;
    checks.push(CheckResult::reported("constant-curvature-lambda", (lambda, Vec::new())));
    checks.push(CheckResult::reported("constant-curvature-residual", (resid, Vec::new())));
    Ok(ScanReport {
        manifold: m.name().to_string(),
        sample_spec: format!("random:{}:seed={}", opts.samples, opts.seed),
        points: points.len(),
        skipped: 0,
        checks,
    })
}
