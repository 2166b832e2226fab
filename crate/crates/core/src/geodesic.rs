//! Geodesics of the four connections: adaptive Dormand–Prince 5(4)
//! integration, the exponential map, and the parameter changes that turn
//! `∇`-geodesics into `∇^g̃`-geodesics and back.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::error::GeometryError;
use crate::manifold::{christoffel, invert_spd, Jet, ManifoldDef};
use crate::statstruct::{k_tensor, ConnKind};
use crate::tensor::Tens3;

/// Step size below which a step that keeps leaving the chart is taken to
/// have reached the boundary.
pub const BOUNDARY_RESOLUTION: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("geodesic left the domain at t = {t}")]
    ExitedDomain { t: f64 },
    #[error("step limit reached at t = {t}")]
    StepLimit { t: f64 },
    #[error("need at least 5 samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("expected a {expected} path, got {got}")]
    WrongKind { expected: ConnKind, got: ConnKind },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorOpts {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Number of output samples on a uniform parameter grid, endpoints
    /// included.
    pub samples: usize,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        IntegratorOpts {
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 1_000_000,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStatus {
    Completed,
    ExitedDomain,
    StepLimit,
}

impl PathStatus {
    pub fn name(self) -> &'static str {
        match self {
            PathStatus::Completed => "completed",
            PathStatus::ExitedDomain => "exited-domain",
            PathStatus::StepLimit => "step-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub kind: ConnKind,
    /// Samples on the output grid reached before the integration stopped.
    pub samples: Vec<GeodesicSample>,
    pub status: PathStatus,
    /// Last accepted state; differs from the last sample when the
    /// integration stopped between grid points.
    pub end: GeodesicSample,
}

impl GeodesicPath {
    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    /// CSV with header `t,x1,…,xn,v1,…,vn` and a trailing status comment.
    pub fn to_csv(&self) -> String {
        let n = self.end.x.len();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",v{i}");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:.16e}", s.t);
            for v in s.x.iter().chain(&s.v) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "# status={}", self.status.name());
        out
    }
}

/// Pointwise evaluation of one connection along a curve, reusing buffers.
pub(crate) struct Field<'a> {
    m: &'a ManifoldDef,
    kind: ConnKind,
    jet: Jet,
    scratch: Vec<f64>,
}

impl<'a> Field<'a> {
    pub(crate) fn new(m: &'a ManifoldDef, kind: ConnKind) -> Self {
        Field {
            m,
            kind,
            jet: Jet::zeros(m.dim(), false),
            scratch: Vec::new(),
        }
    }

    /// `Γ^k_{ij}(x)`, or `None` where `x` is outside the chart or the
    /// coefficients cannot be evaluated to finite values.
    pub(crate) fn gamma(&mut self, x: &[f64]) -> Option<Tens3> {
        if !self.m.in_domain(x) {
            return None;
        }
        self.m.jet_into(x, &mut self.scratch, &mut self.jet).ok()?;
        let jet = &self.jet;
        if jet.g.iter().chain(jet.dg.as_slice()).chain(&jet.dsigma).any(|v| !v.is_finite()) {
            return None;
        }
        let ginv = invert_spd(&jet.g, x).ok()?;
        let n = jet.dim();
        let lc = christoffel(&jet.g, &ginv, &jet.dg).1;
        let ds = &jet.dsigma;
        let out = match self.kind {
            ConnKind::LcG => lc,
            _ => {
                let grad: Vec<f64> = (0..n).map(|k| (0..n).map(|l| ginv[(k, l)] * ds[l]).sum()).collect();
                let k = k_tensor(&jet.g, ds, &grad);
                match self.kind {
                    ConnKind::Nabla => lc.map2(&k, |a, b| a + b),
                    ConnKind::NablaBar => lc.map2(&k, |a, b| a - b),
                    _ => Tens3::from_fn(n, |kk, i, j| {
                        let p = if kk == i { ds[j] } else { 0.0 } + if kk == j { ds[i] } else { 0.0 };
                        lc.at(kk, i, j) + k.at(kk, i, j) + p
                    }),
                }
            }
        };
        out.as_slice().iter().all(|v| v.is_finite()).then_some(out)
    }

    /// `Γ(v, v)`.
    pub(crate) fn quad(&mut self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        let gamma = self.gamma(x)?;
        let n = x.len();
        Some(
            (0..n)
                .map(|k| {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            s += gamma.at(k, i, j) * v[i] * v[j];
                        }
                    }
                    s
                })
                .collect(),
        )
    }

    /// Right-hand side of `x' = v, v' = −Γ(v, v)` on the stacked state.
    fn rhs(&mut self, y: &[f64], out: &mut [f64]) -> bool {
        let n = y.len() / 2;
        match self.quad(&y[..n], &y[n..]) {
            Some(q) => {
                out[..n].copy_from_slice(&y[n..]);
                for k in 0..n {
                    out[n + k] = -q[k];
                }
                out.iter().all(|v| v.is_finite())
            }
            None => false,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum Step {
    Accepted { err: f64 },
    Rejected { err: f64 },
    Outside,
}

struct Stepper<'a> {
    field: Field<'a>,
    opts: IntegratorOpts,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
}

impl Stepper<'_> {
    /// Attempt one step of size `h` from `y` whose derivative is `k[0]`.
    fn attempt(&mut self, y: &[f64], h: f64) -> Step {
        let dim = y.len();
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += h * a * self.k[r][i];
                }
                self.ytmp[i] = acc;
            }
            let (head, tail) = self.k.split_at_mut(s);
            let _ = head;
            if !self.field.rhs(&self.ytmp, &mut tail[0]) {
                return Step::Outside;
            }
        }
        // stage 7 is evaluated at the 5th-order solution
        self.ynew.copy_from_slice(&self.ytmp);
        let mut sum = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for s in 0..7 {
                e += (B5[s] - B4[s]) * self.k[s][i];
            }
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(self.ynew[i].abs());
            sum += (h * e / sc).powi(2);
        }
        let err = (sum / dim as f64).sqrt();
        if err <= 1.0 {
            Step::Accepted { err }
        } else {
            Step::Rejected { err }
        }
    }
}

fn check_vec(name: &str, v: &[f64], n: usize) -> Result<(), GeodesicError> {
    if v.len() != n {
        return Err(GeodesicError::InvalidInput(format!("{name} has {} components, expected {n}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(GeodesicError::InvalidInput(format!("{name} is not finite")));
    }
    Ok(())
}

/// Solve `ẍ^k + Γ^k_{ij} ẋ^i ẋ^j = 0` on `[0, t1]`.
///
/// Leaving the chart is a terminal status, not an error: a step that keeps
/// failing is halved until it is shorter than [`BOUNDARY_RESOLUTION`].
pub fn integrate_geodesic(
    m: &ManifoldDef,
    kind: ConnKind,
    x0: &[f64],
    v0: &[f64],
    t1: f64,
    opts: &IntegratorOpts,
) -> Result<GeodesicPath, GeodesicError> {
    let n = m.dim();
    check_vec("start point", x0, n)?;
    check_vec("initial velocity", v0, n)?;
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(GeodesicError::InvalidInput(format!("parameter end must be positive, got {t1}")));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(GeodesicError::InvalidInput("tolerances must be positive".into()));
    }
    if opts.samples < 2 {
        return Err(GeodesicError::InvalidInput("need at least 2 output samples".into()));
    }
    m.local(x0)?;

    let dim = 2 * n;
    let mut st = Stepper {
        field: Field::new(m, kind),
        opts: *opts,
        k: std::array::from_fn(|_| vec![0.0; dim]),
        ytmp: vec![0.0; dim],
        ynew: vec![0.0; dim],
    };
    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    if !st.field.rhs(&y, &mut st.k[0]) {
        return Err(GeometryError::OutOfDomain { point: x0.to_vec() }.into());
    }
    let sample = |t: f64, y: &[f64]| GeodesicSample {
        t,
        x: y[..n].to_vec(),
        v: y[n..].to_vec(),
    };
    let last = opts.samples - 1;
    let grid = |k: usize| if k == last { t1 } else { t1 * k as f64 / last as f64 };
    let mut samples = Vec::with_capacity(opts.samples);
    samples.push(sample(0.0, &y));

    // initial step (Hairer–Wanner heuristic), capped by the grid spacing
    let scale = |i: usize, y: &[f64]| opts.atol + opts.rtol * y[i].abs();
    let d0 = (0..dim).map(|i| (y[i] / scale(i, &y)).powi(2)).sum::<f64>().sqrt();
    let d1 = (0..dim).map(|i| (st.k[0][i] / scale(i, &y)).powi(2)).sum::<f64>().sqrt();
    let spacing = t1 / last as f64;
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(spacing).max(1e-12 * t1);

    let mut t = 0.0;
    let mut next = 1;
    let mut attempts = 0usize;
    let mut rejected_last = false;
    let status = loop {
        if next > last {
            break PathStatus::Completed;
        }
        if attempts >= opts.max_steps {
            break PathStatus::StepLimit;
        }
        attempts += 1;
        let target = grid(next);
        let lands = t + h >= target;
        let h_try = if lands { target - t } else { h };
        match st.attempt(&y, h_try) {
            Step::Accepted { err } => {
                y.copy_from_slice(&st.ynew);
                let (head, tail) = st.k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if rejected_last {
                    factor = factor.min(1.0);
                }
                rejected_last = false;
                if lands {
                    t = target;
                    samples.push(sample(t, &y));
                    next += 1;
                    h = h.max(h_try * factor);
                } else {
                    t += h_try;
                    h = h_try * factor;
                }
            }
            Step::Rejected { err } => {
                rejected_last = true;
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(GeodesicError::StepUnderflow { t });
                }
            }
            Step::Outside => {
                rejected_last = true;
                h = 0.5 * h_try;
                if h < BOUNDARY_RESOLUTION {
                    break PathStatus::ExitedDomain;
                }
            }
        }
    };
    Ok(GeodesicPath {
        kind,
        samples,
        status,
        end: sample(t, &y),
    })
}

/// `exp_p(v)`: the endpoint at parameter 1.
pub fn exp_map(
    m: &ManifoldDef,
    kind: ConnKind,
    p: &[f64],
    v: &[f64],
    opts: &IntegratorOpts,
) -> Result<Vec<f64>, GeodesicError> {
    let path = integrate_geodesic(m, kind, p, v, 1.0, opts)?;
    match path.status {
        PathStatus::Completed => Ok(path.end.x),
        PathStatus::ExitedDomain => Err(GeodesicError::ExitedDomain { t: path.end.t }),
        PathStatus::StepLimit => Err(GeodesicError::StepLimit { t: path.end.t }),
    }
}

fn hermite(a: &GeodesicSample, b: &GeodesicSample, r: f64) -> Vec<f64> {
    let h = b.t - a.t;
    let tau = (r - a.t) / h;
    let (t2, t3) = (tau * tau, tau * tau * tau);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + tau;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    (0..a.x.len())
        .map(|i| h00 * a.x[i] + h10 * h * a.v[i] + h01 * b.x[i] + h11 * h * b.v[i])
        .collect()
}

struct Simpson<'a> {
    f: &'a dyn Fn(f64) -> Result<f64, GeometryError>,
    tol: f64,
}

impl Simpson<'_> {
    #[allow(clippy::too_many_arguments)]
    fn step(&self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, GeometryError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm)?, (self.f)(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            // Richardson extrapolation of the two Simpson estimates
            return Ok(left + right + delta / 15.0);
        }
        Ok(self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)? + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64, GeometryError> {
        let (fa, fb) = ((self.f)(a)?, (self.f)(b)?);
        let m = 0.5 * (a + b);
        let fm = (self.f)(m)?;
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let tol = self.tol * whole.abs().max(b - a);
        self.step(a, b, fa, fm, fb, whole, tol, 30)
    }
}

/// Cumulative `∫ e^{c σ(γ)} dt` over the samples, with `γ` interpolated by
/// cubic Hermite segments from positions and velocities.
fn cumulative(m: &ManifoldDef, path: &GeodesicPath, c: f64) -> Result<Vec<f64>, GeodesicError> {
    let mut out = Vec::with_capacity(path.samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in path.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let f = |r: f64| -> Result<f64, GeometryError> {
            let x = if r == a.t {
                a.x.clone()
            } else if r == b.t {
                b.x.clone()
            } else {
                hermite(a, b, r)
            };
            Ok((c * m.sigma_at(&x)?).exp())
        };
        acc += Simpson { f: &f, tol: 1e-13 }.integrate(a.t, b.t)?;
        out.push(acc);
    }
    Ok(out)
}

fn reparam(
    m: &ManifoldDef,
    path: &GeodesicPath,
    from: ConnKind,
    to: ConnKind,
    c: f64,
) -> Result<GeodesicPath, GeodesicError> {
    if path.kind != from {
        return Err(GeodesicError::WrongKind {
            expected: from,
            got: path.kind,
        });
    }
    if path.samples.len() < 2 {
        return Err(GeodesicError::TooFewSamples { got: path.samples.len() });
    }
    let s = cumulative(m, path, c)?;
    let map = |smp: &GeodesicSample, t: f64| -> Result<GeodesicSample, GeodesicError> {
        let w = (-c * m.sigma_at(&smp.x)?).exp();
        Ok(GeodesicSample {
            t,
            x: smp.x.clone(),
            v: smp.v.iter().map(|v| v * w).collect(),
        })
    };
    let samples = path
        .samples
        .iter()
        .zip(&s)
        .map(|(smp, &t)| map(smp, t))
        .collect::<Result<Vec<_>, _>>()?;
    // the end state lies at most one grid interval past the last sample
    let last = path.samples.last().expect("nonempty");
    let end_t = if path.end.t == last.t {
        *s.last().expect("nonempty")
    } else {
        let f = |r: f64| -> Result<f64, GeometryError> {
            let x = if r == last.t {
                last.x.clone()
            } else if r == path.end.t {
                path.end.x.clone()
            } else {
                hermite(last, &path.end, r)
            };
            Ok((c * m.sigma_at(&x)?).exp())
        };
        s.last().expect("nonempty") + Simpson { f: &f, tol: 1e-13 }.integrate(last.t, path.end.t)?
    };
    Ok(GeodesicPath {
        kind: to,
        samples,
        status: path.status,
        end: map(&path.end, end_t)?,
    })
}

/// Reparametrize a `∇`-geodesic by `s(t) = ∫₀ᵗ e^{2σ(γ(r))} dr`, giving a
/// `∇^g̃`-geodesic with the same image.
pub fn reparam_to_tilde(m: &ManifoldDef, path: &GeodesicPath) -> Result<GeodesicPath, GeodesicError> {
    reparam(m, path, ConnKind::Nabla, ConnKind::LcGTilde, 2.0)
}

/// Inverse of [`reparam_to_tilde`]: `t(s) = ∫₀ˢ e^{−2σ(γ̃(r))} dr`.
pub fn reparam_from_tilde(m: &ManifoldDef, path: &GeodesicPath) -> Result<GeodesicPath, GeodesicError> {
    reparam(m, path, ConnKind::LcGTilde, ConnKind::Nabla, -2.0)
}

/// Weights of the first-derivative finite-difference formula at `z` on the
/// nodes `xs` (Fornberg's recursion).
fn fd_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Largest defect of the geodesic equation over interior samples:
/// `max(|Dv + Γ(v, v)|, |Dx − v|)` with `D` the 5-point finite-difference
/// derivative on the sample grid.
pub fn geodesic_residual(m: &ManifoldDef, kind: ConnKind, path: &GeodesicPath) -> Result<f64, GeodesicError> {
    let s = &path.samples;
    if s.len() < 5 {
        return Err(GeodesicError::TooFewSamples { got: s.len() });
    }
    let n = m.dim();
    let mut field = Field::new(m, kind);
    let mut worst = 0.0_f64;
    for c in 2..s.len() - 2 {
        let nodes: Vec<f64> = s[c - 2..=c + 2].iter().map(|p| p.t).collect();
        let w = fd_weights(s[c].t, &nodes);
        let q = field
            .quad(&s[c].x, &s[c].v)
            .ok_or_else(|| GeometryError::OutOfDomain { point: s[c].x.clone() })?;
        for k in 0..n {
            let dx: f64 = (0..5).map(|a| w[a] * s[c - 2 + a].x[k]).sum();
            let dv: f64 = (0..5).map(|a| w[a] * s[c - 2 + a].v[k]).sum();
            worst = worst.max((dv + q[k]).abs()).max((dx - s[c].v[k]).abs());
        }
    }
    Ok(worst)
}

/// Symmetric Hausdorff distance between two sampled point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = |p: &Vec<f64>, q: &Vec<f64>| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let one = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter()
            .map(|p| b.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}
