//! Two-point geodesic problems. A pair `p, q` is joined by a `∇`-geodesic
//! by shooting a geodesic of the Riemannian metric `g̃ = e^σ g` and
//! reparametrizing it; the same solver gives the `g̃`-distance and the
//! contrast function `ρ(p, q) = e^{−σ(p)} d̃(p, q)²`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::error::GeometryError;
use crate::geodesic::{
    exp_map, integrate_geodesic, reparam_from_tilde, GeodesicError, GeodesicPath, IntegratorOpts,
};
use crate::manifold::ManifoldDef;
use crate::statstruct::{ConnKind, StatGeom};
use crate::tensor::{inner, matrix_to_nested, Matrix};

#[derive(Debug, Clone, Error)]
pub enum ConnectError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("no converged geodesic after {attempts} starts (best endpoint error {best_error:e})")]
    NoConvergence { attempts: usize, best_error: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootOpts {
    pub multistart: usize,
    /// Levenberg–Marquardt iterations per start.
    pub max_iter: usize,
    /// Endpoint tolerance in chart coordinates.
    pub eps_bvp: f64,
    pub seed: u64,
    /// Integrator used inside the solver.
    pub shooting: IntegratorOpts,
    /// Integrator for the reported paths.
    pub output: IntegratorOpts,
}

impl Default for ShootOpts {
    fn default() -> Self {
        let tight = IntegratorOpts {
            rtol: 1e-11,
            atol: 1e-13,
            ..IntegratorOpts::default()
        };
        ShootOpts {
            multistart: 16,
            max_iter: 60,
            eps_bvp: 1e-8,
            seed: 42,
            shooting: IntegratorOpts { samples: 101, ..tight },
            output: tight,
        }
    }
}

/// One converged multistart branch.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub start: usize,
    /// Initial velocity of the `g̃`-geodesic on `[0, 1]`.
    pub velocity: Vec<f64>,
    pub tilde_length: f64,
    pub endpoint_error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectResult {
    pub tilde_path: GeodesicPath,
    pub nabla_path: GeodesicPath,
    pub tilde_length: f64,
    pub endpoint_error: f64,
    pub attempts: usize,
    pub converged: bool,
    pub velocity: Vec<f64>,
    /// Every converged branch, ordered by start index.
    pub solutions: Vec<Solution>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Start directions: unit vectors from a rotated golden-ratio sequence
/// (golden angles in the plane, an `R_n` sequence pushed through
/// Box–Muller otherwise).
fn directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 2 {
        let inv_phi = 2.0 / (1.0 + 5f64.sqrt());
        let u0: f64 = rng.random();
        return (0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (u0 + k as f64 * inv_phi).fract();
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let m = n + n % 2;
    // ϕ_m: positive root of x^{m+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (m as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=m).map(|i| phi.powi(-(i as i32)).fract()).collect();
    let shift: Vec<f64> = (0..m).map(|_| rng.random()).collect();
    (0..count)
        .map(|k| {
            let u: Vec<f64> = (0..m).map(|i| (shift[i] + k as f64 * alpha[i]).fract()).collect();
            let mut z = Vec::with_capacity(m);
            for pair in u.chunks(2) {
                let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                let a = 2.0 * std::f64::consts::PI * pair[1];
                z.push(r * a.cos());
                z.push(r * a.sin());
            }
            z.truncate(n);
            let len = norm(&z).max(1e-300);
            z.iter().map(|c| c / len).collect()
        })
        .collect()
}

struct Shooter<'a> {
    m: &'a ManifoldDef,
    p: &'a [f64],
    q: &'a [f64],
    opts: &'a ShootOpts,
}

struct Branch {
    v: Vec<f64>,
    err: f64,
    converged: bool,
    iterations: usize,
}

impl Shooter<'_> {
    fn residual(&self, v: &[f64], iopts: &IntegratorOpts) -> Option<Vec<f64>> {
        let x = exp_map(self.m, ConnKind::LcGTilde, self.p, v, iopts).ok()?;
        Some(x.iter().zip(self.q).map(|(a, b)| a - b).collect())
    }

    /// Damped Gauss–Newton (Levenberg–Marquardt) on `exp̃_p(v) − q` with a
    /// forward-difference Jacobian.
    fn solve(&self, v0: Vec<f64>, iopts: &IntegratorOpts, max_iter: usize) -> Branch {
        let n = v0.len();
        let mut v = v0;
        let Some(mut r) = self.residual(&v, iopts) else {
            return Branch {
                v,
                err: f64::INFINITY,
                converged: false,
                iterations: 0,
            };
        };
        let mut err = norm(&r);
        let mut lambda = 1e-3;
        let mut iterations = 0;
        let mut polish = 0;
        while iterations < max_iter {
            if err <= self.opts.eps_bvp {
                // a couple of extra steps below the tolerance
                polish += 1;
                if polish > 2 || err <= 1e-3 * self.opts.eps_bvp {
                    break;
                }
            }
            iterations += 1;
            let step = 1e-6 * norm(&v).max(1.0);
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut vp = v.clone();
                vp[j] += step;
                let col = match self.residual(&vp, iopts) {
                    Some(rp) => rp.iter().zip(&r).map(|(a, b)| (a - b) / step).collect::<Vec<_>>(),
                    None => {
                        vp[j] = v[j] - step;
                        match self.residual(&vp, iopts) {
                            Some(rm) => r.iter().zip(&rm).map(|(a, b)| (a - b) / step).collect(),
                            None => {
                                return Branch {
                                    v,
                                    err,
                                    converged: err <= self.opts.eps_bvp,
                                    iterations,
                                }
                            }
                        }
                    }
                };
                for i in 0..n {
                    jac[(i, j)] = col[i];
                }
            }
            let rv = DVector::from_column_slice(&r);
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * rv;
            let mut improved = false;
            while lambda < 1e10 {
                let mut a = jtj.clone();
                for i in 0..n {
                    a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
                }
                let Some(delta) = a.lu().solve(&(-&jtr)) else {
                    lambda *= 4.0;
                    continue;
                };
                let vn: Vec<f64> = v.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
                if let Some(rn) = self.residual(&vn, iopts) {
                    let en = norm(&rn);
                    if en < err {
                        v = vn;
                        r = rn;
                        err = en;
                        lambda = (lambda / 3.0).max(1e-12);
                        improved = true;
                        break;
                    }
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        Branch {
            v,
            err,
            converged: err <= self.opts.eps_bvp,
            iterations,
        }
    }
}

/// `|v|_{g̃(p)}`: the `g̃`-length of the geodesic `exp̃_p(sv)`, `s ∈ [0, 1]`.
fn tilde_speed(m: &ManifoldDef, p: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
    let g = m.metric_at(p)?;
    Ok((m.sigma_at(p)?.exp() * inner(&g, v, v)).sqrt())
}

fn check_inputs(m: &ManifoldDef, p: &[f64], q: &[f64], opts: &ShootOpts) -> Result<(), ConnectError> {
    for x in [p, q] {
        m.metric_at(x)?;
    }
    if opts.multistart == 0 || opts.max_iter == 0 {
        return Err(ConnectError::InvalidInput("multistart and iteration counts must be positive".into()));
    }
    if !(opts.eps_bvp > 0.0) {
        return Err(ConnectError::InvalidInput("endpoint tolerance must be positive".into()));
    }
    Ok(())
}

/// Join `p` to `q` by a `∇`-geodesic: shoot `exp̃_p(v) = q` from
/// `opts.multistart` starting velocities, keep the shortest converged
/// `g̃`-geodesic and reparametrize it.
pub fn shoot_connect(m: &ManifoldDef, p: &[f64], q: &[f64], opts: &ShootOpts) -> Result<ConnectResult, ConnectError> {
    check_inputs(m, p, q, opts)?;
    let n = m.dim();
    if p == q {
        let tilde_path = integrate_geodesic(m, ConnKind::LcGTilde, p, &vec![0.0; n], 1.0, &opts.output)?;
        let nabla_path = reparam_from_tilde(m, &tilde_path)?;
        return Ok(ConnectResult {
            tilde_path,
            nabla_path,
            tilde_length: 0.0,
            endpoint_error: 0.0,
            attempts: 0,
            converged: true,
            velocity: vec![0.0; n],
            solutions: vec![Solution {
                start: 0,
                velocity: vec![0.0; n],
                tilde_length: 0.0,
                endpoint_error: 0.0,
                iterations: 0,
            }],
        });
    }
    let chord: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let d = norm(&chord);
    let mut starts = vec![chord];
    starts.extend(
        directions(n, opts.multistart - 1, opts.seed)
            .into_iter()
            .map(|u| u.iter().map(|c| c * d).collect::<Vec<_>>()),
    );
    let shooter = Shooter { m, p, q, opts };
    let branches: Vec<Branch> = starts
        .into_par_iter()
        .map(|v0| shooter.solve(v0, &opts.shooting, opts.max_iter))
        .collect();
    let attempts = branches.len();

    let mut solutions = Vec::new();
    for (start, b) in branches.iter().enumerate() {
        if b.converged {
            solutions.push(Solution {
                start,
                velocity: b.v.clone(),
                tilde_length: tilde_speed(m, p, &b.v)?,
                endpoint_error: b.err,
                iterations: b.iterations,
            });
        }
    }
    // shortest, ties (to solver noise) broken by start index
    let best = solutions.iter().fold(None::<&Solution>, |acc, s| match acc {
        Some(a) if s.tilde_length >= a.tilde_length - 1e-9 * a.tilde_length.max(1.0) => Some(a),
        _ => Some(s),
    });
    let Some(best) = best else {
        let best_error = branches.iter().map(|b| b.err).fold(f64::INFINITY, f64::min);
        return Err(ConnectError::NoConvergence { attempts, best_error });
    };

    // re-solve on the output grid so the reported path itself meets the
    // tolerance
    let fin = shooter.solve(best.velocity.clone(), &opts.output, opts.max_iter);
    if !fin.converged {
        return Err(ConnectError::NoConvergence {
            attempts,
            best_error: fin.err,
        });
    }
    let tilde_path = integrate_geodesic(m, ConnKind::LcGTilde, p, &fin.v, 1.0, &opts.output)?;
    let endpoint_error = dist(&tilde_path.end.x, q);
    let nabla_path = reparam_from_tilde(m, &tilde_path)?;
    Ok(ConnectResult {
        tilde_length: tilde_speed(m, p, &fin.v)?,
        tilde_path,
        nabla_path,
        endpoint_error,
        attempts,
        converged: true,
        velocity: fin.v,
        solutions,
    })
}

/// `d̃(p, q)` as the length of the shortest geodesic found; an upper bound
/// that equals the distance when the minimizing geodesic is among the
/// solutions.
pub fn distance_tilde(m: &ManifoldDef, p: &[f64], q: &[f64], opts: &ShootOpts) -> Result<f64, ConnectError> {
    if p == q {
        check_inputs(m, p, q, opts)?;
        return Ok(0.0);
    }
    Ok(shoot_connect(m, p, q, opts)?.tilde_length)
}

/// `(d̃(p, q), |d̃(p, q) − d̃(q, p)|)`.
pub fn distance_tilde_checked(m: &ManifoldDef, p: &[f64], q: &[f64], opts: &ShootOpts) -> Result<(f64, f64), ConnectError> {
    let a = distance_tilde(m, p, q, opts)?;
    let b = distance_tilde(m, q, p, opts)?;
    Ok((a, (a - b).abs()))
}

/// `ρ(p, q) = e^{−σ(p)} d̃(p, q)²`.
pub fn contrast(m: &ManifoldDef, p: &[f64], q: &[f64], opts: &ShootOpts) -> Result<f64, ConnectError> {
    let d = distance_tilde(m, p, q, opts)?;
    Ok((-m.sigma_at(p)?).exp() * d * d)
}

/// Finite-difference check that `ρ` induces `(g, ∇)` on the diagonal.
#[derive(Debug, Clone, Serialize)]
pub struct ContrastReport {
    pub point: Vec<f64>,
    pub h: f64,
    /// `−½ ∂_{p_i} ∂_{q_j} ρ` on the diagonal.
    pub metric_estimate: Vec<Vec<f64>>,
    /// `max |−½ρ(∂_i|∂_j) − g_ij|`, scale-normalized.
    pub g_deviation: f64,
    /// `max |−½ρ(∂_i∂_j|∂_k) − g(∇_{∂_i}∂_j, ∂_k)|`, scale-normalized.
    pub nabla_deviation: f64,
    /// Smallest eigenvalue of the symmetrized metric estimate.
    pub min_eigenvalue: f64,
}

pub fn contrast_structure_check(
    m: &ManifoldDef,
    p: &[f64],
    h: f64,
    opts: &ShootOpts,
) -> Result<ContrastReport, ConnectError> {
    let n = m.dim();
    if !(h > 0.0) {
        return Err(ConnectError::InvalidInput(format!("step must be positive, got {h}")));
    }
    // offsets in units of h; stencil points lie within ±2h per coordinate
    let point = |off: &[i32]| -> Vec<f64> { p.iter().zip(off).map(|(x, o)| x + h * *o as f64).collect() };
    for i in 0..n {
        for s in [-2, -1, 1, 2] {
            let mut off = vec![0; n];
            off[i] = s;
            let x = point(&off);
            m.metric_at(&x)?;
        }
    }
    let local_opts = ShootOpts {
        multistart: opts.multistart.min(4),
        ..*opts
    };
    // ρ on all needed stencil pairs, computed in parallel
    let unit = |i: usize, s: i32| {
        let mut o = vec![0; n];
        o[i] = s;
        o
    };
    let add = |a: &[i32], b: &[i32]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<i32>>();
    let mut pairs: Vec<(Vec<i32>, Vec<i32>)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                pairs.push((unit(i, si), unit(j, sj)));
            }
        }
    }
    let mut a_points: Vec<Vec<i32>> = vec![vec![0; n]];
    for i in 0..n {
        a_points.push(unit(i, 1));
        a_points.push(unit(i, -1));
        for j in i + 1..n {
            for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                a_points.push(add(&unit(i, si), &unit(j, sj)));
            }
        }
    }
    for a in &a_points {
        for k in 0..n {
            pairs.push((a.clone(), unit(k, 1)));
            pairs.push((a.clone(), unit(k, -1)));
        }
    }
    pairs.sort();
    pairs.dedup();
    let values: Vec<Result<f64, ConnectError>> = pairs
        .par_iter()
        .map(|(a, b)| contrast(m, &point(a), &point(b), &local_opts))
        .collect();
    let mut rho: HashMap<(Vec<i32>, Vec<i32>), f64> = HashMap::new();
    for (key, v) in pairs.into_iter().zip(values) {
        rho.insert(key, v?);
    }
    let f = |a: &[i32], b: &[i32]| rho[&(a.to_vec(), b.to_vec())];

    let s = StatGeom::at(m, p)?;
    let g = s.local.g().clone();
    let est = Matrix::from_fn(n, n, |i, j| {
        let mixed = (f(&unit(i, 1), &unit(j, 1)) - f(&unit(i, 1), &unit(j, -1)) - f(&unit(i, -1), &unit(j, 1))
            + f(&unit(i, -1), &unit(j, -1)))
            / (4.0 * h * h);
        -0.5 * mixed
    });
    let g_deviation = (&est - &g).amax() / 1f64.max(g.amax());

    let nabla = s.connection(ConnKind::Nabla);
    let zero = vec![0; n];
    let gk = |a: &[i32], k: usize| (f(a, &unit(k, 1)) - f(a, &unit(k, -1))) / (2.0 * h);
    let mut worst = 0.0_f64;
    let mut scale = 1.0_f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let third = if i == j {
                    (gk(&unit(i, 1), k) - 2.0 * gk(&zero, k) + gk(&unit(i, -1), k)) / (h * h)
                } else {
                    (gk(&add(&unit(i, 1), &unit(j, 1)), k)
                        - gk(&add(&unit(i, 1), &unit(j, -1)), k)
                        - gk(&add(&unit(i, -1), &unit(j, 1)), k)
                        + gk(&add(&unit(i, -1), &unit(j, -1)), k))
                        / (4.0 * h * h)
                };
                let exact: f64 = (0..n).map(|l| nabla.at(l, i, j) * g[(l, k)]).sum();
                scale = scale.max(exact.abs());
                worst = worst.max((-0.5 * third - exact).abs());
            }
        }
    }
    let sym = (&est + est.transpose()) * 0.5;
    let min_eigenvalue = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(ContrastReport {
        point: p.to_vec(),
        h,
        metric_estimate: matrix_to_nested(&est),
        g_deviation,
        nabla_deviation: worst / scale,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{geodesic_residual, hausdorff};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn m(name: &str) -> ManifoldDef {
        ManifoldDef::builtin(name).unwrap()
    }

    #[test]
    fn directions_are_unit_and_deterministic() {
        for n in [2, 3, 4] {
            let d = directions(n, 10, 7);
            assert_eq!(d, directions(n, 10, 7));
            assert!(d.iter().all(|u| (norm(u) - 1.0).abs() < 1e-12 && u.len() == n));
            assert_ne!(d, directions(n, 10, 8));
        }
    }

    #[test]
    fn conjugate_paraboloid_is_euclidean() {
        let c = m("paraboloid").with_negated_sigma();
        let r = shoot_connect(&c, &[0.0, 0.0], &[1.0, 0.0], &ShootOpts::default()).unwrap();
        assert!(r.converged);
        assert!(r.endpoint_error <= 1e-8);
        assert_abs_diff_eq!(r.tilde_length, 1.0, epsilon = 1e-8);
        assert!(r.nabla_path.samples.iter().all(|s| s.x[1].abs() < 1e-10));
        assert!(geodesic_residual(&c, ConnKind::Nabla, &r.nabla_path).unwrap() < 1e-6);
        assert!(hausdorff(&r.nabla_path.positions(), &r.tilde_path.positions()) < 1e-7);
        let d = distance_tilde(&c, &[0.0, 0.0], &[3.0, 4.0], &ShootOpts::default()).unwrap();
        assert_abs_diff_eq!(d, 5.0, epsilon = 1e-8);
    }

    #[test]
    fn paraboloid_sphere_distance() {
        let p = m("paraboloid");
        let r = shoot_connect(&p, &[0.0, 0.0], &[1.0, 0.0], &ShootOpts::default()).unwrap();
        assert_abs_diff_eq!(r.tilde_length, PI / 2.0, epsilon = 1e-7);
        let rho = contrast(&p, &[0.0, 0.0], &[1.0, 0.0], &ShootOpts::default()).unwrap();
        assert_abs_diff_eq!(rho, PI * PI / 8.0, epsilon = 1e-6);
        let c = p.with_negated_sigma();
        let rho = contrast(&c, &[0.0, 0.0], &[1.0, 0.0], &ShootOpts::default()).unwrap();
        assert_abs_diff_eq!(rho, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn punctured_plane_antipodes_do_not_connect() {
        let p = m("punctured-plane");
        match shoot_connect(&p, &[1.0, 0.0], &[-1.0, 0.0], &ShootOpts::default()) {
            Err(ConnectError::NoConvergence { best_error, .. }) => assert!(best_error > 1e-3, "{best_error}"),
            other => panic!("unexpected {other:?}"),
        }
        let r = shoot_connect(&p, &[1.0, 0.0], &[0.5, 1.0], &ShootOpts::default()).unwrap();
        assert!(r.endpoint_error <= 1e-8);
    }

    #[test]
    fn trivial_pair() {
        for name in crate::manifold::BUILTIN_NAMES {
            let def = m(name);
            let x = def.sample_points(1, 0).remove(0);
            assert_eq!(contrast(&def, &x, &x, &ShootOpts::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn deterministic_results() {
        let h = m("half-plane-exp");
        let o = ShootOpts { multistart: 6, ..Default::default() };
        let a = shoot_connect(&h, &[0.0, 1.0], &[1.0, 2.0], &o).unwrap();
        let b = shoot_connect(&h, &[0.0, 1.0], &[1.0, 2.0], &o).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn euclidean_contrast_structure() {
        let e = m("euclidean");
        let r = contrast_structure_check(&e, &[0.0, 0.0], 1e-3, &ShootOpts::default()).unwrap();
        assert!(r.g_deviation < 1e-5 && r.nabla_deviation < 1e-5, "{r:?}");
        assert!(r.min_eigenvalue > 0.0);
    }

    #[test]
    fn out_of_domain_endpoints() {
        let p = m("punctured-plane");
        assert!(matches!(
            shoot_connect(&p, &[0.0, 0.0], &[1.0, 0.0], &ShootOpts::default()),
            Err(ConnectError::Geometry(GeometryError::OutOfDomain { .. }))
        ));
    }
}
