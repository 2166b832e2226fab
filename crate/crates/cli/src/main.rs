use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use divstat_core::analyze::{check_suite, hadamard2d_scan, hadamard_scan, sigma_bounds_scan, GridSpec, SuiteOpts};
use divstat_core::connect::{contrast, shoot_connect, ConnectError, ShootOpts};
use divstat_core::curvature::{conjugate_symmetry_residual, ricci};
use divstat_core::geodesic::{integrate_geodesic, IntegratorOpts, PathStatus};
use divstat_core::statstruct::{connection_coeffs, cubic_form, difference_tensor, ConnKind};
use divstat_core::tensor::matrix_to_nested;
use divstat_core::{load_manifold, GeometryError, ManifoldDef};

#[derive(Parser)]
#[command(name = "divstat", version, about = "Divisible statistical structures: geometry, geodesics, scans")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Local geometry at a point, as JSON.
    Describe {
        manifold: String,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Integrate a geodesic and write it as CSV.
    Geodesic {
        manifold: String,
        #[arg(long, default_value = "nabla")]
        conn: ConnKind,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        vel: String,
        #[arg(long = "t-max", allow_hyphen_values = true)]
        t_max: f64,
        /// Number of output intervals.
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join two points by a ∇-geodesic.
    Connect {
        manifold: String,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        /// Replace σ by −σ first.
        #[arg(long)]
        conjugate: bool,
        #[command(flatten)]
        shoot: ShootArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print ρ(p, q).
    Contrast {
        manifold: String,
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[command(flatten)]
        shoot: ShootArgs,
    },
    /// Run every identity check at random points.
    Check {
        manifold: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Scan the Cartan–Hadamard inequality over a grid.
    Hadamard {
        manifold: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 8)]
        planes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ShootArgs {
    #[arg(long, default_value_t = 16)]
    multistart: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl ShootArgs {
    fn opts(&self) -> ShootOpts {
        ShootOpts {
            multistart: self.multistart,
            seed: self.seed,
            ..ShootOpts::default()
        }
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, err: e.into() })
    }
}

const FAIL: u8 = 1;
const INVALID: u8 = 2;
const NUMERICAL: u8 = 3;

fn parse_point(m: &ManifoldDef, s: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    let x = s
        .split(',')
        .map(|t| t.parse::<f64>().map_err(|_| anyhow!("--{flag}: bad number {t:?}")))
        .collect::<anyhow::Result<Vec<f64>>>()
        .code(INVALID)?;
    if x.len() != m.dim() {
        return Err(anyhow!("--{flag}: expected {} coordinates, got {}", m.dim(), x.len())).code(INVALID);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(anyhow!("--{flag}: coordinates must be finite")).code(INVALID);
    }
    Ok(x)
}

/// Input points must lie in the domain with a positive definite metric.
fn in_domain(m: &ManifoldDef, x: &[f64], flag: &str) -> Result<(), Failure> {
    m.metric_at(x).with_context(|| format!("--{flag}")).code(INVALID)?;
    Ok(())
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .code(INVALID),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &Value) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).code(NUMERICAL)?;
    s.push('\n');
    Ok(s)
}

fn load(source: &str) -> Result<ManifoldDef, Failure> {
    load_manifold(source).with_context(|| format!("loading manifold {source:?}")).code(INVALID)
}

fn describe(m: &ManifoldDef, x: &[f64]) -> Result<Value, GeometryError> {
    let local = m.local(x)?;
    let mut conns = serde_json::Map::new();
    for kind in ConnKind::ALL {
        conns.insert(kind.name().into(), json!(connection_coeffs(m, x, kind)?.gamma.to_nested()));
    }
    Ok(json!({
        "manifold": m.name(),
        "coords": m.coords(),
        "point": x,
        "g": matrix_to_nested(local.g()),
        "g_inv": matrix_to_nested(&local.ginv),
        "sigma": local.jet.sigma,
        "dsigma": local.jet.dsigma,
        "grad_sigma": local.grad,
        "hess_sigma": matrix_to_nested(&local.hess),
        "laplace_sigma": local.laplace,
        "K": difference_tensor(m, x)?.to_nested(),
        "C": cubic_form(m, x)?.to_nested(),
        "christoffel": conns,
        "ricci_nabla": matrix_to_nested(&ricci(m, x, ConnKind::Nabla)?),
        "conjugate_symmetry_residual": conjugate_symmetry_residual(m, x)?,
    }))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Describe { manifold, at } => {
            let m = load(&manifold)?;
            let x = parse_point(&m, &at, "at")?;
            in_domain(&m, &x, "at")?;
            let v = describe(&m, &x).code(NUMERICAL)?;
            write_out(None, &to_json(&v)?)?;
            Ok(0)
        }
        Cmd::Geodesic {
            manifold,
            conn,
            from,
            vel,
            t_max,
            steps,
            out,
        } => {
            let m = load(&manifold)?;
            let x0 = parse_point(&m, &from, "from")?;
            let v0 = parse_point(&m, &vel, "vel")?;
            in_domain(&m, &x0, "from")?;
            if !(t_max.is_finite() && t_max > 0.0) || steps < 4 {
                return Err(anyhow!("--t-max must be positive and --steps at least 4")).code(INVALID);
            }
            let opts = IntegratorOpts {
                samples: steps + 1,
                ..IntegratorOpts::default()
            };
            let path = integrate_geodesic(&m, conn, &x0, &v0, t_max, &opts).code(NUMERICAL)?;
            write_out(out.as_ref(), &path.to_csv())?;
            if path.status != PathStatus::Completed {
                return Err(anyhow!(
                    "geodesic stopped at t = {} ({})",
                    path.end.t,
                    path.status.name()
                ))
                .code(NUMERICAL);
            }
            Ok(0)
        }
        Cmd::Connect {
            manifold,
            from,
            to,
            conjugate,
            shoot,
            out,
        } => {
            let mut m = load(&manifold)?;
            if conjugate {
                m = m.with_negated_sigma();
            }
            let p = parse_point(&m, &from, "from")?;
            let q = parse_point(&m, &to, "to")?;
            in_domain(&m, &p, "from")?;
            in_domain(&m, &q, "to")?;
            match shoot_connect(&m, &p, &q, &shoot.opts()) {
                Ok(r) => {
                    write_out(out.as_ref(), &to_json(&serde_json::to_value(&r).code(NUMERICAL)?)?)?;
                    if out.is_some() {
                        eprintln!(
                            "tilde_length={:.16e} endpoint_error={:.3e} branches={}/{}",
                            r.tilde_length,
                            r.endpoint_error,
                            r.solutions.len(),
                            r.attempts
                        );
                    }
                    Ok(0)
                }
                Err(ConnectError::NoConvergence { attempts, best_error }) => Err(anyhow!(
                    "no converged geodesic ({attempts} starts, best endpoint error {best_error:.3e})"
                ))
                .code(NUMERICAL),
                Err(ConnectError::InvalidInput(s)) => Err(anyhow!(s)).code(INVALID),
                Err(e) => Err(e).code(NUMERICAL),
            }
        }
        Cmd::Contrast { manifold, p, q, shoot } => {
            let m = load(&manifold)?;
            let p = parse_point(&m, &p, "p")?;
            let q = parse_point(&m, &q, "q")?;
            in_domain(&m, &p, "p")?;
            in_domain(&m, &q, "q")?;
            let rho = match contrast(&m, &p, &q, &shoot.opts()) {
                Ok(v) => v,
                Err(ConnectError::NoConvergence { .. }) => {
                    return Err(anyhow!("no converged geodesic")).code(NUMERICAL);
                }
                Err(e) => return Err(e).code(NUMERICAL),
            };
            println!("{rho:.16e}");
            Ok(0)
        }
        Cmd::Check {
            manifold,
            samples,
            tol,
            seed,
            json,
        } => {
            let m = load(&manifold)?;
            if samples == 0 || !(tol >= 0.0) {
                return Err(anyhow!("--samples must be positive and --tol non-negative")).code(INVALID);
            }
            let report = check_suite(&m, &SuiteOpts { samples, tol, seed }).code(NUMERICAL)?;
            print!("{}", report.to_table());
            if let Some(p) = json.as_ref() {
                write_out(Some(p), &to_json(&serde_json::to_value(&report).code(NUMERICAL)?)?)?;
            }
            Ok(if report.pass() { 0 } else { FAIL })
        }
        Cmd::Hadamard {
            manifold,
            grid,
            planes,
            seed,
            tol,
            json,
        } => {
            let m = load(&manifold)?;
            let spec = GridSpec::parse(&grid, m.coords()).code(INVALID)?;
            let rendered = spec.render(m.coords());
            let points = spec.points();
            let mut reports = vec![hadamard_scan(&m, points.clone(), planes, seed, tol, &rendered).code(NUMERICAL)?];
            if m.dim() == 2 {
                reports.push(hadamard2d_scan(&m, points.clone(), tol, &rendered).code(NUMERICAL)?);
            }
            let inside: Vec<Vec<f64>> = points.into_iter().filter(|x| m.in_domain(x)).collect();
            let bounds = sigma_bounds_scan(&m, &inside).code(NUMERICAL)?;
            for r in &reports {
                print!("{}", r.to_table());
            }
            println!(
                "  sigma (heuristic, sampled): min={:.17e} at {:?} max={:.17e} at {:?}",
                bounds.min, bounds.argmin, bounds.max, bounds.argmax
            );
            if let Some(p) = json.as_ref() {
                write_out(Some(p), &to_json(&json!({ "scans": reports, "sigma_bounds": bounds }))?)?;
            }
            Ok(if reports.iter().all(|r| r.pass()) { 0 } else { FAIL })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, err }) => {
            eprintln!("divstat: {err:#}");
            ExitCode::from(code)
        }
    }
}
