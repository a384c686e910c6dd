//! Command-line front end: Lax matrices, duality maps, flows and verification suites.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use bcn_duality::duality::{self, DualityReport};
use bcn_duality::dynamics::{integrate, FlowSpec, GradientMode, Scheme, System};
use bcn_duality::io::{format_real, write_trajectory_csv};
use bcn_duality::matrix::{self, CMat, Structure};
use bcn_duality::params::lambda_of_z;
use bcn_duality::verification::{run_suite, Suite, SuiteConfig};
use bcn_duality::{rsvd, sutherland, CouplingParams, DualPoint, Error, OscillatorPoint, SutherlandPoint};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "bcn-duality", version, about = "BC_n Sutherland / RSvD action-angle duality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a Lax matrix with its eigenvalues and structure residuals.
    Lax(LaxArgs),
    /// Run the forward or backward duality map.
    Map(MapArgs),
    /// Integrate a Hamiltonian flow and write the trajectory CSV.
    Flow(FlowArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Number of particles; inferred from the point when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma2: Option<f64>,
    /// JSON file with either {mu, nu, kappa} or {gamma, gamma1, gamma2}, optionally n.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PointArgs {
    /// Positions, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Vec<f64>,
    /// Momenta, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Vec<f64>,
    /// Dual positions, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Vec<f64>,
    /// Dual angles in radians, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    /// Oscillator coordinates such as `0.3+0.1i`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Vec<Complex64>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    Sutherland,
    RsvdGlobal,
    RsvdAngle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FlowSystem {
    /// Sutherland H1 in (q, p).
    H1,
    /// Sutherland H_k in (q, p).
    Hk,
    /// Dual H0 in (lambda, theta).
    H0,
    /// Dual H_k in (lambda, theta).
    H0k,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Midpoint,
    Yoshida4,
    Tj6,
    Tj8,
}

#[derive(Args)]
struct LaxArgs {
    #[arg(long, value_enum)]
    side: Side,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MapArgs {
    #[arg(value_enum)]
    direction: Direction,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    point: PointArgs,
    /// Batch input: one point per line, `q..., p...` (forward) or `lambda..., theta...` (backward).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, value_enum, default_value_t = FlowSystem::H1)]
    system: FlowSystem,
    /// Index of H_k for `hk` and `h0k`.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Final time.
    #[arg(long = "t-end", default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Tj8)]
    scheme: SchemeArg,
    /// Use central differences with this step instead of exact gradients.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Abort when the trajectory comes this close to the chart boundary.
    #[arg(long)]
    margin: Option<f64>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    point: PointArgs,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 4)]
    n_max: usize,
    /// Base sample count.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Worker threads for sample evaluation; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Tolerance override, `check=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    tolerances: Vec<(String, f64)>,
    /// Omit the timestamp so identical runs give identical bytes.
    #[arg(long)]
    deterministic: bool,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| format!("unknown suite '{s}', expected one of {}", Suite::NAMES.join(", ")))
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected check=value")?;
    Ok((k.to_string(), v.parse::<f64>().map_err(|e| e.to_string())?))
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DegenerateTorus(_) | Error::DegenerateChart { .. } | Error::BoundaryApproach { .. } => 3,
            Error::Parameter(_) | Error::Domain(_) | Error::Invalid(_) | Error::StrongRegularity(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            // the reader went away; nothing left to report
            return Failure { code: 0, message: String::new() };
        }
        Failure::usage(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    n: Option<usize>,
    mu: Option<f64>,
    nu: Option<f64>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
}

impl ParamArgs {
    /// Couplings from flags, overriding the file, with `n` falling back to `inferred`.
    fn resolve(&self, inferred: Option<usize>) -> CliResult<CouplingParams> {
        let mut f = match &self.params {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<ParamsFile>(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
            }
            None => ParamsFile { n: None, mu: None, nu: None, kappa: None, gamma: None, gamma1: None, gamma2: None },
        };
        macro_rules! take {
            ($($field:ident),*) => { $( if self.$field.is_some() { f.$field = self.$field; } )* };
        }
        take!(n, mu, nu, kappa, gamma, gamma1, gamma2);
        let n = match (f.n, inferred) {
            (Some(a), Some(b)) if a != b => {
                return Err(Failure::usage(format!("--n {a} does not match a point with {b} components")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Failure::usage("give --n or a point")),
        };
        let rsvd = [f.mu, f.nu, f.kappa];
        let suth = [f.gamma, f.gamma1, f.gamma2];
        let any = |v: &[Option<f64>]| v.iter().any(Option::is_some);
        match (any(&rsvd), any(&suth)) {
            (true, true) => Err(Failure::usage("give either (mu, nu, kappa) or (gamma, gamma1, gamma2), not both")),
            (false, false) => Err(Failure::usage("missing couplings: give --mu --nu --kappa or --gamma --gamma1 --gamma2")),
            (true, false) => {
                let [mu, nu, kappa] = rsvd;
                let (Some(mu), Some(nu)) = (mu, nu) else {
                    return Err(Failure::usage("need both --mu and --nu"));
                };
                Ok(CouplingParams::from_rsvd(mu, nu, kappa.unwrap_or(0.0), n)?)
            }
            (false, true) => {
                let [Some(g), Some(g1), Some(g2)] = suth else {
                    return Err(Failure::usage("need all of --gamma --gamma1 --gamma2"));
                };
                Ok(CouplingParams::from_sutherland(g, g1, g2, n)?)
            }
        }
    }
}

fn params_json(p: &CouplingParams) -> Value {
    json!({
        "n": p.n,
        "mu": p.mu, "nu": p.nu, "kappa": p.kappa,
        "gamma": p.gamma, "gamma1": p.gamma1, "gamma2": p.gamma2,
    })
}

fn complex_json(z: &Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|c| complex_json(&m[(r, c)])).collect())).collect())
}

fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(out: &Option<PathBuf>, v: &Value) -> CliResult<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| match e.io_error_kind() {
        Some(kind) => Failure::from(io::Error::from(kind)),
        None => Failure::usage(e.to_string()),
    })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_writer(out: &Option<PathBuf>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(open_output(out)?))
}

fn csv_err(e: csv::Error) -> Failure {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Failure::from(e),
        other => Failure::usage(format!("{other:?}")),
    }
}

fn same_len(a: &[f64], b: &[f64], names: (&str, &str)) -> CliResult<usize> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Failure::usage(format!("--{} and --{} need the same nonzero number of components", names.0, names.1)));
    }
    Ok(a.len())
}

fn sutherland_point(pt: &PointArgs) -> CliResult<SutherlandPoint> {
    same_len(&pt.q, &pt.p, ("q", "p"))?;
    Ok(SutherlandPoint::new(pt.q.clone(), pt.p.clone()))
}

fn dual_point(pt: &PointArgs) -> CliResult<DualPoint> {
    same_len(&pt.lambda, &pt.theta, ("lambda", "theta"))?;
    Ok(DualPoint::new(pt.lambda.clone(), pt.theta.clone()))
}

fn cmd_lax(a: &LaxArgs) -> CliResult<()> {
    let (matrix, extra, residuals, p) = match a.side {
        Side::Sutherland => {
            let x = sutherland_point(&a.point)?;
            let p = a.params.resolve(Some(x.n()))?;
            let lax = sutherland::lax_y(&x, &p)?;
            let h = &lax.y * Complex64::new(0.0, -1.0);
            let h1 = sutherland::hamiltonians_by_trace(&x, &p, 1)?[0];
            let residuals = json!({
                "k_gminus": matrix::structure_residual(&lax.k, Structure::LieMinus)?,
                "hermiticity": (&h - h.adjoint()).norm(),
                "h1_trace_vs_closed_form": (h1 - sutherland::h1_closed_form(&x, &p)).abs(),
            });
            (lax.y, json!({ "q": x.q, "p": x.p }), residuals, p)
        }
        Side::RsvdGlobal => {
            if a.point.z.is_empty() {
                return Err(Failure::usage("--z is required for the global chart"));
            }
            let z = OscillatorPoint::new(a.point.z.clone());
            let p = a.params.resolve(Some(z.n()))?;
            let l = rsvd::l_tilde(&z, &p);
            let residuals = json!({ "unitarity": matrix::unitarity_residual(&l) });
            let zs: Vec<Value> = z.z.iter().map(complex_json).collect();
            (l, json!({ "z": zs, "lambda": lambda_of_z(&z, &p) }), residuals, p)
        }
        Side::RsvdAngle => {
            let d = dual_point(&a.point)?;
            let p = a.params.resolve(Some(d.n()))?;
            d.validate(&p, 0.0)?;
            let check = rsvd::a_check(&d, &p)?;
            let h = rsvd::h_matrix(&d.lambda, &p)?.h;
            let l = &h * &check * &h;
            let f = rsvd::f_vector(&d, &p)?;
            let residuals = json!({
                "unitarity": matrix::unitarity_residual(&l),
                "a_unitarity": matrix::unitarity_residual(&check),
                "a_constraint": rsvd::a_constraint_residual(&check, &d.lambda, &f, &p),
            });
            (l, json!({ "lambda": d.lambda, "theta": d.theta }), residuals, p)
        }
    };
    let eig = matrix::eigenvalues(&matrix)?;
    let side = a.side.to_possible_value().expect("no skipped variants").get_name().to_string();
    match a.output.format {
        Format::Json => emit_json(
            &a.output.out,
            &json!({
                "side": side,
                "params": params_json(&p),
                "point": extra,
                "matrix": matrix_json(&matrix),
                "eigenvalues": eig.iter().map(complex_json).collect::<Vec<_>>(),
                "residuals": residuals,
            }),
        ),
        Format::Csv => {
            let mut w = csv_writer(&a.output.out)?;
            w.write_record(["kind", "row", "col", "re", "im"]).map_err(csv_err)?;
            for r in 0..matrix.nrows() {
                for c in 0..matrix.ncols() {
                    let v = matrix[(r, c)];
                    w.write_record(["matrix", &r.to_string(), &c.to_string(), &format_real(v.re), &format_real(v.im)])
                        .map_err(csv_err)?;
                }
            }
            for (i, v) in eig.iter().enumerate() {
                w.write_record(["eigenvalue", &i.to_string(), "", &format_real(v.re), &format_real(v.im)])
                    .map_err(csv_err)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn report_json(r: &DualityReport, p: &CouplingParams, direction: &str) -> Value {
    json!({
        "direction": direction,
        "params": params_json(p),
        "sutherland": { "q": r.sutherland.q, "p": r.sutherland.p },
        "dual": { "lambda": r.dual.lambda, "theta": r.dual.theta },
        "z": r.z.z.iter().map(complex_json).collect::<Vec<_>>(),
        "round_trip_error": r.round_trip_error,
        "constraint_residuals": [r.constraint_residuals.0, r.constraint_residuals.1],
        "branch_error": r.branch_error,
        "h0_error": r.h0_error,
    })
}

fn report_header(n: usize) -> Vec<String> {
    let idx = |s: &'static str| (1..=n).map(move |j| format!("{s}{j}"));
    let mut h: Vec<String> = idx("q").chain(idx("p")).chain(idx("lambda")).chain(idx("theta")).collect();
    h.extend(["round_trip_error", "constraint_residual_1", "constraint_residual_2", "branch_error", "h0_error"].map(String::from));
    h
}

fn report_row(r: &DualityReport) -> Vec<String> {
    let s = &r.sutherland;
    let d = &r.dual;
    s.q.iter()
        .chain(&s.p)
        .chain(&d.lambda)
        .chain(&d.theta)
        .chain([r.round_trip_error, r.constraint_residuals.0, r.constraint_residuals.1, r.branch_error, r.h0_error].iter())
        .map(|v| format_real(*v))
        .collect()
}

fn run_map(direction: Direction, x: &[f64], p: &CouplingParams) -> CliResult<DualityReport> {
    let n = x.len() / 2;
    Ok(match direction {
        Direction::Forward => {
            let pt = SutherlandPoint::new(x[..n].to_vec(), x[n..].to_vec());
            pt.validate(p, 0.0)?;
            duality::forward_report(&pt, p)?
        }
        Direction::Backward => {
            let d = DualPoint::new(x[..n].to_vec(), x[n..].to_vec());
            d.validate(p, 0.0)?;
            duality::backward_report(&d, p)?
        }
    })
}

fn read_batch(path: &PathBuf) -> CliResult<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if row.is_empty() || row.len() % 2 != 0 {
            return Err(Failure::usage(format!("{}:{}: expected an even number of values", path.display(), i + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_map(a: &MapArgs) -> CliResult<()> {
    let name = a.direction.to_possible_value().expect("no skipped variants").get_name().to_string();
    if let Some(path) = &a.input {
        let rows = read_batch(path)?;
        let n = rows.first().map(|r| r.len() / 2).ok_or_else(|| Failure::usage("empty batch input"))?;
        if rows.iter().any(|r| r.len() != 2 * n) {
            return Err(Failure::usage("all batch rows need the same length"));
        }
        let p = a.params.resolve(Some(n))?;
        let reports = rows.iter().map(|r| run_map(a.direction, r, &p)).collect::<CliResult<Vec<_>>>()?;
        return match a.output.format {
            Format::Csv => {
                let mut w = csv_writer(&a.output.out)?;
                w.write_record(report_header(n)).map_err(csv_err)?;
                for r in &reports {
                    w.write_record(report_row(r)).map_err(csv_err)?;
                }
                w.flush()?;
                Ok(())
            }
            Format::Json => emit_json(&a.output.out, &Value::Array(reports.iter().map(|r| report_json(r, &p, &name)).collect())),
        };
    }
    let x: Vec<f64> = match a.direction {
        Direction::Forward => {
            let pt = sutherland_point(&a.point)?;
            pt.q.into_iter().chain(pt.p).collect()
        }
        Direction::Backward => {
            let d = dual_point(&a.point)?;
            d.lambda.into_iter().chain(d.theta).collect()
        }
    };
    let p = a.params.resolve(Some(x.len() / 2))?;
    let r = run_map(a.direction, &x, &p)?;
    match a.output.format {
        Format::Json => emit_json(&a.output.out, &report_json(&r, &p, &name)),
        Format::Csv => {
            let mut w = csv_writer(&a.output.out)?;
            w.write_record(report_header(x.len() / 2)).map_err(csv_err)?;
            w.write_record(report_row(&r)).map_err(csv_err)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn cmd_flow(a: &FlowArgs) -> CliResult<()> {
    let system = match a.system {
        FlowSystem::H1 => System::SutherlandH1,
        FlowSystem::Hk => System::SutherlandHk(a.k),
        FlowSystem::H0 => System::DualH0,
        FlowSystem::H0k => System::DualHk(a.k),
    };
    let x0: Vec<f64> = match a.system {
        FlowSystem::H1 | FlowSystem::Hk => {
            let pt = sutherland_point(&a.point)?;
            pt.q.into_iter().chain(pt.p).collect()
        }
        FlowSystem::H0 | FlowSystem::H0k => {
            let d = dual_point(&a.point)?;
            d.lambda.into_iter().chain(d.theta).collect()
        }
    };
    let p = a.params.resolve(Some(x0.len() / 2))?;
    let mut spec = FlowSpec::new(system, a.dt, a.t_end);
    spec.scheme = match a.scheme {
        SchemeArg::Midpoint => Scheme::Midpoint,
        SchemeArg::Yoshida4 => Scheme::Yoshida4,
        SchemeArg::Tj6 => Scheme::TripleJump6,
        SchemeArg::Tj8 => Scheme::TripleJump8,
    };
    if let Some(h) = a.fd_step {
        spec.gradient = GradientMode::FiniteDifference(h);
    }
    if let Some(m) = a.margin {
        spec.margin = m;
    }
    let traj = integrate(&spec, &x0, &p)?;
    let mut w = open_output(&a.out)?;
    write_trajectory_csv(&traj, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<bool> {
    let mut cfg = SuiteConfig::new(a.suite, a.seed);
    cfg.n_min = a.n_min;
    cfg.n_max = a.n_max;
    cfg.samples = a.samples;
    cfg.jobs = a.jobs;
    cfg.tolerances.extend(a.tolerances.iter().cloned());
    let report = run_suite(&cfg)?;
    match a.output.format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).map_err(|e| Failure::usage(e.to_string()))?;
            if !a.deterministic {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                if let Value::Object(m) = &mut v {
                    let mut out = Map::new();
                    out.insert("generated_unix".into(), json!(secs));
                    out.extend(std::mem::take(m));
                    *m = out;
                }
            }
            emit_json(&a.output.out, &v)?;
        }
        Format::Csv => {
            let mut w = open_output(&a.output.out)?;
            w.write_all(report.to_csv().as_bytes())?;
            w.flush()?;
        }
    }
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.pass && c.kind != bcn_duality::verification::CheckKind::Informational)
        .map(|c| format!("{}/{}{}", c.suite, c.name, c.n.map(|n| format!("[n={n}]")).unwrap_or_default()))
        .collect();
    eprintln!(
        "verify {}: {} ({} checks{})",
        a.suite.name(),
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lax(a) => cmd_lax(a).map(|_| true),
        Command::Map(a) => cmd_map(a).map(|_| true),
        Command::Flow(a) => cmd_flow(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
