//! Command-line driver.  Exit codes: 0 success, 1 a check failed,
//! 2 bad usage or input.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagonal::{self, reduced_residuals, DiagonalField, Domain};
use crate::flat_models::{self, ModelKind, NuBox};
use crate::linalg::QMat;
use crate::parse::{parse_field, parse_poly, parse_rational};
use crate::pde_grid::{self, GridField, GridSpec, PdeError, SorOptions};
use num_traits::Zero;

use crate::poly::{f64_to_q, nu, q_to_f64, Poly, Q};
use crate::riemann::{self, MetricChart, MEMBERSHIP_TOL};
use crate::spin7::SymMatrixField;
use crate::torsion::gl4::{random_invertible, Gl4Action};
use crate::torsion::oracle::formula_deviations;
use crate::torsion::potential::{potential_construct, Grid4, PotentialError, PotentialOptions, SampledV};
use crate::torsion::{curvature_matrices, divergence_residual, elliptic_residual, oracle_domega, oracle_dphi};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "toric-spin7", version, about = "Toric Spin(7) ansatz: verification, holonomy, solvers", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact torsion-free checks for a field.
    Verify(VerifyArgs),
    /// Curvature span and spin(7) membership at sample points.
    Holonomy(HolonomyArgs),
    /// Solve the reduced equation of the r31 case on a box.
    SolveR31(SolveR31Args),
    /// Solve the reduced equation of the r22 case on a box.
    SolveR22(SolveR22Args),
    /// Identities and singular graph of a flat model.
    FlatModel(FlatArgs),
    /// Potential on a grid and its round trip.
    Potential(PotentialArgs),
    /// Change of basis of the torus Lie algebra.
    Transform(TransformArgs),
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// linear-cycle, triple-product, cubic or reducible.
    #[arg(long, conflicts_with = "field")]
    pub family: Option<String>,
    /// Inline field, e.g. "V=diag(nu1,nu2,nu3,nu0)".
    #[arg(long)]
    pub field: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Include the formula-vs-oracle deviation list.
    #[arg(long)]
    pub emit_deviations: bool,
    /// Number of rational sample points for the curvature comparison.
    #[arg(long, default_value_t = 3)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct HolonomyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 3)]
    pub points: usize,
    /// Richardson step for the Ricci check.
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    /// Required span dimension.
    #[arg(long, default_value_t = 21)]
    pub expected: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SorArgs {
    /// Grid sizes, comma separated; several sizes give convergence ratios.
    #[arg(long, default_value = "33")]
    pub n: String,
    #[arg(long, default_value_t = 1.8)]
    pub omega: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,
    /// Single-threaded sweeps.
    #[arg(long)]
    pub serial: bool,
    /// CSV of the finest solution.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveR31Args {
    /// `a,b` for every axis or `a1,b1,a2,b2,a3,b3`.
    #[arg(long = "box", default_value = "1,2", allow_hyphen_values = true)]
    pub bbox: String,
    /// triple-product, cubic, quartic or a polynomial in nu1..nu3.
    #[arg(long, default_value = "triple-product")]
    pub boundary: String,
    #[command(flatten)]
    pub sor: SorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveR22Args {
    #[arg(long = "box", default_value = "1,2", allow_hyphen_values = true)]
    pub bbox: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub c: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub d: String,
    /// harmonic, linear, manufactured or a polynomial in nu1, nu2.
    #[arg(long, default_value = "harmonic")]
    pub boundary: String,
    #[command(flatten)]
    pub sor: SorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FlatArgs {
    /// stab-T2 or stab-S1.
    pub model: String,
    /// Verify the moment identities and the exact invariants.
    #[arg(long)]
    pub check: bool,
    /// Extract the singular graph.
    #[arg(long)]
    pub graph: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// `a,b` for every ν-axis or eight numbers.
    #[arg(long = "box", default_value = "-1,1", allow_hyphen_values = true)]
    pub bbox: String,
    /// CSV of edge samples.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long = "box", default_value = "1,2", allow_hyphen_values = true)]
    pub bbox: String,
    #[arg(long, default_value_t = 17)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub div_tol: f64,
    /// Round-trip tolerance for exit status.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Sixteen rationals, row-major.
    #[arg(long, conflicts_with = "seed", allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Random invertible matrix from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

type CmdResult = Result<(Value, bool), Failure>;

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim();
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(format!("config line {}: bad key '{k}'", i + 1));
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

const COMMANDS: [&str; 7] = ["verify", "holonomy", "solve-r31", "solve-r22", "flat-model", "potential", "transform"];

/// Merges `--config FILE` into the argument list: config entries become
/// flags placed before the command line ones, so flags win.
fn expand_config(args: &[String]) -> Result<Vec<String>, Failure> {
    let mut rest = Vec::new();
    let mut config = None;
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| usage("--config needs a path"))?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a.clone());
        }
    }
    let prog = args.first().cloned().unwrap_or_else(|| "toric-spin7".into());
    let Some(path) = config else {
        return Ok(std::iter::once(prog).chain(rest).collect());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("cannot read config {path}: {e}")))?;
    let entries = parse_config(&text).map_err(usage)?;
    let mut command = rest.first().filter(|c| COMMANDS.contains(&c.as_str())).cloned();
    let mut positional = Vec::new();
    let mut flags = Vec::new();
    for (k, v) in entries {
        match k.as_str() {
            "command" => {
                if command.is_none() {
                    command = Some(v);
                }
            }
            "model" => positional.push(v),
            _ => match v.as_str() {
                "true" => flags.push(format!("--{k}")),
                "false" => {}
                _ => flags.push(format!("--{k}={v}")),
            },
        }
    }
    let command = command.ok_or_else(|| usage("no command given"))?;
    let user: Vec<String> = if rest.first() == Some(&command) { rest[1..].to_vec() } else { rest };
    let user_has_positional = user.first().is_some_and(|a| !a.starts_with('-'));
    let mut out = vec![prog, command];
    if !user_has_positional {
        out.extend(positional);
    }
    out.extend(flags);
    out.extend(user);
    Ok(out)
}

/// Runs the CLI on `args` (including the program name), writing reports
/// to `stdout` and diagnostics to `stderr`.  Returns the exit code.
pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.msg);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    let (result, out) = match &cli.command {
        Command::Verify(a) => (cmd_verify(a), &a.out),
        Command::Holonomy(a) => (cmd_holonomy(a), &a.out),
        Command::SolveR31(a) => (cmd_solve_r31(a), &a.out),
        Command::SolveR22(a) => (cmd_solve_r22(a), &a.out),
        Command::FlatModel(a) => (cmd_flat_model(a), &a.out),
        Command::Potential(a) => (cmd_potential(a), &a.out),
        Command::Transform(a) => (cmd_transform(a), &a.out),
    };
    match result {
        Ok((report, ok)) => {
            let text = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
            match &out.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                        return EXIT_USAGE;
                    }
                }
                None => {
                    let _ = stdout.write_all(text.as_bytes());
                }
            }
            if ok {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.msg);
            f.code
        }
    }
}

pub fn main_with_args(args: Vec<String>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(&args, &mut stdout.lock(), &mut stderr.lock())
}

struct ResolvedField {
    name: String,
    v: SymMatrixField,
    sample_box: [(f64, f64); 4],
}

fn resolve_field(a: &FieldArgs) -> Result<ResolvedField, Failure> {
    match (&a.family, &a.field) {
        (Some(name), None) => {
            let f = if name == "reducible" {
                diagonal::reducible_example()
            } else {
                diagonal::example_family(name).map_err(|e| usage(e.to_string()))?
            };
            Ok(ResolvedField { name: name.clone(), v: f.to_matrix(), sample_box: f.domain.sample_box })
        }
        (None, Some(text)) => {
            let v = parse_field(text).map_err(|e| usage(e.to_string()))?;
            Ok(ResolvedField { name: text.clone(), v, sample_box: [(1.0, 2.0); 4] })
        }
        _ => Err(usage("give exactly one of --family or --field")),
    }
}

fn strings(ps: &[Poly]) -> Vec<String> {
    ps.iter().map(|p| p.to_string()).collect()
}

fn with_header(command: &str, body: Value) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    if let Value::Object(b) = body {
        m.extend(b);
    }
    Value::Object(m)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    status: &'static str,
    detail: Value,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let f = resolve_field(&a.field)?;
    let v = &f.v;
    let mut checks = Vec::new();
    let div = divergence_residual(v);
    let div_free = div.iter().all(Poly::is_zero);
    checks.push(Check { name: "divergence", status: status(div_free), detail: json!({ "residual": strings(&div) }) });

    let points = rational_points(&f, a.points, a.seed);
    let mut deviations = Vec::new();
    if div_free {
        match formula_deviations(v, &points) {
            Ok(d) => {
                checks.push(Check { name: "curvature_vs_oracle", status: status(d.is_empty()), detail: json!({ "deviations": d.len() }) });
                deviations = d;
            }
            Err(e) => checks.push(Check { name: "curvature_vs_oracle", status: "fail", detail: json!({ "error": e.to_string() }) }),
        }
    } else {
        checks.push(Check { name: "curvature_vs_oracle", status: "skipped", detail: json!({ "reason": "not divergence-free" }) });
    }

    let ell = crate::torsion::elliptic::upper_entries(&elliptic_residual(v));
    checks.push(Check { name: "elliptic", status: status(ell.iter().all(Poly::is_zero)), detail: json!({ "residual": strings(&ell) }) });

    if v.is_diagonal() {
        let d = (0..4).map(|i| v.get(i, i).clone()).collect::<Vec<_>>();
        match DiagonalField::new(d.try_into().unwrap(), Domain::unrestricted()) {
            Ok(df) => {
                let r = reduced_residuals(&df);
                checks.push(Check {
                    name: "reduced",
                    status: status(r.is_zero()),
                    detail: json!({ "l_red": strings(&r.l_red), "q_red": strings(&r.q_red) }),
                });
            }
            Err(e) => checks.push(Check { name: "reduced", status: "skipped", detail: json!({ "reason": e.to_string() }) }),
        }
    }

    match oracle_dphi(v, &curvature_matrices(v)) {
        Ok(d) => checks.push(Check { name: "dphi", status: status(d.is_zero()), detail: json!({ "nonzero_components": d.num.nterms() }) }),
        Err(e) => checks.push(Check { name: "dphi", status: "fail", detail: json!({ "error": e.to_string() }) }),
    }
    let dw = oracle_domega(v);
    let nz: usize = dw.iter().map(|w| w.nterms()).sum();
    checks.push(Check { name: "domega", status: status(nz == 0), detail: json!({ "nonzero_components": nz }) });

    let ok = checks.iter().all(|c| c.status != "fail");
    let mut body = json!({
        "field": { "name": f.name, "entries": strings(&v.upper()) },
        "checks": checks,
        "passed": ok,
    });
    if a.emit_deviations {
        body["deviations"] = serde_json::to_value(&deviations).unwrap();
    }
    Ok((with_header("verify", body), ok))
}

/// Rational points on the `1/8` lattice of the sample box where `V` is
/// nondegenerate.
fn rational_points(f: &ResolvedField, n: usize, seed: u64) -> Vec<Vec<Q>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let det = f.v.det();
    let mut out = Vec::new();
    for _ in 0..1000 * n.max(1) {
        if out.len() == n {
            break;
        }
        let p: Vec<Q> = f
            .sample_box
            .iter()
            .map(|&(lo, hi)| f64_to_q(lo + (hi - lo) * rng.gen_range(1..=7) as f64 / 8.0))
            .collect();
        if !det.eval(&p).is_zero() {
            out.push(p);
        }
    }
    out
}

fn sample_points(bx: &[(f64, f64); 4], n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| std::array::from_fn(|k| rng.gen_range(bx[k].0..=bx[k].1))).collect()
}

fn cmd_holonomy(a: &HolonomyArgs) -> CmdResult {
    let f = resolve_field(&a.field)?;
    if a.points == 0 || !(a.h > 0.0) {
        return Err(usage("need --points >= 1 and --h > 0"));
    }
    let torsion_free = divergence_residual(&f.v).iter().all(Poly::is_zero)
        && crate::torsion::elliptic::upper_entries(&elliptic_residual(&f.v)).iter().all(Poly::is_zero);
    if !torsion_free {
        let body = json!({ "field": f.name, "error": "field is not torsion-free", "passed": false });
        return Ok((with_header("holonomy", body), false));
    }
    let fail = |e: riemann::RiemannError| {
        let body = json!({ "field": f.name, "error": e.to_string(), "passed": false });
        Ok((with_header("holonomy", body), false))
    };
    let chart = match MetricChart::new(&f.v) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let points = sample_points(&f.sample_box, a.points, a.seed);
    let rep = match riemann::holonomy_report(&f.name, &chart, &points, a.h) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let ok = rep.span_dim == a.expected && rep.membership_max_defect < MEMBERSHIP_TOL;
    let mut body = serde_json::to_value(&rep).unwrap();
    body["expected"] = json!(a.expected);
    body["passed"] = json!(ok);
    Ok((with_header("holonomy", body), ok))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("bad number '{x}'")))).collect()
}

fn parse_box(s: &str, dim: usize) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let v = parse_floats(s)?;
    let (lo, hi) = if v.len() == 2 {
        (vec![v[0]; dim], vec![v[1]; dim])
    } else if v.len() == 2 * dim {
        ((0..dim).map(|k| v[2 * k]).collect(), (0..dim).map(|k| v[2 * k + 1]).collect())
    } else {
        return Err(usage(format!("--box needs 2 or {} numbers", 2 * dim)));
    };
    if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return Err(usage("--box needs lo < hi"));
    }
    Ok((lo, hi))
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("bad grid size '{x}'")))).collect()
}

/// `ν₁⁴ − 6ν₁ν₂ν₃²`, a non-polynomial-exact solution of the r31 equation.
pub fn r31_quartic() -> Poly {
    &nu(1).pow(4) - &(&(&nu(1) * &nu(2)) * &nu(3).pow(2)).scale(&Q::from_integer(6.into()))
}

/// Solution of `(1 + ν₂)∂²V/∂ν₁² + ∂²V/∂ν₂² = 0` built by matching powers.
pub fn r22_manufactured() -> Poly {
    use crate::poly::{q, qr};
    Poly::from_terms(vec![
        (vec![0, 4, 0, 0], q(1)),
        (vec![0, 2, 2, 0], q(-6)),
        (vec![0, 2, 3, 0], q(-2)),
        (vec![0, 0, 4, 0], q(1)),
        (vec![0, 0, 5, 0], qr(4, 5)),
        (vec![0, 0, 6, 0], qr(2, 15)),
    ])
}

fn r31_boundary(name: &str) -> Result<Poly, Failure> {
    match name {
        "triple-product" => Ok(&(&nu(1) * &nu(2)) * &nu(3)),
        "cubic" => Ok(diagonal::cubic_v0()),
        "quartic" => Ok(r31_quartic()),
        expr => parse_poly(expr).map_err(|e| usage(format!("boundary: {e}"))),
    }
}

fn r31_operator(p: &Poly) -> Poly {
    &(&(&nu(2) * &p.deriv(1).deriv(1)) + &(&nu(3) * &p.deriv(2).deriv(2))) + &(&nu(1) * &p.deriv(3).deriv(3))
}

fn r22_operator(p: &Poly, c: &Q, d: &Q) -> Poly {
    let coef = &Poly::constant(c.clone()) + &nu(2).scale(d);
    &(&coef * &p.deriv(1).deriv(1)) + &p.deriv(2).deriv(2)
}

#[derive(Serialize)]
struct SolveRun {
    n: usize,
    iterations: usize,
    final_update: f64,
    residual_norm: f64,
    max_error: Option<f64>,
}

fn pde_failure(e: PdeError) -> Failure {
    match e {
        PdeError::NotConverged { .. } => Failure { code: EXIT_CHECK, msg: e.to_string() },
        _ => usage(e.to_string()),
    }
}

fn run_solves(
    sizes: &[usize],
    make_spec: impl Fn(usize) -> Result<GridSpec, PdeError>,
    solve: impl Fn(&GridSpec, &SorOptions) -> Result<(GridField, pde_grid::SolveReport), PdeError>,
    exact: Option<&Poly>,
    sor: &SorArgs,
) -> Result<(Vec<SolveRun>, Vec<f64>), Failure> {
    let opts = SorOptions { omega: sor.omega, max_iter: sor.max_iter, parallel: !sor.serial, ..Default::default() };
    if !(sor.omega > 0.0 && sor.omega < 2.0) {
        return Err(usage("--omega must lie in (0, 2)"));
    }
    let mut runs = Vec::new();
    let mut last = None;
    for &n in sizes {
        let spec = make_spec(n).map_err(pde_failure)?;
        let (u, rep) = solve(&spec, &opts).map_err(pde_failure)?;
        let max_error = exact.map(|p| u.interior_max_error(|x| p.eval_f64(x)));
        runs.push(SolveRun { n, iterations: rep.iterations, final_update: rep.final_update, residual_norm: rep.residual_norm, max_error });
        last = Some(u);
    }
    if let (Some(path), Some(u)) = (&sor.grid_out, &last) {
        std::fs::write(path, u.to_csv()).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let ratios = runs
        .windows(2)
        .filter_map(|w| Some(w[0].max_error? / w[1].max_error?))
        .collect();
    Ok((runs, ratios))
}

fn cmd_solve_r31(a: &SolveR31Args) -> CmdResult {
    let (lo, hi) = parse_box(&a.bbox, 3)?;
    let sizes = parse_sizes(&a.sor.n)?;
    let p = r31_boundary(&a.boundary)?;
    if p.depends_on(0) {
        return Err(usage("boundary may only use nu1, nu2, nu3"));
    }
    let exact = r31_operator(&p).is_zero();
    let (runs, ratios) = run_solves(
        &sizes,
        |n| GridSpec::new(vec![1, 2, 3], lo.clone(), hi.clone(), n),
        |s, o| pde_grid::solve_r31(s, |x| p.eval_f64(x), o),
        exact.then_some(&p),
        &a.sor,
    )?;
    let body = json!({
        "boundary": a.boundary,
        "closed_form": exact,
        "box": { "lo": lo, "hi": hi },
        "runs": runs,
        "ratios": ratios,
    });
    Ok((with_header("solve-r31", body), true))
}

fn cmd_solve_r22(a: &SolveR22Args) -> CmdResult {
    let (lo, hi) = parse_box(&a.bbox, 2)?;
    let sizes = parse_sizes(&a.sor.n)?;
    let c = parse_rational(&a.c).map_err(|e| usage(format!("--c: {e}")))?;
    let d = parse_rational(&a.d).map_err(|e| usage(format!("--d: {e}")))?;
    let p = match a.boundary.as_str() {
        "harmonic" => &nu(1).pow(2) - &nu(2).pow(2),
        "linear" => &(&nu(1) + &nu(2).scale(&Q::from_integer(2.into()))) + &Poly::one(),
        "manufactured" => r22_manufactured(),
        expr => parse_poly(expr).map_err(|e| usage(format!("boundary: {e}")))?,
    };
    if p.depends_on(0) || p.depends_on(3) {
        return Err(usage("boundary may only use nu1, nu2"));
    }
    let exact = r22_operator(&p, &c, &d).is_zero();
    let (cf, df) = (q_to_f64(&c), q_to_f64(&d));
    let (runs, ratios) = run_solves(
        &sizes,
        |n| GridSpec::new(vec![1, 2], lo.clone(), hi.clone(), n),
        |s, o| pde_grid::solve_r22(s, cf, df, |x| p.eval_f64(x), o),
        exact.then_some(&p),
        &a.sor,
    )?;
    let body = json!({
        "boundary": a.boundary,
        "c": c.to_string(),
        "d": d.to_string(),
        "closed_form": exact,
        "box": { "lo": lo, "hi": hi },
        "runs": runs,
        "ratios": ratios,
    });
    Ok((with_header("solve-r22", body), true))
}

/// Tolerance for the numeric moment identity check.
pub const MOMENT_TOL: f64 = 1e-10;

fn cmd_flat_model(a: &FlatArgs) -> CmdResult {
    let kind = ModelKind::parse(&a.model).ok_or_else(|| usage(format!("unknown model '{}'", a.model)))?;
    let m = flat_models::model(kind);
    let (check, graph) = if !a.check && !a.graph { (true, true) } else { (a.check, a.graph) };
    let mut body = json!({ "model": kind.name() });
    let mut ok = true;
    if check {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
        let defect = (0..a.points)
            .map(|_| {
                let p: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                flat_models::verify_moment_identities(&m, &p)
            })
            .fold(0.0, f64::max);
        let exact = json!({
            "moment_identities": m.moment_identities_hold(),
            "brackets_vanish": m.brackets_vanish(),
            "phi_closed": m.phi_is_closed(),
            "phi_invariant": m.phi_is_invariant(),
            "nu_invariant": m.nu_is_invariant(),
            "orbits_isotropic": m.orbits_are_isotropic(),
        });
        let all_exact = exact.as_object().unwrap().values().all(|v| v == &json!(true));
        ok &= all_exact && defect < MOMENT_TOL;
        body["check"] = json!({ "points": a.points, "seed": a.seed, "max_defect": defect, "exact": exact });
    }
    if graph {
        let (lo, hi) = parse_box(&a.bbox, 4)?;
        let bx: NuBox = std::array::from_fn(|k| (lo[k], hi[k]));
        let g = flat_models::singular_graph(&m, &bx);
        if let Some(path) = &a.csv_out {
            std::fs::write(path, g.to_csv(33)).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
        }
        let sum = g.direction_sum();
        if !g.vertices.is_empty() {
            ok &= sum == [0; 4] && g.directions_primitive();
        }
        body["graph"] = serde_json::to_value(&g).unwrap();
        body["graph"]["direction_sum"] = json!(sum);
    }
    body["passed"] = json!(ok);
    Ok((with_header("flat-model", body), ok))
}

fn cmd_potential(a: &PotentialArgs) -> CmdResult {
    let f = resolve_field(&a.field)?;
    let (lo, hi) = parse_box(&a.bbox, 4)?;
    let grid = Grid4::new(std::array::from_fn(|k| lo[k]), std::array::from_fn(|k| hi[k]), [a.n; 4])
        .map_err(|e| usage(e.to_string()))?;
    let sampled = SampledV::from_field(&f.v, grid);
    let opts = PotentialOptions { div_tol: a.div_tol };
    match potential_construct(&sampled, opts) {
        Ok(pf) => {
            let err = pf.roundtrip_error(&sampled);
            let sym = pf.symmetry_defect();
            let ok = err < a.tol && sym < a.tol;
            let body = json!({
                "field": f.name,
                "box": { "lo": lo, "hi": hi },
                "n": a.n,
                "roundtrip_error": err,
                "symmetry_defect": sym,
                "tolerance": a.tol,
                "passed": ok,
            });
            Ok((with_header("potential", body), ok))
        }
        Err(e @ PotentialError::NotDivergenceFree { .. }) => {
            let body = json!({ "field": f.name, "error": e.to_string(), "passed": false });
            Ok((with_header("potential", body), false))
        }
        Err(e) => Err(usage(e.to_string())),
    }
}

fn is_solution(v: &SymMatrixField) -> bool {
    divergence_residual(v).iter().all(Poly::is_zero)
        && crate::torsion::elliptic::upper_entries(&elliptic_residual(v)).iter().all(Poly::is_zero)
}

fn cmd_transform(a: &TransformArgs) -> CmdResult {
    let f = resolve_field(&a.field)?;
    let act = match (&a.matrix, a.seed) {
        (Some(text), None) => {
            let entries = text.split(',').map(|x| parse_rational(x.trim())).collect::<Result<Vec<Q>, _>>().map_err(|e| usage(format!("--matrix: {e}")))?;
            if entries.len() != 16 {
                return Err(usage("--matrix needs 16 entries"));
            }
            let m: QMat = entries.chunks(4).map(|r| r.to_vec()).collect();
            Gl4Action::new(m).map_err(|e| usage(e.to_string()))?
        }
        (None, Some(seed)) => random_invertible(seed),
        _ => return Err(usage("give exactly one of --matrix or --seed")),
    };
    let w = act.transform(&f.v);
    let before = is_solution(&f.v);
    let after = is_solution(&w);
    let ok = !before || after;
    let show = |m: &QMat| m.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>();
    let body = json!({
        "field": f.name,
        "matrix": show(act.matrix()),
        "det": act.det().to_string(),
        "nu_map": show(&act.nu_map()),
        "input_entries": strings(&f.v.upper()),
        "output_entries": strings(&w.upper()),
        "input_is_solution": before,
        "output_is_solution": after,
        "passed": ok,
    });
    Ok((with_header("transform", body), ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String) {
        let mut argv = vec!["toric-spin7".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(&argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# comment\ncommand = verify\nfamily=linear-cycle\n\nemit_deviations=true\n").unwrap();
        assert_eq!(c[2], ("emit-deviations".to_string(), "true".to_string()));
        assert!(parse_config("no equals sign").is_err());
        assert!(parse_config("bad key!=1").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&["verify"]).0, 2);
        assert_eq!(call(&["verify", "--family", "nope"]).0, 2);
        assert_eq!(call(&["verify", "--field", "V=diag(nu0"]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["verify", "--family", "cubic", "--bogus"]).0, 2);
    }

    #[test]
    fn verify_exit_codes() {
        let (code, out) = call(&["verify", "--family", "triple-product"]);
        assert_eq!(code, 0, "{out}");
        let (code, out) = call(&["verify", "--field", "V=diag(nu0,1,1,1)"]);
        assert_eq!(code, 1);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["checks"][0]["detail"]["residual"], json!(["1", "0", "0", "0"]));
        assert_eq!(v["schema_version"], json!(SCHEMA_VERSION));
    }

    #[test]
    fn solve_rejects_non_elliptic_box() {
        assert_eq!(call(&["solve-r31", "--box", "-1,1", "--n", "9"]).0, 2);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = call(&["flat-model", "stab-T2", "--check", "--seed", "7", "--points", "5"]);
        let b = call(&["flat-model", "stab-T2", "--check", "--seed", "7", "--points", "5"]);
        assert_eq!(a, b);
        assert_eq!(a.0, 0);
    }
}
