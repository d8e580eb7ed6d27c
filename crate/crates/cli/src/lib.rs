//! Command-line harness: argument parsing, config merging, dispatch and
//! CSV/JSON emission.
//!
//! Settings resolve as flag, then config file (`--config`, a JSON object
//! keyed by option name with underscores), then built-in default.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fraclog::dirichlet::{assemble, solve_eigs, solve_poisson, AssemblyRoute, Discretization};
use fraclog::domain::{DomainSpec, Grid};
use fraclog::energy::{form_via_multiplier, CompactField, FormTables};
use fraclog::extension::{b1_integral, dtn_limit};
use fraclog::kernels::{symbol, SymbolKind};
use fraclog::pointwise::{
    diff_quotient, eval_fourier, eval_fraclap, eval_fraclog_pv, eval_loglap, PointEvaluation,
};
use fraclog::spectral::{
    counting_analysis, lattice_ball_count, symbol_ball_radius, torus_spectrum_of, DEFAULT_BUDGET,
};
use fraclog::test_functions::{AnalyticTestFunction, Family};
use fraclog::OperatorParams;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

/// Name of the seeded generator recorded in every output's metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";
/// Environment variable read for the worker-thread count.
pub const THREADS_ENV: &str = "FRACLOG_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fraclog::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical or I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "fraclog",
    version,
    about = "Fractional-logarithmic Laplacian experiments"
)]
pub struct Cli {
    /// Dimension (1 or 2).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Order s in (0, 1).
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// JSON file with option overrides.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output prefix; writes PREFIX.csv and PREFIX.json instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random fields.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form constants.
    Constants,
    /// Symbol values on a radial frequency grid.
    Symbol(SymbolArgs),
    /// Pointwise operator values on an analytic test function.
    Apply(ApplyArgs),
    /// Energy-form components of seeded random fields.
    Form(FormArgs),
    /// Dirichlet eigenvalues by Galerkin assembly.
    Eig(EigArgs),
    /// Dirichlet problem with a potential.
    Poisson(PoissonArgs),
    /// Torus counting function against the phase-space prediction.
    Weyl(WeylArgs),
    /// Half-space extension and its boundary limit.
    Extension(ExtensionArgs),
    /// Quick invariant suite.
    Selftest,
}

#[derive(Debug, Args)]
pub struct SymbolArgs {
    /// fractional | logarithmic | fraclog
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub xi_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FunctionArgs {
    /// gaussian | bump
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Center coordinates, comma separated.
    #[arg(long)]
    pub center: Option<String>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    /// fraclog | fraclap | loglap
    #[arg(long)]
    pub operator: Option<String>,
    /// pv | fourier | diff
    #[arg(long)]
    pub route: Option<String>,
    /// Evaluation points separated by ';', coordinates by ','. In 1D a plain
    /// comma list is read as separate points.
    #[arg(long)]
    pub points: Option<String>,
    /// Step of the difference quotient route.
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    /// Lower bound of the interval (square in 2D).
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
    /// Elements per axis.
    #[arg(long)]
    pub elements: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FormArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Number of random fields.
    #[arg(long)]
    pub fields: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    pub count: Option<usize>,
    /// kernel | torus_symbol
    #[arg(long)]
    pub route: Option<String>,
}

#[derive(Debug, Args)]
pub struct PoissonArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Constant potential V.
    #[arg(long)]
    pub potential: Option<f64>,
    /// bump | constant | zero
    #[arg(long)]
    pub rhs: Option<String>,
    /// Coercivity radius r in (0, e^(-|b|/2)).
    #[arg(long)]
    pub r: Option<f64>,
    /// kernel | torus_symbol
    #[arg(long)]
    pub route: Option<String>,
}

#[derive(Debug, Args)]
pub struct WeylArgs {
    #[arg(long)]
    pub torus_side: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Number of equally spaced thresholds ending at lambda-max.
    #[arg(long)]
    pub thresholds: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtensionArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Strictly decreasing heights, comma separated.
    #[arg(long)]
    pub t_list: Option<String>,
}

/// Flag, then config-file entry, then default.
struct Resolver {
    file: Map<String, Value>,
}

impl Resolver {
    fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => {
                        return Err(CliError::Usage(
                            "config file must hold a JSON object".into(),
                        ))
                    }
                    Err(e) => {
                        return Err(CliError::Usage(format!(
                            "config file is not valid JSON: {e}"
                        )))
                    }
                }
            }
        };
        Ok(Self { file })
    }

    fn get<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| {
                CliError::Usage(format!("config key '{key}' has the wrong type: {e}"))
            }),
            None => Ok(default),
        }
    }
}

/// Rows of a CSV table; floats print with 17 significant digits.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// What a command produces.
pub struct Report {
    pub table: Table,
    pub summary: Value,
    /// Exit status when the run itself succeeded (selftest failures give 2).
    pub status: i32,
}

struct Ctx {
    params: OperatorParams,
    seed: u64,
    cfg: Resolver,
}

fn parse_params(cli: &Cli, cfg: &Resolver) -> CliResult<OperatorParams> {
    let n = cfg.get(cli.n, "n", 1usize)?;
    let s = cfg.get(cli.s, "s", 0.5f64)?;
    Ok(OperatorParams::new(n, s)?)
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse {what} entry '{t}'")))
        })
        .collect()
}

fn metadata(ctx: &Ctx, command: &str) -> Value {
    json!({
        "command": command,
        "n": ctx.params.n(),
        "s": ctx.params.s(),
        "seed": ctx.seed,
        "rng": RNG_ALGORITHM,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn test_function(
    ctx: &Ctx,
    a: &FunctionArgs,
    default_family: &str,
) -> CliResult<AnalyticTestFunction> {
    let family: Family = ctx
        .cfg
        .get(a.family.clone(), "family", default_family.to_string())?
        .parse()?;
    let width = ctx.cfg.get(a.width, "width", 1.0)?;
    let amplitude = ctx.cfg.get(a.amplitude, "amplitude", 1.0)?;
    let center = match ctx.cfg.get(a.center.clone(), "center", String::new())? {
        c if c.is_empty() => vec![0.0; ctx.params.n()],
        c => parse_list(&c, "center")?,
    };
    if center.len() != ctx.params.n() {
        return Err(CliError::Usage(format!(
            "center needs {} coordinates",
            ctx.params.n()
        )));
    }
    Ok(AnalyticTestFunction::new(family, center, width, amplitude)?)
}

fn domain(ctx: &Ctx, a: &DomainArgs, elements: usize) -> CliResult<(DomainSpec, usize)> {
    let lo = ctx.cfg.get(a.lo, "lo", -0.15)?;
    let hi = ctx.cfg.get(a.hi, "hi", 0.15)?;
    let e = ctx.cfg.get(a.elements, "elements", elements)?;
    let d = if ctx.params.n() == 1 {
        DomainSpec::interval(lo, hi)?
    } else {
        DomainSpec::square(lo, hi)?
    };
    Ok((d, e))
}

fn cmd_constants(ctx: &Ctx) -> CliResult<Report> {
    let k = ctx.params.constants();
    let pairs = [
        ("c_ns", k.c_ns),
        ("b_ns", k.b_ns),
        ("p_ns", k.p_ns),
        ("d_s", k.d_s),
        ("b1", k.b1),
        ("rho_n", k.rho_n),
        ("c_n", k.c_n),
        ("sphere_measure", k.sphere_measure),
        ("ball_volume", k.ball_volume),
    ];
    let mut table = Table::new(&["name", "value"]);
    let mut obj = Map::new();
    for (name, v) in pairs {
        table.push(vec![name.into(), fmt_f64(v)]);
        obj.insert(name.into(), json!(v));
    }
    Ok(Report {
        table,
        summary: json!({ "metadata": metadata(ctx, "constants"), "constants": obj }),
        status: 0,
    })
}

fn cmd_symbol(ctx: &Ctx, a: &SymbolArgs) -> CliResult<Report> {
    let kind = match ctx
        .cfg
        .get(a.kind.clone(), "kind", "fraclog".to_string())?
        .as_str()
    {
        "fractional" => SymbolKind::Fractional,
        "logarithmic" => SymbolKind::Logarithmic,
        "fraclog" => SymbolKind::Fraclog,
        other => return Err(CliError::Usage(format!("unknown symbol kind '{other}'"))),
    };
    let xi_max = ctx.cfg.get(a.xi_max, "xi_max", 10.0)?;
    let points = ctx.cfg.get(a.points, "points", 101usize)?;
    if !(xi_max > 0.0) || points < 2 {
        return Err(CliError::Usage(
            "need xi-max > 0 and at least 2 points".into(),
        ));
    }
    let mut table = Table::new(&["xi", "symbol"]);
    for i in 0..points {
        let xi = xi_max * i as f64 / (points - 1) as f64;
        table.push(vec![fmt_f64(xi), fmt_f64(symbol(xi, kind, &ctx.params))]);
    }
    Ok(Report {
        table,
        summary: json!({ "metadata": metadata(ctx, "symbol"), "points": points }),
        status: 0,
    })
}

fn cmd_apply(ctx: &Ctx, a: &ApplyArgs) -> CliResult<Report> {
    let u = test_function(ctx, &a.function, "gaussian")?;
    let op = ctx
        .cfg
        .get(a.operator.clone(), "operator", "fraclog".to_string())?;
    let route = ctx.cfg.get(a.route.clone(), "route", "pv".to_string())?;
    let h = ctx.cfg.get(a.h, "h", 1e-3)?;
    let text = ctx.cfg.get(a.points.clone(), "points", "0".to_string())?;
    let n = ctx.params.n();
    let pts: Vec<Vec<f64>> = if n == 1 && !text.contains(';') {
        parse_list(&text, "point")?
            .into_iter()
            .map(|v| vec![v])
            .collect()
    } else {
        text.split(';')
            .map(|p| parse_list(p, "point"))
            .collect::<CliResult<_>>()?
    };
    if pts.iter().any(|p| p.len() != n) {
        return Err(CliError::Usage(format!(
            "every point needs {n} coordinates"
        )));
    }
    let p = &ctx.params;
    let eval = |x: &[f64]| -> CliResult<PointEvaluation> {
        Ok(match (op.as_str(), route.as_str()) {
            ("fraclog", "pv") => eval_fraclog_pv(&u, x, p)?,
            ("fraclog", "fourier") => eval_fourier(&u, x, SymbolKind::Fraclog, p)?,
            ("fraclog", "diff") => diff_quotient(&u, x, p, h)?,
            ("fraclap", "pv") => eval_fraclap(&u, x, p)?,
            ("fraclap", "fourier") => eval_fourier(&u, x, SymbolKind::Fractional, p)?,
            ("loglap", "pv") => eval_loglap(&u, x)?,
            ("loglap", "fourier") => eval_fourier(&u, x, SymbolKind::Logarithmic, p)?,
            (o, r) => {
                return Err(CliError::Usage(format!(
                    "unsupported operator/route pair '{o}'/'{r}'"
                )))
            }
        })
    };
    let cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut header: Vec<&str> = cols.iter().map(String::as_str).collect();
    header.extend(["value", "error_estimate"]);
    let mut table = Table::new(&header);
    for x in &pts {
        let e = eval(x)?;
        let mut row: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
        row.push(fmt_f64(e.value));
        row.push(fmt_f64(e.error_estimate));
        table.push(row);
    }
    let summary = json!({ "metadata": metadata(ctx, "apply"), "operator": op, "route": route, "function": u });
    Ok(Report {
        table,
        summary,
        status: 0,
    })
}

fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> CliResult<CompactField> {
    let c: Vec<f64> = (0..grid.interior_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Ok(CompactField::from_coefficients(grid.clone(), &c)?)
}

fn cmd_form(ctx: &Ctx, a: &FormArgs) -> CliResult<Report> {
    let (d, e) = domain(ctx, &a.domain, if ctx.params.n() == 1 { 64 } else { 12 })?;
    let fields = ctx.cfg.get(a.fields, "fields", 10usize)?;
    let grid = Grid::new(d, e)?;
    let tables = FormTables::new(&grid, &ctx.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut table = Table::new(&[
        "field",
        "e_plus",
        "e_minus",
        "e_s",
        "total",
        "l2_norm_sq",
        "multiplier_e_plus",
    ]);
    for i in 0..fields {
        let u = random_field(&grid, &mut rng)?;
        let f = tables.breakdown(&u)?;
        let m = form_via_multiplier(&u, &ctx.params)?;
        table.push(vec![
            i.to_string(),
            fmt_f64(f.e_plus),
            fmt_f64(f.e_minus),
            fmt_f64(f.e_s),
            fmt_f64(f.total),
            fmt_f64(f.l2_norm_sq),
            fmt_f64(m),
        ]);
    }
    let summary = json!({ "metadata": metadata(ctx, "form"), "elements": e, "fields": fields });
    Ok(Report {
        table,
        summary,
        status: 0,
    })
}

fn route(ctx: &Ctx, flag: &Option<String>) -> CliResult<AssemblyRoute> {
    Ok(ctx
        .cfg
        .get(flag.clone(), "route", "kernel".to_string())?
        .parse()?)
}

fn cmd_eig(ctx: &Ctx, a: &EigArgs) -> CliResult<Report> {
    let (d, e) = domain(ctx, &a.domain, if ctx.params.n() == 1 { 128 } else { 12 })?;
    let count = ctx.cfg.get(a.count, "count", 10usize)?;
    let route = route(ctx, &a.route)?;
    let sys = assemble(&d, &Discretization::new(&d, e)?, &ctx.params, route)?;
    let spec = solve_eigs(&sys, count)?;
    let mut table = Table::new(&["k", "eigenvalue", "residual"]);
    for (k, (l, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
        table.push(vec![(k + 1).to_string(), fmt_f64(*l), fmt_f64(*r)]);
    }
    let one_signed = spec
        .eigenvectors
        .as_ref()
        .map(|v| {
            let c = v.column(0);
            let tol = 1e-8 * c.amax();
            c.iter().all(|x| *x >= -tol)
        })
        .unwrap_or(false);
    let summary = json!({
        "metadata": metadata(ctx, "eig"),
        "route": route.as_str(),
        "elements": e,
        "first_eigenfunction_one_signed": one_signed,
        "gram_defect": spec.gram_defect(&sys.mass),
    });
    Ok(Report {
        table,
        summary,
        status: 0,
    })
}

fn cmd_poisson(ctx: &Ctx, a: &PoissonArgs) -> CliResult<Report> {
    let (d, e) = domain(ctx, &a.domain, 48)?;
    let v = ctx.cfg.get(a.potential, "potential", 14.0)?;
    let rhs = ctx.cfg.get(a.rhs.clone(), "rhs", "bump".to_string())?;
    let r = ctx.cfg.get(a.r, "r", 0.1)?;
    let route = route(ctx, &a.route)?;
    let sys = assemble(&d, &Discretization::new(&d, e)?, &ctx.params, route)?;
    let g = &sys.grid;
    let (lo, hi) = d.bounds[0];
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let f: Vec<f64> = (0..g.node_count())
        .map(|k| {
            let x = g.node_point(k);
            match rhs.as_str() {
                "zero" => Ok(0.0),
                "constant" => Ok(1.0),
                "bump" => {
                    let rho: f64 = x.iter().map(|c| ((c - mid) / half).powi(2)).sum();
                    Ok(if rho < 1.0 {
                        (-1.0 / (1.0 - rho)).exp()
                    } else {
                        0.0
                    })
                }
                other => Err(CliError::Usage(format!(
                    "unknown right-hand side '{other}'"
                ))),
            }
        })
        .collect::<CliResult<_>>()?;
    let (sol, certified) = match solve_poisson(&sys, &vec![v; g.node_count()], &f, r) {
        Ok(s) => (s, true),
        Err(fraclog::Error::Uncertified { solution, .. }) => (*solution, false),
        Err(e) => return Err(e.into()),
    };
    let n = ctx.params.n();
    let cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut header: Vec<&str> = vec!["node"];
    header.extend(cols.iter().map(String::as_str));
    header.push("u");
    let mut table = Table::new(&header);
    for (j, (pt, c)) in g
        .interior_points()
        .iter()
        .zip(&sol.coefficients)
        .enumerate()
    {
        let mut row = vec![j.to_string()];
        row.extend(pt.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(*c));
        table.push(row);
    }
    let summary = json!({
        "metadata": metadata(ctx, "poisson"),
        "certified": certified,
        "certificate": sol.certificate,
        "residual": sol.residual,
        "a_priori_ratio": sol.a_priori_ratio,
        "sup_norm": sol.sup_norm,
    });
    Ok(Report {
        table,
        summary,
        status: 0,
    })
}

fn cmd_weyl(ctx: &Ctx, a: &WeylArgs) -> CliResult<Report> {
    let side = ctx
        .cfg
        .get(a.torus_side, "torus_side", 2.0 * std::f64::consts::PI)?;
    let lmax = ctx.cfg.get(a.lambda_max, "lambda_max", 100.0)?;
    let m = ctx.cfg.get(a.thresholds, "thresholds", 10usize)?;
    let budget = ctx.cfg.get(a.budget, "budget", DEFAULT_BUDGET)?;
    if !(lmax > 0.0) || m == 0 {
        return Err(CliError::Usage(
            "need lambda-max > 0 and at least one threshold".into(),
        ));
    }
    let p = &ctx.params;
    let eigs = torus_spectrum_of(side, p, lmax, SymbolKind::Fraclog, budget)?;
    let lambdas: Vec<f64> = (1..=m).map(|k| lmax * k as f64 / m as f64).collect();
    let volume = side.powi(p.n() as i32);
    let an = counting_analysis(&eigs, &lambdas, volume, p)?;
    let mut table = Table::new(&[
        "lambda",
        "radius",
        "count",
        "riesz",
        "phase_space",
        "geometric_ratio",
    ]);
    for (i, l) in lambdas.iter().enumerate() {
        table.push(vec![
            fmt_f64(*l),
            fmt_f64(symbol_ball_radius(*l, p)?),
            an.data.counts[i].to_string(),
            fmt_f64(an.data.riesz[i]),
            fmt_f64(an.phase_space[i]),
            fmt_f64(an.geometric_ratio[i]),
        ]);
    }
    let summary =
        json!({ "metadata": metadata(ctx, "weyl"), "torus_side": side, "eigenvalues": eigs.len() });
    Ok(Report {
        table,
        summary,
        status: 0,
    })
}

fn cmd_extension(ctx: &Ctx, a: &ExtensionArgs) -> CliResult<Report> {
    let u = test_function(ctx, &a.function, "gaussian")?;
    let x = ctx.cfg.get(a.x, "x", 0.0)?;
    let ts = parse_list(
        &ctx.cfg.get(
            a.t_list.clone(),
            "t_list",
            "0.1,0.05,0.025,0.0125".to_string(),
        )?,
        "t-list",
    )?;
    let r = dtn_limit(&u, &[x], &ctx.params, &ts)?;
    let mut table = Table::new(&["t", "w", "v", "dtn_term"]);
    for d in &r.samples {
        table.push(vec![
            fmt_f64(d.t),
            fmt_f64(d.w),
            fmt_f64(d.v),
            fmt_f64(d.dtn_term),
        ]);
    }
    let summary = json!({
        "metadata": metadata(ctx, "extension"),
        "extrapolated": r.value,
        "exponent": r.exponent,
        "warning": r.warning,
        "b1_integral": b1_integral(&ctx.params),
        "b1_closed_form": ctx.params.constants().b1,
    });
    Ok(Report {
        table,
        summary,
        status: 0,
    })
}

/// One named check of the quick suite.
fn check(table: &mut Table, failed: &mut usize, name: &str, ok: bool, detail: f64) {
    if !ok {
        *failed += 1;
    }
    table.push(vec![name.into(), ok.to_string(), fmt_f64(detail)]);
}

fn cmd_selftest(ctx: &Ctx) -> CliResult<Report> {
    use std::f64::consts::{LN_2, PI};
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut t = Table::new(&["check", "passed", "detail"]);
    let mut failed = 0;
    let p1 = OperatorParams::new(1, 0.5)?;
    let k = p1.constants();
    let dev = [
        k.c_ns - 1.0 / PI,
        k.b_ns - (2.0 - 2.0 * EULER),
        k.d_s - 1.0,
        k.b1 + 2.0 * LN_2,
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    check(
        &mut t,
        &mut failed,
        "closed_form_constants",
        dev < 1e-12,
        dev,
    );

    let d = (1..=19)
        .map(|i| fraclog::specfun::b_derivative_check(1, 0.05 * i as f64, 1e-5))
        .collect::<fraclog::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    check(&mut t, &mut failed, "b_is_log_derivative", d < 1e-7, d);

    let g = AnalyticTestFunction::gaussian(vec![0.0], 1.0, 1.0)?;
    let pv = eval_fraclog_pv(&g, &[0.4], &p1)?.value;
    let fo = eval_fourier(&g, &[0.4], SymbolKind::Fraclog, &p1)?.value;
    let rel = ((pv - fo) / fo).abs();
    check(&mut t, &mut failed, "pv_matches_fourier", rel < 1e-4, rel);

    let grid = Grid::new(DomainSpec::interval(-0.15, 0.15)?, 64)?;
    let bump = CompactField::from_fn(grid.clone(), |x| {
        let r = (x[0] / 0.15).powi(2);
        if r < 1.0 {
            (-1.0 / (1.0 - r)).exp()
        } else {
            0.0
        }
    });
    let tables = FormTables::new(&grid, &p1)?;
    let ep = tables.breakdown(&bump)?.e_plus;
    let rel = ((ep - form_via_multiplier(&bump, &p1)?) / ep).abs();
    check(
        &mut t,
        &mut failed,
        "plancherel_form_identity",
        rel < 1e-2,
        rel,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let u = random_field(&grid, &mut rng)?;
        let scale = tables.breakdown(&u)?.e_s;
        worst = worst
            .min(tables.e_minus_bound_slack(&u)? / scale)
            .min(tables.small_diameter_slack(&u)? / scale)
            .min(tables.split_bound_slack(&u, 0.3)? / scale)
            .min(tables.poincare_ratio(&u)?);
    }
    check(
        &mut t,
        &mut failed,
        "form_inequalities",
        worst >= -1e-8,
        worst,
    );

    let dom = DomainSpec::interval(-0.15, 0.15)?;
    let disc = Discretization::new(&dom, 48)?;
    let a = solve_eigs(&assemble(&dom, &disc, &p1, AssemblyRoute::Kernel)?, 5)?;
    let b = solve_eigs(&assemble(&dom, &disc, &p1, AssemblyRoute::TorusSymbol)?, 5)?;
    let gap = a
        .eigenvalues
        .iter()
        .zip(&b.eigenvalues)
        .map(|(x, y)| ((x - y) / x).abs())
        .fold(0.0, f64::max);
    check(
        &mut t,
        &mut failed,
        "galerkin_routes_agree",
        gap < 0.02 && a.eigenvalues[0] > 0.0,
        gap,
    );

    let sys = assemble(&dom, &disc, &p1, AssemblyRoute::Kernel)?;
    let nodes = sys.grid.node_count();
    let f: Vec<f64> = (0..nodes)
        .map(|k| (-(sys.grid.node_point(k)[0] * 20.0).powi(2)).exp())
        .collect();
    let sol = solve_poisson(&sys, &vec![14.0; nodes], &f, 0.1)?;
    check(
        &mut t,
        &mut failed,
        "poisson_a_priori_bound",
        sol.a_priori_ratio <= 1.0 + 1e-9,
        sol.a_priori_ratio,
    );

    let side = 2.0 * PI;
    let eigs = torus_spectrum_of(side, &p1, 1000.0, SymbolKind::Fraclog, DEFAULT_BUDGET)?;
    let lambdas: Vec<f64> = (1..=10).map(|i| 97.0 * i as f64).collect();
    let an = counting_analysis(&eigs, &lambdas, side, &p1)?;
    let mut mismatch = 0.0;
    for (l, c) in lambdas.iter().zip(&an.data.counts) {
        if *c != lattice_ball_count(side, 1, symbol_ball_radius(*l, &p1)?) {
            mismatch += 1.0;
        }
    }
    check(
        &mut t,
        &mut failed,
        "lattice_ball_identity",
        mismatch == 0.0,
        mismatch,
    );

    let b1 = (b1_integral(&p1) - k.b1).abs();
    check(&mut t, &mut failed, "b1_integral", b1 < 1e-8, b1);

    let dtn = dtn_limit(&g, &[0.0], &p1, &[0.1, 0.05, 0.025, 0.0125])?.value;
    let anchor = eval_fourier(&g, &[0.0], SymbolKind::Fraclog, &p1)?.value;
    let rel = ((dtn - anchor) / anchor).abs();
    check(&mut t, &mut failed, "extension_dtn_limit", rel < 1e-2, rel);

    let summary = json!({ "metadata": metadata(ctx, "selftest"), "failed": failed });
    Ok(Report {
        table: t,
        summary,
        status: if failed == 0 { 0 } else { 2 },
    })
}

/// Runs a parsed command and returns its report.
pub fn execute(cli: &Cli) -> CliResult<Report> {
    let cfg = Resolver::load(cli.config.as_ref())?;
    let params = parse_params(cli, &cfg)?;
    let seed = cfg.get(cli.seed, "seed", 0u64)?;
    let ctx = Ctx { params, seed, cfg };
    match &cli.command {
        Command::Constants => cmd_constants(&ctx),
        Command::Symbol(a) => cmd_symbol(&ctx, a),
        Command::Apply(a) => cmd_apply(&ctx, a),
        Command::Form(a) => cmd_form(&ctx, a),
        Command::Eig(a) => cmd_eig(&ctx, a),
        Command::Poisson(a) => cmd_poisson(&ctx, a),
        Command::Weyl(a) => cmd_weyl(&ctx, a),
        Command::Extension(a) => cmd_extension(&ctx, a),
        Command::Selftest => cmd_selftest(&ctx),
    }
}

fn emit(cli: &Cli, report: &Report, stdout: &mut dyn Write) -> CliResult<()> {
    let csv = report.table.render();
    let json = serde_json::to_string_pretty(&report.summary).expect("serializable") + "\n";
    match &cli.out {
        Some(prefix) => {
            std::fs::write(prefix.with_extension("csv"), csv)?;
            std::fs::write(prefix.with_extension("json"), json)?;
        }
        None => {
            stdout.write_all(csv.as_bytes())?;
            stdout.write_all(json.as_bytes())?;
        }
    }
    Ok(())
}

/// Full entry point: parse, run, write; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 1;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    let result = execute(&cli).and_then(|r| emit(&cli, &r, stdout).map(|_| r.status));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Sizes the worker pool from [`THREADS_ENV`] when set.
pub fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}
