//! `gsh`: classify evolution operators, solve Lu = g, and emit certificates.
//!
//! Exit codes: 0 decided/success, 2 input error, 3 unknown at bound,
//! 4 range-membership failure, 5 verification failure.

use clap::{Parser, Subcommand, ValueEnum};
use gsh::adversarial;
use gsh::diophantine::{self, DcStatus};
use gsh::fourier::{self, GridFunction, GridFunctionJson, GridSpec, SpectralField, SpectralFieldJson};
use gsh::global_solver::{self, Annihilator, SolveOptions};
use gsh::numerics::{parse_rational, HalfInt};
use gsh::operator_model::{self, catalog, ClassifyOptions, EvolutionOperator, Status};
use gsh::sublevel::{self, Connectivity, FamilyVerdict};
use gsh::GshError;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_MEMBERSHIP: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Cs,
    Hormander,
    Dc,
    Kernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    Spectral,
    Grid,
}

#[derive(Parser, Debug)]
#[command(name = "gsh", version, about = "Global solvability and hypoellipticity of evolution operators on tori times spheres")]
struct Cli {
    /// lattice bound for witness searches and truncations
    #[arg(long, global = true, default_value_t = 16)]
    bound: usize,
    /// t-grid size (power of two, at least 64)
    #[arg(long, global = true, default_value_t = 512)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// use all cores; otherwise run single-threaded
    #[arg(long, global = true)]
    parallel: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// GS and GH verdicts with clause and witness
    Classify { operator: PathBuf },
    /// Solve Lu = g for a right-hand side given as a spectral field or grid tensor
    Solve {
        operator: PathBuf,
        rhs: PathBuf,
        /// homogeneous coefficient on resonant modes (real, imaginary)
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
        lambda: Option<Vec<f64>>,
    },
    /// Small-divisor condition on the averaged symbol
    CheckDc { operator: PathBuf },
    /// Sublevel sets of the primitive along one direction (or the family search)
    Sublevel {
        operator: PathBuf,
        /// comma-separated integers
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// comma-separated half-integers, e.g. 1,-1/2
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// extra level to report arcs for
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
    },
    /// Counterexample data with self-verification
    Counterexample {
        operator: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// number of sequence terms
        #[arg(long, default_value_t = 10)]
        n: u32,
    },
    /// Convert grid tensors to spectral fields and back
    Transform {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::Spectral)]
        to: Target,
        /// write grid tensors in the binary layout
        #[arg(long)]
        binary: bool,
    },
    /// List the built-in operators, or print one as JSON
    Catalog { name: Option<String> },
}

struct Report {
    body: Value,
    text: String,
    code: u8,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<GshError> for Failure {
    fn from(e: GshError) -> Self {
        let code = match e {
            GshError::Annihilator(_) => EXIT_MEMBERSHIP,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_err(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: msg.into() }
}

fn read_text(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| input_err(format!("{}: {e}", p.display())))
}

fn load_operator(p: &Path) -> Result<EvolutionOperator, Failure> {
    EvolutionOperator::parse(&read_text(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))
}

enum Tensor {
    Spectral(SpectralField),
    Grid(GridFunction),
}

fn load_tensor(p: &Path) -> Result<Tensor, Failure> {
    let bytes = std::fs::read(p).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
    if bytes.starts_with(b"GSHT") {
        return Ok(Tensor::Grid(GridFunction::from_bytes(&bytes)?));
    }
    let v: Value = serde_json::from_slice(&bytes).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
    if v.get("header").is_some() {
        let j: GridFunctionJson = serde_json::from_value(v).map_err(|e| input_err(e.to_string()))?;
        Ok(Tensor::Grid(GridFunction::from_json(j)?))
    } else {
        let j: SpectralFieldJson = serde_json::from_value(v).map_err(|e| input_err(e.to_string()))?;
        Ok(Tensor::Spectral(SpectralField::try_from(j)?))
    }
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, Failure>) -> Result<Vec<T>, Failure> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|x| f(x.trim())).collect()
}

fn parse_half(s: &str) -> Result<HalfInt, Failure> {
    let r = parse_rational(s).map_err(|e| input_err(e.to_string()))?;
    let twice = r * gsh::numerics::rat_int(2);
    if !twice.is_integer() {
        return Err(input_err(format!("{s} is not a half-integer")));
    }
    let t: i64 = twice.to_integer().try_into().map_err(|_| input_err(format!("{s} out of range")))?;
    Ok(HalfInt::new(t))
}

fn join(v: &[HalfInt]) -> String {
    v.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",")
}

fn status_code(s: Status) -> u8 {
    if s == Status::UnknownAtBound {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    }
}

fn status_name(s: Status) -> String {
    serde_json::to_value(s).unwrap().as_str().unwrap_or("?").to_string()
}

fn cmd_classify(cli: &Cli, path: &Path) -> Result<Report, Failure> {
    let op = load_operator(path)?;
    let opts = ClassifyOptions { bound: cli.bound, ..Default::default() };
    let c = operator_model::classify(&op, &opts);
    let mut body = c.to_json();
    body["operator"] = json!(op.describe());
    let text = format!(
        "operator: {}\nGS: {} ({})\nGH: {} ({})\nDC: {}",
        op.describe(),
        status_name(c.gs.status),
        c.gs.clause,
        status_name(c.gh.status),
        c.gh.clause,
        c.dc.status_name()
    );
    let code = status_code(c.gs.status).max(status_code(c.gh.status));
    Ok(Report { body, text, code })
}

fn cmd_solve(cli: &Cli, op_path: &Path, rhs: &Path, lambda: &Option<Vec<f64>>) -> Result<Report, Failure> {
    let op = load_operator(op_path)?;
    let g = match load_tensor(rhs)? {
        Tensor::Spectral(f) => f,
        Tensor::Grid(gf) => fourier::analyze_partial(&gf, cli.bound)?,
    };
    op.check_dims(&g)?;
    match global_solver::annihilator_test(&op, &g, usize::MAX)? {
        Annihilator::In => {}
        out @ Annihilator::Out { .. } => {
            let body = json!({"annihilator": out});
            let text = format!("rhs is outside the range: {}", serde_json::to_string(&out).unwrap());
            return Ok(Report { body, text, code: EXIT_MEMBERSHIP });
        }
    }
    let lam = lambda.as_ref().map(|v| Complex64::new(v[0], v[1])).unwrap_or_default();
    let opts = SolveOptions { lambda: lam, parallel: cli.parallel, ..Default::default() };
    let rep = global_solver::solve(&op, &g, &opts)?;
    let cert = global_solver::decay_certify(&rep, &g);
    let limit = cli.tolerance * (1.0 + g.sup_norm());
    let mut body = rep.to_json();
    body["certificate"] = serde_json::to_value(&cert).unwrap();
    body["tolerance"] = json!(limit);
    let code = if rep.residual_sup <= limit { EXIT_OK } else { EXIT_VERIFY };
    let text = format!("modes: {}\nresidual: {:.3e} (limit {:.3e})\ndecay: {:?}", rep.u.table.len(), rep.residual_sup, limit, rep.decay);
    Ok(Report { body, text, code })
}

fn cmd_check_dc(cli: &Cli, path: &Path) -> Result<Report, Failure> {
    let op = load_operator(path)?;
    let rep = diophantine::dc_check(&op, cli.bound.min(24));
    let code = if matches!(rep.status, DcStatus::Unknown { .. }) { EXIT_UNKNOWN } else { EXIT_OK };
    let text = match &rep.status {
        DcStatus::Holds { m, n, exact } => format!("HOLDS M={m} N={n} exact={exact} ({})", rep.method.name()),
        DcStatus::Fails { sequence } => format!("FAILS ({} terms, {})", sequence.terms.len(), rep.method.name()),
        DcStatus::Unknown { fitted_exponent } => format!("UNKNOWN fitted exponent {fitted_exponent:?}"),
    };
    Ok(Report { body: rep.to_json(), text, code })
}

fn cmd_sublevel(cli: &Cli, path: &Path, xi: &Option<String>, alpha: &Option<String>, m: Option<f64>) -> Result<Report, Failure> {
    let op = load_operator(path)?;
    if xi.is_none() && alpha.is_none() {
        let v = sublevel::connectedness_family(&op, cli.bound)?;
        let (body, text) = match &v {
            FamilyVerdict::Connected { exact, checked } => {
                (json!({"verdict": "CONNECTED", "exact": exact, "checked": checked}), format!("CONNECTED exact={exact} checked={checked}"))
            }
            FamilyVerdict::Disconnected(w) => {
                (json!({"verdict": "DISCONNECTED", "witness": w.to_json()}), format!("DISCONNECTED m={} xi={:?} alpha=[{}]", w.m, w.xi, join(&w.alpha)))
            }
        };
        let code = if matches!(v, FamilyVerdict::Connected { exact: false, .. }) { EXIT_UNKNOWN } else { EXIT_OK };
        return Ok(Report { body, text, code });
    }
    let xi = parse_list(xi.as_deref().unwrap_or(""), |s| s.parse::<i64>().map_err(|e| input_err(format!("xi: {e}"))))?;
    let alpha = parse_list(alpha.as_deref().unwrap_or(""), parse_half)?;
    if xi.len() != op.r || alpha.len() != op.s {
        return Err(input_err(format!("expected {} xi and {} alpha entries", op.r, op.s)));
    }
    let f = sublevel::primitive(&op, &xi, &alpha);
    let conn = sublevel::connected_all_m(&f)?;
    let samples: Vec<[f64; 2]> = sublevel::samples(&f, cli.grid).into_iter().map(|(t, v)| [t, v]).collect();
    let mut body = json!({"xi": xi, "alpha": alpha, "samples": samples});
    let text;
    match &conn {
        Connectivity::Connected => {
            body["verdict"] = json!("CONNECTED");
            text = "CONNECTED".to_string();
        }
        Connectivity::Disconnected { m, arcs } => {
            body["verdict"] = json!("DISCONNECTED");
            body["m"] = json!(m);
            body["arcs"] = json!(arcs);
            text = format!("DISCONNECTED m={m:.12} arcs={arcs:?}");
        }
    }
    if let Some(level) = m {
        body["level"] = json!({"m": level, "arcs": sublevel::sublevel_arcs(&f, level)});
    }
    Ok(Report { body, text, code: EXIT_OK })
}

fn cmd_counterexample(cli: &Cli, path: &Path, kind: Kind, n: u32) -> Result<Report, Failure> {
    let op = load_operator(path)?;
    let unknown = |msg: &str| Report { body: json!({"kind": format!("{kind:?}").to_lowercase(), "found": false, "note": msg}), text: msg.to_string(), code: EXIT_UNKNOWN };
    let verified = |body: Value, ok: bool| {
        let text = format!("{:?} counterexample verified={ok}", kind);
        let mut body = body;
        body["kind"] = json!(format!("{kind:?}").to_lowercase());
        body["found"] = json!(true);
        Report { body, text, code: if ok { EXIT_OK } else { EXIT_VERIFY } }
    };
    match kind {
        Kind::Cs => {
            let Some(w) = operator_model::detect_cs(&op, cli.bound) else {
                return Ok(unknown("no sign-change direction within the bound"));
            };
            let c = adversarial::cs_singular_rhs(&op, &w, n)?;
            Ok(verified(c.to_json(), c.verified()))
        }
        Kind::Hormander => match sublevel::connectedness_family(&op, cli.bound)? {
            FamilyVerdict::Disconnected(w) => {
                let mut ns: Vec<u32> = vec![1, 5, 10, n];
                ns.sort_unstable();
                ns.dedup();
                let hp = adversarial::hormander_pair(&op, &w, &ns)?;
                let expect = (2.0 * std::f64::consts::PI).powi(op.r as i32);
                let ok = hp.omega() < 0.0 && hp.evaluations.iter().all(|e| (e.pairing - expect).abs() <= 1e-8 * expect);
                Ok(verified(hp.to_json(), ok))
            }
            FamilyVerdict::Connected { .. } => Ok(unknown("no split sublevel set within the bound")),
        },
        Kind::Dc => {
            let rep = diophantine::dc_check(&op, cli.bound.min(24));
            match adversarial::dc_violation_singular_data(&rep) {
                Ok(d) => Ok(verified(d.to_json(), d.certified())),
                Err(_) => Ok(unknown(&format!("small-divisor condition is {}", rep.status_name()))),
            }
        }
        Kind::Kernel => match adversarial::homogeneous_kernel_family(&op, cli.bound, cli.grid) {
            Ok(k) => {
                let ok = k.residual <= 1e-10 * (1.0 + k.k_bound) && (k.min_at_zero - 1.0).abs() <= 1e-12;
                Ok(verified(k.to_json(), ok))
            }
            Err(_) => Ok(unknown("no infinite resonant family within the bound")),
        },
    }
}

fn cmd_transform(cli: &Cli, input: &Path, to: Target, binary: bool) -> Result<(Report, Option<Vec<u8>>), Failure> {
    match (load_tensor(input)?, to) {
        (Tensor::Grid(gf), Target::Spectral) => {
            let f = fourier::analyze_partial(&gf, cli.bound)?;
            let body = serde_json::to_value(SpectralFieldJson::from(&f)).unwrap();
            Ok((Report { text: format!("{} modes", f.table.len()), body, code: EXIT_OK }, None))
        }
        (Tensor::Spectral(f), Target::Grid) => {
            let spec = GridSpec::for_bound(f.r, f.s, f.n_t, f.bound);
            let gf = fourier::synthesize(&f, &spec)?;
            let bytes = binary.then(|| gf.to_bytes());
            let body = serde_json::to_value(gf.to_json()).unwrap();
            Ok((Report { text: format!("{} grid values", gf.data.len()), body, code: EXIT_OK }, bytes))
        }
        (Tensor::Grid(_), Target::Grid) | (Tensor::Spectral(_), Target::Spectral) => Err(input_err("input already has the requested form")),
    }
}

fn cmd_catalog(name: &Option<String>) -> Result<Report, Failure> {
    let all = catalog::named();
    match name {
        None => {
            let names: Vec<&str> = all.iter().map(|g| g.0).collect();
            Ok(Report { text: names.join("\n"), body: json!(names), code: EXIT_OK })
        }
        Some(n) => {
            let Some((_, op)) = all.into_iter().find(|g| g.0 == n) else {
                return Err(input_err(format!("unknown operator {n}")));
            };
            let body = serde_json::to_value(op.to_json()).unwrap();
            Ok(Report { text: serde_json::to_string_pretty(&body).unwrap(), body, code: EXIT_OK })
        }
    }
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    if cli.bound < 1 {
        return Err(input_err("--bound must be at least 1"));
    }
    if cli.grid < 64 || !cli.grid.is_power_of_two() {
        return Err(input_err("--grid must be a power of two, at least 64"));
    }
    if !(cli.tolerance > 0.0) {
        return Err(input_err("--tolerance must be positive"));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(Report, Option<Vec<u8>>), Failure> {
    validate(cli)?;
    let rep = match &cli.command {
        Command::Classify { operator } => cmd_classify(cli, operator)?,
        Command::Solve { operator, rhs, lambda } => cmd_solve(cli, operator, rhs, lambda)?,
        Command::CheckDc { operator } => cmd_check_dc(cli, operator)?,
        Command::Sublevel { operator, xi, alpha, m } => cmd_sublevel(cli, operator, xi, alpha, *m)?,
        Command::Counterexample { operator, kind, n } => cmd_counterexample(cli, operator, *kind, *n)?,
        Command::Transform { input, to, binary } => return cmd_transform(cli, input, *to, *binary),
        Command::Catalog { name } => cmd_catalog(name)?,
    };
    Ok((rep, None))
}

fn emit(cli: &Cli, rep: &Report, bytes: Option<Vec<u8>>) -> std::io::Result<()> {
    let rendered = match cli.format {
        Format::Json => serde_json::to_string_pretty(&rep.body).unwrap(),
        Format::Text => rep.text.clone(),
    };
    match (&cli.out, bytes) {
        (Some(p), Some(b)) => std::fs::write(p, b),
        (Some(p), None) => std::fs::write(p, rendered + "\n"),
        (None, _) => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{rendered}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GSH_LOG")).init();
    let cli = Cli::parse();
    if !cli.parallel {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    log::debug!("seed {}", cli.seed);
    match run(&cli) {
        Ok((rep, bytes)) => {
            if let Err(e) = emit(&cli, &rep, bytes) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            ExitCode::from(rep.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
