use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use toeplitz::confine::{
    build_confined, restrict_parameters, verify_confinement, verify_restriction, ConfineError, RestrictionPlan, Seeds,
};
use toeplitz::exact::{parse_rational, rational_text, MultiRat, Rational, VarId};
use toeplitz::flow::{balance_residual, check_dependence_table, solve_balance, Mode, Params};
use toeplitz::gamma::{dump_text, two_path_check, verify_gamma_structure, RecursionSpec};
use toeplitz::lax::{verify_appendix_structure, StructureReport};
use toeplitz::verify::{
    claim_suite, emit_report, iterate_exact, iterate_numeric, numeric_shadow, seed_rationals, seed_series, SuiteOptions,
};

#[derive(Parser)]
#[command(name = "toeplitz", about = "Exact singularity-confinement checks for Toeplitz-lattice recursions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recursion polynomials: two-path check and structure.
    Gamma(RunArgs),
    /// Balance solution of the flow around the pole.
    Balance(RunArgs),
    /// Parameter restriction and tangency propagation.
    Restrict(RunArgs),
    /// Confined solution as Laurent series in lambda.
    Confine(RunArgs),
    /// Forward iteration traces, exact and numeric.
    Verify(RunArgs),
    /// Structure of the Lax powers.
    Appendix(RunArgs),
    /// Claim-keyed verification suite.
    All(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    SelfDual,
    General,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Shorthand for `--mode self-dual`.
    #[arg(long)]
    self_dual: bool,
    #[arg(long = "N")]
    order: Option<usize>,
    /// Pole site.
    #[arg(long = "n", allow_hyphen_values = true)]
    pole: Option<i64>,
    #[arg(long)]
    u1: Option<String>,
    /// Coupling `i=p/q`, repeatable.
    #[arg(long = "u", allow_hyphen_values = true)]
    u: Vec<String>,
    #[arg(long = "M")]
    m: Option<i64>,
    /// Window half-width.
    #[arg(long)]
    hw: Option<i64>,
    /// Seed for the random rational specializations.
    #[arg(long)]
    seed: Option<u64>,
    /// lambda for numeric traces.
    #[arg(long)]
    lambda: Option<String>,
    /// Output directory (default: $TOEPLITZ_OUT or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the recursion text.
    #[arg(long)]
    dump: bool,
    /// Skip the general confined build in `all`.
    #[arg(long)]
    quick: bool,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<ModeArg>,
    #[serde(rename = "N")]
    order: Option<usize>,
    n: Option<i64>,
    u: Option<BTreeMap<String, String>>,
    #[serde(rename = "M")]
    m: Option<i64>,
    hw: Option<i64>,
    seed: Option<u64>,
    lambda: Option<String>,
    out: Option<PathBuf>,
}

/// Validated run configuration.
struct RunConfig {
    mode: Mode,
    order: usize,
    pole: i64,
    u: BTreeMap<i64, Rational>,
    m: i64,
    hw: i64,
    seed: u64,
    lambda: Rational,
    out: PathBuf,
    dump: bool,
    quick: bool,
}

enum Failure {
    Config(String),
    Check(String),
    Internal(String),
}

impl From<ConfineError> for Failure {
    fn from(e: ConfineError) -> Self {
        match e {
            ConfineError::Flow(_) | ConfineError::Series(_) | ConfineError::Exact(_) | ConfineError::Gamma(_) => {
                Failure::Internal(e.to_string())
            }
            _ => Failure::Check(e.to_string()),
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("config.{field}: {msg}"))
}

fn rational(field: &str, s: &str) -> Result<Rational, Failure> {
    parse_rational(s).map_err(|e| config_err(field, e))
}

impl RunConfig {
    fn from_args(a: &RunArgs, defaults: (usize, i64, i64)) -> Result<RunConfig, Failure> {
        let file: FileConfig = match &a.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_err("file", e))?;
                serde_json::from_str(&text).map_err(|e| config_err("file", e))?
            }
            None => FileConfig::default(),
        };
        let mode_arg = if a.self_dual { Some(ModeArg::SelfDual) } else { a.mode.or(file.mode) };
        let mode = match mode_arg.unwrap_or(ModeArg::SelfDual) {
            ModeArg::SelfDual => Mode::SelfDual,
            ModeArg::General => Mode::General,
        };
        let order = a.order.or(file.order).unwrap_or(defaults.0);
        if order == 0 {
            return Err(config_err("N", "must be at least 1"));
        }
        let pole = a.pole.or(file.n).unwrap_or(defaults.1);
        let m = a.m.or(file.m).unwrap_or(defaults.2);
        if m < 3 {
            return Err(config_err("M", "must be at least 3"));
        }
        let min_hw = 2 * order as i64 + m + 2;
        let hw = a.hw.or(file.hw).unwrap_or(min_hw);
        if hw < min_hw {
            return Err(config_err("hw", format!("must be at least 2N+M+2 = {min_hw}")));
        }
        let mut u = BTreeMap::new();
        for (k, v) in file.u.unwrap_or_default() {
            let i: i64 = k.parse().map_err(|_| config_err(&format!("u.{k}"), "index must be an integer"))?;
            u.insert(i, rational(&format!("u.{k}"), &v)?);
        }
        for entry in &a.u {
            let (k, v) = entry.split_once('=').ok_or_else(|| config_err("u", format!("expected i=p/q, got {entry}")))?;
            let i: i64 = k.trim().parse().map_err(|_| config_err(&format!("u.{k}"), "index must be an integer"))?;
            u.insert(i, rational(&format!("u.{k}"), v)?);
        }
        if let Some(s) = &a.u1 {
            u.insert(1, rational("u1", s)?);
        }
        let top = order as i64;
        let sd = mode == Mode::SelfDual;
        let required: Vec<i64> = if sd { vec![top] } else { vec![top, -top] };
        for i in 1..=top {
            u.entry(i).or_insert_with(|| Rational::from_integer(1.into()));
            if !sd {
                u.entry(-i).or_insert_with(|| Rational::from_integer(1.into()));
            }
        }
        for i in required {
            if u[&i] == Rational::from_integer(0.into()) {
                return Err(config_err(&format!("u.{i}"), "must be nonzero"));
            }
        }
        for &i in u.keys() {
            if i == 0 || i.abs() > top || (sd && i < 0) {
                return Err(config_err(&format!("u.{i}"), "index out of range"));
            }
        }
        let lambda = match a.lambda.as_ref().or(file.lambda.as_ref()) {
            Some(s) => rational("lambda", s)?,
            None => toeplitz::exact::q(1, 1000),
        };
        let out = a
            .out
            .clone()
            .or(file.out)
            .or_else(|| std::env::var_os("TOEPLITZ_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(RunConfig { mode, order, pole, u, m, hw, seed: a.seed.or(file.seed).unwrap_or(7), lambda, out, dump: a.dump, quick: a.quick })
    }

    fn spec(&self) -> Result<RecursionSpec, Failure> {
        let u: Vec<(i64, Rational)> = self.u.iter().map(|(k, v)| (*k, v.clone())).collect();
        RecursionSpec::rational(self.order, &u, self.mode.self_dual(), self.pole).map_err(|e| config_err("u", e))
    }

    fn seeds(&self) -> Seeds {
        let nn = self.order;
        let r = seed_rationals(self.seed, 4 * nn + 1);
        let plateau = (0..2 * nn - 1).map(|i| (r[2 * i].clone(), r[2 * i + 1].clone())).collect();
        Seeds { plateau, near: r[4 * nn].clone(), eps: self.mode.self_dual().then_some(1) }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out).map_err(|e| Failure::Config(format!("config.out: {e}")))?;
        let p = self.out.join(name);
        std::fs::write(&p, contents).map_err(|e| Failure::Config(format!("config.out: {e}")))?;
        Ok(p)
    }
}

fn json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn finish(cfg: &RunConfig, name: &str, report: &StructureReport, extra: serde_json::Value) -> Result<(), Failure> {
    let mut doc = serde_json::json!({ "passed": report.passed(), "checks": report.checks });
    if let serde_json::Value::Object(m) = extra {
        for (k, v) in m {
            doc[k] = v;
        }
    }
    let p = cfg.write(name, &json(&doc))?;
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", display(&p));
    match report.first_failure() {
        Some(c) => Err(Failure::Check(format!("{}: {}", c.name, c.detail))),
        None => Ok(()),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn join(parts: Vec<StructureReport>) -> StructureReport {
    StructureReport { checks: parts.into_iter().flat_map(|r| r.checks).collect() }
}

fn cmd_gamma(cfg: &RunConfig) -> Result<(), Failure> {
    let sd = cfg.mode.self_dual();
    if cfg.dump {
        println!("{}", dump_text(cfg.order, sd));
    }
    let two = two_path_check(cfg.order, sd, cfg.pole..cfg.pole + 5).map_err(|e| Failure::Internal(e.to_string()))?;
    let st = verify_gamma_structure(cfg.order, sd).map_err(|e| Failure::Internal(e.to_string()))?;
    finish(cfg, "gamma.json", &join(vec![two, st]), serde_json::json!({ "text": dump_text(cfg.order, sd) }))
}

fn cmd_balance(cfg: &RunConfig) -> Result<(), Failure> {
    let mut p = Params::new();
    if cfg.mode.self_dual() {
        p.set(VarId::eps(), MultiRat::int(1));
    }
    let b = solve_balance(cfg.mode, cfg.pole, cfg.hw, cfg.m, &p).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut rep = StructureReport::default();
    match balance_residual(&b) {
        Ok(r) => rep.push(toeplitz::lax::Check::new("flow residual vanishes", true, format!("{} sites", r.len()))),
        Err(e) => rep.push(toeplitz::lax::Check::new("flow residual vanishes", false, e.to_string())),
    }
    if cfg.mode == Mode::General && cfg.m >= 3 {
        rep.checks.extend(check_dependence_table(&b).map_err(|e| Failure::Internal(e.to_string()))?.checks);
    }
    finish(cfg, "balance.json", &rep, serde_json::json!({ "balance": b.to_json() }))
}

fn cmd_restrict(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = cfg.spec()?;
    let nn = cfg.order as i64;
    let n = cfg.pole;
    let seeds = cfg.seeds();
    let mut base = Params::new().with(VarId::eps(), MultiRat::int(1));
    for (k, (a, b)) in (n - 2 * nn..=n - 2).zip(&seeds.plateau) {
        base.set(VarId::a(k), MultiRat::constant(a.clone()));
        base.set(VarId::b(k), MultiRat::constant(b.clone()));
    }
    base.set(VarId::a(n - 1), MultiRat::constant(seeds.near.clone()));
    let plan = RestrictionPlan::new(cfg.mode, cfg.order, n, cfg.hw);
    let r = restrict_parameters(&spec, &plan, &base)?;
    let (_, rep) = verify_restriction(&spec, &r, cfg.m)?;
    let solved: BTreeMap<String, String> = r.params.values.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    finish(cfg, "restrict.json", &rep, serde_json::json!({ "plan": plan, "steps": r.steps, "values": solved }))
}

fn cmd_confine(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = cfg.spec()?;
    let c = build_confined(&spec, &cfg.seeds(), cfg.m)?;
    let rep = verify_confinement(&c)?;
    finish(cfg, "confined.json", &rep, serde_json::json!({ "solution": c.to_json() }))
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let spec = cfg.spec()?;
    let c = build_confined(&spec, &cfg.seeds(), cfg.m)?;
    let nn = cfg.order as i64;
    let lo = c.n - 2 * nn;
    let trunc = c.x(c.n - 1).trunc();
    let cut = |s: toeplitz::LSeries| if s.is_exact() { s.truncate(trunc) } else { s };
    let xs = (lo..c.n).map(|k| cut(c.x(k))).collect();
    let ys = c.ys.as_ref().map(|_| (lo..c.n).map(|k| cut(c.y(k))).collect());
    let steps = (c.k_max - c.n + 1).min(4) as usize;
    let exact = iterate_exact(&c.spec, lo, xs, ys, steps).map_err(|e| Failure::Check(e.to_string()))?;
    cfg.write("trace_exact.csv", &exact.to_csv())?;
    let mut rep = verify_confinement(&c)?;
    let jets0 = |r: &MultiRat| {
        r.evaluate(&|v| v.is_jet().then(|| Rational::from_integer(0.into()))).map_err(|e| Failure::Internal(e.to_string()))
    };
    let mut seed_x = Vec::new();
    let mut seed_y = Vec::new();
    for k in lo..c.n {
        let at = |s: toeplitz::LSeries| -> Result<Rational, Failure> {
            let c0 = jets0(&s.coeff(0).unwrap_or_else(MultiRat::zero))?;
            let c1 = jets0(&s.coeff(1).unwrap_or_else(MultiRat::zero))?;
            Ok(c0 + c1 * &cfg.lambda)
        };
        seed_x.push(at(c.x(k))?);
        seed_y.push(at(c.y(k))?);
    }
    let numeric = iterate_numeric(&c.spec, lo, seed_x, c.ys.as_ref().map(|_| seed_y), steps + 2, &cfg.lambda)
        .map_err(|e| Failure::Check(e.to_string()))?;
    cfg.write("trace_numeric.csv", &numeric.to_csv())?;
    if cfg.mode.self_dual() && cfg.order == 1 {
        rep.checks.extend(numeric_shadow(&c, &cfg.lambda, 6).map_err(Failure::Check)?.checks);
    }
    let _ = seed_series;
    finish(
        cfg,
        "verify.json",
        &rep,
        serde_json::json!({ "exact": exact.to_json(), "numeric": numeric.to_json(), "lambda": rational_text(&cfg.lambda) }),
    )
}

fn cmd_appendix(cfg: &RunConfig) -> Result<(), Failure> {
    let top = cfg.order.max(2) as u32;
    let parts = (2..=top)
        .map(|s| verify_appendix_structure(s).map_err(|e| Failure::Internal(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    finish(cfg, "appendix.json", &join(parts), serde_json::json!({}))
}

fn cmd_all(cfg: &RunConfig) -> Result<(), Failure> {
    let opts = SuiteOptions { seed: cfg.seed, pole: cfg.pole, m: cfg.m.min(4), lambda: cfg.lambda.clone(), general_confinement: !cfg.quick };
    let report = claim_suite(&opts);
    let p = cfg.write("report.json", &json(&report.to_json()))?;
    for (id, c) in &report.claims {
        println!("[{}] {id} ({} checks)", c.status, c.checks.len());
    }
    println!("wrote {}", display(&p));
    let _ = emit_report;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("one or more claims failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, defaults, run): (&RunArgs, (usize, i64, i64), fn(&RunConfig) -> Result<(), Failure>) = match &cli.cmd {
        Command::Gamma(a) => (a, (1, 0, 6), cmd_gamma),
        Command::Balance(a) => (a, (1, 0, 4), cmd_balance),
        Command::Restrict(a) => (a, (1, 20, 6), cmd_restrict),
        Command::Confine(a) => (a, (1, 20, 4), cmd_confine),
        Command::Verify(a) => (a, (1, 20, 4), cmd_verify),
        Command::Appendix(a) => (a, (4, 0, 6), cmd_appendix),
        Command::All(a) => (a, (1, 20, 4), cmd_all),
    };
    let result = RunConfig::from_args(args, defaults).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
