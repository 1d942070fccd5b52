mod parse;

use clap::{Parser, Subcommand, ValueEnum};
use gjs_core::gjs::{GjsError, GjsModel, Word};
use gjs_core::kac::{self, KacError, KacSpec};
use gjs_core::mp_oracle::{self, FreePoissonParams, MpError, MAX_MOMENT};
use gjs_core::ncpart::{self, PartitionError, MAX_ENUMERATE, MAX_TRANSFORM};
use gjs_core::report::{Report, Status};
use gjs_core::vncalc::{self, Atom, VNExpression, VnError};
use gjs_core::{gjs, suites, AlgebraicReal, Caps};
use serde_json::{json, Value};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gjs", version, about = "Exact free-probability combinatorics over finite-dimensional Kac algebras")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Non-crossing partitions.
    Nc {
        #[command(subcommand)]
        op: NcOp,
    },
    /// Summarize, validate or export a Kac algebra.
    Kac {
        /// Spec file or built-in name.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        validate: bool,
        /// Print the spec as JSON.
        #[arg(long)]
        export: bool,
    },
    /// Trace of a word in Gr₁ or Gr₂.
    Trace {
        #[arg(long)]
        spec: String,
        /// Comma-separated letters: basis labels, X, or @γ:p:q (1-based).
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        side: u8,
        /// Evaluation route for side 2.
        #[arg(long, value_enum, default_value_t = Route::Cumulant)]
        route: Route,
    },
    /// Factor parameters M₁, M₂, M₀ for a multi-matrix profile.
    Factor {
        /// Abelian case: n one-dimensional irreps.
        #[arg(long, conflicts_with_all = ["profile", "spec"])]
        n: Option<usize>,
        /// Irrep dimensions, comma-separated.
        #[arg(long, conflicts_with = "spec")]
        profile: Option<String>,
        /// Take the profile from a Kac algebra.
        #[arg(long)]
        spec: Option<String>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Size bound: n, word length, or moment order depending on the suite.
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        spec: Option<String>,
        /// Random tables per n for the Möbius suite.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Quadrature moment of the Marchenko-Pastur law against the exact value.
    Mp {
        /// Exact number, e.g. 2, 1/2, 0.5, sqrt(6).
        #[arg(long)]
        rate: String,
        #[arg(long)]
        jump: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum NcOp {
    /// |NC(n)|.
    Count {
        #[arg(long)]
        n: usize,
    },
    /// All of NC(n).
    List {
        #[arg(long)]
        n: usize,
    },
    /// μ(σ, π) for σ ≤ π.
    Mobius {
        #[arg(long)]
        lower: String,
        #[arg(long)]
        upper: String,
    },
    Kreweras {
        #[arg(long)]
        partition: String,
    },
    /// Temperley-Lieb pairing and closure loop count.
    Tl {
        #[arg(long)]
        partition: String,
    },
    /// Partition induced on E by a partition of its complement D.
    Induced {
        /// Partition of D.
        #[arg(long)]
        partition: String,
        /// The set E, comma-separated.
        #[arg(long)]
        complement: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Cumulant,
    Loops,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Euler,
    Mobius,
    Rcyclic,
    Freeness,
    Tau2Routes,
    DykemaBoundaries,
    Mp,
}

/// Route words are enumerated exhaustively up to this many, sampled beyond.
const EXHAUSTIVE_WORDS: usize = 50_000;
const SAMPLED_WORDS: usize = 500;
const SAMPLE_SEED: u64 = 7;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
    Cap(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Cap(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failed(m) | CliError::Cap(m) => m,
        }
    }
}

impl From<String> for CliError {
    fn from(m: String) -> Self {
        CliError::Usage(m)
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::SizeGuard { .. } | PartitionError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<GjsError> for CliError {
    fn from(e: GjsError) -> Self {
        match e {
            GjsError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            GjsError::Partition(p) => p.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<KacError> for CliError {
    fn from(e: KacError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<VnError> for CliError {
    fn from(e: VnError) -> Self {
        match e {
            VnError::Mismatch(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<MpError> for CliError {
    fn from(e: MpError) -> Self {
        match e {
            MpError::OrderCap { .. } => CliError::Cap(e.to_string()),
            MpError::NoConvergence { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// What a command prints, in both forms, and whether it counts as a pass.
struct Output {
    human: String,
    json: Value,
    passed: bool,
}

impl Output {
    fn ok(human: String, json: Value) -> Self {
        Self { human, json, passed: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON values serialize"));
            } else {
                print!("{}", out.human);
            }
            ExitCode::from(if out.passed { 0 } else { 1 })
        }
        Err(e) => {
            if cli.json {
                let kind = match e.code() {
                    1 => "failure",
                    3 => "cap",
                    _ => "usage",
                };
                println!("{}", json!({ "error": e.message(), "kind": kind }));
            }
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Nc { op } => nc(op),
        Command::Kac { spec, validate, export } => kac_cmd(&spec, validate, export),
        Command::Trace { spec, word, side, route } => trace(&spec, &word, side, route),
        Command::Factor { n, profile, spec } => factor(n, profile.as_deref(), spec.as_deref()),
        Command::Verify { suite, max, spec, seeds } => verify(suite, max, spec.as_deref(), seeds),
        Command::Mp { rate, jump, k, tol } => mp(&rate, &jump, k, tol),
    }
}

/// Rounded to 15 significant digits so that printed decimals are stable.
fn decimal(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn exact_json(v: &AlgebraicReal) -> Value {
    let mut m = json!({ "exact": v.to_string(), "decimal": decimal(v.to_f64()) });
    if !v.is_real() {
        m["imag"] = json!(decimal(v.imag_f64()));
    }
    m
}

fn exact_human(v: &AlgebraicReal) -> String {
    if v.is_real() {
        format!("{v}  ≈ {}", decimal(v.to_f64()))
    } else {
        format!("{v}  ≈ {} + {}i", decimal(v.to_f64()), decimal(v.imag_f64()))
    }
}

fn load_model(spec: &str) -> Result<GjsModel, CliError> {
    let path = std::path::Path::new(spec);
    let (k, irreps) = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
        kac::load_spec(&text)?
    } else {
        kac::builtin(spec).ok_or_else(|| {
            CliError::Usage(format!("{spec:?} is neither a file nor a built-in ({})", kac::BUILTIN_NAMES.join(", ")))
        })?
    };
    Ok(GjsModel::with_caps(k, irreps, Caps::from_env()))
}

fn nc(op: NcOp) -> Result<Output, CliError> {
    match op {
        NcOp::Count { n } => {
            let count = ncpart::enumerate_nc(n)?.len();
            Ok(Output::ok(format!("{count}\n"), json!({ "n": n, "count": count })))
        }
        NcOp::List { n } => {
            let all = ncpart::enumerate_nc(n)?;
            let human: String = all.iter().map(|p| format!("{p}\n")).collect();
            Ok(Output::ok(human, json!({ "n": n, "partitions": all })))
        }
        NcOp::Mobius { lower, upper } => {
            let (s, p) = (parse::partition(&lower)?, parse::partition(&upper)?);
            let mu = ncpart::mobius(&s, &p)?;
            Ok(Output::ok(format!("{mu}\n"), json!({ "lower": s, "upper": p, "mobius": mu })))
        }
        NcOp::Kreweras { partition } => {
            let p = parse::partition(&partition)?;
            let k = ncpart::kreweras(&p);
            Ok(Output::ok(format!("{k}\n"), json!({ "partition": p, "kreweras": k })))
        }
        NcOp::Tl { partition } => {
            let p = parse::partition(&partition)?.standardize();
            let t = ncpart::tl_from_nc(&p);
            let loops = ncpart::closure_loop_count(&p);
            let arcs: Vec<String> = t.arcs().iter().map(|(a, b)| format!("({a},{b})")).collect();
            Ok(Output::ok(
                format!("arcs {}\nclosure loops {loops}\n", arcs.join(" ")),
                json!({ "partition": p, "pairing": t, "closure_loops": loops }),
            ))
        }
        NcOp::Induced { partition, complement } => {
            let p = parse::partition(&partition)?;
            let e = parse::list(&complement)?;
            let induced = ncpart::induced_partition(&p, &e)?;
            Ok(Output::ok(format!("{induced}\n"), json!({ "partition": p, "complement": e, "induced": induced })))
        }
    }
}

fn kac_cmd(spec: &str, validate: bool, export: bool) -> Result<Output, CliError> {
    let model = load_model(spec)?;
    let (k, irreps) = (model.algebra(), model.irreps());
    if export {
        let s = KacSpec::from_algebra(k, irreps);
        let text = serde_json::to_string_pretty(&s).map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok(Output::ok(format!("{text}\n"), serde_json::to_value(&s).unwrap_or(Value::Null)));
    }
    let dims = irreps.dims();
    let mut human = format!(
        "{}: dimension {}, basis {}\nirreps (dimensions) {}\nδ = {}\n",
        k.name(),
        k.dim(),
        k.basis().join(" "),
        dims.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        model.delta()
    );
    let mut json = json!({
        "name": k.name(),
        "dim": k.dim(),
        "basis": k.basis(),
        "irrep_dims": dims,
        "delta": exact_json(model.delta()),
    });
    let mut passed = true;
    if validate {
        let mut report = kac::validate(k);
        report.extend(kac::validate_irreps(k, irreps));
        passed = report.all_passed();
        human.push_str(&report_human(&report));
        json["validation"] = serde_json::to_value(&report).unwrap_or(Value::Null);
        json["passed"] = json!(passed);
    }
    Ok(Output { human, json, passed })
}

fn trace(spec: &str, word: &str, side: u8, route: Route) -> Result<Output, CliError> {
    let model = load_model(spec)?;
    let letters = parse::word(&model, word)?;
    let value = if side == 1 {
        let vectors = letters
            .into_iter()
            .map(|l| match l {
                gjs::Letter::Kac { coeffs } => Ok(coeffs),
                gjs::Letter::X => Err(CliError::Usage("X is only a letter of side 2".into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        model.tau1(&vectors)?
    } else {
        let w = Word::new(letters);
        match route {
            Route::Cumulant => model.tau2(&w)?,
            Route::Loops => model.tau2_diagrammatic(&w)?,
        }
    };
    let mut json = exact_json(&value);
    json["side"] = json!(side);
    json["word"] = json!(word);
    Ok(Output::ok(format!("{}\n", exact_human(&value)), json))
}

fn factor(n: Option<usize>, profile: Option<&str>, spec: Option<&str>) -> Result<Output, CliError> {
    let profile = match (n, profile, spec) {
        (Some(n), _, _) => vec![1; n],
        (_, Some(p), _) => parse::list(p)?,
        (_, _, Some(s)) => load_model(s)?.irreps().dims(),
        _ => return Err(CliError::Usage("one of --n, --profile, --spec is required".into())),
    };
    if profile.contains(&0) {
        return Err(CliError::Usage("irrep dimensions are positive".into()));
    }
    let n: usize = profile.iter().map(|d| d * d).sum();
    if n < 2 {
        return Err(CliError::Usage(format!("the factors need dim H = Σd² > 1 (got {n})")));
    }
    let factors = [
        ("M1", vncalc::compute_m1(&profile)?),
        ("M2", vncalc::compute_m2(&profile)?),
        ("M0", vncalc::compute_m0(&profile)?),
    ];
    let profile_str = profile.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut human = format!("dim H = {n}, profile ({profile_str})\n");
    let mut json = json!({ "n": n, "profile": profile });
    for (name, e) in &factors {
        human.push_str(&format!("{name} = {}\n", expression_human(e)));
        json[name] = expression_json(e);
    }
    Ok(Output::ok(human, json))
}

fn expression_human(e: &VNExpression) -> String {
    match e.as_factor() {
        Some(Atom::LF(r)) if !r.is_rational() => format!("{e}  (r ≈ {})", decimal(r.to_f64())),
        _ => e.to_string(),
    }
}

fn expression_json(e: &VNExpression) -> Value {
    let mut v = json!({ "display": e.to_string(), "expression": e });
    if let Some(r) = e.lf_parameter() {
        v["r"] = exact_json(r);
    }
    v
}

fn report_human(report: &Report) -> String {
    let mut s = String::new();
    for e in &report.entries {
        let tag = match e.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        match &e.witness {
            Some(w) => s.push_str(&format!("{tag} {}: {w}\n", e.check)),
            None => s.push_str(&format!("{tag} {}\n", e.check)),
        }
    }
    let failed = report.failures().count();
    s.push_str(&format!("{} checks, {failed} failed\n", report.entries.len()));
    s
}

fn capped(what: &str, value: usize, cap: usize) -> Result<usize, CliError> {
    if value > cap {
        Err(CliError::Cap(format!("{what} {value} exceeds the cap {cap}")))
    } else {
        Ok(value)
    }
}

fn verify(suite: Suite, max: Option<usize>, spec: Option<&str>, seeds: Option<u64>) -> Result<Output, CliError> {
    if spec.is_some() && !matches!(suite, Suite::Rcyclic | Suite::Freeness | Suite::Tau2Routes) {
        return Err(CliError::Usage("--spec applies to rcyclic, freeness and tau2-routes".into()));
    }
    let caps = Caps::from_env();
    let (name, report) = match suite {
        Suite::Euler => ("euler", suites::euler(capped("n", max.unwrap_or(8), MAX_ENUMERATE)?)),
        Suite::Mobius => {
            let n = capped("n", max.unwrap_or(6), MAX_TRANSFORM)?;
            ("mobius", suites::mobius_conditions(n, seeds.unwrap_or(50)))
        }
        Suite::Rcyclic => {
            let t = capped("order", max.unwrap_or(6), caps.cumulant_check)?;
            let model = load_model(spec.unwrap_or("dual-s3"))?;
            let gammas: Vec<usize> = (0..model.irreps().dims().len()).collect();
            ("rcyclic", suites::r_cyclic_on(&model, &gammas, t))
        }
        Suite::Freeness => {
            let t = capped("order", max.unwrap_or(6), caps.cumulant_check)?;
            match spec {
                Some(s) => ("freeness", suites::freeness_on(&load_model(s)?, t)),
                None => ("freeness", suites::freeness(t)),
            }
        }
        Suite::Tau2Routes => {
            let model = load_model(spec.unwrap_or("c2"))?;
            let len = capped("word length", max.unwrap_or(7), model.caps().trace)?;
            let letters = model.algebra().dim() + 1;
            let total: usize = (1..=len).try_fold(0usize, |acc, l| letters.checked_pow(l as u32)?.checked_add(acc)).unwrap_or(usize::MAX);
            let sample = (total > EXHAUSTIVE_WORDS).then_some((SAMPLED_WORDS, SAMPLE_SEED));
            ("tau2-routes", suites::tau2_routes_on(&model, len, sample))
        }
        Suite::DykemaBoundaries => {
            if max.is_some() {
                return Err(CliError::Usage("dykema-boundaries takes no --max".into()));
            }
            ("dykema-boundaries", suites::dykema_boundaries())
        }
        Suite::Mp => ("mp", suites::mp(capped("moment order", max.unwrap_or(10), MAX_MOMENT)?, 1e-6)),
    };
    let passed = report.all_passed();
    Ok(Output {
        human: report_human(&report),
        json: json!({ "suite": name, "passed": passed, "checks": report }),
        passed,
    })
}

fn mp(rate: &str, jump: &str, k: usize, tol: f64) -> Result<Output, CliError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!("tolerance must be positive (got {tol})")));
    }
    capped("moment order", k, MAX_MOMENT)?;
    let (rate, jump) = (parse::number(rate)?, parse::number(jump)?);
    let params = FreePoissonParams::exact(&rate, &jump)?;
    let q = mp_oracle::mp_moment(&params, k, tol)?;
    let exact = gjs::free_poisson_moment(&rate, &jump, k)?;
    let deviation = q.deviation(&exact)?;
    let (lo, hi) = params.support();
    let human = format!(
        "rate {rate}, jump {jump}, k = {k}\nquadrature {}  (error estimate {:.1e})\nexact      {}\ndeviation  {:.1e}\natom mass  {}\nsupport    [{}, {}]\n",
        decimal(q.value),
        q.error,
        exact_human(&exact),
        deviation,
        decimal(params.atom_mass()),
        decimal(lo),
        decimal(hi),
    );
    let json = json!({
        "rate": exact_json(&rate),
        "jump": exact_json(&jump),
        "k": k,
        "quadrature": { "value": decimal(q.value), "error": q.error },
        "exact": exact_json(&exact),
        "deviation": deviation,
        "atom_mass": decimal(params.atom_mass()),
        "support": [decimal(lo), decimal(hi)],
    });
    Ok(Output::ok(human, json))
}
