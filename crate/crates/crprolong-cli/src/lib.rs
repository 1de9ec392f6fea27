//! Command-line front end: validation, classification, prolongation,
//! identification, golden models and the dimension table.
//!
//! Exit codes: 0 success, 1 bad input, 2 non-regular symbol, 3 a failed
//! internal verification (Jacobi, involution, grading element or re-save).

pub mod table;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crprolong::algebra::{AlgebraJson, BigradedAlgebra};
use crprolong::classify::{classify, emit_normal_form_matrices, Family};
use crprolong::identify::{build_golden, build_golden_str, identify_real_form, match_structure, GoldenName, Identification};
use crprolong::prolong::{assemble_with, AssembleOptions, ProlongationResult, DEFAULT_MAX_DEGREE};
use crprolong::symbol::{build_symbol, check_regular, validate_symbol, RegularityReport, SymbolAlgebra, SymbolInput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_REGULAR: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyLevel {
    /// skip the Jacobi sweep when the result matched a golden model
    Fast,
    Full,
}

impl VerifyLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            VerifyLevel::Fast => "fast",
            VerifyLevel::Full => "full",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crprolong", version, about = "Exact bigraded prolongation of 2-nondegenerate CR symbols")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Highest first weight attempted before giving up.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DEGREE, value_parser = clap::value_parser!(i32).range(1..))]
    pub max_degree: i32,
    /// Report file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format. Every other command writes JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, value_enum, default_value_t = VerifyLevel::Full)]
    pub verify: VerifyLevel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the symbol axioms and regularity.
    Validate(SymbolArgs),
    /// Normal form of a kernel-rank-1 symbol.
    Classify(SymbolArgs),
    /// Bigraded prolongation with verification and real-form name.
    Prolong(ProlongArgs),
    /// Real-form name and golden comparison.
    Identify(SymbolArgs),
    /// Print a golden model such as so(3,2) or so*(6).
    Golden {
        #[arg(long)]
        name: String,
    },
    /// Dimension table for a list of odd dim M >= 5.
    Table {
        #[arg(required = true)]
        dim_m: Vec<usize>,
    },
    /// Load an algebra file (or a prolong report), re-run Jacobi and re-save.
    CheckJacobi {
        input: PathBuf,
        /// Write the re-saved algebra here.
        #[arg(long)]
        resave: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Classify(_) => "classify",
            Command::Prolong(_) => "prolong",
            Command::Identify(_) => "identify",
            Command::Golden { .. } => "golden",
            Command::Table { .. } => "table",
            Command::CheckJacobi { .. } => "check-jacobi",
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct SymbolArgs {
    /// Symbol JSON, or a family descriptor with a "form" key.
    pub input: Option<PathBuf>,
    /// I, II, weak or nil.
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Image signature of a weak family, "p1,q1" or "p1,q1,-".
    #[arg(long, allow_hyphen_values = true)]
    pub profile: Option<String>,
    /// Jordan blocks of a nilpotent family, e.g. "3+,1-".
    #[arg(long, allow_hyphen_values = true)]
    pub blocks: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProlongArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    /// Also write the bare algebra JSON here.
    #[arg(long)]
    pub emit_algebra: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    /// one-line summary for stderr on a nonzero code
    pub message: Option<String>,
}

pub fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn outcome(code: i32, report: Value, message: Option<String>) -> Outcome {
    Outcome { code, report: pretty(&report), message }
}

fn input_error(command: &str, msg: &str) -> Outcome {
    outcome(EXIT_INPUT, json!({"command": command, "error": msg}), Some(msg.to_string()))
}

fn read_json(path: &Path) -> Result<(String, Value), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let v = serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
    Ok((text, v))
}

fn parse_sign(s: &str) -> Result<i8, String> {
    match s {
        "" | "+" => Ok(1),
        "-" => Ok(-1),
        _ => Err(format!("bad sign {s:?}, expected + or -")),
    }
}

/// Descriptor JSON for the --form family flags, or None without --form.
pub fn descriptor_from_flags(a: &SymbolArgs) -> Result<Option<Value>, String> {
    let Some(form) = a.form.as_deref() else {
        if a.p.is_some() || a.q.is_some() || a.profile.is_some() || a.blocks.is_some() {
            return Err("--p/--q/--profile/--blocks need --form".into());
        }
        return Ok(None);
    };
    let p = || a.p.ok_or_else(|| format!("--form {form} needs --p"));
    let d = match form {
        "I" => json!({"form": "I", "p": p()?, "q": a.q.unwrap_or(0)}),
        "II" => json!({"form": "II", "p": p()?}),
        "weak" | "non_nilpotent" => {
            let prof = a.profile.as_deref().ok_or("--form weak needs --profile p1,q1[,sign]")?;
            let parts: Vec<&str> = prof.split(',').map(str::trim).collect();
            if parts.len() < 2 || parts.len() > 3 {
                return Err(format!("bad --profile {prof:?}"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad --profile entry {s:?}"));
            let sign = parse_sign(parts.get(2).copied().unwrap_or(""))?;
            let q = a.q.ok_or("--form weak needs --q")?;
            json!({"form": "non_nilpotent", "p": p()?, "q": q, "p1": num(parts[0])?, "q1": num(parts[1])?, "alpha_sign": sign})
        }
        "nil" | "nilpotent" => {
            let list = a.blocks.as_deref().ok_or("--form nil needs --blocks, e.g. 3+,1-")?;
            let mut blocks = Vec::new();
            for tok in list.split(',').map(str::trim) {
                let digits = tok.trim_end_matches(['+', '-']);
                let k: usize = digits.parse().map_err(|_| format!("bad block {tok:?}"))?;
                blocks.push(json!({"k": k, "eps": parse_sign(&tok[digits.len()..])?}));
            }
            json!({"form": "nilpotent", "blocks": blocks})
        }
        other => return Err(format!("unknown --form {other:?}, expected I, II, weak or nil")),
    };
    Ok(Some(d))
}

/// The symbol named by a file or by family flags, with its family when known.
pub fn load_symbol(a: &SymbolArgs) -> Result<(SymbolInput, Option<Family>), String> {
    let desc = descriptor_from_flags(a)?;
    let v = match (&a.input, desc) {
        (Some(_), Some(_)) => return Err("give either an input file or --form, not both".into()),
        (None, None) => return Err("no input: give a JSON file or --form".into()),
        (None, Some(d)) => d,
        (Some(path), None) => read_json(path)?.1,
    };
    if v.get("form").is_some() {
        let f = Family::from_descriptor(&v).map_err(|e| e.to_string())?;
        let input = emit_normal_form_matrices(&f).map_err(|e| e.to_string())?;
        Ok((input, Some(f)))
    } else {
        let input = SymbolInput::from_json_value(&v).map_err(|e| e.to_string())?;
        Ok((input, None))
    }
}

fn symbol_and_regularity(input: &SymbolInput) -> Result<(SymbolAlgebra, RegularityReport), String> {
    validate_symbol(input).map_err(|e| e.to_string())?;
    let sym = build_symbol(input).map_err(|e| e.to_string())?;
    let reg = check_regular(&sym);
    Ok((sym, reg))
}

fn tag(f: &Option<Family>) -> Value {
    f.as_ref().map_or(Value::Null, |f| json!(f.to_string()))
}

fn not_regular(command: &str, family: &Option<Family>, reg: &RegularityReport) -> Outcome {
    let msg = format!("NotRegular: {}", reg.witness.as_deref().unwrap_or("brackets leave g0"));
    let report = json!({
        "command": command,
        "family": tag(family),
        "error": msg,
        "regularity": reg,
    });
    outcome(EXIT_NOT_REGULAR, report, Some(msg))
}

/// A prolongation together with its real-form name.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub result: ProlongationResult,
    pub identification: Identification,
    pub jacobi_skipped: bool,
}

/// Assemble, identify, and run the Jacobi sweep unless `fast` applies.
pub fn prolong_symbol(sym: &SymbolAlgebra, max_degree: i32, verify: VerifyLevel) -> Result<Pipeline, String> {
    let opts = AssembleOptions { max_degree, jacobi: verify == VerifyLevel::Full };
    let mut result = assemble_with(sym, opts).map_err(|e| e.to_string())?;
    let identification = identify_real_form(&result);
    let mut jacobi_skipped = false;
    if verify == VerifyLevel::Fast {
        if identification.matched_golden {
            jacobi_skipped = true;
        } else {
            let v = &mut result.verification;
            v.jacobi_checked = true;
            v.jacobi_violations = result.algebra.jacobi_check().len();
            v.real_jacobi_violations = result.real_form.jacobi_check();
        }
    }
    Ok(Pipeline { result, identification, jacobi_skipped })
}

fn verification_json(p: &Pipeline) -> Value {
    let mut v = serde_json::to_value(&p.result.verification).expect("verification serializes");
    v["passed"] = json!(effective_pass(p));
    v["jacobi_skipped"] = json!(p.jacobi_skipped);
    v["truncated"] = json!(p.result.max_degree_reached);
    v
}

fn algebra_value(alg: &BigradedAlgebra) -> Value {
    serde_json::to_value(alg.to_json_struct()).expect("algebra serializes")
}

/// A run stopped by --max-degree is a truncation: brackets past the cap are
/// missing, so its Jacobi count is reported but does not set the exit code.
pub fn effective_pass(p: &Pipeline) -> bool {
    let v = &p.result.verification;
    if p.result.max_degree_reached {
        v.involution_problems.is_empty() && v.grading_element
    } else {
        v.passed()
    }
}

fn verify_code(p: &Pipeline) -> (i32, Option<String>) {
    if effective_pass(p) {
        (EXIT_OK, None)
    } else {
        let v = &p.result.verification;
        let msg = format!(
            "verification failed: {} Jacobi violations, {} real Jacobi violations, {} involution problems, grading element {}",
            v.jacobi_violations,
            v.real_jacobi_violations,
            v.involution_problems.len(),
            if v.grading_element { "found" } else { "missing" }
        );
        (EXIT_VERIFY, Some(msg))
    }
}

fn cmd_validate(a: &SymbolArgs) -> Result<Outcome, String> {
    let (input, family) = load_symbol(a)?;
    let checked = validate_symbol(&input).map_err(|e| e.to_string())?;
    let (_, reg) = symbol_and_regularity(&input)?;
    if !reg.regular {
        return Ok(not_regular("validate", &family, &reg));
    }
    let report = json!({
        "command": "validate",
        "family": tag(&family),
        "valid": true,
        "n": input.n,
        "kernel_rank": input.kernel_rank,
        "dim_m": checked.dim_m,
        "regularity": reg,
    });
    Ok(outcome(EXIT_OK, report, None))
}

fn cmd_classify(a: &SymbolArgs) -> Result<Outcome, String> {
    let (input, family) = load_symbol(a)?;
    let (_, reg) = symbol_and_regularity(&input)?;
    if !reg.regular {
        return Ok(not_regular("classify", &family, &reg));
    }
    let c = classify(&input).map_err(|e| e.to_string())?;
    Ok(outcome(EXIT_OK, json!({"command": "classify", "classification": c.to_json()}), None))
}

fn cmd_prolong(a: &ProlongArgs, cfg: &RunConfig) -> Result<Outcome, String> {
    let (input, family) = load_symbol(&a.symbol)?;
    let (sym, reg) = symbol_and_regularity(&input)?;
    if !reg.regular {
        return Ok(not_regular("prolong", &family, &reg));
    }
    let p = prolong_symbol(&sym, cfg.max_degree, cfg.verify)?;
    if let Some(path) = &a.emit_algebra {
        fs::write(path, p.result.algebra.to_json_string()).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let mut report = Map::new();
    report.insert("command".into(), json!("prolong"));
    report.insert("family".into(), tag(&family));
    report.insert("max_degree".into(), json!(cfg.max_degree));
    report.insert("verify".into(), json!(cfg.verify.as_str()));
    if let Value::Object(ledger) = p.result.ledger_json() {
        report.extend(ledger);
    }
    report.insert("verification".into(), verification_json(&p));
    report.insert("identification".into(), p.identification.to_json());
    report.insert("algebra".into(), algebra_value(&p.result.algebra));
    let (code, msg) = verify_code(&p);
    Ok(outcome(code, Value::Object(report), msg))
}

fn cmd_identify(a: &SymbolArgs, cfg: &RunConfig) -> Result<Outcome, String> {
    let (input, family) = load_symbol(a)?;
    let (sym, reg) = symbol_and_regularity(&input)?;
    if !reg.regular {
        return Ok(not_regular("identify", &family, &reg));
    }
    let p = prolong_symbol(&sym, cfg.max_degree, cfg.verify)?;
    let golden = p
        .identification
        .name
        .parse::<GoldenName>()
        .ok()
        .and_then(|n| build_golden(&n).ok())
        .map_or(Value::Null, |m| match match_structure(&p.result, &m) {
            Ok(r) => json!({"golden": r.golden, "constants_checked": r.constants_checked}),
            Err(e) => json!({"golden": e.golden, "mismatch": e.reason.to_string()}),
        });
    let report = json!({
        "command": "identify",
        "family": tag(&family),
        "total_complex": p.result.total_complex(),
        "identification": p.identification.to_json(),
        "golden_match": golden,
        "verification": verification_json(&p),
    });
    let (code, msg) = verify_code(&p);
    Ok(outcome(code, report, msg))
}

fn cmd_golden(name: &str, cfg: &RunConfig) -> Result<Outcome, String> {
    let m = build_golden_str(name).map_err(|e| e.to_string())?;
    let jacobi = (cfg.verify == VerifyLevel::Full).then(|| m.algebra.jacobi_check().len());
    let inv = m.algebra.involution_check();
    let mut report = m.to_json();
    report["command"] = json!("golden");
    report["verification"] = json!({"jacobi_violations": jacobi, "involution_problems": inv});
    if jacobi.unwrap_or(0) > 0 || !inv.is_empty() {
        let msg = format!("golden model {name} fails verification");
        return Ok(outcome(EXIT_VERIFY, report, Some(msg)));
    }
    Ok(outcome(EXIT_OK, report, None))
}

fn cmd_check_jacobi(path: &Path, resave: Option<&Path>) -> Result<Outcome, String> {
    let (text, v) = read_json(path)?;
    let (alg, identical) = match v.get("algebra") {
        Some(inner) => {
            let j: AlgebraJson = serde_json::from_value(inner.clone()).map_err(|e| format!("bad embedded algebra: {e}"))?;
            let alg = BigradedAlgebra::from_json_struct(&j).map_err(|e| e.to_string())?;
            let same = algebra_value(&alg) == *inner;
            (alg, same)
        }
        None => {
            let alg = BigradedAlgebra::from_json_str(&text).map_err(|e| e.to_string())?;
            let same = alg.to_json_string() == text;
            (alg, same)
        }
    };
    if let Some(out) = resave {
        fs::write(out, alg.to_json_string()).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    }
    let violations = alg.jacobi_check();
    let shown: Vec<String> = violations
        .iter()
        .take(20)
        .map(|j| {
            let (x, y, z) = j.triple;
            format!("({}, {}, {})", alg.label(x), alg.label(y), alg.label(z))
        })
        .collect();
    let inv = alg.involution_check();
    let report = json!({
        "command": "check-jacobi",
        "dim": alg.dim(),
        "jacobi_violations": violations.len(),
        "violating_triples": shown,
        "involution_problems": inv,
        "resave_identical": identical,
    });
    if violations.is_empty() && inv.is_empty() && identical {
        Ok(outcome(EXIT_OK, report, None))
    } else {
        let msg = format!(
            "{} Jacobi violations, {} involution problems, re-save {}",
            violations.len(),
            inv.len(),
            if identical { "identical" } else { "differs" }
        );
        Ok(outcome(EXIT_VERIFY, report, Some(msg)))
    }
}

fn cmd_table(dims: &[usize], cfg: &RunConfig) -> Result<Outcome, String> {
    if let Some(d) = dims.iter().find(|&&d| d < 5 || d % 2 == 0) {
        return Err(format!("dim M must be odd and at least 5, got {d}"));
    }
    let t = table::build(dims, cfg.max_degree, cfg.verify)?;
    let report = t.render(cfg.format);
    match t.rows.iter().find(|r| !r.verified) {
        Some(r) => {
            let msg = format!("verification failed for {}", r.family);
            Ok(Outcome { code: EXIT_VERIFY, report, message: Some(msg) })
        }
        None => Ok(Outcome { code: EXIT_OK, report, message: None }),
    }
}

/// Run one parsed command. Never panics on bad input.
pub fn execute(cfg: &RunConfig) -> Outcome {
    let name = cfg.command.name();
    if cfg.format != Format::Json && !matches!(cfg.command, Command::Table { .. }) {
        return input_error(name, "--format csv and md apply only to table");
    }
    let res = match &cfg.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Prolong(a) => cmd_prolong(a, cfg),
        Command::Identify(a) => cmd_identify(a, cfg),
        Command::Golden { name } => cmd_golden(name, cfg),
        Command::Table { dim_m } => cmd_table(dim_m, cfg),
        Command::CheckJacobi { input, resave } => cmd_check_jacobi(input, resave.as_deref()),
    };
    res.unwrap_or_else(|msg| input_error(name, &msg))
}

/// Parse arguments, execute, write the report, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let out = execute(&cfg);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &out.report) {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => print!("{}", out.report),
    }
    if let Some(m) = &out.message {
        eprintln!("{m}");
    }
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(form: &str, p: Option<usize>, q: Option<usize>, profile: Option<&str>, blocks: Option<&str>) -> SymbolArgs {
        SymbolArgs {
            input: None,
            form: Some(form.into()),
            p,
            q,
            profile: profile.map(Into::into),
            blocks: blocks.map(Into::into),
        }
    }

    #[test]
    fn family_flags() {
        let d = descriptor_from_flags(&flags("nil", None, None, None, Some("3+, 1-,2"))).unwrap().unwrap();
        assert_eq!(d["blocks"], json!([{"k": 3, "eps": 1}, {"k": 1, "eps": -1}, {"k": 2, "eps": 1}]));
        let d = descriptor_from_flags(&flags("weak", Some(2), Some(1), Some("1,1,-"), None)).unwrap().unwrap();
        assert_eq!(d["alpha_sign"], -1);
        assert!(descriptor_from_flags(&flags("weak", Some(2), Some(1), Some("1"), None)).is_err());
        assert!(descriptor_from_flags(&flags("nil", None, None, None, Some("3*"))).is_err());
        assert!(descriptor_from_flags(&flags("III", Some(1), None, None, None)).is_err());
        let (input, fam) = load_symbol(&flags("I", Some(1), None, None, None)).unwrap();
        assert_eq!((input.n, fam.unwrap().to_string()), (1, "I(1,0)".to_string()));
    }
}
