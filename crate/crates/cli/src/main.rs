//! `qltorus`: verify, construct and classify torus decompositions of plane quartics.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! computation is refused, 2 for unreadable or malformed input.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use qltorus::catalog::{self, CatalogError, EntryReport};
use qltorus::degen::{degeneration_check, family_specialize, quartic_family, DegenError};
use qltorus::doc::{evaluate, DocError, Document, Outcome};
use qltorus::fieldtower::FieldTower;
use qltorus::localsing::{classify_ql, format_signature, QlClass};
use qltorus::parse::{parse_poly, parse_tower};
use qltorus::polyring::{MultiPoly, PolyRing};
use qltorus::report::{Check, Report};

/// Write to stdout, ignoring a closed pipe (e.g. `| head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! outp {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "qltorus", version, about = "Exact torus decompositions of plane quartics")]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a decomposition document (visible23, invisible23, invisible24, quasi).
    Verify { file: PathBuf },
    /// Classify a quartic given as a document with `curve`, a file holding a polynomial, or a polynomial.
    Classify {
        input: String,
        /// Tower lines (`name: transcendental`, `name: minpoly = ...`) for a bare polynomial.
        #[arg(long = "tower")]
        tower: Vec<String>,
        /// Rational values for transcendental parameters, e.g. `t=1,s=-2`.
        #[arg(long)]
        params: Option<String>,
    },
    /// Solve for visible decompositions from a constraint document.
    Solve { file: PathBuf },
    /// Run the quasi decomposition recurrence of a document.
    Quasi {
        file: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Specialize a degeneration family and classify the result.
    Degenerate {
        #[arg(long)]
        family: u8,
        /// Parameter values, e.g. `s=0,t=1,u=0`.
        #[arg(long)]
        params: String,
        /// Expected class index; adds a pass/fail check.
        #[arg(long)]
        expect: Option<u8>,
    },
    /// Browse and verify the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Verify {
        id: Option<String>,
        #[arg(long)]
        all: bool,
    },
}

/// JSON report; the field order is part of the interface.
#[derive(Serialize)]
struct JsonReport {
    entry: String,
    checks: Vec<Check>,
    tower: Vec<String>,
    class: Value,
}

enum Failure {
    Input(String),
    Compute(String),
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

impl From<DegenError> for Failure {
    fn from(e: DegenError) -> Self {
        match e {
            DegenError::UnknownFamily(_) | DegenError::MissingParameter(_) => Failure::Input(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { file } => cmd_document(file, None, cli.json),
        Command::Solve { file } => cmd_document(file, None, cli.json),
        Command::Quasi { file, steps } => cmd_document(file, *steps, cli.json),
        Command::Classify { input, tower, params } => cmd_classify(input, tower, params.as_deref(), cli.json),
        Command::Degenerate { family, params, expect } => cmd_degenerate(*family, params, *expect, cli.json),
        Command::Catalog { action } => cmd_catalog(action, cli.json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn entry_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn print_json(v: &impl Serialize) {
    out!("{}", serde_json::to_string_pretty(v).expect("reports serialize"));
}

fn print_tower(t: &FieldTower) {
    let d = t.describe();
    if d.is_empty() {
        out!("tower: Q");
    } else {
        out!("tower: {}", d.join("; "));
    }
}

fn cmd_document(path: &Path, steps: Option<usize>, json: bool) -> Result<bool, Failure> {
    let doc = Document::from_toml(&read(path)?)?;
    let out: Outcome = evaluate(&doc, steps)?;
    let ok = out.report.passed();
    if json {
        print_json(&JsonReport {
            entry: entry_name(path),
            checks: out.report.checks.clone(),
            tower: out.tower.describe(),
            class: Value::Null,
        });
    } else {
        print_tower(&out.tower);
        for line in &out.listing {
            out!("{line}");
        }
        for rec in &out.records {
            out!("{rec}");
        }
        outp!("{}", out.report);
        out!("{}", if ok { "all checks passed" } else { "FAILED" });
    }
    Ok(ok)
}

fn parse_params(text: &str) -> Result<BTreeMap<String, BigRational>, Failure> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Failure::Input(format!("expected name=value, got `{part}`")))?;
        let v: BigRational = v.trim().parse().map_err(|_| Failure::Input(format!("`{v}` is not a rational number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn class_json(c: &QlClass) -> Value {
    let points: Vec<Value> = c
        .locus
        .points
        .iter()
        .map(|p| json!({ "point": p.point.to_string(), "type": p.kind.label(), "at_infinity": p.at_infinity() }))
        .collect();
    json!({
        "index": c.index,
        "signature": format_signature(&c.signature),
        "infinity": c.infinity.to_string(),
        "points": points,
    })
}

fn print_class(c: &QlClass) {
    out!("class: {}", c.index.map(|i| format!("QL({i})")).unwrap_or_else(|| "none".into()));
    out!("singularities: {}", format_signature(&c.signature));
    out!("infinity: {}", c.infinity);
    for p in &c.locus.points {
        out!("  {:<8} {}", p.label().to_string(), p.point);
    }
}

/// The quartic to classify: a document with `curve`, a file with a
/// polynomial, or the polynomial itself.
fn classify_input(input: &str, tower: &[String]) -> Result<MultiPoly, Failure> {
    let path = Path::new(input);
    let text = if path.is_file() { read(path)? } else { input.to_string() };
    if let Ok(doc) = Document::from_toml(&text) {
        if let Some(curve) = &doc.curve {
            let t = parse_tower(&doc.tower).map_err(|e| Failure::Input(format!("tower: {e}")))?;
            let ring = PolyRing::projective(t);
            let q = parse_poly(&ring, curve).map_err(|e| Failure::Input(format!("curve: {e}")))?;
            // Keep only the generators the curve uses: radicals adjoined for the
            // components would block specialization of their parameters.
            let used = q.terms().filter_map(|(_, c)| c.max_generator()).max().map_or(0, |g| g + 1);
            let t = parse_tower(&doc.tower[..used]).map_err(|e| Failure::Input(format!("tower: {e}")))?;
            let ring = PolyRing::projective(t);
            return parse_poly(&ring, curve).map_err(|e| Failure::Input(format!("curve: {e}")));
        }
    }
    let t = parse_tower(tower).map_err(|e| Failure::Input(format!("tower: {e}")))?;
    let ring = PolyRing::projective(t);
    parse_poly(&ring, text.trim()).map_err(|e| Failure::Input(e.to_string()))
}

fn cmd_classify(input: &str, tower: &[String], params: Option<&str>, json: bool) -> Result<bool, Failure> {
    let mut q = classify_input(input, tower)?;
    if let Some(p) = params {
        let values = parse_params(p)?;
        let (k, spec) = q.tower().specialize(&values).map_err(|e| Failure::Input(e.to_string()))?;
        let ring = PolyRing::projective(k);
        q = q.map_coeffs(&ring, |c| spec.apply(c));
    }
    if q.is_zero() || !q.is_homogeneous() || q.degree() != 4 {
        return Err(Failure::Input("expected a homogeneous quartic in X, Y, Z".into()));
    }
    let class = classify_ql(&q).map_err(|e| Failure::Compute(e.to_string()))?;
    if json {
        let mut rep = Report::new();
        for p in &class.locus.points {
            rep.push(format!("point {}", p.point), true, p.label().to_string());
        }
        print_json(&JsonReport { entry: "classify".into(), checks: rep.checks, tower: class.locus.tower.describe(), class: class_json(&class) });
    } else {
        out!("curve: {q}");
        print_class(&class);
    }
    Ok(true)
}

fn cmd_degenerate(family: u8, params: &str, expect: Option<u8>, json: bool) -> Result<bool, Failure> {
    let fam = quartic_family(family)?;
    let values = parse_params(params)?;
    for k in values.keys() {
        if !fam.params.contains(&k.as_str()) {
            return Err(Failure::Input(format!("family {family} has no parameter `{k}`")));
        }
    }
    let q = family_specialize(&fam, &values)?;
    let (rep, class) = match expect {
        Some(n) => degeneration_check(&fam, &values, n)?,
        None => (Report::new(), classify_ql(&q).map_err(|e| Failure::Compute(e.to_string()))?),
    };
    let ok = rep.passed();
    if json {
        let mut checks = rep.checks.clone();
        if fam.best_effort {
            checks.insert(0, Check { name: "best-effort".into(), status: qltorus::report::Status::Waived, detail: fam.note.into() });
        }
        print_json(&JsonReport { entry: format!("family {family}"), checks, tower: class.locus.tower.describe(), class: class_json(&class) });
    } else {
        out!("family {family}: {}{}", fam.display, if fam.best_effort { " [best-effort]" } else { "" });
        out!("quartic: {q}");
        print_class(&class);
        outp!("{rep}");
    }
    Ok(ok)
}

fn print_entry(r: &EntryReport) {
    out!("== {} ({})", r.entry, if r.passed() { "pass" } else { "FAIL" });
    if let Some(c) = &r.class {
        out!("class: {c}");
    }
    if !r.tower.is_empty() {
        out!("tower: {}", r.tower.join("; "));
    }
    outp!("{}", r.report());
}

fn cmd_catalog(action: &CatalogAction, json: bool) -> Result<bool, Failure> {
    match action {
        CatalogAction::List => {
            let list = catalog::catalog_list();
            if json {
                print_json(&list);
            } else {
                for e in &list {
                    out!("{}", e.line());
                }
            }
            Ok(true)
        }
        CatalogAction::Verify { id, all } => {
            let reports = match (id, all) {
                (Some(id), false) => vec![catalog::verify_entry(id)?],
                (None, true) => catalog::verify_all(catalog::workers_from_env()),
                _ => return Err(Failure::Input("give an entry id or --all".into())),
            };
            let ok = reports.iter().all(|r| r.passed());
            if json {
                let arr: Vec<Value> = reports.iter().map(entry_json).collect();
                if id.is_some() {
                    print_json(&arr[0]);
                } else {
                    print_json(&arr);
                }
            } else {
                for r in &reports {
                    print_entry(r);
                }
                let failed = reports.iter().filter(|r| !r.passed()).count();
                out!("{} entries, {failed} failed", reports.len());
            }
            Ok(ok)
        }
    }
}

fn entry_json(r: &EntryReport) -> Value {
    serde_json::to_value(JsonReport {
        entry: r.entry.clone(),
        checks: r.checks.clone(),
        tower: r.tower.clone(),
        class: r.class.clone().map(Value::String).unwrap_or(Value::Null),
    })
    .expect("reports serialize")
}
