//! The built-in catalog of worked examples: every entry carries its curve,
//! decompositions in document form, and the data needed to cross-check them
//! (expected configuration, local incidence, symmetry orbits, families).

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degen::{check_family, quartic_family};
use crate::doc::{evaluate, DocKind, Document, Outcome};
use crate::fieldtower::FieldTower;
use crate::localsing::{
    classify_ql, format_signature, lemma_oracle_invisible24, lemma_oracle_visible, line_intersection_multiplicity,
    multiplicity, parse_signature, ql_row, LocalIncidence, LocalType, ProjPoint, QlClass,
};
use crate::parse::{parse_coeff, parse_poly, parse_tower};
use crate::polyring::{MultiPoly, PolyRing, ProjectiveTransform};
use crate::report::{Check, Report, Status};
use crate::torusdec::{decomposition_routes, join_towers, lift_to, proportionality, transform_decomposition};

const FIXTURE: &str = include_str!("../fixtures/catalog.toml");

/// Environment variable holding the worker count for `verify_all`.
pub const WORKERS_ENV: &str = "QLTORUS_WORKERS";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("bad catalog fixture: {0}")]
    Fixture(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    transforms: BTreeMap<String, TransformSpec>,
    entry: Vec<EntrySpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformSpec {
    #[serde(default)]
    tower: Vec<String>,
    matrix: [[String; 3]; 3],
}

/// One catalog entry as stored in the fixture.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub id: String,
    pub citation: String,
    #[serde(default)]
    pub tower: Vec<String>,
    pub curve: Option<String>,
    #[serde(default)]
    pub witness: BTreeMap<String, String>,
    pub class: Option<u8>,
    #[serde(default)]
    pub singularities: Vec<[String; 2]>,
    pub conic: Option<String>,
    pub line: Option<String>,
    #[serde(default)]
    pub decomposition: Vec<Document>,
    #[serde(default)]
    pub fixed_by: Vec<String>,
    #[serde(default)]
    pub orbit: Vec<[String; 2]>,
    pub signature: Option<String>,
    pub family: Option<u8>,
}

struct Catalog {
    transforms: BTreeMap<String, TransformSpec>,
    entries: Vec<EntrySpec>,
}

fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let file: CatalogFile = toml::from_str(FIXTURE).expect("embedded catalog fixture parses");
        Catalog { transforms: file.transforms, entries: file.entry }
    })
}

/// Summary line of an entry for `catalog list`.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub citation: String,
    pub kind: String,
    pub best_effort: bool,
}

impl CatalogEntry {
    pub fn line(&self) -> String {
        let tag = if self.best_effort { " [best-effort]" } else { "" };
        format!("{:<11} {:<22} {}{tag}", self.id, self.kind, self.citation)
    }
}

fn entry_kind(e: &EntrySpec) -> String {
    if let Some(f) = e.family {
        return format!("family {f}");
    }
    if e.signature.is_some() {
        return "configuration only".into();
    }
    let kinds: Vec<&str> = e
        .decomposition
        .iter()
        .map(|d| match d.kind {
            Some(DocKind::Visible23) => "visible (2,3)",
            Some(DocKind::Invisible23) => "invisible (2,3)",
            Some(DocKind::Invisible24) => "invisible (2,4)",
            Some(DocKind::Quasi) => "quasi (2,3)",
            Some(DocKind::Solve) | None => "solver",
        })
        .collect();
    let mut kinds = kinds;
    kinds.dedup();
    kinds.join(", ")
}

fn best_effort(e: &EntrySpec) -> bool {
    e.family.and_then(|f| quartic_family(f).ok()).is_some_and(|f| f.best_effort)
}

pub fn catalog_list() -> Vec<CatalogEntry> {
    catalog()
        .entries
        .iter()
        .map(|e| CatalogEntry { id: e.id.clone(), citation: e.citation.clone(), kind: entry_kind(e), best_effort: best_effort(e) })
        .collect()
}

pub fn entry_ids() -> Vec<String> {
    catalog().entries.iter().map(|e| e.id.clone()).collect()
}

pub fn entry(id: &str) -> Result<&'static EntrySpec, CatalogError> {
    catalog().entries.iter().find(|e| e.id == id).ok_or_else(|| CatalogError::UnknownEntry(id.to_string()))
}

/// Verification result of one entry. Field order is the serialized order.
#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub entry: String,
    pub checks: Vec<Check>,
    /// Tower of the (first) decomposition, one generator per line.
    pub tower: Vec<String>,
    /// Configuration class found at the witness.
    pub class: Option<String>,
}

impl EntryReport {
    pub fn report(&self) -> Report {
        Report { checks: self.checks.clone() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

pub fn verify_entry(id: &str) -> Result<EntryReport, CatalogError> {
    let e = entry(id)?;
    Ok(run_entry(e))
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// All entries, verified in parallel; the result is in catalog order
/// regardless of the worker count.
pub fn verify_all(workers: Option<usize>) -> Vec<EntryReport> {
    let entries = &catalog().entries;
    let run = || entries.par_iter().map(run_entry).collect::<Vec<_>>();
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

// ---------------------------------------------------------------------------

fn run_entry(e: &EntrySpec) -> EntryReport {
    let mut rep = Report::new();
    let mut tower = Vec::new();
    let mut class = None;
    if let Err(msg) = check_entry(e, &mut rep, &mut tower, &mut class) {
        rep.push("entry data", false, msg);
    }
    EntryReport { entry: e.id.clone(), checks: rep.checks, tower, class }
}

struct Curve {
    ring: Arc<PolyRing>,
    poly: MultiPoly,
}

fn entry_curve(e: &EntrySpec) -> Result<Option<Curve>, String> {
    let Some(text) = &e.curve else { return Ok(None) };
    let tower = parse_tower(&e.tower).map_err(|err| format!("tower: {err}"))?;
    let ring = PolyRing::projective(tower);
    let poly = parse_poly(&ring, text).map_err(|err| format!("curve: {err}"))?;
    Ok(Some(Curve { ring, poly }))
}

fn check_entry(e: &EntrySpec, rep: &mut Report, tower: &mut Vec<String>, class: &mut Option<String>) -> Result<(), String> {
    let curve = entry_curve(e)?;
    if let Some(c) = &curve {
        *tower = c.ring.tower().describe();
    }
    let mut outcomes = Vec::new();
    for (i, d) in e.decomposition.iter().enumerate() {
        let name = if e.decomposition.len() > 1 { format!("decomposition {}", i + 1) } else { "decomposition".into() };
        match evaluate(d, None) {
            Ok(out) => {
                rep.extend(&name, out.report.clone());
                if let (Some(c), Some(r)) = (&curve, out.records.first()) {
                    let k = join_towers(c.ring.tower(), r.tower())
                        .ok()
                        .and_then(|t| proportionality(&lift_to(&r.curve, &t), &lift_to(&c.poly, &t)));
                    rep.push(format!("{name}.curve is the entry curve"), k.is_some_and(|k| !k.is_zero()), "");
                }
                if i == 0 {
                    *tower = out.tower.describe();
                }
                outcomes.push(out);
            }
            Err(err) => rep.push(name, false, err.to_string()),
        }
    }
    if let Some(c) = &curve {
        if let Some(expected) = e.class {
            let found = check_class(e, c, expected, outcomes.first(), rep)?;
            *class = found.map(|q| q.describe());
        }
        for t in &e.fixed_by {
            let m = transform(t)?;
            let ok = join_towers(c.ring.tower(), m.tower())
                .ok()
                .and_then(|tw| {
                    let f = lift_to(&c.poly, &tw);
                    let m = lift_transform(&m, &tw);
                    m.apply(&f).ok().map(|img| img == f)
                })
                .unwrap_or(false);
            rep.push(format!("{t} fixes the curve"), ok, "");
        }
    }
    if !e.orbit.is_empty() {
        let Some(rec) = outcomes.first().and_then(|o| o.records.first()) else {
            return Err("orbit listed without a decomposition".into());
        };
        for [t, target] in &e.orbit {
            let m = transform(t)?;
            let name = format!("{t} maps to {target}");
            let tgt = entry(target).map_err(|err| err.to_string())?;
            let tgt_rec = tgt.decomposition.first().and_then(|d| evaluate(d, None).ok()).and_then(|o| o.records.into_iter().next());
            match (transform_decomposition(rec, &m), tgt_rec) {
                (Ok(img), Some(tr)) => {
                    let verified = img.verify().passed();
                    let same = img.same_up_to_scaling(&tr);
                    rep.push(name, verified && same, format!("image verifies: {verified}, matches: {same}"));
                }
                (Err(err), _) => rep.push(name, false, err.to_string()),
                (_, None) => rep.push(name, false, "target has no decomposition"),
            }
        }
    }
    if let Some(sig) = &e.signature {
        let parsed = parse_signature(sig).ok_or_else(|| format!("bad signature `{sig}`"))?;
        if let Some(row) = e.class.and_then(ql_row) {
            rep.push("signature matches table row", row.signature() == parsed, format_signature(&row.signature()));
        }
        let routes = decomposition_routes(&parsed);
        rep.push(
            "no decomposition expected",
            routes.is_empty(),
            if routes.is_empty() { "no local route to a torus decomposition".into() } else { routes.join("; ") },
        );
        *class = e.class.map(|i| format!("QL({i}): {}", format_signature(&parsed)));
    }
    if let Some(id) = e.family {
        let fam = quartic_family(id).map_err(|err| err.to_string())?;
        if fam.best_effort {
            rep.waive("best-effort", fam.note);
        }
        rep.extend(&format!("family {id}"), check_family(&fam));
        *tower = fam.poly.tower().describe();
    }
    Ok(())
}

fn transform(name: &str) -> Result<ProjectiveTransform, String> {
    let spec = catalog().transforms.get(name).ok_or_else(|| format!("unknown transform `{name}`"))?;
    let tower = parse_tower(&spec.tower).map_err(|err| err.to_string())?;
    let mut rows = Vec::new();
    for row in &spec.matrix {
        let mut r = Vec::new();
        for s in row {
            r.push(parse_coeff(&tower, s).map_err(|err| err.to_string())?);
        }
        rows.push([r[0].clone(), r[1].clone(), r[2].clone()]);
    }
    ProjectiveTransform::new(tower, [rows[0].clone(), rows[1].clone(), rows[2].clone()]).map_err(|err| err.to_string())
}

fn lift_transform(m: &ProjectiveTransform, tower: &Arc<FieldTower>) -> ProjectiveTransform {
    ProjectiveTransform::new(tower.clone(), m.matrix().clone()).expect("lifting keeps the determinant")
}

fn witness_values(e: &EntrySpec) -> Result<BTreeMap<String, BigRational>, String> {
    e.witness
        .iter()
        .map(|(k, v)| {
            let r: BigRational = v.parse().map_err(|_| format!("witness {k} = {v} is not rational"))?;
            Ok((k.clone(), r))
        })
        .collect()
}

/// Specialize a polynomial in the entry ring at the witness.
fn at_witness(p: &MultiPoly, values: &BTreeMap<String, BigRational>) -> Result<MultiPoly, String> {
    let (target, spec) = p.tower().specialize(values).map_err(|err| err.to_string())?;
    let ring = p.ring().with_tower(target);
    Ok(p.map_coeffs(&ring, |c| spec.apply(c)))
}

fn parse_point(tower: &Arc<FieldTower>, s: &str) -> Result<ProjPoint, String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = inner.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("bad point `{s}`"));
    }
    let mut c = Vec::new();
    for p in parts {
        c.push(parse_coeff(tower, p).map_err(|err| format!("point `{s}`: {err}"))?);
    }
    ProjPoint::new(tower, [c[0].clone(), c[1].clone(), c[2].clone()]).map_err(|err| err.to_string())
}

fn check_class(
    e: &EntrySpec,
    c: &Curve,
    expected: u8,
    first: Option<&Outcome>,
    rep: &mut Report,
) -> Result<Option<QlClass>, String> {
    let values = witness_values(e)?;
    let q = at_witness(&c.poly, &values)?;
    let q_class = match classify_ql(&q) {
        Ok(k) => k,
        Err(err) => {
            rep.push("classification", false, err.to_string());
            return Ok(None);
        }
    };
    rep.push(
        "classification",
        q_class.index == Some(expected),
        format!("expected QL({expected}), found {}", q_class.describe()),
    );
    let locus = &q_class.locus;
    let lt = locus.tower.clone();
    if !e.singularities.is_empty() {
        let mut unmatched: Vec<(String, ProjPoint)> = Vec::new();
        for [label, pt] in &e.singularities {
            unmatched.push((label.clone(), parse_point(&lt, pt)?));
        }
        let mut extra = Vec::new();
        for sp in &locus.points {
            let label = sp.label().to_string();
            match unmatched.iter().position(|(l, p)| *l == label && *p == sp.point) {
                Some(i) => {
                    unmatched.remove(i);
                }
                None => extra.push(format!("{label} at {}", sp.point)),
            }
        }
        let missing: Vec<String> = unmatched.iter().map(|(l, p)| format!("{l} at {p}")).collect();
        rep.push(
            "singular points",
            missing.is_empty() && extra.is_empty(),
            if missing.is_empty() && extra.is_empty() {
                format!("{} points as listed", locus.points.len())
            } else {
                format!("missing: [{}], unexpected: [{}]", missing.join(", "), extra.join(", "))
            },
        );
    }
    let kind = e.decomposition.first().and_then(|d| d.kind);
    let ring_at = PolyRing::projective(lt.clone());
    let spec_lift = |text: &str| -> Result<MultiPoly, String> {
        let p = parse_poly(&c.ring, text).map_err(|err| err.to_string())?;
        Ok(lift_to(&at_witness(&p, &values)?, &lt)).map(|p| p.lift(&ring_at))
    };
    let z = MultiPoly::var(&ring_at, 2);
    match (kind, &e.conic) {
        (Some(DocKind::Visible23), Some(conic)) => {
            let conic = spec_lift(conic)?;
            let line = spec_lift(e.line.as_deref().ok_or("visible entry without line")?)?;
            let mut ok = true;
            let mut notes = Vec::new();
            for sp in &locus.points {
                let p = &sp.point;
                let on_c = conic.eval(p.coords()).is_zero();
                let on_l = line.eval(p.coords()).is_zero();
                let on_linf = p.at_infinity();
                let predicted = if on_c && (on_l || on_linf) {
                    let m = multiplicity(&conic, p).map_err(|err| err.to_string())?;
                    let inc = LocalIncidence {
                        iota1: if on_l { line_intersection_multiplicity(&conic, &line, p).map_err(|err| err.to_string())? } else { 0 },
                        iota2: if on_linf { line_intersection_multiplicity(&conic, &z, p).map_err(|err| err.to_string())? } else { 0 },
                        c2_smooth: m == 1,
                    };
                    lemma_oracle_visible(&inc, on_l, on_linf).map_err(|err| err.to_string())?
                } else {
                    // Outer points of a visible quartic are nodes or cusps.
                    if !matches!(sp.kind, LocalType::A { n: 1 | 2 }) {
                        ok = false;
                    }
                    notes.push(format!("outer {} at {p}", sp.kind));
                    continue;
                };
                ok &= predicted == sp.kind;
                notes.push(format!("inner {p}: predicted {predicted}, found {}", sp.kind));
            }
            rep.push("local incidence", ok, notes.join("; "));
        }
        (Some(DocKind::Invisible24), Some(conic)) => {
            let conic = spec_lift(conic)?;
            let mut ok = true;
            let mut notes = Vec::new();
            for sp in &locus.points {
                let p = &sp.point;
                let inner = p.at_infinity() && conic.eval(p.coords()).is_zero();
                let iota = if inner { line_intersection_multiplicity(&conic, &z, p).map_err(|err| err.to_string())? } else { 0 };
                let smooth = multiplicity(&conic, p).map_err(|err| err.to_string())? <= 1;
                let predicted = lemma_oracle_invisible24(iota, smooth).map_err(|err| err.to_string())?;
                ok &= predicted == sp.kind;
                notes.push(format!("{p}: predicted {predicted}, found {}", sp.kind));
            }
            rep.push("local incidence", ok, notes.join("; "));
        }
        (Some(DocKind::Invisible23), _) => {
            if let Some(out) = first.filter(|o| !o.admissible.is_empty()) {
                let ok = out.admissible.contains(&q_class.signature);
                rep.push("configuration admissible", ok, format_signature(&q_class.signature));
            }
        }
        _ => {}
    }
    Ok(Some(q_class))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_parses_and_ids_are_unique() {
        let ids = entry_ids();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        assert!(ids.iter().any(|i| i == "Q18"));
        assert!(ids.iter().any(|i| i == "S9-example"));
    }

    #[test]
    fn list_flags_best_effort_family() {
        let list = catalog_list();
        let fam2 = list.iter().find(|e| e.id == "Fam2").unwrap();
        assert!(fam2.best_effort);
        assert!(fam2.line().contains("best-effort"));
        assert!(!list.iter().find(|e| e.id == "Fam1").unwrap().best_effort);
    }

    #[test]
    fn unknown_entry() {
        assert_eq!(verify_entry("Q99").unwrap_err(), CatalogError::UnknownEntry("Q99".into()));
    }

    #[test]
    fn signature_only_entry_passes() {
        let r = verify_entry("Q13").unwrap();
        assert!(r.passed(), "{}", r.report());
        assert_eq!(r.checks.iter().find(|c| c.name == "no decomposition expected").unwrap().status, Status::Pass);
    }

    #[test]
    fn quartic_one_entry_passes() {
        let r = verify_entry("Q1").unwrap();
        assert!(r.passed(), "{}", r.report());
        assert_eq!(r.class.as_deref().map(|s| s.starts_with("QL(1)")), Some(true));
    }
}
