//! Structured text documents (TOML) describing decompositions, solver
//! problems and quasi chains, and their evaluation into reports.
//!
//! ```toml
//! kind = "visible23"
//! tower = ["t: transcendental", "s1: minpoly = s1^3 - t"]
//! curve = "(X^2 - Y^2 - Z^2)^2 + t*Y^3*Z"
//! a = "X^2 - Y^2 - Z^2"
//! b = "s1*Y"
//! unit = "1"
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldtower::{Coeff, FieldTower};
use crate::localsing::{ProjPoint, Signature};
use crate::parse::{parse_coeff, parse_poly, parse_tower, ParseError};
use crate::polyring::{MultiPoly, PolyRing};
use crate::report::Report;
use crate::torusdec::{
    build_invisible_23, build_invisible_24, proportionality, quasi_chain, solve_visible_quartic, verify_quasi,
    Constraint, DecompositionKind, DecompositionRecord, InvisibleData23, InvisibleData24, QuasiTorusDecomposition,
    TorusError, VisibleSolution,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Quasi,
    Visible23,
    Invisible23,
    Invisible24,
    Solve,
}

/// A document. Which fields are read depends on `kind`; unknown fields are
/// rejected so typos surface as input errors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub kind: Option<DocKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tower: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// First and second component (`F2'`, `F1'` / `F2`, `F3` / `F2`, `F4`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,

    // quasi: f_r^(ab) f = f_p^a + f_q^b, or a chain base f = h0^2 - g0^3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_r: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_q: Option<String>,
    /// `[a, b]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<[u32; 2]>,
    /// `[r, p, q]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<[u32; 3]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub relaxed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// A curve the base locus must not be contained in.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avoids: Option<String>,

    // invisible normal-form data
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l3: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f2_2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f2_1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a00: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b00: Option<String>,

    // solver
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inner: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conic_through: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conic_tangent: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub line_through: Vec<[String; 3]>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DocError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{field}`: {error}")]
    Parse { field: String, error: ParseError },
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Torus(#[from] TorusError),
}

impl DocError {
    /// Input errors (exit code 2) versus failed computations (exit code 1).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, DocError::Torus(_))
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

impl Document {
    pub fn from_toml(text: &str) -> Result<Self, DocError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
            DocError::Syntax { line, column, message: e.message().to_string() }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("documents serialize")
    }

    pub fn kind(&self) -> Result<DocKind, DocError> {
        self.kind.ok_or(DocError::Missing("kind"))
    }

    /// Serialized form of a decomposition record.
    pub fn from_record(rec: &DecompositionRecord) -> Self {
        let kind = match rec.kind {
            DecompositionKind::Visible => DocKind::Visible23,
            DecompositionKind::Invisible23 => DocKind::Invisible23,
            DecompositionKind::Invisible24 => DocKind::Invisible24,
        };
        Document {
            kind: Some(kind),
            tower: rec.tower().describe(),
            curve: Some(rec.curve.to_string()),
            unit: Some(rec.tower().format(&rec.unit)),
            a: Some(rec.a.to_string()),
            b: Some(rec.b.to_string()),
            ..Default::default()
        }
    }
}

/// Parsed tower and ring of a document.
pub struct Context {
    pub tower: Arc<FieldTower>,
    pub ring: Arc<PolyRing>,
}

impl Context {
    pub fn new(doc: &Document, default_vars: &[&str]) -> Result<Self, DocError> {
        let tower = parse_tower(&doc.tower).map_err(|error| DocError::Parse { field: "tower".into(), error })?;
        let ring = match &doc.vars {
            Some(v) => PolyRing::from_names(tower.clone(), v.clone()),
            None => PolyRing::new(tower.clone(), default_vars),
        };
        Ok(Context { tower, ring })
    }

    pub fn poly(&self, field: &'static str, text: &Option<String>) -> Result<MultiPoly, DocError> {
        let text = text.as_ref().ok_or(DocError::Missing(field))?;
        parse_poly(&self.ring, text).map_err(|error| DocError::Parse { field: field.into(), error })
    }

    pub fn opt_poly(&self, field: &'static str, text: &Option<String>) -> Result<Option<MultiPoly>, DocError> {
        text.as_ref().map(|_| self.poly(field, text)).transpose()
    }

    pub fn coeff(&self, field: &'static str, text: &Option<String>) -> Result<Coeff, DocError> {
        let text = text.as_ref().ok_or(DocError::Missing(field))?;
        parse_coeff(&self.tower, text).map_err(|error| DocError::Parse { field: field.into(), error })
    }

    pub fn point(&self, field: &'static str, p: &[String; 3]) -> Result<ProjPoint, DocError> {
        let mut c = Vec::new();
        for s in p {
            c.push(parse_coeff(&self.tower, s).map_err(|error| DocError::Parse { field: field.into(), error })?);
        }
        let coords: [Coeff; 3] = c.try_into().unwrap();
        ProjPoint::new(&self.tower, coords).map_err(|e| DocError::Invalid(format!("field `{field}`: {e}")))
    }
}

/// Result of evaluating a document.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub tower: Arc<FieldTower>,
    pub report: Report,
    pub records: Vec<DecompositionRecord>,
    pub solutions: Vec<VisibleSolution>,
    /// Human-readable listing (chain levels, built polynomials).
    pub listing: Vec<String>,
    /// Configurations allowed by invisible (2,3) normal-form data.
    pub admissible: Vec<Signature>,
}

impl Outcome {
    fn new(tower: Arc<FieldTower>) -> Self {
        Outcome { tower, report: Report::new(), records: vec![], solutions: vec![], listing: vec![], admissible: vec![] }
    }
}

const XYZ: [&str; 3] = ["X", "Y", "Z"];

/// Evaluate a document; `steps` overrides the chain length of quasi documents.
pub fn evaluate(doc: &Document, steps: Option<usize>) -> Result<Outcome, DocError> {
    match doc.kind()? {
        DocKind::Visible23 => eval_record(doc, DecompositionKind::Visible),
        DocKind::Invisible23 if doc.l1.is_some() => eval_inv23_data(doc),
        DocKind::Invisible23 => eval_record(doc, DecompositionKind::Invisible23),
        DocKind::Invisible24 if doc.f2_2.is_some() => eval_inv24_data(doc),
        DocKind::Invisible24 => eval_record(doc, DecompositionKind::Invisible24),
        DocKind::Quasi => eval_quasi(doc, steps),
        DocKind::Solve => eval_solve(doc),
    }
}

fn eval_record(doc: &Document, kind: DecompositionKind) -> Result<Outcome, DocError> {
    let cx = Context::new(doc, &XYZ)?;
    let curve = cx.poly("curve", &doc.curve)?;
    let a = cx.poly("a", &doc.a)?;
    let b = cx.poly("b", &doc.b)?;
    let rec = match &doc.unit {
        Some(_) => DecompositionRecord::new(kind, curve, cx.coeff("unit", &doc.unit)?, a, b)?,
        None => match DecompositionRecord::with_found_unit(kind, curve.clone(), a.clone(), b.clone()) {
            Ok(r) => r,
            Err(_) => DecompositionRecord::new(kind, curve, Coeff::one(), a, b)?,
        },
    };
    let mut out = Outcome::new(cx.tower.clone());
    out.report = rec.verify();
    out.records.push(rec);
    Ok(out)
}

/// Compare a built quartic with the declared curve, if any; returns the factor.
fn match_curve(cx: &Context, doc: &Document, g: &MultiPoly, report: &mut Report) -> Result<Option<Coeff>, DocError> {
    let Some(curve) = cx.opt_poly("curve", &doc.curve)? else { return Ok(None) };
    let k = proportionality(g, &curve);
    report.push(
        "built quartic matches curve",
        k.as_ref().is_some_and(|c| !c.is_zero()),
        k.as_ref().map(|c| format!("G = {} * curve", cx.tower.format(c))).unwrap_or_default(),
    );
    Ok(k)
}

fn eval_inv23_data(doc: &Document) -> Result<Outcome, DocError> {
    let cx = Context::new(doc, &XYZ)?;
    let zero = Some("0".to_string());
    let data = InvisibleData23 {
        l1: cx.poly("l1", &doc.l1)?,
        l2: cx.poly("l2", doc.l2.as_ref().map_or(&zero, |_| &doc.l2))?,
        l3: cx.poly("l3", doc.l3.as_ref().map_or(&zero, |_| &doc.l3))?,
        a00: cx.coeff("a00", doc.a00.as_ref().map_or(&zero, |_| &doc.a00))?,
        b00: cx.coeff("b00", doc.b00.as_ref().map_or(&zero, |_| &doc.b00))?,
        eps: doc.eps.unwrap_or(1),
    };
    let built = build_invisible_23(&data)?;
    let mut out = Outcome::new(cx.tower.clone());
    out.listing.push(format!("F2: {}", built.f2));
    out.listing.push(format!("F3: {}", built.f3));
    out.listing.push(format!("G: {}", built.g));
    let sigs: Vec<String> = built.admissible.iter().map(|s| crate::localsing::format_signature(s)).collect();
    out.listing.push(format!("admissible: {}", sigs.join("; ")));
    out.admissible = built.admissible.clone();
    let factor = match_curve(&cx, doc, &built.g, &mut out.report)?;
    let (curve, unit) = match factor {
        Some(k) if !k.is_zero() => (cx.poly("curve", &doc.curve)?, k),
        _ => (built.g.clone(), Coeff::one()),
    };
    let rec = DecompositionRecord::new(DecompositionKind::Invisible23, curve, unit, built.f2, built.f3)?;
    out.report.extend("", rec.verify());
    out.records.push(rec);
    Ok(out)
}

fn eval_inv24_data(doc: &Document) -> Result<Outcome, DocError> {
    let cx = Context::new(doc, &XYZ)?;
    let zero = Some("0".to_string());
    let data = InvisibleData24 {
        f2_2: cx.poly("f2_2", &doc.f2_2)?,
        f2_1: cx.poly("f2_1", doc.f2_1.as_ref().map_or(&zero, |_| &doc.f2_1))?,
        a00: cx.coeff("a00", doc.a00.as_ref().map_or(&zero, |_| &doc.a00))?,
        b00: cx.coeff("b00", doc.b00.as_ref().map_or(&zero, |_| &doc.b00))?,
    };
    let built = build_invisible_24(&data)?;
    let mut out = Outcome::new(cx.tower.clone());
    out.listing.push(format!("F2: {}", built.f2));
    out.listing.push(format!("F4: {}", built.f4));
    out.listing.push(format!("G: {}", built.g));
    out.listing.push(format!("c: {}", cx.tower.format(&built.c)));
    out.report.extend("", built.report.clone());
    let factor = match_curve(&cx, doc, &built.g, &mut out.report)?;
    let (curve, unit) = match factor {
        // Z^4 * 2c * G with G = k * curve.
        Some(k) if !k.is_zero() => (cx.poly("curve", &doc.curve)?, cx.tower.mul(&built.unit, &k)),
        _ => (built.g.clone(), built.unit.clone()),
    };
    let rec = DecompositionRecord::new(DecompositionKind::Invisible24, curve, unit, built.f2, built.f4)?;
    out.report.extend("record", rec.verify());
    out.records.push(rec);
    Ok(out)
}

fn eval_quasi(doc: &Document, steps: Option<usize>) -> Result<Outcome, DocError> {
    let cx = Context::new(doc, &["x", "y"])?;
    let f = cx.poly("f", &doc.f)?;
    let mut out = Outcome::new(cx.tower.clone());
    if doc.f_p.is_some() || doc.f_q.is_some() {
        let [a, b] = doc.exponents.ok_or(DocError::Missing("exponents"))?;
        let [r, p, q] = doc.degrees.ok_or(DocError::Missing("degrees"))?;
        let one = Some("1".to_string());
        let d = QuasiTorusDecomposition {
            f: f.clone(),
            f_r: cx.poly("f_r", doc.f_r.as_ref().map_or(&one, |_| &doc.f_r))?,
            f_p: cx.poly("f_p", &doc.f_p)?,
            f_q: cx.poly("f_q", &doc.f_q)?,
            a,
            b,
            r,
            p,
            q,
            relaxed: doc.relaxed,
        };
        out.report.extend("", verify_quasi(&d));
    }
    if doc.g0.is_some() || doc.h0.is_some() {
        let g0 = cx.poly("g0", &doc.g0)?;
        let h0 = cx.poly("h0", &doc.h0)?;
        let n = steps.or(doc.steps).unwrap_or(1);
        let chain = quasi_chain(&f, &g0, &h0, n)?;
        for (i, (g, h)) in chain.levels.iter().enumerate() {
            out.listing.push(format!("g{i}: {g}"));
            out.listing.push(format!("h{i}: {h}"));
        }
        out.report.extend("chain", chain.report.clone());
        if let Some(avoid) = cx.opt_poly("avoids", &doc.avoids)? {
            let t = chain.sigma_tower.clone();
            let avoid = crate::torusdec::lift_to(&avoid, &t);
            let outside = chain.sigma0.iter().filter(|p| !avoid.eval(&p[..]).is_zero()).count();
            out.report.push(
                "base locus not contained in avoided curve",
                outside > 0,
                format!("{outside} of {} points off the curve", chain.sigma0.len()),
            );
        }
        out.tower = chain.f.tower().clone();
    }
    if doc.f_p.is_none() && doc.f_q.is_none() && doc.g0.is_none() && doc.h0.is_none() {
        return Err(DocError::Invalid("quasi document needs f_p and f_q, or g0 and h0".into()));
    }
    Ok(out)
}

fn eval_solve(doc: &Document) -> Result<Outcome, DocError> {
    let cx = Context::new(doc, &XYZ)?;
    let q = cx.poly("curve", &doc.curve)?;
    let inner = doc.inner.iter().map(|p| cx.point("inner", p)).collect::<Result<Vec<_>, _>>()?;
    let mut cons = Vec::new();
    for p in &doc.conic_through {
        cons.push(Constraint::ConicThrough(cx.point("conic_through", p)?));
    }
    for p in &doc.conic_tangent {
        cons.push(Constraint::ConicTangent(cx.point("conic_tangent", p)?));
    }
    for p in &doc.line_through {
        cons.push(Constraint::LineThrough(cx.point("line_through", p)?));
    }
    let sols = solve_visible_quartic(&q, &inner, &cons)?;
    let mut out = Outcome::new(cx.tower.clone());
    out.report.push("solutions", true, format!("{} found", sols.len()));
    for (i, s) in sols.iter().enumerate() {
        out.listing.push(s.describe());
        let rec = s.realize()?;
        out.report.extend(&format!("solution {}", i + 1), rec.verify());
        out.records.push(rec);
    }
    out.solutions = sols;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q1: &str = r#"
kind = "visible23"
tower = ["t: transcendental", "s1: minpoly = s1^3 - t"]
curve = "(X^2 - Y^2 - Z^2)^2 + t*Y^3*Z"
a = "X^2 - Y^2 - Z^2"
b = "s1*Y"
unit = "1"
"#;

    #[test]
    fn visible_document_verifies_and_round_trips() {
        let doc = Document::from_toml(Q1).unwrap();
        let out = evaluate(&doc, None).unwrap();
        assert!(out.report.passed(), "{}", out.report);
        let again = Document::from_record(&out.records[0]);
        let back = Document::from_toml(&again.to_toml()).unwrap();
        assert_eq!(back, again);
        let out2 = evaluate(&back, None).unwrap();
        assert!(out2.report.passed());
        assert_eq!(out2.records[0].curve, out.records[0].curve);
    }

    #[test]
    fn perturbed_coefficient_fails_identity() {
        let doc = Document::from_toml(&Q1.replace("t*Y^3*Z", "2*t*Y^3*Z")).unwrap();
        let out = evaluate(&doc, None).unwrap();
        assert_eq!(out.report.failures().next().unwrap().name, "identity");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = Document::from_toml("kind = \"visible23\"\ncurve = \"X^2 +\"\na = \"X\"\nb = \"Y\"\n")
            .map(|d| evaluate(&d, None))
            .unwrap()
            .unwrap_err();
        assert!(matches!(err, DocError::Parse { ref field, .. } if field == "curve"), "{err}");
        let err = Document::from_toml("kind = \"visible23\"\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, DocError::Syntax { line: 2, .. }), "{err}");
        assert!(err.is_input_error());
    }

    #[test]
    fn quasi_chain_document() {
        let doc = Document::from_toml("kind = \"quasi\"\nf = \"y^2 - x^3\"\ng0 = \"x\"\nh0 = \"y\"\nsteps = 2\n").unwrap();
        let out = evaluate(&doc, None).unwrap();
        assert!(out.report.passed(), "{}", out.report);
        assert_eq!(out.listing.len(), 6);
        let out = evaluate(&doc, Some(0)).unwrap();
        assert_eq!(out.listing.len(), 2);
        let bad = Document::from_toml("kind = \"quasi\"\nf = \"y^2 - x^3\"\ng0 = \"x\"\nh0 = \"2*y\"\n").unwrap();
        assert!(matches!(evaluate(&bad, None), Err(DocError::Torus(TorusError::BaseIdentityFails))));
    }
}
