//! Acceptance suite: one PASS/FAIL line per criterion. Every tolerance is
//! exact (a symbolic zero or an exact count); the only numeric knobs are the
//! sample sizes and chain length pinned below.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qltorus::catalog::{self, EntryReport};
use qltorus::degen::{build_sextic_family, degeneration_check, int_values, quartic_family};
use qltorus::fieldtower::FieldTower;
use qltorus::localsing::{
    classify_singularity, lemma_oracle_visible, line_intersection_multiplicity, milnor_number_affine,
    singular_points, LocalError, LocalIncidence, LocalType, ProjPoint,
};
use qltorus::parse::{parse_coeff, parse_poly, parse_tower};
use qltorus::polyring::{MultiPoly, PolyRing, ProjectiveTransform};
use qltorus::report::Status;
use qltorus::torusdec::{lift_to, quasi_chain, quasi_step, solve_visible_quartic, visible_decompositions};

const SEED: u64 = 0x5eed_2024;
const LEMMA_SAMPLES: usize = 100;
const RECURRENCE_SAMPLES: usize = 50;
const RECURRENCE_MAX_DEGREE: u32 = 3;
const CHAIN_STEPS: usize = 3;
const MIN_CLASSIFIED: usize = 14;

const THREE_CUSP: &str = "Z^4 - 6*(X^2 + Y^2)*Z^2 + 8*(X^2 - 3*Y^2)*X*Z - 3*(X^2 + Y^2)^2";

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn main() {
    let start = Instant::now();
    let reports = catalog::verify_all(catalog::workers_from_env());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("catalog identities", Box::new(|| criterion_1(&reports))),
        ("classification at witnesses", Box::new(|| criterion_2(&reports))),
        ("visible lemma oracle", Box::new(|| criterion_3(&reports))),
        ("quasi recurrence", Box::new(criterion_4)),
        ("Milnor oracle", Box::new(criterion_5)),
        ("solver reproduction", Box::new(criterion_6)),
        ("degeneration spot checks", Box::new(criterion_7)),
        ("sextic lift", Box::new(criterion_8)),
        ("S3 equivariance", Box::new(|| criterion_9(&reports))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        if !o.ok {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {} ({:.2?})",
            i + 1,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed()
        );
    }
    println!("acceptance: {} of 9 passed in {:.2?}", 9 - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn report_of<'a>(reports: &'a [EntryReport], id: &str) -> Option<&'a EntryReport> {
    reports.iter().find(|r| r.entry == id)
}

// ---------------------------------------------------------------------------

fn criterion_1(reports: &[EntryReport]) -> Outcome {
    let ids = [
        "Q1", "Q2", "Q3", "Q4", "Q6", "Q7", "Q8", "Q9", "Q10", "Q11", "Q12", "Q5-V1", "Q5-V2", "Q5-V3", "Q5-In1", "Q5-In2", "Q14",
        "Q15", "Q17", "Q18", "Q19", "S9-example",
    ];
    let mut bad = Vec::new();
    for id in ids {
        let ok = report_of(reports, id).is_some_and(|r| {
            let decomp: Vec<_> = r.checks.iter().filter(|c| c.name.starts_with("decomposition")).collect();
            !decomp.is_empty() && decomp.iter().all(|c| c.status == Status::Pass)
        });
        if !ok {
            bad.push(id);
        }
    }
    outcome(bad.is_empty(), format!("{}/{} identities exact; failing: {bad:?}", ids.len() - bad.len(), ids.len()))
}

fn criterion_2(reports: &[EntryReport]) -> Outcome {
    let mut n = 0;
    let mut bad = Vec::new();
    for r in reports {
        let Some(c) = r.checks.iter().find(|c| c.name == "classification") else { continue };
        n += 1;
        let points_ok = r.checks.iter().filter(|c| c.name == "singular points").all(|c| c.status == Status::Pass);
        if c.status != Status::Pass || !points_ok {
            bad.push(r.entry.clone());
        }
    }
    outcome(bad.is_empty() && n >= MIN_CLASSIFIED, format!("{} of {n} entries match their table row (need {MIN_CLASSIFIED}); failing: {bad:?}", n - bad.len()))
}

// ---------------------------------------------------------------------------

fn nonzero(rng: &mut ChaCha8Rng) -> i64 {
    loop {
        let v = rng.gen_range(-5..=5);
        if v != 0 {
            return v;
        }
    }
}

struct VisibleSample {
    g: MultiPoly,
    conic: MultiPoly,
    line: MultiPoly,
    p: ProjPoint,
}

/// `G = C^2 + lambda L^3 Z` with `I(C, L; P) = i1` and `I(C, L_inf; P) = i2`
/// at a marked point `P` of the smooth conic `C`.
fn visible_sample(rng: &mut ChaCha8Rng, i1: u32, i2: u32) -> Option<VisibleSample> {
    let ring = PolyRing::projective(FieldTower::rationals());
    let lam = nonzero(rng);
    let (conic, line, p) = if i2 == 0 {
        // P = [0:0:1], tangent a1 x + a2 y = 0.
        let (a1, a2) = (rng.gen_range(-4..=4), rng.gen_range(-4..=4));
        if a1 == 0 && a2 == 0 {
            return None;
        }
        let (q11, q12, q22) = (rng.gen_range(-4..=4), rng.gen_range(-4..=4), rng.gen_range(-4..=4));
        if q11 * a2 * a2 - q12 * a1 * a2 + q22 * a1 * a1 == 0 {
            return None; // tangent line inside the conic
        }
        let conic = format!("({a1})*X*Z + ({a2})*Y*Z + ({q11})*X^2 + ({q12})*X*Y + ({q22})*Y^2");
        let line = match i1 {
            0 => format!("({})*Z + ({})*X + ({})*Y", nonzero(rng), rng.gen_range(-4..=4), rng.gen_range(-4..=4)),
            1 => {
                let (b1, b2) = (rng.gen_range(-4..=4), rng.gen_range(-4..=4));
                if a1 * b2 - a2 * b1 == 0 {
                    return None;
                }
                format!("({b1})*X + ({b2})*Y")
            }
            _ => {
                let k = nonzero(rng);
                format!("({})*X + ({})*Y", k * a1, k * a2)
            }
        };
        (conic, line, [0, 0, 1])
    } else {
        // P = [0:1:0], tangent a1 X + a3 Z = 0; i2 = 2 means tangent to Z = 0.
        let a1 = if i2 == 2 { 0 } else { nonzero(rng) };
        let a3 = if i2 == 2 { nonzero(rng) } else { rng.gen_range(-4..=4) };
        let (q11, q13, q33) = (if i2 == 2 { nonzero(rng) } else { rng.gen_range(-4..=4) }, rng.gen_range(-4..=4), rng.gen_range(-4..=4));
        if q11 * a3 * a3 - q13 * a1 * a3 + q33 * a1 * a1 == 0 {
            return None;
        }
        let conic = format!("Y*(({a1})*X + ({a3})*Z) + ({q11})*X^2 + ({q13})*X*Z + ({q33})*Z^2");
        let line = match i1 {
            0 => format!("({})*Y + ({})*X + ({})*Z", nonzero(rng), rng.gen_range(-4..=4), rng.gen_range(-4..=4)),
            1 => {
                let (b1, b3) = (nonzero(rng), rng.gen_range(-4..=4));
                if a1 * b3 - a3 * b1 == 0 {
                    return None;
                }
                format!("({b1})*X + ({b3})*Z")
            }
            _ => {
                let k = nonzero(rng);
                format!("({})*X + ({})*Z", k * a1, k * a3)
            }
        };
        (conic, line, [0, 1, 0])
    };
    let conic = parse_poly(&ring, &conic).unwrap();
    let line = parse_poly(&ring, &line).unwrap();
    let z = MultiPoly::var(&ring, 2);
    let g = conic.pow(2).add(&line.pow(3).mul(&z).scale_int(lam));
    let p = ProjPoint::from_ints(ring.tower(), p);
    Some(VisibleSample { g, conic, line, p })
}

fn criterion_3(reports: &[EntryReport]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases: Vec<(u32, u32)> = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).filter(|&c| c != (2, 2)).collect();
    let (mut agree, mut outer, mut outer_ok, mut redraws) = (0, 0, 0, 0);
    let mut first_bad = None;
    for k in 0..LEMMA_SAMPLES {
        let (i1, i2) = cases[k % cases.len()];
        let s = loop {
            match visible_sample(&mut rng, i1, i2) {
                Some(s) if singular_points(&s.g).is_ok() => break s,
                _ => redraws += 1,
            }
        };
        // The marked point against the prescribed incidence.
        let predicted = lemma_oracle_visible(&LocalIncidence { iota1: i1, iota2: i2, c2_smooth: true }, i1 > 0, i2 > 0);
        // Smooth predictions carry the tangency with L_inf.
        let z = MultiPoly::var(s.g.ring(), 2);
        let found = classify_singularity(&s.g, &s.p, Some(&z));
        let ok = match (&predicted, &found) {
            (Ok(a), Ok(b)) => a == b,
            // (0, 0): not an inner point, and not a point of G at all.
            (Err(_), Err(LocalError::NotOnCurve)) => (i1, i2) == (0, 0),
            _ => false,
        };
        let measured = (
            if i1 > 0 { line_intersection_multiplicity(&s.conic, &s.line, &s.p).ok() } else { Some(0) },
            if i2 > 0 { line_intersection_multiplicity(&s.conic, &z, &s.p).ok() } else { Some(0) },
        );
        if ok && measured == (Some(i1), Some(i2)) {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("({i1},{i2}) on {}: predicted {predicted:?}, found {found:?}, measured {measured:?}", s.g));
        }
        // Every singular point off C2 ∩ (L ∪ L_inf) is a node or a cusp.
        let locus = singular_points(&s.g).unwrap();
        let t = locus.tower.clone();
        let (c, l) = (lift_to(&s.conic, &t), lift_to(&s.line, &t));
        for sp in &locus.points {
            let inner = c.eval(sp.point.coords()).is_zero() && (l.eval(sp.point.coords()).is_zero() || sp.at_infinity());
            if inner {
                continue;
            }
            outer += 1;
            if matches!(sp.kind, LocalType::A { n: 1 | 2 }) {
                outer_ok += 1;
            }
        }
    }
    // Random samples rarely have outer points; the catalog's visible entries do
    // (nodes of Q3, Q4, Q14, Q15 and the outer cusps of Q5-V1..V3).
    for r in reports {
        if let Some(c) = r.checks.iter().find(|c| c.name == "local incidence") {
            for part in c.detail.split("; ").filter(|p| p.starts_with("outer ")) {
                outer += 1;
                if part.starts_with("outer a1 ") || part.starts_with("outer a2 ") {
                    outer_ok += 1;
                }
            }
        }
    }
    outcome(
        agree == LEMMA_SAMPLES && outer_ok == outer && outer > 0,
        format!(
            "{agree}/{LEMMA_SAMPLES} marked points agree; {outer_ok}/{outer} outer points are a1/a2; {redraws} degenerate draws redrawn{}",
            first_bad.map(|b| format!("; first mismatch: {b}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------

fn random_poly(rng: &mut ChaCha8Rng, ring: &Arc<PolyRing>, max_degree: u32) -> MultiPoly {
    let d = rng.gen_range(1..=max_degree);
    let mut terms = Vec::new();
    for i in 0..=d {
        for j in 0..=(d - i) {
            let c: i64 = rng.gen_range(-3..=3);
            if c != 0 {
                terms.push(format!("({c})*x^{i}*y^{j}"));
            }
        }
    }
    if terms.is_empty() {
        terms.push("x".into());
    }
    parse_poly(ring, &terms.join(" + ")).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let ring = PolyRing::new(FieldTower::rationals(), &["x", "y"]);
    let mut ok = 0;
    for _ in 0..RECURRENCE_SAMPLES {
        let g = random_poly(&mut rng, &ring, RECURRENCE_MAX_DEGREE);
        let h = random_poly(&mut rng, &ring, RECURRENCE_MAX_DEGREE);
        let Ok((g2, h2)) = quasi_step(&g, &h) else { continue };
        // Recheck independently of the assertion inside quasi_step.
        let t = g2.tower().clone();
        let (g, h) = (lift_to(&g, &t), lift_to(&h, &t));
        if h2.pow(2).sub(&g2.pow(3)) == g.pow(6).mul(&h.pow(2).sub(&g.pow(3))) {
            ok += 1;
        }
    }
    let tower = parse_tower(&[
        "I: minpoly = I^2 + 1".to_string(),
        "c: minpoly = c^3 - 4".to_string(),
        "r3: minpoly = r3^2 - 3".to_string(),
    ])
    .unwrap();
    let r = PolyRing::new(tower, &["x", "y"]);
    let f = parse_poly(&r, "-3*(x^2 + y^2 + 4*x + 1)^2 + 4*(2*x + 1)^3").unwrap();
    let g0 = parse_poly(&r, "-c*(2*x + 1)").unwrap();
    let h0 = parse_poly(&r, "I*r3*(x^2 + y^2 + 4*x + 1)").unwrap();
    let chain = quasi_chain(&f, &g0, &h0, CHAIN_STEPS);
    let (chain_ok, levels) = match &chain {
        Ok(c) => (c.report.passed() && c.levels.len() == CHAIN_STEPS + 1, c.report.checks.len()),
        Err(_) => (false, 0),
    };
    outcome(
        ok == RECURRENCE_SAMPLES && chain_ok,
        format!("{ok}/{RECURRENCE_SAMPLES} one-step identities; chain N={CHAIN_STEPS}: {levels} checks, passed: {chain_ok}"),
    )
}

// ---------------------------------------------------------------------------

/// `dim Q[x, y] / (J + m^n)` by linear algebra on monomials of degree < n.
fn truncated_colength(gens: &[MultiPoly], n: u32) -> usize {
    let monos: Vec<(u32, u32)> = (0..n).flat_map(|d| (0..=d).map(move |i| (i, d - i))).collect();
    let index: BTreeMap<(u32, u32), usize> = monos.iter().enumerate().map(|(k, &m)| (m, k)).collect();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for g in gens {
        for &(a, b) in &monos {
            let mut row = vec![BigRational::zero(); monos.len()];
            for (m, c) in g.terms() {
                let e = (m[0] as u32 + a, m[1] as u32 + b);
                if let Some(&k) = index.get(&e) {
                    row[k] += c.as_rational().expect("rational germ");
                }
            }
            rows.push(row);
        }
    }
    monos.len() - rank(rows)
}

fn rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = BigRational::one() / rows[r][c].clone();
        let pivot: Vec<BigRational> = rows[r].iter().map(|x| x * &inv).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        rows[r] = pivot;
        r += 1;
    }
    r
}

/// Local algebra dimension at the origin: the truncated colengths stabilize
/// exactly when `m^n` lies in `J` locally (Nakayama).
fn brute_force_milnor(g: &MultiPoly) -> usize {
    let gens = [g.derivative(0), g.derivative(1)];
    let mut prev = truncated_colength(&gens, 1);
    for n in 2..40 {
        let cur = truncated_colength(&gens, n);
        if cur == prev {
            return cur;
        }
        prev = cur;
    }
    panic!("colength did not stabilize")
}

fn criterion_5() -> Outcome {
    let ring = PolyRing::new(FieldTower::rationals(), &["x", "y"]);
    let mut germs: Vec<(String, u32)> = (1..=7).map(|n| (format!("x^2 + y^{}", n + 1), n)).collect();
    germs.push(("x^3 + y^4".into(), 6));
    let mut bad = Vec::new();
    for (text, expected) in &germs {
        let g = parse_poly(&ring, text).unwrap();
        let mu = milnor_number_affine(&g).ok();
        let brute = brute_force_milnor(&g);
        if mu != Some(*expected) || brute != *expected as usize {
            bad.push(format!("{text}: resultant {mu:?}, brute force {brute}"));
        }
    }
    outcome(bad.is_empty(), format!("{}/{} germs agree with both methods {bad:?}", germs.len() - bad.len(), germs.len()))
}

// ---------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    // Quartic (1) over Q(t) with inner points [1:0:1], [-1:0:1].
    let k = parse_tower(&["t: transcendental".to_string()]).unwrap();
    let ring = PolyRing::projective(k.clone());
    let q1 = parse_poly(&ring, "(X^2 - Y^2 - Z^2)^2 + t*Y^3*Z").unwrap();
    let inner = [ProjPoint::from_ints(&k, [1, 0, 1]), ProjPoint::from_ints(&k, [-1, 0, 1])];
    let sols = solve_visible_quartic(&q1, &inner, &[]).unwrap_or_default();
    let q1_ok = sols.len() == 1
        && sols[0].conic == parse_poly(&ring, "X^2 - Y^2 - Z^2").unwrap()
        && sols[0].line == parse_poly(&ring, "Y").unwrap()
        && sols[0].realize().is_ok_and(|r| r.verify().passed());

    // Three-cuspidal quartic: the full search against the tau-orbit (V-1)..(V-3).
    let k = parse_tower(&["r3: minpoly = r3^2 - 3".to_string()]).unwrap();
    let ring = PolyRing::projective(k);
    let q5 = parse_poly(&ring, THREE_CUSP).unwrap();
    let search = visible_decompositions(&q5).unwrap_or_default();
    let orbit: Vec<(MultiPoly, MultiPoly)> = ["Q5-V1", "Q5-V2", "Q5-V3"]
        .iter()
        .map(|id| {
            let e = catalog::entry(id).unwrap();
            let c = parse_poly(&ring, e.conic.as_deref().unwrap()).unwrap().normalized();
            let l = parse_poly(&ring, e.line.as_deref().unwrap()).unwrap().normalized();
            (c, l)
        })
        .collect();
    let found: Vec<(MultiPoly, MultiPoly)> = search
        .solutions
        .iter()
        .map(|s| (lift_to(&s.conic, &ring.tower().clone()).normalized(), lift_to(&s.line, &ring.tower().clone()).normalized()))
        .collect();
    let as_set = found.len() == 3 && orbit.iter().all(|o| found.contains(o));
    let realized = search.solutions.iter().all(|s| s.realize().is_ok_and(|r| r.verify().passed()));
    outcome(
        q1_ok && as_set && realized,
        format!(
            "Q1: {} solution(s), matches F2' = s2(X^2-Y^2-Z^2), F1' = s1 Y: {q1_ok}; three-cuspidal: {} solution(s), equal to the tau-orbit: {as_set}, all realize: {realized}",
            sols.len(),
            search.solutions.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let spots: [(u8, &[(&str, i64)], u8); 4] = [
        (1, &[("s", 0), ("t", 0), ("u", 0)], 12),
        (1, &[("s", 0), ("t", 1), ("u", 0)], 11),
        (4, &[("s", 0), ("t", 0)], 10),
        (3, &[("s", 0), ("t", 0)], 9),
    ];
    let mut bad = Vec::new();
    for (fam, values, class) in spots {
        let f = quartic_family(fam).unwrap();
        let ok = degeneration_check(&f, &int_values(values), class).is_ok_and(|(r, c)| r.passed() && c.index == Some(class));
        if !ok {
            bad.push(format!("family {fam} at {values:?}"));
        }
    }
    outcome(bad.is_empty(), format!("{}/4 spot checks; family 2 excluded (best-effort); failing: {bad:?}", 4 - bad.len()))
}

fn criterion_8() -> Outcome {
    let ring = PolyRing::projective(FieldTower::rationals());
    let p = |s: &str| parse_poly(&ring, s).unwrap();
    match build_sextic_family(&p("Y"), &p("X^2 - Y^2 - Z^2"), &p("Y"), &p("Y^2")) {
        Ok(fam) => {
            let c0 = fam.report.get("C(0) = Z^2 G").is_some_and(|c| c.status == Status::Pass);
            let mult = fam.report.get("multiplicity at [0:1:0]").is_some_and(|c| c.status == Status::Pass);
            outcome(c0 && mult && fam.c.degree() == 6, format!("C(0) = Z^2 F: {c0}; multiplicity 2 at [0:1:0] in Q(t): {mult}"))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_9(reports: &[EntryReport]) -> Outcome {
    let k = parse_tower(&["r3: minpoly = r3^2 - 3".to_string()]).unwrap();
    let c = |s: &str| parse_coeff(&k, s).unwrap();
    let m = |rows: [[&str; 3]; 3]| ProjectiveTransform::new(k.clone(), rows.map(|r| r.map(c))).unwrap();
    let sigma = m([["1", "0", "0"], ["0", "-1", "0"], ["0", "0", "1"]]);
    let tau = m([["-1/2", "r3/2", "0"], ["-r3/2", "-1/2", "0"], ["0", "0", "1"]]);
    let ring = PolyRing::projective(k.clone());
    let f = parse_poly(&ring, THREE_CUSP).unwrap();
    let fixed = sigma.apply(&f).is_ok_and(|g| g == f) && tau.apply(&f).is_ok_and(|g| g == f);
    let st = sigma.compose(&tau);
    let relations = sigma.compose(&sigma).is_projective_identity()
        && tau.compose(&tau).compose(&tau).is_projective_identity()
        && st.compose(&st).is_projective_identity()
        && !tau.is_projective_identity();
    let orbit: Vec<_> = reports.iter().flat_map(|r| r.checks.iter()).filter(|c| c.name.contains(" maps to ")).collect();
    let orbit_ok = orbit.len() == 10 && orbit.iter().all(|c| c.status == Status::Pass);
    outcome(
        fixed && relations && orbit_ok,
        format!("sigma, tau fix F: {fixed}; sigma^2 = tau^3 = (sigma tau)^2 = 1: {relations}; orbit maps {}/{} match", orbit.iter().filter(|c| c.status == Status::Pass).count(), orbit.len()),
    )
}
