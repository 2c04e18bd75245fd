//! Command implementations behind the `tubedse` binary.
//!
//! Every command returns an [`Outcome`]; rendering is deterministic so equal
//! arguments give byte-identical output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use tubedse::cocycle::{
    cocycle_identity_check, compositions, phi_recursive, place_symbols, MellinMap, MellinSeries,
};
use tubedse::dse::{self, DseSpec};
use tubedse::hopf::{check_cocycle, rio_coproduct_check, ForestLC};
use tubedse::trees::{enumerate_trees, trees_by_weight, Alphabet, Forest, PrimitiveInfo, Tree};
use tubedse::tubings::{phi_tubing, tubings_json};
use tubedse::{Error, Monomial, Poly, Rational, Symbol, XSeries};

/// Values drawn by `--bind-random`.
pub const RANDOM_POOL: [(i64, i64); 10] =
    [(-9, 7), (-2, 1), (-1, 1), (-1, 2), (1, 3), (1, 2), (1, 1), (3, 2), (2, 1), (5, 3)];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Engine(Error::InvalidSpec { .. }) => "invalid-spec",
            CliError::Engine(Error::Parse { .. }) => "parse",
            CliError::Engine(Error::MissingCharge)
            | CliError::Engine(Error::MultiPlaceGamma(_))
            | CliError::Engine(Error::NotQuasiLinear(_)) => "configuration",
            CliError::Engine(_) => "engine",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "configuration",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({"kind": self.kind(), "message": self.to_string()});
        if let CliError::Engine(Error::InvalidSpec { pointer, .. }) = self {
            v["pointer"] = json!(pointer);
        }
        json!({ "error": v })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// How Mellin coefficients are bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Binding {
    #[default]
    Symbolic,
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiMethod {
    Tubing,
    Recursive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Oracle,
    Tubing,
    Recursive,
    Combinatorial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Rge,
    Gamma,
    Rio,
    Cocycle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub success: bool,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Outcome {
        Outcome {
            json,
            text,
            success: true,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Text => self.text.clone(),
        }
    }
}

/// Spec source: a file path or inline JSON.
#[derive(Clone, Debug)]
pub enum SpecSource {
    Path(String),
    Inline(String),
}

pub fn load_spec(src: &SpecSource, order: Option<usize>, binding: Binding) -> CliResult<DseSpec> {
    let text = match src {
        SpecSource::Inline(s) => s.clone(),
        SpecSource::Path(p) => std::fs::read_to_string(p).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        })?,
    };
    let text = match order {
        Some(n) => {
            // Mellin defaults are materialized to the requested order
            let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidSpec {
                pointer: String::new(),
                msg: e.to_string(),
            })?;
            if let Some(obj) = v.as_object_mut() {
                obj.insert("order".into(), json!(n));
            }
            v.to_string()
        }
        None => text,
    };
    let mut spec = DseSpec::from_json_str(&text)?;
    bind(&mut spec.mellin, binding)?;
    Ok(spec)
}

/// Replaces every Mellin symbol by a seeded draw from [`RANDOM_POOL`].
pub fn bind(mellin: &mut MellinMap, binding: Binding) -> CliResult<()> {
    let Binding::Random(seed) = binding else {
        return Ok(());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: BTreeMap<Symbol, Poly> = BTreeMap::new();
    for m in mellin.values_mut() {
        let keys: Vec<Vec<u32>> = m.coeffs.keys().cloned().collect();
        for alpha in keys {
            let c = m.coeffs[&alpha].clone();
            for s in c.symbols() {
                values.entry(s).or_insert_with(|| {
                    let (n, d) = *RANDOM_POOL.choose(&mut rng).expect("nonempty pool");
                    Poly::constant(Rational::new(n.into(), d.into()))
                });
            }
            m.set(alpha, c.substitute(&values)?);
        }
    }
    Ok(())
}

/// Alphabet read off a tree: one primitive per label with the places seen
/// under it, or the single place `e` for labels that only occur as leaves.
pub fn infer_alphabet(t: &Tree) -> CliResult<Alphabet> {
    fn walk(t: &Tree, acc: &mut BTreeMap<String, BTreeSet<String>>) {
        let entry = acc.entry(t.label().to_string()).or_default();
        for (e, _) in t.children() {
            entry.insert(e.to_string());
        }
        for (_, c) in t.children() {
            walk(c, acc);
        }
    }
    let mut acc = BTreeMap::new();
    walk(t, &mut acc);
    for places in acc.values_mut() {
        if places.is_empty() {
            places.insert("e".to_string());
        }
    }
    let prims = acc
        .iter()
        .map(|(label, places)| {
            let places = places
                .iter()
                .map(|e| (e.as_str(), vec![Rational::from_integer(1.into())]))
                .collect();
            PrimitiveInfo::new(label, 1, 0, places)
        })
        .collect();
    Ok(Alphabet::new(prims)?)
}

fn tree_context(
    tree: &str,
    spec: Option<&SpecSource>,
    binding: Binding,
) -> CliResult<(Tree, Alphabet, MellinMap)> {
    match spec {
        Some(src) => {
            let mut spec = load_spec(src, None, binding)?;
            let t = Tree::parse(tree, Some(&spec.alphabet))?;
            if t.size() > spec.order {
                spec = load_spec(src, Some(t.size()), binding)?;
            }
            Ok((t, spec.alphabet, spec.mellin))
        }
        None => {
            let t = Tree::parse(tree, None)?;
            let alphabet = infer_alphabet(&t)?;
            let trunc = t.size().saturating_sub(1) as u32;
            let mut mellin: MellinMap = alphabet
                .primitives()
                .iter()
                .map(|p| (p.label.clone(), MellinSeries::symbolic(p, trunc)))
                .collect();
            bind(&mut mellin, binding)?;
            Ok((t, alphabet, mellin))
        }
    }
}

fn series_text(out: &mut String, name: &str, s: &XSeries<Poly>) {
    for (n, c) in s.coeffs().iter().enumerate() {
        let _ = writeln!(out, "{name}[x^{n}] = {c}");
    }
}

fn series_map(spec: &DseSpec, series: &[XSeries<Poly>]) -> Value {
    let m: serde_json::Map<String, Value> = spec
        .equations
        .iter()
        .zip(series)
        .map(|(e, s)| (e.clone(), s.to_json()))
        .collect();
    Value::Object(m)
}

pub fn cmd_trees(spec: &DseSpec) -> CliResult<Outcome> {
    let mut items = Vec::new();
    let mut text = String::new();
    for (i, w, t, c) in dse::weighted_trees(spec)? {
        let _ = writeln!(text, "{}\t{}\t{}\t{}", spec.equations[i], w, c, t);
        items.push(json!({
            "equation": spec.equations[i],
            "weight": w,
            "coefficient": c.to_string(),
            "tree": t.to_string(),
            "aut": t.aut_order().to_string(),
        }));
    }
    let all: usize = trees_by_weight(&spec.alphabet, spec.order as u32).iter().map(Vec::len).sum();
    Ok(Outcome::ok(
        json!({"order": spec.order, "enumerated": all, "trees": items}),
        text,
    ))
}

pub fn cmd_tubings(
    tree: &str,
    spec: Option<&SpecSource>,
    binding: Binding,
    emit_tubes: bool,
    stats: bool,
) -> CliResult<Outcome> {
    let (t, alphabet, mellin) = tree_context(tree, spec, binding)?;
    let mut v = tubings_json(&t, &alphabet, Some(&mellin), emit_tubes)?;
    let mut text = format!("{}\ncount = {}\n", t, v["count"]);
    for item in v["tubings"].as_array().into_iter().flatten() {
        let _ = writeln!(text, "b = {}\troots = {}\tmel = {}", item["b"], item["rootTypeSeq"], item["mel"]);
    }
    if stats {
        let mut by_b: BTreeMap<u64, u64> = BTreeMap::new();
        for item in v["tubings"].as_array().into_iter().flatten() {
            *by_b.entry(item["b"].as_u64().unwrap_or(0)).or_default() += 1;
        }
        let hist: serde_json::Map<String, Value> =
            by_b.iter().map(|(b, n)| (b.to_string(), json!(n))).collect();
        let _ = writeln!(text, "by b: {}", Value::Object(hist.clone()));
        v["stats"] = json!({ "byB": hist, "vertices": t.size() });
    }
    Ok(Outcome::ok(v, text))
}

pub fn cmd_phi(tree: &str, spec: Option<&SpecSource>, binding: Binding, method: PhiMethod) -> CliResult<Outcome> {
    let (t, alphabet, mellin) = tree_context(tree, spec, binding)?;
    let phi = match method {
        PhiMethod::Tubing => phi_tubing(&t, &alphabet, &mellin)?,
        PhiMethod::Recursive => phi_recursive(&t, &alphabet, &mellin)?,
    };
    Ok(Outcome::ok(
        json!({"tree": t.to_string(), "phi": phi.to_string(), "terms": phi.to_json()}),
        format!("{phi}\n"),
    ))
}

pub fn cmd_solve(spec: &DseSpec, method: SolveMethod) -> CliResult<Outcome> {
    let series = match method {
        SolveMethod::Oracle => dse::solve_analytic_oracle(spec)?,
        SolveMethod::Tubing => dse::solve_analytic_tubing(spec)?,
        SolveMethod::Recursive => dse::solve_analytic_recursive(spec)?,
        SolveMethod::Combinatorial => {
            let t = dse::solve_combinatorial_closed(spec)?;
            let mut text = String::new();
            let mut m = serde_json::Map::new();
            for (e, s) in spec.equations.iter().zip(&t) {
                let coeffs: Vec<Value> = s.coeffs().iter().map(ForestLC::to_json).collect();
                for (n, c) in s.coeffs().iter().enumerate() {
                    let terms: Vec<String> = c.terms().map(|(f, k)| format!("({k}) {f}")).collect();
                    let _ = writeln!(text, "{e}[x^{n}] = {}", terms.join(" + "));
                }
                m.insert(e.clone(), Value::Array(coeffs));
            }
            return Ok(Outcome::ok(
                json!({"method": "combinatorial", "order": spec.order, "series": m}),
                text,
            ));
        }
    };
    let mut text = String::new();
    for (e, s) in spec.equations.iter().zip(&series) {
        series_text(&mut text, e, s);
    }
    let name = match method {
        SolveMethod::Oracle => "oracle",
        SolveMethod::Tubing => "tubing",
        SolveMethod::Recursive => "recursive",
        SolveMethod::Combinatorial => unreachable!(),
    };
    Ok(Outcome::ok(
        json!({"method": name, "order": spec.order, "series": series_map(spec, &series)}),
        text,
    ))
}

fn residual_outcome(name: &str, spec: &DseSpec, residuals: &[XSeries<Poly>]) -> Outcome {
    let pass = residuals.iter().all(XSeries::is_zero);
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut text = format!("{name}: {verdict}\n");
    for (e, r) in spec.equations.iter().zip(residuals) {
        let shown = if r.is_zero() { "0".to_string() } else { r.to_string() };
        let _ = writeln!(text, "{e}: {shown}");
    }
    let res: serde_json::Map<String, Value> = spec
        .equations
        .iter()
        .zip(residuals)
        .map(|(e, r)| {
            let v = if r.is_zero() { json!("0") } else { r.to_json() };
            (e.clone(), v)
        })
        .collect();
    Outcome {
        json: json!({"check": name, "pass": pass, "residuals": res}),
        text,
        success: pass,
    }
}

pub fn cmd_check(spec: &DseSpec, which: Check) -> CliResult<Outcome> {
    match which {
        Check::Rge => {
            if spec.charge.is_none() {
                return Err(CliError::Config("the rge check needs a charge structure".into()));
            }
            let g = dse::solve_analytic_tubing(spec)?;
            let gb = dse::extract_gamma_beta(&g, spec);
            let r = dse::check_rge(&g, &gb, spec)?;
            Ok(residual_outcome("rge", spec, &r))
        }
        Check::Gamma => {
            let g = dse::solve_analytic_tubing(spec)?;
            let single_place = spec.primitives().iter().all(|p| p.places.len() == 1);
            if spec.charge.is_some() && single_place {
                let r = dse::check_gamma_equation(spec, &g)?;
                Ok(residual_outcome("gamma", spec, &r))
            } else {
                let r = dse::check_gamma_functional(spec, &g)?;
                Ok(residual_outcome("gamma-functional", spec, &r))
            }
        }
        Check::Rio => {
            if spec.charge.is_none() {
                return Err(CliError::Config("the rio check needs a charge structure".into()));
            }
            let n = spec.order.min(4);
            let pass = rio_coproduct_check(spec, n)?;
            Ok(Outcome {
                json: json!({"check": "rio", "pass": pass, "upTo": n}),
                text: format!("rio: {} (orders <= {n})\n", if pass { "PASS" } else { "FAIL" }),
                success: pass,
            })
        }
        Check::Cocycle => cocycle_check(spec),
    }
}

fn cocycle_check(spec: &DseSpec) -> CliResult<Outcome> {
    let max_deg = spec.order.min(4) as u32;
    let small: Vec<Forest> = std::iter::once(Forest::empty())
        .chain(enumerate_trees(&spec.alphabet, 2, None).into_iter().map(Forest::single))
        .collect();
    let mut results = serde_json::Map::new();
    let mut text = String::new();
    let mut all = true;
    for p in spec.primitives() {
        let m = &spec.mellin[&p.label];
        let vars = place_symbols(p);
        let mut analytic = 0usize;
        let mut analytic_ok = true;
        for deg in 0..=max_deg.min(m.truncation) {
            for alpha in compositions(vars.len(), deg) {
                let mono = Monomial::from_factors(vars.iter().cloned().zip(alpha.iter().copied()));
                analytic += 1;
                analytic_ok &= cocycle_identity_check(p, m, &Poly::one().mul_monomial(&mono))?;
            }
        }
        let mut combinatorial = 0usize;
        let mut combinatorial_ok = true;
        let arity = p.places.len();
        let mut idx = vec![0usize; arity];
        loop {
            let args: Vec<ForestLC> = idx.iter().map(|&k| ForestLC::from_forest(small[k].clone())).collect();
            combinatorial += 1;
            combinatorial_ok &= check_cocycle(p, &args)?;
            let mut k = 0;
            while k < arity {
                idx[k] += 1;
                if idx[k] < small.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == arity {
                break;
            }
        }
        all &= analytic_ok && combinatorial_ok;
        let _ = writeln!(
            text,
            "{}: analytic {} ({analytic} monomials), combinatorial {} ({combinatorial} argument tuples)",
            p.label,
            if analytic_ok { "PASS" } else { "FAIL" },
            if combinatorial_ok { "PASS" } else { "FAIL" },
        );
        results.insert(
            p.label.clone(),
            json!({
                "analytic": {"pass": analytic_ok, "cases": analytic},
                "combinatorial": {"pass": combinatorial_ok, "cases": combinatorial},
            }),
        );
    }
    text.insert_str(0, &format!("cocycle: {}\n", if all { "PASS" } else { "FAIL" }));
    Ok(Outcome {
        json: json!({"check": "cocycle", "pass": all, "primitives": results}),
        text,
        success: all,
    })
}

pub fn cmd_quasilinear(spec: &DseSpec) -> CliResult<Outcome> {
    let reduced = dse::quasilinear_reduce(spec)?;
    let original = dse::solve_analytic_oracle(spec)?;
    let simplified = dse::solve_analytic_oracle(&reduced)?;
    let agree = original == simplified;
    let mut text = format!("solutions agree: {agree}\n");
    for p in reduced.primitives() {
        let m = &reduced.mellin[&p.label];
        for (alpha, c) in &m.coeffs {
            let _ = writeln!(text, "{}[{}] = {c}", p.label, alpha[0]);
        }
    }
    Ok(Outcome {
        json: json!({"reduced": reduced.to_json(), "agree": agree, "order": spec.order}),
        text,
        success: agree,
    })
}

pub fn cmd_counterexample(order: usize) -> CliResult<Outcome> {
    let r = dse::counterexample_report(order)?;
    let mut text = String::new();
    series_text(&mut text, "hatG", &r.hat_g);
    series_text(&mut text, "G", &r.g);
    for o in &r.outcomes {
        match o {
            dse::OrderOutcome::Solved { order, symbol, value } => {
                let _ = writeln!(text, "x^{order}: {} = {value}", symbol.name());
            }
            dse::OrderOutcome::Obstructed { order, residual } => {
                let _ = writeln!(text, "x^{order}: obstructed");
                let _ = writeln!(text, "residual = {residual}");
            }
        }
    }
    let flag = |b: bool| if b { "match" } else { "MISMATCH" };
    let _ = writeln!(
        text,
        "reference: hatG {}, G {}, substitutions {}, residual {}",
        flag(r.hat_g_matches),
        flag(r.g_matches),
        flag(r.substitutions_match),
        flag(r.residual_matches)
    );
    Ok(Outcome {
        json: r.to_json(),
        text,
        success: r.all_match(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"{"equations":["G"],"order":4,
        "primitives":[{"label":"p","places":[{"name":"e","mu":1}]}],
        "charge":{"s":{"G":0},"split":[{"place":"e","u":1,"w":1}]}}"#;

    fn linear(order: Option<usize>, binding: Binding) -> DseSpec {
        load_spec(&SpecSource::Inline(LINEAR.into()), order, binding).unwrap()
    }

    #[test]
    fn random_binding_is_seeded() {
        let a = linear(None, Binding::Random(7));
        let b = linear(None, Binding::Random(7));
        assert_eq!(a, b);
        for m in a.mellin.values() {
            for c in m.coeffs.values() {
                assert!(c.as_constant().is_some());
            }
        }
        let c = linear(None, Binding::Random(8));
        assert_ne!(a.mellin, c.mellin);
    }

    #[test]
    fn order_override_extends_symbols() {
        let s = linear(Some(6), Binding::Symbolic);
        assert_eq!(s.order, 6);
        assert_eq!(s.mellin["p"].truncation, 5);
        assert_eq!(s, DseSpec::from_json_str(&LINEAR.replace("\"order\":4", "\"order\":6")).unwrap());
    }

    #[test]
    fn inferred_alphabet() {
        let t = Tree::parse("p(a: q, b: p)", None).unwrap();
        let alpha = infer_alphabet(&t).unwrap();
        assert_eq!(alpha.get("p").unwrap().places.len(), 2);
        assert_eq!(alpha.get("q").unwrap().place_names().collect::<Vec<_>>(), ["e"]);
    }

    #[test]
    fn linear_rge_passes() {
        let out = cmd_check(&linear(None, Binding::Symbolic), Check::Rge).unwrap();
        assert!(out.success);
        assert_eq!(out.json["residuals"]["G"], json!("0"));
    }

    #[test]
    fn rge_without_charge_is_a_configuration_error() {
        let text = r#"{"equations":["G"],"order":3,"primitives":[{"label":"p","places":[{"name":"e","mu":1}]}]}"#;
        let spec = load_spec(&SpecSource::Inline(text.into()), None, Binding::Symbolic).unwrap();
        let err = cmd_check(&spec, Check::Rge).unwrap_err();
        assert_eq!(err.kind(), "configuration");
    }
}
