//! JSON form of [`DseSpec`].

use std::collections::{BTreeMap, HashSet};

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{mellin_truncation, ChargeStructure, DseSpec};
use crate::cocycle::{boring_symbol, compositions, mellin_symbol, MellinMap, MellinSeries};
use crate::error::{Error, Result};
use crate::poly::{parse_rational, Poly, Rational};
use crate::trees::PrimitiveInfo;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    equations: Vec<String>,
    primitives: Vec<RawPrimitive>,
    #[serde(default)]
    charge: Option<RawCharge>,
    order: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrimitive {
    label: String,
    #[serde(default = "one")]
    weight: u32,
    #[serde(default)]
    equation: Option<EquationRef>,
    places: Vec<RawPlace>,
    #[serde(default)]
    mellin: Option<RawMellin>,
}

fn one() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EquationRef {
    Index(usize),
    Id(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawRational {
    Int(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawVector {
    Scalar(RawRational),
    ById(BTreeMap<String, RawRational>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlace {
    name: String,
    mu: RawVector,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMellin {
    #[serde(default)]
    primitive: Option<String>,
    #[serde(default)]
    coeffs: Vec<RawCoeff>,
    #[serde(default)]
    boring: bool,
    #[serde(default)]
    default: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeff {
    alpha: Vec<u32>,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCharge {
    s: RawVector,
    split: Vec<RawSplit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    #[serde(default)]
    primitive: Option<String>,
    place: String,
    u: RawRational,
    w: u32,
}

fn invalid(pointer: String, msg: impl Into<String>) -> Error {
    Error::InvalidSpec {
        pointer,
        msg: msg.into(),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

fn rational(r: &RawRational, ptr: &str) -> Result<Rational> {
    match r {
        RawRational::Int(k) => Ok(Rational::from_integer((*k).into())),
        RawRational::Text(s) => parse_rational(s).map_err(|e| invalid(ptr.to_string(), e.to_string())),
    }
}

fn vector(v: &RawVector, equations: &[String], ptr: &str) -> Result<Vec<Rational>> {
    match v {
        RawVector::Scalar(r) => {
            if equations.len() != 1 {
                return Err(invalid(ptr.to_string(), "a scalar needs exactly one equation"));
            }
            Ok(vec![rational(r, ptr)?])
        }
        RawVector::ById(m) => {
            let mut out = vec![Rational::from_integer(0.into()); equations.len()];
            for (k, r) in m {
                let j = equations
                    .iter()
                    .position(|e| e == k)
                    .ok_or_else(|| invalid(format!("{ptr}/{k}"), "unknown equation id"))?;
                out[j] = rational(r, &format!("{ptr}/{k}"))?;
            }
            Ok(out)
        }
    }
}

fn parse_value(s: &str, ptr: &str) -> Result<Poly> {
    s.parse::<Poly>().map_err(|e| invalid(ptr.to_string(), e.to_string()))
}

pub(super) fn spec_from_json_str(text: &str) -> Result<DseSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| invalid(pointer_of(e.path()), e.inner().to_string()))?;
    build(raw)
}

fn build(raw: RawSpec) -> Result<DseSpec> {
    let eqs = raw.equations;
    let trunc = mellin_truncation(raw.order);
    let mut prims = Vec::new();
    let mut mellin = MellinMap::new();
    for (k, rp) in raw.primitives.iter().enumerate() {
        let ptr = format!("/primitives/{k}");
        let equation = match &rp.equation {
            None if eqs.len() == 1 => 0,
            None => return Err(invalid(format!("{ptr}/equation"), "equation is required for systems")),
            Some(EquationRef::Index(i)) if *i < eqs.len() => *i,
            Some(EquationRef::Index(_)) => {
                return Err(invalid(format!("{ptr}/equation"), "equation index out of range"))
            }
            Some(EquationRef::Id(id)) => eqs
                .iter()
                .position(|e| e == id)
                .ok_or_else(|| invalid(format!("{ptr}/equation"), "unknown equation id"))?,
        };
        let mut places = Vec::new();
        for (j, pl) in rp.places.iter().enumerate() {
            places.push((pl.name.as_str(), vector(&pl.mu, &eqs, &format!("{ptr}/places/{j}/mu"))?));
        }
        let p = PrimitiveInfo::new(&rp.label, rp.weight, equation, places);
        let m = build_mellin(&p, rp.mellin.as_ref(), trunc, &format!("{ptr}/mellin"))?;
        mellin.insert(p.label.clone(), m);
        prims.push(p);
    }
    let charge = match &raw.charge {
        None => None,
        Some(c) => Some(build_charge(c, &eqs, &prims)?),
    };
    DseSpec::new(eqs, prims, mellin, raw.order, charge)
}

fn build_mellin(p: &PrimitiveInfo, raw: Option<&RawMellin>, trunc: u32, ptr: &str) -> Result<MellinSeries> {
    let Some(raw) = raw else {
        return Ok(MellinSeries::symbolic(p, trunc));
    };
    if let Some(label) = &raw.primitive {
        if *label != p.label {
            return Err(invalid(format!("{ptr}/primitive"), "Mellin series names another primitive"));
        }
    }
    let arity = p.places.len();
    let given_max = raw.coeffs.iter().map(|c| c.alpha.iter().sum::<u32>()).max().unwrap_or(0);
    let trunc = trunc.max(given_max);
    let sym = |alpha: &[u32]| {
        if raw.boring {
            Poly::symbol(boring_symbol(&p.label, alpha.iter().sum()))
        } else {
            Poly::symbol(mellin_symbol(&p.label, alpha))
        }
    };
    let default = match raw.default.as_deref() {
        None | Some("sym") => None,
        Some(s) => Some(parse_value(s, &format!("{ptr}/default"))?),
    };
    let mut m = MellinSeries::empty(p, trunc);
    m.boring = raw.boring;
    for n in 0..=trunc {
        for alpha in compositions(arity, n) {
            let c = default.clone().unwrap_or_else(|| sym(&alpha));
            m.set(alpha, c);
        }
    }
    let mut seen = HashSet::new();
    for (j, c) in raw.coeffs.iter().enumerate() {
        let cptr = format!("{ptr}/coeffs/{j}");
        if c.alpha.len() != arity {
            return Err(invalid(format!("{cptr}/alpha"), "alpha length must equal the number of places"));
        }
        if !seen.insert(c.alpha.clone()) {
            return Err(invalid(format!("{cptr}/alpha"), "duplicate alpha"));
        }
        let v = if c.value == "sym" {
            sym(&c.alpha)
        } else {
            parse_value(&c.value, &format!("{cptr}/value"))?
        };
        m.set(c.alpha.clone(), v);
    }
    Ok(m)
}

fn build_charge(c: &RawCharge, eqs: &[String], prims: &[PrimitiveInfo]) -> Result<ChargeStructure> {
    let s = vector(&c.s, eqs, "/charge/s")?;
    let mut split = BTreeMap::new();
    for (j, r) in c.split.iter().enumerate() {
        let ptr = format!("/charge/split/{j}");
        let label = match &r.primitive {
            Some(l) => l.clone(),
            None => {
                let owners: Vec<&PrimitiveInfo> =
                    prims.iter().filter(|p| p.place_index(&r.place).is_some()).collect();
                if owners.len() != 1 {
                    return Err(invalid(format!("{ptr}/place"), "place is ambiguous; name the primitive"));
                }
                owners[0].label.clone()
            }
        };
        let u = rational(&r.u, &format!("{ptr}/u"))?;
        if split.insert((label, r.place.clone()), (u, r.w)).is_some() {
            return Err(invalid(ptr, "duplicate split entry"));
        }
    }
    Ok(ChargeStructure { s, split })
}

fn vector_json(v: &[Rational], eqs: &[String]) -> Value {
    let m: Map<String, Value> = eqs
        .iter()
        .zip(v)
        .map(|(e, r)| (e.clone(), Value::String(r.to_string())))
        .collect();
    Value::Object(m)
}

pub(super) fn spec_to_json(spec: &DseSpec) -> Value {
    let eqs = &spec.equations;
    let prims: Vec<Value> = spec
        .primitives()
        .iter()
        .map(|p| {
            let m = &spec.mellin[&p.label];
            let mut coeffs = Vec::new();
            for (alpha, c) in &m.coeffs {
                let default = if m.boring {
                    boring_symbol(&p.label, alpha.iter().sum())
                } else {
                    mellin_symbol(&p.label, alpha)
                };
                let value = if *c == Poly::symbol(default) {
                    "sym".to_string()
                } else {
                    c.to_string()
                };
                coeffs.push(json!({"alpha": alpha, "value": value}));
            }
            let places: Vec<Value> = p
                .places
                .iter()
                .map(|e| json!({"name": e.name, "mu": vector_json(&e.mu, eqs)}))
                .collect();
            json!({
                "label": p.label,
                "weight": p.weight,
                "equation": eqs[p.equation],
                "places": places,
                "mellin": {
                    "primitive": p.label,
                    "coeffs": coeffs,
                    "boring": m.boring,
                    "default": "0",
                },
            })
        })
        .collect();
    let mut out = json!({
        "equations": eqs,
        "primitives": prims,
        "order": spec.order,
    });
    if let Some(c) = &spec.charge {
        let split: Vec<Value> = c
            .split
            .iter()
            .map(|((p, e), (u, w))| json!({"primitive": p, "place": e, "u": u.to_string(), "w": w}))
            .collect();
        out["charge"] = json!({"s": vector_json(&c.s, eqs), "split": split});
    }
    out
}
