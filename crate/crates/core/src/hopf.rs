//! The Hopf algebra of decorated forests: coproduct, grafting and the
//! cocycle property of the grafting operators.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde_json::{json, Value};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poly::{Poly, Rational};
use crate::series::{Coefficient, XSeries};
use crate::trees::{Forest, PrimitiveInfo, Tree};

fn add_into<K: Ord>(map: &mut BTreeMap<K, Poly>, k: K, c: &Poly) {
    if c.is_zero() {
        return;
    }
    match map.entry(k) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c.clone());
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// Linear combination of forests with polynomial coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForestLC {
    terms: BTreeMap<Forest, Poly>,
}

impl ForestLC {
    pub fn zero() -> Self {
        ForestLC::default()
    }

    pub fn one() -> Self {
        ForestLC::from_forest(Forest::empty())
    }

    pub fn from_forest(f: Forest) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(f, Poly::one());
        ForestLC { terms }
    }

    pub fn from_tree(t: Tree) -> Self {
        ForestLC::from_forest(Forest::single(t))
    }

    pub fn add_term(&mut self, f: Forest, c: &Poly) {
        add_into(&mut self.terms, f, c);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Forest, &Poly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, f: &Forest) -> Poly {
        self.terms.get(f).cloned().unwrap_or_default()
    }

    /// Coefficient of the empty forest.
    pub fn counit(&self) -> Poly {
        self.coefficient(&Forest::empty())
    }

    pub fn scale_poly(&self, c: &Poly) -> ForestLC {
        let mut out = ForestLC::zero();
        for (f, k) in &self.terms {
            out.add_term(f.clone(), &(k * c));
        }
        out
    }

    /// Applies a linear map on forests, extended linearly.
    pub fn map_linear(&self, f: impl Fn(&Forest) -> Poly) -> Poly {
        let mut acc = Poly::zero();
        for (forest, c) in &self.terms {
            acc += &(c * &f(forest));
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(f, c)| json!({"forest": f.to_string(), "coeff": c.to_string()}))
                .collect(),
        )
    }
}

impl Coefficient for ForestLC {
    fn zero() -> Self {
        ForestLC::zero()
    }
    fn one() -> Self {
        ForestLC::one()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.counit().is_one()
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (f, c) in &other.terms {
            out.add_term(f.clone(), c);
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = ForestLC::zero();
        for (f, c) in &self.terms {
            for (g, d) in &other.terms {
                out.add_term(f.union(g), &(c * d));
            }
        }
        out
    }
    fn scale(&self, c: &Rational) -> Self {
        ForestLC {
            terms: if c.is_zero() {
                BTreeMap::new()
            } else {
                self.terms.iter().map(|(f, k)| (f.clone(), k.scale(c))).collect()
            },
        }
    }
}

/// Elements of the tensor square, legs ordered `left ⊗ right`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TensorLC {
    terms: BTreeMap<(Forest, Forest), Poly>,
}

impl TensorLC {
    pub fn zero() -> Self {
        TensorLC::default()
    }

    pub fn add_term(&mut self, left: Forest, right: Forest, c: &Poly) {
        add_into(&mut self.terms, (left, right), c);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Forest, Forest), &Poly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `a ⊗ b`, bilinearly.
    pub fn tensor(a: &ForestLC, b: &ForestLC) -> TensorLC {
        let mut out = TensorLC::zero();
        for (f, c) in a.terms() {
            for (g, d) in b.terms() {
                out.add_term(f.clone(), g.clone(), &(c * d));
            }
        }
        out
    }

    pub fn add(&self, other: &TensorLC) -> TensorLC {
        let mut out = self.clone();
        for ((l, r), c) in &other.terms {
            out.add_term(l.clone(), r.clone(), c);
        }
        out
    }

    /// Legwise product.
    pub fn mul(&self, other: &TensorLC) -> TensorLC {
        let mut out = TensorLC::zero();
        for ((l1, r1), c1) in &self.terms {
            for ((l2, r2), c2) in &other.terms {
                out.add_term(l1.union(l2), r1.union(r2), &(c1 * c2));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|((l, r), c)| {
                    json!({"left": l.to_string(), "right": r.to_string(), "coeff": c.to_string()})
                })
                .collect(),
        )
    }
}

/// Left coaction values: `left ⊗ (right_e)_e`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoactionLC {
    terms: BTreeMap<(Forest, Vec<Forest>), Poly>,
}

impl CoactionLC {
    pub fn terms(&self) -> impl Iterator<Item = (&(Forest, Vec<Forest>), &Poly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|((l, r), c)| {
                    json!({
                        "left": l.to_string(),
                        "right": r.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                        "coeff": c.to_string(),
                    })
                })
                .collect(),
        )
    }
}

/// `Δ(F) = Σ_D D ⊗ (F \ D)` over downsets `D`, extended linearly.
pub fn coproduct(f: &ForestLC) -> TensorLC {
    let mut out = TensorLC::zero();
    for (forest, c) in f.terms() {
        for (d, rest) in forest.downset_splits() {
            out.add_term(d, rest, c);
        }
    }
    out
}

/// Grafts the components of `args[k]` under a new `p`-root along place `k`.
pub fn graft(p: &PrimitiveInfo, args: &[Forest]) -> Result<Tree> {
    if args.len() != p.places.len() {
        return Err(Error::Arity {
            expected: p.places.len(),
            got: args.len(),
        });
    }
    let mut children = Vec::new();
    for (e, f) in p.places.iter().zip(args) {
        let e: Arc<str> = Arc::from(e.name.as_str());
        children.extend(f.trees().iter().map(|t| (e.clone(), t.clone())));
    }
    Ok(Tree::new(&p.label, children))
}

/// Multilinear extension of [`graft`].
pub fn b_plus(p: &PrimitiveInfo, args: &[ForestLC]) -> Result<ForestLC> {
    if args.len() != p.places.len() {
        return Err(Error::Arity {
            expected: p.places.len(),
            got: args.len(),
        });
    }
    let mut out = ForestLC::zero();
    for (forests, c) in expand_tuple(args) {
        out.add_term(Forest::single(graft(p, &forests)?), &c);
    }
    Ok(out)
}

/// All term tuples of a tensor product of linear combinations.
fn expand_tuple(args: &[ForestLC]) -> Vec<(Vec<Forest>, Poly)> {
    let mut acc = vec![(Vec::new(), Poly::one())];
    for a in args {
        let mut next = Vec::with_capacity(acc.len() * a.len());
        for (fs, c) in &acc {
            for (f, d) in a.terms() {
                let mut fs2 = fs.clone();
                fs2.push(f.clone());
                next.push((fs2, c * d));
            }
        }
        acc = next;
    }
    acc
}

/// `δ(f_1 ⊗ … ⊗ f_r)`: product of the left legs, right legs kept per factor.
pub fn coaction(args: &[ForestLC]) -> CoactionLC {
    let mut acc: BTreeMap<(Forest, Vec<Forest>), Poly> = BTreeMap::new();
    acc.insert((Forest::empty(), Vec::new()), Poly::one());
    for a in args {
        let delta = coproduct(a);
        let mut next = BTreeMap::new();
        for ((l, rs), c) in &acc {
            for ((dl, dr), d) in delta.terms() {
                let mut rs2 = rs.clone();
                rs2.push(dr.clone());
                add_into(&mut next, (l.union(dl), rs2), &(c * d));
            }
        }
        acc = next;
    }
    CoactionLC { terms: acc }
}

/// Both sides of `Δ B̃₊(args) = B̃₊(args) ⊗ 1 + (id ⊗ B̃₊) δ(args)`.
pub fn cocycle_sides(p: &PrimitiveInfo, args: &[ForestLC]) -> Result<(TensorLC, TensorLC)> {
    let grafted = b_plus(p, args)?;
    let lhs = coproduct(&grafted);
    let mut rhs = TensorLC::tensor(&grafted, &ForestLC::one());
    for ((l, rs), c) in coaction(args).terms() {
        rhs.add_term(l.clone(), Forest::single(graft(p, rs)?), c);
    }
    Ok((lhs, rhs))
}

pub fn check_cocycle(p: &PrimitiveInfo, args: &[ForestLC]) -> Result<bool> {
    let (lhs, rhs) = cocycle_sides(p, args)?;
    Ok(lhs == rhs)
}

type Triple = BTreeMap<(Forest, Forest, Forest), Poly>;

/// `(Δ ⊗ id)Δ(f) == (id ⊗ Δ)Δ(f)`.
pub fn coassociativity_holds(f: &Forest) -> bool {
    let mut left: Triple = BTreeMap::new();
    let mut right: Triple = BTreeMap::new();
    for (a, b) in f.downset_splits() {
        for (a1, a2) in a.downset_splits() {
            add_into(&mut left, (a1, a2, b.clone()), &Poly::one());
        }
        for (b1, b2) in b.downset_splits() {
            add_into(&mut right, (a.clone(), b1, b2), &Poly::one());
        }
    }
    left == right
}

/// `(ε ⊗ id)Δ(f) == f == (id ⊗ ε)Δ(f)`.
pub fn counit_holds(f: &Forest) -> bool {
    let delta = coproduct(&ForestLC::from_forest(f.clone()));
    let mut left = ForestLC::zero();
    let mut right = ForestLC::zero();
    for ((l, r), c) in delta.terms() {
        if l.is_empty() {
            left.add_term(r.clone(), c);
        }
        if r.is_empty() {
            right.add_term(l.clone(), c);
        }
    }
    let id = ForestLC::from_forest(f.clone());
    left == id && right == id
}

/// Checks `Δ([x^n]T) = Σ_{j≤n} [x^n](T Q^j) ⊗ [x^j]T` for a tree series `T`
/// and charge `Q`, both truncated at `n` or beyond.
pub fn rio_identity(t: &XSeries<ForestLC>, q: &XSeries<ForestLC>, n: usize) -> Result<bool> {
    let t = t.truncate(n);
    let q = q.truncate(n);
    let lhs = coproduct(t.coeff(n));
    let mut rhs = TensorLC::zero();
    let mut qj = XSeries::one(n);
    for j in 0..=n {
        let tq = t.mul(&qj)?;
        rhs = rhs.add(&TensorLC::tensor(tq.coeff(n), t.coeff(j)));
        qj = qj.mul(&q)?;
    }
    Ok(lhs == rhs)
}

/// The Riordan coproduct identity for equation `i` of a spec with an
/// invariant charge, for every order up to `n`.
pub fn rio_coproduct_check(spec: &crate::dse::DseSpec, n: usize) -> Result<bool> {
    let charge = crate::dse::invariant_charge(spec)?;
    let trees = crate::dse::solve_combinatorial_closed(spec)?;
    if n > spec.order {
        return Err(Error::InvalidCharge(format!(
            "order {n} exceeds the spec truncation {}",
            spec.order
        )));
    }
    for series in &trees {
        for m in 0..=n {
            if !rio_identity(series, &charge.q, m)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
