//! Decorated rooted trees and forests.
//!
//! Every vertex carries a primitive label `p`; the edge from a `p`-vertex to
//! each of its children carries an insertion place of `p`. Trees are kept in
//! canonical form (children sorted by place, then canonical code), so equality,
//! ordering and hashing all go through the canonical code.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::poly::{factorial, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaceInfo {
    pub name: String,
    /// Exponent `mu_e`, one entry per equation index.
    pub mu: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimitiveInfo {
    pub label: String,
    pub weight: u32,
    /// Position of `i(p)` in the equation list.
    pub equation: usize,
    pub places: Vec<PlaceInfo>,
}

impl PrimitiveInfo {
    pub fn new(label: &str, weight: u32, equation: usize, places: Vec<(&str, Vec<Rational>)>) -> Self {
        PrimitiveInfo {
            label: label.to_string(),
            weight,
            equation,
            places: places
                .into_iter()
                .map(|(name, mu)| PlaceInfo {
                    name: name.to_string(),
                    mu,
                })
                .collect(),
        }
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|e| e.name == name)
    }

    pub fn place_names(&self) -> impl Iterator<Item = &str> {
        self.places.iter().map(|e| e.name.as_str())
    }
}

/// Labels and places must be nonempty identifiers so canonical codes stay unambiguous.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_')
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    prims: Vec<PrimitiveInfo>,
    index: BTreeMap<String, usize>,
}

impl Alphabet {
    pub fn new(prims: Vec<PrimitiveInfo>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, p) in prims.iter().enumerate() {
            let bad = |msg: String| Error::InvalidSpec {
                pointer: format!("/primitives/{k}"),
                msg,
            };
            if !is_identifier(&p.label) {
                return Err(bad(format!("label `{}` is not an identifier", p.label)));
            }
            if p.weight == 0 {
                return Err(bad("weight must be at least 1".into()));
            }
            if p.places.is_empty() {
                return Err(bad("a primitive needs at least one place".into()));
            }
            for (j, e) in p.places.iter().enumerate() {
                if !is_identifier(&e.name) {
                    return Err(bad(format!("place `{}` is not an identifier", e.name)));
                }
                if p.places[..j].iter().any(|f| f.name == e.name) {
                    return Err(bad(format!("duplicate place `{}`", e.name)));
                }
            }
            if index.insert(p.label.clone(), k).is_some() {
                return Err(bad(format!("duplicate label `{}`", p.label)));
            }
        }
        Ok(Alphabet { prims, index })
    }

    pub fn primitives(&self) -> &[PrimitiveInfo] {
        &self.prims
    }

    pub fn get(&self, label: &str) -> Result<&PrimitiveInfo> {
        self.index
            .get(label)
            .map(|&k| &self.prims[k])
            .ok_or_else(|| Error::UnknownPrimitive(label.to_string()))
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

#[derive(Clone)]
pub struct Tree {
    label: Arc<str>,
    children: Vec<(Arc<str>, Tree)>,
    code: Arc<str>,
    size: usize,
}

impl Tree {
    pub fn leaf(label: &str) -> Tree {
        Tree::new(label, Vec::new())
    }

    /// Grafts the given `(place, child)` pairs under a new root.
    pub fn new(label: &str, children: Vec<(Arc<str>, Tree)>) -> Tree {
        Tree::from_parts(Arc::from(label), children)
    }

    fn from_parts(label: Arc<str>, mut children: Vec<(Arc<str>, Tree)>) -> Tree {
        children.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.code.cmp(&b.1.code)));
        let mut code = String::with_capacity(8 * (children.len() + 1));
        code.push_str(&label);
        code.push('[');
        for (i, (e, c)) in children.iter().enumerate() {
            if i > 0 {
                code.push(',');
            }
            code.push_str(e);
            code.push(':');
            code.push_str(&c.code);
        }
        code.push(']');
        let size = 1 + children.iter().map(|(_, c)| c.size).sum::<usize>();
        Tree {
            label,
            children,
            code: Arc::from(code),
            size,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children(&self) -> &[(Arc<str>, Tree)] {
        &self.children
    }

    /// Canonical code: `p[e:code,...]`, children sorted by place then code.
    pub fn code(&self) -> &str {
        &self.code
    }

    /// Number of vertices.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn weight(&self, alphabet: &Alphabet) -> Result<u32> {
        let mut w = alphabet.get(&self.label)?.weight;
        for (_, c) in &self.children {
            w += c.weight(alphabet)?;
        }
        Ok(w)
    }

    /// Children attached at place `e`, as a forest.
    pub fn children_at(&self, e: &str) -> Forest {
        Forest::from_trees(
            self.children
                .iter()
                .filter(|(f, _)| &**f == e)
                .map(|(_, c)| c.clone())
                .collect(),
        )
    }

    /// Number of automorphisms preserving labels and edge places.
    pub fn aut_order(&self) -> BigInt {
        let mut acc = BigInt::one();
        let mut i = 0;
        while i < self.children.len() {
            let mut j = i + 1;
            while j < self.children.len() && self.children[j] == self.children[i] {
                j += 1;
            }
            acc *= factorial((j - i) as u32);
            i = j;
        }
        for (_, c) in &self.children {
            acc *= c.aut_order();
        }
        acc
    }

    /// `prod_v |t_v|`.
    pub fn tree_factorial(&self) -> BigInt {
        let mut acc = BigInt::from(self.size);
        for (_, c) in &self.children {
            acc *= c.tree_factorial();
        }
        acc
    }

    /// Number of linear extensions; explicit enumeration up to 9 vertices,
    /// the hook-length formula `|t|! / prod_v |t_v|` beyond.
    pub fn linear_extension_count(&self) -> BigInt {
        if self.size <= 9 {
            self.flatten().count_linear_extensions()
        } else {
            factorial(self.size as u32) / self.tree_factorial()
        }
    }

    pub fn flatten(&self) -> FlatTree {
        let mut flat = FlatTree::default();
        fn go(t: &Tree, parent: Option<usize>, place: Option<Arc<str>>, flat: &mut FlatTree) {
            let v = flat.label.len();
            flat.label.push(t.label.clone());
            flat.parent.push(parent);
            flat.place.push(place);
            flat.children.push(Vec::new());
            if let Some(p) = parent {
                flat.children[p].push(v);
            }
            for (e, c) in &t.children {
                go(c, Some(v), Some(e.clone()), flat);
            }
        }
        go(self, None, None, &mut flat);
        flat
    }

    /// All `(lower forest, upper part)` pairs over downsets of this tree.
    /// The upper part is `None` when the downset is the whole tree.
    pub fn downset_splits(&self) -> Vec<(Forest, Option<Tree>)> {
        let mut combos: Vec<(Vec<Tree>, Vec<(Arc<str>, Tree)>)> = vec![(Vec::new(), Vec::new())];
        for (e, c) in &self.children {
            let sub = c.downset_splits();
            let mut next = Vec::with_capacity(combos.len() * sub.len());
            for (lower, upper) in &combos {
                for (d, rest) in &sub {
                    let mut l = lower.clone();
                    l.extend(d.trees().iter().cloned());
                    let mut u = upper.clone();
                    if let Some(r) = rest {
                        u.push((e.clone(), r.clone()));
                    }
                    next.push((l, u));
                }
            }
            combos = next;
        }
        let mut out: Vec<(Forest, Option<Tree>)> = combos
            .into_iter()
            .map(|(l, u)| (Forest::from_trees(l), Some(Tree::from_parts(self.label.clone(), u))))
            .collect();
        out.push((Forest::single(self.clone()), None));
        out
    }

    /// One entry per non-root vertex `v`: `(t_v, t \ t_v, e0)` where `e0` is the
    /// place of the first edge on the path from the root to `v`.
    pub fn principal_subtree_splits(&self) -> Vec<(Tree, Tree, Arc<str>)> {
        let mut out = Vec::with_capacity(self.size.saturating_sub(1));
        for (k, (e, c)) in self.children.iter().enumerate() {
            // v is the child itself
            let mut rest = self.children.clone();
            rest.remove(k);
            out.push((c.clone(), Tree::from_parts(self.label.clone(), rest), e.clone()));
            for (tv, comp, _) in c.principal_subtree_splits() {
                let mut rest = self.children.clone();
                rest[k] = (e.clone(), comp);
                out.push((tv, Tree::from_parts(self.label.clone(), rest), e.clone()));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "decoration": &*self.label,
            "children": self.children.iter().map(|(e, c)| json!({"place": &**e, "tree": c.to_json()})).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value, alphabet: Option<&Alphabet>) -> Result<Tree> {
        fn go(v: &Value, alphabet: Option<&Alphabet>, pointer: &str) -> Result<Tree> {
            let bad = |msg: &str| Error::InvalidSpec {
                pointer: pointer.to_string(),
                msg: msg.to_string(),
            };
            let label = v
                .get("decoration")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("missing string field `decoration`"))?;
            let prim = match alphabet {
                Some(a) => Some(a.get(label)?),
                None => None,
            };
            let mut children = Vec::new();
            if let Some(cs) = v.get("children") {
                let cs = cs.as_array().ok_or_else(|| bad("`children` must be an array"))?;
                for (k, c) in cs.iter().enumerate() {
                    let ptr = format!("{pointer}/children/{k}");
                    let place = match c.get("place").and_then(Value::as_str) {
                        Some(e) => e.to_string(),
                        None => default_place(prim, label)?,
                    };
                    check_place(prim, &place)?;
                    let sub = c.get("tree").ok_or_else(|| Error::InvalidSpec {
                        pointer: ptr.clone(),
                        msg: "missing field `tree`".into(),
                    })?;
                    children.push((Arc::from(place), go(sub, alphabet, &format!("{ptr}/tree"))?));
                }
            }
            Ok(Tree::new(label, children))
        }
        go(v, alphabet, "")
    }

    /// Parses `p(e1: child, e2: child, ...)`. An omitted place means the
    /// primitive's only place, or `e` when no alphabet is given.
    pub fn parse(text: &str, alphabet: Option<&Alphabet>) -> Result<Tree> {
        let mut p = TreeParser {
            src: text.as_bytes(),
            pos: 0,
            alphabet,
        };
        let t = p.tree()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }

    /// Checks labels and places against an alphabet.
    pub fn validate(&self, alphabet: &Alphabet) -> Result<()> {
        let p = alphabet.get(&self.label)?;
        for (e, c) in &self.children {
            check_place(Some(p), e)?;
            c.validate(alphabet)?;
        }
        Ok(())
    }
}

fn default_place(prim: Option<&PrimitiveInfo>, label: &str) -> Result<String> {
    match prim {
        None => Ok("e".to_string()),
        Some(p) if p.places.len() == 1 => Ok(p.places[0].name.clone()),
        Some(_) => Err(Error::Parse {
            pos: 0,
            msg: format!("primitive `{label}` has several places; name the place"),
        }),
    }
}

fn check_place(prim: Option<&PrimitiveInfo>, place: &str) -> Result<()> {
    match prim {
        Some(p) if p.place_index(place).is_none() => Err(Error::UnknownPlace {
            primitive: p.label.clone(),
            place: place.to_string(),
        }),
        _ => Ok(()),
    }
}

struct TreeParser<'a> {
    src: &'a [u8],
    pos: usize,
    alphabet: Option<&'a Alphabet>,
}

impl TreeParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn tree(&mut self) -> Result<Tree> {
        let label = self.ident()?;
        let prim = match self.alphabet {
            Some(a) => Some(a.get(&label)?),
            None => None,
        };
        let mut children = Vec::new();
        if self.eat(b'(') {
            if !self.eat(b')') {
                loop {
                    let first = self.ident()?;
                    let (place, child) = if self.eat(b':') {
                        (first, self.tree()?)
                    } else {
                        // `first` was the child's label
                        self.pos -= first.len();
                        (default_place(prim, &label)?, self.tree()?)
                    };
                    check_place(prim, &place)?;
                    children.push((Arc::from(place), child));
                    if self.eat(b')') {
                        break;
                    }
                    if !self.eat(b',') {
                        return Err(self.err("expected `,` or `)`"));
                    }
                }
            }
        }
        Ok(Tree::new(&label, children))
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code
    }
}

impl Eq for Tree {}

impl Hash for Tree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.code.hash(state);
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code.cmp(&other.code)
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// Text form `p(e: child, ...)`; leaves print as the bare label.
impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, (e, c)) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}: {c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Multiset of trees, stored sorted.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Forest(Vec<Tree>);

impl Forest {
    pub fn empty() -> Self {
        Forest(Vec::new())
    }

    pub fn single(t: Tree) -> Self {
        Forest(vec![t])
    }

    pub fn from_trees(mut trees: Vec<Tree>) -> Self {
        trees.sort();
        Forest(trees)
    }

    pub fn trees(&self) -> &[Tree] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.0.iter().map(Tree::size).sum()
    }

    pub fn weight(&self, alphabet: &Alphabet) -> Result<u32> {
        self.0.iter().map(|t| t.weight(alphabet)).sum()
    }

    /// Disjoint union.
    pub fn union(&self, other: &Forest) -> Forest {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Forest::from_trees(v)
    }

    /// Downset splits of the forest: products of the per-tree splits.
    pub fn downset_splits(&self) -> Vec<(Forest, Forest)> {
        let mut acc = vec![(Vec::new(), Vec::new())];
        for t in &self.0 {
            let sub = t.downset_splits();
            let mut next = Vec::with_capacity(acc.len() * sub.len());
            for (l, u) in &acc {
                for (d, rest) in &sub {
                    let mut l2: Vec<Tree> = Vec::clone(l);
                    l2.extend(d.0.iter().cloned());
                    let mut u2: Vec<Tree> = Vec::clone(u);
                    if let Some(r) = rest {
                        u2.push(r.clone());
                    }
                    next.push((l2, u2));
                }
            }
            acc = next;
        }
        acc.into_iter()
            .map(|(l, u)| (Forest::from_trees(l), Forest::from_trees(u)))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.0.iter().map(Tree::to_json).collect())
    }
}

impl fmt::Debug for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Trees separated by spaces; the empty forest prints as `1`.
impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t.code())?;
        }
        Ok(())
    }
}

/// Vertex-indexed view of a tree in preorder; vertex 0 is the root.
#[derive(Clone, Debug, Default)]
pub struct FlatTree {
    pub label: Vec<Arc<str>>,
    pub parent: Vec<Option<usize>>,
    /// Place of the edge to the parent.
    pub place: Vec<Option<Arc<str>>>,
    pub children: Vec<Vec<usize>>,
}

impl FlatTree {
    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    /// Rebuilds the tree on the vertices of `mask` reachable from `root` inside it.
    pub fn induced(&self, root: usize, mask: u64) -> Tree {
        let children = self.children[root]
            .iter()
            .filter(|&&c| mask >> c & 1 == 1)
            .map(|&c| (self.place[c].clone().unwrap(), self.induced(c, mask)))
            .collect();
        Tree::from_parts(self.label[root].clone(), children)
    }

    /// Bitmask of the vertices below and including `v`.
    pub fn subtree_mask(&self, v: usize) -> u64 {
        let mut m = 1u64 << v;
        for &c in &self.children[v] {
            m |= self.subtree_mask(c);
        }
        m
    }

    fn count_linear_extensions(&self) -> BigInt {
        // parents must come before children
        fn go(flat: &FlatTree, avail: &mut Vec<usize>) -> u64 {
            if avail.is_empty() {
                return 1;
            }
            let mut total = 0;
            for i in 0..avail.len() {
                let v = avail.swap_remove(i);
                let n = avail.len();
                avail.extend_from_slice(&flat.children[v]);
                total += go(flat, avail);
                avail.truncate(n);
                avail.push(v);
                let last = avail.len() - 1;
                avail.swap(i, last);
            }
            total
        }
        BigInt::from(go(self, &mut vec![0]))
    }
}

/// All trees with `w(t) <= max_weight`, each isomorphism class once, ordered
/// by weight and then canonical code. `root_equation` restricts root labels.
pub fn enumerate_trees(alphabet: &Alphabet, max_weight: u32, root_equation: Option<usize>) -> Vec<Tree> {
    let by_weight = trees_by_weight(alphabet, max_weight);
    by_weight
        .into_iter()
        .flatten()
        .filter(|t| {
            root_equation.is_none_or(|i| alphabet.get(t.label()).map(|p| p.equation == i).unwrap_or(false))
        })
        .collect()
}

/// `result[w]` lists the trees of weight exactly `w`, sorted by code.
pub fn trees_by_weight(alphabet: &Alphabet, max_weight: u32) -> Vec<Vec<Tree>> {
    let mut by_weight: Vec<Vec<Tree>> = vec![Vec::new()];
    for w in 1..=max_weight {
        let mut out = Vec::new();
        for p in alphabet.primitives() {
            if p.weight > w {
                continue;
            }
            let r = w - p.weight;
            let mut items: Vec<(Arc<str>, &Tree, u32)> = Vec::new();
            for e in &p.places {
                let e: Arc<str> = Arc::from(e.name.as_str());
                for (u, ts) in by_weight.iter().enumerate().take(r as usize + 1).skip(1) {
                    for t in ts {
                        items.push((e.clone(), t, u as u32));
                    }
                }
            }
            let mut chosen = Vec::new();
            multisets(&items, 0, r, &mut chosen, &mut |sel| {
                let children = sel
                    .iter()
                    .map(|&k| (items[k].0.clone(), items[k].1.clone()))
                    .collect();
                out.push(Tree::new(&p.label, children));
            });
        }
        out.sort();
        by_weight.push(out);
    }
    by_weight
}

fn multisets(
    items: &[(Arc<str>, &Tree, u32)],
    start: usize,
    remaining: u32,
    chosen: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if remaining == 0 {
        emit(chosen);
        return;
    }
    for k in start..items.len() {
        let w = items[k].2;
        if w <= remaining {
            chosen.push(k);
            multisets(items, k, remaining - w, chosen, emit);
            chosen.pop();
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::poly::int;
    use std::collections::BTreeSet;

    pub fn one_prim(places: &[&str]) -> Alphabet {
        Alphabet::new(vec![PrimitiveInfo::new(
            "p",
            1,
            0,
            places.iter().map(|e| (*e, vec![int(1)])).collect(),
        )])
        .unwrap()
    }

    pub fn two_prims_two_places() -> Alphabet {
        Alphabet::new(vec![
            PrimitiveInfo::new("p", 1, 0, vec![("e", vec![int(1)]), ("f", vec![int(1)])]),
            PrimitiveInfo::new("q", 1, 0, vec![("e", vec![int(1)]), ("f", vec![int(1)])]),
        ])
        .unwrap()
    }

    fn t(s: &str) -> Tree {
        Tree::parse(s, None).unwrap()
    }

    pub fn ladder(n: usize) -> Tree {
        let mut t = Tree::leaf("p");
        for _ in 1..n {
            t = Tree::new("p", vec![(Arc::from("e"), t)]);
        }
        t
    }

    #[test]
    fn canonical_codes() {
        assert_eq!(Tree::leaf("p").code(), "p[]");
        assert_eq!(t("p(e: q, e: p)"), t("p(e: p, e: q)"));
        assert_ne!(ladder(3), t("p(p, p)"));
        assert_eq!(ladder(2).code(), "p[e:p[]]");
    }

    #[test]
    fn text_and_json_round_trip() {
        let a = t("p(e: p(f: q), f: q, e: p)");
        assert_eq!(t(&a.to_string()), a);
        assert_eq!(Tree::from_json(&a.to_json(), None).unwrap(), a);
        assert_eq!(t("p()"), Tree::leaf("p"));
        assert!(Tree::parse("p(", None).is_err());
        let alpha = one_prim(&["only"]);
        assert_eq!(Tree::parse("p(p)", Some(&alpha)).unwrap().code(), "p[only:p[]]");
        assert!(matches!(
            Tree::parse("p(x: p)", Some(&alpha)),
            Err(Error::UnknownPlace { .. })
        ));
        let two = one_prim(&["e1", "e2"]);
        assert!(Tree::parse("p(p)", Some(&two)).is_err());
    }

    #[test]
    fn aut_order_examples() {
        assert_eq!(t("p(p, p, p)").aut_order(), BigInt::from(6));
        assert_eq!(ladder(5).aut_order(), BigInt::one());
        assert_eq!(t("p(e1: p, e2: p)").aut_order(), BigInt::one());
        assert_eq!(t("p(p(p,p), p(p,p))").aut_order(), BigInt::from(8));
    }

    fn brute_aut(flat: &FlatTree) -> usize {
        let n = flat.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut count = 0;
        permute(&mut perm, 0, &mut |p| {
            let ok = (0..n).all(|v| {
                flat.label[v] == flat.label[p[v]]
                    && flat.place[v] == flat.place[p[v]]
                    && flat.parent[v].map(|u| p[u]) == flat.parent[p[v]]
            });
            if ok {
                count += 1;
            }
        });
        count
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn aut_order_matches_brute_force() {
        let alpha = two_prims_two_places();
        for tree in enumerate_trees(&alpha, 6, None) {
            assert_eq!(tree.aut_order(), BigInt::from(brute_aut(&tree.flatten())), "{tree}");
        }
    }

    /// Every labelled parent array, deduplicated by canonical code.
    fn brute_trees(alpha: &Alphabet, n: usize) -> BTreeSet<String> {
        let prims = alpha.primitives();
        let mut out = BTreeSet::new();
        let mut parent = vec![0usize; n];
        let mut lab = vec![0usize; n];
        let mut plc = vec![0usize; n];
        fn rec(
            v: usize,
            n: usize,
            prims: &[PrimitiveInfo],
            parent: &mut Vec<usize>,
            lab: &mut Vec<usize>,
            plc: &mut Vec<usize>,
            out: &mut BTreeSet<String>,
        ) {
            if v == n {
                fn build(u: usize, n: usize, prims: &[PrimitiveInfo], parent: &[usize], lab: &[usize], plc: &[usize]) -> Tree {
                    let ch = (1..n)
                        .filter(|&c| parent[c] == u)
                        .map(|c| {
                            let e = &prims[lab[u]].places[plc[c]].name;
                            (Arc::from(e.as_str()), build(c, n, prims, parent, lab, plc))
                        })
                        .collect();
                    Tree::new(&prims[lab[u]].label, ch)
                }
                out.insert(build(0, n, prims, parent, lab, plc).code().to_string());
                return;
            }
            for l in 0..prims.len() {
                lab[v] = l;
                if v == 0 {
                    rec(1, n, prims, parent, lab, plc, out);
                    continue;
                }
                for p in 0..v {
                    parent[v] = p;
                    for e in 0..prims[lab[p]].places.len() {
                        plc[v] = e;
                        rec(v + 1, n, prims, parent, lab, plc, out);
                    }
                }
            }
        }
        rec(0, n, prims, &mut parent, &mut lab, &mut plc, &mut out);
        out
    }

    #[test]
    fn enumeration_counts() {
        let one = one_prim(&["e"]);
        assert_eq!(enumerate_trees(&one, 2, None).len(), 2);
        let counts: Vec<usize> = trees_by_weight(&one, 4).iter().skip(1).map(Vec::len).collect();
        assert_eq!(counts, vec![1, 1, 2, 4]);
        let two = one_prim(&["e1", "e2"]);
        let counts: Vec<usize> = trees_by_weight(&two, 3).iter().skip(1).map(Vec::len).collect();
        assert_eq!(counts, vec![1, 2, 7]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for alpha in [one_prim(&["e"]), one_prim(&["e1", "e2"]), two_prims_two_places()] {
            let by_w = trees_by_weight(&alpha, 4);
            for (n, trees) in by_w.iter().enumerate().skip(1) {
                let codes: BTreeSet<String> = trees.iter().map(|t| t.code().to_string()).collect();
                assert_eq!(codes.len(), trees.len());
                assert_eq!(codes, brute_trees(&alpha, n));
            }
        }
    }

    #[test]
    fn enumeration_is_closed_under_root_removal() {
        let alpha = two_prims_two_places();
        let all: BTreeSet<Tree> = enumerate_trees(&alpha, 5, None).into_iter().collect();
        for tree in &all {
            for (_, c) in tree.children() {
                assert!(all.contains(c));
            }
        }
    }

    #[test]
    fn enumeration_respects_weights_and_roots() {
        let alpha = Alphabet::new(vec![
            PrimitiveInfo::new("a", 1, 0, vec![("e", vec![int(1), int(0)])]),
            PrimitiveInfo::new("b", 2, 1, vec![("e", vec![int(0), int(1)])]),
        ])
        .unwrap();
        let trees = enumerate_trees(&alpha, 4, Some(1));
        assert!(trees.iter().all(|t| t.label() == "b" && t.weight(&alpha).unwrap() <= 4));
        let ws: Vec<u32> = trees.iter().map(|t| t.weight(&alpha).unwrap()).collect();
        assert!(ws.windows(2).all(|w| w[0] <= w[1]));
        assert!(trees.contains(&Tree::leaf("b")));
    }

    #[test]
    fn downset_examples() {
        assert_eq!(Forest::single(Tree::leaf("p")).downset_splits().len(), 2);
        let l2 = Forest::single(ladder(2)).downset_splits();
        assert_eq!(l2.len(), 3);
        let cherry = Forest::single(t("p(p, p)")).downset_splits();
        assert_eq!(cherry.len(), 5);
        assert_eq!(Forest::empty().downset_splits(), vec![(Forest::empty(), Forest::empty())]);
    }

    #[test]
    fn downset_counts_match_subset_filtering() {
        let alpha = two_prims_two_places();
        let trees = enumerate_trees(&alpha, 4, None);
        let forests = [
            Forest::from_trees(vec![trees[3].clone(), trees[9].clone()]),
            Forest::from_trees(vec![ladder(3), t("p(p(p,p), p(p,p))")]),
        ];
        for f in forests.iter().chain(trees.iter().map(|t| Forest::single(t.clone())).collect::<Vec<_>>().iter()) {
            let flats: Vec<FlatTree> = f.trees().iter().map(Tree::flatten).collect();
            let n: usize = flats.iter().map(FlatTree::len).sum();
            assert!(n <= 10);
            let mut parent = Vec::new();
            for fl in &flats {
                let off = parent.len();
                parent.extend(fl.parent.iter().map(|p| p.map(|u| u + off)));
            }
            let brute = (0u32..1 << n)
                .filter(|s| {
                    (0..n).all(|c| match parent[c] {
                        Some(v) => s >> v & 1 == 0 || s >> c & 1 == 1,
                        None => true,
                    })
                })
                .count();
            assert_eq!(f.downset_splits().len(), brute, "{f}");
        }
    }

    #[test]
    fn principal_splits() {
        assert!(Tree::leaf("p").principal_subtree_splits().is_empty());
        let s = ladder(2).principal_subtree_splits();
        assert_eq!(s, vec![(Tree::leaf("p"), Tree::leaf("p"), Arc::from("e"))]);
        let mut sizes: Vec<(usize, usize)> = ladder(4)
            .principal_subtree_splits()
            .iter()
            .map(|(a, b, _)| (a.size(), b.size()))
            .collect();
        sizes.sort();
        assert_eq!(sizes, vec![(1, 3), (2, 2), (3, 1)]);
        let c = t("p(p, p)").principal_subtree_splits();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|(a, b, _)| a.is_leaf() && *b == ladder(2)));
        let deep = t("p(f: p(e: q))").principal_subtree_splits();
        assert!(deep.iter().all(|(_, _, e)| &**e == "f"));
    }

    #[test]
    fn linear_extensions() {
        for n in 1..=6 {
            assert_eq!(ladder(n).linear_extension_count(), BigInt::one());
            assert_eq!(ladder(n).tree_factorial(), factorial(n as u32));
        }
        let cherry = t("p(p, p)");
        assert_eq!(cherry.linear_extension_count(), BigInt::from(2));
        assert_eq!(cherry.tree_factorial(), BigInt::from(3));
        let star = t("p(p, p, p)");
        assert_eq!(star.linear_extension_count(), BigInt::from(6));
        assert_eq!(star.tree_factorial(), BigInt::from(4));
    }

    #[test]
    fn extensions_agree_with_hook_formula() {
        let one = one_prim(&["e"]);
        for tree in enumerate_trees(&one, 9, None) {
            let e = tree.linear_extension_count();
            assert_eq!(e * tree.tree_factorial(), factorial(tree.size() as u32), "{tree}");
        }
    }

    #[test]
    fn induced_subtrees() {
        let a = t("p(e: q(f: p), e: p)");
        let flat = a.flatten();
        assert_eq!(flat.induced(0, u64::MAX), a);
        assert_eq!(flat.induced(2, flat.subtree_mask(2)), t("q(f: p)"));
    }
}
