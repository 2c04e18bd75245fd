//! Binary tubings of decorated rooted trees and the tubing expansion of `φ`.
//!
//! A binary tubing of `t` is either the single vertex, or a split of `t` into
//! the principal subtree `t_v` (lower tube) and `t \ t_v` (upper tube) together
//! with binary tubings of both parts. Each split of a tube rooted at `r`
//! raises the rank of `r` at the place `e0` of the first edge from `r` toward `v`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use parking_lot::RwLock;
use serde_json::{json, Value};

use crate::cocycle::{MellinMap, MellinSeries};
use crate::error::{Error, Result};
use crate::poly::{factorial, Monomial, Poly, Rational, Symbol};
use crate::trees::{Alphabet, FlatTree, Tree};

#[derive(Clone, Debug)]
pub struct Split {
    pub vertex: usize,
    pub lower: Box<Tubing>,
    pub upper: Box<Tubing>,
}

/// A binary tubing of the tube `tube` (a vertex mask of a flattened tree).
#[derive(Clone, Debug)]
pub struct Tubing {
    pub tube: u64,
    pub root: usize,
    pub split: Option<Split>,
    /// Rank vector per vertex of the whole flattened tree, over the places of its label.
    pub rank: Vec<Vec<u32>>,
    /// Place indices of the root-containing upper tubes, outermost first.
    pub root_types: Vec<usize>,
}

impl Tubing {
    /// Number of tubes containing the root.
    pub fn b(&self) -> usize {
        self.root_types.len() + 1
    }

    /// `β^k` for `1 <= k <= b`: place counts of `root_types[k-1..]`.
    pub fn beta(&self, k: usize, arity: usize) -> Vec<u32> {
        counts(&self.root_types[k - 1..], arity)
    }

    /// All tubes as sorted vertex lists, outermost first.
    pub fn tubes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![mask_vertices(self.tube)];
        if let Some(s) = &self.split {
            out.extend(s.lower.tubes());
            out.extend(s.upper.tubes());
        }
        out
    }
}

fn mask_vertices(mask: u64) -> Vec<usize> {
    (0..64).filter(|v| mask >> v & 1 == 1).collect()
}

fn counts(seq: &[usize], arity: usize) -> Vec<u32> {
    let mut c = vec![0u32; arity];
    for &e in seq {
        c[e] += 1;
    }
    c
}

fn arities(flat: &FlatTree, alphabet: &Alphabet) -> Result<Vec<usize>> {
    flat.label
        .iter()
        .map(|l| alphabet.get(l).map(|p| p.places.len()))
        .collect()
}

/// Every binary tubing of `t`, with statistics. Limited to 64 vertices.
pub fn enumerate_tubings(t: &Tree, alphabet: &Alphabet) -> Result<(FlatTree, Vec<Tubing>)> {
    if t.size() > 64 {
        return Err(Error::InvalidSpec {
            pointer: String::new(),
            msg: "tubing enumeration is limited to 64 vertices".into(),
        });
    }
    let flat = t.flatten();
    let ar = arities(&flat, alphabet)?;
    let place_idx: Vec<Option<usize>> = (0..flat.len())
        .map(|v| {
            flat.parent[v].map(|u| {
                alphabet
                    .get(&flat.label[u])
                    .ok()
                    .and_then(|p| p.place_index(flat.place[v].as_deref().unwrap()))
                    .unwrap_or(0)
            })
        })
        .collect();
    let full = if flat.len() == 64 { u64::MAX } else { (1u64 << flat.len()) - 1 };
    let out = tubings_of(&flat, &ar, &place_idx, full, 0);
    Ok((flat, out))
}

fn tubings_of(flat: &FlatTree, ar: &[usize], place_idx: &[Option<usize>], mask: u64, root: usize) -> Vec<Tubing> {
    let zero_rank = || ar.iter().map(|&a| vec![0u32; a]).collect::<Vec<_>>();
    if mask.count_ones() == 1 {
        return vec![Tubing {
            tube: mask,
            root,
            split: None,
            rank: zero_rank(),
            root_types: Vec::new(),
        }];
    }
    let mut out = Vec::new();
    for v in mask_vertices(mask) {
        if v == root {
            continue;
        }
        let lower_mask = flat.subtree_mask(v) & mask;
        let upper_mask = mask & !lower_mask;
        // first vertex below root on the path to v
        let mut w = v;
        while flat.parent[w] != Some(root) {
            w = flat.parent[w].unwrap();
        }
        let e0 = place_idx[w].unwrap();
        let lowers = tubings_of(flat, ar, place_idx, lower_mask, v);
        let uppers = tubings_of(flat, ar, place_idx, upper_mask, root);
        for lo in &lowers {
            for up in &uppers {
                let mut rank = zero_rank();
                for (u, r) in rank.iter_mut().enumerate() {
                    for (k, x) in r.iter_mut().enumerate() {
                        *x = lo.rank[u][k] + up.rank[u][k];
                    }
                }
                rank[root][e0] += 1;
                let mut root_types = vec![e0];
                root_types.extend_from_slice(&up.root_types);
                out.push(Tubing {
                    tube: mask,
                    root,
                    split: Some(Split {
                        vertex: v,
                        lower: Box::new(lo.clone()),
                        upper: Box::new(up.clone()),
                    }),
                    rank,
                    root_types,
                });
            }
        }
    }
    out
}

/// Number of binary tubings, by the split recursion without materializing them.
pub fn count_tubings(t: &Tree) -> num_bigint::BigInt {
    fn go(t: &Tree, memo: &mut HashMap<Tree, num_bigint::BigInt>) -> num_bigint::BigInt {
        if let Some(c) = memo.get(t) {
            return c.clone();
        }
        let c = if t.is_leaf() {
            num_bigint::BigInt::from(1)
        } else {
            t.principal_subtree_splits()
                .iter()
                .map(|(lo, up, _)| go(lo, memo) * go(up, memo))
                .sum()
        };
        memo.insert(t.clone(), c.clone());
        c
    }
    go(t, &mut HashMap::new())
}

fn mellin_of<'a>(mellin: &'a MellinMap, label: &str) -> Result<&'a MellinSeries> {
    mellin
        .get(label)
        .ok_or_else(|| Error::MissingMellin(label.to_string()))
}

/// `mel(τ) = ∏_{v ≠ rt} a_{d(v), rk(τ, v)}`.
pub fn mel(flat: &FlatTree, tubing: &Tubing, mellin: &MellinMap) -> Result<Poly> {
    let mut acc = Poly::one();
    for v in 0..flat.len() {
        if v == tubing.root || tubing.tube >> v & 1 == 0 {
            continue;
        }
        acc = &acc * &mellin_of(mellin, &flat.label[v])?.coeff(&tubing.rank[v])?;
    }
    Ok(acc)
}

fn l_power_over_factorial(k: usize) -> Poly {
    Poly::term(
        Rational::from_integer(factorial(k as u32)).recip(),
        Monomial::var(Symbol::scale(), k as u32),
    )
}

/// `Σ_τ mel(τ) Σ_{k=1}^{b(τ)} a_{d(t), β^k(τ)} L^k / k!` by explicit enumeration.
pub fn phi_tubing_enumerated(t: &Tree, alphabet: &Alphabet, mellin: &MellinMap) -> Result<Poly> {
    let (flat, tubings) = enumerate_tubings(t, alphabet)?;
    let root = mellin_of(mellin, t.label())?;
    let mut out = Poly::zero();
    for tau in &tubings {
        let m = mel(&flat, tau, mellin)?;
        let mut inner = Poly::zero();
        for k in 1..=tau.b() {
            let a = root.coeff(&tau.beta(k, root.arity))?;
            inner += &(&a * &l_power_over_factorial(k));
        }
        out += &(&m * &inner);
    }
    Ok(out)
}

/// Map from root-type sequence to the summed Mellin monomials of the
/// non-root vertices over all tubings with that sequence.
pub type Aggregate = BTreeMap<Vec<usize>, Poly>;

/// Memoizing evaluator for the tubing expansion; safe to share across threads.
pub struct TubingEvaluator<'a> {
    alphabet: &'a Alphabet,
    mellin: &'a MellinMap,
    cache: RwLock<HashMap<Tree, Arc<Aggregate>>>,
}

impl<'a> TubingEvaluator<'a> {
    pub fn new(alphabet: &'a Alphabet, mellin: &'a MellinMap) -> Self {
        TubingEvaluator {
            alphabet,
            mellin,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Aggregated tubing data of `t`.
    pub fn aggregate(&self, t: &Tree) -> Result<Arc<Aggregate>> {
        if let Some(a) = self.cache.read().get(t) {
            return Ok(a.clone());
        }
        let mut agg = Aggregate::new();
        if t.is_leaf() {
            agg.insert(Vec::new(), Poly::one());
        } else {
            let p = self.alphabet.get(t.label())?;
            let mut grouped: BTreeMap<(Tree, Tree, usize), usize> = BTreeMap::new();
            for (lo, up, e0) in t.principal_subtree_splits() {
                let e = p.place_index(&e0).ok_or_else(|| Error::UnknownPlace {
                    primitive: p.label.clone(),
                    place: e0.to_string(),
                })?;
                *grouped.entry((lo, up, e)).or_insert(0) += 1;
            }
            for ((lo, up, e0), mult) in grouped {
                let s = self.sigma(&lo)?.scale(&Rational::from_integer(mult.into()));
                if s.is_zero() {
                    continue;
                }
                for (seq, c) in self.aggregate(&up)?.iter() {
                    let mut key = Vec::with_capacity(seq.len() + 1);
                    key.push(e0);
                    key.extend_from_slice(seq);
                    let entry = agg.entry(key).or_default();
                    *entry += &(&s * c);
                }
            }
            agg.retain(|_, c| !c.is_zero());
        }
        let agg = Arc::new(agg);
        self.cache.write().insert(t.clone(), agg.clone());
        Ok(agg)
    }

    /// `Σ_τ mel(τ) a_{d(t), rk(τ, rt)}`: the weight `t` carries as a lower tube.
    pub fn sigma(&self, t: &Tree) -> Result<Poly> {
        let m = mellin_of(self.mellin, t.label())?;
        let mut out = Poly::zero();
        for (seq, c) in self.aggregate(t)?.iter() {
            out += &(c * &m.coeff(&counts(seq, m.arity))?);
        }
        Ok(out)
    }

    /// `φ(t)` by the tubing expansion.
    pub fn phi(&self, t: &Tree) -> Result<Poly> {
        let m = mellin_of(self.mellin, t.label())?;
        let mut out = Poly::zero();
        for (seq, c) in self.aggregate(t)?.iter() {
            let mut inner = Poly::zero();
            for k in 1..=seq.len() + 1 {
                let a = m.coeff(&counts(&seq[k - 1..], m.arity))?;
                inner += &(&a * &l_power_over_factorial(k));
            }
            out += &(c * &inner);
        }
        Ok(out)
    }
}

/// `φ(t)` by the tubing expansion, with a fresh memo table.
pub fn phi_tubing(t: &Tree, alphabet: &Alphabet, mellin: &MellinMap) -> Result<Poly> {
    TubingEvaluator::new(alphabet, mellin).phi(t)
}

/// JSON listing of the tubings of `t`.
pub fn tubings_json(t: &Tree, alphabet: &Alphabet, mellin: Option<&MellinMap>, emit_tubes: bool) -> Result<Value> {
    let (flat, tubings) = enumerate_tubings(t, alphabet)?;
    let root = alphabet.get(t.label())?;
    let mut items = Vec::new();
    for tau in &tubings {
        let mut rank = serde_json::Map::new();
        for v in 0..flat.len() {
            let p = alphabet.get(&flat.label[v])?;
            let entry: serde_json::Map<String, Value> = p
                .places
                .iter()
                .zip(&tau.rank[v])
                .map(|(e, r)| (e.name.clone(), json!(r)))
                .collect();
            rank.insert(v.to_string(), Value::Object(entry));
        }
        let seq: Vec<&str> = tau.root_types.iter().map(|&e| root.places[e].name.as_str()).collect();
        let mut item = serde_json::Map::new();
        item.insert("rootTypeSeq".into(), json!(seq));
        item.insert("rankVec".into(), Value::Object(rank));
        item.insert("b".into(), json!(tau.b()));
        if let Some(m) = mellin {
            item.insert("mel".into(), json!(mel(&flat, tau, m)?.to_string()));
        }
        if emit_tubes {
            item.insert("tubes".into(), json!(tau.tubes()));
        }
        items.push(Value::Object(item));
    }
    let vertices: Vec<Value> = (0..flat.len())
        .map(|v| {
            json!({
                "label": &*flat.label[v],
                "parent": flat.parent[v],
                "place": flat.place[v].as_deref(),
            })
        })
        .collect();
    Ok(json!({
        "tree": t.to_string(),
        "vertices": vertices,
        "count": tubings.len(),
        "tubings": items,
    }))
}
