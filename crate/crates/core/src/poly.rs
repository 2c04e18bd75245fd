//! Sparse multivariate polynomials over the rationals.
//!
//! Indeterminates are named [`Symbol`]s: Mellin coefficients (`a[p][0,2]`,
//! `b[1,0]`), the scale variable `L` and per-place scale variables `L.<place>`.
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], so iteration order is
//! lexicographic by symbol name and then exponent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"n"` or `"n/d"` (optionally signed, surrounding whitespace allowed).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = |msg: &str| Error::Parse {
        pos: 0,
        msg: format!("{msg}: `{s}`"),
    };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad("bad numerator"))?;
    let den: BigInt = den.parse().map_err(|_| bad("bad denominator"))?;
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Multinomial coefficient `|alpha|! / prod(alpha_e!)`.
pub fn multinomial(alpha: &[u32]) -> BigInt {
    let total: u32 = alpha.iter().sum();
    let den = alpha
        .iter()
        .fold(BigInt::one(), |acc, &a| acc * factorial(a));
    factorial(total) / den
}

/// Generalized binomial coefficient `mu^(k falling) / k!`.
pub fn binomial(mu: &Rational, k: u32) -> Rational {
    falling_factorial(std::slice::from_ref(mu), &[k]) / Rational::from_integer(factorial(k))
}

/// Componentwise falling factorial `prod_i prod_{j<k_i} (mu_i - j)`.
///
/// Panics if the two vectors have different lengths.
pub fn falling_factorial(mu: &[Rational], k: &[u32]) -> Rational {
    assert_eq!(mu.len(), k.len(), "falling factorial arity mismatch");
    let mut acc = Rational::one();
    for (m, &k) in mu.iter().zip(k) {
        for j in 0..k {
            acc *= m - int(j as i64);
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: impl AsRef<str>) -> Self {
        Symbol(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// The scale variable `L`.
    pub fn scale() -> Self {
        Symbol::new("L")
    }

    /// The scale variable `L.<place>` attached to an insertion place.
    pub fn place_scale(place: &str) -> Self {
        Symbol::new(format!("L.{place}"))
    }

    pub fn is_scale_variable(&self) -> bool {
        &*self.0 == "L" || self.0.starts_with("L.")
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Product of symbols with positive exponents, sorted by symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(s: Symbol, exp: u32) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(s, exp)])
        }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (Symbol, u32)>) -> Self {
        let mut map: BTreeMap<Symbol, u32> = BTreeMap::new();
        for (s, e) in factors {
            *map.entry(s).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn degree(&self, s: &Symbol) -> u32 {
        self.0
            .binary_search_by(|(t, _)| t.cmp(s))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn without(&self, s: &Symbol) -> Monomial {
        Monomial(self.0.iter().filter(|(t, _)| t != s).cloned().collect())
    }

    /// Quotient `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (s, e) in &self.0 {
            let mut e = *e;
            if j < other.0.len() && other.0[j].0 == *s {
                if other.0[j].1 > e {
                    return None;
                }
                e -= other.0[j].1;
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *s {
                return None;
            }
            if e > 0 {
                out.push((s.clone(), e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }
}

impl Mul for &Monomial {
    type Output = Monomial;

    fn mul(self, rhs: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Poly::term(c, Monomial::one())
    }

    pub fn from_i64(n: i64) -> Self {
        Poly::constant(int(n))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn var(name: &str) -> Self {
        Poly::symbol(Symbol::new(name))
    }

    pub fn symbol(s: Symbol) -> Self {
        Poly::term(Rational::one(), Monomial::var(s, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .is_some_and(|c| c.is_one())
    }

    /// The value if this polynomial is a constant (zero included).
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(s, _)| s.clone()))
            .collect()
    }

    pub fn degree_in(&self, s: &Symbol) -> u32 {
        self.terms.keys().map(|m| m.degree(s)).max().unwrap_or(0)
    }

    /// Coefficient of `s^k`, as a polynomial in the remaining symbols.
    pub fn coeff_in(&self, s: &Symbol, k: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.degree(s) == k {
                out.add_term(m.without(s), c.clone());
            }
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(k, c)| (k * m, c.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to `s`.
    pub fn derivative(&self, s: &Symbol) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let d = m.degree(s);
            if d == 0 {
                continue;
            }
            let rest = m.without(s);
            let m2 = &rest * &Monomial::var(s.clone(), d - 1);
            out.add_term(m2, c * int(d as i64));
        }
        out
    }

    /// Renames symbols; unmapped symbols are kept. Swaps are allowed.
    pub fn rename(&self, map: &BTreeMap<Symbol, Symbol>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let m2 = Monomial::from_factors(
                m.factors()
                    .iter()
                    .map(|(s, e)| (map.get(s).cloned().unwrap_or_else(|| s.clone()), *e)),
            );
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Simultaneous substitution of polynomials for symbols.
    ///
    /// Fails if the assignment graph has a cycle, e.g. `a -> a + 1` or
    /// `a -> b, b -> a`.
    pub fn substitute(&self, assignments: &BTreeMap<Symbol, Poly>) -> Result<Poly> {
        check_acyclic(assignments)?;
        let mut power_cache: BTreeMap<(Symbol, u32), Poly> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut acc = Poly::constant(c.clone());
            for (s, e) in m.factors() {
                match assignments.get(s) {
                    Some(p) => {
                        let pw = power_cache
                            .entry((s.clone(), *e))
                            .or_insert_with(|| p.pow(*e));
                        acc = &acc * &*pw;
                    }
                    None => kept.push((s.clone(), *e)),
                }
            }
            out += &acc.mul_monomial(&Monomial(kept));
        }
        Ok(out)
    }

    /// Evaluates every symbol present; returns `None` if some symbol is unbound.
    pub fn evaluate(&self, values: &BTreeMap<Symbol, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, e) in m.factors() {
                let v = values.get(s)?;
                for _ in 0..*e {
                    t *= v;
                }
            }
            acc += t;
        }
        Some(acc)
    }

    /// Canonical JSON: `[{"coeff":"n/d","monomial":{"sym":e}}]` in term order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| {
                    let mono: serde_json::Map<String, Value> = m
                        .factors()
                        .iter()
                        .map(|(s, e)| (s.name().to_string(), json!(e)))
                        .collect();
                    json!({"coeff": c.to_string(), "monomial": mono})
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<Poly> {
        let bad = |msg: &str| Error::Parse {
            pos: 0,
            msg: msg.to_string(),
        };
        let arr = v.as_array().ok_or_else(|| bad("polynomial must be an array"))?;
        let mut out = Poly::zero();
        for t in arr {
            let c = t
                .get("coeff")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("term needs a string coeff"))?;
            let c = parse_rational(c)?;
            let mono = t
                .get("monomial")
                .and_then(Value::as_object)
                .ok_or_else(|| bad("term needs a monomial object"))?;
            let mut factors = Vec::new();
            for (s, e) in mono {
                let e = e
                    .as_u64()
                    .and_then(|e| u32::try_from(e).ok())
                    .ok_or_else(|| bad("exponent must be a nonnegative integer"))?;
                factors.push((Symbol::new(s), e));
            }
            out.add_term(Monomial::from_factors(factors), c);
        }
        Ok(out)
    }
}

fn check_acyclic(assignments: &BTreeMap<Symbol, Poly>) -> Result<()> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'a>(
        s: &'a Symbol,
        assignments: &'a BTreeMap<Symbol, Poly>,
        deps: &BTreeMap<&'a Symbol, BTreeSet<Symbol>>,
        state: &mut BTreeMap<Symbol, u8>,
    ) -> Result<()> {
        match state.get(s).copied().unwrap_or(0) {
            1 => return Err(Error::CyclicSubstitution(s.name().to_string())),
            2 => return Ok(()),
            _ => {}
        }
        state.insert(s.clone(), 1);
        if let Some(ds) = deps.get(s) {
            for d in ds {
                if let Some((k, _)) = assignments.get_key_value(d) {
                    visit(k, assignments, deps, state)?;
                }
            }
        }
        state.insert(s.clone(), 2);
        Ok(())
    }
    let deps: BTreeMap<&Symbol, BTreeSet<Symbol>> =
        assignments.iter().map(|(k, v)| (k, v.symbols())).collect();
    let mut state = BTreeMap::new();
    for k in assignments.keys() {
        visit(k, assignments, &deps, &mut state)?;
    }
    Ok(())
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: std::collections::HashMap<Monomial, Rational> =
            std::collections::HashMap::with_capacity(self.len() * rhs.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let m = m1 * m2;
                let c = c1 * c2;
                match acc.entry(m) {
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(c);
                    }
                    std::collections::hash_map::Entry::Occupied(mut o) => {
                        *o.get_mut() += c;
                    }
                }
            }
        }
        Poly {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl From<Rational> for Poly {
    fn from(c: Rational) -> Self {
        Poly::constant(c)
    }
}

impl From<i64> for Poly {
    fn from(n: i64) -> Self {
        Poly::from_i64(n)
    }
}

/// Canonical text form: `coeff * sym^e * ...` terms joined by ` + `.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c} * {m}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Poly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Poly> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(out)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
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

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc += &self.product()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc -= &self.product()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.unary()?;
                    let d = d
                        .as_constant()
                        .filter(|c| !c.is_zero())
                        .ok_or_else(|| self.err("division only by nonzero constants"))?;
                    acc = acc.scale(&d.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| self.err("expected exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: BigInt = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .parse()
                    .map_err(|_| self.err("bad integer"))?;
                Ok(Poly::constant(Rational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || c == b'\'' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                while self.pos < self.src.len() && self.src[self.pos] == b'[' {
                    while self.pos < self.src.len() && self.src[self.pos] != b']' {
                        self.pos += 1;
                    }
                    if self.pos == self.src.len() {
                        return Err(self.err("unterminated `[`"));
                    }
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok(Poly::var(name))
            }
            _ => Err(self.err("expected number, symbol or `(`")),
        }
    }
}

/// Converts a small nonnegative rational to `u32` if it is an integer.
pub fn as_small_nat(r: &Rational) -> Option<u32> {
    if r.is_integer() && !r.is_negative() {
        r.to_integer().to_u32()
    } else {
        None
    }
}
