//! Polynomial 1-cocycles and the recursive Feynman rules.
//!
//! The cocycle of a primitive `p` with places `E_p` acts on polynomials in
//! the scale variables `L.<e>` and returns a polynomial in `L`:
//! `Λ_p f = ∫_0^L A_p(∂/∂u_e) f(u) |_{u_e = u} du`. The Mellin series is stored
//! in the multinomial convention `A_p = Σ_α a_{p,α} binom(|α|; α) ρ^α`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{falling_factorial, int, multinomial, Monomial, Poly, Rational, Symbol};
use crate::trees::{Alphabet, PrimitiveInfo, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MellinSeries {
    pub primitive: String,
    pub arity: usize,
    /// `a_{p,α}`; absent entries with `|α| <= truncation` are zero.
    pub coeffs: BTreeMap<Vec<u32>, Poly>,
    pub truncation: u32,
    pub boring: bool,
}

/// Default symbol name: `a[p][n]` for one place, `a[p][i,j,...]` otherwise.
pub fn mellin_symbol(label: &str, alpha: &[u32]) -> Symbol {
    let idx: Vec<String> = alpha.iter().map(u32::to_string).collect();
    Symbol::new(format!("a[{label}][{}]", idx.join(",")))
}

/// Name of the symbol shared by all `α` of total degree `n` at a boring primitive.
pub fn boring_symbol(label: &str, n: u32) -> Symbol {
    Symbol::new(format!("a[{label}][{n}]"))
}

/// Exponent vectors of length `arity` and total degree `n`, lexicographically.
pub fn compositions(arity: usize, n: u32) -> Vec<Vec<u32>> {
    if arity == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(arity - 1, n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl MellinSeries {
    pub fn empty(p: &PrimitiveInfo, truncation: u32) -> Self {
        MellinSeries {
            primitive: p.label.clone(),
            arity: p.places.len(),
            coeffs: BTreeMap::new(),
            truncation,
            boring: false,
        }
    }

    /// Fresh symbols `a[p][α]` for every `|α| <= truncation`.
    pub fn symbolic(p: &PrimitiveInfo, truncation: u32) -> Self {
        let mut m = Self::empty(p, truncation);
        for n in 0..=truncation {
            for alpha in compositions(m.arity, n) {
                let s = mellin_symbol(&p.label, &alpha);
                m.coeffs.insert(alpha, Poly::symbol(s));
            }
        }
        m
    }

    /// Symbols `a[p][n]` depending only on `|α|`.
    pub fn symbolic_boring(p: &PrimitiveInfo, truncation: u32) -> Self {
        let mut m = Self::empty(p, truncation);
        m.boring = true;
        for n in 0..=truncation {
            for alpha in compositions(m.arity, n) {
                m.coeffs.insert(alpha, Poly::symbol(boring_symbol(&p.label, n)));
            }
        }
        m
    }

    /// The series with `A_p ≡ c`.
    pub fn constant(p: &PrimitiveInfo, truncation: u32, c: Poly) -> Self {
        let mut m = Self::empty(p, truncation);
        m.coeffs.insert(vec![0; m.arity], c);
        m
    }

    /// Builds from plain coefficients `A_α` of `A_p(ρ) = Σ A_α ρ^α`.
    pub fn from_plain(p: &PrimitiveInfo, truncation: u32, plain: &BTreeMap<Vec<u32>, Poly>) -> Self {
        let mut m = Self::empty(p, truncation);
        for (alpha, c) in plain {
            let mult = Rational::from_integer(multinomial(alpha));
            m.set(alpha.clone(), c.scale(&mult.recip()));
        }
        m
    }

    pub fn set(&mut self, alpha: Vec<u32>, c: Poly) {
        assert_eq!(alpha.len(), self.arity, "exponent vector arity");
        if c.is_zero() {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
    }

    /// `a_{p,α}`.
    pub fn coeff(&self, alpha: &[u32]) -> Result<Poly> {
        let n: u32 = alpha.iter().sum();
        if n > self.truncation {
            return Err(Error::MellinTruncation {
                primitive: self.primitive.clone(),
                truncation: self.truncation as usize,
                needed: n as usize,
            });
        }
        Ok(self.coeffs.get(alpha).cloned().unwrap_or_default())
    }

    /// `A_α = binom(|α|; α) a_{p,α}`.
    pub fn plain_coeff(&self, alpha: &[u32]) -> Result<Poly> {
        let mult = Rational::from_integer(multinomial(alpha));
        Ok(self.coeff(alpha)?.scale(&mult))
    }

    /// True if every coefficient depends on `α` only through `|α|`.
    pub fn depends_only_on_total_degree(&self) -> bool {
        (0..=self.truncation).all(|n| {
            let comps = compositions(self.arity, n);
            let first = self.coeffs.get(&comps[0]);
            comps.iter().all(|a| self.coeffs.get(a) == first)
        })
    }

    /// `A_p` as a polynomial in the given variables, up to the truncation.
    pub fn as_polynomial(&self, vars: &[Symbol]) -> Poly {
        let mut out = Poly::zero();
        for (alpha, c) in &self.coeffs {
            let mult = Rational::from_integer(multinomial(alpha));
            let m = Monomial::from_factors(vars.iter().cloned().zip(alpha.iter().copied()));
            out += &c.scale(&mult).mul_monomial(&m);
        }
        out
    }
}

/// Mellin series for every primitive of an alphabet, keyed by label.
pub type MellinMap = BTreeMap<String, MellinSeries>;

pub fn symbolic_mellin(alphabet: &Alphabet, truncation: u32) -> MellinMap {
    alphabet
        .primitives()
        .iter()
        .map(|p| (p.label.clone(), MellinSeries::symbolic(p, truncation)))
        .collect()
}

fn lookup<'a>(mellin: &'a MellinMap, label: &str) -> Result<&'a MellinSeries> {
    mellin
        .get(label)
        .ok_or_else(|| Error::MissingMellin(label.to_string()))
}

pub fn place_symbols(p: &PrimitiveInfo) -> Vec<Symbol> {
    p.places.iter().map(|e| Symbol::place_scale(&e.name)).collect()
}

/// `Λ_p f` for `f` a polynomial in the scale variables `L.<e>` of `p`.
///
/// Non-scale symbols in `f` are treated as coefficients; `L` itself or the
/// scale variable of a foreign place is an error.
pub fn apply_cocycle(p: &PrimitiveInfo, mellin: &MellinSeries, f: &Poly) -> Result<Poly> {
    let vars = place_symbols(p);
    let l = Symbol::scale();
    let mut out = Poly::zero();
    let mut cache: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
    for (m, c) in f.terms() {
        let mut alpha = vec![0u32; vars.len()];
        let mut rest = Vec::new();
        for (s, e) in m.factors() {
            if let Some(k) = vars.iter().position(|v| v == s) {
                alpha[k] = *e;
            } else if s.is_scale_variable() {
                return Err(Error::ForeignVariable {
                    primitive: p.label.clone(),
                    variable: s.name().to_string(),
                });
            } else {
                rest.push((s.clone(), *e));
            }
        }
        let image = match cache.get(&alpha) {
            Some(img) => img.clone(),
            None => {
                let img = cocycle_on_monomial(mellin, &alpha, &l)?;
                cache.insert(alpha.clone(), img.clone());
                img
            }
        };
        out += &image.mul_monomial(&Monomial::from_factors(rest)).scale(c);
    }
    Ok(out)
}

/// `Σ_{β ≤ α} A_β ∏_e α_e^(β_e falling) L^{|α|-|β|+1} / (|α|-|β|+1)`.
fn cocycle_on_monomial(mellin: &MellinSeries, alpha: &[u32], l: &Symbol) -> Result<Poly> {
    let total: u32 = alpha.iter().sum();
    let mut out = Poly::zero();
    let mut beta = vec![0u32; alpha.len()];
    loop {
        let b: u32 = beta.iter().sum();
        let a = mellin.plain_coeff(&beta)?;
        if !a.is_zero() {
            let alpha_q: Vec<Rational> = alpha.iter().map(|&x| int(x as i64)).collect();
            let ff = falling_factorial(&alpha_q, &beta);
            let d = total - b + 1;
            let k = ff / int(d as i64);
            if !k.is_zero() {
                out += &a.scale(&k).mul_monomial(&Monomial::var(l.clone(), d));
            }
        }
        // next β ≤ α in odometer order
        let mut i = 0;
        while i < beta.len() && beta[i] == alpha[i] {
            beta[i] = 0;
            i += 1;
        }
        if i == beta.len() {
            break;
        }
        beta[i] += 1;
    }
    Ok(out)
}

/// `A_p(∂/∂u_e) f` restricted to the diagonal `u_e = L`.
pub fn diagonal_derivative(p: &PrimitiveInfo, mellin: &MellinSeries, f: &Poly) -> Result<Poly> {
    let vars = place_symbols(p);
    let l = Symbol::scale();
    let mut out = Poly::zero();
    for (m, c) in f.terms() {
        let alpha: Vec<u32> = vars.iter().map(|v| m.degree(v)).collect();
        let mut rest = m.clone();
        for v in &vars {
            rest = rest.without(v);
        }
        let total: u32 = alpha.iter().sum();
        for n in 0..=total {
            for beta in compositions(alpha.len(), n) {
                if beta.iter().zip(&alpha).any(|(b, a)| b > a) {
                    continue;
                }
                let alpha_q: Vec<Rational> = alpha.iter().map(|&x| int(x as i64)).collect();
                let ff = falling_factorial(&alpha_q, &beta);
                let a = mellin.plain_coeff(&beta)?;
                let term = a
                    .scale(&(ff * c))
                    .mul_monomial(&Monomial::var(l.clone(), total - n))
                    .mul_monomial(&rest);
                out += &term;
            }
        }
    }
    Ok(out)
}

/// `φ(t)` by recursion on the root: `φ(B̃₊^p(⊗ f_e)) = Λ_p(∏_e φ(f_e)|_{L → L_e})`.
pub fn phi_recursive(t: &Tree, alphabet: &Alphabet, mellin: &MellinMap) -> Result<Poly> {
    let p = alphabet.get(t.label())?;
    let l = Symbol::scale();
    let mut integrand = Poly::one();
    for (e, child) in t.children() {
        let sub = phi_recursive(child, alphabet, mellin)?;
        let renamed = sub.rename(&[(l.clone(), Symbol::place_scale(e))].into());
        integrand = &integrand * &renamed;
    }
    apply_cocycle(p, lookup(mellin, t.label())?, &integrand)
}

/// Both sides of `ΔΛ = Λ⊗1 + (id⊗Λ)δ` on `K[L]`, as polynomials in `L'`, `L''`.
///
/// `Δ` substitutes `L → L' + L''`; the coaction substitutes `L_e → L' + L_e`
/// before the cocycle integrates the `L_e` into `L''`.
pub fn cocycle_identity_sides(p: &PrimitiveInfo, mellin: &MellinSeries, f: &Poly) -> Result<(Poly, Poly)> {
    let l = Symbol::scale();
    let l1 = Symbol::new("L'");
    let l2 = Symbol::new("L''");
    let lam = apply_cocycle(p, mellin, f)?;
    let sum = &Poly::symbol(l1.clone()) + &Poly::symbol(l2.clone());
    let lhs = lam.substitute(&[(l.clone(), sum)].into())?;
    let first = lam.rename(&[(l.clone(), l1.clone())].into());
    let places = place_symbols(p);
    let temp: BTreeMap<Symbol, Symbol> = places
        .iter()
        .map(|v| (v.clone(), Symbol::new(format!("{}#", v.name()))))
        .collect();
    let shifted: BTreeMap<Symbol, Poly> = temp
        .iter()
        .map(|(v, t)| (v.clone(), &Poly::symbol(l1.clone()) + &Poly::symbol(t.clone())))
        .collect();
    let back: BTreeMap<Symbol, Symbol> = temp.into_iter().map(|(v, t)| (t, v)).collect();
    let coacted = f.substitute(&shifted)?.rename(&back);
    let second = apply_cocycle(p, mellin, &coacted)?.rename(&[(l, l2)].into());
    Ok((lhs, &first + &second))
}

pub fn cocycle_identity_check(p: &PrimitiveInfo, mellin: &MellinSeries, f: &Poly) -> Result<bool> {
    let (lhs, rhs) = cocycle_identity_sides(p, mellin, f)?;
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::enumerate_trees;
    use crate::trees::tests::{ladder, one_prim};
    use proptest::prelude::*;

    fn p(s: &str) -> Poly {
        s.parse().unwrap()
    }

    fn single() -> PrimitiveInfo {
        PrimitiveInfo::new("p", 1, 0, vec![("e", vec![int(1)])])
    }

    fn double() -> PrimitiveInfo {
        PrimitiveInfo::new("p", 1, 0, vec![("e1", vec![int(1)]), ("e2", vec![int(1)])])
    }

    fn ones(q: &PrimitiveInfo, n: u32) -> MellinSeries {
        MellinSeries::constant(q, n, Poly::one())
    }

    #[test]
    fn symbol_names() {
        assert_eq!(mellin_symbol("p", &[2]).name(), "a[p][2]");
        assert_eq!(mellin_symbol("p", &[0, 2]).name(), "a[p][0,2]");
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn cocycle_examples() {
        let q = single();
        let m = MellinSeries::symbolic(&q, 4);
        assert_eq!(apply_cocycle(&q, &m, &Poly::one()).unwrap(), p("a[p][0]*L"));
        let one = ones(&q, 6);
        for n in 0..5u32 {
            let f = Poly::var("L.e").pow(n);
            let expect = Poly::var("L").pow(n + 1).scale(&Rational::new(1.into(), (n + 1).into()));
            assert_eq!(apply_cocycle(&q, &one, &f).unwrap(), expect);
        }
        let d = double();
        let mut plain = BTreeMap::new();
        plain.insert(vec![0, 0], p("b00"));
        plain.insert(vec![1, 0], p("b10"));
        plain.insert(vec![0, 1], p("b01"));
        let m = MellinSeries::from_plain(&d, 2, &plain);
        assert_eq!(
            apply_cocycle(&d, &m, &p("L.e1")).unwrap(),
            p("b00*L^2/2 + b10*L")
        );
    }

    #[test]
    fn foreign_variables_are_rejected() {
        let q = single();
        let m = MellinSeries::symbolic(&q, 2);
        assert!(matches!(
            apply_cocycle(&q, &m, &p("L")),
            Err(Error::ForeignVariable { .. })
        ));
        assert!(apply_cocycle(&q, &m, &p("L.f")).is_err());
        assert!(apply_cocycle(&q, &m, &p("b*L.e")).is_ok());
    }

    #[test]
    fn mellin_truncation_is_enforced() {
        let q = single();
        let m = MellinSeries::symbolic(&q, 1);
        assert!(matches!(
            apply_cocycle(&q, &m, &p("L.e^2")),
            Err(Error::MellinTruncation { needed: 2, .. })
        ));
    }

    #[test]
    fn phi_examples() {
        let alpha = one_prim(&["e"]);
        let mellin = symbolic_mellin(&alpha, 4);
        assert_eq!(
            phi_recursive(&Tree::leaf("p"), &alpha, &mellin).unwrap(),
            p("a[p][0]*L")
        );
        assert_eq!(
            phi_recursive(&ladder(2), &alpha, &mellin).unwrap(),
            p("a[p][0]*a[p][1]*L + a[p][0]^2*L^2/2")
        );
    }

    #[test]
    fn integral_cocycle_gives_linear_extensions() {
        let alpha = one_prim(&["e"]);
        let q = alpha.get("p").unwrap().clone();
        let mellin: MellinMap = [("p".to_string(), ones(&q, 8))].into();
        for t in enumerate_trees(&alpha, 6, None) {
            let n = t.size() as u32;
            let e = Rational::from_integer(t.linear_extension_count());
            let f = Rational::from_integer(crate::poly::factorial(n));
            let expect = Poly::var("L").pow(n).scale(&(e / f));
            assert_eq!(phi_recursive(&t, &alpha, &mellin).unwrap(), expect, "{t}");
        }
    }

    #[test]
    fn cocycle_identity_examples() {
        let q = single();
        let m = MellinSeries::symbolic(&q, 2);
        assert!(cocycle_identity_check(&q, &m, &Poly::one()).unwrap());
        assert!(cocycle_identity_check(&q, &m, &p("L.e")).unwrap());
        let d = double();
        let m = MellinSeries::symbolic(&d, 2);
        assert!(cocycle_identity_check(&d, &m, &p("L.e1*L.e2")).unwrap());
    }

    #[test]
    fn cocycle_identity_on_all_small_monomials() {
        for q in [single(), double()] {
            let m = MellinSeries::symbolic(&q, 5);
            let vars = place_symbols(&q);
            for n in 0..=5 {
                for alpha in compositions(vars.len(), n) {
                    let f = Poly::term(int(1), Monomial::from_factors(vars.iter().cloned().zip(alpha)));
                    assert!(cocycle_identity_check(&q, &m, &f).unwrap(), "{f}");
                }
            }
        }
    }

    #[test]
    fn phi_is_multiplicative_over_children() {
        // φ of a forest is the product, so a root over k copies of t sees φ(t)^k
        let alpha = one_prim(&["e"]);
        let mellin = symbolic_mellin(&alpha, 4);
        let q = alpha.get("p").unwrap();
        let t = ladder(2);
        let two = Tree::new("p", vec![("e".into(), t.clone()), ("e".into(), t.clone())]);
        let phi_t = phi_recursive(&t, &alpha, &mellin).unwrap().rename(&[(Symbol::scale(), Symbol::place_scale("e"))].into());
        let expect = apply_cocycle(q, &mellin["p"], &(&phi_t * &phi_t)).unwrap();
        assert_eq!(phi_recursive(&two, &alpha, &mellin).unwrap(), expect);
    }

    fn small_poly_in(vars: Vec<Symbol>) -> impl Strategy<Value = Poly> {
        let k = vars.len();
        proptest::collection::vec(((-4i64..=4), proptest::collection::vec(0u32..3, k)), 0..4).prop_map(
            move |terms| {
                let mut f = Poly::zero();
                for (c, alpha) in terms {
                    f.add_term(Monomial::from_factors(vars.iter().cloned().zip(alpha)), int(c));
                }
                f
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn derivative_law(f in small_poly_in(place_symbols(&double()))) {
            let d = double();
            let m = MellinSeries::symbolic(&d, 6);
            let lam = apply_cocycle(&d, &m, &f).unwrap();
            prop_assert_eq!(lam.derivative(&Symbol::scale()), diagonal_derivative(&d, &m, &f).unwrap());
        }

        #[test]
        fn boring_cocycle_is_a_single_place_cocycle(f in small_poly_in(place_symbols(&double()))) {
            // A(ρ1, ρ2) = B(ρ1 + ρ2): the operator only sees f on the diagonal
            let d = double();
            let boring = MellinSeries::symbolic_boring(&d, 6);
            let s = single();
            let mut b = MellinSeries::empty(&s, 6);
            for n in 0..=6 {
                b.set(vec![n], Poly::symbol(boring_symbol("p", n)));
            }
            let lhs = apply_cocycle(&d, &boring, &f).unwrap();
            let diag = f.substitute(&[
                (Symbol::place_scale("e1"), Poly::symbol(Symbol::place_scale("e"))),
                (Symbol::place_scale("e2"), Poly::symbol(Symbol::place_scale("e"))),
            ].into()).unwrap();
            prop_assert_eq!(lhs, apply_cocycle(&s, &b, &diag).unwrap());
            prop_assert!(boring.depends_only_on_total_degree());
        }

        #[test]
        fn boring_cocycle_ignores_place_choice(f in small_poly_in(vec![Symbol::place_scale("e1"), Symbol::place_scale("e2")])) {
            let d = double();
            let boring = MellinSeries::symbolic_boring(&d, 6);
            let swapped = f.rename(&[
                (Symbol::place_scale("e1"), Symbol::place_scale("e2")),
                (Symbol::place_scale("e2"), Symbol::place_scale("e1")),
            ].into());
            prop_assert_eq!(apply_cocycle(&d, &boring, &f).unwrap(), apply_cocycle(&d, &boring, &swapped).unwrap());
        }
    }
}
