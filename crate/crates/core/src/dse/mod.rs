//! Dyson-Schwinger systems: combinatorial and analytic solvers, invariant
//! charge, renormalization group and anomalous-dimension checks, and the
//! quasi-linear reduction.
//!
//! A system has equations `I`, primitives `p` with weight `w_p`, equation
//! `i(p)` and places `E_p`, each place carrying an exponent vector `μ_e ∈ Q^I`:
//!
//! `G_i(x, L) = 1 + Σ_{p ∈ P_i} x^{w_p} Λ_p(∏_{e ∈ E_p} ∏_j G_j(x, L_e)^{μ_{e,j}})`.

mod counterexample;
mod io;

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::cocycle::{apply_cocycle, compositions, phi_recursive, MellinMap, MellinSeries};
use crate::error::{Error, Result};
use crate::hopf::{b_plus, ForestLC};
use crate::poly::{falling_factorial, int, Poly, Rational, Symbol};
use crate::series::{Coefficient, XSeries};
use crate::trees::{trees_by_weight, Alphabet, Forest, PrimitiveInfo, Tree};
use crate::tubings::TubingEvaluator;

pub use counterexample::{counterexample_report, CounterexampleReport, OrderOutcome};

/// Per-equation tree series `T_i(x)`.
pub type TreeSeries = Vec<XSeries<ForestLC>>;
/// Per-equation Green functions `G_i(x, L)`.
pub type GreenSeries = Vec<XSeries<Poly>>;

/// `μ_e = u_e 1_{i(p)} + w_e s` for every place, with `Σ u_e = 1`, `Σ w_e = w_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChargeStructure {
    pub s: Vec<Rational>,
    /// `(primitive, place) -> (u_e, w_e)`.
    pub split: BTreeMap<(String, String), (Rational, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DseSpec {
    pub equations: Vec<String>,
    pub alphabet: Alphabet,
    pub mellin: MellinMap,
    pub order: usize,
    pub charge: Option<ChargeStructure>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCharge {
    pub q: XSeries<ForestLC>,
    pub s: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaBeta {
    pub gamma: Vec<XSeries<Poly>>,
    pub beta: Option<XSeries<Poly>>,
}

/// Mellin truncation needed for x-order `n`.
pub fn mellin_truncation(order: usize) -> u32 {
    order.saturating_sub(1) as u32
}

impl DseSpec {
    pub fn new(
        equations: Vec<String>,
        primitives: Vec<PrimitiveInfo>,
        mellin: MellinMap,
        order: usize,
        charge: Option<ChargeStructure>,
    ) -> Result<DseSpec> {
        let spec = DseSpec {
            equations,
            alphabet: Alphabet::new(primitives)?,
            mellin,
            order,
            charge,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with fresh symbolic Mellin coefficients `a[p][α]`.
    pub fn symbolic(
        equations: Vec<String>,
        primitives: Vec<PrimitiveInfo>,
        order: usize,
        charge: Option<ChargeStructure>,
    ) -> Result<DseSpec> {
        let mellin = primitives
            .iter()
            .map(|p| (p.label.clone(), MellinSeries::symbolic(p, mellin_truncation(order))))
            .collect();
        DseSpec::new(equations, primitives, mellin, order, charge)
    }

    pub fn primitives(&self) -> &[PrimitiveInfo] {
        self.alphabet.primitives()
    }

    pub fn validate(&self) -> Result<()> {
        let n_eq = self.equations.len();
        if n_eq == 0 {
            return Err(invalid("/equations", "at least one equation is required"));
        }
        for (k, e) in self.equations.iter().enumerate() {
            if self.equations[..k].contains(e) {
                return Err(invalid(&format!("/equations/{k}"), "duplicate equation id"));
            }
        }
        for (k, p) in self.primitives().iter().enumerate() {
            let ptr = format!("/primitives/{k}");
            if p.equation >= n_eq {
                return Err(invalid(&ptr, "equation index out of range"));
            }
            for (j, e) in p.places.iter().enumerate() {
                if e.mu.len() != n_eq {
                    return Err(invalid(
                        &format!("{ptr}/places/{j}/mu"),
                        "exponent vector length must equal the number of equations",
                    ));
                }
            }
            let m = self
                .mellin
                .get(&p.label)
                .ok_or_else(|| Error::MissingMellin(p.label.clone()))?;
            if m.arity != p.places.len() {
                return Err(invalid(&format!("{ptr}/mellin"), "Mellin arity differs from place count"));
            }
            let need = mellin_truncation(self.order);
            if m.truncation < need {
                return Err(Error::MellinTruncation {
                    primitive: p.label.clone(),
                    truncation: m.truncation as usize,
                    needed: need as usize,
                });
            }
            if m.boring && !m.depends_only_on_total_degree() {
                return Err(invalid(
                    &format!("{ptr}/mellin"),
                    "boring series must depend only on the total degree",
                ));
            }
        }
        if self.mellin.len() != self.primitives().len() {
            let extra = self
                .mellin
                .keys()
                .find(|k| self.alphabet.position(k).is_none())
                .cloned()
                .unwrap_or_default();
            return Err(Error::UnknownPrimitive(extra));
        }
        if let Some(c) = &self.charge {
            self.validate_charge(c)?;
        }
        Ok(())
    }

    fn validate_charge(&self, c: &ChargeStructure) -> Result<()> {
        let n_eq = self.equations.len();
        if c.s.len() != n_eq {
            return Err(Error::InvalidCharge("s must have one entry per equation".into()));
        }
        for key in c.split.keys() {
            let p = self.alphabet.get(&key.0)?;
            if p.place_index(&key.1).is_none() {
                return Err(Error::UnknownPlace {
                    primitive: key.0.clone(),
                    place: key.1.clone(),
                });
            }
        }
        for p in self.primitives() {
            let mut u_sum = Rational::zero();
            let mut w_sum = 0u32;
            for e in &p.places {
                let (u, w) = c
                    .split
                    .get(&(p.label.clone(), e.name.clone()))
                    .ok_or_else(|| {
                        Error::InvalidCharge(format!("no split given for {}.{}", p.label, e.name))
                    })?;
                u_sum += u;
                w_sum += w;
                for j in 0..n_eq {
                    let mut expect = &c.s[j] * int(*w as i64);
                    if j == p.equation {
                        expect += u;
                    }
                    if expect != e.mu[j] {
                        return Err(Error::InvalidCharge(format!(
                            "{}.{}: exponent {} for equation {} is not u + w s = {}",
                            p.label, e.name, e.mu[j], self.equations[j], expect
                        )));
                    }
                }
            }
            if !u_sum.is_one() {
                return Err(Error::InvalidCharge(format!("{}: u values sum to {u_sum}, not 1", p.label)));
            }
            if w_sum != p.weight {
                return Err(Error::InvalidCharge(format!(
                    "{}: w values sum to {w_sum}, not the weight {}",
                    p.label, p.weight
                )));
            }
        }
        Ok(())
    }

    /// Single-place charge `u = 1`, `w = w_p`, forced when every primitive has one place.
    pub fn single_place_charge(primitives: &[PrimitiveInfo], s: Vec<Rational>) -> ChargeStructure {
        let split = primitives
            .iter()
            .flat_map(|p| {
                p.places
                    .iter()
                    .map(move |e| ((p.label.clone(), e.name.clone()), (Rational::one(), p.weight)))
            })
            .collect();
        ChargeStructure { s, split }
    }

    pub fn with_order(&self, order: usize) -> Result<DseSpec> {
        let mut s = self.clone();
        s.order = order;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        io::spec_to_json(self)
    }

    pub fn from_json_str(text: &str) -> Result<DseSpec> {
        io::spec_from_json_str(text)
    }
}

fn invalid(pointer: &str, msg: &str) -> Error {
    Error::InvalidSpec {
        pointer: pointer.to_string(),
        msg: msg.to_string(),
    }
}

/// Order-by-order solution of `X_i = 1 + Σ_p x^{w_p} apply_p(⊗_e ∏_j X_j^{μ_{e,j}})`.
/// `relabel` moves a coefficient into the slot of place `e` before `apply`.
fn iterate_system<R: Coefficient>(
    spec: &DseSpec,
    relabel: &dyn Fn(&R, &str) -> R,
    apply: &dyn Fn(&PrimitiveInfo, &[R]) -> Result<R>,
) -> Result<Vec<XSeries<R>>> {
    let n_eq = spec.equations.len();
    let big_n = spec.order;
    let mut sol: Vec<XSeries<R>> = vec![XSeries::one(big_n); n_eq];
    for n in 1..=big_n {
        let known: Vec<XSeries<R>> = sol.iter().map(|s| s.truncate(n - 1)).collect();
        let mut powers: HashMap<(usize, Rational), XSeries<R>> = HashMap::new();
        let mut fresh = vec![R::zero(); n_eq];
        for p in spec.primitives() {
            if p.weight as usize > n {
                continue;
            }
            let m = n - p.weight as usize;
            let mut slots: Vec<Vec<R>> = Vec::with_capacity(p.places.len());
            for e in &p.places {
                let mut factor = XSeries::one(n - 1);
                for (j, mu) in e.mu.iter().enumerate() {
                    if mu.is_zero() {
                        continue;
                    }
                    let key = (j, mu.clone());
                    if !powers.contains_key(&key) {
                        powers.insert(key.clone(), known[j].pow_rational(mu)?);
                    }
                    factor = factor.mul(&powers[&key])?;
                }
                slots.push(factor.coeffs()[..=m].iter().map(|c| relabel(c, &e.name)).collect());
            }
            let mut acc = R::zero();
            for degrees in compositions(p.places.len(), m as u32) {
                let args: Vec<R> = degrees
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| slots[k][d as usize].clone())
                    .collect();
                if args.iter().any(R::is_zero) {
                    continue;
                }
                acc = acc.add(&apply(p, &args)?);
            }
            fresh[p.equation] = fresh[p.equation].add(&acc);
        }
        for (i, c) in fresh.into_iter().enumerate() {
            sol[i].set_coeff(n, c);
        }
    }
    Ok(sol)
}

/// `T_i = 1 + Σ_{p ∈ P_i} x^{w_p} B̃₊^{(p)}(⊗_e ∏_j T_j^{μ_{e,j}})` by fixed-point iteration.
pub fn solve_combinatorial_fixpoint(spec: &DseSpec) -> Result<TreeSeries> {
    iterate_system::<ForestLC>(spec, &|c, _| c.clone(), &|p, args| b_plus(p, args))
}

/// `∏_v ∏_e μ_e^{od(v,e) falling} / |Aut(t)|`, where `od(v, e)` counts the
/// children at place `e` by the equation of their label.
pub fn tree_weight(t: &Tree, spec: &DseSpec) -> Result<Rational> {
    let mut acc = Rational::one();
    accumulate_falling(t, spec, &mut acc)?;
    Ok(acc / Rational::from_integer(t.aut_order()))
}

fn accumulate_falling(t: &Tree, spec: &DseSpec, acc: &mut Rational) -> Result<()> {
    let p = spec.alphabet.get(t.label())?;
    let n_eq = spec.equations.len();
    for e in &p.places {
        let mut od = vec![0u32; n_eq];
        for (f, c) in t.children() {
            if **f == *e.name {
                od[spec.alphabet.get(c.label())?.equation] += 1;
            }
        }
        *acc *= falling_factorial(&e.mu, &od);
        if acc.is_zero() {
            return Ok(());
        }
    }
    for (_, c) in t.children() {
        accumulate_falling(c, spec, acc)?;
        if acc.is_zero() {
            return Ok(());
        }
    }
    Ok(())
}

/// Trees of weight `1..=order` with nonzero closed-form weight, as
/// `(equation, weight, tree, coefficient)`, in enumeration order.
pub fn weighted_trees(spec: &DseSpec) -> Result<Vec<(usize, usize, Tree, Rational)>> {
    let by_weight = trees_by_weight(&spec.alphabet, spec.order as u32);
    let mut out = Vec::new();
    for (w, trees) in by_weight.into_iter().enumerate() {
        for t in trees {
            let c = tree_weight(&t, spec)?;
            if !c.is_zero() {
                let i = spec.alphabet.get(t.label())?.equation;
                out.push((i, w, t, c));
            }
        }
    }
    Ok(out)
}

/// Closed-form tree sums `T_i = 1 + Σ_t weight(t) t x^{w(t)}`.
pub fn solve_combinatorial_closed(spec: &DseSpec) -> Result<TreeSeries> {
    let mut sol: TreeSeries = vec![XSeries::one(spec.order); spec.equations.len()];
    for (i, w, t, c) in weighted_trees(spec)? {
        let mut coeff = sol[i].coeff(w).clone();
        coeff.add_term(Forest::single(t), &Poly::constant(c));
        sol[i].set_coeff(w, coeff);
    }
    Ok(sol)
}

/// `G_i` by fixed-point iteration of the analytic system.
pub fn solve_analytic_oracle(spec: &DseSpec) -> Result<GreenSeries> {
    let l = Symbol::scale();
    let relabel = |c: &Poly, e: &str| c.rename(&[(l.clone(), Symbol::place_scale(e))].into());
    let apply = |p: &PrimitiveInfo, args: &[Poly]| {
        let mut prod = Poly::one();
        for a in args {
            prod = &prod * a;
        }
        let m = spec
            .mellin
            .get(&p.label)
            .ok_or_else(|| Error::MissingMellin(p.label.clone()))?;
        apply_cocycle(p, m, &prod)
    };
    iterate_system::<Poly>(spec, &relabel, &apply)
}

/// Sums `weight(t) φ(t) x^{w(t)}` over trees, evaluating `φ` in parallel.
fn tree_sum(spec: &DseSpec, phi: &(dyn Fn(&Tree) -> Result<Poly> + Sync)) -> Result<GreenSeries> {
    let items = weighted_trees(spec)?;
    let values: Vec<Poly> = items
        .par_iter()
        .map(|(_, _, t, c)| phi(t).map(|v| v.scale(c)))
        .collect::<Result<_>>()?;
    let mut sol: GreenSeries = vec![XSeries::one(spec.order); spec.equations.len()];
    for ((i, w, _, _), v) in items.iter().zip(values) {
        let c = sol[*i].coeff(*w) + &v;
        sol[*i].set_coeff(*w, c);
    }
    Ok(sol)
}

/// `G_i` from the tubing expansion of every tree.
pub fn solve_analytic_tubing(spec: &DseSpec) -> Result<GreenSeries> {
    let ev = TubingEvaluator::new(&spec.alphabet, &spec.mellin);
    tree_sum(spec, &|t| ev.phi(t))
}

/// `G_i` from the recursive Feynman rules applied to every tree.
pub fn solve_analytic_recursive(spec: &DseSpec) -> Result<GreenSeries> {
    tree_sum(spec, &|t| phi_recursive(t, &spec.alphabet, &spec.mellin))
}

/// Applies `φ` (multiplicative on forests) coefficientwise to tree series.
pub fn phi_image(series: &TreeSeries, spec: &DseSpec) -> Result<GreenSeries> {
    let ev = TubingEvaluator::new(&spec.alphabet, &spec.mellin);
    series
        .iter()
        .map(|s| {
            let coeffs = s
                .coeffs()
                .iter()
                .map(|lc| {
                    let mut acc = Poly::zero();
                    for (f, c) in lc.terms() {
                        let mut v = c.clone();
                        for t in f.trees() {
                            v = &v * &ev.phi(t)?;
                        }
                        acc += &v;
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(XSeries::from_coeffs(s.truncation(), coeffs))
        })
        .collect()
}

fn charge_of(spec: &DseSpec) -> Result<&ChargeStructure> {
    spec.charge.as_ref().ok_or(Error::MissingCharge)
}

/// `Q(x) = x ∏_i T_i(x)^{s_i}`.
pub fn invariant_charge(spec: &DseSpec) -> Result<InvariantCharge> {
    let c = charge_of(spec)?;
    let t = solve_combinatorial_closed(spec)?;
    let mut prod = XSeries::one(spec.order);
    for (ti, si) in t.iter().zip(&c.s) {
        if !si.is_zero() {
            prod = prod.mul(&ti.pow_rational(si)?)?;
        }
    }
    Ok(InvariantCharge {
        q: prod.shift(1),
        s: c.s.clone(),
    })
}

/// `γ_i = [L^1] G_i`; `β = Σ_i s_i x γ_i` when the spec has a charge structure.
pub fn extract_gamma_beta(g: &GreenSeries, spec: &DseSpec) -> GammaBeta {
    let l = Symbol::scale();
    let gamma: Vec<XSeries<Poly>> = g.iter().map(|gi| gi.map(|c| c.coeff_in(&l, 1))).collect();
    let beta = spec.charge.as_ref().map(|c| {
        let n = g.first().map(|s| s.truncation()).unwrap_or(spec.order);
        let mut b = XSeries::zero(n);
        for (gi, si) in gamma.iter().zip(&c.s) {
            b = b.add(&gi.scale(si)).expect("equal truncations");
        }
        b.shift(1)
    });
    GammaBeta { gamma, beta }
}

/// `(∂_L − β ∂_x − γ_i) G_i`, truncated at `N − 1`.
pub fn check_rge(g: &GreenSeries, gb: &GammaBeta, spec: &DseSpec) -> Result<GreenSeries> {
    charge_of(spec)?;
    let beta = gb.beta.as_ref().ok_or(Error::MissingCharge)?;
    let l = Symbol::scale();
    g.iter()
        .zip(&gb.gamma)
        .map(|(gi, gamma)| {
            let n = gi.truncation();
            if n == 0 {
                return Ok(XSeries::zero(0));
            }
            let m = n - 1;
            let dl = gi.map(|c| c.derivative(&l)).truncate(m);
            let dx = gi.derivative_x();
            let flow = beta.truncate(m).mul(&dx)?;
            let anomalous = gamma.truncate(m).mul(&gi.truncate(m))?;
            dl.sub(&flow)?.sub(&anomalous)
        })
        .collect()
}

/// `Σ_k A_{i,k}(β ∂_x + γ_i) x^k − γ_i`, with `A_{i,k}` the sum of the Mellin
/// series of the weight-`k` primitives of equation `i`.
pub fn check_gamma_equation(spec: &DseSpec, g: &GreenSeries) -> Result<Vec<XSeries<Poly>>> {
    charge_of(spec)?;
    for p in spec.primitives() {
        if p.places.len() != 1 {
            return Err(Error::MultiPlaceGamma(p.label.clone()));
        }
    }
    let gb = extract_gamma_beta(g, spec);
    let beta = gb.beta.as_ref().ok_or(Error::MissingCharge)?;
    let n = spec.order;
    let mut out = Vec::new();
    for (i, gamma) in gb.gamma.iter().enumerate() {
        let op = |h: &XSeries<Poly>| -> Result<XSeries<Poly>> {
            // β = O(x^2), so padding h' back to order N loses nothing
            let dh = XSeries::from_coeffs(n, h.derivative_x().into_coeffs());
            beta.mul(&dh)?.add(&gamma.mul(h)?)
        };
        let mut total = XSeries::zero(n);
        let mut by_weight: BTreeMap<u32, Vec<Poly>> = BTreeMap::new();
        for p in spec.primitives().iter().filter(|p| p.equation == i) {
            let m = &spec.mellin[&p.label];
            let entry = by_weight
                .entry(p.weight)
                .or_insert_with(|| vec![Poly::zero(); n + 1]);
            for (k, slot) in entry.iter_mut().enumerate() {
                if k as u32 <= m.truncation {
                    *slot += &m.plain_coeff(&[k as u32])?;
                }
            }
        }
        for (k, coeffs) in by_weight {
            let mut h = XSeries::monomial(n, k as usize, Poly::one());
            for a in coeffs.iter().take(n + 1) {
                if h.is_zero() {
                    break;
                }
                total = total.add(&h.mul_coeff(a))?;
                h = op(&h)?;
            }
        }
        out.push(total.sub(gamma)?);
    }
    Ok(out)
}

/// `γ_i − Σ_{p ∈ P_i} x^{w_p} A_p(μ_e γ_i : e ∈ E_p)` for quasi-linear systems
/// (`β = 0`); linear single-place systems are the case `μ = 1`.
pub fn check_gamma_functional(spec: &DseSpec, g: &GreenSeries) -> Result<Vec<XSeries<Poly>>> {
    let gb = extract_gamma_beta(g, spec);
    let n = spec.order;
    let mut out = Vec::new();
    for (i, gamma) in gb.gamma.iter().enumerate() {
        let mut gpow = vec![XSeries::one(n)];
        for k in 1..=n {
            let next = gpow[k - 1].mul(gamma)?;
            gpow.push(next);
        }
        let mut total = XSeries::zero(n);
        for p in spec.primitives().iter().filter(|p| p.equation == i) {
            let mu = quasi_linear_exponents(p)?;
            let m = &spec.mellin[&p.label];
            let w = p.weight as usize;
            if w > n {
                continue;
            }
            for deg in 0..=(n - w) as u32 {
                let mut c = Poly::zero();
                for alpha in compositions(p.places.len(), deg) {
                    let mut scale = Rational::one();
                    for (mu_e, &a) in mu.iter().zip(&alpha) {
                        for _ in 0..a {
                            scale *= mu_e;
                        }
                    }
                    c += &m.plain_coeff(&alpha)?.scale(&scale);
                }
                total = total.add(&gpow[deg as usize].mul_coeff(&c).shift(w))?;
            }
        }
        out.push(gamma.sub(&total)?);
    }
    Ok(out)
}

/// The scalar exponents `μ_{e,i(p)}` if they sum to 1 and `μ_{e,j} = 0` for `j ≠ i(p)`.
fn quasi_linear_exponents(p: &PrimitiveInfo) -> Result<Vec<Rational>> {
    let mut sum = Rational::zero();
    let mut out = Vec::new();
    for e in &p.places {
        for (j, m) in e.mu.iter().enumerate() {
            if j != p.equation && !m.is_zero() {
                return Err(Error::NotQuasiLinear(format!(
                    "{}.{} couples to another equation",
                    p.label, e.name
                )));
            }
        }
        sum += &e.mu[p.equation];
        out.push(e.mu[p.equation].clone());
    }
    if !sum.is_one() {
        return Err(Error::NotQuasiLinear(format!(
            "{}: exponents sum to {sum}, not 1",
            p.label
        )));
    }
    Ok(out)
}

/// Single-place linear spec with `Ã_p(L) = A_p(μ_e L : e ∈ E_p)`.
///
/// Restricted to single-equation specs.
pub fn quasilinear_reduce(spec: &DseSpec) -> Result<DseSpec> {
    if spec.equations.len() != 1 {
        return Err(Error::NotQuasiLinear(
            "the reduction is implemented for single equations".into(),
        ));
    }
    let mut prims = Vec::new();
    let mut mellin = MellinMap::new();
    for p in spec.primitives() {
        let mu = quasi_linear_exponents(p)?;
        let m = &spec.mellin[&p.label];
        let (reduced, place) = if p.places.len() == 1 {
            (p.clone(), p.places[0].name.clone())
        } else {
            let q = PrimitiveInfo::new(&p.label, p.weight, 0, vec![("e", vec![Rational::one()])]);
            (q, "e".to_string())
        };
        let mut series = MellinSeries::empty(&reduced, m.truncation);
        for deg in 0..=m.truncation {
            let mut c = Poly::zero();
            for alpha in compositions(p.places.len(), deg) {
                let mut scale = Rational::one();
                for (mu_e, &a) in mu.iter().zip(&alpha) {
                    for _ in 0..a {
                        scale *= mu_e;
                    }
                }
                c += &m.plain_coeff(&alpha)?.scale(&scale);
            }
            series.set(vec![deg], c);
        }
        mellin.insert(p.label.clone(), series);
        let _ = place;
        prims.push(reduced);
    }
    let charge = DseSpec::single_place_charge(&prims, vec![Rational::zero()]);
    DseSpec::new(spec.equations.clone(), prims, mellin, spec.order, Some(charge))
}
