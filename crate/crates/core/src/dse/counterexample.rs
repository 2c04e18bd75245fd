//! Two-place equation with both exponents `-1` against the single-place
//! equation with exponent `-2`: order-by-order matching of Mellin
//! coefficients and the obstruction at `x^4`.

use std::collections::BTreeMap;

use super::{solve_analytic_oracle, DseSpec};
use crate::cocycle::{compositions, MellinMap, MellinSeries};
use crate::error::{Error, Result};
use crate::poly::{int, Poly, Symbol};
use crate::series::XSeries;
use crate::trees::PrimitiveInfo;

const HAT_G: [&str; 5] = [
    "1",
    "L*b[0,0]",
    "-(L^2*b[0,0]^2 + L*b[0,0]*(b[0,1] + b[1,0]))",
    "5/3*L^3*b[0,0]^3 + 7/2*L^2*b[0,0]^2*(b[0,1] + b[1,0]) \
     + L*b[0,0]*(b[0,1]^2 + 4*b[0,0]*b[0,2] + 2*b[0,1]*b[1,0] + b[1,0]^2 + b[0,0]*b[1,1] + 4*b[0,0]*b[2,0])",
    "-(10/3*L^4*b[0,0]^4 + 11*L^3*b[0,0]^3*(b[0,1] + b[1,0]) \
     + L^2*b[0,0]^2*(15/2*b[0,1]^2 + 20*b[0,0]*b[0,2] + 15*b[0,1]*b[1,0] + 15/2*b[1,0]^2 + 5*b[0,0]*b[1,1] + 20*b[0,0]*b[2,0]) \
     + L*b[0,0]*(b[0,1]^3 + 15*b[0,0]*b[0,1]*b[0,2] + 28*b[0,0]^2*b[0,3] + 3*b[0,1]^2*b[1,0] + 15*b[0,0]*b[0,2]*b[1,0] \
     + 3*b[0,1]*b[1,0]^2 + b[1,0]^3 + 3*b[0,0]*b[0,1]*b[1,1] + 3*b[0,0]*b[1,0]*b[1,1] + 4*b[0,0]^2*b[1,2] \
     + 15*b[0,0]*b[0,1]*b[2,0] + 15*b[0,0]*b[1,0]*b[2,0] + 4*b[0,0]^2*b[2,1] + 28*b[0,0]^2*b[3,0]))",
];

const G: [&str; 5] = [
    "1",
    "L*a[0]",
    "-(L^2*a[0]^2 + 2*L*a[0]*a[1])",
    "5/3*L^3*a[0]^3 + 7*L^2*a[0]^2*a[1] + L*a[0]*(4*a[1]^2 + 10*a[0]*a[2])",
    "-(10/3*L^4*a[0]^4 + 22*L^3*a[0]^3*a[1] + L^2*a[0]^2*(30*a[1]^2 + 50*a[0]*a[2]) \
     + L*a[0]*(8*a[1]^3 + 72*a[0]*a[1]*a[2] + 80*a[0]^2*a[3]))",
];

const SUBSTITUTIONS: [(&str, &str); 3] = [
    ("a[0]", "b[0,0]"),
    ("a[1]", "(b[1,0] + b[0,1])/2"),
    ("a[2]", "(4*b[0,2] + b[1,1] + 4*b[2,0])/10"),
];

const RESIDUAL: &str = "1/5*(3*b[0,1]*b[0,2] + 140*b[0,0]*b[0,3] + 3*b[0,2]*b[1,0] - 3*b[0,1]*b[1,1] \
     - 3*b[1,0]*b[1,1] + 20*b[0,0]*b[1,2] + 3*b[0,1]*b[2,0] + 3*b[1,0]*b[2,0] + 20*b[0,0]*b[2,1] \
     + 140*b[0,0]*b[3,0] - 400*b[0,0]*a[3])*L*b[0,0]^2";

#[derive(Clone, Debug, PartialEq)]
pub enum OrderOutcome {
    /// `a[n-1]` is a polynomial in the `b`.
    Solved { order: usize, symbol: Symbol, value: Poly },
    /// The `x^n` difference `G - Ĝ` after all earlier substitutions.
    Obstructed { order: usize, residual: Poly },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub order: usize,
    pub hat_g: XSeries<Poly>,
    pub g: XSeries<Poly>,
    pub outcomes: Vec<OrderOutcome>,
    pub hat_g_matches: bool,
    pub g_matches: bool,
    pub substitutions_match: bool,
    pub residual_matches: bool,
}

impl CounterexampleReport {
    pub fn all_match(&self) -> bool {
        self.hat_g_matches && self.g_matches && self.substitutions_match && self.residual_matches
    }

    pub fn residual(&self) -> Option<&Poly> {
        self.outcomes.iter().find_map(|o| match o {
            OrderOutcome::Obstructed { residual, .. } => Some(residual),
            _ => None,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let outcomes: Vec<_> = self
            .outcomes
            .iter()
            .map(|o| match o {
                OrderOutcome::Solved { order, symbol, value } => serde_json::json!({
                    "order": order, "status": "solved", "symbol": symbol.name(), "value": value.to_string()
                }),
                OrderOutcome::Obstructed { order, residual } => serde_json::json!({
                    "order": order, "status": "obstructed", "residual": residual.to_string()
                }),
            })
            .collect();
        serde_json::json!({
            "order": self.order,
            "hatG": self.hat_g.to_json(),
            "G": self.g.to_json(),
            "outcomes": outcomes,
            "checks": {
                "hatG": self.hat_g_matches,
                "G": self.g_matches,
                "substitutions": self.substitutions_match,
                "residual": self.residual_matches,
            },
        })
    }
}

fn b(i: u32, j: u32) -> Poly {
    Poly::symbol(Symbol::new(format!("b[{i},{j}]")))
}

fn a_sym(n: usize) -> Symbol {
    Symbol::new(format!("a[{n}]"))
}

fn two_place_spec(order: usize) -> Result<DseSpec> {
    let p = PrimitiveInfo::new("p", 1, 0, vec![("r1", vec![int(-1)]), ("r2", vec![int(-1)])]);
    let trunc = super::mellin_truncation(order);
    let mut plain = BTreeMap::new();
    for n in 0..=trunc {
        for alpha in compositions(2, n) {
            plain.insert(alpha.clone(), b(alpha[0], alpha[1]));
        }
    }
    let mellin: MellinMap = [("p".to_string(), MellinSeries::from_plain(&p, trunc, &plain))].into();
    DseSpec::new(vec!["G".into()], vec![p], mellin, order, None)
}

fn one_place_spec(order: usize) -> Result<DseSpec> {
    let p = PrimitiveInfo::new("p", 1, 0, vec![("e", vec![int(-2)])]);
    let trunc = super::mellin_truncation(order);
    let mut m = MellinSeries::empty(&p, trunc);
    for n in 0..=trunc {
        m.set(vec![n], Poly::symbol(a_sym(n as usize)));
    }
    let mellin: MellinMap = [("p".to_string(), m)].into();
    DseSpec::new(vec!["G".into()], vec![p], mellin, order, None)
}

fn parse(s: &str) -> Poly {
    s.parse().expect("reference polynomial")
}

/// Solves `c·a + rest = 0` for `a` when `c` is a single term dividing `rest`
/// and the quotient is free of `L`.
fn solve_linear(c: &Poly, rest: &Poly) -> Option<Poly> {
    if c.len() != 1 {
        return None;
    }
    let (cm, cc) = c.terms().next()?;
    let mut out = Poly::zero();
    for (m, k) in rest.terms() {
        let q = m.div(cm)?;
        out.add_term(q, -(k / cc));
    }
    if out.degree_in(&Symbol::scale()) > 0 {
        return None;
    }
    Some(out)
}

/// Computes both Green functions to `x^order`, matches Mellin coefficients
/// order by order and records the first obstruction.
pub fn counterexample_report(order: usize) -> Result<CounterexampleReport> {
    if order < 4 {
        return Err(Error::InvalidSpec {
            pointer: "/order".into(),
            msg: "the obstruction appears at order 4".into(),
        });
    }
    let hat_g = solve_analytic_oracle(&two_place_spec(order)?)?.remove(0);
    let g = solve_analytic_oracle(&one_place_spec(order)?)?.remove(0);

    let mut subs: BTreeMap<Symbol, Poly> = BTreeMap::new();
    let mut outcomes = Vec::new();
    for n in 1..=order {
        let diff = (g.coeff(n) - hat_g.coeff(n)).substitute(&subs)?;
        let a = a_sym(n - 1);
        let c = diff.derivative(&a);
        let rest = diff.substitute(&[(a.clone(), Poly::zero())].into())?;
        let solved = if diff.degree_in(&a) == 1 { solve_linear(&c, &rest) } else { None };
        match solved {
            Some(value) => {
                subs.insert(a.clone(), value.clone());
                outcomes.push(OrderOutcome::Solved { order: n, symbol: a, value });
            }
            None => {
                outcomes.push(OrderOutcome::Obstructed { order: n, residual: diff });
                break;
            }
        }
    }

    let matches = |series: &XSeries<Poly>, reference: &[&str]| {
        reference.iter().enumerate().all(|(n, s)| series.coeff(n) == &parse(s))
    };
    let substitutions_match = SUBSTITUTIONS.iter().enumerate().all(|(k, (sym, val))| {
        matches!(&outcomes.get(k), Some(OrderOutcome::Solved { symbol, value, .. })
            if symbol.name() == *sym && value == &parse(val))
    });
    let residual_matches = matches!(
        outcomes.get(3),
        Some(OrderOutcome::Obstructed { order: 4, residual }) if residual == &parse(RESIDUAL)
    );
    Ok(CounterexampleReport {
        order,
        hat_g_matches: matches(&hat_g, &HAT_G),
        g_matches: matches(&g, &G),
        hat_g,
        g,
        outcomes,
        substitutions_match,
        residual_matches,
    })
}
