//! Truncated power series in `x` over a commutative coefficient ring.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{int, Poly, Rational};

/// A commutative Q-algebra usable as an x-series coefficient.
pub trait Coefficient: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Rational) -> Self;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }
}

impl Coefficient for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::one()
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn is_one(&self) -> bool {
        Poly::is_one(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: &Rational) -> Self {
        Poly::scale(self, c)
    }
}

/// `coeffs[n]` is the coefficient of `x^n` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct XSeries<R> {
    coeffs: Vec<R>,
}

impl<R: Coefficient> XSeries<R> {
    pub fn zero(truncation: usize) -> Self {
        XSeries {
            coeffs: vec![R::zero(); truncation + 1],
        }
    }

    pub fn one(truncation: usize) -> Self {
        Self::constant(truncation, R::one())
    }

    pub fn constant(truncation: usize, c: R) -> Self {
        let mut s = Self::zero(truncation);
        s.coeffs[0] = c;
        s
    }

    /// The series `x^k` (zero if `k > truncation`).
    pub fn monomial(truncation: usize, k: usize, c: R) -> Self {
        let mut s = Self::zero(truncation);
        if k <= truncation {
            s.coeffs[k] = c;
        }
        s
    }

    /// Pads with zeros or drops coefficients beyond `truncation`.
    pub fn from_coeffs(truncation: usize, mut coeffs: Vec<R>) -> Self {
        coeffs.resize(truncation + 1, R::zero());
        XSeries { coeffs }
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &R {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<R> {
        self.coeffs
    }

    pub fn set_coeff(&mut self, n: usize, c: R) {
        self.coeffs[n] = c;
    }

    /// Drops coefficients above `n`; `n` must not exceed the current truncation.
    pub fn truncate(&self, n: usize) -> Self {
        assert!(n <= self.truncation(), "cannot raise truncation");
        XSeries {
            coeffs: self.coeffs[..=n].to_vec(),
        }
    }

    pub fn map<S: Coefficient>(&self, f: impl Fn(&R) -> S) -> XSeries<S> {
        XSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(R::is_zero)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.truncation() != other.truncation() {
            return Err(Error::TruncationMismatch {
                left: self.truncation(),
                right: other.truncation(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(XSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(XSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|a| a.scale(c))
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.truncation();
        let mut out = vec![R::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        Ok(XSeries { coeffs: out })
    }

    /// Multiplies every coefficient by `c`.
    pub fn mul_coeff(&self, c: &R) -> Self {
        self.map(|a| a.mul(c))
    }

    /// Multiplication by `x^k`, dropping what falls past the truncation.
    pub fn shift(&self, k: usize) -> Self {
        let n = self.truncation();
        let mut out = vec![R::zero(); n + 1];
        for i in 0..=n {
            if i + k <= n {
                out[i + k] = self.coeffs[i].clone();
            }
        }
        XSeries { coeffs: out }
    }

    /// `f^mu` for rational `mu`; requires constant term 1.
    ///
    /// Uses the recurrence `n g_n = sum_{k=1}^n (mu k - (n - k)) f_k g_{n-k}`,
    /// which equals the binomial series in `f - 1`.
    pub fn pow_rational(&self, mu: &Rational) -> Result<Self> {
        if !self.coeffs[0].is_one() {
            return Err(Error::NonUnitConstant);
        }
        let n = self.truncation();
        let mut g = vec![R::one()];
        for m in 1..=n {
            let mut acc = R::zero();
            for k in 1..=m {
                let f = &self.coeffs[k];
                if f.is_zero() || g[m - k].is_zero() {
                    continue;
                }
                let w = mu * int(k as i64) - int((m - k) as i64);
                if w.is_zero() {
                    continue;
                }
                acc = acc.add(&f.mul(&g[m - k]).scale(&w));
            }
            g.push(acc.scale(&Rational::new(1.into(), (m as i64).into())));
        }
        Ok(XSeries { coeffs: g })
    }

    /// Integer power by repeated multiplication; negative powers need constant term 1.
    pub fn pow_int(&self, m: i64) -> Result<Self> {
        if m < 0 {
            let inv = self.pow_rational(&-Rational::one())?;
            return inv.pow_int(-m);
        }
        let mut acc = Self::one(self.truncation());
        for _ in 0..m {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `sum_k binom(mu, k) (f - 1)^k`; slow reference for [`Self::pow_rational`].
    pub fn pow_binomial(&self, mu: &Rational) -> Result<Self> {
        if !self.coeffs[0].is_one() {
            return Err(Error::NonUnitConstant);
        }
        let n = self.truncation();
        let mut h = self.clone();
        h.coeffs[0] = R::zero();
        let mut out = Self::zero(n);
        let mut hk = Self::one(n);
        for k in 0..=n as u32 {
            let b = crate::poly::binomial(mu, k);
            out = out.add(&hk.scale(&b))?;
            hk = hk.mul(&h)?;
        }
        Ok(out)
    }
}

impl XSeries<Poly> {
    /// `d/dx`; the result is known only to order `N - 1`.
    pub fn derivative_x(&self) -> Self {
        let n = self.truncation();
        if n == 0 {
            return Self::zero(0);
        }
        XSeries {
            coeffs: (1..=n)
                .map(|k| self.coeffs[k].scale(&int(k as i64)))
                .collect(),
        }
    }

    pub fn map_poly(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        self.map(f)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.coeffs.iter().map(|p| p.to_string().into()).collect())
    }
}

impl fmt::Display for XSeries<Poly> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, c) in self.coeffs.iter().enumerate() {
            writeln!(f, "x^{n}: {c}")?;
        }
        Ok(())
    }
}
