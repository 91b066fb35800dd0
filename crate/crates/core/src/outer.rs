//! Outer functions `g: Rᴺ → R` of cylinder functions.
//!
//! The class is finite sums of exponential monomials `c · Π sᵢ^{lᵢ} · exp(λ·s)`.
//! It is closed under partial differentiation and products, and every term
//! factorizes over the points of a configuration, which is what makes the
//! Poisson expectations of cylinder observables exactly computable.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
    pub tilt: Vec<f64>,
}

impl Monomial {
    pub fn eval(&self, s: &[f64]) -> f64 {
        let mut v = self.coef;
        let mut e = 0.0;
        for i in 0..s.len() {
            if self.powers[i] > 0 {
                v *= s[i].powi(self.powers[i] as i32);
            }
            e += self.tilt[i] * s[i];
        }
        if e != 0.0 {
            v *= e.exp();
        }
        v
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outer {
    arity: usize,
    terms: Vec<Monomial>,
}

impl Outer {
    pub fn new(arity: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.powers.len() != arity || t.tilt.len() != arity {
                return Err(Error::InvalidParameter(format!("monomial arity differs from {arity}")));
            }
            if !t.coef.is_finite() || t.tilt.iter().any(|l| !l.is_finite()) {
                return Err(Error::InvalidParameter("non-finite outer coefficient".into()));
            }
        }
        Ok(Self { arity, terms }.simplified())
    }

    pub fn monomial(arity: usize, coef: f64, powers: Vec<u32>, tilt: Vec<f64>) -> Result<Self> {
        Self::new(arity, vec![Monomial { coef, powers, tilt }])
    }

    pub fn constant(arity: usize, c: f64) -> Self {
        Self { arity, terms: vec![Monomial { coef: c, powers: vec![0; arity], tilt: vec![0.0; arity] }] }.simplified()
    }

    /// `sᵢ^p`.
    pub fn power(arity: usize, i: usize, p: u32) -> Self {
        let mut powers = vec![0; arity];
        powers[i] = p;
        Self { arity, terms: vec![Monomial { coef: 1.0, powers, tilt: vec![0.0; arity] }] }
    }

    /// `exp(λ sᵢ)`.
    pub fn exponential(arity: usize, i: usize, lambda: f64) -> Self {
        let mut tilt = vec![0.0; arity];
        tilt[i] = lambda;
        Self { arity, terms: vec![Monomial { coef: 1.0, powers: vec![0; arity], tilt }] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.arity);
        self.terms.iter().map(|t| t.eval(s)).sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            if t.powers[i] > 0 {
                let mut p = t.powers.clone();
                p[i] -= 1;
                out.push(Monomial { coef: t.coef * t.powers[i] as f64, powers: p, tilt: t.tilt.clone() });
            }
            if t.tilt[i] != 0.0 {
                out.push(Monomial { coef: t.coef * t.tilt[i], powers: t.powers.clone(), tilt: t.tilt.clone() });
            }
        }
        Self { arity: self.arity, terms: out }.simplified()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity);
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Self { arity: self.arity, terms }.simplified()
    }

    pub fn scale(&self, c: f64) -> Self {
        let terms = self.terms.iter().map(|t| Monomial { coef: c * t.coef, ..t.clone() }).collect();
        Self { arity: self.arity, terms }.simplified()
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity);
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &o.terms {
                terms.push(Monomial {
                    coef: a.coef * b.coef,
                    powers: a.powers.iter().zip(&b.powers).map(|(x, y)| x + y).collect(),
                    tilt: a.tilt.iter().zip(&b.tilt).map(|(x, y)| x + y).collect(),
                });
            }
        }
        Self { arity: self.arity, terms }.simplified()
    }

    /// Merges like monomials and drops zero coefficients.
    fn simplified(mut self) -> Self {
        let mut merged: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Some(m) = merged.iter_mut().find(|m| m.powers == t.powers && m.tilt == t.tilt) {
                m.coef += t.coef;
            } else {
                merged.push(t);
            }
        }
        merged.retain(|m| m.coef != 0.0);
        self.terms = merged;
        self
    }
}
