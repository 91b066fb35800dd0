//! Poisson observables in distinct-tuple normal form.
//!
//! An [`Observable`] is a finite sum of terms
//!
//! ```text
//! c · Σ_{(x₁,…,x_r) ∈ γ^r distinct} Π_j a_j(x_j) · Π_{z∈γ} e^{ψ(z)}
//! ```
//!
//! Every cylinder function with an exponential-polynomial outer function has
//! this form, and the class is closed under products, point removal
//! ([`Observable::attach`]) and point insertion ([`Observable::insert_symbolic`]).
//! Coincident points never appear in a term: diagonal contributions of
//! products are explicit lower-order terms.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::configuration::Configuration;
use crate::cylinder::CylinderFunction;
use crate::field::ScalarField;
use crate::manifold::{Manifold, ManifoldPoint};

pub type PointFn = Arc<dyn Fn(&ManifoldPoint) -> f64 + Send + Sync>;

pub fn point_fn(f: impl Fn(&ManifoldPoint) -> f64 + Send + Sync + 'static) -> PointFn {
    Arc::new(f)
}

pub fn field_fn(m: Manifold, f: &ScalarField) -> PointFn {
    let f = f.clone();
    Arc::new(move |p| f.value(m, p))
}

/// A slot function, stored as a product of factors.
pub type Slot = Vec<PointFn>;

#[derive(Clone)]
pub struct Term {
    pub coef: f64,
    pub slots: Vec<Slot>,
    /// `ψ` as a sum of functions; empty means `ψ = 0`.
    pub tilt: Vec<PointFn>,
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Term")
            .field("coef", &self.coef)
            .field("slots", &self.slots.iter().map(Vec::len).collect::<Vec<_>>())
            .field("tilt", &self.tilt.len())
            .finish()
    }
}

pub(crate) fn eval_slot(s: &Slot, x: &ManifoldPoint) -> f64 {
    s.iter().map(|f| f(x)).product()
}

pub(crate) fn eval_tilt(t: &[PointFn], x: &ManifoldPoint) -> f64 {
    t.iter().map(|f| f(x)).sum()
}

fn exp_tilt(t: &[PointFn], sign: f64) -> PointFn {
    let t = t.to_vec();
    Arc::new(move |x| (sign * eval_tilt(&t, x)).exp())
}

impl Term {
    pub fn order(&self) -> usize {
        self.slots.len()
    }

    pub fn eval(&self, gamma: &Configuration) -> f64 {
        let pts = gamma.points();
        let mut e = 0.0;
        if !self.tilt.is_empty() {
            e = pts.iter().map(|x| eval_tilt(&self.tilt, x)).sum::<f64>();
        }
        let r = self.slots.len();
        if r > pts.len() {
            return 0.0;
        }
        let vals: Vec<Vec<f64>> = self.slots.iter().map(|s| pts.iter().map(|x| eval_slot(s, x)).collect()).collect();
        self.coef * distinct_sum(&vals) * e.exp()
    }
}

/// `Σ_{distinct (i₁,…,i_r)} Π_j v[j][i_j]` by inclusion–exclusion over set partitions.
pub(crate) fn distinct_sum(v: &[Vec<f64>]) -> f64 {
    let r = v.len();
    if r == 0 {
        return 1.0;
    }
    let n = v[0].len();
    let mut total = 0.0;
    for (blocks, mu) in set_partitions(r) {
        let mut prod = *mu;
        for b in blocks {
            let s: f64 = (0..n).map(|i| b.iter().map(|&j| v[j][i]).product::<f64>()).sum();
            prod *= s;
        }
        total += prod;
    }
    total
}

type Partition = (Vec<Vec<usize>>, f64);

/// Set partitions of `{0,…,r−1}` with their Möbius weights `Π (−1)^{|B|−1}(|B|−1)!`.
pub(crate) fn set_partitions(r: usize) -> &'static [Partition] {
    const MAX: usize = 10;
    static CACHE: [OnceLock<Vec<Partition>>; MAX + 1] = [const { OnceLock::new() }; MAX + 1];
    assert!(r <= MAX, "observables with more than {MAX} slots are not supported");
    CACHE[r].get_or_init(|| {
        let mut out = Vec::new();
        let mut labels = vec![0usize; r];
        fn rec(i: usize, next: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
            let r = labels.len();
            if i == r {
                let mut blocks = vec![Vec::new(); next];
                for (j, &l) in labels.iter().enumerate() {
                    blocks[l].push(j);
                }
                let mu = blocks
                    .iter()
                    .map(|b| {
                        let k = b.len();
                        let f: f64 = (1..k).map(|m| m as f64).product();
                        if k % 2 == 0 { -f } else { f }
                    })
                    .product();
                out.push((blocks, mu));
                return;
            }
            for l in 0..=next {
                labels[i] = l;
                rec(i + 1, if l == next { next + 1 } else { next }, labels, out);
            }
        }
        rec(0, 0, &mut labels, &mut out);
        out
    })
}

/// Partial injections between `0..r` and `0..q`, as lists of matched pairs.
fn partial_injections(r: usize, q: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut used = vec![false; q];
    fn rec(i: usize, r: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if i == r {
            out.push(cur.clone());
            return;
        }
        rec(i + 1, r, used, cur, out);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push((i, j));
                rec(i + 1, r, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(0, r, &mut used, &mut cur, &mut out);
    out
}

#[derive(Clone, Debug, Default)]
pub struct Observable {
    terms: Vec<Term>,
}

impl Observable {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![Term { coef: c, slots: Vec::new(), tilt: Vec::new() }])
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        Self { terms: terms.into_iter().filter(|t| t.coef != 0.0).collect() }
    }

    /// `⟨f, γ⟩`.
    pub fn linear(f: PointFn) -> Self {
        Self::from_terms(vec![Term { coef: 1.0, slots: vec![vec![f]], tilt: Vec::new() }])
    }

    /// `Π_{z∈γ} e^{ψ(z)}`.
    pub fn exponential(psi: PointFn) -> Self {
        Self::from_terms(vec![Term { coef: 1.0, slots: Vec::new(), tilt: vec![psi] }])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(Term::order).max().unwrap_or(0)
    }

    /// Normal form of a cylinder function `g(⟨φ₁,γ⟩, …)` over manifold `m`.
    pub fn from_cylinder(m: Manifold, f: &CylinderFunction) -> Self {
        let inner: Vec<PointFn> = f.inner().iter().map(|phi| field_fn(m, phi)).collect();
        let mut terms = Vec::new();
        for mono in f.outer().terms() {
            let mut factors = Vec::new();
            for (i, &p) in mono.powers.iter().enumerate() {
                for _ in 0..p {
                    factors.push(inner[i].clone());
                }
            }
            let tilt: Vec<PointFn> = mono
                .tilt
                .iter()
                .enumerate()
                .filter(|(_, l)| **l != 0.0)
                .map(|(i, &l)| {
                    let g = inner[i].clone();
                    Arc::new(move |x: &ManifoldPoint| l * g(x)) as PointFn
                })
                .collect();
            // Π_j ⟨f_j, γ⟩ = Σ_{partitions} Σ_{distinct} Π_B (Π_{j∈B} f_j)(x_B).
            for (blocks, _) in set_partitions(factors.len()) {
                let slots = blocks.iter().map(|b| b.iter().map(|&j| factors[j].clone()).collect()).collect();
                terms.push(Term { coef: mono.coef, slots, tilt: tilt.clone() });
            }
        }
        Self::from_terms(terms)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Self { terms }
    }

    pub fn sum(items: impl IntoIterator<Item = Self>) -> Self {
        let mut terms = Vec::new();
        for o in items {
            terms.extend(o.terms);
        }
        Self { terms }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| Term { coef: t.coef * c, ..t.clone() }).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &o.terms {
                let mut tilt = a.tilt.clone();
                tilt.extend(b.tilt.iter().cloned());
                for inj in partial_injections(a.order(), b.order()) {
                    let mut slots = Vec::with_capacity(a.order() + b.order() - inj.len());
                    let mut b_used = vec![false; b.order()];
                    for (i, sa) in a.slots.iter().enumerate() {
                        let mut s = sa.clone();
                        if let Some(&(_, j)) = inj.iter().find(|(ii, _)| *ii == i) {
                            s.extend(b.slots[j].iter().cloned());
                            b_used[j] = true;
                        }
                        slots.push(s);
                    }
                    for (j, sb) in b.slots.iter().enumerate() {
                        if !b_used[j] {
                            slots.push(sb.clone());
                        }
                    }
                    terms.push(Term { coef: a.coef * b.coef, slots, tilt: tilt.clone() });
                }
            }
        }
        Self::from_terms(terms)
    }

    /// `γ ↦ Σ_{(x₁,…,x_p) ∈ γ^p distinct} Π_j a_j(x_j) · K(γ ∖ {x₁,…,x_p})` for `K = self`.
    pub fn attach(&self, a: &[Slot]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut slots: Vec<Slot> = Vec::with_capacity(a.len() + t.order());
                for s in a {
                    let mut s = s.clone();
                    if !t.tilt.is_empty() {
                        s.push(exp_tilt(&t.tilt, -1.0));
                    }
                    slots.push(s);
                }
                slots.extend(t.slots.iter().cloned());
                Term { coef: t.coef, slots, tilt: t.tilt.clone() }
            })
            .collect();
        Self::from_terms(terms)
    }

    /// Pairs `(h_m, K_m)` with `K(γ ∪ {x}) = Σ_m h_m(x) K_m(γ)` for `x ∉ γ`.
    pub fn insert_symbolic(&self) -> Vec<(Slot, Observable)> {
        let mut out = Vec::new();
        for t in &self.terms {
            let base: Slot = if t.tilt.is_empty() { Vec::new() } else { vec![exp_tilt(&t.tilt, 1.0)] };
            out.push((base.clone(), Self::from_terms(vec![t.clone()])));
            for j in 0..t.order() {
                let mut h = t.slots[j].clone();
                h.extend(base.iter().cloned());
                let mut slots = t.slots.clone();
                slots.remove(j);
                out.push((h, Self::from_terms(vec![Term { coef: t.coef, slots, tilt: t.tilt.clone() }])));
            }
        }
        out
    }

    /// `γ ↦ K(γ ∪ {x})` for a fixed point `x`.
    pub fn insert_at(&self, x: &ManifoldPoint) -> Self {
        Self::sum(self.insert_symbolic().into_iter().map(|(h, k)| k.scale(eval_slot(&h, x))))
    }

    pub fn eval(&self, gamma: &Configuration) -> f64 {
        self.terms.iter().map(|t| t.eval(gamma)).sum()
    }

    /// Distinct factor and tilt functions, keyed by pointer identity.
    pub(crate) fn distinct_functions(&self) -> (Vec<PointFn>, HashMap<usize, usize>) {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for t in &self.terms {
            for f in t.slots.iter().flatten().chain(t.tilt.iter()) {
                let key = Arc::as_ptr(f) as *const () as usize;
                index.entry(key).or_insert_with(|| {
                    list.push(f.clone());
                    list.len() - 1
                });
            }
        }
        (list, index)
    }
}

pub(crate) fn fn_key(f: &PointFn) -> usize {
    Arc::as_ptr(f) as *const () as usize
}
