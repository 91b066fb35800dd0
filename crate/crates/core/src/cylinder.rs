//! Cylinder functions, cylinder 1-forms and their lifted operator calculus.
//!
//! A cylinder function is `F(γ) = g(⟨φ₁,γ⟩, …, ⟨φ_N,γ⟩)`. A cylinder 1-form is a
//! finite sum `V(γ)_x = Σ_k F_k(γ∖{x}) ν_k(x)`. Every lifted operator on such
//! objects reduces to one-particle quantities through the slice formulas:
//! removing or moving one point only changes one summand of each pairing.
//!
//! Two independent evaluation routes are provided. The factorized route uses
//! the one-particle operators per point. The product-manifold route builds the
//! first and second covariant derivatives of `V` on `Xⁿ` ([`ConfigJet`]) and
//! assembles `d`, `d*` and the Bochner Laplacian from them directly.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::configuration::{Configuration, GammaTangent};
use crate::error::{Error, Result};
use crate::field::{FrameOneFormJet, FrameScalarJet, OneFormField, ScalarField};
use crate::intensity::IntensityField;
use crate::linalg::{dot2, mat2_vec, Mat2, Vec2};
use crate::manifold::{ManifoldPoint, TangentVector};
use crate::outer::{Monomial, Outer};
use crate::preset::{self, PresetExpr};

/// Cylinder function presets with their parameter signatures, in listing order.
pub const CYLINDER_PRESETS: &[&str] = &["linear(field)", "square(field)", "expneg(field)", "const(c)"];

#[derive(Clone, Debug)]
pub struct CylinderFunction {
    name: String,
    outer: Outer,
    inner: Vec<ScalarField>,
    d1: Vec<Outer>,
    d2: Vec<Vec<Outer>>,
}

impl CylinderFunction {
    pub fn new(name: impl Into<String>, outer: Outer, inner: Vec<ScalarField>) -> Result<Self> {
        if inner.is_empty() {
            return Err(Error::InvalidParameter("a cylinder function needs at least one inner field".into()));
        }
        if outer.arity() != inner.len() {
            return Err(Error::InvalidParameter(format!(
                "outer function takes {} arguments but {} inner fields were given",
                outer.arity(),
                inner.len()
            )));
        }
        let n = inner.len();
        let d1: Vec<Outer> = (0..n).map(|i| outer.partial(i)).collect();
        let d2 = d1.iter().map(|g| (0..n).map(|j| g.partial(j)).collect()).collect();
        Ok(Self { name: name.into(), outer, inner, d1, d2 })
    }

    /// `⟨φ, γ⟩`.
    pub fn linear(phi: &ScalarField) -> Self {
        Self::new(format!("linear({})", phi.name()), Outer::power(1, 0, 1), vec![phi.clone()]).expect("arity 1")
    }

    /// `⟨φ, γ⟩²`.
    pub fn square(phi: &ScalarField) -> Self {
        Self::new(format!("square({})", phi.name()), Outer::power(1, 0, 2), vec![phi.clone()]).expect("arity 1")
    }

    /// `exp(−⟨φ, γ⟩)`.
    pub fn expneg(phi: &ScalarField) -> Self {
        Self::new(format!("expneg({})", phi.name()), Outer::exponential(1, 0, -1.0), vec![phi.clone()]).expect("arity 1")
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), Outer::constant(1, c), vec![ScalarField::constant(0.0)]).expect("arity 1")
    }

    pub fn from_preset(expr: &PresetExpr) -> Result<Self> {
        let PresetExpr::Call { name, args } = expr else {
            return Err(Error::UnknownPreset(format!("{expr:?}")));
        };
        let field = || -> Result<ScalarField> {
            match args.as_slice() {
                [a] => preset::scalar_field(a),
                _ => Err(Error::InvalidParameter(format!("{name} takes one field argument"))),
            }
        };
        match name.as_str() {
            "linear" => Ok(Self::linear(&field()?)),
            "square" => Ok(Self::square(&field()?)),
            "expneg" => Ok(Self::expneg(&field()?)),
            "const" => Ok(Self::constant(expr.numeric_args(1)?[0])),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outer(&self) -> &Outer {
        &self.outer
    }

    pub fn inner(&self) -> &[ScalarField] {
        &self.inner
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(format!("{c}*{}", self.name), self.outer.scale(c), self.inner.clone()).expect("same arity")
    }

    /// Pointwise product, with the inner fields of both factors concatenated.
    pub fn mul(&self, o: &Self) -> Self {
        let (n1, n2) = (self.inner.len(), o.inner.len());
        let widen = |g: &Outer, offset: usize| -> Outer {
            let terms = g
                .terms()
                .iter()
                .map(|t| {
                    let mut powers = vec![0; n1 + n2];
                    let mut tilt = vec![0.0; n1 + n2];
                    for i in 0..t.powers.len() {
                        powers[offset + i] = t.powers[i];
                        tilt[offset + i] = t.tilt[i];
                    }
                    Monomial { coef: t.coef, powers, tilt }
                })
                .collect();
            Outer::new(n1 + n2, terms).expect("consistent arity")
        };
        let outer = widen(&self.outer, 0).mul(&widen(&o.outer, n1));
        let mut inner = self.inner.clone();
        inner.extend(o.inner.iter().cloned());
        Self::new(format!("{}*{}", self.name, o.name), outer, inner).expect("consistent arity")
    }

    pub fn pairings(&self, gamma: &Configuration) -> Vec<f64> {
        let m = gamma.manifold();
        self.inner.iter().map(|f| gamma.pairing(|x| f.value(m, x))).collect()
    }

    pub fn eval_at(&self, s: &[f64]) -> f64 {
        self.outer.eval(s)
    }

    pub fn eval(&self, gamma: &Configuration) -> f64 {
        self.outer.eval(&self.pairings(gamma))
    }

    pub fn partial_at(&self, i: usize, s: &[f64]) -> f64 {
        self.d1[i].eval(s)
    }

    pub fn second_partial_at(&self, i: usize, j: usize, s: &[f64]) -> f64 {
        self.d2[i][j].eval(s)
    }

    pub fn partial_outer(&self, i: usize) -> &Outer {
        &self.d1[i]
    }

    fn jets(&self, gamma: &Configuration) -> Vec<Vec<FrameScalarJet>> {
        let m = gamma.manifold();
        gamma.points().iter().map(|x| self.inner.iter().map(|f| f.frame_jet(m, x)).collect()).collect()
    }

    /// `∇^Γ F(γ)_x = Σ_i ∂_i g(s) ∇φ_i(x)`.
    pub fn grad_gamma(&self, gamma: &Configuration) -> GammaTangent {
        let s = self.pairings(gamma);
        let gi: Vec<f64> = (0..self.inner.len()).map(|i| self.partial_at(i, &s)).collect();
        let m = gamma.manifold();
        let v = gamma
            .points()
            .iter()
            .map(|x| {
                let mut r = [0.0; 2];
                for (i, f) in self.inner.iter().enumerate() {
                    let g = f.frame_jet(m, x).grad;
                    r[0] += gi[i] * g[0];
                    r[1] += gi[i] * g[1];
                }
                r
            })
            .collect();
        GammaTangent::from_components(gamma, v).expect("aligned with γ")
    }

    /// `H_{π_σ} F(γ)`, optionally for `γ` with the `skip`-th point removed.
    fn dirichlet_with(&self, intensity: &IntensityField, gamma: &Configuration, jets: &[Vec<FrameScalarJet>], skip: Option<usize>) -> f64 {
        let n = self.inner.len();
        let mut s = vec![0.0; n];
        for (z, j) in jets.iter().enumerate() {
            if Some(z) != skip {
                for i in 0..n {
                    s[i] += j[i].value;
                }
            }
        }
        let gi: Vec<f64> = (0..n).map(|i| self.partial_at(i, &s)).collect();
        let gij: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| self.second_partial_at(i, j, &s)).collect()).collect();
        let mut total = 0.0;
        for (z, x) in gamma.points().iter().enumerate() {
            if Some(z) == skip {
                continue;
            }
            let beta = intensity.beta(x);
            let j = &jets[z];
            for a in 0..n {
                let h = -j[a].laplacian() - dot2(&beta, &j[a].grad);
                total += gi[a] * h;
                for b in 0..n {
                    total -= gij[a][b] * dot2(&j[a].grad, &j[b].grad);
                }
            }
        }
        total
    }

    /// `H_{π_σ} F(γ) = Σ_{x∈γ} H_σ` applied to the one-point slice at `x`.
    pub fn dirichlet_gamma(&self, intensity: &IntensityField, gamma: &Configuration) -> f64 {
        self.dirichlet_with(intensity, gamma, &self.jets(gamma), None)
    }

    /// `∇^Γ F` rewritten exactly as a cylinder 1-form `Σ F'_k(γ∖{x}) ν_k(x)`.
    pub fn grad_as_one_form(&self) -> CylinderOneForm {
        let n = self.inner.len();
        let mut terms = Vec::new();
        for j in 0..n {
            let grad_phi = OneFormField::gradient(&self.inner[j]);
            for t in self.d1[j].terms() {
                // Π (s'_i + φ_i)^{l_i} = Σ_{k ≤ l} Π C(l_i, k_i) s'^k φ^{l−k}.
                for ks in multi_indices(&t.powers) {
                    let mut coef = t.coef;
                    let mut local: Option<ScalarField> = None;
                    for i in 0..n {
                        coef *= binomial(t.powers[i], ks[i]);
                        let rest = t.powers[i] - ks[i];
                        if rest > 0 {
                            let f = self.inner[i].powi(rest as i32);
                            local = Some(match local {
                                Some(l) => l.mul(&f),
                                None => f,
                            });
                        }
                    }
                    let mut tilt_field: Option<ScalarField> = None;
                    for i in 0..n {
                        if t.tilt[i] != 0.0 {
                            let f = self.inner[i].scale(t.tilt[i]);
                            tilt_field = Some(match tilt_field {
                                Some(e) => e.add(&f),
                                None => f,
                            });
                        }
                    }
                    if let Some(e) = tilt_field {
                        let e = e.exp();
                        local = Some(match local {
                            Some(l) => l.mul(&e),
                            None => e,
                        });
                    }
                    let nu = match local {
                        Some(h) => grad_phi.scaled_by(&h),
                        None => grad_phi.clone(),
                    };
                    let outer = Outer::monomial(n, coef, ks.clone(), t.tilt.clone()).expect("arity");
                    let f = CylinderFunction::new(format!("d{j}{}", self.name), outer, self.inner.clone()).expect("arity");
                    terms.push((f, nu));
                }
            }
        }
        CylinderOneForm::new(terms)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `k` with `0 ≤ k_i ≤ l_i`.
fn multi_indices(l: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &li in l {
        let mut next = Vec::new();
        for prefix in &out {
            for k in 0..=li {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// `β_σ` and `∇β_σ` at every point of a configuration.
#[derive(Clone, Debug)]
pub struct LiftedIntensity {
    pub beta: Vec<Vec2>,
    pub dbeta: Vec<Mat2>,
}

impl LiftedIntensity {
    pub fn new(intensity: &IntensityField, gamma: &Configuration) -> Self {
        let pts = gamma.points();
        Self {
            beta: pts.iter().map(|x| intensity.beta(x)).collect(),
            dbeta: pts.iter().map(|x| intensity.beta_derivative(x)).collect(),
        }
    }

    fn beta_flat(&self, p: usize) -> f64 {
        self.beta[p / 2][p % 2]
    }
}

/// `B_{π_σ}(γ) = (β_σ(x))_{x∈γ}`.
pub fn log_derivative_gamma(intensity: &IntensityField, gamma: &Configuration) -> GammaTangent {
    let v = gamma.points().iter().map(|x| intensity.beta(x)).collect();
    GammaTangent::from_components(gamma, v).expect("aligned with γ")
}

/// `V ↦ (R(x) − ∇β_σ(x)) V_x` pointwise.
pub fn weitzenbock_field_apply(intensity: &IntensityField, v: &GammaTangent) -> GammaTangent {
    let gamma = v.config();
    let c = gamma
        .points()
        .iter()
        .zip(v.components())
        .map(|(x, a)| mat2_vec(&intensity.weitzenbock_correction(x), a))
        .collect();
    GammaTangent::from_components(gamma, c).expect("aligned with γ")
}

#[derive(Clone, Debug)]
pub struct CylinderOneForm {
    terms: Vec<(CylinderFunction, OneFormField)>,
}

/// Per-configuration evaluation data of one term: slice pairings and jets.
struct TermData {
    /// `g`, `∂g`, `∂²g` at the pairings of `γ∖{y}`, per point `y`.
    g: Vec<f64>,
    gi: Vec<Vec<f64>>,
    gij: Vec<Vec<Vec<f64>>>,
    phi: Vec<Vec<FrameScalarJet>>,
    nu: Vec<FrameOneFormJet>,
}

impl CylinderOneForm {
    pub fn new(terms: Vec<(CylinderFunction, OneFormField)>) -> Self {
        Self { terms }
    }

    pub fn single(f: CylinderFunction, nu: OneFormField) -> Self {
        Self { terms: vec![(f, nu)] }
    }

    pub fn terms(&self) -> &[(CylinderFunction, OneFormField)] {
        &self.terms
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { terms: self.terms.iter().map(|(f, nu)| (f.scale(c), nu.clone())).collect() }
    }

    fn term_data(&self, gamma: &Configuration, second: bool) -> Vec<TermData> {
        let m = gamma.manifold();
        self.terms
            .iter()
            .map(|(f, nu)| {
                let phi = f.jets(gamma);
                let n = f.inner.len();
                let total: Vec<f64> = (0..n).map(|i| phi.iter().map(|j| j[i].value).sum()).collect();
                let mut g = Vec::with_capacity(gamma.len());
                let mut gi = Vec::with_capacity(gamma.len());
                let mut gij = Vec::with_capacity(gamma.len());
                for jy in &phi {
                    let s: Vec<f64> = (0..n).map(|i| total[i] - jy[i].value).collect();
                    g.push(f.eval_at(&s));
                    gi.push((0..n).map(|i| f.partial_at(i, &s)).collect());
                    if second {
                        gij.push((0..n).map(|i| (0..n).map(|j| f.second_partial_at(i, j, &s)).collect()).collect());
                    }
                }
                let nu = gamma.points().iter().map(|x| nu.frame_jet(m, x)).collect();
                TermData { g, gi, gij, phi, nu }
            })
            .collect()
    }

    /// `V(γ)_x = Σ_k F_k(γ∖{x}) ν_k(x)`.
    pub fn eval(&self, gamma: &Configuration) -> GammaTangent {
        let m = gamma.manifold();
        let mut v = vec![[0.0; 2]; gamma.len()];
        for (f, nu) in &self.terms {
            for (y, x) in gamma.points().iter().enumerate() {
                let rest = gamma.remove_index(y);
                let fy = f.eval(&rest);
                let n = nu.value(m, x);
                v[y][0] += fy * n[0];
                v[y][1] += fy * n[1];
            }
        }
        GammaTangent::from_components(gamma, v).expect("aligned with γ")
    }

    /// `(I¹V)(γ, x) = V(γ ∪ {x})_x = Σ_k F_k(γ) ν_k(x)` for `x ∉ γ`.
    pub fn iso_i1(&self, gamma: &Configuration, x: &ManifoldPoint) -> Result<TangentVector> {
        if gamma.contains(x) {
            return Err(Error::AlreadyAMember { coords: x.coords() });
        }
        let m = gamma.manifold();
        let mut r = [0.0; 2];
        for (f, nu) in &self.terms {
            let fv = f.eval(gamma);
            let n = nu.value(m, x);
            r[0] += fv * n[0];
            r[1] += fv * n[1];
        }
        Ok(TangentVector::new(*x, r))
    }

    /// `div^Γ V(γ) = Σ_x Σ_k F_k(γ∖{x}) div ν_k(x)`.
    pub fn divergence_gamma(&self, gamma: &Configuration) -> f64 {
        self.term_data(gamma, false)
            .iter()
            .map(|d| d.g.iter().zip(&d.nu).map(|(g, j)| g * j.divergence()).sum::<f64>())
            .sum()
    }

    /// `d*V = −div^Γ V − ⟨V, B_{π_σ}⟩_γ`.
    pub fn dstar1_gamma(&self, intensity: &IntensityField, gamma: &Configuration) -> f64 {
        let b = log_derivative_gamma(intensity, gamma);
        -self.divergence_gamma(gamma) - self.eval(gamma).inner(&b).expect("same γ")
    }

    fn factorized(&self, intensity: &IntensityField, gamma: &Configuration, derham: bool) -> GammaTangent {
        let mut v = vec![[0.0; 2]; gamma.len()];
        for ((f, _), d) in self.terms.iter().zip(self.term_data(gamma, false)) {
            for (y, x) in gamma.points().iter().enumerate() {
                let hf = f.dirichlet_with(intensity, gamma, &d.phi, Some(y));
                let hn = if derham { intensity.derham_from_jet(&d.nu[y], x) } else { intensity.bochner_from_jet(&d.nu[y], x) };
                for b in 0..2 {
                    v[y][b] += hf * d.nu[y].value[b] + d.g[y] * hn[b];
                }
            }
        }
        GammaTangent::from_components(gamma, v).expect("aligned with γ")
    }

    /// `H^B V(γ)_x = Σ_k (H_{π_σ}F_k)(γ∖{x}) ν_k(x) + F_k(γ∖{x}) H_σ^B ν_k(x)`.
    pub fn bochner_gamma(&self, intensity: &IntensityField, gamma: &Configuration) -> GammaTangent {
        self.factorized(intensity, gamma, false)
    }

    /// `H^R V(γ)_x = Σ_k (H_{π_σ}F_k)(γ∖{x}) ν_k(x) + F_k(γ∖{x}) H_σ^R ν_k(x)`.
    pub fn derham_gamma(&self, intensity: &IntensityField, gamma: &Configuration) -> GammaTangent {
        self.factorized(intensity, gamma, true)
    }

    /// First and second covariant derivatives of `γ ↦ V(γ)` on `Xⁿ`.
    pub fn config_jet(&self, gamma: &Configuration) -> ConfigJet {
        let n = gamma.len();
        let dim = 2 * n;
        let mut jet = ConfigJet { dim, value: vec![0.0; dim], m: vec![0.0; dim * dim], t: vec![0.0; dim * dim * dim] };
        for ((f, _), d) in self.terms.iter().zip(self.term_data(gamma, true)) {
            let na = f.inner.len();
            for y in 0..n {
                let nu = &d.nu[y];
                for b in 0..2 {
                    jet.value[2 * y + b] += d.g[y] * nu.value[b];
                }
                // First derivatives.
                for p in 0..n {
                    for c in 0..2 {
                        for b in 0..2 {
                            let v = if p == y {
                                d.g[y] * nu.d1[c][b]
                            } else {
                                (0..na).map(|i| d.gi[y][i] * d.phi[p][i].grad[c]).sum::<f64>() * nu.value[b]
                            };
                            *jet.m_mut(2 * p + c, 2 * y + b) += v;
                        }
                    }
                }
                // Second derivatives, outer direction (q, e).
                for q in 0..n {
                    for p in 0..n {
                        for e in 0..2 {
                            for c in 0..2 {
                                for b in 0..2 {
                                    let v = if q == y && p == y {
                                        d.g[y] * nu.d2[e][c][b]
                                    } else if q == y {
                                        (0..na).map(|i| d.gi[y][i] * d.phi[p][i].grad[c]).sum::<f64>() * nu.d1[e][b]
                                    } else if p == y {
                                        (0..na).map(|j| d.gi[y][j] * d.phi[q][j].grad[e]).sum::<f64>() * nu.d1[c][b]
                                    } else {
                                        let mut s = 0.0;
                                        for i in 0..na {
                                            for j in 0..na {
                                                s += d.gij[y][i][j] * d.phi[q][j].grad[e] * d.phi[p][i].grad[c];
                                            }
                                            if q == p {
                                                s += d.gi[y][i] * d.phi[p][i].hess[e][c];
                                            }
                                        }
                                        s * nu.value[b]
                                    };
                                    *jet.t_mut(2 * q + e, 2 * p + c, 2 * y + b) += v;
                                }
                            }
                        }
                    }
                }
            }
        }
        jet
    }

    /// `d^Γ V` as a pair-block 2-form carrying the derivative data needed by `d*`.
    pub fn d1_gamma(&self, gamma: &Configuration) -> PairBlockTwoForm {
        PairBlockTwoForm::from_jet(gamma, Arc::new(self.config_jet(gamma)))
    }

    /// `d^Γ d*V` from the product-manifold derivatives.
    pub fn d_dstar1_gamma(&self, intensity: &IntensityField, gamma: &Configuration) -> GammaTangent {
        let lift = LiftedIntensity::new(intensity, gamma);
        let v = self.config_jet(gamma).d_dstar(&lift);
        GammaTangent::from_components(gamma, pairs(&v)).expect("aligned with γ")
    }

    /// `d d* V + d* d V` assembled on `Xⁿ` without the factorization or the curvature identity.
    pub fn hodge_gamma(&self, intensity: &IntensityField, gamma: &Configuration) -> GammaTangent {
        let lift = LiftedIntensity::new(intensity, gamma);
        let jet = self.config_jet(gamma);
        let a = jet.d_dstar(&lift);
        let b = jet.dstar_d(&lift);
        let v: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        GammaTangent::from_components(gamma, pairs(&v)).expect("aligned with γ")
    }

    /// `∇*∇ V` assembled on `Xⁿ` from the second covariant derivatives.
    pub fn bochner_gamma_product(&self, intensity: &IntensityField, gamma: &Configuration) -> GammaTangent {
        let lift = LiftedIntensity::new(intensity, gamma);
        let v = self.config_jet(gamma).bochner(&lift);
        GammaTangent::from_components(gamma, pairs(&v)).expect("aligned with γ")
    }
}

fn pairs(v: &[f64]) -> Vec<Vec2> {
    v.chunks(2).map(|c| [c[0], c[1]]).collect()
}

/// Value `V_P`, first derivatives `M_{PQ} = ⟨∇_P V, e_Q⟩` and second derivatives
/// `T_{RPQ} = ⟨∇²_{R,P} V, e_Q⟩` of a 1-form on `Xⁿ`, indexed by `P = 2·point + frame`.
#[derive(Clone, Debug)]
pub struct ConfigJet {
    dim: usize,
    value: Vec<f64>,
    m: Vec<f64>,
    t: Vec<f64>,
}

impl ConfigJet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, p: usize) -> f64 {
        self.value[p]
    }

    pub fn m(&self, p: usize, q: usize) -> f64 {
        self.m[p * self.dim + q]
    }

    pub fn t(&self, r: usize, p: usize, q: usize) -> f64 {
        self.t[(r * self.dim + p) * self.dim + q]
    }

    fn m_mut(&mut self, p: usize, q: usize) -> &mut f64 {
        &mut self.m[p * self.dim + q]
    }

    fn t_mut(&mut self, r: usize, p: usize, q: usize) -> &mut f64 {
        &mut self.t[(r * self.dim + p) * self.dim + q]
    }

    /// Coefficient of `dV` on `e_P ∧ e_Q`.
    pub fn two_form(&self, p: usize, q: usize) -> f64 {
        self.m(p, q) - self.m(q, p)
    }

    /// `−Σ_P T_{PPQ} − Σ_P β_P M_{PQ}`.
    pub fn bochner(&self, lift: &LiftedIntensity) -> Vec<f64> {
        (0..self.dim)
            .map(|q| (0..self.dim).map(|p| -self.t(p, p, q) - lift.beta_flat(p) * self.m(p, q)).sum())
            .collect()
    }

    /// `d*V = −Σ_P M_{PP} − Σ_P β_P V_P`.
    pub fn dstar(&self, lift: &LiftedIntensity) -> f64 {
        (0..self.dim).map(|p| -self.m(p, p) - lift.beta_flat(p) * self.value(p)).sum()
    }

    /// `∇_Q (d*V)`.
    pub fn d_dstar(&self, lift: &LiftedIntensity) -> Vec<f64> {
        (0..self.dim)
            .map(|q| {
                let (x, a) = (q / 2, q % 2);
                let mut s = 0.0;
                for p in 0..self.dim {
                    s -= self.t(q, p, p) + lift.beta_flat(p) * self.m(q, p);
                }
                for b in 0..2 {
                    s -= lift.dbeta[x][a][b] * self.value(2 * x + b);
                }
                s
            })
            .collect()
    }

    /// `(d*dV)_Q = −Σ_P (∇_P (dV)_{PQ} + β_P (dV)_{PQ})`.
    pub fn dstar_d(&self, lift: &LiftedIntensity) -> Vec<f64> {
        (0..self.dim)
            .map(|q| {
                (0..self.dim)
                    .map(|p| -(self.t(p, p, q) - self.t(p, q, p)) - lift.beta_flat(p) * self.two_form(p, q))
                    .sum()
            })
            .collect()
    }
}

/// 2-form on `T_γΓ` split into per-point and per-pair blocks.
///
/// Coefficients are taken on the orthonormal basis `e_P ∧ e_Q` of `∧²`. In
/// this basis `dV` has coefficients `∇_P V_Q − ∇_Q V_P`, which is `√2·AS(∇V)`
/// read in the tensor norm. The diagonal block at `x` is the single
/// coefficient on `e₁(x) ∧ e₂(x)`; the block of the pair `i < j` holds
/// `B_{ab}` on `e_a(x_i) ∧ e_b(x_j)`, and swapping the pair gives `−Bᵀ`.
#[derive(Clone, Debug)]
pub struct PairBlockTwoForm {
    config: Configuration,
    diag: Vec<f64>,
    off: BTreeMap<(usize, usize), Mat2>,
    jet: Option<Arc<ConfigJet>>,
}

impl PairBlockTwoForm {
    pub fn zero(gamma: &Configuration) -> Self {
        Self { config: gamma.clone(), diag: vec![0.0; gamma.len()], off: BTreeMap::new(), jet: None }
    }

    fn from_jet(gamma: &Configuration, jet: Arc<ConfigJet>) -> Self {
        let n = gamma.len();
        let diag = (0..n).map(|x| jet.two_form(2 * x, 2 * x + 1)).collect();
        let mut off = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut b = [[0.0; 2]; 2];
                for a in 0..2 {
                    for c in 0..2 {
                        b[a][c] = jet.two_form(2 * i + a, 2 * j + c);
                    }
                }
                if b != [[0.0; 2]; 2] {
                    off.insert((i, j), b);
                }
            }
        }
        Self { config: gamma.clone(), diag, off, jet: Some(jet) }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn has_slice_data(&self) -> bool {
        self.jet.is_some()
    }

    pub fn set_diagonal(&mut self, i: usize, v: f64) {
        self.diag[i] = v;
        self.jet = None;
    }

    /// Sets the block of the pair `(i, j)`, `i ≠ j`, as seen from `i`.
    pub fn set_block(&mut self, i: usize, j: usize, b: Mat2) {
        assert!(i != j && i < self.config.len() && j < self.config.len());
        let (key, val) = if i < j { ((i, j), b) } else { ((j, i), [[-b[0][0], -b[1][0]], [-b[0][1], -b[1][1]]]) };
        self.off.insert(key, val);
        self.jet = None;
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Block `B_{ab}` on `e_a(x_i) ∧ e_b(x_j)`.
    pub fn block(&self, i: usize, j: usize) -> Mat2 {
        if i < j {
            self.off.get(&(i, j)).copied().unwrap_or([[0.0; 2]; 2])
        } else {
            let b = self.off.get(&(j, i)).copied().unwrap_or([[0.0; 2]; 2]);
            [[-b[0][0], -b[1][0]], [-b[0][1], -b[1][1]]]
        }
    }

    /// Coefficient on `e_P ∧ e_Q` for flat indices `P = 2·point + frame`.
    pub fn coefficient(&self, p: usize, q: usize) -> f64 {
        let (i, a, j, b) = (p / 2, p % 2, q / 2, q % 2);
        if i == j {
            match (a, b) {
                (0, 1) => self.diag[i],
                (1, 0) => -self.diag[i],
                _ => 0.0,
            }
        } else {
            self.block(i, j)[a][b]
        }
    }

    pub fn inner(&self, o: &Self) -> Result<f64> {
        if self.config != o.config {
            return Err(Error::MismatchedConfiguration);
        }
        let mut s: f64 = self.diag.iter().zip(&o.diag).map(|(a, b)| a * b).sum();
        for (k, b) in &self.off {
            if let Some(c) = o.off.get(k) {
                s += (0..2).map(|a| dot2(&b[a], &c[a])).sum::<f64>();
            }
        }
        Ok(s)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("same γ")
    }

    /// `(d*ω)_Q = −Σ_P (∇_P ω_{PQ} + β_P ω_{PQ})`; needs the derivative data of `d^Γ V`.
    pub fn dstar2_gamma(&self, intensity: &IntensityField) -> Result<GammaTangent> {
        let jet = self.jet.as_ref().ok_or(Error::MissingSliceData)?;
        let lift = LiftedIntensity::new(intensity, &self.config);
        let v = jet.dstar_d(&lift);
        GammaTangent::from_components(&self.config, pairs(&v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;

    fn gamma() -> Configuration {
        Configuration::from_coords(Manifold::FlatTorus, &[[0.1, 0.2], [0.45, 0.8], [0.7, 0.35]]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = Manifold::FlatTorus;
        let phi = ScalarField::coscos();
        let g = gamma();
        let lin = CylinderFunction::linear(&phi).eval(&g);
        assert!((lin - g.pairing(|x| phi.value(m, x))).abs() < 1e-15);
        assert_eq!(CylinderFunction::square(&ScalarField::constant(1.0)).eval(&g), 9.0);
        assert_eq!(CylinderFunction::expneg(&phi).eval(&Configuration::empty(m)), 1.0);
    }

    #[test]
    fn gradient_examples() {
        let m = Manifold::FlatTorus;
        let phi = ScalarField::coscos();
        let g = gamma();
        let s = CylinderFunction::linear(&phi).eval(&g);
        let lin = CylinderFunction::linear(&phi).grad_gamma(&g);
        let sq = CylinderFunction::square(&phi).grad_gamma(&g);
        for (i, x) in g.points().iter().enumerate() {
            let gp = phi.frame_jet(m, x).grad;
            assert_eq!(lin.components()[i], gp);
            assert!((sq.components()[i][0] - 2.0 * s * gp[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_form_blocks_are_antisymmetric() {
        let phi = ScalarField::coscos();
        let v = CylinderOneForm::single(CylinderFunction::square(&phi), OneFormField::gradient(&ScalarField::sin_wave(1, 1.0)));
        let w = v.d1_gamma(&gamma());
        for p in 0..6 {
            for q in 0..6 {
                assert_eq!(w.coefficient(p, q), -w.coefficient(q, p));
            }
        }
        let mut foreign = PairBlockTwoForm::zero(&gamma());
        foreign.set_block(2, 0, [[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(foreign.block(0, 2), [[-1.0, -3.0], [-2.0, -4.0]]);
        let i = IntensityField::constant(Manifold::FlatTorus, 2.0).unwrap();
        assert_eq!(foreign.dstar2_gamma(&i), Err(Error::MissingSliceData));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(multi_indices(&[1, 2]).len(), 6);
    }
}
