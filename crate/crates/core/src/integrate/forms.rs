//! Observables of the lifted calculus: every pairing used by the identity
//! checks, rewritten in distinct-tuple normal form.
//!
//! For a cylinder 1-form `V(γ)_y = Σ_k F_k(γ∖{y}) ν_k(y)` the derivative of
//! `V` at `(p, y)` has a diagonal block `F_k(γ∖{y}) ∇ν_k(y)` and, for `p ≠ y`,
//! the off-diagonal block `Σ_i ∂_iF_k(γ∖{y}) ∇φ_i(p) ⊗ ν_k(y)`.

use super::observable::{field_fn, point_fn, Observable, PointFn, Slot};
use crate::cylinder::{CylinderFunction, CylinderOneForm};
use crate::field::{OneFormField, ScalarField};
use crate::intensity::IntensityField;
use crate::linalg::{dot2, mat2_vec};
use crate::manifold::{Manifold, ManifoldPoint};
use crate::quadrature::Quadrature;

/// Which one-particle Laplacian the lifted operator is built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Laplacian {
    Bochner,
    DeRham,
}

pub fn function(m: Manifold, f: &CylinderFunction) -> Observable {
    Observable::from_cylinder(m, f)
}

/// The cylinder function `∂_i g(⟨φ,γ⟩)`.
pub fn partial(f: &CylinderFunction, i: usize) -> CylinderFunction {
    CylinderFunction::new(format!("d{i}{}", f.name()), f.partial_outer(i).clone(), f.inner().to_vec()).expect("same arity")
}

fn grad_dot_grad(m: Manifold, a: &ScalarField, b: &ScalarField) -> PointFn {
    let (a, b) = (a.clone(), b.clone());
    point_fn(move |x| dot2(&a.frame_jet(m, x).grad, &b.frame_jet(m, x).grad))
}

fn grad_dot_form(m: Manifold, a: &ScalarField, nu: &OneFormField) -> PointFn {
    let (a, nu) = (a.clone(), nu.clone());
    point_fn(move |x| dot2(&a.frame_jet(m, x).grad, &nu.value(m, x)))
}

fn form_dot_form(m: Manifold, a: &OneFormField, b: &OneFormField) -> PointFn {
    let (a, b) = (a.clone(), b.clone());
    point_fn(move |x| dot2(&a.value(m, x), &b.value(m, x)))
}

/// `H_{π_σ} F = Σ_x [−Σ_ij ∂_ij g ⟨∇φ_i, ∇φ_j⟩ + Σ_i ∂_i g H_σφ_i](x)`.
pub fn generator(intensity: &IntensityField, f: &CylinderFunction) -> Observable {
    let m = intensity.manifold();
    let n = f.inner().len();
    let mut parts = Vec::new();
    for i in 0..n {
        let fi = partial(f, i);
        let phi = f.inner()[i].clone();
        let sigma = intensity.clone();
        let h = point_fn(move |x| sigma.dirichlet_1p(&phi, x));
        parts.push(Observable::linear(h).mul(&function(m, &fi)));
        for j in 0..n {
            let fij = partial(&fi, j);
            let g = grad_dot_grad(m, &f.inner()[i], &f.inner()[j]);
            parts.push(Observable::linear(g).mul(&function(m, &fij)).scale(-1.0));
        }
    }
    Observable::sum(parts)
}

/// `⟨∇^Γ F₁, ∇^Γ F₂⟩_γ`.
pub fn gradient_pairing(m: Manifold, f1: &CylinderFunction, f2: &CylinderFunction) -> Observable {
    let mut parts = Vec::new();
    for (i, a) in f1.inner().iter().enumerate() {
        let g1 = function(m, &partial(f1, i));
        for (j, b) in f2.inner().iter().enumerate() {
            let g2 = function(m, &partial(f2, j));
            parts.push(Observable::linear(grad_dot_grad(m, a, b)).mul(&g1).mul(&g2));
        }
    }
    Observable::sum(parts)
}

/// `∇_V F = Σ_x ⟨∇^Γ_x F(γ), V(γ)_x⟩`. The gradient is taken on the full
/// configuration, so `∂_i g` is re-expanded around the removed point.
pub fn directional(m: Manifold, f: &CylinderFunction, v: &CylinderOneForm) -> Observable {
    let mut parts = Vec::new();
    for (i, phi) in f.inner().iter().enumerate() {
        let expanded = function(m, &partial(f, i)).insert_symbolic();
        for (fk, nu) in v.terms() {
            let a = grad_dot_form(m, phi, nu);
            let k = function(m, fk);
            for (h, rest) in &expanded {
                let mut slot = h.clone();
                slot.push(a.clone());
                parts.push(rest.mul(&k).attach(&[slot]));
            }
        }
    }
    Observable::sum(parts)
}

fn per_term(v: &CylinderOneForm, m: Manifold, slot: impl Fn(&OneFormField) -> PointFn) -> Observable {
    Observable::sum(v.terms().iter().map(|(fk, nu)| function(m, fk).attach(&[vec![slot(nu)]])))
}

/// `div^Γ V`.
pub fn divergence(m: Manifold, v: &CylinderOneForm) -> Observable {
    per_term(v, m, |nu| {
        let nu = nu.clone();
        point_fn(move |x| nu.frame_jet(m, x).divergence())
    })
}

/// `⟨B_{π_σ}, V⟩_γ`.
pub fn beta_pairing(intensity: &IntensityField, v: &CylinderOneForm) -> Observable {
    let m = intensity.manifold();
    per_term(v, m, |nu| {
        let (nu, s) = (nu.clone(), intensity.clone());
        point_fn(move |x| dot2(&s.beta(x), &nu.value(m, x)))
    })
}

/// `d*V = −div^Γ V − ⟨B_{π_σ}, V⟩_γ`.
pub fn dstar(intensity: &IntensityField, v: &CylinderOneForm) -> Observable {
    let m = intensity.manifold();
    per_term(v, m, |nu| {
        let (nu, s) = (nu.clone(), intensity.clone());
        point_fn(move |x| {
            let j = nu.frame_jet(m, x);
            -j.divergence() - dot2(&s.beta(x), &j.value)
        })
    })
}

fn pair_terms(
    m: Manifold,
    v1: &CylinderOneForm,
    v2: &CylinderOneForm,
    slot: impl Fn(&OneFormField, &OneFormField) -> PointFn,
) -> Observable {
    let mut parts = Vec::new();
    for (f, nu) in v1.terms() {
        for (g, mu) in v2.terms() {
            parts.push(function(m, f).mul(&function(m, g)).attach(&[vec![slot(nu, mu)]]));
        }
    }
    Observable::sum(parts)
}

/// `⟨V₁, V₂⟩_γ`.
pub fn pairing(m: Manifold, v1: &CylinderOneForm, v2: &CylinderOneForm) -> Observable {
    pair_terms(m, v1, v2, |a, b| form_dot_form(m, a, b))
}

/// `⟨H V₁, V₂⟩_γ` with `H V = Σ_k (H_{π_σ}F_k) ν_k + F_k H_σ ν_k` on each slice.
pub fn lifted_pairing(intensity: &IntensityField, v1: &CylinderOneForm, v2: &CylinderOneForm, op: Laplacian) -> Observable {
    let m = intensity.manifold();
    let mut parts = Vec::new();
    for (f, nu) in v1.terms() {
        let hf = generator(intensity, f);
        for (g, mu) in v2.terms() {
            let fg = function(m, g);
            parts.push(hf.mul(&fg).attach(&[vec![form_dot_form(m, nu, mu)]]));
            let (s, nu, mu) = (intensity.clone(), nu.clone(), mu.clone());
            let h = point_fn(move |x| {
                let j = nu.frame_jet(m, x);
                let hv = match op {
                    Laplacian::Bochner => s.bochner_from_jet(&j, x),
                    Laplacian::DeRham => s.derham_from_jet(&j, x),
                };
                dot2(&hv, &mu.value(m, x))
            });
            parts.push(function(m, f).mul(&fg).attach(&[vec![h]]));
        }
    }
    Observable::sum(parts)
}

/// `⟨R_σ V₁, V₂⟩_γ`.
pub fn correction_pairing(intensity: &IntensityField, v1: &CylinderOneForm, v2: &CylinderOneForm) -> Observable {
    let m = intensity.manifold();
    pair_terms(m, v1, v2, |a, b| {
        let (s, a, b) = (intensity.clone(), a.clone(), b.clone());
        point_fn(move |x| dot2(&mat2_vec(&s.weitzenbock_correction(x), &a.value(m, x)), &b.value(m, x)))
    })
}

/// `Σ_{P,Q} (∇V₁)_{PQ} (∇V₂)_{PQ}`, the Bochner form integrand.
pub fn covariant_pairing(m: Manifold, v1: &CylinderOneForm, v2: &CylinderOneForm) -> Observable {
    let diag = pair_terms(m, v1, v2, |a, b| {
        let (a, b) = (a.clone(), b.clone());
        point_fn(move |x| {
            let (ja, jb) = (a.frame_jet(m, x), b.frame_jet(m, x));
            (0..2).flat_map(|c| (0..2).map(move |d| (c, d))).map(|(c, d)| ja.d1[c][d] * jb.d1[c][d]).sum()
        })
    });
    let mut parts = vec![diag];
    for (f, nu) in v1.terms() {
        for (g, mu) in v2.terms() {
            let w = form_dot_form(m, nu, mu);
            for (i, phi) in f.inner().iter().enumerate() {
                let fi = function(m, &partial(f, i));
                for (j, psi) in g.inner().iter().enumerate() {
                    let gj = function(m, &partial(g, j));
                    let inner = Observable::linear(grad_dot_grad(m, phi, psi)).mul(&fi).mul(&gj);
                    parts.push(inner.attach(&[vec![w.clone()]]));
                }
            }
        }
    }
    Observable::sum(parts)
}

/// `Σ_{P,Q} (∇V₁)_{PQ} (∇V₂)_{QP}`.
pub fn transposed_pairing(m: Manifold, v1: &CylinderOneForm, v2: &CylinderOneForm) -> Observable {
    let diag = pair_terms(m, v1, v2, |a, b| {
        let (a, b) = (a.clone(), b.clone());
        point_fn(move |x| {
            let (ja, jb) = (a.frame_jet(m, x), b.frame_jet(m, x));
            (0..2).flat_map(|c| (0..2).map(move |d| (c, d))).map(|(c, d)| ja.d1[c][d] * jb.d1[d][c]).sum()
        })
    });
    let mut parts = vec![diag];
    // p ≠ y: ⟨∇φ_i, μ_l⟩(p) ⟨ν_k, ∇ψ_j⟩(y) ∂_iF_k(γ∖{y}) ∂_jG_l(γ∖{p}).
    for (f, nu) in v1.terms() {
        for (g, mu) in v2.terms() {
            for (i, phi) in f.inner().iter().enumerate() {
                let at_p = grad_dot_form(m, phi, mu);
                let fi = function(m, &partial(f, i)).insert_symbolic();
                for (j, psi) in g.inner().iter().enumerate() {
                    let at_y = grad_dot_form(m, psi, nu);
                    let gj = function(m, &partial(g, j)).insert_symbolic();
                    for (hp, a) in &fi {
                        for (hy, b) in &gj {
                            let mut sp: Slot = hp.clone();
                            sp.push(at_p.clone());
                            let mut sy: Slot = hy.clone();
                            sy.push(at_y.clone());
                            parts.push(a.mul(b).attach(&[sp, sy]));
                        }
                    }
                }
            }
        }
    }
    Observable::sum(parts)
}

/// `⟨dV₁, dV₂⟩_{∧²}` with `(dV)_{PQ} = (∇V)_{PQ} − (∇V)_{QP}` summed over `P < Q`.
pub fn exterior_pairing(m: Manifold, v1: &CylinderOneForm, v2: &CylinderOneForm) -> Observable {
    covariant_pairing(m, v1, v2).add(&transposed_pairing(m, v1, v2).scale(-1.0))
}

/// `∫ f dσ` on a tensor grid.
pub fn sigma_integral(intensity: &IntensityField, grid: [usize; 2], f: impl Fn(&ManifoldPoint) -> f64) -> f64 {
    let m = intensity.manifold();
    Quadrature::new(m, grid).integrate(|x| f(x) * intensity.rho().value(m, x))
}

/// `⟨a, b⟩_σ`.
pub fn sigma_pairing(intensity: &IntensityField, grid: [usize; 2], a: &OneFormField, b: &OneFormField) -> f64 {
    let m = intensity.manifold();
    sigma_integral(intensity, grid, |x| dot2(&a.value(m, x), &b.value(m, x)))
}

pub fn scalar_slot(m: Manifold, f: &ScalarField) -> Slot {
    vec![field_fn(m, f)]
}
