//! Identity checks evaluated with the exact series.

use serde::Serialize;

use super::forms::{self, Laplacian};
use super::observable::{eval_slot, Observable, Slot, Term};
use super::series::{default_grid, expect_series, SeriesOptions};
use crate::configuration::{Configuration, GammaTangent};
use crate::cylinder::{weitzenbock_field_apply, CylinderFunction, CylinderOneForm};
use crate::error::Result;
use crate::intensity::IntensityField;

pub const CSV_HEADER: &str = "check,lhs,rhs,residual,tol,pass,seed,grid,K";

/// One checker outcome. `routes` lists every independently computed value;
/// `lhs` and `rhs` are the first two and `residual` is the largest deviation
/// of any route from the first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub grid: Option<[usize; 2]>,
    pub k: Option<usize>,
    pub routes: Vec<(String, f64)>,
}

impl CheckReport {
    pub fn from_routes(check: impl Into<String>, routes: Vec<(String, f64)>, tol: f64, grid: [usize; 2], k: usize) -> Self {
        let lhs = routes.first().map_or(0.0, |r| r.1);
        let rhs = routes.get(1).map_or(lhs, |r| r.1);
        let residual = routes.iter().map(|r| (r.1 - lhs).abs()).fold(0.0, f64::max);
        let pass = residual <= tol && routes.iter().all(|r| r.1.is_finite());
        Self { check: check.into(), lhs, rhs, residual, tol, pass, seed: None, grid: Some(grid), k: Some(k), routes }
    }

    pub fn csv_row(&self) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        let grid = self.grid.map(|g| format!("{}x{}", g[0], g[1])).unwrap_or_default();
        let k = self.k.map(|k| k.to_string()).unwrap_or_default();
        let check = if self.check.contains([',', '"', '\n']) {
            format!("\"{}\"", self.check.replace('"', "\"\""))
        } else {
            self.check.clone()
        };
        format!("{},{:e},{:e},{:e},{:e},{},{},{},{}", check, self.lhs, self.rhs, self.residual, self.tol, self.pass, seed, grid, k)
    }
}

/// Series evaluator that records the grid and the largest truncation order used.
struct Eval<'a> {
    intensity: &'a IntensityField,
    opts: SeriesOptions,
    grid: [usize; 2],
    k: usize,
}

impl<'a> Eval<'a> {
    fn new(intensity: &'a IntensityField, opts: &SeriesOptions) -> Self {
        let grid = opts.grid.unwrap_or_else(|| default_grid(intensity.manifold()));
        Self { intensity, opts: SeriesOptions { grid: Some(grid), ..*opts }, grid, k: 0 }
    }

    fn e(&mut self, obs: &Observable) -> Result<f64> {
        let r = expect_series(self.intensity, obs, &self.opts)?;
        self.k = self.k.max(r.k);
        Ok(r.value)
    }

    fn sigma(&self, a: &Slot) -> f64 {
        forms::sigma_integral(self.intensity, self.grid, |x| eval_slot(a, x))
    }

    fn report(&self, check: &str, routes: Vec<(&str, f64)>, tol: f64) -> CheckReport {
        let routes = routes.into_iter().map(|(n, v)| (n.to_string(), v)).collect();
        CheckReport::from_routes(check, routes, tol, self.grid, self.k)
    }
}

#[derive(Clone, Debug)]
enum MeckePart {
    /// `a(x) K(γ ∖ {x})`.
    Removed,
    /// `a(x) K(γ)`.
    Full,
}

/// `f(γ, x) = Σ_m a_m(x) K_m(γ ∖ {x})` or `a_m(x) K_m(γ)`.
#[derive(Clone, Default)]
pub struct MeckeIntegrand {
    parts: Vec<(Slot, Observable, MeckePart)>,
}

impl std::fmt::Debug for MeckeIntegrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.parts.iter().map(|(a, k, p)| (a.len(), k, p))).finish()
    }
}

impl MeckeIntegrand {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn removed(mut self, a: Slot, k: Observable) -> Self {
        self.parts.push((a, k, MeckePart::Removed));
        self
    }

    pub fn full(mut self, a: Slot, k: Observable) -> Self {
        self.parts.push((a, k, MeckePart::Full));
        self
    }
}

/// `E Σ_{x∈γ} f(γ, x)` against `E ∫ f(γ ∪ {x}, x) σ(dx)`.
pub fn check_mecke(intensity: &IntensityField, f: &MeckeIntegrand, tol: f64, opts: &SeriesOptions) -> Result<CheckReport> {
    let mut ev = Eval::new(intensity, opts);
    let mut lhs = Observable::zero();
    let mut rhs = 0.0;
    for (a, k, part) in &f.parts {
        match part {
            MeckePart::Removed => {
                lhs = lhs.add(&k.attach(std::slice::from_ref(a)));
                rhs += ev.sigma(a) * ev.e(k)?;
            }
            MeckePart::Full => {
                let sum_a = Observable::from_terms(vec![Term { coef: 1.0, slots: vec![a.clone()], tilt: Vec::new() }]);
                lhs = lhs.add(&sum_a.mul(k));
                for (h, km) in k.insert_symbolic() {
                    let mut ah = a.clone();
                    ah.extend(h);
                    rhs += ev.sigma(&ah) * ev.e(&km)?;
                }
            }
        }
    }
    let lhs = ev.e(&lhs)?;
    Ok(ev.report("mecke", vec![("sum_over_points", lhs), ("integral_of_inserted", rhs)], tol))
}

/// `E[∇_V F₁·F₂] + E[F₁·∇_V F₂] = −E[F₁F₂(⟨B,V⟩ + div V)]`.
pub fn check_ibp(
    intensity: &IntensityField,
    f1: &CylinderFunction,
    f2: &CylinderFunction,
    v: &CylinderOneForm,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<CheckReport> {
    let m = intensity.manifold();
    let mut ev = Eval::new(intensity, opts);
    let (o1, o2) = (forms::function(m, f1), forms::function(m, f2));
    let derivs = forms::directional(m, f1, v).mul(&o2).add(&o1.mul(&forms::directional(m, f2, v)));
    let weight = forms::beta_pairing(intensity, v).add(&forms::divergence(m, v));
    let lhs = ev.e(&derivs)?;
    let rhs = -ev.e(&o1.mul(&o2).mul(&weight))?;
    Ok(ev.report("ibp", vec![("derivative_terms", lhs), ("weight_term", rhs)], tol))
}

/// `E⟨∇F₁, ∇F₂⟩` against `E[(H F₁) F₂]` and `E[F₁ (H F₂)]`.
pub fn check_dirichlet_form(
    intensity: &IntensityField,
    f1: &CylinderFunction,
    f2: &CylinderFunction,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<CheckReport> {
    let m = intensity.manifold();
    let mut ev = Eval::new(intensity, opts);
    let grad = ev.e(&forms::gradient_pairing(m, f1, f2))?;
    let h1 = ev.e(&forms::generator(intensity, f1).mul(&forms::function(m, f2)))?;
    let h2 = ev.e(&forms::function(m, f1).mul(&forms::generator(intensity, f2)))?;
    Ok(ev.report("dirichlet_form", vec![("gradient_pairing", grad), ("generator_left", h1), ("generator_right", h2)], tol))
}

/// `Σ_{k,l} E[F_k G_l] ⟨H ν_k, μ_l⟩_σ + ℰ_π(F_k, G_l) ⟨ν_k, μ_l⟩_σ`.
fn isomorphism_route(ev: &mut Eval, v1: &CylinderOneForm, v2: &CylinderOneForm, op: Laplacian) -> Result<f64> {
    let s = ev.intensity.clone();
    let m = s.manifold();
    let mut total = 0.0;
    for (f, nu) in v1.terms() {
        for (g, mu) in v2.terms() {
            let ff = ev.e(&forms::function(m, f).mul(&forms::function(m, g)))?;
            let ef = ev.e(&forms::gradient_pairing(m, f, g))?;
            let h_pair = forms::sigma_integral(&s, ev.grid, |x| {
                let j = nu.frame_jet(m, x);
                let hv = match op {
                    Laplacian::Bochner => s.bochner_from_jet(&j, x),
                    Laplacian::DeRham => s.derham_from_jet(&j, x),
                };
                crate::linalg::dot2(&hv, &mu.value(m, x))
            });
            total += ff * h_pair + ef * forms::sigma_pairing(&s, ev.grid, nu, mu);
        }
    }
    Ok(total)
}

/// `E⟨∇V₁, ∇V₂⟩` against `E⟨H^B V₁, V₂⟩`, `E⟨V₁, H^B V₂⟩` and the
/// one-particle factorization.
pub fn check_bochner_form(
    intensity: &IntensityField,
    v1: &CylinderOneForm,
    v2: &CylinderOneForm,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<CheckReport> {
    let m = intensity.manifold();
    let mut ev = Eval::new(intensity, opts);
    let direct = ev.e(&forms::covariant_pairing(m, v1, v2))?;
    let lifted = ev.e(&forms::lifted_pairing(intensity, v1, v2, Laplacian::Bochner))?;
    let swapped = ev.e(&forms::lifted_pairing(intensity, v2, v1, Laplacian::Bochner))?;
    let iso = isomorphism_route(&mut ev, v1, v2, Laplacian::Bochner)?;
    Ok(ev.report(
        "bochner_form",
        vec![("covariant_pairing", direct), ("lifted_operator", lifted), ("lifted_operator_swapped", swapped), ("factorized", iso)],
        tol,
    ))
}

/// `E[⟨dV₁, dV₂⟩ + d*V₁ d*V₂]` against `E⟨H^R V₁, V₂⟩`, the Weitzenböck route
/// `E⟨H^B V₁ + R_σ V₁, V₂⟩` and the one-particle factorization.
pub fn check_derham_form(
    intensity: &IntensityField,
    v1: &CylinderOneForm,
    v2: &CylinderOneForm,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<CheckReport> {
    let m = intensity.manifold();
    let mut ev = Eval::new(intensity, opts);
    let form = ev.e(&forms::exterior_pairing(m, v1, v2).add(&forms::dstar(intensity, v1).mul(&forms::dstar(intensity, v2))))?;
    let lifted = ev.e(&forms::lifted_pairing(intensity, v1, v2, Laplacian::DeRham))?;
    let weitz = ev.e(
        &forms::lifted_pairing(intensity, v1, v2, Laplacian::Bochner).add(&forms::correction_pairing(intensity, v1, v2)),
    )?;
    let iso = isomorphism_route(&mut ev, v1, v2, Laplacian::DeRham)?;
    Ok(ev.report(
        "derham_form",
        vec![("exterior_pairing", form), ("lifted_operator", lifted), ("weitzenbock", weitz), ("factorized", iso)],
        tol,
    ))
}

/// For `V = ∇F`: `ℰ^R(V, V) = E[(H F)²]`, with `E|dV|²` reported as a route
/// that must vanish.
pub fn check_derham_gradient(intensity: &IntensityField, f: &CylinderFunction, tol: f64, opts: &SeriesOptions) -> Result<CheckReport> {
    let m = intensity.manifold();
    let v = f.grad_as_one_form();
    let mut ev = Eval::new(intensity, opts);
    let dd = ev.e(&forms::exterior_pairing(m, &v, &v))?;
    let ds = forms::dstar(intensity, &v);
    let form = dd + ev.e(&ds.mul(&ds))?;
    let h = forms::generator(intensity, f);
    let hh = ev.e(&h.mul(&h))?;
    let mut r = ev.report("derham_gradient", vec![("derham_form", form), ("generator_squared", hh)], tol);
    r.routes.push(("exterior_part".into(), dd));
    r.residual = r.residual.max(dd.abs());
    r.pass = r.residual <= tol;
    Ok(r)
}

/// Pointwise `H^R V(γ) = H^B V(γ) + R_σ(γ)V(γ)`.
///
/// Routes: `d d* + d* d` and `∇*∇` assembled on `Xⁿ`, and the factorized
/// de Rham and Bochner operators. The residual is the largest component
/// deviation from the first route; route values are `γ`-norms.
pub fn check_weitzenbock(intensity: &IntensityField, v: &CylinderOneForm, gamma: &Configuration, tol: f64) -> CheckReport {
    let hodge = v.hodge_gamma(intensity, gamma);
    let curv = weitzenbock_field_apply(intensity, &v.eval(gamma));
    let plus = |a: &GammaTangent| a.add(&curv).expect("same γ");
    let routes = [
        ("hodge_product", hodge.clone()),
        ("bochner_product_plus_curvature", plus(&v.bochner_gamma_product(intensity, gamma))),
        ("derham_factorized", v.derham_gamma(intensity, gamma)),
        ("bochner_factorized_plus_curvature", plus(&v.bochner_gamma(intensity, gamma))),
    ];
    let flat = |a: &GammaTangent| a.components().iter().flatten().copied().collect::<Vec<f64>>();
    let base = flat(&hodge);
    let mut residual = 0.0f64;
    let mut finite = true;
    for (_, r) in &routes {
        for (a, b) in flat(r).iter().zip(&base) {
            finite &= a.is_finite();
            residual = residual.max((a - b).abs());
        }
    }
    let routes: Vec<(String, f64)> = routes.iter().map(|(n, r)| (n.to_string(), r.norm_sq().sqrt())).collect();
    CheckReport {
        check: "weitzenbock".into(),
        lhs: routes[0].1,
        rhs: routes[1].1,
        residual,
        tol,
        pass: finite && residual <= tol,
        seed: None,
        grid: None,
        k: None,
        routes,
    }
}
