//! Intensity measure `σ(dx) = ρ(x) m(dx)` and the one-particle operators it induces.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FrameOneFormJet, OneFormField, ScalarField};
use crate::linalg::{dot2, mat2_vec, sym2_top_eigenvalue, Mat2, Vec2};
use crate::manifold::{Manifold, ManifoldPoint, TangentVector};
use crate::preset::{self, PresetExpr};
use crate::quadrature::Quadrature;

/// Density presets with their parameter signatures, in listing order.
pub const DENSITY_PRESETS: &[&str] = &["constant(lambda)", "cos1(a)", "cos2(a,b)"];

/// Smooth, strictly positive intensity on the whole manifold.
#[derive(Clone, Debug)]
pub struct IntensityField {
    manifold: Manifold,
    name: String,
    rho: ScalarField,
    log_rho: ScalarField,
    quadrature: Quadrature,
    mass: f64,
    sup: f64,
}

impl IntensityField {
    /// Builds an intensity from `ρ` and `log ρ` given as separate analytic fields.
    pub fn new(
        manifold: Manifold,
        name: impl Into<String>,
        rho: ScalarField,
        log_rho: ScalarField,
        grid: [usize; 2],
    ) -> Result<Self> {
        let quadrature = Quadrature::new(manifold, grid);
        let mut top = 0.0_f64;
        for p in quadrature.nodes() {
            let v = rho.value(manifold, p);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveDensity { coords: p.coords(), value: v });
            }
            top = top.max(v);
        }
        let mass = quadrature.integrate(|p| rho.value(manifold, p));
        Ok(Self { manifold, name: name.into(), rho, log_rho, quadrature, mass, sup: 1.1 * top })
    }

    /// `ρ = exp(ψ)` for an analytic exponent `ψ`.
    pub fn from_exponent(manifold: Manifold, name: impl Into<String>, psi: ScalarField, grid: [usize; 2]) -> Result<Self> {
        Self::new(manifold, name, psi.exp(), psi, grid)
    }

    pub fn constant(manifold: Manifold, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonPositiveDensity { coords: [0.0, 0.0], value: lambda });
        }
        Self::new(
            manifold,
            format!("constant({lambda})"),
            ScalarField::constant(lambda),
            ScalarField::constant(lambda.ln()),
            Quadrature::default_grid(manifold),
        )
    }

    /// `ρ = exp(a cos 2πy₀)`.
    pub fn cos1(manifold: Manifold, a: f64) -> Result<Self> {
        Self::from_exponent(
            manifold,
            format!("cos1({a})"),
            ScalarField::cos_wave(0, 1.0).scale(a),
            Quadrature::default_grid(manifold),
        )
    }

    /// `ρ = exp(a cos 2πy₀ + b cos 2πy₁)`.
    pub fn cos2(manifold: Manifold, a: f64, b: f64) -> Result<Self> {
        Self::from_exponent(
            manifold,
            format!("cos2({a},{b})"),
            ScalarField::cos_wave(0, 1.0).scale(a).add(&ScalarField::cos_wave(1, 1.0).scale(b)),
            Quadrature::default_grid(manifold),
        )
    }

    pub fn from_preset(manifold: Manifold, text: &str) -> Result<Self> {
        let e = preset::parse(text)?;
        Self::from_preset_expr(manifold, &e)
    }

    pub fn from_preset_expr(manifold: Manifold, e: &PresetExpr) -> Result<Self> {
        match e.name() {
            Some("constant") => Self::constant(manifold, e.numeric_args(1)?[0]),
            Some("cos1") => Self::cos1(manifold, e.numeric_args(1)?[0]),
            Some("cos2") => {
                let a = e.numeric_args(2)?;
                Self::cos2(manifold, a[0], a[1])
            }
            Some(other) => Err(Error::UnknownPreset(other.to_string())),
            None => Err(Error::UnknownPreset(format!("{e:?}"))),
        }
    }

    /// Same density on a different quadrature grid.
    pub fn with_grid(&self, grid: [usize; 2]) -> Result<Self> {
        Self::new(self.manifold, self.name.clone(), self.rho.clone(), self.log_rho.clone(), grid)
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn log_rho(&self) -> &ScalarField {
        &self.log_rho
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Total mass `σ(X)`.
    pub fn sigma_mass(&self) -> f64 {
        self.mass
    }

    /// Upper bound on `ρ` used as the rejection envelope: grid maximum plus 10%.
    pub fn density_bound(&self) -> f64 {
        self.sup
    }

    pub fn density(&self, x: &ManifoldPoint) -> Result<f64> {
        let v = self.rho.value(self.manifold, x);
        if !(v > 0.0) {
            return Err(Error::NonPositiveDensity { coords: x.coords(), value: v });
        }
        Ok(v)
    }

    /// `∫ f dσ` on the intensity grid.
    pub fn integrate<F: Fn(&ManifoldPoint) -> f64>(&self, f: F) -> f64 {
        let m = self.manifold;
        self.quadrature.integrate(|p| f(p) * self.rho.value(m, p))
    }

    /// `β_σ = ∇ρ/ρ` in frame components.
    pub fn beta(&self, x: &ManifoldPoint) -> Vec2 {
        self.log_rho.frame_jet(self.manifold, x).grad
    }

    pub fn log_derivative(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        self.density(x)?;
        Ok(TangentVector::new(*x, self.beta(x)))
    }

    /// Covariant derivative of `β_σ`, i.e. the Hessian of `log ρ`.
    pub fn beta_derivative(&self, x: &ManifoldPoint) -> Mat2 {
        self.log_rho.frame_jet(self.manifold, x).hess
    }

    /// `H_σ u = −Δu − ⟨β_σ, ∇u⟩`.
    pub fn dirichlet_1p(&self, u: &ScalarField, x: &ManifoldPoint) -> f64 {
        let j = u.frame_jet(self.manifold, x);
        -j.laplacian() - dot2(&self.beta(x), &j.grad)
    }

    /// `H_σ u` for a plain function, by finite differences.
    pub fn dirichlet_1p_fd<F: Fn(&ManifoldPoint) -> f64>(&self, u: F, x: &ManifoldPoint, h: f64) -> f64 {
        let m = self.manifold;
        let g = m.fd_gradient(&u, x, h);
        -m.fd_laplace_beltrami(&u, x, h) - dot2(&self.beta(x), &g.components)
    }

    /// Bochner Laplacian `−tr ∇²ν − ∇_β ν` from a covariant jet.
    pub fn bochner_from_jet(&self, j: &FrameOneFormJet, x: &ManifoldPoint) -> Vec2 {
        let beta = self.beta(x);
        let lap = j.rough_laplacian();
        let mut r = [0.0; 2];
        for b in 0..2 {
            r[b] = -lap[b] - beta[0] * j.d1[0][b] - beta[1] * j.d1[1][b];
        }
        r
    }

    pub fn bochner_1p(&self, nu: &OneFormField, x: &ManifoldPoint) -> TangentVector {
        TangentVector::new(*x, self.bochner_from_jet(&nu.frame_jet(self.manifold, x), x))
    }

    /// `R_σ = Ric − ∇β_σ`.
    pub fn weitzenbock_correction(&self, x: &ManifoldPoint) -> Mat2 {
        let ric = self.manifold.ricci_operator(x);
        let db = self.beta_derivative(x);
        let mut r = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                r[a][b] = ric[a][b] - 0.5 * (db[a][b] + db[b][a]);
            }
        }
        r
    }

    pub fn derham_from_jet(&self, j: &FrameOneFormJet, x: &ManifoldPoint) -> Vec2 {
        let b = self.bochner_from_jet(j, x);
        let c = mat2_vec(&self.weitzenbock_correction(x), &j.value);
        [b[0] + c[0], b[1] + c[1]]
    }

    /// `H^R ν = H^B ν + R_σ ν`.
    pub fn derham_1p(&self, nu: &OneFormField, x: &ManifoldPoint) -> TangentVector {
        TangentVector::new(*x, self.derham_from_jet(&nu.frame_jet(self.manifold, x), x))
    }

    /// `d d*_σ ν` with `d*_σ ν = −div ν − ⟨β, ν⟩`.
    pub fn d_dstar_1p(&self, nu: &OneFormField, x: &ManifoldPoint) -> Vec2 {
        let j = nu.frame_jet(self.manifold, x);
        let beta = self.beta(x);
        let db = self.beta_derivative(x);
        let mut r = [0.0; 2];
        for c in 0..2 {
            let ddiv = j.d2[c][0][0] + j.d2[c][1][1];
            let dbeta_nu: f64 = (0..2).map(|a| db[c][a] * j.value[a] + beta[a] * j.d1[c][a]).sum();
            r[c] = -ddiv - dbeta_nu;
        }
        r
    }

    /// `d*_σ d ν` with `dν = curl ν · e1∧e2`.
    pub fn dstar_d_1p(&self, nu: &OneFormField, x: &ManifoldPoint) -> Vec2 {
        let j = nu.frame_jet(self.manifold, x);
        let beta = self.beta(x);
        let curl = j.curl();
        let dcurl = [j.d2[0][0][1] - j.d2[0][1][0], j.d2[1][0][1] - j.d2[1][1][0]];
        [dcurl[1] + beta[1] * curl, -(dcurl[0] + beta[0] * curl)]
    }

    /// `d d*_σ ν + d*_σ d ν` assembled directly from the exterior derivative and
    /// its weighted adjoint, without the curvature identity.
    pub fn hodge_1p(&self, nu: &OneFormField, x: &ManifoldPoint) -> TangentVector {
        let a = self.d_dstar_1p(nu, x);
        let b = self.dstar_d_1p(nu, x);
        TangentVector::new(*x, [a[0] + b[0], a[1] + b[1]])
    }

    /// `d d*_σ + d*_σ d` by nested central differences in an orthogonal chart,
    /// using only values of `ν` and `ρ`. Steps `h` and `h/2` are combined by
    /// Richardson extrapolation.
    pub fn hodge_1p_fd(&self, nu: &OneFormField, x: &ManifoldPoint, h: f64) -> Vec2 {
        let a = self.hodge_1p_fd_step(nu, x, h);
        let b = self.hodge_1p_fd_step(nu, x, 0.5 * h);
        [(4.0 * b[0] - a[0]) / 3.0, (4.0 * b[1] - a[1]) / 3.0]
    }

    fn hodge_1p_fd_step(&self, nu: &OneFormField, x: &ManifoldPoint, h: f64) -> Vec2 {
        let m = self.manifold;
        let chart = OrthogonalChart::new(m);
        let q0 = chart.to_q(x);
        let rho = |q: [f64; 2]| self.rho.value(m, &chart.point(q));
        // Coordinate components ν_i = h_i ν(e_i).
        let nu_q = |q: [f64; 2]| {
            let v = nu.value(m, &chart.point(q));
            let s = chart.scale(q);
            [s[0] * v[0], s[1] * v[1]]
        };
        let d = |f: &dyn Fn([f64; 2]) -> f64, q: [f64; 2], i: usize| {
            let mut qp = q;
            let mut qm = q;
            qp[i] += h;
            qm[i] -= h;
            (f(qp) - f(qm)) / (2.0 * h)
        };
        // Scalar d*ν = −(ρ√g)⁻¹ Σ ∂_i(ρ √g g^{ii} ν_i).
        let dstar = |q: [f64; 2]| {
            let flux = |i: usize| {
                move |p: [f64; 2]| {
                    let s = chart.scale(p);
                    rho(p) * s[0] * s[1] / (s[i] * s[i]) * nu_q(p)[i]
                }
            };
            let s = chart.scale(q);
            let f0 = flux(0);
            let f1 = flux(1);
            -(d(&f0, q, 0) + d(&f1, q, 1)) / (rho(q) * s[0] * s[1])
        };
        // Orthonormal coefficient of dν on e1∧e2.
        let curl = |q: [f64; 2]| {
            let n0 = |p: [f64; 2]| nu_q(p)[0];
            let n1 = |p: [f64; 2]| nu_q(p)[1];
            let s = chart.scale(q);
            (d(&n1, q, 0) - d(&n0, q, 1)) / (s[0] * s[1])
        };
        let s = chart.scale(q0);
        let rho_curl = |q: [f64; 2]| rho(q) * curl(q);
        let r0 = rho(q0);
        [
            d(&dstar, q0, 0) / s[0] + d(&rho_curl, q0, 1) / (r0 * s[1]),
            d(&dstar, q0, 1) / s[1] - d(&rho_curl, q0, 0) / (r0 * s[0]),
        ]
    }
}

/// Orthogonal chart `q` whose coordinate vectors are `h_i e_i`.
#[derive(Clone, Copy)]
struct OrthogonalChart {
    m: Manifold,
}

impl OrthogonalChart {
    fn new(m: Manifold) -> Self {
        Self { m }
    }

    /// Torus: `q = (x1, x2)`. Sphere: `q = (lon, lat)`.
    fn to_q(&self, x: &ManifoldPoint) -> [f64; 2] {
        let c = x.coords();
        match self.m {
            Manifold::FlatTorus => c,
            Manifold::UnitSphere => [c[1], c[0]],
        }
    }

    fn point(&self, q: [f64; 2]) -> ManifoldPoint {
        match self.m {
            Manifold::FlatTorus => ManifoldPoint { coords: [q[0].rem_euclid(1.0), q[1].rem_euclid(1.0)] },
            Manifold::UnitSphere => ManifoldPoint { coords: [q[1], q[0]] },
        }
    }

    fn scale(&self, q: [f64; 2]) -> [f64; 2] {
        match self.m {
            Manifold::FlatTorus => [1.0, 1.0],
            Manifold::UnitSphere => [q[1].cos(), 1.0],
        }
    }
}

type OperatorFn = dyn Fn(&ManifoldPoint) -> Mat2 + Send + Sync;

/// Symmetric endomorphism field `x ↦ J(x)` with an estimated spectral bound.
#[derive(Clone)]
pub struct OperatorField {
    name: String,
    manifold: Manifold,
    map: Arc<OperatorFn>,
    bound: f64,
}

impl fmt::Debug for OperatorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorField({}, C={})", self.name, self.bound)
    }
}

/// Side of the sample grid used to estimate the spectral bound.
pub const BOUND_SAMPLE_GRID: usize = 128;

impl OperatorField {
    /// The bound `C` is the largest top eigenvalue over a 128×128 grid plus a
    /// 10% margin. It is an estimate, not a proof.
    pub fn new(name: impl Into<String>, manifold: Manifold, map: impl Fn(&ManifoldPoint) -> Mat2 + Send + Sync + 'static) -> Self {
        let n = BOUND_SAMPLE_GRID;
        let mut top = f64::NEG_INFINITY;
        for i in 0..n {
            for k in 0..n {
                let (u, v) = ((i as f64 + 0.5) / n as f64, (k as f64 + 0.5) / n as f64);
                let p = match manifold {
                    Manifold::FlatTorus => ManifoldPoint { coords: [u, v] },
                    Manifold::UnitSphere => ManifoldPoint {
                        coords: [(2.0 * u - 1.0).asin(), std::f64::consts::PI * (2.0 * v - 1.0)],
                    },
                };
                top = top.max(sym2_top_eigenvalue(&map(&p)));
            }
        }
        let bound = top + 0.1 * top.abs();
        Self { name: name.into(), manifold, map: Arc::new(map), bound }
    }

    pub fn zero(manifold: Manifold) -> Self {
        Self { name: "zero".into(), manifold, map: Arc::new(|_| [[0.0; 2]; 2]), bound: 0.0 }
    }

    /// `s · R_σ`.
    pub fn weitzenbock(intensity: &IntensityField, s: f64) -> Self {
        let i = intensity.clone();
        let name = if s == 1.0 { "weitzenbock".to_string() } else { format!("{s}*weitzenbock") };
        Self::new(name, intensity.manifold(), move |x| {
            let r = i.weitzenbock_correction(x);
            [[s * r[0][0], s * r[0][1]], [s * r[1][0], s * r[1][1]]]
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn at(&self, x: &ManifoldPoint) -> Mat2 {
        (self.map)(x)
    }

    pub fn apply(&self, x: &ManifoldPoint, v: &Vec2) -> Vec2 {
        mat2_vec(&self.at(x), v)
    }

    pub fn asymmetry(&self, x: &ManifoldPoint) -> f64 {
        let j = self.at(x);
        (j[0][1] - j[1][0]).abs()
    }
}
