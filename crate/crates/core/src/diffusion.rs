//! Independent particle diffusion, parallel translation with potential and
//! Monte Carlo estimators of the semigroups on functions and 1-forms.
//!
//! One step is `x ↦ exp_x(β_σ(x)·dt + √(2dt)·ξ)`, whose generator is `Δ + ⟨β_σ, ∇⟩ = −H_σ`.
//! [`NoiseScale::Unit`] gives the `√dt` variant with generator `½Δ + ⟨β_σ, ∇⟩`.
//!
//! Generator checks compare `(V − T(t)V)/t` with the analytic operator at `γ`.
//! By Dynkin's formula `(V − T(t)V)/t = t⁻¹∫₀ᵗ T(s)HV ds`, so the O(t) bias is
//! measured on the same paths by a Simpson average of `T(s)HV` and enters the
//! budget directly.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::configuration::{Configuration, GammaTangent};
use crate::cylinder::{CylinderFunction, CylinderOneForm};
use crate::error::{Error, Result};
use crate::field::OneFormField;
use crate::integrate::CheckReport;
use crate::intensity::{IntensityField, OperatorField};
use crate::linalg::{mat2_mul, mat2_transpose, mat2_vec, Mat2, Vec2, IDENTITY2};
use crate::manifold::{ManifoldPoint, TangentVector};
use crate::rng::{stream, with_workers};

pub const DEFAULT_T: f64 = 0.01;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_PATHS: usize = 100_000;

/// Particles per path addressable by the stream layout `path << 20 | particle`.
pub const MAX_PARTICLES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseScale {
    /// `√(2dt)·ξ`: generator `−H_σ`.
    Generator,
    /// `√dt·ξ`: generator `½Δ + ⟨β_σ, ∇⟩`.
    Unit,
    /// No noise: the drift flow of `β_σ`.
    Zero,
}

impl NoiseScale {
    pub fn factor(self, dt: f64) -> f64 {
        match self {
            NoiseScale::Generator => (2.0 * dt).sqrt(),
            NoiseScale::Unit => dt.sqrt(),
            NoiseScale::Zero => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOptions {
    pub t: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub noise: NoiseScale,
    pub scheme: TransportScheme,
}

/// Discretization of `Dη/dt = J(η)` along a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TransportScheme {
    /// `η_{k+1} = T_k (Id + dt·J(x_k)) η_k`.
    #[default]
    Splitting,
    /// `η_{k+1} = T_k (Id + A + ½A²) η_k` with `A = ½dt·(J(x_k) + T_kᵀJ(x_{k+1})T_k)`.
    Midpoint,
}

impl PathOptions {
    pub fn new(t: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        Self { t, dt, n_paths, seed, noise: NoiseScale::Generator, scheme: TransportScheme::Splitting }
    }

    /// Number of Euler steps, `t/dt` rounded.
    pub fn steps(&self) -> usize {
        (self.t / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be non-negative, got {}", self.t)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be positive".into()));
        }
        let m = self.steps() as f64;
        if (m * self.dt - self.t).abs() > 1e-9 * self.t.max(1.0) {
            return Err(Error::InvalidParameter(format!("t = {} is not a multiple of dt = {}", self.t, self.dt)));
        }
        Ok(())
    }
}

pub fn gaussian2<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

/// The tangent step `β_σ(x)·dt + scale·ξ` at `x`.
pub fn step_vector(intensity: &IntensityField, x: &ManifoldPoint, dt: f64, xi: Vec2, scale: f64) -> TangentVector {
    let b = intensity.beta(x);
    TangentVector::new(*x, [b[0] * dt + scale * xi[0], b[1] * dt + scale * xi[1]])
}

/// One Euler–Maruyama step with noise `√(2dt)·ξ`.
pub fn step_sde<R: Rng + ?Sized>(intensity: &IntensityField, x: &ManifoldPoint, dt: f64, rng: &mut R) -> Result<ManifoldPoint> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let v = step_vector(intensity, x, dt, gaussian2(rng), NoiseScale::Generator.factor(dt));
    intensity.manifold().exp_map(&v)
}

/// A discretized one-particle path on the uniform grid `t_k = k·dt`.
#[derive(Clone, Debug)]
pub struct ParticlePath {
    dt: f64,
    points: Vec<ManifoldPoint>,
    steps: Vec<TangentVector>,
    /// `Σ_k scale·ξ_k`, the accumulated noise in frame components.
    noise: Vec2,
}

impl ParticlePath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.points.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    /// Tangent vector of step `k`, based at `points[k]`.
    pub fn steps(&self) -> &[TangentVector] {
        &self.steps
    }

    pub fn start(&self) -> ManifoldPoint {
        self.points[0]
    }

    pub fn end(&self) -> ManifoldPoint {
        *self.points.last().expect("paths contain their start point")
    }

    pub fn accumulated_noise(&self) -> Vec2 {
        self.noise
    }
}

pub fn simulate_path<R: Rng + ?Sized>(
    intensity: &IntensityField,
    x: &ManifoldPoint,
    n_steps: usize,
    dt: f64,
    noise: NoiseScale,
    rng: &mut R,
) -> Result<ParticlePath> {
    let m = intensity.manifold();
    let scale = noise.factor(dt);
    let mut points = Vec::with_capacity(n_steps + 1);
    let mut steps = Vec::with_capacity(n_steps);
    let mut acc = [0.0; 2];
    let mut cur = *x;
    points.push(cur);
    for _ in 0..n_steps {
        let xi = gaussian2(rng);
        acc[0] += scale * xi[0];
        acc[1] += scale * xi[1];
        let v = step_vector(intensity, &cur, dt, xi, scale);
        cur = m.exp_map(&v)?;
        steps.push(v);
        points.push(cur);
    }
    Ok(ParticlePath { dt, points, steps, noise: acc })
}

fn particle_stream(seed: u64, path: usize, particle: usize) -> crate::rng::StreamRng {
    stream(seed, ((path as u64) << 20) | particle as u64)
}

/// `ξ_γ(t)`: every point moved by an independent path; point `j` of path `i`
/// uses stream `i·2²⁰ + j` of `seed`.
pub fn evolve_config(
    intensity: &IntensityField,
    gamma: &Configuration,
    opts: &PathOptions,
    path_index: usize,
) -> Result<(Configuration, Vec<ParticlePath>)> {
    opts.validate()?;
    if gamma.len() > MAX_PARTICLES {
        return Err(Error::InvalidParameter(format!("at most {MAX_PARTICLES} particles per path")));
    }
    let n = opts.steps();
    let paths = gamma
        .points()
        .iter()
        .enumerate()
        .map(|(j, x)| simulate_path(intensity, x, n, opts.dt, opts.noise, &mut particle_stream(opts.seed, path_index, j)))
        .collect::<Result<Vec<_>>>()?;
    let end = config_at(gamma, &paths, n)?;
    Ok((end, paths))
}

fn config_at(gamma: &Configuration, paths: &[ParticlePath], k: usize) -> Result<Configuration> {
    Configuration::new(gamma.manifold(), paths.iter().map(|p| p.points[k]).collect())
}

/// `P^J(t)` and its adjoint, in orthonormal frame components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportMatrix {
    /// Maps frame components at `ξ_x(0)` to frame components at `ξ_x(t)`.
    pub forward: Mat2,
    /// `(P^J)^*`, mapping components at `ξ_x(t)` back to `x`.
    pub adjoint: Mat2,
}

fn euler_factor(j: &OperatorField, x: &ManifoldPoint, h: f64) -> Mat2 {
    let a = j.at(x);
    [[1.0 + h * a[0][0], h * a[0][1]], [h * a[1][0], 1.0 + h * a[1][1]]]
}

/// Transport matrices after each of the requested step counts. With the
/// splitting scheme `η_{k+1} = T_k (Id + dt·J(x_k)) η_k`, `T_k` parallel
/// transport along step `k`.
pub fn transport_checkpoints(
    intensity: &IntensityField,
    path: &ParticlePath,
    potential: Option<&OperatorField>,
    scheme: TransportScheme,
    checkpoints: &[usize],
) -> Result<Vec<TransportMatrix>> {
    let m = intensity.manifold();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut p = IDENTITY2;
    let mut next = 0;
    for k in 0..=path.steps.len() {
        while next < checkpoints.len() && checkpoints[next] == k {
            out.push(TransportMatrix { forward: p, adjoint: mat2_transpose(&p) });
            next += 1;
        }
        if k == path.steps.len() || next == checkpoints.len() {
            break;
        }
        let tk = m.transport_matrix(&path.steps[k])?;
        p = match (potential, scheme) {
            (None, _) => mat2_mul(&tk, &p),
            (Some(j), TransportScheme::Splitting) => mat2_mul(&tk, &mat2_mul(&euler_factor(j, &path.points[k], path.dt), &p)),
            (Some(j), TransportScheme::Midpoint) => {
                let h = 0.5 * path.dt;
                let back = mat2_mul(&mat2_transpose(&tk), &mat2_mul(&j.at(&path.points[k + 1]), &tk));
                let here = j.at(&path.points[k]);
                let mut a = [[0.0; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        a[r][c] = h * (here[r][c] + back[r][c]);
                    }
                }
                let a2 = mat2_mul(&a, &a);
                let mut f = IDENTITY2;
                for r in 0..2 {
                    for c in 0..2 {
                        f[r][c] += a[r][c] + 0.5 * a2[r][c];
                    }
                }
                mat2_mul(&tk, &mat2_mul(&f, &p))
            }
        };
    }
    if out.len() != checkpoints.len() {
        return Err(Error::InvalidParameter("checkpoints must be increasing and within the path".into()));
    }
    Ok(out)
}

pub fn transport_with_potential(
    intensity: &IntensityField,
    path: &ParticlePath,
    potential: Option<&OperatorField>,
    scheme: TransportScheme,
) -> Result<TransportMatrix> {
    Ok(transport_checkpoints(intensity, path, potential, scheme, &[path.steps.len()])?[0])
}

/// Componentwise Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SemigroupEstimate {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_paths: usize,
    pub t: f64,
    pub dt: f64,
    pub seed: u64,
}

impl SemigroupEstimate {
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn std_error(&self) -> f64 {
        self.std_errors[0]
    }

    /// The estimate as a tangent at `gamma` (components in point order).
    pub fn tangent(&self, gamma: &Configuration) -> Result<GammaTangent> {
        GammaTangent::from_components(gamma, self.values.chunks(2).map(|c| [c[0], c[1]]).collect())
    }
}

/// Pairwise sum, fixed by the input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error per component of `f(i)` over `i < n`, merged by
/// pairwise summation in index order.
pub fn path_average<F>(n: usize, f: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let samples: Vec<Vec<f64>> = with_workers(|| (0..n).into_par_iter().map(&f).collect::<Result<Vec<_>>>())?;
    let dim = samples.first().map_or(0, Vec::len);
    let nf = n as f64;
    let mut mean = Vec::with_capacity(dim);
    let mut se = Vec::with_capacity(dim);
    let mut col = vec![0.0; n];
    for c in 0..dim {
        for (x, s) in col.iter_mut().zip(&samples) {
            *x = s[c];
        }
        let m = pairwise_sum(&col) / nf;
        mean.push(m);
        if n > 1 {
            for x in col.iter_mut() {
                *x = (*x - m) * (*x - m);
            }
            se.push((pairwise_sum(&col) / (nf - 1.0) / nf).sqrt());
        } else {
            se.push(0.0);
        }
    }
    Ok((mean, se))
}

fn estimate(opts: &PathOptions, (values, std_errors): (Vec<f64>, Vec<f64>)) -> SemigroupEstimate {
    SemigroupEstimate { values, std_errors, n_paths: opts.n_paths, t: opts.t, dt: opts.dt, seed: opts.seed }
}

/// `T₀(t)G(γ) = E G(ξ_γ(t))` for any configuration observable `G`.
pub fn semigroup_t0_with<G>(intensity: &IntensityField, g: G, gamma: &Configuration, opts: &PathOptions) -> Result<SemigroupEstimate>
where
    G: Fn(&Configuration) -> f64 + Sync,
{
    opts.validate()?;
    let r = path_average(opts.n_paths, |i| Ok(vec![g(&evolve_config(intensity, gamma, opts, i)?.0)]))?;
    Ok(estimate(opts, r))
}

pub fn semigroup_t0(intensity: &IntensityField, f: &CylinderFunction, gamma: &Configuration, opts: &PathOptions) -> Result<SemigroupEstimate> {
    semigroup_t0_with(intensity, |g| f.eval(g), gamma, opts)
}

/// `(P^J)^* V(ξ_γ(t))` per start point, flattened.
fn transported_sample(
    intensity: &IntensityField,
    v: &CylinderOneForm,
    gamma: &Configuration,
    potential: Option<&OperatorField>,
    opts: &PathOptions,
    i: usize,
) -> Result<Vec<f64>> {
    let (end, paths) = evolve_config(intensity, gamma, opts, i)?;
    let vt = v.eval(&end);
    let mut out = Vec::with_capacity(2 * gamma.len());
    for (j, p) in paths.iter().enumerate() {
        let tm = transport_with_potential(intensity, p, potential, opts.scheme)?;
        out.extend(mat2_vec(&tm.adjoint, &vt.components()[j]));
    }
    Ok(out)
}

/// `T₁^J(t)V(γ)_x = E (P^J_{ξ_x}(t))^* V(ξ_γ(t))_{ξ_x(t)}`.
pub fn semigroup_t1(
    intensity: &IntensityField,
    v: &CylinderOneForm,
    gamma: &Configuration,
    potential: Option<&OperatorField>,
    opts: &PathOptions,
) -> Result<SemigroupEstimate> {
    opts.validate()?;
    let r = path_average(opts.n_paths, |i| transported_sample(intensity, v, gamma, potential, opts, i))?;
    Ok(estimate(opts, r))
}

/// One-particle `E (P^J_{ξ_x}(t))^* ν(ξ_x(t))`.
pub fn semigroup_t1_one(
    intensity: &IntensityField,
    nu: &OneFormField,
    x: &ManifoldPoint,
    potential: Option<&OperatorField>,
    opts: &PathOptions,
) -> Result<SemigroupEstimate> {
    opts.validate()?;
    let m = intensity.manifold();
    let r = path_average(opts.n_paths, |i| {
        let p = simulate_path(intensity, x, opts.steps(), opts.dt, opts.noise, &mut particle_stream(opts.seed, i, 0))?;
        let tm = transport_with_potential(intensity, &p, potential, opts.scheme)?;
        Ok(mat2_vec(&tm.adjoint, &nu.value(m, &p.end())).to_vec())
    })?;
    Ok(estimate(opts, r))
}

/// Simpson (even step count) or trapezoid nodes and weights on `[0, n]`, as step indices.
fn time_rule(n: usize) -> Vec<(usize, f64)> {
    if n == 0 {
        vec![(0, 1.0)]
    } else if n % 2 == 0 {
        vec![(0, 1.0 / 6.0), (n / 2, 4.0 / 6.0), (n, 1.0 / 6.0)]
    } else {
        vec![(0, 0.5), (n, 0.5)]
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Budget `2(1 + dt/t)·‖B̂‖ + 3·se` with `B̂ = t⁻¹∫₀ᵗ T(s)HV ds − HV(γ)` estimated
/// on the paths and `se` the standard error of the Dynkin defect.
fn generator_report(
    name: &str,
    opts: &PathOptions,
    target: &[f64],
    samples: (Vec<f64>, Vec<f64>),
) -> CheckReport {
    let d = target.len();
    let (mean, se) = samples;
    let g = &mean[..d];
    let avg = &mean[d..2 * d];
    let defect_se = &se[2 * d..3 * d];
    let diff: Vec<f64> = g.iter().zip(target).map(|(a, b)| a - b).collect();
    let bias: Vec<f64> = avg.iter().zip(target).map(|(a, b)| a - b).collect();
    let budget = 2.0 * (1.0 + opts.dt / opts.t) * norm(&bias) + 3.0 * norm(defect_se) + 1e-12;
    let residual = norm(&diff);
    CheckReport {
        check: name.to_string(),
        lhs: norm(g),
        rhs: norm(target),
        residual,
        tol: budget,
        pass: residual.is_finite() && residual <= budget,
        seed: Some(opts.seed),
        grid: None,
        k: None,
        routes: vec![
            ("mc_generator".into(), norm(g)),
            ("analytic_operator".into(), norm(target)),
            ("dynkin_average".into(), norm(avg)),
            ("dynkin_defect_std_error".into(), norm(defect_se)),
        ],
    }
}

/// Stacks `[g, a, g − a]` for the joint statistics of the generator checks.
fn stack(g: Vec<f64>, a: Vec<f64>) -> Vec<f64> {
    let defect: Vec<f64> = g.iter().zip(&a).map(|(x, y)| x - y).collect();
    let mut out = g;
    out.extend(a);
    out.extend(defect);
    out
}

/// `(F − T₀(t)F)/t` against `H_{π_σ}F(γ)`.
pub fn check_generator_t0(
    intensity: &IntensityField,
    f: &CylinderFunction,
    gamma: &Configuration,
    opts: &PathOptions,
) -> Result<CheckReport> {
    opts.validate()?;
    if opts.t <= 0.0 {
        return Err(Error::InvalidParameter("generator checks need t > 0".into()));
    }
    let f0 = f.eval(gamma);
    let grad = f.grad_gamma(gamma);
    let target = f.dirichlet_gamma(intensity, gamma);
    let rule = time_rule(opts.steps());
    let samples = path_average(opts.n_paths, |i| {
        let (end, paths) = evolve_config(intensity, gamma, opts, i)?;
        // Control variate ⟨∇F(γ), W⟩ with W the accumulated noise; mean zero.
        let cv: f64 = paths.iter().zip(grad.components()).map(|(p, g)| g[0] * p.noise[0] + g[1] * p.noise[1]).sum();
        let g = (f0 - f.eval(&end) + cv) / opts.t;
        let mut a = 0.0;
        for &(k, w) in &rule {
            a += w * if k == 0 { target } else { f.dirichlet_gamma(intensity, &config_at(gamma, &paths, k)?) };
        }
        Ok(stack(vec![g], vec![a]))
    })?;
    Ok(generator_report("generator_t0", opts, &[target], samples))
}

/// Which operator the twisted semigroup is compared with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormGenerator {
    Bochner,
    DeRham,
}

/// `(V − T₁^J(t)V)/t` against `H^B V(γ)` or `H^R V(γ)`.
pub fn check_generator_t1(
    intensity: &IntensityField,
    v: &CylinderOneForm,
    gamma: &Configuration,
    potential: Option<&OperatorField>,
    op: FormGenerator,
    opts: &PathOptions,
) -> Result<CheckReport> {
    opts.validate()?;
    if opts.t <= 0.0 {
        return Err(Error::InvalidParameter("generator checks need t > 0".into()));
    }
    let apply = |g: &Configuration| -> Vec<f64> {
        let h = match op {
            FormGenerator::Bochner => v.bochner_gamma(intensity, g),
            FormGenerator::DeRham => v.derham_gamma(intensity, g),
        };
        h.components().iter().flatten().copied().collect()
    };
    let v0: Vec<f64> = v.eval(gamma).components().iter().flatten().copied().collect();
    let jet = v.config_jet(gamma);
    let target = apply(gamma);
    let n = opts.steps();
    let rule = time_rule(n);
    let ks: Vec<usize> = rule.iter().map(|r| r.0).collect();
    let dim = 2 * gamma.len();
    let samples = path_average(opts.n_paths, |i| {
        let (end, paths) = evolve_config(intensity, gamma, opts, i)?;
        let tms =
            paths.iter().map(|p| transport_checkpoints(intensity, p, potential, opts.scheme, &ks)).collect::<Result<Vec<_>>>()?;
        let w: Vec<f64> = paths.iter().flat_map(|p| p.noise).collect();
        let vt = v.eval(&end);
        let mut g = vec![0.0; dim];
        for (j, tm) in tms.iter().enumerate() {
            let back = mat2_vec(&tm.last().expect("final checkpoint").adjoint, &vt.components()[j]);
            for b in 0..2 {
                let q = 2 * j + b;
                // Control variate ∇_W V(γ), mean zero.
                let cv: f64 = (0..dim).map(|p| jet.m(p, q) * w[p]).sum();
                g[q] = (v0[q] - back[b] + cv) / opts.t;
            }
        }
        let mut a = vec![0.0; dim];
        for (r, &(k, wt)) in rule.iter().enumerate() {
            let hv = if k == 0 { target.clone() } else { apply(&config_at(gamma, &paths, k)?) };
            for (j, tm) in tms.iter().enumerate() {
                let back = mat2_vec(&tm[r].adjoint, &[hv[2 * j], hv[2 * j + 1]]);
                a[2 * j] += wt * back[0];
                a[2 * j + 1] += wt * back[1];
            }
        }
        Ok(stack(g, a))
    })?;
    let name = match op {
        FormGenerator::Bochner => "generator_bochner",
        FormGenerator::DeRham => "generator_derham",
    };
    Ok(generator_report(name, opts, &target, samples))
}

/// The twist `J₁ = −R_σ` of the de Rham semigroup. With `η' = Jη` the
/// generator of `T₁^J` is `−H^B + Jᵀ`, which equals `−H^R` for this sign.
pub fn derham_potential(intensity: &IntensityField) -> OperatorField {
    OperatorField::weitzenbock(intensity, -1.0)
}

/// Generator checks for `J₀ = 0` against `H^B` and `J₁` against `H^R`.
pub fn check_probabilistic_representation(
    intensity: &IntensityField,
    v: &CylinderOneForm,
    gamma: &Configuration,
    opts: &PathOptions,
) -> Result<(CheckReport, CheckReport)> {
    let bochner = check_generator_t1(intensity, v, gamma, None, FormGenerator::Bochner, opts)?;
    let j1 = derham_potential(intensity);
    let derham = check_generator_t1(intensity, v, gamma, Some(&j1), FormGenerator::DeRham, opts)?;
    Ok((bochner, derham))
}
