//! Exact Poisson series and Monte Carlo expectations.

use rayon::prelude::*;

use super::observable::{fn_key, Observable};
use crate::configuration::{sample_poisson, Configuration};
use crate::error::{Error, Result};
use crate::intensity::IntensityField;
use crate::manifold::Manifold;
use crate::quadrature::Quadrature;
use crate::rng::{stream, with_workers};

pub const DEFAULT_K: usize = 12;
pub const MAX_K: usize = 400;
pub const DEFAULT_TOL: f64 = 1e-13;

/// Per-particle grid of the series quadrature.
pub fn default_grid(m: Manifold) -> [usize; 2] {
    match m {
        Manifold::FlatTorus => [32, 32],
        Manifold::UnitSphere => [64, 128],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    /// Fixed truncation order; `None` raises `K` from [`DEFAULT_K`] until the
    /// tail bound is below `tol`.
    pub k: Option<usize>,
    pub tol: f64,
    pub grid: Option<[usize; 2]>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { k: None, tol: DEFAULT_TOL, grid: None }
    }
}

impl SeriesOptions {
    pub fn with_k(k: usize) -> Self {
        Self { k: Some(k), ..Self::default() }
    }

    pub fn with_grid(grid: [usize; 2]) -> Self {
        Self { grid: Some(grid), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesExpectation {
    pub value: f64,
    pub k: usize,
    pub tail_bound: f64,
    pub grid: [usize; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCExpectation {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// One-particle reductions of an observable on a fixed grid.
///
/// Term `t` contributes `c_t e^{−σ} A_t Σ_{n=r_t}^{K} m_t^{n−r_t}/(n−r_t)!`
/// to the `K`-truncated series.
#[derive(Clone, Debug)]
pub struct Reduced {
    sigma: f64,
    grid: [usize; 2],
    terms: Vec<ReducedTerm>,
}

#[derive(Clone, Copy, Debug)]
struct ReducedTerm {
    coef: f64,
    order: usize,
    a: f64,
    a_abs: f64,
    m: f64,
}

/// `Σ_{k=0}^{n} m^k/k!`.
fn partial_exp(m: f64, n: usize) -> f64 {
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 1..=n {
        term *= m / k as f64;
        acc += term;
    }
    acc
}

/// `Σ_{k>n} m^k/k!` summed forward.
fn exp_tail(m: f64, n: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=n + 1 {
        term *= m / k as f64;
    }
    let mut acc = 0.0;
    let mut k = n + 1;
    loop {
        acc += term;
        k += 1;
        term *= m / k as f64;
        if (k as f64 > m && term <= acc * 1e-17) || term == 0.0 || k > n + 100_000 {
            break;
        }
    }
    acc
}

impl Reduced {
    pub fn new(intensity: &IntensityField, obs: &Observable, grid: [usize; 2]) -> Self {
        let m = intensity.manifold();
        let quad = Quadrature::new(m, grid);
        let nodes = quad.nodes();
        let wr: Vec<f64> = nodes.iter().zip(quad.weights()).map(|(p, w)| w * intensity.rho().value(m, p)).collect();
        let sigma: f64 = wr.iter().sum();
        let (fns, index) = obs.distinct_functions();
        let table: Vec<Vec<f64>> = with_workers(|| fns.par_iter().map(|f| nodes.iter().map(|p| f(p)).collect()).collect());
        let col = |f| &table[index[&fn_key(f)]];
        let terms = with_workers(|| {
            obs.terms()
                .par_iter()
                .map(|t| {
                    let mut wt = wr.clone();
                    if !t.tilt.is_empty() {
                        for (i, w) in wt.iter_mut().enumerate() {
                            let psi: f64 = t.tilt.iter().map(|f| col(f)[i]).sum();
                            *w *= psi.exp();
                        }
                    }
                    let mut a = 1.0;
                    let mut a_abs = 1.0;
                    for s in &t.slots {
                        let (mut q, mut q_abs) = (0.0, 0.0);
                        for (i, w) in wt.iter().enumerate() {
                            let v: f64 = s.iter().map(|f| col(f)[i]).product();
                            q += w * v;
                            q_abs += w * v.abs();
                        }
                        a *= q;
                        a_abs *= q_abs;
                    }
                    ReducedTerm { coef: t.coef, order: t.order(), a, a_abs, m: wt.iter().sum() }
                })
                .collect()
        });
        Self { sigma, grid, terms }
    }

    pub fn sigma_mass(&self) -> f64 {
        self.sigma
    }

    /// The `K`-truncated series and its tail bound.
    pub fn truncated(&self, k: usize) -> (f64, f64) {
        let damp = (-self.sigma).exp();
        let mut value = 0.0;
        let mut tail = 0.0;
        for t in &self.terms {
            if k >= t.order {
                value += t.coef * damp * t.a * partial_exp(t.m, k - t.order);
                tail += t.coef.abs() * damp * t.a_abs * exp_tail(t.m, k - t.order);
            } else {
                tail += t.coef.abs() * damp * t.a_abs * t.m.exp();
            }
        }
        (value, tail)
    }

    /// The untruncated series `Σ_t c_t A_t e^{m_t − σ}`.
    pub fn exact(&self) -> f64 {
        self.terms.iter().map(|t| t.coef * t.a * (t.m - self.sigma).exp()).sum()
    }

    pub fn expectation(&self, opts: &SeriesOptions) -> Result<SeriesExpectation> {
        let finish = |k: usize| {
            let (value, tail_bound) = self.truncated(k);
            SeriesExpectation { value, k, tail_bound, grid: self.grid }
        };
        match opts.k {
            Some(k) => {
                let e = finish(k);
                if e.tail_bound > opts.tol {
                    return Err(Error::TruncationTooSmall { k, tail: e.tail_bound, tol: opts.tol });
                }
                Ok(e)
            }
            None => {
                let mut k = DEFAULT_K;
                loop {
                    let e = finish(k);
                    if e.tail_bound <= opts.tol {
                        return Ok(e);
                    }
                    if k >= MAX_K {
                        return Err(Error::TruncationTooSmall { k, tail: e.tail_bound, tol: opts.tol });
                    }
                    k += 1;
                }
            }
        }
    }
}

/// `E_π[F]` from the truncated Poisson series on a tensor-product grid.
pub fn expect_series(intensity: &IntensityField, obs: &Observable, opts: &SeriesOptions) -> Result<SeriesExpectation> {
    let grid = opts.grid.unwrap_or_else(|| default_grid(intensity.manifold()));
    Reduced::new(intensity, obs, grid).expectation(opts)
}

/// Monte Carlo estimate of `E_π[F]`; sample `i` draws from stream `i` of `seed`.
pub fn expect_mc<F>(intensity: &IntensityField, f: F, n_samples: usize, seed: u64) -> Result<MCExpectation>
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let values: Vec<f64> = with_workers(|| {
        (0..n_samples)
            .into_par_iter()
            .map(|i| sample_poisson(intensity, &mut stream(seed, i as u64)).map(|g| f(&g)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let n = n_samples as f64;
    let value = values.iter().sum::<f64>() / n;
    let std_error = if n_samples > 1 {
        (values.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(MCExpectation { value, std_error, n_samples, seed })
}
