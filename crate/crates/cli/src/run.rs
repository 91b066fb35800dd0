//! Executes the check battery selected by a subcommand.

use poisson_forms::configuration::{sample_poisson, Configuration};
use poisson_forms::diffusion::{check_generator_t0, check_generator_t1, derham_potential, FormGenerator, PathOptions};
use poisson_forms::field::ScalarField;
use poisson_forms::integrate::forms::scalar_slot;
use poisson_forms::integrate::series::default_grid;
use poisson_forms::integrate::{
    check_bochner_form, check_derham_form, check_derham_gradient, check_dirichlet_form, check_ibp, check_mecke,
    check_weitzenbock, expect_mc, expect_series, CheckReport, MeckeIntegrand, Observable,
};
use poisson_forms::rng::stream;
use poisson_forms::Result;
use serde::Serialize;

use crate::config::{Check, ExperimentConfig, Numerics, Potential};

/// Stream ids of the pointwise configurations, clear of the sample streams.
const CONFIG_STREAMS: u64 = 1 << 48;
const MAX_REDRAWS: u64 = 1000;

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub reports: Vec<CheckReport>,
    /// Extra named artifacts (file name, contents).
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(poisson_forms::integrate::CSV_HEADER);
        s.push('\n');
        for r in &self.reports {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub manifold: &'a str,
    pub density: &'a str,
    pub seed: Option<u64>,
    pub grid: [usize; 2],
    pub k_max: Option<usize>,
    pub numerics: &'a Numerics,
    pub n_checks: usize,
    pub n_failed: usize,
    pub all_pass: bool,
    pub checks: &'a [CheckReport],
}

pub fn summary<'a>(command: &'a str, cfg: &'a ExperimentConfig, out: &'a Outcome) -> Summary<'a> {
    Summary {
        command,
        config_hash: &cfg.hash,
        manifold: cfg.manifold.name(),
        density: &cfg.density_name,
        seed: cfg.seed,
        grid: cfg.numerics.grid.unwrap_or_else(|| default_grid(cfg.manifold)),
        k_max: out.reports.iter().filter_map(|r| r.k).max(),
        numerics: &cfg.numerics,
        n_checks: out.reports.len(),
        n_failed: out.reports.iter().filter(|r| !r.pass).count(),
        all_pass: out.all_pass(),
        checks: &out.reports,
    }
}

fn named(mut r: CheckReport, label: &str) -> CheckReport {
    r.check = format!("{}[{label}]", r.check);
    r
}

fn seed(cfg: &ExperimentConfig, check: Check) -> Result<u64> {
    cfg.seed.ok_or_else(|| poisson_forms::Error::InvalidParameter(format!("check `{}` needs [seed] value", check.name())))
}

/// Non-empty Poisson samples, truncated to `max_points`.
pub fn pointwise_configs(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Configuration>> {
    let n = &cfg.numerics;
    (0..n.configs as u64)
        .map(|c| {
            for a in 0..MAX_REDRAWS {
                let g = sample_poisson(&cfg.intensity, &mut stream(seed, CONFIG_STREAMS + c * MAX_REDRAWS + a))?;
                if !g.is_empty() {
                    let pts = g.points().iter().take(n.max_points).copied().collect();
                    return Configuration::new(cfg.manifold, pts);
                }
            }
            Err(poisson_forms::Error::Sampling("no non-empty configuration drawn".into()))
        })
        .collect()
}

fn sample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = seed(cfg, Check::Sample)?;
    let i = &cfg.intensity;
    let opts = cfg.series_options();
    let n = cfg.numerics.samples;
    let mut out = Outcome::default();
    let first = sample_poisson(i, &mut stream(seed, 0))?;
    out.artifacts.push(("sample_configuration.json".into(), first.to_json()));
    let mut cases = vec![("count".to_string(), Observable::constant(1.0).attach(&[Vec::new()]), None)];
    for (name, f) in &cfg.observables {
        cases.push((name.clone(), Observable::from_cylinder(cfg.manifold, f), Some(f)));
    }
    for (name, obs, f) in cases {
        let s = expect_series(i, &obs, &opts)?;
        let mc = match f {
            Some(f) => expect_mc(i, |g| f.eval(g), n, seed)?,
            None => expect_mc(i, |g| g.len() as f64, n, seed)?,
        };
        let residual = (mc.value - s.value).abs();
        let tol = 3.0 * mc.std_error;
        out.reports.push(CheckReport {
            check: format!("mc_vs_series[{name}]"),
            lhs: mc.value,
            rhs: s.value,
            residual,
            tol,
            pass: residual <= tol || residual == 0.0,
            seed: Some(seed),
            grid: Some(s.grid),
            k: Some(s.k),
            routes: vec![("monte_carlo".into(), mc.value), ("series".into(), s.value), ("std_error".into(), mc.std_error)],
        });
    }
    Ok(out)
}

fn identities(cfg: &ExperimentConfig) -> Result<Outcome> {
    let i = &cfg.intensity;
    let m = cfg.manifold;
    let opts = cfg.series_options();
    let tol = cfg.numerics.tol;
    let obs = &cfg.observables;
    let forms = &cfg.forms;
    let mut out = Outcome::default();
    let one = expect_series(i, &Observable::constant(1.0), &opts)?;
    out.reports.push(CheckReport::from_routes(
        "normalization",
        vec![("series".into(), one.value), ("exact".into(), 1.0)],
        1e-12,
        one.grid,
        one.k,
    ));
    let a = scalar_slot(m, &ScalarField::cos_wave(0, 1.0).add(&ScalarField::constant(1.5)));
    for (name, f) in obs {
        let k = Observable::from_cylinder(m, f);
        let integrand = MeckeIntegrand::zero().removed(a.clone(), k.clone()).full(a.clone(), k);
        out.reports.push(named(check_mecke(i, &integrand, tol, &opts)?, name));
    }
    for (j, (n1, f1)) in obs.iter().enumerate() {
        let (n2, f2) = &obs[(j + 1) % obs.len()];
        if let Some((nv, v)) = forms.get(j % forms.len().max(1)) {
            out.reports.push(named(check_ibp(i, f1, f2, v, tol, &opts)?, &format!("{n1}; {n2}; {nv}")));
        }
        out.reports.push(named(check_dirichlet_form(i, f1, f2, tol, &opts)?, &format!("{n1}; {n2}")));
    }
    Ok(out)
}

fn forms(cfg: &ExperimentConfig) -> Result<Outcome> {
    let i = &cfg.intensity;
    let opts = cfg.series_options();
    let tol = cfg.numerics.tol;
    let fs = &cfg.forms;
    let mut out = Outcome::default();
    for (j, (n1, v1)) in fs.iter().enumerate() {
        for (n2, v2) in [&fs[j], &fs[(j + 1) % fs.len()]].into_iter().map(|p| (&p.0, &p.1)) {
            let label = format!("{n1}; {n2}");
            out.reports.push(named(check_bochner_form(i, v1, v2, tol, &opts)?, &label));
            out.reports.push(named(check_derham_form(i, v1, v2, tol, &opts)?, &label));
        }
    }
    for (name, f) in &cfg.observables {
        out.reports.push(named(check_derham_gradient(i, f, tol, &opts)?, name));
    }
    Ok(out)
}

fn weitzenbock(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = seed(cfg, Check::Weitzenbock)?;
    let mut out = Outcome::default();
    for (c, g) in pointwise_configs(cfg, seed)?.iter().enumerate() {
        for (name, v) in &cfg.forms {
            let mut r = named(check_weitzenbock(&cfg.intensity, v, g, cfg.numerics.weitzenbock_tol), &format!("{name}; config {c}"));
            r.seed = Some(seed);
            out.reports.push(r);
        }
    }
    Ok(out)
}

fn semigroup(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = seed(cfg, Check::Semigroup)?;
    let n = &cfg.numerics;
    let i = &cfg.intensity;
    let opts = PathOptions::new(n.t, n.dt, n.n_paths, seed);
    let j1 = derham_potential(i);
    let mut out = Outcome::default();
    for (c, g) in pointwise_configs(cfg, seed)?.iter().enumerate() {
        for (name, f) in &cfg.observables {
            out.reports.push(named(check_generator_t0(i, f, g, &opts)?, &format!("{name}; config {c}")));
        }
        for (name, v) in &cfg.forms {
            for p in &cfg.potentials {
                let r = match p {
                    Potential::Zero => check_generator_t1(i, v, g, None, FormGenerator::Bochner, &opts)?,
                    Potential::Weitzenbock => check_generator_t1(i, v, g, Some(&j1), FormGenerator::DeRham, &opts)?,
                };
                out.reports.push(named(r, &format!("{name}; config {c}")));
            }
        }
    }
    Ok(out)
}

pub fn run_check(cfg: &ExperimentConfig, check: Check) -> Result<Outcome> {
    match check {
        Check::Sample => sample(cfg),
        Check::Identities => identities(cfg),
        Check::Forms => forms(cfg),
        Check::Weitzenbock => weitzenbock(cfg),
        Check::Semigroup => semigroup(cfg),
    }
}

/// Runs the checks in order and concatenates their outcomes.
pub fn run_all(cfg: &ExperimentConfig, checks: &[Check]) -> Result<Outcome> {
    let mut out = Outcome::default();
    for c in checks {
        let o = run_check(cfg, *c)?;
        out.reports.extend(o.reports);
        out.artifacts.extend(o.artifacts);
    }
    Ok(out)
}
