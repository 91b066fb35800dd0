use poisson_forms::configuration::{gamma_inner, sample_point, sample_poisson, Configuration, GammaTangent};
use poisson_forms::field::ScalarField;
use poisson_forms::intensity::IntensityField;
use poisson_forms::manifold::{Manifold, ManifoldPoint};
use poisson_forms::quadrature::gauss_legendre;
use poisson_forms::rng::stream;
use proptest::prelude::*;
use std::f64::consts::PI;

/// 99% quantile of the chi-squared distribution with 19 degrees of freedom.
const CHI2_19_99: f64 = 36.191;

#[test]
fn fix_c_count_mean_and_variance() {
    let i = IntensityField::constant(Manifold::FlatTorus, 2.0).unwrap();
    let mut rng = stream(2024, 0);
    let n = 100_000;
    let counts: Vec<f64> = (0..n).map(|_| sample_poisson(&i, &mut rng).unwrap().len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let tol = 3.0 * (2.0 / n as f64).sqrt();
    assert!((mean - 2.0).abs() < tol, "mean {mean}");
    // Var of the sample variance of Poisson(λ) is ≈ (λ + 2λ²)/n.
    let var_tol = 3.0 * ((2.0 + 8.0) / n as f64).sqrt();
    assert!((var - 2.0).abs() < var_tol, "var {var}");
}

#[test]
fn fix_t_campbell_mean() {
    let m = Manifold::FlatTorus;
    let i = IntensityField::cos1(m, 0.5).unwrap();
    let f = ScalarField::cos_wave(0, 1.0);
    let exact = i.integrate(|x| f.value(m, x));
    let second = i.integrate(|x| f.value(m, x).powi(2));
    let mut rng = stream(7, 1);
    let n = 100_000;
    let s: f64 = (0..n).map(|_| sample_poisson(&i, &mut rng).unwrap().pairing(|x| f.value(m, x))).sum();
    let mean = s / n as f64;
    let se = (second / n as f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}

fn chi_squared(observed: &[usize], expected_prob: &[f64], n: usize) -> f64 {
    observed
        .iter()
        .zip(expected_prob)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn torus_projection_passes_chi_squared() {
    let m = Manifold::FlatTorus;
    let i = IntensityField::cos1(m, 0.5).unwrap();
    let (gx, gw) = gauss_legendre(20);
    let bins = 20;
    let probs: Vec<f64> = (0..bins)
        .map(|b| {
            let (a, h) = (b as f64 / bins as f64, 1.0 / bins as f64);
            gx.iter().zip(&gw).map(|(x, w)| 0.5 * h * w * (0.5 * (2.0 * PI * (a + 0.5 * h * (x + 1.0))).cos()).exp()).sum::<f64>()
                / i.sigma_mass()
        })
        .collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let n = 100_000;
    let mut rng = stream(99, 0);
    let mut obs = vec![0usize; bins];
    let mut obs_y = vec![0usize; bins];
    for _ in 0..n {
        let c = sample_point(&i, &mut rng).unwrap().coords();
        obs[(c[0] * bins as f64) as usize] += 1;
        obs_y[(c[1] * bins as f64) as usize] += 1;
    }
    assert!(chi_squared(&obs, &probs, n) < CHI2_19_99);
    assert!(chi_squared(&obs_y, &vec![1.0 / bins as f64; bins], n) < CHI2_19_99);
}

#[test]
fn sphere_projection_passes_chi_squared() {
    let m = Manifold::UnitSphere;
    let i = IntensityField::cos1(m, 0.5).unwrap();
    let bins = 20;
    let (gz, gw) = gauss_legendre(16);
    let nl = 256;
    let probs: Vec<f64> = (0..bins)
        .map(|b| {
            let (a, h) = (-1.0 + 2.0 * b as f64 / bins as f64, 2.0 / bins as f64);
            let mut s = 0.0;
            for (x, w) in gz.iter().zip(&gw) {
                let z: f64 = a + 0.5 * h * (x + 1.0);
                for k in 0..nl {
                    let lon = -PI + 2.0 * PI * k as f64 / nl as f64;
                    let p = m.point([z.asin(), lon]).unwrap();
                    s += 0.5 * h * w * (2.0 * PI / nl as f64) * i.density(&p).unwrap();
                }
            }
            s / i.sigma_mass()
        })
        .collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let n = 100_000;
    let mut rng = stream(5, 5);
    let mut obs = vec![0usize; bins];
    for _ in 0..n {
        let z = sample_point(&i, &mut rng).unwrap().coords()[0].sin();
        obs[(((z + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1)] += 1;
    }
    assert!(chi_squared(&obs, &probs, n) < CHI2_19_99);
}

#[test]
fn disjoint_halves_are_uncorrelated() {
    let i = IntensityField::cos1(Manifold::FlatTorus, 0.5).unwrap();
    let mut rng = stream(3, 9);
    let n = 100_000;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let g = sample_poisson(&i, &mut rng).unwrap();
        let a = g.points().iter().filter(|p| p.coords()[0] < 0.5).count() as f64;
        data.push((a, g.len() as f64 - a));
    }
    let ma = data.iter().map(|d| d.0).sum::<f64>() / n as f64;
    let mb = data.iter().map(|d| d.1).sum::<f64>() / n as f64;
    let prods: Vec<f64> = data.iter().map(|d| (d.0 - ma) * (d.1 - mb)).collect();
    let cov = prods.iter().sum::<f64>() / n as f64;
    let se = (prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n as f64 * (n - 1) as f64)).sqrt();
    assert!(cov.abs() < 3.0 * se, "cov {cov} se {se}");
}

#[test]
fn sampling_is_reproducible() {
    let i = IntensityField::cos2(Manifold::UnitSphere, 0.3, 0.2).unwrap();
    let a = sample_poisson(&i, &mut stream(11, 2)).unwrap();
    let b = sample_poisson(&i, &mut stream(11, 2)).unwrap();
    assert_eq!(a, b);
}

fn torus_points(max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec([0.0..1.0f64, 0.0..1.0f64], 0..max)
}

fn dedup(c: &[[f64; 2]]) -> Configuration {
    let m = Manifold::FlatTorus;
    let mut g = Configuration::empty(m);
    for p in c {
        if let Ok(n) = g.add(&m.point(*p).unwrap()) {
            g = n;
        }
    }
    g
}

proptest! {
    #[test]
    fn edits_preserve_distinctness(c in torus_points(12), y in [0.0..1.0f64, 0.0..1.0f64]) {
        let m = Manifold::FlatTorus;
        let g = dedup(&c);
        let y: ManifoldPoint = m.point(y).unwrap();
        if let Ok(h) = g.add(&y) {
            prop_assert_eq!(h.len(), g.len() + 1);
            prop_assert!(h.remove(&y).unwrap().same_set(&g));
            let f = |p: &ManifoldPoint| (2.0 * PI * p.coords()[0]).sin();
            prop_assert!((h.pairing(f) - g.pairing(f) - f(&y)).abs() < 1e-12);
        }
        if let Some(x) = g.points().first().copied() {
            if let Ok(r) = g.replace(&x, &y) {
                prop_assert_eq!(r.len(), g.len());
                let pts = r.points();
                for a in 0..pts.len() {
                    for b in 0..a {
                        prop_assert!(m.separation(&pts[a], &pts[b]) > 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_inner_is_bilinear(c in torus_points(8), s in -3.0..3.0f64, seed in 0u64..1000) {
        use rand::Rng;
        let g = dedup(&c);
        let mut rng = stream(seed, 0);
        let mut r = || -> GammaTangent {
            let v = (0..g.len()).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            GammaTangent::from_components(&g, v).unwrap()
        };
        let (u, v, w) = (r(), r(), r());
        let lhs = gamma_inner(&u.scale(s).add(&v).unwrap(), &w).unwrap();
        let rhs = s * gamma_inner(&u, &w).unwrap() + gamma_inner(&v, &w).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!((gamma_inner(&u, &w).unwrap() - gamma_inner(&w, &u).unwrap()).abs() < 1e-15);
    }
}
