mod common;

use std::f64::consts::PI;

use common::*;
use poisson_forms::configuration::Configuration;
use poisson_forms::cylinder::{CylinderFunction, CylinderOneForm};
use poisson_forms::field::{OneFormField, ScalarField};
use poisson_forms::integrate::forms::{self, Laplacian};
use poisson_forms::integrate::observable::field_fn;
use poisson_forms::integrate::*;
use poisson_forms::intensity::IntensityField;
use poisson_forms::linalg::dot2;
use poisson_forms::manifold::Manifold;
use poisson_forms::quadrature::Quadrature;
use poisson_forms::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MANIFOLDS: [Manifold; 2] = [Manifold::FlatTorus, Manifold::UnitSphere];

fn fix_c(m: Manifold) -> IntensityField {
    IntensityField::constant(m, 2.0).unwrap()
}

fn fix_t() -> IntensityField {
    IntensityField::cos1(Manifold::FlatTorus, 0.5).unwrap()
}

fn sphere_density() -> IntensityField {
    // ρ = 0.15·exp(0.3 z), total mass ≈ 1.9.
    let psi = ScalarField::constant(0.15f64.ln()).add(&ScalarField::coordinate(2).scale(0.3));
    IntensityField::from_exponent(Manifold::UnitSphere, "sphere_test", psi, [48, 96]).unwrap()
}

fn intensities() -> Vec<IntensityField> {
    vec![fix_c(Manifold::FlatTorus), fix_t(), IntensityField::cos2(Manifold::FlatTorus, 0.3, 0.2).unwrap(), sphere_density()]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn series(i: &IntensityField, o: &Observable) -> f64 {
    expect_series(i, o, &SeriesOptions::default()).unwrap().value
}

// Pointwise normal-form evaluation against the direct cylinder routines.

#[test]
fn normal_form_matches_cylinder_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in MANIFOLDS {
        for _ in 0..40 {
            let f = random_function(&mut rng).mul(&random_function(&mut rng));
            let g = random_config(m, &mut rng, 6);
            let o = forms::function(m, &f);
            assert!(close(o.eval(&g), f.eval(&g), 1e-10), "{} {} vs {}", f.name(), o.eval(&g), f.eval(&g));
        }
    }
}

#[test]
fn products_attachment_and_insertion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in MANIFOLDS {
        for _ in 0..30 {
            let (f, h) = (random_function(&mut rng), random_function(&mut rng));
            let (of, oh) = (forms::function(m, &f), forms::function(m, &h));
            let g = random_config(m, &mut rng, 5);
            assert!(close(of.mul(&oh).eval(&g), f.eval(&g) * h.eval(&g), 1e-10));

            let a = random_scalar(&mut rng);
            let attached = of.attach(&[vec![field_fn(m, &a)]]);
            let direct: f64 = (0..g.len()).map(|i| a.value(m, &g.points()[i]) * f.eval(&g.remove_index(i))).sum();
            assert!(close(attached.eval(&g), direct, 1e-10));

            let b = random_scalar(&mut rng);
            let two = of.attach(&[vec![field_fn(m, &a)], vec![field_fn(m, &b)]]);
            let mut direct2 = 0.0;
            for i in 0..g.len() {
                for j in 0..g.len() {
                    if i != j {
                        let rest = Configuration::new(
                            m,
                            g.points().iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, p)| *p).collect(),
                        )
                        .unwrap();
                        direct2 += a.value(m, &g.points()[i]) * b.value(m, &g.points()[j]) * f.eval(&rest);
                    }
                }
            }
            assert!(close(two.eval(&g), direct2, 1e-10));

            let x = random_point(m, &mut rng);
            if let Ok(gx) = g.add(&x) {
                assert!(close(of.insert_at(&x).eval(&g), f.eval(&gx), 1e-10));
            }
        }
    }
}

#[test]
fn lifted_observables_match_configuration_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in [fix_t(), sphere_density()] {
        let m = i.manifold();
        for _ in 0..12 {
            let f = random_function(&mut rng);
            let h = random_function(&mut rng);
            let v1 = random_form(&mut rng);
            let v2 = random_form(&mut rng);
            let g = random_config(m, &mut rng, 4);

            let gen = forms::generator(&i, &f).eval(&g);
            assert!(close(gen, f.dirichlet_gamma(&i, &g), 1e-9), "generator");

            let gp = forms::gradient_pairing(m, &f, &h).eval(&g);
            assert!(close(gp, f.grad_gamma(&g).inner(&h.grad_gamma(&g)).unwrap(), 1e-9), "gradient pairing");

            let dv = forms::directional(m, &f, &v1).eval(&g);
            assert!(close(dv, f.grad_gamma(&g).inner(&v1.eval(&g)).unwrap(), 1e-9), "directional");

            assert!(close(forms::dstar(&i, &v1).eval(&g), v1.dstar1_gamma(&i, &g), 1e-9), "dstar");
            assert!(close(forms::pairing(m, &v1, &v2).eval(&g), v1.eval(&g).inner(&v2.eval(&g)).unwrap(), 1e-9));

            for (op, direct) in [(Laplacian::Bochner, v1.bochner_gamma(&i, &g)), (Laplacian::DeRham, v1.derham_gamma(&i, &g))] {
                let lifted = forms::lifted_pairing(&i, &v1, &v2, op).eval(&g);
                assert!(close(lifted, direct.inner(&v2.eval(&g)).unwrap(), 1e-9), "{op:?}");
            }

            let (j1, j2) = (v1.config_jet(&g), v2.config_jet(&g));
            let d = j1.dim();
            let mut cov = 0.0;
            let mut tr = 0.0;
            for p in 0..d {
                for q in 0..d {
                    cov += j1.m(p, q) * j2.m(p, q);
                    tr += j1.m(p, q) * j2.m(q, p);
                }
            }
            assert!(close(forms::covariant_pairing(m, &v1, &v2).eval(&g), cov, 1e-9), "covariant");
            assert!(close(forms::transposed_pairing(m, &v1, &v2).eval(&g), tr, 1e-9), "transposed");
            let ext = v1.d1_gamma(&g).inner(&v2.d1_gamma(&g)).unwrap();
            assert!(close(forms::exterior_pairing(m, &v1, &v2).eval(&g), ext, 1e-9), "exterior");
        }
    }
}

// Series expectations.

#[test]
fn normalization_for_every_intensity() {
    let mut all = intensities();
    all.push(fix_c(Manifold::UnitSphere));
    for i in &all {
        let e = expect_series(i, &Observable::constant(1.0), &SeriesOptions::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12, "{}: {}", i.name(), e.value);
        assert!(e.k >= 12);
    }
}

#[test]
fn campbell_mean_fix_c() {
    let i = fix_c(Manifold::FlatTorus);
    let o = forms::function(Manifold::FlatTorus, &CylinderFunction::linear(&ScalarField::constant(1.0)));
    let e = expect_series(&i, &o, &SeriesOptions { tol: 1e-10, ..SeriesOptions::with_k(20) }).unwrap();
    assert!((e.value - 2.0).abs() < 1e-10);
    assert_eq!(e.k, 20);
}

#[test]
fn second_moment_fix_t() {
    let i = fix_t();
    let m = Manifold::FlatTorus;
    let f = ScalarField::cos_wave(0, 1.0).add(&ScalarField::sin_wave(1, 1.0).scale(0.5));
    let e = series(&i, &forms::function(m, &CylinderFunction::square(&f)));
    let q = Quadrature::new(m, [32, 32]);
    let rho = |x: &poisson_forms::ManifoldPoint| i.rho().value(m, x);
    let f2 = q.integrate(|x| f.value(m, x).powi(2) * rho(x));
    let f1 = q.integrate(|x| f.value(m, x) * rho(x));
    assert!((e - (f2 + f1 * f1)).abs() < 1e-8, "{e} vs {}", f2 + f1 * f1);
}

#[test]
fn exponential_moment_matches_laplace_functional() {
    let i = fix_t();
    let m = Manifold::FlatTorus;
    let phi = ScalarField::coscos();
    let e = series(&i, &forms::function(m, &CylinderFunction::expneg(&phi)));
    let q = Quadrature::new(m, [32, 32]);
    let laplace = q.integrate(|x| ((-phi.value(m, x)).exp() - 1.0) * i.rho().value(m, x)).exp();
    assert!((e - laplace).abs() < 1e-12);
}

#[test]
fn truncation_is_stable_and_bounded() {
    let i = fix_t();
    let m = Manifold::FlatTorus;
    let o = forms::function(m, &CylinderFunction::square(&ScalarField::coscos()).mul(&CylinderFunction::expneg(&ScalarField::cos_wave(1, 1.0))));
    let mut prev_tail = f64::INFINITY;
    for k in 0..30 {
        let a = expect_series(&i, &o, &SeriesOptions { k: Some(k), tol: f64::INFINITY, grid: None }).unwrap();
        let b = expect_series(&i, &o, &SeriesOptions { k: Some(k + 1), tol: f64::INFINITY, grid: None }).unwrap();
        assert!(a.tail_bound >= 0.0 && a.tail_bound <= prev_tail);
        assert!((b.value - a.value).abs() <= a.tail_bound * (1.0 + 1e-12) + 1e-300, "k={k}");
        prev_tail = a.tail_bound;
    }
    match expect_series(&i, &o, &SeriesOptions { k: Some(3), tol: 1e-10, grid: None }) {
        Err(Error::TruncationTooSmall { k, .. }) => assert_eq!(k, 3),
        other => panic!("expected a truncation error, got {other:?}"),
    }
}

#[test]
fn series_of_distinct_pairs_matches_literal_sum() {
    // E Σ_{x≠y} a(x)b(y) = ∫a dσ ∫b dσ on the series grid.
    let i = fix_t();
    let m = Manifold::FlatTorus;
    let (a, b) = (ScalarField::coscos(), ScalarField::sin_wave(1, 1.0));
    let o = Observable::constant(1.0).attach(&[vec![field_fn(m, &a)], vec![field_fn(m, &b)]]);
    let q = Quadrature::new(m, [32, 32]);
    let ia = q.integrate(|x| a.value(m, x) * i.rho().value(m, x));
    let ib = q.integrate(|x| b.value(m, x) * i.rho().value(m, x));
    assert!((series(&i, &o) - ia * ib).abs() < 1e-12);
}

// Monte Carlo.

#[test]
fn mc_constant_is_exact() {
    let e = expect_mc(&fix_t(), |_| 1.0, 50, 9).unwrap();
    assert_eq!(e.value, 1.0);
    assert_eq!(e.std_error, 0.0);
    assert_eq!((e.n_samples, e.seed), (50, 9));
}

#[test]
fn mc_is_bit_identical_across_worker_counts() {
    let i = fix_t();
    let f = CylinderFunction::square(&ScalarField::coscos());
    let run = |n| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| expect_mc(&i, |g| f.eval(g), 2000, 42).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    assert_eq!(a, run(1));
}

#[test]
fn mc_agrees_with_series() {
    let i = fix_t();
    let m = Manifold::FlatTorus;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut inside = 0;
    let cases = 12;
    for c in 0..cases {
        let f = smooth_function(&mut rng).mul(&smooth_function(&mut rng));
        let s = series(&i, &forms::function(m, &f));
        let e = expect_mc(&i, |g| f.eval(g), 4000, 100 + c).unwrap();
        if (e.value - s).abs() <= 3.0 * e.std_error + 1e-12 {
            inside += 1;
        }
    }
    // A 3σ miss has probability ≈ 0.3% per case.
    assert!(inside >= cases - 1, "{inside}/{cases}");
}

// Checks.

#[test]
fn mecke_examples() {
    let opts = SeriesOptions::default();
    for i in intensities() {
        let m = i.manifold();
        let (phi, psi) = (ScalarField::coscos(), ScalarField::sin_wave(0, 1.0).add(&ScalarField::constant(0.3)));
        let r = check_mecke(&i, &MeckeIntegrand::zero().removed(vec![field_fn(m, &phi)], Observable::constant(1.0)), 1e-8, &opts)
            .unwrap();
        let q = Quadrature::new(m, series::default_grid(m)).integrate(|x| phi.value(m, x) * i.rho().value(m, x));
        assert!(r.pass && (r.lhs - q).abs() < 1e-8, "{r:?}");

        let lin = |f: &ScalarField| Observable::linear(field_fn(m, f));
        let sym = MeckeIntegrand::zero()
            .removed(vec![field_fn(m, &phi)], lin(&psi))
            .removed(vec![field_fn(m, &psi)], lin(&phi));
        assert!(check_mecke(&i, &sym, 1e-6, &opts).unwrap().pass);

        let full = MeckeIntegrand::zero().full(
            vec![field_fn(m, &psi)],
            forms::function(m, &CylinderFunction::square(&phi).mul(&CylinderFunction::expneg(&psi))),
        );
        let r = check_mecke(&i, &full, 1e-10, &opts).unwrap();
        assert!(r.pass, "{r:?}");

        let r = check_mecke(&i, &MeckeIntegrand::zero(), 0.0, &opts).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }
}

#[test]
fn ibp_examples() {
    let opts = SeriesOptions::default();
    let i = fix_t();
    let m = Manifold::FlatTorus;
    // F₂ ≡ 1, F₁ = ⟨φ,γ⟩, V = (1, ν): one-particle integration by parts.
    let phi = ScalarField::coscos();
    let nu = OneFormField::from_components([ScalarField::sin_wave(1, 1.0), ScalarField::cos_wave(0, 1.0), ScalarField::constant(0.0)]);
    let v = CylinderOneForm::single(CylinderFunction::constant(1.0), nu.clone());
    let r = check_ibp(&i, &CylinderFunction::linear(&phi), &CylinderFunction::constant(1.0), &v, 1e-7, &opts).unwrap();
    let q = Quadrature::new(m, [32, 32]);
    let one_particle = q.integrate(|x| dot2(&phi.frame_jet(m, x).grad, &nu.value(m, x)) * i.rho().value(m, x));
    assert!(r.pass && (r.lhs - one_particle).abs() < 1e-7, "{r:?}");

    let zero = CylinderOneForm::single(CylinderFunction::constant(0.0), nu);
    let r = check_ibp(&i, &CylinderFunction::linear(&phi), &CylinderFunction::square(&phi), &zero, 0.0, &opts).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
}

#[test]
fn ibp_battery() {
    let opts = SeriesOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for c in 0..10 {
        let i = if c % 2 == 0 { fix_t() } else { sphere_density() };
        let (f1, f2) = (smooth_function(&mut rng), smooth_function(&mut rng));
        let v = smooth_form(&mut rng, 2);
        let r = check_ibp(&i, &f1, &f2, &v, 1e-6, &opts).unwrap();
        assert!(r.pass, "case {c}: {r:?}");
    }
}

#[test]
fn dirichlet_form_examples() {
    let opts = SeriesOptions::default();
    let m = Manifold::FlatTorus;
    let i = fix_c(m);
    let phi = ScalarField::coscos();
    let f = CylinderFunction::linear(&phi);
    let r = check_dirichlet_form(&i, &f, &f, 1e-7, &opts).unwrap();
    let q = Quadrature::new(m, [32, 32]).integrate(|x| 2.0 * dot2(&phi.frame_jet(m, x).grad, &phi.frame_jet(m, x).grad));
    assert!(r.pass && (r.lhs - q).abs() < 1e-7, "{r:?} vs {q}");
    assert!((q - 4.0 * PI * PI).abs() < 1e-9);

    let r = check_dirichlet_form(&i, &f, &CylinderFunction::constant(1.5), 1e-12, &opts).unwrap();
    assert!(r.routes.iter().all(|(_, v)| v.abs() < 1e-12), "{r:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for c in 0..10 {
        let i = if c % 2 == 0 { fix_t() } else { sphere_density() };
        let (f1, f2) = (smooth_function(&mut rng), smooth_function(&mut rng));
        let r = check_dirichlet_form(&i, &f1, &f2, 1e-6, &opts).unwrap();
        assert!(r.pass, "case {c}: {r:?}");
    }
}

#[test]
fn bochner_form_examples() {
    let opts = SeriesOptions::default();
    let m = Manifold::FlatTorus;
    let v = CylinderOneForm::single(CylinderFunction::constant(1.0), OneFormField::constant([0.4, -0.7, 0.0]));
    let r = check_bochner_form(&fix_c(m), &v, &v, 1e-12, &opts).unwrap();
    assert!(r.routes.iter().all(|(_, x)| x.abs() < 1e-12), "{r:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for c in 0..8 {
        let i = if c % 2 == 0 { fix_t() } else { sphere_density() };
        let v1 = smooth_form(&mut rng, 2);
        let r = check_bochner_form(&i, &v1, &v1, 1e-6, &opts).unwrap();
        assert!(r.pass && r.lhs >= -1e-9, "diagonal case {c}: {r:?}");
        let v2 = smooth_form(&mut rng, 2);
        let r = check_bochner_form(&i, &v1, &v2, 1e-6, &opts).unwrap();
        assert!(r.pass, "case {c}: {r:?}");
    }
}

#[test]
fn derham_form_examples() {
    let opts = SeriesOptions::default();
    let m = Manifold::FlatTorus;
    let v = CylinderOneForm::single(CylinderFunction::constant(1.0), OneFormField::constant([0.4, -0.7, 0.0]));
    let r = check_derham_form(&fix_c(m), &v, &v, 1e-12, &opts).unwrap();
    assert!(r.routes.iter().all(|(_, x)| x.abs() < 1e-12), "{r:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for c in 0..8 {
        let i = if c % 2 == 0 { fix_t() } else { sphere_density() };
        let (v1, v2) = (smooth_form(&mut rng, 2), smooth_form(&mut rng, 2));
        let r = check_derham_form(&i, &v1, &v2, 1e-6, &opts).unwrap();
        assert!(r.pass, "case {c}: {r:?}");
    }
}

#[test]
fn derham_form_of_gradients() {
    let opts = SeriesOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for c in 0..6 {
        let i = if c % 2 == 0 { fix_t() } else { sphere_density() };
        let f = smooth_function(&mut rng);
        let r = check_derham_gradient(&i, &f, 1e-6, &opts).unwrap();
        assert!(r.pass, "case {c}: {r:?}");
        let dd = r.routes.iter().find(|(n, _)| n == "exterior_part").unwrap().1;
        assert!(dd.abs() < 1e-8, "{dd}");
    }
}

#[test]
fn report_csv_row_has_header_columns() {
    let i = fix_t();
    let f = CylinderFunction::linear(&ScalarField::coscos());
    let r = check_dirichlet_form(&i, &f, &f, 1e-6, &SeriesOptions::default()).unwrap();
    let row = r.csv_row();
    assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    assert!(row.starts_with("dirichlet_form,"));
    assert!(row.contains(",32x32,"));
}

#[test]
fn weitzenbock_identity_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for (k, i) in intensities().iter().enumerate() {
        for _ in 0..12 {
            let m = i.manifold();
            let gamma = random_config(m, &mut rng, 4);
            let v = random_form(&mut rng);
            let r = check_weitzenbock(i, &v, &gamma, 1e-10);
            assert!(r.pass, "{k}: {r:?}");
            assert_eq!(r.routes.len(), 4);
            worst = worst.max(r.residual);
        }
    }
    assert!(worst < 1e-10);
    // Nonzero Ricci on the sphere: the curvature term is not negligible.
    let i = sphere_density();
    let gamma = Configuration::from_coords(Manifold::UnitSphere, &[[0.2, 0.3]]).unwrap();
    let v = CylinderOneForm::single(CylinderFunction::constant(1.0), OneFormField::constant([0.0, 0.0, 1.0]));
    let r = check_weitzenbock(&i, &v, &gamma, 1e-10);
    assert!(r.pass);
    assert!((v.bochner_gamma(&i, &gamma).norm_sq().sqrt() - r.lhs).abs() > 0.1);
}

#[test]
fn mc_series_battery_of_100() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let all = intensities();
    let mut inside = 0;
    for c in 0..100u64 {
        let i = &all[(c % 3) as usize];
        let f = smooth_function(&mut rng);
        let s = series(i, &forms::function(i.manifold(), &f));
        let e = expect_mc(i, |g| f.eval(g), 4000, 1000 + c).unwrap();
        if (e.value - s).abs() <= 3.0 * e.std_error + 1e-12 {
            inside += 1;
        }
    }
    // Budget: 99 of 100 inside 3 std errors.
    assert!(inside >= 99, "{inside}/100");
}

#[test]
fn residuals_vanish_under_grid_refinement() {
    // Torus checks are exact at round-off on any grid; the sphere carries quadrature error.
    let i = sphere_density();
    let phi = ScalarField::coscos();
    let f1 = CylinderFunction::linear(&phi);
    let f2 = CylinderFunction::expneg(&ScalarField::sin_wave(0, 1.0).scale(0.7));
    let v = CylinderOneForm::single(CylinderFunction::linear(&phi), OneFormField::gradient(&ScalarField::sin_wave(1, 1.0)));
    let grids = [[8usize, 16], [12, 24], [16, 32], [24, 48], [32, 64]];
    let res = |check: &dyn Fn(&SeriesOptions) -> CheckReport| -> Vec<f64> {
        grids.iter().map(|&g| check(&SeriesOptions::with_grid(g)).residual).collect()
    };
    let ibp = res(&|o| check_ibp(&i, &f1, &f2, &v, 1e-6, o).unwrap());
    let dir = res(&|o| check_dirichlet_form(&i, &f1, &f2, 1e-6, o).unwrap());
    for r in [&ibp, &dir] {
        for w in grids.windows(2).zip(r.windows(2)) {
            let ([g0, g1], [r0, r1]) = (w.0, w.1) else { unreachable!() };
            if *r1 > 1e-11 {
                let order = (r0 / r1).ln() / (g1[0] as f64 / g0[0] as f64).ln();
                assert!(order >= 2.0, "order {order} between grids {g0:?} and {g1:?}: {r:?}");
            }
        }
    }
    // Integration by parts holds at round-off on every grid; the Dirichlet routes need resolution.
    assert!(ibp.iter().all(|r| *r < 1e-12), "{ibp:?}");
    assert!(dir[0] > 1e-3 && dir[4] < 1e-6, "{dir:?}");
}
