#![allow(dead_code)]

use poisson_forms::configuration::Configuration;
use poisson_forms::cylinder::{CylinderFunction, CylinderOneForm};
use poisson_forms::field::{OneFormField, ScalarField};
use poisson_forms::manifold::{Manifold, ManifoldPoint, TangentVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn random_point(m: Manifold, rng: &mut ChaCha8Rng) -> ManifoldPoint {
    match m {
        Manifold::FlatTorus => m.point([rng.random(), rng.random()]).unwrap(),
        Manifold::UnitSphere => {
            let z: f64 = rng.random_range(-0.95..0.95);
            m.point([z.asin(), rng.random_range(-PI..PI)]).unwrap()
        }
    }
}

pub fn random_config(m: Manifold, rng: &mut ChaCha8Rng, max: usize) -> Configuration {
    let n = rng.random_range(1..=max);
    let mut g = Configuration::empty(m);
    while g.len() < n {
        if let Ok(h) = g.add(&random_point(m, rng)) {
            g = h;
        }
    }
    g
}

pub fn scalar_pool() -> Vec<ScalarField> {
    vec![
        ScalarField::coscos(),
        ScalarField::sin_wave(0, 1.0).scale(0.7),
        ScalarField::cos_wave(1, 1.0).add(&ScalarField::coordinate(2).scale(0.5)),
        ScalarField::bump(0.5, 0.45),
        ScalarField::sin_wave(1, 1.0).mul(&ScalarField::cos_wave(0, 1.0)).scale(0.5),
    ]
}

pub fn random_scalar(rng: &mut ChaCha8Rng) -> ScalarField {
    let pool = scalar_pool();
    pool[rng.random_range(0..pool.len())].clone()
}

pub fn random_function(rng: &mut ChaCha8Rng) -> CylinderFunction {
    let phi = random_scalar(rng);
    match rng.random_range(0..5) {
        0 => CylinderFunction::linear(&phi),
        1 => CylinderFunction::square(&phi).scale(0.5),
        2 => CylinderFunction::expneg(&phi),
        3 => CylinderFunction::constant(rng.random_range(-1.0..1.0)),
        _ => CylinderFunction::linear(&phi).mul(&CylinderFunction::expneg(&random_scalar(rng))),
    }
}

pub fn random_one_form_field(rng: &mut ChaCha8Rng) -> OneFormField {
    let phi = random_scalar(rng);
    match rng.random_range(0..4) {
        0 => OneFormField::gradient(&phi).scale(0.3),
        1 => OneFormField::rotated_gradient(&phi).scale(0.3),
        2 => OneFormField::constant([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .scaled_by(&phi),
        _ => OneFormField::from_components([phi.clone(), ScalarField::cos_wave(0, 1.0), ScalarField::constant(0.2)]).scale(0.5),
    }
}

pub fn random_form(rng: &mut ChaCha8Rng) -> CylinderOneForm {
    let k = rng.random_range(1..=3);
    CylinderOneForm::new((0..k).map(|_| (random_function(rng), random_one_form_field(rng))).collect())
}

/// Configuration with every point moved along the geodesic `exp(s·u_x)`.
pub fn moved(g: &Configuration, u: &[[f64; 2]], s: f64) -> Configuration {
    let m = g.manifold();
    let pts = g
        .points()
        .iter()
        .zip(u)
        .map(|(x, d)| m.exp_map(&TangentVector::new(*x, [s * d[0], s * d[1]])).unwrap())
        .collect();
    Configuration::new(m, pts).unwrap()
}

/// Parallel transport of `w` (at `exp(s·u)`) back to `x` along the same geodesic.
pub fn transport_back(m: Manifold, x: &ManifoldPoint, u: [f64; 2], s: f64, w: [f64; 2]) -> [f64; 2] {
    let v = TangentVector::new(*x, [s * u[0], s * u[1]]);
    let y = m.exp_map(&v).unwrap();
    let end = m.parallel_transport(&v, &v).unwrap();
    let back = TangentVector::new(y, [-end.components[0], -end.components[1]]);
    m.parallel_transport(&back, &TangentVector::new(y, w)).unwrap().components
}

/// Trigonometric fields whose products the default series grid integrates exactly.
pub fn smooth_pool() -> Vec<ScalarField> {
    vec![
        ScalarField::coscos(),
        ScalarField::sin_wave(0, 1.0).scale(0.7),
        ScalarField::cos_wave(1, 1.0).add(&ScalarField::coordinate(2).scale(0.5)),
        ScalarField::sin_wave(1, 1.0).mul(&ScalarField::cos_wave(0, 1.0)).scale(0.5),
    ]
}

pub fn smooth_scalar(rng: &mut ChaCha8Rng) -> ScalarField {
    let pool = smooth_pool();
    pool[rng.random_range(0..pool.len())].clone()
}

pub fn smooth_function(rng: &mut ChaCha8Rng) -> CylinderFunction {
    let phi = smooth_scalar(rng);
    match rng.random_range(0..5) {
        0 => CylinderFunction::linear(&phi),
        1 => CylinderFunction::square(&phi).scale(0.5),
        2 => CylinderFunction::expneg(&phi),
        3 => CylinderFunction::constant(rng.random_range(-1.0..1.0)),
        _ => CylinderFunction::linear(&phi).mul(&CylinderFunction::expneg(&smooth_scalar(rng))),
    }
}

pub fn smooth_one_form_field(rng: &mut ChaCha8Rng) -> OneFormField {
    let phi = smooth_scalar(rng);
    match rng.random_range(0..4) {
        0 => OneFormField::gradient(&phi).scale(0.3),
        1 => OneFormField::rotated_gradient(&phi).scale(0.3),
        2 => OneFormField::constant([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .scaled_by(&phi),
        _ => OneFormField::from_components([phi.clone(), ScalarField::cos_wave(0, 1.0), ScalarField::constant(0.2)]).scale(0.5),
    }
}

pub fn smooth_form(rng: &mut ChaCha8Rng, max_terms: usize) -> CylinderOneForm {
    let k = rng.random_range(1..=max_terms);
    CylinderOneForm::new((0..k).map(|_| (smooth_function(rng), smooth_one_form_field(rng))).collect())
}
