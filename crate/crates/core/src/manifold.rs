//! Concrete Riemannian 2-manifolds: the flat unit torus and the unit sphere.
//!
//! Points are stored in chart coordinates. The torus chart is `(x1, x2)` with
//! both coordinates reduced mod 1; the sphere chart is `(latitude, longitude)`
//! in radians. Tangent vectors are stored as components in an orthonormal
//! frame at their base point:
//!
//! * torus: `e1 = ∂/∂x1`, `e2 = ∂/∂x2`;
//! * sphere: `e1` points east and `e2` points north, so `e1 × e2` is the
//!   outward normal and the frame is positively oriented.
//!
//! Every point also has an ambient embedding (the torus sits in the plane
//! `z = 0` of R³, unrolled) which the analytic field machinery works in. The
//! "normal" of the torus is the zero vector; with that convention the
//! embedded curvature terms that appear in the sphere formulas vanish
//! identically on the torus.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{cross, dot3, norm3, scale3, Mat2, Vec2, Vec3, IDENTITY2, ZERO2};

/// Points this close (in ambient distance) are treated as the same point.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Default finite-difference step in chart units.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    FlatTorus,
    UnitSphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ManifoldPoint {
    pub(crate) coords: [f64; 2],
}

impl ManifoldPoint {
    pub fn coords(&self) -> [f64; 2] {
        self.coords
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: ManifoldPoint,
    pub components: Vec2,
}

impl TangentVector {
    pub fn new(base: ManifoldPoint, components: Vec2) -> Self {
        Self { base, components }
    }

    pub fn zero(base: ManifoldPoint) -> Self {
        Self { base, components: [0.0, 0.0] }
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.components)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { base: self.base, components: [s * self.components[0], s * self.components[1]] }
    }
}

impl Manifold {
    pub fn name(&self) -> &'static str {
        match self {
            Manifold::FlatTorus => "flat_torus",
            Manifold::UnitSphere => "unit_sphere",
        }
    }

    /// Builds a point from chart coordinates, reducing periodic coordinates.
    pub fn point(&self, coords: [f64; 2]) -> Result<ManifoldPoint> {
        if !coords[0].is_finite() || !coords[1].is_finite() {
            return Err(Error::InvalidPoint { coords, reason: "non-finite coordinate" });
        }
        match self {
            Manifold::FlatTorus => Ok(ManifoldPoint {
                coords: [reduce_unit(coords[0]), reduce_unit(coords[1])],
            }),
            Manifold::UnitSphere => {
                if coords[0].abs() > FRAC_PI_2 + 1e-12 {
                    return Err(Error::InvalidPoint { coords, reason: "latitude outside [-pi/2, pi/2]" });
                }
                Ok(ManifoldPoint {
                    coords: [coords[0].clamp(-FRAC_PI_2, FRAC_PI_2), reduce_angle(coords[1])],
                })
            }
        }
    }

    /// Ambient position. The torus is unrolled into the plane `z = 0`.
    pub fn embed(&self, p: &ManifoldPoint) -> Vec3 {
        let [a, b] = p.coords;
        match self {
            Manifold::FlatTorus => [a, b, 0.0],
            Manifold::UnitSphere => {
                let (sl, cl) = a.sin_cos();
                let (so, co) = b.sin_cos();
                [cl * co, cl * so, sl]
            }
        }
    }

    /// Unit normal used by the embedded curvature terms; zero on the torus.
    pub fn normal(&self, p: &ManifoldPoint) -> Vec3 {
        match self {
            Manifold::FlatTorus => [0.0; 3],
            Manifold::UnitSphere => self.embed(p),
        }
    }

    /// Orthonormal frame `[e1, e2]` at `p`, as ambient vectors.
    pub fn frame(&self, p: &ManifoldPoint) -> [Vec3; 2] {
        match self {
            Manifold::FlatTorus => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            Manifold::UnitSphere => {
                let [lat, lon] = p.coords;
                let (sl, cl) = lat.sin_cos();
                let (so, co) = lon.sin_cos();
                [[-so, co, 0.0], [-sl * co, -sl * so, cl]]
            }
        }
    }

    /// Projects an ambient point back onto the manifold.
    pub fn from_ambient(&self, y: &Vec3) -> ManifoldPoint {
        match self {
            Manifold::FlatTorus => ManifoldPoint { coords: [reduce_unit(y[0]), reduce_unit(y[1])] },
            Manifold::UnitSphere => {
                let rho = y[0].hypot(y[1]);
                ManifoldPoint { coords: [y[2].atan2(rho), y[1].atan2(y[0])] }
            }
        }
    }

    /// Frame components of an ambient vector (its tangential part).
    pub fn to_frame(&self, p: &ManifoldPoint, v: &Vec3) -> Vec2 {
        let [e1, e2] = self.frame(p);
        [dot3(&e1, v), dot3(&e2, v)]
    }

    pub fn from_frame(&self, p: &ManifoldPoint, c: &Vec2) -> Vec3 {
        let [e1, e2] = self.frame(p);
        [
            c[0] * e1[0] + c[1] * e2[0],
            c[0] * e1[1] + c[1] * e2[1],
            c[0] * e1[2] + c[1] * e2[2],
        ]
    }

    /// Largest admissible geodesic step (half the injectivity radius on the sphere).
    pub fn max_step(&self) -> f64 {
        match self {
            Manifold::FlatTorus => f64::INFINITY,
            Manifold::UnitSphere => FRAC_PI_2,
        }
    }

    fn check_step(&self, v: &TangentVector) -> Result<f64> {
        let len = v.norm();
        let max = self.max_step();
        if !len.is_finite() || len > max * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { length: len, max });
        }
        Ok(len)
    }

    /// Point reached at time 1 along the geodesic from `v.base` with initial velocity `v`.
    pub fn exp_map(&self, v: &TangentVector) -> Result<ManifoldPoint> {
        let len = self.check_step(v)?;
        let x = &v.base;
        match self {
            Manifold::FlatTorus => Ok(ManifoldPoint {
                coords: [
                    reduce_unit(x.coords[0] + v.components[0]),
                    reduce_unit(x.coords[1] + v.components[1]),
                ],
            }),
            Manifold::UnitSphere => {
                if len == 0.0 {
                    return Ok(*x);
                }
                let p = self.embed(x);
                let u = scale3(1.0 / len, &self.from_frame(x, &v.components));
                let (s, c) = len.sin_cos();
                let y = [c * p[0] + s * u[0], c * p[1] + s * u[1], c * p[2] + s * u[2]];
                Ok(self.from_ambient(&y))
            }
        }
    }

    /// Parallel transport of `w` (based at `v.base`) along `s ↦ exp(s·v)`, `s ∈ [0, 1]`.
    pub fn parallel_transport(&self, v: &TangentVector, w: &TangentVector) -> Result<TangentVector> {
        let len = self.check_step(v)?;
        let end = self.exp_map(v)?;
        match self {
            Manifold::FlatTorus => Ok(TangentVector::new(end, w.components)),
            Manifold::UnitSphere => {
                if len == 0.0 {
                    return Ok(TangentVector::new(end, w.components));
                }
                let x = &v.base;
                let p = self.embed(x);
                let u = scale3(1.0 / len, &self.from_frame(x, &v.components));
                let n = cross(&p, &u);
                let wa = self.from_frame(x, &w.components);
                let a = dot3(&wa, &u);
                let b = dot3(&wa, &n);
                let (s, c) = len.sin_cos();
                let u_end = [-s * p[0] + c * u[0], -s * p[1] + c * u[1], -s * p[2] + c * u[2]];
                let moved = [a * u_end[0] + b * n[0], a * u_end[1] + b * n[1], a * u_end[2] + b * n[2]];
                Ok(TangentVector::new(end, self.to_frame(&end, &moved)))
            }
        }
    }

    /// Frame matrix of the transport map `T_x → T_{exp(v)}` (columns are images of `e1`, `e2`).
    pub fn transport_matrix(&self, v: &TangentVector) -> Result<Mat2> {
        let c1 = self.parallel_transport(v, &TangentVector::new(v.base, [1.0, 0.0]))?;
        let c2 = self.parallel_transport(v, &TangentVector::new(v.base, [0.0, 1.0]))?;
        Ok([
            [c1.components[0], c2.components[0]],
            [c1.components[1], c2.components[1]],
        ])
    }

    pub fn geodesic_distance(&self, a: &ManifoldPoint, b: &ManifoldPoint) -> f64 {
        match self {
            Manifold::FlatTorus => {
                let d0 = min_image(a.coords[0] - b.coords[0]);
                let d1 = min_image(a.coords[1] - b.coords[1]);
                (d0 * d0 + d1 * d1).sqrt()
            }
            Manifold::UnitSphere => {
                let p = self.embed(a);
                let q = self.embed(b);
                norm3(&cross(&p, &q)).atan2(dot3(&p, &q))
            }
        }
    }

    /// Distance used for the coincidence test of configurations.
    pub fn separation(&self, a: &ManifoldPoint, b: &ManifoldPoint) -> f64 {
        match self {
            Manifold::FlatTorus => self.geodesic_distance(a, b),
            Manifold::UnitSphere => {
                let p = self.embed(a);
                let q = self.embed(b);
                norm3(&[p[0] - q[0], p[1] - q[1], p[2] - q[2]])
            }
        }
    }

    /// Ricci operator in the orthonormal frame.
    pub fn ricci_operator(&self, _x: &ManifoldPoint) -> Mat2 {
        match self {
            Manifold::FlatTorus => ZERO2,
            // Ric = (d - 1) g with d = 2.
            Manifold::UnitSphere => IDENTITY2,
        }
    }

    /// Total volume of the manifold.
    pub fn volume(&self) -> f64 {
        match self {
            Manifold::FlatTorus => 1.0,
            Manifold::UnitSphere => 4.0 * PI,
        }
    }

    fn chart_shift(&self, x: &ManifoldPoint, axis: usize, h: f64) -> ManifoldPoint {
        let mut c = x.coords;
        c[axis] += h;
        match self {
            Manifold::FlatTorus => ManifoldPoint { coords: [reduce_unit(c[0]), reduce_unit(c[1])] },
            // The latitude may step past a pole; evaluate through the ambient map.
            Manifold::UnitSphere => ManifoldPoint { coords: c },
        }
    }

    /// Central-difference gradient in the orthonormal frame.
    pub fn fd_gradient<F>(&self, f: F, x: &ManifoldPoint, h: f64) -> TangentVector
    where
        F: Fn(&ManifoldPoint) -> f64,
    {
        let d = |axis: usize| (f(&self.chart_shift(x, axis, h)) - f(&self.chart_shift(x, axis, -h))) / (2.0 * h);
        match self {
            Manifold::FlatTorus => TangentVector::new(*x, [d(0), d(1)]),
            Manifold::UnitSphere => {
                let cl = x.coords[0].cos();
                TangentVector::new(*x, [d(1) / cl, d(0)])
            }
        }
    }

    /// Second-order central-difference Laplace–Beltrami operator in the chart.
    pub fn fd_laplace_beltrami<F>(&self, f: F, x: &ManifoldPoint, h: f64) -> f64
    where
        F: Fn(&ManifoldPoint) -> f64,
    {
        let f0 = f(x);
        let second = |axis: usize| {
            (f(&self.chart_shift(x, axis, h)) - 2.0 * f0 + f(&self.chart_shift(x, axis, -h))) / (h * h)
        };
        match self {
            Manifold::FlatTorus => second(0) + second(1),
            Manifold::UnitSphere => {
                let lat = x.coords[0];
                let first_lat = (f(&self.chart_shift(x, 0, h)) - f(&self.chart_shift(x, 0, -h))) / (2.0 * h);
                second(0) - lat.tan() * first_lat + second(1) / (lat.cos() * lat.cos())
            }
        }
    }
}

#[inline]
fn reduce_unit(a: f64) -> f64 {
    let r = a.rem_euclid(1.0);
    // rem_euclid can return 1.0 for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[inline]
fn reduce_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        -PI
    } else {
        r
    }
}

#[inline]
fn min_image(d: f64) -> f64 {
    d - d.round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus_pt(a: f64, b: f64) -> ManifoldPoint {
        Manifold::FlatTorus.point([a, b]).unwrap()
    }

    fn random_sphere_point(rng: &mut ChaCha8Rng) -> ManifoldPoint {
        let z: f64 = rng.random_range(-0.95..0.95);
        let lon: f64 = rng.random_range(-PI..PI);
        Manifold::UnitSphere.point([z.asin(), lon]).unwrap()
    }

    #[test]
    fn torus_exp_wraps() {
        let m = Manifold::FlatTorus;
        let x = torus_pt(0.9, 0.5);
        let y = m.exp_map(&TangentVector::new(x, [0.2, 0.0])).unwrap();
        assert!((y.coords()[0] - 0.1).abs() < 1e-12);
        assert!((y.coords()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        for m in [Manifold::FlatTorus, Manifold::UnitSphere] {
            let x = m.point([0.3, 0.4]).unwrap();
            assert_eq!(m.exp_map(&TangentVector::zero(x)).unwrap(), x);
        }
    }

    #[test]
    fn sphere_quarter_great_circle() {
        let m = Manifold::UnitSphere;
        let x = m.point([0.0, 0.3]).unwrap();
        let y = m.exp_map(&TangentVector::new(x, [0.0, FRAC_PI_2])).unwrap();
        assert!((m.geodesic_distance(&x, &y) - FRAC_PI_2).abs() < 1e-12);
        assert!((y.coords()[0] - FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn sphere_rejects_long_steps() {
        let m = Manifold::UnitSphere;
        let x = m.point([0.1, 0.2]).unwrap();
        let err = m.exp_map(&TangentVector::new(x, [2.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
        assert!(m.parallel_transport(&TangentVector::new(x, [0.0, 1.7]), &TangentVector::zero(x)).is_err());
    }

    #[test]
    fn constant_speed_geodesics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [Manifold::FlatTorus, Manifold::UnitSphere] {
            for _ in 0..20 {
                let x = if m == Manifold::UnitSphere {
                    random_sphere_point(&mut rng)
                } else {
                    torus_pt(rng.random(), rng.random())
                };
                let v = [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)];
                let len = crate::linalg::norm2(&v);
                for s in [0.25, 0.5, 1.0] {
                    let y = m.exp_map(&TangentVector::new(x, [s * v[0], s * v[1]])).unwrap();
                    assert!((m.geodesic_distance(&x, &y) - s * len).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn transport_is_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Manifold::UnitSphere;
        for _ in 0..50 {
            let x = random_sphere_point(&mut rng);
            let v = TangentVector::new(x, [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let w1 = TangentVector::new(x, [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let w2 = TangentVector::new(x, [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let p1 = m.parallel_transport(&v, &w1).unwrap();
            let p2 = m.parallel_transport(&v, &w2).unwrap();
            let before = crate::linalg::dot2(&w1.components, &w2.components);
            let after = crate::linalg::dot2(&p1.components, &p2.components);
            assert!((before - after).abs() < 1e-12);
            assert!((p1.norm() - w1.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_transport_is_trivial() {
        let m = Manifold::FlatTorus;
        let x = torus_pt(0.2, 0.7);
        let w = TangentVector::new(x, [0.3, -1.1]);
        let p = m.parallel_transport(&TangentVector::new(x, [0.45, 0.9]), &w).unwrap();
        assert_eq!(p.components, w.components);
    }

    #[test]
    fn equator_loop_has_trivial_holonomy() {
        let m = Manifold::UnitSphere;
        let mut x = m.point([0.0, 0.0]).unwrap();
        let mut w = TangentVector::new(x, [0.6, -0.8]);
        let steps = 8;
        for _ in 0..steps {
            let v = TangentVector::new(x, [2.0 * PI / steps as f64, 0.0]);
            w = m.parallel_transport(&v, &w).unwrap();
            x = w.base;
        }
        assert!((w.components[0] - 0.6).abs() < 1e-12);
        assert!((w.components[1] + 0.8).abs() < 1e-12);
        assert!(m.geodesic_distance(&x, &m.point([0.0, 0.0]).unwrap()) < 1e-12);
    }

    #[test]
    fn transport_along_meridian_keeps_north_direction() {
        let m = Manifold::UnitSphere;
        let x = m.point([-0.3, 1.0]).unwrap();
        let v = TangentVector::new(x, [0.0, 0.8]);
        let w = m.parallel_transport(&v, &TangentVector::new(x, [0.0, 1.0])).unwrap();
        assert!((w.components[0]).abs() < 1e-12);
        assert!((w.components[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fd_gradient_of_sine() {
        let m = Manifold::FlatTorus;
        let f = |p: &ManifoldPoint| (2.0 * PI * p.coords()[0]).sin();
        let g = m.fd_gradient(f, &torus_pt(0.0, 0.0), 1e-4);
        assert!((g.components[0] - 2.0 * PI).abs() < 1e-6);
        assert!(g.components[1].abs() < 1e-12);
        let c = m.fd_gradient(|_| 3.0, &torus_pt(0.4, 0.1), 1e-4);
        assert_eq!(c.components, [0.0, 0.0]);
    }

    #[test]
    fn fd_laplacian_of_sine_and_linear() {
        let m = Manifold::FlatTorus;
        let x = torus_pt(0.13, 0.77);
        let f = |p: &ManifoldPoint| (2.0 * PI * p.coords()[0]).sin();
        let exact = -4.0 * PI * PI * (2.0 * PI * 0.13_f64).sin();
        assert!((m.fd_laplace_beltrami(f, &x, 1e-4) - exact).abs() < 1e-4);
        // Linear in the chart away from the periodic seam.
        let lin = |p: &ManifoldPoint| 0.3 * p.coords()[0] - 1.2 * p.coords()[1];
        assert!(m.fd_laplace_beltrami(lin, &torus_pt(0.5, 0.5), 1e-4).abs() < 1e-6);
    }

    #[test]
    fn sphere_first_harmonic_eigenvalue() {
        let m = Manifold::UnitSphere;
        let f = |p: &ManifoldPoint| m.embed(p)[2];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = random_sphere_point(&mut rng);
            let lap = m.fd_laplace_beltrami(f, &x, 1e-4);
            assert!((lap + 2.0 * f(&x)).abs() < 1e-4);
        }
    }

    #[test]
    fn fd_converges_at_second_order() {
        let m = Manifold::FlatTorus;
        let x = torus_pt(0.31, 0.62);
        let f = |p: &ManifoldPoint| (2.0 * PI * p.coords()[0]).sin() * (2.0 * PI * p.coords()[1]).cos();
        let exact = 2.0 * PI * (2.0 * PI * 0.31_f64).cos() * (2.0 * PI * 0.62_f64).cos();
        let e1 = (m.fd_gradient(f, &x, 1e-2).components[0] - exact).abs();
        let e2 = (m.fd_gradient(f, &x, 5e-3).components[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn ricci_operators() {
        let x = torus_pt(0.1, 0.2);
        assert_eq!(Manifold::FlatTorus.ricci_operator(&x), ZERO2);
        let s = Manifold::UnitSphere.point([0.4, 2.0]).unwrap();
        let r = Manifold::UnitSphere.ricci_operator(&s);
        let v = [0.3, -0.7];
        assert_eq!(crate::linalg::mat2_vec(&r, &v), v);
        assert_eq!(r[0][1], r[1][0]);
    }

    #[test]
    fn frames_are_orthonormal_and_oriented() {
        let m = Manifold::UnitSphere;
        let x = m.point([0.7, -2.1]).unwrap();
        let [e1, e2] = m.frame(&x);
        let n = m.embed(&x);
        assert!(dot3(&e1, &e2).abs() < 1e-15);
        assert!((norm3(&e1) - 1.0).abs() < 1e-15);
        let c = cross(&e1, &e2);
        assert!((dot3(&c, &n) - 1.0).abs() < 1e-14);
    }
}
