//! Product quadrature rules on the base manifolds.
//!
//! Torus: periodic trapezoid rule, spectrally accurate for smooth periodic
//! integrands. Sphere: Gauss–Legendre in `z = sin(lat)` times the periodic
//! trapezoid rule in longitude. Weights are with respect to the Riemannian
//! volume measure.

use std::f64::consts::PI;

use crate::manifold::{Manifold, ManifoldPoint};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Nodes and volume weights of a product rule.
#[derive(Clone, Debug)]
pub struct Quadrature {
    manifold: Manifold,
    grid: [usize; 2],
    nodes: Vec<ManifoldPoint>,
    weights: Vec<f64>,
}

impl Quadrature {
    /// `grid = [n1, n2]`: torus `n1 × n2` trapezoid; sphere `n1` Gauss–Legendre
    /// nodes in `z` and `n2` longitudes.
    pub fn new(manifold: Manifold, grid: [usize; 2]) -> Self {
        let [n1, n2] = grid;
        assert!(n1 > 0 && n2 > 0, "quadrature grid must be non-empty");
        let mut nodes = Vec::with_capacity(n1 * n2);
        let mut weights = Vec::with_capacity(n1 * n2);
        match manifold {
            Manifold::FlatTorus => {
                let w = 1.0 / (n1 * n2) as f64;
                for i in 0..n1 {
                    for j in 0..n2 {
                        let c = [i as f64 / n1 as f64, j as f64 / n2 as f64];
                        nodes.push(ManifoldPoint { coords: c });
                        weights.push(w);
                    }
                }
            }
            Manifold::UnitSphere => {
                let (z, wz) = gauss_legendre(n1);
                let dl = 2.0 * PI / n2 as f64;
                for i in 0..n1 {
                    let lat = z[i].asin();
                    for j in 0..n2 {
                        let lon = -PI + j as f64 * dl;
                        nodes.push(ManifoldPoint { coords: [lat, lon] });
                        weights.push(wz[i] * dl);
                    }
                }
            }
        }
        Self { manifold, grid, nodes, weights }
    }

    /// Default one-particle grid: 64×64 on the torus, 64×128 on the sphere.
    pub fn default_for(manifold: Manifold) -> Self {
        Self::new(manifold, Self::default_grid(manifold))
    }

    pub fn default_grid(manifold: Manifold) -> [usize; 2] {
        match manifold {
            Manifold::FlatTorus => [64, 64],
            Manifold::UnitSphere => [64, 128],
        }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn grid(&self) -> [usize; 2] {
        self.grid
    }

    pub fn nodes(&self) -> &[ManifoldPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&ManifoldPoint) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// Same grid with each axis doubled.
    pub fn refined(&self) -> Self {
        Self::new(self.manifold, [2 * self.grid[0], 2 * self.grid[1]])
    }
}
