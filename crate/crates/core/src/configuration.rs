//! Finite configurations, their tangent vectors, and Poisson sampling.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::intensity::IntensityField;
use crate::linalg::{dot2, Vec2};
use crate::manifold::{Manifold, ManifoldPoint, TangentVector, COINCIDENCE_TOL};

/// Proposals drawn per accepted point before sampling gives up.
pub const REJECTION_CAP: usize = 1_000_000;

/// A finite set of pairwise distinct points. Storage order carries no meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    manifold: Manifold,
    points: Vec<ManifoldPoint>,
}

impl Configuration {
    pub fn empty(manifold: Manifold) -> Self {
        Self { manifold, points: Vec::new() }
    }

    pub fn new(manifold: Manifold, points: Vec<ManifoldPoint>) -> Result<Self> {
        let mut c = Self::empty(manifold);
        for p in points {
            c = c.add(&p)?;
        }
        Ok(c)
    }

    pub fn from_coords(manifold: Manifold, coords: &[[f64; 2]]) -> Result<Self> {
        let pts = coords.iter().map(|c| manifold.point(*c)).collect::<Result<Vec<_>>>()?;
        Self::new(manifold, pts)
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Storage index of `x`, if it is a point of the configuration.
    pub fn index_of(&self, x: &ManifoldPoint) -> Option<usize> {
        self.points.iter().position(|p| self.manifold.separation(p, x) <= COINCIDENCE_TOL)
    }

    pub fn contains(&self, x: &ManifoldPoint) -> bool {
        self.index_of(x).is_some()
    }

    /// `⟨f, γ⟩ = Σ_{x∈γ} f(x)`.
    pub fn pairing<F: Fn(&ManifoldPoint) -> f64>(&self, f: F) -> f64 {
        self.points.iter().map(f).sum()
    }

    pub fn add(&self, y: &ManifoldPoint) -> Result<Self> {
        if self.contains(y) {
            return Err(Error::AlreadyAMember { coords: y.coords() });
        }
        let mut points = self.points.clone();
        points.push(*y);
        Ok(Self { manifold: self.manifold, points })
    }

    pub fn remove(&self, x: &ManifoldPoint) -> Result<Self> {
        let i = self.index_of(x).ok_or(Error::NotAMember { coords: x.coords() })?;
        Ok(self.remove_index(i))
    }

    /// The configuration without its `i`-th stored point.
    pub fn remove_index(&self, i: usize) -> Self {
        let mut points = self.points.clone();
        points.remove(i);
        Self { manifold: self.manifold, points }
    }

    /// `(γ∖{x}) ∪ {y}`.
    pub fn replace(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<Self> {
        let i = self.index_of(x).ok_or(Error::NotAMember { coords: x.coords() })?;
        if let Some(j) = self.index_of(y) {
            if j != i {
                return Err(Error::AlreadyAMember { coords: y.coords() });
            }
        }
        let mut points = self.points.clone();
        points[i] = *y;
        Ok(Self { manifold: self.manifold, points })
    }

    /// Same point set, irrespective of storage order.
    pub fn same_set(&self, other: &Self) -> bool {
        self.manifold == other.manifold
            && self.len() == other.len()
            && self.points.iter().all(|p| other.contains(p))
    }

    pub fn to_json(&self) -> String {
        let coords: Vec<[f64; 2]> = self.points.iter().map(|p| p.coords()).collect();
        serde_json::to_string(&coords).expect("coordinates serialize")
    }

    pub fn from_json(manifold: Manifold, text: &str) -> Result<Self> {
        let coords: Vec<[f64; 2]> =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("configuration JSON: {e}")))?;
        Self::from_coords(manifold, &coords)
    }
}

/// Tangent vector `V(γ) = (V_x)_{x∈γ}`, stored densely in the configuration's order.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaTangent {
    config: Configuration,
    vectors: Vec<Vec2>,
}

impl GammaTangent {
    pub fn zero(config: &Configuration) -> Self {
        Self { config: config.clone(), vectors: vec![[0.0; 2]; config.len()] }
    }

    pub fn from_components(config: &Configuration, vectors: Vec<Vec2>) -> Result<Self> {
        if vectors.len() != config.len() {
            return Err(Error::MismatchedConfiguration);
        }
        Ok(Self { config: config.clone(), vectors })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn components(&self) -> &[Vec2] {
        &self.vectors
    }

    pub fn set(&mut self, v: &TangentVector) -> Result<()> {
        let i = self.config.index_of(&v.base).ok_or(Error::NotAMember { coords: v.base.coords() })?;
        self.vectors[i] = v.components;
        Ok(())
    }

    pub fn get(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        let i = self.config.index_of(x).ok_or(Error::NotAMember { coords: x.coords() })?;
        Ok(TangentVector::new(self.config.points[i], self.vectors[i]))
    }

    /// `⟨V, W⟩_γ = Σ_{x∈γ} ⟨V_x, W_x⟩`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.config.manifold != other.config.manifold || self.config.len() != other.config.len() {
            return Err(Error::MismatchedConfiguration);
        }
        if self.config == other.config {
            return Ok(self.vectors.iter().zip(&other.vectors).map(|(a, b)| dot2(a, b)).sum());
        }
        // Same set stored in another order.
        let mut s = 0.0;
        for (p, a) in self.config.points.iter().zip(&self.vectors) {
            let j = other.config.index_of(p).ok_or(Error::MismatchedConfiguration)?;
            s += dot2(a, &other.vectors[j]);
        }
        Ok(s)
    }

    pub fn norm_sq(&self) -> f64 {
        self.vectors.iter().map(|a| dot2(a, a)).sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.config != other.config {
            return Err(Error::MismatchedConfiguration);
        }
        let vectors = self.vectors.iter().zip(&other.vectors).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
        Ok(Self { config: self.config.clone(), vectors })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { config: self.config.clone(), vectors: self.vectors.iter().map(|a| [s * a[0], s * a[1]]).collect() }
    }
}

pub fn gamma_inner(v: &GammaTangent, w: &GammaTangent) -> Result<f64> {
    v.inner(w)
}

/// Uniform point with respect to the Riemannian volume.
pub fn uniform_point<R: Rng + ?Sized>(manifold: Manifold, rng: &mut R) -> ManifoldPoint {
    match manifold {
        Manifold::FlatTorus => ManifoldPoint { coords: [rng.random::<f64>(), rng.random::<f64>()] },
        Manifold::UnitSphere => {
            // Archimedes: z = sin(lat) is uniform on [-1, 1].
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let lon = PI * (2.0 * rng.random::<f64>() - 1.0);
            ManifoldPoint { coords: [z.clamp(-1.0, 1.0).asin(), lon] }
        }
    }
}

/// One point with density `ρ/σ(X)` by rejection against the density bound.
pub fn sample_point<R: Rng + ?Sized>(intensity: &IntensityField, rng: &mut R) -> Result<ManifoldPoint> {
    let m = intensity.manifold();
    let sup = intensity.density_bound();
    for _ in 0..REJECTION_CAP {
        let x = uniform_point(m, rng);
        let r = intensity.density(&x)?;
        if r > sup {
            return Err(Error::Sampling(format!("density {r} exceeds the rejection envelope {sup}")));
        }
        if rng.random::<f64>() * sup < r {
            return Ok(x);
        }
    }
    Err(Error::Sampling(format!("rejection cap of {REJECTION_CAP} proposals exceeded")))
}

/// Draws a configuration from the Poisson measure with intensity `σ`.
pub fn sample_poisson<R: Rng + ?Sized>(intensity: &IntensityField, rng: &mut R) -> Result<Configuration> {
    let mass = intensity.sigma_mass();
    let n = Poisson::new(mass).map_err(|e| Error::Sampling(e.to_string()))?.sample(rng) as usize;
    let mut c = Configuration::empty(intensity.manifold());
    while c.len() < n {
        let x = sample_point(intensity, rng)?;
        // Coincidences have probability zero; redraw if one occurs.
        if !c.contains(&x) {
            c.points.push(x);
        }
    }
    Ok(c)
}
