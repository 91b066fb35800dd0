//! Analytic scalar fields and 1-form fields.
//!
//! Fields are defined on the ambient space (R³, with the torus unrolled into
//! the plane `z = 0`) together with exact derivatives up to third order. The
//! intrinsic quantities the operators need (frame gradient, covariant Hessian,
//! covariant derivatives of 1-forms) are obtained by projecting these ambient
//! jets onto the orthonormal frame, with the extrinsic correction terms of
//! the unit sphere. Any smooth extension off the manifold gives the same
//! intrinsic result.
//!
//! 1-forms are identified with vector fields through the metric.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::linalg::{dot3, Mat2, Mat3, Vec2, Vec3};
use crate::manifold::{Manifold, ManifoldPoint};

pub type Tensor3 = [[[f64; 3]; 3]; 3];
pub type FrameTensor3 = [[[f64; 2]; 2]; 2];

/// Value and ambient derivatives up to third order of a scalar function.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
    pub third: Tensor3,
}

impl ScalarJet {
    pub fn constant(c: f64) -> Self {
        Self { value: c, ..Default::default() }
    }

    pub fn coordinate(i: usize, y: &Vec3) -> Self {
        let mut j = Self { value: y[i], ..Default::default() };
        j.grad[i] = 1.0;
        j
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        r.value += o.value;
        for i in 0..3 {
            r.grad[i] += o.grad[i];
            for j in 0..3 {
                r.hess[i][j] += o.hess[i][j];
                for k in 0..3 {
                    r.third[i][j][k] += o.third[i][j][k];
                }
            }
        }
        r
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        r.value *= s;
        for i in 0..3 {
            r.grad[i] *= s;
            for j in 0..3 {
                r.hess[i][j] *= s;
                for k in 0..3 {
                    r.third[i][j][k] *= s;
                }
            }
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = (self, o);
        let mut r = Self { value: a.value * b.value, ..Default::default() };
        for i in 0..3 {
            r.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
            for j in 0..3 {
                r.hess[i][j] = a.hess[i][j] * b.value
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i]
                    + a.value * b.hess[i][j];
                for k in 0..3 {
                    r.third[i][j][k] = a.third[i][j][k] * b.value
                        + a.hess[i][j] * b.grad[k]
                        + a.hess[i][k] * b.grad[j]
                        + a.hess[j][k] * b.grad[i]
                        + a.grad[i] * b.hess[j][k]
                        + a.grad[j] * b.hess[i][k]
                        + a.grad[k] * b.hess[i][j]
                        + a.value * b.third[i][j][k];
                }
            }
        }
        r
    }

    /// Jet of `f ∘ self` given `[f, f', f'', f''']` at `self.value`.
    pub fn compose(&self, d: [f64; 4]) -> Self {
        let u = self;
        let mut r = Self { value: d[0], ..Default::default() };
        for i in 0..3 {
            r.grad[i] = d[1] * u.grad[i];
            for j in 0..3 {
                r.hess[i][j] = d[2] * u.grad[i] * u.grad[j] + d[1] * u.hess[i][j];
                for k in 0..3 {
                    r.third[i][j][k] = d[3] * u.grad[i] * u.grad[j] * u.grad[k]
                        + d[2]
                            * (u.hess[i][j] * u.grad[k] + u.hess[i][k] * u.grad[j] + u.hess[j][k] * u.grad[i])
                        + d[1] * u.third[i][j][k];
                }
            }
        }
        r
    }
}

/// Intrinsic first and second derivatives of a scalar field at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameScalarJet {
    pub value: f64,
    pub grad: Vec2,
    /// Covariant Hessian `∇²f(e_a, e_b)`.
    pub hess: Mat2,
}

impl FrameScalarJet {
    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }
}

type ScalarFn = dyn Fn(&Vec3) -> ScalarJet + Send + Sync;

/// Smooth real function on the ambient space with exact derivatives up to order three.
#[derive(Clone)]
pub struct ScalarField {
    name: Arc<str>,
    jet: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, jet: impl Fn(&Vec3) -> ScalarJet + Send + Sync + 'static) -> Self {
        Self { name: Arc::from(name.into()), jet: Arc::new(jet) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self { name: Arc::from(name.into()), jet: self.jet.clone() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| ScalarJet::constant(c))
    }

    /// The ambient coordinate `y_i`.
    pub fn coordinate(i: usize) -> Self {
        assert!(i < 3);
        Self::new(format!("y{i}"), move |y| ScalarJet::coordinate(i, y))
    }

    pub fn ambient_jet(&self, y: &Vec3) -> ScalarJet {
        (self.jet)(y)
    }

    pub fn jet(&self, m: Manifold, p: &ManifoldPoint) -> ScalarJet {
        (self.jet)(&m.embed(p))
    }

    pub fn value(&self, m: Manifold, p: &ManifoldPoint) -> f64 {
        self.jet(m, p).value
    }

    pub fn frame_jet(&self, m: Manifold, p: &ManifoldPoint) -> FrameScalarJet {
        project_scalar(m, p, &self.jet(m, p))
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b) = (self.jet.clone(), o.jet.clone());
        Self::new(format!("({} + {})", self.name, o.name), move |y| a(y).add(&b(y)))
    }

    pub fn scale(&self, s: f64) -> Self {
        let a = self.jet.clone();
        Self::new(format!("{s}*{}", self.name), move |y| a(y).scale(s))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = (self.jet.clone(), o.jet.clone());
        Self::new(format!("{}*{}", self.name, o.name), move |y| a(y).mul(&b(y)))
    }

    pub fn exp(&self) -> Self {
        let a = self.jet.clone();
        Self::new(format!("exp({})", self.name), move |y| {
            let u = a(y);
            let e = u.value.exp();
            u.compose([e, e, e, e])
        })
    }

    pub fn ln(&self) -> Self {
        let a = self.jet.clone();
        Self::new(format!("ln({})", self.name), move |y| {
            let u = a(y);
            let v = u.value;
            u.compose([v.ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)])
        })
    }

    pub fn cos(&self) -> Self {
        let a = self.jet.clone();
        Self::new(format!("cos({})", self.name), move |y| {
            let u = a(y);
            let (s, c) = u.value.sin_cos();
            u.compose([c, -s, -c, s])
        })
    }

    pub fn sin(&self) -> Self {
        let a = self.jet.clone();
        Self::new(format!("sin({})", self.name), move |y| {
            let u = a(y);
            let (s, c) = u.value.sin_cos();
            u.compose([s, c, -s, -c])
        })
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::constant(1.0);
        }
        let a = self.jet.clone();
        Self::new(format!("({})^{n}", self.name), move |y| {
            let u = a(y);
            let v = u.value;
            let nf = n as f64;
            u.compose([
                v.powi(n),
                nf * v.powi(n - 1),
                nf * (nf - 1.0) * v.powi(n - 2),
                nf * (nf - 1.0) * (nf - 2.0) * v.powi(n - 3),
            ])
        })
    }

    /// `cos(2π k y_i)`.
    pub fn cos_wave(i: usize, k: f64) -> Self {
        Self::coordinate(i).scale(2.0 * PI * k).cos().renamed(format!("cos(2pi*{k}*y{i})"))
    }

    /// `sin(2π k y_i)`.
    pub fn sin_wave(i: usize, k: f64) -> Self {
        Self::coordinate(i).scale(2.0 * PI * k).sin().renamed(format!("sin(2pi*{k}*y{i})"))
    }

    /// `cos(2π y0)·cos(2π y1)`.
    pub fn coscos() -> Self {
        Self::cos_wave(0, 1.0).mul(&Self::cos_wave(1, 1.0)).renamed("coscos")
    }

    /// Smooth bump `exp(-1/(1 - d²/r²))` around `(c, c)` where `d²` is the
    /// periodic proxy `(sin²(π(y0-c)) + sin²(π(y1-c)))/π²`.
    pub fn bump(c: f64, r: f64) -> Self {
        let proxy = |i: usize| {
            Self::coordinate(i)
                .add(&Self::constant(-c))
                .scale(PI)
                .sin()
                .powi(2)
                .scale(1.0 / (PI * PI * r * r))
        };
        let u = proxy(0).add(&proxy(1));
        let uj = u.jet.clone();
        Self::new(format!("bump({c},{r})"), move |y| {
            let u = uj(y);
            if u.value >= 1.0 {
                return ScalarJet::default();
            }
            let q = 1.0 / (1.0 - u.value);
            let f = (-q).exp();
            let q2 = q * q;
            let q4 = q2 * q2;
            u.compose([f, -q2 * f, (q4 - 2.0 * q2 * q) * f, (-q4 * q2 + 6.0 * q4 * q - 6.0 * q4) * f])
        })
    }
}

/// Projects an ambient scalar jet to intrinsic frame derivatives.
pub fn project_scalar(m: Manifold, p: &ManifoldPoint, j: &ScalarJet) -> FrameScalarJet {
    let e = m.frame(p);
    let n = m.normal(p);
    let ndf = dot3(&n, &j.grad);
    let mut hess = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            hess[a][b] = crate::linalg::bilinear3(&e[a], &j.hess, &e[b]) - if a == b { ndf } else { 0.0 };
        }
    }
    FrameScalarJet { value: j.value, grad: [dot3(&e[0], &j.grad), dot3(&e[1], &j.grad)], hess }
}

/// Value and ambient derivatives up to second order of a vector-valued function.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VectorJet {
    pub value: Vec3,
    /// `d1[i][j] = ∂_j A_i`.
    pub d1: Mat3,
    /// `d2[i][j][k] = ∂_j ∂_k A_i`.
    pub d2: Tensor3,
}

impl VectorJet {
    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for i in 0..3 {
            r.value[i] += o.value[i];
            for j in 0..3 {
                r.d1[i][j] += o.d1[i][j];
                for k in 0..3 {
                    r.d2[i][j][k] += o.d2[i][j][k];
                }
            }
        }
        r
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        for i in 0..3 {
            r.value[i] *= s;
            for j in 0..3 {
                r.d1[i][j] *= s;
                for k in 0..3 {
                    r.d2[i][j][k] *= s;
                }
            }
        }
        r
    }

    /// Product with a scalar jet.
    pub fn times(&self, h: &ScalarJet) -> Self {
        let a = self;
        let mut r = VectorJet::default();
        for i in 0..3 {
            r.value[i] = h.value * a.value[i];
            for j in 0..3 {
                r.d1[i][j] = a.value[i] * h.grad[j] + h.value * a.d1[i][j];
                for k in 0..3 {
                    r.d2[i][j][k] = a.value[i] * h.hess[j][k]
                        + a.d1[i][j] * h.grad[k]
                        + a.d1[i][k] * h.grad[j]
                        + h.value * a.d2[i][j][k];
                }
            }
        }
        r
    }
}

/// Intrinsic covariant derivatives of a 1-form in the orthonormal frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameOneFormJet {
    pub value: Vec2,
    /// `d1[a][b] = ⟨∇_{e_a} ν, e_b⟩`.
    pub d1: Mat2,
    /// `d2[c][a][b] = ⟨∇²_{e_c, e_a} ν, e_b⟩`.
    pub d2: FrameTensor3,
}

impl FrameOneFormJet {
    pub fn divergence(&self) -> f64 {
        self.d1[0][0] + self.d1[1][1]
    }

    /// Scalar component of the exterior derivative on `e1 ∧ e2`.
    pub fn curl(&self) -> f64 {
        self.d1[0][1] - self.d1[1][0]
    }

    /// Rough (connection) Laplacian `tr ∇²ν`.
    pub fn rough_laplacian(&self) -> Vec2 {
        [self.d2[0][0][0] + self.d2[1][1][0], self.d2[0][0][1] + self.d2[1][1][1]]
    }
}

/// Projects an ambient vector jet `A` to the covariant jet of `ν = P A`.
pub fn project_one_form(m: Manifold, p: &ManifoldPoint, a: &VectorJet) -> FrameOneFormJet {
    let e = m.frame(p);
    let n = m.normal(p);
    let na = dot3(&n, &a.value);
    let da = |u: &Vec3| crate::linalg::mat3_vec(&a.d1, u);
    let da_e = [da(&e[0]), da(&e[1])];
    let da_n = da(&n);
    let n_da_e = [dot3(&n, &da_e[0]), dot3(&n, &da_e[1])];
    let e_a = [dot3(&e[0], &a.value), dot3(&e[1], &a.value)];
    // Derivative of the unit normal: the identity on the sphere, zero on the torus.
    let dn = match m {
        Manifold::UnitSphere => 1.0,
        Manifold::FlatTorus => 0.0,
    };

    let mut d1 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            d1[i][j] = dot3(&e[j], &da_e[i]) - if i == j { na } else { 0.0 };
        }
    }

    let mut d2 = [[[0.0; 2]; 2]; 2];
    for c in 0..2 {
        for i in 0..2 {
            for b in 0..2 {
                // e_b · D²A[e_c, e_i]
                let mut second = 0.0;
                for r in 0..3 {
                    let mut s = 0.0;
                    for j in 0..3 {
                        for k in 0..3 {
                            s += a.d2[r][j][k] * e[c][j] * e[i][k];
                        }
                    }
                    second += e[b][r] * s;
                }
                let mut v = second;
                if b == c {
                    v -= n_da_e[i];
                }
                if i == b {
                    v -= dn * e_a[c] + n_da_e[c];
                }
                if c == i {
                    v -= dot3(&e[b], &da_n);
                }
                d2[c][i][b] = v;
            }
        }
    }
    FrameOneFormJet { value: e_a, d1, d2 }
}

type VectorFn = dyn Fn(Manifold, &Vec3) -> VectorJet + Send + Sync;

/// Smooth 1-form (identified with a vector field) given by an ambient vector field.
#[derive(Clone)]
pub struct OneFormField {
    name: Arc<str>,
    jet: Arc<VectorFn>,
}

impl fmt::Debug for OneFormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OneFormField({})", self.name)
    }
}

impl OneFormField {
    pub fn new(name: impl Into<String>, jet: impl Fn(Manifold, &Vec3) -> VectorJet + Send + Sync + 'static) -> Self {
        Self { name: Arc::from(name.into()), jet: Arc::new(jet) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Projection of a constant ambient vector; covariantly constant on the torus.
    pub fn constant(c: Vec3) -> Self {
        Self::new(format!("const({},{},{})", c[0], c[1], c[2]), move |_, _| VectorJet { value: c, ..Default::default() })
    }

    /// Ambient components given by three scalar fields.
    pub fn from_components(f: [ScalarField; 3]) -> Self {
        let name = format!("({}, {}, {})", f[0].name(), f[1].name(), f[2].name());
        Self::new(name, move |_, y| {
            let mut r = VectorJet::default();
            for i in 0..3 {
                let j = f[i].ambient_jet(y);
                r.value[i] = j.value;
                r.d1[i] = j.grad;
                r.d2[i] = j.hess;
            }
            r
        })
    }

    /// Gradient `∇φ`.
    pub fn gradient(phi: &ScalarField) -> Self {
        let phi = phi.clone();
        Self::new(format!("grad({})", phi.name()), move |_, y| {
            let j = phi.ambient_jet(y);
            VectorJet { value: j.grad, d1: j.hess, d2: j.third }
        })
    }

    /// Gradient rotated by +90° in the oriented tangent plane (`J e1 = e2`).
    pub fn rotated_gradient(phi: &ScalarField) -> Self {
        let phi = phi.clone();
        Self::new(format!("rot({})", phi.name()), move |m, y| {
            let j = phi.ambient_jet(y);
            // A = c × ∇φ with c = y on the sphere and c = ẑ on the torus.
            let (c, dc) = match m {
                Manifold::UnitSphere => (*y, true),
                Manifold::FlatTorus => ([0.0, 0.0, 1.0], false),
            };
            let mut r = VectorJet::default();
            for i in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        let eps = levi_civita(i, a, b);
                        if eps == 0.0 {
                            continue;
                        }
                        r.value[i] += eps * c[a] * j.grad[b];
                        for l in 0..3 {
                            r.d1[i][l] += eps * c[a] * j.hess[b][l];
                            if dc && a == l {
                                r.d1[i][l] += eps * j.grad[b];
                            }
                            for q in 0..3 {
                                r.d2[i][l][q] += eps * c[a] * j.third[b][l][q];
                                if dc && a == l {
                                    r.d2[i][l][q] += eps * j.hess[b][q];
                                }
                                if dc && a == q {
                                    r.d2[i][l][q] += eps * j.hess[b][l];
                                }
                            }
                        }
                    }
                }
            }
            r
        })
    }

    pub fn scaled_by(&self, h: &ScalarField) -> Self {
        let (a, h) = (self.jet.clone(), h.clone());
        Self::new(format!("{}*{}", h.name(), self.name), move |m, y| a(m, y).times(&h.ambient_jet(y)))
    }

    pub fn scale(&self, s: f64) -> Self {
        let a = self.jet.clone();
        Self::new(format!("{s}*{}", self.name), move |m, y| a(m, y).scale(s))
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b) = (self.jet.clone(), o.jet.clone());
        Self::new(format!("({} + {})", self.name, o.name), move |m, y| a(m, y).add(&b(m, y)))
    }

    pub fn ambient_jet(&self, m: Manifold, p: &ManifoldPoint) -> VectorJet {
        (self.jet)(m, &m.embed(p))
    }

    pub fn frame_jet(&self, m: Manifold, p: &ManifoldPoint) -> FrameOneFormJet {
        project_one_form(m, p, &self.ambient_jet(m, p))
    }

    pub fn value(&self, m: Manifold, p: &ManifoldPoint) -> Vec2 {
        let a = self.ambient_jet(m, p);
        m.to_frame(p, &a.value)
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}
