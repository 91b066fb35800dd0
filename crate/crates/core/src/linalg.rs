//! Fixed-size vector helpers for two- and three-dimensional frames.

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];
pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn dot2(a: &Vec2, b: &Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn norm2(a: &Vec2) -> f64 {
    dot2(a, a).sqrt()
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn axpy3(alpha: f64, x: &Vec3, y: &Vec3) -> Vec3 {
    [alpha * x[0] + y[0], alpha * x[1] + y[1], alpha * x[2] + y[2]]
}

#[inline]
pub fn scale3(alpha: f64, x: &Vec3) -> Vec3 {
    [alpha * x[0], alpha * x[1], alpha * x[2]]
}

#[inline]
pub fn mat3_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}

/// `uᵀ M v`.
#[inline]
pub fn bilinear3(u: &Vec3, m: &Mat3, v: &Vec3) -> f64 {
    dot3(u, &mat3_vec(m, v))
}

#[inline]
pub fn mat2_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[inline]
pub fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const ZERO2: Mat2 = [[0.0, 0.0], [0.0, 0.0]];

/// Largest eigenvalue of a symmetric 2×2 matrix.
pub fn sym2_top_eigenvalue(m: &Mat2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let off = 0.5 * (m[0][1] + m[1][0]);
    0.5 * tr + (half_diff * half_diff + off * off).sqrt()
}

/// Operator (spectral) norm of a general 2×2 matrix.
pub fn mat2_operator_norm(m: &Mat2) -> f64 {
    let mtm = mat2_mul(&mat2_transpose(m), m);
    sym2_top_eigenvalue(&mtm).max(0.0).sqrt()
}
