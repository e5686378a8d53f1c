//! Symmetric traceless 3×3 tensors.
//!
//! A Q-tensor lives in the five-dimensional space of symmetric traceless
//! matrices. It is stored through its coordinates in a fixed orthonormal
//! basis of that space, so that the Frobenius norm of the matrix equals the
//! Euclidean norm of the coordinate vector.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
// 1/sqrt(6)
const FRAC_1_SQRT_6: f64 = 0.408_248_290_463_863_016_4_f64;

/// Orthonormal basis of the symmetric traceless matrices under `<A, B> = tr(AᵀB)`.
pub const BASIS: [Mat3; 5] = [
    [
        [FRAC_1_SQRT_2, 0.0, 0.0],
        [0.0, -FRAC_1_SQRT_2, 0.0],
        [0.0, 0.0, 0.0],
    ],
    [
        [FRAC_1_SQRT_6, 0.0, 0.0],
        [0.0, FRAC_1_SQRT_6, 0.0],
        [0.0, 0.0, -2.0 * FRAC_1_SQRT_6],
    ],
    [
        [0.0, FRAC_1_SQRT_2, 0.0],
        [FRAC_1_SQRT_2, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, FRAC_1_SQRT_2],
        [0.0, 0.0, 0.0],
        [FRAC_1_SQRT_2, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, FRAC_1_SQRT_2],
        [0.0, FRAC_1_SQRT_2, 0.0],
    ],
];

/// Lower edge of the physical eigenvalue window.
pub const LAMBDA_LOWER: f64 = -1.0 / 3.0;
/// Upper edge of the physical eigenvalue window.
pub const LAMBDA_UPPER: f64 = 2.0 / 3.0;

/// A symmetric traceless tensor given by its five basis coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QTensor(pub [f64; 5]);

impl QTensor {
    pub const ZERO: QTensor = QTensor([0.0; 5]);

    pub fn new(components: [f64; 5]) -> Self {
        QTensor(components)
    }

    pub fn components(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn to_matrix(&self) -> Mat3 {
        to_matrix(&self.0)
    }

    /// Projects an arbitrary 3×3 matrix onto its symmetric traceless part.
    pub fn from_matrix(a: &Mat3) -> Self {
        QTensor(from_matrix(a))
    }

    pub fn dot(&self, other: &QTensor) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn eigen(&self) -> SpectralDecomp {
        eigen_symmetric(&self.to_matrix())
    }

    pub fn margin(&self) -> f64 {
        self.eigen().margin()
    }

    /// Conjugation `R Q Rᵀ`.
    pub fn rotated(&self, r: &Mat3) -> QTensor {
        let q = self.to_matrix();
        QTensor::from_matrix(&mat_mul(&mat_mul(r, &q), &transpose(r)))
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(mut self, rhs: QTensor) -> QTensor {
        self += rhs;
        self
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(mut self, rhs: QTensor) -> QTensor {
        self -= rhs;
        self
    }
}

impl SubAssign for QTensor {
    fn sub_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(self, rhs: f64) -> QTensor {
        QTensor(self.0.map(|a| a * rhs))
    }
}

impl Mul<QTensor> for f64 {
    type Output = QTensor;
    fn mul(self, rhs: QTensor) -> QTensor {
        rhs * self
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        self * -1.0
    }
}

/// `Q(v) = Σ vⱼ Eⱼ`.
pub fn to_matrix(v: &[f64; 5]) -> Mat3 {
    let a = FRAC_1_SQRT_2;
    let b = FRAC_1_SQRT_6;
    [
        [a * v[0] + b * v[1], a * v[2], a * v[3]],
        [a * v[2], -a * v[0] + b * v[1], a * v[4]],
        [a * v[3], a * v[4], -2.0 * b * v[1]],
    ]
}

/// Coordinates of `[A]^st = (A + Aᵀ)/2 − (tr A / 3) I`.
pub fn from_matrix(m: &Mat3) -> [f64; 5] {
    let a = FRAC_1_SQRT_2;
    let b = FRAC_1_SQRT_6;
    // the trace part is orthogonal to every basis element, so only the
    // symmetric part needs forming
    [
        a * (m[0][0] - m[1][1]),
        b * (m[0][0] + m[1][1] - 2.0 * m[2][2]),
        a * (m[0][1] + m[1][0]),
        a * (m[0][2] + m[2][0]),
        a * (m[1][2] + m[2][1]),
    ]
}

/// Symmetric traceless part of a matrix.
pub fn sym_traceless(m: &Mat3) -> Mat3 {
    let tr = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
        out[i][i] -= tr;
    }
    out
}

/// Uniaxial tensor `s (n ⊗ n − I/3)`.
pub fn uniaxial(s: f64, n: [f64; 3]) -> Result<QTensor> {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !((len - 1.0).abs() <= 1e-12) {
        return Err(Error::Input(format!("director must be a unit vector, |n| = {len}")));
    }
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = s * n[i] * n[j];
        }
        m[i][i] -= s / 3.0;
    }
    Ok(QTensor::from_matrix(&m))
}

/// Eigenvalues (ascending) and a right-handed orthonormal eigenframe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDecomp {
    pub eigenvalues: [f64; 3],
    /// Columns are eigenvectors.
    pub frame: Mat3,
}

impl SpectralDecomp {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[2]
    }

    pub fn margin(&self) -> f64 {
        margin_of(&self.eigenvalues)
    }

    /// `frame · diag(values) · frameᵀ`.
    pub fn compose(&self, values: &[f64; 3]) -> Mat3 {
        let r = &self.frame;
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = (0..3).map(|k| r[i][k] * values[k] * r[j][k]).sum();
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Mat3 {
        self.compose(&self.eigenvalues)
    }
}

/// Signed distance of sorted eigenvalues from the edges of `(−1/3, 2/3)`.
pub fn margin_of(sorted: &[f64; 3]) -> f64 {
    (sorted[0] - LAMBDA_LOWER).min(LAMBDA_UPPER - sorted[2])
}

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a symmetric 3×3 matrix.
///
/// Only the upper triangle is read. Rotations are applied in the fixed
/// order (0,1), (0,2), (1,2) until the off-diagonal Frobenius norm drops
/// below `1e-14` relative to the matrix norm.
pub fn eigen_symmetric(m: &Mat3) -> SpectralDecomp {
    let mut a = *m;
    for i in 0..3 {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    let mut v = IDENTITY;
    let scale = frobenius(&a).max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = (2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2])).sqrt();
        if off <= JACOBI_TOL * scale {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            // A ← Jᵀ A J with J the rotation in the (p, q) plane
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let diag = [a[0][0], a[1][1], a[2][2]];
    let mut order = [0usize, 1, 2];
    // stable sort keeps identical input producing identical output
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.map(|k| diag[k]);
    let mut frame = [[0.0; 3]; 3];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..3 {
            frame[row][col] = v[row][k];
        }
    }
    if det(&frame) < 0.0 {
        for row in frame.iter_mut() {
            row[2] = -row[2];
        }
    }
    SpectralDecomp { eigenvalues, frame }
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn mat_sub(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

/// Largest deviation of `RᵀR` from the identity.
pub fn orthogonality_defect(r: &Mat3) -> f64 {
    let rtr = mat_mul(&transpose(r), r);
    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((rtr[i][j] - IDENTITY[i][j]).abs());
        }
    }
    worst
}

/// Uniformly distributed rotation in SO(3), from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Mat3 {
    let (w, x, y, z) = loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-8 {
            break (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        }
    };
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Tensor drawn uniformly from the closure of the physical set with `margin ≥ floor`,
/// by rejection from a box containing it.
pub fn random_physical<R: Rng + ?Sized>(rng: &mut R, floor: f64) -> QTensor {
    // |Q|_F ≤ sqrt(2/3) on the closure, so every coordinate lies in this box
    let half = (2.0_f64 / 3.0).sqrt();
    loop {
        let q = QTensor(std::array::from_fn(|_| rng.gen_range(-half..=half)));
        if q.margin() >= floor {
            return q;
        }
    }
}
