//! Elastic energy density built from the five frame-indifferent invariants.
//!
//! Gradients are indexed `D[i][j][k] = ∂ₖ Q_ij`. On the planar domains used
//! here the order parameter depends on `(x₁, x₂)` only, so the `x₃` slice
//! vanishes and a gradient is a pair of symmetric traceless slices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qtensor::{det, mat_mul, orthogonality_defect, random_physical, Mat3, QTensor};

/// Full three-index gradient, `D[i][j][k] = ∂ₖ Q_ij`.
pub type Gradient3 = [[[f64; 3]; 3]; 3];

/// In-plane gradient `(∂₁Q, ∂₂Q)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradientPair {
    pub dx: QTensor,
    pub dy: QTensor,
}

impl GradientPair {
    pub const ZERO: GradientPair = GradientPair {
        dx: QTensor::ZERO,
        dy: QTensor::ZERO,
    };

    pub fn new(dx: QTensor, dy: QTensor) -> Self {
        GradientPair { dx, dy }
    }

    /// `|D|²`, summed over both slices.
    pub fn norm_sq(&self) -> f64 {
        self.dx.norm_sq() + self.dy.norm_sq()
    }

    pub fn scaled(&self, c: f64) -> GradientPair {
        GradientPair {
            dx: self.dx * c,
            dy: self.dy * c,
        }
    }

    /// Embeds the pair as a three-index gradient with zero `x₃` slice.
    pub fn to_general(&self) -> Gradient3 {
        let a = self.dx.to_matrix();
        let b = self.dy.to_matrix();
        let mut d = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                d[i][j][0] = a[i][j];
                d[i][j][1] = b[i][j];
            }
        }
        d
    }
}

/// Coefficients `L₁ … L₅` of `G = Σ Lᵢ Iᵢ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElasticConstants(pub [f64; 5]);

impl ElasticConstants {
    pub fn new(l1: f64, l2: f64, l3: f64, l4: f64, l5: f64) -> Self {
        ElasticConstants([l1, l2, l3, l4, l5])
    }

    /// One-constant approximation `G = L₁ |DQ|²`.
    pub fn one_constant(l1: f64) -> Self {
        ElasticConstants([l1, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn l(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    /// `L₁ − L₄/3` for `L₄ ≥ 0`, `L₁ + 2L₄/3` otherwise.
    pub fn lprime1(&self) -> f64 {
        let [l1, _, _, l4, _] = self.0;
        if l4 >= 0.0 {
            l1 - l4 / 3.0
        } else {
            l1 + 2.0 * l4 / 3.0
        }
    }

    /// Left-hand sides of the three sufficient conditions for coercivity.
    pub fn coercivity_inequalities(&self) -> [f64; 3] {
        let lp = self.lprime1();
        let l2 = self.0[1];
        let l3 = self.0[2];
        [
            lp + 5.0 / 3.0 * l2 + l3 / 6.0,
            lp - 0.5 * l3,
            lp + l3,
        ]
    }
}

/// `(I₁, …, I₅)` for an in-plane gradient.
pub fn invariants(q: &QTensor, d: &GradientPair) -> [f64; 5] {
    let qm = q.to_matrix();
    let a = d.dx.to_matrix();
    let b = d.dy.to_matrix();
    let aa = frob_dot(&a, &a);
    let bb = frob_dot(&b, &b);
    let ab = frob_dot(&a, &b);

    let mut i2 = 0.0;
    let mut i3 = 0.0;
    let mut i5 = 0.0;
    for i in 0..3 {
        let c = a[i][0] + b[i][1];
        i2 += c * c;
        i3 += a[i][0] * a[i][0] + 2.0 * a[i][1] * b[i][0] + b[i][1] * b[i][1];
        i5 += qm[2][i] * a[1][i] - qm[1][i] * a[2][i] + qm[0][i] * b[2][i] - qm[2][i] * b[0][i];
    }
    let i4 = qm[0][0] * aa + 2.0 * qm[0][1] * ab + qm[1][1] * bb;
    [aa + bb, i2, i3, i4, i5]
}

/// `(I₁, …, I₅)` for an arbitrary three-index gradient.
pub fn invariants_general(q: &Mat3, d: &Gradient3) -> [f64; 5] {
    let mut out = [0.0; 5];
    let mut div = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            div[i] += d[i][j][j];
        }
    }
    out[1] = div.iter().map(|x| x * x).sum();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[0] += d[i][j][k] * d[i][j][k];
                out[2] += d[i][k][j] * d[i][j][k];
                let mut qd = 0.0;
                for l in 0..3 {
                    qd += q[l][k] * d[i][j][l];
                }
                out[3] += qd * d[i][j][k];
            }
        }
    }
    // ε_{ljk} Q_{li} D_{kij} over the six nonzero permutations
    const PERMS: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
        ([1, 0, 2], -1.0),
    ];
    for ([l, j, k], sign) in PERMS {
        for i in 0..3 {
            out[4] += sign * q[l][i] * d[k][i][j];
        }
    }
    out
}

pub fn density(q: &QTensor, d: &GradientPair, l: &ElasticConstants) -> f64 {
    let inv = invariants(q, d);
    inv.iter().zip(l.0.iter()).map(|(i, c)| i * c).sum()
}

/// Partial derivatives of the elastic density, projected onto symmetric
/// traceless tensors (equivalently, gradients in the five coordinates).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DensityGrad {
    pub d_q: QTensor,
    pub d_dx: QTensor,
    pub d_dy: QTensor,
}

pub fn density_grad(q: &QTensor, d: &GradientPair, l: &ElasticConstants) -> DensityGrad {
    let [l1, l2, l3, l4, l5] = l.0;
    let qm = q.to_matrix();
    let a = d.dx.to_matrix();
    let b = d.dy.to_matrix();

    let mut ga = [[0.0; 3]; 3];
    let mut gb = [[0.0; 3]; 3];
    let mut gq = [[0.0; 3]; 3];

    for i in 0..3 {
        let c = a[i][0] + b[i][1];
        for j in 0..3 {
            ga[i][j] += 2.0 * l1 * a[i][j] + 2.0 * l4 * (qm[0][0] * a[i][j] + qm[0][1] * b[i][j]);
            gb[i][j] += 2.0 * l1 * b[i][j] + 2.0 * l4 * (qm[1][0] * a[i][j] + qm[1][1] * b[i][j]);
        }
        // I₂
        ga[i][0] += 2.0 * l2 * c;
        gb[i][1] += 2.0 * l2 * c;
        // I₃: ∂/∂D_{abc} = 2 D_{acb}, zero when b is the x₃ index
        ga[i][0] += 2.0 * l3 * a[i][0];
        ga[i][1] += 2.0 * l3 * b[i][0];
        gb[i][0] += 2.0 * l3 * a[i][1];
        gb[i][1] += 2.0 * l3 * b[i][1];
        // I₅
        ga[1][i] += l5 * qm[2][i];
        ga[2][i] -= l5 * qm[1][i];
        gb[2][i] += l5 * qm[0][i];
        gb[0][i] -= l5 * qm[2][i];
        gq[2][i] += l5 * (a[1][i] - b[0][i]);
        gq[1][i] -= l5 * a[2][i];
        gq[0][i] += l5 * b[2][i];
    }
    let aa = frob_dot(&a, &a);
    let bb = frob_dot(&b, &b);
    let ab = frob_dot(&a, &b);
    gq[0][0] += l4 * aa;
    gq[0][1] += l4 * ab;
    gq[1][0] += l4 * ab;
    gq[1][1] += l4 * bb;

    DensityGrad {
        d_q: QTensor::from_matrix(&gq),
        d_dx: QTensor::from_matrix(&ga),
        d_dy: QTensor::from_matrix(&gb),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityReport {
    pub lprime1: f64,
    pub inequality_values: [f64; 3],
    pub satisfied: bool,
    /// Smallest sampled `Σ₁⁴ Lᵢ Iᵢ(Q, D)` over unit `|D|`, if sampling was requested.
    pub empirical_c0: Option<f64>,
}

/// Checks the coercivity inequalities and estimates `c₀` by sampling.
///
/// `Q` is drawn uniformly from the closure of the physical set and `D`
/// uniformly from the unit sphere of in-plane gradient pairs. `I₅` is
/// linear in `D` and takes no part in the quadratic bound.
pub fn coercivity(l: &ElasticConstants, samples: usize, seed: u64) -> CoercivityReport {
    let values = l.coercivity_inequalities();
    let satisfied = values.iter().all(|v| *v > 0.0);
    let empirical_c0 = (samples > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let quad = [l.0[0], l.0[1], l.0[2], l.0[3]];
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let q = random_physical(&mut rng, 0.0);
            let d = random_unit_gradient(&mut rng);
            let inv = invariants(&q, &d);
            let g: f64 = (0..4).map(|k| quad[k] * inv[k]).sum();
            worst = worst.min(g);
        }
        worst
    });
    CoercivityReport {
        lprime1: l.lprime1(),
        inequality_values: values,
        satisfied,
        empirical_c0,
    }
}

/// Uniform sample from the unit sphere of gradient pairs (ten dimensions).
pub fn random_unit_gradient<R: Rng + ?Sized>(rng: &mut R) -> GradientPair {
    loop {
        let x: [f64; 10] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            let dx = QTensor(std::array::from_fn(|k| x[k] / n));
            let dy = QTensor(std::array::from_fn(|k| x[k + 5] / n));
            return GradientPair { dx, dy };
        }
    }
}

/// Invariants before and after the transformation `Q → RQRᵀ`,
/// `D_{ijk} → R_{ia} R_{jb} R_{kc} D_{abc}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    pub before: [f64; 5],
    pub after: [f64; 5],
    pub det: f64,
    /// `I₁…I₄` unchanged; `I₅` multiplied by `det R`.
    pub invariant: [bool; 5],
}

impl InvarianceReport {
    pub fn all(&self) -> bool {
        self.invariant.iter().all(|b| *b)
    }
}

pub const INVARIANCE_TOL: f64 = 1e-12;

pub fn invariance_suite(q: &QTensor, d: &GradientPair, r: &Mat3) -> Result<InvarianceReport> {
    let defect = orthogonality_defect(r);
    if !(defect <= 1e-12) {
        return Err(Error::Input(format!(
            "transformation is not orthogonal (|RᵀR − I| = {defect:.3e})"
        )));
    }
    let qm = q.to_matrix();
    let dg = d.to_general();
    let before = invariants_general(&qm, &dg);

    let rq = mat_mul(&mat_mul(r, &qm), &crate::qtensor::transpose(r));
    let rd = transform_gradient(&dg, r);
    let after = invariants_general(&rq, &rd);
    let det = det(r);

    let invariant = std::array::from_fn(|k| {
        let expected = if k == 4 { det.signum() * before[k] } else { before[k] };
        (after[k] - expected).abs() <= INVARIANCE_TOL * expected.abs().max(1.0)
    });
    Ok(InvarianceReport {
        before,
        after,
        det,
        invariant,
    })
}

pub fn transform_gradient(d: &Gradient3, r: &Mat3) -> Gradient3 {
    // one index at a time: 3 × 81 multiplies instead of 729
    let mut t1 = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                t1[i][b][c] = (0..3).map(|a| r[i][a] * d[a][b][c]).sum();
            }
        }
    }
    let mut t2 = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for c in 0..3 {
                t2[i][j][c] = (0..3).map(|b| r[j][b] * t1[i][b][c]).sum();
            }
        }
    }
    let mut out = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j][k] = (0..3).map(|c| r[k][c] * t2[i][j][c]).sum();
            }
        }
    }
    out
}

fn frob_dot(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}
