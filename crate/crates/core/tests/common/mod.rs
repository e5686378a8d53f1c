//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver paths under test: invariants are
//! plain index loops, the entropy oracle works on the primal densities, and
//! the zonal oracle is a one-dimensional bisection.

#![allow(dead_code)]

use std::f64::consts::PI;

use ldg_core::maier_saupe::SphereQuadrature;
use ldg_core::qtensor::{Mat3, QTensor, BASIS};

pub type Tensor3 = [[[f64; 3]; 3]; 3];

/// `∫ 1`, `∫ pᵢ²`, `∫ p₁²p₂²` over the unit sphere.
pub const SPHERE_AREA: f64 = 4.0 * PI;
pub const SECOND_MOMENT: f64 = 4.0 * PI / 3.0;
pub const MIXED_FOURTH_MOMENT: f64 = 4.0 * PI / 15.0;

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    // (i − j)(j − k)(k − i)/2 on {0, 1, 2}
    let (i, j, k) = (i as i64, j as i64, k as i64);
    ((i - j) * (j - k) * (k - i)) as f64 / 2.0
}

/// `I₁…I₅` with every index summed explicitly; `d[i][j][k] = ∂ₖ Q_ij`.
pub fn naive_invariants(q: &Mat3, d: &Tensor3) -> [f64; 5] {
    let mut out = [0.0; 5];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[0] += d[i][j][k] * d[i][j][k];
                out[1] += d[i][j][j] * d[i][k][k];
                out[2] += d[i][k][j] * d[i][j][k];
                for l in 0..3 {
                    out[3] += q[l][k] * d[i][j][l] * d[i][j][k];
                    out[4] += levi_civita(l, j, k) * q[l][i] * d[k][i][j];
                }
            }
        }
    }
    out
}

/// Full tensor of a planar gradient: `d[i][j][0] = dx_ij`, `d[i][j][1] = dy_ij`.
pub fn planar_tensor(dx: &QTensor, dy: &QTensor) -> Tensor3 {
    let (mx, my) = (dx.to_matrix(), dy.to_matrix());
    let mut d = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j][0] = mx[i][j];
            d[i][j][1] = my[i][j];
        }
    }
    d
}

/// `Q ↦ RQRᵀ`, `D_ijk ↦ R_ia R_jb R_kc D_abc`.
pub fn transform(q: &Mat3, d: &Tensor3, r: &Mat3) -> (Mat3, Tensor3) {
    let mut qt = [[0.0; 3]; 3];
    let mut dt = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    qt[i][j] += r[i][a] * r[j][b] * q[a][b];
                }
            }
            for k in 0..3 {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            s += r[i][a] * r[j][b] * r[k][c] * d[a][b][c];
                        }
                    }
                }
                dt[i][j][k] = s;
            }
        }
    }
    (qt, dt)
}

/// Coordinates of `p pᵀ − I/3` in the orthonormal basis: `pᵀ E_k p`.
fn moment_coordinates(p: &[f64; 3]) -> [f64; 5] {
    std::array::from_fn(|k| {
        let e = &BASIS[k];
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += p[i] * e[i][j] * p[j];
            }
        }
        s
    })
}

/// Dense solve with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Minimum of `Σ wₐ ρₐ ln ρₐ` over node densities `ρ > 0` with
/// `Σ wₐ ρₐ = 1` and `Σ wₐ ρₐ (pₐpₐᵀ − I/3) = Q`, by infeasible-start
/// equality-constrained Newton on the primal variables.
pub fn primal_entropy(quad: &SphereQuadrature, q: &QTensor) -> f64 {
    let nodes = quad.nodes();
    let w = quad.weights();
    let n = nodes.len();
    // constraint rows: c₀ = 1, c₁..₅ = moment coordinates
    let c: Vec<[f64; 6]> = nodes
        .iter()
        .map(|p| {
            let m = moment_coordinates(p);
            [1.0, m[0], m[1], m[2], m[3], m[4]]
        })
        .collect();
    let b = [1.0, q.0[0], q.0[1], q.0[2], q.0[3], q.0[4]];

    let mut rho = vec![1.0 / SPHERE_AREA; n];
    let mut nu = [0.0; 6];
    let residual = |rho: &[f64], nu: &[f64; 6]| -> (Vec<f64>, [f64; 6], f64) {
        let mut rd = vec![0.0; n];
        let mut rp = [0.0; 6];
        for a in 0..n {
            let mut s = 0.0;
            for k in 0..6 {
                s += c[a][k] * nu[k];
                rp[k] += w[a] * rho[a] * c[a][k];
            }
            // per unit weight
            rd[a] = rho[a].ln() + 1.0 + s;
        }
        for k in 0..6 {
            rp[k] -= b[k];
        }
        let norm = (rd.iter().zip(w).map(|(r, w)| w * r * r).sum::<f64>() + rp.iter().map(|r| r * r).sum::<f64>()).sqrt();
        (rd, rp, norm)
    };

    for _ in 0..200 {
        let (rd, rp, norm) = residual(&rho, &nu);
        if norm < 1e-13 {
            break;
        }
        // H = diag(wₐ/ρₐ), A = [wₐ cₐₖ]; Schur complement S = A H⁻¹ Aᵀ
        let mut s = vec![vec![0.0; 6]; 6];
        let mut rhs = vec![0.0; 6];
        for a in 0..n {
            let hinv_w = rho[a] * w[a];
            for i in 0..6 {
                for j in 0..6 {
                    s[i][j] += hinv_w * c[a][i] * c[a][j];
                }
                // A H⁻¹ (w rd) = Σ wₐ c ρₐ rdₐ
                rhs[i] += hinv_w * c[a][i] * rd[a];
            }
        }
        for i in 0..6 {
            rhs[i] = rp[i] - rhs[i];
        }
        let dnu = solve_dense(s, rhs);
        let drho: Vec<f64> = (0..n)
            .map(|a| {
                let at: f64 = (0..6).map(|k| c[a][k] * dnu[k]).sum();
                -rho[a] * (rd[a] + at)
            })
            .collect();
        let mut t = 1.0;
        while (0..n).any(|a| rho[a] + t * drho[a] <= 0.0) {
            t *= 0.5;
        }
        loop {
            let trial: Vec<f64> = (0..n).map(|a| rho[a] + t * drho[a]).collect();
            let mut nu_t = nu;
            for k in 0..6 {
                nu_t[k] += t * dnu[k];
            }
            let (_, _, tn) = residual(&trial, &nu_t);
            if tn <= (1.0 - 0.01 * t) * norm || t < 1e-12 {
                rho = trial;
                nu = nu_t;
                break;
            }
            t *= 0.5;
        }
    }
    rho.iter().zip(w).map(|(r, w)| w * r * r.ln()).sum()
}

/// Entropy of the zonal density `∝ exp(3a x²)` (`x = cos θ`) whose
/// `⟨x²⟩` matches the uniaxial tensor `s(e₃⊗e₃ − I/3)`, by bisection on `a`
/// with a composite Simpson rule in `x`.
pub fn zonal_entropy(s: f64) -> f64 {
    let target = (2.0 * s + 1.0) / 3.0;
    let m = 20_000;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let h = 2.0 / m as f64;
        let mut acc = f(-1.0) + f(1.0);
        for i in 1..m {
            let x = -1.0 + h * i as f64;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * h / 3.0
    };
    // shift by the maximum exponent to keep the integrals finite
    let stats = |a: f64| {
        let shift = (3.0 * a).max(0.0);
        let z = simpson(&|x| (3.0 * a * x * x - shift).exp());
        let m2 = simpson(&|x| x * x * (3.0 * a * x * x - shift).exp()) / z;
        (m2, (2.0 * PI * z).ln() + shift)
    };
    let (mut lo, mut hi) = (-200.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stats(mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    let (m2, log_z) = stats(a);
    3.0 * a * m2 - log_z
}

/// Relative distance `|a − b| / max(1, |b|)`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
