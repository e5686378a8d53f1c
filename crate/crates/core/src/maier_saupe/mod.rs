//! The singular Maier–Saupe bulk potential.
//!
//! `f_ms(Q)` is the least entropy `∫ ρ log ρ dp` over orientation densities
//! on the sphere whose normalized second moments equal `Q`. The minimizing
//! density belongs to the exponential family `ρ ∝ exp(pᵀΛp)`, so the
//! potential is evaluated through its dual: find the multipliers `Λ` whose
//! density reproduces the eigenvalues of `Q`, then
//! `f_ms = Σ λᵢ (μᵢ + 1/3) − log Z(Λ)`.
//!
//! All integrals over the sphere use a [`SphereQuadrature`]; the potential is
//! exact for that discrete measure.

mod quadrature;

use std::f64::consts::PI;

pub use quadrature::{gauss_legendre, SphereQuadrature, MIN_ORDER};

use crate::error::{Error, Result};
use crate::qtensor::{margin_of, Mat3, QTensor, IDENTITY};

pub const DEFAULT_QUAD_ORDER: usize = 32;
/// Below this physicality margin the potential is reported as +∞.
pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-6;

const NEWTON_MAX_ITERS: usize = 100;
const NEWTON_TOL: f64 = 1e-13;
// accepted only when damping can no longer reduce the residual
const NEWTON_LOOSE_TOL: f64 = 1e-11;
const MAX_HALVINGS: usize = 60;

/// Orthonormal basis of the gauge plane `Σ λᵢ = 0`.
const GAUGE_BASIS: [[f64; 3]; 2] = [
    [
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
        0.0,
    ],
    [
        0.408_248_290_463_863_016_4,
        0.408_248_290_463_863_016_4,
        -0.816_496_580_927_726_032_7,
    ],
];

/// Log partition function with the first two moments of `p ↦ (p₁², p₂², p₃²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPartition {
    pub log_z: f64,
    pub moments: [f64; 3],
    pub covariance: [[f64; 3]; 3],
}

/// `log ∫ exp(Σ λᵢ pᵢ²) dp` and the moments of the induced density.
///
/// The largest multiplier is subtracted before exponentiating, so every
/// exponent is non-positive.
pub fn log_partition(lambda: &[f64; 3], quad: &SphereQuadrature) -> LogPartition {
    let (squares, weights) = quad.folded();
    let shift = lambda[0].max(lambda[1]).max(lambda[2]);

    let mut z = 0.0;
    let mut first = [0.0; 3];
    let mut factors = Vec::with_capacity(squares.len());
    for (s, w) in squares.iter().zip(weights) {
        let e = w * (lambda[0] * s[0] + lambda[1] * s[1] + lambda[2] * s[2] - shift).exp();
        factors.push(e);
        z += e;
        for i in 0..3 {
            first[i] += e * s[i];
        }
    }
    let moments = first.map(|m| m / z);

    let mut covariance = [[0.0; 3]; 3];
    for (s, e) in squares.iter().zip(&factors) {
        let d = [s[0] - moments[0], s[1] - moments[1], s[2] - moments[2]];
        for i in 0..3 {
            for j in i..3 {
                covariance[i][j] += e * d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            covariance[i][j] /= z;
            covariance[j][i] = covariance[i][j];
        }
    }

    LogPartition {
        log_z: (4.0 * PI).ln() + z.ln() + shift,
        moments,
        covariance,
    }
}

/// Exponential-family multipliers realizing a prescribed set of eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multipliers {
    /// Gauge-fixed to `Σ λᵢ = 0`, ordered like the eigenvalues they match.
    pub lambda: [f64; 3],
    /// Eigenframe of the target tensor (identity for a bare eigenvalue solve).
    pub frame: Mat3,
    pub log_z: f64,
    pub iterations: usize,
    /// `max |⟨pᵢ²⟩ − (μᵢ + 1/3)|` at the returned multipliers.
    pub residual: f64,
}

impl Multipliers {
    /// Density `ρ(p) = exp(Σ λᵢ (frameᵀp)ᵢ²) / Z`.
    pub fn density(&self, p: &[f64; 3]) -> f64 {
        let r = &self.frame;
        let mut expo = 0.0;
        for k in 0..3 {
            let c = r[0][k] * p[0] + r[1][k] * p[1] + r[2][k] * p[2];
            expo += self.lambda[k] * c * c;
        }
        (expo - self.log_z).exp()
    }
}

/// Value and gradient of `f_ms` at one tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialValue {
    pub f_ms: f64,
    /// `f_ms + log 4π`, the entropy relative to the isotropic state.
    pub excess: f64,
    pub gradient: QTensor,
    pub multipliers: Multipliers,
}

/// Maier–Saupe potential on a fixed quadrature.
#[derive(Clone, Debug)]
pub struct MaierSaupe {
    quad: SphereQuadrature,
    floor: f64,
}

impl MaierSaupe {
    pub fn new(order: usize) -> Result<Self> {
        Ok(Self::from_quadrature(SphereQuadrature::new(order)?))
    }

    pub fn from_quadrature(quad: SphereQuadrature) -> Self {
        MaierSaupe {
            quad,
            floor: DEFAULT_MARGIN_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn quadrature(&self) -> &SphereQuadrature {
        &self.quad
    }

    /// Multipliers whose density has `⟨pᵢ²⟩ = μᵢ + 1/3`, starting from `λ = 0`.
    pub fn solve_multipliers(&self, mu: &[f64; 3]) -> Result<Multipliers> {
        self.solve_multipliers_from(mu, [0.0; 3])
    }

    /// Damped Newton on the two-dimensional gauge-reduced dual, started from `start`.
    pub fn solve_multipliers_from(&self, mu: &[f64; 3], start: [f64; 3]) -> Result<Multipliers> {
        let mut sorted = *mu;
        sorted.sort_by(f64::total_cmp);
        let margin = margin_of(&sorted);
        if !(margin >= self.floor) {
            return Err(Error::NearBoundary {
                margin,
                floor: self.floor,
            });
        }
        let target = mu.map(|m| m + 1.0 / 3.0);

        let mut lambda = gauge_fix(start);
        if !lambda.iter().all(|l| l.is_finite()) {
            lambda = [0.0; 3];
        }
        let mut lp = log_partition(&lambda, &self.quad);
        let mut resid = sub3(&lp.moments, &target);

        for iter in 0..=NEWTON_MAX_ITERS {
            let res_inf = inf_norm(&resid);
            if res_inf <= NEWTON_TOL {
                return Ok(self.finish(lambda, &lp, iter, res_inf));
            }
            if iter == NEWTON_MAX_ITERS {
                break;
            }

            let g = [dot3(&GAUGE_BASIS[0], &resid), dot3(&GAUGE_BASIS[1], &resid)];
            let cb = [
                mat_vec(&lp.covariance, &GAUGE_BASIS[0]),
                mat_vec(&lp.covariance, &GAUGE_BASIS[1]),
            ];
            let h00 = dot3(&GAUGE_BASIS[0], &cb[0]);
            let h01 = dot3(&GAUGE_BASIS[0], &cb[1]);
            let h11 = dot3(&GAUGE_BASIS[1], &cb[1]);
            let det = h00 * h11 - h01 * h01;
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::Convergence {
                    iterations: iter,
                    residual: res_inf,
                    target,
                });
            }
            let eta = [
                -(h11 * g[0] - h01 * g[1]) / det,
                -(-h01 * g[0] + h00 * g[1]) / det,
            ];
            let step: [f64; 3] =
                std::array::from_fn(|i| eta[0] * GAUGE_BASIS[0][i] + eta[1] * GAUGE_BASIS[1][i]);

            let res_norm = norm3(&resid);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let trial: [f64; 3] = std::array::from_fn(|i| lambda[i] + alpha * step[i]);
                let trial_lp = log_partition(&trial, &self.quad);
                let trial_res = sub3(&trial_lp.moments, &target);
                if trial_lp.log_z.is_finite() && norm3(&trial_res) < res_norm {
                    lambda = trial;
                    lp = trial_lp;
                    resid = trial_res;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                if res_inf <= NEWTON_LOOSE_TOL {
                    return Ok(self.finish(lambda, &lp, iter, res_inf));
                }
                return Err(Error::Convergence {
                    iterations: iter,
                    residual: res_inf,
                    target,
                });
            }
        }
        Err(Error::Convergence {
            iterations: NEWTON_MAX_ITERS,
            residual: inf_norm(&resid),
            target,
        })
    }

    fn finish(&self, lambda: [f64; 3], lp: &LogPartition, iterations: usize, residual: f64) -> Multipliers {
        Multipliers {
            lambda,
            frame: IDENTITY,
            log_z: lp.log_z,
            iterations,
            residual,
        }
    }

    /// Value and gradient of `f_ms`, optionally warm-started from earlier multipliers.
    pub fn evaluate(&self, q: &QTensor, warm: Option<[f64; 3]>) -> Result<PotentialValue> {
        let eig = q.eigen();
        let margin = eig.margin();
        if !(margin >= self.floor) {
            return Err(Error::NearBoundary {
                margin,
                floor: self.floor,
            });
        }
        let mut mult = self.solve_multipliers_from(&eig.eigenvalues, warm.unwrap_or([0.0; 3]))?;
        mult.frame = eig.frame;
        let lambda = mult.lambda;
        let mu = eig.eigenvalues;
        let linear: f64 = (0..3).map(|i| lambda[i] * (mu[i] + 1.0 / 3.0)).sum();
        let excess = linear - (mult.log_z - (4.0 * PI).ln());
        let f_ms = linear - mult.log_z;
        // envelope theorem: ∂f_ms/∂μᵢ = λᵢ, carried back by the eigenframe
        let gradient = QTensor::from_matrix(&eig.compose(&lambda));
        Ok(PotentialValue {
            f_ms,
            excess,
            gradient,
            multipliers: mult,
        })
    }

    pub fn f_ms(&self, q: &QTensor) -> Result<f64> {
        Ok(self.evaluate(q, None)?.f_ms)
    }

    pub fn grad_f_ms(&self, q: &QTensor) -> Result<QTensor> {
        Ok(self.evaluate(q, None)?.gradient)
    }
}

/// Temperature, quadratic coefficient and quadrature order of `ψ_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BulkParams {
    pub temperature: f64,
    pub kappa: f64,
    pub quad_order: usize,
}

impl BulkParams {
    pub fn new(temperature: f64, kappa: f64) -> Self {
        BulkParams {
            temperature,
            kappa,
            quad_order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Input(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Input(format!("kappa must be non-negative, got {}", self.kappa)));
        }
        if self.quad_order < MIN_ORDER {
            return Err(Error::Input(format!(
                "quad_order must be at least {MIN_ORDER}, got {}",
                self.quad_order
            )));
        }
        Ok(())
    }

    /// `M` such that `D²ψ_b ≥ −M I`; `ψ_b + (M/2)|Q|²` is convex.
    pub fn semiconvexity_constant(&self) -> f64 {
        2.0 * self.kappa
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BulkValue {
    pub f_ms: f64,
    pub excess: f64,
    pub psi_b: f64,
    pub gradient: QTensor,
    pub lambda: [f64; 3],
}

/// `ψ_b(Q) = T f_ms(Q) − κ |Q|²`.
#[derive(Clone, Debug)]
pub struct BulkPotential {
    params: BulkParams,
    ms: MaierSaupe,
}

impl BulkPotential {
    pub fn new(params: BulkParams) -> Result<Self> {
        params.validate()?;
        Ok(BulkPotential {
            params,
            ms: MaierSaupe::new(params.quad_order)?,
        })
    }

    pub fn params(&self) -> &BulkParams {
        &self.params
    }

    pub fn maier_saupe(&self) -> &MaierSaupe {
        &self.ms
    }

    pub fn evaluate(&self, q: &QTensor, warm: Option<[f64; 3]>) -> Result<BulkValue> {
        let v = self.ms.evaluate(q, warm)?;
        let BulkParams { temperature: t, kappa, .. } = self.params;
        Ok(BulkValue {
            f_ms: v.f_ms,
            excess: v.excess,
            psi_b: t * v.f_ms - kappa * q.norm_sq(),
            gradient: t * v.gradient - 2.0 * kappa * *q,
            lambda: v.multipliers.lambda,
        })
    }

    pub fn psi_b(&self, q: &QTensor) -> Result<f64> {
        Ok(self.evaluate(q, None)?.psi_b)
    }

    pub fn grad_psi_b(&self, q: &QTensor) -> Result<QTensor> {
        Ok(self.evaluate(q, None)?.gradient)
    }
}

fn gauge_fix(l: [f64; 3]) -> [f64; 3] {
    let mean = (l[0] + l[1] + l[2]) / 3.0;
    l.map(|x| x - mean)
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn inf_norm(a: &[f64; 3]) -> f64 {
    a[0].abs().max(a[1].abs()).max(a[2].abs())
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}
