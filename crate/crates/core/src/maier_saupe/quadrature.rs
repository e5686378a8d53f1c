//! Product quadrature on the unit sphere.
//!
//! Gauss–Legendre in `cos θ` times the uniform (midpoint) rule in `φ`. The
//! midpoint offset makes the azimuthal grid symmetric under `φ → −φ` and
//! `φ → π − φ`, so every integrand that depends only on the squared
//! components `pᵢ²` can be folded onto the first octant.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 8;

#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    order: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    /// `(p₁², p₂², p₃²)` of the octant-folded rule.
    folded_squares: Vec<[f64; 3]>,
    /// Folded weights normalized to sum to one.
    folded_weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Rule with `order` Gauss–Legendre points in `cos θ` and `2·order` azimuths.
    pub fn new(order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(Error::Input(format!(
                "quadrature order {order} below minimum {MIN_ORDER}"
            )));
        }
        let (xs, ws) = gauss_legendre(order);
        let n_phi = 2 * order;
        let dphi = 2.0 * PI / n_phi as f64;
        let phis: Vec<f64> = (0..n_phi).map(|j| (j as f64 + 0.5) * dphi).collect();

        let mut nodes = Vec::with_capacity(order * n_phi);
        let mut weights = Vec::with_capacity(order * n_phi);
        for (&x, &w) in xs.iter().zip(&ws) {
            let r = (1.0 - x * x).max(0.0).sqrt();
            for &phi in &phis {
                nodes.push([r * phi.cos(), r * phi.sin(), x]);
                weights.push(w * dphi);
            }
        }

        let mut folded_squares = Vec::new();
        let mut folded_weights = Vec::new();
        let norm = 4.0 * PI;
        for (&x, &w) in xs.iter().zip(&ws) {
            if x < 0.0 {
                continue;
            }
            let mult_theta = if x == 0.0 { 1.0 } else { 2.0 };
            let r2 = 1.0 - x * x;
            for &phi in &phis {
                if phi > 0.5 * PI + 1e-12 {
                    break;
                }
                let mult_phi = if (phi - 0.5 * PI).abs() <= 1e-12 { 2.0 } else { 4.0 };
                let c2 = phi.cos().powi(2);
                let s2 = 1.0 - c2;
                folded_squares.push([r2 * c2, r2 * s2, x * x]);
                folded_weights.push(mult_theta * mult_phi * w * dphi / norm);
            }
        }

        Ok(SphereQuadrature {
            order,
            nodes,
            weights,
            folded_squares,
            folded_weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
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

    /// Integrates `f` over the sphere with the full rule.
    pub fn integrate<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    /// Octant-folded rule: squared components with probability weights.
    pub(crate) fn folded(&self) -> (&[[f64; 3]], &[f64]) {
        (&self.folded_squares, &self.folded_weights)
    }
}

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
///
/// Newton iteration on the three-term recurrence, seeded with the Chebyshev
/// approximation; nodes are computed for one half and mirrored exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        // odd n: the middle node is exactly zero
        if n % 2 == 1 && i == m - 1 {
            z = 0.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_order() {
        assert!(matches!(SphereQuadrature::new(7), Err(Error::Input(_))));
        assert!(SphereQuadrature::new(8).is_ok());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [8, 9, 32, 33, 64] {
            let (x, w) = gauss_legendre(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn weights_and_second_moments() {
        for order in [8, 9, 32, 64] {
            let q = SphereQuadrature::new(order).unwrap();
            assert_eq!(q.len(), 2 * order * order);
            let total: f64 = q.weights().iter().sum();
            assert!((total - 4.0 * PI).abs() <= 1e-12 * 4.0 * PI);
            for i in 0..3 {
                for j in 0..3 {
                    let m = q.integrate(|p| p[i] * p[j]);
                    let want = if i == j { 4.0 * PI / 3.0 } else { 0.0 };
                    assert!((m - want).abs() < 1e-10, "order {order} ({i},{j})");
                }
            }
            for p in q.nodes() {
                let n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                assert!((n2 - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn folded_rule_matches_full_rule() {
        for order in [8, 9, 32] {
            let q = SphereQuadrature::new(order).unwrap();
            let (sq, fw) = q.folded();
            assert!((fw.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let f = |a: f64, b: f64, c: f64| (1.3 * a - 0.4 * b + 2.1 * c).exp() * (1.0 + a * b);
            let full = q.integrate(|p| f(p[0] * p[0], p[1] * p[1], p[2] * p[2])) / (4.0 * PI);
            let folded: f64 = sq.iter().zip(fw).map(|(s, w)| w * f(s[0], s[1], s[2])).sum();
            assert!((full - folded).abs() < 1e-13 * full.abs());
        }
    }
}
