//! Discrete Landau–de Gennes energy on a [`Field`].
//!
//! The energy is `Σ_cells Σ_gauss w (G(Q, DQ) + ψ_b(Q))` with bilinear
//! interpolation and the 2×2 Gauss rule. Its gradient with respect to the
//! interior node values is assembled exactly by pulling the pointwise
//! derivatives back through the shape functions.
//!
//! Cell contributions may be computed in parallel; they are always reduced
//! by the same pairwise tree in cell order, so results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::elastic::{density_grad, invariants, ElasticConstants, GradientPair};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::maier_saupe::BulkPotential;
use crate::qtensor::QTensor;

/// Bulk potential plus elastic constants.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    pub bulk: BulkPotential,
    pub elastic: ElasticConstants,
}

impl EnergyModel {
    pub fn new(bulk: BulkPotential, elastic: ElasticConstants) -> Self {
        EnergyModel { bulk, elastic }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    /// `∫ Lᵢ Iᵢ` for `i = 1..5`.
    pub elastic_terms: [f64; 5],
    /// `∫ T f_ms`.
    pub entropy_term: f64,
    /// `∫ −κ |Q|²`.
    pub quadratic_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn elastic(&self) -> f64 {
        self.elastic_terms.iter().sum()
    }

    pub fn bulk(&self) -> f64 {
        self.entropy_term + self.quadratic_term
    }
}

/// Discrete energy, or the first cell (in cell order) where some Gauss
/// point left the domain of the bulk potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(EnergyBreakdown),
    Infeasible { cx: usize, cy: usize },
}

impl Energy {
    /// Total energy, `+∞` when infeasible.
    pub fn total(&self) -> f64 {
        match self {
            Energy::Finite(b) => b.total,
            Energy::Infeasible { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Energy::Finite(_))
    }

    pub fn breakdown(&self) -> Option<&EnergyBreakdown> {
        match self {
            Energy::Finite(b) => Some(b),
            Energy::Infeasible { .. } => None,
        }
    }

    pub fn into_result(self) -> Result<EnergyBreakdown> {
        match self {
            Energy::Finite(b) => Ok(b),
            Energy::Infeasible { cx, cy } => Err(Error::Infeasible { cx, cy }),
        }
    }
}

// per-cell partial sums
const T_ELASTIC: usize = 0;
const T_ENTROPY_EXCESS: usize = 5;
const T_QUADRATIC: usize = 6;
const T_TOTAL_EXCESS: usize = 7;
const T_AREA: usize = 8;
const N_TERMS: usize = 9;

struct CellOut {
    terms: [f64; N_TERMS],
    grad: [QTensor; 4],
}

/// Energy and gradient evaluator.
///
/// Keeps the bulk multipliers of every Gauss point from the previous call
/// and uses them to warm-start the next solve.
pub struct Assembler {
    model: EnergyModel,
    warm: Vec<[f64; 3]>,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl Assembler {
    pub fn new(model: EnergyModel) -> Self {
        Assembler {
            model,
            warm: Vec::new(),
            pool: None,
        }
    }

    /// Runs assembly on a dedicated pool of `threads` workers.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Input(format!("cannot build thread pool: {e}")))?;
        self.pool = Some(Arc::new(pool));
        Ok(self)
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn reset_warm_start(&mut self) {
        self.warm.clear();
    }

    pub fn energy(&mut self, field: &Field) -> Energy {
        match self.assemble(field, false) {
            Ok(e) => Energy::Finite(e.breakdown),
            Err((cx, cy)) => Energy::Infeasible { cx, cy },
        }
    }

    /// Energy and gradient; the gradient is zero on boundary nodes.
    pub fn energy_and_gradient(&mut self, field: &Field) -> Result<(EnergyBreakdown, Vec<QTensor>)> {
        let e = self.evaluate(field, true)?;
        Ok((e.breakdown, e.gradient.expect("gradient requested")))
    }

    /// Full evaluation including per-cell totals.
    pub fn evaluate(&mut self, field: &Field, with_grad: bool) -> Result<Evaluation> {
        self.assemble(field, with_grad)
            .map_err(|(cx, cy)| Error::Infeasible { cx, cy })
    }

    fn assemble(
        &mut self,
        field: &Field,
        with_grad: bool,
    ) -> std::result::Result<Evaluation, (usize, usize)> {
        let slots = 4 * field.cells();
        if self.warm.len() != slots {
            self.warm = vec![[0.0; 3]; slots];
        }
        let model = &self.model;
        let warm = &mut self.warm;
        let mut work = move || -> Vec<Option<CellOut>> {
            warm.par_chunks_mut(4)
                .enumerate()
                .map(|(c, w)| eval_cell(field, model, c, w, with_grad))
                .collect()
        };
        let cells = match &self.pool {
            Some(pool) => pool.install(work),
            None => work(),
        };

        let mut terms = Vec::with_capacity(cells.len());
        for (c, out) in cells.iter().enumerate() {
            match out {
                Some(o) => terms.push(o.terms),
                None => return Err(field.cell_coords(c)),
            }
        }
        let sums = pairwise_sum(&terms);
        let t = self.model.bulk.params().temperature;
        let log4pi = (4.0 * PI).ln();
        let offset = t * log4pi * sums[T_AREA];
        let breakdown = EnergyBreakdown {
            elastic_terms: std::array::from_fn(|k| sums[T_ELASTIC + k]),
            entropy_term: sums[T_ENTROPY_EXCESS] - offset,
            quadratic_term: sums[T_QUADRATIC],
            total: sums[T_TOTAL_EXCESS] - offset,
        };
        let cell_totals = terms
            .iter()
            .map(|c| c[T_TOTAL_EXCESS] - t * log4pi * c[T_AREA])
            .collect();

        let gradient = with_grad.then(|| {
            let mut g = vec![QTensor::ZERO; field.len()];
            for (c, out) in cells.iter().enumerate() {
                let (cx, cy) = field.cell_coords(c);
                let nodes = field.cell_nodes(cx, cy);
                let out = out.as_ref().expect("checked above");
                for a in 0..4 {
                    g[nodes[a]] += out.grad[a];
                }
            }
            for (gi, &b) in g.iter_mut().zip(field.boundary_mask()) {
                if b {
                    *gi = QTensor::ZERO;
                }
            }
            g
        });
        Ok(Evaluation {
            breakdown,
            cell_totals,
            gradient,
        })
    }
}

/// Result of one assembly pass.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub breakdown: EnergyBreakdown,
    /// Energy of each cell, in cell order.
    pub cell_totals: Vec<f64>,
    pub gradient: Option<Vec<QTensor>>,
}

impl Evaluation {
    /// `self − other`, summed cell by cell.
    ///
    /// Far more accurate than subtracting the totals when the two fields are
    /// close, because the large common part cancels inside each cell.
    pub fn energy_difference(&self, other: &Evaluation) -> f64 {
        assert_eq!(self.cell_totals.len(), other.cell_totals.len(), "grids differ");
        let d: Vec<f64> = self
            .cell_totals
            .iter()
            .zip(&other.cell_totals)
            .map(|(a, b)| a - b)
            .collect();
        pairwise_sum_scalar(&d)
    }

    /// Bound on the rounding error of [`Self::energy_difference`].
    pub fn difference_noise(&self, other: &Evaluation) -> f64 {
        let scale: f64 = self
            .cell_totals
            .iter()
            .chain(&other.cell_totals)
            .map(|c| c.abs())
            .sum();
        16.0 * f64::EPSILON * scale
    }
}

fn pairwise_sum_scalar(items: &[f64]) -> f64 {
    if items.len() <= 8 {
        return items.iter().sum();
    }
    let mid = items.len() / 2;
    pairwise_sum_scalar(&items[..mid]) + pairwise_sum_scalar(&items[mid..])
}

fn eval_cell(
    field: &Field,
    model: &EnergyModel,
    cell: usize,
    warm: &mut [[f64; 3]],
    with_grad: bool,
) -> Option<CellOut> {
    let (cx, cy) = field.cell_coords(cell);
    let params = model.bulk.params();
    let (t, kappa) = (params.temperature, params.kappa);
    let mut terms = [0.0; N_TERMS];
    let mut grad = [QTensor::ZERO; 4];

    for (g, slot) in warm.iter_mut().enumerate() {
        let p = field.element_point(cx, cy, g);
        let bulk = match model.bulk.evaluate(&p.q, Some(*slot)) {
            Ok(v) => v,
            // a stale warm start can derail Newton; retry cold once
            Err(Error::Convergence { .. }) => model.bulk.evaluate(&p.q, None).ok()?,
            Err(_) => return None,
        };
        *slot = bulk.lambda;

        let w = p.weight;
        let inv = invariants(&p.q, &p.d);
        let mut elastic = 0.0;
        for k in 0..5 {
            let e = w * model.elastic.0[k] * inv[k];
            terms[T_ELASTIC + k] += e;
            elastic += e;
        }
        let entropy = w * t * bulk.excess;
        let quadratic = -w * kappa * p.q.norm_sq();
        terms[T_ENTROPY_EXCESS] += entropy;
        terms[T_QUADRATIC] += quadratic;
        terms[T_TOTAL_EXCESS] += elastic + entropy + quadratic;
        terms[T_AREA] += w;

        if with_grad {
            let dg = density_grad(&p.q, &p.d, &model.elastic);
            let pointwise = dg.d_q + bulk.gradient;
            for a in 0..4 {
                grad[a] += w * (p.shape[a] * pointwise + p.shape_dx[a] * dg.d_dx + p.shape_dy[a] * dg.d_dy);
            }
        }
    }
    Some(CellOut { terms, grad })
}

/// Fixed-shape pairwise reduction.
fn pairwise_sum(items: &[[f64; N_TERMS]]) -> [f64; N_TERMS] {
    if items.len() <= 8 {
        let mut acc = [0.0; N_TERMS];
        for it in items {
            for k in 0..N_TERMS {
                acc[k] += it[k];
            }
        }
        return acc;
    }
    let mid = items.len() / 2;
    let a = pairwise_sum(&items[..mid]);
    let b = pairwise_sum(&items[mid..]);
    std::array::from_fn(|k| a[k] + b[k])
}

/// Energy with cold-started bulk solves.
pub fn total_energy(field: &Field, model: &EnergyModel) -> Energy {
    Assembler::new(model.clone()).energy(field)
}

/// Gradient with respect to the node values (zero on the boundary).
pub fn grad_energy(field: &Field, model: &EnergyModel) -> Result<Vec<QTensor>> {
    Ok(Assembler::new(model.clone()).energy_and_gradient(field)?.1)
}

/// Lumped quadrature mass `Σ_gauss w N_a` of every node.
pub fn lumped_mass(field: &Field) -> Vec<f64> {
    let mut m = vec![0.0; field.len()];
    for c in 0..field.cells() {
        let (cx, cy) = field.cell_coords(c);
        for g in 0..4 {
            let p = field.element_point(cx, cy, g);
            for a in 0..4 {
                m[p.nodes[a]] += p.weight * p.shape[a];
            }
        }
    }
    m
}

/// Largest mass-normalized gradient norm over interior nodes.
pub fn normalized_grad_norm(grad: &[QTensor], mass: &[f64], field: &Field) -> f64 {
    grad.iter()
        .zip(mass)
        .enumerate()
        .filter(|(n, _)| !field.is_boundary(*n))
        .map(|(_, (g, m))| g.norm() / m)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// Mass-weighted root mean square over the reported nodes.
    pub l2_norm: f64,
    /// Largest node-wise Euclidean norm.
    pub linf_norm: f64,
    pub inset: f64,
    /// `(node index, residual)` for every node at distance ≥ inset.
    pub nodes: Vec<(usize, QTensor)>,
}

impl ResidualReport {
    fn from_nodes(field: &Field, mass: &[f64], inset: f64, nodes: Vec<(usize, QTensor)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Input(format!("no interior nodes at distance ≥ {inset}")));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        let mut linf = 0.0_f64;
        for (n, r) in &nodes {
            num += mass[*n] * r.norm_sq();
            den += mass[*n];
            linf = linf.max(r.norm());
        }
        let _ = field;
        Ok(ResidualReport {
            l2_norm: (num / den).sqrt(),
            linf_norm: linf,
            inset,
            nodes,
        })
    }

    /// CSV with columns `x,y,r1,r2,r3,r4,r5`.
    pub fn to_csv_string(&self, field: &Field) -> String {
        let mut out = String::from("x,y,r1,r2,r3,r4,r5\n");
        for (n, r) in &self.nodes {
            let [x, y] = field.position(n % field.nx(), n / field.nx());
            let v = r.0;
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                x, y, v[0], v[1], v[2], v[3], v[4]
            );
        }
        out
    }
}

fn interior_at_inset(field: &Field, inset: f64) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    (1..field.ny() - 1)
        .flat_map(move |j| (1..field.nx() - 1).map(move |i| (i, j)))
        .filter(move |&(i, j)| field.distance_to_boundary(i, j) >= inset - 1e-12)
        .map(move |(i, j)| (field.index(i, j), i, j))
}

/// Discrete Euler–Lagrange residual: energy gradient divided by lumped mass,
/// reported on interior nodes at distance ≥ `inset` from the boundary.
pub fn el_residual(field: &Field, model: &EnergyModel, inset: f64) -> Result<ResidualReport> {
    let grad = grad_energy(field, model)?;
    residual_from_gradient(field, &grad, inset)
}

pub fn residual_from_gradient(field: &Field, grad: &[QTensor], inset: f64) -> Result<ResidualReport> {
    let mass = lumped_mass(field);
    let nodes = interior_at_inset(field, inset)
        .map(|(n, _, _)| (n, grad[n] * (1.0 / mass[n])))
        .collect();
    ResidualReport::from_nodes(field, &mass, inset, nodes)
}

/// Strong-form residual `[−div G_D + G_Q + ψ_b,Q]^st` from central
/// differences of the nodal values, with fluxes at cell-edge midpoints.
///
/// This is a second-order approximation of the continuum operator that is
/// independent of the finite-element discretization, so on a converged
/// discrete minimizer it measures the consistency error of the scheme.
pub fn strong_residual(field: &Field, model: &EnergyModel, inset: f64) -> Result<ResidualReport> {
    let (hx, hy) = (field.hx(), field.hy());
    let l = &model.elastic;
    let v = |i: usize, j: usize| field.value(i, j);
    let mut nodes = Vec::new();
    for (n, i, j) in interior_at_inset(field, inset) {
        let flux_x = |a: usize| {
            // midpoint between columns a and a + 1
            let q = 0.5 * (v(a, j) + v(a + 1, j));
            let dx = (v(a + 1, j) - v(a, j)) * (1.0 / hx);
            let dy = ((v(a, j + 1) - v(a, j - 1)) + (v(a + 1, j + 1) - v(a + 1, j - 1))) * (0.25 / hy);
            density_grad(&q, &GradientPair::new(dx, dy), l).d_dx
        };
        let flux_y = |b: usize| {
            let q = 0.5 * (v(i, b) + v(i, b + 1));
            let dy = (v(i, b + 1) - v(i, b)) * (1.0 / hy);
            let dx = ((v(i + 1, b) - v(i - 1, b)) + (v(i + 1, b + 1) - v(i - 1, b + 1))) * (0.25 / hx);
            density_grad(&q, &GradientPair::new(dx, dy), l).d_dy
        };
        let div = (flux_x(i) - flux_x(i - 1)) * (1.0 / hx) + (flux_y(j) - flux_y(j - 1)) * (1.0 / hy);
        let q = v(i, j);
        let d = GradientPair::new(
            (v(i + 1, j) - v(i - 1, j)) * (0.5 / hx),
            (v(i, j + 1) - v(i, j - 1)) * (0.5 / hy),
        );
        let g_q = density_grad(&q, &d, l).d_q;
        let psi_q = model.bulk.grad_psi_b(&q).map_err(|_| {
            let (cx, cy) = (i.min(field.nx() - 2), j.min(field.ny() - 2));
            Error::Infeasible { cx, cy }
        })?;
        nodes.push((n, g_q + psi_q - div));
    }
    let mass = lumped_mass(field);
    ResidualReport::from_nodes(field, &mass, inset, nodes)
}
