//! Numerical probes of the structural properties of the model: interior
//! physicality margins, convexity of the potential, its blow-up at the edge
//! of the physical set, and grid refinement of computed equilibria.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::energy::{el_residual, strong_residual, Assembler};
use crate::error::{Error, Result};
use crate::field::{Field, InteriorInit};
use crate::maier_saupe::{BulkPotential, MaierSaupe};
use crate::minimizer::{minimize, Termination};
use crate::qtensor::{random_physical, uniaxial, QTensor};

const INSET_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MarginProfile {
    pub insets: Vec<f64>,
    pub margins: Vec<f64>,
}

impl MarginProfile {
    pub fn is_monotone(&self) -> bool {
        self.margins.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("inset,margin\n");
        for (d, m) in self.insets.iter().zip(&self.margins) {
            let _ = writeln!(out, "{d:.16e},{m:.16e}");
        }
        out
    }
}

/// Smallest node margin over nodes at distance ≥ d from the boundary, for
/// each inset d (sorted ascending in the result).
pub fn margin_profile(field: &Field, insets: &[f64]) -> Result<MarginProfile> {
    let half = 0.5 * field.grid().width.min(field.grid().height);
    let mut insets = insets.to_vec();
    if insets.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::Input("insets must be finite and non-negative".into()));
    }
    insets.sort_by(f64::total_cmp);
    let mut margins = Vec::with_capacity(insets.len());
    for &d in &insets {
        if d >= half {
            return Err(Error::Input(format!("inset {d} is not below half the smallest extent {half}")));
        }
        let mut m = f64::INFINITY;
        for j in 0..field.ny() {
            for i in 0..field.nx() {
                if field.distance_to_boundary(i, j) >= d - INSET_SLACK {
                    m = m.min(field.value(i, j).margin());
                }
            }
        }
        if m == f64::INFINITY {
            return Err(Error::Input(format!("no nodes at distance ≥ {d}")));
        }
        margins.push(m);
    }
    Ok(MarginProfile { insets, margins })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityReport {
    pub samples: usize,
    /// Largest `f(mid) − (f(a) + f(b))/2` for `f = f_ms`.
    pub worst_f_ms: f64,
    /// Same for `ψ_b + κ|Q|²`.
    pub worst_semiconvex: f64,
}

impl ConvexityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.worst_f_ms <= tol && self.worst_semiconvex <= tol
    }
}

/// Midpoint convexity defect `f((a+b)/2) − (f(a) + f(b))/2`.
pub fn midpoint_violation<F>(f: F, a: &QTensor, b: &QTensor) -> Result<f64>
where
    F: Fn(&QTensor) -> Result<f64>,
{
    let mid = 0.5 * (*a + *b);
    Ok(f(&mid)? - 0.5 * (f(a)? + f(b)?))
}

/// Midpoint tests on `samples` random pairs with margin ≥ `margin_floor`.
pub fn convexity_probe(bulk: &BulkPotential, samples: usize, margin_floor: f64, seed: u64) -> Result<ConvexityReport> {
    if samples == 0 {
        return Err(Error::Input("convexity probe needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = bulk.params().kappa;
    let ms = bulk.maier_saupe();
    let semiconvex = |q: &QTensor| Ok(bulk.psi_b(q)? + kappa * q.norm_sq());
    let mut worst_f_ms = f64::NEG_INFINITY;
    let mut worst_semiconvex = f64::NEG_INFINITY;
    for _ in 0..samples {
        let a = random_physical(&mut rng, margin_floor);
        let b = random_physical(&mut rng, margin_floor);
        worst_f_ms = worst_f_ms.max(midpoint_violation(|q| ms.f_ms(q), &a, &b)?);
        worst_semiconvex = worst_semiconvex.max(midpoint_violation(semiconvex, &a, &b)?);
    }
    Ok(ConvexityReport {
        samples,
        worst_f_ms,
        worst_semiconvex,
    })
}

/// Divided differences of `f_ms(uniaxial(s, e₃))` on `n` equispaced points
/// of `[s_min, s_max]`; convexity makes them non-decreasing.
pub fn uniaxial_divided_differences(ms: &MaierSaupe, s_min: f64, s_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < 3 || !(s_min < s_max) {
        return Err(Error::Input("need at least 3 points on a non-empty interval".into()));
    }
    let h = (s_max - s_min) / (n - 1) as f64;
    let values = (0..n)
        .map(|k| ms.f_ms(&uniaxial(s_min + h * k as f64, [0.0, 0.0, 1.0])?))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.windows(2).map(|w| (w[1] - w[0]) / h).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowupPath {
    /// `s → 1⁻`, largest eigenvalue → 2/3.
    UniaxialPositive,
    /// `s → −1/2⁺`, smallest eigenvalue → −1/3.
    UniaxialNegative,
}

impl BlowupPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlowupPath::UniaxialPositive => "uniaxial-positive",
            BlowupPath::UniaxialNegative => "uniaxial-negative",
        }
    }

    pub fn default_ladder(&self) -> Vec<f64> {
        match self {
            BlowupPath::UniaxialPositive => vec![0.0, 0.5, 0.9, 0.99, 0.999],
            BlowupPath::UniaxialNegative => vec![0.0, -0.2, -0.4, -0.49, -0.499],
        }
    }
}

impl std::str::FromStr for BlowupPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniaxial-positive" => Ok(BlowupPath::UniaxialPositive),
            "uniaxial-negative" => Ok(BlowupPath::UniaxialNegative),
            other => Err(Error::Input(format!("unknown path `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupTable {
    pub path: BlowupPath,
    /// `(s, f_ms, margin)`.
    pub rows: Vec<(f64, f64, f64)>,
}

impl BlowupTable {
    pub fn strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 > w[0].1)
    }

    /// `f_ms(last) − f_ms(first)`.
    pub fn rise(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.1 - a.1,
            _ => 0.0,
        }
    }

    pub fn passed(&self, min_rise: f64) -> bool {
        self.strictly_increasing() && self.rise() > min_rise
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("s,f_ms,margin\n");
        for (s, f, m) in &self.rows {
            let _ = writeln!(out, "{s:.16e},{f:.16e},{m:.16e}");
        }
        out
    }
}

/// `f_ms` along the uniaxial path with director `e₃`. The ladder must move
/// monotonically toward the boundary end of the path.
pub fn blowup_scan(ms: &MaierSaupe, path: BlowupPath, s_values: &[f64]) -> Result<BlowupTable> {
    let toward = |s: f64| match path {
        BlowupPath::UniaxialPositive => s,
        BlowupPath::UniaxialNegative => -s,
    };
    for &s in s_values {
        let inside = match path {
            BlowupPath::UniaxialPositive => (0.0..1.0).contains(&s),
            BlowupPath::UniaxialNegative => s > -0.5 && s <= 0.0,
        };
        if !inside {
            return Err(Error::Input(format!("s = {s} is outside the {} path", path.as_str())));
        }
    }
    if s_values.windows(2).any(|w| toward(w[1]) <= toward(w[0])) {
        return Err(Error::Input("s values must move toward the boundary end of the path".into()));
    }
    let rows = s_values
        .iter()
        .map(|&s| {
            let q = uniaxial(s, [0.0, 0.0, 1.0])?;
            Ok((s, ms.f_ms(&q)?, q.margin()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlowupTable { path, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementRow {
    pub n: usize,
    pub energy: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Mass-normalized discrete residual (solver tolerance level).
    pub el_residual_l2: f64,
    /// Finite-difference residual of the continuum equation.
    pub strong_residual_l2: f64,
    pub interior_margin: f64,
    /// Energy trace of the solve.
    pub energy_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementStudy {
    pub inset: f64,
    pub rows: Vec<RefinementRow>,
}

impl RefinementStudy {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.termination == Termination::Converged)
    }

    pub fn residual_decreases(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].strong_residual_l2 < w[0].strong_residual_l2)
    }

    /// Each margin is at least `ratio` times the previous one.
    pub fn margin_stable(&self, ratio: f64) -> bool {
        self.rows.iter().all(|r| r.interior_margin > 0.0)
            && self.rows.windows(2).all(|w| w[1].interior_margin >= ratio * w[0].interior_margin)
    }

    /// Energy decreases, or changes by at most `rel` relative.
    pub fn energy_stable(&self, rel: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].energy <= w[0].energy || (w[1].energy - w[0].energy).abs() <= rel * w[0].energy.abs())
    }

    pub fn passed(&self) -> bool {
        self.all_converged() && self.residual_decreases() && self.margin_stable(0.5) && self.energy_stable(0.02)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("n,energy,iterations,termination,el_residual_l2,strong_residual_l2,interior_margin\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{},{},{:.6e},{:.6e},{:.16e}",
                r.n,
                r.energy,
                r.iterations,
                r.termination.as_str(),
                r.el_residual_l2,
                r.strong_residual_l2,
                r.interior_margin
            );
        }
        out
    }
}

/// Minimizes the configured problem on `n × n` grids for each size and
/// reports residuals and the margin at a quarter inset.
pub fn refinement_study(cfg: &RunConfig, sizes: &[usize], threads: Option<usize>) -> Result<RefinementStudy> {
    if sizes.len() < 2 {
        return Err(Error::Input("refinement study needs at least two grid sizes".into()));
    }
    let inset = 0.25 * cfg.grid.width.min(cfg.grid.height);
    let model = cfg.model()?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let run = || -> Result<RefinementRow> {
            let c = cfg.with_grid(n, n);
            c.validate()?;
            let field0 = c.initial_field(InteriorInit::Blend)?;
            let mut asm = Assembler::new(model.clone());
            if let Some(t) = threads {
                asm = asm.with_threads(t)?;
            }
            let (field, report) = minimize(&field0, &mut asm, &c.solver)?;
            Ok(RefinementRow {
                n,
                energy: report.final_energy,
                iterations: report.iterations,
                termination: report.termination,
                el_residual_l2: el_residual(&field, &model, inset)?.l2_norm,
                strong_residual_l2: strong_residual(&field, &model, inset)?.l2_norm,
                interior_margin: margin_profile(&field, &[inset])?.margins[0],
                energy_trace: report.energy_trace,
            })
        };
        rows.push(run().map_err(|e| Error::Input(format!("grid size {n}: {e}")))?);
    }
    Ok(RefinementStudy { inset, rows })
}
