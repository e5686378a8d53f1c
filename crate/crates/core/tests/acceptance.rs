//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use ldg_core::config::RunConfig;
use ldg_core::elastic::{coercivity, invariance_suite, invariants, random_unit_gradient, ElasticConstants};
use ldg_core::energy::{grad_energy, Assembler, EnergyModel};
use ldg_core::field::{Field, GridSpec, InteriorInit};
use ldg_core::maier_saupe::{BulkParams, BulkPotential, MaierSaupe, SphereQuadrature, DEFAULT_QUAD_ORDER};
use ldg_core::minimizer::{minimize, Termination};
use ldg_core::qtensor::{random_physical, random_rotation, uniaxial, QTensor};
use ldg_core::verifier::{blowup_scan, convexity_probe, refinement_study, BlowupPath, RefinementStudy};

const STANDARD: &str = r#"{
  "grid": {"nx": 33, "ny": 33, "width": 1.0, "height": 1.0},
  "boundary": {"kind": "winding-director", "s": 0.4, "k": 1, "theta0": 0.0},
  "bulk": {"T": 4.0, "kappa": 5.0, "quad_order": 32},
  "elastic": {"L1": 1.0, "L2": 0.1, "L3": 0.1, "L4": 0.1, "L5": 0.0},
  "solver": {"max_iters": 20000, "grad_tol": 1e-6, "armijo_c": 1e-4, "step_init": 1e-3, "seed": 7}
}"#;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn c1_quadrature() -> Outcome {
    let q = SphereQuadrature::new(DEFAULT_QUAD_ORDER).unwrap();
    let area: f64 = q.weights().iter().sum();
    let e_area = (area - SPHERE_AREA).abs() / SPHERE_AREA;
    let e_second = (0..3)
        .map(|i| (q.integrate(|p| p[i] * p[i]) - SECOND_MOMENT).abs() / SECOND_MOMENT)
        .fold(0.0, f64::max);
    let e_fourth = (q.integrate(|p| p[0] * p[0] * p[1] * p[1]) - MIXED_FOURTH_MOMENT).abs();
    outcome(
        e_area <= 1e-12 && e_second <= 1e-12 && e_fourth <= 1e-10,
        format!("area rel {e_area:.1e}, second moments rel {e_second:.1e}, p1²p2² abs {e_fourth:.1e}"),
    )
}

fn c2_isotropic_pin() -> Outcome {
    let ms = MaierSaupe::new(DEFAULT_QUAD_ORDER).unwrap();
    let v = ms.evaluate(&QTensor::ZERO, None).unwrap();
    let e_f = (v.f_ms + (4.0 * PI).ln()).abs();
    let e_g = v.gradient.max_abs();
    outcome(e_f <= 1e-8 && e_g <= 1e-8, format!("|f_ms(0) + ln 4π| = {e_f:.1e}, |∇f_ms(0)| = {e_g:.1e}"))
}

fn c3_moment_inversion() -> Outcome {
    let ms = MaierSaupe::new(DEFAULT_QUAD_ORDER).unwrap();
    let quad = ms.quadrature();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut max_iters) = (0.0_f64, 0);
    for _ in 0..200 {
        let q = random_physical(&mut rng, 0.02);
        let m = ms.evaluate(&q, None).unwrap().multipliers;
        max_iters = max_iters.max(m.iterations);
        // moments of the recovered density on the full node set
        let mut mass = 0.0;
        let mut second = [[0.0; 3]; 3];
        for (p, w) in quad.nodes().iter().zip(quad.weights()) {
            let rho = w * m.density(p);
            mass += rho;
            for i in 0..3 {
                for j in 0..3 {
                    second[i][j] += rho * p[i] * p[j];
                }
            }
        }
        let target = q.to_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let iso = if i == j { 1.0 / 3.0 } else { 0.0 };
                worst = worst.max((second[i][j] / mass - iso - target[i][j]).abs());
            }
        }
        worst = worst.max((mass - 1.0).abs());
    }
    outcome(
        worst <= 1e-10 && max_iters <= 50,
        format!("worst moment error {worst:.1e}, max Newton iterations {max_iters}"),
    )
}

fn c4_primal_dual() -> Outcome {
    let ms = MaierSaupe::new(DEFAULT_QUAD_ORDER).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut samples = vec![uniaxial(0.5, [0.0, 0.0, 1.0]).unwrap()];
    while samples.len() < 10 {
        samples.push(random_physical(&mut rng, 0.05));
    }
    let worst = samples
        .iter()
        .map(|q| (ms.f_ms(q).unwrap() - primal_entropy(ms.quadrature(), q)).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-4, format!("10 samples, worst |dual − primal| = {worst:.1e}"))
}

fn c5_convexity() -> Outcome {
    let bulk = BulkPotential::new(BulkParams::new(4.0, 5.0)).unwrap();
    let r = convexity_probe(&bulk, 1000, 0.01, 5).unwrap();
    outcome(
        r.passed(1e-9),
        format!(
            "1000 pairs, worst f_ms defect {:.1e}, worst ψ_b + κ|Q|² defect {:.1e}",
            r.worst_f_ms, r.worst_semiconvex
        ),
    )
}

fn c6_blowup() -> Outcome {
    let ms = MaierSaupe::new(128).unwrap();
    let pos = blowup_scan(&ms, BlowupPath::UniaxialPositive, &BlowupPath::UniaxialPositive.default_ladder()).unwrap();
    let neg = blowup_scan(&ms, BlowupPath::UniaxialNegative, &BlowupPath::UniaxialNegative.default_ladder()).unwrap();
    let f = |t: &ldg_core::verifier::BlowupTable, s: f64| t.rows.iter().find(|r| r.0 == s).unwrap().1;
    let jump = f(&pos, 0.999) - f(&pos, 0.9);
    outcome(
        pos.strictly_increasing() && neg.strictly_increasing() && jump > 1.0,
        format!(
            "positive ladder increasing: {}, negative ladder increasing: {}, f(0.999) − f(0.9) = {jump:.3}",
            pos.strictly_increasing(),
            neg.strictly_increasing()
        ),
    )
}

fn c7_elastic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let reflect = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
    let (mut worst_oracle, mut worst_frame) = (0.0_f64, 0.0_f64);
    let mut suite_ok = true;
    for n in 0..10_000 {
        let q = random_physical(&mut rng, 0.0);
        let d = random_unit_gradient(&mut rng).scaled(rng.gen_range(0.1..3.0));
        let fast = invariants(&q, &d);
        let qm = q.to_matrix();
        let dt = planar_tensor(&d.dx, &d.dy);
        let slow = naive_invariants(&qm, &dt);
        for k in 0..5 {
            worst_oracle = worst_oracle.max((fast[k] - slow[k]).abs() / slow[k].abs().max(1.0));
        }
        let rot = random_rotation(&mut rng);
        let r = if n % 2 == 0 {
            rot
        } else {
            ldg_core::qtensor::mat_mul(&rot, &reflect)
        };
        let det = ldg_core::qtensor::det(&r);
        let (qt, dtt) = transform(&qm, &dt, &r);
        let after = naive_invariants(&qt, &dtt);
        for k in 0..5 {
            let want = if k == 4 { det * slow[k] } else { slow[k] };
            worst_frame = worst_frame.max((after[k] - want).abs() / want.abs().max(1.0));
        }
        suite_ok &= invariance_suite(&q, &d, &r).unwrap().all();
    }
    outcome(
        worst_oracle <= 1e-12 && worst_frame <= 1e-12 && suite_ok,
        format!("10⁴ inputs, optimized vs naive {worst_oracle:.1e}, frame change {worst_frame:.1e}, library suite ok: {suite_ok}"),
    )
}

fn c8_coercivity() -> Outcome {
    let one = coercivity(&ElasticConstants::one_constant(1.0), 100_000, 8);
    let c0_one = one.empirical_c0.unwrap();
    let exact = one.satisfied && one.lprime1 == 1.0 && (c0_one - 1.0).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let l = loop {
        let l = ElasticConstants::new(
            rng.gen_range(0.2..2.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(-1.0..1.0),
            0.0,
        );
        if l.coercivity_inequalities().iter().all(|v| *v > 0.0) {
            break l;
        }
    };
    let random = coercivity(&l, 100_000, 9);
    let c0 = random.empirical_c0.unwrap();
    outcome(
        exact && random.satisfied && c0 > 0.0,
        format!("L = (1,0,0,0): c₀ = {c0_one:.15}; L = {:.3?}: empirical c₀ = {c0:.4} over 10⁵ samples", &l.0[..4]),
    )
}

fn c9_gradient() -> Outcome {
    let model = EnergyModel::new(
        BulkPotential::new(BulkParams::new(1.0, 0.5)).unwrap(),
        ElasticConstants::new(1.0, 0.3, -0.2, 0.4, 0.25),
    );
    let mut worst = 0.0_f64;
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(90 + seed);
        let values = (0..64).map(|_| random_physical(&mut rng, 0.05)).collect();
        let f = Field::with_origin(GridSpec::square(8, 1.0), [0.0, 0.0], values).unwrap();
        let g = grad_energy(&f, &model).unwrap();
        let mut asm = Assembler::new(model.clone());
        let h = 1e-6;
        let (mut num, mut den) = (0.0, 0.0);
        for node in (0..f.len()).filter(|n| !f.is_boundary(*n)) {
            for k in 0..5 {
                let mut dir = vec![QTensor::ZERO; f.len()];
                dir[node].0[k] = 1.0;
                let plus = asm.evaluate(&f.displaced(&dir, h), false).unwrap();
                let minus = asm.evaluate(&f.displaced(&dir, -h), false).unwrap();
                let fd = plus.energy_difference(&minus) / (2.0 * h);
                num += (fd - g[node].0[k]).powi(2);
                den += g[node].0[k].powi(2);
            }
        }
        worst = worst.max((num / den).sqrt());
    }
    outcome(worst <= 1e-6, format!("3 random 8×8 fields, worst relative error {worst:.1e}"))
}

fn c10_end_to_end(study: &RefinementStudy, elapsed: Duration) -> Outcome {
    let monotone = study
        .rows
        .iter()
        .all(|r| r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    let (a, b) = (&study.rows[0], &study.rows[1]);
    let passed = study.all_converged()
        && monotone
        && a.interior_margin > 0.0
        && b.interior_margin >= 0.5 * a.interior_margin
        && study.residual_decreases()
        && elapsed < Duration::from_secs(600);
    outcome(
        passed,
        format!(
            "n = {}/{}: {}/{} in {}/{} iterations, energy {:.8}/{:.8}, quarter-inset margin {:.6}/{:.6}, \
             E-L residual {:.3e}/{:.3e} (discrete {:.1e}/{:.1e}), monotone {monotone}",
            a.n,
            b.n,
            a.termination.as_str(),
            b.termination.as_str(),
            a.iterations,
            b.iterations,
            a.energy,
            b.energy,
            a.interior_margin,
            b.interior_margin,
            a.strong_residual_l2,
            b.strong_residual_l2,
            a.el_residual_l2,
            b.el_residual_l2,
        ),
    )
}

fn c11_determinism(cfg: &RunConfig, reference: &[f64]) -> Outcome {
    let model = cfg.model().unwrap();
    let field = cfg.initial_field(InteriorInit::Blend).unwrap();
    let mut identical = true;
    let mut lines = Vec::new();
    for threads in [1, 3] {
        let mut asm = Assembler::new(model.clone()).with_threads(threads).unwrap();
        let (_, report) = minimize(&field, &mut asm, &cfg.solver).unwrap();
        let same = report.termination == Termination::Converged
            && report.energy_trace.len() == reference.len()
            && report.energy_trace.iter().zip(reference).all(|(a, b)| a.to_bits() == b.to_bits());
        identical &= same;
        lines.push(format!("{threads} thread(s): {}", if same { "identical" } else { "differs" }));
    }
    outcome(identical, format!("{} trace entries; {}", reference.len(), lines.join(", ")))
}

fn main() {
    let cfg = RunConfig::from_json_str(STANDARD).unwrap();
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut run = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let t = start.elapsed();
        println!(
            "criterion {n:>2} [{}] {name}: {} ({:.1?})",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t
        );
        results.push((n, name, o, t));
    };

    run(1, "quadrature exactness", &mut c1_quadrature);
    run(2, "isotropic pin", &mut c2_isotropic_pin);
    run(3, "moment inversion", &mut c3_moment_inversion);
    run(4, "dual/primal oracle equivalence", &mut c4_primal_dual);
    run(5, "convexity and semiconvexity", &mut c5_convexity);
    run(6, "blow-up at the physical boundary", &mut c6_blowup);
    run(7, "elastic invariants oracle and frame indifference", &mut c7_elastic_oracle);
    run(8, "coercivity", &mut c8_coercivity);
    run(9, "discrete gradient exactness", &mut c9_gradient);

    let mut reference = Vec::new();
    run(10, "end-to-end physicality and refinement", &mut || {
        let start = Instant::now();
        match refinement_study(&cfg, &[33, 65], None) {
            Ok(s) => {
                reference = s.rows[0].energy_trace.clone();
                c10_end_to_end(&s, start.elapsed())
            }
            Err(e) => outcome(false, format!("run failed: {e}")),
        }
    });
    run(11, "determinism across thread counts", &mut || {
        if reference.is_empty() {
            outcome(false, "no reference run".into())
        } else {
            c11_determinism(&cfg, &reference)
        }
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
