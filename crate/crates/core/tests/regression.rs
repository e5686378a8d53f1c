use ldg_core::config::RunConfig;
use ldg_core::elastic::ElasticConstants;
use ldg_core::energy::{total_energy, Assembler, EnergyModel};
use ldg_core::field::{make_field, BoundarySpec, Field, GridSpec, InteriorInit};
use ldg_core::maier_saupe::{BulkParams, BulkPotential};
use ldg_core::minimizer::{minimize, Termination};
use ldg_core::qtensor::QTensor;
use ldg_core::verifier::margin_profile;

/// `∫ |∇Q|²` of the bilinear interpolant, with every cell split into 2×2
/// sub-cells and a 2×2 Gauss rule on each.
fn dirichlet_energy_refined(f: &Field) -> f64 {
    let (hx, hy) = (f.hx(), f.hy());
    let g = 1.0 / 3.0_f64.sqrt();
    let mut total = 0.0;
    for cy in 0..f.ny() - 1 {
        for cx in 0..f.nx() - 1 {
            let q00 = f.value(cx, cy);
            let q10 = f.value(cx + 1, cy);
            let q01 = f.value(cx, cy + 1);
            let q11 = f.value(cx + 1, cy + 1);
            for sy in 0..2 {
                for sx in 0..2 {
                    for gy in [-g, g] {
                        for gx in [-g, g] {
                            // local coordinates in [0, 1]²
                            let u = 0.25 * (2.0 * sx as f64 + 1.0 + gx);
                            let v = 0.25 * (2.0 * sy as f64 + 1.0 + gy);
                            let dx: QTensor = ((q10 - q00) * (1.0 - v) + (q11 - q01) * v) * (1.0 / hx);
                            let dy: QTensor = ((q01 - q00) * (1.0 - u) + (q11 - q10) * u) * (1.0 / hy);
                            total += 0.25 * hx * hy / 4.0 * (dx.norm_sq() + dy.norm_sq());
                        }
                    }
                }
            }
        }
    }
    total
}

#[test]
fn blended_winding_elastic_energy() {
    let model = EnergyModel::new(
        BulkPotential::new(BulkParams::new(4.0, 5.0)).unwrap(),
        ElasticConstants::one_constant(1.0),
    );
    let f = make_field(GridSpec::square(17, 1.0), &BoundarySpec::winding(0.4, 1.0, 0.0), InteriorInit::Blend).unwrap();
    let b = total_energy(&f, &model).into_result().unwrap();
    let elastic = b.elastic_terms[0];
    assert!(elastic > 0.0);
    let oracle = dirichlet_energy_refined(&f);
    assert!((elastic - oracle).abs() <= 1e-12 * oracle, "{elastic} vs {oracle}");
    let pinned = 1.2893347489356;
    assert!((elastic - pinned).abs() <= 1e-10 * pinned, "elastic term {elastic:.13}");
}

#[test]
fn strongly_ordered_boundary_relaxes_inward() {
    let mut bulk = BulkParams::new(4.0, 5.0);
    bulk.quad_order = 128;
    let model = EnergyModel::new(BulkPotential::new(bulk).unwrap(), ElasticConstants::one_constant(1.0));
    let f0 = make_field(GridSpec::square(9, 1.0), &BoundarySpec::uniform(0.999, 0.0), InteriorInit::Blend).unwrap();
    let opts = ldg_core::minimizer::SolverOptions { grad_tol: 1e-5, ..Default::default() };
    let (f, report) = minimize(&f0, &mut Assembler::new(model), &opts).unwrap();
    assert_eq!(report.termination, Termination::Converged);
    let p = margin_profile(&f, &[0.0, 0.125, 0.25]).unwrap();
    assert!(p.margins[0] > 0.0 && p.margins[0] < 1e-3, "{:?}", p.margins);
    assert!(p.margins[1] > p.margins[0]);
    assert!(p.margins[2] > p.margins[1]);
}

#[test]
fn standard_winding_run_is_pinned() {
    let cfg = RunConfig::from_json_str(
        r#"{"grid": {"nx": 33, "ny": 33}, "boundary": {"s": 0.4},
            "elastic": {"L1": 1.0, "L2": 0.1, "L3": 0.1, "L4": 0.1, "L5": 0.0}}"#,
    )
    .unwrap();
    let field = cfg.initial_field(InteriorInit::Blend).unwrap();
    let (out, report) = minimize(&field, &mut Assembler::new(cfg.model().unwrap()), &cfg.solver).unwrap();
    assert_eq!(report.termination, Termination::Converged);
    let margin = margin_profile(&out, &[0.25]).unwrap().margins[0];
    assert!((report.final_energy - -8.4995573660).abs() < 1e-8, "energy {:.10}", report.final_energy);
    assert!((margin - 0.235146).abs() < 1e-6, "margin {margin:.7}");
}
