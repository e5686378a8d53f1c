//! `ldg`: minimize and verify constrained Landau–de Gennes Q-tensor energies.
//!
//! Exit status: 0 on success, 1 when a verification or solve fails, 2 on
//! usage, configuration or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldg_core::config::RunConfig;
use ldg_core::elastic::{coercivity, ElasticConstants};
use ldg_core::energy::{residual_from_gradient, Assembler};
use ldg_core::field::{Field, InteriorInit};
use ldg_core::maier_saupe::{BulkParams, BulkPotential, MaierSaupe, DEFAULT_QUAD_ORDER};
use ldg_core::minimizer::{minimize, Termination};
use ldg_core::qtensor::uniaxial;
use ldg_core::verifier::{blowup_scan, convexity_probe, margin_profile, refinement_study, BlowupPath};
use ldg_core::Error;

#[derive(Parser)]
#[command(name = "ldg", version, about = "Constrained Landau–de Gennes Q-tensor energies with the Maier–Saupe potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bulk potential on uniaxial states.
    #[command(subcommand)]
    Potential(PotentialCmd),
    /// Check the coercivity inequalities and sample c₀.
    Coercivity(CoercivityArgs),
    /// Minimize the energy for a configuration.
    Minimize(MinimizeArgs),
    /// Report energy and residual of a field, or run a verification probe.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BulkArgs {
    #[arg(long = "T", default_value_t = 4.0)]
    temperature: f64,
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    #[arg(long, default_value_t = DEFAULT_QUAD_ORDER)]
    quad_order: usize,
}

impl BulkArgs {
    fn potential(&self) -> Result<BulkPotential, Failure> {
        let params = BulkParams {
            temperature: self.temperature,
            kappa: self.kappa,
            quad_order: self.quad_order,
        };
        Ok(BulkPotential::new(params)?)
    }
}

#[derive(Subcommand)]
enum PotentialCmd {
    /// Evaluate at `uniaxial(s, e₃)`.
    Eval {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[command(flatten)]
        bulk: BulkArgs,
    },
    /// CSV table `s,f_ms,psi_b,margin` on an equispaced ladder.
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        s_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        s_max: f64,
        /// Number of points, endpoints included.
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        bulk: BulkArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CoercivityArgs {
    #[arg(long = "L1", allow_negative_numbers = true)]
    l1: f64,
    #[arg(long = "L2", allow_negative_numbers = true)]
    l2: f64,
    #[arg(long = "L3", allow_negative_numbers = true)]
    l3: f64,
    #[arg(long = "L4", allow_negative_numbers = true)]
    l4: f64,
    /// Random gradients used to estimate c₀.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MinimizeArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Initial field; its interior replaces the default blend.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Random interior perturbation of this amplitude, seeded by `solver.seed`.
    #[arg(long)]
    perturb: Option<f64>,
    /// Output field CSV.
    #[arg(long)]
    out: PathBuf,
    /// Trace CSV `iter,energy,grad_norm,step,margin`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads for assembly; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct VerifyArgs {
    #[command(subcommand)]
    probe: Option<Probe>,
    #[command(flatten)]
    field: FieldReportArgs,
}

#[derive(Args)]
struct FieldReportArgs {
    /// Field CSV `x,y,v1,v2,v3,v4,v5`.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Run configuration JSON supplying the energy model.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-node residual CSV `x,y,r1,r2,r3,r4,r5`.
    #[arg(long)]
    residual: Option<PathBuf>,
    /// Distance from the boundary below which residuals are not reported.
    #[arg(long, default_value_t = 0.0)]
    inset: f64,
    /// Fail when the residual l2 norm exceeds this value.
    #[arg(long)]
    max_residual: Option<f64>,
    /// Worker threads for assembly; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Probe {
    /// Minimum margin over nodes at each inset from the boundary.
    Margins {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.125, 0.25])]
        insets: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Midpoint convexity of f_ms and ψ_b + κ|Q|².
    Convexity {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0.01)]
        margin_floor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        bulk: BulkArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// f_ms along uniaxial ladders toward the edge of the physical set.
    Blowup {
        /// `uniaxial-positive`, `uniaxial-negative`, or `both`.
        #[arg(long, default_value = "both")]
        path: String,
        /// Ladder of s values; defaults to the standard ladder of each path.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        s: Option<Vec<f64>>,
        #[arg(long, default_value_t = 128)]
        quad_order: usize,
        /// Required rise of f_ms from the first to the last entry.
        #[arg(long, default_value_t = 1.0)]
        min_rise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on several grid sizes and compare diagnostics.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![17, 33])]
        sizes: Vec<usize>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    /// Exit 2.
    Usage(String),
    /// Exit 1.
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(_) | Error::Format { .. } | Error::Config { .. } | Error::Io { .. } => Failure::Usage(e.to_string()),
            Error::NearBoundary { .. } | Error::Convergence { .. } | Error::Infeasible { .. } => {
                Failure::Verification(e.to_string())
            }
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Potential(cmd) => potential(cmd),
        Command::Coercivity(args) => coercivity_cmd(args),
        Command::Minimize(args) => minimize_cmd(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("ldg: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("ldg: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Table to `out` if given, else to stdout.
fn emit_table(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Summary line on stderr; failure turns into exit 1.
fn verdict(name: &str, passed: bool, detail: &str) -> Outcome {
    eprintln!("{name}: {} ({detail})", if passed { "PASS" } else { "FAIL" });
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{name} verification failed")))
    }
}

fn potential(cmd: PotentialCmd) -> Outcome {
    match cmd {
        PotentialCmd::Eval { s, bulk } => {
            check_order_parameter(s)?;
            let pot = bulk.potential()?;
            let q = uniaxial(s, [0.0, 0.0, 1.0])?;
            let v = pot.evaluate(&q, None)?;
            let m = pot.maier_saupe().evaluate(&q, None)?.multipliers;
            println!("s = {s}");
            println!("f_ms = {:.15}", v.f_ms);
            println!("excess = {:.6e}", v.excess);
            println!("psi_b = {:.15}", v.psi_b);
            println!("margin = {:.15}", q.margin());
            println!("multipliers = {:.12} {:.12} {:.12}", m.lambda[0], m.lambda[1], m.lambda[2]);
            println!("newton_iterations = {}", m.iterations);
            Ok(())
        }
        PotentialCmd::Sweep {
            s_min,
            s_max,
            steps,
            bulk,
            out,
        } => {
            if steps < 2 || !(s_min < s_max) {
                return Err(Failure::Usage("sweep needs --steps ≥ 2 and --s-min < --s-max".into()));
            }
            check_order_parameter(s_min)?;
            check_order_parameter(s_max)?;
            let pot = bulk.potential()?;
            let mut text = String::from("s,f_ms,psi_b,margin\n");
            for k in 0..steps {
                let s = s_min + (s_max - s_min) * k as f64 / (steps - 1) as f64;
                let q = uniaxial(s, [0.0, 0.0, 1.0])?;
                let v = pot.evaluate(&q, None)?;
                text.push_str(&format!("{s:.16e},{:.16e},{:.16e},{:.16e}\n", v.f_ms, v.psi_b, q.margin()));
            }
            emit_table(out.as_deref(), &text)
        }
    }
}

fn check_order_parameter(s: f64) -> Outcome {
    if s > -0.5 && s < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("s = {s} is outside the physical range (-1/2, 1)")))
    }
}

fn coercivity_cmd(a: CoercivityArgs) -> Outcome {
    let l = ElasticConstants::new(a.l1, a.l2, a.l3, a.l4, 0.0);
    let r = coercivity(&l, a.samples, a.seed);
    let [i1, i2, i3] = r.inequality_values;
    println!("L1' = {:.15}", r.lprime1);
    println!("L1' + 5/3 L2 + 1/6 L3 = {i1:.15}");
    println!("L1' - 1/2 L3 = {i2:.15}");
    println!("L1' + L3 = {i3:.15}");
    println!("verdict = {}", if r.satisfied { "satisfied" } else { "violated" });
    if let Some(c0) = r.empirical_c0 {
        println!("empirical_c0 = {c0:.15} ({} samples, seed {})", a.samples, a.seed);
    }
    if r.satisfied {
        Ok(())
    } else {
        Err(Failure::Verification("coercivity inequalities violated".into()))
    }
}

fn assembler(cfg: &RunConfig, threads: Option<usize>) -> Result<Assembler, Failure> {
    let mut asm = Assembler::new(cfg.model()?);
    if let Some(t) = threads {
        asm = asm.with_threads(t)?;
    }
    Ok(asm)
}

fn minimize_cmd(a: MinimizeArgs) -> Outcome {
    let cfg = RunConfig::load(&a.config)?;
    let init = match a.perturb {
        Some(amplitude) => InteriorInit::Random {
            seed: cfg.solver.seed,
            amplitude,
        },
        None => InteriorInit::Blend,
    };
    let mut field = cfg.initial_field(init)?;
    if let Some(path) = &a.init {
        let given = Field::load_csv(path)?;
        if given.nx() != field.nx() || given.ny() != field.ny() {
            return Err(Failure::Usage(format!(
                "{}: grid {}×{} does not match the configured {}×{}",
                path.display(),
                given.nx(),
                given.ny(),
                field.nx(),
                field.ny()
            )));
        }
        for n in 0..field.len() {
            if !field.is_boundary(n) {
                field.set_interior(n, given.values()[n])?;
            }
        }
    }
    let mut asm = assembler(&cfg, a.threads)?;
    let (out, report) = minimize(&field, &mut asm, &cfg.solver)?;
    out.save_csv(&a.out)?;
    if let Some(t) = &a.trace {
        write_file(t, &report.trace_csv())?;
    }
    println!("termination = {}", report.termination.as_str());
    println!("iterations = {}", report.iterations);
    println!("energy = {:.15}", report.final_energy);
    println!("grad_norm = {:.6e}", report.final_grad_norm);
    println!("min_margin = {:.15}", report.final_margin);
    if report.termination == Termination::Converged {
        Ok(())
    } else {
        Err(Failure::Verification(format!("solver stopped: {}", report.termination.as_str())))
    }
}

fn verify(a: VerifyArgs) -> Outcome {
    match a.probe {
        None => field_report(a.field),
        Some(Probe::Margins { field, insets, out }) => {
            let f = Field::load_csv(&field)?;
            let p = margin_profile(&f, &insets)?;
            emit_table(out.as_deref(), &p.to_csv_string())?;
            let positive = p.margins.iter().all(|m| *m > 0.0);
            verdict(
                "margins",
                positive && p.is_monotone(),
                &format!("monotone: {}, all positive: {positive}", p.is_monotone()),
            )
        }
        Some(Probe::Convexity {
            samples,
            margin_floor,
            seed,
            tol,
            bulk,
            out,
        }) => {
            let r = convexity_probe(&bulk.potential()?, samples, margin_floor, seed)?;
            let text = format!(
                "function,samples,worst_violation\nf_ms,{samples},{:.6e}\npsi_b_plus_kappa_q2,{samples},{:.6e}\n",
                r.worst_f_ms, r.worst_semiconvex
            );
            emit_table(out.as_deref(), &text)?;
            verdict("convexity", r.passed(tol), &format!("tolerance {tol:e}"))
        }
        Some(Probe::Blowup {
            path,
            s,
            quad_order,
            min_rise,
            out,
        }) => {
            let paths = match path.as_str() {
                "both" => vec![BlowupPath::UniaxialPositive, BlowupPath::UniaxialNegative],
                p => vec![p.parse::<BlowupPath>()?],
            };
            if s.is_some() && paths.len() > 1 {
                return Err(Failure::Usage("--s needs a single --path".into()));
            }
            let ms = MaierSaupe::new(quad_order)?;
            let mut text = String::from("path,s,f_ms,margin\n");
            let mut passed = true;
            let mut details = Vec::new();
            for p in paths {
                let ladder = s.clone().unwrap_or_else(|| p.default_ladder());
                let t = blowup_scan(&ms, p, &ladder)?;
                for (s, f, m) in &t.rows {
                    text.push_str(&format!("{},{s:.16e},{f:.16e},{m:.16e}\n", p.as_str()));
                }
                passed &= t.passed(min_rise);
                details.push(format!("{}: increasing {}, rise {:.3}", p.as_str(), t.strictly_increasing(), t.rise()));
            }
            emit_table(out.as_deref(), &text)?;
            verdict("blowup", passed, &details.join("; "))
        }
        Some(Probe::Refine {
            config,
            sizes,
            threads,
            out,
        }) => {
            let cfg = RunConfig::load(&config)?;
            let study = refinement_study(&cfg, &sizes, threads)?;
            emit_table(out.as_deref(), &study.to_csv_string())?;
            verdict(
                "refine",
                study.passed(),
                &format!(
                    "converged: {}, residual decreasing: {}, margin stable: {}, energy stable: {}",
                    study.all_converged(),
                    study.residual_decreases(),
                    study.margin_stable(0.5),
                    study.energy_stable(0.02)
                ),
            )
        }
    }
}

fn field_report(a: FieldReportArgs) -> Outcome {
    let (Some(field), Some(config)) = (a.field, a.config) else {
        return Err(Failure::Usage("verify needs --field and --config, or a probe subcommand".into()));
    };
    let cfg = RunConfig::load(&config)?;
    let f = Field::load_csv(&field)?;
    if f.nx() != cfg.grid.nx || f.ny() != cfg.grid.ny {
        return Err(Failure::Usage(format!(
            "field grid {}×{} does not match the configured {}×{}",
            f.nx(),
            f.ny(),
            cfg.grid.nx,
            cfg.grid.ny
        )));
    }
    let mut asm = assembler(&cfg, a.threads)?;
    let (b, grad) = asm.energy_and_gradient(&f)?;
    let r = residual_from_gradient(&f, &grad, a.inset)?;
    for (k, e) in b.elastic_terms.iter().enumerate() {
        println!("elastic_L{} = {e:.15}", k + 1);
    }
    println!("entropy_term = {:.15}", b.entropy_term);
    println!("quadratic_term = {:.15}", b.quadratic_term);
    println!("total = {:.15}", b.total);
    println!("residual_inset = {}", r.inset);
    println!("residual_nodes = {}", r.nodes.len());
    println!("residual_l2 = {:.6e}", r.l2_norm);
    println!("residual_linf = {:.6e}", r.linf_norm);
    println!("min_margin = {:.15}", f.min_margin());
    if let Some(p) = &a.residual {
        write_file(p, &r.to_csv_string(&f))?;
    }
    match a.max_residual {
        Some(tol) => verdict("residual", r.l2_norm <= tol, &format!("l2 {:.3e}, limit {tol:e}", r.l2_norm)),
        None => Ok(()),
    }
}
