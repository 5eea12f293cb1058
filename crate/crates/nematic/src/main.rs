use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nematic_core::energy::{discrete_gradient, total_energy, Region};
use nematic_core::radial::solve_profile;
use nematic_core::solver::SolveReport;
use nematic_core::MaterialParams;

use nematic::config::ExperimentConfig;
use nematic::formats;
use nematic::pipeline::{self, OutputPlan, EXIT_CONFIG, EXIT_IO, EXIT_NON_FINITE};
use nematic::report::Report;
use nematic::verify;

#[derive(Parser)]
#[command(name = "nematic", version, about = "Landau-de Gennes point defect experiments")]
struct Cli {
    /// Worker threads for lattice sweeps (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Validate inputs and print the plan without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the ε ladder of a config and write the report bundle.
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the acceptance criteria stored in a report.
    Verify { report: PathBuf },
    /// Measure an existing field snapshot.
    Analyze {
        snapshot: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// ε of the snapshot when its header does not record one.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Solve the radial hedgehog profile and print it as CSV.
    Radial {
        #[arg(long, default_value_t = 1.0)]
        a2: f64,
        #[arg(long, default_value_t = 1.0)]
        b2: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        rmax: f64,
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(EXIT_CONFIG, e);
        }
    }
    match cli.command {
        Command::Run { config, out } => run(&config, out, cli.dry_run),
        Command::Verify { report } => verify_report(&report, cli.dry_run),
        Command::Analyze { snapshot, config, eps } => analyze(&snapshot, &config, eps, cli.dry_run),
        Command::Radial {
            a2,
            b2,
            c2,
            eps,
            rmax,
            nodes,
            out,
        } => radial(a2, b2, c2, eps, rmax, nodes, out, cli.dry_run),
    }
}

fn run(path: &std::path::Path, out: Option<PathBuf>, dry_run: bool) -> ExitCode {
    let (cfg, text) = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    if dry_run {
        return match pipeline::describe(&cfg) {
            Ok(plan) => {
                print!("{plan}");
                println!("report: {}", dir.join("report.json").display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG, e),
        };
    }
    match pipeline::run(&cfg, &text, &OutputPlan { dir: Some(dir.clone()) }) {
        Ok(report) => {
            for s in &report.stages {
                println!(
                    "eps={}: {} iterations, energy {:.6}, grad sup {:.3e}{}",
                    s.eps,
                    s.solve.iterations,
                    s.solve.energy.total,
                    s.solve.grad_sup,
                    if s.solve.converged { "" } else { " (not converged)" }
                );
            }
            println!("report: {}", dir.join("report.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let pipeline::RunError::Solver { partial, .. } = &e {
                let path = dir.join("report.json");
                if let Err(w) = std::fs::write(&path, partial.to_json()) {
                    eprintln!("error: cannot write failure record {}: {w}", path.display());
                }
            }
            fail(e.exit_code(), e)
        }
    }
}

fn verify_report(path: &std::path::Path, dry_run: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())),
    };
    let report = match Report::from_json(&text) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if dry_run {
        println!("report {} is valid; {} stages", path.display(), report.stages.len());
        return ExitCode::SUCCESS;
    }
    let results = verify::evaluate(&report);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn analyze(snapshot: &std::path::Path, config: &std::path::Path, eps: Option<f64>, dry_run: bool) -> ExitCode {
    let (cfg, _) = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let snap = match formats::read_snapshot(snapshot) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", snapshot.display())),
    };
    let Some(eps) = eps.or(snap.eps) else {
        return fail(EXIT_CONFIG, "snapshot records no eps; pass --eps");
    };
    let p = match cfg.params(eps) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if dry_run {
        let g = snap.field.grid();
        println!("snapshot: {} cells per axis, h = {}, eps = {eps}", g.n_cells(), g.spacing());
        return ExitCode::SUCCESS;
    }
    let mut field = snap.field;
    if let Some(r) = cfg.grid.ball_radius {
        field = field.mask_outside_ball(r);
    }
    let energy = match total_energy(&field, &p, &Region::Whole) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_NON_FINITE, e),
    };
    let h3 = field.grid().spacing().powi(3);
    let grad_sup = discrete_gradient(&field, &p)
        .iter()
        .zip(field.dirichlet_mask())
        .filter(|(_, fixed)| !**fixed)
        .map(|(g, _)| g.norm() / h3)
        .fold(0.0, f64::max);
    let solve = SolveReport {
        eps,
        iterations: 0,
        energy,
        grad_sup,
        history: Vec::new(),
        converged: grad_sup <= cfg.solver.grad_tol,
    };
    match pipeline::analyze_stage(&cfg, &field, &p, solve, None) {
        Ok(stage) => {
            println!("{}", serde_json::to_string_pretty(&stage).expect("stage serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.exit_code(), e),
    }
}

#[allow(clippy::too_many_arguments)]
fn radial(a2: f64, b2: f64, c2: f64, eps: f64, rmax: f64, nodes: usize, out: Option<PathBuf>, dry_run: bool) -> ExitCode {
    let p = match MaterialParams::new(a2, b2, c2, eps) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if dry_run {
        println!("radial profile: s+ = {}, eps = {eps}, r in [0, {rmax}], {nodes} nodes", p.s_plus());
        return ExitCode::SUCCESS;
    }
    let profile = match solve_profile(&p, rmax, nodes) {
        Ok(pr) => pr,
        Err(e) => return fail(EXIT_NON_FINITE, e),
    };
    let written = match &out {
        Some(path) => std::fs::File::create(path).and_then(|mut f| formats::write_profile(&mut f, &profile)),
        None => formats::write_profile(&mut std::io::stdout().lock(), &profile),
    };
    match written {
        Ok(()) => {
            eprintln!(
                "newton iterations {}, residual {:.2e}, energy {:.6}",
                profile.newton_iterations(),
                profile.residual(),
                profile.energy()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_IO, e),
    }
}
