//! The experiment pipeline: solve the ε ladder and measure every stage.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nematic_core::analysis::{
    defect_report, degree, locate_core, sphere_director_map, sphere_sup_deviation, tangent_fit,
    Reference, ReportPlan,
};
use nematic_core::energy::{ball_ratio, radial_decay_integral, total_energy, Region};
use nematic_core::qtensor::SQRT_2_3;
use nematic_core::radial::solve_profile;
use nematic_core::solver::{minimize_observed, perturb_interior};
use nematic_core::{BlowupSpec, GridSpec, MaterialParams, QField, QTensor};

use crate::config::{BoundaryConfig, ConfigError, ExperimentConfig, InitialConfig};
use crate::formats;
use crate::report::{
    content_hash, BlowupReport, BlowupSphere, CoreSize, FailureRecord, RadiusValue, Report, StageReport, SCHEMA,
};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage} (eps = {eps}): {source}")]
    Solver {
        stage: usize,
        eps: f64,
        source: nematic_core::Error,
        partial: Box<Report>,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver { .. } => EXIT_NON_FINITE,
            RunError::Io { .. } => EXIT_IO,
        }
    }

    pub fn record(&self) -> FailureRecord {
        let (kind, stage) = match self {
            RunError::Config(_) => ("config", None),
            RunError::Solver { stage, .. } => ("solver", Some(*stage)),
            RunError::Io { .. } => ("io", None),
        };
        FailureRecord {
            kind: kind.to_string(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            stage,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Where side files go; `None` keeps the run in memory.
#[derive(Clone, Debug)]
pub struct OutputPlan {
    pub dir: Option<PathBuf>,
}

/// Human-readable description of what `run` would do.
pub fn describe(cfg: &ExperimentConfig) -> Result<String, ConfigError> {
    cfg.validate()?;
    let g = cfg.grid_spec()?;
    let p = cfg.params(cfg.ladder.eps[0])?;
    let mut s = String::new();
    let _ = writeln!(s, "material: a2={} b2={} c2={} (s+ = {}, C = {})", cfg.material.a2, cfg.material.b2, cfg.material.c2, p.s_plus(), p.c_offset());
    let _ = writeln!(s, "grid: {} cells per axis, half width {}, h = {}, {} nodes", g.n_cells(), g.half_width(), g.spacing(), g.len());
    match cfg.grid.ball_radius {
        Some(r) => {
            let _ = writeln!(s, "domain: ball of radius {r}, Dirichlet data outside");
        }
        None => {
            let _ = writeln!(s, "domain: whole box, Dirichlet data on the outer layer");
        }
    }
    let _ = writeln!(s, "boundary: {:?}", cfg.boundary);
    let _ = writeln!(s, "initial: {:?}", cfg.initial);
    let _ = writeln!(s, "solver: max_iters={} grad_tol={} seed={}", cfg.solver.max_iters, cfg.solver.grad_tol, cfg.solver.seed);
    for (i, e) in cfg.ladder.eps.iter().enumerate() {
        let _ = writeln!(
            s,
            "stage {i}: eps = {e}, r_n = {:.6}, blow-up spheres at {:?} eps",
            e.powf(cfg.analysis.r_n_exponent),
            cfg.analysis.blowup_radii
        );
    }
    let _ = writeln!(s, "output: {}", cfg.output.dir.display());
    Ok(s)
}

/// Boundary map sampled on the grid with the configured Dirichlet set.
pub fn boundary_field(cfg: &ExperimentConfig, grid: GridSpec, s_plus: f64) -> QField {
    let b = cfg.boundary.clone();
    let f = QField::sample(grid, |x| b.tensor_at(x, s_plus));
    match cfg.grid.ball_radius {
        Some(r) => f.mask_outside_ball(r),
        None => f,
    }
}

fn reference(cfg: &ExperimentConfig, s_plus: f64) -> Reference {
    match &cfg.boundary {
        BoundaryConfig::Constant { director } => Reference::Constant(QTensor::uniaxial_normalized(*director, s_plus)),
        b => Reference::Hedgehog {
            rotation: b.rotation().expect("validated boundary"),
        },
    }
}

fn stage_tag(eps: f64) -> String {
    format!("eps{eps}")
}

/// Runs the configured experiment. Side files are written under
/// `out.dir` when it is set.
pub fn run(cfg: &ExperimentConfig, config_text: &str, out: &OutputPlan) -> Result<Report, RunError> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let first = cfg.params(cfg.ladder.eps[0])?;
    let s_plus = first.s_plus();
    if let Some(dir) = &out.dir {
        std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }

    let mut report = Report {
        schema: SCHEMA.to_string(),
        config_toml: config_text.to_string(),
        config: cfg.clone(),
        input_hash: content_hash(config_text.as_bytes()),
        s_plus,
        c_offset: first.c_offset(),
        grid_spacing: grid.spacing(),
        stages: Vec::new(),
        failure: None,
    };

    let mut field = boundary_field(cfg, grid, s_plus);
    if let InitialConfig::Perturbed { amplitude } = cfg.initial {
        perturb_interior(&mut field, amplitude, cfg.solver.seed);
    }
    let solver = cfg.solver.solver_config();

    for (stage, &eps) in cfg.ladder.eps.iter().enumerate() {
        let p = cfg.params(eps)?;
        let every = cfg.solver.checkpoint_every;
        let ckpt_dir = out.dir.as_ref().map(|d| d.join("checkpoints"));
        if let (true, Some(d)) = (every > 0, &ckpt_dir) {
            std::fs::create_dir_all(d).map_err(io_err(format!("creating {}", d.display())))?;
        }
        let mut ckpt_error = None;
        let mut observer = |k: usize, f: &QField| {
            if let Some(d) = &ckpt_dir {
                let path = d.join(format!("{}_iter{k}.csv", stage_tag(eps)));
                if let Err(e) = formats::write_snapshot(&path, f, Some(eps)) {
                    ckpt_error.get_or_insert((path, e));
                }
            }
        };
        let solve = match minimize_observed(&mut field, &p, &solver, every, &mut observer) {
            Ok(s) => s,
            Err(source) => {
                let message = format!("stage {stage} (eps = {eps}): {source}");
                report.failure = Some(FailureRecord {
                    kind: "solver".to_string(),
                    message,
                    exit_code: EXIT_NON_FINITE,
                    stage: Some(stage),
                });
                return Err(RunError::Solver {
                    stage,
                    eps,
                    source,
                    partial: Box::new(report),
                });
            }
        };
        if let Some((path, e)) = ckpt_error {
            return Err(io_err(format!("writing {}", path.display()))(e));
        }
        let stage_report = analyze_stage(cfg, &field, &p, solve, out.dir.as_deref())?;
        report.stages.push(stage_report);
    }

    if let Some(dir) = &out.dir {
        let path = dir.join("report.json");
        std::fs::write(&path, report.to_json()).map_err(io_err(format!("writing {}", path.display())))?;
        let rows: Vec<(f64, f64)> = report
            .stages
            .iter()
            .filter_map(|s| {
                s.defect
                    .as_ref()
                    .and_then(|d| d.annulus_sup.first())
                    .map(|a| (s.eps, a.sup_deviation))
            })
            .collect();
        let path = dir.join("annulus_sup.csv");
        formats::write_table(&path, "eps,annulus_sup", &rows).map_err(io_err(format!("writing {}", path.display())))?;
    }
    Ok(report)
}

/// All measurements on one converged field.
pub fn analyze_stage(
    cfg: &ExperimentConfig,
    field: &QField,
    p: &MaterialParams,
    solve: nematic_core::solver::SolveReport,
    out_dir: Option<&Path>,
) -> Result<StageReport, RunError> {
    let a = &cfg.analysis;
    let grid = *field.grid();
    let s_plus = p.s_plus();
    let eps = p.eps();
    let r_n = eps.powf(a.r_n_exponent);
    let tag = stage_tag(eps);

    let mut reference_field = boundary_field(cfg, grid, s_plus);
    for m in 0..grid.len() {
        if field.is_dirichlet(m) != reference_field.is_dirichlet(m) {
            reference_field.set_dirichlet(m, field.is_dirichlet(m));
        }
    }
    let reference_energy = total_energy(&reference_field, p, &Region::Whole)
        .map(|e| e.total)
        .unwrap_or(f64::NAN);

    let ball_ratios: Vec<RadiusValue> = a
        .ball_radii
        .iter()
        .filter_map(|&r| ball_ratio(field, p, r, false).ok().map(|value| RadiusValue { radius: r, value }))
        .collect();

    let core = locate_core(field, s_plus);
    let max_dist = s_plus * SQRT_2_3;
    let mut annuli = vec![(a.annulus_inner, a.annulus_outer)];
    if r_n >= 2.0 * grid.spacing() && r_n < a.annulus_outer {
        annuli.push((r_n, a.annulus_outer));
    }
    let plan = ReportPlan {
        deltas: a.delta_fractions.iter().map(|f| f * max_dist).collect(),
        sphere_radii: a.sphere_radii.clone(),
        level: a.level,
        gap_min: a.gap_min,
        annuli,
        reference: reference(cfg, s_plus),
        reference_center: grid.center(),
    };
    let (defect, analysis_failure) = match defect_report(field, s_plus, &plan) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let profile = match cfg.boundary {
        BoundaryConfig::Constant { .. } => None,
        _ => {
            let outer = cfg.grid.ball_radius.unwrap_or(cfg.grid.half_width);
            solve_profile(p, outer.max(20.0 * eps), a.radial_nodes).ok()
        }
    };
    let core_sizes = defect
        .as_ref()
        .map(|d| {
            d.core_diameters
                .iter()
                .map(|c| CoreSize {
                    fraction: c.delta / max_dist,
                    delta: c.delta,
                    measured: c.diameter,
                    predicted: profile.as_ref().and_then(|pr| pr.predicted_core_diameter(c.delta)),
                })
                .collect()
        })
        .unwrap_or_default();

    let decay: Vec<RadiusValue> = a
        .decay_radii
        .iter()
        .filter_map(|&r| {
            radial_decay_integral(field, core.position, r)
                .ok()
                .map(|value| RadiusValue { radius: r, value })
        })
        .collect();
    let drift = nematic_core::analysis::dyadic_drift(field, core.position, a.drift_r0, a.drift_levels, a.level).ok();

    let blowup = blowup_report(cfg, field, core.position, s_plus, eps, out_dir, &tag)?;

    if let Some(dir) = out_dir {
        let rows: Vec<(f64, f64)> = ball_ratios.iter().map(|r| (r.radius, r.value)).collect();
        let path = dir.join(format!("ball_ratio_{tag}.csv"));
        formats::write_table(&path, "R,ball_ratio", &rows).map_err(io_err(format!("writing {}", path.display())))?;
        let rows: Vec<(f64, f64)> = decay.iter().map(|r| (r.radius, r.value)).collect();
        let path = dir.join(format!("decay_{tag}.csv"));
        formats::write_table(&path, "R,decay_integral", &rows).map_err(io_err(format!("writing {}", path.display())))?;
        if let Some(pr) = &profile {
            let path = dir.join(format!("profile_{tag}.csv"));
            let mut f = std::fs::File::create(&path).map_err(io_err(format!("writing {}", path.display())))?;
            formats::write_profile(&mut f, pr).map_err(io_err(format!("writing {}", path.display())))?;
        }
        if cfg.output.snapshots {
            let path = dir.join(format!("field_{tag}.csv"));
            formats::write_snapshot(&path, field, Some(eps)).map_err(io_err(format!("writing {}", path.display())))?;
        }
        if cfg.output.director_maps {
            for &r in &a.sphere_radii {
                if let Ok(map) = sphere_director_map(field, core.position, r, a.level, a.gap_min) {
                    let path = dir.join(format!("directors_{tag}_r{r}.csv"));
                    formats::write_director_map(&path, &map)
                        .map_err(io_err(format!("writing {}", path.display())))?;
                }
            }
        }
    }

    Ok(StageReport {
        eps,
        r_n,
        solve,
        reference_energy,
        ball_ratios,
        defect,
        analysis_failure,
        core_sizes,
        decay,
        drift,
        blowup,
    })
}

/// Resamples `y ↦ Q(core + ε y)` at matching resolution and measures the
/// configured blow-up spheres.
fn blowup_report(
    cfg: &ExperimentConfig,
    field: &QField,
    core: [f64; 3],
    s_plus: f64,
    eps: f64,
    out_dir: Option<&Path>,
    tag: &str,
) -> Result<Option<BlowupReport>, RunError> {
    let a = &cfg.analysis;
    let grid = field.grid();
    let largest = a.blowup_radii.iter().cloned().fold(0.0, f64::max);
    let reach = (grid.hull_clearance(core) / eps) * (1.0 - 1e-9);
    let half_width = (1.1 * largest).min(reach);
    let h_y = grid.spacing() / eps;
    let n_cells = ((2.0 * half_width / h_y).ceil() as usize).clamp(GridSpec::MIN_CELLS.max(16), 256);
    let Ok(target) = GridSpec::centered(half_width, n_cells) else {
        return Ok(None);
    };
    let Ok(spec) = BlowupSpec::new(core, eps, target) else {
        return Ok(None);
    };
    let Ok(blown) = field.extract_blowup(&spec) else {
        return Ok(None);
    };

    let mut spheres = Vec::new();
    for &k in &a.blowup_radii {
        let mut entry = BlowupSphere {
            radius: k,
            degree: None,
            fit: None,
            sup_deviation: None,
            failure: None,
        };
        match sphere_director_map(&blown, [0.0; 3], k, a.level, a.gap_min) {
            Ok(map) => {
                match degree(&map) {
                    Ok(d) => entry.degree = Some(d),
                    Err(e) => entry.failure = Some(e.to_string()),
                }
                match tangent_fit(&map) {
                    Ok(fit) => {
                        entry.sup_deviation =
                            sphere_sup_deviation(&blown, [0.0; 3], k, a.level, &fit.rotation, s_plus).ok();
                        entry.fit = Some(fit);
                    }
                    Err(e) => {
                        entry.failure.get_or_insert(e.to_string());
                    }
                }
                if let (true, Some(dir)) = (cfg.output.director_maps, out_dir) {
                    let path = dir.join(format!("directors_{tag}_blowup{k}.csv"));
                    formats::write_director_map(&path, &map).map_err(io_err(format!("writing {}", path.display())))?;
                }
            }
            Err(e) => entry.failure = Some(e.to_string()),
        }
        spheres.push(entry);
    }
    Ok(Some(BlowupReport {
        center: core,
        scale: eps,
        half_width,
        n_cells,
        spheres,
    }))
}
