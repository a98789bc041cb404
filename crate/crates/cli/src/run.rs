//! Command orchestration: build the problem and grids, run the requested
//! computation, write the CSV and its manifest.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use ufde::{
    alpha_path_problem, error_study, expected_value, extreme_value, fht_distribution, solve,
    sweep, AlphaGrid, Direction, DomainPolicy, ExtremeMode, MemoryMode, MonotoneMap, SolverConfig,
    StudyConfig, StudyKind, TimeGrid, UncertainProblem,
};

use crate::builtins::{self, ResolvedProblem};
use crate::expr::{self, Expr};
use crate::output::{self, GridManifest, ProblemManifest, RunManifest, SolverManifest};
use crate::{
    Cli, Command, DirectionArg, GridArgs, MemoryArg, ModeArg, PolicyArg, ProblemArgs, SolverArgs,
    VaryArg,
};

pub enum CliError {
    /// Bad flags or expressions: exit code 2.
    Usage(String),
    /// Domain, convergence or I/O failure during the run: exit code 3.
    Run { kind: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run { .. } => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.as_str()),
            CliError::Run { kind, message } => (kind.as_str(), message.as_str()),
        };
        json!({"error": {"kind": kind, "message": message}}).to_string()
    }
}

impl From<ufde::Error> for CliError {
    fn from(e: ufde::Error) -> Self {
        use ufde::Error::*;
        let kind = match &e {
            DuplicateNodes { .. } | WindowTooLarge { .. } | EmptyWindow => "window",
            InvalidNu { .. } | InvalidInterval { .. } | DegreeTooLarge { .. } => "domain",
            InvalidGrid(_) | InvalidConfig(_) => "config",
            RhsDomain { .. } | AlphaOutOfRange { .. } => "domain",
            NonFinite { .. } => "non_finite",
            SweepRow { .. } => "sweep",
            GridMismatch { .. } => "grid_mismatch",
            Precondition(_) => "precondition",
            NoConvergence { .. } | ToleranceNotMet { .. } => "convergence",
        };
        CliError::Run {
            kind: kind.to_string(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run {
            kind: "io".to_string(),
            message: e.to_string(),
        }
    }
}

struct BuiltProblem {
    uncertain: UncertainProblem,
    manifest: ProblemManifest,
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (name, value) = item.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--param expects NAME=VALUE, got '{item}'"))
        })?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Usage(format!("--param {name}: invalid number '{value}'")))?;
        out.insert(name.to_string(), value);
    }
    Ok(out)
}

fn parse_rhs(label: &str, src: &str) -> Result<Expr, CliError> {
    expr::parse_expression(src).map_err(|e| CliError::Usage(format!("in {label} '{src}': {e}")))
}

fn build_problem(args: &ProblemArgs, grid: &GridArgs) -> Result<BuiltProblem, CliError> {
    let params = parse_params(&args.params)?;
    let resolved = match (&args.builtin, &args.drift) {
        (Some(name), None) => {
            builtins::resolve(name, &params, args.x0).map_err(CliError::Usage)?
        }
        (None, Some(drift)) => {
            if !params.is_empty() {
                return Err(CliError::Usage(
                    "--param only applies to built-in problems".into(),
                ));
            }
            ResolvedProblem {
                source: "inline".to_string(),
                drift_src: drift.clone(),
                diffusion_src: args.diffusion.clone().unwrap_or_else(|| "0".to_string()),
                x0: args.x0.ok_or_else(|| {
                    CliError::Usage("--x0 is required for inline problems".into())
                })?,
                parameters: params,
            }
        }
        _ => {
            return Err(CliError::Usage(
                "specify a problem with --builtin or --drift [--diffusion]".into(),
            ))
        }
    };
    let drift = parse_rhs("--drift", &resolved.drift_src)?;
    let diffusion = parse_rhs("--diffusion", &resolved.diffusion_src)?;
    let uncertain = UncertainProblem::new(
        args.nu,
        Arc::new(drift),
        Arc::new(diffusion),
        resolved.x0,
        grid.t_start,
        grid.t_end,
    )?;
    Ok(BuiltProblem {
        uncertain,
        manifest: ProblemManifest {
            source: resolved.source,
            drift: resolved.drift_src,
            diffusion: resolved.diffusion_src,
            nu: args.nu,
            x0: resolved.x0,
            parameters: resolved.parameters,
        },
    })
}

fn solver_config(args: &SolverArgs) -> SolverConfig {
    SolverConfig {
        order: args.order,
        memory: match args.memory {
            MemoryArg::Full => MemoryMode::Full,
            MemoryArg::Increment => MemoryMode::Increment,
        },
        corrector_iterations: args.corrector_iters,
        bootstrap_refine: args.bootstrap_refine,
        domain_policy: match args.domain_policy {
            PolicyArg::Error => DomainPolicy::Error,
            PolicyArg::Clamp => DomainPolicy::Clamp,
        },
    }
}

fn solver_manifest(args: &SolverArgs) -> SolverManifest {
    SolverManifest {
        order: args.order,
        memory: match args.memory {
            MemoryArg::Full => "full",
            MemoryArg::Increment => "increment",
        }
        .to_string(),
        corrector_iterations: args.corrector_iters,
        bootstrap_refine: args.bootstrap_refine,
        domain_policy: match args.domain_policy {
            PolicyArg::Error => "error",
            PolicyArg::Clamp => "clamp",
        }
        .to_string(),
    }
}

fn time_grid(args: &GridArgs) -> Result<(TimeGrid, GridManifest), CliError> {
    let grid = TimeGrid::uniform(args.t_start, args.t_end, args.h)?;
    let manifest = GridManifest {
        t_start: args.t_start,
        t_end: args.t_end,
        h: args.h,
        nodes: grid.len(),
    };
    Ok((grid, manifest))
}

/// Parse "lo:step:hi" into its three numbers.
fn parse_range(label: &str, s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "{label} expects lo:step:hi, got '{s}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{label}: invalid number in '{s}'")))?;
    Ok((nums[0], nums[1], nums[2]))
}

fn alpha_grid(s: &str) -> Result<AlphaGrid, CliError> {
    let (lo, step, hi) = parse_range("--alpha-grid", s)?;
    Ok(AlphaGrid::uniform(lo, step, hi)?)
}

/// Evenly spaced values lo, lo+step, …, hi.
fn range_values(label: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let (lo, step, hi) = parse_range(label, s)?;
    if !(hi >= lo) || !(step > 0.0) {
        return Err(CliError::Usage(format!(
            "{label}: need lo <= hi and step > 0 in '{s}'"
        )));
    }
    let span = hi - lo;
    let n = (span / step).round();
    if span > 0.0 && (n * step - span).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "{label}: step does not divide the range in '{s}'"
        )));
    }
    let n = n as usize;
    let mut vals = Vec::with_capacity(n + 1);
    for i in 0..n {
        vals.push(lo + span * (i as f64 / n as f64));
    }
    vals.push(hi);
    Ok(vals)
}

fn monotone_map(src: &str, direction: Direction) -> Result<MonotoneMap, CliError> {
    let e = parse_rhs("--j", src)?;
    if uses_t(&e) {
        return Err(CliError::Usage(
            "--j must be an expression in x only".into(),
        ));
    }
    Ok(MonotoneMap::new(
        move |x| e.eval_clamped(0.0, x).0,
        direction,
    ))
}

fn uses_t(e: &Expr) -> bool {
    match e {
        Expr::T => true,
        Expr::Num(_) | Expr::X => false,
        Expr::Neg(a) | Expr::Call(_, a) => uses_t(a),
        Expr::Bin(_, a, b) => uses_t(a) || uses_t(b),
    }
}

fn finish(
    csv: &Path,
    manifest: RunManifest,
    summary: &str,
) -> Result<(), CliError> {
    output::write_manifest(csv, &manifest)?;
    println!(
        "{summary}; wrote {} and {}",
        csv.display(),
        output::manifest_path(csv).display()
    );
    Ok(())
}

pub fn dispatch(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            problem,
            solver,
            grid,
            alpha,
            out,
        } => {
            let built = build_problem(&problem, &grid)?;
            let (tg, gm) = time_grid(&grid)?;
            let config = solver_config(&solver);
            let deterministic = alpha_path_problem(&built.uncertain, alpha)?;
            let traj = solve(&deterministic, &tg, &config)?;
            output::write_trajectory(&out, &traj)?;
            let manifest = RunManifest {
                command: argv,
                version: env!("CARGO_PKG_VERSION").to_string(),
                problem: built.manifest,
                solver: solver_manifest(&solver),
                time_grid: gm,
                alpha_grid: None,
                analytics: Some(json!({"alpha": alpha, "clamped": traj.clamped})),
                determinism: RunManifest::determinism_note(),
                outputs: vec![out.display().to_string()],
            };
            finish(&out, manifest, &format!("X({}) = {}", grid.t_end, traj.last()))
        }
        Command::Surface {
            problem,
            solver,
            grid,
            alpha_grid: ag,
            out,
        } => {
            let built = build_problem(&problem, &grid)?;
            let (tg, gm) = time_grid(&grid)?;
            let config = solver_config(&solver);
            let alphas = alpha_grid(&ag)?;
            let surface = sweep(&built.uncertain, &alphas, &tg, &config)?;
            output::write_surface(&out, &surface)?;
            let manifest = RunManifest {
                command: argv,
                version: env!("CARGO_PKG_VERSION").to_string(),
                problem: built.manifest,
                solver: solver_manifest(&solver),
                time_grid: gm,
                alpha_grid: Some(format!("{ag} ({} levels)", alphas.len())),
                analytics: None,
                determinism: RunManifest::determinism_note(),
                outputs: vec![out.display().to_string()],
            };
            finish(
                &out,
                manifest,
                &format!("{} alpha-paths on {} nodes", alphas.len(), tg.len()),
            )
        }
        Command::Extreme {
            problem,
            solver,
            grid,
            alpha_grid: ag,
            j,
            j_direction,
            mode,
            out,
        } => {
            let built = build_problem(&problem, &grid)?;
            let (tg, gm) = time_grid(&grid)?;
            let config = solver_config(&solver);
            let alphas = alpha_grid(&ag)?;
            let direction = match j_direction {
                DirectionArg::Increasing => Direction::StrictlyIncreasing,
                DirectionArg::Decreasing => Direction::StrictlyDecreasing,
            };
            let map = monotone_map(&j, direction)?;
            let surface = sweep(&built.uncertain, &alphas, &tg, &config)?;
            let curve = extreme_value(
                &surface,
                &map,
                match mode {
                    ModeArg::Inf => ExtremeMode::Infimum,
                    ModeArg::Sup => ExtremeMode::Supremum,
                },
            )?;
            output::write_curve(&out, &curve)?;
            let manifest = RunManifest {
                command: argv,
                version: env!("CARGO_PKG_VERSION").to_string(),
                problem: built.manifest,
                solver: solver_manifest(&solver),
                time_grid: gm,
                alpha_grid: Some(format!("{ag} ({} levels)", alphas.len())),
                analytics: Some(json!({
                    "j": j,
                    "j_direction": match j_direction { DirectionArg::Increasing => "increasing", DirectionArg::Decreasing => "decreasing" },
                    "mode": match mode { ModeArg::Inf => "infimum", ModeArg::Sup => "supremum" },
                })),
                determinism: RunManifest::determinism_note(),
                outputs: vec![out.display().to_string()],
            };
            finish(&out, manifest, "extreme-value curve")
        }
        Command::Fht {
            problem,
            solver,
            grid,
            z,
            s_grid,
            j,
            out,
        } => {
            let built = build_problem(&problem, &grid)?;
            let (tg, gm) = time_grid(&grid)?;
            let config = solver_config(&solver);
            let horizons = range_values("--s-grid", &s_grid)?;
            let map = monotone_map(&j, Direction::StrictlyIncreasing)?;
            let curve = fht_distribution(&built.uncertain, &map, z, &horizons, &tg, &config)?;
            output::write_curve(&out, &curve)?;
            let manifest = RunManifest {
                command: argv,
                version: env!("CARGO_PKG_VERSION").to_string(),
                problem: built.manifest,
                solver: solver_manifest(&solver),
                time_grid: gm,
                alpha_grid: Some("0.01:0.01:0.99 (99 levels)".to_string()),
                analytics: Some(json!({"z": z, "s_grid": s_grid, "j": j})),
                determinism: RunManifest::determinism_note(),
                outputs: vec![out.display().to_string()],
            };
            finish(
                &out,
                manifest,
                &format!("FHT distribution over {} horizons", horizons.len()),
            )
        }
        Command::Expected {
            problem,
            solver,
            grid,
            alpha_grid: ag,
            j,
            out,
        } => {
            let built = build_problem(&problem, &grid)?;
            let (tg, gm) = time_grid(&grid)?;
            let config = solver_config(&solver);
            let alphas = alpha_grid(&ag)?;
            let map = monotone_map(&j, Direction::StrictlyIncreasing)?;
            let surface = sweep(&built.uncertain, &alphas, &tg, &config)?;
            let pairs: Vec<(f64, f64)> = (0..tg.len())
                .map(|idx| {
                    expected_value(&surface, &map, idx).map(|v| (tg.nodes()[idx], v))
                })
                .collect::<Result<_, _>>()?;
            output::write_pairs(&out, &pairs)?;
            let manifest = RunManifest {
                command: argv,
                version: env!("CARGO_PKG_VERSION").to_string(),
                problem: built.manifest,
                solver: solver_manifest(&solver),
                time_grid: gm,
                alpha_grid: Some(format!("{ag} ({} levels)", alphas.len())),
                analytics: Some(json!({"j": j})),
                determinism: RunManifest::determinism_note(),
                outputs: vec![out.display().to_string()],
            };
            finish(&out, manifest, "expected-value curve")
        }
        Command::ErrorStudy {
            problem,
            solver,
            grid,
            vary,
            values,
            out,
        } => {
            if let Some(name) = &problem.builtin {
                if name != "eg1" {
                    return Err(CliError::Usage(
                        "error-study runs the linear benchmark (eg1) only".into(),
                    ));
                }
            }
            if problem.drift.is_some() {
                return Err(CliError::Usage(
                    "error-study runs the linear benchmark (eg1); use --param to adjust it"
                        .into(),
                ));
            }
            let params = parse_params(&problem.params)?;
            let resolved = builtins::resolve("eg1", &params, problem.x0)
                .map_err(CliError::Usage)?;
            let study = StudyConfig {
                a: resolved.parameters["a"],
                b: resolved.parameters["b"],
                upsilon: resolved.parameters["upsilon"],
                nu: problem.nu,
                x0: resolved.x0,
                h: grid.h,
                t_end: grid.t_end,
                alphas: AlphaGrid::default_percent(),
                solver: solver_config(&solver),
            };
            let kind = match vary {
                VaryArg::N => StudyKind::VaryOrder,
                VaryArg::Nu => StudyKind::VaryNu,
                VaryArg::Upsilon => StudyKind::VaryUpsilon,
            };
            let vals: Vec<f64> = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| {
                    CliError::Usage(format!("--values: invalid number list '{values}'"))
                })?;
            let rows = error_study(kind, &vals, &study)?;
            output::write_study(&out, &rows)?;
            let (_, gm) = time_grid(&grid)?;
            let manifest = RunManifest {
                command: argv,
                version: env!("CARGO_PKG_VERSION").to_string(),
                problem: ProblemManifest {
                    source: resolved.source,
                    drift: resolved.drift_src,
                    diffusion: resolved.diffusion_src,
                    nu: problem.nu,
                    x0: resolved.x0,
                    parameters: resolved.parameters,
                },
                solver: solver_manifest(&solver),
                time_grid: gm,
                alpha_grid: Some("0.01:0.01:0.99 (99 levels)".to_string()),
                analytics: Some(json!({
                    "vary": match vary { VaryArg::N => "n", VaryArg::Nu => "nu", VaryArg::Upsilon => "upsilon" },
                    "values": vals,
                })),
                determinism: RunManifest::determinism_note(),
                outputs: vec![out.display().to_string()],
            };
            finish(&out, manifest, &format!("{} study rows", rows.len()))
        }
    }
}
