use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{self, CommandName, ExperimentKind, InvertConfig, ProblemConfig, RunConfig, TimeGrid};
use super::output::{format_number as num, FileRecord, Output};
use super::{Cli, CliError};
use crate::forward::{kernel, solve_forward, Endpoint, ForwardOptions, SolutionField};
use crate::fraccalc::{FractionalOrder, Signal};
use crate::harness::{distinguishability, eigenvalue_matching, unique_continuation, HarnessConfig, Regularization};
use crate::inverse::{
    estimate_order, extract_spectral, recover_potential, residue_at, Basis, ExtractOptions, OrderOptions,
    PotentialOptions, SpectralTarget,
};
use crate::mlf::mittag_leffler;
use crate::sturm::{eigen_solve_on, Potential, SpectralData};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<FileRecord>,
    pub summary: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: Output,
    summary: Vec<String>,
}

fn problem(cfg: &RunConfig) -> &ProblemConfig {
    cfg.problem.as_ref().expect("validated")
}

fn forward_options(cfg: &RunConfig) -> ForwardOptions<f64> {
    ForwardOptions {
        tail: problem(cfg).tail,
        tail_tol: cfg.tolerances.tail,
    }
}

fn order(a: f64) -> Result<FractionalOrder<f64>, CliError> {
    FractionalOrder::with_classical(a).map_err(|e| CliError::from_library(e).with_field("problem.alpha"))
}

fn spectra_rows(lambdas: &[f64], norming: &[f64]) -> Vec<Vec<String>> {
    lambdas
        .iter()
        .zip(norming)
        .enumerate()
        .map(|(i, (l, r))| vec![(i + 1).to_string(), num(*l), num(*r)])
        .collect()
}

fn trace_rows(s: &Signal<f64>) -> Vec<Vec<String>> {
    s.times()
        .iter()
        .zip(s.values())
        .map(|(t, v)| vec![num(*t), num(*v)])
        .collect()
}

fn field_rows(u: &SolutionField<f64>) -> Vec<Vec<String>> {
    let times = u.times();
    let mut rows = Vec::with_capacity(u.grid.len() * times.len());
    for (j, x) in u.grid.iter().enumerate() {
        for (k, t) in times.iter().enumerate() {
            rows.push(vec![num(*x), num(*t), num(u.value(j, k))]);
        }
    }
    rows
}

fn spectrum(cfg: &RunConfig) -> Result<(Potential<f64>, SpectralData<f64>), CliError> {
    let pc = problem(cfg);
    let p = pc.potential.build(pc.cells, "problem.potential")?;
    let spec = eigen_solve_on(&p, pc.cells, pc.modes, pc.refine)?;
    Ok((p, spec))
}

fn cmd_solve(ctx: &mut Ctx) -> Result<(), CliError> {
    let pc = problem(ctx.cfg);
    let (_, spec) = spectrum(ctx.cfg)?;
    let g = pc.g.build(pc.horizon, pc.steps)?;
    let u = solve_forward(&spec, order(pc.alpha)?, &g, &forward_options(ctx.cfg))?;
    let u = u.subsample(spec.cells() / pc.cells)?;
    let (x0, x1) = (u.trace(Endpoint::Zero), u.trace(Endpoint::One));
    ctx.out.csv("trace_x0.csv", &["t", "value"], trace_rows(&x0))?;
    ctx.out.csv("trace_x1.csv", &["t", "value"], trace_rows(&x1))?;
    ctx.out.csv("field.csv", &["x", "t", "value"], field_rows(&u))?;
    ctx.out.csv(
        "spectra.csv",
        &["n", "lambda", "rho"],
        spectra_rows(&spec.lambdas, &spec.norming),
    )?;
    ctx.summary
        .push(format!("u(0, T) = {}", num(*x0.values().last().expect("samples"))));
    ctx.summary
        .push(format!("u(1, T) = {}", num(*x1.values().last().expect("samples"))));
    ctx.summary
        .push(format!("mode tail estimate at x = 1: {}", num(u.tail_estimate)));
    if u.truncation_warning {
        ctx.summary
            .push("warning: mode tail exceeds the configured tolerance".into());
    }
    Ok(())
}

fn cmd_kernel(ctx: &mut Ctx) -> Result<(), CliError> {
    let pc = problem(ctx.cfg);
    let kc = ctx.cfg.kernel.clone().unwrap_or_default();
    let (_, spec) = spectrum(ctx.cfg)?;
    let times = kc.times.build(pc.horizon, pc.steps, "kernel.times")?;
    let table = kernel(&spec, order(pc.alpha)?, &times, &kc.x, &forward_options(ctx.cfg))?;
    let mut rows = Vec::new();
    for (i, x) in table.xs.iter().enumerate() {
        for (t, v) in table.times.iter().zip(&table.values[i]) {
            rows.push(vec![num(*x), num(*t), num(*v)]);
        }
    }
    ctx.out.csv("kernel.csv", &["x", "t", "K"], rows)?;
    let limits = table
        .xs
        .iter()
        .zip(&table.limit)
        .map(|(x, l)| vec![num(*x), num(*l)])
        .collect::<Vec<_>>();
    ctx.out.csv("kernel_limit.csv", &["x", "K_inf"], limits)?;
    for (x, l) in table.xs.iter().zip(&table.limit) {
        ctx.summary.push(format!("K({x}, inf) = {}", num(*l)));
    }
    Ok(())
}

fn cmd_mlf(ctx: &mut Ctx) -> Result<(), CliError> {
    let m = ctx.cfg.mlf.as_ref().expect("validated");
    let mut rows = Vec::with_capacity(m.z.len());
    for z in &m.z {
        let v = mittag_leffler(m.gamma1, m.gamma2, *z).map_err(|e| CliError::from_library(e).with_field("mlf.z"))?;
        rows.push(vec![num(m.gamma1), num(m.gamma2), num(*z), num(v)]);
    }
    ctx.summary
        .push(format!("{} values of E_({}, {})", rows.len(), m.gamma1, m.gamma2));
    ctx.out.csv("mlf.csv", &["gamma1", "gamma2", "z", "value"], rows)
}

/// Times, values and (if known) the long-time limit.
type KernelSamples = (Vec<f64>, Vec<f64>, Option<f64>);

/// K(1, t) samples: from the data file, or synthesised from the problem.
fn kernel_data(
    cfg: &RunConfig,
    inv: &InvertConfig,
    default_times: TimeGrid,
    default_modes: usize,
) -> Result<KernelSamples, CliError> {
    if let Some(path) = &inv.data_file {
        let (t, v) = config::read_pairs(path, "invert.data_file")?;
        return Ok((t, v, inv.limit));
    }
    let pc = problem(cfg);
    let (_, spec) = spectrum(cfg)?;
    let modes = inv.kernel_modes.unwrap_or(default_modes).clamp(1, spec.modes());
    let spec = spec.truncated(modes);
    let times = inv
        .times
        .clone()
        .unwrap_or(default_times)
        .build(pc.horizon, pc.steps, "invert.times")?;
    let table = kernel(&spec, order(pc.alpha)?, &times, &[1.0], &forward_options(cfg))?;
    Ok((
        times,
        table.values[0].clone(),
        Some(inv.limit.unwrap_or(table.limit[0])),
    ))
}

fn cmd_invert_order(ctx: &mut Ctx) -> Result<(), CliError> {
    let inv = ctx.cfg.invert.clone().unwrap_or_default();
    let grid = TimeGrid::Log {
        from: 1e2,
        to: 1e12,
        count: 100,
    };
    let (times, values, limit) = kernel_data(ctx.cfg, &inv, grid, problem(ctx.cfg).modes)?;
    let est = estimate_order(&times, &values, limit, &OrderOptions::default())?;
    let rows = times
        .iter()
        .zip(&values)
        .map(|(t, v)| vec![num(*t), num(*v), num(est.limit - v)])
        .collect::<Vec<_>>();
    ctx.out.csv("deficit.csv", &["t", "K", "deficit"], rows)?;
    ctx.out.json("order.json", &est)?;
    ctx.summary.push(format!(
        "alpha estimate {} (slope s.e. {:.2e})",
        num(est.alpha),
        est.uncertainty
    ));
    Ok(())
}

fn cmd_invert_spectral(ctx: &mut Ctx) -> Result<(), CliError> {
    let inv = ctx.cfg.invert.clone().unwrap_or_default();
    let modes = inv.modes.unwrap_or(2);
    let grid = TimeGrid::Log {
        from: 1e-4,
        to: 1e4,
        count: 160,
    };
    let (times, values, _) = kernel_data(ctx.cfg, &inv, grid, problem(ctx.cfg).modes)?;
    let opts = ExtractOptions {
        seed: ctx.cfg.seed,
        random_starts: inv.random_starts,
        ..ExtractOptions::default()
    };
    let alpha = problem(ctx.cfg).alpha;
    let fit = extract_spectral(&times, &values, alpha, modes, &opts)?;
    let mut residues = Vec::new();
    if let Some(model) = &fit.model {
        for m in 1..=model.len() {
            let gaps = [
                if m > 1 {
                    model.lambdas[m - 1] - model.lambdas[m - 2]
                } else {
                    f64::INFINITY
                },
                if m < model.len() {
                    model.lambdas[m] - model.lambdas[m - 1]
                } else {
                    f64::INFINITY
                },
            ];
            let radius = (0.25 * gaps[0].min(gaps[1])).min(0.5 * model.lambdas[m - 1]);
            residues.push(residue_at(model, m, radius)?.re);
        }
        ctx.out.csv(
            "spectra.csv",
            &["n", "lambda", "rho"],
            spectra_rows(&model.lambdas, &model.norming()),
        )?;
        let rows = times
            .iter()
            .zip(&values)
            .map(|(t, v)| {
                let m = model.kernel_at(alpha, *t)?;
                Ok(vec![num(*t), num(*v), num(m), num(m - v)])
            })
            .collect::<Result<Vec<_>, crate::error::Error>>()?;
        ctx.out
            .csv("fit_residual.csv", &["t", "data", "model", "residual"], rows)?;
        for (i, (l, w)) in model.lambdas.iter().zip(&model.weights).enumerate() {
            ctx.summary.push(format!(
                "lambda_{} = {}  weight = {}  residue = {}",
                i + 1,
                num(*l),
                num(*w),
                num(residues[i])
            ));
        }
    } else {
        ctx.summary.push("data vanish identically: degenerate fit".into());
    }
    ctx.out
        .json("model.json", &json!({ "fit": fit, "residues": residues }))?;
    Ok(())
}

fn cmd_invert_potential(ctx: &mut Ctx) -> Result<(), CliError> {
    let pc = problem(ctx.cfg);
    let inv = ctx.cfg.invert.clone().unwrap_or_default();
    let modes = inv.modes.unwrap_or(5);
    let target = match &inv.target_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            let spec: SpectralData<f64> = serde_json::from_str(&text)
                .map_err(|e| CliError::config(Some("invert.target_file".into()), e.to_string()))?;
            spec.validate()
                .map_err(|e| CliError::from_library(e).with_field("invert.target_file"))?;
            SpectralTarget::from_spectral(&spec.truncated(modes))
        }
        None => {
            let p = pc.potential.build(pc.cells, "problem.potential")?;
            SpectralTarget::from_spectral(&eigen_solve_on(&p, pc.cells, modes, pc.refine)?)
        }
    };
    let basis = inv.basis.unwrap_or(Basis::PiecewiseConstant { pieces: 2 });
    let opts = PotentialOptions {
        cells: crate::sturm::eigen_grid_cells(pc.cells, target.len()),
        refine: pc.refine,
        reg: ctx.cfg.tolerances.regularization,
        tol: ctx.cfg.tolerances.potential,
        ..PotentialOptions::default()
    };
    let fit = recover_potential(&target, basis, &opts)?;
    let p = fit.potential.resample(pc.cells)?;
    let rows = p
        .grid()
        .iter()
        .zip(p.samples())
        .map(|(x, v)| vec![num(*x), num(*v)])
        .collect::<Vec<_>>();
    ctx.out.csv("potential.csv", &["x", "p"], rows)?;
    let hist = fit
        .history
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v)])
        .collect::<Vec<_>>();
    ctx.out.csv("history.csv", &["iteration", "objective"], hist)?;
    ctx.out.json("fit.json", &fit)?;
    ctx.summary.push(format!(
        "coefficients {:?}, objective {:.3e}, converged {}",
        fit.coefficients, fit.objective, fit.converged
    ));
    Ok(())
}

fn harness_config(cfg: &RunConfig) -> HarnessConfig<f64> {
    let pc = problem(cfg);
    HarnessConfig {
        cells: pc.cells,
        modes: pc.modes,
        refine: pc.refine,
        forward: forward_options(cfg),
        ..HarnessConfig::default()
    }
}

fn cmd_experiment(ctx: &mut Ctx) -> Result<(), CliError> {
    let pc = problem(ctx.cfg);
    let ec = ctx.cfg.experiment.clone().expect("validated");
    let hc = harness_config(ctx.cfg);
    let p = pc.potential.build(pc.cells, "problem.potential")?;
    let q = match &pc.q_potential {
        Some(spec) => spec.build(pc.cells, "problem.q_potential")?,
        None => p.clone(),
    };
    let g = pc.g.build(pc.horizon, pc.steps)?;
    match ec.kind {
        ExperimentKind::Distinguishability => {
            let endpoint = Endpoint::from_index(ec.endpoint)?;
            let beta = pc.beta.unwrap_or(pc.alpha);
            let r = distinguishability(&p, pc.alpha, &q, beta, &g, endpoint, &hc)?;
            let rows = r
                .endpoints
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let verdict = serde_json::to_value(e.verdict)
                        .expect("enum")
                        .as_str()
                        .unwrap_or("")
                        .to_string();
                    vec![i.to_string(), num(e.gap), num(e.tolerance), verdict]
                })
                .collect::<Vec<_>>();
            ctx.out
                .csv("gaps.csv", &["endpoint", "gap", "tolerance", "verdict"], rows)?;
            ctx.summary.push(format!(
                "gap {:.4e}, tolerance {:.4e}, verdict {:?}",
                r.gap, r.tolerance, r.verdict
            ));
            ctx.out.json("report.json", &strip_runtime(&r))?;
        }
        ExperimentKind::UniqueContinuation => {
            let reg = ec.regularization.map_or(Regularization::LCurve, Regularization::Fixed);
            let r = unique_continuation(&p, pc.alpha, &g, reg, &hc)?;
            if let Some(d) = &r.deconvolution {
                let rows = g
                    .times()
                    .iter()
                    .zip(g.values())
                    .zip(&d.estimate)
                    .map(|((t, gv), e)| vec![num(*t), num(*gv), num(*e)])
                    .collect::<Vec<_>>();
                ctx.out.csv("deconvolution.csv", &["t", "g", "estimate"], rows)?;
                ctx.summary
                    .push(format!("deconvolution relative error {:.3e}", d.relative_error));
            }
            ctx.summary.push(format!(
                "trace ratio |u(0)|/|u(1)| = {:.6}, consistent {}",
                r.ratio, r.consistent
            ));
            ctx.out.json("report.json", &strip_runtime(&r))?;
        }
        ExperimentKind::EigenvalueMatching => {
            let a = eigen_solve_on(&p, pc.cells, pc.modes, pc.refine)?;
            let b = eigen_solve_on(&q, pc.cells, pc.modes, pc.refine)?;
            let r = eigenvalue_matching(&a, &b)?;
            let rows = r
                .lambda_differences
                .iter()
                .zip(&r.norming_differences)
                .enumerate()
                .map(|(i, (l, n))| vec![(i + 1).to_string(), num(*l), num(*n)])
                .collect::<Vec<_>>();
            ctx.out
                .csv("matching.csv", &["n", "lambda_difference", "rho_difference"], rows)?;
            ctx.summary.push(format!(
                "max |lambda - mu| = {:.3e}, max |rho - sigma| = {:.3e}",
                r.max_lambda_difference, r.max_norming_difference
            ));
            ctx.out.json("report.json", &r)?;
        }
    }
    Ok(())
}

/// Report JSON without wall-clock fields, so repeated runs are byte-identical.
fn strip_runtime<S: Serialize>(r: &S) -> Value {
    let mut v = serde_json::to_value(r).expect("report serialises");
    if let Some(o) = v.as_object_mut() {
        o.remove("runtime_seconds");
    }
    v
}

fn load(cli: &Cli) -> Result<(RunConfig, Value), CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::config(Some("--config".into()), format!("{}: {e}", cli.config.display())))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(None, format!("{}: {e}", cli.config.display())))?;
    for o in &cli.overrides {
        config::apply_override(&mut doc, o)?;
    }
    if let Some(seed) = cli.seed {
        config::apply_override(&mut doc, &format!("seed={seed}"))?;
    }
    let cfg = config::parse(doc.clone())?;
    Ok((cfg, doc))
}

/// Executes one CLI invocation and writes its artifacts.
pub fn run(cli: &Cli) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let (mut cfg, doc) = load(cli)?;
    let base = cli.config.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate(cli.command, &base)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("fracspec-out"));
    let mut ctx = Ctx {
        cfg: &cfg,
        out: Output::create(&out_dir)?,
        summary: Vec::new(),
    };
    match cli.command {
        CommandName::Solve => cmd_solve(&mut ctx)?,
        CommandName::Kernel => cmd_kernel(&mut ctx)?,
        CommandName::MlfTable => cmd_mlf(&mut ctx)?,
        CommandName::InvertOrder => cmd_invert_order(&mut ctx)?,
        CommandName::InvertSpectral => cmd_invert_spectral(&mut ctx)?,
        CommandName::InvertPotential => cmd_invert_potential(&mut ctx)?,
        CommandName::Experiment => cmd_experiment(&mut ctx)?,
    }
    let mut summary = vec![format!("fracspec {} ({})", cli.command.as_str(), out_dir.display())];
    summary.append(&mut ctx.summary);
    let mut text = summary.join("\n");
    text.push('\n');
    ctx.out.write("summary.txt", text.as_bytes())?;

    let canonical = serde_json::to_vec(&doc).expect("config serialises");
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "fracspec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.as_str(),
        "inputs_digest": hex::encode(Sha256::digest(&canonical)),
        "config": doc,
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "started_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "timings_seconds": { "total": started.elapsed().as_secs_f64() },
        "files": ctx.out.files(),
    });
    ctx.out.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        out_dir,
        files: ctx.out.files().to_vec(),
        summary,
    })
}
