use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::ExitStatus;
use crate::certificates::{check_energy_unbounded, check_phi_bound, check_small_branch, Certificate, CertifySetup};
use crate::coordinates::{pullback, radial_residual, AnnulusSpec, CoordinateMap, MapCase, Profile, RadialProfile};
use crate::discretization::EnergyBreakdown;
use crate::error::Result;
use crate::exec::Execution;
use crate::nonlinearity::{check_hypotheses, Branch, HypothesisOptions, HypothesisReport, Nonlinearity};
use crate::solver::{solve, Origin, Rejected, SolveReport, Spacing, TwoPointProblem};

pub const MAP_POINTS: usize = 1001;

/// Everything a subcommand needs besides the config.
pub struct Context<'a> {
    pub out_dir: PathBuf,
    pub force: bool,
    pub exec: Execution,
    pub stdout: &'a mut dyn Write,
}

impl Context<'_> {
    fn say(&mut self, line: impl AsRef<str>) -> Result<()> {
        writeln!(self.stdout, "{}", line.as_ref())?;
        Ok(())
    }

    fn file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `map.csv` with header `r,t,q` on a uniform r-grid.
pub fn cmd_map(cfg: &RunConfig, ctx: &mut Context) -> Result<ExitStatus> {
    let map = cfg.map()?;
    let weight = map.weight();
    let path = ctx.file("map.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["r", "t", "q"])?;
    for r in map.uniform_r_grid(MAP_POINTS) {
        let t = map.r_to_t(r)?;
        w.write_record([r.to_string(), t.to_string(), map.weight_q(t).to_string()])?;
    }
    w.flush()?;
    ctx.say(format!("case: {}", case_name(&map)))?;
    ctx.say(format!("q0 = {}", weight.q0))?;
    ctx.say(format!("q1 = {}", weight.q1))?;
    ctx.say(format!("wrote {}", path.display()))?;
    Ok(ExitStatus::Success)
}

fn case_name(map: &CoordinateMap) -> &'static str {
    match map.case {
        MapCase::Subcritical { .. } => "subcritical",
        MapCase::Critical { .. } => "critical",
    }
}

fn hypotheses(cfg: &RunConfig, nl: &Nonlinearity, q0: f64, exec: Execution) -> Result<HypothesisReport> {
    let options = HypothesisOptions {
        window: cfg.certify.window.map(|[lo, hi]| (lo, hi)),
        exec,
    };
    check_hypotheses(nl, cfg.problem.p, q0, cfg.certify.k, cfg.branch(), &options)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn summarize(ctx: &mut Context, report: &HypothesisReport) -> Result<()> {
    ctx.say(format!("branch: {:?}, K = {}", report.branch, report.k_count))?;
    ctx.say(format!(
        "f(0) = 0 and F >= 0: {} (inf F = {:e})",
        verdict(report.preconditions.verdict),
        report.preconditions.inf_primitive
    ))?;
    ctx.say(format!(
        "(i) b_k/a_k increasing: {} {:?}",
        verdict(report.ratio.verdict),
        report.ratio.ratios
    ))?;
    ctx.say(format!(
        "(ii) f <= 0 on [a_k, b_k]: {} (max {:e})",
        verdict(report.sign.verdict),
        report.sign.max_f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    ))?;
    ctx.say(format!(
        "(iii) growth: {} (threshold {}, limsup proxy {} on [{}, {}], heuristic)",
        verdict(report.growth.verdict),
        report.growth.threshold,
        report.growth.limsup_proxy,
        report.growth.window.0,
        report.growth.window.1
    ))?;
    Ok(())
}

/// `check.json` plus a human summary; exit 1 unless every hypothesis passes.
pub fn cmd_check(cfg: &RunConfig, ctx: &mut Context) -> Result<ExitStatus> {
    let map = cfg.map()?;
    let q0 = map.weight().q0;
    let nl = cfg.build_nonlinearity(q0)?;
    let report = hypotheses(cfg, &nl, q0, ctx.exec)?;
    let path = ctx.file("check.json")?;
    write_json(&path, &report)?;
    summarize(ctx, &report)?;
    ctx.say(format!("wrote {}", path.display()))?;
    Ok(if report.all_pass {
        ExitStatus::Success
    } else {
        ExitStatus::Failed
    })
}

fn file_name(cert: &Certificate) -> &'static str {
    match cert.kind {
        crate::certificates::CertificateKind::PhiBound => "certificate_phi_bound.json",
        crate::certificates::CertificateKind::EnergyUnbounded => "certificate_energy_unbounded.json",
        crate::certificates::CertificateKind::EnergyNegativeSmall => "certificate_energy_negative_small.json",
    }
}

/// The phi-bound certificate plus the energy certificate of the branch.
pub fn cmd_certify(cfg: &RunConfig, ctx: &mut Context) -> Result<ExitStatus> {
    let map = cfg.map()?;
    let weight = map.weight();
    let nl = cfg.build_nonlinearity(weight.q0)?;
    let report = hypotheses(cfg, &nl, weight.q0, ctx.exec)?;
    if !report.all_pass {
        summarize(ctx, &report)?;
        if !ctx.force {
            ctx.say("hypotheses fail; rerun with --force to certify anyway")?;
            return Ok(ExitStatus::Failed);
        }
    }
    let branch = cfg.branch();
    let setup = CertifySetup::resolve(&nl, cfg.problem.p, weight.q0, branch, &cfg.certify_options(ctx.exec))?;
    let mut certs = vec![check_phi_bound(&nl, &weight, &setup)?];
    let mut all = true;
    if setup.h.is_some() {
        certs.push(match branch {
            Branch::Infinity => check_energy_unbounded(&nl, &weight, &setup)?,
            Branch::Zero => check_small_branch(&nl, &weight, &setup)?,
        });
    } else {
        all = false;
        ctx.say(format!(
            "energy certificate skipped: limsup proxy {} does not exceed the threshold {}",
            setup.limsup_proxy, setup.threshold
        ))?;
    }
    for cert in &certs {
        let path = ctx.file(file_name(cert))?;
        write_json(&path, cert)?;
        all &= cert.verdict;
        ctx.say(format!(
            "{:?}: {} (k* = {}, monotone = {}) -> {}",
            cert.kind,
            verdict(cert.verdict),
            cert.k_star.map_or("none".to_string(), |k| k.to_string()),
            cert.monotone,
            path.display()
        ))?;
    }
    Ok(if all {
        ExitStatus::Success
    } else {
        ExitStatus::Failed
    })
}

#[derive(Serialize)]
struct SweepSummary {
    s_lo: f64,
    s_hi: f64,
    grid: usize,
    spacing: Spacing,
    refine: usize,
    n_steps: usize,
    evaluated: usize,
    diverged: usize,
    sign_changes: usize,
}

#[derive(Serialize)]
struct SolutionSummary {
    index: usize,
    origin: Origin,
    slope: Option<f64>,
    sup: f64,
    min: f64,
    p_norm: f64,
    energy: EnergyBreakdown,
    weak_res: f64,
    radial_residual: f64,
    t_file: String,
    r_file: String,
}

#[derive(Serialize)]
struct SolveSummary {
    problem: AnnulusSpec,
    case: &'static str,
    q0: f64,
    q1: f64,
    nonlinearity: String,
    elements: usize,
    sweep: SweepSummary,
    solutions: Vec<SolutionSummary>,
    rejected: Vec<Rejected>,
    descent_notes: Vec<Rejected>,
}

fn sweep_summary(cfg: &RunConfig, report: &SolveReport) -> SweepSummary {
    let s = &cfg.solver;
    let terminal = &report.sweep.terminal;
    SweepSummary {
        s_lo: s.s_lo,
        s_hi: s.s_hi,
        grid: s.grid,
        spacing: s.spacing,
        refine: s.refine,
        n_steps: s.n_steps,
        evaluated: terminal.len(),
        diverged: terminal.iter().filter(|v| v.is_none()).count(),
        sign_changes: terminal
            .windows(2)
            .filter(|w| matches!((w[0], w[1]), (Some(x), Some(y)) if x * y < 0.0))
            .count(),
    }
}

/// Radial profile of a solution: the re-shot trajectory when a slope is
/// known, the finite-element function otherwise.
fn radial_profile(
    map: &CoordinateMap,
    problem: &TwoPointProblem,
    cfg: &RunConfig,
    v: &dyn Profile,
    slope: Option<f64>,
) -> Result<RadialProfile> {
    let grid = map.uniform_r_grid(cfg.solver.radial_points);
    let bound = cfg
        .solver
        .divergence_bound
        .unwrap_or_else(|| problem.default_divergence_bound());
    match slope {
        Some(s) => {
            let trajectory = problem.shoot(s, cfg.solver.n_steps, bound)?;
            pullback(map, &trajectory, &grid)
        }
        None => pullback(map, v, &grid),
    }
}

/// Writes `r,u` with the boundary values set to the Dirichlet data; the
/// shooting profile misses them by at most the root tolerance.
fn write_radial(path: &Path, u: &RadialProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["r", "u"])?;
    let last = u.u.len() - 1;
    for (i, (r, value)) in u.r.iter().zip(&u.u).enumerate() {
        let value = if i == 0 || i == last { 0.0 } else { *value };
        w.write_record([r.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_sweep(path: &Path, report: &SolveReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["s", "v1"])?;
    for (s, v1) in report.sweep.slopes.iter().zip(&report.sweep.terminal) {
        w.write_record([s.to_string(), v1.map_or(String::new(), |v| v.to_string())])?;
    }
    w.flush()?;
    Ok(())
}

/// Shooting sweep, descent polish, deduplication, and export. Exit 2 when
/// nothing is accepted.
pub fn cmd_solve(cfg: &RunConfig, ctx: &mut Context) -> Result<ExitStatus> {
    let map = cfg.map()?;
    let weight = map.weight();
    let nl = cfg.build_nonlinearity(weight.q0)?;
    let problem = TwoPointProblem::from_map(&map, nl.clone());
    let descent = cfg.descent_options(ctx.exec);
    let report = solve(&problem, &cfg.sweep_options(ctx.exec), descent.as_ref(), cfg.solver.dedupe_tol)?;

    write_sweep(&ctx.file("sweep.csv")?, &report)?;
    let dir = ctx.out_dir.join("solutions");
    fs::create_dir_all(&dir)?;
    let mut solutions = Vec::with_capacity(report.solutions.len());
    for (i, s) in report.solutions.iter().enumerate() {
        let index = i + 1;
        let t_file = format!("solution_{index:03}_t.csv");
        let r_file = format!("solution_{index:03}_r.csv");
        s.v.write_csv(dir.join(&t_file))?;
        let u = radial_profile(&map, &problem, cfg, &s.v, s.slope)?;
        write_radial(&dir.join(&r_file), &u)?;
        let residual = radial_residual(&u, &map.spec, &nl)?;
        solutions.push(SolutionSummary {
            index,
            origin: s.origin,
            slope: s.slope,
            sup: s.sup,
            min: s.min_value,
            p_norm: s.p_norm,
            energy: s.energy,
            weak_res: s.weak_res,
            radial_residual: residual,
            t_file: format!("solutions/{t_file}"),
            r_file: format!("solutions/{r_file}"),
        });
    }
    let summary = SolveSummary {
        problem: map.spec,
        case: case_name(&map),
        q0: weight.q0,
        q1: weight.q1,
        nonlinearity: nl.name().to_string(),
        elements: cfg.mesh.elements,
        sweep: sweep_summary(cfg, &report),
        solutions,
        rejected: report.sweep.rejected.clone(),
        descent_notes: report.descent_notes.clone(),
    };
    let path = ctx.file("summary.json")?;
    write_json(&path, &summary)?;

    if summary.solutions.is_empty() {
        ctx.say(format!(
            "no solutions for slopes in [{}, {}] ({} shots, {} diverged, {} sign changes)",
            summary.sweep.s_lo,
            summary.sweep.s_hi,
            summary.sweep.evaluated,
            summary.sweep.diverged,
            summary.sweep.sign_changes
        ))?;
        return Ok(ExitStatus::NoSolutions);
    }
    ctx.say(format!("{} solutions", summary.solutions.len()))?;
    for s in &summary.solutions {
        ctx.say(format!(
            "  #{:<3} sup {:<12.6e} |v'|_p^p {:<12.6e} E {:<13.6e} weak res {:.2e} radial res {:.2e}",
            s.index, s.sup, s.p_norm, s.energy.energy, s.weak_res, s.radial_residual
        ))?;
    }
    ctx.say(format!("wrote {}", path.display()))?;
    Ok(ExitStatus::Success)
}
