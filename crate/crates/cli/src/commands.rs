use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use kl_core::algorithms::{gradient_run, proximal_run, IterateRun, Schedule, StepRule};
use kl_core::analysis::profile::octave_contributions;
use kl_core::analysis::{
    band_samples, build_phi_relative, check_error_bound, check_kl, check_sublevel_lipschitz, extract_talweg,
    geometric_grid, integrability_test, kl_margin, slope_profile, trace_level, Composed, Desingularization,
    Integrability, LipschitzMode, OraclePhi, PowerPhi, TailModel,
};
use kl_core::counterexample::{
    build_rings, check_level_gaps, check_midpoint_convexity, kl_failure_witness, read_cex, reconstruct_body,
    reconstruction_report, write_cex, CexField, WitnessTable, DEFAULT_DIRS, DEFAULT_NMAX,
};
use kl_core::flows::{chordal_length, curve_length, integrate_flow, Stop, Trajectory};
use kl_core::format::sig17;
use kl_core::geometry::UnitDirection;
use kl_core::report::{CheckReport, Verdict, Witness, WorstCase};
use kl_core::zoo::{catalog, parse_field, ScalarField};
use kl_core::{ConvexBody, Point};

use crate::config::{Pair, RunConfig};
use crate::output::OutDir;
use crate::svg::Svg;
use crate::{
    CexBuildArgs, CexCommand, CexVerifyArgs, CexWitnessArgs, CheckCommand, Cli, Command, ErrorBoundArgs, FieldArg,
    FlowArgs, GdArgs, GridArgs, KlArgs, PhiArg, ProfileArgs, ProxArgs, SublevelArgs, TalwegArgs, UsageError,
    ZooCommand,
};

const LEVEL_STROKE: &str = "#999999";
const PATH_STROKE: &str = "#1f4e9c";
const TALWEG_STROKE: &str = "#c0392b";
const WITNESS_FILL: &str = "#c0392b";

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let expect_fail = cli.expect_fail;
    match dispatch(cli) {
        Ok(verdicts) => {
            let failed = verdicts.contains(&Verdict::Fail);
            match (failed, expect_fail) {
                (false, false) | (true, true) => 0,
                _ => 1,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

/// 2 for usage, configuration, argument and I/O errors; 1 for numerical
/// failures that stop a command before it reaches a verdict.
fn exit_code_for(e: &anyhow::Error) -> u8 {
    use kl_core::Error as E;
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<E>() {
        Some(
            E::InvalidArgument(_)
            | E::Parse(_)
            | E::Range { .. }
            | E::StepTooLarge { .. }
            | E::OutOfDomain(..)
            | E::UndefinedAtMin,
        ) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn dispatch(cli: Cli) -> Result<Vec<Verdict>> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.out.clone(), cli.seed)?;
    match cli.command {
        Command::Zoo {
            command: ZooCommand::List,
        } => zoo_list(),
        Command::Flow(a) => flow(&cfg, a),
        Command::Prox(a) => prox(&cfg, a),
        Command::Gd(a) => gd(&cfg, a),
        Command::Profile(a) => profile(&cfg, a),
        Command::Check { command } => match command {
            CheckCommand::Kl(a) => check_kl_cmd(&cfg, a),
            CheckCommand::Sublevel(a) => check_sublevel_cmd(&cfg, a),
            CheckCommand::Errorbound(a) => check_errorbound_cmd(&cfg, a),
            CheckCommand::Talweg(a) => check_talweg_cmd(&cfg, a),
            CheckCommand::Integrability(a) => check_integrability_cmd(&cfg, a),
        },
        Command::Cex { command } => match command {
            CexCommand::Build(a) => cex_build(&cfg, a),
            CexCommand::Verify(a) => cex_verify(&cfg, a),
            CexCommand::Witness(a) => cex_witness(&cfg, a),
        },
    }
}

// ---------------------------------------------------------------- helpers

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn field_of(cfg: &RunConfig, arg: &FieldArg) -> Result<(String, Arc<dyn ScalarField>)> {
    let spec: String = cfg.require(arg.field.clone(), "field")?;
    let field = parse_field(&spec).map_err(|e| usage(e.to_string()))?;
    Ok((spec, field))
}

fn point(p: Pair) -> Point {
    Point::new(p.0, p.1)
}

fn tol_of(cfg: &RunConfig, flag: Option<f64>, default: f64) -> Result<f64> {
    Ok(cfg.ranged(flag, "tol", default, 1e-12, 1e-3)?)
}

fn num_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn report_line(r: &CheckReport) {
    say!(
        "{}: {} (margin {:e}, tol {:e})",
        r.name,
        r.verdict,
        r.witness.margin,
        r.tol
    );
}

fn report_json(r: &CheckReport) -> Value {
    serde_json::to_value(r).expect("reports serialize")
}

fn finish(out: &OutDir) {
    for p in out.written() {
        say!("wrote {}", p.display());
    }
}

struct Grid {
    r0: f64,
    count: usize,
    ratio: f64,
    dirs: usize,
    tail: TailModel,
    levels: Vec<f64>,
}

impl Grid {
    fn resolve(cfg: &RunConfig, g: &GridArgs) -> Result<Grid> {
        let r0 = cfg.ranged(g.r0, "r0", 0.5, f64::MIN_POSITIVE, 1e6)?;
        let count = cfg.ranged(g.levels, "levels", 32, 2, 4096)?;
        let ratio = cfg.ranged(g.ratio, "ratio", 0.5, 1e-3, 0.999)?;
        let dirs = cfg.ranged(g.dirs, "dirs", 512, 16, 65536)?;
        let tail: String = cfg.or(g.tail.clone(), "tail", "auto".into())?;
        let tail: TailModel = tail.parse().map_err(|e: kl_core::Error| usage(e.to_string()))?;
        let levels = geometric_grid(r0, count, ratio)?;
        Ok(Grid {
            r0,
            count,
            ratio,
            dirs,
            tail,
            levels,
        })
    }

    fn json(&self) -> Value {
        json!({
            "r0": self.r0,
            "levels": self.count,
            "ratio": self.ratio,
            "dirs": self.dirs,
            "tail": self.tail,
        })
    }

    /// At most `k` levels spread over the grid, top first.
    fn some_levels(&self, k: usize) -> Vec<f64> {
        let step = self.levels.len().div_ceil(k).max(1);
        self.levels.iter().step_by(step).copied().collect()
    }
}

enum PhiSpec {
    Auto,
    Oracle,
    Profile,
    Power(f64),
    None,
}

fn parse_phi(s: &str) -> Result<PhiSpec> {
    Ok(match s.trim() {
        "auto" => PhiSpec::Auto,
        "oracle" => PhiSpec::Oracle,
        "profile" => PhiSpec::Profile,
        "none" => PhiSpec::None,
        t => match t.strip_prefix("power:").map(str::parse::<f64>) {
            Some(Ok(theta)) if theta > 0.0 && theta <= 1.0 => PhiSpec::Power(theta),
            _ => {
                return Err(usage(format!(
                    "--phi {t:?}: expected auto, oracle, profile, none or power:<theta in (0,1]>"
                )))
            }
        },
    })
}

enum PhiChoice {
    Ready {
        phi: Arc<dyn Desingularization>,
        label: String,
    },
    /// The measured profile has a non-integrable tail: no `φ` with
    /// `φ(0) = 0` exists on this evidence.
    Divergent(CheckReport),
}

fn profile_phi(field: &dyn ScalarField, grid: &Grid) -> Result<PhiChoice> {
    let p = build_phi_relative(&slope_profile(field, &grid.levels, grid.dirs)?, grid.tail);
    let fit = p.tail.expect("built profiles carry a tail fit");
    if fit.integrable || grid.tail == TailModel::None {
        return Ok(PhiChoice::Ready {
            phi: Arc::new(p),
            label: "profile".into(),
        });
    }
    let margin = match fit.model {
        TailModel::LogPower => fit.exponent - 1.0,
        _ => fit.exponent + 1.0,
    };
    // integrable iff the margin is positive; a zero margin is divergent too
    let report = CheckReport {
        name: "phi_tail".into(),
        verdict: Verdict::Fail,
        witness: Witness {
            x: vec![fit.coefficient, fit.exponent],
            r: *grid.levels.last().unwrap(),
            margin,
        },
        tol: 0.0,
    };
    Ok(PhiChoice::Divergent(report))
}

fn resolve_phi(field: &Arc<dyn ScalarField>, spec: PhiSpec, grid: &Grid) -> Result<PhiChoice> {
    match spec {
        PhiSpec::Oracle => Ok(PhiChoice::Ready {
            phi: Arc::new(OraclePhi::new(field.clone()).map_err(|e| usage(e.to_string()))?),
            label: "oracle".into(),
        }),
        PhiSpec::Power(theta) => Ok(PhiChoice::Ready {
            phi: Arc::new(PowerPhi(theta)),
            label: format!("power:{theta}"),
        }),
        PhiSpec::Profile => profile_phi(field.as_ref(), grid),
        PhiSpec::Auto => match OraclePhi::new(field.clone()) {
            Ok(o) => Ok(PhiChoice::Ready {
                phi: Arc::new(o),
                label: "oracle".into(),
            }),
            Err(_) => profile_phi(field.as_ref(), grid),
        },
        PhiSpec::None => Err(usage(
            "this command needs a desingularization; --phi none is not allowed",
        )),
    }
}

fn phi_of(cfg: &RunConfig, arg: &PhiArg, field: &Arc<dyn ScalarField>, grid: &Grid) -> Result<PhiChoice> {
    let s: String = cfg.or(arg.phi.clone(), "phi", "auto".into())?;
    resolve_phi(field, parse_phi(&s)?, grid)
}

/// Traced level curves; levels a field cannot trace are left out.
fn level_curves(field: &dyn ScalarField, levels: &[f64], n: usize) -> Vec<Vec<Point>> {
    levels
        .iter()
        .filter(|r| **r > 0.0)
        .filter_map(|&r| trace_level(field, r, n).ok())
        .collect()
}

fn overlay(curves: &[Vec<Point>], paths: &[(&[Point], &str)], dots: &[(Point, &str)], title: &str) -> String {
    let everything = curves
        .iter()
        .flatten()
        .chain(paths.iter().flat_map(|(p, _)| p.iter()))
        .chain(dots.iter().map(|(p, _)| p));
    let mut svg = Svg::fitted(everything);
    for c in curves {
        svg.polygon(c, LEVEL_STROKE, 1.0);
    }
    for (p, stroke) in paths {
        svg.polyline(p, stroke, 2.0);
    }
    for (p, fill) in dots {
        svg.dot(p, fill, 4.0);
    }
    svg.label(title);
    svg.finish()
}

fn iterate_json(run: &IterateRun) -> Value {
    let last = *run.points.last().unwrap();
    json!({
        "iterates": run.len(),
        "final_point": [num_json(last.x), num_json(last.y)],
        "final_excess": num_json(*run.excess.last().unwrap()),
        "length": num_json(run.length()),
    })
}

// --------------------------------------------------------------- commands

fn zoo_list() -> Result<Vec<Verdict>> {
    for (spec, lines) in catalog() {
        say!("{spec}");
        for l in lines {
            say!("    {l}");
        }
    }
    Ok(Vec::new())
}

fn flow(cfg: &RunConfig, a: FlowArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let x0 = point(cfg.require(a.x0, "x0")?);
    let stop = match (cfg.get(a.t_end, "T")?, cfg.get(a.stop, "stop")?) {
        (Some(t), None) => Stop::Time(t),
        (None, Some(r)) => Stop::Level(r),
        _ => return Err(usage("give exactly one of --T and --stop")),
    };
    let tol = tol_of(cfg, a.tol, 1e-6)?;
    let dirs = cfg.ranged(a.dirs, "dirs", 256, 16, 65536)?;
    let traj = integrate_flow(field.as_ref(), &x0, stop, tol)?;
    let mut out = OutDir::create(&cfg.out)?;
    out.write("flow.csv", &traj.to_csv())?;
    out.write_json("flow.json", &flow_json(&spec, &x0, stop, tol, &traj))?;
    let e0 = traj.excess[0];
    let levels: Vec<f64> = (0..5).map(|j| e0 * 0.25f64.powi(j)).collect();
    let curves = level_curves(field.as_ref(), &levels, dirs);
    out.write(
        "flow.svg",
        &overlay(
            &curves,
            &[(&traj.x, PATH_STROKE)],
            &[(x0, PATH_STROKE)],
            &format!("flow {spec}"),
        ),
    )?;
    finish(&out);
    Ok(Vec::new())
}

fn flow_json(spec: &str, x0: &Point, stop: Stop, tol: f64, traj: &Trajectory) -> Value {
    let last = traj.last_point();
    let stop = match stop {
        Stop::Time(t) => json!({ "time": t }),
        Stop::Level(r) => json!({ "level": r }),
    };
    json!({
        "command": "flow",
        "field": spec,
        "x0": [x0.x, x0.y],
        "stop": stop,
        "tol": tol,
        "integrator": format!("{:?}", traj.integrator),
        "nodes": traj.len(),
        "t_end": num_json(*traj.t.last().unwrap()),
        "x_end": [num_json(last.x), num_json(last.y)],
        "f_end": num_json(*traj.f.last().unwrap()),
        "excess_end": num_json(*traj.excess.last().unwrap()),
        "length": num_json(curve_length(traj)),
        "chordal_length": num_json(chordal_length(traj)),
        "energy_residual": num_json(traj.energy_residual()),
    })
}

fn prox(cfg: &RunConfig, a: ProxArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let x0 = point(cfg.require(a.x0, "x0")?);
    let lambda: f64 = cfg.require(a.lambda, "lambda")?;
    let steps = cfg.ranged(a.steps, "steps", 50, 1, 100_000)?;
    let tol = tol_of(cfg, a.tol, 1e-9)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let mut out = OutDir::create(&cfg.out)?;
    let (phi, label) = match phi_of(cfg, &a.phi, &field, &grid)? {
        PhiChoice::Ready { phi, label } => (phi, label),
        PhiChoice::Divergent(report) => return divergent_only(&mut out, "prox.json", &spec, report),
    };
    let (run, report) = proximal_run(
        field.as_ref(),
        &x0,
        Schedule::Constant(lambda),
        &|r| phi.phi(r),
        steps,
        tol,
    )?;
    report_line(&report);
    out.write("prox.csv", &run.to_csv())?;
    out.write_json(
        "prox.json",
        &json!({
            "command": "prox",
            "field": spec,
            "x0": [x0.x, x0.y],
            "lambda": lambda,
            "steps": steps,
            "phi": label,
            "run": iterate_json(&run),
            "reports": [report_json(&report)],
        }),
    )?;
    let curves = level_curves(
        field.as_ref(),
        &[run.excess[0], run.excess[0] / 4.0],
        grid.dirs.min(512),
    );
    out.write(
        "prox.svg",
        &overlay(
            &curves,
            &[(&run.points, PATH_STROKE)],
            &[(x0, PATH_STROKE)],
            &format!("prox {spec}"),
        ),
    )?;
    finish(&out);
    Ok(vec![report.verdict])
}

fn divergent_only(out: &mut OutDir, name: &str, spec: &str, report: CheckReport) -> Result<Vec<Verdict>> {
    report_line(&report);
    out.write_json(
        name,
        &json!({ "field": spec, "phi": "profile", "reports": [report_json(&report)] }),
    )?;
    finish(out);
    Ok(vec![report.verdict])
}

fn gd(cfg: &RunConfig, a: GdArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let x0 = point(cfg.require(a.x0, "x0")?);
    let t: String = cfg.require(a.t.clone(), "t")?;
    let rule = if t == "backtracking" {
        StepRule::Backtracking
    } else {
        let t: f64 = t
            .parse()
            .map_err(|_| usage(format!("--t {t:?}: expected a number or backtracking")))?;
        StepRule::Fixed(t)
    };
    let default_beta = match (rule, field.gradient_lipschitz()) {
        (StepRule::Fixed(t), Some(l)) => 1.0 - l * t / 2.0,
        _ => 0.5,
    };
    let beta: f64 = cfg.or(a.beta, "beta", default_beta)?;
    let steps = cfg.ranged(a.steps, "steps", 100, 1, 1_000_000)?;
    let tol = tol_of(cfg, a.tol, 1e-9)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let mut out = OutDir::create(&cfg.out)?;
    let (phi, label) = match phi_of(cfg, &a.phi, &field, &grid)? {
        PhiChoice::Ready { phi, label } => (phi, label),
        PhiChoice::Divergent(report) => return divergent_only(&mut out, "gd.json", &spec, report),
    };
    let (run, reports) = gradient_run(field.as_ref(), &x0, rule, beta, &|r| phi.phi(r), steps, tol)?;
    report_line(&reports.descent);
    report_line(&reports.length);
    out.write("gd.csv", &run.to_csv())?;
    let rule_json = match rule {
        StepRule::Fixed(t) => json!({ "fixed": t }),
        StepRule::Backtracking => json!("backtracking"),
    };
    out.write_json(
        "gd.json",
        &json!({
            "command": "gd",
            "field": spec,
            "x0": [x0.x, x0.y],
            "step": rule_json,
            "beta": beta,
            "steps": steps,
            "phi": label,
            "run": iterate_json(&run),
            "reports": [report_json(&reports.descent), report_json(&reports.length)],
        }),
    )?;
    let curves = level_curves(
        field.as_ref(),
        &[run.excess[0], run.excess[0] / 4.0],
        grid.dirs.min(512),
    );
    out.write(
        "gd.svg",
        &overlay(
            &curves,
            &[(&run.points, PATH_STROKE)],
            &[(x0, PATH_STROKE)],
            &format!("gd {spec}"),
        ),
    )?;
    finish(&out);
    Ok(vec![reports.descent.verdict, reports.length.verdict])
}

fn profile(cfg: &RunConfig, a: ProfileArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let p = build_phi_relative(&slope_profile(field.as_ref(), &grid.levels, grid.dirs)?, grid.tail);
    let integrable = p.integrable();
    let mut out = OutDir::create(&cfg.out)?;
    out.write("profile.csv", &p.to_csv())?;
    out.write_json(
        "profile.json",
        &json!({
            "command": "profile",
            "field": spec,
            "grid": grid.json(),
            "tail_fit": p.tail,
            "integrable": integrable,
            "phi_origin": if integrable { "zero" } else { "smallest-level" },
            "integrability": integrability_test(&p.r, &p.u),
        }),
    )?;
    let curves = level_curves(field.as_ref(), &grid.some_levels(12), grid.dirs.min(512));
    let dots: Vec<(Point, &str)> = p.argmin.iter().map(|x| (*x, WITNESS_FILL)).collect();
    out.write("profile.svg", &overlay(&curves, &[], &dots, &format!("profile {spec}")))?;
    finish(&out);
    Ok(Vec::new())
}

fn check_kl_cmd(cfg: &RunConfig, a: KlArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let samples = cfg.ranged(a.samples, "samples", 1000, 1, 1_000_000)?;
    let band = cfg
        .get(a.band, "band")?
        .unwrap_or(Pair(*grid.levels.last().unwrap(), grid.r0));
    let tol = tol_of(cfg, a.tol, 1e-6)?;
    let mut out = OutDir::create(&cfg.out)?;
    let (phi, label) = match phi_of(cfg, &a.phi, &field, &grid)? {
        PhiChoice::Ready { phi, label } => (phi, label),
        PhiChoice::Divergent(report) => return divergent_only(&mut out, "kl.json", &spec, report),
    };
    let drawn = band_samples(field.as_ref(), band.0, band.1, samples, cfg.seed)?;
    let points: Vec<Point> = drawn.iter().map(|(x, _)| *x).collect();
    let report = check_kl(field.as_ref(), phi.as_ref(), &points, tol);
    report_line(&report);
    let mut csv = String::from("x1,x2,r,margin\n");
    for (x, r) in &drawn {
        let m = kl_margin(field.as_ref(), phi.as_ref(), x);
        csv.push_str(&format!("{},{},{},{}\n", sig17(x.x), sig17(x.y), sig17(*r), sig17(m)));
    }
    out.write("kl.csv", &csv)?;
    out.write_json(
        "kl.json",
        &json!({
            "command": "check kl",
            "field": spec,
            "grid": grid.json(),
            "phi": label,
            "band": [band.0, band.1],
            "samples": samples,
            "seed": cfg.seed,
            "reports": [report_json(&report)],
        }),
    )?;
    let curves = level_curves(field.as_ref(), &grid.some_levels(8), grid.dirs.min(512));
    let w = &report.witness.x;
    let dots = [(Point::new(w[0], w[1]), WITNESS_FILL)];
    out.write(
        "kl.svg",
        &overlay(&curves, &[], &dots, &format!("kl {spec}: {}", report.verdict)),
    )?;
    finish(&out);
    Ok(vec![report.verdict])
}

fn cex_from_spec(spec: &str) -> Result<CexField> {
    let nmax = match spec.trim() {
        "cex" => DEFAULT_NMAX,
        s => s
            .strip_prefix("cex:")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| usage(format!("--pairs bodies needs a cex field, got {s:?}")))?,
    };
    Ok(CexField::standard(nmax)?)
}

fn check_sublevel_cmd(cfg: &RunConfig, a: SublevelArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let mode = match cfg.or(a.mode.clone(), "mode", "sublevel".to_string())?.as_str() {
        "sublevel" => LipschitzMode::Sublevel,
        "level" => LipschitzMode::Level,
        m => return Err(usage(format!("--mode {m:?}: expected sublevel or level"))),
    };
    let pairs_kind: String = cfg.or(a.pairs.clone(), "pairs", "grid".into())?;
    let k: f64 = cfg.or(a.k, "k", 1.0)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(usage(format!("--k {k} must be positive")));
    }
    let tol = tol_of(cfg, a.tol, 1e-6)?;
    let pairs: Vec<(f64, f64)> = match pairs_kind.as_str() {
        "grid" => grid.levels.windows(2).map(|w| (w[0], w[1])).collect(),
        "bodies" => {
            let cex = cex_from_spec(&spec)?;
            let lv = cex.levels();
            (0..lv.last_index())
                .map(|j| (lv.excess(j), lv.excess(j + 1)))
                .filter(|&(_, lo)| lo >= f64::MIN_POSITIVE)
                .collect()
        }
        p => return Err(usage(format!("--pairs {p:?}: expected grid or bodies"))),
    };
    let mut out = OutDir::create(&cfg.out)?;
    let (phi, label) = match phi_of(cfg, &a.phi, &field, &grid)? {
        PhiChoice::Ready { phi, label } => (phi, label),
        PhiChoice::Divergent(report) => return divergent_only(&mut out, "sublevel.json", &spec, report),
    };
    let mut csv = String::from("r1,r2,dist,phi_gap,margin\n");
    let mut worst = WorstCase::new();
    for &(r1, r2) in &pairs {
        let one = check_sublevel_lipschitz(field.as_ref(), phi.as_ref(), &[(r1, r2)], mode, k, tol, grid.dirs)?;
        let gap = (phi.phi(r1) - phi.phi(r2)).abs();
        let margin = one.witness.margin;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            sig17(r1),
            sig17(r2),
            sig17(k * gap - margin),
            sig17(gap),
            sig17(margin)
        ));
        worst.offer(&[r1, r2], r1, margin);
    }
    let name = match mode {
        LipschitzMode::Sublevel => "sublevel_lipschitz",
        LipschitzMode::Level => "level_lipschitz",
    };
    let report = worst.report(name, tol);
    report_line(&report);
    out.write("sublevel.csv", &csv)?;
    out.write_json(
        "sublevel.json",
        &json!({
            "command": "check sublevel",
            "field": spec,
            "grid": grid.json(),
            "phi": label,
            "pairs": pairs_kind,
            "k": k,
            "reports": [report_json(&report)],
        }),
    )?;
    let w = &report.witness.x;
    let mut levels = grid.some_levels(6);
    if w.len() == 2 {
        levels.extend_from_slice(w);
    }
    let curves = level_curves(field.as_ref(), &levels, grid.dirs.min(512));
    out.write(
        "sublevel.svg",
        &overlay(&curves, &[], &[], &format!("{name} {spec}: {}", report.verdict)),
    )?;
    finish(&out);
    Ok(vec![report.verdict])
}

fn check_errorbound_cmd(cfg: &RunConfig, a: ErrorBoundArgs) -> Result<Vec<Verdict>> {
    let (spec, base) = field_of(cfg, &a.field)?;
    let k: f64 = cfg.require(a.k, "k")?;
    let level: f64 = cfg.require(a.level, "level")?;
    if !(k > 0.0 && k.is_finite() && level > 0.0 && level.is_finite()) {
        return Err(usage("--k and --level must be positive"));
    }
    let band = cfg.get(a.band, "band")?.unwrap_or(Pair(level, 16.0 * level));
    let samples = cfg.ranged(a.samples, "samples", 1000, 1, 1_000_000)?;
    let dirs = cfg.ranged(a.dirs, "dirs", 512, 16, 65536)?;
    let tol = tol_of(cfg, a.tol, 1e-6)?;
    let phi_spec: String = cfg.or(a.phi.clone(), "phi", "none".into())?;
    let field: Arc<dyn ScalarField> = match parse_phi(&phi_spec)? {
        PhiSpec::None => base.clone(),
        PhiSpec::Oracle => Arc::new(Composed {
            inner: base.clone(),
            phi: Arc::new(OraclePhi::new(base.clone()).map_err(|e| usage(e.to_string()))?),
        }),
        PhiSpec::Power(theta) => Arc::new(Composed {
            inner: base.clone(),
            phi: Arc::new(PowerPhi(theta)),
        }),
        _ => return Err(usage("--phi for errorbound: none, oracle or power:<theta>")),
    };
    let drawn = band_samples(field.as_ref(), band.0, band.1, samples, cfg.seed)?;
    let points: Vec<Point> = drawn.iter().map(|(x, _)| *x).collect();
    let report = check_error_bound(field.as_ref(), k, level, &points, tol, dirs)?;
    report_line(&report);
    let mut out = OutDir::create(&cfg.out)?;
    let mut csv = String::from("x1,x2,r\n");
    for (x, r) in &drawn {
        csv.push_str(&format!("{},{},{}\n", sig17(x.x), sig17(x.y), sig17(*r)));
    }
    out.write("errorbound.csv", &csv)?;
    out.write_json(
        "errorbound.json",
        &json!({
            "command": "check errorbound",
            "field": spec,
            "composed_with": phi_spec,
            "k": k,
            "level": level,
            "band": [band.0, band.1],
            "samples": samples,
            "seed": cfg.seed,
            "reports": [report_json(&report)],
        }),
    )?;
    let curves = level_curves(field.as_ref(), &[level, band.1], dirs.min(512));
    let w = &report.witness.x;
    let dots = [(Point::new(w[0], w[1]), WITNESS_FILL)];
    out.write(
        "errorbound.svg",
        &overlay(&curves, &[], &dots, &format!("error bound {spec}: {}", report.verdict)),
    )?;
    finish(&out);
    Ok(vec![report.verdict])
}

fn check_talweg_cmd(cfg: &RunConfig, a: TalwegArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let factor: f64 = cfg.or(a.factor, "factor", 2.0)?;
    let t = extract_talweg(field.as_ref(), factor, &grid.levels, grid.dirs)?;
    report_line(&t.report);
    let mut out = OutDir::create(&cfg.out)?;
    let mut csv = String::from("r,x1,x2\n");
    for (r, p) in t.r.iter().zip(&t.points) {
        csv.push_str(&format!("{},{},{}\n", sig17(*r), sig17(p.x), sig17(p.y)));
    }
    out.write("talweg.csv", &csv)?;
    out.write_json(
        "talweg.json",
        &json!({
            "command": "check talweg",
            "field": spec,
            "grid": grid.json(),
            "factor": factor,
            "length": num_json(t.length),
            "refined_length": num_json(t.refined_length),
            "reports": [report_json(&t.report)],
        }),
    )?;
    let curves = level_curves(field.as_ref(), &grid.some_levels(8), grid.dirs.min(512));
    out.write(
        "talweg.svg",
        &overlay(&curves, &[(&t.points, TALWEG_STROKE)], &[], &format!("talweg {spec}")),
    )?;
    finish(&out);
    Ok(vec![t.report.verdict])
}

fn check_integrability_cmd(cfg: &RunConfig, a: ProfileArgs) -> Result<Vec<Verdict>> {
    let (spec, field) = field_of(cfg, &a.field)?;
    let grid = Grid::resolve(cfg, &a.grid)?;
    let p = slope_profile(field.as_ref(), &grid.levels, grid.dirs)?;
    let verdict = integrability_test(&p.r, &p.u);
    say!(
        "integrability: {}",
        serde_json::to_value(verdict)?.as_str().unwrap_or("?")
    );
    let contributions = octave_contributions(&p.r, &p.u);
    let mut out = OutDir::create(&cfg.out)?;
    let mut csv = String::from("octave,contribution\n");
    for (i, c) in contributions.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", sig17(*c)));
    }
    out.write("integrability.csv", &csv)?;
    out.write_json(
        "integrability.json",
        &json!({
            "command": "check integrability",
            "field": spec,
            "grid": grid.json(),
            "verdict": verdict,
            "octave_contributions": contributions.iter().map(|c| num_json(*c)).collect::<Vec<_>>(),
        }),
    )?;
    let curves = level_curves(field.as_ref(), &grid.some_levels(12), grid.dirs.min(512));
    out.write(
        "integrability.svg",
        &overlay(&curves, &[], &[], &format!("integrability {spec}")),
    )?;
    finish(&out);
    Ok(vec![match verdict {
        Integrability::Convergent => Verdict::Pass,
        Integrability::Divergent => Verdict::Fail,
        Integrability::Inconclusive => Verdict::Inconclusive,
    }])
}

/// Boundary of a body from its support points.
fn outline(body: &ConvexBody, n: usize) -> Vec<Point> {
    UnitDirection::grid(n)
        .iter()
        .filter_map(|u| body.support_point(u))
        .collect()
}

fn cex_build(cfg: &RunConfig, a: CexBuildArgs) -> Result<Vec<Verdict>> {
    let nmax = cfg.ranged(
        a.nmax,
        "nmax",
        DEFAULT_NMAX,
        4,
        kl_core::counterexample::rings::MAX_GENERATION,
    )?;
    let dirs = cfg.ranged(a.dirs, "dirs", DEFAULT_DIRS, 16, 65536)?;
    let field = CexField::standard(nmax)?.with_dirs(dirs);
    let mut out = OutDir::create(&cfg.out)?;
    out.write("cex.txt", &write_cex(&field))?;
    out.write_json("cex.json", &cex_summary(&field))?;
    let bodies = field.bodies();
    let curves: Vec<Vec<Point>> = (0..bodies.len().min(80))
        .map(|k| outline(bodies.body(k), 360))
        .collect();
    let limit = outline(&bodies.limit_body(), 360);
    out.write(
        "cex.svg",
        &overlay(
            &curves,
            &[(&limit, TALWEG_STROKE)],
            &[],
            &format!("nested bodies, nmax {nmax}"),
        ),
    )?;
    finish(&out);
    Ok(Vec::new())
}

fn cex_summary(field: &CexField) -> Value {
    let (b, l) = (field.bodies(), field.levels());
    json!({
        "nmax": b.nmax(),
        "bodies": b.len(),
        "limit_radius": b.limit_radius(),
        "lambda0": l.lambda0(),
        "lambda1": l.lambda1(),
        "lambda_inf": l.lambda_inf(),
    })
}

fn cex_verify(cfg: &RunConfig, a: CexVerifyArgs) -> Result<Vec<Verdict>> {
    let input: PathBuf = cfg.require(a.input.clone(), "input")?;
    let dirs = cfg.ranged(a.dirs, "dirs", 128, 16, 65536)?;
    let samples = cfg.ranged(a.samples, "samples", 10_000, 1, 1_000_000)?;
    let text = std::fs::read_to_string(&input).with_context(|| format!("cannot read {}", input.display()))?;
    let field = read_cex(&text)?;
    let levels = field.levels();
    // bodies whose excess is still a normal float, at most 16 spread evenly
    let usable: Vec<usize> = (0..field.bodies().len())
        .filter(|&k| k <= levels.last_index() && levels.excess(k) >= 1e-250)
        .collect();
    let step = usable.len().div_ceil(16).max(1);
    let ks: Vec<usize> = usable.iter().step_by(step).copied().collect();
    let rebuilt = ks
        .iter()
        .map(|&k| reconstruct_body(&field, k, dirs))
        .collect::<kl_core::Result<Vec<_>>>()?;
    let reconstruction = reconstruction_report(&field, &ks, &rebuilt, dirs);
    let convexity = check_midpoint_convexity(&field, samples, cfg.seed, 1e-8);
    let gaps = check_level_gaps(levels);
    let reports = [reconstruction, convexity, gaps];
    for r in &reports {
        report_line(r);
    }
    let mut out = OutDir::create(&cfg.out)?;
    out.write_json(
        "verify.json",
        &json!({
            "command": "cex verify",
            "input": input.display().to_string(),
            "summary": cex_summary(&field),
            "checked_bodies": ks,
            "rays": dirs,
            "pairs": samples,
            "seed": cfg.seed,
            "reports": reports.iter().map(report_json).collect::<Vec<_>>(),
        }),
    )?;
    let mut curves = Vec::new();
    let mut paths = Vec::new();
    for (&k, body) in ks.iter().zip(&rebuilt) {
        curves.push(outline(field.bodies().body(k), 360));
        paths.push(outline(body, 360));
    }
    let path_refs: Vec<(&[Point], &str)> = paths.iter().map(|p| (p.as_slice(), PATH_STROKE)).collect();
    out.write(
        "verify.svg",
        &overlay(&curves, &path_refs, &[], "reconstructed sublevel sets"),
    )?;
    finish(&out);
    Ok(reports.iter().map(|r| r.verdict).collect())
}

/// FAIL iff every complete generation contributes at least `c/n` with
/// `c > 0`, so the partial sums grow at least like a harmonic series and
/// no desingularization can bound them. Witness `x = [n, G_n]` for the
/// generation with the smallest `n·G_n`; the margin is `−n·G_n`.
fn harmonic_report(table: &WitnessTable) -> CheckReport {
    let pick = table
        .generations
        .iter()
        .min_by(|a, b| (a.n as f64 * a.measured).total_cmp(&(b.n as f64 * b.measured)));
    match pick {
        None => CheckReport {
            name: "hausdorff_sum".into(),
            verdict: Verdict::Inconclusive,
            witness: Witness {
                x: Vec::new(),
                r: f64::NAN,
                margin: f64::NAN,
            },
            tol: 0.0,
        },
        Some(g) => CheckReport::from_margin(
            "hausdorff_sum",
            Witness {
                x: vec![g.n as f64, g.measured],
                r: g.n as f64,
                margin: -(g.n as f64) * g.measured,
            },
            0.0,
        ),
    }
}

fn cex_witness(cfg: &RunConfig, a: CexWitnessArgs) -> Result<Vec<Verdict>> {
    let gens = cfg.ranged(
        a.gens,
        "gens",
        40,
        1,
        kl_core::counterexample::rings::MAX_GENERATION - 2,
    )?;
    let bodies = build_rings(gens + 2)?;
    let table = kl_failure_witness(&bodies, bodies.last_index())?;
    let report = harmonic_report(&table);
    report_line(&report);
    let last = table.rows.last().map_or(0.0, |r| r.partial_sum);
    let increasing = table.rows.windows(2).all(|w| w[1].partial_sum > w[0].partial_sum);
    say!(
        "partial sum {last:.6} = {:.3} x first generation ({} generations)",
        last / table.first_generation_sum,
        table.generations.len()
    );
    let mut out = OutDir::create(&cfg.out)?;
    let mut csv = String::from("k,n,m,dist,partial_sum\n");
    for r in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k,
            r.n,
            r.m,
            sig17(r.dist),
            sig17(r.partial_sum)
        ));
    }
    out.write("witness.csv", &csv)?;
    out.write_json(
        "witness.json",
        &json!({
            "command": "cex witness",
            "generations": gens,
            "bodies": bodies.len(),
            "partial_sums_increasing": increasing,
            "final_partial_sum": last,
            "ratio_to_first_generation": last / table.first_generation_sum,
            "table": table,
            "reports": [report_json(&report)],
        }),
    )?;
    // partial sums against k, scaled into the unit square
    let n = table.rows.len().max(1) as f64;
    let scale = if last > 0.0 { last } else { 1.0 };
    let sums: Vec<Point> = table
        .rows
        .iter()
        .map(|r| Point::new((r.k + 1) as f64 / n, r.partial_sum / scale))
        .collect();
    let first = table.first_generation_sum / scale;
    let guide = [Point::new(0.0, first), Point::new(1.0, first)];
    let mut svg = Svg::window(0.5, 0.5, 0.55);
    svg.polyline(&guide, LEVEL_STROKE, 1.0);
    svg.polyline(&sums, PATH_STROKE, 2.0);
    svg.label(&format!("partial Hausdorff sums, {gens} generations"));
    out.write("witness.svg", &svg.finish())?;
    finish(&out);
    Ok(vec![report.verdict])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_specs() {
        assert!(matches!(parse_phi("power:0.5").unwrap(), PhiSpec::Power(t) if t == 0.5));
        assert!(parse_phi("power:2").is_err());
        assert!(parse_phi("magic").is_err());
    }

    #[test]
    fn exit_codes_follow_the_error_class() {
        assert_eq!(exit_code_for(&usage("x")), 2);
        assert_eq!(exit_code_for(&kl_core::Error::InvalidArgument("x".into()).into()), 2);
        assert_eq!(exit_code_for(&kl_core::Error::Stalled { t: 1.0 }.into()), 1);
    }

    #[test]
    fn harmonic_witness_fails_on_positive_generations() {
        let bodies = build_rings(6).unwrap();
        let table = kl_failure_witness(&bodies, bodies.last_index()).unwrap();
        let r = harmonic_report(&table);
        assert_eq!(r.verdict, Verdict::Fail);
        let n = r.witness.x[0];
        assert_eq!(r.witness.margin, -n * r.witness.x[1]);
    }
}
