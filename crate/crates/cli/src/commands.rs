use std::path::Path;

use npreg_core::asymconst::{EquivalentKernels, Region};
use npreg_core::bootmoments::PointAnalysis;
use npreg_core::intervals::{point_ci, CiWarning, ConfidenceInterval, ResamplingPlan};
use npreg_core::{FitConfig, Kernel, RddAnalysis, RddConfig};
use npreg_sim::engine::{run_simulation, BandwidthRule, SimConfig, TABLE_METHODS};
use npreg_sim::DgpSpec;
use serde::Serialize;

use crate::args::{
    Bootstrap, CiArgs, Command, ConstantsArgs, FitArgs, Format, RddArgs, SimulateArgs,
};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, Table};
use crate::report::{
    ConstantsOutput, ConstantsRecord, Diagnostics, IntervalRecord, IntervalReport,
    PointDiagnostics, Report, SimulateOutput, SCHEMA_VERSION,
};

/// Points used by the regression presets.
pub const INTERIOR_POINT: f64 = -1.0 / 3.0;
pub const BOUNDARY_POINT: f64 = -1.0;

pub fn default_format(command: &Command) -> Format {
    match command {
        Command::Simulate(_) => Format::Csv,
        _ => Format::Json,
    }
}

pub fn run_command(command: &Command) -> Result<Report> {
    match command {
        Command::Ci(a) => run_ci(a),
        Command::Rdd(a) => run_rdd(a),
        Command::Constants(a) => run_constants(a),
        Command::Simulate(a) => run_simulate(a),
    }
}

fn echo(command: &str, args: &impl Serialize, input: Option<&Path>) -> serde_json::Value {
    let mut v = serde_json::to_value(args).unwrap_or(serde_json::Value::Null);
    if let serde_json::Value::Object(m) = &mut v {
        m.insert("command".into(), command.into());
        if let Some(p) = input {
            m.insert("input".into(), p.display().to_string().into());
        }
    }
    v
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn load(fit: &FitArgs) -> Result<(Table, &Path)> {
    let path = fit
        .input()
        .ok_or_else(|| CliError::Usage("missing INPUT csv file".into()))?;
    Ok((ingest_csv(path)?, path.as_path()))
}

fn plan(fit: &FitArgs) -> Result<Option<ResamplingPlan>> {
    match fit.bootstrap {
        Bootstrap::Analytic => Ok(None),
        Bootstrap::Resampled => Ok(Some(ResamplingPlan::new(
            fit.reps,
            fit.multiplier,
            fit.seed,
        )?)),
    }
}

fn point_diagnostics(a: &PointAnalysis, n: usize) -> PointDiagnostics {
    let q = a.q_factor().ok();
    PointDiagnostics {
        n,
        n_eff: a.effective_n(),
        h: a.config().bandwidth,
        nh: a.nh(),
        c_n: a.curvature(),
        c_lp_n: q.map(|q| q.c_lp),
        q_n: q.map(|q| q.q),
    }
}

fn warnings_of(intervals: &[ConfidenceInterval]) -> Vec<String> {
    let mut out = Vec::new();
    for c in intervals {
        for w in &c.warnings {
            out.push(match w {
                CiWarning::SingleDraw => {
                    format!("{}: one bootstrap draw, both quantiles coincide", c.method)
                }
                CiWarning::DegenerateScalingFallback => {
                    format!("{}: C_LP,n is degenerate, plp interval reported", c.method)
                }
            });
        }
    }
    out
}

fn run_ci(a: &CiArgs) -> Result<Report> {
    positive("bandwidth", a.fit.bandwidth)?;
    let (table, path) = load(&a.fit)?;
    let sample = table.sample()?;
    let cfg = FitConfig::new(a.point, a.fit.bandwidth, a.fit.order, a.fit.kernel)?;
    let analysis = PointAnalysis::new(&sample, &cfg, a.fit.hc)?;
    let plan = plan(&a.fit)?;
    let intervals = a
        .fit
        .methods()
        .into_iter()
        .map(|m| point_ci(&analysis, m, a.fit.alpha, plan.as_ref()))
        .collect::<npreg_core::Result<Vec<_>>>()?;
    Ok(Report::Intervals(IntervalReport {
        schema_version: SCHEMA_VERSION,
        command: "ci".into(),
        request: echo("ci", a, Some(path)),
        estimate: analysis.estimate(),
        intervals: intervals.iter().map(IntervalRecord::from).collect(),
        diagnostics: Diagnostics::Point(point_diagnostics(&analysis, sample.len())),
        warnings: warnings_of(&intervals),
    }))
}

fn run_rdd(a: &RddArgs) -> Result<Report> {
    positive("bandwidth", a.fit.bandwidth)?;
    if let Some(h) = a.bandwidth_minus {
        positive("bandwidth-minus", h)?;
    }
    let (table, path) = load(&a.fit)?;
    let sample = table.rdd_sample(a.cutoff)?;
    let cfg = RddConfig {
        bandwidth_minus: a.bandwidth_minus.unwrap_or(a.fit.bandwidth),
        ..RddConfig::new(a.fit.bandwidth, a.fit.order, a.fit.kernel)
    };
    let analysis = RddAnalysis::new(&sample, &cfg, a.fit.hc)?;
    let plan = plan(&a.fit)?;
    let intervals = a
        .fit
        .methods()
        .into_iter()
        .map(|m| analysis.ci(m, a.fit.alpha, plan.as_ref()))
        .collect::<npreg_core::Result<Vec<_>>>()?;
    let n = table.x.len();
    Ok(Report::Intervals(IntervalReport {
        schema_version: SCHEMA_VERSION,
        command: "rdd".into(),
        request: echo("rdd", a, Some(path)),
        estimate: analysis.estimate(),
        intervals: intervals.iter().map(IntervalRecord::from).collect(),
        diagnostics: Diagnostics::Cutoff {
            n,
            nh: analysis.nh(),
            plus: point_diagnostics(analysis.plus(), n),
            minus: point_diagnostics(analysis.minus(), n),
        },
        warnings: warnings_of(&intervals),
    }))
}

fn run_constants(a: &ConstantsArgs) -> Result<Report> {
    let kernels: Vec<Kernel> = match (a.kernel, a.all) {
        (Some(k), _) => vec![k],
        (None, _) => Kernel::ALL.to_vec(),
    };
    let regions = match a.region {
        Some(r) => vec![r],
        None => vec![Region::Interior, Region::Boundary],
    };
    let mut constants = Vec::new();
    let mut grid = String::from("kernel,p,region,u,w_plp,w_mplp,w_rbc\n");
    for &k in &kernels {
        for &r in &regions {
            let e = EquivalentKernels::new(k, a.order, r)?;
            constants.push(ConstantsRecord::from(&e.constants()?));
            if a.emit_grid.is_some() {
                for row in e.figure_grid(a.grid_points)? {
                    grid.push_str(&format!(
                        "{k},{},{r},{},{},{},{}\n",
                        a.order, row.u, row.w_plp, row.w_mplp, row.w_rbc
                    ));
                }
            }
        }
    }
    if let Some(path) = &a.emit_grid {
        std::fs::write(path, grid).map_err(|e| CliError::io(path, e))?;
    }
    Ok(Report::Constants(ConstantsOutput {
        schema_version: SCHEMA_VERSION,
        command: "constants".into(),
        request: echo("constants", a, None),
        constants,
    }))
}

/// One bandwidth per non-blank line; `#` starts a comment.
pub fn read_bandwidths(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => out.push(h),
            _ => {
                return Err(CliError::Parse {
                    line: i as u64 + 1,
                    message: format!("`{s}` is not a positive bandwidth"),
                })
            }
        }
    }
    Ok(out)
}

/// `(dgp, point)` pairs the request expands to.
fn designs(a: &SimulateArgs) -> Result<Vec<(DgpSpec, f64)>> {
    let npreg_points = || match a.point {
        Some(x) => vec![(DgpSpec::Npreg, x)],
        None => vec![
            (DgpSpec::Npreg, INTERIOR_POINT),
            (DgpSpec::Npreg, BOUNDARY_POINT),
        ],
    };
    match (a.table, a.dgp) {
        (Some(4), None | Some(DgpSpec::Npreg)) => Ok(npreg_points()),
        (Some(4), Some(d)) => Err(CliError::Usage(format!("table 4 uses npreg, not {d}"))),
        (Some(5), Some(DgpSpec::Npreg)) => Err(CliError::Usage("table 5 uses rdd1 or rdd2".into())),
        (Some(5), Some(d)) => Ok(vec![(d, 0.0)]),
        (Some(5), None) => Ok(vec![(DgpSpec::Rdd1, 0.0), (DgpSpec::Rdd2, 0.0)]),
        (None, Some(DgpSpec::Npreg)) => Ok(npreg_points()),
        (None, Some(d)) => Ok(vec![(d, a.point.unwrap_or(0.0))]),
        (None, None) => Err(CliError::Usage("give --table or --dgp".into())),
        (Some(t), _) => Err(CliError::Usage(format!("unknown table {t}"))),
    }
}

fn run_simulate(a: &SimulateArgs) -> Result<Report> {
    let rule = match (&a.h, a.bandwidth) {
        (Some(path), _) => BandwidthRule::PerReplication(read_bandwidths(path)?),
        (None, Some(h)) => {
            positive("bandwidth", h)?;
            BandwidthRule::Fixed(h)
        }
        (None, None) => BandwidthRule::OracleMse,
    };
    let mut results = Vec::new();
    for (dgp, point) in designs(a)? {
        let n = a.n.unwrap_or(if dgp.is_rdd() { 4000 } else { 2000 });
        let config = SimConfig {
            replications: a.reps,
            alpha: a.alpha,
            kernel: a.kernel.unwrap_or(dgp.default_kernel()),
            order: a.order,
            bandwidth: rule.clone(),
            hc: a.hc,
            methods: if a.method.is_empty() {
                TABLE_METHODS.to_vec()
            } else {
                a.method.clone()
            },
            threads: a.threads,
            ..SimConfig::table(dgp, point, n, a.seed)
        };
        results.extend(run_simulation(&config)?.csv_rows());
    }
    Ok(Report::Simulate(SimulateOutput {
        schema_version: SCHEMA_VERSION,
        command: "simulate".into(),
        request: echo("simulate", a, None),
        results,
    }))
}
