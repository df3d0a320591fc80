//! Report records and their JSON, CSV and text renderings.

use std::fmt::Write as _;

use npreg_core::asymconst::{round_display, ConstantsReport, Region};
use npreg_core::intervals::{CiMethod, CiWarning, ConfidenceInterval};
use npreg_core::Kernel;
use npreg_sim::CsvRow;
use serde::{Deserialize, Serialize};

use crate::args::Format;
use crate::error::{CliError, Result};

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub method: CiMethod,
    pub lower: f64,
    pub upper: f64,
    pub length: f64,
    pub estimate: f64,
    pub bias_correction: f64,
    pub se: f64,
    pub alpha: f64,
    pub warnings: Vec<CiWarning>,
}

impl From<&ConfidenceInterval> for IntervalRecord {
    fn from(c: &ConfidenceInterval) -> Self {
        IntervalRecord {
            method: c.method,
            lower: c.lower,
            upper: c.upper,
            length: c.length(),
            estimate: c.estimate,
            bias_correction: c.bias_correction,
            se: c.se,
            alpha: c.alpha,
            warnings: c.warnings.clone(),
        }
    }
}

/// Fit diagnostics at one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub n: usize,
    pub n_eff: usize,
    pub h: f64,
    pub nh: f64,
    pub c_n: f64,
    /// Absent when `C_LP,n` is degenerate.
    pub c_lp_n: Option<f64>,
    pub q_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Diagnostics {
    Point(PointDiagnostics),
    Cutoff {
        n: usize,
        nh: f64,
        plus: PointDiagnostics,
        minus: PointDiagnostics,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub schema_version: u32,
    pub command: String,
    pub request: serde_json::Value,
    pub estimate: f64,
    pub intervals: Vec<IntervalRecord>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

/// Constants rounded to the two decimals used for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayConstants {
    pub k_plp: f64,
    pub k_mplp: f64,
    pub k_rbc: f64,
    pub length_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub kernel: Kernel,
    pub p: usize,
    pub region: Region,
    pub c: f64,
    pub c_lp: f64,
    pub q: f64,
    pub k_plp: f64,
    pub k_mplp: f64,
    pub k_rbc: f64,
    pub k_conventional: f64,
    pub length_ratio: f64,
    pub display: DisplayConstants,
}

impl From<&ConstantsReport> for ConstantsRecord {
    fn from(r: &ConstantsReport) -> Self {
        ConstantsRecord {
            kernel: r.kernel,
            p: r.p,
            region: r.region,
            c: r.c,
            c_lp: r.c_lp,
            q: r.q,
            k_plp: r.k_plp,
            k_mplp: r.k_mplp,
            k_rbc: r.k_rbc,
            k_conventional: r.k_conventional,
            length_ratio: r.length_ratio,
            display: DisplayConstants {
                k_plp: round_display(r.k_plp),
                k_mplp: round_display(r.k_mplp),
                k_rbc: round_display(r.k_rbc),
                length_ratio: round_display(r.length_ratio),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsOutput {
    pub schema_version: u32,
    pub command: String,
    pub request: serde_json::Value,
    pub constants: Vec<ConstantsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub schema_version: u32,
    pub command: String,
    pub request: serde_json::Value,
    pub results: Vec<CsvRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Intervals(IntervalReport),
    Constants(ConstantsOutput),
    Simulate(SimulateOutput),
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Usage(format!("csv output: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("csv output: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Usage(e.to_string()))
}

/// Flat CSV row for an interval; warnings joined by `;`.
#[derive(Serialize)]
struct IntervalCsv {
    method: CiMethod,
    lower: f64,
    upper: f64,
    length: f64,
    estimate: f64,
    bias_correction: f64,
    se: f64,
    alpha: f64,
    warnings: String,
}

#[derive(Serialize)]
struct ConstantsCsv {
    kernel: Kernel,
    p: usize,
    region: Region,
    c: f64,
    c_lp: f64,
    q: f64,
    k_plp: f64,
    k_mplp: f64,
    k_rbc: f64,
    k_conventional: f64,
    length_ratio: f64,
}

fn warning_name(w: &CiWarning) -> &'static str {
    match w {
        CiWarning::SingleDraw => "single_draw",
        CiWarning::DegenerateScalingFallback => "degenerate_scaling_fallback",
    }
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = match self {
                    Report::Intervals(r) => serde_json::to_string_pretty(r),
                    Report::Constants(r) => serde_json::to_string_pretty(r),
                    Report::Simulate(r) => serde_json::to_string_pretty(r),
                }
                .map_err(|e| CliError::Usage(format!("json output: {e}")))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => match self {
                Report::Intervals(r) => csv_string(r.intervals.iter().map(|i| {
                    IntervalCsv {
                        method: i.method,
                        lower: i.lower,
                        upper: i.upper,
                        length: i.length,
                        estimate: i.estimate,
                        bias_correction: i.bias_correction,
                        se: i.se,
                        alpha: i.alpha,
                        warnings: i
                            .warnings
                            .iter()
                            .map(warning_name)
                            .collect::<Vec<_>>()
                            .join(";"),
                    }
                })),
                Report::Constants(r) => csv_string(r.constants.iter().map(|c| ConstantsCsv {
                    kernel: c.kernel,
                    p: c.p,
                    region: c.region,
                    c: c.c,
                    c_lp: c.c_lp,
                    q: c.q,
                    k_plp: c.k_plp,
                    k_mplp: c.k_mplp,
                    k_rbc: c.k_rbc,
                    k_conventional: c.k_conventional,
                    length_ratio: c.length_ratio,
                })),
                Report::Simulate(r) => csv_string(&r.results),
            },
            Format::Text => Ok(self.text()),
        }
    }

    fn text(&self) -> String {
        let mut s = String::new();
        match self {
            Report::Intervals(r) => {
                let _ = writeln!(s, "estimate {:.4}", r.estimate);
                for i in &r.intervals {
                    let _ = writeln!(
                        s,
                        "{:<13} [{:.4}, {:.4}]  length {:.4}",
                        i.method.name(),
                        i.lower,
                        i.upper,
                        i.length
                    );
                }
                let point = |s: &mut String, label: &str, d: &PointDiagnostics| {
                    let _ = writeln!(
                        s,
                        "{label}n_eff {}  h {:.4}  C_n {:.4}  Q_n {}",
                        d.n_eff,
                        d.h,
                        d.c_n,
                        opt4(d.q_n)
                    );
                };
                match &r.diagnostics {
                    Diagnostics::Point(d) => point(&mut s, "", d),
                    Diagnostics::Cutoff { plus, minus, .. } => {
                        point(&mut s, "right: ", plus);
                        point(&mut s, "left:  ", minus);
                    }
                }
                for w in &r.warnings {
                    let _ = writeln!(s, "warning: {w}");
                }
            }
            Report::Constants(r) => {
                let _ = writeln!(
                    s,
                    "{:<13} {:<9} {:>7} {:>7} {:>7} {:>7} {:>7}",
                    "kernel", "region", "C", "Q", "K_mPLP", "K_RBC", "ratio"
                );
                for c in &r.constants {
                    let _ = writeln!(
                        s,
                        "{:<13} {:<9} {:>7.4} {:>7.4} {:>7.2} {:>7.2} {:>7.2}",
                        c.kernel.name(),
                        c.region.to_string(),
                        c.c,
                        c.q,
                        c.display.k_mplp,
                        c.display.k_rbc,
                        c.display.length_ratio
                    );
                }
            }
            Report::Simulate(r) => {
                for row in &r.results {
                    let _ = writeln!(
                        s,
                        "{:<6} n={:<6} {:<7} hbar {:.4}  {:<13} coverage {}  length {}  failures {}",
                        row.dgp,
                        row.n,
                        row.rule,
                        row.hbar,
                        row.method,
                        opt4(row.coverage),
                        opt4(row.length),
                        row.failures
                    );
                }
            }
        }
        s
    }
}
