//! Replication engine and aggregation.

use npreg_core::asymconst::Region;
use npreg_core::bootmoments::PointAnalysis;
use npreg_core::intervals::{point_ci, CiMethod};
use npreg_core::{FitConfig, HcType, Kernel, RddAnalysis, RddConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{draw_sample, DgpSpec, SimSample};
use crate::error::{Result, SimError};
use crate::oracle::{design_region, oracle_bandwidth};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "NPREG_THREADS";

/// The four intervals compared in the coverage tables.
pub const TABLE_METHODS: [CiMethod; 4] = [
    CiMethod::NaiveGp,
    CiMethod::NaiveLp,
    CiMethod::RbcPgp,
    CiMethod::Mplp,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    OracleMse,
    Fixed(f64),
    /// One bandwidth per replication, replayed in order.
    PerReplication(Vec<f64>),
}

impl BandwidthRule {
    pub fn label(&self) -> &'static str {
        match self {
            BandwidthRule::OracleMse => "oracle",
            BandwidthRule::Fixed(_) => "fixed",
            BandwidthRule::PerReplication(_) => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dgp: DgpSpec,
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    /// Evaluation point; the cutoff (0) for the discontinuity designs.
    pub point: f64,
    pub kernel: Kernel,
    pub order: usize,
    pub bandwidth: BandwidthRule,
    pub hc: HcType,
    pub methods: Vec<CiMethod>,
    pub seed: u64,
    /// Worker count; falls back to `NPREG_THREADS`, then to all cores.
    pub threads: Option<usize>,
}

impl SimConfig {
    /// Oracle-bandwidth setup of the coverage tables: local linear, HC3,
    /// 95% intervals, 5000 replications.
    pub fn table(dgp: DgpSpec, point: f64, n: usize, seed: u64) -> SimConfig {
        SimConfig {
            dgp,
            n,
            replications: 5000,
            alpha: 0.05,
            point,
            kernel: dgp.default_kernel(),
            order: 1,
            bandwidth: BandwidthRule::OracleMse,
            hc: HcType::Hc3,
            methods: TABLE_METHODS.to_vec(),
            seed,
            threads: None,
        }
    }

    pub fn region(&self) -> Region {
        design_region(self.dgp, self.point)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.methods.is_empty() {
            return bad("no interval methods requested".into());
        }
        if self.dgp.is_rdd() && self.point != 0.0 {
            return bad(format!(
                "{} has its cutoff at 0, got point {}",
                self.dgp, self.point
            ));
        }
        if !(-1.0..=1.0).contains(&self.point) {
            return bad(format!("point {} outside the support [-1, 1]", self.point));
        }
        match &self.bandwidth {
            BandwidthRule::Fixed(h) if !(*h > 0.0 && h.is_finite()) => {
                bad(format!("bandwidth must be positive, got {h}"))
            }
            BandwidthRule::PerReplication(hs) if hs.len() < self.replications => bad(format!(
                "{} bandwidths supplied for {} replications",
                hs.len(),
                self.replications
            )),
            BandwidthRule::PerReplication(hs) => match hs.iter().find(|h| !(**h > 0.0)) {
                Some(h) => bad(format!("bandwidth must be positive, got {h}")),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// One interval's fate in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Interval {
        covered: bool,
        length: f64,
    },
    /// Machine-readable error code.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub bandwidth: f64,
    /// Aligned with `SimConfig::methods`.
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: CiMethod,
    /// `None` when every replication failed.
    pub coverage_pct: Option<f64>,
    pub avg_length: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub dgp: DgpSpec,
    pub n: usize,
    pub point: f64,
    pub rule: String,
    pub replications: usize,
    /// Average bandwidth across replications.
    pub hbar: f64,
    pub methods: Vec<MethodResult>,
}

impl SimResult {
    pub fn method(&self, method: CiMethod) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Bandwidth for replication `rep`; the oracle does not depend on the data.
fn bandwidth(config: &SimConfig, oracle: Option<f64>, rep: usize) -> f64 {
    match &config.bandwidth {
        BandwidthRule::OracleMse => oracle.unwrap_or(f64::NAN),
        BandwidthRule::Fixed(h) => *h,
        BandwidthRule::PerReplication(hs) => hs[rep],
    }
}

fn failed_all(config: &SimConfig, code: &str) -> Vec<Outcome> {
    vec![Outcome::Failed(code.to_string()); config.methods.len()]
}

fn outcomes(
    config: &SimConfig,
    truth: f64,
    ci: impl Fn(CiMethod) -> npreg_core::Result<npreg_core::ConfidenceInterval>,
) -> Vec<Outcome> {
    config
        .methods
        .iter()
        .map(|&m| match ci(m) {
            Ok(c) => Outcome::Interval {
                covered: c.contains(truth),
                length: c.length(),
            },
            Err(e) => Outcome::Failed(e.code().to_string()),
        })
        .collect()
}

fn run_one(config: &SimConfig, oracle: Option<f64>, rep: usize) -> Replication {
    let h = bandwidth(config, oracle, rep);
    let truth = config.dgp.true_value(config.point);
    let alpha = config.alpha;
    let sample = match draw_sample(config.dgp, config.n, config.seed, rep as u64) {
        Ok(s) => s,
        Err(e) => {
            return Replication {
                bandwidth: h,
                outcomes: failed_all(config, e.code()),
            }
        }
    };
    let outcomes = match sample {
        SimSample::Regression(s) => {
            let analysis = FitConfig::new(config.point, h, config.order, config.kernel)
                .and_then(|cfg| PointAnalysis::new(&s, &cfg, config.hc));
            match analysis {
                Ok(a) => outcomes(config, truth, |m| point_ci(&a, m, alpha, None)),
                Err(e) => failed_all(config, e.code()),
            }
        }
        SimSample::Discontinuity(s) => {
            let cfg = RddConfig::new(h, config.order, config.kernel);
            match RddAnalysis::new(&s, &cfg, config.hc) {
                Ok(a) => outcomes(config, truth, |m| a.ci(m, alpha, None)),
                Err(e) => failed_all(config, e.code()),
            }
        }
    };
    Replication {
        bandwidth: h,
        outcomes,
    }
}

fn oracle_for(config: &SimConfig) -> Result<Option<f64>> {
    match config.bandwidth {
        BandwidthRule::OracleMse => Ok(Some(oracle_bandwidth(
            config.dgp,
            config.point,
            config.n,
            config.kernel,
            config.order,
            config.region(),
        )?)),
        _ => Ok(None),
    }
}

/// A single replication, exactly as `run_simulation` computes it.
pub fn replicate(config: &SimConfig, rep: usize) -> Result<Replication> {
    config.validate()?;
    if rep >= config.replications {
        return Err(SimError::InvalidConfig(format!(
            "replication {rep} out of range"
        )));
    }
    Ok(run_one(config, oracle_for(config)?, rep))
}

fn worker_count(config: &SimConfig) -> Option<usize> {
    config.threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
    })
}

/// Every replication in order, run on a dedicated worker pool.
pub fn run_replications(config: &SimConfig) -> Result<Vec<Replication>> {
    config.validate()?;
    let oracle = oracle_for(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = worker_count(config) {
        builder = builder.num_threads(k.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| run_one(config, oracle, rep))
            .collect()
    }))
}

/// Sequential reduction of per-replication records.
pub fn aggregate(config: &SimConfig, reps: &[Replication]) -> SimResult {
    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let (mut hits, mut total_len, mut ok, mut failures) = (0usize, 0.0, 0usize, 0usize);
            for r in reps {
                match &r.outcomes[j] {
                    Outcome::Interval { covered, length } => {
                        ok += 1;
                        hits += usize::from(*covered);
                        total_len += length;
                    }
                    Outcome::Failed(_) => failures += 1,
                }
            }
            let avg = |v: f64| (ok > 0).then(|| v / ok as f64);
            MethodResult {
                method,
                coverage_pct: avg(100.0 * hits as f64),
                avg_length: avg(total_len),
                failures,
            }
        })
        .collect();
    let hbar = reps.iter().map(|r| r.bandwidth).sum::<f64>() / reps.len().max(1) as f64;
    SimResult {
        dgp: config.dgp,
        n: config.n,
        point: config.point,
        rule: config.bandwidth.label().to_string(),
        replications: reps.len(),
        hbar,
        methods,
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    let reps = run_replications(config)?;
    Ok(aggregate(config, &reps))
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub dgp: String,
    pub n: usize,
    pub rule: String,
    pub hbar: f64,
    pub method: String,
    pub coverage: Option<f64>,
    pub length: Option<f64>,
    pub failures: usize,
    /// Appended after the fixed columns so the two regression points differ.
    pub point: f64,
}

impl SimResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.methods
            .iter()
            .map(|m| CsvRow {
                dgp: self.dgp.name().to_string(),
                n: self.n,
                rule: self.rule.clone(),
                hbar: self.hbar,
                method: m.method.name().to_string(),
                coverage: m.coverage_pct,
                length: m.avg_length,
                failures: m.failures,
                point: self.point,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dgp: DgpSpec, point: f64) -> SimConfig {
        SimConfig {
            replications: 40,
            threads: Some(1),
            ..SimConfig::table(dgp, point, 400, 9)
        }
    }

    #[test]
    fn validation() {
        let mut c = small(DgpSpec::Rdd1, 0.0);
        assert!(c.validate().is_ok());
        c.point = 0.5;
        assert!(c.validate().is_err());
        let mut c = small(DgpSpec::Npreg, -1.0 / 3.0);
        c.replications = 0;
        assert!(c.validate().is_err());
        c.replications = 3;
        c.bandwidth = BandwidthRule::PerReplication(vec![0.2, 0.3]);
        assert!(c.validate().is_err());
        c.bandwidth = BandwidthRule::Fixed(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn aggregates_are_in_range() {
        for (d, x) in [(DgpSpec::Npreg, -1.0 / 3.0), (DgpSpec::Rdd2, 0.0)] {
            let r = run_simulation(&small(d, x)).unwrap();
            assert_eq!(r.replications, 40);
            for m in &r.methods {
                let c = m.coverage_pct.unwrap();
                assert!((0.0..=100.0).contains(&c));
                assert!(m.avg_length.unwrap() > 0.0);
            }
            assert_eq!(r.csv_rows().len(), 4);
        }
    }

    #[test]
    fn tiny_bandwidth_counts_failures() {
        let c = SimConfig {
            bandwidth: BandwidthRule::Fixed(1e-4),
            ..small(DgpSpec::Npreg, -1.0 / 3.0)
        };
        let r = run_simulation(&c).unwrap();
        for m in &r.methods {
            assert_eq!(m.failures, 40);
            assert!(m.coverage_pct.is_none());
        }
    }

    #[test]
    fn naive_lengths_agree_per_replication() {
        let c = small(DgpSpec::Npreg, -1.0);
        for rep in 0..5 {
            let r = replicate(&c, rep).unwrap();
            match (&r.outcomes[0], &r.outcomes[1]) {
                (Outcome::Interval { length: a, .. }, Outcome::Interval { length: b, .. }) => {
                    assert!((a - b).abs() <= 1e-12 * a)
                }
                other => panic!("{other:?}"),
            }
        }
    }
}
