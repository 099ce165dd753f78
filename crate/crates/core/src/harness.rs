//! Experiment orchestration: replicate scheduling, seed management,
//! aggregation, and the claim suites that verify the model's predictions
//! end to end.
//!
//! Every claim carries pinned desk-scale bounds. The asymptotic statements
//! they check are with-high-probability results, so bounds on random
//! quantities come as frequency criteria over replicates, with explicit
//! slack on non-constructive constants. A report stores every number a
//! check consumed, so pass/fail can be re-derived from the report alone,
//! and it records the `(seed, replicate, purpose)` stream tags so any
//! single replicate can be re-run in isolation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::branching::{second_scc_constant, survival_probability, OffspringPmf};
use crate::components::{
    distances_to_set, edges_entering_set, edges_leaving_set, scc_decompose,
};
use crate::degree::{weighted_distance, EmpiricalInDegree, WeightSequence};
use crate::error::{Error, Result};
use crate::graph::DegreeSequence;
use crate::sample::{
    canonical_graph_count, canonical_index, graph_from_canonical_index, graph_probability,
    sample_dcm, sample_multinomial_indegrees, sample_wcm, RngSpec,
};
use crate::walks::{
    hazard_curve, simulate_pairs, stationary_distribution, MeetingRule, WalkConfig, WalkMode,
};

/// Worker-count override for replicate parallelism; default is all cores.
pub const WORKERS_ENV: &str = "PEDIGREE_WORKERS";

const SURVIVAL_TOL: f64 = 1e-12;

// Pinned acceptance bounds, per claim.
const GIANT_MEAN_RANGE: (f64, f64) = (0.787, 0.807);
const GIANT_REPLICATE_RANGE: (f64, f64) = (0.77, 0.82);
const SECOND_SCC_LOG_FACTOR: f64 = 2.0;
const PATHS_MAX_DISTANCE: f64 = 15.0;
const PATHS_TYPICAL_DISTANCE: f64 = 10.0;
const PATHS_TYPICAL_SHARE: f64 = 0.9;
const OUT_EDGES_ZERO_SHARE: f64 = 0.9;
const OUT_EDGES_MAX_PER_VERTEX: f64 = 0.001;
const IN_EDGES_RATIO_RANGE: (f64, f64) = (0.85, 1.15);
const IN_EDGES_SHARE: f64 = 0.9;
const INDEGREE_MEDIAN_MAX: f64 = 0.3;
const INDEGREE_RATIO_RANGE: (f64, f64) = (5.0, 20.0);
const EQUIV_SAMPLES: u64 = 1_000_000;
const EQUIV_MIN_P: f64 = 0.001;
const EQUIV_MAX_Z: f64 = 4.0;
const HAZARD_PAIRS: usize = 200_000;
const HAZARD_T_MAX: usize = 100;
const HAZARD_CYCLICAL_RANGE: (f64, f64) = (0.5, 2.0);
const HAZARD_CONTROL_RANGE: (f64, f64) = (0.8, 1.25);
const HAZARD_CONTROL_K_MAX: usize = 50;
const STATIONARY_TOL: f64 = 1e-10;
const STATIONARY_MAX_ITERS: usize = 200_000;
const STATIONARY_OUTSIDE_MAX: f64 = 1e-8;
const STATIONARY_RESIDUAL_MAX: f64 = 1e-9;

/// The model predictions the harness can verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Giant SCC fraction concentrates near the survival probability.
    Giant,
    /// Second largest SCC stays logarithmic.
    SecondScc,
    /// Every vertex reaches the giant in a handful of steps.
    Paths,
    /// No edges leave the giant.
    OutEdges,
    /// Edges into the giant scale like 2 x*(1-x*) N.
    InEdges,
    /// Empirical in-degree converges to Poisson(2) in weighted distance.
    Indegree,
    /// Cyclical sampler and multinomial configuration model agree in law.
    Equivalence,
    /// Pair-coalescence hazard settles near 1/(2N).
    Hazard,
    /// Stationary distribution is supported on the giant.
    Stationary,
}

impl Claim {
    pub fn all() -> [Claim; 9] {
        [
            Claim::Giant,
            Claim::SecondScc,
            Claim::Paths,
            Claim::OutEdges,
            Claim::InEdges,
            Claim::Indegree,
            Claim::Equivalence,
            Claim::Hazard,
            Claim::Stationary,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Claim::Giant => "giant",
            Claim::SecondScc => "second_scc",
            Claim::Paths => "paths",
            Claim::OutEdges => "out_edges",
            Claim::InEdges => "in_edges",
            Claim::Indegree => "indegree",
            Claim::Equivalence => "equivalence",
            Claim::Hazard => "hazard",
            Claim::Stationary => "stationary",
        }
    }

    /// Population sizes the claim's bounds were calibrated for.
    pub fn canonical_n(&self) -> Vec<usize> {
        match self {
            Claim::Giant | Claim::Paths | Claim::OutEdges | Claim::InEdges => vec![100_000],
            Claim::SecondScc => vec![10_000, 100_000],
            Claim::Indegree => vec![1_000, 100_000],
            Claim::Equivalence => vec![3],
            Claim::Hazard => vec![512],
            Claim::Stationary => vec![1_000],
        }
    }

    pub fn canonical_replicates(&self) -> usize {
        match self {
            Claim::Giant | Claim::SecondScc | Claim::Paths | Claim::InEdges | Claim::Indegree => 30,
            Claim::OutEdges => 50,
            Claim::Equivalence => 1,
            Claim::Hazard => 20,
            Claim::Stationary => 10,
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Claim::all()
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown claim {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub claim: Claim,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Report destination; stdout only when absent.
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
}

impl ExperimentConfig {
    /// Canonical configuration for a claim: the sizes and replicate counts
    /// its bounds were stated for.
    pub fn canonical(claim: Claim, seed: u64) -> Self {
        Self {
            claim,
            n_values: claim.canonical_n(),
            replicates: claim.canonical_replicates(),
            seed,
            output: None,
            format: ReportFormat::Json,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("n_values must be nonempty".into()));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "n_values must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// One bound evaluation; `pass` is re-derivable from the stored numbers.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub observed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl CheckOutcome {
    fn within(name: &str, observed: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = lower.map_or(true, |lo| observed >= lo) && upper.map_or(true, |hi| observed <= hi);
        Self {
            name: name.to_owned(),
            observed,
            lower,
            upper,
            pass,
        }
    }
}

/// Per-replicate statistics plus the stream tags that reproduce them.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub values: BTreeMap<String, f64>,
    pub streams: Vec<RngSpec>,
}

/// Per-(claim, N) summary.
#[derive(Debug, Clone, Serialize)]
pub struct ClaimEntry {
    pub n: usize,
    pub replicates: usize,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_target: Option<f64>,
    pub pass: bool,
    pub wall_clock_secs: f64,
    pub checks: Vec<CheckOutcome>,
    pub replicate_records: Vec<ReplicateRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimReport {
    pub schema: u32,
    pub claim: Claim,
    pub seed: u64,
    pub pass: bool,
    pub entries: Vec<ClaimEntry>,
    /// Checks spanning several population sizes (e.g. distance ratios).
    pub cross_checks: Vec<CheckOutcome>,
}

impl ClaimReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Summary rows, one per (claim, n).
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.entries
            .iter()
            .map(|e| SummaryRow {
                claim: self.claim,
                n: e.n,
                replicates: e.replicates,
                estimate: e.estimate,
                std_error: e.std_error,
                paper_target: e.paper_target,
                pass: e.pass,
                wall_clock_secs: e.wall_clock_secs,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.summary_rows())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub claim: Claim,
    pub n: usize,
    pub replicates: usize,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub paper_target: Option<f64>,
    pub pass: bool,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization")
    }
}

fn rows_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("claim,n,replicates,estimate,std_error,paper_target,pass,wall_clock_secs\n");
    for r in rows {
        let se = r.std_error.map(|v| v.to_string()).unwrap_or_default();
        let target = r.paper_target.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.claim, r.n, r.replicates, r.estimate, se, target, r.pass, r.wall_clock_secs
        ));
    }
    out
}

/// Merges reports into one table keyed by (claim, n); duplicates are an
/// error.
pub fn summarize(reports: &[ClaimReport]) -> Result<SummaryTable> {
    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::new();
    for report in reports {
        for row in report.summary_rows() {
            if !seen.insert((row.claim, row.n)) {
                return Err(Error::DuplicateReportKey {
                    claim: row.claim.to_string(),
                    n: row.n,
                });
            }
            rows.push(row);
        }
    }
    Ok(SummaryTable { rows })
}

/// Atomic report write: temp file in the same directory, then rename.
pub fn write_report(report: &ClaimReport, path: &Path, format: ReportFormat) -> Result<()> {
    let payload = match format {
        ReportFormat::Json => report.to_json_pretty(),
        ReportFormat::Csv => report.to_csv(),
    };
    write_atomic(path, &payload)
}

pub fn write_atomic(path: &Path, payload: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, payload)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs a claim over every configured population size and replicate,
/// aggregates, checks the pinned bounds, and writes the report when an
/// output path is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ClaimReport> {
    cfg.validate()?;
    install_pool(|| {
        let mut entries = Vec::new();
        for &n in &cfg.n_values {
            let is_largest = n == *cfg.n_values.last().expect("nonempty");
            let entry = match cfg.claim {
                Claim::Giant => run_giant(cfg, n)?,
                Claim::SecondScc => run_second_scc(cfg, n)?,
                Claim::Paths => run_paths(cfg, n)?,
                Claim::OutEdges => run_out_edges(cfg, n)?,
                Claim::InEdges => run_in_edges(cfg, n)?,
                Claim::Indegree => run_indegree(cfg, n, is_largest)?,
                Claim::Equivalence => run_equivalence(cfg, n)?,
                Claim::Hazard => run_hazard(cfg, n)?,
                Claim::Stationary => run_stationary(cfg, n)?,
            };
            entries.push(entry);
        }
        let cross_checks = cross_checks(cfg, &entries);
        let pass = entries.iter().all(|e| e.pass) && cross_checks.iter().all(|c| c.pass);
        let report = ClaimReport {
            schema: 1,
            claim: cfg.claim,
            seed: cfg.seed,
            pass,
            entries,
            cross_checks,
        };
        if let Some(path) = &cfg.output {
            write_report(&report, path, cfg.format)?;
        }
        Ok(report)
    })
}

fn install_pool<R>(f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    let workers = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1);
    match workers {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("worker pool")
            .install(f),
        None => f(),
    }
}

fn spec(cfg: &ExperimentConfig, replicate: u64, purpose: &str) -> RngSpec {
    RngSpec::new(cfg.seed)
        .with_replicate(replicate)
        .with_purpose(format!("{}/{}", cfg.claim.name(), purpose))
}

fn replicate_loop<T: Send>(
    cfg: &ExperimentConfig,
    n: usize,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|rep| f(rep).map_err(|e| e.in_context(cfg.claim.name(), n, rep)))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_error(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    Some((var / values.len() as f64).sqrt())
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

fn x_star() -> f64 {
    survival_probability(&OffspringPmf::poisson2(), SURVIVAL_TOL).expect("Poisson(2) fixed point")
}

fn record(
    replicate: u64,
    values: impl IntoIterator<Item = (&'static str, f64)>,
    streams: Vec<RngSpec>,
) -> ReplicateRecord {
    ReplicateRecord {
        replicate,
        values: values
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v))
            .collect(),
        streams,
    }
}

struct EntryBuilder {
    n: usize,
    replicates: usize,
    started: Instant,
}

impl EntryBuilder {
    fn new(n: usize, replicates: usize) -> Self {
        Self {
            n,
            replicates,
            started: Instant::now(),
        }
    }

    fn finish(
        self,
        estimate: f64,
        std_error: Option<f64>,
        paper_target: Option<f64>,
        checks: Vec<CheckOutcome>,
        replicate_records: Vec<ReplicateRecord>,
    ) -> ClaimEntry {
        ClaimEntry {
            n: self.n,
            replicates: self.replicates,
            estimate,
            std_error,
            paper_target,
            pass: checks.iter().all(|c| c.pass),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            checks,
            replicate_records,
        }
    }
}

fn run_giant(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let scc = scc_decompose(&g);
        let fraction = scc.giant_fraction();
        Ok((record(rep, [("giant_fraction", fraction)], vec![gspec]), fraction))
    })?;
    let (records, values): (Vec<_>, Vec<f64>) = per.into_iter().unzip();
    let m = mean(&values);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        CheckOutcome::within(
            "mean_giant_fraction",
            m,
            Some(GIANT_MEAN_RANGE.0),
            Some(GIANT_MEAN_RANGE.1),
        ),
        CheckOutcome::within(
            "min_replicate_fraction",
            lo,
            Some(GIANT_REPLICATE_RANGE.0),
            None,
        ),
        CheckOutcome::within(
            "max_replicate_fraction",
            hi,
            None,
            Some(GIANT_REPLICATE_RANGE.1),
        ),
    ];
    Ok(builder.finish(m, std_error(&values), Some(x_star()), checks, records))
}

fn run_second_scc(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let scc = scc_decompose(&g);
        let second = scc.second_size() as f64;
        Ok((record(rep, [("second_scc_size", second)], vec![gspec]), second))
    })?;
    let (records, values): (Vec<_>, Vec<f64>) = per.into_iter().unzip();
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let constant = second_scc_constant(x_star())?;
    let bound = SECOND_SCC_LOG_FACTOR * constant * (n as f64).ln();
    let checks = vec![CheckOutcome::within(
        "max_second_scc_size",
        max,
        None,
        Some(bound),
    )];
    Ok(builder.finish(
        max,
        None,
        Some(constant * (n as f64).ln()),
        checks,
        records,
    ))
}

fn run_paths(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let scc = scc_decompose(&g);
        let dist = distances_to_set(&g, scc.giant_mask());
        let mut max_dist = 0usize;
        let mut unreachable = 0usize;
        for d in dist {
            match d {
                Some(d) => max_dist = max_dist.max(d),
                None => unreachable += 1,
            }
        }
        Ok((
            record(
                rep,
                [
                    ("max_distance", max_dist as f64),
                    ("unreachable", unreachable as f64),
                ],
                vec![gspec],
            ),
            (max_dist as f64, unreachable as f64),
        ))
    })?;
    let (records, values): (Vec<_>, Vec<(f64, f64)>) = per.into_iter().unzip();
    let max = values.iter().map(|v| v.0).fold(0.0f64, f64::max);
    let unreachable: f64 = values.iter().map(|v| v.1).sum();
    let typical = values
        .iter()
        .filter(|v| v.0 <= PATHS_TYPICAL_DISTANCE && v.1 == 0.0)
        .count() as f64
        / values.len() as f64;
    let checks = vec![
        CheckOutcome::within("unreachable_vertices", unreachable, None, Some(0.0)),
        CheckOutcome::within("max_distance_to_giant", max, None, Some(PATHS_MAX_DISTANCE)),
        CheckOutcome::within(
            "share_replicates_within_10",
            typical,
            Some(PATHS_TYPICAL_SHARE),
            None,
        ),
    ];
    let target = crate::branching::path_length_bound(n).ok();
    Ok(builder.finish(max, None, target, checks, records))
}

fn run_out_edges(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let scc = scc_decompose(&g);
        let leaving = edges_leaving_set(&g, scc.giant_mask()) as f64;
        Ok((record(rep, [("edges_leaving", leaving)], vec![gspec]), leaving))
    })?;
    let (records, values): (Vec<_>, Vec<f64>) = per.into_iter().unzip();
    let zero_share = values.iter().filter(|&&v| v == 0.0).count() as f64 / values.len() as f64;
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let checks = vec![
        CheckOutcome::within(
            "share_replicates_zero",
            zero_share,
            Some(OUT_EDGES_ZERO_SHARE),
            None,
        ),
        CheckOutcome::within(
            "max_edges_leaving",
            max,
            None,
            Some(OUT_EDGES_MAX_PER_VERTEX * n as f64),
        ),
    ];
    Ok(builder.finish(zero_share, None, Some(0.0), checks, records))
}

fn run_in_edges(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let xs = x_star();
    let scale = 2.0 * xs * (1.0 - xs) * n as f64;
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let scc = scc_decompose(&g);
        let entering = edges_entering_set(&g, scc.giant_mask()) as f64;
        let ratio = entering / scale;
        Ok((
            record(
                rep,
                [("edges_entering", entering), ("ratio", ratio)],
                vec![gspec],
            ),
            ratio,
        ))
    })?;
    let (records, values): (Vec<_>, Vec<f64>) = per.into_iter().unzip();
    let in_band = values
        .iter()
        .filter(|&&r| (IN_EDGES_RATIO_RANGE.0..=IN_EDGES_RATIO_RANGE.1).contains(&r))
        .count() as f64
        / values.len() as f64;
    let checks = vec![CheckOutcome::within(
        "share_replicates_in_band",
        in_band,
        Some(IN_EDGES_SHARE),
        None,
    )];
    Ok(builder.finish(mean(&values), std_error(&values), Some(1.0), checks, records))
}

fn run_indegree(cfg: &ExperimentConfig, n: usize, enforce_median: bool) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let weights = WeightSequence::squared();
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let xi = EmpiricalInDegree::from_graph(&g);
        let distance = weighted_distance(&xi, &weights);
        Ok((record(rep, [("weighted_distance", distance)], vec![gspec]), distance))
    })?;
    let (records, values): (Vec<_>, Vec<f64>) = per.into_iter().unzip();
    let med = median(&values);
    let checks = if enforce_median {
        vec![CheckOutcome::within(
            "median_weighted_distance",
            med,
            None,
            Some(INDEGREE_MEDIAN_MAX),
        )]
    } else {
        Vec::new()
    };
    Ok(builder.finish(med, std_error(&values), Some(0.0), checks, records))
}

fn run_equivalence(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let cells_u64 = canonical_graph_count(n)?;
    if cells_u64 > 4_000_000 {
        return Err(Error::InvalidConfig(format!(
            "equivalence claim needs a small canonical space, n = {n} has {cells_u64} graphs"
        )));
    }
    let cells = cells_u64 as usize;
    // exact law of each canonical graph
    let mut exact = vec![0.0f64; cells];
    for id in 0..cells {
        let g = graph_from_canonical_index(n, id as u64)?;
        exact[id] = graph_probability(&g)?
            .linear
            .expect("exact probability is representable at small n");
    }
    let per = replicate_loop(cfg, n, |rep| {
        // the replicate field carries the sample index below, so the
        // experiment replicate goes into the purpose tag
        let wcm_spec = RngSpec::new(cfg.seed).with_purpose(format!("equivalence/wcm/r{rep}"));
        let deg_spec =
            RngSpec::new(cfg.seed).with_purpose(format!("equivalence/dcm-degrees/r{rep}"));
        let match_spec =
            RngSpec::new(cfg.seed).with_purpose(format!("equivalence/dcm-match/r{rep}"));
        let mut wcm_counts = vec![0u64; cells];
        let mut dcm_counts = vec![0u64; cells];
        for sample in 0..EQUIV_SAMPLES {
            let g = sample_wcm(n, &wcm_spec.clone().with_replicate(sample))?;
            wcm_counts[canonical_index(&g)? as usize] += 1;
            let deg = sample_multinomial_indegrees(n, &deg_spec.clone().with_replicate(sample))?;
            let ds = DegreeSequence::two_out(deg)?;
            let g = sample_dcm(&ds, &match_spec.clone().with_replicate(sample))?;
            dcm_counts[canonical_index(&g)? as usize] += 1;
        }
        let p_value = two_sample_chi_square(&wcm_counts, &dcm_counts)?;
        let max_z_wcm = max_z_against_exact(&wcm_counts, &exact);
        let max_z_dcm = max_z_against_exact(&dcm_counts, &exact);
        Ok((
            record(
                rep,
                [
                    ("chi_square_p", p_value),
                    ("max_z_wcm", max_z_wcm),
                    ("max_z_dcm", max_z_dcm),
                ],
                vec![wcm_spec, deg_spec, match_spec],
            ),
            (p_value, max_z_wcm.max(max_z_dcm)),
        ))
    })?;
    let (records, values): (Vec<_>, Vec<(f64, f64)>) = per.into_iter().unzip();
    let min_p = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let max_z = values.iter().map(|v| v.1).fold(0.0f64, f64::max);
    let checks = vec![
        CheckOutcome::within("min_chi_square_p", min_p, Some(EQUIV_MIN_P), None),
        CheckOutcome::within("max_z_vs_exact", max_z, None, Some(EQUIV_MAX_Z)),
    ];
    Ok(builder.finish(min_p, None, None, checks, records))
}

/// Two-sample chi-square over canonical-graph counts; returns the p-value.
fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<f64> {
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    let grand = (total_a + total_b) as f64;
    let mut stat = 0.0;
    let mut used_cells = 0usize;
    for (&ca, &cb) in a.iter().zip(b) {
        let cell = (ca + cb) as f64;
        if cell == 0.0 {
            continue;
        }
        used_cells += 1;
        let ea = cell * total_a as f64 / grand;
        let eb = cell * total_b as f64 / grand;
        let da = ca as f64 - ea;
        let db = cb as f64 - eb;
        stat += da * da / ea + db * db / eb;
    }
    if used_cells < 2 {
        return Err(Error::InvalidConfig(
            "chi-square needs at least two occupied cells".into(),
        ));
    }
    let df = (used_cells - 1) as f64;
    let dist = ChiSquared::new(df)
        .map_err(|e| Error::InvalidConfig(format!("chi-square setup: {e}")))?;
    Ok(dist.sf(stat))
}

fn max_z_against_exact(counts: &[u64], exact: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let s = total as f64;
    counts
        .iter()
        .zip(exact)
        .map(|(&c, &p)| {
            let se = (p * (1.0 - p) / s).sqrt();
            ((c as f64 / s) - p).abs() / se
        })
        .fold(0.0f64, f64::max)
}

fn run_hazard(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let reps = cfg.replicates;
    let base = HAZARD_PAIRS / reps;
    let remainder = HAZARD_PAIRS % reps;
    let pairs_of = |rep: u64| base + usize::from((rep as usize) < remainder);

    let mut records = Vec::with_capacity(reps);
    let mut cyclical_all = Vec::with_capacity(HAZARD_PAIRS);
    let mut control_all = Vec::with_capacity(HAZARD_PAIRS);
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let cyc_spec = spec(cfg, rep, "pairs-cyclical");
        let cyc_cfg = WalkConfig::new(
            WalkMode::Cyclical,
            pairs_of(rep),
            HAZARD_T_MAX,
            MeetingRule::BernoulliHalf,
            cyc_spec.clone(),
        );
        let cyc = simulate_pairs(Some(&g), n, &cyc_cfg)?;
        let ind_spec = spec(cfg, rep, "pairs-independent");
        let ind_cfg = WalkConfig::new(
            WalkMode::Independent,
            pairs_of(rep),
            HAZARD_T_MAX,
            MeetingRule::BernoulliHalf,
            ind_spec.clone(),
        );
        let ind = simulate_pairs(None, n, &ind_cfg)?;
        let absorbed = cyc.iter().filter(|r| r.generation.is_some()).count() as f64;
        let rec = record(
            rep,
            [
                ("pairs", pairs_of(rep) as f64),
                ("cyclical_absorbed_fraction", absorbed / cyc.len() as f64),
            ],
            vec![gspec, cyc_spec, ind_spec],
        );
        Ok((rec, cyc, ind))
    })?;
    for (rec, cyc, ind) in per {
        records.push(rec);
        cyclical_all.extend(cyc);
        control_all.extend(ind);
    }

    let log2n = (n as f64).log2();
    let k_lo = (2.0 * log2n).ceil() as usize;
    let k_hi = ((6.0 * log2n).floor() as usize).min(HAZARD_T_MAX);
    if k_lo >= k_hi {
        return Err(Error::InvalidConfig(format!(
            "hazard window [{k_lo}, {k_hi}] is empty at n = {n}; raise t_max or n"
        )));
    }
    let baseline = 1.0 / (2.0 * n as f64);

    let cyc_curve = hazard_curve(&cyclical_all, HAZARD_T_MAX);
    let window: Vec<f64> = cyc_curve.pooled[k_lo - 1..k_hi]
        .iter()
        .filter_map(|p| p.hazard)
        .collect();
    if window.is_empty() {
        return Err(Error::InvalidConfig(
            "no defined hazard estimates in the window".into(),
        ));
    }
    let cyc_ratio = mean(&window) / baseline;

    let ind_curve = hazard_curve(&control_all, HAZARD_T_MAX);
    let k_cap = HAZARD_CONTROL_K_MAX.min(HAZARD_T_MAX);
    let (absorbed, exposure) = ind_curve.pooled[..k_cap]
        .iter()
        .fold((0u64, 0u64), |(a, e), p| (a + p.absorbed, e + p.at_risk));
    let ind_ratio = (absorbed as f64 / exposure as f64) / baseline;

    let checks = vec![
        CheckOutcome::within(
            "cyclical_hazard_ratio",
            cyc_ratio,
            Some(HAZARD_CYCLICAL_RANGE.0),
            Some(HAZARD_CYCLICAL_RANGE.1),
        ),
        CheckOutcome::within(
            "independent_hazard_ratio",
            ind_ratio,
            Some(HAZARD_CONTROL_RANGE.0),
            Some(HAZARD_CONTROL_RANGE.1),
        ),
    ];
    Ok(builder.finish(cyc_ratio, None, Some(1.0), checks, records))
}

fn run_stationary(cfg: &ExperimentConfig, n: usize) -> Result<ClaimEntry> {
    let builder = EntryBuilder::new(n, cfg.replicates);
    let per = replicate_loop(cfg, n, |rep| {
        let gspec = spec(cfg, rep, "graph");
        let g = sample_wcm(n, &gspec)?;
        let scc = scc_decompose(&g);
        let sd = stationary_distribution(&g, STATIONARY_TOL, STATIONARY_MAX_ITERS)?;
        let outside: f64 = sd
            .pi
            .iter()
            .zip(scc.giant_mask())
            .filter(|(_, &giant)| !giant)
            .map(|(&p, _)| p)
            .sum();
        Ok((
            record(
                rep,
                [
                    ("mass_outside_giant", outside),
                    ("balance_residual", sd.residual),
                    ("iterations", sd.iterations as f64),
                ],
                vec![gspec],
            ),
            (outside, sd.residual),
        ))
    })?;
    let (records, values): (Vec<_>, Vec<(f64, f64)>) = per.into_iter().unzip();
    let max_outside = values.iter().map(|v| v.0).fold(0.0f64, f64::max);
    let max_residual = values.iter().map(|v| v.1).fold(0.0f64, f64::max);
    let checks = vec![
        CheckOutcome::within(
            "max_mass_outside_giant",
            max_outside,
            None,
            Some(STATIONARY_OUTSIDE_MAX),
        ),
        CheckOutcome::within(
            "max_balance_residual",
            max_residual,
            None,
            Some(STATIONARY_RESIDUAL_MAX),
        ),
    ];
    Ok(builder.finish(max_outside, None, Some(0.0), checks, records))
}

fn cross_checks(cfg: &ExperimentConfig, entries: &[ClaimEntry]) -> Vec<CheckOutcome> {
    match cfg.claim {
        Claim::Indegree if entries.len() >= 2 => {
            let first = entries.first().expect("nonempty");
            let last = entries.last().expect("nonempty");
            let ratio = first.estimate / last.estimate;
            vec![CheckOutcome::within(
                "median_distance_ratio_small_over_large",
                ratio,
                Some(INDEGREE_RATIO_RANGE.0),
                Some(INDEGREE_RATIO_RANGE.1),
            )]
        }
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_names_round_trip() {
        for claim in Claim::all() {
            assert_eq!(Claim::from_str(claim.name()).unwrap(), claim);
        }
        assert!(Claim::from_str("nope").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::canonical(Claim::Giant, 1);
        cfg.replicates = 0;
        assert!(run_experiment(&cfg).is_err());
        cfg.replicates = 1;
        cfg.n_values = vec![];
        assert!(run_experiment(&cfg).is_err());
        cfg.n_values = vec![100, 50];
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn giant_claim_small_scale_structure() {
        let cfg = ExperimentConfig {
            claim: Claim::Giant,
            n_values: vec![2_000],
            replicates: 4,
            seed: 5,
            output: None,
            format: ReportFormat::Json,
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.entries.len(), 1);
        let entry = &report.entries[0];
        assert_eq!(entry.replicate_records.len(), 4);
        assert_eq!(entry.checks.len(), 3);
        // derivability: each check's pass agrees with its stored numbers
        for c in &entry.checks {
            let re_derived = c.lower.map_or(true, |lo| c.observed >= lo)
                && c.upper.map_or(true, |hi| c.observed <= hi);
            assert_eq!(re_derived, c.pass);
        }
        // streams are recorded for re-running
        assert_eq!(entry.replicate_records[2].streams[0].replicate, 2);
        assert_eq!(entry.replicate_records[2].streams[0].purpose, "giant/graph");
    }

    #[test]
    fn reports_are_deterministic_modulo_wall_clock() {
        let cfg = ExperimentConfig {
            claim: Claim::SecondScc,
            n_values: vec![500, 1_000],
            replicates: 3,
            seed: 9,
            output: None,
            format: ReportFormat::Json,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let strip = |r: &ClaimReport| {
            let mut v: serde_json::Value = serde_json::from_str(&r.to_json_pretty()).unwrap();
            for entry in v["entries"].as_array_mut().unwrap() {
                entry["wall_clock_secs"] = serde_json::Value::Null;
            }
            v
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn worker_count_does_not_change_reports() {
        let cfg = ExperimentConfig {
            claim: Claim::OutEdges,
            n_values: vec![400],
            replicates: 6,
            seed: 21,
            output: None,
            format: ReportFormat::Json,
        };
        let strip = |r: &ClaimReport| {
            let mut v: serde_json::Value = serde_json::from_str(&r.to_json_pretty()).unwrap();
            for entry in v["entries"].as_array_mut().unwrap() {
                entry["wall_clock_secs"] = serde_json::Value::Null;
            }
            v
        };
        std::env::set_var(WORKERS_ENV, "1");
        let serial = strip(&run_experiment(&cfg).unwrap());
        std::env::set_var(WORKERS_ENV, "3");
        let parallel = strip(&run_experiment(&cfg).unwrap());
        std::env::remove_var(WORKERS_ENV);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn summarize_merges_and_rejects_duplicates() {
        assert_eq!(summarize(&[]).unwrap().rows.len(), 0);
        let cfg_a = ExperimentConfig {
            claim: Claim::SecondScc,
            n_values: vec![300],
            replicates: 2,
            seed: 3,
            output: None,
            format: ReportFormat::Json,
        };
        let cfg_b = ExperimentConfig {
            claim: Claim::OutEdges,
            n_values: vec![300],
            replicates: 2,
            seed: 3,
            output: None,
            format: ReportFormat::Json,
        };
        let a = run_experiment(&cfg_a).unwrap();
        let b = run_experiment(&cfg_b).unwrap();
        let table = summarize(&[a.clone(), b]).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(matches!(
            summarize(&[a.clone(), a]).unwrap_err(),
            Error::DuplicateReportKey { .. }
        ));
    }

    #[test]
    fn report_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let cfg = ExperimentConfig {
            claim: Claim::SecondScc,
            n_values: vec![200],
            replicates: 2,
            seed: 3,
            output: Some(path.clone()),
            format: ReportFormat::Json,
        };
        run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(!dir.path().join("report.json.tmp").exists());
    }

    #[test]
    fn csv_rows_have_fixed_header() {
        let cfg = ExperimentConfig {
            claim: Claim::SecondScc,
            n_values: vec![200],
            replicates: 2,
            seed: 3,
            output: None,
            format: ReportFormat::Csv,
        };
        let report = run_experiment(&cfg).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with(
            "claim,n,replicates,estimate,std_error,paper_target,pass,wall_clock_secs\n"
        ));
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("second_scc,200,2,"));
    }

    #[test]
    fn chi_square_detects_shifted_distribution() {
        // identical counts => p ~ 1; grossly different => p ~ 0
        let a = vec![500u64, 500, 500, 500];
        let p = two_sample_chi_square(&a, &a).unwrap();
        assert!(p > 0.99);
        let b = vec![800u64, 200, 500, 500];
        let p = two_sample_chi_square(&a, &b).unwrap();
        assert!(p < 1e-6);
    }

    #[test]
    fn equivalence_claim_context_on_bad_n() {
        let cfg = ExperimentConfig {
            claim: Claim::Equivalence,
            n_values: vec![50],
            replicates: 1,
            seed: 3,
            output: None,
            format: ReportFormat::Json,
        };
        assert!(run_experiment(&cfg).is_err());
    }
}
