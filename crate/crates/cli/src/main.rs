//! `pedigree`: generate cyclical pedigree digraphs, analyze their
//! component structure, run coalescing walks, and verify the model's
//! quantitative predictions.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pedigree_sim::branching::{pgf, second_scc_constant, survival_probability, OffspringPmf};
use pedigree_sim::components::{
    distances_to_set, edges_entering_set, edges_leaving_set, max_reachable_avoiding, scc_decompose,
};
use pedigree_sim::degree::{
    check_proper, max_degree, weighted_distance, DeltaRule, EmpiricalInDegree, WeightSequence,
};
use pedigree_sim::harness::{
    run_experiment, summarize, write_atomic, Claim, ClaimReport, ExperimentConfig, ReportFormat,
};
use pedigree_sim::sample::{sample_dcm, sample_multinomial_indegrees, sample_wcm};
use pedigree_sim::walks::{
    hazard_curve, simulate_pairs, CoalescenceRecord, HazardCurve, MeetingRule, WalkConfig, WalkMode,
};
use pedigree_sim::{DegreeSequence, Digraph, RngSpec};

#[derive(Parser)]
#[command(
    name = "pedigree",
    version,
    about = "Cyclical pedigree digraphs: sampling, SCC structure, coalescing walks, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random pedigree digraph and write it as an edge list
    Generate {
        /// Population size
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Sampler: direct cyclical model, or multinomial in-degrees fed
        /// through the half-edge matching
        #[arg(long, value_enum)]
        model: Model,
        /// Output path for the edge-list file
        #[arg(long)]
        out: PathBuf,
    },
    /// Statistics of a graph file
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Survival-probability fixed point and the derived constants
    Fixedpoint {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Strongly-connected-component report of a graph file
    Scc {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Coalescing-pair walks; emits per-generation hazard rows
    Coalesce {
        /// Population size
        #[arg(long)]
        n: usize,
        /// Total pair count, split across replicates
        #[arg(long)]
        pairs: usize,
        /// Generation horizon
        #[arg(long)]
        tmax: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Cyclical)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = MeetingArg::Bernoulli)]
        meeting: MeetingArg,
        /// Pedigree replicates
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Run a claim suite; exit code 0 iff all bounds pass
    Verify {
        /// One of: giant, second_scc, paths, out_edges, in_edges, indegree,
        /// equivalence, hazard, stationary, all
        claim: String,
        /// Population sizes (comma separated); default: the claim's
        /// calibrated sizes
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Replicates; default: the claim's calibrated count
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Report destination (full report for one claim, summary table for
        /// `all`)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Empirical in-degree distribution, weighted distance to Poisson(2),
    /// max degree, and the properness report
    Indegree {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightsArg::Squared)]
        weights: WeightsArg,
        /// Second-moment bound for the properness check
        #[arg(long, default_value_t = 10.0)]
        k_bound: f64,
        #[arg(long, value_enum, default_value_t = DeltaRuleArg::LogN)]
        delta_rule: DeltaRuleArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Wcm,
    DcmMultinomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cyclical,
    Independent,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeetingArg {
    Bernoulli,
    IndependentEdges,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Squared,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaRuleArg {
    LogN,
    PaperC2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { n, seed, model, out } => generate(n, seed, model, &out),
        Command::Stats(StatsCommand::Indegree {
            graph,
            weights,
            k_bound,
            delta_rule,
        }) => stats_indegree(&graph, weights, k_bound, delta_rule),
        Command::Fixedpoint { tol } => fixedpoint(tol),
        Command::Scc { graph, format } => scc_report(&graph, format),
        Command::Coalesce {
            n,
            pairs,
            tmax,
            mode,
            meeting,
            reps,
            seed,
            format,
        } => coalesce(n, pairs, tmax, mode, meeting, reps, seed, format),
        Command::Verify {
            claim,
            n,
            reps,
            seed,
            out,
            format,
        } => return verify(&claim, n, reps, seed, out, format),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn generate(n: usize, seed: u64, model: Model, out: &PathBuf) -> Result<()> {
    let g = match model {
        Model::Wcm => sample_wcm(n, &RngSpec::new(seed).with_purpose("generate/wcm"))?,
        Model::DcmMultinomial => {
            let deg = sample_multinomial_indegrees(
                n,
                &RngSpec::new(seed).with_purpose("generate/dcm-degrees"),
            )?;
            let ds = DegreeSequence::two_out(deg)?;
            sample_dcm(&ds, &RngSpec::new(seed).with_purpose("generate/dcm-match"))?
        }
    };
    g.write_edge_list_file(out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("n={} m={} seed={} -> {}", g.n(), g.m(), seed, out.display());
    Ok(())
}

fn stats_indegree(
    graph: &PathBuf,
    _weights: WeightsArg,
    k_bound: f64,
    delta_rule: DeltaRuleArg,
) -> Result<()> {
    let g = Digraph::read_edge_list_file(graph)
        .with_context(|| format!("reading {}", graph.display()))?;
    let xi = EmpiricalInDegree::from_graph(&g);
    let distance = weighted_distance(&xi, &WeightSequence::squared());
    let ds = g.degree_sequence();
    let delta = max_degree(&ds);
    let rule = match delta_rule {
        DeltaRuleArg::LogN => DeltaRule::LogN,
        DeltaRuleArg::PaperC2 => DeltaRule::PaperC2,
    };
    // the properness conditions are stated for constant out-degree 2
    let proper_report = if g.is_two_out() {
        Some(check_proper(&ds, k_bound, rule)?)
    } else {
        None
    };
    let payload = serde_json::json!({
        "xi": xi.xi,
        "n": xi.n,
        "distance": distance,
        "max_degree": delta,
        "proper_report": proper_report,
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(())
}

fn fixedpoint(tol: f64) -> Result<()> {
    let poisson = OffspringPmf::poisson2();
    let x_star = survival_probability(&poisson, tol)?;
    let fixed = 1.0 - x_star;
    let residual = (pgf(&poisson, fixed)? - fixed).abs();
    let payload = serde_json::json!({
        "x_star": x_star,
        "second_scc_constant": second_scc_constant(x_star)?,
        "residual": residual,
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(())
}

fn scc_report(graph: &PathBuf, format: OutputFormat) -> Result<()> {
    let g = Digraph::read_edge_list_file(graph)
        .with_context(|| format!("reading {}", graph.display()))?;
    let scc = scc_decompose(&g);
    let giant = scc.giant_mask();
    let top_sizes: Vec<usize> = scc.sizes().iter().copied().take(5).collect();
    let leaving = edges_leaving_set(&g, giant);
    let entering = edges_entering_set(&g, giant);
    let dist = distances_to_set(&g, giant);
    let max_distance = dist.iter().filter_map(|d| *d).max();
    let unreachable = dist.iter().filter(|d| d.is_none()).count();
    let max_avoiding = max_reachable_avoiding(&g, giant);
    match format {
        OutputFormat::Json => {
            let payload = serde_json::json!({
                "n": g.n(),
                "sizes": top_sizes,
                "giant_fraction": scc.giant_fraction(),
                "edges_leaving_giant": leaving,
                "edges_entering_giant": entering,
                "max_distance_to_giant": max_distance,
                "unreachable_from_giant_complement": unreachable,
                "max_reachable_avoiding": max_avoiding,
            });
            println!("{}", serde_json::to_string_pretty(&payload)?);
        }
        OutputFormat::Csv => {
            println!(
                "n,giant_size,giant_fraction,second_size,edges_leaving_giant,edges_entering_giant,max_distance_to_giant,unreachable,max_reachable_avoiding"
            );
            println!(
                "{},{},{},{},{},{},{},{},{}",
                g.n(),
                scc.giant_size(),
                scc.giant_fraction(),
                scc.second_size(),
                leaving,
                entering,
                max_distance.map(|d| d.to_string()).unwrap_or_default(),
                unreachable,
                max_avoiding
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn coalesce(
    n: usize,
    pairs: usize,
    tmax: usize,
    mode: ModeArg,
    meeting: MeetingArg,
    reps: usize,
    seed: u64,
    format: OutputFormat,
) -> Result<()> {
    anyhow::ensure!(reps >= 1, "reps must be >= 1");
    anyhow::ensure!(pairs >= reps, "need at least one pair per replicate");
    let meeting_rule = match meeting {
        MeetingArg::Bernoulli => MeetingRule::BernoulliHalf,
        MeetingArg::IndependentEdges => MeetingRule::IndependentEdges,
    };
    let base = pairs / reps;
    let remainder = pairs % reps;
    let mut records: Vec<CoalescenceRecord> = Vec::with_capacity(pairs);
    for rep in 0..reps as u64 {
        let rep_pairs = base + usize::from((rep as usize) < remainder);
        let walk_spec = RngSpec::new(seed)
            .with_replicate(rep)
            .with_purpose("coalesce/pairs");
        let cfg = WalkConfig::new(
            match mode {
                ModeArg::Cyclical => WalkMode::Cyclical,
                ModeArg::Independent => WalkMode::Independent,
            },
            rep_pairs,
            tmax,
            meeting_rule,
            walk_spec,
        );
        let rep_records = match mode {
            ModeArg::Cyclical => {
                let gspec = RngSpec::new(seed)
                    .with_replicate(rep)
                    .with_purpose("coalesce/graph");
                let g = sample_wcm(n, &gspec)?;
                simulate_pairs(Some(&g), n, &cfg)?
            }
            ModeArg::Independent => simulate_pairs(None, n, &cfg)?,
        };
        records.extend(rep_records);
    }
    let curve = hazard_curve(&records, tmax);
    match format {
        OutputFormat::Csv => print_hazard_csv(&curve),
        OutputFormat::Json => {
            let payload = serde_json::json!({
                "schema": 1,
                "n": n,
                "pairs": pairs,
                "t_max": tmax,
                "replicates": reps,
                "seed": seed,
                "rows": curve.pooled,
            });
            println!("{}", serde_json::to_string_pretty(&payload)?);
        }
    }
    Ok(())
}

fn print_hazard_csv(curve: &HazardCurve) {
    println!("k,survivors,absorbed,hazard,stderr");
    for p in &curve.pooled {
        println!(
            "{},{},{},{},{}",
            p.k,
            p.at_risk,
            p.absorbed,
            p.hazard.map(|h| h.to_string()).unwrap_or_default(),
            p.std_error.map(|s| s.to_string()).unwrap_or_default()
        );
    }
}

fn verify(
    claim: &str,
    n: Option<Vec<usize>>,
    reps: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
    format: OutputFormat,
) -> Result<ExitCode> {
    let claims: Vec<Claim> = if claim == "all" {
        Claim::all().to_vec()
    } else {
        vec![Claim::from_str(&claim.replace('-', "_"))?]
    };
    let report_format = match format {
        OutputFormat::Json => ReportFormat::Json,
        OutputFormat::Csv => ReportFormat::Csv,
    };
    let single = claims.len() == 1;
    let mut reports: Vec<ClaimReport> = Vec::new();
    for c in claims {
        let cfg = ExperimentConfig {
            claim: c,
            n_values: n.clone().unwrap_or_else(|| c.canonical_n()),
            replicates: reps.unwrap_or_else(|| c.canonical_replicates()),
            seed,
            output: if single { out.clone() } else { None },
            format: report_format,
        };
        let report = run_experiment(&cfg)?;
        print_report(&report);
        reports.push(report);
    }
    let pass = reports.iter().all(|r| r.pass);
    if !single {
        let table = summarize(&reports)?;
        if let Some(path) = &out {
            let payload = match report_format {
                ReportFormat::Json => table.to_json_pretty(),
                ReportFormat::Csv => table.to_csv(),
            };
            write_atomic(path, &payload)?;
        }
    }
    println!("verify: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn print_report(report: &ClaimReport) {
    for e in &report.entries {
        let target = e
            .paper_target
            .map(|t| format!(" target={t:.4}"))
            .unwrap_or_default();
        println!(
            "claim={} n={} reps={} estimate={:.6}{} pass={} ({:.2}s)",
            report.claim, e.n, e.replicates, e.estimate, target, e.pass, e.wall_clock_secs
        );
        for c in &e.checks {
            println!(
                "  {}: observed={:.6} bounds=[{}, {}] {}",
                c.name,
                c.observed,
                c.lower.map(|v| v.to_string()).unwrap_or_else(|| "-inf".into()),
                c.upper.map(|v| v.to_string()).unwrap_or_else(|| "+inf".into()),
                if c.pass { "ok" } else { "VIOLATED" }
            );
        }
    }
    for c in &report.cross_checks {
        println!(
            "  {}: observed={:.6} bounds=[{}, {}] {}",
            c.name,
            c.observed,
            c.lower.map(|v| v.to_string()).unwrap_or_else(|| "-inf".into()),
            c.upper.map(|v| v.to_string()).unwrap_or_else(|| "+inf".into()),
            if c.pass { "ok" } else { "VIOLATED" }
        );
    }
}
