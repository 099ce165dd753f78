//! Coalescing pair walks on a fixed pedigree digraph, hazard-curve
//! estimation, and the stationary distribution of the single walk.
//!
//! Two ancestral lineages start at independent uniform vertices and move one
//! generation per step, each following one of the two out-slots of its
//! current vertex. Lineages that sit in the same individual may merge: the
//! diploid rule (`BernoulliHalf`) merges with probability 1/2 and otherwise
//! forces the pair onto the two distinct slots next step; the alternative
//! reading (`IndependentEdges`) lets co-located lineages pick slots
//! independently and merges them exactly when they pick the same slot. On a
//! doubled edge the two readings coincide: the pair stays co-located either
//! way.
//!
//! `Independent` mode is the fully randomized comparison pedigree: every
//! occupied vertex gets a fresh uniform parent pair each generation, so the
//! merge chance is 1/(2N) per generation from the start.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::sample::RngSpec;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    /// Walk on a fixed 2-out digraph.
    Cyclical,
    /// Fresh uniform parents every generation.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeetingRule {
    /// Co-located lineages merge with probability 1/2, else take the two
    /// distinct out-slots next step.
    BernoulliHalf,
    /// Co-located lineages pick slots independently and merge exactly on a
    /// slot coincidence.
    IndependentEdges,
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkConfig {
    pub mode: WalkMode,
    /// Number of sampled pairs.
    pub pairs: usize,
    /// Generation horizon; pairs still distinct at the horizon are censored.
    pub t_max: usize,
    pub meeting_rule: MeetingRule,
    pub rng: RngSpec,
    /// Redraw the second start until it differs from the first.
    pub distinct_starts: bool,
}

impl WalkConfig {
    pub fn new(mode: WalkMode, pairs: usize, t_max: usize, meeting_rule: MeetingRule, rng: RngSpec) -> Self {
        Self {
            mode,
            pairs,
            t_max,
            meeting_rule,
            rng,
            distinct_starts: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::InvalidConfig("pairs must be >= 1".into()));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidConfig("t_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome for one pair: the 1-based absorption generation, or censoring at
/// the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoalescenceRecord {
    pub replicate: u64,
    /// `None` when the pair was still distinct at `t_max`.
    pub generation: Option<u32>,
}

/// Runs all pairs of the configuration. Each pair draws from its own
/// sub-stream, so the result is identical for any worker count, and records
/// are returned in pair order.
pub fn simulate_pairs(
    g: Option<&Digraph>,
    n: usize,
    cfg: &WalkConfig,
) -> Result<Vec<CoalescenceRecord>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let graph = match cfg.mode {
        WalkMode::Cyclical => {
            let g = g.ok_or(Error::MissingGraph)?;
            if g.n() != n {
                return Err(Error::InvalidConfig(format!(
                    "graph has {} vertices, walk config says {n}",
                    g.n()
                )));
            }
            g.require_two_out()?;
            Some(g)
        }
        WalkMode::Independent => None,
    };
    let records: Vec<CoalescenceRecord> = (0..cfg.pairs)
        .into_par_iter()
        .map(|pair| {
            let mut rng = cfg.rng.substream(pair as u64);
            let generation = run_pair(graph, n, cfg, &mut rng);
            CoalescenceRecord {
                replicate: cfg.rng.replicate,
                generation,
            }
        })
        .collect();
    Ok(records)
}

fn run_pair(
    graph: Option<&Digraph>,
    n: usize,
    cfg: &WalkConfig,
    rng: &mut impl Rng,
) -> Option<u32> {
    let mut a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n);
    if cfg.distinct_starts && n > 1 {
        while b == a {
            b = rng.gen_range(0..n);
        }
    }
    // set when a co-located pair declined to merge and must split
    let mut forced_split = false;
    for k in 1..=cfg.t_max as u32 {
        match cfg.meeting_rule {
            MeetingRule::BernoulliHalf => {
                if forced_split {
                    let (s0, s1) = parent_pair(graph, a, rng, n);
                    a = s0;
                    b = s1;
                } else if a == b {
                    let (s0, s1) = parent_pair(graph, a, rng, n);
                    a = if rng.gen_range(0..2) == 0 { s0 } else { s1 };
                    b = if rng.gen_range(0..2) == 0 { s0 } else { s1 };
                } else {
                    a = step_one(graph, a, rng, n);
                    b = step_one(graph, b, rng, n);
                }
                if a == b {
                    if rng.gen_bool(0.5) {
                        return Some(k);
                    }
                    forced_split = true;
                } else {
                    forced_split = false;
                }
            }
            MeetingRule::IndependentEdges => {
                if a == b {
                    let i = rng.gen_range(0..2);
                    let j = rng.gen_range(0..2);
                    if i == j {
                        return Some(k);
                    }
                    let (s0, s1) = parent_pair(graph, a, rng, n);
                    a = s0;
                    b = s1;
                } else {
                    a = step_one(graph, a, rng, n);
                    b = step_one(graph, b, rng, n);
                }
            }
        }
    }
    None
}

/// The two parents of vertex `v` this generation.
fn parent_pair(graph: Option<&Digraph>, v: usize, rng: &mut impl Rng, n: usize) -> (usize, usize) {
    match graph {
        Some(g) => {
            let s = g.out_slots(v);
            (s[0] as usize, s[1] as usize)
        }
        None => (rng.gen_range(0..n), rng.gen_range(0..n)),
    }
}

/// One lineage moves to a uniformly chosen parent of its vertex.
fn step_one(graph: Option<&Digraph>, v: usize, rng: &mut impl Rng, n: usize) -> usize {
    match graph {
        Some(g) => {
            let s = g.out_slots(v);
            s[rng.gen_range(0..2)] as usize
        }
        // uniform pick among two fresh uniform parents is itself uniform
        None => rng.gen_range(0..n),
    }
}

/// One hazard estimate: `absorbed / at_risk` at a generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HazardPoint {
    pub k: u32,
    /// Pairs still unmerged when entering generation k (censored pairs
    /// never leave the denominator).
    pub at_risk: u64,
    pub absorbed: u64,
    /// `None` when no pair was at risk.
    pub hazard: Option<f64>,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardCurve {
    pub t_max: usize,
    pub pooled: Vec<HazardPoint>,
    /// Per-replicate curves keyed by replicate id, ascending.
    pub per_replicate: Vec<(u64, Vec<HazardPoint>)>,
}

/// Pools records from one or more pedigree replicates into per-generation
/// hazard estimates, plus one curve per replicate.
pub fn hazard_curve(records: &[CoalescenceRecord], t_max: usize) -> HazardCurve {
    let pooled = curve_of(records.iter().copied(), records.len(), t_max);
    let mut ids: Vec<u64> = records.iter().map(|r| r.replicate).collect();
    ids.sort_unstable();
    ids.dedup();
    let per_replicate = ids
        .into_iter()
        .map(|id| {
            let subset: Vec<CoalescenceRecord> =
                records.iter().copied().filter(|r| r.replicate == id).collect();
            let curve = curve_of(subset.iter().copied(), subset.len(), t_max);
            (id, curve)
        })
        .collect();
    HazardCurve {
        t_max,
        pooled,
        per_replicate,
    }
}

fn curve_of(
    records: impl Iterator<Item = CoalescenceRecord>,
    total: usize,
    t_max: usize,
) -> Vec<HazardPoint> {
    let mut absorbed = vec![0u64; t_max + 1];
    for r in records {
        if let Some(k) = r.generation {
            absorbed[k as usize] += 1;
        }
    }
    let mut at_risk = total as u64;
    let mut out = Vec::with_capacity(t_max);
    for k in 1..=t_max {
        let a = absorbed[k];
        let (hazard, std_error) = if at_risk > 0 {
            let h = a as f64 / at_risk as f64;
            (Some(h), Some((h * (1.0 - h) / at_risk as f64).sqrt()))
        } else {
            (None, None)
        };
        out.push(HazardPoint {
            k: k as u32,
            at_risk,
            absorbed: a,
            hazard,
            std_error,
        });
        at_risk -= a;
    }
    out
}

/// Distribution of the single random walk after convergence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    /// Total-variation distance between the result and its one-step image.
    pub residual: f64,
    pub iterations: usize,
}

/// Fixed point of the one-step balance equation by repeated application
/// from the uniform start, stopping when successive iterates differ by at
/// most `tol` in total variation.
///
/// Requires a 2-out graph (each slot carries probability 1/2). Fails with
/// the last residual when the chain has not settled within `max_iters`,
/// which happens on periodic limit cycles; see
/// [`stationary_distribution_damped`] for the workaround.
pub fn stationary_distribution(
    g: &Digraph,
    tol: f64,
    max_iters: usize,
) -> Result<StationaryDistribution> {
    stationary_distribution_damped(g, tol, max_iters, 0.0)
}

/// Same iteration, but each step keeps probability `damping` of staying
/// put. Self-loops do not change the balance equation, so any fixed point
/// is a fixed point of the undamped chain; damping only breaks periodicity.
pub fn stationary_distribution_damped(
    g: &Digraph,
    tol: f64,
    max_iters: usize,
    damping: f64,
) -> Result<StationaryDistribution> {
    g.require_two_out()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance {tol} must be positive")));
    }
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::InvalidConfig(format!(
            "damping {damping} outside [0, 1)"
        )));
    }
    let n = g.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iters {
        step(g, &x, &mut y, damping);
        residual = tv_distance(&x, &y);
        std::mem::swap(&mut x, &mut y);
        if residual <= tol {
            // one more application bounds the balance residual
            step(g, &x, &mut y, damping);
            let balance = tv_distance(&x, &y);
            return Ok(StationaryDistribution {
                pi: x,
                residual: balance,
                iterations: iter,
            });
        }
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        residual,
    })
}

fn step(g: &Digraph, x: &[f64], y: &mut [f64], damping: f64) {
    y.fill(0.0);
    let keep = damping;
    let move_mass = (1.0 - damping) * 0.5;
    for (v, &mass) in x.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let s = g.out_slots(v);
        y[s[0] as usize] += mass * move_mass;
        y[s[1] as usize] += mass * move_mass;
        if keep > 0.0 {
            y[v] += mass * keep;
        }
    }
}

fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}
