//! Samplers for the cyclical pedigree digraph (WCM) and the directed
//! configuration model, plus the exact graph-probability formula.
//!
//! All randomness flows through [`RngSpec`], which derives an independent
//! ChaCha12 stream from `(seed, replicate, purpose)`. Streams are a pure
//! function of those fields, so replicate-level parallelism cannot change
//! any sampled object.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, Digraph, Vertex};

/// Addressable random stream: `(seed, replicate, purpose)`.
///
/// The generator is ChaCha12 keyed with
/// `SHA-256("wcm-rng-v1" || seed_le || replicate_le || purpose_len_le || purpose)`.
/// Re-implementations in other languages reproduce the streams from this
/// recipe alone. [`RngSpec::substream`] appends an extra little-endian
/// index to the hashed message, giving per-item streams (one per walker
/// pair, for instance) that never collide with the base stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub replicate: u64,
    pub purpose: String,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            replicate: 0,
            purpose: String::new(),
        }
    }

    pub fn with_replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn with_purpose(mut self, purpose: impl Into<String>) -> Self {
        self.purpose = purpose.into();
        self
    }

    fn key(&self, index: Option<u64>) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"wcm-rng-v1");
        h.update(self.seed.to_le_bytes());
        h.update(self.replicate.to_le_bytes());
        h.update((self.purpose.len() as u64).to_le_bytes());
        h.update(self.purpose.as_bytes());
        if let Some(i) = index {
            h.update(i.to_le_bytes());
        }
        h.finalize().into()
    }

    /// The stream for this spec.
    pub fn stream(&self) -> ChaCha12Rng {
        ChaCha12Rng::from_seed(self.key(None))
    }

    /// An indexed sub-stream, independent of `stream()` and of every other
    /// index.
    pub fn substream(&self, index: u64) -> ChaCha12Rng {
        ChaCha12Rng::from_seed(self.key(Some(index)))
    }
}

/// Samples the cyclical-model digraph on `n` vertices: each vertex draws
/// two independent uniform parents, in slot order.
pub fn sample_wcm(n: usize, rng: &RngSpec) -> Result<Digraph> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut r = rng.stream();
    let mut edges = Vec::with_capacity(2 * n);
    for i in 0..n {
        let a = r.gen_range(0..n) as Vertex;
        let b = r.gen_range(0..n) as Vertex;
        edges.push((i as Vertex, a));
        edges.push((i as Vertex, b));
    }
    Digraph::from_edges(n, edges)
}

/// Samples `(Y_1, ..., Y_n) ~ Mult(2n; 1/n, ..., 1/n)` by counting `2n`
/// uniform category draws. This is exactly the in-degree law of the
/// cyclical model.
pub fn sample_multinomial_indegrees(n: usize, rng: &RngSpec) -> Result<Vec<u32>> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut r = rng.stream();
    let mut counts = vec![0u32; n];
    for _ in 0..2 * n {
        counts[r.gen_range(0..n)] += 1;
    }
    Ok(counts)
}

/// Samples a directed configuration model for the given degree sequence.
///
/// The uniform matching of out-half-edges to in-half-edges is realized as a
/// seeded uniform shuffle of the in-half-edge list followed by positional
/// pairing, which has the same law as matching iteratively with uniform
/// choices. Edges come out in out-half-edge order (vertex by vertex, slot
/// by slot).
pub fn sample_dcm(degrees: &DegreeSequence, rng: &RngSpec) -> Result<Digraph> {
    let n = degrees.len();
    let s = degrees.total_edges();
    let mut in_half: Vec<Vertex> = Vec::with_capacity(s);
    for (j, &d) in degrees.in_degrees().iter().enumerate() {
        for _ in 0..d {
            in_half.push(j as Vertex);
        }
    }
    let mut r = rng.stream();
    // Fisher-Yates
    for i in (1..in_half.len()).rev() {
        let j = r.gen_range(0..=i);
        in_half.swap(i, j);
    }
    let mut edges = Vec::with_capacity(s);
    let mut next = 0usize;
    for (i, &d) in degrees.out_degrees().iter().enumerate() {
        for _ in 0..d {
            edges.push((i as Vertex, in_half[next]));
            next += 1;
        }
    }
    Digraph::from_edges(n, edges)
}

/// Exact probability of a 2-out multigraph under the cyclical model,
/// `2^(N - n(G)) * N^(-2N)`, where `n(G)` counts vertices whose two
/// out-slots agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphProbability {
    /// Natural log of the probability.
    pub log: f64,
    /// Linear-domain value when it is at least the smallest normal f64.
    pub linear: Option<f64>,
}

pub fn graph_probability(g: &Digraph) -> Result<GraphProbability> {
    let doubled = g.double_edge_vertex_count()?;
    let n = g.n() as f64;
    let log = (g.n() as f64 - doubled as f64) * std::f64::consts::LN_2 - 2.0 * n * n.ln();
    let linear = if log >= f64::MIN_POSITIVE.ln() {
        Some(log.exp())
    } else {
        None
    };
    Ok(GraphProbability { log, linear })
}

/// Number of distinct 2-out multigraphs on `n` vertices up to slot order:
/// each vertex holds an unordered target pair, `C(n+1, 2)` choices, so the
/// total is `C(n+1, 2)^n`.
pub fn canonical_graph_count(n: usize) -> Result<u64> {
    let base = pair_count(n)?;
    let mut acc: u64 = 1;
    for _ in 0..n {
        acc = acc
            .checked_mul(base)
            .ok_or_else(|| Error::InvalidConfig(format!("canonical space overflows u64 for n = {n}")))?;
    }
    Ok(acc)
}

fn pair_count(n: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    Ok((n as u64) * (n as u64 + 1) / 2)
}

fn pair_rank(a: u64, b: u64, n: u64) -> u64 {
    // a <= b; pairs ordered (0,0),(0,1),...,(0,n-1),(1,1),...
    a * (2 * n - a + 1) / 2 + (b - a)
}

/// Canonical id of a 2-out multigraph: per-vertex sorted target pair,
/// mixed radix with vertex 0 least significant. Invariant to slot order,
/// which the probability formula also ignores.
pub fn canonical_index(g: &Digraph) -> Result<u64> {
    g.require_two_out()?;
    canonical_graph_count(g.n())?;
    let n = g.n() as u64;
    let base = pair_count(g.n())?;
    let mut id: u64 = 0;
    for v in (0..g.n()).rev() {
        let s = g.out_slots(v);
        let (a, b) = if s[0] <= s[1] { (s[0], s[1]) } else { (s[1], s[0]) };
        id = id * base + pair_rank(a as u64, b as u64, n);
    }
    Ok(id)
}

/// Rebuilds the canonical representative graph for an id produced by
/// [`canonical_index`] (slots sorted ascending).
pub fn graph_from_canonical_index(n: usize, mut id: u64) -> Result<Digraph> {
    let base = pair_count(n)?;
    let mut edges = Vec::with_capacity(2 * n);
    for v in 0..n {
        let rank = id % base;
        id /= base;
        let (a, b) = unrank_pair(rank, n as u64);
        edges.push((v as Vertex, a as Vertex));
        edges.push((v as Vertex, b as Vertex));
    }
    if id != 0 {
        return Err(Error::InvalidConfig(format!(
            "canonical id out of range for n = {n}"
        )));
    }
    Digraph::from_edges(n, edges)
}

fn unrank_pair(rank: u64, n: u64) -> (u64, u64) {
    let mut a = 0u64;
    let mut r = rank;
    loop {
        let row = n - a;
        if r < row {
            return (a, a + r);
        }
        r -= row;
        a += 1;
    }
}
