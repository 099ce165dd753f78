//! Directed multigraph with fixed out-edge slots.
//!
//! A pedigree on `n` individuals is a digraph where every vertex has exactly
//! two ordered out-slots (its parents). This module keeps the representation
//! general: any slot structure is allowed, loops and parallel edges included.
//! Edges are stored in construction order so that serialized output is
//! bit-reproducible; the in-adjacency is built lazily on first use.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Vertex id, 0-based and contiguous.
pub type Vertex = u32;

#[derive(Debug)]
struct ReverseIndex {
    in_offsets: Vec<usize>,
    in_sources: Vec<Vertex>,
}

/// Immutable directed multigraph.
///
/// Stores the edge list in the order given at construction and a CSR view of
/// the out-slots grouped by source (slot order preserved). Immutable after
/// construction; the reverse index is built at most once and is safe to
/// request from several threads.
#[derive(Debug)]
pub struct Digraph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    out_offsets: Vec<usize>,
    out_targets: Vec<Vertex>,
    reverse: OnceLock<ReverseIndex>,
}

impl Digraph {
    /// Builds a digraph from an edge list on `n` vertices.
    ///
    /// Fails with the offending edge index if any endpoint is out of range.
    pub fn from_edges(n: usize, edges: Vec<(Vertex, Vertex)>) -> Result<Self> {
        for (index, &(u, v)) in edges.iter().enumerate() {
            if (u as usize) >= n || (v as usize) >= n {
                return Err(Error::EdgeOutOfRange {
                    index,
                    from: u,
                    to: v,
                    n,
                });
            }
        }
        let mut counts = vec![0usize; n + 1];
        for &(u, _) in &edges {
            counts[u as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let out_offsets = counts;
        let mut cursor = out_offsets.clone();
        let mut out_targets = vec![0 as Vertex; edges.len()];
        for &(u, v) in &edges {
            out_targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        Ok(Self {
            n,
            edges,
            out_offsets,
            out_targets,
            reverse: OnceLock::new(),
        })
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edge list in construction order.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    /// Out-edge targets of `v` in slot order.
    pub fn out_slots(&self, v: usize) -> &[Vertex] {
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    fn reverse_index(&self) -> &ReverseIndex {
        self.reverse.get_or_init(|| {
            let mut counts = vec![0usize; self.n + 1];
            for &(_, v) in &self.edges {
                counts[v as usize + 1] += 1;
            }
            for i in 0..self.n {
                counts[i + 1] += counts[i];
            }
            let in_offsets = counts;
            let mut cursor = in_offsets.clone();
            let mut in_sources = vec![0 as Vertex; self.edges.len()];
            for &(u, v) in &self.edges {
                in_sources[cursor[v as usize]] = u;
                cursor[v as usize] += 1;
            }
            ReverseIndex {
                in_offsets,
                in_sources,
            }
        })
    }

    /// Sources of the edges pointing into `v`, one entry per edge.
    pub fn in_neighbors(&self, v: usize) -> &[Vertex] {
        let rev = self.reverse_index();
        &rev.in_sources[rev.in_offsets[v]..rev.in_offsets[v + 1]]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        let rev = self.reverse_index();
        rev.in_offsets[v + 1] - rev.in_offsets[v]
    }

    /// In/out degree vectors, counted straight off the edge list.
    pub fn degree_sequence(&self) -> DegreeSequence {
        let mut in_deg = vec![0u32; self.n];
        let mut out_deg = vec![0u32; self.n];
        for &(u, v) in &self.edges {
            out_deg[u as usize] += 1;
            in_deg[v as usize] += 1;
        }
        DegreeSequence { in_deg, out_deg }
    }

    /// True when every vertex has out-degree exactly 2.
    pub fn is_two_out(&self) -> bool {
        (0..self.n).all(|v| self.out_degree(v) == 2)
    }

    /// Errors with the first offending vertex unless every out-degree is 2.
    pub fn require_two_out(&self) -> Result<()> {
        for v in 0..self.n {
            let d = self.out_degree(v);
            if d != 2 {
                return Err(Error::OutDegreeNotTwo { vertex: v, degree: d });
            }
        }
        Ok(())
    }

    /// Number of vertices whose two out-slots point to the same vertex
    /// (self-loop pairs included). Requires constant out-degree 2.
    pub fn double_edge_vertex_count(&self) -> Result<usize> {
        self.require_two_out()?;
        Ok((0..self.n)
            .filter(|&v| {
                let s = self.out_slots(v);
                s[0] == s[1]
            })
            .count())
    }

    /// Writes the edge-list text format: a `N M` header line, then one
    /// `u v` line per edge in slot order.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.m())?;
        for v in 0..self.n {
            for &t in self.out_slots(v) {
                writeln!(w, "{} {}", v, t)?;
            }
        }
        Ok(())
    }

    pub fn write_edge_list_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_edge_list(&mut buf)?;
        Ok(())
    }

    /// Parses the edge-list text format. The number of edge lines must match
    /// the header count exactly; blank lines are ignored.
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((no, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break (no, line);
                    }
                }
                None => return Err(Error::Format("empty input".into())),
            }
        };
        let (n, m) = parse_pair(&header.1, header.0)?;
        let mut edges: Vec<(Vertex, Vertex)> = Vec::with_capacity(m.min(1 << 24));
        for (no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if edges.len() == m {
                return Err(Error::EdgeCountMismatch {
                    expected: m,
                    found: m + 1,
                });
            }
            let (u, v) = parse_pair(&line, no)?;
            let clamp = |x: usize| Vertex::try_from(x).unwrap_or(Vertex::MAX);
            edges.push((clamp(u), clamp(v)));
        }
        if edges.len() != m {
            return Err(Error::EdgeCountMismatch {
                expected: m,
                found: edges.len(),
            });
        }
        Self::from_edges(n, edges)
    }

    pub fn read_edge_list_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_edge_list(std::io::BufReader::new(file))
    }
}

fn parse_pair(line: &str, line_no: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let a = it.next();
    let b = it.next();
    let rest = it.next();
    match (a, b, rest) {
        (Some(a), Some(b), None) => {
            let a = a
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("line {}: {}", line_no + 1, e)))?;
            let b = b
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("line {}: {}", line_no + 1, e)))?;
            Ok((a, b))
        }
        _ => Err(Error::Format(format!(
            "line {}: expected two integers, got {:?}",
            line_no + 1,
            line
        ))),
    }
}

/// Paired in/out degree vectors with equal sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    in_deg: Vec<u32>,
    out_deg: Vec<u32>,
}

impl DegreeSequence {
    /// Validates that both vectors have the same length and equal sums.
    pub fn new(in_deg: Vec<u32>, out_deg: Vec<u32>) -> Result<Self> {
        if in_deg.len() != out_deg.len() {
            return Err(Error::InvalidConfig(format!(
                "degree vectors have different lengths: {} vs {}",
                in_deg.len(),
                out_deg.len()
            )));
        }
        let in_sum: u64 = in_deg.iter().map(|&d| d as u64).sum();
        let out_sum: u64 = out_deg.iter().map(|&d| d as u64).sum();
        if in_sum != out_sum {
            return Err(Error::DegreeSumMismatch { in_sum, out_sum });
        }
        Ok(Self { in_deg, out_deg })
    }

    /// Constant out-degree 2 with the given in-degrees.
    pub fn two_out(in_deg: Vec<u32>) -> Result<Self> {
        let n = in_deg.len();
        Self::new(in_deg, vec![2; n])
    }

    pub fn len(&self) -> usize {
        self.in_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_deg.is_empty()
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_deg
    }

    pub fn out_degrees(&self) -> &[u32] {
        &self.out_deg
    }

    /// Total number of edges `s`.
    pub fn total_edges(&self) -> usize {
        self.in_deg.iter().map(|&d| d as usize).sum()
    }

    pub fn is_constant_out(&self, degree: u32) -> bool {
        self.out_deg.iter().all(|&d| d == degree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubled_3_cycle() -> Digraph {
        Digraph::from_edges(3, vec![(0, 1), (0, 1), (1, 2), (1, 2), (2, 0), (2, 0)]).unwrap()
    }

    #[test]
    fn single_vertex_double_loop() {
        let g = Digraph::from_edges(1, vec![(0, 0), (0, 0)]).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.m(), 2);
        assert_eq!(g.out_degree(0), 2);
        assert_eq!(g.in_degree(0), 2);
        let ds = g.degree_sequence();
        assert_eq!(ds.in_degrees(), &[2]);
        assert_eq!(ds.out_degrees(), &[2]);
    }

    #[test]
    fn doubled_cycle_degrees() {
        let g = doubled_3_cycle();
        let ds = g.degree_sequence();
        assert_eq!(ds.in_degrees(), &[2, 2, 2]);
        assert_eq!(ds.out_degrees(), &[2, 2, 2]);
        assert_eq!(ds.total_edges(), 6);
    }

    #[test]
    fn out_of_range_endpoint_names_edge() {
        let err = Digraph::from_edges(2, vec![(0, 5)]).unwrap_err();
        match err {
            Error::EdgeOutOfRange { index, to, n, .. } => {
                assert_eq!(index, 0);
                assert_eq!(to, 5);
                assert_eq!(n, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sink_heavy_degrees() {
        let g = Digraph::from_edges(2, vec![(0, 1), (0, 1), (1, 1), (1, 1)]).unwrap();
        let ds = g.degree_sequence();
        assert_eq!(ds.in_degrees(), &[0, 4]);
        assert_eq!(ds.out_degrees(), &[2, 2]);
    }

    #[test]
    fn double_edge_vertex_counts() {
        let g = Digraph::from_edges(1, vec![(0, 0), (0, 0)]).unwrap();
        assert_eq!(g.double_edge_vertex_count().unwrap(), 1);
        assert_eq!(doubled_3_cycle().double_edge_vertex_count().unwrap(), 3);
        let g = Digraph::from_edges(2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert_eq!(g.double_edge_vertex_count().unwrap(), 0);
    }

    #[test]
    fn double_edge_count_complements_distinct_pairs() {
        use crate::sample::{sample_wcm, RngSpec};
        for rep in 0..20u64 {
            let g = sample_wcm(30, &RngSpec::new(13).with_replicate(rep)).unwrap();
            let doubled = g.double_edge_vertex_count().unwrap();
            let distinct = (0..g.n())
                .filter(|&v| {
                    let s = g.out_slots(v);
                    s[0] != s[1]
                })
                .count();
            assert!(doubled <= g.n());
            assert_eq!(doubled, g.n() - distinct);
        }
    }

    #[test]
    fn double_edge_count_needs_out_degree_two() {
        let g = Digraph::from_edges(2, vec![(0, 1), (0, 1), (0, 0), (1, 1)]).unwrap();
        match g.double_edge_vertex_count().unwrap_err() {
            Error::OutDegreeNotTwo { vertex, degree } => {
                assert_eq!(vertex, 0);
                assert_eq!(degree, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn slot_order_preserved_for_interleaved_sources() {
        let g = Digraph::from_edges(3, vec![(2, 0), (0, 2), (2, 1), (0, 1)]).unwrap();
        assert_eq!(g.out_slots(0), &[2, 1]);
        assert!(g.out_slots(1).is_empty());
        assert_eq!(g.out_slots(2), &[0, 1]);
    }

    #[test]
    fn reverse_round_trip_matches_edge_multiset() {
        let g = Digraph::from_edges(4, vec![(0, 1), (1, 1), (3, 0), (1, 1), (2, 3), (0, 3)]).unwrap();
        let mut from_reverse: Vec<(Vertex, Vertex)> = (0..g.n())
            .flat_map(|v| g.in_neighbors(v).iter().map(move |&u| (u, v as Vertex)))
            .collect();
        let mut original = g.edges().to_vec();
        from_reverse.sort_unstable();
        original.sort_unstable();
        assert_eq!(from_reverse, original);
        let total_in: usize = (0..g.n()).map(|v| g.in_degree(v)).sum();
        assert_eq!(total_in, g.m());
    }

    #[test]
    fn degree_sums_agree() {
        // seeded ad-hoc graphs; sums must both equal m
        let g = Digraph::from_edges(5, vec![(0, 4), (4, 4), (3, 2), (2, 2), (1, 0), (1, 3)]).unwrap();
        let ds = g.degree_sequence();
        let si: u32 = ds.in_degrees().iter().sum();
        let so: u32 = ds.out_degrees().iter().sum();
        assert_eq!(si as usize, g.m());
        assert_eq!(so as usize, g.m());
    }

    #[test]
    fn degree_sequence_sum_mismatch_rejected() {
        match DegreeSequence::new(vec![1, 1], vec![2, 2]).unwrap_err() {
            Error::DegreeSumMismatch { in_sum, out_sum } => {
                assert_eq!((in_sum, out_sum), (2, 4));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = doubled_3_cycle();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 6\n"));
        let back = Digraph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(back.n(), 3);
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn edge_list_rejects_count_mismatch() {
        let too_few = "2 3\n0 1\n1 0\n";
        match Digraph::read_edge_list(too_few.as_bytes()).unwrap_err() {
            Error::EdgeCountMismatch { expected, found } => {
                assert_eq!((expected, found), (3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
        let too_many = "2 1\n0 1\n1 0\n";
        assert!(matches!(
            Digraph::read_edge_list(too_many.as_bytes()).unwrap_err(),
            Error::EdgeCountMismatch { .. }
        ));
    }

    #[test]
    fn edge_list_rejects_garbage() {
        assert!(matches!(
            Digraph::read_edge_list("1 1\n0 zero\n".as_bytes()).unwrap_err(),
            Error::Format(_)
        ));
        assert!(matches!(
            Digraph::read_edge_list("1 1\n0 0 0\n".as_bytes()).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn concurrent_reverse_index_is_consistent() {
        let g = std::sync::Arc::new(
            Digraph::from_edges(3, vec![(0, 1), (0, 1), (1, 2), (1, 2), (2, 0), (2, 0)]).unwrap(),
        );
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let g = g.clone();
                std::thread::spawn(move || (0..g.n()).map(|v| g.in_degree(v)).sum::<usize>())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), 6);
        }
    }
}
