//! Strongly connected components, fan-in/fan-out exploration, and the
//! structural statistics of the giant component.
//!
//! The SCC pass is an iterative Tarjan with an explicit frame stack, so it
//! survives multi-million-vertex graphs that would overflow the call stack.

use std::collections::VecDeque;

use serde::Serialize;

use crate::graph::Digraph;

/// SCC partition with components ordered by (size desc, cyclic before
/// acyclic, smallest vertex asc). Component 0 is the giant.
///
/// A single vertex without a self-loop is a degenerate strongly connected
/// set; among equal-size candidates the giant is the one that actually
/// carries a cycle, with the smallest contained vertex id as the final
/// tie-break. For any graph with a unique largest component the ordering
/// reduces to size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccReport {
    component_id: Vec<u32>,
    sizes: Vec<usize>,
    giant_mask: Vec<bool>,
    n: usize,
}

impl SccReport {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    /// Component id per vertex; ids index into `sizes()`.
    pub fn component_id(&self) -> &[u32] {
        &self.component_id
    }

    /// Component sizes, descending.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn giant_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn giant_fraction(&self) -> f64 {
        self.giant_size() as f64 / self.n as f64
    }

    /// Size of the second largest component, 0 when the graph is one SCC.
    pub fn second_size(&self) -> usize {
        self.sizes.get(1).copied().unwrap_or(0)
    }

    /// Membership mask of the giant component.
    pub fn giant_mask(&self) -> &[bool] {
        &self.giant_mask
    }

    pub fn is_giant(&self, v: usize) -> bool {
        self.giant_mask[v]
    }
}

const UNVISITED: u32 = u32::MAX;

/// Exact SCC partition via iterative Tarjan, single pass over the graph.
pub fn scc_decompose(g: &Digraph) -> SccReport {
    let n = g.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut raw_id = vec![UNVISITED; n];
    let mut raw_count = 0u32;
    let mut next_index = 0u32;
    // (vertex, next out-slot to examine)
    let mut frames: Vec<(u32, u32)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root as u32);
        on_stack[root] = true;
        frames.push((root as u32, 0));

        while let Some(&mut (v, ref mut cursor)) = frames.last_mut() {
            let vu = v as usize;
            let slots = g.out_slots(vu);
            if (*cursor as usize) < slots.len() {
                let w = slots[*cursor as usize] as usize;
                *cursor += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    frames.push((w as u32, 0));
                } else if on_stack[w] {
                    low[vu] = low[vu].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    let pu = parent as usize;
                    low[pu] = low[pu].min(low[vu]);
                }
                if low[vu] == index[vu] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        raw_id[w as usize] = raw_count;
                        if w as usize == vu {
                            break;
                        }
                    }
                    raw_count += 1;
                }
            }
        }
    }

    // Order components: size desc, cyclic desc, min vertex asc.
    let count = raw_count as usize;
    let mut size = vec![0usize; count];
    let mut min_vertex = vec![u32::MAX; count];
    let mut cyclic = vec![false; count];
    for v in 0..n {
        let c = raw_id[v] as usize;
        size[c] += 1;
        min_vertex[c] = min_vertex[c].min(v as u32);
    }
    for v in 0..n {
        let c = raw_id[v] as usize;
        if size[c] >= 2 {
            cyclic[c] = true;
        } else if g.out_slots(v).iter().any(|&t| t as usize == v) {
            cyclic[c] = true;
        }
    }
    let mut order: Vec<u32> = (0..raw_count).collect();
    order.sort_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        size[b]
            .cmp(&size[a])
            .then(cyclic[b].cmp(&cyclic[a]))
            .then(min_vertex[a].cmp(&min_vertex[b]))
    });
    let mut rank = vec![0u32; count];
    for (new_id, &old) in order.iter().enumerate() {
        rank[old as usize] = new_id as u32;
    }
    let component_id: Vec<u32> = raw_id.iter().map(|&c| rank[c as usize]).collect();
    let sizes: Vec<usize> = order.iter().map(|&c| size[c as usize]).collect();
    let giant_mask: Vec<bool> = component_id.iter().map(|&c| c == 0).collect();
    SccReport {
        component_id,
        sizes,
        giant_mask,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Breadth-first closure from a root, following (or reversing) edge
/// orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FanReport {
    pub root: usize,
    pub direction: Direction,
    pub vertex_count: usize,
    /// Edges with both endpoints inside the fan. Equals the number of
    /// traversal steps taken by the complete exploration.
    pub edge_count: usize,
    /// Traversal steps that hit an already-seen vertex.
    pub revisit_steps: usize,
}

/// Complete fan-out or fan-in of `v`.
pub fn fan(g: &Digraph, v: usize, direction: Direction) -> FanReport {
    fan_limited(g, v, direction, usize::MAX)
}

/// Fan exploration cut off after `max_steps` edge traversals; counts are
/// then for the explored prefix rather than the full closure.
pub fn fan_limited(g: &Digraph, v: usize, direction: Direction, max_steps: usize) -> FanReport {
    assert!(v < g.n(), "vertex {v} out of range for n = {}", g.n());
    let mut seen = vec![false; g.n()];
    let mut queue: VecDeque<u32> = VecDeque::new();
    seen[v] = true;
    queue.push_back(v as u32);
    let mut vertex_count = 1usize;
    let mut steps = 0usize;
    let mut revisits = 0usize;
    'outer: while let Some(u) = queue.pop_front() {
        let neighbors = match direction {
            Direction::Forward => g.out_slots(u as usize),
            Direction::Backward => g.in_neighbors(u as usize),
        };
        for &w in neighbors {
            if steps == max_steps {
                break 'outer;
            }
            steps += 1;
            let wu = w as usize;
            if seen[wu] {
                revisits += 1;
            } else {
                seen[wu] = true;
                vertex_count += 1;
                queue.push_back(w);
            }
        }
    }
    FanReport {
        root: v,
        direction,
        vertex_count,
        edge_count: steps,
        revisit_steps: revisits,
    }
}

/// Length of the shortest directed path from `v` to any masked vertex;
/// 0 when `v` itself is masked, `None` when no masked vertex is reachable.
pub fn distance_to_set(g: &Digraph, v: usize, target_mask: &[bool]) -> Option<usize> {
    assert_eq!(target_mask.len(), g.n());
    assert!(v < g.n());
    if target_mask[v] {
        return Some(0);
    }
    let mut seen = vec![false; g.n()];
    seen[v] = true;
    let mut frontier = vec![v as u32];
    let mut next = Vec::new();
    let mut dist = 0usize;
    while !frontier.is_empty() {
        dist += 1;
        for &u in &frontier {
            for &w in g.out_slots(u as usize) {
                let wu = w as usize;
                if target_mask[wu] {
                    return Some(dist);
                }
                if !seen[wu] {
                    seen[wu] = true;
                    next.push(w);
                }
            }
        }
        frontier.clear();
        std::mem::swap(&mut frontier, &mut next);
    }
    None
}

/// Distance of every vertex to the masked set along forward edges, via one
/// multi-source traversal of the reverse graph.
pub fn distances_to_set(g: &Digraph, target_mask: &[bool]) -> Vec<Option<usize>> {
    assert_eq!(target_mask.len(), g.n());
    let mut dist: Vec<Option<usize>> = vec![None; g.n()];
    let mut frontier: Vec<u32> = Vec::new();
    for v in 0..g.n() {
        if target_mask[v] {
            dist[v] = Some(0);
            frontier.push(v as u32);
        }
    }
    let mut next = Vec::new();
    let mut d = 0usize;
    while !frontier.is_empty() {
        d += 1;
        for &u in &frontier {
            for &w in g.in_neighbors(u as usize) {
                let wu = w as usize;
                if dist[wu].is_none() {
                    dist[wu] = Some(d);
                    next.push(w);
                }
            }
        }
        frontier.clear();
        std::mem::swap(&mut frontier, &mut next);
    }
    dist
}

/// Size of the forward closure of `v` when forbidden vertices are neither
/// expanded nor counted. The root must not be forbidden.
pub fn reachable_avoiding(
    g: &Digraph,
    v: usize,
    forbidden_mask: &[bool],
) -> crate::error::Result<usize> {
    assert_eq!(forbidden_mask.len(), g.n());
    assert!(v < g.n());
    if forbidden_mask[v] {
        return Err(crate::error::Error::ForbiddenRoot(v));
    }
    let mut seen = vec![false; g.n()];
    let mut queue = vec![v as u32];
    seen[v] = true;
    let mut count = 1usize;
    while let Some(u) = queue.pop() {
        for &w in g.out_slots(u as usize) {
            let wu = w as usize;
            if !seen[wu] && !forbidden_mask[wu] {
                seen[wu] = true;
                count += 1;
                queue.push(w);
            }
        }
    }
    Ok(count)
}

/// Maximum of [`reachable_avoiding`] over every non-forbidden vertex,
/// sharing one epoch-stamped visited buffer across the sweeps.
pub fn max_reachable_avoiding(g: &Digraph, forbidden_mask: &[bool]) -> usize {
    assert_eq!(forbidden_mask.len(), g.n());
    let n = g.n();
    let mut stamp = vec![0u32; n];
    let mut epoch = 0u32;
    let mut queue: Vec<u32> = Vec::new();
    let mut best = 0usize;
    for v in 0..n {
        if forbidden_mask[v] {
            continue;
        }
        epoch += 1;
        stamp[v] = epoch;
        queue.clear();
        queue.push(v as u32);
        let mut count = 1usize;
        while let Some(u) = queue.pop() {
            for &w in g.out_slots(u as usize) {
                let wu = w as usize;
                if stamp[wu] != epoch && !forbidden_mask[wu] {
                    stamp[wu] = epoch;
                    count += 1;
                    queue.push(w);
                }
            }
        }
        best = best.max(count);
    }
    best
}

/// Number of edges from a masked source to an unmasked target.
pub fn edges_leaving_set(g: &Digraph, mask: &[bool]) -> usize {
    assert_eq!(mask.len(), g.n());
    g.edges()
        .iter()
        .filter(|&&(u, v)| mask[u as usize] && !mask[v as usize])
        .count()
}

/// Number of edges from an unmasked source into a masked target.
pub fn edges_entering_set(g: &Digraph, mask: &[bool]) -> usize {
    assert_eq!(mask.len(), g.n());
    g.edges()
        .iter()
        .filter(|&&(u, v)| !mask[u as usize] && mask[v as usize])
        .count()
}

/// Internal edge count of the backward fan of every vertex.
///
/// Vertices in one strongly connected component share their fan-in, so the
/// sweep does one multi-source reverse traversal per component instead of
/// one per vertex.
pub fn backward_fan_edge_counts(g: &Digraph) -> Vec<u64> {
    let n = g.n();
    let scc = scc_decompose(g);
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); scc.num_components()];
    for v in 0..n {
        members[scc.component_id()[v] as usize].push(v as u32);
    }
    let in_deg: Vec<u32> = {
        let ds = g.degree_sequence();
        ds.in_degrees().to_vec()
    };
    let mut stamp = vec![0u32; n];
    let mut epoch = 0u32;
    let mut queue: Vec<u32> = Vec::new();
    let mut result = vec![0u64; n];
    for comp in &members {
        epoch += 1;
        queue.clear();
        let mut edges: u64 = 0;
        for &v in comp {
            stamp[v as usize] = epoch;
            edges += in_deg[v as usize] as u64;
            queue.push(v);
        }
        while let Some(u) = queue.pop() {
            for &w in g.in_neighbors(u as usize) {
                let wu = w as usize;
                if stamp[wu] != epoch {
                    stamp[wu] = epoch;
                    edges += in_deg[wu] as u64;
                    queue.push(w);
                }
            }
        }
        for &v in comp {
            result[v as usize] = edges;
        }
    }
    result
}

/// Vertices classified by backward-fan edge count against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FanDichotomy {
    pub threshold: u64,
    pub small_count: usize,
    pub large_count: usize,
    pub small_fraction: f64,
    pub large_fraction: f64,
    /// Mean edge count of the large side divided by n, when any.
    pub large_mean_over_n: Option<f64>,
}

/// Classifies every vertex's backward fan as small (< threshold) or large.
pub fn fan_dichotomy_histogram(g: &Digraph, threshold: u64) -> FanDichotomy {
    let counts = backward_fan_edge_counts(g);
    let n = g.n();
    let small_count = counts.iter().filter(|&&c| c < threshold).count();
    let large_count = n - small_count;
    let large_sum: u64 = counts.iter().filter(|&&c| c >= threshold).sum();
    FanDichotomy {
        threshold,
        small_count,
        large_count,
        small_fraction: small_count as f64 / n as f64,
        large_fraction: large_count as f64 / n as f64,
        large_mean_over_n: if large_count > 0 {
            Some(large_sum as f64 / large_count as f64 / n as f64)
        } else {
            None
        },
    }
}
