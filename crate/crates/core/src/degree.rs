//! Empirical in-degree distribution, weighted distances to Poisson(2), and
//! the properness checks for 2-out degree sequences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, Digraph};

/// Distribution of the in-degree of a uniformly chosen vertex,
/// `xi[k] = #{i : in_deg(i) = k} / n`, truncated at the max observed degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalInDegree {
    pub xi: Vec<f64>,
    pub n: usize,
}

impl EmpiricalInDegree {
    pub fn from_graph(g: &Digraph) -> Self {
        Self::from_in_degrees(g.degree_sequence().in_degrees(), g.n())
    }

    pub fn from_degrees(degrees: &DegreeSequence) -> Self {
        Self::from_in_degrees(degrees.in_degrees(), degrees.len())
    }

    fn from_in_degrees(in_deg: &[u32], n: usize) -> Self {
        let max = in_deg.iter().copied().max().unwrap_or(0) as usize;
        let mut xi = vec![0.0; max + 1];
        for &d in in_deg {
            xi[d as usize] += 1.0;
        }
        for x in &mut xi {
            *x /= n as f64;
        }
        Self { xi, n }
    }

    /// `xi[k]`, zero beyond the truncation point.
    pub fn value(&self, k: usize) -> f64 {
        self.xi.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_observed(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.xi.iter().enumerate().map(|(k, &x)| k as f64 * x).sum()
    }
}

/// Poisson(2) mass `e^{-2} 2^k / k!`.
pub fn poisson2_pmf(k: usize) -> f64 {
    let mut p = (-2.0f64).exp();
    for i in 1..=k {
        p *= 2.0 / i as f64;
    }
    p
}

/// Positive nondecreasing weight sequence `k -> l_k`.
///
/// The default is `l_k = (k+1)^2`. Table-backed sequences extend past the
/// table with their last value, which keeps them nondecreasing and bounded.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    kind: WeightKind,
}

#[derive(Debug, Clone)]
enum WeightKind {
    Squared,
    Table(Vec<f64>),
}

impl WeightSequence {
    /// `(k+1)^2`.
    pub fn squared() -> Self {
        Self {
            kind: WeightKind::Squared,
        }
    }

    pub fn from_table(table: Vec<f64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidWeights("empty table".into()));
        }
        if table.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidWeights("weights must be positive".into()));
        }
        if table.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidWeights("weights must be nondecreasing".into()));
        }
        Ok(Self {
            kind: WeightKind::Table(table),
        })
    }

    pub fn weight(&self, k: usize) -> f64 {
        match &self.kind {
            WeightKind::Squared => {
                let v = (k + 1) as f64;
                v * v
            }
            WeightKind::Table(t) => t.get(k).copied().unwrap_or(*t.last().unwrap()),
        }
    }
}

/// Tail terms below this threshold stop the Poisson sum; the Poisson tail
/// decays super-exponentially so the truncation error is negligible.
const TAIL_EPS: f64 = 1e-15;

/// `sum_k l_k |xi_k - P2_k|`, with `xi_k = 0` beyond the observed range and
/// the Poisson tail summed until its increments drop below `1e-15`.
pub fn weighted_distance(xi: &EmpiricalInDegree, weights: &WeightSequence) -> f64 {
    let mut total = 0.0;
    let mut k = 0usize;
    let mut pk = (-2.0f64).exp();
    loop {
        let w = weights.weight(k);
        total += w * (xi.value(k) - pk).abs();
        let done_tail = w * pk < TAIL_EPS;
        if k >= xi.max_observed() && done_tail {
            break;
        }
        k += 1;
        pk *= 2.0 / k as f64;
    }
    total
}

/// Largest in- or out-degree.
pub fn max_degree(degrees: &DegreeSequence) -> u32 {
    let a = degrees.in_degrees().iter().copied().max().unwrap_or(0);
    let b = degrees.out_degrees().iter().copied().max().unwrap_or(0);
    a.max(b)
}

/// Which bound the maximal degree is checked against.
///
/// `PaperC2` is the asymptotic condition `N^(1/12) / ln N`; it is below 2
/// for every population size up to 10^9 and therefore fails at desk scale.
/// `LogN` is the `ln N` bound that holds with high probability and is
/// meaningful at simulated sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    PaperC2,
    LogN,
}

/// Outcome of the properness check for a 2-out degree sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperReport {
    pub n: usize,
    /// `sum_k k^2 xi_k`.
    pub second_moment: f64,
    pub k_bound: f64,
    pub second_moment_ok: bool,
    pub max_degree: u32,
    pub delta_rule: DeltaRule,
    pub delta_bound: f64,
    pub delta_ok: bool,
    pub proper: bool,
}

/// Checks the two regularity conditions (second-moment bound and maximal
/// degree bound) for a degree sequence with constant out-degree 2.
pub fn check_proper(
    degrees: &DegreeSequence,
    k_bound: f64,
    delta_rule: DeltaRule,
) -> Result<ProperReport> {
    for (vertex, &d) in degrees.out_degrees().iter().enumerate() {
        if d != 2 {
            return Err(Error::OutDegreeNotTwo {
                vertex,
                degree: d as usize,
            });
        }
    }
    let n = degrees.len();
    let second_moment = degrees
        .in_degrees()
        .iter()
        .map(|&d| (d as f64) * (d as f64))
        .sum::<f64>()
        / n as f64;
    let delta = max_degree(degrees);
    let ln_n = (n as f64).ln();
    let delta_bound = match delta_rule {
        DeltaRule::LogN => ln_n,
        DeltaRule::PaperC2 => (n as f64).powf(1.0 / 12.0) / ln_n,
    };
    let second_moment_ok = second_moment <= k_bound;
    let delta_ok = (delta as f64) <= delta_bound;
    Ok(ProperReport {
        n,
        second_moment,
        k_bound,
        second_moment_ok,
        max_degree: delta,
        delta_rule,
        delta_bound,
        delta_ok,
        proper: second_moment_ok && delta_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;
    use crate::sample::{sample_wcm, RngSpec};

    fn doubled_3_cycle() -> Digraph {
        Digraph::from_edges(3, vec![(0, 1), (0, 1), (1, 2), (1, 2), (2, 0), (2, 0)]).unwrap()
    }

    #[test]
    fn point_mass_histogram() {
        let xi = EmpiricalInDegree::from_graph(&doubled_3_cycle());
        assert_eq!(xi.xi, vec![0.0, 0.0, 1.0]);
        assert_eq!(xi.n, 3);
    }

    #[test]
    fn split_histogram() {
        let g = Digraph::from_edges(2, vec![(0, 1), (0, 1), (1, 1), (1, 1)]).unwrap();
        let xi = EmpiricalInDegree::from_graph(&g);
        assert_eq!(xi.value(0), 0.5);
        assert_eq!(xi.value(4), 0.5);
        assert_eq!(xi.value(1), 0.0);
    }

    #[test]
    fn wcm_histogram_conserves_mass_and_mean() {
        for rep in 0..20u64 {
            let g = sample_wcm(500, &RngSpec::new(3).with_replicate(rep)).unwrap();
            let xi = EmpiricalInDegree::from_graph(&g);
            let total: f64 = xi.xi.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!((xi.mean() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_values() {
        assert!((poisson2_pmf(0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((poisson2_pmf(1) - poisson2_pmf(2)).abs() < 1e-16);
        let total: f64 = (0..=60).map(poisson2_pmf).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_identity_is_zero() {
        let xi = EmpiricalInDegree {
            xi: (0..=40).map(poisson2_pmf).collect(),
            n: 1,
        };
        let d = weighted_distance(&xi, &WeightSequence::squared());
        assert!(d < 1e-12, "distance {d}");
    }

    #[test]
    fn distance_point_mass_matches_direct_sum() {
        // xi = point mass at 2: 9(1 - P2_2) + sum_{k != 2} (k+1)^2 P2_k
        let xi = EmpiricalInDegree::from_graph(&doubled_3_cycle());
        let d = weighted_distance(&xi, &WeightSequence::squared());
        let mut expected = 9.0 * (1.0 - poisson2_pmf(2));
        for k in 0..200 {
            if k != 2 {
                expected += ((k + 1) * (k + 1)) as f64 * poisson2_pmf(k);
            }
        }
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
    }

    #[test]
    fn distance_monotone_in_weights() {
        let mut r = RngSpec::new(8).stream();
        use rand::Rng;
        for _ in 0..50 {
            let n = 40;
            let g = sample_wcm(n, &RngSpec::new(r.gen()).with_purpose("w")).unwrap();
            let xi = EmpiricalInDegree::from_graph(&g);
            let lo = WeightSequence::from_table(vec![1.0, 1.0, 2.0, 3.0]).unwrap();
            let hi = WeightSequence::from_table(vec![2.0, 2.0, 4.0, 6.5]).unwrap();
            assert!(weighted_distance(&xi, &lo) <= weighted_distance(&xi, &hi) + 1e-15);
        }
    }

    #[test]
    fn weight_table_validation() {
        assert!(WeightSequence::from_table(vec![]).is_err());
        assert!(WeightSequence::from_table(vec![1.0, 0.5]).is_err());
        assert!(WeightSequence::from_table(vec![0.0, 1.0]).is_err());
        let w = WeightSequence::from_table(vec![1.0, 3.0]).unwrap();
        assert_eq!(w.weight(0), 1.0);
        assert_eq!(w.weight(5), 3.0);
    }

    #[test]
    fn max_degree_values() {
        assert_eq!(max_degree(&doubled_3_cycle().degree_sequence()), 2);
        let ds = DegreeSequence::two_out(vec![0, 4]).unwrap();
        assert_eq!(max_degree(&ds), 4);
    }

    #[test]
    fn proper_small_graph_fails_log_rule() {
        // doubled 3-cycle: second moment 4 <= 10 but delta = 2 > ln 3.
        let report = check_proper(&doubled_3_cycle().degree_sequence(), 10.0, DeltaRule::LogN)
            .unwrap();
        assert!((report.second_moment - 4.0).abs() < 1e-12);
        assert!(report.second_moment_ok);
        assert_eq!(report.max_degree, 2);
        assert!(!report.delta_ok);
        assert!(!report.proper);
    }

    #[test]
    fn paper_c2_rule_is_vacuous_at_desk_scale() {
        for n in [3usize, 1000, 100_000] {
            let g = sample_wcm(n, &RngSpec::new(4)).unwrap();
            let report = check_proper(&g.degree_sequence(), 10.0, DeltaRule::PaperC2).unwrap();
            assert!(report.delta_bound < 2.0);
            assert!(!report.proper);
        }
    }

    #[test]
    fn proper_rejects_non_two_out() {
        let ds = DegreeSequence::new(vec![1, 2], vec![1, 2]).unwrap();
        assert!(matches!(
            check_proper(&ds, 10.0, DeltaRule::LogN).unwrap_err(),
            Error::OutDegreeNotTwo { .. }
        ));
    }
}
