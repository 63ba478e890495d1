//! Dependency graphs over benchmark variables.
//!
//! Nodes are the precision-bearing variables of a benchmark; a directed edge
//! `src -> dst` records an assignment relation: the value held at `src`'s
//! precision is cast into `dst`'s precision somewhere in the kernel. The
//! edge list order is fixed at construction and defines the column order of
//! the extended feature vector.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::PrecisionConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl DependencyGraph {
    /// Validates node bounds, forbids self-loops and duplicate edges
    /// (duplicates would duplicate feature columns).
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(src, dst)) in edges.iter().enumerate() {
            if src >= n_nodes || dst >= n_nodes {
                return Err(Error::Graph(format!(
                    "edge {i} ({src} -> {dst}) outside node range 0..{n_nodes}"
                )));
            }
            if src == dst {
                return Err(Error::Graph(format!("edge {i} is a self-loop on {src}")));
            }
            if edges[..i].contains(&(src, dst)) {
                return Err(Error::Graph(format!("duplicate edge {src} -> {dst}")));
            }
        }
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Dense 0/1 adjacency matrix: `A[src][dst] = 1` per edge.
    pub fn adjacency_matrix(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n_nodes]; self.n_nodes];
        for &(src, dst) in &self.edges {
            a[src][dst] = 1.0;
        }
        a
    }

    /// One feature per assignment edge: for edge `src -> dst` at list
    /// position `k`, `result[k] = config[dst] - config[src]`. Non-negative
    /// entries mean the destination grants at least the source's precision.
    pub fn extended_features(&self, config: &PrecisionConfig) -> Result<Vec<f64>> {
        if config.len() != self.n_nodes {
            return Err(Error::ArityMismatch {
                expected: self.n_nodes,
                got: config.len(),
            });
        }
        let p = config.precisions();
        Ok(self
            .edges
            .iter()
            .map(|&(src, dst)| f64::from(p[dst]) - f64::from(p[src]))
            .collect())
    }

    /// Column names for the extended features, destination index first to
    /// match the `F_{dst},{src}` reading of "result minus assigned value".
    pub fn feature_names(&self) -> Vec<String> {
        self.edges
            .iter()
            .map(|&(src, dst)| format!("F_{dst}_{src}"))
            .collect()
    }

    /// Edge-list text: optional `# nodes=N` header, then one `src dst` pair
    /// per line, 0-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes={}\n", self.n_nodes);
        for &(src, dst) in &self.edges {
            let _ = writeln!(out, "{src} {dst}");
        }
        out
    }

    /// Parses [`Self::to_edge_list`] output. Without a `# nodes=` header the
    /// node count is inferred as max index + 1.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut n_nodes: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("nodes=") {
                    n_nodes = Some(v.trim().parse().map_err(|_| Error::Parse {
                        line: idx + 1,
                        msg: format!("bad node count `{v}`"),
                    })?);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let (src, dst) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected `src dst`, got `{line}`"),
                    })
                }
            };
            let parse = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad node index `{s}`"),
                })
            };
            edges.push((parse(src)?, parse(dst)?));
        }
        let n_nodes =
            n_nodes.unwrap_or_else(|| edges.iter().map(|&(s, d)| s.max(d) + 1).max().unwrap_or(0));
        Self::new(n_nodes, edges)
    }
}

/// True iff `b` dominates `a`: every coordinate of `b` is >= the matching
/// coordinate of `a`, with strict inequality somewhere. Equal configurations
/// do not dominate each other.
pub fn dominates(a: &PrecisionConfig, b: &PrecisionConfig) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::ArityMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

fn dominates_unchecked(a: &PrecisionConfig, b: &PrecisionConfig) -> bool {
    let (pa, pb) = (a.precisions(), b.precisions());
    let mut strict = false;
    for (&x, &y) in pa.iter().zip(pb) {
        if y < x {
            return false;
        }
        strict |= y > x;
    }
    strict
}

/// All index pairs `(i, j)` such that `configs[j]` dominates `configs[i]`,
/// by direct O(n^2) scan.
pub fn dominated_pairs(configs: &[PrecisionConfig]) -> Result<Vec<(usize, usize)>> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("empty configuration list".into()));
    }
    let n_var = configs[0].len();
    if let Some(bad) = configs.iter().find(|c| c.len() != n_var) {
        return Err(Error::ArityMismatch {
            expected: n_var,
            got: bad.len(),
        });
    }
    let mut pairs = Vec::new();
    for i in 0..configs.len() {
        for j in 0..configs.len() {
            if i != j && dominates_unchecked(&configs[i], &configs[j]) {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

/// Number of dominance pairs the predictor violates: `(i, j)` with
/// `configs[j]` dominating `configs[i]` counts when the predicted
/// negative-log-error target of the dominating configuration is strictly
/// smaller (i.e. it is predicted to have the *larger* error). Ties are not
/// violations.
pub fn violation_count<F>(predict: F, configs: &[PrecisionConfig]) -> Result<usize>
where
    F: Fn(&PrecisionConfig) -> f64,
{
    let preds: Vec<f64> = configs.iter().map(predict).collect();
    Ok(dominated_pairs(configs)?
        .into_iter()
        .filter(|&(i, j)| preds[j] < preds[i])
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(p: &[u32]) -> PrecisionConfig {
        PrecisionConfig::new(p.to_vec()).unwrap()
    }

    fn fig1_graph() -> DependencyGraph {
        DependencyGraph::new(4, vec![(1, 3), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(DependencyGraph::new(3, vec![(0, 3)]).is_err());
        assert!(DependencyGraph::new(3, vec![(1, 1)]).is_err());
        assert!(DependencyGraph::new(3, vec![(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let a = fig1_graph().adjacency_matrix();
        let ones: f64 = a.iter().flatten().sum();
        assert_eq!(ones, 3.0);
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row[i], 0.0);
        }
        assert_eq!(a[1][3], 1.0);
        assert_eq!(a[2][3], 1.0);
        assert_eq!(a[3][0], 1.0);
        // Row sums are out-degrees: V2, V3 and the temporary each cast once.
        let row_sums: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![0.0, 1.0, 1.0, 1.0]);

        let empty = DependencyGraph::new(2, vec![]).unwrap().adjacency_matrix();
        assert_eq!(empty, vec![vec![0.0; 2]; 2]);
    }

    #[test]
    fn extended_features_on_fig1() {
        let g = fig1_graph();
        // Node order V1, V2, V3, temp; edges (V2->T, V3->T, T->V1).
        let f = g.extended_features(&cfg(&[27, 45, 35, 40])).unwrap();
        assert_eq!(f, vec![-5.0, 5.0, -13.0]); // F_3_1, F_3_2, F_0_3
        let f = g.extended_features(&cfg(&[7, 7, 7, 7])).unwrap();
        assert_eq!(f, vec![0.0; 3]);
        assert!(g.extended_features(&cfg(&[2, 2])).is_err());
        assert_eq!(g.feature_names(), vec!["F_3_1", "F_3_2", "F_0_3"]);
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = fig1_graph();
        let text = g.to_edge_list();
        assert!(text.starts_with("# nodes=4\n"));
        assert_eq!(DependencyGraph::from_edge_list(&text).unwrap(), g);
        // Header-less text infers node count from indices.
        let inferred = DependencyGraph::from_edge_list("0 1\n2 1\n").unwrap();
        assert_eq!(inferred.n_nodes(), 3);
        let err = DependencyGraph::from_edge_list("0 1\n0 1 2\n");
        assert!(matches!(err, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn dominates_examples() {
        assert!(dominates(&cfg(&[4, 4]), &cfg(&[5, 4])).unwrap());
        assert!(!dominates(&cfg(&[4, 4]), &cfg(&[4, 4])).unwrap());
        assert!(!dominates(&cfg(&[4, 9]), &cfg(&[5, 4])).unwrap());
        assert!(dominates(&cfg(&[4, 4]), &cfg(&[5])).is_err());
    }

    #[test]
    fn dominated_pairs_on_chain_and_antichain() {
        let chain = vec![cfg(&[2, 2]), cfg(&[3, 3]), cfg(&[4, 4])];
        let mut pairs = dominated_pairs(&chain).unwrap();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);

        let antichain = vec![cfg(&[2, 9]), cfg(&[5, 5]), cfg(&[9, 2])];
        assert!(dominated_pairs(&antichain).unwrap().is_empty());
    }

    #[test]
    fn dominated_pairs_match_bruteforce_oracle() {
        let configs = crate::sampling::uniform_configs(7, 200, 2, 52, 99).unwrap();
        let got = dominated_pairs(&configs).unwrap();
        // Independent re-derivation straight from the definition.
        let mut want = Vec::new();
        for (j, b) in configs.iter().enumerate() {
            for (i, a) in configs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let all_ge = a
                    .precisions()
                    .iter()
                    .zip(b.precisions())
                    .all(|(&x, &y)| y >= x);
                if all_ge && a != b {
                    want.push((i, j));
                }
            }
        }
        let mut got_sorted = got.clone();
        got_sorted.sort_unstable();
        want.sort_unstable();
        assert_eq!(got_sorted, want);
        assert!(!got.is_empty(), "200 random 7-var configs produce pairs");
    }

    #[test]
    fn violation_count_examples() {
        let chain = vec![cfg(&[2, 2, 2]), cfg(&[3, 3, 3]), cfg(&[4, 4, 4])];
        let constant = violation_count(|_| 1.5, &chain).unwrap();
        assert_eq!(constant, 0);
        let mono = violation_count(|c| c.precisions().iter().sum::<u32>() as f64, &chain).unwrap();
        assert_eq!(mono, 0);
        let anti =
            violation_count(|c| -(c.precisions().iter().sum::<u32>() as f64), &chain).unwrap();
        assert_eq!(anti, 3);
    }

    #[test]
    fn extended_features_depend_on_differences_only() {
        let g = fig1_graph();
        let base = g.extended_features(&cfg(&[10, 20, 30, 40])).unwrap();
        let shifted = g.extended_features(&cfg(&[15, 25, 35, 45])).unwrap();
        assert_eq!(base, shifted);
    }

    fn config_strategy(n: usize) -> impl Strategy<Value = PrecisionConfig> {
        proptest::collection::vec(2u32..=52, n).prop_map(|v| PrecisionConfig::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn prop_strict_partial_order(
            a in config_strategy(5),
            b in config_strategy(5),
            c in config_strategy(5),
        ) {
            // Irreflexive.
            prop_assert!(!dominates(&a, &a).unwrap());
            // Antisymmetric.
            if dominates(&a, &b).unwrap() {
                prop_assert!(!dominates(&b, &a).unwrap());
            }
            // Transitive.
            if dominates(&a, &b).unwrap() && dominates(&b, &c).unwrap() {
                prop_assert!(dominates(&a, &c).unwrap());
            }
        }

        #[test]
        fn prop_monotone_predictor_never_violates(
            configs in proptest::collection::vec(config_strategy(4), 2..40),
            weights in proptest::collection::vec(0.0f64..5.0, 4),
        ) {
            let count = violation_count(
                |c| {
                    c.precisions()
                        .iter()
                        .zip(&weights)
                        .map(|(&p, w)| f64::from(p) * w)
                        .sum()
                },
                &configs,
            )
            .unwrap();
            prop_assert_eq!(count, 0);
        }
    }
}
