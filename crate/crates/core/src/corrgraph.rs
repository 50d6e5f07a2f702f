//! Thresholded Pearson-correlation graph over features.
//!
//! Nodes are features; an undirected edge joins `i` and `j` when
//! `|corr[i][j]| >= threshold`. Distances between features are the Euclidean
//! distance between their standardized columns divided by `sqrt(n)`, which is
//! `sqrt(2 (1 - r))`.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{mean_std, Dataset};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const MIN_DISTANCE: f64 = 1e-6;

/// Which correlation enters the distance formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceMode {
    /// `sqrt(2 (1 - r))`: anticorrelated features sit far apart.
    #[default]
    Signed,
    /// `sqrt(2 (1 - |r|))`.
    Absolute,
}

/// Population Pearson correlation; 0 when either column is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("pearson on lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson needs at least two observations"));
    }
    let (mx, sx) = mean_std(x);
    let (my, sy) = mean_std(y);
    if sx == 0.0 || sy == 0.0 {
        return Ok(0.0);
    }
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    Ok((cov / (sx * sy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    names: Vec<String>,
    corr: Vec<Vec<f64>>,
    threshold: f64,
    mode: DistanceMode,
    adjacency: Vec<Vec<usize>>,
    component: Vec<usize>,
}

impl CorrelationGraph {
    /// Builds the graph from a precomputed correlation matrix. The matrix is
    /// symmetrized from its upper triangle and given a unit diagonal.
    pub fn from_matrix(names: Vec<String>, corr: Vec<Vec<f64>>, threshold: f64, mode: DistanceMode) -> Result<Self> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::invalid(format!("correlation threshold must lie in (0,1], got {threshold}")));
        }
        let d = names.len();
        if corr.len() != d || corr.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("correlation matrix is not {d}x{d}")));
        }
        let mut sym = corr;
        for i in 0..d {
            sym[i][i] = 1.0;
            for j in (i + 1)..d {
                let r = sym[i][j];
                if !r.is_finite() {
                    return Err(Error::NonFinite(format!("correlation ({i},{j})")));
                }
                sym[j][i] = r;
            }
        }
        let mut adjacency = vec![Vec::new(); d];
        for i in 0..d {
            for j in (i + 1)..d {
                if sym[i][j].abs() >= threshold {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        let component = components(&adjacency);
        Ok(CorrelationGraph {
            names,
            corr: sym,
            threshold,
            mode,
            adjacency,
            component,
        })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn corr(&self, i: usize, j: usize) -> f64 {
        self.corr[i][j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.node_count())
            .flat_map(|i| self.adjacency[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.node_count() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.node_count(),
            });
        }
        Ok(())
    }

    pub fn path_exists(&self, a: usize, b: usize) -> Result<bool> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::invalid("path_exists needs two distinct nodes"));
        }
        Ok(self.component[a] == self.component[b])
    }

    pub fn euclid_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::invalid("euclid_distance needs two distinct nodes"));
        }
        let r = match self.mode {
            DistanceMode::Signed => self.corr[i][j],
            DistanceMode::Absolute => self.corr[i][j].abs(),
        };
        Ok((2.0 * (1.0 - r)).max(0.0).sqrt().max(MIN_DISTANCE))
    }

    /// Distance from `i` to the closest reachable member of `targets`, or
    /// `None` when no member is reachable.
    pub fn distance_to_set(&self, i: usize, targets: &[usize]) -> Result<Option<f64>> {
        self.check(i)?;
        if targets.is_empty() {
            return Err(Error::invalid("distance_to_set needs a nonempty target set"));
        }
        if targets.contains(&i) {
            return Err(Error::invalid(format!("feature {i} is itself in the target set")));
        }
        let mut best: Option<f64> = None;
        for &b in targets {
            if self.path_exists(i, b)? {
                let d = self.euclid_distance(i, b)?;
                best = Some(best.map_or(d, |x| x.min(d)));
            }
        }
        Ok(best)
    }

    /// Writes `node_a,node_b,correlation,distance`, one line per edge.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(out, "node_a,node_b,correlation,distance").map_err(io_err)?;
        for (i, j) in self.edges() {
            writeln!(
                out,
                "{},{},{},{}",
                csv_field(&self.names[i]),
                csv_field(&self.names[j]),
                self.corr[i][j],
                self.euclid_distance(i, j)?
            )
            .map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Connected-component label of each node, by breadth-first search.
fn components(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let mut label = vec![usize::MAX; adjacency.len()];
    let mut queue = VecDeque::new();
    for start in 0..adjacency.len() {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = start;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if label[v] == usize::MAX {
                    label[v] = start;
                    queue.push_back(v);
                }
            }
        }
    }
    label
}

/// Full correlation graph over every feature of a (standardized) dataset.
pub fn build_graph(d: &Dataset, threshold: f64, mode: DistanceMode) -> Result<CorrelationGraph> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!("correlation threshold must lie in (0,1], got {threshold}")));
    }
    let k = d.n_features();
    let mut corr = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            corr[i][j] = pearson(d.column(i), d.column(j))?;
        }
    }
    CorrelationGraph::from_matrix(d.names().to_vec(), corr, threshold, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, standardize, SyntheticSpec};
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("f{i}")).collect()
    }

    fn graph_from_edges(k: usize, edges: &[(usize, usize)]) -> CorrelationGraph {
        let mut corr = vec![vec![0.0; k]; k];
        for &(i, j) in edges {
            corr[i.min(j)][i.max(j)] = 0.5;
        }
        CorrelationGraph::from_matrix(names(k), corr, 0.3, DistanceMode::Signed).unwrap()
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // cov = 1.0, var = 1.25 each
        assert!((pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(pearson(&x, &[2.0; 4]).unwrap(), 0.0);
        assert!(pearson(&x, &[1.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_is_mean_product_of_standardized_columns() {
        let d = generate_synthetic(&SyntheticSpec { n_rows: 500, ..SyntheticSpec::default() }).unwrap();
        let (s, _) = standardize(&d);
        for (i, j) in [(0, 2), (1, 5), (6, 9), (3, 12)] {
            let dot = s.column(i).iter().zip(s.column(j)).map(|(a, b)| a * b).sum::<f64>() / s.n_rows() as f64;
            assert!((dot - pearson(d.column(i), d.column(j)).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_one_and_duplicates() {
        let d = generate_synthetic(&SyntheticSpec { n_rows: 300, ..SyntheticSpec::default() }).unwrap();
        let g = build_graph(&standardize(&d).0, 1.0, DistanceMode::Signed).unwrap();
        assert!(g.edges().is_empty());

        let c = d.column(0).to_vec();
        let dup = Dataset::from_columns(vec![c.clone(), c, d.column(8).to_vec()], d.labels().to_vec(), names(3)).unwrap();
        for t in [0.2, 0.9, 1.0] {
            let g = build_graph(&dup, t, DistanceMode::Signed).unwrap();
            assert!(g.neighbors(0).contains(&1));
            assert!((g.corr(0, 1) - 1.0).abs() < 1e-12);
        }
        assert!(build_graph(&dup, 0.0, DistanceMode::Signed).is_err());
        assert!(build_graph(&dup, 1.5, DistanceMode::Signed).is_err());
    }

    #[test]
    fn synthetic_proxy_edges() {
        let d = generate_synthetic(&SyntheticSpec { n_rows: 5000, seed: 2, ..SyntheticSpec::default() }).unwrap();
        let g = build_graph(&standardize(&d).0, 0.5, DistanceMode::Signed).unwrap();
        let s0 = d.index_of("sens_0").unwrap();
        assert!(g.neighbors(s0).contains(&d.index_of("proxy_0_0").unwrap()));
        assert!(!g.neighbors(s0).contains(&d.index_of("noise_0").unwrap()));
    }

    #[test]
    fn reachability() {
        // chain 0-1-2, node 3 isolated
        let g = graph_from_edges(4, &[(0, 1), (1, 2)]);
        assert!(g.path_exists(0, 1).unwrap());
        assert!(g.path_exists(0, 2).unwrap());
        assert!(!g.path_exists(3, 0).unwrap());
        assert!(g.path_exists(0, 0).is_err());
        assert!(g.path_exists(0, 9).is_err());
    }

    #[test]
    fn distances() {
        let mut corr = vec![vec![0.0; 4]; 4];
        corr[0][1] = -0.125;
        corr[0][2] = 1.0;
        corr[0][3] = -1.0;
        let g = CorrelationGraph::from_matrix(names(4), corr, 0.1, DistanceMode::Signed).unwrap();
        assert_eq!(g.euclid_distance(0, 1).unwrap(), 1.5);
        assert_eq!(g.euclid_distance(0, 2).unwrap(), MIN_DISTANCE);
        assert_eq!(g.euclid_distance(3, 0).unwrap(), 2.0);
        assert!(g.euclid_distance(1, 1).is_err());

        let mut corr = vec![vec![0.0; 4]; 4];
        corr[0][1] = -0.5;
        let abs = CorrelationGraph::from_matrix(names(4), corr, 0.1, DistanceMode::Absolute).unwrap();
        assert_eq!(abs.euclid_distance(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn distance_to_set_cases() {
        // node 0 adjacent to sensitive 1 (d = 1.5) and sensitive 2 (d = 0.8); node 3 isolated
        let mut corr = vec![vec![0.0; 4]; 4];
        corr[0][1] = -0.125;
        corr[0][2] = 1.0 - 0.8 * 0.8 / 2.0;
        let g = CorrelationGraph::from_matrix(names(4), corr, 0.1, DistanceMode::Signed).unwrap();
        assert_eq!(g.distance_to_set(0, &[1]).unwrap(), Some(1.5));
        assert!((g.distance_to_set(0, &[1, 2]).unwrap().unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(g.distance_to_set(3, &[1, 2]).unwrap(), None);
        assert!(g.distance_to_set(1, &[1, 2]).is_err());
    }

    #[test]
    fn edge_list_export() {
        let g = graph_from_edges(3, &[(0, 2)]);
        let f = tempfile::NamedTempFile::new().unwrap();
        g.write_edge_list(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text, format!("node_a,node_b,correlation,distance\nf0,f2,0.5,{}\n", 1f64.sqrt()));
    }

    /// Reachability by boolean matrix powering: R = (I + A)^(k-1).
    fn closure(k: usize, adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let mut reach: Vec<Vec<bool>> = (0..k).map(|i| (0..k).map(|j| i == j || adj[i][j]).collect()).collect();
        for _ in 0..k {
            let mut next = reach.clone();
            for i in 0..k {
                for j in 0..k {
                    next[i][j] = (0..k).any(|m| reach[i][m] && reach[m][j]);
                }
            }
            reach = next;
        }
        reach
    }

    fn random_matrix() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
        (2usize..=10).prop_flat_map(|k| {
            (Just(k), prop::collection::vec(prop::collection::vec(-1.0f64..1.0, k), k))
        })
    }

    proptest! {
        #[test]
        fn bfs_matches_matrix_closure((k, corr) in random_matrix(), t in 0.05f64..1.0) {
            let g = CorrelationGraph::from_matrix(names(k), corr, t, DistanceMode::Signed).unwrap();
            let mut adj = vec![vec![false; k]; k];
            for (i, j) in g.edges() {
                adj[i][j] = true;
                adj[j][i] = true;
            }
            let reach = closure(k, &adj);
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        prop_assert_eq!(g.path_exists(i, j).unwrap(), reach[i][j]);
                    }
                }
            }
        }

        #[test]
        fn edges_match_threshold_and_are_monotone((k, corr) in random_matrix(), t in 0.05f64..0.95, bump in 0.0f64..0.5) {
            let low = CorrelationGraph::from_matrix(names(k), corr.clone(), t, DistanceMode::Signed).unwrap();
            let high = CorrelationGraph::from_matrix(names(k), corr, (t + bump).min(1.0), DistanceMode::Signed).unwrap();
            for i in 0..k {
                for j in (i + 1)..k {
                    prop_assert_eq!(low.edges().contains(&(i, j)), low.corr(i, j).abs() >= t);
                    prop_assert_eq!(low.corr(i, j), low.corr(j, i));
                }
                prop_assert_eq!(low.corr(i, i), 1.0);
            }
            let low_edges = low.edges();
            prop_assert!(high.edges().iter().all(|e| low_edges.contains(e)));
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let d = low.euclid_distance(i, j).unwrap();
                        prop_assert!((MIN_DISTANCE..=2.0).contains(&d));
                        prop_assert_eq!(d, low.euclid_distance(j, i).unwrap());
                    }
                }
            }
        }
    }
}
