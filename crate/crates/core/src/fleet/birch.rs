//! BIRCH clustering: a CF tree of clustering features followed by
//! agglomerative merging of the leaf subclusters.
//!
//! A clustering feature summarizes a set of points as `(n, Σx, Σ|x|²)`, which
//! is enough to get the centroid and radius of the set and to merge two sets by
//! addition. Points descend to the closest leaf entry and are absorbed when
//! the merged radius stays within the threshold; nodes holding more than
//! `branching` entries split around their two farthest entries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirchParams {
    pub n_clusters: usize,
    pub threshold: f64,
    pub branching: usize,
}

impl Default for BirchParams {
    fn default() -> Self {
        BirchParams {
            n_clusters: 3,
            threshold: 0.5,
            branching: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringFeature {
    pub n: usize,
    pub linear_sum: Vec<f64>,
    pub squared_sum: f64,
}

impl ClusteringFeature {
    pub fn from_point(x: &[f64]) -> Self {
        ClusteringFeature {
            n: 1,
            linear_sum: x.to_vec(),
            squared_sum: dot(x, x),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.linear_sum.iter().map(|v| v / n).collect()
    }

    /// Root mean squared distance of the members to the centroid.
    pub fn radius(&self) -> f64 {
        let n = self.n as f64;
        let c2 = dot(&self.linear_sum, &self.linear_sum) / (n * n);
        (self.squared_sum / n - c2).max(0.0).sqrt()
    }

    pub fn merge(&mut self, other: &ClusteringFeature) {
        self.n += other.n;
        for (a, b) in self.linear_sum.iter_mut().zip(&other.linear_sum) {
            *a += b;
        }
        self.squared_sum += other.squared_sum;
    }

    fn add_point(&mut self, x: &[f64]) {
        self.n += 1;
        for (a, b) in self.linear_sum.iter_mut().zip(x) {
            *a += b;
        }
        self.squared_sum += dot(x, x);
    }

    fn radius_with(&self, x: &[f64]) -> f64 {
        let mut merged = self.clone();
        merged.add_point(x);
        merged.radius()
    }

    fn centroid_distance2(&self, other: &ClusteringFeature) -> f64 {
        let (na, nb) = (self.n as f64, other.n as f64);
        self.linear_sum
            .iter()
            .zip(&other.linear_sum)
            .map(|(a, b)| (a / na - b / nb).powi(2))
            .sum()
    }

    fn point_distance2(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        self.linear_sum
            .iter()
            .zip(x)
            .map(|(a, b)| (a / n - b).powi(2))
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[derive(Debug, Clone)]
struct Entry {
    cf: ClusteringFeature,
    child: Option<usize>,
}

#[derive(Debug, Clone, Default)]
struct Node {
    leaf: bool,
    entries: Vec<Entry>,
}

/// A CF tree held in an arena; node 0 is not necessarily the root.
#[derive(Debug, Clone)]
pub struct CfTree {
    nodes: Vec<Node>,
    root: usize,
    threshold: f64,
    branching: usize,
}

impl CfTree {
    pub fn new(threshold: f64, branching: usize) -> Self {
        CfTree {
            nodes: vec![Node {
                leaf: true,
                entries: Vec::new(),
            }],
            root: 0,
            threshold,
            branching,
        }
    }

    pub fn insert(&mut self, x: &[f64]) {
        if let Some((a, b)) = self.insert_at(self.root, x) {
            self.nodes.push(Node {
                leaf: false,
                entries: vec![a, b],
            });
            self.root = self.nodes.len() - 1;
        }
    }

    fn closest(entries: &[Entry], x: &[f64]) -> Option<usize> {
        entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.cf.point_distance2(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    fn insert_at(&mut self, node: usize, x: &[f64]) -> Option<(Entry, Entry)> {
        let closest = Self::closest(&self.nodes[node].entries, x);
        if self.nodes[node].leaf {
            match closest {
                Some(i) if self.nodes[node].entries[i].cf.radius_with(x) <= self.threshold => {
                    self.nodes[node].entries[i].cf.add_point(x);
                }
                _ => self.nodes[node].entries.push(Entry {
                    cf: ClusteringFeature::from_point(x),
                    child: None,
                }),
            }
        } else {
            let i = closest.expect("internal nodes are never empty");
            let child = self.nodes[node].entries[i].child.expect("internal entry has a child");
            match self.insert_at(child, x) {
                Some((a, b)) => {
                    self.nodes[node].entries[i] = a;
                    self.nodes[node].entries.push(b);
                }
                None => self.nodes[node].entries[i].cf.add_point(x),
            }
        }
        if self.nodes[node].entries.len() > self.branching {
            Some(self.split(node))
        } else {
            None
        }
    }

    /// Split around the farthest pair of entries. The first half stays in
    /// `node`, the second moves to a new node.
    fn split(&mut self, node: usize) -> (Entry, Entry) {
        let entries = std::mem::take(&mut self.nodes[node].entries);
        let mut seeds = (0, 1);
        let mut far = f64::NEG_INFINITY;
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                let d = entries[i].cf.centroid_distance2(&entries[j].cf);
                if d > far {
                    far = d;
                    seeds = (i, j);
                }
            }
        }
        let left_seed = entries[seeds.0].cf.clone();
        let right_seed = entries[seeds.1].cf.clone();
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (i, e) in entries.into_iter().enumerate() {
            let to_left = i == seeds.0
                || (i != seeds.1
                    && e.cf.centroid_distance2(&left_seed) <= e.cf.centroid_distance2(&right_seed));
            if to_left {
                left.push(e);
            } else {
                right.push(e);
            }
        }
        let summarize = |entries: &[Entry]| {
            let mut cf = entries[0].cf.clone();
            for e in &entries[1..] {
                cf.merge(&e.cf);
            }
            cf
        };
        let (lcf, rcf) = (summarize(&left), summarize(&right));
        let leaf = self.nodes[node].leaf;
        self.nodes[node].entries = left;
        self.nodes.push(Node {
            leaf,
            entries: right,
        });
        let new = self.nodes.len() - 1;
        (
            Entry {
                cf: lcf,
                child: Some(node),
            },
            Entry {
                cf: rcf,
                child: Some(new),
            },
        )
    }

    /// Leaf subclusters, left to right.
    pub fn leaf_features(&self) -> Vec<ClusteringFeature> {
        let mut out = Vec::new();
        self.collect_leaves(self.root, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<ClusteringFeature>) {
        let n = &self.nodes[node];
        for e in &n.entries {
            match e.child {
                Some(c) => self.collect_leaves(c, out),
                None => out.push(e.cf.clone()),
            }
        }
    }
}

/// Merge features pairwise by smallest centroid distance until `target`
/// remain. Uses a cached nearest neighbour per cluster.
pub fn agglomerate(mut features: Vec<ClusteringFeature>, target: usize) -> Vec<ClusteringFeature> {
    let target = target.max(1);
    if features.len() <= target {
        return features;
    }
    let n = features.len();
    let mut alive = vec![true; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];
    let nearest = |features: &[ClusteringFeature], alive: &[bool], i: usize| {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in 0..features.len() {
            if j != i && alive[j] {
                let d = features[i].centroid_distance2(&features[j]);
                if d < best.1 {
                    best = (j, d);
                }
            }
        }
        best
    };
    for i in 0..n {
        (nn[i], nn_d[i]) = nearest(&features, &alive, i);
    }
    let mut remaining = n;
    while remaining > target {
        let a = (0..n)
            .filter(|&i| alive[i])
            .min_by(|&x, &y| nn_d[x].total_cmp(&nn_d[y]).then(x.cmp(&y)))
            .expect("at least two clusters alive");
        let b = nn[a];
        let (keep, gone) = (a.min(b), a.max(b));
        let absorbed = features[gone].clone();
        features[keep].merge(&absorbed);
        alive[gone] = false;
        remaining -= 1;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            if i == keep || nn[i] == keep || nn[i] == gone {
                (nn[i], nn_d[i]) = nearest(&features, &alive, i);
            } else {
                let d = features[i].centroid_distance2(&features[keep]);
                if d < nn_d[i] || (d == nn_d[i] && keep < nn[i]) {
                    nn[i] = keep;
                    nn_d[i] = d;
                }
            }
        }
    }
    features
        .into_iter()
        .zip(alive)
        .filter_map(|(f, a)| a.then_some(f))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirchResult {
    /// Cluster id per input point, numbered by first appearance.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub n_subclusters: usize,
    pub warning: Option<String>,
}

pub fn birch_cluster(points: &[Vec<f64>], params: &BirchParams) -> Result<BirchResult> {
    if params.n_clusters == 0 {
        return Err(Error::InvalidArgument("cluster count must be at least 1".into()));
    }
    if !(params.threshold > 0.0) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    if params.branching < 2 {
        return Err(Error::InvalidArgument("branching factor must be at least 2".into()));
    }
    if let Some(d) = points.first().map(Vec::len) {
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidArgument("points have mixed dimensions".into()));
        }
    }
    if points.len() < params.n_clusters {
        return Ok(BirchResult {
            labels: (0..points.len()).collect(),
            centroids: points.to_vec(),
            n_subclusters: points.len(),
            warning: Some(format!(
                "{} point(s) for {} clusters; each point is its own cluster",
                points.len(),
                params.n_clusters
            )),
        });
    }

    let mut tree = CfTree::new(params.threshold, params.branching);
    for p in points {
        tree.insert(p);
    }
    let leaves = tree.leaf_features();
    let n_subclusters = leaves.len();
    let centroids: Vec<Vec<f64>> = agglomerate(leaves, params.n_clusters)
        .iter()
        .map(ClusteringFeature::centroid)
        .collect();

    let raw: Vec<usize> = points
        .par_iter()
        .map(|p| {
            centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (i, squared_distance(p, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i)
                .expect("at least one centroid")
        })
        .collect();
    let mut remap = vec![usize::MAX; centroids.len()];
    let mut ordered = Vec::new();
    let labels = raw
        .iter()
        .map(|&c| {
            if remap[c] == usize::MAX {
                remap[c] = ordered.len();
                ordered.push(centroids[c].clone());
            }
            remap[c]
        })
        .collect();
    Ok(BirchResult {
        labels,
        centroids: ordered,
        n_subclusters,
        warning: None,
    })
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let comb2 = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| comb2(v)).sum();
    let rows: f64 = table.iter().map(|r| comb2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| comb2(table.iter().map(|r| r[j]).sum())).sum();
    let total = comb2(n as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return if index == expected { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}
