//! Unique, mutually consistent shortest paths from a vertex permutation.
//!
//! For every pair with at least two edges on some shortest path, the witness
//! `w(u, v)` is the internal vertex of smallest permutation label lying on
//! any shortest `u -> v` path. The chosen path is `rho(u, w) . rho(w, v)`,
//! or the single edge when no witness exists. Witnesses are found per
//! distance class `[r, 2r)` with a min-plus product restricted to a hitting
//! set of small labels, split into label blocks so that the minimum witness
//! can be located block by block.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Distance, DistanceMatrix, WeightedDigraph, INF};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SptError {
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("vertex {1} is unreachable from vertex {0}")]
    Unreachable(usize, usize),
    #[error("labels do not form a permutation of 1..={0}")]
    NotAPermutation(usize),
}

/// Bijection `pi: V -> {1..n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    label: Vec<usize>,
    by_label: Vec<usize>,
}

impl Permutation {
    /// Seeded Fisher-Yates shuffle.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Self::from_order(order)
    }

    /// `order[k]` receives label `k + 1`.
    pub fn from_order(order: Vec<usize>) -> Self {
        let mut label = vec![0; order.len()];
        for (k, &v) in order.iter().enumerate() {
            label[v] = k + 1;
        }
        Self {
            label,
            by_label: order,
        }
    }

    /// `labels[v]` is `pi(v)`, 1-based.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self, SptError> {
        let n = labels.len();
        let mut by_label = vec![usize::MAX; n];
        for (v, &l) in labels.iter().enumerate() {
            if l == 0 || l > n || by_label[l - 1] != usize::MAX {
                return Err(SptError::NotAPermutation(n));
            }
            by_label[l - 1] = v;
        }
        Ok(Self {
            label: labels,
            by_label,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_order((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    #[inline]
    pub fn label(&self, v: usize) -> usize {
        self.label[v]
    }

    /// Vertex carrying label `l` (1-based).
    #[inline]
    pub fn vertex(&self, l: usize) -> usize {
        self.by_label[l - 1]
    }
}

/// Dense integer matrix with [`INF`] entries, for distance products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Distance>,
}

impl IntMatrix {
    pub fn filled(rows: usize, cols: usize, value: Distance) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Distance) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Min-plus identity: `0` on the diagonal, [`INF`] elsewhere.
    pub fn min_plus_identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 0 } else { INF })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Distance {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Distance) {
        self.data[i * self.cols + j] = v;
    }
}

#[inline]
fn add_dist(a: Distance, b: Distance) -> Distance {
    if a == INF || b == INF {
        INF
    } else {
        a + b
    }
}

/// Distance product `C[u][v] = min_z A[u][z] + B[z][v]`.
///
/// # Panics
/// If the inner dimensions differ.
pub fn min_plus(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    assert_eq!(a.cols, b.rows, "inner dimensions must agree");
    let mut c = IntMatrix::filled(a.rows, b.cols, INF);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let x = a.get(i, k);
            if x == INF {
                continue;
            }
            for j in 0..b.cols {
                let y = b.get(k, j);
                if y != INF && x + y < c.get(i, j) {
                    c.set(i, j, x + y);
                }
            }
        }
    }
    c
}

/// Distance products restricted to label blocks: column `k` of `a` (row `k`
/// of `b`) is a witness with label `labels[k]`, and block `i` (0-based)
/// admits witnesses with labels in `i*s + 1 ..= (i+1)*s`. Blocks with no
/// witness come back all-[`INF`].
pub fn blocked_witness_product(
    a: &IntMatrix,
    b: &IntMatrix,
    labels: &[usize],
    block_size: usize,
) -> Vec<IntMatrix> {
    assert_eq!(a.cols, b.rows, "inner dimensions must agree");
    assert_eq!(labels.len(), a.cols, "one label per witness");
    assert!(block_size > 0, "block size must be positive");
    let blocks = labels
        .iter()
        .map(|&l| (l - 1) / block_size + 1)
        .max()
        .unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); blocks];
    for (k, &l) in labels.iter().enumerate() {
        members[(l - 1) / block_size].push(k);
    }
    members
        .iter()
        .map(|ks| {
            let sub_a = IntMatrix::from_fn(a.rows, ks.len(), |i, j| a.get(i, ks[j]));
            let sub_b = IntMatrix::from_fn(ks.len(), b.cols, |i, j| b.get(ks[i], j));
            min_plus(&sub_a, &sub_b)
        })
        .collect()
}

/// Largest number of edges on a shortest path, at the granularity the
/// witness search needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopClass {
    Zero,
    /// The edge `u -> v` is the only shortest path.
    One,
    /// Some shortest path has an internal vertex.
    Many,
    Unreachable,
}

/// `hops[u * n + v]`.
pub fn classify_hops(g: &WeightedDigraph, dist: &DistanceMatrix) -> Vec<HopClass> {
    let n = g.n();
    let mut out = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            let d = dist.get(u, v);
            let class = if u == v {
                HopClass::Zero
            } else if d == INF {
                HopClass::Unreachable
            } else {
                let internal = (0..n)
                    .any(|z| z != u && z != v && add_dist(dist.get(u, z), dist.get(z, v)) == d);
                if !internal && g.weight(u, v).map(u64::from) == Some(d) {
                    HopClass::One
                } else {
                    HopClass::Many
                }
            };
            out.push(class);
        }
    }
    out
}

/// Parameters of the witness search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SptConfig {
    /// Constant `C` of the hitting-set threshold `C M n ln n / r`.
    pub hitting_c: f64,
    /// Witness block size; `None` means `ceil(n^0.5286)`.
    pub block_size: Option<usize>,
}

impl Default for SptConfig {
    fn default() -> Self {
        Self {
            hitting_c: 3.0,
            block_size: None,
        }
    }
}

impl SptConfig {
    pub fn block_size_for(&self, n: usize) -> usize {
        self.block_size
            .unwrap_or_else(|| (n as f64).powf(0.5286).ceil() as usize)
            .max(1)
    }

    /// Label bound `C M n ln n / d` of the hitting set for distance `d`.
    pub fn hitting_bound(&self, n: usize, max_weight: u32, d: Distance) -> f64 {
        self.hitting_c * max_weight as f64 * n as f64 * (n as f64).ln() / d as f64
    }
}

/// A radius class whose hitting set missed some witness and was enlarged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Escalation {
    pub radius: Distance,
    pub threshold_before: usize,
    pub threshold_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessMatrix {
    n: usize,
    w: Vec<Option<usize>>,
    hops: Vec<HopClass>,
    escalations: Vec<Escalation>,
}

impl WitnessMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `w(u, v)`, absent when `|uv|` is 0, 1 or infinite.
    pub fn get(&self, u: usize, v: usize) -> Option<usize> {
        self.w[u * self.n + v]
    }

    pub fn hops(&self, u: usize, v: usize) -> HopClass {
        self.hops[u * self.n + v]
    }

    pub fn escalations(&self) -> &[Escalation] {
        &self.escalations
    }
}

/// Minimum-label witnesses for every pair, one distance class `[r, 2r)` at a
/// time. If some pair needing a witness finds none among labels up to the
/// hitting threshold, the threshold is doubled and the class redone.
pub fn compute_witnesses(
    g: &WeightedDigraph,
    dist: &DistanceMatrix,
    pi: &Permutation,
    config: &SptConfig,
) -> WitnessMatrix {
    let n = g.n();
    let hops = classify_hops(g, dist);
    let mut w = vec![None; n * n];
    let mut escalations = Vec::new();
    let s = config.block_size_for(n);
    let max_d = dist.max_finite().unwrap_or(0);

    let mut r: Distance = 1;
    while r <= max_d {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| {
                let d = dist.get(u, v);
                hops[u * n + v] == HopClass::Many && d >= r && d < 2 * r
            })
            .collect();
        if pairs.is_empty() {
            r *= 2;
            continue;
        }
        let bound = config.hitting_bound(n, g.max_weight(), r);
        let mut threshold = if bound >= n as f64 {
            n
        } else {
            bound.floor() as usize
        };
        loop {
            let witnesses: Vec<usize> = (1..=threshold).map(|l| pi.vertex(l)).collect();
            let clip = |d: Distance, a: usize, b: usize| if a != b && d <= 2 * r { d } else { INF };
            let a = IntMatrix::from_fn(n, witnesses.len(), |u, k| {
                clip(dist.get(u, witnesses[k]), u, witnesses[k])
            });
            let b = IntMatrix::from_fn(witnesses.len(), n, |k, v| {
                clip(dist.get(witnesses[k], v), witnesses[k], v)
            });
            let labels: Vec<usize> = witnesses.iter().map(|&z| pi.label(z)).collect();
            let blocks = if witnesses.is_empty() {
                Vec::new()
            } else {
                blocked_witness_product(&a, &b, &labels, s)
            };

            let mut missed = false;
            for &(u, v) in &pairs {
                let d = dist.get(u, v);
                let found = blocks
                    .iter()
                    .position(|blk| blk.get(u, v) == d)
                    .and_then(|i| {
                        let lo = i * s;
                        let hi = ((i + 1) * s).min(witnesses.len());
                        (lo..hi).find(|&k| add_dist(a.get(u, k), b.get(k, v)) == d)
                    });
                match found {
                    Some(k) => w[u * n + v] = Some(witnesses[k]),
                    None => missed = true,
                }
            }
            if !missed {
                break;
            }
            let next = (threshold * 2).clamp(1, n);
            assert!(
                next > threshold,
                "a full hitting set always contains a witness"
            );
            escalations.push(Escalation {
                radius: r,
                threshold_before: threshold,
                threshold_after: next,
            });
            threshold = next;
        }
        r *= 2;
    }
    WitnessMatrix {
        n,
        w,
        hops,
        escalations,
    }
}

/// `parent[v * n + u]`: the vertex after `u` on `rho(u, v)`, filled in by
/// nondecreasing distance so that `parent_v(u) = parent_w(u)` is always
/// already known.
pub fn in_tree_parents(w: &WitnessMatrix, dist: &DistanceMatrix) -> Vec<Option<usize>> {
    let n = w.n();
    let mut pairs: Vec<(Distance, usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v && dist.get(u, v) != INF)
        .map(|(u, v)| (dist.get(u, v), u, v))
        .collect();
    pairs.sort_unstable();
    let mut parent = vec![None; n * n];
    for (_, u, v) in pairs {
        parent[v * n + u] = match w.get(u, v) {
            None => Some(v),
            Some(z) => {
                let p = parent[z * n + u];
                debug_assert!(p.is_some(), "witness pair processed first");
                p
            }
        };
    }
    parent
}

/// Incoming and outgoing shortest-path trees for every root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestPathForests {
    n: usize,
    /// `parent_in[v * n + u]`: parent of `u` in `T_in(v)`.
    parent_in: Vec<Option<usize>>,
    /// `parent_out[u * n + v]`: parent of `v` in `T_out(u)`.
    parent_out: Vec<Option<usize>>,
    permutation: Permutation,
    witnesses: WitnessMatrix,
    escalations: usize,
}

/// Assembles both forests: `T_in` from the witnesses of `G`, `T_out` from
/// the witnesses of the reversed graph under the same permutation.
pub fn build_forests(
    w: &WitnessMatrix,
    w_rev: &WitnessMatrix,
    dist: &DistanceMatrix,
    dist_rev: &DistanceMatrix,
    permutation: &Permutation,
) -> ShortestPathForests {
    ShortestPathForests {
        n: w.n(),
        parent_in: in_tree_parents(w, dist),
        parent_out: in_tree_parents(w_rev, dist_rev),
        permutation: permutation.clone(),
        witnesses: w.clone(),
        escalations: w.escalations().len() + w_rev.escalations().len(),
    }
}

impl ShortestPathForests {
    /// Full pipeline: distances, witnesses on `G` and its reverse, forests.
    pub fn compute(g: &WeightedDigraph, pi: &Permutation, config: &SptConfig) -> Self {
        let dist = g.apsp();
        Self::compute_with_distances(g, &dist, pi, config)
    }

    pub fn compute_with_distances(
        g: &WeightedDigraph,
        dist: &DistanceMatrix,
        pi: &Permutation,
        config: &SptConfig,
    ) -> Self {
        let rev = g.reversed();
        let dist_rev = rev.apsp();
        let w = compute_witnesses(g, dist, pi, config);
        let w_rev = compute_witnesses(&rev, &dist_rev, pi, config);
        build_forests(&w, &w_rev, dist, &dist_rev, pi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn witnesses(&self) -> &WitnessMatrix {
        &self.witnesses
    }

    /// Number of hitting-set enlargements over both passes.
    pub fn escalations(&self) -> usize {
        self.escalations
    }

    /// Parent of `u` in `T_in(v)`.
    pub fn parent_in(&self, v: usize, u: usize) -> Option<usize> {
        self.parent_in[v * self.n + u]
    }

    /// Parent of `v` in `T_out(u)`, i.e. the vertex before `v` on `rho(u, v)`.
    pub fn parent_out(&self, u: usize, v: usize) -> Option<usize> {
        self.parent_out[u * self.n + v]
    }

    fn check(&self, x: usize) -> Result<(), SptError> {
        if x >= self.n {
            Err(SptError::VertexOutOfRange(x))
        } else {
            Ok(())
        }
    }

    /// `rho(u, v)` as a vertex sequence, following `T_in(v)`. `[u]` when `u == v`.
    pub fn extract_path(&self, u: usize, v: usize) -> Result<Vec<usize>, SptError> {
        self.check(u)?;
        self.check(v)?;
        let mut path = vec![u];
        let mut cur = u;
        while cur != v {
            cur = self.parent_in(v, cur).ok_or(SptError::Unreachable(u, v))?;
            path.push(cur);
            if path.len() > self.n {
                unreachable!("parent pointers of T_in({v}) contain a cycle");
            }
        }
        Ok(path)
    }

    /// `rho(u, v)` rebuilt backwards from `T_out(u)`.
    pub fn extract_path_out(&self, u: usize, v: usize) -> Result<Vec<usize>, SptError> {
        self.check(u)?;
        self.check(v)?;
        let mut path = vec![v];
        let mut cur = v;
        while cur != u {
            cur = self.parent_out(u, cur).ok_or(SptError::Unreachable(u, v))?;
            path.push(cur);
            if path.len() > self.n {
                unreachable!("parent pointers of T_out({u}) contain a cycle");
            }
        }
        path.reverse();
        Ok(path)
    }
}

/// Violations found by [`verify_consistency`]; all zero on success.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub pairs_checked: usize,
    /// Paths that are not shortest paths of `G`.
    pub length_violations: usize,
    /// `T_in` and `T_out` disagree on `rho(u, v)`.
    pub tree_mismatches: usize,
    /// Subpaths of some `rho(u, v)` that differ from `rho(u', v')`.
    pub subpath_violations: usize,
    pub subgraphs_checked: usize,
    /// Pairs whose path survives in a sampled subgraph but is chosen
    /// differently there.
    pub subgraph_violations: usize,
    /// Pairs with `pi(w(u, v)) > C M n ln n / ||uv||`.
    pub hitting_bound_violations: usize,
    /// Hitting-set enlargements performed while building the forests.
    pub escalations: usize,
}

impl ConsistencyReport {
    /// Everything except the hitting statistic, which is reported only.
    pub fn is_consistent(&self) -> bool {
        self.length_violations == 0
            && self.tree_mismatches == 0
            && self.subpath_violations == 0
            && self.subgraph_violations == 0
    }
}

fn path_length(g: &WeightedDigraph, path: &[usize]) -> Option<Distance> {
    path.windows(2)
        .map(|e| g.weight(e[0], e[1]).map(u64::from))
        .sum()
}

/// Checks every pair exhaustively for path correctness and subpath
/// consistency, and reruns the pipeline on `subgraph_samples` random
/// subgraphs that retain some chosen path, keeping the permutation fixed.
pub fn verify_consistency(
    g: &WeightedDigraph,
    forests: &ShortestPathForests,
    config: &SptConfig,
    subgraph_samples: usize,
    seed: u64,
) -> ConsistencyReport {
    let n = g.n();
    let dist = g.apsp();
    let pi = forests.permutation();
    let mut report = ConsistencyReport {
        escalations: forests.escalations(),
        ..Default::default()
    };
    let mut paths: Vec<Option<Vec<usize>>> = vec![None; n * n];
    for u in 0..n {
        for v in 0..n {
            if dist.get(u, v) == INF {
                continue;
            }
            report.pairs_checked += 1;
            let path = forests
                .extract_path(u, v)
                .expect("reachable pair has a path");
            if path_length(g, &path) != Some(dist.get(u, v)) {
                report.length_violations += 1;
            }
            if forests.extract_path_out(u, v).ok().as_ref() != Some(&path) {
                report.tree_mismatches += 1;
            }
            if let Some(z) = forests.witnesses().get(u, v) {
                if pi.label(z) as f64 > config.hitting_bound(n, g.max_weight(), dist.get(u, v)) {
                    report.hitting_bound_violations += 1;
                }
            }
            paths[u * n + v] = Some(path);
        }
    }

    for path in paths.iter().flatten() {
        for i in 0..path.len() {
            for j in i + 1..path.len() {
                let expected = paths[path[i] * n + path[j]].as_deref();
                if expected != Some(&path[i..=j]) {
                    report.subpath_violations += 1;
                }
            }
        }
    }

    let candidates: Vec<usize> = (0..n * n)
        .filter(|&k| paths[k].as_ref().is_some_and(|p| p.len() >= 2))
        .collect();
    if candidates.is_empty() {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..subgraph_samples {
        let k = candidates[rng.gen_range(0..candidates.len())];
        let anchor = paths[k].as_ref().expect("candidate has a path");
        let keep: BTreeSet<(usize, usize)> = anchor.windows(2).map(|e| (e[0], e[1])).collect();
        let sub = g.filter_edges(|a, b, _| keep.contains(&(a, b)) || rng.gen_bool(0.5));
        let sub_forests = ShortestPathForests::compute(&sub, pi, config);
        report.subgraphs_checked += 1;
        for (idx, path) in paths.iter().enumerate() {
            let Some(path) = path else { continue };
            let contained = path.windows(2).all(|e| sub.weight(e[0], e[1]).is_some());
            if !contained {
                continue;
            }
            let (u, v) = (idx / n, idx % n);
            if sub_forests.extract_path(u, v).ok().as_ref() != Some(path) {
                report.subgraph_violations += 1;
            }
        }
    }
    report
}
