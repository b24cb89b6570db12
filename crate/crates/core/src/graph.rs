//! Directed graphs with weights in `1..=M`, their text format, and exact
//! distance oracles.
//!
//! Vertices are 0-based in memory and 1-based in files; the conversion
//! happens only in [`WeightedDigraph::parse`] and [`WeightedDigraph::to_text`].

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

pub type Distance = u64;

/// Unreachable. Strictly larger than any `n * M` the crate can represent.
pub const INF: Distance = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("edge {0} -> {1} does not exist")]
    MissingEdge(usize, usize),
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

/// A failed edge or vertex, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Failure {
    Edge(usize, usize),
    Vertex(usize),
}

impl std::fmt::Display for Failure {
    /// 1-based token: `E1-2` or `V3`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Failure::Edge(a, b) => write!(f, "E{}-{}", a + 1, b + 1),
            Failure::Vertex(v) => write!(f, "V{}", v + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedDigraph {
    n: usize,
    max_weight: u32,
    /// Sorted by target.
    out: Vec<Vec<(usize, u32)>>,
    edges: BTreeMap<(usize, usize), u32>,
}

impl WeightedDigraph {
    pub fn new(n: usize, max_weight: u32) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Invalid(
                "graph needs at least one vertex".into(),
            ));
        }
        if max_weight == 0 {
            return Err(GraphError::Invalid(
                "maximum weight must be positive".into(),
            ));
        }
        Ok(Self {
            n,
            max_weight,
            out: vec![Vec::new(); n],
            edges: BTreeMap::new(),
        })
    }

    /// Builds a graph from 0-based `(u, v, w)` triples.
    pub fn from_edges(
        n: usize,
        max_weight: u32,
        edges: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new(n, max_weight)?;
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: u32) -> Result<(), GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::VertexOutOfRange(x));
            }
        }
        if u == v {
            return Err(GraphError::Invalid(format!(
                "self-loop at vertex {}",
                u + 1
            )));
        }
        if w == 0 || w > self.max_weight {
            return Err(GraphError::Invalid(format!(
                "weight {w} outside [1, {}]",
                self.max_weight
            )));
        }
        if self.edges.insert((u, v), w).is_some() {
            return Err(GraphError::Invalid(format!(
                "duplicate edge {} -> {}",
                u + 1,
                v + 1
            )));
        }
        let list = &mut self.out[u];
        let pos = list.partition_point(|&(t, _)| t < v);
        list.insert(pos, (v, w));
        Ok(())
    }

    /// Parses the text format: a header `n m M`, then `m` lines `u v w`
    /// (1-based). Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 0,
            message: "missing header `n m M`".into(),
        })?;
        let h = parse_fields::<u64>(header, 3, hline)?;
        let (n, m, max_w) = (h[0] as usize, h[1] as usize, h[2]);
        if n == 0 {
            return Err(GraphError::Validation {
                line: hline,
                message: "vertex count must be positive".into(),
            });
        }
        if max_w == 0 || max_w > u32::MAX as u64 {
            return Err(GraphError::Validation {
                line: hline,
                message: format!("maximum weight {max_w} is not a positive 32-bit value"),
            });
        }
        let mut g = Self::new(n, max_w as u32)?;
        let mut count = 0usize;
        for (line, body) in lines {
            let e = parse_fields::<u64>(body, 3, line)?;
            let (u, v, w) = (e[0], e[1], e[2]);
            let bad = |message: String| GraphError::Validation { line, message };
            if u == 0 || v == 0 || u > n as u64 || v > n as u64 {
                return Err(bad(format!("endpoint outside [1, {n}]")));
            }
            if u == v {
                return Err(bad(format!("self-loop at vertex {u}")));
            }
            if w == 0 || w > max_w {
                return Err(bad(format!("weight {w} outside [1, {max_w}]")));
            }
            let (u, v) = (u as usize - 1, v as usize - 1);
            if g.edges.contains_key(&(u, v)) {
                return Err(bad(format!("duplicate edge {} -> {}", u + 1, v + 1)));
            }
            g.add_edge(u, v, w as u32).map_err(|e| bad(e.to_string()))?;
            count += 1;
        }
        if count != m {
            return Err(GraphError::Validation {
                line: hline,
                message: format!("header declares {m} edges but {count} were given"),
            });
        }
        Ok(g)
    }

    /// Inverse of [`WeightedDigraph::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.n, self.edges.len(), self.max_weight);
        for (&(u, v), &w) in &self.edges {
            let _ = writeln!(s, "{} {} {}", u + 1, v + 1, w);
        }
        s
    }

    /// Random digraph: each ordered pair becomes an edge with probability
    /// `density`, weights uniform in `1..=max_weight`.
    pub fn random<R: Rng>(n: usize, max_weight: u32, density: f64, rng: &mut R) -> Self {
        let mut g = Self::new(n, max_weight).expect("n and max_weight are positive");
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.gen_bool(density) {
                    let w = rng.gen_range(1..=max_weight);
                    g.add_edge(u, v, w).expect("fresh edge");
                }
            }
        }
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<u32> {
        self.edges.get(&(u, v)).copied()
    }

    /// Outgoing `(target, weight)` pairs, sorted by target.
    pub fn out_edges(&self, u: usize) -> &[(usize, u32)] {
        &self.out[u]
    }

    /// All edges as `(u, v, w)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn reversed(&self) -> Self {
        Self::from_edges(
            self.n,
            self.max_weight,
            self.edges().map(|(u, v, w)| (v, u, w)),
        )
        .expect("reversal preserves validity")
    }

    /// Keeps only the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize, u32) -> bool) -> Self {
        Self::from_edges(
            self.n,
            self.max_weight,
            self.edges().filter(|&(u, v, w)| keep(u, v, w)),
        )
        .expect("subgraph of a valid graph")
    }

    /// Checks that a failure names existing elements.
    pub fn check_failure(&self, f: Failure) -> Result<(), GraphError> {
        match f {
            Failure::Edge(a, b) => {
                if self.weight(a, b).is_none() {
                    return Err(GraphError::MissingEdge(a, b));
                }
            }
            Failure::Vertex(x) => {
                if x >= self.n {
                    return Err(GraphError::VertexOutOfRange(x));
                }
            }
        }
        Ok(())
    }

    /// `G - f`. A vertex failure deletes only the outgoing edges of the
    /// vertex; paths cannot pass through it once it has no way out.
    pub fn remove_failure(&self, f: Failure) -> Result<Self, GraphError> {
        self.check_failure(f)?;
        Ok(match f {
            Failure::Edge(a, b) => self.filter_edges(|u, v, _| (u, v) != (a, b)),
            Failure::Vertex(x) => self.filter_edges(|u, _, _| u != x),
        })
    }

    /// Single-source distances; unreachable vertices get [`INF`].
    pub fn dijkstra(&self, source: usize) -> Vec<Distance> {
        self.dijkstra_avoiding(source, None)
    }

    /// Dijkstra on `G - f` without materialising the subgraph.
    pub fn dijkstra_avoiding(&self, source: usize, failure: Option<Failure>) -> Vec<Distance> {
        let mut dist = vec![INF; self.n];
        dist[source] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if failure == Some(Failure::Vertex(u)) {
                continue;
            }
            for &(v, w) in &self.out[u] {
                if failure == Some(Failure::Edge(u, v)) {
                    continue;
                }
                let nd = d + w as u64;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist
    }

    /// All-pairs distances by `n` Dijkstra runs.
    pub fn apsp(&self) -> DistanceMatrix {
        let mut data = Vec::with_capacity(self.n * self.n);
        for s in 0..self.n {
            data.extend(self.dijkstra(s));
        }
        DistanceMatrix { n: self.n, data }
    }

    /// Length of the shortest `u -> v` path avoiding `f`.
    pub fn replacement_distance(
        &self,
        u: usize,
        v: usize,
        f: Failure,
    ) -> Result<Distance, GraphError> {
        self.check_query(u, v, f)?;
        Ok(self.dijkstra_avoiding(u, Some(f))[v])
    }

    /// Validates a query `(u, v, f)`.
    pub fn check_query(&self, u: usize, v: usize, f: Failure) -> Result<(), GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::VertexOutOfRange(x));
            }
        }
        self.check_failure(f)?;
        if let Failure::Vertex(x) = f {
            if x == u || x == v {
                return Err(GraphError::InvalidQuery(format!(
                    "failed vertex {} is an endpoint",
                    x + 1
                )));
            }
        }
        Ok(())
    }

    /// Every failure of the graph: all edges, then all vertices.
    pub fn failures(&self) -> Vec<Failure> {
        self.edges()
            .map(|(a, b, _)| Failure::Edge(a, b))
            .chain((0..self.n).map(Failure::Vertex))
            .collect()
    }
}

fn parse_fields<T: std::str::FromStr>(
    line: &str,
    count: usize,
    lineno: usize,
) -> Result<Vec<T>, GraphError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(GraphError::Parse {
            line: lineno,
            message: format!("expected {count} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| GraphError::Parse {
                line: lineno,
                message: format!("`{f}` is not a non-negative integer"),
            })
        })
        .collect()
}

/// Square table of distances, [`INF`] for unreachable pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<Distance>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<Distance>>) -> Self {
        let n = rows.len();
        assert!(
            rows.iter().all(|r| r.len() == n),
            "distance matrix must be square"
        );
        Self {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Distance {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[Distance] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> Option<Distance> {
        self.data.iter().copied().filter(|&d| d != INF).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p3() -> WeightedDigraph {
        WeightedDigraph::parse("3 2 1\n1 2 1\n2 3 1\n").unwrap()
    }

    fn diamond() -> WeightedDigraph {
        WeightedDigraph::parse("4 4 1\n1 2 1\n1 3 1\n2 4 1\n3 4 1\n").unwrap()
    }

    fn bellman_ford(g: &WeightedDigraph, s: usize) -> Vec<Distance> {
        let mut d = vec![INF; g.n()];
        d[s] = 0;
        for _ in 0..g.n() {
            for (u, v, w) in g.edges() {
                if d[u] != INF && d[u] + (w as u64) < d[v] {
                    d[v] = d[u] + w as u64;
                }
            }
        }
        d
    }

    fn floyd_warshall(g: &WeightedDigraph) -> Vec<Vec<Distance>> {
        let n = g.n();
        let mut d = vec![vec![INF; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for (u, v, w) in g.edges() {
            d[u][v] = w as u64;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] != INF && d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn parse_path_graph() {
        let g = p3();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), Some(1));
        assert_eq!(g.weight(1, 0), None);
    }

    #[test]
    fn parse_comments_and_round_trip() {
        let text = "# a comment\n3 2 4\n\n1 2 3\n# inline\n2 3 4\n";
        let g = WeightedDigraph::parse(text).unwrap();
        assert_eq!(WeightedDigraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        let e = WeightedDigraph::parse("3 1 2\n1 2 0\n").unwrap_err();
        assert!(matches!(e, GraphError::Validation { line: 2, .. }));
        let e = WeightedDigraph::parse("3 1 2\n1 2 3\n").unwrap_err();
        assert!(matches!(e, GraphError::Validation { line: 2, .. }));
        let e = WeightedDigraph::parse("3 2 2\n1 2 1\n1 2 2\n").unwrap_err();
        assert!(matches!(e, GraphError::Validation { line: 3, .. }));
        let e = WeightedDigraph::parse("3 1 2\n2 2 1\n").unwrap_err();
        assert!(matches!(e, GraphError::Validation { line: 2, .. }));
        let e = WeightedDigraph::parse("3 1 2\n1 x 1\n").unwrap_err();
        assert!(matches!(e, GraphError::Parse { line: 2, .. }));
        let e = WeightedDigraph::parse("3 1 2\n1 2\n").unwrap_err();
        assert!(matches!(e, GraphError::Parse { line: 2, .. }));
        let e = WeightedDigraph::parse("3 2 2\n1 2 1\n").unwrap_err();
        assert!(matches!(e, GraphError::Validation { line: 1, .. }));
        let e = WeightedDigraph::parse("3 1 2\n1 4 1\n").unwrap_err();
        assert!(matches!(e, GraphError::Validation { line: 2, .. }));
        assert!(WeightedDigraph::parse("").is_err());
    }

    #[test]
    fn edgeless_graph_distances() {
        let g = WeightedDigraph::parse("4 0 1\n").unwrap();
        let d = g.apsp();
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(d.get(u, v), if u == v { 0 } else { INF });
            }
        }
    }

    #[test]
    fn dijkstra_examples() {
        let g = p3();
        assert_eq!(g.dijkstra(0), vec![0, 1, 2]);
        assert_eq!(g.dijkstra(2), vec![INF, INF, 0]);
        let d = g.apsp();
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.get(2, 0), INF);
    }

    #[test]
    fn complete_graph_unit_weights() {
        let edges = (0..5).flat_map(|u| (0..5).filter(move |&v| v != u).map(move |v| (u, v, 1)));
        let g = WeightedDigraph::from_edges(5, 1, edges).unwrap();
        let d = g.apsp();
        for u in 0..5 {
            for v in 0..5 {
                assert_eq!(d.get(u, v), (u != v) as u64);
            }
        }
    }

    #[test]
    fn dijkstra_matches_bellman_ford() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..5 {
            let g = WeightedDigraph::random(50, 5, 0.06, &mut rng);
            for s in 0..50 {
                assert_eq!(g.dijkstra(s), bellman_ford(&g, s));
            }
        }
    }

    #[test]
    fn apsp_matches_floyd_warshall() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..5 {
            let g = WeightedDigraph::random(30, 4, 0.1, &mut rng);
            let d = g.apsp();
            let fw = floyd_warshall(&g);
            for (u, row) in fw.iter().enumerate() {
                assert_eq!(d.row(u), &row[..]);
            }
        }
    }

    #[test]
    fn apsp_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = WeightedDigraph::random(25, 3, 0.12, &mut rng);
        let d = g.apsp();
        let dr = g.reversed().apsp();
        for u in 0..25 {
            assert_eq!(d.get(u, u), 0);
            for v in 0..25 {
                assert_eq!(d.get(u, v), dr.get(v, u));
                for w in 0..25 {
                    let via = d.get(u, w).saturating_add(d.get(w, v));
                    assert!(d.get(u, v) <= via);
                }
            }
        }
    }

    #[test]
    fn removal_examples() {
        let g = p3();
        let h = g.remove_failure(Failure::Edge(0, 1)).unwrap();
        assert_eq!(h.dijkstra(0)[2], INF);
        assert_eq!(
            g.remove_failure(Failure::Edge(1, 0)),
            Err(GraphError::MissingEdge(1, 0))
        );

        let d = diamond();
        let h = d.remove_failure(Failure::Vertex(1)).unwrap();
        assert_eq!(h.dijkstra(0)[3], 2);
        // incoming edge 1 -> 2 survives, outgoing 2 -> 4 is gone
        assert_eq!(h.weight(0, 1), Some(1));
        assert_eq!(h.weight(1, 3), None);
    }

    #[test]
    fn vertex_removal_deletes_exactly_out_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let g = WeightedDigraph::random(20, 3, 0.2, &mut rng);
        for f in 0..20 {
            let h = g.remove_failure(Failure::Vertex(f)).unwrap();
            assert_eq!(h.edge_count(), g.edge_count() - g.out_edges(f).len());
            assert!(h.edges().all(|(u, v, w)| g.weight(u, v) == Some(w)));
        }
    }

    #[test]
    fn replacement_distance_examples() {
        let g = p3();
        assert_eq!(
            g.replacement_distance(0, 2, Failure::Vertex(1)).unwrap(),
            INF
        );
        let d = diamond();
        assert_eq!(
            d.replacement_distance(0, 3, Failure::Edge(1, 3)).unwrap(),
            2
        );
        // a failure off every shortest path changes nothing
        let g = WeightedDigraph::parse("4 3 1\n1 2 1\n2 3 1\n3 4 1\n").unwrap();
        assert_eq!(
            g.replacement_distance(0, 1, Failure::Edge(2, 3)).unwrap(),
            1
        );
        assert!(matches!(
            g.replacement_distance(0, 2, Failure::Vertex(0)),
            Err(GraphError::InvalidQuery(_))
        ));
    }

    #[test]
    fn replacement_distance_dominates_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let g = WeightedDigraph::random(15, 3, 0.2, &mut rng);
        let d = g.apsp();
        for f in g.failures() {
            for u in 0..15 {
                for v in 0..15 {
                    if let Ok(rd) = g.replacement_distance(u, v, f) {
                        assert!(rd >= d.get(u, v));
                        // avoiding in place agrees with materialising G - f
                        assert_eq!(rd, g.remove_failure(f).unwrap().dijkstra(u)[v]);
                    }
                }
            }
        }
    }

    #[test]
    fn failure_tokens() {
        assert_eq!(Failure::Edge(0, 1).to_string(), "E1-2");
        assert_eq!(Failure::Vertex(2).to_string(), "V3");
    }
}
