//! Untruncated oracle: a truncated core at radius `r = ceil(M n^alpha)`
//! answers everything shorter than `r`, and an exact replacement-path
//! search answers the rest.
//!
//! Only answer semantics are reproduced here. The asymptotic preprocessing
//! and worst-case query bounds of a fully algebraic construction are not.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::algebraic_dso::{DsoError, TruncatedDso};
use crate::consistent_spt::{Permutation, ShortestPathForests, SptConfig};
use crate::graph::{Distance, DistanceMatrix, Failure, WeightedDigraph, INF};
use crate::ring::Field;

pub const DEFAULT_ALPHA: f64 = 0.420645;

/// Rows kept by the fallback cache before it is flushed.
const CACHE_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullDsoConfig {
    pub alpha: f64,
    /// Overrides the radius computed from `alpha`.
    pub radius: Option<usize>,
    pub field: Field,
    pub seed: u64,
    pub spt: SptConfig,
}

impl Default for FullDsoConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            radius: None,
            field: Field::goldilocks(),
            seed: 0,
            spt: SptConfig::default(),
        }
    }
}

/// `ceil(M n^alpha)`, at least 1.
pub fn radius_for(n: usize, max_weight: u32, alpha: f64) -> usize {
    let r = (max_weight as f64 * (n as f64).powf(alpha)).ceil();
    (r as usize).max(1)
}

/// Result of a query answered by both routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifiedAnswer {
    /// What [`FullDso::query_full`] returns.
    pub answer: Distance,
    pub exact: Distance,
    /// The truncated core answered without the fallback.
    pub from_core: bool,
}

impl VerifiedAnswer {
    pub fn agrees(&self) -> bool {
        self.answer == self.exact
    }
}

pub struct FullDso {
    core: TruncatedDso,
    dist: DistanceMatrix,
    forests: ShortestPathForests,
    graph: WeightedDigraph,
    alpha: f64,
    fallbacks: AtomicU64,
    cache: Mutex<HashMap<(usize, Failure), Vec<Distance>>>,
}

impl std::fmt::Debug for FullDso {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullDso")
            .field("n", &self.graph.n())
            .field("radius", &self.core.radius())
            .field("alpha", &self.alpha)
            .field("fallbacks", &self.fallback_count())
            .finish()
    }
}

impl FullDso {
    pub fn build(g: &WeightedDigraph, config: &FullDsoConfig) -> Result<Self, DsoError> {
        if !(0.0..=1.0).contains(&config.alpha) {
            return Err(DsoError::InvalidParameter(format!(
                "alpha {} is outside [0, 1]",
                config.alpha
            )));
        }
        let radius = match config.radius {
            Some(0) => return Err(DsoError::ZeroRadius),
            Some(r) => r,
            None => radius_for(g.n(), g.max_weight(), config.alpha),
        };
        let core = TruncatedDso::preprocess_in(g, radius, config.seed, config.field)?;
        let dist = g.apsp();
        let pi = Permutation::random(g.n(), permutation_seed(config.seed));
        let forests = ShortestPathForests::compute_with_distances(g, &dist, &pi, &config.spt);
        Ok(Self {
            core,
            dist,
            forests,
            graph: g.clone(),
            alpha: config.alpha,
            fallbacks: AtomicU64::new(0),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn radius(&self) -> usize {
        self.core.radius()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn core(&self) -> &TruncatedDso {
        &self.core
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    pub fn forests(&self) -> &ShortestPathForests {
        &self.forests
    }

    pub fn graph(&self) -> &WeightedDigraph {
        &self.graph
    }

    /// Queries that needed the exact fallback so far.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    /// Exact `||u v <> f||`, [`INF`] when `v` becomes unreachable.
    pub fn query_full(&self, u: usize, v: usize, f: Failure) -> Result<Distance, DsoError> {
        self.graph.check_query(u, v, f)?;
        let d = self.core.query(u, v, f)?;
        if d < self.radius() {
            return Ok(d as Distance);
        }
        // every finite distance is at most (n - 1) M
        let longest = (self.graph.n().saturating_sub(1) as u64) * self.graph.max_weight() as u64;
        if self.radius() as u64 > longest {
            return Ok(INF);
        }
        self.fallbacks.fetch_add(1, Ordering::Relaxed);
        Ok(self.exact(u, v, f))
    }

    /// Answers through the normal dispatch and also through the exact search.
    pub fn query_verified(
        &self,
        u: usize,
        v: usize,
        f: Failure,
    ) -> Result<VerifiedAnswer, DsoError> {
        let before = self.fallback_count();
        let answer = self.query_full(u, v, f)?;
        let from_core = self.fallback_count() == before;
        Ok(VerifiedAnswer {
            answer,
            exact: self.exact(u, v, f),
            from_core,
        })
    }

    fn exact(&self, u: usize, v: usize, f: Failure) -> Distance {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(row) = cache.get(&(u, f)) {
            return row[v];
        }
        let row = self.graph.dijkstra_avoiding(u, Some(f));
        let d = row[v];
        if cache.len() >= CACHE_ROWS {
            cache.clear();
        }
        cache.insert((u, f), row);
        d
    }
}

/// Keeps the permutation stream apart from the edge-variable stream.
fn permutation_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}
