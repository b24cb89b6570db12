//! The `r`-truncated distance sensitivity oracle.
//!
//! Preprocessing substitutes random field elements for the edge variables of
//! the symbolic adjacency matrix `SA` (`1` on the diagonal, `z_uv x^w` for an
//! edge of weight `w`), then stores `SA^{-1} mod x^r` and `det(SA) mod x^r`.
//! The lowest `x`-degree of an adjoint entry is the corresponding distance.
//! A failure is a rank-one change `SA + a b^T`, so the affected adjoint entry
//! follows from a constant number of ring operations on stored entries:
//!
//! ```text
//! adj(SA + a b^T)[u][v] = det(SA) * (gamma * SA^{-1}[u][v] - beta)
//! ```
//!
//! with `gamma = 1 + b^T SA^{-1} a` and `beta = (SA^{-1} a b^T SA^{-1})[u][v]`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Failure, GraphError, WeightedDigraph};
use crate::polymatrix::{MatrixError, PolyMatrix};
use crate::ring::{Field, FieldElement, RingError, TruncatedPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DsoError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `SA_Z(G)`: the symbolic adjacency matrix with every edge variable replaced
/// by a sampled field element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicAdjacency {
    matrix: PolyMatrix,
    z: BTreeMap<(usize, usize), FieldElement>,
    seed: u64,
}

impl SymbolicAdjacency {
    /// Samples one uniform `z_uv` per edge, in lexicographic edge order, from
    /// a ChaCha stream keyed by `seed`. Entries are reduced mod `x^order`.
    pub fn build(
        g: &WeightedDigraph,
        seed: u64,
        field: Field,
        order: usize,
    ) -> Result<Self, DsoError> {
        if order == 0 {
            return Err(DsoError::ZeroRadius);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = BTreeMap::new();
        for (u, v, _) in g.edges() {
            z.insert((u, v), field.element(rng.gen_range(0..field.modulus())));
        }
        let n = g.n();
        let matrix = PolyMatrix::from_fn(field, order, n, n, |i, j| {
            if i == j {
                TruncatedPoly::one(field, order)
            } else if let Some(w) = g.weight(i, j) {
                TruncatedPoly::monomial(field, order, z[&(i, j)].value(), w as usize)
            } else {
                TruncatedPoly::zero(field, order)
            }
        })?;
        Ok(Self { matrix, z, seed })
    }

    pub fn matrix(&self) -> &PolyMatrix {
        &self.matrix
    }

    pub fn z(&self, u: usize, v: usize) -> Option<FieldElement> {
        self.z.get(&(u, v)).copied()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn field(&self) -> Field {
        self.matrix.field()
    }
}

/// Stored state of the truncated oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedDso {
    inv: PolyMatrix,
    det: TruncatedPoly,
    sa: SymbolicAdjacency,
    radius: usize,
    n: usize,
    max_weight: u32,
    weights: BTreeMap<(usize, usize), u32>,
}

/// Intermediate values of one query, with the number of ring operations
/// spent computing them.
#[derive(Debug, Clone)]
pub struct QueryTrace {
    pub gamma: TruncatedPoly,
    pub beta: TruncatedPoly,
    pub alpha: TruncatedPoly,
    pub ring_ops: usize,
}

impl TruncatedDso {
    /// Preprocesses over the default 64-bit field.
    pub fn preprocess(g: &WeightedDigraph, radius: usize, seed: u64) -> Result<Self, DsoError> {
        Self::preprocess_in(g, radius, seed, Field::goldilocks())
    }

    pub fn preprocess_in(
        g: &WeightedDigraph,
        radius: usize,
        seed: u64,
        field: Field,
    ) -> Result<Self, DsoError> {
        if radius == 0 {
            return Err(DsoError::ZeroRadius);
        }
        let sa = SymbolicAdjacency::build(g, seed, field, radius)?;
        let inv = sa.matrix.invert_mod_xr()?;
        let det = sa.matrix.det_mod_xr()?;
        debug_assert_eq!(det.coeff(0), 1, "det(I + xM) has constant term 1");
        Ok(Self {
            inv,
            det,
            sa,
            radius,
            n: g.n(),
            max_weight: g.max_weight(),
            weights: g.edges().map(|(u, v, w)| ((u, v), w)).collect(),
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    pub fn inverse(&self) -> &PolyMatrix {
        &self.inv
    }

    pub fn determinant(&self) -> &TruncatedPoly {
        &self.det
    }

    pub fn adjacency(&self) -> &SymbolicAdjacency {
        &self.sa
    }

    fn clip(&self, p: &TruncatedPoly) -> usize {
        p.deg_star().unwrap_or(self.radius)
    }

    fn check_vertex(&self, x: usize) -> Result<(), DsoError> {
        if x >= self.n {
            return Err(GraphError::VertexOutOfRange(x).into());
        }
        Ok(())
    }

    /// `min(dist(u, v), r)`, read off the adjoint `det * SA^{-1}`.
    pub fn truncated_distance(&self, u: usize, v: usize) -> Result<usize, DsoError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(self.clip(&self.det.mul_unchecked(self.inv.get(u, v))))
    }

    /// Adjoint entry `(u, v)` of `SA` with edge `a -> b` removed.
    pub fn edge_failure_trace(
        &self,
        u: usize,
        v: usize,
        a: usize,
        b: usize,
    ) -> Result<QueryTrace, DsoError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let l = *self
            .weights
            .get(&(a, b))
            .ok_or(GraphError::MissingEdge(a, b))? as usize;
        let z = self.sa.z(a, b).expect("every edge has a sample").value();
        let f = self.sa.field();
        let r = self.radius;
        let one = TruncatedPoly::one(f, r);
        let inv = &self.inv;
        let mut ops = 0;

        // gamma = 1 - z x^l inv[b][a]
        let gamma = one.sub_unchecked(&inv.get(b, a).shift(l).scale(z));
        ops += 2;
        // beta = -inv[u][a] z inv[b][v] x^l
        let beta = inv
            .get(u, a)
            .mul_unchecked(inv.get(b, v))
            .shift(l)
            .scale(f.neg(z));
        ops += 2;
        // alpha = det (gamma inv[u][v] - beta)
        let inner = gamma.mul_unchecked(inv.get(u, v)).sub_unchecked(&beta);
        ops += 2;
        let alpha = self.det.mul_unchecked(&inner);
        ops += 1;
        debug_assert_eq!(gamma.coeff(0), 1);
        Ok(QueryTrace {
            gamma,
            beta,
            alpha,
            ring_ops: ops,
        })
    }

    /// Adjoint entry `(u, v)` of `SA` with every outgoing edge of `f` removed.
    pub fn vertex_failure_trace(
        &self,
        u: usize,
        v: usize,
        fv: usize,
    ) -> Result<QueryTrace, DsoError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        self.check_vertex(fv)?;
        if fv == u || fv == v {
            return Err(GraphError::InvalidQuery(format!(
                "failed vertex {} is an endpoint",
                fv + 1
            ))
            .into());
        }
        let inv = &self.inv;
        let mut ops = 0;
        let gamma = inv.get(fv, fv).clone();
        let beta = inv.get(u, fv).mul_unchecked(inv.get(fv, v));
        ops += 1;
        let inner = gamma.mul_unchecked(inv.get(u, v)).sub_unchecked(&beta);
        ops += 2;
        let alpha = self.det.mul_unchecked(&inner);
        ops += 1;
        debug_assert_eq!(gamma.coeff(0), 1);
        Ok(QueryTrace {
            gamma,
            beta,
            alpha,
            ring_ops: ops,
        })
    }

    /// `min(||u v <> e||, r)` for the failed edge `a -> b`.
    pub fn query_edge_failure(
        &self,
        u: usize,
        v: usize,
        a: usize,
        b: usize,
    ) -> Result<usize, DsoError> {
        Ok(self.clip(&self.edge_failure_trace(u, v, a, b)?.alpha))
    }

    /// `min(||u v <> f||, r)` for the failed vertex `f`.
    pub fn query_vertex_failure(&self, u: usize, v: usize, f: usize) -> Result<usize, DsoError> {
        Ok(self.clip(&self.vertex_failure_trace(u, v, f)?.alpha))
    }

    pub fn query(&self, u: usize, v: usize, f: Failure) -> Result<usize, DsoError> {
        match f {
            Failure::Edge(a, b) => self.query_edge_failure(u, v, a, b),
            Failure::Vertex(x) => self.query_vertex_failure(u, v, x),
        }
    }
}
