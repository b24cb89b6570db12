//! Dense matrices over `Z_p[x] / <x^r>`.
//!
//! Inversion modulo `x^r` uses Newton iteration on top of a constant-term
//! inverse; [`PolyMatrix::invert_gauss`] is an independent elimination route
//! kept as a cross-check. [`PolyMatrix::matmul_degree_aware`] multiplies by
//! bucketing columns by their (shifted) column degrees and splitting the high
//! degree buckets into slabs, so each partial product only touches operands
//! of comparable degree.

use thiserror::Error;

use crate::ring::{ntt, ntt_length, Field, RingError, TruncatedPoly};

/// Matrix products transform each entry once and reuse it across a whole
/// row or column, so the evaluation domain pays off much earlier than for a
/// single product.
const MATRIX_NTT_THRESHOLD: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix dimensions must be at least 1")]
    EmptyDimension,
    #[error("shift has length {got}, expected {expected}")]
    ShiftLength { expected: usize, got: usize },
    #[error("shift {shift} at position {index} is below the column degree {degree}")]
    ShiftViolation {
        index: usize,
        shift: i64,
        degree: i64,
    },
    #[error("constant-term matrix is singular; no inverse modulo x^r")]
    NotInvertible,
    #[error("determinant has zero constant term")]
    DetNotUnit,
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Integer shifts (or column degrees) indexed by row or column position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftVector(pub Vec<i64>);

impl ShiftVector {
    /// Column degree of an all-zero column.
    pub const NEG_INF: i64 = i64::MIN;

    pub fn zeros(len: usize) -> Self {
        ShiftVector(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    field: Field,
    order: usize,
    entries: Vec<TruncatedPoly>,
}

impl std::fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "PolyMatrix {}x{} mod x^{}",
            self.rows, self.cols, self.order
        )?;
        for i in 0..self.rows {
            let row: Vec<_> = (0..self.cols).map(|j| self.get(i, j).coeffs()).collect();
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

impl PolyMatrix {
    pub fn zeros(
        field: Field,
        order: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimension);
        }
        if order == 0 {
            return Err(RingError::ZeroOrder.into());
        }
        Ok(Self {
            rows,
            cols,
            field,
            order,
            entries: vec![TruncatedPoly::zero(field, order); rows * cols],
        })
    }

    pub fn identity(field: Field, order: usize, n: usize) -> Result<Self, MatrixError> {
        let mut m = Self::zeros(field, order, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = TruncatedPoly::one(field, order);
        }
        Ok(m)
    }

    /// Row-major entries; all must share `field` and `order`.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: Vec<TruncatedPoly>,
    ) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyDimension);
        }
        if entries.len() != rows * cols {
            return Err(MatrixError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let field = entries[0].field();
        let order = entries[0].order();
        for e in &entries {
            if e.field() != field {
                return Err(RingError::FieldMismatch(field.modulus(), e.field().modulus()).into());
            }
            if e.order() != order {
                return Err(RingError::OrderMismatch(order, e.order()).into());
            }
        }
        Ok(Self {
            rows,
            cols,
            field,
            order,
            entries,
        })
    }

    pub fn from_fn(
        field: Field,
        order: usize,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> TruncatedPoly,
    ) -> Result<Self, MatrixError> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                entries.push(e.with_order(order));
            }
        }
        let mut m = Self::from_entries(rows, cols, entries)?;
        if m.field != field {
            return Err(RingError::FieldMismatch(field.modulus(), m.field.modulus()).into());
        }
        m.order = order;
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &TruncatedPoly {
        &self.entries[i * self.cols + j]
    }

    /// Replaces an entry, re-truncating it to the matrix order.
    pub fn set(&mut self, i: usize, j: usize, value: TruncatedPoly) -> Result<(), MatrixError> {
        if value.field() != self.field {
            return Err(
                RingError::FieldMismatch(self.field.modulus(), value.field().modulus()).into(),
            );
        }
        self.entries[i * self.cols + j] = value.with_order(self.order);
        Ok(())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn with_order(&self, order: usize) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            field: self.field,
            order,
            entries: self.entries.iter().map(|e| e.with_order(order)).collect(),
        }
    }

    /// The matrix `F(0)` of constant terms, row-major.
    pub fn constant_terms(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.coeff(0)).collect()
    }

    fn same_ring(&self, other: &Self) -> Result<(), MatrixError> {
        if self.field != other.field {
            return Err(
                RingError::FieldMismatch(self.field.modulus(), other.field.modulus()).into(),
            );
        }
        if self.order != other.order {
            return Err(RingError::OrderMismatch(self.order, other.order).into());
        }
        Ok(())
    }

    fn check_product(&self, other: &Self) -> Result<(), MatrixError> {
        self.same_ring(other)?;
        if self.cols != other.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        self.same_ring(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::DimensionMismatch("addition".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add_unchecked(b))
            .collect();
        Ok(Self {
            entries,
            ..self.clone_shape()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MatrixError> {
        self.same_ring(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::DimensionMismatch("subtraction".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub_unchecked(b))
            .collect();
        Ok(Self {
            entries,
            ..self.clone_shape()
        })
    }

    fn clone_shape(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            field: self.field,
            order: self.order,
            entries: Vec::new(),
        }
    }

    /// Column degrees, optionally shifted by a per-row shift: entry `j` is
    /// `max_i (shift[i] + deg A[i][j])`, or [`ShiftVector::NEG_INF`] for a zero
    /// column.
    pub fn column_degree(&self, shift: Option<&ShiftVector>) -> Result<ShiftVector, MatrixError> {
        if let Some(s) = shift {
            if s.len() != self.rows {
                return Err(MatrixError::ShiftLength {
                    expected: self.rows,
                    got: s.len(),
                });
            }
        }
        let mut out = vec![ShiftVector::NEG_INF; self.cols];
        for (j, slot) in out.iter_mut().enumerate() {
            for i in 0..self.rows {
                if let Some(d) = self.get(i, j).degree() {
                    let s = shift.map_or(0, |s| s.0[i]);
                    *slot = (*slot).max(s + d as i64);
                }
            }
        }
        Ok(ShiftVector(out))
    }

    /// Classical triple loop over ring products.
    pub fn matmul_naive(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_product(other)?;
        let mut out = Self::zeros(self.field, self.order, self.rows, other.cols)?;
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = TruncatedPoly::zero(self.field, self.order);
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add_unchecked(&a.mul_unchecked(b));
                }
                out.entries[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Product that transforms every entry once and accumulates pointwise in
    /// the evaluation domain. Falls back to [`PolyMatrix::matmul_naive`] when
    /// entries are short or the field has no suitable roots of unity.
    pub fn matmul(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_product(other)?;
        let max_a = self
            .entries
            .iter()
            .map(|e| e.coeffs().len())
            .max()
            .unwrap_or(0);
        let max_b = other
            .entries
            .iter()
            .map(|e| e.coeffs().len())
            .max()
            .unwrap_or(0);
        let len = match ntt_length(&self.field, max_a, max_b) {
            Some(len) if max_a.min(max_b) > MATRIX_NTT_THRESHOLD => len,
            _ => return self.matmul_naive(other),
        };
        let f = self.field;
        let transform = |m: &Self| -> Vec<Option<Vec<u64>>> {
            m.entries
                .iter()
                .map(|e| {
                    if e.is_zero() {
                        None
                    } else {
                        let mut v = vec![0u64; len];
                        v[..e.coeffs().len()].copy_from_slice(e.coeffs());
                        ntt(&f, &mut v, false);
                        Some(v)
                    }
                })
                .collect()
        };
        let ta = transform(self);
        let tb = transform(other);
        let mut out = Self::zeros(f, self.order, self.rows, other.cols)?;
        let mut acc = vec![vec![0u64; len]; other.cols];
        let mut touched = vec![false; other.cols];
        for i in 0..self.rows {
            for row in acc.iter_mut() {
                row.iter_mut().for_each(|x| *x = 0);
            }
            touched.iter_mut().for_each(|t| *t = false);
            for k in 0..self.cols {
                let Some(a) = &ta[i * self.cols + k] else {
                    continue;
                };
                for j in 0..other.cols {
                    let Some(b) = &tb[k * other.cols + j] else {
                        continue;
                    };
                    touched[j] = true;
                    for ((c, &x), &y) in acc[j].iter_mut().zip(a).zip(b) {
                        *c = f.add(*c, f.mul(x, y));
                    }
                }
            }
            for j in 0..other.cols {
                if touched[j] {
                    let mut v = acc[j].clone();
                    ntt(&f, &mut v, true);
                    v.truncate(self.order);
                    out.entries[i * other.cols + j] = TruncatedPoly::from_raw(f, self.order, v);
                }
            }
        }
        Ok(out)
    }

    /// Product organised by degree buckets.
    ///
    /// `shift` must bound the column degrees of `self` entrywise. Columns of
    /// `other` are bucketed by `shift`-column degree into ranges
    /// `(2^c xi, 2^(c+1) xi]`, columns of `self` by column degree; for each
    /// pair of buckets `c' <= c` the block of `other` is cut into slabs of
    /// degree below `Delta = 2^(c'+1) xi`, the slabs are laid side by side and
    /// multiplied once, and the pieces are recombined with `x^(i Delta)`
    /// offsets. Pairs with `c' > c` are zero and skipped.
    pub fn matmul_degree_aware(
        &self,
        other: &Self,
        shift: &ShiftVector,
    ) -> Result<Self, MatrixError> {
        self.check_product(other)?;
        if shift.len() != self.cols {
            return Err(MatrixError::ShiftLength {
                expected: self.cols,
                got: shift.len(),
            });
        }
        let a_deg = self.column_degree(None)?;
        for (index, (&s, &d)) in shift.0.iter().zip(&a_deg.0).enumerate() {
            if d != ShiftVector::NEG_INF && s < d {
                return Err(MatrixError::ShiftViolation {
                    index,
                    shift: s,
                    degree: d,
                });
            }
        }
        let b_deg = other.column_degree(Some(shift))?;

        let q = self.cols as i64;
        let m = other.cols as i64;
        let sum_s: i64 = shift.0.iter().map(|&s| s.max(0)).sum();
        let sum_t: i64 = b_deg.0.iter().map(|&t| t.max(0)).sum();
        let xi = ceil_div(sum_s, q).max(ceil_div(sum_t, m)) + 1;

        let mut b_buckets: Vec<Vec<usize>> = Vec::new();
        for (k, &t) in b_deg.0.iter().enumerate() {
            if t == ShiftVector::NEG_INF {
                continue;
            }
            push_bucket(&mut b_buckets, bucket_of(t, xi), k);
        }
        let mut a_buckets: Vec<Vec<usize>> = Vec::new();
        for (j, &d) in a_deg.0.iter().enumerate() {
            if d == ShiftVector::NEG_INF {
                continue;
            }
            push_bucket(&mut a_buckets, bucket_of(d, xi), j);
        }

        let f = self.field;
        let order = self.order;
        let mut out = Self::zeros(f, order, self.rows, other.cols)?;
        for (c, b_cols) in b_buckets.iter().enumerate() {
            if b_cols.is_empty() {
                continue;
            }
            for (c_prime, a_cols) in a_buckets.iter().enumerate() {
                if a_cols.is_empty() {
                    continue;
                }
                if c_prime > c {
                    debug_assert!(a_cols
                        .iter()
                        .all(|&j| b_cols.iter().all(|&k| other.get(j, k).is_zero())));
                    continue;
                }
                let delta = (2i64 << c_prime).saturating_mul(xi).min(order as i64) as usize;
                let max_deg = a_cols
                    .iter()
                    .flat_map(|&j| b_cols.iter().map(move |&k| (j, k)))
                    .filter_map(|(j, k)| other.get(j, k).degree())
                    .max();
                let Some(max_deg) = max_deg else {
                    continue;
                };
                let slabs = max_deg / delta + 1;

                let a_sub = Self::from_fn(f, order, self.rows, a_cols.len(), |i, jj| {
                    self.get(i, a_cols[jj]).clone()
                })?;
                let width = b_cols.len();
                let b_hat = Self::from_fn(f, order, a_cols.len(), width * slabs, |jj, col| {
                    let (slab, kk) = (col / width, col % width);
                    let src = other.get(a_cols[jj], b_cols[kk]).coeffs();
                    let lo = (slab * delta).min(src.len());
                    let hi = ((slab + 1) * delta).min(src.len());
                    TruncatedPoly::from_raw(f, order, src[lo..hi].to_vec())
                })?;
                let c_hat = a_sub.matmul_naive(&b_hat)?;
                for i in 0..self.rows {
                    for (kk, &k) in b_cols.iter().enumerate() {
                        let mut acc = out.get(i, k).clone();
                        for slab in 0..slabs {
                            let piece = c_hat.get(i, slab * width + kk);
                            if !piece.is_zero() {
                                acc = acc.add_unchecked(&piece.shift(slab * delta));
                            }
                        }
                        out.entries[i * other.cols + k] = acc;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `F^{-1} mod x^r` by Newton iteration `X <- X (2I - F X)`, doubling the
    /// working precision from the constant-term inverse.
    pub fn invert_mod_xr(&self) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::DimensionMismatch(
                "inverse of a non-square matrix".into(),
            ));
        }
        let n = self.rows;
        let f = self.field;
        let base = invert_scalar_matrix(&f, n, &self.constant_terms())
            .ok_or(MatrixError::NotInvertible)?;
        let mut x = Self::from_fn(f, 1, n, n, |i, j| {
            TruncatedPoly::constant(f, 1, base[i * n + j])
        })?;
        let mut prec = 1usize;
        while prec < self.order {
            prec = (prec * 2).min(self.order);
            let fk = self.with_order(prec);
            let xk = x.with_order(prec);
            let fx = fk.matmul(&xk)?;
            let two_minus = Self::identity(f, prec, n)?
                .add(&Self::identity(f, prec, n)?)?
                .sub(&fx)?;
            x = xk.matmul(&two_minus)?;
        }
        Ok(x.with_order(self.order))
    }

    /// Gauss-Jordan elimination over the truncated ring, pivoting on entries
    /// with a nonzero constant term.
    pub fn invert_gauss(&self) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::DimensionMismatch(
                "inverse of a non-square matrix".into(),
            ));
        }
        let n = self.rows;
        let f = self.field;
        let mut a: Vec<Vec<TruncatedPoly>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut inv: Vec<Vec<TruncatedPoly>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            TruncatedPoly::one(f, self.order)
                        } else {
                            TruncatedPoly::zero(f, self.order)
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| a[r][col].coeff(0) != 0)
                .ok_or(MatrixError::NotInvertible)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p_inv = a[col][col].inv()?;
            for j in 0..n {
                a[col][j] = a[col][j].mul_unchecked(&p_inv);
                inv[col][j] = inv[col][j].mul_unchecked(&p_inv);
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].clone();
                for j in 0..n {
                    let t = factor.mul_unchecked(&a[col][j]);
                    a[r][j] = a[r][j].sub_unchecked(&t);
                    let t = factor.mul_unchecked(&inv[col][j]);
                    inv[r][j] = inv[r][j].sub_unchecked(&t);
                }
            }
        }
        Self::from_entries(n, n, inv.into_iter().flatten().collect())
    }

    /// `det(F) mod x^r` as the signed product of unit pivots met during
    /// elimination.
    pub fn det_mod_xr(&self) -> Result<TruncatedPoly, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::DimensionMismatch(
                "determinant of a non-square matrix".into(),
            ));
        }
        let n = self.rows;
        let f = self.field;
        let mut a: Vec<Vec<TruncatedPoly>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut det = TruncatedPoly::one(f, self.order);
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| a[r][col].coeff(0) != 0) else {
                let rest_zero = (col..n).all(|r| (col..n).all(|c| a[r][c].is_zero()));
                return if rest_zero {
                    Ok(TruncatedPoly::zero(f, self.order))
                } else {
                    Err(MatrixError::DetNotUnit)
                };
            };
            if pivot != col {
                a.swap(col, pivot);
                det = det.neg();
            }
            det = det.mul_unchecked(&a[col][col]);
            let p_inv = a[col][col].inv()?;
            for r in col + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].mul_unchecked(&p_inv);
                let (upper, lower) = a.split_at_mut(r);
                for (x, y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x = x.sub_unchecked(&factor.mul_unchecked(y));
                }
            }
        }
        Ok(det)
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    if b <= 0 {
        0
    } else {
        (a + b - 1).div_euclid(b)
    }
}

/// 0 for `value <= 2 xi`, otherwise the `c` with `value` in `(2^c xi, 2^(c+1) xi]`.
fn bucket_of(value: i64, xi: i64) -> usize {
    let mut c = 0usize;
    while value > (2i64 << c).saturating_mul(xi) {
        c += 1;
    }
    c
}

fn push_bucket(buckets: &mut Vec<Vec<usize>>, c: usize, idx: usize) {
    if buckets.len() <= c {
        buckets.resize_with(c + 1, Vec::new);
    }
    buckets[c].push(idx);
}

/// Inverse of an `n x n` matrix over `Z_p` with partial pivoting.
pub fn invert_scalar_matrix(f: &Field, n: usize, m: &[u64]) -> Option<Vec<u64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0u64; n * n];
    for i in 0..n {
        inv[i * n + i] = 1;
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r * n + col] != 0)?;
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let p_inv = f.inv(a[col * n + col])?;
        for j in 0..n {
            a[col * n + j] = f.mul(a[col * n + j], p_inv);
            inv[col * n + j] = f.mul(inv[col * n + j], p_inv);
        }
        for r in 0..n {
            let factor = a[r * n + col];
            if r == col || factor == 0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] = f.sub(a[r * n + j], f.mul(factor, a[col * n + j]));
                inv[r * n + j] = f.sub(inv[r * n + j], f.mul(factor, inv[col * n + j]));
            }
        }
    }
    Some(inv)
}
