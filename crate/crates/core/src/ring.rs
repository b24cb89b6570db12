//! Prime-field arithmetic and the truncated polynomial ring `Z_p[x] / <x^r>`.
//!
//! Coefficients are stored as canonical `u64` residues. The default modulus is
//! the 64-bit prime `2^64 - 2^32 + 1`, which has a fast reduction and roots of
//! unity of every power-of-two order up to `2^32`, so products of long
//! polynomials go through a radix-2 number-theoretic transform.

use std::fmt;

use thiserror::Error;

/// `2^64 - 2^32 + 1`.
pub const GOLDILOCKS: u64 = 0xFFFF_FFFF_0000_0001;

const EPSILON: u64 = 0xFFFF_FFFF;

/// Below this operand length a single product uses schoolbook convolution.
pub const NTT_THRESHOLD: usize = 192;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("operands live in different fields: p = {0} vs p = {1}")]
    FieldMismatch(u64, u64),
    #[error("polynomial has zero constant term and is not a unit mod x^r")]
    NotAUnit,
    #[error("{0} is not an odd prime")]
    NotPrime(u64),
    #[error("truncation order must be at least 1")]
    ZeroOrder,
}

/// The prime field `Z_p`.
///
/// Small and `Copy`; every polynomial carries its own handle so that
/// operations never need an external context.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Field {
    p: u64,
    two_adicity: u32,
    /// Primitive `2^two_adicity`-th root of unity.
    root: u64,
    /// `2^128 mod p`, folded in when lazily accumulated products overflow.
    r128: u64,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field(p = {})", self.p)
    }
}

impl Default for Field {
    fn default() -> Self {
        Field::goldilocks()
    }
}

impl Field {
    /// Builds `Z_p` for an odd prime `p`.
    pub fn new(p: u64) -> Result<Field, RingError> {
        if p < 3 || !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        let two_adicity = (p - 1).trailing_zeros();
        let odd = (p - 1) >> two_adicity;
        let mut field = Field {
            p,
            two_adicity,
            root: 1,
            r128: 0,
        };
        let minus_one = p - 1;
        let mut g = 2u64;
        loop {
            let h = field.pow(g, odd);
            if field.pow(h, 1u64 << (two_adicity - 1)) == minus_one {
                field.root = h;
                break;
            }
            g += 1;
        }
        let two64 = ((1u128 << 64) % p as u128) as u64;
        field.r128 = field.mul(two64, two64);
        Ok(field)
    }

    pub fn goldilocks() -> Field {
        Field::new(GOLDILOCKS).expect("Goldilocks modulus is prime")
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Largest `k` such that transforms of length `2^k` exist.
    #[inline]
    pub fn two_adicity(&self) -> u32 {
        self.two_adicity
    }

    #[inline]
    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement(value % self.p)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let (s, carry) = a.overflowing_add(b);
        if carry || s >= self.p {
            s.wrapping_sub(self.p)
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.p)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    #[inline]
    fn reduce(&self, x: u128) -> u64 {
        if self.p == GOLDILOCKS {
            reduce_goldilocks(x)
        } else {
            (x % self.p as u128) as u64
        }
    }

    /// Reduces `carries * 2^128 + acc`.
    #[inline]
    fn reduce_wide(&self, acc: u128, carries: u64) -> u64 {
        let low = self.reduce(acc);
        if carries == 0 {
            low
        } else {
            self.add(low, self.mul(carries % self.p, self.r128))
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }

    /// Primitive root of unity of order `2^log_n`, if the field has one.
    pub fn root_of_unity(&self, log_n: u32) -> Option<u64> {
        if log_n > self.two_adicity {
            return None;
        }
        Some(self.pow(self.root, 1u64 << (self.two_adicity - log_n)))
    }
}

#[inline]
fn reduce_goldilocks(x: u128) -> u64 {
    let lo = x as u64;
    let hi = (x >> 64) as u64;
    let hi_hi = hi >> 32;
    let hi_lo = hi & EPSILON;
    let (mut t0, borrow) = lo.overflowing_sub(hi_hi);
    if borrow {
        t0 = t0.wrapping_sub(EPSILON);
    }
    let t1 = hi_lo * EPSILON;
    let (res, carry) = t0.overflowing_add(t1);
    let res = res.wrapping_add(EPSILON * carry as u64);
    if res >= GOLDILOCKS {
        res - GOLDILOCKS
    } else {
        res
    }
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A residue in `[0, p)`. The modulus is tracked by whoever owns the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(u64);

impl FieldElement {
    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// In-place radix-2 number-theoretic transform.
///
/// `values.len()` must be a power of two supported by the field. With
/// `inverse` set the output is scaled by `1/len`.
pub fn ntt(field: &Field, values: &mut [u64], inverse: bool) {
    let n = values.len();
    assert!(
        n.is_power_of_two(),
        "transform length must be a power of two"
    );
    if n == 1 {
        return;
    }
    let log_n = n.trailing_zeros();
    let mut root = field
        .root_of_unity(log_n)
        .expect("field lacks a root of unity of the requested order");
    if inverse {
        root = field.inv(root).expect("root of unity is nonzero");
    }

    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            values.swap(i, j);
        }
    }

    // twiddles[k] = root^(k * n / len) is read with stride; precompute the full table once
    let mut twiddles = Vec::with_capacity(n / 2);
    let mut t = 1u64;
    for _ in 0..n / 2 {
        twiddles.push(t);
        t = field.mul(t, root);
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = values[start + k];
                let b = field.mul(values[start + k + half], w);
                values[start + k] = field.add(a, b);
                values[start + k + half] = field.sub(a, b);
            }
        }
        len <<= 1;
    }

    if inverse {
        let n_inv = field.inv(n as u64 % field.p).expect("length is invertible");
        for v in values.iter_mut() {
            *v = field.mul(*v, n_inv);
        }
    }
}

/// Transform length needed for a product of operands with `len_a` and
/// `len_b` coefficients, or `None` when the field cannot support it.
pub fn ntt_length(field: &Field, len_a: usize, len_b: usize) -> Option<usize> {
    let needed = (len_a + len_b).saturating_sub(1).max(1).next_power_of_two();
    if needed.trailing_zeros() <= field.two_adicity() {
        Some(needed)
    } else {
        None
    }
}

/// Truncated schoolbook convolution with lazy reduction of the inner sums.
fn convolve_schoolbook(field: &Field, a: &[u64], b: &[u64], order: usize) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = (a.len() + b.len() - 1).min(order);
    let mut out = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let lo = k.saturating_sub(b.len() - 1);
        let hi = k.min(a.len() - 1);
        let mut acc = 0u128;
        let mut carries = 0u64;
        for i in lo..=hi {
            let (s, c) = acc.overflowing_add(a[i] as u128 * b[k - i] as u128);
            acc = s;
            carries += c as u64;
        }
        out.push(field.reduce_wide(acc, carries));
    }
    out
}

fn convolve_ntt(field: &Field, a: &[u64], b: &[u64], order: usize, len: usize) -> Vec<u64> {
    let mut fa = vec![0u64; len];
    let mut fb = vec![0u64; len];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    ntt(field, &mut fa, false);
    ntt(field, &mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = field.mul(*x, *y);
    }
    ntt(field, &mut fa, true);
    fa.truncate((a.len() + b.len() - 1).min(order));
    fa
}

/// Element of `Z_p[x] / <x^order>`.
///
/// Coefficients are kept trimmed (no trailing zeros), so structural equality
/// is ring equality.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedPoly {
    field: Field,
    order: usize,
    coeffs: Vec<u64>,
}

impl fmt::Debug for TruncatedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] mod x^{}", self.order)
    }
}

impl TruncatedPoly {
    /// Builds a polynomial from low-to-high coefficients, reducing each
    /// modulo `p` and dropping everything at degree `order` or above.
    pub fn new(field: Field, order: usize, coeffs: &[u64]) -> Result<Self, RingError> {
        if order == 0 {
            return Err(RingError::ZeroOrder);
        }
        let coeffs = coeffs
            .iter()
            .take(order)
            .map(|&c| c % field.modulus())
            .collect();
        Ok(Self::from_raw(field, order, coeffs))
    }

    /// Like [`TruncatedPoly::new`] but with signed coefficients, handy in tests.
    pub fn from_signed(field: Field, order: usize, coeffs: &[i64]) -> Result<Self, RingError> {
        let p = field.modulus() as i128;
        let reduced: Vec<u64> = coeffs
            .iter()
            .map(|&c| (c as i128).rem_euclid(p) as u64)
            .collect();
        Self::new(field, order, &reduced)
    }

    pub fn zero(field: Field, order: usize) -> Self {
        assert!(order > 0, "truncation order must be at least 1");
        Self {
            field,
            order,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(field: Field, order: usize, c: u64) -> Self {
        Self::from_raw(field, order, vec![c % field.modulus()])
    }

    pub fn one(field: Field, order: usize) -> Self {
        Self::constant(field, order, 1)
    }

    /// `c * x^degree`, zero if `degree >= order`.
    pub fn monomial(field: Field, order: usize, c: u64, degree: usize) -> Self {
        if degree >= order {
            return Self::zero(field, order);
        }
        let mut coeffs = vec![0u64; degree + 1];
        coeffs[degree] = c % field.modulus();
        Self::from_raw(field, order, coeffs)
    }

    /// Coefficients must already be canonical residues.
    pub(crate) fn from_raw(field: Field, order: usize, mut coeffs: Vec<u64>) -> Self {
        debug_assert!(order > 0);
        coeffs.truncate(order);
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self {
            field,
            order,
            coeffs,
        }
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Trimmed coefficients, lowest degree first.
    #[inline]
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Ordinary degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Lowest degree carrying a nonzero coefficient; `None` stands for `+inf`
    /// (the polynomial is zero mod `x^order`).
    pub fn deg_star(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    /// Reinterprets the polynomial modulo `x^order`, truncating or padding.
    pub fn with_order(&self, order: usize) -> Self {
        Self::from_raw(self.field, order, self.coeffs.clone())
    }

    fn check(&self, other: &Self) -> Result<(), RingError> {
        if self.field != other.field {
            return Err(RingError::FieldMismatch(
                self.field.modulus(),
                other.field.modulus(),
            ));
        }
        if self.order != other.order {
            return Err(RingError::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        Ok(self.sub_unchecked(other))
    }

    pub fn neg(&self) -> Self {
        let f = self.field;
        Self::from_raw(
            f,
            self.order,
            self.coeffs.iter().map(|&c| f.neg(c)).collect(),
        )
    }

    pub fn scale(&self, c: u64) -> Self {
        let f = self.field;
        let c = c % f.modulus();
        Self::from_raw(
            f,
            self.order,
            self.coeffs.iter().map(|&a| f.mul(a, c)).collect(),
        )
    }

    /// Multiplication by `x^k`, truncated.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() || k >= self.order {
            return Self::zero(self.field, self.order);
        }
        let mut coeffs = vec![0u64; k];
        coeffs.extend_from_slice(&self.coeffs);
        Self::from_raw(self.field, self.order, coeffs)
    }

    /// Product mod `x^order`; schoolbook for short operands, NTT otherwise.
    /// Both routes produce identical coefficients.
    pub fn mul(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    /// Product via truncated schoolbook convolution only.
    pub fn mul_schoolbook(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        let c = convolve_schoolbook(&self.field, &self.coeffs, &other.coeffs, self.order);
        Ok(Self::from_raw(self.field, self.order, c))
    }

    /// Product via NTT only; `None` if the field cannot host the transform.
    pub fn mul_ntt(&self, other: &Self) -> Result<Option<Self>, RingError> {
        self.check(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Some(Self::zero(self.field, self.order)));
        }
        let Some(len) = ntt_length(&self.field, self.coeffs.len(), other.coeffs.len()) else {
            return Ok(None);
        };
        let c = convolve_ntt(&self.field, &self.coeffs, &other.coeffs, self.order, len);
        Ok(Some(Self::from_raw(self.field, self.order, c)))
    }

    pub(crate) fn add_unchecked(&self, other: &Self) -> Self {
        let f = self.field;
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (&self.coeffs, &other.coeffs)
        } else {
            (&other.coeffs, &self.coeffs)
        };
        let mut out = long.clone();
        for (o, &s) in out.iter_mut().zip(short) {
            *o = f.add(*o, s);
        }
        Self::from_raw(f, self.order, out)
    }

    pub(crate) fn sub_unchecked(&self, other: &Self) -> Self {
        let f = self.field;
        let len = self.coeffs.len().max(other.coeffs.len());
        let out = (0..len)
            .map(|i| f.sub(self.coeff(i), other.coeff(i)))
            .collect();
        Self::from_raw(f, self.order, out)
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let (a, b) = (&self.coeffs, &other.coeffs);
        if a.is_empty() || b.is_empty() {
            return Self::zero(self.field, self.order);
        }
        let coeffs = match ntt_length(&self.field, a.len(), b.len()) {
            Some(len) if a.len().min(b.len()) > NTT_THRESHOLD => {
                convolve_ntt(&self.field, a, b, self.order, len)
            }
            _ => convolve_schoolbook(&self.field, a, b, self.order),
        };
        Self::from_raw(self.field, self.order, coeffs)
    }

    /// Inverse mod `x^order` by Newton iteration `b <- b (2 - a b)`.
    pub fn inv(&self) -> Result<Self, RingError> {
        let f = self.field;
        let c0 = f.inv(self.coeff(0)).ok_or(RingError::NotAUnit)?;
        let mut b = Self::constant(f, 1, c0);
        let mut prec = 1usize;
        while prec < self.order {
            prec = (prec * 2).min(self.order);
            let a = self.with_order(prec);
            let b_ext = b.with_order(prec);
            let ab = a.mul_unchecked(&b_ext);
            let two_minus = Self::constant(f, prec, 2).sub_unchecked(&ab);
            b = b_ext.mul_unchecked(&two_minus);
        }
        Ok(b.with_order(self.order))
    }
}
