//! Exact arithmetic over the prime field F_p.
//!
//! Scalars are plain `u32` residues in `[0, p)`. The modulus lives on the
//! enclosing [`PrimeField`], [`FpVector`] or [`FpMatrix`], never on the
//! individual entries; combining values over different moduli is an error.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A residue in `[0, p)`. The modulus is carried by the surrounding context.
pub type FpScalar = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("entry {value} is not reduced modulo {p}")]
    EntryOutOfRange { value: u64, p: u32 },
    #[error("expected {expected} entries, found {found}")]
    BadLength { expected: usize, found: usize },
    #[error("matrix minus identity is not nilpotent (A is not unipotent)")]
    NotNilpotent,
    #[error("binomial degree {i} must be below p = {p}")]
    BinomialDegree { i: u64, p: u32 },
    #[error("matrix is singular")]
    Singular,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Deterministic trial-division primality test; moduli here are small.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut f = 3u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Distinct prime factors of `n`, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Arithmetic context for F_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(LinalgError::NotPrime(p as u64));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> FpScalar {
        (x % self.p as u64) as u32
    }

    /// Reduces a signed integer into `[0, p)`.
    #[inline]
    pub fn from_i64(&self, x: i64) -> FpScalar {
        x.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: FpScalar, b: FpScalar) -> FpScalar {
        let s = a as u64 + b as u64;
        if s >= self.p as u64 {
            (s - self.p as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(&self, a: FpScalar, b: FpScalar) -> FpScalar {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.p as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn neg(&self, a: FpScalar) -> FpScalar {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: FpScalar, b: FpScalar) -> FpScalar {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, base: FpScalar, mut e: u64) -> FpScalar {
        let mut acc = 1 % self.p;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(&self, a: FpScalar) -> Option<FpScalar> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p as u64 - 2))
        }
    }

    /// `n!` reduced mod p.
    pub fn factorial(&self, n: u64) -> FpScalar {
        (1..=n).fold(1 % self.p, |acc, j| self.mul(acc, self.reduce(j)))
    }

    /// Multiplicative order of a nonzero scalar.
    pub fn scalar_order(&self, a: FpScalar) -> Option<u64> {
        if a.is_multiple_of(self.p) {
            return None;
        }
        let mut x = a;
        let mut n = 1u64;
        while x != 1 {
            x = self.mul(x, a);
            n += 1;
        }
        Some(n)
    }

    /// Smallest primitive root modulo p.
    pub fn primitive_root(&self) -> FpScalar {
        if self.p == 2 {
            return 1;
        }
        let order = self.p as u64 - 1;
        let factors = prime_factors(order);
        (2..self.p)
            .find(|&g| factors.iter().all(|&q| self.pow(g, order / q) != 1))
            .expect("every prime field has a primitive root")
    }

    /// Evaluates `x (x-1) ... (x-i+1) / i!` in F_p.
    pub fn binom(&self, x: FpScalar, i: u64) -> Result<FpScalar> {
        if i >= self.p as u64 {
            return Err(LinalgError::BinomialDegree { i, p: self.p });
        }
        let x = x % self.p;
        let mut num = 1 % self.p;
        for j in 0..i {
            num = self.mul(num, self.sub(x, self.reduce(j)));
        }
        let den = self.factorial(i);
        Ok(self.mul(num, self.inv(den).expect("i! is a unit for i < p")))
    }
}

/// `binom_mod_p`: the binomial coefficient polynomial of degree `i`, evaluated at `x`.
pub fn binom_mod_p(field: PrimeField, x: FpScalar, i: u64) -> Result<FpScalar> {
    field.binom(x, i)
}

/// Row vector over F_p.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FpVector {
    p: u32,
    coords: Vec<FpScalar>,
}

impl FpVector {
    pub fn new(field: PrimeField, coords: Vec<FpScalar>) -> Result<Self> {
        let p = field.modulus();
        if let Some(&bad) = coords.iter().find(|&&c| c >= p) {
            return Err(LinalgError::EntryOutOfRange { value: bad as u64, p });
        }
        Ok(Self { p, coords })
    }

    /// Builds a vector from arbitrary integers, reducing each entry.
    pub fn from_ints(field: PrimeField, coords: &[i64]) -> Self {
        Self {
            p: field.modulus(),
            coords: coords.iter().map(|&c| field.from_i64(c)).collect(),
        }
    }

    pub fn zero(field: PrimeField, dim: usize) -> Self {
        Self { p: field.modulus(), coords: vec![0; dim] }
    }

    pub fn unit(field: PrimeField, dim: usize, i: usize) -> Self {
        let mut v = Self::zero(field, dim);
        v.coords[i] = 1 % field.modulus();
        v
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { p: self.p }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[FpScalar] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<FpScalar> {
        self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    fn check(&self, other: &FpVector) -> Result<()> {
        if self.p != other.p {
            return Err(LinalgError::ModulusMismatch { left: self.p, right: other.p });
        }
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &FpVector) -> Result<FpVector> {
        self.check(other)?;
        let f = self.field();
        let coords = self.coords.iter().zip(&other.coords).map(|(&a, &b)| f.add(a, b)).collect();
        Ok(FpVector { p: self.p, coords })
    }

    pub fn sub(&self, other: &FpVector) -> Result<FpVector> {
        self.check(other)?;
        let f = self.field();
        let coords = self.coords.iter().zip(&other.coords).map(|(&a, &b)| f.sub(a, b)).collect();
        Ok(FpVector { p: self.p, coords })
    }

    pub fn neg(&self) -> FpVector {
        let f = self.field();
        FpVector { p: self.p, coords: self.coords.iter().map(|&a| f.neg(a)).collect() }
    }

    pub fn scale(&self, c: FpScalar) -> FpVector {
        let f = self.field();
        let c = c % self.p;
        FpVector { p: self.p, coords: self.coords.iter().map(|&a| f.mul(a, c)).collect() }
    }

    /// Sum of a nonempty or empty list of vectors of dimension `dim`.
    pub fn sum<'a>(
        field: PrimeField,
        dim: usize,
        items: impl IntoIterator<Item = &'a FpVector>,
    ) -> Result<FpVector> {
        items.into_iter().try_fold(FpVector::zero(field, dim), |acc, v| acc.add(v))
    }
}

impl fmt::Display for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Square matrix over F_p, row-major. Vectors act on the left: `v ↦ v·A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FpMatrix {
    p: u32,
    dim: usize,
    entries: Vec<FpScalar>,
}

impl FpMatrix {
    pub fn new(field: PrimeField, dim: usize, entries: Vec<FpScalar>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(LinalgError::BadLength { expected: dim * dim, found: entries.len() });
        }
        let p = field.modulus();
        if let Some(&bad) = entries.iter().find(|&&c| c >= p) {
            return Err(LinalgError::EntryOutOfRange { value: bad as u64, p });
        }
        Ok(Self { p, dim, entries })
    }

    /// Builds a matrix from integer rows, reducing each entry.
    pub fn from_rows(field: PrimeField, rows: &[&[i64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::BadLength { expected: dim, found: row.len() });
            }
            entries.extend(row.iter().map(|&c| field.from_i64(c)));
        }
        Ok(Self { p: field.modulus(), dim, entries })
    }

    pub fn identity(field: PrimeField, dim: usize) -> Self {
        let mut m = Self::zero(field, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1 % field.modulus();
        }
        m
    }

    pub fn zero(field: PrimeField, dim: usize) -> Self {
        Self { p: field.modulus(), dim, entries: vec![0; dim * dim] }
    }

    pub fn diagonal(field: PrimeField, diag: &[FpScalar]) -> Self {
        let dim = diag.len();
        let mut m = Self::zero(field, dim);
        for (i, &c) in diag.iter().enumerate() {
            m.entries[i * dim + i] = c % field.modulus();
        }
        m
    }

    /// Upper-triangular Jordan block `I + N` with ones on the superdiagonal.
    pub fn jordan_block(field: PrimeField, dim: usize) -> Self {
        let mut m = Self::identity(field, dim);
        for i in 0..dim.saturating_sub(1) {
            m.entries[i * dim + i + 1] = 1 % field.modulus();
        }
        m
    }

    /// Block-diagonal matrix with the given blocks along the diagonal.
    pub fn block_diagonal(field: PrimeField, blocks: &[FpMatrix]) -> Self {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut m = Self::zero(field, dim);
        let mut off = 0;
        for b in blocks {
            for r in 0..b.dim {
                for c in 0..b.dim {
                    m.entries[(off + r) * dim + off + c] = b.get(r, c);
                }
            }
            off += b.dim;
        }
        m
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { p: self.p }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[FpScalar] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FpScalar {
        self.entries[r * self.dim + c]
    }

    pub fn row(&self, r: usize) -> &[FpScalar] {
        &self.entries[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<FpScalar>> {
        (0..self.dim).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&c| c == 0)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.field(), self.dim)
    }

    fn check(&self, other: &FpMatrix) -> Result<()> {
        if self.p != other.p {
            return Err(LinalgError::ModulusMismatch { left: self.p, right: other.p });
        }
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    pub fn mul(&self, other: &FpMatrix) -> Result<FpMatrix> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &FpMatrix) -> FpMatrix {
        let n = self.dim;
        let p = self.p as u64;
        let mut entries = vec![0u32; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0u64;
                for t in 0..n {
                    acc += self.entries[r * n + t] as u64 * other.entries[t * n + c] as u64;
                    if acc >= 1 << 62 {
                        acc %= p;
                    }
                }
                entries[r * n + c] = (acc % p) as u32;
            }
        }
        FpMatrix { p: self.p, dim: n, entries }
    }

    pub fn add(&self, other: &FpMatrix) -> Result<FpMatrix> {
        self.check(other)?;
        let f = self.field();
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| f.add(a, b)).collect();
        Ok(FpMatrix { p: self.p, dim: self.dim, entries })
    }

    pub fn sub(&self, other: &FpMatrix) -> Result<FpMatrix> {
        self.check(other)?;
        let f = self.field();
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| f.sub(a, b)).collect();
        Ok(FpMatrix { p: self.p, dim: self.dim, entries })
    }

    pub fn scale(&self, c: FpScalar) -> FpMatrix {
        let f = self.field();
        FpMatrix {
            p: self.p,
            dim: self.dim,
            entries: self.entries.iter().map(|&a| f.mul(a, c % self.p)).collect(),
        }
    }

    /// `A - Id`.
    pub fn minus_identity(&self) -> FpMatrix {
        self.sub(&Self::identity(self.field(), self.dim)).expect("same shape")
    }

    /// `A^x` by square-and-multiply; `A^0` is the identity.
    pub fn pow(&self, mut x: u64) -> FpMatrix {
        let mut acc = Self::identity(self.field(), self.dim);
        let mut base = self.clone();
        while x > 0 {
            if x & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            x >>= 1;
            if x > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        rank_of_rows(self.field(), self.rows())
    }

    pub fn inverse(&self) -> Result<FpMatrix> {
        let n = self.dim;
        let f = self.field();
        let mut a = self.rows();
        let mut inv = Self::identity(f, n).rows();
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r][col] != 0).ok_or(LinalgError::Singular)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let s = f.inv(a[col][col]).expect("nonzero pivot");
            for c in 0..n {
                a[col][c] = f.mul(a[col][c], s);
                inv[col][c] = f.mul(inv[col][c], s);
            }
            for r in 0..n {
                if r != col && a[r][col] != 0 {
                    let factor = a[r][col];
                    for c in 0..n {
                        a[r][c] = f.sub(a[r][c], f.mul(factor, a[col][c]));
                        inv[r][c] = f.sub(inv[r][c], f.mul(factor, inv[col][c]));
                    }
                }
            }
        }
        Ok(FpMatrix { p: self.p, dim: n, entries: inv.concat() })
    }
}

/// Rank of a list of row vectors (all of equal length) over F_p.
pub fn rank_of_rows(field: PrimeField, mut rows: Vec<Vec<FpScalar>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let s = field.inv(rows[rank][col]).expect("nonzero pivot");
        for c in col..ncols {
            rows[rank][c] = field.mul(rows[rank][c], s);
        }
        for r in rank + 1..rows.len() {
            let factor = rows[r][col];
            if factor != 0 {
                for c in col..ncols {
                    rows[r][c] = field.sub(rows[r][c], field.mul(factor, rows[rank][c]));
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `v·A` with the row-vector convention.
pub fn vec_act(v: &FpVector, a: &FpMatrix) -> Result<FpVector> {
    if v.p != a.p {
        return Err(LinalgError::ModulusMismatch { left: v.p, right: a.p });
    }
    if v.dim() != a.dim {
        return Err(LinalgError::DimensionMismatch { left: v.dim(), right: a.dim });
    }
    Ok(vec_act_unchecked(v, a))
}

pub(crate) fn vec_act_unchecked(v: &FpVector, a: &FpMatrix) -> FpVector {
    let n = a.dim;
    let p = a.p as u64;
    let coords = (0..n)
        .map(|c| {
            let acc: u64 = (0..n).map(|r| v.coords[r] as u64 * a.entries[r * n + c] as u64 % p).sum();
            (acc % p) as u32
        })
        .collect();
    FpVector { p: a.p, coords }
}

pub fn mat_mul(a: &FpMatrix, b: &FpMatrix) -> Result<FpMatrix> {
    a.mul(b)
}

pub fn mat_pow(a: &FpMatrix, x: u64) -> FpMatrix {
    a.pow(x)
}

/// Least `k ≥ 1` with `(A - Id)^k = 0`.
pub fn nilpotency_degree(a: &FpMatrix) -> Result<usize> {
    let n = a.minus_identity();
    let mut power = n.clone();
    for k in 1..=a.dim.max(1) {
        if power.is_zero() {
            return Ok(k);
        }
        power = power.mul_unchecked(&n);
    }
    Err(LinalgError::NotNilpotent)
}

/// Checks `A^x = Σ_{i<k} C(x, i) (A - Id)^i`, the truncated binomial expansion
/// of `(A - Id + Id)^x`.
pub fn binomial_expansion_check(a: &FpMatrix, x: u64, k: usize) -> bool {
    let f = a.field();
    let n = a.minus_identity();
    let xr = f.reduce(x);
    let mut rhs = FpMatrix::zero(f, a.dim);
    let mut n_power = FpMatrix::identity(f, a.dim);
    for i in 0..k {
        let Ok(c) = f.binom(xr, i as u64) else {
            return false;
        };
        rhs = rhs.add(&n_power.scale(c)).expect("same shape");
        n_power = n_power.mul_unchecked(&n);
    }
    a.pow(x) == rhs
}
