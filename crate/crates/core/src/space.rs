//! Integer indexing of V = F_p^d.
//!
//! A vector `v` is interned as `Σ v_i · p^i`, so coordinate 0 is the least
//! significant digit. Indices live in `[0, p^d)`.

use thiserror::Error;

use crate::field::{FpMatrix, FpScalar, FpVector, PrimeField};

/// Largest `p^d` accepted. Index-addressed bitmaps and orbit tables over V
/// must fit in memory, and indices must fit in `u32`.
pub const MAX_SPACE_SIZE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("p^d = {p}^{d} exceeds the supported index space of {max} vectors")]
    TooLarge { p: u32, d: usize, max: u64 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSpace {
    field: PrimeField,
    dim: usize,
    size: usize,
    place: Vec<usize>,
}

impl VectorSpace {
    pub fn new(field: PrimeField, dim: usize) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        let p = field.modulus();
        let size = (p as u64)
            .checked_pow(dim as u32)
            .filter(|&s| s <= MAX_SPACE_SIZE)
            .ok_or(SpaceError::TooLarge { p, d: dim, max: MAX_SPACE_SIZE })?;
        let mut place = Vec::with_capacity(dim);
        let mut w = 1usize;
        for _ in 0..dim {
            place.push(w);
            w = w.saturating_mul(p as usize);
        }
        Ok(Self { field, dim, size: size as usize, place })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u32 {
        self.field.modulus()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `p^d`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Place values `p^i`.
    pub fn place_values(&self) -> &[usize] {
        &self.place
    }

    #[inline]
    pub fn encode_coords(&self, coords: &[FpScalar]) -> usize {
        coords.iter().zip(&self.place).map(|(&c, &w)| c as usize * w).sum()
    }

    pub fn encode(&self, v: &FpVector) -> usize {
        self.encode_coords(v.coords())
    }

    #[inline]
    pub fn decode_into(&self, mut idx: usize, out: &mut [FpScalar]) {
        let p = self.p() as usize;
        for c in out.iter_mut() {
            *c = (idx % p) as FpScalar;
            idx /= p;
        }
    }

    pub fn decode(&self, idx: usize) -> FpVector {
        let mut coords = vec![0; self.dim];
        self.decode_into(idx, &mut coords);
        FpVector::new(self.field, coords).expect("decoded digits are reduced")
    }

    /// Index of `decode(a) + decode(b)`.
    #[inline]
    pub fn add_indices(&self, mut a: usize, mut b: usize) -> usize {
        let p = self.p() as usize;
        let mut out = 0;
        for &w in &self.place {
            let mut s = a % p + b % p;
            if s >= p {
                s -= p;
            }
            out += s * w;
            a /= p;
            b /= p;
        }
        out
    }

    /// Index of `-decode(a)`.
    pub fn neg_index(&self, mut a: usize) -> usize {
        let p = self.p() as usize;
        let mut out = 0;
        for &w in &self.place {
            let c = a % p;
            if c != 0 {
                out += (p - c) * w;
            }
            a /= p;
        }
        out
    }

    /// Index of `decode(idx)·A`.
    pub fn act_index(&self, idx: usize, a: &FpMatrix, scratch: &mut [FpScalar]) -> usize {
        self.decode_into(idx, scratch);
        let n = self.dim;
        let p = self.p() as u64;
        let entries = a.entries();
        let mut out = 0;
        for c in 0..n {
            let mut acc = 0u64;
            for (r, &x) in scratch.iter().enumerate() {
                acc += x as u64 * entries[r * n + c] as u64;
            }
            out += (acc % p) as usize * self.place[c];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::vec_act;

    #[test]
    fn encode_decode_roundtrip() {
        let s = VectorSpace::new(PrimeField::new(5).unwrap(), 3).unwrap();
        assert_eq!(s.size(), 125);
        for idx in 0..s.size() {
            assert_eq!(s.encode(&s.decode(idx)), idx);
        }
        let v = FpVector::from_ints(s.field(), &[1, 2, 3]);
        assert_eq!(s.encode(&v), 1 + 2 * 5 + 3 * 25);
    }

    #[test]
    fn index_arithmetic_matches_vectors() {
        let s = VectorSpace::new(PrimeField::new(3).unwrap(), 3).unwrap();
        let a = FpMatrix::from_rows(s.field(), &[&[0, 1, 2], &[1, 1, 0], &[2, 0, 1]]).unwrap();
        let mut scratch = vec![0; 3];
        for i in 0..s.size() {
            let vi = s.decode(i);
            assert_eq!(s.decode(s.neg_index(i)), vi.neg());
            assert_eq!(s.decode(s.act_index(i, &a, &mut scratch)), vec_act(&vi, &a).unwrap());
            for j in 0..s.size() {
                assert_eq!(s.decode(s.add_indices(i, j)), vi.add(&s.decode(j)).unwrap());
            }
        }
    }

    #[test]
    fn rejects_oversized_space() {
        let f = PrimeField::new(101).unwrap();
        assert!(matches!(VectorSpace::new(f, 6), Err(SpaceError::TooLarge { .. })));
        assert!(VectorSpace::new(f, 4).is_ok());
        assert_eq!(VectorSpace::new(f, 0), Err(SpaceError::ZeroDimension));
    }
}
