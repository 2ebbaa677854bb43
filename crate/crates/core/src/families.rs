//! Named instance families with known structure.

use std::fmt;

use thiserror::Error;

use crate::field::{prime_factors, FpMatrix, LinalgError, PrimeField};
use crate::group::{AffineInstance, GroupError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("unknown family {0:?}")]
    Unknown(String),
    #[error("bad parameters for {family}: {reason}")]
    BadParameters { family: &'static str, reason: String },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, FamilyError>;

/// A parametrised instance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `C_2 ≀ C_p` acting monomially on `F_p^p`.
    Wreath { p: u32 },
    /// `SL(d, p)` on its natural module.
    Sl { d: usize, p: u32 },
    /// `GL(d, p)` on its natural module.
    Gl { d: usize, p: u32 },
    /// `⟨C^index⟩` for a Singer cycle `C` of order `p^d - 1`.
    Singer { d: usize, p: u32, index: u64 },
    /// `SL(2, p)` acting on binary quadratic forms (`F_p^3`), p odd.
    SymSquare { p: u32 },
    /// The cyclic coordinate shift on `F_p^d`; reducible.
    CyclicShift { d: usize, p: u32 },
}

/// Properties an instance of a family is known to have.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub name: String,
    pub p: u32,
    pub d: usize,
    pub irreducible: bool,
    pub p_divides_order: bool,
    pub expected_order: Option<u64>,
    pub expected_diameter: Option<usize>,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Wreath { p } => write!(f, "wreath-c2-c{p}"),
            Family::Sl { d, p } => write!(f, "sl-{d}-{p}"),
            Family::Gl { d, p } => write!(f, "gl-{d}-{p}"),
            Family::Singer { d, p, index: 1 } => write!(f, "singer-{d}-{p}"),
            Family::Singer { d, p, index } => write!(f, "singer-{d}-{p}-pow{index}"),
            Family::SymSquare { p } => write!(f, "sym2-sl2-{p}"),
            Family::CyclicShift { d, p } => write!(f, "shift-{d}-{p}"),
        }
    }
}

fn field(family: &'static str, p: u32) -> Result<PrimeField> {
    PrimeField::new(p).map_err(|_| FamilyError::BadParameters {
        family,
        reason: format!("{p} is not prime"),
    })
}

fn bad(family: &'static str, reason: impl Into<String>) -> FamilyError {
    FamilyError::BadParameters { family, reason: reason.into() }
}

/// `|GL(d, p)|` or `|SL(d, p)|`, when it fits in `u64`.
fn linear_group_order(d: usize, p: u32, special: bool) -> Option<u64> {
    let p = p as u64;
    let mut order = p.checked_pow((d * (d - 1) / 2) as u32)?;
    let start = if special { 2 } else { 1 };
    for i in start..=d {
        order = order.checked_mul(p.checked_pow(i as u32)? - 1)?;
    }
    Some(order)
}

impl Family {
    /// Parses a family name and its integer parameters as used on the
    /// command line: `wreath P`, `sl D P`, `gl D P`, `singer D P [INDEX]`,
    /// `sym2 P`, `shift D P`.
    pub fn parse(name: &str, params: &[u64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(FamilyError::BadParameters {
                    family: "family",
                    reason: format!("{name} takes {n} parameters, got {}", params.len()),
                })
            }
        };
        match name {
            "wreath" => {
                want(1)?;
                Ok(Family::Wreath { p: params[0] as u32 })
            }
            "sl" => {
                want(2)?;
                Ok(Family::Sl { d: params[0] as usize, p: params[1] as u32 })
            }
            "gl" => {
                want(2)?;
                Ok(Family::Gl { d: params[0] as usize, p: params[1] as u32 })
            }
            "singer" => {
                if params.len() == 2 {
                    Ok(Family::Singer { d: params[0] as usize, p: params[1] as u32, index: 1 })
                } else {
                    want(3)?;
                    Ok(Family::Singer { d: params[0] as usize, p: params[1] as u32, index: params[2] })
                }
            }
            "sym2" => {
                want(1)?;
                Ok(Family::SymSquare { p: params[0] as u32 })
            }
            "shift" => {
                want(2)?;
                Ok(Family::CyclicShift { d: params[0] as usize, p: params[1] as u32 })
            }
            other => Err(FamilyError::Unknown(other.to_string())),
        }
    }

    pub fn instance(&self) -> Result<AffineInstance> {
        match *self {
            Family::Wreath { p } => wreath_c2_cp(p),
            Family::Sl { d, p } => sl_natural(d, p),
            Family::Gl { d, p } => gl_natural(d, p),
            Family::Singer { d, p, index } => singer_subgroup(d, p, index),
            Family::SymSquare { p } => sym_square(p),
            Family::CyclicShift { d, p } => cyclic_shift(d, p),
        }
    }

    pub fn spec(&self) -> FamilySpec {
        let (p, d, irreducible, p_divides_order, expected_order, expected_diameter) = match *self {
            Family::Wreath { p } => {
                let d = p as usize;
                (p, d, true, true, 2u64.checked_pow(p).map(|o| o * p as u64), Some(d * (d - 1) / 2))
            }
            Family::Sl { d, p } => (p, d, true, true, linear_group_order(d, p, true), Some(1)),
            Family::Gl { d, p } => (p, d, true, true, linear_group_order(d, p, false), Some(1)),
            Family::Singer { d, p, index } => {
                let order = (p as u64).checked_pow(d as u32).map(|n| (n - 1) / index);
                // The full Singer cycle is regular on nonzero vectors.
                (p, d, true, false, order, (index == 1).then_some(1))
            }
            Family::SymSquare { p } => {
                let p64 = p as u64;
                (p, 3, true, true, Some(p64 * (p64 * p64 - 1) / 2), None)
            }
            Family::CyclicShift { d, p } => (p, d, false, (d as u64).is_multiple_of(p as u64), Some(d as u64), None),
        };
        FamilySpec {
            name: self.to_string(),
            p,
            d,
            irreducible,
            p_divides_order,
            expected_order,
            expected_diameter,
        }
    }
}

/// `C_2 ≀ C_p` on `F_p^p`, generated by `diag(-1, 1, …, 1)` and the cyclic
/// coordinate permutation `e_i ↦ e_{i+1}`.
pub fn wreath_c2_cp(p: u32) -> Result<AffineInstance> {
    let f = field("wreath", p)?;
    if p == 2 {
        return Err(bad("wreath", "p must be odd"));
    }
    let d = p as usize;
    let mut flip = vec![1; d];
    flip[0] = p - 1;
    let flip = FpMatrix::diagonal(f, &flip);
    let cycle = permutation_cycle(f, d);
    Ok(AffineInstance::new(Family::Wreath { p }.to_string(), f, d, vec![flip, cycle])?)
}

fn permutation_cycle(f: PrimeField, d: usize) -> FpMatrix {
    let mut entries = vec![0; d * d];
    for i in 0..d {
        entries[i * d + (i + 1) % d] = 1;
    }
    FpMatrix::new(f, d, entries).expect("0/1 entries")
}

fn transvections(f: PrimeField, d: usize) -> Vec<FpMatrix> {
    let mut gens = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                let mut t = FpMatrix::identity(f, d).entries().to_vec();
                t[i * d + j] = 1;
                gens.push(FpMatrix::new(f, d, t).expect("reduced"));
            }
        }
    }
    gens
}

/// `SL(d, p)` generated by the elementary transvections `Id + E_ij`.
pub fn sl_natural(d: usize, p: u32) -> Result<AffineInstance> {
    let f = field("sl", p)?;
    if d < 2 {
        return Err(bad("sl", "d must be at least 2"));
    }
    Ok(AffineInstance::new(Family::Sl { d, p }.to_string(), f, d, transvections(f, d))?)
}

/// `GL(d, p)`: the `SL` generators and `diag(ω, 1, …, 1)` for a primitive root ω.
pub fn gl_natural(d: usize, p: u32) -> Result<AffineInstance> {
    let f = field("gl", p)?;
    if d < 1 {
        return Err(bad("gl", "d must be at least 1"));
    }
    let mut gens = transvections(f, d);
    let mut diag = vec![1; d];
    diag[0] = f.primitive_root();
    gens.push(FpMatrix::diagonal(f, &diag));
    Ok(AffineInstance::new(Family::Gl { d, p }.to_string(), f, d, gens)?)
}

/// Companion matrix (row convention) of `x^d + a_{d-1} x^{d-1} + … + a_0`:
/// `e_i ↦ e_{i+1}` and `e_{d-1} ↦ -(a_0, …, a_{d-1})`.
pub fn companion_matrix(f: PrimeField, coeffs: &[u32]) -> FpMatrix {
    let d = coeffs.len();
    let mut entries = vec![0; d * d];
    for i in 0..d - 1 {
        entries[i * d + i + 1] = 1;
    }
    for (j, &a) in coeffs.iter().enumerate() {
        entries[(d - 1) * d + j] = f.neg(a % f.modulus());
    }
    FpMatrix::new(f, d, entries).expect("reduced")
}

/// Whether `a` has multiplicative order exactly `n` (given its prime factors).
fn has_order(a: &FpMatrix, n: u64, factors: &[u64]) -> bool {
    a.pow(n).is_identity() && factors.iter().all(|&q| !a.pow(n / q).is_identity())
}

/// Companion matrix of the first primitive polynomial of degree `d` over
/// F_p. Candidates are ordered by the last matrix row `-(a_0, …, a_{d-1})`,
/// read as a number with `-a_0` least significant.
pub fn singer_cycle(d: usize, p: u32) -> Result<FpMatrix> {
    let f = field("singer", p)?;
    if d < 1 {
        return Err(bad("singer", "d must be at least 1"));
    }
    let order = (p as u64)
        .checked_pow(d as u32)
        .ok_or_else(|| bad("singer", "p^d overflows"))?
        - 1;
    let factors = prime_factors(order);
    let total = (p as u64).checked_pow(d as u32).unwrap();
    for code in 0..total {
        let mut coeffs = vec![0u32; d];
        let mut c = code;
        for slot in coeffs.iter_mut() {
            *slot = f.neg((c % p as u64) as u32);
            c /= p as u64;
        }
        if coeffs[0] == 0 {
            continue;
        }
        let m = companion_matrix(f, &coeffs);
        if has_order(&m, order, &factors) {
            return Ok(m);
        }
    }
    Err(bad("singer", "no primitive polynomial found"))
}

/// The full Singer cycle group of order `p^d - 1`; p never divides its order.
pub fn singer_control(d: usize, p: u32) -> Result<AffineInstance> {
    singer_subgroup(d, p, 1)
}

/// `⟨C^index⟩` for a Singer cycle `C`. `index` must divide `p^d - 1`, and
/// the subgroup must still act irreducibly, i.e. its order must not divide
/// `p^e - 1` for a proper divisor `e` of `d`.
pub fn singer_subgroup(d: usize, p: u32, index: u64) -> Result<AffineInstance> {
    let f = field("singer", p)?;
    let c = singer_cycle(d, p)?;
    let full = (p as u64).pow(d as u32) - 1;
    if index == 0 || !full.is_multiple_of(index) {
        return Err(bad("singer", format!("index {index} does not divide {full}")));
    }
    let order = full / index;
    for e in (1..d).filter(|&e| d.is_multiple_of(e)) {
        if ((p as u64).pow(e as u32) - 1).is_multiple_of(order) {
            return Err(bad("singer", format!("subgroup of order {order} lies in a subfield")));
        }
    }
    let label = Family::Singer { d, p, index }.to_string();
    Ok(AffineInstance::new(label, f, d, vec![c.pow(index)])?)
}

/// Image of `[[a, b], [c, d]]` on the basis `x², xy, y²` of binary
/// quadratic forms under `x ↦ a x + b y`, `y ↦ c x + d y`.
fn sym_square_matrix(f: PrimeField, g: [[u32; 2]; 2]) -> FpMatrix {
    let [[a, b], [c, d]] = g;
    let m = |x, y| f.mul(x, y);
    let two = 2 % f.modulus();
    let rows = [
        [m(a, a), m(two, m(a, b)), m(b, b)],
        [m(a, c), f.add(m(a, d), m(b, c)), m(b, d)],
        [m(c, c), m(two, m(c, d)), m(d, d)],
    ];
    FpMatrix::new(f, 3, rows.concat()).expect("reduced")
}

/// `SL(2, p)` on binary quadratic forms, an irreducible 3-dimensional group
/// of order `p(p² - 1)/2` whose order-p elements are single Jordan blocks.
pub fn sym_square(p: u32) -> Result<AffineInstance> {
    let f = field("sym2", p)?;
    if p == 2 {
        return Err(bad("sym2", "p must be odd"));
    }
    let gens = vec![sym_square_matrix(f, [[1, 1], [0, 1]]), sym_square_matrix(f, [[1, 0], [1, 1]])];
    Ok(AffineInstance::new(Family::SymSquare { p }.to_string(), f, 3, gens)?)
}

/// Cyclic permutation of the `d` coordinates. Fixes the all-ones vector, so
/// it is reducible; a negative control for irreducibility.
pub fn cyclic_shift(d: usize, p: u32) -> Result<AffineInstance> {
    let f = field("shift", p)?;
    if d < 2 {
        return Err(bad("shift", "d must be at least 2"));
    }
    Ok(AffineInstance::new(Family::CyclicShift { d, p }.to_string(), f, d, vec![permutation_cycle(f, d)])?)
}
