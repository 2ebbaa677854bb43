//! Simultaneous diagonal power-sum systems over F_p:
//!
//! ```text
//! x_1   + … + x_m   = b_1
//! x_1^2 + … + x_m^2 = b_2
//!   ⋮
//! x_1^k + … + x_m^k = b_k
//! ```
//!
//! The solver returns the lexicographically smallest solution in `F_p^m`.
//! That solution is nondecreasing and has as many leading zeros as possible,
//! so the search runs over the number `j` of nonzero entries in increasing
//! order, and for each `j` does a meet-in-the-middle over nondecreasing
//! tuples of nonzero residues.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::field::{FpScalar, PrimeField};

/// Default bound on the number of tuples visited by one search.
pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("search needs about {needed} tuple visits, budget is {budget}")]
    SearchBudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSumSystem {
    field: PrimeField,
    m: usize,
    rhs: Vec<FpScalar>,
}

impl PowerSumSystem {
    pub fn new(field: PrimeField, m: usize, rhs: Vec<FpScalar>) -> Result<Self> {
        if rhs.is_empty() {
            return Err(SolverError::InvalidSystem("at least one equation is required".into()));
        }
        if m == 0 {
            return Err(SolverError::InvalidSystem("at least one unknown is required".into()));
        }
        if let Some(&b) = rhs.iter().find(|&&b| b >= field.modulus()) {
            return Err(SolverError::InvalidSystem(format!("rhs entry {b} not reduced mod p")));
        }
        Ok(Self { field, m, rhs })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Number of equations.
    pub fn k(&self) -> usize {
        self.rhs.len()
    }

    /// Number of unknowns.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rhs(&self) -> &[FpScalar] {
        &self.rhs
    }

    pub fn is_solution(&self, values: &[FpScalar]) -> bool {
        values.len() == self.m && power_sums(self.field, values, self.k()) == self.rhs
    }
}

/// `(Σ x_j, Σ x_j^2, …, Σ x_j^k)`.
pub fn power_sums(field: PrimeField, values: &[FpScalar], k: usize) -> Vec<FpScalar> {
    let mut sums = vec![0; k];
    for &x in values {
        let mut power = 1 % field.modulus();
        for s in sums.iter_mut() {
            power = field.mul(power, x);
            *s = field.add(*s, power);
        }
    }
    sums
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PowerSumSolution {
    values: Vec<FpScalar>,
}

impl PowerSumSolution {
    pub fn values(&self) -> &[FpScalar] {
        &self.values
    }
}

/// Number of unknowns used for nilpotency degree `k`:
/// `max(1, ⌈4(k-1)·ln(k-1)⌉)`.
pub fn theorem_unknowns(k: usize) -> usize {
    if k <= 2 {
        return 1;
    }
    let t = (k - 1) as f64;
    ((4.0 * t * t.ln()).ceil() as usize).max(1)
}

/// The system `Σ x^i = 0` for `i < k-1` and `Σ x^(k-1) = α·(k-1)!`, with
/// [`theorem_unknowns`]`(k)` unknowns.
pub fn theorem_rhs(k: usize, alpha: FpScalar, field: PrimeField) -> Result<PowerSumSystem> {
    if k < 2 || k as u64 >= field.modulus() as u64 {
        return Err(SolverError::InvalidSystem(format!(
            "nilpotency degree {k} must satisfy 2 <= k < p = {}",
            field.modulus()
        )));
    }
    let mut rhs = vec![0; k - 1];
    rhs[k - 2] = field.mul(alpha % field.modulus(), field.factorial(k as u64 - 1));
    PowerSumSystem::new(field, theorem_unknowns(k), rhs)
}

/// Number of nondecreasing length-`len` tuples over `n` symbols, saturating.
fn multiset_count(n: u64, len: usize) -> u64 {
    if len == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    // C(n + len - 1, len)
    let mut acc: u128 = 1;
    for i in 0..len as u128 {
        acc = acc * (n as u128 + i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Visits nondecreasing tuples over `[lo, hi)` in lexicographic order until
/// `f` returns `true`.
fn find_sorted_tuple(len: usize, lo: u32, hi: u32, mut f: impl FnMut(&[u32]) -> bool) -> bool {
    if len == 0 {
        return f(&[]);
    }
    if lo >= hi {
        return false;
    }
    let mut t = vec![lo; len];
    loop {
        if f(&t) {
            return true;
        }
        let Some(i) = (0..len).rev().find(|&i| t[i] + 1 < hi) else {
            return false;
        };
        let v = t[i] + 1;
        for x in &mut t[i..] {
            *x = v;
        }
    }
}

/// Nondecreasing nonzero tuples of one length, grouped by power-sum vector.
struct HalfTable {
    len: usize,
    tuples: Vec<u32>,
    by_key: HashMap<u128, Vec<u32>>,
}

/// Reusable solver for systems with a fixed field and equation count.
/// Half tables are cached across calls.
pub struct PowerSumSolver {
    field: PrimeField,
    k: usize,
    budget: u64,
    powers: Vec<Vec<FpScalar>>,
    tables: HashMap<usize, HalfTable>,
}

impl PowerSumSolver {
    pub fn new(field: PrimeField, k: usize, budget: u64) -> Result<Self> {
        if k == 0 {
            return Err(SolverError::InvalidSystem("at least one equation is required".into()));
        }
        let bits = (k as f64) * (field.modulus() as f64).log2();
        if bits >= 127.0 {
            return Err(SolverError::InvalidSystem(format!(
                "power-sum vectors of length {k} over F_{} do not fit a 128-bit key",
                field.modulus()
            )));
        }
        let powers = (0..field.modulus())
            .map(|x| {
                let mut row = Vec::with_capacity(k);
                let mut acc = 1 % field.modulus();
                for _ in 0..k {
                    acc = field.mul(acc, x);
                    row.push(acc);
                }
                row
            })
            .collect();
        Ok(Self { field, k, budget, powers, tables: HashMap::new() })
    }

    fn key(&self, sums: &[FpScalar]) -> u128 {
        sums.iter().rev().fold(0u128, |acc, &s| acc * self.field.modulus() as u128 + s as u128)
    }

    fn sums_of(&self, tuple: &[u32]) -> Vec<FpScalar> {
        let mut sums = vec![0; self.k];
        for &x in tuple {
            for (s, &pw) in sums.iter_mut().zip(&self.powers[x as usize]) {
                *s = self.field.add(*s, pw);
            }
        }
        sums
    }

    fn ensure_table(&mut self, len: usize) {
        if self.tables.contains_key(&len) {
            return;
        }
        let p = self.field.modulus();
        let mut tuples = Vec::new();
        let mut by_key: HashMap<u128, Vec<u32>> = HashMap::new();
        let mut id = 0u32;
        find_sorted_tuple(len, 1, p, |t| {
            let key = self.key(&self.sums_of(t));
            by_key.entry(key).or_default().push(id);
            tuples.extend_from_slice(t);
            id += 1;
            false
        });
        self.tables.insert(len, HalfTable { len, tuples, by_key });
    }

    /// Estimated tuple visits for a search with exactly `j` nonzero entries.
    fn cost(&self, j: usize) -> u64 {
        let n = self.field.modulus() as u64 - 1;
        let (h1, h2) = (j / 2, j - j / 2);
        let table = if self.tables.contains_key(&h2) { 0 } else { multiset_count(n, h2) };
        table.saturating_add(multiset_count(n, h1))
    }

    /// Lexicographically smallest nondecreasing tuple of `j` nonzero residues
    /// with the given power sums.
    fn search_nonzero(&mut self, j: usize, rhs: &[FpScalar]) -> Option<Vec<u32>> {
        let (h1, h2) = (j / 2, j - j / 2);
        self.ensure_table(h2);
        let table = &self.tables[&h2];
        let p = self.field.modulus();
        let mut found = None;
        find_sorted_tuple(h1, 1, p, |a| {
            let sa = self.sums_of(a);
            let need: Vec<FpScalar> =
                rhs.iter().zip(&sa).map(|(&b, &s)| self.field.sub(b, s)).collect();
            let Some(ids) = table.by_key.get(&self.key(&need)) else {
                return false;
            };
            let floor = a.last().copied().unwrap_or(1);
            let first = |id: &u32| table.tuples[*id as usize * table.len];
            let pos = ids.partition_point(|id| first(id) < floor);
            let Some(&id) = ids.get(pos) else {
                return false;
            };
            let start = id as usize * table.len;
            let mut sol = a.to_vec();
            sol.extend_from_slice(&table.tuples[start..start + table.len]);
            found = Some(sol);
            true
        });
        found
    }

    /// Lexicographically smallest solution with `m` unknowns, `Ok(None)` if
    /// exhaustive search proves there is none.
    pub fn solve(&mut self, m: usize, rhs: &[FpScalar]) -> Result<Option<PowerSumSolution>> {
        if rhs.len() != self.k {
            return Err(SolverError::InvalidSystem(format!(
                "expected {} right-hand sides, got {}",
                self.k,
                rhs.len()
            )));
        }
        if rhs.iter().all(|&b| b == 0) {
            return Ok(Some(PowerSumSolution { values: vec![0; m] }));
        }
        for j in 1..=m {
            let needed = self.cost(j);
            if needed > self.budget {
                return Err(SolverError::SearchBudgetExceeded { needed, budget: self.budget });
            }
            if let Some(tail) = self.search_nonzero(j, rhs) {
                let mut values = vec![0; m - j];
                values.extend(tail);
                debug_assert_eq!(power_sums(self.field, &values, self.k), rhs);
                return Ok(Some(PowerSumSolution { values }));
            }
        }
        Ok(None)
    }
}

/// Solves one system; `Ok(None)` means no solution exists.
pub fn solve(system: &PowerSumSystem, budget: u64) -> Result<Option<PowerSumSolution>> {
    PowerSumSolver::new(system.field, system.k(), budget)?.solve(system.m, &system.rhs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrontierRow {
    pub p: u32,
    pub k: usize,
    pub m: usize,
    pub all_solvable: bool,
    /// Lexicographically first unsolvable right-hand side `(b_1, …, b_k)`.
    pub counterexample: Option<Vec<FpScalar>>,
}

/// For each `m ≤ m_max`, whether every right-hand side in `F_p^k` is solvable
/// with `m` unknowns.
pub fn solvability_frontier(
    field: PrimeField,
    k: usize,
    m_max: usize,
    budget: u64,
) -> Result<Vec<FrontierRow>> {
    let p = field.modulus();
    let count = (p as u64)
        .checked_pow(k as u32)
        .filter(|&c| c <= budget)
        .ok_or(SolverError::SearchBudgetExceeded { needed: u64::MAX, budget })?;
    let mut solver = PowerSumSolver::new(field, k, budget)?;
    // rhs in lexicographic order, b_1 most significant.
    let mut open: Vec<Vec<FpScalar>> = (0..count)
        .map(|mut i| {
            let mut b = vec![0; k];
            for slot in b.iter_mut().rev() {
                *slot = (i % p as u64) as FpScalar;
                i /= p as u64;
            }
            b
        })
        .collect();
    let mut rows = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        // Solvable with m unknowns stays solvable with m + 1 (pad with zero).
        let mut still_open = Vec::new();
        for rhs in open {
            if solver.solve(m, &rhs)?.is_none() {
                still_open.push(rhs);
            }
        }
        open = still_open;
        rows.push(FrontierRow {
            p,
            k,
            m,
            all_solvable: open.is_empty(),
            counterexample: open.first().cloned(),
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    p: u32,
    k: usize,
    m: usize,
    all_solvable: bool,
    counterexample_rhs_or_empty: &'a str,
}

/// Writes frontier rows as CSV with columns
/// `p,k,m,all_solvable,counterexample_rhs_or_empty`; a counterexample is
/// written as `b1;b2;…;bk`.
pub fn write_frontier_csv<W: Write>(rows: &[FrontierRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        let ce = row
            .counterexample
            .as_ref()
            .map(|b| b.iter().map(u32::to_string).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        w.serialize(CsvRow {
            p: row.p,
            k: row.k,
            m: row.m,
            all_solvable: row.all_solvable,
            counterexample_rhs_or_empty: &ce,
        })
        .map_err(|e| SolverError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| SolverError::Csv(e.to_string()))
}
