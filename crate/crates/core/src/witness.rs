//! Explicit decompositions of target vectors into orbit elements.
//!
//! Two constructions are implemented.
//!
//! **Unipotent branch.** Let `A ∈ G` have order p and `(A - Id)^k = 0` with
//! `k` minimal. For exponents `x_1, …, x_m` solving the power-sum system
//! with right-hand side `(0, …, 0, α·(k-1)!)`, the binomial expansion of
//! `A^x` collapses to
//!
//! ```text
//! A^{x_1} + … + A^{x_m} = m·Id + α·(A - Id)^{k-1},
//! ```
//!
//! so for `v` in the orbit with `u = v(A - Id)^{k-1} ≠ 0` the `m` orbit
//! elements `v A^{x_j}` sum to `m·v + α·u`. Letting α range over F_p gives a
//! whole line inside the m-fold sumset. Translating that line by group
//! elements `g_1, …, g_d` with `{u g_i}` a basis reaches every vector with
//! exactly `d·m` summands.
//!
//! **Trivial branch.** For any `v` in the orbit, `j` copies of `v` sum to
//! `j·v`, a line through zero using at most `p - 1` summands; the same
//! translation argument gives decompositions of length at most `d(p-1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{vec_act, FpMatrix, FpScalar, FpVector, LinalgError, PrimeField};
use crate::group::{
    close_group, find_min_degree_order_p_element, is_irreducible, orbits_on_v, spanning_translates,
    AffineInstance, GroupClosure, GroupError, Orbit, OrbitPartition, DEFAULT_CLOSURE_CAP,
};
use crate::power_sums::{theorem_rhs, theorem_unknowns, PowerSumSolver, SolverError, DEFAULT_SEARCH_BUDGET};
use crate::space::VectorSpace;

/// Above this many vectors, [`TargetPolicy::Auto`] samples instead of
/// checking every target.
pub const EXHAUSTIVE_TARGET_LIMIT: usize = 100_000;
pub const DEFAULT_SAMPLE_SIZE: usize = 512;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("p = {p} does not divide |G| = {group_order}; no certificate applies")]
    NotApplicable { p: u32, group_order: usize },
    #[error("the linear group is reducible")]
    Reducible,
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error("no orbit element v with v(A - Id)^(k-1) != 0")]
    NoWitnessVector,
    #[error("matrix does not have order p")]
    NotOrderP,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, WitnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Unipotent,
    Trivial,
}

/// `9d³`.
pub fn headline_bound(d: usize) -> usize {
    9 * d * d * d
}

/// Exponent tuples `x_1, …, x_m` for every α ∈ F_p, shared by all orbits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentTable {
    k: usize,
    m: usize,
    per_alpha: Vec<Vec<FpScalar>>,
}

impl ExponentTable {
    /// Solves the power-sum system for nilpotency degree `k` and every α.
    /// An unsolvable system is reported as a theorem violation.
    pub fn build(field: PrimeField, k: usize, budget: u64) -> Result<Self> {
        let m = theorem_unknowns(k);
        let mut solver = PowerSumSolver::new(field, k - 1, budget)?;
        let mut per_alpha = Vec::with_capacity(field.modulus() as usize);
        for alpha in 0..field.modulus() {
            let system = theorem_rhs(k, alpha, field)?;
            let sol = solver.solve(system.m(), system.rhs())?.ok_or_else(|| {
                WitnessError::TheoremViolation(format!(
                    "power-sum system for k = {k}, alpha = {alpha} over F_{} has no solution",
                    field.modulus()
                ))
            })?;
            per_alpha.push(sol.values().to_vec());
        }
        Ok(Self { k, m, per_alpha })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn exponents(&self, alpha: FpScalar) -> &[FpScalar] {
        &self.per_alpha[alpha as usize]
    }
}

/// `Σ_j C(x_j, i)` for `i = 0, …, k-1`.
pub fn binomial_sums(field: PrimeField, exponents: &[FpScalar], k: usize) -> Vec<FpScalar> {
    (0..k as u64)
        .map(|i| {
            exponents.iter().fold(0, |acc, &x| {
                field.add(acc, field.binom(x, i).expect("i < k <= p"))
            })
        })
        .collect()
}

/// Checks `Σ_j A^{x_j} = m·Id + α·(A - Id)^{k-1}`.
pub fn operator_identity_holds(a: &FpMatrix, k: usize, exponents: &[FpScalar], alpha: FpScalar) -> bool {
    let f = a.field();
    let n = a.dim();
    let lhs = exponents
        .iter()
        .fold(FpMatrix::zero(f, n), |acc, &x| acc.add(&a.pow(x as u64)).expect("same shape"));
    let m = f.reduce(exponents.len() as u64);
    let rhs = FpMatrix::identity(f, n)
        .scale(m)
        .add(&a.minus_identity().pow(k as u64 - 1).scale(alpha))
        .expect("same shape");
    lhs == rhs
}

/// First orbit member (in index order) with `v(A - Id)^{k-1} ≠ 0`.
pub fn pick_witness_vector(space: &VectorSpace, orbit: &Orbit, a: &FpMatrix, k: usize) -> Result<FpVector> {
    let top = a.minus_identity().pow(k as u64 - 1);
    let mut scratch = vec![0; space.dim()];
    orbit
        .members()
        .iter()
        .find(|&&m| space.act_index(m, &top, &mut scratch) != 0)
        .map(|&m| space.decode(m))
        .ok_or(WitnessError::NoWitnessVector)
}

/// A line `b + F_p·u` inside the m-fold sumset of one orbit, with the `m`
/// summands for every point of the line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineWitness {
    orbit_id: usize,
    vector: FpVector,
    base: FpVector,
    direction: FpVector,
    k: usize,
    m: usize,
    per_alpha: Vec<Vec<FpVector>>,
}

impl LineWitness {
    pub fn orbit_id(&self) -> usize {
        self.orbit_id
    }

    /// The orbit element `v` the construction starts from.
    pub fn vector(&self) -> &FpVector {
        &self.vector
    }

    /// `b = m·v`.
    pub fn base(&self) -> &FpVector {
        &self.base
    }

    /// `u = v(A - Id)^{k-1}`.
    pub fn direction(&self) -> &FpVector {
        &self.direction
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The `m` orbit elements summing to `b + α·u`.
    pub fn summands(&self, alpha: FpScalar) -> &[FpVector] {
        &self.per_alpha[alpha as usize]
    }

    /// Checks every α: summands lie in the orbit and add up to `b + α·u`.
    pub fn verify(&self, space: &VectorSpace, orbit: &Orbit) -> bool {
        let f = space.field();
        self.per_alpha.iter().enumerate().all(|(alpha, summands)| {
            let target = self.base.add(&self.direction.scale(alpha as FpScalar)).expect("same space");
            summands.len() == self.m
                && summands.iter().all(|s| orbit.contains(space.encode(s)))
                && FpVector::sum(f, space.dim(), summands).ok() == Some(target)
        })
    }
}

/// Builds the line witness for `orbit` from an order-p element `a`.
pub fn build_line_witness(space: &VectorSpace, orbit: &Orbit, a: &FpMatrix, budget: u64) -> Result<LineWitness> {
    if a.is_identity() || !a.pow(space.p() as u64).is_identity() {
        return Err(WitnessError::NotOrderP);
    }
    let k = crate::field::nilpotency_degree(a)?;
    let table = ExponentTable::build(space.field(), k, budget)?;
    build_line_witness_with(space, orbit, a, &table)
}

/// As [`build_line_witness`], reusing precomputed exponents.
pub fn build_line_witness_with(
    space: &VectorSpace,
    orbit: &Orbit,
    a: &FpMatrix,
    table: &ExponentTable,
) -> Result<LineWitness> {
    let p = space.p();
    let (k, m) = (table.k, table.m);
    let v = pick_witness_vector(space, orbit, a, k)?;
    let direction = vec_act(&v, &a.minus_identity().pow(k as u64 - 1))?;
    let base = v.scale(space.field().reduce(m as u64));
    let mut powers = Vec::with_capacity(p as usize);
    let mut cur = v.clone();
    for _ in 0..p {
        powers.push(cur.clone());
        cur = vec_act(&cur, a)?;
    }
    let per_alpha = table
        .per_alpha
        .iter()
        .map(|xs| xs.iter().map(|&x| powers[x as usize].clone()).collect())
        .collect();
    Ok(LineWitness { orbit_id: orbit.id(), vector: v, base, direction, k, m, per_alpha })
}

/// Translates `g_1, …, g_d` of a line's direction forming a basis of V.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanCertificate {
    translates: Vec<FpMatrix>,
    basis: Vec<FpVector>,
    /// `Σ_i b·g_i`.
    offset: FpVector,
    basis_inverse: FpMatrix,
}

impl SpanCertificate {
    fn new(field: PrimeField, dim: usize, translates: Vec<FpMatrix>, direction: &FpVector, base: &FpVector) -> Result<Self> {
        let basis: Vec<FpVector> = translates.iter().map(|g| vec_act(direction, g)).collect::<std::result::Result<_, _>>()?;
        let images: Vec<FpVector> = translates.iter().map(|g| vec_act(base, g)).collect::<std::result::Result<_, _>>()?;
        let offset = FpVector::sum(field, dim, &images)?;
        let entries = basis.iter().flat_map(|b| b.coords().iter().copied()).collect();
        let basis_inverse = FpMatrix::new(field, dim, entries)?.inverse()?;
        Ok(Self { translates, basis, offset, basis_inverse })
    }

    pub fn translates(&self) -> &[FpMatrix] {
        &self.translates
    }

    /// `u·g_1, …, u·g_d`.
    pub fn basis(&self) -> &[FpVector] {
        &self.basis
    }

    /// Coordinates `λ` with `w = offset + Σ λ_i·basis_i`.
    fn coordinates(&self, w: &FpVector) -> Result<Vec<FpScalar>> {
        Ok(vec_act(&w.sub(&self.offset)?, &self.basis_inverse)?.into_coords())
    }
}

/// Spans V with translates of the witness line.
pub fn span_line(witness: &LineWitness, group: &GroupClosure) -> Result<SpanCertificate> {
    let translates = spanning_translates(group, &witness.direction)?;
    let dim = witness.direction.dim();
    SpanCertificate::new(witness.direction.field(), dim, translates, &witness.direction, &witness.base)
}

/// A list of orbit elements claimed to sum to `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionWitness {
    pub orbit_id: usize,
    pub target: FpVector,
    pub summands: Vec<FpVector>,
    pub branch: Branch,
}

impl DecompositionWitness {
    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// Exact check: every summand is in `orbit` and the sum equals the target.
    pub fn verify(&self, space: &VectorSpace, orbit: &Orbit) -> bool {
        self.summands.iter().all(|s| orbit.contains(space.encode(s)))
            && FpVector::sum(space.field(), space.dim(), &self.summands).ok().as_ref() == Some(&self.target)
    }

    pub fn record(&self, space: &VectorSpace, orbit: &Orbit) -> WitnessRecord {
        WitnessRecord {
            orbit: self.orbit_id,
            target: self.target.coords().to_vec(),
            branch: self.branch,
            summands: self.summands.iter().map(|s| s.coords().to_vec()).collect(),
            length: self.len(),
            bound: headline_bound(space.dim()),
            verified: self.verify(space, orbit),
        }
    }
}

/// Serialized form of a [`DecompositionWitness`] for external re-checking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub orbit: usize,
    pub target: Vec<FpScalar>,
    pub branch: Branch,
    pub summands: Vec<Vec<FpScalar>>,
    pub length: usize,
    pub bound: usize,
    pub verified: bool,
}

/// Decomposes `w` into `d·m` orbit elements using a line witness.
pub fn decompose_target(w: &FpVector, cert: &SpanCertificate, witness: &LineWitness) -> Result<DecompositionWitness> {
    let lambda = cert.coordinates(w)?;
    let mut summands = Vec::with_capacity(lambda.len() * witness.m);
    for (g, &l) in cert.translates.iter().zip(&lambda) {
        for s in witness.summands(l) {
            summands.push(vec_act(s, g)?);
        }
    }
    Ok(DecompositionWitness { orbit_id: witness.orbit_id, target: w.clone(), summands, branch: Branch::Unipotent })
}

/// Spanning data for the line `F_p·v` through zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrivialSpan {
    orbit_id: usize,
    cert: SpanCertificate,
}

impl TrivialSpan {
    pub fn new(orbit: &Orbit, group: &GroupClosure) -> Result<Self> {
        let v = orbit.representative();
        let translates = spanning_translates(group, v)?;
        let zero = FpVector::zero(v.field(), v.dim());
        let cert = SpanCertificate::new(v.field(), v.dim(), translates, v, &zero)?;
        Ok(Self { orbit_id: orbit.id(), cert })
    }

    /// `w = Σ λ_i (v g_i)` written as `λ_i` copies of each `v g_i`.
    pub fn decompose(&self, w: &FpVector) -> Result<DecompositionWitness> {
        let lambda = self.cert.coordinates(w)?;
        let summands = self
            .cert
            .basis
            .iter()
            .zip(&lambda)
            .flat_map(|(b, &l)| std::iter::repeat_n(b.clone(), l as usize))
            .collect();
        Ok(DecompositionWitness { orbit_id: self.orbit_id, target: w.clone(), summands, branch: Branch::Trivial })
    }
}

/// Decomposes `w` into at most `d(p-1)` elements of `orbit`.
pub fn decompose_target_trivial(w: &FpVector, orbit: &Orbit, group: &GroupClosure) -> Result<DecompositionWitness> {
    TrivialSpan::new(orbit, group)?.decompose(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetPolicy {
    /// Every vector when `p^d` is at most [`EXHAUSTIVE_TARGET_LIMIT`],
    /// otherwise a sample of [`DEFAULT_SAMPLE_SIZE`].
    #[default]
    Auto,
    All,
    Sample(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchPolicy {
    /// Trivial branch iff `p < 9d²`.
    #[default]
    Auto,
    Unipotent,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyOptions {
    pub cap: usize,
    pub targets: TargetPolicy,
    pub seed: u64,
    pub branch: BranchPolicy,
    pub budget: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CLOSURE_CAP,
            targets: TargetPolicy::Auto,
            seed: DEFAULT_SEED,
            branch: BranchPolicy::Auto,
            budget: DEFAULT_SEARCH_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitCertificate {
    pub orbit: usize,
    pub size: usize,
    pub targets_checked: usize,
    pub max_length: usize,
    #[serde(skip)]
    pub longest: Option<DecompositionWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certification {
    pub branch: Branch,
    pub group_order: usize,
    /// Nilpotency degree of the chosen order-p element (unipotent branch).
    pub k: Option<usize>,
    /// Summands per point of the witness line (unipotent branch).
    pub m: Option<usize>,
    pub bound: usize,
    pub branch_bound: usize,
    pub targets_exhaustive: bool,
    pub max_witness_length: usize,
    pub verified: bool,
    pub orbits: Vec<OrbitCertificate>,
}

fn choose_targets(space: &VectorSpace, policy: TargetPolicy, seed: u64) -> (Vec<usize>, bool) {
    let n = space.size();
    let sample = match policy {
        TargetPolicy::All => return ((0..n).collect(), true),
        TargetPolicy::Auto if n <= EXHAUSTIVE_TARGET_LIMIT => return ((0..n).collect(), true),
        TargetPolicy::Auto => DEFAULT_SAMPLE_SIZE,
        TargetPolicy::Sample(s) if s >= n => return ((0..n).collect(), true),
        TargetPolicy::Sample(s) => s,
    };
    let f = space.field();
    let d = space.dim();
    let top = f.modulus() - 1;
    let mut targets = vec![0, n - 1, space.encode(&FpVector::new(f, vec![1 % f.modulus(); d]).unwrap())];
    for i in 0..d {
        let e = FpVector::unit(f, d, i);
        targets.push(space.encode(&e));
        targets.push(space.encode(&e.scale(top)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    targets.extend((0..sample).map(|_| rng.gen_range(0..n)));
    targets.sort_unstable();
    targets.dedup();
    (targets, false)
}

type Decomposer = Box<dyn Fn(&FpVector) -> Result<DecompositionWitness> + Sync>;

/// Certifies the `9d³` bound for every orbit by building and checking
/// explicit decompositions of the chosen targets.
pub fn certify_instance(inst: &AffineInstance, options: CertifyOptions) -> Result<Certification> {
    let group = close_group(inst, options.cap)?;
    let partition = orbits_on_v(inst);
    certify_with(inst, &group, &partition, options)
}

/// As [`certify_instance`] with a precomputed closure and orbit partition.
pub fn certify_with(
    inst: &AffineInstance,
    group: &GroupClosure,
    partition: &OrbitPartition,
    options: CertifyOptions,
) -> Result<Certification> {
    let space = inst.space();
    let (p, d) = (inst.p(), inst.dim());
    if !group.order().is_multiple_of(p as usize) {
        return Err(WitnessError::NotApplicable { p, group_order: group.order() });
    }
    if !is_irreducible(inst, partition) {
        return Err(WitnessError::Reducible);
    }
    for k in 2..=d {
        if theorem_unknowns(k) > 4 * d * d {
            return Err(WitnessError::TheoremViolation(format!(
                "m = {} exceeds 4d^2 for k = {k}, d = {d}",
                theorem_unknowns(k)
            )));
        }
    }
    let bound = headline_bound(d);
    let small_p = (p as usize) < 9 * d * d;
    let branch = match options.branch {
        BranchPolicy::Auto if small_p => Branch::Trivial,
        BranchPolicy::Auto | BranchPolicy::Unipotent => Branch::Unipotent,
        BranchPolicy::Trivial => Branch::Trivial,
    };
    let (targets, exhaustive) = choose_targets(space, options.targets, options.seed);

    let unipotent = match branch {
        Branch::Unipotent => {
            let (a, k) = find_min_degree_order_p_element(group, p).ok_or_else(|| {
                WitnessError::TheoremViolation("p divides |G| but no element of order p was found".into())
            })?;
            let table = ExponentTable::build(inst.field(), k, options.budget)?;
            Some((a, table))
        }
        Branch::Trivial => None,
    };
    let branch_bound = match &unipotent {
        Some((_, table)) => d * table.m(),
        None => d * (p as usize - 1),
    };
    if branch == Branch::Unipotent && branch_bound > 4 * d * d * d {
        return Err(WitnessError::TheoremViolation(format!("d·m = {branch_bound} exceeds 4d^3")));
    }

    let orbits: Vec<OrbitCertificate> = partition
        .orbits()
        .par_iter()
        .map(|orbit| {
            let decompose: Decomposer = match &unipotent {
                Some((a, table)) => {
                    let line = build_line_witness_with(space, orbit, a, table)?;
                    if !line.verify(space, orbit) {
                        return Err(WitnessError::TheoremViolation(format!(
                            "line witness for orbit {} fails its summation check",
                            orbit.id()
                        )));
                    }
                    let cert = span_line(&line, group)?;
                    Box::new(move |w| decompose_target(w, &cert, &line))
                }
                None => {
                    let span = TrivialSpan::new(orbit, group)?;
                    Box::new(move |w| span.decompose(w))
                }
            };
            let mut longest: Option<DecompositionWitness> = None;
            for &t in &targets {
                let w = space.decode(t);
                let dec = decompose(&w)?;
                if !dec.verify(space, orbit) {
                    return Err(WitnessError::TheoremViolation(format!(
                        "decomposition of {w} in orbit {} does not verify",
                        orbit.id()
                    )));
                }
                if dec.len() > branch_bound || dec.len() > bound {
                    return Err(WitnessError::TheoremViolation(format!(
                        "decomposition of {w} in orbit {} has length {} > {}",
                        orbit.id(),
                        dec.len(),
                        branch_bound.min(bound)
                    )));
                }
                if longest.as_ref().is_none_or(|l| dec.len() > l.len()) {
                    longest = Some(dec);
                }
            }
            Ok(OrbitCertificate {
                orbit: orbit.id(),
                size: orbit.size(),
                targets_checked: targets.len(),
                max_length: longest.as_ref().map_or(0, DecompositionWitness::len),
                longest,
            })
        })
        .collect::<Result<_>>()?;

    let max_witness_length = orbits.iter().map(|o| o.max_length).max().unwrap_or(0);
    Ok(Certification {
        branch,
        group_order: group.order(),
        k: unipotent.as_ref().map(|(_, t)| t.k()),
        m: unipotent.as_ref().map(|(_, t)| t.m()),
        bound,
        branch_bound,
        targets_exhaustive: exhaustive,
        max_witness_length,
        verified: true,
        orbits,
    })
}
