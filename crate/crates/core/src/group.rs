//! Matrix group enumeration, order-p element search, orbits of G on V and
//! irreducibility.

use std::collections::{HashMap, VecDeque};

use log::debug;
use thiserror::Error;

use crate::field::{
    nilpotency_degree, vec_act, FpMatrix, FpScalar, FpVector, LinalgError, PrimeField,
};
use crate::space::{SpaceError, VectorSpace};

/// Default bound on the number of enumerated group elements.
pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;

/// Sentinel orbit id of the zero vector.
pub const ZERO_ORBIT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("at least one generator is required")]
    NoGenerators,
    #[error("generator {index} has dimension {found}, expected {expected}")]
    GeneratorDimension { index: usize, found: usize, expected: usize },
    #[error("generator {index} is over F_{found}, expected F_{expected}")]
    GeneratorModulus { index: usize, found: u32, expected: u32 },
    #[error("generator {0} is singular")]
    SingularGenerator(usize),
    #[error("group closure exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("no spanning set of translates exists (group is not irreducible or vector is zero)")]
    SpanFailure,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, GroupError>;

/// The input of every computation: a prime, a dimension and generators of
/// the linear part G of the affine group VG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineInstance {
    label: String,
    space: VectorSpace,
    generators: Vec<FpMatrix>,
}

impl AffineInstance {
    pub fn new(
        label: impl Into<String>,
        field: PrimeField,
        dim: usize,
        generators: Vec<FpMatrix>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(GroupError::NoGenerators);
        }
        for (index, g) in generators.iter().enumerate() {
            if g.dim() != dim {
                return Err(GroupError::GeneratorDimension { index, found: g.dim(), expected: dim });
            }
            if g.field() != field {
                return Err(GroupError::GeneratorModulus {
                    index,
                    found: g.field().modulus(),
                    expected: field.modulus(),
                });
            }
            if g.rank() != dim {
                return Err(GroupError::SingularGenerator(index));
            }
        }
        let space = VectorSpace::new(field, dim)?;
        Ok(Self { label: label.into(), space, generators })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn field(&self) -> PrimeField {
        self.space.field()
    }

    pub fn p(&self) -> u32 {
        self.space.p()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &VectorSpace {
        &self.space
    }

    pub fn generators(&self) -> &[FpMatrix] {
        &self.generators
    }
}

/// All elements of `⟨generators⟩`, in breadth-first order over words.
#[derive(Debug, Clone)]
pub struct GroupClosure {
    generators: Vec<FpMatrix>,
    elements: Vec<FpMatrix>,
    index: HashMap<FpMatrix, usize>,
    /// `(parent element, generator)` such that element = parent · generator.
    parent: Vec<Option<(usize, usize)>>,
}

impl GroupClosure {
    /// `|G|`.
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[FpMatrix] {
        &self.elements
    }

    pub fn generators(&self) -> &[FpMatrix] {
        &self.generators
    }

    pub fn contains(&self, a: &FpMatrix) -> bool {
        self.index.contains_key(a)
    }

    pub fn position(&self, a: &FpMatrix) -> Option<usize> {
        self.index.get(a).copied()
    }

    /// Shortest word (generator indices, applied left to right) for element `i`.
    pub fn word(&self, mut i: usize) -> Vec<usize> {
        let mut word = Vec::new();
        while let Some((parent, gen)) = self.parent[i] {
            word.push(gen);
            i = parent;
        }
        word.reverse();
        word
    }
}

/// Breadth-first closure of the generators under right multiplication.
pub fn close_group(inst: &AffineInstance, cap: usize) -> Result<GroupClosure> {
    let id = FpMatrix::identity(inst.field(), inst.dim());
    let mut elements = vec![id.clone()];
    let mut index = HashMap::from([(id, 0usize)]);
    let mut parent = vec![None];
    let mut queue = VecDeque::from([0usize]);
    while let Some(cur) = queue.pop_front() {
        for (gi, g) in inst.generators().iter().enumerate() {
            let next = elements[cur].mul_unchecked(g);
            if index.contains_key(&next) {
                continue;
            }
            if elements.len() >= cap {
                return Err(GroupError::CapExceeded { cap });
            }
            index.insert(next.clone(), elements.len());
            queue.push_back(elements.len());
            elements.push(next);
            parent.push(Some((cur, gi)));
        }
    }
    debug!("closure of {}: |G| = {}", inst.label(), elements.len());
    Ok(GroupClosure { generators: inst.generators().to_vec(), elements, index, parent })
}

/// Least `n ≥ 1` with `A^n = Id`.
pub fn element_order(a: &FpMatrix) -> Result<u64> {
    if a.rank() != a.dim() {
        return Err(GroupError::Linalg(LinalgError::Singular));
    }
    // The order of an invertible matrix divides a product of p^i - 1 and a
    // p-power; walking powers terminates well before p^(d^2).
    let mut power = a.clone();
    let mut n = 1u64;
    while !power.is_identity() {
        power = power.mul_unchecked(a);
        n += 1;
    }
    Ok(n)
}

fn has_order_p(a: &FpMatrix, p: u32) -> bool {
    !a.is_identity() && a.pow(p as u64).is_identity()
}

/// Some element of order exactly p, or `None` iff p does not divide |G|.
///
/// Generators are tried first (reducing `g` to `g^(n/p)` when p divides its
/// order `n`), then the closure is scanned in enumeration order.
pub fn find_order_p_element(group: &GroupClosure, p: u32) -> Option<FpMatrix> {
    order_p_candidates(group, p).next()
}

fn order_p_candidates(group: &GroupClosure, p: u32) -> impl Iterator<Item = FpMatrix> + '_ {
    let divides = group.order().is_multiple_of(p as usize);
    let from_generators = group
        .generators
        .iter()
        .filter(move |_| divides)
        .filter_map(move |g| {
            let n = element_order(g).ok()?;
            (n % p as u64 == 0).then(|| g.pow(n / p as u64))
        });
    let from_scan = group.elements.iter().filter(move |e| divides && has_order_p(e, p)).cloned();
    from_generators.chain(from_scan)
}

/// The order-p element with the smallest nilpotency degree `k`, together
/// with `k`. Ties go to the first candidate in search order.
pub fn find_min_degree_order_p_element(group: &GroupClosure, p: u32) -> Option<(FpMatrix, usize)> {
    let mut best: Option<(FpMatrix, usize)> = None;
    for a in order_p_candidates(group, p) {
        let Ok(k) = nilpotency_degree(&a) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, bk)| k < *bk) {
            best = Some((a, k));
            if k == 2 {
                break;
            }
        }
    }
    best
}

/// One nonzero G-orbit on V. Members are stored as sorted indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    id: usize,
    representative: FpVector,
    members: Vec<usize>,
}

impl Orbit {
    pub fn id(&self) -> usize {
        self.id
    }

    /// The member with the smallest index.
    pub fn representative(&self) -> &FpVector {
        &self.representative
    }

    pub fn representative_index(&self) -> usize {
        self.members[0]
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.members.binary_search(&idx).is_ok()
    }
}

/// Partition of V ∖ {0} into G-orbits, ordered by representative index.
#[derive(Debug, Clone)]
pub struct OrbitPartition {
    orbit_of: Vec<u32>,
    orbits: Vec<Orbit>,
}

impl OrbitPartition {
    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    /// Orbit id of the vector with index `idx`; [`ZERO_ORBIT`] for zero.
    #[inline]
    pub fn orbit_of(&self, idx: usize) -> u32 {
        self.orbit_of[idx]
    }

    pub fn orbit_table(&self) -> &[u32] {
        &self.orbit_of
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }
}

/// The orbit of a single nonzero vector under the group generated by
/// `generators`, labelled with id 0. Does not enumerate the rest of V.
pub fn orbit_of_vector(space: &VectorSpace, generators: &[FpMatrix], v: &FpVector) -> Orbit {
    let start = space.encode(v);
    let mut seen = std::collections::HashSet::from([start]);
    let mut members = vec![start];
    let mut scratch = vec![0; space.dim()];
    let mut head = 0;
    while head < members.len() {
        let cur = members[head];
        head += 1;
        for g in generators {
            let next = space.act_index(cur, g, &mut scratch);
            if seen.insert(next) {
                members.push(next);
            }
        }
    }
    members.sort_unstable();
    Orbit { id: 0, representative: space.decode(members[0]), members }
}

/// Partition V ∖ {0} into orbits by breadth-first search under the generators.
pub fn orbits_on_v(inst: &AffineInstance) -> OrbitPartition {
    let space = inst.space();
    let size = space.size();
    let unassigned = u32::MAX - 1;
    let mut orbit_of = vec![unassigned; size];
    orbit_of[0] = ZERO_ORBIT;
    let mut orbits = Vec::new();
    let mut scratch = vec![0; space.dim()];
    let mut queue = Vec::new();
    for start in 1..size {
        if orbit_of[start] != unassigned {
            continue;
        }
        let id = orbits.len() as u32;
        orbit_of[start] = id;
        queue.clear();
        queue.push(start);
        let mut head = 0;
        while head < queue.len() {
            let cur = queue[head];
            head += 1;
            for g in inst.generators() {
                let next = space.act_index(cur, g, &mut scratch);
                if orbit_of[next] == unassigned {
                    orbit_of[next] = id;
                    queue.push(next);
                }
            }
        }
        let mut members = queue.clone();
        members.sort_unstable();
        orbits.push(Orbit { id: id as usize, representative: space.decode(start), members });
    }
    debug!("{}: {} nonzero orbits on {} vectors", inst.label(), orbits.len(), size);
    OrbitPartition { orbit_of, orbits }
}

/// Incremental row-echelon basis used for rank and span checks.
#[derive(Debug, Clone)]
pub(crate) struct SpanBuilder {
    field: PrimeField,
    dim: usize,
    rows: Vec<(usize, Vec<FpScalar>)>,
}

impl SpanBuilder {
    pub(crate) fn new(field: PrimeField, dim: usize) -> Self {
        Self { field, dim, rows: Vec::with_capacity(dim) }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    /// Adds `v` to the span; returns whether the rank increased.
    pub(crate) fn insert(&mut self, v: &[FpScalar]) -> bool {
        let f = self.field;
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            let c = v[*pivot];
            if c != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = f.sub(*x, f.mul(c, r));
                }
            }
        }
        let Some(pivot) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let s = f.inv(v[pivot]).expect("nonzero pivot");
        for x in v.iter_mut() {
            *x = f.mul(*x, s);
        }
        for (_, row) in self.rows.iter_mut() {
            let c = row[pivot];
            if c != 0 {
                for (x, &r) in row.iter_mut().zip(&v) {
                    *x = f.sub(*x, f.mul(c, r));
                }
            }
        }
        self.rows.push((pivot, v));
        true
    }
}

/// Rank of the linear span of an orbit.
pub fn orbit_span_rank(space: &VectorSpace, orbit: &Orbit) -> usize {
    let mut span = SpanBuilder::new(space.field(), space.dim());
    let mut coords = vec![0; space.dim()];
    for &m in orbit.members() {
        space.decode_into(m, &mut coords);
        span.insert(&coords);
        if span.is_full() {
            break;
        }
    }
    span.rank()
}

/// G is irreducible iff every nonzero orbit spans V.
pub fn is_irreducible(inst: &AffineInstance, orbits: &OrbitPartition) -> bool {
    orbits.orbits().iter().all(|o| orbit_span_rank(inst.space(), o) == inst.dim())
}

/// Group elements `g_1, …, g_d` such that `u·g_1, …, u·g_d` is a basis of V,
/// chosen greedily in closure enumeration order.
pub fn spanning_translates(group: &GroupClosure, u: &FpVector) -> Result<Vec<FpMatrix>> {
    let dim = u.dim();
    let mut span = SpanBuilder::new(u.field(), dim);
    let mut chosen = Vec::with_capacity(dim);
    for g in group.elements() {
        let image = vec_act(u, g)?;
        if span.insert(image.coords()) {
            chosen.push(g.clone());
            if span.is_full() {
                return Ok(chosen);
            }
        }
    }
    Err(GroupError::SpanFailure)
}

pub fn divides_group_order(group: &GroupClosure, p: u32) -> bool {
    group.order().is_multiple_of(p as usize)
}
