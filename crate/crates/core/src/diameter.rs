//! Exact orbital-graph diameters.
//!
//! The directed diameter of the orbital graph with connection set `O` is the
//! least `m` with `m·(O ∪ {0}) = V`. Three routes compute it:
//!
//! * [`directed_orbit_diameter`]: iterated sumsets on index bitmaps, adding
//!   only the newly reached frontier at each step;
//! * [`directed_orbit_diameter_bfs`]: plain breadth-first search from the zero
//!   vertex of the Cayley digraph, kept independent as an oracle;
//! * the orbit-quotient engine used by [`instance_diameter`]. Every layer
//!   `m·(O ∪ {0})` is a union of G-orbits, so it suffices to extend one
//!   representative per newly reached orbit.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{is_irreducible, orbits_on_v, AffineInstance, Orbit, OrbitPartition, ZERO_ORBIT};
use crate::space::VectorSpace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiameterError {
    #[error("connection set does not span V: reached {reached} of {total} vectors")]
    NonSpanning { reached: usize, total: usize },
    #[error("the linear group is reducible; orbital graphs are not all connected")]
    Reducible,
}

pub type Result<T> = std::result::Result<T, DiameterError>;

/// Membership bitmap over `[0, p^d)` using the mixed-radix vector indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedSet {
    bits: Vec<u64>,
    count: usize,
    universe: usize,
}

impl IndexedSet {
    pub fn new(universe: usize) -> Self {
        Self { bits: vec![0; universe.div_ceil(64)], count: 0, universe }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Inserts `idx`; returns whether it was new.
    #[inline]
    pub fn insert(&mut self, idx: usize) -> bool {
        let (w, b) = (idx / 64, idx % 64);
        let fresh = self.bits[w] & (1 << b) == 0;
        if fresh {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
        fresh
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx / 64] & (1 << (idx % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.universe
    }

    pub fn union_with(&mut self, other: &IndexedSet) {
        let mut count = 0;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
            count += a.count_ones() as usize;
        }
        self.count = count;
    }

    pub fn is_subset(&self, other: &IndexedSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| a & !b == 0)
    }

    /// Set indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
        })
    }
}

/// `S + T = { s + t : s ∈ S, t ∈ T }`.
pub fn sumset_add(space: &VectorSpace, s: &IndexedSet, t: &IndexedSet) -> IndexedSet {
    let mut out = IndexedSet::new(space.size());
    let right: Vec<usize> = t.iter().collect();
    for a in s.iter() {
        for &b in &right {
            out.insert(space.add_indices(a, b));
        }
    }
    out
}

/// Layer guard: no orbital graph of an irreducible group needs more than
/// `d(p-1)` steps.
pub fn trivial_bound(space: &VectorSpace) -> usize {
    space.dim() * (space.p() as usize - 1)
}

fn layered_sumset(space: &VectorSpace, connection: &[usize]) -> Result<usize> {
    let total = space.size();
    let mut reached = IndexedSet::new(total);
    reached.insert(0);
    let mut frontier = vec![0usize];
    let mut m = 0;
    let guard = trivial_bound(space);
    while !reached.is_full() {
        if frontier.is_empty() || m >= guard {
            return Err(DiameterError::NonSpanning { reached: reached.len(), total });
        }
        let mut next = Vec::new();
        for &s in &frontier {
            for &o in connection {
                let t = space.add_indices(s, o);
                if reached.insert(t) {
                    next.push(t);
                }
            }
        }
        frontier = next;
        m += 1;
    }
    Ok(m)
}

fn bfs_eccentricity(space: &VectorSpace, connection: &[usize]) -> Result<usize> {
    let total = space.size();
    let mut dist = vec![u32::MAX; total];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    let mut far = 0;
    let mut seen = 1;
    while let Some(x) = queue.pop_front() {
        let dx = dist[x];
        far = far.max(dx);
        for &o in connection {
            let y = space.add_indices(x, o);
            if dist[y] == u32::MAX {
                dist[y] = dx + 1;
                seen += 1;
                queue.push_back(y);
            }
        }
    }
    if seen < total {
        return Err(DiameterError::NonSpanning { reached: seen, total });
    }
    Ok(far as usize)
}

fn symmetrized(space: &VectorSpace, orbit: &Orbit) -> Vec<usize> {
    let mut conn: Vec<usize> = orbit.members().to_vec();
    conn.extend(orbit.members().iter().map(|&m| space.neg_index(m)));
    conn.sort_unstable();
    conn.dedup();
    conn
}

/// Least `m` with `m·(O ∪ {0}) = V`, by frontier sumset iteration.
pub fn directed_orbit_diameter(space: &VectorSpace, orbit: &Orbit) -> Result<usize> {
    layered_sumset(space, orbit.members())
}

/// Eccentricity of 0 in the Cayley digraph `Cay(V, O)`.
pub fn directed_orbit_diameter_bfs(space: &VectorSpace, orbit: &Orbit) -> Result<usize> {
    bfs_eccentricity(space, orbit.members())
}

/// Least `m` with `m·(O ∪ -O ∪ {0}) = V`.
pub fn undirected_orbit_diameter(space: &VectorSpace, orbit: &Orbit) -> Result<usize> {
    layered_sumset(space, &symmetrized(space, orbit))
}

/// BFS on the symmetrized Cayley graph.
pub fn undirected_orbit_diameter_bfs(space: &VectorSpace, orbit: &Orbit) -> Result<usize> {
    bfs_eccentricity(space, &symmetrized(space, orbit))
}

/// Orbit-level view of V used by the quotient engine.
struct Quotient<'a> {
    space: &'a VectorSpace,
    partition: &'a OrbitPartition,
    /// Representative coordinates, `d` entries per orbit.
    reps: Vec<u32>,
}

impl<'a> Quotient<'a> {
    fn new(space: &'a VectorSpace, partition: &'a OrbitPartition) -> Self {
        let d = space.dim();
        let mut reps = vec![0; partition.len() * d];
        for (o, chunk) in partition.orbits().iter().zip(reps.chunks_mut(d)) {
            space.decode_into(o.representative_index(), chunk);
        }
        Self { space, partition, reps }
    }

    /// Layer count until every orbit is reached from zero, extending one
    /// representative per orbit by every element of `connection`.
    fn diameter(&self, connection: &[usize]) -> Result<usize> {
        let space = self.space;
        let d = space.dim();
        let p = space.p();
        let place = space.place_values();
        let table = self.partition.orbit_table();
        let orbits = self.partition.orbits();
        let total = space.size();

        let mut conn = vec![0u32; connection.len() * d];
        for (&c, chunk) in connection.iter().zip(conn.chunks_mut(d)) {
            space.decode_into(c, chunk);
        }

        let zero = vec![0u32; d];
        let mut reached = vec![false; orbits.len()];
        let mut covered = 1usize;
        let mut frontier: Vec<Option<usize>> = vec![None];
        let mut m = 0;
        let guard = trivial_bound(space);
        while covered < total {
            if frontier.is_empty() || m >= guard {
                return Err(DiameterError::NonSpanning { reached: covered, total });
            }
            let mut next = Vec::new();
            'front: for q in &frontier {
                let s = match q {
                    Some(q) => &self.reps[q * d..(q + 1) * d],
                    None => &zero[..],
                };
                for o in conn.chunks_exact(d) {
                    let mut idx = 0usize;
                    for i in 0..d {
                        let mut c = s[i] + o[i];
                        if c >= p {
                            c -= p;
                        }
                        idx += c as usize * place[i];
                    }
                    let t = table[idx];
                    if t != ZERO_ORBIT && !reached[t as usize] {
                        reached[t as usize] = true;
                        covered += orbits[t as usize].size();
                        next.push(Some(t as usize));
                        if covered == total {
                            break 'front;
                        }
                    }
                }
            }
            frontier = next;
            m += 1;
        }
        Ok(m)
    }
}

/// Which algorithm [`instance_diameter`] runs per orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Quotient,
    Sumset,
    Bfs,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DiameterOptions {
    pub undirected: bool,
    pub engine: Engine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitDiameter {
    pub id: usize,
    pub representative: Vec<u32>,
    pub size: usize,
    pub directed_diameter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undirected_diameter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub label: String,
    pub p: u32,
    pub d: usize,
    pub orbits: Vec<OrbitDiameter>,
    pub overall_directed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_undirected: Option<usize>,
}

/// Per-orbit diameters using an already computed orbit partition.
pub fn partition_diameters(
    inst: &AffineInstance,
    partition: &OrbitPartition,
    options: DiameterOptions,
) -> Result<DiameterReport> {
    let space = inst.space();
    let quotient = Quotient::new(space, partition);
    let per_orbit: Vec<OrbitDiameter> = partition
        .orbits()
        .par_iter()
        .map(|orbit| {
            let (directed, undirected) = match options.engine {
                Engine::Quotient => (
                    quotient.diameter(orbit.members())?,
                    options
                        .undirected
                        .then(|| quotient.diameter(&symmetrized(space, orbit)))
                        .transpose()?,
                ),
                Engine::Sumset => (
                    directed_orbit_diameter(space, orbit)?,
                    options.undirected.then(|| undirected_orbit_diameter(space, orbit)).transpose()?,
                ),
                Engine::Bfs => (
                    directed_orbit_diameter_bfs(space, orbit)?,
                    options
                        .undirected
                        .then(|| undirected_orbit_diameter_bfs(space, orbit))
                        .transpose()?,
                ),
            };
            Ok(OrbitDiameter {
                id: orbit.id(),
                representative: orbit.representative().coords().to_vec(),
                size: orbit.size(),
                directed_diameter: directed,
                undirected_diameter: undirected,
            })
        })
        .collect::<Result<_>>()?;
    let overall_directed = per_orbit.iter().map(|o| o.directed_diameter).max().unwrap_or(0);
    let overall_undirected = options
        .undirected
        .then(|| per_orbit.iter().filter_map(|o| o.undirected_diameter).max().unwrap_or(0));
    Ok(DiameterReport {
        label: inst.label().to_string(),
        p: inst.p(),
        d: inst.dim(),
        orbits: per_orbit,
        overall_directed,
        overall_undirected,
    })
}

/// Orbital diameters of VG: per nonzero orbit, and their maximum.
pub fn instance_diameter(inst: &AffineInstance, options: DiameterOptions) -> Result<DiameterReport> {
    let partition = orbits_on_v(inst);
    if !is_irreducible(inst, &partition) {
        return Err(DiameterError::Reducible);
    }
    partition_diameters(inst, &partition, options)
}
