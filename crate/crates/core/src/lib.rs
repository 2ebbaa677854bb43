//! Orbital-graph diameters of affine primitive permutation groups `VG` over
//! `F_p^d`, together with explicit witness decompositions bounding them when
//! p divides |G|.

pub mod diameter;
pub mod families;
pub mod field;
pub mod group;
pub mod power_sums;
pub mod report;
pub mod space;
pub mod witness;
