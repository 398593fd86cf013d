//! Dyadic cubes 2^{-j}([0,1)^d + m), half-open, with the containment,
//! neighbourhood and candidate-cube machinery used by the norm kernels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::weights::{GpVerdict, WeightFunction};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DyadicError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("offset {m} out of range at level {j} (|m| must stay below 2^{} )", 52 - j)]
    OffsetRange { j: i64, m: i64 },
    #[error("weight is not admissible for p = {0}; candidate enumeration needs admissibility")]
    NotAdmissible(f64),
}

/// A dyadic cube 2^{-j}([0,1)^d + m). Level j may be negative (large cubes).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub j: i64,
    pub m: Vec<i64>,
}

/// Canonically ordered set of cubes: level-major, then lexicographic offsets.
pub type CubeSet = BTreeSet<DyadicCube>;

impl DyadicCube {
    pub fn new(j: i64, m: Vec<i64>) -> Result<Self, DyadicError> {
        // Keep offsets exactly representable after scaling by 2^{-j}.
        let bound = if j >= 52 { 1 } else { 1i64 << (52 - j.max(0)) };
        for &mi in &m {
            if j >= 0 && mi.abs() >= bound {
                return Err(DyadicError::OffsetRange { j, m: mi });
            }
            if j < 0 && mi.abs() >= (1i64 << 52) {
                return Err(DyadicError::OffsetRange { j, m: mi });
            }
        }
        Ok(DyadicCube { j, m })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// Side length 2^{-j}.
    pub fn side(&self) -> f64 {
        2f64.powi(-(self.j as i32))
    }

    /// Volume 2^{-jd}.
    pub fn volume(&self) -> f64 {
        2f64.powi(-(self.j as i32) * self.dim() as i32)
    }

    /// Centre coordinates.
    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.m.iter().map(|&mi| (mi as f64 + 0.5) * s).collect()
    }

    /// Ancestor at a coarser level `j_up` ≤ self.j: floor-divide offsets.
    pub fn ancestor(&self, j_up: i64) -> DyadicCube {
        assert!(j_up <= self.j);
        let shift = (self.j - j_up) as u32;
        let m = self.m.iter().map(|&mi| mi >> shift).collect();
        DyadicCube { j: j_up, m }
    }

    pub fn parent(&self) -> DyadicCube {
        self.ancestor(self.j - 1)
    }

    /// Whether `other` ⊆ self (half-open cubes nest exactly).
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.j >= self.j && other.ancestor(self.j) == *self
    }

    /// Sign pattern of the orthant this cube sits in (cubes never straddle
    /// coordinate hyperplanes).
    pub fn orthant(&self) -> Vec<bool> {
        self.m.iter().map(|&mi| mi >= 0).collect()
    }
}

/// Offsets M at level `j_fine` whose cube, dilated by `r`, meets the cube
/// (j, m) dilated by `c` — overlap measured on open interiors, so pure
/// boundary touching does not count.
pub fn index_set_i(
    j_fine: i64,
    cube: &DyadicCube,
    r: f64,
    c: f64,
) -> Result<CubeSet, DyadicError> {
    let d = cube.dim();
    let side_fine = 2f64.powi(-(j_fine as i32));
    let side = cube.side();
    let center = cube.center();
    // |center_M,i - center_i| < (r·side_fine + c·side)/2 in every coordinate
    let reach = 0.5 * (r * side_fine + c * side);
    let mut ranges = Vec::with_capacity(d);
    for c in center.iter().take(d) {
        // centre of candidate: (M + 1/2)·side_fine
        let lo = ((c - reach) / side_fine - 0.5).ceil() as i64;
        let hi = ((c + reach) / side_fine - 0.5).floor() as i64;
        ranges.push((lo, hi));
    }
    let mut out = CubeSet::new();
    let mut idx: Vec<i64> = ranges.iter().map(|&(lo, _)| lo).collect();
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return Ok(out);
    }
    loop {
        // verify strict overlap (ceil/floor above can admit boundary cases)
        let cand = DyadicCube::new(j_fine, idx.clone())?;
        let cc = cand.center();
        let ok = (0..d).all(|i| (cc[i] - center[i]).abs() < reach - 1e-12 * side_fine.max(side));
        if ok {
            out.insert(cand);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            idx[i] += 1;
            if idx[i] <= ranges[i].1 {
                break;
            }
            idx[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// The finite family of cubes over which the supremum in any of the
/// sequence-space quasi-norms is attained, for a sequence supported on
/// `support`: every ancestor of a support cube, from the deepest support
/// level up through negative levels until each orthant's support is captured
/// by a single cube. Beyond that point the cube functional
/// φ(ℓ(P)) ℓ(P)^{-d/p} · (captured mass) is non-increasing, which is exactly
/// the admissibility of φ — hence the membership precondition.
pub fn relevant_cubes(
    support: &[DyadicCube],
    phi: &WeightFunction,
    p: f64,
) -> Result<CubeSet, DyadicError> {
    match phi.check_gp(p) {
        Ok(GpVerdict::Member) => {}
        _ => return Err(DyadicError::NotAdmissible(p)),
    }
    Ok(relevant_cubes_unchecked(support))
}

/// Candidate enumeration without the admissibility precondition check;
/// internal callers validate once at request construction.
pub(crate) fn relevant_cubes_unchecked(support: &[DyadicCube]) -> CubeSet {
    let mut out = CubeSet::new();
    if support.is_empty() {
        return out;
    }
    // Ancestors at levels 0..=j for every support cube.
    for cube in support {
        let mut cur = cube.clone();
        out.insert(cur.clone());
        while cur.j > 0 {
            cur = cur.parent();
            if !out.insert(cur.clone()) {
                break;
            }
        }
    }
    // Negative levels, per orthant, until one cube per orthant remains.
    let mut frontier: BTreeSet<DyadicCube> = support
        .iter()
        .map(|c| if c.j > 0 { c.ancestor(0) } else { c.clone() })
        .collect();
    out.extend(frontier.iter().cloned());
    loop {
        // group by orthant: done when each orthant has exactly one cube
        let mut orthants: BTreeSet<Vec<bool>> = BTreeSet::new();
        for c in &frontier {
            orthants.insert(c.orthant());
        }
        if frontier.len() == orthants.len() {
            break;
        }
        // coarsen only the finest cubes, one level at a time, so every
        // intermediate ancestor becomes a candidate
        let level = frontier.iter().map(|c| c.j).max().unwrap() - 1;
        let next: BTreeSet<DyadicCube> = frontier
            .iter()
            .map(|c| if c.j > level { c.ancestor(level) } else { c.clone() })
            .collect();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
