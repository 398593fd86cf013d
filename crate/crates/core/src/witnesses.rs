//! Extremal coefficient families used to falsify embeddings numerically.
//!
//! Each family produces, for a size parameter `n`, a finitely supported
//! coefficient sequence whose source-space quasi-norm stays bounded (or has a
//! known closed form) while the target-space quasi-norm grows at a known
//! rate whenever the tested embedding fails. Cumulative families satisfy the
//! prefix property — `generate(n)` is a restriction of `generate(n + 1)` —
//! so depth scans measure a single sequence at increasing truncations.

use thiserror::Error;

use crate::dyadic::DyadicCube;
use crate::seqnorm::{CoeffSequence, NormError};
use crate::weights::{End, GpVerdict, LimitClass, WeightError, WeightFunction};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WitnessError {
    #[error("witness precondition failed: {0}")]
    Precondition(String),
    #[error("weight scale range exhausted after {selected} of {requested} levels")]
    RangeExhausted { selected: usize, requested: usize },
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// Family shapes; size-independent parameters live here.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessKind {
    /// Unit-normalised single coefficients on the dyadic annuli near a
    /// point, on greedily separated levels. Needs φ(t) t^{-d/p} → ∞ at 0.
    LocalBlowup { s: f64, p: f64, phi: WeightFunction },
    /// Filled unit cubes marching to infinity on greedily separated
    /// positions. Needs φ(t) t^{-d/p} → 0 at ∞; `exponent` sets the decay
    /// schedule (the fine index of the norm the family should keep bounded).
    GlobalDecay { s: f64, p: f64, phi: WeightFunction, exponent: f64 },
    /// The unit cube filled at one level with value 2^{-ks}; `generate(k)`
    /// picks the level.
    SingleLevel { s: f64 },
    /// One coefficient of size 1; `generate(j)` picks the level.
    SingleCoeff,
    /// Unit cube filled on every level 0..n with a slowly decaying
    /// level envelope (j+1)^{-1/q}.
    FineIndex { s: f64, q: f64 },
    /// Nested cube chain with envelope (j+1)^{-γ}, normalised so that each
    /// level contributes (j+1)^{-γ} to the b-norm at its own cube.
    NestedDual { s: f64, p: f64, phi: WeightFunction, gamma: f64 },
    /// Raw unit coefficients on a nested cube chain; its coefficient sum
    /// grows linearly.
    NestedAtoms,
}

impl WitnessKind {
    pub fn name(&self) -> &'static str {
        match self {
            WitnessKind::LocalBlowup { .. } => "local_blowup",
            WitnessKind::GlobalDecay { .. } => "global_decay",
            WitnessKind::SingleLevel { .. } => "single_level",
            WitnessKind::SingleCoeff => "single_coeff",
            WitnessKind::FineIndex { .. } => "fine_index",
            WitnessKind::NestedDual { .. } => "nested_dual",
            WitnessKind::NestedAtoms => "nested_atoms",
        }
    }
}

/// A validated witness family in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessFamily {
    kind: WitnessKind,
    d: usize,
}

impl WitnessFamily {
    pub fn new(kind: WitnessKind, d: usize) -> Result<Self, WitnessError> {
        if d == 0 {
            return Err(WitnessError::Precondition("dimension must be positive".into()));
        }
        match &kind {
            WitnessKind::LocalBlowup { p, phi, .. } => {
                check_weight(phi, *p, d)?;
                if phi.limit_behavior(*p, End::Zero)? != LimitClass::Infinite {
                    return Err(WitnessError::Precondition(
                        "local blow-up needs φ(t) t^{-d/p} → ∞ as t → 0".into(),
                    ));
                }
            }
            WitnessKind::GlobalDecay { p, phi, exponent, .. } => {
                check_weight(phi, *p, d)?;
                if !(*exponent > 0.0) {
                    return Err(WitnessError::Precondition("exponent must be positive".into()));
                }
                if phi.limit_behavior(*p, End::Infinity)? != LimitClass::Zero {
                    return Err(WitnessError::Precondition(
                        "global decay needs φ(t) t^{-d/p} → 0 as t → ∞".into(),
                    ));
                }
            }
            WitnessKind::NestedDual { p, phi, .. } => check_weight(phi, *p, d)?,
            WitnessKind::FineIndex { q, .. } => {
                if !(*q > 0.0) {
                    return Err(WitnessError::Precondition("q must be positive".into()));
                }
            }
            WitnessKind::SingleLevel { .. }
            | WitnessKind::SingleCoeff
            | WitnessKind::NestedAtoms => {}
        }
        Ok(WitnessFamily { kind, d })
    }

    pub fn kind(&self) -> &WitnessKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Whether `generate(n)` is a restriction of `generate(n + 1)`.
    pub fn is_cumulative(&self) -> bool {
        !matches!(
            self.kind,
            WitnessKind::SingleLevel { .. } | WitnessKind::SingleCoeff
        )
    }

    /// The coefficient sequence of size `n` (for single-shot kinds, at
    /// level `n`).
    pub fn generate(&self, n: usize) -> Result<CoeffSequence, WitnessError> {
        let d = self.d;
        match &self.kind {
            WitnessKind::LocalBlowup { s, p, phi } => {
                // h(k) = φ(2^{-k}) 2^{kd/p} is non-decreasing and unbounded;
                // pick levels on which it at least doubles
                let levels = greedy_levels(n, |k| h_zero(phi, *p, d, k), |h, prev| h > 2.0 * prev)?;
                let mut seq = CoeffSequence::new(d);
                for k in levels {
                    let value = 2f64.powf(-(k as f64) * s) / phi.eval_level(k as i64)?;
                    seq.insert(DyadicCube::new(k as i64, vec![1; d]).unwrap(), value)?;
                }
                Ok(seq)
            }
            WitnessKind::GlobalDecay { s, p, phi, exponent } => {
                // g(k) = φ(2^k) 2^{-kd/p} is non-increasing with limit 0;
                // place the ℓ-th filled cube where g dips below ℓ^{-1/e}
                let mut positions = vec![0u32];
                let mut k = 0u32;
                let (_, nu_max) = phi.scale_range();
                for ell in 1..n {
                    let threshold = (ell as f64).powf(-1.0 / exponent);
                    loop {
                        k += 1;
                        if (k as i64) > nu_max {
                            return Err(WitnessError::RangeExhausted {
                                selected: positions.len(),
                                requested: n,
                            });
                        }
                        if g_infinity(phi, *p, d, k)? < threshold {
                            break;
                        }
                    }
                    positions.push(k);
                }
                let mut seq = CoeffSequence::new(d);
                for (j, &k) in positions.iter().enumerate() {
                    let j = j as i64;
                    let value = 2f64.powf(-(j as f64) * s);
                    fill_cube(&mut seq, j, first_offset(d, (1i64 << k) << j), value)?;
                }
                Ok(seq)
            }
            WitnessKind::SingleLevel { s } => {
                let mut seq = CoeffSequence::new(d);
                let value = 2f64.powf(-(n as f64) * s);
                fill_cube(&mut seq, n as i64, vec![0; d], value)?;
                Ok(seq)
            }
            WitnessKind::SingleCoeff => {
                let mut seq = CoeffSequence::new(d);
                seq.insert(DyadicCube::new(n as i64, vec![0; d]).unwrap(), 1.0)?;
                Ok(seq)
            }
            WitnessKind::FineIndex { s, q } => {
                let mut seq = CoeffSequence::new(d);
                for j in 0..=n {
                    let value =
                        2f64.powf(-(j as f64) * s) * ((j + 1) as f64).powf(-1.0 / q);
                    fill_cube(&mut seq, j as i64, vec![0; d], value)?;
                }
                Ok(seq)
            }
            WitnessKind::NestedDual { s, p: _, phi, gamma } => {
                let mut seq = CoeffSequence::new(d);
                for j in 0..=n {
                    let value = 2f64.powf(-(j as f64) * s)
                        * ((j + 1) as f64).powf(-gamma)
                        / phi.eval_level(j as i64)?;
                    seq.insert(DyadicCube::new(j as i64, vec![0; d]).unwrap(), value)?;
                }
                Ok(seq)
            }
            WitnessKind::NestedAtoms => {
                let mut seq = CoeffSequence::new(d);
                for j in 0..=n {
                    seq.insert(DyadicCube::new(j as i64, vec![0; d]).unwrap(), 1.0)?;
                }
                Ok(seq)
            }
        }
    }

    /// The greedily selected levels (local blow-up) — exposed for tests and
    /// closed-form rate computations.
    pub fn blowup_levels(&self, n: usize) -> Result<Vec<u32>, WitnessError> {
        match &self.kind {
            WitnessKind::LocalBlowup { p, phi, .. } => {
                greedy_levels(n, |k| h_zero(phi, *p, self.d, k), |h, prev| h > 2.0 * prev)
            }
            _ => Err(WitnessError::Precondition("not a local blow-up family".into())),
        }
    }
}

fn check_weight(phi: &WeightFunction, p: f64, d: usize) -> Result<(), WitnessError> {
    if phi.dim() != d {
        return Err(WitnessError::Precondition("weight dimension mismatch".into()));
    }
    if !matches!(phi.check_gp(p)?, GpVerdict::Member) {
        return Err(WitnessError::Precondition(format!(
            "weight is not admissible for p = {p}"
        )));
    }
    Ok(())
}

/// φ(2^{-k}) 2^{kd/p}.
fn h_zero(phi: &WeightFunction, p: f64, d: usize, k: u32) -> Result<f64, WitnessError> {
    Ok(phi.eval_level(k as i64)? * 2f64.powf(k as f64 * d as f64 / p))
}

/// φ(2^k) 2^{-kd/p}.
fn g_infinity(phi: &WeightFunction, p: f64, d: usize, k: u32) -> Result<f64, WitnessError> {
    Ok(phi.eval_scale(k as i64)? * 2f64.powf(-(k as f64) * d as f64 / p))
}

/// First `n` levels k_0 = 0 < k_1 < ... where `value(k)` clears the
/// acceptance test against the previously selected value.
fn greedy_levels(
    n: usize,
    value: impl Fn(u32) -> Result<f64, WitnessError>,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<Vec<u32>, WitnessError> {
    let mut levels = Vec::with_capacity(n);
    if n == 0 {
        return Ok(levels);
    }
    levels.push(0);
    let mut prev = value(0)?;
    let mut k = 0u32;
    while levels.len() < n {
        k += 1;
        let v = match value(k) {
            Ok(v) => v,
            Err(WitnessError::Weight(WeightError::TabulatedRange(_))) => {
                return Err(WitnessError::RangeExhausted {
                    selected: levels.len(),
                    requested: n,
                })
            }
            Err(e) => return Err(e),
        };
        if accept(v, prev) {
            levels.push(k);
            prev = v;
        }
    }
    Ok(levels)
}

/// Offset of the unit cube at distance `shifted` along the first axis.
fn first_offset(d: usize, shifted: i64) -> Vec<i64> {
    let mut m = vec![0i64; d];
    m[0] = shifted;
    m
}

/// Set every level-`j` cell of the unit cube at offset `base` (given in
/// level-`j` units) to `value`.
fn fill_cube(
    seq: &mut CoeffSequence,
    j: i64,
    base: Vec<i64>,
    value: f64,
) -> Result<(), NormError> {
    let d = base.len();
    let width = 1i64 << j.max(0);
    let mut idx = vec![0i64; d];
    loop {
        let m: Vec<i64> = base.iter().zip(&idx).map(|(b, o)| b + o).collect();
        seq.insert(DyadicCube::new(j, m).unwrap(), value)?;
        let mut i = 0;
        loop {
            if i == d {
                return Ok(());
            }
            idx[i] += 1;
            if idx[i] < width {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}
