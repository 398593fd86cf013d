//! Numeric corroboration of embedding verdicts.
//!
//! A ratio scan evaluates the target and source quasi-norms of a
//! depth-parameterised coefficient family and classifies the trend of the
//! ratio table: a verdict that holds must never produce a diverging ratio,
//! and a failing verdict with a witness must show divergence on it.  The
//! scan is evidence, not proof — the analytic decision stays with the
//! oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dyadic::DyadicCube;
use crate::oracle::{Decision, EmbeddingVerdict, FalsificationPlan, SpaceSpec, TargetKind};
use crate::seqnorm::{space_norm, CoeffSequence, NormError};
use crate::witnesses::{WitnessError, WitnessFamily, WitnessKind};

/// Ratio growth per step that counts as divergence.
const GROW: f64 = 1.1;
/// Spread over the trailing window that still counts as bounded.
const FLAT: f64 = 1.05;
/// Trailing window length used by the trend classifier.
const WINDOW: usize = 3;
/// Hard cap on generated coefficients per depth.
const MAX_ENTRIES: usize = 2_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifierError {
    #[error("invalid scan request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// What a scan iterates over: a witness family or a seeded random family.
#[derive(Debug, Clone)]
pub enum ScanFamily {
    Witness { family: WitnessFamily, target: TargetKind },
    /// Cumulative random coefficients, level j drawn from stream j of the
    /// seed with values ±2^{−j·decay} U, U uniform in (0, 1].
    Random { seed: u64, decay: f64 },
}

impl ScanFamily {
    pub fn id(&self) -> String {
        match self {
            ScanFamily::Witness { family, .. } => family.kind().name().to_string(),
            ScanFamily::Random { seed, .. } => format!("random({seed})"),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            ScanFamily::Witness { .. } => None,
            ScanFamily::Random { seed, .. } => Some(*seed),
        }
    }
}

impl From<&FalsificationPlan> for ScanFamily {
    fn from(plan: &FalsificationPlan) -> Self {
        ScanFamily::Witness { family: plan.family.clone(), target: plan.target }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trend {
    Bounded { constant: f64 },
    Diverging { factor: f64 },
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthEntry {
    pub depth: usize,
    pub src_norm: f64,
    pub tgt_norm: f64,
    /// Absent when the source norm vanished and the entry was skipped.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub entries: Vec<DepthEntry>,
    pub trend: Trend,
    /// Filled by [`crosscheck`] (or manually) against an oracle verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
}

/// Result of matching reports against an oracle verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrossCheck {
    Consistent,
    Conflict { details: String },
}

/// The coefficient family evaluated at one depth.
fn sequence_at(family: &ScanFamily, d: usize, depth: usize) -> Result<CoeffSequence, VerifierError> {
    match family {
        ScanFamily::Witness { family, .. } => {
            if let WitnessKind::SingleLevel { .. } = family.kind() {
                if depth * d > 21 {
                    return Err(VerifierError::Invalid(format!(
                        "single-level depth {depth} too large in dimension {d}"
                    )));
                }
            }
            let seq = family.generate(depth)?;
            if seq.len() > MAX_ENTRIES {
                return Err(VerifierError::Invalid("family too large at this depth".into()));
            }
            Ok(seq)
        }
        ScanFamily::Random { seed, decay } => {
            let mut seq = CoeffSequence::new(d);
            for j in 0..=depth as i64 {
                // One rng stream per level keeps shallower depths prefixes
                // of deeper ones.
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(j as u64);
                let side = 1i64 << j.min(6);
                let mut m = vec![0i64; d];
                loop {
                    let u: f64 = 1.0 - rng.gen::<f64>();
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    let value = sign * 2f64.powf(-(j as f64) * decay) * u;
                    let cube = DyadicCube::new(j, m.clone())
                        .map_err(|e| VerifierError::Invalid(e.to_string()))?;
                    seq.insert(cube, value).map_err(VerifierError::Norm)?;
                    let mut axis = 0;
                    loop {
                        if axis == d {
                            break;
                        }
                        m[axis] += 1;
                        if m[axis] < side {
                            break;
                        }
                        m[axis] = 0;
                        axis += 1;
                    }
                    if axis == d {
                        break;
                    }
                }
            }
            Ok(seq)
        }
    }
}

fn evaluate_depth(
    src: &SpaceSpec,
    tgt: &SpaceSpec,
    family: &ScanFamily,
    depth: usize,
) -> Result<DepthEntry, VerifierError> {
    let seq = sequence_at(family, src.d, depth)?;
    let src_norm = space_norm(&seq, &src.norm_request())?.value;
    let tgt_norm = match family {
        ScanFamily::Witness { target: TargetKind::CoefficientSum, .. } => {
            seq.entries().map(|(_, v)| v.abs()).sum()
        }
        _ => space_norm(&seq, &tgt.norm_request())?.value,
    };
    let ratio = if src_norm > 0.0 && src_norm.is_finite() {
        Some(tgt_norm / src_norm)
    } else {
        None
    };
    Ok(DepthEntry { depth, src_norm, tgt_norm, ratio })
}

/// Deterministic trend of a ratio table.
fn classify(entries: &[DepthEntry]) -> Trend {
    let ratios: Vec<f64> = entries.iter().filter_map(|e| e.ratio).collect();
    let k = ratios.len();
    if k > WINDOW {
        let steps = &ratios[k - WINDOW - 1..];
        if steps.windows(2).all(|w| w[1] >= GROW * w[0]) {
            let factor = (steps[WINDOW] / steps[0]).powf(1.0 / WINDOW as f64);
            return Trend::Diverging { factor };
        }
    }
    if k >= WINDOW {
        let tail = &ratios[k - WINDOW..];
        let max = tail.iter().cloned().fold(f64::MIN, f64::max);
        let min = tail.iter().cloned().fold(f64::MAX, f64::min);
        if min > 0.0 && max / min <= FLAT {
            return Trend::Bounded { constant: max };
        }
    }
    Trend::Indeterminate
}

/// Scan the norm ratio of a coefficient family over truncation depths.
///
/// An indeterminate trend triggers doubling of the last depth until
/// `budget` is reached; pass the last requested depth to disable the
/// extension.
pub fn ratio_scan(
    src: &SpaceSpec,
    tgt: &SpaceSpec,
    family: &ScanFamily,
    depths: &[usize],
    budget: usize,
) -> Result<VerificationReport, VerifierError> {
    if src.d != tgt.d {
        return Err(VerifierError::Invalid("dimension mismatch".into()));
    }
    if depths.is_empty() || depths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VerifierError::Invalid("depths must be strictly increasing".into()));
    }
    let mut entries = scan_depths(src, tgt, family, depths)?;
    let mut trend = classify(&entries);
    let mut next = entries.last().map(|e| e.depth * 2).unwrap_or(0);
    while matches!(trend, Trend::Indeterminate) && next > 0 && next <= budget {
        entries.extend(scan_depths(src, tgt, family, &[next])?);
        trend = classify(&entries);
        next *= 2;
    }
    Ok(VerificationReport {
        family: family.id(),
        seed: family.seed(),
        entries,
        trend,
        agreement: None,
    })
}

#[cfg(feature = "parallel")]
fn scan_depths(
    src: &SpaceSpec,
    tgt: &SpaceSpec,
    family: &ScanFamily,
    depths: &[usize],
) -> Result<Vec<DepthEntry>, VerifierError> {
    use rayon::prelude::*;
    let mut out: Vec<(usize, DepthEntry)> = depths
        .par_iter()
        .map(|&depth| evaluate_depth(src, tgt, family, depth).map(|e| (depth, e)))
        .collect::<Result<_, _>>()?;
    out.sort_by_key(|(depth, _)| *depth);
    Ok(out.into_iter().map(|(_, e)| e).collect())
}

#[cfg(not(feature = "parallel"))]
fn scan_depths(
    src: &SpaceSpec,
    tgt: &SpaceSpec,
    family: &ScanFamily,
    depths: &[usize],
) -> Result<Vec<DepthEntry>, VerifierError> {
    depths.iter().map(|&depth| evaluate_depth(src, tgt, family, depth)).collect()
}

/// Whether a report's trend is compatible with a verdict.
fn compatible(verdict: &EmbeddingVerdict, report: &VerificationReport) -> bool {
    match verdict.decision {
        Decision::Holds => !matches!(report.trend, Trend::Diverging { .. }),
        _ => true,
    }
}

/// Match a verdict against scan reports generated for the same space pair.
pub fn crosscheck(verdict: &EmbeddingVerdict, reports: &mut [VerificationReport]) -> CrossCheck {
    for report in reports.iter_mut() {
        report.agreement = Some(compatible(verdict, report));
    }
    if let Some(bad) = reports.iter().find(|r| r.agreement == Some(false)) {
        return CrossCheck::Conflict {
            details: format!("verdict holds but family {} diverges", bad.family),
        };
    }
    if verdict.decision == Decision::Fails {
        if let Some(plan) = &verdict.witness {
            let name = plan.family.kind().name();
            let diverged = reports
                .iter()
                .any(|r| r.family == name && matches!(r.trend, Trend::Diverging { .. }));
            if !diverged {
                return CrossCheck::Conflict {
                    details: format!("witness family {name} shows no divergence"),
                };
            }
        }
    }
    CrossCheck::Consistent
}
