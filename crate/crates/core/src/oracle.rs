//! Embedding decision procedures for the four smoothness scales.
//!
//! Every decision is made analytically from the two-ended asymptotic law of
//! the weights: condition sequences all take the form `2^{jβ} (j+1)^γ`, so
//! sup-finiteness and ℓ_r membership reduce to a lexicographic exponent
//! calculus.  Verdicts are three-valued; `Inconclusive` is returned exactly
//! where the known sufficient and necessary conditions genuinely disagree,
//! never as a shortcut.  Failing verdicts carry a concrete witness family
//! whenever a divergent test sequence is available.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqnorm::{NormError, NormRequest, SeqScale};
use crate::weights::{lex_sign, End, LimitClass, WeightError, WeightFunction};
use crate::witnesses::{WitnessError, WitnessFamily, WitnessKind};
use crate::SCHEMA;

/// Exact-comparison tolerance for space parameters.
const TOL: f64 = 1e-12;

/// Longest prefix of the derived supremum sequence computed numerically.
const ALPHA_EXACT: i64 = 80;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("invalid embedding query: {0}")]
    Invalid(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

impl From<NormError> for OracleError {
    fn from(e: NormError) -> Self {
        OracleError::Invalid(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

/// A fully validated smoothness-space description.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    pub scale: SeqScale,
    pub s: f64,
    pub p: f64,
    /// Fine index; `f64::INFINITY` is admitted everywhere.
    pub q: f64,
    pub phi: WeightFunction,
    pub d: usize,
}

impl SpaceSpec {
    pub fn new(
        scale: SeqScale,
        s: f64,
        p: f64,
        q: f64,
        phi: WeightFunction,
        d: usize,
    ) -> Result<Self, OracleError> {
        if d == 0 || d != phi.dim() {
            return Err(OracleError::Invalid(format!(
                "dimension {d} does not match the weight's dimension {}",
                phi.dim()
            )));
        }
        // Delegates the parameter-range, admissibility-class and
        // lower-growth checks to the norm layer.
        NormRequest::new(scale, s, p, q, phi.clone())?;
        Ok(SpaceSpec { scale, s, p, q, phi, d })
    }

    /// The quasi-norm request evaluating sequences in this space.
    pub fn norm_request(&self) -> NormRequest {
        NormRequest::new(self.scale, self.s, self.p, self.q, self.phi.clone())
            .expect("validated at construction")
    }

    /// Same outer parameters, fine index relaxed: embeds by monotonicity.
    fn elementary_into(&self, tgt: &SpaceSpec) -> bool {
        feq(self.s, tgt.s) && feq(self.p, tgt.p) && self.phi == tgt.phi && le(self.q, tgt.q)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    scale: SeqScale,
    s: f64,
    p: f64,
    #[serde(with = "crate::weights::ext_real")]
    q: f64,
    phi: WeightFunction,
    d: usize,
}

impl Serialize for SpaceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SpecWire {
            schema: Some(SCHEMA.to_string()),
            scale: self.scale,
            s: self.s,
            p: self.p,
            q: self.q,
            phi: self.phi.clone(),
            d: self.d,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = SpecWire::deserialize(d)?;
        if let Some(schema) = &wire.schema {
            if schema != SCHEMA {
                return Err(D::Error::custom(format!("unsupported schema {schema:?}")));
            }
        }
        SpaceSpec::new(wire.scale, wire.s, wire.p, wire.q, wire.phi, wire.d)
            .map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Holds,
    Fails,
    Inconclusive,
}

/// One evaluated condition with its analytic evidence.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub id: &'static str,
    pub satisfied: bool,
    pub evidence: String,
}

/// What the verifier should measure on a witness family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Ratio of target to source quasi-norm.
    NormRatio,
    /// Plain coefficient sum (for targets without a sequence norm).
    CoefficientSum,
}

/// A concrete divergence plan attached to a failing verdict.
#[derive(Debug, Clone)]
pub struct FalsificationPlan {
    pub family: WitnessFamily,
    pub target: TargetKind,
}

impl Serialize for FalsificationPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FalsificationPlan", 2)?;
        st.serialize_field("family", self.family.kind().name())?;
        st.serialize_field("target", &self.target)?;
        st.end()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingVerdict {
    pub decision: Decision,
    /// Positive verdicts are never compact embeddings.
    pub compact: bool,
    pub trace: Vec<TraceStep>,
    pub witness: Option<FalsificationPlan>,
}

impl EmbeddingVerdict {
    fn holds(trace: Vec<TraceStep>) -> Self {
        EmbeddingVerdict { decision: Decision::Holds, compact: false, trace, witness: None }
    }

    fn fails(trace: Vec<TraceStep>, witness: Option<FalsificationPlan>) -> Self {
        EmbeddingVerdict { decision: Decision::Fails, compact: false, trace, witness }
    }

    fn inconclusive(trace: Vec<TraceStep>) -> Self {
        EmbeddingVerdict {
            decision: Decision::Inconclusive,
            compact: false,
            trace,
            witness: None,
        }
    }
}

/// Quantities shared by the pairwise decision procedures.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedQuantities {
    pub rho: f64,
    /// Exact values of the running supremum sequence on the available range.
    pub alpha: Vec<f64>,
    /// Power exponent of the asymptotic law of that sequence.
    pub alpha_beta: f64,
    /// Log exponent of the asymptotic law.
    pub alpha_gamma: f64,
    #[serde(with = "crate::weights::ext_real")]
    pub q_star: f64,
    #[serde(with = "crate::weights::ext_real")]
    pub q_prime: f64,
    #[serde(with = "crate::weights::ext_real")]
    pub r_phi1: f64,
}

/// ρ, the supremum sequence with its asymptotic law, conjugate-type indices
/// and the source critical exponent for an embedding query.
pub fn derived(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<DerivedQuantities, OracleError> {
    let rho = (src.p / tgt.p).min(1.0);
    let pr1 = src.phi.profile()?;
    let pr2 = tgt.phi.profile()?;
    let (alpha_beta, alpha_gamma) = alpha_asym(&pr1.into(), &pr2.into(), rho);
    Ok(DerivedQuantities {
        rho,
        alpha: alpha_values(&src.phi, &tgt.phi, rho),
        alpha_beta,
        alpha_gamma,
        q_star: conj_diff(tgt.q, src.q),
        q_prime: conj(src.q),
        r_phi1: src.phi.rphi()?,
    })
}

// ---------------------------------------------------------------------------
// exponent calculus
// ---------------------------------------------------------------------------

/// Two-ended exponents of a weight: φ(2^{−j}) ~ 2^{−j e0} (j+1)^{a0} and
/// φ(2^{ν}) ~ 2^{ν einf} (ν+1)^{ainf}.
#[derive(Debug, Clone, Copy)]
struct Ends {
    e0: f64,
    a0: f64,
    einf: f64,
    ainf: f64,
}

impl From<crate::weights::AsymptoticProfile> for Ends {
    fn from(p: crate::weights::AsymptoticProfile) -> Self {
        Ends { e0: p.e0, a0: p.a0, einf: p.einf, ainf: p.ainf }
    }
}

/// 1/r' = (1 − 1/r)_+ as an extended real.
fn conj(r: f64) -> f64 {
    if r <= 1.0 + TOL {
        f64::INFINITY
    } else if r.is_infinite() {
        1.0
    } else {
        r / (r - 1.0)
    }
}

/// 1/r = (1/q2 − 1/q1)_+ as an extended real.
fn conj_diff(q2: f64, q1: f64) -> f64 {
    let inv = |q: f64| if q.is_infinite() { 0.0 } else { 1.0 / q };
    let ir = inv(q2) - inv(q1);
    if ir <= TOL {
        f64::INFINITY
    } else {
        1.0 / ir
    }
}

/// Membership of {2^{jβ} (j+1)^γ}_{j≥0} in ℓ_r.
fn ell_member(beta: f64, gamma: f64, r: f64) -> bool {
    if beta < -TOL {
        true
    } else if beta > TOL {
        false
    } else if r.is_infinite() {
        gamma <= TOL
    } else {
        gamma * r < -1.0
    }
}

/// Exponents of the running supremum α_j = sup_{ν≤j} φ2(2^{−ν})/φ1(2^{−ν})^ρ.
fn alpha_asym(pr1: &Ends, pr2: &Ends, rho: f64) -> (f64, f64) {
    // The ν → ∞ tail of the ratio grows like 2^{νb}(ν+1)^g; a running sup
    // either follows that tail or freezes at a constant.
    let b = rho * pr1.e0 - pr2.e0;
    let g = pr2.a0 - rho * pr1.a0;
    if lex_sign(b, g) == Ordering::Greater {
        (b, g)
    } else {
        (0.0, 0.0)
    }
}

/// sup over large scales of φ2(2^ν)/φ1(2^ν)^ρ is finite.
fn large_scale_bounded(pr1: &Ends, pr2: &Ends, rho: f64) -> (bool, f64, f64) {
    let b = pr2.einf - rho * pr1.einf;
    let g = pr2.ainf - rho * pr1.ainf;
    (lex_sign(b, g) != Ordering::Greater, b, g)
}

/// Exact values of the supremum sequence on the evaluable dyadic range.
fn alpha_values(phi1: &WeightFunction, phi2: &WeightFunction, rho: f64) -> Vec<f64> {
    let (lo1, hi1) = phi1.scale_range();
    let (lo2, hi2) = phi2.scale_range();
    // eval_level(l) = φ(2^{−l}) needs −l inside the scale range.
    let l_lo = (-hi1).max(-hi2);
    let l_hi = (-lo1).min(-lo2).min(ALPHA_EXACT);
    if l_hi < 0 || l_lo > 0 {
        return Vec::new();
    }
    let ratio = |l: i64| -> f64 {
        match (phi2.eval_level(l), phi1.eval_level(l)) {
            (Ok(n), Ok(d)) if d > 0.0 => n / d.powf(rho),
            _ => 0.0,
        }
    };
    let mut sup = (l_lo..0).map(ratio).fold(0.0_f64, f64::max);
    let mut out = Vec::with_capacity((l_hi + 1) as usize);
    for j in 0..=l_hi {
        sup = sup.max(ratio(j));
        out.push(sup);
    }
    out
}

fn feq(a: f64, b: f64) -> bool {
    (a == b) || (a - b).abs() <= TOL
}

fn fgt(a: f64, b: f64) -> bool {
    a > b + TOL
}

fn le(a: f64, b: f64) -> bool {
    a <= b + TOL || (a.is_infinite() && b.is_infinite())
}

// ---------------------------------------------------------------------------
// shared pieces of the pairwise procedures
// ---------------------------------------------------------------------------

struct Trace(Vec<TraceStep>);

impl Trace {
    fn new() -> Self {
        Trace(Vec::new())
    }

    fn push(&mut self, id: &'static str, satisfied: bool, evidence: String) -> bool {
        self.0.push(TraceStep { id, satisfied, evidence });
        satisfied
    }

    fn note(&mut self, id: &'static str, evidence: String) {
        self.0.push(TraceStep { id, satisfied: true, evidence });
    }
}

fn check_pair(src: &SpaceSpec, tgt: &SpaceSpec, scales: &[SeqScale]) -> Result<(), OracleError> {
    if src.d != tgt.d {
        return Err(OracleError::Invalid(format!(
            "dimension mismatch: {} vs {}",
            src.d, tgt.d
        )));
    }
    for spec in [src, tgt] {
        if !scales.contains(&spec.scale) {
            return Err(OracleError::Invalid(format!(
                "scale {:?} not accepted by this procedure",
                spec.scale
            )));
        }
    }
    Ok(())
}

/// Both two-ended profiles, or a trace-carrying `Inconclusive`.
fn profiles(
    src: &SpaceSpec,
    tgt: &SpaceSpec,
    trace: &mut Trace,
) -> Result<Option<(Ends, Ends)>, OracleError> {
    match (src.phi.profile(), tgt.phi.profile()) {
        (Ok(a), Ok(b)) => Ok(Some((a.into(), b.into()))),
        (Err(WeightError::ProfileRequired), _) | (_, Err(WeightError::ProfileRequired)) => {
            trace.push(
                "profile_required",
                false,
                "tabulated weight carries no asymptotic profile; undecidable".into(),
            );
            Ok(None)
        }
        (Err(e), _) | (_, Err(e)) => Err(e.into()),
    }
}

fn plan(kind: WitnessKind, d: usize, target: TargetKind) -> Option<FalsificationPlan> {
    WitnessFamily::new(kind, d).ok().map(|family| FalsificationPlan { family, target })
}

/// Divergence of the one-coefficient ratio 2^{j(s2−s1)} φ2(2^{−j})/φ1(2^{−j}).
fn single_coeff_diverges(src: &SpaceSpec, tgt: &SpaceSpec, pr1: &Ends, pr2: &Ends) -> bool {
    lex_sign(tgt.s - src.s + pr1.e0 - pr2.e0, pr2.a0 - pr1.a0) == Ordering::Greater
}

/// Witness for a failing same-smoothness pair that differs in the fine index.
fn fine_index_applicable(src: &SpaceSpec, tgt: &SpaceSpec) -> bool {
    feq(src.s, tgt.s)
        && feq(src.p, tgt.p)
        && src.phi == tgt.phi
        && fgt(src.q, tgt.q)
        && tgt.q.is_finite()
}

// ---------------------------------------------------------------------------
// pairwise decisions
// ---------------------------------------------------------------------------

/// Embedding between two spaces on the N scale.
pub fn decide_n_to_n(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<EmbeddingVerdict, OracleError> {
    check_pair(src, tgt, &[SeqScale::N])?;
    let mut trace = Trace::new();
    if src.q.is_infinite() || tgt.q.is_infinite() {
        trace.note(
            "fine_index_extension",
            "an infinite fine index is handled by the same formulas".into(),
        );
    }
    if src.elementary_into(tgt) {
        trace.note("elementary_monotone", "same (s, p, φ) and q1 ≤ q2".into());
        return Ok(EmbeddingVerdict::holds(trace.0));
    }
    let Some((pr1, pr2)) = profiles(src, tgt, &mut trace)? else {
        return Ok(EmbeddingVerdict::inconclusive(trace.0));
    };
    let rho = (src.p / tgt.p).min(1.0);
    let q_star = conj_diff(tgt.q, src.q);

    let (lsb, lb, lg) = large_scale_bounded(&pr1, &pr2, rho);
    let c1 = trace.push(
        "large_scale_ratio_bounded",
        lsb,
        format!("ratio exponents at infinity: beta={lb:.6} gamma={lg:.6}"),
    );
    let (ab, ag) = alpha_asym(&pr1, &pr2, rho);
    let beta = tgt.s - src.s + ab + pr1.e0 * (1.0 - rho);
    let gamma = ag + pr1.a0 * (rho - 1.0);
    let c2 = trace.push(
        "weighted_alpha_summable",
        ell_member(beta, gamma, q_star),
        format!("sequence exponents beta={beta:.6} gamma={gamma:.6}, tested in l_{q_star}"),
    );
    if c1 && c2 {
        return Ok(EmbeddingVerdict::holds(trace.0));
    }
    let witness = if fine_index_applicable(src, tgt) {
        plan(WitnessKind::FineIndex { s: src.s, q: tgt.q }, src.d, TargetKind::NormRatio)
    } else if single_coeff_diverges(src, tgt, &pr1, &pr2) {
        plan(WitnessKind::SingleCoeff, src.d, TargetKind::NormRatio)
    } else {
        None
    };
    Ok(EmbeddingVerdict::fails(trace.0, witness))
}

/// Embedding between two spaces on the E scale (F is identified with E).
pub fn decide_e_to_e(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<EmbeddingVerdict, OracleError> {
    check_pair(src, tgt, &[SeqScale::E, SeqScale::F])?;
    let mut trace = Trace::new();
    if src.elementary_into(tgt) {
        trace.note("elementary_monotone", "same (s, p, φ) and q1 ≤ q2".into());
        return Ok(EmbeddingVerdict::holds(trace.0));
    }
    let Some((pr1, pr2)) = profiles(src, tgt, &mut trace)? else {
        return Ok(EmbeddingVerdict::inconclusive(trace.0));
    };

    if src.p >= tgt.p - TOL {
        // Same-or-coarser integrability: a complete characterisation.
        let (lsb, lb, lg) = large_scale_bounded(&pr1, &pr2, 1.0);
        let c1 = trace.push(
            "large_scale_ratio_bounded",
            lsb,
            format!("ratio exponents at infinity: beta={lb:.6} gamma={lg:.6}"),
        );
        let (ab, ag) = alpha_asym(&pr1, &pr2, 1.0);
        let c2 = trace.push(
            "alpha_bounded",
            ell_member(tgt.s - src.s + ab, ag, f64::INFINITY),
            format!("sequence exponents beta={:.6} gamma={ag:.6}", tgt.s - src.s + ab),
        );
        let c3 = trace.push(
            "smoothness_order",
            fgt(src.s, tgt.s) || (feq(src.s, tgt.s) && le(src.q, tgt.q)),
            format!("s1={} s2={} q1={} q2={}", src.s, tgt.s, src.q, tgt.q),
        );
        if c1 && c2 && c3 {
            return Ok(EmbeddingVerdict::holds(trace.0));
        }
        let witness = if fgt(tgt.s, src.s) {
            plan(WitnessKind::SingleLevel { s: src.s }, src.d, TargetKind::NormRatio)
        } else if single_coeff_diverges(src, tgt, &pr1, &pr2) {
            plan(WitnessKind::SingleCoeff, src.d, TargetKind::NormRatio)
        } else if fine_index_applicable(src, tgt) {
            plan(WitnessKind::FineIndex { s: src.s, q: tgt.q }, src.d, TargetKind::NormRatio)
        } else {
            None
        };
        return Ok(EmbeddingVerdict::fails(trace.0, witness));
    }

    // Finer integrability on the source side: the characterisation has a
    // known gap unless the source weight is exactly power-like at zero.
    let rho = src.p / tgt.p;
    let (lsb, lb, lg) = large_scale_bounded(&pr1, &pr2, rho);
    let c1 = trace.push(
        "large_scale_ratio_bounded",
        lsb,
        format!("ratio exponents at infinity: beta={lb:.6} gamma={lg:.6}"),
    );
    let r_phi1 = src.phi.rphi()?;
    let dr = if r_phi1.is_infinite() { 0.0 } else { src.d as f64 / r_phi1 };
    let power_like = src.phi.limit_behavior(r_phi1, End::Zero)? != LimitClass::Infinite;
    trace.push(
        "local_power_exact",
        power_like,
        format!("limit of φ1(t) t^(-{dr:.6}) at zero is finite: {power_like}"),
    );
    let (ab, ag) = alpha_asym(&pr1, &pr2, rho);
    let suff = ell_member(tgt.s - src.s + dr * (1.0 - rho) + ab, ag, f64::INFINITY);
    trace.push(
        "sufficient_alpha_bounded",
        suff,
        format!(
            "sequence exponents beta={:.6} gamma={ag:.6}",
            tgt.s - src.s + dr * (1.0 - rho) + ab
        ),
    );
    let nec = ell_member(
        tgt.s - src.s + pr1.e0 * (1.0 - rho) + ab,
        ag + pr1.a0 * (rho - 1.0),
        f64::INFINITY,
    );
    trace.push(
        "necessary_alpha_bounded",
        nec,
        format!(
            "sequence exponents beta={:.6} gamma={:.6}",
            tgt.s - src.s + pr1.e0 * (1.0 - rho) + ab,
            ag + pr1.a0 * (rho - 1.0)
        ),
    );

    let witness = if single_coeff_diverges(src, tgt, &pr1, &pr2) {
        plan(WitnessKind::SingleCoeff, src.d, TargetKind::NormRatio)
    } else {
        None
    };
    if !c1 {
        return Ok(EmbeddingVerdict::fails(trace.0, witness));
    }
    if power_like {
        return Ok(if suff {
            EmbeddingVerdict::holds(trace.0)
        } else {
            EmbeddingVerdict::fails(trace.0, witness)
        });
    }
    if suff {
        Ok(EmbeddingVerdict::holds(trace.0))
    } else if !nec {
        Ok(EmbeddingVerdict::fails(trace.0, witness))
    } else {
        trace.note(
            "sufficient_necessary_gap",
            "sufficient condition fails while the necessary one holds".into(),
        );
        Ok(EmbeddingVerdict::inconclusive(trace.0))
    }
}

/// Embedding between two spaces on the B scale.
pub fn decide_b_to_b(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<EmbeddingVerdict, OracleError> {
    check_pair(src, tgt, &[SeqScale::B])?;
    let mut trace = Trace::new();
    if src.elementary_into(tgt) {
        trace.note("elementary_monotone", "same (s, p, φ) and q1 ≤ q2".into());
        return Ok(EmbeddingVerdict::holds(trace.0));
    }
    let Some((pr1, pr2)) = profiles(src, tgt, &mut trace)? else {
        return Ok(EmbeddingVerdict::inconclusive(trace.0));
    };
    let rho = (src.p / tgt.p).min(1.0);
    let (lsb, lb, lg) = large_scale_bounded(&pr1, &pr2, rho);
    let c1 = trace.push(
        "large_scale_ratio_bounded",
        lsb,
        format!("ratio exponents at infinity: beta={lb:.6} gamma={lg:.6}"),
    );
    let (ab, ag) = alpha_asym(&pr1, &pr2, rho);
    let beta = tgt.s - src.s + ab + pr1.e0 * (1.0 - rho);
    let gamma = ag + pr1.a0 * (rho - 1.0);
    let suff = trace.push(
        "weighted_alpha_summable",
        ell_member(beta, gamma, tgt.q),
        format!("sequence exponents beta={beta:.6} gamma={gamma:.6}, tested in l_{}", tgt.q),
    );
    let nec = trace.push(
        "weighted_alpha_bounded",
        ell_member(beta, gamma, f64::INFINITY),
        format!("sequence exponents beta={beta:.6} gamma={gamma:.6}, tested in l_inf"),
    );
    if c1 && suff {
        return Ok(EmbeddingVerdict::holds(trace.0));
    }
    if !c1 || !nec {
        let witness = if fine_index_applicable(src, tgt) {
            plan(WitnessKind::FineIndex { s: src.s, q: tgt.q }, src.d, TargetKind::NormRatio)
        } else if single_coeff_diverges(src, tgt, &pr1, &pr2) {
            plan(WitnessKind::SingleCoeff, src.d, TargetKind::NormRatio)
        } else {
            None
        };
        return Ok(EmbeddingVerdict::fails(trace.0, witness));
    }
    trace.note(
        "sufficient_necessary_gap",
        "summability fails but boundedness holds; only the q2 = ∞ case is sharp".into(),
    );
    Ok(EmbeddingVerdict::inconclusive(trace.0))
}

/// How an N-scale space sits inside the B-scale space with the same
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NBRelation {
    /// The inclusion holds; the profile is unavailable so the finer
    /// classification is not.
    AlwaysEmbeds,
    /// The two spaces are equal (with equivalent quasi-norms).
    Coincide,
    /// The inclusion is strict.
    ProperInclusion,
}

/// Classify the always-valid inclusion of the N space into the B space.
pub fn decide_n_vs_b(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<NBRelation, OracleError> {
    if src.scale != SeqScale::N || tgt.scale != SeqScale::B {
        return Err(OracleError::Invalid("expected scales N into B".into()));
    }
    if !(feq(src.s, tgt.s) && feq(src.p, tgt.p) && le(src.q, tgt.q) && le(tgt.q, src.q))
        || src.phi != tgt.phi
        || src.d != tgt.d
    {
        return Err(OracleError::Invalid("the comparison needs identical parameters".into()));
    }
    if src.q.is_infinite() {
        return Ok(NBRelation::Coincide);
    }
    match (
        src.phi.limit_behavior(src.p, End::Zero),
        src.phi.limit_behavior(src.p, End::Infinity),
    ) {
        (Ok(l0), Ok(linf)) => {
            if l0 != LimitClass::Infinite && linf != LimitClass::Zero {
                Ok(NBRelation::Coincide)
            } else {
                Ok(NBRelation::ProperInclusion)
            }
        }
        (Err(WeightError::ProfileRequired), _) | (_, Err(WeightError::ProfileRequired)) => {
            Ok(NBRelation::AlwaysEmbeds)
        }
        (Err(e), _) | (_, Err(e)) => Err(e.into()),
    }
}

/// Fine-index interplay between the N and E scales at equal (s, p, φ).
pub fn decide_n_e_fine(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<EmbeddingVerdict, OracleError> {
    if src.d != tgt.d
        || !feq(src.s, tgt.s)
        || !feq(src.p, tgt.p)
        || src.phi != tgt.phi
    {
        return Err(OracleError::Invalid("the comparison needs equal s, p and weight".into()));
    }
    let mut trace = Trace::new();
    let e_like = |scale: SeqScale| matches!(scale, SeqScale::E | SeqScale::F);
    if src.scale == SeqScale::N && e_like(tgt.scale) {
        // The N space with fine index at most min(p, q) always embeds.
        let bound = tgt.p.min(tgt.q);
        let ok = trace.push(
            "fine_index_order",
            le(src.q, bound),
            format!("q0={} against min(p, q)={bound}", src.q),
        );
        return Ok(if ok {
            EmbeddingVerdict::holds(trace.0)
        } else {
            trace.note(
                "sufficient_necessary_gap",
                "no criterion is known above min(p, q) in this direction".into(),
            );
            EmbeddingVerdict::inconclusive(trace.0)
        });
    }
    if !(e_like(src.scale) && tgt.scale == SeqScale::N) {
        return Err(OracleError::Invalid("expected N against E at equal parameters".into()));
    }
    let q0 = tgt.q;
    let (l0, linf) = match (
        src.phi.limit_behavior(src.p, End::Zero),
        src.phi.limit_behavior(src.p, End::Infinity),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(WeightError::ProfileRequired), _) | (_, Err(WeightError::ProfileRequired)) => {
            trace.push("profile_required", false, "no asymptotic profile".into());
            return Ok(EmbeddingVerdict::inconclusive(trace.0));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };
    let regular = l0 != LimitClass::Infinite && linf != LimitClass::Zero;
    trace.push(
        "weight_limits_regular",
        regular,
        format!("limit classes of φ(t) t^(-d/p): zero end {l0:?}, infinity end {linf:?}"),
    );
    let ok = if regular {
        trace.push(
            "fine_index_order",
            le(src.p.max(src.q), q0),
            format!("q0={} against max(p, q)={}", q0, src.p.max(src.q)),
        )
    } else {
        trace.push("fine_index_order", q0.is_infinite(), format!("q0={q0} must be infinite"))
    };
    if ok {
        return Ok(EmbeddingVerdict::holds(trace.0));
    }
    let witness = if l0 == LimitClass::Infinite {
        plan(
            WitnessKind::LocalBlowup { s: src.s, p: src.p, phi: src.phi.clone() },
            src.d,
            TargetKind::NormRatio,
        )
    } else if linf == LimitClass::Zero {
        plan(
            WitnessKind::GlobalDecay {
                s: src.s,
                p: src.p,
                phi: src.phi.clone(),
                exponent: src.p,
            },
            src.d,
            TargetKind::NormRatio,
        )
    } else {
        None
    };
    Ok(EmbeddingVerdict::fails(trace.0, witness))
}

/// Embedding of a space into the bounded continuous functions.
pub fn decide_into_continuous(src: &SpaceSpec) -> Result<EmbeddingVerdict, OracleError> {
    let mut trace = Trace::new();
    let pr: Ends = match src.phi.profile() {
        Ok(p) => p.into(),
        Err(WeightError::ProfileRequired) => {
            trace.push("profile_required", false, "no asymptotic profile".into());
            return Ok(EmbeddingVerdict::inconclusive(trace.0));
        }
        Err(e) => return Err(e.into()),
    };
    // The dual weight sequence {2^{−js} φ(2^{−j})^{−1}} has exponents
    // β = e0 − s and γ = −a0.
    let beta = pr.e0 - src.s;
    let gamma = -pr.a0;
    match src.scale {
        SeqScale::N => {
            let q_prime = conj(src.q);
            let ok = trace.push(
                "dual_weight_summable",
                ell_member(beta, gamma, q_prime),
                format!("beta={beta:.6} gamma={gamma:.6}, tested in l_{q_prime}"),
            );
            Ok(if ok {
                EmbeddingVerdict::holds(trace.0)
            } else {
                EmbeddingVerdict::fails(trace.0, None)
            })
        }
        SeqScale::B | SeqScale::F => {
            let ok = trace.push(
                "dual_weight_summable",
                ell_member(beta, gamma, 1.0),
                format!("beta={beta:.6} gamma={gamma:.6}, tested in l_1"),
            );
            Ok(if ok {
                EmbeddingVerdict::holds(trace.0)
            } else {
                trace.note(
                    "sufficient_necessary_gap",
                    "only a sufficient condition is available on this scale".into(),
                );
                EmbeddingVerdict::inconclusive(trace.0)
            })
        }
        SeqScale::E => {
            let r_phi = src.phi.rphi()?;
            if r_phi.is_infinite() {
                trace.push(
                    "critical_exponent_finite",
                    false,
                    "the weight has no finite critical integrability".into(),
                );
                return Ok(EmbeddingVerdict::inconclusive(trace.0));
            }
            let dr = src.d as f64 / r_phi;
            let local_ok = src.phi.limit_behavior(r_phi, End::Zero)? != LimitClass::Infinite;
            let global_ok = src.phi.limit_behavior(r_phi, End::Infinity)? != LimitClass::Zero;
            trace.push(
                "zero_end_limit_finite",
                local_ok,
                format!("limit of φ(t) t^(-{dr:.6}) at zero is finite: {local_ok}"),
            );
            trace.push(
                "infinity_end_limit_positive",
                global_ok,
                format!("limit of φ(t) t^(-{dr:.6}) at infinity is positive: {global_ok}"),
            );
            let critical = feq(src.s, dr) && feq(src.p, r_phi) && src.p <= 1.0 + TOL;
            trace.push(
                "critical_smoothness",
                fgt(src.s, dr) || critical,
                format!("s={} against d/r_φ={dr}", src.s),
            );
            if local_ok && global_ok {
                return Ok(if fgt(src.s, dr) || critical {
                    EmbeddingVerdict::holds(trace.0)
                } else {
                    let witness = if feq(src.s, dr) && src.p < r_phi - TOL && r_phi <= 1.0 + TOL {
                        plan(WitnessKind::NestedAtoms, src.d, TargetKind::CoefficientSum)
                    } else {
                        None
                    };
                    EmbeddingVerdict::fails(trace.0, witness)
                });
            }
            if fgt(src.s, dr) || (critical && global_ok) {
                return Ok(EmbeddingVerdict::holds(trace.0));
            }
            let nec = trace.push(
                "dual_weight_summable",
                ell_member(beta, gamma, conj(src.p)),
                format!("beta={beta:.6} gamma={gamma:.6}, tested in l_{}", conj(src.p)),
            );
            if !nec {
                return Ok(EmbeddingVerdict::fails(trace.0, None));
            }
            trace.note(
                "sufficient_necessary_gap",
                "between the sufficient and necessary critical conditions".into(),
            );
            Ok(EmbeddingVerdict::inconclusive(trace.0))
        }
    }
}

/// Inclusion between two generalised Morrey spaces.
pub fn decide_morrey_inclusion(
    phi1: &WeightFunction,
    p1: f64,
    phi2: &WeightFunction,
    p2: f64,
) -> Result<EmbeddingVerdict, OracleError> {
    if phi1.dim() != phi2.dim() {
        return Err(OracleError::Invalid("dimension mismatch".into()));
    }
    let mut trace = Trace::new();
    // inf φ1 = 0 means φ1 vanishes at the zero end.
    match phi1.limit_behavior(f64::INFINITY, End::Zero) {
        Ok(LimitClass::Zero) => {
            trace.note("weight_vanishes_at_zero", "inf φ1 = 0".into());
        }
        Ok(_) => {
            trace.push(
                "weight_vanishes_at_zero",
                false,
                "inf φ1 > 0: the characterisation does not apply".into(),
            );
            return Ok(EmbeddingVerdict::inconclusive(trace.0));
        }
        Err(WeightError::ProfileRequired) => {
            trace.push("profile_required", false, "no asymptotic profile".into());
            return Ok(EmbeddingVerdict::inconclusive(trace.0));
        }
        Err(e) => return Err(e.into()),
    }
    let c1 = trace.push("integrability_order", p1 >= p2 - TOL, format!("p1={p1} p2={p2}"));
    let zero = WeightFunction::lex_compare_growth(phi2, phi1, 1.0, End::Zero)?;
    let inf = WeightFunction::lex_compare_growth(phi2, phi1, 1.0, End::Infinity)?;
    let (lo, hi) = {
        let (a1, b1) = phi1.scale_range();
        let (a2, b2) = phi2.scale_range();
        (a1.max(a2).max(-40), b1.min(b2).min(40))
    };
    let mut sampled: f64 = 0.0;
    for nu in lo..=hi {
        if let (Ok(n), Ok(d)) = (phi2.eval_scale(nu), phi1.eval_scale(nu)) {
            if d > 0.0 {
                sampled = sampled.max(n / d);
            }
        }
    }
    let c2 = trace.push(
        "weight_domination",
        zero != Ordering::Greater && inf != Ordering::Greater,
        format!(
            "φ2/φ1 growth at zero {zero:?}, at infinity {inf:?}; sampled sup {sampled:.6}"
        ),
    );
    Ok(if c1 && c2 {
        EmbeddingVerdict::holds(trace.0)
    } else {
        EmbeddingVerdict::fails(trace.0, None)
    })
}

/// Parameters of a classical Morrey-smoothness space on the F scale.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalParams {
    pub s: f64,
    pub p: f64,
    pub u: f64,
    pub q: f64,
}

/// Direct evaluation of the classical characterisation, used only to
/// cross-check [`decide_e_to_e`] on power weights.
pub fn classical_oracle_at2(
    d: usize,
    src: ClassicalParams,
    tgt: ClassicalParams,
) -> Result<EmbeddingVerdict, OracleError> {
    for c in [&src, &tgt] {
        if !(c.p > 0.0 && c.p < c.u && c.u.is_finite()) {
            return Err(OracleError::Invalid("need 0 < p < u < ∞".into()));
        }
    }
    let df = d as f64;
    let mut trace = Trace::new();
    let rho = (src.p / tgt.p).min(1.0);
    let c1 = trace.push(
        "integrability_ratio",
        src.u / tgt.u <= rho + TOL,
        format!("u1/u2={} against rho={rho}", src.u / tgt.u),
    );
    let d1 = src.s - df / src.u;
    let d2 = tgt.s - df / tgt.u;
    let alt = fgt(d1, d2)
        || (feq(d1, d2) && fgt(tgt.u, src.u))
        || (feq(src.s, tgt.s) && feq(src.u, tgt.u) && le(src.q, tgt.q));
    let c2 = trace.push(
        "differential_dimension_order",
        alt,
        format!("s1-d/u1={d1:.6} s2-d/u2={d2:.6} u1={} u2={} q1={} q2={}", src.u, tgt.u, src.q, tgt.q),
    );
    Ok(if c1 && c2 {
        EmbeddingVerdict::holds(trace.0)
    } else {
        EmbeddingVerdict::fails(trace.0, None)
    })
}

/// Embedding where one side is a classical space, encoded with the matching
/// power weight; routes through the E-scale procedure.
pub fn decide_cross_classical(
    src: &SpaceSpec,
    tgt: &SpaceSpec,
) -> Result<EmbeddingVerdict, OracleError> {
    let is_classical = |spec: &SpaceSpec| {
        matches!(spec.phi.family(), crate::weights::WeightFamily::Power { u } if feq(*u, spec.p))
    };
    if !is_classical(src) && !is_classical(tgt) {
        return Err(OracleError::Invalid(
            "expected at least one side with φ = power(p)".into(),
        ));
    }
    let as_e = |spec: &SpaceSpec| SpaceSpec { scale: SeqScale::E, ..spec.clone() };
    decide_e_to_e(&as_e(src), &as_e(tgt))
}

/// Dispatch an embedding query to the matching pairwise procedure.
pub fn decide(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<EmbeddingVerdict, OracleError> {
    match (src.scale, tgt.scale) {
        (SeqScale::N, SeqScale::N) => decide_n_to_n(src, tgt),
        (SeqScale::E | SeqScale::F, SeqScale::E | SeqScale::F) => decide_e_to_e(src, tgt),
        (SeqScale::B, SeqScale::B) => decide_b_to_b(src, tgt),
        (SeqScale::N, SeqScale::B) => {
            let relation = decide_n_vs_b(src, tgt)?;
            let mut trace = Trace::new();
            trace.note("scale_inclusion", format!("relation: {relation:?}"));
            Ok(EmbeddingVerdict::holds(trace.0))
        }
        (SeqScale::N, SeqScale::E | SeqScale::F) | (SeqScale::E | SeqScale::F, SeqScale::N) => {
            decide_n_e_fine(src, tgt)
        }
        (a, b) => Err(OracleError::Invalid(format!(
            "no decision procedure for scales {a:?} into {b:?}"
        ))),
    }
}

/// The boundedness form of the same-or-coarser integrability test, used to
/// cross-check the running-supremum form.
#[cfg(test)]
pub(crate) fn e_case1_form(src: &SpaceSpec, tgt: &SpaceSpec) -> Result<Decision, OracleError> {
    let pr1: Ends = src.phi.profile()?.into();
    let pr2: Ends = tgt.phi.profile()?.into();
    let (lsb, _, _) = large_scale_bounded(&pr1, &pr2, 1.0);
    let pointwise = lex_sign(tgt.s - src.s + pr1.e0 - pr2.e0, pr2.a0 - pr1.a0)
        != Ordering::Greater;
    let sign = fgt(src.s, tgt.s) || (feq(src.s, tgt.s) && le(src.q, tgt.q));
    Ok(if lsb && pointwise && sign { Decision::Holds } else { Decision::Fails })
}
