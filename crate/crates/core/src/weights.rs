//! Weight functions on (0, ∞) and the admissibility class used by the
//! Morrey-type scales: φ non-decreasing with t^{-d/p} φ(t) non-increasing.
//!
//! All weights are normalised to φ(1) = 1 at construction; every verdict in
//! this module is invariant under positive rescaling of the raw data.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the dyadic sampling grid used for numeric cross-checks.
pub const SAMPLE_RANGE: i64 = 40;

/// Wider grid used when hunting for violating pairs.
const WITNESS_RANGE: i64 = 200;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WeightError {
    #[error("tabulated weight queried outside its declared range (level {0})")]
    TabulatedRange(i64),
    #[error("asymptotic profile required for this operation but not declared")]
    ProfileRequired,
    #[error("invalid weight parameter: {0}")]
    InvalidParam(String),
}

/// Declared two-ended asymptotic law: φ(t) ≍ t^e0 (log(e + 1/t))^a0 as t → 0
/// and φ(t) ≍ t^einf (log(e + t))^ainf as t → ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticProfile {
    pub e0: f64,
    pub a0: f64,
    pub einf: f64,
    pub ainf: f64,
}

/// Parametric weight families. `u`, `v` may be `f64::INFINITY` (flat piece).
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// φ(t) = t^{d/u}
    Power { u: f64 },
    /// φ(t) = t^{d/u} for t ≤ 1, t^{d/v} for t > 1
    PiecewisePower { u: f64, v: f64 },
    /// φ(t) = t^{d/p0} (ln(L + t))^a with a ≤ 0, L ≥ e
    PowerLog { p0: f64, a: f64, big_l: f64 },
    /// φ(t) = log2(1 + t) for t < 1, t for t ≥ 1
    LogExample,
    /// Dyadic samples v_ν = φ(2^ν) for ν in [nu_min, nu_max], with an
    /// optional declared asymptotic law outside the table.
    Tabulated {
        nu_min: i64,
        nu_max: i64,
        values: Vec<f64>,
        profile: Option<AsymptoticProfile>,
    },
}

/// A normalised weight function in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    family: WeightFamily,
    d: usize,
    /// 1 / raw(1); folded into every evaluation so that φ(1) = 1.
    norm_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GpVerdict {
    Member,
    /// A sampled pair t < s with either φ(t) > φ(s) (monotonicity failure)
    /// or t^{-d/p} φ(t) < s^{-d/p} φ(s) (decay failure).
    NotMember { t: f64, s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum IntcVerdict {
    /// φ(t)/φ(r) ≥ (1/c) (t/r)^eps for all t ≥ r > 0.
    Holds { eps: f64, c: f64 },
    /// A pair t ≥ r exhibiting a flat stretch: φ(t)/φ(r) ≈ 1 with t/r large.
    Fails { t: f64, r: f64 },
}

/// Classification of lim φ(t) t^{-d/p} at one end of (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitClass {
    Zero,
    PositiveFinite,
    Infinite,
}

/// Which end of (0, ∞) an asymptotic statement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Zero,
    Infinity,
}

/// Lexicographic sign of a (power exponent, log exponent) pair.
pub(crate) fn lex_sign(e: f64, a: f64) -> Ordering {
    const TOL: f64 = 1e-12;
    if e > TOL {
        Ordering::Greater
    } else if e < -TOL {
        Ordering::Less
    } else if a > TOL {
        Ordering::Greater
    } else if a < -TOL {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl WeightFunction {
    pub fn new(family: WeightFamily, d: usize) -> Result<Self, WeightError> {
        if d == 0 {
            return Err(WeightError::InvalidParam("dimension must be positive".into()));
        }
        match &family {
            WeightFamily::Power { u } => {
                if !(*u > 0.0) {
                    return Err(WeightError::InvalidParam("power index u must be positive".into()));
                }
            }
            WeightFamily::PiecewisePower { u, v } => {
                if !(*u > 0.0) || !(*v > 0.0) {
                    return Err(WeightError::InvalidParam("piecewise indices must be positive".into()));
                }
            }
            WeightFamily::PowerLog { p0, a, big_l } => {
                if !(*p0 > 0.0) || p0.is_infinite() {
                    return Err(WeightError::InvalidParam("p0 must be finite positive".into()));
                }
                if *a > 0.0 {
                    return Err(WeightError::InvalidParam("log exponent a must be ≤ 0".into()));
                }
                if *big_l < std::f64::consts::E {
                    return Err(WeightError::InvalidParam("L must be ≥ e".into()));
                }
            }
            WeightFamily::LogExample => {}
            WeightFamily::Tabulated { nu_min, nu_max, values, .. } => {
                if nu_min > nu_max || values.len() != (nu_max - nu_min + 1) as usize {
                    return Err(WeightError::InvalidParam("table length does not match range".into()));
                }
                if !(*nu_min <= 0 && 0 <= *nu_max) {
                    return Err(WeightError::InvalidParam("table range must contain level 0".into()));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(WeightError::InvalidParam("table values must be finite positive".into()));
                }
            }
        }
        let mut wf = WeightFunction { family, d, norm_factor: 1.0 };
        let raw1 = wf.eval_raw(1.0)?;
        wf.norm_factor = 1.0 / raw1;
        Ok(wf)
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn df(&self) -> f64 {
        self.d as f64
    }

    /// d/u with u possibly infinite.
    fn exp_of(&self, u: f64) -> f64 {
        if u.is_infinite() {
            0.0
        } else {
            self.df() / u
        }
    }

    fn eval_raw(&self, t: f64) -> Result<f64, WeightError> {
        match &self.family {
            WeightFamily::Power { u } => Ok(t.powf(self.exp_of(*u))),
            WeightFamily::PiecewisePower { u, v } => {
                let e = if t <= 1.0 { self.exp_of(*u) } else { self.exp_of(*v) };
                Ok(t.powf(e))
            }
            WeightFamily::PowerLog { p0, a, big_l } => {
                Ok(t.powf(self.df() / p0) * (big_l + t).ln().powf(*a))
            }
            WeightFamily::LogExample => {
                if t < 1.0 {
                    Ok((1.0 + t).ln() / std::f64::consts::LN_2)
                } else {
                    Ok(t)
                }
            }
            WeightFamily::Tabulated { nu_min, nu_max, values, .. } => {
                let nu = t.log2();
                let nu_round = nu.round();
                if (nu - nu_round).abs() > 1e-9 {
                    return Err(WeightError::InvalidParam(format!(
                        "tabulated weight only defined on dyadic points, got t = {t}"
                    )));
                }
                let nu = nu_round as i64;
                if nu < *nu_min || nu > *nu_max {
                    return Err(WeightError::TabulatedRange(nu));
                }
                Ok(values[(nu - nu_min) as usize])
            }
        }
    }

    /// φ(t), normalised.
    pub fn eval(&self, t: f64) -> Result<f64, WeightError> {
        Ok(self.eval_raw(t)? * self.norm_factor)
    }

    /// φ(2^{-level}) — the evaluation used throughout the norm kernels.
    pub fn eval_level(&self, level: i64) -> Result<f64, WeightError> {
        self.eval(2f64.powi(-(level as i32)))
    }

    /// φ(2^ν) with ν counted towards +∞ for large cubes.
    pub fn eval_scale(&self, nu: i64) -> Result<f64, WeightError> {
        self.eval(2f64.powi(nu as i32))
    }

    /// Range of dyadic scales ν (t = 2^ν) on which this weight can be
    /// evaluated; unbounded families get the widest useful window.
    pub fn scale_range(&self) -> (i64, i64) {
        match &self.family {
            WeightFamily::Tabulated { nu_min, nu_max, .. } => (*nu_min, *nu_max),
            _ => (-WITNESS_RANGE, WITNESS_RANGE),
        }
    }

    /// The two-ended asymptotic law of the (normalised) weight.
    pub fn profile(&self) -> Result<AsymptoticProfile, WeightError> {
        match &self.family {
            WeightFamily::Power { u } => {
                let e = self.exp_of(*u);
                Ok(AsymptoticProfile { e0: e, a0: 0.0, einf: e, ainf: 0.0 })
            }
            WeightFamily::PiecewisePower { u, v } => Ok(AsymptoticProfile {
                e0: self.exp_of(*u),
                a0: 0.0,
                einf: self.exp_of(*v),
                ainf: 0.0,
            }),
            // ln(L + t) tends to the constant ln L at zero and behaves like
            // log(e + t) at infinity.
            WeightFamily::PowerLog { p0, a, .. } => Ok(AsymptoticProfile {
                e0: self.df() / p0,
                a0: 0.0,
                einf: self.df() / p0,
                ainf: *a,
            }),
            WeightFamily::LogExample => {
                Ok(AsymptoticProfile { e0: 1.0, a0: 0.0, einf: 1.0, ainf: 0.0 })
            }
            WeightFamily::Tabulated { profile, .. } => profile.ok_or(WeightError::ProfileRequired),
        }
    }

    /// Membership in the admissibility class for integrability p.
    pub fn check_gp(&self, p: f64) -> Result<GpVerdict, WeightError> {
        let member = self.gp_analytic(p)?;
        if member {
            Ok(GpVerdict::Member)
        } else {
            let (t, s) = self
                .find_gp_violation(p)
                .unwrap_or((1.0, 2.0));
            Ok(GpVerdict::NotMember { t, s })
        }
    }

    fn gp_analytic(&self, p: f64) -> Result<bool, WeightError> {
        let dp = self.df() / p;
        match &self.family {
            WeightFamily::Power { u } => Ok(self.exp_of(*u) <= dp + 1e-12),
            WeightFamily::PiecewisePower { u, v } => {
                Ok(self.exp_of(*u) <= dp + 1e-12 && self.exp_of(*v) <= dp + 1e-12)
            }
            WeightFamily::PowerLog { p0, a, big_l } => {
                // Monotonicity of t^{d/p0} (ln(L+t))^a reduces to
                // h(t) = (d/p0)(L+t)ln(L+t) + a t ≥ 0 on (0, ∞); h is convex
                // with a unique interior minimum when h'(0) < 0.
                let c = self.df() / p0;
                let nondecreasing = {
                    let h = |t: f64| c * (big_l + t) * (big_l + t).ln() + a * t;
                    let t_star = (-a / c - 1.0).exp() - big_l;
                    if t_star <= 0.0 {
                        true
                    } else {
                        h(t_star) >= -1e-12
                    }
                };
                Ok(nondecreasing && p <= *p0 + 1e-12)
            }
            WeightFamily::LogExample => Ok(p <= self.df() + 1e-12),
            WeightFamily::Tabulated { nu_min, nu_max, values, profile } => {
                // The table is the function: decide on the declared grid,
                // then extend by the profile when one is present.
                for w in values.windows(2) {
                    if w[1] < w[0] * (1.0 - 1e-12) {
                        return Ok(false);
                    }
                }
                for nu in *nu_min..*nu_max {
                    let lo = values[(nu - nu_min) as usize] * 2f64.powf(-(nu as f64) * dp);
                    let hi = values[(nu + 1 - nu_min) as usize] * 2f64.powf(-((nu + 1) as f64) * dp);
                    if hi > lo * (1.0 + 1e-12) {
                        return Ok(false);
                    }
                }
                if let Some(pr) = profile {
                    let incr0 = lex_sign(pr.e0, -pr.a0) >= Ordering::Equal;
                    let incr_inf = lex_sign(pr.einf, pr.ainf) >= Ordering::Equal;
                    let decay0 = lex_sign(dp - pr.e0, pr.a0) >= Ordering::Equal;
                    let decay_inf = lex_sign(dp - pr.einf, -pr.ainf) >= Ordering::Equal;
                    Ok(incr0 && incr_inf && decay0 && decay_inf)
                } else {
                    Ok(true)
                }
            }
        }
    }

    /// Scan dyadic pairs for a violation of either defining inequality.
    fn find_gp_violation(&self, p: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.scale_range();
        let dp = self.df() / p;
        for gap in 1..=4i64 {
            for nu in lo..=(hi - gap) {
                let t = 2f64.powi(nu as i32);
                let s = 2f64.powi((nu + gap) as i32);
                let (ft, fs) = match (self.eval(t), self.eval(s)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue,
                };
                if ft > fs * (1.0 + 1e-9) {
                    return Some((t, s));
                }
                if fs * s.powf(-dp) > ft * t.powf(-dp) * (1.0 + 1e-9) {
                    return Some((t, s));
                }
            }
        }
        None
    }

    /// Numeric cross-check of [`check_gp`] on the dyadic grid ν ∈ [-40, 40].
    /// Returns true when the sampled data is consistent with the verdict.
    pub fn crosscheck_gp(&self, p: f64, verdict: &GpVerdict) -> bool {
        let (lo, hi) = self.scale_range();
        let (lo, hi) = (lo.max(-SAMPLE_RANGE), hi.min(SAMPLE_RANGE));
        let violation = {
            let dp = self.df() / p;
            let mut found = false;
            for nu in lo..hi {
                let t = 2f64.powi(nu as i32);
                let s = 2f64.powi((nu + 1) as i32);
                if let (Ok(ft), Ok(fs)) = (self.eval(t), self.eval(s)) {
                    if ft > fs * (1.0 + 1e-9) || fs * s.powf(-dp) > ft * t.powf(-dp) * (1.0 + 1e-9) {
                        found = true;
                        break;
                    }
                }
            }
            found
        };
        match verdict {
            GpVerdict::Member => !violation,
            // A sampled violation may lie outside the window; only the
            // converse (claimed member with a sampled violation) is a bug.
            GpVerdict::NotMember { t, s } => {
                if let (Ok(ft), Ok(fs)) = (self.eval(*t), self.eval(*s)) {
                    let dp = self.df() / p;
                    ft > fs * (1.0 + 1e-12)
                        || fs * s.powf(-dp) > ft * t.powf(-dp) * (1.0 + 1e-12)
                } else {
                    false
                }
            }
        }
    }

    /// Polynomial lower-growth condition: ∃ ε, c with
    /// φ(t)/φ(r) ≥ (1/c)(t/r)^ε for all t ≥ r.
    pub fn check_intc(&self) -> Result<IntcVerdict, WeightError> {
        match &self.family {
            WeightFamily::Power { u } => {
                if u.is_infinite() {
                    Ok(IntcVerdict::Fails { t: 2f64.powi(40), r: 1.0 })
                } else {
                    Ok(IntcVerdict::Holds { eps: self.exp_of(*u), c: 1.0 })
                }
            }
            WeightFamily::PiecewisePower { u, v } => {
                if u.is_infinite() {
                    // flat on (0, 1]
                    Ok(IntcVerdict::Fails { t: 0.5, r: 2f64.powi(-40) })
                } else if v.is_infinite() {
                    // flat on [1, ∞)
                    Ok(IntcVerdict::Fails { t: 2f64.powi(40), r: 2.0 })
                } else {
                    let eps = self.exp_of(*u).min(self.exp_of(*v));
                    Ok(IntcVerdict::Holds { eps, c: 1.0 })
                }
            }
            WeightFamily::PowerLog { p0, .. } => {
                let eps = 0.5 * self.df() / p0;
                Ok(IntcVerdict::Holds { eps, c: self.intc_constant(eps) })
            }
            WeightFamily::LogExample => {
                // ln(1+t) ≥ t ln 2 on (0, 1] makes c = 1/ln 2 admissible.
                Ok(IntcVerdict::Holds { eps: 1.0, c: 1.0 / std::f64::consts::LN_2 })
            }
            WeightFamily::Tabulated { .. } => {
                let pr = self.profile()?;
                let lo = lex_sign(pr.e0, pr.a0);
                let hi = lex_sign(pr.einf, pr.ainf);
                if pr.e0 > 0.0 && pr.einf > 0.0 {
                    let eps = 0.5 * pr.e0.min(pr.einf);
                    Ok(IntcVerdict::Holds { eps, c: self.intc_constant(eps) })
                } else if lo <= Ordering::Equal {
                    Ok(IntcVerdict::Fails { t: 0.5, r: 2f64.powi(-40) })
                } else {
                    debug_assert!(hi <= Ordering::Equal || pr.einf <= 0.0);
                    Ok(IntcVerdict::Fails { t: 2f64.powi(40), r: 2.0 })
                }
            }
        }
    }

    /// Empirical admissible constant for a given ε: maximise
    /// (r/t)^{-ε} φ(r)/φ(t) over dyadic pairs and pad by a factor 2.
    fn intc_constant(&self, eps: f64) -> f64 {
        let (lo, hi) = self.scale_range();
        let mut worst = 1.0f64;
        for nr in lo..=hi {
            for nt in nr..=hi {
                if let (Ok(fr), Ok(ft)) = (self.eval_scale(nr), self.eval_scale(nt)) {
                    let need = 2f64.powf(eps * (nt - nr) as f64) * fr / ft;
                    worst = worst.max(need);
                }
            }
        }
        worst * 2.0
    }

    /// Supremum of the local admissibility range on (0, 1): the largest p
    /// such that the weight is admissible near zero; ∞ when the weight is
    /// constant near zero.
    pub fn rphi(&self) -> Result<f64, WeightError> {
        let pr = self.profile()?;
        if pr.e0 <= 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(self.df() / pr.e0)
        }
    }

    /// Classify lim φ(t) t^{-d/p} at the requested end.
    pub fn limit_behavior(&self, p: f64, end: End) -> Result<LimitClass, WeightError> {
        let pr = self.profile()?;
        let dp = self.df() / p;
        Ok(match end {
            // t^{e0 - d/p} (log(e+1/t))^{a0} as t → 0
            End::Zero => match lex_sign(pr.e0 - dp, -pr.a0) {
                Ordering::Greater => LimitClass::Zero,
                Ordering::Less => LimitClass::Infinite,
                Ordering::Equal => LimitClass::PositiveFinite,
            },
            // t^{einf - d/p} (log(e+t))^{ainf} as t → ∞
            End::Infinity => match lex_sign(pr.einf - dp, pr.ainf) {
                Ordering::Greater => LimitClass::Infinite,
                Ordering::Less => LimitClass::Zero,
                Ordering::Equal => LimitClass::PositiveFinite,
            },
        })
    }

    /// Ordering of the growth of φ2 against φ1^ρ at one end:
    /// `Greater` means φ2/φ1^ρ → ∞ there, `Less` means → 0,
    /// `Equal` means the ratio is bounded both ways.
    /// Pointwise geometric interpolation φ1(t)^{1-θ} φ0(t)^θ. Exact for two
    /// pure powers; otherwise tabulated on the common dyadic range, with the
    /// interpolated asymptotic law attached when both factors declare one.
    pub fn geometric_mean(
        phi1: &WeightFunction,
        phi0: &WeightFunction,
        theta: f64,
    ) -> Result<WeightFunction, WeightError> {
        if phi1.d != phi0.d {
            return Err(WeightError::InvalidParam("dimension mismatch".into()));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(WeightError::InvalidParam("θ must lie in [0, 1]".into()));
        }
        if let (WeightFamily::Power { u: u1 }, WeightFamily::Power { u: u0 }) =
            (&phi1.family, &phi0.family)
        {
            let e = (1.0 - theta) * phi1.exp_of(*u1) + theta * phi0.exp_of(*u0);
            let u = if e == 0.0 { f64::INFINITY } else { phi1.df() / e };
            return WeightFunction::new(WeightFamily::Power { u }, phi1.d);
        }
        let (a1, b1) = phi1.scale_range();
        let (a0, b0) = phi0.scale_range();
        let (nu_min, nu_max) = (a1.max(a0), b1.min(b0));
        if nu_min > 0 || nu_max < 0 {
            return Err(WeightError::InvalidParam("no common dyadic range".into()));
        }
        let values: Result<Vec<f64>, WeightError> = (nu_min..=nu_max)
            .map(|nu| {
                Ok(phi1.eval_scale(nu)?.powf(1.0 - theta) * phi0.eval_scale(nu)?.powf(theta))
            })
            .collect();
        let profile = match (phi1.profile(), phi0.profile()) {
            (Ok(pr1), Ok(pr0)) => Some(AsymptoticProfile {
                e0: (1.0 - theta) * pr1.e0 + theta * pr0.e0,
                a0: (1.0 - theta) * pr1.a0 + theta * pr0.a0,
                einf: (1.0 - theta) * pr1.einf + theta * pr0.einf,
                ainf: (1.0 - theta) * pr1.ainf + theta * pr0.ainf,
            }),
            _ => None,
        };
        WeightFunction::new(
            WeightFamily::Tabulated { nu_min, nu_max, values: values?, profile },
            phi1.d,
        )
    }

    pub fn lex_compare_growth(
        phi2: &WeightFunction,
        phi1: &WeightFunction,
        rho: f64,
        end: End,
    ) -> Result<Ordering, WeightError> {
        let p2 = phi2.profile()?;
        let p1 = phi1.profile()?;
        Ok(match end {
            End::Zero => {
                // ratio ~ t^{Δe} log(1/t)^{Δa}, t → 0: blows up when Δe < 0.
                let de = p2.e0 - rho * p1.e0;
                let da = p2.a0 - rho * p1.a0;
                lex_sign(-de, da)
            }
            End::Infinity => {
                let de = p2.einf - rho * p1.einf;
                let da = p2.ainf - rho * p1.ainf;
                lex_sign(de, da)
            }
        })
    }
}

// ---------------------------------------------------------------------------
// JSON wire format: {"family": "...", "params": {...}, "d": n}
// ---------------------------------------------------------------------------

/// Extended positive real: a JSON number or the string "inf".
pub(crate) mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightWire {
    family: String,
    params: serde_json::Value,
    d: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerParams {
    #[serde(with = "ext_real")]
    u: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecewiseParams {
    #[serde(with = "ext_real")]
    u: f64,
    #[serde(with = "ext_real")]
    v: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerLogParams {
    p0: f64,
    a: f64,
    #[serde(rename = "L")]
    big_l: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedParams {
    nu_min: i64,
    nu_max: i64,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profile: Option<AsymptoticProfile>,
}

impl Serialize for WeightFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        let (family, params) = match &self.family {
            WeightFamily::Power { u } => (
                "power",
                serde_json::to_value(PowerParams { u: *u }).map_err(S::Error::custom)?,
            ),
            WeightFamily::PiecewisePower { u, v } => (
                "piecewise",
                serde_json::to_value(PiecewiseParams { u: *u, v: *v }).map_err(S::Error::custom)?,
            ),
            WeightFamily::PowerLog { p0, a, big_l } => (
                "powerlog",
                serde_json::to_value(PowerLogParams { p0: *p0, a: *a, big_l: *big_l })
                    .map_err(S::Error::custom)?,
            ),
            WeightFamily::LogExample => ("logexample", serde_json::json!({})),
            WeightFamily::Tabulated { nu_min, nu_max, values, profile } => (
                "tabulated",
                serde_json::to_value(TabulatedParams {
                    nu_min: *nu_min,
                    nu_max: *nu_max,
                    values: values.clone(),
                    profile: *profile,
                })
                .map_err(S::Error::custom)?,
            ),
        };
        WeightWire { family: family.into(), params, d: self.d }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = WeightWire::deserialize(d)?;
        let family = match wire.family.as_str() {
            "power" => {
                let p: PowerParams = serde_json::from_value(wire.params).map_err(D::Error::custom)?;
                WeightFamily::Power { u: p.u }
            }
            "piecewise" => {
                let p: PiecewiseParams =
                    serde_json::from_value(wire.params).map_err(D::Error::custom)?;
                WeightFamily::PiecewisePower { u: p.u, v: p.v }
            }
            "powerlog" => {
                let p: PowerLogParams =
                    serde_json::from_value(wire.params).map_err(D::Error::custom)?;
                WeightFamily::PowerLog { p0: p.p0, a: p.a, big_l: p.big_l }
            }
            "logexample" => WeightFamily::LogExample,
            "tabulated" => {
                let p: TabulatedParams =
                    serde_json::from_value(wire.params).map_err(D::Error::custom)?;
                WeightFamily::Tabulated {
                    nu_min: p.nu_min,
                    nu_max: p.nu_max,
                    values: p.values,
                    profile: p.profile,
                }
            }
            other => return Err(D::Error::custom(format!("unknown weight family {other:?}"))),
        };
        WeightFunction::new(family, wire.d).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(u: f64, d: usize) -> WeightFunction {
        WeightFunction::new(WeightFamily::Power { u }, d).unwrap()
    }

    #[test]
    fn eval_closed_forms() {
        let w = power(2.0, 1);
        assert!((w.eval_level(3).unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
        let pw = WeightFunction::new(WeightFamily::PiecewisePower { u: 2.0, v: 4.0 }, 1).unwrap();
        // level -2 is scale t = 4
        assert!((pw.eval_level(-2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let lg = WeightFunction::new(WeightFamily::LogExample, 1).unwrap();
        assert_eq!(lg.eval(1.0).unwrap(), 1.0);
        assert!((lg.eval(0.5).unwrap() - (1.5f64.ln() / std::f64::consts::LN_2)).abs() < 1e-15);
    }

    #[test]
    fn tabulated_range_error() {
        let w = WeightFunction::new(
            WeightFamily::Tabulated {
                nu_min: -2,
                nu_max: 2,
                values: vec![0.25, 0.5, 1.0, 2.0, 4.0],
                profile: None,
            },
            1,
        )
        .unwrap();
        assert!(w.eval_level(0).is_ok());
        assert!(matches!(w.eval_level(5), Err(WeightError::TabulatedRange(-5))));
    }

    #[test]
    fn power_membership_threshold() {
        // t^{0.4} in d = 1 is admissible exactly for p ≤ 1/0.4.
        let w = power(2.5, 1);
        assert_eq!(w.check_gp(2.0).unwrap(), GpVerdict::Member);
        assert_eq!(w.check_gp(2.5).unwrap(), GpVerdict::Member);
        assert!(matches!(w.check_gp(3.0).unwrap(), GpVerdict::NotMember { .. }));
    }

    #[test]
    fn piecewise_membership_is_min_index() {
        let w = WeightFunction::new(WeightFamily::PiecewisePower { u: 2.0, v: 4.0 }, 1).unwrap();
        assert_eq!(w.check_gp(2.0).unwrap(), GpVerdict::Member);
        assert!(matches!(w.check_gp(3.0).unwrap(), GpVerdict::NotMember { .. }));
    }

    #[test]
    fn powerlog_membership() {
        // large L: admissible up to p0
        let w = WeightFunction::new(
            WeightFamily::PowerLog { p0: 2.0, a: -1.0, big_l: 1e6 },
            1,
        )
        .unwrap();
        assert_eq!(w.check_gp(2.0).unwrap(), GpVerdict::Member);
        assert!(matches!(w.check_gp(2.5).unwrap(), GpVerdict::NotMember { .. }));
        // small power with L = e: monotonicity fails, no admissible p
        let bad = WeightFunction::new(
            WeightFamily::PowerLog { p0: 10.0, a: -1.0, big_l: std::f64::consts::E },
            1,
        )
        .unwrap();
        let v = bad.check_gp(10.0).unwrap();
        assert!(matches!(v, GpVerdict::NotMember { .. }));
        assert!(bad.crosscheck_gp(10.0, &v));
    }

    #[test]
    fn log_example_membership_and_rphi() {
        for d in [1usize, 2, 3] {
            let w = WeightFunction::new(WeightFamily::LogExample, d).unwrap();
            assert_eq!(w.check_gp(d as f64).unwrap(), GpVerdict::Member);
            assert!(matches!(w.check_gp(d as f64 + 0.5).unwrap(), GpVerdict::NotMember { .. }));
            assert_eq!(w.rphi().unwrap(), d as f64);
        }
    }

    #[test]
    fn membership_monotone_in_p() {
        let ws = [
            power(2.0, 1),
            WeightFunction::new(WeightFamily::PiecewisePower { u: 1.5, v: 3.0 }, 2).unwrap(),
            WeightFunction::new(WeightFamily::PowerLog { p0: 2.0, a: -0.5, big_l: 100.0 }, 1)
                .unwrap(),
        ];
        for w in &ws {
            for p in [0.5, 1.0, 1.5, 2.0, 3.0, 5.0] {
                if matches!(w.check_gp(p).unwrap(), GpVerdict::Member) {
                    for q in [0.25, 0.5, 0.9] {
                        assert!(matches!(w.check_gp(p * q).unwrap(), GpVerdict::Member));
                    }
                }
            }
        }
    }

    #[test]
    fn crosscheck_agrees_on_fixtures() {
        let cases: Vec<(WeightFunction, f64)> = vec![
            (power(2.0, 1), 1.0),
            (power(2.0, 1), 2.0),
            (power(2.0, 1), 4.0),
            (WeightFunction::new(WeightFamily::PiecewisePower { u: 2.0, v: 4.0 }, 1).unwrap(), 2.0),
            (WeightFunction::new(WeightFamily::PiecewisePower { u: 2.0, v: 4.0 }, 1).unwrap(), 3.0),
            (WeightFunction::new(WeightFamily::LogExample, 2).unwrap(), 2.0),
            (WeightFunction::new(WeightFamily::LogExample, 2).unwrap(), 3.0),
        ];
        for (w, p) in cases {
            let v = w.check_gp(p).unwrap();
            assert!(w.crosscheck_gp(p, &v), "crosscheck failed for {w:?} at p = {p}");
        }
    }

    #[test]
    fn intc_closed_forms() {
        let w = power(2.0, 1);
        assert_eq!(w.check_intc().unwrap(), IntcVerdict::Holds { eps: 0.5, c: 1.0 });
        let flat = power(f64::INFINITY, 1);
        assert!(matches!(flat.check_intc().unwrap(), IntcVerdict::Fails { .. }));
        let tail = WeightFunction::new(
            WeightFamily::PiecewisePower { u: 2.0, v: f64::INFINITY },
            1,
        )
        .unwrap();
        match tail.check_intc().unwrap() {
            IntcVerdict::Fails { t, r } => assert!(t > r && r >= 1.0),
            v => panic!("expected failure on flat tail, got {v:?}"),
        }
        let lg = WeightFunction::new(WeightFamily::LogExample, 1).unwrap();
        match lg.check_intc().unwrap() {
            IntcVerdict::Holds { eps, c } => {
                assert_eq!(eps, 1.0);
                // verify admissibility on a dyadic grid
                for nr in -20..=20i64 {
                    for nt in nr..=20i64 {
                        let lhs = lg.eval_scale(nt).unwrap() / lg.eval_scale(nr).unwrap();
                        let rhs = 2f64.powf((nt - nr) as f64 * eps) / c;
                        assert!(lhs >= rhs * (1.0 - 1e-12));
                    }
                }
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn intc_constant_is_admissible_for_powerlog() {
        let w = WeightFunction::new(WeightFamily::PowerLog { p0: 2.0, a: -1.5, big_l: 10.0 }, 1)
            .unwrap();
        match w.check_intc().unwrap() {
            IntcVerdict::Holds { eps, c } => {
                for nr in -40..=40i64 {
                    for nt in nr..=40i64 {
                        let lhs = w.eval_scale(nt).unwrap() / w.eval_scale(nr).unwrap();
                        let rhs = 2f64.powf((nt - nr) as f64 * eps) / c;
                        assert!(lhs >= rhs * (1.0 - 1e-12), "nr={nr} nt={nt}");
                    }
                }
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn rphi_fixtures() {
        assert_eq!(power(2.0, 1).rphi().unwrap(), 2.0);
        assert_eq!(power(f64::INFINITY, 1).rphi().unwrap(), f64::INFINITY);
        let pw = WeightFunction::new(WeightFamily::PiecewisePower { u: 2.0, v: 4.0 }, 1).unwrap();
        assert_eq!(pw.rphi().unwrap(), 2.0);
        let pl = WeightFunction::new(WeightFamily::PowerLog { p0: 3.0, a: -1.0, big_l: 50.0 }, 1)
            .unwrap();
        assert_eq!(pl.rphi().unwrap(), 3.0);
        let pw_flat =
            WeightFunction::new(WeightFamily::PiecewisePower { u: f64::INFINITY, v: 2.0 }, 1)
                .unwrap();
        assert_eq!(pw_flat.rphi().unwrap(), f64::INFINITY);
    }

    #[test]
    fn limit_behavior_fixtures() {
        let lg = WeightFunction::new(WeightFamily::LogExample, 1).unwrap();
        assert_eq!(lg.limit_behavior(1.0, End::Zero).unwrap(), LimitClass::PositiveFinite);
        let w = power(4.0, 1);
        assert_eq!(w.limit_behavior(2.0, End::Zero).unwrap(), LimitClass::Infinite);
        assert_eq!(w.limit_behavior(2.0, End::Infinity).unwrap(), LimitClass::Zero);
        assert_eq!(w.limit_behavior(4.0, End::Zero).unwrap(), LimitClass::PositiveFinite);
    }

    #[test]
    fn lex_compare_growth_fixture() {
        let w1 = power(2.0, 1);
        let w2 = power(4.0, 1);
        assert_eq!(
            WeightFunction::lex_compare_growth(&w2, &w1, 1.0, End::Infinity).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            WeightFunction::lex_compare_growth(&w2, &w1, 1.0, End::Zero).unwrap(),
            Ordering::Greater
        );
    }

    #[test]
    fn normalisation_invariance() {
        let raw = vec![3.0, 6.0, 12.0];
        let scaled: Vec<f64> = raw.iter().map(|v| v * 7.0).collect();
        let mk = |vals: Vec<f64>| {
            WeightFunction::new(
                WeightFamily::Tabulated {
                    nu_min: -1,
                    nu_max: 1,
                    values: vals,
                    profile: Some(AsymptoticProfile { e0: 1.0, a0: 0.0, einf: 1.0, ainf: 0.0 }),
                },
                1,
            )
            .unwrap()
        };
        let a = mk(raw);
        let b = mk(scaled);
        assert_eq!(a.eval_level(1).unwrap(), b.eval_level(1).unwrap());
        assert_eq!(a.check_gp(1.0).unwrap(), b.check_gp(1.0).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let w: WeightFunction =
            serde_json::from_str(r#"{"family":"power","params":{"u":2},"d":1}"#).unwrap();
        assert_eq!(w, power(2.0, 1));
        let s = serde_json::to_string(&w).unwrap();
        let w2: WeightFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(w, w2);
        let flat: WeightFunction =
            serde_json::from_str(r#"{"family":"power","params":{"u":"inf"},"d":2}"#).unwrap();
        assert_eq!(flat.rphi().unwrap(), f64::INFINITY);
        // unknown fields rejected
        assert!(serde_json::from_str::<WeightFunction>(
            r#"{"family":"power","params":{"u":2,"x":1},"d":1}"#
        )
        .is_err());
    }
}
