//! Command-line front end: weight class checks, sequence norms, embedding
//! verdicts, witness generation, ratio scans and verdict atlases.
//!
//! Exit codes: 0 success / Holds, 1 Fails or detected violation,
//! 2 Inconclusive, 3 usage or data error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};
use serde_json::json;

use morrey_embed::oracle::{decide, Decision, SpaceSpec, TargetKind};
use morrey_embed::seqnorm::{space_norm, CoeffSequence, NormRequest, SeqScale};
use morrey_embed::verifier::{crosscheck, ratio_scan, CrossCheck, ScanFamily, VerificationReport};
use morrey_embed::weights::{GpVerdict, IntcVerdict};
use morrey_embed::witnesses::{WitnessFamily, WitnessKind};
use morrey_embed::{WeightFamily, WeightFunction, SCHEMA};

#[derive(Parser)]
#[command(name = "morrey-embed", version, about = "Embedding decisions for Morrey smoothness scales")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check weight admissibility for an integrability exponent.
    CheckClass {
        /// Weight as JSON, shorthand like power(u=2), or a file path.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Check the uniform polynomial lower-growth condition of a weight.
    Intc {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Print the local integrability exponent of a weight.
    Rphi {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Evaluate a sequence-space quasi-norm.
    Norm {
        /// One of b, f, n, e.
        #[arg(long)]
        scale: String,
        /// Sequence as JSON, a file path, or a witness expression like
        /// single_coeff(j=3).
        #[arg(long)]
        seq: String,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long)]
        p: f64,
        /// A number or "inf".
        #[arg(long)]
        q: String,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Decide an embedding between two spaces.
    Embed {
        /// Source space as JSON or a file path.
        #[arg(long)]
        src: String,
        #[arg(long)]
        tgt: String,
    },
    /// Generate a witness coefficient sequence.
    Witness {
        /// Family expression, e.g. fine_index(n=8) or single_coeff(j=3).
        #[arg(long)]
        family: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, allow_negative_numbers = true)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        phi: Option<String>,
    },
    /// Scan norm ratios of a witness or random family over depths.
    Verify {
        #[arg(long)]
        src: String,
        #[arg(long)]
        tgt: String,
        /// Witness family name; omit to scan a seeded random family.
        #[arg(long)]
        family: Option<String>,
        #[arg(long, default_value = "2,4,8,16")]
        depths: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Level decay of random coefficients.
        #[arg(long, default_value_t = 2.0)]
        decay: f64,
        /// Maximum depth for automatic extension of indeterminate scans.
        #[arg(long)]
        budget: Option<usize>,
        /// Also write the ratio table as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sweep a (s2, 1/p2) target grid against a fixed source; CSV out.
    Atlas {
        #[arg(long)]
        src: String,
        /// Target weight; defaults to the source weight.
        #[arg(long)]
        phi2: Option<String>,
        /// Target fine index; defaults to the source fine index.
        #[arg(long)]
        q2: Option<String>,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        s2_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        s2_max: f64,
        #[arg(long, default_value_t = 9)]
        s2_steps: usize,
        #[arg(long, default_value_t = 0.25)]
        inv_p2_min: f64,
        #[arg(long, default_value_t = 2.0)]
        inv_p2_max: f64,
        #[arg(long, default_value_t = 8)]
        inv_p2_steps: usize,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<u8, AnyError> {
    match cli.cmd {
        Cmd::CheckClass { phi, p, d } => {
            let phi = parse_weight(&phi, d)?;
            let verdict = phi.check_gp(p)?;
            let member = matches!(verdict, GpVerdict::Member);
            let report = match &verdict {
                GpVerdict::Member => json!({"schema": SCHEMA, "member": true}),
                GpVerdict::NotMember { t, s } => {
                    json!({"schema": SCHEMA, "member": false, "violation": {"t": t, "s": s}})
                }
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if member { 0 } else { 1 })
        }
        Cmd::Intc { phi, d } => {
            let phi = parse_weight(&phi, d)?;
            let verdict = phi.check_intc()?;
            let (holds, report) = match &verdict {
                IntcVerdict::Holds { eps, c } => {
                    (true, json!({"schema": SCHEMA, "holds": true, "eps": eps, "c": c}))
                }
                IntcVerdict::Fails { t, r } => {
                    (false, json!({"schema": SCHEMA, "holds": false, "violation": {"t": t, "r": r}}))
                }
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if holds { 0 } else { 1 })
        }
        Cmd::Rphi { phi, d } => {
            let phi = parse_weight(&phi, d)?;
            let r = phi.rphi()?;
            if r.is_infinite() {
                println!("inf");
            } else if r == r.trunc() {
                println!("{}", r as i64);
            } else {
                println!("{r}");
            }
            Ok(0)
        }
        Cmd::Norm { scale, seq, s, p, q, phi, d } => {
            let phi = parse_weight(&phi, d)?;
            let q = parse_ext(&q)?;
            let req = NormRequest::new(parse_scale(&scale)?, s, p, q, phi.clone())?;
            let seq = parse_sequence(&seq, d, s, p, q, Some(&phi))?;
            let result = space_norm(&seq, &req)?;
            let report = json!({
                "schema": SCHEMA,
                "value": result.value,
                "argmax": result.argmax,
                "rescaled": result.rescaled,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Cmd::Embed { src, tgt } => {
            let src: SpaceSpec = parse_json_or_file(&src)?;
            let tgt: SpaceSpec = parse_json_or_file(&tgt)?;
            let verdict = decide(&src, &tgt)?;
            let mut report = serde_json::to_value(&verdict)?;
            report["schema"] = json!(SCHEMA);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(match verdict.decision {
                Decision::Holds => 0,
                Decision::Fails => 1,
                Decision::Inconclusive => 2,
            })
        }
        Cmd::Witness { family, depth, d, s, p, q, phi } => {
            let phi = phi.map(|raw| parse_weight(&raw, d)).transpose()?;
            let q = q.map(|raw| parse_ext(&raw)).transpose()?;
            let (name, args) = parse_expr(&family)?;
            let depth = depth
                .or_else(|| expr_depth(&args).map(|n| n as usize))
                .ok_or("missing depth: pass --depth or an argument like (j=3)")?;
            let kind = build_kind(&name, &args, s, p, q, phi.as_ref())?;
            let seq = WitnessFamily::new(kind, d)?.generate(depth)?;
            println!("{}", serde_json::to_string_pretty(&seq)?);
            Ok(0)
        }
        Cmd::Verify { src, tgt, family, depths, seed, decay, budget, csv } => {
            let src: SpaceSpec = parse_json_or_file(&src)?;
            let tgt: SpaceSpec = parse_json_or_file(&tgt)?;
            let depths: Vec<usize> = depths
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<_, _>>()?;
            let budget = budget.unwrap_or_else(|| depths.last().copied().unwrap_or(0) * 4);
            let fam = match family {
                Some(name) => scan_witness(&name, &src, &tgt)?,
                None => ScanFamily::Random { seed: seed.ok_or("pass --family or --seed")?, decay },
            };
            let mut report = ratio_scan(&src, &tgt, &fam, &depths, budget)?;
            let check = match decide(&src, &tgt) {
                Ok(verdict) => {
                    let cc = crosscheck(&verdict, std::slice::from_mut(&mut report));
                    Some((verdict, cc))
                }
                Err(_) => None,
            };
            if let Some(path) = csv {
                write_ratio_csv(&report, &path)?;
            }
            let mut out = serde_json::to_value(&report)?;
            out["schema"] = json!(SCHEMA);
            let code = match &check {
                Some((verdict, cc)) => {
                    out["verdict"] = serde_json::to_value(verdict)?;
                    out["crosscheck"] = serde_json::to_value(cc)?;
                    u8::from(matches!(cc, CrossCheck::Conflict { .. }))
                }
                None => 0,
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(code)
        }
        Cmd::Atlas {
            src,
            phi2,
            q2,
            s2_min,
            s2_max,
            s2_steps,
            inv_p2_min,
            inv_p2_max,
            inv_p2_steps,
            out,
        } => {
            let src: SpaceSpec = parse_json_or_file(&src)?;
            let phi2 = match phi2 {
                Some(raw) => parse_weight(&raw, src.d)?,
                None => src.phi.clone(),
            };
            let q2 = match q2 {
                Some(raw) => parse_ext(&raw)?,
                None => src.q,
            };
            let mut rows = Vec::new();
            for i in 0..s2_steps {
                let s2 = linstep(s2_min, s2_max, s2_steps, i);
                for k in 0..inv_p2_steps {
                    let inv_p2 = linstep(inv_p2_min, inv_p2_max, inv_p2_steps, k);
                    let decision = SpaceSpec::new(
                        src.scale,
                        s2,
                        1.0 / inv_p2,
                        q2,
                        phi2.clone(),
                        src.d,
                    )
                    .and_then(|tgt| decide(&src, &tgt))
                    .map(|v| match v.decision {
                        Decision::Holds => "holds",
                        Decision::Fails => "fails",
                        Decision::Inconclusive => "inconclusive",
                    })
                    .unwrap_or("invalid");
                    rows.push((s2, inv_p2, decision));
                }
            }
            let mut wtr: csv::Writer<Box<dyn std::io::Write>> = match out {
                Some(path) => csv::Writer::from_writer(Box::new(std::fs::File::create(path)?)),
                None => csv::Writer::from_writer(Box::new(std::io::stdout())),
            };
            wtr.write_record(["s2", "inv_p2", "decision"])?;
            for (s2, inv_p2, decision) in rows {
                wtr.write_record([s2.to_string(), inv_p2.to_string(), decision.to_string()])?;
            }
            wtr.flush()?;
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

/// A number or the string "inf".
fn parse_ext(raw: &str) -> Result<f64, AnyError> {
    if raw.trim() == "inf" {
        Ok(f64::INFINITY)
    } else {
        Ok(raw.trim().parse::<f64>()?)
    }
}

fn parse_scale(raw: &str) -> Result<SeqScale, AnyError> {
    match raw.to_lowercase().as_str() {
        "b" => Ok(SeqScale::B),
        "f" => Ok(SeqScale::F),
        "n" => Ok(SeqScale::N),
        "e" => Ok(SeqScale::E),
        other => Err(format!("unknown scale {other:?}; expected b, f, n or e").into()),
    }
}

/// Inline JSON (starts with '{') or the contents of a file.
fn parse_json_or_file<T: serde::de::DeserializeOwned>(raw: &str) -> Result<T, AnyError> {
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw)?
    };
    Ok(serde_json::from_str(&text)?)
}

/// Weight from JSON, a shorthand expression, or a file.
fn parse_weight(raw: &str, d: usize) -> Result<WeightFunction, AnyError> {
    let trimmed = raw.trim();
    if trimmed.starts_with('{') || (!trimmed.contains('(') && std::path::Path::new(trimmed).exists())
    {
        return parse_json_or_file(trimmed);
    }
    let (name, args) = parse_expr(trimmed)?;
    let get = |key: &str| {
        args.get(key).copied().ok_or_else(|| format!("weight {name} needs argument {key}"))
    };
    let family = match name.as_str() {
        "power" => WeightFamily::Power { u: get("u")? },
        "piecewise" => WeightFamily::PiecewisePower { u: get("u")?, v: get("v")? },
        "powerlog" => WeightFamily::PowerLog {
            p0: get("p0")?,
            a: get("a")?,
            big_l: args.get("L").or_else(|| args.get("l")).copied().ok_or("powerlog needs L")?,
        },
        "logexample" => WeightFamily::LogExample,
        other => return Err(format!("unknown weight family {other:?}").into()),
    };
    Ok(WeightFunction::new(family, d)?)
}

/// `name(key=value, ...)` with numeric values ("inf" allowed).
fn parse_expr(raw: &str) -> Result<(String, BTreeMap<String, f64>), AnyError> {
    let raw = raw.trim();
    let Some(open) = raw.find('(') else {
        return Ok((raw.to_string(), BTreeMap::new()));
    };
    let name = raw[..open].trim().to_string();
    let inner = raw[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| format!("malformed expression {raw:?}"))?;
    let mut args = BTreeMap::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value in {part:?}"))?;
        args.insert(key.trim().to_string(), parse_ext(value)?);
    }
    Ok((name, args))
}

fn expr_depth(args: &BTreeMap<String, f64>) -> Option<u64> {
    ["j", "k", "n", "depth"].iter().find_map(|k| args.get(*k)).map(|v| *v as u64)
}

/// Witness family kind from a name plus analytic parameters.
fn build_kind(
    name: &str,
    args: &BTreeMap<String, f64>,
    s: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    phi: Option<&WeightFunction>,
) -> Result<WitnessKind, AnyError> {
    let s = || args.get("s").copied().or(s).ok_or("family needs --s");
    let p = || args.get("p").copied().or(p).ok_or("family needs --p");
    let q = || args.get("q").copied().or(q).ok_or("family needs --q");
    let phi = || phi.cloned().ok_or("family needs --phi");
    Ok(match name {
        "single_coeff" => WitnessKind::SingleCoeff,
        "single_level" => WitnessKind::SingleLevel { s: s()? },
        "fine_index" => WitnessKind::FineIndex { s: s()?, q: q()? },
        "local_blowup" => WitnessKind::LocalBlowup { s: s()?, p: p()?, phi: phi()? },
        "global_decay" => WitnessKind::GlobalDecay {
            s: s()?,
            p: p()?,
            phi: phi()?,
            exponent: args.get("exponent").copied().unwrap_or(p()?),
        },
        "nested_dual" => WitnessKind::NestedDual {
            s: s()?,
            p: p()?,
            phi: phi()?,
            gamma: args.get("gamma").copied().unwrap_or(1.0),
        },
        "nested_atoms" => WitnessKind::NestedAtoms,
        other => return Err(format!("unknown witness family {other:?}").into()),
    })
}

/// Witness scan family with parameters taken from the space pair.
fn scan_witness(name: &str, src: &SpaceSpec, tgt: &SpaceSpec) -> Result<ScanFamily, AnyError> {
    let (name, args) = parse_expr(name)?;
    let kind = build_kind(
        &name,
        &args,
        Some(src.s),
        Some(src.p),
        Some(tgt.q),
        Some(&src.phi),
    )?;
    Ok(ScanFamily::Witness {
        family: WitnessFamily::new(kind, src.d)?,
        target: TargetKind::NormRatio,
    })
}

/// Sequence from inline JSON, a witness expression, or a file.
fn parse_sequence(
    raw: &str,
    d: usize,
    s: f64,
    p: f64,
    q: f64,
    phi: Option<&WeightFunction>,
) -> Result<CoeffSequence, AnyError> {
    let trimmed = raw.trim();
    if trimmed.starts_with('{') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    if trimmed.contains('(') || !std::path::Path::new(trimmed).exists() {
        let (name, args) = parse_expr(trimmed)?;
        let depth = expr_depth(&args)
            .ok_or("witness expression needs a depth argument like (j=3)")? as usize;
        let kind = build_kind(&name, &args, Some(s), Some(p), Some(q), phi)?;
        return Ok(WitnessFamily::new(kind, d)?.generate(depth)?);
    }
    parse_json_or_file(trimmed)
}

fn write_ratio_csv(report: &VerificationReport, path: &PathBuf) -> Result<(), AnyError> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["depth", "src_norm", "tgt_norm", "ratio"])?;
    for e in &report.entries {
        wtr.write_record([
            e.depth.to_string(),
            e.src_norm.to_string(),
            e.tgt_norm.to_string(),
            e.ratio.map(|r| r.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn linstep(min: f64, max: f64, steps: usize, i: usize) -> f64 {
    if steps <= 1 {
        min
    } else {
        min + (max - min) * i as f64 / (steps - 1) as f64
    }
}
