//! The `paley` command line: one subcommand per stage, JSON on stdout, a
//! short summary on stderr.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cr_norm::{cr_norm, CrOptions, MatrixSequence};
use crate::error::{Error, Result};
use crate::json::{to_canonical_string, to_canonical_value};
use crate::multiindex::{is_smoothness, saturate, Frequency, MultiIndex, Smoothness};
use crate::operators::{composite_apply, coordinate_projection, estimate_paley_constant, paley_project, OperatorPipeline, PaleySampler};
use crate::pipeline::{plan_digest, replay, run_construction, ConstructionConfig, ConstructionReport};
use crate::property_o::find_witness;
use crate::riesz::riesz_summary;
use crate::sequence::{build_sequence_with, estimate_rho_de, techprop_quantities, BuildOptions, LacunaryPlan, RhoSampler, DEFAULT_CAP};
use crate::trigpoly::{AnyPoly, Quadrature};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "PALEY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "paley", version, about = "Paley projections on anisotropic Sobolev spaces on tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Io {
    /// JSON input file, `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    /// Writes the JSON result here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long = "K", default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 100.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub q: f64,
    /// Largest ball enumerated point by point.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tests a list of multi-indices for downward closure; prints its saturation.
    CheckSmoothness {
        #[command(flatten)]
        io: Io,
    },
    /// Searches for a Property (O) witness.
    CheckPropertyO {
        #[command(flatten)]
        io: Io,
    },
    /// Builds the lacunary sequence and its condition report.
    BuildSequence {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Spectrum size and claims A and B of the truncated Riesz product of a plan.
    RieszSpectrum {
        #[command(flatten)]
        io: Io,
        /// Truncation; defaults to the plan's length.
        #[arg(long = "K")]
        k: Option<usize>,
        /// Number of spectrum points listed.
        #[arg(long, default_value_t = 16)]
        count: usize,
    },
    /// Applies `P_Lambda` and the composite operator of a plan to a polynomial.
    Project {
        #[command(flatten)]
        io: Io,
        /// Plan file from `build-sequence`.
        #[arg(long)]
        plan: PathBuf,
    },
    /// Samples Paley ratios for a plan.
    EstimatePaley {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long = "matrix-dim", value_delimiter = ',', default_value = "1,2,4,8")]
        matrix_dim: Vec<usize>,
        /// Points per axis of a tensor grid; automatic when absent.
        #[arg(long = "grid-n")]
        grid_n: Option<usize>,
    },
    /// The column-plus-row norm of a matrix sequence.
    CrNorm {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Technical-proposition quantities along `n = (t, ..., t)`, `m = n + 1`,
    /// and the empirical `rho(D, eps)`.
    Techprop {
        #[command(flatten)]
        io: Io,
        #[arg(long = "D", default_value_t = 2)]
        d: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        t: Vec<i64>,
    },
    /// The whole construction with its verification report.
    RunAll {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Paley samples per matrix size.
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long = "matrix-dim", value_delimiter = ',', default_value = "1,2,4,8")]
        matrix_dim: Vec<usize>,
        #[arg(long = "grid-n")]
        grid_n: Option<usize>,
        /// Compares a fresh run with this report instead of printing one.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
}

/// Exit code, stdout and stderr of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCheck {
    pub dim: usize,
    pub is_smoothness: bool,
    pub saturation: Smoothness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechpropRow {
    pub t: i64,
    pub n: Frequency,
    pub m: Frequency,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechpropOutput {
    pub sweep: Vec<TechpropRow>,
    pub rho_de: crate::sequence::RhoEstimate,
}

fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn rows_to_indices(rows: &[Vec<u32>]) -> Result<Vec<MultiIndex>> {
    rows.iter().map(|r| MultiIndex::new(r.clone())).collect()
}

/// A smoothness given as rows, `{"smoothness": rows}` or
/// `{"generators": rows}` (saturated).
pub fn parse_smoothness(value: &Value) -> Result<Smoothness> {
    match value {
        Value::Object(map) => {
            if let Some(rows) = map.get("generators") {
                let rows: Vec<Vec<u32>> = serde_json::from_value(rows.clone())?;
                return saturate(&rows_to_indices(&rows)?);
            }
            match map.get("smoothness") {
                Some(rows) => Ok(serde_json::from_value(rows.clone())?),
                None => Err(Error::InvalidInput("expected a `smoothness` or `generators` field".into())),
            }
        }
        _ => Ok(serde_json::from_value(value.clone())?),
    }
}

fn read_smoothness(path: &Path) -> Result<Smoothness> {
    parse_smoothness(&read_json::<Value>(path)?)
}

/// Snake-case name of a domain failure.
fn failure_name(e: &Error) -> &'static str {
    match e {
        Error::NoWitness => "no_witness",
        Error::Collision { .. } => "collision",
        Error::SearchExhausted { .. } => "search_exhausted",
        Error::SingularPoint(_) => "singular_point",
        Error::TooLarge { .. } => "too_large",
        Error::UndefinedRatio(_) => "undefined_ratio",
        Error::Stage { source, .. } => failure_name(source),
        _ => "error",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_domain_failure() {
        return EXIT_DOMAIN;
    }
    let inner = match e {
        Error::Stage { source, .. } => source.as_ref(),
        other => other,
    };
    match inner {
        Error::Overflow(_) => EXIT_INTERNAL,
        _ => EXIT_VALIDATION,
    }
}

/// JSON body printed for a failed invocation.
pub fn error_json(e: &Error) -> Value {
    let mut body = json!({ "message": e.to_string() });
    if let Error::Stage { stage, .. } = e {
        body["stage"] = json!(stage);
    }
    match exit_code(e) {
        EXIT_DOMAIN => body["failure"] = json!(failure_name(e)),
        EXIT_VALIDATION => body["error"] = json!("validation"),
        _ => body["error"] = json!("internal"),
    }
    body
}

struct Success {
    json: Value,
    summary: String,
    code: i32,
}

fn ok<T: Serialize>(value: &T, summary: String) -> Result<Success> {
    Ok(Success {
        json: to_canonical_value(value)?,
        summary,
        code: EXIT_OK,
    })
}

fn run(command: &Command) -> Result<Success> {
    match command {
        Command::CheckSmoothness { io } => {
            let rows: Vec<Vec<u32>> = read_json(&io.input)?;
            let indices = rows_to_indices(&rows)?;
            let check = SmoothnessCheck {
                is_smoothness: is_smoothness(&indices)?,
                saturation: saturate(&indices)?,
                dim: indices[0].dim(),
            };
            let summary = format!(
                "{} multi-indices: {}; saturation has {} elements",
                rows.len(),
                if check.is_smoothness { "a smoothness" } else { "not downward closed" },
                check.saturation.len()
            );
            ok(&check, summary)
        }
        Command::CheckPropertyO { io } => {
            let s = read_smoothness(&io.input)?;
            let w = find_witness(&s).ok_or(Error::NoWitness)?;
            let summary = format!("witness alpha = {:?}, beta = {:?}", w.alpha.components(), w.beta.components());
            ok(&w, summary)
        }
        Command::BuildSequence { io, plan } => {
            let s = read_smoothness(&io.input)?;
            let w = find_witness(&s).ok_or(Error::NoWitness)?;
            let opts = BuildOptions {
                cap: plan.cap,
                enforce_summability: false,
            };
            let p = build_sequence_with(&s, &w, plan.k, plan.t0, plan.q, &opts)?;
            let summary = format!(
                "K = {}: sum_iii = {:.3e}, sum_iv = {:.3e}, iii {}, iv {}",
                p.k,
                p.report.sum_iii,
                p.report.sum_iv,
                met(p.report.bounds_met.iii),
                met(p.report.bounds_met.iv)
            );
            ok(&p, summary)
        }
        Command::RieszSpectrum { io, k, count } => {
            let plan: LacunaryPlan = read_json(&io.input)?;
            plan.validate()?;
            let out = riesz_summary(&plan.sequence, k.unwrap_or(plan.k), *count)?;
            let summary = format!("{} spectrum points; claim A {}, claim B {}", out.size, out.claims.a.holds, out.claims.b.holds);
            ok(&out, summary)
        }
        Command::Project { io, plan } => {
            let plan: LacunaryPlan = read_json(plan)?;
            let digest = plan_digest(&plan)?;
            let pipeline = OperatorPipeline::new(plan)?;
            let f: AnyPoly = read_json(&io.input)?;
            let out = match f {
                AnyPoly::Scalar(f) => project_json(&f, &pipeline, &digest)?,
                AnyPoly::Matrix(f) => project_json(&f, &pipeline, &digest)?,
            };
            let summary = format!("projected onto {} frequencies", pipeline.lambda().len());
            Ok(Success {
                json: out,
                summary,
                code: EXIT_OK,
            })
        }
        Command::EstimatePaley {
            io,
            count,
            seed,
            matrix_dim,
            grid_n,
        } => {
            let plan: LacunaryPlan = read_json(&io.input)?;
            plan.validate()?;
            let sampler = PaleySampler {
                count: *count,
                support: None,
                seed: *seed,
                matrix_dims: matrix_dim.clone(),
                quadrature: grid_n.map(Quadrature::grid).transpose()?,
            };
            let est = estimate_paley_constant(&plan.smoothness, &plan.sequence, &sampler)?;
            let mut out = to_canonical_value(&est)?;
            out["m"] = to_canonical_value(matrix_dim)?;
            out["plan_digest"] = json!(plan_digest(&plan)?);
            let summary = format!("sup ratio {:.6} at m = {} over {} samples per size", est.sup_ratio, est.argmax_m, count);
            Ok(Success {
                json: out,
                summary,
                code: EXIT_OK,
            })
        }
        Command::CrNorm { io, seed } => {
            let xs: MatrixSequence = read_json(&io.input)?;
            let opt = CrOptions {
                seed: *seed,
                ..Default::default()
            };
            let r = cr_norm(&xs, &opt)?;
            let out = json!({
                "value": r.value,
                "converged": r.converged,
                "restarts_used": r.restarts_used,
            });
            Ok(Success {
                json: to_canonical_value(&out)?,
                summary: format!("|||x||| <= {:.9} (converged: {})", r.value, r.converged),
                code: EXIT_OK,
            })
        }
        Command::Techprop { io, d, eps, seed, t } => {
            let s = read_smoothness(&io.input)?;
            if *d == 0 {
                return Err(Error::InvalidInput("--D must be at least 1".into()));
            }
            let out = techprop_output(&s, t, *d, *eps, *seed)?;
            let summary = format!("rho(D = {d}, eps = {eps}) = {} (empirical)", out.rho_de.rho);
            ok(&out, summary)
        }
        Command::RunAll {
            io,
            plan,
            seed,
            count,
            matrix_dim,
            grid_n,
            replay: replay_path,
        } => {
            let s = read_smoothness(&io.input)?;
            let config = ConstructionConfig {
                k: plan.k,
                t0: plan.t0,
                q: plan.q,
                cap: plan.cap,
                paley_seed: *seed,
                paley_samples: *count,
                matrix_dims: matrix_dim.clone(),
                grid_n: *grid_n,
                ..Default::default()
            };
            if let Some(path) = replay_path {
                let report: ConstructionReport = read_json(path)?;
                let outcome = replay(&report, &s, &config)?;
                let summary = if outcome.matches {
                    "replay matches".to_string()
                } else {
                    format!("replay differs in {} fields", outcome.differences.len())
                };
                let code = if outcome.matches { EXIT_OK } else { EXIT_DOMAIN };
                return Ok(Success {
                    json: to_canonical_value(&outcome)?,
                    summary,
                    code,
                });
            }
            let report = run_construction(&s, &config)?;
            let summary = report_summary(&report);
            ok(&report, summary)
        }
    }
}

fn met(b: bool) -> &'static str {
    if b {
        "met"
    } else {
        "not met"
    }
}

fn project_json<C: crate::trigpoly::Coefficient>(
    f: &crate::trigpoly::TrigPoly<C>,
    pipeline: &OperatorPipeline,
    digest: &str,
) -> Result<Value>
where
    crate::trigpoly::TrigPoly<C>: Serialize,
{
    let coord = coordinate_projection(f, pipeline);
    Ok(json!({
        "projection": to_canonical_value(&paley_project(f, pipeline.lambda()))?,
        "composite": to_canonical_value(&composite_apply(f, pipeline)?)?,
        "outside_sigma": coord.outside_sigma,
        "outside_sigma_mass": to_canonical_value(&coord.outside_sigma_mass)?,
        "plan_digest": digest,
    }))
}

/// The `techprop` result for the diagonal points `n = (t, ..., t)`.
pub fn techprop_output(s: &Smoothness, ts: &[i64], d: u64, eps: f64, seed: u64) -> Result<TechpropOutput> {
    let dim = s.dim();
    let sweep = ts
        .iter()
        .map(|&t| {
            let n = Frequency::from_i64(&vec![t; dim]);
            let m = n.offset(&vec![1; dim]);
            let tp = techprop_quantities(s, &m, &n)?;
            Ok(TechpropRow {
                t,
                n,
                m,
                q1: tp.q1,
                q2: tp.q2,
                q3: tp.q3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sampler = RhoSampler {
        seed,
        ..Default::default()
    };
    Ok(TechpropOutput {
        sweep,
        rho_de: estimate_rho_de(s, d, eps, &sampler)?,
    })
}

fn report_summary(r: &ConstructionReport) -> String {
    let mut lines = vec![
        format!("plan {} (K = {}, {} attempts)", &r.plan_digest[..12], r.plan.k, r.attempts.len()),
        format!(
            "conditions: iii {} (sum {:.3e}), iv {} (sum {:.3e})",
            met(r.conditions.bounds_met.iii),
            r.conditions.sum_iii,
            met(r.conditions.bounds_met.iv),
            r.conditions.sum_iv
        ),
        format!("claims: A {}, B {}", r.claim_a.holds, r.claim_b.holds),
        format!("composite identity: max rel error {:.3e}", r.composite.max_rel_error),
        format!("rho_k bounds: {}", r.rho_bounds.holds),
    ];
    if let Some(p) = &r.paley {
        for row in &p.per_dim {
            lines.push(format!("paley m = {}: sup ratio {:.6}", row.m, row.sup_ratio));
        }
    }
    lines.join("\n")
}

/// Caps the rayon pool at `PALEY_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn failure(e: &Error) -> Outcome {
    let body = serde_json::to_string_pretty(&error_json(e)).unwrap_or_else(|_| "{}".into());
    Outcome {
        code: exit_code(e),
        stdout: body + "\n",
        stderr: format!("error: {e}\n"),
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            return Outcome {
                code,
                stdout: if code == EXIT_OK { e.to_string() } else { String::new() },
                stderr: if code == EXIT_OK { String::new() } else { e.to_string() },
            };
        }
    };
    if let Err(e) = configure_threads() {
        return failure(&e);
    }
    let output = match &cli.command {
        Command::CheckSmoothness { io }
        | Command::CheckPropertyO { io }
        | Command::BuildSequence { io, .. }
        | Command::RieszSpectrum { io, .. }
        | Command::Project { io, .. }
        | Command::EstimatePaley { io, .. }
        | Command::CrNorm { io, .. }
        | Command::Techprop { io, .. }
        | Command::RunAll { io, .. } => io.output.clone(),
    };
    let success = match run(&cli.command) {
        Ok(s) => s,
        Err(e) => return failure(&e),
    };
    let text = match to_canonical_string(&success.json) {
        Ok(t) => t + "\n",
        Err(e) => return failure(&e),
    };
    let stdout = match output {
        Some(path) => match fs::write(&path, &text) {
            Ok(()) => String::new(),
            Err(e) => return failure(&e.into()),
        },
        None => text,
    };
    Outcome {
        code: success.code,
        stdout,
        stderr: success.summary + "\n",
    }
}
