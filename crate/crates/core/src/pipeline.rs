//! End-to-end construction: witness, plan, Riesz product, operators and
//! the verification report.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::json::to_canonical_value;
use crate::multiindex::{q_s_at, Frequency, Smoothness};
use crate::operators::{composite_apply, estimate_paley_constant, OperatorPipeline, PaleyEstimate, PaleySampler, RhoBoundCheck};
use crate::property_o::{find_witness, PropertyOWitness};
use crate::riesz::{verify_claim_a, verify_claim_b, ClaimA, ClaimB};
use crate::sequence::{build_sequence_with, BuildOptions, ConditionReport, LacunaryPlan, DEFAULT_CAP};
use crate::trigpoly::{random_scalar_poly, Quadrature, Support};

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Threshold on the composite identity error.
pub const COMPOSITE_TOL: f64 = 1e-9;

/// Largest number of box frequencies in a composite-check sample.
const COMPOSITE_BOX_BUDGET: f64 = 40_000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub t0: f64,
    pub q: f64,
    pub cap: u64,
    /// Retries with `t0 <- t0^2`, `q <- q^2` when (iii) or (iv) fails.
    pub max_retries: usize,
    pub composite_samples: usize,
    pub composite_seed: u64,
    /// Test spectra use `Lambda` and the box `[1, composite_box]^d`.
    pub composite_box: i64,
    /// Skips the Paley estimation stage when false.
    pub estimate_paley: bool,
    pub paley_samples: usize,
    pub paley_seed: u64,
    pub matrix_dims: Vec<usize>,
    /// Points per axis of a tensor grid for the Paley stage; automatic
    /// when absent.
    pub grid_n: Option<usize>,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            k: 4,
            t0: 100.0,
            q: 10.0,
            cap: DEFAULT_CAP,
            max_retries: 3,
            composite_samples: 20,
            composite_seed: 1,
            composite_box: 200,
            estimate_paley: true,
            paley_samples: 50,
            paley_seed: 7,
            matrix_dims: vec![1, 2, 4, 8],
            grid_n: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub t0: f64,
    pub q: f64,
    pub sum_iii: Option<f64>,
    pub sum_iv: Option<f64>,
    pub bounds_met: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeCheck {
    pub samples: usize,
    pub seed: u64,
    pub box_hi: i64,
    pub max_rel_error: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub schema_version: u32,
    pub code_version: String,
    pub smoothness: Smoothness,
    pub config: ConstructionConfig,
    pub witness: PropertyOWitness,
    pub attempts: Vec<Attempt>,
    pub plan: LacunaryPlan,
    pub plan_digest: String,
    pub conditions: ConditionReport,
    pub claim_a: ClaimA,
    pub claim_b: ClaimB,
    pub composite: CompositeCheck,
    pub rho_bounds: RhoBoundCheck,
    pub paley: Option<PaleyEstimate>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

/// SHA-256 of the compact canonical JSON of `plan`, in hex.
pub fn plan_digest(plan: &LacunaryPlan) -> Result<String> {
    let text = serde_json::to_string(&to_canonical_value(plan)?)?;
    Ok(Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
}

fn build_with_retries(s: &Smoothness, w: &PropertyOWitness, config: &ConstructionConfig) -> Result<(LacunaryPlan, Vec<Attempt>)> {
    let opts = BuildOptions {
        cap: config.cap,
        enforce_summability: false,
    };
    let (mut t0, mut q) = (config.t0, config.q);
    let mut attempts = Vec::new();
    let mut first: Option<LacunaryPlan> = None;
    for _ in 0..=config.max_retries {
        match build_sequence_with(s, w, config.k, t0, q, &opts) {
            Ok(plan) => {
                let met = plan.report.bounds_met.iii && plan.report.bounds_met.iv;
                attempts.push(Attempt {
                    t0,
                    q,
                    sum_iii: Some(plan.report.sum_iii),
                    sum_iv: Some(plan.report.sum_iv),
                    bounds_met: met,
                    error: None,
                });
                if met {
                    return Ok((plan, attempts));
                }
                first.get_or_insert(plan);
            }
            Err(e) if attempts.is_empty() => return Err(e),
            Err(e) => attempts.push(Attempt {
                t0,
                q,
                sum_iii: None,
                sum_iv: None,
                bounds_met: false,
                error: Some(e.to_string()),
            }),
        }
        t0 *= t0;
        q *= q;
    }
    Ok((first.expect("the first attempt succeeded"), attempts))
}

/// Test support for the composite check: `Lambda` and a box `[1, hi]^d`
/// of at most 40000 points.
pub fn composite_support(dim: usize, lambda: &[Frequency], box_hi: i64) -> Result<(Support, i64)> {
    let budget = COMPOSITE_BOX_BUDGET.powf(1.0 / dim as f64).floor() as i64;
    let hi = box_hi.min(budget).max(1);
    let lam = Support::List {
        dim,
        freqs: lambda.to_vec(),
    };
    let support = lam.union(&Support::Box {
        lo: vec![1; dim],
        hi: vec![hi; dim],
    })?;
    Ok((support, hi))
}

/// Largest relative coefficient error between `P M_R M f` and
/// `sum_k rho_k Q_S(n_k)^{1/2} f^(n_k) chi_{n_k}` over seeded samples.
pub fn composite_identity_error(pipeline: &OperatorPipeline, support: &Support, samples: usize, seed: u64) -> Result<f64> {
    let s = &pipeline.plan().smoothness;
    let weights = pipeline
        .lambda()
        .iter()
        .zip(pipeline.rho())
        .map(|(n, r)| Ok(*r * q_s_at(s, n)?.sqrt()))
        .collect::<Result<Vec<Complex64>>>()?;
    let mut worst = 0.0f64;
    for i in 0..samples {
        let f = random_scalar_poly(support, seed, i as u64)?;
        let out = composite_apply(&f, pipeline)?;
        let mut scale = 0.0f64;
        let mut expected = BTreeMap::new();
        for (n, w) in pipeline.lambda().iter().zip(&weights) {
            let value = f.coeff(n).copied().unwrap_or_default() * w;
            scale = scale.max(value.norm());
            expected.insert(n.clone(), value);
        }
        for (n, b) in &expected {
            let a = out.coeff(n).copied().unwrap_or_default();
            let err = (a - b).norm() / if b.norm() > 0.0 { b.norm() } else { scale.max(f64::MIN_POSITIVE) };
            worst = worst.max(err);
        }
        for (n, a) in out.terms() {
            if !expected.contains_key(n) {
                worst = worst.max(a.norm() / scale.max(f64::MIN_POSITIVE));
            }
        }
    }
    Ok(worst)
}

fn timed<T>(timings: &mut BTreeMap<String, f64>, stage: &'static str, run: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = run().map_err(Error::at(stage));
    timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Runs every stage of the construction on `s`.
pub fn run_construction(s: &Smoothness, config: &ConstructionConfig) -> Result<ConstructionReport> {
    let mut timings = BTreeMap::new();
    let witness = timed(&mut timings, "property_o", || find_witness(s).ok_or(Error::NoWitness))?;
    let (plan, attempts) = timed(&mut timings, "sequence_builder", || build_with_retries(s, &witness, config))?;
    let plan_digest = plan_digest(&plan)?;
    let (claim_a, claim_b) = timed(&mut timings, "riesz_engine", || {
        Ok((verify_claim_a(&plan.sequence, plan.k)?, verify_claim_b(&plan.sequence, plan.k)?))
    })?;
    let pipeline = timed(&mut timings, "paley_ops", || OperatorPipeline::new(plan.clone()))?;
    let composite = timed(&mut timings, "composite_identity", || {
        let (support, box_hi) = composite_support(s.dim(), pipeline.lambda(), config.composite_box)?;
        let max_rel_error = composite_identity_error(&pipeline, &support, config.composite_samples, config.composite_seed)?;
        Ok(CompositeCheck {
            samples: config.composite_samples,
            seed: config.composite_seed,
            box_hi,
            max_rel_error,
            holds: max_rel_error < COMPOSITE_TOL,
        })
    })?;
    let rho_bounds = pipeline.rho_bounds();
    let paley = if config.estimate_paley {
        Some(timed(&mut timings, "paley_estimate", || {
            let quadrature = config.grid_n.map(Quadrature::grid).transpose()?;
            let sampler = PaleySampler {
                count: config.paley_samples,
                support: None,
                seed: config.paley_seed,
                matrix_dims: config.matrix_dims.clone(),
                quadrature,
            };
            estimate_paley_constant(s, pipeline.lambda(), &sampler)
        })?)
    } else {
        None
    };
    Ok(ConstructionReport {
        schema_version: SCHEMA_VERSION,
        code_version: CODE_VERSION.to_string(),
        smoothness: s.clone(),
        config: config.clone(),
        witness,
        attempts,
        conditions: plan.report.clone(),
        plan,
        plan_digest,
        claim_a,
        claim_b,
        composite,
        rho_bounds,
        paley,
        timings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub matches: bool,
    /// JSON paths of mismatching fields.
    pub differences: Vec<String>,
}

/// Relative tolerance for floats on replay.
pub const REPLAY_TOL: f64 = 1e-12;

fn is_integer_text(text: &str) -> bool {
    !text.contains(['.', 'e', 'E'])
}

fn compare(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (sx, sy) = (x.to_string(), y.to_string());
            if is_integer_text(&sx) && is_integer_text(&sy) {
                if sx != sy {
                    out.push(path.to_string());
                }
                return;
            }
            match (sx.parse::<f64>(), sy.parse::<f64>()) {
                (Ok(u), Ok(v)) if (u - v).abs() <= REPLAY_TOL * u.abs().max(v.abs()) => {}
                _ => out.push(path.to_string()),
            }
        }
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                out.push(format!("{path} (length)"));
                return;
            }
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                compare(&format!("{path}[{i}]"), x, y, out);
            }
        }
        (Value::Object(xs), Value::Object(ys)) => {
            for key in xs.keys().chain(ys.keys().filter(|k| !xs.contains_key(*k))) {
                match (xs.get(key), ys.get(key)) {
                    (Some(x), Some(y)) => compare(&format!("{path}.{key}"), x, y, out),
                    _ => out.push(format!("{path}.{key} (missing)")),
                }
            }
        }
        _ if a == b => {}
        _ => out.push(path.to_string()),
    }
}

/// Field-by-field comparison of two reports, ignoring timings. Integers
/// must agree exactly, floats within [`REPLAY_TOL`] relative.
pub fn compare_reports(expected: &ConstructionReport, actual: &ConstructionReport) -> Result<ReplayOutcome> {
    let mut a = to_canonical_value(expected)?;
    let mut b = to_canonical_value(actual)?;
    for v in [&mut a, &mut b] {
        if let Value::Object(map) = v {
            map.remove("timings");
        }
    }
    let mut differences = Vec::new();
    compare("$", &a, &b, &mut differences);
    Ok(ReplayOutcome {
        matches: differences.is_empty(),
        differences,
    })
}

/// Re-runs the construction from `s` and `config` and compares with `report`.
pub fn replay(report: &ConstructionReport, s: &Smoothness, config: &ConstructionConfig) -> Result<ReplayOutcome> {
    if report.code_version != CODE_VERSION || report.schema_version != SCHEMA_VERSION {
        return Ok(ReplayOutcome {
            matches: false,
            differences: vec![format!(
                "version mismatch: report {} (schema {}), running {} (schema {})",
                report.code_version, report.schema_version, CODE_VERSION, SCHEMA_VERSION
            )],
        });
    }
    compare_reports(report, &run_construction(s, config)?)
}
