//! The lacunary sequence `(n_k)` along the witness direction, the balls
//! `B_k`, the constants `tau`, `ell`, `rho`, and finite-truncation checks of
//! conditions (i)-(iv).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{complex_pair, exact_int, exact_ints};
use crate::multiindex::{check_dim, i_pow, normalized_symbol, q_s_exact, Frequency, MultiIndex, Smoothness};
use crate::property_o::{verify_witness, PropertyOWitness};
use crate::rng::stream_rng;

/// Default cap on exhaustively enumerated lattice points.
pub const DEFAULT_CAP: u64 = 10_000_000;

const MAX_DOUBLINGS: u32 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvMethod {
    /// Every point of `B_k` was visited.
    Exact,
    /// Cardinality of `B_k` times a pointwise upper bound on the ball.
    Bound,
}

/// The contribution of one ball `B_k` to the sum of condition (iv).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvTerm {
    pub k: usize,
    #[serde(with = "exact_int")]
    pub radius: BigInt,
    #[serde(with = "exact_int")]
    pub ball_size: BigInt,
    pub value: f64,
    pub method: IvMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsMet {
    /// `sum_iii < 1/2`
    pub iii: bool,
    /// `sum_iv < 1`
    pub iv: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `D_k < min_j n_k(j)` for every `k >= 2`.
    pub cond_i: bool,
    /// `n_{k+1}(1) >= 3 n_k(1)` for every `k`.
    pub hadamard_ratio: bool,
    pub ell_hat: f64,
    /// Relative change of the `ell` estimate between the last two indices.
    pub ell_drift: Option<f64>,
    pub sum_iii: f64,
    /// An upper bound whenever some term used [`IvMethod::Bound`].
    pub sum_iv: f64,
    pub iv_terms: Vec<IvTerm>,
    pub bounds_met: BoundsMet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LacunaryPlan {
    pub smoothness: Smoothness,
    pub witness: PropertyOWitness,
    #[serde(rename = "K")]
    pub k: usize,
    pub t0: f64,
    pub q: f64,
    /// Parameters `t_k` after inflation.
    pub t: Vec<f64>,
    pub sequence: Vec<Frequency>,
    #[serde(with = "complex_pair")]
    pub tau: Complex64,
    pub ell_hat: f64,
    pub rho_hat: f64,
    #[serde(with = "exact_ints")]
    pub radii: Vec<BigInt>,
    pub report: ConditionReport,
}

impl LacunaryPlan {
    /// Structural checks for plans read from files.
    pub fn validate(&self) -> Result<()> {
        if self.sequence.is_empty() || self.k != self.sequence.len() {
            return Err(Error::EmptyPlan);
        }
        for n in &self.sequence {
            check_dim(self.smoothness.dim(), n.dim())?;
        }
        if self.radii.len() != self.k {
            return Err(Error::InvalidInput("one radius per term expected".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> &MultiIndex {
        &self.witness.alpha
    }

    pub fn beta(&self) -> &MultiIndex {
        &self.witness.beta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Largest ball `B_k` enumerated point by point.
    pub cap: u64,
    /// Keep inflating `t_k` until the `k`-th terms of (iii) and (iv) are
    /// below `2^{-(k+2)}` and `2^{-(k+1)}`.
    pub enforce_summability: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            enforce_summability: false,
        }
    }
}

/// `tau = i^{|alpha| - |beta|}`.
pub fn compute_tau(alpha: &MultiIndex, beta: &MultiIndex) -> Result<Complex64> {
    let diff = alpha.order() as i64 - beta.order() as i64;
    if diff.rem_euclid(2) == 0 {
        return Err(Error::Parity);
    }
    Ok(i_pow(diff))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllEstimate {
    pub ell_hat: f64,
    pub drift: Option<f64>,
}

fn ell_at(alpha: &MultiIndex, beta: &MultiIndex, n: &Frequency) -> Result<f64> {
    let den = beta.monomial(n);
    if den.is_zero() {
        return Err(Error::SingularPoint(n.to_string()));
    }
    let num = alpha.monomial(n);
    Ok(BigRational::new(num.abs(), den.abs()).to_f64().unwrap_or(f64::INFINITY))
}

/// `|sigma_alpha(n_K)| / |sigma_beta(n_K)|` and its relative drift from
/// index `K - 1`.
pub fn estimate_ell(alpha: &MultiIndex, beta: &MultiIndex, sequence: &[Frequency]) -> Result<EllEstimate> {
    let last = sequence.last().ok_or(Error::EmptyPlan)?;
    check_dim(alpha.dim(), last.dim())?;
    check_dim(beta.dim(), last.dim())?;
    let ell_hat = ell_at(alpha, beta, last)?;
    let drift = match sequence.len() {
        0 | 1 => None,
        len => {
            let prev = ell_at(alpha, beta, &sequence[len - 2])?;
            Some((ell_hat - prev).abs() / ell_hat)
        }
    };
    Ok(EllEstimate { ell_hat, drift })
}

/// `D_k = sum_{r<k} sum_j n_r(j)`, with `k` counted from 1.
pub fn bk_radius(sequence: &[Frequency], k: usize) -> Result<BigInt> {
    if k == 0 || k > sequence.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: sequence.len(),
        });
    }
    Ok(sequence[..k - 1]
        .iter()
        .flat_map(|n| n.coords().iter())
        .sum())
}

fn binomial(n: &BigInt, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of points of `Z^d` at `l1` distance at most `radius` from a
/// point: `sum_i 2^i C(d,i) C(radius,i)`.
pub fn ball_cardinality(dim: usize, radius: &BigInt) -> BigInt {
    if radius.is_negative() {
        return BigInt::zero();
    }
    let top = radius.to_usize().map_or(dim, |r| r.min(dim));
    (0..=top)
        .map(|i| (BigInt::one() << i) * binomial(&BigInt::from(dim), i) * binomial(radius, i))
        .sum()
}

/// Offsets `delta` with `|delta|_1 <= radius`, in lexicographic order.
#[derive(Clone, Debug)]
pub struct L1Ball {
    radius: i64,
    delta: Vec<i64>,
    done: bool,
}

impl L1Ball {
    pub fn new(dim: usize, radius: i64) -> Self {
        let mut ball = Self {
            radius,
            delta: vec![0; dim],
            done: radius < 0 || dim == 0,
        };
        if !ball.done {
            ball.reset_tail(0);
        }
        ball
    }

    fn remaining(&self, j: usize) -> i64 {
        self.radius - self.delta[..j].iter().map(|x| x.abs()).sum::<i64>()
    }

    fn reset_tail(&mut self, from: usize) {
        for i in from..self.delta.len() {
            self.delta[i] = -self.remaining(i);
        }
    }
}

impl Iterator for L1Ball {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.delta.clone();
        let mut j = self.delta.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            if self.delta[j] < self.remaining(j) {
                self.delta[j] += 1;
                self.reset_tail(j + 1);
                break;
            }
        }
        Some(out)
    }
}

/// The points of `B_k`, in lexicographic order.
pub fn bk_enumerate(sequence: &[Frequency], k: usize, cap: u64) -> Result<impl Iterator<Item = Frequency>> {
    let radius = bk_radius(sequence, k)?;
    let center = sequence[k - 1].clone();
    let count = ball_cardinality(center.dim(), &radius);
    if count > BigInt::from(cap) {
        return Err(Error::TooLarge { count, cap });
    }
    let r = radius.to_i64().expect("radius bounded by the cap");
    Ok(L1Ball::new(center.dim(), r).map(move |delta| center.offset(&delta)))
}

fn checked_monomial(gamma: &MultiIndex, m: &[i128]) -> Option<i128> {
    let mut acc: i128 = 1;
    for (&g, &x) in gamma.components().iter().zip(m) {
        for _ in 0..g {
            acc = acc.checked_mul(x)?;
        }
    }
    Some(acc)
}

/// `|m^alpha - ell m^beta| / Q_S(m)^{1/2}`, the modulus of
/// `(sigma_alpha(-m) + tau ell sigma_beta(-m)) / Q_S(m)^{1/2}` for
/// `tau = i^{|alpha|-|beta|}`.
fn iv_point(s: &Smoothness, alpha: &MultiIndex, beta: &MultiIndex, ell: f64, m: &Frequency) -> Result<f64> {
    let small: Option<Vec<i128>> = m.coords().iter().map(|c| c.to_i128()).collect();
    if let Some(small) = small {
        if small.iter().all(|&x| x != 0) {
            let mut q: Option<i128> = Some(0);
            for g in s.iter() {
                q = q.and_then(|acc| {
                    let v = checked_monomial(g, &small)?;
                    acc.checked_add(v.checked_mul(v)?)
                });
            }
            let a = checked_monomial(alpha, &small);
            let b = checked_monomial(beta, &small);
            if let (Some(q), Some(a), Some(b)) = (q, a, b) {
                if let Some(diff) = a.checked_sub(b) {
                    let num = (diff as f64 + (1.0 - ell) * b as f64).abs();
                    return Ok(num / (q as f64).sqrt());
                }
            }
        }
    }
    let q = q_s_exact(s, m);
    if q.is_zero() {
        return Err(Error::SingularPoint(m.to_string()));
    }
    let ell = BigRational::from_f64(ell).ok_or_else(|| Error::InvalidInput("ell is not finite".into()))?;
    let num = (BigRational::from_integer(alpha.monomial(m)) - ell * beta.monomial(m)).abs();
    Ok((&num * &num / q).to_f64().unwrap_or(f64::INFINITY).sqrt())
}

/// Rigorous upper bound for [`iv_point`] over the ball of `l1` radius `d`
/// around `n`, valid when every `n(j) > d`.
fn iv_ball_bound(s: &Smoothness, alpha: &MultiIndex, beta: &MultiIndex, ell: f64, n: &Frequency, d: &BigInt) -> Result<f64> {
    let low = Frequency::new(n.coords().iter().map(|c| c - d).collect());
    let q_low = q_s_exact(s, &low);
    if q_low.is_zero() || low.coords().iter().any(|c| !c.is_positive()) {
        return Err(Error::SingularPoint(low.to_string()));
    }
    let ell = BigRational::from_f64(ell).ok_or_else(|| Error::InvalidInput("ell is not finite".into()))?;
    let a = BigRational::from_integer(alpha.monomial(n));
    let b = BigRational::from_integer(beta.monomial(n));
    let da = BigRational::from_integer(alpha.shifted_monomial(n, d)) - &a;
    let db = BigRational::from_integer(beta.shifted_monomial(n, d)) - &b;
    let num = (&a - &ell * &b).abs() + da + &ell * db;
    Ok((&num * &num / BigRational::from_integer(q_low)).to_f64().unwrap_or(f64::INFINITY).sqrt())
}

fn iv_term(s: &Smoothness, alpha: &MultiIndex, beta: &MultiIndex, ell: f64, sequence: &[Frequency], k: usize, cap: u64) -> Result<IvTerm> {
    let radius = bk_radius(sequence, k)?;
    let center = &sequence[k - 1];
    let ball_size = ball_cardinality(center.dim(), &radius);
    if ball_size <= BigInt::from(cap) {
        let mut value = 0.0;
        for m in bk_enumerate(sequence, k, cap)? {
            value += iv_point(s, alpha, beta, ell, &m)?;
        }
        return Ok(IvTerm {
            k,
            radius,
            ball_size,
            value,
            method: IvMethod::Exact,
        });
    }
    if center.min_coord() <= radius {
        return Err(Error::TooLarge { count: ball_size, cap });
    }
    let per_point = iv_ball_bound(s, alpha, beta, ell, center, &radius)?;
    let value = per_point * ball_size.to_f64().unwrap_or(f64::INFINITY);
    Ok(IvTerm {
        k,
        radius,
        ball_size,
        value,
        method: IvMethod::Bound,
    })
}

fn iii_term(s: &Smoothness, alpha: &MultiIndex, beta: &MultiIndex, ell: f64, n: &Frequency) -> Result<f64> {
    Ok((normalized_symbol(s, alpha, n)? - ell * normalized_symbol(s, beta, n)?).abs())
}

fn check_parts(s: &Smoothness, w: &PropertyOWitness, sequence: &[Frequency], cap: u64) -> Result<ConditionReport> {
    let (alpha, beta) = (&w.alpha, &w.beta);
    let ell = estimate_ell(alpha, beta, sequence)?;
    let mut cond_i = true;
    for k in 2..=sequence.len() {
        cond_i &= bk_radius(sequence, k)? < sequence[k - 1].min_coord();
    }
    let hadamard_ratio = sequence
        .windows(2)
        .all(|p| p[1].first() >= &(p[0].first() * 3u32));
    let mut sum_iii = 0.0;
    let mut sum_iv = 0.0;
    let mut iv_terms = Vec::with_capacity(sequence.len());
    for (i, n) in sequence.iter().enumerate() {
        sum_iii += iii_term(s, alpha, beta, ell.ell_hat, n)?;
        let term = iv_term(s, alpha, beta, ell.ell_hat, sequence, i + 1, cap)?;
        sum_iv += term.value;
        iv_terms.push(term);
    }
    Ok(ConditionReport {
        cond_i,
        hadamard_ratio,
        ell_hat: ell.ell_hat,
        ell_drift: ell.drift,
        sum_iii,
        sum_iv,
        iv_terms,
        bounds_met: BoundsMet {
            iii: sum_iii < 0.5,
            iv: sum_iv < 1.0,
        },
    })
}

/// Recomputes the condition report of a plan.
pub fn check_conditions(s: &Smoothness, plan: &LacunaryPlan, cap: u64) -> Result<ConditionReport> {
    plan.validate()?;
    check_parts(s, &plan.witness, &plan.sequence, cap)
}

fn power_point(c: &[f64], t: f64) -> Result<Frequency> {
    let mut coords = Vec::with_capacity(c.len());
    for &cj in c {
        let v = t.powf(cj).round().max(1.0);
        let v = BigInt::from_f64(v).ok_or_else(|| Error::Overflow(format!("t^{cj} with t = {t:e}")))?;
        coords.push(v);
    }
    Ok(Frequency::new(coords))
}

/// The power-curve plan `n_k(j) = round(t_k^{c(j)})`, `t_k = t0 q^{k-1}`,
/// each `t_k` doubled until the plan invariants hold.
pub fn build_sequence(s: &Smoothness, w: &PropertyOWitness, k: usize, t0: f64, q: f64) -> Result<LacunaryPlan> {
    build_sequence_with(s, w, k, t0, q, &BuildOptions::default())
}

pub fn build_sequence_with(s: &Smoothness, w: &PropertyOWitness, k: usize, t0: f64, q: f64, opts: &BuildOptions) -> Result<LacunaryPlan> {
    if k == 0 {
        return Err(Error::EmptyPlan);
    }
    if !(t0.is_finite() && t0 > 1.0 && q.is_finite() && q > 1.0) {
        return Err(Error::InvalidInput(format!("need t0 > 1 and q > 1, got t0 = {t0}, q = {q}")));
    }
    if !verify_witness(s, w)? {
        return Err(Error::InvalidWitness("the witness conditions fail".into()));
    }
    let tau = compute_tau(&w.alpha, &w.beta)?;
    let c: Vec<f64> = w.c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let mut sequence: Vec<Frequency> = Vec::with_capacity(k);
    let mut ts = Vec::with_capacity(k);
    let mut radius = BigInt::zero();
    for idx in 1..=k {
        let mut t = t0 * q.powi(idx as i32 - 1);
        let mut doublings = 0;
        let n = loop {
            if !t.is_finite() || doublings > MAX_DOUBLINGS {
                return Err(Error::Overflow(format!("t_{idx} left the double range")));
            }
            let n = power_point(&c, t)?;
            let mut ok = match sequence.last() {
                None => true,
                Some(prev) => {
                    n.min_coord() > radius && n.first() >= &(prev.first() * 3u32) && n.min_coord() > prev.min_coord()
                }
            };
            if ok && opts.enforce_summability {
                let mut trial = sequence.clone();
                trial.push(n.clone());
                let budget_iii = 0.5f64.powi(idx as i32 + 2);
                let budget_iv = 0.5f64.powi(idx as i32 + 1);
                ok = iii_term(s, &w.alpha, &w.beta, 1.0, &n)? < budget_iii
                    && iv_term(s, &w.alpha, &w.beta, 1.0, &trial, idx, opts.cap.min(100_000))?.value < budget_iv;
            }
            if ok {
                break n;
            }
            t *= 2.0;
            doublings += 1;
        };
        radius += n.coords().iter().sum::<BigInt>();
        sequence.push(n);
        ts.push(t);
    }
    let mut rho_hat = f64::INFINITY;
    for n in &sequence {
        for g in [&w.alpha, &w.beta] {
            rho_hat = rho_hat.min(normalized_symbol(s, g, n)?);
        }
    }
    let radii = (1..=k).map(|i| bk_radius(&sequence, i)).collect::<Result<Vec<_>>>()?;
    let report = check_parts(s, w, &sequence, opts.cap)?;
    Ok(LacunaryPlan {
        smoothness: s.clone(),
        witness: w.clone(),
        k,
        t0,
        q,
        t: ts,
        sequence,
        tau,
        ell_hat: report.ell_hat,
        rho_hat,
        radii,
        report,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechProp {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// The three quantities of the `Q_S` ratio-stability proposition at `(m, n)`.
pub fn techprop_quantities(s: &Smoothness, m: &Frequency, n: &Frequency) -> Result<TechProp> {
    check_dim(s.dim(), m.dim())?;
    check_dim(s.dim(), n.dim())?;
    let qm = q_s_exact(s, m);
    let qn = q_s_exact(s, n);
    if qm.is_zero() {
        return Err(Error::SingularPoint(m.to_string()));
    }
    if qn.is_zero() {
        return Err(Error::SingularPoint(n.to_string()));
    }
    let q1 = (BigRational::one() - BigRational::new(qn, qm)).abs().to_f64().unwrap_or(f64::INFINITY);
    let mut q2 = 0.0;
    let mut q3 = 0.0;
    for g in s.iter() {
        let a = normalized_symbol(s, g, m)?;
        let b = normalized_symbol(s, g, n)?;
        q2 += (a - b).powi(2);
        // sigma_g(x) / |sigma_g(x)| = i^{|g|} sign(x^g); the i-power is common
        let sa = if g.monomial(m).is_negative() { -a } else { a };
        let sb = if g.monomial(n).is_negative() { -b } else { b };
        q3 += (sa - sb).powi(2);
    }
    Ok(TechProp {
        q1,
        q2: q2.sqrt(),
        q3: q3.sqrt(),
    })
}

/// How `estimate_rho_de` chooses test pairs for each candidate `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoSampler {
    /// `|n(j)|` ranges over `[rho, rho + window]`.
    pub window: u64,
    /// Candidates with at most this many pairs are tested exhaustively.
    pub exhaustive_cap: u64,
    /// Pairs drawn per candidate above the cap.
    pub samples: u64,
    pub seed: u64,
}

impl Default for RhoSampler {
    fn default() -> Self {
        Self {
            window: 8,
            exhaustive_cap: 200_000,
            samples: 20_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoCandidate {
    pub rho: u64,
    pub passed: bool,
    pub exhaustive: bool,
    pub pairs_tested: u64,
    /// Largest `q1, q2, q3` seen.
    pub worst: TechProp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub rho: u64,
    pub d: u64,
    pub eps: f64,
    pub candidates: Vec<RhoCandidate>,
    pub note: String,
}

pub const RHO_MAX_EXPONENT: u32 = 20;

fn test_pair(s: &Smoothness, n: &Frequency, m: &Frequency, eps: f64, worst: &mut TechProp) -> Result<bool> {
    let tp = techprop_quantities(s, m, n)?;
    worst.q1 = worst.q1.max(tp.q1);
    worst.q2 = worst.q2.max(tp.q2);
    worst.q3 = worst.q3.max(tp.q3);
    Ok(tp.q1 < eps && tp.q2 * tp.q2 < eps * eps && tp.q3 * tp.q3 < eps * eps)
}

fn sign_box_point(dim: usize, rho: u64, window: u64, mut index: u64) -> Frequency {
    let width = window + 1;
    let mut coords = Vec::with_capacity(dim);
    for _ in 0..dim {
        let negative = index % 2 == 1;
        index /= 2;
        let v = BigInt::from(rho + index % width);
        index /= width;
        coords.push(if negative { -v } else { v });
    }
    Frequency::new(coords)
}

/// Least `rho` in `{2, 4, ..., 2^20}` such that every tested pair with
/// `min_j |n(j)| >= rho` and `|n - m|_1 <= d` has `q1 < eps`,
/// `q2^2 < eps^2`, `q3^2 < eps^2`. Empirical: passing pairs in a finite
/// window do not prove the proposition's bound.
pub fn estimate_rho_de(s: &Smoothness, d: u64, eps: f64, sampler: &RhoSampler) -> Result<RhoEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    let dim = s.dim();
    let boxes = (2 * (sampler.window + 1)).checked_pow(dim as u32);
    let ball: Vec<Vec<i64>> = if ball_cardinality(dim, &BigInt::from(d)) <= BigInt::from(sampler.exhaustive_cap) {
        L1Ball::new(dim, d as i64).collect()
    } else {
        Vec::new()
    };
    let total = boxes.and_then(|b| b.checked_mul(ball.len() as u64)).filter(|_| !ball.is_empty());
    let mut candidates = Vec::new();
    for exponent in 1..=RHO_MAX_EXPONENT {
        let rho = 1u64 << exponent;
        let mut worst = TechProp { q1: 0.0, q2: 0.0, q3: 0.0 };
        if rho <= d {
            // some m in the ball has a zero coordinate, where Q_S vanishes
            candidates.push(RhoCandidate {
                rho,
                passed: false,
                exhaustive: true,
                pairs_tested: 0,
                worst,
            });
            continue;
        }
        let mut passed = true;
        let mut pairs = 0u64;
        let exhaustive = total.is_some_and(|t| t <= sampler.exhaustive_cap);
        if exhaustive {
            'outer: for idx in 0..boxes.expect("checked above") {
                let n = sign_box_point(dim, rho, sampler.window, idx);
                for delta in &ball {
                    pairs += 1;
                    if !test_pair(s, &n, &n.offset(delta), eps, &mut worst)? {
                        passed = false;
                        break 'outer;
                    }
                }
            }
        } else {
            let mut rng = stream_rng(sampler.seed, exponent as u64);
            for _ in 0..sampler.samples {
                let n: Vec<i64> = (0..dim)
                    .map(|_| {
                        let v = (rho + rng.random_range(0..=sampler.window)) as i64;
                        if rng.random_bool(0.5) { -v } else { v }
                    })
                    .collect();
                let delta = random_ball_offset(&mut rng, dim, d as i64);
                let n = Frequency::from_i64(&n);
                pairs += 1;
                if !test_pair(s, &n, &n.offset(&delta), eps, &mut worst)? {
                    passed = false;
                    break;
                }
            }
        }
        candidates.push(RhoCandidate {
            rho,
            passed,
            exhaustive,
            pairs_tested: pairs,
            worst,
        });
        if passed {
            return Ok(RhoEstimate {
                rho,
                d,
                eps,
                candidates,
                note: "empirical, not a proof".into(),
            });
        }
    }
    Err(Error::SearchExhausted {
        max_exponent: RHO_MAX_EXPONENT,
    })
}

/// A point of the `l1` ball: rejection sampling from the enclosing cube.
fn random_ball_offset<R: Rng>(rng: &mut R, dim: usize, radius: i64) -> Vec<i64> {
    loop {
        let delta: Vec<i64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
        if delta.iter().map(|x| x.abs()).sum::<i64>() <= radius {
            return delta;
        }
    }
}
