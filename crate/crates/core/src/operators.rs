//! The operators of the construction: `M`, convolution with the Riesz
//! product, the coordinate projection onto `Lambda = (n_k)`, their
//! composite, and empirical Paley constants.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{check_dim, derivative_multiplier, i_pow, normalized_symbol, q_s_at, symbol_at, Frequency, Smoothness};
use crate::riesz::{riesz_coeffs, RieszMeasure};
use crate::sequence::LacunaryPlan;
use crate::trigpoly::{
    paley_l2_norm, random_matrix_poly, sobolev_norm, sobolev_norm_s1, Coefficient, MatrixPoly, Quadrature, ScalarPoly, Support,
    TrigPoly,
};

/// `P_Lambda f`: the restriction of `f` to the frequencies in `lambda`.
pub fn paley_project<C: Coefficient>(f: &TrigPoly<C>, lambda: &[Frequency]) -> TrigPoly<C> {
    let keep: BTreeSet<Frequency> = lambda.iter().cloned().collect();
    f.restrict(&keep)
}

/// A plan together with its Riesz product and the constants `rho_k`.
#[derive(Clone, Debug)]
pub struct OperatorPipeline {
    plan: LacunaryPlan,
    riesz: RieszMeasure,
    rho: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoBoundCheck {
    /// `rho_hat (1 + ell_hat) / 2`
    pub lower: f64,
    /// `(1 + ell_hat) / 2`
    pub upper: f64,
    #[serde(with = "crate::json::complex_pairs")]
    pub rho: Vec<Complex64>,
    pub moduli: Vec<f64>,
    pub holds: bool,
}

/// `sigma_gamma(n) / Q_S(n)^{1/2}` without overflow.
fn unit_symbol(s: &Smoothness, gamma: &crate::multiindex::MultiIndex, n: &Frequency) -> Result<Complex64> {
    let sign = if gamma.monomial(n).is_negative() { -1.0 } else { 1.0 };
    Ok(i_pow(gamma.order() as i64) * sign * normalized_symbol(s, gamma, n)?)
}

impl OperatorPipeline {
    pub fn new(plan: LacunaryPlan) -> Result<Self> {
        plan.validate()?;
        let riesz = riesz_coeffs(&plan.sequence, plan.k)?;
        let s = &plan.smoothness;
        let rho = plan
            .sequence
            .iter()
            .map(|n| {
                let a = unit_symbol(s, plan.alpha(), n)?;
                let b = unit_symbol(s, plan.beta(), n)?;
                Ok((a + plan.tau * plan.ell_hat * b) * 0.5)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { plan, riesz, rho })
    }

    pub fn plan(&self) -> &LacunaryPlan {
        &self.plan
    }

    pub fn riesz(&self) -> &RieszMeasure {
        &self.riesz
    }

    /// `rho_k = (sigma_alpha(n_k) + tau ell sigma_beta(n_k)) / (2 Q_S(n_k)^{1/2})`.
    pub fn rho(&self) -> &[Complex64] {
        &self.rho
    }

    /// `Lambda = (n_1, ..., n_K)`.
    pub fn lambda(&self) -> &[Frequency] {
        &self.plan.sequence
    }

    /// Number of `k` with `m in B_k`.
    pub fn ball_multiplicity(&self, m: &Frequency) -> usize {
        self.plan
            .sequence
            .iter()
            .zip(&self.plan.radii)
            .filter(|(n, d)| m.l1_distance(n) <= **d)
            .count()
    }

    /// Membership in `Sigma = {0} u B_1 u ... u B_K`.
    pub fn in_sigma(&self, m: &Frequency) -> bool {
        m.is_zero() || self.ball_multiplicity(m) > 0
    }

    pub fn rho_bounds(&self) -> RhoBoundCheck {
        let ell = self.plan.ell_hat;
        let lower = 0.5 * self.plan.rho_hat * (1.0 + ell);
        let upper = 0.5 * (1.0 + ell);
        let moduli: Vec<f64> = self.rho.iter().map(|r| r.norm()).collect();
        let slack = 1e-12;
        let holds = moduli.iter().all(|&r| lower <= r + slack && r <= upper + slack);
        RhoBoundCheck {
            lower,
            upper,
            rho: self.rho.clone(),
            moduli,
            holds,
        }
    }
}

/// `Mf = d^alpha f + tau ell d^beta f - sum_k sum_{m in B_k}
/// (sigma_alpha(-m) + tau ell sigma_beta(-m)) f^(-m) e^{-i<x,m>}`, with the
/// plan's `ell_hat`.
pub fn operator_m<C: Coefficient>(f: &TrigPoly<C>, pipeline: &OperatorPipeline) -> Result<TrigPoly<C>> {
    let plan = pipeline.plan();
    check_dim(plan.smoothness.dim(), f.dim())?;
    let (alpha, beta) = (plan.alpha(), plan.beta());
    let weight = plan.tau * plan.ell_hat;
    let mut terms = Vec::with_capacity(f.len());
    for (n, c) in f.terms() {
        let mut factor = derivative_multiplier(alpha, n)? + weight * derivative_multiplier(beta, n)?;
        let hits = pipeline.ball_multiplicity(&n.neg());
        if hits > 0 {
            factor -= (symbol_at(alpha, n)? + weight * symbol_at(beta, n)?) * hits as f64;
        }
        terms.push((n.clone(), c.scale(factor)));
    }
    TrigPoly::from_terms(f.dim(), terms)
}

/// `M_R f = f * mu_R`.
pub fn convolve_riesz<C: Coefficient>(f: &TrigPoly<C>, riesz: &RieszMeasure) -> TrigPoly<C> {
    f.map_multiplier(|n| Complex64::new(riesz.coeff(n), 0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateProjection<C> {
    pub result: TrigPoly<C>,
    /// Input frequencies outside `Sigma`.
    pub outside_sigma: usize,
    /// `l2` mass (Hilbert-Schmidt per coefficient) outside `Sigma`.
    pub outside_sigma_mass: f64,
}

/// `P_{Sigma,Lambda}`: keeps the frequencies in `Lambda`, reporting any input
/// mass outside `Sigma`.
pub fn coordinate_projection<C: Coefficient>(f: &TrigPoly<C>, pipeline: &OperatorPipeline) -> CoordinateProjection<C> {
    let mut outside_sigma = 0;
    let mut mass = 0.0;
    for (n, c) in f.terms() {
        if !pipeline.in_sigma(n) {
            outside_sigma += 1;
            mass += c.hs_norm_sqr();
        }
    }
    CoordinateProjection {
        result: paley_project(f, pipeline.lambda()),
        outside_sigma,
        outside_sigma_mass: mass.sqrt(),
    }
}

/// `P_{Sigma,Lambda} M_R M f`.
pub fn composite_apply<C: Coefficient>(f: &TrigPoly<C>, pipeline: &OperatorPipeline) -> Result<TrigPoly<C>> {
    let mf = operator_m(f, pipeline)?;
    let convolved = convolve_riesz(&mf, pipeline.riesz());
    Ok(coordinate_projection(&convolved, pipeline).result)
}

/// `(sum_{n in Lambda} Q_S(n) |f^(n)|^2)^{1/2} / ||f||_{S,1}`.
pub fn paley_ratio(f: &ScalarPoly, s: &Smoothness, lambda: &[Frequency], quad: &Quadrature) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::UndefinedRatio("f = 0"));
    }
    let den = sobolev_norm(f, s, 1.0, quad)?;
    Ok(paley_l2_norm(f, s, lambda)? / den)
}

/// Matrix analogue of [`paley_ratio`]: Hilbert-Schmidt numerator over the
/// `W^S_1(T^d; S_1)` norm.
pub fn paley_ratio_matrix(g: &MatrixPoly, s: &Smoothness, lambda: &[Frequency], quad: &Quadrature) -> Result<f64> {
    if g.is_zero() {
        return Err(Error::UndefinedRatio("f = 0"));
    }
    let den = sobolev_norm_s1(g, s, quad)?;
    Ok(paley_l2_norm(g, s, lambda)? / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaleySampler {
    pub count: usize,
    /// Defaults to `Lambda` together with the box `[1, 2]^d`.
    pub support: Option<Support>,
    pub seed: u64,
    pub matrix_dims: Vec<usize>,
    /// Defaults to [`Quadrature::auto_for`] on the support.
    pub quadrature: Option<Quadrature>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaleyDimRow {
    pub m: usize,
    pub sup_ratio: f64,
    pub argmax_index: usize,
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaleyEstimate {
    pub sup_ratio: f64,
    pub argmax_m: usize,
    pub argmax_index: usize,
    pub count: usize,
    pub seed: u64,
    pub quadrature: Quadrature,
    pub per_dim: Vec<PaleyDimRow>,
}

/// Seed of the sample stream for matrix size `m`.
pub fn dimension_seed(seed: u64, m: usize) -> u64 {
    seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// The default sampling support: `Lambda` and the box `[1, 2]^d`.
pub fn default_support(dim: usize, lambda: &[Frequency]) -> Result<Support> {
    let lam = Support::List {
        dim,
        freqs: lambda.to_vec(),
    };
    lam.union(&Support::Box {
        lo: vec![1; dim],
        hi: vec![2; dim],
    })
}

/// Sample `i` for matrix size `m`.
pub fn paley_sample(support: &Support, m: usize, seed: u64, i: usize) -> Result<MatrixPoly> {
    random_matrix_poly(support, m, dimension_seed(seed, m), i as u64)
}

/// Largest sampled Paley ratio per matrix size. Empirical: the supremum
/// over a sample bounds the true constant from below only.
pub fn estimate_paley_constant(s: &Smoothness, lambda: &[Frequency], sampler: &PaleySampler) -> Result<PaleyEstimate> {
    if sampler.count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    if sampler.matrix_dims.is_empty() || sampler.matrix_dims.contains(&0) {
        return Err(Error::InvalidInput("matrix dimensions must be >= 1".into()));
    }
    let dim = s.dim();
    let support = match &sampler.support {
        Some(sup) => sup.clone(),
        None => default_support(dim, lambda)?,
    };
    check_dim(dim, support.dim())?;
    let quad = match &sampler.quadrature {
        Some(q) => q.clone(),
        None => {
            let spectrum: BTreeSet<Frequency> = support.frequencies()?.into_iter().collect();
            Quadrature::auto_for(dim, &spectrum)?
        }
    };
    let mut per_dim = Vec::with_capacity(sampler.matrix_dims.len());
    for &m in &sampler.matrix_dims {
        let ratios = (0..sampler.count)
            .into_par_iter()
            .map(|i| {
                let g = paley_sample(&support, m, sampler.seed, i)?;
                paley_ratio_matrix(&g, s, lambda, &quad)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (argmax_index, sup_ratio) = ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best });
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        per_dim.push(PaleyDimRow {
            m,
            sup_ratio,
            argmax_index,
            mean_ratio,
        });
    }
    let best = per_dim
        .iter()
        .fold(&per_dim[0], |b, r| if r.sup_ratio > b.sup_ratio { r } else { b });
    Ok(PaleyEstimate {
        sup_ratio: best.sup_ratio,
        argmax_m: best.m,
        argmax_index: best.argmax_index,
        count: sampler.count,
        seed: sampler.seed,
        quadrature: quad,
        per_dim,
    })
}

/// `Q_S(n)^{1/2} / sum_{gamma in S} |n^gamma|`, the ratio of a single
/// character.
pub fn character_ratio(s: &Smoothness, n: &Frequency) -> Result<f64> {
    let num = q_s_at(s, n)?.sqrt();
    let mut den = 0.0;
    for g in s.iter() {
        den += derivative_multiplier(g, n)?.norm();
    }
    if den == 0.0 {
        return Err(Error::UndefinedRatio("all derivatives vanish"));
    }
    Ok(num / den)
}

/// Total number of correction points `sum_k |B_k|` touched by `M` for a
/// given input (diagnostic).
pub fn correction_support<C: Coefficient>(f: &TrigPoly<C>, pipeline: &OperatorPipeline) -> BigInt {
    f.terms()
        .map(|(n, _)| BigInt::from(pipeline.ball_multiplicity(&n.neg())))
        .fold(BigInt::zero(), |a, b| a + b)
}
