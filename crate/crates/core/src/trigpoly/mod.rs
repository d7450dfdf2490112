//! Sparse trigonometric polynomials on `T^d` with scalar or matrix
//! coefficients.

mod norms;
mod quadrature;

pub use norms::{
    lp_norm, lp_norm_refined, paley_l2_norm, s1_l1_norm, sobolev_norm, sobolev_norm_s1,
    trace_norm, Refinement,
};
pub use quadrature::{GridSpec, LatticeRule, Quadrature};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multiindex::{check_dim, derivative_multiplier, Frequency, MultiIndex};
use crate::rng::{complex_gaussian, stream_rng};

pub type CMatrix = DMatrix<Complex64>;

/// Coefficients below this magnitude (entrywise) are not stored.
pub const ZERO_TOL: f64 = 1e-15;

/// A coefficient ring element: a complex scalar or a square complex matrix.
pub trait Coefficient: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    fn scale(&self, z: Complex64) -> Self;
    /// `self += z * other`
    fn add_scaled(&mut self, other: &Self, z: Complex64);
    fn zero_like(&self) -> Self;
    fn max_abs(&self) -> f64;
    /// `|a|^2`, or the squared Hilbert-Schmidt norm.
    fn hs_norm_sqr(&self) -> f64;
    /// `|a|`, or the trace-class norm.
    fn s1_norm(&self) -> f64;
    fn num_components(&self) -> usize;
    fn component(&self, i: usize) -> Complex64;
    fn set_component(&mut self, i: usize, v: Complex64);
    fn same_shape(&self, other: &Self) -> bool;

    fn is_negligible(&self) -> bool {
        self.max_abs() < ZERO_TOL
    }
}

impl Coefficient for Complex64 {
    fn scale(&self, z: Complex64) -> Self {
        self * z
    }
    fn add_scaled(&mut self, other: &Self, z: Complex64) {
        *self += other * z;
    }
    fn zero_like(&self) -> Self {
        Complex64::zero()
    }
    fn max_abs(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn hs_norm_sqr(&self) -> f64 {
        self.norm_sqr()
    }
    fn s1_norm(&self) -> f64 {
        self.norm()
    }
    fn num_components(&self) -> usize {
        1
    }
    fn component(&self, _: usize) -> Complex64 {
        *self
    }
    fn set_component(&mut self, _: usize, v: Complex64) {
        *self = v;
    }
    fn same_shape(&self, _: &Self) -> bool {
        true
    }
}

impl Coefficient for CMatrix {
    fn scale(&self, z: Complex64) -> Self {
        self.map(|a| a * z)
    }
    fn add_scaled(&mut self, other: &Self, z: Complex64) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += b * z;
        }
    }
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn max_abs(&self) -> f64 {
        self.iter()
            .map(|a| a.re.abs().max(a.im.abs()))
            .fold(0.0, f64::max)
    }
    fn hs_norm_sqr(&self) -> f64 {
        self.iter().map(|a| a.norm_sqr()).sum()
    }
    fn s1_norm(&self) -> f64 {
        trace_norm(self)
    }
    fn num_components(&self) -> usize {
        self.len()
    }
    fn component(&self, i: usize) -> Complex64 {
        self[i]
    }
    fn set_component(&mut self, i: usize, v: Complex64) {
        self[i] = v;
    }
    fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

/// A finitely supported map `Z^d -> coefficient`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly<C> {
    dim: usize,
    terms: BTreeMap<Frequency, C>,
}

pub type ScalarPoly = TrigPoly<Complex64>;
pub type MatrixPoly = TrigPoly<CMatrix>;

impl<C: Coefficient> TrigPoly<C> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// Sums coefficients at repeated frequencies and drops negligible ones.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Frequency, C)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (n, c) in terms {
            p.add_term(n, c)?;
        }
        Ok(p)
    }

    pub fn monomial(n: Frequency, c: C) -> Self {
        let dim = n.dim();
        let mut terms = BTreeMap::new();
        if !c.is_negligible() {
            terms.insert(n, c);
        }
        Self { dim, terms }
    }

    pub fn add_term(&mut self, n: Frequency, c: C) -> Result<()> {
        check_dim(self.dim, n.dim())?;
        if let Some(existing) = self.terms.values().next() {
            if !existing.same_shape(&c) {
                return Err(Error::InvalidInput("matrix coefficients of different sizes".into()));
            }
        }
        let entry = self.terms.remove(&n);
        let value = match entry {
            Some(mut old) => {
                old.add_scaled(&c, Complex64::new(1.0, 0.0));
                old
            }
            None => c,
        };
        if !value.is_negligible() {
            self.terms.insert(n, value);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Frequency, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, n: &Frequency) -> Option<&C> {
        self.terms.get(n)
    }

    /// `spec(f)`: the frequencies carrying a nonzero coefficient.
    pub fn spectrum(&self) -> BTreeSet<Frequency> {
        self.terms.keys().cloned().collect()
    }

    /// Applies a Fourier multiplier, dropping coefficients that vanish.
    pub fn map_multiplier<F>(&self, mut multiplier: F) -> Self
    where
        F: FnMut(&Frequency) -> Complex64,
    {
        let terms = self
            .terms
            .iter()
            .filter_map(|(n, c)| {
                let v = c.scale(multiplier(n));
                (!v.is_negligible()).then(|| (n.clone(), v))
            })
            .collect();
        Self {
            dim: self.dim,
            terms,
        }
    }

    /// `partial^gamma f`.
    pub fn derivative(&self, gamma: &MultiIndex) -> Result<Self> {
        check_dim(self.dim, gamma.dim())?;
        Ok(self.map_multiplier(|n| derivative_multiplier(gamma, n).expect("dimension checked")))
    }

    /// Multiplier given as a map; frequencies absent from it are killed.
    pub fn convolve(&self, multiplier: &BTreeMap<Frequency, Complex64>) -> Self {
        self.map_multiplier(|n| multiplier.get(n).copied().unwrap_or_default())
    }

    /// Keeps only the frequencies in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Frequency>) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(n, _)| keep.contains(*n))
            .map(|(n, c)| (n.clone(), c.clone()))
            .collect();
        Self {
            dim: self.dim,
            terms,
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        self.map_multiplier(|_| z)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (n, c) in &other.terms {
            out.add_term(n.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Largest `|n(j)|` over the spectrum.
    pub fn max_abs_frequency(&self) -> BigInt {
        self.terms.keys().map(Frequency::max_abs).max().unwrap_or_default()
    }

    /// `sqrt(sum_n ||f^(n)||_HS^2)`.
    pub fn coefficient_l2(&self) -> f64 {
        self.terms.values().map(Coefficient::hs_norm_sqr).sum::<f64>().sqrt()
    }
}

impl ScalarPoly {
    /// The character `chi_n`.
    pub fn character(n: Frequency) -> Self {
        Self::monomial(n, Complex64::new(1.0, 0.0))
    }

    /// Pointwise value at `x` in radians.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(n, c)| {
                let phase: f64 = n.to_f64().iter().zip(x).map(|(a, b)| a * b).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum())
    }

    /// Product of polynomials (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut out = Self::zero(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca * cb)?;
            }
        }
        Ok(out)
    }

    /// Embeds as a `1x1`-matrix polynomial.
    pub fn to_matrix(&self) -> MatrixPoly {
        TrigPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.clone(), CMatrix::from_element(1, 1, *c)))
                .collect(),
        }
    }
}

impl MatrixPoly {
    pub fn matrix_dim(&self) -> Option<usize> {
        self.terms.values().next().map(|m| m.nrows())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffKind {
    Scalar,
    Matrix(usize),
}

/// Support of a random polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Every lattice point of the box `lo <= n <= hi`.
    Box { lo: Vec<i64>, hi: Vec<i64> },
    List { dim: usize, freqs: Vec<Frequency> },
}

impl Support {
    pub fn dim(&self) -> usize {
        match self {
            Support::Box { lo, .. } => lo.len(),
            Support::List { dim, .. } => *dim,
        }
    }

    /// Frequencies in lexicographic order (boxes) or list order.
    pub fn frequencies(&self) -> Result<Vec<Frequency>> {
        match self {
            Support::Box { lo, hi } => {
                check_dim(lo.len(), hi.len())?;
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Ok(Vec::new());
                }
                let mut out = Vec::new();
                let mut cur = lo.clone();
                loop {
                    out.push(Frequency::from_i64(&cur));
                    let mut j = cur.len();
                    loop {
                        if j == 0 {
                            return Ok(out);
                        }
                        j -= 1;
                        if cur[j] < hi[j] {
                            cur[j] += 1;
                            break;
                        }
                        cur[j] = lo[j];
                    }
                }
            }
            Support::List { dim, freqs } => {
                for n in freqs {
                    check_dim(*dim, n.dim())?;
                }
                Ok(freqs.clone())
            }
        }
    }

    /// Union with another support, keeping first-seen order.
    pub fn union(&self, other: &Support) -> Result<Support> {
        check_dim(self.dim(), other.dim())?;
        let mut seen = BTreeSet::new();
        let mut freqs = Vec::new();
        for n in self.frequencies()?.into_iter().chain(other.frequencies()?) {
            if seen.insert(n.clone()) {
                freqs.push(n);
            }
        }
        Ok(Support::List {
            dim: self.dim(),
            freqs,
        })
    }
}

fn random_coefficients<R: Rng>(rng: &mut R, freqs: Vec<Frequency>, m: Option<usize>) -> Vec<(Frequency, CMatrix)> {
    freqs
        .into_iter()
        .map(|n| {
            let size = m.unwrap_or(1);
            let c = CMatrix::from_fn(size, size, |_, _| complex_gaussian(rng));
            (n, c)
        })
        .collect()
}

/// Scalar polynomial with standard complex Gaussian coefficients on the
/// support; reproducible from `seed` and `stream`.
pub fn random_scalar_poly(support: &Support, seed: u64, stream: u64) -> Result<ScalarPoly> {
    let mut rng = stream_rng(seed, stream);
    let terms = random_coefficients(&mut rng, support.frequencies()?, None);
    ScalarPoly::from_terms(support.dim(), terms.into_iter().map(|(n, c)| (n, c[(0, 0)])))
}

/// Matrix polynomial with i.i.d. standard complex Gaussian entries.
pub fn random_matrix_poly(support: &Support, m: usize, seed: u64, stream: u64) -> Result<MatrixPoly> {
    if m == 0 {
        return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, stream);
    let terms = random_coefficients(&mut rng, support.frequencies()?, Some(m));
    MatrixPoly::from_terms(support.dim(), terms)
}

/// Either coefficient kind, as read from JSON.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPoly {
    Scalar(ScalarPoly),
    Matrix(MatrixPoly),
}

pub fn random_trigpoly(support: &Support, kind: CoeffKind, seed: u64) -> Result<AnyPoly> {
    match kind {
        CoeffKind::Scalar => random_scalar_poly(support, seed, 0).map(AnyPoly::Scalar),
        CoeffKind::Matrix(m) => random_matrix_poly(support, m, seed, 0).map(AnyPoly::Matrix),
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarTerm {
    n: Frequency,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MatrixTerm {
    n: Frequency,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    terms: Vec<serde_json::Value>,
}

pub(crate) fn matrix_to_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, String> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err("matrix coefficients must be square and nonempty".into());
    }
    Ok(CMatrix::from_fn(m, m, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

impl Serialize for ScalarPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|(n, c)| {
                serde_json::to_value(ScalarTerm {
                    n: n.clone(),
                    re: c.re,
                    im: c.im,
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(serde::ser::Error::custom)?;
        PolyRepr {
            dim: self.dim,
            kind: "scalar".into(),
            m: None,
            terms,
        }
        .serialize(serializer)
    }
}

impl Serialize for MatrixPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|(n, c)| {
                serde_json::to_value(MatrixTerm {
                    n: n.clone(),
                    matrix: matrix_to_rows(c),
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(serde::ser::Error::custom)?;
        PolyRepr {
            dim: self.dim,
            kind: "matrix".into(),
            m: self.matrix_dim(),
            terms,
        }
        .serialize(serializer)
    }
}

impl Serialize for AnyPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AnyPoly::Scalar(p) => p.serialize(serializer),
            AnyPoly::Matrix(p) => p.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for AnyPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        match repr.kind.as_str() {
            "scalar" => {
                let mut p = ScalarPoly::zero(repr.dim);
                for t in repr.terms {
                    let t: ScalarTerm = serde_json::from_value(t).map_err(D::Error::custom)?;
                    p.add_term(t.n, Complex64::new(t.re, t.im))
                        .map_err(D::Error::custom)?;
                }
                Ok(AnyPoly::Scalar(p))
            }
            "matrix" => {
                let mut p = MatrixPoly::zero(repr.dim);
                for t in repr.terms {
                    let t: MatrixTerm = serde_json::from_value(t).map_err(D::Error::custom)?;
                    let c = matrix_from_rows(&t.matrix).map_err(D::Error::custom)?;
                    if let Some(m) = repr.m {
                        if c.nrows() != m {
                            return Err(D::Error::custom("coefficient size disagrees with m"));
                        }
                    }
                    p.add_term(t.n, c).map_err(D::Error::custom)?;
                }
                Ok(AnyPoly::Matrix(p))
            }
            other => Err(D::Error::custom(format!("unknown coefficient kind {other:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ScalarPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match AnyPoly::deserialize(deserializer)? {
            AnyPoly::Scalar(p) => Ok(p),
            AnyPoly::Matrix(_) => Err(D::Error::custom("expected scalar coefficients")),
        }
    }
}

impl<'de> Deserialize<'de> for MatrixPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match AnyPoly::deserialize(deserializer)? {
            AnyPoly::Matrix(p) => Ok(p),
            AnyPoly::Scalar(p) => Ok(p.to_matrix()),
        }
    }
}
