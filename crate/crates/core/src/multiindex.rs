//! Multi-indices, smoothness sets, lattice frequencies and the symbols
//! `sigma_gamma` together with the fundamental polynomial `Q_S`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point `gamma` of `N^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("multi-index with d = 0"));
        }
        Ok(Self(components))
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|gamma|`, the sum of the components.
    pub fn order(&self) -> u64 {
        self.0.iter().map(|&g| g as u64).sum()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&g| g == 0)
    }

    /// Componentwise `self <= other`.
    pub fn is_below(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        check_dim(self.dim(), other.dim())?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Exact monomial `n^gamma` over the integers.
    pub fn monomial(&self, n: &Frequency) -> BigInt {
        let mut acc = BigInt::from(1);
        for (g, x) in self.0.iter().zip(n.coords()) {
            if *g > 0 {
                acc *= num_traits::pow(x.clone(), *g as usize);
            }
        }
        acc
    }

    /// Exact `(n + shift*1)^gamma`.
    pub(crate) fn shifted_monomial(&self, n: &Frequency, shift: &BigInt) -> BigInt {
        let mut acc = BigInt::from(1);
        for (g, x) in self.0.iter().zip(n.coords()) {
            if *g > 0 {
                acc *= num_traits::pow(x + shift, *g as usize);
            }
        }
        acc
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, g) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A finite downward-closed subset of `N^d` containing the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Smoothness {
    dim: usize,
    elements: BTreeSet<MultiIndex>,
}

impl Smoothness {
    /// Validates `candidate` as a smoothness.
    pub fn new(candidate: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        let elements: BTreeSet<MultiIndex> = candidate.into_iter().collect();
        let dim = common_dim(&elements)?;
        if !is_downward_closed(&elements) {
            return Err(Error::InvalidInput(
                "set is not a smoothness (missing the origin or not downward closed)".into(),
            ));
        }
        Ok(Self { dim, elements })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| MultiIndex::new(r.clone()))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, gamma: &MultiIndex) -> bool {
        self.elements.contains(gamma)
    }

    /// Elements in ascending lexicographic order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &MultiIndex> + Clone {
        self.elements.iter()
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.elements.iter().map(|g| g.0.clone()).collect()
    }
}

impl Serialize for Smoothness {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Smoothness {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<u32>>::deserialize(deserializer)?;
        Smoothness::from_rows(&rows).map_err(D::Error::custom)
    }
}

fn common_dim(elements: &BTreeSet<MultiIndex>) -> Result<usize> {
    let first = elements
        .iter()
        .next()
        .ok_or(Error::EmptyInput("empty set of multi-indices"))?;
    let dim = first.dim();
    for g in elements {
        check_dim(dim, g.dim())?;
    }
    Ok(dim)
}

fn is_downward_closed(elements: &BTreeSet<MultiIndex>) -> bool {
    let Some(first) = elements.iter().next() else {
        return false;
    };
    if !elements.contains(&MultiIndex::zero(first.dim())) {
        return false;
    }
    // Closure under lowering one coordinate by one generates every lower point.
    elements.iter().all(|g| {
        (0..g.dim()).all(|j| {
            if g.0[j] == 0 {
                return true;
            }
            let mut lower = g.clone();
            lower.0[j] -= 1;
            elements.contains(&lower)
        })
    })
}

/// True iff the candidate contains `0` and is downward closed.
pub fn is_smoothness(candidate: &[MultiIndex]) -> Result<bool> {
    let elements: BTreeSet<MultiIndex> = candidate.iter().cloned().collect();
    common_dim(&elements)?;
    Ok(is_downward_closed(&elements))
}

/// Smallest smoothness containing the generators.
pub fn saturate(generators: &[MultiIndex]) -> Result<Smoothness> {
    let gens: BTreeSet<MultiIndex> = generators.iter().cloned().collect();
    let dim = common_dim(&gens)?;
    let mut elements = BTreeSet::new();
    elements.insert(MultiIndex::zero(dim));
    for g in &gens {
        let mut current = vec![0u32; dim];
        loop {
            elements.insert(MultiIndex(current.clone()));
            // odometer over the box [0, g]
            let mut j = 0;
            while j < dim {
                if current[j] < g.0[j] {
                    current[j] += 1;
                    break;
                }
                current[j] = 0;
                j += 1;
            }
            if j == dim {
                break;
            }
        }
    }
    Ok(Smoothness { dim, elements })
}

/// A point of the dual lattice `Z^d`, with arbitrary-precision coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency(Vec<BigInt>);

impl Frequency {
    pub fn new(coords: Vec<BigInt>) -> Self {
        Self(coords)
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Self(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![BigInt::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn first(&self) -> &BigInt {
        &self.0[0]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn neg(&self) -> Frequency {
        Frequency(self.0.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Frequency) -> Frequency {
        Frequency(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Frequency) -> Frequency {
        Frequency(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn offset(&self, delta: &[i64]) -> Frequency {
        Frequency(self.0.iter().zip(delta).map(|(a, &b)| a + b).collect())
    }

    pub fn l1_norm(&self) -> BigInt {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn l1_distance(&self, other: &Frequency) -> BigInt {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn max_abs(&self) -> BigInt {
        self.0.iter().map(|c| c.abs()).max().unwrap_or_default()
    }

    pub fn min_coord(&self) -> BigInt {
        self.0.iter().min().cloned().unwrap_or_default()
    }

    pub fn has_zero_coord(&self) -> bool {
        self.0.iter().any(Zero::is_zero)
    }

    /// Nearest doubles (infinite beyond the f64 range).
    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY))
            .collect()
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, c) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn bigint_to_json(value: &BigInt) -> serde_json::Number {
    serde_json::Number::from_str(&value.to_string()).expect("decimal integers are valid JSON numbers")
}

pub(crate) fn bigint_from_json(value: &serde_json::Value) -> std::result::Result<BigInt, String> {
    let text = match value {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        other => return Err(format!("expected an integer, found {other}")),
    };
    BigInt::from_str(text.trim()).map_err(|e| format!("bad integer {text:?}: {e}"))
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let numbers: Vec<serde_json::Number> = self.0.iter().map(bigint_to_json).collect();
        numbers.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(deserializer)?;
        raw.iter()
            .map(bigint_from_json)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Frequency)
            .map_err(D::Error::custom)
    }
}

/// `i^k` for any integer `k`, exact.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `sigma_gamma(x) = prod_j (i x(j))^{gamma(j)}` when every `x(j) != 0`,
/// and `0` otherwise (also for `gamma = 0`).
pub fn symbol_eval(gamma: &MultiIndex, x: &[f64]) -> Result<Complex64> {
    check_dim(gamma.dim(), x.len())?;
    if x.contains(&0.0) {
        return Ok(Complex64::zero());
    }
    Ok(i_pow(gamma.order() as i64) * real_monomial(gamma, x))
}

fn real_monomial(gamma: &MultiIndex, x: &[f64]) -> f64 {
    gamma
        .components()
        .iter()
        .zip(x)
        .map(|(&g, &v)| v.powi(g as i32))
        .product()
}

/// `Q_S(x) = sum_{gamma in S} |sigma_gamma(x)|^2`.
pub fn q_s_eval(s: &Smoothness, x: &[f64]) -> Result<f64> {
    check_dim(s.dim(), x.len())?;
    if x.contains(&0.0) {
        return Ok(0.0);
    }
    Ok(s.iter().map(|g| real_monomial(g, x).powi(2)).sum())
}

/// Fourier multiplier of the true derivative `partial^gamma` at `n`, with
/// `0^0 = 1`.
pub fn derivative_multiplier(gamma: &MultiIndex, n: &Frequency) -> Result<Complex64> {
    check_dim(gamma.dim(), n.dim())?;
    let mut magnitude = 1.0f64;
    for (&g, c) in gamma.components().iter().zip(n.coords()) {
        if g == 0 {
            continue;
        }
        if c.is_zero() {
            return Ok(Complex64::zero());
        }
        magnitude *= c.to_f64().unwrap_or(f64::INFINITY).powi(g as i32);
    }
    Ok(i_pow(gamma.order() as i64) * magnitude)
}

/// `sigma_gamma` at a lattice point.
pub fn symbol_at(gamma: &MultiIndex, n: &Frequency) -> Result<Complex64> {
    symbol_eval(gamma, &n.to_f64())
}

/// `Q_S` at a lattice point, computed exactly and rounded once.
pub fn q_s_at(s: &Smoothness, n: &Frequency) -> Result<f64> {
    check_dim(s.dim(), n.dim())?;
    Ok(q_s_exact(s, n).to_f64().unwrap_or(f64::INFINITY))
}

/// Exact `Q_S(n)` (zero when a coordinate vanishes).
pub fn q_s_exact(s: &Smoothness, n: &Frequency) -> BigInt {
    if n.has_zero_coord() {
        return BigInt::zero();
    }
    s.iter().map(|g| num_traits::pow(g.monomial(n), 2)).sum()
}

/// `|sigma_gamma(n)| / Q_S(n)^{1/2}` without intermediate overflow.
pub fn normalized_symbol(s: &Smoothness, gamma: &MultiIndex, n: &Frequency) -> Result<f64> {
    let q = q_s_exact(s, n);
    if q.is_zero() {
        return Err(Error::SingularPoint(n.to_string()));
    }
    let num = num_traits::pow(gamma.monomial(n), 2);
    let ratio = BigRational::new(num, q).to_f64().unwrap_or(f64::NAN);
    Ok(ratio.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn smoothness_recognition() {
        assert!(is_smoothness(&[mi(&[0, 0])]).unwrap());
        assert!(is_smoothness(&[mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1])]).unwrap());
        assert!(!is_smoothness(&[mi(&[0, 0]), mi(&[1, 1])]).unwrap());
        assert!(!is_smoothness(&[mi(&[1, 0])]).unwrap());
        assert!(matches!(
            is_smoothness(&[mi(&[0, 0]), mi(&[0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn saturation_examples() {
        let s = saturate(&[mi(&[2, 0]), mi(&[0, 1])]).unwrap();
        assert_eq!(s.to_rows(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![2, 0]]);
        assert_eq!(saturate(&[mi(&[0, 0])]).unwrap().to_rows(), vec![vec![0, 0]]);
        assert_eq!(saturate(&[mi(&[1, 1])]).unwrap().len(), 4);
        assert!(matches!(saturate(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn symbol_examples() {
        let z = symbol_eval(&mi(&[1, 0]), &[2.0, 3.0]).unwrap();
        assert_eq!(z, Complex64::new(0.0, 2.0));
        let z = symbol_eval(&mi(&[2, 1]), &[1.0, 1.0]).unwrap();
        assert_eq!(z, Complex64::new(0.0, -1.0));
        assert_eq!(symbol_eval(&mi(&[0, 0]), &[0.0, 5.0]).unwrap(), Complex64::zero());
        assert_eq!(symbol_eval(&mi(&[3, 2]), &[0.0, 5.0]).unwrap(), Complex64::zero());
    }

    #[test]
    fn q_s_examples() {
        let s = saturate(&[mi(&[1, 0]), mi(&[0, 1])]).unwrap();
        assert_eq!(q_s_eval(&s, &[3.0, -4.0]).unwrap(), 1.0 + 9.0 + 16.0);
        let trivial = saturate(&[mi(&[0, 0])]).unwrap();
        assert_eq!(q_s_eval(&trivial, &[7.0, 2.0]).unwrap(), 1.0);
        assert_eq!(q_s_eval(&s, &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(q_s_at(&s, &Frequency::from_i64(&[100, 101])).unwrap(), 20202.0);
    }

    #[test]
    fn derivative_multiplier_examples() {
        let n = Frequency::from_i64(&[0, 7]);
        assert_eq!(derivative_multiplier(&mi(&[0, 0]), &n).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(derivative_multiplier(&mi(&[1, 0]), &n).unwrap(), Complex64::zero());
        assert_eq!(derivative_multiplier(&mi(&[0, 1]), &n).unwrap(), Complex64::new(0.0, 7.0));
    }

    #[test]
    fn huge_coordinates_normalize_without_overflow() {
        let s = saturate(&[mi(&[2, 0]), mi(&[0, 1])]).unwrap();
        let big = BigInt::from(10).pow(200);
        let n = Frequency::new(vec![big.clone(), &big * &big]);
        let r = normalized_symbol(&s, &mi(&[2, 0]), &n).unwrap();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn frequency_json_is_exact() {
        let big = BigInt::from(3).pow(90);
        let n = Frequency::new(vec![big.clone(), -big]);
        let text = serde_json::to_string(&n).unwrap();
        assert!(!text.contains('"'));
        let back: Frequency = serde_json::from_str(&text).unwrap();
        assert_eq!(back, n);
        let quoted: Frequency = serde_json::from_str("[\"12\", -3]").unwrap();
        assert_eq!(quoted, Frequency::from_i64(&[12, -3]));
    }

    fn small_index(dim: usize) -> impl Strategy<Value = MultiIndex> {
        proptest::collection::vec(0u32..4, dim).prop_map(MultiIndex)
    }

    proptest! {
        #[test]
        fn symbol_modulus_is_monomial(g in small_index(2), x in proptest::collection::vec(0.5f64..3.0, 2), flip in any::<bool>()) {
            let mut x = x;
            if flip { x[0] = -x[0]; }
            let z = symbol_eval(&g, &x).unwrap();
            let expected: f64 = g.components().iter().zip(&x).map(|(&a, v)| v.abs().powi(a as i32)).product();
            prop_assert!((z.norm() - expected).abs() <= 1e-12 * expected.max(1.0));
        }

        #[test]
        fn q_s_dominates_each_symbol(gens in proptest::collection::vec(small_index(2), 1..4),
                                     x in proptest::collection::vec(-5.0f64..5.0, 2)) {
            let s = saturate(&gens).unwrap();
            let q = q_s_eval(&s, &x).unwrap();
            for g in s.iter() {
                let z = symbol_eval(g, &x).unwrap();
                prop_assert!(q + 1e-9 * q.abs() >= z.norm_sqr());
            }
        }

        #[test]
        fn multiplier_matches_symbol_off_axes(g in small_index(3), n in proptest::collection::vec(1i64..20, 3), signs in proptest::collection::vec(any::<bool>(), 3)) {
            let coords: Vec<i64> = n.iter().zip(&signs).map(|(&v, &s)| if s { -v } else { v }).collect();
            let freq = Frequency::from_i64(&coords);
            prop_assert_eq!(derivative_multiplier(&g, &freq).unwrap(), symbol_at(&g, &freq).unwrap());
        }

        #[test]
        fn saturate_is_idempotent(gens in proptest::collection::vec(small_index(3), 1..4)) {
            let once = saturate(&gens).unwrap();
            let again = saturate(&once.iter().cloned().collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(&once, &again);
            prop_assert!(is_smoothness(&once.iter().cloned().collect::<Vec<_>>()).unwrap());
        }
    }
}
