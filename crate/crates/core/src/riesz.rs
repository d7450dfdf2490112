//! Truncated Riesz products `prod_{k<=K} (1 + cos<x, n_k>)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::Frequency;
use crate::sequence::bk_radius;

/// Largest truncation whose `3^K` sign patterns are enumerated.
pub const MAX_TERMS: usize = 16;

/// Fourier coefficients of the truncated product: `2^{-#{k : d_k != 0}}`
/// at `sum_k d_k n_k`, `d in {-1,0,1}^K`.
#[derive(Clone, Debug, PartialEq)]
pub struct RieszMeasure {
    sequence: Vec<Frequency>,
    coefficients: BTreeMap<Frequency, f64>,
}

impl RieszMeasure {
    pub fn sequence(&self) -> &[Frequency] {
        &self.sequence
    }

    pub fn coefficients(&self) -> &BTreeMap<Frequency, f64> {
        &self.coefficients
    }

    pub fn coeff(&self, n: &Frequency) -> f64 {
        self.coefficients.get(n).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// The coefficient map as a Fourier multiplier.
    pub fn multiplier(&self) -> BTreeMap<Frequency, Complex64> {
        self.coefficients
            .iter()
            .map(|(n, &v)| (n.clone(), Complex64::new(v, 0.0)))
            .collect()
    }

    /// Pointwise value of the product formula.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.sequence
            .iter()
            .map(|n| {
                let phase: f64 = n.to_f64().iter().zip(x).map(|(a, b)| a * b).sum();
                1.0 + phase.cos()
            })
            .product()
    }
}

#[derive(Serialize)]
struct CoefficientEntry<'a> {
    n: &'a Frequency,
    value: f64,
}

impl Serialize for RieszMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let entries: Vec<CoefficientEntry> = self
            .coefficients
            .iter()
            .map(|(n, &value)| CoefficientEntry { n, value })
            .collect();
        let mut st = serializer.serialize_struct("RieszMeasure", 2)?;
        st.serialize_field("sequence", &self.sequence)?;
        st.serialize_field("coefficients", &entries)?;
        st.end()
    }
}

fn truncate(sequence: &[Frequency], k: usize) -> Result<&[Frequency]> {
    if k > sequence.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: sequence.len(),
        });
    }
    if k > MAX_TERMS {
        return Err(Error::TooLarge {
            count: BigInt::from(3u32).pow(k as u32),
            cap: 3u64.pow(MAX_TERMS as u32),
        });
    }
    if let Some(n) = sequence.first() {
        if sequence[..k].iter().any(|m| m.dim() != n.dim()) {
            return Err(Error::InvalidInput("sequence terms of different dimensions".into()));
        }
    }
    Ok(&sequence[..k])
}

/// All `3^K` sign patterns in lexicographic order.
pub fn sign_patterns(k: usize) -> impl Iterator<Item = Vec<i8>> {
    let total = 3usize.pow(k as u32);
    (0..total).map(move |mut i| {
        let mut d = vec![0i8; k];
        for slot in d.iter_mut().rev() {
            *slot = (i % 3) as i8 - 1;
            i /= 3;
        }
        d
    })
}

fn combine(dim: usize, seq: &[Frequency], d: &[i8]) -> Frequency {
    let mut acc = vec![BigInt::zero(); dim];
    for (n, &s) in seq.iter().zip(d) {
        for (a, c) in acc.iter_mut().zip(n.coords()) {
            match s {
                1 => *a += c,
                -1 => *a -= c,
                _ => {}
            }
        }
    }
    Frequency::new(acc)
}

fn center_dim(sequence: &[Frequency]) -> usize {
    sequence.first().map_or(0, Frequency::dim)
}

fn first_coordinate(seq: &[Frequency], d: &[i8]) -> BigInt {
    seq.iter()
        .zip(d)
        .map(|(n, &s)| n.first() * BigInt::from(s))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimB {
    pub holds: bool,
    pub counterexample: Option<(Vec<i8>, Vec<i8>)>,
}

/// Injectivity of `d -> sum_k d_k n_k(1)` on `{-1,0,1}^K`.
pub fn verify_claim_b(sequence: &[Frequency], k: usize) -> Result<ClaimB> {
    let seq = truncate(sequence, k)?;
    let mut seen: HashMap<BigInt, Vec<i8>> = HashMap::new();
    for d in sign_patterns(k) {
        let key = first_coordinate(seq, &d);
        if let Some(prev) = seen.get(&key) {
            return Ok(ClaimB {
                holds: false,
                counterexample: Some((prev.clone(), d)),
            });
        }
        seen.insert(key, d);
    }
    Ok(ClaimB {
        holds: true,
        counterexample: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimA {
    pub holds: bool,
    pub counterexample: Option<Frequency>,
}

/// Every nonzero `m = sum d_k n_k` lies in `B_k` or `-B_k` for the largest
/// `k` with `d_k != 0`.
pub fn verify_claim_a(sequence: &[Frequency], k: usize) -> Result<ClaimA> {
    let seq = truncate(sequence, k)?;
    let radii = (1..=k).map(|i| bk_radius(seq, i)).collect::<Result<Vec<_>>>()?;
    for d in sign_patterns(k) {
        let Some(top) = d.iter().rposition(|&s| s != 0) else {
            continue;
        };
        let m = combine(center_dim(sequence), seq, &d);
        if m.is_zero() {
            continue;
        }
        let center = &seq[top];
        let inside = m.l1_distance(center) <= radii[top] || m.neg().l1_distance(center) <= radii[top];
        if !inside {
            return Ok(ClaimA {
                holds: false,
                counterexample: Some(m),
            });
        }
    }
    Ok(ClaimA {
        holds: true,
        counterexample: None,
    })
}

/// The coefficient map of the `K`-term product. Fails when two sign
/// patterns share a first coordinate.
pub fn riesz_coeffs(sequence: &[Frequency], k: usize) -> Result<RieszMeasure> {
    let seq = truncate(sequence, k)?;
    let claim = verify_claim_b(seq, k)?;
    if let Some((first, second)) = claim.counterexample {
        let dim = center_dim(sequence);
        let first_coordinate_only = combine(dim, seq, &first) != combine(dim, seq, &second);
        return Err(Error::Collision {
            first,
            second,
            first_coordinate_only,
        });
    }
    let coefficients = sign_patterns(k)
        .map(|d| {
            let active = d.iter().filter(|&&s| s != 0).count() as i32;
            (combine(center_dim(sequence), seq, &d), 0.5f64.powi(active))
        })
        .collect();
    Ok(RieszMeasure {
        sequence: seq.to_vec(),
        coefficients,
    })
}

pub fn riesz_spectrum(sequence: &[Frequency], k: usize) -> Result<BTreeSet<Frequency>> {
    Ok(riesz_coeffs(sequence, k)?.coefficients.into_keys().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claims {
    pub a: ClaimA,
    pub b: ClaimB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszSummary {
    pub size: usize,
    pub claims: Claims,
    /// The first spectrum points in lexicographic order.
    pub sample_frequencies: Vec<Frequency>,
}

/// Spectrum size, both claims and up to `samples` spectrum points.
pub fn riesz_summary(sequence: &[Frequency], k: usize, samples: usize) -> Result<RieszSummary> {
    let claims = Claims {
        a: verify_claim_a(sequence, k)?,
        b: verify_claim_b(sequence, k)?,
    };
    let spectrum = riesz_spectrum(sequence, k)?;
    Ok(RieszSummary {
        size: spectrum.len(),
        claims,
        sample_frequencies: spectrum.into_iter().take(samples).collect(),
    })
}
