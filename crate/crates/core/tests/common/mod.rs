//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paley_core::multiindex::{saturate, Frequency, MultiIndex, Smoothness};
use paley_core::property_o::find_witness;
use paley_core::sequence::{build_sequence, LacunaryPlan};

pub fn mi(c: &[u32]) -> MultiIndex {
    MultiIndex::new(c.to_vec()).unwrap()
}

pub fn freq(c: &[i64]) -> Frequency {
    Frequency::from_i64(c)
}

/// `saturate{(2,0),(0,1)}`.
pub fn reference_smoothness() -> Smoothness {
    saturate(&[mi(&[2, 0]), mi(&[0, 1])]).unwrap()
}

/// The builder's plan for the reference smoothness with `t0 = 100`, `q = 10`.
pub fn reference_plan(k: usize) -> LacunaryPlan {
    let s = reference_smoothness();
    let w = find_witness(&s).unwrap();
    build_sequence(&s, &w, k, 100.0, 10.0).unwrap()
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn dot(a: &[u32], c: &[BigRational]) -> BigRational {
    a.iter().zip(c).map(|(&x, y)| y * BigInt::from(x)).sum()
}

/// Property (O) for one pair in two variables: `<alpha, c> = <beta, c> = 1`
/// has at most one solution when `alpha, beta` are independent (Cramer),
/// none when they are parallel and distinct. Returns the solution when it is
/// strictly positive and `<gamma, c> <= 1` on `rows`.
pub fn pair_feasible_2d(rows: &[Vec<u32>], alpha: &[u32], beta: &[u32]) -> Option<Vec<BigRational>> {
    let det = i64::from(alpha[0]) * i64::from(beta[1]) - i64::from(alpha[1]) * i64::from(beta[0]);
    if det == 0 {
        return None;
    }
    let d = rat(det);
    let c = vec![
        (rat(i64::from(beta[1])) - rat(i64::from(alpha[1]))) / &d,
        (rat(i64::from(alpha[0])) - rat(i64::from(beta[0]))) / &d,
    ];
    let one = BigRational::one();
    if c.iter().any(|x| !x.is_positive()) || dot(alpha, &c) != one || dot(beta, &c) != one {
        return None;
    }
    rows.iter().all(|g| dot(g, &c) <= one).then_some(c)
}

/// Property (O) in two variables by exhausting opposite-parity pairs.
pub fn has_property_o_2d(rows: &[Vec<u32>]) -> bool {
    rows.iter().any(|a| {
        rows.iter().any(|b| {
            let parity = (a.iter().sum::<u32>() + b.iter().sum::<u32>()) % 2 == 1;
            parity && pair_feasible_2d(rows, a, b).is_some()
        })
    })
}

/// Every point below some generator, as sorted rows.
pub fn lower_closure(generators: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = BTreeSet::new();
    out.insert(vec![0, 0]);
    for g in generators {
        for i in 0..=g[0] {
            for j in 0..=g[1] {
                out.insert(vec![i, j]);
            }
        }
    }
    out.into_iter().collect()
}

/// Seeded random two-dimensional smoothness with up to three generators in
/// `[0, 3]^2`.
pub fn random_smoothness_rows(rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    let count = rng.random_range(1..=3);
    let gens: Vec<Vec<u32>> = (0..count)
        .map(|_| vec![rng.random_range(0..=3), rng.random_range(0..=3)])
        .collect();
    lower_closure(&gens)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients of `prod_k (1 + (chi_{n_k} + chi_{-n_k}) / 2)` by direct
/// expansion with exact dyadic weights.
pub fn riesz_expansion(seq: &[Frequency]) -> BTreeMap<Vec<BigInt>, BigRational> {
    let dim = seq.first().map_or(0, Frequency::dim);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut acc: BTreeMap<Vec<BigInt>, BigRational> = BTreeMap::new();
    acc.insert(vec![BigInt::zero(); dim], BigRational::one());
    for n in seq {
        let mut next: BTreeMap<Vec<BigInt>, BigRational> = BTreeMap::new();
        for (point, w) in &acc {
            for (sign, factor) in [(0i32, BigRational::one()), (1, half.clone()), (-1, half.clone())] {
                let p: Vec<BigInt> = point
                    .iter()
                    .zip(n.coords())
                    .map(|(a, b)| a + b * BigInt::from(sign))
                    .collect();
                *next.entry(p).or_insert_with(BigRational::zero) += w * &factor;
            }
        }
        acc = next;
    }
    acc
}

/// Points of the `l1` ball of radius `r` in `Z^d`, counted directly.
pub fn l1_ball_count(d: usize, r: i64) -> u64 {
    fn rec(d: usize, r: i64) -> u64 {
        if d == 0 {
            return 1;
        }
        (-r..=r).map(|x| rec(d - 1, r - x.abs())).sum()
    }
    rec(d, r)
}

/// `1 + n(1)^2 + n(2)^2`, the fundamental polynomial of `{(0,0),(1,0),(0,1)}`.
pub fn q_simple(n: &[i64]) -> BigRational {
    rat(1 + n[0] * n[0] + n[1] * n[1])
}

/// `|1 - Q(n) / Q(m)|` in exact arithmetic.
pub fn q1_simple(n: &[i64], m: &[i64]) -> BigRational {
    (BigRational::one() - q_simple(n) / q_simple(m)).abs()
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}

/// `n^gamma` as a float.
pub fn monomial_f64(n: &Frequency, gamma: &MultiIndex) -> f64 {
    n.to_f64()
        .iter()
        .zip(gamma.components())
        .map(|(x, &g)| x.powi(g as i32))
        .product()
}

pub fn i_power(k: u64) -> Complex64 {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][(k % 4) as usize]
}

/// `sigma_gamma(n) = i^{|gamma|} n^gamma`.
pub fn symbol(n: &Frequency, gamma: &MultiIndex) -> Complex64 {
    i_power(gamma.order()) * monomial_f64(n, gamma)
}

/// `sum_{gamma in S} |n^gamma|^2` in floats.
pub fn q_s(s: &Smoothness, n: &Frequency) -> f64 {
    s.iter().map(|g| monomial_f64(n, g).powi(2)).sum()
}

/// Sum of singular values via the eigenvalues of `x^* x`.
pub fn trace_norm_oracle(x: &DMatrix<Complex64>) -> f64 {
    let gram = x.adjoint() * x;
    gram.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Relative distance `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
