//! Property (O): opposite-parity pairs `alpha, beta` in `S` and a positive
//! vector `c` with `<alpha,c> = <beta,c> = 1 >= <gamma,c>` on `S`.

mod lp;

pub use lp::{lp_solve, Constraint, LpOutcome, RationalLP, Relation};

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multiindex::{check_dim, MultiIndex, Smoothness};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyOWitness {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub c: Vec<BigRational>,
    /// `min_j c(j)` at the LP optimum.
    pub t_star: BigRational,
}

pub fn rational_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_from_str(text: &str) -> std::result::Result<BigRational, String> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|e| e.to_string())?;
            let q = BigInt::from_str(q.trim()).map_err(|e| e.to_string())?;
            if q.is_zero() {
                return Err(format!("zero denominator in {text:?}"));
            }
            BigRational::new(p, q)
        }
        None => BigRational::from_integer(BigInt::from_str(text).map_err(|e| e.to_string())?),
    };
    Ok(parsed)
}

#[derive(Serialize, Deserialize)]
struct WitnessRepr {
    alpha: MultiIndex,
    beta: MultiIndex,
    c: Vec<String>,
    t_star: String,
}

impl Serialize for PropertyOWitness {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        WitnessRepr {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            c: self.c.iter().map(rational_to_string).collect(),
            t_star: rational_to_string(&self.t_star),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PropertyOWitness {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = WitnessRepr::deserialize(deserializer)?;
        let c = repr
            .c
            .iter()
            .map(|s| rational_from_str(s))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let t_star = rational_from_str(&repr.t_star).map_err(D::Error::custom)?;
        Ok(PropertyOWitness {
            alpha: repr.alpha,
            beta: repr.beta,
            c,
            t_star,
        })
    }
}

fn dot(gamma: &MultiIndex, c: &[BigRational]) -> BigRational {
    gamma
        .components()
        .iter()
        .zip(c)
        .map(|(&g, x)| x * BigInt::from(g))
        .sum()
}

/// Exact check of the four witness conditions. `alpha` or `beta` outside
/// `S` is an error rather than `false`.
pub fn verify_witness(s: &Smoothness, w: &PropertyOWitness) -> Result<bool> {
    check_dim(s.dim(), w.alpha.dim())?;
    check_dim(s.dim(), w.beta.dim())?;
    check_dim(s.dim(), w.c.len())?;
    if !s.contains(&w.alpha) || !s.contains(&w.beta) {
        return Err(Error::InvalidWitness(format!(
            "{} or {} is not in S",
            w.alpha, w.beta
        )));
    }
    let one = BigRational::one();
    let parity = (w.alpha.order() + w.beta.order()) % 2 == 1;
    let positive = w.c.iter().all(|x| x.is_positive());
    let touches = dot(&w.alpha, &w.c) == one && dot(&w.beta, &w.c) == one;
    let below = s.iter().all(|g| dot(g, &w.c) <= one);
    Ok(parity && positive && touches && below)
}

/// The LP for a fixed pair: variables `(c_1..c_d, t)`, maximize `t`
/// subject to `c_j >= t`, `<alpha,c> = <beta,c> = 1`, `<gamma,c> <= 1`.
pub fn pair_lp(s: &Smoothness, alpha: &MultiIndex, beta: &MultiIndex) -> RationalLP {
    let d = s.dim();
    let n = d + 1;
    let mut objective = vec![BigRational::zero(); n];
    objective[d] = BigRational::one();
    let mut lp = RationalLP::new(n, objective).expect("objective sized to n");
    let row = |gamma: &MultiIndex| -> Vec<BigRational> {
        let mut r: Vec<BigRational> = gamma
            .components()
            .iter()
            .map(|&g| BigRational::from_integer(BigInt::from(g)))
            .collect();
        r.push(BigRational::zero());
        r
    };
    for j in 0..d {
        let mut r = vec![BigRational::zero(); n];
        r[j] = BigRational::one();
        r[d] = -BigRational::one();
        lp.push(r, Relation::Ge, BigRational::zero()).expect("sized");
    }
    lp.push(row(alpha), Relation::Eq, BigRational::one()).expect("sized");
    lp.push(row(beta), Relation::Eq, BigRational::one()).expect("sized");
    for g in s.iter() {
        lp.push(row(g), Relation::Le, BigRational::one()).expect("sized");
    }
    lp
}

/// Ordered pairs of opposite parity, in lexicographic order of `S` listed
/// from its largest element down.
pub fn candidate_pairs(s: &Smoothness) -> Vec<(MultiIndex, MultiIndex)> {
    let mut pairs = Vec::new();
    for a in s.iter().rev() {
        for b in s.iter().rev() {
            if (a.order() + b.order()) % 2 == 1 {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    pairs
}

#[derive(Clone, Debug)]
pub struct PairOutcome {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub outcome: LpOutcome,
}

/// Solves every candidate pair's LP.
pub fn sweep_pairs(s: &Smoothness) -> Vec<PairOutcome> {
    candidate_pairs(s)
        .into_iter()
        .map(|(alpha, beta)| {
            let outcome = lp_solve(&pair_lp(s, &alpha, &beta));
            PairOutcome {
                alpha,
                beta,
                outcome,
            }
        })
        .collect()
}

/// First pair whose LP optimum is strictly positive, with its optimal `c`.
pub fn find_witness(s: &Smoothness) -> Option<PropertyOWitness> {
    let d = s.dim();
    for (alpha, beta) in candidate_pairs(s) {
        if let LpOutcome::Optimal { value, solution } = lp_solve(&pair_lp(s, &alpha, &beta)) {
            if value.is_positive() {
                return Some(PropertyOWitness {
                    alpha,
                    beta,
                    c: solution[..d].to_vec(),
                    t_star: value,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::saturate;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn reference() -> Smoothness {
        saturate(&[mi(&[2, 0]), mi(&[0, 1])]).unwrap()
    }

    #[test]
    fn reference_witness() {
        let w = find_witness(&reference()).unwrap();
        assert_eq!(w.alpha, mi(&[2, 0]));
        assert_eq!(w.beta, mi(&[0, 1]));
        assert_eq!(w.c, vec![r(1, 2), r(1, 1)]);
        assert_eq!(w.t_star, r(1, 2));
        assert!(verify_witness(&reference(), &w).unwrap());
    }

    #[test]
    fn witness_lp_by_hand() {
        let out = lp_solve(&pair_lp(&reference(), &mi(&[2, 0]), &mi(&[0, 1])));
        let (v, x) = out.optimum().unwrap();
        assert_eq!(*v, r(1, 2));
        assert_eq!(&x[..2], &[r(1, 2), r(1, 1)]);
    }

    #[test]
    fn verify_rejections() {
        let s = reference();
        let bad_touch = PropertyOWitness {
            alpha: mi(&[2, 0]),
            beta: mi(&[1, 0]),
            c: vec![r(1, 2), r(1, 1)],
            t_star: r(1, 2),
        };
        assert!(!verify_witness(&s, &bad_touch).unwrap());
        let zero_c = PropertyOWitness {
            alpha: mi(&[2, 0]),
            beta: mi(&[0, 1]),
            c: vec![r(0, 1), r(1, 1)],
            t_star: r(0, 1),
        };
        assert!(!verify_witness(&s, &zero_c).unwrap());
        let outside = PropertyOWitness {
            alpha: mi(&[3, 0]),
            beta: mi(&[0, 1]),
            c: vec![r(1, 3), r(1, 1)],
            t_star: r(1, 3),
        };
        assert!(matches!(verify_witness(&s, &outside), Err(Error::InvalidWitness(_))));
    }

    #[test]
    fn failing_smoothnesses() {
        assert!(find_witness(&saturate(&[mi(&[1, 1])]).unwrap()).is_none());
        assert!(find_witness(&saturate(&[mi(&[0, 0])]).unwrap()).is_none());
        assert!(candidate_pairs(&saturate(&[mi(&[0, 0])]).unwrap()).is_empty());
    }

    #[test]
    fn witness_json_uses_rational_strings() {
        let w = find_witness(&reference()).unwrap();
        let v = serde_json::to_value(&w).unwrap();
        assert_eq!(v["c"], serde_json::json!(["1/2", "1/1"]));
        assert_eq!(v["t_star"], serde_json::json!("1/2"));
        let back: PropertyOWitness = serde_json::from_value(v).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn deterministic_and_exact_round_trip() {
        for gens in [
            vec![mi(&[3, 0]), mi(&[0, 2])],
            vec![mi(&[1, 0, 0]), mi(&[0, 2, 0]), mi(&[0, 0, 3])],
            vec![mi(&[2, 1]), mi(&[0, 3])],
        ] {
            let s = saturate(&gens).unwrap();
            let a = find_witness(&s);
            assert_eq!(a, find_witness(&s));
            if let Some(w) = a {
                assert!(verify_witness(&s, &w).unwrap());
            }
        }
    }
}
