mod common;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

use common::*;
use paley_core::cr_norm::{cr_norm, CrOptions, MatrixSequence};
use paley_core::multiindex::{is_smoothness, saturate, MultiIndex};
use paley_core::operators::{composite_apply, convolve_riesz, operator_m, paley_project, OperatorPipeline};
use paley_core::sequence::{ball_cardinality, bk_enumerate, bk_radius};
use paley_core::trigpoly::{random_matrix_poly, random_scalar_poly, trace_norm, ScalarPoly, Support};

fn small_box() -> Support {
    Support::Box {
        lo: vec![-4, -4],
        hi: vec![12, 12],
    }
}

fn close(a: &ScalarPoly, b: &ScalarPoly, tol: f64) -> bool {
    let diff = a.sub(b).unwrap();
    let scale = tol * (1.0 + a.coefficient_l2());
    let ok = diff.terms().all(|(_, c)| c.norm() <= scale);
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn saturation_is_the_lower_closure(gens in prop::collection::vec((0u32..4, 0u32..4), 1..4)) {
        let rows: Vec<Vec<u32>> = gens.iter().map(|&(a, b)| vec![a, b]).collect();
        let indices: Vec<MultiIndex> = rows.iter().map(|r| mi(r)).collect();
        let s = saturate(&indices).unwrap();
        prop_assert_eq!(s.to_rows(), lower_closure(&rows));
        let elements: Vec<MultiIndex> = s.iter().cloned().collect();
        prop_assert!(is_smoothness(&elements).unwrap());
    }

    #[test]
    fn ball_cardinality_matches_counting(d in 1usize..4, r in 0i64..=20) {
        prop_assert_eq!(ball_cardinality(d, &BigInt::from(r)), BigInt::from(l1_ball_count(d, r)));
    }

    #[test]
    fn operators_are_linear(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let pipeline = OperatorPipeline::new(reference_plan(3)).unwrap();
        let lam: Vec<_> = pipeline.lambda().to_vec();
        let support = small_box().union(&Support::List { dim: 2, freqs: lam.clone() }).unwrap();
        let f = random_scalar_poly(&support, seed, 0).unwrap();
        let g = random_scalar_poly(&support, seed, 1).unwrap();
        let c = Complex64::new(re, im);
        let h = f.scale(c).add(&g).unwrap();
        let m = |p: &ScalarPoly| operator_m(p, &pipeline).unwrap();
        prop_assert!(close(&m(&h), &m(&f).scale(c).add(&m(&g)).unwrap(), 1e-12));
        let r = |p: &ScalarPoly| convolve_riesz(p, pipeline.riesz());
        prop_assert!(close(&r(&h), &r(&f).scale(c).add(&r(&g)).unwrap(), 1e-12));
        let p = |q: &ScalarPoly| paley_project(q, &lam);
        prop_assert!(close(&p(&h), &p(&f).scale(c).add(&p(&g)).unwrap(), 1e-12));
        let k = |q: &ScalarPoly| composite_apply(q, &pipeline).unwrap();
        prop_assert!(close(&k(&h), &k(&f).scale(c).add(&k(&g)).unwrap(), 1e-12));
        prop_assert_eq!(p(&p(&f)), p(&f));
        prop_assert_eq!(r(&p(&f)), p(&r(&f)));
    }

    #[test]
    fn m_cancels_negative_sequence(k in 0usize..3) {
        let pipeline = OperatorPipeline::new(reference_plan(3)).unwrap();
        let n = pipeline.lambda()[k].neg();
        let out = operator_m(&ScalarPoly::character(n.clone()), &pipeline).unwrap();
        prop_assert!(out.coeff(&n).is_none());
    }

    #[test]
    fn trace_norm_matches_eigen_oracle(m in 1usize..7, seed in 0u64..500) {
        let g = random_matrix_poly(&Support::List { dim: 1, freqs: vec![freq(&[0])] }, m, seed, 0).unwrap();
        let x = g.coeff(&freq(&[0])).unwrap();
        prop_assert!(rel(trace_norm(x), trace_norm_oracle(x)) < 1e-10);
    }

    #[test]
    fn cr_norm_is_below_pure_decompositions(m in 1usize..4, len in 1usize..6, seed in 0u64..500) {
        let x = MatrixSequence::random(len, m, seed, 3).unwrap();
        let v = cr_norm(&x, &CrOptions::default()).unwrap().value;
        let column: f64 = {
            let gram = x.items().iter().fold(nalgebra::DMatrix::zeros(m, m), |a, y| a + y.adjoint() * y);
            gram.symmetric_eigen().eigenvalues.iter().map(|e| e.max(0.0).sqrt()).sum()
        };
        let row: f64 = {
            let gram = x.items().iter().fold(nalgebra::DMatrix::zeros(m, m), |a, y| a + y * y.adjoint());
            gram.symmetric_eigen().eigenvalues.iter().map(|e| e.max(0.0).sqrt()).sum()
        };
        prop_assert!(v <= column.min(row) + 1e-9);
    }
}

#[test]
fn reference_balls_match_enumeration() {
    let plan = reference_plan(3);
    for k in 1..=2 {
        let radius = bk_radius(&plan.sequence, k).unwrap();
        let points: BTreeSet<_> = bk_enumerate(&plan.sequence, k, 10_000_000).unwrap().collect();
        assert_eq!(BigInt::from(points.len()), ball_cardinality(2, &radius));
        assert!(points.iter().all(|m| m.first() > &BigInt::from(0)));
    }
}
