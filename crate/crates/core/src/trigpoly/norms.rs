use std::collections::BTreeSet;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::quadrature::chunked_mean;
use super::{CMatrix, Coefficient, GridSpec, MatrixPoly, Quadrature, ScalarPoly, TrigPoly};
use crate::error::{Error, Result};
use crate::multiindex::{check_dim, q_s_at, Frequency, Smoothness};

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `(mean over nodes of |f|^p)^{1/p}`.
pub fn lp_norm(f: &ScalarPoly, p: f64, quad: &Quadrature) -> Result<f64> {
    check_exponent(p)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let values = quad.evaluate(f)?.swap_remove(0);
    let mean = if p == 1.0 {
        chunked_mean(values.len(), |i| values[i].norm())
    } else if p == 2.0 {
        chunked_mean(values.len(), |i| values[i].norm_sqr())
    } else {
        chunked_mean(values.len(), |i| values[i].norm().powf(p))
    };
    Ok(if p == 1.0 { mean } else { mean.powf(1.0 / p) })
}

/// Result of a grid-doubling convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub value: f64,
    pub points_per_axis: usize,
    /// Relative change between the last two grids.
    pub rel_change: f64,
    pub converged: bool,
}

/// `lp_norm` on the default grid, doubled until two successive values agree
/// to `tol` relative (or `max_doublings` is reached).
pub fn lp_norm_refined(f: &ScalarPoly, p: f64, tol: f64, max_doublings: usize) -> Result<Refinement> {
    check_exponent(p)?;
    let mut grid = GridSpec::default_for(&f.max_abs_frequency())?;
    let mut value = lp_norm(f, p, &grid.into())?;
    let mut rel_change = f64::INFINITY;
    for _ in 0..max_doublings {
        grid = grid.refined();
        let next = lp_norm(f, p, &grid.into())?;
        rel_change = if next == 0.0 { (next - value).abs() } else { (next - value).abs() / next };
        value = next;
        if rel_change < tol {
            break;
        }
    }
    Ok(Refinement {
        value,
        points_per_axis: grid.points_per_axis,
        rel_change,
        converged: rel_change < tol,
    })
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    match a.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => a[(0, 0)].norm(),
        (2, 2) => {
            let det: Complex<f64> = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            let fro: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            (fro + 2.0 * det.norm()).max(0.0).sqrt()
        }
        _ => a.clone().singular_values_unordered().sum(),
    }
}

/// `L_1(T^d; S_1)` norm: mean over nodes of the trace norm of `g(x)`.
pub fn s1_l1_norm(g: &MatrixPoly, quad: &Quadrature) -> Result<f64> {
    let Some(m) = g.matrix_dim() else {
        return Ok(0.0);
    };
    let values = quad.evaluate(g)?;
    let len = values[0].len();
    if m == 1 {
        let v = &values[0];
        return Ok(chunked_mean(len, |i| v[i].norm()));
    }
    Ok(chunked_mean(len, |i| {
        // components are stored column-major, as in nalgebra
        let a = CMatrix::from_fn(m, m, |r, c| values[c * m + r][i]);
        trace_norm(&a)
    }))
}

/// `(sum_{gamma in S} ||partial^gamma f||_p^p)^{1/p}`.
pub fn sobolev_norm(f: &ScalarPoly, s: &Smoothness, p: f64, quad: &Quadrature) -> Result<f64> {
    check_exponent(p)?;
    check_dim(s.dim(), f.dim())?;
    let mut acc = 0.0;
    for gamma in s.iter() {
        acc += lp_norm(&f.derivative(gamma)?, p, quad)?.powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// `sum_{gamma in S} ||partial^gamma g||_{L_1(S_1)}`, the matrix analogue of
/// the `p = 1` Sobolev norm.
pub fn sobolev_norm_s1(g: &MatrixPoly, s: &Smoothness, quad: &Quadrature) -> Result<f64> {
    check_dim(s.dim(), g.dim())?;
    let mut acc = 0.0;
    for gamma in s.iter() {
        acc += s1_l1_norm(&g.derivative(gamma)?, quad)?;
    }
    Ok(acc)
}

/// `(sum_{n in Lambda} Q_S(n) ||f^(n)||_HS^2)^{1/2}`, coefficientwise.
pub fn paley_l2_norm<C: Coefficient>(f: &TrigPoly<C>, s: &Smoothness, lambda: &[Frequency]) -> Result<f64> {
    check_dim(s.dim(), f.dim())?;
    let distinct: BTreeSet<&Frequency> = lambda.iter().collect();
    let mut acc = 0.0;
    for n in distinct {
        check_dim(s.dim(), n.dim())?;
        if let Some(c) = f.coeff(n) {
            acc += q_s_at(s, n)? * c.hs_norm_sqr();
        }
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::{q_s_at, saturate, MultiIndex};
    use crate::trigpoly::{random_matrix_poly, random_scalar_poly, Support};
    use num_complex::Complex64;

    fn f(c: &[i64]) -> Frequency {
        Frequency::from_i64(c)
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn reference() -> Smoothness {
        saturate(&[MultiIndex::new(vec![2, 0]).unwrap(), MultiIndex::new(vec![0, 1]).unwrap()]).unwrap()
    }

    #[test]
    fn character_norms() {
        let chi = ScalarPoly::character(f(&[3, -2]));
        let q = Quadrature::auto(&chi).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!((lp_norm(&chi, p, &q).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(lp_norm(&chi, 0.5, &q), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn parseval_and_positive_cosine() {
        let n = f(&[2, 5]);
        let p = ScalarPoly::from_terms(2, [(f(&[0, 0]), one()), (n.clone(), one())]).unwrap();
        let q = Quadrature::auto(&p).unwrap();
        assert!((lp_norm(&p, 2.0, &q).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let c = ScalarPoly::from_terms(2, [(f(&[0, 0]), one()), (n.clone(), one() * 0.5), (n.neg(), one() * 0.5)]).unwrap();
        assert!((lp_norm(&c, 1.0, &q).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&CMatrix::identity(2, 2)) - 2.0).abs() < 1e-14);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one() * 3.0, one() * -4.0]));
        assert!((trace_norm(&d) - 7.0).abs() < 1e-14);
        let u = nalgebra::DVector::from_vec(vec![Complex64::new(1.0, 2.0), one(), Complex64::new(0.0, -1.0)]);
        let v = nalgebra::DVector::from_vec(vec![one() * 2.0, Complex64::new(0.5, 0.5), one()]);
        let uv = &u * v.adjoint();
        assert!((trace_norm(&uv) - u.norm() * v.norm()).abs() < 1e-12);
        let a = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 - 0.3, j as f64 + 0.7));
        let svd: f64 = a.clone().singular_values().sum();
        assert!((trace_norm(&a) - svd).abs() < 1e-12);
    }

    #[test]
    fn s1_norm_examples() {
        let a = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * 3 + j) as f64, 1.0));
        let g = MatrixPoly::monomial(f(&[4, 1]), a.clone());
        let q = Quadrature::auto(&g).unwrap();
        assert!((s1_l1_norm(&g, &q).unwrap() - trace_norm(&a)).abs() < 1e-9 * trace_norm(&a));
        assert_eq!(s1_l1_norm(&MatrixPoly::zero(2), &q).unwrap(), 0.0);
        let support = Support::Box { lo: vec![-2, -1], hi: vec![2, 3] };
        let s = random_scalar_poly(&support, 11, 0).unwrap();
        let q = Quadrature::auto(&s).unwrap();
        assert_eq!(s1_l1_norm(&s.to_matrix(), &q).unwrap(), lp_norm(&s, 1.0, &q).unwrap());
    }

    #[test]
    fn sobolev_examples() {
        let s = reference();
        let q = Quadrature::grid(9).unwrap();
        let c0 = ScalarPoly::character(f(&[0, 0]));
        assert!((sobolev_norm(&c0, &s, 1.0, &q).unwrap() - 1.0).abs() < 1e-14);
        let n = f(&[3, 2]);
        let chi = ScalarPoly::character(n.clone());
        let q = Quadrature::auto(&chi).unwrap();
        let want = q_s_at(&s, &n).unwrap().sqrt();
        assert!((sobolev_norm(&chi, &s, 2.0, &q).unwrap() - want).abs() < 1e-10 * want);
        let trivial = saturate(&[MultiIndex::zero(2)]).unwrap();
        for p in [1.0, 2.0, 4.0] {
            assert!((sobolev_norm(&chi, &trivial, p, &q).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn paley_l2_examples() {
        let s = reference();
        let n1 = f(&[2, 3]);
        let n2 = f(&[5, 1]);
        let lambda = vec![n1.clone(), n2.clone()];
        let chi = ScalarPoly::character(n1.clone());
        assert!((paley_l2_norm(&chi, &s, &lambda).unwrap() - q_s_at(&s, &n1).unwrap().sqrt()).abs() < 1e-12);
        let off = ScalarPoly::character(f(&[1, 1]));
        assert_eq!(paley_l2_norm(&off, &s, &lambda).unwrap(), 0.0);
        let a = Complex64::new(0.5, -1.0);
        let b = Complex64::new(2.0, 0.0);
        let two = ScalarPoly::from_terms(2, [(n1.clone(), a), (n2.clone(), b)]).unwrap();
        let want = (q_s_at(&s, &n1).unwrap() * a.norm_sqr() + q_s_at(&s, &n2).unwrap() * b.norm_sqr()).sqrt();
        assert!((paley_l2_norm(&two, &s, &lambda).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn triangle_inequalities() {
        let s = reference();
        let support = Support::Box { lo: vec![-3, -3], hi: vec![3, 3] };
        for seed in 0..5 {
            let a = random_scalar_poly(&support, seed, 0).unwrap();
            let b = random_scalar_poly(&support, seed, 1).unwrap();
            let sum = a.add(&b).unwrap();
            let q = Quadrature::auto(&sum).unwrap();
            let lhs = lp_norm(&sum, 1.0, &q).unwrap();
            assert!(lhs <= lp_norm(&a, 1.0, &q).unwrap() + lp_norm(&b, 1.0, &q).unwrap() + 1e-12);
            let lhs = sobolev_norm(&sum, &s, 1.0, &q).unwrap();
            assert!(lhs <= sobolev_norm(&a, &s, 1.0, &q).unwrap() + sobolev_norm(&b, &s, 1.0, &q).unwrap() + 1e-12);
            let ma = random_matrix_poly(&support, 3, seed, 2).unwrap();
            let mb = random_matrix_poly(&support, 3, seed, 3).unwrap();
            let lhs = s1_l1_norm(&ma.add(&mb).unwrap(), &q).unwrap();
            assert!(lhs <= s1_l1_norm(&ma, &q).unwrap() + s1_l1_norm(&mb, &q).unwrap() + 1e-12);
        }
    }

    #[test]
    fn derivatives_compose() {
        let support = Support::Box { lo: vec![-2, -2], hi: vec![2, 2] };
        let p = random_scalar_poly(&support, 5, 0).unwrap();
        let g = MultiIndex::new(vec![1, 0]).unwrap();
        let d = MultiIndex::new(vec![1, 2]).unwrap();
        let lhs = p.derivative(&g).unwrap().derivative(&d).unwrap();
        let rhs = p.derivative(&g.checked_add(&d).unwrap()).unwrap();
        for (n, c) in rhs.terms() {
            assert!((lhs.coeff(n).unwrap() - c).norm() < 1e-12 * c.norm().max(1.0));
        }
        assert_eq!(lhs.len(), rhs.len());
    }
}
