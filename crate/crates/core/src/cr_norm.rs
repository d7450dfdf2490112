//! The column-plus-row norm `|||(x_k)|||` on finite sequences of matrices
//! and Khintchine-type ratios for lacunary matrix series.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multiindex::Frequency;
use crate::rng::{complex_gaussian, stream_rng};
use crate::trigpoly::{matrix_from_rows, matrix_to_rows, s1_l1_norm, CMatrix, MatrixPoly, Quadrature};

/// A nonempty list of square matrices of a common size.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSequence {
    items: Vec<CMatrix>,
}

impl MatrixSequence {
    pub fn new(items: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::EmptyInput("matrix sequence"));
        };
        let m = first.nrows();
        if m == 0 || items.iter().any(|x| x.nrows() != m || x.ncols() != m) {
            return Err(Error::InvalidInput("matrices must be square with a common size".into()));
        }
        Ok(Self { items })
    }

    /// `1 x 1` matrices.
    pub fn from_scalars(values: &[Complex64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| CMatrix::from_element(1, 1, v)).collect())
    }

    pub fn items(&self) -> &[CMatrix] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn matrix_dim(&self) -> usize {
        self.items[0].nrows()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            items: self.items.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() || self.matrix_dim() != other.matrix_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            items: self.items.iter().zip(&other.items).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.items.iter().all(|x| x.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }

    fn frobenius_sqr(&self) -> f64 {
        self.items.iter().map(|x| x.norm_squared()).sum()
    }

    /// Seeded sequence of `len` standard complex Gaussian `m x m` matrices.
    pub fn random(len: usize, m: usize, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, stream);
        Self::new(
            (0..len)
                .map(|_| CMatrix::from_fn(m, m, |_, _| complex_gaussian(&mut rng)))
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceJson {
    matrices: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Serialize for MatrixSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SequenceJson {
            matrices: self.items.iter().map(matrix_to_rows).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MatrixSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SequenceJson::deserialize(deserializer)?;
        let items = raw
            .matrices
            .iter()
            .map(|rows| matrix_from_rows(rows))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        MatrixSequence::new(items).map_err(D::Error::custom)
    }
}

/// `x_k = y_k + z_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub y: MatrixSequence,
    pub z: MatrixSequence,
}

impl Decomposition {
    pub fn new(y: MatrixSequence, z: MatrixSequence) -> Result<Self> {
        if y.len() != z.len() || y.matrix_dim() != z.matrix_dim() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                found: z.len(),
            });
        }
        Ok(Self { y, z })
    }

    /// `y = t x`, `z = (1 - t) x`.
    pub fn split(x: &MatrixSequence, t: f64) -> Self {
        Self {
            y: x.scale(Complex64::new(t, 0.0)),
            z: x.scale(Complex64::new(1.0 - t, 0.0)),
        }
    }

    pub fn sum(&self) -> MatrixSequence {
        self.y.add(&self.z).expect("shapes checked at construction")
    }
}

fn gram_column(ys: &[CMatrix]) -> CMatrix {
    let m = ys[0].nrows();
    ys.iter().fold(CMatrix::zeros(m, m), |acc, y| acc + y.adjoint() * y)
}

fn gram_row(zs: &[CMatrix]) -> CMatrix {
    let m = zs[0].nrows();
    zs.iter().fold(CMatrix::zeros(m, m), |acc, z| acc + z * z.adjoint())
}

/// Eigenvalues (clamped at 0) and eigenvectors of a Hermitian matrix.
fn psd_eigen(a: CMatrix) -> (DVector<f64>, CMatrix) {
    let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = a.symmetric_eigen();
    (eig.eigenvalues.map(|v| v.max(0.0)), eig.eigenvectors)
}

/// `tr A^{1/2}` for positive semidefinite `A`.
fn trace_sqrt(a: CMatrix) -> f64 {
    psd_eigen(a).0.iter().map(|v| v.sqrt()).sum()
}

/// `||(sum y_k^* y_k)^{1/2}||_{S_1} + ||(sum z_k z_k^*)^{1/2}||_{S_1}`.
pub fn column_row_value(dec: &Decomposition) -> f64 {
    trace_sqrt(gram_column(dec.y.items())) + trace_sqrt(gram_row(dec.z.items()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrOptions {
    /// Number of starting decompositions: `z = 0`, `y = 0`, `y = z = x/2`,
    /// then seeded random ones.
    pub restarts: usize,
    /// Iteration budget per start.
    pub iterations: usize,
    /// Relative change of the objective below which a stage stops.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CrOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            iterations: 400,
            tolerance: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrNorm {
    pub value: f64,
    pub decomposition: Decomposition,
    pub converged: bool,
    pub restarts_used: usize,
}

/// Smoothing parameters relative to the mean Gram eigenvalue, ending at
/// `1e-9`.
const EPS_SCHEDULE: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-9];

struct Run {
    value: f64,
    y: Vec<CMatrix>,
    converged: bool,
}

/// One reweighting step: the minimizer of the quadratic majorant at `y`,
/// solving `B^{1/2} Y_k + Y_k A^{1/2} = X_k A^{1/2}`.
fn reweight(x: &[CMatrix], y: &[CMatrix], eps: f64) -> (Vec<CMatrix>, f64) {
    let m = x[0].nrows();
    let z: Vec<CMatrix> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let shift = CMatrix::identity(m, m) * Complex64::new(eps, 0.0);
    let (a_vals, w) = psd_eigen(gram_column(y) + &shift);
    let (b_vals, u) = psd_eigen(gram_row(&z) + &shift);
    let r = a_vals.map(f64::sqrt);
    let p = b_vals.map(f64::sqrt);
    let smoothed = r.sum() + p.sum();
    let factor = DMatrix::from_fn(m, m, |i, j| Complex64::new(r[j] / (p[i] + r[j]), 0.0));
    let (u_adj, w_adj) = (u.adjoint(), w.adjoint());
    let next = x
        .iter()
        .map(|xk| {
            let rotated = &u_adj * xk * &w;
            &u * rotated.component_mul(&factor) * &w_adj
        })
        .collect();
    (next, smoothed)
}

fn unsmoothed(x: &[CMatrix], y: &[CMatrix]) -> f64 {
    let z: Vec<CMatrix> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    trace_sqrt(gram_column(y)) + trace_sqrt(gram_row(&z))
}

fn run_from(x: &[CMatrix], start: Vec<CMatrix>, scale: f64, opt: &CrOptions) -> Run {
    let mut y = start;
    let mut best = Run {
        value: unsmoothed(x, &y),
        y: y.clone(),
        converged: false,
    };
    let per_stage = (opt.iterations / EPS_SCHEDULE.len()).max(1);
    let mut converged = false;
    for &rel in &EPS_SCHEDULE {
        let eps = rel * scale;
        let mut last = f64::INFINITY;
        converged = false;
        for _ in 0..per_stage {
            let (next, smoothed) = reweight(x, &y, eps);
            y = next;
            let value = unsmoothed(x, &y);
            if value < best.value {
                best.value = value;
                best.y = y.clone();
            }
            if (last - smoothed).abs() <= opt.tolerance * smoothed.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
            last = smoothed;
        }
    }
    best.converged = converged;
    best
}

fn start(x: &MatrixSequence, index: usize, seed: u64) -> Vec<CMatrix> {
    let m = x.matrix_dim();
    match index {
        0 => x.items().to_vec(),
        1 => vec![CMatrix::zeros(m, m); x.len()],
        2 => x.scale(Complex64::new(0.5, 0.0)).items,
        _ => {
            let mut rng = stream_rng(seed, index as u64);
            let spread = (x.frobenius_sqr() / (x.len() * m * m) as f64).sqrt();
            x.items()
                .iter()
                .map(|xk| {
                    let t: f64 = rng.random_range(0.0..1.0);
                    let noise = CMatrix::from_fn(m, m, |_, _| complex_gaussian(&mut rng) * spread);
                    xk * Complex64::new(t, 0.0) + noise
                })
                .collect()
        }
    }
}

/// Approximates `|||(x_k)||| = inf ||(sum y_k^* y_k)^{1/2}||_{S_1} +
/// ||(sum z_k z_k^*)^{1/2}||_{S_1}` over `x_k = y_k + z_k` by iteratively
/// reweighted least squares from several starts. The value is that of an
/// explicit decomposition, hence an upper bound.
pub fn cr_norm(xs: &MatrixSequence, opt: &CrOptions) -> Result<CrNorm> {
    if opt.restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    if opt.iterations == 0 || opt.tolerance.is_nan() || opt.tolerance < 0.0 {
        return Err(Error::InvalidInput("iterations must be positive and tolerance non-negative".into()));
    }
    let m = xs.matrix_dim();
    let x = xs.items();
    if xs.is_zero() {
        let zero = MatrixSequence::new(vec![CMatrix::zeros(m, m); xs.len()])?;
        return Ok(CrNorm {
            value: 0.0,
            decomposition: Decomposition::new(zero.clone(), zero)?,
            converged: true,
            restarts_used: opt.restarts,
        });
    }
    let scale = xs.frobenius_sqr() / m as f64;
    let runs: Vec<Run> = (0..opt.restarts)
        .into_par_iter()
        .map(|i| run_from(x, start(xs, i, opt.seed), scale, opt))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");
    let y = MatrixSequence::new(best.y)?;
    let z = MatrixSequence::new(x.iter().zip(y.items()).map(|(a, b)| a - b).collect())?;
    Ok(CrNorm {
        value: best.value,
        decomposition: Decomposition::new(y, z)?,
        converged: best.converged,
        restarts_used: opt.restarts,
    })
}

fn check_lacunary(freqs: &[i64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::EmptyInput("frequency list"));
    }
    if freqs[0] < 1 || freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("frequencies must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// `sum_k x_k e^{i n_k t}` on `T`.
pub fn lacunary_series(xs: &MatrixSequence, freqs: &[i64]) -> Result<MatrixPoly> {
    if freqs.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: freqs.len(),
        });
    }
    MatrixPoly::from_terms(
        1,
        freqs
            .iter()
            .zip(xs.items())
            .map(|(&n, x)| (Frequency::from_i64(&[n]), x.clone())),
    )
}

fn series_norm(g: &MatrixPoly, quad: Option<&Quadrature>) -> Result<f64> {
    match quad {
        Some(q) => s1_l1_norm(g, q),
        None => s1_l1_norm(g, &Quadrature::auto(g)?),
    }
}

/// `||sum_k x_k e^{i n_k t}||_{L_1(T; S_1)} / |||(x_k)|||`.
pub fn khintchine_ratio(xs: &MatrixSequence, freqs: &[i64], quad: Option<&Quadrature>, opt: &CrOptions) -> Result<f64> {
    check_lacunary(freqs)?;
    let g = lacunary_series(xs, freqs)?;
    let den = cr_norm(xs, opt)?.value;
    if den == 0.0 {
        return Err(Error::UndefinedRatio("x = 0"));
    }
    Ok(series_norm(&g, quad)? / den)
}

/// `||sum a_k x_k e^{i n_k t}|| / ||sum x_k e^{i n_k t}||` in `L_1(T; S_1)`.
pub fn unconditionality_ratio(a: &[Complex64], xs: &MatrixSequence, freqs: &[i64], quad: Option<&Quadrature>) -> Result<f64> {
    check_lacunary(freqs)?;
    if a.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: a.len(),
        });
    }
    let g = lacunary_series(xs, freqs)?;
    let quad = match quad {
        Some(q) => q.clone(),
        None => Quadrature::auto(&g)?,
    };
    let den = s1_l1_norm(&g, &quad)?;
    if den == 0.0 {
        return Err(Error::UndefinedRatio("x = 0"));
    }
    let weighted = MatrixSequence::new(xs.items().iter().zip(a).map(|(x, &c)| x * c).collect())?;
    Ok(s1_l1_norm(&lacunary_series(&weighted, freqs)?, &quad)? / den)
}

/// `3^0, ..., 3^{L-1}`.
pub fn powers_of_three(len: usize) -> Vec<i64> {
    (0..len as u32).map(|k| 3i64.pow(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhintchineSweep {
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max r, 1 / min r)`
    pub k_hat: f64,
}

/// Khintchine ratios of `count` random sequences with `m <= max_m`,
/// `L <= max_len` and frequencies `3^k`.
pub fn khintchine_sweep(count: usize, max_m: usize, max_len: usize, seed: u64, opt: &CrOptions) -> Result<KhintchineSweep> {
    if count == 0 || max_m == 0 || max_len == 0 {
        return Err(Error::InvalidInput("count, max_m and max_len must be positive".into()));
    }
    let ratios = (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let m = rng.random_range(1..=max_m);
            let len = rng.random_range(1..=max_len);
            let xs = MatrixSequence::random(len, m, seed, (i + count) as u64)?;
            khintchine_ratio(&xs, &powers_of_three(len), None, opt)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(KhintchineSweep {
        k_hat: max_ratio.max(1.0 / min_ratio),
        min_ratio,
        max_ratio,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigpoly::trace_norm;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn pure_decompositions() {
        let x = MatrixSequence::from_scalars(&[c(3.0), c(4.0)]).unwrap();
        assert!((column_row_value(&Decomposition::split(&x, 1.0)) - 5.0).abs() < 1e-12);
        let single = MatrixSequence::random(1, 3, 5, 0).unwrap();
        let want = trace_norm(&single.items()[0]);
        assert!((column_row_value(&Decomposition::split(&single, 0.0)) - want).abs() < 1e-10);
        assert!((column_row_value(&Decomposition::split(&single, 1.0)) - want).abs() < 1e-10);
    }

    #[test]
    fn scalar_value_is_l2() {
        let x = MatrixSequence::from_scalars(&[c(3.0), c(4.0)]).unwrap();
        let r = cr_norm(&x, &CrOptions::default()).unwrap();
        assert!((r.value - 5.0).abs() < 1e-6);
        let sum = r.decomposition.sum();
        for (a, b) in sum.items().iter().zip(x.items()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_matrix_is_trace_norm() {
        for s in 0..5 {
            let x = MatrixSequence::random(1, 4, s, 1).unwrap();
            let r = cr_norm(&x, &CrOptions::default()).unwrap();
            assert!((r.value - trace_norm(&x.items()[0])).abs() < 1e-6);
        }
    }

    #[test]
    fn beats_pure_decompositions() {
        let x = MatrixSequence::random(5, 3, 11, 2).unwrap();
        let r = cr_norm(&x, &CrOptions::default()).unwrap();
        let pure = column_row_value(&Decomposition::split(&x, 1.0)).min(column_row_value(&Decomposition::split(&x, 0.0)));
        assert!(r.value <= pure + 1e-12);
        assert!((column_row_value(&r.decomposition) - r.value).abs() < 1e-9);
        let scaled = cr_norm(&x.scale(Complex64::new(0.0, -2.5)), &CrOptions::default()).unwrap();
        assert!((scaled.value - 2.5 * r.value).abs() < 1e-6 * r.value.max(1.0));
    }

    #[test]
    fn zero_sequence() {
        let x = MatrixSequence::new(vec![CMatrix::zeros(2, 2); 3]).unwrap();
        assert_eq!(cr_norm(&x, &CrOptions::default()).unwrap().value, 0.0);
        assert!(matches!(
            khintchine_ratio(&x, &[1, 3, 9], None, &CrOptions::default()),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn ratios() {
        let opt = CrOptions::default();
        let one = MatrixSequence::random(1, 3, 2, 0).unwrap();
        assert!((khintchine_ratio(&one, &[7], None, &opt).unwrap() - 1.0).abs() < 1e-6);
        let ones = MatrixSequence::from_scalars(&[c(1.0); 3]).unwrap();
        let r = khintchine_ratio(&ones, &[1, 3, 9], None, &opt).unwrap();
        assert!(r > 0.0 && r <= 1.0 + 1e-9);
        let xs = MatrixSequence::random(4, 2, 3, 0).unwrap();
        let freqs = powers_of_three(4);
        let base = khintchine_ratio(&xs, &freqs, None, &opt).unwrap();
        let scaled = khintchine_ratio(&xs.scale(c(-7.0)), &freqs, None, &opt).unwrap();
        assert!((base - scaled).abs() < 1e-6);
        assert!((unconditionality_ratio(&[c(1.0); 4], &xs, &freqs, None).unwrap() - 1.0).abs() < 1e-12);
        let u = unconditionality_ratio(&[Complex64::new(0.0, 3.0); 4], &xs, &freqs, None).unwrap();
        assert!((u - 3.0).abs() < 1e-10);
        assert!(khintchine_ratio(&xs, &[1, 1, 3, 9], None, &opt).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = MatrixSequence::random(2, 2, 1, 0).unwrap();
        let text = serde_json::to_string(&x).unwrap();
        assert_eq!(serde_json::from_str::<MatrixSequence>(&text).unwrap(), x);
        assert!(serde_json::from_str::<MatrixSequence>(r#"{"matrices":[]}"#).is_err());
    }
}
