//! Equal-weight cubature on `T^d`: the tensor grid and rank-1 lattice rules.
//!
//! Both rules reduce every frequency to a residue, so polynomials with
//! arbitrarily large integer frequencies are evaluated without ever forming
//! a large phase in floating point.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{Coefficient, TrigPoly};
use crate::error::{Error, Result};
use crate::multiindex::Frequency;

/// Largest tensor grid (total points) chosen automatically.
pub const GRID_BUDGET: usize = 1 << 20;
/// Point count of the automatically chosen lattice rule (prime).
pub const LATTICE_POINTS: usize = 2039;

const CHUNK: usize = 4096;

/// The uniform `N^d` grid on `[-pi, pi)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis == 0 {
            return Err(Error::InvalidInput("grid needs at least one point per axis".into()));
        }
        Ok(Self { points_per_axis })
    }

    /// `N = 4 * max|n(j)| + 1`, the default resolution for `L_1` norms.
    pub fn default_for(max_abs: &BigInt) -> Result<Self> {
        let n = (max_abs * 4u32 + 1u32)
            .to_usize()
            .ok_or_else(|| Error::TooLarge { count: max_abs * 4u32 + 1u32, cap: usize::MAX as u64 })?;
        Self::new(n)
    }

    pub fn num_points(&self, dim: usize) -> Option<usize> {
        self.points_per_axis.checked_pow(dim as u32)
    }

    /// Whether the grid integrates `|f|^2` exactly for every polynomial with
    /// the given maximal frequency magnitude.
    pub fn past_nyquist(&self, max_abs: &BigInt) -> bool {
        BigInt::from(self.points_per_axis) > max_abs * 2u32
    }

    pub fn refined(&self) -> Self {
        Self {
            points_per_axis: 2 * self.points_per_axis,
        }
    }

    /// The point with row-major index `i`.
    pub fn point(&self, dim: usize, mut i: usize) -> Vec<f64> {
        let n = self.points_per_axis;
        let mut x = vec![0.0; dim];
        for j in (0..dim).rev() {
            x[j] = -PI + 2.0 * PI * (i % n) as f64 / n as f64;
            i /= n;
        }
        x
    }
}

/// The rank-1 lattice `{ 2 pi (i z mod P) / P : 0 <= i < P }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeRule {
    pub points: usize,
    pub generator: Vec<u64>,
}

impl LatticeRule {
    pub fn new(points: usize, generator: Vec<u64>) -> Result<Self> {
        if points == 0 || generator.is_empty() {
            return Err(Error::InvalidInput("lattice needs points and a generator".into()));
        }
        Ok(Self { points, generator })
    }

    /// Korobov generator `(1, g, g^2, ...)` with `g` chosen so the residues
    /// `<n, z> mod P` of the spectrum (and 0) are spread as far apart as
    /// possible; ties go to the smallest `g`.
    pub fn korobov_for<'a>(dim: usize, points: usize, spectrum: impl IntoIterator<Item = &'a Frequency>) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidInput("lattice needs at least two points".into()));
        }
        let p = BigInt::from(points);
        let reduced: Vec<Vec<u64>> = spectrum
            .into_iter()
            .filter(|n| !n.is_zero())
            .map(|n| {
                n.coords()
                    .iter()
                    .map(|c| c.mod_floor(&p).to_u64().expect("residue below P"))
                    .collect()
            })
            .collect();
        let korobov = |g: u64| -> Vec<u64> {
            let mut z = Vec::with_capacity(dim);
            let mut acc = 1u64;
            for _ in 0..dim {
                z.push(acc);
                acc = acc * g % points as u64;
            }
            z
        };
        let mut best: Option<(u64, Vec<u64>)> = None;
        for g in 1..points as u64 {
            let z = korobov(g);
            let mut residues: Vec<u64> = reduced.iter().map(|n| residue(n, &z, points as u64)).collect();
            residues.push(0);
            residues.sort_unstable();
            let gap = min_circular_gap(&residues, points as u64);
            if best.as_ref().is_none_or(|(b, _)| gap > *b) {
                best = Some((gap, z));
            }
        }
        let (_, generator) = best.expect("at least one candidate generator");
        Self::new(points, generator)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.generator
            .iter()
            .map(|&z| 2.0 * PI * ((i as u128 * z as u128) % self.points as u128) as f64 / self.points as f64)
            .collect()
    }
}

fn residue(n: &[u64], z: &[u64], p: u64) -> u64 {
    n.iter()
        .zip(z)
        .fold(0u128, |acc, (&a, &b)| (acc + a as u128 * b as u128) % p as u128) as u64
}

fn min_circular_gap(sorted: &[u64], p: u64) -> u64 {
    if sorted.len() < 2 {
        return p;
    }
    let mut gap = sorted[0] + p - sorted[sorted.len() - 1];
    for w in sorted.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Quadrature {
    Grid(GridSpec),
    Lattice(LatticeRule),
}

impl From<GridSpec> for Quadrature {
    fn from(g: GridSpec) -> Self {
        Quadrature::Grid(g)
    }
}

impl Quadrature {
    pub fn grid(points_per_axis: usize) -> Result<Self> {
        GridSpec::new(points_per_axis).map(Quadrature::Grid)
    }

    /// The default grid when it fits in [`GRID_BUDGET`] points, otherwise a
    /// lattice rule adapted to the spectrum.
    pub fn auto_for(dim: usize, spectrum: &BTreeSet<Frequency>) -> Result<Self> {
        let max_abs = spectrum.iter().map(Frequency::max_abs).max().unwrap_or_default();
        let fits = (&max_abs * 4u32 + 1u32)
            .to_usize()
            .and_then(|n| n.checked_pow(dim as u32))
            .is_some_and(|total| total <= GRID_BUDGET);
        if fits {
            GridSpec::default_for(&max_abs).map(Quadrature::Grid)
        } else {
            LatticeRule::korobov_for(dim, LATTICE_POINTS, spectrum).map(Quadrature::Lattice)
        }
    }

    pub fn auto<C: Coefficient>(f: &TrigPoly<C>) -> Result<Self> {
        Self::auto_for(f.dim(), &f.spectrum())
    }

    pub fn num_points(&self, dim: usize) -> Result<usize> {
        match self {
            Quadrature::Grid(g) => g
                .num_points(dim)
                .ok_or_else(|| Error::TooLarge { count: BigInt::from(g.points_per_axis).pow(dim as u32), cap: usize::MAX as u64 }),
            Quadrature::Lattice(l) => Ok(l.points),
        }
    }

    pub fn point(&self, dim: usize, i: usize) -> Vec<f64> {
        match self {
            Quadrature::Grid(g) => g.point(dim, i),
            Quadrature::Lattice(l) => l.point(i),
        }
    }

    /// Values of every coefficient component of `f` at every node:
    /// `out[c][i]` is component `c` of `f(x_i)`.
    pub fn evaluate<C: Coefficient>(&self, f: &TrigPoly<C>) -> Result<Vec<Vec<Complex64>>> {
        let dim = f.dim();
        let total = self.num_points(dim)?;
        let comps = f.terms().next().map_or(1, |(_, c)| c.num_components());
        match self {
            Quadrature::Grid(g) => {
                let n = g.points_per_axis;
                let nb = BigInt::from(n);
                let terms: Vec<(Vec<usize>, bool, &C)> = f
                    .terms()
                    .map(|(freq, c)| {
                        let r = freq
                            .coords()
                            .iter()
                            .map(|x| x.mod_floor(&nb).to_usize().expect("residue below N"))
                            .collect();
                        let odd = freq.coords().iter().fold(BigInt::zero(), |a, x| a + x).is_odd();
                        (r, odd, c)
                    })
                    .collect();
                let dense = terms.len() as f64 >= 0.01 * total as f64;
                if dense {
                    Ok(grid_fft(dim, n, total, comps, &terms))
                } else {
                    Ok(grid_direct(dim, n, total, comps, &terms))
                }
            }
            Quadrature::Lattice(l) => {
                let p = BigInt::from(l.points);
                let mut out = vec![vec![Complex64::zero(); l.points]; comps];
                for (freq, c) in f.terms() {
                    let r = freq
                        .coords()
                        .iter()
                        .zip(&l.generator)
                        .fold(BigInt::zero(), |acc, (x, &z)| acc + x * z)
                        .mod_floor(&p)
                        .to_usize()
                        .expect("residue below P");
                    for (k, bins) in out.iter_mut().enumerate() {
                        bins[r] += c.component(k);
                    }
                }
                let fft = FftPlanner::new().plan_fft_inverse(l.points);
                for bins in out.iter_mut() {
                    fft.process(bins);
                }
                Ok(out)
            }
        }
    }
}

fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
        .collect()
}

fn grid_direct<C: Coefficient>(dim: usize, n: usize, total: usize, comps: usize, terms: &[(Vec<usize>, bool, &C)]) -> Vec<Vec<Complex64>> {
    let tw = twiddles(n);
    let mut out = vec![vec![Complex64::zero(); total]; comps];
    for (r, odd, c) in terms {
        let sign = if *odd { -1.0 } else { 1.0 };
        let coeffs: Vec<Complex64> = (0..comps).map(|k| c.component(k) * sign).collect();
        let mut k = vec![0usize; dim];
        let mut phase = 0usize;
        for i in 0..total {
            let w = tw[phase];
            for (comp, values) in out.iter_mut().enumerate() {
                values[i] += coeffs[comp] * w;
            }
            let mut j = dim;
            while j > 0 {
                j -= 1;
                k[j] += 1;
                phase = (phase + r[j]) % n;
                if k[j] < n {
                    break;
                }
                // n steps of r_j vanish mod n
                k[j] = 0;
            }
        }
    }
    out
}

fn grid_fft<C: Coefficient>(dim: usize, n: usize, total: usize, comps: usize, terms: &[(Vec<usize>, bool, &C)]) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![Complex64::zero(); total]; comps];
    for (r, odd, c) in terms {
        let idx = r.iter().fold(0usize, |acc, &x| acc * n + x);
        let sign = if *odd { -1.0 } else { 1.0 };
        for (k, values) in out.iter_mut().enumerate() {
            values[idx] += c.component(k) * sign;
        }
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(n);
    for values in out.iter_mut() {
        inverse_fft_nd(values, dim, n, &fft);
    }
    out
}

fn inverse_fft_nd(values: &mut [Complex64], dim: usize, n: usize, fft: &Arc<dyn Fft<f64>>) {
    let total = values.len();
    let mut line = vec![Complex64::zero(); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (t, v) in line.iter_mut().enumerate() {
                    *v = values[base + t * stride];
                }
                fft.process(&mut line);
                for (t, v) in line.iter().enumerate() {
                    values[base + t * stride] = *v;
                }
            }
        }
    }
}

/// Mean of `term(i)` over `0..len`, summed in fixed chunks so the result
/// does not depend on the number of worker threads.
pub(crate) fn chunked_mean<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    if len == 0 {
        return 0.0;
    }
    let chunks: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).map(&term).sum::<f64>()
        })
        .collect();
    chunks.iter().sum::<f64>() / len as f64
}
