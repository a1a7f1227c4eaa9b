//! Exact inverse of the free shifted Dirichlet Laplacian `-Δ^h - z` by sine transforms.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::RadialGrid;

pub struct ShiftedLaplacianInverse {
    dim: usize,
    per_axis: usize,
    fft: Arc<dyn Fft<f64>>,
    /// 1-D eigenvalues `(2 - 2cos(π(m+1)/(N+1))) / h^2`.
    eigen: Vec<f64>,
    shift: Complex64,
}

impl std::fmt::Debug for ShiftedLaplacianInverse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedLaplacianInverse")
            .field("dim", &self.dim)
            .field("per_axis", &self.per_axis)
            .field("shift", &self.shift)
            .finish()
    }
}

impl ShiftedLaplacianInverse {
    pub fn new(grid: &RadialGrid, shift: Complex64) -> Self {
        let n = grid.per_axis();
        let h2 = grid.spacing().powi(2);
        let eigen = (0..n)
            .map(|m| (2.0 - 2.0 * (std::f64::consts::PI * (m + 1) as f64 / (n + 1) as f64).cos()) / h2)
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self {
            dim: grid.dim(),
            per_axis: n,
            fft,
            eigen,
            shift,
        }
    }

    /// Unnormalised DST-I of every line along `axis`.
    fn transform_axis(&self, data: &mut [Complex64], axis: usize) {
        let n = self.per_axis;
        let stride = n.pow(axis as u32);
        let block = stride * n;
        let m = 2 * (n + 1);
        let zero = Complex64::new(0.0, 0.0);
        data.par_chunks_mut(block).for_each_init(
            || (vec![zero; m], vec![zero; self.fft.get_inplace_scratch_len()]),
            |(buf, scratch), chunk| {
                for offset in 0..stride {
                    buf.iter_mut().for_each(|b| *b = zero);
                    for j in 0..n {
                        let v = chunk[offset + j * stride];
                        buf[j + 1] = v;
                        buf[m - 1 - j] = -v;
                    }
                    self.fft.process_with_scratch(buf, scratch);
                    for k in 0..n {
                        chunk[offset + k * stride] = Complex64::new(0.0, 0.5) * buf[k + 1];
                    }
                }
            },
        );
    }

    /// Overwrites `data` with `(-Δ^h - z)^{-1} data`.
    pub fn apply(&self, data: &mut [Complex64]) {
        for axis in 0..self.dim {
            self.transform_axis(data, axis);
        }
        let n = self.per_axis;
        let norm = (2.0 / (n + 1) as f64).powi(self.dim as i32);
        data.par_iter_mut().enumerate().for_each(|(mut idx, v)| {
            let mut lam = 0.0;
            for _ in 0..self.dim {
                lam += self.eigen[idx % n];
                idx /= n;
            }
            *v *= norm / (Complex64::new(lam, 0.0) - self.shift);
        });
        for axis in 0..self.dim {
            self.transform_axis(data, axis);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PotentialPair;
    use crate::grid::GridSpec;
    use crate::resolvent::operator::DiscreteOperator;

    #[test]
    fn inverts_the_free_operator() {
        for dim in [3, 4] {
            let grid = RadialGrid::shared(GridSpec::new(dim, 2.0, 0.5)).unwrap();
            let shift = Complex64::new(1.3, -0.2);
            let op = DiscreteOperator::new(grid.clone(), &PotentialPair::free(dim), shift).unwrap();
            let inv = ShiftedLaplacianInverse::new(&grid, shift);
            let b: Vec<Complex64> = (0..grid.len())
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
                .collect();
            let mut x = b.clone();
            inv.apply(&mut x);
            let mut back = vec![Complex64::new(0.0, 0.0); grid.len()];
            op.apply(&x, &mut back);
            let err = back.iter().zip(&b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-11, "dim {dim}: {err}");
        }
    }
}
