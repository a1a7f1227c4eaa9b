//! Cell-centred Cartesian grids over the box `[-L, L]^n` and complex fields on them.
//!
//! Nodes sit at `-L + (i + 1/2) h` along every axis, so the origin is never a
//! node and `|x| >= h sqrt(n) / 2` holds everywhere. Radial functionals use a
//! ladder of radii `R_k = k h`; every node is split between the two ladder
//! radii that bracket it with linear ("hat") weights, which gives a partition
//! of unity over the ladder.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Largest node count accepted by [`RadialGrid::new`].
pub const MAX_NODES: usize = 1 << 26;

/// Dimension, half-width and spacing of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, spacing: f64) -> Self {
        Self {
            dim,
            half_width,
            spacing,
        }
    }
}

/// Surface measure of the unit sphere in `R^n`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    // |S^{n+1}| = 2π/n |S^{n-1}|
    let (mut area, mut n) = if dim % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while n < dim {
        area *= 2.0 * PI / n as f64;
        n += 2;
    }
    area
}

/// Japanese bracket `<r> = (1 + r^2)^{1/2}`.
#[inline]
pub fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

#[derive(Debug)]
pub struct RadialGrid {
    spec: GridSpec,
    per_axis: usize,
    len: usize,
    radius: Vec<f64>,
    by_radius: Vec<u32>,
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec {
            dim,
            half_width,
            spacing,
        } = spec;
        if dim < 1 {
            return param("grid dimension must be positive");
        }
        if !(half_width > 0.0 && spacing > 0.0 && half_width.is_finite()) {
            return param(format!(
                "grid needs L > 0 and h > 0 (got L = {half_width}, h = {spacing})"
            ));
        }
        let ratio = half_width / spacing;
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return param(format!("L/h must be a positive integer (got {ratio})"));
        }
        let per_axis = 2 * cells as usize;
        let len = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(per_axis));
        let len = match len {
            Some(len) if len <= MAX_NODES => len,
            _ => {
                return param(format!(
                    "grid with {per_axis}^{dim} nodes exceeds the {MAX_NODES} node limit"
                ))
            }
        };

        let coord = |i: usize| -half_width + (i as f64 + 0.5) * spacing;
        let radius: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|mut idx| {
                let mut r2 = 0.0;
                for _ in 0..dim {
                    let x = coord(idx % per_axis);
                    r2 += x * x;
                    idx /= per_axis;
                }
                r2.sqrt()
            })
            .collect();
        let mut by_radius: Vec<u32> = (0..len as u32).collect();
        by_radius.par_sort_unstable_by(|&a, &b| radius[a as usize].total_cmp(&radius[b as usize]));

        Ok(Self {
            spec,
            per_axis,
            len,
            radius,
            by_radius,
        })
    }

    pub fn shared(spec: GridSpec) -> Result<Arc<Self>> {
        Self::new(spec).map(Arc::new)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
    pub fn dim(&self) -> usize {
        self.spec.dim
    }
    pub fn spacing(&self) -> f64 {
        self.spec.spacing
    }
    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    /// `h^n`, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.spec.spacing.powi(self.spec.dim as i32)
    }

    /// Index stride of `axis`; axis 0 varies fastest.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.per_axis.pow(axis as u32)
    }

    #[inline]
    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.spec.half_width + (i as f64 + 0.5) * self.spec.spacing
    }

    /// Position along `axis` of node `idx`.
    #[inline]
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.per_axis
    }

    /// Writes the coordinates of node `idx` into `out` (length `dim`).
    #[inline]
    pub fn coords(&self, mut idx: usize, out: &mut [f64]) {
        for x in out.iter_mut().take(self.spec.dim) {
            *x = self.axis_coordinate(idx % self.per_axis);
            idx /= self.per_axis;
        }
    }

    pub fn coords_vec(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.spec.dim];
        self.coords(idx, &mut x);
        x
    }

    /// Neighbour of `idx` one step along `axis` in direction `forward`; `None` outside the box.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let stride = self.stride(axis);
        let i = (idx / stride) % self.per_axis;
        if forward {
            (i + 1 < self.per_axis).then(|| idx + stride)
        } else {
            (i > 0).then(|| idx - stride)
        }
    }

    /// Distance from node `idx` to the nearest face of the box.
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let mut best = f64::INFINITY;
        let mut rest = idx;
        for _ in 0..self.spec.dim {
            let x = self.axis_coordinate(rest % self.per_axis);
            best = best.min(self.spec.half_width - x.abs());
            rest /= self.per_axis;
        }
        best
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        self.radius[idx]
    }
    pub fn radii(&self) -> &[f64] {
        &self.radius
    }
    /// Node indices sorted by increasing radius.
    pub fn by_radius(&self) -> &[u32] {
        &self.by_radius
    }
    pub fn min_radius(&self) -> f64 {
        self.radius[self.by_radius[0] as usize]
    }
    pub fn max_radius(&self) -> f64 {
        self.radius[*self.by_radius.last().unwrap() as usize]
    }

    /// Shell index `k` of node `idx`: the node lies in `[kh - h/2, kh + h/2)`.
    pub fn shell_index(&self, idx: usize) -> usize {
        (self.radius[idx] / self.spec.spacing + 0.5).floor() as usize
    }

    /// Ladder radii `R_k = k h`, `k >= 1`, whose spheres lie inside the box with a one-cell margin.
    pub fn sphere_ladder(&self) -> Vec<f64> {
        let h = self.spec.spacing;
        let top = self.per_axis / 2;
        (1..top).map(|k| k as f64 * h).collect()
    }

    /// `∫_{shell k} density` for every shell index `k`.
    pub fn shell_masses(&self, density: &[f64]) -> Vec<f64> {
        let bins = self.shell_index(*self.by_radius.last().unwrap() as usize) + 1;
        let mut acc = vec![0.0; bins];
        for (idx, &d) in density.iter().enumerate() {
            acc[self.shell_index(idx)] += d;
        }
        let vol = self.cell_volume();
        acc.iter_mut().for_each(|m| *m *= vol);
        acc
    }

    /// `∫_{|x|=R} density dσ` approximated by `h^{-1} ∫_{R-h/2 <= |x| < R+h/2} density`.
    pub fn sphere_integral(&self, density: &[f64], radius: f64) -> f64 {
        let h = self.spec.spacing;
        let (lo, hi) = (radius - 0.5 * h, radius + 0.5 * h);
        let s: f64 = density
            .par_iter()
            .zip(self.radius.par_iter())
            .filter(|(_, &r)| r >= lo && r < hi)
            .map(|(d, _)| d)
            .sum();
        s * self.cell_volume() / h
    }

    /// Indices of the `2^n` nodes nearest the origin.
    pub fn origin_cell(&self) -> Vec<usize> {
        let mid = self.per_axis / 2;
        let dim = self.spec.dim;
        (0..1usize << dim)
            .map(|mask| {
                (0..dim)
                    .map(|axis| {
                        let i = if mask >> axis & 1 == 1 { mid } else { mid - 1 };
                        i * self.stride(axis)
                    })
                    .sum()
            })
            .collect()
    }

    /// Multilinear interpolation of a nodal density to the origin.
    pub fn origin_value(&self, density: &[f64]) -> f64 {
        let cell = self.origin_cell();
        cell.iter().map(|&i| density[i]).sum::<f64>() / cell.len() as f64
    }

    /// `∫ density` by the cell-centred rule.
    pub fn integrate(&self, density: &[f64]) -> f64 {
        density.par_iter().sum::<f64>() * self.cell_volume()
    }

    pub fn same_layout(&self, other: &RadialGrid) -> bool {
        self.spec == other.spec
    }
}

/// Complex-valued samples on a [`RadialGrid`].
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"MCSF";
const SNAPSHOT_VERSION: u32 = 1;

impl ScalarField {
    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return param("field values must be finite");
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: Arc<RadialGrid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let dim = grid.dim();
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |x, idx| {
                    grid.coords(idx, x);
                    f(x)
                },
            )
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `|u|^2` per node.
    pub fn density(&self) -> Vec<f64> {
        self.values.par_iter().map(|v| v.norm_sqr()).collect()
    }

    /// `(∫ |u|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.integrate(&self.density()).sqrt()
    }

    /// `∫ u v̄`.
    pub fn inner(&self, other: &ScalarField) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn scale(&self, c: Complex64) -> ScalarField {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_layout(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid.spec(),
                other.grid.spec()
            )))
        }
    }

    /// Writes the binary snapshot (see the repository README for the layout).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let spec = self.grid.spec();
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(spec.dim as u32).to_le_bytes())?;
        w.write_all(&(self.grid.per_axis() as u64).to_le_bytes())?;
        w.write_all(&spec.half_width.to_le_bytes())?;
        w.write_all(&spec.spacing.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<ScalarField> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &take::<4, _>(&mut r)? != SNAPSHOT_MAGIC {
            return Err(Error::Format("bad snapshot magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let dim = u32::from_le_bytes(take(&mut r)?) as usize;
        let per_axis = u64::from_le_bytes(take(&mut r)?) as usize;
        let half_width = f64::from_le_bytes(take(&mut r)?);
        let spacing = f64::from_le_bytes(take(&mut r)?);
        let count = u64::from_le_bytes(take(&mut r)?) as usize;
        let grid = RadialGrid::shared(GridSpec::new(dim, half_width, spacing))
            .map_err(|e| Error::Format(format!("invalid snapshot header: {e}")))?;
        if grid.per_axis() != per_axis || grid.len() != count {
            return Err(Error::Format("snapshot header is inconsistent".into()));
        }
        let mut raw = vec![0u8; 16 * count];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(ScalarField { grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout_avoids_origin() {
        let grid = RadialGrid::new(GridSpec::new(3, 8.0, 0.25)).unwrap();
        assert_eq!(grid.per_axis(), 64);
        assert_eq!(grid.len(), 64 * 64 * 64);
        let expected = 0.125 * 3f64.sqrt();
        assert!((grid.min_radius() - expected).abs() < 1e-14);
        assert!(grid.min_radius() >= grid.spacing() / 2.0);
    }

    #[test]
    fn rejects_non_integer_ratio() {
        assert!(matches!(
            RadialGrid::new(GridSpec::new(3, 1.0, 0.3)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn shells_partition_the_nodes() {
        let grid = RadialGrid::new(GridSpec::new(3, 2.0, 0.25)).unwrap();
        let ones = vec![1.0; grid.len()];
        let total: f64 = grid.shell_masses(&ones).iter().sum();
        assert!((total - grid.integrate(&ones)).abs() < 1e-9);
        let ladder: f64 = (1..=grid.shell_masses(&ones).len()).map(|k| grid.sphere_integral(&ones, k as f64 * 0.25)).sum::<f64>()
            + grid.sphere_integral(&ones, 0.0);
        assert!((ladder * 0.25 - grid.integrate(&ones)).abs() < 1e-9);
    }

    #[test]
    fn shell_rule_sphere_area() {
        let grid = RadialGrid::new(GridSpec::new(3, 4.0, 0.05)).unwrap();
        let ones = vec![1.0; grid.len()];
        for r in [1.0, 2.0, 3.0] {
            let want = 4.0 * PI * r * r;
            let got = grid.sphere_integral(&ones, r);
            // lattice-point fluctuations of thin shells are O(h/R)
            assert!((got - want).abs() < 0.05 / r * want, "{r}: {got} vs {want}");
        }
    }

    #[test]
    fn origin_cell_is_symmetric() {
        let grid = RadialGrid::new(GridSpec::new(3, 1.0, 0.25)).unwrap();
        let cell = grid.origin_cell();
        assert_eq!(cell.len(), 8);
        for idx in cell {
            assert!((grid.radius(idx) - grid.min_radius()).abs() < 1e-14);
        }
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact() {
        let grid = RadialGrid::shared(GridSpec::new(3, 1.0, 0.25)).unwrap();
        let u = ScalarField::from_fn(grid, |x| Complex64::new(x[0].sin() / 3.0, x[1] * x[2]));
        let mut buf = Vec::new();
        u.write_snapshot(&mut buf).unwrap();
        let v = ScalarField::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(v.grid().spec(), u.grid().spec());
        for (a, b) in u.values().iter().zip(v.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(matches!(
            ScalarField::read_snapshot(&b"NOPE...."[..]),
            Err(Error::Format(_))
        ));
    }
}
