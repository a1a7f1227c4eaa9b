//! Biot-Savart vector potential of a divergence-free field in three dimensions.
//!
//! `A = curl (1/4π) ∫ B(y)/|x-y| dy` is the Coulomb-gauge potential of a
//! divergence-free `B`, i.e. `A(x) = (1/4π) ∫ B(y) × (x-y)/|x-y|^3 dy`.
//! With `y = x + sθ` this is `A(x) = (1/4π) ∫_0^∞ ∫_{S^2} θ × B(x + sθ) dθ ds`,
//! which has no singularity at `y = x`.
//! The remaining singularity of `B` at `y = 0` sits at `s = |x|`, `θ = -x/|x|`;
//! both radial and polar panels are graded geometrically towards it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiotSavartQuadrature {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Trapezoid nodes in the azimuth.
    pub azimuth: usize,
    /// Geometric grading depth towards the singular point.
    pub grading: usize,
    /// Number of doubling panels beyond `2|x|`.
    pub far_doublings: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for BiotSavartQuadrature {
    fn default() -> Self {
        Self {
            order: 6,
            azimuth: 24,
            grading: 14,
            far_doublings: 40,
            rtol: 1e-4,
            atol: 1e-9,
        }
    }
}

impl BiotSavartQuadrature {
    fn refined(&self) -> Self {
        Self {
            order: self.order + 3,
            azimuth: self.azimuth * 3 / 2,
            grading: self.grading + 6,
            far_doublings: self.far_doublings * 2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiotSavartResult {
    pub value: [f64; 3],
    /// Difference between the two refinement levels.
    pub error_estimate: f64,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn radial_rule(c: f64, q: &BiotSavartQuadrature) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0, 0.5 * c];
    for k in 2..=q.grading {
        edges.push(c * (1.0 - 0.5f64.powi(k as i32)));
    }
    edges.push(c);
    for k in (2..=q.grading).rev() {
        edges.push(c * (1.0 + 0.5f64.powi(k as i32)));
    }
    edges.push(1.5 * c);
    let mut s = 2.0 * c;
    for _ in 0..q.far_doublings {
        edges.push(s);
        s *= 2.0;
    }
    edges.push(s);
    edges
        .windows(2)
        .flat_map(|w| gauss_legendre_on(q.order, w[0], w[1]))
        .collect()
}

/// Rule in `t = 1 - cos(angle to the singular direction)` on `[0, 2]`.
fn polar_rule(q: &BiotSavartQuadrature) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    for k in (0..q.grading).rev() {
        edges.push(2.0 * 0.5f64.powi(k as i32 + 1));
    }
    edges.push(2.0);
    edges
        .windows(2)
        .flat_map(|w| gauss_legendre_on(q.order, w[0], w[1]))
        .collect()
}

fn single_level<F>(field: &F, x: [f64; 3], q: &BiotSavartQuadrature) -> [f64; 3]
where
    F: Fn(&[f64; 3]) -> [f64; 3],
{
    let rx = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let (c, p) = if rx > 0.0 { (rx, x.map(|v| -v / rx)) } else { (1.0, [0.0, 0.0, 1.0]) };
    // orthonormal frame (e1, e2, p)
    let trial = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = {
        let v = cross(p, trial);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        v.map(|c| c / n)
    };
    let e2 = cross(p, e1);
    let radial = radial_rule(c, q);
    let polar = polar_rule(q);
    let dpsi = std::f64::consts::TAU / q.azimuth as f64;
    let dirs: Vec<([f64; 3], f64)> = polar
        .iter()
        .flat_map(|&(t, wt)| {
            let mu = 1.0 - t;
            let sin = (1.0 - mu * mu).max(0.0).sqrt();
            (0..q.azimuth).map(move |k| {
                let psi = (k as f64 + 0.5) * dpsi;
                let (sp, cp) = psi.sin_cos();
                let th = [0, 1, 2].map(|i| mu * p[i] + sin * (cp * e1[i] + sp * e2[i]));
                (th, wt * dpsi)
            })
        })
        .collect();
    let mut acc = [0.0; 3];
    for &(s, ws) in &radial {
        for &(th, wd) in &dirs {
            let y = [x[0] + s * th[0], x[1] + s * th[1], x[2] + s * th[2]];
            let b = field(&y);
            let v = cross(th, b);
            let w = ws * wd;
            acc[0] += w * v[0];
            acc[1] += w * v[1];
            acc[2] += w * v[2];
        }
    }
    acc.map(|v| v / (4.0 * std::f64::consts::PI))
}

/// Coulomb-gauge vector potential `A(x) = (1/4π) ∫ B(y) × (x-y)/|x-y|^3 dy`.
///
/// Evaluated at two refinement levels; fails with an accuracy error when they
/// differ by more than `atol + rtol |A|`.
pub fn biot_savart<F>(field: &F, x: [f64; 3], quad: &BiotSavartQuadrature) -> Result<BiotSavartResult>
where
    F: Fn(&[f64; 3]) -> [f64; 3],
{
    if quad.order == 0 || quad.azimuth == 0 {
        return Err(Error::Parameter("Biot-Savart quadrature needs positive order and azimuth".into()));
    }
    let coarse = single_level(field, x, quad);
    let fine = single_level(field, x, &quad.refined());
    let diff = (0..3).map(|i| (fine[i] - coarse[i]).powi(2)).sum::<f64>().sqrt();
    let size = fine.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !diff.is_finite() || diff > quad.atol + quad.rtol * size {
        return Err(Error::Accuracy(format!(
            "Biot-Savart quadrature at {x:?} did not converge: levels differ by {diff:.3e} (|A| = {size:.3e})"
        )));
    }
    Ok(BiotSavartResult {
        value: fine,
        error_estimate: diff,
    })
}
