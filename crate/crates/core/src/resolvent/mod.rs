//! Discrete resolvent problems `-H u + (λ + iε) u = f` on a Dirichlet box.
//!
//! The sign of `ε` selects `λ ± i|ε|`. The discrete operator is
//! `L = -Δ_A^h + V - λ - iε` and the solver returns `u` with `L u = -f`.

mod dst;
mod operator;
mod solver;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::PotentialPair;
use crate::grid::{GridSpec, RadialGrid, ScalarField};
use crate::multipliers::SymmetricWeight;

pub use dst::ShiftedLaplacianInverse;
pub use operator::{
    covariant_gradient, covariant_gradient_with, link_energy_density, radial_tangential_split, DiscreteOperator,
    LinkPhases, VectorField,
};
pub use solver::{gmres, SolveStats, SolverOptions};

/// Default factor in `ε_min(L) = factor · 4 / L^2`.
pub const EPSILON_MIN_FACTOR: f64 = 1.0 / 16.0;

/// Smallest `|ε|` for which the Dirichlet truncation of half-width `L` is trusted.
pub fn epsilon_min(half_width: f64, factor: f64) -> f64 {
    factor * 4.0 / (half_width * half_width)
}

fn default_amplitude() -> f64 {
    1.0
}

/// Named data `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `a e^{-|x - c|^2 / w^2}`.
    Gaussian {
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `a ψ((|x| - radius) / width)` with the standard bump `ψ(t) = e^{1 - 1/(1 - t^2)}`.
    ShellBump {
        radius: f64,
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// `a ψ(|x - c| / width)`.
    PointBump {
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

/// Smooth bump supported in `|t| < 1`, equal to 1 at `t = 0`.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

impl DatumSpec {
    fn center(&self, dim: usize) -> Result<Vec<f64>> {
        let c = match self {
            DatumSpec::Gaussian { center, .. } | DatumSpec::PointBump { center, .. } => center.clone(),
            DatumSpec::ShellBump { .. } => None,
        };
        let c = c.unwrap_or_else(|| vec![0.0; dim]);
        if c.len() != dim {
            return param(format!("datum center has {} coordinates, expected {dim}", c.len()));
        }
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let (width, amp) = match *self {
            DatumSpec::Gaussian { width, amplitude, .. } => (width, amplitude),
            DatumSpec::ShellBump {
                radius,
                width,
                amplitude,
            } => {
                if !(radius >= 0.0) {
                    return param("shell bump radius must be >= 0");
                }
                (width, amplitude)
            }
            DatumSpec::PointBump { width, amplitude, .. } => (width, amplitude),
        };
        if !(width > 0.0 && width.is_finite()) || !amp.is_finite() {
            return param("datum width must be positive and amplitude finite");
        }
        Ok(())
    }

    /// Distance from the center (or origin) beyond which the datum vanishes (below `1e-16 a` for Gaussians).
    pub fn support_radius(&self) -> f64 {
        match *self {
            DatumSpec::Gaussian { width, .. } => width * (16.0 * std::f64::consts::LN_10).sqrt(),
            DatumSpec::ShellBump { radius, width, .. } => radius + width,
            DatumSpec::PointBump { width, .. } => width,
        }
    }

    pub fn sample(&self, grid: Arc<RadialGrid>) -> Result<ScalarField> {
        self.validate()?;
        let dim = grid.dim();
        let c = self.center(dim)?;
        let dist = move |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let spec = self.clone();
        Ok(ScalarField::from_fn(grid, move |x| {
            let v = match spec {
                DatumSpec::Gaussian { width, amplitude, .. } => amplitude * (-(dist(x) / width).powi(2)).exp(),
                DatumSpec::ShellBump {
                    radius,
                    width,
                    amplitude,
                } => {
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    amplitude * bump((r - radius) / width)
                }
                DatumSpec::PointBump { width, amplitude, .. } => amplitude * bump(dist(x) / width),
            };
            Complex64::new(v, 0.0)
        }))
    }

    /// True when the support stays at least `2h` away from the box boundary.
    pub fn support_check(&self, grid: &RadialGrid) -> bool {
        let c = self.center(grid.dim()).unwrap_or_else(|_| vec![0.0; grid.dim()]);
        let reach = c.iter().map(|v| v.abs()).fold(0.0, f64::max) + self.support_radius();
        reach <= grid.half_width() - 2.0 * grid.spacing()
    }
}

#[derive(Debug, Clone)]
pub struct ResolventProblem {
    pp: PotentialPair,
    lambda: f64,
    epsilon: f64,
    datum: ScalarField,
    operator: DiscreteOperator,
    support_ok: bool,
}

fn check_energies(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return param(format!("λ must be finite and >= 0 (got {lambda})"));
    }
    if epsilon == 0.0 || !epsilon.is_finite() {
        return param(format!("ε must be finite and non-zero (got {epsilon})"));
    }
    Ok(())
}

/// Assembles the problem for a named datum; warns when the datum reaches within `2h` of the boundary.
pub fn build_problem(
    pp: &PotentialPair,
    lambda: f64,
    epsilon: f64,
    datum: &DatumSpec,
    grid_spec: GridSpec,
) -> Result<ResolventProblem> {
    check_energies(lambda, epsilon)?;
    let grid = RadialGrid::shared(grid_spec)?;
    let f = datum.sample(grid.clone())?;
    let ok = datum.support_check(&grid);
    if !ok {
        log::warn!("datum support comes within 2h of the box boundary");
    }
    let mut prob = build_problem_with_field(pp, lambda, epsilon, f)?;
    prob.support_ok = ok;
    Ok(prob)
}

/// Assembles the problem for an explicit datum field.
pub fn build_problem_with_field(pp: &PotentialPair, lambda: f64, epsilon: f64, f: ScalarField) -> Result<ResolventProblem> {
    check_energies(lambda, epsilon)?;
    let grid = f.grid().clone();
    let operator = DiscreteOperator::new(grid.clone(), pp, Complex64::new(lambda, epsilon))?;
    let dens = f.density();
    let outer = (0..grid.len())
        .filter(|&i| grid.boundary_distance(i) < 2.0 * grid.spacing() && dens[i] > 0.0)
        .count();
    Ok(ResolventProblem {
        pp: pp.clone(),
        lambda,
        epsilon,
        datum: f,
        operator,
        support_ok: outer == 0,
    })
}

impl ResolventProblem {
    pub fn potentials(&self) -> &PotentialPair {
        &self.pp
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    /// `+1` for `λ + i|ε|`, `-1` for `λ - i|ε|`.
    pub fn sign(&self) -> f64 {
        self.epsilon.signum()
    }
    pub fn datum(&self) -> &ScalarField {
        &self.datum
    }
    pub fn operator(&self) -> &DiscreteOperator {
        &self.operator
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.datum.grid()
    }
    pub fn support_ok(&self) -> bool {
        self.support_ok
    }

    /// `||(-H^h + λ + iε) u - f|| / ||f||`.
    pub fn residual(&self, u: &ScalarField) -> Result<f64> {
        let lu = self.operator.forcing_of(u)?;
        let num: f64 = lu
            .values()
            .par_iter()
            .zip(self.datum.values().par_iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = self.datum.values().par_iter().map(|v| v.norm_sqr()).sum();
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: ScalarField,
    pub stats: SolveStats,
}

/// Solves the problem by preconditioned GMRES, the preconditioner being the exact
/// inverse of the free shifted Laplacian on the same box.
pub fn solve(prob: &ResolventProblem, opts: &SolverOptions) -> Result<Solution> {
    let grid = prob.grid().clone();
    let rhs: Vec<Complex64> = prob.datum.values().par_iter().map(|v| -v).collect();
    let pre = ShiftedLaplacianInverse::new(&grid, prob.operator.shift());
    let (x, stats) = gmres(|u, out| prob.operator.apply(u, out), |v| pre.apply(v), &rhs, opts)?;
    Ok(Solution {
        u: ScalarField::from_values(grid, x)?,
        stats,
    })
}

/// Both sides of the real-part identity for the symmetric weight:
/// `-∫varphi|∇_Au|² + ½∫Δvarphi|u|² - ∫varphi V|u|² + λ∫varphi|u|² = Re∫f varphi ū`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
}

/// Both sides of the imaginary-part identity
/// `±ε∫varphi|u|² - Im∫ū ∇varphi·∇_Au = Im∫f varphi ū`.
pub type FluxIdentity = WeightIdentity;

fn rel(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let s = scale.max(lhs.abs()).max(rhs.abs());
    if s == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / s
    }
}

pub fn weight_identity(prob: &ResolventProblem, u: &ScalarField, weight: &SymmetricWeight) -> Result<WeightIdentity> {
    let grid = prob.grid();
    u.check_same_grid(&prob.datum)?;
    let grad = covariant_gradient_with(u, prob.operator.links())?;
    let gd = grad.density();
    let ud = u.density();
    let v = prob.operator.potential();
    let f = prob.datum.values();
    let uv = u.values();
    let mut terms = [0.0f64; 5];
    for idx in 0..grid.len() {
        let r = grid.radius(idx);
        let w = weight.value(r);
        terms[0] -= w * gd[idx];
        terms[1] += 0.5 * weight.laplacian_smooth(r) * ud[idx];
        terms[2] -= w * v[idx] * ud[idx];
        terms[3] += prob.lambda * w * ud[idx];
        terms[4] += (f[idx] * w * uv[idx].conj()).re;
    }
    let vol = grid.cell_volume();
    let atoms: f64 = weight
        .atoms()
        .iter()
        .map(|a| match *a {
            crate::multipliers::Atom::Sphere { radius, density } => 0.5 * density * grid.sphere_integral(&ud, radius),
            crate::multipliers::Atom::Origin { mass } => 0.5 * mass * grid.origin_value(&ud),
        })
        .sum();
    let lhs = (terms[0] + terms[1] + terms[2] + terms[3]) * vol + atoms;
    let rhs = terms[4] * vol;
    let scale = (terms[0].abs() + terms[1].abs() + terms[2].abs() + terms[3].abs()) * vol + atoms.abs();
    Ok(WeightIdentity {
        lhs,
        rhs,
        relative_residual: rel(lhs, rhs, scale),
    })
}

pub fn flux_identity(prob: &ResolventProblem, u: &ScalarField, weight: &SymmetricWeight) -> Result<FluxIdentity> {
    let grid = prob.grid();
    u.check_same_grid(&prob.datum)?;
    let grad = covariant_gradient_with(u, prob.operator.links())?;
    let n = grid.dim();
    let f = prob.datum.values();
    let uv = u.values();
    let mut x = vec![0.0; n];
    let mut gw = vec![0.0; n];
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for idx in 0..grid.len() {
        grid.coords(idx, &mut x);
        let r = grid.radius(idx);
        let w = weight.value(r);
        a += prob.epsilon * w * uv[idx].norm_sqr();
        weight.gradient(&x, &mut gw);
        let g = grad.at(idx);
        let flux: Complex64 = (0..n).map(|k| uv[idx].conj() * gw[k] * g[k]).sum();
        b -= flux.im;
        c += (f[idx] * w * uv[idx].conj()).im;
    }
    let vol = grid.cell_volume();
    let (lhs, rhs) = ((a + b) * vol, c * vol);
    Ok(FluxIdentity {
        lhs,
        rhs,
        relative_residual: rel(lhs, rhs, (a.abs() + b.abs()) * vol),
    })
}

/// `C = ∫|∇_A u|² / (λ∫|u|² + ∫|f u|)` with the lattice link energy.
pub fn energy_constant(prob: &ResolventProblem, u: &ScalarField) -> Result<f64> {
    u.check_same_grid(&prob.datum)?;
    let grid = prob.grid();
    let e = grid.integrate(&link_energy_density(u, prob.operator.links()));
    let l2 = grid.integrate(&u.density());
    let fu: Vec<f64> = u
        .values()
        .iter()
        .zip(prob.datum.values())
        .map(|(a, b)| (a * b).norm())
        .collect();
    let den = prob.lambda * l2 + grid.integrate(&fu);
    if den == 0.0 {
        return if e == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::UndefinedRatio("λ∫|u|² + ∫|fu| vanishes".into()))
        };
    }
    Ok(e / den)
}

/// `(|ε| ∫|u|², ∫|f u|)`.
pub fn absorption_bound(prob: &ResolventProblem, u: &ScalarField) -> Result<(f64, f64)> {
    u.check_same_grid(&prob.datum)?;
    let grid = prob.grid();
    let fu: Vec<f64> = u
        .values()
        .iter()
        .zip(prob.datum.values())
        .map(|(a, b)| (a * b).norm())
        .collect();
    Ok((prob.epsilon.abs() * grid.integrate(&u.density()), grid.integrate(&fu)))
}
