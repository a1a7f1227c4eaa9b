//! Radial Morawetz multipliers `φ_R` and the symmetric weight `varphi_R`.
//!
//! For `n >= 3`, `R > 0`, `M >= 0`:
//!
//! ```text
//! φ'(r)  = M + (n-1) r / (2nR)                 r <= R
//!        = M + 1/2 - R^{n-1} / (2n r^{n-1})     r >  R
//! ```
//!
//! In three dimensions this is `M + r/(3R)` and `M + 1/2 - R^2/(6r^2)`.
//! The bilaplacian carries a surface atom `-(n-1)/(2R^2) δ_{|x|=R}` and, for
//! `n = 3` only, an origin atom `-8πM δ_0` coming from `Δ(2M/r)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::norm;
use crate::grid::unit_sphere_area;

/// Support of a Dirac part of a radial distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum Atom {
    /// `mass · δ_0`.
    Origin { mass: f64 },
    /// `density · δ_{|x| = radius}` (surface measure).
    Sphere { radius: f64, density: f64 },
}

impl Atom {
    /// Pairing with a radial function `ψ(r)` on `R^n`.
    pub fn pair(&self, dim: usize, psi: impl Fn(f64) -> f64) -> f64 {
        match *self {
            Atom::Origin { mass } => mass * psi(0.0),
            Atom::Sphere { radius, density } => {
                density * unit_sphere_area(dim) * radius.powi(dim as i32 - 1) * psi(radius)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    dim: usize,
    radius: f64,
    m: f64,
}

/// Builds `φ_R` for dimension `n`, scale `R` and parameter `M`.
pub fn make_phi(dim: usize, radius: f64, m: f64) -> Result<Multiplier> {
    if dim < 3 {
        return param(format!("multiplier needs n >= 3 (got {dim})"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return param(format!("multiplier scale R must be positive (got {radius})"));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return param(format!("multiplier parameter M must be finite and >= 0 (got {m})"));
    }
    Ok(Multiplier { dim, radius, m })
}

impl Multiplier {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn m(&self) -> f64 {
        self.m
    }

    fn nf(&self) -> f64 {
        self.dim as f64
    }

    pub fn phi_prime(&self, r: f64) -> f64 {
        let n = self.nf();
        let big_r = self.radius;
        if r <= big_r {
            self.m + (n - 1.0) * r / (2.0 * n * big_r)
        } else {
            self.m + 0.5 - (big_r / r).powi(self.dim as i32 - 1) / (2.0 * n)
        }
    }

    pub fn phi_second(&self, r: f64) -> f64 {
        let n = self.nf();
        let big_r = self.radius;
        if r <= big_r {
            (n - 1.0) / (2.0 * n * big_r)
        } else {
            (n - 1.0) / (2.0 * n) * big_r.powi(self.dim as i32 - 1) / r.powi(self.dim as i32)
        }
    }

    /// `Δφ = φ'' + (n-1) φ'/r`.
    pub fn laplacian(&self, r: f64) -> f64 {
        let n = self.nf();
        if r <= self.radius {
            (n - 1.0) / (2.0 * self.radius) + self.m * (n - 1.0) / r
        } else {
            (2.0 * self.m + 1.0) * (n - 1.0) / (2.0 * r)
        }
    }

    /// Absolutely continuous part of `Δ²φ`.
    pub fn bilaplacian_smooth(&self, r: f64) -> f64 {
        let n = self.nf();
        let c = (n - 1.0) * (n - 3.0) / r.powi(3);
        if r <= self.radius {
            -self.m * c
        } else {
            -(self.m + 0.5) * c
        }
    }

    /// Dirac parts of `Δ²φ`.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::with_capacity(2);
        if self.dim == 3 {
            out.push(Atom::Origin {
                mass: -8.0 * std::f64::consts::PI * self.m,
            });
        }
        out.push(Atom::Sphere {
            radius: self.radius,
            density: -(self.nf() - 1.0) / (2.0 * self.radius * self.radius),
        });
        out
    }

    /// `∇φ(x) = φ'(|x|) x/|x|`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let s = if r > 0.0 { self.phi_prime(r) / r } else { 0.0 };
        out.iter_mut().zip(x).for_each(|(o, v)| *o = s * v);
    }
}

/// `∇_A u D²φ conj(∇_A u) = φ'' |g_r|² + (φ'/|x|) |g_τ|²` with `g = ∇_A u(x)`.
pub fn hessian_split(mult: &Multiplier, x: &[f64], g: &[Complex64]) -> Result<f64> {
    if x.len() != mult.dim || g.len() != mult.dim {
        return Err(Error::Shape(format!(
            "hessian_split expects vectors of length {} (got {} and {})",
            mult.dim,
            x.len(),
            g.len()
        )));
    }
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Domain("hessian_split is undefined at the origin".into()));
    }
    let (gr2, gt2) = split_sq(x, r, g);
    Ok(mult.phi_second(r) * gr2 + mult.phi_prime(r) / r * gt2)
}

/// `(|g·x̂|², |g|² - |g·x̂|²)`, the second clamped at zero.
pub(crate) fn split_sq(x: &[f64], r: f64, g: &[Complex64]) -> (f64, f64) {
    let gr: Complex64 = g.iter().zip(x).map(|(g, x)| g * (x / r)).sum();
    let total: f64 = g.iter().map(|g| g.norm_sqr()).sum();
    let gr2 = gr.norm_sqr();
    (gr2, (total - gr2).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricWeight {
    dim: usize,
    radius: f64,
    beta: f64,
}

/// Bounds `C₀ ⟨x⟩^{-1} <= varphi_R <= C ⟨x⟩^{-1}` valid for every `R` in a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub c0: f64,
    pub c: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Upper end of the admissible `β` range, `(n-1)/(2n)`.
pub fn beta_limit(dim: usize) -> f64 {
    (dim as f64 - 1.0) / (2.0 * dim as f64)
}

pub const DEFAULT_BETA: f64 = 1e-3;

/// Builds `varphi_R = β/R` on `r <= R`, `β/r` beyond.
pub fn make_varphi(dim: usize, radius: f64, beta: f64) -> Result<SymmetricWeight> {
    if dim < 3 {
        return param(format!("weight needs n >= 3 (got {dim})"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return param(format!("weight scale R must be positive (got {radius})"));
    }
    let top = beta_limit(dim);
    if !(beta > 0.0 && beta < top) {
        return param(format!("beta must lie in (0, {top}) for n = {dim} (got {beta})"));
    }
    Ok(SymmetricWeight { dim, radius, beta })
}

impl SymmetricWeight {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn value(&self, r: f64) -> f64 {
        self.beta / r.max(self.radius)
    }

    /// Radial derivative `varphi'`.
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.radius {
            0.0
        } else {
            -self.beta / (r * r)
        }
    }

    /// Absolutely continuous part of `Δvarphi`.
    pub fn laplacian_smooth(&self, r: f64) -> f64 {
        if r <= self.radius {
            0.0
        } else {
            -self.beta * (self.dim as f64 - 3.0) / r.powi(3)
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        vec![Atom::Sphere {
            radius: self.radius,
            density: -self.beta / (self.radius * self.radius),
        }]
    }

    /// `∇varphi(x) = varphi'(|x|) x/|x|`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let s = if r > 0.0 { self.derivative(r) / r } else { 0.0 };
        out.iter_mut().zip(x).for_each(|(o, v)| *o = s * v);
    }

    /// Sandwich constants valid for all scales `R ∈ [r_min, r_max]` with this `β`.
    pub fn sandwich(&self, r_min: f64, r_max: f64) -> Result<Sandwich> {
        sandwich(self.beta, r_min, r_max)
    }
}

/// `C₀ = β min(1, 1/R_max)`, `C = β ⟨R_min⟩ / R_min`.
pub fn sandwich(beta: f64, r_min: f64, r_max: f64) -> Result<Sandwich> {
    if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
        return param(format!("sandwich bracket must satisfy 0 < R_min <= R_max < inf (got [{r_min}, {r_max}])"));
    }
    Ok(Sandwich {
        c0: beta * (1.0f64).min(1.0 / r_max),
        c: beta * (1.0 + r_min * r_min).sqrt() / r_min,
        r_min,
        r_max,
    })
}
