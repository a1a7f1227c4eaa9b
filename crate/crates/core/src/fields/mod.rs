//! Electromagnetic potentials and derived pointwise quantities.
//!
//! A [`PotentialPair`] bundles a magnetic potential `A: R^n -> R^n` and an
//! electric potential `V: R^n -> R`, each with optional analytic derivatives.
//! The magnetic field is the antisymmetrised Jacobian `B = DA - (DA)^t` with
//! `(DA)_{ij} = ∂A^i/∂x_j`; its trapping component is the row-vector product
//! `B_τ = (x/|x|) B`.

mod biot_savart;
mod builtins;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use biot_savart::{biot_savart, BiotSavartQuadrature};
pub use builtins::{example_field, AngularProfile, ElectricSpec, ExampleKind, MagneticSpec, PotentialSpec};

pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Row-major `n x n` Jacobian, entry `i * n + j` is `∂A^i/∂x_j`.
pub type JacobianFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Relative step of the central-difference Jacobian: `h = JAC_STEP * max(1, |x|)`.
pub const JAC_STEP: f64 = 1e-5;

/// Set on which a potential is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Singularity {
    None,
    Origin,
    /// The codimension-two axis `x_1 = x_2 = 0`.
    Axis,
}

impl Singularity {
    fn check(self, x: &[f64], what: &str) -> Result<()> {
        let scale = norm(x).max(1.0);
        match self {
            Singularity::None => Ok(()),
            Singularity::Origin if norm(x) <= 1e-300 => {
                Err(Error::Domain(format!("{what} is singular at the origin")))
            }
            Singularity::Axis if x[0].hypot(x[1]) <= 1e-12 * scale => Err(Error::Domain(format!(
                "{what} is singular on the x_3 axis"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone)]
pub struct MagneticPotential {
    value: VectorFn,
    jacobian: Option<JacobianFn>,
    singular: Singularity,
}

#[derive(Clone)]
pub struct ElectricPotential {
    value: ScalarFn,
    radial_derivative: Option<ScalarFn>,
    singular: Singularity,
}

/// Magnetic potential `A` and electric potential `V` on `R^n`.
#[derive(Clone)]
pub struct PotentialPair {
    dim: usize,
    label: String,
    magnetic: Option<MagneticPotential>,
    electric: Option<ElectricPotential>,
}

impl fmt::Debug for PotentialPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialPair")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("magnetic", &self.magnetic.is_some())
            .field("electric", &self.electric.is_some())
            .finish()
    }
}

impl PotentialPair {
    /// `A = 0`, `V = 0`.
    pub fn free(dim: usize) -> Self {
        Self {
            dim,
            label: "free".into(),
            magnetic: None,
            electric: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_magnetic<F>(mut self, value: F, jacobian: Option<JacobianFn>, singular: Singularity) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.magnetic = Some(MagneticPotential {
            value: Arc::new(value),
            jacobian,
            singular,
        });
        self
    }

    pub fn with_electric<F>(mut self, value: F, radial_derivative: Option<ScalarFn>, singular: Singularity) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.electric = Some(ElectricPotential {
            value: Arc::new(value),
            radial_derivative,
            singular,
        });
        self
    }

    /// Replaces `A` by `A + ∇χ` given `∇χ` and, optionally, the Hessian of `χ`.
    pub fn gauge_shifted(&self, grad_chi: VectorFn, hess_chi: Option<JacobianFn>) -> Self {
        let dim = self.dim;
        let base = self.magnetic.clone();
        let base_value = base.as_ref().map(|m| m.value.clone());
        let g = grad_chi.clone();
        let value = move |x: &[f64], out: &mut [f64]| {
            match &base_value {
                Some(a) => a(x, out),
                None => out.iter_mut().for_each(|v| *v = 0.0),
            }
            let mut tmp = vec![0.0; dim];
            g(x, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
        };
        let jacobian: Option<JacobianFn> = match (&base, hess_chi) {
            (Some(MagneticPotential { jacobian: Some(j), .. }), Some(hc)) => {
                let j = j.clone();
                Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
                    j(x, out);
                    let mut tmp = vec![0.0; dim * dim];
                    hc(x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
                }))
            }
            (None, Some(hc)) => Some(hc),
            _ => None,
        };
        let singular = base.map(|m| m.singular).unwrap_or(Singularity::None);
        let mut out = self.clone();
        out.label = format!("{} + gauge", self.label);
        out.magnetic = Some(MagneticPotential {
            value: Arc::new(value),
            jacobian,
            singular,
        });
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn has_magnetic(&self) -> bool {
        self.magnetic.is_some()
    }
    pub fn has_electric(&self) -> bool {
        self.electric.is_some()
    }
    pub fn has_analytic_jacobian(&self) -> bool {
        self.magnetic.as_ref().is_none_or(|m| m.jacobian.is_some())
    }

    /// `A(x)` written into `out`; zero when no magnetic potential is set.
    pub fn vector_potential(&self, x: &[f64], out: &mut [f64]) {
        match &self.magnetic {
            Some(m) => (m.value)(x, out),
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    pub fn vector_potential_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.vector_potential(x, &mut out);
        out
    }

    /// `V(x)`; zero when no electric potential is set.
    pub fn scalar_potential(&self, x: &[f64]) -> f64 {
        self.electric.as_ref().map_or(0.0, |e| (e.value)(x))
    }

    pub fn magnetic_singularity(&self) -> Singularity {
        self.magnetic.as_ref().map_or(Singularity::None, |m| m.singular)
    }
    pub fn electric_singularity(&self) -> Singularity {
        self.electric.as_ref().map_or(Singularity::None, |e| e.singular)
    }

    /// Jacobian of `A` at `x`, analytic when available, else central differences.
    pub fn jacobian(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.jacobian_with(x, out, false)
    }

    /// Central-difference Jacobian regardless of analytic availability.
    pub fn jacobian_fd(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.jacobian_with(x, out, true)
    }

    fn jacobian_with(&self, x: &[f64], out: &mut [f64], force_fd: bool) -> Result<()> {
        let n = self.dim;
        let Some(m) = &self.magnetic else {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        };
        m.singular.check(x, "magnetic potential")?;
        match (&m.jacobian, force_fd) {
            (Some(j), false) => j(x, out),
            _ => {
                let step = JAC_STEP * norm(x).max(1.0);
                let mut xp = x.to_vec();
                let (mut ap, mut am) = (vec![0.0; n], vec![0.0; n]);
                for j in 0..n {
                    xp[j] = x[j] + step;
                    (m.value)(&xp, &mut ap);
                    xp[j] = x[j] - step;
                    (m.value)(&xp, &mut am);
                    xp[j] = x[j];
                    for i in 0..n {
                        out[i * n + j] = (ap[i] - am[i]) / (2.0 * step);
                    }
                }
            }
        }
        Ok(())
    }

    /// `∂_r V(x)`, analytic when available, else a central difference along `x/|x|`.
    pub fn radial_derivative(&self, x: &[f64]) -> Result<f64> {
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::Domain("radial derivative at the origin".into()));
        }
        let Some(e) = &self.electric else {
            return Ok(0.0);
        };
        e.singular.check(x, "electric potential")?;
        if let Some(d) = &e.radial_derivative {
            return Ok(d(x));
        }
        let step = (JAC_STEP * r.max(1.0)).min(0.25 * r);
        let plus: Vec<f64> = x.iter().map(|v| v * (1.0 + step / r)).collect();
        let minus: Vec<f64> = x.iter().map(|v| v * (1.0 - step / r)).collect();
        Ok(((e.value)(&plus) - (e.value)(&minus)) / (2.0 * step))
    }
}

/// Antisymmetric `n x n` magnetic field matrix at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl FieldMatrix {
    /// Builds `B = J - J^t` from a row-major Jacobian.
    pub fn from_jacobian(dim: usize, jac: &[f64]) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let b = jac[i * dim + j] - jac[j * dim + i];
                entries[i * dim + j] = b;
                entries[j * dim + i] = -b;
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Row-vector product `v B`.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| v[i] * self.get(i, j)).sum())
            .collect()
    }

    /// In three dimensions, the vector `b` with `B v = b × v`.
    pub fn axial_vector(&self) -> Option<[f64; 3]> {
        (self.dim == 3).then(|| [self.get(2, 1), self.get(0, 2), self.get(1, 0)])
    }
}

/// The trapping component `B_τ(x) ∈ R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialVector(pub Vec<f64>);

impl TangentialVector {
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

/// How the Jacobian of `A` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Differentiation {
    /// Analytic if supplied, else central differences.
    Auto,
    FiniteDifference,
}

pub fn magnetic_matrix(pp: &PotentialPair, x: &[f64]) -> Result<FieldMatrix> {
    magnetic_matrix_with(pp, x, Differentiation::Auto)
}

pub fn magnetic_matrix_with(pp: &PotentialPair, x: &[f64], how: Differentiation) -> Result<FieldMatrix> {
    let n = pp.dim();
    check_dim(pp, x)?;
    let mut jac = vec![0.0; n * n];
    match how {
        Differentiation::Auto => pp.jacobian(x, &mut jac)?,
        Differentiation::FiniteDifference => pp.jacobian_fd(x, &mut jac)?,
    }
    Ok(FieldMatrix::from_jacobian(n, &jac))
}

pub fn trapping_component(pp: &PotentialPair, x: &[f64]) -> Result<TangentialVector> {
    trapping_component_with(pp, x, Differentiation::Auto)
}

pub fn trapping_component_with(pp: &PotentialPair, x: &[f64], how: Differentiation) -> Result<TangentialVector> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Domain("trapping component at the origin".into()));
    }
    let b = magnetic_matrix_with(pp, x, how)?;
    let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
    Ok(TangentialVector(b.left_apply(&unit)))
}

/// `∂_r V` and the positive and negative parts of `∂_r V` and `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialParts {
    pub dr: f64,
    pub dr_plus: f64,
    pub dr_minus: f64,
    pub v_plus: f64,
    pub v_minus: f64,
}

pub fn radial_derivative_parts(pp: &PotentialPair, x: &[f64]) -> Result<RadialParts> {
    check_dim(pp, x)?;
    let dr = pp.radial_derivative(x)?;
    let v = pp.scalar_potential(x);
    Ok(RadialParts {
        dr,
        dr_plus: dr.max(0.0),
        dr_minus: (-dr).max(0.0),
        v_plus: v.max(0.0),
        v_minus: (-v).max(0.0),
    })
}

fn check_dim(pp: &PotentialPair, x: &[f64]) -> Result<()> {
    if x.len() != pp.dim() {
        return Err(Error::Shape(format!(
            "point of dimension {} for a {}-dimensional potential",
            x.len(),
            pp.dim()
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn symmetric_gauge() -> PotentialPair {
        PotentialPair::free(3).with_magnetic(
            |x, out| {
                out[0] = -x[1] / 2.0;
                out[1] = x[0] / 2.0;
                out[2] = 0.0;
            },
            None,
            Singularity::None,
        )
    }

    #[test]
    fn constant_field_matrix() {
        let b = magnetic_matrix(&symmetric_gauge(), &[0.3, -1.2, 2.0]).unwrap();
        let expected = [0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (got, want) in b.entries().iter().zip(expected) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(b.axial_vector().map(|v| v[2].round()), Some(1.0));
    }

    #[test]
    fn pure_gauge_has_no_field() {
        let w = [0.3, -0.7, 0.2];
        let pp = PotentialPair::free(3).with_magnetic(
            move |_, out| out.copy_from_slice(&w),
            None,
            Singularity::None,
        );
        let b = magnetic_matrix(&pp, &[1.0, 2.0, 3.0]).unwrap();
        assert!(b.frobenius() < 1e-9);
    }

    #[test]
    fn trapping_of_constant_field() {
        // curl A = e_3, so B_τ = e_1 × e_3 = -e_2.
        let bt = trapping_component(&symmetric_gauge(), &[1.0, 0.0, 0.0]).unwrap();
        assert!((bt.0[0]).abs() < 1e-9 && (bt.0[1] + 1.0).abs() < 1e-9 && bt.0[2].abs() < 1e-9);
    }

    #[test]
    fn antisymmetry_and_orthogonality_on_random_points() {
        let pp = PotentialSpec {
            magnetic: MagneticSpec::GaussianVortex {
                strength: 0.7,
                width: 1.3,
            },
            electric: ElectricSpec::None,
        }
        .build(3)
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let b = magnetic_matrix(&pp, &x).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(b.get(i, j), -b.get(j, i));
                }
            }
            let bt = trapping_component(&pp, &x).unwrap();
            let dot: f64 = bt.0.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(dot.abs() <= 1e-12 * (1.0 + bt.norm() * norm(&x)));
        }
    }

    #[test]
    fn trapping_at_origin_is_domain_error() {
        assert!(matches!(
            trapping_component(&symmetric_gauge(), &[0.0, 0.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gauge_shift_leaves_field_invariant() {
        let base = symmetric_gauge();
        let grad: VectorFn = Arc::new(|x: &[f64], out: &mut [f64]| {
            out[0] = (x[1]).cos() * 0.5 + x[2];
            out[1] = -(x[1]).sin() * 0.5 * x[0];
            out[2] = x[0];
        });
        // χ = 0.5 x cos(y) + x z
        let shifted = base.gauge_shifted(grad, None);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b0 = magnetic_matrix(&base, &x).unwrap();
            let b1 = magnetic_matrix(&shifted, &x).unwrap();
            for (a, b) in b0.entries().iter().zip(b1.entries()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn radial_parts_examples() {
        let harmonic = PotentialPair::free(3).with_electric(|x| x.iter().map(|v| v * v).sum(), None, Singularity::None);
        let p = radial_derivative_parts(&harmonic, &[0.0, 2.0, 0.0]).unwrap();
        assert!((p.dr - 4.0).abs() < 1e-8 && (p.dr_plus - 4.0).abs() < 1e-8 && p.dr_minus == 0.0);

        let repulsive = PotentialSpec {
            magnetic: MagneticSpec::None,
            electric: ElectricSpec::Coulomb { strength: 1.0 },
        }
        .build(3)
        .unwrap();
        let p = radial_derivative_parts(&repulsive, &[1.0, 0.0, 0.0]).unwrap();
        assert!((p.dr + 1.0).abs() < 1e-12 && (p.dr_minus - 1.0).abs() < 1e-12);

        let attractive = PotentialPair::free(3).with_electric(|x| -1.0 / norm(x), None, Singularity::Origin);
        let p = radial_derivative_parts(&attractive, &[0.0, 0.0, 2.0]).unwrap();
        // d/dr(-1/r) = 1/r^2
        assert!((p.dr - 0.25).abs() < 1e-9 && (p.dr_plus - 0.25).abs() < 1e-9);
        assert!((p.dr_plus - p.dr_minus - p.dr).abs() < 1e-15 && p.dr_plus * p.dr_minus == 0.0);
    }
}
