//! Named potentials available to scenario files.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{biot_savart, norm, BiotSavartQuadrature, JacobianFn, PotentialPair, ScalarFn, Singularity};
use crate::error::{param, Result};
use crate::grid::bracket;

fn one() -> f64 {
    1.0
}

/// Built-in magnetic potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MagneticSpec {
    None,
    /// `A = s (-x_2, x_1, 0, ...) / |x|^2`; non-trapping.
    Ex13 {
        #[serde(default = "one")]
        strength: f64,
    },
    /// `A = s (-x_2, x_1, 0, ...) / (x_1^2 + x_2^2)`; field concentrated on the axis.
    Ex14 {
        #[serde(default = "one")]
        strength: f64,
    },
    /// Biot-Savart potential of `B(y) = h(ŷ·ω) |y|^{-α} ŷ` (three dimensions only).
    Ex14Family {
        alpha: f64,
        omega: [f64; 3],
        #[serde(default)]
        profile: AngularProfile,
    },
    /// Symmetric gauge of the constant field of strength `field` along `x_3`.
    Uniform {
        #[serde(default = "one")]
        field: f64,
    },
    /// `A = s e^{-|x|^2/w^2} (-x_2, x_1, 0, ...)`; localised and trapping.
    GaussianVortex {
        strength: f64,
        #[serde(default = "one")]
        width: f64,
    },
}

/// Built-in electric potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElectricSpec {
    None,
    /// `V = s / |x|`.
    Coulomb { strength: f64 },
    /// `V = s / |x|^2`.
    InverseSquare { strength: f64 },
    /// `V = a e^{-|x|^2 / w^2}`.
    Gaussian {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// `V = s e^{-|x|} / <x>`.
    Screened { strength: f64 },
}

/// Polynomial angular profile `h(t) = Σ c_k t^k`, evaluated at `t = ŷ·ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub coefficients: Vec<f64>,
}

impl Default for AngularProfile {
    fn default() -> Self {
        Self {
            coefficients: vec![0.0, 1.0],
        }
    }
}

impl AngularProfile {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default = "default_magnetic")]
    pub magnetic: MagneticSpec,
    #[serde(default = "default_electric")]
    pub electric: ElectricSpec,
}

fn default_magnetic() -> MagneticSpec {
    MagneticSpec::None
}
fn default_electric() -> ElectricSpec {
    ElectricSpec::None
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            magnetic: MagneticSpec::None,
            electric: ElectricSpec::None,
        }
    }
}

impl MagneticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MagneticSpec::None => "none",
            MagneticSpec::Ex13 { .. } => "ex13",
            MagneticSpec::Ex14 { .. } => "ex14",
            MagneticSpec::Ex14Family { .. } => "ex14_family",
            MagneticSpec::Uniform { .. } => "uniform",
            MagneticSpec::GaussianVortex { .. } => "gaussian_vortex",
        }
    }
}

impl ElectricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ElectricSpec::None => "none",
            ElectricSpec::Coulomb { .. } => "coulomb",
            ElectricSpec::InverseSquare { .. } => "inverse_square",
            ElectricSpec::Gaussian { .. } => "gaussian",
            ElectricSpec::Screened { .. } => "screened",
        }
    }
}

impl PotentialSpec {
    pub fn build(&self, dim: usize) -> Result<PotentialPair> {
        if dim < 3 {
            return param(format!("dimension must be at least 3 (got {dim})"));
        }
        let mut pp = PotentialPair::free(dim);
        pp = match &self.magnetic {
            MagneticSpec::None => pp,
            MagneticSpec::Ex13 { strength } => rotational(pp, *strength, RotationalKind::Spherical),
            MagneticSpec::Ex14 { strength } => rotational(pp, *strength, RotationalKind::Axial),
            MagneticSpec::Uniform { field } => rotational(pp, field / 2.0, RotationalKind::Linear),
            MagneticSpec::GaussianVortex { strength, width } => {
                if *width <= 0.0 {
                    return param("gaussian_vortex width must be positive");
                }
                rotational(pp, *strength, RotationalKind::Gaussian(*width))
            }
            MagneticSpec::Ex14Family { alpha, omega, profile } => {
                if dim != 3 {
                    return param("ex14_family is defined in three dimensions only");
                }
                family(pp, *alpha, *omega, profile.clone(), BiotSavartQuadrature::default())?
            }
        };
        pp = match self.electric {
            ElectricSpec::None => pp,
            ElectricSpec::Coulomb { strength: s } => pp.with_electric(
                move |x| s / norm(x),
                Some(Arc::new(move |x: &[f64]| -s / norm(x).powi(2)) as ScalarFn),
                Singularity::Origin,
            ),
            ElectricSpec::InverseSquare { strength: s } => pp.with_electric(
                move |x| s / norm(x).powi(2),
                Some(Arc::new(move |x: &[f64]| -2.0 * s / norm(x).powi(3)) as ScalarFn),
                Singularity::Origin,
            ),
            ElectricSpec::Gaussian { amplitude: a, width: w } => {
                if w <= 0.0 {
                    return param("gaussian width must be positive");
                }
                pp.with_electric(
                    move |x| a * (-norm(x).powi(2) / (w * w)).exp(),
                    Some(Arc::new(move |x: &[f64]| {
                        let r = norm(x);
                        -2.0 * a * r / (w * w) * (-r * r / (w * w)).exp()
                    }) as ScalarFn),
                    Singularity::None,
                )
            }
            ElectricSpec::Screened { strength: s } => pp.with_electric(
                move |x| {
                    let r = norm(x);
                    s * (-r).exp() / bracket(r)
                },
                Some(Arc::new(move |x: &[f64]| {
                    let r = norm(x);
                    let b = bracket(r);
                    -s * (-r).exp() * (1.0 / b + r / (b * b * b))
                }) as ScalarFn),
                Singularity::None,
            ),
        };
        Ok(pp.with_label(self.label()))
    }

    pub fn label(&self) -> String {
        format!("A={}, V={}", self.magnetic.name(), self.electric.name())
    }
}

#[derive(Clone, Copy)]
enum RotationalKind {
    /// weight `1/|x|^2`
    Spherical,
    /// weight `1/(x_1^2 + x_2^2)`
    Axial,
    /// weight `1`
    Linear,
    /// weight `exp(-|x|^2/w^2)`
    Gaussian(f64),
}

/// `A = s g(x) J x` with `J x = (-x_2, x_1, 0, ...)`, with analytic Jacobian
/// `∂_j A^i = s (g J_ij + (Jx)_i ∂_j g)`.
fn rotational(pp: PotentialPair, s: f64, kind: RotationalKind) -> PotentialPair {
    let n = pp.dim();
    let weight = move |x: &[f64]| -> (f64, [f64; 2], f64) {
        // (g, (∂_1 g, ∂_2 g), radial factor c with ∂_j g = c x_j for j >= 3)
        match kind {
            RotationalKind::Spherical => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let g = 1.0 / r2;
                let c = -2.0 / (r2 * r2);
                (g, [c * x[0], c * x[1]], c)
            }
            RotationalKind::Axial => {
                let p2 = x[0] * x[0] + x[1] * x[1];
                let c = -2.0 / (p2 * p2);
                (1.0 / p2, [c * x[0], c * x[1]], 0.0)
            }
            RotationalKind::Linear => (1.0, [0.0, 0.0], 0.0),
            RotationalKind::Gaussian(w) => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let g = (-r2 / (w * w)).exp();
                let c = -2.0 * g / (w * w);
                (g, [c * x[0], c * x[1]], c)
            }
        }
    };
    let value = move |x: &[f64], out: &mut [f64]| {
        let (g, _, _) = weight(x);
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = -s * g * x[1];
        out[1] = s * g * x[0];
    };
    let jacobian: JacobianFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let (g, d12, c) = weight(x);
        out.iter_mut().for_each(|v| *v = 0.0);
        let jx = [-x[1], x[0]];
        for (i, jxi) in jx.iter().enumerate() {
            for j in 0..n {
                let dg = if j < 2 { d12[j] } else { c * x[j] };
                out[i * n + j] = s * jxi * dg;
            }
        }
        out[1] -= s * g; // J_12 = -1
        out[n] += s * g; // J_21 = 1
    });
    let singular = match kind {
        RotationalKind::Spherical => Singularity::Origin,
        RotationalKind::Axial => Singularity::Axis,
        _ => Singularity::None,
    };
    pp.with_magnetic(value, Some(jacobian), singular)
}

fn family(
    pp: PotentialPair,
    alpha: f64,
    omega: [f64; 3],
    profile: AngularProfile,
    quad: BiotSavartQuadrature,
) -> Result<PotentialPair> {
    if !(alpha > 1.0 && alpha < 3.0) {
        return param(format!(
            "ex14_family needs 1 < alpha < 3 for the Biot-Savart integral to converge (got {alpha})"
        ));
    }
    let on = norm(&omega);
    if on == 0.0 {
        return param("ex14_family direction omega must be non-zero");
    }
    let omega = omega.map(|v| v / on);
    let field = family_field(alpha, omega, profile);
    Ok(pp.with_magnetic(
        move |x, out| {
            let a = biot_savart(&field, [x[0], x[1], x[2]], &quad)
                .map(|r| r.value)
                .unwrap_or([f64::NAN; 3]);
            out.copy_from_slice(&a);
        },
        None,
        Singularity::Origin,
    ))
}

/// `B(y) = h(ŷ·ω) |y|^{-α} ŷ`.
pub(crate) fn family_field(alpha: f64, omega: [f64; 3], profile: AngularProfile) -> impl Fn(&[f64; 3]) -> [f64; 3] + Send + Sync {
    move |y: &[f64; 3]| {
        let r = norm(y);
        if r == 0.0 {
            return [0.0; 3];
        }
        let u = y.map(|v| v / r);
        let t = u[0] * omega[0] + u[1] * omega[1] + u[2] * omega[2];
        let m = profile.eval(t) * r.powf(-alpha);
        u.map(|v| m * v)
    }
}

/// Named example potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleKind {
    Ex13,
    Ex14Singular,
    Ex14Family {
        profile: AngularProfile,
        omega: [f64; 3],
        alpha: f64,
    },
}

/// Three-dimensional example potentials with `A` in closed form or by quadrature.
pub fn example_field(kind: ExampleKind) -> Result<PotentialPair> {
    let spec = PotentialSpec {
        magnetic: match kind {
            ExampleKind::Ex13 => MagneticSpec::Ex13 { strength: 1.0 },
            ExampleKind::Ex14Singular => MagneticSpec::Ex14 { strength: 1.0 },
            ExampleKind::Ex14Family { profile, omega, alpha } => MagneticSpec::Ex14Family { alpha, omega, profile },
        },
        electric: ElectricSpec::None,
    };
    spec.build(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{magnetic_matrix, trapping_component, Differentiation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        loop {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
            if norm(&x) > 0.5 {
                return x;
            }
        }
    }

    #[test]
    fn ex13_values() {
        let pp = example_field(ExampleKind::Ex13).unwrap();
        let a = pp.vector_potential_vec(&[1.0, 1.0, 1.0]);
        assert!((a[0] + 1.0 / 3.0).abs() < 1e-15 && (a[1] - 1.0 / 3.0).abs() < 1e-15 && a[2] == 0.0);
    }

    #[test]
    fn ex14_values() {
        let pp = example_field(ExampleKind::Ex14Singular).unwrap();
        let a = pp.vector_potential_vec(&[1.0, 0.0, 5.0]);
        assert_eq!(a, vec![0.0, 1.0, 0.0]);
        let b = magnetic_matrix(&pp, &[1.0, 2.0, -3.0]).unwrap();
        assert!(b.frobenius() < 1e-15);
        assert!(magnetic_matrix(&pp, &[0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn ex13_field_matches_closed_form() {
        // curl A = 2 z / r^4 (x, y, z)
        let pp = example_field(ExampleKind::Ex13).unwrap();
        let x = [0.4, -1.1, 0.7];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let b = magnetic_matrix(&pp, &x).unwrap().axial_vector().unwrap();
        for k in 0..3 {
            let want = 2.0 * x[2] / (r2 * r2) * x[k];
            assert!((b[k] - want).abs() < 1e-14);
        }
        let b = magnetic_matrix(&pp, &[1.0, 0.0, 0.0]).unwrap();
        assert!(b.frobenius() < 1e-15);
    }

    #[test]
    fn ex13_divergence_free() {
        let pp = example_field(ExampleKind::Ex13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = random_point(&mut rng, 3);
            let mut j = [0.0; 9];
            pp.jacobian_fd(&x, &mut j).unwrap();
            assert!((j[0] + j[4] + j[8]).abs() < 1e-8);
        }
    }

    #[test]
    fn analytic_jacobians_agree_with_differences() {
        let specs = [
            MagneticSpec::Ex13 { strength: 1.3 },
            MagneticSpec::Ex14 { strength: 0.6 },
            MagneticSpec::Uniform { field: 2.0 },
            MagneticSpec::GaussianVortex {
                strength: 0.8,
                width: 1.5,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [3, 4] {
            for m in &specs {
                let pp = PotentialSpec {
                    magnetic: m.clone(),
                    electric: ElectricSpec::None,
                }
                .build(dim)
                .unwrap();
                for _ in 0..30 {
                    let x = random_point(&mut rng, dim);
                    let mut ja = vec![0.0; dim * dim];
                    let mut jf = vec![0.0; dim * dim];
                    pp.jacobian(&x, &mut ja).unwrap();
                    pp.jacobian_fd(&x, &mut jf).unwrap();
                    for (a, f) in ja.iter().zip(&jf) {
                        assert!((a - f).abs() < 1e-7, "{m:?} dim {dim}: {a} vs {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn ex13_is_non_trapping_in_every_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [3, 4, 5] {
            let pp = PotentialSpec {
                magnetic: MagneticSpec::Ex13 { strength: 1.0 },
                electric: ElectricSpec::None,
            }
            .build(dim)
            .unwrap();
            for _ in 0..100 {
                let x = random_point(&mut rng, dim);
                let bt = trapping_component(&pp, &x).unwrap();
                assert!(bt.norm() < 1e-12);
                let bt = crate::fields::trapping_component_with(&pp, &x, Differentiation::FiniteDifference).unwrap();
                assert!(bt.norm() < 1e-6);
            }
        }
    }

    #[test]
    fn electric_derivatives_agree_with_differences() {
        let specs = [
            ElectricSpec::Coulomb { strength: -1.0 },
            ElectricSpec::InverseSquare { strength: 0.5 },
            ElectricSpec::Gaussian {
                amplitude: -2.0,
                width: 0.8,
            },
            ElectricSpec::Screened { strength: 1.0 },
        ];
        for e in specs {
            let pp = PotentialSpec {
                magnetic: MagneticSpec::None,
                electric: e.clone(),
            }
            .build(3)
            .unwrap();
            let x = [0.3, 0.9, -0.4];
            let r = norm(&x);
            let h = 1e-6;
            let vp = pp.scalar_potential(&x.map(|v| v * (1.0 + h / r)));
            let vm = pp.scalar_potential(&x.map(|v| v * (1.0 - h / r)));
            let fd = (vp - vm) / (2.0 * h);
            assert!((pp.radial_derivative(&x).unwrap() - fd).abs() < 1e-6, "{e:?}");
        }
    }

    #[test]
    fn family_rejects_divergent_alpha() {
        for alpha in [0.5, 1.0, 3.0, 4.0] {
            let r = example_field(ExampleKind::Ex14Family {
                profile: AngularProfile::default(),
                omega: [0.0, 0.0, 1.0],
                alpha,
            });
            assert!(r.is_err());
        }
    }

    #[test]
    fn spec_parses_from_json() {
        let spec: PotentialSpec =
            serde_json::from_str(r#"{"magnetic":{"kind":"ex13"},"electric":{"kind":"coulomb","strength":-1}}"#).unwrap();
        assert_eq!(spec.magnetic, MagneticSpec::Ex13 { strength: 1.0 });
        assert_eq!(spec.electric, ElectricSpec::Coulomb { strength: -1.0 });
    }
}
