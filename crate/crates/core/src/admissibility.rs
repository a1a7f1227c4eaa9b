//! Size constants `C₁, C₂, C₃` of a potential pair and the admissibility conditions on them.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::fields::{norm, FieldMatrix, radial_derivative_parts, PotentialPair};
use crate::grid::bracket;
use crate::norms::{mixed_radial_norm, weighted_sup_norm, RadialQuadrature};
use crate::util::json_float;

/// `|B_τ|` below this fraction of `|DA|` is rounding noise.
const TRAPPING_NOISE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(with = "json_float")]
    pub c1: f64,
    #[serde(with = "json_float")]
    pub c2: f64,
    #[serde(with = "json_float")]
    pub c3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub n: usize,
    #[serde(rename = "C1", with = "json_float")]
    pub c1: f64,
    #[serde(rename = "C2", with = "json_float")]
    pub c2: f64,
    #[serde(rename = "C3", with = "json_float")]
    pub c3: f64,
    #[serde(with = "json_float")]
    pub value: f64,
    pub threshold: f64,
    #[serde(with = "json_float")]
    pub margin: f64,
    /// Minimiser of the 3D condition; `+∞` in higher dimensions, NaN when the constants are infinite.
    #[serde(rename = "optimal_M", with = "json_float")]
    pub optimal_m: f64,
    pub admissible: bool,
}

/// Fallback `δ` for inadmissible, diagnostic runs.
pub const DIAGNOSTIC_DELTA: f64 = 0.01;

impl AdmissibilityReport {
    /// `δ = min(margin/4, 0.1)`, or [`DIAGNOSTIC_DELTA`] when not admissible.
    pub fn positivity_delta(&self) -> f64 {
        if self.admissible {
            (self.margin / 4.0).min(0.1)
        } else {
            log::warn!("potential pair not admissible, using delta = {DIAGNOSTIC_DELTA}");
            DIAGNOSTIC_DELTA
        }
    }

    /// Multiplier parameter to use: the optimum when finite and positive, else `fallback`.
    pub fn multiplier_m(&self, fallback: f64) -> f64 {
        if self.optimal_m.is_finite() && self.optimal_m > 0.0 {
            self.optimal_m
        } else {
            fallback
        }
    }

    fn with_c3(mut self, c3: f64) -> Self {
        self.c3 = c3;
        self.admissible &= c3.is_finite();
        self
    }
}

/// `C₁, C₂, C₃` of `pp` in its own dimension.
pub fn compute_constants(pp: &PotentialPair, quad: &RadialQuadrature) -> Result<Constants> {
    let n = pp.dim();
    if n < 3 {
        return param(format!("dimension {n} < 3"));
    }
    let trapping = |x: &[f64]| -> f64 {
        let mut jac = vec![0.0; n * n];
        if pp.jacobian(x, &mut jac).is_err() {
            return f64::NAN;
        }
        let b = FieldMatrix::from_jacobian(n, &jac);
        let r = norm(x);
        let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
        let bt = norm(&b.left_apply(&unit));
        if bt <= TRAPPING_NOISE * norm(&jac) {
            0.0
        } else {
            bt
        }
    };
    let parts = |x: &[f64]| radial_derivative_parts(pp, x).ok();
    let dr_plus = |x: &[f64]| parts(x).map_or(f64::NAN, |p| p.dr_plus);
    let v_plus = |x: &[f64]| parts(x).map_or(f64::NAN, |p| p.v_plus / bracket(norm(x)));

    let c1 = if pp.has_magnetic() {
        if n == 3 {
            mixed_radial_norm(&trapping, n, 2.0, 1.5, quad)
        } else {
            weighted_sup_norm(&trapping, n, 2.0, quad)
        }
    } else {
        0.0
    };
    let (c2, c3) = if pp.has_electric() {
        if n == 3 {
            (
                mixed_radial_norm(&dr_plus, n, 1.0, 2.0, quad),
                mixed_radial_norm(&v_plus, n, 1.0, 2.0, quad),
            )
        } else {
            (weighted_sup_norm(&dr_plus, n, 3.0, quad), weighted_sup_norm(&v_plus, n, 3.0, quad))
        }
    } else {
        (0.0, 0.0)
    };
    Ok(Constants { c1, c2, c3 })
}

/// `g(M) = (M + 1/2)^2 / M · C₁^2 + 2 (M + 1/2) C₂`.
pub fn condition_3d(m: f64, c1: f64, c2: f64) -> f64 {
    (m + 0.5).powi(2) / m * c1 * c1 + 2.0 * (m + 0.5) * c2
}

/// Closed-form minimiser and minimum of `g` over `M > 0` (the `M → 0⁺` limit when `C₁ = 0`).
pub fn minimize_condition_3d(c1: f64, c2: f64) -> (f64, f64) {
    if c1 == 0.0 {
        return (0.0, c2);
    }
    let s = (c1 * c1 + 2.0 * c2).sqrt();
    (c1 / (2.0 * s), c1 * s + c1 * c1 + c2)
}

fn check_nonnegative(c1: f64, c2: f64) -> Result<()> {
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return param(format!("constants must be nonnegative, got C1 = {c1}, C2 = {c2}"));
    }
    Ok(())
}

pub fn check_condition_3d(c1: f64, c2: f64) -> Result<AdmissibilityReport> {
    check_nonnegative(c1, c2)?;
    let (optimal_m, value) = if c1.is_finite() && c2.is_finite() {
        minimize_condition_3d(c1, c2)
    } else {
        (f64::NAN, f64::INFINITY)
    };
    let margin = 1.0 - value;
    Ok(AdmissibilityReport {
        n: 3,
        c1,
        c2,
        c3: 0.0,
        value,
        threshold: 1.0,
        margin,
        optimal_m,
        admissible: margin > 0.0,
    })
}

pub fn check_condition_nd(c1: f64, c2: f64, n: usize) -> Result<AdmissibilityReport> {
    check_nonnegative(c1, c2)?;
    if n < 4 {
        return param(format!("higher-dimensional condition needs n >= 4, got {n}"));
    }
    let value = c1 * c1 + 2.0 * c2;
    let threshold = ((n - 1) * (n - 3)) as f64;
    let margin = threshold - value;
    Ok(AdmissibilityReport {
        n,
        c1,
        c2,
        c3: 0.0,
        value,
        threshold,
        margin,
        optimal_m: if value.is_finite() { f64::INFINITY } else { f64::NAN },
        admissible: margin > 0.0,
    })
}

pub fn check_condition(constants: &Constants, n: usize) -> Result<AdmissibilityReport> {
    let rep = if n == 3 {
        check_condition_3d(constants.c1, constants.c2)?
    } else {
        check_condition_nd(constants.c1, constants.c2, n)?
    };
    Ok(rep.with_c3(constants.c3))
}

/// Constants and verdict for `pp`.
pub fn assess(pp: &PotentialPair, quad: &RadialQuadrature) -> Result<AdmissibilityReport> {
    let c = compute_constants(pp, quad)?;
    check_condition(&c, pp.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ElectricSpec, MagneticSpec, PotentialSpec};
    use proptest::prelude::*;

    /// Log grid over `[1e-6, 1e6]` followed by golden-section refinement of the best bracket.
    fn oracle(c1: f64, c2: f64) -> f64 {
        let g = |t: f64| condition_3d(t.exp(), c1, c2);
        let (a, b, k) = (1e-6f64.ln(), 1e6f64.ln(), 20_000);
        let dt = (b - a) / k as f64;
        let best = (0..=k).min_by(|&i, &j| g(a + i as f64 * dt).total_cmp(&g(a + j as f64 * dt))).unwrap();
        let (mut lo, mut hi) = (a + (best.max(1) - 1) as f64 * dt, a + (best + 1).min(k) as f64 * dt);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (x1, x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            if g(x1) < g(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        g(0.5 * (lo + hi)).min(g(a)).min(g(b))
    }

    #[test]
    fn remark_examples() {
        let r = check_condition_3d(0.0, 0.5).unwrap();
        assert!(r.admissible && r.value == 0.5 && r.optimal_m == 0.0);
        let r = check_condition_3d(0.8, 0.0).unwrap();
        assert!(!r.admissible && (r.value - 1.28).abs() < 1e-14 && (r.optimal_m - 0.5).abs() < 1e-14);
        let r = check_condition_3d(0.5, 0.1).unwrap();
        assert!(r.admissible && (r.value - 0.68541).abs() < 1e-5);
        assert!((r.value - oracle(0.5, 0.1)).abs() < 1e-9);
        let r = check_condition_3d(f64::INFINITY, 0.0).unwrap();
        assert!(!r.admissible && r.value.is_infinite());
        assert!(check_condition_3d(-1.0, 0.0).is_err());
    }

    #[test]
    fn thresholds() {
        // C₁ = 0: C₂ < 1; C₂ = 0: C₁² < 1/2
        for (c2, ok) in [(1.0 - 1e-9, true), (1.0, false), (1.0 + 1e-9, false)] {
            assert_eq!(check_condition_3d(0.0, c2).unwrap().admissible, ok);
        }
        let edge = 0.5f64.sqrt();
        for (c1, ok) in [(edge - 1e-9, true), (edge + 1e-9, false)] {
            assert_eq!(check_condition_3d(c1, 0.0).unwrap().admissible, ok);
        }
    }

    #[test]
    fn higher_dimensions() {
        let r = check_condition_nd(1.0, 0.5, 4).unwrap();
        assert!(r.admissible && r.value == 2.0 && r.threshold == 3.0 && r.optimal_m.is_infinite());
        for n in 4..9 {
            let r = check_condition_nd(0.0, 0.0, n).unwrap();
            assert!(r.admissible && r.margin == ((n - 1) * (n - 3)) as f64);
        }
        assert!(!check_condition_nd(2.0, 0.0, 4).unwrap().admissible);
        assert!(check_condition_nd(0.0, 0.0, 3).is_err());
    }

    #[test]
    fn report_json_fields() {
        let r = check_condition_nd(1.0, 0.5, 5).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        for key in ["n", "C1", "C2", "C3", "value", "threshold", "margin", "optimal_M", "admissible"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["optimal_M"], "inf");
    }

    #[test]
    fn constants_of_builtins() {
        let q = RadialQuadrature::default();
        let ex13 = PotentialSpec {
            magnetic: MagneticSpec::Ex13 { strength: 1.0 },
            electric: ElectricSpec::None,
        };
        let c = compute_constants(&ex13.build(3).unwrap(), &q).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (0.0, 0.0, 0.0));

        let coulomb = PotentialSpec {
            magnetic: MagneticSpec::None,
            electric: ElectricSpec::Coulomb { strength: -1.0 },
        };
        let pp = coulomb.build(3).unwrap();
        let r = assess(&pp, &q).unwrap();
        assert!(r.c2.is_infinite() && !r.admissible);

        // V = -c/|x|^2 in n = 4: (∂_r V)_+ = 2c/|x|^3
        let c = 0.3;
        let pp = PotentialSpec {
            magnetic: MagneticSpec::None,
            electric: ElectricSpec::InverseSquare { strength: -c },
        }
        .build(4)
        .unwrap();
        let k = compute_constants(&pp, &q).unwrap();
        assert!((k.c2 - 2.0 * c).abs() < 1e-9, "{}", k.c2);
        assert_eq!(k.c3, 0.0);

        // uniform field: |B_τ| ~ 1 so |x|^{3/2} B_τ is not square integrable
        let pp = PotentialSpec {
            magnetic: MagneticSpec::Uniform { field: 1.0 },
            electric: ElectricSpec::None,
        }
        .build(3)
        .unwrap();
        assert!(compute_constants(&pp, &q).unwrap().c1.is_infinite());
    }

    #[test]
    fn screened_repulsion_is_admissible() {
        let pp = PotentialSpec {
            magnetic: MagneticSpec::Ex13 { strength: 1.0 },
            electric: ElectricSpec::Screened { strength: 1.0 },
        }
        .build(3)
        .unwrap();
        let r = assess(&pp, &RadialQuadrature::default()).unwrap();
        assert!(r.admissible && r.c2 == 0.0 && r.c3.is_finite() && r.c3 > 0.0, "{r:?}");
        assert_eq!(r.positivity_delta(), 0.1);
    }

    proptest! {
        #[test]
        fn closed_form_matches_oracle(c1 in 0.0f64..2.0, c2 in 0.0f64..2.0) {
            let (_, v) = minimize_condition_3d(c1, c2);
            let o = oracle(c1, c2);
            prop_assert!((v - o).abs() <= 1e-9 * o.max(1.0), "{} vs {}", v, o);
        }

        #[test]
        fn minimiser_is_stationary(c1 in 1e-3f64..2.0, c2 in 0.0f64..2.0) {
            let (m, v) = minimize_condition_3d(c1, c2);
            let h = 1e-5 * m;
            let d = (condition_3d(m + h, c1, c2) - condition_3d(m - h, c1, c2)) / (2.0 * h);
            prop_assert!(d.abs() <= 1e-9 * v.max(1.0) / m.min(1.0));
            prop_assert!(m > 0.0);
        }

        #[test]
        fn monotone_in_constants(c1 in 0.0f64..1.5, c2 in 0.0f64..1.5, d1 in 0.0f64..1.0, d2 in 0.0f64..1.0, n in 3usize..8) {
            let check = |a: f64, b: f64| if n == 3 { check_condition_3d(a, b) } else { check_condition_nd(a, b, n) }.unwrap();
            let base = check(c1, c2);
            let more = check(c1 + d1, c2 + d2);
            prop_assert!(more.value >= base.value);
            prop_assert!(!(more.admissible && !base.admissible));
            prop_assert_eq!(base.admissible, base.margin > 0.0);
        }
    }
}
