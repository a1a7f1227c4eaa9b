//! Weighted functionals: Morrey-Campanato norm, dyadic dual norm `N(f)`,
//! mixed radial norms `L^p_r L^∞(S_r)`, sphere suprema and the two sides of the
//! a priori estimates.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fields::{radial_derivative_parts, PotentialPair};
use crate::grid::{bracket, RadialGrid, ScalarField};
use crate::quadrature::sphere_directions;
use crate::resolvent::{covariant_gradient, radial_tangential_split};
use crate::util::json_float::JsonFloat;

/// `|||·|||` of a nodal density: `(sup_R (1/R) ∫_{|x|<=R} d)^{1/2}` and the maximiser `R*`.
///
/// The discrete mass is a step function of `R`, so the supremum is attained at
/// a node radius and this scan is exact.
pub fn morrey_campanato_density(grid: &RadialGrid, density: &[f64]) -> (f64, f64) {
    let order = grid.by_radius();
    let vol = grid.cell_volume();
    let (mut mass, mut best, mut arg) = (0.0, 0.0, grid.min_radius());
    for (pos, &i) in order.iter().enumerate() {
        let i = i as usize;
        mass += density[i] * vol;
        let r = grid.radius(i);
        let last_of_tie = order.get(pos + 1).is_none_or(|&j| grid.radius(j as usize) > r);
        if last_of_tie && mass / r > best {
            best = mass / r;
            arg = r;
        }
    }
    (best.sqrt(), arg)
}

pub fn morrey_campanato(u: &ScalarField) -> (f64, f64) {
    morrey_campanato_density(u.grid(), &u.density())
}

/// Dyadic shell `C(j) = {2^j <= |x| < 2^{j+1}}` containing radius `r`.
pub fn shell_of(r: f64) -> i32 {
    r.log2().floor() as i32
}

/// Shell range covering every node of the grid.
pub fn default_dyadic_range(grid: &RadialGrid) -> (i32, i32) {
    (shell_of(grid.min_radius()), shell_of(grid.max_radius()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub value: f64,
    /// Magnitude of the `j = j_max` term.
    pub tail: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// `∫|f|^2` over nodes outside the shells `j_min..=j_max`.
    pub excluded_mass: f64,
    pub tail_warning: bool,
}

/// Relative size of the last term above which the truncation is flagged.
pub const DYADIC_TAIL_TOL: f64 = 1e-6;

/// `N(f) = Σ_j (2^{j+1} ∫_{C(j)} d)^{1/2}` over `j_min..=j_max` for a nodal density `d = |f|^2`.
pub fn dyadic_dual_density(grid: &RadialGrid, density: &[f64], j_min: Option<i32>, j_max: Option<i32>) -> DyadicReport {
    let (lo, hi) = default_dyadic_range(grid);
    let (j_min, j_max) = (j_min.unwrap_or(lo), j_max.unwrap_or(hi));
    let count = (j_max - j_min + 1).max(0) as usize;
    let mut shells = vec![0.0; count];
    let mut excluded = 0.0;
    let vol = grid.cell_volume();
    for (i, &d) in density.iter().enumerate() {
        let j = shell_of(grid.radius(i));
        if j < j_min || j > j_max {
            excluded += d * vol;
        } else {
            shells[(j - j_min) as usize] += d * vol;
        }
    }
    let terms: Vec<f64> = shells
        .iter()
        .enumerate()
        .map(|(k, m)| (2f64.powi(j_min + k as i32 + 1) * m).sqrt())
        .collect();
    let value: f64 = terms.iter().sum();
    let tail = terms.last().copied().unwrap_or(0.0);
    let tail_warning = tail > DYADIC_TAIL_TOL * value || excluded > 0.0;
    if tail_warning {
        log::warn!(
            "dyadic sum truncated at j = {j_max}: last term {tail:.3e} of {value:.3e}, excluded mass {excluded:.3e}"
        );
    }
    DyadicReport {
        value,
        tail,
        j_min,
        j_max,
        excluded_mass: excluded,
        tail_warning,
    }
}

pub fn dyadic_dual(f: &ScalarField, j_min: Option<i32>, j_max: Option<i32>) -> DyadicReport {
    dyadic_dual_density(f.grid(), &f.density(), j_min, j_max)
}

/// `(|∫ f ḡ|, |||g||| N(f))`.
pub fn duality_gap(f: &ScalarField, g: &ScalarField) -> Result<(f64, f64)> {
    let lhs = f.inner(g)?.norm();
    let (mc, _) = morrey_campanato(g);
    let n = dyadic_dual(f, None, None).value;
    Ok((lhs, mc * n))
}

/// Radial ladder and direction sample used by the pointwise mixed norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialQuadrature {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
    pub directions: usize,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self {
            r_min: 1e-4,
            r_max: 1e4,
            per_decade: 200,
            directions: 128,
        }
    }
}

/// End slope below which a power law is treated as non-decaying.
const DECAY_SLOPE: f64 = 0.05;

impl RadialQuadrature {
    fn ladder(&self) -> (Vec<f64>, f64) {
        let dt = std::f64::consts::LN_10 / self.per_decade as f64;
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        let count = ((b - a) / dt).ceil() as usize + 1;
        ((0..count).map(|i| (a + i as f64 * dt).exp()).collect(), dt)
    }

    /// `sup_{θ} r^e w(rθ)` on every ladder radius; undefined samples (NaN) are skipped.
    fn profile<W>(&self, w: &W, dim: usize, exponent: f64) -> (Vec<f64>, Vec<f64>, f64)
    where
        W: Fn(&[f64]) -> f64 + Sync,
    {
        let dirs = sphere_directions(dim, self.directions);
        let (radii, dt) = self.ladder();
        let prof = radii
            .par_iter()
            .map(|&r| {
                let mut x = vec![0.0; dim];
                let mut best = 0.0f64;
                for d in &dirs {
                    x.iter_mut().zip(d).for_each(|(x, d)| *x = r * d);
                    let v = w(&x);
                    if v.is_nan() {
                        continue;
                    }
                    best = best.max(v.abs());
                }
                r.powf(exponent) * best
            })
            .collect();
        (radii, prof, dt)
    }

    fn window(&self) -> usize {
        (self.per_decade / 4).max(1)
    }
}

/// `(∫_0^∞ sup_{|x|=r} (|x|^e w)^p dr)^{1/p}`, or `+∞` when the radial profile fails to decay at either end.
pub fn mixed_radial_norm<W>(w: &W, dim: usize, p: f64, exponent: f64, quad: &RadialQuadrature) -> f64
where
    W: Fn(&[f64]) -> f64 + Sync,
{
    let (radii, prof, dt) = quad.profile(w, dim, exponent);
    if prof.iter().any(|v| v.is_infinite()) {
        return f64::INFINITY;
    }
    // integrand in t = ln r
    let g: Vec<f64> = prof.iter().zip(&radii).map(|(f, r)| f.powf(p) * r).collect();
    let len = g.len();
    let mut total: f64 = g.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum();
    let k = quad.window().min(len - 1);
    let scale = g.iter().copied().fold(0.0, f64::max);
    let negligible = |v: f64| v <= 1e-14 * scale || v == 0.0;
    let slope = |a: f64, b: f64| (b.ln() - a.ln()) / (k as f64 * dt);
    // small-r end: need growth in t
    let (g0, gk) = (g[0], g[k]);
    if !negligible(g0) {
        let s = if gk > 0.0 { slope(g0, gk) } else { 0.0 };
        if s <= DECAY_SLOPE {
            return f64::INFINITY;
        }
        total += g0 / s;
    }
    let (ge, gek) = (g[len - 1], g[len - 1 - k]);
    if !negligible(ge) {
        let s = if gek > 0.0 { slope(gek, ge) } else { 0.0 };
        if s >= -DECAY_SLOPE {
            return f64::INFINITY;
        }
        total += ge / -s;
    }
    total.powf(1.0 / p)
}

/// `sup_x |x|^e w(x)`, or `+∞` when the profile keeps growing at either end of the ladder.
pub fn weighted_sup_norm<W>(w: &W, dim: usize, exponent: f64, quad: &RadialQuadrature) -> f64
where
    W: Fn(&[f64]) -> f64 + Sync,
{
    let (_, prof, dt) = quad.profile(w, dim, exponent);
    let len = prof.len();
    let best = prof.iter().copied().fold(0.0, f64::max);
    if !best.is_finite() {
        return f64::INFINITY;
    }
    if best == 0.0 {
        return 0.0;
    }
    let k = quad.window().min(len - 1);
    let slope = |a: f64, b: f64| (b.ln() - a.ln()) / (k as f64 * dt);
    let grows_up = prof[len - 1] >= 0.5 * best && prof[len - 1 - k] > 0.0 && slope(prof[len - 1 - k], prof[len - 1]) > DECAY_SLOPE;
    let grows_down = prof[0] >= 0.5 * best && prof[k] > 0.0 && slope(prof[0], prof[k]) < -DECAY_SLOPE;
    if grows_up || grows_down {
        f64::INFINITY
    } else {
        best
    }
}

/// `sup_R R^{-2} ∫_{|x|=R} d dσ` over the sphere ladder, with the maximiser.
pub fn sphere_sup_density(grid: &RadialGrid, density: &[f64]) -> (f64, f64) {
    let masses = grid.shell_masses(density);
    let h = grid.spacing();
    let mut best = (0.0, h);
    for big_r in grid.sphere_ladder() {
        let k = (big_r / h).round() as usize;
        let v = masses[k] / (h * big_r * big_r);
        if v > best.0 {
            best = (v, big_r);
        }
    }
    best
}

pub fn sphere_sup(u: &ScalarField) -> (f64, f64) {
    sphere_sup_density(u.grid(), &u.density())
}

/// `∫|u|²/|x|² / ∫|∇_A u|²`.
pub fn hardy_ratio(u: &ScalarField, pp: &PotentialPair) -> Result<f64> {
    let grid = u.grid();
    let dens = u.density();
    let num: f64 = grid.integrate(&dens.iter().enumerate().map(|(i, d)| d / grid.radius(i).powi(2)).collect::<Vec<_>>());
    let grad = covariant_gradient(u, pp)?;
    let den = grid.integrate(&grad.density());
    if den == 0.0 {
        return Err(Error::UndefinedRatio("∫|∇_A u|² vanishes".into()));
    }
    Ok(num / den)
}

/// Named non-negative functionals with optional maximising radii.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct NormReport {
    pub values: BTreeMap<String, f64>,
    pub maximizers: BTreeMap<String, f64>,
}

impl NormReport {
    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }
    pub fn insert_sup(&mut self, name: &str, value: f64, r_star: f64) {
        self.values.insert(name.to_string(), value);
        self.maximizers.insert(name.to_string(), r_star);
    }
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
    pub fn r_star(&self, name: &str) -> Option<f64> {
        self.maximizers.get(name).copied()
    }
}

/// Flat object `{name: value, name_Rstar: radius, ...}`.
impl Serialize for NormReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.values.len() + self.maximizers.len()))?;
        for (k, v) in &self.values {
            map.serialize_entry(k, &JsonFloat(*v))?;
            if let Some(r) = self.maximizers.get(k) {
                map.serialize_entry(&format!("{k}_Rstar"), &JsonFloat(*r))?;
            }
        }
        map.end()
    }
}

/// Left-hand side terms of the a priori estimates. Keys:
/// `morrey_grad`, `origin` (n = 3), `radial_derivative_neg`, `neg_potential`,
/// `lambda_weighted`, `tangential`, `sphere_sup`, `inverse_cube` (n >= 4),
/// plus `delta` and the weighted `total`.
pub fn theorem_lhs(u: &ScalarField, pp: &PotentialPair, lambda: f64, m: f64, delta: f64) -> Result<NormReport> {
    let grid = u.grid().clone();
    let n = grid.dim();
    if pp.dim() != n {
        return Err(Error::Shape(format!("potential of dimension {} for a field of dimension {n}", pp.dim())));
    }
    let dens = u.density();
    let grad = covariant_gradient(u, pp)?;
    let (_, tang) = radial_tangential_split(&grad);
    let (mg, mg_r) = morrey_campanato_density(&grid, &grad.density());
    let (ss, ss_r) = sphere_sup_density(&grid, &dens);

    let per_node: Vec<[f64; 5]> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |x, idx| -> Result<[f64; 5]> {
                grid.coords(idx, x);
                let r = grid.radius(idx);
                let d = dens[idx];
                let (drv_neg, v_neg) = if pp.has_electric() && d > 0.0 {
                    let parts = radial_derivative_parts(pp, x)?;
                    (parts.dr_minus, parts.v_minus)
                } else {
                    (0.0, 0.0)
                };
                let b = bracket(r);
                Ok([drv_neg * d, v_neg * d / b, lambda * d / b, tang[idx] / r, d / r.powi(3)])
            },
        )
        .collect::<Result<_>>()?;
    let vol = grid.cell_volume();
    let mut sums = [0.0; 5];
    for t in &per_node {
        for k in 0..5 {
            sums[k] += t[k] * vol;
        }
    }
    let [drv_neg, v_neg, lam, tan, cube] = sums;

    let mut rep = NormReport::default();
    rep.insert_sup("morrey_grad", mg * mg, mg_r);
    rep.insert_sup("sphere_sup", ss, ss_r);
    rep.insert("neg_potential", v_neg);
    rep.insert("lambda_weighted", lam);
    rep.insert("tangential", tan);
    rep.insert("delta", delta);
    let total = if n == 3 {
        let origin = grid.origin_value(&dens);
        rep.insert("origin", origin);
        rep.insert("radial_derivative_neg", 0.5 * m * drv_neg);
        mg * mg + origin + 0.5 * m * drv_neg + delta * (v_neg + lam + tan + ss)
    } else {
        rep.insert("radial_derivative_neg", drv_neg);
        rep.insert("inverse_cube", cube);
        mg * mg + ss + drv_neg + delta * (v_neg + lam + tan + cube)
    };
    rep.insert("total", total);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhsReport {
    pub value: f64,
    pub dual_norm: f64,
    /// Set when `λ = 0`: only `N(f)^2` is used.
    pub lambda_zero_convention: bool,
}

/// `N(f)^2 + (|ε| + λ) N(f/λ^{1/2})^2`, reduced to `N(f)^2` when `λ = 0`.
pub fn theorem_rhs(f: &ScalarField, lambda: f64, epsilon: f64) -> RhsReport {
    let nf = dyadic_dual(f, None, None).value;
    let base = nf * nf;
    if lambda > 0.0 {
        RhsReport {
            value: base * (1.0 + (epsilon.abs() + lambda) / lambda),
            dual_norm: nf,
            lambda_zero_convention: false,
        }
    } else {
        RhsReport {
            value: base,
            dual_norm: nf,
            lambda_zero_convention: true,
        }
    }
}

/// Indicator-like field helper: `value` where `pred(x)`, zero elsewhere.
pub fn indicator(grid: std::sync::Arc<RadialGrid>, pred: impl Fn(&[f64]) -> bool + Sync) -> ScalarField {
    ScalarField::from_fn(grid, move |x| {
        if pred(x) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid3(l: f64, h: f64) -> Arc<RadialGrid> {
        RadialGrid::shared(GridSpec::new(3, l, h)).unwrap()
    }

    fn radius(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn zero_fields() {
        let g = grid3(2.0, 0.25);
        let u = ScalarField::zeros(g.clone());
        assert_eq!(morrey_campanato(&u).0, 0.0);
        assert_eq!(dyadic_dual(&u, None, None).value, 0.0);
        assert_eq!(sphere_sup(&u).0, 0.0);
        assert_eq!(duality_gap(&u, &u).unwrap(), (0.0, 0.0));
        assert!(matches!(hardy_ratio(&u, &PotentialPair::free(3)), Err(Error::UndefinedRatio(_))));
        let rep = theorem_lhs(&u, &PotentialPair::free(3), 1.0, 0.5, 0.1).unwrap();
        assert!(rep.values.values().all(|&v| v == 0.0 || v == 0.1));
        assert_eq!(theorem_rhs(&u, 1.0, 1.0).value, 0.0);
    }

    #[test]
    fn unit_ball_morrey_campanato() {
        let g = grid3(3.0, 0.05);
        let u = indicator(g, |x| radius(x) <= 1.0);
        let (v, r) = morrey_campanato(&u);
        assert!((v * v - 4.0 * PI / 3.0).abs() < 0.02 * 4.0 * PI / 3.0, "{}", v * v);
        assert!((r - 1.0).abs() < 0.05);
    }

    #[test]
    fn inverse_radius_profile_is_flat() {
        let g = grid3(4.0, 0.1);
        let u = ScalarField::from_fn(g.clone(), |x| Complex64::new(1.0 / radius(x), 0.0));
        // (1/R)∫_{<=R} r^{-2} = 4π for every R inside the inscribed ball
        let dens = u.density();
        let vol = g.cell_volume();
        for big_r in [1.0, 2.0, 3.5] {
            let m: f64 = (0..g.len()).filter(|&i| g.radius(i) <= big_r).map(|i| dens[i] * vol).sum();
            assert!((m / big_r - 4.0 * PI).abs() < 0.05 * 4.0 * PI);
        }
    }

    #[test]
    fn shell_dual_norm() {
        let g = grid3(3.0, 0.05);
        let f = indicator(g, |x| {
            let r = radius(x);
            (1.0..2.0).contains(&r)
        });
        let n = dyadic_dual(&f, None, None).value;
        let want = (56.0 * PI / 3.0).sqrt();
        assert!((n - want).abs() < 0.01 * want);
        // single shell: N^2 = 2^{j+1} ∫_{C(j)} |f|^2 exactly
        let mass = f.l2_norm().powi(2);
        assert!((n * n - 2.0 * mass).abs() < 1e-10 * mass);
        let rhs = theorem_rhs(&f, 1.0, 1.0);
        assert!((rhs.value - 3.0 * n * n).abs() < 1e-10 * rhs.value);
        let rhs0 = theorem_rhs(&f, 0.0, 1.0);
        assert!(rhs0.lambda_zero_convention && (rhs0.value - n * n).abs() < 1e-12 * n * n);
    }

    #[test]
    fn gaussian_dual_norm_truncation() {
        let g = grid3(24.0, 0.5);
        let f = ScalarField::from_fn(g.clone(), |x| Complex64::new((-radius(x).powi(2)).exp(), 0.0));
        let full = dyadic_dual(&f, None, None);
        let cut = dyadic_dual(&f, None, Some(4));
        assert!((full.value - cut.value).abs() < 1e-6);
        assert!(!cut.tail_warning);
    }

    #[test]
    fn unit_ball_duality() {
        let g = grid3(3.0, 0.1);
        let f = indicator(g, |x| radius(x) <= 1.0);
        let (lhs, rhs) = duality_gap(&f, &f).unwrap();
        let vol = f.l2_norm().powi(2);
        assert!((lhs - vol).abs() < 1e-12 * vol);
        assert!(rhs >= lhs);
        // |||1_B|||^2 = 4π/3 and N(1_B) = Σ_{j<0} (2^{j+1} (4π/3) 7 2^{3j})^{1/2}
        let ball = 4.0 * PI / 3.0;
        let n: f64 = (1..40).map(|k| (2f64.powi(1 - k) * ball * 7.0 * 2f64.powi(-3 * k)).sqrt()).sum();
        let want = ball.sqrt() * n;
        assert!((rhs - want).abs() < 0.03 * want, "{rhs} vs {want}");
    }

    #[test]
    fn mixed_norm_examples() {
        let q = RadialQuadrature::default();
        assert_eq!(mixed_radial_norm(&|_: &[f64]| 0.0, 3, 2.0, 1.5, &q), 0.0);
        let w = |x: &[f64]| {
            let r = radius(x);
            if (1.0..=2.0).contains(&r) {
                r.powi(-2)
            } else {
                0.0
            }
        };
        let v = mixed_radial_norm(&w, 3, 2.0, 1.5, &q);
        assert!((v - 2f64.ln().sqrt()).abs() < 1e-2, "{v}");
        // (∂_r V)_+ = r^{-2} for V = -1/r
        let w = |x: &[f64]| radius(x).powi(-2);
        assert!(mixed_radial_norm(&w, 3, 1.0, 2.0, &q).is_infinite());
        // |x|^2 e^{-r} integrable: ∫ r^2 e^{-r} dr = 2
        let w = |x: &[f64]| (-radius(x)).exp();
        let v = mixed_radial_norm(&w, 3, 1.0, 2.0, &q);
        assert!((v - 2.0).abs() < 1e-3, "{v}");
        // decaying power at both ends: ∫ r^2 / (r^{1/2} + r^{7/2})... use r^{1.5}/(1+r^3), ∫_0^∞ = 2π/(3√3)·... check against a fine 1-D oracle
        let w = |x: &[f64]| {
            let r = radius(x);
            r.powf(-0.5) / (1.0 + r * r * r)
        };
        let v = mixed_radial_norm(&w, 3, 1.0, 2.0, &q);
        let oracle = {
            // substitution r = e^t, midpoint on a wide range
            let (a, b, m) = (-40.0f64, 40.0f64, 400_000);
            let dt = (b - a) / m as f64;
            (0..m)
                .map(|i| {
                    let r = (a + (i as f64 + 0.5) * dt).exp();
                    r.powf(1.5) / (1.0 + r.powi(3)) * r * dt
                })
                .sum::<f64>()
        };
        assert!((v - oracle).abs() < 1e-4 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn sup_norm_examples() {
        let q = RadialQuadrature::default();
        let c = 0.7;
        // (∂_r V)_+ for V = -c/r^2 is 2c/r^3
        let w = |x: &[f64]| 2.0 * c / radius(x).powi(3);
        assert!((weighted_sup_norm(&w, 4, 3.0, &q) - 2.0 * c).abs() < 1e-12);
        let w = |x: &[f64]| radius(x).powi(-2);
        assert!(weighted_sup_norm(&w, 4, 3.0, &q).is_infinite());
        let w = |x: &[f64]| radius(x).powi(-4);
        assert!(weighted_sup_norm(&w, 4, 3.0, &q).is_infinite());
    }

    #[test]
    fn sphere_sup_of_constant() {
        let g = grid3(4.0, 0.1);
        let u = ScalarField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let (v, _) = sphere_sup(&u);
        assert!((v - 4.0 * PI).abs() < 0.06 * 4.0 * PI, "{v}");
    }

    #[test]
    fn gaussian_hardy_ratio() {
        // ∫ e^{-2r^2} dr / ∫ 4 r^4 e^{-2r^2} dr = (1/2)√(π/2) / (3/8)√(π/2) = 4/3
        let err = |h: f64| {
            let g = grid3(4.0, h);
            let u = ScalarField::from_fn(g, |x| Complex64::new((-radius(x).powi(2)).exp(), 0.0));
            (hardy_ratio(&u, &PotentialPair::free(3)).unwrap() - 4.0 / 3.0).abs()
        };
        let (coarse, fine) = (err(0.2), err(0.1));
        // the 1/|x|^2 singularity limits the cell rule to first order
        assert!(fine < 0.1 && fine < 0.7 * coarse, "{coarse} {fine}");
    }

    #[test]
    fn norm_report_is_flat() {
        let mut r = NormReport::default();
        r.insert_sup("sphere_sup", 2.0, 1.5);
        r.insert("tangential", f64::INFINITY);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"sphere_sup":2.0,"sphere_sup_Rstar":1.5,"tangential":"inf"}"#);
    }
}
