//! Discrete checks of the Morawetz identity, the a priori estimates along
//! `ε`-sweeps, and resonance functionals.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::AdmissibilityReport;
use crate::error::{Error, Result};
use crate::fields::{trapping_component, PotentialPair};
use crate::grid::{bracket, GridSpec, ScalarField};
use crate::multipliers::{hessian_split, make_phi, make_varphi, Atom, Multiplier, SymmetricWeight};
use crate::norms::{theorem_lhs, theorem_rhs, NormReport, RhsReport};
use crate::resolvent::{
    build_problem, build_problem_with_field, covariant_gradient_with, solve, DatumSpec, ResolventProblem, SolverOptions,
};
use crate::util::json_float;

/// Terms of the identity, signed as they enter each side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `∫ ∇_A u D²φ conj(∇_A u)`.
    pub hessian: f64,
    /// `-∫ varphi |∇_A u|²`.
    pub weight_gradient: f64,
    /// `-¼ ∫ Δ²φ |u|² + ½ ∫ Δvarphi |u|²`, atoms included.
    pub bilaplacian: f64,
    /// `-½ ∫ φ' ∂_r V |u|²`.
    pub potential_radial: f64,
    /// `-∫ varphi V |u|²`.
    pub potential_weighted: f64,
    /// `Im ∫ φ' u B_τ · conj(∇_A u)`.
    pub trapping: f64,
    /// `λ ∫ varphi |u|²`.
    pub energy: f64,
    /// `-Re ∫ f (∇φ · conj(∇_A u) + ½ Δφ ū)`.
    pub forcing_antisymmetric: f64,
    /// `Re ∫ f varphi ū`.
    pub forcing_symmetric: f64,
    /// `∓ |ε| Im ∫ u ∇φ · conj(∇_A u)`.
    pub absorption: f64,
    pub lhs_total: f64,
    pub rhs_total: f64,
    pub absolute_residual: f64,
    pub relative_residual: f64,
    pub h: f64,
    pub multiplier_radius: f64,
}

impl IdentityReport {
    fn lhs_terms(&self) -> [f64; 7] {
        [
            self.hessian,
            self.weight_gradient,
            self.bilaplacian,
            self.potential_radial,
            self.potential_weighted,
            self.trapping,
            self.energy,
        ]
    }
    fn rhs_terms(&self) -> [f64; 3] {
        [self.forcing_antisymmetric, self.forcing_symmetric, self.absorption]
    }

    fn close(mut self) -> Self {
        let (l, r) = (self.lhs_terms(), self.rhs_terms());
        self.lhs_total = l.iter().sum();
        self.rhs_total = r.iter().sum();
        self.absolute_residual = (self.lhs_total - self.rhs_total).abs();
        let scale = l.iter().map(|v| v.abs()).sum::<f64>().max(r.iter().map(|v| v.abs()).sum());
        self.relative_residual = if scale == 0.0 { 0.0 } else { self.absolute_residual / scale };
        self
    }

    /// `lhs_total` with the trapping term removed.
    pub fn lhs_without_trapping(&self) -> f64 {
        self.lhs_total - self.trapping
    }
}

fn pair_atoms(atoms: &[Atom], prob: &ResolventProblem, density: &[f64]) -> f64 {
    let grid = prob.grid();
    atoms
        .iter()
        .map(|a| match *a {
            Atom::Origin { mass } => mass * grid.origin_value(density),
            Atom::Sphere { radius, density: d } => d * grid.sphere_integral(density, radius),
        })
        .sum()
}

/// Evaluates every term of the identity for `u` against the problem's datum.
pub fn identity_residual(
    prob: &ResolventProblem,
    u: &ScalarField,
    mult: &Multiplier,
    weight: &SymmetricWeight,
) -> Result<IdentityReport> {
    u.check_same_grid(prob.datum())?;
    let grid = prob.grid().clone();
    let n = grid.dim();
    if mult.dim() != n || weight.dim() != n {
        return Err(Error::Shape(format!(
            "multipliers of dimension {}/{} on a {n}-dimensional grid",
            mult.dim(),
            weight.dim()
        )));
    }
    let pp = prob.potentials();
    let grad = covariant_gradient_with(u, prob.operator().links())?;
    let dens = u.density();
    let uv = u.values();
    let f = prob.datum().values();
    let v = prob.operator().potential();
    let (lambda, eps) = (prob.lambda(), prob.epsilon());

    let sums = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(x, gphi), idx| -> Result<[f64; 10]> {
                let d = dens[idx];
                let g = grad.at(idx);
                if d == 0.0 && g.iter().all(|z| z.norm_sqr() == 0.0) {
                    return Ok([0.0; 10]);
                }
                grid.coords(idx, x);
                let r = grid.radius(idx);
                let w = weight.value(r);
                let dphi = mult.phi_prime(r);
                mult.gradient(x, gphi);
                let g2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
                let grad_dot: Complex64 = gphi.iter().zip(g).map(|(a, z)| a * z.conj()).sum();
                let drv = if pp.has_electric() && d > 0.0 { pp.radial_derivative(x)? } else { 0.0 };
                let trap = if pp.has_magnetic() && d > 0.0 {
                    let bt = trapping_component(pp, x)?;
                    let s: Complex64 = bt.0.iter().zip(g).map(|(b, z)| b * z.conj()).sum();
                    dphi * (uv[idx] * s).im
                } else {
                    0.0
                };
                Ok([
                    hessian_split(mult, x, g)?,
                    -w * g2,
                    (-0.25 * mult.bilaplacian_smooth(r) + 0.5 * weight.laplacian_smooth(r)) * d,
                    -0.5 * dphi * drv * d,
                    -w * v[idx] * d,
                    trap,
                    lambda * w * d,
                    -(f[idx] * (grad_dot + 0.5 * mult.laplacian(r) * uv[idx].conj())).re,
                    (f[idx] * w * uv[idx].conj()).re,
                    -eps * (uv[idx] * grad_dot).im,
                ])
            },
        )
        .try_reduce(
            || [0.0; 10],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
                Ok(a)
            },
        )?;
    let vol = grid.cell_volume();
    let s = sums.map(|t| t * vol);
    let atoms = -0.25 * pair_atoms(&mult.atoms(), prob, &dens) + 0.5 * pair_atoms(&weight.atoms(), prob, &dens);
    Ok(IdentityReport {
        hessian: s[0],
        weight_gradient: s[1],
        bilaplacian: s[2] + atoms,
        potential_radial: s[3],
        potential_weighted: s[4],
        trapping: s[5],
        energy: s[6],
        forcing_antisymmetric: s[7],
        forcing_symmetric: s[8],
        absorption: s[9],
        h: grid.spacing(),
        multiplier_radius: mult.radius(),
        ..Default::default()
    }
    .close())
}

/// Identity reports at `R ∈ {L/8, L/4, L/2}` and the index of the worst one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub reports: Vec<IdentityReport>,
    pub worst: usize,
    pub worst_relative_residual: f64,
}

pub fn identity_radii(half_width: f64) -> [f64; 3] {
    [half_width / 8.0, half_width / 4.0, half_width / 2.0]
}

pub fn identity_check(prob: &ResolventProblem, u: &ScalarField, m: f64, beta: f64) -> Result<IdentityCheck> {
    let grid = prob.grid();
    let n = grid.dim();
    let reports = identity_radii(grid.half_width())
        .iter()
        .map(|&r| identity_residual(prob, u, &make_phi(n, r, m)?, &make_varphi(n, r, beta)?))
        .collect::<Result<Vec<_>>>()?;
    let worst = (0..reports.len())
        .max_by(|&a, &b| reports[a].relative_residual.total_cmp(&reports[b].relative_residual))
        .unwrap_or(0);
    Ok(IdentityCheck {
        worst_relative_residual: reports[worst].relative_residual,
        reports,
        worst,
    })
}

/// Problem whose exact discrete solution is the sampled `u_spec`: `f := -H^h u + (λ + iε) u`.
pub fn manufactured_problem(
    pp: &PotentialPair,
    lambda: f64,
    epsilon: f64,
    u_spec: &DatumSpec,
    grid_spec: GridSpec,
) -> Result<(ResolventProblem, ScalarField)> {
    let grid = crate::grid::RadialGrid::shared(grid_spec)?;
    manufactured_problem_with_field(pp, lambda, epsilon, u_spec.sample(grid)?)
}

/// Same as [`manufactured_problem`] for an explicit field `u`.
pub fn manufactured_problem_with_field(
    pp: &PotentialPair,
    lambda: f64,
    epsilon: f64,
    u: ScalarField,
) -> Result<(ResolventProblem, ScalarField)> {
    let seed = build_problem_with_field(pp, lambda, epsilon, u.clone())?;
    let f = seed.operator().forcing_of(&u)?;
    Ok((build_problem_with_field(pp, lambda, epsilon, f)?, u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub lhs: NormReport,
    pub rhs: RhsReport,
    #[serde(with = "json_float")]
    pub ratio: f64,
    pub m: f64,
    pub delta: f64,
    pub warnings: Vec<String>,
}

/// Both sides of the a priori estimate for a solution `u` of datum `f`.
pub fn estimate_report(
    u: &ScalarField,
    f: &ScalarField,
    pp: &PotentialPair,
    lambda: f64,
    epsilon: f64,
    m: f64,
    delta: f64,
    admissibility: Option<&AdmissibilityReport>,
) -> Result<EstimateReport> {
    u.check_same_grid(f)?;
    let mut warnings = Vec::new();
    if let Some(a) = admissibility {
        if !a.admissible {
            let msg = format!(
                "potential pair not admissible (value {} vs threshold {}); estimate is diagnostic",
                a.value, a.threshold
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let lhs = theorem_lhs(u, pp, lambda, m, delta)?;
    let rhs = theorem_rhs(f, lambda, epsilon);
    if rhs.lambda_zero_convention {
        warnings.push("λ = 0: right side reduced to N(f)^2".into());
    }
    let total = lhs.get("total").unwrap_or(0.0);
    let ratio = if rhs.value > 0.0 {
        total / rhs.value
    } else if total > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(EstimateReport {
        lhs,
        rhs,
        ratio,
        m,
        delta,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    #[serde(with = "crate::util::json_float_opt")]
    pub ratio: Option<f64>,
    pub iterations: Option<usize>,
    pub solver_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    #[serde(with = "json_float")]
    pub max_ratio: f64,
    #[serde(with = "json_float")]
    pub min_ratio: f64,
    #[serde(with = "json_float")]
    pub spread: f64,
    pub blow_up: bool,
    pub warnings: Vec<String>,
}

impl SweepReport {
    /// Assembles the summary; entries are sorted by decreasing `|ε|`.
    pub fn from_entries(mut entries: Vec<SweepEntry>, warnings: Vec<String>) -> Self {
        entries.sort_by(|a, b| b.epsilon.abs().total_cmp(&a.epsilon.abs()));
        let ok: Vec<(f64, f64)> = entries.iter().filter_map(|e| e.ratio.map(|r| (e.epsilon.abs(), r))).collect();
        let max_ratio = ok.iter().map(|p| p.1).fold(f64::NAN, f64::max);
        let min_ratio = ok.iter().map(|p| p.1).fold(f64::NAN, f64::min);
        let spread = if min_ratio > 0.0 { max_ratio / min_ratio } else { f64::NAN };
        let blow_up = blow_up_flag(&ok);
        Self {
            entries,
            max_ratio,
            min_ratio,
            spread,
            blow_up,
            warnings,
        }
    }

    /// `(ε, lhs, rhs, ratio)` rows of the successful entries.
    pub fn table(&self) -> Vec<[f64; 4]> {
        self.entries
            .iter()
            .filter_map(|e| Some([e.epsilon, e.lhs?, e.rhs?, e.ratio?]))
            .collect()
    }
}

/// True when the ratio never decreases as `ε` shrinks and grows overall by more than `2×` per decade.
pub fn blow_up_flag(points: &[(f64, f64)]) -> bool {
    if points.len() < 2 {
        return false;
    }
    let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1);
    let (first, last) = (points[0], points[points.len() - 1]);
    let decades = (first.0 / last.0).log10();
    monotone && decades > 0.0 && last.1 > first.1 * 2f64.powf(decades)
}

/// Solves for each `ε` and records the estimate ratio; solver failures are kept per entry.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_sweep(
    pp: &PotentialPair,
    lambda: f64,
    datum: &DatumSpec,
    grid_spec: GridSpec,
    epsilons: &[f64],
    m: f64,
    delta: f64,
    opts: &SolverOptions,
) -> Result<SweepReport> {
    let mut warnings = Vec::new();
    let mut entries = Vec::with_capacity(epsilons.len());
    let mut sorted = epsilons.to_vec();
    sorted.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    for &eps in &sorted {
        let prob = build_problem(pp, lambda, eps, datum, grid_spec)?;
        let entry = match solve(&prob, opts) {
            Ok(sol) => {
                let est = estimate_report(&sol.u, prob.datum(), pp, lambda, eps, m, delta, None)?;
                for w in est.warnings {
                    if !warnings.contains(&w) {
                        warnings.push(w);
                    }
                }
                log::info!(
                    "ε = {eps:e}: {} iterations, ratio {:.6e}",
                    sol.stats.iterations,
                    est.ratio
                );
                SweepEntry {
                    epsilon: eps,
                    lhs: est.lhs.get("total"),
                    rhs: Some(est.rhs.value),
                    ratio: Some(est.ratio),
                    iterations: Some(sol.stats.iterations),
                    solver_residual: Some(sol.stats.relative_residual),
                    error: None,
                }
            }
            Err(e @ Error::Solver { .. }) => {
                log::warn!("ε = {eps:e}: {e}");
                SweepEntry {
                    epsilon: eps,
                    lhs: None,
                    rhs: None,
                    ratio: None,
                    iterations: None,
                    solver_residual: None,
                    error: Some(e.to_string()),
                }
            }
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    Ok(SweepReport::from_entries(entries, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    /// `sup_R (1/R) ∫_{|x|<=R} (|V| + ⟨x⟩^{-2}) |u|²` over the requested radii.
    pub sup: f64,
    pub sup_radius: f64,
    /// The same quotient at the largest radius.
    pub at_largest: f64,
    /// `∫ |V| |u|²`.
    pub potential_mass: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn resonance_functionals(u: &ScalarField, pp: &PotentialPair, radii: &[f64]) -> Result<ResonanceReport> {
    let grid = u.grid();
    let n = grid.dim();
    if pp.dim() != n {
        return Err(Error::Shape(format!("potential of dimension {} on a {n}-dimensional grid", pp.dim())));
    }
    let dens = u.density();
    let (weighted, vmass): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |x, idx| {
                let d = dens[idx];
                if d == 0.0 {
                    return (0.0, 0.0);
                }
                grid.coords(idx, x);
                let v = if pp.has_electric() { pp.scalar_potential(x).abs() } else { 0.0 };
                let v = if v.is_finite() { v } else { 0.0 };
                ((v + bracket(grid.radius(idx)).powi(-2)) * d, v * d)
            },
        )
        .unzip();
    let vol = grid.cell_volume();
    let mut values = Vec::with_capacity(radii.len());
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    values.resize(radii.len(), 0.0);
    {
        let by_r = grid.by_radius();
        let mut pos = 0;
        let mut mass = 0.0;
        for &k in &order {
            let big_r = radii[k];
            while pos < by_r.len() && grid.radius(by_r[pos] as usize) <= big_r {
                mass += weighted[by_r[pos] as usize] * vol;
                pos += 1;
            }
            values[k] = mass / big_r;
        }
    }
    let (sup, sup_radius) = radii
        .iter()
        .zip(&values)
        .fold((0.0, f64::NAN), |acc, (&r, &v)| if v > acc.0 || acc.1.is_nan() { (v, r) } else { acc });
    let at_largest = order.last().map_or(0.0, |&k| values[k]);
    Ok(ResonanceReport {
        sup,
        sup_radius,
        at_largest,
        potential_mass: vmass.iter().sum::<f64>() * vol,
        radii: radii.to_vec(),
        values,
    })
}
