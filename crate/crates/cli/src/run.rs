//! Pipelines behind each run kind.

use std::fmt;

use morcam::admissibility::{self, AdmissibilityReport};
use morcam::fields::{self, Differentiation as How, MagneticSpec, PotentialPair};
use morcam::multipliers::{make_phi, make_varphi};
use morcam::norms::RadialQuadrature;
use morcam::resolvent::{self, SolverOptions};
use morcam::verify::{self, IdentityReport};
use morcam::{GridSpec, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{Differentiation, ParseError, RunSpec, Scenario};

/// A failed run, classified for the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            kind: "parse",
            exit_code: 2,
            message: message.into(),
        }
    }
    pub fn parameter(message: impl Into<String>) -> Self {
        Self {
            kind: "parameter",
            exit_code: 3,
            message: message.into(),
        }
    }
    pub fn solver(message: impl Into<String>) -> Self {
        Self {
            kind: "solver",
            exit_code: 4,
            message: message.into(),
        }
    }
    pub fn accuracy(message: impl Into<String>) -> Self {
        Self {
            kind: "accuracy",
            exit_code: 5,
            message: message.into(),
        }
    }
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: "io",
            exit_code: 3,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind, self.message)
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::parse(e.message)
    }
}

impl From<morcam::Error> for Failure {
    fn from(e: morcam::Error) -> Self {
        use morcam::Error as E;
        let message = e.to_string();
        match e {
            E::Solver { .. } => Failure::solver(message),
            E::Accuracy(_) => Failure::accuracy(message),
            E::Format(_) => Failure::parse(message),
            E::Io(_) => Failure::io(message),
            E::Parameter(_) | E::Domain(_) | E::Shape(_) | E::UndefinedRatio(_) => Failure::parameter(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

/// Result of a pipeline; `failure` is set when the report exists but the run did not meet its contract.
pub struct Outcome {
    pub scenario: Scenario,
    pub result: Value,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    pub table: Option<Vec<[f64; 4]>>,
    pub snapshot: Option<ScalarField>,
    pub failure: Option<Failure>,
}

impl Outcome {
    fn new(scenario: Scenario, result: Value) -> Self {
        Self {
            scenario,
            result,
            summary: Vec::new(),
            warnings: Vec::new(),
            table: None,
            snapshot: None,
            failure: None,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn check_ranges(s: &Scenario) -> Result<(), Failure> {
    if s.dimension < 3 {
        return Err(Failure::parameter(format!("dimension must be >= 3 (got {})", s.dimension)));
    }
    let g = s.grid;
    if !(g.half_width > 0.0 && g.spacing > 0.0 && g.spacing < g.half_width) {
        return Err(Failure::parameter("grid needs 0 < spacing < half_width"));
    }
    if !(s.solver.tol > 0.0 && s.solver.tol < 1.0) || s.solver.restart == 0 || s.solver.max_iterations == 0 {
        return Err(Failure::parameter("solver needs 0 < tol < 1 and positive restart/max_iterations"));
    }
    Ok(())
}

pub fn execute(scenario: &Scenario) -> Result<Outcome, Failure> {
    check_ranges(scenario)?;
    let pp = scenario.potential.build(scenario.dimension)?;
    match &scenario.run {
        RunSpec::FieldsCheck { .. } => fields_check(scenario, &pp),
        RunSpec::Admissibility {} => admissibility_run(scenario, &pp),
        RunSpec::Solve { .. } => solve_run(scenario, &pp),
        RunSpec::VerifyIdentity { .. } => identity_run(scenario, &pp),
        RunSpec::Sweep { .. } => sweep_run(scenario, &pp),
    }
}

fn grid_spec(s: &Scenario) -> GridSpec {
    GridSpec::new(s.dimension, s.grid.half_width, s.grid.spacing)
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 <= 1.0 && r2 > 1e-12 {
            return x.into_iter().map(|v| v * radius).collect();
        }
    }
}

#[derive(Serialize)]
struct FieldsCheckReport {
    potential: String,
    samples: usize,
    radius: f64,
    seed: u64,
    analytic_jacobian: bool,
    max_trapping_analytic: Option<f64>,
    max_trapping_fd: Option<f64>,
    max_radial_derivative_plus: f64,
    max_potential_plus: f64,
    max_potential_minus: f64,
    skipped_points: usize,
}

fn fields_check(s: &Scenario, pp: &PotentialPair) -> Result<Outcome, Failure> {
    let RunSpec::FieldsCheck {
        samples,
        seed,
        radius,
        differentiation,
    } = s.run.clone()
    else {
        unreachable!()
    };
    let radius = radius.unwrap_or(s.grid.half_width);
    if !(radius > 0.0 && radius.is_finite()) || samples == 0 {
        return Err(Failure::parameter("fields-check needs radius > 0 and samples > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (want_a, want_fd) = match differentiation {
        Differentiation::Both => (true, true),
        Differentiation::Analytic => (true, false),
        Differentiation::FiniteDifference => (false, true),
    };
    let mut max_a: Option<f64> = want_a.then_some(0.0);
    let mut max_fd: Option<f64> = want_fd.then_some(0.0);
    let (mut dr_plus, mut v_plus, mut v_minus) = (0.0f64, 0.0f64, 0.0f64);
    let mut skipped = 0;
    for _ in 0..samples {
        let x = random_point(&mut rng, s.dimension, radius);
        let mut point = || -> morcam::Result<()> {
            if let Some(m) = max_a.as_mut() {
                *m = m.max(fields::trapping_component_with(pp, &x, How::Auto)?.norm());
            }
            if let Some(m) = max_fd.as_mut() {
                *m = m.max(fields::trapping_component_with(pp, &x, How::FiniteDifference)?.norm());
            }
            let parts = fields::radial_derivative_parts(pp, &x)?;
            dr_plus = dr_plus.max(parts.dr_plus);
            v_plus = v_plus.max(parts.v_plus);
            v_minus = v_minus.max(parts.v_minus);
            Ok(())
        };
        match point() {
            Ok(()) => {}
            Err(morcam::Error::Domain(_)) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let report = FieldsCheckReport {
        potential: pp.label().to_string(),
        samples,
        radius,
        seed,
        analytic_jacobian: pp.has_analytic_jacobian(),
        max_trapping_analytic: max_a,
        max_trapping_fd: max_fd,
        max_radial_derivative_plus: dr_plus,
        max_potential_plus: v_plus,
        max_potential_minus: v_minus,
        skipped_points: skipped,
    };
    let mut resolved = s.clone();
    resolved.run = RunSpec::FieldsCheck {
        samples,
        seed,
        radius: Some(radius),
        differentiation,
    };
    let mut out = Outcome::new(resolved, to_value(&report));
    if let Some(m) = max_a {
        out.summary.push(format!("max |B_tau| (analytic): {m:.3e}"));
    }
    if let Some(m) = max_fd {
        out.summary.push(format!("max |B_tau| (finite differences): {m:.3e}"));
    }
    if !pp.has_analytic_jacobian() && pp.has_magnetic() && want_a {
        out.warnings
            .push("no analytic Jacobian for this potential; the analytic column uses finite differences".into());
    }
    if skipped > 0 {
        out.warnings.push(format!("{skipped} sample points hit a singular set and were skipped"));
    }
    Ok(out)
}

fn assess(s: &Scenario, pp: &PotentialPair) -> Result<AdmissibilityReport, Failure> {
    if matches!(s.potential.magnetic, MagneticSpec::Ex14Family { .. }) {
        return Err(Failure::parameter(
            "admissibility of ex14_family needs a Biot-Savart quadrature per sample point and is not offered; use fields-check",
        ));
    }
    Ok(admissibility::assess(pp, &RadialQuadrature::default())?)
}

/// Admissibility verdict when it can be computed cheaply, with a warning otherwise.
fn try_assess(s: &Scenario, pp: &PotentialPair, warnings: &mut Vec<String>) -> Result<Option<AdmissibilityReport>, Failure> {
    match assess(s, pp) {
        Ok(rep) => {
            if !rep.admissible {
                warnings.push(format!(
                    "potential pair not admissible (value {} vs threshold {}); results are diagnostic",
                    rep.value, rep.threshold
                ));
            }
            Ok(Some(rep))
        }
        Err(f) if f.kind == "parameter" && matches!(s.potential.magnetic, MagneticSpec::Ex14Family { .. }) => {
            warnings.push("admissibility not assessed for ex14_family".into());
            Ok(None)
        }
        Err(f) => Err(f),
    }
}

/// `M` from the scenario, else the 3D optimum, else 1.
fn pick_m(given: Option<f64>, rep: Option<&AdmissibilityReport>) -> f64 {
    given.unwrap_or_else(|| match rep {
        Some(r) if r.optimal_m.is_finite() => r.optimal_m,
        _ => 1.0,
    })
}

fn pick_delta(given: Option<f64>, rep: Option<&AdmissibilityReport>) -> f64 {
    given.unwrap_or_else(|| match rep {
        Some(r) => r.positivity_delta(),
        None => admissibility::DIAGNOSTIC_DELTA,
    })
}

fn admissibility_run(s: &Scenario, pp: &PotentialPair) -> Result<Outcome, Failure> {
    let rep = assess(s, pp)?;
    let quad = RadialQuadrature::default();
    let mut out = Outcome::new(s.clone(), json!({ "report": rep, "quadrature": quad }));
    out.summary.push(format!(
        "C1 = {:e}, C2 = {:e}, C3 = {:e}: {}",
        rep.c1,
        rep.c2,
        rep.c3,
        if rep.admissible { "admissible" } else { "not admissible" }
    ));
    Ok(out)
}

fn default_radii(half_width: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = 2.0;
    while r <= half_width {
        radii.push(r);
        r += 2.0;
    }
    if radii.is_empty() {
        radii.push(half_width);
    }
    radii
}

fn epsilon_warning(s: &Scenario, eps: f64, factor: f64) -> Option<String> {
    let floor = resolvent::epsilon_min(s.grid.half_width, factor);
    (eps.abs() < floor).then(|| format!("|ε| = {eps:e} is below ε_min(L) = {floor:e}; truncation is not controlled"))
}

fn solve_run(s: &Scenario, pp: &PotentialPair) -> Result<Outcome, Failure> {
    let RunSpec::Solve {
        lambda,
        epsilon,
        datum,
        m,
        delta,
        radii,
        snapshot,
    } = s.run.clone()
    else {
        unreachable!()
    };
    let mut warnings = Vec::new();
    warnings.extend(epsilon_warning(s, epsilon, resolvent::EPSILON_MIN_FACTOR));
    let prob = resolvent::build_problem(pp, lambda, epsilon, &datum, grid_spec(s))?;
    if !prob.support_ok() {
        warnings.push("datum support comes within 2h of the boundary".into());
    }
    let opts: SolverOptions = s.solver.into();
    let sol = resolvent::solve(&prob, &opts)?;
    let residual = prob.residual(&sol.u)?;
    let (absorbed, forcing) = resolvent::absorption_bound(&prob, &sol.u)?;
    let energy = resolvent::energy_constant(&prob, &sol.u).ok();

    let adm = try_assess(s, pp, &mut warnings)?;
    let m = pick_m(m, adm.as_ref());
    let delta = pick_delta(delta, adm.as_ref());
    let estimate = verify::estimate_report(&sol.u, prob.datum(), pp, lambda, epsilon, m, delta, adm.as_ref())?;
    let radii = radii.unwrap_or_else(|| default_radii(s.grid.half_width));
    let resonance = verify::resonance_functionals(&sol.u, pp, &radii)?;
    warnings.extend(estimate.warnings.iter().filter(|w| !warnings.contains(w)).cloned().collect::<Vec<_>>());

    let result = json!({
        "solver": sol.stats,
        "residual": residual,
        "absorption": { "epsilon_l2": absorbed, "forcing_pairing": forcing },
        "energy_constant": energy,
        "admissibility": adm,
        "estimate": estimate,
        "resonance": resonance,
    });
    let mut resolved = s.clone();
    resolved.run = RunSpec::Solve {
        lambda,
        epsilon,
        datum,
        m: Some(m),
        delta: Some(delta),
        radii: Some(radii),
        snapshot,
    };
    let mut out = Outcome::new(resolved, result);
    out.summary.push(format!(
        "solved in {} iterations, relative residual {residual:.3e}",
        sol.stats.iterations
    ));
    out.summary.push(format!("estimate ratio lhs/rhs = {:.6e}", estimate.ratio));
    if absorbed > forcing * (1.0 + 1e-8) {
        out.failure = Some(Failure::accuracy(format!(
            "absorption bound violated: |ε|∫|u|² = {absorbed:e} > ∫|fu| = {forcing:e}"
        )));
    }
    out.warnings = warnings;
    if snapshot {
        out.snapshot = Some(sol.u);
    }
    Ok(out)
}

#[derive(Serialize)]
struct IdentityRun {
    manufactured: bool,
    solver: Option<resolvent::SolveStats>,
    reports: Vec<IdentityReport>,
    worst_radius: f64,
    worst_relative_residual: f64,
    trapping_dropped_residual: f64,
    weight_identity: resolvent::WeightIdentity,
    flux_identity: resolvent::WeightIdentity,
}

fn identity_run(s: &Scenario, pp: &PotentialPair) -> Result<Outcome, Failure> {
    let RunSpec::VerifyIdentity {
        lambda,
        epsilon,
        datum,
        manufactured,
        m,
        beta,
        radii,
        tolerance,
    } = s.run.clone()
    else {
        unreachable!()
    };
    let mut warnings = Vec::new();
    let (prob, u, stats) = if manufactured {
        let (prob, u) = verify::manufactured_problem(pp, lambda, epsilon, &datum, grid_spec(s))?;
        (prob, u, None)
    } else {
        let prob = resolvent::build_problem(pp, lambda, epsilon, &datum, grid_spec(s))?;
        let sol = resolvent::solve(&prob, &s.solver.into())?;
        (prob, sol.u, Some(sol.stats))
    };
    let adm = if m.is_none() { try_assess(s, pp, &mut warnings)? } else { None };
    let m = pick_m(m, adm.as_ref());
    let radii = radii.unwrap_or_else(|| verify::identity_radii(s.grid.half_width).to_vec());
    if radii.is_empty() {
        return Err(Failure::parameter("verify-identity needs at least one radius"));
    }
    let n = s.dimension;
    let mut reports = Vec::with_capacity(radii.len());
    for &r in &radii {
        reports.push(verify::identity_residual(&prob, &u, &make_phi(n, r, m)?, &make_varphi(n, r, beta)?)?);
    }
    let worst = (0..reports.len())
        .max_by(|&a, &b| reports[a].relative_residual.total_cmp(&reports[b].relative_residual))
        .unwrap_or(0);
    let w = reports[worst];
    let dropped = (w.lhs_without_trapping() - w.rhs_total).abs()
        / (w.lhs_total.abs().max(w.rhs_total.abs())).max(f64::MIN_POSITIVE);
    let weight = make_varphi(n, radii[worst], beta)?;
    let run = IdentityRun {
        manufactured,
        solver: stats,
        worst_radius: radii[worst],
        worst_relative_residual: w.relative_residual,
        trapping_dropped_residual: dropped,
        weight_identity: resolvent::weight_identity(&prob, &u, &weight)?,
        flux_identity: resolvent::flux_identity(&prob, &u, &weight)?,
        reports,
    };
    let mut resolved = s.clone();
    resolved.run = RunSpec::VerifyIdentity {
        lambda,
        epsilon,
        datum,
        manufactured,
        m: Some(m),
        beta,
        radii: Some(radii),
        tolerance,
    };
    let mut out = Outcome::new(resolved, to_value(&run));
    out.summary.push(format!(
        "worst relative residual {:.3e} at R = {}",
        run.worst_relative_residual, run.worst_radius
    ));
    if let Some(tol) = tolerance {
        if run.worst_relative_residual > tol {
            out.failure = Some(Failure::accuracy(format!(
                "identity residual {:.3e} exceeds tolerance {tol:e}",
                run.worst_relative_residual
            )));
        }
    }
    out.warnings = warnings;
    Ok(out)
}

fn sweep_run(s: &Scenario, pp: &PotentialPair) -> Result<Outcome, Failure> {
    let RunSpec::Sweep {
        lambda,
        epsilons,
        datum,
        m,
        delta,
        epsilon_min_factor,
    } = s.run.clone()
    else {
        unreachable!()
    };
    if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e != 0.0)) {
        return Err(Failure::parameter("sweep needs a non-empty list of finite, non-zero ε"));
    }
    let mut warnings = Vec::new();
    for &e in &epsilons {
        warnings.extend(epsilon_warning(s, e, epsilon_min_factor));
    }
    let adm = try_assess(s, pp, &mut warnings)?;
    let m = pick_m(m, adm.as_ref());
    let delta = pick_delta(delta, adm.as_ref());
    let report = verify::epsilon_sweep(pp, lambda, &datum, grid_spec(s), &epsilons, m, delta, &s.solver.into())?;
    warnings.extend(report.warnings.iter().cloned());
    let failed: Vec<String> = report
        .entries
        .iter()
        .filter_map(|e| e.error.as_ref().map(|msg| format!("ε = {:e}: {msg}", e.epsilon)))
        .collect();

    let mut resolved = s.clone();
    resolved.run = RunSpec::Sweep {
        lambda,
        epsilons,
        datum,
        m: Some(m),
        delta: Some(delta),
        epsilon_min_factor,
    };
    let mut out = Outcome::new(resolved, json!({ "admissibility": adm, "sweep": report }));
    out.summary.push(format!(
        "ratio spread {:.3} (max {:.4e}, min {:.4e}), blow-up {}",
        report.spread, report.max_ratio, report.min_ratio, report.blow_up
    ));
    out.table = Some(report.table());
    if !failed.is_empty() {
        out.failure = Some(Failure::solver(failed.join("; ")));
    }
    out.warnings = warnings;
    Ok(out)
}
