//! Gauge-covariant lattice operators built from Peierls link phases.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::PotentialPair;
use crate::grid::{RadialGrid, ScalarField};

/// Link variables `U_k(x) = exp(-i h A_k(x + h e_k / 2))`, stored at `idx * n + k`.
#[derive(Debug, Clone)]
pub struct LinkPhases {
    grid: Arc<RadialGrid>,
    phases: Option<Vec<Complex64>>,
}

impl LinkPhases {
    pub fn new(grid: Arc<RadialGrid>, pp: &PotentialPair) -> Result<Self> {
        if pp.dim() != grid.dim() {
            return Err(Error::Shape(format!(
                "potential of dimension {} on a grid of dimension {}",
                pp.dim(),
                grid.dim()
            )));
        }
        if !pp.has_magnetic() {
            return Ok(Self { grid, phases: None });
        }
        let n = grid.dim();
        let h = grid.spacing();
        let phases: Vec<Vec<Complex64>> = (0..grid.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n]),
                |(x, a), idx| {
                    grid.coords(idx, x);
                    (0..n)
                        .map(|k| {
                            x[k] += 0.5 * h;
                            pp.vector_potential(x, a);
                            x[k] -= 0.5 * h;
                            Complex64::from_polar(1.0, -h * a[k])
                        })
                        .collect()
                },
            )
            .collect();
        let phases: Vec<Complex64> = phases.into_iter().flatten().collect();
        if phases.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::Domain(
                "magnetic potential is not finite at a link midpoint".into(),
            ));
        }
        Ok(Self {
            grid,
            phases: Some(phases),
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    #[inline]
    pub fn get(&self, idx: usize, axis: usize) -> Complex64 {
        match &self.phases {
            Some(p) => p[idx * self.grid.dim() + axis],
            None => Complex64::new(1.0, 0.0),
        }
    }

    /// `U_k(x) u(x + h e_k)` and `conj(U_k(x - h e_k)) u(x - h e_k)`, zero outside the box.
    #[inline]
    pub fn transported(&self, u: &[Complex64], idx: usize, axis: usize) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let fwd = self
            .grid
            .neighbor(idx, axis, true)
            .map_or(zero, |j| self.get(idx, axis) * u[j]);
        let bwd = self
            .grid
            .neighbor(idx, axis, false)
            .map_or(zero, |j| self.get(j, axis).conj() * u[j]);
        (fwd, bwd)
    }
}

/// Complex vector field on a grid, component `k` of node `idx` at `idx * n + k`.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl VectorField {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn at(&self, idx: usize) -> &[Complex64] {
        let n = self.dim();
        &self.values[idx * n..(idx + 1) * n]
    }
    /// `|g|^2` per node.
    pub fn density(&self) -> Vec<f64> {
        let n = self.dim();
        self.values
            .par_chunks(n)
            .map(|g| g.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }
}

/// Central covariant gradient `(U_k(x)u(x+h) - conj(U_k(x-h))u(x-h)) / 2h`, Dirichlet outside.
pub fn covariant_gradient(u: &ScalarField, pp: &PotentialPair) -> Result<VectorField> {
    let links = LinkPhases::new(u.grid().clone(), pp)?;
    covariant_gradient_with(u, &links)
}

pub fn covariant_gradient_with(u: &ScalarField, links: &LinkPhases) -> Result<VectorField> {
    let grid = u.grid().clone();
    if !grid.same_layout(links.grid()) {
        return Err(Error::Shape("link phases and field live on different grids".into()));
    }
    let n = grid.dim();
    let h = grid.spacing();
    let vals = u.values();
    let values: Vec<Complex64> = (0..grid.len() * n)
        .into_par_iter()
        .map(|i| {
            let (idx, k) = (i / n, i % n);
            let (f, b) = links.transported(vals, idx, k);
            (f - b) / (2.0 * h)
        })
        .collect();
    Ok(VectorField { grid, values })
}

/// Per node `(g·x/|x|, |g|^2 - |g·x/|x||^2)`, the second clamped at zero.
pub fn radial_tangential_split(g: &VectorField) -> (ScalarField, Vec<f64>) {
    let grid = g.grid().clone();
    let n = grid.dim();
    let parts: Vec<(Complex64, f64)> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |x, idx| {
                grid.coords(idx, x);
                let r = grid.radius(idx);
                let gi = g.at(idx);
                let gr: Complex64 = gi.iter().zip(x.iter()).map(|(z, v)| z * (v / r)).sum();
                let total: f64 = gi.iter().map(|z| z.norm_sqr()).sum();
                (gr, (total - gr.norm_sqr()).max(0.0))
            },
        )
        .collect();
    let (radial, tangential): (Vec<Complex64>, Vec<f64>) = parts.into_iter().unzip();
    (
        ScalarField::from_values(grid, radial).expect("finite radial parts"),
        tangential,
    )
}

/// Forward-difference link energy `Σ_k |U_k(x) u(x+h e_k) - u(x)|^2 / h^2` per node (Dirichlet).
pub fn link_energy_density(u: &ScalarField, links: &LinkPhases) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.dim();
    let h2 = grid.spacing().powi(2);
    let vals = u.values();
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            (0..n)
                .map(|k| {
                    let (f, _) = links.transported(vals, idx, k);
                    (f - vals[idx]).norm_sqr() / h2
                })
                .sum::<f64>()
                + boundary_links(grid, vals, idx, h2)
        })
        .collect()
}

/// Links from the first interior layer to the Dirichlet ghost on the low side.
fn boundary_links(grid: &RadialGrid, vals: &[Complex64], idx: usize, h2: f64) -> f64 {
    (0..grid.dim())
        .filter(|&k| grid.neighbor(idx, k, false).is_none())
        .map(|_| vals[idx].norm_sqr() / h2)
        .sum()
}

/// `L u = (-Δ_A^h + V - z) u` with `z = λ + iε`, homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    links: LinkPhases,
    potential: Vec<f64>,
    shift: Complex64,
    capped: usize,
}

impl DiscreteOperator {
    /// Samples `V` at the nodes, capping `|V|` at `1/h^2`.
    pub fn new(grid: Arc<RadialGrid>, pp: &PotentialPair, shift: Complex64) -> Result<Self> {
        let links = LinkPhases::new(grid.clone(), pp)?;
        let cap = grid.spacing().powi(-2);
        let n = grid.dim();
        let raw: Vec<f64> = if pp.has_electric() {
            (0..grid.len())
                .into_par_iter()
                .map_init(
                    || vec![0.0; n],
                    |x, idx| {
                        grid.coords(idx, x);
                        pp.scalar_potential(x)
                    },
                )
                .collect()
        } else {
            vec![0.0; grid.len()]
        };
        if raw.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("electric potential is undefined at a grid node".into()));
        }
        let capped = raw.iter().filter(|v| v.abs() > cap).count();
        if capped > 0 {
            log::warn!("electric potential capped at |V| = 1/h^2 = {cap} on {capped} nodes");
        }
        let potential = raw.into_iter().map(|v| v.clamp(-cap, cap)).collect();
        Ok(Self {
            links,
            potential,
            shift,
            capped,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.links.grid()
    }
    pub fn links(&self) -> &LinkPhases {
        &self.links
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
    pub fn shift(&self) -> Complex64 {
        self.shift
    }
    /// Number of nodes where `V` hit the cap.
    pub fn capped_nodes(&self) -> usize {
        self.capped
    }

    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let grid = self.grid();
        let n = grid.dim();
        let inv_h2 = grid.spacing().powi(-2);
        let diag0 = 2.0 * n as f64 * inv_h2;
        out.par_iter_mut().enumerate().for_each(|(idx, o)| {
            let mut hop = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let (f, b) = self.links.transported(u, idx, k);
                hop += f + b;
            }
            *o = (diag0 + self.potential[idx] - self.shift) * u[idx] - hop * inv_h2;
        });
    }

    pub fn apply_field(&self, u: &ScalarField) -> Result<ScalarField> {
        if !u.grid().same_layout(self.grid()) {
            return Err(Error::Shape("field and operator live on different grids".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); u.values().len()];
        self.apply(u.values(), &mut out);
        ScalarField::from_values(u.grid().clone(), out)
    }

    /// Discrete `-H u + z u`, i.e. `-L u`.
    pub fn forcing_of(&self, u: &ScalarField) -> Result<ScalarField> {
        Ok(self.apply_field(u)?.scale(Complex64::new(-1.0, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ElectricSpec, MagneticSpec, PotentialSpec};
    use crate::grid::GridSpec;

    fn grid(l: f64, h: f64) -> Arc<RadialGrid> {
        RadialGrid::shared(GridSpec::new(3, l, h)).unwrap()
    }

    #[test]
    fn free_operator_is_the_seven_point_stencil() {
        let g = grid(2.0, 0.5);
        let pp = PotentialPair::free(3);
        let op = DiscreteOperator::new(g.clone(), &pp, Complex64::new(1.0, 0.5)).unwrap();
        let mut e = vec![Complex64::new(0.0, 0.0); g.len()];
        let centre = g.origin_cell()[0];
        e[centre] = Complex64::new(1.0, 0.0);
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        op.apply(&e, &mut out);
        assert!((out[centre] - Complex64::new(24.0 - 1.0, -0.5)).norm() < 1e-14);
        let nb = g.neighbor(centre, 1, true).unwrap();
        assert!((out[nb] - Complex64::new(-4.0, 0.0)).norm() < 1e-14);
        let nonzero = out.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 7);
    }

    #[test]
    fn magnetic_operator_is_hermitian_part_plus_shift() {
        let g = grid(2.0, 0.5);
        let pp = PotentialSpec {
            magnetic: MagneticSpec::GaussianVortex {
                strength: 1.5,
                width: 1.0,
            },
            electric: ElectricSpec::Gaussian {
                amplitude: -1.0,
                width: 1.0,
            },
        }
        .build(3)
        .unwrap();
        let op = DiscreteOperator::new(g.clone(), &pp, Complex64::new(0.0, 0.0)).unwrap();
        let u: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let v: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new((i as f64 * 0.7).cos(), (i as f64 * 1.3).sin())).collect();
        let mut lu = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut lv = lu.clone();
        op.apply(&u, &mut lu);
        op.apply(&v, &mut lv);
        let a: Complex64 = lu.iter().zip(&v).map(|(a, b)| a * b.conj()).sum();
        let b: Complex64 = u.iter().zip(&lv).map(|(a, b)| a * b.conj()).sum();
        assert!((a - b).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn plane_gradient() {
        let g = grid(2.0, 0.25);
        let u = ScalarField::from_fn(g.clone(), |x| Complex64::new(x[0], 0.0));
        let grad = covariant_gradient(&u, &PotentialPair::free(3)).unwrap();
        for idx in 0..g.len() {
            if g.boundary_distance(idx) > 0.3 {
                let gi = grad.at(idx);
                assert!((gi[0] - 1.0).norm() < 1e-12 && gi[1].norm() < 1e-12 && gi[2].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn split_is_pythagorean() {
        let g = grid(1.0, 0.25);
        let u = ScalarField::from_fn(g.clone(), |x| Complex64::new(x[0] * x[1], x[2] - x[0] * x[0]));
        let pp = PotentialSpec {
            magnetic: MagneticSpec::Ex13 { strength: 1.0 },
            electric: ElectricSpec::None,
        }
        .build(3)
        .unwrap();
        let grad = covariant_gradient(&u, &pp).unwrap();
        let (gr, gt) = radial_tangential_split(&grad);
        let dens = grad.density();
        for idx in 0..g.len() {
            assert!((gr.values()[idx].norm_sqr() + gt[idx] - dens[idx]).abs() <= 1e-12 * dens[idx].max(1.0));
        }
    }
}
