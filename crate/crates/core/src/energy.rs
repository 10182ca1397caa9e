//! Energy functionals, constraint values, the L²-gradient and multipliers.
//!
//! For `u = (u₁, u₂)` the energy is
//!
//! ```text
//! E(u) = Σᵢ ½‖∇uᵢ‖² + ½∫Vᵢ|uᵢ|² − μᵢ/(2pᵢ+2)∫|uᵢ|^{2pᵢ+2}
//!        − β/(p₃+1) ∫|u₁|^{p₃+1}|u₂|^{p₃+1}
//! ```
//!
//! and the multipliers follow the sign convention
//! `−Δuᵢ + (Vᵢ + λᵢ)uᵢ = nonlinearity`, so a converged minimizer satisfies
//! `Gᵢ(u) = −λᵢ uᵢ` with `λᵢ > 0` expected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, Grid, GridError, Spectral, State};
use crate::model::{sample_potential, ModelError, PotentialSpec, ProblemSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite value in component {component} at node {node}")]
    NonFinite { component: usize, node: usize },
    #[error("component {0} has zero mass")]
    ZeroMass(usize),
}

/// Term-by-term breakdown of `E(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub kinetic1: f64,
    pub kinetic2: f64,
    pub potential1: f64,
    pub potential2: f64,
    pub self1: f64,
    pub self2: f64,
    pub cross: f64,
}

impl EnergyReport {
    fn assemble(kinetic: [f64; 2], potential: [f64; 2], selfs: [f64; 2], cross: f64) -> Self {
        let total = kinetic[0] + kinetic[1] + potential[0] + potential[1] - selfs[0] - selfs[1]
            - cross;
        Self {
            total,
            kinetic1: kinetic[0],
            kinetic2: kinetic[1],
            potential1: potential[0],
            potential2: potential[1],
            self1: selfs[0],
            self2: selfs[1],
            cross,
        }
    }

    /// `Σ kinetic + Σ potential − Σ self − cross`, recomputed.
    pub fn recomputed_total(&self) -> f64 {
        self.kinetic1 + self.kinetic2 + self.potential1 + self.potential2
            - self.self1
            - self.self2
            - self.cross
    }

    /// JSON record with the multipliers folded in.
    pub fn record(&self, m: &Multipliers) -> EnergyRecord {
        EnergyRecord {
            total: self.total,
            kinetic1: self.kinetic1,
            kinetic2: self.kinetic2,
            potential1: self.potential1,
            potential2: self.potential2,
            self1: self.self1,
            self2: self.self2,
            cross: self.cross,
            lambda1: m.lambda1,
            lambda2: m.lambda2,
        }
    }
}

/// Serialized energy report: the decomposition plus both multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub total: f64,
    pub kinetic1: f64,
    pub kinetic2: f64,
    pub potential1: f64,
    pub potential2: f64,
    pub self1: f64,
    pub self2: f64,
    pub cross: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Multipliers {
    pub fn get(&self, i: usize) -> f64 {
        [self.lambda1, self.lambda2][i]
    }
}

/// Data of one component with its potential sampled on the grid.
#[derive(Debug, Clone)]
pub struct Component {
    pub mu: f64,
    pub p: f64,
    pub mass: f64,
    pub potential: Vec<f64>,
}

impl Component {
    pub fn is_active(&self) -> bool {
        self.mass > 0.0
    }

    pub fn has_potential(&self) -> bool {
        self.potential.iter().any(|&v| v != 0.0)
    }
}

/// A problem discretized on a grid: sampled potentials plus FFT plans.
///
/// Masses may be zero here, which is how scalar and degenerate
/// subproblems are represented; a zero-mass component stays identically zero.
#[derive(Debug, Clone)]
pub struct Problem {
    spectral: Spectral,
    comps: [Component; 2],
    beta: f64,
    p3: f64,
}

impl Problem {
    pub fn new(spec: &ProblemSpec, grid: &Grid) -> Result<Self, EnergyError> {
        Self::with_masses(spec, grid, spec.masses())
    }

    pub fn with_masses(
        spec: &ProblemSpec,
        grid: &Grid,
        masses: [f64; 2],
    ) -> Result<Self, EnergyError> {
        let comp = |i: usize| -> Result<Component, EnergyError> {
            Ok(Component {
                mu: spec.coupling(i),
                p: spec.exponent(i),
                mass: masses[i],
                potential: sample_potential(spec.potential(i), grid)?.re(),
            })
        };
        Ok(Self {
            spectral: Spectral::new(grid),
            comps: [comp(0)?, comp(1)?],
            beta: spec.beta,
            p3: spec.p3,
        })
    }

    /// Single-component problem; the second slot is an inert zero-mass component.
    pub fn scalar(
        grid: &Grid,
        mu: f64,
        p: f64,
        potential: &PotentialSpec,
        mass: f64,
    ) -> Result<Self, EnergyError> {
        let first = Component {
            mu,
            p,
            mass,
            potential: sample_potential(potential, grid)?.re(),
        };
        let second = Component {
            mu: 0.0,
            p: 1.0,
            mass: 0.0,
            potential: vec![0.0; grid.len()],
        };
        Ok(Self {
            spectral: Spectral::new(grid),
            comps: [first, second],
            beta: 0.0,
            p3: 1.0,
        })
    }

    /// Same data with both potentials set to zero.
    pub fn at_infinity(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.comps {
            c.potential.iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn component(&self, i: usize) -> &Component {
        &self.comps[i]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p3(&self) -> f64 {
        self.p3
    }

    pub fn masses(&self) -> [f64; 2] {
        [self.comps[0].mass, self.comps[1].mass]
    }

    pub fn potential_free(&self) -> bool {
        !self.comps[0].has_potential() && !self.comps[1].has_potential()
    }

    fn check(&self, state: &State) -> Result<(), EnergyError> {
        if state.grid() != self.grid() {
            return Err(GridError::GridMismatch.into());
        }
        for (c, f) in state.components().iter().enumerate() {
            if let Some(node) = f.values().iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(EnergyError::NonFinite { component: c, node });
            }
        }
        Ok(())
    }

    /// Energy from raw samples and their (unnormalized) Fourier coefficients.
    pub(crate) fn energy_raw(&self, u: [&[Complex64]; 2], hat: [&[Complex64]; 2]) -> EnergyReport {
        let dv = self.grid().cell_volume();
        let mut kinetic = [0.0; 2];
        let mut potential = [0.0; 2];
        let mut selfs = [0.0; 2];
        for i in 0..2 {
            let c = &self.comps[i];
            kinetic[i] = 0.5 * self.spectral.gradient_norm_sq_hat(hat[i]);
            let mut pot = 0.0;
            let mut nl = 0.0;
            let q = 2.0 * c.p + 2.0;
            for (v, w) in u[i].iter().zip(&c.potential) {
                let m2 = v.norm_sqr();
                pot += w * m2;
                if m2 > 0.0 {
                    nl += m2.powf(0.5 * q);
                }
            }
            potential[i] = 0.5 * pot * dv;
            selfs[i] = c.mu / q * nl * dv;
        }
        let mut cross = 0.0;
        if self.beta != 0.0 {
            let e = 0.5 * (self.p3 + 1.0);
            for (a, b) in u[0].iter().zip(u[1]) {
                let (a2, b2) = (a.norm_sqr(), b.norm_sqr());
                if a2 > 0.0 && b2 > 0.0 {
                    cross += (a2 * b2).powf(e);
                }
            }
            cross *= self.beta / (self.p3 + 1.0) * dv;
        }
        EnergyReport::assemble(kinetic, potential, selfs, cross)
    }

    pub fn energy(&self, state: &State) -> Result<EnergyReport, EnergyError> {
        self.check(state)?;
        let u = [state.first().values(), state.second().values()];
        let mut h0 = u[0].to_vec();
        let mut h1 = u[1].to_vec();
        self.spectral.forward(&mut h0);
        self.spectral.forward(&mut h1);
        Ok(self.energy_raw(u, [&h0, &h1]))
    }

    /// Explicit (non-kinetic) part of the gradient of component `i`:
    /// `Vᵢuᵢ − μᵢ|uᵢ|^{2pᵢ}uᵢ − β|uᵢ|^{p₃−1}|uⱼ|^{p₃+1}uᵢ`.
    pub(crate) fn local_gradient(&self, i: usize, u: [&[Complex64]; 2]) -> Vec<Complex64> {
        let c = &self.comps[i];
        let other = u[1 - i];
        let beta = self.beta;
        let p3 = self.p3;
        u[i].iter()
            .zip(other)
            .zip(&c.potential)
            .map(|((&v, w), pot)| {
                let m2 = v.norm_sqr();
                if m2 == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let mut coef = pot - c.mu * m2.powf(c.p);
                if beta != 0.0 {
                    let w2 = w.norm_sqr();
                    if w2 > 0.0 {
                        // |u|^{p₃−1}|w|^{p₃+1}, extended by zero where u vanishes.
                        coef -= beta * m2.powf(0.5 * (p3 - 1.0)) * w2.powf(0.5 * (p3 + 1.0));
                    }
                }
                v * coef
            })
            .collect()
    }

    pub fn gradient(&self, state: &State) -> Result<State, EnergyError> {
        self.check(state)?;
        let u = [state.first().values(), state.second().values()];
        let mut fields = Vec::with_capacity(2);
        for i in 0..2 {
            let mut g = self.spectral.laplacian(u[i]);
            let local = self.local_gradient(i, u);
            for (gv, lv) in g.iter_mut().zip(&local) {
                *gv = -*gv + lv;
            }
            if let Some(node) = g.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(EnergyError::NonFinite { component: i, node });
            }
            let f = if state.component(i).is_real() {
                Field::from_real(self.grid(), g.iter().map(|v| v.re).collect())?
            } else {
                Field::from_complex(self.grid(), g)?
            };
            fields.push(f);
        }
        let second = fields.pop().expect("two components");
        let first = fields.pop().expect("two components");
        Ok(State::new(first, second)?)
    }

    /// `λᵢ = −Re⟨Gᵢ(u), uᵢ⟩ / αᵢ`; zero-mass components are rejected.
    pub fn multipliers(&self, state: &State) -> Result<Multipliers, EnergyError> {
        for i in 0..2 {
            if !(self.comps[i].mass > 0.0) {
                return Err(EnergyError::ZeroMass(i));
            }
        }
        self.multipliers_active(state)
    }

    /// Multipliers with zero reported for inactive components.
    pub fn multipliers_active(&self, state: &State) -> Result<Multipliers, EnergyError> {
        let g = self.gradient(state)?;
        let mut lambda = [0.0; 2];
        for (i, l) in lambda.iter_mut().enumerate() {
            let mass = self.comps[i].mass;
            if mass > 0.0 {
                *l = -g.component(i).inner_re(state.component(i))? / mass;
            }
        }
        Ok(Multipliers {
            lambda1: lambda[0],
            lambda2: lambda[1],
        })
    }

    /// `‖Gᵢ + λᵢuᵢ‖_{L²}` for both components.
    pub fn residuals(&self, state: &State, m: &Multipliers) -> Result<[f64; 2], EnergyError> {
        let g = self.gradient(state)?;
        let mut out = [0.0; 2];
        for (i, r) in out.iter_mut().enumerate() {
            let lam = m.get(i);
            let dv = self.grid().cell_volume();
            let s: f64 = g
                .component(i)
                .values()
                .iter()
                .zip(state.component(i).values())
                .map(|(gv, uv)| (gv + uv * lam).norm_sqr())
                .sum();
            *r = (s * dv).sqrt();
        }
        Ok(out)
    }
}

pub fn energy(state: &State, spec: &ProblemSpec) -> Result<EnergyReport, EnergyError> {
    Problem::new(spec, state.grid())?.energy(state)
}

/// Energy with both potentials replaced by zero.
pub fn energy_infinity(state: &State, spec: &ProblemSpec) -> Result<EnergyReport, EnergyError> {
    energy(state, &spec.at_infinity())
}

/// `½‖∇u‖² + ½∫V|u|² − μ/(2p+2)∫|u|^{2p+2}`.
pub fn scalar_energy(
    field: &Field,
    mu: f64,
    p: f64,
    potential: &PotentialSpec,
) -> Result<f64, EnergyError> {
    let problem = Problem::scalar(field.grid(), mu, p, potential, 0.0)?;
    let state = State::new(field.clone(), Field::zeros(field.grid()))?;
    Ok(problem.energy(&state)?.total)
}

pub fn gradient(state: &State, spec: &ProblemSpec) -> Result<State, EnergyError> {
    Problem::new(spec, state.grid())?.gradient(state)
}

/// `(‖u₁‖², ‖u₂‖²)`.
pub fn constraint_values(state: &State) -> (f64, f64) {
    (state.first().norm_sq(), state.second().norm_sq())
}

pub fn multipliers(state: &State, spec: &ProblemSpec) -> Result<Multipliers, EnergyError> {
    Problem::new(spec, state.grid())?.multipliers(state)
}
