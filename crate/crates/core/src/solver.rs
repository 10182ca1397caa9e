//! Normalized gradient flow for the constrained ground-state problems.
//!
//! One step, for every component with positive mass:
//!
//! ```text
//! û* = [ (1 + dt·s) û − dt · F( Vu − N(u)u + λ(u) u ) ] / (1 + dt(s + |k|²))
//! u⁺ = sqrt(α) · u* / ‖u*‖
//! ```
//!
//! where `λ(u) = −Re⟨G(u), u⟩/α` is the current multiplier estimate and
//! `s = max(λ(u), 0)`. The `λ(u) u` term removes the normal part of the
//! gradient, so fixed points of the map are exact discrete solutions of the
//! Euler–Lagrange system rather than `dt`-dependent approximations. Moving
//! `s·u` into the implicit part keeps large steps stable when `λ` is large. Steps that raise the energy are
//! retried with half the step size; accepted steps grow it by 10% up to
//! `dt_max`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyError, EnergyReport, Multipliers, Problem};
use crate::grid::{Field, Grid, GridError, State};
use crate::model::{validate, PotentialSpec, ProblemSpec, Regime, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("splitting {0:?} is outside [0,1]² or equals (1,1)")]
    BadSplit([f64; 2]),
    #[error("subadditivity scans require the both-bounded regime")]
    WrongRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Initial step size.
    pub dt: f64,
    /// Largest step size the adaptive rule may reach.
    pub dt_max: f64,
    pub tol_residual: f64,
    pub tol_energy: f64,
    pub max_iters: usize,
    /// Re-center potential-free flows every this many steps.
    pub symmetrize_every: Option<usize>,
    pub multi_start: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            dt_max: 4.0,
            tol_residual: 1e-8,
            tol_energy: 1e-12,
            max_iters: 200_000,
            symmetrize_every: None,
            multi_start: 3,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    fn check(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.dt_max >= self.dt) {
            return bad("dt_max must be at least dt");
        }
        if !(self.tol_residual > 0.0 && self.tol_energy > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.symmetrize_every == Some(0) {
            return bad("symmetrize_every must be positive");
        }
        Ok(())
    }
}

/// Accepted steps may raise the energy by at most this much (rounding slack).
pub const ENERGY_SLACK: f64 = 1e-13;

const MAX_TRAJECTORY_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    /// `Σᵢ ‖∇uᵢ‖²`.
    pub gradient_norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: State,
    pub report: EnergyReport,
    pub multipliers: Multipliers,
    pub iterations: usize,
    /// `max ‖u^{k+1} − u^k‖_∞ / dt` of the last accepted step.
    pub final_residual: f64,
    /// `‖Gᵢ + λᵢuᵢ‖_{L²}` at the returned state.
    pub el_residual: [f64; 2],
    pub converged: bool,
    /// Decimated `(iter, energy, residual)` history of the winning start.
    pub trajectory: Vec<TrajectoryPoint>,
    /// Final energy of every start, in start order.
    pub start_energies: Vec<f64>,
    pub best_start: usize,
    /// Largest energy increase among accepted steps of the winning start.
    pub max_energy_increase: f64,
    /// Largest relative mass defect right after renormalization.
    pub max_mass_defect: f64,
}

impl SolveResult {
    pub fn energy(&self) -> f64 {
        self.report.total
    }

    /// Energies of starts that ended more than `tol` above the winner.
    pub fn other_minima(&self, tol: f64) -> Vec<f64> {
        let best = self.report.total;
        self.start_energies
            .iter()
            .copied()
            .filter(|e| (e - best).abs() > tol)
            .collect()
    }

    /// Writes the decimated `iter,energy,residual` history.
    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("iter,energy,residual\n");
        for p in &self.trajectory {
            s.push_str(&format!("{},{:?},{:?}\n", p.iter, p.energy, p.residual));
        }
        s
    }
}

struct RunOutcome {
    u: [Vec<Complex64>; 2],
    energy: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
    trajectory: Vec<TrajectoryPoint>,
    max_increase: f64,
    max_mass_defect: f64,
}

fn forward(problem: &Problem, u: &[Complex64]) -> Vec<Complex64> {
    let mut h = u.to_vec();
    problem.spectral().forward(&mut h);
    h
}

fn renormalize(u: &mut [Complex64], mass: f64, dv: f64) -> f64 {
    let norm: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv;
    let s = (mass / norm).sqrt();
    u.iter_mut().for_each(|v| *v *= s);
    let after: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv;
    ((after - mass) / mass).abs()
}

fn recenter(problem: &Problem, u: &mut [Vec<Complex64>; 2]) {
    let grid = problem.grid();
    let mut total = 0.0;
    let mut moment = [0.0; 2];
    for comp in u.iter() {
        for (i, v) in comp.iter().enumerate() {
            let w = v.norm_sqr();
            let x = grid.coords(i);
            total += w;
            moment[0] += w * x[0];
            moment[1] += w * x[1];
        }
    }
    if total == 0.0 {
        return;
    }
    let c = [-moment[0] / total, -moment[1] / total];
    for comp in u.iter_mut() {
        if comp.iter().any(|v| v.norm_sqr() > 0.0) {
            *comp = problem.spectral().shift(comp, c);
        }
    }
}

fn decimate(points: Vec<TrajectoryPoint>) -> Vec<TrajectoryPoint> {
    if points.len() <= MAX_TRAJECTORY_ROWS {
        return points;
    }
    let stride = points.len().div_ceil(MAX_TRAJECTORY_ROWS - 1);
    let last = *points.last().expect("non-empty");
    let mut out: Vec<_> = points.into_iter().step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

fn run_flow(problem: &Problem, init: [Vec<Complex64>; 2], config: &SolverConfig) -> RunOutcome {
    let grid = *problem.grid();
    let dv = grid.cell_volume();
    let masses = problem.masses();
    let active = [masses[0] > 0.0, masses[1] > 0.0];
    let real = init.iter().all(|c| c.iter().all(|v| v.im == 0.0));
    let k_sq = problem.spectral().k_squared().to_vec();

    let max_pos_potential = (0..2)
        .filter(|&i| active[i])
        .flat_map(|i| problem.component(i).potential.iter().copied())
        .fold(0.0_f64, f64::max);
    let dt_cap = if max_pos_potential > 0.0 {
        config.dt_max.min(1.0 / max_pos_potential)
    } else {
        config.dt_max
    };

    let mut u = init;
    let mut max_mass_defect = 0.0_f64;
    for i in 0..2 {
        if active[i] {
            max_mass_defect = max_mass_defect.max(renormalize(&mut u[i], masses[i], dv));
        } else {
            u[i].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        }
    }
    let mut hat = [forward(problem, &u[0]), forward(problem, &u[1])];
    let mut report = problem.energy_raw([&u[0], &u[1]], [&hat[0], &hat[1]]);
    let mut energy = report.total;
    let grad_sq = |r: &EnergyReport| 2.0 * (r.kinetic1 + r.kinetic2);

    let mut trajectory = vec![TrajectoryPoint {
        iter: 0,
        energy,
        residual: f64::NAN,
        gradient_norm_sq: grad_sq(&report),
    }];
    if !active[0] && !active[1] {
        return RunOutcome {
            u,
            energy,
            iterations: 0,
            residual: 0.0,
            converged: true,
            trajectory,
            max_increase: 0.0,
            max_mass_defect,
        };
    }

    let mut dt = config.dt.min(dt_cap);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut max_increase = 0.0_f64;

    'outer: while iterations < config.max_iters {
        // Explicit part with the multiplier estimate folded in.
        let mut explicit_hat: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
        let mut shift = [0.0; 2];
        for i in 0..2 {
            if !active[i] {
                continue;
            }
            let mut local = problem.local_gradient(i, [&u[0], &u[1]]);
            let kinetic = problem.spectral().gradient_norm_sq_hat(&hat[i]);
            let local_dot: f64 =
                local.iter().zip(&u[i]).map(|(g, v)| g.re * v.re + g.im * v.im).sum::<f64>() * dv;
            let lambda = -(kinetic + local_dot) / masses[i];
            shift[i] = lambda.max(0.0);
            for (g, v) in local.iter_mut().zip(&u[i]) {
                *g += v * lambda;
            }
            problem.spectral().forward(&mut local);
            explicit_hat[i] = local;
        }

        let (new_u, new_hat, new_report) = loop {
            let mut new_u: [Vec<Complex64>; 2] = [u[0].clone(), u[1].clone()];
            let mut new_hat: [Vec<Complex64>; 2] = [hat[0].clone(), hat[1].clone()];
            let mut defect = 0.0_f64;
            for i in 0..2 {
                if !active[i] {
                    continue;
                }
                let s = shift[i];
                let mut trial: Vec<Complex64> = hat[i]
                    .iter()
                    .zip(&explicit_hat[i])
                    .zip(&k_sq)
                    .map(|((h, e), k2)| (h * (1.0 + dt * s) - e * dt) / (1.0 + dt * (s + k2)))
                    .collect();
                problem.spectral().inverse(&mut trial);
                if real {
                    trial.iter_mut().for_each(|v| v.im = 0.0);
                }
                defect = defect.max(renormalize(&mut trial, masses[i], dv));
                new_hat[i] = forward(problem, &trial);
                new_u[i] = trial;
            }
            let r = problem.energy_raw([&new_u[0], &new_u[1]], [&new_hat[0], &new_hat[1]]);
            if r.total.is_finite() && r.total <= energy + ENERGY_SLACK {
                max_mass_defect = max_mass_defect.max(defect);
                break (new_u, new_hat, r);
            }
            dt *= 0.5;
            if dt < 1e-14 {
                break 'outer;
            }
        };

        iterations += 1;
        residual = (0..2)
            .filter(|&i| active[i])
            .map(|i| {
                new_u[i]
                    .iter()
                    .zip(&u[i])
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
            / dt;
        let change = new_report.total - energy;
        max_increase = max_increase.max(change);
        u = new_u;
        hat = new_hat;
        report = new_report;
        energy = report.total;
        trajectory.push(TrajectoryPoint {
            iter: iterations,
            energy,
            residual,
            gradient_norm_sq: grad_sq(&report),
        });
        if residual < config.tol_residual && change.abs() < config.tol_energy {
            converged = true;
            break;
        }
        if let Some(k) = config.symmetrize_every {
            if problem.potential_free() && iterations % k == 0 {
                recenter(problem, &mut u);
                for i in 0..2 {
                    if active[i] {
                        if real {
                            u[i].iter_mut().for_each(|v| v.im = 0.0);
                        }
                        renormalize(&mut u[i], masses[i], dv);
                        hat[i] = forward(problem, &u[i]);
                    }
                }
                report = problem.energy_raw([&u[0], &u[1]], [&hat[0], &hat[1]]);
                energy = report.total;
            }
        }
        dt = (dt * 1.1).min(dt_cap);
    }

    RunOutcome {
        u,
        energy,
        iterations,
        residual,
        converged,
        trajectory: decimate(trajectory),
        max_increase,
        max_mass_defect,
    }
}

/// Even Gaussian bump of width drawn from the start's RNG stream.
fn initial_guess(grid: &Grid, start: usize, seed: u64) -> [Vec<Complex64>; 2] {
    let width = if start == 0 {
        2.0
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(start as u64);
        2.0 * rng.gen_range(0.6..1.6)
    };
    let bump: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let r2 = grid.radius(i).powi(2);
            Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        })
        .collect();
    [bump.clone(), bump]
}

/// Minimizes over the constraint set of an already discretized problem.
pub fn minimize_problem(
    problem: &Problem,
    config: &SolverConfig,
    init: Option<&State>,
) -> Result<SolveResult, SolverError> {
    config.check()?;
    let grid = *problem.grid();
    let starts: Vec<[Vec<Complex64>; 2]> = match init {
        Some(s) => {
            if s.grid() != &grid {
                return Err(GridError::GridMismatch.into());
            }
            for (i, f) in s.components().iter().enumerate() {
                if problem.masses()[i] > 0.0 && f.is_zero() {
                    return Err(SolverError::Config(format!(
                        "initial component {} is zero but its mass is positive",
                        i + 1
                    )));
                }
            }
            vec![[s.first().values().to_vec(), s.second().values().to_vec()]]
        }
        None => (0..config.multi_start.max(1))
            .map(|k| initial_guess(&grid, k, config.rng_seed))
            .collect(),
    };
    let outcomes: Vec<RunOutcome> = starts
        .into_par_iter()
        .map(|s| run_flow(problem, s, config))
        .collect();

    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.energy < outcomes[best].energy - 1e-12 {
            best = k;
        }
    }
    let start_energies: Vec<f64> = outcomes.iter().map(|o| o.energy).collect();
    let winner = outcomes.into_iter().nth(best).expect("at least one start");
    let real = winner.u.iter().all(|c| c.iter().all(|v| v.im == 0.0));
    let [u0, u1] = winner.u;
    let to_field = |v: Vec<Complex64>| -> Result<Field, GridError> {
        if real {
            Field::from_real(&grid, v.into_iter().map(|z| z.re).collect())
        } else {
            Field::from_complex(&grid, v)
        }
    };
    let state = State::new(to_field(u0)?, to_field(u1)?)?;
    let report = problem.energy(&state)?;
    let multipliers = problem.multipliers_active(&state)?;
    let el_residual = problem.residuals(&state, &multipliers)?;
    Ok(SolveResult {
        state,
        report,
        multipliers,
        iterations: winner.iterations,
        final_residual: winner.residual,
        el_residual,
        converged: winner.converged,
        trajectory: winner.trajectory,
        start_energies,
        best_start: best,
        max_energy_increase: winner.max_increase,
        max_mass_defect: winner.max_mass_defect,
    })
}

/// Ground state of `e(α)` (with potentials).
pub fn minimize(
    spec: &ProblemSpec,
    grid: &Grid,
    config: &SolverConfig,
    init: Option<&State>,
) -> Result<SolveResult, SolverError> {
    validate(spec).map_err(SolverError::Invalid)?;
    let problem = Problem::new(spec, grid)?;
    minimize_problem(&problem, config, init)
}

/// Ground state of `e∞(α)` (potentials removed).
pub fn minimize_infinity(
    spec: &ProblemSpec,
    grid: &Grid,
    config: &SolverConfig,
    init: Option<&State>,
) -> Result<SolveResult, SolverError> {
    minimize(&spec.at_infinity(), grid, config, init)
}

/// Ground state of the single-component problem with mass `gamma`.
pub fn minimize_scalar(
    grid: &Grid,
    mu: f64,
    p: f64,
    potential: &PotentialSpec,
    gamma: f64,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    if !(mu > 0.0 && p > 0.0 && gamma > 0.0) {
        return Err(SolverError::Config(
            "scalar problem needs μ, p, γ > 0".to_string(),
        ));
    }
    let problem = Problem::scalar(grid, mu, p, potential, gamma)?;
    minimize_problem(&problem, config, None)
}

/// Masses may be zero; the vanished component stays identically zero.
pub fn minimize_with_masses(
    spec: &ProblemSpec,
    grid: &Grid,
    masses: [f64; 2],
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let problem = Problem::with_masses(spec, grid, masses)?;
    minimize_problem(&problem, config, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubaddReport {
    pub e_alpha: f64,
    pub theta: Vec<[f64; 2]>,
    pub e_inner: Vec<f64>,
    pub e_outer: Vec<f64>,
    pub gap: Vec<f64>,
    pub untrusted: Vec<bool>,
}

/// The square grid `values × values` with `(1,1)` removed.
pub fn theta_grid(values: &[f64]) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for &a in values {
        for &b in values {
            if !(a == 1.0 && b == 1.0) {
                out.push([a, b]);
            }
        }
    }
    out
}

/// `e(α) − [e(θα) + e∞((1−θ)α)]` over a set of splittings.
pub fn scan_subadditivity(
    spec: &ProblemSpec,
    grid: &Grid,
    thetas: &[[f64; 2]],
    config: &SolverConfig,
) -> Result<SubaddReport, SolverError> {
    validate(spec).map_err(SolverError::Invalid)?;
    if spec.regime != Regime::BothBounded {
        return Err(SolverError::WrongRegime);
    }
    for t in thetas {
        let inside = t.iter().all(|v| (0.0..=1.0).contains(v));
        if !inside || (t[0] == 1.0 && t[1] == 1.0) {
            return Err(SolverError::BadSplit(*t));
        }
    }
    let whole = minimize(spec, grid, config, None)?;
    let alpha = spec.masses();
    let infinity = spec.at_infinity();
    let rows: Vec<Result<(f64, f64, bool), SolverError>> = thetas
        .par_iter()
        .map(|t| {
            let inner = [t[0] * alpha[0], t[1] * alpha[1]];
            let outer = [alpha[0] - inner[0], alpha[1] - inner[1]];
            let a = minimize_with_masses(spec, grid, inner, config)?;
            let b = minimize_with_masses(&infinity, grid, outer, config)?;
            Ok((a.energy(), b.energy(), !(a.converged && b.converged)))
        })
        .collect();
    let mut report = SubaddReport {
        e_alpha: whole.energy(),
        theta: thetas.to_vec(),
        e_inner: Vec::new(),
        e_outer: Vec::new(),
        gap: Vec::new(),
        untrusted: Vec::new(),
    };
    for row in rows {
        let (inner, outer, untrusted) = row?;
        report.e_inner.push(inner);
        report.e_outer.push(outer);
        report.gap.push(whole.energy() - (inner + outer));
        report.untrusted.push(untrusted || !whole.converged);
    }
    Ok(report)
}
