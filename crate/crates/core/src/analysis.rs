//! Post-hoc checks on computed minimizers: tail decay rates, convolution
//! asymptotics, overlaps of translated profiles, glued trial states and the
//! Pohozaev identity.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyError, Problem};
use crate::grid::{radial_profile, translate, Field, Grid, GridError, Spectral, State};
use crate::model::ProblemSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("multipliers must satisfy 0 < λ₁ ≤ λ₂, got ({0}, {1})")]
    Unordered(f64, f64),
    #[error("component 1 vanishes identically, it has no decay rate")]
    VanishingComponent,
    #[error("fit window [{0}, {1}] must satisfy r₁ < r₂ ≤ 0.4·L")]
    BadWindow(f64, f64),
    #[error("only {0} usable shells in the fit window, need at least 8")]
    TooFewShells(usize),
    #[error("f must decay faster than g: rate margin η = {0} ≤ 0")]
    Divergent(f64),
    #[error("radius {0} exceeds 0.4·L")]
    RadiusTooLarge(f64),
    #[error("component {0} of the glued state has zero norm")]
    ZeroDenominator(usize),
    #[error("masses of the two pieces sum to {got:?}, expected {expected:?}")]
    MassMismatch { expected: [f64; 2], got: [f64; 2] },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Which decay branch a component's tail follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayTag {
    Component1,
    Component2Standard,
    Component2Anomalous,
}

/// Which components are present in the solution being classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VanishingPattern {
    BothNonzero,
    FirstVanishes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRegime {
    pub expected_rate: f64,
    pub tag: DecayTag,
    /// `(1+p₃)²λ₁/(1−p₃)²`, undefined for `p₃ ≥ 1`.
    pub lambda03: Option<f64>,
    /// `λ₀,₃ = λ₂` exactly: rates coincide, fits there carry no verdict.
    pub boundary: bool,
}

/// Threshold multiplier separating the two second-component branches.
pub fn anomalous_threshold(p3: f64, lambda1: f64) -> Option<f64> {
    (p3 < 1.0).then(|| (1.0 + p3).powi(2) * lambda1 / (1.0 - p3).powi(2))
}

/// Expected exponential tail rate of component `component` (1 or 2).
pub fn classify_decay_regime(
    p3: f64,
    lambda1: f64,
    lambda2: f64,
    component: usize,
    pattern: VanishingPattern,
) -> Result<DecayRegime, AnalysisError> {
    if pattern == VanishingPattern::FirstVanishes {
        if component == 1 {
            return Err(AnalysisError::VanishingComponent);
        }
        if !(lambda2 > 0.0) {
            return Err(AnalysisError::Unordered(lambda1, lambda2));
        }
        return Ok(DecayRegime {
            expected_rate: lambda2.sqrt(),
            tag: DecayTag::Component2Standard,
            lambda03: None,
            boundary: false,
        });
    }
    if !(lambda1 > 0.0 && lambda1 <= lambda2) {
        return Err(AnalysisError::Unordered(lambda1, lambda2));
    }
    let lambda03 = anomalous_threshold(p3, lambda1);
    if component == 1 {
        return Ok(DecayRegime {
            expected_rate: lambda1.sqrt(),
            tag: DecayTag::Component1,
            lambda03,
            boundary: false,
        });
    }
    Ok(match lambda03 {
        Some(l3) if l3 <= lambda2 => DecayRegime {
            expected_rate: l3.sqrt(),
            tag: DecayTag::Component2Anomalous,
            lambda03,
            boundary: l3 == lambda2,
        },
        _ => DecayRegime {
            expected_rate: lambda2.sqrt(),
            tag: DecayTag::Component2Standard,
            lambda03,
            boundary: false,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub component: usize,
    pub window: [f64; 2],
    /// Fitted `sqrt(λ)`.
    pub rate: f64,
    /// Fitted power of `(1+r)`.
    pub poly_exponent: f64,
    pub r_squared: f64,
    pub shells: usize,
    pub intercept: f64,
}

impl DecayFit {
    /// Model value `log` at radius `r`.
    pub fn log_model(&self, r: f64) -> f64 {
        self.intercept - self.rate * r + self.poly_exponent * (1.0 + r).ln()
    }
}

/// Default window `[0.15 L, 0.35 L]`.
pub fn default_window(grid: &Grid) -> [f64; 2] {
    let l = grid.box_length();
    [0.15 * l, 0.35 * l]
}

/// Shell values below this are treated as rounding noise.
pub const SHELL_FLOOR: f64 = 1e-14;

/// Least-squares fit of `log|f|` to `c − rate·r + κ·log(1+r)` on shell maxima.
pub fn decay_fit(
    field: &Field,
    window: [f64; 2],
    component: usize,
) -> Result<DecayFit, AnalysisError> {
    let l = field.grid().box_length();
    decay_fit_profile(&radial_profile(field), window, component, l)
}

pub fn decay_fit_profile(
    profile: &[(f64, f64)],
    window: [f64; 2],
    component: usize,
    box_length: f64,
) -> Result<DecayFit, AnalysisError> {
    let [r1, r2] = window;
    if !(r1 < r2 && r1 >= 0.0 && r2 <= 0.4 * box_length) {
        return Err(AnalysisError::BadWindow(r1, r2));
    }
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, v)| *r >= r1 && *r <= r2 && *v >= SHELL_FLOOR)
        .map(|&(r, v)| (r, v.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(AnalysisError::TooFewShells(pts.len()));
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => -pts[i].0,
        _ => (1.0 + pts[i].0).ln(),
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let x = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("both factors requested");
    let fitted = &a * &x;
    let mean = b.mean();
    let ss_tot: f64 = b.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = b.iter().zip(fitted.iter()).map(|(v, f)| (v - f).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecayFit {
        component,
        window,
        rate: x[1],
        poly_exponent: x[2],
        r_squared,
        shells: pts.len(),
        intercept: x[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    /// Identity value divided by the largest term in absolute value.
    pub residual: f64,
    pub gradient_term: f64,
    pub nonlinear_term: f64,
    pub mass_term: f64,
    /// Set when all terms vanish and the ratio is undefined.
    pub degenerate: bool,
}

/// `((N−2)/2N)‖∇w‖² − μ/(2p+2)‖w‖^{2p+2}_{2p+2} + (λ/2)‖w‖²`, normalized.
pub fn pohozaev_residual(field: &Field, lambda: f64, mu: f64, p: f64, dim: usize) -> PohozaevReport {
    let n = dim as f64;
    let grad = Spectral::new(field.grid()).gradient_norm_sq(field.values());
    let gradient_term = (n - 2.0) / (2.0 * n) * grad;
    let nonlinear_term = -mu / (2.0 * p + 2.0) * field.integral_abs_pow(2.0 * p + 2.0);
    let mass_term = 0.5 * lambda * field.norm_sq();
    let scale = gradient_term
        .abs()
        .max(nonlinear_term.abs())
        .max(mass_term.abs());
    if scale == 0.0 {
        return PohozaevReport {
            residual: 0.0,
            gradient_term,
            nonlinear_term,
            mass_term,
            degenerate: true,
        };
    }
    PohozaevReport {
        residual: (gradient_term + nonlinear_term + mass_term) / scale,
        gradient_term,
        nonlinear_term,
        mass_term,
        degenerate: false,
    }
}

/// Radial model functions for the convolution check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialFn {
    Zero,
    /// `amplitude · (1+|x|)^{−power} · e^{−rate|x|}`.
    PolyExp { amplitude: f64, power: f64, rate: f64 },
}

impl RadialFn {
    pub fn exp(rate: f64) -> Self {
        Self::PolyExp {
            amplitude: 1.0,
            power: 0.0,
            rate,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::PolyExp {
                amplitude,
                power,
                rate,
            } => amplitude * (1.0 + r).powf(-power) * (-rate * r).exp(),
        }
    }

    fn rate(&self) -> f64 {
        match *self {
            Self::Zero => f64::INFINITY,
            Self::PolyExp { rate, .. } => rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionRow {
    pub r: f64,
    pub omega: [f64; 2],
    pub scaled: f64,
    pub limit: f64,
    /// `|scaled − limit| / |limit|`, or the absolute gap when the limit is 0.
    pub deviation: f64,
}

/// Scaled convolutions `(1+r)^α e^{βr} ∫ g(rω − y) f(y) dy` against their limit
/// `γ ∫ f(y) e^{β ω·y} dy`, both by grid sums over the box.
#[allow(clippy::too_many_arguments)]
pub fn convolution_limit_check(
    grid: &Grid,
    f: &RadialFn,
    g: &RadialFn,
    alpha: f64,
    beta_rate: f64,
    gamma_coef: f64,
    r_list: &[f64],
    omegas: &[[f64; 2]],
) -> Result<Vec<ConvolutionRow>, AnalysisError> {
    let eta = f.rate() - beta_rate;
    if !(eta > 0.0) {
        return Err(AnalysisError::Divergent(eta));
    }
    if let Some(&r) = r_list.iter().find(|&&r| r > 0.4 * grid.box_length()) {
        return Err(AnalysisError::RadiusTooLarge(r));
    }
    let dv = grid.cell_volume();
    let nodes: Vec<([f64; 2], f64)> = (0..grid.len())
        .map(|i| (grid.coords(i), f.eval(grid.radius(i))))
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let mut jobs = Vec::new();
    for &omega in omegas {
        let norm = omega[0].hypot(omega[1]);
        let omega = [omega[0] / norm, omega[1] / norm];
        for &r in r_list {
            jobs.push((r, omega));
        }
    }
    Ok(jobs
        .par_iter()
        .map(|&(r, omega)| {
            let target = [r * omega[0], r * omega[1]];
            let conv: f64 = nodes
                .iter()
                .map(|(y, fv)| g.eval((target[0] - y[0]).hypot(target[1] - y[1])) * fv)
                .sum::<f64>()
                * dv;
            let scaled = (1.0 + r).powf(alpha) * (beta_rate * r).exp() * conv;
            let limit = gamma_coef
                * nodes
                    .iter()
                    .map(|(y, fv)| fv * (beta_rate * (omega[0] * y[0] + omega[1] * y[1])).exp())
                    .sum::<f64>()
                * dv;
            let deviation = if limit != 0.0 {
                ((scaled - limit) / limit).abs()
            } else {
                (scaled - limit).abs()
            };
            ConvolutionRow {
                r,
                omega,
                scaled,
                limit,
                deviation,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSeries {
    pub n: Vec<usize>,
    pub distance: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Slope of `log κ + ((N−1)/2) log(1+d)` against the distance `d`, negated.
    pub fitted_rate: Option<f64>,
    pub points_used: usize,
}

/// `κ_n = ⟨u₀, w₀(· − n h e₁)⟩` for every shift in `n_list`.
pub fn overlap_series(u0: &Field, w0: &Field, n_list: &[usize]) -> Result<OverlapSeries, AnalysisError> {
    let grid = *u0.grid();
    if w0.grid() != &grid {
        return Err(GridError::GridMismatch.into());
    }
    let mut kappa = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut shift = vec![0isize; grid.dim()];
        shift[0] = n as isize;
        kappa.push(u0.inner_re(&translate(w0, &shift)?)?);
    }
    let distance: Vec<f64> = n_list.iter().map(|&n| n as f64 * grid.spacing()).collect();
    let poly = (grid.dim() as f64 - 1.0) / 2.0;
    let pts: Vec<(f64, f64)> = distance
        .iter()
        .zip(&kappa)
        .filter(|(_, k)| **k >= SHELL_FLOOR)
        .map(|(d, k)| (*d, k.ln() + poly * (1.0 + d).ln()))
        .collect();
    let fitted_rate = (pts.len() >= 2).then(|| -linear_slope(&pts));
    Ok(OverlapSeries {
        n: n_list.to_vec(),
        distance,
        kappa,
        fitted_rate,
        points_used: pts.len(),
    })
}

fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlueOverlap {
    pub n: usize,
    pub kappa: [f64; 2],
    pub tau: [f64; 2],
}

/// `(τ₁[u₀,₁ + w_{n,1}], τ₂[u₀,₂ + w_{n,2}])` with `w_n = w₀(· − n h e₁)`
/// and `τᵢ = sqrt(αᵢ)/‖u₀,ᵢ + w_{n,i}‖`.
pub fn glue_states(
    u0: &State,
    w0: &State,
    n: usize,
    alpha: [f64; 2],
) -> Result<(State, GlueOverlap), AnalysisError> {
    if u0.grid() != w0.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let mut shift = vec![0isize; u0.grid().dim()];
    shift[0] = n as isize;
    let wn = w0.translate(&shift)?;
    let mut parts = Vec::with_capacity(2);
    let mut kappa = [0.0; 2];
    let mut tau = [0.0; 2];
    for i in 0..2 {
        let sum = u0.component(i).add(wn.component(i))?;
        let norm_sq = sum.norm_sq();
        if norm_sq == 0.0 {
            return Err(AnalysisError::ZeroDenominator(i + 1));
        }
        kappa[i] = u0.component(i).inner_re(wn.component(i))?;
        tau[i] = alpha[i].sqrt() / norm_sq.sqrt();
        parts.push(sum.scale(tau[i]));
    }
    let second = parts.pop().expect("two parts");
    let first = parts.pop().expect("two parts");
    Ok((State::new(first, second)?, GlueOverlap { n, kappa, tau }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlueLedger {
    pub n: usize,
    pub separation: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub glued_energy: f64,
    pub reference_energy: f64,
    pub gap: f64,
}

/// Serialized form with the keys `{n, kappa1, kappa2, tau1, tau2, gap}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlueRecord {
    pub n: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub gap: f64,
}

impl GlueLedger {
    pub fn record(&self) -> GlueRecord {
        GlueRecord {
            n: self.n,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            tau1: self.tau1,
            tau2: self.tau2,
            gap: self.gap,
        }
    }
}

/// `E(glued_n) − [E(u₀) + E∞(w₀)]` for every separation in `n_list`.
///
/// `u₀` carries the spec's potentials, `w₀` is measured without them, and
/// the masses of the two pieces must add up to the spec's `α`.
pub fn glue_energy_gap(
    u0: &State,
    w0: &State,
    spec: &ProblemSpec,
    n_list: &[usize],
) -> Result<Vec<GlueLedger>, AnalysisError> {
    let alpha = spec.masses();
    let got = [
        u0.first().norm_sq() + w0.first().norm_sq(),
        u0.second().norm_sq() + w0.second().norm_sq(),
    ];
    if (0..2).any(|i| (got[i] - alpha[i]).abs() > 1e-8 * alpha[i].max(1.0)) {
        return Err(AnalysisError::MassMismatch {
            expected: alpha,
            got,
        });
    }
    let problem = Problem::new(spec, u0.grid())?;
    let infinity = problem.at_infinity();
    let reference = problem.energy(u0)?.total + infinity.energy(w0)?.total;
    n_list
        .par_iter()
        .map(|&n| {
            let (glued, o) = glue_states(u0, w0, n, alpha)?;
            let e = problem.energy(&glued)?.total;
            Ok(GlueLedger {
                n,
                separation: n as f64 * u0.grid().spacing(),
                kappa1: o.kappa[0],
                kappa2: o.kappa[1],
                tau1: o.tau[0],
                tau2: o.tau[1],
                glued_energy: e,
                reference_energy: reference,
                gap: e - reference,
            })
        })
        .collect()
}
