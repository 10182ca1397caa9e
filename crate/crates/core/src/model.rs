//! Problem data: exponents, couplings, masses and the two potentials.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, Grid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("tabulated potential has {got} samples, grid has {expected}")]
    TabulatedLength { expected: usize, got: usize },
    #[error("potential has no finite limit at infinity")]
    NoFiniteLimit,
    #[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// One failed hypothesis, tagged with the hypothesis it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub hypothesis: String,
    pub message: String,
}

impl Violation {
    fn new(hypothesis: &str, message: impl Into<String>) -> Self {
        Self {
            hypothesis: hypothesis.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.hypothesis, self.message)
    }
}

/// External potential acting on one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `baseline - depth * exp(-|x - center|² / width²)`.
    GaussianWell {
        depth: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        baseline: f64,
    },
    /// `offset + stiffness * |x - center|²`.
    HarmonicTrap {
        offset: f64,
        stiffness: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Node values in grid order.
    Tabulated { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn gaussian_well(depth: f64, width: f64) -> Self {
        Self::GaussianWell {
            depth,
            width,
            center: [0.0, 0.0],
            baseline: 0.0,
        }
    }

    pub fn harmonic_trap(offset: f64, stiffness: f64) -> Self {
        Self::HarmonicTrap {
            offset,
            stiffness,
            center: [0.0, 0.0],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// Pointwise value; `None` for tabulated data.
    pub fn eval(&self, x: [f64; 2]) -> Option<f64> {
        let dist_sq = |c: [f64; 2]| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        match self {
            Self::Zero => Some(0.0),
            Self::Constant { value } => Some(*value),
            Self::GaussianWell {
                depth,
                width,
                center,
                baseline,
            } => Some(baseline - depth * (-dist_sq(*center) / (width * width)).exp()),
            Self::HarmonicTrap {
                offset,
                stiffness,
                center,
            } => Some(offset + stiffness * dist_sq(*center)),
            Self::Tabulated { .. } => None,
        }
    }

    /// Whether the potential is of the bounded, nonpositive, vanishing type.
    fn is_v1_type(&self) -> bool {
        match self {
            Self::Zero | Self::Tabulated { .. } => true,
            Self::GaussianWell {
                depth,
                width,
                baseline,
                ..
            } => *depth > 0.0 && *width > 0.0 && *baseline == 0.0,
            _ => false,
        }
    }
}

/// Which pair of potential hypotheses the problem falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Both potentials bounded, nonpositive, vanishing at infinity.
    BothBounded,
    /// First potential bounded, second a trap with infimum 1.
    Trapping,
}

/// Full data of the two-constraint minimization problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub v1: PotentialSpec,
    pub v2: PotentialSpec,
    pub regime: Regime,
}

impl ProblemSpec {
    /// Potential-free problem with equal data in both components.
    pub fn symmetric(dim: usize, p: f64, mu: f64, beta: f64, alpha: f64) -> Self {
        Self {
            dim,
            p1: p,
            p2: p,
            p3: p,
            mu1: mu,
            mu2: mu,
            beta,
            alpha1: alpha,
            alpha2: alpha,
            v1: PotentialSpec::Zero,
            v2: PotentialSpec::Zero,
            regime: Regime::BothBounded,
        }
    }

    pub fn with_potentials(mut self, v1: PotentialSpec, v2: PotentialSpec) -> Self {
        self.v1 = v1;
        self.v2 = v2;
        self
    }

    pub fn with_masses(mut self, alpha1: f64, alpha2: f64) -> Self {
        self.alpha1 = alpha1;
        self.alpha2 = alpha2;
        self
    }

    pub fn masses(&self) -> [f64; 2] {
        [self.alpha1, self.alpha2]
    }

    pub fn exponent(&self, i: usize) -> f64 {
        [self.p1, self.p2][i]
    }

    pub fn coupling(&self, i: usize) -> f64 {
        [self.mu1, self.mu2][i]
    }

    pub fn potential(&self, i: usize) -> &PotentialSpec {
        [&self.v1, &self.v2][i]
    }

    /// Same problem with both potentials removed.
    pub fn at_infinity(&self) -> Self {
        let mut s = self.clone();
        s.v1 = PotentialSpec::Zero;
        s.v2 = PotentialSpec::Zero;
        s.regime = Regime::BothBounded;
        s
    }
}

/// Checks the hypotheses that do not depend on a grid.
pub fn validate(spec: &ProblemSpec) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if !(1..=2).contains(&spec.dim) {
        out.push(Violation::new(
            "(dim)",
            format!("dimension must be 1 or 2, got {}", spec.dim),
        ));
    }
    let cap = 2.0 / spec.dim.max(1) as f64;
    for (name, p) in [("p₁", spec.p1), ("p₂", spec.p2), ("p₃", spec.p3)] {
        if !(p > 0.0) {
            out.push(Violation::new("(p1)", format!("{name} must be > 0, got {p}")));
        } else if !(p < cap) {
            out.push(Violation::new(
                "(p1)",
                format!("{name} must be < 2/N = {cap}"),
            ));
        }
    }
    for (name, v) in [("μ₁", spec.mu1), ("μ₂", spec.mu2), ("β", spec.beta)] {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Violation::new("(coupling)", format!("{name} > 0 required")));
        }
    }
    for (name, v) in [("α₁", spec.alpha1), ("α₂", spec.alpha2)] {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Violation::new("(mass)", format!("{name} > 0 required")));
        }
    }
    match spec.regime {
        Regime::BothBounded => {
            for (name, v) in [("V₁", &spec.v1), ("V₂", &spec.v2)] {
                if !v.is_v1_type() {
                    out.push(Violation::new(
                        "(V1)",
                        format!("{name} must be nonpositive and vanish at infinity"),
                    ));
                }
            }
        }
        Regime::Trapping => {
            if !spec.v1.is_v1_type() {
                out.push(Violation::new(
                    "(V1)",
                    "V₁ must be nonpositive and vanish at infinity",
                ));
            }
            match spec.v2 {
                PotentialSpec::HarmonicTrap {
                    offset, stiffness, ..
                } => {
                    if offset != 1.0 {
                        out.push(Violation::new("(V2)", "inf V₂ must equal 1"));
                    }
                    if !(stiffness > 0.0) {
                        out.push(Violation::new("(V2)", "V₂ must grow to infinity"));
                    }
                }
                _ => out.push(Violation::new("(V2)", "V₂ must be a harmonic trap")),
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Grid-level checks: sampled sign conditions and truncation consistency.
pub fn validate_on_grid(spec: &ProblemSpec, grid: &Grid) -> Result<(), Vec<Violation>> {
    let mut out = match validate(spec) {
        Ok(()) => Vec::new(),
        Err(v) => v,
    };
    if grid.dim() != spec.dim {
        out.push(Violation::new(
            "(dim)",
            format!("grid is {}D, problem is {}D", grid.dim(), spec.dim),
        ));
        return Err(out);
    }
    let boundary = grid.boundary_nodes();
    for (i, name) in [(0, "V₁"), (1, "V₂")] {
        let sampled = match sample_potential(spec.potential(i), grid) {
            Ok(f) => f.re(),
            Err(e) => {
                out.push(Violation::new("(grid)", format!("{name}: {e}")));
                continue;
            }
        };
        let bounded = i == 0 || spec.regime == Regime::BothBounded;
        if bounded {
            if sampled.iter().any(|&v| v > 0.0) {
                out.push(Violation::new("(V1)", format!("{name} must be ≤ 0 at every node")));
            }
            if boundary.iter().any(|&b| sampled[b].abs() >= 1e-10) {
                out.push(Violation::new(
                    "(V1)",
                    format!("{name} does not vanish at the box boundary"),
                ));
            }
        } else if sampled.iter().any(|&v| v < 1.0) {
            out.push(Violation::new("(V2)", format!("{name} must be ≥ 1 at every node")));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Whether some sampled potential differs from its boundary value by more than 1e-8.
pub fn has_nonconstant_potential(spec: &ProblemSpec, grid: &Grid) -> Result<bool, ModelError> {
    let corner = 0;
    for i in 0..2 {
        let v = sample_potential(spec.potential(i), grid)?.re();
        if v.iter().any(|x| (x - v[corner]).abs() > 1e-8) {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn sample_potential(potential: &PotentialSpec, grid: &Grid) -> Result<Field, ModelError> {
    match potential {
        PotentialSpec::Tabulated { values } => {
            if values.len() != grid.len() {
                return Err(ModelError::TabulatedLength {
                    expected: grid.len(),
                    got: values.len(),
                });
            }
            Ok(Field::from_real(grid, values.clone()).expect("length checked"))
        }
        p => Ok(Field::from_fn(grid, |x| p.eval(x).expect("analytic potential"))),
    }
}

/// Splits a bounded potential into its vanishing part and its limit `b`.
pub fn normalize_bounded_potential(
    potential: &PotentialSpec,
) -> Result<(PotentialSpec, f64), ModelError> {
    match potential {
        PotentialSpec::Zero => Ok((PotentialSpec::Zero, 0.0)),
        PotentialSpec::Constant { value } => Ok((PotentialSpec::Zero, *value)),
        PotentialSpec::GaussianWell {
            depth,
            width,
            center,
            baseline,
        } => Ok((
            PotentialSpec::GaussianWell {
                depth: *depth,
                width: *width,
                center: *center,
                baseline: 0.0,
            },
            *baseline,
        )),
        PotentialSpec::HarmonicTrap { .. } | PotentialSpec::Tabulated { .. } => {
            Err(ModelError::NoFiniteLimit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wells_1d() -> ProblemSpec {
        ProblemSpec::symmetric(1, 1.0, 1.0, 1.0, 1.0).with_potentials(
            PotentialSpec::gaussian_well(1.0, 1.0),
            PotentialSpec::gaussian_well(1.0, 1.0),
        )
    }

    #[test]
    fn accepts_benchmark() {
        assert_eq!(validate(&wells_1d()), Ok(()));
    }

    #[test]
    fn p1_is_strict() {
        let mut s = wells_1d();
        s.dim = 2;
        s.p2 = 0.5;
        s.p3 = 0.5;
        let v = validate(&s).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "(p1): p₁ must be < 2/N = 1");
    }

    #[test]
    fn beta_must_be_positive() {
        let mut s = wells_1d();
        s.beta = 0.0;
        let v = validate(&s).unwrap_err();
        assert!(v.iter().any(|v| v.message == "β > 0 required"));
    }

    #[test]
    fn regime_typing() {
        let mut s = wells_1d();
        s.v2 = PotentialSpec::harmonic_trap(1.0, 0.1);
        assert!(validate(&s).is_err());
        s.regime = Regime::Trapping;
        assert_eq!(validate(&s), Ok(()));
        s.v2 = PotentialSpec::harmonic_trap(0.5, 0.1);
        assert_eq!(validate(&s).unwrap_err()[0].hypothesis, "(V2)");
    }

    #[test]
    fn sample_examples() {
        let g = Grid::new(1, 64, 16.0).unwrap();
        let z = sample_potential(&PotentialSpec::Zero, &g).unwrap();
        assert!(z.is_zero());
        let w = sample_potential(&PotentialSpec::gaussian_well(1.0, 1.0), &g).unwrap();
        assert_eq!(w.values()[g.origin_index()].re, -1.0);
        let t = sample_potential(&PotentialSpec::harmonic_trap(1.0, 1.0), &g).unwrap();
        let min = t.re().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(min, 1.0);
        assert_eq!(t.values()[g.origin_index()].re, 1.0);
        let bad = PotentialSpec::Tabulated { values: vec![0.0; 3] };
        assert!(matches!(
            sample_potential(&bad, &g),
            Err(ModelError::TabulatedLength { .. })
        ));
    }

    #[test]
    fn grid_checks() {
        let g = Grid::new(1, 512, 64.0).unwrap();
        assert_eq!(validate_on_grid(&wells_1d(), &g), Ok(()));
        let mut wide = wells_1d();
        wide.v1 = PotentialSpec::gaussian_well(1.0, 20.0);
        assert!(validate_on_grid(&wide, &g).is_err());
        let mut trap = wells_1d();
        trap.regime = Regime::Trapping;
        trap.v2 = PotentialSpec::harmonic_trap(1.0, 0.05);
        assert_eq!(validate_on_grid(&trap, &g), Ok(()));
        assert!(has_nonconstant_potential(&trap, &g).unwrap());
        assert!(!has_nonconstant_potential(&wells_1d().at_infinity(), &g).unwrap());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_bounded_potential(&PotentialSpec::Constant { value: 2.5 }),
            Ok((PotentialSpec::Zero, 2.5))
        );
        let shifted = PotentialSpec::GaussianWell {
            depth: 3.0,
            width: 1.0,
            center: [0.0, 0.0],
            baseline: 5.0,
        };
        assert_eq!(
            normalize_bounded_potential(&shifted),
            Ok((PotentialSpec::gaussian_well(3.0, 1.0), 5.0))
        );
        assert_eq!(
            normalize_bounded_potential(&PotentialSpec::harmonic_trap(1.0, 1.0)),
            Err(ModelError::NoFiniteLimit)
        );
    }

    #[test]
    fn json_field_names() {
        let v = serde_json::to_value(wells_1d()).unwrap();
        assert_eq!(v["v1"]["kind"], "gaussian_well");
        assert_eq!(v["regime"], "both_bounded");
        let back: ProblemSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, wells_1d());
    }
}
