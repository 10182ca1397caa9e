//! Brute-force checks of the interaction inequalities and searches for the
//! smallest constants that make them hold.
//!
//! Every inequality here is homogeneous, so scans run on the reduced
//! variables with the remaining ones set to 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("exponent p = {0} must be positive")]
    BadExponent(f64),
    #[error("η = {eta} must lie in (0, p) with p = {p}")]
    BadEta { p: f64, eta: f64 },
    #[error("scan needs x_max > 0 and at least 2 samples")]
    BadScan,
    #[error("no admissible constant found below {0}")]
    NoUpperBracket(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    L34i,
    L34ii,
    Elementary,
}

/// Scan settings: `samples` log-spaced points on `[1e-6, x_max]` plus 0,
/// per reduced variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub x_max: f64,
    pub samples: usize,
}

impl Default for Scan {
    fn default() -> Self {
        Self {
            x_max: 100.0,
            samples: 1000,
        }
    }
}

impl Scan {
    pub const LOWER: f64 = 1e-6;

    pub fn points(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(self.samples + 1);
        pts.push(0.0);
        let (lo, hi) = (Self::LOWER.ln(), self.x_max.ln());
        let last = (self.samples - 1) as f64;
        pts.extend((0..self.samples).map(|k| (lo + (hi - lo) * k as f64 / last).exp()));
        pts
    }

    fn check(&self) -> Result<(), InequalityError> {
        if self.x_max > Self::LOWER && self.samples >= 2 {
            Ok(())
        } else {
            Err(InequalityError::BadScan)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationPoint {
    pub x: f64,
    pub y: f64,
    pub defect: f64,
}

/// Stored violations are capped; `violation_count` is always exact.
pub const MAX_STORED_VIOLATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub which: Which,
    pub p: f64,
    pub eta: Option<f64>,
    pub constant_tested: f64,
    /// Smallest constant that would clear every scanned point.
    pub min_constant_estimate: f64,
    pub x_max: f64,
    pub samples: usize,
    pub points_checked: usize,
    pub violation_count: usize,
    pub violations: Vec<ViolationPoint>,
}

impl InequalityReport {
    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }

    pub fn violations_csv(&self) -> String {
        let mut out = String::from("x,y,defect\n");
        for v in &self.violations {
            out.push_str(&format!("{:?},{:?},{:?}\n", v.x, v.y, v.defect));
        }
        out
    }
}

fn slack(lhs: f64) -> f64 {
    1e-12 * lhs.abs().max(1.0)
}

fn check_p(p: f64) -> Result<(), InequalityError> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(InequalityError::BadExponent(p))
    }
}

fn check_eta(p: f64, eta: f64) -> Result<(), InequalityError> {
    check_p(p)?;
    if eta > 0.0 && eta < p {
        Ok(())
    } else {
        Err(InequalityError::BadEta { p, eta })
    }
}

/// `(a+b)^{2p+2} − [a^{2p+2} + b^{2p+2} + (2p+2)(a^{2p+1}b + ab^{2p+1}) − C a^{p+1}b^{p+1}]`.
pub fn defect_34i(p: f64, c: f64, a: f64, b: f64) -> f64 {
    let q = 2.0 * p + 2.0;
    let lhs = (a + b).powf(q);
    let rhs = a.powf(q) + b.powf(q) + q * (a.powf(q - 1.0) * b + a * b.powf(q - 1.0))
        - c * (a * b).powf(p + 1.0);
    lhs - rhs
}

/// Defect of the four-variable interaction inequality at constant `C`.
pub fn defect_34ii(p: f64, eta: f64, c: f64, a1: f64, a2: f64, b1: f64, b2: f64) -> f64 {
    let q = p + 1.0;
    let lhs = (a1 + b1).powf(q) * (a2 + b2).powf(q);
    let rhs = (a1 * a2).powf(q)
        + (b1 * b2).powf(q)
        + q * (a1.powf(p) * a2.powf(q) * b1 + a1.powf(q) * a2.powf(p) * b2 + a2 * b1.powf(q) * b2.powf(p))
        - c * (a1.powf(p - eta) * a2.powf(q) * b1.powf(1.0 + eta)
            + a1.powf(1.0 + eta) * b2.powf(q) * b1.powf(p - eta));
    lhs - rhs
}

/// Reduced form with `b₁ = b₂ = 1`, split as `f₀(x,y) + C·g(x,y)` with `g ≥ 0`.
fn reduced_34ii_parts(p: f64, eta: f64, x: f64, y: f64) -> (f64, f64, f64) {
    let q = p + 1.0;
    let lhs = (x + 1.0).powf(q) * (y + 1.0).powf(q);
    let f0 = lhs
        - (x * y).powf(q)
        - 1.0
        - q * (x.powf(p) * y.powf(q) + x.powf(q) * y.powf(p) + y);
    let g = x.powf(p - eta) * y.powf(q) + x.powf(1.0 + eta);
    (f0, g, lhs)
}

/// The reduced function `f(x, y)` at constant `C`.
pub fn reduced_34ii(p: f64, eta: f64, c: f64, x: f64, y: f64) -> f64 {
    let (f0, g, _) = reduced_34ii_parts(p, eta, x, y);
    f0 + c * g
}

struct Tally {
    count: usize,
    stored: Vec<ViolationPoint>,
    required: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            count: 0,
            stored: Vec::new(),
            required: f64::NEG_INFINITY,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.count += other.count;
        let room = MAX_STORED_VIOLATIONS - self.stored.len();
        self.stored.extend(other.stored.into_iter().take(room));
        self.required = self.required.max(other.required);
        self
    }

    fn push(&mut self, v: ViolationPoint) {
        self.count += 1;
        if self.stored.len() < MAX_STORED_VIOLATIONS {
            self.stored.push(v);
        }
    }
}

/// One scan point of a constant-linear inequality: `defect = f0 + C g`.
fn tally_point(t: &mut Tally, x: f64, y: f64, f0: f64, g: f64, lhs: f64, c: f64) {
    let tol = slack(lhs);
    let defect = f0 + c * g;
    if defect < -tol {
        t.push(ViolationPoint { x, y, defect });
    }
    if g > 0.0 {
        t.required = t.required.max(-(f0 + tol) / g);
    }
}

fn scan_34i(p: f64, c: f64, pts: &[(f64, f64)]) -> Tally {
    pts.par_iter()
        .fold(Tally::new, |mut t, &(a, b)| {
            let lhs = (a + b).powf(2.0 * p + 2.0);
            let f0 = defect_34i(p, 0.0, a, b);
            let g = (a * b).powf(p + 1.0);
            tally_point(&mut t, a, b, f0, g, lhs, c);
            t
        })
        .reduce(Tally::new, Tally::merge)
}

fn scan_34ii(p: f64, eta: f64, c: f64, pts: &[(f64, f64)]) -> Tally {
    pts.par_iter()
        .fold(Tally::new, |mut t, &(x, y)| {
            let (f0, g, lhs) = reduced_34ii_parts(p, eta, x, y);
            tally_point(&mut t, x, y, f0, g, lhs, c);
            t
        })
        .reduce(Tally::new, Tally::merge)
}

fn pairs_34i(a_max: f64, samples: usize) -> Vec<(f64, f64)> {
    let grid = Scan {
        x_max: a_max,
        samples,
    }
    .points();
    grid.iter()
        .map(|&a| (a, 1.0))
        .chain(grid.iter().map(|&b| (1.0, b)))
        .collect()
}

fn pairs_34ii(scan: &Scan) -> Vec<(f64, f64)> {
    let grid = scan.points();
    grid.iter()
        .flat_map(|&x| grid.iter().map(move |&y| (x, y)))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn report(
    which: Which,
    p: f64,
    eta: Option<f64>,
    c: f64,
    x_max: f64,
    samples: usize,
    points: usize,
    t: Tally,
) -> InequalityReport {
    InequalityReport {
        which,
        p,
        eta,
        constant_tested: c,
        min_constant_estimate: t.required,
        x_max,
        samples,
        points_checked: points,
        violation_count: t.count,
        violations: t.stored,
    }
}

/// Scans `b = 1, a ∈ {0} ∪ [1e-6, a_max]` and the mirrored range `a = 1`.
pub fn check_lemma34i(p: f64, c: f64, a_max: f64, samples: usize) -> Result<InequalityReport, InequalityError> {
    check_p(p)?;
    Scan { x_max: a_max, samples }.check()?;
    let pts = pairs_34i(a_max, samples);
    let t = scan_34i(p, c, &pts);
    Ok(report(Which::L34i, p, None, c, a_max, samples, pts.len(), t))
}

/// Scans the reduced function on the product grid `scan × scan`.
pub fn check_lemma34ii(p: f64, eta: f64, c: f64, scan: &Scan) -> Result<InequalityReport, InequalityError> {
    check_eta(p, eta)?;
    scan.check()?;
    let pts = pairs_34ii(scan);
    let t = scan_34ii(p, eta, c, &pts);
    Ok(report(Which::L34ii, p, Some(eta), c, scan.x_max, scan.samples, pts.len(), t))
}

/// Checks `a^{p+1} + (p+1)a^p b ≤ (a+b)^{p+1} ≤ a^{p+1} + (p+1)(a+b)^p b` on
/// `b = 1` over the scan and at `b = 0`. The recorded defect is the smaller
/// of the two margins.
pub fn check_elementary_p3(p: f64, scan: &Scan) -> Result<InequalityReport, InequalityError> {
    check_p(p)?;
    scan.check()?;
    let grid = scan.points();
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .map(|&a| (a, 1.0))
        .chain(grid.iter().map(|&a| (a, 0.0)))
        .collect();
    Ok(elementary_on(p, scan, &pts))
}

fn elementary_margin(p: f64, a: f64, b: f64) -> (f64, f64) {
    let q = p + 1.0;
    let mid = (a + b).powf(q);
    let lower = mid - (a.powf(q) + q * a.powf(p) * b);
    let upper = a.powf(q) + q * (a + b).powf(p) * b - mid;
    (lower.min(upper), mid)
}

fn elementary_on(p: f64, scan: &Scan, pts: &[(f64, f64)]) -> InequalityReport {
    let t = pts
        .par_iter()
        .fold(Tally::new, |mut t, &(a, b)| {
            let (margin, mid) = elementary_margin(p, a, b);
            if margin < -slack(mid) {
                t.push(ViolationPoint {
                    x: a,
                    y: b,
                    defect: margin,
                });
            }
            t
        })
        .reduce(Tally::new, Tally::merge);
    let mut r = report(Which::Elementary, p, None, f64::NAN, scan.x_max, scan.samples, pts.len(), t);
    r.min_constant_estimate = f64::NAN;
    r
}

/// Elementary bounds at `draws` random ratios `a/b`, log-uniform on
/// `[1e-6, 1e6]`.
pub fn check_elementary_random(p: f64, draws: usize, seed: u64) -> Result<InequalityReport, InequalityError> {
    check_p(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 1e6f64.ln();
    let pts: Vec<(f64, f64)> = (0..draws)
        .map(|_| (rng.gen_range(-span..span).exp(), 1.0))
        .collect();
    let scan = Scan {
        x_max: 1e6,
        samples: draws,
    };
    Ok(elementary_on(p, &scan, &pts))
}

/// Random points for revalidation: log-uniform on `[1e-6, x_max]`, with a
/// small share pinned to 0 so the axes are revisited.
fn random_points(n: usize, x_max: f64, seed: u64, pairs: bool) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (Scan::LOWER.ln(), x_max.ln());
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.01) {
            0.0
        } else {
            rng.gen_range(lo..hi).exp()
        }
    };
    (0..n)
        .map(|_| {
            let x = draw(&mut rng);
            let y = if pairs { draw(&mut rng) } else { 1.0 };
            (x, y)
        })
        .collect()
}

/// 34(i) at random points `(a, 1)` and `(1, b)`.
pub fn revalidate_34i(p: f64, c: f64, a_max: f64, draws: usize, seed: u64) -> Result<InequalityReport, InequalityError> {
    check_p(p)?;
    let pts: Vec<(f64, f64)> = random_points(draws, a_max, seed, false)
        .into_iter()
        .enumerate()
        .map(|(k, (a, _))| if k % 2 == 0 { (a, 1.0) } else { (1.0, a) })
        .collect();
    let t = scan_34i(p, c, &pts);
    Ok(report(Which::L34i, p, None, c, a_max, draws, pts.len(), t))
}

/// 34(ii) at random points of `[0, x_max]²`.
pub fn revalidate_34ii(p: f64, eta: f64, c: f64, x_max: f64, draws: usize, seed: u64) -> Result<InequalityReport, InequalityError> {
    check_eta(p, eta)?;
    let pts = random_points(draws, x_max, seed, true);
    let t = scan_34ii(p, eta, c, &pts);
    Ok(report(Which::L34ii, p, Some(eta), c, x_max, draws, pts.len(), t))
}

/// Brackets the admissible constant geometrically from both sides, then
/// bisects until the bracket is narrower than `resolution`. Returns the upper
/// (admissible) end.
fn bisect_constant(resolution: f64, holds: impl Fn(f64) -> bool) -> Result<f64, InequalityError> {
    const LIMIT: f64 = 1e300;
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
        if hi > LIMIT {
            return Err(InequalityError::NoUpperBracket(LIMIT));
        }
    }
    let mut step = 1.0;
    let mut lo = hi - step;
    while holds(lo) {
        hi = lo;
        step *= 2.0;
        lo = hi - step;
        if -lo > LIMIT {
            return Ok(hi);
        }
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Rounds of "bisect on the fixed scan, revalidate on random points, add any
/// violators to the scan".
const REFINE_ROUNDS: u64 = 8;
const REVALIDATION_DRAWS: usize = 100_000;

/// Smallest `C` (within `resolution`) for which 34(i) holds on the scan with
/// `b = 1, a ≤ a_max`, refined until it also survives a random scan.
pub fn min_constant_34i(p: f64, resolution: f64, a_max: f64, samples: usize) -> Result<f64, InequalityError> {
    check_p(p)?;
    Scan { x_max: a_max, samples }.check()?;
    let mut pts = pairs_34i(a_max, samples);
    for round in 0..REFINE_ROUNDS {
        let c = bisect_constant(resolution, |c| scan_34i(p, c, &pts).count == 0)?;
        let fresh = revalidate_34i(p, c, a_max, REVALIDATION_DRAWS, 0x5eed + round)?;
        if fresh.holds() {
            return Ok(c);
        }
        pts.extend(fresh.violations.iter().map(|v| (v.x, v.y)));
    }
    bisect_constant(resolution, |c| scan_34i(p, c, &pts).count == 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinConstant34ii {
    pub p: f64,
    pub eta: f64,
    pub estimate: f64,
    pub resolution: f64,
    pub proof_constant: f64,
    pub x_max: f64,
    pub samples: usize,
}

/// Smallest `C` (within `resolution`) for which the reduced 34(ii) function is
/// nonnegative on the scan, refined against random scans. Also carries the
/// constant produced by the existence argument.
pub fn min_constant_34ii(p: f64, eta: f64, resolution: f64, scan: &Scan) -> Result<MinConstant34ii, InequalityError> {
    check_eta(p, eta)?;
    scan.check()?;
    let mut pts = pairs_34ii(scan);
    let mut estimate = None;
    for round in 0..REFINE_ROUNDS {
        let c = bisect_constant(resolution, |c| scan_34ii(p, eta, c, &pts).count == 0)?;
        let fresh = revalidate_34ii(p, eta, c, scan.x_max, REVALIDATION_DRAWS, 0x5eed + round)?;
        if fresh.holds() {
            estimate = Some(c);
            break;
        }
        pts.extend(fresh.violations.iter().map(|v| (v.x, v.y)));
    }
    let estimate = match estimate {
        Some(c) => c,
        None => bisect_constant(resolution, |c| scan_34ii(p, eta, c, &pts).count == 0)?,
    };
    Ok(MinConstant34ii {
        p,
        eta,
        estimate,
        resolution,
        proof_constant: proof_sufficient_constant_34ii(p, eta)?,
        x_max: scan.x_max,
        samples: scan.samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofConstants {
    pub x1: f64,
    pub c_x1: f64,
    pub y1: f64,
    pub constant: f64,
}

/// Constants of the three-region existence argument, with `c_{x₁}` taken as
/// large as allowed: `1 − (1 + x₁)^{−(p+1)}`.
pub fn proof_constants_34ii(p: f64, eta: f64) -> Result<ProofConstants, InequalityError> {
    check_eta(p, eta)?;
    let q = p + 1.0;
    let x1 = (1.0 / (2.0 * q))
        .powf(1.0 / p)
        .min(((p - eta) / (p * q)).powf(1.0 / eta));
    let c_x1 = 1.0 - (1.0 + x1).powf(-q);
    let y1 = (c_x1 / q)
        .powf(1.0 / p)
        .min((q / (p + 2.0)).powf(1.0 / p))
        .min(x1.powf(1.0 + eta) / q);
    let constant = 1f64
        .max(2.0 / (x1.powf(p - eta) * y1.powf(q)))
        .max(2.0 * q / (x1.powf(p - eta) * y1.powf(p)));
    Ok(ProofConstants {
        x1,
        c_x1,
        y1,
        constant,
    })
}

pub fn proof_sufficient_constant_34ii(p: f64, eta: f64) -> Result<f64, InequalityError> {
    Ok(proof_constants_34ii(p, eta)?.constant)
}

/// `η` used when the inequality feeds the interaction estimate: half the
/// coupling exponent.
pub fn default_eta(p3: f64) -> f64 {
    0.5 * p3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaProbe {
    pub eta: f64,
    pub estimate: f64,
}

/// Estimates across increasing `η`, plus the indices `k` where the estimate
/// at `η_k` exceeds the one at `η_{k+1}`. Nothing is asserted.
pub fn eta_monotonicity(p: f64, etas: &[f64], resolution: f64, scan: &Scan) -> Result<(Vec<EtaProbe>, Vec<usize>), InequalityError> {
    let mut sorted = etas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let probes = sorted
        .iter()
        .map(|&eta| {
            Ok(EtaProbe {
                eta,
                estimate: min_constant_34ii(p, eta, resolution, scan)?.estimate,
            })
        })
        .collect::<Result<Vec<_>, InequalityError>>()?;
    let exceptions = probes
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].estimate > w[1].estimate)
        .map(|(k, _)| k)
        .collect();
    Ok((probes, exceptions))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_case_is_six_a2b2() {
        for &(a, b) in &[(0.3, 2.0), (1.0, 1.0), (5.0, 0.1)] {
            let d = defect_34i(1.0, 0.0, a, b);
            assert!((d - 6.0 * a * a * b * b).abs() < 1e-10 * (a + b).powi(4));
        }
        assert!(check_lemma34i(1.0, 0.0, 1e3, 2000).unwrap().holds());
        assert!(!check_lemma34i(1.0, -6.01, 1e3, 2000).unwrap().holds());
    }

    #[test]
    fn a_zero_is_equality() {
        for p in [0.3, 0.5, 1.0, 2.0] {
            assert!(defect_34i(p, 0.0, 0.0, 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn min_constant_quartic() {
        let c = min_constant_34i(1.0, 1e-3, 1e3, 2000).unwrap();
        assert!((c + 6.0).abs() <= 1e-3, "{c}");
    }

    #[test]
    fn cubic_case_has_zero_infimum() {
        // (a+b)³ expands exactly: the defect is C·(ab)^{3/2}.
        let c = min_constant_34i(0.5, 1e-6, 1e3, 2000).unwrap();
        assert!(c.abs() <= 1e-6, "{c}");
        let c2 = min_constant_34i(0.5, 1e-6, 2e3, 2000).unwrap();
        assert!((c - c2).abs() <= 2e-6);
    }

    #[test]
    fn brackets_terminate() {
        for p in [0.3, 0.5, 1.0, 1.5, 2.0] {
            let c = min_constant_34i(p, 1e-3, 1e3, 500).unwrap();
            assert!(c.is_finite());
            assert!(revalidate_34i(p, c, 1e3, 100_000, 99).unwrap().holds());
        }
    }

    #[test]
    fn reduced_matches_full_form() {
        let (p, eta) = (0.8, 0.4);
        for &(a1, a2, b1, b2) in &[(0.5, 2.0, 1.5, 0.7), (3.0, 0.1, 0.2, 4.0)] {
            let full = defect_34ii(p, eta, 2.5, a1, a2, b1, b2);
            let red = reduced_34ii(p, eta, 2.5, a1 / b1, a2 / b2) * (b1 * b2).powf(p + 1.0);
            assert!((full - red).abs() < 1e-10 * full.abs().max(1.0));
        }
    }

    #[test]
    fn rescue_term_needed_only_for_small_p() {
        let scan = Scan {
            x_max: 100.0,
            samples: 200,
        };
        let weak = check_lemma34ii(0.3, 0.15, 0.0, &scan).unwrap();
        assert!(weak.violation_count > 0);
        assert!(weak.violations.iter().all(|v| v.x > 0.0));
        assert!(weak.violations.iter().any(|v| v.x < 0.2 && v.y > 1.0));
        let strong = check_lemma34ii(0.8, 0.4, 0.0, &scan).unwrap();
        assert!(strong.holds());
        assert!(strong.min_constant_estimate < 0.0);
    }

    #[test]
    fn positive_constant_is_stable() {
        let est = |x_max| {
            min_constant_34ii(0.4, 0.2, 1e-6, &Scan { x_max, samples: 400 })
                .unwrap()
                .estimate
        };
        let (a, b) = (est(100.0), est(200.0));
        assert!(a > 0.1 && ((a - b) / a).abs() < 0.02, "{a} {b}");
    }

    #[test]
    fn proof_constant_clears_scan() {
        let scan = Scan {
            x_max: 100.0,
            samples: 300,
        };
        for (p, eta) in [(0.8, 0.4), (0.5, 0.25), (1.5, 0.75)] {
            let c = proof_sufficient_constant_34ii(p, eta).unwrap();
            assert!(check_lemma34ii(p, eta, c, &scan).unwrap().holds());
        }
    }

    #[test]
    fn eta_range_enforced() {
        let s = Scan::default();
        assert!(check_lemma34ii(0.8, 0.8, 1.0, &s).is_err());
        assert!(check_lemma34ii(0.8, 0.0, 1.0, &s).is_err());
    }

    #[test]
    fn elementary_bounds() {
        let r = check_elementary_p3(0.5, &Scan::default()).unwrap();
        assert!(r.holds());
        assert!(check_elementary_random(0.5, 100_000, 3).unwrap().holds());
        let (m, _) = elementary_margin(0.5, 2.0, 0.0);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn violations_csv_header() {
        let r = check_lemma34i(1.0, -7.0, 10.0, 20).unwrap();
        let csv = r.violations_csv();
        assert!(csv.starts_with("x,y,defect\n"));
        assert_eq!(csv.lines().count(), 1 + r.violations.len());
    }
}
