//! Periodic Cartesian grids, sampled fields and spectral operators.
//!
//! The whole space is replaced by the box `[-L/2, L/2)^N` with periodic
//! boundary conditions. Nodes sit at `x_j = (j - n/2) h`, so the origin is
//! always a node and the reflection `x -> -x` permutes the node set. Node
//! ordering is lexicographic with the first axis fastest: in 2D the node
//! `(i, j)` lives at `i + n * j`.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("unsupported dimension {0}, expected 1 or 2")]
    UnsupportedDim(usize),
    #[error("points per dimension must be a power of two >= 8, got {0}")]
    BadPointCount(usize),
    #[error("box length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at node {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("shift has {got} axes, grid has {expected}")]
    ShiftRank { expected: usize, got: usize },
    #[error("malformed field dump: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

/// A uniform periodic grid on `[-L/2, L/2)^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_dim: usize,
    box_length: f64,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_dim: usize, box_length: f64) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::UnsupportedDim(dim));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(GridError::BadPointCount(points_per_dim));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(GridError::BadLength(box_length));
        }
        // Division by a power of two is exact, so spacing * n == L bit for bit.
        let spacing = box_length / points_per_dim as f64;
        Ok(Self {
            dim,
            points_per_dim,
            box_length,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes, `n^N`.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Index of the node at the origin.
    pub fn origin_index(&self) -> usize {
        let c = self.points_per_dim / 2;
        if self.dim == 1 {
            c
        } else {
            c + self.points_per_dim * c
        }
    }

    /// Per-axis integer indices of a node.
    pub fn axis_indices(&self, index: usize) -> [usize; 2] {
        let n = self.points_per_dim;
        if self.dim == 1 {
            [index, 0]
        } else {
            [index % n, index / n]
        }
    }

    pub fn index_of(&self, axes: [usize; 2]) -> usize {
        if self.dim == 1 {
            axes[0]
        } else {
            axes[0] + self.points_per_dim * axes[1]
        }
    }

    /// Coordinates of a node; the unused second entry is zero in 1D.
    pub fn coords(&self, index: usize) -> [f64; 2] {
        let half = (self.points_per_dim / 2) as f64;
        let [i, j] = self.axis_indices(index);
        let x = (i as f64 - half) * self.spacing;
        let y = if self.dim == 2 {
            (j as f64 - half) * self.spacing
        } else {
            0.0
        };
        [x, y]
    }

    pub fn radius(&self, index: usize) -> f64 {
        let [x, y] = self.coords(index);
        x.hypot(y)
    }

    /// Angular wavenumbers along one axis in FFT order,
    /// `(2 pi / L) * {0, 1, .., n/2 - 1, -n/2, .., -1}`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points_per_dim as isize;
        let base = 2.0 * std::f64::consts::PI / self.box_length;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j } else { j - n };
                base * m as f64
            })
            .collect()
    }

    /// `|k|^2` for every Fourier mode, same layout as the nodes.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        match self.dim {
            1 => k.iter().map(|k| k * k).collect(),
            _ => {
                let n = self.points_per_dim;
                let mut out = Vec::with_capacity(n * n);
                for ky in &k {
                    for kx in &k {
                        out.push(kx * kx + ky * ky);
                    }
                }
                out
            }
        }
    }

    /// Nodes that lie on the faces of the box (first index on some axis).
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.axis_indices(i)[..self.dim].iter().any(|&a| a == 0))
            .collect()
    }

    /// Evaluates a function of the node coordinates.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.coords(i))).collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}D grid, n = {}, L = {}, h = {}",
            self.dim, self.points_per_dim, self.box_length, self.spacing
        )
    }
}

/// Samples of a scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    real_valued: bool,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            real_valued: true,
        }
    }

    pub fn from_real(grid: &Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: *grid,
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            real_valued: true,
        })
    }

    pub fn from_complex(grid: &Grid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let real_valued = values.iter().all(|v| v.im == 0.0);
        Ok(Self {
            grid: *grid,
            values,
            real_valued,
        })
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: &Grid, f: F) -> Self {
        Self::from_real(grid, grid.sample(f)).expect("sample length matches grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.real_valued
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Real parts of the samples.
    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Applies a map to every sample; the real flag is recomputed.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let values: Vec<Complex64> = self.values.iter().map(|&v| f(v)).collect();
        let real_valued = values.iter().all(|v| v.im == 0.0);
        Self {
            grid: self.grid,
            values,
            real_valued,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn add(&self, other: &Field) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        let values: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            real_valued: self.real_valued && other.real_valued,
        })
    }

    /// `‖f‖²_{L²}`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `∫ |f|^q`.
    pub fn integral_abs_pow(&self, q: f64) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.norm().powf(q)).sum::<f64>()
    }

    /// `Re ⟨f, g⟩_{L²} = Re ∫ conj(f) g`.
    pub fn inner_re(&self, other: &Field) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .sum::<f64>())
    }

    /// Full complex inner product `∫ conj(f) g`.
    pub fn inner(&self, other: &Field) -> Result<Complex64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_volume())
    }

    /// Writes the `# dim,n,L` / `index,re,im` dump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), GridError> {
        let io = |e: std::io::Error| GridError::Io(e.to_string());
        writeln!(
            out,
            "# {},{},{:?}",
            self.grid.dim, self.grid.points_per_dim, self.grid.box_length
        )
        .map_err(io)?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{:?},{:?}", i, v.re, v.im).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, GridError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| GridError::Parse("empty input".into()))?
            .map_err(|e| GridError::Io(e.to_string()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| GridError::Parse("missing '#' header".into()))?;
        let parts: Vec<&str> = header.trim().split(',').collect();
        if parts.len() != 3 {
            return Err(GridError::Parse(format!("bad header '{header}'")));
        }
        let bad = |s: &str| GridError::Parse(format!("bad number '{s}'"));
        let dim: usize = parts[0].trim().parse().map_err(|_| bad(parts[0]))?;
        let n: usize = parts[1].trim().parse().map_err(|_| bad(parts[1]))?;
        let length: f64 = parts[2].trim().parse().map_err(|_| bad(parts[2]))?;
        let grid = Grid::new(dim, n, length)?;
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut seen = vec![false; grid.len()];
        for line in lines {
            let line = line.map_err(|e| GridError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(GridError::Parse(format!("bad row '{line}'")));
            }
            let idx: usize = cols[0].trim().parse().map_err(|_| bad(cols[0]))?;
            let re: f64 = cols[1].trim().parse().map_err(|_| bad(cols[1]))?;
            let im: f64 = cols[2].trim().parse().map_err(|_| bad(cols[2]))?;
            if idx >= grid.len() {
                return Err(GridError::Parse(format!("index {idx} out of range")));
            }
            values[idx] = Complex64::new(re, im);
            seen[idx] = true;
        }
        let got = seen.iter().filter(|s| **s).count();
        if got != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got,
            });
        }
        Field::from_complex(&grid, values)
    }
}

/// A pair of fields `(u₁, u₂)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    first: Field,
    second: Field,
}

impl State {
    pub fn new(first: Field, second: Field) -> Result<Self, GridError> {
        if first.grid != second.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(Self { first, second })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            first: Field::zeros(grid),
            second: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.first.grid
    }

    pub fn first(&self) -> &Field {
        &self.first
    }

    pub fn second(&self) -> &Field {
        &self.second
    }

    pub fn component(&self, i: usize) -> &Field {
        match i {
            0 => &self.first,
            1 => &self.second,
            _ => panic!("component index {i} out of range"),
        }
    }

    pub fn components(&self) -> [&Field; 2] {
        [&self.first, &self.second]
    }

    pub fn into_components(self) -> (Field, Field) {
        (self.first, self.second)
    }

    /// Pointwise moduli `(|u₁|, |u₂|)`.
    pub fn modulus(&self) -> Self {
        Self {
            first: self.first.map(|v| Complex64::new(v.norm(), 0.0)),
            second: self.second.map(|v| Complex64::new(v.norm(), 0.0)),
        }
    }

    /// `(e^{iθ₁} u₁, e^{iθ₂} u₂)`.
    pub fn rotate_phases(&self, theta1: f64, theta2: f64) -> Self {
        let (a, b) = (Complex64::from_polar(1.0, theta1), Complex64::from_polar(1.0, theta2));
        Self {
            first: self.first.map(|v| v * a),
            second: self.second.map(|v| v * b),
        }
    }

    pub fn translate(&self, offset: &[isize]) -> Result<Self, GridError> {
        Ok(Self {
            first: translate(&self.first, offset)?,
            second: translate(&self.second, offset)?,
        })
    }
}

/// Checks that every sample is finite and integrates with the rectangle rule.
pub fn integrate(grid: &Grid, values: &[f64]) -> Result<f64, GridError> {
    if values.len() != grid.len() {
        return Err(GridError::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(GridError::NonFinite(i));
    }
    Ok(grid.cell_volume() * values.iter().sum::<f64>())
}

/// Circular shift by whole cells: `out(x) = f(x - offset·h)`.
pub fn translate(field: &Field, offset: &[isize]) -> Result<Field, GridError> {
    let grid = field.grid;
    if offset.len() != grid.dim {
        return Err(GridError::ShiftRank {
            expected: grid.dim,
            got: offset.len(),
        });
    }
    let n = grid.points_per_dim as isize;
    let wrap = |i: usize, s: isize| (i as isize - s).rem_euclid(n) as usize;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (dst, out) in values.iter_mut().enumerate() {
        let [i, j] = grid.axis_indices(dst);
        let src = if grid.dim == 1 {
            wrap(i, offset[0])
        } else {
            grid.index_of([wrap(i, offset[0]), wrap(j, offset[1])])
        };
        *out = field.values[src];
    }
    Ok(Field {
        grid,
        values,
        real_valued: field.real_valued,
    })
}

/// Shell maxima of `|f|` in bins of width `h` around the origin.
///
/// Each entry is `(r, max)` where `r` is the radius of the node realizing the
/// shell maximum, so radii are nondecreasing. Shells beyond `L/2` are dropped.
pub fn radial_profile(field: &Field) -> Vec<(f64, f64)> {
    let grid = field.grid;
    let h = grid.spacing;
    let half = grid.box_length / 2.0;
    let bins = (half / h).round() as usize + 1;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; bins];
    for (i, v) in field.values.iter().enumerate() {
        let r = grid.radius(i);
        if r > half + 1e-12 * h {
            continue;
        }
        let b = ((r / h) + 0.5).floor() as usize;
        if b >= bins {
            continue;
        }
        let a = v.norm();
        match best[b] {
            Some((r0, a0)) if a0 > a || (a0 == a && r0 <= r) => {}
            _ => best[b] = Some((r, a)),
        }
    }
    best.into_iter().flatten().collect()
}

/// FFT plans and Fourier multipliers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k_sq: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points_per_dim);
        let inverse = planner.plan_fft_inverse(grid.points_per_dim);
        Self {
            grid: *grid,
            forward,
            inverse,
            k_sq: grid.k_squared(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k_sq
    }

    fn transform(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.grid.points_per_dim;
        plan.process(data);
        if self.grid.dim == 2 {
            let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut t, n);
            plan.process(&mut t);
            transpose(&t, data, n);
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(&self.forward, data);
    }

    /// Inverse transform in place, including the `1/n^N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(&self.inverse, data);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Spectral `Δf`.
    pub fn laplacian(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (v, k2) in buf.iter_mut().zip(&self.k_sq) {
            *v *= -k2;
        }
        self.inverse(&mut buf);
        buf
    }

    /// `‖∇f‖²` from already transformed coefficients.
    pub fn gradient_norm_sq_hat(&self, hat: &[Complex64]) -> f64 {
        let s: f64 = hat
            .iter()
            .zip(&self.k_sq)
            .map(|(v, k2)| k2 * v.norm_sqr())
            .sum();
        s * self.grid.cell_volume() / hat.len() as f64
    }

    pub fn gradient_norm_sq(&self, values: &[Complex64]) -> f64 {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        self.gradient_norm_sq_hat(&buf)
    }

    /// `‖f‖²` evaluated on the Fourier side.
    pub fn parseval_norm_sq(&self, values: &[Complex64]) -> f64 {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        buf.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume() / buf.len() as f64
    }

    /// Shifts by an arbitrary displacement using Fourier phases.
    pub fn shift(&self, values: &[Complex64], displacement: [f64; 2]) -> Vec<Complex64> {
        let k = self.grid.wavenumbers();
        let n = self.grid.points_per_dim;
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (idx, v) in buf.iter_mut().enumerate() {
            let [i, j] = self.grid.axis_indices(idx);
            let mut phase = -k[i] * displacement[0];
            if self.grid.dim == 2 {
                phase -= k[j] * displacement[1];
            }
            // The Nyquist mode has no consistent sign; drop it.
            if i == n / 2 || (self.grid.dim == 2 && j == n / 2) {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::from_polar(1.0, phase);
            }
        }
        self.inverse(&mut buf);
        buf
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for jb in (0..n).step_by(BLOCK) {
        for ib in (0..n).step_by(BLOCK) {
            for j in jb..(jb + BLOCK).min(n) {
                for i in ib..(ib + BLOCK).min(n) {
                    dst[j + n * i] = src[i + n * j];
                }
            }
        }
    }
}

/// Spectral Laplacian of a field.
pub fn laplacian(field: &Field) -> Field {
    let spectral = Spectral::new(&field.grid);
    let values = spectral.laplacian(&field.values);
    if field.real_valued {
        Field::from_real(&field.grid, values.iter().map(|v| v.re).collect())
            .expect("length preserved")
    } else {
        Field::from_complex(&field.grid, values).expect("length preserved")
    }
}
