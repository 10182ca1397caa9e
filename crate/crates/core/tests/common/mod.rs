#![allow(dead_code)]

use binorm_gs::grid::{Field, Grid, State};
use num_complex::Complex64;
use proptest::prelude::*;

/// A few Gaussian bumps with complex weights: smooth and well resolved.
#[derive(Debug, Clone)]
pub struct Bumps(pub Vec<(f64, f64, f64, f64, f64)>);

pub fn bumps() -> impl Strategy<Value = Bumps> {
    prop::collection::vec(
        (-4.0f64..4.0, -4.0f64..4.0, 0.8f64..2.5, -1.5f64..1.5, -1.5f64..1.5),
        1..4,
    )
    .prop_map(Bumps)
}

impl Bumps {
    pub fn field(&self, grid: &Grid) -> Field {
        let values = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.coords(i);
                self.0
                    .iter()
                    .map(|&(cx, cy, w, re, im)| {
                        let d2 = (x - cx).powi(2) + if grid.dim() == 2 { (y - cy).powi(2) } else { 0.0 };
                        Complex64::new(re, im) * (-d2 / (w * w)).exp()
                    })
                    .sum()
            })
            .collect();
        Field::from_complex(grid, values).unwrap()
    }

    pub fn real_field(&self, grid: &Grid) -> Field {
        Field::from_real(grid, self.field(grid).re()).unwrap()
    }
}

pub fn state(grid: &Grid, a: &Bumps, b: &Bumps) -> State {
    State::new(a.field(grid), b.field(grid)).unwrap()
}

pub fn grid_1d() -> Grid {
    Grid::new(1, 256, 32.0).unwrap()
}

pub fn grid_2d() -> Grid {
    Grid::new(2, 64, 24.0).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
