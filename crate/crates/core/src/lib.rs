//! Ground states of two-component nonlinear Schrödinger energies under two
//! mass constraints, with numerical checks of their structural properties.

pub mod analysis;
pub mod energy;
pub mod grid;
pub mod inequalities;
pub mod model;
pub mod solver;
