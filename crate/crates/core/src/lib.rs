//! Darboux-transformed, Crum-iterated and strictly isospectral potentials
//! for the one-dimensional operator `−D² + u`, with an independent
//! shooting eigensolver, scattering amplitudes, time-dependent
//! intertwining and Krein inverse scattering.

pub mod calculus;
pub mod darboux;
pub mod eigensolve;
pub mod families;
pub mod grid;
pub mod krein;
pub mod potential;
pub mod record;
pub mod shapeinv;
pub mod tdse;
pub mod sampled;

pub use grid::{make_grid, Grid, GridError};
pub use sampled::{ComplexFunction, SampledFunction};
