//! Sites, geometries, tables and Fourier grids.

pub mod fourier;
mod orthant;
mod point;
mod table;

pub use fourier::{fourier, step_transform, tilted_step_transform, DualGrid, DualGridKind};
pub use orthant::OrthantTable;
pub(crate) use orthant::{even_transform, tabulate_axis_sum, HalfAxis};
pub use point::{torus_rep, Geometry, LatticePoint};
pub use table::FieldTable;
