//! Numerics for walks on `Z^d` and on the discrete torus.
//!
//! The crate computes and cross-checks the objects that govern the torus
//! "plateau" of the two-point function:
//!
//! * [`lattice`]: points, torus geometry, lattice tables, convolution,
//!   exponential tilt and Fourier grids.
//! * [`srw`]: the simple random walk Green function `C_mu(x)` by an exact
//!   series route and a quadrature route, the mass `m0(mu)`, decay fits and
//!   the massive infrared bound.
//! * [`torus`]: the torus Green function by an exact dual-lattice sum, a
//!   linear solve, unfolding over periodic images and a killed-walk Monte
//!   Carlo, plus the plateau check.
//! * [`wsaw`]: exact enumeration of the weakly self-avoiding walk on `Z^d`
//!   and on the torus, with susceptibility, bubble, mass and critical point
//!   estimators and the unfolding checks.
//! * [`mc`]: Monte Carlo for torus observables beyond enumeration.
//! * [`lace`]: recovery of the lace kernel `Pi` from the two-point function
//!   and the decomposition `G = lambda C_mu + f`.
//!
//! All routines are pure functions of their inputs. Parallel reductions use a
//! fixed merge order, so every result is bit-reproducible for a given
//! configuration.

pub mod error;
pub mod fit;
pub mod lace;
pub mod lattice;
pub mod mc;
pub mod srw;
pub mod torus;
pub mod wsaw;

pub use error::{Error, Result};
pub use lattice::{DualGrid, DualGridKind, FieldTable, Geometry, LatticePoint, OrthantTable};
