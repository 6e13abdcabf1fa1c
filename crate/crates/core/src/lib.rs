//! Optimal transport maps between densities on bounded intervals, computed
//! by explicit time-marching of the parabolic transport flow
//! `v_t = log(v_xx) - log(f / g(v_x))` with Neumann data, plus a direct
//! quantile oracle (`T = G^{-1} . F`) for validation.
//!
//! The marching scheme is a centered finite-difference update with ghost
//! points at both ends, adaptive step-size selection under the stability
//! ratios, and a CDF-mismatch stopping rule: once
//! `max_j |F(x_j) - G(grad U_j)| <= sigma` on the full grid, the discrete
//! map is within `sigma / min g` of the optimal one.
//!
//! Everything is generic over the scalar type; the `*64` / `*32` aliases
//! at the crate root pin `f64` (the default) and `f32`.
//!
//! ```
//! use pot1d_core::bounds::{compute_bounds, BoundsConfig};
//! use pot1d_core::densities::catalog;
//! use pot1d_core::grid::build_grid;
//! use pot1d_core::monitor::{oracle_error, StoppingRule};
//! use pot1d_core::oracle::OptimalMap;
//! use pot1d_core::stepper::{run, StepConfig};
//!
//! let entry = catalog::<f64>("ex_near_zero")?;
//! let db = compute_bounds(&entry, &BoundsConfig::default())?;
//! let grid = build_grid(-1.0, 1.0, 64)?;
//! let (state, report) = run(
//!     &entry,
//!     &db,
//!     &StepConfig::for_entry(&entry),
//!     &grid,
//!     &StoppingRule::new(0.05),
//! )?;
//! assert!(report.converged);
//!
//! // The converged map is certified within sigma / min g of the oracle.
//! let oracle = OptimalMap::new(&entry, 1e-10, 1e-10);
//! let worst = oracle_error(&entry, &state.row, &grid, &oracle)?;
//! assert!(worst <= report.map_error_bound);
//! # Ok::<(), pot1d_core::Error>(())
//! ```

pub mod bounds;
pub mod densities;
pub mod error;
pub mod grid;
pub mod monitor;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod stepper;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DensitySpec64 = densities::DensitySpec<f64>;
pub type CatalogEntry64 = densities::CatalogEntry<f64>;
pub type Grid64 = grid::Grid<f64>;
pub type GridRow64 = grid::GridRow<f64>;
pub type DerivativeBounds64 = bounds::DerivativeBounds<f64>;
pub type BoundsConfig64 = bounds::BoundsConfig<f64>;
pub type StepConfig64 = stepper::StepConfig<f64>;
pub type SolverState64 = stepper::SolverState<f64>;
pub type Checkpoint64 = stepper::Checkpoint<f64>;
pub type StoppingRule64 = monitor::StoppingRule<f64>;
pub type ConvergenceReport64 = monitor::ConvergenceReport<f64>;
pub type OptimalMap64<'e> = oracle::OptimalMap<'e, f64>;

pub type DensitySpec32 = densities::DensitySpec<f32>;
pub type CatalogEntry32 = densities::CatalogEntry<f32>;
pub type Grid32 = grid::Grid<f32>;
pub type GridRow32 = grid::GridRow<f32>;
pub type DerivativeBounds32 = bounds::DerivativeBounds<f32>;
pub type StepConfig32 = stepper::StepConfig<f32>;
pub type SolverState32 = stepper::SolverState<f32>;
pub type StoppingRule32 = monitor::StoppingRule<f32>;
