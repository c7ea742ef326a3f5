//! Numerical thresholds shared across modules.
//!
//! All values are in scenario units with double precision in mind.

/// Nodal threshold for the Madelung amplitude, relative to max |R| on the domain.
pub const NODE_RELATIVE: f64 = 1e-10;

/// Kropina evaluations require `y⁰ > BETA_RELATIVE · |y|`.
pub const BETA_RELATIVE: f64 = 1e-9;

/// Probe step for analytic closures, relative to the characteristic length.
pub const ANALYTIC_PROBE_RELATIVE: f64 = 1e-4;

/// Probe step for the finite-difference Hessian of F²/2, relative to |y|.
pub const HESSIAN_PROBE_RELATIVE: f64 = 1e-4;

/// Killing-condition gradient threshold.
pub const KILLING: f64 = 1e-8;

/// Coulomb-gauge residual above which scenario validation warns.
pub const GAUGE: f64 = 1e-8;

/// |W|_h must equal one to this tolerance after construction.
pub const WIND_UNIT: f64 = 1e-10;

/// |W|_h tolerance accepted on input to the inverse navigation map.
pub const WIND_UNIT_INPUT: f64 = 1e-8;

/// Floor in the denominator of relative gaps.
pub const GAP_FLOOR: f64 = 1e-30;
