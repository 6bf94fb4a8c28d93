//! Truncated power series in arbitrary precision, and the numerical
//! verification that the threshold-zero mark covariance and correlation are
//! absolutely monotone.

mod circle;
mod monotone;
mod power;
mod real;
mod taylor;

pub use circle::{
    h_second_deriv_on_circle, scan_circle, CircleScan, HSecondDerivative, DEFAULT_LOCAL_ORDER, LOCAL_RADIUS,
};
pub use monotone::{
    coefficient_tolerance, verify_absolute_monotonicity, MonotonicityConfig, MonotonicityReport,
    MonotonicityVerdict, SeriesFunction, CROSSOVER_INDEX, MIN_CIRCLE_SAMPLES,
};
pub use power::PowerSeries;
pub use real::{Real, DEFAULT_PRECISION};
pub use taylor::{
    c1, c2, crossover_bounds, g_series_coeffs, series_arcsin_shifted, taylor_f0, taylor_g0, CrossoverBound,
    H2_CIRCLE_BOUND,
};
