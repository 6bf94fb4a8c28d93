//! Gaussian threshold model: scalar normal functions, correlation models and
//! the moments of an excursion set marked by the field value.

mod covariance;
mod curve;
mod scalar;
mod threshold;

pub use covariance::{CovarianceFamily, CovarianceModel, ExtendedReal, MaternSmoothness};
pub use curve::{theory_curve, CurveKind, Provenance, SecondOrderCurve};
pub use scalar::{biv_density, mills_ratio, phi, psi, INV_SQRT_2PI};
pub use threshold::{
    c_t, c_t_with, cov_deriv_at_zero, default_quad, derivative_bracket, derivative_numerator, e_t, f0, f_t,
    f_t_with, g0, integral_identity_lhs, integral_identity_lhs_with, integral_identity_rhs, orthant_p,
    orthant_p_with, set_cov_deriv_at_zero, theory_t0, threshold_moments, threshold_moments_with, v0,
    ThresholdModel, ThresholdMoments, ZeroThreshold, MEAN_MARK_T0,
};
