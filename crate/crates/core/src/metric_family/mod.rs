//! Fiber metrics `g_t`, their charts, and the growth hypotheses.

mod family;
mod fiber;
mod hypothesis;

pub use family::{
    bilinear, christoffels_fd, metric_t_derivative_fd, quad, BumpSpec, Envelope, FamilySpec,
    LocalGeometry, MetricFamily, Warp,
};
pub use fiber::{
    reduce_angle, wrap_delta, Fiber, FiberPoint, ANGLE_CHART, NORTH_CHART, POLAR_CHART,
    SOUTH_CHART, STEREO_CHART_RADIUS, STEREO_DOMAIN_RADIUS, STEREO_SWITCH_RADIUS,
};
#[allow(unused_imports)]
pub(crate) use fiber::{norm, norm2};
pub use hypothesis::{
    best_growth_rate, check_exponential_growth, check_hypothesis_h, generalized_min_eigen,
    Counterexample, GrowthReport, HypothesisCertificate, HypothesisOptions, HypothesisReport,
};
