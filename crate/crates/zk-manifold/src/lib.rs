//! Geometry of the tube of line solitons and a shooting approximation of
//! the center-stable graph: tube distance, exit times under the ZK flow,
//! growth-rate fits, mass-matched speeds, graph values by shooting, a
//! Lipschitz probe of the graph and the tangent-flow dichotomy.

mod dichotomy;
mod growth;
mod probe;
mod shoot;
mod tube;

pub use dichotomy::{tangent_dichotomy, Classification, DichotomyReport};
pub use growth::{
    measure_growth, measure_growth_in, plus_norm, samples_from_fields, samples_from_states, GrowthFit, GrowthSample,
    GROWTH_WINDOW,
};
pub use probe::{lipschitz_probe, random_graph_point, LipschitzProbe};
pub use shoot::{admissible_part, shoot_graph, Direction, Persistence, ShootConfig, ShootContext, ShootResult};
pub use tube::{exit_time, mass_based_c, tube_distance, ExitOptions, Tube, TubeDistance, TubeQuery};

use zk_dynamics::DynError;

#[derive(Debug, thiserror::Error)]
pub enum ManifoldError {
    #[error("speed must be positive and finite, got {0}")]
    BadSpeed(f64),
    #[error("radius and step parameters must be positive, got {0}")]
    BadRadius(f64),
    #[error("the field has zero mass")]
    ZeroMass,
    #[error("only {points} samples fall inside the growth window")]
    EmptyWindow { points: usize },
    #[error("initial state is at tube distance {dist:.3e}, not inside the {epsilon:.3e}-tube")]
    OutsideTube { dist: f64, epsilon: f64 },
    #[error("integration failed at t = {t:.4}: {source}")]
    Flow { t: f64, source: DynError },
    #[error("the soliton has no unstable directions; there is nothing to shoot for")]
    NoUnstableModes,
    #[error("data radius {radius:.3e} exceeds the admissible {limit:.3e}")]
    TooFar { radius: f64, limit: f64 },
    #[error("data has a component of size {leak:.3e} along the unknown or kernel directions")]
    NotOnDomain { leak: f64 },
    #[error("at least 10 samples are needed, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Decomp(#[from] zk_decomp::DecompError),
    #[error(transparent)]
    Metric(#[from] zk_metric::MetricError),
}
