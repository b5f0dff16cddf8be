//! Walk parameters, state, step laws and trajectory generation.

mod law;
mod params;
mod sim;
mod state;

pub use law::{
    advance, axis_weights, axis_weights_into, conditional_moments, derw_probs_into,
    derw_step_distribution, merw_probs_into, merw_step_distribution, select_direction,
    LawConstants, StepDistribution,
};
pub use params::{
    critical_p, derived_constants, memory_exponent, regime, urn_weights, DerivedConstants, Prob,
    Regime, SignedAxis, WalkParams,
};
pub use sim::{simulate, Trajectory, Walker};
pub use state::{WalkState, MAX_STEPS};
