//! From a source density to a potential: the volume potential `Gh`, the
//! denominator `ψ = u₀ − Gh`, `q = h/ψ`, and the perturbation of `h` on the
//! set where `ψ` nearly vanishes.
//!
//! The domain `D` is the ball of radius `a` centred at the origin.

mod grid;
mod operator;
mod perturb;
mod separable;

pub use grid::{BallGrid, ComplexField, RadialSegment};
pub use operator::GridGreenOperator;
pub use perturb::{
    check_condition, check_condition_on, near_zero_volume, near_zero_volume_refined, perturb_source,
    potential_from_field, potential_from_source, support_mask, ConditionCheck, PerturbationRecord,
    PerturbedSource, DEFAULT_DELTA, DEFAULT_TAU, MAX_PERTURBATION_ROUNDS,
};
pub use separable::{
    denominator_field, radial_kernel, sample_source, volume_potential, volume_potential_on_grid,
    DenominatorField, SeparablePotential,
};
