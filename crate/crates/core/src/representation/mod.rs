//! Constructive martingale representation on Wiener ensembles and its
//! localization to local martingales.
//!
//! For a martingale `M(t) = F(t, W)` the integrand is the vertical derivative
//! of `F` along each scenario, and `M` is rebuilt as `M(0) + int phi' dW`
//! with left-point sums. Local martingales are handled through stopping
//! ladders: stopped processes are bounded, their integrands are the
//! truncated integrand, and the truncations stabilize as the level grows.

mod ladder;
mod pairing;
mod process;
mod reconstruct;
mod residual;
mod strict_local;

pub use ladder::{
    build_ladder, hitting_index, hitting_time, stabilization_check, stop_process,
    theta_independence_check, truncate_integrand, StabilizationLevel, StoppingLadder,
    ThetaFixed, ThetaIndependence, ThetaInfinite, ThetaRule, WienerExit,
};
pub use pairing::{pairing_check, PairingStats};
pub use process::{integrand_from_functional, IntegrandOnGrid, ProcessOnGrid, ScenarioIntegrand};
pub use reconstruct::{reconstruct, reconstruct_path};
pub use residual::{
    convergence_ladder, ito_residual_stats, representation_residual, representation_residual_path,
    ConvergencePoint, ConvergenceStats, ResidualKind, ResidualStats, SupQuantiles, TimePoint,
};
pub use strict_local::{inverse_bessel_mean, strict_locality_diagnostic, StoppedLevel, StrictLocalStats};
