//! Time-domain Lurye loops and trace analysis.

mod nonlinearity;
mod signal;
mod system;
mod trace;

pub use nonlinearity::Nonlinearity;
pub use signal::SignalSpec;
pub use system::{
    simulate_continuous_rk4, simulate_discrete, simulate_discrete_with, LoopSignals, LuryeSystem, SimMeta, SimOptions,
    SimulationResult, DEFAULT_RK4_STEP, DIVERGENCE_GUARD,
};
pub use trace::{
    bias_estimate, decompose_periodic, detect_period, lyapunov_exponent, power_seminorm, rms, shift_mismatch, spectrum,
    LyapunovOptions, PeriodOptions, PeriodVerdict, PeriodicDecomposition, PowerMode, Spectrum, DISCRETE_PERIOD_TOL,
    RK4_PERIOD_TOL,
};
