//! Model-free source seeking for a constant-turn-rate unicycle driven by
//! Lie-bracket extremum-seeking control.
//!
//! - [`field`]: objective fields and the sensor model.
//! - [`dither`]: excitation pairs for first-, second- and third-order brackets.
//! - [`dynamics`]: closed-loop and averaged right-hand sides.
//! - [`sim`]: fixed-step RK4 and trajectory recording.
//! - [`analysis`]: stability certificate, Lyapunov sampling, decay fits,
//!   averaging gap.
//! - [`config`] and [`scenario`]: scenario files, presets and runs.

pub mod analysis;
pub mod config;
pub mod dither;
pub mod dynamics;
pub mod field;
pub mod scenario;
pub mod sim;

pub use analysis::{certify, lbs_gains, AnalysisError, DecayFit, StabilityCertificate};
pub use config::{parse_config_str, preset, ConfigError, ScenarioConfig};
pub use dither::{DitherOrder, DitherSpec, MomentReport};
pub use dynamics::{Design, LbsState, PlantState, SimParams, TransformedState};
pub use field::{FieldError, LightBowlField, MeasurementModel, ObjectiveField, QuadraticField, QuarticField};
pub use scenario::{run_lbs, run_scenario, ScenarioError, ScenarioRun};
pub use sim::{integrate, rk4_step, IntegratorConfig, Sample, SimError, Trajectory};
