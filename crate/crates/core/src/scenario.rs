//! Turns a validated [`ScenarioConfig`] into trajectories.

use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::dynamics::{EscSystem, LbsSystem};
use crate::sim::{integrate, IntegratorConfig, SimError, Trajectory, TrajectoryMeta};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl ScenarioError {
    /// True when integration itself failed (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ScenarioError::Sim(SimError::Aborted { .. } | SimError::NonFiniteStage { .. })
        )
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub esc: Trajectory,
    /// Averaged system from the same start, on the same time grid.
    pub lbs: Option<Trajectory>,
}

fn meta(cfg: &ScenarioConfig, label: &str, dt: f64) -> TrajectoryMeta {
    TrajectoryMeta {
        label: format!("{}:{label}", cfg.name),
        design: cfg.design.tag().to_string(),
        field: cfg.field.kind().to_string(),
        seed: cfg.sensor.seed,
        dt,
    }
}

pub fn esc_system(cfg: &ScenarioConfig) -> Result<EscSystem, ScenarioError> {
    cfg.validate()?;
    Ok(EscSystem::new(cfg.params, cfg.design, cfg.field, cfg.sensor.build()?))
}

/// Integrates the closed loop, and with `with_lbs` also the matching averaged
/// system using the same step and decimation so timestamps line up.
pub fn run_scenario(cfg: &ScenarioConfig, with_lbs: bool) -> Result<ScenarioRun, ScenarioError> {
    let mut system = esc_system(cfg)?;
    let integ = cfg.integrator();
    let mut esc = integrate(&mut system, [cfg.init.x0, cfg.init.y0, cfg.init.h0], &integ)?;
    esc.meta = meta(cfg, "esc", integ.dt);

    let lbs = if with_lbs {
        let mut averaged = LbsSystem::for_params(cfg.field, cfg.design, &cfg.params);
        let mut traj = integrate(&mut averaged, [cfg.init.x0, cfg.init.y0], &integ)?;
        traj.meta = meta(cfg, "lbs", integ.dt);
        Some(traj)
    } else {
        None
    };
    Ok(ScenarioRun { esc, lbs })
}

/// Standalone averaged-system run on its own step,
/// `min(1e-3, 2 pi / (200 omega))`, recorded roughly every 10 ms.
pub fn run_lbs(cfg: &ScenarioConfig) -> Result<Trajectory, ScenarioError> {
    cfg.validate()?;
    let mut averaged = LbsSystem::for_params(cfg.field, cfg.design, &cfg.params);
    let dt = averaged.default_step();
    let record_every = ((0.01 / dt).round() as usize).max(1);
    let integ = IntegratorConfig::new(dt, cfg.sim.t_end.max(dt), record_every);
    let mut traj = integrate(&mut averaged, [cfg.init.x0, cfg.init.y0], &integ)?;
    traj.meta = meta(cfg, "lbs", dt);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::dynamics::Design;

    fn short(name: &str, t_end: f64) -> ScenarioConfig {
        let mut cfg = preset(name).unwrap();
        cfg.sim.t_end = t_end;
        cfg
    }

    #[test]
    fn paired_runs_share_grid_and_start() {
        let run = run_scenario(&short("table1", 0.5), true).unwrap();
        let lbs = run.lbs.unwrap();
        assert_eq!(run.esc.len(), lbs.len());
        assert_eq!(run.esc.samples[0].x, 1.6);
        assert_eq!(lbs.samples[0].y, -1.4);
        assert!(run.esc.times().zip(lbs.times()).all(|(a, b)| a == b));
        // 0.5 s at eps / 200, one record per eps
        assert_eq!(run.esc.len(), 501);
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let mut cfg = short("table3", 2.0);
        cfg.sensor.noise_std = 5.0;
        cfg.sensor.seed = 9;
        let a = run_scenario(&cfg, false).unwrap().esc.to_csv();
        let b = run_scenario(&cfg, false).unwrap().esc.to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let mut cfg = short("table1", 1.0);
        cfg.params.epsilon = -1.0;
        assert!(matches!(run_scenario(&cfg, false), Err(ScenarioError::Config(_))));
    }

    #[test]
    fn standalone_lbs_step() {
        let cfg = short("table1", 1.0);
        let traj = run_lbs(&cfg).unwrap();
        assert_eq!(traj.meta.dt, 1e-3);
        assert_eq!(traj.last().unwrap().t, 1.0);
        assert_eq!(cfg.with_design(Design::FirstOrder).design, Design::FirstOrder);
    }
}
