//! Fixed-step classical Runge-Kutta integration and trajectory recording.

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::field::FieldError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid integrator setting `{key}`: {reason}")]
    Config { key: &'static str, reason: String },
    #[error("step {dt} exceeds the limit {limit} for this system (eps / 200)")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("non-finite derivative at RK4 stage {stage}, t = {t}")]
    NonFiniteStage { stage: u8, t: f64 },
    #[error("integration aborted at t = {t}: {source}")]
    Aborted {
        t: f64,
        #[source]
        source: Box<SimError>,
        /// Samples recorded up to the failure.
        partial: Box<Trajectory>,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A differential system with `N` states and a way to report the recorded
/// quantities at a given state.
pub trait System<const N: usize> {
    fn rhs(&mut self, t: f64, state: &[f64; N]) -> Result<[f64; N], FieldError>;

    /// Must not change the state of `self` in a way that affects `rhs`.
    fn observe(&self, t: f64, state: &[f64; N]) -> Result<Sample, FieldError>;

    /// Largest admissible step, if the system imposes one.
    fn max_step(&self) -> Option<f64> {
        None
    }

    /// Restore any internal state (sensor RNG, held samples) to its start.
    fn reset(&mut self) {}
}

/// One recorded row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub h: f64,
    /// Objective as seen by the controller.
    pub j: f64,
    /// Commanded (or averaged) forward speed.
    pub v: f64,
}

impl Sample {
    pub fn error_norm(&self, target: (f64, f64)) -> f64 {
        (self.x - target.0).hypot(self.y - target.1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryMeta {
    pub label: String,
    pub design: String,
    pub field: String,
    pub seed: u64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub samples: Vec<Sample>,
}

pub const CSV_HEADER: &str = "t,x,y,h,J,v";

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Samples whose time lies in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> &[Sample] {
        let start = self.samples.partition_point(|s| s.t < from);
        let end = self.samples.partition_point(|s| s.t <= to);
        &self.samples[start..end.max(start)]
    }

    /// Mean position over samples with `t >= from`.
    pub fn mean_position_since(&self, from: f64) -> Option<(f64, f64)> {
        let tail = &self.samples[self.samples.partition_point(|s| s.t < from)..];
        if tail.is_empty() {
            return None;
        }
        let n = tail.len() as f64;
        let (sx, sy) = tail.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.x, acc.1 + s.y));
        Some((sx / n, sy / n))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(self.to_csv().as_bytes())
    }

    /// CSV with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.samples.len() * 140 + 16);
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                sig17(r.t),
                sig17(r.x),
                sig17(r.y),
                sig17(r.h),
                sig17(r.j),
                sig17(r.v)
            );
        }
        s
    }
}

/// Formats with 17 significant digits in scientific notation.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, record_every: usize) -> Self {
        Self {
            dt,
            t_end,
            record_every,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::Config {
                key: "sim.dt",
                reason: format!("must be finite and > 0, got {}", self.dt),
            });
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(SimError::Config {
                key: "sim.t_end",
                reason: format!("must be finite and >= dt ({}), got {}", self.dt, self.t_end),
            });
        }
        if self.record_every == 0 {
            return Err(SimError::Config {
                key: "sim.record_every",
                reason: "must be a positive integer".into(),
            });
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened when `t_end` is not a
    /// multiple of `dt`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

fn axpy<const N: usize>(base: &[f64; N], k: &[f64; N], scale: f64) -> [f64; N] {
    std::array::from_fn(|i| base[i] + scale * k[i])
}

fn finite_stage<const N: usize>(k: [f64; N], stage: u8, t: f64) -> Result<[f64; N], SimError> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(SimError::NonFiniteStage { stage, t })
    }
}

/// One classical RK4 step.
pub fn rk4_step<const N: usize, F>(rhs: &mut F, state: &[f64; N], t: f64, dt: f64) -> Result<[f64; N], SimError>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], FieldError>,
{
    let half = 0.5 * dt;
    let k1 = finite_stage(rhs(t, state)?, 1, t)?;
    let k2 = finite_stage(rhs(t + half, &axpy(state, &k1, half))?, 2, t + half)?;
    let k3 = finite_stage(rhs(t + half, &axpy(state, &k2, half))?, 3, t + half)?;
    let k4 = finite_stage(rhs(t + dt, &axpy(state, &k3, dt))?, 4, t + dt)?;
    let sixth = dt / 6.0;
    Ok(std::array::from_fn(|i| {
        state[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Integrates from `t = 0` to `cfg.t_end`, recording every
/// `cfg.record_every`-th step plus the initial and final states.
///
/// Step times are computed as `n * dt` rather than accumulated, so records
/// taken every `k` steps land on exact multiples of `k * dt`.
pub fn integrate<const N: usize, S: System<N>>(
    system: &mut S,
    init: [f64; N],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    if let Some(limit) = system.max_step() {
        if cfg.dt > limit * (1.0 + 1e-12) {
            return Err(SimError::StepTooLarge { dt: cfg.dt, limit });
        }
    }
    system.reset();

    let steps = cfg.steps();
    let mut traj = Trajectory {
        meta: TrajectoryMeta {
            dt: cfg.dt,
            ..Default::default()
        },
        samples: Vec::with_capacity(steps / cfg.record_every + 2),
    };
    traj.samples.push(system.observe(0.0, &init)?);

    let mut state = init;
    for n in 0..steps {
        let t = n as f64 * cfg.dt;
        let t_next = if n + 1 == steps {
            cfg.t_end
        } else {
            (n + 1) as f64 * cfg.dt
        };
        let h = t_next - t;
        let mut rhs = |tt: f64, s: &[f64; N]| system.rhs(tt, s);
        let next = match rk4_step(&mut rhs, &state, t, h) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => next,
            Ok(_) => {
                return Err(SimError::Aborted {
                    t: t_next,
                    source: Box::new(SimError::NonFiniteStage { stage: 0, t: t_next }),
                    partial: Box::new(traj),
                })
            }
            Err(e) => {
                return Err(SimError::Aborted {
                    t,
                    source: Box::new(e),
                    partial: Box::new(traj),
                })
            }
        };
        state = next;
        if (n + 1) % cfg.record_every == 0 || n + 1 == steps {
            traj.samples.push(system.observe(t_next, &state)?);
        }
    }
    Ok(traj)
}
