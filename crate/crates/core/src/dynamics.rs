//! Right-hand sides of the closed-loop unicycle and of its averaged Lie
//! bracket systems, plus the rotating-frame change of variables used by the
//! stability analysis.
//!
//! The unicycle turns at a constant rate, so its heading is the open-loop
//! phase `omega * t + theta0`. Only the forward speed is commanded.

use std::f64::consts::PI;

use thiserror::Error;

use crate::dither::{DitherOrder, DitherSpec};
use crate::field::{FieldError, MeasurementModel, ObjectiveField};
use crate::sim::{Sample, System};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("invalid parameter `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Controller and plant constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Dither gain.
    pub a: f64,
    /// Objective gain.
    pub c: f64,
    /// Dither period (s).
    pub epsilon: f64,
    /// Turning rate (rad/s).
    pub omega: f64,
    /// High-pass filter constant `e`; 0 disables the filter.
    pub hpf_gain: f64,
    /// Heading at `t = 0` (rad).
    pub theta0: f64,
    /// Dither frequency multiplier.
    pub kappa: u32,
}

impl SimParams {
    pub fn new(a: f64, c: f64, epsilon: f64, omega: f64) -> Self {
        Self {
            a,
            c,
            epsilon,
            omega,
            hpf_gain: 0.0,
            theta0: 0.0,
            kappa: 1,
        }
    }

    pub fn with_hpf(mut self, gain: f64) -> Self {
        self.hpf_gain = gain;
        self
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("esc.a", self.a),
            ("esc.c", self.c),
            ("esc.epsilon", self.epsilon),
            ("esc.omega", self.omega),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::Invalid {
                    key,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if !(self.hpf_gain.is_finite() && self.hpf_gain >= 0.0) {
            return Err(ParamError::Invalid {
                key: "esc.hpf_gain",
                reason: format!("must be finite and >= 0, got {}", self.hpf_gain),
            });
        }
        if !self.theta0.is_finite() {
            return Err(ParamError::Invalid {
                key: "esc.theta0",
                reason: "must be finite".into(),
            });
        }
        if self.kappa < 1 {
            return Err(ParamError::Invalid {
                key: "dither.kappa",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn hpf_enabled(&self) -> bool {
        self.hpf_gain > 0.0
    }

    pub fn heading(&self, t: f64) -> f64 {
        self.omega * t + self.theta0
    }

    fn dither(&self, order: DitherOrder) -> DitherSpec {
        DitherSpec::new(order, self.kappa, self.epsilon).expect("validated params")
    }
}

/// Which bracket the closed loop is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    ThirdOrder,
    FirstOrder,
}

impl Design {
    pub fn tag(self) -> &'static str {
        match self {
            Design::ThirdOrder => "third_order",
            Design::FirstOrder => "first_order",
        }
    }

    pub fn dither_order(self) -> DitherOrder {
        match self {
            Design::ThirdOrder => DitherOrder::C3,
            Design::FirstOrder => DitherOrder::C1,
        }
    }
}

impl std::str::FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "third_order" => Ok(Design::ThirdOrder),
            "first_order" => Ok(Design::FirstOrder),
            other => Err(format!(
                "unknown design `{other}` (expected third_order or first_order)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub x: f64,
    pub y: f64,
    /// High-pass filter state.
    pub h: f64,
    pub t: f64,
}

/// Time derivative of a [`PlantState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantRate {
    pub dx: f64,
    pub dy: f64,
    pub dh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LbsState {
    pub xbar: f64,
    pub ybar: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedState {
    pub xi: f64,
    pub eta: f64,
}

/// Forward speed of the third-order law, with the (filtered) measurement
/// already substituted for the objective:
/// `2 (2 pi / eps)^(3/4) (3 c f sin(6 pi t / eps) + a cos(2 pi t / eps))`
/// for `kappa = 1`.
pub fn commanded_velocity(params: &SimParams, filtered_j: f64, t: f64) -> f64 {
    let (u1, u2) = params.dither(DitherOrder::C3).scaled_inputs(t);
    params.c * filtered_j * u1 + params.a * u2
}

/// Forward speed of the first-order comparator:
/// `2 sqrt(pi / eps) (c f cos(2 pi t / eps) + a sin(2 pi t / eps))`.
pub fn first_order_velocity(params: &SimParams, filtered_j: f64, t: f64) -> f64 {
    let (u1, u2) = params.dither(DitherOrder::C1).scaled_inputs(t);
    params.c * filtered_j * u1 + params.a * u2
}

fn esc_rhs(
    params: &SimParams,
    field: &ObjectiveField,
    sensor: &mut MeasurementModel,
    state: &PlantState,
    law: fn(&SimParams, f64, f64) -> f64,
) -> Result<(PlantRate, f64, f64), FieldError> {
    let measured = sensor.measure(field, state.x, state.y, state.t)?;
    let (filtered, dh) = if params.hpf_enabled() {
        let f = measured - params.hpf_gain * state.h;
        (f, f)
    } else {
        (measured, 0.0)
    };
    let v = law(params, filtered, state.t);
    let heading = params.heading(state.t);
    Ok((
        PlantRate {
            dx: v * heading.cos(),
            dy: v * heading.sin(),
            dh,
        },
        measured,
        v,
    ))
}

/// Third-order closed loop with optional washout filter.
pub fn esc3_rhs(
    params: &SimParams,
    field: &ObjectiveField,
    sensor: &mut MeasurementModel,
    state: &PlantState,
) -> Result<PlantRate, FieldError> {
    esc_rhs(params, field, sensor, state, commanded_velocity).map(|r| r.0)
}

/// First-order comparator with optional washout filter.
pub fn esc1_rhs(
    params: &SimParams,
    field: &ObjectiveField,
    sensor: &mut MeasurementModel,
    state: &PlantState,
) -> Result<PlantRate, FieldError> {
    esc_rhs(params, field, sensor, state, first_order_velocity).map(|r| r.0)
}

/// Signed speed along the heading of the third-order averaged system.
fn lbs3_speed(field: &ObjectiveField, heading: f64, x: f64, y: f64, c: f64, a: f64) -> Result<f64, FieldError> {
    let (jxxx, jyyy) = field.third_partials(x, y)?;
    let (s, co) = heading.sin_cos();
    Ok(-c * a.powi(3) * (jxxx * co.powi(3) + jyyy * s.powi(3)))
}

fn lbs1_speed(field: &ObjectiveField, heading: f64, x: f64, y: f64, c: f64, a: f64) -> Result<f64, FieldError> {
    let (jx, jy) = field.gradient(x, y)?;
    let (s, co) = heading.sin_cos();
    Ok(-c * a * (jx * co + jy * s))
}

/// Third-order Lie bracket system
/// `d/dt (xbar, ybar) = -c a^3 (cos, sin)(Wt) (J_xxx cos^3 Wt + J_yyy sin^3 Wt)`.
pub fn lbs3_rhs(
    field: &ObjectiveField,
    omega: f64,
    state: &LbsState,
    c: f64,
    a: f64,
) -> Result<(f64, f64), FieldError> {
    let heading = omega * state.t;
    let speed = lbs3_speed(field, heading, state.xbar, state.ybar, c, a)?;
    Ok((speed * heading.cos(), speed * heading.sin()))
}

/// First-order Lie bracket system `-c a (cos, sin)(Wt) (J_x cos Wt + J_y sin Wt)`.
pub fn lbs1_rhs(
    field: &ObjectiveField,
    omega: f64,
    state: &LbsState,
    c: f64,
    a: f64,
) -> Result<(f64, f64), FieldError> {
    let heading = omega * state.t;
    let speed = lbs1_speed(field, heading, state.xbar, state.ybar, c, a)?;
    Ok((speed * heading.cos(), speed * heading.sin()))
}

pub fn to_rotating(x: f64, y: f64, target: (f64, f64), omega: f64, t: f64) -> TransformedState {
    let (s, c) = (omega * t).sin_cos();
    let dx = x - target.0;
    let dy = y - target.1;
    TransformedState {
        xi: dx * c + dy * s,
        eta: dx * s - dy * c,
    }
}

pub fn from_rotating(state: &TransformedState, target: (f64, f64), omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    (
        target.0 + state.xi * c + state.eta * s,
        target.1 + state.xi * s - state.eta * c,
    )
}

/// Closed-loop unicycle ready for integration. State layout `[x, y, h]`.
#[derive(Debug, Clone)]
pub struct EscSystem {
    pub params: SimParams,
    pub design: Design,
    pub field: ObjectiveField,
    pub sensor: MeasurementModel,
}

impl EscSystem {
    pub fn new(params: SimParams, design: Design, field: ObjectiveField, sensor: MeasurementModel) -> Self {
        Self {
            params,
            design,
            field,
            sensor,
        }
    }

    fn law(&self) -> fn(&SimParams, f64, f64) -> f64 {
        match self.design {
            Design::ThirdOrder => commanded_velocity,
            Design::FirstOrder => first_order_velocity,
        }
    }

    /// Integration step used when no override is given.
    pub fn default_step(&self) -> f64 {
        self.params.epsilon / 200.0
    }
}

impl System<3> for EscSystem {
    fn rhs(&mut self, t: f64, s: &[f64; 3]) -> Result<[f64; 3], FieldError> {
        let state = PlantState {
            x: s[0],
            y: s[1],
            h: s[2],
            t,
        };
        let law = self.law();
        let (rate, _, _) = esc_rhs(&self.params, &self.field, &mut self.sensor, &state, law)?;
        Ok([rate.dx, rate.dy, rate.dh])
    }

    fn observe(&self, t: f64, s: &[f64; 3]) -> Result<Sample, FieldError> {
        // Read through a copy so recording never advances the sensor.
        let mut sensor = self.sensor.clone();
        let state = PlantState {
            x: s[0],
            y: s[1],
            h: s[2],
            t,
        };
        let (_, measured, v) = esc_rhs(&self.params, &self.field, &mut sensor, &state, self.law())?;
        Ok(Sample {
            t,
            x: s[0],
            y: s[1],
            h: s[2],
            j: measured,
            v,
        })
    }

    fn max_step(&self) -> Option<f64> {
        Some(self.params.epsilon / 200.0)
    }

    fn reset(&mut self) {
        self.sensor.reset();
    }
}

/// Averaged system matching a [`Design`]. State layout `[xbar, ybar]`.
#[derive(Debug, Clone)]
pub struct LbsSystem {
    pub field: ObjectiveField,
    pub design: Design,
    pub omega: f64,
    pub theta0: f64,
    pub c: f64,
    pub a: f64,
}

impl LbsSystem {
    pub fn third_order(field: ObjectiveField, omega: f64, c: f64, a: f64) -> Self {
        Self {
            field,
            design: Design::ThirdOrder,
            omega,
            theta0: 0.0,
            c,
            a,
        }
    }

    pub fn for_params(field: ObjectiveField, design: Design, params: &SimParams) -> Self {
        Self {
            field,
            design,
            omega: params.omega,
            theta0: params.theta0,
            c: params.c,
            a: params.a,
        }
    }

    /// `min(1e-3, 2 pi / (200 omega))`
    pub fn default_step(&self) -> f64 {
        (2.0 * PI / (200.0 * self.omega)).min(1e-3)
    }

    fn speed(&self, t: f64, x: f64, y: f64) -> Result<(f64, f64), FieldError> {
        let heading = self.omega * t + self.theta0;
        let speed = match self.design {
            Design::ThirdOrder => lbs3_speed(&self.field, heading, x, y, self.c, self.a)?,
            Design::FirstOrder => lbs1_speed(&self.field, heading, x, y, self.c, self.a)?,
        };
        Ok((speed, heading))
    }
}

impl System<2> for LbsSystem {
    fn rhs(&mut self, t: f64, s: &[f64; 2]) -> Result<[f64; 2], FieldError> {
        let (speed, heading) = self.speed(t, s[0], s[1])?;
        Ok([speed * heading.cos(), speed * heading.sin()])
    }

    fn observe(&self, t: f64, s: &[f64; 2]) -> Result<Sample, FieldError> {
        let (speed, _) = self.speed(t, s[0], s[1])?;
        Ok(Sample {
            t,
            x: s[0],
            y: s[1],
            h: 0.0,
            j: self.field.eval(s[0], s[1])?,
            v: speed,
        })
    }
}
