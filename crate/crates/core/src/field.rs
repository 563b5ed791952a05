//! Scalar objective fields seen by the seeker and the sensor model that sits
//! between a field and the controller.
//!
//! The controller never sees field parameters. It only receives the value
//! returned by [`MeasurementModel::measure`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("non-finite evaluation point ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("field `{0}` has no analytic partial derivatives")]
    Unsupported(&'static str),
    #[error("invalid field parameter `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },
}

/// `C1 (x - xd)^4 + C2 (y - yd)^4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticField {
    pub c1_coeff: f64,
    pub c2_coeff: f64,
    pub x_target: f64,
    pub y_target: f64,
}

/// `C1 (x - xd)^2 + C2 (y - yd)^2`. Used as a locally quadratic test case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticField {
    pub c1_coeff: f64,
    pub c2_coeff: f64,
    pub x_target: f64,
    pub y_target: f64,
}

/// Synthetic light distribution as read by a sensor whose output drops as
/// intensity rises: `L0 - A exp(-r^2 / (2 sigma^2))`, with `r` the distance
/// to the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightBowlField {
    pub baseline: f64,
    pub depth: f64,
    pub x_source: f64,
    pub y_source: f64,
    pub width: f64,
}

/// Closed set of objective fields selectable from a scenario file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveField {
    Quartic(QuarticField),
    Quadratic(QuadraticField),
    LightBowl(LightBowlField),
}

impl QuarticField {
    pub fn new(c1_coeff: f64, c2_coeff: f64, x_target: f64, y_target: f64) -> Self {
        Self {
            c1_coeff,
            c2_coeff,
            x_target,
            y_target,
        }
    }
}

impl QuadraticField {
    pub fn new(c1_coeff: f64, c2_coeff: f64, x_target: f64, y_target: f64) -> Self {
        Self {
            c1_coeff,
            c2_coeff,
            x_target,
            y_target,
        }
    }
}

impl LightBowlField {
    pub fn new(baseline: f64, depth: f64, x_source: f64, y_source: f64, width: f64) -> Self {
        Self {
            baseline,
            depth,
            x_source,
            y_source,
            width,
        }
    }

    /// Gaussian factor `exp(-r^2 / (2 sigma^2))`.
    fn bump(&self, dx: f64, dy: f64) -> f64 {
        let s2 = self.width * self.width;
        (-(dx * dx + dy * dy) / (2.0 * s2)).exp()
    }
}

fn check_finite(x: f64, y: f64) -> Result<(), FieldError> {
    if x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(FieldError::NonFinite { x, y })
    }
}

fn positive(key: &'static str, value: f64) -> Result<(), FieldError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(FieldError::InvalidParameter {
            key,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

fn finite(key: &'static str, value: f64) -> Result<(), FieldError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(FieldError::InvalidParameter {
            key,
            reason: format!("must be finite, got {value}"),
        })
    }
}

impl ObjectiveField {
    pub fn kind(&self) -> &'static str {
        match self {
            ObjectiveField::Quartic(_) => "quartic",
            ObjectiveField::Quadratic(_) => "quadratic",
            ObjectiveField::LightBowl(_) => "light",
        }
    }

    /// Checks the type invariants. Keys are reported with their config names.
    pub fn validate(&self) -> Result<(), FieldError> {
        match self {
            ObjectiveField::Quartic(QuarticField {
                c1_coeff,
                c2_coeff,
                x_target,
                y_target,
            })
            | ObjectiveField::Quadratic(QuadraticField {
                c1_coeff,
                c2_coeff,
                x_target,
                y_target,
            }) => {
                positive("field.C1", *c1_coeff)?;
                positive("field.C2", *c2_coeff)?;
                finite("field.xd", *x_target)?;
                finite("field.yd", *y_target)
            }
            ObjectiveField::LightBowl(f) => {
                finite("field.L0", f.baseline)?;
                positive("field.A", f.depth)?;
                positive("field.sigma", f.width)?;
                finite("field.xd", f.x_source)?;
                finite("field.yd", f.y_source)
            }
        }
    }

    /// Location of the unique minimizer.
    pub fn minimizer(&self) -> (f64, f64) {
        match self {
            ObjectiveField::Quartic(f) => (f.x_target, f.y_target),
            ObjectiveField::Quadratic(f) => (f.x_target, f.y_target),
            ObjectiveField::LightBowl(f) => (f.x_source, f.y_source),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, FieldError> {
        check_finite(x, y)?;
        Ok(match self {
            ObjectiveField::Quartic(f) => {
                let dx = x - f.x_target;
                let dy = y - f.y_target;
                let (dx2, dy2) = (dx * dx, dy * dy);
                f.c1_coeff * dx2 * dx2 + f.c2_coeff * dy2 * dy2
            }
            ObjectiveField::Quadratic(f) => {
                let dx = x - f.x_target;
                let dy = y - f.y_target;
                f.c1_coeff * dx * dx + f.c2_coeff * dy * dy
            }
            ObjectiveField::LightBowl(f) => f.baseline - f.depth * f.bump(x - f.x_source, y - f.y_source),
        })
    }

    /// Analytic gradient `(J_x, J_y)`.
    pub fn gradient(&self, x: f64, y: f64) -> Result<(f64, f64), FieldError> {
        check_finite(x, y)?;
        Ok(match self {
            ObjectiveField::Quartic(f) => {
                let dx = x - f.x_target;
                let dy = y - f.y_target;
                (4.0 * f.c1_coeff * dx * dx * dx, 4.0 * f.c2_coeff * dy * dy * dy)
            }
            ObjectiveField::Quadratic(f) => (2.0 * f.c1_coeff * (x - f.x_target), 2.0 * f.c2_coeff * (y - f.y_target)),
            ObjectiveField::LightBowl(f) => {
                let dx = x - f.x_source;
                let dy = y - f.y_source;
                let g = f.depth * f.bump(dx, dy) / (f.width * f.width);
                (g * dx, g * dy)
            }
        })
    }

    /// Analytic pure third partials `(J_xxx, J_yyy)`.
    pub fn third_partials(&self, x: f64, y: f64) -> Result<(f64, f64), FieldError> {
        check_finite(x, y)?;
        Ok(match self {
            ObjectiveField::Quartic(f) => (
                24.0 * f.c1_coeff * (x - f.x_target),
                24.0 * f.c2_coeff * (y - f.y_target),
            ),
            ObjectiveField::Quadratic(_) => (0.0, 0.0),
            ObjectiveField::LightBowl(f) => {
                // d3/du3 of -A exp(-u^2 / 2s^2) = A e (u^3 / s^6 - 3u / s^4)
                let dx = x - f.x_source;
                let dy = y - f.y_source;
                let s2 = f.width * f.width;
                let s4 = s2 * s2;
                let s6 = s4 * s2;
                let e = f.depth * f.bump(dx, dy);
                (
                    e * (dx * dx * dx / s6 - 3.0 * dx / s4),
                    e * (dy * dy * dy / s6 - 3.0 * dy / s4),
                )
            }
        })
    }
}

/// Sensor imperfections applied between the field and the controller.
///
/// Stages run in a fixed order: sample-and-hold, additive Gaussian noise,
/// then round-to-nearest quantization. A zeroed model is the identity.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    noise_std: f64,
    quantum: f64,
    hold_period: f64,
    seed: u64,
    rng: ChaCha8Rng,
    held: Option<(i64, f64)>,
}

impl MeasurementModel {
    pub fn new(noise_std: f64, quantum: f64, hold_period: f64, seed: u64) -> Result<Self, FieldError> {
        for (key, value) in [
            ("sensor.noise_std", noise_std),
            ("sensor.quantum", quantum),
            ("sensor.hold_period", hold_period),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(FieldError::InvalidParameter {
                    key,
                    reason: format!("must be finite and >= 0, got {value}"),
                });
            }
        }
        Ok(Self {
            noise_std,
            quantum,
            hold_period,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            held: None,
        })
    }

    /// Exact sensing.
    pub fn ideal() -> Self {
        Self::new(0.0, 0.0, 0.0, 0).expect("zero model is valid")
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    pub fn hold_period(&self) -> f64 {
        self.hold_period
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_ideal(&self) -> bool {
        self.noise_std == 0.0 && self.quantum == 0.0 && self.hold_period == 0.0
    }

    /// Rewinds the generator and clears the held sample.
    pub fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.held = None;
    }

    pub fn measure(&mut self, field: &ObjectiveField, x: f64, y: f64, t: f64) -> Result<f64, FieldError> {
        if self.hold_period > 0.0 {
            let slot = (t / self.hold_period).floor() as i64;
            if let Some((held_slot, value)) = self.held {
                if held_slot == slot {
                    return Ok(value);
                }
            }
            let value = self.sample(field, x, y)?;
            self.held = Some((slot, value));
            Ok(value)
        } else {
            self.sample(field, x, y)
        }
    }

    fn sample(&mut self, field: &ObjectiveField, x: f64, y: f64) -> Result<f64, FieldError> {
        let mut value = field.eval(x, y)?;
        if self.noise_std > 0.0 {
            let normal = Normal::new(0.0, self.noise_std).expect("validated std");
            value += normal.sample(&mut self.rng);
        }
        if self.quantum > 0.0 {
            value = (value / self.quantum).round() * self.quantum;
        }
        Ok(value)
    }
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self::ideal()
    }
}
