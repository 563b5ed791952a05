//! Periodic excitation pairs `(v1, v2)` that select which Lie bracket of the
//! input vector fields survives averaging, and their `eps`-scaled versions.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DitherError {
    #[error("dither epsilon must be finite and > 0, got {0}")]
    Epsilon(f64),
    #[error("dither kappa must be >= 1, got {0}")]
    Kappa(u32),
}

/// Which bracket the dither pair excites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DitherOrder {
    /// `[g1, g2]`
    C1,
    /// `[[g1, g2], g2]`
    C2,
    /// `[[[g1, g2], g2], g2]`
    C3,
}

impl DitherOrder {
    /// Degree `N` of the matching power-law objective.
    pub fn degree(self) -> u32 {
        match self {
            DitherOrder::C1 => 2,
            DitherOrder::C2 => 3,
            DitherOrder::C3 => 4,
        }
    }

    /// Exponent `1/N - 1` applied to `eps`.
    pub fn scaling_exponent(self) -> f64 {
        1.0 / self.degree() as f64 - 1.0
    }

    pub fn tag(self) -> &'static str {
        match self {
            DitherOrder::C1 => "c1",
            DitherOrder::C2 => "c2",
            DitherOrder::C3 => "c3",
        }
    }
}

impl std::str::FromStr for DitherOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(DitherOrder::C1),
            "c2" => Ok(DitherOrder::C2),
            "c3" => Ok(DitherOrder::C3),
            other => Err(format!("unknown dither order `{other}` (expected c1, c2 or c3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DitherSpec {
    order: DitherOrder,
    kappa: u32,
    epsilon: f64,
}

impl DitherSpec {
    pub fn new(order: DitherOrder, kappa: u32, epsilon: f64) -> Result<Self, DitherError> {
        if kappa < 1 {
            return Err(DitherError::Kappa(kappa));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(DitherError::Epsilon(epsilon));
        }
        Ok(Self { order, kappa, epsilon })
    }

    pub fn order(&self) -> DitherOrder {
        self.order
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Largest `|v1|` and `|v2|` over a period.
    pub fn amplitudes(&self) -> (f64, f64) {
        let k = self.kappa as f64;
        match self.order {
            DitherOrder::C1 => {
                let amp = 2.0 * (k * PI).sqrt();
                (amp, amp)
            }
            DitherOrder::C2 => {
                let base = (4.0 * k * PI).powf(2.0 / 3.0);
                (2.0 * base, base)
            }
            DitherOrder::C3 => {
                let base = (2.0 * k * PI).powf(0.75);
                (6.0 * base, 2.0 * base)
            }
        }
    }

    /// Unit-period dither pair evaluated at phase `s = t / eps`.
    pub fn dither_pair(&self, s: f64) -> (f64, f64) {
        let k = self.kappa as f64;
        match self.order {
            DitherOrder::C1 => {
                let amp = 2.0 * (k * PI).sqrt();
                let w = 2.0 * k * PI * s;
                (amp * w.cos(), amp * w.sin())
            }
            DitherOrder::C2 => {
                let base = (4.0 * k * PI).powf(2.0 / 3.0);
                (-2.0 * base * (4.0 * k * PI * s).cos(), base * (2.0 * k * PI * s).cos())
            }
            DitherOrder::C3 => {
                let base = (2.0 * k * PI).powf(0.75);
                (
                    6.0 * base * (6.0 * k * PI * s).sin(),
                    2.0 * base * (2.0 * k * PI * s).cos(),
                )
            }
        }
    }

    /// `u_i(t) = eps^(1/N - 1) v_i(t / eps)`.
    pub fn scaled_inputs(&self, t: f64) -> (f64, f64) {
        let gain = self.epsilon.powf(self.order.scaling_exponent());
        let (v1, v2) = self.dither_pair(t / self.epsilon);
        (gain * v1, gain * v2)
    }

    /// Quadrature of the zero-mean and first-bracket moments over one period.
    pub fn moment_check(&self) -> MomentReport {
        moment_check_with_panels(self, MOMENT_PANELS)
    }
}

pub const MOMENT_PANELS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub order: DitherOrder,
    pub kappa: u32,
    /// `int_0^1 v1 ds`
    pub mean_v1: f64,
    /// `int_0^1 v2 ds`
    pub mean_v2: f64,
    /// `int_0^1 v2(s) int_0^s v1 ds' ds`
    pub lambda12: f64,
    pub panels: usize,
}

impl MomentReport {
    /// True when the pair is zero-mean and excites `[g1, g2]` exactly when it
    /// should (C1 only).
    pub fn is_selective(&self, tol: f64) -> bool {
        let zero_mean = self.mean_v1.abs() < tol && self.mean_v2.abs() < tol;
        let first_bracket = match self.order {
            DitherOrder::C1 => self.lambda12.abs() > 0.1,
            DitherOrder::C2 | DitherOrder::C3 => self.lambda12.abs() < tol,
        };
        zero_mean && first_bracket
    }
}

/// Composite trapezoid on a uniform grid over `[0, 1]`.
pub fn moment_check_with_panels(spec: &DitherSpec, panels: usize) -> MomentReport {
    let h = 1.0 / panels as f64;
    let samples: Vec<(f64, f64)> = (0..=panels).map(|i| spec.dither_pair(i as f64 * h)).collect();

    let trapezoid = |f: &dyn Fn(usize) -> f64| -> f64 {
        let inner: f64 = (1..panels).map(f).sum();
        h * (0.5 * (f(0) + f(panels)) + inner)
    };

    let mean_v1 = trapezoid(&|i| samples[i].0);
    let mean_v2 = trapezoid(&|i| samples[i].1);

    // running integral of v1 on the same grid
    let mut running = vec![0.0; panels + 1];
    for i in 1..=panels {
        running[i] = running[i - 1] + 0.5 * h * (samples[i - 1].0 + samples[i].0);
    }
    let lambda12 = trapezoid(&|i| samples[i].1 * running[i]);

    MomentReport {
        order: spec.order,
        kappa: spec.kappa,
        mean_v1,
        mean_v2,
        lambda12,
        panels,
    }
}
