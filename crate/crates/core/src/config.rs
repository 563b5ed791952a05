//! Scenario files and built-in presets.
//!
//! The file format is one `key = value` per line with `#` comments. Keys are
//! dotted (`esc.epsilon`). Every key not given falls back to the `table1`
//! preset, except light-field keys which fall back to [`DEFAULT_LIGHT`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dither::DitherOrder;
use crate::dynamics::{Design, SimParams};
use crate::field::{LightBowlField, MeasurementModel, ObjectiveField, QuadraticField, QuarticField};
use crate::sim::IntegratorConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("unknown preset `{0}` (expected table1, table2 or table3)")]
    UnknownPreset(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Light-field stand-in used when a scenario selects `field.kind = light`
/// without giving its shape. Sensor units follow a 12-bit ADC.
pub const DEFAULT_LIGHT: LightBowlField = LightBowlField {
    baseline: 3000.0,
    depth: 1500.0,
    x_source: 1.1,
    y_source: -1.9,
    width: 0.1,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub noise_std: f64,
    pub quantum: f64,
    pub hold_period: f64,
    pub seed: u64,
}

impl SensorConfig {
    pub fn ideal() -> Self {
        Self {
            noise_std: 0.0,
            quantum: 0.0,
            hold_period: 0.0,
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<MeasurementModel, ConfigError> {
        MeasurementModel::new(self.noise_std, self.quantum, self.hold_period, self.seed).map_err(|e| match e {
            crate::field::FieldError::InvalidParameter { key, reason } => invalid(key, reason),
            other => invalid("sensor", other.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub x0: f64,
    pub y0: f64,
    pub h0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    /// Step override; `None` means `eps / 200` for closed-loop runs.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub output_dir: Option<PathBuf>,
    pub field: ObjectiveField,
    pub sensor: SensorConfig,
    /// Explicit `dither.order`; must agree with `design` when present.
    pub dither_order: Option<DitherOrder>,
    pub params: SimParams,
    pub design: Design,
    pub init: InitialState,
    pub sim: SimSettings,
}

impl ScenarioConfig {
    /// Integration step for the closed loop.
    pub fn esc_dt(&self) -> f64 {
        self.sim.dt.unwrap_or(self.params.epsilon / 200.0)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::new(self.esc_dt(), self.sim.t_end, self.sim.record_every)
    }

    pub fn target(&self) -> (f64, f64) {
        self.field.minimizer()
    }

    /// Period of the heading rotation, `2 pi / omega`.
    pub fn turn_period(&self) -> f64 {
        std::f64::consts::TAU / self.params.omega
    }

    pub fn with_design(&self, design: Design) -> Self {
        let mut cfg = self.clone();
        cfg.design = design;
        cfg.dither_order = None;
        cfg
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut cfg = self.clone();
        cfg.params.epsilon = epsilon;
        cfg.sim.dt = None;
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.field.validate().map_err(|e| match e {
            crate::field::FieldError::InvalidParameter { key, reason } => invalid(key, reason),
            other => invalid("field", other.to_string()),
        })?;
        self.sensor.build()?;
        self.params.validate().map_err(|e| match e {
            crate::dynamics::ParamError::Invalid { key, reason } => invalid(key, reason),
        })?;
        if let Some(order) = self.dither_order {
            if order != self.design.dither_order() {
                return Err(invalid(
                    "dither.order",
                    format!(
                        "`{}` does not match esc.design = {} (expects `{}`)",
                        order.tag(),
                        self.design.tag(),
                        self.design.dither_order().tag()
                    ),
                ));
            }
        }
        for (key, value) in [
            ("init.x0", self.init.x0),
            ("init.y0", self.init.y0),
            ("init.h0", self.init.h0),
        ] {
            if !value.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if !self.params.hpf_enabled() && self.init.h0 != 0.0 {
            return Err(invalid(
                "init.h0",
                "must be 0 when the high-pass filter is off (esc.hpf_gain = 0)",
            ));
        }
        let limit = self.params.epsilon / 200.0;
        if let Some(dt) = self.sim.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid("sim.dt", format!("must be finite and > 0, got {dt}")));
            }
            if dt > limit * (1.0 + 1e-12) {
                return Err(invalid("sim.dt", format!("{dt} exceeds esc.epsilon / 200 = {limit}")));
            }
        }
        let dt = self.esc_dt();
        if !(self.sim.t_end.is_finite() && self.sim.t_end >= dt) {
            return Err(invalid("sim.t_end", format!("must be finite and >= dt ({dt})")));
        }
        if self.sim.record_every == 0 {
            return Err(invalid("sim.record_every", "must be a positive integer"));
        }
        Ok(())
    }

    /// Serializes every key so the text parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario.name", self.name.clone());
        if let Some(dir) = &self.output_dir {
            kv("output.dir", dir.display().to_string());
        }
        kv("field.kind", self.field.kind().to_string());
        match self.field {
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
                kv("field.C1", fmt(c1_coeff));
                kv("field.C2", fmt(c2_coeff));
                kv("field.xd", fmt(x_target));
                kv("field.yd", fmt(y_target));
            }
            ObjectiveField::LightBowl(f) => {
                kv("field.L0", fmt(f.baseline));
                kv("field.A", fmt(f.depth));
                kv("field.sigma", fmt(f.width));
                kv("field.xd", fmt(f.x_source));
                kv("field.yd", fmt(f.y_source));
            }
        }
        kv("sensor.noise_std", fmt(self.sensor.noise_std));
        kv("sensor.quantum", fmt(self.sensor.quantum));
        kv("sensor.hold_period", fmt(self.sensor.hold_period));
        kv("sensor.seed", self.sensor.seed.to_string());
        if let Some(order) = self.dither_order {
            kv("dither.order", order.tag().to_string());
        }
        kv("dither.kappa", self.params.kappa.to_string());
        kv("esc.design", self.design.tag().to_string());
        kv("esc.a", fmt(self.params.a));
        kv("esc.c", fmt(self.params.c));
        kv("esc.epsilon", fmt(self.params.epsilon));
        kv("esc.omega", fmt(self.params.omega));
        kv("esc.hpf_gain", fmt(self.params.hpf_gain));
        kv("esc.theta0", fmt(self.params.theta0));
        kv("init.x0", fmt(self.init.x0));
        kv("init.y0", fmt(self.init.y0));
        kv("init.h0", fmt(self.init.h0));
        if let Some(dt) = self.sim.dt {
            kv("sim.dt", fmt(dt));
        }
        kv("sim.t_end", fmt(self.sim.t_end));
        kv("sim.record_every", self.sim.record_every.to_string());
        s
    }
}

fn fmt(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

pub const PRESETS: [&str; 3] = ["table1", "table2", "table3"];

/// Built-in scenarios. `table2` and `table3` hold hardware-run parameters and replay in simulation.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let quartic = ObjectiveField::Quartic(QuarticField::new(1.0, 1.0, 1.0, -2.0));
    let table1 = ScenarioConfig {
        name: "table1".into(),
        output_dir: None,
        field: quartic,
        sensor: SensorConfig::ideal(),
        dither_order: None,
        params: SimParams::new(0.5, 0.5, 0.001, 1.4),
        design: Design::ThirdOrder,
        init: InitialState {
            x0: 1.6,
            y0: -1.4,
            h0: 0.0,
        },
        sim: SimSettings {
            dt: None,
            t_end: 100.0,
            // one record per dither period at the default step
            record_every: 200,
        },
    };
    match name {
        "table1" => Ok(table1),
        "table2" => Ok(ScenarioConfig {
            name: "table2".into(),
            params: SimParams::new(0.01121, 10.0, 0.2992, 1.4).with_hpf(1.0),
            sim: SimSettings {
                dt: None,
                t_end: 600.0,
                record_every: 200,
            },
            ..table1
        }),
        "table3" => {
            let field = ObjectiveField::LightBowl(DEFAULT_LIGHT);
            let params = SimParams::new(0.006665, 0.001, 0.1496, 1.4).with_hpf(6.0);
            let (x0, y0) = (1.3, -1.7);
            // Filter already settled on the reading at the start position; a
            // cold filter passes the full sensor offset and flings the robot.
            let h0 = field.eval(x0, y0).expect("finite start") / params.hpf_gain;
            Ok(ScenarioConfig {
                name: "table3".into(),
                field,
                params,
                init: InitialState { x0, y0, h0 },
                sim: SimSettings {
                    dt: None,
                    t_end: 200.0,
                    record_every: 200,
                },
                ..table1
            })
        }
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}

/// Optional overlay of every key, in file order.
#[derive(Debug, Default)]
struct Overrides {
    name: Option<String>,
    output_dir: Option<PathBuf>,
    kind: Option<String>,
    c1: Option<f64>,
    c2: Option<f64>,
    xd: Option<f64>,
    yd: Option<f64>,
    l0: Option<f64>,
    depth: Option<f64>,
    sigma: Option<f64>,
    noise_std: Option<f64>,
    quantum: Option<f64>,
    hold_period: Option<f64>,
    seed: Option<u64>,
    order: Option<DitherOrder>,
    kappa: Option<u32>,
    a: Option<f64>,
    c: Option<f64>,
    epsilon: Option<f64>,
    omega: Option<f64>,
    hpf_gain: Option<f64>,
    theta0: Option<f64>,
    design: Option<Design>,
    x0: Option<f64>,
    y0: Option<f64>,
    h0: Option<f64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<usize>,
}

fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("`{key}`: cannot parse `{value}`"),
    })
}

fn tagged<T: std::str::FromStr<Err = String>>(line: usize, value: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|message| ConfigError::Parse { line, message })
}

/// Parses scenario text on top of the `table1` defaults and validates it.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut o = Overrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: format!("`{key}` has no value"),
            });
        }
        match key {
            "scenario.name" => o.name = Some(value.to_string()),
            "output.dir" => o.output_dir = Some(PathBuf::from(value)),
            "field.kind" => o.kind = Some(value.to_string()),
            "field.C1" => o.c1 = Some(num(line, key, value)?),
            "field.C2" => o.c2 = Some(num(line, key, value)?),
            "field.xd" => o.xd = Some(num(line, key, value)?),
            "field.yd" => o.yd = Some(num(line, key, value)?),
            "field.L0" => o.l0 = Some(num(line, key, value)?),
            "field.A" => o.depth = Some(num(line, key, value)?),
            "field.sigma" => o.sigma = Some(num(line, key, value)?),
            "sensor.noise_std" => o.noise_std = Some(num(line, key, value)?),
            "sensor.quantum" => o.quantum = Some(num(line, key, value)?),
            "sensor.hold_period" => o.hold_period = Some(num(line, key, value)?),
            "sensor.seed" => o.seed = Some(num(line, key, value)?),
            "dither.order" => o.order = Some(tagged(line, value)?),
            "dither.kappa" => o.kappa = Some(num(line, key, value)?),
            "esc.a" => o.a = Some(num(line, key, value)?),
            "esc.c" => o.c = Some(num(line, key, value)?),
            "esc.epsilon" => o.epsilon = Some(num(line, key, value)?),
            "esc.omega" => o.omega = Some(num(line, key, value)?),
            "esc.hpf_gain" => o.hpf_gain = Some(num(line, key, value)?),
            "esc.theta0" => o.theta0 = Some(num(line, key, value)?),
            "esc.design" => o.design = Some(tagged(line, value)?),
            "init.x0" => o.x0 = Some(num(line, key, value)?),
            "init.y0" => o.y0 = Some(num(line, key, value)?),
            "init.h0" => o.h0 = Some(num(line, key, value)?),
            "sim.dt" => o.dt = Some(num(line, key, value)?),
            "sim.t_end" => o.t_end = Some(num(line, key, value)?),
            "sim.record_every" => o.record_every = Some(num(line, key, value)?),
            other => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: other.to_string(),
                })
            }
        }
    }
    let cfg = build(o)?;
    cfg.validate()?;
    Ok(cfg)
}

fn build(o: Overrides) -> Result<ScenarioConfig, ConfigError> {
    let base = preset("table1")?;
    let kind = o.kind.as_deref().unwrap_or("quartic");
    let field = match kind {
        "quartic" | "quadratic" => {
            for (key, set) in [
                ("field.L0", o.l0.is_some()),
                ("field.A", o.depth.is_some()),
                ("field.sigma", o.sigma.is_some()),
            ] {
                if set {
                    return Err(invalid(key, format!("not used by field.kind = {kind}")));
                }
            }
            let (c1, c2) = (o.c1.unwrap_or(1.0), o.c2.unwrap_or(1.0));
            let (xd, yd) = (o.xd.unwrap_or(1.0), o.yd.unwrap_or(-2.0));
            if kind == "quartic" {
                ObjectiveField::Quartic(QuarticField::new(c1, c2, xd, yd))
            } else {
                ObjectiveField::Quadratic(QuadraticField::new(c1, c2, xd, yd))
            }
        }
        "light" => {
            for (key, set) in [("field.C1", o.c1.is_some()), ("field.C2", o.c2.is_some())] {
                if set {
                    return Err(invalid(key, "not used by field.kind = light"));
                }
            }
            ObjectiveField::LightBowl(LightBowlField {
                baseline: o.l0.unwrap_or(DEFAULT_LIGHT.baseline),
                depth: o.depth.unwrap_or(DEFAULT_LIGHT.depth),
                x_source: o.xd.unwrap_or(DEFAULT_LIGHT.x_source),
                y_source: o.yd.unwrap_or(DEFAULT_LIGHT.y_source),
                width: o.sigma.unwrap_or(DEFAULT_LIGHT.width),
            })
        }
        other => {
            return Err(invalid(
                "field.kind",
                format!("unknown kind `{other}` (expected quartic, quadratic or light)"),
            ))
        }
    };

    let mut params = base.params;
    params.a = o.a.unwrap_or(params.a);
    params.c = o.c.unwrap_or(params.c);
    params.epsilon = o.epsilon.unwrap_or(params.epsilon);
    params.omega = o.omega.unwrap_or(params.omega);
    params.hpf_gain = o.hpf_gain.unwrap_or(params.hpf_gain);
    params.theta0 = o.theta0.unwrap_or(params.theta0);
    params.kappa = o.kappa.unwrap_or(params.kappa);

    Ok(ScenarioConfig {
        name: o.name.unwrap_or_else(|| "custom".into()),
        output_dir: o.output_dir,
        field,
        sensor: SensorConfig {
            noise_std: o.noise_std.unwrap_or(0.0),
            quantum: o.quantum.unwrap_or(0.0),
            hold_period: o.hold_period.unwrap_or(0.0),
            seed: o.seed.unwrap_or(0),
        },
        dither_order: o.order,
        params,
        design: o.design.unwrap_or(base.design),
        init: InitialState {
            x0: o.x0.unwrap_or(base.init.x0),
            y0: o.y0.unwrap_or(base.init.y0),
            h0: o.h0.unwrap_or(base.init.h0),
        },
        sim: SimSettings {
            dt: o.dt,
            t_end: o.t_end.unwrap_or(base.sim.t_end),
            record_every: o.record_every.unwrap_or(base.sim.record_every),
        },
    })
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}
