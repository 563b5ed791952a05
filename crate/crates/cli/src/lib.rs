//! Commands behind the `seek` binary. Each command takes a validated scenario
//! and an output directory, writes its artifacts there, and returns an
//! [`Outcome`] carrying the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use seek_core::analysis::{self, error_envelope, StabilityCertificate};
use seek_core::config::{load_config, preset, ConfigError, ScenarioConfig};
use seek_core::field::ObjectiveField;
use seek_core::scenario::{run_lbs, run_scenario, ScenarioError};
use seek_core::sim::{sig17, SimError, Trajectory};
use seek_core::Design;

/// Radius of the ball used for convergence-time reports (m).
pub const CONVERGENCE_RADIUS: f64 = 0.05;
/// Default sweep for `avggap`.
pub const DEFAULT_EPSILONS: [f64; 3] = [0.01, 0.004, 0.001];
pub const DEFAULT_GAP_HORIZON: f64 = 5.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Unsupported(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        match e {
            ScenarioError::Config(c) => CliError::Config(c),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<analysis::AnalysisError> for CliError {
    fn from(e: analysis::AnalysisError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable report, also written to disk.
    pub summary: String,
}

/// Where a scenario comes from on the command line.
#[derive(Debug, Clone)]
pub enum Source {
    Preset(String),
    File(PathBuf),
}

pub fn load(source: &Source) -> Result<ScenarioConfig, CliError> {
    Ok(match source {
        Source::Preset(name) => preset(name)?,
        Source::File(path) => load_config(path)?,
    })
}

/// `--out` wins, then `output.dir` from the scenario, then `$SEEK_OUT`,
/// then `./out`.
pub fn resolve_output_dir(flag: Option<&Path>, cfg: &ScenarioConfig, env: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn open(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

/// Flat `key = value` report.
#[derive(Default)]
struct Report(String);

impl Report {
    fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.0, "{key} = {value}");
        self
    }

    fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, sig17(value))
    }

    fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.kv(key, "none"),
        }
    }
}

fn provenance(r: &mut Report, cfg: &ScenarioConfig) {
    r.kv("scenario", &cfg.name);
    if matches!(cfg.name.as_str(), "table2" | "table3") {
        r.kv("note", "sim-replay of experimental parameters");
    }
}

/// Numbers reported for one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_error: f64,
    pub convergence_time: Option<f64>,
    pub decay_rate: Option<f64>,
    pub decay_r_squared: Option<f64>,
    pub mean_error_last_20s: Option<f64>,
}

pub fn summarize(cfg: &ScenarioConfig, traj: &Trajectory) -> RunSummary {
    let target = cfg.target();
    let last = traj.last().expect("trajectory has the initial sample");
    let t_end = last.t;
    let fit = analysis::fit_decay(traj, target, (0.0, t_end), cfg.turn_period()).ok();
    RunSummary {
        final_error: last.error_norm(target),
        convergence_time: analysis::convergence_time(traj, target, CONVERGENCE_RADIUS),
        decay_rate: fit.map(|f| f.rate),
        decay_r_squared: fit.map(|f| f.r_squared),
        mean_error_last_20s: traj
            .mean_position_since(t_end - 20.0)
            .map(|(x, y)| (x - target.0).hypot(y - target.1)),
    }
}

fn write_summary(r: &mut Report, prefix: &str, s: &RunSummary) {
    r.num(&format!("{prefix}final_error"), s.final_error)
        .num(&format!("{prefix}convergence_radius"), CONVERGENCE_RADIUS)
        .opt(&format!("{prefix}convergence_time"), s.convergence_time)
        .opt(&format!("{prefix}decay_rate"), s.decay_rate)
        .opt(&format!("{prefix}decay_r_squared"), s.decay_r_squared)
        .opt(&format!("{prefix}mean_error_last_20s"), s.mean_error_last_20s);
}

pub fn cmd_simulate(cfg: &ScenarioConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let mut files = Artifacts::open(out)?;
    let stem = format!("{}_{}", cfg.name, cfg.design.tag());
    let run = match run_scenario(cfg, false) {
        Ok(run) => run,
        Err(ScenarioError::Sim(SimError::Aborted { t, source, partial })) => {
            // keep what was integrated before the blow-up
            files.write(&format!("{stem}_partial.csv"), &partial.to_csv())?;
            return Err(CliError::Numerical(format!("integration aborted at t = {t}: {source}")));
        }
        Err(e) => return Err(e.into()),
    };
    let summary = summarize(cfg, &run.esc);

    files.write(&format!("{stem}.csv"), &run.esc.to_csv())?;
    files.write(&format!("{}_config.txt", cfg.name), &cfg.to_text())?;

    let mut r = Report::default();
    provenance(&mut r, cfg);
    r.kv("design", cfg.design.tag()).kv("samples", run.esc.len());
    write_summary(&mut r, "", &summary);
    files.write(&format!("{stem}_summary.txt"), &r.0)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts: files.written,
        summary: r.0,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Unsupported(format!("cannot start worker pool: {e}")))
}

/// Both designs on the identical scenario.
pub fn cmd_compare(cfg: &ScenarioConfig, out: &Path, jobs: usize) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let mut files = Artifacts::open(out)?;
    let designs = [Design::ThirdOrder, Design::FirstOrder];
    let runs: Vec<Result<(Design, Trajectory), CliError>> = pool(jobs)?.install(|| {
        designs
            .par_iter()
            .map(|&d| {
                let c = cfg.with_design(d);
                Ok((d, run_scenario(&c, false)?.esc))
            })
            .collect()
    });

    let mut r = Report::default();
    provenance(&mut r, cfg);
    for run in runs {
        let (design, traj) = run?;
        files.write(&format!("{}_{}.csv", cfg.name, design.tag()), &traj.to_csv())?;
        write_summary(&mut r, &format!("{}.", design.tag()), &summarize(cfg, &traj));
    }
    files.write(&format!("{}_config.txt", cfg.name), &cfg.to_text())?;
    files.write(&format!("{}_compare.txt", cfg.name), &r.0)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts: files.written,
        summary: r.0,
    })
}

/// Averaged-system gains and certificate; only quartic weights define them.
pub fn certificate_for(cfg: &ScenarioConfig) -> Result<StabilityCertificate, CliError> {
    let ObjectiveField::Quartic(q) = cfg.field else {
        return Err(CliError::Unsupported(format!(
            "the stability certificate needs a quartic field (field.kind = quartic), got `{}`",
            cfg.field.kind()
        )));
    };
    let (c1, c2) = analysis::lbs_gains(cfg.params.c, cfg.params.a, q.c1_coeff, q.c2_coeff)
        .map_err(|e| CliError::Unsupported(e.to_string()))?;
    analysis::certify(c1, c2, cfg.params.omega).map_err(|e| CliError::Unsupported(e.to_string()))
}

fn write_certificate(r: &mut Report, cert: &StabilityCertificate) {
    r.num("c1", cert.c1)
        .num("c2", cert.c2)
        .num("omega", cert.omega)
        .num("k11", cert.k11)
        .num("k12", cert.k12)
        .num("k2", cert.k2)
        .opt("omega_threshold", cert.omega_threshold)
        .kv("condition_branch", cert.condition_branch.tag())
        .opt("gamma_feasible", cert.gamma_feasible)
        .kv("verdict", cert.verdict);
}

pub fn cmd_certify(cfg: &ScenarioConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let cert = certificate_for(cfg)?;
    let mut files = Artifacts::open(out)?;
    let mut r = Report::default();
    provenance(&mut r, cfg);
    write_certificate(&mut r, &cert);
    files.write(&format!("{}_certificate.txt", cfg.name), &r.0)?;
    Ok(Outcome {
        exit_code: if cert.verdict { EXIT_OK } else { EXIT_NOT_CERTIFIED },
        artifacts: files.written,
        summary: r.0,
    })
}

/// Averaged system on its own: trajectory, envelope, certificate, decay fit
/// and sampled Lyapunov derivative.
pub fn cmd_lbs(cfg: &ScenarioConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let mut files = Artifacts::open(out)?;
    let traj = run_lbs(cfg)?;
    let target = cfg.target();
    let t_end = traj.last().map_or(0.0, |s| s.t);
    let window = (0.0, t_end.min(20.0));
    let period = cfg.turn_period();

    let mut r = Report::default();
    provenance(&mut r, cfg);
    r.kv("design", cfg.design.tag());
    match certificate_for(cfg) {
        Ok(cert) => {
            write_certificate(&mut r, &cert);
            if let (Some(gamma), Design::ThirdOrder) = (cert.gamma_feasible, cfg.design) {
                let v = analysis::vdot_sample(&traj, target, cert.c1, cert.c2, cert.omega, gamma);
                r.num("max_vdot", v.max_vdot).kv("vdot_samples", v.samples_used);
                if let Some(w) = v.warning {
                    r.kv("vdot_warning", w);
                }
            }
        }
        Err(e) => {
            r.kv("certificate", format!("unavailable: {e}"));
        }
    }
    match analysis::fit_decay(&traj, target, window, period) {
        Ok(fit) => {
            r.num("decay_window_start", fit.window.0)
                .num("decay_window_end", fit.window.1)
                .num("decay_rate", fit.rate)
                .num("decay_r_squared", fit.r_squared);
        }
        Err(e) => {
            r.kv("decay_fit", format!("unavailable: {e}"));
        }
    }
    r.num("final_error", traj.last().map_or(f64::NAN, |s| s.error_norm(target)));

    let mut env = String::from("t,envelope_error\n");
    for (t, e) in error_envelope(&traj.samples, target, (0.0, t_end), period) {
        let _ = writeln!(env, "{},{}", sig17(t), sig17(e));
    }
    files.write(&format!("{}_lbs.csv", cfg.name), &traj.to_csv())?;
    files.write(&format!("{}_lbs_envelope.csv", cfg.name), &env)?;
    files.write(&format!("{}_lbs_report.txt", cfg.name), &r.0)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts: files.written,
        summary: r.0,
    })
}

/// Sup-gap between closed loop and averaged system for each `eps`.
pub fn averaging_sweep(
    cfg: &ScenarioConfig,
    epsilons: &[f64],
    horizon: f64,
    jobs: usize,
) -> Result<Vec<(f64, f64)>, CliError> {
    let mut gaps: Vec<(f64, f64)> = pool(jobs)?.install(|| {
        epsilons
            .par_iter()
            .map(|&eps| {
                let mut c = cfg.with_epsilon(eps);
                c.sim.t_end = horizon;
                c.validate()?;
                let run = run_scenario(&c, true)?;
                let lbs = run.lbs.expect("paired run");
                Ok((eps, analysis::averaging_gap(&run.esc, &lbs)?))
            })
            .collect::<Result<_, CliError>>()
    })?;
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(gaps)
}

pub fn cmd_avggap(
    cfg: &ScenarioConfig,
    out: &Path,
    epsilons: &[f64],
    horizon: f64,
    jobs: usize,
) -> Result<Outcome, CliError> {
    cfg.validate()?;
    if epsilons.is_empty() {
        return Err(CliError::Unsupported("empty epsilon sweep".into()));
    }
    let mut files = Artifacts::open(out)?;
    let gaps = averaging_sweep(cfg, epsilons, horizon, jobs)?;
    let mut csv = String::from("epsilon,gap\n");
    for (eps, gap) in &gaps {
        let _ = writeln!(csv, "{},{}", sig17(*eps), sig17(*gap));
    }
    files.write(&format!("{}_avggap.csv", cfg.name), &csv)?;

    let mut r = Report::default();
    provenance(&mut r, cfg);
    r.kv("design", cfg.design.tag()).num("horizon", horizon);
    for (eps, gap) in &gaps {
        r.num(&format!("gap[{eps}]"), *gap);
    }
    // ascending eps order, so a shrinking gap means strictly increasing here
    let shrinking = gaps.windows(2).all(|w| w[0].1 < w[1].1);
    r.kv("gap_shrinks_with_epsilon", shrinking);
    files.write(&format!("{}_avggap_report.txt", cfg.name), &r.0)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        artifacts: files.written,
        summary: r.0,
    })
}
