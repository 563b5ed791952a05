use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seek_core::config::{parse_config_str, preset};
use tempfile::TempDir;

fn seek(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seek"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SEEK_OUT")
        .output()
        .expect("binary runs")
}

fn config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

const SHORT: &str = "scenario.name = short\nsim.t_end = 2\n";

#[test]
fn simulate_writes_csv_summary_and_config_echo() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(&tmp, "short.cfg", SHORT);
    let out = tmp.path().join("out");
    let o = seek(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("short_third_order.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,h,J,v\n"));
    // 2 s at one record per dither period, plus the initial sample
    assert_eq!(csv.lines().count(), 1 + 2001);

    let summary = fs::read_to_string(out.join("short_third_order_summary.txt")).unwrap();
    for key in ["final_error = ", "convergence_time = ", "decay_rate = "] {
        assert!(summary.contains(key), "missing {key} in\n{summary}");
    }

    let echo = fs::read_to_string(out.join("short_config.txt")).unwrap();
    let reparsed = parse_config_str(&echo).unwrap();
    assert_eq!(reparsed.sim.t_end, 2.0);
    assert_eq!(reparsed.name, "short");
}

#[test]
fn reruns_produce_identical_csvs() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        &tmp,
        "noisy.cfg",
        "scenario.name = noisy\nfield.kind = light\nsensor.noise_std = 15\nsensor.seed = 4\n\
         esc.a = 0.006665\nesc.c = 0.001\nesc.epsilon = 0.1496\nesc.hpf_gain = 6\n\
         init.x0 = 1.3\ninit.y0 = -1.7\ninit.h0 = 500\nsim.t_end = 5\n",
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = seek(&["simulate", "--config", cfg.to_str().unwrap()], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &Path| fs::read(d.join("noisy_third_order.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn compare_runs_both_designs() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(&tmp, "short.cfg", SHORT);
    let out = tmp.path().join("out");
    let o = seek(&["compare", "--config", cfg.to_str().unwrap(), "--jobs", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("short_third_order.csv").is_file());
    assert!(out.join("short_first_order.csv").is_file());
    let report = fs::read_to_string(out.join("short_compare.txt")).unwrap();
    assert!(report.contains("third_order.final_error = "));
    assert!(report.contains("first_order.final_error = "));
}

#[test]
fn certify_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");

    let o = seek(&["certify", "--preset", "table1", "-v"], &out);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("omega_threshold = 5.0000000000000000e-1"), "{stdout}");
    assert!(stdout.contains("verdict = true"));

    let slow = config(&tmp, "slow.cfg", "scenario.name = slow\nesc.omega = 0.4\n");
    let o = seek(&["certify", "--config", slow.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(out.join("slow_certificate.txt")).unwrap();
    assert!(report.contains("verdict = false"));

    // no analytic certificate for the light bowl
    let o = seek(&["certify", "--preset", "table3"], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let bad = config(&tmp, "bad.cfg", "esc.epsilon = -1\n");
    for cmd in ["simulate", "compare", "lbs", "avggap", "certify"] {
        let o = seek(&[cmd, "--config", bad.to_str().unwrap()], &out);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("esc.epsilon"), "{cmd}");
    }
    let o = seek(&["simulate", "--preset", "table9"], &out);
    assert_eq!(o.status.code(), Some(1));
    let unknown = config(&tmp, "unknown.cfg", "esc.gain = 3\n");
    let o = seek(&["simulate", "--config", unknown.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_dir_exits_one() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("not_a_dir");
    fs::write(&blocker, "").unwrap();
    let cfg = config(&tmp, "short.cfg", SHORT);
    let o = seek(&["simulate", "--config", cfg.to_str().unwrap()], &blocker.join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}

#[test]
fn numerical_abort_exits_two_and_keeps_partial() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        &tmp,
        "blow.cfg",
        "scenario.name = blow\nesc.c = 1e6\ninit.x0 = 50\nsim.t_end = 1\n",
    );
    let out = tmp.path().join("out");
    let o = seek(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let partial = fs::read_to_string(out.join("blow_third_order_partial.csv")).unwrap();
    assert!(partial.lines().count() >= 2);
}

#[test]
fn lbs_writes_certificate_decay_and_envelope() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(&tmp, "lbs.cfg", "scenario.name = lbs\nsim.t_end = 20\n");
    let out = tmp.path().join("out");
    let o = seek(&["lbs", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(out.join("lbs_lbs_report.txt")).unwrap();
    assert!(report.contains("verdict = true"));
    assert!(report.contains("decay_rate = "));
    assert!(report.contains("max_vdot = -"));
    let env = fs::read_to_string(out.join("lbs_lbs_envelope.csv")).unwrap();
    assert!(env.starts_with("t,envelope_error\n"));
}

#[test]
fn avggap_sweep_is_sorted_and_job_count_independent() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(&tmp, "gap.cfg", "scenario.name = gap\n");
    let run = |jobs: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = seek(
            &[
                "avggap",
                "--config",
                cfg.to_str().unwrap(),
                "--eps",
                "0.02,0.01,0.05",
                "--horizon",
                "0.5",
                "--jobs",
                jobs,
            ],
            &out,
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out.join("gap_avggap.csv")).unwrap()
    };
    let serial = run("1", "serial");
    assert_eq!(serial, run("3", "parallel"));
    let eps: Vec<f64> = serial
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(eps, vec![0.01, 0.02, 0.05]);
}

#[test]
fn seek_out_env_is_the_fallback_directory() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_seek"))
        .args(["certify", "--preset", "table2"])
        .env("SEEK_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(tmp.path().join("table2_certificate.txt")).unwrap();
    assert!(report.contains("note = sim-replay of experimental parameters"));
}

#[test]
fn presets_match_embedded_constants() {
    let t1 = preset("table1").unwrap();
    assert_eq!(
        (t1.params.a, t1.params.c, t1.params.epsilon, t1.params.omega),
        (0.5, 0.5, 0.001, 1.4)
    );
    assert_eq!((t1.init.x0, t1.init.y0), (1.6, -1.4));
    assert_eq!(t1.target(), (1.0, -2.0));
    assert!(!t1.params.hpf_enabled());

    let t2 = preset("table2").unwrap();
    assert_eq!(
        (
            t2.params.a,
            t2.params.c,
            t2.params.epsilon,
            t2.params.omega,
            t2.params.hpf_gain
        ),
        (0.01121, 10.0, 0.2992, 1.4, 1.0)
    );
    assert_eq!((t2.init.x0, t2.init.y0), (1.6, -1.4));

    let t3 = preset("table3").unwrap();
    assert_eq!(
        (
            t3.params.a,
            t3.params.c,
            t3.params.epsilon,
            t3.params.omega,
            t3.params.hpf_gain
        ),
        (0.006665, 0.001, 0.1496, 1.4, 6.0)
    );
    assert_eq!((t3.init.x0, t3.init.y0), (1.3, -1.7));
    assert_eq!(t3.field.kind(), "light");
}
