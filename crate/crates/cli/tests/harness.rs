use std::fs;
use std::path::Path;
use std::process::Command;

use pawl_cli::artifacts::{read_metrics, CSV_FILES, FAILURE_MARKER, SAMPLES};
use pawl_cli::config::{Algorithm, TargetName};
use pawl_cli::{compare_runs, run_experiment, ExperimentConfig, RunSummary};

fn trimodal_config(seed: u64, root: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::with_seed(seed);
    c.output_dir = Some(root.to_path_buf());
    c.run.n_chains = 2;
    c.run.iterations = 2500;
    c.run.prelim_iterations = 500;
    c.binning.n_bins = 3;
    c.proposal.sigma0 = 0.1;
    c
}

fn pawl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pawl"))
}

#[test]
fn trimodal_run_writes_every_artifact() {
    let root = tempfile::tempdir().unwrap();
    let dir = run_experiment(&trimodal_config(1, root.path())).unwrap();
    assert_eq!(dir, root.path().join("trimodal-pawl-seed1"));
    for name in CSV_FILES {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    let events = fs::read_to_string(dir.join("boundary-events.csv")).unwrap();
    assert!(events.lines().count() > 1, "no boundary events:\n{events}");

    let summary = RunSummary::read(&dir).unwrap();
    assert_eq!(summary.status, "ok");
    // N (T + T_init)
    assert_eq!(summary.density_evaluations, 2 * (2500 + 500));
    let metrics = read_metrics(&dir).unwrap();
    assert_eq!(metrics.get("density_evaluations"), Some(6000.0));
    let occupancy: f64 = [
        "occupancy_mode1",
        "occupancy_mode2",
        "occupancy_mode3",
        "occupancy_rest",
    ]
    .iter()
    .map(|m| metrics.get(m).unwrap())
    .sum();
    assert!((occupancy - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_gives_identical_csv_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = run_experiment(&trimodal_config(4, a.path())).unwrap();
    let db = run_experiment(&trimodal_config(4, b.path())).unwrap();
    for name in CSV_FILES {
        assert_eq!(
            fs::read(da.join(name)).unwrap(),
            fs::read(db.join(name)).unwrap(),
            "{name}"
        );
    }
    let other = run_experiment(&trimodal_config(5, a.path())).unwrap();
    assert_ne!(
        fs::read(da.join(SAMPLES)).unwrap(),
        fs::read(other.join(SAMPLES)).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut one = trimodal_config(8, a.path());
    one.threads = 1;
    let mut four = trimodal_config(8, b.path());
    four.threads = 4;
    let da = run_experiment(&one).unwrap();
    let db = run_experiment(&four).unwrap();
    for name in CSV_FILES {
        assert_eq!(
            fs::read(da.join(name)).unwrap(),
            fs::read(db.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn single_step_smc_counts_only_initial_evaluations() {
    let root = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::with_seed(2);
    c.output_dir = Some(root.path().to_path_buf());
    c.algorithm = Algorithm::Smc;
    c.target.name = TargetName::Mixture;
    c.smc.particles = 500;
    c.smc.steps = 1;
    let dir = run_experiment(&c).unwrap();
    let summary = RunSummary::read(&dir).unwrap();
    // M draws from p0, M evaluations for the single reweighting, no moves
    assert_eq!(summary.density_evaluations, 500);
    assert_eq!(summary.resampling_events, 0);
    let samples = fs::read_to_string(dir.join(SAMPLES)).unwrap();
    assert_eq!(samples.lines().count(), 501);
}

#[test]
fn baselines_run_on_discrete_targets() {
    let root = tempfile::tempdir().unwrap();
    for alg in [Algorithm::Pamh, Algorithm::TemperedMh, Algorithm::Pawl] {
        let mut c = ExperimentConfig::with_seed(3);
        c.output_dir = Some(root.path().to_path_buf());
        c.algorithm = alg;
        c.target.name = TargetName::Gprior;
        c.run.n_chains = 4;
        c.run.iterations = 300;
        c.run.prelim_iterations = 100;
        c.binning.manual_range = Some([377.0, 450.0]);
        let dir = run_experiment(&c).unwrap();
        let m = read_metrics(&dir).unwrap();
        assert!(m.get("inclusion_1").is_some());
        assert_eq!(m.get("theta_error").is_some(), alg == Algorithm::Pawl);
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let root = tempfile::tempdir().unwrap();
    let out = pawl()
        .args(["run", "--run.iterations", "5"])
        .env("PAWL_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let out = pawl()
        .args(["run", "--seed", "1", "--binning.no_such_key", "3"])
        .env("PAWL_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let out = pawl()
        .args(["run", "--seed", "1", "--run.flat_tolerance=0"])
        .env("PAWL_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.flat_tolerance"));
    assert_eq!(
        fs::read_dir(root.path()).unwrap().count(),
        0,
        "nothing may be written"
    );
}

#[test]
fn cli_runs_seeds_under_the_output_root() {
    let root = tempfile::tempdir().unwrap();
    let out = pawl()
        .args([
            "run",
            "--seeds",
            "0..2",
            "--run.n_chains",
            "2",
            "--run.iterations",
            "200",
            "--run.prelim_iterations",
            "50",
        ])
        .env("PAWL_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for seed in 0..2 {
        let dir = root.path().join(format!("trimodal-pawl-seed{seed}"));
        assert_eq!(RunSummary::read(&dir).unwrap().seed, seed);
    }
}

#[test]
fn help_lists_documented_defaults() {
    let out = pawl().args(["run", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("flat_tolerance = 0.5"), "{text}");
    assert!(text.contains("[binning]"));
}

#[test]
fn runtime_failure_leaves_a_marker() {
    let root = tempfile::tempdir().unwrap();
    // particles spread so far that every density underflows
    let mut c = ExperimentConfig::with_seed(1);
    c.output_dir = Some(root.path().to_path_buf());
    c.algorithm = Algorithm::Smc;
    c.smc.particles = 100;
    c.smc.initial_sd = 1e300;
    let err = run_experiment(&c).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    let dir = root.path().join("trimodal-smc-seed1");
    assert!(dir.join(FAILURE_MARKER).is_file());
    let summary = RunSummary::read(&dir).unwrap();
    assert_eq!(summary.status, "failed");
    assert!(summary.error.is_some());

    // malformed or degenerate input data is a configuration error
    let extreme = root.path().join("extreme.txt");
    fs::write(&extreme, "0\n1e200\n").unwrap();
    let mut c = ExperimentConfig::with_seed(1);
    c.output_dir = Some(root.path().to_path_buf());
    c.target.name = TargetName::Mixture;
    c.target.data = Some(extreme);
    assert_eq!(run_experiment(&c).unwrap_err().exit_code(), 2);

    let bad = root.path().join("bad.txt");
    fs::write(&bad, "0101\n011\n").unwrap();
    let mut c = ExperimentConfig::with_seed(1);
    c.output_dir = Some(root.path().to_path_buf());
    c.target.name = TargetName::Ising;
    c.target.data = Some(bad);
    assert_eq!(run_experiment(&c).unwrap_err().exit_code(), 2);
}

#[test]
fn compare_rows_and_medians() {
    let root = tempfile::tempdir().unwrap();
    let a = tempfile::tempdir().unwrap();
    let da = run_experiment(&trimodal_config(6, root.path())).unwrap();
    let db = run_experiment(&trimodal_config(6, a.path())).unwrap();
    let table = compare_runs(&[&da, &db]).unwrap();
    let rows = table.rows();
    assert_eq!(rows.len(), 3);
    let n = rows[0].len();
    // identical apart from the wall-clock column
    assert_eq!(rows[0][..n - 1], rows[1][..n - 1]);
    assert_eq!(rows[2][0], "median");
    let mode1 = table.median("pawl", "occupancy_mode1").unwrap();
    assert_eq!(Some(mode1), table.runs[0].metrics.get("occupancy_mode1"));

    let none: [&Path; 0] = [];
    assert!(compare_runs(&none).is_err());

    let mut g = ExperimentConfig::with_seed(6);
    g.output_dir = Some(root.path().to_path_buf());
    g.target.name = TargetName::Gaussian;
    g.run.n_chains = 2;
    g.run.iterations = 100;
    g.run.prelim_iterations = 20;
    let dg = run_experiment(&g).unwrap();
    let err = compare_runs(&[&da, &dg]).unwrap_err();
    assert!(err.to_string().contains("mixed targets"), "{err}");
    assert!(!dg.join(FAILURE_MARKER).exists());
}
