use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn run(args: &[&str], dir: &Path) -> Output {
    run_env(args, dir, None)
}

fn run_env(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qcbtafqmc"));
    cmd.args(args).current_dir(dir);
    if let Some(t) = threads {
        cmd.env("QCBTAFQMC_THREADS", t);
    }
    cmd.output().unwrap()
}

/// Writes `config.toml` into a fresh directory.
fn setup(body: &str, fcidump: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("fcidump = {:?}\noutput_dir = \"out\"\n{body}", data(fcidump).display().to_string());
    std::fs::write(dir.path().join("config.toml"), text).unwrap();
    dir
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

const CFG: &[&str] = &["--config", "config.toml"];

fn args<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(CFG);
    v.extend_from_slice(extra);
    v
}

#[test]
fn exact_writes_state_and_energy() {
    let dir = setup("seed = 3\n", "h2_sto3g.fcidump");
    let out = run(&args("exact", &[]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    assert_eq!(data_lines(&o.join("state.txt")).len(), 4);
    let e = json(&o.join("exact.json"));
    assert!((e["energy"].as_f64().unwrap() - -1.1372838344885023).abs() < 1e-8);
    assert_eq!(e["seed"], 3);
    assert_eq!(e["config_hash"].as_str().unwrap().len(), 64);
    let state = std::fs::read(o.join("state.txt")).unwrap();
    assert!(String::from_utf8_lossy(&state).contains("config_hash"));
    assert!(run(&args("exact", &[]), dir.path()).status.success());
    assert_eq!(std::fs::read(o.join("state.txt")).unwrap(), state);
}

#[test]
fn missing_fcidump_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), "fcidump = \"nowhere.fcidump\"\n").unwrap();
    let out = run(&args("exact", &[]), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.fcidump"));
    let out = run(&["exact", "--config", "absent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_many_orbitals_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("big.fcidump"),
        "&FCI NORB=40, NELEC=2, MS2=0,\n&END\n  1.0  1  1  1  1\n  0.0  0  0  0  0\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("config.toml"), "fcidump = \"big.fcidump\"\n").unwrap();
    let out = run(&args("exact", &[]), dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exact_tomography_has_unit_fidelity() {
    let dir = setup("", "h4_chain_sto3g.fcidump");
    assert!(run(&args("exact", &[]), dir.path()).status.success());
    let out = run(&args("tomograph", &["--shots", "inf"]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = json(&dir.path().join("out/tomograph.json"));
    assert!((t["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(t["provenance"]["total_measurements"].is_null());
}

#[test]
fn million_shot_budget_with_five_determinants() {
    let dir = setup("[cbt]\nshots = 1000000\nr_max = 5\n", "h4_chain_sto3g.fcidump");
    assert!(run(&args("exact", &[]), dir.path()).status.success());
    assert!(run(&args("tomograph", &[]), dir.path()).status.success());
    let t = json(&dir.path().join("out/tomograph.json"));
    assert_eq!(t["provenance"]["total_measurements"], 9_000_000);
    assert_eq!(t["provenance"]["r"], 5);
}

#[test]
fn shot_ladder_sweep() {
    let dir = setup("[cbt]\nsweep_shots = [1000, 10000, 100000, 1000000]\nsweep_seeds = 20\n", "h2_sto3g.fcidump");
    assert!(run(&args("exact", &[]), dir.path()).status.success());
    assert!(run(&args("tomograph", &[]), dir.path()).status.success());
    let rows = data_lines(&dir.path().join("out/sweep.csv"));
    assert_eq!(rows[0], "shots,seed,r,total_measurements,fidelity,infidelity");
    assert_eq!(rows.len() - 1, 80);
}

const SHORT_AFQMC: &str = "[afqmc]\nblocks = 60\nn_equilibration = 10\nn_walkers = 24\nsteps_per_block = 5\ncholesky_threshold = 1e-10\n";

#[test]
fn degenerate_energy_matches_fci_and_replays() {
    let dir = setup(SHORT_AFQMC, "h2_sto3g.fcidump");
    let out = run(&args("energy", &[]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("out/energy.json");
    let e = json(&path);
    let total = e["total"].as_f64().unwrap();
    let stderr = e["total_stderr"].as_f64().unwrap();
    assert!((total - -1.1372838344885023).abs() <= stderr.max(1e-6));
    let first = std::fs::read(&path).unwrap();
    let csv = std::fs::read(dir.path().join("out/afqmc_full.csv")).unwrap();
    assert!(run_env(&args("energy", &[]), dir.path(), Some("3")).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), first);
    assert_eq!(std::fs::read(dir.path().join("out/afqmc_full.csv")).unwrap(), csv);
    assert!(run(&args("energy", &["--seed", "8"]), dir.path()).status.success());
    assert_ne!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn invalid_active_space_is_an_input_error() {
    let body = format!("{SHORT_AFQMC}[active_space]\nn_active_orb = 2\nn_active_elec = 4\nfrozen_orbitals = [0]\n");
    let dir = setup(&body, "h4_chain_sto3g.fcidump");
    let out = run(&args("energy", &[]), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("active space"));
}

#[test]
fn afqmc_from_trial_file_is_thread_independent() {
    let dir = setup(&format!("[cbt]\nshots = 20000\nr_max = 6\n{SHORT_AFQMC}"), "h4_chain_sto3g.fcidump");
    assert!(run(&args("exact", &[]), dir.path()).status.success());
    assert!(run(&args("tomograph", &[]), dir.path()).status.success());
    let trial = dir.path().join("out/trial.txt");
    let t = trial.to_str().unwrap();
    assert!(run_env(&args("afqmc", &["--trial", t]), dir.path(), Some("1")).status.success());
    let one = std::fs::read(dir.path().join("out/afqmc.csv")).unwrap();
    assert!(run_env(&args("afqmc", &["--trial", t]), dir.path(), Some("4")).status.success());
    assert_eq!(std::fs::read(dir.path().join("out/afqmc.csv")).unwrap(), one);
    let bad = run_env(&args("afqmc", &[]), dir.path(), Some("zero"));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bundled_cbs_regression_passes() {
    let body = "[cbs]\nregression = true\n\
        [[cbs.reactions]]\nname = \"N2O\"\nreactants = [\"C2H4\", \"N2O\"]\ntransition_state = \"TS1\"\nproduct = \"P1\"\n";
    let dir = setup(body, "h2_sto3g.fcidump");
    let out = run(&args("cbs", &[]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&dir.path().join("out/cbs.json"));
    assert_eq!(c["regression"]["all_pass"], true);
    assert!((c["species"]["C2H4"]["reference"]["e_inf"].as_f64().unwrap() - -78.0697).abs() < 1.5e-4);
    let barrier = c["reactions"]["N2O"]["barrier_kcal_mol"].as_f64().unwrap();
    assert!((barrier - 27.6).abs() < 0.2);
}

#[test]
fn cbs_scheme_errors_and_constant_series() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two.csv"), "species,cardinal,e_ref,e_corr\nX,3,-1.0,-0.5\nX,4,-1.0,-0.5\n").unwrap();
    std::fs::write(dir.path().join("config.toml"), "[cbs]\ncsv = \"two.csv\"\n").unwrap();
    let out = run(&args("cbs", &[]), dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(
        dir.path().join("config.toml"),
        "[cbs]\ncsv = \"two.csv\"\nreference_scheme = \"none\"\ncorrelation_scheme = \"inverse_cube\"\n",
    )
    .unwrap();
    assert!(run(&args("cbs", &[]), dir.path()).status.success());
    let c = json(&dir.path().join("cbs.json"));
    assert!((c["species"]["X"]["correlation"]["e_inf"].as_f64().unwrap() - -0.5).abs() < 1e-15);
}
