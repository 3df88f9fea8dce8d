use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &[&str] = &["--n-electron", "6", "--n-phonon", "3", "--n-max", "6"];

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
        .args(args)
        .env("POLARON_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn config_file(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

/// Data rows of a CSV written by the tool, header comment and column row removed.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = scratch("unknown_key");
    let cfg = config_file(&dir, "[domain]\nextnet = 3.0\n");
    let o = run(&dir, &["series", "--config", &cfg]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn malformed_toml_is_a_config_error() {
    let dir = scratch("malformed");
    let cfg = config_file(&dir, "[domain\n");
    assert_eq!(code(&run(&dir, &["hessian", "--config", &cfg])), 2);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = scratch("missing");
    assert_eq!(
        code(&run(
            &dir,
            &["hessian", "--config", "/nonexistent/run.toml"]
        )),
        2
    );
}

#[test]
fn empty_alpha_grid_is_a_config_error() {
    let dir = scratch("empty_alpha");
    let cfg = config_file(&dir, "[alpha]\ncount = 0\n");
    let o = run(&dir, &["validate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha grid is empty"));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = scratch("invalid");
    for body in [
        "[series]\nb_max = 11\n",
        "[tolerances]\nodd = 0.0\n",
        "[tolerances]\nidentity = -1e-10\n",
        "[fock]\nn_max = 40\n",
        "[domain]\nextent = -1.0\n",
        "[cutoff]\npolicy = \"explicit\"\nvalues = []\n",
    ] {
        let cfg = config_file(&dir, body);
        assert_eq!(code(&run(&dir, &["series", "--config", &cfg])), 2, "{body}");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = scratch("determinism");
    for sub in ["series", "hessian", "solve-pekar"] {
        let mut args = vec![sub];
        args.extend_from_slice(SMALL);
        let a = run(&dir, &[&args[..], &["--out", "a"]].concat());
        let b = run(&dir, &[&args[..], &["--out", "b"]].concat());
        assert_eq!(code(&a), 0);
        assert_eq!(code(&b), 0);
    }
    let mut names: Vec<_> = fs::read_dir(dir.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names {
        let x = fs::read(dir.join("a").join(&n)).unwrap();
        let y = fs::read(dir.join("b").join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
}

#[test]
fn every_file_carries_version_and_config_hash() {
    let dir = scratch("headers");
    let mut args = vec!["series", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let mut args = vec!["bogoliubov-spectrum", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let out = dir.join("o");
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with(&format!(
        "# polaron {} command=bogoliubov-spectrum config_sha256=",
        env!("CARGO_PKG_VERSION")
    )));
    let hash = first.rsplit('=').next().unwrap();
    assert_eq!(hash.len(), 64);
    let j = json(&out.join("m_matrices.json"));
    assert_eq!(j["polaron_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(j["config_sha256"], hash);
}

#[test]
fn config_hash_tracks_the_model_but_not_the_output_directory() {
    let dir = scratch("hash");
    let header = |out: &str, extra: &[&str]| {
        let mut args = vec!["hessian", "--out", out];
        args.extend_from_slice(SMALL);
        args.extend_from_slice(extra);
        assert_eq!(code(&run(&dir, &args)), 0);
        fs::read_to_string(dir.join(out).join("tau.csv"))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(header("x", &[]), header("y", &[]));
    assert_ne!(header("x", &[]), header("z", &["--extent", "8.0"]));
}

#[test]
fn output_root_env_is_used_for_relative_paths() {
    let dir = scratch("root");
    let mut args = vec!["hessian", "--out", "nested/run"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    assert!(dir.join("nested/run/tau.csv").exists());
}

#[test]
fn interaction_off_gives_first_dirichlet_eigenvalue() {
    let dir = scratch("off");
    let o = run(
        &dir,
        &[
            "solve-pekar",
            "--coupling",
            "0",
            "--extent",
            "3.0",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&dir.join("o/pekar.json"));
    let lambda1 = (std::f64::consts::PI / 3.0).powi(2);
    let e = j["data"]["e_pek"].as_f64().unwrap();
    assert!((e - lambda1).abs() < 1e-12, "{e} vs {lambda1}");
}

#[test]
fn ground_series_has_vanishing_odd_orders() {
    let dir = scratch("odd");
    let mut args = vec!["series", "--level", "1", "--b-max", "4", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let rows = csv_rows(&dir.join("o/series_n1_s1.csv"));
    assert_eq!(rows.len(), 5);
    let e: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(e[1], 0.0);
    assert_eq!(e[3], 0.0);
    assert!(e[2] != 0.0 && e[4] != 0.0);
    let raw: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(raw[1].abs() < 1e-9 && raw[3].abs() < 1e-9 * e[2].abs().max(1.0));
}

#[test]
fn order_zero_table_is_the_level_energy() {
    let dir = scratch("b0");
    let mut args = vec!["series", "--b-max", "0", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let rows = csv_rows(&dir.join("o/series_n1_s1.csv"));
    assert_eq!(rows.len(), 1);
    let mut args = vec!["bogoliubov-spectrum", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let spec = csv_rows(&dir.join("o/spectrum.csv"));
    assert_eq!(rows[0][1], spec[0][1]);
}

#[test]
fn degenerate_level_yields_one_table_per_branch() {
    let dir = scratch("degenerate");
    let cfg = config_file(
        &dir,
        "[domain]\nkind = \"square\"\nextent = 6.0\nn_electron = 10\nn_phonon = 3\n[fock]\nn_max = 4\n[series]\nlevel = 2\nb_max = 2\n",
    );
    let o = run(&dir, &["series", "--config", &cfg, "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&dir.join("o/m_matrices.json"));
    let branches = j["data"].as_array().unwrap();
    assert_eq!(branches.len(), 2);
    for (i, b) in branches.iter().enumerate() {
        assert_eq!(b["d"], 2);
        assert_eq!(b["s"], i + 1);
        assert!(dir.join(format!("o/series_n2_s{}.csv", i + 1)).exists());
    }
}

#[test]
fn energy_window_selects_every_cluster_inside() {
    let dir = scratch("window");
    let mut args = vec!["bogoliubov-spectrum", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let spec = csv_rows(&dir.join("o/spectrum.csv"));
    let e: Vec<f64> = spec.iter().map(|r| r[1].parse().unwrap()).collect();
    let body = format!(
        "[domain]\nn_electron = 6\nn_phonon = 3\n[fock]\nn_max = 6\n[series]\nb_max = 2\nenergy_window = [{}, {}]\n",
        e[0] - 1e-6,
        0.5 * (e[1] + e[2])
    );
    let cfg = config_file(&dir, &body);
    assert_eq!(
        code(&run(&dir, &["series", "--config", &cfg, "--out", "w"])),
        0
    );
    assert!(dir.join("w/series_n1_s1.csv").exists());
    assert!(dir.join("w/series_n2_s1.csv").exists());
    assert!(!dir.join("w/series_n3_s1.csv").exists());
}

#[test]
fn odd_tolerance_violation_is_a_numerical_failure() {
    let dir = scratch("numerical");
    let cfg = config_file(
        &dir,
        "[domain]\nn_electron = 6\nn_phonon = 3\n[fock]\nn_max = 6\n[tolerances]\nodd = 1e-40\n",
    );
    let o = run(&dir, &["series", "--config", &cfg, "--out", "o"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_reports_and_fails_with_exit_four() {
    let dir = scratch("validate");
    let mut args = vec!["validate", "--criteria", "2,9", "--out", "ok"];
    args.extend_from_slice(SMALL);
    let o = run(&dir, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("criterion  2 PASS"));
    let j = json(&dir.join("ok/validation.json"));
    assert_eq!(j["data"].as_array().unwrap().len(), 2);

    let cfg = config_file(&dir, "[domain]\nn_electron = 6\nn_phonon = 3\n[fock]\nn_max = 6\n[tolerances]\nidentity = 1e-300\n");
    let o = run(
        &dir,
        &[
            "validate",
            "--criteria",
            "2",
            "--config",
            &cfg,
            "--out",
            "bad",
        ],
    );
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion  2 FAIL"));
    assert!(dir.join("bad/validation.json").exists());
}

#[test]
fn validate_rejects_unknown_criteria() {
    let dir = scratch("criteria");
    assert_eq!(code(&run(&dir, &["validate", "--criteria", "11"])), 2);
}

#[test]
fn sweep_and_gross_check_write_their_tables() {
    let dir = scratch("sweep");
    let mut args = vec!["sweep", "--b-max", "2", "--alpha-count", "6", "--out", "o"];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let fits = json(&dir.join("o/fits.json"));
    let all = fits["data"]["fits"].as_array().unwrap();
    assert!(all.iter().all(|f| f["passed"] == true));
    assert_eq!(csv_rows(&dir.join("o/sweep.csv")).len(), 4 * 6);

    let mut args = vec![
        "gross-check",
        "--b-max",
        "2",
        "--alpha-count",
        "6",
        "--out",
        "o",
    ];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&dir, &args)), 0);
    let g = json(&dir.join("o/gross.json"));
    let cuts = g["data"]["cutoffs"].as_array().unwrap();
    assert_eq!(cuts.len(), 3);
    for c in cuts {
        assert!(c["identity_deviation"].as_f64().unwrap() < 1e-10);
    }
    let last = &cuts[2];
    assert_eq!(last["trivial"], true);
    assert!(last["k_minus_v"][0]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64().unwrap().abs() < 1e-12));
}
