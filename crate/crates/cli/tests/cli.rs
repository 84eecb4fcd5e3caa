use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "experiment,param_json,n_index,estimate,exact,std_error,z_score";

fn gcrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcrm")).args(args).env_remove("GCRM_SEED").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

struct CsvRow {
    experiment: String,
    param_json: String,
    n_index: String,
    estimate: f64,
    exact: f64,
    z_score: f64,
}

fn rows(text: &str) -> Vec<CsvRow> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>().join(","), HEADER);
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(r.len(), 7);
            let real = |i: usize| r[i].parse::<f64>().unwrap();
            CsvRow {
                experiment: r[0].to_string(),
                param_json: r[1].to_string(),
                n_index: r[2].to_string(),
                estimate: real(3),
                exact: real(4),
                z_score: real(6),
            }
        })
        .collect()
}

fn stdout_rows(out: &Output) -> Vec<CsvRow> {
    rows(std::str::from_utf8(&out.stdout).unwrap())
}

#[track_caller]
fn assert_passes(args: &[&str]) -> Vec<CsvRow> {
    let out = gcrm(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_rows(&out);
    assert!(!r.is_empty());
    r
}

#[track_caller]
fn assert_config_error(args: &[&str]) {
    let out = gcrm(args);
    assert_eq!(code(&out), 2, "{args:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn orthogonality_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.csv");
    let out = gcrm(&["orthogonality", "--alpha", "1.0", "--max-degree", "6", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(r.len(), 49);
    assert!(r.iter().all(|row| (row.estimate - row.exact).abs() <= 1e-8));
    assert_eq!(r[1].n_index, "(0,1)");
}

#[test]
fn lemma_one_example() {
    let out = gcrm(&[
        "pair-corr",
        "--sampler",
        "a1",
        "--alpha",
        "1.5",
        "--b",
        "1",
        "--samples",
        "1000000",
        "--seed",
        "42",
        "--n",
        "1,2,3,4",
    ]);
    let r = stdout_rows(&out);
    assert_eq!(r.len(), 4);
    for (k, row) in r.iter().enumerate() {
        assert_eq!(row.exact, 0.5f64.powi(k as i32 + 1));
    }
    assert!(r.iter().all(|row| row.z_score.abs() <= 5.0), "z = {:?}", r.iter().map(|x| x.z_score).collect::<Vec<_>>());
    assert_eq!(code(&out), 0);
}

#[test]
fn subordinate_example() {
    let r = assert_passes(&[
        "subordinate",
        "--drift",
        "0",
        "--rate",
        "1",
        "--jump",
        "log4",
        "--t",
        "1",
        "--samples",
        "1000000",
        "--seed",
        "7",
    ]);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].n_index, "(1)");
    assert!((r[0].exact - (-0.5f64).exp()).abs() < 1e-15);
}

#[test]
fn schema_and_number_format() {
    let out = gcrm(&["pair-corr", "--sampler", "a3", "--alphas", "0.5,1", "--samples", "2000", "--seed", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with(&format!("{HEADER}\n")));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record.unwrap();
        for field in [&record[3], &record[4], &record[5], &record[6]] {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{field}");
        }
        let json: serde_json::Value = serde_json::from_str(&record[1]).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(json["seed"], 3);
        assert_eq!(json["samples"], 2000);
        assert_eq!(&record[0], "pair-corr");
    }
}

#[test]
fn output_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let out = gcrm(&["poisson-embed", "--samples", "50000", "--seed", seed, "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "5");
    assert_eq!(a, run("b.csv", "5"));
    assert_ne!(a, run("c.csv", "6"));
}

#[test]
fn environment_seed_is_a_default() {
    let with_env = |seed: &str, args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_gcrm")).args(args).env("GCRM_SEED", seed).output().unwrap().stdout
    };
    let args = ["dirichlet-moments", "--samples", "5000"];
    let env9 = with_env("9", &args);
    assert_eq!(env9, gcrm(&[&args[..], &["--seed", "9"]].concat()).stdout);
    assert_eq!(with_env("1", &[&args[..], &["--seed", "9"]].concat()), env9);
    let out = Command::new(env!("CARGO_BIN_EXE_gcrm")).args(args).env("GCRM_SEED", "nine").output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# density run\nalpha=1\nz=0.2,0.5\npanels=40\nout=ignored.csv\n").unwrap();
    let out_path = dir.path().join("d.csv");
    let out =
        gcrm(&["density-check", "--config", cfg.to_str().unwrap(), "--z", "0.8", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(r.iter().map(|x| x.n_index.as_str()).collect::<Vec<_>>(), ["mass z=0.8", "rho1 z=0.8"]);
    assert!(r[0].param_json.contains(r#""panels":40"#));
    assert!(!Path::new("ignored.csv").exists());

    std::fs::write(&cfg, "alpha: 1\n").unwrap();
    assert_config_error(&["density-check", "--config", cfg.to_str().unwrap()]);
    std::fs::write(&cfg, "kernel=constant\n").unwrap();
    assert_config_error(&["density-check", "--config", cfg.to_str().unwrap()]);
}

#[test]
fn configuration_errors_exit_two() {
    assert_config_error(&["no-such-experiment"]);
    assert_config_error(&[]);
    assert_config_error(&["orthogonality", "--alpha", "x"]);
    assert_config_error(&["orthogonality", "--alpha", "-1"]);
    assert_config_error(&["orthogonality", "--bogus", "1"]);
    assert_config_error(&["orthogonality", "--max-degree", "3", "--points", "2"]);
    assert_config_error(&["pair-corr"]);
    assert_config_error(&["pair-corr", "--sampler", "a9"]);
    assert_config_error(&["pair-corr", "--sampler", "a1", "--z", "0.5"]);
    assert_config_error(&["pair-corr", "--sampler", "dw", "--samples", "0", "--z", "0.5"]);
    assert_config_error(&["pair-corr", "--sampler", "a3", "--alphas", "1,1", "--n", "1,0,0"]);
    assert_config_error(&["pair-corr", "--sampler", "a1", "--b", "1e12", "--samples", "10"]);
    assert_config_error(&["laplace-ratio", "--kernel", "per-cell", "--bases", "0:0.5,1:0.5"]);
    assert_config_error(&["subordinate", "--mode", "factorization", "--alphas", "1"]);
    assert_config_error(&["orthogonality", "--out", "/nonexistent-dir/o.csv"]);
}

#[test]
fn gate_failure_exits_one() {
    let out = gcrm(&["laplace-ratio", "--kernel", "constant", "--z", "1", "--s", "3", "--t", "3", "--trunc", "3"]);
    assert_eq!(code(&out), 1);
    let r = stdout_rows(&out);
    assert!(r[0].z_score.abs() > 1.0);
    assert!(String::from_utf8(out.stderr).unwrap().contains("gate failed"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&gcrm(&["--help"])), 0);
    assert_eq!(code(&gcrm(&["pair-corr", "--help"])), 0);
}

#[test]
fn pair_samplers() {
    let n = ["--samples", "200000", "--seed", "11"];
    let cases: [&[&str]; 8] = [
        &["--sampler", "a2", "--alphas", "1,2", "--b", "1", "--pstar-prob", "0.5"],
        &["--sampler", "a3", "--alphas", "0.5,1,2", "--b", "1"],
        &["--sampler", "a4", "--alphas", "1,1", "--total-mass", "2", "--law", "beta-two-point:1,1", "--n", "1,1"],
        &["--sampler", "dw", "--alphas", "1,0.5", "--z", "0.6"],
        &["--sampler", "general", "--alphas", "1,1", "--kernel", "constant", "--z", "0.4"],
        &[
            "--sampler",
            "general",
            "--alphas",
            "1,1",
            "--total-mass",
            "2",
            "--kernel",
            "per-cell",
            "--bases",
            "0:0.5,0.5:0.5",
        ],
        &["--sampler", "general", "--alphas", "1,1", "--total-mass", "2", "--kernel", "random", "--law", "beta:1,1"],
        &[
            "--sampler",
            "general",
            "--alphas",
            "1,1",
            "--kernel",
            "common",
            "--eta",
            "0.5",
            "--construction",
            "directed",
        ],
    ];
    for case in cases {
        let args = [&["pair-corr"][..], case, &n].concat();
        let r = assert_passes(&args);
        assert!(r.iter().all(|x| x.experiment == "pair-corr"));
    }
    let r = assert_passes(
        &[
            &[
                "pair-corr",
                "--sampler",
                "a4",
                "--alphas",
                "1,1",
                "--total-mass",
                "2",
                "--law",
                "beta-two-point:1,1",
                "--n",
                "1,1",
            ][..],
            &n,
        ]
        .concat(),
    );
    assert!((r[0].exact - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn deterministic_experiments() {
    assert_passes(&["genfun-check", "--alpha", "2.5"]);
    for kernel in [
        &["--kernel", "constant", "--z", "0.3"][..],
        &["--kernel", "per-cell", "--bases", "0.1:0.5,0.8:0.5;point:0.4"],
        &["--kernel", "random", "--law", "beta:1.5,2"],
        &["--kernel", "common", "--eta", "0.4"],
    ] {
        let r = assert_passes(&[&["merge-check", "--alphas", "0.7,1.3", "--total-mass", "4"][..], kernel].concat());
        assert_eq!(r.len(), 7);
    }
    assert_passes(&["density-check"]);
    for kernel in [
        &["--kernel", "constant", "--z", "0.5"][..],
        &["--kernel", "common", "--eta", "0.3"],
        &["--kernel", "random", "--law", "0.2:0.5,0.9:0.5"],
    ] {
        let r =
            assert_passes(&[&["laplace-ratio", "--alphas", "1,2", "--s", "1", "--t", "0.5,2"][..], kernel].concat());
        assert_eq!(r.len(), 2);
    }
    let r = assert_passes(&["laplace-ratio", "--kernel", "constant", "--z", "0.5"]);
    assert!((r[0].exact - 8.0 / 7.0).abs() < 1e-15);
}

#[test]
fn monte_carlo_experiments() {
    let r = assert_passes(&["dirichlet-moments", "--theta", "5", "--seed", "2"]);
    assert_eq!(r.iter().map(|x| x.n_index.as_str()).collect::<Vec<_>>(), ["m1", "m2", "m3", "m4", "m5"]);
    assert_passes(&["stieltjes-check", "--theta", "1", "--lambda", "-1,0,0.5", "--seed", "4"]);
    assert_passes(&[
        "subordinate",
        "--mode",
        "semigroup",
        "--drift",
        "0.5",
        "--rate",
        "1",
        "--jump",
        "0.8",
        "--samples",
        "300000",
        "--seed",
        "8",
    ]);
    let r = assert_passes(&[
        "subordinate",
        "--mode",
        "factorization",
        "--drift",
        "0",
        "--rate",
        "1",
        "--jump",
        "log4",
        "--samples",
        "300000",
        "--seed",
        "9",
    ]);
    let gap = r.iter().find(|x| x.n_index == "gap (1,1)").unwrap();
    assert!(gap.exact > 0.1);
    let r = assert_passes(&[
        "subordinate",
        "--mode",
        "factorization",
        "--drift",
        "1",
        "--samples",
        "300000",
        "--seed",
        "9",
    ]);
    assert_eq!(r.iter().find(|x| x.n_index == "gap (1,1)").unwrap().exact, 0.0);
    let r = assert_passes(&[
        "poisson-embed",
        "--gamma-rate",
        "2",
        "--z-step",
        "0.5",
        "--t",
        "1",
        "--n",
        "1",
        "--samples",
        "300000",
    ]);
    assert!((r[0].exact - (-1.0f64).exp()).abs() < 1e-15);
}
