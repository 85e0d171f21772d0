use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const GBN_RATES: &str = "lambda_g=11.0926\nlambda_b=5.6722\nlambda_n=3.5248\n\
mu_g=0.1824\nmu_b=0.1828\nmu_n=0.2980\ntheta=0.0714\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafdeg"))
        .current_dir(dir)
        .env_remove("LEAFDEG_OUT_DIR")
        .args(args)
        .output()
        .expect("spawn leafdeg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn field(text: &str, key: &str) -> f64 {
    text.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} not in {text}"))
        .parse()
        .unwrap()
}

fn with_gbn_rates() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("gbn.txt"), GBN_RATES).unwrap();
    dir
}

#[test]
fn state_counts() {
    let dir = TempDir::new().unwrap();
    for (args, want) in [
        (&["states", "gbn"][..], "4000"),
        (&["states", "lnl"][..], "370"),
        (&["states", "simple", "--cm", "1"][..], "2"),
    ] {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout(&o).trim(), want);
    }
}

#[test]
fn state_listing_has_header() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["states", "lnl", "--list", "s.csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("index,k_limewire,k_non_limewire"));
    assert_eq!(text.lines().count(), 371);
}

#[test]
fn solve_gbn_class_means() {
    let dir = with_gbn_rates();
    let o = run(dir.path(), &["solve", "gbn", "--rates", "gbn.txt"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!((field(&out, "good") - 23.04).abs() < 0.5);
    assert!((field(&out, "bad") - 1.26).abs() < 0.5);
    assert!((field(&out, "non_limewire") - 2.66).abs() < 0.5);
    for f in ["equilibrium.csv", "marginal.csv", "class_marginals.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn csv_output_is_locale_independent() {
    let dir = with_gbn_rates();
    let o = Command::new(env!("CARGO_BIN_EXE_leafdeg"))
        .current_dir(dir.path())
        .env("LC_ALL", "de_DE.UTF-8")
        .args(["solve", "gbn", "--rates", "gbn.txt"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("marginal.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("degree,probability"));
    for line in lines {
        let (_, p) = line.split_once(',').unwrap();
        assert!(p.parse::<f64>().is_ok(), "{line}");
        assert_eq!(line.matches(',').count(), 1);
    }
}

#[test]
fn solve_simple_vanishing_arrivals() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["solve", "simple", "-r", "lambda=1e-9", "-r", "mu=1"],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("marginal.csv")).unwrap();
    let p0: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((p0 - 1.0).abs() < 1e-8);
}

#[test]
fn out_dir_from_env() {
    let dir = with_gbn_rates();
    let o = Command::new(env!("CARGO_BIN_EXE_leafdeg"))
        .current_dir(dir.path())
        .env("LEAFDEG_OUT_DIR", "results")
        .args([
            "solve", "simple", "-r", "lambda=2", "-r", "mu=1", "--cm", "5",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("results/marginal.csv").exists());
}

#[test]
fn compare_self_and_disjoint() {
    let dir = with_gbn_rates();
    assert_eq!(
        code(&run(dir.path(), &["solve", "gbn", "--rates", "gbn.txt"])),
        0
    );
    let o = run(dir.path(), &["compare", "marginal.csv", "marginal.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "0");

    fs::write(dir.path().join("a.csv"), "degree,probability\n0,1\n1,0\n").unwrap();
    fs::write(dir.path().join("b.csv"), "degree,probability\n0,0\n1,1\n").unwrap();
    let o = run(dir.path(), &["compare", "a.csv", "b.csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "2");

    fs::write(dir.path().join("c.csv"), "degree,probability\n0,1\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["compare", "a.csv", "c.csv"])), 1);
}

#[test]
fn empty_histogram_is_input_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("h.csv"), "").unwrap();
    let o = run(dir.path(), &["fit", "gbn", "--histogram", "h.csv"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn bad_inputs_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["states", "nosuch"])), 1);
    assert_eq!(
        code(&run(
            dir.path(),
            &["states", "gbn", "--cm", "10", "--cg", "12"]
        )),
        1
    );
    assert_eq!(code(&run(dir.path(), &["solve", "gbn"])), 1);
    assert_eq!(
        code(&run(
            dir.path(),
            &["solve", "simple", "-r", "lambda=-1", "-r", "mu=1"]
        )),
        1
    );
    assert_eq!(
        code(&run(dir.path(), &["solve", "simple", "-r", "lambda"])),
        1
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &["simulate", "simple", "-r", "lambda=1", "-r", "mu=1"]
        )),
        1
    );
    fs::write(dir.path().join("h.csv"), "degree,count\n40,3\n").unwrap();
    assert_eq!(
        code(&run(dir.path(), &["fit", "gbn", "--histogram", "h.csv"])),
        1
    );
}

#[test]
fn unconverged_fit_exits_two() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("h.csv"),
        "degree,count\n0,1\n1,3\n2,5\n3,2\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "fit",
            "simple",
            "--histogram",
            "h.csv",
            "--cm",
            "3",
            "--max-iter",
            "2",
            "--restarts",
            "1",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("converged=false"));
    assert!(dir.path().join("fit_params.txt").exists());
}

#[test]
fn event_cap_exits_three() {
    let dir = with_gbn_rates();
    let o = run(
        dir.path(),
        &[
            "simulate",
            "gbn",
            "--rates",
            "gbn.txt",
            "--lives",
            "10",
            "--max-events",
            "1",
        ],
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_writes_estimate() {
    let dir = with_gbn_rates();
    let o = run(
        dir.path(),
        &[
            "simulate", "gbn", "--rates", "gbn.txt", "--lives", "500", "--seed", "7", "-o", "e.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("degree,probability,std_error"));
    assert_eq!(text.lines().count(), 32);
    let again = run(
        dir.path(),
        &[
            "simulate", "gbn", "--rates", "gbn.txt", "--lives", "500", "--seed", "7", "-o", "f.csv",
        ],
    );
    assert_eq!(code(&again), 0);
    assert_eq!(text, fs::read_to_string(dir.path().join("f.csv")).unwrap());
}

#[test]
fn gbn_fit_recovers_own_curve() {
    let dir = with_gbn_rates();
    assert_eq!(
        code(&run(dir.path(), &["solve", "gbn", "--rates", "gbn.txt"])),
        0
    );
    let o = run(
        dir.path(),
        &[
            "fit",
            "gbn",
            "--histogram",
            "marginal.csv",
            "--rates",
            "gbn.txt",
            "--restarts",
            "1",
        ],
    );
    assert_eq!(code(&o), 0);
    assert!(field(&stdout(&o), "objective") < 1e-3);
    let o = run(
        dir.path(),
        &["compare", "marginal.csv", "fitted_marginal.csv"],
    );
    assert!(stdout(&o).trim().parse::<f64>().unwrap() < 1e-3);
}

#[test]
fn lnl_fit_from_gbn_init() {
    let dir = with_gbn_rates();
    assert_eq!(
        code(&run(dir.path(), &["solve", "gbn", "--rates", "gbn.txt"])),
        0
    );
    let o = run(
        dir.path(),
        &[
            "fit",
            "lnl",
            "--histogram",
            "marginal.csv",
            "--init-from-gbn",
            "gbn.txt",
            "--restarts",
            "1",
            "--plot",
            "fit.svg",
        ],
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("model=lnl"));
    assert!(field(&stdout(&o), "objective") < 1e-3);
    let svg = fs::read_to_string(dir.path().join("fit.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let series = fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    assert_eq!(series.lines().next(), Some("degree,empirical,lnl"));

    let o = run(
        dir.path(),
        &[
            "fit",
            "gbn",
            "--histogram",
            "marginal.csv",
            "--init-from-gbn",
            "gbn.txt",
        ],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn finite_life_marginal_matches_golden() {
    let dir = TempDir::new().unwrap();
    let golden = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/golden/finite_life_fitted.csv"
    );
    let o = run(
        dir.path(),
        &[
            "solve",
            "finite-life",
            "-r",
            "lambda=10.5179",
            "-r",
            "mu=0.2116",
            "-r",
            "theta=0.0374",
        ],
    );
    assert_eq!(code(&o), 0);
    let o = run(dir.path(), &["compare", "marginal.csv", golden]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).trim().parse::<f64>().unwrap() < 1e-8);
}
