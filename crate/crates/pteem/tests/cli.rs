use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pteem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pteem")).args(args).env_remove("PTEEM_OUT_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn out_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for args in [
        vec!["mixture2d", "--burnin", "0"],
        vec!["mixture2d", "--algorithm", "mcmc"],
        vec!["galaxy", "--algorithm", "ees"],
        vec!["tfbs", "--algorithm", "pt"],
        vec!["tfbs", "--width", "8"],
        vec!["mixture2d", "--variant", "skewed"],
        vec!["mixture2d", "--not-a-flag"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", out_arg(&out)]);
        let o = pteem(&a);
        assert_eq!(code(&o), 2, "{args:?}: {}", text(&o.stderr));
        assert!(!text(&o.stderr).is_empty());
    }
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[run]\nruns = 2\n[mixture2d]\nvarient = \"equal\"\n").unwrap();
    let o = pteem(&["mixture2d", "--config", out_arg(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("varient"), "{}", text(&o.stderr));
}

#[test]
fn runtime_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let missing = dir.path().join("missing.fa");
    let o = pteem(&["tfbs", "--input", out_arg(&missing), "--out", out_arg(&out)]);
    assert_eq!(code(&o), 3, "{}", text(&o.stderr));
    let bad = dir.path().join("bad.fa");
    fs::write(&bad, ">s1\nACGTXACGTACGTACGT\n").unwrap();
    let o = pteem(&["tfbs", "--input", out_arg(&bad), "--out", out_arg(&out)]);
    assert_eq!(code(&o), 3);
    assert!(text(&o.stderr).contains("line 2"), "{}", text(&o.stderr));
    let o = pteem(&["diagnose", out_arg(&missing)]);
    assert_eq!(code(&o), 3);
    let o = pteem(&["galaxy", "--data", out_arg(&missing), "--out", out_arg(&out)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn budget_prints_move_counts() {
    let o = pteem(&["budget", "mixture2d"]);
    assert_eq!(code(&o), 0);
    let s = text(&o.stdout);
    assert!(s.contains("local moves   100000") && s.contains("global moves  5000"), "{s}");
    let o = pteem(&["budget", "tfbs", "--algorithm", "ees"]);
    let s = text(&o.stdout);
    assert!(s.contains("local 18160  global 1640"), "{s}");
    let o = pteem(&["budget", "galaxy", "--iterations", "100", "--burnin", "20"]);
    let s = text(&o.stdout);
    assert!(s.contains("local moves   2400") && s.contains("global moves  120"), "{s}");
}

#[test]
fn flags_override_config_file_and_env_overrides_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let file_out = dir.path().join("from_file");
    let env_out = dir.path().join("from_env");
    fs::write(
        &cfg,
        format!("[run]\nseed = 5\nruns = 1\niterations = 50\nburnin = 20\nout = \"{}\"\n", file_out.display()),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pteem"))
        .args(["mixture2d", "--config", out_arg(&cfg), "--seed", "7"])
        .env("PTEEM_OUT_DIR", &env_out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let err = text(&o.stderr);
    assert!(err.contains("--seed 7 overrides the config value 5"), "{err}");
    assert!(err.contains("PTEEM_OUT_DIR"), "{err}");
    assert!(!file_out.exists());
    let manifest = fs::read_to_string(env_out.join("mixture2d/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 7"));
    assert!(manifest.contains("iterations = 50"));
}

#[test]
fn manifest_records_default_budget() {
    let dir = tempfile::tempdir().unwrap();
    let o = pteem(&["mixture2d", "--runs", "1", "--out", out_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let m: toml::Table = toml::from_str(&fs::read_to_string(dir.path().join("mixture2d/manifest.toml")).unwrap()).unwrap();
    let engine = &m["budget"]["engine"];
    assert_eq!(engine["local_moves"].as_float(), Some(100_000.0));
    assert_eq!(engine["global_moves"].as_float(), Some(5_000.0));
    assert_eq!(m["seed"].as_integer(), Some(1));
    assert!(!m.contains_key("workers"));
    let timing: toml::Table = toml::from_str(&fs::read_to_string(dir.path().join("mixture2d/timing.toml")).unwrap()).unwrap();
    assert!(timing["wall_seconds"].as_float().unwrap() > 0.0);
}

#[test]
fn every_output_file_is_read_back_by_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    for args in [
        vec!["mixture2d", "--runs", "2", "--iterations", "200", "--burnin", "100"],
        vec!["galaxy", "--runs", "1", "--iterations", "100", "--burnin", "50"],
        vec!["tfbs", "--runs", "1", "--iterations", "60", "--burnin", "20"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", out]);
        assert_eq!(code(&pteem(&a)), 0);
    }
    let o = pteem(&["diagnose", out]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let s = text(&o.stdout);
    let mut files = 0;
    let mut stack = vec![dir.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files += 1;
                assert!(s.contains(&format!("{}:", p.display())), "{} not reported", p.display());
            }
        }
    }
    assert!(files > 30);
    assert!(s.contains("repartition:"));
    assert!(s.contains("accepted global moves by partner"));

    let run = dir.path().join("tfbs/run_001/occupancy.csv");
    let o = pteem(&["diagnose", out_arg(&run)]);
    assert_eq!(code(&o), 0);
    let s = text(&o.stdout);
    assert_eq!(s.lines().filter(|l| l.starts_with("   ")).count(), 15, "{s}");
}

#[test]
fn tfbs_runs_on_user_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let fa = dir.path().join("in.fa");
    fs::write(&fa, ">a\nACGTTGACGATTGACCA\n>b\nTTGACAGGCATGACC\n").unwrap();
    let o = pteem(&[
        "tfbs", "--input", out_arg(&fa), "--width", "5", "--runs", "1", "--iterations", "40", "--burnin", "10", "--out",
        out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let run = dir.path().join("tfbs/run_001");
    assert!(run.join("posterior.csv").exists());
    assert!(!run.join("planted.csv").exists());
    let counts = fs::read_to_string(run.join("counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 6);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, workers: &str| {
        let out = dir.path().join(sub);
        let o = pteem(&[
            "galaxy", "--runs", "3", "--iterations", "80", "--burnin", "20", "--workers", workers, "--out", out_arg(&out),
        ]);
        assert_eq!(code(&o), 0);
        out.join("galaxy")
    };
    let a = run("a", "1");
    let b = run("b", "3");
    for name in ["summary.csv", "aggregate.csv", "manifest.toml", "run_002/samples.csv", "run_003/events.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = run("c", "1");
    assert_eq!(fs::read(a.join("run_001/samples.csv")).unwrap(), fs::read(c.join("run_001/samples.csv")).unwrap());
}
