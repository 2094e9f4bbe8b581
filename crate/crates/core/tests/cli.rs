use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stabtune::experiments::{gen_ar1_design, gen_response};
use stabtune::rng::substream;

fn run(args: &[&str]) -> Output {
    run_env(args, None)
}

fn run_env(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stabtune"));
    cmd.args(args).env_remove("STABTUNE_SEED");
    if let Some(s) = seed_env {
        cmd.env("STABTUNE_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A data file with named columns, an optional split column, and response `y`.
fn write_data(dir: &Path, n: usize, p_cols: usize, with_split: bool) -> PathBuf {
    let mut rng = substream(21, n as u64);
    let x = gen_ar1_design(n, p_cols, 0.5, &mut rng).unwrap();
    let mut beta = vec![0.0; p_cols];
    beta[0] = 2.0;
    if p_cols > 2 {
        beta[2] = -1.0;
    }
    let y = gen_response(&x, &beta, 0.7, &mut rng);
    let mut header: Vec<String> = (0..p_cols).map(|j| format!("v{}", j + 1)).collect();
    header.push("y".into());
    if with_split {
        header.push("train".into());
    }
    let mut text = header.join(",") + "\n";
    for i in 0..n {
        let mut row: Vec<String> = (0..p_cols).map(|j| x[(i, j)].to_string()).collect();
        row.push(y[i].to_string());
        if with_split {
            row.push(if i % 4 == 0 { "F" } else { "T" }.into());
        }
        text += &(row.join(",") + "\n");
    }
    let path = dir.join(format!("data_{n}_{p_cols}_{with_split}.csv"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn tune_writes_named_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 60, 5, false);
    let out = dir.path().join("out");
    let o = run(&["tune", "--data", p(&data), "--response", "y", "--seed", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("v1"), "{stdout}");

    let coef = std::fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(coef.starts_with("term,estimate,selected\n(intercept),"));
    assert_eq!(coef.lines().count(), 1 + 1 + 5);
    assert!(!coef.contains('\r'));
    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(curve.starts_with("lambda,s_hat,selected\n"));
    assert_eq!(curve.lines().count(), 101);
    assert_eq!(curve.matches(",true").count(), 1);

    let sel: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("selection.json")).unwrap()).unwrap();
    let active: Vec<&str> = sel["active"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(active.contains(&"v1") && active.contains(&"v3"), "{active:?}");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "tune");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn tune_criteria_write_score_curves() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 50, 4, false);
    for criterion in ["cp", "bic", "cv", "gcv"] {
        for penalty in ["lasso", "adalasso", "scad"] {
            let out = dir.path().join(format!("{criterion}_{penalty}"));
            let o = run(&[
                "tune", "--data", p(&data), "--response", "y", "--penalty", penalty, "--criterion", criterion,
                "--grid-points", "30", "--out", p(&out),
            ]);
            assert_eq!(code(&o), 0, "{criterion}/{penalty}: {}", stderr(&o));
            let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
            assert!(curve.starts_with("lambda,score,df,sse,selected\n"));
            assert_eq!(curve.lines().count(), 31);
        }
    }
}

#[test]
fn same_seed_same_bytes_and_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 40, 4, false);
    let outs: Vec<PathBuf> = (0..4).map(|i| dir.path().join(format!("o{i}"))).collect();
    let base = ["tune", "--data", p(&data), "--response", "y"];
    let with = |extra: &[&str], out: &Path, env: Option<&str>| {
        let mut args: Vec<&str> = base.to_vec();
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", p(out)]);
        let o = run_env(&args, env);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(out.join("curve.csv")).unwrap()
    };
    let a = with(&["--seed", "7"], &outs[0], None);
    let b = with(&["--seed", "7"], &outs[1], None);
    let c = with(&[], &outs[2], Some("7"));
    let d = with(&["--seed", "8"], &outs[3], Some("7"));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, d);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 40, 4, false);
    let wide = write_data(dir.path(), 6, 8, false);
    let out = dir.path().join("o");
    let o = p(&out);

    let bad_penalty = run(&["tune", "--data", p(&data), "--response", "y", "--penalty", "ridge", "--out", o]);
    assert_eq!(code(&bad_penalty), 2);
    assert!(stderr(&bad_penalty).contains("ridge"));

    let missing = run(&["tune", "--data", "/nonexistent/x.csv", "--response", "y", "--out", o]);
    assert_eq!(code(&missing), 3);

    let no_column = run(&["tune", "--data", p(&data), "--response", "lpsa", "--out", o]);
    assert_eq!(code(&no_column), 3);
    assert!(stderr(&no_column).contains("lpsa"));

    let saturated = run(&["tune", "--data", p(&wide), "--response", "y", "--criterion", "cp", "--out", o]);
    assert_eq!(code(&saturated), 3);
    assert!(stderr(&saturated).to_lowercase().contains("saturated"), "{}", stderr(&saturated));

    // every lambda on this grid selects nothing, so no split agrees usefully
    let unstable = run(&[
        "tune", "--data", p(&data), "--response", "y", "--grid-min", "4", "--grid-max", "5", "--out", o,
    ]);
    assert_eq!(code(&unstable), 4, "{}", stderr(&unstable));

    assert_eq!(code(&run(&["tune", "--data", p(&data), "--response", "y", "--alpha", "1", "--out", o])), 2);
    assert_eq!(code(&run(&["tune", "--data", p(&data), "--response", "y", "--jobs", "0", "--out", o])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run_env(&["tune", "--data", p(&data), "--response", "y", "--out", o], Some("abc"))), 2);
    assert_eq!(code(&run(&["simulate", "--scenario", "3", "--n", "40", "--out", o])), 2);
    assert_eq!(code(&run(&["simulate", "--scenario", "1", "--n", "40", "--criteria", "aic", "--out", o])), 2);
}

#[test]
fn simulate_with_one_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = run(&[
        "simulate", "--scenario", "2", "--n", "100", "--sigma", "6", "--replicates", "1", "--splits", "4",
        "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = std::fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 15);
    let mut agg = csv::Reader::from_path(out.join("aggregate.csv")).unwrap();
    let headers = agg.headers().unwrap().clone();
    assert_eq!(&headers[0], "penalty");
    let records: Vec<_> = agg.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 15);
    assert!(records.iter().all(|r| &r[2] == "1"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["p"], 10);
    assert_eq!(summary["config"]["sigma"], 6.0);
}

#[test]
fn sensitivity_grid_and_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let sens = dir.path().join("sens");
    let o = run(&[
        "sensitivity", "--scenario", "1", "--n", "40", "--replicates", "3", "--splits", "5", "--out", p(&sens),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = std::fs::read_to_string(sens.join("sensitivity.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 31);

    let single = dir.path().join("single");
    let o = run(&[
        "sensitivity", "--scenario", "1", "--n", "40", "--replicates", "3", "--splits", "5", "--alphas", "0.1",
        "--out", p(&single),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sim = dir.path().join("sim");
    let o = run(&[
        "simulate", "--scenario", "1", "--n", "40", "--replicates", "3", "--splits", "5", "--penalties", "lasso",
        "--criteria", "kappa", "--out", p(&sim),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mut r = csv::Reader::from_path(single.join("sensitivity.csv")).unwrap();
    let rows: Vec<_> = r.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let mut a = csv::Reader::from_path(sim.join("aggregate.csv")).unwrap();
    let agg = a.records().next().unwrap().unwrap();
    assert_eq!(&rows[0][1], &agg[7], "mean RPE of lasso + kappa");

    for bad in ["0:0.3", "x", "0:0.3:-0.1", "0.5:0.1:0.1", "2"] {
        let o = run(&["sensitivity", "--n", "40", "--alphas", bad, "--out", p(&single)]);
        assert_eq!(code(&o), 2, "{bad}");
    }
}

#[test]
fn realdata_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 48, 5, true);
    let plain = write_data(dir.path(), 48, 5, false);

    let fixed = dir.path().join("fixed");
    let o = run(&[
        "realdata", "--data", p(&data), "--response", "y", "--split-column", "train", "--splits", "5",
        "--out", p(&fixed),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = std::fs::read_to_string(fixed.join("realdata.csv")).unwrap();
    assert!(rows.starts_with("repeat,penalty,criterion,lambda_hat,test_pe,size,active,error\n"));
    assert_eq!(rows.lines().count(), 1 + 15);
    let summary = std::fs::read_to_string(fixed.join("realdata_summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap().ends_with("freq_v1,freq_v2,freq_v3,freq_v4,freq_v5"));

    let seeds: Vec<String> = ["1", "2"]
        .iter()
        .map(|s| {
            let out = dir.path().join(format!("seed{s}"));
            let o = run(&[
                "realdata", "--data", p(&plain), "--response", "y", "--train-size", "32", "--splits", "5",
                "--penalties", "lasso", "--criteria", "kappa,bic", "--seed", s, "--out", p(&out),
            ]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            let m: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
            assert_eq!(m["seed"].to_string(), *s);
            std::fs::read_to_string(out.join("realdata.csv")).unwrap()
        })
        .collect();
    assert_ne!(seeds[0], seeds[1]);

    let o = run(&["realdata", "--data", p(&plain), "--response", "y", "--train-size", "48", "--out", p(&fixed)]);
    assert_eq!(code(&o), 2);
    let o = run(&[
        "realdata", "--data", p(&data), "--response", "y", "--split-column", "train", "--repeats", "3",
        "--out", p(&fixed),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path(), 40, 4, false);
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "# tuning run\ncommand = tune\ndata = {}\nresponse = y\ncriterion = bic\ngrid_points = 40\nseed = 99\n",
            p(&data)
        ),
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&["--config", p(&conf), "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&[
        "tune", "--data", p(&data), "--response", "y", "--criterion", "bic", "--grid-points", "40", "--seed", "99",
        "--out", p(&b),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["coefficients.csv", "curve.csv", "selection.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // explicit flags beat the file
    let c = dir.path().join("c");
    let o = run(&["tune", "--config", p(&conf), "--criterion", "gcv", "--out", p(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sel = std::fs::read_to_string(c.join("selection.json")).unwrap();
    assert!(sel.contains("\"gcv\""));

    std::fs::write(&conf, "this line has no equals sign\n").unwrap();
    assert_eq!(code(&run(&["tune", "--config", p(&conf)])), 2);
}
