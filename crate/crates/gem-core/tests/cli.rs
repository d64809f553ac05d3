//! End-to-end checks of the `gem` binary: exit codes, output layout and the
//! documented flag surface.

use std::path::Path;
use std::process::Command;

fn gem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gem"))
}

fn write_table_one_csv(path: &Path) {
    let mut body = String::from("id,f1,f2,y1,y2,y3,y4,y5\n");
    for i in 0..12 {
        let f1 = if i < 6 { "A" } else { "B" };
        let f2 = if (i / 3) % 2 == 0 { "a" } else { "b" };
        let base = if i < 6 { -1.0 } else { 1.0 };
        let row: Vec<String> = (0..5)
            .map(|j| format!("{}", base * (j as f64 + 1.0) + (i * 7 % 5) as f64 * 0.25))
            .collect();
        body.push_str(&format!("s{i},{f1},{f2},{}\n", row.join(",")));
    }
    std::fs::write(path, body).unwrap();
}

#[test]
fn fit_then_analyze_produces_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_table_one_csv(&data);
    let out = dir.path().join("out");

    let status = gem()
        .args([
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--responses",
            "y",
            "--id-column",
            "id",
            "--model",
            "y ~ f1 + f2 + f1:f2",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("fit").join("gemfit.json").exists());
    // on a balanced design the variance fractions close to 1
    let summary =
        std::fs::read_to_string(out.join("fit").join("variance_explained.csv")).unwrap();
    let mut total = 0.0f64;
    let mut balanced = String::new();
    for line in summary.lines().skip(1) {
        let (name, value) = line.split_once(',').unwrap();
        if name == "(balanced)" {
            balanced = value.to_string();
        } else {
            total += value.parse::<f64>().unwrap();
        }
    }
    assert_eq!(balanced, "yes");
    assert!((total - 1.0).abs() <= 1e-10, "fractions sum to {total}");

    let status = gem()
        .args([
            "analyze",
            "--data",
            data.to_str().unwrap(),
            "--responses",
            "y",
            "--id-column",
            "id",
            "--model",
            "y ~ f1 + f2 + f1:f2",
            "--effect",
            "f1",
            "--analysis",
            "pls",
            "--ncomp",
            "3",
            "--cv",
            "loo",
            "--jackknife",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "pls/cv_error.csv",
        "pls/classes.csv",
        "pls/jackknife.csv",
        "plots/pls_scores.svg",
        "plots/pls_loadings.svg",
        "plots/pls_corr_loadings.svg",
        "plots/pls_cv_error.svg",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }

    // correlation loadings stay within [-1, 1] — parse the pca twin
    let status = gem()
        .args([
            "analyze",
            "--data",
            data.to_str().unwrap(),
            "--responses",
            "y",
            "--id-column",
            "id",
            "--model",
            "y ~ f1 + f2 + f1:f2",
            "--effect",
            "f1,f2",
            "--analysis",
            "pca",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let corr = std::fs::read_to_string(out.join("pca").join("corr_loadings.csv")).unwrap();
    for line in corr.lines().skip(1) {
        for cell in line.split(',').skip(1) {
            let v: f64 = cell.parse().unwrap();
            assert!((-1.0..=1.0).contains(&v), "correlation {v} out of range");
        }
    }
}

#[test]
fn unbalanced_fit_succeeds_and_flags_imbalance() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_table_one_csv(&data);
    // drop the last row to unbalance the design
    let body = std::fs::read_to_string(&data).unwrap();
    let kept: Vec<&str> = body.lines().take(12).collect();
    std::fs::write(&data, kept.join("\n") + "\n").unwrap();

    let out = dir.path().join("out");
    let output = gem()
        .args([
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--responses",
            "y",
            "--id-column",
            "id",
            "--model",
            "y ~ f1 + f2",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("unbalanced"), "summary: {stdout}");
    let summary =
        std::fs::read_to_string(out.join("fit").join("variance_explained.csv")).unwrap();
    assert!(summary.contains("(balanced),no"));
}

#[test]
fn enet_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_table_one_csv(&data);
    let out = dir.path().join("out");
    let status = gem()
        .args([
            "analyze",
            "--data",
            data.to_str().unwrap(),
            "--responses",
            "y",
            "--id-column",
            "id",
            "--model",
            "y ~ f1 + f2",
            "--effect",
            "f1",
            "--analysis",
            "enet",
            "--family",
            "binomial",
            "--nlambda",
            "30",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    // the nonzero list length matches the df column at lambda_opt
    let nonzero = std::fs::read_to_string(out.join("enet").join("nonzero.txt")).unwrap();
    let n_listed = nonzero.lines().filter(|l| !l.trim().is_empty()).count();
    let cv = std::fs::read_to_string(out.join("enet").join("enet_cv.csv")).unwrap();
    assert!(cv.lines().count() > 2);
    let path_csv = std::fs::read_to_string(out.join("enet").join("enet_path.csv")).unwrap();
    // find any path row whose df equals the listing; lambda_opt is one of them
    let has_matching_df = path_csv.lines().skip(1).any(|line| {
        line.split(',').nth(1).unwrap().parse::<usize>().unwrap() == n_listed
    });
    assert!(has_matching_df);
    assert!(out.join("plots").join("enet_path.svg").exists());
    assert!(out.join("plots").join("enet_cv.svg").exists());
}

#[test]
fn config_file_drives_a_run_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_table_one_csv(&data);
    let out = dir.path().join("from_config");
    let config = serde_json::json!({
        "data": data,
        "responses": "y",
        "id_column": "id",
        "model": "y ~ f1 + f2",
        "effect": ["f1"],
        "analysis": "pca",
        "out": out,
    });
    let config_path = dir.path().join("run.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let status = gem()
        .args(["analyze", "--config", config_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("pca").join("scores.csv").exists());

    // flag overrides the config's output directory
    let out2 = dir.path().join("overridden");
    let status = gem()
        .args([
            "analyze",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out2.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out2.join("pca").join("scores.csv").exists());
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_table_one_csv(&data);

    // missing input file: data error, exit 1
    let status = gem()
        .args([
            "fit",
            "--data",
            dir.path().join("nope.csv").to_str().unwrap(),
            "--responses",
            "y",
            "--model",
            "y ~ f1",
            "--out",
            dir.path().join("o1").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // bad formula: usage error, exit 2
    let status = gem()
        .args([
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--responses",
            "y",
            "--model",
            "no tilde here",
            "--out",
            dir.path().join("o2").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown flag: clap usage error, exit 2
    let status = gem().args(["fit", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // invalid simulation spec: usage error, exit 2
    let bad_spec = dir.path().join("bad.json");
    std::fs::write(&bad_spec, "{\"not\": \"a spec\"}").unwrap();
    let status = gem()
        .args([
            "simulate",
            "--spec",
            bad_spec.to_str().unwrap(),
            "--out",
            dir.path().join("sim.csv").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn simulate_emits_csv_and_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "factors": [{"name": "f1", "levels": 2}, {"name": "f2", "levels": 2}],
        "replicates": 3,
        "n_responses": 4,
        "effects": [{"term": "f1", "responses": [0, 2], "magnitude": 1.0}],
        "noise_sd": 0.5,
        "seed": 7
    });
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = dir.path().join("sim.csv");
    let status = gem()
        .args([
            "simulate",
            "--spec",
            spec_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let body = std::fs::read_to_string(&out).unwrap();
    assert_eq!(body.lines().count(), 13, "header plus 12 rows");
    assert!(dir.path().join("sim.truth.json").exists());

    // GEM_THREADS caps the worker pool without changing results
    let out_threaded = dir.path().join("sim_threaded.csv");
    let status = gem()
        .env("GEM_THREADS", "1")
        .args([
            "simulate",
            "--spec",
            spec_path.to_str().unwrap(),
            "--out",
            out_threaded.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(&out_threaded).unwrap()
    );
}
