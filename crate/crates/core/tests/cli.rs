//! The `estimate`, `simulate` and `report` commands through the library entry
//! points and the compiled binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use pcredml::cli::{
    cmd_estimate, cmd_report, cmd_simulate, EstimateArgs, ReportArgs, SimulateArgs, DRAWS_FILE,
    HISTOGRAM_FILE, PANEL_FILE, RESULTS_FILE, SUMMARY_FILE,
};
use pcredml::Error;

fn quick_simulate(dir: &Path, n_sims: usize) -> SimulateArgs {
    let mut args = SimulateArgs::new(dir);
    args.n_sims = Some(n_sims);
    args.learner.n_trees = Some(10);
    args.learner.max_depth = Some(3);
    args
}

fn quick_estimate(input: &Path, dir: &Path) -> EstimateArgs {
    let mut args = EstimateArgs::new(input, dir);
    args.learner.n_trees = Some(20);
    args.learner.max_depth = Some(5);
    args
}

fn simulated_panel(dir: &Path) -> std::path::PathBuf {
    let mut args = quick_simulate(dir, 1);
    args.estimators = "ols".into();
    cmd_simulate(&args).unwrap();
    dir.join(PANEL_FILE)
}

/// Data lines of a CSV written by the tool, without comment lines.
fn data_lines(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn drop_columns(src: &Path, dst: &Path, names: &[&str]) {
    let text = fs::read_to_string(src).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&j| !names.contains(&header[j]))
        .collect();
    let pick = |line: &str| {
        let fields: Vec<&str> = line.split(',').collect();
        keep.iter()
            .map(|&j| fields[j])
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = pick(&header.join(","));
    for line in lines {
        out.push('\n');
        out.push_str(&pick(line));
    }
    out.push('\n');
    fs::write(dst, out).unwrap();
}

#[test]
fn estimate_writes_one_row_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(dir.path());
    let run = cmd_estimate(&quick_estimate(&panel, dir.path())).unwrap();
    assert_eq!(run.rows.len(), 5);
    assert_eq!(run.n_obs, 890);
    for row in &run.rows {
        let r = row.outcome.as_ref().unwrap();
        assert!(r.coef.is_finite());
        if let Some(p) = r.p_value {
            assert!((0.0..=1.0).contains(&p));
        }
    }
    let lines = data_lines(&run.results_path);
    assert_eq!(
        lines[0],
        ["Estimator", "Coefficient", "Standard Error", "p-value"]
    );
    let labels: Vec<&str> = lines[1..].iter().map(|l| l[0].as_str()).collect();
    assert_eq!(
        labels,
        ["OLS", "Fixed Effects", "System GMM", "CRE-DML", "P-CRE-DML"]
    );
    for line in &lines[1..] {
        for cell in &line[1..] {
            let decimals = cell.split('.').nth(1).map_or(0, str::len);
            assert!(decimals <= 4, "{cell}");
        }
    }
}

#[test]
fn estimate_honours_estimator_selection() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(dir.path());
    let mut args = quick_estimate(&panel, dir.path());
    args.estimators = "ols".into();
    let run = cmd_estimate(&args).unwrap();
    assert_eq!(run.rows.len(), 1);
    assert_eq!(data_lines(&dir.path().join(RESULTS_FILE)).len(), 2);
}

#[test]
fn estimate_rejects_unknown_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(dir.path());
    let mut args = quick_estimate(&panel, dir.path());
    args.estimators = "ols,lasso".into();
    assert!(cmd_estimate(&args).is_err());
}

#[test]
fn missing_proxy_fails_only_the_proxy_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(dir.path());
    let stripped = dir.path().join("no_proxy.csv");
    drop_columns(
        &panel,
        &stripped,
        &["gov_effectiveness_lag", "gov_effectiveness_mean"],
    );
    let mut args = quick_estimate(&stripped, dir.path());
    args.estimators = "cre,pcre".into();
    let run = cmd_estimate(&args).unwrap();
    assert!(run.rows[0].outcome.is_ok());
    let err = run.rows[1].outcome.as_ref().unwrap_err();
    assert!(err.contains("gov_effectiveness_lag"), "{err}");
    let lines = data_lines(&run.results_path);
    assert_eq!(lines[2], ["P-CRE-DML", "", "", ""]);
}

#[test]
fn estimate_builds_derived_columns_from_raw_input() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let mut text =
        String::from("country,year,gdp_growth,trust,capital,labor,technology,gov_effectiveness\n");
    for c in 0..12 {
        for y in 0..6 {
            let v = |k: u32| (((c * 31 + y * 17 + k * 7) % 23) as f64) / 10.0;
            let trust = v(1);
            let growth = 0.4 * trust + v(2) * 0.1 + c as f64 * 0.05;
            text.push_str(&format!(
                "C{c:02},{},{growth},{trust},{},{},{},{}\n",
                2000 + y,
                v(3),
                v(4),
                v(5),
                v(6)
            ));
        }
    }
    fs::write(&raw, text).unwrap();
    let run = cmd_estimate(&quick_estimate(&raw, dir.path())).unwrap();
    assert_eq!(run.n_obs, 12 * 5);
    for row in &run.rows {
        assert!(row.outcome.is_ok(), "{}: {:?}", row.estimator, row.outcome);
    }
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = cmd_simulate(&quick_simulate(a.path(), 3)).unwrap();
    cmd_simulate(&quick_simulate(b.path(), 3)).unwrap();
    for file in [SUMMARY_FILE, HISTOGRAM_FILE, DRAWS_FILE, PANEL_FILE] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let summary = data_lines(&run.summary_path);
    assert_eq!(summary[0], ["Estimator", "Bias", "Variance", "MSE"]);
    assert_eq!(summary.len(), 6);
    let hist = data_lines(&run.histogram_path);
    assert_eq!(hist.len(), 1 + 5 * 20);
    let counts: u64 = hist[1..21]
        .iter()
        .map(|l| l[3].parse::<u64>().unwrap())
        .sum();
    assert_eq!(counts, 3);
}

#[test]
fn simulate_seed_changes_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = quick_simulate(a.path(), 2);
    args.estimators = "ols,fe".into();
    cmd_simulate(&args).unwrap();
    args.output_dir = b.path().to_path_buf();
    args.seed = 7;
    cmd_simulate(&args).unwrap();
    assert_ne!(
        fs::read(a.path().join(DRAWS_FILE)).unwrap(),
        fs::read(b.path().join(DRAWS_FILE)).unwrap()
    );
}

#[test]
fn single_replication_summary_has_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = quick_simulate(dir.path(), 1);
    args.estimators = "ols,fe".into();
    let run = cmd_simulate(&args).unwrap();
    for line in &data_lines(&run.summary_path)[1..] {
        assert_eq!(line[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn report_accepts_fresh_summary_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = quick_simulate(dir.path(), 4);
    args.estimators = "ols,fe".into();
    let run = cmd_simulate(&args).unwrap();
    let out = cmd_report(&ReportArgs {
        input: run.summary_path.clone(),
    })
    .unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    assert!(out.table.contains("OLS"));

    let text = fs::read_to_string(&run.summary_path).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| {
            if l.starts_with("OLS,") {
                let mut f: Vec<String> = l.split(',').map(str::to_string).collect();
                let mse: f64 = f[3].parse().unwrap();
                f[3] = format!("{:.4}", mse + 0.5);
                f.join(",")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let bad = dir.path().join("tampered.csv");
    fs::write(&bad, tampered).unwrap();
    let out = cmd_report(&ReportArgs { input: bad }).unwrap();
    assert_eq!(out.violations.len(), 1);
    assert!(out.violations[0].starts_with("OLS"));
}

#[test]
fn report_rejects_empty_and_foreign_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "Estimator,Bias,Variance,MSE\n").unwrap();
    assert!(matches!(
        cmd_report(&ReportArgs { input: empty }),
        Err(Error::Data(_))
    ));
    let foreign = dir.path().join("foreign.csv");
    fs::write(&foreign, "a,b\n1,2\n").unwrap();
    assert!(matches!(
        cmd_report(&ReportArgs { input: foreign }),
        Err(Error::Schema(_))
    ));
}

#[test]
fn report_checks_results_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    fs::write(
        &path,
        "Estimator,Coefficient,Standard Error,p-value\nOLS,0.1,0.02,0.0001\nFE,0.1,-0.02,1.5\nSystem GMM,0.3,,\n",
    )
    .unwrap();
    let out = cmd_report(&ReportArgs { input: path }).unwrap();
    assert_eq!(out.violations.len(), 2);
    assert!(out.table.contains("n/a"));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pcredml"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args([
            "simulate",
            "--n-sims",
            "2",
            "--estimators",
            "ols,fe",
            "--n-trees",
            "5",
            "--output-dir",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("Fixed Effects"));

    let report = binary()
        .arg("report")
        .arg("--input")
        .arg(dir.path().join(SUMMARY_FILE))
        .output()
        .unwrap();
    assert_eq!(report.status.code(), Some(0));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "Estimator,Bias,Variance,MSE\nOLS,1.0,0.0,5.0\n").unwrap();
    let report = binary()
        .arg("report")
        .arg("--input")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(report.status.code(), Some(1));

    let missing = binary()
        .args(["estimate", "--input"])
        .arg(dir.path().join("nope.csv"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    let usage = binary().arg("estimate").output().unwrap();
    assert!(!usage.status.success());
}
