use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ehsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ehsense(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small benchmark: three cases with a reduced dwell time.
fn small_config(dir: &Path) -> String {
    let cfg = dir.join("small.toml");
    ok(&["gen", "--seed", "1", "--cases", "3", "--dump-config", p(&cfg)]);
    let text = fs::read_to_string(&cfg).unwrap();
    let text = text.replace("windows_per_support = 0.1", "windows_per_support = 0.02");
    fs::write(&cfg, text).unwrap();
    p(&cfg).to_string()
}

#[test]
fn gen_featurize_train_predict_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    let traces = d.join("traces.csv");
    let features = d.join("features.csv");
    let model = d.join("model.txt");
    let preds = d.join("pred.csv");
    let reports = d.join("reports");

    ok(&["gen", "--seed", "7", "--config", &cfg, "-o", p(&traces)]);
    let head = fs::read_to_string(&traces).unwrap();
    assert!(head.starts_with("# ehsense-trace v1 units=mv rate_hz=16\ncase_id,t,SC1,SC2,SC3,SC4,SC5,PIEZO,label\n"));

    ok(&["featurize", "-i", p(&traces), "-o", p(&features)]);
    let header = fs::read_to_string(&features).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 42 + 2);
    assert!(header.starts_with("SC1_average,SC1_variance,SC1_sum,SC1_median,SC1_maximum,SC1_minimum,SC1_range,SC2_average"));

    ok(&["train", "-i", p(&features), "-o", p(&model), "--seed", "3", "--trees", "10"]);
    ok(&["predict", "-m", p(&model), "-i", p(&features), "-o", p(&preds)]);
    let preds = fs::read_to_string(&preds).unwrap();
    assert!(preds.starts_with("row,case_id,truth,predicted\n"));
    assert_eq!(preds.lines().count(), header_rows(&features) + 1);

    let text = ok(&["eval", "-i", p(&features), "--seed", "3", "--trees", "10", "--out-dir", p(&reports)]);
    assert!(text.contains("avg / total"));
    assert_eq!(fs::read_to_string(reports.join("evaluation.txt")).unwrap(), text);
    assert!(reports.join("evaluation.csv").exists());
    assert!(reports.join("folds.csv").exists());
}

fn header_rows(csv: &Path) -> usize {
    fs::read_to_string(csv).unwrap().lines().count() - 1
}

#[test]
fn two_channel_selection_gives_fourteen_features() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    let traces = d.join("t.csv");
    let features = d.join("f.csv");
    ok(&["gen", "--seed", "2", "--config", &cfg, "--units", "digit", "-o", p(&traces)]);
    assert!(fs::read_to_string(&traces).unwrap().starts_with("# ehsense-trace v1 units=digit bits=10 rate_hz=16\n"));
    ok(&["featurize", "-i", p(&traces), "-o", p(&features), "--channels", "SC1,SC2"]);
    let text = fs::read_to_string(&features).unwrap();
    assert_eq!(text.lines().next().unwrap().split(',').count(), 14 + 2);
    let eval = ok(&["eval", "-i", p(&features), "--seed", "2", "--trees", "5"]);
    assert!(eval.contains("channels=SC1,SC2 features=14"));
}

#[test]
fn outputs_are_reproducible_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    let traces = [d.join("a.csv"), d.join("b.csv")];
    for t in &traces {
        ok(&["gen", "--seed", "9", "--config", &cfg, "-o", p(t)]);
    }
    assert_eq!(fs::read(&traces[0]).unwrap(), fs::read(&traces[1]).unwrap());
    let features = d.join("f.csv");
    ok(&["featurize", "-i", p(&traces[0]), "-o", p(&features)]);
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out = d.join(format!("ablate{jobs}"));
        ok(&[
            "--jobs", jobs, "ablate", "-i", p(&features), "--seed", "5", "--trees", "3", "--channels", "SC1,SC2,PIEZO",
            "--out-dir", p(&out),
        ]);
        outputs.push(fs::read(out.join("ablation.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let rows = String::from_utf8(outputs[0].clone()).unwrap().lines().count();
    assert_eq!(rows, 7 + 1);
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("nope.csv");
    for args in [
        vec!["featurize", "-i", p(&missing), "-o", "x.csv"],
        vec!["eval", "-i", p(&missing), "--seed", "1"],
        vec!["gen", "--seed", "1", "--cases", "0", "-o", "x.csv"],
    ] {
        let out = ehsense(&args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "), "{err}");
    }

    let bad = d.join("bad.csv");
    fs::write(&bad, "# ehsense-trace v1 units=mv rate_hz=16\ncase_id,t,SC1,label\na,0,oops,X\n").unwrap();
    let out = ehsense(&["featurize", "-i", p(&bad), "-o", p(&d.join("o.csv"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");

    let unknown = ehsense(&["frobnicate"]);
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));

    // eval needs an explicit seed.
    fs::write(&bad, "x").unwrap();
    assert!(!ehsense(&["eval", "-i", p(&bad)]).status.success());
}
