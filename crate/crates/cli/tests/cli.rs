use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qdela::ela::FeatureCode;
use qdela::harness::{aggregate, aggregate_line, read_records};

const MINIMAL: &str = "domain = \"sphere\"\ndim = 2\narchive_size = 100\nsampler = \"qd-gaussian\"\n\
                       budget = 1000\nruns = 2\nbase_seed = 5\nfeatures = [\"distr\", \"nbc\"]\n";

fn qdela(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdela"))
        .args(args)
        .env_remove("QDELA_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn records_csv(rows: &[(u32, u64, &str, f64)]) -> String {
    let mut s = String::from("run_id,eval_count,feature_code,value,status\n");
    for (run, eval, code, v) in rows {
        s.push_str(&format!("{run},{eval},{code},{v},ok\n"));
    }
    s
}

#[test]
fn run_writes_records_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, MINIMAL).unwrap();
    let out = dir.path().join("out");
    let o = qdela(&["run", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    for line in ["batch = 100", "behaviour = \"subset\"", "checkpoints = [", "local_starts = 100", "sigma2 = 0.2"] {
        assert!(resolved.contains(line), "missing `{line}` in\n{resolved}");
    }
    let records = read_records(fs::File::open(out.join("records.csv")).unwrap()).unwrap();
    // ladder 100, 200, 500, 1000 with 8 codes each
    assert_eq!(records.len(), 2 * 4 * 8);
    assert!(!out.join("staging").exists());

    let again = dir.path().join("again");
    assert!(qdela(&["run", "--config", p(&cfg), "--out", p(&again)]).status.success());
    assert_eq!(fs::read(out.join("records.csv")).unwrap(), fs::read(again.join("records.csv")).unwrap());
}

#[test]
fn run_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, format!("{MINIMAL}colour = \"blue\"\n")).unwrap();
    let o = qdela(&["run", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 9"));

    let o = qdela(&["run", "--config", p(&dir.path().join("missing.toml")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3));

    fs::write(&cfg, MINIMAL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qdela"))
        .args(["run", "--config", p(&cfg), "--out", p(&dir.path().join("o"))])
        .env("QDELA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn features_from_sampled_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("lhs.csv");
    let o = qdela(&["sample", "--domain", "sphere", "--dim", "3", "--m", "200", "--seed", "4", "--out", p(&data)]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&data).unwrap().starts_with("x0,x1,x2,fitness,b0,b1\n"));

    let o = qdela(&["features", "--dataset", p(&data), "--groups", "distr"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let codes: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(codes, ["f5", "f6", "f7"]);

    let o = qdela(&["features", "--dataset", p(&data), "--groups", "conv"]);
    assert_eq!(o.status.code(), Some(2));

    let o = qdela(&["features", "--dataset", p(&data), "--groups", "conv,nbc", "--domain", "sphere", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 9);
    let f1: f64 = text.lines().next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(f1 >= 0.99);

    let o = qdela(&["features", "--dataset", p(&data), "--groups", "conv", "--domain", "sphere", "--dim", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qdela(&["features", "--dataset", p(&dir.path().join("nope.csv")), "--groups", "distr"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn features_meta_on_linear_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("linear.csv");
    let mut text = String::from("x0,x1,fitness,b0,b1\n");
    for i in 0..60 {
        let (a, b) = ((i * 7 % 13) as f64 - 6.0, (i * 5 % 11) as f64 * 0.5);
        text.push_str(&format!("{a},{b},{},,\n", 2.0 * a - b + 3.0));
    }
    fs::write(&path, text).unwrap();
    let o = qdela(&["features", "--dataset", p(&path), "--groups", "meta"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("f24,")).unwrap();
    let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-9, "{line}");
    assert!(line.ends_with(",ok"));
}

#[test]
fn compare_cases() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, records_csv(&[(0, 100, "f5", 1.0), (1, 100, "f5", 2.0), (2, 100, "f5", 3.0)])).unwrap();
    fs::write(&b, records_csv(&[(0, 1000, "f5", 4.0), (1, 1000, "f5", 5.0), (2, 1000, "f5", 6.0)])).unwrap();

    let o = qdela(&["compare", "--a", p(&a), "--b", p(&a), "--feature", "f5", "--at", "100"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("feature,U,p,n_a,n_b,median_a,median_b"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2].parse::<f64>().unwrap(), 1.0);

    let o = qdela(&["compare", "--a", p(&a), "--b", p(&b), "--feature", "f5", "--at", "100", "--at-b", "1000"]);
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "f5");
    assert_eq!(row[1], "0");
    assert!((row[2].parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!((row[3], row[4]), ("3", "3"));

    for args in [
        vec!["--feature", "f99", "--at", "100"],
        vec!["--feature", "f6", "--at", "100"],
        vec!["--feature", "f5", "--at", "200"],
    ] {
        let mut full = vec!["compare", "--a", p(&a), "--b", p(&a)];
        full.extend(args);
        assert_eq!(qdela(&full).status.code(), Some(2), "{full:?}");
    }
}

#[test]
fn plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.csv");
    fs::write(&single, records_csv(&[(0, 1000, "f7", 0.5)])).unwrap();
    let svg_path = dir.path().join("single.svg");
    let o = qdela(&["plot", "--in", p(&single), "--feature", "f7", "--out", p(&svg_path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(&svg_path).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(svg.matches("<circle").count(), 1);
    assert_eq!(svg.matches("stroke-dasharray").count(), 0);

    let qd = dir.path().join("qd");
    fs::create_dir(&qd).unwrap();
    let rows: Vec<(u32, u64, &str, f64)> = (0..5)
        .flat_map(|r| [100u64, 1000, 10_000, 100_000].map(|e| (r, e, "f5", (r as f64 + 1.0) * (e as f64).ln())))
        .collect();
    fs::write(qd.join("records.csv"), records_csv(&rows)).unwrap();
    let out = dir.path().join("traj.svg");
    let o = qdela(&[
        "plot", "--in", p(&qd.join("records.csv")), "--in", p(&single), "--feature", "f5", "--out", p(&out),
        "--marker", "10000",
    ]);
    // the second file has no f5 records
    assert_eq!(o.status.code(), Some(2));

    let o = qdela(&["plot", "--in", p(&qd.join("records.csv")), "--feature", "f5", "--out", p(&out), "--marker", "10000"]);
    assert!(o.status.success());
    let svg = fs::read_to_string(&out).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(svg.matches("stroke-dasharray").count(), 1);
    assert!(svg.contains(">qd<"));

    let plotted = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let records = read_records(fs::File::open(qd.join("records.csv")).unwrap()).unwrap();
    let mut want = String::from("series,eval_count,median,q1,q3\n");
    for row in aggregate(&records, FeatureCode::new(5).unwrap()).unwrap() {
        want.push_str(&format!("qd,{}\n", aggregate_line(&row)));
    }
    assert_eq!(plotted, want);

    let undefined = dir.path().join("undef.csv");
    fs::write(&undefined, "run_id,eval_count,feature_code,value,status\n0,100,f5,,degenerate-data\n").unwrap();
    let o = qdela(&["plot", "--in", p(&undefined), "--feature", "f5", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
