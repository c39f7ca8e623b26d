use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn spreadlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn out_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn closed_forms_csv_layout_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = spreadlab(&["closed-forms", "--out", out_arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = read(&dir.path().join("manifest.txt"));
    let csv = read(&dir.path().join("closed_forms.csv"));
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    let hash = hex::encode(Sha256::digest(manifest.as_bytes()));
    assert_eq!(lines.next().unwrap(), format!("# manifest_sha256={}", hash));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), row.len());
    let field = |name: &str| -> f64 { row[header.iter().position(|h| *h == name).unwrap()].parse().unwrap() };
    assert!((field("theta_star") - 0.225891).abs() < 1e-4);
    assert!((field("spread_star") - 0.223983).abs() < 1e-5);
    assert!((field("loss_collapsed") + 1.2).abs() < 1e-12);
    let theta_text = row[header.iter().position(|h| *h == "theta_star").unwrap()];
    assert_eq!(theta_text.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert!(!manifest.contains("out"), "the output path must not enter the manifest");
}

#[test]
fn config_then_flags_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# grid\nalphas = 0.7,0.8\ntaus = 0.25\nseed = 5\n").unwrap();
    let out = dir.path().join("o");
    let o = spreadlab(&["closed-forms", "--config", out_arg(&cfg), "--taus", "1", "--out", out_arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = read(&out.join("manifest.txt"));
    assert!(manifest.contains("alphas = 0.7,0.8\n"));
    assert!(manifest.contains("taus = 1\n"));
    assert!(manifest.contains("seed = 5\n"));
    assert_eq!(read(&out.join("closed_forms.csv")).lines().count(), 4);

    let o = spreadlab(&["closed-forms", "--config", out_arg(&cfg), "--seed", "9", "--out", out_arg(&out)]);
    assert!(o.status.success());
    assert!(read(&out.join("manifest.txt")).contains("seed = 9\n"));
}

#[test]
fn manifest_replays_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(spreadlab(&["perm-test", "--configs", "3", "--trials", "5", "--seed", "4", "--out", out_arg(&a)])
        .status
        .success());
    let m = a.join("manifest.txt");
    let o = spreadlab(&["perm-test", "--config", out_arg(&m), "--out", out_arg(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&a.join("manifest.txt")), read(&b.join("manifest.txt")));
    assert_eq!(read(&a.join("perm_test.csv")), read(&b.join("perm_test.csv")));
}

#[test]
fn serial_and_parallel_rows_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["sweep-alpha", "--alphas", "0.6,0.7", "--taus", "0.5", "--dims", "2", "--restarts", "2"];
    let mut sa = args.to_vec();
    sa.extend(["--serial", "--out", out_arg(&a)]);
    let mut pa = args.to_vec();
    pa.extend(["--out", out_arg(&b)]);
    assert!(spreadlab(&sa).status.success());
    assert!(spreadlab(&pa).status.success());
    let body = |p: &Path| read(&p.join("sweep_alpha.csv")).lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&a), body(&b));
    assert_ne!(read(&a.join("manifest.txt")), read(&b.join("manifest.txt")));
}

#[test]
fn every_subcommand_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let toy = ["--n", "200", "--epochs", "2", "--per-class", "8", "--ae-epochs", "5"];
    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["optimize", "--restarts", "2"], vec!["optimize_summary", "optimize_points", "optimize_restarts", "optimize_trace"]),
        (vec!["c-window", "--d-max", "5"], vec!["c_window"]),
        (vec!["k3-check", "--thetas", "3"], vec!["k3_check"]),
        ([&["toy-train"][..], &toy].concat(), vec!["toy_train_summary", "toy_train_history"]),
        ([&["c2f-eval", "--runs", "2"][..], &toy].concat(), vec!["c2f_eval", "c2f_medians", "c2f_encoders", "c2f_subclass"]),
        ([&["lipschitz", "--pairs", "50"][..], &toy].concat(), vec!["lipschitz"]),
        ([&["recover-subclass", "--runs", "1"][..], &toy].concat(), vec!["recover_subclass"]),
    ];
    for (args, tables) in cases {
        let out = dir.path().join(args[0]);
        let mut full = args.clone();
        full.extend(["--out", out_arg(&out)]);
        let o = spreadlab(&full);
        assert!(o.status.success(), "{}: {}", args[0], stderr(&o));
        for t in tables {
            let text = read(&out.join(format!("{}.csv", t)));
            assert!(text.starts_with("# manifest_sha256="), "{t}");
            assert!(text.lines().count() >= 3, "{t} has no rows");
        }
    }
}

#[test]
fn failures_print_one_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "alphas = 0.7\nalpah = 0.8\n").unwrap();
    let cases: Vec<(Vec<String>, &str, i32)> = vec![
        (vec!["closed-forms".into(), "--config".into(), out_arg(&cfg).into()], "unknown_key", 1),
        (vec!["closed-forms".into(), "--config".into(), "/nonexistent/x.conf".into()], "io", 1),
        (vec!["closed-forms".into(), "--alphas".into(), "abc".into()], "invalid_value", 1),
        (vec!["closed-forms".into(), "--taus".into(), "-1".into()], "domain", 1),
        (vec!["closed-forms".into(), "--bogus".into(), "1".into()], "usage", 2),
        (vec!["frobnicate".into()], "usage", 2),
        (vec!["toy-train".into(), "--mode".into(), "simclr".into()], "invalid_value", 1),
    ];
    for (args, kind, code) in cases {
        let mut full = args.clone();
        full.extend(["--out".into(), out_arg(&dir.path().join("o")).into()]);
        let o = Command::new(env!("CARGO_BIN_EXE_spreadlab")).args(&full).output().unwrap();
        assert_eq!(o.status.code(), Some(code), "{:?}", args);
        let err = stderr(&o);
        let line = err.lines().next().unwrap_or("");
        assert!(line.starts_with(&format!("error: kind={} message=", kind)), "{:?}: {}", args, err);
        assert_eq!(err.lines().count(), 1);
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("file");
    std::fs::write(&file, "x").unwrap();
    let o = spreadlab(&["closed-forms", "--out", out_arg(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: kind=io "));
}

#[test]
fn help_lists_subcommands_and_defaults() {
    let o = spreadlab(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for s in spread_cli::commands::SUBCOMMANDS.iter() {
        assert!(text.contains(s.name), "{}", s.name);
        let sub = spreadlab(&[s.name, "--help"]);
        let help = String::from_utf8_lossy(&sub.stdout);
        for p in (s.params)() {
            assert!(help.contains(&format!("--{}", p.key)), "{} {}", s.name, p.key);
        }
        assert!(help.contains("[default:"));
    }
}
