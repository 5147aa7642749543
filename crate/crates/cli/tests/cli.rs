use std::process::{Command, Output};

fn run(args: &[&str], out: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toeplitz")).args(args).env("TOEPLITZ_OUT", out).output().unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("toeplitz-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn gamma_dump_self_dual_one() {
    let d = tmp("gamma");
    let o = run(&["gamma", "--N", "1", "--self-dual", "--dump"], &d);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("k*x_k + u1*(1-x_k^2)*(x_{k+1}+x_{k-1})"));
    assert!(d.join("gamma.json").exists());
}

#[test]
fn appendix_three_passes() {
    let d = tmp("appendix");
    let o = run(&["appendix", "--N", "3"], &d);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("appendix.json")).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
}

#[test]
fn config_errors_exit_two_with_field_paths() {
    let d = tmp("config");
    let cases: [(&[&str], &str); 4] = [
        (&["confine", "--M", "2"], "config.M"),
        (&["confine", "--mode", "general", "--u", "-1=0"], "config.u.-1"),
        (&["restrict", "--u1", "x/y"], "config.u1"),
        (&["confine", "--M", "4", "--hw", "5"], "config.hw"),
    ];
    for (args, field) in cases {
        let o = run(args, &d);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{args:?}");
    }
    let cfg = d.join("bad.json");
    std::fs::write(&cfg, r#"{"u": {"1": "0"}}"#).unwrap();
    let o = run(&["confine", "--config", cfg.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config.u.1"));
}

#[test]
fn confine_self_dual_at_origin_records_closed_form() {
    let d = tmp("confine");
    let o = run(&["confine", "--mode", "self-dual", "--N", "1", "--n", "0", "--u1", "1", "--M", "6"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("confined.json")).unwrap()).unwrap();
    let steps = doc["solution"]["restriction"].as_array().unwrap();
    let value = |label: &str| -> String {
        let s = steps.iter().find(|s| s["label"].as_str().unwrap().starts_with(label)).unwrap();
        s["solved"][0][1].as_str().unwrap().to_string()
    };
    // constant terms after the time shift is merged
    assert!(value("(4)").ends_with("+ 1/4"), "{}", value("(4)"));
    assert!(value("(5)").ends_with("- 1/4"), "{}", value("(5)"));
}
