use std::process::Command;

fn blogmh(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_blogmh"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap()
}

#[test]
fn missing_model_is_a_usage_error() {
    let out = blogmh(&["infer", "--model", "no/such/model.blog"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/model.blog"));
    assert_eq!(blogmh(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn oracle_prints_the_posterior() {
    let out = blogmh(&[
        "oracle",
        "--model",
        "models/tiny.blog",
        "--evidence",
        "models/tiny.evidence",
        "--query",
        "Hot(PubCited(C1)) == true",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let q1 = text.lines().find(|l| l.starts_with("q1")).unwrap();
    let p: f64 = q1.split('\t').nth(1).unwrap().parse().unwrap();
    assert!((p - 21.0 / 22.0).abs() < 1e-12);
}

#[test]
fn citebench_report_is_reproducible() {
    let args = [
        "citebench",
        "--synthetic",
        "50",
        "--samples",
        "10000",
        "--seed",
        "7",
        "--proposer",
        "splitmerge",
    ];
    let a = blogmh(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = blogmh(&args);
    let strip = |o: &[u8]| -> String {
        String::from_utf8_lossy(o)
            .lines()
            .filter(|l| !l.contains("_ms\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a.stdout), strip(&b.stdout));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["report_version"], 1);
    assert_eq!(report["citations"], 50);
    let chain = &report["chains"][0];
    for key in ["accuracy_final", "accuracy_avg", "accuracy_majority"] {
        let x = chain[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x), "{key} = {x}");
    }
    assert!(chain["final_clustering"].as_array().is_some_and(|c| !c.is_empty()));
    assert!(chain["stats"]["factor_evals_total"].as_u64().unwrap() > 0);
}

#[test]
fn selftest_passes() {
    let out = blogmh(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
}
