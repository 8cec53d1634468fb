use blogmh::citebench::{
    citation_model, generate_synthetic, run_citebench, ConfigEcho, RunOptions, SyntheticConfig, CITATION_MODEL,
};

#[test]
fn synthetic_generation_is_deterministic() {
    let cfg = SyntheticConfig::new(30);
    let a = generate_synthetic(CITATION_MODEL, &cfg, 4).unwrap();
    let b = generate_synthetic(CITATION_MODEL, &cfg, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 30);
    let c = generate_synthetic(CITATION_MODEL, &cfg, 5).unwrap();
    assert_ne!(a, c);
}

#[test]
fn noiseless_generation_repeats_texts() {
    let src = CITATION_MODEL.replace("eps=0.05", "eps=0.0");
    assert_ne!(src, CITATION_MODEL);
    let d = generate_synthetic(&src, &SyntheticConfig::new(40), 1).unwrap();
    for a in &d.records {
        for b in &d.records {
            if a.gold == b.gold {
                assert_eq!(a.text, b.text);
            }
        }
    }
    let distinct: std::collections::BTreeSet<_> = d.records.iter().map(|r| &r.gold).collect();
    assert_eq!(d.gold_partition().len(), distinct.len());
}

#[test]
fn short_run_under_assertions() {
    let d = generate_synthetic(CITATION_MODEL, &SyntheticConfig::new(40), 2).unwrap();
    let m = citation_model(CITATION_MODEL, d.len()).unwrap();
    let opts = RunOptions {
        samples: 1_500,
        seed: 3,
        assert: true,
        ..RunOptions::default()
    };
    let r = run_citebench(&m, &d, &[], &opts, ConfigEcho::default()).unwrap();
    let c = &r.chains[0];
    assert!(c.stats.final_log_prob >= c.stats.initial_log_prob);
}
