//! Split-merge citation matching on synthetic data.
//!
//! `cargo run --release --example citation_matching -- [citations] [samples] [seed]`

use blogmh::citebench::{
    citation_model, generate_synthetic, run_citebench, ConfigEcho, RunOptions, SyntheticConfig, CITATION_MODEL,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(120, |s| s.parse().expect("citations"));
    let samples: u64 = args.next().map_or(10_000, |s| s.parse().expect("samples"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let data = generate_synthetic(CITATION_MODEL, &SyntheticConfig::new(n), seed).unwrap();
    println!("{} citations of {} publications, e.g.", data.len(), data.gold_partition().len());
    for r in data.records.iter().take(5) {
        println!("  {}  {:<5} {}", r.id, r.gold, r.text);
    }

    let model = citation_model(CITATION_MODEL, data.len()).unwrap();
    let opts = RunOptions {
        samples,
        seed,
        ..RunOptions::default()
    };
    let report = run_citebench(&model, &data, &[], &opts, ConfigEcho::default()).unwrap();
    let c = &report.chains[0];
    println!("\naccuracy: final {:.3}, sample average {:.3}, majority {:.3}", c.accuracy_final, c.accuracy_avg, c.accuracy_majority);
    println!(
        "log p: {:.1} -> {:.1}; {:.0} ms sampling after {:.0} ms setup",
        c.stats.initial_log_prob, c.stats.final_log_prob, c.stats.wall_ms, c.stats.init_ms
    );
    for m in &c.moves {
        println!("  {:<10} {:>6} proposed {:>6} accepted", m.kind, m.proposed, m.accepted);
    }

    let text = |id: &str| data.records.iter().find(|r| r.id == id).map_or("", |r| r.text.as_str());
    let missed: Vec<_> = data.gold_partition().into_iter().filter(|g| !c.final_clustering.contains(g)).collect();
    println!("\n{} gold clusters not recovered", missed.len());
    for g in missed.iter().take(3) {
        for id in g {
            println!("  {id}  {}", text(id));
        }
        println!();
    }
}
