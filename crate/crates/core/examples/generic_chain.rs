//! The model-generic single-variable resampler against the exact answer,
//! on a two-citation model with two observed attributes.
//!
//! `cargo run --release --example generic_chain -- [samples] [seed]`

use blogmh::engine::{Chain, Problem};
use blogmh::oracle::{Bounds, Oracle};
use blogmh::parser::{parse_assertions, parse_model};
use blogmh::proposers::GenericResampler;

const MODEL: &str = r#"
type Pub; type Cit;
guaranteed Cit C1, C2;
#Pub ~ Categorical({1: 0.25, 2: 0.5, 3: 0.25});
random Boolean Hot(Pub p) ~ Bernoulli(0.3);
random Boolean Big(Pub p) ~ Bernoulli(0.5);
random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);
random Boolean Obs(Cit c) ~ NoisyCopy(Hot(PubCited(c)), 0.9);
random Boolean Size(Cit c) ~ NoisyCopy(Big(PubCited(c)), 0.8);
"#;

const EVIDENCE: &str = "
Obs(C1) = true
Obs(C2) = true
Size(C1) = true
Size(C2) = false
query same : PubCited(C1) == PubCited(C2)
query three : #Pub == 3
query big : Big(PubCited(C2))
";

fn main() {
    let mut args = std::env::args().skip(1);
    let samples: u64 = args.next().map_or(100_000, |s| s.parse().expect("samples"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let model = parse_model(MODEL).unwrap();
    let a = parse_assertions(&model, EVIDENCE).unwrap();
    let problem = Problem::from_assertions(&model, &a);
    let exact = Oracle::new(&model, Bounds::new()).posteriors(&problem).unwrap();

    let mut chain = Chain::new(&problem, GenericResampler::new(), seed, false).unwrap();
    let stats = chain.run(samples, 1_000).unwrap();
    println!("{:<8} {:>10} {:>10}", "query", "chain", "exact");
    for (q, p) in stats.queries.iter().zip(&exact) {
        println!("{:<8} {:>10.4} {:>10.4}", q.name, q.estimate, p);
    }
    println!(
        "\n{} proposals, acceptance {:.3}, {:.1} factor evaluations per step, {:.0} ms",
        stats.proposals,
        stats.acceptance_rate,
        stats.factor_evals_total as f64 / stats.proposals.max(1) as f64,
        stats.wall_ms
    );
}
