use blogmh::engine::{Chain, Problem};
use blogmh::parser::{parse_assertions, parse_model};
use blogmh::proposers::GenericResampler;

const TINY: &str = r#"
type Pub; type Cit;
guaranteed Cit C1;
#Pub ~ Categorical({1: 0.5, 2: 0.5});
random Boolean Hot(Pub p) ~ Bernoulli(0.7);
random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);
random Boolean Obs(Cit c) ~ NoisyCopy(Hot(PubCited(c)), 0.9);
"#;

#[test]
fn tiny_generic_chain_with_assertions() {
    let m = parse_model(TINY).unwrap();
    let a = parse_assertions(&m, "Obs(C1) = true\nquery hot : Hot(PubCited(C1))").unwrap();
    let problem = Problem::from_assertions(&m, &a);
    let mut chain = Chain::new(&problem, GenericResampler::new(), 3, true).unwrap();
    let stats = chain.run(20_000, 0).unwrap();
    let est = stats.queries[0].estimate;
    assert!((est - 21.0 / 22.0).abs() < 0.02, "{est} {stats:?}");
    chain.check().unwrap();
}

#[test]
fn tiny_generic_chain_fast() {
    let m = parse_model(TINY).unwrap();
    let a = parse_assertions(&m, "Obs(C1) = true\nquery hot : Hot(PubCited(C1))").unwrap();
    let problem = Problem::from_assertions(&m, &a);
    let mut chain = Chain::new(&problem, GenericResampler::new(), 11, false).unwrap();
    let stats = chain.run(200_000, 0).unwrap();
    let est = stats.queries[0].estimate;
    assert!((est - 21.0 / 22.0).abs() < 0.01, "{est} {stats:?}");
}
