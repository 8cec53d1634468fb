use blogmh::engine::{Chain, Problem};
use blogmh::parser::{parse_assertions, parse_model};
use blogmh::proposers::{SplitMerge, SplitMergeConfig};

const TITLES: &str = include_str!("../models/titles_small.blog");
const EVIDENCE: &str = include_str!("../models/titles_small.evidence");

fn everything_in_one_canopy() -> SplitMergeConfig {
    SplitMergeConfig {
        theta: 0.0,
        ..SplitMergeConfig::default()
    }
}

#[test]
fn small_title_model_under_assertions() {
    let m = parse_model(TITLES).unwrap();
    let a = parse_assertions(&m, EVIDENCE).unwrap();
    let problem = Problem::from_assertions(&m, &a);
    let mut chain = Chain::new(&problem, SplitMerge::new(everything_in_one_canopy()), 9, true).unwrap();
    chain.run(3_000, 0).unwrap();
    chain.check().unwrap();
}
