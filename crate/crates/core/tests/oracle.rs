use blogmh::engine::Problem;
use blogmh::oracle::{contradictory, Bounds, Oracle};
use blogmh::parser::{parse_assertions, parse_ground_term, parse_model};
use blogmh::world::{log_prob_concrete, PartialWorld};

const TINY: &str = r#"
type Pub; type Cit;
guaranteed Cit C1;
#Pub ~ Categorical({1: 0.5, 2: 0.5});
random Boolean Hot(Pub p) ~ Bernoulli(0.7);
random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);
random Boolean Obs(Cit c) ~ NoisyCopy(Hot(PubCited(c)), 0.9);
"#;

#[test]
fn tiny_posterior() {
    let m = parse_model(TINY).unwrap();
    let a = parse_assertions(&m, "Obs(C1) = true\nquery Hot(PubCited(C1))").unwrap();
    let o = Oracle::new(&m, Bounds::new());
    let p = o.posteriors(&Problem::from_assertions(&m, &a)).unwrap()[0];
    assert!((p - 21.0 / 22.0).abs() < 1e-12, "{p}");
    let always = parse_ground_term(&m, "true").unwrap();
    assert_eq!(o.exact_posterior(&a.evidence, &always).unwrap(), 1.0);
    let one = parse_ground_term(&m, "#Pub == 1").unwrap();
    assert!((o.exact_posterior(&[], &one).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn world_coverage() {
    let m = parse_model(TINY).unwrap();
    let all = Oracle::new(&m, Bounds::new()).enumerate_worlds().unwrap();
    // #Pub=1: Hot(1), PubCited, Obs -> 2*1*2; #Pub=2: 2*2*2*2.
    assert_eq!(all.worlds.len(), 4 + 16);
    assert!((all.coverage - 1.0).abs() < 1e-12);
    let a = parse_assertions(&m, "bound #Pub <= 1").unwrap();
    let cut = Oracle::new(&m, Bounds::from_assertions(&a)).enumerate_worlds().unwrap();
    assert!((cut.coverage - 0.5).abs() < 1e-12);

    let coin = parse_model("random Boolean Coin ~ Bernoulli(0.3);").unwrap();
    let w = Oracle::new(&coin, Bounds::new()).enumerate_worlds().unwrap();
    let mut ps: Vec<f64> = w.worlds.iter().map(|(_, p)| *p).collect();
    ps.sort_by(f64::total_cmp);
    assert_eq!(ps.len(), 2);
    assert!((ps[0] - 0.3).abs() < 1e-15 && (ps[1] - 0.7).abs() < 1e-15);
}

#[test]
fn minimal_states_partition_the_evidence() {
    let m = parse_model(TINY).unwrap();
    let o = Oracle::new(&m, Bounds::new());
    let obs = m.var("Obs", vec![m.obj("C1")]);
    let states = o.enumerate_minimal_states(&[obs.clone()], &[]).unwrap();
    for (i, (a, pa)) in states.iter().enumerate() {
        assert!((log_prob_concrete(&m, a).unwrap().exp() - pa).abs() < 1e-12);
        for (b, _) in &states[i + 1..] {
            assert!(contradictory(a, b));
        }
    }
    let total: f64 = states.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let empty = o.enumerate_minimal_states(&[], &[]).unwrap();
    assert_eq!(empty.len(), 1);
    assert_eq!(empty[0].0, PartialWorld::new());
}

#[test]
fn unbounded_support_is_reported() {
    let m = parse_model("type Pub; #Pub ~ Poisson(2.0); random Boolean B(Pub p) ~ Bernoulli(0.5);").unwrap();
    let err = Oracle::new(&m, Bounds::new()).enumerate_worlds().unwrap_err();
    assert!(err.to_string().contains("#Pub"), "{err}");
}
