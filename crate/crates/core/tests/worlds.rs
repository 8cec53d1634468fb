use blogmh::model::{evaluate_dependency, evaluate_term, var_log_factor, Model};
use blogmh::parser::{parse_ground_term, parse_model};
use blogmh::value::{BasicVar, Ident, Value};
use blogmh::world::*;

const TINY: &str = "type Pub; type Cit; guaranteed Cit C1;
#Pub ~ Categorical({1: 0.5, 2: 0.5});
random Boolean Hot(Pub p) ~ Bernoulli(0.7);
random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);
random Boolean Obs(Cit c) ~ NoisyCopy(Hot(PubCited(c)), 0.9);";

fn tiny() -> Model {
    parse_model(TINY).unwrap()
}

fn sigma1(m: &Model) -> PartialWorld {
    PartialWorld::from_pairs([
        (m.number_var("Pub"), Value::Nat(1)),
        (m.var("PubCited", [m.obj("C1")]), m.numbered("Pub", 1)),
        (m.var("Hot", [m.numbered("Pub", 1)]), true.into()),
        (m.var("Obs", [m.obj("C1")]), true.into()),
    ])
}

fn ident(m: &Model, token: u32) -> Value {
    Value::from(Ident {
        ty: m.type_id("Pub").unwrap(),
        token,
    })
}

#[test]
fn evaluation_traces() {
    let m = tiny();
    let w = PartialWorld::from_pairs([
        (m.var("PubCited", [m.obj("C1")]), m.numbered("Pub", 1)),
        (m.var("Hot", [m.numbered("Pub", 1)]), true.into()),
    ]);
    let t = parse_ground_term(&m, "Hot(PubCited(C1))").unwrap();
    let mut reads = Vec::new();
    let v = evaluate_term(&m, &w, &t, &[], &mut reads).unwrap();
    assert_eq!(v, Some(Value::Bool(true)));
    assert_eq!(reads, vec![m.var("PubCited", [m.obj("C1")]), m.var("Hot", [m.numbered("Pub", 1)])]);
    let mut reads = Vec::new();
    let v = evaluate_term(&m, &PartialWorld::new(), &t, &[], &mut reads).unwrap();
    assert_eq!(v, None);
    assert_eq!(reads, vec![m.var("PubCited", [m.obj("C1")])]);

    let s = sigma1(&m);
    let ev = evaluate_dependency(&m, &s, &m.var("Obs", [m.obj("C1")])).unwrap();
    assert_eq!(ev.parents, vec![m.var("PubCited", [m.obj("C1")]), m.var("Hot", [m.numbered("Pub", 1)])]);
    assert!((var_log_factor(&m, &s, &m.var("Hot", [m.numbered("Pub", 1)])).unwrap() - 0.7f64.ln()).abs() < 1e-15);
    assert_eq!(var_log_factor(&m, &s, &m.var("PubCited", [m.obj("C1")])).unwrap(), 0.0);
}

#[test]
fn support_and_minimality() {
    let m = tiny();
    let s = sigma1(&m);
    assert!(is_self_supporting(&m, &s).unwrap());
    assert!(!is_self_supporting(&m, &PartialWorld::from_pairs([(m.var("Obs", [m.obj("C1")]), true.into())])).unwrap());
    assert!(is_self_supporting(&m, &PartialWorld::new()).unwrap());
    let core = [m.var("Obs", [m.obj("C1")])];
    assert!(is_minimal_beyond(&m, &s, &core).unwrap());

    let mut big = s.clone();
    big.insert(m.number_var("Pub"), Value::Nat(2));
    big.insert(m.var("Hot", [m.numbered("Pub", 2)]), false.into());
    assert!(!is_minimal_beyond(&m, &big, &core).unwrap());
    let mut patch = WorldPatch::new();
    let mut ov = patch.over(&big);
    let removed = prune_to_minimal(&m, &mut ov, &core).unwrap();
    assert_eq!(removed, vec![m.var("Hot", [m.numbered("Pub", 2)])]);
    assert!(is_minimal_beyond(&m, &ov, &core).unwrap());
}

#[test]
fn concrete_probability() {
    let m = tiny();
    let lp = log_prob_concrete(&m, &sigma1(&m)).unwrap();
    assert!((lp - 0.315f64.ln()).abs() < 1e-12);
    assert_eq!(log_prob_concrete(&m, &PartialWorld::new()).unwrap(), 0.0);
    let strict = parse_model(&TINY.replace("0.9)", "1.0)")).unwrap();
    let mut w = sigma1(&strict);
    w.insert(strict.var("Hot", [strict.numbered("Pub", 1)]), false.into());
    assert_eq!(log_prob_concrete(&strict, &w).unwrap(), f64::NEG_INFINITY);
}

#[test]
fn abstract_probability_and_grounding() {
    let m = tiny();
    let x = ident(&m, 0xA3F);
    let w = PartialWorld::from_pairs([
        (m.number_var("Pub"), Value::Nat(2)),
        (m.var("PubCited", [m.obj("C1")]), x.clone()),
        (m.var("Hot", [x.clone()]), true.into()),
        (m.var("Obs", [m.obj("C1")]), true.into()),
    ]);
    let order = grounding_order(&w).unwrap();
    assert_eq!(order.len(), 1);
    assert_eq!(order[0].1, m.var("PubCited", [m.obj("C1")]));
    assert!((log_prob_abstract(&m, &w).unwrap() - 0.315f64.ln()).abs() < 1e-12);
    assert!(matches!(log_prob_concrete(&m, &w), Err(WorldError::IdentifiersPresent)));

    let ungrounded = PartialWorld::from_pairs([(m.number_var("Pub"), Value::Nat(2)), (m.var("Hot", [x.clone()]), true.into())]);
    assert!(grounding_order(&ungrounded).is_err());
    match log_prob_abstract(&m, &ungrounded) {
        Err(WorldError::Ungrounded(name)) => assert_eq!(name, "Pub@A3F"),
        other => panic!("{other:?}"),
    }
    assert!((log_falling_factorial(4, 4) - 24f64.ln()).abs() < 1e-12);
    assert_eq!(log_falling_factorial(1, 2), f64::NEG_INFINITY);
    assert_eq!(log_falling_factorial(5, 0), 0.0);
}

#[test]
fn three_concrete_versions() {
    let m = parse_model(
        "type Pub; type Cit; guaranteed Cit Cit1;
         #Pub ~ Poisson(2.0);
         random String Title(Pub p) ~ TokenStringModel(vocab=\"foo bar\", p=0.5);
         random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);",
    )
    .unwrap();
    let x = ident(&m, 0xA3F);
    let w = PartialWorld::from_pairs([
        (m.number_var("Pub"), Value::Nat(3)),
        (m.var("PubCited", [m.obj("Cit1")]), x.clone()),
        (m.var("Title", [x]), "foo".into()),
    ]);
    let versions = concrete_versions(&w).unwrap();
    assert_eq!(versions.len(), 3);
    for (i, (_, cw)) in versions.iter().enumerate() {
        let p = m.numbered("Pub", i as u32 + 1);
        assert_eq!(cw.get(&m.var("PubCited", [m.obj("Cit1")])), Some(&p));
        assert_eq!(cw.get(&m.var("Title", [p])), Some(&Value::str("foo")));
    }
    let total: f64 = versions.iter().map(|(_, cw)| log_prob_concrete(&m, cw).unwrap().exp()).sum();
    assert!((total - log_prob_abstract(&m, &w).unwrap().exp()).abs() < 1e-12);
    assert_eq!(concrete_versions(&sigma1(&tiny())).unwrap().len(), 1);
}

#[test]
fn debug_dump_is_sorted() {
    let m = tiny();
    assert_eq!(
        debug_dump(&m, &sigma1(&m)),
        "#Pub = 1\nHot((Pub,1)) = true\nObs(C1) = true\nPubCited(C1) = (Pub,1)\n"
    );
}

#[test]
fn patch_basics_and_pools() {
    let m = tiny();
    let x = BasicVar::Number(m.type_id("Pub").unwrap());
    let y = m.var("Hot", [m.numbered("Pub", 1)]);
    let base = PartialWorld::from_pairs([(x.clone(), Value::Nat(1))]);
    let mut patch = WorldPatch::new();
    {
        let mut ov = patch.over(&base);
        ov.set(y.clone(), true.into());
        assert_eq!(ov.get(&x), Some(&Value::Nat(1)));
        assert_eq!(ov.get(&y), Some(&Value::Bool(true)));
        ov.set(x.clone(), Value::Nat(3));
        ov.remove(&x);
        assert_eq!(ov.get(&x), None);
    }
    assert_eq!(patch.removed().count(), 1);
    assert_eq!(patch.changed().count(), 1);
    let mut b2 = base.clone();
    patch.clone().apply(&mut b2);
    assert_eq!(b2, PartialWorld::from_pairs([(y.clone(), true.into())]));
    patch.discard();
    assert_eq!(base.len(), 1);

    let id = ident(&m, 7);
    let mut ov = patch.over(&base);
    let fresh = ov.fresh_ident(m.type_id("Pub").unwrap());
    ov.set(m.var("PubCited", [m.obj("C1")]), id.clone());
    ov.set(m.var("Hot", [id.clone()]), true.into());
    assert_eq!(ov.ident_count(m.type_id("Pub").unwrap()), 1);
    ov.remove(&m.var("PubCited", [m.obj("C1")]));
    assert_eq!(ov.ident_count(m.type_id("Pub").unwrap()), 1);
    ov.remove(&m.var("Hot", [id]));
    assert_eq!(ov.ident_count(m.type_id("Pub").unwrap()), 0);
    assert_ne!(Value::from(fresh), ident(&m, 7));
}
