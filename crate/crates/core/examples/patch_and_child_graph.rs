//! Proposals are written to a patch over the current state, and the child
//! graph says which factors a change can touch.
//!
//! `cargo run --example patch_and_child_graph`

use blogmh::engine::ChildGraph;
use blogmh::parser::parse_model;
use blogmh::value::Value;
use blogmh::world::{log_prob, PartialWorld, WorldPatch, WorldState};

const MODEL: &str = include_str!("../models/tiny.blog");

fn main() {
    let m = parse_model(MODEL).unwrap();
    let number = m.number_var("Pub");
    let cited = m.var("PubCited", [m.obj("C1")]);
    let hot1 = m.var("Hot", [m.numbered("Pub", 1)]);
    let hot2 = m.var("Hot", [m.numbered("Pub", 2)]);
    let obs = m.var("Obs", [m.obj("C1")]);
    let base = PartialWorld::from_pairs([
        (number.clone(), Value::Nat(2)),
        (cited.clone(), m.numbered("Pub", 1)),
        (hot1.clone(), true.into()),
        (obs.clone(), true.into()),
    ]);

    let graph = ChildGraph::build(&m, &base).unwrap();
    for v in base.vars() {
        let kids: Vec<String> = graph.children(&v).map(|c| m.show_var(c)).collect();
        println!("{:<16} factor {:>8.4}  children [{}]", m.show_var(&v), graph.factor(&v).unwrap(), kids.join(", "));
    }

    // Point C1 at the second publication: Obs(C1) now reads Hot((Pub,2)),
    // and Hot((Pub,1)) is no longer needed.
    let mut patch = WorldPatch::new();
    {
        let mut ov = patch.over(&base);
        ov.set(cited.clone(), m.numbered("Pub", 2));
        ov.set(hot2.clone(), false.into());
        ov.remove(&hot1);
        println!("\nthrough the patch: {} = {}", m.show_var(&cited), m.show_value(ov.get(&cited).unwrap()));
        println!("base unchanged:    {} = {}", m.show_var(&cited), m.show_value(base.get(&cited).unwrap()));
        let before = log_prob(&m, &base).unwrap();
        let after = log_prob(&m, &ov).unwrap();
        println!("log p: {before:.4} -> {after:.4}");
    }
    println!("{} pending changes", patch.change_count());

    let mut next = base.clone();
    patch.apply(&mut next);
    println!("applied {} entries; state now has {} variables", patch.ops.applied, next.len());
    let graph = ChildGraph::build(&m, &next).unwrap();
    let kids: Vec<String> = graph.children(&hot2).map(|c| m.show_var(c)).collect();
    println!("children of {}: [{}]", m.show_var(&hot2), kids.join(", "));
}
