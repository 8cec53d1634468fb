//! A state that names a publication by an identifier stands for several
//! concrete worlds, one per way of picking the object.
//!
//! `cargo run --example abstract_worlds`

use blogmh::parser::parse_model;
use blogmh::value::{Ident, Value};
use blogmh::world::{concrete_versions, debug_dump, grounding_order, log_prob_abstract, log_prob_concrete, PartialWorld};

fn main() {
    let model = parse_model(
        "type Pub; type Cit; guaranteed Cit Cit1;
         #Pub ~ Poisson(2.0);
         random String Title(Pub p) ~ TokenStringModel(vocab=\"foo bar\", p=0.5);
         random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);",
    )
    .unwrap();
    let x = Value::from(Ident {
        ty: model.type_id("Pub").unwrap(),
        token: 0xA3F,
    });
    let w = PartialWorld::from_pairs([
        (model.number_var("Pub"), Value::Nat(3)),
        (model.var("PubCited", [model.obj("Cit1")]), x.clone()),
        (model.var("Title", [x]), "foo".into()),
    ]);
    print!("abstract state:\n{}", debug_dump(&model, &w));
    for (id, var) in grounding_order(&w).unwrap() {
        println!("grounded: {id:?} by {}", model.show_var(&var));
    }

    let mut total = 0.0;
    for (_, c) in concrete_versions(&w).unwrap() {
        let p = log_prob_concrete(&model, &c).unwrap().exp();
        total += p;
        println!("\nversion with probability {p:.6}:");
        print!("{}", debug_dump(&model, &c));
    }
    let abs = log_prob_abstract(&model, &w).unwrap().exp();
    println!("\nsum over versions {total:.10}");
    println!("abstract mass     {abs:.10}");
}
