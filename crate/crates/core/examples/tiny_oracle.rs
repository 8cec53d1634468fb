//! Exact posterior on a one-citation model by enumeration.
//!
//! `cargo run --example tiny_oracle`

use blogmh::engine::Problem;
use blogmh::oracle::{Bounds, Oracle};
use blogmh::parser::{parse_assertions, parse_ground_term, parse_model};
use blogmh::world::debug_dump;

const MODEL: &str = include_str!("../models/tiny.blog");

fn main() {
    let model = parse_model(MODEL).expect("model parses");
    let a = parse_assertions(&model, "Obs(C1) = true\nquery hot : Hot(PubCited(C1))").unwrap();
    let problem = Problem::from_assertions(&model, &a);
    let oracle = Oracle::new(&model, Bounds::new());

    let p = oracle.posteriors(&problem).unwrap()[0];
    println!("p(Hot(PubCited(C1)) | Obs(C1)) = {p:.6}  (21/22 = {:.6})", 21.0 / 22.0);

    let one = parse_ground_term(&model, "#Pub == 1").unwrap();
    println!("p(#Pub == 1 | Obs(C1)) = {:.6}", oracle.exact_posterior(&a.evidence, &one).unwrap());

    // The minimal states beyond the evidence and query partition the evidence.
    let states = oracle.minimal_states(&problem).unwrap();
    println!("\n{} minimal states:", states.len());
    for (w, mass) in &states {
        println!("mass {mass:.4}");
        for line in debug_dump(&model, w).lines() {
            println!("    {line}");
        }
    }
}
