//! Parsing a model, reporting errors, and printing it back.
//!
//! `cargo run --example parse_and_format [file.blog]`

use blogmh::citebench::CITATION_MODEL;
use blogmh::parser::{format_model, parse_assertions, parse_model};

const BROKEN: &str = "type Pub;
random Boolean Hot(Pub p) ~ Bernoulli(1.7);
random Pub Cited(Cit c) ~ UniformOverObjects(Pub);
random Boolean Obs(Cit c) ~ NoisyCopy(Hot(Cited(c), 0.9);
";

fn main() {
    let src = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => CITATION_MODEL.to_string(),
    };
    let model = match parse_model(&src) {
        Ok(m) => m,
        Err(errs) => {
            for e in errs {
                eprintln!("{e}");
            }
            std::process::exit(2);
        }
    };
    print!("{}", format_model(&model));

    println!("\n// errors in a broken model:");
    for e in parse_model(BROKEN).unwrap_err() {
        println!("// {e}");
    }

    let tiny = parse_model(include_str!("../models/tiny.blog")).unwrap();
    let a = parse_assertions(&tiny, "obs Obs(C1) = true\nquery Hot(PubCited(C1))\nbound #Pub <= 2").unwrap();
    println!("\n// assertions: {} evidence, {} queries, #Pub bound {:?}", a.evidence.len(), a.queries.len(), a.number_bound(tiny.type_id("Pub").unwrap()));
}
