use blogmh::model::{DistKind, Rhs};
use blogmh::parser::{format_model, parse_assertions, parse_ground_term, parse_model};
use blogmh::value::Value;

const TINY: &str = r#"
type Pub; type Cit;
guaranteed Cit C1;
#Pub ~ Categorical({1: 0.5, 2: 0.5});
random Boolean Hot(Pub p) ~ Bernoulli(0.7);
random Pub PubCited(Cit c) ~ UniformOverObjects(Pub);
random Boolean Obs(Cit c) ~ NoisyCopy(Hot(PubCited(c)), 0.9);
"#;

const AUTHORS: &str = r#"
type Res; type Pub; type Cit;
guaranteed Cit C1, C2;
prior NameModel = TokenStringModel(vocab="ann bob cyd", p=1.0, eps=0.0);
prior Fmt = StringConcatFormat(sep=".", alt=",", eps=0.05);
#Res ~ Poisson(lambda=3.0);
#Pub ~ Poisson(4);
random String Name(Res r) ~ NameModel;
random NaturalNum NumAuthors(Pub p) ~ Categorical({1: 0.3, 2: 0.4, 3: 0.3});
random Res NthAuthor(Pub p, NaturalNum n)
    if n < NumAuthors(p) then ~ Uniform(Res r)
    else = null;
random Pub PubCited(Cit c) ~ Uniform(Pub p);
random String NthAuthorText(Cit c, NaturalNum n) = Name(NthAuthor(PubCited(c), n));
random String Suffix(Cit c, NaturalNum n)
    if n < NumAuthors(PubCited(c)) then = Concat(NthAuthorText(c, n), Suffix(c, Succ(n)))
    else = "";
random String Text(Cit c) ~ Fmt(Suffix(c, 0), "x \"q\"");
random Boolean Flag ~ Bernoulli(p=0.25);
random Boolean Both(Cit c) = Flag & !(Obs2(c) | Flag == true);
random Boolean Obs2(Cit c) ~ Bernoulli(0.5);
"#;

#[test]
fn tiny_model_parses() {
    let m = parse_model(TINY).unwrap();
    let f = m.func_id("Obs").unwrap();
    let Rhs::Sample(d) = &m.func(f).clauses[0].rhs else { panic!() };
    assert_eq!(d.kind, DistKind::NoisyCopy(0.9));
    assert_eq!(d.args.len(), 1);
}

#[test]
fn format_round_trips() {
    for src in [TINY, AUTHORS] {
        let m = parse_model(src).unwrap_or_else(|e| panic!("{e:?}"));
        let text = format_model(&m);
        let again = parse_model(&text).unwrap_or_else(|e| panic!("{text}\n{e:?}"));
        assert_eq!(m, again, "{text}");
        assert_eq!(text, format_model(&again));
    }
}

#[test]
fn reports_all_errors_with_locations() {
    let src = "type Pub;\nrandom Foo F(Pub p) ~ Bernoulli(0.5);\nrandom Boolean G(Pub p) ~ Poisson(2.0);\nrandom Boolean H(Pub p) ~ Bernoulli(0.5)\n";
    let errs = parse_model(src).unwrap_err();
    assert!(errs.len() >= 3, "{errs:?}");
    assert_eq!(errs[0].span.line, 2);
    assert!(errs[0].message.contains("unknown type `Foo`"));
    assert!(errs.iter().any(|e| e.span.line == 3 && e.message.contains("type mismatch")));
    assert!(errs.iter().any(|e| e.expected.is_some()));
}

#[test]
fn undeclared_names_and_arity() {
    let errs = parse_model("type Pub;\nrandom Boolean F(Pub p) ~ NoisyCopy(G(p), 0.9);\nrandom Boolean H(Pub p) ~ NoisyCopy(F(p, p), 0.9);").unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("unknown function `G`")), "{errs:?}");
    assert!(errs.iter().any(|e| e.message.contains("wrong number of arguments")), "{errs:?}");
}

#[test]
fn assertions_and_ground_terms() {
    let m = parse_model(TINY).unwrap();
    let a = parse_assertions(&m, "obs Obs(C1) = true;\nquery Hot(PubCited(C1));\nbound #Pub <= 3;\n#Pub = 2;").unwrap();
    assert_eq!(a.evidence.len(), 2);
    assert_eq!(a.evidence[0].1, Value::Bool(true));
    assert_eq!(a.queries[0].name, "Hot(PubCited(C1))");
    assert_eq!(a.number_bound(m.type_id("Pub").unwrap()), Some(3));
    let t = parse_ground_term(&m, "Hot((Pub, 2)) == Hot(Pub@A3F)").unwrap();
    assert_eq!(m.show_term(&t, &[]), "Hot((Pub,2)) == Hot(Pub@A3F)");
    assert!(parse_ground_term(&m, "Hot(p)").is_err());
    assert!(parse_assertions(&m, "Obs(C1) = 3;").is_err());
    assert!(parse_assertions(&m, "Obs(C1) = true; Obs(C1) = false;").is_err());
}

#[test]
fn line_oriented_assertion_files() {
    let m = parse_model(TINY).unwrap();
    let a = parse_assertions(
        &m,
        "Obs(C1) = true\nquery hot : Hot(PubCited(C1)) == true\nbound #Pub <= 2\ndomain Hot in {true, false}\n",
    )
    .unwrap();
    assert_eq!(a.evidence.len(), 1);
    assert_eq!(a.queries[0].name, "hot");
    assert_eq!(a.domain(m.func_id("Hot").unwrap()).unwrap().len(), 2);
    let errs = parse_assertions(&m, "Obs(C1) = = true\nObs(C2) = true\nquery Hot(C1)\n").unwrap_err();
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert_eq!(errs[1].span.line, 2);
}
