//! Quick invariant checks over every module, for `blogmh selftest`.

use std::time::Instant;

use serde::Serialize;

use crate::citebench::{cluster_accuracy, generate_synthetic, CitationDataset, SyntheticConfig, CITATION_MODEL};
use crate::engine::{Chain, Problem, Proposer};
use crate::oracle::{contradictory, Bounds, Oracle};
use crate::parser::{format_model, parse_assertions, parse_model};
use crate::proposers::{build_canopies, jaccard, tokenize, GenericResampler, SplitMerge, SplitMergeConfig};
use crate::world::{concrete_versions, log_prob_abstract, log_prob_concrete};

pub const TINY_MODEL: &str = include_str!("../models/tiny.blog");
pub const TINY_EVIDENCE: &str = include_str!("../models/tiny.evidence");
pub const TITLES_MODEL: &str = include_str!("../models/titles_small.blog");
pub const TITLES_EVIDENCE: &str = include_str!("../models/titles_small.evidence");

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub ms: f64,
}

type Check = fn() -> Result<String, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn parser_round_trip() -> Result<String, String> {
    let mut n = 0;
    for src in [TINY_MODEL, TITLES_MODEL, CITATION_MODEL] {
        let m = parse_model(src).map_err(|e| format!("{e:?}"))?;
        let once = format_model(&m);
        let again = format_model(&parse_model(&once).map_err(|e| format!("{e:?}"))?);
        ensure(once == again, || "format is not a fixed point".into())?;
        n += 1;
    }
    Ok(format!("{n} models"))
}

fn oracle_tiny() -> Result<String, String> {
    let m = parse_model(TINY_MODEL).map_err(|e| format!("{e:?}"))?;
    let a = parse_assertions(&m, TINY_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let p = Oracle::new(&m, Bounds::new())
        .posteriors(&Problem::from_assertions(&m, &a))
        .map_err(fail)?[0];
    ensure((p - 21.0 / 22.0).abs() < 1e-12, || format!("{p} != 21/22"))?;
    Ok(format!("{p:.6}"))
}

fn minimal_states_partition() -> Result<String, String> {
    let m = parse_model(TINY_MODEL).map_err(|e| format!("{e:?}"))?;
    let a = parse_assertions(&m, TINY_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let problem = Problem::from_assertions(&m, &a);
    let o = Oracle::new(&m, Bounds::new());
    let states = o.minimal_states(&problem).map_err(fail)?;
    for (i, (x, _)) in states.iter().enumerate() {
        for (y, _) in &states[i + 1..] {
            ensure(contradictory(x, y), || "two minimal states are compatible".into())?;
        }
    }
    let total: f64 = states.iter().map(|(_, p)| p).sum();
    let worlds = o.enumerate_worlds().map_err(fail)?;
    let ev: f64 = worlds
        .worlds
        .iter()
        .filter(|(w, _)| problem.violated_evidence(w).is_none())
        .map(|(_, p)| p)
        .sum();
    ensure((total - ev).abs() <= 1e-10, || format!("{total} vs {ev}"))?;
    Ok(format!("{} states", states.len()))
}

fn abstract_versions() -> Result<String, String> {
    let m = parse_model(TINY_MODEL).map_err(|e| format!("{e:?}"))?;
    let a = parse_assertions(&m, TINY_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let problem = Problem::from_assertions(&m, &a);
    let mut chain = Chain::new(&problem, GenericResampler::new(), 5, false).map_err(fail)?;
    let mut checked = 0;
    for _ in 0..200 {
        chain.step().map_err(fail)?;
        let w = chain.state();
        let sum: f64 = concrete_versions(w)
            .map_err(fail)?
            .iter()
            .map(|(_, c)| log_prob_concrete(&m, c).map(f64::exp))
            .sum::<Result<f64, _>>()
            .map_err(fail)?;
        let abs = log_prob_abstract(&m, w).map_err(fail)?.exp();
        ensure((sum - abs).abs() <= 1e-10, || format!("{abs} vs {sum}"))?;
        checked += 1;
    }
    Ok(format!("{checked} states"))
}

fn chain_vs_oracle() -> Result<String, String> {
    let m = parse_model(TINY_MODEL).map_err(|e| format!("{e:?}"))?;
    let a = parse_assertions(&m, TINY_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let problem = Problem::from_assertions(&m, &a);
    let mut chain = Chain::new(&problem, GenericResampler::new(), 1, false).map_err(fail)?;
    let est = chain.run(50_000, 0).map_err(fail)?.queries[0].estimate;
    ensure((est - 21.0 / 22.0).abs() < 0.02, || format!("{est}"))?;
    Ok(format!("{est:.4}"))
}

fn ratios<P: Proposer>(problem: &Problem<'_>, proposer: P, steps: usize) -> Result<usize, String> {
    let mut chain = Chain::new(problem, proposer, 2, false).map_err(fail)?;
    let mut compared = 0;
    for _ in 0..steps {
        let (inc, naive) = chain.compare_ratio().map_err(fail)?;
        let same = inc == naive || (inc - naive).abs() <= 1e-9 * (1.0 + naive.abs());
        ensure(same, || format!("incremental {inc} vs full {naive}"))?;
        if naive.is_finite() {
            compared += 1;
        }
        chain.step().map_err(fail)?;
        chain.graph().verify(problem.model, chain.state())?;
    }
    Ok(compared)
}

fn incremental_ratios() -> Result<String, String> {
    let tiny = parse_model(TINY_MODEL).map_err(|e| format!("{e:?}"))?;
    let ta = parse_assertions(&tiny, TINY_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let g = ratios(&Problem::from_assertions(&tiny, &ta), GenericResampler::new(), 500)?;
    let titles = parse_model(TITLES_MODEL).map_err(|e| format!("{e:?}"))?;
    let sa = parse_assertions(&titles, TITLES_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let config = SplitMergeConfig {
        theta: 0.0,
        ..SplitMergeConfig::default()
    };
    let s = ratios(&Problem::from_assertions(&titles, &sa), SplitMerge::new(config), 500)?;
    Ok(format!("{g} generic, {s} split-merge"))
}

fn chains_under_assertions() -> Result<String, String> {
    let titles = parse_model(TITLES_MODEL).map_err(|e| format!("{e:?}"))?;
    let sa = parse_assertions(&titles, TITLES_EVIDENCE).map_err(|e| format!("{e:?}"))?;
    let problem = Problem::from_assertions(&titles, &sa);
    let mut chain = Chain::new(&problem, SplitMerge::default(), 4, true).map_err(fail)?;
    chain.run(500, 0).map_err(fail)?;
    chain.check().map_err(fail)?;
    let mut generic = Chain::new(&problem, GenericResampler::new(), 4, true);
    // Forward sampling may not reproduce the observed texts; that is not a
    // failure of the checks.
    if let Ok(g) = generic.as_mut() {
        g.run(500, 0).map_err(fail)?;
        g.check().map_err(fail)?;
    }
    Ok("1000 steps".into())
}

fn citation_pieces() -> Result<String, String> {
    let j = jaccard(&tokenize("learning to parse citations"), &tokenize("parse citations quickly"));
    ensure((j - 0.4).abs() < 1e-12, || format!("jaccard {j}"))?;
    let c = build_canopies(&["a b", "a b", "x y"], 0.25);
    ensure(c.usable().len() == 1, || "canopies".into())?;
    let d = CitationDataset::parse_tsv("1\ta\tx\n2\ta\tx\n3\tb\ty\n").map_err(fail)?;
    let one: Vec<Vec<String>> = ["1", "2", "3"].iter().map(|s| vec![s.to_string()]).collect();
    let acc = cluster_accuracy(&one, &d.gold_partition()).map_err(fail)?;
    ensure(acc == 0.5, || format!("accuracy {acc}"))?;
    let cfg = SyntheticConfig::new(30);
    let a = generate_synthetic(CITATION_MODEL, &cfg, 1).map_err(fail)?;
    let b = generate_synthetic(CITATION_MODEL, &cfg, 1).map_err(fail)?;
    ensure(a == b, || "synthetic data differs across runs".into())?;
    Ok("canopies, accuracy, synthetic data".into())
}

const CHECKS: &[(&str, Check)] = &[
    ("parser round trip", parser_round_trip),
    ("oracle on tiny model", oracle_tiny),
    ("minimal states partition evidence", minimal_states_partition),
    ("abstract mass sums concrete versions", abstract_versions),
    ("generic chain agrees with oracle", chain_vs_oracle),
    ("incremental ratios and child graph", incremental_ratios),
    ("chains under assertions", chains_under_assertions),
    ("citation pieces", citation_pieces),
];

/// Runs every check, catching panics so one failure does not hide others.
pub fn run_selftest() -> Vec<CheckResult> {
    run_selftest_with(|_| {})
}

/// Like [`run_selftest`], calling `each` as every check finishes.
pub fn run_selftest_with(mut each: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let t = Instant::now();
            let out = std::panic::catch_unwind(check).unwrap_or_else(|p| {
                Err(p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()))
            });
            let (passed, detail) = match out {
                Ok(d) => (true, d),
                Err(e) => (false, e),
            };
            let r = CheckResult {
                name,
                passed,
                detail,
                ms: t.elapsed().as_secs_f64() * 1e3,
            };
            each(&r);
            r
        })
        .collect()
}
