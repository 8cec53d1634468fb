use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::{evidence, partition_from_labels, CitationDataset, CitebenchError};
use crate::engine::{pool_queries, Chain, ChainRng, ChainStats, EngineError, Problem, ProposalCtx, Proposer, QueryEstimate};
use crate::model::Model;
use crate::parser::Query;
use crate::proposers::{CitationSchema, GenericResampler, SplitMerge, SplitMergeConfig};
use crate::world::PartialWorld;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposerKind {
    Generic,
    SplitMerge,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOptions {
    pub proposer: ProposerKind,
    pub samples: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub chains: usize,
    pub theta: f64,
    pub rho: f64,
    pub assert: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            proposer: ProposerKind::SplitMerge,
            samples: 10_000,
            burn_in: 0,
            seed: 0,
            chains: 1,
            theta: 0.25,
            rho: 0.1,
            assert: false,
        }
    }
}

/// Where the model and data came from.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConfigEcho {
    pub model: String,
    pub dataset: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MoveCount {
    pub kind: String,
    pub proposed: u64,
    pub accepted: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub seed: u64,
    pub stats: ChainStats,
    pub accuracy_final: f64,
    /// Mean over recorded samples.
    pub accuracy_avg: f64,
    pub accuracy_majority: f64,
    pub final_clustering: Vec<Vec<String>>,
    /// The clustering recorded most often.
    pub majority_clustering: Vec<Vec<String>>,
    pub moves: Vec<MoveCount>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pooled {
    pub queries: Vec<QueryEstimate>,
    pub accuracy_final: f64,
    pub accuracy_avg: f64,
    pub acceptance_rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub config: ConfigEcho,
    pub options: RunOptions,
    pub citations: usize,
    pub gold_clusters: usize,
    pub chains: Vec<ChainReport>,
    pub pooled: Pooled,
}

/// Generic single-variable moves started from the split-merge initial
/// state, since forward sampling almost never reproduces observed texts.
struct SeededGeneric {
    init: SplitMerge,
    moves: GenericResampler,
}

impl Proposer for SeededGeneric {
    fn initial_state(&mut self, problem: &Problem<'_>, rng: &mut ChainRng) -> Result<PartialWorld, EngineError> {
        self.init.initial_state(problem, rng)
    }

    fn propose(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
        self.moves.propose(ctx, rng)
    }
}

/// Canonical cluster labels of the citations in a state: publications are
/// numbered in order of first citation.
fn labels(schema: &CitationSchema, w: &PartialWorld, n: usize) -> Vec<u32> {
    let mut ids = HashMap::new();
    (0..n)
        .map(|i| {
            let v = w.get(&schema.pub_cited_var(i)).cloned();
            let next = ids.len() as u32;
            *ids.entry(v).or_insert(next)
        })
        .collect()
}

/// Citation indices per cluster, in label order.
fn groups(labels: &[u32]) -> Vec<Vec<usize>> {
    let k = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut out = vec![Vec::new(); k];
    for (i, l) in labels.iter().enumerate() {
        out[*l as usize].push(i);
    }
    out
}

fn accuracy(labels: &[u32], gold: &[Vec<usize>]) -> f64 {
    if gold.is_empty() {
        return 1.0;
    }
    let pred: HashSet<Vec<usize>> = groups(labels).into_iter().collect();
    gold.iter().filter(|g| pred.contains(*g)).count() as f64 / gold.len() as f64
}

struct Shared<'a> {
    schema: &'a CitationSchema,
    ids: &'a [String],
    gold: &'a [Vec<usize>],
    opts: &'a RunOptions,
}

fn run_chain<P: Proposer>(
    sh: &Shared<'_>,
    problem: &Problem<'_>,
    proposer: P,
    seed: u64,
    moves: impl Fn(&P) -> Vec<MoveCount>,
) -> Result<ChainReport, EngineError> {
    let n = sh.ids.len();
    let mut chain = Chain::new(problem, proposer, seed, sh.opts.assert)?;
    let mut seen: HashMap<Vec<u32>, u64> = HashMap::new();
    let mut acc_sum = 0.0;
    let stats = chain.run_with(sh.opts.samples, sh.opts.burn_in, |c| {
        let l = labels(sh.schema, c.state(), n);
        acc_sum += accuracy(&l, sh.gold);
        *seen.entry(l).or_insert(0) += 1;
    })?;
    let last = labels(sh.schema, chain.state(), n);
    let majority = seen
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(l, _)| l.clone())
        .unwrap_or_else(|| last.clone());
    Ok(ChainReport {
        seed,
        accuracy_final: accuracy(&last, sh.gold),
        accuracy_avg: if sh.opts.samples == 0 {
            accuracy(&last, sh.gold)
        } else {
            acc_sum / sh.opts.samples as f64
        },
        accuracy_majority: accuracy(&majority, sh.gold),
        final_clustering: partition_from_labels(sh.ids, &last),
        majority_clustering: partition_from_labels(sh.ids, &majority),
        moves: moves(chain.proposer()),
        stats,
    })
}

/// Runs `opts.chains` chains (concurrently when more than one) with seeds
/// `opts.seed`, `opts.seed + 1`, ... on the citations of `dataset`.
pub fn run_citebench(
    model: &Model,
    dataset: &CitationDataset,
    queries: &[Query],
    opts: &RunOptions,
    config: ConfigEcho,
) -> Result<RunReport, CitebenchError> {
    let schema = CitationSchema::detect(model)?;
    let ev = evidence(model, dataset)?;
    let ids = dataset.ids();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let gold: Vec<Vec<usize>> = dataset
        .gold_partition()
        .iter()
        .map(|g| {
            let mut g: Vec<usize> = g.iter().map(|id| index[id.as_str()]).collect();
            g.sort_unstable();
            g
        })
        .collect();
    let problem = Problem::new(model, ev, queries.to_vec());
    let sh = Shared {
        schema: &schema,
        ids: &ids,
        gold: &gold,
        opts,
    };
    let sm_config = SplitMergeConfig {
        theta: opts.theta,
        rho: opts.rho,
        ..SplitMergeConfig::default()
    };
    let one = |k: usize| -> Result<ChainReport, EngineError> {
        let seed = opts.seed + k as u64;
        match opts.proposer {
            ProposerKind::SplitMerge => run_chain(&sh, &problem, SplitMerge::new(sm_config.clone()), seed, |p| {
                p.move_counts()
                    .into_iter()
                    .map(|(k, proposed, accepted)| MoveCount {
                        kind: format!("{k:?}").to_lowercase(),
                        proposed,
                        accepted,
                    })
                    .collect()
            }),
            ProposerKind::Generic => {
                let p = SeededGeneric {
                    init: SplitMerge::new(sm_config.clone()),
                    moves: GenericResampler::new(),
                };
                run_chain(&sh, &problem, p, seed, |_| Vec::new())
            }
        }
    };
    let k = opts.chains.max(1);
    let results: Vec<Result<ChainReport, EngineError>> = if k == 1 {
        vec![one(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..k).map(|i| s.spawn(move || one(i))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    };
    let chains = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let pooled = pool(&chains);
    Ok(RunReport {
        report_version: 1,
        config,
        options: opts.clone(),
        citations: dataset.len(),
        gold_clusters: gold.len(),
        chains,
        pooled,
    })
}

fn pool(chains: &[ChainReport]) -> Pooled {
    let k = chains.len().max(1) as f64;
    let stats: Vec<ChainStats> = chains.iter().map(|c| c.stats.clone()).collect();
    let queries = pool_queries(&stats);
    let (props, acc) = chains
        .iter()
        .fold((0, 0), |a, c| (a.0 + c.stats.proposals, a.1 + c.stats.accepted));
    Pooled {
        queries,
        accuracy_final: chains.iter().map(|c| c.accuracy_final).sum::<f64>() / k,
        accuracy_avg: chains.iter().map(|c| c.accuracy_avg).sum::<f64>() / k,
        acceptance_rate: if props == 0 { 0.0 } else { acc as f64 / props as f64 },
    }
}
