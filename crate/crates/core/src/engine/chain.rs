use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::graph::Analysis;
use super::{ChainRng, ChildGraph, EngineError, Problem, ProposalCtx, Proposer};
use crate::world::{grounding_order, is_minimal_beyond, log_prob, validate, PartialWorld, WorldPatch, WorldState};

/// Run length and checking options.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub samples: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Re-check every state invariant and the naive acceptance ratio on every
    /// step. Slow.
    pub assert: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            samples: 10_000,
            burn_in: 0,
            seed: 0,
            assert: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct QueryEstimate {
    pub name: String,
    pub estimate: f64,
    pub n: u64,
    pub hits: u64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct ClassStats {
    pub steps: u64,
    pub factor_evals: u64,
}

impl ClassStats {
    pub fn mean_evals(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.factor_evals as f64 / self.steps as f64
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct ChainStats {
    pub seed: u64,
    pub queries: Vec<QueryEstimate>,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub factor_evals_total: u64,
    /// Steps whose patch changed a number variable.
    pub number_changing: ClassStats,
    pub other: ClassStats,
    pub initial_log_prob: f64,
    pub final_log_prob: f64,
    pub init_ms: f64,
    pub wall_ms: f64,
}

/// Result of a single step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub log_ratio: f64,
    pub evals: usize,
    pub number_changing: bool,
}

/// A single Markov chain: state, child graph, proposer and statistics.
pub struct Chain<'a, 'm, P: Proposer> {
    problem: &'a Problem<'m>,
    proposer: P,
    state: PartialWorld,
    patch: WorldPatch,
    graph: ChildGraph,
    prop_rng: ChainRng,
    acc_rng: ChainRng,
    assert: bool,
    log_prob: f64,
    query_cache: Vec<bool>,
    hits: Vec<u64>,
    counted: u64,
    stats: ChainStats,
}

fn stream(seed: u64, s: u64) -> ChainRng {
    let mut r = ChainRng::seed_from_u64(seed);
    r.set_stream(s);
    r
}

impl<'a, 'm, P: Proposer> Chain<'a, 'm, P> {
    /// Builds the initial state with the proposer and checks it.
    pub fn new(problem: &'a Problem<'m>, mut proposer: P, seed: u64, assert: bool) -> Result<Self, EngineError> {
        let t0 = Instant::now();
        let mut init_rng = stream(seed, 0);
        let state = proposer.initial_state(problem, &mut init_rng)?;
        check_state(problem, &state).map_err(|e| EngineError::Initial(e.to_string()))?;
        let log_prob = log_prob(problem.model, &state)?;
        if !log_prob.is_finite() {
            return Err(EngineError::Initial("initial state has probability zero".into()));
        }
        let graph = ChildGraph::build(problem.model, &state)?;
        let query_cache = problem.query_values(&state)?;
        let stats = ChainStats {
            seed,
            initial_log_prob: log_prob,
            final_log_prob: log_prob,
            init_ms: t0.elapsed().as_secs_f64() * 1e3,
            ..ChainStats::default()
        };
        Ok(Chain {
            problem,
            proposer,
            state,
            patch: WorldPatch::new(),
            graph,
            prop_rng: stream(seed, 1),
            acc_rng: stream(seed, 2),
            assert,
            log_prob,
            hits: vec![0; query_cache.len()],
            query_cache,
            counted: 0,
            stats,
        })
    }

    pub fn state(&self) -> &PartialWorld {
        &self.state
    }

    pub fn graph(&self) -> &ChildGraph {
        &self.graph
    }

    pub fn proposer(&self) -> &P {
        &self.proposer
    }

    pub fn proposer_mut(&mut self) -> &mut P {
        &mut self.proposer
    }

    pub fn problem(&self) -> &'a Problem<'m> {
        self.problem
    }

    /// Log probability of the current state, maintained incrementally.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    /// Query indicators of the current state.
    pub fn query_values(&self) -> &[bool] {
        &self.query_cache
    }

    pub fn patch_ops(&self) -> crate::world::PatchOps {
        self.patch.ops
    }

    /// Builds one proposal and returns its analysis and proposal ratio
    /// without accepting or rejecting it. The patch stays pending.
    fn prepare(&mut self) -> Result<(Analysis, f64), EngineError> {
        let mut ctx = ProposalCtx::new(self.problem, &self.state, &self.graph, &mut self.patch);
        let lpr = self.proposer.propose(&mut ctx, &mut self.prop_rng)?;
        if lpr.is_nan() || lpr == f64::INFINITY {
            return Err(EngineError::Contract(format!("proposal ratio {lpr} is not finite")));
        }
        let analysis = ctx.into_analysis()?;
        analysis.check(self.problem.model)?;
        Ok((analysis, lpr))
    }

    /// Proposes, computes the incremental ratio and returns it together with
    /// the ratio recomputed from full joint probabilities. The patch is
    /// discarded. Used to check the incremental computation.
    pub fn compare_ratio(&mut self) -> Result<(f64, f64), EngineError> {
        let (a, lpr) = match self.prepare() {
            Ok(x) => x,
            Err(e) => {
                self.patch.discard();
                return Err(e);
            }
        };
        let incremental = a.log_delta + a.adjust_delta + lpr;
        let proposed = self.patch.over(&self.state).materialize();
        let naive = log_prob(self.problem.model, &proposed)? - self.log_prob + lpr;
        self.patch.discard();
        self.proposer.observe(false);
        Ok((incremental, naive))
    }

    /// One Metropolis-Hastings transition.
    pub fn step(&mut self) -> Result<StepOutcome, EngineError> {
        let (a, lpr) = match self.prepare() {
            Ok(x) => x,
            Err(e) => {
                self.patch.discard();
                return Err(e);
            }
        };
        let ratio = a.log_delta + a.adjust_delta + lpr;
        if ratio.is_nan() {
            self.patch.discard();
            return Err(EngineError::Contract("acceptance ratio is NaN".into()));
        }
        let mut full = None;
        if self.assert {
            let proposed = self.patch.over(&self.state).materialize();
            let lp = log_prob(self.problem.model, &proposed)?;
            full = Some(lp);
            let full = lp;
            let naive = full - self.log_prob + lpr;
            let agree = (naive == ratio) || (naive - ratio).abs() <= 1e-9 * (1.0 + naive.abs());
            if !agree {
                self.patch.discard();
                return Err(EngineError::Contract(format!(
                    "incremental ratio {ratio} differs from full recomputation {naive}"
                )));
            }
        }
        let u: f64 = self.acc_rng.gen();
        let accepted = u.ln() < ratio;
        if accepted {
            self.graph.commit(&a);
            self.patch.apply(&mut self.state);
            self.log_prob = full.unwrap_or(self.log_prob + a.log_delta + a.adjust_delta);
            self.query_cache = self.problem.query_values(&self.state)?;
            if self.assert {
                check_state(self.problem, &self.state)?;
                self.graph
                    .verify(self.problem.model, &self.state)
                    .map_err(EngineError::Contract)?;
            }
        } else {
            self.patch.discard();
        }
        self.proposer.observe(accepted);

        let s = &mut self.stats;
        s.proposals += 1;
        s.accepted += accepted as u64;
        s.factor_evals_total += a.evals as u64;
        let class = if a.number_changing {
            &mut s.number_changing
        } else {
            &mut s.other
        };
        class.steps += 1;
        class.factor_evals += a.evals as u64;
        Ok(StepOutcome {
            accepted,
            log_ratio: ratio,
            evals: a.evals,
            number_changing: a.number_changing,
        })
    }

    /// Adds the current state to the query estimates.
    pub fn record(&mut self) {
        for (h, q) in self.hits.iter_mut().zip(&self.query_cache) {
            *h += *q as u64;
        }
        self.counted += 1;
    }

    /// Runs `burn_in` unrecorded steps followed by `samples` recorded ones.
    pub fn run(&mut self, samples: u64, burn_in: u64) -> Result<ChainStats, EngineError> {
        self.run_with(samples, burn_in, |_| {})
    }

    /// Like [`Chain::run`], calling `visit` after every recorded step.
    pub fn run_with(
        &mut self,
        samples: u64,
        burn_in: u64,
        mut visit: impl FnMut(&Self),
    ) -> Result<ChainStats, EngineError> {
        let t0 = Instant::now();
        for _ in 0..burn_in {
            self.step()?;
        }
        for _ in 0..samples {
            self.step()?;
            self.record();
            visit(self);
        }
        self.stats.wall_ms += t0.elapsed().as_secs_f64() * 1e3;
        Ok(self.stats())
    }

    pub fn stats(&self) -> ChainStats {
        let mut s = self.stats.clone();
        s.final_log_prob = self.log_prob;
        s.acceptance_rate = if s.proposals == 0 {
            0.0
        } else {
            s.accepted as f64 / s.proposals as f64
        };
        s.queries = self
            .problem
            .queries
            .iter()
            .zip(&self.hits)
            .map(|(q, &hits)| QueryEstimate {
                name: q.name.clone(),
                estimate: if self.counted == 0 {
                    f64::NAN
                } else {
                    hits as f64 / self.counted as f64
                },
                n: self.counted,
                hits,
            })
            .collect();
        s
    }

    /// Checks every state invariant and the graph of the current state.
    pub fn check(&self) -> Result<(), EngineError> {
        check_state(self.problem, &self.state)?;
        self.graph
            .verify(self.problem.model, &self.state)
            .map_err(EngineError::Contract)
    }
}

/// Evidence, self-support, query instantiation, minimality and grounding.
pub fn check_state(problem: &Problem<'_>, w: &PartialWorld) -> Result<(), EngineError> {
    let model = problem.model;
    validate(model, w)?;
    if let Some(v) = problem.violated_evidence(w) {
        return Err(EngineError::Contract(format!("evidence {} is violated", model.show_var(v))));
    }
    problem.query_values(w)?;
    let core = problem.core(w)?;
    if !is_minimal_beyond(model, w, &core)? {
        return Err(EngineError::Contract("state is not minimal".into()));
    }
    if let Err(id) = grounding_order(w) {
        return Err(EngineError::Contract(format!(
            "identifier {} is not grounded",
            model.show_ident(id)
        )));
    }
    if w.ident_types().iter().any(|t| !w.is_identifier_mode(*t)) {
        return Err(EngineError::Contract("identifiers of a type not in identifier mode".into()));
    }
    Ok(())
}

/// Runs one chain per seed, concurrently when there are several, with
/// proposers from `make`. Stats come back in seed order.
pub fn run_chains<P, F>(problem: &Problem<'_>, config: &ChainConfig, seeds: &[u64], make: F) -> Result<Vec<ChainStats>, EngineError>
where
    P: Proposer,
    F: Fn(u64) -> P + Sync,
{
    let one = |seed: u64| -> Result<ChainStats, EngineError> {
        let mut chain = Chain::new(problem, make(seed), seed, config.assert)?;
        chain.run(config.samples, config.burn_in)
    };
    if seeds.len() <= 1 {
        return seeds.iter().map(|s| one(*s)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = seeds.iter().map(|&seed| s.spawn(move || one(seed))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

/// Query estimates over the recorded samples of several chains.
pub fn pool_queries(chains: &[ChainStats]) -> Vec<QueryEstimate> {
    let Some(first) = chains.first() else { return Vec::new() };
    (0..first.queries.len())
        .map(|qi| {
            let (n, hits) = chains
                .iter()
                .map(|c| (c.queries[qi].n, c.queries[qi].hits))
                .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            QueryEstimate {
                name: first.queries[qi].name.clone(),
                estimate: if n == 0 { f64::NAN } else { hits as f64 / n as f64 },
                n,
                hits,
            }
        })
        .collect()
}
