//! The Metropolis-Hastings loop over partial worlds, with incremental
//! acceptance ratios driven by a child graph.

mod chain;
mod graph;

pub use chain::{
    check_state, pool_queries, run_chains, Chain, ChainConfig, ChainStats, ClassStats, QueryEstimate, StepOutcome,
};
pub use graph::{Analysis, ChildGraph};

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{evaluate_term, Model, ModelError, WorldView};
use crate::parser::{Assertions, Query};
use crate::value::{BasicVar, Ident, TypeId, Value};
use crate::world::{Overlay, PartialWorld, WorldError, WorldPatch, WorldState};

/// Random number generator used by chains and proposers.
pub type ChainRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    World(#[from] WorldError),
    /// A proposer broke its contract or the state lost a required property.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("could not build an initial state: {0}")]
    Initial(String),
    #[error("{0}")]
    Config(String),
}

/// Evidence and queries over a model.
#[derive(Clone, Debug)]
pub struct Problem<'m> {
    pub model: &'m Model,
    pub evidence: Vec<(BasicVar, Value)>,
    pub queries: Vec<Query>,
    evidence_index: HashMap<BasicVar, Value>,
}

impl<'m> Problem<'m> {
    pub fn new(model: &'m Model, evidence: Vec<(BasicVar, Value)>, queries: Vec<Query>) -> Problem<'m> {
        let evidence_index = evidence.iter().cloned().collect();
        Problem {
            model,
            evidence,
            queries,
            evidence_index,
        }
    }

    pub fn from_assertions(model: &'m Model, a: &Assertions) -> Problem<'m> {
        Problem::new(model, a.evidence.clone(), a.queries.clone())
    }

    pub fn is_evidence(&self, var: &BasicVar) -> bool {
        self.evidence_index.contains_key(var)
    }

    pub fn evidence_value(&self, var: &BasicVar) -> Option<&Value> {
        self.evidence_index.get(var)
    }

    /// Variables the state must keep: evidence variables and everything read
    /// while evaluating the queries. Query reads that are uninstantiated are
    /// included too, so callers can detect them.
    pub fn core<W: WorldView + ?Sized>(&self, w: &W) -> Result<Vec<BasicVar>, ModelError> {
        let mut core: Vec<BasicVar> = self.evidence.iter().map(|(v, _)| v.clone()).collect();
        for q in &self.queries {
            evaluate_term(self.model, w, &q.term, &[], &mut core)?;
        }
        Ok(core)
    }

    /// Query indicators in `w`; errors if a query cannot be evaluated.
    pub fn query_values<W: WorldView + ?Sized>(&self, w: &W) -> Result<Vec<bool>, EngineError> {
        let mut out = Vec::with_capacity(self.queries.len());
        let mut reads = Vec::new();
        for q in &self.queries {
            reads.clear();
            match evaluate_term(self.model, w, &q.term, &[], &mut reads)? {
                Some(v) => out.push(v == Value::Bool(true)),
                None => {
                    return Err(EngineError::Contract(format!(
                        "query {} is not instantiated (missing {})",
                        q.name,
                        self.model.show_var(reads.last().unwrap())
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Variables read while evaluating the queries, including a final
    /// uninstantiated one when a query cannot be evaluated.
    pub fn query_reads<W: WorldView + ?Sized>(&self, w: &W) -> Result<Vec<BasicVar>, ModelError> {
        let mut reads = Vec::new();
        for q in &self.queries {
            evaluate_term(self.model, w, &q.term, &[], &mut reads)?;
        }
        Ok(reads)
    }

    /// First evidence variable whose value differs in `w`.
    pub fn violated_evidence<W: WorldView + ?Sized>(&self, w: &W) -> Option<&BasicVar> {
        self.evidence
            .iter()
            .find(|(var, val)| w.get(var) != Some(val))
            .map(|(var, _)| var)
    }
}

/// A proposal distribution. Implementations edit the patch through the
/// context and return `ln q(current | proposed) - ln q(proposed | current)`.
pub trait Proposer {
    fn initial_state(&mut self, problem: &Problem<'_>, rng: &mut ChainRng) -> Result<PartialWorld, EngineError>;

    fn propose(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError>;

    /// Called after the engine accepts or rejects the last proposal.
    fn observe(&mut self, _accepted: bool) {}
}

/// What a proposer sees: the current state, the pending patch, and the
/// child graph of the current state.
pub struct ProposalCtx<'a, 'm> {
    pub problem: &'a Problem<'m>,
    pub base: &'a PartialWorld,
    pub graph: &'a ChildGraph,
    patch: &'a mut WorldPatch,
    analysis: Option<(u64, Analysis)>,
}

impl<'a, 'm> ProposalCtx<'a, 'm> {
    pub(crate) fn new(
        problem: &'a Problem<'m>,
        base: &'a PartialWorld,
        graph: &'a ChildGraph,
        patch: &'a mut WorldPatch,
    ) -> Self {
        ProposalCtx {
            problem,
            base,
            graph,
            patch,
            analysis: None,
        }
    }

    pub fn model(&self) -> &'m Model {
        self.problem.model
    }

    /// The patched state.
    pub fn world(&mut self) -> Overlay<'_> {
        self.patch.over(self.base)
    }

    pub fn get(&self, var: &BasicVar) -> Option<&Value> {
        self.patch.get(self.base, var)
    }

    pub fn set(&mut self, var: BasicVar, value: Value) {
        self.patch.over(self.base).set(var, value)
    }

    pub fn remove(&mut self, var: &BasicVar) -> Option<Value> {
        self.patch.over(self.base).remove(var)
    }

    pub fn fresh_ident(&mut self, ty: TypeId) -> Ident {
        self.patch.over(self.base).fresh_ident(ty)
    }

    pub fn ident_count(&mut self, ty: TypeId) -> usize {
        self.patch.over(self.base).ident_count(ty)
    }

    pub fn patch(&self) -> &WorldPatch {
        self.patch
    }

    fn stamp(&self) -> u64 {
        self.patch.ops.sets + self.patch.ops.removes
    }

    /// Removes variables the patched state no longer needs. The engine
    /// performs the same pruning after `propose`; calling it earlier lets a
    /// proposer account for the removed values in its reverse proposal
    /// probability (see [`ProposalCtx::removed_base`]).
    pub fn prune(&mut self) -> Result<(), EngineError> {
        self.analysis().map(|_| ())
    }

    /// Base variables the patched state no longer instantiates, with their
    /// current values.
    pub fn removed_base(&self) -> Vec<(BasicVar, Value)> {
        self.patch
            .removed()
            .map(|v| (v.clone(), self.base.get(v).cloned().expect("removed from base")))
            .collect()
    }

    pub fn contains(&self, var: &BasicVar) -> bool {
        self.get(var).is_some()
    }

    /// Prunes the patched state and reports what it still lacks. Cached
    /// until the patch changes.
    pub fn analysis(&mut self) -> Result<&Analysis, EngineError> {
        let fresh = match &self.analysis {
            Some((stamp, _)) => *stamp != self.stamp(),
            None => true,
        };
        if fresh {
            let mut ov = self.patch.over(self.base);
            let a = graph::analyze(self.problem, self.graph, &mut ov)?;
            let stamp = self.stamp();
            self.analysis = Some((stamp, a));
        }
        Ok(&self.analysis.as_ref().unwrap().1)
    }

    pub(crate) fn into_analysis(mut self) -> Result<Analysis, EngineError> {
        self.analysis()?;
        Ok(self.analysis.take().unwrap().1)
    }
}

impl WorldView for ProposalCtx<'_, '_> {
    fn get(&self, var: &BasicVar) -> Option<&Value> {
        self.patch.get(self.base, var)
    }
}
