use std::collections::{HashMap, HashSet};

use indexmap::{IndexMap, IndexSet};

use super::{EngineError, Problem};
use crate::model::{evaluate_dependency, Model};
use crate::value::{BasicVar, Ident, TypeId, Value};
use crate::world::{log_falling_factorial, Overlay, PartialWorld, WorldError, WorldState};

#[derive(Clone, Debug, Default, PartialEq)]
struct Node {
    parents: Vec<BasicVar>,
    children: IndexSet<BasicVar>,
    factor: f64,
}

/// Active parents, active children and the cached log factor of every
/// instantiated variable of the current state.
#[derive(Clone, Debug, Default)]
pub struct ChildGraph {
    nodes: HashMap<BasicVar, Node>,
}

static EMPTY: Vec<BasicVar> = Vec::new();

impl ChildGraph {
    /// Traces every instantiated variable of a self-supporting world.
    pub fn build<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<ChildGraph, EngineError> {
        let mut nodes: HashMap<BasicVar, Node> = HashMap::new();
        let vars = w.vars();
        for v in &vars {
            let ev = evaluate_dependency(model, w, v)?;
            let Some(d) = ev.dist else {
                return Err(WorldError::NotSelfSupporting(model.show_var(v)).into());
            };
            let node = nodes.entry(v.clone()).or_default();
            node.factor = d.log_mass(w.get(v).unwrap());
            node.parents = ev.parents;
        }
        for v in &vars {
            let parents = nodes[v].parents.clone();
            for p in parents {
                nodes.get_mut(&p).expect("parent of a supported variable is instantiated").children.insert(v.clone());
            }
        }
        Ok(ChildGraph { nodes })
    }

    /// Rebuilds the graph from scratch and compares. Returns a description
    /// of the first difference.
    pub fn verify<W: WorldState + ?Sized>(&self, model: &Model, w: &W) -> Result<(), String> {
        let fresh = ChildGraph::build(model, w).map_err(|e| e.to_string())?;
        if fresh.nodes.len() != self.nodes.len() {
            return Err(format!("graph has {} nodes, world has {} variables", self.nodes.len(), fresh.nodes.len()));
        }
        for (v, f) in &fresh.nodes {
            let Some(n) = self.nodes.get(v) else {
                return Err(format!("{} missing from graph", model.show_var(v)));
            };
            if n.parents != f.parents {
                return Err(format!("parents of {} differ", model.show_var(v)));
            }
            let a: HashSet<_> = n.children.iter().collect();
            let b: HashSet<_> = f.children.iter().collect();
            if a != b {
                return Err(format!("children of {} differ", model.show_var(v)));
            }
            if n.factor != f.factor && !(n.factor.is_nan() && f.factor.is_nan()) {
                return Err(format!("cached factor of {} is stale", model.show_var(v)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parents(&self, v: &BasicVar) -> &[BasicVar] {
        self.nodes.get(v).map_or(&EMPTY[..], |n| &n.parents)
    }

    pub fn children(&self, v: &BasicVar) -> impl Iterator<Item = &BasicVar> {
        self.nodes.get(v).into_iter().flat_map(|n| n.children.iter())
    }

    pub fn child_count(&self, v: &BasicVar) -> usize {
        self.nodes.get(v).map_or(0, |n| n.children.len())
    }

    pub fn factor(&self, v: &BasicVar) -> Option<f64> {
        self.nodes.get(v).map(|n| n.factor)
    }

    /// Sum of cached log factors.
    pub fn total_factor(&self) -> f64 {
        let mut fs: Vec<(&BasicVar, f64)> = self.nodes.iter().map(|(k, n)| (k, n.factor)).collect();
        fs.sort_by(|a, b| a.0.cmp(b.0));
        fs.into_iter().map(|(_, f)| f).sum()
    }

    /// Brings the graph in line with the state after an accepted patch.
    pub(crate) fn commit(&mut self, a: &Analysis) {
        for v in &a.removed {
            if let Some(node) = self.nodes.remove(v) {
                for p in &node.parents {
                    if let Some(pn) = self.nodes.get_mut(p) {
                        pn.children.swap_remove(v);
                    }
                }
            }
        }
        for (v, parents, factor) in &a.affected {
            let old = self.nodes.get(v).map(|n| n.parents.clone()).unwrap_or_default();
            if old != *parents {
                for p in &old {
                    if let Some(pn) = self.nodes.get_mut(p) {
                        pn.children.swap_remove(v);
                    }
                }
                for p in parents {
                    self.nodes.entry(p.clone()).or_default().children.insert(v.clone());
                }
            }
            let node = self.nodes.entry(v.clone()).or_default();
            node.parents = parents.clone();
            node.factor = *factor;
        }
    }
}

/// The effect of a patch on the joint probability, computed from the
/// variables whose factors can have changed.
#[derive(Clone, Debug, Default)]
pub struct Analysis {
    /// Re-evaluated variables still instantiated: (var, active parents, log factor).
    pub affected: Vec<(BasicVar, Vec<BasicVar>, f64)>,
    /// Base variables absent from the proposed state.
    pub removed: Vec<BasicVar>,
    /// Variables removed by pruning, with the values they had.
    pub pruned: Vec<(BasicVar, Value)>,
    /// Change in the sum of log factors.
    pub log_delta: f64,
    /// Change in the identifier adjustment `sum_τ ln(n_τ! / (n_τ - m_τ)!)`.
    pub adjust_delta: f64,
    /// Number of dependency evaluations performed.
    pub evals: usize,
    /// Whether a number variable changed.
    pub number_changing: bool,
    /// Instantiated variables the proposed state does not support.
    pub unsupported: Vec<BasicVar>,
    /// Required variables the proposed state lacks: evidence and query reads,
    /// and number variables of types with identifiers.
    pub missing: Vec<BasicVar>,
    /// Identifiers referenced in the proposed state but not held as a value.
    pub ungrounded: Vec<Ident>,
}

impl Analysis {
    /// True when the proposed state is self-supporting, has all required
    /// variables, and is grounded.
    pub fn is_complete(&self) -> bool {
        self.unsupported.is_empty() && self.missing.is_empty() && self.ungrounded.is_empty()
    }

    /// Turns an incomplete proposed state into an error.
    pub fn check(&self, model: &Model) -> Result<(), EngineError> {
        if let Some(v) = self.missing.first() {
            return Err(EngineError::Contract(format!(
                "proposed state does not instantiate {}",
                model.show_var(v)
            )));
        }
        if let Some(v) = self.unsupported.first() {
            return Err(EngineError::Contract(format!(
                "proposed state does not support {}",
                model.show_var(v)
            )));
        }
        if let Some(id) = self.ungrounded.first() {
            return Err(WorldError::Ungrounded(model.show_ident(*id)).into());
        }
        Ok(())
    }
}

fn number_value<W: WorldState + ?Sized>(w: &W, ty: TypeId) -> Option<u64> {
    w.get(&BasicVar::Number(ty)).and_then(Value::as_nat)
}

/// Re-evaluates the variables a patch can affect, prunes what the patched
/// state no longer needs, and computes the probability change.
pub(crate) fn analyze(problem: &Problem<'_>, graph: &ChildGraph, ov: &mut Overlay<'_>) -> Result<Analysis, EngineError> {
    let model = problem.model;
    let base: &PartialWorld = ov.base;
    let changed: Vec<BasicVar> = ov.patch.changed().map(|(k, _)| k.clone()).collect();
    let removed_by_proposer: Vec<BasicVar> = ov.patch.removed().cloned().collect();
    let mut affected: IndexSet<BasicVar> = changed.iter().cloned().collect();
    for d in changed.iter().chain(&removed_by_proposer) {
        for c in graph.children(d) {
            if ov.contains(c) {
                affected.insert(c.clone());
            }
        }
    }

    let mut evals: IndexMap<BasicVar, (Option<f64>, Vec<BasicVar>)> = IndexMap::with_capacity(affected.len());
    let mut new_children: HashMap<BasicVar, Vec<BasicVar>> = HashMap::new();
    for a in &affected {
        let ev = evaluate_dependency(model, ov, a)?;
        let factor = ev.dist.map(|d| d.log_mass(ov.get(a).unwrap()));
        for p in &ev.parents {
            new_children.entry(p.clone()).or_default().push(a.clone());
        }
        evals.insert(a.clone(), (factor, ev.parents));
    }

    let reads = problem.query_reads(ov)?;
    let mut missing: Vec<BasicVar> = reads.iter().filter(|c| !ov.contains(c)).cloned().collect();
    missing.extend(removed_by_proposer.iter().filter(|v| problem.is_evidence(v)).cloned());
    let reads_set: HashSet<&BasicVar> = reads.iter().collect();
    let is_core = |x: &BasicVar| problem.is_evidence(x) || reads_set.contains(x);
    let mut work: Vec<BasicVar> = Vec::new();
    for x in affected.iter().chain(&removed_by_proposer) {
        work.extend(graph.parents(x).iter().cloned());
        if !base.contains(x) {
            work.push(x.clone());
        }
    }
    work.extend(problem.query_reads(base)?);
    let mut pruned = Vec::new();
    while let Some(x) = work.pop() {
        if is_core(&x) || !ov.contains(&x) {
            continue;
        }
        let live_new = new_children.get(&x).is_some_and(|cs| cs.iter().any(|y| ov.contains(y)));
        let live = live_new
            || graph.children(&x).any(|y| {
                ov.contains(y)
                    && match evals.get(y) {
                        Some((_, ps)) => ps.contains(&x),
                        None => true,
                    }
            });
        if live {
            continue;
        }
        let value = ov.remove(&x).expect("instantiated");
        match evals.get(&x) {
            Some((_, ps)) => work.extend(ps.iter().cloned()),
            None => work.extend(graph.parents(&x).iter().cloned()),
        }
        pruned.push((x, value));
    }

    let unsupported: Vec<BasicVar> = evals
        .iter()
        .filter(|(a, (f, _))| f.is_none() && ov.contains(a))
        .map(|(a, _)| a.clone())
        .collect();
    let touched: Vec<_> = ov.patch.touched_idents().collect();
    let mut ungrounded: Vec<_> = touched
        .into_iter()
        .filter(|id| ov.ident_refs(*id) > 0 && ov.ident_holders(*id) == 0)
        .collect();
    ungrounded.sort();
    ungrounded.dedup();

    let mut log_delta = 0.0;
    for (a, (f, _)) in &evals {
        if ov.contains(a) {
            log_delta += f.unwrap_or(f64::NAN);
        }
        if let Some(old) = graph.factor(a) {
            log_delta -= old;
        }
    }
    let mut removed = Vec::new();
    for r in removed_by_proposer.iter().chain(pruned.iter().map(|(v, _)| v)) {
        if base.contains(r) {
            if !evals.contains_key(r) {
                log_delta -= graph.factor(r).expect("graph mirrors state");
            }
            removed.push(r.clone());
        }
    }

    let mut tys = base.ident_types();
    tys.extend(ov.ident_types());
    tys.sort();
    tys.dedup();
    let mut adjust_delta = 0.0;
    for ty in tys {
        let (m0, m1) = (base.ident_count(ty) as u64, ov.ident_count(ty) as u64);
        let (n0, n1) = (number_value(base, ty), number_value(ov, ty));
        if m0 == m1 && n0 == n1 {
            continue;
        }
        let side = |n: Option<u64>, m: u64| match (n, m) {
            (_, 0) => Some(0.0),
            (Some(n), m) => Some(log_falling_factorial(n, m)),
            (None, _) => None,
        };
        match (side(n1, m1), side(n0, m0)) {
            (Some(a), Some(b)) => adjust_delta += a - b,
            _ => {
                adjust_delta = f64::NAN;
                missing.push(BasicVar::Number(ty));
            }
        }
    }

    let number_changing = changed
        .iter()
        .chain(&removed)
        .any(|v| matches!(v, BasicVar::Number(_)));
    let n_evals = evals.len();
    let affected = evals
        .into_iter()
        .filter(|(a, _)| ov.contains(a))
        .map(|(a, (f, ps))| (a, ps, f.unwrap_or(f64::NAN)))
        .collect();
    Ok(Analysis {
        affected,
        unsupported,
        missing,
        ungrounded,
        removed,
        pruned,
        log_delta,
        adjust_delta,
        evals: n_evals,
        number_changing,
    })
}
