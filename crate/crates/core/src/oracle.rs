//! Brute-force exact inference on bounded models.
//!
//! Enumeration is a dependency chase: starting from the variables that
//! must be instantiated, it repeatedly picks the first needed variable
//! whose dependency can be evaluated and branches over its values. The
//! leaves are exactly the self-supporting instantiations minimal beyond
//! the starting set; they are pairwise contradictory and their masses sum
//! to the prior mass inside the bounds. All objects are numbered.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::engine::Problem;
use crate::model::{evaluate_dependency, evaluate_term, Dist, Model, ModelError, Term};
use crate::parser::{Assertions, Bound};
use crate::value::{BasicVar, FuncId, ObjRef, TypeId, Value};
use crate::world::PartialWorld;

/// Default limit on visited search nodes.
pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("enumeration exceeded {0} search nodes")]
    CapExceeded(u64),
    #[error("{0} has unbounded support; add a `bound` or `domain` line")]
    Unbounded(String),
    #[error("the evidence has probability zero within the bounds")]
    ZeroEvidence,
    #[error("query `{0}` is not boolean")]
    Query(String),
}

/// Finite value ranges for variables whose support is infinite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bounds {
    numbers: BTreeMap<TypeId, u64>,
    caps: BTreeMap<FuncId, u64>,
    domains: BTreeMap<FuncId, Vec<Value>>,
}

impl Bounds {
    pub fn new() -> Bounds {
        Bounds::default()
    }

    pub fn from_assertions(a: &Assertions) -> Bounds {
        let mut b = Bounds::new();
        for bound in &a.bounds {
            match bound {
                Bound::Number(t, n) => b = b.number(*t, *n),
                Bound::Value(f, n) => b = b.cap(*f, *n),
                Bound::Domain(f, vs) => b = b.domain(*f, vs.clone()),
            }
        }
        b
    }

    /// `#ty` ranges over `0..=max`.
    pub fn number(mut self, ty: TypeId, max: u64) -> Bounds {
        self.numbers.insert(ty, max);
        self
    }

    /// A natural-number-valued function ranges over `0..=max`.
    pub fn cap(mut self, f: FuncId, max: u64) -> Bounds {
        self.caps.insert(f, max);
        self
    }

    /// A function ranges over the listed values.
    pub fn domain(mut self, f: FuncId, values: Vec<Value>) -> Bounds {
        self.domains.insert(f, values);
        self
    }
}

/// An instantiation with its probability.
pub type Weighted = (PartialWorld, f64);

#[derive(Clone, Debug)]
pub struct WorldEnumeration {
    pub worlds: Vec<Weighted>,
    /// Total probability of the enumerated worlds: 1 when the bounds cut
    /// nothing off.
    pub coverage: f64,
}

#[derive(Clone, Debug)]
enum Target {
    Var(BasicVar),
    Term(Term),
}

struct Search<'a> {
    model: &'a Model,
    bounds: &'a Bounds,
    forced: HashMap<BasicVar, Value>,
    targets: Vec<Target>,
    full: bool,
    nodes: u64,
    cap: u64,
    leaves: Vec<Weighted>,
}

impl Search<'_> {
    /// Follows missing parents from `v` to a variable whose dependency the
    /// world can evaluate.
    fn instantiable(&self, w: &PartialWorld, mut v: BasicVar) -> Result<BasicVar, OracleError> {
        loop {
            let ev = evaluate_dependency(self.model, w, &v)?;
            match ev.missing() {
                None => return Ok(v),
                Some(m) => v = m.clone(),
            }
        }
    }

    fn objects(&self, w: &PartialWorld, ty: TypeId) -> Result<Vec<Value>, BasicVar> {
        let mut out: Vec<Value> = (0..self.model.guaranteed_count(ty))
            .map(|index| Value::Obj(ObjRef::Guaranteed { ty, index }))
            .collect();
        if self.model.number_statement(ty).is_some() {
            let nv = BasicVar::Number(ty);
            let n = w.get(&nv).and_then(Value::as_nat).ok_or(nv)?;
            out.extend((1..=n as u32).map(|index| Value::Obj(ObjRef::Numbered { ty, index })));
        }
        Ok(out)
    }

    /// Next variable to branch on, or `None` at a leaf.
    fn next(&self, w: &PartialWorld) -> Result<Option<BasicVar>, OracleError> {
        for t in &self.targets {
            match t {
                Target::Var(v) => {
                    if !w.contains(v) {
                        return self.instantiable(w, v.clone()).map(Some);
                    }
                }
                Target::Term(term) => {
                    let mut reads = Vec::new();
                    if evaluate_term(self.model, w, term, &[], &mut reads)?.is_none() {
                        let m = reads.pop().expect("unevaluable term read a missing variable");
                        return self.instantiable(w, m).map(Some);
                    }
                }
            }
        }
        if self.full {
            for ty in self.model.user_types() {
                let nv = BasicVar::Number(ty);
                if self.model.number_statement(ty).is_some() && !w.contains(&nv) {
                    return self.instantiable(w, nv).map(Some);
                }
            }
            for f in self.model.func_ids() {
                let decl = self.model.func(f);
                if decl.arg_types.iter().any(|t| t.is_builtin()) {
                    continue;
                }
                let mut per_arg = Vec::new();
                for t in &decl.arg_types {
                    match self.objects(w, *t) {
                        Ok(objs) => per_arg.push(objs),
                        Err(nv) => return self.instantiable(w, nv).map(Some),
                    }
                }
                let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
                for objs in &per_arg {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t| {
                            objs.iter().map(move |o| {
                                let mut t2 = t.clone();
                                t2.push(o.clone());
                                t2
                            })
                        })
                        .collect();
                }
                for args in tuples {
                    let v = BasicVar::app(f, args);
                    if !w.contains(&v) {
                        return self.instantiable(w, v).map(Some);
                    }
                }
            }
        }
        Ok(None)
    }

    fn values(&self, v: &BasicVar, d: &Dist) -> Result<Vec<(Value, f64)>, OracleError> {
        if let Some(val) = self.forced.get(v) {
            return Ok(vec![(val.clone(), d.log_mass(val).exp())]);
        }
        let listed = |vals: Vec<Value>| vals.into_iter().map(|x| (x.clone(), d.log_mass(&x).exp())).collect();
        match v {
            BasicVar::Number(ty) => {
                if let Some(&n) = self.bounds.numbers.get(ty) {
                    return Ok(listed((0..=n).map(Value::Nat).collect()));
                }
            }
            BasicVar::App(f, _) => {
                if let Some(vals) = self.bounds.domains.get(f) {
                    return Ok(listed(vals.clone()));
                }
                if let Some(&n) = self.bounds.caps.get(f) {
                    return Ok(listed((0..=n).map(Value::Nat).collect()));
                }
            }
        }
        d.finite_support()
            .ok_or_else(|| OracleError::Unbounded(self.model.show_var(v)))
    }

    fn run(&mut self, w: &mut PartialWorld, p: f64) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(OracleError::CapExceeded(self.cap));
        }
        let Some(v) = self.next(w)? else {
            self.leaves.push((w.clone(), p));
            return Ok(());
        };
        let d = evaluate_dependency(self.model, w, &v)?
            .dist
            .expect("branch variable is supported");
        for (val, mass) in self.values(&v, &d)? {
            if mass <= 0.0 {
                continue;
            }
            w.insert(v.clone(), val);
            self.run(w, p * mass)?;
            w.remove(&v);
        }
        Ok(())
    }
}

/// Exact inference by enumeration within [`Bounds`].
#[derive(Clone, Debug)]
pub struct Oracle<'m> {
    pub model: &'m Model,
    pub bounds: Bounds,
    pub cap: u64,
}

impl<'m> Oracle<'m> {
    pub fn new(model: &'m Model, bounds: Bounds) -> Oracle<'m> {
        Oracle {
            model,
            bounds,
            cap: DEFAULT_CAP,
        }
    }

    fn search(
        &self,
        targets: Vec<Target>,
        forced: &[(BasicVar, Value)],
        full: bool,
    ) -> Result<Vec<Weighted>, OracleError> {
        let mut s = Search {
            model: self.model,
            bounds: &self.bounds,
            forced: forced.iter().cloned().collect(),
            targets,
            full,
            nodes: 0,
            cap: self.cap,
            leaves: Vec::new(),
        };
        s.run(&mut PartialWorld::new(), 1.0)?;
        Ok(s.leaves)
    }

    /// Every full world (all number variables and all function applications
    /// to existing objects) with its probability.
    pub fn enumerate_worlds(&self) -> Result<WorldEnumeration, OracleError> {
        let worlds = self.search(Vec::new(), &[], true)?;
        let coverage = worlds.iter().map(|(_, p)| p).sum();
        Ok(WorldEnumeration { worlds, coverage })
    }

    /// Every self-supporting instantiation minimal beyond `core`, with the
    /// `evidence` values imposed.
    pub fn enumerate_minimal_states(
        &self,
        core: &[BasicVar],
        evidence: &[(BasicVar, Value)],
    ) -> Result<Vec<Weighted>, OracleError> {
        let mut targets: Vec<Target> = evidence.iter().map(|(v, _)| Target::Var(v.clone())).collect();
        targets.extend(core.iter().cloned().map(Target::Var));
        self.search(targets, evidence, false)
    }

    /// Minimal states beyond the evidence and the variables the queries read.
    pub fn minimal_states(&self, problem: &Problem<'_>) -> Result<Vec<Weighted>, OracleError> {
        let mut targets: Vec<Target> = problem.evidence.iter().map(|(v, _)| Target::Var(v.clone())).collect();
        targets.extend(problem.queries.iter().map(|q| Target::Term(q.term.clone())));
        self.search(targets, &problem.evidence, false)
    }

    fn query_value(&self, w: &PartialWorld, term: &Term) -> Result<bool, OracleError> {
        match evaluate_term(self.model, w, term, &[], &mut Vec::new())? {
            Some(Value::Bool(b)) => Ok(b),
            _ => Err(OracleError::Query(self.model.show_term(term, &[]))),
        }
    }

    /// `p(query | evidence)` for each query of the problem.
    pub fn posteriors(&self, problem: &Problem<'_>) -> Result<Vec<f64>, OracleError> {
        let states = self.minimal_states(problem)?;
        let z: f64 = states.iter().map(|(_, p)| p).sum();
        if z <= 0.0 {
            return Err(OracleError::ZeroEvidence);
        }
        let mut out = Vec::with_capacity(problem.queries.len());
        for q in &problem.queries {
            let mut hit = 0.0;
            for (w, p) in &states {
                if self.query_value(w, &q.term)? {
                    hit += p;
                }
            }
            out.push(hit / z);
        }
        Ok(out)
    }

    /// `p(query | evidence)`.
    pub fn exact_posterior(&self, evidence: &[(BasicVar, Value)], query: &Term) -> Result<f64, OracleError> {
        let q = crate::parser::Query {
            name: String::new(),
            term: query.clone(),
        };
        let problem = Problem::new(self.model, evidence.to_vec(), vec![q]);
        Ok(self.posteriors(&problem)?[0])
    }

    /// Probability of the evidence within the bounds.
    pub fn evidence_mass(&self, evidence: &[(BasicVar, Value)]) -> Result<f64, OracleError> {
        Ok(self.enumerate_minimal_states(&[], evidence)?.iter().map(|(_, p)| p).sum())
    }

    /// Total probability of the full worlds that agree with the concrete
    /// instantiation `w`.
    pub fn completion_mass(&self, w: &PartialWorld) -> Result<f64, OracleError> {
        let targets = w.iter().map(|(v, _)| Target::Var(v.clone())).collect();
        let worlds = self.search(targets, &[], true)?;
        Ok(worlds
            .iter()
            .filter(|(full, _)| w.iter().all(|(v, val)| full.get(v) == Some(val)))
            .map(|(_, p)| p)
            .sum())
    }
}

/// True if two concrete instantiations assign different values to some
/// variable they share.
pub fn contradictory(a: &PartialWorld, b: &PartialWorld) -> bool {
    a.iter().any(|(v, x)| b.get(v).is_some_and(|y| y != x))
}
