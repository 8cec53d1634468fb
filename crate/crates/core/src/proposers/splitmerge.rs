use std::collections::HashMap;

use rand::Rng;

use super::{build_canopies, repair_reverse_mass_except, settle, AttributeProposal, Canopies, CitationSchema};
use crate::engine::{ChainRng, ChildGraph, EngineError, Problem, ProposalCtx, Proposer};
use crate::model::{evaluate_dependency, var_log_factor, Model, WorldView};
use crate::value::{BasicVar, ObjRef, TypeId, Value};
use crate::world::{log_falling_factorial, log_prob, PartialWorld, WorldPatch, WorldState};

#[derive(Clone, Debug)]
pub struct SplitMergeConfig {
    /// Token-overlap threshold for canopies.
    pub theta: f64,
    /// Probability of drawing an attribute from its prior instead of
    /// copying it from a citation.
    pub rho: f64,
    /// Share of steps that move a number variable by one.
    pub number_weight: f64,
    /// Share of steps that re-propose one publication's attributes.
    pub attribute_weight: f64,
}

impl Default for SplitMergeConfig {
    fn default() -> Self {
        SplitMergeConfig {
            theta: 0.25,
            rho: 0.1,
            number_weight: 0.05,
            attribute_weight: 0.15,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Split,
    Merge,
    Attributes,
    Number,
    /// Nothing to do, e.g. no canopy with two citations.
    Idle,
}

struct Setup {
    attrs: AttributeProposal,
    canopies: Canopies,
    numbers: Vec<TypeId>,
}

/// Citation matching moves. Most steps pick a canopy and two citations in
/// it: if they cite the same publication, its citations are split between
/// it and a new publication (each other citation goes either way with
/// probability 1/2), otherwise the two publications are merged. Either way
/// the affected publications get attributes proposed from their citations.
/// The remaining steps re-propose one publication's attributes or move a
/// number variable by one.
pub struct SplitMerge {
    config: SplitMergeConfig,
    setup: Option<Setup>,
    assign: Vec<Value>,
    members: HashMap<Value, Vec<usize>>,
    pending: Vec<(usize, Value)>,
    last: MoveKind,
    moves: HashMap<MoveKind, (u64, u64)>,
}

impl SplitMerge {
    pub fn new(config: SplitMergeConfig) -> SplitMerge {
        SplitMerge {
            config,
            setup: None,
            assign: Vec::new(),
            members: HashMap::new(),
            pending: Vec::new(),
            last: MoveKind::Idle,
            moves: HashMap::new(),
        }
    }

    pub fn config(&self) -> &SplitMergeConfig {
        &self.config
    }

    /// Available once the initial state is built.
    pub fn canopies(&self) -> Option<&Canopies> {
        self.setup.as_ref().map(|s| &s.canopies)
    }

    pub fn schema(&self) -> Option<&CitationSchema> {
        self.setup.as_ref().map(|s| &s.attrs.schema)
    }

    /// Publication cited by each citation in the current state.
    pub fn assignment(&self) -> &[Value] {
        &self.assign
    }

    /// `(proposed, accepted)` per move kind.
    pub fn move_counts(&self) -> Vec<(MoveKind, u64, u64)> {
        let mut out: Vec<_> = self.moves.iter().map(|(k, (p, a))| (*k, *p, *a)).collect();
        out.sort_by_key(|(k, _, _)| *k as u8);
        out
    }

    fn setup(&self) -> Result<&Setup, EngineError> {
        self.setup
            .as_ref()
            .ok_or_else(|| EngineError::Config("split-merge used before building its initial state".into()))
    }

    fn index(&mut self, base: &PartialWorld, schema: &CitationSchema, n: usize) -> Result<(), EngineError> {
        self.assign.clear();
        self.members.clear();
        for i in 0..n {
            let p = base
                .get(&schema.pub_cited_var(i))
                .cloned()
                .ok_or_else(|| EngineError::Initial("a citation has no publication".into()))?;
            self.members.entry(p.clone()).or_default().push(i);
            self.assign.push(p);
        }
        Ok(())
    }

    fn reassign(&mut self, ctx: &mut ProposalCtx<'_, '_>, citations: &[usize], to: &Value, schema: &CitationSchema) {
        for &c in citations {
            ctx.set(schema.pub_cited_var(c), to.clone());
            self.pending.push((c, to.clone()));
        }
    }

    fn split_or_merge(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
        let setup = self.setup.take().expect("checked by caller");
        let out = self.split_or_merge_with(&setup, ctx, rng);
        self.setup = Some(setup);
        out
    }

    fn split_or_merge_with(
        &mut self,
        setup: &Setup,
        ctx: &mut ProposalCtx<'_, '_>,
        rng: &mut ChainRng,
    ) -> Result<f64, EngineError> {
        let usable = setup.canopies.usable();
        if usable.is_empty() {
            self.last = MoveKind::Idle;
            return Ok(0.0);
        }
        let group = &setup.canopies.groups()[usable[rng.gen_range(0..usable.len())]];
        let i = rng.gen_range(0..group.len());
        let mut j = rng.gen_range(0..group.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (group[i], group[j]);
        let schema = &setup.attrs.schema;
        let attrs = &setup.attrs;
        let p1 = self.assign[a].clone();
        let p2 = self.assign[b].clone();
        let half = 0.5f64.ln();
        let skip = |v: &BasicVar| schema.is_attribute(v);
        if p1 == p2 {
            self.last = MoveKind::Split;
            let all = self.members[&p1].clone();
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &c in &all {
                if c == a || (c != b && rng.gen::<bool>()) {
                    left.push(c);
                } else {
                    right.push(c);
                }
            }
            let q = Value::Obj(ObjRef::Ident(ctx.fresh_ident(schema.publication)));
            self.reassign(ctx, &right, &q, schema);
            let f1 = attrs.propose(ctx, &p1, &left, rng)?;
            let f2 = attrs.propose(ctx, &q, &right, rng)?;
            let fr = settle(ctx, rng)?;
            ctx.prune()?;
            let back = attrs.base_mass(ctx, &p1, &all)? + repair_reverse_mass_except(ctx, skip)?;
            let fwd = (all.len() - 2) as f64 * half + f1 + f2 + fr;
            Ok(back - fwd)
        } else {
            self.last = MoveKind::Merge;
            let left = self.members[&p1].clone();
            let right = self.members[&p2].clone();
            let mut all = [left.as_slice(), right.as_slice()].concat();
            all.sort_unstable();
            self.reassign(ctx, &right, &p1, schema);
            let f = attrs.propose(ctx, &p1, &all, rng)?;
            let fr = settle(ctx, rng)?;
            ctx.prune()?;
            let back = (all.len() - 2) as f64 * half
                + attrs.base_mass(ctx, &p1, &left)?
                + attrs.base_mass(ctx, &p2, &right)?
                + repair_reverse_mass_except(ctx, skip)?;
            Ok(back - f - fr)
        }
    }

    fn refresh_attributes(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
        self.last = MoveKind::Attributes;
        let setup = self.setup()?;
        let p = self.assign[rng.gen_range(0..self.assign.len())].clone();
        let donors = self.members[&p].clone();
        let f = setup.attrs.propose(ctx, &p, &donors, rng)?;
        let fr = settle(ctx, rng)?;
        ctx.prune()?;
        let schema = &setup.attrs.schema;
        let back = setup.attrs.base_mass(ctx, &p, &donors)? + repair_reverse_mass_except(ctx, |v| schema.is_attribute(v))?;
        Ok(back - f - fr)
    }

    fn step_number(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
        self.last = MoveKind::Number;
        let numbers = &self.setup()?.numbers;
        let var = BasicVar::Number(numbers[rng.gen_range(0..numbers.len())]);
        let n = ctx
            .get(&var)
            .and_then(Value::as_nat)
            .ok_or_else(|| EngineError::Contract(format!("{} is not a natural number", ctx.model().show_var(&var))))?;
        let up = rng.gen::<bool>();
        if !up && n == 0 {
            return Ok(0.0);
        }
        ctx.set(var, Value::Nat(if up { n + 1 } else { n - 1 }));
        Ok(0.0)
    }
}

impl Default for SplitMerge {
    fn default() -> Self {
        SplitMerge::new(SplitMergeConfig::default())
    }
}

/// `w` with one variable's value replaced.
struct Replaced<'a> {
    w: &'a PartialWorld,
    var: &'a BasicVar,
    value: Value,
}

impl WorldView for Replaced<'_> {
    fn get(&self, var: &BasicVar) -> Option<&Value> {
        if var == self.var {
            Some(&self.value)
        } else {
            self.w.get(var)
        }
    }
}

/// Number of objects of `ty` maximizing the probability of `w`, which
/// represents `m` of them: the number prior, the ways of naming the
/// represented objects, and the factors of the variables reading it.
fn likeliest_number(model: &Model, w: &PartialWorld, ty: TypeId, m: u64) -> Result<u64, EngineError> {
    let var = BasicVar::Number(ty);
    let readers: Vec<BasicVar> = w
        .vars()
        .into_iter()
        .filter(|v| {
            evaluate_dependency(model, w, v)
                .map(|ev| ev.parents.contains(&var))
                .unwrap_or(false)
        })
        .collect();
    let score = |n: u64| -> Result<f64, EngineError> {
        let view = Replaced { w, var: &var, value: Value::Nat(n) };
        let mut s = evaluate_dependency(model, &view, &var)?
            .dist
            .map_or(f64::NEG_INFINITY, |d| d.log_mass(&Value::Nat(n)))
            + log_falling_factorial(n, m);
        for r in &readers {
            s += var_log_factor(model, &view, r)?;
        }
        Ok(s)
    };
    let mut best = (f64::NEG_INFINITY, m);
    for n in m..=m + 1_000 + 10 * m {
        let s = score(n)?;
        if s > best.0 {
            best = (s, n);
        } else if s < best.0 - 50.0 {
            break;
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(EngineError::Initial(format!(
            "no number of {} can hold {m} objects",
            model.type_name(ty)
        )));
    }
    Ok(best.1)
}

/// A state with one publication per group of citations, attributes copied
/// from the first reading of the group's first citation, and each number variable at its
/// likeliest value.
fn seeded_state(
    problem: &Problem<'_>,
    schema: &CitationSchema,
    seeded: &AttributeProposal,
    numbers: &[TypeId],
    groups: &[Vec<usize>],
    rng: &mut ChainRng,
) -> Result<PartialWorld, EngineError> {
    let model = problem.model;
    let mut w = PartialWorld::new();
    for &ty in numbers {
        w.set_identifier_mode(ty);
    }
    let graph = ChildGraph::default();
    let mut patch = WorldPatch::new();
    {
        let mut ctx = ProposalCtx::new(problem, &w, &graph, &mut patch);
        for &ty in numbers {
            ctx.set(BasicVar::Number(ty), Value::Nat(1_000_000));
        }
        for (v, val) in &problem.evidence {
            ctx.set(v.clone(), val.clone());
        }
        for g in groups {
            let p = Value::Obj(ObjRef::Ident(ctx.fresh_ident(schema.publication)));
            for &i in g {
                ctx.set(schema.pub_cited_var(i), p.clone());
            }
            seeded.propose(&mut ctx, &p, &g[..1], rng)?;
        }
        settle(&mut ctx, rng)?;
    }
    patch.apply(&mut w);
    for &ty in numbers {
        let m = w.ident_count(ty) as u64;
        let best = likeliest_number(model, &w, ty, m)?;
        w.insert(BasicVar::Number(ty), Value::Nat(best));
    }
    let lp = log_prob(model, &w)?;
    if !lp.is_finite() {
        let culprit = w
            .vars()
            .into_iter()
            .find(|v| var_log_factor(model, &w, v).map_or(true, |f| f == f64::NEG_INFINITY))
            .map(|v| format!("{} = {}", model.show_var(&v), model.show_value(w.get(&v).unwrap())))
            .unwrap_or_else(|| "the number of objects".into());
        return Err(EngineError::Initial(format!(
            "copying attributes from the citation texts gives a state of probability zero at {culprit}"
        )));
    }
    Ok(w)
}

impl Proposer for SplitMerge {
    /// Citations with the same text start on a shared publication whose
    /// attributes are copied from that text. If that is impossible, all
    /// citations start on one publication.
    fn initial_state(&mut self, problem: &Problem<'_>, rng: &mut ChainRng) -> Result<PartialWorld, EngineError> {
        let model = problem.model;
        let schema = CitationSchema::detect(model)?;
        let n = schema.citation_count(model);
        if n == 0 {
            return Err(EngineError::Config("citation model has no citations".into()));
        }
        let texts: Vec<Option<String>> = (0..n)
            .map(|i| {
                problem
                    .evidence_value(&schema.text_var(i))
                    .and_then(Value::as_str)
                    .map(str::to_owned)
            })
            .collect();
        let canopies = build_canopies(
            &texts.iter().map(|t| t.clone().unwrap_or_default()).collect::<Vec<_>>(),
            self.config.theta,
        );
        let seeded = AttributeProposal::with_extracted(
            schema.clone(),
            0.0,
            texts
                .iter()
                .map(|t| t.as_deref().map(|t| schema.readings(t).swap_remove(0)).unwrap_or_default())
                .collect(),
        );
        let numbers: Vec<TypeId> = model.user_types().filter(|t| model.number_statement(*t).is_some()).collect();

        let mut by_text: Vec<Vec<usize>> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, t) in texts.iter().enumerate() {
            let key = t.as_deref().unwrap_or("").split_whitespace().collect::<Vec<_>>().join(" ");
            match seen.get(&key) {
                Some(&g) => by_text[g].push(i),
                None => {
                    seen.insert(key, by_text.len());
                    by_text.push(vec![i]);
                }
            }
        }
        let w = match seeded_state(problem, &schema, &seeded, &numbers, &by_text, rng) {
            Ok(w) => w,
            Err(first) => seeded_state(problem, &schema, &seeded, &numbers, &[(0..n).collect()], rng)
                .map_err(|_| first)?,
        };
        self.index(&w, &schema, n)?;
        self.setup = Some(Setup {
            attrs: AttributeProposal::new(schema, self.config.rho, &texts),
            canopies,
            numbers,
        });
        Ok(w)
    }

    fn propose(&mut self, ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
        self.pending.clear();
        let has_numbers = !self.setup()?.numbers.is_empty();
        let u: f64 = rng.gen();
        let r = if has_numbers && u < self.config.number_weight {
            self.step_number(ctx, rng)
        } else if u < self.config.number_weight + self.config.attribute_weight {
            self.refresh_attributes(ctx, rng)
        } else {
            self.split_or_merge(ctx, rng)
        };
        self.moves.entry(self.last).or_insert((0, 0)).0 += 1;
        r
    }

    fn observe(&mut self, accepted: bool) {
        if !accepted {
            self.pending.clear();
            return;
        }
        self.moves.entry(self.last).or_insert((0, 0)).1 += 1;
        for (c, to) in std::mem::take(&mut self.pending) {
            let from = std::mem::replace(&mut self.assign[c], to.clone());
            if let Some(list) = self.members.get_mut(&from) {
                list.retain(|x| *x != c);
                if list.is_empty() {
                    self.members.remove(&from);
                }
            }
            let list = self.members.entry(to).or_default();
            let pos = list.binary_search(&c).unwrap_or_else(|e| e);
            list.insert(pos, c);
        }
    }
}
