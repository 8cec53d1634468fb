//! Proposal distributions: a model-generic single-variable resampler and a
//! split-merge move for citation matching, plus the sampling helpers they
//! share.

mod attributes;
mod canopy;
mod generic;
mod splitmerge;

pub use attributes::{segment_citation, AttributeProposal, AuthorSchema, CitationSchema, Extracted};
pub use canopy::{build_canopies, jaccard, tokenize, Canopies};
pub use generic::GenericResampler;
pub use splitmerge::{MoveKind, SplitMerge, SplitMergeConfig};

use std::collections::HashMap;

use rand::Rng;

use crate::engine::{ChainRng, EngineError, ProposalCtx};
use crate::model::{evaluate_dependency, Dist};
use crate::value::{BasicVar, Ident, ObjRef, TypeId, Value};
use crate::world::WorldState;

/// `(type, guaranteed count, number)` when `dist` draws objects of a type
/// represented by identifiers.
fn ident_uniform(ctx: &ProposalCtx<'_, '_>, dist: &Dist) -> Option<(TypeId, u32, u64)> {
    match *dist {
        Dist::UniformObjects { ty, guaranteed, number } if ctx.base.is_identifier_mode(ty) => {
            Some((ty, guaranteed, number))
        }
        _ => None,
    }
}

/// Identifiers of `ty` held as a value by some variable of the patched
/// state, not counting one holding by `current`. Sorted.
pub fn held_idents(ctx: &mut ProposalCtx<'_, '_>, ty: TypeId, current: Option<&Value>) -> Vec<Ident> {
    let own = current.and_then(Value::as_ident);
    let ov = ctx.world();
    let mut ids: Vec<Ident> = ov
        .idents(ty)
        .into_iter()
        .filter(|id| ov.ident_holders(*id) > (own == Some(*id)) as u32)
        .collect();
    ids.sort();
    ids
}

struct Choices {
    guaranteed: u64,
    held: Vec<Ident>,
    fresh: u64,
}

impl Choices {
    fn total(&self) -> u64 {
        self.guaranteed + self.held.len() as u64 + self.fresh
    }
}

fn choices(
    ctx: &mut ProposalCtx<'_, '_>,
    ty: TypeId,
    guaranteed: u32,
    number: u64,
    current: Option<&Value>,
    reuse: bool,
) -> Choices {
    let held = if reuse { held_idents(ctx, ty, current) } else { Vec::new() };
    let fresh = number.saturating_sub(held.len() as u64);
    Choices {
        guaranteed: guaranteed as u64,
        held,
        fresh,
    }
}

/// Draws a value from `dist`. For object types represented by identifiers
/// the choice is among guaranteed objects, identifiers already held by
/// other variables (only when `reuse`), and one fresh identifier standing
/// for any object not yet represented. Returns the value and the log mass
/// of the choice.
pub fn draw(
    ctx: &mut ProposalCtx<'_, '_>,
    dist: &Dist,
    current: Option<&Value>,
    reuse: bool,
    rng: &mut ChainRng,
) -> (Value, f64) {
    let Some((ty, g, n)) = ident_uniform(ctx, dist) else {
        let v = dist.sample(rng);
        let m = dist.log_mass(&v);
        return (v, m);
    };
    let c = choices(ctx, ty, g, n, current, reuse);
    let z = c.total();
    if z == 0 {
        return (Value::Null, 0.0);
    }
    let u = rng.gen_range(0..z);
    let zf = z as f64;
    if u < c.guaranteed {
        (
            Value::Obj(ObjRef::Guaranteed { ty, index: u as u32 }),
            -zf.ln(),
        )
    } else if u < c.guaranteed + c.held.len() as u64 {
        (Value::Obj(ObjRef::Ident(c.held[(u - c.guaranteed) as usize])), -zf.ln())
    } else {
        let id = ctx.fresh_ident(ty);
        (Value::Obj(ObjRef::Ident(id)), (c.fresh as f64 / zf).ln())
    }
}

/// Log mass [`draw`] assigns to `value` in the patched state.
pub fn choice_log_mass(
    ctx: &mut ProposalCtx<'_, '_>,
    dist: &Dist,
    value: &Value,
    current: Option<&Value>,
    reuse: bool,
) -> f64 {
    let Some((ty, g, n)) = ident_uniform(ctx, dist) else {
        return dist.log_mass(value);
    };
    let c = choices(ctx, ty, g, n, current, reuse);
    let z = c.total();
    let ninf = f64::NEG_INFINITY;
    if z == 0 {
        return if value.is_null() { 0.0 } else { ninf };
    }
    let zf = z as f64;
    match value.as_obj() {
        Some(ObjRef::Guaranteed { ty: t, index }) if t == ty && (index as u64) < c.guaranteed => -zf.ln(),
        Some(ObjRef::Ident(id)) if id.ty == ty => {
            if c.held.binary_search(&id).is_ok() {
                -zf.ln()
            } else if c.fresh > 0 {
                (c.fresh as f64 / zf).ln()
            } else {
                ninf
            }
        }
        _ => ninf,
    }
}

/// Instantiates `var` if needed, first instantiating whatever it reads.
/// Returns the log mass of everything sampled.
fn support(ctx: &mut ProposalCtx<'_, '_>, var: &BasicVar, rng: &mut ChainRng, depth: usize) -> Result<f64, EngineError> {
    if depth > 10_000 {
        return Err(EngineError::Contract(format!(
            "dependency chase did not terminate at {}",
            ctx.model().show_var(var)
        )));
    }
    let mut mass = 0.0;
    loop {
        let ev = evaluate_dependency(ctx.model(), &*ctx, var)?;
        match ev.dist {
            Some(d) => {
                if !ctx.contains(var) {
                    let (v, m) = draw(ctx, &d, None, false, rng);
                    ctx.set(var.clone(), v);
                    mass += m;
                }
                return Ok(mass);
            }
            None => {
                let missing = ev.missing().expect("unsupported evaluation ends at a missing variable").clone();
                mass += support(ctx, &missing, rng, depth + 1)?;
            }
        }
    }
}

/// Prunes the patched state and forward-samples every variable it needs
/// but lacks, until it is self-supporting and instantiates the evidence
/// and queries. New objects always get fresh identifiers. Returns the log
/// mass of the sampled values.
pub fn repair(ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
    let mut mass = 0.0;
    for _ in 0..10_000 {
        let a = ctx.analysis()?;
        if a.unsupported.is_empty() && a.missing.is_empty() {
            return Ok(mass);
        }
        let todo: Vec<BasicVar> = a.missing.iter().chain(&a.unsupported).cloned().collect();
        for x in todo {
            mass += support(ctx, &x, rng, 0)?;
        }
    }
    Err(EngineError::Contract("state repair did not converge".into()))
}

/// Log mass with which [`repair`], run from the patched state back towards
/// the base, would regenerate the base variables the patch removed. `-inf`
/// when it cannot.
pub fn repair_reverse_mass(ctx: &mut ProposalCtx<'_, '_>) -> Result<f64, EngineError> {
    repair_reverse_mass_except(ctx, |_| false)
}

/// [`repair_reverse_mass`] ignoring removed variables for which `skip`
/// holds, for proposers that account for those themselves.
pub fn repair_reverse_mass_except(
    ctx: &mut ProposalCtx<'_, '_>,
    skip: impl Fn(&BasicVar) -> bool,
) -> Result<f64, EngineError> {
    let model = ctx.model();
    let removed = ctx.removed_base();
    let mut fresh_uses: HashMap<Ident, u32> = HashMap::new();
    let mut total = 0.0;
    for (var, val) in removed.iter().filter(|(v, _)| !skip(v)) {
        let f = ctx.graph.factor(var).expect("child graph mirrors the base state");
        let Some(id) = val.as_ident().filter(|id| ctx.base.is_identifier_mode(id.ty)) else {
            total += f;
            continue;
        };
        let ev = evaluate_dependency(model, ctx.base, var)?;
        match ev.dist {
            Some(Dist::UniformObjects { number, .. }) => {
                *fresh_uses.entry(id).or_insert(0) += 1;
                if ctx.world().ident_refs(id) > 0 {
                    return Ok(f64::NEG_INFINITY);
                }
                total += f + (number as f64).ln();
            }
            _ => total += f,
        }
    }
    if fresh_uses.values().any(|&c| c > 1) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(total)
}

/// Recomputes deterministic variables downstream of the patch whose value
/// went stale. Returns whether anything changed.
pub fn refresh_deterministic(ctx: &mut ProposalCtx<'_, '_>) -> Result<bool, EngineError> {
    let model = ctx.model();
    let mut work: Vec<BasicVar> = ctx.patch().changed().map(|(v, _)| v.clone()).collect();
    let mut changed = false;
    let mut budget = 100_000usize;
    while let Some(x) = work.pop() {
        let graph = ctx.graph;
        for child in graph.children(&x).cloned().collect::<Vec<_>>() {
            if !ctx.contains(&child) {
                continue;
            }
            budget = budget
                .checked_sub(1)
                .ok_or_else(|| EngineError::Contract("deterministic refresh did not converge".into()))?;
            if let Some(Dist::Point(v)) = evaluate_dependency(model, &*ctx, &child)?.dist {
                if ctx.get(&child) != Some(&v) {
                    ctx.set(child.clone(), v);
                    changed = true;
                    work.push(child);
                }
            }
        }
    }
    Ok(changed)
}

/// Instantiates what the changed variables and their children read but
/// lack, without pruning first. Values just set by a proposer stay in place
/// even when nothing reads them yet.
pub fn support_changed(ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
    let model = ctx.model();
    let graph = ctx.graph;
    let mut todo: Vec<BasicVar> = Vec::new();
    for (v, _) in ctx.patch().changed() {
        todo.push(v.clone());
        todo.extend(graph.children(v).cloned());
    }
    let mut mass = 0.0;
    for x in todo {
        if ctx.contains(&x) && !evaluate_dependency(model, &*ctx, &x)?.is_supported() {
            mass += support(ctx, &x, rng, 0)?;
        }
    }
    Ok(mass)
}

/// Alternates [`refresh_deterministic`], [`support_changed`] and [`repair`]
/// until the patched state stops changing. Returns the log mass of what was
/// sampled.
pub fn settle(ctx: &mut ProposalCtx<'_, '_>, rng: &mut ChainRng) -> Result<f64, EngineError> {
    let mut mass = 0.0;
    for _ in 0..1_000 {
        let before = ctx.patch().ops;
        refresh_deterministic(ctx)?;
        mass += support_changed(ctx, rng)?;
        mass += repair(ctx, rng)?;
        let after = ctx.patch().ops;
        if before.sets == after.sets && before.removes == after.removes {
            return Ok(mass);
        }
    }
    Err(EngineError::Contract("state did not settle".into()))
}
