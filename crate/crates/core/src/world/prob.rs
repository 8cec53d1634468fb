use std::collections::{BTreeMap, HashSet};

use indexmap::IndexSet;
use thiserror::Error;

use super::{Overlay, PartialWorld, WorldState};
use crate::model::{evaluate_dependency, Model, ModelError};
use crate::value::{BasicVar, Ident, ObjRef, TypeId, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("world does not support {0}")]
    NotSelfSupporting(String),
    #[error("identifier {0} is not grounded; worlds with ungrounded identifiers are not supported")]
    Ungrounded(String),
    #[error("world uses object identifiers; use the abstract probability")]
    IdentifiersPresent,
    #[error("type {0} uses identifiers but its number variable is not instantiated")]
    NumberMissing(String),
    #[error("{var} has ill-typed value {value}")]
    TypeMismatch { var: String, value: String },
    #[error("type {0} mixes identifiers and numbered objects")]
    MixedModes(String),
}

/// `ln(n! / (n-m)!)`, or `-inf` when `m > n`.
pub fn log_falling_factorial(n: u64, m: u64) -> f64 {
    if m > n {
        return f64::NEG_INFINITY;
    }
    ((n - m + 1)..=n).map(|k| (k as f64).ln()).sum()
}

/// Instantiated variables whose dependency the world cannot evaluate.
pub fn unsupported_vars<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<Vec<BasicVar>, ModelError> {
    let mut out = Vec::new();
    for v in w.vars() {
        if !evaluate_dependency(model, w, &v)?.is_supported() {
            out.push(v);
        }
    }
    Ok(out)
}

pub fn is_self_supporting<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<bool, ModelError> {
    Ok(unsupported_vars(model, w)?.is_empty())
}

/// The instantiated members of `core` together with all their transitive
/// active parents.
pub fn ancestor_closure<W: WorldState + ?Sized>(
    model: &Model,
    w: &W,
    core: &[BasicVar],
) -> Result<IndexSet<BasicVar>, WorldError> {
    let mut seen: IndexSet<BasicVar> = IndexSet::new();
    let mut stack: Vec<BasicVar> = core.iter().filter(|v| w.get(v).is_some()).cloned().collect();
    while let Some(v) = stack.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        let ev = evaluate_dependency(model, w, &v)?;
        if !ev.is_supported() {
            return Err(WorldError::NotSelfSupporting(model.show_var(&v)));
        }
        for p in ev.parents {
            if !seen.contains(&p) {
                stack.push(p);
            }
        }
    }
    Ok(seen)
}

/// True iff every instantiated variable is in `core` or an active ancestor
/// of an instantiated core variable.
pub fn is_minimal_beyond<W: WorldState + ?Sized>(model: &Model, w: &W, core: &[BasicVar]) -> Result<bool, WorldError> {
    if let Some(v) = unsupported_vars(model, w)?.first() {
        return Err(WorldError::NotSelfSupporting(model.show_var(v)));
    }
    Ok(ancestor_closure(model, w, core)?.len() == w.len())
}

/// Removes every variable that is neither in `core` nor an active ancestor
/// of it. Returns the removed variables.
pub fn prune_to_minimal(model: &Model, w: &mut Overlay<'_>, core: &[BasicVar]) -> Result<Vec<BasicVar>, WorldError> {
    let keep = ancestor_closure(model, w, core)?;
    let mut removed = Vec::new();
    for v in w.vars() {
        if !keep.contains(&v) {
            w.remove(&v);
            removed.push(v);
        }
    }
    Ok(removed)
}

/// Sum of the per-variable log factors, treating identifiers like ordinary
/// objects.
pub fn log_prob_factors<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<f64, WorldError> {
    let mut total = 0.0;
    for v in w.vars() {
        let ev = evaluate_dependency(model, w, &v)?;
        let Some(d) = ev.dist else {
            return Err(WorldError::NotSelfSupporting(model.show_var(&v)));
        };
        total += d.log_mass(w.get(&v).unwrap());
    }
    Ok(total)
}

/// Log probability of a concrete self-supporting world.
pub fn log_prob_concrete<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<f64, WorldError> {
    if !w.ident_types().is_empty() {
        return Err(WorldError::IdentifiersPresent);
    }
    log_prob_factors(model, w)
}

/// Identifiers in grounding order, each with the variable whose value it is.
/// Fails with the first identifier that cannot be grounded.
pub fn grounding_order<W: WorldState + ?Sized>(w: &W) -> Result<Vec<(Ident, BasicVar)>, Ident> {
    let vars = w.vars();
    let mut grounded: HashSet<Ident> = HashSet::new();
    let mut order = Vec::new();
    loop {
        let mut progress = false;
        for v in &vars {
            let Some(id) = w.get(v).and_then(Value::as_ident) else { continue };
            if grounded.contains(&id) {
                continue;
            }
            if v.arg_idents().all(|a| grounded.contains(&a)) {
                grounded.insert(id);
                order.push((id, v.clone()));
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    for ty in w.ident_types() {
        let mut ids = w.idents(ty);
        ids.sort();
        if let Some(id) = ids.into_iter().find(|i| !grounded.contains(i)) {
            return Err(id);
        }
    }
    Ok(order)
}

/// Log probability of a (possibly abstract) self-supporting world: the
/// factor product plus `ln(n!/(n-m)!)` for every type with `m` identifiers
/// and `n` objects.
pub fn log_prob_abstract<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<f64, WorldError> {
    if let Err(id) = grounding_order(w) {
        return Err(WorldError::Ungrounded(model.show_ident(id)));
    }
    let mut total = log_prob_factors(model, w)?;
    for ty in w.ident_types() {
        let n = w
            .get(&BasicVar::Number(ty))
            .and_then(Value::as_nat)
            .ok_or_else(|| WorldError::NumberMissing(model.type_name(ty).to_string()))?;
        total += log_falling_factorial(n, w.ident_count(ty) as u64);
    }
    Ok(total)
}

/// Log probability of any self-supporting world, concrete or abstract.
pub fn log_prob<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<f64, WorldError> {
    log_prob_abstract(model, w)
}

/// An injective map from identifiers to numbered objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentifierMapping(pub BTreeMap<Ident, ObjRef>);

impl IdentifierMapping {
    pub fn value(&self, v: &Value) -> Value {
        match v.as_ident() {
            Some(id) => Value::Obj(self.0.get(&id).copied().unwrap_or(ObjRef::Ident(id))),
            None => v.clone(),
        }
    }

    pub fn var(&self, v: &BasicVar) -> BasicVar {
        match v {
            BasicVar::Number(_) => v.clone(),
            BasicVar::App(f, args) => BasicVar::app(*f, args.iter().map(|a| self.value(a)).collect::<Vec<_>>()),
        }
    }

    pub fn world(&self, w: &PartialWorld) -> PartialWorld {
        PartialWorld::from_pairs(w.iter().map(|(k, v)| (self.var(k), self.value(v))))
    }
}

/// Every concrete version of `w`: one per injective mapping of its
/// identifiers into the numbered objects `1..=#τ` of their type.
pub fn concrete_versions(w: &PartialWorld) -> Result<Vec<(IdentifierMapping, PartialWorld)>, WorldError> {
    let mut per_type: Vec<(TypeId, Vec<Ident>, u64)> = Vec::new();
    for ty in w.ident_types() {
        let n = w
            .get(&BasicVar::Number(ty))
            .and_then(Value::as_nat)
            .ok_or_else(|| WorldError::NumberMissing(format!("T{}", ty.0)))?;
        let mut ids = w.idents(ty);
        ids.sort();
        per_type.push((ty, ids, n));
    }
    let mut maps = vec![BTreeMap::new()];
    for (ty, ids, n) in &per_type {
        for id in ids {
            let mut next = Vec::new();
            for m in &maps {
                let used: HashSet<u32> = m
                    .values()
                    .filter_map(|o: &ObjRef| match o {
                        ObjRef::Numbered { ty: t, index } if t == ty => Some(*index),
                        _ => None,
                    })
                    .collect();
                for index in 1..=*n as u32 {
                    if !used.contains(&index) {
                        let mut m2 = m.clone();
                        m2.insert(*id, ObjRef::Numbered { ty: *ty, index });
                        next.push(m2);
                    }
                }
            }
            maps = next;
        }
    }
    Ok(maps
        .into_iter()
        .map(|m| {
            let h = IdentifierMapping(m);
            let cw = h.world(w);
            (h, cw)
        })
        .collect())
}

/// Sorted `var = value` lines.
pub fn debug_dump<W: WorldState + ?Sized>(model: &Model, w: &W) -> String {
    let mut lines: Vec<String> = w
        .vars()
        .iter()
        .map(|v| format!("{} = {}", model.show_var(v), model.show_value(w.get(v).unwrap())))
        .collect();
    lines.sort();
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

/// Checks value types against function signatures and that no type mixes
/// identifiers with numbered objects.
pub fn validate<W: WorldState + ?Sized>(model: &Model, w: &W) -> Result<(), WorldError> {
    let mut numbered: HashSet<TypeId> = HashSet::new();
    let mut idents: HashSet<TypeId> = HashSet::new();
    let mut note = |v: &Value| match v.as_obj() {
        Some(ObjRef::Numbered { ty, .. }) => {
            numbered.insert(ty);
        }
        Some(ObjRef::Ident(id)) => {
            idents.insert(id.ty);
        }
        _ => {}
    };
    for var in w.vars() {
        let value = w.get(&var).unwrap();
        let bad = || WorldError::TypeMismatch {
            var: model.show_var(&var),
            value: model.show_value(value),
        };
        match &var {
            BasicVar::Number(_) => {
                if value.as_nat().is_none() {
                    return Err(bad());
                }
            }
            BasicVar::App(f, args) => {
                let decl = model.func(*f);
                if args.len() != decl.arg_types.len()
                    || args.iter().zip(&decl.arg_types).any(|(a, t)| a.ty() != Some(*t))
                    || value.ty().is_some_and(|t| t != decl.ret)
                {
                    return Err(bad());
                }
                for a in args.iter() {
                    note(a);
                }
            }
        }
        note(value);
    }
    if let Some(t) = numbered.intersection(&idents).next() {
        return Err(WorldError::MixedModes(model.type_name(*t).to_string()));
    }
    Ok(())
}
