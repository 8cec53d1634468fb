//! Partial instantiations: the MCMC state, its difference layer, and the
//! probability and structure queries defined over them.

mod patch;
mod prob;

pub use patch::{Overlay, PatchOps, WorldPatch};
pub use prob::{
    ancestor_closure, concrete_versions, debug_dump, grounding_order, is_minimal_beyond, is_self_supporting,
    log_falling_factorial, log_prob, log_prob_abstract, log_prob_concrete, log_prob_factors, prune_to_minimal,
    unsupported_vars, validate, IdentifierMapping, WorldError,
};

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::model::WorldView;
use crate::value::{BasicVar, Ident, TypeId, Value};

/// Read access to a world together with its identifier pools. Implemented
/// by [`PartialWorld`] and by a patched view of one.
pub trait WorldState: WorldView {
    /// Instantiated variables. Order is deterministic but unspecified.
    fn vars(&self) -> Vec<BasicVar>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Number of distinct identifiers of `ty` in use.
    fn ident_count(&self, ty: TypeId) -> usize;
    /// Types with at least one identifier in use, ascending.
    fn ident_types(&self) -> Vec<TypeId>;
    /// Identifiers of `ty` in use.
    fn idents(&self, ty: TypeId) -> Vec<Ident>;
}

pub(crate) fn value_ident(v: &Value) -> Option<Ident> {
    v.as_ident()
}

/// A (possibly abstract) partial instantiation.
///
/// Identifier pools are maintained by reference counting: an identifier is
/// in its type's pool exactly while it occurs in some instantiated variable
/// or value.
#[derive(Clone, Debug, Default)]
pub struct PartialWorld {
    assign: IndexMap<BasicVar, Value>,
    refs: IndexMap<Ident, u32>,
    holders: IndexMap<Ident, u32>,
    counts: IndexMap<TypeId, usize>,
    ident_mode: BTreeSet<TypeId>,
    next_token: u32,
}

impl PartialEq for PartialWorld {
    fn eq(&self, other: &Self) -> bool {
        self.assign.len() == other.assign.len()
            && self.assign.iter().all(|(k, v)| other.assign.get(k) == Some(v))
    }
}

impl PartialWorld {
    pub fn new() -> PartialWorld {
        PartialWorld::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (BasicVar, Value)>) -> PartialWorld {
        let mut w = PartialWorld::new();
        for (k, v) in pairs {
            w.insert(k, v);
        }
        w
    }

    /// Marks `ty` as represented by identifiers rather than numbered objects.
    pub fn set_identifier_mode(&mut self, ty: TypeId) {
        self.ident_mode.insert(ty);
    }

    pub fn is_identifier_mode(&self, ty: TypeId) -> bool {
        self.ident_mode.contains(&ty)
    }

    pub fn identifier_types(&self) -> impl Iterator<Item = TypeId> + '_ {
        self.ident_mode.iter().copied()
    }

    pub fn get(&self, var: &BasicVar) -> Option<&Value> {
        self.assign.get(var)
    }

    pub fn contains(&self, var: &BasicVar) -> bool {
        self.assign.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasicVar, &Value)> {
        self.assign.iter()
    }

    /// Mints an identifier not used before in this world.
    pub fn fresh_ident(&mut self, ty: TypeId) -> Ident {
        let token = self.next_token;
        self.next_token += 1;
        Ident { ty, token }
    }

    pub(crate) fn next_token(&self) -> u32 {
        self.next_token
    }

    pub(crate) fn set_next_token(&mut self, t: u32) {
        self.next_token = self.next_token.max(t);
    }

    /// The `i`-th instantiated variable in storage order.
    pub fn get_index(&self, i: usize) -> Option<(&BasicVar, &Value)> {
        self.assign.get_index(i)
    }

    /// Number of variables whose value is `id`.
    pub fn ident_holders(&self, id: Ident) -> u32 {
        self.holders.get(&id).copied().unwrap_or(0)
    }

    fn hold(&mut self, id: Ident, up: bool) {
        if up {
            *self.holders.entry(id).or_insert(0) += 1;
        } else {
            let h = self.holders.get_mut(&id).expect("identifier holder count underflow");
            *h -= 1;
            if *h == 0 {
                self.holders.swap_remove(&id);
            }
        }
    }

    /// Reference count of an identifier (0 when not in the pool).
    pub fn ident_refs(&self, id: Ident) -> u32 {
        self.refs.get(&id).copied().unwrap_or(0)
    }

    fn bump(&mut self, id: Ident, up: bool) {
        if up {
            let r = self.refs.entry(id).or_insert(0);
            *r += 1;
            if *r == 1 {
                *self.counts.entry(id.ty).or_insert(0) += 1;
            }
        } else {
            let r = self.refs.get_mut(&id).expect("identifier reference count underflow");
            *r -= 1;
            if *r == 0 {
                self.refs.swap_remove(&id);
                *self.counts.get_mut(&id.ty).unwrap() -= 1;
            }
        }
    }

    /// Instantiates `var`, returning its previous value.
    pub fn insert(&mut self, var: BasicVar, value: Value) -> Option<Value> {
        if let Some(id) = value_ident(&value) {
            self.bump(id, true);
            self.hold(id, true);
        }
        let fresh = !self.assign.contains_key(&var);
        if fresh {
            for id in var.arg_idents().collect::<Vec<_>>() {
                self.bump(id, true);
            }
        }
        let old = self.assign.insert(var, value);
        if let Some(id) = old.as_ref().and_then(value_ident) {
            self.bump(id, false);
            self.hold(id, false);
        }
        old
    }

    /// Uninstantiates `var`, returning its value.
    pub fn remove(&mut self, var: &BasicVar) -> Option<Value> {
        let old = self.assign.swap_remove(var)?;
        if let Some(id) = value_ident(&old) {
            self.bump(id, false);
            self.hold(id, false);
        }
        for id in var.arg_idents().collect::<Vec<_>>() {
            self.bump(id, false);
        }
        Some(old)
    }
}

impl WorldView for PartialWorld {
    fn get(&self, var: &BasicVar) -> Option<&Value> {
        self.assign.get(var)
    }
}

impl WorldState for PartialWorld {
    fn vars(&self) -> Vec<BasicVar> {
        self.assign.keys().cloned().collect()
    }

    fn len(&self) -> usize {
        self.assign.len()
    }

    fn ident_count(&self, ty: TypeId) -> usize {
        self.counts.get(&ty).copied().unwrap_or(0)
    }

    fn ident_types(&self) -> Vec<TypeId> {
        let mut v: Vec<TypeId> = self.counts.iter().filter(|(_, c)| **c > 0).map(|(t, _)| *t).collect();
        v.sort();
        v
    }

    fn idents(&self, ty: TypeId) -> Vec<Ident> {
        self.refs.keys().filter(|i| i.ty == ty).copied().collect()
    }
}

/// Forward-samples `targets` and everything they read, in a world whose
/// unknown objects are numbered. Variables in `fixed` take the given values
/// instead of being sampled.
pub fn forward_sample<R: rand::Rng + ?Sized>(
    model: &crate::model::Model,
    targets: &[BasicVar],
    fixed: &[(BasicVar, Value)],
    rng: &mut R,
) -> Result<PartialWorld, crate::model::ModelError> {
    let mut w = PartialWorld::from_pairs(fixed.iter().cloned());
    for t in targets {
        let mut stack = vec![t.clone()];
        while let Some(v) = stack.last().cloned() {
            if w.contains(&v) {
                stack.pop();
                continue;
            }
            let ev = crate::model::evaluate_dependency(model, &w, &v)?;
            match ev.dist {
                Some(d) => {
                    w.insert(v, d.sample(rng));
                    stack.pop();
                }
                None => stack.push(ev.missing().expect("unsupported evaluation ends at a missing variable").clone()),
            }
        }
    }
    Ok(w)
}
