use indexmap::{IndexMap, IndexSet};

use super::{value_ident, PartialWorld, WorldState};
use crate::model::WorldView;
use crate::value::{BasicVar, Ident, TypeId, Value};

/// Operation counters of a patch, for checking that apply and discard cost
/// is proportional to the size of the change set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PatchOps {
    pub sets: u64,
    pub removes: u64,
    /// Entries written to the base by `apply`.
    pub applied: u64,
    /// Entries dropped by `discard`.
    pub discarded: u64,
}

/// A difference layer over a [`PartialWorld`]: changed and newly added
/// instantiations, removed ones, and the resulting identifier pool deltas.
#[derive(Clone, Debug, Default)]
pub struct WorldPatch {
    changed: IndexMap<BasicVar, Value>,
    removed: IndexSet<BasicVar>,
    ref_delta: IndexMap<Ident, i64>,
    holder_delta: IndexMap<Ident, i64>,
    count_delta: IndexMap<TypeId, i64>,
    next_token: u32,
    pub ops: PatchOps,
}

impl WorldPatch {
    pub fn new() -> WorldPatch {
        WorldPatch::default()
    }

    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.removed.is_empty()
    }

    /// Variables set by the patch (new or changed), in first-set order.
    pub fn changed(&self) -> impl Iterator<Item = (&BasicVar, &Value)> {
        self.changed.iter()
    }

    /// Base variables the patch uninstantiates.
    pub fn removed(&self) -> impl Iterator<Item = &BasicVar> {
        self.removed.iter()
    }

    pub fn change_count(&self) -> usize {
        self.changed.len() + self.removed.len()
    }

    /// Binds the patch to `base` for reading and writing.
    pub fn over<'a>(&'a mut self, base: &'a PartialWorld) -> Overlay<'a> {
        Overlay { base, patch: self }
    }

    /// Writes the patch into `base` and clears it.
    pub fn apply(&mut self, base: &mut PartialWorld) {
        self.ops.applied += self.change_count() as u64;
        for var in self.removed.drain(..) {
            base.remove(&var);
        }
        for (var, value) in self.changed.drain(..) {
            base.insert(var, value);
        }
        base.set_next_token(self.next_token);
        self.reset();
    }

    /// Drops all pending changes.
    pub fn discard(&mut self) {
        self.ops.discarded += self.change_count() as u64;
        self.changed.clear();
        self.removed.clear();
        self.reset();
    }

    fn reset(&mut self) {
        self.ref_delta.clear();
        self.holder_delta.clear();
        self.count_delta.clear();
        self.next_token = 0;
    }

    fn bump(&mut self, base: &PartialWorld, id: Ident, d: i64) {
        let before = base.ident_refs(id) as i64 + self.ref_delta.get(&id).copied().unwrap_or(0);
        let after = before + d;
        debug_assert!(after >= 0);
        *self.ref_delta.entry(id).or_insert(0) += d;
        if before == 0 && after > 0 {
            *self.count_delta.entry(id.ty).or_insert(0) += 1;
        } else if before > 0 && after == 0 {
            *self.count_delta.entry(id.ty).or_insert(0) -= 1;
        }
    }

    /// Identifiers whose reference or holder counts the patch changed.
    pub fn touched_idents(&self) -> impl Iterator<Item = Ident> + '_ {
        self.ref_delta.keys().chain(self.holder_delta.keys()).copied()
    }

    pub(crate) fn get<'a>(&'a self, base: &'a PartialWorld, var: &BasicVar) -> Option<&'a Value> {
        if let Some(v) = self.changed.get(var) {
            return Some(v);
        }
        if self.removed.contains(var) {
            return None;
        }
        base.get(var)
    }
}

/// A patch bound to its base world. Reads see the patched state; writes go
/// to the patch only.
pub struct Overlay<'a> {
    pub base: &'a PartialWorld,
    pub patch: &'a mut WorldPatch,
}

impl<'a> Overlay<'a> {
    pub fn get(&self, var: &BasicVar) -> Option<&Value> {
        self.patch.get(self.base, var)
    }

    pub fn contains(&self, var: &BasicVar) -> bool {
        self.get(var).is_some()
    }

    pub fn set(&mut self, var: BasicVar, value: Value) {
        self.patch.ops.sets += 1;
        let old = self.get(&var).cloned();
        if old.as_ref() == Some(&value) {
            return;
        }
        let base = self.base;
        if let Some(id) = old.as_ref().and_then(value_ident) {
            self.patch.bump(base, id, -1);
            *self.patch.holder_delta.entry(id).or_insert(0) -= 1;
        }
        if let Some(id) = value_ident(&value) {
            self.patch.bump(base, id, 1);
            *self.patch.holder_delta.entry(id).or_insert(0) += 1;
        }
        if old.is_none() {
            for id in var.arg_idents().collect::<Vec<_>>() {
                self.patch.bump(base, id, 1);
            }
        }
        self.patch.removed.swap_remove(&var);
        if base.get(&var) == Some(&value) {
            self.patch.changed.swap_remove(&var);
        } else {
            self.patch.changed.insert(var, value);
        }
    }

    pub fn remove(&mut self, var: &BasicVar) -> Option<Value> {
        self.patch.ops.removes += 1;
        let old = self.get(var).cloned()?;
        let base = self.base;
        if let Some(id) = value_ident(&old) {
            self.patch.bump(base, id, -1);
            *self.patch.holder_delta.entry(id).or_insert(0) -= 1;
        }
        for id in var.arg_idents().collect::<Vec<_>>() {
            self.patch.bump(base, id, -1);
        }
        self.patch.changed.swap_remove(var);
        if base.contains(var) {
            self.patch.removed.insert(var.clone());
        }
        Some(old)
    }

    /// Mints an identifier unused in both the base and the patch.
    pub fn fresh_ident(&mut self, ty: TypeId) -> Ident {
        let token = self.patch.next_token.max(self.base.next_token());
        self.patch.next_token = token + 1;
        Ident { ty, token }
    }

    pub fn ident_refs(&self, id: Ident) -> u32 {
        (self.base.ident_refs(id) as i64 + self.patch.ref_delta.get(&id).copied().unwrap_or(0)) as u32
    }

    /// Number of variables whose value is `id` in the patched state.
    pub fn ident_holders(&self, id: Ident) -> u32 {
        (self.base.ident_holders(id) as i64 + self.patch.holder_delta.get(&id).copied().unwrap_or(0)) as u32
    }

    /// Copies the patched state into a standalone world.
    pub fn materialize(&self) -> PartialWorld {
        let mut w = self.base.clone();
        for v in &self.patch.removed {
            w.remove(v);
        }
        for (k, v) in &self.patch.changed {
            w.insert(k.clone(), v.clone());
        }
        w.set_next_token(self.patch.next_token);
        w
    }
}

impl WorldView for Overlay<'_> {
    fn get(&self, var: &BasicVar) -> Option<&Value> {
        self.patch.get(self.base, var)
    }
}

impl WorldState for Overlay<'_> {
    fn vars(&self) -> Vec<BasicVar> {
        let mut out: Vec<BasicVar> = self
            .base
            .iter()
            .map(|(k, _)| k)
            .filter(|k| !self.patch.removed.contains(*k) && !self.patch.changed.contains_key(*k))
            .cloned()
            .collect();
        out.extend(self.patch.changed.keys().cloned());
        out
    }

    fn len(&self) -> usize {
        let added = self.patch.changed.keys().filter(|k| !self.base.contains(k)).count();
        self.base.len() + added - self.patch.removed.len()
    }

    fn ident_count(&self, ty: TypeId) -> usize {
        (self.base.ident_count(ty) as i64 + self.patch.count_delta.get(&ty).copied().unwrap_or(0)) as usize
    }

    fn ident_types(&self) -> Vec<TypeId> {
        let mut tys: Vec<TypeId> = self.base.ident_types();
        tys.extend(self.patch.count_delta.keys().copied());
        tys.sort();
        tys.dedup();
        tys.retain(|t| self.ident_count(*t) > 0);
        tys
    }

    fn idents(&self, ty: TypeId) -> Vec<Ident> {
        let mut out: Vec<Ident> = self.base.idents(ty).into_iter().filter(|i| self.ident_refs(*i) > 0).collect();
        for (id, _) in &self.patch.ref_delta {
            if id.ty == ty && self.base.ident_refs(*id) == 0 && self.ident_refs(*id) > 0 {
                out.push(*id);
            }
        }
        out
    }
}
