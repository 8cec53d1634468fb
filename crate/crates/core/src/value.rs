//! Values, object references and basic random variables.

use std::fmt;
use std::sync::Arc;

/// Index of a type inside a [`Model`](crate::model::Model).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u16);

/// Index of a function symbol inside a [`Model`](crate::model::Model).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncId(pub u16);

impl TypeId {
    pub const BOOLEAN: TypeId = TypeId(0);
    pub const NATURAL: TypeId = TypeId(1);
    pub const STRING: TypeId = TypeId(2);
    pub const REAL: TypeId = TypeId(3);
    pub const BUILTIN_COUNT: u16 = 4;

    pub fn is_builtin(self) -> bool {
        self.0 < Self::BUILTIN_COUNT
    }
}

/// An object identifier: an unnumbered stand-in for a non-guaranteed object.
///
/// Equality is token equality; the display form is `Type@HEX`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    pub ty: TypeId,
    pub token: u32,
}

/// Reference to a user-typed object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjRef {
    /// A guaranteed object, by its position in the type's `guaranteed` list.
    Guaranteed { ty: TypeId, index: u32 },
    /// The non-guaranteed object `(ty, index)`, `index` counted from 1.
    Numbered { ty: TypeId, index: u32 },
    Ident(Ident),
}

impl ObjRef {
    pub fn ty(&self) -> TypeId {
        match *self {
            ObjRef::Guaranteed { ty, .. } | ObjRef::Numbered { ty, .. } => ty,
            ObjRef::Ident(id) => id.ty,
        }
    }
}

/// A value a basic variable can take. `Null` is the distinguished null value
/// and compares equal only to itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Null,
    Bool(bool),
    Nat(u64),
    Str(Arc<str>),
    Obj(ObjRef),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Value::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_obj(&self) -> Option<ObjRef> {
        match self {
            Value::Obj(o) => Some(*o),
            _ => None,
        }
    }

    pub fn as_ident(&self) -> Option<Ident> {
        match self {
            Value::Obj(ObjRef::Ident(id)) => Some(*id),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Type of the value; `None` for null.
    pub fn ty(&self) -> Option<TypeId> {
        match self {
            Value::Null => None,
            Value::Bool(_) => Some(TypeId::BOOLEAN),
            Value::Nat(_) => Some(TypeId::NATURAL),
            Value::Str(_) => Some(TypeId::STRING),
            Value::Obj(o) => Some(o.ty()),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::Nat(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

impl From<ObjRef> for Value {
    fn from(o: ObjRef) -> Self {
        Value::Obj(o)
    }
}

impl From<Ident> for Value {
    fn from(id: Ident) -> Self {
        Value::Obj(ObjRef::Ident(id))
    }
}

/// A basic random variable: a number variable `#τ` or a (possibly abstract)
/// function application variable `f[o1, …, ok]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicVar {
    Number(TypeId),
    App(FuncId, Arc<[Value]>),
}

impl BasicVar {
    pub fn app(f: FuncId, args: impl Into<Vec<Value>>) -> BasicVar {
        BasicVar::App(f, Arc::from(args.into()))
    }

    pub fn args(&self) -> &[Value] {
        match self {
            BasicVar::Number(_) => &[],
            BasicVar::App(_, args) => args,
        }
    }

    /// True iff any argument is an object identifier.
    pub fn is_abstract(&self) -> bool {
        self.args().iter().any(|a| a.as_ident().is_some())
    }

    /// Identifiers used as arguments.
    pub fn arg_idents(&self) -> impl Iterator<Item = Ident> + '_ {
        self.args().iter().filter_map(Value::as_ident)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}@{:X}", self.ty.0, self.token)
    }
}
