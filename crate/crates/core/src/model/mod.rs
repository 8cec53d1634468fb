//! In-memory representation of a relational generative model: types, number
//! statements, and dependency statements with elementary distributions.

mod dist;
mod eval;

pub use dist::{Dist, TokenStringSpec};
pub use eval::{
    evaluate_dependency, evaluate_term, sample_dependency, var_log_factor, Evaluated, WorldView,
};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::value::{BasicVar, FuncId, Ident, ObjRef, TypeId, Value};

/// Errors raised while evaluating a model against a world. These signal
/// either a broken precondition or a parser/type bug.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: String,
        expected: String,
        found: String,
    },
    #[error("variable {0} is not supported by the world")]
    Unsupported(String),
    #[error("variable {0} is not instantiated")]
    NotInstantiated(String),
    #[error("{0} is not a random function")]
    NotRandom(String),
    #[error("wrong number of arguments for {name}: expected {expected}, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("type {0} has no number statement")]
    NoNumberStatement(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeDecl {
    pub name: String,
    pub builtin: bool,
    /// Names of guaranteed objects, in declaration order.
    pub guaranteed: Vec<String>,
    /// Prior on the number of non-guaranteed objects.
    pub number: Option<DistExpr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncDecl {
    pub name: String,
    pub params: Vec<String>,
    pub arg_types: Vec<TypeId>,
    pub ret: TypeId,
    /// Guarded clauses evaluated in order. An argument tuple matching no
    /// clause gets the null value with probability 1.
    pub clauses: Vec<Clause>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    /// `None` for an unconditional clause or a trailing `else`.
    pub guard: Option<Term>,
    pub rhs: Rhs,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Sample(DistExpr),
    Fixed(Term),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Succ,
    Pred,
    Concat,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Not,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Succ => "Succ",
            Builtin::Pred => "Pred",
            Builtin::Concat => "Concat",
            Builtin::Lt => "<",
            Builtin::Le => "<=",
            Builtin::Gt => ">",
            Builtin::Ge => ">=",
            Builtin::Eq => "==",
            Builtin::Ne => "!=",
            Builtin::And => "&",
            Builtin::Or => "|",
            Builtin::Not => "!",
        }
    }

    pub fn is_infix(self) -> bool {
        !matches!(self, Builtin::Succ | Builtin::Pred | Builtin::Concat | Builtin::Not)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Lit(Value),
    Param(usize),
    App(FuncId, Vec<Term>),
    Builtin(Builtin, Vec<Term>),
    /// `#T`: the number variable of a type.
    Number(TypeId),
}

impl Term {
    pub fn app(f: FuncId, args: Vec<Term>) -> Term {
        Term::App(f, args)
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::Builtin(Builtin::Eq, vec![a, b])
    }
}

/// Distribution kind together with its constant parameters. Term-valued
/// parameters live in [`DistExpr::args`].
#[derive(Clone, Debug, PartialEq)]
pub enum DistKind {
    Categorical(Vec<(Value, f64)>),
    Bernoulli(f64),
    /// Uniform over the objects of a type; the optional name is the dummy
    /// variable of the `Uniform(Pub p)` surface form.
    UniformObjects(TypeId, Option<String>),
    /// args: lo, hi
    UniformInt,
    Poisson(f64),
    Geometric(f64),
    /// args: source. Copies the boolean source with probability `fidelity`.
    NoisyCopy(f64),
    /// args: none (prior) or a single source string (observation model).
    TokenString(Arc<TokenStringSpec>),
    /// args: the components, joined by a possibly corrupted separator.
    ConcatFormat { sep: Arc<str>, alt: Arc<str>, eps: f64 },
}

impl DistKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistKind::Categorical(_) => "Categorical",
            DistKind::Bernoulli(_) => "Bernoulli",
            DistKind::UniformObjects(..) => "Uniform",
            DistKind::UniformInt => "UniformInt",
            DistKind::Poisson(_) => "Poisson",
            DistKind::Geometric(_) => "Geometric",
            DistKind::NoisyCopy(_) => "NoisyCopy",
            DistKind::TokenString(_) => "TokenStringModel",
            DistKind::ConcatFormat { .. } => "StringConcatFormat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistExpr {
    /// Name of the prior binding this came from, if any.
    pub prior: Option<String>,
    pub kind: DistKind,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorBinding {
    pub name: String,
    pub kind: DistKind,
    /// Constant term arguments fixed by the binding; usage-site arguments
    /// are appended after these.
    pub args: Vec<Term>,
}

/// A parsed and type-checked model. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    types: Vec<TypeDecl>,
    funcs: Vec<FuncDecl>,
    priors: Vec<PriorBinding>,
    type_index: HashMap<String, TypeId>,
    func_index: HashMap<String, FuncId>,
}

impl Model {
    /// An empty model containing only the built-in types.
    pub fn new() -> Model {
        let mut m = Model {
            types: Vec::new(),
            funcs: Vec::new(),
            priors: Vec::new(),
            type_index: HashMap::new(),
            func_index: HashMap::new(),
        };
        for name in ["Boolean", "NaturalNum", "String", "Real"] {
            let id = TypeId(m.types.len() as u16);
            m.types.push(TypeDecl {
                name: name.to_string(),
                builtin: true,
                guaranteed: Vec::new(),
                number: None,
            });
            m.type_index.insert(name.to_string(), id);
        }
        m
    }

    pub(crate) fn add_type(&mut self, name: &str) -> TypeId {
        let id = TypeId(self.types.len() as u16);
        self.types.push(TypeDecl {
            name: name.to_string(),
            builtin: false,
            guaranteed: Vec::new(),
            number: None,
        });
        self.type_index.insert(name.to_string(), id);
        id
    }

    pub(crate) fn type_mut(&mut self, ty: TypeId) -> &mut TypeDecl {
        &mut self.types[ty.0 as usize]
    }

    pub(crate) fn add_func(&mut self, decl: FuncDecl) -> FuncId {
        let id = FuncId(self.funcs.len() as u16);
        self.func_index.insert(decl.name.clone(), id);
        self.funcs.push(decl);
        id
    }

    pub(crate) fn func_mut(&mut self, f: FuncId) -> &mut FuncDecl {
        &mut self.funcs[f.0 as usize]
    }

    pub(crate) fn add_prior(&mut self, binding: PriorBinding) {
        self.priors.push(binding);
    }

    pub fn types(&self) -> &[TypeDecl] {
        &self.types
    }

    pub fn user_types(&self) -> impl Iterator<Item = TypeId> + '_ {
        (TypeId::BUILTIN_COUNT..self.types.len() as u16).map(TypeId)
    }

    pub fn funcs(&self) -> &[FuncDecl] {
        &self.funcs
    }

    pub fn func_ids(&self) -> impl Iterator<Item = FuncId> {
        (0..self.funcs.len() as u16).map(FuncId)
    }

    pub fn priors(&self) -> &[PriorBinding] {
        &self.priors
    }

    pub fn prior(&self, name: &str) -> Option<&PriorBinding> {
        self.priors.iter().find(|p| p.name == name)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.func_index.get(name).copied()
    }

    pub fn type_decl(&self, ty: TypeId) -> &TypeDecl {
        &self.types[ty.0 as usize]
    }

    pub fn type_name(&self, ty: TypeId) -> &str {
        &self.types[ty.0 as usize].name
    }

    pub fn func(&self, f: FuncId) -> &FuncDecl {
        &self.funcs[f.0 as usize]
    }

    pub fn func_name(&self, f: FuncId) -> &str {
        &self.funcs[f.0 as usize].name
    }

    pub fn number_statement(&self, ty: TypeId) -> Option<&DistExpr> {
        self.types[ty.0 as usize].number.as_ref()
    }

    pub fn guaranteed_count(&self, ty: TypeId) -> u32 {
        self.types[ty.0 as usize].guaranteed.len() as u32
    }

    /// Looks up a guaranteed object by name across all user types.
    pub fn guaranteed_obj(&self, name: &str) -> Option<ObjRef> {
        self.user_types().find_map(|ty| {
            self.type_decl(ty)
                .guaranteed
                .iter()
                .position(|g| g == name)
                .map(|i| ObjRef::Guaranteed {
                    ty,
                    index: i as u32,
                })
        })
    }

    /// Builds a function application variable by name, panicking on unknown
    /// names. Intended for tests and examples.
    pub fn var(&self, func: &str, args: impl Into<Vec<Value>>) -> BasicVar {
        let f = self
            .func_id(func)
            .unwrap_or_else(|| panic!("unknown function {func}"));
        BasicVar::app(f, args)
    }

    /// The number variable of a type, panicking on unknown names.
    pub fn number_var(&self, ty: &str) -> BasicVar {
        BasicVar::Number(
            self.type_id(ty)
                .unwrap_or_else(|| panic!("unknown type {ty}")),
        )
    }

    /// A guaranteed object value, panicking on unknown names.
    pub fn obj(&self, name: &str) -> Value {
        Value::Obj(
            self.guaranteed_obj(name)
                .unwrap_or_else(|| panic!("unknown guaranteed object {name}")),
        )
    }

    /// The numbered object `(ty, index)`.
    pub fn numbered(&self, ty: &str, index: u32) -> Value {
        Value::Obj(ObjRef::Numbered {
            ty: self.type_id(ty).expect("unknown type"),
            index,
        })
    }

    pub fn show_ident(&self, id: Ident) -> String {
        format!("{}@{:X}", self.type_name(id.ty), id.token)
    }

    pub fn show_obj(&self, o: ObjRef) -> String {
        match o {
            ObjRef::Guaranteed { ty, index } => self.type_decl(ty).guaranteed[index as usize].clone(),
            ObjRef::Numbered { ty, index } => format!("({},{})", self.type_name(ty), index),
            ObjRef::Ident(id) => self.show_ident(id),
        }
    }

    pub fn show_value(&self, v: &Value) -> String {
        match v {
            Value::Null => "null".to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Nat(n) => n.to_string(),
            Value::Str(s) => quote(s),
            Value::Obj(o) => self.show_obj(*o),
        }
    }

    pub fn show_var(&self, var: &BasicVar) -> String {
        match var {
            BasicVar::Number(ty) => format!("#{}", self.type_name(*ty)),
            BasicVar::App(f, args) => {
                let mut s = String::new();
                s.push_str(self.func_name(*f));
                s.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    s.push_str(&self.show_value(a));
                }
                s.push(')');
                s
            }
        }
    }

    /// Renders a term with formal parameters named by `params`.
    pub fn show_term(&self, term: &Term, params: &[String]) -> String {
        let mut s = String::new();
        self.write_term(&mut s, term, params, 0);
        s
    }

    fn write_term(&self, out: &mut String, term: &Term, params: &[String], prec: u8) {
        match term {
            Term::Lit(v) => out.push_str(&self.show_value(v)),
            Term::Param(i) => out.push_str(&params[*i]),
            Term::Number(ty) => {
                out.push('#');
                out.push_str(self.type_name(*ty));
            }
            Term::App(f, args) => {
                out.push_str(self.func_name(*f));
                if !args.is_empty() || !self.func(*f).params.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        self.write_term(out, a, params, 0);
                    }
                    out.push(')');
                }
            }
            Term::Builtin(Builtin::Not, args) => {
                out.push('!');
                self.write_term(out, &args[0], params, 4);
            }
            Term::Builtin(b, args) if b.is_infix() => {
                let my = match b {
                    Builtin::Or => 1,
                    Builtin::And => 2,
                    _ => 3,
                };
                if my <= prec {
                    out.push('(');
                }
                self.write_term(out, &args[0], params, my);
                let _ = write!(out, " {} ", b.name());
                self.write_term(out, &args[1], params, my);
                if my <= prec {
                    out.push(')');
                }
            }
            Term::Builtin(b, args) => {
                out.push_str(b.name());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.write_term(out, a, params, 0);
                }
                out.push(')');
            }
        }
    }
}

/// Quotes a string literal using the escapes the model lexer understands.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Default for Model {
    fn default() -> Self {
        Model::new()
    }
}
