//! Text front end: model files, ground terms, evidence and query files, and
//! canonical pretty-printing.

mod assertions;
mod format;
mod lexer;
mod syntax;

pub use assertions::{parse_assertions, parse_ground_term, parse_ground_value, Assertions, Bound, Query};
pub use format::format_model;
pub use lexer::SourceSpan;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::model::{
    Builtin, Clause, DistExpr, DistKind, FuncDecl, Model, PriorBinding, Rhs, Term, TokenStringSpec,
};
use crate::value::{Ident, ObjRef, TypeId, Value};
use syntax::{ClauseAst, DistRef, Expr, Item, RhsAst};

/// A syntax or type error with its source location.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// What the parser was looking for, for syntax errors.
    pub expected: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(span: SourceSpan, message: impl Into<String>) -> ParseError {
    ParseError {
        span,
        message: message.into(),
        expected: None,
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<lexer::Token>, Vec<ParseError>> {
    lexer::lex(src).map_err(|es| es.into_iter().map(|e| err(e.span, e.message)).collect())
}

/// Parses and type-checks a model. All errors found are reported, each
/// with a line and column.
pub fn parse_model(src: &str) -> Result<Model, Vec<ParseError>> {
    let toks = tokenize(src)?;
    let mut p = syntax::Parser::new(&toks);
    let items = p.items();
    let mut errors = p.errors;
    let model = build(&items, &mut errors);
    if errors.is_empty() {
        Ok(model)
    } else {
        errors.sort_by_key(|e| e.span.start);
        Err(errors)
    }
}

fn build(items: &[Item], errors: &mut Vec<ParseError>) -> Model {
    let mut model = Model::new();
    for it in items {
        if let Item::Type((name, span)) = it {
            if model.type_id(name).is_some() {
                errors.push(err(*span, format!("type `{name}` is already declared")));
            } else {
                model.add_type(name);
            }
        }
    }
    let mut objects: HashMap<String, ()> = HashMap::new();
    for it in items {
        if let Item::Guaranteed { ty, names } = it {
            let Some(t) = user_type(&model, ty, errors) else { continue };
            for (n, span) in names {
                if objects.insert(n.clone(), ()).is_some() {
                    errors.push(err(*span, format!("guaranteed object `{n}` is already declared")));
                    continue;
                }
                model.type_mut(t).guaranteed.push(n.clone());
            }
        }
    }
    let mut funcs = Vec::new();
    for it in items {
        if let Item::Random {
            ret, name, params, ..
        } = it
        {
            let ret_ty = any_type(&model, ret, errors);
            let mut arg_types = Vec::new();
            let mut names: Vec<String> = Vec::new();
            for ((tn, tspan), (pn, pspan)) in params {
                if let Some(t) = any_type(&model, &(tn.clone(), *tspan), errors) {
                    arg_types.push(t);
                }
                if names.contains(pn) {
                    errors.push(err(*pspan, format!("duplicate parameter `{pn}`")));
                }
                names.push(pn.clone());
            }
            if model.func_id(&name.0).is_some() {
                errors.push(err(name.1, format!("function `{}` is already declared", name.0)));
                continue;
            }
            if objects.contains_key(&name.0) {
                errors.push(err(name.1, format!("`{}` is already a guaranteed object", name.0)));
                continue;
            }
            let (Some(ret_ty), true) = (ret_ty, arg_types.len() == params.len()) else { continue };
            let f = model.add_func(FuncDecl {
                name: name.0.clone(),
                params: names,
                arg_types,
                ret: ret_ty,
                clauses: Vec::new(),
            });
            funcs.push((f, it));
        }
    }

    let mut numbers = Vec::new();
    let mut bodies = Vec::new();
    let mut priors = Vec::new();
    {
        let mut lw = Lowerer::new(&model);
        for it in items {
            if let Item::Prior { name, dist } = it {
                if lw.priors.contains_key(&name.0) || lw.is_builtin_dist(&name.0) {
                    lw.errors.push(err(name.1, format!("prior `{}` is already defined", name.0)));
                    continue;
                }
                if let Some(b) = lw.lower_binding(dist) {
                    priors.push(PriorBinding {
                        name: name.0.clone(),
                        kind: b.kind.clone(),
                        args: b.args.clone(),
                    });
                    lw.priors.insert(name.0.clone(), b);
                }
            }
        }
        let mut seen_number = HashMap::new();
        for it in items {
            if let Item::Number { ty, dist } = it {
                let Some(t) = user_type(&model, ty, &mut lw.errors) else { continue };
                if seen_number.insert(t, ()).is_some() {
                    lw.errors.push(err(ty.1, format!("type `{}` already has a number statement", ty.0)));
                    continue;
                }
                let scope = Scope::default();
                if let Some(d) = lw.lower_dist(dist, &scope, Some(TypeId::NATURAL)) {
                    numbers.push((t, d));
                }
            }
        }
        for (f, it) in &funcs {
            let Item::Random { clauses, .. } = it else { unreachable!() };
            let decl = model.func(*f);
            let scope = Scope {
                params: decl.params.iter().cloned().zip(decl.arg_types.iter().copied()).collect(),
                ground: false,
            };
            if let Some(cs) = lw.lower_clauses(clauses, &scope, decl.ret) {
                bodies.push((*f, cs));
            }
        }
        errors.append(&mut lw.errors);
    }
    for b in priors {
        model.add_prior(b);
    }
    for (t, d) in numbers {
        model.type_mut(t).number = Some(d);
    }
    for (f, cs) in bodies {
        model.func_mut(f).clauses = cs;
    }
    model
}

fn any_type(model: &Model, (name, span): &(String, SourceSpan), errors: &mut Vec<ParseError>) -> Option<TypeId> {
    let t = model.type_id(name);
    if t.is_none() {
        errors.push(err(*span, format!("unknown type `{name}`")));
    }
    t
}

fn user_type(model: &Model, named: &(String, SourceSpan), errors: &mut Vec<ParseError>) -> Option<TypeId> {
    let t = any_type(model, named, errors)?;
    if t.is_builtin() {
        errors.push(err(named.1, format!("`{}` is a built-in type", named.0)));
        return None;
    }
    Some(t)
}

#[derive(Default)]
pub(crate) struct Scope {
    pub params: Vec<(String, TypeId)>,
    /// Allows object literals `(Pub, 1)` and `Pub@A3F`.
    pub ground: bool,
}

pub(crate) struct BindingInfo {
    kind: DistKind,
    args: Vec<Term>,
    arg_types: Vec<Option<TypeId>>,
}

/// Lowers syntax to model terms, type-checking as it goes.
pub(crate) struct Lowerer<'m> {
    model: &'m Model,
    priors: HashMap<String, BindingInfo>,
    pub errors: Vec<ParseError>,
}

const BUILTIN_DISTS: &[&str] = &[
    "Categorical",
    "Bernoulli",
    "Uniform",
    "UniformOverObjects",
    "UniformInt",
    "Poisson",
    "Geometric",
    "NoisyCopy",
    "TokenStringModel",
    "StringConcatFormat",
];

/// Term-argument slots: (min, max).
fn term_slots(kind: &DistKind) -> (usize, usize) {
    match kind {
        DistKind::UniformInt => (2, 2),
        DistKind::NoisyCopy(_) => (1, 1),
        DistKind::TokenString(_) => (0, 1),
        DistKind::ConcatFormat { .. } => (1, usize::MAX),
        _ => (0, 0),
    }
}

fn slot_type(kind: &DistKind) -> TypeId {
    match kind {
        DistKind::NoisyCopy(_) => TypeId::BOOLEAN,
        DistKind::UniformInt => TypeId::NATURAL,
        _ => TypeId::STRING,
    }
}

impl<'m> Lowerer<'m> {
    pub(crate) fn new(model: &'m Model) -> Self {
        let priors = model
            .priors()
            .iter()
            .map(|b| {
                (
                    b.name.clone(),
                    BindingInfo {
                        kind: b.kind.clone(),
                        args: b.args.clone(),
                        arg_types: b
                            .args
                            .iter()
                            .map(|t| match t {
                                Term::Lit(v) => v.ty(),
                                _ => None,
                            })
                            .collect(),
                    },
                )
            })
            .collect();
        Lowerer {
            model,
            priors,
            errors: Vec::new(),
        }
    }

    fn is_builtin_dist(&self, name: &str) -> bool {
        BUILTIN_DISTS.contains(&name)
    }

    fn type_name(&self, t: Option<TypeId>) -> String {
        match t {
            Some(t) => self.model.type_name(t).to_string(),
            None => "null".to_string(),
        }
    }

    fn check_type(&mut self, span: SourceSpan, what: &str, expected: TypeId, found: Option<TypeId>) -> bool {
        match found {
            Some(t) if t != expected => {
                self.errors.push(err(
                    span,
                    format!(
                        "type mismatch in {what}: expected {}, found {}",
                        self.model.type_name(expected),
                        self.model.type_name(t)
                    ),
                ));
                false
            }
            _ => true,
        }
    }

    pub(crate) fn lower_term(&mut self, e: &Expr, scope: &Scope) -> Option<(Term, Option<TypeId>)> {
        match e {
            Expr::Nat(n, _) => Some((Term::Lit(Value::Nat(*n)), Some(TypeId::NATURAL))),
            Expr::Str(s, _) => Some((Term::Lit(Value::str(s)), Some(TypeId::STRING))),
            Expr::Bool(b, _) => Some((Term::Lit(Value::Bool(*b)), Some(TypeId::BOOLEAN))),
            Expr::Null(_) => Some((Term::Lit(Value::Null), None)),
            Expr::Real(_, span) => {
                self.errors
                    .push(err(*span, "real numbers may only appear as distribution parameters"));
                None
            }
            Expr::Map(_, span) | Expr::Typed(_, _, span) => {
                self.errors.push(err(*span, "expected a term"));
                None
            }
            Expr::Name(n, span) => {
                if let Some(i) = scope.params.iter().position(|(p, _)| p == n) {
                    return Some((Term::Param(i), Some(scope.params[i].1)));
                }
                if let Some(o) = self.model.guaranteed_obj(n) {
                    return Some((Term::Lit(Value::Obj(o)), Some(o.ty())));
                }
                if let Some(f) = self.model.func_id(n) {
                    let decl = self.model.func(f);
                    if decl.arg_types.is_empty() {
                        return Some((Term::App(f, Vec::new()), Some(decl.ret)));
                    }
                    self.errors.push(err(
                        *span,
                        format!("wrong number of arguments for `{n}`: expected {}, got 0", decl.arg_types.len()),
                    ));
                    return None;
                }
                self.errors.push(err(*span, format!("unknown name `{n}`")));
                None
            }
            Expr::Call(n, args, span) => {
                let lowered: Vec<_> = args.iter().map(|a| self.lower_term(a, scope)).collect();
                if lowered.iter().any(Option::is_none) {
                    return None;
                }
                let lowered: Vec<_> = lowered.into_iter().map(Option::unwrap).collect();
                let (expected, ret, term): (Vec<TypeId>, TypeId, Box<dyn Fn(Vec<Term>) -> Term>) =
                    if let Some(f) = self.model.func_id(n) {
                        let decl = self.model.func(f);
                        (decl.arg_types.clone(), decl.ret, Box::new(move |a| Term::App(f, a)))
                    } else {
                        match n.as_str() {
                            "Succ" | "Pred" => {
                                let b = if n == "Succ" { Builtin::Succ } else { Builtin::Pred };
                                (vec![TypeId::NATURAL], TypeId::NATURAL, Box::new(move |a| Term::Builtin(b, a)))
                            }
                            "Concat" => (
                                vec![TypeId::STRING, TypeId::STRING],
                                TypeId::STRING,
                                Box::new(|a| Term::Builtin(Builtin::Concat, a)),
                            ),
                            _ => {
                                self.errors.push(err(*span, format!("unknown function `{n}`")));
                                return None;
                            }
                        }
                    };
                if expected.len() != lowered.len() {
                    self.errors.push(err(
                        *span,
                        format!(
                            "wrong number of arguments for `{n}`: expected {}, got {}",
                            expected.len(),
                            lowered.len()
                        ),
                    ));
                    return None;
                }
                let mut ok = true;
                for ((a, (_, t)), exp) in args.iter().zip(&lowered).zip(&expected) {
                    ok &= self.check_type(a.span(), &format!("argument of `{n}`"), *exp, *t);
                }
                if !ok {
                    return None;
                }
                Some((term(lowered.into_iter().map(|(t, _)| t).collect()), Some(ret)))
            }
            Expr::Not(inner, _) => {
                let (t, ty) = self.lower_term(inner, scope)?;
                if !self.check_type(inner.span(), "operand of `!`", TypeId::BOOLEAN, ty) {
                    return None;
                }
                Some((Term::Builtin(Builtin::Not, vec![t]), Some(TypeId::BOOLEAN)))
            }
            Expr::Binary(op, a, b, span) => {
                let la = self.lower_term(a, scope);
                let lb = self.lower_term(b, scope);
                let ((ta, tya), (tb, tyb)) = (la?, lb?);
                let what = format!("operand of `{}`", op.name());
                let ok = match op {
                    Builtin::And | Builtin::Or => {
                        self.check_type(a.span(), &what, TypeId::BOOLEAN, tya)
                            & self.check_type(b.span(), &what, TypeId::BOOLEAN, tyb)
                    }
                    Builtin::Lt | Builtin::Le | Builtin::Gt | Builtin::Ge => {
                        self.check_type(a.span(), &what, TypeId::NATURAL, tya)
                            & self.check_type(b.span(), &what, TypeId::NATURAL, tyb)
                    }
                    _ => match (tya, tyb) {
                        (Some(x), Some(y)) if x != y => {
                            self.errors.push(err(
                                *span,
                                format!(
                                    "cannot compare {} with {}",
                                    self.type_name(Some(x)),
                                    self.type_name(Some(y))
                                ),
                            ));
                            false
                        }
                        _ => true,
                    },
                };
                ok.then(|| (Term::Builtin(*op, vec![ta, tb]), Some(TypeId::BOOLEAN)))
            }
            Expr::Count(ty, span) => {
                let t = user_type(self.model, &(ty.clone(), *span), &mut self.errors)?;
                if self.model.number_statement(t).is_none() {
                    self.errors.push(err(*span, format!("type `{ty}` has no number statement")));
                    return None;
                }
                Some((Term::Number(t), Some(TypeId::NATURAL)))
            }
            Expr::Numbered(ty, idx, span) => {
                if !scope.ground {
                    self.errors
                        .push(err(*span, "object literals are only allowed in evidence and queries"));
                    return None;
                }
                let t = user_type(self.model, &(ty.clone(), *span), &mut self.errors)?;
                if *idx == 0 || *idx > u32::MAX as u64 {
                    self.errors.push(err(*span, "object index must be at least 1"));
                    return None;
                }
                Some((
                    Term::Lit(Value::Obj(ObjRef::Numbered {
                        ty: t,
                        index: *idx as u32,
                    })),
                    Some(t),
                ))
            }
            Expr::IdentTok(ty, tok, span) => {
                if !scope.ground {
                    self.errors
                        .push(err(*span, "object literals are only allowed in evidence and queries"));
                    return None;
                }
                let t = user_type(self.model, &(ty.clone(), *span), &mut self.errors)?;
                let Ok(token) = u32::from_str_radix(tok, 16) else {
                    self.errors.push(err(*span, format!("bad identifier token `{tok}`")));
                    return None;
                };
                Some((Term::Lit(Value::Obj(ObjRef::Ident(Ident { ty: t, token }))), Some(t)))
            }
        }
    }

    fn lower_clauses(&mut self, clauses: &[ClauseAst], scope: &Scope, ret: TypeId) -> Option<Vec<Clause>> {
        let mut out = Vec::new();
        let mut ok = true;
        for c in clauses {
            let guard = match &c.guard {
                Some(g) => match self.lower_term(g, scope) {
                    Some((t, ty)) => {
                        ok &= self.check_type(g.span(), "condition", TypeId::BOOLEAN, ty);
                        Some(t)
                    }
                    None => {
                        ok = false;
                        None
                    }
                },
                None => None,
            };
            let rhs = match &c.rhs {
                RhsAst::Dist(d) => self.lower_dist(d, scope, Some(ret)).map(Rhs::Sample),
                RhsAst::Term(e) => match self.lower_term(e, scope) {
                    Some((t, ty)) => self.check_type(e.span(), "fixed value", ret, ty).then_some(Rhs::Fixed(t)),
                    None => None,
                },
            };
            match rhs {
                Some(rhs) => out.push(Clause { guard, rhs }),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn const_f64(&mut self, e: &Expr, what: &str) -> Option<f64> {
        match e {
            Expr::Real(x, _) => Some(*x),
            Expr::Nat(n, _) => Some(*n as f64),
            other => {
                self.errors.push(err(other.span(), format!("expected a number for {what}")));
                None
            }
        }
    }

    fn const_str(&mut self, e: &Expr, what: &str) -> Option<String> {
        match e {
            Expr::Str(s, _) => Some(s.clone()),
            other => {
                self.errors.push(err(other.span(), format!("expected a string for {what}")));
                None
            }
        }
    }

    fn prob(&mut self, e: &Expr, what: &str, allow_zero: bool) -> Option<f64> {
        let p = self.const_f64(e, what)?;
        if !(0.0..=1.0).contains(&p) || (!allow_zero && p == 0.0) {
            self.errors
                .push(err(e.span(), format!("{what} must be a probability, got {p}")));
            return None;
        }
        Some(p)
    }

    /// Lowers a builtin distribution application. Returns the kind and the
    /// term arguments with their types.
    fn lower_builtin(
        &mut self,
        d: &DistRef,
        scope: &Scope,
    ) -> Option<(DistKind, Vec<(Term, Option<TypeId>, SourceSpan)>)> {
        let pure_const = matches!(d.name.as_str(), "Categorical" | "Bernoulli" | "Poisson" | "Geometric");
        let mut named: Vec<(&str, &Expr, SourceSpan)> = Vec::new();
        let mut consts: Vec<&Expr> = Vec::new();
        let mut terms = Vec::new();
        let mut ok = true;
        for a in &d.args {
            if let Some((n, span)) = &a.name {
                if named.iter().any(|(m, _, _)| m == n) {
                    self.errors.push(err(*span, format!("parameter `{n}` given twice")));
                    ok = false;
                }
                named.push((n.as_str(), &a.value, *span));
            } else if pure_const || matches!(a.value, Expr::Real(..) | Expr::Map(..) | Expr::Typed(..)) {
                consts.push(&a.value);
            } else {
                match self.lower_term(&a.value, scope) {
                    Some((t, ty)) => terms.push((t, ty, a.value.span())),
                    None => ok = false,
                }
            }
        }
        let allowed: &[&str] = match d.name.as_str() {
            "Bernoulli" | "Geometric" => &["p"],
            "Poisson" => &["lambda"],
            "NoisyCopy" => &["fidelity"],
            "TokenStringModel" => &["vocab", "p", "eps"],
            "StringConcatFormat" => &["sep", "alt", "eps"],
            _ => &[],
        };
        for (n, _, span) in &named {
            if !allowed.contains(n) {
                self.errors
                    .push(err(*span, format!("`{}` has no parameter `{n}`", d.name)));
                ok = false;
            }
        }
        // Positional constants fill the allowed parameters in order.
        let mut params: Vec<(&str, &Expr)> = Vec::new();
        let mut extra = Vec::new();
        let mut slot = allowed.iter().filter(|p| !named.iter().any(|(n, _, _)| n == *p));
        for c in &consts {
            if matches!(c, Expr::Map(..) | Expr::Typed(..)) {
                extra.push(*c);
                continue;
            }
            match slot.next() {
                Some(p) => params.push((p, c)),
                None => {
                    self.errors
                        .push(err(c.span(), format!("too many arguments for `{}`", d.name)));
                    ok = false;
                }
            }
        }
        params.extend(named.iter().map(|(n, e, _)| (*n, *e)));
        let get = |k: &str| params.iter().find(|(n, _)| *n == k).map(|(_, e)| *e);
        let missing = |me: &mut Self, k: &str| {
            me.errors
                .push(err(d.span, format!("`{}` requires parameter `{k}`", d.name)));
        };
        let kind = match d.name.as_str() {
            "Categorical" => {
                let [Expr::Map(entries, _)] = extra.as_slice() else {
                    self.errors
                        .push(err(d.span, "`Categorical` takes a single `{value: weight, ...}` map"));
                    return None;
                };
                let mut out: Vec<(Value, f64)> = Vec::new();
                let mut key_ty: Option<TypeId> = None;
                let ground = Scope::default();
                for (k, w) in entries {
                    let key = self.lower_term(k, &ground);
                    let w = self.const_f64(w, "a categorical weight");
                    let (Some((Term::Lit(v), ty)), Some(w)) = (key, w) else {
                        ok = false;
                        continue;
                    };
                    if let (Some(a), Some(b)) = (key_ty, ty) {
                        if a != b {
                            self.errors.push(err(k.span(), "categorical values must share one type"));
                            ok = false;
                        }
                    }
                    key_ty = key_ty.or(ty);
                    if w < 0.0 {
                        self.errors.push(err(k.span(), "categorical weights must be non-negative"));
                        ok = false;
                    }
                    if out.iter().any(|(x, _)| *x == v) {
                        self.errors.push(err(k.span(), "duplicate categorical value"));
                        ok = false;
                    }
                    out.push((v, w));
                }
                let total: f64 = out.iter().map(|(_, w)| w).sum();
                if ok && (total - 1.0).abs() > 1e-6 {
                    self.errors
                        .push(err(d.span, format!("categorical weights sum to {total}, not 1")));
                    ok = false;
                }
                DistKind::Categorical(out)
            }
            "Bernoulli" => match get("p") {
                Some(e) => DistKind::Bernoulli(self.prob(e, "p", true)?),
                None => {
                    missing(self, "p");
                    return None;
                }
            },
            "Geometric" => match get("p") {
                Some(e) => DistKind::Geometric(self.prob(e, "p", false)?),
                None => {
                    missing(self, "p");
                    return None;
                }
            },
            "Poisson" => match get("lambda") {
                Some(e) => {
                    let l = self.const_f64(e, "lambda")?;
                    if !(l > 0.0 && l.is_finite()) {
                        self.errors.push(err(e.span(), "lambda must be positive"));
                        return None;
                    }
                    DistKind::Poisson(l)
                }
                None => {
                    missing(self, "lambda");
                    return None;
                }
            },
            "NoisyCopy" => match get("fidelity") {
                Some(e) => DistKind::NoisyCopy(self.prob(e, "fidelity", true)?),
                None => {
                    missing(self, "fidelity");
                    return None;
                }
            },
            "Uniform" | "UniformOverObjects" => {
                let [Expr::Typed(ty, dummy, span)] = extra.as_slice() else {
                    self.errors.push(err(d.span, format!("`{}` takes a single type", d.name)));
                    return None;
                };
                let t = user_type(self.model, &(ty.clone(), *span), &mut self.errors)?;
                DistKind::UniformObjects(t, dummy.clone())
            }
            "UniformInt" => DistKind::UniformInt,
            "TokenStringModel" => {
                let Some(v) = get("vocab") else {
                    missing(self, "vocab");
                    return None;
                };
                let vocab = self.const_str(v, "vocab")?;
                let p = match get("p") {
                    Some(e) => self.prob(e, "p", false)?,
                    None => 1.0,
                };
                let eps = match get("eps") {
                    Some(e) => self.prob(e, "eps", true)?,
                    None => 0.05,
                };
                let spec = TokenStringSpec::from_text(&vocab, p, eps);
                if spec.vocab.is_empty() {
                    self.errors.push(err(v.span(), "vocabulary is empty"));
                    return None;
                }
                DistKind::TokenString(Arc::new(spec))
            }
            "StringConcatFormat" => {
                let sep = match get("sep") {
                    Some(e) => self.const_str(e, "sep")?,
                    None => ".".to_string(),
                };
                let alt = match get("alt") {
                    Some(e) => self.const_str(e, "alt")?,
                    None => ",".to_string(),
                };
                let eps = match get("eps") {
                    Some(e) => self.prob(e, "eps", true)?,
                    None => 0.05,
                };
                DistKind::ConcatFormat {
                    sep: Arc::from(sep),
                    alt: Arc::from(alt),
                    eps,
                }
            }
            _ => unreachable!(),
        };
        if !extra.is_empty() && !matches!(kind, DistKind::Categorical(_) | DistKind::UniformObjects(..)) {
            self.errors
                .push(err(extra[0].span(), format!("unexpected argument for `{}`", d.name)));
            ok = false;
        }
        ok.then_some((kind, terms))
    }

    fn lower_binding(&mut self, d: &DistRef) -> Option<BindingInfo> {
        if !self.is_builtin_dist(&d.name) {
            self.errors.push(err(
                d.span,
                format!("prior bindings must use a built-in distribution, not `{}`", d.name),
            ));
            return None;
        }
        let (kind, terms) = self.lower_builtin(d, &Scope::default())?;
        if terms.len() > term_slots(&kind).1 {
            self.errors
                .push(err(d.span, format!("too many arguments for `{}`", d.name)));
            return None;
        }
        Some(BindingInfo {
            kind,
            arg_types: terms.iter().map(|(_, t, _)| *t).collect(),
            args: terms.into_iter().map(|(t, _, _)| t).collect(),
        })
    }

    /// Lowers a distribution reference, checking its value type against
    /// `ret` when given.
    pub(crate) fn lower_dist(&mut self, d: &DistRef, scope: &Scope, ret: Option<TypeId>) -> Option<DistExpr> {
        let (prior, kind, args, types, spans) = if self.is_builtin_dist(&d.name) {
            let (kind, terms) = self.lower_builtin(d, scope)?;
            let spans = terms.iter().map(|t| t.2).collect::<Vec<_>>();
            let types = terms.iter().map(|t| t.1).collect::<Vec<_>>();
            (None, kind, terms.into_iter().map(|t| t.0).collect::<Vec<_>>(), types, spans)
        } else if let Some(b) = self.priors.get(&d.name) {
            let kind = b.kind.clone();
            let mut args = b.args.clone();
            let mut types = b.arg_types.clone();
            let mut spans = vec![d.span; args.len()];
            let mut ok = true;
            for a in &d.args {
                if let Some((n, span)) = &a.name {
                    self.errors
                        .push(err(*span, format!("cannot set parameter `{n}` of prior `{}`", d.name)));
                    ok = false;
                    continue;
                }
                match self.lower_term(&a.value, scope) {
                    Some((t, ty)) => {
                        args.push(t);
                        types.push(ty);
                        spans.push(a.value.span());
                    }
                    None => ok = false,
                }
            }
            if !ok {
                return None;
            }
            (Some(d.name.clone()), kind, args, types, spans)
        } else {
            self.errors
                .push(err(d.span, format!("unknown distribution or prior `{}`", d.name)));
            return None;
        };
        let (lo, hi) = term_slots(&kind);
        if args.len() < lo || args.len() > hi {
            let expected = if lo == hi {
                lo.to_string()
            } else if hi == usize::MAX {
                format!("at least {lo}")
            } else {
                format!("{lo} to {hi}")
            };
            self.errors.push(err(
                d.span,
                format!(
                    "wrong number of arguments for `{}`: expected {expected}, got {}",
                    d.name,
                    args.len()
                ),
            ));
            return None;
        }
        let mut ok = true;
        for (ty, span) in types.iter().zip(&spans) {
            ok &= self.check_type(*span, &format!("argument of `{}`", d.name), slot_type(&kind), *ty);
        }
        let value_ty = match &kind {
            DistKind::Categorical(e) => e.iter().find_map(|(v, _)| v.ty()),
            DistKind::Bernoulli(_) | DistKind::NoisyCopy(_) => Some(TypeId::BOOLEAN),
            DistKind::UniformObjects(t, _) => Some(*t),
            DistKind::UniformInt | DistKind::Poisson(_) | DistKind::Geometric(_) => Some(TypeId::NATURAL),
            DistKind::TokenString(_) | DistKind::ConcatFormat { .. } => Some(TypeId::STRING),
        };
        if let Some(r) = ret {
            ok &= self.check_type(d.span, &format!("distribution `{}`", d.name), r, value_ty);
        }
        ok.then_some(DistExpr { prior, kind, args })
    }
}
