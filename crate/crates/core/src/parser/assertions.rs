//! Evidence, query and bound statements over a parsed model.
//!
//! One statement per line; a trailing `;` is optional.
//!
//! ```text
//! Obs(C1) = true
//! query hot : Hot(PubCited(C1))
//! bound #Pub <= 3
//! domain Obs in {true, false}
//! ```

use super::lexer::Tok;
use super::syntax::{Expr, Parser};
use super::{err, tokenize, Lowerer, ParseError, Scope};
use crate::model::{Model, Term};
use crate::value::{BasicVar, FuncId, TypeId, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    /// Display name, the canonical rendering of the term.
    pub name: String,
    pub term: Term,
}

/// A restriction used by exact enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    /// `bound #T <= n;`
    Number(TypeId, u64),
    /// `bound F <= n;` caps a natural-number-valued function.
    Value(FuncId, u64),
    /// `domain F in {v1, v2}` lists the values a function may take.
    Domain(FuncId, Vec<Value>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assertions {
    pub evidence: Vec<(BasicVar, Value)>,
    pub queries: Vec<Query>,
    pub bounds: Vec<Bound>,
}

impl Assertions {
    pub fn extend(&mut self, other: Assertions) {
        self.evidence.extend(other.evidence);
        self.queries.extend(other.queries);
        self.bounds.extend(other.bounds);
    }

    pub fn number_bound(&self, ty: TypeId) -> Option<u64> {
        self.bounds.iter().find_map(|b| match b {
            Bound::Number(t, n) if *t == ty => Some(*n),
            _ => None,
        })
    }

    pub fn domain(&self, f: FuncId) -> Option<&[Value]> {
        self.bounds.iter().find_map(|b| match b {
            Bound::Domain(g, vs) if *g == f => Some(vs.as_slice()),
            _ => None,
        })
    }

    pub fn value_bound(&self, f: FuncId) -> Option<u64> {
        self.bounds.iter().find_map(|b| match b {
            Bound::Value(g, n) if *g == f => Some(*n),
            _ => None,
        })
    }
}

fn ground_scope() -> Scope {
    Scope {
        params: Vec::new(),
        ground: true,
    }
}

/// Parses `obs`, `query` and `bound` statements.
pub fn parse_assertions(model: &Model, src: &str) -> Result<Assertions, Vec<ParseError>> {
    let toks = tokenize(src)?;
    let mut p = Parser::new(&toks);
    let mut lw = Lowerer::new(model);
    let mut out = Assertions::default();
    let scope = ground_scope();
    while !p.at_eof() {
        let start = p.span();
        let ok = (|| -> Result<(), ()> {
            if p.is_kw("query") {
                p.bump();
                let name = if matches!(p.peek(), Tok::Ident(_)) && *p.peek_at(1) == Tok::Colon {
                    let n = p.name("query name")?;
                    p.bump();
                    Some(n.0)
                } else {
                    None
                };
                let e = p.expr()?;
                semi(&mut p);
                if let Some((term, ty)) = lw.lower_term(&e, &scope) {
                    if ty != Some(TypeId::BOOLEAN) {
                        lw.errors.push(err(e.span(), "queries must be boolean terms"));
                    } else {
                        out.queries.push(Query {
                            name: name.unwrap_or_else(|| model.show_term(&term, &[])),
                            term,
                        });
                    }
                }
                return Ok(());
            }
            if p.is_kw("bound") {
                p.bump();
                let bound = if *p.peek() == Tok::Hash {
                    p.bump();
                    let ty = p.name("type name")?;
                    p.expect(Tok::Le)?;
                    let n = nat(&mut p)?;
                    match model.type_id(&ty.0).filter(|t| model.number_statement(*t).is_some()) {
                        Some(t) => Some(Bound::Number(t, n)),
                        None => {
                            lw.errors
                                .push(err(ty.1, format!("`{}` is not a type with a number statement", ty.0)));
                            None
                        }
                    }
                } else {
                    let f = p.name("function name")?;
                    p.expect(Tok::Le)?;
                    let n = nat(&mut p)?;
                    match model.func_id(&f.0).filter(|g| model.func(*g).ret == TypeId::NATURAL) {
                        Some(g) => Some(Bound::Value(g, n)),
                        None => {
                            lw.errors
                                .push(err(f.1, format!("`{}` is not a natural-number function", f.0)));
                            None
                        }
                    }
                };
                semi(&mut p);
                out.bounds.extend(bound);
                return Ok(());
            }
            if p.is_kw("domain") {
                p.bump();
                let f = p.name("function name")?;
                p.expect_kw("in")?;
                p.expect(Tok::LBrace)?;
                let mut exprs = Vec::new();
                if *p.peek() != Tok::RBrace {
                    loop {
                        exprs.push(p.expr()?);
                        if *p.peek() != Tok::Comma {
                            break;
                        }
                        p.bump();
                    }
                }
                p.expect(Tok::RBrace)?;
                semi(&mut p);
                let Some(g) = model.func_id(&f.0) else {
                    lw.errors.push(err(f.1, format!("unknown function `{}`", f.0)));
                    return Ok(());
                };
                let ret = model.func(g).ret;
                let mut values = Vec::new();
                for e in &exprs {
                    match lw.lower_term(e, &scope) {
                        Some((Term::Lit(v), ty)) if ty.is_none() || ty == Some(ret) => values.push(v),
                        Some(_) => lw
                            .errors
                            .push(err(e.span(), format!("not a literal of type {}", model.type_name(ret)))),
                        None => {}
                    }
                }
                out.bounds.push(Bound::Domain(g, values));
                return Ok(());
            }
            if p.is_kw("obs") {
                p.bump();
            }
            let var = if *p.peek() == Tok::Hash {
                p.bump();
                let ty = p.name("type name")?;
                match model.type_id(&ty.0).filter(|t| model.number_statement(*t).is_some()) {
                    Some(t) => Some((BasicVar::Number(t), TypeId::NATURAL)),
                    None => {
                        lw.errors
                            .push(err(ty.1, format!("`{}` is not a type with a number statement", ty.0)));
                        None
                    }
                }
            } else {
                let e = p.expr()?;
                basic_var(&mut lw, model, &e)
            };
            p.expect(Tok::Assign)?;
            let ve = p.expr()?;
            semi(&mut p);
            let value = lw.lower_term(&ve, &scope);
            if let (Some((var, ty)), Some((term, vty))) = (var, value) {
                let Term::Lit(v) = term else {
                    lw.errors.push(err(ve.span(), "observed values must be literals"));
                    return Ok(());
                };
                if vty.is_some() && vty != Some(ty) {
                    lw.errors.push(err(
                        ve.span(),
                        format!("type mismatch in evidence: expected {}", model.type_name(ty)),
                    ));
                    return Ok(());
                }
                if let Some((_, old)) = out.evidence.iter().find(|(x, _)| *x == var) {
                    if *old != v {
                        lw.errors
                            .push(err(start, format!("conflicting evidence for {}", model.show_var(&var))));
                    }
                    return Ok(());
                }
                out.evidence.push((var, v));
            }
            Ok(())
        })();
        if ok.is_err() {
            let line = p.span().line.max(start.line);
            p.recover_line(line);
        }
    }
    let mut errors = p.errors;
    errors.append(&mut lw.errors);
    if errors.is_empty() {
        Ok(out)
    } else {
        errors.sort_by_key(|e| e.span.start);
        Err(errors)
    }
}

fn semi(p: &mut Parser<'_>) {
    if *p.peek() == Tok::Semi {
        p.bump();
    }
}

fn nat(p: &mut Parser<'_>) -> Result<u64, ()> {
    match p.peek().clone() {
        Tok::Nat(n) => {
            p.bump();
            Ok(n)
        }
        _ => {
            p.error_here("a natural number");
            Err(())
        }
    }
}

fn basic_var(lw: &mut Lowerer<'_>, model: &Model, e: &Expr) -> Option<(BasicVar, TypeId)> {
    let (term, _) = lw.lower_term(e, &ground_scope())?;
    if let Term::App(f, args) = &term {
        let vals: Option<Vec<Value>> = args
            .iter()
            .map(|a| match a {
                Term::Lit(v) if !v.is_null() => Some(v.clone()),
                _ => None,
            })
            .collect();
        if let Some(vals) = vals {
            return Some((BasicVar::app(*f, vals), model.func(*f).ret));
        }
    }
    lw.errors.push(err(
        e.span(),
        "evidence must name a basic variable applied to literal arguments",
    ));
    None
}

/// Parses a closed term that may mention object literals such as `(Pub,1)`
/// and `Pub@A3F`.
pub fn parse_ground_term(model: &Model, src: &str) -> Result<Term, Vec<ParseError>> {
    let toks = tokenize(src)?;
    let mut p = Parser::new(&toks);
    let e = p.expr();
    if e.is_ok() && !p.at_eof() {
        p.error_here("end of input");
    }
    let mut errors = std::mem::take(&mut p.errors);
    let mut lw = Lowerer::new(model);
    let term = e.ok().and_then(|e| lw.lower_term(&e, &ground_scope()));
    errors.append(&mut lw.errors);
    match term {
        Some((t, _)) if errors.is_empty() => Ok(t),
        _ => Err(errors),
    }
}

/// Parses a literal value.
pub fn parse_ground_value(model: &Model, src: &str) -> Result<Value, Vec<ParseError>> {
    match parse_ground_term(model, src)? {
        Term::Lit(v) => Ok(v),
        _ => Err(vec![err(Default::default(), format!("`{src}` is not a literal value"))]),
    }
}
