//! Evaluation of terms and dependency statements under a partial world.
//!
//! A contingent CPD tree is never materialized: the unique path consistent
//! with the world is the evaluation trace, and the variables read along it
//! are the active parents.

use std::sync::Arc;

use rand::Rng;

use super::{Builtin, Dist, DistExpr, DistKind, Model, ModelError, Rhs, Term};
use crate::value::{BasicVar, TypeId, Value};

/// Read access to a (possibly abstract, possibly patched) partial world.
pub trait WorldView {
    fn get(&self, var: &BasicVar) -> Option<&Value>;
}

/// Result of evaluating a dependency statement.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    /// `None` when the world does not support the variable.
    pub dist: Option<Dist>,
    /// Variables read, in first-read order. When unsupported, ends with the
    /// first uninstantiated variable.
    pub parents: Vec<BasicVar>,
}

impl Evaluated {
    pub fn is_supported(&self) -> bool {
        self.dist.is_some()
    }

    /// The uninstantiated variable that blocked evaluation.
    pub fn missing(&self) -> Option<&BasicVar> {
        if self.dist.is_none() {
            self.parents.last()
        } else {
            None
        }
    }
}

fn mismatch(model: &Model, context: String, expected: TypeId, v: &Value) -> ModelError {
    ModelError::TypeMismatch {
        context,
        expected: model.type_name(expected).to_string(),
        found: model.show_value(v),
    }
}

/// Evaluates `term` with formal parameters bound to `bindings`, appending
/// every basic variable read to `reads`. Returns `Ok(None)` when a read hits
/// an uninstantiated variable.
pub fn evaluate_term<W: WorldView + ?Sized>(
    model: &Model,
    world: &W,
    term: &Term,
    bindings: &[Value],
    reads: &mut Vec<BasicVar>,
) -> Result<Option<Value>, ModelError> {
    match term {
        Term::Lit(v) => Ok(Some(v.clone())),
        Term::Param(i) => Ok(Some(bindings[*i].clone())),
        Term::App(f, args) => {
            let decl = model.func(*f);
            let mut vals = Vec::with_capacity(args.len());
            for (arg, &ty) in args.iter().zip(&decl.arg_types) {
                let Some(v) = evaluate_term(model, world, arg, bindings, reads)? else {
                    return Ok(None);
                };
                if v.is_null() {
                    // A null argument makes the application null.
                    return Ok(Some(Value::Null));
                }
                if v.ty() != Some(ty) {
                    return Err(mismatch(model, format!("argument of {}", decl.name), ty, &v));
                }
                vals.push(v);
            }
            let var = BasicVar::app(*f, vals);
            let got = world.get(&var).cloned();
            reads.push(var);
            Ok(got)
        }
        Term::Builtin(b, args) => eval_builtin(model, world, *b, args, bindings, reads),
        Term::Number(ty) => {
            let var = BasicVar::Number(*ty);
            let got = world.get(&var).cloned();
            reads.push(var);
            Ok(got)
        }
    }
}

fn eval_builtin<W: WorldView + ?Sized>(
    model: &Model,
    world: &W,
    b: Builtin,
    args: &[Term],
    bindings: &[Value],
    reads: &mut Vec<BasicVar>,
) -> Result<Option<Value>, ModelError> {
    let eval = |t: &Term, reads: &mut Vec<BasicVar>| evaluate_term(model, world, t, bindings, reads);
    let nat = |v: &Value| -> Result<u64, ModelError> {
        v.as_nat()
            .ok_or_else(|| mismatch(model, format!("operand of {}", b.name()), TypeId::NATURAL, v))
    };
    let boolean = |v: &Value| -> Result<bool, ModelError> {
        v.as_bool()
            .ok_or_else(|| mismatch(model, format!("operand of {}", b.name()), TypeId::BOOLEAN, v))
    };
    match b {
        Builtin::And | Builtin::Or => {
            let Some(a) = eval(&args[0], reads)? else {
                return Ok(None);
            };
            if a.is_null() {
                return Ok(Some(Value::Null));
            }
            let a = boolean(&a)?;
            if (b == Builtin::And && !a) || (b == Builtin::Or && a) {
                return Ok(Some(Value::Bool(a)));
            }
            let Some(c) = eval(&args[1], reads)? else {
                return Ok(None);
            };
            if c.is_null() {
                return Ok(Some(Value::Null));
            }
            Ok(Some(Value::Bool(boolean(&c)?)))
        }
        Builtin::Not => {
            let Some(a) = eval(&args[0], reads)? else {
                return Ok(None);
            };
            if a.is_null() {
                return Ok(Some(Value::Null));
            }
            Ok(Some(Value::Bool(!boolean(&a)?)))
        }
        _ => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                let Some(v) = eval(a, reads)? else {
                    return Ok(None);
                };
                vals.push(v);
            }
            match b {
                Builtin::Eq => return Ok(Some(Value::Bool(vals[0] == vals[1]))),
                Builtin::Ne => return Ok(Some(Value::Bool(vals[0] != vals[1]))),
                _ => {}
            }
            if vals.iter().any(Value::is_null) {
                return Ok(Some(Value::Null));
            }
            let out = match b {
                Builtin::Succ => Value::Nat(nat(&vals[0])? + 1),
                Builtin::Pred => Value::Nat(nat(&vals[0])?.saturating_sub(1)),
                Builtin::Concat => {
                    let s = |v: &Value| {
                        v.as_str().map(str::to_owned).ok_or_else(|| {
                            mismatch(model, "operand of Concat".into(), TypeId::STRING, v)
                        })
                    };
                    let (x, y) = (s(&vals[0])?, s(&vals[1])?);
                    match (x.is_empty(), y.is_empty()) {
                        (true, _) => Value::str(&y),
                        (_, true) => Value::str(&x),
                        _ => Value::str(&format!("{x} {y}")),
                    }
                }
                Builtin::Lt => Value::Bool(nat(&vals[0])? < nat(&vals[1])?),
                Builtin::Le => Value::Bool(nat(&vals[0])? <= nat(&vals[1])?),
                Builtin::Gt => Value::Bool(nat(&vals[0])? > nat(&vals[1])?),
                Builtin::Ge => Value::Bool(nat(&vals[0])? >= nat(&vals[1])?),
                Builtin::Eq | Builtin::Ne | Builtin::And | Builtin::Or | Builtin::Not => unreachable!(),
            };
            Ok(Some(out))
        }
    }
}

enum Instantiated {
    Dist(Dist),
    Unsupported,
}

fn instantiate<W: WorldView + ?Sized>(
    model: &Model,
    world: &W,
    expr: &DistExpr,
    bindings: &[Value],
    reads: &mut Vec<BasicVar>,
) -> Result<Instantiated, ModelError> {
    let mut args = Vec::with_capacity(expr.args.len());
    for a in &expr.args {
        match evaluate_term(model, world, a, bindings, reads)? {
            None => return Ok(Instantiated::Unsupported),
            Some(v) => args.push(v),
        }
    }
    if args.iter().any(Value::is_null) {
        return Ok(Instantiated::Dist(Dist::Point(Value::Null)));
    }
    let string_arg = |v: &Value| -> Result<Arc<str>, ModelError> {
        match v {
            Value::Str(s) => Ok(s.clone()),
            other => Err(mismatch(model, format!("argument of {}", expr.kind.name()), TypeId::STRING, other)),
        }
    };
    let d = match &expr.kind {
        DistKind::Categorical(entries) => Dist::Categorical(Arc::from(entries.clone())),
        DistKind::Bernoulli(p) => Dist::Bernoulli(*p),
        DistKind::UniformObjects(ty, _) => {
            let guaranteed = model.guaranteed_count(*ty);
            let number = if model.number_statement(*ty).is_some() {
                let nv = BasicVar::Number(*ty);
                let got = world.get(&nv).cloned();
                reads.push(nv);
                match got {
                    None => return Ok(Instantiated::Unsupported),
                    Some(Value::Nat(n)) => n,
                    Some(other) => {
                        return Err(mismatch(model, format!("#{}", model.type_name(*ty)), TypeId::NATURAL, &other))
                    }
                }
            } else {
                0
            };
            Dist::UniformObjects {
                ty: *ty,
                guaranteed,
                number,
            }
        }
        DistKind::UniformInt => {
            let n = |v: &Value| {
                v.as_nat()
                    .ok_or_else(|| mismatch(model, "argument of UniformInt".into(), TypeId::NATURAL, v))
            };
            Dist::UniformInt {
                lo: n(&args[0])?,
                hi: n(&args[1])?,
            }
        }
        DistKind::Poisson(l) => Dist::Poisson(*l),
        DistKind::Geometric(p) => Dist::Geometric(*p),
        DistKind::NoisyCopy(fidelity) => Dist::NoisyCopy {
            source: args[0]
                .as_bool()
                .ok_or_else(|| mismatch(model, "argument of NoisyCopy".into(), TypeId::BOOLEAN, &args[0]))?,
            fidelity: *fidelity,
        },
        DistKind::TokenString(spec) => Dist::TokenString {
            spec: spec.clone(),
            source: match args.first() {
                Some(v) => Some(string_arg(v)?),
                None => None,
            },
        },
        DistKind::ConcatFormat { sep, alt, eps } => Dist::ConcatFormat {
            parts: args.iter().map(string_arg).collect::<Result<_, _>>()?,
            sep: sep.clone(),
            alt: alt.clone(),
            eps: *eps,
        },
    };
    Ok(Instantiated::Dist(d))
}

fn dedup_in_order(reads: Vec<BasicVar>) -> Vec<BasicVar> {
    if reads.len() < 2 {
        return reads;
    }
    let mut out: Vec<BasicVar> = Vec::with_capacity(reads.len());
    for r in reads {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

/// Evaluates the dependency statement of `var`, returning its distribution
/// (or unsupported) and the ordered set of active parents.
pub fn evaluate_dependency<W: WorldView + ?Sized>(
    model: &Model,
    world: &W,
    var: &BasicVar,
) -> Result<Evaluated, ModelError> {
    let mut reads = Vec::new();
    let dist = match var {
        BasicVar::Number(ty) => {
            let expr = model
                .number_statement(*ty)
                .ok_or_else(|| ModelError::NoNumberStatement(model.type_name(*ty).to_string()))?;
            match instantiate(model, world, expr, &[], &mut reads)? {
                Instantiated::Dist(d) => Some(d),
                Instantiated::Unsupported => None,
            }
        }
        BasicVar::App(f, args) => {
            let decl = model.func(*f);
            if args.len() != decl.arg_types.len() {
                return Err(ModelError::Arity {
                    name: decl.name.clone(),
                    expected: decl.arg_types.len(),
                    got: args.len(),
                });
            }
            let mut result = Some(Dist::Point(Value::Null));
            for clause in &decl.clauses {
                if let Some(guard) = &clause.guard {
                    match evaluate_term(model, world, guard, args, &mut reads)? {
                        None => {
                            result = None;
                            break;
                        }
                        Some(Value::Null) => break,
                        Some(Value::Bool(false)) => continue,
                        Some(Value::Bool(true)) => {}
                        Some(other) => {
                            return Err(mismatch(model, format!("guard of {}", decl.name), TypeId::BOOLEAN, &other))
                        }
                    }
                }
                result = match &clause.rhs {
                    Rhs::Fixed(t) => evaluate_term(model, world, t, args, &mut reads)?.map(Dist::Point),
                    Rhs::Sample(expr) => match instantiate(model, world, expr, args, &mut reads)? {
                        Instantiated::Dist(d) => Some(d),
                        Instantiated::Unsupported => None,
                    },
                };
                break;
            }
            result
        }
    };
    Ok(Evaluated {
        dist,
        parents: dedup_in_order(reads),
    })
}

/// `log p_V(σ(V) | σ)`: the log mass of the variable's instantiated value
/// under its evaluated distribution.
pub fn var_log_factor<W: WorldView + ?Sized>(
    model: &Model,
    world: &W,
    var: &BasicVar,
) -> Result<f64, ModelError> {
    let value = world
        .get(var)
        .ok_or_else(|| ModelError::NotInstantiated(model.show_var(var)))?
        .clone();
    let ev = evaluate_dependency(model, world, var)?;
    let dist = ev
        .dist
        .ok_or_else(|| ModelError::Unsupported(model.show_var(var)))?;
    Ok(dist.log_mass(&value))
}

/// Forward-samples a value for `var` from its evaluated distribution.
pub fn sample_dependency<W: WorldView + ?Sized, R: Rng + ?Sized>(
    model: &Model,
    world: &W,
    var: &BasicVar,
    rng: &mut R,
) -> Result<Value, ModelError> {
    let ev = evaluate_dependency(model, world, var)?;
    let dist = ev
        .dist
        .ok_or_else(|| ModelError::Unsupported(model.show_var(var)))?;
    Ok(dist.sample(rng))
}
