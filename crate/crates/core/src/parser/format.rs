use std::fmt::Write as _;

use crate::model::{quote, DistExpr, DistKind, Model, Rhs, Term};

/// Renders a model in canonical surface syntax. Parsing the output yields a
/// model equal to the input.
pub fn format_model(model: &Model) -> String {
    let mut out = String::new();
    for ty in model.user_types() {
        let _ = writeln!(out, "type {};", model.type_name(ty));
    }
    for ty in model.user_types() {
        let g = &model.type_decl(ty).guaranteed;
        if !g.is_empty() {
            let _ = writeln!(out, "guaranteed {} {};", model.type_name(ty), g.join(", "));
        }
    }
    for b in model.priors() {
        let _ = writeln!(
            out,
            "prior {} = {};",
            b.name,
            builtin_dist(model, &b.kind, &b.args, &[])
        );
    }
    for ty in model.user_types() {
        if let Some(d) = model.number_statement(ty) {
            let _ = writeln!(out, "#{} ~ {};", model.type_name(ty), dist(model, d, &[]));
        }
    }
    for decl in model.funcs() {
        let _ = write!(out, "random {} {}", model.type_name(decl.ret), decl.name);
        if !decl.params.is_empty() {
            out.push('(');
            for (i, (t, p)) in decl.arg_types.iter().zip(&decl.params).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} {}", model.type_name(*t), p);
            }
            out.push(')');
        }
        let rhs = |r: &Rhs| match r {
            Rhs::Sample(d) => format!("~ {}", dist(model, d, &decl.params)),
            Rhs::Fixed(t) => format!("= {}", model.show_term(t, &decl.params)),
        };
        match decl.clauses.as_slice() {
            [c] if c.guard.is_none() => {
                let _ = write!(out, " {}", rhs(&c.rhs));
            }
            clauses => {
                for (i, c) in clauses.iter().enumerate() {
                    out.push_str(if i == 0 { "\n    " } else { "\n    else " });
                    if let Some(g) = &c.guard {
                        let _ = write!(out, "if {} then ", model.show_term(g, &decl.params));
                    }
                    out.push_str(&rhs(&c.rhs));
                }
            }
        }
        out.push_str(";\n");
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn dist(model: &Model, d: &DistExpr, params: &[String]) -> String {
    match &d.prior {
        Some(name) => {
            let fixed = model.prior(name).map_or(0, |b| b.args.len());
            let rest = &d.args[fixed.min(d.args.len())..];
            if rest.is_empty() {
                name.clone()
            } else {
                let args: Vec<String> = rest.iter().map(|t| model.show_term(t, params)).collect();
                format!("{name}({})", args.join(", "))
            }
        }
        None => builtin_dist(model, &d.kind, &d.args, params),
    }
}

fn builtin_dist(model: &Model, kind: &DistKind, args: &[Term], params: &[String]) -> String {
    let mut parts: Vec<String> = args.iter().map(|t| model.show_term(t, params)).collect();
    let name = match kind {
        DistKind::Categorical(entries) => {
            let es: Vec<String> = entries
                .iter()
                .map(|(v, w)| format!("{}: {}", model.show_value(v), num(*w)))
                .collect();
            parts.push(format!("{{{}}}", es.join(", ")));
            "Categorical"
        }
        DistKind::Bernoulli(p) => {
            parts.push(format!("p={}", num(*p)));
            "Bernoulli"
        }
        DistKind::UniformObjects(ty, dummy) => match dummy {
            Some(d) => {
                parts.push(format!("{} {}", model.type_name(*ty), d));
                "Uniform"
            }
            None => {
                parts.push(model.type_name(*ty).to_string());
                "UniformOverObjects"
            }
        },
        DistKind::UniformInt => "UniformInt",
        DistKind::Poisson(l) => {
            parts.push(format!("lambda={}", num(*l)));
            "Poisson"
        }
        DistKind::Geometric(p) => {
            parts.push(format!("p={}", num(*p)));
            "Geometric"
        }
        DistKind::NoisyCopy(f) => {
            parts.push(format!("fidelity={}", num(*f)));
            "NoisyCopy"
        }
        DistKind::TokenString(spec) => {
            let vocab: Vec<&str> = spec.vocab.iter().map(|s| &**s).collect();
            parts.push(format!("vocab={}", quote(&vocab.join(" "))));
            parts.push(format!("p={}", num(spec.p)));
            parts.push(format!("eps={}", num(spec.eps)));
            "TokenStringModel"
        }
        DistKind::ConcatFormat { sep, alt, eps } => {
            parts.push(format!("sep={}", quote(sep)));
            parts.push(format!("alt={}", quote(alt)));
            parts.push(format!("eps={}", num(*eps)));
            "StringConcatFormat"
        }
    };
    format!("{name}({})", parts.join(", "))
}
