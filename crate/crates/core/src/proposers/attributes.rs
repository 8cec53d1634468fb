use rand::Rng;

use super::choice_log_mass;
use crate::engine::{ChainRng, EngineError, ProposalCtx};
use crate::model::{evaluate_dependency, Dist, Model, WorldView};
use crate::value::{BasicVar, FuncId, ObjRef, TypeId, Value};

/// Splits a citation text into author names and a title at the first
/// separator token. A token ending in the separator also counts, with the
/// separator stripped. `None` unless both parts are non-empty.
pub fn segment_citation(text: &str, separator: &str) -> Option<(Vec<String>, String)> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    for (i, t) in toks.iter().enumerate() {
        let (mut authors, rest): (Vec<String>, _) = if *t == separator {
            (toks[..i].iter().map(|s| s.to_string()).collect(), &toks[i + 1..])
        } else if let Some(head) = t.strip_suffix(separator).filter(|h| !h.is_empty()) {
            let mut a: Vec<String> = toks[..i].iter().map(|s| s.to_string()).collect();
            a.push(head.to_string());
            (a, &toks[i + 1..])
        } else {
            continue;
        };
        authors.retain(|a| !a.is_empty());
        if authors.is_empty() || rest.is_empty() {
            return None;
        }
        return Some((authors, rest.join(" ")));
    }
    None
}

/// Where the citation model keeps its pieces, found by name: `PubCited`
/// and `Text` over the citation type, and optionally `Title`,
/// `NumAuthors`, `NthAuthor` and `Name`. Author attributes are used only
/// when all three author functions exist.
#[derive(Clone, Debug)]
pub struct CitationSchema {
    pub citation: TypeId,
    pub publication: TypeId,
    pub pub_cited: FuncId,
    pub text: FuncId,
    pub title: Option<FuncId>,
    pub authors: Option<AuthorSchema>,
    pub separator: String,
}

#[derive(Clone, Copy, Debug)]
pub struct AuthorSchema {
    pub researcher: TypeId,
    pub num_authors: FuncId,
    pub nth_author: FuncId,
    pub name: FuncId,
}

impl CitationSchema {
    pub fn detect(model: &Model) -> Result<CitationSchema, EngineError> {
        let err = |m: &str| EngineError::Config(format!("citation model: {m}"));
        let func = |name: &str, arity: usize| {
            model
                .func_id(name)
                .filter(|f| model.func(*f).arg_types.len() == arity)
        };
        let pub_cited = func("PubCited", 1).ok_or_else(|| err("needs PubCited(c)"))?;
        let text = func("Text", 1).ok_or_else(|| err("needs Text(c)"))?;
        let citation = model.func(pub_cited).arg_types[0];
        let publication = model.func(pub_cited).ret;
        if model.func(text).arg_types[0] != citation {
            return Err(err("Text and PubCited take different types"));
        }
        if model.number_statement(publication).is_none() || model.guaranteed_count(publication) > 0 {
            return Err(err("publications must be unknown objects with a number statement"));
        }
        let title = func("Title", 1).filter(|f| model.func(*f).arg_types[0] == publication);
        let authors = match (func("NumAuthors", 1), func("NthAuthor", 2), func("Name", 1)) {
            (Some(num_authors), Some(nth_author), Some(name)) => {
                let researcher = model.func(nth_author).ret;
                if model.func(name).arg_types[0] != researcher {
                    return Err(err("Name must take the type NthAuthor returns"));
                }
                if model.guaranteed_count(researcher) > 0 || model.number_statement(researcher).is_none() {
                    return Err(err("researchers must be unknown objects with a number statement"));
                }
                Some(AuthorSchema {
                    researcher,
                    num_authors,
                    nth_author,
                    name,
                })
            }
            _ => None,
        };
        Ok(CitationSchema {
            citation,
            publication,
            pub_cited,
            text,
            title,
            authors,
            separator: ".".into(),
        })
    }

    pub fn citation_count(&self, model: &Model) -> usize {
        model.guaranteed_count(self.citation) as usize
    }

    pub fn citation(&self, index: usize) -> Value {
        Value::Obj(ObjRef::Guaranteed {
            ty: self.citation,
            index: index as u32,
        })
    }

    pub fn pub_cited_var(&self, index: usize) -> BasicVar {
        BasicVar::app(self.pub_cited, vec![self.citation(index)])
    }

    pub fn text_var(&self, index: usize) -> BasicVar {
        BasicVar::app(self.text, vec![self.citation(index)])
    }

    /// Whether `var` is one of the attributes the proposal sets.
    pub fn is_attribute(&self, var: &BasicVar) -> bool {
        let BasicVar::App(f, _) = var else { return false };
        Some(*f) == self.title
            || self
                .authors
                .is_some_and(|a| *f == a.num_authors || *f == a.nth_author || *f == a.name)
    }

    /// Title and author names read off a citation text.
    pub fn extract(&self, text: &str) -> Extracted {
        if self.authors.is_none() {
            let t = text.split_whitespace().collect::<Vec<_>>().join(" ");
            return Extracted {
                title: (!t.is_empty()).then_some(t),
                authors: None,
            };
        }
        match segment_citation(text, &self.separator) {
            Some((a, t)) => Extracted {
                title: Some(t),
                authors: Some(a),
            },
            None => Extracted::default(),
        }
    }

    /// Possible readings of a citation text. A text with no usable
    /// separator is read once for each token that could be a corrupted
    /// separator, with authors before it and the title after it.
    pub fn readings(&self, text: &str) -> Vec<Extracted> {
        let ex = self.extract(text);
        if ex.title.is_some() || self.authors.is_none() {
            return vec![ex];
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        let out: Vec<Extracted> = (1..toks.len().saturating_sub(1))
            .map(|k| Extracted {
                title: Some(toks[k + 1..].join(" ")),
                authors: Some(toks[..k].iter().map(|t| t.to_string()).collect()),
            })
            .collect();
        if out.is_empty() {
            vec![ex]
        } else {
            out
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Extracted {
    pub title: Option<String>,
    pub authors: Option<Vec<String>>,
}

/// A publication's attribute values with the distributions they are drawn
/// from.
struct Gathered {
    title: Option<(Dist, Value)>,
    count: Option<(Dist, Value)>,
    /// Author slot distribution, researcher, and its name.
    authors: Vec<(Dist, Value, Option<(Dist, Value)>)>,
}

fn dist_at<W: WorldView + ?Sized>(model: &Model, w: &W, var: &BasicVar) -> Result<Dist, EngineError> {
    evaluate_dependency(model, w, var)?
        .dist
        .ok_or_else(|| EngineError::Contract(format!("{} is unsupported", model.show_var(var))))
}

fn value_at<W: WorldView + ?Sized>(model: &Model, w: &W, var: &BasicVar) -> Result<Value, EngineError> {
    w.get(var)
        .cloned()
        .ok_or_else(|| EngineError::Contract(format!("{} is not instantiated", model.show_var(var))))
}

/// Proposes a publication's attributes from the text of one citation
/// chosen uniformly among a set of donors, read one of its possible ways
/// chosen uniformly (see [`CitationSchema::readings`]). Each attribute copies what the
/// text shows with probability `1 - rho` and is drawn from its prior
/// otherwise, or always from the prior when the text shows nothing for it.
/// Author slots always get fresh researchers.
#[derive(Clone, Debug)]
pub struct AttributeProposal {
    pub schema: CitationSchema,
    pub rho: f64,
    extracted: Vec<Vec<Extracted>>,
}

impl AttributeProposal {
    /// `texts[i]` is the text of citation `i`, if observed.
    pub fn new(schema: CitationSchema, rho: f64, texts: &[Option<String>]) -> AttributeProposal {
        let extracted = texts
            .iter()
            .map(|t| t.as_deref().map(|t| schema.readings(t)).unwrap_or_else(|| vec![Extracted::default()]))
            .collect();
        AttributeProposal { schema, rho, extracted }
    }

    /// Uses one precomputed reading per citation.
    pub fn with_extracted(schema: CitationSchema, rho: f64, extracted: Vec<Extracted>) -> AttributeProposal {
        AttributeProposal {
            schema,
            rho,
            extracted: extracted.into_iter().map(|e| vec![e]).collect(),
        }
    }

    pub fn readings(&self, citation: usize) -> &[Extracted] {
        &self.extracted[citation]
    }

    fn pick(&self, dist: &Dist, cand: Option<Value>, rng: &mut ChainRng) -> Value {
        match cand {
            Some(c) if rng.gen::<f64>() >= self.rho => c,
            _ => dist.sample(rng),
        }
    }

    fn mix(&self, dist: &Dist, v: &Value, cand: Option<Value>) -> f64 {
        let prior = dist.log_mass(v);
        match cand {
            None => prior,
            Some(c) if c == *v => {
                let keep = 1.0 - self.rho;
                if keep > 0.0 {
                    keep.ln() + (self.rho * (prior - keep.ln()).exp()).ln_1p()
                } else {
                    self.rho.ln() + prior
                }
            }
            Some(_) => self.rho.ln() + prior,
        }
    }

    /// Sets new attributes for `publication` and returns their log
    /// proposal mass, marginal over the donor choice.
    pub fn propose(
        &self,
        ctx: &mut ProposalCtx<'_, '_>,
        publication: &Value,
        donors: &[usize],
        rng: &mut ChainRng,
    ) -> Result<f64, EngineError> {
        let model = ctx.model();
        let readings = &self.extracted[donors[rng.gen_range(0..donors.len())]];
        let ex = &readings[rng.gen_range(0..readings.len())];
        if let Some(tf) = self.schema.title {
            let var = BasicVar::app(tf, vec![publication.clone()]);
            let dist = dist_at(model, &*ctx, &var)?;
            let v = self.pick(&dist, ex.title.as_deref().map(Value::str), rng);
            ctx.set(var, v);
        }
        if let Some(a) = self.schema.authors {
            let var = BasicVar::app(a.num_authors, vec![publication.clone()]);
            let dist = dist_at(model, &*ctx, &var)?;
            let cand = ex.authors.as_ref().map(|v| Value::Nat(v.len() as u64));
            let k = self.pick(&dist, cand, rng);
            ctx.set(var, k.clone());
            for n in 0..k.as_nat().unwrap_or(0) {
                let slot = BasicVar::app(a.nth_author, vec![publication.clone(), Value::Nat(n)]);
                let dist = dist_at(model, &*ctx, &slot)?;
                let (r, _) = super::draw(ctx, &dist, None, false, rng);
                ctx.set(slot, r.clone());
                if !r.is_null() {
                    let name = BasicVar::app(a.name, vec![r]);
                    let dist = dist_at(model, &*ctx, &name)?;
                    let cand = ex.authors.as_ref().and_then(|v| v.get(n as usize)).map(|s| Value::str(s));
                    let v = self.pick(&dist, cand, rng);
                    ctx.set(name, v);
                }
            }
        }
        let g = self.gather(model, &*ctx, publication)?;
        Ok(self.mass(ctx, &g, donors))
    }

    /// Log mass [`AttributeProposal::propose`] gives the attributes
    /// `publication` has in the base state. `-inf` when the base shares one
    /// of its researchers or the patched state still refers to one, since
    /// the proposal only draws fresh researchers. Call after pruning.
    pub fn base_mass(
        &self,
        ctx: &mut ProposalCtx<'_, '_>,
        publication: &Value,
        donors: &[usize],
    ) -> Result<f64, EngineError> {
        let base = ctx.base;
        let g = self.gather(ctx.model(), base, publication)?;
        for (_, r, _) in &g.authors {
            if let Some(id) = r.as_ident() {
                if base.ident_holders(id) != 1 || ctx.world().ident_refs(id) > 0 {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
        Ok(self.mass(ctx, &g, donors))
    }

    fn gather<W: WorldView + ?Sized>(&self, model: &Model, w: &W, publication: &Value) -> Result<Gathered, EngineError> {
        let mut g = Gathered {
            title: None,
            count: None,
            authors: Vec::new(),
        };
        if let Some(tf) = self.schema.title {
            let var = BasicVar::app(tf, vec![publication.clone()]);
            g.title = Some((dist_at(model, w, &var)?, value_at(model, w, &var)?));
        }
        if let Some(a) = self.schema.authors {
            let var = BasicVar::app(a.num_authors, vec![publication.clone()]);
            let k = value_at(model, w, &var)?;
            g.count = Some((dist_at(model, w, &var)?, k.clone()));
            for n in 0..k.as_nat().unwrap_or(0) {
                let slot = BasicVar::app(a.nth_author, vec![publication.clone(), Value::Nat(n)]);
                let r = value_at(model, w, &slot)?;
                let name = if r.is_null() {
                    None
                } else {
                    let var = BasicVar::app(a.name, vec![r.clone()]);
                    Some((dist_at(model, w, &var)?, value_at(model, w, &var)?))
                };
                g.authors.push((dist_at(model, w, &slot)?, r, name));
            }
        }
        Ok(g)
    }

    fn mass(&self, ctx: &mut ProposalCtx<'_, '_>, g: &Gathered, donors: &[usize]) -> f64 {
        let per_donor: Vec<f64> = donors
            .iter()
            .flat_map(|&d| {
                let readings = &self.extracted[d];
                let w = -(readings.len() as f64).ln();
                readings.iter().map(move |ex| (w, ex))
            })
            .map(|(w, ex)| {
                let mut m = w;
                if let Some((dist, v)) = &g.title {
                    m += self.mix(dist, v, ex.title.as_deref().map(Value::str));
                }
                if let Some((dist, v)) = &g.count {
                    m += self.mix(dist, v, ex.authors.as_ref().map(|a| Value::Nat(a.len() as u64)));
                }
                for (n, (_, _, name)) in g.authors.iter().enumerate() {
                    if let Some((dist, v)) = name {
                        let cand = ex.authors.as_ref().and_then(|a| a.get(n)).map(|s| Value::str(s));
                        m += self.mix(dist, v, cand);
                    }
                }
                m
            })
            .collect();
        let mut total = log_mean_exp(&per_donor) + (per_donor.len() as f64 / donors.len() as f64).ln();
        for (dist, r, _) in &g.authors {
            total += choice_log_mass(ctx, dist, r, None, false);
        }
        total
    }
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    let s: f64 = xs.iter().map(|x| (x - hi).exp()).sum();
    hi + (s / xs.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments() {
        assert_eq!(
            segment_citation("a b. title words", "."),
            Some((vec!["a".into(), "b".into()], "title words".into()))
        );
        assert_eq!(
            segment_citation("ann bob . deep nets", "."),
            Some((vec!["ann".into(), "bob".into()], "deep nets".into()))
        );
        assert_eq!(segment_citation("no separator here", "."), None);
        assert_eq!(segment_citation(". title", "."), None);
        assert_eq!(segment_citation("ann .", "."), None);
    }

    #[test]
    fn mean_of_logs() {
        let m = log_mean_exp(&[0.5f64.ln(), 0.25f64.ln()]);
        assert!((m - 0.375f64.ln()).abs() < 1e-12);
        assert_eq!(log_mean_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
