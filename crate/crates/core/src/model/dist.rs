use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use crate::value::{ObjRef, TypeId, Value};

/// Parameters of the token-string model. Without a source it is a prior over
/// space-separated token sequences (geometric length, uniform tokens); with a
/// source string it is an observation model that keeps each source token with
/// probability `1 - eps` and otherwise replaces it with a uniform vocabulary
/// token.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenStringSpec {
    pub vocab: Vec<Arc<str>>,
    vocab_set: HashSet<Arc<str>>,
    /// Stopping probability of the geometric length (length >= 1).
    pub p: f64,
    pub eps: f64,
}

impl TokenStringSpec {
    pub fn new(vocab: Vec<Arc<str>>, p: f64, eps: f64) -> TokenStringSpec {
        let vocab_set = vocab.iter().cloned().collect();
        TokenStringSpec {
            vocab,
            vocab_set,
            p,
            eps,
        }
    }

    pub fn from_text(vocab: &str, p: f64, eps: f64) -> TokenStringSpec {
        let mut seen = HashSet::new();
        let words = vocab
            .split_whitespace()
            .filter(|w| seen.insert(*w))
            .map(Arc::from)
            .collect();
        TokenStringSpec::new(words, p, eps)
    }

    pub fn in_vocab(&self, tok: &str) -> bool {
        self.vocab_set.contains(tok)
    }

    /// Log prior mass of a string.
    pub fn prior_log_mass(&self, s: &str) -> f64 {
        let toks: Vec<&str> = s.split(' ').collect();
        if s.is_empty() || toks.iter().any(|t| t.is_empty() || !self.in_vocab(t)) {
            return f64::NEG_INFINITY;
        }
        let len = toks.len() as f64;
        let geo = if self.p >= 1.0 {
            if toks.len() == 1 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (len - 1.0) * (1.0 - self.p).ln() + self.p.ln()
        };
        geo - len * (self.vocab.len() as f64).ln()
    }

    /// Log mass of observing `obs` given the source string.
    pub fn obs_log_mass(&self, source: &str, obs: &str) -> f64 {
        let src = tokens(source);
        let out = tokens(obs);
        if src.len() != out.len() || (obs.is_empty() != source.is_empty()) {
            return f64::NEG_INFINITY;
        }
        if tokens(obs).join(" ") != obs {
            return f64::NEG_INFINITY;
        }
        let v = self.vocab.len() as f64;
        let mut lp = 0.0;
        for (s, o) in src.iter().zip(&out) {
            let mut m = 0.0;
            if s == o {
                m += 1.0 - self.eps;
            }
            if self.in_vocab(o) {
                m += self.eps / v;
            }
            if m <= 0.0 {
                return f64::NEG_INFINITY;
            }
            lp += m.ln();
        }
        lp
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let mut toks = Vec::new();
        loop {
            toks.push(self.vocab[rng.gen_range(0..self.vocab.len())].clone());
            if self.p >= 1.0 || rng.gen::<f64>() < self.p {
                break;
            }
        }
        toks.join(" ")
    }

    pub fn sample_obs<R: Rng + ?Sized>(&self, source: &str, rng: &mut R) -> String {
        tokens(source)
            .into_iter()
            .map(|t| {
                if rng.gen::<f64>() < self.eps {
                    self.vocab[rng.gen_range(0..self.vocab.len())].to_string()
                } else {
                    t.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// A fully parameterized distribution over values, produced by evaluating a
/// dependency statement in a world.
#[derive(Clone, Debug, PartialEq)]
pub enum Dist {
    Point(Value),
    Categorical(Arc<[(Value, f64)]>),
    Bernoulli(f64),
    /// Uniform over `guaranteed` guaranteed objects plus `number`
    /// non-guaranteed objects of `ty`.
    UniformObjects {
        ty: TypeId,
        guaranteed: u32,
        number: u64,
    },
    UniformInt {
        lo: u64,
        hi: u64,
    },
    Poisson(f64),
    Geometric(f64),
    NoisyCopy {
        source: bool,
        fidelity: f64,
    },
    TokenString {
        spec: Arc<TokenStringSpec>,
        source: Option<Arc<str>>,
    },
    ConcatFormat {
        parts: Vec<Arc<str>>,
        sep: Arc<str>,
        alt: Arc<str>,
        eps: f64,
    },
}

fn log_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

impl Dist {
    /// Pointwise log probability mass.
    pub fn log_mass(&self, v: &Value) -> f64 {
        let ninf = f64::NEG_INFINITY;
        match self {
            Dist::Point(p) => {
                if p == v {
                    0.0
                } else {
                    ninf
                }
            }
            Dist::Categorical(entries) => {
                let m: f64 = entries.iter().filter(|(x, _)| x == v).map(|(_, w)| *w).sum();
                m.ln()
            }
            Dist::Bernoulli(p) => match v {
                Value::Bool(true) => p.ln(),
                Value::Bool(false) => (1.0 - p).ln(),
                _ => ninf,
            },
            Dist::UniformObjects {
                ty,
                guaranteed,
                number,
            } => {
                let total = *guaranteed as u64 + number;
                if total == 0 {
                    return if v.is_null() { 0.0 } else { ninf };
                }
                let ok = match v {
                    Value::Obj(ObjRef::Guaranteed { ty: t, index }) => t == ty && index < guaranteed,
                    Value::Obj(ObjRef::Numbered { ty: t, index }) => {
                        t == ty && *index >= 1 && (*index as u64) <= *number
                    }
                    Value::Obj(ObjRef::Ident(id)) => id.ty == *ty && *number > 0,
                    _ => false,
                };
                if ok {
                    -(total as f64).ln()
                } else {
                    ninf
                }
            }
            Dist::UniformInt { lo, hi } => match v {
                Value::Nat(n) if lo <= hi && n >= lo && n <= hi => -((hi - lo + 1) as f64).ln(),
                _ => ninf,
            },
            Dist::Poisson(lambda) => match v {
                Value::Nat(n) => {
                    if *lambda == 0.0 {
                        return if *n == 0 { 0.0 } else { ninf };
                    }
                    -lambda + (*n as f64) * lambda.ln() - log_factorial(*n)
                }
                _ => ninf,
            },
            Dist::Geometric(p) => match v {
                Value::Nat(n) => {
                    if *p >= 1.0 {
                        return if *n == 0 { 0.0 } else { ninf };
                    }
                    (*n as f64) * (1.0 - p).ln() + p.ln()
                }
                _ => ninf,
            },
            Dist::NoisyCopy { source, fidelity } => match v {
                Value::Bool(b) if b == source => fidelity.ln(),
                Value::Bool(_) => (1.0 - fidelity).ln(),
                _ => ninf,
            },
            Dist::TokenString { spec, source } => match (v, source) {
                (Value::Str(s), None) => spec.prior_log_mass(s),
                (Value::Str(s), Some(src)) => spec.obs_log_mass(src, s),
                _ => ninf,
            },
            Dist::ConcatFormat {
                parts,
                sep,
                alt,
                eps,
            } => match v {
                Value::Str(s) => concat_log_mass(parts, sep, alt, *eps, s),
                _ => ninf,
            },
        }
    }

    /// Draws a value. Uniform choices over non-guaranteed objects return
    /// numbered objects; identifier-based sampling is done by the caller.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            Dist::Point(v) => v.clone(),
            Dist::Categorical(entries) => {
                let total: f64 = entries.iter().map(|(_, w)| *w).sum();
                let mut u = rng.gen::<f64>() * total;
                for (x, w) in entries.iter() {
                    if u < *w {
                        return x.clone();
                    }
                    u -= w;
                }
                entries
                    .iter()
                    .rev()
                    .find(|(_, w)| *w > 0.0)
                    .map(|(x, _)| x.clone())
                    .unwrap_or(Value::Null)
            }
            Dist::Bernoulli(p) => Value::Bool(rng.gen::<f64>() < *p),
            Dist::UniformObjects {
                ty,
                guaranteed,
                number,
            } => {
                let total = *guaranteed as u64 + number;
                if total == 0 {
                    return Value::Null;
                }
                let k = rng.gen_range(0..total);
                if k < *guaranteed as u64 {
                    Value::Obj(ObjRef::Guaranteed {
                        ty: *ty,
                        index: k as u32,
                    })
                } else {
                    Value::Obj(ObjRef::Numbered {
                        ty: *ty,
                        index: (k - *guaranteed as u64 + 1) as u32,
                    })
                }
            }
            Dist::UniformInt { lo, hi } => Value::Nat(rng.gen_range(*lo..=*hi)),
            Dist::Poisson(lambda) => {
                // Inversion by sequential search; lambda is small at desk scale.
                let u = rng.gen::<f64>();
                let mut k = 0u64;
                let mut lp = -lambda;
                let mut cdf = lp.exp();
                while u > cdf && k < 100_000 {
                    k += 1;
                    lp += lambda.ln() - (k as f64).ln();
                    cdf += lp.exp();
                }
                Value::Nat(k)
            }
            Dist::Geometric(p) => {
                let mut k = 0;
                while rng.gen::<f64>() >= *p {
                    k += 1;
                }
                Value::Nat(k)
            }
            Dist::NoisyCopy { source, fidelity } => {
                if rng.gen::<f64>() < *fidelity {
                    Value::Bool(*source)
                } else {
                    Value::Bool(!source)
                }
            }
            Dist::TokenString { spec, source } => match source {
                None => Value::str(&spec.sample_prior(rng)),
                Some(src) => Value::str(&spec.sample_obs(src, rng)),
            },
            Dist::ConcatFormat {
                parts,
                sep,
                alt,
                eps,
            } => {
                let mut s = String::new();
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        s.push_str(if rng.gen::<f64>() < *eps { alt } else { sep });
                        s.push(' ');
                    }
                    s.push_str(p);
                }
                Value::str(&s)
            }
        }
    }

    /// The full support with masses, when finite and small enough to list.
    /// Zero-mass entries are omitted.
    pub fn finite_support(&self) -> Option<Vec<(Value, f64)>> {
        let out: Vec<(Value, f64)> = match self {
            Dist::Point(v) => vec![(v.clone(), 1.0)],
            Dist::Categorical(entries) => {
                let mut out: Vec<(Value, f64)> = Vec::new();
                for (v, w) in entries.iter() {
                    if let Some(e) = out.iter_mut().find(|(x, _)| x == v) {
                        e.1 += w;
                    } else {
                        out.push((v.clone(), *w));
                    }
                }
                out
            }
            Dist::Bernoulli(p) => vec![(Value::Bool(true), *p), (Value::Bool(false), 1.0 - p)],
            Dist::UniformObjects {
                ty,
                guaranteed,
                number,
            } => {
                let total = *guaranteed as u64 + number;
                if total == 0 {
                    return Some(vec![(Value::Null, 1.0)]);
                }
                let w = 1.0 / total as f64;
                let g = (0..*guaranteed).map(|i| ObjRef::Guaranteed { ty: *ty, index: i });
                let n = (1..=*number as u32).map(|i| ObjRef::Numbered { ty: *ty, index: i });
                g.chain(n).map(|o| (Value::Obj(o), w)).collect()
            }
            Dist::UniformInt { lo, hi } => {
                if lo > hi {
                    return Some(Vec::new());
                }
                let w = 1.0 / (hi - lo + 1) as f64;
                (*lo..=*hi).map(|k| (Value::Nat(k), w)).collect()
            }
            Dist::Poisson(_) | Dist::Geometric(_) => return None,
            Dist::NoisyCopy { source, fidelity } => vec![
                (Value::Bool(*source), *fidelity),
                (Value::Bool(!source), 1.0 - fidelity),
            ],
            Dist::TokenString { spec, source: None } => {
                if spec.p < 1.0 {
                    return None;
                }
                let w = 1.0 / spec.vocab.len() as f64;
                spec.vocab.iter().map(|t| (Value::Str(t.clone()), w)).collect()
            }
            Dist::TokenString {
                spec,
                source: Some(src),
            } => {
                let src_toks = tokens(src);
                let mut acc: Vec<(String, f64)> = vec![(String::new(), 1.0)];
                for s in src_toks {
                    let mut options: Vec<&str> = spec.vocab.iter().map(|t| &**t).collect();
                    if !spec.in_vocab(s) {
                        options.push(s);
                    }
                    let mut next = Vec::with_capacity(acc.len() * options.len());
                    for (prefix, w) in &acc {
                        for o in &options {
                            let mut m = 0.0;
                            if *o == s {
                                m += 1.0 - spec.eps;
                            }
                            if spec.in_vocab(o) {
                                m += spec.eps / spec.vocab.len() as f64;
                            }
                            let text = if prefix.is_empty() {
                                o.to_string()
                            } else {
                                format!("{prefix} {o}")
                            };
                            next.push((text, w * m));
                        }
                    }
                    acc = next;
                    if acc.len() > 1_000_000 {
                        return None;
                    }
                }
                acc.into_iter().map(|(s, w)| (Value::str(&s), w)).collect()
            }
            Dist::ConcatFormat {
                parts,
                sep,
                alt,
                eps,
            } => {
                let mut acc: Vec<(String, f64)> = vec![(parts[0].to_string(), 1.0)];
                for p in &parts[1..] {
                    let mut next = Vec::new();
                    for (prefix, w) in &acc {
                        next.push((format!("{prefix}{sep} {p}"), w * (1.0 - eps)));
                        next.push((format!("{prefix}{alt} {p}"), w * eps));
                    }
                    acc = next;
                }
                acc.into_iter().map(|(s, w)| (Value::str(&s), w)).collect()
            }
        };
        Some(out.into_iter().filter(|(_, w)| *w > 0.0).collect())
    }
}

fn concat_log_mass(parts: &[Arc<str>], sep: &str, alt: &str, eps: f64, s: &str) -> f64 {
    let ninf = f64::NEG_INFINITY;
    let Some(mut rest) = s.strip_prefix(&*parts[0]) else {
        return ninf;
    };
    let mut lp = 0.0;
    for p in &parts[1..] {
        // Separators are distinct, so at most one branch matches a given
        // prefix when they differ in content.
        let mut best = ninf;
        let mut next = None;
        for (cand, mass) in [(sep, 1.0 - eps), (alt, eps)] {
            if mass <= 0.0 {
                continue;
            }
            if let Some(r) = rest.strip_prefix(cand).and_then(|r| r.strip_prefix(' ')) {
                if let Some(r2) = r.strip_prefix(&**p) {
                    if mass.ln() > best {
                        best = mass.ln();
                        next = Some(r2);
                    }
                }
            }
        }
        match next {
            Some(r) => {
                lp += best;
                rest = r;
            }
            None => return ninf,
        }
    }
    if rest.is_empty() {
        lp
    } else {
        ninf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(p: f64, eps: f64) -> Arc<TokenStringSpec> {
        Arc::new(TokenStringSpec::from_text("a b c", p, eps))
    }

    fn finite_kinds() -> Vec<Dist> {
        vec![
            Dist::Point(Value::Nat(3)),
            Dist::Categorical(Arc::from(vec![(Value::Nat(1), 0.5), (Value::Nat(2), 0.5)])),
            Dist::Bernoulli(0.7),
            Dist::UniformObjects {
                ty: TypeId(4),
                guaranteed: 2,
                number: 3,
            },
            Dist::UniformInt { lo: 2, hi: 6 },
            Dist::NoisyCopy {
                source: true,
                fidelity: 0.9,
            },
            Dist::TokenString {
                spec: spec(1.0, 0.1),
                source: None,
            },
            Dist::TokenString {
                spec: spec(0.3, 0.1),
                source: Some(Arc::from("a z c")),
            },
            Dist::ConcatFormat {
                parts: vec![Arc::from("x y"), Arc::from(""), Arc::from("t")],
                sep: Arc::from("."),
                alt: Arc::from(","),
                eps: 0.05,
            },
        ]
    }

    #[test]
    fn finite_masses_sum_to_one() {
        for d in finite_kinds() {
            let support = d.finite_support().unwrap();
            let total: f64 = support.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12, "{d:?} sums to {total}");
            for (v, w) in &support {
                assert!((d.log_mass(v) - w.ln()).abs() < 1e-12, "{d:?} at {v:?}");
            }
        }
    }

    #[test]
    fn sample_frequencies_match_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        for d in finite_kinds() {
            let support = d.finite_support().unwrap();
            let mut counts = vec![0usize; support.len()];
            for _ in 0..n {
                let v = d.sample(&mut rng);
                let i = support.iter().position(|(x, _)| *x == v).expect("sample in support");
                counts[i] += 1;
            }
            for ((v, w), c) in support.iter().zip(&counts) {
                let sd = (w * (1.0 - w) / n as f64).sqrt();
                let f = *c as f64 / n as f64;
                assert!((f - w).abs() <= 4.0 * sd + 1e-9, "{d:?} {v:?}: {f} vs {w}");
            }
        }
    }

    #[test]
    fn categorical_half_half_within_one_percent() {
        let d = Dist::Categorical(Arc::from(vec![(Value::Nat(1), 0.5), (Value::Nat(2), 0.5)]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ones = (0..100_000).filter(|_| d.sample(&mut rng) == Value::Nat(1)).count();
        assert!((ones as f64 / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn countable_kinds_sum_to_one() {
        let p = Dist::Poisson(3.5);
        let total: f64 = (0..80).map(|k| p.log_mass(&Value::Nat(k)).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let g = Dist::Geometric(0.4);
        let total: f64 = (0..200).map(|k| g.log_mass(&Value::Nat(k)).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let s = spec(0.5, 0.0);
        // Strings of length L: 3^L each with mass 0.5^L / 3^L.
        let mut total = 0.0;
        for len in 1..=40 {
            total += 0.5f64.powi(len);
        }
        let single: f64 = ["a", "b", "c"].iter().map(|t| s.prior_log_mass(t).exp()).sum();
        assert!((single - 0.5).abs() < 1e-12);
        assert!((total - 1.0).abs() < 1e-11);
    }

    #[test]
    fn bernoulli_one_always_true() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| Dist::Bernoulli(1.0).sample(&mut rng) == Value::Bool(true)));
    }

    #[test]
    fn concat_format_parses_separators() {
        let d = Dist::ConcatFormat {
            parts: vec![Arc::from("a b"), Arc::from("title words")],
            sep: Arc::from("."),
            alt: Arc::from(","),
            eps: 0.1,
        };
        assert!((d.log_mass(&Value::str("a b. title words")) - 0.9f64.ln()).abs() < 1e-12);
        assert!((d.log_mass(&Value::str("a b, title words")) - 0.1f64.ln()).abs() < 1e-12);
        assert_eq!(d.log_mass(&Value::str("a b title words")), f64::NEG_INFINITY);
    }
}
