use std::collections::{BTreeSet, HashMap};

/// Lowercased alphanumeric tokens of a text.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Jaccard similarity of two token sets; two empty sets are identical.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Overlapping groups of similar citations, by citation index.
#[derive(Clone, Debug, PartialEq)]
pub struct Canopies {
    groups: Vec<Vec<usize>>,
    /// Groups with at least two members.
    usable: Vec<usize>,
    /// Groups containing each citation.
    of: Vec<Vec<usize>>,
}

impl Canopies {
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Indices of groups with at least two members.
    pub fn usable(&self) -> &[usize] {
        &self.usable
    }

    pub fn containing(&self, citation: usize) -> &[usize] {
        &self.of[citation]
    }

    /// Probability of drawing the ordered pair `(a, b)` by picking a usable
    /// group uniformly and then two distinct members uniformly.
    pub fn pair_probability(&self, a: usize, b: usize) -> f64 {
        if a == b || self.usable.is_empty() {
            return 0.0;
        }
        let mut p = 0.0;
        for &g in &self.of[a] {
            let members = &self.groups[g];
            if members.len() >= 2 && members.binary_search(&b).is_ok() {
                let k = members.len() as f64;
                p += 1.0 / (k * (k - 1.0));
            }
        }
        p / self.usable.len() as f64
    }
}

/// Groups citations by token overlap: each citation's group holds it and
/// every citation within `theta` of it. Identical groups are kept once, so
/// an isolated citation is a singleton and a tight cluster is one group.
pub fn build_canopies<S: AsRef<str>>(texts: &[S], theta: f64) -> Canopies {
    let n = texts.len();
    let toks: Vec<BTreeSet<String>> = texts.iter().map(|t| tokenize(t.as_ref())).collect();

    let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, ts) in toks.iter().enumerate() {
        for t in ts {
            index.entry(t.as_str()).or_default().push(i);
        }
    }
    // Only citations sharing a token can reach a positive threshold.
    let group = |i: usize| -> Vec<usize> {
        if theta <= 0.0 {
            return (0..n).collect();
        }
        let mut cand: BTreeSet<usize> = BTreeSet::new();
        for t in &toks[i] {
            cand.extend(index[t.as_str()].iter().copied());
        }
        if toks[i].is_empty() {
            cand.extend((0..n).filter(|&j| toks[j].is_empty()));
        }
        cand.insert(i);
        cand.into_iter()
            .filter(|&j| j == i || jaccard(&toks[i], &toks[j]) >= theta)
            .collect()
    };

    let mut seen = BTreeSet::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let g = group(i);
        if seen.insert(g.clone()) {
            groups.push(g);
        }
    }
    let mut of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (gi, g) in groups.iter().enumerate() {
        for &m in g {
            of[m].push(gi);
        }
    }
    let usable = (0..groups.len()).filter(|g| groups[*g].len() >= 2).collect();
    Canopies { groups, usable, of }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_overlap() {
        let a = tokenize("Learning to parse citations.");
        let b = tokenize("parse citations QUICKLY");
        assert!((jaccard(&a, &b) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn grouping() {
        let c = build_canopies(&["a b c", "a b c", "x y z", "learning to parse citations", "parse citations quickly"], 0.25);
        let together = |i, j| c.containing(i).iter().any(|g| c.groups()[*g].contains(&j));
        assert!(together(0, 1));
        assert!(!together(0, 2));
        assert!(together(3, 4));
        assert_eq!(c.groups().iter().filter(|g| g.contains(&2)).count(), 1);
        let total: f64 = (0..5)
            .flat_map(|a| (0..5).map(move |b| (a, b)))
            .map(|(a, b)| c.pair_probability(a, b))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_threshold_is_one_group() {
        let c = build_canopies(&["a", "b", "c"], 0.0);
        assert_eq!(c.groups(), &[vec![0, 1, 2]]);
    }
}
