use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::Serialize;

use super::CitebenchError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Record {
    pub id: String,
    pub gold: String,
    pub text: String,
}

/// Citations with their true clustering.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CitationDataset {
    pub records: Vec<Record>,
}

impl CitationDataset {
    /// Parses `id<TAB>gold<TAB>text` lines. Blank lines and lines starting
    /// with `#` are skipped; CRLF endings are accepted.
    pub fn parse_tsv(text: &str) -> Result<CitationDataset, CitebenchError> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.split('\n').enumerate() {
            let line_no = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(id), Some(gold), Some(text)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(CitebenchError::Line {
                    line: line_no,
                    msg: "expected id<TAB>gold<TAB>text".into(),
                });
            };
            let id = id.trim();
            if id.is_empty() {
                return Err(CitebenchError::Line {
                    line: line_no,
                    msg: "empty id".into(),
                });
            }
            if !seen.insert(id.to_string()) {
                return Err(CitebenchError::DuplicateId {
                    id: id.into(),
                    line: line_no,
                });
            }
            let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
            if text.is_empty() {
                return Err(CitebenchError::EmptyText {
                    id: id.into(),
                    line: line_no,
                });
            }
            records.push(Record {
                id: id.into(),
                gold: gold.trim().into(),
                text,
            });
        }
        Ok(CitationDataset { records })
    }

    pub fn load(path: &Path) -> Result<CitationDataset, CitebenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| CitebenchError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        CitationDataset::parse_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        self.records
            .iter()
            .map(|r| format!("{}\t{}\t{}\n", r.id, r.gold, r.text))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    pub fn gold_partition(&self) -> Vec<Vec<String>> {
        let labels: Vec<&str> = self.records.iter().map(|r| r.gold.as_str()).collect();
        partition_from_labels(&self.ids(), &labels)
    }
}

/// Groups ids by label. Clusters and their members are sorted.
pub fn partition_from_labels<L: Ord>(ids: &[String], labels: &[L]) -> Vec<Vec<String>> {
    let mut groups: BTreeMap<&L, Vec<String>> = BTreeMap::new();
    for (id, l) in ids.iter().zip(labels) {
        groups.entry(l).or_default().push(id.clone());
    }
    let mut out: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    out.sort();
    out
}

fn universe(p: &[Vec<String>], what: &str) -> Result<BTreeSet<String>, CitebenchError> {
    let mut u = BTreeSet::new();
    for id in p.iter().flatten() {
        if !u.insert(id.clone()) {
            return Err(CitebenchError::Universe(format!("{id} occurs twice in the {what} clustering")));
        }
    }
    Ok(u)
}

/// Fraction of gold clusters that appear exactly as a predicted cluster.
pub fn cluster_accuracy(predicted: &[Vec<String>], gold: &[Vec<String>]) -> Result<f64, CitebenchError> {
    let up = universe(predicted, "predicted")?;
    let ug = universe(gold, "gold")?;
    if up != ug {
        let extra = up.symmetric_difference(&ug).next().cloned().unwrap_or_default();
        return Err(CitebenchError::Universe(format!(
            "clusterings cover different citations (e.g. {extra})"
        )));
    }
    if gold.is_empty() {
        return Ok(1.0);
    }
    let norm = |c: &Vec<String>| {
        let mut c = c.clone();
        c.sort();
        c
    };
    let pred: HashSet<Vec<String>> = predicted.iter().map(norm).collect();
    let hit = gold.iter().filter(|g| pred.contains(&norm(g))).count();
    Ok(hit as f64 / gold.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(groups: &[&[&str]]) -> Vec<Vec<String>> {
        groups.iter().map(|g| g.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn accuracy_counts_exact_matches() {
        let a = p(&[&["1", "2"], &["3"]]);
        let b = p(&[&["1"], &["2"], &["3"]]);
        assert_eq!(cluster_accuracy(&a, &a).unwrap(), 1.0);
        assert!((cluster_accuracy(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cluster_accuracy(&b, &a).unwrap(), 0.5);
        assert_eq!(cluster_accuracy(&p(&[&["3"], &["2", "1"]]), &a).unwrap(), 1.0);
        assert!(cluster_accuracy(&p(&[&["1", "2"]]), &a).is_err());
        assert!(cluster_accuracy(&p(&[&["1", "2"], &["3", "1"]]), &a).is_err());
    }

    #[test]
    fn tsv_parsing() {
        let lf = "a\tg1\tann . deep nets\nb\tg1\tann . deep nets\nc\tg2\tbob . trees\n";
        let d = CitationDataset::parse_tsv(lf).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(CitationDataset::parse_tsv(&lf.replace('\n', "\r\n")).unwrap(), d);
        assert_eq!(CitationDataset::parse_tsv(&d.to_tsv()).unwrap(), d);
        let dup = CitationDataset::parse_tsv("a\tg\tx\na\tg\ty\n").unwrap_err();
        assert!(dup.to_string().contains("`a`"), "{dup}");
        assert!(matches!(
            CitationDataset::parse_tsv("a\tg\t  \n"),
            Err(CitebenchError::EmptyText { .. })
        ));
        assert!(matches!(
            CitationDataset::parse_tsv("ok\tg\tx\nbroken line\n"),
            Err(CitebenchError::Line { line: 2, .. })
        ));
    }
}
