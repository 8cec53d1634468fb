//! Citation matching benchmark: datasets, synthetic generation, runs and
//! reports.

mod dataset;
mod run;

pub use dataset::{cluster_accuracy, partition_from_labels, CitationDataset, Record};
pub use run::{run_citebench, ChainReport, ConfigEcho, MoveCount, Pooled, ProposerKind, RunOptions, RunReport};

use rand::SeedableRng;
use thiserror::Error;

use crate::engine::{ChainRng, EngineError};
use crate::model::Model;
use crate::parser::{parse_model, ParseError};
use crate::proposers::CitationSchema;
use crate::value::{BasicVar, ObjRef, Value};
use crate::world::forward_sample;

/// The default citation model. Citations are declared separately, see
/// [`citation_model`].
pub const CITATION_MODEL: &str = include_str!("../../models/citations.blog");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CitebenchError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: citation `{id}` has empty text")]
    EmptyText { id: String, line: usize },
    #[error("{0}")]
    Universe(String),
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub fn render_errors(errs: &[ParseError]) -> String {
    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
}

/// Parses a citation model after declaring citations `C1` .. `Cn`.
pub fn citation_model(source: &str, n: usize) -> Result<Model, CitebenchError> {
    let names: Vec<String> = (1..=n).map(|i| format!("C{i}")).collect();
    let src = format!("{source}\nguaranteed Cit {};\n", names.join(", "));
    parse_model(&src).map_err(|e| CitebenchError::Model(render_errors(&e)))
}

/// Observed texts: record `i` is citation `C{i+1}`.
pub fn evidence(model: &Model, dataset: &CitationDataset) -> Result<Vec<(BasicVar, Value)>, CitebenchError> {
    let schema = CitationSchema::detect(model)?;
    if schema.citation_count(model) != dataset.len() {
        return Err(CitebenchError::Model(format!(
            "model declares {} citations, dataset has {}",
            schema.citation_count(model),
            dataset.len()
        )));
    }
    Ok(dataset
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (schema.text_var(i), Value::str(&r.text)))
        .collect())
}

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub citations: usize,
    /// Fixes the number of publications instead of drawing it.
    pub publications: Option<u64>,
}

impl SyntheticConfig {
    /// `n` citations over about `n / 3` publications.
    pub fn new(n: usize) -> SyntheticConfig {
        SyntheticConfig {
            citations: n,
            publications: Some((n as u64 / 3).max(1)),
        }
    }
}

/// Forward-samples a world of the citation model in `source` and returns
/// the citation texts, labelled by the publication each one cites.
pub fn generate_synthetic(source: &str, cfg: &SyntheticConfig, seed: u64) -> Result<CitationDataset, CitebenchError> {
    let n = cfg.citations;
    let model = citation_model(source, n)?;
    let schema = CitationSchema::detect(&model)?;
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(3);
    let fixed: Vec<(BasicVar, Value)> = cfg
        .publications
        .map(|k| vec![(BasicVar::Number(schema.publication), Value::Nat(k))])
        .unwrap_or_default();
    let targets: Vec<BasicVar> = (0..n).map(|i| schema.text_var(i)).collect();
    let w = forward_sample(&model, &targets, &fixed, &mut rng).map_err(EngineError::from)?;
    let width = n.to_string().len();
    let records = (0..n)
        .map(|i| {
            let gold = match w.get(&schema.pub_cited_var(i)) {
                Some(Value::Obj(ObjRef::Numbered { index, .. })) => format!("p{index}"),
                Some(v) => model.show_value(v),
                None => "none".into(),
            };
            let text = w
                .get(&schema.text_var(i))
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            Record {
                id: format!("c{:0width$}", i + 1),
                gold,
                text,
            }
        })
        .collect();
    Ok(CitationDataset { records })
}
