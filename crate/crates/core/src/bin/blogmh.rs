use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use blogmh::citebench::{
    citation_model, generate_synthetic, render_errors, run_citebench, CitationDataset, CitebenchError, ConfigEcho,
    ProposerKind, RunOptions, SyntheticConfig, CITATION_MODEL,
};
use blogmh::engine::{pool_queries, run_chains, ChainConfig, ChainStats, EngineError, Problem, QueryEstimate};
use blogmh::model::Model;
use blogmh::oracle::{Bounds, Oracle, OracleError};
use blogmh::parser::{parse_assertions, parse_ground_term, parse_model, Assertions, Query};
use blogmh::proposers::{GenericResampler, SplitMerge, SplitMergeConfig};
use blogmh::selftest::run_selftest_with;

#[derive(Parser)]
#[command(name = "blogmh", version, about = "MCMC over relational models with unknown objects")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate query probabilities given evidence.
    Infer(InferArgs),
    /// Cluster citations and score the clustering against the gold labels.
    Citebench(CitebenchArgs),
    /// Exact posterior by enumeration on a bounded model.
    Oracle(OracleArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProposerArg {
    Generic,
    Splitmerge,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "generic")]
    proposer: ProposerArg,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long = "burnin", default_value_t = 0)]
    burn_in: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Canopy token-overlap threshold.
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    /// Chance of drawing a split-merge attribute from its prior.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check every state invariant on every step.
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    model: PathBuf,
    /// Evidence, queries and bounds, one statement per line.
    #[arg(long)]
    evidence: Vec<PathBuf>,
    #[arg(long)]
    queries: Vec<PathBuf>,
    /// A query term, e.g. "#Pub == 1".
    #[arg(long)]
    query: Vec<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CitebenchArgs {
    /// Citation model; defaults to the built-in one.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Dataset as `id<TAB>gold<TAB>text` lines.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    evidence: Option<PathBuf>,
    /// Generate this many synthetic citations from the model instead.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Seed for synthetic generation; defaults to --seed.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Also write the synthetic dataset here.
    #[arg(long)]
    write_dataset: Option<PathBuf>,
    #[arg(long)]
    queries: Vec<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    bounds: Vec<PathBuf>,
    #[arg(long)]
    evidence: Vec<PathBuf>,
    #[arg(long)]
    queries: Vec<PathBuf>,
    #[arg(long)]
    query: Vec<String>,
}

/// Exit status 2 for bad input, 1 for failures while running.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(m) => Failure::Usage(m),
            e => Failure::Run(e.to_string()),
        }
    }
}

impl From<CitebenchError> for Failure {
    fn from(e: CitebenchError) -> Self {
        match e {
            CitebenchError::Engine(e) => e.into(),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Unbounded(_) | OracleError::Query(_) => Failure::Usage(e.to_string()),
            e => Failure::Run(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    parse_model(&read(path)?).map_err(|e| Failure::Usage(format!("{}:\n{}", path.display(), render_errors(&e))))
}

fn load_assertions(model: &Model, files: &[PathBuf], terms: &[String]) -> Result<Assertions, Failure> {
    let mut all = Assertions::default();
    for f in files {
        let a = parse_assertions(model, &read(f)?)
            .map_err(|e| Failure::Usage(format!("{}:\n{}", f.display(), render_errors(&e))))?;
        all.extend(a);
    }
    for (i, t) in terms.iter().enumerate() {
        let term = parse_ground_term(model, t).map_err(|e| Failure::Usage(format!("--query {t}: {}", render_errors(&e))))?;
        all.queries.push(Query {
            name: format!("q{}", i + 1),
            term,
        });
    }
    Ok(all)
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Failure::Run(e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn seeds(run: &RunArgs) -> Vec<u64> {
    (0..run.chains.max(1) as u64).map(|k| run.seed + k).collect()
}

#[derive(Serialize)]
struct InferReport {
    report_version: u32,
    config: InferConfig,
    chains: Vec<ChainStats>,
    pooled: Vec<QueryEstimate>,
}

#[derive(Serialize)]
struct InferConfig {
    model: String,
    evidence: Vec<String>,
    proposer: &'static str,
    samples: u64,
    burn_in: u64,
    seed: u64,
    chains: usize,
}

fn infer(args: InferArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let files: Vec<PathBuf> = args.evidence.iter().chain(&args.queries).cloned().collect();
    let a = load_assertions(&model, &files, &args.query)?;
    let problem = Problem::from_assertions(&model, &a);
    let run = &args.run;
    let config = ChainConfig {
        samples: run.samples,
        burn_in: run.burn_in,
        seed: run.seed,
        assert: run.assert,
    };
    let (chains, proposer) = match run.proposer {
        ProposerArg::Generic => (run_chains(&problem, &config, &seeds(run), |_| GenericResampler::new())?, "generic"),
        ProposerArg::Splitmerge => {
            let sm = SplitMergeConfig {
                theta: run.theta,
                rho: run.rho,
                ..SplitMergeConfig::default()
            };
            (run_chains(&problem, &config, &seeds(run), |_| SplitMerge::new(sm.clone()))?, "splitmerge")
        }
    };
    let report = InferReport {
        report_version: 1,
        config: InferConfig {
            model: args.model.display().to_string(),
            evidence: files.iter().map(|f| f.display().to_string()).collect(),
            proposer,
            samples: run.samples,
            burn_in: run.burn_in,
            seed: run.seed,
            chains: run.chains.max(1),
        },
        pooled: pool_queries(&chains),
        chains,
    };
    emit(&report, run.out.as_deref())
}

fn citebench(args: CitebenchArgs) -> Result<(), Failure> {
    let (source, model_name) = match &args.model {
        Some(p) => (read(p)?, p.display().to_string()),
        None => (CITATION_MODEL.to_string(), "built-in citations.blog".to_string()),
    };
    let run = &args.run;
    let (dataset, dataset_name) = match (&args.evidence, args.synthetic) {
        (Some(p), _) => (CitationDataset::load(p)?, p.display().to_string()),
        (None, Some(n)) => {
            let seed = args.data_seed.unwrap_or(run.seed);
            let d = generate_synthetic(&source, &SyntheticConfig::new(n), seed)?;
            (d, format!("synthetic n={n} seed={seed}"))
        }
        (None, None) => return Err(Failure::Usage("give --evidence or --synthetic".into())),
    };
    if let Some(p) = &args.write_dataset {
        std::fs::write(p, dataset.to_tsv()).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    let model = citation_model(&source, dataset.len())?;
    let queries = load_assertions(&model, &args.queries, &[])?.queries;
    let opts = RunOptions {
        proposer: match run.proposer {
            ProposerArg::Generic => ProposerKind::Generic,
            ProposerArg::Splitmerge => ProposerKind::SplitMerge,
        },
        samples: run.samples,
        burn_in: run.burn_in,
        seed: run.seed,
        chains: run.chains.max(1),
        theta: run.theta,
        rho: run.rho,
        assert: run.assert,
    };
    let config = ConfigEcho {
        model: model_name,
        dataset: dataset_name,
    };
    let report = run_citebench(&model, &dataset, &queries, &opts, config)?;
    emit(&report, run.out.as_deref())
}

fn oracle(args: OracleArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let files: Vec<PathBuf> = args.bounds.iter().chain(&args.evidence).chain(&args.queries).cloned().collect();
    let a = load_assertions(&model, &files, &args.query)?;
    if a.queries.is_empty() {
        return Err(Failure::Usage("no queries; give --query or --queries".into()));
    }
    let problem = Problem::from_assertions(&model, &a);
    let ps = Oracle::new(&model, Bounds::from_assertions(&a)).posteriors(&problem)?;
    if ps.len() == 1 {
        println!("{}", ps[0]);
    } else {
        for (q, p) in a.queries.iter().zip(ps) {
            println!("{}\t{p}", q.name);
        }
    }
    Ok(())
}

fn selftest() -> Result<(), Failure> {
    let results = run_selftest_with(|r| {
        println!(
            "{} {:<40} {:>9.1} ms  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.ms,
            r.detail
        );
    });
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let out = match cli.cmd {
        Cmd::Infer(a) => infer(a),
        Cmd::Citebench(a) => citebench(a),
        Cmd::Oracle(a) => oracle(a),
        Cmd::Selftest => selftest(),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
