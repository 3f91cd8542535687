//! End-to-end pipeline: scan → lexical graph → extended graph → chart parse
//! → constraint enforcement, with a run report of counts and per-phase
//! timings.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::chart::{build_ela_graph, chart_parse, ElaGraph, IGraph, ParseError};
use crate::enforcer::{expand, EGraph, EnforceError, EvaluatorRegistry};
use crate::language::Grammar;
use crate::matcher::PatternError;
use crate::scanner::{
    build_lexical_graph, compile_specs, LexicalAnalysisGraph, MatchPolicy, ScanError,
    ScanRegistry,
};
use crate::spec::LanguageSpec;

/// Summary of one pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub token_count: usize,
    /// Start-to-end paths in the LA graph, as a string (the count can exceed
    /// 64 bits on adversarial inputs).
    pub path_count: String,
    pub implicit_node_count: usize,
    pub tree_count: usize,
    pub rejected_by_constraint: BTreeMap<String, u64>,
    pub elapsed_ms: BTreeMap<String, f64>,
}

/// All intermediate artifacts of a successful run.
#[derive(Debug)]
pub struct RunResult {
    pub grammar: Grammar,
    pub la: LexicalAnalysisGraph,
    pub ela: ElaGraph,
    pub igraph: IGraph,
    pub egraph: EGraph,
    pub report: RunReport,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Pattern(#[from] PatternError),
    #[error("{0}")]
    Scan(#[from] ScanError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Enforce(#[from] EnforceError),
}

/// Runs the whole pipeline over one input.
pub fn run(
    spec: &LanguageSpec,
    input: &str,
    policy_override: Option<MatchPolicy>,
    scan_registry: &ScanRegistry,
    evaluators: &EvaluatorRegistry,
) -> Result<RunResult, RunError> {
    let mut elapsed_ms = BTreeMap::new();
    let mut config = spec.scan_config.clone();
    if let Some(p) = policy_override {
        config.policy = p;
    }
    let compiled_config = config.compile()?;
    let specs = compile_specs(&spec.token_specs, scan_registry)?;

    let t = Instant::now();
    let la = build_lexical_graph(input, &specs, &compiled_config, scan_registry)?;
    elapsed_ms.insert("scan".to_string(), t.elapsed().as_secs_f64() * 1e3);

    let grammar = spec.normalized_grammar();
    let t = Instant::now();
    let ela = build_ela_graph(&la);
    let igraph = chart_parse(&ela, &grammar)?;
    elapsed_ms.insert("chart".to_string(), t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let egraph = expand(&igraph, &grammar, &spec.constraints, &la.tokens, evaluators)?;
    elapsed_ms.insert("enforce".to_string(), t.elapsed().as_secs_f64() * 1e3);

    let mut rejected_by_constraint = BTreeMap::new();
    let s = &egraph.stats;
    for (k, v) in [
        ("associativity", s.rejected_associativity),
        ("selection", s.rejected_selection),
        ("composition", s.rejected_composition),
        ("custom", s.rejected_custom),
    ] {
        if v > 0 {
            rejected_by_constraint.insert(k.to_string(), v);
        }
    }
    let report = RunReport {
        token_count: la.tokens.len(),
        path_count: la.path_count().to_string(),
        implicit_node_count: igraph.implicit_node_count(),
        tree_count: egraph.tree_count(),
        rejected_by_constraint,
        elapsed_ms,
    };
    Ok(RunResult {
        grammar,
        la,
        ela,
        igraph,
        egraph,
        report,
    })
}
