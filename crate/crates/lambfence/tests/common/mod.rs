//! Helpers shared by the integration test suites: small grammar builders,
//! token chains, and seeded random generators for the differential tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;

use lambfence::chart::{build_ela_graph, chart_parse, ParseError};
use lambfence::enforcer::{expand, EGraph, EnforceError, EvaluatorRegistry};
use lambfence::language::{
    extract_epsilon_symbols, ConstraintSet, Grammar, Production, ProductionId, RhsElement,
    TokenTypeSpec,
};
use lambfence::scanner::{compute_adjacency, LexicalAnalysisGraph, Token};

pub fn prod(lhs: &str, rhs: &[&str], base: &str) -> Production {
    Production::new(
        lhs,
        rhs.iter().map(|s| RhsElement::required(s)).collect(),
        ProductionId::new(base),
    )
}

/// LA graph for a straight-line token sequence with unit spans.
pub fn chain(seq: &[(&str, &str)]) -> LexicalAnalysisGraph {
    let tokens: BTreeSet<Token> = seq
        .iter()
        .enumerate()
        .map(|(i, (ty, text))| Token::new(ty, i, i + 1, text))
        .collect();
    compute_adjacency(tokens)
}

pub fn expr_grammar() -> Grammar {
    extract_epsilon_symbols(Grammar::new(
        vec!["Num", "Plus"],
        vec![
            prod("E", &["E", "Plus", "E"], "E.0"),
            prod("E", &["Num"], "E.1"),
        ],
        "E",
    ))
}

/// `k` single-digit operands separated by plus tokens.
pub fn expr_input(k: usize) -> LexicalAnalysisGraph {
    let mut seq = Vec::new();
    for i in 0..k {
        if i > 0 {
            seq.push(("Plus", "+"));
        }
        seq.push(("Num", "n"));
    }
    chain(&seq)
}

#[derive(Debug)]
pub enum PipelineError {
    Parse(ParseError),
    Enforce(EnforceError),
}

/// chart + enforce over a prebuilt LA graph.
pub fn parse_graph(
    la: &LexicalAnalysisGraph,
    grammar: &Grammar,
    constraints: &ConstraintSet,
) -> Result<EGraph, PipelineError> {
    let ig = chart_parse(&build_ela_graph(la), grammar).map_err(PipelineError::Parse)?;
    expand(&ig, grammar, constraints, &la.tokens, &EvaluatorRegistry::new())
        .map_err(PipelineError::Enforce)
}

pub const PATTERN_POOL: &[&str] = &[
    "a",
    "b",
    "ab",
    "a+",
    "[ab]+",
    "a?b",
    "(a|b)b*",
    "ba*",
    "[01]+",
    "0(0|1)*",
    "a.b",
    ".",
    "aa|b",
    "(ab)+",
    "[a-b][0-1]",
];

/// Up to three token types with random pool patterns, precedences, and
/// override relations.
pub fn random_token_specs(rng: &mut impl Rng, with_overrides: bool) -> Vec<TokenTypeSpec> {
    let count = rng.gen_range(1..=3);
    let mut specs = Vec::with_capacity(count);
    for i in 0..count {
        let pattern = PATTERN_POOL[rng.gen_range(0..PATTERN_POOL.len())];
        let mut spec = TokenTypeSpec::regex(&format!("T{i}"), pattern)
            .with_precedence(rng.gen_range(1..=2));
        if with_overrides && rng.gen_bool(0.3) {
            let target = rng.gen_range(0..count);
            if target != i {
                spec.overrides.insert(format!("T{target}"));
            }
        }
        specs.push(spec);
    }
    specs
}

pub fn random_input(rng: &mut impl Rng, max_len: usize) -> String {
    let alphabet = ['a', 'b', '0', '1'];
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
        .collect()
}

/// A random grammar over terminals a/b/c with up to four nonterminals and
/// eight productions (empty right-hand sides allowed, so epsilon extraction
/// is exercised); the start symbol always has a production.
pub fn random_grammar(rng: &mut impl Rng) -> Grammar {
    let nt_count = rng.gen_range(1..=4);
    let nts: Vec<String> = (0..nt_count).map(|i| format!("N{i}")).collect();
    let terminals = ["a", "b", "c"];
    let prod_count = rng.gen_range(1..=8);
    let mut productions = Vec::new();
    let mut counters = vec![0usize; nt_count];
    for p in 0..prod_count {
        // Production 0 anchors the start symbol.
        let lhs = if p == 0 { 0 } else { rng.gen_range(0..nt_count) };
        let rhs_len = if rng.gen_bool(0.1) {
            0
        } else {
            rng.gen_range(1..=3)
        };
        let rhs: Vec<RhsElement> = (0..rhs_len)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    RhsElement::required(&nts[rng.gen_range(0..nt_count)])
                } else {
                    RhsElement::required(terminals[rng.gen_range(0..terminals.len())])
                }
            })
            .collect();
        let id = ProductionId::new(&format!("{}.{}", nts[lhs], counters[lhs]));
        counters[lhs] += 1;
        productions.push(Production::new(&nts[lhs], rhs, id));
    }
    extract_epsilon_symbols(Grammar::new(terminals.iter().copied(), productions, "N0"))
}

/// A random terminal sequence drawn from the grammar's terminal set.
pub fn random_terminal_seq(rng: &mut impl Rng, grammar: &Grammar, max_len: usize) -> Vec<String> {
    let terms: Vec<&String> = grammar.terminals.iter().collect();
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| terms[rng.gen_range(0..terms.len())].clone())
        .collect()
}
