//! Independent brute-force oracles for the test suite. These deliberately
//! share no machinery with the scanner or the parser: scanning is checked by
//! direct (type, start, end) triple enumeration, parsing by exhaustive
//! top-down derivation enumeration.

use std::collections::{BTreeSet, HashSet};

use crate::enforcer::EGraph;
use crate::language::{Grammar, PatternRef, TokenTypeSpec};
use crate::matcher::CompiledPattern;
use crate::scanner::Token;

/// Enumerates every token any scan could produce: all (type, start, end)
/// triples whose pattern fully matches the substring, honoring override
/// sets tier by tier (a higher-precedence token forbids the types it
/// overrides from starting anywhere inside its span; overrides take effect
/// only on strictly lower tiers).
pub fn oracle_enumerate_scans(input: &str, specs: &[TokenTypeSpec]) -> BTreeSet<Token> {
    let chars: Vec<char> = input.chars().collect();
    let n = chars.len();
    let compiled: Vec<(usize, CompiledPattern)> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let PatternRef::Regex(p) = &s.pattern else {
                panic!("oracle supports regex patterns only");
            };
            (i, CompiledPattern::compile(p).expect("oracle pattern"))
        })
        .collect();

    let mut tiers: Vec<i32> = specs.iter().map(|s| s.precedence).collect();
    tiers.sort_unstable();
    tiers.dedup();
    tiers.reverse();

    let mut forbidden: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    let mut out = BTreeSet::new();
    for tier in tiers {
        let mut accepted: Vec<(usize, usize, usize)> = Vec::new();
        for (si, pat) in &compiled {
            if specs[*si].precedence != tier {
                continue;
            }
            for start in 0..n {
                if forbidden[start].contains(si) {
                    continue;
                }
                for end in start + 1..=n {
                    if pat.full_match(&chars[start..end]) {
                        accepted.push((*si, start, end));
                    }
                }
            }
        }
        for &(si, start, end) in &accepted {
            out.insert(Token::new(
                &specs[si].name,
                start,
                end,
                &chars[start..end].iter().collect::<String>(),
            ));
        }
        // Overrides from this tier bind on lower tiers only.
        for &(si, start, end) in &accepted {
            let targets: Vec<usize> = specs
                .iter()
                .enumerate()
                .filter(|(_, s)| specs[si].overrides.contains(&s.name))
                .map(|(i, _)| i)
                .collect();
            for f in &mut forbidden[start..end] {
                f.extend(targets.iter().copied());
            }
        }
    }
    out
}

/// A derivation tree produced by the parsing oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleTree {
    /// `label` is the caller-chosen leaf label (input position).
    Leaf { symbol: String, label: usize },
    Node {
        production: usize,
        symbol: String,
        children: Vec<OracleTree>,
    },
}

/// Exhaustively enumerates the derivation trees whose frontier equals the
/// given terminal sequence, by top-down expansion. A (symbol, span) already
/// on the current expansion path is pruned, mirroring the enforcement
/// phase's history rule; epsilon symbols may be skipped over an empty span,
/// contributing no subtree. `depth_bound` caps the recursion outright.
pub fn oracle_enumerate_parses(
    seq: &[(String, usize)],
    grammar: &Grammar,
    depth_bound: usize,
) -> Vec<OracleTree> {
    oracle_enumerate_parses_bounded(seq, grammar, depth_bound, usize::MAX)
        .expect("unbounded enumeration cannot exhaust its budget")
}

/// Like [`oracle_enumerate_parses`], but gives up and returns `None` once
/// the enumeration has spent more than `budget` units of work (recursive
/// calls plus subtrees built), so differential tests can skip pathological
/// random cases instead of hanging.
pub fn oracle_enumerate_parses_bounded(
    seq: &[(String, usize)],
    grammar: &Grammar,
    depth_bound: usize,
    budget: usize,
) -> Option<Vec<OracleTree>> {
    let mut path = HashSet::new();
    let mut budget = budget;
    let out = derive(
        &grammar.start,
        0,
        seq.len(),
        seq,
        grammar,
        &mut path,
        depth_bound,
        &mut budget,
    );
    (budget > 0).then_some(out)
}

#[allow(clippy::too_many_arguments)]
fn derive(
    symbol: &str,
    i: usize,
    j: usize,
    seq: &[(String, usize)],
    grammar: &Grammar,
    path: &mut HashSet<(String, usize, usize)>,
    depth: usize,
    budget: &mut usize,
) -> Vec<OracleTree> {
    if depth == 0 || j <= i || *budget == 0 {
        return Vec::new();
    }
    *budget = budget.saturating_sub(1);
    if !grammar.nonterminals.contains(symbol) {
        if j == i + 1 && seq[i].0 == symbol {
            return vec![OracleTree::Leaf {
                symbol: symbol.to_string(),
                label: seq[i].1,
            }];
        }
        return Vec::new();
    }
    let key = (symbol.to_string(), i, j);
    if !path.insert(key.clone()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    // Different epsilon-skip placements can rebuild the same tree, so each
    // (symbol, span) result set is deduplicated by canonical rendering to
    // stop duplicates compounding up the recursion.
    let mut seen = HashSet::new();
    for (pi, p) in grammar.productions.iter().enumerate() {
        if p.lhs != symbol {
            continue;
        }
        let rhs: Vec<&str> = p.rhs.iter().map(|e| e.symbol.as_str()).collect();
        for children in derive_seq(&rhs, i, j, seq, grammar, path, depth - 1, budget) {
            let node = OracleTree::Node {
                production: pi,
                symbol: symbol.to_string(),
                children,
            };
            if seen.insert(render_oracle(&node, grammar)) {
                *budget = budget.saturating_sub(1);
                out.push(node);
            }
        }
    }
    path.remove(&key);
    out
}

#[allow(clippy::too_many_arguments)]
fn derive_seq(
    rhs: &[&str],
    i: usize,
    j: usize,
    seq: &[(String, usize)],
    grammar: &Grammar,
    path: &mut HashSet<(String, usize, usize)>,
    depth: usize,
    budget: &mut usize,
) -> Vec<Vec<OracleTree>> {
    let Some((first, rest)) = rhs.split_first() else {
        return if i == j { vec![Vec::new()] } else { Vec::new() };
    };
    if *budget == 0 {
        return Vec::new();
    }
    *budget = budget.saturating_sub(1);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |children: Vec<OracleTree>,
                    out: &mut Vec<Vec<OracleTree>>,
                    budget: &mut usize| {
        let key: Vec<String> = children
            .iter()
            .map(|c| render_oracle(c, grammar))
            .collect();
        if seen.insert(key) {
            *budget = budget.saturating_sub(1);
            out.push(children);
        }
    };
    if grammar.epsilon_symbols.contains(*first) {
        // Empty-span use of an epsilon symbol leaves no subtree.
        for tail in derive_seq(rest, i, j, seq, grammar, path, depth, budget) {
            push(tail, &mut out, budget);
        }
    }
    for k in i + 1..=j {
        let heads = derive(first, i, k, seq, grammar, path, depth, budget);
        if heads.is_empty() {
            continue;
        }
        for tail in derive_seq(rest, k, j, seq, grammar, path, depth, budget) {
            for head in &heads {
                let mut children = Vec::with_capacity(tail.len() + 1);
                children.push(head.clone());
                children.extend(tail.iter().cloned());
                push(children, &mut out, budget);
            }
        }
    }
    out
}

/// Canonical production-labeled renderings of oracle trees, sorted. The
/// format matches [`egraph_production_trees`], so the two pipelines can be
/// compared as string sets.
pub fn oracle_canonical_trees(trees: &[OracleTree], grammar: &Grammar) -> Vec<String> {
    let mut v: Vec<String> = trees.iter().map(|t| render_oracle(t, grammar)).collect();
    v.sort();
    v.dedup();
    v
}

fn render_oracle(t: &OracleTree, grammar: &Grammar) -> String {
    match t {
        OracleTree::Leaf { symbol, label } => format!("{symbol}@{label}"),
        OracleTree::Node {
            production,
            children,
            ..
        } => {
            let inner: Vec<String> = children.iter().map(|c| render_oracle(c, grammar)).collect();
            format!("{}({})", grammar.productions[*production].id, inner.join(","))
        }
    }
}

/// Canonical production-labeled renderings of an explicit forest's trees,
/// sorted; leaves render as `Type@start` with the token's character start.
pub fn egraph_production_trees(eg: &EGraph, grammar: &Grammar) -> Vec<String> {
    fn render(eg: &EGraph, i: usize, grammar: &Grammar) -> String {
        let n = &eg.nodes[i];
        match n.production {
            None => format!("{}@{}", n.symbol, n.start),
            Some(p) => {
                let inner: Vec<String> = n
                    .children
                    .iter()
                    .map(|&c| render(eg, c, grammar))
                    .collect();
                format!("{}({})", grammar.productions[p].id, inner.join(","))
            }
        }
    }
    let mut v: Vec<String> = eg
        .starting_nodes
        .iter()
        .map(|&r| render(eg, r, grammar))
        .collect();
    v.sort();
    v.dedup();
    v
}
