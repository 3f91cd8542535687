//! The Lamb scanning phase and lexical-analysis-graph generation phase.
//!
//! Scanning runs either greedily (longest match per type and position,
//! MATCH/SKIP position states) or exploratorily (every match length at every
//! position). Both policies maintain per-position forbidden token lists
//! populated by the override sets of higher-precedence matches. Graph
//! generation then links each token to its nearest following tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::{PatternRef, TokenTypeSpec};
use crate::matcher::{CompiledPattern, PatternError, TokenMatcher};

/// A scanned token. Spans are half-open `[start, end)` character indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub ty: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Token {
    pub fn new(ty: &str, start: usize, end: usize, text: &str) -> Self {
        Token {
            ty: ty.to_string(),
            start,
            end,
            text: text.to_string(),
        }
    }
}

/// Which matching policy the scanner follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchPolicy {
    Greedy,
    Exploratory,
}

/// Declarative scan configuration. `ignore_pattern: None` means the default
/// whitespace run; use [`CompiledScanConfig::without_ignore`] to scan with no
/// gap pattern at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub policy: MatchPolicy,
    pub ignore_pattern: Option<String>,
}

impl ScanConfig {
    pub fn greedy() -> Self {
        ScanConfig {
            policy: MatchPolicy::Greedy,
            ignore_pattern: None,
        }
    }

    pub fn exploratory() -> Self {
        ScanConfig {
            policy: MatchPolicy::Exploratory,
            ignore_pattern: None,
        }
    }

    pub fn compile(&self) -> Result<CompiledScanConfig, PatternError> {
        let pattern = self.ignore_pattern.as_deref().unwrap_or(r"[ \t\r\n]+");
        Ok(CompiledScanConfig {
            policy: self.policy,
            ignore: Some(Rc::new(CompiledPattern::compile(pattern)?)),
        })
    }
}

/// Scan configuration with the ignore matcher compiled.
#[derive(Clone)]
pub struct CompiledScanConfig {
    pub policy: MatchPolicy,
    pub ignore: Option<Rc<dyn TokenMatcher>>,
}

impl CompiledScanConfig {
    pub fn without_ignore(policy: MatchPolicy) -> Self {
        CompiledScanConfig {
            policy,
            ignore: None,
        }
    }
}

/// A token-type spec paired with its compiled matcher.
#[derive(Clone)]
pub struct CompiledTokenSpec {
    pub spec: TokenTypeSpec,
    pub matcher: Rc<dyn TokenMatcher>,
}

/// A host-registered token predicate.
pub type TokenValidator = Rc<dyn Fn(&Token) -> bool>;

/// Registry for custom matchers and token validators referenced by name from
/// token-type specs. Entries must be reentrant and side-effect-free.
#[derive(Default)]
pub struct ScanRegistry {
    matchers: BTreeMap<String, Rc<dyn TokenMatcher>>,
    validators: BTreeMap<String, TokenValidator>,
}

impl ScanRegistry {
    pub fn register_matcher(&mut self, id: &str, matcher: Rc<dyn TokenMatcher>) {
        self.matchers.insert(id.to_string(), matcher);
    }

    pub fn register_validator(&mut self, id: &str, validator: TokenValidator) {
        self.validators.insert(id.to_string(), validator);
    }

    pub fn validator(&self, id: &str) -> Option<&TokenValidator> {
        self.validators.get(id)
    }
}

/// Scanner failure modes.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScanError {
    #[error("unscannable region at position {position}: `{excerpt}`")]
    UnscannableRegion { position: usize, excerpt: String },
    #[error("token spec `{name}`: {source}")]
    BadTokenPattern {
        name: String,
        #[source]
        source: PatternError,
    },
    #[error("token spec `{name}` references unknown custom matcher `{id}`")]
    UnknownMatcher { name: String, id: String },
}

/// Compiles token-type specs, resolving custom matcher ids in `registry`.
pub fn compile_specs(
    specs: &[TokenTypeSpec],
    registry: &ScanRegistry,
) -> Result<Vec<CompiledTokenSpec>, ScanError> {
    specs
        .iter()
        .map(|spec| {
            let matcher: Rc<dyn TokenMatcher> = match &spec.pattern {
                PatternRef::Regex(p) => {
                    Rc::new(CompiledPattern::compile(p).map_err(|source| {
                        ScanError::BadTokenPattern {
                            name: spec.name.clone(),
                            source,
                        }
                    })?)
                }
                PatternRef::Custom(id) => registry
                    .matchers
                    .get(id)
                    .cloned()
                    .ok_or_else(|| ScanError::UnknownMatcher {
                        name: spec.name.clone(),
                        id: id.clone(),
                    })?,
            };
            Ok(CompiledTokenSpec {
                spec: spec.clone(),
                matcher,
            })
        })
        .collect()
}

/// The Lamb output: tokens plus FOLLOWING/PRECEDING adjacency and the
/// start-token set. Token indices refer to `tokens`, which is sorted by
/// (start, end, type).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexicalAnalysisGraph {
    pub tokens: Vec<Token>,
    pub following: Vec<BTreeSet<usize>>,
    pub preceding: Vec<BTreeSet<usize>>,
    pub start_tokens: BTreeSet<usize>,
}

impl LexicalAnalysisGraph {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens with an empty following set.
    pub fn end_tokens(&self) -> BTreeSet<usize> {
        (0..self.tokens.len())
            .filter(|&i| self.following[i].is_empty())
            .collect()
    }

    /// Number of distinct start-to-end paths (saturating).
    pub fn path_count(&self) -> u128 {
        let n = self.tokens.len();
        if n == 0 {
            return 0;
        }
        // Tokens are sorted by start, so edges go to strictly later indices
        // (b.start >= a.end > a.start); a reverse sweep accumulates counts.
        let mut counts = vec![0u128; n];
        for i in (0..n).rev() {
            counts[i] = if self.following[i].is_empty() {
                1
            } else {
                self.following[i]
                    .iter()
                    .fold(0u128, |acc, &j| acc.saturating_add(counts[j]))
            };
        }
        self.start_tokens
            .iter()
            .fold(0u128, |acc, &i| acc.saturating_add(counts[i]))
    }

    /// All start-to-end paths as token index sequences. Only for small graphs.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for &s in &self.start_tokens {
            self.collect_paths(s, &mut stack, &mut out);
        }
        out
    }

    fn collect_paths(&self, at: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        stack.push(at);
        if self.following[at].is_empty() {
            out.push(stack.clone());
        } else {
            for &next in &self.following[at] {
                self.collect_paths(next, stack, out);
            }
        }
        stack.pop();
    }
}

struct MatchRun<'a> {
    specs: &'a [CompiledTokenSpec],
    /// Per-position sets of forbidden token-type indices.
    forbidden: Vec<BTreeSet<usize>>,
}

impl<'a> MatchRun<'a> {
    fn new(specs: &'a [CompiledTokenSpec], input: &'a [char]) -> Self {
        MatchRun {
            specs,
            forbidden: vec![BTreeSet::new(); input.len()],
        }
    }

    /// Indices of `specs` grouped into descending precedence tiers,
    /// declaration order within a tier.
    fn tiers(&self) -> Vec<Vec<usize>> {
        let mut by_prec: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.specs.iter().enumerate() {
            by_prec.entry(s.spec.precedence).or_default().push(i);
        }
        by_prec.into_values().rev().collect()
    }

    fn apply_overrides(&mut self, spec_idx: usize, start: usize, end: usize) {
        let overrides: Vec<usize> = self
            .specs
            .iter()
            .enumerate()
            .filter(|(_, s)| self.specs[spec_idx].spec.overrides.contains(&s.spec.name))
            .map(|(i, _)| i)
            .collect();
        if overrides.is_empty() {
            return;
        }
        for pos in start..end {
            self.forbidden[pos].extend(overrides.iter().copied());
        }
    }
}

fn excerpt(input: &[char], position: usize) -> String {
    input[position..input.len().min(position + 16)]
        .iter()
        .collect()
}

/// Greedy scan: position 0 starts in MATCH state, positions are processed
/// left to right, and each non-forbidden matcher emits at most its single
/// longest match per MATCH position. Matches set the position after their
/// last character to MATCH; ignore-pattern matches propagate MATCH across
/// gaps.
pub fn scan_greedy(
    input: &[char],
    specs: &[CompiledTokenSpec],
    config: &CompiledScanConfig,
) -> Result<BTreeSet<Token>, ScanError> {
    let mut run = MatchRun::new(specs, input);
    let tiers = run.tiers();
    let mut tokens = BTreeSet::new();
    let mut match_state = vec![false; input.len() + 1];
    if !input.is_empty() {
        match_state[0] = true;
    }
    for pos in 0..input.len() {
        if !match_state[pos] {
            continue;
        }
        let mut matched_token = false;
        for tier in &tiers {
            // Overrides placed by this tier take effect only after the tier;
            // snapshot the forbidden set the tier observed.
            let snapshot = run.forbidden[pos].clone();
            let mut placed: Vec<(usize, usize)> = Vec::new();
            for &si in tier {
                if snapshot.contains(&si) {
                    continue;
                }
                if let Some(len) = run.specs[si].matcher.longest_match(input, pos) {
                    if len == 0 {
                        continue;
                    }
                    let text: String = input[pos..pos + len].iter().collect();
                    tokens.insert(Token::new(&run.specs[si].spec.name, pos, pos + len, &text));
                    matched_token = true;
                    match_state[pos + len] = true;
                    placed.push((si, len));
                }
            }
            for (si, len) in placed {
                run.apply_overrides(si, pos, pos + len);
            }
        }
        let mut gap = false;
        if let Some(ignore) = &config.ignore {
            if let Some(len) = ignore.longest_match(input, pos) {
                if len > 0 {
                    match_state[pos + len] = true;
                    gap = true;
                }
            }
        }
        if !matched_token && !gap {
            return Err(ScanError::UnscannableRegion {
                position: pos,
                excerpt: excerpt(input, pos),
            });
        }
    }
    Ok(tokens)
}

/// Exploratory scan: every position is in MATCH state and every matcher emits
/// every distinct-length match, tier by tier in descending precedence so that
/// higher-tier overrides are fully placed before lower tiers run.
pub fn scan_exploratory(
    input: &[char],
    specs: &[CompiledTokenSpec],
    config: &CompiledScanConfig,
) -> Result<BTreeSet<Token>, ScanError> {
    let mut run = MatchRun::new(specs, input);
    let tiers = run.tiers();
    let mut tokens = BTreeSet::new();
    let mut covered = vec![false; input.len()];
    for tier in &tiers {
        let snapshot = run.forbidden.clone();
        let mut placed: Vec<(usize, usize, usize)> = Vec::new();
        for pos in 0..input.len() {
            for &si in tier {
                if snapshot[pos].contains(&si) {
                    continue;
                }
                for len in run.specs[si].matcher.match_lengths(input, pos) {
                    if len == 0 {
                        continue;
                    }
                    let text: String = input[pos..pos + len].iter().collect();
                    tokens.insert(Token::new(&run.specs[si].spec.name, pos, pos + len, &text));
                    covered[pos..pos + len].fill(true);
                    placed.push((si, pos, pos + len));
                }
            }
        }
        for (si, s, e) in placed {
            run.apply_overrides(si, s, e);
        }
    }
    // Positions covered by no token must be ignorable.
    if let Some(ignore) = &config.ignore {
        let mut pos = 0;
        while pos < input.len() {
            if covered[pos] {
                pos += 1;
                continue;
            }
            match ignore.longest_match(input, pos) {
                Some(len) if len > 0 => {
                    covered[pos..pos + len].fill(true);
                    pos += len;
                }
                _ => pos += 1,
            }
        }
    }
    if let Some(position) = covered.iter().position(|&c| !c) {
        return Err(ScanError::UnscannableRegion {
            position,
            excerpt: excerpt(input, position),
        });
    }
    Ok(tokens)
}

/// Builds the FOLLOWING/PRECEDING adjacency over a token set.
///
/// With exclusive end coordinates, `b` follows `a` iff `a.end <= b.start` and
/// no third token fits entirely in the gap between them.
pub fn compute_adjacency(tokens: BTreeSet<Token>) -> LexicalAnalysisGraph {
    let mut tokens: Vec<Token> = tokens.into_iter().collect();
    // The suffix structure and the partition point below need start order.
    tokens.sort_by(|a, b| {
        (a.start, a.end, &a.ty, &a.text).cmp(&(b.start, b.end, &b.ty, &b.text))
    });
    let n = tokens.len();
    // For each suffix of the start-sorted order, the two smallest ends: the
    // runner-up covers the case where the minimizing token is the candidate
    // `b` itself.
    let mut min_end = vec![(usize::MAX, usize::MAX); n + 1]; // (smallest, second smallest)
    for i in (0..n).rev() {
        let (m1, m2) = min_end[i + 1];
        let e = tokens[i].end;
        min_end[i] = if e <= m1 { (e, m1) } else { (m1, m2.min(e)) };
    }
    let mut following: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut preceding: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for a in 0..n {
        let threshold = tokens[a].end;
        // First index whose start is >= a.end.
        let from = tokens.partition_point(|t| t.start < threshold);
        for b in from..n {
            // Smallest end among suffix tokens other than b; the pair keeps
            // duplicates, so when b holds the minimum the runner-up is still
            // the minimum over the rest.
            let (m1, m2) = min_end[from];
            if tokens[b].start >= m2 {
                // Starts are ascending and every cutoff is at most m2.
                break;
            }
            let cutoff = if tokens[b].end == m1 { m2 } else { m1 };
            if tokens[b].start >= cutoff {
                // Some token fits between a and b.
                continue;
            }
            following[a].insert(b);
            preceding[b].insert(a);
        }
    }
    let start_tokens = (0..n).filter(|&i| preceding[i].is_empty()).collect();
    LexicalAnalysisGraph {
        tokens,
        following,
        preceding,
        start_tokens,
    }
}

/// Runs the configured scanning policy, applies token validators, and builds
/// the lexical analysis graph.
pub fn build_lexical_graph(
    input: &str,
    specs: &[CompiledTokenSpec],
    config: &CompiledScanConfig,
    registry: &ScanRegistry,
) -> Result<LexicalAnalysisGraph, ScanError> {
    let chars: Vec<char> = input.chars().collect();
    let tokens = match config.policy {
        MatchPolicy::Greedy => scan_greedy(&chars, specs, config)?,
        MatchPolicy::Exploratory => scan_exploratory(&chars, specs, config)?,
    };
    let by_name: BTreeMap<&str, &CompiledTokenSpec> =
        specs.iter().map(|s| (s.spec.name.as_str(), s)).collect();
    let tokens = tokens
        .into_iter()
        .filter(|t| {
            by_name
                .get(t.ty.as_str())
                .and_then(|s| s.spec.validator.as_deref())
                .and_then(|id| registry.validator(id))
                .is_none_or(|v| v(t))
        })
        .collect();
    Ok(compute_adjacency(tokens))
}
