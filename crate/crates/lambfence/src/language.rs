//! Grammars, token-type specifications, and disambiguation constraints.
//!
//! This module holds the declarative language model shared by the scanner and
//! the parser, plus the normalization steps (optional-element desugaring and
//! epsilon extraction) that the chart parser expects to have been applied.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// How a token type matches input text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternRef {
    /// A regular expression in the supported subset.
    Regex(String),
    /// The id of a custom matcher registered at runtime.
    Custom(String),
}

/// A named terminal with a pattern matcher, precedence tier, and override set.
///
/// `overrides` lists the token-type names this type forbids from starting a
/// match over its matched span. `validator` optionally names a custom
/// token-level constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTypeSpec {
    pub name: String,
    pub pattern: PatternRef,
    pub precedence: i32,
    pub overrides: BTreeSet<String>,
    pub validator: Option<String>,
}

impl TokenTypeSpec {
    pub fn regex(name: &str, pattern: &str) -> Self {
        TokenTypeSpec {
            name: name.to_string(),
            pattern: PatternRef::Regex(pattern.to_string()),
            precedence: 0,
            overrides: BTreeSet::new(),
            validator: None,
        }
    }

    pub fn with_precedence(mut self, precedence: i32) -> Self {
        self.precedence = precedence;
        self
    }

    pub fn with_overrides<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.overrides = names.into_iter().map(Into::into).collect();
        self
    }
}

/// Stable production identifier.
///
/// `base` is the pre-desugar id (`Lhs.k` for the k-th alternative of `Lhs`);
/// `variant` distinguishes the desugared variants of a production that carried
/// optional elements. Constraints reference the base id and apply to every
/// variant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProductionId {
    pub base: String,
    pub variant: u32,
}

impl ProductionId {
    pub fn new(base: &str) -> Self {
        ProductionId {
            base: base.to_string(),
            variant: 0,
        }
    }
}

impl fmt::Display for ProductionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.variant == 0 {
            write!(f, "{}", self.base)
        } else {
            write!(f, "{}~{}", self.base, self.variant)
        }
    }
}

/// One element of a production right-hand side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhsElement {
    pub symbol: String,
    pub optional: bool,
}

impl RhsElement {
    pub fn required(symbol: &str) -> Self {
        RhsElement {
            symbol: symbol.to_string(),
            optional: false,
        }
    }

    pub fn optional(symbol: &str) -> Self {
        RhsElement {
            symbol: symbol.to_string(),
            optional: true,
        }
    }
}

/// A grammar production. Before desugaring, rhs elements may be flagged
/// optional; afterwards no element carries the flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<RhsElement>,
    pub id: ProductionId,
}

impl Production {
    pub fn new(lhs: &str, rhs: Vec<RhsElement>, id: ProductionId) -> Self {
        Production {
            lhs: lhs.to_string(),
            rhs,
            id,
        }
    }

    pub fn rhs_symbols(&self) -> Vec<&str> {
        self.rhs.iter().map(|e| e.symbol.as_str()).collect()
    }
}

/// A context-free grammar.
///
/// Epsilon productions are not kept in `productions`; their left-hand sides
/// are recorded in `epsilon_symbols` instead (only direct epsilon productions,
/// indirect nullability is not closed over).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grammar {
    pub nonterminals: BTreeSet<String>,
    pub terminals: BTreeSet<String>,
    pub productions: Vec<Production>,
    pub start: String,
    pub epsilon_symbols: BTreeSet<String>,
}

impl Grammar {
    /// Builds a grammar from terminal declarations and productions, inferring
    /// the nonterminal set from production left-hand sides.
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(
        terminals: I,
        productions: Vec<Production>,
        start: &str,
    ) -> Self {
        let nonterminals: BTreeSet<String> =
            productions.iter().map(|p| p.lhs.clone()).collect();
        Grammar {
            nonterminals,
            terminals: terminals.into_iter().map(Into::into).collect(),
            productions,
            start: start.to_string(),
            epsilon_symbols: BTreeSet::new(),
        }
    }

    pub fn production_by_id(&self, id: &str) -> Option<&Production> {
        self.productions.iter().find(|p| p.id.to_string() == id)
    }

    /// Base ids present in the grammar (constraint targets).
    pub fn base_ids(&self) -> BTreeSet<&str> {
        self.productions.iter().map(|p| p.id.base.as_str()).collect()
    }
}

/// Associativity directions for binary operator productions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Associativity {
    LeftToRight,
    RightToLeft,
    NonAssociative,
}

impl fmt::Display for Associativity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Associativity::LeftToRight => "left",
            Associativity::RightToLeft => "right",
            Associativity::NonAssociative => "non",
        };
        f.write_str(s)
    }
}

/// The declarative disambiguation constraints attached to a grammar.
///
/// All maps are keyed by production base id. `selection_precedence` pairs are
/// (winner, loser); `composition_precedence` pairs are (inhibited, inner).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub associativity: BTreeMap<String, Associativity>,
    pub selection_precedence: Vec<(String, String)>,
    pub composition_precedence: Vec<(String, String)>,
    pub custom_evaluators: BTreeMap<String, String>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.associativity.is_empty()
            && self.selection_precedence.is_empty()
            && self.composition_precedence.is_empty()
            && self.custom_evaluators.is_empty()
    }

    /// Transitive closure of the selection-precedence pairs.
    pub fn selection_closure(&self) -> BTreeSet<(String, String)> {
        let mut closed: BTreeSet<(String, String)> =
            self.selection_precedence.iter().cloned().collect();
        loop {
            let mut added = Vec::new();
            for (a, b) in &closed {
                for (c, d) in &closed {
                    if b == c && !closed.contains(&(a.clone(), d.clone())) {
                        added.push((a.clone(), d.clone()));
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            closed.extend(added);
        }
        closed
    }
}

/// Diagnostic severity: invariant violations are errors, reachability issues
/// are warnings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A validation or spec-parsing diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: Option<usize>,
    pub col: Option<usize>,
}

impl Diagnostic {
    pub fn error(message: String) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message,
            line: None,
            col: None,
        }
    }

    pub fn warning(message: String) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message,
            line: None,
            col: None,
        }
    }

    pub fn at(mut self, line: usize, col: usize) -> Self {
        self.line = Some(line);
        self.col = Some(col);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match (self.line, self.col) {
            (Some(l), Some(c)) => write!(f, "{}:{}:{}: {}", tag, l, c, self.message),
            (Some(l), None) => write!(f, "{}:{}: {}", tag, l, self.message),
            _ => write!(f, "{}: {}", tag, self.message),
        }
    }
}

/// Expands optional rhs elements into the 2^k omission variants.
///
/// Variant v of a production omits the optional elements whose (left-to-right)
/// index has the corresponding bit set in v, so variant 0 keeps everything.
/// Variants whose resulting rhs collides with an earlier variant of the same
/// production are dropped. Productions without optional elements pass through
/// unchanged, which makes the operation idempotent.
pub fn desugar_optionals(productions: &[Production]) -> Vec<Production> {
    let mut out = Vec::new();
    for p in productions {
        let optional_positions: Vec<usize> = p
            .rhs
            .iter()
            .enumerate()
            .filter(|(_, e)| e.optional)
            .map(|(i, _)| i)
            .collect();
        if optional_positions.is_empty() {
            out.push(p.clone());
            continue;
        }
        let k = optional_positions.len();
        let mut seen: HashSet<Vec<String>> = HashSet::new();
        for v in 0u32..(1 << k) {
            let omitted: HashSet<usize> = optional_positions
                .iter()
                .enumerate()
                .filter(|(bit, _)| v & (1 << bit) != 0)
                .map(|(_, &pos)| pos)
                .collect();
            let rhs: Vec<RhsElement> = p
                .rhs
                .iter()
                .enumerate()
                .filter(|(i, _)| !omitted.contains(i))
                .map(|(_, e)| RhsElement::required(&e.symbol))
                .collect();
            let key: Vec<String> = rhs.iter().map(|e| e.symbol.clone()).collect();
            if seen.insert(key) {
                out.push(Production {
                    lhs: p.lhs.clone(),
                    rhs,
                    id: ProductionId {
                        base: p.id.base.clone(),
                        variant: v,
                    },
                });
            }
        }
    }
    out
}

/// Removes empty-rhs productions and records their left-hand sides in
/// `epsilon_symbols`. No nullability closure is taken: a symbol all of whose
/// productions merely derive epsilon indirectly is not added.
pub fn extract_epsilon_symbols(mut grammar: Grammar) -> Grammar {
    let mut kept = Vec::with_capacity(grammar.productions.len());
    for p in grammar.productions {
        if p.rhs.is_empty() {
            grammar.epsilon_symbols.insert(p.lhs.clone());
        } else {
            kept.push(p);
        }
    }
    grammar.productions = kept;
    grammar
}

/// Checks the grammar and constraint invariants, returning an empty list iff
/// everything holds and every symbol is reachable from the start symbol.
pub fn validate_grammar(grammar: &Grammar, constraints: &ConstraintSet) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    if !grammar.nonterminals.contains(&grammar.start) {
        diags.push(Diagnostic::error(format!(
            "start symbol `{}` is not a nonterminal",
            grammar.start
        )));
    }
    for s in grammar.terminals.intersection(&grammar.nonterminals) {
        diags.push(Diagnostic::error(format!(
            "symbol `{}` is declared both terminal and nonterminal",
            s
        )));
    }
    for p in &grammar.productions {
        if p.rhs.is_empty() {
            diags.push(Diagnostic::error(format!(
                "production `{}` has an empty rhs; epsilon productions must be extracted",
                p.id
            )));
        }
        for e in &p.rhs {
            if e.optional {
                diags.push(Diagnostic::error(format!(
                    "production `{}` still carries an optional element `{}`",
                    p.id, e.symbol
                )));
            }
            if !grammar.terminals.contains(&e.symbol) && !grammar.nonterminals.contains(&e.symbol) {
                diags.push(Diagnostic::error(format!(
                    "production `{}` references undeclared symbol `{}`",
                    p.id, e.symbol
                )));
            }
        }
    }
    let mut ids = HashSet::new();
    for p in &grammar.productions {
        if !ids.insert(p.id.clone()) {
            diags.push(Diagnostic::error(format!("duplicate production id `{}`", p.id)));
        }
    }

    let bases: BTreeSet<&str> = grammar.base_ids();
    let check_id = |id: &str, what: &str, diags: &mut Vec<Diagnostic>| {
        if !bases.contains(id) {
            diags.push(Diagnostic::error(format!(
                "{} constraint references unknown production `{}`",
                what, id
            )));
        }
    };
    for id in constraints.associativity.keys() {
        check_id(id, "associativity", &mut diags);
    }
    for (w, l) in &constraints.selection_precedence {
        check_id(w, "selection-precedence", &mut diags);
        check_id(l, "selection-precedence", &mut diags);
        if w == l {
            diags.push(Diagnostic::error(format!(
                "selection-precedence pair ({}, {}) is reflexive",
                w, l
            )));
        }
    }
    for (o, i) in &constraints.composition_precedence {
        check_id(o, "composition-precedence", &mut diags);
        check_id(i, "composition-precedence", &mut diags);
        if o == i {
            diags.push(Diagnostic::error(format!(
                "composition-precedence pair ({}, {}) is reflexive",
                o, i
            )));
        }
    }
    for id in constraints.custom_evaluators.keys() {
        check_id(id, "custom", &mut diags);
    }

    // Reachability from the start symbol.
    if grammar.nonterminals.contains(&grammar.start) {
        let mut reachable: BTreeSet<&str> = BTreeSet::new();
        reachable.insert(grammar.start.as_str());
        let mut frontier = vec![grammar.start.as_str()];
        while let Some(sym) = frontier.pop() {
            for p in grammar.productions.iter().filter(|p| p.lhs == sym) {
                for e in &p.rhs {
                    if reachable.insert(e.symbol.as_str()) {
                        frontier.push(e.symbol.as_str());
                    }
                }
            }
        }
        for s in grammar.nonterminals.iter().chain(grammar.terminals.iter()) {
            if !reachable.contains(s.as_str()) {
                diags.push(Diagnostic::warning(format!(
                    "symbol `{}` is unreachable from the start symbol",
                    s
                )));
            }
        }
    }

    diags
}
