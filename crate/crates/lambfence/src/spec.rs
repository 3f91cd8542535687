//! The declarative language-spec file format: token definitions, productions
//! with optional elements, constraints, and the scanner policy.
//!
//! The format is UTF-8, line-oriented, with `#` comments. Sections are
//! introduced by `%policy`, `%ignore`, `%tokens`, `%start`, `%productions`,
//! and `%constraints`; production and constraint statements end with `;` and
//! may span lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::language::{
    Associativity, ConstraintSet, Diagnostic, Grammar, PatternRef, Production, ProductionId,
    RhsElement, TokenTypeSpec,
};
use crate::matcher::CompiledPattern;
use crate::scanner::{MatchPolicy, ScanConfig};

pub use crate::matcher::CompiledPattern as Matcher;

/// Compiles a regular-expression pattern into a matcher reporting all match
/// lengths per position (and the longest via `TokenMatcher::longest_match`).
pub fn compile_matcher(pattern: &str) -> Result<CompiledPattern, crate::matcher::PatternError> {
    CompiledPattern::compile(pattern)
}

/// A parsed language spec. The grammar keeps its pre-desugar form (optional
/// elements and empty alternatives intact) for error reporting; use
/// [`LanguageSpec::normalized_grammar`] before parsing input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageSpec {
    pub token_specs: Vec<TokenTypeSpec>,
    pub grammar: Grammar,
    pub constraints: ConstraintSet,
    pub scan_config: ScanConfig,
}

impl LanguageSpec {
    /// Desugars optional elements and extracts empty productions into the
    /// epsilon-symbol set, yielding the grammar the chart parser consumes.
    pub fn normalized_grammar(&self) -> Grammar {
        let desugared = crate::language::desugar_optionals(&self.grammar.productions);
        let g = Grammar::new(
            self.grammar.terminals.iter().cloned(),
            desugared,
            &self.grammar.start,
        );
        crate::language::extract_epsilon_symbols(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Tokens,
    Productions,
    Constraints,
}

struct SpecParser {
    diags: Vec<Diagnostic>,
    policy: Option<MatchPolicy>,
    ignore: Option<String>,
    tokens: Vec<TokenTypeSpec>,
    token_names: BTreeSet<String>,
    start: Option<String>,
    productions: Vec<Production>,
    /// Alternatives seen so far per lhs, for `Lhs.k` id assignment.
    alt_counts: BTreeMap<String, usize>,
    constraints: ConstraintSet,
}

impl SpecParser {
    fn error(&mut self, line: usize, col: usize, message: impl Into<String>) {
        self.diags
            .push(Diagnostic::error(message.into()).at(line, col));
    }

    fn token_line(&mut self, line: &str, lineno: usize) {
        // Name /pattern/ prec=N [overrides=A,B] [validator=id]
        let trimmed = line.trim();
        let Some((name, rest)) = trimmed.split_once(char::is_whitespace) else {
            self.error(lineno, 1, format!("malformed token line: {trimmed:?}"));
            return;
        };
        let rest = rest.trim_start();
        let Some(stripped) = rest.strip_prefix('/') else {
            self.error(lineno, 1, format!("token {name}: expected /pattern/"));
            return;
        };
        // The pattern ends at the first unescaped '/'.
        let mut pattern = String::new();
        let mut chars = stripped.chars();
        let mut closed = false;
        while let Some(c) = chars.next() {
            match c {
                '/' => {
                    closed = true;
                    break;
                }
                '\\' => {
                    if let Some(n) = chars.next() {
                        if n != '/' {
                            pattern.push('\\');
                        }
                        pattern.push(n);
                    } else {
                        pattern.push('\\');
                    }
                }
                _ => pattern.push(c),
            }
        }
        if !closed {
            self.error(lineno, 1, format!("token {name}: unterminated /pattern/"));
            return;
        }
        if !self.token_names.insert(name.to_string()) {
            self.error(lineno, 1, format!("duplicate token {name}"));
            return;
        }
        let mut spec = TokenTypeSpec::regex(name, &pattern);
        for attr in chars.as_str().split_whitespace() {
            match attr.split_once('=') {
                Some(("prec", v)) => match v.parse() {
                    Ok(p) => spec.precedence = p,
                    Err(_) => self.error(lineno, 1, format!("token {name}: bad prec {v:?}")),
                },
                Some(("overrides", v)) => {
                    spec.overrides = v.split(',').map(str::to_string).collect();
                }
                Some(("validator", v)) => spec.validator = Some(v.to_string()),
                _ => self.error(lineno, 1, format!("token {name}: unknown attribute {attr:?}")),
            }
        }
        if let Err(e) = CompiledPattern::compile(&pattern) {
            self.error(lineno, 1, format!("token {name}: {e}"));
            return;
        }
        self.tokens.push(spec);
    }

    fn production_statement(&mut self, stmt: &str, lineno: usize) {
        let Some((lhs, rhs_text)) = stmt.split_once("::=") else {
            self.error(lineno, 1, format!("expected `Lhs ::= ...` in {stmt:?}"));
            return;
        };
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.contains(char::is_whitespace) {
            self.error(lineno, 1, format!("malformed production lhs {lhs:?}"));
            return;
        }
        for alt in rhs_text.split('|') {
            let mut rhs = Vec::new();
            let mut bad = false;
            for word in alt.split_whitespace() {
                if let Some(sym) = word.strip_prefix('[') {
                    if let Some(sym) = sym.strip_suffix(']') {
                        rhs.push(RhsElement::optional(sym));
                        continue;
                    }
                    self.error(lineno, 1, format!("malformed optional element {word:?}"));
                    bad = true;
                    break;
                }
                rhs.push(RhsElement::required(word));
            }
            if bad {
                continue;
            }
            let k = self.alt_counts.entry(lhs.to_string()).or_insert(0);
            let id = ProductionId::new(&format!("{lhs}.{k}"));
            *k += 1;
            self.productions.push(Production::new(lhs, rhs, id));
        }
    }

    fn constraint_statement(&mut self, stmt: &str, lineno: usize) {
        let words: Vec<&str> = stmt.split_whitespace().collect();
        match words.as_slice() {
            ["assoc", id, dir] => {
                let assoc = match *dir {
                    "left" => Associativity::LeftToRight,
                    "right" => Associativity::RightToLeft,
                    "non" => Associativity::NonAssociative,
                    other => {
                        self.error(lineno, 1, format!("unknown associativity {other:?}"));
                        return;
                    }
                };
                self.check_production_id(id, lineno);
                self.constraints.associativity.insert(id.to_string(), assoc);
            }
            ["prefer", winner, "over", loser] => {
                self.check_production_id(winner, lineno);
                self.check_production_id(loser, lineno);
                self.constraints
                    .selection_precedence
                    .push((winner.to_string(), loser.to_string()));
            }
            ["compose", outer, "over", inner] => {
                self.check_production_id(outer, lineno);
                self.check_production_id(inner, lineno);
                self.constraints
                    .composition_precedence
                    .push((outer.to_string(), inner.to_string()));
            }
            ["evaluator", id, name] => {
                self.check_production_id(id, lineno);
                self.constraints
                    .custom_evaluators
                    .insert(id.to_string(), name.to_string());
            }
            _ => self.error(lineno, 1, format!("malformed constraint {stmt:?}")),
        }
    }

    fn check_production_id(&mut self, id: &str, lineno: usize) {
        if !self.productions.iter().any(|p| p.id.base == id) {
            self.error(lineno, 1, format!("unknown production id {id:?} in constraint"));
        }
    }
}

/// Parses the spec file format. All referenced names are resolved; on any
/// error the full diagnostic list is returned instead of a spec.
pub fn parse_language_spec(text: &str) -> Result<LanguageSpec, Vec<Diagnostic>> {
    let mut p = SpecParser {
        diags: Vec::new(),
        policy: None,
        ignore: None,
        tokens: Vec::new(),
        token_names: BTreeSet::new(),
        start: None,
        productions: Vec::new(),
        alt_counts: BTreeMap::new(),
        constraints: ConstraintSet::default(),
    };
    let mut section = Section::Preamble;
    // Multi-line statement accumulator for productions and constraints.
    let mut pending = String::new();
    let mut pending_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        // A '#' opens a comment only at line start or after whitespace, so
        // escaped hashes inside /patterns/ survive.
        let mut line = raw;
        let mut prev = ' ';
        for (idx, c) in raw.char_indices() {
            if c == '#' && prev.is_whitespace() {
                line = &raw[..idx];
                break;
            }
            prev = c;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(directive) = trimmed.strip_prefix('%') {
            if !pending.trim().is_empty() {
                p.error(pending_line, 1, "statement not terminated with `;`");
                pending.clear();
            }
            let (name, arg) = match directive.split_once(char::is_whitespace) {
                Some((n, a)) => (n, a.trim()),
                None => (directive, ""),
            };
            match name {
                "policy" => {
                    p.policy = match arg {
                        "greedy" => Some(MatchPolicy::Greedy),
                        "exploratory" => Some(MatchPolicy::Exploratory),
                        other => {
                            p.error(lineno, 1, format!("unknown policy {other:?}"));
                            None
                        }
                    }
                }
                "ignore" => {
                    let inner = arg
                        .strip_prefix('/')
                        .and_then(|s| s.strip_suffix('/'));
                    match inner {
                        Some(pat) => p.ignore = Some(pat.to_string()),
                        None => p.error(lineno, 1, "expected %ignore /pattern/"),
                    }
                }
                "tokens" => section = Section::Tokens,
                "start" => {
                    if arg.is_empty() {
                        p.error(lineno, 1, "%start requires a symbol");
                    } else {
                        p.start = Some(arg.to_string());
                    }
                }
                "productions" => section = Section::Productions,
                "constraints" => section = Section::Constraints,
                other => p.error(lineno, 1, format!("unknown directive %{other}")),
            }
            continue;
        }
        match section {
            Section::Preamble => {
                p.error(lineno, 1, format!("unexpected content before a section: {trimmed:?}"))
            }
            Section::Tokens => p.token_line(trimmed, lineno),
            Section::Productions | Section::Constraints => {
                if pending.is_empty() {
                    pending_line = lineno;
                }
                pending.push_str(trimmed);
                pending.push(' ');
                while let Some(semi) = pending.find(';') {
                    let stmt: String = pending[..semi].to_string();
                    pending.drain(..=semi);
                    if stmt.trim().is_empty() {
                        continue;
                    }
                    match section {
                        Section::Productions => p.production_statement(&stmt, pending_line),
                        Section::Constraints => p.constraint_statement(&stmt, pending_line),
                        _ => unreachable!(),
                    }
                    pending_line = lineno;
                }
            }
        }
    }
    if !pending.trim().is_empty() {
        p.error(pending_line, 1, "statement not terminated with `;`");
    }

    let start = match p.start.clone() {
        Some(s) => s,
        None => {
            p.error(0, 0, "missing %start");
            String::new()
        }
    };
    // Resolve rhs symbols: every symbol must be a declared token or some
    // production's lhs.
    let lhs_names: BTreeSet<String> =
        p.productions.iter().map(|pr| pr.lhs.clone()).collect();
    let mut unknown = Vec::new();
    for prod in &p.productions {
        for e in &prod.rhs {
            if !p.token_names.contains(&e.symbol) && !lhs_names.contains(e.symbol.as_str()) {
                unknown.push((prod.id.base.clone(), e.symbol.clone()));
            }
        }
    }
    for (pid, sym) in unknown {
        p.error(0, 0, format!("undeclared symbol {sym:?} in production {pid}"));
    }
    if !start.is_empty() && !lhs_names.contains(start.as_str()) {
        p.error(0, 0, format!("start symbol {start:?} has no production"));
    }

    if p.diags.iter().any(|d| d.is_error()) {
        return Err(p.diags);
    }
    let grammar = Grammar::new(p.token_names.iter().cloned(), p.productions, &start);
    Ok(LanguageSpec {
        token_specs: p.tokens,
        grammar,
        constraints: p.constraints,
        scan_config: ScanConfig {
            policy: p.policy.unwrap_or(MatchPolicy::Greedy),
            ignore_pattern: p.ignore,
        },
    })
}

/// Serializes a spec back into the file format; re-parsing the output yields
/// an equal `LanguageSpec`.
pub fn write_language_spec(spec: &LanguageSpec) -> String {
    let mut out = String::new();
    let policy = match spec.scan_config.policy {
        MatchPolicy::Greedy => "greedy",
        MatchPolicy::Exploratory => "exploratory",
    };
    writeln!(out, "%policy {policy}").unwrap();
    if let Some(ig) = &spec.scan_config.ignore_pattern {
        writeln!(out, "%ignore /{ig}/").unwrap();
    }
    writeln!(out, "%tokens").unwrap();
    for t in &spec.token_specs {
        let PatternRef::Regex(pat) = &t.pattern else {
            continue;
        };
        let escaped = pat.replace('/', "\\/");
        write!(out, "{}  /{}/  prec={}", t.name, escaped, t.precedence).unwrap();
        if !t.overrides.is_empty() {
            let names: Vec<&str> = t.overrides.iter().map(String::as_str).collect();
            write!(out, " overrides={}", names.join(",")).unwrap();
        }
        if let Some(v) = &t.validator {
            write!(out, " validator={v}").unwrap();
        }
        writeln!(out).unwrap();
    }
    writeln!(out, "%start {}", spec.grammar.start).unwrap();
    writeln!(out, "%productions").unwrap();
    // Alternatives of one lhs print as one rule, in declaration order.
    let mut order: Vec<&str> = Vec::new();
    let mut alts: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for prod in &spec.grammar.productions {
        if !alts.contains_key(prod.lhs.as_str()) {
            order.push(&prod.lhs);
        }
        let rhs: Vec<String> = prod
            .rhs
            .iter()
            .map(|e| {
                if e.optional {
                    format!("[{}]", e.symbol)
                } else {
                    e.symbol.clone()
                }
            })
            .collect();
        alts.entry(&prod.lhs).or_default().push(rhs.join(" "));
    }
    for lhs in order {
        writeln!(out, "{} ::= {} ;", lhs, alts[lhs].join(" | ")).unwrap();
    }
    if !spec.constraints.is_empty() {
        writeln!(out, "%constraints").unwrap();
        for (id, assoc) in &spec.constraints.associativity {
            let dir = match assoc {
                Associativity::LeftToRight => "left",
                Associativity::RightToLeft => "right",
                Associativity::NonAssociative => "non",
            };
            writeln!(out, "assoc {id} {dir} ;").unwrap();
        }
        for (w, l) in &spec.constraints.selection_precedence {
            writeln!(out, "prefer {w} over {l} ;").unwrap();
        }
        for (o, i) in &spec.constraints.composition_precedence {
            writeln!(out, "compose {o} over {i} ;").unwrap();
        }
        for (id, name) in &spec.constraints.custom_evaluators {
            writeln!(out, "evaluator {id} {name} ;").unwrap();
        }
    }
    out
}

/// The canonical example spec used throughout the tests.
pub const EXAMPLE_SPEC: &str = r"%policy greedy
%tokens
Integer  /(-|\+)?[0-9]+/         prec=1
Decimal  /(-|\+)?[0-9]+\.[0-9]+/ prec=1
Point    /\./                    prec=1
Hash     /\#/                    prec=1
Dollar   /\$/                    prec=1
%start Product
%productions
Product   ::= Reference Price | Price Reference ;
Reference ::= [Hash] Integer Point Integer ;
Price     ::= [Dollar] Decimal ;
";
