//! The Fence extended-graph construction and chart-parsing phases.
//!
//! `build_ela_graph` completes a lexical analysis graph with cores (handle
//! containers at token boundaries). `chart_parse` then runs the agenda-driven
//! reduction loop over the extended graph and produces the implicit parse
//! graph, in which a node is identified by its (start, end, symbol) triple.
//! Each reduction also records its production and ordered child list so the
//! enforcement phase can expand nodes without re-matching.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::language::Grammar;
use crate::scanner::{LexicalAnalysisGraph, Token};

/// A production with a dot splitting matched from pending rhs symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DottedProduction {
    /// Index into `Grammar::productions`.
    pub production: usize,
    pub dot: usize,
}

/// A partially applied production and the input span its matched prefix
/// covers. `dot == 0` implies `start == end` (nothing matched yet).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle {
    pub dotted: DottedProduction,
    pub start: usize,
    pub end: usize,
}

/// A set of handles attached at a boundary between tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Core {
    pub handles: BTreeSet<Handle>,
    pub preceding_tokens: BTreeSet<usize>,
    pub following_tokens: BTreeSet<usize>,
}

/// The extended lexical analysis graph: tokens linked to cores instead of to
/// each other. Every token has exactly one preceding core; cores are shared
/// between tokens with an identical preceding token set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElaGraph {
    pub tokens: Vec<Token>,
    pub cores: Vec<Core>,
    pub starting_core: usize,
    pub final_core: usize,
    pub token_preceding_core: Vec<usize>,
    pub token_following_cores: Vec<BTreeSet<usize>>,
}

/// Converts an LA graph into an ELA graph by completing it with cores.
pub fn build_ela_graph(la: &LexicalAnalysisGraph) -> ElaGraph {
    let n = la.tokens.len();
    let mut cores: Vec<Core> = Vec::new();
    let mut by_key: HashMap<Vec<usize>, usize> = HashMap::new();
    // The starting core is the core keyed by the empty preceding set.
    cores.push(Core::default());
    by_key.insert(Vec::new(), 0);
    let starting_core = 0;

    let mut token_preceding_core = Vec::with_capacity(n);
    for t in 0..n {
        let key: Vec<usize> = la.preceding[t].iter().copied().collect();
        let idx = *by_key.entry(key).or_insert_with(|| {
            cores.push(Core::default());
            cores.len() - 1
        });
        cores[idx].following_tokens.insert(t);
        token_preceding_core.push(idx);
    }
    let final_core = if n == 0 {
        starting_core
    } else {
        cores.push(Core::default());
        cores.len() - 1
    };
    let mut token_following_cores = vec![BTreeSet::new(); n];
    #[allow(clippy::needless_range_loop)]
    for t in 0..n {
        let fcores: BTreeSet<usize> = if la.following[t].is_empty() {
            BTreeSet::from([final_core])
        } else {
            la.following[t]
                .iter()
                .map(|&u| token_preceding_core[u])
                .collect()
        };
        for &c in &fcores {
            cores[c].preceding_tokens.insert(t);
        }
        token_following_cores[t] = fcores;
    }
    ElaGraph {
        tokens: la.tokens.clone(),
        cores,
        starting_core,
        final_core,
        token_preceding_core,
        token_following_cores,
    }
}

/// One possible result of matching a handle against a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdvanceOutcome {
    Advanced(Handle),
    Reduction {
        production: usize,
        start: usize,
        end: usize,
    },
}

/// Core dot-advancement logic shared by the public operation and the parser:
/// from `dot`, epsilon symbols may be skipped before the match, and a match
/// whose remaining symbols are all skippable also yields a reduction.
/// Returns `(dot after the match, reduces)` pairs; empty means no match.
fn advance_steps(
    rhs_len: usize,
    matches: impl Fn(usize) -> bool,
    skippable: impl Fn(usize) -> bool,
) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    let mut d = 0;
    loop {
        // `d` counts skips relative to the incoming dot; callers add it back.
        let here = d;
        if here < rhs_len && matches(here) {
            let mut rest = here + 1;
            while rest < rhs_len && skippable(rest) {
                rest += 1;
            }
            out.push((here + 1, rest == rhs_len));
        }
        if d < rhs_len && skippable(d) {
            d += 1;
        } else {
            break;
        }
    }
    out
}

/// Matches the symbol after the handle's dot against a node, skipping
/// epsilon symbols where possible. All applicable outcomes are returned;
/// an empty vector means no match.
pub fn advance_handle(
    handle: &Handle,
    node_symbol: &str,
    node_start: usize,
    node_end: usize,
    grammar: &Grammar,
) -> Vec<AdvanceOutcome> {
    let production = &grammar.productions[handle.dotted.production];
    let rhs = &production.rhs;
    let dot = handle.dotted.dot;
    let base_start = if dot == 0 { node_start } else { handle.start };
    advance_steps(
        rhs.len() - dot,
        |off| rhs[dot + off].symbol == node_symbol,
        |off| grammar.epsilon_symbols.contains(&rhs[dot + off].symbol),
    )
    .into_iter()
    .flat_map(|(new_off, reduces)| {
        let advanced = AdvanceOutcome::Advanced(Handle {
            dotted: DottedProduction {
                production: handle.dotted.production,
                dot: dot + new_off,
            },
            start: base_start,
            end: node_end,
        });
        let mut v = vec![advanced];
        if reduces {
            v.push(AdvanceOutcome::Reduction {
                production: handle.dotted.production,
                start: base_start,
                end: node_end,
            });
        }
        v
    })
    .collect()
}

/// An implicit parse graph node. Identity is exactly the (start, end, symbol)
/// triple; `token` links terminal nodes back to the LA graph token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicitNode {
    pub symbol: String,
    pub start: usize,
    pub end: usize,
    pub token: Option<usize>,
}

/// A recorded reduction: the production applied and the ordered implicit
/// child nodes it consumed (epsilon-skipped symbols contribute no child).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub production: usize,
    pub children: Vec<usize>,
}

/// Counters for the termination-bound and complexity assertions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChartStats {
    pub agenda_entries: u64,
}

/// The implicit parse graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IGraph {
    pub nodes: Vec<ImplicitNode>,
    pub starting_nodes: Vec<usize>,
    pub derivations: Vec<Vec<Derivation>>,
    pub stats: ChartStats,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no parse: no start-symbol node spans the whole input ({} maximal nodes: {})",
            maximal.len(),
            maximal.iter().map(|n| format!("({},{},{})", n.start, n.end, n.symbol)).collect::<Vec<_>>().join(" "))]
    NoParse { maximal: Vec<ImplicitNode> },
}

struct CompiledGrammar {
    syms: Vec<String>,
    prods: Vec<(u32, Vec<u32>)>,
    start: Option<u32>,
    eps: Vec<bool>,
    /// For each symbol, the productions whose dot-0 handle can match it
    /// (possibly after epsilon skips).
    init_by_sym: Vec<Vec<u32>>,
}

impl CompiledGrammar {
    fn new(grammar: &Grammar) -> Self {
        let mut syms: Vec<String> = Vec::new();
        let add = |name: &str, syms: &mut Vec<String>, ids: &mut HashMap<String, u32>| -> u32 {
            if let Some(&i) = ids.get(name) {
                return i;
            }
            let i = syms.len() as u32;
            syms.push(name.to_string());
            ids.insert(name.to_string(), i);
            i
        };
        let mut ids: HashMap<String, u32> = HashMap::new();
        for t in &grammar.terminals {
            add(t, &mut syms, &mut ids);
        }
        for nt in &grammar.nonterminals {
            add(nt, &mut syms, &mut ids);
        }
        let mut prods = Vec::with_capacity(grammar.productions.len());
        for p in &grammar.productions {
            let lhs = add(&p.lhs, &mut syms, &mut ids);
            let rhs: Vec<u32> = p
                .rhs
                .iter()
                .map(|e| add(&e.symbol, &mut syms, &mut ids))
                .collect();
            prods.push((lhs, rhs));
        }
        let mut eps = vec![false; syms.len()];
        for s in &grammar.epsilon_symbols {
            let i = add(s, &mut syms, &mut ids);
            if (i as usize) >= eps.len() {
                eps.resize(i as usize + 1, false);
            }
            eps[i as usize] = true;
        }
        let start = ids.get(&grammar.start).copied();
        let mut init_by_sym = vec![Vec::new(); syms.len()];
        for (pi, (_, rhs)) in prods.iter().enumerate() {
            let mut seen = HashSet::new();
            for &s in rhs.iter() {
                if seen.insert(s) {
                    init_by_sym[s as usize].push(pi as u32);
                }
                if !eps[s as usize] {
                    break;
                }
            }
        }
        CompiledGrammar {
            syms,
            prods,
            start,
            eps,
            init_by_sym,
        }
    }
}

#[derive(Clone)]
struct CNode {
    sym: u32,
    start: usize,
    end: usize,
    token: Option<u32>,
}

struct CoreState {
    handles: Vec<u32>,
    handle_set: HashSet<u32>,
    following_nodes: Vec<u32>,
}

struct ChartRun<'g> {
    g: &'g CompiledGrammar,
    nodes: Vec<CNode>,
    node_ids: HashMap<(u32, usize, usize), u32>,
    derivs: Vec<Vec<(u32, Vec<u32>)>>,
    deriv_seen: HashSet<(u32, u32, Box<[u32]>)>,
    handles: Vec<(u32, u32, Vec<u32>)>, // (production, dot, children)
    handle_ids: HashMap<(u32, u32, Box<[u32]>), u32>,
    cores: Vec<CoreState>,
    core_at_start: HashMap<usize, usize>,
    fcores_by_end: HashMap<usize, Vec<usize>>,
    starting_core: usize,
    final_core: usize,
    agenda: Vec<(u32, u32)>,
    seen: HashSet<(u32, u32)>,
    starting_nodes: Vec<u32>,
    stats: ChartStats,
}

impl<'g> ChartRun<'g> {
    fn push_entry(&mut self, handle: u32, node: u32) {
        if self.seen.insert((handle, node)) {
            self.stats.agenda_entries += 1;
            self.agenda.push((handle, node));
        }
    }

    /// Whether a node with symbol `sym` can advance this handle at all
    /// (directly or past epsilon symbols). Pairs that cannot are pruned from
    /// the agenda; they would produce no outcome.
    fn can_consume(&self, handle: u32, sym: u32) -> bool {
        let (prod, dot, _) = &self.handles[handle as usize];
        let rhs = &self.g.prods[*prod as usize].1;
        let mut d = *dot as usize;
        loop {
            if d >= rhs.len() {
                return false;
            }
            if rhs[d] == sym {
                return true;
            }
            if self.g.eps[rhs[d] as usize] {
                d += 1;
            } else {
                return false;
            }
        }
    }

    fn intern_handle(&mut self, prod: u32, dot: u32, children: &[u32]) -> u32 {
        let key = (prod, dot, children.to_vec().into_boxed_slice());
        if let Some(&h) = self.handle_ids.get(&key) {
            return h;
        }
        let h = self.handles.len() as u32;
        self.handles.push((prod, dot, children.to_vec()));
        self.handle_ids.insert(key, h);
        h
    }

    fn intern_node(&mut self, sym: u32, start: usize, end: usize, token: Option<u32>) -> (u32, bool) {
        if let Some(&id) = self.node_ids.get(&(sym, start, end)) {
            return (id, false);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(CNode {
            sym,
            start,
            end,
            token,
        });
        self.derivs.push(Vec::new());
        self.node_ids.insert((sym, start, end), id);
        (id, true)
    }

    /// Registers a new node with its boundary cores, seeds the agenda with
    /// the core's stored handles plus the production-initial handles for its
    /// symbol, and checks the starting-node criterion.
    fn introduce_node(&mut self, nid: u32) {
        let node = self.nodes[nid as usize].clone();
        let pcore = *self
            .core_at_start
            .get(&node.start)
            .expect("node start must coincide with a token start");
        self.cores[pcore].following_nodes.push(nid);
        let stored: Vec<u32> = self.cores[pcore].handles.clone();
        for h in stored {
            if self.can_consume(h, node.sym) {
                self.push_entry(h, nid);
            }
        }
        // Lazily materialized dot-0 handles: one per production that could
        // consume this symbol first.
        for pi in self.g.init_by_sym[node.sym as usize].clone() {
            let h = self.intern_handle(pi, 0, &[]);
            self.push_entry(h, nid);
        }
        if Some(node.sym) == self.g.start
            && pcore == self.starting_core
            && self
                .fcores_by_end
                .get(&node.end)
                .is_some_and(|f| f.as_slice() == [self.final_core])
        {
            self.starting_nodes.push(nid);
        }
    }

    fn insert_handle_into_following_cores(&mut self, hid: u32, node: u32) {
        let end = self.nodes[node as usize].end;
        let fcores = match self.fcores_by_end.get(&end) {
            Some(f) => f.clone(),
            None => return,
        };
        for c in fcores {
            if self.cores[c].handle_set.insert(hid) {
                self.cores[c].handles.push(hid);
                let followers = self.cores[c].following_nodes.clone();
                for m in followers {
                    if self.can_consume(hid, self.nodes[m as usize].sym) {
                        self.push_entry(hid, m);
                    }
                }
            }
        }
    }

    fn reduce(&mut self, prod: u32, children: &[u32]) {
        let lhs = self.g.prods[prod as usize].0;
        let start = self.nodes[children[0] as usize].start;
        let end = self.nodes[*children.last().unwrap() as usize].end;
        let (nid, fresh) = self.intern_node(lhs, start, end, None);
        if fresh {
            self.introduce_node(nid);
        }
        let key = (nid, prod, children.to_vec().into_boxed_slice());
        if self.deriv_seen.insert(key) {
            self.derivs[nid as usize].push((prod, children.to_vec()));
        }
    }
}

/// Runs the agenda-driven chart-parsing phase over an ELA graph.
pub fn chart_parse(ela: &ElaGraph, grammar: &Grammar) -> Result<IGraph, ParseError> {
    chart_parse_with(ela, grammar, None)
}

/// Internal variant with an optional shuffle seed for the agenda-order
/// differential test; the dedup set makes the fixpoint order-independent.
pub(crate) fn chart_parse_with(
    ela: &ElaGraph,
    grammar: &Grammar,
    shuffle_seed: Option<u64>,
) -> Result<IGraph, ParseError> {
    let g = CompiledGrammar::new(grammar);
    let sym_id: HashMap<&str, u32> = g
        .syms
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();

    let mut run = ChartRun {
        g: &g,
        nodes: Vec::new(),
        node_ids: HashMap::new(),
        derivs: Vec::new(),
        deriv_seen: HashSet::new(),
        handles: Vec::new(),
        handle_ids: HashMap::new(),
        cores: ela
            .cores
            .iter()
            .map(|_| CoreState {
                handles: Vec::new(),
                handle_set: HashSet::new(),
                following_nodes: Vec::new(),
            })
            .collect(),
        core_at_start: HashMap::new(),
        fcores_by_end: HashMap::new(),
        starting_core: ela.starting_core,
        final_core: ela.final_core,
        agenda: Vec::new(),
        seen: HashSet::new(),
        starting_nodes: Vec::new(),
        stats: ChartStats::default(),
    };

    for (t, token) in ela.tokens.iter().enumerate() {
        run.core_at_start
            .insert(token.start, ela.token_preceding_core[t]);
        run.fcores_by_end
            .entry(token.end)
            .or_insert_with(|| ela.token_following_cores[t].iter().copied().collect());
    }

    // Introduce token nodes in graph order.
    for (t, token) in ela.tokens.iter().enumerate() {
        if let Some(&sym) = sym_id.get(token.ty.as_str()) {
            let (nid, fresh) = run.intern_node(sym, token.start, token.end, Some(t as u32));
            if fresh {
                run.introduce_node(nid);
            }
        }
        // Tokens of a type the grammar never mentions simply take no part in
        // parsing; paths through them cannot reduce.
    }

    let mut rng = shuffle_seed.unwrap_or(0);
    while !run.agenda.is_empty() {
        let (hid, nid) = if shuffle_seed.is_some() {
            // xorshift; order must not affect the result.
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            let i = (rng as usize) % run.agenda.len();
            run.agenda.swap_remove(i)
        } else {
            run.agenda.pop().unwrap()
        };
        let (prod, dot, children) = run.handles[hid as usize].clone();
        let nsym = run.nodes[nid as usize].sym;
        let rhs = &g.prods[prod as usize].1;
        let outcomes = advance_steps(
            rhs.len() - dot as usize,
            |off| rhs[dot as usize + off] == nsym,
            |off| g.eps[rhs[dot as usize + off] as usize],
        );
        for (new_off, reduces) in outcomes {
            let mut new_children = children.clone();
            new_children.push(nid);
            let new_dot = dot + new_off as u32;
            if (new_dot as usize) < rhs.len() {
                let nh = run.intern_handle(prod, new_dot, &new_children);
                run.insert_handle_into_following_cores(nh, nid);
            }
            if reduces {
                run.reduce(prod, &new_children);
            }
        }
    }

    let nodes: Vec<ImplicitNode> = run
        .nodes
        .iter()
        .map(|n| ImplicitNode {
            symbol: g.syms[n.sym as usize].clone(),
            start: n.start,
            end: n.end,
            token: n.token.map(|t| t as usize),
        })
        .collect();
    let derivations: Vec<Vec<Derivation>> = run
        .derivs
        .iter()
        .map(|ds| {
            ds.iter()
                .map(|(p, ch)| Derivation {
                    production: *p as usize,
                    children: ch.iter().map(|&c| c as usize).collect(),
                })
                .collect()
        })
        .collect();
    let mut starting_nodes: Vec<usize> =
        run.starting_nodes.iter().map(|&n| n as usize).collect();
    starting_nodes.sort_unstable();

    if starting_nodes.is_empty() {
        let max_span = nodes
            .iter()
            .filter(|n| n.token.is_none())
            .map(|n| n.end - n.start)
            .max()
            .unwrap_or(0);
        let mut maximal: Vec<ImplicitNode> = nodes
            .iter()
            .filter(|n| n.token.is_none() && n.end - n.start == max_span)
            .cloned()
            .collect();
        maximal.truncate(16);
        return Err(ParseError::NoParse { maximal });
    }

    Ok(IGraph {
        nodes,
        starting_nodes,
        derivations,
        stats: run.stats,
    })
}

impl IGraph {
    /// Number of non-token nodes.
    pub fn implicit_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.token.is_none()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::{
        desugar_optionals, extract_epsilon_symbols, Production, ProductionId, RhsElement,
    };
    use crate::scanner::compute_adjacency;

    fn prod(lhs: &str, rhs: &[&str], base: &str) -> Production {
        Production::new(
            lhs,
            rhs.iter().map(|s| RhsElement::required(s)).collect(),
            ProductionId::new(base),
        )
    }

    /// LA graph for a straight-line token sequence with unit spans.
    fn chain(seq: &[&str]) -> LexicalAnalysisGraph {
        let tokens: BTreeSet<Token> = seq
            .iter()
            .enumerate()
            .map(|(i, ty)| Token::new(ty, i, i + 1, ty))
            .collect();
        compute_adjacency(tokens)
    }

    fn product_grammar() -> Grammar {
        let raw = vec![
            Production::new(
                "Product",
                vec![
                    RhsElement::required("Reference"),
                    RhsElement::required("Price"),
                ],
                ProductionId::new("Product.0"),
            ),
            Production::new(
                "Product",
                vec![
                    RhsElement::required("Price"),
                    RhsElement::required("Reference"),
                ],
                ProductionId::new("Product.1"),
            ),
            Production::new(
                "Reference",
                vec![
                    RhsElement::optional("Hash"),
                    RhsElement::required("Integer"),
                    RhsElement::required("Point"),
                    RhsElement::required("Integer"),
                ],
                ProductionId::new("Reference.0"),
            ),
            Production::new(
                "Price",
                vec![
                    RhsElement::optional("Dollar"),
                    RhsElement::required("Decimal"),
                ],
                ProductionId::new("Price.0"),
            ),
        ];
        let g = Grammar::new(
            vec!["Integer", "Decimal", "Point", "Hash", "Dollar"],
            desugar_optionals(&raw),
            "Product",
        );
        extract_epsilon_symbols(g)
    }

    fn product_la_graph() -> LexicalAnalysisGraph {
        let tokens = BTreeSet::from([
            Token::new("Integer", 0, 1, "5"),
            Token::new("Decimal", 0, 3, "5.2"),
            Token::new("Point", 1, 2, "."),
            Token::new("Integer", 2, 3, "2"),
            Token::new("Dollar", 4, 5, "$"),
            Token::new("Integer", 6, 7, "8"),
            Token::new("Decimal", 6, 9, "8.4"),
            Token::new("Point", 7, 8, "."),
            Token::new("Integer", 8, 9, "4"),
        ]);
        compute_adjacency(tokens)
    }

    #[test]
    fn ela_example_boundaries() {
        let la = product_la_graph();
        let ela = build_ela_graph(&la);
        let start_followers: BTreeSet<&str> = ela.cores[ela.starting_core]
            .following_tokens
            .iter()
            .map(|&t| ela.tokens[t].text.as_str())
            .collect();
        assert_eq!(start_followers, BTreeSet::from(["5", "5.2"]));
        let final_preceders: BTreeSet<&str> = ela.cores[ela.final_core]
            .preceding_tokens
            .iter()
            .map(|&t| ela.tokens[t].text.as_str())
            .collect();
        assert_eq!(final_preceders, BTreeSet::from(["4", "8.4"]));
    }

    #[test]
    fn ela_empty_graph() {
        let la = compute_adjacency(BTreeSet::new());
        let ela = build_ela_graph(&la);
        assert_eq!(ela.starting_core, ela.final_core);
        assert!(ela.tokens.is_empty());
    }

    #[test]
    fn ela_single_token() {
        let la = chain(&["a"]);
        let ela = build_ela_graph(&la);
        assert_eq!(ela.token_preceding_core[0], ela.starting_core);
        assert_eq!(
            ela.token_following_cores[0],
            BTreeSet::from([ela.final_core])
        );
    }

    #[test]
    fn advance_matches_and_reduces() {
        let g = product_grammar();
        let price_dollar = g
            .productions
            .iter()
            .position(|p| p.id.base == "Price.0" && p.rhs.len() == 2)
            .unwrap();
        let handle = Handle {
            dotted: DottedProduction {
                production: price_dollar,
                dot: 1,
            },
            start: 4,
            end: 6,
        };
        let outcomes = advance_handle(&handle, "Decimal", 6, 9, &g);
        assert!(outcomes.contains(&AdvanceOutcome::Reduction {
            production: price_dollar,
            start: 4,
            end: 9
        }));
    }

    #[test]
    fn advance_no_match() {
        let g = product_grammar();
        let handle = Handle {
            dotted: DottedProduction {
                production: 0,
                dot: 0,
            },
            start: 0,
            end: 0,
        };
        assert!(advance_handle(&handle, "Dollar", 0, 1, &g).is_empty());
    }

    #[test]
    fn advance_epsilon_skip() {
        // X ::= A b with A epsilon-skippable: dot 0 can skip A and match b,
        // which completes the production.
        let g = {
            let mut g = Grammar::new(
                vec!["b"],
                vec![prod("X", &["A", "b"], "X.0"), prod("A", &[], "A.0")],
                "X",
            );
            g.nonterminals.insert("A".into());
            extract_epsilon_symbols(g)
        };
        let handle = Handle {
            dotted: DottedProduction {
                production: 0,
                dot: 0,
            },
            start: 3,
            end: 3,
        };
        let outcomes = advance_handle(&handle, "b", 3, 4, &g);
        assert!(outcomes.contains(&AdvanceOutcome::Reduction {
            production: 0,
            start: 3,
            end: 4
        }));
        assert!(outcomes.contains(&AdvanceOutcome::Advanced(Handle {
            dotted: DottedProduction {
                production: 0,
                dot: 2
            },
            start: 3,
            end: 4
        })));
    }

    #[test]
    fn parse_dollar_decimal_price() {
        let mut g = product_grammar();
        g.start = "Price".to_string();
        let la = chain(&["Dollar", "Decimal"]);
        let ig = chart_parse(&build_ela_graph(&la), &g).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);
        let n = &ig.nodes[ig.starting_nodes[0]];
        assert_eq!((n.start, n.end, n.symbol.as_str()), (0, 2, "Price"));
    }

    #[test]
    fn parse_example_graph_single_product() {
        let ig = chart_parse(&build_ela_graph(&product_la_graph()), &product_grammar()).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);
        let n = &ig.nodes[ig.starting_nodes[0]];
        assert_eq!((n.start, n.end, n.symbol.as_str()), (0, 9, "Product"));
    }

    #[test]
    fn parse_five_point_two_alone_fails() {
        let tokens = BTreeSet::from([
            Token::new("Integer", 0, 1, "5"),
            Token::new("Decimal", 0, 3, "5.2"),
            Token::new("Point", 1, 2, "."),
            Token::new("Integer", 2, 3, "2"),
        ]);
        let la = compute_adjacency(tokens);
        let err = chart_parse(&build_ela_graph(&la), &product_grammar()).unwrap_err();
        match err {
            ParseError::NoParse { maximal } => assert!(!maximal.is_empty()),
        }
    }

    #[test]
    fn left_right_and_cyclic_grammars_terminate() {
        // Left recursive.
        let left = extract_epsilon_symbols(Grammar::new(
            vec!["b"],
            vec![prod("A", &["A", "b"], "A.0"), prod("A", &["b"], "A.1")],
            "A",
        ));
        let ig = chart_parse(&build_ela_graph(&chain(&["b"; 12])), &left).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);

        // Right recursive.
        let right = extract_epsilon_symbols(Grammar::new(
            vec!["b"],
            vec![prod("A", &["b", "A"], "A.0"), prod("A", &["b"], "A.1")],
            "A",
        ));
        let ig = chart_parse(&build_ela_graph(&chain(&["b"; 12])), &right).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);

        // Cyclic: A ::= c | B; B ::= A.
        let cyclic = extract_epsilon_symbols(Grammar::new(
            vec!["c"],
            vec![
                prod("A", &["c"], "A.0"),
                prod("A", &["B"], "A.1"),
                prod("B", &["A"], "B.0"),
            ],
            "A",
        ));
        let ig = chart_parse(&build_ela_graph(&chain(&["c"])), &cyclic).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);
        let a = ig.starting_nodes[0];
        assert_eq!(ig.nodes[a].symbol, "A");
        // Both the direct and the cyclic derivation are recorded.
        assert_eq!(ig.derivations[a].len(), 2);
    }

    #[test]
    fn epsilon_symbols_are_skipped_in_parsing() {
        // X ::= A b, A ::= eps | a
        let g = extract_epsilon_symbols(Grammar::new(
            vec!["a", "b"],
            vec![
                prod("X", &["A", "b"], "X.0"),
                prod("A", &[], "A.0"),
                prod("A", &["a"], "A.1"),
            ],
            "X",
        ));
        let ig = chart_parse(&build_ela_graph(&chain(&["b"])), &g).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);
        let ig = chart_parse(&build_ela_graph(&chain(&["a", "b"])), &g).unwrap();
        assert_eq!(ig.starting_nodes.len(), 1);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let g = extract_epsilon_symbols(Grammar::new(
            vec!["n", "plus"],
            vec![
                prod("E", &["E", "plus", "E"], "E.0"),
                prod("E", &["n"], "E.1"),
            ],
            "E",
        ));
        let la = chain(&["n", "plus", "n", "plus", "n", "plus", "n"]);
        let ela = build_ela_graph(&la);
        let a = chart_parse(&ela, &g).unwrap();
        let b = chart_parse(&ela, &g).unwrap();
        assert_eq!(a, b);
        for seed in [1u64, 42, 12345] {
            let c = chart_parse_with(&ela, &g, Some(seed)).unwrap();
            // Node discovery order may differ; compare as canonical sets.
            let canon = |ig: &IGraph| {
                let mut triples: Vec<(usize, usize, String, usize)> = ig
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (n.start, n.end, n.symbol.clone(), ig.derivations[i].len()))
                    .collect();
                triples.sort();
                triples
            };
            assert_eq!(canon(&a), canon(&c));
            assert_eq!(a.starting_nodes.len(), c.starting_nodes.len());
        }
    }

    #[test]
    fn termination_bound_holds() {
        let g = extract_epsilon_symbols(Grammar::new(
            vec!["n", "plus"],
            vec![
                prod("E", &["E", "plus", "E"], "E.0"),
                prod("E", &["n"], "E.1"),
            ],
            "E",
        ));
        let la = chain(&["n", "plus", "n", "plus", "n", "plus", "n"]);
        let ig = chart_parse(&build_ela_graph(&la), &g).unwrap();
        let positions = 8u64; // 7 tokens -> 8 boundaries
        let max_rhs = 3u64;
        let bound = 2 * (max_rhs + 1) * positions * positions * ig.nodes.len() as u64;
        assert!(ig.stats.agenda_entries <= bound);
    }
}
