//! The Fence constraint-enforcement phase: expands the implicit parse graph
//! into an explicit parse forest while filtering candidates through
//! associativity, selection-precedence, composition-precedence, and custom
//! constraints.
//!
//! Expansion is memoized per implicit node; a history of nodes active in the
//! current recursion chain cuts cycles (a blocked node contributes no
//! expansions within that chain, so each cyclic derivation yields only its
//! minimal non-cyclic trees). Memoized results are consulted only for nodes
//! not currently in the history, and a result is cached only when it did not
//! depend on a blocked ancestor.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::chart::IGraph;
use crate::language::{Associativity, ConstraintSet, Grammar, ProductionId};
use crate::scanner::Token;

/// A node of the explicit parse forest. Terminals carry their token index;
/// nonterminals carry the production (index into `Grammar::productions`) and
/// ordered children. Structurally identical nodes are stored once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitNode {
    pub symbol: String,
    pub start: usize,
    pub end: usize,
    pub production: Option<usize>,
    pub token: Option<usize>,
    pub children: Vec<usize>,
}

/// Per-constraint rejection counters for reporting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EnforceStats {
    pub rejected_associativity: u64,
    pub rejected_selection: u64,
    pub rejected_composition: u64,
    pub rejected_custom: u64,
}

impl EnforceStats {
    pub fn total_rejected(&self) -> u64 {
        self.rejected_associativity
            + self.rejected_selection
            + self.rejected_composition
            + self.rejected_custom
    }
}

/// The explicit parse forest: a shared node store plus the surviving roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EGraph {
    pub nodes: Vec<ExplicitNode>,
    pub starting_nodes: Vec<usize>,
    pub stats: EnforceStats,
}

impl EGraph {
    pub fn tree_count(&self) -> usize {
        self.starting_nodes.len()
    }

    /// A canonical bracketed rendering of one tree, for comparisons.
    pub fn render(&self, node: usize) -> String {
        let n = &self.nodes[node];
        if n.children.is_empty() {
            format!("{}@{}", n.symbol, n.start)
        } else {
            let inner: Vec<String> = n.children.iter().map(|&c| self.render(c)).collect();
            format!("{}({})", n.symbol, inner.join(","))
        }
    }

    /// Sorted canonical renderings of all trees.
    pub fn canonical_trees(&self) -> Vec<String> {
        let mut v: Vec<String> = self.starting_nodes.iter().map(|&r| self.render(r)).collect();
        v.sort();
        v
    }

    /// Token indices at the leaves of a tree, left to right.
    pub fn frontier(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_frontier(node, &mut out);
        out
    }

    fn collect_frontier(&self, node: usize, out: &mut Vec<usize>) {
        let n = &self.nodes[node];
        if let Some(t) = n.token {
            out.push(t);
        }
        for &c in &n.children {
            self.collect_frontier(c, out);
        }
    }
}

/// Read-only view of a candidate node handed to custom evaluators.
pub struct CandidateView<'a> {
    pub symbol: &'a str,
    pub start: usize,
    pub end: usize,
    pub production: &'a ProductionId,
    pub children: Vec<ChildInfo<'a>>,
}

/// Summary of one direct child of the candidate.
pub struct ChildInfo<'a> {
    pub symbol: &'a str,
    pub start: usize,
    pub end: usize,
    pub production: Option<&'a ProductionId>,
    /// Token text for terminal children.
    pub text: Option<&'a str>,
}

pub type Evaluator = Rc<dyn Fn(&CandidateView) -> Result<bool, String>>;

/// Named custom-constraint evaluators. A production opts in through
/// `ConstraintSet::custom_evaluators` (base production id → evaluator name).
#[derive(Default, Clone)]
pub struct EvaluatorRegistry {
    evaluators: BTreeMap<String, Evaluator>,
}

impl EvaluatorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&CandidateView) -> Result<bool, String> + 'static,
    {
        self.evaluators.insert(name.to_string(), Rc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&Evaluator> {
        self.evaluators.get(name)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EnforceError {
    #[error("all parse trees rejected by constraints ({} candidates: {} associativity, {} selection, {} composition, {} custom); e.g. {}",
            stats.total_rejected(), stats.rejected_associativity, stats.rejected_selection,
            stats.rejected_composition, stats.rejected_custom,
            samples.join("; "))]
    AllTreesRejected {
        stats: EnforceStats,
        /// A few rejected candidates with their last failing constraint.
        samples: Vec<String>,
    },
    #[error("custom evaluator for production {production} failed: {message}")]
    EvaluatorFailure { production: String, message: String },
}

/// Associativity filter. `children` holds, per direct child position, the
/// base id of the production that derived it (None for terminals). The
/// candidate is rejected when a child derived by the same base production
/// occupies a position the declared direction forbids: any non-first
/// position for left-to-right, any non-last for right-to-left, any position
/// at all for non-associative.
pub fn check_associativity(
    production: &ProductionId,
    children: &[Option<&ProductionId>],
    constraints: &ConstraintSet,
) -> bool {
    let Some(assoc) = constraints.associativity.get(&production.base) else {
        return true;
    };
    let last = children.len().saturating_sub(1);
    for (pos, child) in children.iter().enumerate() {
        let same = matches!(child, Some(c) if c.base == production.base);
        if !same {
            continue;
        }
        let violates = match assoc {
            Associativity::LeftToRight => pos > 0,
            Associativity::RightToLeft => pos < last,
            Associativity::NonAssociative => true,
        };
        if violates {
            return false;
        }
    }
    true
}

/// Composition-precedence filter: the candidate is rejected when a declared
/// pair states that its production inhibits the production deriving one of
/// its direct children. Only the declared pairs apply, with no closure.
pub fn check_composition_precedence(
    production: &ProductionId,
    children: &[Option<&ProductionId>],
    constraints: &ConstraintSet,
) -> bool {
    if constraints.composition_precedence.is_empty() {
        return true;
    }
    !children.iter().flatten().any(|c| {
        constraints
            .composition_precedence
            .iter()
            .any(|(outer, inner)| *outer == production.base && *inner == c.base)
    })
}

/// Selection-precedence filter over candidates sharing one implicit node.
/// Each candidate is its base production id plus an identity key per child
/// (structural, so equal sequences mean the same matched nodes). Returns a
/// removal flag per candidate: `q` is removed when some candidate `p` with
/// `p` preceding `q` in the transitive closure matches the identical child
/// sequence; mutually-preceding pairs (a declaration cycle) inhibit nothing.
pub fn check_selection_precedence(
    candidates: &[(String, Vec<u64>)],
    closure: &BTreeSet<(String, String)>,
) -> Vec<bool> {
    let mut removed = vec![false; candidates.len()];
    if closure.is_empty() {
        return removed;
    }
    for (qi, (qbase, qseq)) in candidates.iter().enumerate() {
        for (pi, (pbase, pseq)) in candidates.iter().enumerate() {
            if pi == qi || pseq != qseq {
                continue;
            }
            let p_over_q = closure.contains(&(pbase.clone(), qbase.clone()));
            let q_over_p = closure.contains(&(qbase.clone(), pbase.clone()));
            if p_over_q && !q_over_p {
                removed[qi] = true;
                break;
            }
        }
    }
    removed
}

struct Expansion<'a> {
    igraph: &'a IGraph,
    grammar: &'a Grammar,
    constraints: &'a ConstraintSet,
    tokens: &'a [Token],
    registry: &'a EvaluatorRegistry,
    selection_closure: BTreeSet<(String, String)>,
    /// Content-addressed store of explicit nodes built so far.
    entries: Vec<Entry>,
    ids: HashMap<EKey, u32>,
    memo: HashMap<usize, Vec<u32>>,
    /// Implicit nodes active in the current chain, with their depth.
    active: HashMap<usize, usize>,
    stats: EnforceStats,
    samples: Vec<String>,
    failure: Option<EnforceError>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum EKey {
    Tok(u32),
    Nt(u32, Box<[u32]>),
}

struct Entry {
    inode: usize,
    key: EKey,
}

impl<'a> Expansion<'a> {
    fn intern(&mut self, inode: usize, key: EKey) -> u32 {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.entries.len() as u32;
        self.entries.push(Entry {
            inode,
            key: key.clone(),
        });
        self.ids.insert(key, id);
        id
    }

    fn note_rejection(&mut self, prod: usize, inode: usize, constraint: &str) {
        if self.samples.len() < 8 {
            let n = &self.igraph.nodes[inode];
            self.samples.push(format!(
                "{} at ({},{}) by {}",
                self.grammar.productions[prod].id, n.start, n.end, constraint
            ));
        }
    }

    fn run_custom(&mut self, prod: usize, inode: usize, children: &[u32]) -> Option<bool> {
        let pid = &self.grammar.productions[prod].id;
        let Some(eval_name) = self.constraints.custom_evaluators.get(&pid.base) else {
            return Some(true);
        };
        let Some(eval) = self.registry.get(eval_name) else {
            self.failure = Some(EnforceError::EvaluatorFailure {
                production: pid.to_string(),
                message: format!("no evaluator named {eval_name:?} registered"),
            });
            return None;
        };
        let eval = eval.clone();
        let node = &self.igraph.nodes[inode];
        let child_infos: Vec<ChildInfo> = children
            .iter()
            .map(|&c| {
                let entry = &self.entries[c as usize];
                let cn = &self.igraph.nodes[entry.inode];
                ChildInfo {
                    symbol: &cn.symbol,
                    start: cn.start,
                    end: cn.end,
                    production: match &entry.key {
                        EKey::Tok(_) => None,
                        EKey::Nt(p, _) => Some(&self.grammar.productions[*p as usize].id),
                    },
                    text: cn.token.map(|t| self.tokens[t].text.as_str()),
                }
            })
            .collect();
        let view = CandidateView {
            symbol: &node.symbol,
            start: node.start,
            end: node.end,
            production: pid,
            children: child_infos,
        };
        match eval(&view) {
            Ok(verdict) => Some(verdict),
            Err(message) => {
                self.failure = Some(EnforceError::EvaluatorFailure {
                    production: pid.to_string(),
                    message,
                });
                None
            }
        }
    }

    /// Returns the surviving expansions of `inode` plus the shallowest depth
    /// of any history-blocked ancestor the result depended on (`usize::MAX`
    /// when none); results are memoized only when independent of the chain.
    fn expand_node(&mut self, inode: usize, depth: usize) -> (Vec<u32>, usize) {
        if let Some(&d) = self.active.get(&inode) {
            return (Vec::new(), d);
        }
        if let Some(memoized) = self.memo.get(&inode) {
            return (memoized.clone(), usize::MAX);
        }
        let node = &self.igraph.nodes[inode];
        if let Some(t) = node.token {
            let id = self.intern(inode, EKey::Tok(t as u32));
            self.memo.insert(inode, vec![id]);
            return (vec![id], usize::MAX);
        }

        self.active.insert(inode, depth);
        let mut min_block = usize::MAX;
        // All candidates across this node's derivations, gathered before the
        // per-implicit-node selection pass.
        let mut candidates: Vec<(u32, Vec<u32>)> = Vec::new();
        let derivations = self.igraph.derivations[inode].clone();
        'deriv: for d in &derivations {
            let mut child_expansions: Vec<Vec<u32>> = Vec::with_capacity(d.children.len());
            for &c in &d.children {
                let (exps, block) = self.expand_node(c, depth + 1);
                min_block = min_block.min(block);
                if self.failure.is_some() {
                    self.active.remove(&inode);
                    return (Vec::new(), min_block);
                }
                if exps.is_empty() {
                    continue 'deriv;
                }
                child_expansions.push(exps);
            }
            // Cartesian product over child expansion choices.
            let mut choice = vec![0usize; child_expansions.len()];
            loop {
                let children: Vec<u32> = choice
                    .iter()
                    .zip(&child_expansions)
                    .map(|(&i, exps)| exps[i])
                    .collect();
                let pid = &self.grammar.productions[d.production].id;
                let child_pids: Vec<Option<&ProductionId>> = children
                    .iter()
                    .map(|&c| match &self.entries[c as usize].key {
                        EKey::Tok(_) => None,
                        EKey::Nt(p, _) => Some(&self.grammar.productions[*p as usize].id),
                    })
                    .collect();
                if !check_associativity(pid, &child_pids, self.constraints) {
                    self.stats.rejected_associativity += 1;
                    self.note_rejection(d.production, inode, "associativity");
                } else if !check_composition_precedence(pid, &child_pids, self.constraints) {
                    self.stats.rejected_composition += 1;
                    self.note_rejection(d.production, inode, "composition precedence");
                } else {
                    match self.run_custom(d.production, inode, &children) {
                        None => {
                            self.active.remove(&inode);
                            return (Vec::new(), min_block);
                        }
                        Some(false) => {
                            self.stats.rejected_custom += 1;
                            self.note_rejection(d.production, inode, "custom constraint");
                        }
                        Some(true) => candidates.push((d.production as u32, children)),
                    }
                }
                // Advance the mixed-radix choice counter.
                let mut i = 0;
                loop {
                    if i == choice.len() {
                        break;
                    }
                    choice[i] += 1;
                    if choice[i] < child_expansions[i].len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == choice.len() {
                    break;
                }
            }
        }

        // Selection precedence over the gathered candidate set.
        let keyed: Vec<(String, Vec<u64>)> = candidates
            .iter()
            .map(|(p, ch)| {
                (
                    self.grammar.productions[*p as usize].id.base.clone(),
                    ch.iter().map(|&c| c as u64).collect(),
                )
            })
            .collect();
        let removed = check_selection_precedence(&keyed, &self.selection_closure);
        let mut results: Vec<u32> = Vec::new();
        let mut seen = HashSet::new();
        for (i, (p, ch)) in candidates.into_iter().enumerate() {
            if removed[i] {
                self.stats.rejected_selection += 1;
                self.note_rejection(p as usize, inode, "selection precedence");
                continue;
            }
            let id = self.intern(inode, EKey::Nt(p, ch.into_boxed_slice()));
            if seen.insert(id) {
                results.push(id);
            }
        }

        self.active.remove(&inode);
        if min_block >= depth {
            // Any block was at this node itself, so the result is complete.
            self.memo.insert(inode, results.clone());
            (results, usize::MAX)
        } else {
            (results, min_block)
        }
    }
}

/// Expands an implicit parse graph into the explicit parse forest, enforcing
/// all constraints during the expansion.
pub fn expand(
    igraph: &IGraph,
    grammar: &Grammar,
    constraints: &ConstraintSet,
    tokens: &[Token],
    registry: &EvaluatorRegistry,
) -> Result<EGraph, EnforceError> {
    let mut exp = Expansion {
        igraph,
        grammar,
        constraints,
        tokens,
        registry,
        selection_closure: constraints.selection_closure(),
        entries: Vec::new(),
        ids: HashMap::new(),
        memo: HashMap::new(),
        active: HashMap::new(),
        stats: EnforceStats::default(),
        samples: Vec::new(),
        failure: None,
    };
    let mut roots: Vec<u32> = Vec::new();
    let mut seen = HashSet::new();
    for &s in &igraph.starting_nodes {
        let (exps, _) = exp.expand_node(s, 0);
        if let Some(err) = exp.failure.take() {
            return Err(err);
        }
        for e in exps {
            if seen.insert(e) {
                roots.push(e);
            }
        }
    }
    if roots.is_empty() && !igraph.starting_nodes.is_empty() {
        return Err(EnforceError::AllTreesRejected {
            stats: exp.stats,
            samples: exp.samples,
        });
    }
    Ok(build_egraph(&exp, &roots))
}

/// Rebuilds the reachable part of the store as an `EGraph` with
/// deterministic indices (depth-first from the roots in order).
fn build_egraph(exp: &Expansion, roots: &[u32]) -> EGraph {
    fn visit(
        exp: &Expansion,
        e: u32,
        map: &mut HashMap<u32, usize>,
        nodes: &mut Vec<ExplicitNode>,
    ) -> usize {
        if let Some(&i) = map.get(&e) {
            return i;
        }
        let entry = &exp.entries[e as usize];
        let inode = &exp.igraph.nodes[entry.inode];
        let (production, token, child_ids) = match &entry.key {
            EKey::Tok(t) => (None, Some(*t as usize), Vec::new()),
            EKey::Nt(p, ch) => (Some(*p as usize), None, ch.to_vec()),
        };
        let children: Vec<usize> = child_ids
            .iter()
            .map(|&c| visit(exp, c, map, nodes))
            .collect();
        let i = nodes.len();
        nodes.push(ExplicitNode {
            symbol: inode.symbol.clone(),
            start: inode.start,
            end: inode.end,
            production,
            token,
            children,
        });
        map.insert(e, i);
        i
    }

    let mut map = HashMap::new();
    let mut nodes = Vec::new();
    let starting_nodes = roots
        .iter()
        .map(|&r| visit(exp, r, &mut map, &mut nodes))
        .collect();
    EGraph {
        nodes,
        starting_nodes,
        stats: exp.stats.clone(),
    }
}

/// Post-hoc constraint enforcement: filters an unconstrained explicit forest
/// down to the nodes that satisfy all constraints, cascading removals to
/// parents. Exists to check that early pruning during expansion is purely an
/// optimization.
pub fn filter_egraph(
    egraph: &EGraph,
    grammar: &Grammar,
    constraints: &ConstraintSet,
    tokens: &[Token],
    registry: &EvaluatorRegistry,
) -> Result<EGraph, EnforceError> {
    let closure = constraints.selection_closure();
    let n = egraph.nodes.len();
    let mut alive = vec![true; n];
    let mut stats = EnforceStats::default();
    // Rejection kind per node so repeated fixpoint rounds count each node
    // once.
    let mut rejected_as: Vec<Option<&'static str>> = vec![None; n];

    loop {
        let mut changed = false;
        // Local checks and child survival, children first (children always
        // have smaller indices than... not guaranteed; iterate to fixpoint
        // within the round instead).
        let mut local_changed = true;
        while local_changed {
            local_changed = false;
            for i in 0..n {
                if !alive[i] {
                    continue;
                }
                let node = &egraph.nodes[i];
                if node.children.iter().any(|&c| !alive[c]) {
                    alive[i] = false;
                    local_changed = true;
                    changed = true;
                    continue;
                }
                let Some(p) = node.production else { continue };
                let pid = &grammar.productions[p].id;
                let child_pids: Vec<Option<&ProductionId>> = node
                    .children
                    .iter()
                    .map(|&c| {
                        egraph.nodes[c]
                            .production
                            .map(|cp| &grammar.productions[cp].id)
                    })
                    .collect();
                let verdict = if !check_associativity(pid, &child_pids, constraints) {
                    Some("associativity")
                } else if !check_composition_precedence(pid, &child_pids, constraints) {
                    Some("composition")
                } else {
                    let custom = custom_verdict(egraph, grammar, constraints, tokens, registry, i)?;
                    if custom {
                        None
                    } else {
                        Some("custom")
                    }
                };
                if let Some(kind) = verdict {
                    alive[i] = false;
                    local_changed = true;
                    changed = true;
                    if rejected_as[i].is_none() {
                        rejected_as[i] = Some(kind);
                    }
                }
            }
        }
        // Selection precedence per (symbol, span) group of surviving nodes.
        let mut groups: BTreeMap<(String, usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, node_alive) in alive.iter().enumerate() {
            if *node_alive && egraph.nodes[i].production.is_some() {
                let node = &egraph.nodes[i];
                groups
                    .entry((node.symbol.clone(), node.start, node.end))
                    .or_default()
                    .push(i);
            }
        }
        for members in groups.values() {
            let keyed: Vec<(String, Vec<u64>)> = members
                .iter()
                .map(|&i| {
                    let node = &egraph.nodes[i];
                    (
                        grammar.productions[node.production.unwrap()].id.base.clone(),
                        node.children.iter().map(|&c| c as u64).collect(),
                    )
                })
                .collect();
            for (k, r) in check_selection_precedence(&keyed, &closure).iter().enumerate() {
                if *r {
                    alive[members[k]] = false;
                    changed = true;
                    if rejected_as[members[k]].is_none() {
                        rejected_as[members[k]] = Some("selection");
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    for kind in rejected_as.iter().flatten() {
        match *kind {
            "associativity" => stats.rejected_associativity += 1,
            "composition" => stats.rejected_composition += 1,
            "custom" => stats.rejected_custom += 1,
            "selection" => stats.rejected_selection += 1,
            _ => unreachable!(),
        }
    }

    let roots: Vec<usize> = egraph
        .starting_nodes
        .iter()
        .copied()
        .filter(|&r| alive[r])
        .collect();
    if roots.is_empty() && !egraph.starting_nodes.is_empty() {
        return Err(EnforceError::AllTreesRejected {
            stats,
            samples: Vec::new(),
        });
    }
    // Rebuild reachable survivors with fresh indices.
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut nodes: Vec<ExplicitNode> = Vec::new();
    fn copy(
        old: &EGraph,
        i: usize,
        map: &mut HashMap<usize, usize>,
        nodes: &mut Vec<ExplicitNode>,
    ) -> usize {
        if let Some(&j) = map.get(&i) {
            return j;
        }
        let children: Vec<usize> = old.nodes[i]
            .children
            .iter()
            .map(|&c| copy(old, c, map, nodes))
            .collect();
        let mut node = old.nodes[i].clone();
        node.children = children;
        let j = nodes.len();
        nodes.push(node);
        map.insert(i, j);
        j
    }
    let starting_nodes: Vec<usize> = roots
        .iter()
        .map(|&r| copy(egraph, r, &mut map, &mut nodes))
        .collect();
    Ok(EGraph {
        nodes,
        starting_nodes,
        stats,
    })
}

fn custom_verdict(
    egraph: &EGraph,
    grammar: &Grammar,
    constraints: &ConstraintSet,
    tokens: &[Token],
    registry: &EvaluatorRegistry,
    i: usize,
) -> Result<bool, EnforceError> {
    let node = &egraph.nodes[i];
    let p = node.production.unwrap();
    let pid = &grammar.productions[p].id;
    let Some(eval_name) = constraints.custom_evaluators.get(&pid.base) else {
        return Ok(true);
    };
    let Some(eval) = registry.get(eval_name) else {
        return Err(EnforceError::EvaluatorFailure {
            production: pid.to_string(),
            message: format!("no evaluator named {eval_name:?} registered"),
        });
    };
    let children: Vec<ChildInfo> = node
        .children
        .iter()
        .map(|&c| {
            let cn = &egraph.nodes[c];
            ChildInfo {
                symbol: &cn.symbol,
                start: cn.start,
                end: cn.end,
                production: cn.production.map(|cp| &grammar.productions[cp].id),
                text: cn.token.map(|t| tokens[t].text.as_str()),
            }
        })
        .collect();
    let view = CandidateView {
        symbol: &node.symbol,
        start: node.start,
        end: node.end,
        production: pid,
        children,
    };
    eval(&view).map_err(|message| EnforceError::EvaluatorFailure {
        production: pid.to_string(),
        message,
    })
}
