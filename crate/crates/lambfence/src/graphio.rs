//! DOT and JSON serializers for the lexical, extended, and explicit graphs.
//! Output is deterministic: nodes are emitted by span, then symbol, and JSON
//! object keys are fixed, so identical inputs produce byte-identical text.

use serde_json::{json, Value};

use crate::chart::ElaGraph;
use crate::enforcer::EGraph;
use crate::scanner::LexicalAnalysisGraph;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Token indices ordered by (start, end, type); the graph's own order
/// already is, but sorting here keeps the serializers self-contained.
fn token_order(la: &LexicalAnalysisGraph) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..la.tokens.len()).collect();
    idx.sort_by_key(|&i| {
        let t = &la.tokens[i];
        (t.start, t.end, t.ty.clone())
    });
    idx
}

/// Renders an LA graph as DOT: one node per token, one edge per FOLLOWING
/// pair.
pub fn export_dot_la(la: &LexicalAnalysisGraph) -> String {
    let mut out = String::from("digraph la {\n  rankdir=LR;\n");
    for &i in &token_order(la) {
        let t = &la.tokens[i];
        out.push_str(&format!(
            "  t{} [label=\"{} [{},{}) {}\"];\n",
            i,
            escape(&t.ty),
            t.start,
            t.end,
            escape(&t.text)
        ));
    }
    for &a in &token_order(la) {
        for &b in &la.following[a] {
            out.push_str(&format!("  t{a} -> t{b};\n"));
        }
    }
    out.push_str("}\n");
    out
}

/// Renders an ELA graph as DOT; cores appear as gray boxes between tokens.
pub fn export_dot_ela(ela: &ElaGraph) -> String {
    let mut out = String::from("digraph ela {\n  rankdir=LR;\n");
    for (c, core) in ela.cores.iter().enumerate() {
        let role = if c == ela.starting_core && c == ela.final_core {
            " (start,final)"
        } else if c == ela.starting_core {
            " (start)"
        } else if c == ela.final_core {
            " (final)"
        } else {
            ""
        };
        out.push_str(&format!(
            "  c{c} [shape=box, style=filled, fillcolor=gray85, label=\"core {c}{role}\"];\n"
        ));
        let _ = core;
    }
    let mut idx: Vec<usize> = (0..ela.tokens.len()).collect();
    idx.sort_by_key(|&i| {
        let t = &ela.tokens[i];
        (t.start, t.end, t.ty.clone())
    });
    for &i in &idx {
        let t = &ela.tokens[i];
        out.push_str(&format!(
            "  t{} [label=\"{} [{},{}) {}\"];\n",
            i,
            escape(&t.ty),
            t.start,
            t.end,
            escape(&t.text)
        ));
    }
    for &i in &idx {
        out.push_str(&format!("  c{} -> t{};\n", ela.token_preceding_core[i], i));
        for &c in &ela.token_following_cores[i] {
            out.push_str(&format!("  t{i} -> c{c};\n"));
        }
    }
    out.push_str("}\n");
    out
}

/// Renders an explicit forest as DOT; child edges carry their position so
/// ordered children stay readable, and shared nodes appear once.
pub fn export_dot_egraph(eg: &EGraph) -> String {
    let mut out = String::from("digraph egraph {\n");
    let mut idx: Vec<usize> = (0..eg.nodes.len()).collect();
    idx.sort_by_key(|&i| {
        let n = &eg.nodes[i];
        (n.start, n.end, n.symbol.clone(), i)
    });
    for &i in &idx {
        let n = &eg.nodes[i];
        let shape = if n.token.is_some() { "oval" } else { "box" };
        out.push_str(&format!(
            "  n{} [shape={}, label=\"{} [{},{})\"];\n",
            i,
            shape,
            escape(&n.symbol),
            n.start,
            n.end
        ));
    }
    for &i in &idx {
        for (k, &c) in eg.nodes[i].children.iter().enumerate() {
            out.push_str(&format!("  n{i} -> n{c} [label=\"{k}\"];\n"));
        }
    }
    for &r in &eg.starting_nodes {
        out.push_str(&format!("  n{r} [penwidth=2];\n"));
    }
    out.push_str("}\n");
    out
}

/// JSON form of an LA graph: token table plus adjacency and a summary with
/// the start-to-end path count.
pub fn la_to_json(la: &LexicalAnalysisGraph) -> Value {
    let tokens: Vec<Value> = la
        .tokens
        .iter()
        .map(|t| json!({"type": t.ty, "start": t.start, "end": t.end, "text": t.text}))
        .collect();
    let following: Vec<Vec<usize>> = la
        .following
        .iter()
        .map(|s| s.iter().copied().collect())
        .collect();
    json!({
        "tokens": tokens,
        "following": following,
        "startTokens": la.start_tokens.iter().copied().collect::<Vec<usize>>(),
        "pathCount": la.path_count().to_string(),
    })
}

/// JSON form of an explicit forest: a flat node table with children by node
/// id (so SPPF sharing is visible) and the root ids.
pub fn egraph_to_json(eg: &EGraph) -> Value {
    let nodes: Vec<Value> = eg
        .nodes
        .iter()
        .map(|n| {
            json!({
                "symbol": n.symbol,
                "span": [n.start, n.end],
                "production": n.production,
                "token": n.token,
                "children": n.children,
            })
        })
        .collect();
    json!({
        "nodes": nodes,
        "roots": eg.starting_nodes,
        "treeCount": eg.starting_nodes.len(),
    })
}
