//! Proof trees recorded during entailment and symbolic execution, with DOT
//! and JSON export.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Ok,
    Failed,
    Pruned,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Failed => "failed",
            Outcome::Pruned => "pruned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofNode {
    pub id: usize,
    pub rule: String,
    /// Printed heap, statement or entailment the rule was applied to.
    pub input: String,
    pub outcome: Outcome,
    pub children: Vec<usize>,
    /// Extra text such as an inferred frame or a failure reason.
    pub detail: Option<String>,
}

/// A tree stored as a node vector; node 0 is the root and ids equal indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTree {
    pub nodes: Vec<ProofNode>,
}

impl ProofTree {
    pub fn new(rule: impl Into<String>, input: impl Into<String>) -> Self {
        ProofTree {
            nodes: vec![ProofNode {
                id: 0,
                rule: rule.into(),
                input: input.into(),
                outcome: Outcome::Ok,
                children: Vec::new(),
                detail: None,
            }],
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add(&mut self, parent: usize, rule: impl Into<String>, input: impl Into<String>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(ProofNode { id, rule: rule.into(), input: input.into(), outcome: Outcome::Ok, children: Vec::new(), detail: None });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn set_outcome(&mut self, id: usize, outcome: Outcome) {
        self.nodes[id].outcome = outcome;
    }

    pub fn set_detail(&mut self, id: usize, detail: impl Into<String>) {
        self.nodes[id].detail = Some(detail.into());
    }

    /// Copies `other` below `parent`; returns the id of its root here.
    pub fn graft(&mut self, parent: usize, other: &ProofTree) -> usize {
        let base = self.nodes.len();
        for n in &other.nodes {
            self.nodes.push(ProofNode { id: n.id + base, children: n.children.iter().map(|c| c + base).collect(), ..n.clone() });
        }
        self.nodes[parent].children.push(base);
        base
    }

    /// First node (in id order) with the given rule name.
    pub fn find_rule(&self, rule: &str) -> Option<&ProofNode> {
        self.nodes.iter().find(|n| n.rule == rule)
    }

    /// Checks the tree invariants: ids are indices, every non-root node has
    /// exactly one parent, and every node is reachable from the root.
    pub fn validate(&self) -> Result<(), ProofTreeError> {
        if self.nodes.is_empty() {
            return Err(ProofTreeError::Invalid("empty tree".into()));
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(ProofTreeError::Invalid(format!("node at index {i} has id {}", n.id)));
            }
            for &c in &n.children {
                if c >= self.nodes.len() || c == 0 {
                    return Err(ProofTreeError::Invalid(format!("bad child {c} of node {i}")));
                }
                parents[c] += 1;
            }
        }
        if let Some(i) = (1..self.nodes.len()).find(|&i| parents[i] != 1) {
            return Err(ProofTreeError::Invalid(format!("node {i} has {} parents", parents[i])));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofTreeError {
    #[error("malformed proof tree: {0}")]
    Invalid(String),
    #[error("malformed proof tree JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Verbosity {
    RuleOnly,
    #[default]
    RuleAndHeaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DotOptions {
    pub verbosity: Verbosity,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

pub fn to_dot(t: &ProofTree, opts: DotOptions) -> String {
    let mut out = String::from("digraph proof {\n  node [shape=box, fontname=\"monospace\"];\n");
    for n in &t.nodes {
        let mut label = n.rule.clone();
        if opts.verbosity == Verbosity::RuleAndHeaps {
            if !n.input.is_empty() {
                label.push('\n');
                label.push_str(&n.input);
            }
            if let Some(d) = &n.detail {
                label.push('\n');
                label.push_str(d);
            }
        }
        let style = match n.outcome {
            Outcome::Ok => String::new(),
            Outcome::Failed => ", style=filled, fillcolor=\"#f4cccc\", color=red".to_string(),
            Outcome::Pruned => ", style=dashed, color=gray".to_string(),
        };
        let _ = writeln!(out, "  n{} [label=\"{}\"{}];", n.id, escape(&label), style);
    }
    for n in &t.nodes {
        for c in &n.children {
            let _ = writeln!(out, "  n{} -> n{};", n.id, c);
        }
    }
    out.push_str("}\n");
    out
}

fn node_json(t: &ProofTree, id: usize) -> Value {
    let n = &t.nodes[id];
    json!({
        "id": n.id,
        "rule": n.rule,
        "input": n.input,
        "outcome": n.outcome,
        "detail": n.detail,
        "children": n.children.iter().map(|&c| node_json(t, c)).collect::<Vec<_>>(),
    })
}

/// Nested JSON records `{id, rule, input, outcome, detail, children}`.
pub fn to_structured(t: &ProofTree) -> String {
    serde_json::to_string_pretty(&node_json(t, 0)).expect("proof tree serialises")
}

#[derive(Deserialize)]
struct NestedNode {
    id: usize,
    rule: String,
    input: String,
    outcome: Outcome,
    detail: Option<String>,
    children: Vec<NestedNode>,
}

/// Reads the output of [`to_structured`].
pub fn from_structured(text: &str) -> Result<ProofTree, ProofTreeError> {
    let root: NestedNode = serde_json::from_str(text).map_err(|e| ProofTreeError::Json(e.to_string()))?;
    let mut flat: Vec<Option<ProofNode>> = Vec::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if flat.len() <= n.id {
            flat.resize(n.id + 1, None);
        }
        if flat[n.id].is_some() {
            return Err(ProofTreeError::Invalid(format!("duplicate id {}", n.id)));
        }
        flat[n.id] = Some(ProofNode {
            id: n.id,
            rule: n.rule,
            input: n.input,
            outcome: n.outcome,
            detail: n.detail,
            children: n.children.iter().map(|c| c.id).collect(),
        });
        stack.extend(n.children);
    }
    let nodes = flat
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| ProofTreeError::Invalid(format!("missing node {i}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let t = ProofTree { nodes };
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node() {
        let t = ProofTree::new("Reflexivity", "a->5 |- a->5");
        let dot = to_dot(&t, DotOptions { verbosity: Verbosity::RuleOnly });
        assert!(dot.contains("n0 [label=\"Reflexivity\"]"));
        assert!(!dot.contains("->  "));
        assert_eq!(dot.matches(" -> ").count(), 0);
    }

    #[test]
    fn quotes_are_escaped() {
        let mut t = ProofTree::new("root", "x");
        let c = t.add(0, "leak-check", "say \"hi\"\\");
        t.set_outcome(c, Outcome::Failed);
        let dot = to_dot(&t, DotOptions::default());
        assert!(dot.contains("say \\\"hi\\\"\\\\"));
        assert!(dot.contains("fillcolor"));
    }

    #[test]
    fn structured_round_trip() {
        let mut t = ProofTree::new("verify", "f");
        let a = t.add(0, "assign", "x = 1");
        let b = t.add(0, "ite", "x < 2");
        t.add(a, "frame", "y->2");
        t.set_outcome(b, Outcome::Pruned);
        t.set_detail(a, "frame: y->2");
        let back = from_structured(&to_structured(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn graft_reindexes() {
        let mut t = ProofTree::new("a", "");
        let mut u = ProofTree::new("b", "");
        u.add(0, "c", "");
        t.graft(0, &u);
        assert_eq!(t.nodes[0].children, vec![1]);
        assert_eq!(t.nodes[1].children, vec![2]);
        t.validate().unwrap();
    }
}
