//! Concrete value trees for generated or parsed inputs.

use serde::{Deserialize, Serialize};

/// Byte range of a node within the serialized blob.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeValue {
    Record(Vec<AstNode>),
    Array(Vec<AstNode>),
    Int(i128),
    /// Field content before any transform, without its terminator.
    Bytes(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    /// Dotted path from the entry record, e.g. `INPUT.items[2].len`.
    pub path: String,
    pub name: String,
    /// Serialized bytes of the node; `None` for producer-call outputs.
    pub span: Option<Span>,
    pub value: NodeValue,
    pub constraint_satisfied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Coverage,
    Crash,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestlangAst {
    pub root: AstNode,
    pub doc_id: String,
    pub mode_used: GenMode,
    pub violated_fields: Vec<String>,
}

impl AstNode {
    pub fn new(path: String, name: &str, value: NodeValue) -> Self {
        Self {
            path,
            name: name.to_string(),
            span: None,
            value,
            constraint_satisfied: true,
        }
    }

    pub fn children(&self) -> &[AstNode] {
        match &self.value {
            NodeValue::Record(c) | NodeValue::Array(c) => c,
            _ => &[],
        }
    }

    pub fn children_mut(&mut self) -> &mut [AstNode] {
        match &mut self.value {
            NodeValue::Record(c) | NodeValue::Array(c) => c,
            _ => &mut [],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.value, NodeValue::Int(_) | NodeValue::Bytes(_))
    }

    pub fn as_int(&self) -> Option<i128> {
        match self.value {
            NodeValue::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match &self.value {
            NodeValue::Bytes(b) => Some(b),
            _ => None,
        }
    }

    /// Leaves in serialization order.
    pub fn leaves(&self) -> Vec<&AstNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a AstNode>) {
        if self.is_leaf() {
            out.push(self);
        }
        for c in self.children() {
            c.collect_leaves(out);
        }
    }

    pub fn find(&self, path: &str) -> Option<&AstNode> {
        if self.path == path {
            return Some(self);
        }
        self.children().iter().find_map(|c| c.find(path))
    }

    pub fn find_mut(&mut self, path: &str) -> Option<&mut AstNode> {
        if self.path == path {
            return Some(self);
        }
        self.children_mut().iter_mut().find_map(|c| c.find_mut(path))
    }

    /// Every node, parents before children.
    pub fn walk(&self) -> Vec<&AstNode> {
        let mut out = vec![self];
        for c in self.children() {
            out.extend(c.walk());
        }
        out
    }
}

impl TestlangAst {
    pub fn find(&self, path: &str) -> Option<&AstNode> {
        self.root.find(path)
    }

    pub fn leaves(&self) -> Vec<&AstNode> {
        self.root.leaves()
    }
}

pub(crate) fn child_path(parent: &str, name: &str) -> String {
    format!("{parent}.{name}")
}

pub(crate) fn element_path(parent: &str, index: usize) -> String {
    format!("{parent}[{index}]")
}
