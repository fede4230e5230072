//! Prefix-encoded expression trees over the GP function set.
//!
//! Trees are immutable values. Variation operators build new node vectors by
//! splicing subtree ranges, so a subtree is always a contiguous slice of the
//! prefix encoding.

mod primitives;
mod variation;

pub use primitives::{clamp, Function, CLAMP};
pub use variation::{
    crossover_at, mutate_at, subtree_crossover, subtree_mutation, PrimitiveSet,
    DEFAULT_MAX_DEPTH,
};

use ndarray::ArrayView2;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("malformed prefix encoding: {0}")]
    Malformed(String),
    #[error("feature x{index} out of range for {n_features} input columns")]
    FeatureOutOfRange { index: usize, n_features: usize },
    #[error("cannot parse expression: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Func(Function),
    Feature(usize),
    Const(f64),
}

impl Node {
    pub fn arity(&self) -> usize {
        match self {
            Node::Func(f) => f.arity(),
            _ => 0,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.arity() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionTree {
    nodes: Vec<Node>,
    height: usize,
}

impl ExpressionTree {
    /// Validates the prefix encoding and computes the height.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, TreeError> {
        let height = structure_height(&nodes)?;
        Ok(Self { nodes, height })
    }

    pub fn leaf(node: Node) -> Self {
        debug_assert!(node.is_leaf());
        Self {
            nodes: vec![node],
            height: 0,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges on the longest root-to-leaf path; a lone leaf has height 0.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Exclusive end of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        subtree_end(&self.nodes, start)
    }

    pub fn subtree(&self, start: usize) -> ExpressionTree {
        let end = self.subtree_end(start);
        let nodes = self.nodes[start..end].to_vec();
        let height = structure_height(&nodes).expect("subtree of a valid tree");
        ExpressionTree { nodes, height }
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Feature(i) => Some(*i),
                _ => None,
            })
            .max()
    }

    /// Canonical prefix string used for deduplication and logs.
    pub fn canonical_key(&self) -> String {
        self.to_string()
    }

    /// Evaluates the tree on every row of `x` (rows are samples).
    ///
    /// Every intermediate value is clamped to `[-CLAMP, CLAMP]`, so the output
    /// is finite for any finite input.
    pub fn evaluate(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, TreeError> {
        let n_features = x.ncols();
        if let Some(index) = self.max_feature() {
            if index >= n_features {
                return Err(TreeError::FeatureOutOfRange { index, n_features });
            }
        }
        let rows = x.nrows();
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(self.height + 2);
        for node in self.nodes.iter().rev() {
            match *node {
                Node::Feature(i) => {
                    stack.push(x.column(i).iter().map(|&v| clamp(v)).collect());
                }
                Node::Const(c) => stack.push(vec![clamp(c); rows]),
                Node::Func(f) if f.arity() == 1 => {
                    let mut a = stack.pop().ok_or_else(underflow)?;
                    a.iter_mut().for_each(|v| *v = clamp(f.apply1(*v)));
                    stack.push(a);
                }
                Node::Func(f) => {
                    // Reverse prefix order: the first operand is on top.
                    let mut a = stack.pop().ok_or_else(underflow)?;
                    let b = stack.pop().ok_or_else(underflow)?;
                    a.iter_mut()
                        .zip(&b)
                        .for_each(|(u, &v)| *u = clamp(f.apply2(*u, v)));
                    stack.push(a);
                }
            }
        }
        match (stack.pop(), stack.is_empty()) {
            (Some(out), true) => Ok(out),
            _ => Err(TreeError::Malformed("evaluation left extra operands".into())),
        }
    }
}

fn underflow() -> TreeError {
    TreeError::Malformed("operand stack underflow".into())
}

pub(crate) fn subtree_end(nodes: &[Node], start: usize) -> usize {
    let mut open = 1usize;
    let mut i = start;
    while open > 0 {
        open = open + nodes[i].arity() - 1;
        i += 1;
    }
    i
}

/// Height of a prefix-encoded node list, or an error if it is not exactly one
/// well-formed tree.
pub(crate) fn structure_height(nodes: &[Node]) -> Result<usize, TreeError> {
    if nodes.is_empty() {
        return Err(TreeError::Malformed("empty tree".into()));
    }
    // Remaining child slots for each open function node.
    let mut open: Vec<usize> = Vec::new();
    let mut height = 0;
    for (i, node) in nodes.iter().enumerate() {
        if i > 0 && open.is_empty() {
            return Err(TreeError::Malformed(format!(
                "trailing nodes after position {i}"
            )));
        }
        height = height.max(open.len());
        match node.arity() {
            0 => {
                while let Some(top) = open.last_mut() {
                    *top -= 1;
                    if *top == 0 {
                        open.pop();
                    } else {
                        break;
                    }
                }
            }
            a => open.push(a),
        }
    }
    if !open.is_empty() {
        return Err(TreeError::Malformed("missing operands".into()));
    }
    Ok(height)
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_at(
            nodes: &[Node],
            i: usize,
            f: &mut fmt::Formatter<'_>,
        ) -> Result<usize, fmt::Error> {
            match nodes[i] {
                Node::Feature(k) => {
                    write!(f, "x{k}")?;
                    Ok(i + 1)
                }
                Node::Const(c) => {
                    write!(f, "{c}")?;
                    Ok(i + 1)
                }
                Node::Func(func) => {
                    write!(f, "{}(", func.symbol())?;
                    let mut next = i + 1;
                    for child in 0..func.arity() {
                        if child > 0 {
                            f.write_str(",")?;
                        }
                        next = write_at(nodes, next, f)?;
                    }
                    f.write_str(")")?;
                    Ok(next)
                }
            }
        }
        write_at(&self.nodes, 0, f).map(|_| ())
    }
}

impl FromStr for ExpressionTree {
    type Err = TreeError;

    /// Parses the canonical prefix form, e.g. `aq(x0,mul(x1,0.5))`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut nodes = Vec::new();
        let rest = parse_node(&compact, &mut nodes)?;
        if !rest.is_empty() {
            return Err(TreeError::Parse(format!("unexpected trailing input `{rest}`")));
        }
        ExpressionTree::from_nodes(nodes)
    }
}

fn parse_node<'a>(s: &'a str, out: &mut Vec<Node>) -> Result<&'a str, TreeError> {
    let end = s.find([',', '(', ')']).unwrap_or(s.len());
    let (token, rest) = s.split_at(end);
    if token.is_empty() {
        return Err(TreeError::Parse(format!("expected a node at `{s}`")));
    }
    if let Some(body) = rest.strip_prefix('(') {
        let func: Function = token.parse().map_err(TreeError::Parse)?;
        out.push(Node::Func(func));
        let mut rest = body;
        for child in 0..func.arity() {
            if child > 0 {
                rest = rest
                    .strip_prefix(',')
                    .ok_or_else(|| TreeError::Parse(format!("expected `,` in {token}")))?;
            }
            rest = parse_node(rest, out)?;
        }
        return rest
            .strip_prefix(')')
            .ok_or_else(|| TreeError::Parse(format!("expected `)` closing {token}")));
    }
    if let Some(index) = token.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
        out.push(Node::Feature(index));
    } else {
        let value: f64 = token
            .parse()
            .map_err(|_| TreeError::Parse(format!("bad leaf `{token}`")))?;
        out.push(Node::Const(value));
    }
    Ok(rest)
}
