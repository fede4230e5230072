use super::{structure_height, subtree_end, ExpressionTree, Function, Node};
use rand::Rng;

pub const DEFAULT_MAX_DEPTH: usize = 10;

/// Maximum height of the replacement subtree grown by mutation.
const MUTATION_SUBTREE_DEPTH: usize = 2;

/// Leaf alphabet and generation rules for one input dimensionality.
#[derive(Clone, Debug)]
pub struct PrimitiveSet {
    pub n_features: usize,
    /// Probability that a generated leaf is an ephemeral constant.
    pub constant_probability: f64,
}

impl PrimitiveSet {
    pub fn new(n_features: usize) -> Self {
        assert!(n_features > 0, "at least one input feature is required");
        Self {
            n_features,
            constant_probability: 0.1,
        }
    }

    /// Probability of stopping early with a leaf while growing.
    fn terminal_ratio(&self) -> f64 {
        let terminals = (self.n_features + 1) as f64;
        terminals / (terminals + Function::ALL.len() as f64)
    }

    pub fn random_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> Node {
        if rng.gen::<f64>() < self.constant_probability {
            Node::Const(rng.gen_range(-1.0..=1.0))
        } else {
            Node::Feature(rng.gen_range(0..self.n_features))
        }
    }

    fn random_function<R: Rng + ?Sized>(&self, rng: &mut R) -> Function {
        Function::ALL[rng.gen_range(0..Function::ALL.len())]
    }

    /// Every leaf sits exactly at `depth`.
    pub fn full<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> ExpressionTree {
        let mut nodes = Vec::new();
        self.fill(&mut nodes, 0, depth, false, rng);
        ExpressionTree::from_nodes(nodes).expect("generator emits well-formed trees")
    }

    /// Leaves may appear at any depth up to `depth`.
    pub fn grow<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> ExpressionTree {
        let mut nodes = Vec::new();
        self.fill(&mut nodes, 0, depth, true, rng);
        ExpressionTree::from_nodes(nodes).expect("generator emits well-formed trees")
    }

    fn fill<R: Rng + ?Sized>(
        &self,
        nodes: &mut Vec<Node>,
        depth: usize,
        target: usize,
        grow: bool,
        rng: &mut R,
    ) {
        let leaf = depth >= target || (grow && rng.gen::<f64>() < self.terminal_ratio());
        if leaf {
            nodes.push(self.random_leaf(rng));
            return;
        }
        let func = self.random_function(rng);
        nodes.push(Node::Func(func));
        for _ in 0..func.arity() {
            self.fill(nodes, depth + 1, target, grow, rng);
        }
    }

    /// Ramped half-and-half: even slots use `full`, odd slots use `grow`, and
    /// the target depth cycles through `min_depth..=max_depth`.
    pub fn ramped_half_and_half<R: Rng + ?Sized>(
        &self,
        count: usize,
        min_depth: usize,
        max_depth: usize,
        rng: &mut R,
    ) -> Vec<ExpressionTree> {
        assert!(min_depth <= max_depth);
        let span = max_depth - min_depth + 1;
        (0..count)
            .map(|i| {
                let depth = min_depth + i % span;
                if i % 2 == 0 {
                    self.full(depth, rng)
                } else {
                    self.grow(depth, rng)
                }
            })
            .collect()
    }
}

fn splice(target: &ExpressionTree, at: usize, donor: &[Node]) -> Vec<Node> {
    let end = subtree_end(target.nodes(), at);
    let nodes = target.nodes();
    let mut out = Vec::with_capacity(nodes.len() - (end - at) + donor.len());
    out.extend_from_slice(&nodes[..at]);
    out.extend_from_slice(donor);
    out.extend_from_slice(&nodes[end..]);
    out
}

fn guarded(nodes: Vec<Node>, parent: &ExpressionTree, max_depth: usize) -> ExpressionTree {
    let height = structure_height(&nodes).expect("splicing preserves well-formedness");
    if height > max_depth {
        parent.clone()
    } else {
        ExpressionTree { nodes, height }
    }
}

/// Swaps the subtree of `a` rooted at `point_a` with that of `b` rooted at
/// `point_b`. An offspring taller than `max_depth` is replaced by its parent.
pub fn crossover_at(
    a: &ExpressionTree,
    point_a: usize,
    b: &ExpressionTree,
    point_b: usize,
    max_depth: usize,
) -> (ExpressionTree, ExpressionTree) {
    let sub_a = &a.nodes()[point_a..a.subtree_end(point_a)];
    let sub_b = &b.nodes()[point_b..b.subtree_end(point_b)];
    let child_a = guarded(splice(a, point_a, sub_b), a, max_depth);
    let child_b = guarded(splice(b, point_b, sub_a), b, max_depth);
    (child_a, child_b)
}

/// Subtree crossover with uniformly chosen crossover points.
pub fn subtree_crossover<R: Rng + ?Sized>(
    a: &ExpressionTree,
    b: &ExpressionTree,
    max_depth: usize,
    rng: &mut R,
) -> (ExpressionTree, ExpressionTree) {
    let point_a = rng.gen_range(0..a.node_count());
    let point_b = rng.gen_range(0..b.node_count());
    crossover_at(a, point_a, b, point_b, max_depth)
}

/// Replaces the subtree rooted at `point` with `replacement`, reverting to
/// the parent if the depth limit would be exceeded.
pub fn mutate_at(
    a: &ExpressionTree,
    point: usize,
    replacement: &ExpressionTree,
    max_depth: usize,
) -> ExpressionTree {
    guarded(splice(a, point, replacement.nodes()), a, max_depth)
}

/// Subtree mutation: a uniformly chosen subtree is replaced with a freshly
/// grown one of height at most 2.
pub fn subtree_mutation<R: Rng + ?Sized>(
    a: &ExpressionTree,
    pset: &PrimitiveSet,
    max_depth: usize,
    rng: &mut R,
) -> ExpressionTree {
    let point = rng.gen_range(0..a.node_count());
    let depth = rng.gen_range(0..=MUTATION_SUBTREE_DEPTH);
    let replacement = pset.grow(depth, rng);
    mutate_at(a, point, &replacement, max_depth)
}
