//! Finite trees over the naturals, fatness, and monochromatic subtree
//! extraction for leaf colorings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

use crate::term::Term;

/// A node is the string of child indices leading to it from the root.
pub type Node = Vec<u32>;

pub type Coloring = BTreeMap<Node, u32>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node {0} is present but its parent is not")]
    NotPrefixClosed(String),
    #[error("node {node} has {have} children, needs at least {need}")]
    NotFat { node: String, have: usize, need: u64 },
    #[error("leaves have different lengths")]
    NotUniform,
    #[error("leaf {0} has no color")]
    Uncolored(String),
    #[error("leaf {leaf} has color {color}, only {colors} colors are allowed")]
    ColorOutOfRange { leaf: String, color: u32, colors: u32 },
    #[error("branching bound must be positive, got 0 at {0}")]
    ZeroBound(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub fn node_text(node: &[u32]) -> String {
    Term::nat_tuple(node.iter().map(|&n| u64::from(n))).render()
}

fn parse_node(text: &str) -> Option<Node> {
    let t: Term = text.parse().ok()?;
    t.as_nat_tuple()?.into_iter().map(|n| u32::try_from(n).ok()).collect()
}

/// A nonempty, prefix-closed, finite set of nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTree {
    children: BTreeMap<Node, Vec<u32>>,
}

impl LabeledTree {
    /// The tree consisting of the root alone.
    pub fn root() -> Self {
        let mut children = BTreeMap::new();
        children.insert(Vec::new(), Vec::new());
        LabeledTree { children }
    }

    pub fn from_nodes<I: IntoIterator<Item = Node>>(nodes: I) -> Result<Self, TreeError> {
        let mut tree = LabeledTree::root();
        let nodes: BTreeSet<Node> = nodes.into_iter().collect();
        for node in &nodes {
            if let Some((&last, parent)) = node.split_last() {
                if !nodes.contains(parent) {
                    return Err(TreeError::NotPrefixClosed(node_text(node)));
                }
                tree.children.entry(parent.to_vec()).or_default().push(last);
                tree.children.entry(node.clone()).or_default();
            }
        }
        Ok(tree)
    }

    /// Every string of length at most `height` with entries below `branching`.
    pub fn full(branching: u32, height: usize) -> Self {
        Self::bounded(height, |_| branching)
    }

    /// Every string `t` of length at most `height` with `t(s) < bound(t|s)`.
    pub fn bounded(height: usize, bound: impl Fn(&[u32]) -> u32) -> Self {
        let mut tree = LabeledTree::root();
        let mut frontier = alloc::vec![Vec::new()];
        for _ in 0..height {
            let mut next = Vec::new();
            for node in frontier {
                for n in 0..bound(&node) {
                    let mut child = node.clone();
                    child.push(n);
                    tree.add_child(&node, n);
                    next.push(child);
                }
            }
            frontier = next;
        }
        tree
    }

    fn add_child(&mut self, parent: &[u32], n: u32) {
        let mut child = parent.to_vec();
        child.push(n);
        let siblings = self.children.get_mut(parent).expect("parent present");
        if let Err(at) = siblings.binary_search(&n) {
            siblings.insert(at, n);
        }
        self.children.entry(child).or_default();
    }

    pub fn contains(&self, node: &[u32]) -> bool {
        self.children.contains_key(node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.children.keys()
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Child indices of `node`, ascending.
    pub fn successors(&self, node: &[u32]) -> &[u32] {
        self.children.get(node).map_or(&[], Vec::as_slice)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> + '_ {
        self.children.iter().filter(|(_, c)| c.is_empty()).map(|(n, _)| n)
    }

    pub fn height(&self) -> usize {
        self.leaves().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.height();
        self.leaves().all(|l| l.len() == h)
    }

    pub fn is_subtree_of(&self, other: &LabeledTree) -> bool {
        self.nodes().all(|n| other.contains(n))
    }

    /// Every interior node has at least `b(node)` children.
    pub fn is_fat(&self, b: &BranchingBound) -> bool {
        self.first_thin(|t| b.get(t)).is_none()
    }

    fn first_thin(&self, need: impl Fn(&[u32]) -> u64) -> Option<TreeError> {
        self.children.iter().filter(|(_, c)| !c.is_empty()).find_map(|(t, c)| {
            let need = need(t);
            ((c.len() as u64) < need).then(|| TreeError::NotFat { node: node_text(t), have: c.len(), need })
        })
    }

    /// Rank of the root: 0 for a leaf, else one more than the largest rank of
    /// a child.
    pub fn rank(&self) -> usize {
        self.rank_at(&[])
    }

    pub fn rank_at(&self, node: &[u32]) -> usize {
        let mut child = node.to_vec();
        let mut best = 0;
        for &n in self.successors(node) {
            child.push(n);
            best = best.max(self.rank_at(&child) + 1);
            child.pop();
        }
        best
    }

    /// Sorted node strings, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in self.nodes() {
            let _ = writeln!(out, "{}", node_text(n));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, TreeError> {
        let mut nodes = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let node = parse_node(line)
                .ok_or_else(|| TreeError::Syntax { line: idx + 1, message: "expected a node such as (0,2)".into() })?;
            nodes.push(node);
        }
        Self::from_nodes(nodes)
    }
}

/// `leaf: color` lines in node order.
pub fn coloring_text(coloring: &Coloring) -> String {
    let mut out = String::new();
    for (leaf, color) in coloring {
        let _ = writeln!(out, "{}: {}", node_text(leaf), color);
    }
    out
}

pub fn parse_coloring(text: &str) -> Result<Coloring, TreeError> {
    let mut coloring = Coloring::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| TreeError::Syntax { line: idx + 1, message: message.to_string() };
        let (node, color) = line.rsplit_once(": ").ok_or_else(|| err("expected `leaf: color`"))?;
        let node = parse_node(node).ok_or_else(|| err("bad node"))?;
        let color = color.parse().map_err(|_| err("bad color"))?;
        if coloring.insert(node, color).is_some() {
            return Err(err("leaf colored twice"));
        }
    }
    Ok(coloring)
}

/// A per-node lower bound on branching; nodes without an entry use the
/// default.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchingBound {
    pub default: u32,
    pub overrides: BTreeMap<Node, u32>,
}

impl BranchingBound {
    pub fn constant(b: u32) -> Self {
        BranchingBound { default: b, overrides: BTreeMap::new() }
    }

    pub fn get(&self, node: &[u32]) -> u64 {
        u64::from(*self.overrides.get(node).unwrap_or(&self.default))
    }

    pub fn scaled(&self, factor: u32) -> Self {
        BranchingBound {
            default: self.default * factor,
            overrides: self.overrides.iter().map(|(k, &v)| (k.clone(), v * factor)).collect(),
        }
    }
}

/// A monochromatic subtree and its color.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub tree: LabeledTree,
    pub color: u32,
}

fn check_coloring(tree: &LabeledTree, colors: u32, coloring: &Coloring) -> Result<(), TreeError> {
    for leaf in tree.leaves() {
        match coloring.get(leaf) {
            None => return Err(TreeError::Uncolored(node_text(leaf))),
            Some(&color) if color >= colors => {
                return Err(TreeError::ColorOutOfRange { leaf: node_text(leaf), color, colors })
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Finds a `b`-fat subtree of the same height on whose leaves the coloring
/// is constant, for a uniform `(colors * b)`-fat tree.
///
/// Level by level from the bottom, each node takes the least color shared
/// by at least `b(node)` of its children and keeps the lexicographically
/// least `b(node)` of them.
pub fn extract_monochromatic(
    tree: &LabeledTree,
    b: &BranchingBound,
    colors: u32,
    coloring: &Coloring,
) -> Result<Extraction, TreeError> {
    if let Some(e) = tree.first_thin(|t| b.get(t) * u64::from(colors)) {
        return Err(e);
    }
    extract(tree, b, colors, coloring)
}

/// The constant-branching case: a uniform `(m*colors + 1)`-fat tree has an
/// `(m+1)`-fat monochromatic subtree of the same height.
pub fn cenzer_hinman(tree: &LabeledTree, m: u32, colors: u32, coloring: &Coloring) -> Result<Extraction, TreeError> {
    let need = u64::from(m) * u64::from(colors) + 1;
    if let Some(e) = tree.first_thin(|_| need) {
        return Err(e);
    }
    extract(tree, &BranchingBound::constant(m + 1), colors, coloring)
}

fn extract(tree: &LabeledTree, b: &BranchingBound, colors: u32, coloring: &Coloring) -> Result<Extraction, TreeError> {
    if !tree.is_uniform() {
        return Err(TreeError::NotUniform);
    }
    check_coloring(tree, colors, coloring)?;
    if let Some(t) = tree.children.iter().find(|(t, c)| !c.is_empty() && b.get(t) == 0).map(|(t, _)| t) {
        return Err(TreeError::ZeroBound(node_text(t)));
    }
    let height = tree.height();
    let mut level_color: Coloring = tree.leaves().map(|l| (l.clone(), coloring[l])).collect();
    let mut kept: BTreeMap<Node, Vec<u32>> = BTreeMap::new();
    for depth in (0..height).rev() {
        let mut next = Coloring::new();
        for (t, succ) in tree.children.iter().filter(|(t, _)| t.len() == depth) {
            let need = b.get(t) as usize;
            let mut child = t.clone();
            let mut by_color: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for &n in succ {
                child.push(n);
                by_color.entry(level_color[&child]).or_default().push(n);
                child.pop();
            }
            let (color, members) = by_color
                .into_iter()
                .find(|(_, members)| members.len() >= need)
                .ok_or_else(|| TreeError::NotFat { node: node_text(t), have: succ.len(), need: need as u64 })?;
            kept.insert(t.clone(), members[..need].to_vec());
            next.insert(t.clone(), color);
        }
        level_color = next;
    }
    let color = level_color[&Vec::new()];
    let mut out = LabeledTree::root();
    let mut frontier = alloc::vec![Vec::new()];
    while let Some(t) = frontier.pop() {
        for &n in kept.get(&t).map_or(&[][..], Vec::as_slice) {
            out.add_child(&t, n);
            let mut child = t.clone();
            child.push(n);
            frontier.push(child);
        }
    }
    assert!(out.is_subtree_of(tree), "extraction left the input tree");
    assert!(out.is_fat(b), "extraction is not fat enough");
    assert!(out.is_uniform() && out.height() == height, "extraction changed the height");
    assert!(out.leaves().all(|l| coloring[l] == color), "extraction is not monochromatic");
    Ok(Extraction { tree: out, color })
}

/// Pads every short leaf with a full tree down to the common height, using
/// `pad(node)` children at each new node; new leaves inherit the color of
/// the original leaf above them.
pub fn uniformize(tree: &LabeledTree, coloring: &Coloring, pad: impl Fn(&[u32]) -> u32) -> (LabeledTree, Coloring) {
    let height = tree.height();
    let mut out = tree.clone();
    let mut colors = Coloring::new();
    let leaves: Vec<Node> = tree.leaves().cloned().collect();
    for leaf in leaves {
        let color = coloring.get(&leaf).copied();
        let mut frontier = alloc::vec![leaf];
        while let Some(t) = frontier.pop() {
            if t.len() == height {
                if let Some(c) = color {
                    colors.insert(t, c);
                }
                continue;
            }
            for n in 0..pad(&t) {
                out.add_child(&t, n);
                let mut child = t.clone();
                child.push(n);
                frontier.push(child);
            }
        }
    }
    (out, colors)
}

/// Pads a non-uniform tree with `(colors * b)`-branching fillers and
/// extracts from the result.
pub fn extract_padded(
    tree: &LabeledTree,
    b: &BranchingBound,
    colors: u32,
    coloring: &Coloring,
) -> Result<(LabeledTree, Coloring, Extraction), TreeError> {
    check_coloring(tree, colors, coloring)?;
    let scaled = b.scaled(colors);
    let (padded, padded_colors) = uniformize(tree, coloring, |t| scaled.get(t) as u32);
    let extraction = extract_monochromatic(&padded, b, colors, &padded_colors)?;
    Ok((padded, padded_colors, extraction))
}
