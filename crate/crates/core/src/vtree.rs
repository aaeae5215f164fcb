//! Vtrees, pruned vtrees, normalization, the auxiliary-leaf modification,
//! shells, and decomposition nodes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, NodeId, Var};
use crate::error::{Error, Result};
use crate::validators::{Property, PropertyReport, Witness};
use crate::varset::VarSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VtreeId(pub u32);

impl VtreeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VtreeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VNode {
    Leaf(Var),
    Stub,
    Internal(VtreeId, VtreeId),
}

/// Nested description of a tree, convenient for construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Leaf(Var),
    Stub,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn leaf(v: u32) -> Shape {
        Shape::Leaf(Var(v))
    }

    pub fn node(l: Shape, r: Shape) -> Shape {
        Shape::Node(Box::new(l), Box::new(r))
    }

    /// Right-linear tree: every internal node has a leaf as left child.
    pub fn right_linear(vars: &[Var]) -> Shape {
        assert!(!vars.is_empty());
        if vars.len() == 1 {
            Shape::Leaf(vars[0])
        } else {
            Shape::node(Shape::Leaf(vars[0]), Shape::right_linear(&vars[1..]))
        }
    }

    pub fn balanced(vars: &[Var]) -> Shape {
        assert!(!vars.is_empty());
        if vars.len() == 1 {
            Shape::Leaf(vars[0])
        } else {
            let mid = vars.len() / 2;
            Shape::node(Shape::balanced(&vars[..mid]), Shape::balanced(&vars[mid..]))
        }
    }

    /// Parses `(a b)` nested pairs of variable ids; `*` is a stub.
    pub fn parse(text: &str) -> Result<Shape> {
        let tokens: Vec<String> = text
            .replace('(', " ( ")
            .replace(')', " ) ")
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        let mut pos = 0;
        let shape = Self::parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Input(format!("trailing tokens in vtree expression {:?}", text)));
        }
        Ok(shape)
    }

    fn parse_tokens(tokens: &[String], pos: &mut usize) -> Result<Shape> {
        let tok = tokens
            .get(*pos)
            .ok_or_else(|| Error::Input("unexpected end of vtree expression".into()))?;
        *pos += 1;
        match tok.as_str() {
            "(" => {
                let l = Self::parse_tokens(tokens, pos)?;
                let r = Self::parse_tokens(tokens, pos)?;
                if tokens.get(*pos).map(String::as_str) != Some(")") {
                    return Err(Error::Input("expected ')' in vtree expression".into()));
                }
                *pos += 1;
                Ok(Shape::node(l, r))
            }
            "*" => Ok(Shape::Stub),
            t => t
                .trim_start_matches('x')
                .parse::<u32>()
                .ok()
                .filter(|v| *v > 0)
                .map(|v| Shape::Leaf(Var(v)))
                .ok_or_else(|| Error::Input(format!("bad vtree token {:?}", t))),
        }
    }
}

/// Full binary tree whose leaves carry variables or stubs. Nodes are stored
/// in post-order (left subtree, right subtree, node), so the root is last.
#[derive(Clone, Debug)]
pub struct Vtree {
    nodes: Vec<VNode>,
    parent: Vec<Option<VtreeId>>,
    first: Vec<u32>,
    depth: Vec<u32>,
    vars: Vec<VarSet>,
    leaf_of: BTreeMap<Var, VtreeId>,
    aux: VarSet,
}

impl PartialEq for Vtree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.aux == other.aux
    }
}

impl Eq for Vtree {}

struct PostOrder {
    nodes: Vec<VNode>,
}

impl PostOrder {
    fn new() -> Self {
        PostOrder { nodes: Vec::new() }
    }

    fn push(&mut self, n: VNode) -> VtreeId {
        self.nodes.push(n);
        VtreeId(self.nodes.len() as u32 - 1)
    }

    fn shape(&mut self, s: &Shape) -> VtreeId {
        match s {
            Shape::Leaf(v) => self.push(VNode::Leaf(*v)),
            Shape::Stub => self.push(VNode::Stub),
            Shape::Node(l, r) => {
                let l = self.shape(l);
                let r = self.shape(r);
                self.push(VNode::Internal(l, r))
            }
        }
    }
}

impl Vtree {
    /// Builds from post-ordered nodes, validating the tree shape.
    fn from_postorder(nodes: Vec<VNode>, aux: VarSet) -> Result<Vtree> {
        if nodes.is_empty() {
            return Err(Error::Structural("empty vtree".into()));
        }
        let n = nodes.len();
        let mut parent = vec![None; n];
        let mut first = vec![0u32; n];
        let mut vars: Vec<VarSet> = Vec::with_capacity(n);
        let mut leaf_of = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                VNode::Leaf(v) => {
                    if v.0 == 0 {
                        return Err(Error::Structural("variable ids start at 1".into()));
                    }
                    if leaf_of.insert(v, VtreeId(i as u32)).is_some() {
                        return Err(Error::Structural(format!("variable {} labels two leaves", v)));
                    }
                    first[i] = i as u32;
                    vars.push(VarSet::singleton(v));
                }
                VNode::Stub => {
                    first[i] = i as u32;
                    vars.push(VarSet::new());
                }
                VNode::Internal(l, r) => {
                    if l.index() >= i || r.index() >= i {
                        return Err(Error::Structural(format!("vtree node {} has a forward child", i)));
                    }
                    for c in [l, r] {
                        if parent[c.index()].is_some() {
                            return Err(Error::Structural(format!("vtree node {} has two parents", c)));
                        }
                        parent[c.index()] = Some(VtreeId(i as u32));
                    }
                    first[i] = first[l.index()].min(first[r.index()]);
                    vars.push(vars[l.index()].union(&vars[r.index()]));
                }
            }
        }
        let orphans = parent.iter().take(n - 1).filter(|p| p.is_none()).count();
        if orphans > 0 {
            return Err(Error::Structural("vtree nodes not connected to the root".into()));
        }
        let mut depth = vec![0u32; n];
        for i in (0..n - 1).rev() {
            depth[i] = depth[parent[i].unwrap().index()] + 1;
        }
        Ok(Vtree {
            nodes,
            parent,
            first,
            depth,
            vars,
            leaf_of,
            aux,
        })
    }

    pub fn from_shape(shape: &Shape) -> Result<Vtree> {
        let mut po = PostOrder::new();
        po.shape(shape);
        Vtree::from_postorder(po.nodes, VarSet::new())
    }

    /// Builds from nodes in arbitrary order, renumbering into post-order.
    pub fn from_nodes(nodes: &[VNode], root: VtreeId, aux: VarSet) -> Result<Vtree> {
        fn to_shape(nodes: &[VNode], id: VtreeId, seen: &mut [bool]) -> Result<Shape> {
            let i = id.index();
            if i >= nodes.len() {
                return Err(Error::Structural(format!("unknown vtree node {}", id)));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Structural(format!("vtree node {} reached twice", id)));
            }
            Ok(match nodes[i] {
                VNode::Leaf(v) => Shape::Leaf(v),
                VNode::Stub => Shape::Stub,
                VNode::Internal(l, r) => {
                    Shape::node(to_shape(nodes, l, seen)?, to_shape(nodes, r, seen)?)
                }
            })
        }
        let mut seen = vec![false; nodes.len()];
        let shape = to_shape(nodes, root, &mut seen)?;
        if seen.iter().any(|s| !s) {
            return Err(Error::Structural("vtree nodes not connected to the root".into()));
        }
        let mut t = Vtree::from_shape(&shape)?;
        t.aux = aux;
        Ok(t)
    }

    pub fn parse(text: &str) -> Result<Vtree> {
        Vtree::from_shape(&Shape::parse(text)?)
    }

    pub fn with_aux(mut self, aux: VarSet) -> Self {
        self.aux = aux;
        self
    }

    pub fn to_shape(&self) -> Shape {
        self.shape_at(self.root())
    }

    pub fn shape_at(&self, v: VtreeId) -> Shape {
        match self.nodes[v.index()] {
            VNode::Leaf(x) => Shape::Leaf(x),
            VNode::Stub => Shape::Stub,
            VNode::Internal(l, r) => Shape::node(self.shape_at(l), self.shape_at(r)),
        }
    }

    pub fn root(&self) -> VtreeId {
        VtreeId(self.nodes.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VtreeId> {
        (0..self.nodes.len() as u32).map(VtreeId)
    }

    pub fn contains(&self, v: VtreeId) -> bool {
        v.index() < self.nodes.len()
    }

    pub fn node(&self, v: VtreeId) -> VNode {
        self.nodes[v.index()]
    }

    pub fn nodes(&self) -> &[VNode] {
        &self.nodes
    }

    pub fn children(&self, v: VtreeId) -> Option<(VtreeId, VtreeId)> {
        match self.nodes[v.index()] {
            VNode::Internal(l, r) => Some((l, r)),
            _ => None,
        }
    }

    pub fn parent(&self, v: VtreeId) -> Option<VtreeId> {
        self.parent[v.index()]
    }

    pub fn depth(&self, v: VtreeId) -> u32 {
        self.depth[v.index()]
    }

    pub fn is_leaf(&self, v: VtreeId) -> bool {
        !matches!(self.nodes[v.index()], VNode::Internal(..))
    }

    pub fn is_stub(&self, v: VtreeId) -> bool {
        matches!(self.nodes[v.index()], VNode::Stub)
    }

    pub fn has_stubs(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, VNode::Stub))
    }

    pub fn vars(&self, v: VtreeId) -> &VarSet {
        &self.vars[v.index()]
    }

    /// All variables labelling leaves.
    pub fn variables(&self) -> &VarSet {
        &self.vars[self.root().index()]
    }

    pub fn aux(&self) -> &VarSet {
        &self.aux
    }

    pub fn leaf_of(&self, x: Var) -> Option<VtreeId> {
        self.leaf_of.get(&x).copied()
    }

    /// `a` is `d` or an ancestor of `d`.
    pub fn is_ancestor_or_self(&self, a: VtreeId, d: VtreeId) -> bool {
        self.first[a.index()] <= d.0 && d.0 <= a.0
    }

    pub fn lca(&self, mut a: VtreeId, mut b: VtreeId) -> VtreeId {
        while self.depth[a.index()] > self.depth[b.index()] {
            a = self.parent[a.index()].unwrap();
        }
        while self.depth[b.index()] > self.depth[a.index()] {
            b = self.parent[b.index()].unwrap();
        }
        while a != b {
            a = self.parent[a.index()].unwrap();
            b = self.parent[b.index()].unwrap();
        }
        a
    }

    /// Lowest node whose subtree contains every variable of `vars`, or
    /// `None` for the empty set or unknown variables.
    pub fn lca_of_vars(&self, vars: &VarSet) -> Option<VtreeId> {
        let mut acc: Option<VtreeId> = None;
        for x in vars.iter() {
            let leaf = self.leaf_of(x)?;
            acc = Some(match acc {
                None => leaf,
                Some(a) if self.is_ancestor_or_self(a, leaf) => a,
                Some(a) => self.lca(a, leaf),
            });
        }
        acc
    }

    /// Variables outside the subtree rooted at `v`.
    pub fn shell(&self, v: VtreeId) -> VarSet {
        self.variables().difference(self.vars(v))
    }

    pub fn is_normalized(&self) -> bool {
        self.ids().all(|v| match self.children(v) {
            Some((l, r)) => self.vars(l).len() <= self.vars(r).len(),
            None => true,
        })
    }

    /// Swaps children wherever the left subtree has more variables than the
    /// right one.
    pub fn normalize(&self) -> Vtree {
        fn go(t: &Vtree, v: VtreeId) -> Shape {
            match t.node(v) {
                VNode::Leaf(x) => Shape::Leaf(x),
                VNode::Stub => Shape::Stub,
                VNode::Internal(l, r) => {
                    let (l, r) = if t.vars(l).len() > t.vars(r).len() { (r, l) } else { (l, r) };
                    Shape::node(go(t, l), go(t, r))
                }
            }
        }
        let mut t = Vtree::from_shape(&go(self, self.root())).expect("normalization keeps a valid tree");
        t.aux = self.aux.clone();
        t
    }

    /// Inserts, above every internal node with more than two variables, a
    /// new parent whose right child is a fresh auxiliary leaf. Auxiliary
    /// ids start above the largest variable and are handed out in
    /// post-order.
    pub fn modify(&self) -> ModifiedVtree {
        let mut next = self.variables().max().map_or(1, |m| m.0 + 1);
        let mut po = PostOrder::new();
        let mut node_map = vec![VtreeId(0); self.len()];
        let mut inserted = vec![None; self.len()];
        // what a parent of each original node should point to
        let mut parent_ref = vec![VtreeId(0); self.len()];
        let mut aux_vars = Vec::new();
        for v in self.ids() {
            let id = match self.node(v) {
                VNode::Leaf(x) => po.push(VNode::Leaf(x)),
                VNode::Stub => po.push(VNode::Stub),
                VNode::Internal(l, r) => po.push(VNode::Internal(parent_ref[l.index()], parent_ref[r.index()])),
            };
            node_map[v.index()] = id;
            parent_ref[v.index()] = id;
            if self.vars(v).len() > 2 {
                let h = Var(next);
                next += 1;
                aux_vars.push(h);
                let leaf = po.push(VNode::Leaf(h));
                let top = po.push(VNode::Internal(id, leaf));
                inserted[v.index()] = Some(top);
                parent_ref[v.index()] = top;
            }
        }
        let mut aux = self.aux.clone();
        for h in &aux_vars {
            aux.insert(*h);
        }
        let tree = Vtree::from_postorder(po.nodes, aux).expect("modification keeps a valid tree");
        ModifiedVtree {
            tree,
            node_map,
            inserted,
            aux: aux_vars,
        }
    }

    /// Replaces every maximal subtree whose variables all lie in `a` by a stub.
    pub fn prune(&self, a: &VarSet) -> Result<PrunedVtree> {
        if let Some(x) = a.iter().find(|x| self.leaf_of(*x).is_none()) {
            return Err(Error::Input(format!("cannot prune unknown variable {}", x)));
        }
        let mut po = PostOrder::new();
        let mut from_base = vec![None; self.len()];
        let mut to_base = Vec::new();
        self.prune_rec(self.root(), a, &mut po, &mut from_base, &mut to_base);
        let tree = Vtree::from_postorder(po.nodes, self.aux.clone())?;
        Ok(PrunedVtree {
            tree,
            from_base,
            to_base,
            removed: a.clone(),
        })
    }

    fn prune_rec(
        &self,
        v: VtreeId,
        a: &VarSet,
        po: &mut PostOrder,
        from_base: &mut [Option<VtreeId>],
        to_base: &mut Vec<VtreeId>,
    ) -> VtreeId {
        let id = if self.vars(v).is_subset(a) {
            po.push(VNode::Stub)
        } else {
            match self.node(v) {
                VNode::Internal(l, r) => {
                    let l = self.prune_rec(l, a, po, from_base, to_base);
                    let r = self.prune_rec(r, a, po, from_base, to_base);
                    po.push(VNode::Internal(l, r))
                }
                n => po.push(n),
            }
        };
        from_base[v.index()] = Some(id);
        to_base.push(v);
        id
    }

    /// Number of edges on the longest root-to-leaf path below `v`.
    pub fn height(&self, v: VtreeId) -> u32 {
        match self.children(v) {
            Some((l, r)) => 1 + self.height(l).max(self.height(r)),
            None => 0,
        }
    }
}

impl fmt::Display for Vtree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Vtree, v: VtreeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t.node(v) {
                VNode::Leaf(x) => write!(f, "{}", x.0),
                VNode::Stub => write!(f, "*"),
                VNode::Internal(l, r) => {
                    write!(f, "(")?;
                    go(t, l, f)?;
                    write!(f, " ")?;
                    go(t, r, f)?;
                    write!(f, ")")
                }
            }
        }
        go(self, self.root(), f)
    }
}

/// Result of [`Vtree::modify`].
#[derive(Clone, Debug)]
pub struct ModifiedVtree {
    pub tree: Vtree,
    /// Position of each original node in the modified tree.
    pub node_map: Vec<VtreeId>,
    /// The inserted parent `v'` of each original node with more than two
    /// variables.
    pub inserted: Vec<Option<VtreeId>>,
    /// Auxiliary variables in allocation order.
    pub aux: Vec<Var>,
}

/// A vtree with some subtrees replaced by stubs, remembering where each
/// surviving node came from.
#[derive(Clone, Debug)]
pub struct PrunedVtree {
    pub tree: Vtree,
    from_base: Vec<Option<VtreeId>>,
    to_base: Vec<VtreeId>,
    removed: VarSet,
}

impl PrunedVtree {
    /// The pruned node corresponding to a node of the unpruned tree, if it
    /// survived pruning (stub roots survive as stubs).
    pub fn from_base(&self, v: VtreeId) -> Option<VtreeId> {
        self.from_base.get(v.index()).copied().flatten()
    }

    pub fn to_base(&self, v: VtreeId) -> VtreeId {
        self.to_base[v.index()]
    }

    pub fn removed(&self) -> &VarSet {
        &self.removed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Left child of the gate under the left child of the vtree node.
    SddOriented,
    /// Either child may go left.
    DdnnfUnoriented,
}

/// Decomposition node of every circuit node; constants have none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionTable {
    entries: Vec<Option<VtreeId>>,
}

impl DecompositionTable {
    pub fn get(&self, u: NodeId) -> Option<VtreeId> {
        self.entries[u.index()]
    }

    pub fn entries(&self) -> &[Option<VtreeId>] {
        &self.entries
    }
}

/// Does the conjunction with child variable sets `l`, `r` respect `w`?
pub fn respects(t: &Vtree, w: VtreeId, l: &VarSet, r: &VarSet, mode: Orientation) -> bool {
    let Some((wl, wr)) = t.children(w) else {
        return false;
    };
    let fits = |a: &VarSet, b: &VarSet| a.is_subset(t.vars(wl)) && b.is_subset(t.vars(wr));
    fits(l, r) || (mode == Orientation::DdnnfUnoriented && fits(r, l))
}

/// Minimal vtree node respected by a conjunction with children over `l`
/// and `r`; `Ok(None)` when both sides are variable-free.
pub fn minimal_respected(
    t: &Vtree,
    l: &VarSet,
    r: &VarSet,
    mode: Orientation,
) -> std::result::Result<Option<VtreeId>, ()> {
    let all = l.union(r);
    if all.is_empty() {
        return Ok(None);
    }
    let mut w = t.lca_of_vars(&all).ok_or(())?;
    if t.is_leaf(w) {
        w = t.parent(w).ok_or(())?;
    }
    loop {
        if respects(t, w, l, r, mode) {
            return Ok(Some(w));
        }
        w = t.parent(w).ok_or(())?;
    }
}

/// Computes decomposition nodes bottom-up. Disjunctions take their
/// children's common entry (the lowest common ancestor when the children
/// disagree, which only happens for non-smooth circuits).
pub fn decomposition_nodes(c: &Circuit, t: &Vtree, mode: Orientation) -> Result<DecompositionTable> {
    let mut entries: Vec<Option<VtreeId>> = Vec::with_capacity(c.len());
    for (i, g) in c.gates().iter().enumerate() {
        let id = NodeId(i as u32);
        let e = match g {
            Gate::Const(_) => None,
            Gate::Lit(l) => Some(t.leaf_of(l.var).ok_or_else(|| {
                Error::property(PropertyReport::violation(
                    Property::RespectsVtree,
                    Witness::gates(vec![id])
                        .with_vars(vec![l.var])
                        .with_message("literal variable is not a vtree leaf"),
                ))
            })?),
            Gate::And([l, r]) => minimal_respected(t, c.vars(*l), c.vars(*r), mode).map_err(|_| {
                Error::property(PropertyReport::violation(
                    Property::RespectsVtree,
                    Witness::gates(vec![id]).with_message("conjunction respects no vtree node"),
                ))
            })?,
            Gate::Or(cs) => {
                let mut acc: Option<VtreeId> = None;
                for ch in cs {
                    if let Some(e) = entries[ch.index()] {
                        acc = Some(match acc {
                            None => e,
                            Some(a) => t.lca(a, e),
                        });
                    }
                }
                acc
            }
        };
        entries.push(e);
    }
    Ok(DecompositionTable { entries })
}
