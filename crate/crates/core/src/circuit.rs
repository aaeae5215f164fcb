//! Immutable NNF circuits: literals, constants, fan-in 2 conjunctions and
//! unbounded fan-in disjunctions stored as a hash-consed, topologically
//! ordered DAG.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::varset::VarSet;

/// A propositional variable. Ids start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit {
    pub var: Var,
    pub positive: bool,
}

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        Lit { var, positive }
    }

    pub fn pos(var: u32) -> Self {
        Lit::new(Var(var), true)
    }

    pub fn neg(var: u32) -> Self {
        Lit::new(Var(var), false)
    }

    /// DIMACS-style signed encoding.
    pub fn from_signed(v: i64) -> Option<Self> {
        if v == 0 || v.unsigned_abs() > u32::MAX as u64 {
            return None;
        }
        Some(Lit::new(Var(v.unsigned_abs() as u32), v > 0))
    }

    pub fn to_signed(self) -> i64 {
        if self.positive {
            self.var.0 as i64
        } else {
            -(self.var.0 as i64)
        }
    }

    pub fn holds(self, value: bool) -> bool {
        value == self.positive
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var)
        } else {
            write!(f, "-{}", self.var)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Lit(Lit),
    Const(bool),
    And([NodeId; 2]),
    Or(Vec<NodeId>),
}

impl Gate {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Gate::Lit(_) | Gate::Const(_) => &[],
            Gate::And(c) => c,
            Gate::Or(c) => c,
        }
    }

    pub fn is_or(&self) -> bool {
        matches!(self, Gate::Or(_))
    }

    pub fn is_and(&self) -> bool {
        matches!(self, Gate::And(_))
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            Gate::Const(b) => Some(*b),
            _ => None,
        }
    }
}

/// A total (over some stated variable set) or partial mapping from
/// variables to truth values.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<Var, bool>);

pub type PartialAssignment = Assignment;

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn set(&mut self, v: Var, value: bool) {
        self.0.insert(v, value);
    }

    pub fn with(mut self, v: Var, value: bool) -> Self {
        self.set(v, value);
        self
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.0.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn domain(&self) -> VarSet {
        self.0.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.0.iter().map(|(v, b)| (*v, *b))
    }

    /// The assignment over `order` encoded by the bits of `index`
    /// (bit k is the value of `order[k]`).
    pub fn from_index(order: &[Var], index: u64) -> Self {
        order
            .iter()
            .enumerate()
            .map(|(k, v)| (*v, index >> k & 1 == 1))
            .collect()
    }

    /// Joint assignment; entries of `other` win on overlap.
    pub fn join(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        for (v, b) in other.iter() {
            out.set(v, b);
        }
        out
    }

    pub fn restricted_to(&self, vars: &VarSet) -> Assignment {
        self.iter().filter(|(v, _)| vars.contains(*v)).collect()
    }
}

impl FromIterator<(Var, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Var, bool)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(v, b)| format!("{}={}", v.0, b as u8)).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Incremental construction of a [`Circuit`]. With sharing enabled (the
/// default) structurally identical gates are created once.
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    index: HashMap<Gate, NodeId>,
    share: bool,
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CircuitBuilder {
    pub fn new() -> Self {
        CircuitBuilder {
            gates: Vec::new(),
            index: HashMap::new(),
            share: true,
        }
    }

    /// A builder that never merges gates. Constants are still shared.
    pub fn without_sharing() -> Self {
        CircuitBuilder {
            share: false,
            ..Self::new()
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate_of(&self, id: NodeId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn add(&mut self, gate: Gate) -> NodeId {
        debug_assert!(gate.children().iter().all(|c| c.index() < self.gates.len()));
        if self.share || matches!(gate, Gate::Const(_)) {
            if let Some(&id) = self.index.get(&gate) {
                return id;
            }
        }
        let id = NodeId(self.gates.len() as u32);
        if self.share || matches!(gate, Gate::Const(_)) {
            self.index.insert(gate.clone(), id);
        }
        self.gates.push(gate);
        id
    }

    pub fn lit(&mut self, lit: Lit) -> NodeId {
        self.add(Gate::Lit(lit))
    }

    pub fn constant(&mut self, value: bool) -> NodeId {
        self.add(Gate::Const(value))
    }

    pub fn and(&mut self, left: NodeId, right: NodeId) -> NodeId {
        self.add(Gate::And([left, right]))
    }

    pub fn or(&mut self, children: Vec<NodeId>) -> NodeId {
        assert!(!children.is_empty(), "disjunction needs at least one child");
        self.add(Gate::Or(children))
    }

    /// Left-associated conjunction chain; a single child is returned as is.
    pub fn and_chain(&mut self, children: &[NodeId]) -> NodeId {
        assert!(!children.is_empty(), "conjunction needs at least one child");
        let mut acc = children[0];
        for &c in &children[1..] {
            acc = self.and(acc, c);
        }
        acc
    }

    pub fn finish(self, root: NodeId, universe: VarSet, aux: VarSet) -> Circuit {
        self.finish_with_map(root, universe, aux).0
    }

    /// Drops gates unreachable from `root` and returns the map from builder
    /// ids to ids in the finished circuit.
    pub fn finish_with_map(
        self,
        root: NodeId,
        mut universe: VarSet,
        aux: VarSet,
    ) -> (Circuit, Vec<Option<NodeId>>) {
        let mut live = vec![false; self.gates.len()];
        live[root.index()] = true;
        for i in (0..self.gates.len()).rev() {
            if live[i] {
                for c in self.gates[i].children() {
                    live[c.index()] = true;
                }
            }
        }
        let mut map = vec![None; self.gates.len()];
        let mut gates = Vec::new();
        for (i, gate) in self.gates.into_iter().enumerate() {
            if !live[i] {
                continue;
            }
            let remap = |c: &NodeId| map[c.index()].expect("child precedes parent");
            let g = match gate {
                Gate::And([l, r]) => Gate::And([remap(&l), remap(&r)]),
                Gate::Or(cs) => Gate::Or(cs.iter().map(remap).collect()),
                g => g,
            };
            map[i] = Some(NodeId(gates.len() as u32));
            gates.push(g);
        }
        for g in &gates {
            if let Gate::Lit(l) = g {
                universe.insert(l.var);
            }
        }
        universe.union_with(&aux);
        let root = map[root.index()].unwrap();
        (Circuit::from_parts(gates, root, universe, aux), map)
    }
}

/// An NNF circuit. Nodes are stored children-first, so every child id is
/// smaller than its parent's id and the root is the last node.
#[derive(Clone, Debug)]
pub struct Circuit {
    gates: Vec<Gate>,
    root: NodeId,
    universe: VarSet,
    aux: VarSet,
    vars: Vec<VarSet>,
}

impl PartialEq for Circuit {
    fn eq(&self, other: &Self) -> bool {
        self.gates == other.gates
            && self.root == other.root
            && self.universe == other.universe
            && self.aux == other.aux
    }
}

impl Eq for Circuit {}

impl Circuit {
    fn from_parts(gates: Vec<Gate>, root: NodeId, universe: VarSet, aux: VarSet) -> Self {
        let mut vars: Vec<VarSet> = Vec::with_capacity(gates.len());
        for g in &gates {
            let vs = match g {
                Gate::Lit(l) => VarSet::singleton(l.var),
                Gate::Const(_) => VarSet::new(),
                Gate::And([l, r]) => vars[l.index()].union(&vars[r.index()]),
                Gate::Or(cs) => {
                    let mut s = VarSet::new();
                    for c in cs {
                        s.union_with(&vars[c.index()]);
                    }
                    s
                }
            };
            vars.push(vs);
        }
        Circuit {
            gates,
            root,
            universe,
            aux,
            vars,
        }
    }

    /// A circuit from raw gates in children-first order. Unreachable gates
    /// are kept.
    pub fn from_gates(gates: Vec<Gate>, root: NodeId, universe: VarSet) -> Result<Self> {
        if root.index() >= gates.len() {
            return Err(Error::Structural(format!("root {} out of range", root)));
        }
        let mut universe = universe;
        for (i, g) in gates.iter().enumerate() {
            for c in g.children() {
                if c.index() >= i {
                    return Err(Error::Structural(format!(
                        "node {} references node {} which is not defined before it",
                        i, c
                    )));
                }
            }
            match g {
                Gate::Or(cs) if cs.is_empty() => {
                    return Err(Error::Structural(format!("disjunction {} has no children", i)))
                }
                Gate::Lit(l) if l.var.0 == 0 => {
                    return Err(Error::Structural("variable ids start at 1".into()))
                }
                Gate::Lit(l) => universe.insert(l.var),
                _ => {}
            }
        }
        Ok(Circuit::from_parts(gates, root, universe, VarSet::new()))
    }

    /// Single-node circuit.
    pub fn constant(value: bool, universe: VarSet) -> Self {
        let mut b = CircuitBuilder::new();
        let r = b.constant(value);
        b.finish(r, universe, VarSet::new())
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, id: NodeId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.gates.len() as u32).map(NodeId)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.gates[id.index()].children()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.gates.len()
    }

    pub fn check_node(&self, id: NodeId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::Structural(format!("unknown node {}", id)))
        }
    }

    /// All variables of the circuit, including unmentioned and auxiliary ones.
    pub fn universe(&self) -> &VarSet {
        &self.universe
    }

    pub fn aux(&self) -> &VarSet {
        &self.aux
    }

    /// Same DAG, different declared variable universe.
    pub fn with_universe(mut self, universe: VarSet, aux: VarSet) -> Self {
        let mut u = universe;
        u.union_with(&self.vars[self.root.index()]);
        u.union_with(&aux);
        self.universe = u;
        self.aux = aux;
        self
    }

    pub fn vars(&self, id: NodeId) -> &VarSet {
        &self.vars[id.index()]
    }

    /// Variables whose literals occur below `id`.
    pub fn vars_of(&self, id: NodeId) -> Result<&VarSet> {
        self.check_node(id)?;
        Ok(&self.vars[id.index()])
    }

    pub fn reachable_from(&self, roots: &[NodeId]) -> Vec<bool> {
        let mut live = vec![false; self.gates.len()];
        for r in roots {
            live[r.index()] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if live[i] {
                for c in self.gates[i].children() {
                    live[c.index()] = true;
                }
            }
        }
        live
    }

    /// Number of gates reachable from the root, leaves included.
    pub fn size(&self) -> usize {
        self.reachable_from(&[self.root]).iter().filter(|b| **b).count()
    }

    /// Number of wires between gates reachable from the root.
    pub fn edge_count(&self) -> usize {
        let live = self.reachable_from(&[self.root]);
        self.gates
            .iter()
            .enumerate()
            .filter(|(i, _)| live[*i])
            .map(|(_, g)| g.children().len())
            .sum()
    }

    /// Evaluates `node` with variable values supplied by `value`.
    pub fn eval_with(&self, node: NodeId, value: impl Fn(Var) -> bool) -> bool {
        let mut vals = vec![false; node.index() + 1];
        for i in 0..=node.index() {
            vals[i] = match &self.gates[i] {
                Gate::Lit(l) => l.holds(value(l.var)),
                Gate::Const(b) => *b,
                Gate::And([l, r]) => vals[l.index()] && vals[r.index()],
                Gate::Or(cs) => cs.iter().any(|c| vals[c.index()]),
            };
        }
        vals[node.index()]
    }

    pub fn evaluate(&self, node: NodeId, a: &Assignment) -> Result<bool> {
        self.check_node(node)?;
        if let Some(v) = self.vars[node.index()].iter().find(|v| a.get(*v).is_none()) {
            return Err(Error::Input(format!("assignment does not set {}", v)));
        }
        Ok(self.eval_with(node, |v| a.get(v).unwrap_or(false)))
    }

    pub fn evaluate_root(&self, a: &Assignment) -> Result<bool> {
        self.evaluate(self.root, a)
    }

    /// First conjunction whose children share a variable, with the shared
    /// variable.
    pub fn find_non_decomposable(&self, below: NodeId) -> Option<(NodeId, Var)> {
        let live = self.reachable_from(&[below]);
        self.gates.iter().enumerate().find_map(|(i, g)| match g {
            Gate::And([l, r]) if live[i] => self.vars[l.index()]
                .intersection(&self.vars[r.index()])
                .iter()
                .next()
                .map(|v| (NodeId(i as u32), v)),
            _ => None,
        })
    }

    /// Satisfiability of every node, valid when the circuit is decomposable.
    pub fn satisfiable_nodes(&self) -> Vec<bool> {
        let mut sat = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let s = match g {
                Gate::Lit(_) => true,
                Gate::Const(b) => *b,
                Gate::And([l, r]) => sat[l.index()] && sat[r.index()],
                Gate::Or(cs) => cs.iter().any(|c| sat[c.index()]),
            };
            sat.push(s);
        }
        sat
    }

    /// Linear-time satisfiability for decomposable subcircuits.
    pub fn is_satisfiable_dnnf(&self, node: NodeId) -> Result<bool> {
        self.check_node(node)?;
        if let Some((gate, var)) = self.find_non_decomposable(node) {
            return Err(Error::property(crate::validators::PropertyReport::violation(
                crate::validators::Property::Decomposable,
                crate::validators::Witness::gates(vec![gate]).with_vars(vec![var]),
            )));
        }
        Ok(self.satisfiable_nodes()[node.index()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> (Circuit, NodeId) {
        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let x2 = b.lit(Lit::pos(2));
        let nx2 = b.lit(Lit::neg(2));
        let o = b.or(vec![x2, nx2]);
        let a = b.and(x1, o);
        let c = b.finish(a, VarSet::new(), VarSet::new());
        let root = c.root();
        (c, root)
    }

    #[test]
    fn vars_of_examples() {
        let mut b = CircuitBuilder::new();
        let l = b.lit(Lit::neg(3));
        let c = b.finish(l, VarSet::new(), VarSet::new());
        assert_eq!(c.vars_of(c.root()).unwrap().to_vec(), vec![Var(3)]);

        let c = Circuit::constant(true, VarSet::new());
        assert!(c.vars_of(c.root()).unwrap().is_empty());

        let (c, root) = two_level();
        assert_eq!(c.vars_of(root).unwrap().to_vec(), vec![Var(1), Var(2)]);
        assert!(matches!(c.vars_of(NodeId(99)), Err(Error::Structural(_))));
    }

    #[test]
    fn evaluate_examples() {
        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let nx2 = b.lit(Lit::neg(2));
        let a = b.and(x1, nx2);
        let c = b.finish(a, VarSet::new(), VarSet::new());
        let asg = Assignment::new().with(Var(1), true).with(Var(2), false);
        assert!(c.evaluate_root(&asg).unwrap());
        let partial = Assignment::new().with(Var(1), true);
        assert!(matches!(c.evaluate_root(&partial), Err(Error::Input(_))));

        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let x2 = b.lit(Lit::pos(2));
        let o = b.or(vec![x1, x2]);
        let c = b.finish(o, VarSet::new(), VarSet::new());
        let zeros = Assignment::new().with(Var(1), false).with(Var(2), false);
        assert!(!c.evaluate_root(&zeros).unwrap());
    }

    #[test]
    fn size_examples() {
        assert_eq!(Circuit::constant(true, VarSet::new()).size(), 1);
        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let x2 = b.lit(Lit::pos(2));
        let a = b.and(x1, x2);
        let c = b.finish(a, VarSet::new(), VarSet::new());
        assert_eq!(c.size(), 3);
        assert_eq!(c.edge_count(), 2);
    }

    #[test]
    fn dnnf_satisfiability() {
        let c = Circuit::constant(false, VarSet::new());
        assert!(!c.is_satisfiable_dnnf(c.root()).unwrap());

        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let nx1 = b.lit(Lit::neg(1));
        let x2 = b.lit(Lit::pos(2));
        let f = b.constant(false);
        let dead = b.and(x1, f);
        let live = b.and(nx1, x2);
        let o = b.or(vec![dead, live]);
        let c = b.finish(o, VarSet::new(), VarSet::new());
        assert!(c.is_satisfiable_dnnf(c.root()).unwrap());
        assert_eq!(c.gate(NodeId(4)), &Gate::And([NodeId(0), NodeId(3)]));
        assert!(!c.is_satisfiable_dnnf(NodeId(4)).unwrap());

        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let nx1 = b.lit(Lit::neg(1));
        let a = b.and(x1, nx1);
        let c = b.finish(a, VarSet::new(), VarSet::new());
        assert!(matches!(c.is_satisfiable_dnnf(c.root()), Err(Error::Property(_))));
    }

    #[test]
    fn sharing_and_compaction() {
        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let again = b.lit(Lit::pos(1));
        assert_eq!(x1, again);
        let _unused = b.lit(Lit::pos(7));
        let x2 = b.lit(Lit::pos(2));
        let a = b.and(x1, x2);
        let (c, map) = b.finish_with_map(a, VarSet::new(), VarSet::new());
        assert_eq!(c.len(), 3);
        assert_eq!(map[1], None);
        assert_eq!(c.root(), NodeId(2));

        let mut b = CircuitBuilder::without_sharing();
        let p = b.lit(Lit::pos(1));
        let q = b.lit(Lit::pos(1));
        assert_ne!(p, q);
        assert_eq!(b.constant(true), b.constant(true));
    }
}
