//! Restriction of a circuit by a partial assignment, and the node sets
//! `R`, `R⁺` and `R⁺⁺` of a restricted circuit at a vtree node.

use serde::{Deserialize, Serialize};

use crate::circuit::{Assignment, Circuit, CircuitBuilder, Gate, NodeId};
use crate::error::{Error, Result};
use crate::vtree::{decomposition_nodes, DecompositionTable, Orientation, PrunedVtree, Vtree, VtreeId};

/// A circuit restricted by `p`, with the vtree pruned at `domain(p)`.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub circuit: Circuit,
    pub pruned: PrunedVtree,
    pub p: Assignment,
    origin: Vec<NodeId>,
    image: Vec<Option<NodeId>>,
    dnodes: DecompositionTable,
}

impl Restriction {
    /// The node of the unrestricted circuit that `n` was derived from.
    /// Constants created by the restriction map to the node they replaced
    /// first.
    pub fn origin(&self, n: NodeId) -> NodeId {
        self.origin[n.index()]
    }

    /// The restricted node derived from `u`, if it survived.
    pub fn image(&self, u: NodeId) -> Option<NodeId> {
        self.image.get(u.index()).copied().flatten()
    }

    /// Decomposition node of a restricted node in the pruned vtree.
    pub fn dnode(&self, n: NodeId) -> Option<VtreeId> {
        self.dnodes.get(n)
    }
}

/// Replaces literals over `domain(p)` by constants, collapses gates that
/// become constant, drops false children of disjunctions and removes
/// unreachable nodes. Surviving gates keep their identity (no merging), so
/// every restricted node has a unique origin.
pub fn restrict(c: &Circuit, t: &Vtree, p: &Assignment) -> Result<Restriction> {
    let a = p.domain();
    if !a.is_subset(t.variables()) {
        return Err(Error::Input("restriction assigns variables outside the vtree".into()));
    }
    let pruned = t.prune(&a)?;
    let live = c.reachable_from(&[c.root()]);
    let mut b = CircuitBuilder::without_sharing();
    let mut origin_of_builder: Vec<NodeId> = Vec::new();
    let mut map: Vec<Option<NodeId>> = vec![None; c.len()];
    let mut add = |b: &mut CircuitBuilder, g: Gate, from: NodeId| {
        let id = b.add(g);
        if id.index() == origin_of_builder.len() {
            origin_of_builder.push(from);
        }
        id
    };
    for (i, g) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let from = NodeId(i as u32);
        let m = |x: &NodeId| map[x.index()].unwrap();
        let id = match g {
            Gate::Lit(l) => match p.get(l.var) {
                Some(v) => add(&mut b, Gate::Const(l.holds(v)), from),
                None => add(&mut b, g.clone(), from),
            },
            Gate::Const(_) => add(&mut b, g.clone(), from),
            Gate::And([l, r]) => {
                let (nl, nr) = (m(l), m(r));
                match (b.gate_of(nl).as_const(), b.gate_of(nr).as_const()) {
                    (Some(false), _) | (_, Some(false)) => add(&mut b, Gate::Const(false), from),
                    (Some(true), Some(true)) => add(&mut b, Gate::Const(true), from),
                    _ => add(&mut b, Gate::And([nl, nr]), from),
                }
            }
            Gate::Or(cs) => {
                let mut kids = Vec::with_capacity(cs.len());
                let mut top = false;
                for ch in cs {
                    let n = m(ch);
                    match b.gate_of(n).as_const() {
                        Some(false) => {}
                        Some(true) => top = true,
                        None => kids.push(n),
                    }
                }
                if top {
                    add(&mut b, Gate::Const(true), from)
                } else if kids.is_empty() {
                    add(&mut b, Gate::Const(false), from)
                } else {
                    add(&mut b, Gate::Or(kids), from)
                }
            }
        };
        map[i] = Some(id);
    }
    let root = map[c.root().index()].unwrap();
    let (circuit, compact) = b.finish_with_map(root, pruned.tree.variables().clone(), c.aux().clone());
    let mut origin = vec![NodeId(0); circuit.len()];
    for (bid, new) in compact.iter().enumerate() {
        if let Some(new) = new {
            origin[new.index()] = origin_of_builder[bid];
        }
    }
    let image: Vec<Option<NodeId>> = map
        .iter()
        .map(|m| m.and_then(|bid| compact[bid.index()]))
        .map(|n| n.filter(|n| circuit.gate(*n).as_const().is_none()))
        .collect();
    let dnodes = decomposition_nodes(&circuit, &pruned.tree, Orientation::DdnnfUnoriented)?;
    Ok(Restriction {
        circuit,
        pruned,
        p: p.clone(),
        origin,
        image,
        dnodes,
    })
}

/// Nodes of a restricted circuit anchored at one pruned-vtree node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSetReport {
    /// Node of the pruned vtree.
    pub v: VtreeId,
    /// Nodes whose decomposition node is `v`, children first.
    pub r_set: Vec<NodeId>,
    /// Members of `r_set` without a child in `r_set`.
    pub r_plus: Vec<NodeId>,
    pub p: Assignment,
}

/// Computes `R` and `R⁺` at pruned-vtree node `v`.
pub fn node_sets(r: &Restriction, v: VtreeId) -> Result<NodeSetReport> {
    if !r.pruned.tree.contains(v) {
        return Err(Error::Input(format!("vtree node {} is not in the pruned vtree", v)));
    }
    let c = &r.circuit;
    let mut in_r = vec![false; c.len()];
    let mut r_set = Vec::new();
    for id in c.node_ids() {
        if r.dnode(id) == Some(v) && c.gate(id).as_const().is_none() {
            in_r[id.index()] = true;
            r_set.push(id);
        }
    }
    let r_plus = r_set
        .iter()
        .copied()
        .filter(|u| c.children(*u).iter().all(|ch| !in_r[ch.index()]))
        .collect();
    Ok(NodeSetReport {
        v,
        r_set,
        r_plus,
        p: r.p.clone(),
    })
}

/// `R⁺` without `u_l` and without the children of `u_l`.
pub fn r_plus_plus(report: &NodeSetReport, c: &Circuit, u_l: NodeId) -> Vec<NodeId> {
    let kids = c.children(u_l);
    report
        .r_plus
        .iter()
        .copied()
        .filter(|u| *u != u_l && !kids.contains(u))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Lit, Var};
    use crate::oracle::equivalent_at;
    use crate::varset::VarSet;

    fn sample() -> (Circuit, Vtree) {
        // (x1 ∧ x2) ∨ (¬x1 ∧ ¬x2) over vtree (1 2)
        let t = Vtree::parse("(1 2)").unwrap();
        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let x2 = b.lit(Lit::pos(2));
        let n1 = b.lit(Lit::neg(1));
        let n2 = b.lit(Lit::neg(2));
        let a = b.and(x1, x2);
        let c = b.and(n1, n2);
        let o = b.or(vec![a, c]);
        (b.finish(o, VarSet::new(), VarSet::new()), t)
    }

    #[test]
    fn empty_restriction_is_identity() {
        let (c, t) = sample();
        let r = restrict(&c, &t, &Assignment::new()).unwrap();
        assert_eq!(r.circuit, c);
        for u in c.node_ids() {
            assert_eq!(r.origin(r.image(u).unwrap()), u);
        }
    }

    #[test]
    fn total_satisfying_restriction_collapses_to_true() {
        let (c, t) = sample();
        let p: Assignment = [(Var(1), true), (Var(2), true)].into_iter().collect();
        let r = restrict(&c, &t, &p).unwrap();
        assert_eq!(r.circuit.gate(r.circuit.root()), &Gate::Const(true));
        assert_eq!(r.pruned.tree.to_string(), "*");
    }

    #[test]
    fn partial_restriction_keeps_structure() {
        let (c, t) = sample();
        let p: Assignment = [(Var(1), true)].into_iter().collect();
        let r = restrict(&c, &t, &p).unwrap();
        let d = &r.circuit;
        // ∨(∧(⊤, x2)) remains, the other branch is gone
        assert!(d.gate(d.root()).is_or());
        assert_eq!(d.children(d.root()).len(), 1);
        let mut b = CircuitBuilder::new();
        let x2 = b.lit(Lit::pos(2));
        let want = b.finish(x2, VarSet::new(), VarSet::new());
        assert!(equivalent_at(d, d.root(), &want, want.root(), &VarSet::new(), 12).unwrap().equivalent);
        assert!(matches!(
            restrict(&c, &t, &[(Var(9), true)].into_iter().collect()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn node_sets_at_root() {
        let (c, t) = sample();
        let r = restrict(&c, &t, &Assignment::new()).unwrap();
        let ns = node_sets(&r, r.pruned.tree.root()).unwrap();
        // the disjunction and both conjunctions live at the root
        assert_eq!(ns.r_set.len(), 3);
        assert_eq!(ns.r_plus.len(), 2);
        assert!(!ns.r_plus.contains(&c.root()));
        let pp = r_plus_plus(&ns, &r.circuit, ns.r_plus[0]);
        assert_eq!(pp, vec![ns.r_plus[1]]);
    }

    #[test]
    fn leaf_node_set() {
        let t = Vtree::parse("(1 2)").unwrap();
        let mut b = CircuitBuilder::new();
        let x1 = b.lit(Lit::pos(1));
        let c = b.finish(x1, VarSet::new(), VarSet::new());
        let p: Assignment = [(Var(2), false)].into_iter().collect();
        let r = restrict(&c, &t, &p).unwrap();
        let v = r.pruned.from_base(t.leaf_of(Var(1)).unwrap()).unwrap();
        let ns = node_sets(&r, v).unwrap();
        assert_eq!(ns.r_plus, vec![r.circuit.root()]);
    }
}
