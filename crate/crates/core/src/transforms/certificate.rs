//! Certificates: tree-shaped sub-circuits that keep both children of every
//! conjunction and exactly one child of every disjunction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{Assignment, Circuit, Gate, NodeId};
use crate::error::{Error, Result};
use crate::validators::check_decomposable;
use crate::vtree::{Vtree, VtreeId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// Member nodes in increasing id order.
    pub nodes: Vec<NodeId>,
    /// Values forced by the member literals.
    pub decisions: Assignment,
    /// Contains a false constant, or two contradicting literals.
    pub falsified: bool,
}

impl Certificate {
    /// Leads to the true sink on every assignment it represents.
    pub fn is_one(&self) -> bool {
        !self.falsified
    }

    /// Does the (total) assignment agree with every decision?
    pub fn represents(&self, a: &Assignment) -> bool {
        self.decisions.iter().all(|(v, b)| a.get(v) == Some(b))
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.binary_search(&n).is_ok()
    }
}

#[derive(Default)]
struct Partial {
    nodes: BTreeSet<NodeId>,
    decisions: Assignment,
    falsified: bool,
}

impl Partial {
    fn add_leaf(&mut self, c: &Circuit, n: NodeId) {
        self.nodes.insert(n);
        match c.gate(n) {
            Gate::Lit(l) => match self.decisions.get(l.var) {
                Some(b) if b != l.positive => self.falsified = true,
                _ => self.decisions.set(l.var, l.positive),
            },
            Gate::Const(false) => self.falsified = true,
            _ => {}
        }
    }

    fn finish(self) -> Certificate {
        Certificate {
            nodes: self.nodes.into_iter().collect(),
            decisions: self.decisions,
            falsified: self.falsified,
        }
    }
}

/// Adds the least satisfying certificate below `n`: the first satisfiable
/// child at every disjunction.
fn least(c: &Circuit, sat: &[bool], n: NodeId, out: &mut Partial) {
    let mut stack = vec![n];
    while let Some(n) = stack.pop() {
        if !out.nodes.insert(n) {
            continue;
        }
        match c.gate(n) {
            Gate::Lit(_) | Gate::Const(_) => {
                out.nodes.remove(&n);
                out.add_leaf(c, n);
            }
            Gate::And([l, r]) => {
                stack.push(*r);
                stack.push(*l);
            }
            Gate::Or(cs) => {
                let ch = cs.iter().copied().find(|ch| sat[ch.index()]).unwrap_or(cs[0]);
                stack.push(ch);
            }
        }
    }
}

/// A 1-certificate containing the root and `u`, built deterministically:
/// along the path to `u` every disjunction takes its first child that can
/// still reach `u` satisfiably, and everything else is completed with the
/// least satisfying certificate. `None` when no 1-certificate passes
/// through `u`.
pub fn extract_certificate_through(c: &Circuit, u: NodeId) -> Result<Option<Certificate>> {
    c.check_node(u)?;
    let dec = check_decomposable(c);
    if !dec.holds {
        return Err(Error::property(dec));
    }
    if !c.reachable_from(&[c.root()])[u.index()] {
        return Err(Error::Structural(format!("node {} is not reachable from the root", u)));
    }
    let sat = c.satisfiable_nodes();
    // good[i]: some satisfiable certificate of the sub-circuit at i contains u
    let mut good = vec![false; c.len()];
    for i in u.index()..c.len() {
        good[i] = if i == u.index() {
            sat[i]
        } else {
            match c.gate(NodeId(i as u32)) {
                Gate::And([l, r]) => (good[l.index()] && sat[r.index()]) || (good[r.index()] && sat[l.index()]),
                Gate::Or(cs) => cs.iter().any(|ch| good[ch.index()]),
                _ => false,
            }
        };
    }
    if !good[c.root().index()] {
        return Ok(None);
    }
    let mut out = Partial::default();
    let mut n = c.root();
    loop {
        if n == u {
            least(c, &sat, n, &mut out);
            break;
        }
        out.nodes.insert(n);
        match c.gate(n) {
            Gate::And([l, r]) => {
                let (next, other) = if good[l.index()] { (*l, *r) } else { (*r, *l) };
                least(c, &sat, other, &mut out);
                n = next;
            }
            Gate::Or(cs) => n = *cs.iter().find(|ch| good[ch.index()]).unwrap(),
            _ => unreachable!("leaves other than u cannot reach u"),
        }
    }
    Ok(Some(out.finish()))
}

/// The decisions of the certificate through `u` restricted to the shell of
/// `v`; shell variables the certificate leaves open are set to 0.
pub fn shell_restriction_for(c: &Circuit, t: &Vtree, u: NodeId, v: VtreeId) -> Result<Assignment> {
    let cert = extract_certificate_through(c, u)?
        .ok_or_else(|| Error::Pipeline(format!("no satisfying certificate passes through node {}", u)))?;
    Ok(t.shell(v)
        .iter()
        .map(|x| (x, cert.decisions.get(x).unwrap_or(false)))
        .collect())
}

/// All certificates (satisfying or not) in a fixed order, at most `limit`.
pub fn enumerate_certificates(c: &Circuit, limit: usize) -> Vec<Certificate> {
    fn go(c: &Circuit, n: NodeId, limit: usize) -> Vec<Partial> {
        match c.gate(n) {
            Gate::Lit(_) | Gate::Const(_) => {
                let mut p = Partial::default();
                p.add_leaf(c, n);
                vec![p]
            }
            Gate::And([l, r]) => {
                let left = go(c, *l, limit);
                let right = go(c, *r, limit);
                let mut out = Vec::new();
                'outer: for a in &left {
                    for b in &right {
                        if out.len() >= limit {
                            break 'outer;
                        }
                        let mut p = Partial {
                            nodes: a.nodes.union(&b.nodes).copied().collect(),
                            decisions: a.decisions.clone(),
                            falsified: a.falsified || b.falsified,
                        };
                        p.nodes.insert(n);
                        for (v, val) in b.decisions.iter() {
                            match p.decisions.get(v) {
                                Some(x) if x != val => p.falsified = true,
                                _ => p.decisions.set(v, val),
                            }
                        }
                        out.push(p);
                    }
                }
                out
            }
            Gate::Or(cs) => {
                let mut out = Vec::new();
                for ch in cs {
                    for mut p in go(c, *ch, limit - out.len()) {
                        p.nodes.insert(n);
                        out.push(p);
                    }
                    if out.len() >= limit {
                        break;
                    }
                }
                out
            }
        }
    }
    if limit == 0 {
        return Vec::new();
    }
    go(c, c.root(), limit).into_iter().map(Partial::finish).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, Lit, Var};
    use crate::varset::VarSet;

    fn build(f: impl FnOnce(&mut CircuitBuilder) -> NodeId) -> Circuit {
        let mut b = CircuitBuilder::new();
        let r = f(&mut b);
        b.finish(r, VarSet::new(), VarSet::new())
    }

    #[test]
    fn certificate_at_root_satisfies() {
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            let y = b.lit(Lit::pos(2));
            let a1 = b.and(x, y);
            let a2 = b.and(nx, y);
            b.or(vec![a1, a2])
        });
        let cert = extract_certificate_through(&c, c.root()).unwrap().unwrap();
        assert!(cert.is_one());
        let a = Assignment::from_index(&[Var(1), Var(2)], 0).join(&cert.decisions);
        assert!(c.evaluate_root(&a).unwrap());
        let second = c.children(c.root())[1];
        let cert = extract_certificate_through(&c, second).unwrap().unwrap();
        assert!(cert.contains(second));
        assert_eq!(cert.decisions.get(Var(1)), Some(false));
    }

    #[test]
    fn dead_branch_has_no_certificate() {
        let mut b = CircuitBuilder::new();
        let x = b.lit(Lit::pos(1));
        let f = b.constant(false);
        let y = b.lit(Lit::pos(2));
        let dead = b.and(x, f);
        let root = b.or(vec![dead, y]);
        let c = b.finish(root, VarSet::new(), VarSet::new());
        let x = NodeId(0);
        assert_eq!(c.gate(x), &Gate::Lit(Lit::pos(1)));
        assert_eq!(extract_certificate_through(&c, x).unwrap(), None);
    }

    #[test]
    fn shell_restriction_at_root_is_empty() {
        let t = Vtree::parse("(1 2)").unwrap();
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            b.and(x, y)
        });
        assert!(shell_restriction_for(&c, &t, c.root(), t.root()).unwrap().is_empty());
        let leaf = t.leaf_of(Var(2)).unwrap();
        let p = shell_restriction_for(&c, &t, NodeId(1), leaf).unwrap();
        assert_eq!(p.get(Var(1)), Some(true));
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn enumeration_examples() {
        let c = build(|b| b.lit(Lit::pos(1)));
        assert_eq!(enumerate_certificates(&c, 10).len(), 1);
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            b.or(vec![x, nx])
        });
        let certs = enumerate_certificates(&c, 10);
        assert_eq!(certs.len(), 2);
        assert!(certs.iter().all(Certificate::is_one));
        assert_eq!(enumerate_certificates(&c, 1).len(), 1);
    }
}
