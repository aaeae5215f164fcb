//! Smoothing with vtree-shaped don't-care gadgets.
//!
//! [`smooth`] makes the children of every disjunction mention the union of
//! their variables. [`complete`] goes further: every node ends up
//! mentioning exactly the variables of the vtree node it is anchored at,
//! and the root mentions every vtree variable. The simulation relies on
//! the latter.

use std::collections::HashMap;

use crate::circuit::{Circuit, Gate, Lit, NodeId};
use crate::error::{Error, Result};
use crate::transforms::VarBuilder;
use crate::validators::{check_decomposable, check_respects_vtree};
use crate::varset::VarSet;
use crate::vtree::{Orientation, Vtree, VtreeId};

fn check_pre(c: &Circuit, t: &Vtree) -> Result<()> {
    for r in [check_decomposable(c), check_respects_vtree(c, t, Orientation::DdnnfUnoriented)] {
        if !r.holds {
            return Err(Error::property(r));
        }
    }
    Ok(())
}

/// Tautology over exactly `vars`, shaped like the vtree: a disjunction
/// `x ∨ ¬x` per variable, conjoined along the vtree.
pub fn tautology(t: &Vtree, vars: &VarSet) -> Result<Circuit> {
    if !vars.is_subset(t.variables()) {
        return Err(Error::Input("tautology variables must belong to the vtree".into()));
    }
    let mut b = VarBuilder::new();
    let root = gadget(t, vars, &mut b, &mut HashMap::new());
    Ok(b.b.finish(root, vars.clone(), VarSet::new()))
}

fn gadget(t: &Vtree, vars: &VarSet, b: &mut VarBuilder, memo: &mut HashMap<VarSet, NodeId>) -> NodeId {
    if vars.is_empty() {
        return b.constant(true);
    }
    if let Some(&n) = memo.get(vars) {
        return n;
    }
    let n = if vars.len() == 1 {
        let x = vars.iter().next().unwrap();
        let p = b.add(Gate::Lit(Lit::new(x, true)));
        let q = b.add(Gate::Lit(Lit::new(x, false)));
        b.or(vec![p, q])
    } else {
        let w = t.lca_of_vars(vars).expect("gadget variables belong to the vtree");
        let (l, r) = t.children(w).expect("two variables meet at an internal node");
        let gl = gadget(t, &vars.intersection(t.vars(l)), b, memo);
        let gr = gadget(t, &vars.intersection(t.vars(r)), b, memo);
        b.and(gl, gr)
    };
    memo.insert(vars.clone(), n);
    n
}

struct Smoother<'a> {
    t: &'a Vtree,
    b: VarBuilder,
    ext_memo: HashMap<(NodeId, VarSet), NodeId>,
    gadgets: HashMap<VarSet, NodeId>,
}

impl Smoother<'_> {
    fn gadget(&mut self, vars: &VarSet) -> NodeId {
        gadget(self.t, vars, &mut self.b, &mut self.gadgets)
    }

    /// Equivalent of builder node `n` mentioning exactly `u ⊇ vars(n)`.
    fn ext(&mut self, n: NodeId, u: &VarSet) -> NodeId {
        if self.b.vars(n) == u {
            return n;
        }
        let key = (n, u.clone());
        if let Some(&m) = self.ext_memo.get(&key) {
            return m;
        }
        let t = self.t;
        let s = t.lca_of_vars(u).expect("smoothing variables belong to the vtree");
        let out = match self.b.gate(n).clone() {
            Gate::Const(true) => self.gadget(u),
            Gate::Const(false) => n,
            g => {
                let d = t.lca_of_vars(self.b.vars(n)).expect("node variables belong to the vtree");
                if d != s {
                    let (sl, sr) = t.children(s).expect("strict ancestor is internal");
                    let left = t.is_ancestor_or_self(sl, d);
                    let (near, far) = if left { (sl, sr) } else { (sr, sl) };
                    let inner = self.ext(n, &u.intersection(t.vars(near)));
                    let pad = self.gadget(&u.intersection(t.vars(far)));
                    if left {
                        self.b.and(inner, pad)
                    } else {
                        self.b.and(pad, inner)
                    }
                } else {
                    match g {
                        Gate::And([l, r]) => {
                            let (sl, _) = t.children(s).expect("conjunction anchored at an internal node");
                            let side = |vs: &VarSet| if vs.is_subset(t.vars(sl)) { sl } else { t.children(s).unwrap().1 };
                            let (lv, rv) = (self.b.vars(l).clone(), self.b.vars(r).clone());
                            if lv.is_empty() {
                                self.ext(r, u)
                            } else if rv.is_empty() {
                                self.ext(l, u)
                            } else {
                                let (ls, rs) = (side(&lv), side(&rv));
                                let nl = self.ext(l, &u.intersection(t.vars(ls)));
                                let nr = self.ext(r, &u.intersection(t.vars(rs)));
                                self.b.and(nl, nr)
                            }
                        }
                        Gate::Or(cs) => {
                            let kids: Vec<NodeId> = cs.iter().map(|ch| self.ext(*ch, u)).collect();
                            self.b.or(kids)
                        }
                        _ => unreachable!("a literal mentions its only variable"),
                    }
                }
            }
        };
        self.ext_memo.insert(key, out);
        out
    }
}

/// Makes every disjunction smooth by padding each child with don't-care
/// gadgets up to the union of the children's variables. Unsatisfiable
/// children are dropped first.
pub fn smooth(c: &Circuit, t: &Vtree) -> Result<Circuit> {
    check_pre(c, t)?;
    let sat = c.satisfiable_nodes();
    let live = c.reachable_from(&[c.root()]);
    let mut sm = Smoother {
        t,
        b: VarBuilder::new(),
        ext_memo: HashMap::new(),
        gadgets: HashMap::new(),
    };
    let mut map: Vec<Option<NodeId>> = vec![None; c.len()];
    for (i, g) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let m = |x: &NodeId| map[x.index()].unwrap();
        let id = match g {
            Gate::Lit(_) | Gate::Const(_) => sm.b.add(g.clone()),
            Gate::And([l, r]) => {
                let (nl, nr) = (m(l), m(r));
                sm.b.and(nl, nr)
            }
            Gate::Or(cs) => {
                let kids: Vec<NodeId> = cs.iter().filter(|ch| sat[ch.index()]).map(m).collect();
                if kids.is_empty() {
                    sm.b.constant(false)
                } else {
                    let mut u = VarSet::new();
                    for k in &kids {
                        u.union_with(sm.b.vars(*k));
                    }
                    let padded: Vec<NodeId> = kids.iter().map(|k| sm.ext(*k, &u)).collect();
                    sm.b.or(padded)
                }
            }
        };
        map[i] = Some(id);
    }
    let root = map[c.root().index()].unwrap();
    Ok(sm.b.b.finish(root, c.universe().clone(), c.aux().clone()))
}

struct Completer<'a> {
    c: &'a Circuit,
    t: &'a Vtree,
    b: VarBuilder,
    memo: HashMap<(NodeId, VtreeId), NodeId>,
    taut: HashMap<VtreeId, NodeId>,
}

impl Completer<'_> {
    fn taut(&mut self, s: VtreeId) -> NodeId {
        if let Some(&n) = self.taut.get(&s) {
            return n;
        }
        let n = match self.t.children(s) {
            None => {
                let x = self.t.vars(s).iter().next().expect("complete vtrees have no stubs");
                let p = self.b.add(Gate::Lit(Lit::new(x, true)));
                let q = self.b.add(Gate::Lit(Lit::new(x, false)));
                self.b.or(vec![p, q])
            }
            Some((l, r)) => {
                let a = self.taut(l);
                let b = self.taut(r);
                self.b.and(a, b)
            }
        };
        self.taut.insert(s, n);
        n
    }

    fn side(&self, s: VtreeId, vars: &VarSet) -> (VtreeId, bool) {
        let (l, r) = self.t.children(s).unwrap();
        if vars.is_subset(self.t.vars(l)) {
            (l, true)
        } else {
            (r, false)
        }
    }

    /// Equivalent of `u` mentioning exactly `vars(s)`; `vars(u) ⊆ vars(s)`.
    fn complete(&mut self, u: NodeId, s: VtreeId) -> NodeId {
        if let Some(&n) = self.memo.get(&(u, s)) {
            return n;
        }
        let c = self.c;
        let t = self.t;
        let uv = c.vars(u);
        let out = if uv.is_empty() {
            if c.eval_with(u, |_| false) {
                self.taut(s)
            } else {
                self.b.constant(false)
            }
        } else {
            let d = t.lca_of_vars(uv).expect("node variables belong to the vtree");
            if d != s {
                let (near, left) = self.side(s, uv);
                let (l, r) = t.children(s).unwrap();
                let far = if left { r } else { l };
                let inner = self.complete(u, near);
                let pad = self.taut(far);
                if left {
                    self.b.and(inner, pad)
                } else {
                    self.b.and(pad, inner)
                }
            } else {
                match c.gate(u) {
                    Gate::Lit(_) => self.b.add(c.gate(u).clone()),
                    Gate::Const(_) => unreachable!("constants mention no variables"),
                    Gate::And([l, r]) => {
                        let (l, r) = (*l, *r);
                        if c.vars(l).is_empty() || c.vars(r).is_empty() {
                            let (k, other) = if c.vars(l).is_empty() { (l, r) } else { (r, l) };
                            if c.eval_with(k, |_| false) {
                                self.complete(other, s)
                            } else {
                                self.b.constant(false)
                            }
                        } else {
                            let (ls, l_left) = self.side(s, c.vars(l));
                            let (rs, _) = self.side(s, c.vars(r));
                            let nl = self.complete(l, ls);
                            let nr = self.complete(r, rs);
                            if nl == self.b.constant(false) || nr == self.b.constant(false) {
                                self.b.constant(false)
                            } else if l_left {
                                self.b.and(nl, nr)
                            } else {
                                self.b.and(nr, nl)
                            }
                        }
                    }
                    Gate::Or(cs) => {
                        let cs = cs.clone();
                        let f = self.b.constant(false);
                        let kids: Vec<NodeId> = cs.iter().map(|ch| self.complete(*ch, s)).filter(|k| *k != f).collect();
                        if kids.is_empty() {
                            f
                        } else {
                            self.b.or(kids)
                        }
                    }
                }
            }
        };
        self.memo.insert((u, s), out);
        out
    }
}

/// Vtree-complete smoothing: every node of the result is anchored at a
/// vtree node `s` and mentions exactly `vars(s)`, every conjunction has its
/// children in the left and right subtrees of its anchor (in that order),
/// and the root mentions all vtree variables. The vtree must have no stubs.
pub fn complete(c: &Circuit, t: &Vtree) -> Result<Circuit> {
    check_pre(c, t)?;
    if t.has_stubs() {
        return Err(Error::Input("complete smoothing needs a vtree without stubs".into()));
    }
    let mut cp = Completer {
        c,
        t,
        b: VarBuilder::new(),
        memo: HashMap::new(),
        taut: HashMap::new(),
    };
    let root = cp.complete(c.root(), t.root());
    let universe = c.universe().union(t.variables());
    Ok(cp.b.b.finish(root, universe, c.aux().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, Var};
    use crate::oracle::{equivalent, model_count};
    use crate::validators::{check_deterministic, check_smooth};
    use crate::vtree::decomposition_nodes;

    fn build(f: impl FnOnce(&mut CircuitBuilder) -> NodeId) -> Circuit {
        let mut b = CircuitBuilder::new();
        let r = f(&mut b);
        b.finish(r, VarSet::new(), VarSet::new())
    }

    #[test]
    fn smooth_circuit_is_unchanged() {
        let t = Vtree::parse("(1 2)").unwrap();
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            let y = b.lit(Lit::pos(2));
            let a1 = b.and(x, y);
            let a2 = b.and(nx, y);
            b.or(vec![a1, a2])
        });
        assert_eq!(smooth(&c, &t).unwrap(), c);
    }

    #[test]
    fn tautology_is_vtree_shaped() {
        let t = Vtree::parse("((1 2) (3 4))").unwrap();
        let vars: VarSet = [Var(1), Var(3), Var(4)].into_iter().collect();
        let g = tautology(&t, &vars).unwrap();
        assert_eq!(g.vars(g.root()), &vars);
        assert_eq!(model_count(&g, &vars).unwrap(), 8);
        assert!(check_respects_vtree(&g, &t, Orientation::SddOriented).holds);
    }

    #[test]
    fn forced_gadget() {
        let t = Vtree::parse("(1 2)").unwrap();
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            let a = b.and(x, y);
            b.or(vec![x, a])
        });
        let s = smooth(&c, &t).unwrap();
        assert!(check_smooth(&s).holds);
        assert!(check_respects_vtree(&s, &t, Orientation::SddOriented).holds);
        assert!(equivalent(&c, &s, &VarSet::new()).unwrap().equivalent);
        let first = s.children(s.root())[0];
        let Gate::And([l, r]) = s.gate(first) else { panic!("expected a padded child") };
        assert_eq!(s.gate(*l), &Gate::Lit(Lit::pos(1)));
        assert!(s.gate(*r).is_or());
        assert_eq!(s.vars(*r), &VarSet::singleton(Var(2)));
    }

    #[test]
    fn complete_reaches_every_vtree_variable() {
        let t = Vtree::parse("((1 2) (3 4))").unwrap();
        let c = build(|b| {
            let x1 = b.lit(Lit::pos(1));
            let x3 = b.lit(Lit::pos(3));
            let nx1 = b.lit(Lit::neg(1));
            let x4 = b.lit(Lit::pos(4));
            let a = b.and(x1, x3);
            let top = b.constant(true);
            let bb = b.and(nx1, top);
            let bb2 = b.and(bb, x4);
            b.or(vec![a, bb2])
        });
        let s = complete(&c, &t).unwrap();
        assert_eq!(s.vars(s.root()), t.variables());
        assert!(check_smooth(&s).holds);
        assert!(check_deterministic(&s, 12).holds);
        assert!(check_respects_vtree(&s, &t, Orientation::SddOriented).holds);
        assert_eq!(model_count(&s, t.variables()).unwrap(), model_count(&c, t.variables()).unwrap());
        let dn = decomposition_nodes(&s, &t, Orientation::SddOriented).unwrap();
        for id in s.node_ids() {
            if let Some(v) = dn.get(id) {
                assert_eq!(s.vars(id), t.vars(v), "node {} is not complete", id);
            }
        }
    }
}
