//! Normalization into simple form: no disjunction feeds a disjunction, no
//! disjunction has a constant child, and every unsatisfiable node is the
//! false constant.

use crate::circuit::{Circuit, Gate, NodeId};
use crate::error::{Error, Result};
use crate::transforms::VarBuilder;
use crate::validators::check_decomposable;

/// Rewrites `c` into simple form. Unsatisfiable nodes (found by linear-time
/// satisfiability, exact for decomposable circuits) become the false
/// constant and constants are propagated upwards; disjunctions absorb
/// disjunctive children.
pub fn make_simple(c: &Circuit) -> Result<Circuit> {
    let dec = check_decomposable(c);
    if !dec.holds {
        return Err(Error::property(dec));
    }
    let sat = c.satisfiable_nodes();
    let live = c.reachable_from(&[c.root()]);
    let mut b = VarBuilder::new();
    let mut map: Vec<Option<NodeId>> = vec![None; c.len()];
    for (i, g) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let m = |x: &NodeId| map[x.index()].expect("children precede parents");
        let id = if !sat[i] {
            b.constant(false)
        } else {
            match g {
                Gate::Lit(_) | Gate::Const(_) => b.add(g.clone()),
                Gate::And([l, r]) => {
                    let (nl, nr) = (m(l), m(r));
                    match (b.gate(nl).as_const(), b.gate(nr).as_const()) {
                        (Some(false), _) | (_, Some(false)) => b.constant(false),
                        (Some(true), _) => nr,
                        (_, Some(true)) => nl,
                        _ => b.and(nl, nr),
                    }
                }
                Gate::Or(cs) => {
                    let mut kids: Vec<NodeId> = Vec::with_capacity(cs.len());
                    let mut top = false;
                    for ch in cs {
                        let n = m(ch);
                        match b.gate(n) {
                            Gate::Const(false) => {}
                            Gate::Const(true) => top = true,
                            Gate::Or(inner) => kids.extend(inner.iter().copied()),
                            _ => kids.push(n),
                        }
                    }
                    if top {
                        b.constant(true)
                    } else if kids.is_empty() {
                        b.constant(false)
                    } else {
                        b.or(kids)
                    }
                }
            }
        };
        map[i] = Some(id);
    }
    let root = map[c.root().index()].unwrap();
    Ok(b.b.finish(root, c.universe().clone(), c.aux().clone()))
}
