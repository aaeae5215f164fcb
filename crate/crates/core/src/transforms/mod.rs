//! Circuit-to-circuit transformations used by the simulation pipeline.

pub mod certificate;
pub mod restrict;
pub mod simple;
pub mod smooth;

pub use certificate::{enumerate_certificates, extract_certificate_through, shell_restriction_for, Certificate};
pub use restrict::{node_sets, r_plus_plus, restrict, NodeSetReport, Restriction};
pub use simple::make_simple;
pub use smooth::{complete, smooth, tautology};

use crate::circuit::{CircuitBuilder, Gate, NodeId};
use crate::varset::VarSet;

/// Hash-consing builder that also tracks the variables below each node.
pub(crate) struct VarBuilder {
    pub b: CircuitBuilder,
    vars: Vec<VarSet>,
}

impl VarBuilder {
    pub fn new() -> Self {
        VarBuilder {
            b: CircuitBuilder::new(),
            vars: Vec::new(),
        }
    }

    pub fn add(&mut self, g: Gate) -> NodeId {
        let vs = match &g {
            Gate::Lit(l) => VarSet::singleton(l.var),
            Gate::Const(_) => VarSet::new(),
            Gate::And([l, r]) => self.vars[l.index()].union(&self.vars[r.index()]),
            Gate::Or(cs) => {
                let mut s = VarSet::new();
                for c in cs {
                    s.union_with(&self.vars[c.index()]);
                }
                s
            }
        };
        let id = self.b.add(g);
        if id.index() == self.vars.len() {
            self.vars.push(vs);
        }
        id
    }

    pub fn vars(&self, id: NodeId) -> &VarSet {
        &self.vars[id.index()]
    }

    pub fn gate(&self, id: NodeId) -> &Gate {
        self.b.gate_of(id)
    }

    pub fn constant(&mut self, v: bool) -> NodeId {
        self.add(Gate::Const(v))
    }

    pub fn and(&mut self, l: NodeId, r: NodeId) -> NodeId {
        self.add(Gate::And([l, r]))
    }

    /// Disjunction; a single child is returned as is.
    pub fn or(&mut self, mut cs: Vec<NodeId>) -> NodeId {
        if cs.len() == 1 {
            return cs.pop().unwrap();
        }
        self.add(Gate::Or(cs))
    }
}
