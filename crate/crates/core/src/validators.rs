//! Checks for each representation property. Every check returns a report;
//! a failing report carries a witness that can be replayed with
//! [`Circuit::evaluate`].

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Assignment, Circuit, Gate, NodeId, Var};
use crate::oracle::{Engine, DEFAULT_TABLE_CAP};
use crate::varset::VarSet;
use crate::vtree::{minimal_respected, Orientation, Vtree, VtreeId};

/// Default variable limit for exhaustive local checks.
pub const DEFAULT_CHECK_CAP: usize = 20;

/// Random assignments tried per local check above the cap.
const SAMPLE_BLOCKS: u64 = 16;
const SAMPLE_SEED: u64 = 0x5eed;

/// Largest number of node evaluations (one per block) for a single
/// whole-circuit scan.
const GLOBAL_BUDGET: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Decomposable,
    Deterministic,
    RespectsVtree,
    Smooth,
    Simple,
    StronglyDeterministicSdd,
    Partition,
    Disjoint,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Property::Decomposable => "decomposable",
            Property::Deterministic => "deterministic",
            Property::RespectsVtree => "respects_vtree",
            Property::Smooth => "smooth",
            Property::Simple => "simple",
            Property::StronglyDeterministicSdd => "strongly_deterministic_sdd",
            Property::Partition => "partition",
            Property::Disjoint => "disjoint",
        };
        f.write_str(s)
    }
}

/// How a verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Structural inspection only.
    Syntactic,
    /// Every relevant assignment was enumerated.
    Exhaustive,
    /// Random assignments only: a pass is evidence, not proof.
    Sampled,
}

/// Concrete evidence of a violation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub gates: Vec<NodeId>,
    pub vars: Vec<Var>,
    pub assignment: Option<Assignment>,
    pub message: String,
}

impl Witness {
    pub fn gates(gates: Vec<NodeId>) -> Self {
        Witness {
            gates,
            ..Witness::default()
        }
    }

    pub fn with_vars(mut self, vars: Vec<Var>) -> Self {
        self.vars = vars;
        self
    }

    pub fn with_assignment(mut self, a: Assignment) -> Self {
        self.assignment = Some(a);
        self
    }

    pub fn with_message(mut self, m: impl Into<String>) -> Self {
        self.message = m.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub holds: bool,
    pub method: Method,
    pub witness: Option<Witness>,
}

impl PropertyReport {
    pub fn pass(property: Property, method: Method) -> Self {
        PropertyReport {
            property,
            holds: true,
            method,
            witness: None,
        }
    }

    pub fn violation(property: Property, witness: Witness) -> Self {
        let method = if witness.assignment.is_some() {
            Method::Exhaustive
        } else {
            Method::Syntactic
        };
        PropertyReport {
            property,
            holds: false,
            method,
            witness: Some(witness),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// One-line human-readable verdict.
    pub fn summary(&self) -> String {
        let method = match self.method {
            Method::Syntactic => "syntactic",
            Method::Exhaustive => "exhaustive",
            Method::Sampled => "sampled, not proven",
        };
        let mut s = format!(
            "{}: {} ({})",
            self.property,
            if self.holds { "holds" } else { "violated" },
            method
        );
        if let Some(w) = &self.witness {
            if !w.gates.is_empty() {
                let g: Vec<String> = w.gates.iter().map(|g| g.0.to_string()).collect();
                s += &format!("; gates [{}]", g.join(", "));
            }
            if !w.vars.is_empty() {
                let v: Vec<String> = w.vars.iter().map(|v| v.0.to_string()).collect();
                s += &format!("; vars [{}]", v.join(", "));
            }
            if let Some(a) = &w.assignment {
                s += &format!("; assignment {}", a);
            }
            if !w.message.is_empty() {
                s += &format!("; {}", w.message);
            }
        }
        s
    }
}

fn live_nodes(c: &Circuit) -> impl Iterator<Item = (NodeId, &Gate)> {
    let live = c.reachable_from(&[c.root()]);
    c.gates()
        .iter()
        .enumerate()
        .filter(move |(i, _)| live[*i])
        .map(|(i, g)| (NodeId(i as u32), g))
}

pub fn check_decomposable(c: &Circuit) -> PropertyReport {
    match c.find_non_decomposable(c.root()) {
        None => PropertyReport::pass(Property::Decomposable, Method::Syntactic),
        Some((g, v)) => PropertyReport::violation(
            Property::Decomposable,
            Witness::gates(vec![g])
                .with_vars(vec![v])
                .with_message("children of the conjunction share a variable"),
        ),
    }
}

pub fn check_smooth(c: &Circuit) -> PropertyReport {
    for (id, g) in live_nodes(c) {
        if let Gate::Or(cs) = g {
            let first = c.vars(cs[0]);
            if let Some(other) = cs.iter().find(|ch| c.vars(**ch) != first) {
                let diff = first.union(c.vars(*other)).difference(&first.intersection(c.vars(*other)));
                return PropertyReport::violation(
                    Property::Smooth,
                    Witness::gates(vec![id, cs[0], *other])
                        .with_vars(diff.to_vec())
                        .with_message("children of the disjunction mention different variables"),
                );
            }
        }
    }
    PropertyReport::pass(Property::Smooth, Method::Syntactic)
}

pub fn check_respects_vtree(c: &Circuit, t: &Vtree, mode: Orientation) -> PropertyReport {
    for (id, g) in live_nodes(c) {
        match g {
            Gate::Lit(l) if t.leaf_of(l.var).is_none() => {
                return PropertyReport::violation(
                    Property::RespectsVtree,
                    Witness::gates(vec![id])
                        .with_vars(vec![l.var])
                        .with_message("literal variable is not a vtree leaf"),
                )
            }
            Gate::And([l, r])
                if minimal_respected(t, c.vars(*l), c.vars(*r), mode).is_err() => {
                    return PropertyReport::violation(
                        Property::RespectsVtree,
                        Witness::gates(vec![id]).with_message("conjunction respects no vtree node"),
                    );
                }
            _ => {}
        }
    }
    PropertyReport::pass(Property::RespectsVtree, Method::Syntactic)
}

pub fn check_simple(c: &Circuit) -> PropertyReport {
    let dec = check_decomposable(c);
    if !dec.holds {
        return dec;
    }
    let sat = c.satisfiable_nodes();
    for (id, g) in live_nodes(c) {
        if let Gate::Or(cs) = g {
            if let Some(ch) = cs.iter().find(|ch| c.gate(**ch).is_or()) {
                return PropertyReport::violation(
                    Property::Simple,
                    Witness::gates(vec![id, *ch]).with_message("disjunction feeds a disjunction"),
                );
            }
            if let Some(ch) = cs.iter().find(|ch| c.gate(**ch).as_const().is_some()) {
                return PropertyReport::violation(
                    Property::Simple,
                    Witness::gates(vec![id, *ch]).with_message("disjunction has a constant child"),
                );
            }
        }
        if !sat[id.index()] && g.as_const().is_none() {
            return PropertyReport::violation(
                Property::Simple,
                Witness::gates(vec![id]).with_message("unsatisfiable node is not the false constant"),
            );
        }
    }
    PropertyReport::pass(Property::Simple, Method::Syntactic)
}

/// A set of nodes of one circuit that must be pairwise disjoint, and, when
/// `cover` is set, must also jointly cover every assignment.
struct Group {
    gate: NodeId,
    members: Vec<NodeId>,
    cover: bool,
}

enum GroupFailure {
    Overlap {
        gate: NodeId,
        a: NodeId,
        b: NodeId,
        assignment: Assignment,
    },
    Uncovered {
        gate: NodeId,
        assignment: Assignment,
    },
}

/// Scans the blocks of `e` for the first group failure.
fn scan_groups<'a>(
    e: &mut Engine<'a>,
    groups: &[&Group],
    sampled: Option<&mut ChaCha8Rng>,
) -> Option<GroupFailure> {
    let mask = e.mask();
    let words = e.words();
    let mut rng = sampled;
    let blocks = if rng.is_some() { SAMPLE_BLOCKS } else { e.num_blocks() };
    let mut acc = vec![0u64; words];
    for b in 0..blocks {
        match rng.as_deref_mut() {
            Some(r) => e.load_random_block(r),
            None => e.load_exhaustive_block(b),
        }
        e.run();
        for g in groups {
            acc.fill(0);
            for &m in &g.members {
                let val = e.value(m);
                for w in 0..words {
                    let clash = acc[w] & val[w] & mask;
                    if clash != 0 {
                        let bit = clash.trailing_zeros();
                        let a = *g
                            .members
                            .iter()
                            .find(|o| (e.value(**o)[w] >> bit) & 1 == 1)
                            .unwrap();
                        return Some(GroupFailure::Overlap {
                            gate: g.gate,
                            a,
                            b: m,
                            assignment: e.assignment_at(w, bit),
                        });
                    }
                    acc[w] |= val[w];
                }
            }
            if g.cover {
                for (w, x) in acc.iter().enumerate() {
                    let hole = !x & mask;
                    if hole != 0 {
                        return Some(GroupFailure::Uncovered {
                            gate: g.gate,
                            assignment: e.assignment_at(w, hole.trailing_zeros()),
                        });
                    }
                }
            }
        }
    }
    None
}

/// Checks all groups, globally when the whole circuit is small enough and
/// gate by gate otherwise.
fn check_groups(c: &Circuit, groups: &[Group], cap: usize) -> (Option<GroupFailure>, Method) {
    if groups.is_empty() {
        return (None, Method::Exhaustive);
    }
    let root = c.root();
    let mentioned = c.vars(root).to_vec();
    let cap = cap.min(DEFAULT_TABLE_CAP);
    if mentioned.len() <= cap {
        let blocks = 1u64 << mentioned.len().saturating_sub(12);
        if blocks.saturating_mul(c.size() as u64) <= GLOBAL_BUDGET {
            let mut e = Engine::new(c, &[root], &mentioned, &Assignment::new()).expect("all variables ordered");
            let refs: Vec<&Group> = groups.iter().collect();
            return (scan_groups(&mut e, &refs, None), Method::Exhaustive);
        }
    }
    let mut method = Method::Exhaustive;
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    for g in groups {
        let mut vars = VarSet::new();
        for m in &g.members {
            vars.union_with(c.vars(*m));
        }
        let order = vars.to_vec();
        let mut e = Engine::new(c, &g.members, &order, &Assignment::new()).expect("all variables ordered");
        let failure = if order.len() <= cap {
            scan_groups(&mut e, &[g], None)
        } else {
            method = Method::Sampled;
            scan_groups(&mut e, &[g], Some(&mut rng))
        };
        if failure.is_some() {
            return (failure, method);
        }
    }
    (None, method)
}

fn failure_report(property: Property, f: GroupFailure, method: Method) -> PropertyReport {
    let w = match f {
        GroupFailure::Overlap { gate, a, b, assignment } => Witness::gates(vec![gate, a, b])
            .with_assignment(assignment)
            .with_message("two children are satisfied by the same assignment"),
        GroupFailure::Uncovered { gate, assignment } => Witness::gates(vec![gate])
            .with_assignment(assignment)
            .with_message("no prime is satisfied by the assignment"),
    };
    PropertyReport::violation(property, w).with_method(method)
}

/// Pairwise disjointness of the children of every disjunction, enumerated
/// over the disjunction's variables when there are at most `cap` of them
/// and sampled otherwise.
pub fn check_deterministic(c: &Circuit, cap: usize) -> PropertyReport {
    let groups: Vec<Group> = live_nodes(c)
        .filter_map(|(id, g)| match g {
            Gate::Or(cs) if cs.len() > 1 => Some(Group {
                gate: id,
                members: cs.clone(),
                cover: false,
            }),
            _ => None,
        })
        .collect();
    match check_groups(c, &groups, cap) {
        (None, m) => PropertyReport::pass(Property::Deterministic, m),
        (Some(f), m) => failure_report(Property::Deterministic, f, m),
    }
}

/// Where an SDD node lives in the vtree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Anchor {
    /// Constants fit anywhere.
    Any,
    At(VtreeId),
}

fn lowest_with_on_side(t: &Vtree, mut v: VtreeId, left: bool) -> Option<VtreeId> {
    while let Some(p) = t.parent(v) {
        let (l, r) = t.children(p).unwrap();
        if (left && l == v) || (!left && r == v) {
            return Some(p);
        }
        v = p;
    }
    None
}

fn join_anchor(t: &Vtree, a: Option<VtreeId>, b: Anchor) -> Option<VtreeId> {
    match (a, b) {
        (x, Anchor::Any) => x,
        (None, Anchor::At(v)) => Some(v),
        (Some(x), Anchor::At(v)) => Some(t.lca(x, v)),
    }
}

/// Syntactic SDD structure with respect to `t` plus the partition property
/// of the primes of every decision node.
pub fn check_sdd(c: &Circuit, t: &Vtree, cap: usize) -> PropertyReport {
    let prop = Property::StronglyDeterministicSdd;
    let fail = |gates: Vec<NodeId>, msg: &str| PropertyReport::violation(prop, Witness::gates(gates).with_message(msg));
    let live = c.reachable_from(&[c.root()]);
    let mut anchor: Vec<Option<Anchor>> = vec![None; c.len()];
    let mut groups = Vec::new();
    for (i, g) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let id = NodeId(i as u32);
        match g {
            Gate::Const(_) => anchor[i] = Some(Anchor::Any),
            Gate::Lit(l) => match t.leaf_of(l.var) {
                Some(v) => anchor[i] = Some(Anchor::At(v)),
                None => return fail(vec![id], "literal variable is not a vtree leaf"),
            },
            Gate::And(_) => {}
            Gate::Or(cs) => {
                let mut primes = Vec::new();
                let (mut p_anchor, mut s_anchor) = (None, None);
                for ch in cs {
                    let Gate::And([p, s]) = c.gate(*ch) else {
                        return fail(vec![id, *ch], "child of a decision node is not a (prime, sub) pair");
                    };
                    let (Some(pa), Some(sa)) = (anchor[p.index()], anchor[s.index()]) else {
                        return fail(vec![id, *ch], "prime or sub is not itself an SDD node");
                    };
                    p_anchor = join_anchor(t, p_anchor, pa);
                    s_anchor = join_anchor(t, s_anchor, sa);
                    primes.push(*p);
                }
                let w = match (p_anchor, s_anchor) {
                    (None, None) => None,
                    (Some(p), None) => lowest_with_on_side(t, p, true),
                    (None, Some(s)) => lowest_with_on_side(t, s, false),
                    (Some(p), Some(s)) => {
                        let w = t.lca(p, s);
                        match t.children(w) {
                            Some((l, r)) if t.is_ancestor_or_self(l, p) && t.is_ancestor_or_self(r, s) => Some(w),
                            _ => None,
                        }
                    }
                };
                anchor[i] = match (w, p_anchor, s_anchor) {
                    (Some(w), _, _) => Some(Anchor::At(w)),
                    (None, None, None) => Some(Anchor::Any),
                    _ => {
                        return fail(
                            vec![id],
                            "primes and subs do not sit in the left and right subtrees of one vtree node",
                        )
                    }
                };
                groups.push(Group {
                    gate: id,
                    members: primes,
                    cover: true,
                });
            }
        }
    }
    if anchor[c.root().index()].is_none() {
        return fail(vec![c.root()], "root is a bare conjunction");
    }
    let sat = c.satisfiable_nodes();
    for g in &groups {
        if let Some(p) = g.members.iter().find(|p| !sat[p.index()]) {
            return fail(vec![g.gate, *p], "a prime is unsatisfiable");
        }
    }
    match check_groups(c, &groups, cap) {
        (None, m) => PropertyReport::pass(prop, m),
        (Some(f), m) => failure_report(prop, f, m),
    }
}

/// Pairwise disjoint, each satisfiable, and jointly exhaustive over `over`.
pub fn check_partition(fs: &[(&Circuit, NodeId)], over: &VarSet, cap: usize) -> PropertyReport {
    family_check(fs, over, cap, Property::Partition)
}

/// Pairwise disjoint over `over` (an empty family is trivially disjoint).
pub fn check_disjoint(fs: &[(&Circuit, NodeId)], over: &VarSet, cap: usize) -> PropertyReport {
    if fs.is_empty() {
        return PropertyReport::pass(Property::Disjoint, Method::Syntactic);
    }
    family_check(fs, over, cap, Property::Disjoint)
}

fn family_check(fs: &[(&Circuit, NodeId)], over: &VarSet, cap: usize, prop: Property) -> PropertyReport {
    let partition = prop == Property::Partition;
    let order = over.to_vec();
    let mut engines = Vec::with_capacity(fs.len());
    for (c, n) in fs {
        match Engine::new(c, &[*n], &order, &Assignment::new()) {
            Ok(e) => engines.push(e),
            Err(err) => {
                return PropertyReport::violation(
                    prop,
                    Witness::gates(vec![*n]).with_message(format!("cannot evaluate over the given variables: {}", err)),
                )
            }
        }
    }
    if engines.is_empty() {
        return PropertyReport::violation(prop, Witness::default().with_message("a partition needs at least one member"));
    }
    let exhaustive = order.len() <= cap.min(DEFAULT_TABLE_CAP);
    let method = if exhaustive { Method::Exhaustive } else { Method::Sampled };
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let blocks = if exhaustive { engines[0].num_blocks() } else { SAMPLE_BLOCKS };
    let words = engines[0].words();
    let mask = engines[0].mask();
    let mut seen = vec![false; fs.len()];
    for b in 0..blocks {
        if exhaustive {
            engines.iter_mut().for_each(|e| e.load_exhaustive_block(b));
        } else {
            engines[0].load_random_block(&mut rng);
            let (first, rest) = engines.split_at_mut(1);
            rest.iter_mut().for_each(|e| e.copy_inputs_from(&first[0]));
        }
        engines.iter_mut().for_each(|e| e.run());
        let mut acc = vec![0u64; words];
        for (k, e) in engines.iter().enumerate() {
            let val = e.value(fs[k].1);
            for w in 0..words {
                let clash = acc[w] & val[w] & mask;
                if clash != 0 {
                    let bit = clash.trailing_zeros();
                    let j = (0..k).find(|j| (engines[*j].value(fs[*j].1)[w] >> bit) & 1 == 1).unwrap();
                    return PropertyReport::violation(
                        prop,
                        Witness::gates(vec![fs[j].1, fs[k].1])
                            .with_assignment(e.assignment_at(w, bit))
                            .with_message(format!("members {} and {} overlap", j, k)),
                    )
                    .with_method(method);
                }
                acc[w] |= val[w];
                seen[k] |= val[w] & mask != 0;
            }
        }
        for (w, x) in acc.iter().enumerate().filter(|_| partition) {
            let hole = !x & mask;
            if hole != 0 {
                return PropertyReport::violation(
                    prop,
                    Witness::default()
                        .with_assignment(engines[0].assignment_at(w, hole.trailing_zeros()))
                        .with_message("no member is satisfied by the assignment"),
                )
                .with_method(method);
            }
        }
    }
    if let Some(k) = seen.iter().position(|s| !s).filter(|_| partition) {
        let (c, n) = fs[k];
        let provably_empty = exhaustive || c.is_satisfiable_dnnf(n).map(|s| !s).unwrap_or(false);
        if provably_empty {
            return PropertyReport::violation(
                prop,
                Witness::gates(vec![n]).with_message(format!("member {} is unsatisfiable", k)),
            )
            .with_method(method);
        }
    }
    PropertyReport::pass(prop, method)
}

/// Replays a failing report against the circuit and confirms that the
/// witness exhibits the violation.
pub fn replay_witness(c: &Circuit, t: Option<&Vtree>, report: &PropertyReport) -> bool {
    let Some(w) = &report.witness else {
        return false;
    };
    let eval = |n: NodeId| w.assignment.as_ref().and_then(|a| c.evaluate(n, a).ok());
    match report.property {
        Property::Decomposable => match (w.gates.first().map(|g| c.gate(*g)), w.vars.first()) {
            (Some(Gate::And([l, r])), Some(v)) => c.vars(*l).contains(*v) && c.vars(*r).contains(*v),
            _ => false,
        },
        Property::Deterministic => match w.gates.as_slice() {
            [_, a, b] => eval(*a) == Some(true) && eval(*b) == Some(true),
            _ => false,
        },
        Property::Smooth => match w.gates.as_slice() {
            [_, a, b] => c.vars(*a) != c.vars(*b),
            _ => false,
        },
        Property::RespectsVtree => match (t, w.gates.first()) {
            (Some(t), Some(g)) => match c.gate(*g) {
                Gate::And([l, r]) => {
                    minimal_respected(t, c.vars(*l), c.vars(*r), Orientation::SddOriented).is_err()
                }
                Gate::Lit(l) => t.leaf_of(l.var).is_none(),
                _ => false,
            },
            _ => false,
        },
        Property::Simple => match w.gates.as_slice() {
            [o, ch] => c.gate(*o).is_or() && (c.gate(*ch).is_or() || c.gate(*ch).as_const().is_some()),
            [g] => matches!(c.is_satisfiable_dnnf(*g), Ok(false)),
            _ => false,
        },
        Property::StronglyDeterministicSdd | Property::Partition | Property::Disjoint => match (w.gates.as_slice(), &w.assignment) {
            ([_, a, b], Some(_)) | ([a, b], Some(_)) => eval(*a) == Some(true) && eval(*b) == Some(true),
            ([g], Some(_)) => match c.gate(*g) {
                Gate::Or(cs) => cs.iter().all(|ch| match c.gate(*ch) {
                    Gate::And([p, _]) => eval(*p) == Some(false),
                    _ => false,
                }),
                _ => false,
            },
            _ => !w.message.is_empty(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, Lit};

    fn build(f: impl FnOnce(&mut CircuitBuilder) -> NodeId) -> Circuit {
        let mut b = CircuitBuilder::new();
        let r = f(&mut b);
        b.finish(r, VarSet::new(), VarSet::new())
    }

    #[test]
    fn decomposable_examples() {
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            b.and(x, y)
        });
        assert!(check_decomposable(&c).holds);
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            let o = b.or(vec![x, y]);
            b.and(x, o)
        });
        let r = check_decomposable(&c);
        assert!(!r.holds);
        assert_eq!(r.witness.as_ref().unwrap().vars, vec![Var(1)]);
        assert!(replay_witness(&c, None, &r));
    }

    #[test]
    fn deterministic_examples() {
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            let y = b.lit(Lit::pos(2));
            let a1 = b.and(x, y);
            let a2 = b.and(nx, y);
            b.or(vec![a1, a2])
        });
        let r = check_deterministic(&c, 12);
        assert!(r.holds && r.method == Method::Exhaustive);
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            b.or(vec![x, y])
        });
        let r = check_deterministic(&c, 12);
        assert!(!r.holds);
        let a = r.witness.as_ref().unwrap().assignment.clone().unwrap();
        assert_eq!(a.get(Var(1)), Some(true));
        assert_eq!(a.get(Var(2)), Some(true));
        assert!(replay_witness(&c, None, &r));
        let r = check_deterministic(&c, 0);
        assert!(!r.holds);
        assert_eq!(r.method, Method::Sampled);
    }

    #[test]
    fn respects_examples() {
        let t = Vtree::parse("(1 2)").unwrap();
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            b.and(x, y)
        });
        assert!(check_respects_vtree(&c, &t, Orientation::SddOriented).holds);
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            b.and(y, x)
        });
        let r = check_respects_vtree(&c, &t, Orientation::SddOriented);
        assert!(!r.holds);
        assert!(replay_witness(&c, Some(&t), &r));
        assert!(check_respects_vtree(&c, &t, Orientation::DdnnfUnoriented).holds);
    }

    #[test]
    fn smooth_examples() {
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            let y = b.lit(Lit::pos(2));
            let a1 = b.and(x, y);
            let a2 = b.and(nx, y);
            b.or(vec![a1, a2])
        });
        assert!(check_smooth(&c).holds);
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            let a = b.and(x, y);
            b.or(vec![x, a])
        });
        let r = check_smooth(&c);
        assert!(!r.holds);
        assert!(replay_witness(&c, None, &r));
    }

    #[test]
    fn simple_examples() {
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            let z = b.lit(Lit::pos(3));
            let inner = b.or(vec![x, y]);
            b.or(vec![inner, z])
        });
        assert!(!check_simple(&c).holds);
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let t = b.constant(true);
            b.or(vec![x, t])
        });
        let r = check_simple(&c);
        assert!(!r.holds);
        assert!(replay_witness(&c, None, &r));
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let f = b.constant(false);
            b.and(x, f)
        });
        let r = check_simple(&c);
        assert!(!r.holds);
        assert!(replay_witness(&c, None, &r));
    }

    #[test]
    fn sdd_examples() {
        let t = Vtree::parse("(1 2)").unwrap();
        let lit = build(|b| b.lit(Lit::pos(2)));
        assert!(check_sdd(&lit, &t, 12).holds);

        // seven-node SDD of x1 ∧ x2
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            let y = b.lit(Lit::pos(2));
            let f = b.constant(false);
            let e1 = b.and(x, y);
            let e2 = b.and(nx, f);
            b.or(vec![e1, e2])
        });
        assert_eq!(c.size(), 7);
        assert!(check_sdd(&c, &t, 12).holds);

        // primes x1∧x2 and ¬x1∧x2 are disjoint but not exhaustive
        let t3 = Vtree::parse("((1 2) 3)").unwrap();
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            let y = b.lit(Lit::pos(2));
            let z = b.lit(Lit::pos(3));
            let f = b.constant(false);
            let t = b.constant(true);
            let a1 = b.and(x, y);
            let a2 = b.and(nx, f);
            let p1 = b.or(vec![a1, a2]);
            let a3 = b.and(nx, y);
            let a4 = b.and(x, f);
            let p2 = b.or(vec![a3, a4]);
            let e1 = b.and(p1, t);
            let e2 = b.and(p2, z);
            b.or(vec![e1, e2])
        });
        let r = check_sdd(&c, &t3, 12);
        assert!(!r.holds);
        let a = r.witness.as_ref().unwrap().assignment.clone().unwrap();
        assert_eq!(a.get(Var(2)), Some(false));
        assert!(replay_witness(&c, Some(&t3), &r));
    }

    #[test]
    fn sdd_partition_failure_is_localized() {
        let t = Vtree::parse("(1 2)").unwrap();
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            let e = b.and(x, y);
            b.or(vec![e])
        });
        let r = check_sdd(&c, &t, 12);
        assert!(!r.holds);
        assert!(r.witness.as_ref().unwrap().assignment.is_some());
        assert!(replay_witness(&c, Some(&t), &r));
    }

    #[test]
    fn partition_examples() {
        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let nx = b.lit(Lit::neg(1));
            b.or(vec![x, nx])
        });
        let ch = c.children(c.root()).to_vec();
        let r = check_partition(&[(&c, ch[0]), (&c, ch[1])], &VarSet::singleton(Var(1)), 12);
        assert!(r.holds);

        let c = build(|b| {
            let x = b.lit(Lit::pos(1));
            let y = b.lit(Lit::pos(2));
            let nx = b.lit(Lit::neg(1));
            let a = b.and(x, y);
            b.or(vec![a, nx])
        });
        let ch = c.children(c.root()).to_vec();
        let over: VarSet = [Var(1), Var(2)].into_iter().collect();
        let r = check_partition(&[(&c, ch[0]), (&c, ch[1])], &over, 12);
        assert!(!r.holds);
        let a = r.witness.unwrap().assignment.unwrap();
        assert_eq!((a.get(Var(1)), a.get(Var(2))), (Some(true), Some(false)));
    }
}
