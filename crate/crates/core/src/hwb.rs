//! The hidden weighted bit function `HWB_n(x) = x_{‖x‖}` (0 when no input
//! is set), polynomial structured d-DNNFs for it and its complement over a
//! vtree on which every SDD is exponential, and a subfunction-count
//! experiment exhibiting the gap.
//!
//! The vtree has a root whose left subtree is right-linear over
//! `X_ℓ = {x_1, …, x_{6n/10}}` and whose right subtree is right-linear over
//! `X_r = {x_{6n/10+1}, …, x_n}`. `HWB_n` is the disjoint disjunction of
//! the terms `h_{i,j} = f_{i,j}(X_ℓ) ∧ g_{i,j}(X_r)`, where `f_{i,j}` says
//! "exactly `j` ones in `X_ℓ` (and `x_i = 1` if `x_i ∈ X_ℓ`)" and `g_{i,j}`
//! says "exactly `i − j` ones in `X_r` (and `x_i = 1` if `x_i ∈ X_r`)".
//! The complement uses the same split for `E_k ∧ ¬x_k` and `E_0`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::{Assignment, Circuit, CircuitBuilder, Lit, NodeId, Var};
use crate::error::{Error, Result};
use crate::oracle::{count_subfunctions, TruthTable, DEFAULT_TABLE_CAP};
use crate::varset::VarSet;
use crate::vtree::{Shape, Vtree};

/// `x_{‖x‖}`, and 0 when every input is 0. `x` must assign `x_1..x_n`.
pub fn hwb_value(x: &Assignment, n: u32) -> Result<bool> {
    let mut weight = 0u32;
    for i in 1..=n {
        match x.get(Var(i)) {
            Some(b) => weight += b as u32,
            None => return Err(Error::Input(format!("x{} is unassigned", i))),
        }
    }
    Ok(weight > 0 && x.get(Var(weight)) == Some(true))
}

/// Truth table of `HWB_n` over `x_1..x_n` (variable `x_k` is bit `k − 1`).
pub fn hwb_table(n: u32) -> Result<TruthTable> {
    let vars: Vec<Var> = (1..=n).map(Var).collect();
    TruthTable::from_fn(&vars, |i| {
        let w = i.count_ones();
        w > 0 && i >> (w - 1) & 1 == 1
    })
}

/// One disjoint term `f ∧ g` of the circuit for `HWB_n` or its complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HwbTerm {
    /// Total weight `i` (or `k` for the complement; 0 for the all-zero
    /// term).
    pub i: u32,
    /// Weight inside `X_ℓ`.
    pub j: u32,
    /// The conjunction node in its circuit.
    pub node: NodeId,
}

#[derive(Clone, Debug)]
pub struct HwbInstance {
    pub n: u32,
    pub vtree: Vtree,
    pub x_left: Vec<Var>,
    pub x_right: Vec<Var>,
    pub d: Circuit,
    pub dbar: Circuit,
    /// The terms `h_{i,j}` of `d`, one child of its root each.
    pub d_terms: Vec<HwbTerm>,
    /// The terms of `dbar`.
    pub dbar_terms: Vec<HwbTerm>,
}

/// Requirement on one designated variable in a counting lattice.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Pin {
    None,
    /// The variable at this position must take this value.
    At(usize, bool),
}

/// Counting lattice over a right-linear block of variables: node `(k, c)`
/// says "exactly `c` ones among `vars[k..]`", with an optional pinned
/// variable. Nodes are shared through hash-consing in the builder and a
/// memo, so unpinned suffixes are shared by every pin.
struct Lattice<'a> {
    vars: &'a [Var],
    memo: HashMap<(usize, u32, Pin), Option<NodeId>>,
}

impl Lattice<'_> {
    /// `None` when the function is unsatisfiable.
    fn count(&mut self, b: &mut CircuitBuilder, k: usize, c: u32, pin: Pin) -> Option<NodeId> {
        let pin = match pin {
            Pin::At(p, _) if p < k => Pin::None,
            p => p,
        };
        let rest = (self.vars.len() - k) as u32;
        if c > rest {
            return None;
        }
        if let Some(&r) = self.memo.get(&(k, c, pin)) {
            return r;
        }
        let x = self.vars[k];
        let allowed = |v: bool| !matches!(pin, Pin::At(p, want) if p == k && want != v);
        let out = if k + 1 == self.vars.len() {
            match c {
                0 if allowed(false) => Some(b.lit(Lit::new(x, false))),
                1 if allowed(true) => Some(b.lit(Lit::new(x, true))),
                _ => None,
            }
        } else {
            let one = if c > 0 && allowed(true) {
                self.count(b, k + 1, c - 1, pin).map(|s| {
                    let l = b.lit(Lit::new(x, true));
                    b.and(l, s)
                })
            } else {
                None
            };
            let zero = if allowed(false) {
                self.count(b, k + 1, c, pin).map(|s| {
                    let l = b.lit(Lit::new(x, false));
                    b.and(l, s)
                })
            } else {
                None
            };
            match (one, zero) {
                (Some(a), Some(z)) => Some(b.or(vec![a, z])),
                (a, z) => a.or(z),
            }
        };
        self.memo.insert((k, c, pin), out);
        out
    }
}

/// Builds the disjoint disjunction of `left(i, j) ∧ right(i, j)` over all
/// weights. `pin_value` is the value the designated variable `x_i` must
/// take; `with_zero` adds the all-zero term.
fn build_side(
    n: u32,
    x_left: &[Var],
    x_right: &[Var],
    pin_value: bool,
    with_zero: bool,
) -> (Circuit, Vec<HwbTerm>) {
    let nl = x_left.len() as u32;
    let nr = x_right.len() as u32;
    let mut b = CircuitBuilder::new();
    let mut left = Lattice {
        vars: x_left,
        memo: HashMap::new(),
    };
    let mut right = Lattice {
        vars: x_right,
        memo: HashMap::new(),
    };
    let pin_for = |i: u32, block: &[Var]| match block.iter().position(|v| v.0 == i) {
        Some(p) => Pin::At(p, pin_value),
        None => Pin::None,
    };
    let mut terms = Vec::new();
    let weights = if with_zero { 0..=n } else { 1..=n };
    for i in weights {
        // j ranges over max(0, i − |X_r|) ..= min(i, |X_ℓ|)
        for j in i.saturating_sub(nr)..=i.min(nl) {
            let (pl, pr) = if i == 0 {
                (Pin::None, Pin::None)
            } else {
                (pin_for(i, x_left), pin_for(i, x_right))
            };
            let (Some(f), Some(g)) = (left.count(&mut b, 0, j, pl), right.count(&mut b, 0, i - j, pr)) else {
                continue;
            };
            let node = b.and(f, g);
            terms.push(HwbTerm { i, j, node });
        }
    }
    let nodes: Vec<NodeId> = terms.iter().map(|t| t.node).collect();
    let root = b.or(nodes);
    let universe: VarSet = (1..=n).map(Var).collect();
    let (c, map) = b.finish_with_map(root, universe, VarSet::new());
    for t in &mut terms {
        t.node = map[t.node.index()].expect("terms are children of the root");
    }
    (c, terms)
}

/// The vtree, the circuit for `HWB_n` and the circuit for its complement.
/// `n` must be a positive multiple of 10.
pub fn build_hwb(n: u32) -> Result<HwbInstance> {
    if n == 0 || !n.is_multiple_of(10) {
        return Err(Error::Input(format!("HWB size must be a positive multiple of 10, got {}", n)));
    }
    let nl = 6 * n / 10;
    let x_left: Vec<Var> = (1..=nl).map(Var).collect();
    let x_right: Vec<Var> = (nl + 1..=n).map(Var).collect();
    let vtree = Vtree::from_shape(&Shape::node(Shape::right_linear(&x_left), Shape::right_linear(&x_right)))?;
    let (d, d_terms) = build_side(n, &x_left, &x_right, true, false);
    let (dbar, dbar_terms) = build_side(n, &x_left, &x_right, false, true);
    Ok(HwbInstance {
        n,
        vtree,
        x_left,
        x_right,
        d,
        dbar,
        d_terms,
        dbar_terms,
    })
}

/// `2^{n/5 − 1}`: the lower bound on the number of subfunctions obtained
/// by fixing the `6n/10` variables of `X_ℓ`.
pub fn subfunction_bound(n: u32) -> u64 {
    1u64 << (n / 5).saturating_sub(1)
}

/// One row of the separation experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub n: u32,
    pub size_d: usize,
    pub size_dbar: usize,
    /// Distinct subfunctions after fixing the chosen set; `None` when the
    /// truth table would exceed the cap.
    pub subfunctions: Option<usize>,
    pub bound: u64,
    pub note: String,
}

/// Measures circuit sizes and subfunction counts for each `n`. The fixed
/// set defaults to `X_ℓ`; `fixed` overrides it with a list of variable
/// indices (each `≤ n`).
pub fn separation_experiment(n_values: &[u32], fixed: Option<&[u32]>, cap: usize) -> Result<Vec<SeparationRow>> {
    let mut rows = Vec::new();
    for &n in n_values {
        let inst = build_hwb(n)?;
        let fixed_vars: Vec<Var> = match fixed {
            Some(ids) => {
                if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > n) {
                    return Err(Error::Input(format!("fixed variable x{} is not among x1..x{}", bad, n)));
                }
                ids.iter().map(|&i| Var(i)).collect()
            }
            None => inst.x_left.clone(),
        };
        let limit = cap.min(DEFAULT_TABLE_CAP);
        let (subfunctions, note) = if n as usize > limit {
            (None, format!("skipped: {} variables exceed the cap of {}", n, limit))
        } else {
            let table = hwb_table(n)?;
            (Some(count_subfunctions(&table, &fixed_vars)?), String::new())
        };
        rows.push(SeparationRow {
            n,
            size_d: inst.d.size(),
            size_dbar: inst.dbar.size(),
            subfunctions,
            bound: subfunction_bound(n),
            note,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// CSV with a header line; the subfunction column is empty for skipped
/// rows.
pub fn separation_csv(rows: &[SeparationRow]) -> String {
    let mut s = String::from("n,size_d,size_dbar,subfunctions,bound,note\n");
    for r in rows {
        let sub = r.subfunctions.map(|c| c.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{},{},{}", r.n, r.size_d, r.size_dbar, sub, r.bound, r.note).unwrap();
    }
    s
}
