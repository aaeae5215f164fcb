//! Random test instances: vtrees, functions and structured d-DNNFs for a
//! function and its complement.
//!
//! Circuits are compiled from truth tables. At every vtree node the
//! function is split into disjoint rectangles `A × g` (left assignments
//! `A` that leave residual `g` on the right), which are then split further
//! at random. The result is a deterministic, decomposable circuit whose
//! conjunctions respect the vtree, optionally in either orientation.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, CircuitBuilder, Lit, NodeId, Var};
use crate::error::{Error, Result};
use crate::oracle::{minterm_complement, TruthTable, DEFAULT_TABLE_CAP};
use crate::varset::VarSet;
use crate::vtree::{Shape, VNode, Vtree, VtreeId};

/// Random binary tree over `vars`: the (shuffled) list is split at a
/// uniformly chosen point at every level.
pub fn random_vtree(vars: &[Var], rng: &mut impl Rng) -> Result<Vtree> {
    if vars.is_empty() {
        return Err(Error::Input("a vtree needs at least one variable".into()));
    }
    let mut vs = vars.to_vec();
    vs.shuffle(rng);
    fn build(vs: &[Var], rng: &mut impl Rng) -> Shape {
        if vs.len() == 1 {
            return Shape::Leaf(vs[0]);
        }
        let k = rng.gen_range(1..vs.len());
        Shape::node(build(&vs[..k], rng), build(&vs[k..], rng))
    }
    Vtree::from_shape(&build(&vs, rng))
}

/// Random function over `vars` with each model kept with probability
/// `density`.
pub fn random_function(vars: &[Var], density: f64, rng: &mut impl Rng) -> Result<TruthTable> {
    let bits: Vec<bool> = (0..1u64 << vars.len()).map(|_| rng.gen_bool(density)).collect();
    TruthTable::from_fn(vars, |i| bits[i as usize])
}

/// How [`compile`] shapes its output.
#[derive(Clone, Debug)]
pub struct CompileOptions {
    /// Probability of splitting a rectangle's left set in two.
    pub split_rows: f64,
    /// Probability of splitting a rectangle's residual in two.
    pub split_residual: f64,
    /// Probability of putting the right-hand factor first in a conjunction.
    pub flip: f64,
    /// Emit full partitions (including the rectangle with a false
    /// residual) and keep single-element disjunctions, so that the output
    /// is an SDD when nothing is split or flipped.
    pub sdd: bool,
    pub seed: u64,
}

impl CompileOptions {
    /// Canonical output: one element per distinct residual, left factor
    /// first. This is a compressed SDD.
    pub fn canonical() -> Self {
        CompileOptions {
            split_rows: 0.0,
            split_residual: 0.0,
            flip: 0.0,
            sdd: true,
            seed: 0,
        }
    }

    pub fn random(seed: u64) -> Self {
        CompileOptions {
            split_rows: 0.3,
            split_residual: 0.3,
            flip: 0.5,
            sdd: false,
            seed,
        }
    }
}

type Bits = Vec<u64>;

fn bits_get(b: &[u64], i: usize) -> bool {
    b[i >> 6] >> (i & 63) & 1 == 1
}

fn bits_set(b: &mut [u64], i: usize) {
    b[i >> 6] |= 1 << (i & 63);
}

fn bits_new(len: usize) -> Bits {
    vec![0; len.div_ceil(64)]
}

struct Compiler<'a> {
    t: &'a Vtree,
    b: CircuitBuilder,
    rng: ChaCha8Rng,
    opts: CompileOptions,
    memo: HashMap<(VtreeId, Bits), NodeId>,
    /// Sorted variables of every vtree node.
    vars: Vec<Vec<Var>>,
}

impl Compiler<'_> {
    /// `f` is a table over `self.vars[v]` (variable k takes bit k).
    fn compile(&mut self, v: VtreeId, f: Bits) -> NodeId {
        let n = self.vars[v.index()].len();
        let len = 1usize << n;
        let ones = (0..len).filter(|&i| bits_get(&f, i)).count();
        if ones == 0 {
            return self.b.constant(false);
        }
        if ones == len {
            return self.b.constant(true);
        }
        if let Some(&id) = self.memo.get(&(v, f.clone())) {
            return id;
        }
        let id = match self.t.node(v) {
            VNode::Leaf(x) => self.b.lit(Lit::new(x, bits_get(&f, 1))),
            VNode::Stub => unreachable!("stub vtrees are rejected up front"),
            VNode::Internal(l, r) => self.decompose(v, l, r, &f),
        };
        self.memo.insert((v, f), id);
        id
    }

    fn decompose(&mut self, v: VtreeId, l: VtreeId, r: VtreeId, f: &[u64]) -> NodeId {
        let vv = self.vars[v.index()].clone();
        let lv = &self.vars[l.index()];
        let rv = &self.vars[r.index()];
        let (nl, nr) = (lv.len(), rv.len());
        // positions of the left and right variables inside v's order
        let lpos: Vec<usize> = lv.iter().map(|x| vv.binary_search(x).unwrap()).collect();
        let rpos: Vec<usize> = rv.iter().map(|x| vv.binary_search(x).unwrap()).collect();
        let join = |li: usize, ri: usize| {
            let mut i = 0;
            for (k, p) in lpos.iter().enumerate() {
                i |= (li >> k & 1) << p;
            }
            for (k, p) in rpos.iter().enumerate() {
                i |= (ri >> k & 1) << p;
            }
            i
        };
        // residual of every left assignment, grouped in first-seen order
        let mut groups: Vec<(Bits, Vec<usize>)> = Vec::new();
        let mut index: HashMap<Bits, usize> = HashMap::new();
        for li in 0..1usize << nl {
            let mut g = bits_new(1 << nr);
            for ri in 0..1usize << nr {
                if bits_get(f, join(li, ri)) {
                    bits_set(&mut g, ri);
                }
            }
            if !self.opts.sdd && g.iter().all(|w| *w == 0) {
                continue;
            }
            match index.get(&g) {
                Some(&k) => groups[k].1.push(li),
                None => {
                    index.insert(g.clone(), groups.len());
                    groups.push((g, vec![li]));
                }
            }
        }
        let mut rects: Vec<(Vec<usize>, Bits)> = Vec::new();
        for (g, rows) in groups {
            let row_parts = self.split_rows(rows);
            let g_parts = self.split_residual(g, 1 << nr);
            for rp in &row_parts {
                for gp in &g_parts {
                    rects.push((rp.clone(), gp.clone()));
                }
            }
        }
        rects.shuffle(&mut self.rng);
        let mut elems = Vec::with_capacity(rects.len());
        for (rows, g) in rects {
            let mut a = bits_new(1 << nl);
            for li in rows {
                bits_set(&mut a, li);
            }
            let prime = self.compile(l, a);
            let sub = self.compile(r, g);
            let e = if self.rng.gen_bool(self.opts.flip) {
                self.b.and(sub, prime)
            } else {
                self.b.and(prime, sub)
            };
            elems.push(e);
        }
        if elems.len() == 1 && !self.opts.sdd {
            elems[0]
        } else {
            self.b.or(elems)
        }
    }

    fn split_rows(&mut self, rows: Vec<usize>) -> Vec<Vec<usize>> {
        if rows.len() < 2 || !self.rng.gen_bool(self.opts.split_rows) {
            return vec![rows];
        }
        let mut rows = rows;
        rows.shuffle(&mut self.rng);
        let k = self.rng.gen_range(1..rows.len());
        let rest = rows.split_off(k);
        vec![rows, rest]
    }

    fn split_residual(&mut self, g: Bits, len: usize) -> Vec<Bits> {
        let ones: Vec<usize> = (0..len).filter(|&i| bits_get(&g, i)).collect();
        if ones.len() < 2 || !self.rng.gen_bool(self.opts.split_residual) {
            return vec![g];
        }
        let mut a = bits_new(len);
        let mut b = bits_new(len);
        let pivot = self.rng.gen_range(1..ones.len());
        let mut shuffled = ones;
        shuffled.shuffle(&mut self.rng);
        for (k, i) in shuffled.into_iter().enumerate() {
            bits_set(if k < pivot { &mut a } else { &mut b }, i);
        }
        vec![a, b]
    }
}

/// Compiles a truth table into a deterministic, decomposable circuit whose
/// conjunctions respect `t`. The table's variables must be a subset of the
/// vtree's; variables of the vtree not in the table are don't-cares.
pub fn compile(f: &TruthTable, t: &Vtree, opts: &CompileOptions) -> Result<Circuit> {
    if t.has_stubs() {
        return Err(Error::Input("compilation needs a vtree without stubs".into()));
    }
    let fv: VarSet = f.order().iter().copied().collect();
    if !fv.is_subset(t.variables()) {
        return Err(Error::Input("function mentions variables missing from the vtree".into()));
    }
    let all = t.variables().to_vec();
    if all.len() > DEFAULT_TABLE_CAP {
        return Err(Error::CapExceeded {
            vars: all.len(),
            cap: DEFAULT_TABLE_CAP,
        });
    }
    let pos: Vec<usize> = f.order().iter().map(|x| all.binary_search(x).unwrap()).collect();
    let mut bits = bits_new(1 << all.len());
    for i in 0..1usize << all.len() {
        let mut j = 0u64;
        for (k, p) in pos.iter().enumerate() {
            j |= ((i >> p & 1) as u64) << k;
        }
        if f.get(j) {
            bits_set(&mut bits, i);
        }
    }
    let vars = t.ids().map(|v| t.vars(v).to_vec()).collect();
    let mut c = Compiler {
        t,
        b: CircuitBuilder::new(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        opts: opts.clone(),
        memo: HashMap::new(),
        vars,
    };
    let root = c.compile(t.root(), bits);
    Ok(c.b.finish(root, t.variables().clone(), VarSet::new()))
}

/// A function and its complement as structured d-DNNFs over one vtree.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub d: Circuit,
    pub dbar: Circuit,
    pub t: Vtree,
}

/// Random instance over variables `1..=n`: random vtree, random function of
/// the given density, both sides compiled with independent random splits.
pub fn random_instance(n: u32, density: f64, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<Var> = (1..=n).map(Var).collect();
    let t = random_vtree(&vars, &mut rng)?;
    let f = random_function(&vars, density, &mut rng)?;
    let not_f = TruthTable::from_fn(&vars, |i| !f.get(i))?;
    let d = compile(&f, &t, &CompileOptions::random(rng.gen()))?;
    let dbar = compile(&not_f, &t, &CompileOptions::random(rng.gen()))?;
    Ok(Instance {
        name: format!("random-n{}-s{}", n, seed),
        d,
        dbar,
        t,
    })
}

/// `count` random instances per size, with densities cycling through
/// sparse, balanced and dense functions.
pub fn random_corpus(sizes: &[u32], count: usize, seed: u64) -> Result<Vec<Instance>> {
    const DENSITIES: [f64; 3] = [0.2, 0.5, 0.8];
    let mut out = Vec::new();
    for &n in sizes {
        for k in 0..count {
            let s = seed.wrapping_mul(1_000_003).wrapping_add(n as u64 * 10_007 + k as u64);
            out.push(random_instance(n, DENSITIES[k % DENSITIES.len()], s)?);
        }
    }
    Ok(out)
}

/// Random instance whose second circuit is the disjunction of the
/// falsifying minterms of the first (exponential, so meant for small `n`).
pub fn minterm_instance(n: u32, density: f64, seed: u64) -> Result<Instance> {
    let mut inst = random_instance(n, density, seed)?;
    inst.dbar = minterm_complement(&inst.d, &inst.t)?;
    inst.name = format!("minterm-n{}-s{}", n, seed);
    Ok(inst)
}

/// `count` minterm-partner instances for every `(n, count)` pair, with
/// densities cycling through sparse, balanced and dense functions.
pub fn minterm_corpus(plan: &[(u32, usize)], seed: u64) -> Result<Vec<Instance>> {
    const DENSITIES: [f64; 3] = [0.3, 0.5, 0.7];
    let mut out = Vec::new();
    for &(n, count) in plan {
        for k in 0..count {
            let s = seed.wrapping_mul(1_000_003).wrapping_add(n as u64 * 10_007 + k as u64);
            out.push(minterm_instance(n, DENSITIES[k % DENSITIES.len()], s)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{complementary, equivalent, truth_table_at};
    use crate::validators::{check_decomposable, check_deterministic, check_respects_vtree, check_sdd};
    use crate::vtree::Orientation;

    #[test]
    fn compiled_circuits_are_structured_and_exact() {
        for seed in 0..20 {
            let inst = random_instance(6, 0.5, seed).unwrap();
            for c in [&inst.d, &inst.dbar] {
                assert!(check_decomposable(c).holds);
                assert!(check_deterministic(c, 20).holds);
                assert!(check_respects_vtree(c, &inst.t, Orientation::DdnnfUnoriented).holds);
            }
            assert!(complementary(&inst.d, &inst.dbar, 20).unwrap().equivalent);
        }
    }

    #[test]
    fn canonical_compilation_is_an_sdd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vars: Vec<Var> = (1..=5).map(Var).collect();
        for _ in 0..10 {
            let t = random_vtree(&vars, &mut rng).unwrap();
            let f = random_function(&vars, 0.4, &mut rng).unwrap();
            let c = compile(&f, &t, &CompileOptions::canonical()).unwrap();
            let r = check_sdd(&c, &t, 20);
            assert!(r.holds, "{} {:?}", t, r);
            let g = truth_table_at(&c, c.root(), &vars, 20).unwrap();
            assert_eq!(g.to_bit_string(), f.to_bit_string());
        }
    }

    #[test]
    fn partial_tables_and_constants() {
        let t = Vtree::parse("((1 2) 3)").unwrap();
        let f = TruthTable::from_fn(&[Var(2)], |i| i == 1).unwrap();
        let c = compile(&f, &t, &CompileOptions::random(9)).unwrap();
        let mut b = CircuitBuilder::new();
        let x = b.lit(Lit::pos(2));
        let want = b.finish(x, VarSet::new(), VarSet::new());
        assert!(equivalent(&c, &want, &VarSet::new()).unwrap().equivalent);
        let top = TruthTable::from_fn(&[Var(1)], |_| true).unwrap();
        let c = compile(&top, &t, &CompileOptions::canonical()).unwrap();
        assert_eq!(c.gate(c.root()).as_const(), Some(true));
    }

    #[test]
    fn corpus_is_reproducible() {
        let a = random_corpus(&[4, 5], 3, 11).unwrap();
        let b = random_corpus(&[4, 5], 3, 11).unwrap();
        assert_eq!(a.len(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.d, y.d);
            assert_eq!(x.t, y.t);
        }
    }
}
