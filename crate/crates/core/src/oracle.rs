//! Brute-force semantic ground truth: bit-parallel evaluation, truth
//! tables, model counting, equivalence, subfunction counting and the
//! minterm complement used to build test corpora.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Assignment, Circuit, CircuitBuilder, Gate, Lit, NodeId, Var};
use crate::error::{Error, Result};
use crate::validators::Method;
use crate::varset::VarSet;
use crate::vtree::{VNode, Vtree, VtreeId};

/// Largest variable count for table-based operations.
pub const DEFAULT_TABLE_CAP: usize = 22;

/// Assignments handled per evaluation pass (64 words of 64 bits).
const BLOCK_WORDS_LOG: usize = 6;
const BLOCK_BITS_LOG: usize = BLOCK_WORDS_LOG + 6;

const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Evaluates selected nodes of a circuit on many assignments at once.
/// Variable `order[k]` takes bit `k` of the assignment index; variables in
/// `fixed` take a constant value.
pub(crate) struct Engine<'a> {
    c: &'a Circuit,
    order: Vec<Var>,
    fixed: Assignment,
    var_slot: HashMap<Var, usize>,
    nodes: Vec<NodeId>,
    slot: Vec<u32>,
    words: usize,
    mask: u64,
    inputs: Vec<u64>,
    values: Vec<u64>,
}

impl<'a> Engine<'a> {
    pub fn new(c: &'a Circuit, roots: &[NodeId], order: &[Var], fixed: &Assignment) -> Result<Self> {
        for r in roots {
            c.check_node(*r)?;
        }
        let var_slot: HashMap<Var, usize> = order.iter().enumerate().map(|(k, v)| (*v, k)).collect();
        let live = c.reachable_from(roots);
        let mut nodes = Vec::new();
        let mut slot = vec![u32::MAX; c.len()];
        for (i, g) in c.gates().iter().enumerate() {
            if !live[i] {
                continue;
            }
            if let Gate::Lit(l) = g {
                if !var_slot.contains_key(&l.var) && fixed.get(l.var).is_none() {
                    return Err(Error::Input(format!("variable {} has no value in the evaluation", l.var)));
                }
            }
            slot[i] = nodes.len() as u32;
            nodes.push(NodeId(i as u32));
        }
        let n = order.len();
        let (words, mask) = if n >= BLOCK_BITS_LOG {
            (1 << BLOCK_WORDS_LOG, u64::MAX)
        } else if n >= 6 {
            (1 << (n - 6), u64::MAX)
        } else {
            (1, (1u64 << (1 << n)) - 1)
        };
        Ok(Engine {
            c,
            order: order.to_vec(),
            fixed: fixed.clone(),
            var_slot,
            inputs: vec![0; n * words],
            values: vec![0; nodes.len() * words],
            nodes,
            slot,
            words,
            mask,
        })
    }

    pub fn words(&self) -> usize {
        self.words
    }

    /// Mask of meaningful bits in every word.
    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn num_blocks(&self) -> u64 {
        let n = self.order.len();
        if n > BLOCK_BITS_LOG {
            1u64 << (n - BLOCK_BITS_LOG)
        } else {
            1
        }
    }

    pub fn load_exhaustive_block(&mut self, b: u64) {
        let wlog = self.words.trailing_zeros() as usize;
        for k in 0..self.order.len() {
            for w in 0..self.words {
                let word = if k < 6 {
                    LOW_PATTERNS[k]
                } else if k < 6 + wlog {
                    if (w >> (k - 6)) & 1 == 1 {
                        u64::MAX
                    } else {
                        0
                    }
                } else if (b >> (k - 6 - wlog)) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                };
                self.inputs[k * self.words + w] = word;
            }
        }
    }

    pub fn load_random_block(&mut self, rng: &mut ChaCha8Rng) {
        for x in self.inputs.iter_mut() {
            *x = rng.gen();
        }
    }

    pub fn copy_inputs_from(&mut self, other: &Engine<'_>) {
        for (k, v) in self.order.iter().enumerate() {
            let j = other.var_slot[v];
            let (dst, src) = (k * self.words, j * other.words);
            self.inputs[dst..dst + self.words].copy_from_slice(&other.inputs[src..src + self.words]);
        }
    }

    pub fn run(&mut self) {
        let w = self.words;
        for s in 0..self.nodes.len() {
            let (done, rest) = self.values.split_at_mut(s * w);
            let out = &mut rest[..w];
            match self.c.gate(self.nodes[s]) {
                Gate::Const(b) => out.fill(if *b { u64::MAX } else { 0 }),
                Gate::Lit(l) => {
                    match self.var_slot.get(&l.var) {
                        Some(&k) => out.copy_from_slice(&self.inputs[k * w..(k + 1) * w]),
                        None => out.fill(if self.fixed.get(l.var) == Some(true) { u64::MAX } else { 0 }),
                    }
                    if !l.positive {
                        out.iter_mut().for_each(|x| *x = !*x);
                    }
                }
                Gate::And([a, b]) => {
                    let (sa, sb) = (self.slot[a.index()] as usize, self.slot[b.index()] as usize);
                    for i in 0..w {
                        out[i] = done[sa * w + i] & done[sb * w + i];
                    }
                }
                Gate::Or(cs) => {
                    out.fill(0);
                    for ch in cs {
                        let sc = self.slot[ch.index()] as usize;
                        for i in 0..w {
                            out[i] |= done[sc * w + i];
                        }
                    }
                }
            }
        }
    }

    pub fn value(&self, node: NodeId) -> &[u64] {
        let s = self.slot[node.index()] as usize;
        &self.values[s * self.words..(s + 1) * self.words]
    }

    /// The assignment at bit `bit` of word `w` under the current inputs,
    /// including the fixed variables.
    pub fn assignment_at(&self, w: usize, bit: u32) -> Assignment {
        let mut a = self.fixed.clone();
        for (k, v) in self.order.iter().enumerate() {
            a.set(*v, (self.inputs[k * self.words + w] >> bit) & 1 == 1);
        }
        a
    }
}

/// Truth table over an ordered list of variables; bit `i` belongs to the
/// assignment giving `order[k]` the value of bit `k` of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    order: Vec<Var>,
    bits: Vec<u64>,
}

impl TruthTable {
    pub fn from_fn(order: &[Var], f: impl Fn(u64) -> bool) -> Result<Self> {
        check_cap(order.len(), DEFAULT_TABLE_CAP)?;
        let len = 1u64 << order.len();
        let mut bits = vec![0u64; len.div_ceil(64) as usize];
        for i in 0..len {
            if f(i) {
                bits[(i >> 6) as usize] |= 1 << (i & 63);
            }
        }
        Ok(TruthTable {
            order: order.to_vec(),
            bits,
        })
    }

    pub fn order(&self) -> &[Var] {
        &self.order
    }

    pub fn num_vars(&self) -> usize {
        self.order.len()
    }

    pub fn len(&self) -> u64 {
        1 << self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: u64) -> bool {
        (self.bits[(i >> 6) as usize] >> (i & 63)) & 1 == 1
    }

    /// Value on a total assignment to the table's variables.
    pub fn value(&self, a: &Assignment) -> Result<bool> {
        let mut i = 0u64;
        for (k, v) in self.order.iter().enumerate() {
            match a.get(*v) {
                Some(true) => i |= 1 << k,
                Some(false) => {}
                None => return Err(Error::Input(format!("assignment does not set {}", v))),
            }
        }
        Ok(self.get(i))
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Bits as a string of `0`/`1`, index 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

fn check_cap(vars: usize, cap: usize) -> Result<()> {
    if vars > cap {
        Err(Error::CapExceeded { vars, cap })
    } else {
        Ok(())
    }
}

/// Truth table of `node` over `order`, which must cover the node's variables.
pub fn truth_table_at(c: &Circuit, node: NodeId, order: &[Var], cap: usize) -> Result<TruthTable> {
    check_cap(order.len(), cap.min(DEFAULT_TABLE_CAP))?;
    let mut e = Engine::new(c, &[node], order, &Assignment::new())?;
    let len = 1u64 << order.len();
    let mut bits = vec![0u64; len.div_ceil(64) as usize];
    let mut at = 0usize;
    for b in 0..e.num_blocks() {
        e.load_exhaustive_block(b);
        e.run();
        for &w in e.value(node) {
            bits[at] = w & e.mask();
            at += 1;
        }
    }
    Ok(TruthTable {
        order: order.to_vec(),
        bits,
    })
}

/// Truth table of the root over the circuit's universe in increasing
/// variable order.
pub fn truth_table(c: &Circuit) -> Result<TruthTable> {
    truth_table_at(c, c.root(), &c.universe().to_vec(), DEFAULT_TABLE_CAP)
}

/// Number of assignments over `over` that satisfy the root.
pub fn model_count(c: &Circuit, over: &VarSet) -> Result<u64> {
    model_count_at(c, c.root(), over)
}

pub fn model_count_at(c: &Circuit, node: NodeId, over: &VarSet) -> Result<u64> {
    check_cap(over.len(), DEFAULT_TABLE_CAP)?;
    c.check_node(node)?;
    if !c.vars(node).is_subset(over) {
        return Err(Error::Input("circuit mentions variables outside the counting set".into()));
    }
    let mentioned = c.vars(node).to_vec();
    let mut e = Engine::new(c, &[node], &mentioned, &Assignment::new())?;
    let mut count = 0u64;
    for b in 0..e.num_blocks() {
        e.load_exhaustive_block(b);
        e.run();
        count += e.value(node).iter().map(|w| (w & e.mask()).count_ones() as u64).sum::<u64>();
    }
    Ok(count << (over.len() - mentioned.len()))
}

/// Outcome of an equivalence check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub counterexample: Option<Assignment>,
    pub method: Method,
    /// Assignments compared (summed over auxiliary settings).
    pub checked: u64,
}

/// Exhaustive equivalence of two roots over their non-auxiliary variables,
/// with all auxiliary variables set to 0 and then to 1.
pub fn equivalent(c1: &Circuit, c2: &Circuit, modulo_aux: &VarSet) -> Result<Equivalence> {
    equivalent_at(c1, c1.root(), c2, c2.root(), modulo_aux, DEFAULT_TABLE_CAP)
}

pub fn equivalent_at(
    c1: &Circuit,
    r1: NodeId,
    c2: &Circuit,
    r2: NodeId,
    modulo_aux: &VarSet,
    cap: usize,
) -> Result<Equivalence> {
    compare_at(c1, r1, c2, r2, modulo_aux, cap, false)
}

/// Exhaustive check that `c2` computes the negation of `c1`. A reported
/// counterexample is an assignment on which both agree.
pub fn complementary(c1: &Circuit, c2: &Circuit, cap: usize) -> Result<Equivalence> {
    compare_at(c1, c1.root(), c2, c2.root(), &VarSet::new(), cap, true)
}

fn compare_at(
    c1: &Circuit,
    r1: NodeId,
    c2: &Circuit,
    r2: NodeId,
    modulo_aux: &VarSet,
    cap: usize,
    complement: bool,
) -> Result<Equivalence> {
    let flip = if complement { u64::MAX } else { 0 };
    c1.check_node(r1)?;
    c2.check_node(r2)?;
    let mentioned = c1.vars(r1).union(c2.vars(r2));
    let order = mentioned.difference(modulo_aux).to_vec();
    check_cap(order.len(), cap.min(DEFAULT_TABLE_CAP))?;
    let aux_used = mentioned.intersection(modulo_aux);
    let settings: &[bool] = if aux_used.is_empty() { &[false] } else { &[false, true] };
    let mut checked = 0u64;
    for &setting in settings {
        let fixed: Assignment = aux_used.iter().map(|h| (h, setting)).collect();
        let mut e1 = Engine::new(c1, &[r1], &order, &fixed)?;
        let mut e2 = Engine::new(c2, &[r2], &order, &fixed)?;
        for b in 0..e1.num_blocks() {
            e1.load_exhaustive_block(b);
            e2.load_exhaustive_block(b);
            e1.run();
            e2.run();
            let mask = e1.mask();
            for (w, (x, y)) in e1.value(r1).iter().zip(e2.value(r2)).enumerate() {
                let diff = (x ^ y ^ flip) & mask;
                if diff != 0 {
                    return Ok(Equivalence {
                        equivalent: false,
                        counterexample: Some(e1.assignment_at(w, diff.trailing_zeros())),
                        method: Method::Exhaustive,
                        checked: checked + 1,
                    });
                }
            }
            checked += (mask.count_ones() as u64) * e1.words() as u64;
        }
    }
    Ok(Equivalence {
        equivalent: true,
        counterexample: None,
        method: Method::Exhaustive,
        checked,
    })
}

/// Equivalence on uniformly random assignments to every mentioned variable
/// (auxiliary ones included). Never a proof.
pub fn equivalent_sampled(c1: &Circuit, c2: &Circuit, samples: u64, seed: u64) -> Result<Equivalence> {
    compare_sampled(c1, c2, samples, seed, false)
}

/// Sampled counterpart of [`complementary`].
pub fn complementary_sampled(c1: &Circuit, c2: &Circuit, samples: u64, seed: u64) -> Result<Equivalence> {
    compare_sampled(c1, c2, samples, seed, true)
}

fn compare_sampled(c1: &Circuit, c2: &Circuit, samples: u64, seed: u64, complement: bool) -> Result<Equivalence> {
    let flip = if complement { u64::MAX } else { 0 };
    let order = c1.vars(c1.root()).union(c2.vars(c2.root())).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e1 = Engine::new(c1, &[c1.root()], &order, &Assignment::new())?;
    let mut e2 = Engine::new(c2, &[c2.root()], &order, &Assignment::new())?;
    let mut checked = 0u64;
    while checked < samples {
        e1.load_random_block(&mut rng);
        e2.copy_inputs_from(&e1);
        e1.run();
        e2.run();
        let mask = e1.mask();
        for (w, (x, y)) in e1.value(c1.root()).iter().zip(e2.value(c2.root())).enumerate() {
            let diff = (x ^ y ^ flip) & mask;
            if diff != 0 {
                return Ok(Equivalence {
                    equivalent: false,
                    counterexample: Some(e1.assignment_at(w, diff.trailing_zeros())),
                    method: Method::Sampled,
                    checked,
                });
            }
        }
        checked += (mask.count_ones() as u64) * e1.words() as u64;
    }
    Ok(Equivalence {
        equivalent: true,
        counterexample: None,
        method: Method::Sampled,
        checked,
    })
}

/// Number of distinct residual functions obtained by fixing the variables
/// in `fixed` in all possible ways.
pub fn count_subfunctions(f: &TruthTable, fixed: &[Var]) -> Result<usize> {
    let pos: HashMap<Var, usize> = f.order.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let mut fixed_mask = 0u64;
    for v in fixed {
        let k = *pos
            .get(v)
            .ok_or_else(|| Error::Input(format!("{} is not a variable of the table", v)))?;
        fixed_mask |= 1 << k;
    }
    let n = f.num_vars();
    let k = fixed_mask.count_ones() as usize;
    let free = n - k;
    let res_words = (1usize << free).div_ceil(64);
    let mut residuals = vec![0u64; (1usize << k) * res_words];
    for i in 0..f.len() {
        if !f.get(i) {
            continue;
        }
        let (mut fi, mut ri, mut fb, mut rb) = (0usize, 0usize, 0, 0);
        for bit in 0..n {
            let on = (i >> bit) & 1 == 1;
            if fixed_mask >> bit & 1 == 1 {
                fi |= (on as usize) << fb;
                fb += 1;
            } else {
                ri |= (on as usize) << rb;
                rb += 1;
            }
        }
        residuals[fi * res_words + ri / 64] |= 1 << (ri % 64);
    }
    let distinct: HashSet<&[u64]> = residuals.chunks(res_words).collect();
    Ok(distinct.len())
}

/// Disjunction of the falsifying minterms of `c` over the vtree's
/// variables, each minterm a conjunction tree shaped like `t`.
pub fn minterm_complement(c: &Circuit, t: &Vtree) -> Result<Circuit> {
    let order = t.variables().to_vec();
    if !c.vars(c.root()).is_subset(t.variables()) {
        return Err(Error::Input("circuit mentions variables missing from the vtree".into()));
    }
    if t.has_stubs() {
        return Err(Error::Input("minterm complement needs a vtree without stubs".into()));
    }
    let table = truth_table_at(c, c.root(), &order, DEFAULT_TABLE_CAP)?;
    let mut b = CircuitBuilder::new();
    let mut minterms = Vec::new();
    for i in 0..table.len() {
        if !table.get(i) {
            let a = Assignment::from_index(&order, i);
            minterms.push(minterm(&mut b, t, t.root(), &a));
        }
    }
    let root = if minterms.is_empty() {
        b.constant(false)
    } else if minterms.len() == 1 {
        minterms[0]
    } else {
        b.or(minterms)
    };
    Ok(b.finish(root, t.variables().clone(), VarSet::new()))
}

/// Conjunction of the literals of `a` shaped like the subtree at `v`.
pub fn minterm(b: &mut CircuitBuilder, t: &Vtree, v: VtreeId, a: &Assignment) -> NodeId {
    match t.node(v) {
        VNode::Leaf(x) => b.lit(Lit::new(x, a.get(x).unwrap_or(false))),
        VNode::Stub => b.constant(true),
        VNode::Internal(l, r) => {
            let l = minterm(b, t, l, a);
            let r = minterm(b, t, r, a);
            b.and(l, r)
        }
    }
}
