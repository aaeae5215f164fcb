//! Text formats for circuits and vtrees, JSON for traces, and atomic file
//! writes.
//!
//! Circuit files follow the c2d convention:
//!
//! ```text
//! nnf <node-count> <edge-count> <var-count>
//! c aux <var> <var> ...        (optional; auxiliary variables)
//! L <signed-literal>
//! T | F
//! A <k> <id> ... <id>
//! O <k> <id> ... <id>
//! ```
//!
//! Node ids are 0-based line positions among node lines; children must be
//! defined before use, and the last node is the root. Other lines starting
//! with `c` are comments. Conjunctions with more than two children become
//! left-associated chains; `A 0` is true and `O 0` is false.
//!
//! Vtree files:
//!
//! ```text
//! vtree <node-count>
//! L <id> <var> [aux]
//! I <id> <left-id> <right-id>
//! ```
//!
//! Children are defined before their parent and the last line is the root.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::circuit::{Circuit, CircuitBuilder, Gate, Lit, NodeId, Var};
use crate::error::{Error, Result};
use crate::varset::VarSet;
use crate::vtree::{Shape, VNode, Vtree, VtreeId};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

struct Cursor<'a> {
    line: usize,
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Cursor {
            line,
            toks: tokens(text),
            pos: 0,
            end_col: text.len() + 1,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self
            .toks
            .get(self.pos)
            .copied()
            .ok_or_else(|| parse_err(self.line, self.end_col, format!("expected {}", what)))?;
        self.pos += 1;
        Ok(t)
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<(usize, T)> {
        let (col, s) = self.next(what)?;
        s.parse()
            .map(|v| (col, v))
            .map_err(|_| parse_err(self.line, col, format!("expected {}, found {:?}", what, s)))
    }

    fn finish(&self) -> Result<()> {
        match self.toks.get(self.pos) {
            Some((col, s)) => Err(parse_err(self.line, *col, format!("unexpected token {:?}", s))),
            None => Ok(()),
        }
    }
}

/// Parses a circuit file.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = None;
    for (no, line) in lines.by_ref() {
        let t = line.trim();
        if t.is_empty() || t == "c" || t.starts_with("c ") {
            continue;
        }
        header = Some((no, line));
        break;
    }
    let (hno, hline) = header.ok_or_else(|| parse_err(1, 1, "missing header `nnf <nodes> <edges> <vars>`"))?;
    let mut h = Cursor::new(hno, hline);
    let (col, tag) = h.next("`nnf`")?;
    if tag != "nnf" {
        return Err(parse_err(hno, col, format!("expected `nnf`, found {:?}", tag)));
    }
    let (_, nodes): (_, usize) = h.number("node count")?;
    let (_, edges): (_, usize) = h.number("edge count")?;
    let (_, var_count): (_, u32) = h.number("variable count")?;
    h.finish()?;

    let mut b = CircuitBuilder::without_sharing();
    let mut ids: Vec<NodeId> = Vec::with_capacity(nodes);
    let mut aux = VarSet::new();
    let mut seen_edges = 0usize;
    let mut last_line = hno;
    for (no, line) in lines {
        last_line = no;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(no, line);
        let (col, tag) = cur.next("node")?;
        if tag == "c" {
            if cur.toks.get(1).map(|t| t.1) == Some("aux") {
                cur.next("aux")?;
                while cur.pos < cur.toks.len() {
                    let (col, v): (_, u32) = cur.number("variable")?;
                    if v == 0 || v > var_count {
                        return Err(parse_err(no, col, format!("auxiliary variable {} out of range", v)));
                    }
                    aux.insert(Var(v));
                }
            }
            continue;
        }
        if ids.len() == nodes {
            return Err(parse_err(no, col, format!("more than the declared {} nodes", nodes)));
        }
        let id = match tag {
            "T" => b.constant(true),
            "F" => b.constant(false),
            "L" => {
                let (col, lit): (_, i64) = cur.number("literal")?;
                let l = Lit::from_signed(lit).ok_or_else(|| parse_err(no, col, "literal 0 is not allowed"))?;
                if l.var.0 > var_count {
                    return Err(parse_err(
                        no,
                        col,
                        format!("variable {} exceeds the declared count {}", l.var.0, var_count),
                    ));
                }
                b.lit(l)
            }
            "A" | "O" => {
                let (_, k): (_, usize) = cur.number("child count")?;
                let mut kids = Vec::with_capacity(k);
                for _ in 0..k {
                    let (col, c): (_, usize) = cur.number("child id")?;
                    if c >= ids.len() {
                        return Err(parse_err(
                            no,
                            col,
                            format!("child {} is not defined before node {}", c, ids.len()),
                        ));
                    }
                    kids.push(ids[c]);
                }
                seen_edges += k;
                match (tag, k) {
                    ("A", 0) => b.constant(true),
                    ("O", 0) => b.constant(false),
                    ("A", _) => b.and_chain(&kids),
                    _ => b.or(kids),
                }
            }
            _ => return Err(parse_err(no, col, format!("unknown node kind {:?}", tag))),
        };
        cur.finish()?;
        ids.push(id);
    }
    if ids.len() != nodes {
        return Err(parse_err(
            last_line,
            1,
            format!("declared {} nodes but found {}", nodes, ids.len()),
        ));
    }
    if seen_edges != edges {
        return Err(parse_err(
            hno,
            1,
            format!("declared {} edges but found {}", edges, seen_edges),
        ));
    }
    let root = *ids.last().ok_or_else(|| parse_err(hno, 1, "a circuit needs at least one node"))?;
    let universe: VarSet = (1..=var_count).map(Var).collect();
    Ok(b.finish(root, universe, aux))
}

/// Serializes a circuit; nodes appear in internal order, so the output is
/// deterministic.
pub fn serialize_circuit(c: &Circuit) -> String {
    let edges: usize = c.gates().iter().map(|g| g.children().len()).sum();
    let var_count = c.universe().max().map_or(0, |v| v.0);
    let mut s = format!("nnf {} {} {}\n", c.len(), edges, var_count);
    if !c.aux().is_empty() {
        s.push_str("c aux");
        for v in c.aux().iter() {
            write!(s, " {}", v.0).unwrap();
        }
        s.push('\n');
    }
    let list = |ids: &[NodeId]| ids.iter().map(|i| i.0.to_string()).collect::<Vec<_>>().join(" ");
    for g in c.gates() {
        match g {
            Gate::Lit(l) => writeln!(s, "L {}", l.to_signed()),
            Gate::Const(true) => writeln!(s, "T"),
            Gate::Const(false) => writeln!(s, "F"),
            Gate::And(cs) => writeln!(s, "A 2 {}", list(cs)),
            Gate::Or(cs) => writeln!(s, "O {} {}", cs.len(), list(cs)),
        }
        .unwrap();
    }
    s
}

/// Parses a vtree file.
pub fn parse_vtree(text: &str) -> Result<Vtree> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !(t.is_empty() || t == "c" || t.starts_with("c "))
        });
    let (hno, hline) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "missing header `vtree <nodes>`"))?;
    let mut h = Cursor::new(hno, hline);
    let (col, tag) = h.next("`vtree`")?;
    if tag != "vtree" {
        return Err(parse_err(hno, col, format!("expected `vtree`, found {:?}", tag)));
    }
    let (_, count): (_, usize) = h.number("node count")?;
    h.finish()?;
    // id → (shape, used as a child yet)
    let mut shapes: HashMap<u64, (Option<Shape>, usize, usize)> = HashMap::new();
    let mut aux = VarSet::new();
    let mut vars = VarSet::new();
    let mut last = None;
    let mut defined = 0usize;
    for (no, line) in lines {
        let mut cur = Cursor::new(no, line);
        let (col, tag) = cur.next("node")?;
        let (idcol, id): (_, u64) = cur.number("node id")?;
        if shapes.contains_key(&id) {
            return Err(parse_err(no, idcol, format!("node id {} is defined twice", id)));
        }
        let shape = match tag {
            "L" => {
                let (vcol, v): (_, u32) = cur.number("variable")?;
                if v == 0 {
                    return Err(parse_err(no, vcol, "variable ids start at 1"));
                }
                if vars.contains(Var(v)) {
                    return Err(parse_err(no, vcol, format!("variable {} appears on two leaves", v)));
                }
                vars.insert(Var(v));
                if let Some((acol, a)) = cur.toks.get(cur.pos).copied() {
                    if a != "aux" {
                        return Err(parse_err(no, acol, format!("expected `aux`, found {:?}", a)));
                    }
                    cur.pos += 1;
                    aux.insert(Var(v));
                }
                Shape::Leaf(Var(v))
            }
            "I" => {
                let mut take = |cur: &mut Cursor, what: &str| -> Result<Shape> {
                    let (ccol, c): (_, u64) = cur.number(what)?;
                    match shapes.get_mut(&c) {
                        Some((slot, _, _)) => slot
                            .take()
                            .ok_or_else(|| parse_err(no, ccol, format!("node {} already has a parent", c))),
                        None => Err(parse_err(no, ccol, format!("child {} is not defined before node {}", c, id))),
                    }
                };
                let l = take(&mut cur, "left child id")?;
                let r = take(&mut cur, "right child id")?;
                Shape::node(l, r)
            }
            _ => return Err(parse_err(no, col, format!("unknown vtree node kind {:?}", tag))),
        };
        cur.finish()?;
        shapes.insert(id, (Some(shape), no, idcol));
        defined += 1;
        last = Some(id);
    }
    if defined != count {
        return Err(parse_err(hno, 1, format!("declared {} nodes but found {}", count, defined)));
    }
    let root = last.ok_or_else(|| parse_err(hno, 1, "a vtree needs at least one node"))?;
    let shape = shapes.get_mut(&root).and_then(|s| s.0.take()).unwrap();
    if let Some((_, (_, no, col))) = shapes.iter().filter(|(_, s)| s.0.is_some()).min_by_key(|(_, s)| s.1) {
        return Err(parse_err(*no, *col, "node is not connected to the root"));
    }
    Ok(Vtree::from_shape(&shape)?.with_aux(aux))
}

/// Serializes a vtree with ids in postorder (children before parents).
pub fn serialize_vtree(t: &Vtree) -> Result<String> {
    let mut s = format!("vtree {}\n", t.len());
    for v in postorder(t) {
        match t.node(v) {
            VNode::Leaf(x) => {
                let mark = if t.aux().contains(x) { " aux" } else { "" };
                writeln!(s, "L {} {}{}", v.0, x.0, mark).unwrap();
            }
            VNode::Internal(l, r) => writeln!(s, "I {} {} {}", v.0, l.0, r.0).unwrap(),
            VNode::Stub => return Err(Error::Input("vtrees with stubs cannot be written".into())),
        }
    }
    Ok(s)
}

fn postorder(t: &Vtree) -> Vec<VtreeId> {
    let mut out = Vec::with_capacity(t.len());
    let mut stack = vec![(t.root(), false)];
    while let Some((v, done)) = stack.pop() {
        match t.children(v) {
            Some((l, r)) if !done => {
                stack.push((v, true));
                stack.push((r, false));
                stack.push((l, false));
            }
            _ => out.push(v),
        }
    }
    out
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {}", path.display(), e)))
}

/// Reads a circuit file; parse errors are prefixed with the path.
pub fn read_circuit(path: &Path) -> Result<Circuit> {
    parse_circuit(&read_text(path)?).map_err(|e| with_path(e, path))
}

/// Reads a vtree file; parse errors are prefixed with the path.
pub fn read_vtree(path: &Path) -> Result<Vtree> {
    parse_vtree(&read_text(path)?).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {}", path.display(), message),
        },
        e => e,
    }
}

pub fn write_circuit(path: &Path, c: &Circuit) -> Result<()> {
    write_atomic(path, serialize_circuit(c).as_bytes())
}

pub fn write_vtree(path: &Path, t: &Vtree) -> Result<()> {
    write_atomic(path, serialize_vtree(t)?.as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Pipeline(format!("JSON encoding: {}", e)))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_true_node() {
        let c = parse_circuit("nnf 1 0 1\nT\n").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.gate(c.root()), &Gate::Const(true));
    }

    #[test]
    fn wide_conjunction_is_binarized() {
        let c = parse_circuit("nnf 4 3 3\nL 1\nL -2\nL 3\nA 3 0 1 2\n").unwrap();
        let Gate::And([l, r]) = c.gate(c.root()) else { panic!() };
        assert!(c.gate(*l).is_and());
        assert_eq!(c.gate(*r), &Gate::Lit(Lit::pos(3)));
        assert_eq!(c.size(), 5);
    }

    #[test]
    fn round_trip_is_stable() {
        let text = "nnf 5 4 3\nc aux 3\nL 1\nL -2\nA 2 0 1\nL 3\nO 2 2 3\n";
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.aux().to_vec(), vec![Var(3)]);
        let s = serialize_circuit(&c);
        assert_eq!(s, text);
        assert_eq!(parse_circuit(&s).unwrap(), c);
    }

    #[test]
    fn circuit_errors_have_locations() {
        let cases = [
            ("", 1, "missing header"),
            ("nnx 1 0 1\nT\n", 1, "expected `nnf`"),
            ("nnf 1 0 1\nA 1 0\n", 2, "not defined before"),
            ("nnf 2 1 1\nL 1\nO 1 5\n", 3, "not defined before"),
            ("nnf 1 0 1\nL 2\n", 2, "exceeds"),
            ("nnf 1 0 1\nQ\n", 2, "unknown node kind"),
            ("nnf 2 0 1\nT\n", 2, "declared 2 nodes"),
            ("nnf 1 0 1\nT\nF\n", 3, "more than the declared"),
            ("nnf 1 0 1\nL 0\n", 2, "literal 0"),
            ("nnf 2 2 1\nL 1\nO 1 0\n", 1, "declared 2 edges"),
            ("nnf 1 0 1\nT x\n", 2, "unexpected token"),
        ];
        for (text, line, msg) in cases {
            match parse_circuit(text) {
                Err(Error::Parse { line: l, message, .. }) => {
                    assert_eq!(l, line, "{:?}: {}", text, message);
                    assert!(message.contains(msg), "{:?}: {}", text, message);
                }
                other => panic!("{:?}: {:?}", text, other),
            }
        }
        match parse_circuit("nnf 2 1 1\nL 1\nO 1   7\n") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 7),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn vtree_round_trip() {
        let t = Vtree::parse("((1 2) (3 4))").unwrap().with_aux([Var(4)].into_iter().collect());
        let s = serialize_vtree(&t).unwrap();
        assert!(s.starts_with("vtree 7\n"));
        assert!(s.contains(" 4 aux\n"));
        let back = parse_vtree(&s).unwrap();
        assert_eq!(back.to_string(), t.to_string());
        assert_eq!(back.aux(), t.aux());
        assert_eq!(serialize_vtree(&back).unwrap(), s);
    }

    #[test]
    fn vtree_errors() {
        let cases = [
            ("vtree 1\nL 0 1\nL 0 2\n", "defined twice"),
            ("vtree 3\nL 0 1\nL 1 1\nI 2 0 1\n", "two leaves"),
            ("vtree 3\nL 0 1\nI 2 0 1\nL 1 2\n", "not defined before"),
            ("vtree 3\nL 0 1\nL 1 2\nI 2 0 0\n", "already has a parent"),
            ("vtree 3\nL 0 1\nL 1 2\nL 2 3\n", "not connected"),
            ("vtree 2\nL 0 1\n", "declared 2"),
            ("vtree 1\nL 0 1 main\n", "expected `aux`"),
            ("tree 1\n", "expected `vtree`"),
        ];
        for (text, msg) in cases {
            match parse_vtree(text) {
                Err(Error::Parse { message, .. }) => assert!(message.contains(msg), "{:?}: {}", text, message),
                other => panic!("{:?}: {:?}", text, other),
            }
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
