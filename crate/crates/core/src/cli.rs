//! Command-line interface.
//!
//! Exit codes: 0 on success (and when every checked property holds), 1 on a
//! property violation or inequivalence (the witness is printed), 2 on usage,
//! parse or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::circuit::{Assignment, Gate, Var};
use crate::error::{Error, Result};
use crate::hwb::{build_hwb, loglog_slope, separation_csv, separation_experiment};
use crate::io::{read_circuit, read_vtree, to_json, write_atomic, write_circuit, write_vtree};
use crate::oracle::{self, count_subfunctions, truth_table_at, DEFAULT_TABLE_CAP};
use crate::simulation::{simulate, SimOptions};
use crate::transforms::{complete, make_simple, restrict, smooth};
use crate::validators::{
    check_decomposable, check_deterministic, check_respects_vtree, check_sdd, check_simple, check_smooth,
    PropertyReport, DEFAULT_CHECK_CAP,
};
use crate::varset::VarSet;
use crate::vtree::{Orientation, Vtree};

/// Version tag of the JSON report layout (see `schemas/report.schema.json`).
pub const REPORT_FORMAT: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "nnf2sdd", version, about = "Structured d-DNNF to SDD compilation and checking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print one machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Variable limit for exhaustive semantic checks.
    #[arg(long, global = true, default_value_t = DEFAULT_CHECK_CAP)]
    cap: usize,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CircuitArg {
    #[arg(long)]
    circuit: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check structural and semantic properties of a circuit.
    Validate {
        #[command(flatten)]
        input: CircuitArg,
        /// Vtree for vtree-dependent properties; defaults to the circuit
        /// path with extension `.vtree` when that file exists.
        #[arg(long)]
        vtree: Option<PathBuf>,
        /// Comma-separated: decomposable, deterministic, smooth, simple,
        /// respects_vtree, respects_vtree_oriented, sdd.
        #[arg(long, value_delimiter = ',', default_value = "decomposable,deterministic")]
        props: Vec<String>,
    },
    /// Rewrite into simple form.
    Simplify {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smooth a structured circuit along its vtree.
    Smooth {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long)]
        vtree: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Make every node mention all variables of its vtree node.
        #[arg(long)]
        complete: bool,
    },
    /// Restrict a circuit by a partial assignment.
    Restrict {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long)]
        vtree: PathBuf,
        /// Partial assignment `var=bit,...`.
        #[arg(long)]
        assign: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an SDD from circuits for a function and its complement. Writes
    /// the SDD, its vtree (same path, extension `.vtree`) and a trace. Node
    /// ids in the trace refer to the normalized inputs, written next to the
    /// output as `<stem>.d.nnf`, `<stem>.dbar.nnf` and `<stem>.base.vtree`.
    Simulate {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long)]
        circuit2: PathBuf,
        #[arg(long)]
        vtree: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trace path; defaults to `trace.json` next to the output.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Skip the determinism and complement checks of the inputs.
        #[arg(long)]
        no_verify: bool,
        /// Random assignments for the complement check above the cap.
        #[arg(long, default_value_t = 1 << 16)]
        samples: u64,
    },
    /// Count models over the circuit's variables.
    Count {
        #[command(flatten)]
        input: CircuitArg,
    },
    /// Compare two circuits.
    Equiv {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long)]
        circuit2: PathBuf,
        /// Ignore auxiliary variables (compared with all of them 0, then 1).
        #[arg(long)]
        modulo_aux: bool,
        /// Check that the second circuit is the negation of the first.
        #[arg(long, conflicts_with = "modulo_aux")]
        complement: bool,
        /// Extra source of auxiliary variables.
        #[arg(long)]
        vtree: Option<PathBuf>,
        /// Random assignments when the variables exceed the cap.
        #[arg(long, default_value_t = 1 << 20)]
        samples: u64,
    },
    /// Count distinct subfunctions after fixing a set of variables.
    Subfuncs {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long, value_delimiter = ',', required = true)]
        fixed_set: Vec<u32>,
    },
    /// Write the HWB circuits and vtree: `<prefix>.d.nnf`,
    /// `<prefix>.dbar.nnf`, `<prefix>.vtree`.
    GenHwb {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out_prefix: String,
    },
    /// HWB circuit sizes and subfunction counts per size.
    Separation {
        #[arg(long, value_delimiter = ',', default_value = "10,20")]
        n: Vec<u32>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Variables to fix instead of the left block of the vtree.
        #[arg(long, value_delimiter = ',')]
        fixed_set: Option<Vec<u32>>,
    },
    /// Sizes and shape statistics.
    Stats {
        #[command(flatten)]
        input: CircuitArg,
        #[arg(long)]
        vtree: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Simplify { .. } => "simplify",
            Command::Smooth { .. } => "smooth",
            Command::Restrict { .. } => "restrict",
            Command::Simulate { .. } => "simulate",
            Command::Count { .. } => "count",
            Command::Equiv { .. } => "equiv",
            Command::Subfuncs { .. } => "subfuncs",
            Command::GenHwb { .. } => "gen-hwb",
            Command::Separation { .. } => "separation",
            Command::Stats { .. } => "stats",
        }
    }
}

/// What a command produced; rendered as text or JSON.
#[derive(Serialize)]
struct Report {
    format: u32,
    command: String,
    exit_code: i32,
    seed: u64,
    cap: usize,
    reports: Vec<PropertyReport>,
    data: Value,
    outputs: Vec<String>,
    warnings: Vec<String>,
    error: Option<String>,
    #[serde(skip)]
    lines: Vec<String>,
}

impl Report {
    fn new(command: &str, seed: u64, cap: usize) -> Self {
        Report {
            format: REPORT_FORMAT,
            command: command.to_string(),
            exit_code: 0,
            seed,
            cap,
            reports: Vec::new(),
            data: Value::Null,
            outputs: Vec::new(),
            warnings: Vec::new(),
            error: None,
            lines: Vec::new(),
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn fail(&mut self) {
        self.exit_code = self.exit_code.max(1);
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    fn check(&mut self, r: PropertyReport) {
        self.line(r.summary());
        if !r.holds {
            self.fail();
        }
        self.reports.push(r);
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Property(_) => 1,
        _ => 2,
    }
}

/// Runs the CLI with the given arguments (the first is the program name)
/// and returns the exit code. Normal output goes to `out`, diagnostics to
/// `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{}", text) } else { write!(err, "{}", text) };
            return code;
        }
    };
    let mut report = Report::new(cli.command.name(), cli.seed, cli.cap);
    if let Err(e) = execute(&cli, &mut report) {
        report.exit_code = exit_code_for(&e);
        if let Error::Property(r) = &e {
            report.line(r.summary());
            report.reports.push((**r).clone());
        }
        report.error = Some(e.to_string());
    }
    let printed = if cli.json {
        match to_json(&report) {
            Ok(s) => write!(out, "{}", s),
            Err(e) => writeln!(err, "error: {}", e),
        }
    } else {
        let mut r = Ok(());
        for l in &report.lines {
            r = r.and(writeln!(out, "{}", l));
        }
        for w in &report.warnings {
            r = r.and(writeln!(err, "warning: {}", w));
        }
        if let Some(e) = &report.error {
            r = r.and(writeln!(err, "error: {}", e));
        }
        r
    };
    if printed.is_err() {
        return 2;
    }
    report.exit_code
}

fn parse_assign(s: &str) -> Result<Assignment> {
    let mut a = Assignment::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (v, b) = part
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("expected var=bit, found {:?}", part)))?;
        let v: u32 = v
            .trim()
            .trim_start_matches('x')
            .parse()
            .map_err(|_| Error::Input(format!("bad variable {:?}", v)))?;
        let b = match b.trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Input(format!("bad bit {:?}", other))),
        };
        if v == 0 {
            return Err(Error::Input("variable ids start at 1".into()));
        }
        if a.get(Var(v)).is_some() {
            return Err(Error::Input(format!("variable {} assigned twice", v)));
        }
        a.set(Var(v), b);
    }
    Ok(a)
}

fn sibling_vtree(circuit: &Path) -> Option<PathBuf> {
    let p = circuit.with_extension("vtree");
    p.exists().then_some(p)
}

fn equivalence_data(eq: &oracle::Equivalence) -> Value {
    json!({
        "equivalent": eq.equivalent,
        "method": eq.method,
        "checked": eq.checked,
        "counterexample": eq.counterexample,
    })
}

fn execute(cli: &Cli, rep: &mut Report) -> Result<()> {
    let cap = cli.cap;
    match &cli.command {
        Command::Validate { input, vtree, props } => {
            let c = read_circuit(&input.circuit)?;
            let vt_path = vtree.clone().or_else(|| sibling_vtree(&input.circuit));
            let mut t: Option<Vtree> = None;
            for p in props {
                let p = p.trim();
                let needs_vtree = matches!(p, "respects_vtree" | "respects_vtree_oriented" | "sdd");
                if needs_vtree && t.is_none() {
                    let path = vt_path
                        .as_ref()
                        .ok_or_else(|| Error::Input(format!("property {} needs --vtree", p)))?;
                    t = Some(read_vtree(path)?);
                }
                let r = match p {
                    "decomposable" => check_decomposable(&c),
                    "deterministic" => check_deterministic(&c, cap),
                    "smooth" => check_smooth(&c),
                    "simple" => check_simple(&c),
                    "respects_vtree" => check_respects_vtree(&c, t.as_ref().unwrap(), Orientation::DdnnfUnoriented),
                    "respects_vtree_oriented" => {
                        check_respects_vtree(&c, t.as_ref().unwrap(), Orientation::SddOriented)
                    }
                    "sdd" => check_sdd(&c, t.as_ref().unwrap(), cap),
                    other => return Err(Error::Input(format!("unknown property {:?}", other))),
                };
                rep.check(r);
            }
        }
        Command::Simplify { input, out } => {
            let c = read_circuit(&input.circuit)?;
            let s = make_simple(&c)?;
            write_circuit(out, &s)?;
            rep.output(out);
            rep.line(format!("{} nodes -> {} nodes", c.size(), s.size()));
            rep.data = json!({"size_in": c.size(), "size_out": s.size()});
        }
        Command::Smooth {
            input,
            vtree,
            out,
            complete: full,
        } => {
            let c = read_circuit(&input.circuit)?;
            let t = read_vtree(vtree)?;
            let s = if *full { complete(&c, &t)? } else { smooth(&c, &t)? };
            write_circuit(out, &s)?;
            rep.output(out);
            rep.line(format!("{} nodes -> {} nodes", c.size(), s.size()));
            rep.data = json!({"size_in": c.size(), "size_out": s.size()});
        }
        Command::Restrict {
            input,
            vtree,
            assign,
            out,
        } => {
            let c = read_circuit(&input.circuit)?;
            let t = read_vtree(vtree)?;
            let p = parse_assign(assign)?;
            let r = restrict(&c, &t, &p)?;
            write_circuit(out, &r.circuit)?;
            rep.output(out);
            rep.line(format!(
                "restricted by {}: {} nodes, pruned vtree {}",
                p,
                r.circuit.size(),
                r.pruned.tree
            ));
            rep.data = json!({"size": r.circuit.size(), "pruned_vtree": r.pruned.tree.to_string()});
        }
        Command::Simulate {
            input,
            circuit2,
            vtree,
            out,
            trace,
            no_verify,
            samples,
        } => {
            let d = read_circuit(&input.circuit)?;
            let dbar = read_circuit(circuit2)?;
            let t = read_vtree(vtree)?;
            let opts = SimOptions {
                verify_determinism: !no_verify,
                verify_complement: !no_verify,
                cap,
                samples: *samples,
                seed: cli.seed,
            };
            let sim = simulate(&d, &dbar, &t, &opts)?;
            let vt_out = out.with_extension("vtree");
            let trace_out = trace.clone().unwrap_or_else(|| match out.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.join("trace.json"),
                _ => PathBuf::from("trace.json"),
            });
            let stem = out.with_extension("");
            let side = |suffix: &str| PathBuf::from(format!("{}.{}", stem.display(), suffix));
            let (pd, pdbar, pt) = (side("d.nnf"), side("dbar.nnf"), side("base.vtree"));
            write_circuit(out, &sim.s)?;
            write_vtree(&vt_out, &sim.t_prime.tree)?;
            write_atomic(&trace_out, to_json(&sim.trace)?.as_bytes())?;
            write_circuit(&pd, &sim.prepared.d)?;
            write_circuit(&pdbar, &sim.prepared.dbar)?;
            write_vtree(&pt, &sim.prepared.t)?;
            for p in [out, &vt_out, &trace_out, &pd, &pdbar, &pt] {
                rep.output(p);
            }
            let st = &sim.trace.stats;
            rep.line(format!(
                "|D| = {}, |Dbar| = {}, |S| = {} ({} edges), {} auxiliary variables",
                st.size_d, st.size_dbar, st.size_s, st.edges_s, st.aux_vars
            ));
            rep.warnings.extend(sim.trace.warnings.iter().cloned());
            rep.data = serde_json::to_value(st).map_err(|e| Error::Pipeline(e.to_string()))?;
        }
        Command::Count { input } => {
            let c = read_circuit(&input.circuit)?;
            let over = c.universe().clone();
            if over.len() > cap.min(DEFAULT_TABLE_CAP) {
                return Err(Error::CapExceeded { vars: over.len(), cap });
            }
            let n = oracle::model_count(&c, &over)?;
            rep.line(n.to_string());
            rep.data = json!({"models": n, "vars": over.len()});
        }
        Command::Equiv {
            input,
            circuit2,
            modulo_aux,
            complement,
            vtree,
            samples,
        } => {
            let c1 = read_circuit(&input.circuit)?;
            let c2 = read_circuit(circuit2)?;
            let mut aux = VarSet::new();
            if *modulo_aux {
                aux = c1.aux().union(c2.aux());
                if let Some(p) = vtree {
                    aux.union_with(read_vtree(p)?.aux());
                }
            }
            let mentioned = c1.vars(c1.root()).union(c2.vars(c2.root())).difference(&aux);
            let exhaustive = mentioned.len() <= cap.min(DEFAULT_TABLE_CAP);
            let eq = match (exhaustive, complement) {
                (true, true) => oracle::complementary(&c1, &c2, cap)?,
                (true, false) => oracle::equivalent_at(&c1, c1.root(), &c2, c2.root(), &aux, cap)?,
                (false, true) => oracle::complementary_sampled(&c1, &c2, *samples, cli.seed)?,
                (false, false) if aux.is_empty() => oracle::equivalent_sampled(&c1, &c2, *samples, cli.seed)?,
                (false, false) => return Err(Error::CapExceeded { vars: mentioned.len(), cap }),
            };
            let what = if *complement { "complementary" } else { "equivalent" };
            if eq.equivalent {
                rep.line(format!("{} ({:?}, {} assignments)", what, eq.method, eq.checked));
            } else {
                rep.fail();
                rep.line(format!(
                    "not {}: counterexample {}",
                    what,
                    eq.counterexample.clone().unwrap_or_default()
                ));
            }
            rep.data = equivalence_data(&eq);
        }
        Command::Subfuncs { input, fixed_set } => {
            let c = read_circuit(&input.circuit)?;
            let order = c.universe().to_vec();
            let table = truth_table_at(&c, c.root(), &order, cap.min(DEFAULT_TABLE_CAP))?;
            let fixed: Vec<Var> = fixed_set.iter().map(|&v| Var(v)).collect();
            let n = count_subfunctions(&table, &fixed)?;
            rep.line(n.to_string());
            rep.data = json!({"subfunctions": n, "fixed": fixed_set});
        }
        Command::GenHwb { n, out_prefix } => {
            let inst = build_hwb(*n)?;
            let pd = PathBuf::from(format!("{}.d.nnf", out_prefix));
            let pdbar = PathBuf::from(format!("{}.dbar.nnf", out_prefix));
            let pt = PathBuf::from(format!("{}.vtree", out_prefix));
            write_circuit(&pd, &inst.d)?;
            write_circuit(&pdbar, &inst.dbar)?;
            write_vtree(&pt, &inst.vtree)?;
            for p in [&pd, &pdbar, &pt] {
                rep.output(p);
            }
            rep.line(format!("HWB_{}: |d| = {}, |dbar| = {}", n, inst.d.size(), inst.dbar.size()));
            rep.data = json!({"n": n, "size_d": inst.d.size(), "size_dbar": inst.dbar.size()});
        }
        Command::Separation { n, csv, fixed_set } => {
            let rows = separation_experiment(n, fixed_set.as_deref(), cap.max(DEFAULT_TABLE_CAP))?;
            let text = separation_csv(&rows);
            if let Some(p) = csv {
                write_atomic(p, text.as_bytes())?;
                rep.output(p);
            }
            for l in text.lines() {
                rep.line(l);
            }
            let pts_d: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.size_d as f64)).collect();
            let pts_dbar: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.size_dbar as f64)).collect();
            let (sd, sdbar) = (loglog_slope(&pts_d), loglog_slope(&pts_dbar));
            if let (Some(a), Some(b)) = (sd, sdbar) {
                rep.line(format!("log-log size slope: d {:.3}, dbar {:.3}", a, b));
            }
            for r in &rows {
                if let Some(c) = r.subfunctions {
                    if (c as u64) < r.bound {
                        rep.fail();
                    }
                }
            }
            rep.data = json!({"rows": rows, "slope_d": sd, "slope_dbar": sdbar});
        }
        Command::Stats { input, vtree } => {
            let c = read_circuit(&input.circuit)?;
            let (mut ands, mut ors, mut lits, mut consts) = (0, 0, 0, 0);
            for g in c.gates() {
                match g {
                    Gate::And(_) => ands += 1,
                    Gate::Or(_) => ors += 1,
                    Gate::Lit(_) => lits += 1,
                    Gate::Const(_) => consts += 1,
                }
            }
            let mut data = json!({
                "nodes": c.size(),
                "edges": c.edge_count(),
                "and": ands,
                "or": ors,
                "literals": lits,
                "constants": consts,
                "vars": c.universe().len(),
                "aux_vars": c.aux().len(),
            });
            rep.line(format!(
                "{} nodes ({} and, {} or, {} literals, {} constants), {} edges, {} variables ({} auxiliary)",
                c.size(),
                ands,
                ors,
                lits,
                consts,
                c.edge_count(),
                c.universe().len(),
                c.aux().len()
            ));
            if let Some(p) = vtree {
                let t = read_vtree(p)?;
                rep.line(format!("vtree: {} nodes, height {}, normalized: {}", t.len(), t.height(t.root()), t.is_normalized()));
                data["vtree_nodes"] = json!(t.len());
                data["vtree_height"] = json!(t.height(t.root()));
            }
            rep.data = data;
        }
    }
    Ok(())
}

/// Entry point for the binary.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
