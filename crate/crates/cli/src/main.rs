//! Command-line front end. Every subcommand prints to stdout, either as
//! plain text or as JSON (`--format json`), and maps library errors onto
//! a fixed exit-code contract:
//!
//!   2  malformed input (parse errors, bad graph data, bad config)
//!   3  a contact-order index left the configured window
//!   4  solver disagrees with the oracle, or constraints are inconsistent
//!   5  a series/operator window is too small for an exact answer

use std::fs;
use std::io::Read as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::Zero;
use serde_json::{json, Map, Value};

use relgw::cycleclasses::c_g;
use relgw::givental::{
    anomaly, assemble_potential, bracket_matches, build_l, check_symplectic, genus0_residual,
};
use relgw::graphs::{enumerate, virtual_dim, BipartiteGraph, TopType};
use relgw::insertions::{parse, InsClass, PairContext};
use relgw::json::{graph_from_json, graph_to_json, poly_to_json, rat_json, table_to_json};
use relgw::quantum::{
    check_trr, check_wdvv, quantum_product_small, solve_structure_constants, three_point_small,
    verify_against_oracle, EntryStatus, SmallProvider, StructureTable,
};
use relgw::rat::{rat_i, rat_str, Rat};
use relgw::{Error, Result};

#[derive(Parser)]
#[command(name = "relgw", version, about = "Exact computations in the relative quantum algebra of (P^n, P^(n-1))")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Command-line settings. Anything not given here falls back to the
/// `--config` file, then to the built-in defaults; environment variables
/// are never consulted.
#[derive(Args)]
struct Overrides {
    /// Ambient projective dimension
    #[arg(long, global = true, value_name = "N")]
    n: Option<usize>,

    /// Contact-order window half-width
    #[arg(long, short = 'W', global = true, value_name = "W")]
    window: Option<i64>,

    /// Highest retained power of q
    #[arg(long, global = true, value_name = "M")]
    qmax: Option<u32>,

    /// Lower end of the z-window (must be negative)
    #[arg(long, global = true, value_name = "ZMIN", allow_hyphen_values = true)]
    zmin: Option<i64>,

    /// Upper end of the z-window (must be positive)
    #[arg(long, global = true, value_name = "ZMAX", allow_hyphen_values = true)]
    zmax: Option<i64>,

    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Optional key = value defaults file (flags win)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy)]
struct Config {
    n: usize,
    window: i64,
    qmax: u32,
    zmin: i64,
    zmax: i64,
    format: FormatArg,
}

impl Config {
    fn ctx(&self) -> Result<PairContext> {
        PairContext::new(self.n, self.window)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Classical ring of insertions
    Ring {
        #[command(subcommand)]
        cmd: RingCmd,
    },
    /// Bipartite localization graphs and their obstruction classes
    Graphs {
        #[command(subcommand)]
        cmd: GraphsCmd,
    },
    /// Small quantum product: oracle, solver, genus-zero identities
    Quantum {
        #[command(subcommand)]
        cmd: QuantumCmd,
    },
    /// Quantized operators l_m and their genus-zero constraints
    Virasoro {
        #[command(subcommand)]
        cmd: VirasoroCmd,
    },
}

#[derive(Subcommand)]
enum RingCmd {
    /// Product of two insertion expressions
    Mult { a: String, b: String },
    /// Pairing of two insertion expressions
    Pair { a: String, b: String },
    /// Full multiplication table over the window basis
    Table,
    /// Bidegree of a homogeneous insertion expression
    Degree { a: String },
}

#[derive(Subcommand)]
enum GraphsCmd {
    /// All admissible graphs of a topological type, up to isomorphism
    Enumerate {
        #[command(flatten)]
        top: TopArgs,
    },
    /// Virtual dimension of a topological type
    Vdim {
        #[command(flatten)]
        top: TopArgs,
    },
    /// Obstruction classes, from a JSON graph or a topological type
    Class {
        #[command(flatten)]
        top: TopArgs,
        /// Read one graph as JSON from FILE ("-" for stdin)
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TopArgs {
    /// Total curve degree
    #[arg(long, default_value_t = 0)]
    degree: i64,
    /// Number of interior legs
    #[arg(long, default_value_t = 0)]
    legs: usize,
    /// Comma-separated nonzero contact orders, e.g. 2,-1
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    mu: Option<String>,
}

#[derive(Subcommand)]
enum QuantumCmd {
    /// Oracle quantum product of two insertion expressions
    Product { a: String, b: String },
    /// Structure constants found by the stage-by-stage solver
    Table,
    /// Compare every solver-determined entry with the oracle
    Verify,
    /// Four-point exchange residual; insertions are [POW:]CLASS
    Wdvv {
        #[arg(long, default_value_t = 0)]
        degree: u32,
        a: String,
        b: String,
        c: String,
        d: String,
        /// Extra insertions carried through the identity
        #[arg(long = "extra", value_name = "INS")]
        extras: Vec<String>,
    },
    /// Descendant-lowering residual; first insertion needs POW >= 1
    Trr {
        #[arg(long, default_value_t = 0)]
        degree: u32,
        #[arg(required = true, num_args = 3..)]
        insertions: Vec<String>,
    },
    /// Three-point invariant of the given degree
    Threepoint {
        #[arg(long, default_value_t = 0)]
        degree: u32,
        a: String,
        b: String,
        c: String,
    },
}

#[derive(Subcommand)]
enum VirasoroCmd {
    /// Commutator [l_m, l_k] against (k - m) l_{m+k} on the z-window
    Bracket {
        #[arg(allow_hyphen_values = true)]
        m: i64,
        #[arg(allow_hyphen_values = true)]
        k: i64,
    },
    /// Largest residual of Omega(l_m f, g) + Omega(f, l_m g)
    Symplectic {
        #[arg(allow_hyphen_values = true)]
        m: i64,
    },
    /// Genus-zero constraint residuals of a quantized operator
    Genus0 {
        /// Operator to test
        #[arg(long, value_parser = ["L-1", "L0"])]
        op: String,
        /// Truncation order in the coordinates t
        #[arg(long, default_value_t = 3)]
        tmax: usize,
        /// Highest descendant level kept
        #[arg(long, default_value_t = 1)]
        levels: u32,
    },
    /// Central term of [l_-1, l_1]^ under a basis cutoff
    Anomaly {
        /// Inclusive cutoff range, e.g. 2..8
        #[arg(long, value_name = "A..B")]
        cutoffs: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli.overrides) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(&cli.cmd, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit(&e))
        }
    }
}

fn error_exit(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::RingMismatch(_)
        | Error::NotMonomial(_)
        | Error::InvalidGraph(_)
        | Error::Unsupported(_) => 2,
        Error::WindowOverflow { .. } | Error::Undecomposable { .. } => 3,
        Error::Inconsistent(_) => 4,
        Error::WindowMargin(_) => 5,
    }
}

fn resolve_config(ov: &Overrides) -> std::result::Result<Config, String> {
    let mut cfg = Config {
        n: 2,
        window: 4,
        qmax: 3,
        zmin: -6,
        zmax: 6,
        format: FormatArg::Text,
    };
    if let Some(path) = &ov.config {
        let body = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        apply_config_file(&mut cfg, &body)?;
    }
    if let Some(n) = ov.n {
        cfg.n = n;
    }
    if let Some(w) = ov.window {
        cfg.window = w;
    }
    if let Some(q) = ov.qmax {
        cfg.qmax = q;
    }
    if let Some(z) = ov.zmin {
        cfg.zmin = z;
    }
    if let Some(z) = ov.zmax {
        cfg.zmax = z;
    }
    if let Some(f) = ov.format {
        cfg.format = f;
    }
    if cfg.n < 1 {
        return Err("n must be >= 1".into());
    }
    if cfg.window < 1 {
        return Err("window must be >= 1".into());
    }
    if !(cfg.zmin < 0 && 0 < cfg.zmax) {
        return Err("the z-window must satisfy zmin < 0 < zmax".into());
    }
    Ok(cfg)
}

fn apply_config_file(cfg: &mut Config, body: &str) -> std::result::Result<(), String> {
    for (lineno, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("config line {}: bad {what} \"{value}\"", lineno + 1);
        match key {
            "n" => cfg.n = value.parse().map_err(|_| bad("n"))?,
            "window" => cfg.window = value.parse().map_err(|_| bad("window"))?,
            "qmax" => cfg.qmax = value.parse().map_err(|_| bad("qmax"))?,
            "zmin" => cfg.zmin = value.parse().map_err(|_| bad("zmin"))?,
            "zmax" => cfg.zmax = value.parse().map_err(|_| bad("zmax"))?,
            "format" => {
                cfg.format = match value {
                    "text" => FormatArg::Text,
                    "json" => FormatArg::Json,
                    _ => return Err(bad("format")),
                }
            }
            _ => return Err(format!("config line {}: unknown key \"{key}\"", lineno + 1)),
        }
    }
    Ok(())
}

/// Prints one result in the configured format. JSON output goes through
/// `serde_json::to_string`, whose map ordering is stable, so identical
/// inputs always produce identical bytes. A closed pipe ends the process
/// quietly instead of panicking.
fn emit(cfg: &Config, text: String, value: Value) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let result = match cfg.format {
        FormatArg::Text => writeln!(out, "{text}"),
        FormatArg::Json => {
            writeln!(out, "{}", serde_json::to_string(&value).expect("serializable"))
        }
    };
    if let Err(e) = result {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write output: {e}");
        std::process::exit(1);
    }
}

fn run(cmd: &Cmd, cfg: &Config) -> Result<u8> {
    match cmd {
        Cmd::Ring { cmd } => run_ring(cmd, cfg),
        Cmd::Graphs { cmd } => run_graphs(cmd, cfg),
        Cmd::Quantum { cmd } => run_quantum(cmd, cfg),
        Cmd::Virasoro { cmd } => run_virasoro(cmd, cfg),
    }
}

/// Rendered-basis -> coefficient map of an insertion class.
fn class_json(c: &InsClass) -> Result<Value> {
    let ctx = c.ctx();
    let mut map = Map::new();
    for (i, part) in c.parts() {
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let name = InsClass::basis_class(ctx, i, k)?.render();
            map.insert(name, rat_json(coeff));
        }
    }
    Ok(Value::Object(map))
}

fn run_ring(cmd: &RingCmd, cfg: &Config) -> Result<u8> {
    let ctx = cfg.ctx()?;
    match cmd {
        RingCmd::Mult { a, b } => {
            let p = parse(ctx, a)?.product(&parse(ctx, b)?)?;
            let value = json!({"n": cfg.n, "W": cfg.window, "product": class_json(&p)?});
            emit(cfg, p.render(), value);
        }
        RingCmd::Pair { a, b } => {
            let r = parse(ctx, a)?.pairing(&parse(ctx, b)?)?;
            emit(cfg, rat_str(&r), json!({"n": cfg.n, "W": cfg.window, "pairing": rat_json(&r)}));
        }
        RingCmd::Table => {
            let basis = ctx.basis_indices();
            let mut lines = Vec::new();
            let mut entries = Vec::new();
            for &(i, k) in &basis {
                for &(j, l) in &basis {
                    let a = InsClass::basis_class(ctx, i, k)?;
                    let b = InsClass::basis_class(ctx, j, l)?;
                    let p = match a.product(&b) {
                        Ok(p) => p,
                        Err(Error::WindowOverflow { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    lines.push(format!("{} * {} = {}", a.render(), b.render(), p.render()));
                    entries.push(json!({
                        "lhs": a.render(),
                        "rhs": b.render(),
                        "product": class_json(&p)?,
                    }));
                }
            }
            emit(
                cfg,
                lines.join("\n"),
                json!({"n": cfg.n, "W": cfg.window, "entries": entries}),
            );
        }
        RingCmd::Degree { a } => {
            let (d1, d2) = parse(ctx, a)?.bidegree()?;
            emit(
                cfg,
                format!("({d1}, {})", rat_str(&d2)),
                json!({"n": cfg.n, "W": cfg.window, "deg1": d1, "deg2": rat_json(&d2)}),
            );
        }
    }
    Ok(0)
}

fn parse_mu(raw: &Option<String>) -> Result<Vec<i64>> {
    let Some(s) = raw else { return Ok(Vec::new()) };
    let mut mu = Vec::new();
    for (idx, piece) in s.split(',').enumerate() {
        let piece = piece.trim();
        mu.push(piece.parse::<i64>().map_err(|_| Error::Parse {
            msg: format!("bad contact order \"{piece}\" in --mu"),
            pos: idx,
        })?);
    }
    Ok(mu)
}

fn top_type(args: &TopArgs) -> Result<TopType> {
    TopType::new(0, args.legs, args.degree, parse_mu(&args.mu)?)
}

/// Graph record used by `graphs enumerate` and `graphs class`: the graph
/// itself plus its automorphism count, virtual dimension, and
/// obstruction class.
fn graph_record(g: &BipartiteGraph) -> Result<Value> {
    let mut obj = match graph_to_json(g) {
        Value::Object(o) => o,
        _ => unreachable!("graphs serialize as objects"),
    };
    let top = g.topological_type()?;
    obj.insert("aut".into(), json!(g.automorphism_order()));
    obj.insert("vdim".into(), json!(virtual_dim(&top, g.n_amb)));
    obj.insert("class".into(), poly_to_json(&c_g(g)?));
    Ok(Value::Object(obj))
}

fn graph_line(idx: usize, g: &BipartiteGraph) -> Result<String> {
    let top = g.topological_type()?;
    let zero: Vec<String> = g
        .zero
        .iter()
        .map(|v| format!("0(d={}, legs={}, roots={})", v.degree, v.legs.len(),
            v.roots_zero.len() + v.roots_inf_mark.len() + v.roots_inf_node.len()))
        .collect();
    let inf: Vec<String> = g
        .inf
        .iter()
        .map(|v| format!("inf(d={}, legs={}, roots={})", v.degree, v.legs.len(),
            v.roots_mark.len() + v.roots_node.len()))
        .collect();
    Ok(format!(
        "#{idx}: vertices [{}] edges {} |Aut| {} vdim {} class {}",
        zero.iter().chain(inf.iter()).cloned().collect::<Vec<_>>().join(", "),
        g.edges.len(),
        g.automorphism_order(),
        virtual_dim(&top, g.n_amb),
        c_g(g)?.render(),
    ))
}

fn read_graph(path: &PathBuf) -> Result<BipartiteGraph> {
    let body = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Parse {
            msg: format!("cannot read stdin: {e}"),
            pos: 0,
        })?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Error::Parse {
            msg: format!("cannot read {}: {e}", path.display()),
            pos: 0,
        })?
    };
    let value: Value = serde_json::from_str(&body).map_err(|e| Error::Parse {
        msg: format!("bad JSON: {e}"),
        pos: 0,
    })?;
    graph_from_json(&value)
}

fn run_graphs(cmd: &GraphsCmd, cfg: &Config) -> Result<u8> {
    match cmd {
        GraphsCmd::Enumerate { top } => {
            let top = top_type(top)?;
            let list = enumerate(&top, cfg.n)?;
            let mut lines = Vec::new();
            let mut records = Vec::new();
            for (idx, g) in list.iter().enumerate() {
                lines.push(graph_line(idx, g)?);
                records.push(graph_record(g)?);
            }
            emit(cfg, lines.join("\n"), Value::Array(records));
        }
        GraphsCmd::Vdim { top } => {
            let top = top_type(top)?;
            let v = virtual_dim(&top, cfg.n);
            emit(
                cfg,
                v.to_string(),
                json!({
                    "n": cfg.n,
                    "degree": top.degree,
                    "legs": top.n_legs,
                    "mu": top.mu,
                    "vdim": v,
                }),
            );
        }
        GraphsCmd::Class { top, input } => {
            if let Some(path) = input {
                let g = read_graph(path)?;
                emit(cfg, graph_line(0, &g)?, graph_record(&g)?);
            } else {
                let top = top_type(top)?;
                let list = enumerate(&top, cfg.n)?;
                let mut lines = Vec::new();
                let mut records = Vec::new();
                for (idx, g) in list.iter().enumerate() {
                    lines.push(format!("#{idx}: {}", c_g(g)?.render()));
                    records.push(json!({"class": poly_to_json(&c_g(g)?)}));
                }
                emit(cfg, lines.join("\n"), Value::Array(records));
            }
        }
    }
    Ok(0)
}

/// Parses `[POW:]CLASS` into a descendant power and an insertion class.
fn parse_insertion(ctx: PairContext, raw: &str) -> Result<(u32, InsClass)> {
    if let Some((head, tail)) = raw.split_once(':') {
        if let Ok(p) = head.trim().parse::<u32>() {
            return Ok((p, parse(ctx, tail)?));
        }
    }
    Ok((0, parse(ctx, raw)?))
}

fn table_counts(table: &StructureTable) -> (usize, usize) {
    let mut entries = 0;
    let mut determined = 0;
    for (_, list) in table.pairs() {
        for e in list {
            entries += 1;
            if e.status == EntryStatus::Determined {
                determined += 1;
            }
        }
    }
    (entries, determined)
}

fn residual_report(cfg: &Config, what: &str, residual: Option<Rat>, detail: Value) -> u8 {
    match residual {
        Some(r) => {
            let ok = r.is_zero();
            let mut obj = match detail {
                Value::Object(o) => o,
                _ => Map::new(),
            };
            obj.insert("residual".into(), rat_json(&r));
            emit(cfg, format!("{what} residual = {}", rat_str(&r)), Value::Object(obj));
            if ok {
                0
            } else {
                1
            }
        }
        None => {
            let mut obj = match detail {
                Value::Object(o) => o,
                _ => Map::new(),
            };
            obj.insert("residual".into(), Value::Null);
            emit(
                cfg,
                format!("{what} residual undetermined: a needed invariant is outside the supported sector"),
                Value::Object(obj),
            );
            1
        }
    }
}

fn run_quantum(cmd: &QuantumCmd, cfg: &Config) -> Result<u8> {
    let ctx = cfg.ctx()?;
    match cmd {
        QuantumCmd::Product { a, b } => {
            let s = quantum_product_small(&parse(ctx, a)?, &parse(ctx, b)?, cfg.qmax)?;
            let mut terms = Vec::new();
            for (m, c) in s.terms() {
                terms.push(json!({"q": m, "coeffs": class_json(c)?}));
            }
            emit(
                cfg,
                s.render(),
                json!({"n": cfg.n, "W": cfg.window, "Qmax": cfg.qmax, "terms": terms}),
            );
            Ok(0)
        }
        QuantumCmd::Table => {
            let table = solve_structure_constants(cfg.n, cfg.window, cfg.qmax)?;
            let mut lines = Vec::new();
            for ((a, b), list) in table.pairs() {
                let lhs = InsClass::basis_class(ctx, a.0, a.1)?.render();
                let rhs = InsClass::basis_class(ctx, b.0, b.1)?.render();
                for (m, entry) in list.iter().enumerate() {
                    let mut body = Vec::new();
                    for (label, c) in &entry.coeffs {
                        let name = InsClass::basis_class(ctx, label.0, label.1)?.render();
                        body.push(if c == &rat_i(1) {
                            name
                        } else {
                            format!("{}*{}", rat_str(c), name)
                        });
                    }
                    let status = match entry.status {
                        EntryStatus::Determined => "determined",
                        EntryStatus::Undetermined => "undetermined",
                    };
                    let body = if body.is_empty() { "0".into() } else { body.join(" + ") };
                    lines.push(format!("{lhs} * {rhs} | q^{m} = {body} ({status})"));
                }
            }
            emit(cfg, lines.join("\n"), table_to_json(&table)?);
            Ok(0)
        }
        QuantumCmd::Verify => {
            let table = solve_structure_constants(cfg.n, cfg.window, cfg.qmax)?;
            let mismatches = verify_against_oracle(&table)?;
            let (entries, determined) = table_counts(&table);
            let value = json!({
                "n": cfg.n,
                "W": cfg.window,
                "Qmax": cfg.qmax,
                "entries": entries,
                "determined": determined,
                "mismatches": mismatches,
            });
            if mismatches.is_empty() {
                emit(
                    cfg,
                    format!("OK (entries: {entries}, determined: {determined}, mismatches: 0)"),
                    value,
                );
                Ok(0)
            } else {
                let mut text = format!(
                    "FAIL (entries: {entries}, determined: {determined}, mismatches: {})",
                    mismatches.len()
                );
                for m in &mismatches {
                    text.push_str(&format!("\n  {m}"));
                }
                emit(cfg, text, value);
                Ok(4)
            }
        }
        QuantumCmd::Wdvv { degree, a, b, c, d, extras } => {
            let provider = SmallProvider::new(cfg.n)?;
            let four = [
                parse_insertion(ctx, a)?,
                parse_insertion(ctx, b)?,
                parse_insertion(ctx, c)?,
                parse_insertion(ctx, d)?,
            ];
            let extras = extras
                .iter()
                .map(|s| parse_insertion(ctx, s))
                .collect::<Result<Vec<_>>>()?;
            let r = check_wdvv(&provider, *degree, &four, &extras)?;
            Ok(residual_report(cfg, "exchange", r, json!({"n": cfg.n, "degree": degree})))
        }
        QuantumCmd::Trr { degree, insertions } => {
            let provider = SmallProvider::new(cfg.n)?;
            let inputs = insertions
                .iter()
                .map(|s| parse_insertion(ctx, s))
                .collect::<Result<Vec<_>>>()?;
            let r = check_trr(&provider, *degree, &inputs)?;
            Ok(residual_report(cfg, "recursion", r, json!({"n": cfg.n, "degree": degree})))
        }
        QuantumCmd::Threepoint { degree, a, b, c } => {
            let v = three_point_small(*degree, &parse(ctx, a)?, &parse(ctx, b)?, &parse(ctx, c)?)?;
            emit(
                cfg,
                rat_str(&v),
                json!({"n": cfg.n, "degree": degree, "value": rat_json(&v)}),
            );
            Ok(0)
        }
    }
}

fn run_virasoro(cmd: &VirasoroCmd, cfg: &Config) -> Result<u8> {
    let ctx = cfg.ctx()?;
    match cmd {
        VirasoroCmd::Bracket { m, k } => {
            let (ok, columns) = bracket_matches(*m, *k, ctx, cfg.zmin, cfg.zmax)?;
            let coefficient = k - m;
            let target = if coefficient == 0 {
                "0".to_string()
            } else {
                format!("{coefficient}*l_{}", m + k)
            };
            let value = json!({
                "m": m,
                "k": k,
                "coefficient": coefficient,
                "target": if coefficient == 0 { Value::Null } else { json!(format!("l_{}", m + k)) },
                "columns": columns,
                "exact": ok,
            });
            if ok {
                emit(cfg, format!("{target} : exact on interior window"), value);
                Ok(0)
            } else {
                emit(cfg, format!("{target} : MISMATCH on interior window"), value);
                Ok(1)
            }
        }
        VirasoroCmd::Symplectic { m } => {
            let r = check_symplectic(*m, ctx, cfg.zmin, cfg.zmax)?;
            let ok = r.is_zero();
            emit(
                cfg,
                format!("max residual = {}", rat_str(&r)),
                json!({"m": m, "zmin": cfg.zmin, "zmax": cfg.zmax, "max_residual": rat_json(&r)}),
            );
            Ok(if ok { 0 } else { 1 })
        }
        VirasoroCmd::Genus0 { op, tmax, levels } => {
            let m = match op.as_str() {
                "L-1" => -1,
                "L0" => 0,
                _ => unreachable!("clap restricts the values"),
            };
            let provider = SmallProvider::new(cfg.n)?;
            let potential = assemble_potential(&provider, ctx, cfg.qmax, *tmax, *levels)?;
            let operator = build_l(m, ctx, *levels)?;
            let residuals = genus0_residual(&operator, &potential);
            let mut tested = 0usize;
            let mut skipped = 0usize;
            let mut nonzero = Vec::new();
            for ((d, mono), v) in &residuals {
                match v {
                    Some(x) if x.is_zero() => tested += 1,
                    Some(x) => nonzero.push((d, mono, x)),
                    None => skipped += 1,
                }
            }
            let value = json!({
                "n": cfg.n,
                "operator": op,
                "tested": tested + nonzero.len(),
                "skipped": skipped,
                "nonzero": nonzero
                    .iter()
                    .map(|(d, mono, x)| {
                        json!({"q": d, "monomial": mono.iter().map(|v| json!([v.0, v.1, v.2])).collect::<Vec<_>>(), "residual": rat_json(x)})
                    })
                    .collect::<Vec<_>>(),
            });
            if nonzero.is_empty() {
                let text = format!(
                    "all determined coefficients vanish\ntested: {tested}, outside supported sector: {skipped}"
                );
                emit(cfg, text, value);
                Ok(0)
            } else {
                let mut text = format!("{} nonzero residuals", nonzero.len());
                for (d, mono, x) in &nonzero {
                    text.push_str(&format!("\n  q^{d} {mono:?}: {}", rat_str(x)));
                }
                emit(cfg, text, value);
                Ok(1)
            }
        }
        VirasoroCmd::Anomaly { cutoffs } => {
            let (lo, hi) = parse_range(cutoffs)?;
            let mut rows = Vec::new();
            let mut prev: Option<Rat> = None;
            let mut lines = vec!["cutoff\tvalue\tdifference".to_string()];
            for nn in lo..=hi {
                let v = anomaly(cfg.n, nn)?;
                let diff = prev.as_ref().map(|p| &v - p);
                lines.push(format!(
                    "{nn}\t{}\t{}",
                    rat_str(&v),
                    diff.as_ref().map(|d| rat_str(d)).unwrap_or_else(|| "-".into())
                ));
                rows.push(json!({
                    "cutoff": nn,
                    "value": rat_json(&v),
                    "difference": diff.as_ref().map(rat_json).unwrap_or(Value::Null),
                }));
                prev = Some(v);
            }
            emit(cfg, lines.join("\n"), Value::Array(rows));
            Ok(0)
        }
    }
}

fn parse_range(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Parse {
        msg: format!("bad cutoff range \"{s}\", expected A..B"),
        pos: 0,
    };
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = a.trim().parse().map_err(|_| bad())?;
    let hi: i64 = b.trim().parse().map_err(|_| bad())?;
    if lo > hi || lo < 1 {
        return Err(bad());
    }
    Ok((lo, hi))
}
