//! Command-line frontend.
//!
//! Every command prints one JSON document (or DOT text) carrying
//! `format_version` and `seed`. Exit codes: 0 success, 1 bad input or
//! computation error, 2 when a control-set verdict fails or the orbit graph
//! has no unique sink.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::controlsets::{
    analyze, emit_dot, parse_generators, GraphOptions, Group, SemigroupSpec, DEFAULT_MAX_WORD_LEN,
    FORMAT_VERSION,
};
use crate::coxeter::{coxeter_complex, enumerate_group, longest_element, right_cosets, cosets, WeylElement};
use crate::decomp::{bruhat_position, cartan, iwasawa, limit_cartan_rate, spectral_valuations};
use crate::error::{Error, Result};
use crate::flag::{fixed_flags, iterate_to_limit, open_cell_census, relative_position, Flag};
use crate::lattice_tree::{self, ball, ball_dot, classify_isometry, distance, ray_dynamics, TreeRay, TreeVertex};
use crate::matrix::Matrix;
use crate::padic::{arith, ArithOp, PAdic, PAdicContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bruhat-control", version, about = "Semigroup dynamics on p-adic flag manifolds and the Bruhat-Tits tree")]
pub struct Cli {
    /// Seed for randomized steps; recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Print warnings and summaries to stderr.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// p-adic numbers at fixed precision.
    Padic(PadicArgs),
    /// Weyl groups of type A.
    Weyl(WeylArgs),
    /// The Bruhat-Tits tree of SL2(Q_p).
    Tree(TreeArgs),
    /// Iwasawa, Cartan and Bruhat decompositions and spectral data.
    Decomp(DecompArgs),
    /// Flags mod p^N.
    Flag(FlagArgs),
    /// Control sets of a semigroup on the level-N flag set.
    ControlSets(ControlSetArgs),
}

#[derive(Debug, Args)]
pub struct PadicArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub precision: u32,
    #[command(subcommand)]
    pub op: PadicOp,
}

#[derive(Debug, Subcommand)]
pub enum PadicOp {
    /// Expansion of a rational `a/b`.
    Expand { value: String },
    /// `add`, `sub` or `mul` of two rationals.
    Arith { op: String, x: String, y: String },
    Invert { value: String },
}

#[derive(Debug, Args)]
pub struct WeylArgs {
    /// Size `n` of the permutation group `W(A_{n-1})`.
    #[arg(long)]
    pub n: usize,
    #[command(subcommand)]
    pub op: WeylOp,
}

#[derive(Debug, Subcommand)]
pub enum WeylOp {
    /// All elements in length-lex order.
    Elements,
    Longest,
    /// Cosets of the special subgroup `W(J)`, `J` a comma-separated list.
    Cosets {
        #[arg(long, value_delimiter = ',')]
        j: Vec<usize>,
        #[arg(long)]
        right: bool,
    },
    Complex,
    /// Reduced word, length and one-line form of an element.
    Element { element: String },
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[arg(long)]
    pub p: u64,
    #[command(subcommand)]
    pub op: TreeOp,
}

#[derive(Debug, Subcommand)]
pub enum TreeOp {
    Classify {
        #[arg(long)]
        matrix: String,
    },
    /// Vertices written `(a, d, b)`.
    Distance {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    Act {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        vertex: String,
    },
    Ball {
        #[arg(long)]
        center: Option<String>,
        #[arg(long)]
        radius: u64,
        #[arg(long)]
        dot: bool,
    },
    /// Nesting of `g^k r` for the ray from the base vertex to the end `[x:y]`.
    Dynamics {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        end: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

#[derive(Debug, Args)]
pub struct DecompArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub matrix: String,
    #[command(subcommand)]
    pub op: DecompOp,
}

#[derive(Debug, Subcommand)]
pub enum DecompOp {
    Iwasawa,
    Cartan,
    Bruhat,
    Spectral,
    /// Cartan exponents of `g^k` divided by `k`.
    LimitRate {
        #[arg(long, default_value_t = 48)]
        kmax: u32,
    },
}

#[derive(Debug, Args)]
pub struct FlagArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub precision: u32,
    #[command(subcommand)]
    pub op: FlagOp,
}

#[derive(Debug, Subcommand)]
pub enum FlagOp {
    /// Flags are written `[x0:x1]` or `[x0:x1:x2|y0:y1:y2]`.
    Act {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        flag: String,
    },
    Position {
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
    },
    /// Counts of flags by relative position to the standard flag.
    Census {
        #[arg(long)]
        n: usize,
        /// Sample this many random flags instead of enumerating.
        #[arg(long)]
        sample: Option<usize>,
    },
    Fixed {
        #[arg(long)]
        matrix: String,
    },
    Iterate {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        flag: String,
        #[arg(long, default_value_t = 40)]
        kmax: usize,
    },
}

#[derive(Debug, Args)]
pub struct ControlSetArgs {
    /// JSON spec file `{p, precision, group, generators, max_word_len}`.
    #[arg(long, conflicts_with_all = ["p", "precision", "group"])]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub precision: Option<u32>,
    #[arg(long)]
    pub group: Option<String>,
    /// Generators: a file or inline JSON, either a list of matrices or a spec
    /// object with a `generators` field.
    #[arg(long)]
    pub gens: Option<String>,
    #[arg(long)]
    pub max_word_len: Option<usize>,
    /// Write the orbit graph in DOT format to this path.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    #[arg(long)]
    pub cap: Option<usize>,
    /// Random seed flags added to a seeded node space.
    #[arg(long)]
    pub random_seeds: Option<usize>,
    #[arg(long)]
    pub max_extra_depth: Option<u32>,
}

struct Outcome {
    text: String,
    code: i32,
    notes: Vec<String>,
}

impl Outcome {
    fn json(v: Value) -> Self {
        Outcome {
            text: serde_json::to_string_pretty(&v).expect("serializable") + "\n",
            code: EXIT_OK,
            notes: Vec::new(),
        }
    }
}

fn header(seed: u64, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("format_version".into(), json!(FORMAT_VERSION));
    m.insert("seed".into(), json!(seed));
    m.insert("command".into(), json!(command));
    m
}

fn report(seed: u64, command: &str, body: Value) -> Outcome {
    let mut m = header(seed, command);
    if let Value::Object(b) = body {
        m.extend(b);
    } else {
        m.insert("result".into(), body);
    }
    Outcome::json(Value::Object(m))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn padic_json(x: &PAdic) -> Value {
    json!({
        "valuation": x.valuation(),
        "digits": x.digits(),
        "precision": x.precision(),
        "text": x.to_string(),
    })
}

fn weyl_json(w: &WeylElement) -> Value {
    json!({
        "word": w.word_string(),
        "one_line": w.one_line(),
        "length": w.length(),
    })
}

fn run_padic(a: &PadicArgs, seed: u64) -> Result<Outcome> {
    let ctx = PAdicContext::new(a.p, a.precision)?;
    let body = match &a.op {
        PadicOp::Expand { value } => json!({ "op": "expand", "value": padic_json(&ctx.parse_rational(value)?) }),
        PadicOp::Arith { op, x, y } => {
            let o: ArithOp = op.parse()?;
            let (x, y) = (ctx.parse_rational(x)?, ctx.parse_rational(y)?);
            json!({ "op": op, "value": padic_json(&arith(o, &x, &y)?) })
        }
        PadicOp::Invert { value } => {
            json!({ "op": "invert", "value": padic_json(&ctx.parse_rational(value)?.invert()?) })
        }
    };
    Ok(report(seed, "padic", body))
}

fn run_weyl(a: &WeylArgs, seed: u64) -> Result<Outcome> {
    if a.n < 1 {
        return Err(Error::parse("n", "must be at least 1"));
    }
    let n = a.n;
    let body = match &a.op {
        WeylOp::Elements => {
            let g = enumerate_group(n);
            json!({ "order": g.len(), "elements": g.iter().map(weyl_json).collect::<Vec<_>>() })
        }
        WeylOp::Longest => weyl_json(&longest_element(n)),
        WeylOp::Cosets { j, right } => {
            if let Some(bad) = j.iter().find(|&&i| i == 0 || i >= n) {
                return Err(Error::parse("j", format!("generator index {bad} outside 1..{}", n - 1)));
            }
            let cs = if *right { right_cosets(j, n) } else { cosets(j, n) };
            json!({ "side": if *right { "right" } else { "left" }, "count": cs.len(), "cosets": to_value(&cs) })
        }
        WeylOp::Complex => to_value(&coxeter_complex(n)),
        WeylOp::Element { element } => weyl_json(&WeylElement::parse(n, element)?),
    };
    Ok(report(seed, "weyl", body))
}

fn require_prime(p: u64) -> Result<()> {
    if crate::rational::is_prime(p) {
        Ok(())
    } else {
        Err(Error::parse("p", format!("{p} is not prime")))
    }
}

fn run_tree(a: &TreeArgs, seed: u64) -> Result<Outcome> {
    let p = a.p;
    require_prime(p)?;
    let body = match &a.op {
        TreeOp::Classify { matrix } => to_value(&classify_isometry(&Matrix::parse(matrix)?, p)?),
        TreeOp::Distance { u, v } => {
            let (u, v) = (TreeVertex::parse(p, u)?, TreeVertex::parse(p, v)?);
            json!({ "distance": distance(&u, &v)? })
        }
        TreeOp::Act { matrix, vertex } => {
            let v = TreeVertex::parse(p, vertex)?;
            json!({ "image": lattice_tree::act(&Matrix::parse(matrix)?, &v)? })
        }
        TreeOp::Ball { center, radius, dot } => {
            let c = match center {
                Some(s) => TreeVertex::parse(p, s)?,
                None => TreeVertex::base(p),
            };
            if *dot {
                return Ok(Outcome {
                    text: ball_dot(&c, *radius)?,
                    code: EXIT_OK,
                    notes: Vec::new(),
                });
            }
            let b = ball(&c, *radius)?;
            json!({ "center": c, "radius": radius, "count": b.len(), "vertices": b })
        }
        TreeOp::Dynamics { matrix, end, depth } => {
            let g = Matrix::parse(matrix)?;
            let f = Flag::parse(p, 1, end).or_else(|_| parse_end(p, end))?;
            let r = TreeRay::from_flag(TreeVertex::base(p), &f)?;
            to_value(&ray_dynamics(&g, &r, *depth)?)
        }
    };
    Ok(report(seed, "tree", body))
}

/// Ends given with more digits than `p` allows at level 1, e.g. `[1:7]`.
fn parse_end(p: u64, s: &str) -> Result<Flag> {
    let body = s
        .trim()
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| Error::parse("end", s.to_string()))?;
    let v = body
        .split(':')
        .map(|x| crate::rational::parse_rational(x.trim()))
        .collect::<Result<Vec<_>>>()?;
    let digits = 30;
    Flag::new(p, digits, &v, None)
}

fn run_decomp(a: &DecompArgs, seed: u64) -> Result<Outcome> {
    let p = a.p;
    require_prime(p)?;
    let g = Matrix::parse(&a.matrix)?;
    let body = match &a.op {
        DecompOp::Iwasawa => {
            let f = iwasawa(&g, p)?;
            json!({ "k": f.k.to_json(), "t": f.t.to_json(), "u": f.u.to_json() })
        }
        DecompOp::Cartan => {
            let f = cartan(&g, p)?;
            json!({ "k1": f.k1.to_json(), "a": f.a.to_json(), "k2": f.k2.to_json(), "exponents": f.exponents })
        }
        DecompOp::Bruhat => weyl_json(&bruhat_position(&g)?),
        DecompOp::Spectral => to_value(&spectral_valuations(&g, p)?),
        DecompOp::LimitRate { kmax } => {
            let r = limit_cartan_rate(&g, p, *kmax)?;
            json!({ "kmax": kmax, "rates": r.iter().map(|x| x.to_string()).collect::<Vec<_>>() })
        }
    };
    Ok(report(seed, "decomp", body))
}

fn run_flag(a: &FlagArgs, seed: u64) -> Result<Outcome> {
    let (p, n) = (a.p, a.precision);
    require_prime(p)?;
    if n == 0 {
        return Err(Error::parse("precision", "must be at least 1"));
    }
    let body = match &a.op {
        FlagOp::Act { matrix, flag } => {
            let f = Flag::parse(p, n, flag)?;
            let img = f.act(&Matrix::parse(matrix)?)?;
            json!({ "image": img, "precision": img.precision() })
        }
        FlagOp::Position { first, second } => {
            let w = relative_position(&Flag::parse(p, n, first)?, &Flag::parse(p, n, second)?)?;
            weyl_json(&w)
        }
        FlagOp::Census { n: dim, sample } => {
            let reference = Flag::standard(*dim, p, n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let counts = match sample {
                Some(k) => open_cell_census(&reference, Some((*k, &mut rng)))?,
                None => open_cell_census::<ChaCha8Rng>(&reference, None)?,
            };
            let total: usize = counts.values().sum();
            json!({ "total": total, "counts": counts })
        }
        FlagOp::Fixed { matrix } => {
            let ff = fixed_flags(&Matrix::parse(matrix)?, p, n)?;
            Value::Array(
                ff.iter()
                    .map(|(w, f)| json!({ "w": w.word_string(), "flag": f }))
                    .collect(),
            )
        }
        FlagOp::Iterate { matrix, flag, kmax } => {
            let f = Flag::parse(p, n, flag)?;
            to_value(&iterate_to_limit(&Matrix::parse(matrix)?, &f, n, *kmax)?)
        }
    };
    Ok(report(seed, "flag", body))
}

/// Inline JSON or a path to a JSON file.
fn read_json_arg(field: &str, s: &str) -> Result<Value> {
    let text = if s.trim_start().starts_with(['[', '{']) {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| Error::parse(field, format!("{s}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::parse(field, e.to_string()))
}

fn control_spec(a: &ControlSetArgs) -> Result<SemigroupSpec> {
    if let Some(path) = &a.spec {
        let text = std::fs::read_to_string(path).map_err(|e| Error::parse("spec", format!("{}: {e}", path.display())))?;
        let mut spec = SemigroupSpec::from_json(&text)?;
        if let Some(m) = a.max_word_len {
            spec.max_word_len = m;
        }
        return Ok(spec);
    }
    let p = a.p.ok_or_else(|| Error::parse("p", "required without --spec"))?;
    let precision = a.precision.ok_or_else(|| Error::parse("precision", "required without --spec"))?;
    let group: Group = a.group.as_deref().ok_or_else(|| Error::parse("group", "required without --spec"))?.parse()?;
    let gens = a.gens.as_deref().ok_or_else(|| Error::parse("generators", "required without --spec"))?;
    let v = read_json_arg("generators", gens)?;
    let (list, file_len) = match &v {
        Value::Object(o) => (
            o.get("generators").cloned().ok_or_else(|| Error::parse("generators", "object without a generators field"))?,
            o.get("max_word_len").and_then(Value::as_u64).map(|x| x as usize),
        ),
        _ => (v.clone(), None),
    };
    let generators = parse_generators(&list)?;
    let max_word_len = a.max_word_len.or(file_len).unwrap_or(DEFAULT_MAX_WORD_LEN);
    SemigroupSpec::new(group, p, precision, generators, max_word_len)
}

fn run_control_sets(a: &ControlSetArgs, seed: u64) -> Result<Outcome> {
    let spec = control_spec(a)?;
    let mut opts = GraphOptions {
        seed,
        max_extra_depth: a.max_extra_depth,
        ..GraphOptions::default()
    };
    if let Some(c) = a.cap {
        opts.cap = c;
    }
    if let Some(r) = a.random_seeds {
        opts.random_seeds = r;
    }
    let analysis = analyze(&spec, &opts)?;
    if let Some(path) = &a.dot {
        let inv: Option<Vec<usize>> = analysis
            .report
            .invariant()
            .map(|c| c.nodes.iter().filter_map(|f| analysis.graph.node_index(f)).collect());
        std::fs::write(path, emit_dot(&analysis.graph, inv.as_deref()))
            .map_err(|e| Error::parse("dot", format!("{}: {e}", path.display())))?;
    }
    let mut body = to_value(&analysis.report);
    if let Value::Object(m) = &mut body {
        m.insert("command".into(), json!("control-sets"));
        m.insert("spec".into(), spec.to_json());
    }
    let mut out = Outcome::json(body);
    out.notes = analysis.report.warnings.clone();
    out.notes.push(format!(
        "{} nodes, {} edges, {} control sets",
        analysis.report.node_count,
        analysis.report.edge_count,
        analysis.report.control_sets.len()
    ));
    if !analysis.report.consistent() {
        out.code = EXIT_VERDICT;
        out.notes.push("a control-set verdict failed; see \"verdicts\"".to_string());
    }
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoSink | Error::MultipleSinks(_) => EXIT_VERDICT,
        _ => EXIT_INPUT,
    }
}

/// Runs one command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let seed = cli.seed;
    let result = match &cli.command {
        Command::Padic(a) => run_padic(a, seed),
        Command::Weyl(a) => run_weyl(a, seed),
        Command::Tree(a) => run_tree(a, seed),
        Command::Decomp(a) => run_decomp(a, seed),
        Command::Flag(a) => run_flag(a, seed),
        Command::ControlSets(a) => run_control_sets(a, seed),
    };
    match result {
        Ok(out) => {
            if cli.verbose > 0 {
                for n in &out.notes {
                    let _ = writeln!(stderr, "{n}");
                }
            }
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &out.text).map_err(|e| e.to_string()),
                None => stdout.write_all(out.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: output: {e}");
                    EXIT_INPUT
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
