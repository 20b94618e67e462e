//! Control sets of a semigroup acting on the level-`N` flag set.
//!
//! Every cell of the quotient is a `K_N`-orbit, so the semigroup is fattened
//! by `K_N`: there is an edge `x -> y` labeled `i` when `g_i` maps some flag of
//! cell `x` into cell `y`. Control sets are the cyclic strongly connected
//! components of this graph and the invariant control set is the unique sink.

mod engine;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coxeter::{enumerate_group, generated_by, WeylElement};
use crate::decomp::{require_special_linear, spectral_valuations};
use crate::error::{Error, Result};
use crate::flag::{all_flags, fixed_flags, random_flag, Flag};
use crate::matrix::Matrix;
use crate::rational::is_prime;

use engine::{Cell, Engine};

pub const FORMAT_VERSION: u32 = 1;

/// Describes the discretization in every report.
pub const MODEL_NOTE: &str = "level-N quotient: nodes are flags mod p^N (K_N-orbits); \
an edge x -(i)-> y means g_i maps some flag of cell x into cell y, so the semigroup acts \
fattened by K_N; control sets are cyclic strongly connected components and the invariant \
control set is the unique sink component";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    SL2,
    SL3,
}

impl Group {
    pub fn n(self) -> usize {
        match self {
            Group::SL2 => 2,
            Group::SL3 => 3,
        }
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SL2" | "SL_2" => Ok(Group::SL2),
            "SL3" | "SL_3" => Ok(Group::SL3),
            _ => Err(Error::parse("group", format!("expected SL2 or SL3, got {s:?}"))),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemigroupSpec {
    pub group: Group,
    pub p: u64,
    pub precision: u32,
    pub generators: Vec<Matrix>,
    pub max_word_len: usize,
}

pub const DEFAULT_MAX_WORD_LEN: usize = 3;

impl SemigroupSpec {
    pub fn new(group: Group, p: u64, precision: u32, generators: Vec<Matrix>, max_word_len: usize) -> Result<Self> {
        let s = SemigroupSpec {
            group,
            p,
            precision,
            generators,
            max_word_len,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::parse("p", format!("{} is not prime", self.p)));
        }
        if self.precision == 0 {
            return Err(Error::parse("precision", "must be at least 1"));
        }
        if self.generators.is_empty() {
            return Err(Error::parse("generators", "at least one generator is required"));
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.dim() != self.group.n() {
                return Err(Error::parse(
                    format!("generators[{i}]"),
                    format!("expected {0}x{0}, got {1}x{1}", self.group.n(), g.dim()),
                ));
            }
            require_special_linear(g, &format!("generators[{i}]"))?;
        }
        Ok(())
    }

    /// Parses `{p, precision, group, generators, max_word_len}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::parse("spec", e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| Error::parse("spec", "expected a JSON object"))?;
        let p = obj
            .get("p")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::parse("p", "missing or not a positive integer"))?;
        let precision = obj
            .get("precision")
            .and_then(Value::as_u64)
            .and_then(|x| u32::try_from(x).ok())
            .ok_or_else(|| Error::parse("precision", "missing or not a positive integer"))?;
        let group: Group = obj
            .get("group")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::parse("group", "missing or not a string"))?
            .parse()?;
        let gens = obj
            .get("generators")
            .ok_or_else(|| Error::parse("generators", "missing"))?;
        let generators = parse_generators(gens)?;
        let max_word_len = match obj.get("max_word_len") {
            None => DEFAULT_MAX_WORD_LEN,
            Some(x) => x
                .as_u64()
                .ok_or_else(|| Error::parse("max_word_len", "not a nonnegative integer"))? as usize,
        };
        Self::new(group, p, precision, generators, max_word_len)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "group": self.group,
            "p": self.p,
            "precision": self.precision,
            "generators": self.generators.iter().map(Matrix::to_json).collect::<Vec<_>>(),
            "max_word_len": self.max_word_len,
        })
    }

    /// The same semigroup at another level.
    pub fn at_precision(&self, precision: u32) -> Self {
        SemigroupSpec {
            precision,
            ..self.clone()
        }
    }

    /// `k g k^-1` for every generator.
    pub fn conjugate(&self, k: &Matrix) -> Result<Self> {
        let kinv = k.inverse()?;
        let generators = self.generators.iter().map(|g| k.mul(g).mul(&kinv)).collect();
        Self::new(self.group, self.p, self.precision, generators, self.max_word_len)
    }
}

/// A JSON array of matrices; each matrix an array of rows of integers or
/// rational strings.
pub fn parse_generators(v: &Value) -> Result<Vec<Matrix>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse("generators", "expected an array of matrices"))?;
    arr.iter()
        .enumerate()
        .map(|(i, m)| {
            Matrix::from_json(m).map_err(|e| match e {
                Error::Parse { message, .. } => Error::parse(format!("generators[{i}]"), message),
                other => other,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOptions {
    /// Largest node count allowed.
    pub cap: usize,
    /// Seed for the random flags of a seeded (SL3) node space.
    pub seed: u64,
    pub random_seeds: usize,
    /// Extra refinement levels allowed when certifying edges; `None` picks the
    /// largest digit loss of any generator, which always suffices.
    pub max_extra_depth: Option<u32>,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            cap: 30_000,
            seed: 0,
            random_seeds: 200,
            max_extra_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub generator: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitGraph {
    pub group: Group,
    pub p: u64,
    pub precision: u32,
    pub generator_count: usize,
    /// Sorted canonical flags.
    pub nodes: Vec<Flag>,
    /// Sorted, without duplicates.
    pub edges: Vec<Edge>,
    /// Cells whose images could not be certified; excluded from the graph.
    pub exhausted: Vec<Flag>,
    /// `None` for the full flag set, else the number of seeds of the closure.
    pub seeds: Option<usize>,
}

impl OrbitGraph {
    pub fn node_index(&self, f: &Flag) -> Option<usize> {
        self.nodes.binary_search(f).ok()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.edges.partition_point(|e| e.from < i);
        self.edges[start..].iter().take_while(move |e| e.from == i).map(|e| e.to)
    }

    /// All strongly connected components, each sorted, ordered by first node.
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        let mut g: DiGraph<(), ()> = DiGraph::new();
        let idx: Vec<_> = (0..self.nodes.len()).map(|_| g.add_node(())).collect();
        for e in &self.edges {
            g.update_edge(idx[e.from], idx[e.to], ());
        }
        let mut out: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        out.sort();
        out
    }

    fn has_internal_edge(&self, comp: &[usize]) -> bool {
        let set: BTreeSet<usize> = comp.iter().copied().collect();
        comp.iter().any(|&i| self.successors(i).any(|j| set.contains(&j)))
    }
}

/// Digits a generator can destroy in one application: `-v(g) - v(g^-1)`.
fn digit_loss(g: &Matrix, p: u64) -> Result<u32> {
    let a = g.min_valuation(p).ok_or(Error::DivisionByZero)?;
    let b = g.inverse()?.min_valuation(p).ok_or(Error::DivisionByZero)?;
    Ok((-(a + b)).max(0) as u32)
}

/// Level-`N` targets of `g_i` applied to a level-`N` cell, by refining the
/// cell until each piece has a certified image. `None` when refinement would
/// exceed the engine's depth.
fn targets(engine: &Engine, cell: &Cell, gi: usize, level: u32) -> Option<BTreeSet<Cell>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![*cell];
    while let Some(c) = stack.pop() {
        match engine.act(&c, gi) {
            Some(img) if img.lvl >= level => {
                out.insert(engine.truncate(&img, level));
            }
            _ => {
                if c.lvl >= engine.top() {
                    return None;
                }
                stack.extend(engine.children(&c));
            }
        }
    }
    Some(out)
}

/// The orbit graph on the level-`N` flag set: exhaustive for `SL2`, and for
/// `SL3` the closure of `extra_seeds` plus `opts.random_seeds` random flags.
pub fn build_orbit_graph(spec: &SemigroupSpec, extra_seeds: &[Flag], opts: &GraphOptions) -> Result<OrbitGraph> {
    spec.validate()?;
    let (n, p, level) = (spec.group.n(), spec.p, spec.precision);
    let extra = match opts.max_extra_depth {
        Some(e) => e,
        None => spec
            .generators
            .iter()
            .map(|g| digit_loss(g, p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0),
    };
    let engine = Engine::new(n, p, level + extra, &spec.generators)?;
    let m = spec.generators.len();

    let mut index: HashMap<Cell, usize> = HashMap::new();
    let mut cells: Vec<Cell> = Vec::new();
    let mut raw_edges: Vec<(usize, Cell, usize)> = Vec::new();
    let mut exhausted: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let seeds = match spec.group {
        Group::SL2 => {
            let total = (p.pow(level) + p.pow(level - 1)) as usize;
            if total > opts.cap {
                return Err(Error::CapExceeded { nodes: total, cap: opts.cap });
            }
            for f in all_flags(n, p, level)? {
                let c = engine.cell_of(&f);
                index.insert(c, cells.len());
                cells.push(c);
            }
            None
        }
        Group::SL3 => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut seeds: Vec<Flag> = extra_seeds.iter().map(|f| f.truncate(level)).collect::<Result<_>>()?;
            for _ in 0..opts.random_seeds {
                seeds.push(random_flag(&mut rng, n, p, level)?);
            }
            seeds.sort();
            seeds.dedup();
            for f in &seeds {
                let c = engine.cell_of(f);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(c) {
                    e.insert(cells.len());
                    cells.push(c);
                }
            }
            Some(seeds.len())
        }
    };
    queue.extend(0..cells.len());
    while let Some(i) = queue.pop_front() {
        let cell = cells[i];
        for gi in 0..m {
            let Some(ts) = targets(&engine, &cell, gi, level) else {
                exhausted.insert(i);
                continue;
            };
            for t in ts {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(t) {
                    if cells.len() >= opts.cap {
                        return Err(Error::CapExceeded {
                            nodes: cells.len() + 1,
                            cap: opts.cap,
                        });
                    }
                    e.insert(cells.len());
                    cells.push(t);
                    queue.push_back(cells.len() - 1);
                }
                raw_edges.push((i, t, gi));
            }
        }
    }

    let flags: Vec<Flag> = cells.iter().map(|c| engine.flag_of(c)).collect();
    let mut order: Vec<usize> = (0..cells.len()).filter(|i| !exhausted.contains(i)).collect();
    order.sort_by(|&a, &b| flags[a].cmp(&flags[b]));
    let mut new_index = vec![usize::MAX; cells.len()];
    for (k, &i) in order.iter().enumerate() {
        new_index[i] = k;
    }
    let mut edges: Vec<Edge> = raw_edges
        .into_iter()
        .filter_map(|(i, t, gi)| {
            let j = new_index[index[&t]];
            let i = new_index[i];
            (i != usize::MAX && j != usize::MAX).then_some(Edge {
                from: i,
                to: j,
                generator: gi,
            })
        })
        .collect();
    edges.sort();
    edges.dedup();
    Ok(OrbitGraph {
        group: spec.group,
        p,
        precision: level,
        generator_count: m,
        nodes: order.iter().map(|&i| flags[i].clone()).collect(),
        edges,
        exhausted: exhausted.iter().map(|&i| flags[i].clone()).collect(),
        seeds,
    })
}

/// Cyclic SCCs (several nodes, or one node with a self-loop), sorted.
pub fn control_sets(graph: &OrbitGraph) -> Vec<Vec<usize>> {
    graph
        .sccs()
        .into_iter()
        .filter(|c| graph.has_internal_edge(c))
        .collect()
}

/// SCCs with no edge leaving them.
pub fn sink_components(graph: &OrbitGraph) -> Vec<Vec<usize>> {
    graph
        .sccs()
        .into_iter()
        .filter(|c| {
            let set: BTreeSet<usize> = c.iter().copied().collect();
            c.iter().all(|&i| graph.successors(i).all(|j| set.contains(&j)))
        })
        .collect()
}

/// The unique sink component.
pub fn invariant_control_set(graph: &OrbitGraph) -> Result<Vec<usize>> {
    let mut sinks = sink_components(graph);
    match sinks.len() {
        0 => Err(Error::NoSink),
        1 => Ok(sinks.pop().unwrap()),
        _ => Err(Error::MultipleSinks(
            sinks
                .iter()
                .map(|s| s.iter().map(|&i| graph.nodes[i].label()).collect())
                .collect(),
        )),
    }
}

/// Nodes of a control set with an incoming edge from inside the set.
pub fn transitivity_core(graph: &OrbitGraph, set: &[usize]) -> Vec<usize> {
    let members: BTreeSet<usize> = set.iter().copied().collect();
    let mut core: BTreeSet<usize> = BTreeSet::new();
    for &i in set {
        for j in graph.successors(i) {
            if members.contains(&j) {
                core.insert(j);
            }
        }
    }
    core.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Generator indices, 0-based, applied as the product `g_w[0] g_w[1] ...`.
    pub word: Vec<usize>,
    pub matrix: Matrix,
}

impl Witness {
    pub fn word_string(&self) -> String {
        self.word
            .iter()
            .map(|i| format!("g{}", i + 1))
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Regular hyperbolic products of at most `max_word_len` generators, in
/// length-lex order of words, exact duplicates removed.
pub fn find_regular_hyperbolic(spec: &SemigroupSpec) -> Result<Vec<Witness>> {
    let m = spec.generators.len();
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut layer: Vec<(Vec<usize>, Matrix)> = vec![(Vec::new(), Matrix::identity(spec.group.n()))];
    for _ in 0..spec.max_word_len {
        let mut next = Vec::with_capacity(layer.len() * m);
        for (w, g) in &layer {
            for i in 0..m {
                let mut w2 = w.clone();
                w2.push(i);
                next.push((w2, g.mul(&spec.generators[i])));
            }
        }
        for (w, g) in &next {
            let key: Vec<String> = g.entries().iter().map(|x| x.to_string()).collect();
            if !seen.insert(key) {
                continue;
            }
            let sd = spectral_valuations(g, spec.p)?;
            if sd.regular && sd.hyperbolic {
                out.push(Witness {
                    word: w.clone(),
                    matrix: g.clone(),
                });
            }
        }
        layer = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict { ok, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub witness_independent: Verdict,
    pub attractors_in_invariant_set: Verdict,
    pub subgroup: Verdict,
    pub generated_by_simple_reflections: Verdict,
    pub coset_partition: Verdict,
}

impl Verdicts {
    pub fn all_ok(&self) -> bool {
        [
            &self.witness_independent,
            &self.attractors_in_invariant_set,
            &self.subgroup,
            &self.generated_by_simple_reflections,
            &self.coset_partition,
        ]
        .iter()
        .all(|v| v.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlSetEntry {
    pub id: usize,
    pub nodes: Vec<Flag>,
    pub core: Vec<Flag>,
    pub is_invariant: bool,
    pub w_labels: Vec<WeylElement>,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessEntry {
    pub word: String,
    pub spectral_valuations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlSetReport {
    pub format_version: u32,
    pub seed: u64,
    pub model: String,
    pub group: Group,
    pub p: u64,
    pub precision: u32,
    pub node_space: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub exhausted_nodes: Vec<Flag>,
    pub classification: String,
    pub witnesses: Vec<WitnessEntry>,
    pub control_sets: Vec<ControlSetEntry>,
    pub weyl_subgroup: Option<Vec<WeylElement>>,
    pub cosets: Option<Vec<Vec<WeylElement>>>,
    pub verdicts: Option<Verdicts>,
    pub warnings: Vec<String>,
}

impl ControlSetReport {
    /// False when some verdict failed.
    pub fn consistent(&self) -> bool {
        self.verdicts.as_ref().is_none_or(Verdicts::all_ok)
    }

    pub fn invariant(&self) -> Option<&ControlSetEntry> {
        self.control_sets.iter().find(|c| c.is_invariant)
    }
}

/// Right cosets `H w` of a subset `H` of `W`, each sorted, in order of their
/// least element.
pub fn right_cosets_of(h: &BTreeSet<WeylElement>, n: usize) -> Vec<Vec<WeylElement>> {
    let mut seen: BTreeSet<WeylElement> = BTreeSet::new();
    let mut out = Vec::new();
    for w in enumerate_group(n) {
        if seen.contains(&w) {
            continue;
        }
        let mut c: Vec<WeylElement> = h.iter().map(|s| s.multiply(&w)).collect();
        c.sort_by_key(|a| (a.length(), a.reduced_word()));
        c.dedup();
        seen.extend(c.iter().cloned());
        out.push(c);
    }
    out
}

/// Labels control sets by fixed-flag types of the witnesses and checks the
/// structure of `W(S)`.
pub fn label_and_weyl(
    graph: &OrbitGraph,
    witnesses: &[Witness],
    seed: u64,
) -> Result<ControlSetReport> {
    let n = graph.group.n();
    let group = enumerate_group(n);
    let sets = control_sets(graph);
    let sccs = graph.sccs();
    let mut comp_of = vec![usize::MAX; graph.nodes.len()];
    for (k, c) in sccs.iter().enumerate() {
        for &i in c {
            comp_of[i] = k;
        }
    }
    let set_of_comp: BTreeMap<usize, usize> = sets
        .iter()
        .enumerate()
        .map(|(id, s)| (comp_of[s[0]], id))
        .collect();
    let mut warnings = Vec::new();
    if !graph.exhausted.is_empty() {
        warnings.push(format!(
            "{} cells exceeded the refinement depth and were excluded",
            graph.exhausted.len()
        ));
    }
    let mut entries: Vec<ControlSetEntry> = sets
        .iter()
        .enumerate()
        .map(|(id, s)| ControlSetEntry {
            id,
            nodes: s.iter().map(|&i| graph.nodes[i].clone()).collect(),
            core: transitivity_core(graph, s).iter().map(|&i| graph.nodes[i].clone()).collect(),
            is_invariant: false,
            w_labels: Vec::new(),
            witnesses: Vec::new(),
        })
        .collect();
    let node_space = match graph.seeds {
        None => "exhaustive".to_string(),
        Some(k) => format!("closure of {k} seed flags (fixed flags of witnesses and random flags)"),
    };
    let mut report = ControlSetReport {
        format_version: FORMAT_VERSION,
        seed,
        model: MODEL_NOTE.to_string(),
        group: graph.group,
        p: graph.p,
        precision: graph.precision,
        node_space,
        node_count: graph.nodes.len(),
        edge_count: graph.edges.len(),
        exhausted_nodes: graph.exhausted.clone(),
        classification: String::new(),
        witnesses: Vec::new(),
        control_sets: Vec::new(),
        weyl_subgroup: None,
        cosets: None,
        verdicts: None,
        warnings: Vec::new(),
    };

    if witnesses.is_empty() {
        report.classification =
            "no hyperbolic witness; semigroup classifies as open subgroup".to_string();
        report.control_sets = entries;
        report.warnings = warnings;
        return Ok(report);
    }
    report.classification = "contains a regular hyperbolic element".to_string();

    let sink = invariant_control_set(graph)?;
    let sink_comp = comp_of[sink[0]];
    if let Some(&id) = set_of_comp.get(&sink_comp) {
        entries[id].is_invariant = true;
    }

    // labels[w] = component per witness
    let mut labels: Vec<Vec<Option<usize>>> = vec![Vec::new(); group.len()];
    for h in witnesses {
        let sd = spectral_valuations(&h.matrix, graph.p)?;
        report.witnesses.push(WitnessEntry {
            word: h.word_string(),
            spectral_valuations: sd.valuations.iter().map(|r| r.to_string()).collect(),
        });
        let ff = fixed_flags(&h.matrix, graph.p, graph.precision)?;
        for (wi, (w, f)) in ff.iter().enumerate() {
            debug_assert_eq!(w, &group[wi]);
            let comp = graph.node_index(f).map(|i| comp_of[i]);
            if comp.is_none() {
                warnings.push(format!("b({}, {}) = {} is not a node", h.word_string(), w, f));
            }
            labels[wi].push(comp);
        }
    }

    let mut disagreements = Vec::new();
    let mut label_of: Vec<Option<usize>> = Vec::with_capacity(group.len());
    for (wi, ls) in labels.iter().enumerate() {
        let distinct: BTreeSet<&Option<usize>> = ls.iter().collect();
        if distinct.len() > 1 {
            let who: Vec<String> = witnesses
                .iter()
                .zip(ls)
                .map(|(h, l)| match l {
                    Some(c) => format!("{} -> {}", h.word_string(), set_name(&set_of_comp, *c)),
                    None => format!("{} -> missing", h.word_string()),
                })
                .collect();
            disagreements.push(format!("{}: {}", group[wi], who.join(", ")));
        }
        label_of.push(ls[0]);
    }
    for (wi, l) in label_of.iter().enumerate() {
        if let Some(c) = l {
            match set_of_comp.get(c) {
                Some(&id) => {
                    entries[id].w_labels.push(group[wi].clone());
                    for (h, lab) in witnesses.iter().zip(&labels[wi]) {
                        if lab == l {
                            let s = h.word_string();
                            if !entries[id].witnesses.contains(&s) {
                                entries[id].witnesses.push(s);
                            }
                        }
                    }
                }
                None => warnings.push(format!("label {} attaches to a component without a cycle", group[wi])),
            }
        }
    }
    let unlabeled: Vec<usize> = entries.iter().filter(|e| e.w_labels.is_empty()).map(|e| e.id).collect();
    if !unlabeled.is_empty() {
        warnings.push(format!(
            "{} control sets carry no fixed-flag label: ids {:?}",
            unlabeled.len(),
            unlabeled
        ));
    }

    let ws: BTreeSet<WeylElement> = group
        .iter()
        .zip(&label_of)
        .filter(|(_, l)| **l == Some(sink_comp))
        .map(|(w, _)| w.clone())
        .collect();
    let e = WeylElement::identity(n);
    let attractors: Vec<String> = witnesses
        .iter()
        .zip(&labels[0])
        .filter(|(_, l)| **l != Some(sink_comp))
        .map(|(h, _)| h.word_string())
        .collect();
    let attract = Verdict::new(
        attractors.is_empty(),
        if attractors.is_empty() {
            "every b(h,1) lies in the invariant control set".to_string()
        } else {
            format!("b(h,1) outside the invariant control set for {}", attractors.join(", "))
        },
    );
    let closed = ws.contains(&e)
        && ws.iter().all(|a| ws.iter().all(|b| ws.contains(&a.multiply(b))))
        && ws.iter().all(|a| ws.contains(&a.inverse()));
    let simple: Vec<WeylElement> = ws.iter().filter(|w| w.length() == 1).cloned().collect();
    let generated = generated_by(n, &simple) == ws;
    let mut bad_pairs = Vec::new();
    for (i, w1) in group.iter().enumerate() {
        for (j, w2) in group.iter().enumerate() {
            let same = label_of[i].is_some() && label_of[i] == label_of[j];
            let coset = ws.contains(&w1.multiply(&w2.inverse()));
            if same != coset {
                bad_pairs.push(format!("({w1}, {w2})"));
            }
        }
    }
    let verdicts = Verdicts {
        witness_independent: Verdict::new(
            disagreements.is_empty(),
            if disagreements.is_empty() {
                format!("{} witnesses agree on every label", witnesses.len())
            } else {
                disagreements.join("; ")
            },
        ),
        attractors_in_invariant_set: attract,
        subgroup: Verdict::new(closed, if closed { "closed under products and inverses" } else { "not a subgroup" }),
        generated_by_simple_reflections: Verdict::new(
            generated,
            format!(
                "simple reflections in W(S): [{}]",
                simple.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")
            ),
        ),
        coset_partition: Verdict::new(
            bad_pairs.is_empty(),
            if bad_pairs.is_empty() {
                "labels partition W into the right cosets W(S)w".to_string()
            } else {
                format!("label and coset relations differ on {}", bad_pairs.join(" "))
            },
        ),
    };
    for e in entries.iter_mut() {
        e.w_labels.sort_by_key(|a| (a.length(), a.reduced_word()));
    }
    let mut wsv: Vec<WeylElement> = ws.iter().cloned().collect();
    wsv.sort_by_key(|a| (a.length(), a.reduced_word()));
    report.cosets = Some(right_cosets_of(&ws, n));
    report.weyl_subgroup = Some(wsv);
    report.verdicts = Some(verdicts);
    report.control_sets = entries;
    report.warnings = warnings;
    Ok(report)
}

fn set_name(set_of_comp: &BTreeMap<usize, usize>, comp: usize) -> String {
    match set_of_comp.get(&comp) {
        Some(id) => format!("control set {id}"),
        None => format!("component {comp} (no cycle)"),
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub graph: OrbitGraph,
    pub witnesses: Vec<Witness>,
    pub report: ControlSetReport,
}

/// The whole pipeline: witnesses, graph, control sets, labels.
pub fn analyze(spec: &SemigroupSpec, opts: &GraphOptions) -> Result<Analysis> {
    spec.validate()?;
    let witnesses = find_regular_hyperbolic(spec)?;
    let mut seeds = Vec::new();
    if spec.group == Group::SL3 {
        for h in &witnesses {
            seeds.extend(fixed_flags(&h.matrix, spec.p, spec.precision)?.into_iter().map(|(_, f)| f));
        }
    }
    let graph = build_orbit_graph(spec, &seeds, opts)?;
    let report = label_and_weyl(&graph, &witnesses, opts.seed)?;
    Ok(Analysis {
        graph,
        witnesses,
        report,
    })
}

/// DOT text of the graph: nodes in canonical order, invariant nodes drawn
/// as double circles, edges labeled by 1-based generator index.
pub fn emit_dot(graph: &OrbitGraph, invariant: Option<&[usize]>) -> String {
    let inv: BTreeSet<usize> = invariant.unwrap_or(&[]).iter().copied().collect();
    let mut out = String::new();
    out.push_str("digraph orbit {\n");
    out.push_str(&format!(
        "  // group {} p {} precision {}; {} nodes, {} edges\n",
        graph.group,
        graph.p,
        graph.precision,
        graph.nodes.len(),
        graph.edges.len()
    ));
    for (i, f) in graph.nodes.iter().enumerate() {
        if inv.contains(&i) {
            out.push_str(&format!("  \"{f}\" [shape=doublecircle];\n"));
        } else {
            out.push_str(&format!("  \"{f}\";\n"));
        }
    }
    for e in &graph.edges {
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
            graph.nodes[e.from],
            graph.nodes[e.to],
            e.generator + 1
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 5;

    fn diag2() -> Matrix {
        Matrix::diag_p_powers(P, &[1, -1])
    }

    fn rot() -> Matrix {
        Matrix::from_i64(&[&[0, 1], &[-1, 0]])
    }

    fn spec2(gens: Vec<Matrix>, n: u32) -> SemigroupSpec {
        SemigroupSpec::new(Group::SL2, P, n, gens, 3).unwrap()
    }

    fn labels(g: &OrbitGraph, set: &[usize]) -> Vec<String> {
        set.iter().map(|&i| g.nodes[i].label()).collect()
    }

    #[test]
    fn diagonal_sl2() {
        let spec = spec2(vec![diag2()], 1);
        let g = build_orbit_graph(&spec, &[], &GraphOptions::default()).unwrap();
        assert_eq!(g.nodes.len(), 6);
        let cs = control_sets(&g);
        let names: Vec<Vec<String>> = cs.iter().map(|c| labels(&g, c)).collect();
        assert_eq!(names, vec![vec!["[0:1]".to_string()], vec!["[1:0]".to_string()]]);
        assert_eq!(labels(&g, &invariant_control_set(&g).unwrap()), vec!["[0:1]"]);
        let a = analyze(&spec, &GraphOptions::default()).unwrap();
        assert_eq!(a.report.control_sets.len(), 2);
        assert_eq!(a.report.weyl_subgroup.as_ref().unwrap().len(), 1);
        assert!(a.report.consistent());
    }

    #[test]
    fn diagonal_with_rotation() {
        let spec = spec2(vec![diag2(), rot()], 1);
        let a = analyze(&spec, &GraphOptions::default()).unwrap();
        assert_eq!(a.report.control_sets.len(), 1);
        assert_eq!(a.report.weyl_subgroup.as_ref().unwrap().len(), 2);
        assert_eq!(a.report.cosets.as_ref().unwrap().len(), 1);
        assert!(a.report.consistent());
    }

    #[test]
    fn identity_generator() {
        let spec = spec2(vec![Matrix::identity(2)], 1);
        let g = build_orbit_graph(&spec, &[], &GraphOptions::default()).unwrap();
        assert_eq!(g.edges.len(), 6);
        assert!(g.edges.iter().all(|e| e.from == e.to));
        assert_eq!(control_sets(&g).len(), 6);
        let fine = spec.at_precision(2);
        assert_eq!(build_orbit_graph(&fine, &[], &GraphOptions::default()).unwrap().nodes.len(), 30);
    }

    #[test]
    fn node_counts_and_empty_region() {
        let spec = SemigroupSpec::new(Group::SL2, 2, 2, vec![Matrix::diag_p_powers(2, &[1, -1])], 3).unwrap();
        assert_eq!(build_orbit_graph(&spec, &[], &GraphOptions::default()).unwrap().nodes.len(), 6);
        let rot3 = Matrix::from_i64(&[&[0, 1, 0], &[-1, 0, 0], &[0, 0, 1]]);
        let spec = SemigroupSpec::new(Group::SL3, P, 1, vec![rot3], 2).unwrap();
        let opts = GraphOptions {
            random_seeds: 0,
            ..GraphOptions::default()
        };
        let g = build_orbit_graph(&spec, &[], &opts).unwrap();
        assert!(g.nodes.is_empty());
        let d = emit_dot(&g, None);
        assert_eq!(d.lines().count(), 3);
        let small = GraphOptions {
            cap: 3,
            ..GraphOptions::default()
        };
        assert!(matches!(
            build_orbit_graph(&SemigroupSpec::new(Group::SL2, P, 1, vec![diag2()], 1).unwrap(), &[], &small),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn transitivity_core_of_poles() {
        let spec = spec2(vec![diag2(), rot()], 1);
        let g = build_orbit_graph(&spec, &[], &GraphOptions::default()).unwrap();
        let inv = invariant_control_set(&g).unwrap();
        assert_eq!(inv.len(), g.nodes.len());
        assert_eq!(control_sets(&g).len(), 1);
        assert_eq!(transitivity_core(&g, &inv), inv);
    }

    #[test]
    fn witnesses() {
        assert!(find_regular_hyperbolic(&SemigroupSpec::new(Group::SL2, P, 1, vec![rot()], 6).unwrap())
            .unwrap()
            .is_empty());
        let w = find_regular_hyperbolic(&spec2(vec![diag2()], 1)).unwrap();
        assert_eq!(w[0].word, vec![0]);
        // two elliptic elements with a hyperbolic product
        let k2 = Matrix::parse(r#"[[0,"1/5"],[-5,0]]"#).unwrap();
        let w = find_regular_hyperbolic(&spec2(vec![rot(), k2], 1)).unwrap();
        assert_eq!(w[0].word.len(), 2);
    }

    #[test]
    fn spec_validation() {
        let ok = r#"{"p":5,"precision":1,"group":"SL2","generators":[[["5","0"],["0","1/5"]]],"max_word_len":2}"#;
        assert_eq!(SemigroupSpec::from_json(ok).unwrap().generators[0], diag2());
        let bad_p = ok.replace("\"p\":5", "\"p\":6");
        assert!(matches!(SemigroupSpec::from_json(&bad_p), Err(Error::Parse { field, .. }) if field == "p"));
        let bad_det = ok.replace("1/5", "1/25");
        assert!(matches!(SemigroupSpec::from_json(&bad_det), Err(Error::NotSpecialLinear { field, .. }) if field == "generators[0]"));
        assert!(SemigroupSpec::from_json("{").is_err());
    }

    #[test]
    fn dot_is_stable() {
        let spec = spec2(vec![diag2()], 1);
        let g = build_orbit_graph(&spec, &[], &GraphOptions::default()).unwrap();
        let inv = invariant_control_set(&g).unwrap();
        let d = emit_dot(&g, Some(&inv));
        assert_eq!(d.matches("->").count(), g.edges.len());
        assert_eq!(d.matches("doublecircle").count(), 1);
        assert_eq!(d, emit_dot(&g, Some(&inv)));
    }
}
