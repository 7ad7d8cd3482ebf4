//! Separating vertex cutsets and target partitions.
//!
//! A cutset `C` separates a source set `S` from a target `t` when every
//! directed path from `S` to `t` meets `C`. The target partition `Z` is the
//! set of vertices outside `C` that no source reaches once `C` is removed;
//! every row of `A` indexed by `Z` is then supported on `Z ∪ C`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};

/// Largest network enumerated exhaustively without an explicit limit.
pub const EXHAUSTIVE_LIMIT: usize = 24;
const MASK_BITS: usize = 64;

/// A nonempty set of vertices, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cutset {
    members: Vec<NodeId>,
}

impl Cutset {
    pub fn new(members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut members: Vec<NodeId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::invalid("cutset must be nonempty"));
        }
        Ok(Cutset { members })
    }

    /// Builds a cutset from 1-based labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let ids = labels
            .iter()
            .map(|&l| {
                NodeId::from_one_based(l).ok_or_else(|| Error::invalid("node ids are 1-based"))
            })
            .collect::<Result<Vec<_>>>()?;
        Cutset::new(ids)
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// Outcome of checking a candidate cutset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationCertificate {
    #[serde(skip)]
    pub sources: Vec<NodeId>,
    #[serde(skip)]
    pub target: NodeId,
    pub cutset: Cutset,
    pub severed: bool,
    /// Target partition; empty unless `severed`.
    #[serde(rename = "Z")]
    pub target_partition: Vec<NodeId>,
}

fn check_endpoints(net: &Network, sources: &[NodeId], target: NodeId) -> Result<()> {
    if sources.is_empty() {
        return Err(Error::invalid("at least one source is required"));
    }
    for &s in sources {
        net.check_node(s)?;
    }
    net.check_node(target)?;
    if sources.contains(&target) {
        return Err(Error::invalid(format!("target {target} is also a source")));
    }
    Ok(())
}

/// Vertices reachable from `sources` with `blocked` vertices deleted.
fn reachable_avoiding(net: &Network, sources: &[NodeId], blocked: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; net.n()];
    let mut queue = VecDeque::new();
    for s in sources {
        if !blocked[s.index()] && !seen[s.index()] {
            seen[s.index()] = true;
            queue.push_back(s.index());
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in net.successors(NodeId::new(v)) {
            if !blocked[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

pub fn validate_cutset(
    net: &Network,
    sources: &[NodeId],
    target: NodeId,
    cutset: &Cutset,
) -> Result<SeparationCertificate> {
    check_endpoints(net, sources, target)?;
    let mut blocked = vec![false; net.n()];
    for &c in cutset.members() {
        net.check_node(c)?;
        if c == target || sources.contains(&c) {
            return Err(Error::Overlap { node: c });
        }
        blocked[c.index()] = true;
    }
    let reach = reachable_avoiding(net, sources, &blocked);
    let severed = !reach[target.index()];
    let target_partition = if severed {
        net.nodes()
            .filter(|v| !reach[v.index()] && !blocked[v.index()])
            .collect()
    } else {
        Vec::new()
    };
    Ok(SeparationCertificate {
        sources: sources.to_vec(),
        target,
        cutset: cutset.clone(),
        severed,
        target_partition,
    })
}

/// The target partition `Z` for a separating cutset.
pub fn target_partition(
    net: &Network,
    sources: &[NodeId],
    cutset: &Cutset,
    target: NodeId,
) -> Result<Vec<NodeId>> {
    let cert = validate_cutset(net, sources, target, cutset)?;
    if !cert.severed {
        return Err(Error::NotSevered { target });
    }
    Ok(cert.target_partition)
}

struct MaskGraph {
    succ: Vec<u64>,
    sources: u64,
    target: u64,
}

impl MaskGraph {
    fn new(net: &Network, sources: &[NodeId], target: NodeId) -> Self {
        let succ = net
            .nodes()
            .map(|v| net.successors(v).iter().fold(0u64, |m, &w| m | (1 << w)))
            .collect();
        MaskGraph {
            succ,
            sources: sources.iter().fold(0, |m, s| m | (1 << s.index())),
            target: 1 << target.index(),
        }
    }

    fn reach(&self, start: u64, blocked: u64) -> u64 {
        let mut seen = start & !blocked;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.succ[v];
            }
            frontier = next & !blocked & !seen;
            seen |= frontier;
        }
        seen
    }

    fn separates(&self, blocked: u64) -> bool {
        self.reach(self.sources, blocked) & self.target == 0
    }

    fn is_minimal(&self, blocked: u64) -> bool {
        let mut m = blocked;
        while m != 0 {
            let bit = m & m.wrapping_neg();
            m &= m - 1;
            if self.separates(blocked & !bit) {
                return false;
            }
        }
        true
    }
}

/// All inclusion-minimal separating cutsets in lexicographic order of their
/// sorted members, truncated at `limit`.
///
/// Exhaustive depth-first search over candidate vertices that lie on some
/// source-to-target path; a branch is cut as soon as its set separates or
/// when even adding every remaining candidate cannot separate.
pub fn enumerate_minimal_cutsets(
    net: &Network,
    sources: &[NodeId],
    target: NodeId,
    limit: Option<usize>,
) -> Result<Vec<Cutset>> {
    check_endpoints(net, sources, target)?;
    let n = net.n();
    if n > MASK_BITS || (n > EXHAUSTIVE_LIMIT && limit.is_none()) {
        return Err(Error::TooLarge {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let graph = MaskGraph::new(net, sources, target);
    let forward = graph.reach(graph.sources, 0);
    let backward = {
        let rev = reverse_masks(&graph.succ);
        let g = MaskGraph {
            succ: rev,
            sources: graph.target,
            target: 0,
        };
        g.reach(graph.target, 0)
    };
    let relevant = forward & backward & !graph.sources & !graph.target;
    let candidates: Vec<usize> = (0..n).filter(|&v| relevant & (1 << v) != 0).collect();

    let mut out = Vec::new();
    if graph.separates(0) {
        // target unreachable: only the empty set is minimal
        return Ok(out);
    }
    let cap = limit.unwrap_or(usize::MAX);
    let mut suffix = vec![0u64; candidates.len() + 1];
    for i in (0..candidates.len()).rev() {
        suffix[i] = suffix[i + 1] | (1 << candidates[i]);
    }
    let mut stack = Vec::new();
    search(
        &graph,
        &candidates,
        &suffix,
        0,
        0,
        &mut stack,
        &mut out,
        cap,
    );
    Ok(out)
}

fn reverse_masks(succ: &[u64]) -> Vec<u64> {
    let mut rev = vec![0u64; succ.len()];
    for (v, &m) in succ.iter().enumerate() {
        let mut m = m;
        while m != 0 {
            let w = m.trailing_zeros() as usize;
            m &= m - 1;
            rev[w] |= 1 << v;
        }
    }
    rev
}

#[allow(clippy::too_many_arguments)]
fn search(
    graph: &MaskGraph,
    candidates: &[usize],
    suffix: &[u64],
    start: usize,
    mask: u64,
    stack: &mut Vec<NodeId>,
    out: &mut Vec<Cutset>,
    cap: usize,
) {
    for i in start..candidates.len() {
        if out.len() >= cap {
            return;
        }
        let next = mask | (1 << candidates[i]);
        stack.push(NodeId::new(candidates[i]));
        if graph.separates(next) {
            if graph.is_minimal(next) {
                out.push(Cutset {
                    members: stack.clone(),
                });
            }
        } else if graph.separates(next | suffix[i + 1]) {
            search(graph, candidates, suffix, i + 1, next, stack, out, cap);
        }
        stack.pop();
    }
}

struct FlowEdge {
    to: usize,
    cap: usize,
    rev: usize,
}

struct FlowNet {
    adj: Vec<Vec<FlowEdge>>,
}

impl FlowNet {
    fn new(size: usize) -> Self {
        FlowNet {
            adj: (0..size).map(|_| Vec::new()).collect(),
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: usize) {
        let rf = self.adj[to].len();
        let rt = self.adj[from].len();
        self.adj[from].push(FlowEdge { to, cap, rev: rf });
        self.adj[to].push(FlowEdge {
            to: from,
            cap: 0,
            rev: rt,
        });
    }

    fn residual_reach(&self, s: usize) -> Vec<Option<(usize, usize)>> {
        // parent pointers (node, edge index); the root points at itself
        let mut parent = vec![None; self.adj.len()];
        parent[s] = Some((s, usize::MAX));
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for (k, e) in self.adj[v].iter().enumerate() {
                if e.cap > 0 && parent[e.to].is_none() {
                    parent[e.to] = Some((v, k));
                    queue.push_back(e.to);
                }
            }
        }
        parent
    }

    /// Edmonds-Karp; every augmenting path carries one unit here.
    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut flow = 0;
        loop {
            let parent = self.residual_reach(s);
            if parent[t].is_none() {
                return flow;
            }
            let mut bottleneck = usize::MAX;
            let mut v = t;
            while v != s {
                let (u, k) = parent[v].expect("on path");
                bottleneck = bottleneck.min(self.adj[u][k].cap);
                v = u;
            }
            let mut v = t;
            while v != s {
                let (u, k) = parent[v].expect("on path");
                self.adj[u][k].cap -= bottleneck;
                let rev = self.adj[u][k].rev;
                self.adj[v][rev].cap += bottleneck;
                v = u;
            }
            flow += bottleneck;
        }
    }
}

/// A minimum-cardinality separating cutset via max-flow on the
/// vertex-split digraph.
pub fn min_vertex_cut(net: &Network, sources: &[NodeId], target: NodeId) -> Result<Cutset> {
    check_endpoints(net, sources, target)?;
    for &s in sources {
        if net.has_edge(s, target) {
            return Err(Error::NoCutExists { from: s, target });
        }
    }
    let n = net.n();
    let inf = n + 1;
    let is_terminal = |v: usize| v == target.index() || sources.iter().any(|s| s.index() == v);
    // v_in = 2v, v_out = 2v + 1, super source = 2n
    let super_source = 2 * n;
    let mut flow = FlowNet::new(2 * n + 1);
    for v in 0..n {
        flow.add(2 * v, 2 * v + 1, if is_terminal(v) { inf } else { 1 });
    }
    for (from, to, _) in net.edges() {
        if from != to {
            flow.add(2 * from.index() + 1, 2 * to.index(), inf);
        }
    }
    for s in sources {
        flow.add(super_source, 2 * s.index(), inf);
    }
    let value = flow.max_flow(super_source, 2 * target.index());
    if value == 0 {
        return Err(Error::invalid(format!(
            "target {target} is unreachable from the sources; only the empty set separates"
        )));
    }
    let parent = flow.residual_reach(super_source);
    let members = (0..n)
        .filter(|&v| !is_terminal(v) && parent[2 * v].is_some() && parent[2 * v + 1].is_none())
        .map(NodeId::new);
    Cutset::new(members)
}
