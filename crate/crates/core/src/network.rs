//! Network matrices, their digraphs and structural properties.
//!
//! A network is an `n x n` nonnegative matrix `A` whose entry `a[l][j]`
//! weighs the influence of node `j` on the next state of node `l`. The
//! digraph has an edge `j -> l` exactly when `a[l][j] > 0`. Row sums may not
//! exceed one beyond [`ROW_SUM_TOL`].
//!
//! Node ids are 0-based in memory and 1-based in every external format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Slack allowed on row sums when validating and classifying matrices.
pub const ROW_SUM_TOL: f64 = 1e-12;

const SPECTRAL_TOL: f64 = 1e-12;
const SPECTRAL_MAX_ITER: usize = 100_000;

/// A vertex of the network digraph (0-based internally).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub const fn new(index: usize) -> Self {
        NodeId(index)
    }

    /// Builds a node from a 1-based label. Returns `None` for 0.
    pub fn from_one_based(label: usize) -> Option<Self> {
        label.checked_sub(1).map(NodeId)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    pub const fn one_based(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.one_based())
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u64(self.one_based() as u64)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let label = u64::deserialize(deserializer)?;
        NodeId::from_one_based(label as usize)
            .ok_or_else(|| serde::de::Error::custom("node ids are 1-based"))
    }
}

/// Row-sum classification of a nonnegative matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticityKind {
    Stochastic,
    #[serde(rename = "substochastic")]
    StrictlySubstochastic,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticityClass {
    pub kind: StochasticityKind,
    pub worst_row_sum: f64,
}

impl StochasticityClass {
    /// Classifies a list of row sums.
    pub fn from_row_sums(sums: &[f64]) -> Self {
        let worst_row_sum = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let kind = if sums
            .iter()
            .any(|&s| s > 1.0 + ROW_SUM_TOL || !s.is_finite())
        {
            StochasticityKind::Invalid
        } else if sums.iter().all(|&s| (s - 1.0).abs() <= ROW_SUM_TOL) {
            StochasticityKind::Stochastic
        } else {
            StochasticityKind::StrictlySubstochastic
        };
        StochasticityClass {
            kind,
            worst_row_sum,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.kind == StochasticityKind::Stochastic
    }
}

/// Breadth-first hop distances from a source vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceClasses {
    pub source: NodeId,
    pub classes: BTreeMap<usize, Vec<NodeId>>,
    #[serde(skip)]
    distance: Vec<Option<usize>>,
}

impl DistanceClasses {
    pub fn distance_of(&self, node: NodeId) -> Option<usize> {
        self.distance.get(node.index()).copied().flatten()
    }

    pub fn max_distance(&self) -> usize {
        self.classes.keys().next_back().copied().unwrap_or(0)
    }

    pub fn class(&self, d: usize) -> &[NodeId] {
        self.classes.get(&d).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Input document layouts accepted by [`load_network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    /// `n` lines of `n` comma-separated weights.
    MatrixCsv,
    /// Lines `from,to,weight` with 1-based ids.
    EdgeList,
    /// `{"n":..,"rows":[[..]],"class":..}`.
    Json,
}

impl DocumentFormat {
    /// Guesses the format from a file extension, defaulting to matrix CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => DocumentFormat::Json,
            Some("edges") | Some("edgelist") | Some("el") => DocumentFormat::EdgeList,
            _ => DocumentFormat::MatrixCsv,
        }
    }
}

impl FromStr for DocumentFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" | "csv" => Ok(DocumentFormat::MatrixCsv),
            "edges" | "edgelist" | "edge-list" => Ok(DocumentFormat::EdgeList),
            "json" => Ok(DocumentFormat::Json),
            other => Err(Error::invalid(format!("unknown network format '{other}'"))),
        }
    }
}

/// JSON form of a validated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEcho {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<StochasticityKind>,
}

/// A validated nonnegative (sub)stochastic network matrix with its digraph.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    a: DMatrix<f64>,
    labels: Option<Vec<String>>,
    // row l: (j, a[l][j]) for every positive entry, j ascending
    rows: Vec<Vec<(usize, f64)>>,
    // j -> every l with a[l][j] > 0, ascending
    successors: Vec<Vec<usize>>,
}

impl Network {
    /// Validates a dense row-major matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("network must have at least one node"));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix {
                    row: r,
                    reason: format!("expected {n} entries, found {}", row.len()),
                });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::invalid(format!(
                "matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut rows = Vec::with_capacity(n);
        let mut successors = vec![Vec::new(); n];
        for l in 0..n {
            let mut sum = 0.0;
            let mut support = Vec::new();
            for j in 0..n {
                let w = a[(l, j)];
                if !w.is_finite() {
                    return Err(Error::InvalidMatrix {
                        row: l,
                        reason: format!("non-finite entry in column {}", j + 1),
                    });
                }
                if w < 0.0 {
                    return Err(Error::InvalidMatrix {
                        row: l,
                        reason: format!("negative entry {w} in column {}", j + 1),
                    });
                }
                sum += w;
                if w > 0.0 {
                    support.push((j, w));
                    successors[j].push(l);
                }
            }
            if sum > 1.0 + ROW_SUM_TOL {
                return Err(Error::InvalidMatrix {
                    row: l,
                    reason: format!("row sum {sum} exceeds 1"),
                });
            }
            rows.push(support);
        }
        Ok(Network {
            a,
            labels: None,
            rows,
            successors,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::invalid(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// The 9-node, 27-edge substochastic example network whose source is
    /// vertex 1 and whose distance classes are {1}, {4,5,6}, {7,8,9}, {2,3}.
    pub fn nine_node_example() -> Self {
        const ROWS: [[f64; 9]; 9] = [
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.3, 0.25],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.35, 0.25, 0.2],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.15, 0.25, 0.45],
            [0.2, 0.4, 0.35, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.2, 0.15, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.2, 0.45, 0.15, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.25, 0.25, 0.15, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.3, 0.35, 0.25, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.25, 0.35, 0.1, 0.0, 0.0, 0.0],
        ];
        Network::from_rows(ROWS.iter().map(|r| r.to_vec()).collect())
            .expect("embedded example is valid")
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// `a[row][col]`: weight of the edge `col -> row`.
    pub fn weight(&self, row: NodeId, col: NodeId) -> f64 {
        self.a[(row.index(), col.index())]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, w)| w).sum())
            .collect()
    }

    /// Checks that `index` (0-based) names a vertex.
    pub fn node(&self, index: usize) -> Result<NodeId> {
        if index < self.n() {
            Ok(NodeId(index))
        } else {
            Err(Error::NodeOutOfRange { index, n: self.n() })
        }
    }

    pub fn check_node(&self, node: NodeId) -> Result<NodeId> {
        self.node(node.index())
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n()).map(NodeId)
    }

    /// Positive entries of row `l` as `(column, weight)` pairs.
    pub fn row_support(&self, l: usize) -> &[(usize, f64)] {
        &self.rows[l]
    }

    /// Upstream neighbours of `q` (edges `j -> q`, self-loop excluded).
    pub fn upstream(&self, q: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.rows[q.index()]
            .iter()
            .filter(move |&&(j, _)| j != q.index())
            .map(|&(j, w)| (NodeId(j), w))
    }

    /// Vertices `l` with an edge `j -> l` (self-loop included).
    pub fn successors(&self, j: NodeId) -> &[usize] {
        &self.successors[j.index()]
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.a[(to.index(), from.index())] > 0.0
    }

    /// Directed edges `(from, to, weight)`, ordered by `from` then `to`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::new();
        for (j, succ) in self.successors.iter().enumerate() {
            for &l in succ {
                out.push((NodeId(j), NodeId(l), self.a[(l, j)]));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// `A x` using the sparse row supports.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * x[j]).sum())
            .collect()
    }

    /// Hex SHA-256 over the dimension and the exact bit patterns of `A`.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        for l in 0..self.n() {
            for j in 0..self.n() {
                hasher.update(self.a[(l, j)].to_bits().to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn to_echo(&self) -> NetworkEcho {
        NetworkEcho {
            n: self.n(),
            rows: (0..self.n())
                .map(|l| (0..self.n()).map(|j| self.a[(l, j)]).collect())
                .collect(),
            class: Some(classify(self).kind),
        }
    }

    /// Matrix CSV rendering (one row per line).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in 0..self.n() {
            let row: Vec<String> = (0..self.n()).map(|j| self.a[(l, j)].to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Edge-list rendering, `from,to,weight` with 1-based ids, after a
    /// `nodes,N` header so isolated trailing nodes survive a reload.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("nodes,{}\n", self.n());
        for (f, t, w) in self.edges() {
            let _ = writeln!(out, "{f},{t},{w}");
        }
        out
    }

    /// Principal submatrix with the given rows and columns.
    pub fn submatrix(&self, rows: &[NodeId], cols: &[NodeId]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            self.a[(rows[r].index(), cols[c].index())]
        })
    }
}

fn significant_lines(document: &str) -> impl Iterator<Item = (usize, &str)> {
    document
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_weight(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("'{}': {e}", field.trim()),
    })
}

/// Parses a matrix or edge-list document into a validated network.
pub fn load_network(document: &str, format: DocumentFormat) -> Result<Network> {
    match format {
        DocumentFormat::MatrixCsv => parse_matrix_csv(document),
        DocumentFormat::EdgeList => parse_edge_list(document),
        DocumentFormat::Json => parse_json(document),
    }
}

/// Reads a network file, choosing the format from its extension unless one
/// is given.
pub fn load_network_file(path: &Path, format: Option<DocumentFormat>) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    load_network(
        &text,
        format.unwrap_or_else(|| DocumentFormat::from_path(path)),
    )
}

fn parse_matrix_csv(document: &str) -> Result<Network> {
    let mut rows = Vec::new();
    let mut last_line = 0;
    for (line, text) in significant_lines(document) {
        let row = text
            .split(',')
            .map(|f| parse_weight(f, line))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
        last_line = line;
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty matrix document".into(),
        });
    }
    if rows[0].len() != rows.len() {
        return Err(Error::Parse {
            line: last_line,
            message: format!("matrix is {}x{}, not square", rows.len(), rows[0].len()),
        });
    }
    Network::from_rows(rows)
}

fn parse_edge_list(document: &str) -> Result<Network> {
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    let mut n = 0;
    let mut declared: Option<usize> = None;
    for (idx, (line, text)) in significant_lines(document).enumerate() {
        let fields: Vec<&str> = text.split(',').collect();
        if idx == 0 && fields.len() == 2 && fields[0].trim().eq_ignore_ascii_case("nodes") {
            let size: usize = fields[1].trim().parse().map_err(|e| Error::Parse {
                line,
                message: format!("node count '{}': {e}", fields[1].trim()),
            })?;
            if size == 0 {
                return Err(Error::Parse {
                    line,
                    message: "node count must be positive".into(),
                });
            }
            declared = Some(size);
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 'from,to,weight', found {} fields", fields.len()),
            });
        }
        let id = |f: &str| -> Result<usize> {
            let v: usize = f.trim().parse().map_err(|e| Error::Parse {
                line,
                message: format!("node id '{}': {e}", f.trim()),
            })?;
            if v == 0 {
                return Err(Error::Parse {
                    line,
                    message: "node ids are 1-based".into(),
                });
            }
            Ok(v)
        };
        let (from, to) = (id(fields[0])?, id(fields[1])?);
        let w = parse_weight(fields[2], line)?;
        if !seen.insert((from, to)) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate edge {from} -> {to}"),
            });
        }
        if let Some(size) = declared {
            if from > size || to > size {
                return Err(Error::Parse {
                    line,
                    message: format!("edge {from} -> {to} exceeds declared {size} nodes"),
                });
            }
        }
        n = n.max(from).max(to);
        edges.push((from - 1, to - 1, w));
    }
    if let Some(size) = declared {
        n = size;
    }
    if n == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "empty edge list".into(),
        });
    }
    let mut a = DMatrix::zeros(n, n);
    for (from, to, w) in edges {
        a[(to, from)] = w;
    }
    Network::from_matrix(a)
}

fn parse_json(document: &str) -> Result<Network> {
    let echo: NetworkEcho = serde_json::from_str(document).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if echo.rows.len() != echo.n {
        return Err(Error::Parse {
            line: 0,
            message: format!("n = {} but {} rows given", echo.n, echo.rows.len()),
        });
    }
    let net = Network::from_rows(echo.rows)?;
    if let Some(claimed) = echo.class {
        let actual = classify(&net).kind;
        if claimed != actual {
            return Err(Error::Parse {
                line: 0,
                message: format!("declared class {claimed:?} but matrix is {actual:?}"),
            });
        }
    }
    Ok(net)
}

pub fn classify(net: &Network) -> StochasticityClass {
    StochasticityClass::from_row_sums(&net.row_sums())
}

fn reachable_from(net: &Network, start: usize, forward: bool) -> Vec<bool> {
    let mut seen = vec![false; net.n()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(v) = queue.pop_front() {
        let next: Box<dyn Iterator<Item = usize>> = if forward {
            Box::new(net.successors[v].iter().copied())
        } else {
            Box::new(net.rows[v].iter().map(|&(j, _)| j))
        };
        for w in next {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

pub fn strongly_connected(net: &Network) -> bool {
    reachable_from(net, 0, true).into_iter().all(|r| r)
        && reachable_from(net, 0, false).into_iter().all(|r| r)
}

/// Period of a strongly connected digraph: gcd over edges `u -> v` of
/// `level(u) + 1 - level(v)` with BFS levels from vertex 0.
pub fn period(net: &Network) -> Option<usize> {
    if !strongly_connected(net) {
        return None;
    }
    let levels = bfs_levels(net, 0);
    let mut g = 0usize;
    for (u, succ) in net.successors.iter().enumerate() {
        let lu = levels[u]?;
        for &v in succ {
            let lv = levels[v]?;
            g = gcd(g, (lu + 1).abs_diff(lv));
        }
    }
    // an edgeless single vertex has no cycles
    Some(if g == 0 { 1 } else { g })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// True iff the (stochastic) matrix is irreducible and aperiodic.
pub fn is_ergodic(net: &Network) -> Result<bool> {
    let class = classify(net);
    if !class.is_stochastic() {
        return Err(Error::NotStochastic {
            worst_row_sum: class.worst_row_sum,
        });
    }
    if net.n() == 1 {
        return Ok(true);
    }
    Ok(period(net) == Some(1))
}

fn bfs_levels(net: &Network, s: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; net.n()];
    dist[s] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap_or(0);
        for &w in &net.successors[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn distance_classes(net: &Network, s: NodeId) -> Result<DistanceClasses> {
    net.check_node(s)?;
    let distance = bfs_levels(net, s.index());
    let mut classes: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (v, d) in distance.iter().enumerate() {
        if let Some(d) = d {
            classes.entry(*d).or_default().push(NodeId(v));
        }
    }
    Ok(DistanceClasses {
        source: s,
        classes,
        distance,
    })
}

/// Perron root of `A` by power iteration on the shifted matrix `A + I`.
///
/// The shift makes the iteration primitive for irreducible `A` (the example
/// network has period 3) and leaves the Perron root at `rho(A) + 1`. Iterates
/// stay strictly positive, so the Collatz-Wielandt ratios bracket the root.
pub fn spectral_radius(net: &Network) -> Result<f64> {
    let n = net.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut prev = f64::NAN;
    let mut stable = 0;
    let mut gap = f64::INFINITY;
    for _ in 0..SPECTRAL_MAX_ITER {
        let ax = net.apply(&x);
        let y: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a + b).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            if *xi > 0.0 {
                let r = yi / xi;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        gap = hi - lo;
        if gap <= SPECTRAL_TOL * hi {
            return Ok((0.5 * (hi + lo) - 1.0).max(0.0));
        }
        let sy: f64 = y.iter().sum();
        let sx: f64 = x.iter().sum();
        let estimate = sy / sx;
        if (estimate - prev).abs() <= SPECTRAL_TOL * estimate {
            stable += 1;
            if stable >= 5 {
                return Ok((estimate - 1.0).max(0.0));
            }
        } else {
            stable = 0;
        }
        prev = estimate;
        x = y.into_iter().map(|v| v / sy).collect();
    }
    Err(Error::NoConvergence {
        what: "spectral radius power iteration",
        iterations: SPECTRAL_MAX_ITER,
        residual: gap,
    })
}
