#![allow(dead_code)]

use std::collections::VecDeque;

use decrescence::network::Network;
use decrescence::random::RandomNetConfig;
use decrescence::NodeId;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn id(label: usize) -> NodeId {
    NodeId::from_one_based(label).unwrap()
}

pub fn generate(cfg: &RandomNetConfig, seed: u64) -> Network {
    cfg.generate(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Strongly connected, strictly substochastic, n in [4, 10].
pub fn substochastic(seed: u64) -> Network {
    generate(&RandomNetConfig::default(), seed)
}

/// Strongly connected and ergodic stochastic, n in [4, 10].
pub fn stochastic(seed: u64) -> Network {
    let cfg = RandomNetConfig {
        stochastic_mode: true,
        ..RandomNetConfig::default()
    };
    generate(&cfg, seed)
}

/// Arbitrary sparse digraph, not necessarily connected.
pub fn sparse(seed: u64, n_max: usize, density: f64) -> Network {
    let cfg = RandomNetConfig {
        n_min: 3,
        n_max,
        density,
        require_strong_connectivity: false,
        ..RandomNetConfig::default()
    };
    generate(&cfg, seed)
}

/// `M(k) = e_i^T A^k e_s` for `k = 0..=k_max` by dense matrix powers.
pub fn markov_dense(net: &Network, s: NodeId, i: NodeId, k_max: usize) -> Vec<f64> {
    let a = net.matrix();
    let mut p = DMatrix::<f64>::identity(net.n(), net.n());
    let mut out = Vec::with_capacity(k_max + 1);
    for _ in 0..=k_max {
        out.push(p[(i.index(), s.index())]);
        p = a * p;
    }
    out
}

/// `(I - A)^{-1}`.
pub fn resolvent(net: &Network) -> DMatrix<f64> {
    let n = net.n();
    (DMatrix::<f64>::identity(n, n) - net.matrix())
        .try_inverse()
        .expect("I - A invertible")
}

/// `j -> l` iff `a[l][j] > 0`, read straight off the matrix.
pub fn successor_lists(net: &Network) -> Vec<Vec<usize>> {
    let a = net.matrix();
    let n = net.n();
    (0..n)
        .map(|j| (0..n).filter(|&l| a[(l, j)] > 0.0).collect())
        .collect()
}

pub fn reaches(succ: &[Vec<usize>], sources: &[usize], target: usize, blocked: u64) -> bool {
    let mut seen = vec![false; succ.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if blocked & (1 << s) == 0 {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if v == target {
            return true;
        }
        for &w in &succ[v] {
            if !seen[w] && blocked & (1 << w) == 0 {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Every inclusion-minimal separating set, sorted lexicographically by
/// member lists.
pub fn brute_force_minimal_cutsets(
    net: &Network,
    sources: &[usize],
    target: usize,
) -> Vec<Vec<usize>> {
    let succ = successor_lists(net);
    let n = net.n();
    let free: Vec<usize> = (0..n)
        .filter(|v| *v != target && !sources.contains(v))
        .collect();
    let mut separating = Vec::new();
    for mask in 0u64..(1 << free.len()) {
        let blocked = free
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .fold(0u64, |b, (_, &v)| b | (1 << v));
        if !reaches(&succ, sources, target, blocked) {
            separating.push(blocked);
        }
    }
    let mut minimal: Vec<Vec<usize>> = separating
        .iter()
        .filter(|&&b| !separating.iter().any(|&o| o != b && o & b == o))
        .map(|&b| (0..n).filter(|v| b & (1 << v) != 0).collect())
        .collect();
    minimal.sort();
    minimal
}

/// Largest number of internally vertex-disjoint `s -> t` paths, by
/// exhaustive search over simple paths.
pub fn max_disjoint_paths(net: &Network, s: usize, t: usize) -> usize {
    let succ = successor_lists(net);
    let mut paths: Vec<u64> = Vec::new();
    fn dfs(succ: &[Vec<usize>], v: usize, t: usize, used: u64, inner: u64, out: &mut Vec<u64>) {
        for &w in &succ[v] {
            if w == t {
                out.push(inner);
            } else if used & (1 << w) == 0 {
                dfs(succ, w, t, used | (1 << w), inner | (1 << w), out);
            }
        }
    }
    dfs(&succ, s, t, 1 << s, 0, &mut paths);
    paths.sort();
    paths.dedup();
    fn pack(paths: &[u64], from: usize, used: u64) -> usize {
        let mut best = 0;
        for k in from..paths.len() {
            if paths[k] & used == 0 {
                best = best.max(1 + pack(paths, k + 1, used | paths[k]));
            }
        }
        best
    }
    pack(&paths, 0, 0)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
