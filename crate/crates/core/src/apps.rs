//! Signal-to-noise ratios at sensor nodes and the strict propagation
//! stability check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cutset::{enumerate_minimal_cutsets, min_vertex_cut, validate_cutset, Cutset};
use crate::error::{Error, Result};
use crate::metrics::quadrature::{weighted_band_energy_all, DEFAULT_QUAD_TOL};
use crate::metrics::{PNorm, Spectrum};
use crate::network::{distance_classes, Network, NodeId};
use crate::simulate::{simulate, InputSignal};
use crate::verify::{CheckOptions, Theorem, VerificationReport, Witness};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SnrMode {
    /// `||x_i||_p / sigma` over `k = 0..=horizon`.
    Transient {
        p: PNorm,
        input: InputSignal,
        horizon: usize,
    },
    /// `int |H_i|^2 S_UU dW / sigma^2`, optionally restricted to a band.
    Persistent {
        spectrum: Spectrum,
        band: Option<(f64, f64)>,
    },
}

impl SnrMode {
    pub fn name(&self) -> &'static str {
        match self {
            SnrMode::Transient { .. } => "transient",
            SnrMode::Persistent { .. } => "persistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrQuery {
    pub mode: SnrMode,
    pub sigma: f64,
}

impl SnrQuery {
    pub fn transient(p: PNorm, input: InputSignal, horizon: usize, sigma: f64) -> Result<Self> {
        let q = SnrQuery {
            mode: SnrMode::Transient { p, input, horizon },
            sigma,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn persistent(spectrum: Spectrum, band: Option<(f64, f64)>, sigma: f64) -> Result<Self> {
        let q = SnrQuery {
            mode: SnrMode::Persistent { spectrum, band },
            sigma,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("noise level sigma must be positive"));
        }
        match &self.mode {
            SnrMode::Transient { input, horizon, .. } => {
                input.validate()?;
                if *horizon == 0 {
                    return Err(Error::invalid("horizon must be at least 1"));
                }
            }
            SnrMode::Persistent { band, .. } => {
                if let Some((a, b)) = band {
                    if !(0.0 <= *a && a < b && *b <= std::f64::consts::PI) {
                        return Err(Error::invalid("band must satisfy 0 <= a < b <= pi"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn restrict(spectrum: &Spectrum, band: Option<(f64, f64)>) -> Result<Spectrum> {
    let Some((lo, hi)) = band else {
        return Ok(spectrum.clone());
    };
    let mut edges = Vec::new();
    let mut levels = Vec::new();
    for (a, b, l) in spectrum.pieces() {
        let (a, b) = (a.max(lo), b.min(hi));
        if a < b {
            if edges.last() != Some(&a) {
                if !edges.is_empty() {
                    levels.push(0.0);
                }
                edges.push(a);
            }
            edges.push(b);
            levels.push(l);
        }
    }
    if levels.is_empty() {
        return Ok(Spectrum::zero());
    }
    Spectrum::new(edges, levels)
}

/// SNR at every node.
pub fn snr_all(net: &Network, s: NodeId, query: &SnrQuery) -> Result<Vec<f64>> {
    query.validate()?;
    net.check_node(s)?;
    match &query.mode {
        SnrMode::Transient { p, input, horizon } => {
            let trace = simulate(net, &BTreeMap::from([(s, input.clone())]), *horizon)?;
            Ok(net
                .nodes()
                .map(|i| p.norm(trace.node(i)) / query.sigma)
                .collect())
        }
        SnrMode::Persistent { spectrum, band } => {
            let spec = restrict(spectrum, *band)?;
            let e = weighted_band_energy_all(net, s, &spec, DEFAULT_QUAD_TOL)?;
            let var = query.sigma * query.sigma;
            Ok(e.into_iter().map(|v| v / var).collect())
        }
    }
}

pub fn transient_snr(net: &Network, s: NodeId, i: NodeId, query: &SnrQuery) -> Result<f64> {
    if !matches!(query.mode, SnrMode::Transient { .. }) {
        return Err(Error::invalid("transient SNR needs a transient query"));
    }
    net.check_node(i)?;
    Ok(snr_all(net, s, query)?[i.index()])
}

pub fn persistent_snr(net: &Network, s: NodeId, i: NodeId, query: &SnrQuery) -> Result<f64> {
    if !matches!(query.mode, SnrMode::Persistent { .. }) {
        return Err(Error::invalid("persistent SNR needs a persistent query"));
    }
    net.check_node(i)?;
    Ok(snr_all(net, s, query)?[i.index()])
}

/// Candidates by descending SNR, ties by ascending node id.
pub fn rank_sensors(
    net: &Network,
    s: NodeId,
    candidates: &[NodeId],
    query: &SnrQuery,
) -> Result<Vec<(NodeId, f64)>> {
    let unique: BTreeSet<NodeId> = candidates.iter().copied().collect();
    for &c in &unique {
        net.check_node(c)?;
    }
    if unique.is_empty() {
        return Ok(Vec::new());
    }
    let all = snr_all(net, s, query)?;
    let mut ranked: Vec<(NodeId, f64)> = unique.into_iter().map(|c| (c, all[c.index()])).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Columns `node, distance, mode, snr`.
pub fn snr_csv(net: &Network, s: NodeId, mode: &str, rows: &[(NodeId, f64)]) -> Result<String> {
    let dc = distance_classes(net, s)?;
    let mut out = String::from("node,distance,mode,snr\n");
    for (node, v) in rows {
        let d = dc
            .distance_of(*node)
            .map_or(String::new(), |d| d.to_string());
        let _ = writeln!(out, "{node},{d},{mode},{v:e}");
    }
    Ok(out)
}

/// `x(k) + v(k)` with `v` white Gaussian noise of deviation `sigma`.
pub fn noisy_measurement(clean: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "noise deviation must be finite and nonnegative",
        ));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(clean.iter().map(|x| x + normal.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutsetStrategy {
    AllMinimal,
    MinCutOnly,
    UserProvided(Vec<Cutset>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationStabilityQuery {
    pub p: PNorm,
    pub t: PNorm,
    pub inputs: Vec<InputSignal>,
    pub cutset_strategy: CutsetStrategy,
    pub horizon: usize,
    /// Sources to test; every node when `None`.
    pub sources: Option<Vec<NodeId>>,
}

impl PropagationStabilityQuery {
    /// `count` random inputs of unit p-norm over `horizon`, all minimal
    /// cutsets, every source.
    pub fn sampled(p: PNorm, t: PNorm, count: usize, horizon: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..count)
            .map(|_| {
                let raw: Vec<f64> = (0..horizon).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = p.norm(raw.iter().copied());
                let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
                InputSignal::custom(raw.into_iter().map(|v| v * scale).collect())
            })
            .collect();
        PropagationStabilityQuery {
            p,
            t,
            inputs,
            cutset_strategy: CutsetStrategy::AllMinimal,
            horizon,
            sources: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        for sig in &self.inputs {
            sig.validate()?;
            let samples = sig.real_samples(self.horizon)?;
            if !self.p.norm(samples).is_finite() {
                return Err(Error::invalid("inputs must have finite p-norm"));
            }
        }
        Ok(())
    }
}

pub fn check_propagation_stability(
    net: &Network,
    query: &PropagationStabilityQuery,
) -> Result<VerificationReport> {
    check_propagation_stability_with(net, query, CheckOptions::default())
}

/// For every source, target, selected cutset and sampled input:
/// `||y_target||_t <= max_i ||y_c(i)||_t`.
pub fn check_propagation_stability_with(
    net: &Network,
    query: &PropagationStabilityQuery,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    query.validate()?;
    let sources: Vec<NodeId> = match &query.sources {
        Some(list) => {
            for &s in list {
                net.check_node(s)?;
            }
            list.clone()
        }
        None => net.nodes().collect(),
    };
    let fingerprint = net.fingerprint();
    let per_source: Vec<Result<VerificationReport>> = sources
        .par_iter()
        .map(|&s| stability_for_source(net, s, query, opts, &fingerprint))
        .collect();
    let mut report = VerificationReport::new(Theorem::PropStability, opts);
    for r in per_source {
        report.merge(r?);
    }
    report.note = Some(format!(
        "checked {} sampled inputs per source; violations are conclusive, a pass certifies \
         decrescence only for the sampled inputs",
        query.inputs.len()
    ));
    Ok(report)
}

fn cutsets_for(
    net: &Network,
    s: NodeId,
    t: NodeId,
    strategy: &CutsetStrategy,
) -> Result<Vec<Cutset>> {
    match strategy {
        CutsetStrategy::AllMinimal => enumerate_minimal_cutsets(net, &[s], t, None),
        CutsetStrategy::MinCutOnly => Ok(vec![min_vertex_cut(net, &[s], t)?]),
        CutsetStrategy::UserProvided(list) => Ok(list
            .iter()
            .filter(|c| {
                validate_cutset(net, &[s], t, c)
                    .map(|cert| cert.severed)
                    .unwrap_or(false)
            })
            .cloned()
            .collect()),
    }
}

fn stability_for_source(
    net: &Network,
    s: NodeId,
    query: &PropagationStabilityQuery,
    opts: CheckOptions,
    fingerprint: &str,
) -> Result<VerificationReport> {
    let dc = distance_classes(net, s)?;
    let mut pairs = Vec::new();
    for t in net.nodes() {
        if !dc.distance_of(t).is_some_and(|d| d >= 2) {
            continue;
        }
        let cutsets = cutsets_for(net, s, t, &query.cutset_strategy)?;
        if !cutsets.is_empty() {
            pairs.push((t, cutsets));
        }
    }
    let mut report = VerificationReport::new(Theorem::PropStability, opts);
    for (k, input) in query.inputs.iter().enumerate() {
        let trace = simulate(net, &BTreeMap::from([(s, input.clone())]), query.horizon)?;
        let norms: Vec<f64> = net.nodes().map(|v| query.t.norm(trace.node(v))).collect();
        for (t, cutsets) in &pairs {
            for c in cutsets {
                let (node, rhs) = c.members().iter().map(|&m| (m, norms[m.index()])).fold(
                    (c.members()[0], f64::NEG_INFINITY),
                    |b, x| {
                        if x.1 > b.1 {
                            x
                        } else {
                            b
                        }
                    },
                );
                let lhs = norms[t.index()];
                report.cases_run += 1;
                let margin = rhs - lhs;
                report.tightest_margin =
                    Some(report.tightest_margin.map_or(margin, |m| m.min(margin)));
                if (lhs <= rhs + opts.tol) == opts.negate {
                    report.violations.push(Witness {
                        network: fingerprint.to_string(),
                        cutset: Some(c.clone()),
                        node: Some(node),
                        case: format!("source {s} target {t} input #{k}"),
                        lhs,
                        rhs,
                        slack: rhs + opts.tol - lhs,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{band_energy, lp_gain};
    use std::f64::consts::PI;

    fn example() -> (Network, NodeId) {
        (Network::nine_node_example(), NodeId::new(0))
    }

    fn impulse_query(p: PNorm, horizon: usize, sigma: f64) -> SnrQuery {
        SnrQuery::transient(p, InputSignal::impulse(), horizon, sigma).unwrap()
    }

    #[test]
    fn zero_input_and_zero_spectrum() {
        let (net, s) = example();
        let q = SnrQuery::transient(PNorm::TWO, InputSignal::custom(vec![]), 20, 1.0).unwrap();
        assert_eq!(transient_snr(&net, s, NodeId::new(8), &q).unwrap(), 0.0);
        let q = SnrQuery::persistent(Spectrum::zero(), None, 1.0).unwrap();
        assert_eq!(persistent_snr(&net, s, NodeId::new(8), &q).unwrap(), 0.0);
    }

    #[test]
    fn impulse_snr_is_l1_gain() {
        let (net, s) = example();
        let q = impulse_query(PNorm::ONE, 25, 1.0);
        for i in net.nodes() {
            let snr = transient_snr(&net, s, i, &q).unwrap();
            let g = lp_gain(&net, s, i, PNorm::ONE, 25).unwrap().value;
            assert!((snr - g).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn flat_persistent_equals_band_energy() {
        let (net, s) = example();
        let q = SnrQuery::persistent(Spectrum::flat(0.1, 0.5, 1.0).unwrap(), None, 1.0).unwrap();
        let i = NodeId::new(8);
        let b = band_energy(&net, s, i, 0.1, 0.5, DEFAULT_QUAD_TOL)
            .unwrap()
            .value;
        assert!((persistent_snr(&net, s, i, &q).unwrap() - b).abs() < 1e-8);
        let doubled = SnrQuery {
            sigma: 2.0,
            ..q.clone()
        };
        let ratio =
            persistent_snr(&net, s, i, &q).unwrap() / persistent_snr(&net, s, i, &doubled).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn band_restriction() {
        let (net, s) = example();
        let full = Spectrum::flat(0.0, PI, 1.0).unwrap();
        let q = SnrQuery::persistent(full, Some((0.1, 0.5)), 1.0).unwrap();
        let flat = SnrQuery::persistent(Spectrum::flat(0.1, 0.5, 1.0).unwrap(), None, 1.0).unwrap();
        let i = NodeId::new(4);
        let a = persistent_snr(&net, s, i, &q).unwrap();
        let b = persistent_snr(&net, s, i, &flat).unwrap();
        assert!((a - b).abs() < 1e-12);
        let gap = Spectrum::new(vec![0.0, 0.2, 0.4, 0.6], vec![1.0, 0.0, 2.0]).unwrap();
        let r = restrict(&gap, Some((0.1, 0.5))).unwrap();
        assert_eq!(
            r.pieces().collect::<Vec<_>>(),
            vec![(0.1, 0.2, 1.0), (0.2, 0.4, 0.0), (0.4, 0.5, 2.0)]
        );
    }

    #[test]
    fn cutset_snr_bounds_node_nine() {
        let (net, s) = example();
        let cut = [3, 4, 5];
        let t = impulse_query(PNorm::TWO, 40, 0.1);
        let p = SnrQuery::persistent(Spectrum::flat(0.1, 1.0, 1.0).unwrap(), None, 0.1).unwrap();
        for q in [t, p] {
            let all = snr_all(&net, s, &q).unwrap();
            let best = cut.iter().map(|&c| all[c]).fold(0.0, f64::max);
            assert!(all[8] <= best);
        }
    }

    #[test]
    fn ranking_order_and_edge_cases() {
        let (net, s) = example();
        let q = impulse_query(PNorm::ONE, 30, 1.0);
        assert!(rank_sensors(&net, s, &[], &q).unwrap().is_empty());
        assert_eq!(rank_sensors(&net, s, &[s], &q).unwrap().len(), 1);
        let all: Vec<NodeId> = net.nodes().collect();
        let ranked = rank_sensors(&net, s, &all, &q).unwrap();
        assert_eq!(ranked[0].0, s);
        assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        let dc = distance_classes(&net, s).unwrap();
        let best_of = |d: usize| {
            ranked
                .iter()
                .position(|(v, _)| dc.distance_of(*v) == Some(d))
                .unwrap()
        };
        for d in 0..dc.max_distance() {
            assert!(best_of(d) < best_of(d + 1));
        }
    }

    #[test]
    fn tie_break_by_id() {
        let net = Network::from_rows(vec![
            vec![0.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.0],
            vec![0.5, 0.0, 0.0],
        ])
        .unwrap();
        let q = impulse_query(PNorm::TWO, 5, 1.0);
        let r = rank_sensors(&net, NodeId::new(0), &[NodeId::new(2), NodeId::new(1)], &q).unwrap();
        assert_eq!(r[0].0, NodeId::new(1));
        assert_eq!(r[0].1, r[1].1);
    }

    #[test]
    fn example_is_propagation_stable() {
        let (net, _) = example();
        let q = PropagationStabilityQuery::sampled(PNorm::TWO, PNorm::TWO, 10, 40, 3);
        let r = check_propagation_stability(&net, &q).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        assert!(r.cases_run > 0);
        assert!(r.note.is_some());
        let neg =
            check_propagation_stability_with(&net, &q, CheckOptions::default().negated()).unwrap();
        assert!(!neg.violations.is_empty());
    }

    #[test]
    fn min_cut_and_user_strategies() {
        let (net, _) = example();
        let mut q = PropagationStabilityQuery::sampled(PNorm::ONE, PNorm::INFINITY, 3, 30, 9);
        q.cutset_strategy = CutsetStrategy::MinCutOnly;
        assert!(check_propagation_stability(&net, &q).unwrap().passed());
        q.cutset_strategy =
            CutsetStrategy::UserProvided(vec![Cutset::from_labels(&[4, 5, 6]).unwrap()]);
        q.sources = Some(vec![NodeId::new(0)]);
        let r = check_propagation_stability(&net, &q).unwrap();
        assert!(r.passed());
        // targets 7, 8, 9, 2, 3 are cut off from 1 by {4, 5, 6}
        assert_eq!(r.cases_run, 3 * 5);
    }

    #[test]
    fn noisy_demo_is_seeded() {
        let clean = vec![1.0; 100];
        let a = noisy_measurement(&clean, 0.5, 1).unwrap();
        assert_eq!(a, noisy_measurement(&clean, 0.5, 1).unwrap());
        let mean: f64 = a.iter().sum::<f64>() / 100.0;
        assert!((mean - 1.0).abs() < 0.3);
        assert!(noisy_measurement(&clean, -1.0, 1).is_err());
    }

    #[test]
    fn invalid_queries() {
        assert!(SnrQuery::transient(PNorm::TWO, InputSignal::impulse(), 10, 0.0).is_err());
        assert!(SnrQuery::persistent(Spectrum::zero(), Some((1.0, 0.5)), 1.0).is_err());
        let (net, s) = example();
        let q = impulse_query(PNorm::TWO, 10, 1.0);
        assert!(persistent_snr(&net, s, s, &q).is_err());
    }
}
