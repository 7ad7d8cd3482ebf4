//! Empirical checks of the cutset decrescence inequalities.
//!
//! Every check compares a target-side quantity `lhs` against a cutset-side
//! bound `rhs` and records a [`Witness`] when `lhs > rhs + tol`. With
//! [`CheckOptions::negate`] the comparison is inverted, so a correct
//! implementation must report violations; this guards against checks that
//! pass vacuously.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cutset::{enumerate_minimal_cutsets, validate_cutset, Cutset, SeparationCertificate};
use crate::error::{Error, Result};
use crate::metrics::quadrature::{band_energy_all, weighted_band_energy_all};
use crate::metrics::{frequency_response_all, impulse_responses, lp_gains_all, PNorm, Spectrum};
use crate::network::{classify, distance_classes, is_ergodic, Network, NodeId};
use crate::random::{network_seeds, RandomNetConfig};
use crate::simulate::{build_q, simulate, InputSignal, SignalKind};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Theorem {
    Lemma1,
    T1Gain,
    T2Periodic,
    T2Freq,
    T3FreqStochastic,
    T4Band,
    T5Markov,
    T6Multi,
    NeighborIneq,
    PropStability,
}

impl Theorem {
    pub const ALL: [Theorem; 10] = [
        Theorem::Lemma1,
        Theorem::T1Gain,
        Theorem::T2Periodic,
        Theorem::T2Freq,
        Theorem::T3FreqStochastic,
        Theorem::T4Band,
        Theorem::T5Markov,
        Theorem::T6Multi,
        Theorem::NeighborIneq,
        Theorem::PropStability,
    ];

    /// The checks run by the randomized and example suites.
    pub const SUITE: [Theorem; 9] = [
        Theorem::Lemma1,
        Theorem::T1Gain,
        Theorem::T2Periodic,
        Theorem::T2Freq,
        Theorem::T3FreqStochastic,
        Theorem::T4Band,
        Theorem::T5Markov,
        Theorem::T6Multi,
        Theorem::NeighborIneq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::Lemma1 => "Lemma1",
            Theorem::T1Gain => "T1_gain",
            Theorem::T2Periodic => "T2_periodic",
            Theorem::T2Freq => "T2_freq",
            Theorem::T3FreqStochastic => "T3_freq_stochastic",
            Theorem::T4Band => "T4_band",
            Theorem::T5Markov => "T5_markov",
            Theorem::T6Multi => "T6_multi",
            Theorem::NeighborIneq => "NeighborIneq",
            Theorem::PropStability => "PropStability",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown theorem '{s}'")))
    }
}

impl Serialize for Theorem {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// One failed (or, when negated, one satisfied) inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub network: String,
    pub cutset: Option<Cutset>,
    pub node: Option<NodeId>,
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs + tol - lhs`; negative for a genuine violation.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub theorem: Theorem,
    pub cases_run: usize,
    pub violations: Vec<Witness>,
    pub tolerance_used: f64,
    /// Smallest `rhs - lhs` seen over all cases.
    pub tightest_margin: Option<f64>,
    pub negated: bool,
    /// Cases that could not be evaluated.
    pub errors: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn new(theorem: Theorem, opts: CheckOptions) -> Self {
        VerificationReport {
            theorem,
            cases_run: 0,
            violations: Vec::new(),
            tolerance_used: opts.tol,
            tightest_margin: None,
            negated: opts.negate,
            errors: Vec::new(),
            note: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.errors.is_empty()
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.cases_run += other.cases_run;
        self.violations.extend(other.violations);
        self.errors.extend(other.errors);
        self.tightest_margin = match (self.tightest_margin, other.tightest_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if self.note.is_none() {
            self.note = other.note;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub tol: f64,
    pub negate: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tol: DEFAULT_TOL,
            negate: false,
        }
    }
}

impl CheckOptions {
    pub fn with_tol(tol: f64) -> Self {
        CheckOptions { tol, negate: false }
    }

    pub fn negated(self) -> Self {
        CheckOptions {
            negate: true,
            ..self
        }
    }
}

struct Recorder {
    report: VerificationReport,
    network: String,
    opts: CheckOptions,
}

impl Recorder {
    fn new(theorem: Theorem, net: &Network, opts: CheckOptions) -> Self {
        Recorder {
            report: VerificationReport::new(theorem, opts),
            network: net.fingerprint(),
            opts,
        }
    }

    fn check(
        &mut self,
        cutset: Option<&Cutset>,
        node: Option<NodeId>,
        case: impl FnOnce() -> String,
        lhs: f64,
        rhs: f64,
    ) {
        let r = &mut self.report;
        r.cases_run += 1;
        let margin = rhs - lhs;
        r.tightest_margin = Some(r.tightest_margin.map_or(margin, |m| m.min(margin)));
        let holds = lhs <= rhs + self.opts.tol;
        if holds == self.opts.negate {
            r.violations.push(Witness {
                network: self.network.clone(),
                cutset: cutset.cloned(),
                node,
                case: case(),
                lhs,
                rhs,
                slack: rhs + self.opts.tol - lhs,
            });
        }
    }

    /// `values[target] <= max_{c in C} values[c]`.
    fn cutset_max(
        &mut self,
        cutset: &Cutset,
        target: NodeId,
        values: &[f64],
        case: impl FnOnce() -> String,
    ) {
        let (node, rhs) = max_over(cutset.members(), values);
        self.check(Some(cutset), Some(node), case, values[target.index()], rhs);
    }

    fn finish(self) -> VerificationReport {
        self.report
    }
}

fn max_over(members: &[NodeId], values: &[f64]) -> (NodeId, f64) {
    members.iter().map(|&c| (c, values[c.index()])).fold(
        (members[0], f64::NEG_INFINITY),
        |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        },
    )
}

fn severed_cert(
    net: &Network,
    sources: &[NodeId],
    target: NodeId,
    cutset: &Cutset,
) -> Result<SeparationCertificate> {
    let cert = validate_cutset(net, sources, target, cutset)?;
    if !cert.severed {
        return Err(Error::NotSevered { target });
    }
    Ok(cert)
}

fn fmt_p(p: PNorm) -> String {
    p.to_string()
}

/// `G_p(target) <= max_i G_p(c(i))` for each cutset.
pub fn verify_gain_decrescence(
    net: &Network,
    s: NodeId,
    target: NodeId,
    cutsets: &[Cutset],
    p: PNorm,
    k_f: usize,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    verify_multi_gain(net, &[s], target, cutsets, p, k_f, opts, Theorem::T1Gain)
}

/// Multi-input version: the cutset must separate every input from the target.
pub fn verify_multi_input(
    net: &Network,
    inputs: &[NodeId],
    target: NodeId,
    cutset: &Cutset,
    p: PNorm,
    k_f: usize,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    verify_multi_gain(
        net,
        inputs,
        target,
        std::slice::from_ref(cutset),
        p,
        k_f,
        opts,
        Theorem::T6Multi,
    )
}

#[allow(clippy::too_many_arguments)]
fn verify_multi_gain(
    net: &Network,
    inputs: &[NodeId],
    target: NodeId,
    cutsets: &[Cutset],
    p: PNorm,
    k_f: usize,
    opts: CheckOptions,
    theorem: Theorem,
) -> Result<VerificationReport> {
    for c in cutsets {
        severed_cert(net, inputs, target, c)?;
    }
    let gains: Vec<f64> = lp_gains_all(net, inputs, p, k_f)?
        .into_iter()
        .map(|g| g.value)
        .collect();
    let mut rec = Recorder::new(theorem, net, opts);
    for c in cutsets {
        rec.cutset_max(c, target, &gains, || format!("p={} k_f={k_f}", fmt_p(p)));
    }
    Ok(rec.finish())
}

/// Max gain per distance class is nonincreasing in distance: every class
/// `d >= 1` separates the source from all farther nodes.
pub fn verify_distance_decrescence(
    net: &Network,
    s: NodeId,
    p: PNorm,
    k_f: usize,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    let gains: Vec<f64> = lp_gains_all(net, &[s], p, k_f)?
        .into_iter()
        .map(|g| g.value)
        .collect();
    let dc = distance_classes(net, s)?;
    let mut rec = Recorder::new(Theorem::T1Gain, net, opts);
    for d in 1..dc.max_distance() {
        let near = Cutset::new(dc.class(d).iter().copied())?;
        let (far_node, far) = max_over(dc.class(d + 1), &gains);
        let (_, bound) = max_over(near.members(), &gains);
        rec.check(
            Some(&near),
            Some(far_node),
            || format!("distance {} vs {d}, p={} k_f={k_f}", d + 1, fmt_p(p)),
            far,
            bound,
        );
    }
    Ok(rec.finish())
}

/// `sum_k |x_q(k)|^p <= sum_{j in N(q)} W_j sum_k |x_j(k)|^p` with
/// `W_j = a_qj / (1 - a_qq)`, at every non-source node, on the simulated
/// trace `k = 0..=k_f`. For `p = inf` the sums become maxima.
pub fn verify_neighbor_inequality(
    net: &Network,
    s: NodeId,
    k_f: usize,
    input: &InputSignal,
    ps: &[PNorm],
    opts: CheckOptions,
) -> Result<VerificationReport> {
    net.check_node(s)?;
    for q in net.nodes() {
        if q != s && net.weight(q, q) >= 1.0 {
            return Err(Error::SelfLoopSaturated { node: q });
        }
    }
    let trace = simulate(net, &BTreeMap::from([(s, input.clone())]), k_f)?;
    let columns: Vec<Vec<f64>> = net.nodes().map(|v| trace.node(v)).collect();
    let mut rec = Recorder::new(Theorem::NeighborIneq, net, opts);
    for &p in ps {
        let per_node: Vec<f64> = columns
            .iter()
            .map(|x| {
                if p.is_infinite() {
                    PNorm::INFINITY.norm(x.iter().copied())
                } else {
                    p.power_sum(x.iter().copied())
                }
            })
            .collect();
        for q in net.nodes().filter(|&q| q != s) {
            let denom = 1.0 - net.weight(q, q);
            let rhs = net
                .upstream(q)
                .map(|(j, a)| {
                    let w = if p.is_infinite() { 1.0 } else { a / denom };
                    w * per_node[j.index()]
                })
                .fold(
                    0.0,
                    |acc: f64, v| if p.is_infinite() { acc.max(v) } else { acc + v },
                );
            rec.check(
                None,
                Some(q),
                || format!("p={} k_f={k_f}", fmt_p(p)),
                per_node[q.index()],
                rhs,
            );
        }
    }
    Ok(rec.finish())
}

/// `x_t(k) <= max(0, max_i max_{k'<=k} x_c(i)(k'))` and the mirrored lower
/// bound, for every `k <= k_f`.
pub fn verify_periodic_bounds(
    net: &Network,
    s: NodeId,
    target: NodeId,
    cutset: &Cutset,
    signal: &InputSignal,
    k_f: usize,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    severed_cert(net, &[s], target, cutset)?;
    let trace = simulate(net, &BTreeMap::from([(s, signal.clone())]), k_f)?;
    let mut rec = Recorder::new(Theorem::T2Periodic, net, opts);
    periodic_checks(&mut rec, &trace.states, target, cutset, "");
    Ok(rec.finish())
}

fn periodic_checks(
    rec: &mut Recorder,
    states: &[Vec<f64>],
    target: NodeId,
    cutset: &Cutset,
    label: &str,
) {
    let mut run_max = 0.0f64;
    let mut run_min = 0.0f64;
    for (k, x) in states.iter().enumerate() {
        for c in cutset.members() {
            run_max = run_max.max(x[c.index()]);
            run_min = run_min.min(x[c.index()]);
        }
        let y = x[target.index()];
        rec.check(
            Some(cutset),
            Some(target),
            || format!("{label}k={k} upper"),
            y,
            run_max,
        );
        rec.check(
            Some(cutset),
            Some(target),
            || format!("{label}k={k} lower"),
            -y,
            -run_min,
        );
    }
}

fn freq_theorem(net: &Network) -> Result<Theorem> {
    if classify(net).is_stochastic() {
        if !is_ergodic(net)? {
            return Err(Error::invalid("stochastic network is not ergodic"));
        }
        Ok(Theorem::T3FreqStochastic)
    } else {
        Ok(Theorem::T2Freq)
    }
}

/// `|H_t(e^{jW})| <= max_i |H_c(i)(e^{jW})|` at every grid frequency.
pub fn verify_freq_decrescence(
    net: &Network,
    s: NodeId,
    target: NodeId,
    cutset: &Cutset,
    omegas: &[f64],
    opts: CheckOptions,
) -> Result<VerificationReport> {
    severed_cert(net, &[s], target, cutset)?;
    let mut rec = Recorder::new(freq_theorem(net)?, net, opts);
    for &w in omegas {
        let mags: Vec<f64> = frequency_response_all(net, s, w)?
            .iter()
            .map(|h| h.norm())
            .collect();
        rec.cutset_max(cutset, target, &mags, || format!("omega={w}"));
    }
    Ok(rec.finish())
}

fn require_substochastic(net: &Network) -> Result<()> {
    if classify(net).is_stochastic() {
        return Err(Error::NotSubstochastic);
    }
    Ok(())
}

fn quad_tol(opts: CheckOptions) -> f64 {
    0.1 * opts.tol
}

/// Band energy decrescence for each band `[W1, W2]`.
pub fn verify_band_decrescence(
    net: &Network,
    s: NodeId,
    target: NodeId,
    cutset: &Cutset,
    bands: &[(f64, f64)],
    opts: CheckOptions,
) -> Result<VerificationReport> {
    require_substochastic(net)?;
    severed_cert(net, &[s], target, cutset)?;
    let mut rec = Recorder::new(Theorem::T4Band, net, opts);
    for &(w1, w2) in bands {
        let e: Vec<f64> = band_energy_all(net, s, w1, w2, quad_tol(opts))?
            .into_iter()
            .map(|b| b.value)
            .collect();
        rec.cutset_max(cutset, target, &e, || format!("band=[{w1}, {w2}]"));
    }
    Ok(rec.finish())
}

/// Weighted band energy decrescence for each spectrum.
pub fn verify_weighted_band_decrescence(
    net: &Network,
    s: NodeId,
    target: NodeId,
    cutset: &Cutset,
    spectra: &[Spectrum],
    opts: CheckOptions,
) -> Result<VerificationReport> {
    require_substochastic(net)?;
    severed_cert(net, &[s], target, cutset)?;
    let mut rec = Recorder::new(Theorem::T4Band, net, opts);
    for (k, spec) in spectra.iter().enumerate() {
        let e = weighted_band_energy_all(net, s, spec, quad_tol(opts))?;
        rec.cutset_max(cutset, target, &e, || format!("spectrum #{k}"));
    }
    Ok(rec.finish())
}

/// `M_t(k) <= max_i max_{k'<=k} M_c(i)(k')` for `k <= k_max`.
pub fn verify_markov_decrescence(
    net: &Network,
    s: NodeId,
    target: NodeId,
    cutset: &Cutset,
    k_max: usize,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    severed_cert(net, &[s], target, cutset)?;
    let m = impulse_responses(net, s, k_max + 1)?;
    let mut rec = Recorder::new(Theorem::T5Markov, net, opts);
    markov_checks(&mut rec, &m, target, cutset);
    Ok(rec.finish())
}

fn markov_checks(rec: &mut Recorder, m: &[Vec<f64>], target: NodeId, cutset: &Cutset) {
    let mut best = f64::NEG_INFINITY;
    let mut best_node = cutset.members()[0];
    for (k, mk) in m.iter().enumerate() {
        let (node, v) = max_over(cutset.members(), mk);
        if v > best {
            best = v;
            best_node = node;
        }
        rec.check(
            Some(cutset),
            Some(best_node),
            || format!("k={k}"),
            mk[target.index()],
            best,
        );
    }
}

/// Stacking-matrix check on one certificate: `Q >= 0`, row sums of `Q` at most `1`, and
/// `[X_z(0..=k_f)] = Q [X_c(k_f..=0)]` against a full simulation driven by
/// `input` at every certificate source.
pub fn verify_lemma1(
    net: &Network,
    cert: &SeparationCertificate,
    k_f: usize,
    input: &InputSignal,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    let q = build_q(net, cert, k_f)?;
    let inputs = cert.sources.iter().map(|&s| (s, input.clone())).collect();
    let trace = simulate(net, &inputs, k_f)?;
    let xc = trace.restrict(cert.cutset.members());
    let xz = trace.restrict(&cert.target_partition);
    let predicted = q.apply(&xc)?;
    let deviation = predicted
        .iter()
        .flatten()
        .zip(xz.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut rec = Recorder::new(Theorem::Lemma1, net, opts);
    let c = Some(&cert.cutset);
    rec.check(c, None, || format!("k_f={k_f} Q >= 0"), -q.min_entry(), 0.0);
    rec.check(
        c,
        None,
        || format!("k_f={k_f} row sums"),
        q.max_row_sum(),
        1.0,
    );
    rec.check(c, None, || format!("k_f={k_f} stacking"), deviation, 0.0);
    Ok(rec.finish())
}

/// Parameters of the suites run by [`random_suite`] and [`example_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSettings {
    pub ps: Vec<PNorm>,
    pub gain_horizon: usize,
    pub periodic_horizon: usize,
    pub grid_points: usize,
    pub bands: Vec<(f64, f64)>,
    pub markov_k: usize,
    pub multi_inputs: usize,
    pub lemma_horizon: usize,
    pub neighbor_horizon: usize,
    pub cutset_limit: usize,
    pub targets_per_net: usize,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            ps: vec![
                PNorm::ONE,
                PNorm::new(1.5).expect("valid"),
                PNorm::TWO,
                PNorm::INFINITY,
            ],
            gain_horizon: 30,
            periodic_horizon: 60,
            grid_points: 256,
            bands: vec![(0.0, PI), (0.1, 0.5), (2.0, 3.0)],
            markov_k: 100,
            multi_inputs: 2,
            lemma_horizon: 50,
            neighbor_horizon: 60,
            cutset_limit: 32,
            targets_per_net: 3,
        }
    }
}

/// Per-theorem reports of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub networks: usize,
    pub seed: Option<u64>,
    pub reports: Vec<VerificationReport>,
}

impl SuiteReport {
    pub fn total_violations(&self) -> usize {
        self.reports.iter().map(|r| r.violations.len()).sum()
    }

    pub fn total_errors(&self) -> usize {
        self.reports.iter().map(|r| r.errors.len()).sum()
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(VerificationReport::passed)
    }

    pub fn report(&self, theorem: Theorem) -> Option<&VerificationReport> {
        self.reports.iter().find(|r| r.theorem == theorem)
    }
}

fn square_wave(period: usize) -> InputSignal {
    let half = period / 2;
    InputSignal {
        kind: SignalKind::PeriodicSamples {
            period,
            samples: (0..period)
                .map(|k| if k < half { 1.0 } else { -1.0 })
                .collect(),
        },
        amplitude: 1.0,
    }
}

fn periodic_signals<R: Rng>(rng: &mut R) -> Vec<(String, InputSignal)> {
    let sampled_cos = InputSignal {
        kind: SignalKind::PeriodicSamples {
            period: 5,
            samples: (0..5).map(|k| (2.0 * PI * k as f64 / 5.0).cos()).collect(),
        },
        amplitude: 1.0,
    };
    let random = InputSignal {
        kind: SignalKind::PeriodicSamples {
            period: 4,
            samples: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        },
        amplitude: 1.0,
    };
    vec![
        ("square6 ".into(), square_wave(6)),
        ("cos5 ".into(), sampled_cos),
        ("random4 ".into(), random),
    ]
}

fn random_input<R: Rng>(rng: &mut R, len: usize) -> InputSignal {
    InputSignal::custom((0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Frequency grid: `[0, pi]` for substochastic nets, `(0, pi]` otherwise.
pub fn frequency_grid(points: usize, include_zero: bool) -> Vec<f64> {
    if include_zero {
        let last = points.saturating_sub(1).max(1) as f64;
        (0..points).map(|k| PI * k as f64 / last).collect()
    } else {
        (1..=points)
            .map(|k| PI * k as f64 / points as f64)
            .collect()
    }
}

struct NetCase<'a> {
    net: &'a Network,
    stochastic: bool,
    settings: &'a SuiteSettings,
    reports: BTreeMap<Theorem, Recorder>,
}

impl<'a> NetCase<'a> {
    fn new(
        net: &'a Network,
        theorems: &BTreeSet<Theorem>,
        settings: &'a SuiteSettings,
        opts: CheckOptions,
    ) -> Self {
        let stochastic = classify(net).is_stochastic();
        let reports = theorems
            .iter()
            .filter(|t| applicable(**t, stochastic))
            .map(|&t| (t, Recorder::new(t, net, opts)))
            .collect();
        NetCase {
            net,
            stochastic,
            settings,
            reports,
        }
    }

    fn wants(&self, t: Theorem) -> bool {
        self.reports.contains_key(&t)
    }

    fn rec(&mut self, t: Theorem) -> &mut Recorder {
        self.reports.get_mut(&t).expect("theorem selected")
    }

    fn record_error(&mut self, t: Theorem, context: &str, e: &Error) {
        let msg = format!("{}: {context}: {e}", &self.net.fingerprint()[..12]);
        self.rec(t).report.errors.push(msg);
    }

    fn absorb(&mut self, t: Theorem, context: &str, r: Result<VerificationReport>) {
        match r {
            Ok(rep) => {
                let rec = self.rec(t);
                rec.report.merge(rep);
            }
            Err(e) => self.record_error(t, context, &e),
        }
    }

    fn finish(self) -> Vec<VerificationReport> {
        self.reports.into_values().map(Recorder::finish).collect()
    }
}

fn applicable(t: Theorem, stochastic: bool) -> bool {
    match t {
        Theorem::T2Freq | Theorem::T4Band => !stochastic,
        Theorem::T3FreqStochastic => stochastic,
        Theorem::PropStability => false,
        _ => true,
    }
}

/// Targets reachable from `s` that admit a separating cutset.
fn cuttable_targets(net: &Network, s: NodeId) -> Result<Vec<NodeId>> {
    let dc = distance_classes(net, s)?;
    Ok(net
        .nodes()
        .filter(|&t| dc.distance_of(t).is_some_and(|d| d >= 2))
        .collect())
}

/// Runs the selected checks on one network with source `s`.
fn run_network<R: Rng>(
    net: &Network,
    s: NodeId,
    targets: Option<&[NodeId]>,
    theorems: &BTreeSet<Theorem>,
    settings: &SuiteSettings,
    opts: CheckOptions,
    rng: &mut R,
) -> Vec<VerificationReport> {
    let mut case = NetCase::new(net, theorems, settings, opts);
    let targets = match targets {
        Some(t) => t.to_vec(),
        None => match cuttable_targets(net, s) {
            Ok(mut all) => {
                all.shuffle(rng);
                all.truncate(settings.targets_per_net);
                all.sort();
                all
            }
            Err(e) => {
                for t in case.reports.keys().copied().collect::<Vec<_>>() {
                    case.record_error(t, "targets", &e);
                }
                return case.finish();
            }
        },
    };
    let periodic = periodic_signals(rng);
    let lemma_input = random_input(rng, settings.lemma_horizon);
    let neighbor_inputs = [
        InputSignal::impulse(),
        random_input(rng, settings.neighbor_horizon),
    ];
    let second_input = {
        let others: Vec<NodeId> = net.nodes().filter(|&v| v != s).collect();
        others.choose(rng).copied()
    };

    if case.wants(Theorem::NeighborIneq) {
        for input in &neighbor_inputs {
            let r = verify_neighbor_inequality(
                net,
                s,
                settings.neighbor_horizon,
                input,
                &settings.ps,
                opts,
            );
            case.absorb(Theorem::NeighborIneq, "neighbor inequality", r);
        }
    }
    if case.wants(Theorem::T1Gain) {
        for &p in &settings.ps {
            let r = verify_distance_decrescence(net, s, p, settings.gain_horizon, opts);
            case.absorb(Theorem::T1Gain, "distance classes", r);
        }
    }

    let gains = if case.wants(Theorem::T1Gain) {
        settings
            .ps
            .iter()
            .map(|&p| {
                lp_gains_all(net, &[s], p, settings.gain_horizon)
                    .map(|g| (p, g.into_iter().map(|r| r.value).collect::<Vec<_>>()))
            })
            .collect::<Result<Vec<_>>>()
    } else {
        Ok(Vec::new())
    };
    let freq_theorem = if case.stochastic {
        Theorem::T3FreqStochastic
    } else {
        Theorem::T2Freq
    };
    let responses = if case.wants(freq_theorem) {
        let grid = frequency_grid(settings.grid_points, !case.stochastic);
        let ergodic = if case.stochastic {
            is_ergodic(net).and_then(|e| {
                e.then_some(())
                    .ok_or_else(|| Error::invalid("stochastic network is not ergodic"))
            })
        } else {
            Ok(())
        };
        ergodic.and_then(|_| {
            grid.iter()
                .map(|&w| {
                    frequency_response_all(net, s, w)
                        .map(|h| (w, h.iter().map(|z| z.norm()).collect::<Vec<_>>()))
                })
                .collect::<Result<Vec<_>>>()
        })
    } else {
        Ok(Vec::new())
    };
    let bands = if case.wants(Theorem::T4Band) {
        settings
            .bands
            .iter()
            .map(|&(a, b)| {
                band_energy_all(net, s, a, b, quad_tol(opts))
                    .map(|e| ((a, b), e.into_iter().map(|x| x.value).collect::<Vec<_>>()))
            })
            .collect::<Result<Vec<_>>>()
    } else {
        Ok(Vec::new())
    };
    let markov = impulse_responses(net, s, settings.markov_k + 1);
    let periodic_traces: Vec<_> = if case.wants(Theorem::T2Periodic) {
        periodic
            .iter()
            .map(|(label, sig)| {
                (
                    label.clone(),
                    simulate(
                        net,
                        &BTreeMap::from([(s, sig.clone())]),
                        settings.periodic_horizon,
                    ),
                )
            })
            .collect()
    } else {
        Vec::new()
    };

    for t in targets {
        let cutsets = match enumerate_minimal_cutsets(net, &[s], t, Some(settings.cutset_limit)) {
            Ok(c) => c,
            Err(e) => {
                for th in case.reports.keys().copied().collect::<Vec<_>>() {
                    case.record_error(th, &format!("cutsets to {t}"), &e);
                }
                continue;
            }
        };
        for c in &cutsets {
            if case.wants(Theorem::T1Gain) {
                match &gains {
                    Ok(g) => {
                        for (p, values) in g {
                            let k_f = case.settings.gain_horizon;
                            case.rec(Theorem::T1Gain)
                                .cutset_max(c, t, values, || format!("p={} k_f={k_f}", fmt_p(*p)));
                        }
                    }
                    Err(e) => case.record_error(Theorem::T1Gain, "gains", e),
                }
            }
            if case.wants(Theorem::T2Periodic) {
                for (label, trace) in &periodic_traces {
                    match trace {
                        Ok(tr) => {
                            periodic_checks(case.rec(Theorem::T2Periodic), &tr.states, t, c, label)
                        }
                        Err(e) => case.record_error(Theorem::T2Periodic, label, e),
                    }
                }
            }
            if case.wants(freq_theorem) {
                match &responses {
                    Ok(rs) => {
                        for (w, mags) in rs {
                            case.rec(freq_theorem)
                                .cutset_max(c, t, mags, || format!("omega={w}"));
                        }
                    }
                    Err(e) => case.record_error(freq_theorem, "frequency response", e),
                }
            }
            if case.wants(Theorem::T4Band) {
                match &bands {
                    Ok(bs) => {
                        for ((a, b), e) in bs {
                            case.rec(Theorem::T4Band)
                                .cutset_max(c, t, e, || format!("band=[{a}, {b}]"));
                        }
                    }
                    Err(e) => case.record_error(Theorem::T4Band, "band energy", e),
                }
            }
            if case.wants(Theorem::T5Markov) {
                match &markov {
                    Ok(m) => markov_checks(case.rec(Theorem::T5Markov), m, t, c),
                    Err(e) => case.record_error(Theorem::T5Markov, "markov", e),
                }
            }
            if case.wants(Theorem::Lemma1) {
                let r = validate_cutset(net, &[s], t, c).and_then(|cert| {
                    verify_lemma1(net, &cert, case.settings.lemma_horizon, &lemma_input, opts)
                });
                case.absorb(Theorem::Lemma1, &format!("lemma1 to {t}"), r);
            }
        }
        if case.wants(Theorem::T6Multi) {
            let mut inputs = vec![s];
            if let Some(s2) = second_input.filter(|&v| v != t) {
                if case.settings.multi_inputs >= 2 {
                    inputs.push(s2);
                }
            }
            let multi_cutsets =
                enumerate_minimal_cutsets(net, &inputs, t, Some(case.settings.cutset_limit));
            match multi_cutsets {
                Ok(mc) if !mc.is_empty() => {
                    for &p in &case.settings.ps {
                        let r = verify_multi_gain(
                            net,
                            &inputs,
                            t,
                            &mc,
                            p,
                            case.settings.gain_horizon,
                            opts,
                            Theorem::T6Multi,
                        );
                        case.absorb(Theorem::T6Multi, "multi-input gain", r);
                    }
                }
                Ok(_) => {}
                Err(Error::InvalidArgument(_)) => {}
                Err(e) => case.record_error(Theorem::T6Multi, "multi-input cutsets", &e),
            }
        }
    }
    case.finish()
}

fn merge_reports(
    theorems: &BTreeSet<Theorem>,
    per_net: Vec<Vec<VerificationReport>>,
    opts: CheckOptions,
) -> Vec<VerificationReport> {
    let mut merged: BTreeMap<Theorem, VerificationReport> = theorems
        .iter()
        .filter(|t| **t != Theorem::PropStability)
        .map(|&t| (t, VerificationReport::new(t, opts)))
        .collect();
    for reports in per_net {
        for r in reports {
            merged
                .entry(r.theorem)
                .or_insert_with(|| VerificationReport::new(r.theorem, opts))
                .merge(r);
        }
    }
    merged.into_values().collect()
}

/// Randomized suite with default settings and tolerance.
pub fn random_suite(
    config: &RandomNetConfig,
    theorems: &BTreeSet<Theorem>,
    budget: usize,
) -> Result<SuiteReport> {
    random_suite_with(
        config,
        theorems,
        budget,
        &SuiteSettings::default(),
        CheckOptions::default(),
    )
}

/// Generates `budget` networks from `config` and runs the selected checks on
/// each, in parallel. Results depend only on the seed.
pub fn random_suite_with(
    config: &RandomNetConfig,
    theorems: &BTreeSet<Theorem>,
    budget: usize,
    settings: &SuiteSettings,
    opts: CheckOptions,
) -> Result<SuiteReport> {
    config.validate()?;
    let seeds = network_seeds(config.seed, budget);
    let per_net: Vec<Vec<VerificationReport>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = match config.generate(&mut rng) {
                Ok(n) => n,
                Err(e) => {
                    return theorems
                        .iter()
                        .map(|&t| {
                            let mut r = VerificationReport::new(t, opts);
                            r.errors.push(format!("generation: {e}"));
                            r
                        })
                        .collect()
                }
            };
            let s = NodeId::new(rng.random_range(0..net.n()));
            run_network(&net, s, None, theorems, settings, opts, &mut rng)
        })
        .collect();
    Ok(SuiteReport {
        networks: budget,
        seed: Some(config.seed),
        reports: merge_reports(theorems, per_net, opts),
    })
}

/// All selected checks on one given network, source `s` and every target
/// that admits a cutset.
pub fn network_suite(
    net: &Network,
    s: NodeId,
    theorems: &BTreeSet<Theorem>,
    settings: &SuiteSettings,
    opts: CheckOptions,
    seed: u64,
) -> Result<SuiteReport> {
    let targets = cuttable_targets(net, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = run_network(net, s, Some(&targets), theorems, settings, opts, &mut rng);
    Ok(SuiteReport {
        networks: 1,
        seed: Some(seed),
        reports: merge_reports(theorems, vec![reports], opts),
    })
}

/// A small ergodic stochastic network: a 4-ring with self-loops.
pub fn stochastic_ring() -> Network {
    Network::from_rows(vec![
        vec![0.5, 0.0, 0.0, 0.5],
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.0, 0.5, 0.5, 0.0],
        vec![0.0, 0.0, 0.5, 0.5],
    ])
    .expect("valid ring")
}

/// Runs every check with its inequality inverted. Each returned report
/// must contain at least one violation.
pub fn negation_self_test() -> Result<Vec<VerificationReport>> {
    let opts = CheckOptions::default().negated();
    let net = Network::nine_node_example();
    let s = NodeId::new(0);
    let t = NodeId::new(8);
    let c = Cutset::from_labels(&[4, 5, 6])?;
    let cert = validate_cutset(&net, &[s], t, &c)?;
    let two = PNorm::TWO;
    let ring = stochastic_ring();
    let ring_cut = Cutset::from_labels(&[2, 4])?;
    let mut out = vec![
        verify_lemma1(&net, &cert, 20, &InputSignal::impulse(), opts)?,
        verify_gain_decrescence(&net, s, t, std::slice::from_ref(&c), two, 20, opts)?,
        verify_periodic_bounds(&net, s, t, &c, &square_wave(6), 40, opts)?,
        verify_freq_decrescence(&net, s, t, &c, &frequency_grid(16, true), opts)?,
        verify_freq_decrescence(
            &ring,
            NodeId::new(0),
            NodeId::new(2),
            &ring_cut,
            &frequency_grid(16, false),
            opts,
        )?,
        verify_band_decrescence(&net, s, t, &c, &[(0.1, 0.5)], opts)?,
        verify_markov_decrescence(&net, s, t, &c, 30, opts)?,
        verify_multi_input(&net, &[s, NodeId::new(1)], t, &c, two, 20, opts)?,
        verify_neighbor_inequality(&net, s, 30, &InputSignal::impulse(), &[two], opts)?,
    ];
    let prop = crate::apps::check_propagation_stability_with(
        &net,
        &crate::apps::PropagationStabilityQuery::sampled(two, two, 2, 20, 1),
        opts,
    )?;
    out.push(prop);
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// JUnit-style XML with one test case per report.
pub fn junit_xml(suite_name: &str, reports: &[VerificationReport]) -> String {
    let failures = reports.iter().filter(|r| !r.passed()).count();
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<testsuite name=\"{}\" tests=\"{}\" failures=\"{}\">\n",
        xml_escape(suite_name),
        reports.len(),
        failures
    );
    for r in reports {
        out.push_str(&format!(
            "  <testcase classname=\"{}\" name=\"{}\">",
            xml_escape(suite_name),
            r.theorem
        ));
        if !r.passed() {
            let mut msg = format!(
                "{} violations, {} errors in {} cases",
                r.violations.len(),
                r.errors.len(),
                r.cases_run
            );
            if let Some(w) = r.violations.first() {
                msg.push_str(&format!(
                    "; first: {} lhs={:e} rhs={:e}",
                    w.case, w.lhs, w.rhs
                ));
            }
            if let Some(e) = r.errors.first() {
                msg.push_str(&format!("; error: {e}"));
            }
            out.push_str(&format!(
                "\n    <failure message=\"{}\"/>\n  ",
                xml_escape(&msg)
            ));
        }
        out.push_str("</testcase>\n");
    }
    out.push_str("</testsuite>\n");
    out
}
