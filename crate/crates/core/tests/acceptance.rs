//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.
//!
//! Run with `cargo test -p decrescence --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{markov_dense, rel_diff, resolvent};
use decrescence::apps::{
    check_propagation_stability, snr_all, PropagationStabilityQuery, SnrQuery,
};
use decrescence::cutset::{enumerate_minimal_cutsets, validate_cutset};
use decrescence::metrics::opnorm::{norm_inf, norm_one, norm_two, power_norm, PowerOptions};
use decrescence::metrics::quadrature::adaptive_simpson;
use decrescence::metrics::{
    frequency_response, lp_gain_infinite, lp_gains_all, ConvolutionOperator, Spectrum,
};
use decrescence::network::distance_classes;
use decrescence::random::RandomNetConfig;
use decrescence::simulate::{build_q, simulate, InputSignal};
use decrescence::verify::{
    negation_self_test, random_suite_with, CheckOptions, SuiteSettings, Theorem,
};
use decrescence::{Network, NodeId, PNorm};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const L1_TABLE: [f64; 4] = [1.2122, 0.4098, 0.3328, 0.2348];
const L2_TABLE: [f64; 4] = [1.1676, 0.3654, 0.2994, 0.2113];
const TABLE_TOL: f64 = 5e-4;
const L1_RUNTIME: Duration = Duration::from_secs(1);
const L2_HORIZONS: [usize; 5] = [10, 20, 50, 100, 200];
const SWEEP_MAX: usize = 200;
const LEMMA_NETS: usize = 100;
const LEMMA_HORIZON: usize = 50;
const LEMMA_ROW_TOL: f64 = 1e-12;
const LEMMA_STACK_TOL: f64 = 1e-10;
const LEMMA_RUNTIME: Duration = Duration::from_secs(60);
const SUITE_SEED: u64 = 42;
const SUITE_SUBSTOCHASTIC: usize = 50;
const SUITE_STOCHASTIC: usize = 20;
const METHOD_TOL: f64 = 1e-8;
const DFT_TOL: f64 = 1e-8;
const PARSEVAL_TOL: f64 = 1e-6;
const OPERATORS: usize = 20;
const PROPSTAB_NETS: usize = 50;
const PROPSTAB_INPUTS: usize = 10;
const PROPSTAB_HORIZON: usize = 50;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn id(label: usize) -> NodeId {
    NodeId::from_one_based(label).expect("positive label")
}

/// Maximum of `values` over each distance class from node 1.
fn class_max(net: &Network, values: &[f64]) -> Vec<f64> {
    let dc = distance_classes(net, id(1)).expect("valid source");
    (0..=dc.max_distance())
        .map(|d| {
            dc.class(d)
                .iter()
                .map(|v| values[v.index()])
                .fold(0.0, f64::max)
        })
        .collect()
}

fn fmt(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn max_abs_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn gains(net: &Network, p: PNorm, k_f: usize) -> Vec<f64> {
    lp_gains_all(net, &[id(1)], p, k_f)
        .expect("gains on the example")
        .iter()
        .map(|g| g.value)
        .collect()
}

fn criterion_1() -> Outcome {
    let net = Network::nine_node_example();
    let start = Instant::now();
    let mut l1 = Vec::new();
    let mut linf = Vec::new();
    for i in net.nodes() {
        l1.push(
            lp_gain_infinite(&net, id(1), i, PNorm::ONE)
                .map_err(|e| e.to_string())?
                .value,
        );
        linf.push(
            lp_gain_infinite(&net, id(1), i, PNorm::INFINITY)
                .map_err(|e| e.to_string())?
                .value,
        );
    }
    let classes = class_max(&net, &l1);
    let elapsed = start.elapsed();
    let dev = max_abs_dev(&classes, &L1_TABLE);
    let detail = format!(
        "l1 per distance {} vs {}, max deviation {dev:.2e} (tol {TABLE_TOL:.0e}), {:.1} ms",
        fmt(&classes),
        fmt(&L1_TABLE),
        elapsed.as_secs_f64() * 1e3
    );
    if l1 != linf {
        return Err(format!("l_inf differs from l1; {detail}"));
    }
    if dev > TABLE_TOL || elapsed > L1_RUNTIME {
        return Err(detail);
    }
    Ok(detail)
}

fn criterion_2() -> Outcome {
    let net = Network::nine_node_example();
    for k_f in L2_HORIZONS {
        let classes = class_max(&net, &gains(&net, PNorm::TWO, k_f));
        if !classes.windows(2).all(|w| w[1] < w[0]) {
            return Err(format!(
                "k_f={k_f}: l2 per distance {} not strictly decreasing",
                fmt(&classes)
            ));
        }
    }
    let mut best = (0, f64::INFINITY, Vec::new());
    for k_f in 1..=SWEEP_MAX {
        let classes = class_max(&net, &gains(&net, PNorm::TWO, k_f));
        let dev = max_abs_dev(&classes, &L2_TABLE);
        if dev < best.1 {
            best = (k_f, dev, classes);
        }
    }
    Ok(format!(
        "strictly decreasing at k_f in {L2_HORIZONS:?}; sweep 1..={SWEEP_MAX}: closest at k_f={} with {} vs {}, max deviation {:.2e}",
        best.0,
        fmt(&best.2),
        fmt(&L2_TABLE),
        best.1
    ))
}

fn criterion_3() -> Outcome {
    let net = Network::nine_node_example();
    let dc = distance_classes(&net, id(1)).map_err(|e| e.to_string())?;
    let mut profiles: Vec<(String, Vec<f64>)> = vec![(
        "inf".into(),
        net.nodes()
            .map(|i| lp_gain_infinite(&net, id(1), i, PNorm::ONE).map(|g| g.value))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?,
    )];
    for k_f in [5, 19, 50] {
        profiles.push((k_f.to_string(), gains(&net, PNorm::ONE, k_f)));
    }
    let mut checks = 0;
    for (horizon, g) in &profiles {
        let shell = [4, 5, 6].iter().map(|&l| g[l - 1]).fold(0.0, f64::max);
        if g[8] > shell {
            return Err(format!(
                "k_f={horizon}: gain(9)={} > max over {{4,5,6}}={shell}",
                g[8]
            ));
        }
        for d in 1..dc.max_distance() {
            let cut = dc.class(d).iter().map(|v| g[v.index()]).fold(0.0, f64::max);
            for far in d + 1..=dc.max_distance() {
                for v in dc.class(far) {
                    checks += 1;
                    if g[v.index()] > cut {
                        return Err(format!(
                            "k_f={horizon}: node {v} at distance {far} has {} > {cut} at distance {d}",
                            g[v.index()]
                        ));
                    }
                }
            }
        }
    }
    let g = &profiles[0].1;
    Ok(format!(
        "gain(9)={:.4} <= max(gain(4..6))={:.4}; {checks} distance-class comparisons hold",
        g[8],
        [g[3], g[4], g[5]].into_iter().fold(0.0, f64::max)
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let config = RandomNetConfig::default();
    let nets = config
        .generate_many(LEMMA_NETS)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let (mut cutsets, mut min_entry, mut max_row, mut max_dev) =
        (0usize, f64::INFINITY, 0.0f64, 0.0f64);
    for net in &nets {
        let s = NodeId::new(rng.random_range(0..net.n()));
        let input: Vec<f64> = (0..LEMMA_HORIZON)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let trace = simulate(
            net,
            &BTreeMap::from([(s, InputSignal::custom(input))]),
            LEMMA_HORIZON,
        )
        .map_err(|e| e.to_string())?;
        for t in net.nodes().filter(|&t| t != s) {
            for c in enumerate_minimal_cutsets(net, &[s], t, None).map_err(|e| e.to_string())? {
                let cert = validate_cutset(net, &[s], t, &c).map_err(|e| e.to_string())?;
                let q = build_q(net, &cert, LEMMA_HORIZON).map_err(|e| e.to_string())?;
                let stacked: Vec<f64> = (0..=LEMMA_HORIZON)
                    .rev()
                    .flat_map(|k| c.members().iter().map(move |v| (k, v.index())))
                    .map(|(k, v)| trace.states[k][v])
                    .collect();
                let xz = q.matrix() * DVector::from_vec(stacked);
                let nz = cert.target_partition.len();
                for k in 0..=LEMMA_HORIZON {
                    for (r, z) in cert.target_partition.iter().enumerate() {
                        max_dev = max_dev.max((xz[k * nz + r] - trace.states[k][z.index()]).abs());
                    }
                }
                min_entry = min_entry.min(q.min_entry());
                max_row = max_row.max(q.max_row_sum());
                cutsets += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{LEMMA_NETS} nets, {cutsets} cutsets, k_f={LEMMA_HORIZON}: min entry {min_entry:.2e}, max row sum {max_row:.15}, \
         max stacking deviation {max_dev:.2e}, {:.2} s",
        elapsed.as_secs_f64()
    );
    if cutsets == 0
        || min_entry < 0.0
        || max_row > 1.0 + LEMMA_ROW_TOL
        || max_dev > LEMMA_STACK_TOL
        || elapsed > LEMMA_RUNTIME
    {
        return Err(detail);
    }
    Ok(detail)
}

fn criterion_5() -> Outcome {
    let theorems: BTreeSet<Theorem> = Theorem::SUITE.into_iter().collect();
    let settings = SuiteSettings::default();
    let opts = CheckOptions::default();
    let mut parts = Vec::new();
    let mut failed = false;
    for (stochastic, count) in [(false, SUITE_SUBSTOCHASTIC), (true, SUITE_STOCHASTIC)] {
        let config = RandomNetConfig {
            seed: SUITE_SEED,
            stochastic_mode: stochastic,
            ..RandomNetConfig::default()
        };
        let suite = random_suite_with(&config, &theorems, count, &settings, opts)
            .map_err(|e| e.to_string())?;
        let cases: usize = suite.reports.iter().map(|r| r.cases_run).sum();
        failed |= suite.total_violations() > 0 || suite.total_errors() > 0;
        parts.push(format!(
            "{count} {} nets: {cases} cases, {} violations, {} errors",
            if stochastic {
                "stochastic"
            } else {
                "substochastic"
            },
            suite.total_violations(),
            suite.total_errors()
        ));
    }
    let negated = negation_self_test().map_err(|e| e.to_string())?;
    let silent: Vec<String> = negated
        .iter()
        .filter(|r| r.violations.is_empty())
        .map(|r| r.theorem.to_string())
        .collect();
    failed |= !silent.is_empty();
    parts.push(if silent.is_empty() {
        format!("self-test: all {} negated checks flagged", negated.len())
    } else {
        format!("self-test: silent negated checks {}", silent.join(", "))
    });
    let detail = parts.join("; ");
    if failed {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut worst_method = 0.0f64;
    for _ in 0..OPERATORS {
        let k_f = rng.random_range(1..=32);
        let channels = rng.random_range(1..=3);
        let kernels: Vec<Vec<f64>> = (0..channels)
            .map(|_| (0..k_f).map(|_| rng.random::<f64>()).collect())
            .collect();
        let op = ConvolutionOperator::new(kernels, k_f).map_err(|e| e.to_string())?;
        let opts = PowerOptions::default();
        for (p, exact) in [
            (PNorm::ONE, norm_one(&op)),
            (PNorm::TWO, norm_two(&op)),
            (PNorm::INFINITY, norm_inf(&op)),
        ] {
            let est = power_norm(&op, p, opts).map_err(|e| e.to_string())?.value;
            worst_method = worst_method.max(rel_diff(est, exact));
        }
    }

    let nets = RandomNetConfig::default()
        .generate_many(OPERATORS)
        .map_err(|e| e.to_string())?;
    let mut worst_dft = 0.0f64;
    let mut worst_parseval = 0.0f64;
    for net in &nets {
        let (s, i) = (NodeId::new(0), NodeId::new(net.n() - 1));
        let total = resolvent(net)[(i.index(), s.index())];
        let mut k_max = 256;
        let m = loop {
            let m = markov_dense(net, s, i, k_max);
            if total - m.iter().sum::<f64>() < 1e-13 || k_max >= 1 << 16 {
                break m;
            }
            k_max *= 2;
        };
        for w in [-3.0, -0.7, 0.0, 0.25, 1.3, PI] {
            let dft: Complex64 = m
                .iter()
                .enumerate()
                .map(|(k, &v)| v * Complex64::from_polar(1.0, -w * (k + 1) as f64))
                .sum();
            let h = frequency_response(net, s, i, w)
                .map_err(|e| e.to_string())?
                .value;
            worst_dft = worst_dft.max((h - dft).norm());
        }
        let u: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let trace = simulate(
            net,
            &BTreeMap::from([(s, InputSignal::custom(u.clone()))]),
            u.len() + m.len(),
        )
        .map_err(|e| e.to_string())?;
        let time: f64 = trace.node(i).iter().map(|v| v * v).sum();
        let u_hat = |w: f64| -> Complex64 {
            u.iter()
                .enumerate()
                .map(|(k, &v)| v * Complex64::from_polar(1.0, -w * k as f64))
                .sum()
        };
        let (integral, _) = adaptive_simpson(
            |w| frequency_response(net, s, i, w).map(|h| h.value.norm_sqr() * u_hat(w).norm_sqr()),
            0.0,
            PI,
            1e-12,
        )
        .map_err(|e| e.to_string())?;
        worst_parseval = worst_parseval.max(rel_diff(time, integral / PI));
    }
    let detail = format!(
        "power vs closed forms {worst_method:.2e} (tol {METHOD_TOL:.0e}), solve vs DFT {worst_dft:.2e} (tol {DFT_TOL:.0e}), \
         Parseval {worst_parseval:.2e} (tol {PARSEVAL_TOL:.0e})"
    );
    if worst_method > METHOD_TOL || worst_dft > DFT_TOL || worst_parseval > PARSEVAL_TOL {
        return Err(detail);
    }
    Ok(detail)
}

fn criterion_7() -> Outcome {
    let mut nets = vec![Network::nine_node_example()];
    nets.extend(
        RandomNetConfig::default()
            .generate_many(PROPSTAB_NETS)
            .map_err(|e| e.to_string())?,
    );
    let (mut cases, mut violations, mut errors) = (0, 0, 0);
    for (k, net) in nets.iter().enumerate() {
        let query = PropagationStabilityQuery::sampled(
            PNorm::TWO,
            PNorm::TWO,
            PROPSTAB_INPUTS,
            PROPSTAB_HORIZON,
            SUITE_SEED + k as u64,
        );
        let report = check_propagation_stability(net, &query).map_err(|e| e.to_string())?;
        cases += report.cases_run;
        violations += report.violations.len();
        errors += report.errors.len();
    }
    let detail = format!(
        "example + {PROPSTAB_NETS} random nets, p=t=2, {PROPSTAB_INPUTS} inputs each: {cases} cases, {violations} violations, {errors} errors"
    );
    if violations > 0 || errors > 0 || cases == 0 {
        return Err(detail);
    }
    Ok(detail)
}

fn criterion_8() -> Outcome {
    let net = Network::nine_node_example();
    let queries = [
        (
            "transient impulse",
            SnrQuery::transient(PNorm::TWO, InputSignal::impulse(), 200, 1.0),
        ),
        (
            "persistent flat [0.1, 1.0]",
            Spectrum::flat(0.1, 1.0, 1.0).and_then(|s| SnrQuery::persistent(s, None, 1.0)),
        ),
    ];
    let mut parts = Vec::new();
    let mut failed = false;
    for (name, query) in queries {
        let snr =
            snr_all(&net, id(1), &query.map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let shell = [4, 5, 6].iter().map(|&l| snr[l - 1]).fold(0.0, f64::max);
        failed |= snr[8] > shell;
        parts.push(format!(
            "{name}: node 9 {:.4e} vs cutset max {shell:.4e}",
            snr[8]
        ));
    }
    let detail = parts.join("; ");
    if failed {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("infinite-horizon l1/l_inf table", criterion_1),
        ("l2 column", criterion_2),
        ("per-node l1 pattern", criterion_3),
        ("cutset stacking matrix", criterion_4),
        ("randomized inequality suites", criterion_5),
        ("cross-method consistency", criterion_6),
        ("propagation stability", criterion_7),
        ("SNR corollaries", criterion_8),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} ({name}): PASS ({detail})", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} ({name}): FAIL ({detail})", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
